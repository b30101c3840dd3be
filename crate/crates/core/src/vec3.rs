//! Small fixed-size vector helpers shared by the spectral code.

use num_complex::Complex64;

pub type Vec3 = [f64; 3];
pub type CVec3 = [Complex64; 3];

pub const CZERO3: CVec3 = [Complex64::new(0.0, 0.0); 3];

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn to_f64(k: &[i32; 3]) -> Vec3 {
    [k[0] as f64, k[1] as f64, k[2] as f64]
}

#[inline]
pub fn norm2_i(k: &[i32; 3]) -> i64 {
    let [a, b, c] = k.map(i64::from);
    a * a + b * b + c * c
}

/// Real vector dotted with a complex vector.
#[inline]
pub fn rdot(a: &Vec3, c: &CVec3) -> Complex64 {
    c[0] * a[0] + c[1] * a[1] + c[2] * a[2]
}

/// Real vector crossed with a complex vector.
#[inline]
pub fn rcross(a: &Vec3, c: &CVec3) -> CVec3 {
    [
        c[2] * a[1] - c[1] * a[2],
        c[0] * a[2] - c[2] * a[0],
        c[1] * a[0] - c[0] * a[1],
    ]
}

#[inline]
pub fn cnorm2(c: &CVec3) -> f64 {
    c[0].norm_sqr() + c[1].norm_sqr() + c[2].norm_sqr()
}

/// Hermitian product `a · conj(b)`.
#[inline]
pub fn cdot_conj(a: &CVec3, b: &CVec3) -> Complex64 {
    a[0] * b[0].conj() + a[1] * b[1].conj() + a[2] * b[2].conj()
}

#[inline]
pub fn cconj(c: &CVec3) -> CVec3 {
    [c[0].conj(), c[1].conj(), c[2].conj()]
}

pub type Mat3 = [[f64; 3]; 3];

#[inline]
pub fn mat_apply(m: &Mat3, c: &CVec3) -> CVec3 {
    [
        c[0] * m[0][0] + c[1] * m[0][1] + c[2] * m[0][2],
        c[0] * m[1][0] + c[1] * m[1][1] + c[2] * m[1][2],
        c[0] * m[2][0] + c[1] * m[2][1] + c[2] * m[2][2],
    ]
}
