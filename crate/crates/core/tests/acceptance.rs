//! Headline acceptance criteria. Each check prints one `PASS`/`FAIL` line;
//! the test fails if any of them fails.
//!
//! ```bash
//! cargo test --release --test acceptance -- --nocapture
//! ```

use std::fs;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use vortexnoise::corrector::angular_integral_check;
use vortexnoise::experiments::corrector_study::default_test_field;
use vortexnoise::experiments::decay::decay_bound;
use vortexnoise::experiments::energy::transport_cancellation;
use vortexnoise::experiments::{
    calibrate_nu1, run_corrector_study, run_decay_check, run_energy_identity_check, run_scaling_limit,
};
use vortexnoise::field::random_solenoidal;
use vortexnoise::integrator::{InitialData, RunConfig};
use vortexnoise::lattice::{frame_vectors, Half};
use vortexnoise::noise::{BrownianDriver, ThetaSequence};
use vortexnoise::{Lattice, SpectralField};

const EXACT: f64 = 1e-10;
const RAYLEIGH_REL: f64 = 0.15;
const SIN4_REL: f64 = 0.05;
const SIGMAS: f64 = 3.0;
const NOISE_DRAWS: u64 = 100_000;
const ENERGY_RATIO: (f64, f64) = (2.0, 0.30);
const DECAY_RUNTIME_S: f64 = 60.0;
const SCALING_PATHS: u64 = 100;
const SCALING_MIN_P2: f64 = 0.3;
const SPECTRAL_CASES: u64 = 100;

struct Report {
    failures: Vec<&'static str>,
}

impl Report {
    fn check(&mut self, name: &'static str, ok: bool, detail: String) {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures.push(name);
        }
    }
}

fn corrector_limit(r: &mut Report) {
    let v = default_test_field().unwrap();
    let study = run_corrector_study(1.0, 1.0, &[2, 4, 8], &v).unwrap();
    let errs: Vec<f64> = study.rows.iter().map(|x| x.rel_error).collect();
    let rq = study.rows.last().unwrap().rayleigh_s;
    let ok = study.errors_decrease() && (rq - 0.6).abs() <= RAYLEIGH_REL * 0.6;
    r.check("corrector limit", ok, format!("rel errors {errs:.4?}, Rayleigh quotient at N=8 {rq:.4} (target 0.6)"));
}

fn angular_integral(r: &mut Report) {
    let exact = 8.0 / 15.0;
    let quad = angular_integral_check();
    let sin4 = ThetaSequence::shell(8, 1.0)
        .map(|t| vortexnoise::corrector::shell_sin4_average(&t, [1.0, 0.0, 0.0]))
        .unwrap();
    let ok = (quad - exact).abs() <= EXACT && (sin4 - exact).abs() <= SIN4_REL * exact;
    r.check("angular integral", ok, format!("quadrature {quad:.12}, shell average at N=8 {sin4:.5}"));
}

fn noise_statistics(r: &mut Report) {
    let dt = 1e-3;
    let theta = ThetaSequence::shell(1, 1.0).unwrap();
    let lat = theta.lattice().clone();
    let driver = BrownianDriver::new(&theta, 2024, 0, dt).unwrap();
    let slots: Vec<(usize, usize)> = theta
        .support()
        .iter()
        .filter(|&&i| lat.half(i) == Half::Plus)
        .take(6)
        .flat_map(|&i| [(i, 0), (i, 1)])
        .collect();
    let m = slots.len();
    let (mut s1, mut s2) = (vec![0.0; m], vec![0.0; m]);
    let mut cross = vec![vec![Complex64::new(0.0, 0.0); m]; m];
    for step in 0..NOISE_DRAWS {
        let incs = driver.sample(step);
        let w: Vec<Complex64> = slots.iter().map(|&(i, a)| incs.values[i][a] / dt.sqrt()).collect();
        for a in 0..m {
            let q = w[a].norm_sqr();
            s1[a] += q;
            s2[a] += q * q;
            for b in a + 1..m {
                cross[a][b] += w[a] * w[b].conj();
            }
        }
    }
    let n = NOISE_DRAWS as f64;
    let worst_mean = (0..m)
        .map(|a| {
            let mu = s1[a] / n;
            (mu - 2.0).abs() / ((s2[a] / n - mu * mu) / n).sqrt()
        })
        .fold(0.0, f64::max);
    let se = (2.0 / n).sqrt();
    let worst_cross = (0..m)
        .flat_map(|a| (a + 1..m).map(move |b| (a, b)))
        .map(|(a, b)| {
            let c = cross[a][b] / n;
            c.re.abs().max(c.im.abs()) / se
        })
        .fold(0.0, f64::max);
    let ok = worst_mean <= SIGMAS && worst_cross <= SIGMAS;
    r.check(
        "noise statistics",
        ok,
        format!("{m} slots x {NOISE_DRAWS} draws, worst |mean-2|/se {worst_mean:.2}, worst cross z {worst_cross:.2}"),
    );
}

fn energy_identity(r: &mut Report) {
    let cfg = RunConfig {
        galerkin_radius: 8,
        nu: 1.0,
        dt: 1e-4,
        t_end: 0.01,
        ..Default::default()
    };
    let lat = Arc::new(Lattice::new(8).unwrap());
    let phi0 = InitialData::TaylorGreen.build(&lat, 1.0).unwrap();
    let rep = run_energy_identity_check(&cfg, &phi0, 0).unwrap();
    let ratio_ok = (rep.refinement_ratio - ENERGY_RATIO.0).abs() <= ENERGY_RATIO.1 * ENERGY_RATIO.0;

    let mut worst = 0.0f64;
    for seed in 0..4 {
        let phi = InitialData::Random { seed, radius: 8, decay: 1.0 }.build(&lat, 1.0).unwrap();
        worst = worst.max(transport_cancellation(&cfg, &phi).unwrap());
    }
    r.check(
        "energy identity",
        ratio_ok && worst <= EXACT,
        format!(
            "residual ratio {:.3} (dt {:.0e} vs {:.0e}), worst transport exchange {worst:.2e}",
            rep.refinement_ratio, rep.dt[0], rep.dt[1]
        ),
    );
}

fn decay(r: &mut Report) {
    let start = Instant::now();
    let cfg = RunConfig {
        galerkin_radius: 8,
        dt: 1e-3,
        t_end: 1.0,
        ..Default::default()
    };
    let cal = calibrate_nu1(&cfg, &InitialData::library(), 1.0, 1.0).unwrap();
    let rep = run_decay_check(&cfg, &InitialData::TaylorGreen, 1.0, cal.nu1).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let end = *rep.norms.last().unwrap();
    let ok = cal.nu1.is_finite() && rep.holds() && secs < DECAY_RUNTIME_S;
    r.check(
        "decay bound",
        ok,
        format!(
            "calibrated nu1 {:.3} in {} runs, |Phi(1)| {end:.3e} vs bound {:.3e}, {secs:.1}s",
            cal.nu1,
            cal.runs,
            decay_bound(1.0, cal.nu1, 1.0)
        ),
    );
}

fn scaling_limit(r: &mut Report) {
    let k = 1.0;
    let cfg = RunConfig {
        galerkin_radius: 8,
        nu: 1.0,
        dt: 2e-3,
        t_end: 0.1,
        cutoff_radius: 2f64.powf(0.25) * k + 1.0,
        ..Default::default()
    };
    let lat = Arc::new(Lattice::new(8).unwrap());
    let phi0 = InitialData::TaylorGreen.build(&lat, k).unwrap();
    let res = run_scaling_limit(&cfg, &phi0, &[2, 4, 8], SCALING_PATHS, None, 0.9).unwrap();
    let p: Vec<f64> = res.rows.iter().map(|x| x.p_hat).collect();
    let ok = p[0] >= SCALING_MIN_P2 && res.non_increasing_within_bands();
    r.check("scaling limit", ok, format!("epsilon {:.3e}, p_hat at N=2,4,8 {p:?}", res.epsilon));
}

fn determinism(r: &mut Report) {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[model]\ngalerkin_radius = 4\n[noise]\nshells = [1, 2]\n[time]\ndt = 2e-3\nt_end = 0.02\n[run]\npaths = 4\n")
        .unwrap();
    let mut same = true;
    let mut files = 0;
    for cmd in ["simulate", "scaling-limit"] {
        let mut outs = Vec::new();
        for run in 0..2 {
            let dir = tmp.path().join(format!("{cmd}{run}"));
            let code = Command::new(env!("CARGO_BIN_EXE_vortexnoise"))
                .args(["--quiet", "--seed", "11", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), cmd])
                .status()
                .unwrap()
                .code();
            same &= matches!(code, Some(0) | Some(1));
            let mut csvs: Vec<_> = fs::read_dir(&dir)
                .unwrap()
                .map(|e| e.unwrap().path())
                .filter(|p| p.extension().is_some_and(|e| e == "csv"))
                .map(|p| (p.clone(), fs::read(&p).unwrap()))
                .map(|(p, b)| (p.file_name().unwrap().to_owned(), b))
                .collect();
            csvs.sort();
            outs.push(csvs);
        }
        files += outs[0].len();
        same &= !outs[0].is_empty() && outs[0] == outs[1];
    }
    r.check("determinism", same, format!("{files} CSV files compared byte for byte"));
}

fn random_real(lat: &Arc<Lattice>, rng: &mut ChaCha8Rng) -> SpectralField {
    let mut c = vec![[Complex64::new(0.0, 0.0); 3]; lat.len()];
    for i in lat.positive_half() {
        let v: [Complex64; 3] = std::array::from_fn(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        c[i] = v;
        c[lat.neg(i)] = v.map(|z| z.conj());
    }
    SpectralField::from_coeffs(lat.clone(), c).unwrap()
}

fn spectral_core(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let rel = |a: &SpectralField, b: &SpectralField| a.sub(b).l2_norm() / b.l2_norm().max(1e-300);
    let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let mut worst = [0.0f64; 4];
    for case in 0..SPECTRAL_CASES {
        let lat = Arc::new(Lattice::new(1 + (case % 5) as u32).unwrap());
        let v = random_real(&lat, &mut rng);
        let p = v.leray_project();
        worst[0] = worst[0].max(rel(&p.leray_project(), &p));
        let u = random_solenoidal(lat.clone(), &mut rng, 1.0);
        worst[1] = worst[1].max(rel(&u.curl().biot_savart().unwrap(), &u));
        worst[2] = worst[2].max(p.curl().reality_defect() / v.max_abs());
        let k: [i32; 3] = loop {
            let k = std::array::from_fn(|_| rng.random_range(-9..=9));
            if k != [0, 0, 0] {
                break k;
            }
        };
        let x: [f64; 3] = std::array::from_fn(|_| rng.random_range(-5.0..5.0));
        let y: [f64; 3] = std::array::from_fn(|_| rng.random_range(-5.0..5.0));
        let (a1, a2) = frame_vectors(k).unwrap();
        let kf = k.map(f64::from);
        let expect = dot(&x, &y) - dot(&kf, &x) * dot(&kf, &y) / dot(&kf, &kf);
        let sum = dot(&a1, &x) * dot(&a1, &y) + dot(&a2, &x) * dot(&a2, &y);
        worst[3] = worst[3].max((sum - expect).abs() / (1.0 + expect.abs()));
    }
    let ok = worst.iter().all(|&w| w <= EXACT);
    r.check(
        "spectral core",
        ok,
        format!(
            "{SPECTRAL_CASES} cases: idempotence {:.1e}, curl inversion {:.1e}, reality {:.1e}, frame sum {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    );
}

#[test]
fn acceptance() {
    let mut r = Report { failures: Vec::new() };
    corrector_limit(&mut r);
    angular_integral(&mut r);
    noise_statistics(&mut r);
    energy_identity(&mut r);
    decay(&mut r);
    scaling_limit(&mut r);
    determinism(&mut r);
    spectral_core(&mut r);
    assert!(r.failures.is_empty(), "failed: {:?}", r.failures);
}
