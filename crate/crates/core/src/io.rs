//! Output formats: CSV tables, the run manifest, and binary spectral snapshots.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{SpectralField, State};
use crate::integrator::{DiagnosticsRecord, EnergyTerms, Trajectory};
use crate::lattice::Lattice;

/// One CSV cell. Floats use the shortest round-trip representation so that
/// identical runs produce identical bytes.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => format!("{x:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| &r[j]).collect())
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        // Writing into a Vec cannot fail.
        w.write_record(&self.header).expect("in-memory csv");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory csv");
        }
        w.into_inner().expect("in-memory csv")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_csv_bytes())
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub seed_schedule: SeedSchedule,
    pub constants: serde_json::Map<String, serde_json::Value>,
    pub theta_support: serde_json::Value,
    pub steps: u64,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
}

/// Path `p` of a run with base seed `s` draws its increments from the stream
/// keyed by `(s, p)`; fine step `n` is counter position `n` in that stream.
#[derive(Clone, Debug, Serialize)]
pub struct SeedSchedule {
    pub base_seed: u64,
    pub paths: u64,
    pub rng: String,
}

impl SeedSchedule {
    pub fn new(base_seed: u64, paths: u64) -> Self {
        Self {
            base_seed,
            paths,
            rng: "chacha8 keyed by (seed, path), stream = fine step index".into(),
        }
    }
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value, seed_schedule: SeedSchedule) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            seed_schedule,
            constants: Default::default(),
            theta_support: serde_json::Value::Null,
            steps: 0,
            wall_clock_seconds: 0.0,
            outputs: Vec::new(),
        }
    }

    pub fn constant(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.constants.insert(name.into(), v);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self).map_err(|e| Error::Snapshot(e.to_string()))?;
        bytes.push(b'\n');
        write_atomic(path, &bytes)
    }
}

pub fn diagnostics_table(traj: &Trajectory) -> Table {
    let mut t = Table::new(&DiagnosticsRecord::HEADER);
    for d in &traj.diagnostics {
        t.push(d.values().iter().map(|&x| x.into()).collect());
    }
    t
}

pub fn energy_table(traj: &Trajectory) -> Table {
    let mut t = Table::new(&EnergyTerms::HEADER);
    for (d, e) in traj.diagnostics.iter().zip(&traj.energy) {
        t.push(vec![
            d.t.into(),
            e.delta_energy.into(),
            e.martingale.into(),
            e.quadratic.into(),
            e.linear.into(),
            e.nonlinear.into(),
            e.corrector.into(),
            e.residual.into(),
        ]);
    }
    t
}

const MAGIC: &[u8; 4] = b"VNSF";
const VERSION: u32 = 1;

/// Snapshot layout, little endian: `"VNSF"`, `u32` version, `u32` radius,
/// `u64` mode count, then per mode `3 × i32` wavevector followed by
/// `3 × (f64 re, f64 im)`. A state is two such records, `ξ` then `η`.
pub fn encode_field(field: &SpectralField, out: &mut Vec<u8>) {
    let lat = field.lattice();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&lat.radius().to_le_bytes());
    out.extend_from_slice(&(lat.len() as u64).to_le_bytes());
    for (k, c) in lat.modes().iter().zip(field.coeffs()) {
        for x in k {
            out.extend_from_slice(&x.to_le_bytes());
        }
        for z in c {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Snapshot(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(slice.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

fn decode_field(cur: &mut Cursor<'_>, lattice: Option<&Arc<Lattice>>) -> Result<SpectralField> {
    if &cur.take::<4>()? != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let radius = cur.u32()?;
    let lattice = match lattice {
        Some(l) if l.radius() == radius => l.clone(),
        Some(l) => {
            return Err(Error::Snapshot(format!(
                "component radius {radius} differs from {}",
                l.radius()
            )))
        }
        None => Arc::new(Lattice::new(radius).map_err(|e| Error::Snapshot(e.to_string()))?),
    };
    let count = cur.u64()?;
    if count != lattice.len() as u64 {
        return Err(Error::Snapshot(format!(
            "{count} modes recorded, lattice of radius {radius} has {}",
            lattice.len()
        )));
    }
    let mut coeffs = vec![[Complex64::new(0.0, 0.0); 3]; lattice.len()];
    let mut seen = vec![false; lattice.len()];
    for _ in 0..count {
        let k = [cur.i32()?, cur.i32()?, cur.i32()?];
        let i = lattice
            .index_of(k)
            .ok_or_else(|| Error::Snapshot(format!("mode {k:?} outside the lattice")))?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::Snapshot(format!("mode {k:?} repeated")));
        }
        for z in coeffs[i].iter_mut() {
            *z = Complex64::new(cur.f64()?, cur.f64()?);
        }
    }
    SpectralField::from_coeffs(lattice, coeffs).map_err(|e| Error::Snapshot(e.to_string()))
}

pub fn encode_state(state: &State) -> Vec<u8> {
    let mut out = Vec::new();
    encode_field(&state.xi, &mut out);
    encode_field(&state.eta, &mut out);
    out
}

pub fn decode_state(bytes: &[u8]) -> Result<State> {
    let mut cur = Cursor { bytes, pos: 0 };
    let xi = decode_field(&mut cur, None)?;
    let eta = decode_field(&mut cur, Some(xi.lattice()))?;
    if cur.pos != bytes.len() {
        return Err(Error::Snapshot(format!("{} trailing bytes", bytes.len() - cur.pos)));
    }
    State::new(xi, eta).map_err(|e| Error::Snapshot(e.to_string()))
}

pub fn write_snapshot(path: &Path, state: &State) -> Result<()> {
    write_atomic(path, &encode_state(state))
}

pub fn read_snapshot(path: &Path) -> Result<State> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_state(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::InitialData;

    #[test]
    fn csv_bytes_are_stable() {
        let mut t = Table::new(&["t", "n", "label"]);
        t.push(vec![0.1.into(), 3u32.into(), "a".into()]);
        t.push(vec![1e-20.into(), 4u32.into(), "b,c".into()]);
        let s = String::from_utf8(t.to_csv_bytes()).unwrap();
        assert_eq!(s, "t,n,label\n0.1,3,a\n1e-20,4,\"b,c\"\n");
    }

    #[test]
    fn snapshot_round_trip() {
        let lat = Arc::new(Lattice::new(3).unwrap());
        let phi = InitialData::Random { seed: 5, radius: 3, decay: 1.0 }.build(&lat, 2.0).unwrap();
        let back = decode_state(&encode_state(&phi)).unwrap();
        assert_eq!(back.max_diff(&phi), 0.0);
        assert_eq!(back.lattice().radius(), 3);
    }

    #[test]
    fn snapshot_rejects_corruption() {
        let lat = Arc::new(Lattice::new(2).unwrap());
        let phi = InitialData::TaylorGreen.build(&lat, 1.0).unwrap();
        let bytes = encode_state(&phi);
        assert!(matches!(decode_state(&bytes[..bytes.len() - 1]), Err(Error::Snapshot(_))));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_state(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(decode_state(&extra).is_err());
    }

    #[test]
    fn atomic_write_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.csv");
        let mut t = Table::new(&["x"]);
        t.push(vec![1.0.into()]);
        t.write_csv(&p).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "x\n1.0\n");
        assert!(!dir.path().join("sub/out.csv.tmp").exists());
    }
}
