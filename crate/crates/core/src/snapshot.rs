//! Binary restart snapshots.
//!
//! Layout: the magic `DGPCSNAP`, a `u32` format version, then
//! length-prefixed little-endian fields, closed by a 64-bit FNV-1a checksum
//! of everything before it. Floats are stored bit-exactly, so a resumed run
//! reproduces the uninterrupted one and re-encoding a decoded snapshot
//! gives identical bytes.

use std::path::Path;

use nalgebra::DMatrix;

use crate::basis::{ChaosBasis, TripleTensor};
use crate::dgpc::RestartState;
use crate::error::{DgpcError, Result};
use crate::multiindex::{build_sparse_set, MultiIndex, SparseIndex};
use crate::pce::PCExpansion;
use crate::sampling::SampleEnsemble;

pub const MAGIC: &[u8; 8] = b"DGPCSNAP";
pub const VERSION: u32 = 1;

/// Upper bound on any stored length; rejects absurd sizes from corrupt
/// headers before allocating.
const MAX_LEN: u64 = 1 << 34;

/// A restart state with the resolved configuration that produced it.
#[derive(Clone, Debug)]
pub struct Snapshot {
    /// Resolved run configuration as TOML.
    pub config: String,
    pub state: RestartState,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, v: &[u8]) {
        self.usize(v.len());
        self.0.extend_from_slice(v);
    }
    fn f64s(&mut self, v: &[f64]) {
        self.usize(v.len());
        for &x in v {
            self.f64(x);
        }
    }
    fn opt_bytes(&mut self, v: Option<&[u8]>) {
        match v {
            Some(b) => {
                self.u8(1);
                self.bytes(b);
            }
            None => self.u8(0),
        }
    }
    fn pce(&mut self, p: &PCExpansion) {
        self.usize(p.n_terms());
        self.usize(p.n_comps());
        self.usize(p.n_points());
        self.f64(p.time());
        self.f64s(p.data());
    }
    fn opt_pce(&mut self, p: Option<&PCExpansion>) {
        match p {
            Some(p) => {
                self.u8(1);
                self.pce(p);
            }
            None => self.u8(0),
        }
    }
    fn ensemble(&mut self, e: &SampleEnsemble) {
        self.usize(e.n_samples());
        self.usize(e.dim());
        self.usize(e.generation());
        self.u64(e.seed());
        self.f64s(e.values());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn corrupt(what: impl Into<String>) -> DgpcError {
    DgpcError::Snapshot(what.into())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| corrupt("snapshot is truncated"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        if v > MAX_LEN {
            return Err(corrupt(format!("implausible stored length {v}")));
        }
        Ok(v as usize)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
    fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.usize()?;
        self.take(n)
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.usize()?;
        let raw = self.take(n.checked_mul(8).ok_or_else(|| corrupt("length overflow"))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
    fn flag(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(corrupt(format!("invalid option flag {b}"))),
        }
    }
    fn opt_bytes(&mut self) -> Result<Option<Vec<u8>>> {
        Ok(if self.flag()? {
            Some(self.bytes()?.to_vec())
        } else {
            None
        })
    }
    fn pce(&mut self) -> Result<PCExpansion> {
        let (t, c, p) = (self.usize()?, self.usize()?, self.usize()?);
        let time = self.f64()?;
        let data = self.f64s()?;
        PCExpansion::from_data(t, c, p, data, time).map_err(|e| corrupt(e.to_string()))
    }
    fn opt_pce(&mut self) -> Result<Option<PCExpansion>> {
        Ok(if self.flag()? {
            Some(self.pce()?)
        } else {
            None
        })
    }
    fn ensemble(&mut self) -> Result<SampleEnsemble> {
        let (s, d, g) = (self.usize()?, self.usize()?, self.usize()?);
        let seed = self.u64()?;
        let values = self.f64s()?;
        SampleEnsemble::new(values, s, d, g, seed).map_err(|e| corrupt(e.to_string()))
    }
}

/// Serializes a snapshot.
pub fn encode(config: &str, st: &RestartState) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.bytes(config.as_bytes());
    w.usize(st.interval);
    w.f64(st.time);
    w.f64(st.next_dt);

    let set = st.basis.set();
    w.usize(set.n_forcing());
    w.usize(set.n_modes());
    w.usize(set.max_degree());
    let sparse = set.sparse();
    w.bytes(&sparse.caps);
    w.opt_bytes(sparse.caps2.as_deref());
    w.opt_bytes(sparse.caps_high.as_deref());
    w.usize(set.len());
    for m in set.iter() {
        w.0.extend_from_slice(m.exponents());
    }
    w.f64s(st.basis.coefficients().as_slice());
    w.f64s(st.basis.triple().dense());
    w.usize(st.basis.forcing().len());
    for f in st.basis.forcing() {
        w.f64s(f);
    }
    w.f64(st.basis.jitter());

    w.pce(&st.solution);
    w.opt_pce(st.parameter.as_ref());
    w.opt_pce(st.viscosity.as_ref());
    w.ensemble(&st.ensemble);
    match &st.validation {
        Some(v) => {
            w.u8(1);
            w.ensemble(v);
        }
        None => w.u8(0),
    }
    let sum = fnv1a(&w.0);
    w.u64(sum);
    w.0
}

/// Parses a snapshot, rejecting wrong magic, other versions, truncation and
/// checksum mismatches.
pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < MAGIC.len() + 4 + 8 {
        return Err(corrupt("snapshot is truncated"));
    }
    if &bytes[..8] != MAGIC {
        return Err(corrupt("not a snapshot file (bad magic)"));
    }
    let mut r = Reader { buf: bytes, pos: 8 };
    let version = r.u32()?;
    if version != VERSION {
        return Err(corrupt(format!(
            "snapshot format version {version} is not supported (expected {VERSION})"
        )));
    }
    let body_end = bytes.len() - 8;
    let stored = u64::from_le_bytes(bytes[body_end..].try_into().expect("8 bytes"));
    if fnv1a(&bytes[..body_end]) != stored {
        return Err(corrupt(
            "checksum mismatch; snapshot is corrupt or truncated",
        ));
    }
    r.buf = &bytes[..body_end];

    let config = String::from_utf8(r.bytes()?.to_vec())
        .map_err(|_| corrupt("configuration is not UTF-8"))?;
    let interval = r.usize()?;
    let time = r.f64()?;
    let next_dt = r.f64()?;

    let k = r.usize()?;
    let d = r.usize()?;
    let degree = r.usize()?;
    let nvars = k + d;
    let sparse = SparseIndex {
        caps: r.bytes()?.to_vec(),
        caps2: r.opt_bytes()?,
        caps_high: r.opt_bytes()?,
    };
    let n = r.usize()?;
    let flat = r.take(
        n.checked_mul(nvars)
            .ok_or_else(|| corrupt("length overflow"))?,
    )?;
    let stored: Vec<MultiIndex> = flat
        .chunks(nvars.max(1))
        .take(n)
        .map(|c| MultiIndex::new(c.to_vec()))
        .collect();
    let set =
        build_sparse_set(k, d, degree, &sparse).map_err(|e| corrupt(format!("index set: {e}")))?;
    if set.indices() != stored.as_slice() {
        return Err(corrupt("stored multi-indices do not match the stored caps"));
    }
    let a = r.f64s()?;
    if a.len() != n * n {
        return Err(corrupt("basis coefficient matrix has the wrong size"));
    }
    let a = DMatrix::from_vec(n, n, a);
    let triple = TripleTensor::from_dense(n, r.f64s()?).map_err(|e| corrupt(e.to_string()))?;
    let nf = r.usize()?;
    if nf != k {
        return Err(corrupt(
            "forcing projections do not match the forcing count",
        ));
    }
    let forcing = (0..nf).map(|_| r.f64s()).collect::<Result<Vec<_>>>()?;
    if forcing.iter().any(|f| f.len() != n) {
        return Err(corrupt("forcing projection has the wrong length"));
    }
    let jitter = r.f64()?;
    let basis = ChaosBasis::from_parts(set, a, triple, forcing, jitter);

    let solution = r.pce()?;
    let parameter = r.opt_pce()?;
    let viscosity = r.opt_pce()?;
    let ensemble = r.ensemble()?;
    let validation = if r.flag()? { Some(r.ensemble()?) } else { None };
    if r.pos != r.buf.len() {
        return Err(corrupt("trailing bytes after snapshot body"));
    }
    for p in std::iter::once(&solution)
        .chain(parameter.iter())
        .chain(viscosity.iter())
    {
        if p.n_terms() != n {
            return Err(corrupt("expansion term count differs from the basis"));
        }
    }
    if ensemble.dim() != d {
        return Err(corrupt("ensemble dimension differs from the basis"));
    }
    Ok(Snapshot {
        config,
        state: RestartState {
            interval,
            time,
            next_dt,
            basis,
            solution,
            parameter,
            viscosity,
            ensemble,
            validation,
        },
    })
}

/// Writes atomically through a temporary sibling file.
pub fn write_snapshot(path: &Path, config: &str, st: &RestartState) -> Result<()> {
    let bytes = encode(config, st);
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = std::fs::read(path)
        .map_err(|e| DgpcError::Snapshot(format!("reading {}: {e}", path.display())))?;
    decode(&bytes)
}
