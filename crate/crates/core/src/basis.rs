//! Orthonormal polynomial bases of arbitrary product measures built from
//! moments, and the triple-product tensors used for Galerkin projection.
//!
//! Variables are split into a Gaussian block (the first `K` forcing
//! variables, whose moments are analytic) and a second block whose joint
//! moments are supplied as a table, either estimated from samples or
//! computed analytically. The two blocks are independent, so every joint
//! moment factors into a Gaussian part and a second-block part.

use std::collections::{HashMap, HashSet};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{DgpcError, Result};
use crate::multiindex::{MultiIndex, MultiIndexSet};
use crate::sampling::SampleEnsemble;

/// Relative threshold below which triple-product entries are discarded.
pub const TRIPLE_DROP_TOL: f64 = 1e-12;

const JITTER_LEVELS: [f64; 7] = [1e-14, 1e-13, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8];

/// `E[X^n]` for a standard normal `X`: zero for odd `n`, `(n-1)!!` otherwise.
pub fn gaussian_moment(n: u32) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    let mut acc = 1.0;
    let mut k = n as i64 - 1;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// `E[U^n]` for `U ~ U(-1, 1)`.
pub fn uniform_moment(n: u32) -> f64 {
    if n % 2 == 1 {
        0.0
    } else {
        1.0 / (n as f64 + 1.0)
    }
}

/// Moments of the non-Gaussian block, keyed by that block's exponents.
pub type BlockMoments = HashMap<Vec<u8>, f64>;

/// Distinct second-block exponent patterns of the members of `closure`.
pub fn block_patterns(closure: &MultiIndexSet) -> Vec<Vec<u8>> {
    let k = closure.n_forcing();
    let n = closure.nvars();
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut out = Vec::new();
    for m in closure.iter() {
        let p = m.block(k..n).to_vec();
        if seen.insert(p.clone()) {
            out.push(p);
        }
    }
    out
}

/// Sample averages of the monomials `eta^pattern` over the ensemble.
pub fn empirical_moments(samples: &SampleEnsemble, patterns: &[Vec<u8>]) -> Result<BlockMoments> {
    let s = samples.n_samples();
    let d = samples.dim();
    if s == 0 {
        return Err(DgpcError::usage("empirical moments of an empty ensemble"));
    }
    if let Some(p) = patterns.iter().find(|p| p.len() != d) {
        return Err(DgpcError::usage(format!(
            "moment pattern of length {} for an ensemble of dimension {d}",
            p.len()
        )));
    }
    let max_exp = patterns
        .iter()
        .flat_map(|p| p.iter().copied())
        .max()
        .unwrap_or(0) as usize;
    // sparse form of each pattern: (variable, exponent)
    let sparse: Vec<Vec<(usize, usize)>> = patterns
        .iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| (i, e as usize))
                .collect()
        })
        .collect();
    let np = patterns.len();

    const CHUNK: usize = 4096;
    let partials: Vec<Vec<f64>> = samples
        .values()
        .par_chunks(CHUNK * d.max(1))
        .map(|rows| {
            let mut acc = vec![0.0; np];
            let mut pows = vec![1.0; d * (max_exp + 1)];
            let nrows = if d == 0 { CHUNK.min(s) } else { rows.len() / d };
            for r in 0..nrows {
                for v in 0..d {
                    let x = rows[r * d + v];
                    let base = v * (max_exp + 1);
                    for e in 1..=max_exp {
                        pows[base + e] = pows[base + e - 1] * x;
                    }
                }
                for (a, sp) in acc.iter_mut().zip(&sparse) {
                    let mut m = 1.0;
                    for &(v, e) in sp {
                        m *= pows[v * (max_exp + 1) + e];
                    }
                    *a += m;
                }
            }
            acc
        })
        .collect();

    let mut totals = vec![0.0; np];
    for p in &partials {
        for (t, v) in totals.iter_mut().zip(p) {
            *t += v;
        }
    }
    let inv = 1.0 / s as f64;
    Ok(patterns
        .iter()
        .zip(totals)
        .map(|(p, t)| {
            let v = if p.iter().all(|&e| e == 0) {
                1.0
            } else {
                t * inv
            };
            (p.clone(), v)
        })
        .collect())
}

/// Moments of independent `U(-1, 1)` variables.
pub fn uniform_moments(patterns: &[Vec<u8>]) -> BlockMoments {
    patterns
        .iter()
        .map(|p| {
            let v = p.iter().map(|&e| uniform_moment(e as u32)).product();
            (p.clone(), v)
        })
        .collect()
}

/// Joint moments `E[(xi, eta)^alpha]` of a Gaussian block of `n_forcing`
/// variables and an independent second block.
#[derive(Clone, Debug)]
pub struct MomentTable {
    n_forcing: usize,
    block: BlockMoments,
}

impl MomentTable {
    /// Pure Gaussian measure in `n_forcing` variables.
    pub fn gaussian(n_forcing: usize) -> Self {
        let mut block = BlockMoments::new();
        block.insert(Vec::new(), 1.0);
        MomentTable { n_forcing, block }
    }

    pub fn n_forcing(&self) -> usize {
        self.n_forcing
    }

    pub fn block(&self) -> &BlockMoments {
        &self.block
    }

    pub fn get(&self, alpha: &MultiIndex) -> Result<f64> {
        self.get_exponents(alpha.exponents())
    }

    fn get_exponents(&self, e: &[u8]) -> Result<f64> {
        let (g, b) = e.split_at(self.n_forcing.min(e.len()));
        let mut gauss = 1.0;
        for &x in g {
            if x % 2 == 1 {
                return Ok(0.0);
            }
            gauss *= gaussian_moment(x as u32);
        }
        if b.iter().all(|&x| x == 0) {
            return Ok(gauss);
        }
        match self.block.get(b) {
            Some(v) => Ok(gauss * v),
            None => Err(DgpcError::internal(format!(
                "moment of block pattern {b:?} not available"
            ))),
        }
    }
}

/// Combines the analytic Gaussian part with block moments, checking that
/// every member of `closure` is covered.
pub fn assemble_moment_table(
    n_forcing: usize,
    block: BlockMoments,
    closure: &MultiIndexSet,
) -> Result<MomentTable> {
    let mut block = block;
    block.insert(vec![0; closure.nvars() - n_forcing], 1.0);
    let table = MomentTable { n_forcing, block };
    for m in closure.iter() {
        table.get(m)?;
    }
    Ok(table)
}

/// Gram matrix `H_kl = E[x^(alpha_k + alpha_l)]`.
pub fn build_gram(moments: &MomentTable, set: &MultiIndexSet) -> Result<DMatrix<f64>> {
    let n = set.len();
    let mut h = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in k..n {
            let v = moments.get(&set.get(k).add(set.get(l)))?;
            h[(k, l)] = v;
            h[(l, k)] = v;
        }
    }
    Ok(h)
}

/// Pivots at or below this fraction of their diagonal entry mark a monomial
/// that is linearly dependent on earlier ones under the measure.
const DEFLATION_TOL: f64 = 1e-9;

/// Upper Cholesky factor `R` with `H = R^T R` on the independent monomials.
/// A dependent monomial gets a zero row and is flagged in the returned mask;
/// a clearly negative pivot returns its index.
fn cholesky_upper(
    h: &DMatrix<f64>,
    shift: f64,
) -> std::result::Result<(DMatrix<f64>, Vec<bool>), usize> {
    let n = h.nrows();
    let mut r = DMatrix::<f64>::zeros(n, n);
    let mut dead = vec![false; n];
    for j in 0..n {
        let hjj = h[(j, j)] + shift;
        let mut d = hjj;
        for k in 0..j {
            d -= r[(k, j)] * r[(k, j)];
        }
        if !d.is_finite() {
            return Err(j);
        }
        let scale = hjj.abs().max(f64::MIN_POSITIVE);
        if j > 0 && d.abs() <= DEFLATION_TOL * scale {
            dead[j] = true;
            continue;
        }
        if d <= 0.0 {
            return Err(j);
        }
        let rjj = d.sqrt();
        r[(j, j)] = rjj;
        for i in j + 1..n {
            let mut s = h[(j, i)];
            for k in 0..j {
                s -= r[(k, j)] * r[(k, i)];
            }
            r[(j, i)] = s / rjj;
        }
    }
    Ok((r, dead))
}

/// Inverse of the independent part of `r`; columns and rows of dependent
/// monomials are zero.
fn invert_upper(r: &DMatrix<f64>, dead: &[bool]) -> DMatrix<f64> {
    let n = r.nrows();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for col in (0..n).filter(|&c| !dead[c]) {
        a[(col, col)] = 1.0 / r[(col, col)];
        for row in (0..col).rev().filter(|&r| !dead[r]) {
            let mut s = 0.0;
            for k in row + 1..=col {
                s += r[(row, k)] * a[(k, col)];
            }
            a[(row, col)] = -s / r[(row, row)];
        }
    }
    a
}

fn log_deflation(dead: &[bool], set: &MultiIndexSet) {
    let idx: Vec<String> = (0..dead.len())
        .filter(|&i| dead[i])
        .map(|i| format!("{:?}", set.get(i).exponents()))
        .collect();
    if !idx.is_empty() {
        log::warn!(
            "{} basis monomial(s) dependent under the measure and dropped: {}",
            idx.len(),
            idx.join(" ")
        );
    }
}

/// Orthonormalization coefficients: `T_l = sum_{k <= l} a[(k, l)] x^alpha_k`
/// is orthonormal under the moments encoded by `h`. A monomial that depends
/// linearly on its predecessors gets `T_l = 0`, which leaves the spanned
/// space unchanged. An indefinite matrix is retried with escalating diagonal
/// jitter; the returned value is the jitter used (zero when none was needed).
pub fn orthonormalize_with_jitter(
    h: &DMatrix<f64>,
    set: &MultiIndexSet,
) -> Result<(DMatrix<f64>, f64)> {
    if h.nrows() != set.len() || h.ncols() != set.len() {
        return Err(DgpcError::usage("Gram matrix does not match the index set"));
    }
    let mut last_pivot = match cholesky_upper(h, 0.0) {
        Ok((r, dead)) => {
            log_deflation(&dead, set);
            return Ok((invert_upper(&r, &dead), 0.0));
        }
        Err(p) => p,
    };
    let scale = h.trace() / h.nrows() as f64;
    for lambda in JITTER_LEVELS {
        let shift = lambda * scale;
        match cholesky_upper(h, shift) {
            Ok((r, dead)) => {
                log::warn!(
                    "Gram matrix regularized with diagonal jitter {shift:e} (breakdown at pivot {last_pivot})"
                );
                log_deflation(&dead, set);
                return Ok((invert_upper(&r, &dead), shift));
            }
            Err(p) => last_pivot = p,
        }
    }
    Err(DgpcError::DegenerateMeasure {
        pivot: last_pivot,
        index: format!("{:?}", set.get(last_pivot)),
    })
}

/// Orthonormalization coefficients, see [`orthonormalize_with_jitter`].
pub fn orthonormalize(h: &DMatrix<f64>, set: &MultiIndexSet) -> Result<DMatrix<f64>> {
    orthonormalize_with_jitter(h, set).map(|(a, _)| a)
}

/// Dense, exactly symmetric tensor of `E[T_a T_b T_c]` together with, for
/// every output index `c`, the list of nonzero `(a, b, value)` with `a <= b`.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleTensor {
    n: usize,
    dense: Vec<f64>,
    lists: Vec<Vec<(u32, u32, f64)>>,
}

impl TripleTensor {
    pub fn from_dense(n: usize, dense: Vec<f64>) -> Result<Self> {
        if dense.len() != n * n * n {
            return Err(DgpcError::usage("triple tensor has the wrong size"));
        }
        let mut lists = vec![Vec::new(); n];
        for (c, list) in lists.iter_mut().enumerate() {
            for a in 0..n {
                for b in a..n {
                    let v = dense[(a * n + b) * n + c];
                    if v != 0.0 {
                        list.push((a as u32, b as u32, v));
                    }
                }
            }
        }
        Ok(TripleTensor { n, dense, lists })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.dense[(a * self.n + b) * self.n + c]
    }

    pub fn dense(&self) -> &[f64] {
        &self.dense
    }

    /// Nonzero `(a, b, E[T_a T_b T_c])` with `a <= b`.
    pub fn entries(&self, c: usize) -> &[(u32, u32, f64)] {
        &self.lists[c]
    }

    pub fn nnz(&self) -> usize {
        self.lists.iter().map(Vec::len).sum()
    }
}

/// `E[T_a T_b T_c]` by contracting raw third moments with the
/// orthonormalization coefficients along each mode.
pub fn triple_products(
    a: &DMatrix<f64>,
    moments: &MomentTable,
    set: &MultiIndexSet,
) -> Result<TripleTensor> {
    let n = set.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(DgpcError::usage(
            "coefficient matrix does not match the index set",
        ));
    }
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;

    // raw moments E[x^(a_i + a_j + a_k)], filled symmetrically
    let mut m3 = vec![0.0; n * n * n];
    for i in 0..n {
        for j in i..n {
            let ij = set.get(i).add(set.get(j));
            for k in j..n {
                let v = moments.get(&ij.add(set.get(k)))?;
                for (p, q, r) in [
                    (i, j, k),
                    (i, k, j),
                    (j, i, k),
                    (j, k, i),
                    (k, i, j),
                    (k, j, i),
                ] {
                    m3[idx(p, q, r)] = v;
                }
            }
        }
    }

    // apply a^T along the last mode, then rotate the mode order; after three
    // passes every mode has been transformed and the original order restored
    let cols: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|c| {
            (0..=c)
                .filter(|&r| a[(r, c)] != 0.0)
                .map(|r| (r, a[(r, c)]))
                .collect()
        })
        .collect();
    let mut cur = m3;
    for _ in 0..3 {
        let mut next = vec![0.0; n * n * n];
        next.par_chunks_mut(n * n).enumerate().for_each(|(c, out)| {
            // out[i, j] = sum_r a[r, c] cur[i, j, r], stored as next[c, i, j]
            for i in 0..n {
                for j in 0..n {
                    let base = (i * n + j) * n;
                    let mut s = 0.0;
                    for &(r, w) in &cols[c] {
                        s += w * cur[base + r];
                    }
                    out[i * n + j] = s;
                }
            }
        });
        cur = next;
    }

    // exact symmetry from the sorted representative, then sparsify
    let max = cur.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = TRIPLE_DROP_TOL * max;
    let mut dense = vec![0.0; n * n * n];
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                let mut v = cur[idx(i, j, k)];
                if v.abs() < tol {
                    v = 0.0;
                }
                for (p, q, r) in [
                    (i, j, k),
                    (i, k, j),
                    (j, i, k),
                    (j, k, i),
                    (k, i, j),
                    (k, j, i),
                ] {
                    dense[idx(p, q, r)] = v;
                }
            }
        }
    }
    TripleTensor::from_dense(n, dense)
}

/// `E[xi_i T_alpha]` for every member of the set.
pub fn linear_forcing_coefficient(
    a: &DMatrix<f64>,
    moments: &MomentTable,
    set: &MultiIndexSet,
    i: usize,
) -> Result<Vec<f64>> {
    if i >= set.n_forcing() {
        return Err(DgpcError::usage(format!(
            "forcing variable {i} out of range (K = {})",
            set.n_forcing()
        )));
    }
    let e = MultiIndex::unit(set.nvars(), i);
    let raw: Vec<f64> = set
        .iter()
        .map(|m| moments.get(&m.add(&e)))
        .collect::<Result<_>>()?;
    Ok((0..set.len())
        .map(|l| (0..=l).map(|k| a[(k, l)] * raw[k]).sum())
        .collect())
}

/// `T_alpha(point)` for every member of the set.
pub fn evaluate_basis(a: &DMatrix<f64>, set: &MultiIndexSet, point: &[f64]) -> Result<Vec<f64>> {
    if point.len() != set.nvars() {
        return Err(DgpcError::usage(format!(
            "point of dimension {} for {} variables",
            point.len(),
            set.nvars()
        )));
    }
    let mono: Vec<f64> = set
        .iter()
        .map(|m| {
            m.exponents()
                .iter()
                .zip(point)
                .map(|(&e, &x)| x.powi(e as i32))
                .product()
        })
        .collect();
    Ok((0..set.len())
        .map(|l| (0..=l).map(|k| a[(k, l)] * mono[k]).sum())
        .collect())
}

/// An orthonormal basis of the current measure together with everything the
/// Galerkin system needs from it.
#[derive(Clone, Debug)]
pub struct ChaosBasis {
    set: MultiIndexSet,
    a: DMatrix<f64>,
    columns: Vec<Vec<(usize, f64)>>,
    monomials: Vec<Vec<(usize, u8)>>,
    max_exp: usize,
    triple: TripleTensor,
    forcing: Vec<Vec<f64>>,
    jitter: f64,
}

impl ChaosBasis {
    /// Builds the basis by Gram–Cholesky orthonormalization of `moments`.
    pub fn from_moments(set: MultiIndexSet, moments: &MomentTable) -> Result<Self> {
        if moments.n_forcing() != set.n_forcing() {
            return Err(DgpcError::usage("moment table and index set disagree on K"));
        }
        let h = build_gram(moments, &set)?;
        let (a, jitter) = orthonormalize_with_jitter(&h, &set)?;
        let triple = triple_products(&a, moments, &set)?;
        let forcing = (0..set.n_forcing())
            .map(|i| linear_forcing_coefficient(&a, moments, &set, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_parts(set, a, triple, forcing, jitter))
    }

    /// Hermite basis of `set.n_forcing()` Gaussian variables (no second block).
    pub fn hermite(set: MultiIndexSet) -> Result<Self> {
        if set.n_modes() != 0 {
            return Err(DgpcError::usage(
                "Hermite basis requires a purely Gaussian index set",
            ));
        }
        let moments = MomentTable::gaussian(set.n_forcing());
        Self::from_moments(set, &moments)
    }

    /// Reassembles a basis from stored components.
    pub fn from_parts(
        set: MultiIndexSet,
        a: DMatrix<f64>,
        triple: TripleTensor,
        forcing: Vec<Vec<f64>>,
        jitter: f64,
    ) -> Self {
        let n = set.len();
        let columns = (0..n)
            .map(|c| {
                (0..=c)
                    .filter(|&r| a[(r, c)] != 0.0)
                    .map(|r| (r, a[(r, c)]))
                    .collect()
            })
            .collect();
        let monomials = set
            .iter()
            .map(|m| {
                m.exponents()
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| (i, e))
                    .collect()
            })
            .collect();
        let max_exp = set
            .iter()
            .flat_map(|m| m.exponents().iter().copied())
            .max()
            .unwrap_or(0) as usize;
        ChaosBasis {
            set,
            a,
            columns,
            monomials,
            max_exp,
            triple,
            forcing,
            jitter,
        }
    }

    pub fn set(&self) -> &MultiIndexSet {
        &self.set
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn triple(&self) -> &TripleTensor {
        &self.triple
    }

    /// `E[xi_i T_alpha]` indexed as `[i][alpha]`.
    pub fn forcing(&self) -> &[Vec<f64>] {
        &self.forcing
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// False for a basis function dropped as linearly dependent (`T = 0`).
    pub fn is_live(&self, a: usize) -> bool {
        !self.columns[a].is_empty()
    }

    /// Number of dropped basis functions.
    pub fn n_deflated(&self) -> usize {
        self.columns.iter().filter(|c| c.is_empty()).count()
    }

    /// Scratch length needed by [`ChaosBasis::evaluate_into`].
    pub fn scratch_len(&self) -> usize {
        self.set.nvars() * (self.max_exp + 1) + self.len()
    }

    /// `T_alpha(point)` for all alpha, using caller-provided scratch of
    /// length [`ChaosBasis::scratch_len`].
    pub fn evaluate_into(&self, point: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        let nv = self.set.nvars();
        let stride = self.max_exp + 1;
        let (pows, mono) = scratch.split_at_mut(nv * stride);
        for (v, &x) in point.iter().enumerate().take(nv) {
            let base = v * stride;
            pows[base] = 1.0;
            for e in 1..stride {
                pows[base + e] = pows[base + e - 1] * x;
            }
        }
        for (m, sp) in mono.iter_mut().zip(&self.monomials) {
            let mut p = 1.0;
            for &(v, e) in sp {
                p *= pows[v * stride + e as usize];
            }
            *m = p;
        }
        for (o, col) in out.iter_mut().zip(&self.columns) {
            *o = col.iter().map(|&(r, w)| w * mono[r]).sum();
        }
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.set.nvars() {
            return Err(DgpcError::usage(format!(
                "point of dimension {} for {} variables",
                point.len(),
                self.set.nvars()
            )));
        }
        let mut scratch = vec![0.0; self.scratch_len()];
        let mut out = vec![0.0; self.len()];
        self.evaluate_into(point, &mut scratch, &mut out);
        Ok(out)
    }
}

/// Empirical Gram matrix `mean_i T(x_i) T(x_i)^T` over the given points
/// (row-major, `nvars` columns). Used to check orthonormality on held-out
/// samples.
pub fn empirical_gram(basis: &ChaosBasis, points: &[f64]) -> Result<DMatrix<f64>> {
    let nv = basis.set().nvars();
    let n = basis.len();
    if nv == 0 || points.len() % nv != 0 {
        return Err(DgpcError::usage(
            "point array does not match basis dimension",
        ));
    }
    let s = points.len() / nv;
    if s == 0 {
        return Err(DgpcError::usage("empirical Gram matrix of zero points"));
    }
    let partials: Vec<Vec<f64>> = points
        .par_chunks(4096 * nv)
        .map(|rows| {
            let mut acc = vec![0.0; n * n];
            let mut scratch = vec![0.0; basis.scratch_len()];
            let mut t = vec![0.0; n];
            for p in rows.chunks_exact(nv) {
                basis.evaluate_into(p, &mut scratch, &mut t);
                for i in 0..n {
                    for j in i..n {
                        acc[i * n + j] += t[i] * t[j];
                    }
                }
            }
            acc
        })
        .collect();
    let mut g = DMatrix::zeros(n, n);
    for p in &partials {
        for i in 0..n {
            for j in i..n {
                g[(i, j)] += p[i * n + j];
            }
        }
    }
    for i in 0..n {
        for j in i..n {
            let v = g[(i, j)] / s as f64;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}
