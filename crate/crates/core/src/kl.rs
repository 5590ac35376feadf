//! Karhunen–Loève compression of chaos-expanded random fields.
//!
//! The covariance of a field `u = sum_alpha u_alpha T_alpha` is
//! `C(x, y) = sum_{alpha > 0} u_alpha(x) u_alpha(y)`. Eigenpairs are taken
//! with respect to the grid quadrature inner product `<f, g> = w sum f g`,
//! so eigenfunctions satisfy `w sum phi_l phi_m = delta_lm` and eigenvalues
//! approximate those of the continuum integral operator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{DgpcError, Result};
use crate::pce::PCExpansion;

/// Modes with eigenvalue below this fraction of the largest are dropped.
pub const RANK_TOL: f64 = 1e-14;

/// Largest assembled covariance solved by a full symmetric eigensolver;
/// beyond this a Lanczos iteration is used.
const DENSE_DIRECT_MAX: usize = 512;

/// Largest covariance the dense path will assemble.
const DENSE_ASSEMBLY_MAX: usize = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum KlMethod {
    /// Assemble the covariance and solve the eigenproblem.
    Dense,
    /// Gaussian range finder with `oversample` extra columns.
    Randomized { oversample: usize },
}

impl Default for KlMethod {
    fn default() -> Self {
        KlMethod::Dense
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KLResult {
    /// Retained eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Eigenfunctions on the grid (all components concatenated).
    pub modes: Vec<Vec<f64>>,
    /// Expansion of each random mode over the terms of the source basis.
    pub eta: Vec<Vec<f64>>,
    /// Mean field of the source expansion.
    pub mean: Vec<f64>,
    /// `w sum_{alpha > 0} |u_alpha|^2`, the total variance.
    pub total_variance: f64,
    /// Number of modes asked for.
    pub requested: usize,
}

impl KLResult {
    /// Number of retained modes.
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn captured_variance(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Variance lost by truncation: the sum of discarded eigenvalues.
    pub fn truncated_variance(&self) -> f64 {
        (self.total_variance - self.captured_variance()).max(0.0)
    }
}

/// Columns `u_alpha`, `alpha > 0`.
fn fluctuation_matrix(pce: &PCExpansion) -> DMatrix<f64> {
    let n = pce.term_len();
    let j = pce.n_terms().saturating_sub(1);
    let mut u = DMatrix::zeros(n, j);
    for a in 0..j {
        u.column_mut(a).copy_from_slice(pce.term(a + 1));
    }
    u
}

/// `C V` for a block of vectors, without forming `C`.
pub fn covariance_apply(pce: &PCExpansion, weight: f64, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if v.nrows() != pce.term_len() {
        return Err(DgpcError::usage(format!(
            "vectors of length {} for fields of length {}",
            v.nrows(),
            pce.term_len()
        )));
    }
    let u = fluctuation_matrix(pce);
    let proj = u.transpose() * v * weight;
    Ok(u * proj)
}

/// Explicit covariance matrix `w U U^T` (the operator in the Euclidean
/// basis of grid values).
pub fn assemble_covariance(pce: &PCExpansion, weight: f64) -> DMatrix<f64> {
    let u = fluctuation_matrix(pce);
    (&u * u.transpose()) * weight
}

fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Sorts eigenpairs descending, clamps, drops negligible modes and converts
/// Euclidean eigenvectors into quadrature-normalized eigenfunctions.
fn finish(
    pce: &PCExpansion,
    weight: f64,
    d: usize,
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
) -> Result<KLResult> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let lambda1 = order.first().map_or(0.0, |&i| values[i].max(0.0));
    let scale = 1.0 / weight.sqrt();
    let mut eigenvalues = Vec::new();
    let mut modes = Vec::new();
    for &i in order.iter().take(d) {
        let lam = values[i].max(0.0);
        if !(lambda1 > 0.0) || lam < RANK_TOL * lambda1 {
            break;
        }
        let mut phi: Vec<f64> = vectors[i].iter().map(|x| x * scale).collect();
        orient(&mut phi);
        eigenvalues.push(lam);
        modes.push(phi);
    }
    if eigenvalues.len() < d {
        log::warn!(
            "covariance has numerical rank {} below the requested {d} modes",
            eigenvalues.len()
        );
    }
    let total_variance = weight
        * (1..pce.n_terms())
            .map(|a| pce.term(a).iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>();
    let mut res = KLResult {
        eigenvalues,
        modes,
        eta: Vec::new(),
        mean: pce.term(0).to_vec(),
        total_variance,
        requested: d,
    };
    res.eta = eta_pce(&res, pce, weight)?;
    Ok(res)
}

/// Top-`d` KL pairs of the assembled covariance.
pub fn dense_kl(pce: &PCExpansion, weight: f64, d: usize) -> Result<KLResult> {
    let n = pce.term_len();
    if d > n {
        return Err(DgpcError::usage(format!(
            "{d} modes requested from a covariance of dimension {n}"
        )));
    }
    if n > DENSE_ASSEMBLY_MAX {
        return Err(DgpcError::usage(format!(
            "dense KL limited to {DENSE_ASSEMBLY_MAX} unknowns, got {n}; use the randomized method"
        )));
    }
    let c = assemble_covariance(pce, weight);
    let (values, vectors) = if n <= DENSE_DIRECT_MAX {
        let eig = SymmetricEigen::new(c);
        let vecs = (0..n)
            .map(|i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        (eig.eigenvalues.iter().copied().collect(), vecs)
    } else {
        lanczos(&c, pce.n_terms() + 10)
    };
    finish(pce, weight, d, values, vectors)
}

/// Ritz pairs of a symmetric matrix from a fully reorthogonalized Lanczos
/// iteration of at most `steps` steps (stops early on invariant subspaces).
fn lanczos(c: &DMatrix<f64>, steps: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = c.nrows();
    let steps = steps.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x4B4C);
    let mut q0 = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    q0 /= q0.norm();
    let mut basis: Vec<DVector<f64>> = vec![q0];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let norm_est = c
        .diagonal()
        .iter()
        .map(|x| x.abs())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    loop {
        let q = basis.last().expect("nonempty").clone();
        let mut r = c * &q;
        let a = q.dot(&r);
        alpha.push(a);
        // two passes of full reorthogonalization
        for _ in 0..2 {
            for b in &basis {
                let h = b.dot(&r);
                r.axpy(-h, b, 1.0);
            }
        }
        let bnorm = r.norm();
        if basis.len() >= steps || bnorm <= 1e-13 * norm_est {
            break;
        }
        beta.push(bnorm);
        basis.push(r / bnorm);
    }
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let vectors = (0..m)
        .map(|k| {
            let mut v = DVector::zeros(n);
            for (i, b) in basis.iter().enumerate().take(m) {
                v.axpy(eig.eigenvectors[(i, k)], b, 1.0);
            }
            let nv = v.norm();
            (v / nv).iter().copied().collect()
        })
        .collect();
    (eig.eigenvalues.iter().copied().collect(), vectors)
}

/// Top-`d` KL pairs from a Gaussian range finder with `l = d + oversample`
/// columns.
pub fn randomized_kl(
    pce: &PCExpansion,
    weight: f64,
    d: usize,
    oversample: usize,
    seed: u64,
) -> Result<KLResult> {
    let n = pce.term_len();
    let l = d + oversample;
    if l > n {
        return Err(DgpcError::usage(format!(
            "sketch size {l} exceeds the field dimension {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let o = DMatrix::from_fn(n, l, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = covariance_apply(pce, weight, &o)?;
    let q = y.qr().q();
    let qu = q.transpose() * fluctuation_matrix(pce);
    let b = (&qu * qu.transpose()) * weight;
    let eig = SymmetricEigen::new(b);
    let lifted = &q * &eig.eigenvectors;
    let vectors = (0..lifted.ncols())
        .map(|k| lifted.column(k).iter().copied().collect())
        .collect();
    finish(
        pce,
        weight,
        d,
        eig.eigenvalues.iter().copied().collect(),
        vectors,
    )
}

/// KL by the chosen method.
pub fn kl(
    pce: &PCExpansion,
    weight: f64,
    d: usize,
    method: KlMethod,
    seed: u64,
) -> Result<KLResult> {
    match method {
        KlMethod::Dense => dense_kl(pce, weight, d),
        KlMethod::Randomized { oversample } => randomized_kl(pce, weight, d, oversample, seed),
    }
}

/// KL of the solution and a parameter field stacked into one random field.
pub fn combined_kl(
    solution: &PCExpansion,
    parameter: &PCExpansion,
    weight: f64,
    d: usize,
    method: KlMethod,
    seed: u64,
) -> Result<KLResult> {
    let stacked = solution.stack(parameter)?;
    kl(&stacked, weight, d, method, seed)
}

/// Coefficients of each mode `eta_l = lambda_l^{-1/2} sum_{alpha>0}
/// <u_alpha, phi_l> T_alpha` over the terms of `pce`.
pub fn eta_pce(res: &KLResult, pce: &PCExpansion, weight: f64) -> Result<Vec<Vec<f64>>> {
    let lambda1 = res.eigenvalues.first().copied().unwrap_or(0.0);
    res.eigenvalues
        .iter()
        .zip(&res.modes)
        .enumerate()
        .map(|(l, (&lam, phi))| {
            if !(lam > 0.0) || lam < RANK_TOL * lambda1 {
                return Err(DgpcError::RankDeficient {
                    mode: l,
                    eigenvalue: lam,
                });
            }
            if phi.len() != pce.term_len() {
                return Err(DgpcError::usage(
                    "eigenfunction does not match the expansion",
                ));
            }
            let s = weight / lam.sqrt();
            let mut c = vec![0.0; pce.n_terms()];
            for (a, ca) in c.iter_mut().enumerate().skip(1) {
                *ca = s * pce.term(a).iter().zip(phi).map(|(u, p)| u * p).sum::<f64>();
            }
            Ok(c)
        })
        .collect()
}
