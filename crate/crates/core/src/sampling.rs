//! Joint sample ensembles of the random modes and their propagation across
//! restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::ChaosBasis;
use crate::error::{DgpcError, Result};
use crate::pce::PCExpansion;

/// Rows per RNG substream; fixed so draws do not depend on thread count.
const RNG_CHUNK: usize = 1024;

/// `S` joint realizations of a `D`-dimensional random vector, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleEnsemble {
    values: Vec<f64>,
    n_samples: usize,
    dim: usize,
    generation: usize,
    seed: u64,
}

impl SampleEnsemble {
    pub fn new(
        values: Vec<f64>,
        n_samples: usize,
        dim: usize,
        generation: usize,
        seed: u64,
    ) -> Result<Self> {
        if values.len() != n_samples * dim {
            return Err(DgpcError::usage(format!(
                "{} values for {n_samples} samples of dimension {dim}",
                values.len()
            )));
        }
        Ok(SampleEnsemble {
            values,
            n_samples,
            dim,
            generation,
            seed,
        })
    }

    /// `n_samples` realizations of a zero-dimensional vector.
    pub fn empty(n_samples: usize) -> Self {
        SampleEnsemble {
            values: Vec::new(),
            n_samples,
            dim: 0,
            generation: 0,
            seed: 0,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn set_generation(&mut self, g: usize) {
        self.generation = g;
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column_mean(&self, j: usize) -> f64 {
        (0..self.n_samples)
            .map(|i| self.values[i * self.dim + j])
            .sum::<f64>()
            / self.n_samples as f64
    }

    pub fn column_variance(&self, j: usize) -> f64 {
        let m = self.column_mean(j);
        (0..self.n_samples)
            .map(|i| (self.values[i * self.dim + j] - m).powi(2))
            .sum::<f64>()
            / self.n_samples as f64
    }

    /// Shifts and scales every column to empirical mean 0 and variance 1;
    /// returns the `(mean, std)` pairs used.
    pub fn standardize(&mut self) -> Vec<(f64, f64)> {
        let affine: Vec<(f64, f64)> = (0..self.dim)
            .map(|j| {
                let m = self.column_mean(j);
                let v = self.column_variance(j);
                (m, if v > 0.0 { v.sqrt() } else { 1.0 })
            })
            .collect();
        self.apply_affine(&affine);
        affine
    }

    /// Applies `x -> (x - mean) / std` columnwise.
    pub fn apply_affine(&mut self, affine: &[(f64, f64)]) {
        let d = self.dim;
        for row in self.values.chunks_exact_mut(d.max(1)) {
            for (x, &(m, s)) in row.iter_mut().zip(affine) {
                *x = (*x - m) / s;
            }
        }
    }

    /// Drops the last sample (robustness test mode).
    pub fn discard_last(&mut self) {
        if self.n_samples > 0 {
            self.n_samples -= 1;
            self.values.truncate(self.n_samples * self.dim);
        }
    }
}

/// Mixes a run seed with restart index and purpose into an independent seed.
pub fn derive_seed(seed: u64, restart: u64, purpose: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(splitmix(splitmix(seed) ^ restart.wrapping_mul(0x1000_0000_01B3)) ^ purpose)
}

fn draw_with<F>(s: usize, k: usize, seed: u64, draw: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let mut values = vec![0.0; s * k];
    if k == 0 {
        return values;
    }
    values
        .par_chunks_mut(RNG_CHUNK * k)
        .enumerate()
        .for_each(|(c, chunk)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            for v in chunk.iter_mut() {
                *v = draw(&mut rng);
            }
        });
    values
}

/// `S x K` independent standard normal draws, reproducible from `seed`.
pub fn draw_gaussian(s: usize, k: usize, seed: u64) -> SampleEnsemble {
    let values = draw_with(s, k, seed, |rng| rng.sample(StandardNormal));
    SampleEnsemble {
        values,
        n_samples: s,
        dim: k,
        generation: 0,
        seed,
    }
}

/// `S x D` independent `U(-1, 1)` draws, reproducible from `seed`.
pub fn draw_uniform(s: usize, d: usize, seed: u64) -> SampleEnsemble {
    let values = draw_with(s, d, seed, |rng| rng.random_range(-1.0..1.0));
    SampleEnsemble {
        values,
        n_samples: s,
        dim: d,
        generation: 0,
        seed,
    }
}

/// Row-wise concatenation `(xi_i, eta_i)`, the evaluation points of a basis.
pub fn joint_points(xi: &SampleEnsemble, eta: &SampleEnsemble) -> Result<Vec<f64>> {
    if xi.n_samples() != eta.n_samples() {
        return Err(DgpcError::usage(format!(
            "forcing samples ({}) and mode samples ({}) differ in count",
            xi.n_samples(),
            eta.n_samples()
        )));
    }
    let (k, d) = (xi.dim(), eta.dim());
    let mut out = Vec::with_capacity(xi.n_samples() * (k + d));
    for i in 0..xi.n_samples() {
        out.extend_from_slice(xi.row(i));
        out.extend_from_slice(eta.row(i));
    }
    Ok(out)
}

/// New mode samples: row `i` is the expansion map `eta_pce` (one coefficient
/// vector per new mode, over the basis terms) evaluated at
/// `(xi row i, prev row i)`.
pub fn propagate(
    prev: &SampleEnsemble,
    xi: &SampleEnsemble,
    eta_pce: &[Vec<f64>],
    basis: &ChaosBasis,
) -> Result<SampleEnsemble> {
    let s = prev.n_samples();
    if xi.n_samples() != s {
        return Err(DgpcError::usage(format!(
            "propagation pairs {} forcing rows with {s} ensemble rows",
            xi.n_samples()
        )));
    }
    let nv = basis.set().nvars();
    if xi.dim() + prev.dim() != nv {
        return Err(DgpcError::usage(format!(
            "samples have {} + {} variables but the basis has {nv}",
            xi.dim(),
            prev.dim()
        )));
    }
    let j = basis.len();
    if let Some(c) = eta_pce.iter().find(|c| c.len() != j) {
        return Err(DgpcError::usage(format!(
            "mode expansion has {} coefficients for a basis of {j} terms",
            c.len()
        )));
    }
    let d = eta_pce.len();
    let mut values = vec![0.0; s * d];
    if d > 0 {
        values
            .par_chunks_mut(RNG_CHUNK * d)
            .enumerate()
            .for_each(|(c, out)| {
                let mut scratch = vec![0.0; basis.scratch_len()];
                let mut t = vec![0.0; j];
                let mut point = vec![0.0; nv];
                for (r, row) in out.chunks_exact_mut(d).enumerate() {
                    let i = c * RNG_CHUNK + r;
                    point[..xi.dim()].copy_from_slice(xi.row(i));
                    point[xi.dim()..].copy_from_slice(prev.row(i));
                    basis.evaluate_into(&point, &mut scratch, &mut t);
                    for (v, coeffs) in row.iter_mut().zip(eta_pce) {
                        *v = coeffs.iter().zip(&t).map(|(a, b)| a * b).sum();
                    }
                }
            });
    }
    Ok(SampleEnsemble {
        values,
        n_samples: s,
        dim: d,
        generation: prev.generation + 1,
        seed: prev.seed,
    })
}

/// Realizations of the expanded field at the given joint points (row-major,
/// `nvars` columns); one vector of length `comps * points` per sample.
pub fn solution_samples(
    pce: &PCExpansion,
    basis: &ChaosBasis,
    points: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let nv = basis.set().nvars();
    if pce.n_terms() != basis.len() {
        return Err(DgpcError::usage("expansion and basis differ in term count"));
    }
    if nv == 0 || points.len() % nv != 0 {
        return Err(DgpcError::usage(
            "point array does not match basis dimension",
        ));
    }
    let mut scratch = vec![0.0; basis.scratch_len()];
    let mut t = vec![0.0; basis.len()];
    Ok(points
        .chunks_exact(nv)
        .map(|p| {
            basis.evaluate_into(p, &mut scratch, &mut t);
            let mut field = vec![0.0; pce.term_len()];
            for (alpha, &ta) in t.iter().enumerate() {
                for (f, u) in field.iter_mut().zip(pce.term(alpha)) {
                    *f += ta * u;
                }
            }
            field
        })
        .collect())
}
