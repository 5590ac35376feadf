//! Statistical moments of chaos expansions and error norms.

use rayon::prelude::*;

use crate::basis::ChaosBasis;
use crate::error::{DgpcError, Result};
use crate::pce::PCExpansion;

/// Joint sample rows per parallel work unit; fixed so sums do not depend on
/// thread count.
const CHUNK: usize = 512;

/// Pointwise moments of every solution component at one time, each field
/// laid out `[component][grid point]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentFields {
    pub time: f64,
    pub n_comps: usize,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// Third central moment, sampled.
    pub third: Option<Vec<f64>>,
    /// Fourth central moment, sampled.
    pub fourth: Option<Vec<f64>>,
}

impl MomentFields {
    pub fn n_points(&self) -> usize {
        self.mean.len() / self.n_comps.max(1)
    }

    /// Slice of a field belonging to component `c`.
    pub fn component<'a>(&self, field: &'a [f64], c: usize) -> &'a [f64] {
        let n = self.n_points();
        &field[c * n..(c + 1) * n]
    }

    pub fn max_order(&self) -> usize {
        match (&self.third, &self.fourth) {
            (Some(_), Some(_)) => 4,
            (Some(_), None) => 3,
            _ => 2,
        }
    }

    /// Central moment of order 1 to 4 (order 1 is identically zero).
    pub fn central(&self, order: usize) -> Option<Vec<f64>> {
        match order {
            1 => Some(vec![0.0; self.mean.len()]),
            2 => Some(self.variance.clone()),
            3 => self.third.clone(),
            4 => self.fourth.clone(),
            _ => None,
        }
    }

    /// Raw moment `E[u^n]` of order 1 to 4.
    pub fn raw(&self, order: usize) -> Option<Vec<f64>> {
        let m = &self.mean;
        let v = &self.variance;
        match order {
            1 => Some(m.clone()),
            2 => Some(m.iter().zip(v).map(|(m, v)| m * m + v).collect()),
            3 => self.third.as_ref().map(|c3| {
                (0..m.len())
                    .map(|i| m[i].powi(3) + 3.0 * m[i] * v[i] + c3[i])
                    .collect()
            }),
            4 => match (&self.third, &self.fourth) {
                (Some(c3), Some(c4)) => Some(
                    (0..m.len())
                        .map(|i| {
                            m[i].powi(4) + 6.0 * m[i] * m[i] * v[i] + 4.0 * m[i] * c3[i] + c4[i]
                        })
                        .collect(),
                ),
                _ => None,
            },
            _ => None,
        }
    }
}

/// Mean and variance from the coefficients (exact for an orthonormal
/// basis); third and fourth central moments by evaluating the fluctuation
/// `sum_{alpha > 0} u_alpha T_alpha` at the joint sample `points`
/// (row-major, one row per realization) when given.
pub fn moments_from_pce(
    pce: &PCExpansion,
    basis: &ChaosBasis,
    points: Option<&[f64]>,
) -> Result<MomentFields> {
    if pce.n_terms() != basis.len() {
        return Err(DgpcError::usage("expansion and basis differ in term count"));
    }
    let n = pce.term_len();
    let mean = pce.term(0).to_vec();
    let mut variance = vec![0.0; n];
    for a in 1..pce.n_terms() {
        for (v, u) in variance.iter_mut().zip(pce.term(a)) {
            *v += u * u;
        }
    }
    let (third, fourth) = match points {
        Some(p) => {
            let [_, s3, s4] = sampled_central(pce, basis, p)?;
            (Some(s3), Some(s4))
        }
        None => (None, None),
    };
    Ok(MomentFields {
        time: pce.time(),
        n_comps: pce.n_comps(),
        mean,
        variance,
        third,
        fourth,
    })
}

/// Sampled second, third and fourth moments of the fluctuation about the
/// coefficient mean.
pub fn sampled_central(
    pce: &PCExpansion,
    basis: &ChaosBasis,
    points: &[f64],
) -> Result<[Vec<f64>; 3]> {
    let nv = basis.set().nvars();
    if pce.n_terms() != basis.len() {
        return Err(DgpcError::usage("expansion and basis differ in term count"));
    }
    if nv == 0 || points.len() % nv != 0 || points.is_empty() {
        return Err(DgpcError::usage(
            "point array does not match basis dimension",
        ));
    }
    let s = points.len() / nv;
    let n = pce.term_len();
    let j = basis.len();
    let partials: Vec<[Vec<f64>; 3]> = points
        .par_chunks(CHUNK * nv)
        .map(|rows| {
            let mut acc = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
            let mut scratch = vec![0.0; basis.scratch_len()];
            let mut t = vec![0.0; j];
            let mut d = vec![0.0; n];
            for p in rows.chunks_exact(nv) {
                basis.evaluate_into(p, &mut scratch, &mut t);
                d.fill(0.0);
                for (a, &ta) in t.iter().enumerate().skip(1) {
                    for (x, u) in d.iter_mut().zip(pce.term(a)) {
                        *x += ta * u;
                    }
                }
                for (i, &x) in d.iter().enumerate() {
                    let x2 = x * x;
                    acc[0][i] += x2;
                    acc[1][i] += x2 * x;
                    acc[2][i] += x2 * x2;
                }
            }
            acc
        })
        .collect();
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for part in &partials {
        for (o, p) in out.iter_mut().zip(part) {
            for (a, b) in o.iter_mut().zip(p) {
                *a += b;
            }
        }
    }
    let inv = 1.0 / s as f64;
    for o in out.iter_mut() {
        o.iter_mut().for_each(|v| *v *= inv);
    }
    Ok(out)
}

/// Discrete `L^2` distance of `a` from a reference `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L2Error {
    pub value: f64,
    /// False when the reference vanishes and `value` is the absolute norm.
    pub relative: bool,
}

/// `||a - b|| / ||b||`, or `||a - b||` when `b` is identically zero.
pub fn relative_l2_error(a: &[f64], b: &[f64]) -> Result<L2Error> {
    if a.len() != b.len() {
        return Err(DgpcError::usage(format!(
            "error between fields of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let norm = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    Ok(if norm > 0.0 {
        L2Error {
            value: diff / norm,
            relative: true,
        }
    } else {
        L2Error {
            value: diff,
            relative: false,
        }
    })
}
