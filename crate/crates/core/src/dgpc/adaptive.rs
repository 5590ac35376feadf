//! Restart scheduling from the growth of the nonlinear part of the variance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{DgpcError, Result};
use crate::multiindex::MultiIndexSet;
use crate::pce::PCExpansion;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveConfig {
    /// Threshold: advance while the ratio stays below `3 epsilon`, aim for
    /// `2 epsilon` at the next restart.
    pub epsilon: f64,
    /// First interval length.
    pub dt0: f64,
    pub dt_max: f64,
    /// Degree of the least-squares fit used for extrapolation.
    #[serde(default = "default_fit_degree")]
    pub fit_degree: usize,
    /// Rollbacks allowed per interval before giving up.
    #[serde(default = "default_retries")]
    pub max_retries: usize,
}

fn default_fit_degree() -> usize {
    2
}

fn default_retries() -> usize {
    3
}

impl AdaptiveConfig {
    pub fn validate(&self, errors: &mut Vec<String>) {
        if !(self.epsilon > 0.0 && 3.0 * self.epsilon < 1.0) {
            errors.push("adaptive.epsilon must lie in (0, 1/3)".into());
        }
        if !(self.dt0 > 0.0) {
            errors.push("adaptive.dt0 must be positive".into());
        }
        if !(self.dt0 <= self.dt_max) {
            errors.push("adaptive.dt0 must not exceed adaptive.dt_max".into());
        }
        if self.fit_degree == 0 || self.fit_degree > 6 {
            errors.push("adaptive.fit_degree must lie in 1..=6".into());
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepDecision {
    /// Accept the interval; the next one has length `next_dt`.
    Advance { next_dt: f64 },
    /// Discard the interval and redo it with length `retry_dt`.
    Rollback { retry_dt: f64 },
}

/// `||sum_{|a|>1} u_a^2||_1 / ||sum_{|a|>0} u_a^2||_1`, zero when there is
/// no variance.
pub fn rho_ratio(pce: &PCExpansion, set: &MultiIndexSet) -> Result<f64> {
    if pce.n_terms() != set.len() {
        return Err(DgpcError::usage("expansion does not match the index set"));
    }
    let energies: Vec<f64> = (0..pce.n_terms())
        .map(|a| pce.term(a).iter().map(|v| v * v).sum())
        .collect();
    Ok(ratio_from_energies(&energies, set))
}

/// Ratio from per-term energies.
pub fn ratio_from_energies(energies: &[f64], set: &MultiIndexSet) -> f64 {
    let (mut high, mut all) = (0.0, 0.0);
    for (a, e) in energies.iter().enumerate().skip(1) {
        all += e;
        if set.degree(a) > 1 {
            high += e;
        }
    }
    if all > 0.0 {
        high / all
    } else {
        0.0
    }
}

/// Decision after an interval of length `dt` on which the ratio took the
/// values `rho` at time offsets `offsets` (starting at 0).
pub fn adaptive_next_step(
    offsets: &[f64],
    rho: &[f64],
    dt: f64,
    cfg: &AdaptiveConfig,
) -> Result<StepDecision> {
    if offsets.len() != rho.len() || offsets.is_empty() {
        return Err(DgpcError::usage(
            "ratio trajectory and offsets differ in length",
        ));
    }
    if !(dt > 0.0) {
        return Err(DgpcError::usage("interval length must be positive"));
    }
    let target = 2.0 * cfg.epsilon;
    let peak = rho.iter().fold(0.0f64, |m, &r| m.max(r));
    if peak > 3.0 * cfg.epsilon {
        let crossing = (1..rho.len()).find_map(|i| {
            let (r0, r1) = (rho[i - 1], rho[i]);
            (r0 <= target && r1 > target)
                .then(|| offsets[i - 1] + (target - r0) / (r1 - r0) * (offsets[i] - offsets[i - 1]))
        });
        let retry = match crossing {
            Some(t) if t > 0.0 => t,
            _ => 0.5 * dt,
        };
        return Ok(StepDecision::Rollback {
            retry_dt: retry.min(cfg.dt_max),
        });
    }

    let end = offsets[offsets.len() - 1];
    if !(end > 0.0) {
        return Ok(StepDecision::Advance {
            next_dt: cfg.dt_max,
        });
    }
    let scaled: Vec<f64> = offsets.iter().map(|o| o / end).collect();
    let mut coeffs = polyfit(&scaled, rho, cfg.fit_degree.min(rho.len() - 1))?;
    coeffs[0] -= target;
    let rho_end = rho[rho.len() - 1];
    let next = if rho_end < target {
        // extrapolate beyond the data, up to the cap
        let s_max = cfg.dt_max / end;
        match smallest_root(&coeffs, 1.0, s_max) {
            Some(s) if s > 1.0 => s * end,
            _ => cfg.dt_max,
        }
    } else {
        smallest_root(&coeffs, 0.0, 1.0 + 1e-12).map_or(dt, |s| s * end)
    };
    Ok(StepDecision::Advance {
        next_dt: next.min(cfg.dt_max),
    })
}

/// Least-squares polynomial coefficients, constant term first.
fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Result<Vec<f64>> {
    let a = DMatrix::from_fn(x.len(), degree + 1, |i, j| x[i].powi(j as i32));
    let b = DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let c = svd
        .solve(&b, 1e-13)
        .map_err(|e| DgpcError::internal(format!("ratio fit failed: {e}")))?;
    Ok(c.iter().copied().collect())
}

fn eval(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * s + v)
}

/// Smallest root of the polynomial in `(lo, hi]` (in `[lo, hi]` when
/// `lo == 0`).
fn smallest_root(c: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let in_range = |s: f64| (s > lo || (lo == 0.0 && s >= 0.0)) && s <= hi;
    let deg = c.iter().rposition(|v| *v != 0.0)?;
    match deg {
        0 => None,
        1 => Some(-c[0] / c[1]).filter(|&s| in_range(s)),
        2 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = b * b - 4.0 * a * cc;
            if disc < 0.0 {
                return None;
            }
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            let mut roots = Vec::with_capacity(2);
            if q != 0.0 {
                roots.push(cc / q);
                roots.push(q / a);
            } else {
                roots.push(0.0);
            }
            roots
                .into_iter()
                .filter(|&s| in_range(s))
                .min_by(|a, b| a.total_cmp(b))
        }
        _ => {
            let n = 4096;
            let h = (hi - lo) / n as f64;
            let mut prev = eval(c, lo);
            if prev == 0.0 && lo == 0.0 {
                return Some(0.0);
            }
            for i in 1..=n {
                let s = lo + i as f64 * h;
                let v = eval(c, s);
                if v == 0.0 {
                    return Some(s);
                }
                if v.signum() != prev.signum() {
                    let (mut a, mut b) = (s - h, s);
                    for _ in 0..200 {
                        let m = 0.5 * (a + b);
                        if eval(c, m).signum() == eval(c, a).signum() {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    return Some(0.5 * (a + b));
                }
                prev = v;
            }
            None
        }
    }
}

/// Rounds an interval length down to a whole number of inner steps (at
/// least one).
pub fn round_to_steps(dt: f64, inner_dt: f64) -> f64 {
    let n = ((dt / inner_dt) * (1.0 + 1e-9)).floor().max(1.0);
    n * inner_dt
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::{build_sparse_set, SparseIndex};

    fn cfg(p: usize) -> AdaptiveConfig {
        AdaptiveConfig {
            epsilon: 0.01,
            dt0: 0.1,
            dt_max: 0.4,
            fit_degree: p,
            max_retries: 3,
        }
    }

    fn traj(dt: f64, n: usize, f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..=n).map(|i| i as f64 * dt / n as f64).collect();
        let r = t.iter().map(|&s| f(s)).collect();
        (t, r)
    }

    #[test]
    fn ratio_examples() {
        let set = build_sparse_set(1, 0, 2, &SparseIndex::full(1, 2)).unwrap();
        let mut p = PCExpansion::zeros(3, 1, 4);
        assert_eq!(rho_ratio(&p, &set).unwrap(), 0.0);
        p.coeff_mut(1, 0).fill(1.0);
        assert_eq!(rho_ratio(&p, &set).unwrap(), 0.0);
        p.coeff_mut(2, 0).fill(1.0);
        assert_eq!(rho_ratio(&p, &set).unwrap(), 0.5);
        p.coeff_mut(1, 0).fill(0.0);
        assert_eq!(rho_ratio(&p, &set).unwrap(), 1.0);
    }

    #[test]
    fn flat_ratio_gives_maximal_step() {
        let (t, r) = traj(0.1, 100, |_| 0.0);
        assert_eq!(
            adaptive_next_step(&t, &r, 0.1, &cfg(2)).unwrap(),
            StepDecision::Advance { next_dt: 0.4 }
        );
    }

    #[test]
    fn linear_ratio_reaching_target_at_end_keeps_step() {
        let (t, r) = traj(0.1, 100, |s| 0.02 * s / 0.1);
        match adaptive_next_step(&t, &r, 0.1, &cfg(1)).unwrap() {
            StepDecision::Advance { next_dt } => assert!((next_dt - 0.1).abs() < 1e-12),
            d => panic!("{d:?}"),
        }
    }

    #[test]
    fn extrapolated_root() {
        // rho = 5 s^2 reaches 0.02 at s = sqrt(0.004)
        let (t, r) = traj(0.05, 50, |s| 5.0 * s * s);
        let expect = 0.004f64.sqrt();
        match adaptive_next_step(&t, &r, 0.05, &cfg(2)).unwrap() {
            StepDecision::Advance { next_dt } => assert!((next_dt - expect).abs() < 1e-8),
            d => panic!("{d:?}"),
        }
        // cubic fit goes through the scanning root finder
        match adaptive_next_step(&t, &r, 0.05, &cfg(3)).unwrap() {
            StepDecision::Advance { next_dt } => assert!((next_dt - expect).abs() < 1e-8),
            d => panic!("{d:?}"),
        }
    }

    #[test]
    fn rollback_at_interpolated_crossing() {
        // linear rho = 0.4 s crosses 0.02 at s = 0.05 and exceeds 0.03
        let (t, r) = traj(0.1, 100, |s| 0.4 * s);
        match adaptive_next_step(&t, &r, 0.1, &cfg(2)).unwrap() {
            StepDecision::Rollback { retry_dt } => assert!((retry_dt - 0.05).abs() < 1e-8),
            d => panic!("{d:?}"),
        }
        // unusable crossing halves the step
        let (t, r) = traj(0.1, 10, |_| 0.5);
        assert_eq!(
            adaptive_next_step(&t, &r, 0.1, &cfg(2)).unwrap(),
            StepDecision::Rollback { retry_dt: 0.05 }
        );
    }

    #[test]
    fn root_within_data_when_target_exceeded() {
        // rho = 0.25 s, exceeds 0.02 at s = 0.08 but stays below 0.03
        let (t, r) = traj(0.1, 100, |s| 0.25 * s);
        match adaptive_next_step(&t, &r, 0.1, &cfg(2)).unwrap() {
            StepDecision::Advance { next_dt } => assert!((next_dt - 0.08).abs() < 1e-8),
            d => panic!("{d:?}"),
        }
    }

    #[test]
    fn rounding_to_inner_grid() {
        assert!((round_to_steps(0.12345, 0.001) - 0.123).abs() < 1e-15);
        assert_eq!(round_to_steps(0.0001, 0.001), 0.001);
        assert!((round_to_steps(0.1, 0.001) - 0.1).abs() < 1e-15);
    }
}
