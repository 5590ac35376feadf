//! Finite-dimensional projection of Brownian forcing on one interval.
//!
//! On `[t0, t0 + dt]` each Brownian component is expanded in the cosine
//! basis `m_0 = 1/sqrt(dt)`, `m_i = sqrt(2/dt) cos(i pi (t - t0)/dt)`, with
//! independent standard normal coefficients. Variables are numbered
//! component-major: the first `K_c` belong to the first component, and so on.

use std::f64::consts::PI;

use crate::error::{DgpcError, Result};

/// Slack allowed when checking that a time lies inside the interval.
const TIME_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForcingBasis {
    t0: f64,
    dt: f64,
    per_component: usize,
    components: usize,
}

impl ForcingBasis {
    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn length(&self) -> f64 {
        self.dt
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.dt
    }

    /// Basis functions per Brownian component.
    pub fn per_component(&self) -> usize {
        self.per_component
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Total number of forcing variables.
    pub fn total(&self) -> usize {
        self.per_component * self.components
    }

    /// `(component, basis function)` of forcing variable `var`.
    pub fn split(&self, var: usize) -> (usize, usize) {
        (var / self.per_component, var % self.per_component)
    }

    /// `m_i(t)` without range checking.
    pub fn value(&self, i: usize, t: f64) -> f64 {
        if i == 0 {
            1.0 / self.dt.sqrt()
        } else {
            (2.0 / self.dt).sqrt() * (i as f64 * PI * (t - self.t0) / self.dt).cos()
        }
    }

    /// `int_{t0}^{t} m_i`.
    pub fn integral(&self, i: usize, t: f64) -> f64 {
        let s = t - self.t0;
        if i == 0 {
            s / self.dt.sqrt()
        } else {
            let w = i as f64 * PI / self.dt;
            (2.0 / self.dt).sqrt() * (w * s).sin() / w
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let slack = TIME_SLACK * self.dt.max(1.0);
        if t < self.t0 - slack || t > self.end() + slack {
            return Err(DgpcError::usage(format!(
                "time {t} outside forcing interval [{}, {}]",
                self.t0,
                self.end()
            )));
        }
        Ok(())
    }

    /// `m_i(t)` for `t` inside the interval.
    pub fn white_noise_coefficient(&self, i: usize, t: f64) -> Result<f64> {
        if i >= self.per_component {
            return Err(DgpcError::usage(format!(
                "basis function {i} out of range ({} per component)",
                self.per_component
            )));
        }
        self.check_time(t)?;
        Ok(self.value(i, t))
    }

    /// Truncated approximation of `W(t) - W(t0)` for one component given its
    /// coefficients.
    pub fn brownian_increment_approx(&self, xi: &[f64], t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(xi
            .iter()
            .take(self.per_component)
            .enumerate()
            .map(|(i, x)| x * self.integral(i, t))
            .sum())
    }
}

/// Cosine basis with `per_component` functions for each of `components`
/// independent Brownian motions on `[t0, t0 + dt]`.
pub fn cosine_basis(
    t0: f64,
    dt: f64,
    per_component: usize,
    components: usize,
) -> Result<ForcingBasis> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DgpcError::usage(format!(
            "interval length must be positive, got {dt}"
        )));
    }
    if per_component == 0 || components == 0 {
        return Err(DgpcError::usage(
            "forcing basis needs at least one function",
        ));
    }
    Ok(ForcingBasis {
        t0,
        dt,
        per_component,
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;
    use crate::sampling::draw_gaussian;

    fn inner(b: &ForcingBasis, i: usize, k: usize) -> f64 {
        let (x, w) = gauss_legendre(1000);
        let h = b.length() / 2.0;
        x.iter()
            .zip(&w)
            .map(|(x, w)| {
                let t = b.start() + h * (x + 1.0);
                w * h * b.value(i, t) * b.value(k, t)
            })
            .sum()
    }

    #[test]
    fn orthonormal() {
        let b = cosine_basis(0.3, 0.1, 5, 1).unwrap();
        for i in 0..5 {
            for k in 0..5 {
                let e = if i == k { 1.0 } else { 0.0 };
                assert!((inner(&b, i, k) - e).abs() < 1e-10, "{i},{k}");
            }
        }
    }

    #[test]
    fn pointwise_values() {
        let b = cosine_basis(1.0, 0.25, 3, 1).unwrap();
        assert_eq!(b.white_noise_coefficient(0, 1.1).unwrap(), 2.0);
        assert!((b.white_noise_coefficient(1, 1.0).unwrap() - 8f64.sqrt()).abs() < 1e-14);
        assert!(b.white_noise_coefficient(1, 1.125).unwrap().abs() < 1e-14);
        assert!(b.white_noise_coefficient(0, 1.5).is_err());
    }

    #[test]
    fn endpoint_increment_is_carried_by_first_function() {
        let b = cosine_basis(0.0, 0.4, 4, 1).unwrap();
        assert_eq!(
            b.brownian_increment_approx(&[1.0, 2.0, 3.0, 4.0], 0.0)
                .unwrap(),
            0.0
        );
        for i in 1..4 {
            assert!(b.integral(i, 0.4).abs() < 1e-15);
        }
        assert!((b.integral(0, 0.4) - 0.4f64.sqrt()).abs() < 1e-15);
        let xi = draw_gaussian(100_000, 4, 11);
        let var: f64 = (0..xi.n_samples())
            .map(|i| b.brownian_increment_approx(xi.row(i), 0.4).unwrap().powi(2))
            .sum::<f64>()
            / xi.n_samples() as f64;
        assert!((var - 0.4).abs() < 5.0 * 0.4 * (2.0 / 1e5f64).sqrt());
    }

    #[test]
    fn interior_error_decreases_with_more_functions() {
        // E[(W(t) - approx)^2] = t - sum_i (int_0^t m_i)^2 at the midpoint
        let mut last = f64::INFINITY;
        for k in [1, 2, 4, 8, 16] {
            let b = cosine_basis(0.0, 1.0, k, 1).unwrap();
            let err = 0.5 - (0..k).map(|i| b.integral(i, 0.5).powi(2)).sum::<f64>();
            assert!(err <= last + 1e-15);
            assert!(err >= -1e-15);
            last = err;
        }
        assert!(last < 0.02);
    }
}
