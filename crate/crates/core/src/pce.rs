//! Chaos expansions of spatial fields.

use serde::{Deserialize, Serialize};

use crate::error::{DgpcError, Result};

/// Coefficient fields `u_alpha(x)` of a (possibly multi-component) random
/// field, stored as `[alpha][component][grid point]`. Term 0 is the mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PCExpansion {
    n_terms: usize,
    n_comps: usize,
    n_points: usize,
    data: Vec<f64>,
    time: f64,
}

impl PCExpansion {
    pub fn zeros(n_terms: usize, n_comps: usize, n_points: usize) -> Self {
        PCExpansion {
            n_terms,
            n_comps,
            n_points,
            data: vec![0.0; n_terms * n_comps * n_points],
            time: 0.0,
        }
    }

    pub fn from_data(
        n_terms: usize,
        n_comps: usize,
        n_points: usize,
        data: Vec<f64>,
        time: f64,
    ) -> Result<Self> {
        if data.len() != n_terms * n_comps * n_points {
            return Err(DgpcError::usage(format!(
                "expansion data of length {} for {n_terms} terms x {n_comps} components x {n_points} points",
                data.len()
            )));
        }
        Ok(PCExpansion {
            n_terms,
            n_comps,
            n_points,
            data,
            time,
        })
    }

    /// Deterministic expansion with the given mean fields (one per component).
    pub fn deterministic(n_terms: usize, means: &[Vec<f64>]) -> Result<Self> {
        let n_points = means.first().map_or(0, Vec::len);
        if means.iter().any(|m| m.len() != n_points) {
            return Err(DgpcError::usage("component fields differ in length"));
        }
        let mut p = PCExpansion::zeros(n_terms.max(1), means.len(), n_points);
        for (c, m) in means.iter().enumerate() {
            p.coeff_mut(0, c).copy_from_slice(m);
        }
        Ok(p)
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn n_comps(&self) -> usize {
        self.n_comps
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Length of one term (all components).
    pub fn term_len(&self) -> usize {
        self.n_comps * self.n_points
    }

    /// All components of term `alpha`, concatenated.
    pub fn term(&self, alpha: usize) -> &[f64] {
        let l = self.term_len();
        &self.data[alpha * l..(alpha + 1) * l]
    }

    pub fn term_mut(&mut self, alpha: usize) -> &mut [f64] {
        let l = self.term_len();
        &mut self.data[alpha * l..(alpha + 1) * l]
    }

    pub fn coeff(&self, alpha: usize, comp: usize) -> &[f64] {
        let start = (alpha * self.n_comps + comp) * self.n_points;
        &self.data[start..start + self.n_points]
    }

    pub fn coeff_mut(&mut self, alpha: usize, comp: usize) -> &mut [f64] {
        let start = (alpha * self.n_comps + comp) * self.n_points;
        &mut self.data[start..start + self.n_points]
    }

    pub fn mean(&self, comp: usize) -> Vec<f64> {
        self.coeff(0, comp).to_vec()
    }

    /// Pointwise variance `sum_{alpha > 0} u_alpha^2`.
    pub fn variance(&self, comp: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n_points];
        for alpha in 1..self.n_terms {
            for (acc, x) in v.iter_mut().zip(self.coeff(alpha, comp)) {
                *acc += x * x;
            }
        }
        v
    }

    /// Extracts a subset of components as a new expansion.
    pub fn select_components(&self, comps: &[usize]) -> PCExpansion {
        let mut out = PCExpansion::zeros(self.n_terms, comps.len(), self.n_points);
        out.time = self.time;
        for alpha in 0..self.n_terms {
            for (i, &c) in comps.iter().enumerate() {
                out.coeff_mut(alpha, i)
                    .copy_from_slice(self.coeff(alpha, c));
            }
        }
        out
    }

    /// Stacks the components of two expansions sharing the same terms.
    pub fn stack(&self, other: &PCExpansion) -> Result<PCExpansion> {
        if self.n_terms != other.n_terms || self.n_points != other.n_points {
            return Err(DgpcError::usage(
                "cannot stack expansions over different bases or grids",
            ));
        }
        let mut out = PCExpansion::zeros(self.n_terms, self.n_comps + other.n_comps, self.n_points);
        out.time = self.time;
        for alpha in 0..self.n_terms {
            let (a, b) = (self.term(alpha), other.term(alpha));
            let t = out.term_mut(alpha);
            t[..a.len()].copy_from_slice(a);
            t[a.len()..].copy_from_slice(b);
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_variance() {
        let mut p = PCExpansion::zeros(3, 1, 2);
        p.coeff_mut(0, 0).copy_from_slice(&[1.0, 2.0]);
        p.coeff_mut(1, 0).copy_from_slice(&[3.0, 0.0]);
        p.coeff_mut(2, 0).copy_from_slice(&[4.0, 1.0]);
        assert_eq!(p.mean(0), vec![1.0, 2.0]);
        assert_eq!(p.variance(0), vec![25.0, 1.0]);
    }

    #[test]
    fn stack_and_select_round_trip() {
        let a = PCExpansion::from_data(2, 1, 2, vec![1.0, 2.0, 3.0, 4.0], 0.5).unwrap();
        let b = PCExpansion::from_data(2, 1, 2, vec![5.0, 6.0, 7.0, 8.0], 0.5).unwrap();
        let s = a.stack(&b).unwrap();
        assert_eq!(s.coeff(1, 1), &[7.0, 8.0]);
        assert_eq!(s.select_components(&[0]), a);
        assert!(a.stack(&PCExpansion::zeros(3, 1, 2)).is_err());
    }
}
