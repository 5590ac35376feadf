//! Random viscosity fields expressed through an auxiliary random parameter
//! field `Z` whose expansion is tracked alongside the solution.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::galerkin_product;
use crate::basis::ChaosBasis;
use crate::error::{DgpcError, Result};
use crate::multiindex::MultiIndexSet;
use crate::pce::PCExpansion;
use crate::spectral::Grid;

/// Relative eigenvalue floor below which kernel modes are discarded.
const EIGEN_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RandomViscosity {
    /// `nu = offset + Z^2` where `Z` is a centered periodic process with
    /// covariance `amplitude^2 exp(-(2 / length^2) sin^2(pi (x - y)))`,
    /// truncated to `modes` KL terms with uniform `U(-1, 1)` weights.
    SquaredKernel {
        offset: f64,
        amplitude: f64,
        correlation_length: f64,
        modes: usize,
    },
    /// Spatially constant `nu ~ U(low, high)`.
    Uniform { low: f64, high: f64 },
}

/// Draws pointwise viscosity fields from the uniform variables.
#[derive(Clone, Debug)]
pub struct ViscositySampler {
    n_vars: usize,
    n_points: usize,
    base: f64,
    /// Field multiplying each uniform variable (the parameter `Z` is their
    /// sum).
    fields: Vec<Vec<f64>>,
    squared: bool,
}

impl ViscositySampler {
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// `offset + Z^2` or `mean + Z` for one draw `uniforms` in `[-1, 1]`.
    pub fn realize(&self, uniforms: &[f64]) -> Result<Vec<f64>> {
        if uniforms.len() != self.n_vars {
            return Err(DgpcError::usage(format!(
                "{} uniform values for {} viscosity variables",
                uniforms.len(),
                self.n_vars
            )));
        }
        let mut z = vec![0.0; self.n_points];
        for (f, u) in self.fields.iter().zip(uniforms) {
            for (o, v) in z.iter_mut().zip(f) {
                *o += u * v;
            }
        }
        Ok(if self.squared {
            z.iter().map(|z| self.base + z * z).collect()
        } else {
            z.iter().map(|z| self.base + z).collect()
        })
    }
}

/// Periodic kernel eigenpairs normalized so that `mean(phi_l^2) = 1`.
#[derive(Clone, Debug)]
pub struct KernelModes {
    pub eigenvalues: Vec<f64>,
    pub modes: Vec<Vec<f64>>,
}

impl RandomViscosity {
    /// Uniform variables introduced on the first interval.
    pub fn n_vars(&self) -> usize {
        match self {
            RandomViscosity::SquaredKernel { modes, .. } => *modes,
            RandomViscosity::Uniform { .. } => 1,
        }
    }

    pub fn validate(&self, errors: &mut Vec<String>) {
        match *self {
            RandomViscosity::SquaredKernel {
                offset,
                amplitude,
                correlation_length,
                modes,
            } => {
                if !(offset > 0.0) {
                    errors.push("viscosity.offset must be positive".into());
                }
                if !(amplitude >= 0.0) {
                    errors.push("viscosity.amplitude must be nonnegative".into());
                }
                if !(correlation_length > 0.0) {
                    errors.push("viscosity.correlation_length must be positive".into());
                }
                if modes == 0 {
                    errors.push("viscosity.modes must be at least 1".into());
                }
            }
            RandomViscosity::Uniform { low, high } => {
                if !(low > 0.0 && high >= low) {
                    errors.push("viscosity bounds must satisfy 0 < low <= high".into());
                }
            }
        }
    }

    /// Expansion of `Z` over a basis whose variables after the first
    /// `set.n_forcing()` are the uniforms `U_l`, so that the first-degree
    /// polynomials are `sqrt(3) U_l`.
    pub fn initial_parameter(&self, grid: &Grid, set: &MultiIndexSet) -> Result<PCExpansion> {
        let k = set.n_forcing();
        if set.n_modes() < self.n_vars() {
            return Err(DgpcError::usage("basis lacks the viscosity variables"));
        }
        let np = grid.n_points();
        let mut z = PCExpansion::zeros(set.len(), 1, np);
        let unit = |l: usize| {
            set.unit_position(k + l).ok_or_else(|| {
                DgpcError::usage(format!(
                    "basis lacks first-degree term in variable {}",
                    k + l
                ))
            })
        };
        match *self {
            RandomViscosity::SquaredKernel {
                amplitude,
                correlation_length,
                modes,
                ..
            } => {
                let km = periodic_kernel_modes(grid, amplitude, correlation_length, modes)?;
                for (l, (lam, phi)) in km.eigenvalues.iter().zip(&km.modes).enumerate() {
                    let c = (lam / 3.0).sqrt();
                    let a = unit(l)?;
                    for (o, p) in z.coeff_mut(a, 0).iter_mut().zip(phi) {
                        *o = c * p;
                    }
                }
            }
            RandomViscosity::Uniform { low, high } => {
                z.coeff_mut(0, 0).fill(0.5 * (low + high));
                let a = unit(0)?;
                z.coeff_mut(a, 0).fill(0.5 * (high - low) / 3f64.sqrt());
            }
        }
        Ok(z)
    }

    /// Viscosity expansion as a function of the parameter expansion.
    pub fn viscosity(
        &self,
        z: &PCExpansion,
        basis: &ChaosBasis,
        grid: &Grid,
    ) -> Result<PCExpansion> {
        match *self {
            RandomViscosity::SquaredKernel { offset, .. } => {
                let mut nu = galerkin_product(z, z, basis, grid)?;
                nu.coeff_mut(0, 0).iter_mut().for_each(|v| *v += offset);
                Ok(nu)
            }
            RandomViscosity::Uniform { .. } => Ok(z.clone()),
        }
    }

    /// Precomputes what is needed to draw viscosity realizations.
    pub fn sampler(&self, grid: &Grid) -> Result<ViscositySampler> {
        Ok(match *self {
            RandomViscosity::SquaredKernel {
                offset,
                amplitude,
                correlation_length,
                modes,
            } => {
                let km = periodic_kernel_modes(grid, amplitude, correlation_length, modes)?;
                let fields = km
                    .eigenvalues
                    .iter()
                    .zip(&km.modes)
                    .map(|(lam, phi)| phi.iter().map(|p| lam.sqrt() * p).collect())
                    .collect();
                ViscositySampler {
                    n_vars: modes,
                    n_points: grid.n_points(),
                    base: offset,
                    fields,
                    squared: true,
                }
            }
            RandomViscosity::Uniform { low, high } => ViscositySampler {
                n_vars: 1,
                n_points: grid.n_points(),
                base: 0.5 * (low + high),
                fields: vec![vec![0.5 * (high - low); grid.n_points()]],
                squared: false,
            },
        })
    }

    /// Lower bound on every realization of the viscosity.
    pub fn lower_bound(&self) -> f64 {
        match *self {
            RandomViscosity::SquaredKernel { offset, .. } => offset,
            RandomViscosity::Uniform { low, .. } => low,
        }
    }
}

/// Top `count` eigenpairs of the periodic exponential kernel on the grid,
/// using that the kernel matrix is circulant with Fourier eigenvectors.
pub fn periodic_kernel_modes(
    grid: &Grid,
    amplitude: f64,
    length: f64,
    count: usize,
) -> Result<KernelModes> {
    if grid.dim() != 1 {
        return Err(DgpcError::usage("kernel viscosity is defined on 1-D grids"));
    }
    let m = grid.m();
    let row: Vec<f64> = (0..m)
        .map(|j| periodic_kernel(j as f64 / m as f64, amplitude, length))
        .collect();
    // (wavenumber, is_sine)
    let mut cand: Vec<(f64, usize, bool)> = Vec::new();
    for k in 0..=m / 2 {
        let lam = row
            .iter()
            .enumerate()
            .map(|(j, c)| c * (2.0 * PI * (k * j) as f64 / m as f64).cos())
            .sum::<f64>()
            / m as f64;
        cand.push((lam, k, false));
        if k != 0 && k != m / 2 {
            cand.push((lam, k, true));
        }
    }
    cand.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let top = cand.first().map_or(0.0, |c| c.0);
    let mut out = KernelModes {
        eigenvalues: Vec::new(),
        modes: Vec::new(),
    };
    for &(lam, k, sine) in cand.iter().take(count) {
        if !(lam > EIGEN_FLOOR * top) {
            log::warn!(
                "kernel eigenvalue {lam:e} below floor; keeping {} modes",
                out.eigenvalues.len()
            );
            break;
        }
        let scale = if k == 0 || k == m / 2 {
            1.0
        } else {
            2f64.sqrt()
        };
        let phi = grid.sample(|x, _| {
            let a = 2.0 * PI * k as f64 * x;
            scale * if sine { a.sin() } else { a.cos() }
        });
        out.eigenvalues.push(lam);
        out.modes.push(phi);
    }
    Ok(out)
}

pub fn periodic_kernel(d: f64, amplitude: f64, length: f64) -> f64 {
    amplitude * amplitude * (-(2.0 / (length * length)) * (PI * d).sin().powi(2)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{assemble_moment_table, block_patterns, uniform_moments};
    use crate::multiindex::{build_sparse_set, triple_closure, SparseIndex};
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn legendre_basis(k: usize, d: usize) -> ChaosBasis {
        let set = build_sparse_set(k, d, 2, &SparseIndex::full(k + d, 2)).unwrap();
        let closure = triple_closure(&set);
        let block = uniform_moments(&block_patterns(&closure));
        let table = assemble_moment_table(k, block, &closure).unwrap();
        ChaosBasis::from_moments(set, &table).unwrap()
    }

    #[test]
    fn kernel_modes_match_dense_eigensolve() {
        let grid = Grid::new(32, 1).unwrap();
        let km = periodic_kernel_modes(&grid, 0.1, 2.0, 5).unwrap();
        let m = 32;
        let c = DMatrix::from_fn(m, m, |i, j| {
            periodic_kernel((i as f64 - j as f64) / m as f64, 0.1, 2.0) / m as f64
        });
        let mut ev: Vec<f64> = SymmetricEigen::new(c.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in km.eigenvalues.iter().zip(&ev) {
            assert!((a - b).abs() < 1e-10 * ev[0]);
        }
        for (lam, phi) in km.eigenvalues.iter().zip(&km.modes) {
            let cphi = &c * nalgebra::DVector::from_column_slice(phi);
            for i in 0..m {
                assert!((cphi[i] - lam * phi[i]).abs() < 1e-12);
            }
            let norm = phi.iter().map(|v| v * v).sum::<f64>() / m as f64;
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_amplitude_gives_deterministic_viscosity() {
        let grid = Grid::new(16, 1).unwrap();
        let basis = legendre_basis(1, 2);
        let rv = RandomViscosity::SquaredKernel {
            offset: 0.005,
            amplitude: 0.0,
            correlation_length: 2.0,
            modes: 2,
        };
        // zero amplitude leaves no modes above the floor
        let z = rv.initial_parameter(&grid, basis.set()).unwrap();
        let nu = rv.viscosity(&z, &basis, &grid).unwrap();
        assert!(nu.coeff(0, 0).iter().all(|v| *v == 0.005));
        assert!(nu.variance(0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn mean_viscosity_matches_sampling() {
        let grid = Grid::new(32, 1).unwrap();
        let basis = legendre_basis(1, 3);
        let (offset, amp, len) = (0.005, 0.1, 2.0);
        let rv = RandomViscosity::SquaredKernel {
            offset,
            amplitude: amp,
            correlation_length: len,
            modes: 3,
        };
        let z = rv.initial_parameter(&grid, basis.set()).unwrap();
        let nu = rv.viscosity(&z, &basis, &grid).unwrap();
        let km = periodic_kernel_modes(&grid, amp, len, 3).unwrap();
        let analytic = offset + km.eigenvalues.iter().sum::<f64>() / 3.0;
        let spatial_mean = nu.coeff(0, 0).iter().sum::<f64>() / 32.0;
        assert!((spatial_mean - analytic).abs() < 1e-14);
        // pointwise against Monte Carlo over U
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 200_000;
        let mut acc = vec![0.0; 32];
        for _ in 0..n {
            let u: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            for (i, a) in acc.iter_mut().enumerate() {
                let zx: f64 = (0..3)
                    .map(|l| km.eigenvalues[l].sqrt() * u[l] * km.modes[l][i])
                    .sum();
                *a += offset + zx * zx;
            }
        }
        for i in 0..32 {
            let mc = acc[i] / n as f64;
            assert!((mc - nu.coeff(0, 0)[i]).abs() < 0.01 * nu.coeff(0, 0)[i]);
            assert!(nu.coeff(0, 0)[i] >= offset);
        }
        // Galerkin square is exact: realizations agree with the expansion
        let u = [0.3, -0.7, 0.9];
        let point = [0.0, u[0], u[1], u[2]];
        let t = basis.evaluate(&point).unwrap();
        for i in 0..32 {
            let zx: f64 = (0..3)
                .map(|l| km.eigenvalues[l].sqrt() * u[l] * km.modes[l][i])
                .sum();
            let val: f64 = (0..basis.len()).map(|a| nu.coeff(a, 0)[i] * t[a]).sum();
            assert!((val - (offset + zx * zx)).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_viscosity_expansion() {
        let grid = Grid::new(8, 2).unwrap();
        let basis = legendre_basis(2, 1);
        let rv = RandomViscosity::Uniform {
            low: 0.0002,
            high: 0.0004,
        };
        let z = rv.initial_parameter(&grid, basis.set()).unwrap();
        let nu = rv.viscosity(&z, &basis, &grid).unwrap();
        assert!((nu.coeff(0, 0)[0] - 0.0003).abs() < 1e-18);
        let var = nu.variance(0)[0];
        assert!((var - 0.0002f64.powi(2) / 12.0).abs() < 1e-20);
    }

    #[test]
    fn sampler_matches_expansion() {
        let grid = Grid::new(16, 1).unwrap();
        let basis = legendre_basis(1, 2);
        let rv = RandomViscosity::SquaredKernel {
            offset: 0.01,
            amplitude: 0.2,
            correlation_length: 1.0,
            modes: 2,
        };
        let z = rv.initial_parameter(&grid, basis.set()).unwrap();
        let nu = rv.viscosity(&z, &basis, &grid).unwrap();
        let u = [0.4, -0.8];
        let drawn = rv.sampler(&grid).unwrap().realize(&u).unwrap();
        let t = basis.evaluate(&[0.0, u[0], u[1]]).unwrap();
        for i in 0..16 {
            let val: f64 = (0..basis.len()).map(|a| nu.coeff(a, 0)[i] * t[a]).sum();
            assert!((val - drawn[i]).abs() < 1e-12);
        }
        let uni = RandomViscosity::Uniform {
            low: 1.0,
            high: 3.0,
        }
        .sampler(&grid)
        .unwrap();
        assert_eq!(uni.realize(&[-1.0]).unwrap()[3], 1.0);
        assert!(uni.realize(&[0.0, 1.0]).is_err());
    }
}
