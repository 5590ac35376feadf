use super::{bilinear, forcing_factors, reference_viscosity, Interval, Workspace};
use crate::error::{DgpcError, Result};
use crate::spectral::{poisson_into, Grid, C64};

/// Tolerance on the zero mode of every vorticity coefficient.
const MEAN_TOL: f64 = 1e-10;

/// Vorticity form of 2-D incompressible Navier–Stokes with an optional
/// passive temperature:
/// `w_t + (u w)_x + (v w)_y = nu Lap w + f2 dW2 - f1 dW1`,
/// `theta_t + (u theta)_x + (v theta)_y = mu Lap theta`,
/// `-Lap psi = w`, `u = psi_y`, `v = -psi_x`.
///
/// `f1` is the y-derivative of the first forcing component and `f2` the
/// x-derivative of the second.
#[derive(Clone, Debug)]
pub struct NavierStokes {
    grid: Grid,
    nu: f64,
    mu: Option<f64>,
    mu_follows_nu: bool,
    f1_hat: Vec<C64>,
    f2_hat: Vec<C64>,
}

impl NavierStokes {
    pub fn new(grid: Grid, nu: f64, mu: Option<f64>, f1: &[f64], f2: &[f64]) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(DgpcError::config("Navier–Stokes requires a 2-D grid"));
        }
        if !(nu >= 0.0 && nu.is_finite()) || mu.is_some_and(|m| !(m >= 0.0 && m.is_finite())) {
            return Err(DgpcError::config(
                "viscosity and diffusivity must be nonnegative",
            ));
        }
        let f1_hat = grid.to_modal(f1)?;
        let f2_hat = grid.to_modal(f2)?;
        let scale = f1_hat
            .iter()
            .chain(&f2_hat)
            .fold(0.0f64, |m, v| m.max(v.norm()));
        if f1_hat[0].norm() > MEAN_TOL * scale.max(1.0)
            || f2_hat[0].norm() > MEAN_TOL * scale.max(1.0)
        {
            return Err(DgpcError::config(
                "vorticity forcing must have zero spatial mean",
            ));
        }
        Ok(NavierStokes {
            grid,
            nu,
            mu,
            mu_follows_nu: false,
            f1_hat,
            f2_hat,
        })
    }

    /// Uses the (possibly random) viscosity for the temperature as well.
    pub fn with_diffusivity_tracking_viscosity(mut self) -> Self {
        self.mu_follows_nu = true;
        if self.mu.is_some() {
            self.mu = Some(self.nu);
        }
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn mu(&self) -> Option<f64> {
        self.mu
    }

    pub fn n_components(&self) -> usize {
        if self.mu.is_some() {
            2
        } else {
            1
        }
    }

    pub(super) fn linear_rates(&self, reference: Option<f64>) -> Vec<f64> {
        let nu = reference.unwrap_or(self.nu);
        let lap = self.grid.laplacian_symbol();
        let mut rates: Vec<f64> = lap.iter().map(|l| nu * l).collect();
        if let Some(mu) = self.mu {
            let mu = if self.mu_follows_nu { nu } else { mu };
            rates.extend(lap.iter().map(|l| mu * l));
        }
        rates
    }

    pub(super) fn forcing_fields(&self) -> Vec<Vec<(usize, Vec<C64>)>> {
        vec![
            vec![(0, self.f1_hat.iter().map(|v| -v).collect())],
            vec![(0, self.f2_hat.clone())],
        ]
    }

    pub(super) fn rhs(
        &self,
        iv: &Interval,
        t: f64,
        state: &[C64],
        out: &mut [C64],
        ws: &mut Workspace,
    ) -> Result<()> {
        let g = &self.grid;
        let nc = self.n_components();
        let (np, nm, j) = (g.n_points(), g.n_modal(), iv.basis.len());
        let (ikx, iky) = (g.ik(0), g.ik(1));
        let keep = g.dealias_mask();
        let lap = g.laplacian_symbol();
        let triple = iv.basis.triple();
        let Workspace {
            tr, phys, modal, ..
        } = ws;
        let [u, v, w, th, p1, p2, nu_var, grad] = phys.as_mut_slice() else {
            return Err(DgpcError::internal("Navier–Stokes workspace too small"));
        };
        super::zero(out);

        let mut psi = vec![C64::new(0.0, 0.0); nm];
        for a in 0..j {
            let wa = &state[a * nc * nm..a * nc * nm + nm];
            let scale = wa.iter().fold(1.0f64, |m, z| m.max(z.norm()));
            if wa[0].norm() > MEAN_TOL * scale {
                return Err(DgpcError::usage(format!(
                    "vorticity coefficient {a} has nonzero spatial mean {}",
                    wa[0].re
                )));
            }
            poisson_into(lap, wa, &mut psi);
            let sl = a * np..(a + 1) * np;
            for k in 0..nm {
                modal[k] = iky[k] * psi[k];
            }
            tr.inverse(modal, &mut u[sl.clone()]);
            for k in 0..nm {
                modal[k] = -ikx[k] * psi[k];
            }
            tr.inverse(modal, &mut v[sl.clone()]);
            tr.inverse(wa, &mut w[sl.clone()]);
            if nc == 2 {
                tr.inverse(&state[a * nc * nm + nm..(a + 1) * nc * nm], &mut th[sl]);
            }
        }

        // -div(u q) for q = w and, when present, theta
        for c in 0..nc {
            let q: &[f64] = if c == 0 { w } else { th };
            bilinear(triple, u, q, np, p1);
            bilinear(triple, v, q, np, p2);
            for a in 0..j {
                let o = &mut out[(a * nc + c) * nm..(a * nc + c + 1) * nm];
                tr.forward(&p1[a * np..(a + 1) * np], modal);
                for k in 0..nm {
                    if keep[k] {
                        o[k] -= ikx[k] * modal[k];
                    }
                }
                tr.forward(&p2[a * np..(a + 1) * np], modal);
                for k in 0..nm {
                    if keep[k] {
                        o[k] -= iky[k] * modal[k];
                    }
                }
            }
        }

        if let Some(visc) = iv.viscosity {
            // explicit part div((nu - nu_ref) grad q)
            let nu_ref = reference_viscosity(visc);
            nu_var[..j * np].copy_from_slice(&visc.data()[..j * np]);
            nu_var[..np].iter_mut().for_each(|x| *x -= nu_ref);
            let comps = if self.mu_follows_nu { nc } else { 1 };
            for c in 0..comps {
                for ik in [ikx, iky] {
                    for a in 0..j {
                        let s = &state[(a * nc + c) * nm..(a * nc + c + 1) * nm];
                        for k in 0..nm {
                            modal[k] = ik[k] * s[k];
                        }
                        tr.inverse(modal, &mut grad[a * np..(a + 1) * np]);
                    }
                    bilinear(triple, nu_var, grad, np, p1);
                    for a in 0..j {
                        tr.forward(&p1[a * np..(a + 1) * np], modal);
                        let o = &mut out[(a * nc + c) * nm..(a * nc + c + 1) * nm];
                        for k in 0..nm {
                            if keep[k] {
                                o[k] += ik[k] * modal[k];
                            }
                        }
                    }
                }
            }
        }

        let factors = forcing_factors(iv, t, 2);
        for a in 0..j {
            let (c1, c2) = (factors[0][a], factors[1][a]);
            if c1 == 0.0 && c2 == 0.0 {
                continue;
            }
            let o = &mut out[a * nc * nm..a * nc * nm + nm];
            for k in 0..nm {
                o[k] += c2 * self.f2_hat[k] - c1 * self.f1_hat[k];
            }
        }
        Ok(())
    }

    /// Velocity `(u, v)` of one modal vorticity coefficient.
    pub fn velocity(&self, w_hat: &[C64]) -> Result<(Vec<C64>, Vec<C64>)> {
        let psi = self.grid.poisson_solve(w_hat)?;
        let u = psi
            .iter()
            .zip(self.grid.ik(1))
            .map(|(p, k)| k * p)
            .collect();
        let v = psi
            .iter()
            .zip(self.grid.ik(0))
            .map(|(p, k)| -k * p)
            .collect();
        Ok((u, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::ChaosBasis;
    use crate::forcing::cosine_basis;
    use crate::models::{deterministic_basis, initial, Model};
    use crate::multiindex::{build_sparse_set, SparseIndex};
    use crate::pce::PCExpansion;
    use crate::spectral::{AdamsPc4, Etd2};
    use std::f64::consts::PI;

    fn taylor_green(grid: &Grid) -> Vec<f64> {
        grid.sample(|x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).sin())
    }

    #[test]
    fn taylor_green_decays_at_viscous_rate() {
        let grid = Grid::new(16, 2).unwrap();
        let nu = 0.01;
        let zero = vec![0.0; 256];
        let model =
            Model::NavierStokes(NavierStokes::new(grid.clone(), nu, None, &zero, &zero).unwrap());
        let basis = deterministic_basis().unwrap();
        let iv = Interval {
            basis: &basis,
            forcing: None,
            viscosity: None,
        };
        let mut state = grid.to_modal(&taylor_green(&grid)).unwrap();
        let amp0 = state.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut ws = model.workspace(1);
        let dt = 0.01;
        let mut stepper = AdamsPc4::new(&model.linear_rates(None), dt);
        let mut rhs = |t: f64, s: &[C64], o: &mut [C64]| model.rhs(&iv, t, s, o, &mut ws);
        for n in 0..50 {
            stepper.step(&mut state, n as f64 * dt, &mut rhs).unwrap();
        }
        let amp = state.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let expect = (-8.0 * PI * PI * nu * 0.5).exp();
        assert!(
            (amp / amp0 - expect).abs() < 1e-8,
            "{} vs {expect}",
            amp / amp0
        );
    }

    #[test]
    fn uniform_temperature_stays_uniform_and_flow_is_incompressible() {
        let grid = Grid::new(16, 2).unwrap();
        let f1 = grid.sample(|x, y| 0.1 * PI * (2.0 * PI * x).cos() * (2.0 * PI * y).cos());
        let f2 = grid.sample(|x, y| 0.1 * PI * (2.0 * PI * x).cos() * (2.0 * PI * y).sin());
        let ns = NavierStokes::new(grid.clone(), 0.001, Some(0.001), &f1, &f2).unwrap();
        let model = Model::NavierStokes(ns.clone());
        let basis =
            ChaosBasis::hermite(build_sparse_set(2, 0, 2, &SparseIndex::full(2, 2)).unwrap())
                .unwrap();
        let fb = cosine_basis(0.0, 0.1, 1, 2).unwrap();
        let iv = Interval {
            basis: &basis,
            forcing: Some(&fb),
            viscosity: None,
        };
        let mut pce = PCExpansion::zeros(basis.len(), 2, 256);
        pce.coeff_mut(0, 0)
            .copy_from_slice(&initial::shear_layer(&grid, 0.1, 0.3, 2, false).unwrap());
        pce.coeff_mut(0, 1).fill(0.4);
        let mut state = model.to_modal_state(&pce).unwrap();
        let mut ws = model.workspace(basis.len());
        let mut stepper = Etd2::new(&model.linear_rates(None), 0.005);
        let mut rhs = |t: f64, s: &[C64], o: &mut [C64]| model.rhs(&iv, t, s, o, &mut ws);
        for n in 0..20 {
            stepper
                .step(&mut state, n as f64 * 0.005, &mut rhs)
                .unwrap();
        }
        let out = model.to_physical_pce(&state, basis.len(), 0.1).unwrap();
        assert!(out.coeff(0, 1).iter().all(|v| (v - 0.4).abs() < 1e-13));
        for a in 1..basis.len() {
            assert!(out.coeff(a, 1).iter().all(|v| v.abs() < 1e-13));
        }
        let nm = grid.n_modal();
        for a in 0..basis.len() {
            let wa = &state[a * 2 * nm..a * 2 * nm + nm];
            assert!(wa[0].norm() < 1e-14);
            let (u, v) = ns.velocity(wa).unwrap();
            let div: f64 = (0..nm)
                .map(|k| (grid.ik(0)[k] * u[k] + grid.ik(1)[k] * v[k]).norm())
                .fold(0.0, f64::max);
            assert!(div < 1e-12);
        }
    }

    #[test]
    fn mean_vorticity_is_rejected() {
        let grid = Grid::new(8, 2).unwrap();
        let zero = vec![0.0; 64];
        let model =
            Model::NavierStokes(NavierStokes::new(grid.clone(), 0.01, None, &zero, &zero).unwrap());
        let basis = deterministic_basis().unwrap();
        let iv = Interval {
            basis: &basis,
            forcing: None,
            viscosity: None,
        };
        let state = grid.to_modal(&vec![1.0; 64]).unwrap();
        let mut out = state.clone();
        let mut ws = model.workspace(1);
        assert!(matches!(
            model.rhs(&iv, 0.0, &state, &mut out, &mut ws),
            Err(DgpcError::Usage(_))
        ));
    }
}
