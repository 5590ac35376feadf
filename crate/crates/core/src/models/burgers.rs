use super::{bilinear, forcing_factors, reference_viscosity, Interval, Workspace};
use crate::error::{DgpcError, Result};
use crate::spectral::{Grid, C64};

/// Viscous Burgers `u_t + (u^2/2)_x = (nu u_x)_x + sigma(x) dW/dt` on the
/// periodic unit interval.
#[derive(Clone, Debug)]
pub struct Burgers {
    grid: Grid,
    nu: f64,
    sigma_hat: Vec<C64>,
    advect: bool,
}

impl Burgers {
    pub fn new(grid: Grid, nu: f64, sigma: &[f64]) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(DgpcError::config("Burgers requires a 1-D grid"));
        }
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(DgpcError::config(format!(
                "viscosity must be nonnegative, got {nu}"
            )));
        }
        let sigma_hat = grid.to_modal(sigma)?;
        Ok(Burgers {
            grid,
            nu,
            sigma_hat,
            advect: true,
        })
    }

    /// Disables the advection term, leaving the linear stochastic heat
    /// equation.
    pub fn without_advection(mut self) -> Self {
        self.advect = false;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn sigma_hat(&self) -> &[C64] {
        &self.sigma_hat
    }

    pub(super) fn linear_rates(&self, reference: Option<f64>) -> Vec<f64> {
        let nu = reference.unwrap_or(self.nu);
        self.grid
            .laplacian_symbol()
            .iter()
            .map(|l| nu * l)
            .collect()
    }

    pub(super) fn forcing_fields(&self) -> Vec<Vec<(usize, Vec<C64>)>> {
        vec![vec![(0, self.sigma_hat.clone())]]
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
        let (np, nm, j) = (g.n_points(), g.n_modal(), iv.basis.len());
        let ik = g.ik(0);
        let keep = g.dealias_mask();
        let triple = iv.basis.triple();
        let Workspace {
            tr, phys, modal, ..
        } = ws;
        let [u, prod, ux, nu_var, ..] = phys.as_mut_slice() else {
            return Err(DgpcError::internal("Burgers workspace too small"));
        };
        super::zero(out);

        if self.advect {
            for a in 0..j {
                tr.inverse(&state[a * nm..(a + 1) * nm], &mut u[a * np..(a + 1) * np]);
            }
            bilinear(triple, u, u, np, prod);
            for a in 0..j {
                tr.forward(&prod[a * np..(a + 1) * np], modal);
                let o = &mut out[a * nm..(a + 1) * nm];
                for k in 0..nm {
                    if keep[k] {
                        o[k] -= 0.5 * ik[k] * modal[k];
                    }
                }
            }
        }

        if let Some(v) = iv.viscosity {
            // explicit part (nu - nu_ref) of the divergence-form diffusion
            let nu_ref = reference_viscosity(v);
            nu_var[..j * np].copy_from_slice(&v.data()[..j * np]);
            nu_var[..np].iter_mut().for_each(|x| *x -= nu_ref);
            for a in 0..j {
                for k in 0..nm {
                    modal[k] = ik[k] * state[a * nm + k];
                }
                tr.inverse(modal, &mut ux[a * np..(a + 1) * np]);
            }
            bilinear(triple, nu_var, ux, np, prod);
            for a in 0..j {
                tr.forward(&prod[a * np..(a + 1) * np], modal);
                let o = &mut out[a * nm..(a + 1) * nm];
                for k in 0..nm {
                    if keep[k] {
                        o[k] += ik[k] * modal[k];
                    }
                }
            }
        }

        let factors = forcing_factors(iv, t, 1);
        for (a, &f) in factors[0].iter().enumerate() {
            if f != 0.0 {
                for (o, s) in out[a * nm..(a + 1) * nm].iter_mut().zip(&self.sigma_hat) {
                    *o += f * s;
                }
            }
        }
        Ok(())
    }
}
