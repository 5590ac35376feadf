//! Galerkin right-hand sides of the chaos-coefficient systems, initial
//! conditions, random viscosity construction and the exact-moment oracle.

mod burgers;
pub mod exact;
pub mod initial;
mod ns;
pub mod viscosity;

pub use burgers::Burgers;
pub use ns::NavierStokes;

use num_complex::Complex64;

use crate::basis::{ChaosBasis, TripleTensor};
use crate::error::{DgpcError, Result};
use crate::forcing::ForcingBasis;
use crate::multiindex::MultiIndexSet;
use crate::pce::PCExpansion;
use crate::spectral::{Grid, Transformer, C64};

/// Everything a right-hand side evaluation needs besides the state.
#[derive(Clone, Copy)]
pub struct Interval<'a> {
    pub basis: &'a ChaosBasis,
    /// Projection of the Brownian forcing; `None` disables stochastic forcing.
    pub forcing: Option<&'a ForcingBasis>,
    /// Random viscosity as a one-component expansion over `basis`.
    pub viscosity: Option<&'a PCExpansion>,
}

/// Scratch buffers for right-hand side evaluations.
pub struct Workspace {
    pub(crate) tr: Transformer,
    pub(crate) phys: Vec<Vec<f64>>,
    pub(crate) modal: Vec<C64>,
}

impl Workspace {
    fn new(grid: &Grid, n_terms: usize, n_buffers: usize) -> Self {
        Workspace {
            tr: grid.transformer(),
            phys: vec![vec![0.0; n_terms * grid.n_points()]; n_buffers],
            modal: vec![C64::new(0.0, 0.0); grid.n_modal()],
        }
    }
}

/// Problem definition: stochastic Burgers or Navier–Stokes.
#[derive(Clone, Debug)]
pub enum Model {
    Burgers(Burgers),
    NavierStokes(NavierStokes),
}

impl Model {
    pub fn grid(&self) -> &Grid {
        match self {
            Model::Burgers(m) => m.grid(),
            Model::NavierStokes(m) => m.grid(),
        }
    }

    /// Evolved solution components (`u`, or `w` and optionally `theta`).
    pub fn n_components(&self) -> usize {
        match self {
            Model::Burgers(_) => 1,
            Model::NavierStokes(m) => m.n_components(),
        }
    }

    pub fn component_names(&self) -> Vec<&'static str> {
        match self {
            Model::Burgers(_) => vec!["u"],
            Model::NavierStokes(m) => {
                if m.n_components() == 2 {
                    vec!["w", "theta"]
                } else {
                    vec!["w"]
                }
            }
        }
    }

    /// Independent Brownian components driving the system.
    pub fn n_brownian(&self) -> usize {
        match self {
            Model::Burgers(_) => 1,
            Model::NavierStokes(_) => 2,
        }
    }

    /// Deterministic viscosity used in the stiff linear part when no random
    /// viscosity is present.
    pub fn viscosity(&self) -> f64 {
        match self {
            Model::Burgers(m) => m.nu(),
            Model::NavierStokes(m) => m.nu(),
        }
    }

    /// Diagonal stiff rates per `(component, mode)`. With a random viscosity
    /// the spatial average of its mean enters here and the remainder is
    /// treated explicitly.
    pub fn linear_rates(&self, viscosity: Option<&PCExpansion>) -> Vec<f64> {
        let reference = viscosity.map(reference_viscosity);
        match self {
            Model::Burgers(m) => m.linear_rates(reference),
            Model::NavierStokes(m) => m.linear_rates(reference),
        }
    }

    pub fn workspace(&self, n_terms: usize) -> Workspace {
        match self {
            Model::Burgers(m) => Workspace::new(m.grid(), n_terms, 4),
            Model::NavierStokes(m) => Workspace::new(m.grid(), n_terms, 8),
        }
    }

    /// Modal layout length of one chaos term (all components).
    pub fn term_modal_len(&self) -> usize {
        self.n_components() * self.grid().n_modal()
    }

    /// Nonlinear and forcing part of the coefficient equations.
    pub fn rhs(
        &self,
        iv: &Interval,
        t: f64,
        state: &[C64],
        out: &mut [C64],
        ws: &mut Workspace,
    ) -> Result<()> {
        let j = iv.basis.len();
        if state.len() != j * self.term_modal_len() || out.len() != state.len() {
            return Err(DgpcError::usage(format!(
                "state of length {} does not match {j} terms of {} modal values",
                state.len(),
                self.term_modal_len()
            )));
        }
        if let Some(v) = iv.viscosity {
            if v.n_terms() != j {
                return Err(DgpcError::usage(
                    "viscosity expansion does not match the basis",
                ));
            }
        }
        match self {
            Model::Burgers(m) => m.rhs(iv, t, state, out, ws),
            Model::NavierStokes(m) => m.rhs(iv, t, state, out, ws),
        }
    }

    /// Modal forcing fields: for each Brownian component, the list of
    /// `(solution component, spatial forcing)` it drives.
    pub fn forcing_fields(&self) -> Vec<Vec<(usize, Vec<C64>)>> {
        match self {
            Model::Burgers(m) => m.forcing_fields(),
            Model::NavierStokes(m) => m.forcing_fields(),
        }
    }

    /// Converts a physical expansion to the flattened modal state.
    pub fn to_modal_state(&self, pce: &PCExpansion) -> Result<Vec<C64>> {
        let g = self.grid();
        if pce.n_comps() != self.n_components() || pce.n_points() != g.n_points() {
            return Err(DgpcError::usage(
                "expansion does not match the model layout",
            ));
        }
        let nm = g.n_modal();
        let mut tr = g.transformer();
        let mut out = vec![C64::new(0.0, 0.0); pce.n_terms() * self.term_modal_len()];
        for a in 0..pce.n_terms() {
            for c in 0..pce.n_comps() {
                let off = (a * pce.n_comps() + c) * nm;
                tr.forward(pce.coeff(a, c), &mut out[off..off + nm]);
            }
        }
        Ok(out)
    }

    /// Inverse of [`Model::to_modal_state`].
    pub fn to_physical_pce(&self, state: &[C64], n_terms: usize, time: f64) -> Result<PCExpansion> {
        let g = self.grid();
        let nm = g.n_modal();
        let nc = self.n_components();
        if state.len() != n_terms * nc * nm {
            return Err(DgpcError::usage(
                "modal state does not match the model layout",
            ));
        }
        let mut pce = PCExpansion::zeros(n_terms, nc, g.n_points());
        pce.set_time(time);
        let mut tr = g.transformer();
        for a in 0..n_terms {
            for c in 0..nc {
                let off = (a * nc + c) * nm;
                tr.inverse(&state[off..off + nm], pce.coeff_mut(a, c));
            }
        }
        Ok(pce)
    }
}

/// Spatial average of the mean viscosity field.
pub fn reference_viscosity(v: &PCExpansion) -> f64 {
    let m = v.coeff(0, 0);
    m.iter().sum::<f64>() / m.len() as f64
}

/// `(a b)_c = sum_{a', b'} a_{a'} b_{b'} E[T_a' T_b' T_c]` pointwise, with
/// `a`, `b`, `out` laid out as `[term][point]`.
pub(crate) fn bilinear(triple: &TripleTensor, a: &[f64], b: &[f64], np: usize, out: &mut [f64]) {
    for (c, oc) in out.chunks_exact_mut(np).enumerate() {
        oc.fill(0.0);
        for &(p, q, v) in triple.entries(c) {
            let (p, q) = (p as usize, q as usize);
            let (ap, bq) = (&a[p * np..(p + 1) * np], &b[q * np..(q + 1) * np]);
            if p == q {
                for ((o, x), y) in oc.iter_mut().zip(ap).zip(bq) {
                    *o += v * x * y;
                }
            } else {
                let (aq, bp) = (&a[q * np..(q + 1) * np], &b[p * np..(p + 1) * np]);
                for i in 0..np {
                    oc[i] += v * (ap[i] * bq[i] + aq[i] * bp[i]);
                }
            }
        }
    }
}

/// Galerkin product of two expansions over the same basis; each output
/// coefficient is truncated to the 2/3-rule modes.
pub fn galerkin_product(
    u: &PCExpansion,
    v: &PCExpansion,
    basis: &ChaosBasis,
    grid: &Grid,
) -> Result<PCExpansion> {
    let j = basis.len();
    if u.n_terms() != j || v.n_terms() != j {
        return Err(DgpcError::usage(
            "Galerkin product of expansions over a different basis",
        ));
    }
    if u.n_comps() != v.n_comps()
        || u.n_points() != grid.n_points()
        || v.n_points() != grid.n_points()
    {
        return Err(DgpcError::usage("Galerkin product of mismatched fields"));
    }
    let np = grid.n_points();
    let mut out = PCExpansion::zeros(j, u.n_comps(), np);
    out.set_time(u.time());
    let mut tr = grid.transformer();
    let mut modal = vec![C64::new(0.0, 0.0); grid.n_modal()];
    for c in 0..u.n_comps() {
        let a: Vec<f64> = (0..j).flat_map(|t| u.coeff(t, c).iter().copied()).collect();
        let b: Vec<f64> = (0..j).flat_map(|t| v.coeff(t, c).iter().copied()).collect();
        let mut p = vec![0.0; j * np];
        bilinear(basis.triple(), &a, &b, np, &mut p);
        for t in 0..j {
            tr.forward(&p[t * np..(t + 1) * np], &mut modal);
            grid.apply_dealias(&mut modal);
            tr.inverse(&modal, out.coeff_mut(t, c));
        }
    }
    Ok(out)
}

/// Basis with the single constant term; turns the Galerkin system into the
/// deterministic PDE.
pub fn deterministic_basis() -> Result<ChaosBasis> {
    ChaosBasis::hermite(MultiIndexSet::from_indices(Vec::new(), 0, 0)?)
}

/// Per Brownian component, the time-dependent factor
/// `sum_i m_i(t) E[xi_i T_alpha]` for every term.
pub(crate) fn forcing_factors(iv: &Interval, t: f64, n_brownian: usize) -> Vec<Vec<f64>> {
    let j = iv.basis.len();
    let mut out = vec![vec![0.0; j]; n_brownian];
    let Some(fb) = iv.forcing else {
        return out;
    };
    let f = iv.basis.forcing();
    for (var, coeffs) in f.iter().enumerate() {
        let (b, i) = fb.split(var);
        if b >= n_brownian {
            continue;
        }
        let m = fb.value(i, t);
        for (o, c) in out[b].iter_mut().zip(coeffs) {
            *o += m * c;
        }
    }
    out
}

pub(crate) fn zero(v: &mut [Complex64]) {
    v.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
}
