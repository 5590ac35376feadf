//! Periodic pseudospectral toolbox on `[0, 1]^d`, `d` in {1, 2}.
//!
//! Physical fields are stored row-major with `x` fastest (`iy * M + ix`).
//! Modal arrays hold the half spectrum in `x`: in 1D index `kx` in
//! `0..=M/2`; in 2D index `kx * M + jy` where `jy` in `0..M` maps to
//! `ky = jy` for `jy <= M/2` and `jy - M` otherwise. Coefficients are
//! normalized so that `u(x) = sum_k u_k exp(2 pi i k x)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::error::{DgpcError, Result};

pub type C64 = Complex64;

/// Relative tolerance on the zero mode accepted by [`Grid::poisson_solve`].
const POISSON_MEAN_TOL: f64 = 1e-12;

#[derive(Clone)]
pub struct Grid {
    m: usize,
    dim: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd_y: Option<Arc<dyn Fft<f64>>>,
    inv_y: Option<Arc<dyn Fft<f64>>>,
    /// `2 pi i k` per axis, zero at the Nyquist wavenumber.
    ik: Vec<Vec<C64>>,
    /// `-4 pi^2 |k|^2`.
    lap: Vec<f64>,
    keep: Vec<bool>,
    parseval: Vec<f64>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("m", &self.m)
            .field("dim", &self.dim)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.dim == other.dim
    }
}

impl Grid {
    /// `m` points per dimension (even, at least 8) in `dim` dimensions.
    pub fn new(m: usize, dim: usize) -> Result<Self> {
        if m % 2 == 1 || m < 8 {
            return Err(DgpcError::config(format!(
                "grid size M must be even and at least 8, got {m}"
            )));
        }
        if !(1..=2).contains(&dim) {
            return Err(DgpcError::config(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        let mut rp = RealFftPlanner::<f64>::new();
        let r2c = rp.plan_fft_forward(m);
        let c2r = rp.plan_fft_inverse(m);
        let (fwd_y, inv_y) = if dim == 2 {
            let mut cp = FftPlanner::<f64>::new();
            (Some(cp.plan_fft_forward(m)), Some(cp.plan_fft_inverse(m)))
        } else {
            (None, None)
        };
        let half = m / 2;
        let cut = (m / 3) as i64;
        let nm = (half + 1) * if dim == 2 { m } else { 1 };
        let mut ik = vec![vec![C64::new(0.0, 0.0); nm]; dim];
        let mut lap = vec![0.0; nm];
        let mut keep = vec![false; nm];
        let mut parseval = vec![0.0; nm];
        for idx in 0..nm {
            let (kx, ky) = Self::wavenumbers_of(m, dim, idx);
            let ks = [kx, ky];
            for (axis, ik_axis) in ik.iter_mut().enumerate() {
                let k = ks[axis];
                if k.unsigned_abs() as usize != half {
                    ik_axis[idx] = C64::new(0.0, 2.0 * PI * k as f64);
                }
            }
            let k2 = (kx * kx + ky * ky) as f64;
            lap[idx] = -4.0 * PI * PI * k2;
            keep[idx] = kx.abs() <= cut && ky.abs() <= cut;
            parseval[idx] = if kx == 0 || kx as usize == half {
                1.0
            } else {
                2.0
            };
        }
        Ok(Grid {
            m,
            dim,
            r2c,
            c2r,
            fwd_y,
            inv_y,
            ik,
            lap,
            keep,
            parseval,
        })
    }

    fn wavenumbers_of(m: usize, dim: usize, idx: usize) -> (i64, i64) {
        if dim == 1 {
            (idx as i64, 0)
        } else {
            let kx = (idx / m) as i64;
            let jy = idx % m;
            let ky = if jy <= m / 2 {
                jy as i64
            } else {
                jy as i64 - m as i64
            };
            (kx, ky)
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn n_modal(&self) -> usize {
        self.lap.len()
    }

    /// Quadrature weight of one grid point.
    pub fn cell_weight(&self) -> f64 {
        1.0 / self.n_points() as f64
    }

    /// `(kx, ky)` of modal index `idx` (`ky = 0` in 1D).
    pub fn wavenumbers(&self, idx: usize) -> (i64, i64) {
        Self::wavenumbers_of(self.m, self.dim, idx)
    }

    /// Coordinates of physical point `p`.
    pub fn coords(&self, p: usize) -> (f64, f64) {
        let h = 1.0 / self.m as f64;
        if self.dim == 1 {
            (p as f64 * h, 0.0)
        } else {
            ((p % self.m) as f64 * h, (p / self.m) as f64 * h)
        }
    }

    /// Evaluates `f` at every grid point.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.n_points())
            .map(|p| {
                let (x, y) = self.coords(p);
                f(x, y)
            })
            .collect()
    }

    /// `2 pi i k_axis` per modal index (Nyquist zeroed).
    pub fn ik(&self, axis: usize) -> &[C64] {
        &self.ik[axis]
    }

    /// `-4 pi^2 |k|^2` per modal index.
    pub fn laplacian_symbol(&self) -> &[f64] {
        &self.lap
    }

    /// Modes retained by the 2/3 rule.
    pub fn dealias_mask(&self) -> &[bool] {
        &self.keep
    }

    pub fn transformer(&self) -> Transformer {
        Transformer::new(self)
    }

    pub fn to_modal(&self, field: &[f64]) -> Result<Vec<C64>> {
        self.check_physical(field.len())?;
        let mut out = vec![C64::new(0.0, 0.0); self.n_modal()];
        self.transformer().forward(field, &mut out);
        Ok(out)
    }

    pub fn to_physical(&self, modal: &[C64]) -> Result<Vec<f64>> {
        self.check_modal(modal.len())?;
        let mut out = vec![0.0; self.n_points()];
        self.transformer().inverse(modal, &mut out);
        Ok(out)
    }

    fn check_physical(&self, n: usize) -> Result<()> {
        if n != self.n_points() {
            return Err(DgpcError::usage(format!(
                "field of length {n} on a grid of {} points",
                self.n_points()
            )));
        }
        Ok(())
    }

    fn check_modal(&self, n: usize) -> Result<()> {
        if n != self.n_modal() {
            return Err(DgpcError::usage(format!(
                "modal array of length {n}, expected {}",
                self.n_modal()
            )));
        }
        Ok(())
    }

    /// `d^order/d axis^order`; Nyquist coefficients are set to zero.
    pub fn derivative(&self, modal: &[C64], axis: usize, order: u32) -> Result<Vec<C64>> {
        self.check_modal(modal.len())?;
        if axis >= self.dim {
            return Err(DgpcError::usage(format!(
                "axis {axis} on a {}-D grid",
                self.dim
            )));
        }
        if !(1..=2).contains(&order) {
            return Err(DgpcError::usage("derivative order must be 1 or 2"));
        }
        Ok(modal
            .iter()
            .zip(&self.ik[axis])
            .map(|(u, f)| u * f.powu(order))
            .collect())
    }

    /// Zero-mean `psi` with `-Laplace psi = w`.
    pub fn poisson_solve(&self, w: &[C64]) -> Result<Vec<C64>> {
        self.check_modal(w.len())?;
        let scale = w.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(1.0);
        if w[0].norm() > POISSON_MEAN_TOL * scale {
            return Err(DgpcError::usage(format!(
                "Poisson right-hand side has nonzero mean {}",
                w[0].re
            )));
        }
        let mut psi = vec![C64::new(0.0, 0.0); w.len()];
        poisson_into(&self.lap, w, &mut psi);
        Ok(psi)
    }

    /// Pointwise product with the result truncated to the 2/3-rule modes.
    pub fn dealiased_product(&self, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        self.check_physical(a.len())?;
        self.check_physical(b.len())?;
        let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        let mut t = self.transformer();
        let mut modal = vec![C64::new(0.0, 0.0); self.n_modal()];
        t.forward(&prod, &mut modal);
        self.apply_dealias(&mut modal);
        let mut out = vec![0.0; self.n_points()];
        t.inverse(&modal, &mut out);
        Ok(out)
    }

    pub fn apply_dealias(&self, modal: &mut [C64]) {
        for (v, &k) in modal.iter_mut().zip(&self.keep) {
            if !k {
                *v = C64::new(0.0, 0.0);
            }
        }
    }

    /// `mean(u^2)` over the grid computed from modal coefficients.
    pub fn energy(&self, modal: &[C64]) -> f64 {
        modal
            .iter()
            .zip(&self.parseval)
            .map(|(u, w)| w * u.norm_sqr())
            .sum()
    }
}

/// `psi = -w / (4 pi^2 |k|^2)` with the zero mode set to zero.
pub(crate) fn poisson_into(lap: &[f64], w: &[C64], psi: &mut [C64]) {
    for ((p, v), &l) in psi.iter_mut().zip(w).zip(lap) {
        *p = if l == 0.0 { C64::new(0.0, 0.0) } else { -v / l };
    }
}

/// FFT plans plus scratch buffers for repeated transforms on one grid.
pub struct Transformer {
    m: usize,
    dim: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd_y: Option<Arc<dyn Fft<f64>>>,
    inv_y: Option<Arc<dyn Fft<f64>>>,
    row: Vec<f64>,
    spec: Vec<C64>,
    scratch_r: Vec<C64>,
    scratch_y: Vec<C64>,
    buf: Vec<C64>,
    scale: f64,
}

impl Transformer {
    fn new(g: &Grid) -> Self {
        let half = g.m / 2 + 1;
        let sr = g.r2c.get_scratch_len().max(g.c2r.get_scratch_len());
        let sy = g
            .fwd_y
            .as_ref()
            .map_or(0, |f| f.get_inplace_scratch_len())
            .max(g.inv_y.as_ref().map_or(0, |f| f.get_inplace_scratch_len()));
        Transformer {
            m: g.m,
            dim: g.dim,
            r2c: g.r2c.clone(),
            c2r: g.c2r.clone(),
            fwd_y: g.fwd_y.clone(),
            inv_y: g.inv_y.clone(),
            row: vec![0.0; g.m],
            spec: vec![C64::new(0.0, 0.0); half],
            scratch_r: vec![C64::new(0.0, 0.0); sr],
            scratch_y: vec![C64::new(0.0, 0.0); sy],
            buf: vec![C64::new(0.0, 0.0); if g.dim == 2 { half * g.m } else { 0 }],
            scale: 1.0 / g.n_points() as f64,
        }
    }

    /// Physical to modal. Lengths are not checked.
    pub fn forward(&mut self, field: &[f64], modal: &mut [C64]) {
        let m = self.m;
        if self.dim == 1 {
            self.row.copy_from_slice(&field[..m]);
            self.r2c
                .process_with_scratch(&mut self.row, modal, &mut self.scratch_r)
                .expect("forward real FFT");
            for v in modal.iter_mut() {
                *v *= self.scale;
            }
            return;
        }
        let half = m / 2 + 1;
        for iy in 0..m {
            self.row.copy_from_slice(&field[iy * m..(iy + 1) * m]);
            self.r2c
                .process_with_scratch(&mut self.row, &mut self.spec, &mut self.scratch_r)
                .expect("forward real FFT");
            for kx in 0..half {
                modal[kx * m + iy] = self.spec[kx];
            }
        }
        if let Some(f) = &self.fwd_y {
            f.process_with_scratch(&mut modal[..half * m], &mut self.scratch_y);
        }
        for v in modal.iter_mut() {
            *v *= self.scale;
        }
    }

    /// Modal to physical. Lengths are not checked.
    pub fn inverse(&mut self, modal: &[C64], field: &mut [f64]) {
        let m = self.m;
        let half = m / 2 + 1;
        if self.dim == 1 {
            self.spec.copy_from_slice(&modal[..half]);
            self.spec[0].im = 0.0;
            self.spec[half - 1].im = 0.0;
            // imaginary parts at DC/Nyquist were zeroed above
            let _ =
                self.c2r
                    .process_with_scratch(&mut self.spec, &mut field[..m], &mut self.scratch_r);
            return;
        }
        self.buf.copy_from_slice(&modal[..half * m]);
        if let Some(f) = &self.inv_y {
            f.process_with_scratch(&mut self.buf, &mut self.scratch_y);
        }
        for iy in 0..m {
            for kx in 0..half {
                self.spec[kx] = self.buf[kx * m + iy];
            }
            self.spec[0].im = 0.0;
            self.spec[half - 1].im = 0.0;
            let _ = self.c2r.process_with_scratch(
                &mut self.spec,
                &mut field[iy * m..(iy + 1) * m],
                &mut self.scratch_r,
            );
        }
    }
}

/// Right-hand side `N(t, u)` of `u' = L u + N(t, u)` with diagonal `L`.
pub trait NonlinearRhs {
    fn eval(&mut self, t: f64, state: &[C64], out: &mut [C64]) -> Result<()>;
}

impl<F> NonlinearRhs for F
where
    F: FnMut(f64, &[C64], &mut [C64]) -> Result<()>,
{
    fn eval(&mut self, t: f64, state: &[C64], out: &mut [C64]) -> Result<()> {
        self(t, state, out)
    }
}

fn phi1(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z.exp_m1() / z
    }
}

fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z * (1.0 / 120.0 + z / 720.0)))
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

fn check_rates(state: usize, rates: usize) -> Result<()> {
    if rates == 0 || state % rates != 0 {
        return Err(DgpcError::usage(format!(
            "state of length {state} is not a whole number of blocks of {rates} rates"
        )));
    }
    Ok(())
}

/// Exponential time differencing predictor–corrector of second order
/// (exponential Euler predictor, trapezoidal correction of the nonlinear
/// term). `rates` is repeated over the state in blocks.
pub struct Etd2 {
    dt: f64,
    rates: usize,
    e: Vec<f64>,
    p1: Vec<f64>,
    p2: Vec<f64>,
    n0: Vec<C64>,
    n1: Vec<C64>,
    pred: Vec<C64>,
}

impl Etd2 {
    pub fn new(rates: &[f64], dt: f64) -> Self {
        Etd2 {
            dt,
            rates: rates.len(),
            e: rates.iter().map(|r| (r * dt).exp()).collect(),
            p1: rates.iter().map(|r| dt * phi1(r * dt)).collect(),
            p2: rates.iter().map(|r| dt * phi2(r * dt)).collect(),
            n0: Vec::new(),
            n1: Vec::new(),
            pred: Vec::new(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&mut self, state: &mut [C64], t: f64, rhs: &mut dyn NonlinearRhs) -> Result<()> {
        let n = state.len();
        check_rates(n, self.rates)?;
        let zero = C64::new(0.0, 0.0);
        self.n0.resize(n, zero);
        self.n1.resize(n, zero);
        self.pred.resize(n, zero);
        rhs.eval(t, state, &mut self.n0)?;
        for i in 0..n {
            let r = i % self.rates;
            self.pred[i] = self.e[r] * state[i] + self.p1[r] * self.n0[i];
        }
        rhs.eval(t + self.dt, &self.pred, &mut self.n1)?;
        for i in 0..n {
            let r = i % self.rates;
            state[i] = self.pred[i] + self.p2[r] * (self.n1[i] - self.n0[i]);
        }
        Ok(())
    }
}

/// One second-order exponential predictor–corrector step.
pub fn etd_pc2_step(
    state: &mut [C64],
    rhs: &mut dyn NonlinearRhs,
    rates: &[f64],
    dt: f64,
    t: f64,
) -> Result<()> {
    if !(dt > 0.0) {
        return Err(DgpcError::usage("time step must be positive"));
    }
    Etd2::new(rates, dt).step(state, t, rhs)
}

/// Four-step Adams–Bashforth/Adams–Moulton predictor–corrector (PECE) on
/// the integrating-factor variables. The first three steps are taken with
/// an integrating-factor RK4 scheme to fill the history.
pub struct AdamsPc4 {
    dt: f64,
    rates: usize,
    e: [Vec<f64>; 4],
    e_half: Vec<f64>,
    history: std::collections::VecDeque<Vec<C64>>,
}

impl AdamsPc4 {
    pub fn new(rates: &[f64], dt: f64) -> Self {
        let pow = |k: f64| rates.iter().map(|r| (k * r * dt).exp()).collect::<Vec<_>>();
        AdamsPc4 {
            dt,
            rates: rates.len(),
            e: [pow(1.0), pow(2.0), pow(3.0), pow(4.0)],
            e_half: pow(0.5),
            history: Default::default(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Forgets the stored right-hand sides (after the state is replaced).
    pub fn reset(&mut self) {
        self.history.clear();
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    pub fn step(&mut self, state: &mut [C64], t: f64, rhs: &mut dyn NonlinearRhs) -> Result<()> {
        let n = state.len();
        check_rates(n, self.rates)?;
        if self.history.is_empty() {
            let mut n0 = vec![C64::new(0.0, 0.0); n];
            rhs.eval(t, state, &mut n0)?;
            self.history.push_back(n0);
        }
        if self.history.len() < 4 {
            self.rk4_step(state, t, rhs)?;
        } else {
            let hist: Vec<&[C64]> = self.history.iter().map(Vec::as_slice).collect();
            adams_update(&hist, state, &self.e, self.rates, self.dt, t, rhs)?;
            self.history.pop_front();
        }
        let mut nn = vec![C64::new(0.0, 0.0); n];
        rhs.eval(t + self.dt, state, &mut nn)?;
        self.history.push_back(nn);
        Ok(())
    }

    fn rk4_step(&mut self, state: &mut [C64], t: f64, rhs: &mut dyn NonlinearRhs) -> Result<()> {
        let n = state.len();
        let h = self.dt;
        let zero = C64::new(0.0, 0.0);
        let k1 = self.history.back().expect("history seeded").clone();
        let (e, eh) = (&self.e[0], &self.e_half);
        let mut a = vec![zero; n];
        let mut k2 = vec![zero; n];
        let mut k3 = vec![zero; n];
        let mut k4 = vec![zero; n];
        for i in 0..n {
            a[i] = eh[i % self.rates] * (state[i] + 0.5 * h * k1[i]);
        }
        rhs.eval(t + 0.5 * h, &a, &mut k2)?;
        for i in 0..n {
            a[i] = eh[i % self.rates] * state[i] + 0.5 * h * k2[i];
        }
        rhs.eval(t + 0.5 * h, &a, &mut k3)?;
        for i in 0..n {
            let r = i % self.rates;
            a[i] = e[r] * state[i] + h * eh[r] * k3[i];
        }
        rhs.eval(t + h, &a, &mut k4)?;
        for i in 0..n {
            let r = i % self.rates;
            state[i] =
                e[r] * state[i] + h / 6.0 * (e[r] * k1[i] + 2.0 * eh[r] * (k2[i] + k3[i]) + k4[i]);
        }
        Ok(())
    }
}

fn adams_update(
    hist: &[&[C64]],
    state: &mut [C64],
    e: &[Vec<f64>; 4],
    rates: usize,
    dt: f64,
    t: f64,
    rhs: &mut dyn NonlinearRhs,
) -> Result<()> {
    let n = state.len();
    let h = dt / 24.0;
    let [nm3, nm2, nm1, n0] = [hist[0], hist[1], hist[2], hist[3]];
    let mut pred = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        let r = i % rates;
        pred[i] = e[0][r] * state[i]
            + h * (55.0 * e[0][r] * n0[i] - 59.0 * e[1][r] * nm1[i] + 37.0 * e[2][r] * nm2[i]
                - 9.0 * e[3][r] * nm3[i]);
    }
    let mut np = vec![C64::new(0.0, 0.0); n];
    rhs.eval(t + dt, &pred, &mut np)?;
    for i in 0..n {
        let r = i % rates;
        state[i] = e[0][r] * state[i]
            + h * (9.0 * np[i] + 19.0 * e[0][r] * n0[i] - 5.0 * e[1][r] * nm1[i]
                + e[2][r] * nm2[i]);
    }
    Ok(())
}

/// One Adams predictor–corrector step from an explicit history
/// `[N_{n-3}, N_{n-2}, N_{n-1}, N_n]`.
pub fn adams_pc4_step(
    history: &[Vec<C64>],
    state: &mut [C64],
    rhs: &mut dyn NonlinearRhs,
    rates: &[f64],
    dt: f64,
    t: f64,
) -> Result<()> {
    if history.len() < 4 {
        return Err(DgpcError::usage(format!(
            "Adams predictor-corrector needs 4 past right-hand sides, got {}",
            history.len()
        )));
    }
    check_rates(state.len(), rates.len())?;
    let pow = |k: f64| rates.iter().map(|r| (k * r * dt).exp()).collect::<Vec<_>>();
    let e = [pow(1.0), pow(2.0), pow(3.0), pow(4.0)];
    let hist: Vec<&[C64]> = history[history.len() - 4..]
        .iter()
        .map(Vec::as_slice)
        .collect();
    adams_update(&hist, state, &e, rates.len(), dt, t, rhs)
}
