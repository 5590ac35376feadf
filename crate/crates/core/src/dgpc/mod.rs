//! Dynamical polynomial chaos: Galerkin propagation on short intervals with
//! the chaos basis rebuilt at every restart from a Karhunen–Loève
//! compression of the current solution.

mod adaptive;
mod moments;

pub use adaptive::{
    adaptive_next_step, ratio_from_energies, rho_ratio, round_to_steps, AdaptiveConfig,
    StepDecision,
};
pub use moments::{moments_from_pce, relative_l2_error, sampled_central, L2Error, MomentFields};

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::basis::{
    assemble_moment_table, block_patterns, empirical_gram, empirical_moments, uniform_moments,
    ChaosBasis,
};
use crate::error::{DgpcError, Result};
use crate::forcing::cosine_basis;
use crate::kl::{kl, KlMethod};
use crate::models::viscosity::RandomViscosity;
use crate::models::{Interval, Model};
use crate::multiindex::{build_sparse_set, triple_closure, CapRule, SparseIndex};
use crate::pce::PCExpansion;
use crate::sampling::{
    derive_seed, draw_gaussian, draw_uniform, joint_points, propagate, SampleEnsemble,
};
use crate::spectral::{AdamsPc4, Etd2, C64};

/// Independent random streams derived from the run seed.
#[derive(Clone, Copy, Debug)]
#[repr(u64)]
pub enum Stream {
    /// Forcing coefficients of an interval; shared by propagation and
    /// higher-moment sampling.
    Forcing = 1,
    /// Forcing coefficients of the held-out ensemble.
    ValidationForcing = 3,
    /// Randomized eigensolver test vectors.
    Eigensolver = 4,
    /// Initial parameter draws.
    Parameter = 5,
    /// Initial parameter draws of the held-out ensemble.
    ValidationParameter = 6,
    /// Forcing coefficients for orthonormality checks.
    GramCheck = 7,
}

/// Seed of `stream` on interval `interval`.
pub fn stream_seed(seed: u64, interval: usize, stream: Stream) -> u64 {
    derive_seed(seed, interval as u64, stream as u64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Second-order exponential predictor–corrector.
    #[default]
    Etd2,
    /// Fourth-order exponential Adams predictor–corrector.
    AdamsPc4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Fixed { dt: f64 },
    Adaptive(AdaptiveConfig),
}

impl Schedule {
    fn first_dt(&self) -> f64 {
        match self {
            Schedule::Fixed { dt } => *dt,
            Schedule::Adaptive(c) => c.dt0,
        }
    }
}

/// Discretization parameters of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpcSettings {
    /// Forcing variables per Brownian component.
    pub forcing_modes: usize,
    /// Maximum total polynomial degree.
    pub degree: usize,
    /// Karhunen–Loève modes kept at each restart.
    pub kl_modes: usize,
    /// Monte Carlo samples carrying the measure of the modes.
    pub samples: usize,
    #[serde(default)]
    pub caps: CapRule,
    pub schedule: Schedule,
    /// Time step of the coefficient integrator.
    pub inner_dt: f64,
    pub final_time: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub kl_method: KlMethod,
    #[serde(default)]
    pub seed: u64,
    /// Held-out samples propagated alongside for orthonormality checks; zero
    /// disables them.
    #[serde(default)]
    pub validation_samples: usize,
    /// Times at which moments are recorded; intervals are shortened to land
    /// on them. Empty records every interval end.
    #[serde(default)]
    pub output_times: Vec<f64>,
    /// Sample third and fourth moments at recorded times.
    #[serde(default = "yes")]
    pub higher_moments: bool,
    /// Drop one sample per restart (robustness test mode).
    #[serde(default)]
    pub discard_per_restart: bool,
}

fn yes() -> bool {
    true
}

impl DgpcSettings {
    pub fn validate(&self, errors: &mut Vec<String>) {
        if self.forcing_modes == 0 {
            errors.push("dgpc.forcing_modes must be at least 1".into());
        }
        if self.degree == 0 || self.degree > 8 {
            errors.push("dgpc.degree must lie in 1..=8".into());
        }
        if self.samples < 2 {
            errors.push("dgpc.samples must be at least 2".into());
        }
        if !(self.inner_dt > 0.0) {
            errors.push("dgpc.inner_dt must be positive".into());
        }
        if !(self.final_time > 0.0) {
            errors.push("dgpc.final_time must be positive".into());
        }
        match &self.schedule {
            Schedule::Fixed { dt } => {
                if !(*dt > 0.0) {
                    errors.push("dgpc.schedule.dt must be positive".into());
                } else if self.inner_dt > 0.0 {
                    let r = dt / self.inner_dt;
                    if (r - r.round()).abs() > 1e-9 * r.max(1.0) {
                        errors.push("dgpc.schedule.dt must be a multiple of dgpc.inner_dt".into());
                    }
                }
            }
            Schedule::Adaptive(c) => c.validate(errors),
        }
        if let KlMethod::Randomized { oversample } = self.kl_method {
            if oversample == 0 {
                errors.push("dgpc.kl_method.oversample must be positive".into());
            }
        }
        if self
            .output_times
            .iter()
            .any(|t| !(*t > 0.0 && *t <= self.final_time))
        {
            errors.push("dgpc.output_times must lie in (0, final_time]".into());
        }
    }

    fn time_tol(&self) -> f64 {
        1e-9 * self.inner_dt
    }
}

/// Model together with its initial data.
#[derive(Clone, Debug)]
pub struct Problem {
    pub model: Model,
    /// Deterministic initial field of each solution component.
    pub initial: Vec<Vec<f64>>,
    pub viscosity: Option<RandomViscosity>,
}

impl Problem {
    pub fn new(
        model: Model,
        initial: Vec<Vec<f64>>,
        viscosity: Option<RandomViscosity>,
    ) -> Result<Self> {
        let np = model.grid().n_points();
        if initial.len() != model.n_components() || initial.iter().any(|f| f.len() != np) {
            return Err(DgpcError::usage(format!(
                "initial data needs {} fields of {np} points",
                model.n_components()
            )));
        }
        Ok(Problem {
            model,
            initial,
            viscosity,
        })
    }
}

/// Everything needed to continue a run from a restart time.
#[derive(Clone, Debug)]
pub struct RestartState {
    /// Index of the interval starting at `time`.
    pub interval: usize,
    pub time: f64,
    /// Proposed length of the next interval.
    pub next_dt: f64,
    pub basis: ChaosBasis,
    pub solution: PCExpansion,
    /// Random viscosity parameter field over `basis`.
    pub parameter: Option<PCExpansion>,
    pub viscosity: Option<PCExpansion>,
    /// Samples of the mode variables of `basis`.
    pub ensemble: SampleEnsemble,
    pub validation: Option<SampleEnsemble>,
}

/// Summary of one accepted interval.
#[derive(Clone, Debug, Serialize)]
pub struct IntervalRecord {
    pub index: usize,
    pub start: f64,
    pub length: f64,
    pub steps: usize,
    pub rollbacks: usize,
    pub n_terms: usize,
    pub rho_end: f64,
    pub rho_max: f64,
    #[serde(skip)]
    pub moments: Option<MomentFields>,
}

/// Summary of one basis reconstruction.
#[derive(Clone, Debug, Serialize)]
pub struct RestartRecord {
    pub time: f64,
    /// Interval that starts with the new basis.
    pub interval: usize,
    pub requested_modes: usize,
    pub retained_modes: usize,
    pub eigenvalues: Vec<f64>,
    pub total_variance: f64,
    pub truncated_variance: f64,
    /// `w sum_{alpha > 0} |u_alpha|^2` of the solution before and after.
    pub variance_before: f64,
    pub variance_after: f64,
    pub mean_preserved: bool,
    pub n_terms: usize,
    pub jitter: f64,
    /// Basis functions dropped as linearly dependent under the new measure.
    pub deflated: usize,
    /// `max |G - I|` over the live functions of the new basis on the
    /// held-out ensemble.
    pub orthogonality_defect: Option<f64>,
}

/// Hooks called while a run progresses.
pub trait RunObserver {
    fn step(&mut self, _view: &StepView) -> Result<()> {
        Ok(())
    }
    fn interval(&mut self, _record: &IntervalRecord) -> Result<()> {
        Ok(())
    }
    fn restart(&mut self, _state: &RestartState, _record: &RestartRecord) -> Result<()> {
        Ok(())
    }
}

impl RunObserver for () {}

/// Modal coefficient state after an inner step.
pub struct StepView<'a> {
    pub interval: usize,
    pub time: f64,
    pub basis: &'a ChaosBasis,
    /// `[term][component][mode]`.
    pub state: &'a [C64],
}

#[derive(Clone, Debug)]
pub struct DgpcRun {
    pub intervals: Vec<IntervalRecord>,
    pub restarts: Vec<RestartRecord>,
    /// State at the final time (solution over the last basis).
    pub state: RestartState,
    pub wall_time: Duration,
}

impl DgpcRun {
    /// Moments at the final time.
    pub fn final_moments(&self) -> Option<&MomentFields> {
        self.intervals.last().and_then(|r| r.moments.as_ref())
    }

    /// Moments recorded closest to `t`.
    pub fn moments_at(&self, t: f64) -> Option<&MomentFields> {
        self.intervals
            .iter()
            .filter_map(|r| r.moments.as_ref())
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
    }
}

/// Result of integrating one interval.
pub struct Evolved {
    pub solution: PCExpansion,
    pub offsets: Vec<f64>,
    pub rho: Vec<f64>,
    pub steps: usize,
}

enum Stepper {
    Etd2(Etd2),
    Adams(AdamsPc4),
}

impl Stepper {
    fn step(
        &mut self,
        state: &mut [C64],
        t: f64,
        rhs: &mut dyn crate::spectral::NonlinearRhs,
    ) -> Result<()> {
        match self {
            Stepper::Etd2(s) => s.step(state, t, rhs),
            Stepper::Adams(s) => s.step(state, t, rhs),
        }
    }
}

/// DgPC solver for one problem.
pub struct Dgpc {
    problem: Problem,
    settings: DgpcSettings,
}

impl Dgpc {
    pub fn new(problem: Problem, settings: DgpcSettings) -> Result<Self> {
        let mut errors = Vec::new();
        settings.validate(&mut errors);
        if let Some(v) = &problem.viscosity {
            v.validate(&mut errors);
        }
        if !errors.is_empty() {
            return Err(DgpcError::Config(errors));
        }
        Ok(Dgpc { problem, settings })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn settings(&self) -> &DgpcSettings {
        &self.settings
    }

    /// Total forcing variables `K`.
    pub fn n_forcing(&self) -> usize {
        self.settings.forcing_modes * self.problem.model.n_brownian()
    }

    fn caps(&self, n_modes: usize) -> Result<SparseIndex> {
        let s = &self.settings;
        s.caps
            .caps(
                self.n_forcing(),
                self.problem.model.n_brownian(),
                s.kl_modes,
                s.degree,
            )
            .map(|c| c.select(&(0..self.n_forcing() + n_modes).collect::<Vec<_>>()))
    }

    /// State at time zero: Hermite chaos in the forcing variables, with the
    /// uniform variables of a random viscosity appended.
    pub fn initial_state(&self) -> Result<RestartState> {
        let s = &self.settings;
        let model = &self.problem.model;
        let grid = model.grid();
        let k = self.n_forcing();
        let dz = self.problem.viscosity.as_ref().map_or(0, |v| v.n_vars());
        let mut caps = self.caps(0)?;
        let n = s.degree as u8;
        caps.caps.extend(std::iter::repeat_n(n, dz));
        for extra in [&mut caps.caps2, &mut caps.caps_high].into_iter().flatten() {
            extra.extend(std::iter::repeat_n(n, dz));
        }
        let set = build_sparse_set(k, dz, s.degree, &caps)?;
        let basis = if dz == 0 {
            ChaosBasis::hermite(set)?
        } else {
            let closure = triple_closure(&set);
            let table =
                assemble_moment_table(k, uniform_moments(&block_patterns(&closure)), &closure)?;
            ChaosBasis::from_moments(set, &table)?
        };
        let ensemble = if dz > 0 {
            draw_uniform(s.samples, dz, stream_seed(s.seed, 0, Stream::Parameter))
        } else {
            SampleEnsemble::empty(s.samples)
        };
        let validation = (s.validation_samples > 0).then(|| {
            if dz > 0 {
                draw_uniform(
                    s.validation_samples,
                    dz,
                    stream_seed(s.seed, 0, Stream::ValidationParameter),
                )
            } else {
                SampleEnsemble::empty(s.validation_samples)
            }
        });
        let solution = PCExpansion::deterministic(basis.len(), &self.problem.initial)?;
        let (parameter, viscosity) = match &self.problem.viscosity {
            Some(law) => {
                let z = law.initial_parameter(grid, basis.set())?;
                let nu = law.viscosity(&z, &basis, grid)?;
                (Some(z), Some(nu))
            }
            None => (None, None),
        };
        Ok(RestartState {
            interval: 0,
            time: 0.0,
            next_dt: s.schedule.first_dt(),
            basis,
            solution,
            parameter,
            viscosity,
            ensemble,
            validation,
        })
    }

    /// Integrates the coefficient system over `[state.time, state.time + dt]`
    /// recording the nonlinearity ratio after every step.
    pub fn evolve(&self, st: &RestartState, dt: f64, obs: &mut dyn RunObserver) -> Result<Evolved> {
        let s = &self.settings;
        let model = &self.problem.model;
        let grid = model.grid();
        let j = st.basis.len();
        let steps = ((dt / s.inner_dt).round() as usize).max(1);
        let h = dt / steps as f64;
        let fb = cosine_basis(st.time, dt, s.forcing_modes, model.n_brownian())?;
        let iv = Interval {
            basis: &st.basis,
            forcing: Some(&fb),
            viscosity: st.viscosity.as_ref(),
        };
        let rates = model.linear_rates(st.viscosity.as_ref());
        let mut stepper = match s.integrator {
            Integrator::Etd2 => Stepper::Etd2(Etd2::new(&rates, h)),
            Integrator::AdamsPc4 => Stepper::Adams(AdamsPc4::new(&rates, h)),
        };
        let mut ws = model.workspace(j);
        let mut rhs = |t: f64, x: &[C64], o: &mut [C64]| model.rhs(&iv, t, x, o, &mut ws);
        let mut state = model.to_modal_state(&st.solution)?;
        let nm = grid.n_modal();
        let term = model.term_modal_len();
        let ratio = |x: &[C64]| {
            let e: Vec<f64> = x
                .chunks_exact(term)
                .map(|t| t.chunks_exact(nm).map(|c| grid.energy(c)).sum())
                .collect();
            ratio_from_energies(&e, st.basis.set())
        };
        let mut offsets = Vec::with_capacity(steps + 1);
        let mut rho = Vec::with_capacity(steps + 1);
        offsets.push(0.0);
        rho.push(rho_ratio(&st.solution, st.basis.set())?);
        for n in 0..steps {
            let t = st.time + n as f64 * h;
            stepper.step(&mut state, t, &mut rhs)?;
            let t1 = st.time + (n + 1) as f64 * h;
            if state.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(DgpcError::BlowUp { time: t1 });
            }
            obs.step(&StepView {
                interval: st.interval,
                time: t1,
                basis: &st.basis,
                state: &state,
            })?;
            offsets.push((n + 1) as f64 * h);
            rho.push(ratio(&state));
        }
        let solution = model.to_physical_pce(&state, j, st.time + dt)?;
        // the stored endpoint value must be reproducible from the stored field
        *rho.last_mut().expect("at least one step") = rho_ratio(&solution, st.basis.set())?;
        Ok(Evolved {
            solution,
            offsets,
            rho,
            steps,
        })
    }

    /// Builds the next basis and expansion from the solution at the end of
    /// an interval. `xi` holds the forcing samples of the finished interval.
    pub fn restart(
        &self,
        st: &RestartState,
        xi: &SampleEnsemble,
    ) -> Result<(RestartState, RestartRecord)> {
        let s = &self.settings;
        let model = &self.problem.model;
        let grid = model.grid();
        let w = grid.cell_weight();
        let j = st.interval;
        let k = self.n_forcing();
        let nc = model.n_components();
        let np = grid.n_points();

        let field = match &st.parameter {
            Some(z) => st.solution.stack(z)?,
            None => st.solution.clone(),
        };
        let res = kl(
            &field,
            w,
            s.kl_modes,
            s.kl_method,
            stream_seed(s.seed, j, Stream::Eigensolver),
        )?;
        let d = res.rank();
        let mut ensemble = propagate(&st.ensemble, xi, &res.eta, &st.basis)?;
        let affine = ensemble.standardize();
        if s.discard_per_restart {
            ensemble.discard_last();
        }
        let validation = match &st.validation {
            Some(v) => {
                let xv = draw_gaussian(
                    v.n_samples(),
                    k,
                    stream_seed(s.seed, j, Stream::ValidationForcing),
                );
                let mut next = propagate(v, &xv, &res.eta, &st.basis)?;
                next.apply_affine(&affine);
                Some(next)
            }
            None => None,
        };

        let set = build_sparse_set(k, d, s.degree, &self.caps(d)?)?;
        let closure = triple_closure(&set);
        let block = empirical_moments(&ensemble, &block_patterns(&closure))?;
        let table = assemble_moment_table(k, block, &closure)?;
        let basis = ChaosBasis::from_moments(set, &table)?;

        let n_terms = basis.len();
        let mut solution = PCExpansion::zeros(n_terms, nc, np);
        solution.set_time(st.solution.time());
        solution.term_mut(0).copy_from_slice(st.solution.term(0));
        let mut parameter = st.parameter.as_ref().map(|z| {
            let mut p = PCExpansion::zeros(n_terms, 1, np);
            p.set_time(z.time());
            p.term_mut(0).copy_from_slice(z.term(0));
            p
        });
        let split = nc * np;
        for (l, (lam, phi)) in res.eigenvalues.iter().zip(&res.modes).enumerate() {
            let a = basis.set().unit_position(k + l).ok_or_else(|| {
                DgpcError::internal(format!("basis lacks first-degree term of mode {l}"))
            })?;
            let c = lam.sqrt();
            for (o, p) in solution.term_mut(a).iter_mut().zip(&phi[..split]) {
                *o = c * p;
            }
            if let Some(z) = parameter.as_mut() {
                for (o, p) in z.term_mut(a).iter_mut().zip(&phi[split..]) {
                    *o = c * p;
                }
            }
        }
        let viscosity = match (&self.problem.viscosity, &parameter) {
            (Some(law), Some(z)) => Some(law.viscosity(z, &basis, grid)?),
            _ => None,
        };

        let orthogonality_defect = match &validation {
            Some(v) if basis.set().nvars() > 0 => {
                let xg = draw_gaussian(
                    v.n_samples(),
                    k,
                    stream_seed(s.seed, j + 1, Stream::GramCheck),
                );
                let g = empirical_gram(&basis, &joint_points(&xg, v)?)?;
                let mut defect = 0.0f64;
                let live: Vec<usize> = (0..g.nrows()).filter(|&a| basis.is_live(a)).collect();
                for &r in &live {
                    for &c in &live {
                        let target = if r == c { 1.0 } else { 0.0 };
                        defect = defect.max((g[(r, c)] - target).abs());
                    }
                }
                Some(defect)
            }
            _ => None,
        };

        let variance = |p: &PCExpansion| -> f64 {
            (1..p.n_terms())
                .map(|a| p.term(a).iter().map(|v| v * v).sum::<f64>())
                .sum::<f64>()
                * w
        };
        let record = RestartRecord {
            time: st.solution.time(),
            interval: j + 1,
            requested_modes: s.kl_modes,
            retained_modes: d,
            eigenvalues: res.eigenvalues.clone(),
            total_variance: res.total_variance,
            truncated_variance: res.truncated_variance(),
            variance_before: variance(&st.solution),
            variance_after: variance(&solution),
            mean_preserved: solution.term(0) == st.solution.term(0),
            n_terms,
            jitter: basis.jitter(),
            deflated: basis.n_deflated(),
            orthogonality_defect,
        };
        let next = RestartState {
            interval: j + 1,
            time: st.time,
            next_dt: st.next_dt,
            basis,
            solution,
            parameter,
            viscosity,
            ensemble,
            validation,
        };
        Ok((next, record))
    }

    pub fn run(&self, obs: &mut dyn RunObserver) -> Result<DgpcRun> {
        self.run_from(self.initial_state()?, obs)
    }

    /// Continues from a restart state until the final time.
    pub fn run_from(&self, mut st: RestartState, obs: &mut dyn RunObserver) -> Result<DgpcRun> {
        let started = Instant::now();
        let s = &self.settings;
        let tol = s.time_tol();
        let final_time = s.final_time;
        let k = self.n_forcing();
        let mut intervals = Vec::new();
        let mut restarts = Vec::new();
        let mut outputs: Vec<f64> = s.output_times.clone();
        outputs.sort_by(f64::total_cmp);

        while st.time < final_time - tol {
            let j = st.interval;
            let next_output = outputs
                .iter()
                .copied()
                .find(|&t| t > st.time + tol)
                .unwrap_or(final_time);
            let clip = |dt: f64| -> f64 {
                let dt = round_to_steps(dt, s.inner_dt);
                let remaining = next_output - st.time;
                if dt >= remaining - tol {
                    remaining
                } else {
                    dt
                }
            };
            let mut dt = clip(st.next_dt);
            let mut rollbacks = 0;
            let (evolved, next_dt) = loop {
                let ev = self.evolve(&st, dt, obs).map_err(|e| e.at_restart(j))?;
                match &s.schedule {
                    Schedule::Fixed { dt: fixed } => break (ev, *fixed),
                    Schedule::Adaptive(cfg) => {
                        match adaptive_next_step(&ev.offsets, &ev.rho, dt, cfg)? {
                            StepDecision::Advance { next_dt } => break (ev, next_dt),
                            StepDecision::Rollback { retry_dt } => {
                                rollbacks += 1;
                                if rollbacks > cfg.max_retries {
                                    return Err(DgpcError::internal(format!(
                                    "nonlinearity ratio {:.3e} above threshold after {} retries",
                                    ev.rho.iter().fold(0.0f64, |m, &r| m.max(r)),
                                    cfg.max_retries
                                ))
                                    .at_restart(j));
                                }
                                let mut retry = clip(retry_dt);
                                if retry >= dt {
                                    retry = clip(0.5 * dt);
                                }
                                if retry >= dt {
                                    // already a single inner step; nothing shorter exists
                                    break (ev, s.inner_dt);
                                }
                                log::info!("interval {j}: rollback from {dt:.4e} to {retry:.4e}");
                                dt = retry;
                            }
                        }
                    }
                }
            };

            // land exactly on requested times and on the inner-step grid
            let raw = st.time + dt;
            let end = outputs
                .iter()
                .copied()
                .chain([final_time])
                .find(|t| (raw - t).abs() <= tol)
                .unwrap_or_else(|| {
                    let on_grid = (raw / s.inner_dt).round() * s.inner_dt;
                    if (on_grid - raw).abs() <= tol {
                        on_grid
                    } else {
                        raw
                    }
                });
            st.solution = evolved.solution;
            st.solution.set_time(end);
            let is_final = end >= final_time - tol;
            let is_output =
                is_final || outputs.is_empty() || outputs.iter().any(|&t| (t - end).abs() <= tol);
            let needs_xi = !is_final || (is_output && s.higher_moments);
            let xi = needs_xi.then(|| {
                draw_gaussian(
                    st.ensemble.n_samples(),
                    k,
                    stream_seed(s.seed, j, Stream::Forcing),
                )
            });
            let moments = if is_output {
                let points = match (&xi, s.higher_moments) {
                    (Some(x), true) => Some(joint_points(x, &st.ensemble)?),
                    _ => None,
                };
                Some(moments_from_pce(
                    &st.solution,
                    &st.basis,
                    points.as_deref(),
                )?)
            } else {
                None
            };
            let record = IntervalRecord {
                index: j,
                start: st.time,
                length: dt,
                steps: evolved.steps,
                rollbacks,
                n_terms: st.basis.len(),
                rho_end: *evolved.rho.last().expect("nonempty"),
                rho_max: evolved.rho.iter().fold(0.0f64, |m, &r| m.max(r)),
                moments,
            };
            log::debug!(
                "interval {j}: t = {end:.4}, dt = {dt:.4e}, rho = {:.3e}, terms = {}",
                record.rho_end,
                record.n_terms
            );
            obs.interval(&record)?;
            intervals.push(record);
            st.time = end;
            st.next_dt = next_dt;
            if is_final {
                st.interval += 1;
                break;
            }
            let xi = xi.expect("drawn for every restart");
            let (next, rec) = self.restart(&st, &xi).map_err(|e| e.at_restart(j + 1))?;
            st = next;
            obs.restart(&st, &rec)?;
            restarts.push(rec);
        }
        Ok(DgpcRun {
            intervals,
            restarts,
            state: st,
            wall_time: started.elapsed(),
        })
    }
}
