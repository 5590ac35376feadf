//! Monte Carlo reference solver: independent sample paths of the SPDE with a
//! weak second-order integrating-factor Heun scheme.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgpc::{MomentFields, Problem};
use crate::error::{DgpcError, Result};
use crate::models::{deterministic_basis, Interval};
use crate::pce::PCExpansion;
use crate::sampling::derive_seed;
use crate::spectral::C64;

/// Paths per parallel work unit; fixed so results do not depend on the
/// thread count.
const PATHS_PER_CHUNK: usize = 16;
/// Stream index of Monte Carlo paths within the run seed.
const MC_STREAM: u64 = 9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    pub samples: usize,
    pub dt: f64,
    pub final_time: f64,
    #[serde(default)]
    pub seed: u64,
    /// Times at which moments are recorded; the final time is always added.
    #[serde(default)]
    pub output_times: Vec<f64>,
    /// Largest tolerated fraction of non-finite paths.
    #[serde(default = "default_exclusion")]
    pub max_excluded_fraction: f64,
}

fn default_exclusion() -> f64 {
    0.01
}

impl McSettings {
    pub fn validate(&self, errors: &mut Vec<String>) {
        if self.samples < 2 {
            errors.push("mc.samples must be at least 2".into());
        }
        if !(self.dt > 0.0) {
            errors.push("mc.dt must be positive".into());
        }
        if !(self.final_time > 0.0) {
            errors.push("mc.final_time must be positive".into());
        }
        if self.dt > 0.0 {
            for &t in self.output_times.iter().chain([&self.final_time]) {
                let r = t / self.dt;
                if !(t > 0.0 && t <= self.final_time) || (r - r.round()).abs() > 1e-9 * r.max(1.0) {
                    errors.push(format!(
                        "mc output time {t} is not a positive multiple of mc.dt within the run"
                    ));
                }
            }
        }
        if !(0.0..1.0).contains(&self.max_excluded_fraction) {
            errors.push("mc.max_excluded_fraction must lie in [0, 1)".into());
        }
    }
}

/// Streaming central moments up to order four, mergeable across chunks.
#[derive(Clone, Debug)]
pub struct CentralMoments {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
    m3: Vec<f64>,
    m4: Vec<f64>,
}

impl CentralMoments {
    pub fn new(len: usize) -> Self {
        CentralMoments {
            n: 0.0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
            m3: vec![0.0; len],
            m4: vec![0.0; len],
        }
    }

    pub fn count(&self) -> usize {
        self.n as usize
    }

    pub fn push(&mut self, x: &[f64]) {
        let n1 = self.n;
        self.n += 1.0;
        let n = self.n;
        for i in 0..x.len() {
            let delta = x[i] - self.mean[i];
            let dn = delta / n;
            let dn2 = dn * dn;
            let t1 = delta * dn * n1;
            self.mean[i] += dn;
            self.m4[i] +=
                t1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * self.m2[i] - 4.0 * dn * self.m3[i];
            self.m3[i] += t1 * dn * (n - 2.0) - 3.0 * dn * self.m2[i];
            self.m2[i] += t1;
        }
    }

    pub fn merge(&mut self, o: &CentralMoments) {
        if o.n == 0.0 {
            return;
        }
        if self.n == 0.0 {
            *self = o.clone();
            return;
        }
        let (na, nb) = (self.n, o.n);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = o.mean[i] - self.mean[i];
            let (d2, d3) = (d * d, d * d * d);
            let (a2, a3) = (self.m2[i], self.m3[i]);
            let (b2, b3) = (o.m2[i], o.m3[i]);
            self.m4[i] += o.m4[i]
                + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
                + 6.0 * d2 * (na * na * b2 + nb * nb * a2) / (n * n)
                + 4.0 * d * (na * b3 - nb * a3) / n;
            self.m3[i] +=
                b3 + d3 * na * nb * (na - nb) / (n * n) + 3.0 * d * (na * b2 - nb * a2) / n;
            self.m2[i] += b2 + d2 * na * nb / n;
            self.mean[i] += d * nb / n;
        }
        self.n = n;
    }

    /// Population moments (normalized by the count).
    pub fn fields(&self, time: f64, n_comps: usize) -> MomentFields {
        let inv = 1.0 / self.n.max(1.0);
        let scale = |v: &[f64]| v.iter().map(|x| x * inv).collect::<Vec<_>>();
        MomentFields {
            time,
            n_comps,
            mean: self.mean.clone(),
            variance: scale(&self.m2),
            third: Some(scale(&self.m3)),
            fourth: Some(scale(&self.m4)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct McRun {
    /// Moments at every output time, ascending.
    pub moments: Vec<MomentFields>,
    pub used: usize,
    pub excluded: usize,
    pub wall_time: Duration,
}

impl McRun {
    pub fn final_moments(&self) -> &MomentFields {
        self.moments.last().expect("final time is always recorded")
    }

    pub fn moments_at(&self, t: f64) -> Option<&MomentFields> {
        self.moments
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
    }
}

struct ChunkResult {
    acc: Vec<CentralMoments>,
    excluded: usize,
}

/// Runs `settings.samples` independent paths and accumulates pointwise
/// moments of every solution component.
pub fn monte_carlo(problem: &Problem, settings: &McSettings) -> Result<McRun> {
    let mut errors = Vec::new();
    settings.validate(&mut errors);
    if !errors.is_empty() {
        return Err(DgpcError::Config(errors));
    }
    let started = Instant::now();
    let model = &problem.model;
    let grid = model.grid();
    let nc = model.n_components();
    let np = grid.n_points();
    let nm = grid.n_modal();
    let dt = settings.dt;
    let mut times: Vec<f64> = settings.output_times.clone();
    times.push(settings.final_time);
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * dt);
    let out_steps: Vec<usize> = times.iter().map(|t| (t / dt).round() as usize).collect();
    let total_steps = *out_steps.last().expect("final time present");

    let basis = deterministic_basis()?;
    let forcing = model.forcing_fields();
    let sampler = problem
        .viscosity
        .as_ref()
        .map(|v| v.sampler(grid))
        .transpose()?;
    let initial = PCExpansion::deterministic(1, &problem.initial)?;
    let u0 = model.to_modal_state(&initial)?;
    let constant_rates = model.linear_rates(None);
    let seed = derive_seed(settings.seed, 0, MC_STREAM);
    let n_chunks = settings.samples.div_ceil(PATHS_PER_CHUNK);

    let chunks: Vec<Result<ChunkResult>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc: Vec<CentralMoments> =
                times.iter().map(|_| CentralMoments::new(nc * np)).collect();
            let mut excluded = 0;
            let mut ws = model.workspace(1);
            let mut tr = grid.transformer();
            let mut field = vec![0.0; nc * np];
            let (mut n0, mut n1, mut pred, mut noise) = (
                vec![C64::new(0.0, 0.0); u0.len()],
                vec![C64::new(0.0, 0.0); u0.len()],
                vec![C64::new(0.0, 0.0); u0.len()],
                vec![C64::new(0.0, 0.0); u0.len()],
            );
            let first = c * PATHS_PER_CHUNK;
            let last = (first + PATHS_PER_CHUNK).min(settings.samples);
            for path in first..last {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(path as u64);
                let nu = match &sampler {
                    Some(s) => {
                        let u: Vec<f64> = (0..s.n_vars())
                            .map(|_| rng.random_range(-1.0..1.0))
                            .collect();
                        Some(PCExpansion::deterministic(1, &[s.realize(&u)?])?)
                    }
                    None => None,
                };
                let rates = match &nu {
                    Some(v) => model.linear_rates(Some(v)),
                    None => constant_rates.clone(),
                };
                let e: Vec<f64> = rates.iter().map(|r| (r * dt).exp()).collect();
                let eh: Vec<f64> = rates.iter().map(|r| (0.5 * r * dt).exp()).collect();
                let iv = Interval {
                    basis: &basis,
                    forcing: None,
                    viscosity: nu.as_ref(),
                };
                let mut u = u0.clone();
                // outputs are committed only once the whole path is finite
                let mut recorded: Vec<Vec<f64>> = Vec::with_capacity(out_steps.len());
                let mut finite = true;
                for step in 0..total_steps {
                    let t = step as f64 * dt;
                    noise.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
                    for fields in &forcing {
                        let g: f64 = rng.sample(StandardNormal);
                        let dw = g * dt.sqrt();
                        for (comp, f) in fields {
                            for (o, v) in noise[comp * nm..(comp + 1) * nm].iter_mut().zip(f) {
                                *o += v * dw;
                            }
                        }
                    }
                    model.rhs(&iv, t, &u, &mut n0, &mut ws)?;
                    for i in 0..u.len() {
                        let r = i % rates.len();
                        pred[i] = e[r] * (u[i] + dt * n0[i]) + eh[r] * noise[i];
                    }
                    model.rhs(&iv, t + dt, &pred, &mut n1, &mut ws)?;
                    for i in 0..u.len() {
                        let r = i % rates.len();
                        u[i] = e[r] * u[i] + 0.5 * dt * (e[r] * n0[i] + n1[i]) + eh[r] * noise[i];
                    }
                    if u.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                        finite = false;
                        break;
                    }
                    while recorded.len() < out_steps.len() && out_steps[recorded.len()] == step + 1
                    {
                        for comp in 0..nc {
                            tr.inverse(
                                &u[comp * nm..(comp + 1) * nm],
                                &mut field[comp * np..(comp + 1) * np],
                            );
                        }
                        recorded.push(field.clone());
                    }
                }
                if finite {
                    for (a, f) in acc.iter_mut().zip(&recorded) {
                        a.push(f);
                    }
                } else {
                    excluded += 1;
                }
            }
            Ok(ChunkResult { acc, excluded })
        })
        .collect();

    let mut acc: Vec<CentralMoments> = times.iter().map(|_| CentralMoments::new(nc * np)).collect();
    let mut excluded = 0;
    for ch in chunks {
        let ch = ch?;
        excluded += ch.excluded;
        for (a, b) in acc.iter_mut().zip(&ch.acc) {
            a.merge(b);
        }
    }
    let max_excluded = (settings.max_excluded_fraction * settings.samples as f64).floor() as usize;
    if excluded > max_excluded {
        log::error!(
            "{excluded} of {} Monte Carlo paths blew up",
            settings.samples
        );
        return Err(DgpcError::BlowUp {
            time: settings.final_time,
        });
    }
    if excluded > 0 {
        log::warn!("excluded {excluded} non-finite Monte Carlo paths");
    }
    Ok(McRun {
        moments: acc
            .iter()
            .zip(&times)
            .map(|(a, &t)| a.fields(t, nc))
            .collect(),
        used: settings.samples - excluded,
        excluded,
        wall_time: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Burgers, Model};
    use crate::spectral::Grid;

    #[test]
    fn merged_moments_equal_sequential() {
        let xs: Vec<f64> = (0..37)
            .map(|i| ((i * 7919) % 101) as f64 / 10.0 - 3.0)
            .collect();
        let mut all = CentralMoments::new(1);
        for x in &xs {
            all.push(&[*x]);
        }
        let mut a = CentralMoments::new(1);
        let mut b = CentralMoments::new(1);
        for x in &xs[..11] {
            a.push(&[*x]);
        }
        for x in &xs[11..] {
            b.push(&[*x]);
        }
        a.merge(&b);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let central = |k: i32| xs.iter().map(|x| (x - mean).powi(k)).sum::<f64>() / n;
        for m in [all.fields(0.0, 1), a.fields(0.0, 1)] {
            assert!((m.mean[0] - mean).abs() < 1e-12);
            assert!((m.variance[0] - central(2)).abs() < 1e-12);
            assert!((m.third.unwrap()[0] - central(3)).abs() < 1e-10);
            assert!((m.fourth.unwrap()[0] - central(4)).abs() < 1e-9);
        }
    }

    #[test]
    fn additive_noise_on_constant_mode() {
        // without advection the spatial mean is u0 mean + sigma W(t)
        let grid = Grid::new(16, 1).unwrap();
        let model = Model::Burgers(
            Burgers::new(grid, 0.05, &[0.5; 16])
                .unwrap()
                .without_advection(),
        );
        let problem = Problem::new(model, vec![vec![1.0; 16]], None).unwrap();
        let s = McSettings {
            samples: 4000,
            dt: 0.01,
            final_time: 0.4,
            seed: 3,
            output_times: vec![0.2],
            max_excluded_fraction: 0.01,
        };
        let run = monte_carlo(&problem, &s).unwrap();
        assert_eq!(run.moments.len(), 2);
        for (m, t) in run.moments.iter().zip([0.2, 0.4]) {
            let var = 0.25 * t;
            let se = var * (2.0 / 4000f64).sqrt();
            assert!(
                (m.variance[0] - var).abs() < 5.0 * se,
                "{} vs {var}",
                m.variance[0]
            );
            assert!((m.mean[0] - 1.0).abs() < 5.0 * (var / 4000.0).sqrt());
        }
        let again = monte_carlo(&problem, &s).unwrap();
        assert_eq!(run.final_moments(), again.final_moments());
    }

    #[test]
    fn invalid_output_time_rejected() {
        let grid = Grid::new(8, 1).unwrap();
        let model = Model::Burgers(Burgers::new(grid, 0.05, &[0.5; 8]).unwrap());
        let problem = Problem::new(model, vec![vec![0.0; 8]], None).unwrap();
        let s = McSettings {
            samples: 10,
            dt: 0.01,
            final_time: 0.1,
            seed: 0,
            output_times: vec![0.015, 0.5],
            max_excluded_fraction: 0.01,
        };
        match monte_carlo(&problem, &s) {
            Err(DgpcError::Config(e)) => assert_eq!(e.len(), 2),
            other => panic!("{other:?}"),
        }
    }
}
