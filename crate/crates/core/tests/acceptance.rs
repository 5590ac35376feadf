//! End-to-end acceptance checks. Each test prints one `criterion N: PASS|FAIL`
//! line to stderr (uncaptured) and then asserts the verdict.
//!
//! Tests take a shared lock so that timing comparisons never overlap with
//! other work in this binary.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Mutex, MutexGuard};

use dgpc::basis::empirical_gram;
use dgpc::config::{load_config, RunConfig};
use dgpc::dgpc::{adaptive_next_step, AdaptiveConfig, StepDecision};
use dgpc::dgpc::{relative_l2_error, MomentFields};
use dgpc::dgpc::{Dgpc, RestartRecord, RestartState, RunObserver, StepView};
use dgpc::export::oracle_moments;
use dgpc::kl::{dense_kl, randomized_kl};
use dgpc::mc::monte_carlo;
use dgpc::models::Model;
use dgpc::multiindex::{build_sparse_set, CapRule};
use dgpc::pce::PCExpansion;
use dgpc::sampling::{draw_gaussian, joint_points};
use dgpc::spectral::C64;
use dgpc::Result;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Prints the verdict past the test harness capture, then asserts it.
fn verdict(n: u32, pass: bool, detail: &str) {
    let line = format!(
        "criterion {n}: {} {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {n} failed: {detail}");
}

fn config(preset: &str, overrides: &[&str]) -> RunConfig {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    load_config(None, Some(preset), &o).expect("preset resolves")
}

fn solver(cfg: &RunConfig) -> Dgpc {
    let dg = cfg.dgpc.clone().expect("dgpc settings");
    Dgpc::new(cfg.model.build().expect("model builds"), dg).expect("valid settings")
}

fn err(a: &[f64], b: &[f64]) -> f64 {
    relative_l2_error(a, b).expect("same length").value
}

/// Moves a solver to the end of an interval of length `dt` and rebuilds the
/// basis there with fresh forcing samples.
fn advance(
    d: &Dgpc,
    st: &RestartState,
    dt: f64,
    seed: u64,
) -> (RestartState, RestartState, RestartRecord) {
    let ev = d.evolve(st, dt, &mut ()).expect("interval integrates");
    let mut end = st.clone();
    end.solution = ev.solution;
    end.time = st.time + dt;
    let xi = draw_gaussian(st.ensemble.n_samples(), d.n_forcing(), seed);
    let (next, rec) = d.restart(&end, &xi).expect("restart succeeds");
    (end, next, rec)
}

// ---------------------------------------------------------------------------
// 1. exact-moment Burgers problem

#[test]
fn c01_exact_moments_burgers() {
    let _g = serial();
    let mut rows = Vec::new();
    let mut pass = true;
    let mut prev: Option<[f64; 4]> = None;
    for n in ["n1", "n2", "n3"] {
        let cfg = config(&format!("example3:{n}"), &[]);
        let exact = oracle_moments(&cfg).expect("oracle");
        let exact = exact.last().expect("final time");
        let run = solver(&cfg).run(&mut ()).expect("run");
        let m = run.final_moments().expect("final moments");
        let mut e = [0.0; 4];
        for (o, slot) in e.iter_mut().enumerate() {
            *slot = err(&m.raw(o + 1).unwrap(), &exact.raw(o + 1).unwrap());
        }
        let var = err(&m.variance, &exact.variance);
        if let Some(p) = prev {
            pass &= e.iter().zip(&p).all(|(a, b)| a <= b);
        }
        if n == "n3" {
            pass &= e.iter().all(|&v| v <= 1e-2) && e[0] <= 3e-3 && var <= 3e-3;
        }
        rows.push(format!(
            "{n}: raw [{:.2e} {:.2e} {:.2e} {:.2e}] var {var:.2e}",
            e[0], e[1], e[2], e[3]
        ));
        prev = Some(e);
    }
    verdict(1, pass, &rows.join("; "));
}

// ---------------------------------------------------------------------------
// 2. sparse index set sizes

#[test]
fn c02_sparse_set_sizes() {
    let _g = serial();
    let size = |rule: CapRule, k: usize, comps: usize, d: usize, n: usize| {
        let caps = rule.caps(k, comps, d, n).unwrap();
        build_sparse_set(k, d, n, &caps).unwrap().len()
    };
    let burgers: Vec<usize> = [3, 4, 5]
        .iter()
        .map(|&d| size(CapRule::LeadingQuadratic, 2, 1, d, 2))
        .collect();
    let ns: Vec<usize> = [4, 6, 8]
        .iter()
        .map(|&d| size(CapRule::PerComponent, 4, 2, d, 2))
        .collect();
    let pass = burgers == [15, 21, 28] && ns == [19, 30, 41];
    verdict(
        2,
        pass,
        &format!("burgers {burgers:?}, navier-stokes {ns:?}"),
    );
}

// ---------------------------------------------------------------------------
// 3. first interval against a standalone Hermite chaos Burgers solver

/// Minimal pseudospectral Hermite-chaos Burgers integrator built from naive
/// DFTs and closed-form Hermite triple products.
struct HermiteBurgers {
    m: usize,
    nu: f64,
    indices: Vec<Vec<u32>>,
    /// `triple[a][b][c] = E[H_a H_b H_c]` for normalized Hermite products.
    triple: Vec<f64>,
    sigma_hat: Vec<C64>,
    forcing_modes: usize,
    t0: f64,
    length: f64,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn hermite_triple_1d(a: u32, b: u32, c: u32) -> f64 {
    let s2 = a + b + c;
    if s2 % 2 == 1 {
        return 0.0;
    }
    let s = s2 / 2;
    if s < a || s < b || s < c {
        return 0.0;
    }
    (factorial(a) * factorial(b) * factorial(c)).sqrt()
        / (factorial(s - a) * factorial(s - b) * factorial(s - c))
}

impl HermiteBurgers {
    fn new(m: usize, nu: f64, sigma: &[f64], k: usize, n: u32, length: f64) -> Self {
        let mut indices = Vec::new();
        let mut cur = vec![0u32; k];
        fn rec(cur: &mut Vec<u32>, v: usize, left: u32, out: &mut Vec<Vec<u32>>) {
            if v == cur.len() {
                out.push(cur.clone());
                return;
            }
            for e in 0..=left {
                cur[v] = e;
                rec(cur, v + 1, left - e, out);
            }
            cur[v] = 0;
        }
        rec(&mut cur, 0, n, &mut indices);
        let j = indices.len();
        let mut triple = vec![0.0; j * j * j];
        for a in 0..j {
            for b in 0..j {
                for c in 0..j {
                    triple[(a * j + b) * j + c] = (0..k)
                        .map(|v| hermite_triple_1d(indices[a][v], indices[b][v], indices[c][v]))
                        .product();
                }
            }
        }
        let mut me = HermiteBurgers {
            m,
            nu,
            indices,
            triple,
            sigma_hat: Vec::new(),
            forcing_modes: k,
            t0: 0.0,
            length,
        };
        me.sigma_hat = me.dft(sigma);
        me
    }

    fn dft(&self, f: &[f64]) -> Vec<C64> {
        let m = self.m;
        (0..=m / 2)
            .map(|k| {
                f.iter()
                    .enumerate()
                    .fold(C64::new(0.0, 0.0), |acc, (j, v)| {
                        let th = -2.0 * PI * (k * j) as f64 / m as f64;
                        acc + C64::new(th.cos(), th.sin()) * *v
                    })
                    / m as f64
            })
            .collect()
    }

    fn idft(&self, c: &[C64]) -> Vec<f64> {
        let m = self.m;
        (0..m)
            .map(|j| {
                let mut v = c[0].re + c[m / 2].re * if j % 2 == 0 { 1.0 } else { -1.0 };
                for (k, ck) in c.iter().enumerate().take(m / 2).skip(1) {
                    let th = 2.0 * PI * (k * j) as f64 / m as f64;
                    v += 2.0 * (ck * C64::new(th.cos(), th.sin())).re;
                }
                v
            })
            .collect()
    }

    fn forcing_weight(&self, i: usize, t: f64) -> f64 {
        let s = t - self.t0;
        if i == 0 {
            1.0 / self.length.sqrt()
        } else {
            (2.0 / self.length).sqrt() * (i as f64 * PI * s / self.length).cos()
        }
    }

    fn rhs(&self, t: f64, u: &[Vec<C64>]) -> Vec<Vec<C64>> {
        let j = self.indices.len();
        let m = self.m;
        let phys: Vec<Vec<f64>> = u.iter().map(|c| self.idft(c)).collect();
        let mut out = Vec::with_capacity(j);
        for c in 0..j {
            let mut p = vec![0.0; m];
            for a in 0..j {
                for b in 0..j {
                    let e = self.triple[(a * j + b) * j + c];
                    if e != 0.0 {
                        for x in 0..m {
                            p[x] += e * phys[a][x] * phys[b][x];
                        }
                    }
                }
            }
            let ph = self.dft(&p);
            let mut o: Vec<C64> = ph
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    if 3 * k <= m && k != m / 2 {
                        C64::new(0.0, 2.0 * PI * k as f64) * v * -0.5
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect();
            let idx = &self.indices[c];
            if idx.iter().sum::<u32>() == 1 {
                let var = idx.iter().position(|&e| e == 1).unwrap();
                if var < self.forcing_modes {
                    let w = self.forcing_weight(var, t);
                    for (o, s) in o.iter_mut().zip(&self.sigma_hat) {
                        *o += s * w;
                    }
                }
            }
            out.push(o);
        }
        out
    }

    fn phi1(z: f64) -> f64 {
        if z == 0.0 {
            1.0
        } else {
            z.exp_m1() / z
        }
    }

    fn phi2(z: f64) -> f64 {
        if z.abs() < 0.1 {
            // sum z^n / (n + 2)!
            let mut term = 0.5;
            let mut sum = 0.0;
            for n in 0..20 {
                sum += term;
                term *= z / (n as f64 + 3.0);
            }
            sum
        } else {
            (z.exp_m1() - z) / (z * z)
        }
    }

    fn integrate(&self, u0: &[f64], steps: usize) -> Vec<Vec<f64>> {
        let j = self.indices.len();
        let h = self.length / steps as f64;
        let mut u: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); self.m / 2 + 1]; j];
        u[0] = self.dft(u0);
        let rates: Vec<f64> = (0..=self.m / 2)
            .map(|k| -self.nu * (2.0 * PI * k as f64).powi(2))
            .collect();
        for n in 0..steps {
            let t = self.t0 + n as f64 * h;
            let n0 = self.rhs(t, &u);
            let pred: Vec<Vec<C64>> = (0..j)
                .map(|a| {
                    (0..rates.len())
                        .map(|k| {
                            let z = rates[k] * h;
                            u[a][k] * z.exp() + n0[a][k] * (h * Self::phi1(z))
                        })
                        .collect()
                })
                .collect();
            let n1 = self.rhs(t + h, &pred);
            u = (0..j)
                .map(|a| {
                    (0..rates.len())
                        .map(|k| {
                            let z = rates[k] * h;
                            pred[a][k] + (n1[a][k] - n0[a][k]) * (h * Self::phi2(z))
                        })
                        .collect()
                })
                .collect();
        }
        u.iter().map(|c| self.idft(c)).collect()
    }
}

#[test]
fn c03_hermite_interval_equivalence() {
    let _g = serial();
    let cfg = config(
        "example1",
        &[
            "model.grid = 32",
            "dgpc.caps = { kind = \"full\" }",
            "dgpc.samples = 1000",
        ],
    );
    let d = solver(&cfg);
    let st = d.initial_state().unwrap();
    let dt = 0.1;
    let ev = d.evolve(&st, dt, &mut ()).unwrap();

    let grid = d.problem().model.grid();
    let xs: Vec<f64> = (0..grid.n_points()).map(|i| grid.coords(i).0).collect();
    let sigma: Vec<f64> = xs.iter().map(|x| 0.5 * (2.0 * PI * x).cos()).collect();
    let u0: Vec<f64> = xs.iter().map(|x| 0.5 * (2.0 * PI * x).sin()).collect();
    let reference = HermiteBurgers::new(32, 0.01, &sigma, 2, 2, dt);
    let steps = ev.steps;
    let ref_terms = reference.integrate(&u0, steps);

    let set = st.basis.set();
    let (mut num, mut den) = (0.0, 0.0);
    let mut matched = 0;
    for (r, idx) in reference.indices.iter().enumerate() {
        let exps: Vec<u8> = idx.iter().map(|&e| e as u8).collect();
        let pos = set
            .indices()
            .iter()
            .position(|m| m.exponents() == exps.as_slice());
        if let Some(a) = pos {
            matched += 1;
            for (x, y) in ev.solution.term(a).iter().zip(&ref_terms[r]) {
                num += (x - y) * (x - y);
                den += y * y;
            }
        }
    }
    let rel = (num / den).sqrt();
    let pass = matched == reference.indices.len() && set.len() == matched && rel <= 1e-12;
    verdict(
        3,
        pass,
        &format!("{matched} terms over {steps} steps, relative difference {rel:.2e}"),
    );
}

// ---------------------------------------------------------------------------
// 4. orthonormality of rebuilt bases on fresh samples

struct GramCheck {
    forcing: usize,
    worst: f64,
    checked: usize,
}

impl RunObserver for GramCheck {
    fn restart(&mut self, st: &RestartState, _r: &RestartRecord) -> Result<()> {
        let v = st.validation.as_ref().expect("held-out ensemble");
        let xi = draw_gaussian(
            v.n_samples(),
            self.forcing,
            0xC4EC_0000 + st.interval as u64,
        );
        let g = empirical_gram(&st.basis, &joint_points(&xi, v)?)?;
        let live: Vec<usize> = (0..g.nrows()).filter(|&a| st.basis.is_live(a)).collect();
        for &r in &live {
            for &c in &live {
                if r != c {
                    self.worst = self.worst.max(g[(r, c)].abs());
                }
            }
        }
        self.checked += 1;
        Ok(())
    }
}

#[test]
fn c04_orthonormality_after_restarts() {
    let _g = serial();
    let cfg = config(
        "example1",
        &["dgpc.final_time = 1.0", "dgpc.validation_samples = 100000"],
    );
    let d = solver(&cfg);
    let mut obs = GramCheck {
        forcing: d.n_forcing(),
        worst: 0.0,
        checked: 0,
    };
    d.run(&mut obs).unwrap();
    let pass = obs.checked >= 9 && obs.worst <= 0.05;
    verdict(
        4,
        pass,
        &format!(
            "{} restarts, max off-diagonal {:.3e}",
            obs.checked, obs.worst
        ),
    );
}

// ---------------------------------------------------------------------------
// 5. randomized against dense KL on a 2-D vorticity expansion

#[test]
fn c05_randomized_kl_matches_dense() {
    let _g = serial();
    let cfg = config("example5", &["model.grid = 64", "dgpc.samples = 20000"]);
    let d = solver(&cfg);
    let st = d.initial_state().unwrap();
    let (_, next, _) = advance(&d, &st, 0.1, 11);
    let ev = d.evolve(&next, 0.1, &mut ()).unwrap();
    let w: PCExpansion = ev.solution.select_components(&[0]);
    let weight = d.problem().model.grid().cell_weight();

    let dense = dense_kl(&w, weight, 8).unwrap();
    let rand = randomized_kl(&w, weight, 8, 10, 12345).unwrap();
    let eig_err = dense
        .eigenvalues
        .iter()
        .zip(&rand.eigenvalues)
        .map(|(a, b)| ((a - b) / a).abs())
        .fold(0.0f64, f64::max);
    let mut eta_err = 0.0f64;
    for (a, b) in dense.eta.iter().zip(&rand.eta) {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let s = dot.signum();
        for (x, y) in a.iter().zip(b) {
            eta_err = eta_err.max((x - s * y).abs());
        }
    }
    let pass = dense.rank() == 8 && rand.rank() == 8 && eig_err <= 1e-6 && eta_err <= 1e-5;
    verdict(
        5,
        pass,
        &format!(
            "{} terms, eigenvalue error {eig_err:.2e}, eta error {eta_err:.2e}",
            w.n_terms()
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. convergence in the restart interval

/// Errors are measured against a run with half the smallest interval; a
/// Monte Carlo reference at desk-scale sample counts is noisier than the
/// differences being resolved.
#[test]
fn c06_restart_interval_convergence() {
    let _g = serial();
    let final_moments = |dt: f64| -> MomentFields {
        let cfg = config(
            "example2",
            &[&format!(
                "dgpc.schedule = {{ kind = \"fixed\", dt = {dt} }}"
            )],
        );
        solver(&cfg)
            .run(&mut ())
            .unwrap()
            .final_moments()
            .unwrap()
            .clone()
    };
    let dts = [0.1, 0.2, 0.4];
    let reference = final_moments(0.05);
    let errors: Vec<f64> = dts
        .iter()
        .map(|&dt| err(&final_moments(dt).variance, &reference.variance))
        .collect();
    let slope = ls_slope(&dts, &errors);
    let pass = (0.3..=0.7).contains(&slope);
    verdict(
        6,
        pass,
        &format!(
            "variance errors {:.3e} {:.3e} {:.3e} against the dt 0.05 run, slope {slope:.2}",
            errors[0], errors[1], errors[2]
        ),
    );
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

// ---------------------------------------------------------------------------
// 7. accuracy and cost against Monte Carlo

#[test]
fn c07_dgpc_against_monte_carlo() {
    let _g = serial();
    let cfg = config("example1:d5", &["mc.samples = 50000"]);
    let run = solver(&cfg).run(&mut ()).unwrap();
    let m = run.final_moments().unwrap();
    let mc = monte_carlo(&cfg.model.build().unwrap(), cfg.mc.as_ref().unwrap()).unwrap();
    let r = mc.final_moments();
    let (em, ev) = (err(&m.mean, &r.mean), err(&m.variance, &r.variance));
    let ratio = run.wall_time.as_secs_f64() / mc.wall_time.as_secs_f64();
    let pass = em <= 5e-2 && ev <= 5e-2 && ratio <= 0.25;
    verdict(
        7,
        pass,
        &format!(
            "mean {em:.2e}, variance {ev:.2e}, wall {:.1} s vs {:.1} s (ratio {ratio:.3})",
            run.wall_time.as_secs_f64(),
            mc.wall_time.as_secs_f64()
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. conservation

struct BurgersMeans {
    baseline: HashMap<usize, Vec<f64>>,
    worst: f64,
    steps: usize,
}

fn coefficient_means(p: &PCExpansion) -> Vec<f64> {
    (0..p.n_terms())
        .map(|a| p.term(a).iter().sum::<f64>() / p.n_points() as f64)
        .collect()
}

impl RunObserver for BurgersMeans {
    fn step(&mut self, v: &StepView) -> Result<()> {
        let base = &self.baseline[&v.interval];
        let nm = v.state.len() / base.len();
        for (a, b) in base.iter().enumerate() {
            self.worst = self.worst.max((v.state[a * nm].re - b).abs());
        }
        self.steps += 1;
        Ok(())
    }

    fn restart(&mut self, st: &RestartState, _r: &RestartRecord) -> Result<()> {
        self.baseline
            .insert(st.interval, coefficient_means(&st.solution));
        Ok(())
    }
}

struct NsInvariants<'a> {
    model: &'a Model,
    mean: f64,
    divergence: f64,
    steps: usize,
}

impl RunObserver for NsInvariants<'_> {
    fn step(&mut self, v: &StepView) -> Result<()> {
        let Model::NavierStokes(ns) = self.model else {
            unreachable!("navier-stokes model")
        };
        let grid = ns.grid();
        let nm = grid.n_modal();
        let term = self.model.term_modal_len();
        for t in v.state.chunks_exact(term) {
            let w = &t[..nm];
            self.mean = self.mean.max(w[0].norm());
            let (u, vv) = ns.velocity(w)?;
            let ux = grid.derivative(&u, 0, 1)?;
            let vy = grid.derivative(&vv, 1, 1)?;
            let div: Vec<C64> = ux.iter().zip(&vy).map(|(a, b)| a + b).collect();
            let phys = grid.to_physical(&div)?;
            self.divergence = phys.iter().fold(self.divergence, |m, x| m.max(x.abs()));
        }
        self.steps += 1;
        Ok(())
    }
}

#[test]
fn c08_conservation() {
    let _g = serial();
    let cfg = config(
        "example1",
        &[
            "model.grid = 32",
            "dgpc.final_time = 0.2",
            "dgpc.samples = 20000",
        ],
    );
    let d = solver(&cfg);
    let st = d.initial_state().unwrap();
    let mut burgers = BurgersMeans {
        baseline: HashMap::from([(0, coefficient_means(&st.solution))]),
        worst: 0.0,
        steps: 0,
    };
    d.run_from(st, &mut burgers).unwrap();

    let cfg = config(
        "example5",
        &[
            "model.grid = 32",
            "dgpc.final_time = 0.2",
            "dgpc.samples = 20000",
        ],
    );
    let d = solver(&cfg);
    let mut ns = NsInvariants {
        model: &d.problem().model,
        mean: 0.0,
        divergence: 0.0,
        steps: 0,
    };
    d.run(&mut ns).unwrap();

    let pass = burgers.steps > 0
        && ns.steps > 0
        && burgers.worst <= 1e-10
        && ns.mean <= 1e-12
        && ns.divergence <= 1e-12;
    verdict(
        8,
        pass,
        &format!(
            "burgers mean drift {:.2e} over {} steps; vorticity mean {:.2e}, divergence {:.2e} over {} steps",
            burgers.worst, burgers.steps, ns.mean, ns.divergence, ns.steps
        ),
    );
}

// ---------------------------------------------------------------------------
// 9. restart invariance

#[test]
fn c09_restart_invariance() {
    let _g = serial();
    let cfg = config("example1", &[]);
    let d = solver(&cfg);
    let s = d.settings().samples as f64;
    let w = d.problem().model.grid().cell_weight();
    let tol = 5.0 / s.sqrt();
    let mut st = d.initial_state().unwrap();
    let mut exact_mean = true;
    let mut worst = 0.0f64;
    let mut losses = Vec::new();
    for j in 0..3 {
        let (end, next, _) = advance(&d, &st, 0.1, 900 + j);
        exact_mean &= end
            .solution
            .term(0)
            .iter()
            .zip(next.solution.term(0))
            .all(|(a, b)| a.to_bits() == b.to_bits());
        let fluct = |p: &PCExpansion| -> f64 {
            w * (1..p.n_terms())
                .map(|a| p.term(a).iter().map(|x| x * x).sum::<f64>())
                .sum::<f64>()
        };
        let loss = fluct(&end.solution) - fluct(&next.solution);
        let kl = dense_kl(&end.solution, w, d.settings().kl_modes).unwrap();
        let trailing = kl.total_variance - kl.eigenvalues.iter().sum::<f64>();
        // relative to the variance before the restart; the trailing sum
        // itself vanishes while the expansion has rank at most D
        worst = worst.max((loss - trailing).abs() / kl.total_variance);
        losses.push(format!("{loss:.3e}/{trailing:.3e}"));
        st = next;
    }
    let pass = exact_mean && worst <= tol;
    verdict(
        9,
        pass,
        &format!(
            "mean bit-exact {exact_mean}, loss/trailing [{}], relative mismatch {worst:.2e} (tolerance {tol:.2e})",
            losses.join(", ")
        ),
    );
}

// ---------------------------------------------------------------------------
// 10. adaptive scheduling

#[test]
fn c10_adaptive_scheduler() {
    let _g = serial();
    let cfg = AdaptiveConfig {
        epsilon: 0.01,
        dt0: 0.1,
        dt_max: 1.0,
        fit_degree: 2,
        max_retries: 3,
    };
    let traj = |len: f64, f: &dyn Fn(f64) -> f64| -> (Vec<f64>, Vec<f64>) {
        let o: Vec<f64> = (0..=20).map(|i| len * i as f64 / 20.0).collect();
        let r = o.iter().map(|&s| f(s)).collect();
        (o, r)
    };
    let mut worst = 0.0f64;
    let mut kinds = true;

    // overshoot: linear growth crossing 3 eps, retry at the 2 eps crossing
    let (o, r) = traj(0.2, &|s| 0.2 * s);
    match adaptive_next_step(&o, &r, 0.2, &cfg).unwrap() {
        StepDecision::Rollback { retry_dt } => worst = worst.max((retry_dt - 0.1).abs()),
        _ => kinds = false,
    }
    // below target: quadratic extrapolated to its 2 eps root
    let (o, r) = traj(0.1, &|s| 0.5 * s * s + 0.05 * s);
    let root = (-0.05 + (0.05f64 * 0.05 + 4.0 * 0.5 * 0.02).sqrt()) / (2.0 * 0.5);
    match adaptive_next_step(&o, &r, 0.1, &cfg).unwrap() {
        StepDecision::Advance { next_dt } => worst = worst.max((next_dt - root).abs()),
        _ => kinds = false,
    }
    // between targets: the 2 eps crossing inside the interval
    let (o, r) = traj(0.1, &|s| 0.25 * s);
    match adaptive_next_step(&o, &r, 0.1, &cfg).unwrap() {
        StepDecision::Advance { next_dt } => worst = worst.max((next_dt - 0.08).abs()),
        _ => kinds = false,
    }
    // flat: no crossing, capped
    let (o, r) = traj(0.1, &|_| 0.001);
    match adaptive_next_step(&o, &r, 0.1, &cfg).unwrap() {
        StepDecision::Advance { next_dt } => worst = worst.max((next_dt - cfg.dt_max).abs()),
        _ => kinds = false,
    }

    let counts: Vec<usize> = [0.005, 0.01, 0.02]
        .iter()
        .map(|eps| {
            let c = config(
                "example1:adaptive",
                &[&format!("dgpc.schedule.epsilon = {eps}")],
            );
            solver(&c).run(&mut ()).unwrap().restarts.len()
        })
        .collect();
    let monotone = counts.windows(2).all(|w| w[0] > w[1]);
    let pass = kinds && worst <= 1e-8 && monotone;
    verdict(
        10,
        pass,
        &format!(
            "synthetic decisions correct {kinds}, max step error {worst:.2e}; restarts for eps 0.005/0.01/0.02: {counts:?}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 11. Kelvin-Helmholtz roll-up

#[test]
fn c11_kelvin_helmholtz_cores() {
    let _g = serial();
    let cfg = config("example5", &["model.grid = 64"]);
    let d = solver(&cfg);
    let run = d.run(&mut ()).unwrap();
    let m = run.final_moments().unwrap();
    let grid = d.problem().model.grid();
    let n = grid.m();
    let w = m.component(&m.mean, 0);
    let at = |i: usize, j: usize| w[(i % n) * n + j % n];
    let mut minima = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = at(i, j);
            let lowest = (0..3).all(|di| {
                (0..3).all(|dj| (di == 1 && dj == 1) || at(i + n + di - 1, j + n + dj - 1) > v)
            });
            if lowest {
                let (x, y) = grid.coords(i * n + j);
                minima.push((v, x, y));
            }
        }
    }
    minima.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pass = minima.len() >= 2 && {
        let (a, b) = (minima[0], minima[1]);
        let centred = (a.2 - 0.5).abs() <= 0.1 && (b.2 - 0.5).abs() <= 0.1;
        let gap = (a.1 - b.1).abs();
        let opposite = (gap.min(1.0 - gap) - 0.5).abs() <= 0.1;
        let dominant = minima.get(2).is_none_or(|c| c.0 > 0.5 * b.0);
        centred && opposite && dominant
    };
    let listed: Vec<String> = minima
        .iter()
        .take(4)
        .map(|(v, x, y)| format!("{v:.2} at ({x:.3}, {y:.3})"))
        .collect();
    verdict(
        11,
        pass,
        &format!(
            "{} local minima, deepest: {}",
            minima.len(),
            listed.join(", ")
        ),
    );
}
