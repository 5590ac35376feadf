//! Output files and run orchestration.
//!
//! An output directory holds `config.toml` (the resolved configuration),
//! one CSV per component, moment order and time under `moments/`
//! (order 1 is the mean, higher orders are central moments), `intervals.csv`
//! and `restarts.csv` for solver runs, optional restart snapshots under
//! `snapshots/`, and `manifest.json` listing everything.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{parse_config_with, Method, RunConfig};
use crate::dgpc::{
    relative_l2_error, Dgpc, DgpcRun, IntervalRecord, MomentFields, RestartRecord, RestartState,
    RunObserver,
};
use crate::error::{DgpcError, Result};
use crate::mc::monte_carlo;
use crate::models::exact::exact_burgers_moments_with;
use crate::snapshot::{read_snapshot, write_snapshot};
use crate::spectral::Grid;

/// One moment field on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentFile {
    pub component: String,
    pub order: usize,
    pub time: f64,
    /// Path relative to the output directory.
    pub path: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub method: Method,
    #[serde(default)]
    pub preset: Option<String>,
    pub dim: usize,
    pub grid: usize,
    pub wall_time_seconds: f64,
    #[serde(default)]
    pub intervals: usize,
    #[serde(default)]
    pub restarts: usize,
    /// Monte Carlo paths used and excluded.
    #[serde(default)]
    pub paths_used: Option<usize>,
    #[serde(default)]
    pub paths_excluded: Option<usize>,
    #[serde(default)]
    pub resumed_from: Option<String>,
    pub moments: Vec<MomentFile>,
    #[serde(default)]
    pub snapshots: Vec<String>,
}

/// Outcome of [`execute`] or [`resume`].
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub output: PathBuf,
    pub manifest: Manifest,
    /// Solver run, when the method was DgPC.
    pub dgpc: Option<DgpcRun>,
    /// Every recorded moment set, ascending in time.
    pub moments: Vec<MomentFields>,
}

fn time_tag(t: f64) -> String {
    format!("{t:.6}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> DgpcError {
    DgpcError::Io(std::io::Error::other(format!("{}: {e}", path.display())))
}

/// Writes the moment fields of every component up to `max_order`.
pub fn write_moments(
    dir: &Path,
    grid: &Grid,
    names: &[&str],
    m: &MomentFields,
    max_order: usize,
) -> Result<Vec<MomentFile>> {
    let sub = dir.join("moments");
    std::fs::create_dir_all(&sub)?;
    let mut files = Vec::new();
    for order in 1..=max_order.min(m.max_order()) {
        let field = if order == 1 {
            m.mean.clone()
        } else {
            m.central(order).expect("order within max_order")
        };
        for (c, name) in names.iter().enumerate() {
            let rel = format!("moments/{name}_order{order}_t{}.csv", time_tag(m.time));
            let path = dir.join(&rel);
            let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
            let values = m.component(&field, c);
            if grid.dim() == 1 {
                w.write_record(["x", "value"])
                    .map_err(|e| io_err(&path, e))?;
            } else {
                w.write_record(["x", "y", "value"])
                    .map_err(|e| io_err(&path, e))?;
            }
            for (p, v) in values.iter().enumerate() {
                let (x, y) = grid.coords(p);
                let rec = if grid.dim() == 1 {
                    vec![x.to_string(), v.to_string()]
                } else {
                    vec![x.to_string(), y.to_string(), v.to_string()]
                };
                w.write_record(&rec).map_err(|e| io_err(&path, e))?;
            }
            w.flush()?;
            files.push(MomentFile {
                component: name.to_string(),
                order,
                time: m.time,
                path: rel,
            });
        }
    }
    Ok(files)
}

/// Reads the value column of a moment CSV.
pub fn read_moment_csv(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let col = r.headers().map_err(|e| io_err(path, e))?.len() - 1;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| io_err(path, e))?;
            rec[col]
                .parse::<f64>()
                .map_err(|e| io_err(path, format!("bad value `{}`: {e}", &rec[col])))
        })
        .collect()
}

pub fn write_intervals(dir: &Path, records: &[IntervalRecord]) -> Result<()> {
    let path = dir.join("intervals.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
    for r in records {
        w.serialize(r).map_err(|e| io_err(&path, e))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RestartRow {
    time: f64,
    interval: usize,
    requested_modes: usize,
    retained_modes: usize,
    total_variance: f64,
    truncated_variance: f64,
    variance_before: f64,
    variance_after: f64,
    mean_preserved: bool,
    n_terms: usize,
    jitter: f64,
    deflated: usize,
    orthogonality_defect: Option<f64>,
    /// Semicolon-separated.
    eigenvalues: String,
}

pub fn write_restarts(dir: &Path, records: &[RestartRecord]) -> Result<()> {
    let path = dir.join("restarts.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
    for r in records {
        w.serialize(RestartRow {
            time: r.time,
            interval: r.interval,
            requested_modes: r.requested_modes,
            retained_modes: r.retained_modes,
            total_variance: r.total_variance,
            truncated_variance: r.truncated_variance,
            variance_before: r.variance_before,
            variance_after: r.variance_after,
            mean_preserved: r.mean_preserved,
            n_terms: r.n_terms,
            jitter: r.jitter,
            deflated: r.deflated,
            orthogonality_defect: r.orthogonality_defect,
            eigenvalues: r
                .eigenvalues
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(";"),
        })
        .map_err(|e| io_err(&path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> Result<()> {
    let text = serde_json::to_string_pretty(m).map_err(|e| DgpcError::internal(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(&path, e))
}

/// Writes a snapshot every `every` restarts.
struct SnapshotWriter<'a> {
    dir: PathBuf,
    config: &'a str,
    every: usize,
    count: usize,
    written: Vec<String>,
}

impl RunObserver for SnapshotWriter<'_> {
    fn restart(&mut self, st: &RestartState, _r: &RestartRecord) -> Result<()> {
        self.count += 1;
        if self.every > 0 && self.count % self.every == 0 {
            std::fs::create_dir_all(&self.dir)?;
            let name = format!("restart_{:05}.snap", st.interval);
            write_snapshot(&self.dir.join(&name), self.config, st)?;
            log::info!("snapshot {name} at t = {}", st.time);
            self.written.push(format!("snapshots/{name}"));
        }
        Ok(())
    }
}

fn dgpc_outputs(
    out: &Path,
    cfg: &RunConfig,
    solver: &Dgpc,
    run: DgpcRun,
    snapshots: Vec<String>,
    resumed_from: Option<String>,
) -> Result<RunSummary> {
    let model = &solver.problem().model;
    let grid = model.grid();
    let names = model.component_names();
    let moments: Vec<MomentFields> = run
        .intervals
        .iter()
        .filter_map(|r| r.moments.clone())
        .collect();
    let mut files = Vec::new();
    for m in &moments {
        files.extend(write_moments(out, grid, &names, m, 4)?);
    }
    write_intervals(out, &run.intervals)?;
    write_restarts(out, &run.restarts)?;
    let manifest = Manifest {
        method: Method::Dgpc,
        preset: cfg.preset.clone(),
        dim: grid.dim(),
        grid: grid.m(),
        wall_time_seconds: run.wall_time.as_secs_f64(),
        intervals: run.intervals.len(),
        restarts: run.restarts.len(),
        paths_used: None,
        paths_excluded: None,
        resumed_from,
        moments: files,
        snapshots,
    };
    write_manifest(out, &manifest)?;
    Ok(RunSummary {
        output: out.to_path_buf(),
        manifest,
        dgpc: Some(run),
        moments,
    })
}

/// Exact moments of the travelling-wave problem at the oracle output times.
pub fn oracle_moments(cfg: &RunConfig) -> Result<Vec<MomentFields>> {
    let p = cfg.oracle_problem()?;
    let o = cfg
        .oracle
        .as_ref()
        .ok_or_else(|| DgpcError::config("method oracle needs an [oracle] section"))?;
    let grid = cfg.model.grid()?;
    let xs: Vec<f64> = (0..grid.n_points()).map(|i| grid.coords(i).0).collect();
    let mut times: Vec<f64> = o
        .output_times
        .iter()
        .copied()
        .filter(|&t| t < o.final_time)
        .collect();
    times.push(o.final_time);
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
        .into_iter()
        .map(|t| {
            let raw =
                exact_burgers_moments_with(p.nu, p.drift, p.sigma, o.orders, &xs, t, o.points)?;
            Ok(central_from_raw(t, &raw))
        })
        .collect()
}

/// Converts raw moments `[order - 1][point]` into a [`MomentFields`].
pub fn central_from_raw(time: f64, raw: &[Vec<f64>]) -> MomentFields {
    let n = raw[0].len();
    let m1 = &raw[0];
    let variance = match raw.get(1) {
        Some(m2) => (0..n).map(|i| m2[i] - m1[i] * m1[i]).collect(),
        None => vec![0.0; n],
    };
    let third = raw.get(2).map(|m3| {
        (0..n)
            .map(|i| m3[i] - 3.0 * m1[i] * raw[1][i] + 2.0 * m1[i].powi(3))
            .collect()
    });
    let fourth = raw.get(3).map(|m4| {
        (0..n)
            .map(|i| {
                let m = m1[i];
                m4[i] - 4.0 * m * raw[2][i] + 6.0 * m * m * raw[1][i] - 3.0 * m.powi(4)
            })
            .collect()
    });
    MomentFields {
        time,
        n_comps: 1,
        mean: m1.clone(),
        variance,
        third,
        fourth,
    }
}

fn prepare_dir(out: &Path, cfg_text: &str) -> Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.toml"), cfg_text)?;
    Ok(())
}

/// Runs the configured method and writes every output into `out`.
pub fn execute(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let cfg_text = cfg.to_toml()?;
    prepare_dir(out, &cfg_text)?;
    match cfg.method {
        Method::Dgpc => {
            let settings = cfg.dgpc.clone().expect("validated");
            let solver = Dgpc::new(cfg.model.build()?, settings)?;
            let mut obs = SnapshotWriter {
                dir: out.join("snapshots"),
                config: &cfg_text,
                every: cfg.snapshot_every,
                count: 0,
                written: Vec::new(),
            };
            let run = solver.run(&mut obs)?;
            let written = obs.written;
            dgpc_outputs(out, cfg, &solver, run, written, None)
        }
        Method::Mc => {
            let problem = cfg.model.build()?;
            let settings = cfg.mc.as_ref().expect("validated");
            let run = monte_carlo(&problem, settings)?;
            let grid = problem.model.grid();
            let names = problem.model.component_names();
            let mut files = Vec::new();
            for m in &run.moments {
                files.extend(write_moments(out, grid, &names, m, 4)?);
            }
            let manifest = Manifest {
                method: Method::Mc,
                preset: cfg.preset.clone(),
                dim: grid.dim(),
                grid: grid.m(),
                wall_time_seconds: run.wall_time.as_secs_f64(),
                intervals: 0,
                restarts: 0,
                paths_used: Some(run.used),
                paths_excluded: Some(run.excluded),
                resumed_from: None,
                moments: files,
                snapshots: Vec::new(),
            };
            write_manifest(out, &manifest)?;
            Ok(RunSummary {
                output: out.to_path_buf(),
                manifest,
                dgpc: None,
                moments: run.moments,
            })
        }
        Method::Oracle => {
            let start = Instant::now();
            let moments = oracle_moments(cfg)?;
            let grid = cfg.model.grid()?;
            let mut files = Vec::new();
            for m in &moments {
                files.extend(write_moments(out, &grid, &["u"], m, 4)?);
            }
            let manifest = Manifest {
                method: Method::Oracle,
                preset: cfg.preset.clone(),
                dim: 1,
                grid: grid.m(),
                wall_time_seconds: start.elapsed().as_secs_f64(),
                intervals: 0,
                restarts: 0,
                paths_used: None,
                paths_excluded: None,
                resumed_from: None,
                moments: files,
                snapshots: Vec::new(),
            };
            write_manifest(out, &manifest)?;
            Ok(RunSummary {
                output: out.to_path_buf(),
                manifest,
                dgpc: None,
                moments,
            })
        }
    }
}

/// Continues a DgPC run from a snapshot; `overrides` may extend the final
/// time or change run-control settings.
pub fn resume(snapshot: &Path, out: &Path, overrides: &[String]) -> Result<RunSummary> {
    let snap = read_snapshot(snapshot)?;
    let cfg = parse_config_with(&snap.config, overrides)?;
    let settings = cfg
        .dgpc
        .clone()
        .ok_or_else(|| DgpcError::config("snapshot configuration has no [dgpc] section"))?;
    let cfg_text = cfg.to_toml()?;
    prepare_dir(out, &cfg_text)?;
    let solver = Dgpc::new(cfg.model.build()?, settings)?;
    let mut obs = SnapshotWriter {
        dir: out.join("snapshots"),
        config: &cfg_text,
        every: cfg.snapshot_every,
        count: 0,
        written: Vec::new(),
    };
    log::info!(
        "resuming at t = {} (interval {})",
        snap.state.time,
        snap.state.interval
    );
    let run = solver.run_from(snap.state, &mut obs)?;
    let written = obs.written;
    dgpc_outputs(
        out,
        &cfg,
        &solver,
        run,
        written,
        Some(snapshot.display().to_string()),
    )
}

/// Error of one moment field of a run against a reference run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub component: String,
    pub order: usize,
    pub time: f64,
    pub error: f64,
    /// False when the reference field vanishes and `error` is absolute.
    pub relative: bool,
}

/// Compares every moment field present in both directories (matched by
/// component, order and time) and writes `errors.csv` to `out`.
pub fn compare(run: &Path, reference: &Path, out: &Path) -> Result<Vec<ComparisonRow>> {
    let a = read_manifest(run)?;
    let b = read_manifest(reference)?;
    let key = |f: &MomentFile| (f.component.clone(), f.order, (f.time * 1e6).round() as i64);
    let refs: BTreeMap<_, _> = b.moments.iter().map(|f| (key(f), f)).collect();
    let mut rows = Vec::new();
    for f in &a.moments {
        let Some(g) = refs.get(&key(f)) else { continue };
        let va = read_moment_csv(&run.join(&f.path))?;
        let vb = read_moment_csv(&reference.join(&g.path))?;
        let e = relative_l2_error(&va, &vb)?;
        rows.push(ComparisonRow {
            component: f.component.clone(),
            order: f.order,
            time: f.time,
            error: e.value,
            relative: e.relative,
        });
    }
    if rows.is_empty() {
        return Err(DgpcError::usage("the two runs share no moment fields"));
    }
    std::fs::create_dir_all(out)?;
    let path = out.join("errors.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
    for r in &rows {
        w.serialize(r).map_err(|e| io_err(&path, e))?;
    }
    w.flush()?;
    Ok(rows)
}
