//! Python bindings: run presets or configuration files and read back moment
//! fields as plain lists.

use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use dgpc::config::{load_config, PRESETS};
use dgpc::dgpc::MomentFields;
use dgpc::export::{compare as compare_dirs, execute};
use dgpc::models::exact::exact_burgers_moments;
use dgpc::DgpcError;

fn to_py(e: DgpcError) -> PyErr {
    match e {
        DgpcError::Config(list) => PyValueError::new_err(list.join("; ")),
        DgpcError::Usage(m) => PyValueError::new_err(m),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Built-in presets and their variants.
#[pyfunction]
fn presets(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let d = PyDict::new(py);
    for (name, variants) in PRESETS {
        d.set_item(*name, variants.to_vec())?;
    }
    Ok(d)
}

/// Resolved configuration as TOML text.
#[pyfunction]
#[pyo3(signature = (preset=None, config=None, overrides=Vec::new()))]
fn resolve_config(
    preset: Option<&str>,
    config: Option<PathBuf>,
    overrides: Vec<String>,
) -> PyResult<String> {
    let cfg = load_config(config.as_deref(), preset, &overrides).map_err(to_py)?;
    cfg.to_toml().map_err(to_py)
}

fn moments_dict<'py>(
    py: Python<'py>,
    m: &MomentFields,
    names: &[String],
) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("time", m.time)?;
    for (c, name) in names.iter().enumerate() {
        let f = PyDict::new(py);
        f.set_item("mean", m.component(&m.mean, c).to_vec())?;
        f.set_item("variance", m.component(&m.variance, c).to_vec())?;
        if let Some(t) = &m.third {
            f.set_item("third", m.component(t, c).to_vec())?;
        }
        if let Some(t) = &m.fourth {
            f.set_item("fourth", m.component(t, c).to_vec())?;
        }
        d.set_item(name, f)?;
    }
    Ok(d)
}

/// Runs a configuration and returns its summary and moment fields. Output
/// files go to `out`, or to a temporary directory that is removed again.
#[pyfunction]
#[pyo3(signature = (preset=None, config=None, overrides=Vec::new(), out=None))]
fn run<'py>(
    py: Python<'py>,
    preset: Option<&str>,
    config: Option<PathBuf>,
    overrides: Vec<String>,
    out: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = load_config(config.as_deref(), preset, &overrides).map_err(to_py)?;
    let tmp;
    let dir: &Path = match &out {
        Some(p) => p,
        None => {
            tmp = tempfile::tempdir().map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
            tmp.path()
        }
    };
    let summary = execute(&cfg, dir).map_err(to_py)?;
    let names: Vec<String> = {
        let mut seen = Vec::new();
        for f in &summary.manifest.moments {
            if !seen.contains(&f.component) {
                seen.push(f.component.clone());
            }
        }
        seen
    };
    let d = PyDict::new(py);
    d.set_item("wall_time", summary.manifest.wall_time_seconds)?;
    d.set_item("intervals", summary.manifest.intervals)?;
    d.set_item("restarts", summary.manifest.restarts)?;
    d.set_item("output", out.map(|p| p.display().to_string()))?;
    let moments = summary
        .moments
        .iter()
        .map(|m| moments_dict(py, m, &names))
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("moments", moments)?;
    Ok(d)
}

/// Raw moments `E[u^n]`, `n = 1..=orders`, of the travelling-wave Burgers
/// problem at the points `xs` and time `t`.
#[pyfunction]
#[pyo3(signature = (nu, drift, sigma, xs, t, orders=4))]
fn exact_moments(
    nu: f64,
    drift: f64,
    sigma: f64,
    xs: Vec<f64>,
    t: f64,
    orders: usize,
) -> PyResult<Vec<Vec<f64>>> {
    exact_burgers_moments(nu, drift, sigma, orders, &xs, t).map_err(to_py)
}

/// Relative L2 errors of the moments in `run_dir` against `reference_dir`.
#[pyfunction]
fn compare<'py>(
    py: Python<'py>,
    run_dir: PathBuf,
    reference_dir: PathBuf,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let rows = compare_dirs(&run_dir, &reference_dir, &run_dir).map_err(to_py)?;
    rows.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("component", &r.component)?;
            d.set_item("order", r.order)?;
            d.set_item("time", r.time)?;
            d.set_item("error", r.error)?;
            d.set_item("relative", r.relative)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn dgpc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(resolve_config, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(exact_moments, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    Ok(())
}
