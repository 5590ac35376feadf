//! Run configuration: TOML files, named presets and dotted overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::dgpc::{DgpcSettings, Problem, Schedule};
use crate::error::{DgpcError, Result};
use crate::mc::McSettings;
use crate::models::initial::Profile;
use crate::models::viscosity::RandomViscosity;
use crate::models::{Burgers, Model, NavierStokes};
use crate::spectral::Grid;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Dgpc,
    Mc,
    /// Quadrature moments of the travelling-wave Burgers problem.
    Oracle,
}

fn yes() -> bool {
    true
}

fn is_true(v: &bool) -> bool {
    *v
}

fn is_false(v: &bool) -> bool {
    !*v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Burgers {
        /// Grid points per direction.
        grid: usize,
        nu: f64,
        /// Spatial amplitude of the white-noise forcing.
        sigma: Profile,
        initial: Profile,
        #[serde(default = "yes", skip_serializing_if = "is_true")]
        advection: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        viscosity: Option<RandomViscosity>,
    },
    NavierStokes {
        grid: usize,
        nu: f64,
        /// Temperature diffusivity; required with a temperature field.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu: Option<f64>,
        /// y-derivative of the forcing amplitude of the first velocity
        /// component.
        forcing_1_dy: Profile,
        /// x-derivative of the forcing amplitude of the second velocity
        /// component.
        forcing_2_dx: Profile,
        vorticity: Profile,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        temperature: Option<Profile>,
        #[serde(default, skip_serializing_if = "is_false")]
        diffusivity_tracks_viscosity: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        viscosity: Option<RandomViscosity>,
    },
}

impl ModelConfig {
    pub fn grid(&self) -> Result<Grid> {
        match self {
            ModelConfig::Burgers { grid, .. } => Grid::new(*grid, 1),
            ModelConfig::NavierStokes { grid, .. } => Grid::new(*grid, 2),
        }
    }

    pub fn viscosity(&self) -> Option<&RandomViscosity> {
        match self {
            ModelConfig::Burgers { viscosity, .. }
            | ModelConfig::NavierStokes { viscosity, .. } => viscosity.as_ref(),
        }
    }

    fn validate(&self, errors: &mut Vec<String>) {
        let (m, nu) = match self {
            ModelConfig::Burgers { grid, nu, .. } | ModelConfig::NavierStokes { grid, nu, .. } => {
                (*grid, *nu)
            }
        };
        if m < 4 || m % 2 != 0 {
            errors.push("model.grid must be an even number of at least 4".into());
        } else if !m.is_power_of_two() {
            log::warn!("model.grid = {m} is not a power of two; transforms will be slower");
        }
        if !(nu >= 0.0) {
            errors.push("model.nu must be nonnegative".into());
        }
        if let Some(v) = self.viscosity() {
            v.validate(errors);
        }
        match self {
            ModelConfig::Burgers { sigma, initial, .. } => {
                sigma.validate("model.sigma", errors);
                initial.validate("model.initial", errors);
            }
            ModelConfig::NavierStokes {
                mu,
                forcing_1_dy,
                forcing_2_dx,
                vorticity,
                temperature,
                diffusivity_tracks_viscosity,
                viscosity,
                ..
            } => {
                forcing_1_dy.validate("model.forcing_1_dy", errors);
                forcing_2_dx.validate("model.forcing_2_dx", errors);
                vorticity.validate("model.vorticity", errors);
                if let Some(t) = temperature {
                    t.validate("model.temperature", errors);
                    if mu.is_none() && !diffusivity_tracks_viscosity {
                        errors.push("model.mu is required with a temperature field".into());
                    }
                }
                if mu.is_some_and(|m| !(m >= 0.0)) {
                    errors.push("model.mu must be nonnegative".into());
                }
                if matches!(viscosity, Some(RandomViscosity::SquaredKernel { .. })) {
                    errors.push(
                        "model.viscosity: kernel viscosity is only available for Burgers".into(),
                    );
                }
            }
        }
    }

    /// Model and deterministic initial data.
    pub fn build(&self) -> Result<Problem> {
        let grid = self.grid()?;
        match self {
            ModelConfig::Burgers {
                nu,
                sigma,
                initial,
                advection,
                viscosity,
                ..
            } => {
                let mut b = Burgers::new(grid.clone(), *nu, &sigma.evaluate(&grid)?)?;
                if !advection {
                    b = b.without_advection();
                }
                Problem::new(
                    Model::Burgers(b),
                    vec![initial.evaluate(&grid)?],
                    viscosity.clone(),
                )
            }
            ModelConfig::NavierStokes {
                nu,
                mu,
                forcing_1_dy,
                forcing_2_dx,
                vorticity,
                temperature,
                diffusivity_tracks_viscosity,
                viscosity,
                ..
            } => {
                let mu = match (temperature, mu) {
                    (None, _) => None,
                    (Some(_), Some(m)) => Some(*m),
                    (Some(_), None) => Some(*nu),
                };
                let mut ns = NavierStokes::new(
                    grid.clone(),
                    *nu,
                    mu,
                    &forcing_1_dy.evaluate(&grid)?,
                    &forcing_2_dx.evaluate(&grid)?,
                )?;
                if *diffusivity_tracks_viscosity {
                    ns = ns.with_diffusivity_tracking_viscosity();
                }
                let mut initial = vec![vorticity.evaluate(&grid)?];
                if let Some(t) = temperature {
                    initial.push(t.evaluate(&grid)?);
                }
                Problem::new(Model::NavierStokes(ns), initial, viscosity.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSettings {
    pub final_time: f64,
    /// Additional times at which moments are written.
    #[serde(default)]
    pub output_times: Vec<f64>,
    #[serde(default = "four")]
    pub orders: usize,
    #[serde(default = "points")]
    pub points: usize,
}

fn four() -> usize {
    4
}

fn points() -> usize {
    crate::models::exact::DEFAULT_POINTS
}

/// Parameters of the exact-moment problem extracted from the model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleProblem {
    pub nu: f64,
    pub drift: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub method: Method,
    /// Output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Write a snapshot every this many restarts; zero disables snapshots.
    #[serde(default)]
    pub snapshot_every: usize,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dgpc: Option<DgpcSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSettings>,
}

impl RunConfig {
    /// Semantic checks; reports every problem at once.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        self.model.validate(&mut errors);
        if let Some(d) = &self.dgpc {
            d.validate(&mut errors);
            let first = match &d.schedule {
                Schedule::Fixed { dt } => *dt,
                Schedule::Adaptive(c) => c.dt0,
            };
            if first > d.final_time {
                errors.push("dgpc schedule step exceeds dgpc.final_time".into());
            }
            if d.inner_dt > first {
                errors.push("dgpc.inner_dt exceeds the restart interval".into());
            }
            if self.model.viscosity().is_some() && d.kl_modes == 0 {
                errors.push("dgpc.kl_modes must be positive with a random viscosity".into());
            }
        }
        if let Some(m) = &self.mc {
            m.validate(&mut errors);
        }
        match self.method {
            Method::Dgpc if self.dgpc.is_none() => {
                errors.push("method dgpc needs a [dgpc] section".into())
            }
            Method::Mc if self.mc.is_none() => {
                errors.push("method mc needs an [mc] section".into())
            }
            Method::Oracle => {
                if self.oracle.is_none() {
                    errors.push("method oracle needs an [oracle] section".into());
                }
                if let Err(e) = self.oracle_problem() {
                    errors.push(e.to_string());
                }
            }
            _ => {}
        }
        if let Some(o) = &self.oracle {
            if !(o.final_time > 0.0) {
                errors.push("oracle.final_time must be positive".into());
            }
            if o.orders == 0 || o.orders > 4 {
                errors.push("oracle.orders must lie in 1..=4".into());
            }
            if o.points == 0 {
                errors.push("oracle.points must be positive".into());
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(DgpcError::Config(errors))
        }
    }

    /// Exact-moment problem: Burgers with constant forcing amplitude started
    /// from the travelling wave.
    pub fn oracle_problem(&self) -> Result<OracleProblem> {
        match &self.model {
            ModelConfig::Burgers {
                nu,
                sigma: Profile::Constant { value },
                initial: Profile::BurgersWave { nu: wave_nu, drift },
                viscosity: None,
                advection: true,
                ..
            } => {
                if (nu - wave_nu).abs() > 1e-15 * nu.abs().max(1.0) {
                    return Err(DgpcError::config(
                        "oracle: model.nu and model.initial.nu must agree",
                    ));
                }
                Ok(OracleProblem {
                    nu: *nu,
                    drift: *drift,
                    sigma: *value,
                })
            }
            _ => Err(DgpcError::config(
                "oracle needs Burgers with constant sigma, a burgers_wave initial condition and deterministic viscosity",
            )),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| DgpcError::internal(format!("serializing config: {e}")))
    }
}

/// Names of the built-in presets with their variants.
pub const PRESETS: &[(&str, &[&str])] = &[
    ("example1", &["d3", "d4", "d5", "adaptive"]),
    ("example2", &["dt0.1", "dt0.2", "dt0.4"]),
    ("example3", &["n1", "n2", "n3"]),
    ("example4", &["i", "ii", "iii"]),
    ("example5", &["d4", "d6", "d8"]),
    ("example6", &["d4", "d6", "d8"]),
    ("example7", &["a", "b", "c"]),
];

const EXAMPLE1: &str = r#"
method = "dgpc"
[model]
kind = "burgers"
grid = 128
nu = 0.01
sigma = { kind = "fourier", terms = [{ amplitude = 0.5, x = { cos = 1 } }] }
initial = { kind = "fourier", terms = [{ amplitude = 0.5, x = { sin = 1 } }] }
[dgpc]
forcing_modes = 2
degree = 2
kl_modes = 5
samples = 100000
caps = { kind = "leading_quadratic" }
schedule = { kind = "fixed", dt = 0.1 }
inner_dt = 0.001
final_time = 3.0
seed = 1
[mc]
samples = 100000
dt = 0.001
final_time = 3.0
seed = 2
"#;

const EXAMPLE2: &str = r#"
method = "dgpc"
[model]
kind = "burgers"
grid = 128
nu = 0.005
sigma = { kind = "fourier", terms = [{ amplitude = 0.5, x = { cos = 2 } }] }
initial = { kind = "modulated_wave", amplitude = 0.5, offset = 1.5, shift = 0.37 }
[dgpc]
forcing_modes = 2
degree = 2
kl_modes = 4
samples = 100000
caps = { kind = "leading_quadratic" }
schedule = { kind = "fixed", dt = 0.1 }
inner_dt = 0.001
final_time = 2.4
seed = 1
[mc]
samples = 20000
dt = 0.001
final_time = 2.4
seed = 2
"#;

const EXAMPLE3: &str = r#"
method = "dgpc"
[model]
kind = "burgers"
grid = 128
nu = 0.02
sigma = { kind = "constant", value = 0.1 }
initial = { kind = "burgers_wave", nu = 0.02, drift = 0.1 }
[dgpc]
forcing_modes = 3
degree = 3
kl_modes = 4
samples = 300000
caps = { kind = "leading_pairs" }
schedule = { kind = "fixed", dt = 0.1 }
inner_dt = 0.001
final_time = 1.0
seed = 1
[mc]
samples = 20000
dt = 0.001
final_time = 1.0
seed = 2
[oracle]
final_time = 1.0
"#;

const EXAMPLE4: &str = r#"
method = "dgpc"
[model]
kind = "burgers"
grid = 128
nu = 0.005
sigma = { kind = "fourier", terms = [{ amplitude = 0.1, x = { cos = 1 } }] }
initial = { kind = "fourier", terms = [{ amplitude = 0.5, x = { cos = 2 } }] }
viscosity = { kind = "squared_kernel", offset = 0.005, amplitude = 0.04, correlation_length = 2.0, modes = 3 }
[dgpc]
forcing_modes = 2
degree = 2
kl_modes = 8
samples = 300000
schedule = { kind = "fixed", dt = 0.1 }
inner_dt = 0.001
final_time = 4.0
seed = 1
[mc]
samples = 20000
dt = 0.001
final_time = 4.0
seed = 2
"#;

const EXAMPLE5: &str = r#"
method = "dgpc"
[model]
kind = "navier_stokes"
grid = 128
nu = 0.0002
mu = 0.0002
forcing_1_dy = { kind = "fourier", terms = [{ amplitude = 0.3141592653589793, x = { cos = 1 }, y = { cos = 1 } }] }
forcing_2_dx = { kind = "fourier", terms = [{ amplitude = 0.3141592653589793, x = { cos = 1 }, y = { sin = 1 } }] }
vorticity = { kind = "shear_layer", delta = 0.025, epsilon = 0.3, gamma = 2 }
temperature = { kind = "layered_temperature", delta = 0.025 }
[dgpc]
forcing_modes = 2
degree = 2
kl_modes = 8
samples = 200000
caps = { kind = "per_component" }
schedule = { kind = "fixed", dt = 0.1 }
inner_dt = 0.002
final_time = 1.0
kl_method = { kind = "randomized", oversample = 10 }
seed = 1
[mc]
samples = 10000
dt = 0.002
final_time = 1.0
seed = 2
"#;

const EXAMPLE6: &str = r#"
method = "dgpc"
[model]
kind = "navier_stokes"
grid = 64
nu = 0.0003
forcing_1_dy = { kind = "fourier", terms = [{ amplitude = 0.3141592653589793, x = { cos = 1 }, y = { cos = 1 } }] }
forcing_2_dx = { kind = "fourier", terms = [{ amplitude = 0.3141592653589793, x = { cos = 1 }, y = { sin = 1 } }] }
vorticity = { kind = "shear_layer", delta = 0.025, epsilon = 0.3, gamma = 2 }
temperature = { kind = "layered_temperature", delta = 0.025 }
diffusivity_tracks_viscosity = true
viscosity = { kind = "uniform", low = 0.0002, high = 0.0004 }
[dgpc]
forcing_modes = 2
degree = 2
kl_modes = 8
samples = 300000
caps = { kind = "per_component" }
schedule = { kind = "fixed", dt = 0.1 }
inner_dt = 0.002
final_time = 0.5
kl_method = { kind = "randomized", oversample = 10 }
seed = 1
[mc]
samples = 90000
dt = 0.002
final_time = 0.5
seed = 2
"#;

const EXAMPLE7: &str = r#"
method = "dgpc"
[model]
kind = "navier_stokes"
grid = 64
nu = 0.00055
forcing_1_dy = { kind = "fourier", terms = [{ amplitude = 0.3141592653589793, x = { cos = 1 }, y = { cos = 1 } }] }
forcing_2_dx = { kind = "fourier", terms = [{ amplitude = 0.3141592653589793, x = { cos = 1 }, y = { sin = 1 } }] }
vorticity = { kind = "shear_layer", delta = 0.05, epsilon = 0.3, gamma = 2, reflect = true }
[dgpc]
forcing_modes = 2
degree = 2
kl_modes = 6
samples = 300000
caps = { kind = "per_component" }
schedule = { kind = "fixed", dt = 0.12 }
inner_dt = 0.004
final_time = 288.0
integrator = "adams_pc4"
kl_method = { kind = "randomized", oversample = 10 }
higher_moments = true
seed = 1
"#;

fn variant(base: &str, v: &str) -> Option<&'static str> {
    Some(match (base, v) {
        ("example1", "d3") => "dgpc.kl_modes = 3",
        ("example1", "d4") => "dgpc.kl_modes = 4",
        ("example1", "d5") => "dgpc.kl_modes = 5",
        ("example1", "adaptive") => {
            "dgpc.schedule = { kind = \"adaptive\", epsilon = 0.01, dt0 = 0.1, dt_max = 0.5, fit_degree = 2 }"
        }
        ("example2", "dt0.1") => "dgpc.schedule = { kind = \"fixed\", dt = 0.1 }",
        ("example2", "dt0.2") => "dgpc.schedule = { kind = \"fixed\", dt = 0.2 }",
        ("example2", "dt0.4") => "dgpc.schedule = { kind = \"fixed\", dt = 0.4 }",
        ("example3", "n1") => "dgpc.degree = 1",
        ("example3", "n2") => "dgpc.degree = 2",
        ("example3", "n3") => "dgpc.degree = 3",
        ("example4", "i") => "model.viscosity.amplitude = 0.04\nmodel.sigma.terms = [{ amplitude = 0.1, x = { cos = 1 } }]",
        ("example4", "ii") => "model.viscosity.amplitude = 0.1\nmodel.sigma.terms = [{ amplitude = 0.1, x = { cos = 1 } }]",
        ("example4", "iii") => "model.viscosity.amplitude = 0.1\nmodel.sigma.terms = [{ amplitude = 0.04, x = { cos = 1 } }]",
        ("example5" | "example6", "d4") => "dgpc.kl_modes = 4",
        ("example5" | "example6", "d6") => "dgpc.kl_modes = 6",
        ("example5" | "example6", "d8") => "dgpc.kl_modes = 8",
        ("example7", "a") => "model.vorticity = { kind = \"shear_layer\", delta = 0.05, epsilon = 0.3, gamma = 2, reflect = true }",
        ("example7", "b") => "model.vorticity = { kind = \"shear_layer\", delta = 0.05, epsilon = 0.3, gamma = 1 }",
        ("example7", "c") => "model.vorticity = { kind = \"shear_layer\", delta = 0.1, epsilon = 0.5, gamma = 3 }",
        _ => return None,
    })
}

fn parse_table(text: &str, origin: &str) -> Result<Table> {
    text.parse::<Table>()
        .map_err(|e| DgpcError::Config(vec![format!("{origin}: {e}")]))
}

/// Preset `name` or `name:variant` as a TOML table.
pub fn preset(name: &str) -> Result<Table> {
    let (base, var) = match name.split_once(':') {
        Some((b, v)) => (b, Some(v)),
        None => (name, None),
    };
    let text = match base {
        "example1" => EXAMPLE1,
        "example2" => EXAMPLE2,
        "example3" => EXAMPLE3,
        "example4" => EXAMPLE4,
        "example5" => EXAMPLE5,
        "example6" => EXAMPLE6,
        "example7" => EXAMPLE7,
        _ => {
            let known: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
            return Err(DgpcError::Config(vec![format!(
                "unknown preset `{base}`; available: {}",
                known.join(", ")
            )]));
        }
    };
    let mut table = parse_table(text, base)?;
    if let Some(v) = var {
        let lines = variant(base, v).ok_or_else(|| {
            let vars = PRESETS
                .iter()
                .find(|p| p.0 == base)
                .map_or(&[][..], |p| p.1);
            DgpcError::Config(vec![format!(
                "unknown variant `{v}` of {base}; available: {}",
                vars.join(", ")
            )])
        })?;
        for line in lines.lines() {
            apply_override(&mut table, line)?;
        }
    }
    Ok(table)
}

/// Recursive merge; a table whose `kind` changes replaces the old one.
pub fn deep_merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o))
                if b.get("kind") == o.get("kind") || o.get("kind").is_none() =>
            {
                deep_merge(b, o)
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Applies `a.b.c = value`; the value is parsed as TOML, falling back to a
/// bare string.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| {
        DgpcError::Config(vec![format!(
            "override `{assignment}` is not of the form key=value"
        )])
    })?;
    let key = key.trim();
    let raw = raw.trim();
    if key.is_empty() {
        return Err(DgpcError::Config(vec![format!(
            "override `{assignment}` has an empty key"
        )]));
    }
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => {
                return Err(DgpcError::Config(vec![format!(
                    "override `{key}`: `{p}` is not a table"
                )]))
            }
        };
    }
    let last = parts[parts.len() - 1].to_string();
    let mut single = Table::new();
    single.insert(last, value);
    deep_merge(cur, single);
    Ok(())
}

/// Resolves a configuration: preset (from `preset` or the file's `preset`
/// key), then the file, then the overrides.
pub fn load_config(
    path: Option<&Path>,
    preset_name: Option<&str>,
    overrides: &[String],
) -> Result<RunConfig> {
    let user = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| DgpcError::Config(vec![format!("reading {}: {e}", p.display())]))?;
            parse_table(&text, &p.display().to_string())?
        }
        None => Table::new(),
    };
    let name = preset_name.map(str::to_string).or_else(|| {
        user.get("preset")
            .and_then(Value::as_str)
            .map(str::to_string)
    });
    let mut table = match &name {
        Some(n) => preset(n)?,
        None => Table::new(),
    };
    deep_merge(&mut table, user);
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    if let Some(n) = name {
        table.insert("preset".into(), Value::String(n));
    }
    from_table(table)
}

/// Parses and validates a configuration from TOML text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &[])
}

/// [`parse_config`] followed by dotted overrides.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut table = parse_table(text, "config")?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    from_table(table)
}

fn from_table(table: Table) -> Result<RunConfig> {
    let cfg: RunConfig = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| DgpcError::Config(vec![e.message().to_string()]))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::CapRule;

    #[test]
    fn every_preset_and_variant_resolves() {
        for (base, vars) in PRESETS {
            let cfg = load_config(None, Some(base), &[]).unwrap();
            assert_eq!(cfg.preset.as_deref(), Some(*base));
            for v in *vars {
                let name = format!("{base}:{v}");
                let cfg =
                    load_config(None, Some(&name), &[]).unwrap_or_else(|e| panic!("{name}: {e}"));
                let text = cfg.to_toml().unwrap();
                assert_eq!(parse_config(&text).unwrap(), cfg, "{name}");
            }
        }
    }

    #[test]
    fn first_preset_parameters() {
        let cfg = load_config(None, Some("example1"), &[]).unwrap();
        let d = cfg.dgpc.as_ref().unwrap();
        assert_eq!((d.forcing_modes, d.degree, d.samples), (2, 2, 100_000));
        assert_eq!(d.schedule, Schedule::Fixed { dt: 0.1 });
        assert_eq!(d.final_time, 3.0);
        assert_eq!(d.caps, CapRule::LeadingQuadratic);
        let problem = cfg.model.build().unwrap();
        let grid = problem.model.grid();
        assert_eq!(grid.m(), 128);
        assert_eq!(problem.model.viscosity(), 0.01);
        let x = grid.coords(5).0;
        assert!(
            (problem.initial[0][5] - 0.5 * (2.0 * std::f64::consts::PI * x).sin()).abs() < 1e-15
        );
    }

    #[test]
    fn overrides_and_kind_replacement() {
        let cfg = load_config(
            None,
            Some("example1"),
            &[
                "dgpc.kl_modes=3".into(),
                "model.initial = { kind = \"zero\" }".into(),
                "output = results/run1".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.dgpc.unwrap().kl_modes, 3);
        assert_eq!(
            cfg.model,
            ModelConfig::Burgers {
                grid: 128,
                nu: 0.01,
                sigma: Profile::fourier(&[(
                    0.5,
                    crate::models::initial::Wave::Cos(1),
                    crate::models::initial::Wave::One
                )]),
                initial: Profile::Zero,
                advection: true,
                viscosity: None,
            }
        );
        assert_eq!(cfg.output, Some(PathBuf::from("results/run1")));
    }

    #[test]
    fn missing_final_time_is_named() {
        let text = r#"
[model]
kind = "burgers"
grid = 16
nu = 0.1
sigma = { kind = "zero" }
initial = { kind = "zero" }
[dgpc]
forcing_modes = 1
degree = 1
kl_modes = 1
samples = 10
schedule = { kind = "fixed", dt = 0.1 }
inner_dt = 0.01
"#;
        let err = parse_config(text).unwrap_err().to_string();
        assert!(err.contains("final_time"), "{err}");
    }

    #[test]
    fn every_violation_is_listed() {
        let err = load_config(
            None,
            Some("example1"),
            &[
                "dgpc.schedule.dt = 5.0".into(),
                "dgpc.samples = 1".into(),
                "model.nu = -1.0".into(),
            ],
        )
        .unwrap_err();
        match err {
            DgpcError::Config(list) => {
                assert!(
                    list.iter().any(|e| e.contains("exceeds dgpc.final_time")),
                    "{list:?}"
                );
                assert!(list.iter().any(|e| e.contains("samples")));
                assert!(list.iter().any(|e| e.contains("model.nu")));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = load_config(None, Some("example1"), &["dgpc.bogus = 1".into()]).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        assert!(load_config(None, Some("example9"), &[]).is_err());
        assert!(load_config(None, Some("example1:d9"), &[]).is_err());
    }

    #[test]
    fn oracle_problem_extraction() {
        let cfg = load_config(None, Some("example3"), &["method = \"oracle\"".into()]).unwrap();
        let p = cfg.oracle_problem().unwrap();
        assert_eq!((p.nu, p.drift, p.sigma), (0.02, 0.1, 0.1));
        assert!(load_config(None, Some("example1"), &["method = \"oracle\"".into()]).is_err());
    }
}
