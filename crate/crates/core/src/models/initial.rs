//! Spatial profiles used for initial conditions and forcing amplitudes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::exact;
use crate::error::{DgpcError, Result};
use crate::spectral::Grid;

/// One factor of a separable Fourier term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wave {
    One,
    Cos(u32),
    Sin(u32),
}

impl Wave {
    fn eval(self, s: f64) -> f64 {
        match self {
            Wave::One => 1.0,
            Wave::Cos(k) => (2.0 * PI * k as f64 * s).cos(),
            Wave::Sin(k) => (2.0 * PI * k as f64 * s).sin(),
        }
    }
}

fn one() -> Wave {
    Wave::One
}

/// `amplitude * x(x) * y(y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub amplitude: f64,
    #[serde(default = "one")]
    pub x: Wave,
    #[serde(default = "one")]
    pub y: Wave,
}

/// A deterministic field on the periodic unit square (or interval).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Zero,
    Constant {
        value: f64,
    },
    Fourier {
        terms: Vec<Mode>,
    },
    /// `amplitude (exp(cos 2 pi x) - offset) sin(2 pi (x + shift))`.
    ModulatedWave {
        amplitude: f64,
        offset: f64,
        shift: f64,
    },
    /// Initial state of the travelling Burgers wave with known stochastic
    /// moments.
    BurgersWave {
        nu: f64,
        drift: f64,
    },
    ShearLayer {
        delta: f64,
        epsilon: f64,
        gamma: u32,
        #[serde(default)]
        reflect: bool,
    },
    LayeredTemperature {
        delta: f64,
    },
}

impl Profile {
    pub fn fourier(terms: &[(f64, Wave, Wave)]) -> Self {
        Profile::Fourier {
            terms: terms
                .iter()
                .map(|&(amplitude, x, y)| Mode { amplitude, x, y })
                .collect(),
        }
    }

    pub fn evaluate(&self, grid: &Grid) -> Result<Vec<f64>> {
        Ok(match self {
            Profile::Zero => vec![0.0; grid.n_points()],
            Profile::Constant { value } => vec![*value; grid.n_points()],
            Profile::Fourier { terms } => grid.sample(|x, y| {
                terms
                    .iter()
                    .map(|m| m.amplitude * m.x.eval(x) * m.y.eval(y))
                    .sum()
            }),
            Profile::ModulatedWave {
                amplitude,
                offset,
                shift,
            } => grid.sample(|x, _| {
                amplitude * ((2.0 * PI * x).cos().exp() - offset) * (2.0 * PI * (x + shift)).sin()
            }),
            Profile::BurgersWave { nu, drift } => {
                grid.sample(|x, _| exact::travelling_wave(x, 0.0, *nu, *drift))
            }
            Profile::ShearLayer {
                delta,
                epsilon,
                gamma,
                reflect,
            } => shear_layer(grid, *delta, *epsilon, *gamma, *reflect)?,
            Profile::LayeredTemperature { delta } => layered_temperature(grid, *delta)?,
        })
    }

    pub fn validate(&self, name: &str, errors: &mut Vec<String>) {
        match self {
            Profile::ShearLayer { delta, epsilon, .. } => {
                if !(*delta > 0.0) {
                    errors.push(format!("{name}.delta must be positive"));
                }
                if !(0.0..1.0).contains(epsilon) {
                    errors.push(format!("{name}.epsilon must lie in [0, 1)"));
                }
            }
            Profile::LayeredTemperature { delta } => {
                if !(*delta > 0.0 && *delta < 0.1) {
                    errors.push(format!("{name}.delta must lie in (0, 0.1)"));
                }
            }
            Profile::BurgersWave { nu, .. } => {
                if !(*nu > 0.0) {
                    errors.push(format!("{name}.nu must be positive"));
                }
            }
            _ => {}
        }
    }
}

/// Flat shear layer of width `delta` at `y = 1/2` whose width is perturbed
/// with amplitude `epsilon` and frequency `gamma`; zero grid mean. `reflect`
/// swaps the coordinates.
pub fn shear_layer(
    grid: &Grid,
    delta: f64,
    epsilon: f64,
    gamma: u32,
    reflect: bool,
) -> Result<Vec<f64>> {
    if grid.dim() != 2 {
        return Err(DgpcError::usage("shear layer needs a 2-D grid"));
    }
    if !(delta > 0.0) || !(0.0..1.0).contains(&epsilon) {
        return Err(DgpcError::usage(
            "shear layer needs delta > 0 and epsilon in [0, 1)",
        ));
    }
    let mut w = grid.sample(|x, y| {
        let (x, y) = if reflect { (y, x) } else { (x, y) };
        let i = 1.0 + epsilon * ((gamma as f64 * 2.0 * PI * x).cos() - 1.0);
        -(0.5 / delta) * (-i * (y - 0.5).powi(2) / (2.0 * delta * delta)).exp()
    });
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    w.iter_mut().for_each(|v| *v -= mean);
    Ok(w)
}

/// Smoothed step from 0 to 1 over `[-delta, delta]`.
pub fn mollified_heaviside(x: f64, delta: f64) -> f64 {
    if x < -delta {
        0.0
    } else if x > delta {
        1.0
    } else {
        (x + delta) / (2.0 * delta) + (PI * x / delta).sin() / (2.0 * PI)
    }
}

/// Four-layer temperature profile with interfaces of thickness `delta` at
/// `y = 1/4, 1/2, 3/4`.
pub fn layered_temperature(grid: &Grid, delta: f64) -> Result<Vec<f64>> {
    if grid.dim() != 2 {
        return Err(DgpcError::usage("temperature profile needs a 2-D grid"));
    }
    if !(delta > 0.0 && delta < 0.1) {
        return Err(DgpcError::usage(
            "temperature interface width must lie in (0, 0.1)",
        ));
    }
    Ok(grid.sample(|_, y| temperature_at(y, delta)))
}

fn temperature_at(y: f64, delta: f64) -> f64 {
    if y <= 0.4 {
        mollified_heaviside(y - 0.25, delta)
    } else if y < 0.6 {
        1.0 - 2.0 * mollified_heaviside(y - 0.5, delta)
    } else {
        -mollified_heaviside(0.75 - y, delta)
    }
}
