//! Exact moments of stochastic Burgers with spatially constant forcing
//! amplitude started from a travelling-wave profile.
//!
//! With `sigma` constant the solution is `u(x, t) = u_det(x - z, t) + y`,
//! where `y = sigma W(t)` and `z = sigma int_0^t W`. The pair `(y, z)` is
//! centered Gaussian with covariance `sigma^2 [[t, t^2/2], [t^2/2, t^3/3]]`.

use std::f64::consts::PI;

use crate::error::{DgpcError, Result};
use crate::quadrature::gauss_legendre;

/// Quadrature points per direction.
pub const DEFAULT_POINTS: usize = 400;
/// Half-width of the integration box in standard deviations.
const BOX: f64 = 8.0;

/// Deterministic travelling-wave solution
/// `drift - 4 nu pi e cos(2 pi s) / (3 + e sin(2 pi s))` with
/// `e = exp(-4 nu pi^2 t)` and `s = x - drift t`.
pub fn travelling_wave(x: f64, t: f64, nu: f64, drift: f64) -> f64 {
    let e = (-4.0 * nu * PI * PI * t).exp();
    let s = 2.0 * PI * (x - drift * t);
    drift - 4.0 * nu * PI * e * s.cos() / (3.0 + e * s.sin())
}

/// Raw moments `E[u(x, t)^n]` for `n = 1..=orders` at every `x` in `xs`,
/// returned as `[order - 1][point]`.
pub fn exact_burgers_moments(
    nu: f64,
    drift: f64,
    sigma: f64,
    orders: usize,
    xs: &[f64],
    t: f64,
) -> Result<Vec<Vec<f64>>> {
    exact_burgers_moments_with(nu, drift, sigma, orders, xs, t, DEFAULT_POINTS)
}

/// [`exact_burgers_moments`] with an explicit quadrature size.
pub fn exact_burgers_moments_with(
    nu: f64,
    drift: f64,
    sigma: f64,
    orders: usize,
    xs: &[f64],
    t: f64,
    points: usize,
) -> Result<Vec<Vec<f64>>> {
    if t < 0.0 || !(nu > 0.0) || sigma < 0.0 || points == 0 {
        return Err(DgpcError::usage(
            "exact moments need t >= 0, nu > 0, sigma >= 0",
        ));
    }
    let mut out = vec![vec![0.0; xs.len()]; orders];
    if t == 0.0 || sigma == 0.0 {
        for (i, &x) in xs.iter().enumerate() {
            let u = travelling_wave(x, t, nu, drift);
            for (n, o) in out.iter_mut().enumerate() {
                o[i] = u.powi(n as i32 + 1);
            }
        }
        return Ok(out);
    }
    // (y, z) = L (g1, g2) with g standard normal
    let sy = sigma * t.sqrt();
    let l21 = 0.5 * sigma * t.powf(1.5);
    let l22 = sigma * t.powf(1.5) / 12f64.sqrt();
    let (nodes, weights) = gauss_legendre(points);
    let g: Vec<f64> = nodes.iter().map(|n| BOX * n).collect();
    let w: Vec<f64> = weights
        .iter()
        .zip(&g)
        .map(|(w, g)| BOX * w * (-0.5 * g * g).exp() / (2.0 * PI).sqrt())
        .collect();
    let mut pw = vec![0.0; orders];
    for (i, &x) in xs.iter().enumerate() {
        pw.iter_mut().for_each(|v| *v = 0.0);
        for (g1, w1) in g.iter().zip(&w) {
            let y = sy * g1;
            let zc = l21 * g1;
            for (g2, w2) in g.iter().zip(&w) {
                let z = zc + l22 * g2;
                let s = (x - z).rem_euclid(1.0);
                let u = travelling_wave(s, t, nu, drift) + y;
                let ww = w1 * w2;
                let mut p = u;
                for v in pw.iter_mut() {
                    *v += ww * p;
                    p *= u;
                }
            }
        }
        for (n, o) in out.iter_mut().enumerate() {
            o[i] = pw[n];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn zero_noise_gives_deterministic_wave() {
        let xs = [0.0, 0.3, 0.7];
        let m = exact_burgers_moments(0.02, 0.1, 0.0, 2, &xs, 0.5).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            let u = travelling_wave(x, 0.5, 0.02, 0.1);
            assert_eq!(m[0][i], u);
            assert_eq!(m[1][i], u * u);
        }
    }

    #[test]
    fn wave_solves_deterministic_burgers() {
        let (nu, c) = (0.02, 0.1);
        let h = 1e-4;
        for &(x, t) in &[(0.1, 0.3), (0.6, 1.2)] {
            let u = travelling_wave(x, t, nu, c);
            let ut =
                (travelling_wave(x, t + h, nu, c) - travelling_wave(x, t - h, nu, c)) / (2.0 * h);
            let up = travelling_wave(x + h, t, nu, c);
            let um = travelling_wave(x - h, t, nu, c);
            let ux = (up - um) / (2.0 * h);
            let uxx = (up - 2.0 * u + um) / (h * h);
            assert!((ut + u * ux - nu * uxx).abs() < 1e-6);
        }
    }

    #[test]
    fn quadrature_is_converged() {
        let xs = [0.0, 0.25, 0.8];
        let a = exact_burgers_moments_with(0.02, 0.1, 0.1, 4, &xs, 1.0, 200).unwrap();
        let b = exact_burgers_moments_with(0.02, 0.1, 0.1, 4, &xs, 1.0, 400).unwrap();
        for n in 0..4 {
            for i in 0..3 {
                assert!((a[n][i] - b[n][i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn spatially_averaged_variance_exceeds_brownian_variance() {
        // the cross term with the Brownian value averages out over x
        let xs: Vec<f64> = (0..64).map(|i| i as f64 / 64.0).collect();
        let m = exact_burgers_moments_with(0.02, 0.1, 0.1, 2, &xs, 1.0, 200).unwrap();
        let avg = (0..64).map(|i| m[1][i] - m[0][i] * m[0][i]).sum::<f64>() / 64.0;
        assert!(avg >= 0.01 && avg < 0.0105, "{avg}");
    }

    #[test]
    fn agrees_with_pathwise_sampling() {
        let (nu, c, sigma, t) = (0.02, 0.1, 0.1, 1.0);
        let xs = [0.2, 0.65];
        let exact = exact_burgers_moments(nu, c, sigma, 2, &xs, t).unwrap();
        // simulate W and its integral directly
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n, steps) = (20_000, 200);
        let dt = t / steps as f64;
        let mut acc = [[0.0; 2]; 2];
        for _ in 0..n {
            let (mut w, mut iw) = (0.0, 0.0);
            for _ in 0..steps {
                let dw: f64 = StandardNormal.sample(&mut rng);
                let dw = dw * dt.sqrt();
                iw += (w + 0.5 * dw) * dt;
                w += dw;
            }
            for (i, &x) in xs.iter().enumerate() {
                let u = travelling_wave((x - sigma * iw).rem_euclid(1.0), t, nu, c) + sigma * w;
                acc[i][0] += u;
                acc[i][1] += u * u;
            }
        }
        for i in 0..2 {
            let mean = acc[i][0] / n as f64;
            let m2 = acc[i][1] / n as f64;
            assert!((mean - exact[0][i]).abs() < 5.0 * 0.11 / (n as f64).sqrt());
            assert!((m2 - exact[1][i]).abs() / exact[1][i] < 5.0 * 1.5 / (n as f64).sqrt());
        }
    }
}
