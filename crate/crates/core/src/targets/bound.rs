use std::f64::consts::PI;

use super::{sine_integral, TargetSpec};
use crate::error::{Error, Result};
use crate::lsq::trig::sin_cos_into;

/// Half-width of the spatial window; `exp(−L²/2)` is far below double precision.
const SPACE_EXTENT: f64 = 12.0;
/// Frequencies beyond `1/α` by this margin carry only the Gaussian tail.
const FREQUENCY_MARGIN: f64 = 12.0;
const INITIAL_X_INTERVALS: usize = 1024;
const INITIAL_OMEGA_INTERVALS: usize = 256;
const MAX_REFINEMENTS: usize = 7;

/// `‖f̂‖_{L¹(Rᵈ)}` together with the quadrature's convergence record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierL1Norm {
    pub value: f64,
    /// `‖ĝ‖_{L¹(R)}` of the one-dimensional profile `g(x) = Si(x/α) e^{−x²/2}`.
    pub profile_norm: f64,
    /// Relative change between the last two grids.
    pub relative_change: f64,
    pub x_points: usize,
    pub omega_points: usize,
}

/// Computes `‖f̂‖_{L¹}` using the unitary Fourier transform.
///
/// In rotated coordinates `f` is `g(x₁)` times `d − 1` unit Gaussians, each
/// contributing `‖ê‖_{L¹} = √(2π)`. Since `g` is odd,
/// `|ĝ(ω)| = √(2/π) |∫₀^∞ g(x) sin(ωx) dx|`, evaluated by composite Simpson
/// rules in `x` and `ω`; both grids are doubled until the relative change in
/// `‖ĝ‖_{L¹}` drops below `tol`.
pub fn fourier_l1_norm(spec: &TargetSpec, tol: f64) -> Result<FourierL1Norm> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let alpha = spec.alpha();
    let omega_max = 1.0 / alpha + FREQUENCY_MARGIN;
    let (mut nx, mut nw) = (INITIAL_X_INTERVALS, INITIAL_OMEGA_INTERVALS);
    let mut previous = profile_l1(alpha, nx, nw, omega_max);
    let mut change = f64::INFINITY;
    for _ in 0..MAX_REFINEMENTS {
        nx *= 2;
        nw *= 2;
        let current = profile_l1(alpha, nx, nw, omega_max);
        change = (current - previous).abs() / current.abs();
        previous = current;
        if change < tol {
            let gaussians = (2.0 * PI).powf((spec.dim() as f64 - 1.0) / 2.0);
            return Ok(FourierL1Norm {
                value: current * gaussians,
                profile_norm: current,
                relative_change: change,
                x_points: nx + 1,
                omega_points: nw + 1,
            });
        }
    }
    Err(Error::Accuracy {
        achieved: change,
        refinements: MAX_REFINEMENTS,
    })
}

fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

/// `2 ∫₀^{ω_max} |ĝ(ω)| dω` on `nx` × `nw` Simpson intervals.
fn profile_l1(alpha: f64, nx: usize, nw: usize, omega_max: f64) -> f64 {
    let hx = SPACE_EXTENT / nx as f64;
    let xs: Vec<f64> = (0..=nx).map(|i| i as f64 * hx).collect();
    let weighted: Vec<f64> = xs
        .iter()
        .zip(simpson_weights(nx, hx))
        .map(|(&x, w)| w * sine_integral(x / alpha) * (-x * x / 2.0).exp())
        .collect();
    let hw = omega_max / nw as f64;
    let mut phase = vec![0.0; nx + 1];
    let mut sin = vec![0.0; nx + 1];
    let mut cos = vec![0.0; nx + 1];
    let mut total = 0.0;
    for (j, ww) in simpson_weights(nw, hw).into_iter().enumerate() {
        let omega = j as f64 * hw;
        for (p, &x) in phase.iter_mut().zip(&xs) {
            *p = omega * x;
        }
        sin_cos_into(&phase, &mut sin, &mut cos);
        let transform: f64 = weighted.iter().zip(&sin).map(|(g, s)| g * s).sum();
        total += ww * transform.abs();
    }
    2.0 * (2.0 / PI).sqrt() * total
}

/// `|ĝ(ω)|` of the profile `g(x) = Si(x/α) e^{−x²/2}` at each `ω`, on the
/// finest grid of [`fourier_l1_norm`]'s default start.
pub fn profile_transform(alpha: f64, omegas: &[f64]) -> Vec<f64> {
    let nx = INITIAL_X_INTERVALS * 8;
    let hx = SPACE_EXTENT / nx as f64;
    let xs: Vec<f64> = (0..=nx).map(|i| i as f64 * hx).collect();
    let weighted: Vec<f64> = xs
        .iter()
        .zip(simpson_weights(nx, hx))
        .map(|(&x, w)| w * sine_integral(x / alpha) * (-x * x / 2.0).exp())
        .collect();
    let mut phase = vec![0.0; nx + 1];
    let mut sin = vec![0.0; nx + 1];
    let mut cos = vec![0.0; nx + 1];
    omegas
        .iter()
        .map(|&omega| {
            for (p, &x) in phase.iter_mut().zip(&xs) {
                *p = omega * x;
            }
            sin_cos_into(&phase, &mut sin, &mut cos);
            let t: f64 = weighted.iter().zip(&sin).map(|(g, s)| g * s).sum();
            (2.0 / PI).sqrt() * t.abs()
        })
        .collect()
}

/// Marginal of the optimal frequency density `p* ∝ |f̂|` along rotated
/// axis `axis` (0 is the `Si` direction), evaluated on `grid` and
/// normalized by the trapezoid rule over it.
pub fn optimal_marginal(spec: &TargetSpec, axis: usize, grid: &[f64]) -> Result<Vec<f64>> {
    if axis >= spec.dim() {
        return Err(Error::DimensionMismatch {
            what: "marginal axis",
            expected: spec.dim(),
            found: axis,
        });
    }
    let raw: Vec<f64> = if axis == 0 {
        profile_transform(spec.alpha(), grid)
    } else {
        grid.iter().map(|w| (-w * w / 2.0).exp()).collect()
    };
    let area: f64 = grid
        .windows(2)
        .zip(raw.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
        .sum();
    if !(area > 0.0) {
        return Err(Error::Precondition(
            "grid carries no optimal-density mass".into(),
        ));
    }
    Ok(raw.into_iter().map(|v| v / area).collect())
}

/// `(1 + λ) ‖f̂‖²_{L¹} / ((2π)ᵈ K)`.
pub fn error_bound(fourier_l1: f64, dim: usize, k: usize, lambda: f64) -> f64 {
    (1.0 + lambda) * fourier_l1 * fourier_l1 / ((2.0 * PI).powi(dim as i32) * k as f64)
}

/// The error bound for `K` nodes with the quadrature converged to 1e-3.
pub fn error_bound_constant(spec: &TargetSpec, k: usize, lambda: f64) -> Result<f64> {
    let norm = fourier_l1_norm(spec, 1e-3)?;
    Ok(error_bound(norm.value, spec.dim(), k, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let n = 8;
        let h = 2.0 / n as f64;
        let s: f64 = simpson_weights(n, h)
            .iter()
            .enumerate()
            .map(|(i, w)| w * (i as f64 * h).powi(3))
            .sum();
        assert!((s - 4.0).abs() < 1e-14);
    }

    #[test]
    fn bound_is_linear_in_one_plus_lambda_and_inverse_in_k() {
        let b = error_bound(3.0, 4, 64, 0.0);
        assert_eq!(error_bound(3.0, 4, 128, 0.0), b / 2.0);
        assert_eq!(error_bound(3.0, 4, 64, 1.0), 2.0 * b);
    }
}
