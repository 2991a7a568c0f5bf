use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 512;

/// A Gaussian kernel density estimate on a fixed grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KdeEstimate {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
    /// Projection axis the samples came from, if any.
    pub axis: Option<usize>,
}

impl KdeEstimate {
    /// Trapezoid integral of the density over the grid.
    pub fn mass(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
            .sum()
    }
}

/// Silverman's rule `0.9 min(σ, IQR/1.34) n^{−1/5}`. Falls back to `σ`
/// alone when the IQR vanishes, and to `n^{−1/5}` when all samples agree.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::Precondition(
            "a density estimate needs at least two samples".into(),
        ));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("density samples must be finite".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let std = (samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = match (std > 0.0, iqr > 0.0) {
        (true, true) => std.min(iqr / 1.34),
        (true, false) => std,
        _ => 1.0 / 0.9,
    };
    Ok(0.9 * spread * n.powf(-0.2))
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `DEFAULT_GRID_POINTS` points spanning the samples plus four bandwidths.
pub fn default_grid(samples: &[f64], bandwidth: f64) -> Vec<f64> {
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - 4.0 * bandwidth;
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 4.0 * bandwidth;
    let n = DEFAULT_GRID_POINTS;
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Gaussian KDE of `samples` on `grid` (default: [`default_grid`]) with the
/// given bandwidth (default: [`silverman_bandwidth`]).
pub fn kde(samples: &[f64], grid: Option<&[f64]>, bandwidth: Option<f64>) -> Result<KdeEstimate> {
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => {
            silverman_bandwidth(samples)?;
            h
        }
        Some(h) => {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be positive, got {h}"
            )))
        }
        None => silverman_bandwidth(samples)?,
    };
    let grid = grid.map_or_else(|| default_grid(samples, h), <[f64]>::to_vec);
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * PI).sqrt());
    let density = grid
        .iter()
        .map(|&x| {
            norm * samples
                .iter()
                .map(|&s| {
                    let u = (x - s) / h;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
        })
        .collect();
    Ok(KdeEstimate {
        grid,
        density,
        bandwidth: h,
        axis: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_samples_peak_at_their_value() {
        let e = kde(&[2.5; 10], None, None).unwrap();
        let (i, _) = e
            .density
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let n = e.grid.len();
        assert!((e.grid[i] - 2.5).abs() <= (e.grid[1] - e.grid[0]));
        for j in 0..n / 2 {
            assert!((e.density[j] - e.density[n - 1 - j]).abs() < 1e-12);
        }
    }

    #[test]
    fn needs_two_samples() {
        assert!(kde(&[1.0], None, None).is_err());
        assert!(kde(&[1.0, 2.0], None, Some(0.0)).is_err());
    }

    #[test]
    fn wider_bandwidth_lowers_the_peak() {
        let s = [0.0, 0.1, 0.3, 1.0, 1.1];
        let grid: Vec<f64> = (0..400).map(|i| -3.0 + i as f64 * 0.02).collect();
        let a = kde(&s, Some(&grid), Some(0.2)).unwrap();
        let b = kde(&s, Some(&grid), Some(0.4)).unwrap();
        let peak = |e: &KdeEstimate| e.density.iter().copied().fold(0.0, f64::max);
        assert!(peak(&b) <= peak(&a));
        assert!(a.mass() > 0.95 && a.mass() <= 1.0 + 1e-9);
    }
}
