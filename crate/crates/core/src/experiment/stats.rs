use serde::{Deserialize, Serialize};

/// Mean, sample standard deviation and the `mean ± 2 std` band of the
/// finite values at one position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Non-finite values are skipped; a single value has zero spread and no
/// values give NaN throughout.
pub fn moments(values: &[f64]) -> Moments {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let n = finite.len();
    if n == 0 {
        return Moments {
            count: 0,
            mean: f64::NAN,
            std: f64::NAN,
            lower: f64::NAN,
            upper: f64::NAN,
        };
    }
    let mean = finite.iter().sum::<f64>() / n as f64;
    let std = if n == 1 {
        0.0
    } else {
        (finite.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Moments {
        count: n,
        mean,
        std,
        lower: mean - 2.0 * std,
        upper: mean + 2.0 * std,
    }
}

/// Pointwise moments across equally long series.
pub fn pointwise(series: &[Vec<f64>]) -> Vec<Moments> {
    let len = series.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|i| moments(&series.iter().map(|s| s[i]).collect::<Vec<_>>()))
        .collect()
}

/// Least-squares slope of `log₂ y` against `log₂ x`.
pub fn log2_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.log2()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log2()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_has_zero_spread() {
        let m = moments(&[3.0]);
        assert_eq!((m.mean, m.std, m.lower, m.upper), (3.0, 0.0, 3.0, 3.0));
    }

    #[test]
    fn sample_std_of_two_points() {
        let m = moments(&[1.0, 3.0, f64::NAN]);
        assert_eq!(m.count, 2);
        assert!((m.std - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn slope_of_inverse_law() {
        let x = [32.0, 64.0, 128.0];
        let y: Vec<f64> = x.iter().map(|k| 5.0 / k).collect();
        assert!((log2_slope(&x, &y) + 1.0).abs() < 1e-12);
    }
}
