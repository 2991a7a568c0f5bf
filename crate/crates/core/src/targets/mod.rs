//! The synthetic regression benchmark: a regularized discontinuity built
//! from the sine integral, its data sets, and the reference error bound.

mod bound;
mod dataset;
mod si;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

pub use bound::{
    error_bound, error_bound_constant, fourier_l1_norm, optimal_marginal, profile_transform,
    FourierL1Norm,
};
pub use dataset::{
    denormalize, generate_dataset, generate_dataset_with, normalize, normalize_with, Dataset,
    NormalizationStats, Provenance,
};
pub use si::sine_integral;

/// Width of the regularized discontinuity used throughout the experiments.
pub const DEFAULT_ALPHA: f64 = 0.01;

/// The rotation of the stand-alone tests as printed, to four decimals.
pub const PRINTED_ROTATION: [[f64; 4]; 4] = [
    [0.8617, 0.4975, -0.0998, -0.0000],
    [0.3028, -0.5246, -0.0000, 0.7957],
    [0.0865, 0.0499, 0.9950, 0.0000],
    [0.3978, -0.6891, -0.0000, -0.6057],
];

/// Orthogonality tolerance for matrices printed to four decimals.
pub const PRINTED_TOLERANCE: f64 = 1e-4;
/// Orthogonality tolerance for generated matrices.
pub const EXACT_TOLERANCE: f64 = 1e-10;

/// `f(x) = Si([B⁻¹x]₁ / α) · exp(−‖B⁻¹x‖² / 2)` for an orthogonal `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetSpec {
    alpha: f64,
    rotation: Array2<f64>,
}

impl TargetSpec {
    /// Checks `BᵀB = I` entrywise to `tolerance`.
    pub fn new(rotation: Array2<f64>, alpha: f64, tolerance: f64) -> Result<Self> {
        let (r, c) = rotation.dim();
        if r != c || r == 0 {
            return Err(Error::InvalidConfig(format!(
                "rotation must be square and nonempty, got {r}×{c}"
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        let btb = rotation.t().dot(&rotation);
        for ((i, j), v) in btb.indexed_iter() {
            let expect = if i == j { 1.0 } else { 0.0 };
            if (v - expect).abs() > tolerance {
                return Err(Error::InvalidConfig(format!(
                    "rotation is not orthogonal: (BᵀB)[{i},{j}] = {v}"
                )));
            }
        }
        Ok(Self { alpha, rotation })
    }

    /// The identity rotation in `dim` dimensions.
    pub fn axis_aligned(dim: usize, alpha: f64) -> Result<Self> {
        Self::new(Array2::eye(dim), alpha, EXACT_TOLERANCE)
    }

    /// The 4×4 rotation used for the stand-alone training tests: the printed
    /// four-decimal matrix projected onto the nearest orthogonal matrix.
    pub fn rotated_4d(alpha: f64) -> Result<Self> {
        Self::new(printed_rotation(), alpha, PRINTED_TOLERANCE)?;
        Self::new(
            nearest_orthogonal(printed_rotation()),
            alpha,
            EXACT_TOLERANCE,
        )
    }

    pub fn dim(&self) -> usize {
        self.rotation.nrows()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rotation(&self) -> &Array2<f64> {
        &self.rotation
    }

    /// `B⁻¹x`, computed as `Bᵀx`.
    pub fn inverse_rotate(&self, x: ArrayView1<'_, f64>) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..n {
                    s += self.rotation[[j, i]] * x[j];
                }
                s
            })
            .collect()
    }
}

pub fn printed_rotation() -> Array2<f64> {
    Array2::from_shape_fn((4, 4), |(i, j)| PRINTED_ROTATION[i][j])
}

/// Orthogonal polar factor of a nearly orthogonal matrix, by the Björck
/// iteration `X ← X (3I − XᵀX) / 2`.
fn nearest_orthogonal(mut x: Array2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let eye = Array2::<f64>::eye(n);
    for _ in 0..50 {
        let xtx = x.t().dot(&x);
        let defect = (&xtx - &eye).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if defect < 1e-15 {
            break;
        }
        x = x.dot(&(&eye * 3.0 - &xtx)) * 0.5;
    }
    x
}

pub fn target_f(x: ArrayView1<'_, f64>, spec: &TargetSpec) -> f64 {
    assert_eq!(x.len(), spec.dim(), "point dimension must match the target");
    let z = spec.inverse_rotate(x);
    profile(&z, spec.alpha)
}

/// The target without any rotation, `Si(x₁/α)·exp(−‖x‖²/2)`.
pub fn target_unrotated(x: ArrayView1<'_, f64>, alpha: f64) -> f64 {
    let z: Vec<f64> = x.iter().copied().collect();
    profile(&z, alpha)
}

fn profile(z: &[f64], alpha: f64) -> f64 {
    let r2: f64 = z.iter().map(|v| v * v).sum();
    sine_integral(z[0] / alpha) * (-r2 / 2.0).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;

    #[test]
    fn printed_rotation_is_orthogonal_only_at_print_precision() {
        assert!(TargetSpec::new(printed_rotation(), DEFAULT_ALPHA, PRINTED_TOLERANCE).is_ok());
        assert!(TargetSpec::new(printed_rotation(), DEFAULT_ALPHA, 1e-12).is_err());
    }

    #[test]
    fn projected_rotation_stays_within_print_precision() {
        let b = TargetSpec::rotated_4d(DEFAULT_ALPHA).unwrap();
        let diff = b.rotation() - &printed_rotation();
        assert!(diff.iter().all(|d| d.abs() < 1e-4));
        assert!(TargetSpec::new(b.rotation().clone(), DEFAULT_ALPHA, 1e-14).is_ok());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(TargetSpec::new(Array2::eye(3) * 2.0, 0.1, 1e-10).is_err());
        assert!(TargetSpec::axis_aligned(2, 0.0).is_err());
    }

    #[test]
    fn target_vanishes_at_origin() {
        let spec = TargetSpec::rotated_4d(DEFAULT_ALPHA).unwrap();
        assert_eq!(target_f(Array1::zeros(4).view(), &spec), 0.0);
    }

    #[test]
    fn identity_rotation_matches_unrotated_bitwise() {
        let spec = TargetSpec::axis_aligned(4, DEFAULT_ALPHA).unwrap();
        for x in [[0.3, -1.2, 0.5, 2.0], [-0.001, 0.0, 3.0, -0.2]] {
            let x = Array1::from(x.to_vec());
            assert_eq!(
                target_f(x.view(), &spec).to_bits(),
                target_unrotated(x.view(), DEFAULT_ALPHA).to_bits()
            );
        }
    }

    #[test]
    fn decays_like_the_gaussian_envelope() {
        let spec = TargetSpec::rotated_4d(DEFAULT_ALPHA).unwrap();
        // |Si| peaks at Si(π).
        let si_max = sine_integral(std::f64::consts::PI);
        for x in [
            [5.0, -5.0, 5.0, 5.0],
            [10.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, -10.0],
        ] {
            let x = Array1::from(x.to_vec());
            let bound = si_max * (-50.0 * (1.0 - 1e-12f64)).exp();
            assert!(target_f(x.view(), &spec).abs() <= bound);
        }
    }
}
