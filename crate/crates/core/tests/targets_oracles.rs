use std::f64::consts::PI;

use arff_core::targets::{
    denormalize, error_bound, error_bound_constant, fourier_l1_norm, generate_dataset, normalize,
    printed_rotation, sine_integral, target_f, TargetSpec, DEFAULT_ALPHA, PRINTED_TOLERANCE,
};
use ndarray::array;
use proptest::prelude::*;
use statrs::function::erf::erf;

/// Adaptive Simpson quadrature, independent of the library's integrators.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 50)
}

fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        t.sin() / t
    }
}

/// `Si(x)` by quadrature over unit panels.
fn si_oracle(x: f64) -> f64 {
    let panels = x.ceil() as usize;
    (0..panels)
        .map(|i| {
            let a = i as f64 * x / panels as f64;
            let b = (i + 1) as f64 * x / panels as f64;
            adaptive_simpson(&sinc, a, b, 1e-15)
        })
        .sum()
}

#[test]
fn sine_integral_at_one() {
    let oracle = si_oracle(1.0);
    assert!((oracle - 0.946083070367183).abs() < 1e-13);
    assert!((sine_integral(1.0) - oracle).abs() < 1e-13);
}

#[test]
fn sine_integral_matches_quadrature() {
    for x in [0.1, 0.5, 2.0, 3.7, 8.0, 15.0, 40.0, 100.0] {
        let oracle = si_oracle(x);
        assert!((sine_integral(x) - oracle).abs() < 1e-11, "Si({x}): {} vs {oracle}", sine_integral(x));
        assert!((sine_integral(-x) + oracle).abs() < 1e-11);
    }
}

#[test]
fn target_at_unit_first_axis() {
    let spec = TargetSpec::axis_aligned(4, 0.01).unwrap();
    let expected = si_oracle(100.0) * (-0.5f64).exp();
    let f = target_f(array![1.0, 0.0, 0.0, 0.0].view(), &spec);
    assert!((f - expected).abs() < 1e-12, "{f} vs {expected}");
    assert!((f - 0.947537643).abs() < 1e-8);
}

#[test]
fn printed_rotation_first_row_and_orthogonality() {
    let b = printed_rotation();
    assert_eq!(b.row(0).to_vec(), vec![0.8617, 0.4975, -0.0998, -0.0]);
    let gram = b.t().dot(&b);
    for i in 0..4 {
        for j in 0..4 {
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((gram[[i, j]] - target).abs() <= PRINTED_TOLERANCE, "{i},{j}");
        }
    }
    assert!(TargetSpec::rotated_4d(DEFAULT_ALPHA).is_ok());
}

#[test]
fn sample_inputs_are_centered() {
    let spec = TargetSpec::rotated_4d(DEFAULT_ALPHA).unwrap();
    let d = generate_dataset(100_000, &spec, 9).unwrap();
    for c in d.inputs.columns() {
        let mean = c.sum() / c.len() as f64;
        assert!(mean.abs() <= 0.013, "{mean}");
    }
}

/// `‖ĝ‖_{L¹}` for `g(x) = Si(x/α) e^{−x²/2}`. For `ω > 0`, `ĝ(ω)/(−i)` is
/// `½∫₀^{1/α} (e^{−(ω−ν)²/2} − e^{−(ω+ν)²/2}) / ν dν ≥ 0`, so integrating
/// over `ω` first leaves `√(2π) ∫₀^{1/α} erf(ν/√2) / ν dν`.
fn profile_norm_oracle(alpha: f64) -> f64 {
    let integrand = |v: f64| {
        if v == 0.0 {
            (2.0 / PI).sqrt()
        } else {
            erf(v / 2f64.sqrt()) / v
        }
    };
    let top = 1.0 / alpha;
    let panels = top.ceil() as usize;
    let total: f64 = (0..panels)
        .map(|i| {
            let a = i as f64 * top / panels as f64;
            let b = (i + 1) as f64 * top / panels as f64;
            adaptive_simpson(&integrand, a, b, 1e-14)
        })
        .sum();
    (2.0 * PI).sqrt() * total
}

/// Frozen from the oracle above for α = 0.01.
const PROFILE_NORM_ALPHA_001: f64 = 13.135613511422669;

#[test]
fn fourier_norm_matches_the_erf_oracle() {
    let oracle = profile_norm_oracle(0.01);
    assert!((oracle - PROFILE_NORM_ALPHA_001).abs() < 1e-9, "{oracle}");
    let spec = TargetSpec::rotated_4d(0.01).unwrap();
    let n = fourier_l1_norm(&spec, 1e-3).unwrap();
    assert!(n.relative_change < 1e-3);
    assert!(((n.profile_norm - oracle) / oracle).abs() < 1e-3, "{} vs {oracle}", n.profile_norm);
    let full = oracle * (2.0 * PI).powf(1.5);
    assert!(((n.value - full) / full).abs() < 1e-3);
}

#[test]
fn fourier_norm_of_a_wider_profile() {
    let oracle = profile_norm_oracle(0.1);
    let spec = TargetSpec::axis_aligned(2, 0.1).unwrap();
    let n = fourier_l1_norm(&spec, 1e-4).unwrap();
    assert!(((n.profile_norm - oracle) / oracle).abs() < 1e-4, "{} vs {oracle}", n.profile_norm);
}

#[test]
fn bound_scales_as_one_plus_lambda_over_k() {
    let spec = TargetSpec::rotated_4d(DEFAULT_ALPHA).unwrap();
    let base = error_bound_constant(&spec, 1, 0.0).unwrap();
    assert!(base > 0.0);
    for k in [1usize, 32, 1024] {
        for lambda in [0.0, 0.1, 10.0] {
            let b = error_bound_constant(&spec, k, lambda).unwrap();
            assert!((b * k as f64 / (1.0 + lambda) - base).abs() <= 1e-12 * base);
        }
    }
    assert_eq!(error_bound(2.0, 1, 1, 0.0), 4.0 / (2.0 * PI));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalization_round_trips(seed in any::<u64>(), m in 2usize..400) {
        let spec = TargetSpec::rotated_4d(DEFAULT_ALPHA).unwrap();
        let d = generate_dataset(m, &spec, seed).unwrap();
        let (n, stats) = normalize(&d).unwrap();
        let back = denormalize(&n, &stats).unwrap();
        for (x, y) in back.inputs.iter().zip(d.inputs.iter()) {
            prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
        for (x, y) in back.outputs.iter().zip(d.outputs.iter()) {
            prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }

    #[test]
    fn sine_integral_is_odd_and_bounded(x in -1e4f64..1e4) {
        let s = sine_integral(x);
        prop_assert_eq!(s, -sine_integral(-x));
        prop_assert!(s.abs() <= 1.8519370519824663);
    }
}
