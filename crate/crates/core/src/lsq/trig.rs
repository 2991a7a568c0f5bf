//! Vectorizable sine/cosine for design-matrix assembly, using fdlibm kernel
//! polynomials after a three-part Cody-Waite reduction.

const INV_PIO2: f64 = 6.36619772367581382433e-01;
const PIO2_1: f64 = 1.57079632673412561417e+00;
const PIO2_2: f64 = 6.07710050630396597660e-11;
const PIO2_2T: f64 = 2.02226624879595063154e-21;
const TO_INT: f64 = 1.5 / f64::EPSILON;
const REDUCE_LIMIT: f64 = 1.0e6;

const S1: f64 = -1.66666666666666324348e-01;
const S2: f64 = 8.33333333332248946124e-03;
const S3: f64 = -1.98412698298579493134e-04;
const S4: f64 = 2.75573137070700676789e-06;
const S5: f64 = -2.50507602534068634195e-08;
const S6: f64 = 1.58969099521155010221e-10;

const C1: f64 = 4.16666666666666019037e-02;
const C2: f64 = -1.38888888888741095749e-03;
const C3: f64 = 2.48015872894767294178e-05;
const C4: f64 = -2.75573143513906633035e-07;
const C5: f64 = 2.08757232129817482790e-09;
const C6: f64 = -1.13596475577881948265e-11;

#[inline(always)]
fn kernel(x: f64) -> (f64, f64) {
    let shifted = x * INV_PIO2 + TO_INT;
    let n = shifted.to_bits();
    let fnum = shifted - TO_INT;
    let r = ((x - fnum * PIO2_1) - fnum * PIO2_2) - fnum * PIO2_2T;
    let z = r * r;
    let w = z * z;
    let rs = S2 + z * (S3 + z * S4) + z * w * (S5 + z * S6);
    let s = r + z * r * (S1 + z * rs);
    let rc = z * (C1 + z * (C2 + z * C3)) + w * w * (C4 + z * (C5 + z * C6));
    let hz = 0.5 * z;
    let one_hz = 1.0 - hz;
    let c = one_hz + (((1.0 - one_hz) - hz) + z * rc);
    let swap = 0u64.wrapping_sub(n & 1);
    let (sb, cb) = (s.to_bits(), c.to_bits());
    let s_sel = (sb & !swap) | (cb & swap);
    let c_sel = (cb & !swap) | (sb & swap);
    (
        f64::from_bits(s_sel ^ ((n & 2) << 62)),
        f64::from_bits(c_sel ^ ((n.wrapping_add(1) & 2) << 62)),
    )
}

pub(crate) fn sin_cos_into(phase: &[f64], sin: &mut [f64], cos: &mut [f64]) {
    if phase.iter().any(|p| !(p.abs() < REDUCE_LIMIT)) {
        for ((&p, s), c) in phase.iter().zip(sin.iter_mut()).zip(cos.iter_mut()) {
            (*s, *c) = p.sin_cos();
        }
        return;
    }
    for ((&p, s), c) in phase.iter().zip(sin.iter_mut()).zip(cos.iter_mut()) {
        (*s, *c) = kernel(p);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_std_over_moderate_range() {
        let phase: Vec<f64> = (0..200_001).map(|i| i as f64 * 0.00731 - 731.0).collect();
        let mut s = vec![0.0; phase.len()];
        let mut c = vec![0.0; phase.len()];
        sin_cos_into(&phase, &mut s, &mut c);
        for ((p, s), c) in phase.iter().zip(&s).zip(&c) {
            let (es, ec) = p.sin_cos();
            assert!((s - es).abs() <= 2.5e-16, "sin({p})");
            assert!((c - ec).abs() <= 2.5e-16, "cos({p})");
        }
    }

    #[test]
    fn huge_or_nan_arguments_use_std() {
        let phase = [1e9, 0.5, f64::NAN];
        let mut s = [0.0; 3];
        let mut c = [0.0; 3];
        sin_cos_into(&phase, &mut s, &mut c);
        assert_eq!((s[0], c[0]), 1e9f64.sin_cos());
        assert_eq!((s[1], c[1]), 0.5f64.sin_cos());
        assert!(s[2].is_nan() && c[2].is_nan());
    }

    #[test]
    fn exact_at_zero() {
        let mut s = [1.0];
        let mut c = [0.0];
        sin_cos_into(&[0.0], &mut s, &mut c);
        assert_eq!((s[0], c[0]), (0.0, 1.0));
    }
}
