//! The sine integral `Si(x) = ∫₀ˣ sin(t)/t dt`.
//!
//! Power series for `|x| ≤ 4`; beyond that the exponential integral `E₁(ix)`
//! is evaluated by its continued fraction (modified Lentz), which gives
//! `Si(x) = π/2 + Im E₁(ix)` to full double precision without the
//! cancellation the series suffers for large arguments.

use std::f64::consts::FRAC_PI_2;

const SERIES_LIMIT: f64 = 4.0;
const EPS: f64 = 1e-17;
const MAX_ITER: usize = 500;

pub fn sine_integral(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let t = x.abs();
    let v = if t.is_infinite() {
        FRAC_PI_2
    } else if t <= SERIES_LIMIT {
        series(t)
    } else {
        continued_fraction(t)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn series(t: f64) -> f64 {
    let t2 = t * t;
    let mut term = t;
    let mut sum = t;
    for n in 1..MAX_ITER {
        let k = (2 * n) as f64;
        term *= -t2 / (k * (k + 1.0));
        let contrib = term / (k + 1.0);
        sum += contrib;
        if contrib.abs() < EPS * sum.abs() {
            break;
        }
    }
    sum
}

/// Lentz evaluation of `e^{it} E₁(it)` as the continued fraction
/// `1/(1+it− 1²/(3+it− 2²/(5+it− …)))`.
fn continued_fraction(t: f64) -> f64 {
    // complex arithmetic on (re, im) pairs
    let div = |a: (f64, f64), b: (f64, f64)| {
        let den = b.0 * b.0 + b.1 * b.1;
        ((a.0 * b.0 + a.1 * b.1) / den, (a.1 * b.0 - a.0 * b.1) / den)
    };
    let mul = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
    const TINY: f64 = 1e-300;

    let mut b = (1.0, t);
    let mut c = (1.0 / TINY, 0.0);
    let mut d = div((1.0, 0.0), b);
    let mut h = d;
    for i in 2..MAX_ITER {
        let a = -(((i - 1) * (i - 1)) as f64);
        b.0 += 2.0;
        d = div((1.0, 0.0), (a * d.0 + b.0, a * d.1 + b.1));
        let q = div((a, 0.0), c);
        c = (b.0 + q.0, b.1 + q.1);
        let del = mul(c, d);
        h = mul(h, del);
        if (del.0 - 1.0).abs() + del.1.abs() < EPS {
            break;
        }
    }
    let (s, co) = t.sin_cos();
    let e1 = mul((co, -s), h);
    FRAC_PI_2 + e1.1
}
