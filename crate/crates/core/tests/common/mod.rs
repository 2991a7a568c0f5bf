//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use arff_core::arff::FrequencySet;
use arff_core::lsq::{Activation, AmplitudeVector};
use nalgebra::{Complex, DMatrix};
use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type C = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rows: usize, cols: usize, scale: f64, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || scale * rng.sample::<f64, _>(StandardNormal))
}

/// `S` entry by entry from the definition, with no shared code.
pub fn dense_design(freqs: &FrequencySet, x: ArrayView2<'_, f64>, kind: Activation) -> DMatrix<C> {
    let w = freqs.vectors();
    let d = x.ncols();
    DMatrix::from_fn(x.nrows(), freqs.count(), |j, k| {
        let mut phase = 0.0;
        for i in 0..d {
            phase += w[[k, i]] * x[[j, i]];
        }
        match kind {
            Activation::ComplexExp => C::new(phase.cos(), phase.sin()),
            Activation::CosineBias => C::new((phase + w[[k, d]]).cos(), 0.0),
        }
    })
}

pub fn to_dense(y: ArrayView2<'_, f64>) -> DMatrix<C> {
    DMatrix::from_fn(y.nrows(), y.ncols(), |i, j| C::new(y[[i, j]], 0.0))
}

/// Explicit `Sᴴ S + λ M_B I` and `Sᴴ y`, solved by generic LU.
pub fn dense_solve(s: &DMatrix<C>, y: &DMatrix<C>, lambda: f64) -> DMatrix<C> {
    let mb = s.nrows() as f64;
    let sh = s.adjoint();
    let a = &sh * s + DMatrix::<C>::identity(s.ncols(), s.ncols()) * C::new(lambda * mb, 0.0);
    a.lu().solve(&(&sh * y)).expect("oracle system is nonsingular")
}

pub fn amplitudes_dense(a: &AmplitudeVector) -> DMatrix<C> {
    match a {
        AmplitudeVector::Real(a) => DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| C::new(a[[i, j]], 0.0)),
        AmplitudeVector::Complex(a) => DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]]),
    }
}

pub fn relative_diff(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// `‖(Sᴴ S) a − Sᴴ y‖² / M_B` and `‖S a − y‖² / M_B` from their definitions.
pub fn dense_metrics(s: &DMatrix<C>, y: &DMatrix<C>, a: &DMatrix<C>) -> (f64, f64) {
    let mb = s.nrows() as f64;
    let sh = s.adjoint();
    let normal = (&sh * s * a - &sh * y).norm_squared() / mb;
    let data = (s * a - y).norm_squared() / mb;
    (normal, data)
}

/// A random least-squares instance: points, targets and frequencies.
pub struct Instance {
    pub freqs: FrequencySet,
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub kind: Activation,
}

pub fn instance(k: usize, mb: usize, d: usize, channels: usize, kind: Activation, rng: &mut impl Rng) -> Instance {
    let x = normal_matrix(mb, d, 1.0, rng);
    let y = normal_matrix(mb, channels, 1.0, rng);
    let freqs = FrequencySet::new(normal_matrix(k, kind.frequency_dim(d), 1.0, rng)).unwrap();
    Instance { freqs, x, y, kind }
}

use arff_core::mlp::{Layer, LayerActivation, MlpModel};
use ndarray::Array1;

/// A random model with at most three layers of width at most 8 and random
/// nonzero biases.
pub fn tiny_model(seed: u64) -> (MlpModel, Array2<f64>, Array2<f64>) {
    let mut r = rng(seed);
    let acts = [
        LayerActivation::Cosine,
        LayerActivation::Relu,
        LayerActivation::Sigmoid,
        LayerActivation::Identity,
    ];
    let input = r.random_range(1..=4);
    let output = r.random_range(1..=3);
    let hidden = r.random_range(0..=2);
    let mut widths = vec![input];
    widths.extend((0..hidden).map(|_| r.random_range(1..=8)));
    widths.push(output);
    let n = widths.len() - 1;
    let layers = (0..n)
        .map(|i| {
            let last = i + 1 == n;
            Layer {
                weights: normal_matrix(widths[i + 1], widths[i], 0.8, &mut r),
                bias: (!last).then(|| Array1::from_shape_simple_fn(widths[i + 1], || r.random_range(-1.0..1.0))),
                activation: acts[r.random_range(0..acts.len())],
            }
        })
        .collect();
    let x = normal_matrix(5, input, 1.0, &mut r);
    let y = normal_matrix(5, output, 1.0, &mut r);
    (MlpModel::new(layers).unwrap(), x, y)
}

/// `‖g − g_fd‖ / ‖g_fd‖` over all parameters, with central differences of
/// step `h`.
pub fn finite_difference_error(model: &MlpModel, x: &Array2<f64>, y: &Array2<f64>, h: f64) -> f64 {
    let (_, grads) = model.gradients(x.view(), y.view()).unwrap();
    let loss = |m: &MlpModel| m.mse(x.view(), y.view()).unwrap();
    let (mut diff, mut norm) = (0.0, 0.0);
    let mut probe = model.clone();
    for (li, layer) in model.layers.iter().enumerate() {
        for idx in ndarray::indices(layer.weights.raw_dim()) {
            let w = layer.weights[idx];
            probe.layers[li].weights[idx] = w + h;
            let up = loss(&probe);
            probe.layers[li].weights[idx] = w - h;
            let down = loss(&probe);
            probe.layers[li].weights[idx] = w;
            let fd = (up - down) / (2.0 * h);
            diff += (fd - grads.weights[li][idx]).powi(2);
            norm += fd * fd;
        }
        if let Some(b) = &layer.bias {
            let g = grads.biases[li].as_ref().expect("bias gradient");
            for i in 0..b.len() {
                let v = b[i];
                probe.layers[li].bias.as_mut().unwrap()[i] = v + h;
                let up = loss(&probe);
                probe.layers[li].bias.as_mut().unwrap()[i] = v - h;
                let down = loss(&probe);
                probe.layers[li].bias.as_mut().unwrap()[i] = v;
                let fd = (up - down) / (2.0 * h);
                diff += (fd - g[i]).powi(2);
                norm += fd * fd;
            }
        }
    }
    diff.sqrt() / norm.sqrt().max(f64::MIN_POSITIVE)
}

/// Spectral condition number of `SᴴS`.
pub fn gram_condition(s: &nalgebra::DMatrix<C>) -> f64 {
    let sv = (s.adjoint() * s).singular_values();
    sv.max() / sv.min()
}
