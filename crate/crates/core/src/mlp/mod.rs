//! Fully connected coordinate networks with an optional cosine (RFF) first
//! layer, trained by Adam on the mean squared error.

mod adam;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::arff::FrequencySet;
use crate::error::{Error, Result};

pub use adam::{
    read_loss_csv, train_adam, AdamConfig, AdamState, EpochRecord, TrainReport, LOSS_COLUMNS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerActivation {
    Cosine,
    Relu,
    Sigmoid,
    Identity,
}

impl LayerActivation {
    fn apply(self, z: f64) -> f64 {
        match self {
            LayerActivation::Cosine => z.cos(),
            LayerActivation::Relu => z.max(0.0),
            LayerActivation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            LayerActivation::Identity => z,
        }
    }

    /// Derivative from the pre-activation `z` and the output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            LayerActivation::Cosine => -z.sin(),
            LayerActivation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            LayerActivation::Sigmoid => a * (1.0 - a),
            LayerActivation::Identity => 1.0,
        }
    }
}

/// `σ(W x + b)`; `bias` is `None` for a layer whose bias is fixed at zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `out × in`.
    pub weights: Array2<f64>,
    pub bias: Option<Array1<f64>>,
    pub activation: LayerActivation,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    fn pre_activation(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights.t());
        if let Some(b) = &self.bias {
            z += b;
        }
        z
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
}

/// Parameter gradients, shaped like the model.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Option<Array1<f64>>>,
}

impl MlpModel {
    /// Checks that consecutive layers chain and the last bias is fixed.
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Precondition(
                "a model needs at least one layer".into(),
            ));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::DimensionMismatch {
                    what: "layer widths",
                    expected: pair[0].outputs(),
                    found: pair[1].inputs(),
                });
            }
        }
        for l in &layers {
            if let Some(b) = &l.bias {
                if b.len() != l.outputs() {
                    return Err(Error::DimensionMismatch {
                        what: "bias length",
                        expected: l.outputs(),
                        found: b.len(),
                    });
                }
            }
        }
        if layers.last().is_some_and(|l| l.bias.is_some()) {
            return Err(Error::Precondition(
                "the output layer bias is fixed at zero".into(),
            ));
        }
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").outputs()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.as_ref().map_or(0, |b| b.len()))
            .sum()
    }

    /// Outputs for a batch of inputs, one per row.
    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let mut a = x.to_owned();
        for l in &self.layers {
            let mut z = l.pre_activation(a.view());
            z.mapv_inplace(|v| l.activation.apply(v));
            a = z;
        }
        Ok(a)
    }

    fn check_input(&self, x: ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "model input dimension",
                expected: self.input_dim(),
                found: x.ncols(),
            });
        }
        Ok(())
    }

    /// Mean squared error over rows and output channels jointly.
    pub fn mse(&self, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<f64> {
        let out = self.forward(x)?;
        check_targets(&out, y)?;
        Ok(mean_sq_diff(out.view(), y))
    }

    /// Loss and exact reverse-mode gradients of the mean squared error.
    pub fn gradients(
        &self,
        x: ArrayView2<'_, f64>,
        y: ArrayView2<'_, f64>,
    ) -> Result<(f64, Gradients)> {
        self.check_input(x)?;
        if x.nrows() == 0 {
            return Err(Error::Precondition("gradient batch is empty".into()));
        }
        let mut inputs = vec![x.to_owned()];
        let mut pre = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let z = l.pre_activation(inputs.last().expect("nonempty").view());
            let a = z.mapv(|v| l.activation.apply(v));
            pre.push(z);
            inputs.push(a);
        }
        let out = inputs.pop().expect("output");
        check_targets(&out, y)?;
        let scale = 2.0 / out.len() as f64;
        let loss = mean_sq_diff(out.view(), y);
        let mut delta = (&out - &y) * scale;
        let mut weights = Vec::with_capacity(self.layers.len());
        let mut biases = Vec::with_capacity(self.layers.len());
        let mut a_out = out;
        for (i, l) in self.layers.iter().enumerate().rev() {
            let z = &pre[i];
            ndarray::Zip::from(&mut delta)
                .and(z)
                .and(&a_out)
                .for_each(|d, &z, &a| *d *= l.activation.derivative(z, a));
            let a_in = inputs.pop().expect("layer input");
            weights.push(delta.t().dot(&a_in));
            biases.push(l.bias.as_ref().map(|_| delta.sum_axis(Axis(0))));
            if i > 0 {
                delta = delta.dot(&l.weights);
            }
            a_out = a_in;
        }
        weights.reverse();
        biases.reverse();
        Ok((loss, Gradients { weights, biases }))
    }
}

fn check_targets(out: &Array2<f64>, y: ArrayView2<'_, f64>) -> Result<()> {
    if out.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            what: "target shape",
            expected: out.len(),
            found: y.len(),
        });
    }
    Ok(())
}

fn mean_sq_diff(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    let total: f64 = a.iter().zip(b.iter()).map(|(p, q)| (p - q) * (p - q)).sum();
    total / a.len() as f64
}

/// `rows × cols` i.i.d. normal entries with variance `2 / (fan_in + fan_out)`,
/// where `fan_in = cols` and `fan_out = rows`.
pub fn glorot_init<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    assert!(
        rows > 0 && cols > 0,
        "Glorot initialization needs positive dimensions"
    );
    let std = (2.0 / (rows + cols) as f64).sqrt();
    let normal = Normal::new(0.0, std).expect("finite positive std");
    Array2::from_shape_simple_fn((rows, cols), || normal.sample(rng))
}

/// Splits bias-extended frequencies into the weight matrix and bias of a
/// cosine layer.
pub fn rff_layer_from_arff(
    freqs: &FrequencySet,
    input_dim: usize,
) -> Result<(Array2<f64>, Array1<f64>)> {
    if freqs.dim() != input_dim + 1 {
        return Err(Error::DimensionMismatch {
            what: "bias-extended frequency dimension",
            expected: input_dim + 1,
            found: freqs.dim(),
        });
    }
    let v = freqs.vectors();
    Ok((
        v.slice(s![.., ..input_dim]).to_owned(),
        v.column(input_dim).to_owned(),
    ))
}

/// Inverse of [`rff_layer_from_arff`].
pub fn merge_rff_layer(weights: &Array2<f64>, bias: &Array1<f64>) -> Result<FrequencySet> {
    if weights.nrows() != bias.len() {
        return Err(Error::DimensionMismatch {
            what: "RFF bias length",
            expected: weights.nrows(),
            found: bias.len(),
        });
    }
    let mut v = Array2::zeros((weights.nrows(), weights.ncols() + 1));
    v.slice_mut(s![.., ..weights.ncols()]).assign(weights);
    v.column_mut(weights.ncols()).assign(bias);
    FrequencySet::new(v)
}

/// `cos` layer from bias-extended frequencies followed by a linear output
/// holding the amplitudes; evaluates exactly the shallow cosine network.
pub fn shallow_cosine_model(freqs: &FrequencySet, amplitudes: &Array2<f64>) -> Result<MlpModel> {
    let input_dim = freqs.dim() - 1;
    let (w, b) = rff_layer_from_arff(freqs, input_dim)?;
    if amplitudes.nrows() != freqs.count() {
        return Err(Error::DimensionMismatch {
            what: "amplitude count",
            expected: freqs.count(),
            found: amplitudes.nrows(),
        });
    }
    MlpModel::new(vec![
        Layer {
            weights: w,
            bias: Some(b),
            activation: LayerActivation::Cosine,
        },
        Layer {
            weights: amplitudes.t().to_owned(),
            bias: None,
            activation: LayerActivation::Identity,
        },
    ])
}

/// The image-regression network variants, serialized by number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Approach {
    /// Cosine layer from ARFF frequencies, then three ReLU layers.
    ArffRff = 1,
    /// Glorot-initialized cosine layer, then three ReLU layers.
    GlorotRff = 2,
    /// Three ReLU layers, no cosine layer.
    Relu3 = 3,
    /// Four ReLU layers, no cosine layer.
    Relu4 = 4,
}

impl Approach {
    pub const ALL: [Approach; 4] = [
        Approach::ArffRff,
        Approach::GlorotRff,
        Approach::Relu3,
        Approach::Relu4,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.number() == n)
    }

    pub fn description(self) -> &'static str {
        match self {
            Approach::ArffRff => "ARFF-initialized RFF layer + 3 ReLU layers",
            Approach::GlorotRff => "Glorot-initialized RFF layer + 3 ReLU layers",
            Approach::Relu3 => "3 ReLU layers",
            Approach::Relu4 => "4 ReLU layers",
        }
    }
}

impl From<Approach> for u8 {
    fn from(a: Approach) -> u8 {
        a.number()
    }
}

impl TryFrom<u8> for Approach {
    type Error = String;

    fn try_from(n: u8) -> std::result::Result<Self, String> {
        Approach::from_number(n).ok_or_else(|| format!("no approach {n}; expected 1 to 4"))
    }
}

/// Builds the network `input → [cos] → ReLU^h → sigmoid(output)` of the
/// given approach. Glorot weights, zero hidden biases; for
/// [`Approach::ArffRff`] the cosine layer comes from `rff`.
pub fn image_model<R: Rng + ?Sized>(
    approach: Approach,
    input_dim: usize,
    width: usize,
    output_dim: usize,
    rff: Option<&FrequencySet>,
    rng: &mut R,
) -> Result<MlpModel> {
    let mut layers = Vec::new();
    let mut fan_in = input_dim;
    let relu_layers = match approach {
        Approach::ArffRff => {
            let freqs =
                rff.ok_or_else(|| Error::Precondition("approach 1 needs ARFF frequencies".into()))?;
            let (w, b) = rff_layer_from_arff(freqs, input_dim)?;
            fan_in = w.nrows();
            layers.push(Layer {
                weights: w,
                bias: Some(b),
                activation: LayerActivation::Cosine,
            });
            3
        }
        Approach::GlorotRff => {
            layers.push(Layer {
                weights: glorot_init(width, input_dim, rng),
                bias: Some(Array1::zeros(width)),
                activation: LayerActivation::Cosine,
            });
            fan_in = width;
            3
        }
        Approach::Relu3 => 3,
        Approach::Relu4 => 4,
    };
    for _ in 0..relu_layers {
        layers.push(Layer {
            weights: glorot_init(width, fan_in, rng),
            bias: Some(Array1::zeros(width)),
            activation: LayerActivation::Relu,
        });
        fan_in = width;
    }
    layers.push(Layer {
        weights: glorot_init(output_dim, fan_in, rng),
        bias: None,
        activation: LayerActivation::Sigmoid,
    });
    MlpModel::new(layers)
}

/// `10 log₁₀(MAX_I² / MSE)` with `MAX_I` the largest value in `truth`;
/// `+∞` for identical images.
pub fn psnr(pred: ArrayView2<'_, f64>, truth: ArrayView2<'_, f64>) -> Result<f64> {
    if pred.dim() != truth.dim() {
        return Err(Error::DimensionMismatch {
            what: "image shapes",
            expected: truth.len(),
            found: pred.len(),
        });
    }
    let max_i = truth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(psnr_with_max(mean_sq_diff(pred, truth), max_i))
}

pub fn psnr_with_max(mse: f64, max_i: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (max_i * max_i / mse).log10()
    }
}
