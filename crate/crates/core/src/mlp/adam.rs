use std::path::Path;
use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Gradients, MlpModel};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, read_csv, write_csv};

pub const LOSS_COLUMNS: [&str; 3] = ["epoch", "train_mse", "val_mse"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Keep the first layer's weights and bias fixed.
    #[serde(default)]
    pub freeze_first_layer: bool,
}

impl AdamConfig {
    pub fn new(learning_rate: f64, batch_size: usize, epochs: usize) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
            batch_size,
            epochs,
            freeze_first_layer: false,
        }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning rate must be finite and nonnegative, got {}",
                self.learning_rate
            ));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam decay rates must lie in [0, 1)".into());
        }
        if !(self.epsilon > 0.0) {
            return bad("Adam epsilon must be positive".into());
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        Ok(())
    }
}

/// Moment estimates for every parameter of a model.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub step: u64,
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Option<Array1<f64>>>,
    v_b: Vec<Option<Array1<f64>>>,
}

impl AdamState {
    pub fn new(model: &MlpModel) -> Self {
        let w: Vec<_> = model
            .layers
            .iter()
            .map(|l| Array2::zeros(l.weights.raw_dim()))
            .collect();
        let b: Vec<_> = model
            .layers
            .iter()
            .map(|l| l.bias.as_ref().map(|b| Array1::zeros(b.len())))
            .collect();
        Self {
            step: 0,
            m_w: w.clone(),
            v_w: w,
            m_b: b.clone(),
            v_b: b,
        }
    }

    /// One bias-corrected Adam update of `model` along `grads`.
    pub fn apply(
        &mut self,
        model: &mut MlpModel,
        grads: &Gradients,
        config: &AdamConfig,
    ) -> Result<()> {
        if grads.weights.len() != model.layers.len() || self.m_w.len() != model.layers.len() {
            return Err(Error::DimensionMismatch {
                what: "gradient layer count",
                expected: model.layers.len(),
                found: grads.weights.len(),
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - config.beta1.powi(t);
        let c2 = 1.0 - config.beta2.powi(t);
        let first = usize::from(config.freeze_first_layer);
        for (i, layer) in model.layers.iter_mut().enumerate().skip(first) {
            if grads.weights[i].raw_dim() != layer.weights.raw_dim() {
                return Err(Error::DimensionMismatch {
                    what: "gradient shape",
                    expected: layer.weights.len(),
                    found: grads.weights[i].len(),
                });
            }
            update(
                layer.weights.view_mut().into_dyn(),
                grads.weights[i].view().into_dyn(),
                self.m_w[i].view_mut().into_dyn(),
                self.v_w[i].view_mut().into_dyn(),
                config,
                c1,
                c2,
            );
            if let (Some(b), Some(g), Some(m), Some(v)) = (
                layer.bias.as_mut(),
                grads.biases[i].as_ref(),
                self.m_b[i].as_mut(),
                self.v_b[i].as_mut(),
            ) {
                update(
                    b.view_mut().into_dyn(),
                    g.view().into_dyn(),
                    m.view_mut().into_dyn(),
                    v.view_mut().into_dyn(),
                    config,
                    c1,
                    c2,
                );
            }
        }
        Ok(())
    }
}

fn update(
    p: ndarray::ArrayViewMutD<'_, f64>,
    g: ndarray::ArrayViewD<'_, f64>,
    m: ndarray::ArrayViewMutD<'_, f64>,
    v: ndarray::ArrayViewMutD<'_, f64>,
    c: &AdamConfig,
    c1: f64,
    c2: f64,
) {
    Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
        *m = c.beta1 * *m + (1.0 - c.beta1) * g;
        *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
        *p -= c.learning_rate * (*m / c1) / ((*v / c2).sqrt() + c.epsilon);
    });
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean of the mini-batch losses, weighted by batch size, before each
    /// update.
    pub train_mse: f64,
    /// Full pass over the evaluation data after the epoch; NaN without it.
    pub val_mse: f64,
    #[serde(skip)]
    pub elapsed: f64,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub model: MlpModel,
    pub epochs: Vec<EpochRecord>,
    /// Evaluation loss of the initial model; NaN without evaluation data.
    pub initial_val_mse: f64,
}

impl TrainReport {
    pub fn write_loss_csv(&self, path: &Path) -> Result<()> {
        write_csv(
            path,
            &LOSS_COLUMNS,
            self.epochs.iter().map(|e| {
                vec![
                    e.epoch.to_string(),
                    fmt_f64(e.train_mse),
                    fmt_f64(e.val_mse),
                ]
            }),
        )
    }

    pub fn write_timing_csv(&self, path: &Path) -> Result<()> {
        write_csv(
            path,
            &["epoch", "elapsed_s"],
            self.epochs
                .iter()
                .map(|e| vec![e.epoch.to_string(), fmt_f64(e.elapsed)]),
        )
    }
}

pub fn read_loss_csv(path: &Path) -> Result<Vec<EpochRecord>> {
    let (header, rows) = read_csv(path)?;
    if header != LOSS_COLUMNS {
        return Err(Error::Format(format!(
            "{}: unexpected loss header {header:?}",
            path.display()
        )));
    }
    rows.iter()
        .map(|r| {
            let bad = || Error::Format(format!("{}: bad loss row {r:?}", path.display()));
            if r.len() != 3 {
                return Err(bad());
            }
            Ok(EpochRecord {
                epoch: r[0].parse().map_err(|_| bad())?,
                train_mse: r[1].parse().map_err(|_| bad())?,
                val_mse: r[2].parse().map_err(|_| bad())?,
                elapsed: f64::NAN,
            })
        })
        .collect()
}

/// Mini-batch Adam on the mean squared error. Rows are reshuffled every
/// epoch from `rng`; the last, shorter batch is kept.
pub fn train_adam<R: Rng + ?Sized>(
    model: MlpModel,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    config: &AdamConfig,
    rng: &mut R,
    eval: Option<(ArrayView2<'_, f64>, ArrayView2<'_, f64>)>,
) -> Result<TrainReport> {
    config.check()?;
    if x.nrows() == 0 {
        return Err(Error::Precondition("training data is empty".into()));
    }
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch {
            what: "training rows",
            expected: x.nrows(),
            found: y.nrows(),
        });
    }
    let mut model = model;
    let initial_val_mse = match eval {
        Some((ex, ey)) => model.mse(ex, ey)?,
        None => f64::NAN,
    };
    let mut state = AdamState::new(&model);
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    let start = Instant::now();
    for epoch in 1..=config.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let bx = x.select(Axis(0), chunk);
            let by = y.select(Axis(0), chunk);
            let (loss, grads) = model.gradients(bx.view(), by.view())?;
            total += loss * chunk.len() as f64;
            state.apply(&mut model, &grads, config)?;
        }
        let val_mse = match eval {
            Some((ex, ey)) => model.mse(ex, ey)?,
            None => f64::NAN,
        };
        epochs.push(EpochRecord {
            epoch,
            train_mse: total / x.nrows() as f64,
            val_mse,
            elapsed: start.elapsed().as_secs_f64(),
        });
    }
    Ok(TrainReport {
        model,
        epochs,
        initial_val_mse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{Layer, LayerActivation};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn linear(w: f64) -> MlpModel {
        MlpModel::new(vec![Layer {
            weights: array![[w]],
            bias: None,
            activation: LayerActivation::Identity,
        }])
        .unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut m = linear(0.3);
        let g = Gradients {
            weights: vec![array![[0.0]]],
            biases: vec![None],
        };
        let c = AdamConfig::new(0.1, 1, 1);
        AdamState::new(&m).apply(&mut m, &g, &c).unwrap();
        assert_eq!(m.layers[0].weights[[0, 0]], 0.3);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let c = AdamConfig::new(0.01, 1, 1);
        for g in [-2.5, 1e-3, 40.0] {
            let mut m = linear(0.0);
            let grads = Gradients {
                weights: vec![array![[g]]],
                biases: vec![None],
            };
            AdamState::new(&m).apply(&mut m, &grads, &c).unwrap();
            let moved = m.layers[0].weights[[0, 0]];
            assert!((moved + 0.01 * g.signum()).abs() < 0.01 * 1e-7 / g.abs() * 2.0);
        }
    }

    #[test]
    fn frozen_first_layer_does_not_move() {
        let m = MlpModel::new(vec![
            Layer {
                weights: array![[1.0]],
                bias: Some(array![0.0]),
                activation: LayerActivation::Cosine,
            },
            Layer {
                weights: array![[0.5]],
                bias: None,
                activation: LayerActivation::Identity,
            },
        ])
        .unwrap();
        let mut c = AdamConfig::new(0.01, 2, 3);
        c.freeze_first_layer = true;
        let x = array![[0.1], [0.4], [0.9]];
        let y = array![[1.0], [0.0], [1.0]];
        let r = train_adam(
            m.clone(),
            x.view(),
            y.view(),
            &c,
            &mut ChaCha8Rng::seed_from_u64(0),
            None,
        )
        .unwrap();
        assert_eq!(r.model.layers[0], m.layers[0]);
        assert_ne!(r.model.layers[1], m.layers[1]);
    }

    #[test]
    fn zero_epochs_return_the_initial_model() {
        let m = linear(2.0);
        let x = array![[1.0]];
        let r = train_adam(
            m.clone(),
            x.view(),
            x.view(),
            &AdamConfig::new(0.1, 4, 0),
            &mut ChaCha8Rng::seed_from_u64(0),
            None,
        )
        .unwrap();
        assert_eq!(r.model, m);
        assert!(r.epochs.is_empty());
    }

    #[test]
    fn loss_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let x = array![[0.0], [1.0], [2.0]];
        let y = array![[1.0], [3.0], [5.0]];
        let r = train_adam(
            linear(0.0),
            x.view(),
            y.view(),
            &AdamConfig::new(0.1, 2, 4),
            &mut ChaCha8Rng::seed_from_u64(1),
            Some((x.view(), y.view())),
        )
        .unwrap();
        let p = dir.path().join("loss.csv");
        r.write_loss_csv(&p).unwrap();
        let back = read_loss_csv(&p).unwrap();
        assert_eq!(back.len(), 4);
        for (a, b) in r.epochs.iter().zip(&back) {
            assert_eq!(a.train_mse.to_bits(), b.train_mse.to_bits());
            assert_eq!(a.val_mse.to_bits(), b.val_mse.to_bits());
        }
    }
}
