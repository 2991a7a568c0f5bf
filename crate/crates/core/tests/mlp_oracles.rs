mod common;

use arff_core::arff::FrequencySet;
use arff_core::experiment::image::{split_parity, RgbImage};
use arff_core::lsq::{assemble_design, predict, Activation, AmplitudeVector};
use arff_core::mlp::{
    glorot_init, image_model, shallow_cosine_model, train_adam, AdamConfig, Approach, Layer,
    LayerActivation, MlpModel,
};
use common::*;
use ndarray::{Array2, Array3};

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..50 {
        let (model, x, y) = tiny_model(seed);
        let err = finite_difference_error(&model, &x, &y, 1e-6);
        assert!(err <= 1e-4, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn glorot_variance_of_a_square_layer() {
    let mut r = rng(21);
    let samples: Vec<f64> = (0..2).flat_map(|_| glorot_init(256, 256, &mut r).into_iter()).collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let target = 2.0 / 512.0;
    assert!((var - target).abs() <= 0.1 * target, "{var}");
}

#[test]
fn cosine_layer_reproduces_the_shallow_network() {
    let mut r = rng(22);
    let inst = instance(12, 40, 3, 2, Activation::CosineBias, &mut r);
    let a = normal_matrix(12, 2, 1.0, &mut r);
    let model = shallow_cosine_model(&inst.freqs, &a).unwrap();
    let out = model.forward(inst.x.view()).unwrap();
    let design = assemble_design(&inst.freqs, inst.x.view(), Activation::CosineBias).unwrap();
    let (reference, im) = predict(&design, &AmplitudeVector::Real(a)).unwrap();
    assert!(im.is_none());
    for (p, q) in out.iter().zip(reference.iter()) {
        assert!((p - q).abs() <= 1e-12, "{p} vs {q}");
    }
}

#[test]
fn rff_layer_shapes_for_image_regression() {
    let mut r = rng(23);
    let freqs = FrequencySet::new(normal_matrix(256, 3, 1.0, &mut r)).unwrap();
    let model = image_model(Approach::ArffRff, 2, 256, 3, Some(&freqs), &mut r).unwrap();
    assert_eq!(model.layers[0].weights.dim(), (256, 2));
    assert_eq!(model.layers[0].bias.as_ref().map(|b| b.len()), Some(256));
    assert_eq!(model.layers.len(), 5);
    assert!(model.layers.last().unwrap().bias.is_none());
    for a in [Approach::Relu3, Approach::Relu4, Approach::GlorotRff] {
        let m = image_model(a, 2, 16, 3, None, &mut r).unwrap();
        assert_eq!(m.output_dim(), 3);
        assert_eq!(m.layers.last().unwrap().activation, LayerActivation::Sigmoid);
    }
    assert!(image_model(Approach::ArffRff, 2, 16, 3, None, &mut r).is_err());
}

#[test]
fn linear_toy_problem_reaches_least_squares() {
    let mut r = rng(24);
    let x = normal_matrix(200, 1, 1.0, &mut r);
    let noise = normal_matrix(200, 1, 0.3, &mut r);
    let y = &x * 1.7 + &noise;
    let optimum = x.iter().zip(y.iter()).map(|(a, b)| a * b).sum::<f64>()
        / x.iter().map(|a| a * a).sum::<f64>();
    let model = MlpModel::new(vec![Layer {
        weights: Array2::zeros((1, 1)),
        bias: None,
        activation: LayerActivation::Identity,
    }])
    .unwrap();
    let config = AdamConfig::new(0.02, 200, 500);
    let report = train_adam(model, x.view(), y.view(), &config, &mut rng(25), None).unwrap();
    let w = report.model.layers[0].weights[[0, 0]];
    assert!((w - optimum).abs() <= 1e-3, "{w} vs {optimum}");
}

#[test]
fn constant_image_is_fit_in_ten_epochs() {
    let color = [0.2, 0.55, 0.8];
    let pixels = Array3::from_shape_fn((64, 64, 3), |(_, _, c)| color[c]);
    let data = split_parity(&RgbImage { pixels }).unwrap();
    assert_eq!(data.max_intensity, 0.8);
    let mut r = rng(26);
    let model = image_model(Approach::Relu3, 2, 64, 3, None, &mut r).unwrap();
    let config = AdamConfig::new(1e-2, 32, 10);
    let report = train_adam(
        model,
        data.train.inputs.view(),
        data.train.outputs.view(),
        &config,
        &mut r,
        Some((data.test.inputs.view(), data.test.outputs.view())),
    )
    .unwrap();
    let last = report.epochs.last().unwrap();
    assert!(last.val_mse <= 1e-3, "{}", last.val_mse);
}
