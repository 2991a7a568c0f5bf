use std::path::PathBuf;

use ndarray::Array1;

use super::{realization_data, ExperimentConfig, Files};
use crate::arff::{
    test_metrics, train_with, ArffConfig, FrequencySet, Schedule, TrainOptions, TrainTrace,
};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_csv};
use crate::lsq::{Activation, AmplitudeVector};
use crate::mlp::{
    glorot_init, shallow_cosine_model, train_adam, AdamConfig, Layer, LayerActivation, MlpModel,
    TrainReport,
};
use crate::rng::{Purpose, Streams};
use crate::targets::{generate_dataset_with, normalize_with, Dataset};

pub const VALIDATION_COLUMNS: [&str; 4] = ["method", "unit", "step", "val_mse"];
pub const PRETRAIN_SUMMARY_COLUMNS: [&str; 3] = ["method", "final_val_mse", "test_mse"];

fn arff_config(
    config: &ExperimentConfig,
    iterations: usize,
    resample: f64,
    metropolis: bool,
) -> ArffConfig {
    let p = &config.pretrain;
    ArffConfig {
        iterations,
        step: p.step,
        gamma: p.gamma,
        batch_size: p.batch_size,
        lambda: p.lambda,
        resample: Schedule::Constant(resample),
        metropolis: Schedule::Constant(metropolis),
        activation: Activation::CosineBias,
        seed: config.seed,
    }
}

fn adam_config(config: &ExperimentConfig) -> AdamConfig {
    let p = &config.pretrain;
    let mut c = AdamConfig::new(p.learning_rate, p.adam_batch_size, p.epochs);
    c.freeze_first_layer = p.freeze_first_layer;
    c
}

fn glorot_cosine_model(k: usize, d: usize, streams: &Streams) -> Result<MlpModel> {
    let mut rng = streams.rng(Purpose::MlpInit);
    MlpModel::new(vec![
        Layer {
            weights: glorot_init(k, d, &mut rng),
            bias: Some(Array1::zeros(k)),
            activation: LayerActivation::Cosine,
        },
        Layer {
            weights: glorot_init(1, k, &mut rng),
            bias: None,
            activation: LayerActivation::Identity,
        },
    ])
}

struct Curves {
    rows: Vec<Vec<String>>,
    timing: Vec<Vec<String>>,
    summary: Vec<Vec<String>>,
}

impl Curves {
    fn arff(
        &mut self,
        method: &str,
        trace: &TrainTrace,
        test: &Dataset,
        config: &ArffConfig,
    ) -> Result<()> {
        for r in &trace.records {
            self.rows.push(vec![
                method.into(),
                "iteration".into(),
                r.iter.to_string(),
                fmt_f64(r.test_data_err),
            ]);
            self.timing.push(vec![
                method.into(),
                "iteration".into(),
                r.iter.to_string(),
                fmt_f64(r.elapsed),
            ]);
        }
        let (_, test_mse) = test_metrics(&trace.freqs, &trace.amplitudes, test, config)?;
        let last = trace.records.last().map_or(f64::NAN, |r| r.test_data_err);
        self.summary
            .push(vec![method.into(), fmt_f64(last), fmt_f64(test_mse)]);
        Ok(())
    }

    fn adam(
        &mut self,
        method: &str,
        report: &TrainReport,
        test: &Dataset,
        offset: f64,
    ) -> Result<()> {
        self.rows.push(vec![
            method.into(),
            "epoch".into(),
            "0".into(),
            fmt_f64(report.initial_val_mse),
        ]);
        for e in &report.epochs {
            self.rows.push(vec![
                method.into(),
                "epoch".into(),
                e.epoch.to_string(),
                fmt_f64(e.val_mse),
            ]);
            self.timing.push(vec![
                method.into(),
                "epoch".into(),
                e.epoch.to_string(),
                fmt_f64(offset + e.elapsed),
            ]);
        }
        let test_mse = report.model.mse(test.inputs.view(), test.outputs.view())?;
        let last = report
            .epochs
            .last()
            .map_or(report.initial_val_mse, |e| e.val_mse);
        self.summary
            .push(vec![method.into(), fmt_f64(last), fmt_f64(test_mse)]);
        Ok(())
    }
}

/// Adam alone, ARFF pretraining followed by Adam, and ARFF alone for each
/// configured `(R, A)`, all tracked by validation error.
pub(crate) fn run_pretrain(config: &ExperimentConfig, files: &mut Files) -> Result<()> {
    let p = &config.pretrain;
    let spec = config.target_spec()?;
    let (train, test) =
        realization_data(&spec, p.train_points, p.validation_points, config.seed, 0)?;
    let streams = Streams::new(config.seed, 0);
    let raw_val = generate_dataset_with(
        p.validation_points,
        &spec,
        &mut streams.rng(Purpose::Validation),
    )?;
    let stats = train
        .stats
        .clone()
        .ok_or_else(|| Error::Precondition("training data not normalized".into()))?;
    let val = normalize_with(&raw_val, &stats)?;
    let d = train.dim();
    let mut curves = Curves {
        rows: vec![],
        timing: vec![],
        summary: vec![],
    };
    let adam = adam_config(config);
    let eval = Some((val.inputs.view(), val.outputs.view()));

    let report = train_adam(
        glorot_cosine_model(p.k, d, &streams)?,
        train.inputs.view(),
        train.outputs.view(),
        &adam,
        &mut streams.rng(Purpose::MlpShuffle),
        eval,
    )?;
    curves.adam("adam", &report, &test, 0.0)?;

    let pre = arff_config(config, p.pretrain_iterations, 1.0, true);
    let options = TrainOptions::default();
    let trace = train_with(
        &pre,
        &train,
        &FrequencySet::zeros(p.k, d + 1),
        Some(&val),
        &options,
    )?;
    curves.arff("pretrain_arff", &trace, &test, &pre)?;
    let AmplitudeVector::Real(a) = &trace.amplitudes else {
        return Err(Error::Precondition(
            "cosine pretraining must give real amplitudes".into(),
        ));
    };
    let offset = trace.records.last().map_or(0.0, |r| r.elapsed);
    let report = train_adam(
        shallow_cosine_model(&trace.freqs, a)?,
        train.inputs.view(),
        train.outputs.view(),
        &adam,
        &mut streams.rng(Purpose::MlpShuffle),
        eval,
    )?;
    curves.adam("pretrain_adam", &report, &test, offset)?;

    for &(r, a) in &p.arff_rules {
        let c = arff_config(config, p.arff_iterations, r, a);
        let trace = train_with(
            &c,
            &train,
            &FrequencySet::zeros(p.k, d + 1),
            Some(&val),
            &options,
        )?;
        curves.arff(&format!("arff_r{r}_a{a}"), &trace, &test, &c)?;
    }

    write_csv(
        &files.path("validation.csv"),
        &VALIDATION_COLUMNS,
        curves.rows,
    )?;
    write_csv(
        &files.timing_path(PathBuf::from("timing").join("validation.csv")),
        &["method", "unit", "step", "elapsed_s"],
        curves.timing,
    )?;
    write_csv(
        &files.path("summary.csv"),
        &PRETRAIN_SUMMARY_COLUMNS,
        curves.summary,
    )?;
    Ok(())
}
