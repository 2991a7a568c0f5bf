use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::image::{ingest_image, render, split_parity, synthetic_image, write_png, ImageData};
use super::stats::moments;
use super::{ExperimentConfig, Files};
use crate::arff::{train_with, FrequencySet, TrainOptions};
use crate::error::Result;
use crate::io::{fmt_f64, write_csv};
use crate::mlp::{image_model, psnr_with_max, train_adam, AdamConfig, Approach, TrainReport};
use crate::rng::{Purpose, Streams};

pub const PSNR_RUN_COLUMNS: [&str; 6] = [
    "image",
    "approach",
    "realization",
    "psnr",
    "train_mse",
    "test_mse",
];
pub const PSNR_SUMMARY_COLUMNS: [&str; 7] = [
    "approach",
    "description",
    "count",
    "mean",
    "std",
    "max",
    "min",
];

/// Test PSNR of one trained network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageRun {
    pub image: String,
    pub approach: Approach,
    pub realization: u64,
    pub psnr: f64,
    pub train_mse: f64,
    pub test_mse: f64,
}

struct Trained {
    run: ImageRun,
    report: TrainReport,
}

fn load_images(config: &ExperimentConfig) -> Result<Vec<(String, ImageData)>> {
    let im = &config.image;
    if im.paths.is_empty() {
        return Ok(vec![(
            "synthetic".into(),
            split_parity(&synthetic_image(im.synthetic_size))?,
        )]);
    }
    im.paths
        .iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map_or_else(|| "image".into(), |s| s.to_string_lossy().into_owned());
            Ok((name, ingest_image(p, im.crop)?))
        })
        .collect()
}

/// Step 1 (ARFF on the training pixels) and Step 2 (Adam) for every
/// configured approach, on one image and realization.
fn run_image(
    config: &ExperimentConfig,
    name: &str,
    data: &ImageData,
    realization: u64,
) -> Result<Vec<Trained>> {
    let im = &config.image;
    let streams = Streams::new(config.seed, realization);
    let train = &data.train;
    let rff = if im.approaches.contains(&Approach::ArffRff) {
        let arff = config.image_arff_config(train.len());
        let options = TrainOptions {
            realization,
            snapshots: vec![],
        };
        let trace = train_with(
            &arff,
            train,
            &FrequencySet::zeros(im.rff_k, train.dim() + 1),
            None,
            &options,
        )?;
        Some(trace.freqs)
    } else {
        None
    };
    let adam = AdamConfig::new(im.learning_rate, im.batch_size, im.epochs);
    let mut out = Vec::new();
    for &approach in &im.approaches {
        let model = image_model(
            approach,
            train.dim(),
            im.width,
            train.channels(),
            rff.as_ref(),
            &mut streams.rng(Purpose::MlpInit),
        )?;
        let report = train_adam(
            model,
            train.inputs.view(),
            train.outputs.view(),
            &adam,
            &mut streams.rng(Purpose::MlpShuffle),
            Some((data.test.inputs.view(), data.test.outputs.view())),
        )?;
        let test_mse = report
            .epochs
            .last()
            .map_or(report.initial_val_mse, |e| e.val_mse);
        let train_mse = report
            .model
            .mse(train.inputs.view(), train.outputs.view())?;
        let run = ImageRun {
            image: name.into(),
            approach,
            realization,
            psnr: psnr_with_max(test_mse, data.max_intensity),
            train_mse,
            test_mse,
        };
        log::info!(
            "{name} approach {} r{realization}: PSNR {:.2} dB",
            approach.number(),
            run.psnr
        );
        out.push(Trained { run, report });
    }
    Ok(out)
}

/// Runs the pipeline over every image and realization and writes the PSNR
/// tables, loss curves and (for realization 0) reconstructions.
pub(crate) fn run_image_pipeline(
    config: &ExperimentConfig,
    files: &mut Files,
) -> Result<Vec<ImageRun>> {
    let images = load_images(config)?;
    let jobs: Vec<(usize, u64)> = (0..images.len())
        .flat_map(|i| (0..config.realizations as u64).map(move |r| (i, r)))
        .collect();
    let results: Vec<Vec<Trained>> = jobs
        .par_iter()
        .map(|&(i, r)| run_image(config, &images[i].0, &images[i].1, r))
        .collect::<Result<_>>()?;

    let mut runs = Vec::new();
    for (&(i, r), trained) in jobs.iter().zip(&results) {
        let (name, data) = &images[i];
        for t in trained {
            let stem = format!("{name}_a{}_r{r:03}", t.run.approach.number());
            t.report
                .write_loss_csv(&files.path(PathBuf::from("loss").join(format!("{stem}.csv"))))?;
            t.report.write_timing_csv(
                &files.timing_path(PathBuf::from("timing").join(format!("{stem}.csv"))),
            )?;
            if config.image.render && r == 0 {
                let img = render(&t.report.model, data.size)?;
                write_png(
                    &files.path(PathBuf::from("images").join(format!("{stem}.png"))),
                    &img,
                )?;
            }
            runs.push(t.run.clone());
        }
    }
    write_csv(
        &files.path("psnr_runs.csv"),
        &PSNR_RUN_COLUMNS,
        runs.iter().map(|x| {
            vec![
                x.image.clone(),
                x.approach.number().to_string(),
                x.realization.to_string(),
                fmt_f64(x.psnr),
                fmt_f64(x.train_mse),
                fmt_f64(x.test_mse),
            ]
        }),
    )?;
    let summary = config.image.approaches.iter().map(|&a| {
        let values: Vec<f64> = runs
            .iter()
            .filter(|x| x.approach == a)
            .map(|x| x.psnr)
            .collect();
        let m = moments(&values);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        vec![
            a.number().to_string(),
            a.description().into(),
            m.count.to_string(),
            fmt_f64(m.mean),
            fmt_f64(m.std),
            fmt_f64(max),
            fmt_f64(min),
        ]
    });
    write_csv(
        &files.path("psnr_summary.csv"),
        &PSNR_SUMMARY_COLUMNS,
        summary,
    )?;
    Ok(runs)
}
