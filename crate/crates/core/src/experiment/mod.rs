//! Experiment harness: configs, seeded data, parallel realizations and the
//! CSV/JSON artifacts the plotting scripts read.

mod config;
pub mod image;
mod kde;
mod model;
mod pipeline;
mod pretrain;
mod sampler_runs;
pub mod stats;

use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::arff::FrequencySet;
use crate::error::Result;
use crate::io::write_json;
use crate::rng::{Purpose, Streams};
use crate::targets::{generate_dataset_with, normalize, normalize_with, Dataset, TargetSpec};

pub use config::{
    BatchRule, BatchSpec, ExperimentConfig, ExperimentKind, ImageSection, PretrainSection,
    RotationChoice, Scale,
};
pub use kde::{default_grid, kde, silverman_bandwidth, KdeEstimate, DEFAULT_GRID_POINTS};
pub use model::{ModelBody, ModelFile, StoredAmplitudes, MODEL_FORMAT, MODEL_VERSION};
use pipeline::run_image_pipeline;
pub use pipeline::{ImageRun, PSNR_RUN_COLUMNS, PSNR_SUMMARY_COLUMNS};
use pretrain::run_pretrain;
pub use pretrain::{PRETRAIN_SUMMARY_COLUMNS, VALIDATION_COLUMNS};
use sampler_runs::run_sampler_experiment;
pub use sampler_runs::{
    aggregate_deviation, read_aggregate, recompute_aggregate, run_groups, write_aggregate,
    AggregateRow, RunGroup, AGGREGATE_COLUMNS, INDEX_COLUMNS,
};
pub use sampler_runs::{CONVERGENCE_COLUMNS, MINIMA_COLUMNS};

/// Version of every CSV layout and of the manifest.
pub const SCHEMA_VERSION: u32 = 1;

/// Written last into every output directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub code_version: String,
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    /// Paths relative to the output directory, in write order.
    pub files: Vec<PathBuf>,
    /// Files whose contents depend on the machine (wall-clock timings).
    pub nondeterministic: Vec<PathBuf>,
}

/// Runs `config` into `out`, returning the manifest it wrote.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    config.validate()?;
    std::fs::create_dir_all(out)?;
    let mut files = Files::new(out);
    match config.kind {
        ExperimentKind::Test6Pretrain => run_pretrain(config, &mut files)?,
        ExperimentKind::ImagePipeline => {
            run_image_pipeline(config, &mut files)?;
        }
        _ => run_sampler_experiment(config, &mut files)?,
    }
    files.write_text("config.toml", &config.to_toml())?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        code_version: env!("CARGO_PKG_VERSION").into(),
        kind: config.kind,
        config: config.clone(),
        files: files.written.clone(),
        nondeterministic: files.timing.clone(),
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Tracks what an experiment writes under its output directory.
pub(crate) struct Files {
    root: PathBuf,
    written: Vec<PathBuf>,
    timing: Vec<PathBuf>,
}

impl Files {
    fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
            written: vec![],
            timing: vec![],
        }
    }

    /// Absolute path for `rel`, recorded as written.
    fn path(&mut self, rel: impl Into<PathBuf>) -> PathBuf {
        let rel = rel.into();
        let abs = self.root.join(&rel);
        self.written.push(rel);
        abs
    }

    fn timing_path(&mut self, rel: impl Into<PathBuf>) -> PathBuf {
        let rel = rel.into();
        self.timing.push(rel.clone());
        self.path(rel)
    }

    fn write_text(&mut self, rel: &str, text: &str) -> Result<()> {
        crate::io::write_atomic(&self.path(rel), text.as_bytes())
    }
}

impl ExperimentConfig {
    pub fn target_spec(&self) -> Result<TargetSpec> {
        match self.rotation {
            RotationChoice::Paper => TargetSpec::rotated_4d(self.alpha),
            RotationChoice::Identity => TargetSpec::axis_aligned(4, self.alpha),
        }
    }
}

/// Normalized training and test sets for one realization; test inputs and
/// outputs use the training statistics.
pub fn realization_data(
    spec: &TargetSpec,
    train_points: usize,
    test_points: usize,
    seed: u64,
    realization: u64,
) -> Result<(Dataset, Dataset)> {
    let streams = Streams::new(seed, realization);
    let raw = generate_dataset_with(train_points, spec, &mut streams.rng(Purpose::TrainData))?;
    let test = generate_dataset_with(test_points, spec, &mut streams.rng(Purpose::TestData))?;
    let (train, stats) = normalize(&raw)?;
    Ok((train, normalize_with(&test, &stats)?))
}

/// `B⁻¹ω` for every frequency, ignoring a trailing bias component.
pub fn projected_frequencies(spec: &TargetSpec, freqs: &FrequencySet) -> Result<Vec<Vec<f64>>> {
    let d = spec.dim();
    if freqs.dim() != d && freqs.dim() != d + 1 {
        return Err(crate::Error::DimensionMismatch {
            what: "frequency dimension",
            expected: d,
            found: freqs.dim(),
        });
    }
    Ok(freqs
        .vectors()
        .rows()
        .into_iter()
        .map(|w| spec.inverse_rotate(w.slice(ndarray::s![..d])))
        .collect())
}

/// All zeros for `std = 0`, otherwise i.i.d. `N(0, std²)` entries.
pub fn initial_frequencies(
    count: usize,
    dim: usize,
    std: f64,
    seed: u64,
    realization: u64,
) -> FrequencySet {
    if std == 0.0 {
        return FrequencySet::zeros(count, dim);
    }
    let mut rng = Streams::new(seed, realization).rng(Purpose::InitialFrequencies);
    let v =
        Array2::from_shape_simple_fn((count, dim), || std * rng.sample::<f64, _>(StandardNormal));
    FrequencySet::new(v).expect("finite normal draws")
}
