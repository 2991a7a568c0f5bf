use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::arff::{ArffConfig, Schedule, Variant};
use crate::error::{Error, Result};
use crate::lsq::Activation;
use crate::mlp::Approach;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Test1Stats,
    Test2Fulldata,
    Test3Gamma,
    Test4Batch,
    Test5Init,
    Test6Pretrain,
    ImagePipeline,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Test1Stats,
        ExperimentKind::Test2Fulldata,
        ExperimentKind::Test3Gamma,
        ExperimentKind::Test4Batch,
        ExperimentKind::Test5Init,
        ExperimentKind::Test6Pretrain,
        ExperimentKind::ImagePipeline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Test1Stats => "test1_stats",
            ExperimentKind::Test2Fulldata => "test2_fulldata",
            ExperimentKind::Test3Gamma => "test3_gamma",
            ExperimentKind::Test4Batch => "test4_batch",
            ExperimentKind::Test5Init => "test5_init",
            ExperimentKind::Test6Pretrain => "test6_pretrain",
            ExperimentKind::ImagePipeline => "image_pipeline",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Paper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BatchRule {
    #[serde(rename = "full")]
    Full,
    /// `⌈M^{3/4}⌉`.
    #[serde(rename = "m^(3/4)")]
    ThreeQuarterPower,
}

/// How the batch size follows from the data size `M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BatchSpec {
    Fixed(usize),
    Rule(BatchRule),
    Capped { cap: usize },
}

impl BatchSpec {
    pub fn resolve(self, m: usize) -> usize {
        match self {
            BatchSpec::Fixed(n) => n,
            BatchSpec::Rule(BatchRule::Full) => m,
            BatchSpec::Rule(BatchRule::ThreeQuarterPower) => (m as f64).powf(0.75).ceil() as usize,
            BatchSpec::Capped { cap } => m.min(cap),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationChoice {
    /// The printed 4×4 matrix, projected onto the orthogonal group.
    Paper,
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageSection {
    /// PNG files; empty means the built-in synthetic image.
    pub paths: Vec<PathBuf>,
    pub crop: usize,
    pub synthetic_size: usize,
    pub approaches: Vec<Approach>,
    pub width: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub rff_k: usize,
    pub rff_iterations: usize,
    pub rff_lambda: f64,
    pub rff_step: f64,
    /// Write reconstructed images next to the PSNR tables.
    pub render: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PretrainSection {
    pub k: usize,
    pub train_points: usize,
    pub validation_points: usize,
    pub batch_size: usize,
    pub step: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub pretrain_iterations: usize,
    pub arff_iterations: usize,
    /// `(R, A)` pairs for the runs without Adam.
    pub arff_rules: Vec<(f64, bool)>,
    pub learning_rate: f64,
    pub adam_batch_size: usize,
    pub epochs: usize,
    pub freeze_first_layer: bool,
}

/// Everything one `run_experiment` call needs. Loaded by overlaying a TOML
/// file on the preset for its kind and scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub scale: Scale,
    pub seed: u64,
    pub realizations: usize,
    pub variants: Vec<Variant>,
    pub ks: Vec<usize>,
    /// Proposal step per entry of `ks`.
    pub deltas: Vec<f64>,
    pub batches: Vec<BatchSpec>,
    pub gammas: Vec<f64>,
    /// Standard deviations of the normal initial frequencies; 0 is all zeros.
    pub init_stds: Vec<f64>,
    pub iterations: usize,
    pub lambda: f64,
    /// Training points; `None` means `K²`.
    pub train_points: Option<usize>,
    pub test_points: usize,
    pub alpha: f64,
    pub rotation: RotationChoice,
    pub activation: Activation,
    pub snapshots: Vec<usize>,
    pub kde_axes: Vec<usize>,
    pub image: ImageSection,
    pub pretrain: PretrainSection,
}

fn deltas_for(ks: &[usize]) -> Vec<f64> {
    ks.iter()
        .map(|&k| 2f64.powf(-0.75 - 0.25 * ((k as f64).log2() - 5.0)))
        .collect()
}

impl ExperimentConfig {
    /// Defaults for `kind`. Desk scale keeps runs to minutes on one core;
    /// paper scale restores the published tables.
    pub fn preset(kind: ExperimentKind, scale: Scale) -> Self {
        let paper = scale == Scale::Paper;
        let mut c = Self {
            kind,
            scale,
            seed: 1,
            realizations: 1,
            variants: vec![Variant::Am, Variant::AmR, Variant::RwR],
            ks: vec![32, 64, 128],
            deltas: deltas_for(&[32, 64, 128]),
            batches: vec![BatchSpec::Rule(BatchRule::Full)],
            gammas: vec![10.0],
            init_stds: vec![0.0],
            iterations: if paper { 10_000 } else { 2000 },
            lambda: 0.1,
            train_points: None,
            test_points: 1000,
            alpha: crate::targets::DEFAULT_ALPHA,
            rotation: RotationChoice::Paper,
            activation: Activation::ComplexExp,
            snapshots: vec![],
            kde_axes: vec![],
            image: ImageSection {
                paths: vec![],
                crop: if paper { 512 } else { 128 },
                synthetic_size: 64,
                approaches: Approach::ALL.to_vec(),
                width: 256,
                epochs: if paper { 2000 } else { 200 },
                learning_rate: 1e-3,
                batch_size: 256,
                rff_k: 256,
                rff_iterations: 20,
                rff_lambda: 1e-4,
                rff_step: 1.0,
                render: true,
            },
            pretrain: PretrainSection {
                k: if paper { 1024 } else { 64 },
                train_points: if paper { 1_000_000 } else { 10_000 },
                validation_points: if paper { 10_000 } else { 1000 },
                batch_size: if paper { 10_000 } else { 1000 },
                step: 0.25,
                gamma: 10.0,
                lambda: 0.1,
                pretrain_iterations: if paper { 300 } else { 100 },
                arff_iterations: if paper { 12_000 } else { 1000 },
                arff_rules: vec![(1.0, false), (0.0, true), (1.0, true)],
                learning_rate: 5e-4,
                adam_batch_size: 128,
                epochs: if paper { 400 } else { 40 },
                freeze_first_layer: false,
            },
        };
        let paper_ks = |n: usize| -> Vec<usize> { (0..n).map(|i| 32 << i).collect() };
        match kind {
            ExperimentKind::Test1Stats => {
                c.realizations = if paper { 100 } else { 10 };
                c.batches = vec![BatchSpec::Rule(BatchRule::ThreeQuarterPower)];
                if paper {
                    c.ks = paper_ks(5);
                }
            }
            ExperimentKind::Test2Fulldata => {
                if paper {
                    c.ks = paper_ks(6);
                }
            }
            ExperimentKind::Test3Gamma => {
                c.ks = vec![if paper { 256 } else { 64 }];
                c.gammas = vec![1.0, 10.0];
            }
            ExperimentKind::Test4Batch => {
                c.ks = vec![if paper { 512 } else { 64 }];
                c.batches = if paper {
                    vec![
                        BatchSpec::Fixed(1000),
                        BatchSpec::Fixed(10_000),
                        BatchSpec::Rule(BatchRule::Full),
                    ]
                } else {
                    vec![
                        BatchSpec::Fixed(256),
                        BatchSpec::Fixed(1024),
                        BatchSpec::Rule(BatchRule::Full),
                    ]
                };
            }
            ExperimentKind::Test5Init => {
                c.ks = if paper { paper_ks(6) } else { vec![32, 64] };
                c.batches = vec![BatchSpec::Capped { cap: 10_000 }];
                c.init_stds = vec![10.0];
                c.snapshots = vec![0, 10, 100, c.iterations];
                c.kde_axes = vec![0, 1];
            }
            ExperimentKind::Test6Pretrain => {
                c.rotation = RotationChoice::Identity;
                c.activation = Activation::CosineBias;
                c.ks = vec![c.pretrain.k];
            }
            ExperimentKind::ImagePipeline => {
                c.realizations = if paper { 1 } else { 10 };
                c.activation = Activation::CosineBias;
                c.ks = vec![c.image.rff_k];
            }
        }
        c.deltas = deltas_for(&c.ks);
        c
    }

    /// The preset for the file's `kind` (and `scale`, default desk) with the
    /// file's values on top.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: toml::Table =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("config: {e}")))?;
        let kind = file
            .get("kind")
            .and_then(|v| v.as_str())
            .and_then(ExperimentKind::parse)
            .ok_or_else(|| Error::InvalidConfig("config needs a valid `kind`".into()))?;
        let scale = match file.get("scale").and_then(|v| v.as_str()) {
            None | Some("desk") => Scale::Desk,
            Some("paper") => Scale::Paper,
            Some(other) => return Err(Error::InvalidConfig(format!("unknown scale {other:?}"))),
        };
        let base = Self::preset(kind, scale);
        let mut table = match toml::Value::try_from(&base) {
            Ok(toml::Value::Table(t)) => t,
            _ => unreachable!("configs serialize to tables"),
        };
        if file.contains_key("ks") && !file.contains_key("deltas") {
            let ks: Vec<usize> = file["ks"]
                .clone()
                .try_into()
                .map_err(|e: toml::de::Error| Error::InvalidConfig(format!("ks: {e}")))?;
            table.insert(
                "deltas".into(),
                toml::Value::try_from(deltas_for(&ks))
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?,
            );
        }
        overlay(&mut table, file);
        let config: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.realizations == 0 {
            return bad("realizations must be at least 1");
        }
        if self.ks.is_empty() || self.variants.is_empty() || self.batches.is_empty() {
            return bad("ks, variants and batches must be nonempty");
        }
        if self.gammas.is_empty() || self.init_stds.is_empty() {
            return bad("gammas and init_stds must be nonempty");
        }
        if self.deltas.len() != self.ks.len() {
            return Err(Error::InvalidConfig(format!(
                "deltas has {} entries but ks has {}",
                self.deltas.len(),
                self.ks.len()
            )));
        }
        if self.init_stds.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return bad("init_stds must be finite and nonnegative");
        }
        if !(self.alpha > 0.0) {
            return bad("alpha must be positive");
        }
        if self.test_points == 0 {
            return bad("test_points must be at least 1");
        }
        let sampler_kind = !matches!(
            self.kind,
            ExperimentKind::Test6Pretrain | ExperimentKind::ImagePipeline
        );
        for (i, &k) in self.ks.iter().enumerate().filter(|_| sampler_kind) {
            for &gamma in &self.gammas {
                for &b in &self.batches {
                    let m = self.data_size(k);
                    self.arff_config(Variant::Am, self.deltas[i], gamma, b.resolve(m))
                        .validate(k, m)?;
                }
            }
        }
        if self.kind == ExperimentKind::ImagePipeline {
            let im = &self.image;
            if im.approaches.is_empty() {
                return bad("image approaches must be nonempty");
            }
            if im.width == 0 || im.batch_size == 0 || im.rff_k == 0 || im.rff_iterations == 0 {
                return bad("image width, batch size, rff_k and rff_iterations must be positive");
            }
        }
        if self.kind == ExperimentKind::Test6Pretrain {
            let p = &self.pretrain;
            if p.k >= p.batch_size || p.batch_size > p.train_points {
                return bad("pretraining needs k < batch_size <= train_points");
            }
            if p.validation_points == 0 || p.adam_batch_size == 0 {
                return bad("validation_points and adam_batch_size must be positive");
            }
        }
        Ok(())
    }

    pub fn data_size(&self, k: usize) -> usize {
        self.train_points.unwrap_or(k * k)
    }

    pub fn arff_config(
        &self,
        variant: Variant,
        step: f64,
        gamma: f64,
        batch_size: usize,
    ) -> ArffConfig {
        let mut c = ArffConfig::for_variant(variant);
        c.iterations = self.iterations;
        c.step = step;
        c.gamma = gamma;
        c.batch_size = batch_size;
        c.lambda = self.lambda;
        c.activation = self.activation;
        c.seed = self.seed;
        c
    }

    /// Step-1 configuration of the image pipeline.
    pub fn image_arff_config(&self, m: usize) -> ArffConfig {
        let im = &self.image;
        ArffConfig {
            iterations: im.rff_iterations,
            step: im.rff_step,
            gamma: 1.0,
            batch_size: m,
            lambda: im.rff_lambda,
            resample: Schedule::Constant(1.0),
            metropolis: Schedule::Constant(false),
            activation: Activation::CosineBias,
            seed: self.seed,
        }
    }
}

/// Recursively replaces entries of `base` by those of `top`.
fn overlay(base: &mut toml::Table, top: toml::Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => overlay(b, t),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for kind in ExperimentKind::ALL {
            for scale in [Scale::Desk, Scale::Paper] {
                ExperimentConfig::preset(kind, scale).validate().unwrap();
            }
        }
    }

    #[test]
    fn paper_step_table() {
        let c = ExperimentConfig::preset(ExperimentKind::Test2Fulldata, Scale::Paper);
        assert_eq!(c.ks, vec![32, 64, 128, 256, 512, 1024]);
        let expected = [-0.75, -1.0, -1.25, -1.5, -1.75, -2.0];
        for (d, e) in c.deltas.iter().zip(expected) {
            assert_eq!(*d, 2f64.powf(e));
        }
    }

    #[test]
    fn batch_rules() {
        assert_eq!(
            BatchSpec::Rule(BatchRule::ThreeQuarterPower).resolve(32 * 32),
            182
        );
        assert_eq!(BatchSpec::Capped { cap: 10_000 }.resolve(128 * 128), 10_000);
        assert_eq!(BatchSpec::Rule(BatchRule::Full).resolve(77), 77);
    }

    #[test]
    fn file_values_override_the_preset() {
        let c = ExperimentConfig::from_toml_str(
            "kind = \"test2_fulldata\"\nks = [32]\niterations = 5\nbatches = [\"full\", 200, { cap = 500 }]\n[image]\nepochs = 3\n",
        )
        .unwrap();
        assert_eq!(c.ks, vec![32]);
        assert_eq!(c.deltas, vec![2f64.powf(-0.75)]);
        assert_eq!(c.iterations, 5);
        assert_eq!(c.batches[1], BatchSpec::Fixed(200));
        assert_eq!(c.image.epochs, 3);
        assert_eq!(c.image.width, 256);
    }

    #[test]
    fn mismatched_pairs_are_rejected() {
        let e = ExperimentConfig::from_toml_str(
            "kind = \"test2_fulldata\"\nks = [32, 64]\ndeltas = [0.5]\n",
        );
        assert!(matches!(e, Err(Error::InvalidConfig(_))));
        assert!(ExperimentConfig::from_toml_str("kind = \"nope\"").is_err());
        assert!(ExperimentConfig::from_toml_str("kind = \"test2_fulldata\"\nbogus = 1").is_err());
    }
}
