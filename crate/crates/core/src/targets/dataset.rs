use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{target_f, TargetSpec};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::rng::{Purpose, Streams};

const BINARY_MAGIC: &[u8; 8] = b"ARFFDSET";
const BINARY_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    SyntheticSineIntegral,
    Image,
    External,
}

/// Per-component means and (population) standard deviations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
    pub output_mean: Vec<f64>,
    pub output_std: Vec<f64>,
}

/// Input/output pairs, one row per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub inputs: Array2<f64>,
    pub outputs: Array2<f64>,
    pub stats: Option<NormalizationStats>,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    format: String,
    version: u32,
    provenance: Provenance,
    stats: Option<NormalizationStats>,
}

impl Dataset {
    pub fn new(inputs: Array2<f64>, outputs: Array2<f64>, provenance: Provenance) -> Result<Self> {
        if inputs.nrows() != outputs.nrows() {
            return Err(Error::DimensionMismatch {
                what: "dataset outputs vs inputs",
                expected: inputs.nrows(),
                found: outputs.nrows(),
            });
        }
        if inputs.nrows() == 0 || inputs.ncols() == 0 || outputs.ncols() == 0 {
            return Err(Error::Precondition(
                "a dataset needs M ≥ 1 nonempty rows".into(),
            ));
        }
        Ok(Self {
            inputs,
            outputs,
            stats: None,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn channels(&self) -> usize {
        self.outputs.ncols()
    }

    /// Copies the rows at `indices`.
    pub fn select(&self, indices: &[usize]) -> (Array2<f64>, Array2<f64>) {
        (
            self.inputs.select(Axis(0), indices),
            self.outputs.select(Axis(0), indices),
        )
    }

    /// Columnar little-endian binary file plus a JSON sidecar (same stem,
    /// `.json`) carrying provenance and normalization statistics.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(32 + 8 * self.len() * (self.dim() + self.channels()));
        buf.extend_from_slice(BINARY_MAGIC);
        buf.extend_from_slice(&BINARY_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.channels() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for col in self
            .inputs
            .columns()
            .into_iter()
            .chain(self.outputs.columns())
        {
            for v in col {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        write_atomic(path, &buf)?;
        let sidecar = Sidecar {
            format: "arff-dataset".into(),
            version: BINARY_VERSION,
            provenance: self.provenance,
            stats: self.stats.clone(),
        };
        write_atomic(
            &path.with_extension("json"),
            serde_json::to_string_pretty(&sidecar)?.as_bytes(),
        )
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
        let bad = |msg: &str| Error::Format(format!("{}: {msg}", path.display()));
        if bytes.len() < 28 || &bytes[..8] != BINARY_MAGIC {
            return Err(bad("not a dataset file"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        if u32_at(8) != BINARY_VERSION {
            return Err(bad("unsupported dataset version"));
        }
        let dim = u32_at(12) as usize;
        let channels = u32_at(16) as usize;
        let rows = u64::from_le_bytes(bytes[20..28].try_into().unwrap()) as usize;
        let body = &bytes[28..];
        if body.len() != 8 * rows * (dim + channels) {
            return Err(bad("truncated dataset body"));
        }
        let col = |c: usize| -> Array1<f64> {
            body[8 * rows * c..8 * rows * (c + 1)]
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect()
        };
        let mut inputs = Array2::zeros((rows, dim));
        for c in 0..dim {
            inputs.column_mut(c).assign(&col(c));
        }
        let mut outputs = Array2::zeros((rows, channels));
        for c in 0..channels {
            outputs.column_mut(c).assign(&col(dim + c));
        }
        let sidecar_path = path.with_extension("json");
        let (provenance, stats) = if sidecar_path.exists() {
            let s: Sidecar = serde_json::from_reader(BufReader::new(File::open(sidecar_path)?))?;
            (s.provenance, s.stats)
        } else {
            (Provenance::External, None)
        };
        let mut ds = Dataset::new(inputs, outputs, provenance)?;
        ds.stats = stats;
        Ok(ds)
    }

    /// CSV with header `x1..xd,y` (or `y1..yC` for several channels).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = (1..=self.dim()).map(|i| format!("x{i}")).collect();
        if self.channels() == 1 {
            header.push("y".into());
        } else {
            header.extend((1..=self.channels()).map(|i| format!("y{i}")));
        }
        w.write_record(&header)?;
        for (x, y) in self.inputs.outer_iter().zip(self.outputs.outer_iter()) {
            w.write_record(x.iter().chain(y.iter()).map(|v| v.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        write_atomic(path, &bytes)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        let dim = header.iter().filter(|h| h.starts_with('x')).count();
        let channels = header.iter().filter(|h| h.starts_with('y')).count();
        if dim + channels != header.len() || dim == 0 || channels == 0 {
            return Err(Error::Format(format!(
                "{}: expected columns x1..xd followed by y or y1..yC",
                path.display()
            )));
        }
        let mut flat_x = Vec::new();
        let mut flat_y = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            for (i, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Format(format!("bad number {field:?}")))?;
                if i < dim {
                    flat_x.push(v)
                } else {
                    flat_y.push(v)
                }
            }
        }
        let rows = flat_x.len() / dim;
        let inputs = Array2::from_shape_vec((rows, dim), flat_x)
            .map_err(|e| Error::Format(e.to_string()))?;
        let outputs = Array2::from_shape_vec((rows, channels), flat_y)
            .map_err(|e| Error::Format(e.to_string()))?;
        Dataset::new(inputs, outputs, Provenance::External)
    }
}

/// `M` standard-Gaussian inputs with exact target values, drawn from the
/// training-data stream of `seed`.
pub fn generate_dataset(m: usize, spec: &TargetSpec, seed: u64) -> Result<Dataset> {
    let mut rng = Streams::new(seed, 0).rng(Purpose::TrainData);
    generate_dataset_with(m, spec, &mut rng)
}

pub fn generate_dataset_with<R: Rng + ?Sized>(
    m: usize,
    spec: &TargetSpec,
    rng: &mut R,
) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::Precondition(
            "dataset size must be at least 1".into(),
        ));
    }
    let d = spec.dim();
    let inputs = Array2::from_shape_simple_fn((m, d), || rng.sample::<f64, _>(StandardNormal));
    let outputs = Array2::from_shape_fn((m, 1), |(i, _)| target_f(inputs.row(i), spec));
    Dataset::new(inputs, outputs, Provenance::SyntheticSineIntegral)
}

fn column_stats(a: ArrayView2<'_, f64>, what: &'static str) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = a.nrows() as f64;
    let mut means = Vec::with_capacity(a.ncols());
    let mut stds = Vec::with_capacity(a.ncols());
    for (c, col) in a.columns().into_iter().enumerate() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if !(std > 0.0) || !std.is_finite() {
            return Err(Error::DegenerateData { what, component: c });
        }
        means.push(mean);
        stds.push(std);
    }
    Ok((means, stds))
}

/// Centers and scales every input and output component to zero mean and
/// unit standard deviation.
pub fn normalize(data: &Dataset) -> Result<(Dataset, NormalizationStats)> {
    if data.len() < 2 {
        return Err(Error::Precondition(
            "normalization needs at least two samples".into(),
        ));
    }
    let (input_mean, input_std) = column_stats(data.inputs.view(), "input")?;
    let (output_mean, output_std) = column_stats(data.outputs.view(), "output")?;
    let stats = NormalizationStats {
        input_mean,
        input_std,
        output_mean,
        output_std,
    };
    Ok((normalize_with(data, &stats)?, stats))
}

/// Applies existing statistics, e.g. the training set's to a test set.
pub fn normalize_with(data: &Dataset, stats: &NormalizationStats) -> Result<Dataset> {
    check_stats(data, stats)?;
    let mut out = data.clone();
    scale_columns(&mut out.inputs, &stats.input_mean, &stats.input_std, false);
    scale_columns(
        &mut out.outputs,
        &stats.output_mean,
        &stats.output_std,
        false,
    );
    out.stats = Some(stats.clone());
    Ok(out)
}

pub fn denormalize(data: &Dataset, stats: &NormalizationStats) -> Result<Dataset> {
    check_stats(data, stats)?;
    let mut out = data.clone();
    scale_columns(&mut out.inputs, &stats.input_mean, &stats.input_std, true);
    scale_columns(
        &mut out.outputs,
        &stats.output_mean,
        &stats.output_std,
        true,
    );
    out.stats = None;
    Ok(out)
}

fn check_stats(data: &Dataset, stats: &NormalizationStats) -> Result<()> {
    if stats.input_mean.len() != data.dim() || stats.input_std.len() != data.dim() {
        return Err(Error::DimensionMismatch {
            what: "normalization input components",
            expected: data.dim(),
            found: stats.input_mean.len(),
        });
    }
    if stats.output_mean.len() != data.channels() || stats.output_std.len() != data.channels() {
        return Err(Error::DimensionMismatch {
            what: "normalization output components",
            expected: data.channels(),
            found: stats.output_mean.len(),
        });
    }
    Ok(())
}

fn scale_columns(a: &mut Array2<f64>, mean: &[f64], std: &[f64], inverse: bool) {
    for (c, mut col) in a.columns_mut().into_iter().enumerate() {
        if inverse {
            col.mapv_inplace(|v| v * std[c] + mean[c]);
        } else {
            col.mapv_inplace(|v| (v - mean[c]) / std[c]);
        }
    }
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Provenance::SyntheticSineIntegral => "synthetic-sine-integral",
            Provenance::Image => "image",
            Provenance::External => "external",
        };
        f.write_str(s)
    }
}
