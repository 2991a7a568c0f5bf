use std::path::Path;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arff::FrequencySet;
use crate::error::{Error, Result};
use crate::io::write_json;
use crate::lsq::{Activation, AmplitudeVector};
use crate::mlp::MlpModel;
use crate::targets::NormalizationStats;

pub const MODEL_FORMAT: &str = "arff-model";
pub const MODEL_VERSION: u32 = 1;

/// Amplitudes as separate real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredAmplitudes {
    pub re: Array2<f64>,
    pub im: Option<Array2<f64>>,
}

impl From<&AmplitudeVector> for StoredAmplitudes {
    fn from(a: &AmplitudeVector) -> Self {
        match a {
            AmplitudeVector::Real(a) => Self {
                re: a.clone(),
                im: None,
            },
            AmplitudeVector::Complex(a) => Self {
                re: a.mapv(|z| z.re),
                im: Some(a.mapv(|z| z.im)),
            },
        }
    }
}

impl StoredAmplitudes {
    pub fn to_amplitudes(&self) -> Result<AmplitudeVector> {
        match &self.im {
            None => Ok(AmplitudeVector::Real(self.re.clone())),
            Some(im) if im.dim() == self.re.dim() => {
                let mut z = Array2::<Complex64>::zeros(self.re.raw_dim());
                Zip::from(&mut z)
                    .and(&self.re)
                    .and(im)
                    .for_each(|z, &re, &im| *z = Complex64::new(re, im));
                Ok(AmplitudeVector::Complex(z))
            }
            Some(im) => Err(Error::DimensionMismatch {
                what: "imaginary amplitude parts",
                expected: self.re.len(),
                found: im.len(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBody {
    Shallow {
        activation: Activation,
        frequencies: FrequencySet,
        amplitudes: StoredAmplitudes,
        normalization: Option<NormalizationStats>,
    },
    Mlp {
        network: MlpModel,
        normalization: Option<NormalizationStats>,
    },
}

/// A versioned model checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    #[serde(flatten)]
    pub body: ModelBody,
}

impl ModelFile {
    pub fn new(body: ModelBody) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            body,
        }
    }

    pub fn shallow(
        activation: Activation,
        frequencies: &FrequencySet,
        amplitudes: &AmplitudeVector,
        normalization: Option<NormalizationStats>,
    ) -> Self {
        Self::new(ModelBody::Shallow {
            activation,
            frequencies: frequencies.clone(),
            amplitudes: amplitudes.into(),
            normalization,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: Self = serde_json::from_str(&text)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Format(format!(
                "{}: not a model file (format {:?})",
                path.display(),
                file.format
            )));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "{}: unsupported model version {}",
                path.display(),
                file.version
            )));
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn complex_shallow_model_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        let f = FrequencySet::new(array![[0.1, -2.0], [3.0, 0.25]]).unwrap();
        let a = AmplitudeVector::Complex(array![
            [Complex64::new(0.1, 1e-17)],
            [Complex64::new(-3.0, 2.5)]
        ]);
        ModelFile::shallow(Activation::ComplexExp, &f, &a, None)
            .save(&p)
            .unwrap();
        let back = ModelFile::load(&p).unwrap();
        match back.body {
            ModelBody::Shallow {
                frequencies,
                amplitudes,
                ..
            } => {
                assert_eq!(frequencies, f);
                assert_eq!(amplitudes.to_amplitudes().unwrap(), a);
            }
            ModelBody::Mlp { .. } => panic!("wrong kind"),
        }
    }

    #[test]
    fn rejects_future_versions() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        let f = FrequencySet::zeros(1, 1);
        let mut m = ModelFile::shallow(
            Activation::CosineBias,
            &f,
            &AmplitudeVector::Real(array![[1.0]]),
            None,
        );
        m.version = 99;
        m.save(&p).unwrap();
        assert!(ModelFile::load(&p).is_err());
    }
}
