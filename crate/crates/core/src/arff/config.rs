use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsq::Activation;

/// A per-iteration rule: a constant, or one value during a warm-up of
/// `until` iterations and another afterwards.
///
/// In TOML either `resample = 0.75` or
/// `resample = { until = 100, first = 1.0, then = 0.75 }`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule<T> {
    Constant(T),
    Switch { until: usize, first: T, then: T },
}

impl<T: Copy> Schedule<T> {
    /// Value at iteration `n` (1-based).
    pub fn at(&self, n: usize) -> T {
        match *self {
            Schedule::Constant(v) => v,
            Schedule::Switch { until, first, then } => {
                if n <= until {
                    first
                } else {
                    then
                }
            }
        }
    }

    fn values(&self) -> Vec<T> {
        match *self {
            Schedule::Constant(v) => vec![v],
            Schedule::Switch { first, then, .. } => vec![first, then],
        }
    }
}

/// The named flow-control combinations compared in the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Adaptive Metropolis, no resampling.
    #[serde(rename = "am")]
    Am,
    /// Adaptive Metropolis with resampling at `R = 0.75`.
    #[serde(rename = "am-r")]
    AmR,
    /// Random walk with resampling every iteration.
    #[serde(rename = "rw-r")]
    RwR,
    /// Adaptive Metropolis with resampling every iteration.
    #[serde(rename = "am-r1")]
    AmR1,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Am, Variant::AmR, Variant::RwR, Variant::AmR1];

    pub fn rules(self) -> (Schedule<f64>, Schedule<bool>) {
        match self {
            Variant::Am => (Schedule::Constant(0.0), Schedule::Constant(true)),
            Variant::AmR => (Schedule::Constant(0.75), Schedule::Constant(true)),
            Variant::RwR => (Schedule::Constant(1.0), Schedule::Constant(false)),
            Variant::AmR1 => (Schedule::Constant(1.0), Schedule::Constant(true)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Am => "am",
            Variant::AmR => "am-r",
            Variant::RwR => "rw-r",
            Variant::AmR1 => "am-r1",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Hyperparameters of one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArffConfig {
    /// Number of iterations N.
    pub iterations: usize,
    /// Proposal step standard deviation δ.
    pub step: f64,
    /// Acceptance exponent γ.
    pub gamma: f64,
    /// Batch size M_B.
    pub batch_size: usize,
    /// Tikhonov weight λ.
    pub lambda: f64,
    /// Resampling rule R(n).
    pub resample: Schedule<f64>,
    /// Adaptive-Metropolis rule A(n).
    pub metropolis: Schedule<bool>,
    pub activation: Activation,
    pub seed: u64,
}

impl ArffConfig {
    pub fn for_variant(variant: Variant) -> Self {
        let (resample, metropolis) = variant.rules();
        Self {
            iterations: 1000,
            step: 0.5,
            gamma: 10.0,
            batch_size: 1024,
            lambda: 0.1,
            resample,
            metropolis,
            activation: Activation::ComplexExp,
            seed: 0,
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        (self.resample, self.metropolis) = variant.rules();
        self
    }

    /// Checks the hyperparameters alone.
    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad(format!(
                "step must be finite and positive, got {}",
                self.step
            ));
        }
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return bad(format!(
                "gamma must be finite and at least 1, got {}",
                self.gamma
            ));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!(
                "lambda must be finite and positive, got {}",
                self.lambda
            ));
        }
        if self
            .resample
            .values()
            .iter()
            .any(|r| !(0.0..=1.0).contains(r))
        {
            return bad("resampling rule values must lie in [0, 1]".into());
        }
        Ok(())
    }

    /// Full validation against `k` frequencies and `m` data points:
    /// requires `K < M_B ≤ M`.
    pub fn validate(&self, k: usize, m: usize) -> Result<()> {
        self.check()?;
        if k >= self.batch_size {
            return Err(Error::InvalidConfig(format!(
                "batch size {} must exceed the number of frequencies {k}",
                self.batch_size
            )));
        }
        if self.batch_size > m {
            return Err(Error::InvalidConfig(format!(
                "batch size {} exceeds the {m} available data points",
                self.batch_size
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn switch_schedule_changes_after_warm_up() {
        let r = Schedule::Switch {
            until: 3,
            first: 1.0,
            then: 0.75,
        };
        assert_eq!((r.at(1), r.at(3), r.at(4)), (1.0, 1.0, 0.75));
    }

    #[test]
    fn schedules_parse_from_toml() {
        #[derive(Deserialize)]
        struct T {
            a: Schedule<f64>,
            b: Schedule<bool>,
        }
        let t: T = toml::from_str("a = { until = 5, first = 1.0, then = 0.5 }\nb = true").unwrap();
        assert_eq!(t.b, Schedule::Constant(true));
        assert_eq!(t.a.at(6), 0.5);
    }

    #[test]
    fn batch_size_bounds() {
        let mut c = ArffConfig::for_variant(Variant::Am);
        c.batch_size = 64;
        assert!(c.validate(64, 100).is_err());
        assert!(c.validate(63, 63).is_err());
        assert!(c.validate(63, 64).is_ok());
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let base = ArffConfig::for_variant(Variant::AmR);
        let mut c = base.clone();
        c.lambda = 0.0;
        assert!(c.check().is_err());
        let mut c = base.clone();
        c.gamma = 0.5;
        assert!(c.check().is_err());
        let mut c = base.clone();
        c.resample = Schedule::Constant(1.5);
        assert!(c.check().is_err());
        let mut c = base;
        c.iterations = 0;
        assert!(c.check().is_err());
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(Variant::parse(v.name()), Some(v));
        }
    }
}
