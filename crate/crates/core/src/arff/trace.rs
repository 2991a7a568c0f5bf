use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::FrequencySet;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, read_csv, write_csv};
use crate::lsq::AmplitudeVector;

/// Version of the trace CSV and summary layouts.
pub const TRACE_SCHEMA_VERSION: u32 = 1;

pub const TRACE_COLUMNS: [&str; 10] = [
    "iter",
    "train_err",
    "test_err",
    "ess",
    "resampled",
    "accepts",
    "solves",
    "train_data_err",
    "test_data_err",
    "degenerate",
];

/// One iteration of a training run.
///
/// `train_err` and `test_err` are the normal-equation residual
/// `‖(Sᴴ S) a − Sᴴ y‖² / rows`; the `_data_` columns hold `‖S a − y‖² / rows`.
/// Test columns are NaN without test data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub train_err: f64,
    pub test_err: f64,
    pub ess: f64,
    pub resampled: bool,
    pub accepts: usize,
    pub solves: usize,
    pub train_data_err: f64,
    pub test_data_err: f64,
    pub degenerate: bool,
    /// Seconds since the start of training (monotonic clock).
    #[serde(skip)]
    pub elapsed: f64,
}

impl IterationRecord {
    fn to_row(&self) -> Vec<String> {
        vec![
            self.iter.to_string(),
            fmt_f64(self.train_err),
            fmt_f64(self.test_err),
            fmt_f64(self.ess),
            u8::from(self.resampled).to_string(),
            self.accepts.to_string(),
            self.solves.to_string(),
            fmt_f64(self.train_data_err),
            fmt_f64(self.test_data_err),
            u8::from(self.degenerate).to_string(),
        ]
    }

    fn from_row(row: &[String]) -> Result<Self> {
        if row.len() != TRACE_COLUMNS.len() {
            return Err(Error::Format(format!(
                "trace row has {} fields, expected {}",
                row.len(),
                TRACE_COLUMNS.len()
            )));
        }
        let f = |i: usize| -> Result<f64> {
            row[i].parse().map_err(|_| {
                Error::Format(format!(
                    "column {}: bad number {:?}",
                    TRACE_COLUMNS[i], row[i]
                ))
            })
        };
        let u = |i: usize| -> Result<usize> {
            row[i].parse().map_err(|_| {
                Error::Format(format!(
                    "column {}: bad integer {:?}",
                    TRACE_COLUMNS[i], row[i]
                ))
            })
        };
        Ok(Self {
            iter: u(0)?,
            train_err: f(1)?,
            test_err: f(2)?,
            ess: f(3)?,
            resampled: u(4)? != 0,
            accepts: u(5)?,
            solves: u(6)?,
            train_data_err: f(7)?,
            test_data_err: f(8)?,
            degenerate: u(9)? != 0,
            elapsed: f64::NAN,
        })
    }
}

/// Frequencies recorded after a given iteration (0 is the initial set).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub iter: usize,
    pub freqs: FrequencySet,
}

/// Everything a training run produces.
#[derive(Clone, Debug)]
pub struct TrainTrace {
    pub records: Vec<IterationRecord>,
    pub freqs: FrequencySet,
    pub amplitudes: AmplitudeVector,
    pub snapshots: Vec<Snapshot>,
    /// Training metrics of the initial solve, before the first iteration.
    pub initial_train_err: f64,
    pub initial_train_data_err: f64,
}

/// Minima, final values, and a digest of the final state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub schema_version: u32,
    pub iterations: usize,
    pub min_train_err: f64,
    pub argmin_train_err: usize,
    pub min_test_err: f64,
    pub argmin_test_err: usize,
    pub min_train_data_err: f64,
    pub argmin_train_data_err: usize,
    pub min_test_data_err: f64,
    pub argmin_test_data_err: usize,
    pub final_train_err: f64,
    pub final_test_err: f64,
    pub final_ess: f64,
    pub total_solves: usize,
    pub total_accepts: usize,
    pub resample_count: usize,
    pub final_state_sha256: String,
}

/// Smallest finite value and its iteration; NaN and 0 when there is none.
fn argmin(records: &[IterationRecord], key: impl Fn(&IterationRecord) -> f64) -> (f64, usize) {
    records
        .iter()
        .filter(|r| key(r).is_finite())
        .fold((f64::NAN, 0), |(best, at), r| {
            let v = key(r);
            if best.is_nan() || v < best {
                (v, r.iter)
            } else {
                (best, at)
            }
        })
}

impl TrainTrace {
    pub fn summary(&self) -> TraceSummary {
        let r = &self.records;
        let (min_train_err, argmin_train_err) = argmin(r, |x| x.train_err);
        let (min_test_err, argmin_test_err) = argmin(r, |x| x.test_err);
        let (min_train_data_err, argmin_train_data_err) = argmin(r, |x| x.train_data_err);
        let (min_test_data_err, argmin_test_data_err) = argmin(r, |x| x.test_data_err);
        let last = r.last();
        TraceSummary {
            schema_version: TRACE_SCHEMA_VERSION,
            iterations: r.len(),
            min_train_err,
            argmin_train_err,
            min_test_err,
            argmin_test_err,
            min_train_data_err,
            argmin_train_data_err,
            min_test_data_err,
            argmin_test_data_err,
            final_train_err: last.map_or(f64::NAN, |x| x.train_err),
            final_test_err: last.map_or(f64::NAN, |x| x.test_err),
            final_ess: last.map_or(f64::NAN, |x| x.ess),
            total_solves: r.iter().map(|x| x.solves).sum(),
            total_accepts: r.iter().map(|x| x.accepts).sum(),
            resample_count: r.iter().filter(|x| x.resampled).count(),
            final_state_sha256: state_digest(&self.freqs, &self.amplitudes),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_trace_csv(path, &self.records)
    }

    /// `iter,elapsed_s`; kept apart from the trace since it is not
    /// reproducible.
    pub fn write_timing_csv(&self, path: &Path) -> Result<()> {
        write_csv(
            path,
            &["iter", "elapsed_s"],
            self.records
                .iter()
                .map(|r| vec![r.iter.to_string(), fmt_f64(r.elapsed)]),
        )
    }
}

pub fn write_trace_csv(path: &Path, records: &[IterationRecord]) -> Result<()> {
    write_csv(
        path,
        &TRACE_COLUMNS,
        records.iter().map(IterationRecord::to_row),
    )
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<IterationRecord>> {
    let (header, rows) = read_csv(path)?;
    if header != TRACE_COLUMNS {
        return Err(Error::Format(format!(
            "{}: unexpected trace header {header:?}",
            path.display()
        )));
    }
    rows.iter().map(|r| IterationRecord::from_row(r)).collect()
}

/// SHA-256 over the little-endian bytes of the frequencies, then the
/// amplitudes (real and imaginary parts interleaved).
pub fn state_digest(freqs: &FrequencySet, a: &AmplitudeVector) -> String {
    let mut h = Sha256::new();
    for v in freqs.vectors().iter() {
        h.update(v.to_le_bytes());
    }
    match a {
        AmplitudeVector::Real(a) => {
            for v in a.iter() {
                h.update(v.to_le_bytes());
            }
        }
        AmplitudeVector::Complex(a) => {
            for v in a.iter() {
                h.update(v.re.to_le_bytes());
                h.update(v.im.to_le_bytes());
            }
        }
    }
    hex::encode(h.finalize())
}
