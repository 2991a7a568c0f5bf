use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kde::kde;
use super::model::ModelFile;
use super::stats::{moments, pointwise, Moments};
use super::{initial_frequencies, realization_data, ExperimentConfig, Files};
use crate::arff::{read_trace_csv, train_with, IterationRecord, TrainOptions, TrainTrace, Variant};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, read_csv, write_csv, write_json};
use crate::targets::{error_bound, fourier_l1_norm, optimal_marginal};

pub const INDEX_COLUMNS: [&str; 9] = [
    "tag",
    "variant",
    "k",
    "step",
    "batch_size",
    "gamma",
    "init_std",
    "realization",
    "trace",
];

pub const AGGREGATE_COLUMNS: [&str; 13] = [
    "tag",
    "variant",
    "k",
    "batch_size",
    "gamma",
    "init_std",
    "metric",
    "iter",
    "count",
    "mean",
    "std",
    "lower",
    "upper",
];

pub const MINIMA_COLUMNS: [&str; 18] = [
    "tag",
    "variant",
    "k",
    "batch_size",
    "gamma",
    "init_std",
    "realization",
    "min_train_err",
    "argmin_train_err",
    "min_test_err",
    "min_train_data_err",
    "argmin_train_data_err",
    "min_test_data_err",
    "final_train_err",
    "final_train_data_err",
    "final_ess",
    "total_solves",
    "final_state_sha256",
];

pub const CONVERGENCE_COLUMNS: [&str; 13] = [
    "tag",
    "variant",
    "k",
    "batch_size",
    "gamma",
    "init_std",
    "metric",
    "count",
    "mean",
    "std",
    "lower",
    "upper",
    "bound",
];

const AGGREGATED_METRICS: [&str; 5] = [
    "train_err",
    "test_err",
    "train_data_err",
    "test_data_err",
    "ess",
];

/// One point of the parameter grid; realizations of a group differ only in
/// their random streams.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunGroup {
    pub variant: Variant,
    pub k: usize,
    pub step: f64,
    pub batch_size: usize,
    pub gamma: f64,
    pub init_std: f64,
}

impl RunGroup {
    pub fn tag(&self) -> String {
        format!(
            "k{}_mb{}_g{}_init{}_{}",
            self.k, self.batch_size, self.gamma, self.init_std, self.variant
        )
    }

    fn key_fields(&self) -> Vec<String> {
        vec![
            self.tag(),
            self.variant.to_string(),
            self.k.to_string(),
            self.batch_size.to_string(),
            fmt_f64(self.gamma),
            fmt_f64(self.init_std),
        ]
    }
}

/// One line of `aggregate.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub key: Vec<String>,
    pub metric: String,
    pub iter: usize,
    pub moments: Moments,
}

impl AggregateRow {
    fn to_row(&self) -> Vec<String> {
        let m = &self.moments;
        let mut row = self.key.clone();
        row.extend([
            self.metric.clone(),
            self.iter.to_string(),
            m.count.to_string(),
            fmt_f64(m.mean),
            fmt_f64(m.std),
            fmt_f64(m.lower),
            fmt_f64(m.upper),
        ]);
        row
    }
}

fn metric(r: &IterationRecord, name: &str) -> f64 {
    match name {
        "train_err" => r.train_err,
        "test_err" => r.test_err,
        "train_data_err" => r.train_data_err,
        "test_data_err" => r.test_data_err,
        "ess" => r.ess,
        _ => unreachable!("unknown metric {name}"),
    }
}

fn aggregate_group(key: &[String], runs: &[Vec<IterationRecord>]) -> Vec<AggregateRow> {
    let mut rows = Vec::new();
    for name in AGGREGATED_METRICS {
        let series: Vec<Vec<f64>> = runs
            .iter()
            .map(|r| r.iter().map(|x| metric(x, name)).collect())
            .collect();
        let iters = runs
            .first()
            .map(|r| r.iter().map(|x| x.iter).collect::<Vec<_>>())
            .unwrap_or_default();
        for (m, iter) in pointwise(&series).into_iter().zip(iters) {
            rows.push(AggregateRow {
                key: key.to_vec(),
                metric: name.into(),
                iter,
                moments: m,
            });
        }
    }
    rows
}

/// The grid of groups in output order: K, then batch, γ, initial spread and
/// variant.
pub fn run_groups(config: &ExperimentConfig) -> Vec<RunGroup> {
    let mut groups = Vec::new();
    for (i, &k) in config.ks.iter().enumerate() {
        for batch in &config.batches {
            for &gamma in &config.gammas {
                for &init_std in &config.init_stds {
                    for &variant in &config.variants {
                        groups.push(RunGroup {
                            variant,
                            k,
                            step: config.deltas[i],
                            batch_size: batch.resolve(config.data_size(k)),
                            gamma,
                            init_std,
                        });
                    }
                }
            }
        }
    }
    groups
}

struct RunResult {
    trace: TrainTrace,
    output_std: f64,
}

fn run_one(config: &ExperimentConfig, group: &RunGroup, realization: u64) -> Result<RunResult> {
    let spec = config.target_spec()?;
    let (train, test) = realization_data(
        &spec,
        config.data_size(group.k),
        config.test_points,
        config.seed,
        realization,
    )?;
    let dim = config.activation.frequency_dim(train.dim());
    let initial = initial_frequencies(group.k, dim, group.init_std, config.seed, realization);
    let arff = config.arff_config(group.variant, group.step, group.gamma, group.batch_size);
    let options = TrainOptions {
        realization,
        snapshots: config.snapshots.clone(),
    };
    let trace = train_with(&arff, &train, &initial, Some(&test), &options)?;
    log::info!(
        "{} r{realization}: min train {:e}",
        group.tag(),
        trace.summary().min_train_err
    );
    let output_std = train.stats.as_ref().map_or(1.0, |s| s.output_std[0]);
    Ok(RunResult { trace, output_std })
}

fn run_dir(tag: &str) -> PathBuf {
    PathBuf::from("runs").join(tag)
}

/// Tests 1–5: every group × realization, then per-run, aggregate and
/// convergence tables.
pub(crate) fn run_sampler_experiment(config: &ExperimentConfig, files: &mut Files) -> Result<()> {
    let groups = run_groups(config);
    let jobs: Vec<(usize, u64)> = (0..groups.len())
        .flat_map(|g| (0..config.realizations as u64).map(move |r| (g, r)))
        .collect();
    let results: Vec<RunResult> = jobs
        .par_iter()
        .map(|&(g, r)| run_one(config, &groups[g], r))
        .collect::<Result<_>>()?;
    let spec = config.target_spec()?;
    let l1 = fourier_l1_norm(&spec, 1e-3)?.value;

    let mut index = Vec::new();
    let mut minima = Vec::new();
    let mut aggregate = Vec::new();
    let mut convergence = Vec::new();
    for (g, group) in groups.iter().enumerate() {
        let tag = group.tag();
        let runs: Vec<(&(usize, u64), &RunResult)> = jobs
            .iter()
            .zip(&results)
            .filter(|(j, _)| j.0 == g)
            .collect();
        let mut summaries = Vec::new();
        for &(&(_, r), result) in &runs {
            let trace_rel = run_dir(&tag).join(format!("r{r:03}.csv"));
            result.trace.write_csv(&files.path(&trace_rel))?;
            let summary = result.trace.summary();
            write_json(
                &files.path(run_dir(&tag).join(format!("r{r:03}.json"))),
                &summary,
            )?;
            ModelFile::shallow(
                config.activation,
                &result.trace.freqs,
                &result.trace.amplitudes,
                None,
            )
            .save(
                &files.path(
                    PathBuf::from("models")
                        .join(&tag)
                        .join(format!("r{r:03}.json")),
                ),
            )?;
            result.trace.write_timing_csv(
                &files.timing_path(
                    PathBuf::from("timing")
                        .join(&tag)
                        .join(format!("r{r:03}.csv")),
                ),
            )?;
            write_kdes(config, &spec, &tag, r, &result.trace, files)?;
            index.push(vec![
                tag.clone(),
                group.variant.to_string(),
                group.k.to_string(),
                fmt_f64(group.step),
                group.batch_size.to_string(),
                fmt_f64(group.gamma),
                fmt_f64(group.init_std),
                r.to_string(),
                trace_rel.to_string_lossy().into_owned(),
            ]);
            let mut row = group.key_fields();
            row.extend([
                r.to_string(),
                fmt_f64(summary.min_train_err),
                summary.argmin_train_err.to_string(),
                fmt_f64(summary.min_test_err),
                fmt_f64(summary.min_train_data_err),
                summary.argmin_train_data_err.to_string(),
                fmt_f64(summary.min_test_data_err),
                fmt_f64(summary.final_train_err),
                fmt_f64(
                    result
                        .trace
                        .records
                        .last()
                        .map_or(f64::NAN, |x| x.train_data_err),
                ),
                fmt_f64(summary.final_ess),
                summary.total_solves.to_string(),
                summary.final_state_sha256.clone(),
            ]);
            minima.push(row);
            summaries.push(summary);
        }
        let records: Vec<Vec<IterationRecord>> = runs
            .iter()
            .map(|(_, res)| res.trace.records.clone())
            .collect();
        aggregate.extend(aggregate_group(&group.key_fields(), &records));
        let output_std = runs.first().map_or(1.0, |(_, res)| res.output_std);
        let bound = error_bound(l1, spec.dim(), group.k, config.lambda) / (output_std * output_std);
        let columns: [(&str, Vec<f64>); 4] = [
            (
                "min_train_err",
                summaries.iter().map(|s| s.min_train_err).collect(),
            ),
            (
                "min_test_err",
                summaries.iter().map(|s| s.min_test_err).collect(),
            ),
            (
                "min_train_data_err",
                summaries.iter().map(|s| s.min_train_data_err).collect(),
            ),
            (
                "min_test_data_err",
                summaries.iter().map(|s| s.min_test_data_err).collect(),
            ),
        ];
        for (name, values) in columns {
            let m = moments(&values);
            let mut row = group.key_fields();
            row.extend([
                name.to_string(),
                m.count.to_string(),
                fmt_f64(m.mean),
                fmt_f64(m.std),
                fmt_f64(m.lower),
                fmt_f64(m.upper),
                fmt_f64(bound),
            ]);
            convergence.push(row);
        }
    }
    write_csv(&files.path("index.csv"), &INDEX_COLUMNS, index)?;
    write_csv(&files.path("minima.csv"), &MINIMA_COLUMNS, minima)?;
    write_aggregate(&files.path("aggregate.csv"), &aggregate)?;
    write_csv(
        &files.path("convergence.csv"),
        &CONVERGENCE_COLUMNS,
        convergence,
    )?;
    Ok(())
}

/// Marginal KDEs of `[B⁻¹ω]_j` for every snapshot and configured axis.
fn write_kdes(
    config: &ExperimentConfig,
    spec: &crate::targets::TargetSpec,
    tag: &str,
    realization: u64,
    trace: &TrainTrace,
    files: &mut Files,
) -> Result<()> {
    for snap in &trace.snapshots {
        let rotated = super::projected_frequencies(spec, &snap.freqs)?;
        for &axis in &config.kde_axes {
            let samples: Vec<f64> = rotated.iter().map(|w| w[axis]).collect();
            let e = kde(&samples, None, None)?;
            let p_star = optimal_marginal(spec, axis, &e.grid)?;
            let rel = PathBuf::from("kde").join(tag).join(format!(
                "r{realization:03}_it{:05}_axis{axis}.csv",
                snap.iter
            ));
            write_csv(
                &files.path(rel),
                &["omega", "density", "p_star"],
                e.grid
                    .iter()
                    .zip(&e.density)
                    .zip(&p_star)
                    .map(|((x, d), p)| vec![fmt_f64(*x), fmt_f64(*d), fmt_f64(*p)]),
            )?;
        }
    }
    Ok(())
}

/// Rebuilds `aggregate.csv` rows from `index.csv` and the per-run traces.
pub fn recompute_aggregate(dir: &Path) -> Result<Vec<AggregateRow>> {
    let (header, rows) = read_csv(&dir.join("index.csv"))?;
    if header != INDEX_COLUMNS {
        return Err(Error::Format(format!(
            "{}: unexpected index header",
            dir.display()
        )));
    }
    let mut groups: Vec<(Vec<String>, Vec<Vec<IterationRecord>>)> = Vec::new();
    for row in rows {
        if row.len() != INDEX_COLUMNS.len() {
            return Err(Error::Format("short index row".into()));
        }
        let key = vec![
            row[0].clone(),
            row[1].clone(),
            row[2].clone(),
            row[4].clone(),
            row[5].clone(),
            row[6].clone(),
        ];
        let records = read_trace_csv(&dir.join(&row[8]))?;
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, runs)) => runs.push(records),
            None => groups.push((key, vec![records])),
        }
    }
    Ok(groups
        .iter()
        .flat_map(|(key, runs)| aggregate_group(key, runs))
        .collect())
}

pub fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    write_csv(
        path,
        &AGGREGATE_COLUMNS,
        rows.iter().map(AggregateRow::to_row),
    )
}

/// Largest absolute difference between the statistics of two aggregate
/// tables; an error if their keys, metrics, iterations or counts differ.
pub fn aggregate_deviation(a: &[AggregateRow], b: &[AggregateRow]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Format(format!(
            "aggregate tables have {} and {} rows",
            a.len(),
            b.len()
        )));
    }
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        if x.key != y.key || x.metric != y.metric || x.iter != y.iter {
            return Err(Error::Format(format!(
                "aggregate rows differ: {:?}/{}/{} vs {:?}/{}/{}",
                x.key, x.metric, x.iter, y.key, y.metric, y.iter
            )));
        }
        if x.moments.count != y.moments.count {
            return Err(Error::Format(format!(
                "counts differ for {:?} {} at {}",
                x.key, x.metric, x.iter
            )));
        }
        let (p, q) = (&x.moments, &y.moments);
        for (u, v) in [
            (p.mean, q.mean),
            (p.std, q.std),
            (p.lower, q.lower),
            (p.upper, q.upper),
        ] {
            match (u.is_nan(), v.is_nan()) {
                (true, true) => {}
                (false, false) if u == v => {}
                (false, false) => worst = worst.max((u - v).abs()),
                _ => worst = f64::INFINITY,
            }
        }
    }
    Ok(worst)
}

/// Parses `aggregate.csv` back into rows.
pub fn read_aggregate(path: &Path) -> Result<Vec<AggregateRow>> {
    let (header, rows) = read_csv(path)?;
    if header != AGGREGATE_COLUMNS {
        return Err(Error::Format(format!(
            "{}: unexpected aggregate header",
            path.display()
        )));
    }
    rows.into_iter()
        .map(|r| {
            let bad = || Error::Format(format!("bad aggregate row {r:?}"));
            if r.len() != AGGREGATE_COLUMNS.len() {
                return Err(bad());
            }
            let f = |i: usize| r[i].parse::<f64>().map_err(|_| bad());
            Ok(AggregateRow {
                key: r[..6].to_vec(),
                metric: r[6].clone(),
                iter: r[7].parse().map_err(|_| bad())?,
                moments: Moments {
                    count: r[8].parse().map_err(|_| bad())?,
                    mean: f(9)?,
                    std: f(10)?,
                    lower: f(11)?,
                    upper: f(12)?,
                },
            })
        })
        .collect()
}
