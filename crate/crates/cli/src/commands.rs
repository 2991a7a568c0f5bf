use std::path::Path;

use arff_core::arff::{train_with, ArffConfig, Schedule, TrainOptions, Variant};
use arff_core::experiment::{
    aggregate_deviation, initial_frequencies, kde as estimate, projected_frequencies,
    read_aggregate, realization_data, recompute_aggregate, run_experiment, write_aggregate,
    ExperimentConfig, ModelBody, ModelFile,
};
use arff_core::io::{csv_bytes, fmt_f64, read_csv, write_atomic, write_json};
use arff_core::lsq::Activation;
use arff_core::rng::{Purpose, Streams};
use arff_core::targets::{
    generate_dataset_with, normalize, normalize_with, optimal_marginal, Dataset, TargetSpec,
    DEFAULT_ALPHA,
};

use crate::overrides::{batch_value, Overrides};
use crate::{
    CliResult, ExperimentArgs, Failure, GenDataArgs, ImageArgs, KdeArgs, PretrainArgs,
    RotationArg, StatsArgs, SweepArgs, TargetArgs, TrainArgs,
};

const AGGREGATE_TOLERANCE: f64 = 1e-12;

fn invalid(m: impl Into<String>) -> Failure {
    Failure::Invalid(m.into())
}

fn target_spec(t: &TargetArgs) -> CliResult<TargetSpec> {
    let alpha = t.alpha.unwrap_or(DEFAULT_ALPHA);
    Ok(match t.rotation {
        RotationArg::Paper => TargetSpec::rotated_4d(alpha)?,
        RotationArg::Identity => TargetSpec::axis_aligned(4, alpha)?,
    })
}

fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let csv = path.extension().is_some_and(|e| e == "csv");
    Ok(if csv {
        Dataset::read_csv(path)?
    } else {
        Dataset::read_binary(path)?
    })
}

fn write_dataset(data: &Dataset, path: &Path) -> CliResult {
    if path.extension().is_some_and(|e| e == "csv") {
        data.write_csv(path)?;
    } else {
        data.write_binary(path)?;
    }
    Ok(())
}

pub fn gen_data(a: &GenDataArgs) -> CliResult {
    let spec = target_spec(&a.target)?;
    let mut rng = Streams::new(a.seed, a.realization).rng(Purpose::TrainData);
    let mut data = generate_dataset_with(a.points, &spec, &mut rng)?;
    if a.normalize {
        data = normalize(&data)?.0;
    }
    write_dataset(&data, &a.out)?;
    log::info!("wrote {} points to {}", data.len(), a.out.display());
    Ok(())
}

fn training_data(a: &TrainArgs) -> CliResult<(Dataset, Option<Dataset>)> {
    let Some(path) = &a.data else {
        let spec = target_spec(&a.target)?;
        let m = a.points.unwrap_or(a.k * a.k);
        let (train, test) = realization_data(&spec, m, a.test_points, a.seed, 0)?;
        return Ok((train, Some(test)));
    };
    let raw = read_dataset(path)?;
    let (train, stats) = match raw.stats.clone() {
        Some(stats) => (raw, stats),
        None => normalize(&raw)?,
    };
    let test = match &a.test {
        Some(p) => {
            let t = read_dataset(p)?;
            Some(if t.stats.is_some() { t } else { normalize_with(&t, &stats)? })
        }
        None => None,
    };
    Ok((train, test))
}

pub fn train(a: &TrainArgs) -> CliResult {
    let variant = Variant::parse(&a.variant)
        .ok_or_else(|| invalid(format!("unknown variant {:?}", a.variant)))?;
    let (train, test) = training_data(a)?;
    let activation = Activation::from(a.activation);
    let mut config = ArffConfig::for_variant(variant);
    config.iterations = a.iterations;
    config.step = a.step;
    config.gamma = a.gamma;
    config.batch_size = a.batch_size.unwrap_or(train.len());
    config.lambda = a.lambda;
    config.activation = activation;
    config.seed = a.seed;
    if let Some(r) = a.resample {
        config.resample = Schedule::Constant(r);
    }
    if let Some(m) = a.metropolis {
        config.metropolis = Schedule::Constant(m);
    }
    let dim = activation.frequency_dim(train.dim());
    if !(a.init_std >= 0.0 && a.init_std.is_finite()) {
        return Err(invalid("--init-std must be finite and nonnegative"));
    }
    let initial = initial_frequencies(a.k, dim, a.init_std, a.seed, 0);
    let trace = train_with(
        &config,
        &train,
        &initial,
        test.as_ref(),
        &TrainOptions::default(),
    )?;
    let out = &a.out;
    std::fs::create_dir_all(out).map_err(|e| Failure::Runtime(e.to_string()))?;
    trace.write_csv(&out.join("trace.csv"))?;
    trace.write_timing_csv(&out.join("timing.csv"))?;
    let summary = trace.summary();
    write_json(&out.join("summary.json"), &summary)?;
    write_json(&out.join("config.json"), &config)?;
    ModelFile::shallow(activation, &trace.freqs, &trace.amplitudes, train.stats.clone())
        .save(&out.join("model.json"))?;
    log::info!(
        "{} iterations: min train error {:.4e} (data {:.4e}), final ESS {:.1}",
        summary.iterations,
        summary.min_train_err,
        summary.min_train_data_err,
        summary.final_ess
    );
    Ok(())
}

fn run(config: &ExperimentConfig, common: &ExperimentArgs) -> CliResult {
    if common.dry_run {
        print!("{}", config.to_toml());
        return Ok(());
    }
    let out = common.out.as_ref().ok_or_else(|| invalid("--out is required"))?;
    let manifest = run_experiment(config, out)?;
    log::info!(
        "{}: wrote {} files to {}",
        config.kind.name(),
        manifest.files.len() + 1,
        out.display()
    );
    Ok(())
}

pub fn sweep(a: &SweepArgs) -> CliResult {
    let mut o = Overrides::new(&a.common, a.kind.as_deref())?;
    if a.ks.is_some() && a.deltas.is_none() && o.has("deltas") {
        o.remove("deltas");
    }
    o.set_list("ks", &a.ks.as_ref().map(|v| v.iter().map(|&k| k as i64).collect()))?;
    o.set_list("deltas", &a.deltas)?;
    o.set_list("variants", &a.variants)?;
    o.set_list("gammas", &a.gammas)?;
    if let Some(b) = &a.batches {
        let values = b.iter().map(|s| batch_value(s)).collect::<CliResult<Vec<_>>>()?;
        o.set("batches", toml::Value::Array(values))?;
    }
    o.set_list("init_stds", &a.init_stds)?;
    o.set_opt("iterations", a.iterations.map(|n| n as i64))?;
    o.set_opt("lambda", a.lambda)?;
    o.set_opt("train_points", a.train_points.map(|n| n as i64))?;
    o.set_opt("test_points", a.test_points.map(|n| n as i64))?;
    o.set_opt("alpha", a.alpha)?;
    o.set_opt("rotation", a.rotation.map(|r| r.name()))?;
    o.set_opt("activation", a.activation.map(|x| x.name()))?;
    o.set_list(
        "snapshots",
        &a.snapshots.as_ref().map(|v| v.iter().map(|&n| n as i64).collect()),
    )?;
    o.set_list(
        "kde_axes",
        &a.kde_axes.as_ref().map(|v| v.iter().map(|&n| n as i64).collect()),
    )?;
    o.assign(&a.common.set)?;
    run(&o.resolve()?, &a.common)
}

pub fn pretrain(a: &PretrainArgs) -> CliResult {
    let mut o = Overrides::new(&a.common, Some("test6_pretrain"))?;
    o.set_opt("pretrain.k", a.k.map(|n| n as i64))?;
    o.set_opt("pretrain.epochs", a.epochs.map(|n| n as i64))?;
    o.set_opt("pretrain.learning_rate", a.learning_rate)?;
    o.set_opt(
        "pretrain.pretrain_iterations",
        a.pretrain_iterations.map(|n| n as i64),
    )?;
    o.set_opt("pretrain.arff_iterations", a.arff_iterations.map(|n| n as i64))?;
    if a.freeze_first_layer {
        o.set("pretrain.freeze_first_layer", true)?;
    }
    o.assign(&a.common.set)?;
    run(&o.resolve()?, &a.common)
}

pub fn image(a: &ImageArgs) -> CliResult {
    let mut o = Overrides::new(&a.common, Some("image_pipeline"))?;
    if !a.images.is_empty() {
        let paths: Vec<String> = a
            .images
            .iter()
            .map(|p| p.to_string_lossy().into_owned())
            .collect();
        o.set_list("image.paths", &Some(paths))?;
    }
    o.set_opt("image.crop", a.crop.map(|n| n as i64))?;
    o.set_opt("image.synthetic_size", a.synthetic_size.map(|n| n as i64))?;
    o.set_list(
        "image.approaches",
        &a.approaches.as_ref().map(|v| v.iter().map(|&n| n as i64).collect()),
    )?;
    o.set_opt("image.epochs", a.epochs.map(|n| n as i64))?;
    o.set_opt("image.width", a.width.map(|n| n as i64))?;
    if a.no_render {
        o.set("image.render", false)?;
    }
    o.assign(&a.common.set)?;
    run(&o.resolve()?, &a.common)
}

pub fn stats(a: &StatsArgs) -> CliResult {
    let rows = recompute_aggregate(&a.dir)?;
    if let Some(out) = &a.out {
        write_aggregate(out, &rows)?;
    }
    if a.check {
        let stored = read_aggregate(&a.dir.join("aggregate.csv"))?;
        let dev = aggregate_deviation(&rows, &stored)?;
        if dev > AGGREGATE_TOLERANCE {
            return Err(Failure::Runtime(format!(
                "aggregate.csv deviates from the traces by {dev:e}"
            )));
        }
        println!("aggregate.csv matches {} rows (max deviation {dev:e})", rows.len());
    } else if a.out.is_none() {
        println!("{} aggregate rows", rows.len());
    }
    Ok(())
}

fn column_samples(path: &Path, column: &str) -> CliResult<Vec<f64>> {
    let (header, rows) = read_csv(path)?;
    let i = header
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| invalid(format!("{}: no column {column:?}", path.display())))?;
    rows.iter()
        .map(|r| {
            r.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Failure::Runtime(format!("{}: bad value in {column}", path.display())))
        })
        .collect()
}

pub fn kde(a: &KdeArgs) -> CliResult {
    let spec = target_spec(&a.target)?;
    let (samples, with_target) = match (&a.source.model, &a.source.samples) {
        (Some(path), _) => {
            let ModelBody::Shallow { frequencies, .. } = ModelFile::load(path)?.body else {
                return Err(invalid("density estimates need a shallow model"));
            };
            if a.axis >= spec.dim() {
                return Err(invalid(format!("axis {} out of range", a.axis)));
            }
            let projected = projected_frequencies(&spec, &frequencies)?;
            (projected.iter().map(|w| w[a.axis]).collect(), true)
        }
        (None, Some(path)) => {
            let column = a.column.as_deref().ok_or_else(|| invalid("--samples needs --column"))?;
            (column_samples(path, column)?, false)
        }
        (None, None) => return Err(invalid("give --model or --samples")),
    };
    let grid = match a.grid.as_deref() {
        Some(&[lo, hi, n]) => {
            if !(hi > lo) || n < 2.0 || n.fract() != 0.0 {
                return Err(invalid("--grid needs min < max and an integer count ≥ 2"));
            }
            let n = n as usize;
            Some(
                (0..n)
                    .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                    .collect::<Vec<_>>(),
            )
        }
        Some(_) => return Err(invalid("--grid takes min,max,points")),
        None => None,
    };
    let mut e = estimate(&samples, grid.as_deref(), a.bandwidth)?;
    let rows: Vec<Vec<String>> = if with_target {
        e.axis = Some(a.axis);
        let p = optimal_marginal(&spec, a.axis, &e.grid)?;
        e.grid
            .iter()
            .zip(&e.density)
            .zip(&p)
            .map(|((x, d), p)| vec![fmt_f64(*x), fmt_f64(*d), fmt_f64(*p)])
            .collect()
    } else {
        e.grid
            .iter()
            .zip(&e.density)
            .map(|(x, d)| vec![fmt_f64(*x), fmt_f64(*d)])
            .collect()
    };
    let header: &[&str] = if with_target {
        &["omega", "density", "p_star"]
    } else {
        &["omega", "density"]
    };
    let bytes = csv_bytes(header, rows)?;
    match &a.out {
        Some(p) => write_atomic(p, &bytes)?,
        None => print!("{}", String::from_utf8_lossy(&bytes)),
    }
    log::info!(
        "{} samples, bandwidth {:.4e}, grid mass {:.4}",
        samples.len(),
        e.bandwidth,
        e.mass()
    );
    Ok(())
}
