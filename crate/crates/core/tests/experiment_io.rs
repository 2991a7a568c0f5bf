mod common;

use std::path::Path;

use arff_core::experiment::image::{crop_center, split_parity, synthetic_image, RgbImage};
use arff_core::experiment::{
    aggregate_deviation, kde, read_aggregate, recompute_aggregate, run_experiment,
    ExperimentConfig, ExperimentKind, Manifest, ModelFile,
};
use arff_core::io::{read_csv, write_csv};
use arff_core::lsq::{Activation, AmplitudeVector};
use arff_core::arff::FrequencySet;
use arff_core::targets::{generate_dataset, normalize, Dataset, TargetSpec};
use common::*;
use ndarray::Array3;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

fn tiny(kind: &str, extra: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(&format!(
        "kind = \"{kind}\"\nseed = 5\nks = [4]\niterations = 12\ntest_points = 64\n{extra}"
    ))
    .unwrap()
}

fn manifest(dir: &Path) -> Manifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn one_realization_has_zero_spread() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&tiny("test2_fulldata", "realizations = 1"), dir.path()).unwrap();
    let rows = read_aggregate(&dir.path().join("aggregate.csv")).unwrap();
    assert!(!rows.is_empty());
    for r in &rows {
        assert_eq!(r.moments.count, 1);
        assert_eq!(r.moments.std, 0.0, "{} at {}", r.metric, r.iter);
    }
}

#[test]
fn aggregates_are_recomputable_from_raw_traces() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_experiment(&tiny("test1_stats", "realizations = 3"), dir.path()).unwrap();
    assert_eq!(m.kind, ExperimentKind::Test1Stats);
    let stored = read_aggregate(&dir.path().join("aggregate.csv")).unwrap();
    let fresh = recompute_aggregate(dir.path()).unwrap();
    assert!(aggregate_deviation(&stored, &fresh).unwrap() <= 1e-12);
    assert!(stored.iter().any(|r| r.moments.count == 3 && r.moments.std > 0.0));

    let written = manifest(dir.path());
    assert_eq!(written.config, m.config);
    for f in &written.files {
        assert!(dir.path().join(f).is_file(), "{}", f.display());
    }
    for f in &written.nondeterministic {
        assert!(f.starts_with("timing"), "{}", f.display());
    }
}

#[test]
fn kde_of_normal_samples() {
    let mut r = rng(31);
    let samples: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut r)).collect();
    let grid: Vec<f64> = (0..81).map(|i| -4.0 + 0.1 * i as f64).collect();
    let est = kde(&samples, Some(&grid), None).unwrap();
    for (x, d) in grid.iter().zip(&est.density) {
        let pdf = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        assert!((d - pdf).abs() <= 0.02, "{x}: {d} vs {pdf}");
    }
    let auto = kde(&samples, None, None).unwrap();
    let mass = auto.mass();
    assert!((0.95..=1.0 + 1e-9).contains(&mass), "{mass}");
}

#[test]
fn parity_split_is_disjoint() {
    let pixels = Array3::from_shape_fn((4, 4, 3), |(r, c, ch)| (r * 4 + c) as f64 / 16.0 + ch as f64 * 0.01);
    let data = split_parity(&RgbImage { pixels }).unwrap();
    assert_eq!(data.train.len(), 4);
    assert_eq!(data.test.len(), 4);
    for a in data.train.inputs.rows() {
        for b in data.test.inputs.rows() {
            assert_ne!(a, b);
        }
    }

    let big = crop_center(&synthetic_image(600), 512).unwrap();
    let data = split_parity(&big).unwrap();
    assert_eq!(data.train.len(), 65_536);
    assert_eq!(data.test.len(), 65_536);
    assert_eq!(data.train.inputs.ncols(), 2);
    assert_eq!(data.train.outputs.ncols(), 3);
}

#[test]
fn datasets_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = TargetSpec::axis_aligned(2, 0.1).unwrap();
    let (data, _) = normalize(&generate_dataset(50, &spec, 7).unwrap()).unwrap();
    for name in ["d.csv", "d.bin"] {
        let p = dir.path().join(name);
        let back = if name.ends_with(".csv") {
            data.write_csv(&p).unwrap();
            Dataset::read_csv(&p).unwrap()
        } else {
            data.write_binary(&p).unwrap();
            Dataset::read_binary(&p).unwrap()
        };
        assert_eq!(back.inputs, data.inputs, "{name}");
        assert_eq!(back.outputs, data.outputs, "{name}");
    }
}

#[test]
fn csv_and_model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    let values = [0.1, -2.5e-17, 1e300, f64::MIN_POSITIVE];
    write_csv(&p, &["i", "v"], values.iter().enumerate().map(|(i, v)| vec![i.to_string(), arff_core::io::fmt_f64(*v)])).unwrap();
    let (header, rows) = read_csv(&p).unwrap();
    assert_eq!(header, ["i", "v"]);
    for (row, v) in rows.iter().zip(values) {
        assert_eq!(row[1].parse::<f64>().unwrap(), v);
    }

    let mut r = rng(32);
    let freqs = FrequencySet::new(normal_matrix(6, 3, 1.0, &mut r)).unwrap();
    let a = AmplitudeVector::Real(normal_matrix(6, 1, 1.0, &mut r));
    let file = ModelFile::shallow(Activation::CosineBias, &freqs, &a, None);
    let mp = dir.path().join("m.json");
    file.save(&mp).unwrap();
    let back = ModelFile::load(&mp).unwrap();
    assert_eq!(
        serde_json::to_string(&back).unwrap(),
        serde_json::to_string(&file).unwrap()
    );
}

#[test]
fn configs_reject_bad_values() {
    assert!(ExperimentConfig::from_toml_str("kind = \"nope\"").is_err());
    assert!(ExperimentConfig::from_toml_str("kind = \"test2_fulldata\"\nbogus = 1").is_err());
    assert!(ExperimentConfig::from_toml_str("kind = \"test2_fulldata\"\nks = [4, 8]\ndeltas = [0.1]").is_err());
    let c = tiny("test2_fulldata", "");
    assert_eq!(c.deltas.len(), 1);
    let again = ExperimentConfig::from_toml_str(&c.to_toml()).unwrap();
    assert_eq!(again, c);
}
