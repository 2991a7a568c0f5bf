mod common;

use arff_core::arff::{perturb, draw_steps, FrequencySet};
use arff_core::lsq::{
    assemble_design, data_residual_metric, residual_metric, solve_regularized, Activation,
    AmplitudeVector, AssembledBatch, LsqProblem, NormalSystem,
};
use common::*;
use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn scalar_complex_entry_matches_direct_evaluation() {
    let f = FrequencySet::new(array![[2.0]]).unwrap();
    let s = assemble_design(&f, array![[0.75]].view(), Activation::ComplexExp).unwrap();
    let e = s.entry(0, 0);
    assert!((e.re - 1.5f64.cos()).abs() < 1e-15);
    assert!((e.im - 1.5f64.sin()).abs() < 1e-15);
}

#[test]
fn fixed_instance_matches_dense_solve() {
    let mut r = rng(11);
    let inst = instance(8, 50, 4, 1, Activation::ComplexExp, &mut r);
    let design = assemble_design(&inst.freqs, inst.x.view(), inst.kind).unwrap();
    let a = solve_regularized(&LsqProblem::new(design, inst.y.clone(), 0.1).unwrap()).unwrap();
    let s = dense_design(&inst.freqs, inst.x.view(), inst.kind);
    let reference = dense_solve(&s, &to_dense(inst.y.view()), 0.1);
    assert!(relative_diff(&amplitudes_dense(&a), &reference) < 1e-10);
}

#[test]
fn metrics_match_their_formulas() {
    let mut r = rng(12);
    for kind in [Activation::ComplexExp, Activation::CosineBias] {
        let inst = instance(4, 20, 3, 1, kind, &mut r);
        let design = assemble_design(&inst.freqs, inst.x.view(), kind).unwrap();
        let a = match kind {
            Activation::ComplexExp => AmplitudeVector::Complex(Array2::from_shape_fn((4, 1), |(i, _)| {
                C::new(0.3 * i as f64 - 0.5, 0.1 + 0.2 * i as f64)
            })),
            Activation::CosineBias => {
                AmplitudeVector::Real(Array2::from_shape_fn((4, 1), |(i, _)| 0.7 - 0.4 * i as f64))
            }
        };
        let s = dense_design(&inst.freqs, inst.x.view(), kind);
        let (normal, data) = dense_metrics(&s, &to_dense(inst.y.view()), &amplitudes_dense(&a));
        let got = residual_metric(&design, &a, inst.y.view()).unwrap();
        let got_data = data_residual_metric(&design, &a, inst.y.view()).unwrap();
        assert!((got - normal).abs() <= 1e-12 * normal.max(1.0), "{got} vs {normal}");
        assert!((got_data - data).abs() <= 1e-12 * data.max(1.0), "{got_data} vs {data}");
    }
}

#[test]
fn rgb_targets_share_one_factorization() {
    let mut r = rng(13);
    let inst = instance(6, 40, 2, 3, Activation::CosineBias, &mut r);
    let design = assemble_design(&inst.freqs, inst.x.view(), inst.kind).unwrap();
    let a = NormalSystem::assemble(&design, inst.y.view()).unwrap().solve(1e-3).unwrap();
    let s = dense_design(&inst.freqs, inst.x.view(), inst.kind);
    let reference = dense_solve(&s, &to_dense(inst.y.view()), 1e-3);
    assert!(relative_diff(&amplitudes_dense(&a), &reference) < 1e-10);
    for c in 0..3 {
        let single = NormalSystem::assemble(&design, inst.y.slice(ndarray::s![.., c..c + 1]))
            .unwrap()
            .solve(1e-3)
            .unwrap();
        let (AmplitudeVector::Real(all), AmplitudeVector::Real(one)) = (&a, &single) else {
            panic!("cosine amplitudes are real");
        };
        for k in 0..6 {
            assert!((all[[k, c]] - one[[k, 0]]).abs() < 1e-12);
        }
    }
}

fn kind_strategy() -> impl Strategy<Value = Activation> {
    prop_oneof![Just(Activation::ComplexExp), Just(Activation::CosineBias)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_instances_match_dense_solve(
        seed in any::<u64>(),
        k in 1usize..24,
        extra in 1usize..120,
        lambda in prop_oneof![Just(0.0), Just(1e-3), Just(0.1), Just(10.0)],
        kind in kind_strategy(),
    ) {
        let mut r = rng(seed);
        let inst = instance(k, k + extra, 3, 1, kind, &mut r);
        let design = assemble_design(&inst.freqs, inst.x.view(), kind).unwrap();
        let a = solve_regularized(&LsqProblem::new(design, inst.y.clone(), lambda).unwrap()).unwrap();
        let s = dense_design(&inst.freqs, inst.x.view(), kind);
        let reference = dense_solve(&s, &to_dense(inst.y.view()), lambda);
        prop_assert!(relative_diff(&amplitudes_dense(&a), &reference) < 1e-10);
    }

    #[test]
    fn selected_batches_equal_fresh_assembly(
        seed in any::<u64>(),
        k in 1usize..12,
        kind in kind_strategy(),
    ) {
        let mut r = rng(seed);
        let inst = instance(k, 3 * k + 5, 2, 1, kind, &mut r);
        let batch = AssembledBatch::new(&inst.freqs, inst.x.view(), inst.y.view(), kind).unwrap();
        let source: Vec<usize> = (0..k).map(|_| r.random_range(0..k)).collect();
        let picked = FrequencySet::new(inst.freqs.vectors().select(ndarray::Axis(0), &source)).unwrap();
        let fresh = AssembledBatch::new(&picked, inst.x.view(), inst.y.view(), kind).unwrap();
        let a = batch.select(&source).system().solve(0.1).unwrap();
        let b = fresh.system().solve(0.1).unwrap();
        prop_assert!(relative_diff(&amplitudes_dense(&a), &amplitudes_dense(&b)) < 1e-12);
    }

    #[test]
    fn merged_batches_equal_fresh_assembly(
        seed in any::<u64>(),
        k in 1usize..12,
        kind in kind_strategy(),
        with_current in any::<bool>(),
    ) {
        let mut r = rng(seed);
        let inst = instance(k, 3 * k + 5, 2, 1, kind, &mut r);
        let steps = draw_steps(k, inst.freqs.dim(), &mut r);
        let proposal_freqs = perturb(&inst.freqs, &steps, 0.3).unwrap();
        let accepted: Vec<bool> = (0..k).map(|_| r.random()).collect();
        let mut merged_rows = inst.freqs.vectors().clone();
        for (i, &acc) in accepted.iter().enumerate() {
            if acc {
                merged_rows.row_mut(i).assign(&proposal_freqs.row(i));
            }
        }
        let merged_freqs = FrequencySet::new(merged_rows).unwrap();
        let proposal = AssembledBatch::new(&proposal_freqs, inst.x.view(), inst.y.view(), kind).unwrap();
        let current = AssembledBatch::new(&inst.freqs, inst.x.view(), inst.y.view(), kind).unwrap();
        let merged = AssembledBatch::merge(
            &proposal,
            &accepted,
            with_current.then_some(&current),
            &merged_freqs,
            inst.x.view(),
        )
        .unwrap();
        let fresh = AssembledBatch::new(&merged_freqs, inst.x.view(), inst.y.view(), kind).unwrap();
        let a = merged.system().solve(0.1).unwrap();
        let b = fresh.system().solve(0.1).unwrap();
        prop_assert!(relative_diff(&amplitudes_dense(&a), &amplitudes_dense(&b)) < 1e-12);
    }
}
