use std::time::Instant;

use ndarray::Array2;

use super::sampler::{
    draw_steps, effective_sample_size, metropolis_accept, perturb, probability_mass, resample,
    sample_batch, take_accepted,
};
use super::trace::{IterationRecord, Snapshot, TrainTrace};
use super::{ArffConfig, FrequencySet};
use crate::error::{Error, Result};
use crate::lsq::{assemble_design, AmplitudeVector, AssembledBatch, NormalSystem};
use crate::rng::{Purpose, Streams};
use crate::targets::Dataset;

/// Run-level settings that are not hyperparameters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainOptions {
    /// Realization index; selects independent random streams for the same seed.
    pub realization: u64,
    /// Iterations after which to record the frequencies (0 = initial).
    pub snapshots: Vec<usize>,
}

/// Runs the sampler with default options.
pub fn train(
    config: &ArffConfig,
    data: &Dataset,
    initial: &FrequencySet,
    test: Option<&Dataset>,
) -> Result<TrainTrace> {
    train_with(config, data, initial, test, &TrainOptions::default())
}

/// The sampler loop: an initial batch and solve, then for each iteration a fresh
/// batch, resampling when `K_ESS ≤ R(n) K` (re-solving only if `A(n)`), a
/// Metropolis sweep if `A(n)` or a random-walk step otherwise, and a final
/// solve.
pub fn train_with(
    config: &ArffConfig,
    data: &Dataset,
    initial: &FrequencySet,
    test: Option<&Dataset>,
    options: &TrainOptions,
) -> Result<TrainTrace> {
    let k = initial.count();
    config.validate(k, data.len())?;
    let act = config.activation;
    let expected = act.frequency_dim(data.dim());
    if initial.dim() != expected {
        return Err(Error::DimensionMismatch {
            what: "initial frequency dimension",
            expected,
            found: initial.dim(),
        });
    }
    if let Some(t) = test {
        if t.dim() != data.dim() || t.channels() != data.channels() {
            return Err(Error::DimensionMismatch {
                what: "test data columns",
                expected: data.dim() + data.channels(),
                found: t.dim() + t.channels(),
            });
        }
    }

    let streams = Streams::new(config.seed, options.realization);
    let mut batch_rng = streams.rng(Purpose::Batch);
    let mut proposal_rng = streams.rng(Purpose::Proposal);
    let mut acceptance_rng = streams.rng(Purpose::Acceptance);
    let mut resampling_rng = streams.rng(Purpose::Resampling);

    let m = data.len();
    let full = config.batch_size == m;
    let lambda = config.lambda;
    let start = Instant::now();

    let mut freqs = initial.clone();
    let mut snapshots = Vec::new();
    if options.snapshots.contains(&0) {
        snapshots.push(Snapshot {
            iter: 0,
            freqs: freqs.clone(),
        });
    }
    let (mut points, mut targets) =
        batch(data, &sample_batch(m, config.batch_size, &mut batch_rng)?);
    let mut current = AssembledBatch::new(&freqs, points.view(), targets.view(), act)?;
    let initial_system = current.system();
    let mut a = initial_system.solve(lambda)?;
    let (initial_train_err, initial_train_data_err) = initial_system.metrics(&a)?;

    let mut records = Vec::with_capacity(config.iterations);
    for n in 1..=config.iterations {
        let mut solves = 0;
        let mass = probability_mass(&a);
        let indices = sample_batch(m, config.batch_size, &mut batch_rng)?;
        // With M_B = M every batch is the whole data set in the same order, so
        // the previous end-of-iteration system remains valid.
        let mut known = if full {
            Some(current)
        } else {
            (points, targets) = batch(data, &indices);
            None
        };
        let ess = effective_sample_size(&mass);
        let metropolis = config.metropolis.at(n);
        let resampled = ess <= config.resample.at(n) * k as f64;
        if resampled {
            let (picked, source) = resample(&freqs, &mass, &mut resampling_rng)?;
            freqs = picked;
            known = known.filter(|_| metropolis).map(|b| b.select(&source));
            if metropolis {
                let system = match known {
                    Some(b) => b,
                    None => AssembledBatch::new(&freqs, points.view(), targets.view(), act)?,
                };
                a = system.system().solve(lambda)?;
                solves += 1;
                known = Some(system);
            }
        }

        let steps = draw_steps(k, freqs.dim(), &mut proposal_rng);
        let mut accepts = 0;
        let end = if metropolis {
            let proposal = perturb(&freqs, &steps, config.step)?;
            let proposed = AssembledBatch::new(&proposal, points.view(), targets.view(), act)?;
            let a_new = proposed.system().solve(lambda)?;
            solves += 1;
            let accepted = metropolis_accept(
                &a_new.norms(),
                &a.norms(),
                config.gamma,
                &mut acceptance_rng,
            );
            accepts = accepted.iter().filter(|&&x| x).count();
            let merged =
                AssembledBatch::merge(&proposed, &accepted, known.as_ref(), &freqs, points.view())?;
            freqs = take_accepted(&freqs, &proposal, &accepted);
            merged
        } else {
            freqs = perturb(&freqs, &steps, config.step)?;
            AssembledBatch::new(&freqs, points.view(), targets.view(), act)?
        };
        let system = end.system();
        a = system.solve(lambda)?;
        solves += 1;
        let (train_err, train_data_err) = system.metrics(&a)?;
        let (test_err, test_data_err) = match test {
            Some(t) => test_metrics(&freqs, &a, t, config)?,
            None => (f64::NAN, f64::NAN),
        };
        current = end;

        records.push(IterationRecord {
            iter: n,
            train_err,
            test_err,
            ess,
            resampled,
            accepts,
            solves,
            train_data_err,
            test_data_err,
            degenerate: mass.is_degenerate(),
            elapsed: start.elapsed().as_secs_f64(),
        });
        if options.snapshots.contains(&n) {
            snapshots.push(Snapshot {
                iter: n,
                freqs: freqs.clone(),
            });
        }
        if n % 100 == 0 {
            log::debug!("iteration {n}: train {train_err:e}, ess {ess:.1}");
        }
    }

    Ok(TrainTrace {
        records,
        freqs,
        amplitudes: a,
        snapshots,
        initial_train_err,
        initial_train_data_err,
    })
}

fn batch(data: &Dataset, indices: &[usize]) -> (Array2<f64>, Array2<f64>) {
    data.select(indices)
}

/// Both residual metrics of the current network on held-out data.
pub fn test_metrics(
    freqs: &FrequencySet,
    a: &AmplitudeVector,
    test: &Dataset,
    config: &ArffConfig,
) -> Result<(f64, f64)> {
    let design = assemble_design(freqs, test.inputs.view(), config.activation)?;
    NormalSystem::assemble(&design, test.outputs.view())?.metrics(a)
}
