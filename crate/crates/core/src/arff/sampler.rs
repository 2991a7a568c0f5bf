use ndarray::{Array2, ArrayView2, Axis};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;

use super::FrequencySet;
use crate::error::{Error, Result};
use crate::lsq::{Activation, AmplitudeVector, NormalSystem};

/// Normalized amplitude magnitudes `p̌ = |a| / Σ|a|`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityMass {
    weights: Vec<f64>,
    degenerate: bool,
}

impl ProbabilityMass {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// True when every amplitude was zero and the mass fell back to uniform.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub fn probability_mass(a: &AmplitudeVector) -> ProbabilityMass {
    mass_from_norms(&a.norms())
}

pub fn mass_from_norms(norms: &[f64]) -> ProbabilityMass {
    let total: f64 = norms.iter().sum();
    if total > 0.0 && total.is_finite() {
        ProbabilityMass {
            weights: norms.iter().map(|n| n / total).collect(),
            degenerate: false,
        }
    } else {
        let k = norms.len();
        ProbabilityMass {
            weights: vec![1.0 / k as f64; k],
            degenerate: true,
        }
    }
}

/// `1 / Σ p̌²`, clamped to `[1, K]` against rounding at the extremes.
pub fn effective_sample_size(p: &ProbabilityMass) -> f64 {
    let sq: f64 = p.weights.iter().map(|w| w * w).sum();
    (1.0 / sq).clamp(1.0, p.weights.len() as f64)
}

/// Multinomial resampling: `K` independent draws of an index with PMF `p̌`.
/// Returns the new set and the source index of each slot.
pub fn resample<R: Rng + ?Sized>(
    freqs: &FrequencySet,
    p: &ProbabilityMass,
    rng: &mut R,
) -> Result<(FrequencySet, Vec<usize>)> {
    if p.len() != freqs.count() {
        return Err(Error::DimensionMismatch {
            what: "probability mass vs frequency count",
            expected: freqs.count(),
            found: p.len(),
        });
    }
    let dist = WeightedIndex::new(&p.weights)
        .map_err(|e| Error::Precondition(format!("invalid probability mass: {e}")))?;
    let source: Vec<usize> = (0..p.len()).map(|_| dist.sample(rng)).collect();
    let vectors = freqs.vectors().select(Axis(0), &source);
    Ok((FrequencySet::new(vectors)?, source))
}

/// `M_B` distinct indices out of `0..m`, uniformly without replacement; the
/// identity when `M_B = m` (no randomness is consumed).
pub fn sample_batch<R: Rng + ?Sized>(
    m: usize,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if batch_size > m {
        return Err(Error::Precondition(format!(
            "cannot draw a batch of {batch_size} distinct points from {m}"
        )));
    }
    if batch_size == m {
        return Ok((0..m).collect());
    }
    Ok(rand::seq::index::sample(rng, m, batch_size).into_vec())
}

/// `(n′ / n)^γ`, with `n = 0 < n′` giving `+∞` and `n = n′ = 0` giving 0.
pub fn acceptance_ratio(proposed: f64, current: f64, gamma: f64) -> f64 {
    if current == 0.0 {
        if proposed > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        (proposed / current).powf(gamma)
    }
}

/// Per-node Metropolis decisions `ratio_k > r_U`, one uniform draw per node.
pub fn metropolis_accept<R: Rng + ?Sized>(
    proposed: &[f64],
    current: &[f64],
    gamma: f64,
    rng: &mut R,
) -> Vec<bool> {
    assert_eq!(proposed.len(), current.len(), "one norm per node");
    proposed
        .iter()
        .zip(current)
        .map(|(&np, &nc)| {
            let u: f64 = rng.random();
            acceptance_ratio(np, nc, gamma) > u
        })
        .collect()
}

/// `K × dim` independent standard normals.
pub fn draw_steps<R: Rng + ?Sized>(k: usize, dim: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((k, dim), || rng.sample(StandardNormal))
}

/// `ω + δν`.
pub fn perturb(freqs: &FrequencySet, steps: &Array2<f64>, delta: f64) -> Result<FrequencySet> {
    FrequencySet::new(freqs.vectors() + &(steps * delta))
}

/// Takes row `k` from `proposal` where `accepted[k]`.
pub fn take_accepted(
    current: &FrequencySet,
    proposal: &FrequencySet,
    accepted: &[bool],
) -> FrequencySet {
    let mut out = current.clone();
    let v = out.vectors_mut();
    for (k, &acc) in accepted.iter().enumerate() {
        if acc {
            v.row_mut(k).assign(&proposal.row(k));
        }
    }
    out
}

/// Outcome of one Metropolis sweep.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub freqs: FrequencySet,
    /// Amplitudes of the full proposal set.
    pub proposal_amplitudes: AmplitudeVector,
    pub accepted: Vec<bool>,
}

impl Sweep {
    pub fn accepted_count(&self) -> usize {
        self.accepted.iter().filter(|&&a| a).count()
    }
}

/// One Metropolis sweep on a batch: propose `ω′ = ω + δν` for every node,
/// solve once for the proposal set, and accept node by node.
///
/// `a` must be the current amplitudes for `freqs` on this batch. Normals
/// come from `proposal_rng`, the uniforms from `acceptance_rng`.
#[allow(clippy::too_many_arguments)]
pub fn metropolis_sweep<P: Rng + ?Sized, A: Rng + ?Sized>(
    freqs: &FrequencySet,
    a: &AmplitudeVector,
    points: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    activation: Activation,
    delta: f64,
    gamma: f64,
    lambda: f64,
    proposal_rng: &mut P,
    acceptance_rng: &mut A,
) -> Result<Sweep> {
    let steps = draw_steps(freqs.count(), freqs.dim(), proposal_rng);
    let proposal = perturb(freqs, &steps, delta)?;
    let design = crate::lsq::assemble_design(&proposal, points, activation)?;
    let a_new = NormalSystem::assemble(&design, targets)?.solve(lambda)?;
    let accepted = metropolis_accept(&a_new.norms(), &a.norms(), gamma, acceptance_rng);
    Ok(Sweep {
        freqs: take_accepted(freqs, &proposal, &accepted),
        proposal_amplitudes: a_new,
        accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mass_of_three_and_one() {
        let p = probability_mass(&AmplitudeVector::Real(array![[3.0], [1.0]]));
        assert_eq!(p.weights(), &[0.75, 0.25]);
        assert!((effective_sample_size(&p) - 1.6).abs() < 1e-15);
    }

    #[test]
    fn equal_moduli_give_uniform_mass() {
        let a = array![
            [Complex64::new(0.0, 1.0)],
            [Complex64::new(0.0, -1.0)],
            [Complex64::new(1.0, 0.0)],
            [Complex64::new(-1.0, 0.0)]
        ];
        let p = probability_mass(&AmplitudeVector::Complex(a));
        assert!(p.weights().iter().all(|&w| w == 0.25));
        assert_eq!(effective_sample_size(&p), 4.0);
    }

    #[test]
    fn all_zero_amplitudes_fall_back_to_uniform() {
        let p = probability_mass(&AmplitudeVector::Real(Array2::zeros((5, 3))));
        assert!(p.is_degenerate());
        assert_eq!(p.weights(), &[0.2; 5]);
    }

    #[test]
    fn point_mass_has_unit_ess() {
        let p = mass_from_norms(&[0.0, 2.0, 0.0, 0.0]);
        assert_eq!(effective_sample_size(&p), 1.0);
    }

    #[test]
    fn degenerate_resampling_copies_the_only_node() {
        let f = FrequencySet::new(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let p = mass_from_norms(&[1.0, 0.0, 0.0]);
        let (out, src) = resample(&f, &p, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(src, vec![0, 0, 0]);
        assert!(out.vectors().outer_iter().all(|r| r == f.row(0)));
    }

    #[test]
    fn full_batch_is_identity() {
        let b = sample_batch(7, 7, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(b, (0..7).collect::<Vec<_>>());
        assert!(sample_batch(10, 10_000, &mut ChaCha8Rng::seed_from_u64(3)).is_err());
    }

    #[test]
    fn batch_indices_are_distinct() {
        let mut b = sample_batch(100, 50, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), 50);
    }

    #[test]
    fn zero_current_amplitude_accepts_any_growth() {
        assert_eq!(acceptance_ratio(1e-300, 0.0, 10.0), f64::INFINITY);
        assert_eq!(acceptance_ratio(0.0, 0.0, 10.0), 0.0);
        assert_eq!(acceptance_ratio(2.0, 4.0, 2.0), 0.25);
    }

    #[test]
    fn equal_norms_always_accept() {
        let n = vec![0.3; 1000];
        let acc = metropolis_accept(&n, &n, 10.0, &mut ChaCha8Rng::seed_from_u64(5));
        assert!(acc.iter().all(|&a| a));
    }
}
