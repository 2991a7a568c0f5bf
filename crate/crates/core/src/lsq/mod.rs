//! Regularized least squares for the amplitudes of a shallow Fourier-feature
//! network.
//!
//! For fixed frequencies the amplitudes solve the Tikhonov-regularized normal
//! equations `(Sᴴ S + λ M_B I) a = Sᴴ y`, where `S` is the M_B × K design
//! matrix of feature evaluations on a batch. The Gram matrix is assembled
//! explicitly with a single real matrix product over the augmented matrix
//! `[design | targets]` and factorized by Cholesky.

mod factor;
pub(crate) mod trig;

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arff::FrequencySet;
use crate::error::{Error, Result};
pub(crate) use factor::Scalar;
use factor::{Cholesky, PivotedLu};

/// Feature map of the hidden layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// `exp(i ω·x)`, complex amplitudes.
    ComplexExp,
    /// `cos(ω·x + b)` on bias-extended frequencies, real amplitudes.
    CosineBias,
}

impl Activation {
    /// Dimension of a frequency vector for inputs of dimension `input_dim`.
    pub fn frequency_dim(self, input_dim: usize) -> usize {
        match self {
            Activation::ComplexExp => input_dim,
            Activation::CosineBias => input_dim + 1,
        }
    }
}

/// Feature evaluations on a batch of points.
///
/// Complex entries are stored as a real `rows × 2K` block `[cos | sin]`.
#[derive(Clone, Debug)]
pub struct DesignMatrix {
    kind: Activation,
    columns: usize,
    values: Array2<f64>,
}

impl DesignMatrix {
    pub fn kind(&self) -> Activation {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    /// Number of features K.
    pub fn cols(&self) -> usize {
        self.columns
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        match self.kind {
            Activation::CosineBias => Complex64::new(self.values[[row, col]], 0.0),
            Activation::ComplexExp => Complex64::new(
                self.values[[row, col]],
                self.values[[row, col + self.columns]],
            ),
        }
    }

    /// Raw storage: `rows × K` cosines, or `rows × 2K` as `[cos | sin]`.
    pub fn raw(&self) -> &Array2<f64> {
        &self.values
    }
}

/// Builds `S` with `S[j,k] = exp(i ω_k·x_j)` or `cos(ω̌_k·x̌_j)`.
pub fn assemble_design(
    freqs: &FrequencySet,
    points: ArrayView2<'_, f64>,
    kind: Activation,
) -> Result<DesignMatrix> {
    let d = points.ncols();
    let expected = kind.frequency_dim(d);
    if freqs.dim() != expected {
        return Err(Error::DimensionMismatch {
            what: "frequency dimension for the given points",
            expected,
            found: freqs.dim(),
        });
    }
    let k = freqs.count();
    let weights = freqs.vectors().slice(s![.., ..d]);
    let mut phase = points.dot(&weights.t());
    let values = match kind {
        Activation::CosineBias => {
            phase += &freqs.vectors().column(d);
            let mut values = Array2::zeros(phase.raw_dim());
            let mut sin = vec![0.0; k];
            for (src, mut dst) in phase.outer_iter().zip(values.outer_iter_mut()) {
                let src = src.as_standard_layout();
                let src = src.as_slice().expect("standard layout");
                let dst = dst.as_slice_mut().expect("fresh array is contiguous");
                trig::sin_cos_into(src, &mut sin, dst);
            }
            values
        }
        Activation::ComplexExp => {
            let mut values = Array2::zeros((points.nrows(), 2 * k));
            for (src, mut dst) in phase.outer_iter().zip(values.outer_iter_mut()) {
                let src = src.as_standard_layout();
                let src = src.as_slice().expect("standard layout");
                let dst = dst.as_slice_mut().expect("fresh array is contiguous");
                let (cos, sin) = dst.split_at_mut(k);
                trig::sin_cos_into(src, sin, cos);
            }
            values
        }
    };
    Ok(DesignMatrix {
        kind,
        columns: k,
        values,
    })
}

/// How amplitude magnitudes are measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// `|a_k|`, one output channel.
    Modulus,
    /// `‖a_k‖₂` over the output channels (RGB).
    TwoNorm,
}

/// Output weights, K rows by one column per output channel.
#[derive(Clone, Debug, PartialEq)]
pub enum AmplitudeVector {
    Real(Array2<f64>),
    Complex(Array2<Complex64>),
}

impl AmplitudeVector {
    pub fn len(&self) -> usize {
        match self {
            AmplitudeVector::Real(a) => a.nrows(),
            AmplitudeVector::Complex(a) => a.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channels(&self) -> usize {
        match self {
            AmplitudeVector::Real(a) => a.ncols(),
            AmplitudeVector::Complex(a) => a.ncols(),
        }
    }

    pub fn norm_kind(&self) -> NormKind {
        if self.channels() == 1 {
            NormKind::Modulus
        } else {
            NormKind::TwoNorm
        }
    }

    /// Per-node magnitude: modulus for one channel, 2-norm across channels.
    pub fn norms(&self) -> Vec<f64> {
        match self {
            AmplitudeVector::Real(a) => a
                .outer_iter()
                .map(|r| match r.len() {
                    1 => r[0].abs(),
                    _ => r.iter().map(|v| v * v).sum::<f64>().sqrt(),
                })
                .collect(),
            AmplitudeVector::Complex(a) => a
                .outer_iter()
                .map(|r| match r.len() {
                    1 => r[0].norm(),
                    _ => r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt(),
                })
                .collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        match self {
            AmplitudeVector::Real(a) => AmplitudeVector::Real(a * c),
            AmplitudeVector::Complex(a) => AmplitudeVector::Complex(a.mapv(|v| v * c)),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.norms().iter().map(|n| n * n).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        match self {
            AmplitudeVector::Real(a) => a.iter().all(|v| v.is_finite()),
            AmplitudeVector::Complex(a) => a.iter().all(|v| v.is_finite()),
        }
    }
}

/// A regularized least-squares problem on one batch.
#[derive(Clone, Debug)]
pub struct LsqProblem {
    pub design: DesignMatrix,
    pub targets: Array2<f64>,
    pub lambda: f64,
}

impl LsqProblem {
    pub fn new(design: DesignMatrix, targets: Array2<f64>, lambda: f64) -> Result<Self> {
        check_targets(&design, targets.view())?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Precondition(format!(
                "regularization weight must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(Self {
            design,
            targets,
            lambda,
        })
    }

    pub fn batch_size(&self) -> usize {
        self.design.rows()
    }
}

fn check_targets(design: &DesignMatrix, targets: ArrayView2<'_, f64>) -> Result<()> {
    if targets.nrows() != design.rows() {
        return Err(Error::DimensionMismatch {
            what: "target rows vs design rows",
            expected: design.rows(),
            found: targets.nrows(),
        });
    }
    if targets.ncols() == 0 {
        return Err(Error::Precondition(
            "targets need at least one channel".into(),
        ));
    }
    Ok(())
}

#[derive(Clone, Debug)]
struct System<T> {
    k: usize,
    channels: usize,
    /// Sᴴ S, full Hermitian, row-major.
    gram: Vec<T>,
    /// Sᴴ y, k × channels row-major.
    rhs: Vec<T>,
    /// ‖y‖² per channel.
    target_sq: Vec<f64>,
}

impl<T: Scalar> System<T> {
    fn solve(&self, shift: f64, regularized: bool) -> Result<Vec<T>> {
        let n = self.k;
        let mut a = self.gram.clone();
        for i in 0..n {
            a[i * n + i] += T::from_real(shift);
        }
        match Cholesky::factor(&a, n) {
            Ok(ch) => {
                let mut x = self.rhs.clone();
                ch.solve_in_place(&mut x, self.channels);
                Ok(x)
            }
            Err(Error::SingularSystem { pivot }) if !regularized => {
                log::warn!(
                    "unregularized Gram matrix not positive definite (pivot {pivot}); \
                     falling back to pivoted LU"
                );
                Ok(PivotedLu::factor(&a, n)?.solve(&self.rhs, self.channels))
            }
            Err(e) => Err(e),
        }
    }

    /// `Σ_c ‖(Sᴴ S) a_c − Sᴴ y_c‖²` and `Σ_c ‖S a_c − y_c‖²`, both from the
    /// Gram matrix.
    fn residuals_sq(&self, a: &[T]) -> (f64, f64) {
        let (n, c) = (self.k, self.channels);
        let mut normal = 0.0;
        let mut quad = vec![0.0; c];
        let mut cross = vec![0.0; c];
        for i in 0..n {
            let row = &self.gram[i * n..(i + 1) * n];
            for ch in 0..c {
                let mut ga = T::ZERO;
                for (l, g) in row.iter().enumerate() {
                    ga += *g * a[l * c + ch];
                }
                let ai = a[i * c + ch].conj();
                quad[ch] += (ai * ga).re();
                cross[ch] += (ai * self.rhs[i * c + ch]).re();
                normal += (ga - self.rhs[i * c + ch]).abs2();
            }
        }
        let data = (0..c)
            .map(|ch| (quad[ch] - 2.0 * cross[ch] + self.target_sq[ch]).max(0.0))
            .sum();
        (normal, data)
    }
}

#[derive(Clone, Debug)]
enum SystemData {
    Real(System<f64>),
    Complex(System<Complex64>),
}

/// Assembled normal equations `Sᴴ S` and `Sᴴ y` for one batch, reusable for
/// solves at any λ and for the residual metrics.
#[derive(Clone, Debug)]
pub struct NormalSystem {
    rows: usize,
    data: SystemData,
}

/// Upper triangle (including diagonal) of `aᵀ a`; the lower part is left
/// unspecified. Blocks are fixed by shape only, so the result does not depend
/// on anything but the input.
fn upper_gram(a: ArrayView2<'_, f64>) -> Array2<f64> {
    const BLOCK: usize = 96;
    let n = a.ncols();
    let mut g = Array2::zeros((n, n));
    let mut i0 = 0;
    while i0 < n {
        let i1 = (i0 + BLOCK).min(n);
        let left = a.slice(s![.., i0..i1]);
        let right = a.slice(s![.., i0..]);
        let mut out = g.slice_mut(s![i0..i1, i0..]);
        ndarray::linalg::general_mat_mul(1.0, &left.t(), &right, 0.0, &mut out);
        i0 = i1;
    }
    g
}

impl NormalSystem {
    pub fn assemble(design: &DesignMatrix, targets: ArrayView2<'_, f64>) -> Result<Self> {
        check_targets(design, targets)?;
        let aug =
            concatenate(Axis(1), &[design.values.view(), targets]).expect("row counts checked");
        let g = upper_gram(aug.view());
        Ok(Self::from_upper_gram(
            design.kind,
            design.columns,
            targets.ncols(),
            design.rows(),
            &g,
        ))
    }

    /// Builds the system from the upper triangle of the real Gram matrix of
    /// `[design | targets]`.
    fn from_upper_gram(
        kind: Activation,
        k: usize,
        channels: usize,
        rows: usize,
        g: &Array2<f64>,
    ) -> Self {
        let width = g.nrows() - channels;
        let target_sq = (0..channels).map(|c| g[[width + c, width + c]]).collect();
        let data = match kind {
            Activation::CosineBias => {
                let mut gram = vec![0.0; k * k];
                for i in 0..k {
                    for j in i..k {
                        gram[i * k + j] = g[[i, j]];
                        gram[j * k + i] = g[[i, j]];
                    }
                }
                let rhs = (0..k)
                    .flat_map(|i| (0..channels).map(move |c| (i, c)))
                    .map(|(i, c)| g[[i, width + c]])
                    .collect();
                SystemData::Real(System {
                    k,
                    channels,
                    gram,
                    rhs,
                    target_sq,
                })
            }
            Activation::ComplexExp => {
                // Sᴴ S = CᵀC + SᵀS + i(CᵀS − SᵀC), read from the upper triangle.
                let mut gram = vec![Complex64::new(0.0, 0.0); k * k];
                for i in 0..k {
                    for j in i..k {
                        let re = g[[i, j]] + g[[k + i, k + j]];
                        let im = g[[i, k + j]] - g[[j, k + i]];
                        gram[i * k + j] = Complex64::new(re, im);
                        gram[j * k + i] = Complex64::new(re, -im);
                    }
                }
                let rhs = (0..k)
                    .flat_map(|i| (0..channels).map(move |c| (i, c)))
                    .map(|(i, c)| Complex64::new(g[[i, width + c]], -g[[k + i, width + c]]))
                    .collect();
                SystemData::Complex(System {
                    k,
                    channels,
                    gram,
                    rhs,
                    target_sq,
                })
            }
        };
        Self { rows, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn features(&self) -> usize {
        match &self.data {
            SystemData::Real(s) => s.k,
            SystemData::Complex(s) => s.k,
        }
    }

    pub fn channels(&self) -> usize {
        match &self.data {
            SystemData::Real(s) => s.channels,
            SystemData::Complex(s) => s.channels,
        }
    }

    /// Entry (k, l) of the unregularized Gram matrix `Sᴴ S`.
    pub fn gram_entry(&self, k: usize, l: usize) -> Complex64 {
        match &self.data {
            SystemData::Real(s) => Complex64::new(s.gram[k * s.k + l], 0.0),
            SystemData::Complex(s) => s.gram[k * s.k + l],
        }
    }

    /// Entry (k, c) of `Sᴴ y`.
    pub fn rhs_entry(&self, k: usize, c: usize) -> Complex64 {
        match &self.data {
            SystemData::Real(s) => Complex64::new(s.rhs[k * s.channels + c], 0.0),
            SystemData::Complex(s) => s.rhs[k * s.channels + c],
        }
    }

    /// Solves `(Sᴴ S + λ M_B I) a = Sᴴ y`, one factorization for all channels.
    ///
    /// With λ = 0 a Cholesky failure falls back to pivoted LU (with a logged
    /// warning); with λ > 0 it is reported as [`Error::SingularSystem`].
    pub fn solve(&self, lambda: f64) -> Result<AmplitudeVector> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Precondition(format!(
                "regularization weight must be finite and nonnegative, got {lambda}"
            )));
        }
        let shift = lambda * self.rows as f64;
        let regularized = lambda > 0.0;
        Ok(match &self.data {
            SystemData::Real(s) => {
                let x = s.solve(shift, regularized)?;
                AmplitudeVector::Real(Array2::from_shape_vec((s.k, s.channels), x).unwrap())
            }
            SystemData::Complex(s) => {
                let x = s.solve(shift, regularized)?;
                AmplitudeVector::Complex(Array2::from_shape_vec((s.k, s.channels), x).unwrap())
            }
        })
    }

    fn residuals(&self, a: &AmplitudeVector) -> Result<(f64, f64)> {
        let (normal, data) = match (&self.data, a) {
            (SystemData::Real(s), AmplitudeVector::Real(a)) => {
                check_amplitudes(s.k, s.channels, a.dim())?;
                s.residuals_sq(a.as_standard_layout().as_slice().unwrap())
            }
            (SystemData::Complex(s), AmplitudeVector::Complex(a)) => {
                check_amplitudes(s.k, s.channels, a.dim())?;
                s.residuals_sq(a.as_standard_layout().as_slice().unwrap())
            }
            _ => {
                return Err(Error::Precondition(
                    "amplitude type does not match the activation".into(),
                ))
            }
        };
        let rows = self.rows as f64;
        Ok((normal / rows, data / rows))
    }

    /// `‖(Sᴴ S) a − Sᴴ y‖² / M_B`, the residual of the unregularized
    /// normal equations.
    pub fn residual_metric(&self, a: &AmplitudeVector) -> Result<f64> {
        Ok(self.residuals(a)?.0)
    }

    /// `‖S a − y‖² / M_B` expanded through the Gram matrix. Accurate to
    /// roughly machine precision relative to `‖y‖² / M_B`.
    pub fn data_residual_metric(&self, a: &AmplitudeVector) -> Result<f64> {
        Ok(self.residuals(a)?.1)
    }

    /// Both metrics at once: `(normal-equation, data-space)`.
    pub fn metrics(&self, a: &AmplitudeVector) -> Result<(f64, f64)> {
        self.residuals(a)
    }
}

/// A batch's `[design | targets]` matrix together with its full symmetric
/// Gram matrix.
///
/// Systems for frequency sets that share nodes with an already assembled
/// one (after resampling, or after a Metropolis sweep on the same batch) are
/// built by copying the known Gram entries and computing only the missing
/// blocks.
#[derive(Clone, Debug)]
pub struct AssembledBatch {
    kind: Activation,
    k: usize,
    channels: usize,
    aug: Array2<f64>,
    gram: Array2<f64>,
}

impl AssembledBatch {
    pub fn new(
        freqs: &FrequencySet,
        points: ArrayView2<'_, f64>,
        targets: ArrayView2<'_, f64>,
        kind: Activation,
    ) -> Result<Self> {
        let design = assemble_design(freqs, points, kind)?;
        check_targets(&design, targets)?;
        let aug =
            concatenate(Axis(1), &[design.values.view(), targets]).expect("row counts checked");
        let mut gram = upper_gram(aug.view());
        symmetrize(&mut gram);
        Ok(Self {
            kind,
            k: design.columns,
            channels: targets.ncols(),
            aug,
            gram,
        })
    }

    pub fn rows(&self) -> usize {
        self.aug.nrows()
    }

    pub fn features(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> Activation {
        self.kind
    }

    fn width(&self) -> usize {
        self.aug.ncols() - self.channels
    }

    /// Real columns of node `k`.
    fn node_columns(&self, k: usize) -> impl Iterator<Item = usize> {
        let second = match self.kind {
            Activation::ComplexExp => Some(self.k + k),
            Activation::CosineBias => None,
        };
        std::iter::once(k).chain(second)
    }

    pub fn design(&self) -> DesignMatrix {
        DesignMatrix {
            kind: self.kind,
            columns: self.k,
            values: self.aug.slice(s![.., ..self.width()]).to_owned(),
        }
    }

    pub fn system(&self) -> NormalSystem {
        NormalSystem::from_upper_gram(self.kind, self.k, self.channels, self.rows(), &self.gram)
    }

    /// The batch for the frequency set whose node `i` is node `source[i]` of
    /// this one. No new products are needed.
    pub fn select(&self, source: &[usize]) -> Self {
        assert_eq!(source.len(), self.k, "one source per node");
        let width = self.width();
        let mut cols: Vec<usize> = match self.kind {
            Activation::CosineBias => source.to_vec(),
            Activation::ComplexExp => source
                .iter()
                .copied()
                .chain(source.iter().map(|&j| self.k + j))
                .collect(),
        };
        cols.extend(width..width + self.channels);
        let aug = self.aug.select(Axis(1), &cols);
        let n = cols.len();
        let gram = Array2::from_shape_fn((n, n), |(i, j)| self.gram[[cols[i], cols[j]]]);
        Self {
            kind: self.kind,
            k: self.k,
            channels: self.channels,
            aug,
            gram,
        }
    }

    /// The batch for the frequency set taking node `k` from `proposal` where
    /// `accepted[k]`, and from `current` otherwise.
    ///
    /// `current` must hold exactly the non-accepted frequencies of `freqs`
    /// on the same points and targets as `proposal`; when it is `None`
    /// those columns are evaluated from `freqs` and `points`.
    pub fn merge(
        proposal: &Self,
        accepted: &[bool],
        current: Option<&Self>,
        freqs: &FrequencySet,
        points: ArrayView2<'_, f64>,
    ) -> Result<Self> {
        let k = proposal.k;
        assert_eq!(accepted.len(), k, "one flag per node");
        if let Some(cur) = current {
            if cur.kind != proposal.kind || cur.k != k || cur.aug.dim() != proposal.aug.dim() {
                return Err(Error::Precondition(
                    "current and proposal batches have different shapes".into(),
                ));
            }
        }
        let width = proposal.width();
        let acc_nodes: Vec<usize> = (0..k).filter(|&i| accepted[i]).collect();
        let rej_nodes: Vec<usize> = (0..k).filter(|&i| !accepted[i]).collect();
        let acc_cols: Vec<usize> = acc_nodes
            .iter()
            .flat_map(|&i| proposal.node_columns(i))
            .collect();
        let rej_cols: Vec<usize> = rej_nodes
            .iter()
            .flat_map(|&i| proposal.node_columns(i))
            .collect();

        let mut aug = proposal.aug.clone();
        match current {
            Some(cur) => {
                for &c in &rej_cols {
                    aug.column_mut(c).assign(&cur.aug.column(c));
                }
            }
            None if !rej_nodes.is_empty() => {
                let subset = FrequencySet::new(freqs.vectors().select(Axis(0), &rej_nodes))?;
                let fresh = assemble_design(&subset, points, proposal.kind)?;
                if fresh.rows() != proposal.rows() {
                    return Err(Error::DimensionMismatch {
                        what: "points vs proposal batch rows",
                        expected: proposal.rows(),
                        found: fresh.rows(),
                    });
                }
                let r = rej_nodes.len();
                for (j, &node) in rej_nodes.iter().enumerate() {
                    aug.column_mut(node).assign(&fresh.values.column(j));
                    if proposal.kind == Activation::ComplexExp {
                        aug.column_mut(k + node).assign(&fresh.values.column(r + j));
                    }
                }
            }
            None => {}
        }

        let mut gram = proposal.gram.clone();
        let rej_block = aug.select(Axis(1), &rej_cols);
        let cross = aug.select(Axis(1), &acc_cols).t().dot(&rej_block);
        for (a, &p) in acc_cols.iter().enumerate() {
            for (r, &q) in rej_cols.iter().enumerate() {
                gram[[p, q]] = cross[[a, r]];
                gram[[q, p]] = cross[[a, r]];
            }
        }
        let tail: Vec<usize> = rej_cols
            .iter()
            .copied()
            .chain(width..width + proposal.channels)
            .collect();
        match current {
            Some(cur) => {
                for &p in &rej_cols {
                    for &q in &tail {
                        gram[[p, q]] = cur.gram[[p, q]];
                        gram[[q, p]] = cur.gram[[p, q]];
                    }
                }
            }
            None => {
                let block = rej_block.t().dot(&aug.select(Axis(1), &tail));
                for (r, &p) in rej_cols.iter().enumerate() {
                    for (t, &q) in tail.iter().enumerate() {
                        gram[[p, q]] = block[[r, t]];
                        gram[[q, p]] = block[[r, t]];
                    }
                }
            }
        }
        Ok(Self {
            kind: proposal.kind,
            k,
            channels: proposal.channels,
            aug,
            gram,
        })
    }
}

fn symmetrize(g: &mut Array2<f64>) {
    let n = g.nrows();
    for i in 0..n {
        for j in 0..i {
            g[[i, j]] = g[[j, i]];
        }
    }
}

fn check_amplitudes(k: usize, channels: usize, dim: (usize, usize)) -> Result<()> {
    if dim != (k, channels) {
        return Err(Error::DimensionMismatch {
            what: "amplitude rows × channels",
            expected: k * channels,
            found: dim.0 * dim.1,
        });
    }
    Ok(())
}

/// Solves the problem's regularized normal equations.
pub fn solve_regularized(problem: &LsqProblem) -> Result<AmplitudeVector> {
    NormalSystem::assemble(&problem.design, problem.targets.view())?.solve(problem.lambda)
}

/// Normal-equation residual `‖(Sᴴ S) a − Sᴴ y‖² / rows`.
pub fn residual_metric(
    design: &DesignMatrix,
    a: &AmplitudeVector,
    targets: ArrayView2<'_, f64>,
) -> Result<f64> {
    NormalSystem::assemble(design, targets)?.residual_metric(a)
}

/// Network output `S a` on the design's rows; the imaginary part is `None`
/// for the cosine activation.
pub fn predict(
    design: &DesignMatrix,
    a: &AmplitudeVector,
) -> Result<(Array2<f64>, Option<Array2<f64>>)> {
    let k = design.columns;
    if a.len() != k {
        return Err(Error::DimensionMismatch {
            what: "amplitude count vs features",
            expected: k,
            found: a.len(),
        });
    }
    match (design.kind, a) {
        (Activation::CosineBias, AmplitudeVector::Real(a)) => Ok((design.values.dot(a), None)),
        (Activation::ComplexExp, AmplitudeVector::Complex(a)) => {
            let cos = design.values.slice(s![.., ..k]);
            let sin = design.values.slice(s![.., k..]);
            let ar = a.mapv(|v| v.re);
            let ai = a.mapv(|v| v.im);
            let re = cos.dot(&ar) - sin.dot(&ai);
            let im = cos.dot(&ai) + sin.dot(&ar);
            Ok((re, Some(im)))
        }
        _ => Err(Error::Precondition(
            "amplitude type does not match the activation".into(),
        )),
    }
}

/// Data-space residual `‖S a − y‖² / rows` (modulus for complex outputs).
pub fn data_residual_metric(
    design: &DesignMatrix,
    a: &AmplitudeVector,
    targets: ArrayView2<'_, f64>,
) -> Result<f64> {
    check_targets(design, targets)?;
    let (re, im) = predict(design, a)?;
    let mut total: f64 = re
        .iter()
        .zip(targets.iter())
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    if let Some(im) = im {
        total += im.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(total / design.rows() as f64)
}
