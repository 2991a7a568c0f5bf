use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The K frequency vectors of a shallow network, one per row.
///
/// For the cosine activation each row is bias-extended: the last entry is
/// the bias and the row pairs with a point extended by a trailing 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct FrequencySet {
    vectors: Array2<f64>,
}

impl FrequencySet {
    pub fn new(vectors: Array2<f64>) -> Result<Self> {
        if vectors.nrows() == 0 || vectors.ncols() == 0 {
            return Err(Error::Precondition(
                "a frequency set needs at least one vector of positive dimension".into(),
            ));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition(
                "frequency entries must be finite".into(),
            ));
        }
        Ok(Self { vectors })
    }

    pub fn zeros(count: usize, dim: usize) -> Self {
        assert!(count >= 1 && dim >= 1);
        Self {
            vectors: Array2::zeros((count, dim)),
        }
    }

    pub fn count(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    pub fn row(&self, k: usize) -> ArrayView1<'_, f64> {
        self.vectors.row(k)
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.vectors
    }

    /// Crate-internal mutation keeps finiteness the caller's responsibility.
    pub(crate) fn vectors_mut(&mut self) -> &mut Array2<f64> {
        &mut self.vectors
    }
}

impl TryFrom<Vec<Vec<f64>>> for FrequencySet {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Format("ragged frequency rows".into()));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let n = if dim == 0 { 0 } else { flat.len() / dim };
        let arr =
            Array2::from_shape_vec((n, dim), flat).map_err(|e| Error::Format(e.to_string()))?;
        Self::new(arr)
    }
}

impl From<FrequencySet> for Vec<Vec<f64>> {
    fn from(f: FrequencySet) -> Self {
        f.vectors.outer_iter().map(|r| r.to_vec()).collect()
    }
}
