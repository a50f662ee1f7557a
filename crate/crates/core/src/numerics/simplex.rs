use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sentinel for a coordinate excluded from the projection. Excluded
/// coordinates always come out as exactly `0.0`.
pub const EXCLUDED: f64 = f64::NEG_INFINITY;

/// Tolerance on `sum(values) == 1`.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A point on the probability simplex together with its support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexVector {
    values: Vec<f64>,
    support: Vec<usize>,
}

impl SimplexVector {
    /// Validates `values` and derives the support.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty simplex vector".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(
                "simplex entries must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidInput(format!("simplex entries sum to {sum}")));
        }
        Ok(Self::from_values_unchecked(values))
    }

    pub(crate) fn from_values_unchecked(values: Vec<f64>) -> Self {
        let support = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .map(|(i, _)| i)
            .collect();
        SimplexVector { values, support }
    }

    /// One-hot vertex `e_index` of the simplex with `n` coordinates.
    pub fn vertex(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(Error::InvalidInput(format!("vertex {index} out of range {n}")));
        }
        let mut values = vec![0.0; n];
        values[index] = 1.0;
        Ok(Self::from_values_unchecked(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sorted indices with strictly positive weight.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Euclidean projection of `v` onto the probability simplex.
///
/// Entries equal to [`EXCLUDED`] are dropped from the projection and come
/// back as exactly zero. Uses the sort-and-threshold rule; coordinates
/// landing exactly on the threshold are outside the support.
pub fn sparsemax(v: &[f64]) -> Result<SimplexVector> {
    let (values, _) = project(v)?;
    Ok(SimplexVector::from_values_unchecked(values))
}

/// Returns the projection together with the threshold tau.
fn project(v: &[f64]) -> Result<(Vec<f64>, f64)> {
    if v.is_empty() {
        return Err(Error::InvalidInput("sparsemax of an empty vector".into()));
    }
    if v.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
        return Err(Error::InvalidInput("sparsemax input must be finite".into()));
    }
    let mut active: Vec<f64> = v.iter().copied().filter(|x| *x != EXCLUDED).collect();
    if active.is_empty() {
        return Err(Error::InvalidInput("every sparsemax coordinate is excluded".into()));
    }
    // Shifting by the max keeps the arithmetic identical for translated
    // inputs whenever the translation itself is exact.
    let top = active.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for x in active.iter_mut() {
        *x -= top;
    }
    active.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));

    let mut cumsum = 0.0;
    let mut k = 0usize;
    let mut sum_k = 0.0;
    for (j, &x) in active.iter().enumerate() {
        cumsum += x;
        let rank = (j + 1) as f64;
        if 1.0 + rank * x > cumsum {
            k = j + 1;
            sum_k = cumsum;
        }
    }
    let tau = (sum_k - 1.0) / k as f64;
    let values = v
        .iter()
        .map(|&x| {
            if x == EXCLUDED {
                0.0
            } else {
                (x - top - tau).max(0.0)
            }
        })
        .collect();
    Ok((values, tau + top))
}

/// Vector-Jacobian product of sparsemax at `v`.
///
/// On the support `S` the Jacobian is `I - 11ᵀ/|S|`; it is zero elsewhere.
pub fn sparsemax_backward(v: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
    if v.len() != upstream.len() {
        return Err(Error::InvalidInput(format!(
            "sparsemax_backward length mismatch: {} vs {}",
            v.len(),
            upstream.len()
        )));
    }
    let p = sparsemax(v)?;
    let support = p.support();
    let mean = support.iter().map(|&i| upstream[i]).sum::<f64>() / support.len() as f64;
    let mut out = vec![0.0; v.len()];
    for &i in support {
        out[i] = upstream[i] - mean;
    }
    Ok(out)
}
