//! Expected-maximum estimators and the plug-in variance of the maximum.

use serde::{Deserialize, Serialize};

use crate::combinatorics::{check_budget, cumulative_ratio_unchecked, EstimatorKind};
use crate::error::{EvpError, Result};

/// Pools larger than this are reduced with compensated summation.
const COMPENSATED_SUM_THRESHOLD: usize = 10_000;

/// Trial scores `X_1..X_B`, kept sorted ascending so that position `i` holds
/// the order statistic `X_(i+1)`. Ties are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorePool {
    scores: Vec<f64>,
}

impl ScorePool {
    pub fn new(mut scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(EvpError::EmptyPool);
        }
        if let Some((index, &value)) = scores.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(EvpError::NonFinite { index, value });
        }
        scores.sort_by(f64::total_cmp);
        Ok(Self { scores })
    }

    /// Wraps scores the caller has already sorted and checked.
    pub(crate) fn from_sorted_unchecked(scores: Vec<f64>) -> Self {
        debug_assert!(!scores.is_empty());
        debug_assert!(scores.windows(2).all(|w| w[0] <= w[1]));
        Self { scores }
    }

    /// Number of trials `B`.
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Scores in ascending order.
    pub fn sorted(&self) -> &[f64] {
        &self.scores
    }

    pub fn into_sorted(self) -> Vec<f64> {
        self.scores
    }

    pub fn min(&self) -> f64 {
        self.scores[0]
    }

    pub fn max(&self) -> f64 {
        self.scores[self.scores.len() - 1]
    }

    pub fn mean(&self) -> f64 {
        sum(self.scores.iter().copied()) / self.len() as f64
    }
}

impl TryFrom<Vec<f64>> for ScorePool {
    type Error = EvpError;

    fn try_from(scores: Vec<f64>) -> Result<Self> {
        Self::new(scores)
    }
}

/// Probability that the maximum of `n` draws is each order statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub kind: EstimatorKind,
    pub n: usize,
    pub b: usize,
    /// `masses[i] = P(Y_n = X_(i+1))`.
    pub masses: Vec<f64>,
}

/// Masses over the `b` order statistics, as adjacent differences of the
/// cumulative ratios.
pub fn weight_vector(kind: EstimatorKind, n: usize, b: usize) -> Result<WeightVector> {
    check_budget(n, b)?;
    Ok(WeightVector {
        kind,
        n,
        b,
        masses: masses(kind, n, b),
    })
}

fn masses(kind: EstimatorKind, n: usize, b: usize) -> Vec<f64> {
    let mut prev = 0.0;
    (1..=b)
        .map(|i| {
            let cur = cumulative_ratio_unchecked(kind, i, n, b);
            let mass = cur - prev;
            prev = cur;
            mass
        })
        .collect()
}

/// Weight vectors for every `n` in `1..=b`, computed once and reused across pools.
#[derive(Debug, Clone)]
pub struct WeightTable {
    kind: EstimatorKind,
    b: usize,
    // row-major: row n-1 holds the masses for n
    rows: Vec<f64>,
}

impl WeightTable {
    pub fn new(kind: EstimatorKind, b: usize) -> Result<Self> {
        check_budget(1, b)?;
        let mut rows = Vec::with_capacity(b * b);
        for n in 1..=b {
            rows.extend(masses(kind, n, b));
        }
        Ok(Self { kind, b, rows })
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn budget(&self) -> usize {
        self.b
    }

    pub fn masses(&self, n: usize) -> &[f64] {
        &self.rows[(n - 1) * self.b..n * self.b]
    }

    /// Mean and plug-in variance of the maximum of `n` draws.
    ///
    /// Panics if the pool size differs from the table's budget or `n` is out of range.
    pub fn moments(&self, pool: &ScorePool, n: usize) -> (f64, f64) {
        assert_eq!(pool.len(), self.b, "pool size does not match weight table");
        assert!((1..=self.b).contains(&n), "n out of range");
        moments_with(self.masses(n), pool)
    }

    pub fn mean(&self, pool: &ScorePool, n: usize) -> f64 {
        assert_eq!(pool.len(), self.b, "pool size does not match weight table");
        mean_with(self.masses(n), pool)
    }
}

pub(crate) fn mean_with(masses: &[f64], pool: &ScorePool) -> f64 {
    let xs = pool.sorted();
    let m = sum(masses.iter().zip(xs).map(|(w, x)| w * x));
    // Rounding in the masses can push the estimate an ulp outside the pool's range.
    m.clamp(pool.min(), pool.max())
}

fn moments_with(masses: &[f64], pool: &ScorePool) -> (f64, f64) {
    let mean = mean_with(masses, pool);
    let var = sum(masses.iter().zip(pool.sorted()).map(|(w, x)| {
        let d = x - mean;
        w * d * d
    }));
    (mean, var.max(0.0))
}

/// Estimated expected maximum of `n` draws from the distribution behind `pool`.
pub fn expected_max(kind: EstimatorKind, pool: &ScorePool, n: usize) -> Result<f64> {
    check_budget(n, pool.len())?;
    Ok(mean_with(&masses(kind, n, pool.len()), pool))
}

/// Plug-in variance of the maximum of `n` draws, under the same weights as
/// [`expected_max`].
pub fn variance_of_max(kind: EstimatorKind, pool: &ScorePool, n: usize) -> Result<f64> {
    check_budget(n, pool.len())?;
    Ok(moments_with(&masses(kind, n, pool.len()), pool).1)
}

/// Sums ascending-index terms; Neumaier compensation kicks in for long inputs.
pub(crate) fn sum<I>(terms: I) -> f64
where
    I: ExactSizeIterator<Item = f64>,
{
    if terms.len() <= COMPENSATED_SUM_THRESHOLD {
        return terms.sum();
    }
    let mut total = 0.0f64;
    let mut comp = 0.0f64;
    for t in terms {
        let s = total + t;
        if total.abs() >= t.abs() {
            comp += (total - s) + t;
        } else {
            comp += (t - s) + total;
        }
        total = s;
    }
    total + comp
}
