//! Expected-validation-performance curves: mean and variance of the best of
//! `n` trials for every `n` up to the pool size.

use serde::{Deserialize, Serialize};

use crate::combinatorics::EstimatorKind;
use crate::estimators::{ScorePool, WeightTable};
use crate::error::Result;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvpPoint {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvpCurve {
    pub estimator: EstimatorKind,
    #[serde(rename = "B")]
    pub b: usize,
    pub points: Vec<EvpPoint>,
}

impl EvpCurve {
    pub fn point(&self, n: usize) -> Option<&EvpPoint> {
        n.checked_sub(1).and_then(|i| self.points.get(i))
    }
}

pub fn evp_curve(kind: EstimatorKind, pool: &ScorePool) -> Result<EvpCurve> {
    let b = pool.len();
    let table = WeightTable::new(kind, b)?;
    let points = par::map_range(b, |i| {
        let n = i + 1;
        let (mean, variance) = table.moments(pool, n);
        EvpPoint { n, mean, variance }
    });
    Ok(EvpCurve {
        estimator: kind,
        b,
        points,
    })
}

/// Curves for `u`, `v` and `w`, in that order.
pub fn evp_curve_all(pool: &ScorePool) -> Result<Vec<EvpCurve>> {
    EstimatorKind::ALL.iter().map(|&k| evp_curve(k, pool)).collect()
}
