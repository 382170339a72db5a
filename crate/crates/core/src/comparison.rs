//! How often does an estimator rank the worse of two models first?
//!
//! Both pools are repeatedly subsampled at budget `B`; each estimator is
//! evaluated at `n = B` on both subsamples and the resample counts as an
//! incorrect conclusion when the truly-better pool comes out strictly lower.
//! Exact ties are counted on their own.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::EstimatorKind;
use crate::estimators::{expected_max, mean_with, weight_vector, ScorePool};
use crate::error::{invalid, EvpError, Result};
use crate::par;
use crate::rng::RandomSource;
use crate::simulation::Sampling;

const RESAMPLE_CHUNK: usize = 256;
// Sub-stream tags are per role, not per pool, so swapping the pools together
// with the truth label reproduces exactly the same draws.
const TAG_BETTER: u64 = 0;
const TAG_WORSE: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "a",
            Side::B => "b",
        })
    }
}

impl FromStr for Side {
    type Err = EvpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Side::A),
            "b" => Ok(Side::B),
            other => Err(invalid(format!("unknown pool label `{other}` (expected a or b)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthSource {
    /// Larger combinations estimate at `n = B` over each full pool.
    FullPool,
    /// Supplied by the caller.
    Override,
}

/// Which pool is better at a given budget, and how that was decided.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub better: Side,
    pub source: TruthSource,
    /// Full-pool combinations estimates at `n = B`.
    pub value_a: f64,
    pub value_b: f64,
}

fn check_budget(a: &ScorePool, b: &ScorePool, budget: usize) -> Result<()> {
    if budget == 0 {
        return Err(invalid("budget must be at least 1"));
    }
    let smallest = a.len().min(b.len());
    if budget > smallest {
        return Err(invalid(format!(
            "budget {budget} exceeds the smaller pool size {smallest}"
        )));
    }
    Ok(())
}

pub fn determine_truth(
    a: &ScorePool,
    b: &ScorePool,
    budget: usize,
    override_better: Option<Side>,
) -> Result<Truth> {
    check_budget(a, b, budget)?;
    let value_a = expected_max(EstimatorKind::Combinations, a, budget)?;
    let value_b = expected_max(EstimatorKind::Combinations, b, budget)?;
    let (better, source) = match override_better {
        Some(side) => (side, TruthSource::Override),
        None if value_a > value_b => (Side::A, TruthSource::FullPool),
        None if value_b > value_a => (Side::B, TruthSource::FullPool),
        None => return Err(EvpError::IndeterminateTruth { budget, value: value_a }),
    };
    Ok(Truth { better, source, value_a, value_b })
}

/// Outcome of the resampling at one budget for one estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConclusionRate {
    pub estimator: EstimatorKind,
    #[serde(rename = "B")]
    pub budget: usize,
    pub incorrect: u64,
    pub ties: u64,
    pub resamples: u64,
}

impl ConclusionRate {
    pub fn error_rate(&self) -> f64 {
        self.incorrect as f64 / self.resamples as f64
    }

    pub fn tie_rate(&self) -> f64 {
        self.ties as f64 / self.resamples as f64
    }
}

#[allow(clippy::too_many_arguments)]
pub fn incorrect_conclusion_rate(
    a: &ScorePool,
    b: &ScorePool,
    kind: EstimatorKind,
    budget: usize,
    resamples: usize,
    sampling: Sampling,
    truth: &Truth,
    rng: &RandomSource,
) -> Result<ConclusionRate> {
    Ok(run_resamples(a, b, &[kind], budget, resamples, sampling, truth, rng)?[0])
}

#[allow(clippy::too_many_arguments)]
fn run_resamples(
    a: &ScorePool,
    b: &ScorePool,
    kinds: &[EstimatorKind],
    budget: usize,
    resamples: usize,
    sampling: Sampling,
    truth: &Truth,
    rng: &RandomSource,
) -> Result<Vec<ConclusionRate>> {
    check_budget(a, b, budget)?;
    if resamples == 0 {
        return Err(invalid("resamples must be at least 1"));
    }
    let (better, worse) = match truth.better {
        Side::A => (a, b),
        Side::B => (b, a),
    };
    let masses = kinds
        .iter()
        .map(|&k| weight_vector(k, budget, budget).map(|w| w.masses))
        .collect::<Result<Vec<_>>>()?;

    let chunks = resamples.div_ceil(RESAMPLE_CHUNK);
    let partial = par::map_range(chunks, |chunk| {
        let mut counts = vec![(0u64, 0u64); kinds.len()];
        let start = chunk * RESAMPLE_CHUNK;
        for r in start..(start + RESAMPLE_CHUNK).min(resamples) {
            let stream = rng.substream(r as u64);
            let hi = subsample(better, budget, sampling, &stream.substream(TAG_BETTER));
            let lo = subsample(worse, budget, sampling, &stream.substream(TAG_WORSE));
            for (m, c) in masses.iter().zip(counts.iter_mut()) {
                let (eh, el) = (mean_with(m, &hi), mean_with(m, &lo));
                if eh < el {
                    c.0 += 1;
                } else if eh == el {
                    c.1 += 1;
                }
            }
        }
        counts
    });
    let mut totals = vec![(0u64, 0u64); kinds.len()];
    for chunk in partial {
        for (t, c) in totals.iter_mut().zip(chunk) {
            t.0 += c.0;
            t.1 += c.1;
        }
    }
    Ok(kinds
        .iter()
        .zip(totals)
        .map(|(&estimator, (incorrect, ties))| ConclusionRate {
            estimator,
            budget,
            incorrect,
            ties,
            resamples: resamples as u64,
        })
        .collect())
}

fn subsample(pool: &ScorePool, budget: usize, sampling: Sampling, rng: &RandomSource) -> ScorePool {
    let mut rng = rng.rng();
    let xs = pool.sorted();
    let mut out: Vec<f64> = match sampling {
        Sampling::WithoutReplacement => index::sample(&mut rng, xs.len(), budget).into_iter().map(|i| xs[i]).collect(),
        Sampling::WithReplacement => (0..budget).map(|_| xs[rng.random_range(0..xs.len())]).collect(),
    };
    out.sort_by(f64::total_cmp);
    ScorePool::from_sorted_unchecked(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConfig {
    pub budgets: Vec<usize>,
    pub resamples: usize,
    pub sampling: Sampling,
    pub truth_override: Option<Side>,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            budgets: (15..=30).collect(),
            resamples: 50_000,
            sampling: Sampling::WithoutReplacement,
            truth_override: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetTruth {
    #[serde(rename = "B")]
    pub budget: usize,
    #[serde(flatten)]
    pub truth: Truth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub resamples: usize,
    pub sampling: Sampling,
    pub truths: Vec<BudgetTruth>,
    /// Grouped by budget, then `u`, `v`, `w`.
    pub rates: Vec<ConclusionRate>,
}

impl ComparisonReport {
    pub fn rate(&self, kind: EstimatorKind, budget: usize) -> Option<&ConclusionRate> {
        self.rates.iter().find(|r| r.estimator == kind && r.budget == budget)
    }
}

/// Incorrect-conclusion rates for every budget and all three estimators.
///
/// Budget `B` draws from `rng.substream(B)`, so each row matches what
/// [`incorrect_conclusion_rate`] returns for that stream.
pub fn comparison_report(
    a: &ScorePool,
    b: &ScorePool,
    config: &ComparisonConfig,
    rng: &RandomSource,
) -> Result<ComparisonReport> {
    let mut truths = Vec::with_capacity(config.budgets.len());
    let mut rates = Vec::with_capacity(config.budgets.len() * 3);
    for &budget in &config.budgets {
        let truth = determine_truth(a, b, budget, config.truth_override)?;
        rates.extend(run_resamples(
            a,
            b,
            &EstimatorKind::ALL,
            budget,
            config.resamples,
            config.sampling,
            &truth,
            &rng.substream(budget as u64),
        )?);
        truths.push(BudgetTruth { budget, truth });
    }
    Ok(ComparisonReport {
        resamples: config.resamples,
        sampling: config.sampling,
        truths,
        rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use EstimatorKind::*;

    fn pool(xs: &[f64]) -> ScorePool {
        ScorePool::new(xs.to_vec()).unwrap()
    }

    fn combos(len: usize, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        (0..len)
            .flat_map(|first| {
                combos(len, k - 1)
                    .into_iter()
                    .filter(move |rest| rest.first().is_none_or(|&r| r > first))
                    .map(move |mut rest| {
                        rest.insert(0, first);
                        rest
                    })
            })
            .collect()
    }

    // Exact incorrect-conclusion rate over every pair of size-k subsets.
    fn exhaustive_rate(better: &[f64], worse: &[f64], kind: EstimatorKind, k: usize) -> f64 {
        let est = |xs: &[f64], idx: &[usize]| expected_max(kind, &pool(&idx.iter().map(|&i| xs[i]).collect::<Vec<_>>()), k).unwrap();
        let sb = combos(better.len(), k);
        let sw = combos(worse.len(), k);
        let mut wrong = 0;
        for x in &sb {
            for y in &sw {
                if est(better, x) < est(worse, y) {
                    wrong += 1;
                }
            }
        }
        wrong as f64 / (sb.len() * sw.len()) as f64
    }

    #[test]
    fn truth_labels() {
        let ones = pool(&[1.0; 5]);
        let zeros = pool(&[0.0; 5]);
        assert_eq!(determine_truth(&ones, &zeros, 3, None).unwrap().better, Side::A);
        let p = pool(&[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(determine_truth(&p, &p, 2, None), Err(EvpError::IndeterminateTruth { budget: 2, .. })));
        let t = determine_truth(&p, &pool(&[1.0, 2.0, 3.0, 5.0]), 2, None).unwrap();
        assert_eq!(t.better, Side::B);
        assert!((t.value_a - 20.0 / 6.0).abs() < 1e-12 && (t.value_b - 23.0 / 6.0).abs() < 1e-12);
        let o = determine_truth(&p, &p, 2, Some(Side::A)).unwrap();
        assert_eq!((o.better, o.source), (Side::A, TruthSource::Override));
        assert!(determine_truth(&p, &ones, 5, None).is_err());
    }

    #[test]
    fn separated_pools_never_err() {
        let ones = pool(&[1.0; 40]);
        let zeros = pool(&[0.0; 40]);
        let rng = RandomSource::new(3);
        let truth = determine_truth(&zeros, &ones, 10, None).unwrap();
        for kind in EstimatorKind::ALL {
            let r = incorrect_conclusion_rate(&zeros, &ones, kind, 10, 500, Sampling::WithoutReplacement, &truth, &rng).unwrap();
            assert_eq!((r.incorrect, r.ties, r.resamples), (0, 0, 500));
        }
    }

    #[test]
    fn self_comparison_is_symmetric() {
        let p = pool(&(0..30).map(|i| ((i * 37) % 23) as f64 / 23.0).collect::<Vec<_>>());
        let truth = determine_truth(&p, &p, 8, Some(Side::A)).unwrap();
        let resamples = 40_000;
        for kind in EstimatorKind::ALL {
            let r = incorrect_conclusion_rate(&p, &p, kind, 8, resamples, Sampling::WithoutReplacement, &truth, &RandomSource::new(9)).unwrap();
            let expect = (1.0 - r.tie_rate()) / 2.0;
            let se = (0.25 / resamples as f64).sqrt();
            assert!((r.error_rate() - expect).abs() < 4.0 * se, "{kind}: {r:?}");
        }
    }

    #[test]
    fn matches_exhaustive_enumeration() {
        let better = [0.2, 0.5, 0.9, 0.4];
        let worse = [0.1, 0.6, 0.3, 0.7];
        let (a, b) = (pool(&better), pool(&worse));
        let truth = determine_truth(&a, &b, 2, Some(Side::A)).unwrap();
        let resamples = 60_000;
        for kind in EstimatorKind::ALL {
            let exact = exhaustive_rate(&better, &worse, kind, 2);
            let r = incorrect_conclusion_rate(&a, &b, kind, 2, resamples, Sampling::WithoutReplacement, &truth, &RandomSource::new(21)).unwrap();
            let se = (exact * (1.0 - exact) / resamples as f64).sqrt();
            assert!((r.error_rate() - exact).abs() <= 4.0 * se, "{kind}: exact {exact}, got {}", r.error_rate());
        }
    }

    #[test]
    fn full_pool_budget_is_all_or_nothing() {
        let a = pool(&[0.3, 0.8, 0.5, 0.55, 0.6]);
        let b = pool(&[0.7, 0.1, 0.75, 0.2, 0.4]);
        let truth = determine_truth(&a, &b, 5, None).unwrap();
        for kind in EstimatorKind::ALL {
            let r = incorrect_conclusion_rate(&a, &b, kind, 5, 100, Sampling::WithoutReplacement, &truth, &RandomSource::new(1)).unwrap();
            let rate = r.error_rate();
            assert!(rate == 0.0 || rate == 1.0);
            let consistent = (expected_max(kind, &a, 5).unwrap() > expected_max(kind, &b, 5).unwrap()) == (truth.better == Side::A);
            assert_eq!(rate == 0.0, consistent);
        }
    }

    #[test]
    fn swapping_labels_mirrors_draws() {
        let a = pool(&(0..25).map(|i| (i as f64 * 0.71).sin()).collect::<Vec<_>>());
        let b = pool(&(0..20).map(|i| (i as f64 * 0.53).cos()).collect::<Vec<_>>());
        let rng = RandomSource::new(12);
        let t_ab = determine_truth(&a, &b, 6, None).unwrap();
        let t_ba = determine_truth(&b, &a, 6, None).unwrap();
        assert_eq!(t_ab.better, t_ba.better.other());
        for sampling in [Sampling::WithReplacement, Sampling::WithoutReplacement] {
            for kind in EstimatorKind::ALL {
                let x = incorrect_conclusion_rate(&a, &b, kind, 6, 3000, sampling, &t_ab, &rng).unwrap();
                let y = incorrect_conclusion_rate(&b, &a, kind, 6, 3000, sampling, &t_ba, &rng).unwrap();
                assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn report_rows_match_single_calls() {
        let a = pool(&(0..40).map(|i| 0.5 + 0.01 * ((i * 13) % 17) as f64).collect::<Vec<_>>());
        let b = pool(&(0..40).map(|i| 0.52 + 0.008 * ((i * 7) % 19) as f64).collect::<Vec<_>>());
        let config = ComparisonConfig { budgets: vec![5, 9], resamples: 2_000, ..Default::default() };
        let rng = RandomSource::new(4);
        let report = comparison_report(&a, &b, &config, &rng).unwrap();
        assert_eq!(report.rates.len(), 6);
        for bt in &report.truths {
            for kind in [Combinations, Strings, Multisets] {
                let single = incorrect_conclusion_rate(&a, &b, kind, bt.budget, 2_000, config.sampling, &bt.truth, &rng.substream(bt.budget as u64)).unwrap();
                assert_eq!(report.rate(kind, bt.budget), Some(&single));
            }
        }
        let empty = comparison_report(&a, &b, &ComparisonConfig { budgets: vec![], ..config.clone() }, &rng).unwrap();
        assert!(empty.rates.is_empty());
        assert!(comparison_report(&a, &a, &config, &rng).is_err());
    }
}
