//! Synthetic bias / variance / MSE study of the three estimators.
//!
//! A large bag of scores stands in for the unknown score distribution. The
//! ground-truth curve is the Monte-Carlo average maximum of `n` draws from the
//! bag; each estimator is then evaluated on many size-`B` pools drawn from the
//! same bag.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::combinatorics::EstimatorKind;
use crate::estimators::{ScorePool, WeightTable};
use crate::error::{invalid, EvpError, Result};
use crate::par;
use crate::rng::RandomSource;

/// Truth repetitions per random stream.
const TRUTH_BLOCK: usize = 1024;
/// Trials per deterministic reduction chunk.
const TRIAL_CHUNK: usize = 64;
/// Below this acceptance rate the truncation region is treated as empty.
const MIN_ACCEPTANCE: f64 = 1e-6;
const MIN_ATTEMPTS_BEFORE_GIVING_UP: u64 = 1_000_000;

const TAG_FIRST_STAGE: u64 = 0;
const TAG_SUBSAMPLE: u64 = 1;
const TAG_TRUTH: u64 = 0;
const TAG_TRIALS: u64 = 1;

/// Whether repeated draws may pick the same element twice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    WithReplacement,
    WithoutReplacement,
}

/// Normal(`mu`, `sigma`) restricted to `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedNormal {
    pub mu: f64,
    pub sigma: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Default for TruncatedNormal {
    fn default() -> Self {
        Self {
            mu: 0.6,
            sigma: 0.07,
            lo: 0.0,
            hi: 1.0,
        }
    }
}

impl TruncatedNormal {
    fn validate(&self) -> Result<()> {
        let finite = [self.mu, self.sigma, self.lo, self.hi].iter().all(|v| v.is_finite());
        if !finite {
            return Err(invalid("truncated normal parameters must be finite"));
        }
        if self.sigma <= 0.0 {
            return Err(invalid(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.lo >= self.hi {
            return Err(invalid(format!(
                "truncation interval [{}, {}] is empty",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Finite multiset of scores used in place of the score distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueBag {
    values: Vec<f64>,
}

impl ValueBag {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("value bag is empty"));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(EvpError::NonFinite { index, value });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    fn draw_into<R: Rng>(&self, rng: &mut R, count: usize, sampling: Sampling, out: &mut Vec<f64>) {
        out.clear();
        match sampling {
            Sampling::WithReplacement => {
                let len = self.values.len();
                out.extend((0..count).map(|_| self.values[rng.random_range(0..len)]));
            }
            Sampling::WithoutReplacement => {
                out.extend(index::sample(rng, self.values.len(), count).into_iter().map(|i| self.values[i]));
            }
        }
    }

    fn check_draw(&self, count: usize, sampling: Sampling) -> Result<()> {
        if sampling == Sampling::WithoutReplacement && count > self.len() {
            return Err(invalid(format!(
                "cannot draw {count} values without replacement from a bag of {}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// `count` i.i.d. draws from a truncated normal, by rejection from the
/// untruncated normal.
pub fn sample_truncated_normal(
    params: &TruncatedNormal,
    count: usize,
    rng: &RandomSource,
) -> Result<ValueBag> {
    params.validate()?;
    if count == 0 {
        return Err(invalid("count must be at least 1"));
    }
    let normal = Normal::new(params.mu, params.sigma).map_err(|e| invalid(e.to_string()))?;
    let mut rng = rng.rng();
    let mut values = Vec::with_capacity(count);
    let mut attempts = 0u64;
    while values.len() < count {
        let x = normal.sample(&mut rng);
        attempts += 1;
        if (params.lo..=params.hi).contains(&x) {
            values.push(x);
        } else if attempts >= MIN_ATTEMPTS_BEFORE_GIVING_UP
            && (values.len() as f64) < MIN_ACCEPTANCE * attempts as f64
        {
            return Err(EvpError::PathologicalTruncation {
                lo: params.lo,
                hi: params.hi,
                accepted: values.len() as u64,
                attempts,
            });
        }
    }
    ValueBag::new(values)
}

/// Draws `source_count` values, then keeps `subsample_count` of them.
pub fn build_bag_two_stage(
    source_count: usize,
    subsample_count: usize,
    params: &TruncatedNormal,
    subsample: Sampling,
    rng: &RandomSource,
) -> Result<ValueBag> {
    if subsample_count == 0 {
        return Err(invalid("subsample count must be at least 1"));
    }
    if subsample_count > source_count {
        return Err(invalid(format!(
            "subsample count {subsample_count} exceeds source count {source_count}"
        )));
    }
    let source = sample_truncated_normal(params, source_count, &rng.substream(TAG_FIRST_STAGE))?;
    let mut out = Vec::with_capacity(subsample_count);
    source.draw_into(&mut rng.substream(TAG_SUBSAMPLE).rng(), subsample_count, subsample, &mut out);
    ValueBag::new(out)
}

/// A Monte-Carlo mean together with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Average maximum of `reps` samples of size `n` drawn with replacement from `bag`.
pub fn mc_true_evp(bag: &ValueBag, n: usize, reps: usize, rng: &RandomSource) -> Result<McEstimate> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    if reps == 0 {
        return Err(invalid("reps must be at least 1"));
    }
    let blocks = reps.div_ceil(TRUTH_BLOCK);
    let partial = par::map_range(blocks, |blk| {
        let mut rng = rng.substream(blk as u64).rng();
        let len = bag.len();
        let count = TRUTH_BLOCK.min(reps - blk * TRUTH_BLOCK);
        let mut acc = Welford::default();
        for _ in 0..count {
            let mut best = f64::NEG_INFINITY;
            for _ in 0..n {
                best = best.max(bag.values[rng.random_range(0..len)]);
            }
            acc.push(best);
        }
        acc
    });
    let acc = partial.into_iter().fold(Welford::default(), Welford::merge);
    Ok(McEstimate {
        mean: acc.mean,
        std_error: (acc.population_variance() / reps as f64).sqrt(),
    })
}

/// Across-trial mean and sample variance of one estimator at one `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
}

/// Mean and variance (denominator `trials - 1`) of `kind`'s estimate, for each
/// `n` in `1..=b`, over `trials` pools of size `b` drawn from the bag.
pub fn estimator_sampling_moments(
    bag: &ValueBag,
    kind: EstimatorKind,
    b: usize,
    trials: usize,
    sampling: Sampling,
    rng: &RandomSource,
) -> Result<Vec<Moments>> {
    check_trials(bag, b, trials, sampling)?;
    let cells = run_trials(bag, &[kind], b, trials, sampling, None, rng)?;
    Ok(cells
        .iter()
        .enumerate()
        .map(|(i, c)| Moments {
            n: i + 1,
            mean: c.stats.mean,
            variance: c.stats.sample_variance(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    #[serde(rename = "B")]
    pub b: usize,
    pub trials: usize,
    pub truth_reps: usize,
    pub sampling: Sampling,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            b: 30,
            trials: 10_000,
            truth_reps: 50_000,
            sampling: Sampling::WithReplacement,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthPoint {
    pub n: usize,
    pub mean: f64,
    pub std_error: f64,
}

/// One (estimator, n) cell of a simulation report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationCell {
    pub n: usize,
    pub estimator: EstimatorKind,
    /// Across-trial mean of the estimate.
    pub mean: f64,
    /// `mean - truth`.
    pub bias: f64,
    /// Across-trial sample variance (denominator `trials - 1`).
    pub variance: f64,
    /// `bias^2` plus the population variance (denominator `trials`).
    pub mse: f64,
    /// Mean squared error accumulated trial by trial.
    pub mse_direct: f64,
    /// Standard error of `bias`, combining trial noise and truth noise.
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    #[serde(rename = "B")]
    pub b: usize,
    pub trials: usize,
    pub truth_reps: usize,
    pub truth: Vec<TruthPoint>,
    /// Grouped by estimator (`u`, `v`, `w`), then ordered by `n`.
    pub cells: Vec<SimulationCell>,
}

impl SimulationReport {
    pub fn cell(&self, kind: EstimatorKind, n: usize) -> Option<&SimulationCell> {
        self.cells.iter().find(|c| c.estimator == kind && c.n == n)
    }

    /// Largest relative gap between the two MSE computations.
    pub fn mse_discrepancy(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| (c.mse - c.mse_direct).abs() / c.mse.abs().max(c.mse_direct.abs()).max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Ground truth, estimator moments, bias, variance and MSE for all three kinds.
pub fn bias_variance_mse_report(
    bag: &ValueBag,
    config: &SimulationConfig,
    rng: &RandomSource,
) -> Result<SimulationReport> {
    check_trials(bag, config.b, config.trials, config.sampling)?;
    if config.truth_reps == 0 {
        return Err(invalid("truth reps must be at least 1"));
    }
    let truth_root = rng.substream(TAG_TRUTH);
    let truth = (1..=config.b)
        .map(|n| {
            mc_true_evp(bag, n, config.truth_reps, &truth_root.substream(n as u64))
                .map(|e| TruthPoint { n, mean: e.mean, std_error: e.std_error })
        })
        .collect::<Result<Vec<_>>>()?;
    let truth_means: Vec<f64> = truth.iter().map(|t| t.mean).collect();

    let cells = run_trials(
        bag,
        &EstimatorKind::ALL,
        config.b,
        config.trials,
        config.sampling,
        Some(&truth_means),
        rng,
    )?;
    let trials = config.trials as f64;
    let cells = cells
        .into_iter()
        .enumerate()
        .map(|(idx, acc)| {
            let n = idx % config.b + 1;
            let kind = EstimatorKind::ALL[idx / config.b];
            let t = &truth[n - 1];
            let bias = acc.stats.mean - t.mean;
            let variance = acc.stats.sample_variance();
            SimulationCell {
                n,
                estimator: kind,
                mean: acc.stats.mean,
                bias,
                variance,
                mse: bias * bias + acc.stats.population_variance(),
                mse_direct: acc.sq_err / trials,
                stderr: (variance / trials + t.std_error * t.std_error).sqrt(),
            }
        })
        .collect();
    Ok(SimulationReport {
        b: config.b,
        trials: config.trials,
        truth_reps: config.truth_reps,
        truth,
        cells,
    })
}

fn check_trials(bag: &ValueBag, b: usize, trials: usize, sampling: Sampling) -> Result<()> {
    if b == 0 {
        return Err(invalid("budget B must be at least 1"));
    }
    if trials < 2 {
        return Err(invalid(format!(
            "trials = {trials}: estimator variance is undefined below 2 trials"
        )));
    }
    bag.check_draw(b, sampling)
}

#[derive(Debug, Clone, Copy, Default)]
struct CellAcc {
    stats: Welford,
    sq_err: f64,
}

// Cells come back kind-major: index = kind_position * b + (n - 1).
fn run_trials(
    bag: &ValueBag,
    kinds: &[EstimatorKind],
    b: usize,
    trials: usize,
    sampling: Sampling,
    truth: Option<&[f64]>,
    rng: &RandomSource,
) -> Result<Vec<CellAcc>> {
    let tables = kinds
        .iter()
        .map(|&k| WeightTable::new(k, b))
        .collect::<Result<Vec<_>>>()?;
    let trial_root = rng.substream(TAG_TRIALS);
    let chunks = trials.div_ceil(TRIAL_CHUNK);
    let partial = par::map_range(chunks, |chunk| {
        let mut cells = vec![CellAcc::default(); kinds.len() * b];
        let mut draw = Vec::with_capacity(b);
        let start = chunk * TRIAL_CHUNK;
        for trial in start..(start + TRIAL_CHUNK).min(trials) {
            let mut trng = trial_root.substream(trial as u64).rng();
            bag.draw_into(&mut trng, b, sampling, &mut draw);
            draw.sort_by(f64::total_cmp);
            let pool = ScorePool::from_sorted_unchecked(std::mem::take(&mut draw));
            for (k, table) in tables.iter().enumerate() {
                for n in 1..=b {
                    let est = table.mean(&pool, n);
                    let cell = &mut cells[k * b + n - 1];
                    cell.stats.push(est);
                    if let Some(t) = truth {
                        let e = est - t[n - 1];
                        cell.sq_err += e * e;
                    }
                }
            }
            draw = pool.into_sorted();
        }
        cells
    });
    let mut total = vec![CellAcc::default(); kinds.len() * b];
    for chunk in partial {
        for (acc, part) in total.iter_mut().zip(chunk) {
            acc.stats = acc.stats.merge(part.stats);
            acc.sq_err += part.sq_err;
        }
    }
    Ok(total)
}

/// Streaming mean and second central moment.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Welford) -> Welford {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        let w = other.count as f64 / count as f64;
        Welford {
            count,
            mean: self.mean + d * w,
            m2: self.m2 + other.m2 + d * d * self.count as f64 * w,
        }
    }

    fn population_variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.m2 / self.count as f64
        }
    }

    fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}
