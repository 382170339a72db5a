//! Brute-force oracles shared by the integration tests. None of these touch the
//! weight formulas: they enumerate selections directly.

#![allow(dead_code)]

use evp_core::EstimatorKind;

/// Visits every length-`n` index sequence over `0..b` admitted by `kind`:
/// all tuples (strings), strictly increasing (combinations) or
/// non-decreasing (multisets).
pub fn for_each_selection(kind: EstimatorKind, b: usize, n: usize, mut visit: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; n];
    fn rec(kind: EstimatorKind, b: usize, pos: usize, idx: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if pos == idx.len() {
            visit(idx);
            return;
        }
        let start = match (kind, pos) {
            (_, 0) | (EstimatorKind::Strings, _) => 0,
            (EstimatorKind::Combinations, _) => idx[pos - 1] + 1,
            (EstimatorKind::Multisets, _) => idx[pos - 1],
        };
        for i in start..b {
            idx[pos] = i;
            rec(kind, b, pos + 1, idx, visit);
        }
    }
    rec(kind, b, 0, &mut idx, &mut visit);
}

/// Mean and variance of the maximum over every admissible selection from `xs`.
///
/// Selections are tallied by the sorted position of their maximum in exact
/// integer counts, so long enumerations add no rounding of their own.
pub fn enumerated_moments(kind: EstimatorKind, xs: &[f64], n: usize) -> (f64, f64) {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tally = vec![0u64; sorted.len()];
    for_each_selection(kind, sorted.len(), n, |sel| {
        tally[*sel.iter().max().unwrap()] += 1;
    });
    let total = tally.iter().sum::<u64>() as f64;
    let mean = tally.iter().zip(&sorted).map(|(&c, x)| c as f64 * x).sum::<f64>() / total;
    let var = tally.iter().zip(&sorted).map(|(&c, x)| c as f64 * (x - mean) * (x - mean)).sum::<f64>() / total;
    (mean, var)
}

/// Exact binomial coefficient for small arguments.
pub fn binom(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, j| acc * (n - j) / (j + 1))
}

pub fn population_variance(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Prints one verdict line and fails the test when `ok` is false.
pub fn verdict(id: &str, ok: bool, detail: impl AsRef<str>) {
    println!("[{}] {id}: {}", if ok { "PASS" } else { "FAIL" }, detail.as_ref());
    assert!(ok, "{id} failed: {}", detail.as_ref());
}
