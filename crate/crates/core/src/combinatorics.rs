//! Cumulative order-statistic weights under the three counting models.
//!
//! Every ratio `C(i, n) / C(B, n)` is evaluated as a product of per-factor
//! fractions, each in `[0, 1]`, so no factorial or binomial coefficient is
//! ever formed and nothing overflows for large `B`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, EvpError, Result};

/// How size-`n` selections from `B` trials are counted.
///
/// Ordered selections without repetition (permutations) give exactly the same
/// ratios as [`EstimatorKind::Combinations`], so they have no variant of their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorKind {
    /// Ordered with repetition; the empirical-CDF plug-in estimator (`V`).
    #[serde(rename = "v")]
    Strings,
    /// Unordered without repetition; the unbiased estimator (`U`).
    #[serde(rename = "u")]
    Combinations,
    /// Unordered with repetition (`W`).
    #[serde(rename = "w")]
    Multisets,
}

impl EstimatorKind {
    /// All kinds, in the order `u, v, w`.
    pub const ALL: [EstimatorKind; 3] = [
        EstimatorKind::Combinations,
        EstimatorKind::Strings,
        EstimatorKind::Multisets,
    ];

    /// Short selector used on the command line and in output files.
    pub fn symbol(self) -> &'static str {
        match self {
            EstimatorKind::Strings => "v",
            EstimatorKind::Combinations => "u",
            EstimatorKind::Multisets => "w",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for EstimatorKind {
    type Err = EvpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "v" | "strings" => Ok(EstimatorKind::Strings),
            "u" | "combinations" | "permutations" => Ok(EstimatorKind::Combinations),
            "w" | "multisets" => Ok(EstimatorKind::Multisets),
            other => Err(invalid(format!("unknown estimator `{other}`"))),
        }
    }
}

pub(crate) fn check_budget(n: usize, b: usize) -> Result<()> {
    if b == 0 {
        return Err(invalid("budget B must be at least 1"));
    }
    if n == 0 || n > b {
        return Err(invalid(format!("n = {n} must lie in 1..={b}")));
    }
    Ok(())
}

/// `P(Y_n <= X_(i))` under the counting model of `kind`.
///
/// `i` ranges over `0..=b` (`i = 0` is the empty prefix), `n` over `1..=b`.
/// The result is exactly `0.0` at `i = 0` and exactly `1.0` at `i = b`.
pub fn cumulative_ratio(kind: EstimatorKind, i: usize, n: usize, b: usize) -> Result<f64> {
    check_budget(n, b)?;
    if i > b {
        return Err(invalid(format!("order index i = {i} exceeds B = {b}")));
    }
    Ok(cumulative_ratio_unchecked(kind, i, n, b))
}

pub(crate) fn cumulative_ratio_unchecked(kind: EstimatorKind, i: usize, n: usize, b: usize) -> f64 {
    debug_assert!(i <= b && (1..=b).contains(&n));
    if i == 0 {
        return 0.0;
    }
    if i == b {
        return 1.0;
    }
    match kind {
        EstimatorKind::Strings => pow_by_squaring(i as f64 / b as f64, n),
        EstimatorKind::Combinations => {
            if i < n {
                return 0.0;
            }
            (0..n).fold(1.0, |acc, j| acc * ((i - j) as f64 / (b - j) as f64))
        }
        EstimatorKind::Multisets => {
            (0..n).fold(1.0, |acc, j| acc * ((i + j) as f64 / (b + j) as f64))
        }
    }
}

fn pow_by_squaring(mut base: f64, mut exp: usize) -> f64 {
    let mut acc = 1.0;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base *= base;
        exp >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Exact binomial coefficient; fine for the small arguments used here.
    fn binom(n: u128, k: u128) -> u128 {
        if k > n {
            return 0;
        }
        (0..k).fold(1u128, |acc, j| acc * (n - j) / (j + 1))
    }

    #[test]
    fn documented_values() {
        use EstimatorKind::*;
        assert_eq!(cumulative_ratio(Strings, 2, 3, 4).unwrap(), 0.125);
        assert!((cumulative_ratio(Combinations, 3, 2, 4).unwrap() - 0.5).abs() < 1e-15);
        assert!((cumulative_ratio(Multisets, 1, 2, 4).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(cumulative_ratio(Combinations, 1, 2, 4).unwrap(), 0.0);
        for kind in EstimatorKind::ALL {
            for b in 1..30 {
                for n in 1..=b {
                    assert_eq!(cumulative_ratio(kind, b, n, b).unwrap(), 1.0);
                    assert_eq!(cumulative_ratio(kind, 0, n, b).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn rejects_out_of_range() {
        use EstimatorKind::*;
        assert!(cumulative_ratio(Strings, 5, 2, 4).is_err());
        assert!(cumulative_ratio(Strings, 1, 0, 4).is_err());
        assert!(cumulative_ratio(Multisets, 1, 5, 4).is_err());
        assert!(cumulative_ratio(Combinations, 0, 1, 0).is_err());
    }

    #[test]
    fn falling_factorial_matches_exact_binomials() {
        for b in 1..=20usize {
            for n in 1..=b {
                for i in 0..=b {
                    let exact = binom(i as u128, n as u128) as f64 / binom(b as u128, n as u128) as f64;
                    let got = cumulative_ratio(EstimatorKind::Combinations, i, n, b).unwrap();
                    if exact == 0.0 {
                        assert_eq!(got, 0.0);
                    } else {
                        assert!(((got - exact) / exact).abs() < 1e-12, "i={i} n={n} b={b}");
                    }
                    let exact_w = binom((i + n - 1) as u128, n as u128) as f64
                        / binom((b + n - 1) as u128, n as u128) as f64;
                    let got_w = cumulative_ratio(EstimatorKind::Multisets, i, n, b).unwrap();
                    if exact_w == 0.0 {
                        assert_eq!(got_w, 0.0);
                    } else {
                        assert!(((got_w - exact_w) / exact_w).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn parses_selectors() {
        assert_eq!("U".parse::<EstimatorKind>().unwrap(), EstimatorKind::Combinations);
        assert_eq!("permutations".parse::<EstimatorKind>().unwrap(), EstimatorKind::Combinations);
        assert_eq!("w".parse::<EstimatorKind>().unwrap(), EstimatorKind::Multisets);
        assert!("x".parse::<EstimatorKind>().is_err());
    }

    fn admissible() -> impl Strategy<Value = (usize, usize, usize)> {
        (1usize..300).prop_flat_map(|b| (Just(b), 1..=b, 0..b))
    }

    proptest! {
        #[test]
        fn ratio_is_a_monotone_cdf((b, n, i) in admissible()) {
            for kind in EstimatorKind::ALL {
                let lo = cumulative_ratio(kind, i, n, b).unwrap();
                let hi = cumulative_ratio(kind, i + 1, n, b).unwrap();
                prop_assert!((0.0..=1.0).contains(&lo));
                prop_assert!(lo <= hi);
                if n < b {
                    prop_assert!(cumulative_ratio(kind, i, n + 1, b).unwrap() <= lo);
                }
            }
        }
    }
}
