//! Binomial confidence intervals and summary statistics.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::statistics::Statistics;

use crate::error::{Error, Result};

/// Quantile of `Beta(a, b)` by bisection on the regularized incomplete beta.
pub fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Equal-tailed Jeffreys interval: `Beta(s + ½, f + ½)` quantiles, with the
/// lower end pinned to 0 when `s = 0` and the upper end to 1 when `f = 0`.
pub fn jeffreys_interval(successes: usize, trials: usize, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return Err(Error::Domain(format!("need 0 <= successes <= trials, trials >= 1; got {successes}/{trials}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Domain(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let a = successes as f64 + 0.5;
    let b = (trials - successes) as f64 + 0.5;
    let tail = 0.5 * (1.0 - confidence);
    let lo = if successes == 0 { 0.0 } else { beta_quantile(a, b, tail) };
    let hi = if successes == trials { 1.0 } else { beta_quantile(a, b, 1.0 - tail) };
    Ok((lo, hi))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
    pub count: usize,
}

/// Mean and sample standard deviation; NaN fields for empty input, `sd = 0`
/// for a single value.
pub fn mean_sd(values: &[f64]) -> MeanSd {
    let count = values.len();
    let mean = if count == 0 { f64::NAN } else { values.mean() };
    let sd = match count {
        0 => f64::NAN,
        1 => 0.0,
        _ => values.std_dev(),
    };
    MeanSd { mean, sd, count }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_rules() {
        assert_eq!(jeffreys_interval(10, 10, 0.95).unwrap().1, 1.0);
        assert_eq!(jeffreys_interval(0, 10, 0.95).unwrap().0, 0.0);
        assert!(jeffreys_interval(3, 2, 0.95).is_err());
        assert!(jeffreys_interval(0, 0, 0.95).is_err());
        assert!(jeffreys_interval(1, 2, 1.0).is_err());
    }

    #[test]
    fn ordered_bounds() {
        for t in 1..=20 {
            for s in 0..=t {
                let (lo, hi) = jeffreys_interval(s, t, 0.95).unwrap();
                assert!(0.0 <= lo && lo <= hi && hi <= 1.0);
                let p = s as f64 / t as f64;
                assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn summary() {
        let s = mean_sd(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.sd - 1.0).abs() < 1e-15);
        assert!(mean_sd(&[]).mean.is_nan());
        assert_eq!(mean_sd(&[4.0]).sd, 0.0);
    }
}
