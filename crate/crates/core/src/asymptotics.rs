//! Finite surrogates for limits at infinity.
//!
//! A sampled quantity `R(t)` is declared to tend to zero when its tail (the
//! last half of a geometric grid) is strictly decreasing and either falls
//! below a tolerance or extrapolates to (nearly) zero. The extrapolation
//! fits `R` linearly against `x = 1/ln(ln t)` and reads the intercept at
//! `x = 0`; this variable resolves decay as slow as `1/ln(ln t)`, which a
//! plain threshold on any reachable grid cannot.

use serde::{Deserialize, Serialize};

/// `n` geometrically spaced points from `lo` to `hi` (both included).
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2, "invalid geometric grid [{lo}, {hi}] with {n} points");
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitVerdict {
    pub pass: bool,
    pub tail_monotone: bool,
    pub last_value: f64,
    /// Intercept of the tail fit at `t = ∞` (NaN when the grid is too short).
    pub extrapolated: f64,
    pub witness_t: f64,
    pub witness_value: f64,
}

/// Intercept share below which an extrapolated limit counts as zero.
pub const INTERCEPT_FRACTION: f64 = 0.05;

/// Decide whether the samples `values[i] = R(t[i])` tend to zero as `t → ∞`.
/// `t` must be increasing.
pub fn decays_to_zero(t: &[f64], values: &[f64], tol: f64) -> LimitVerdict {
    assert_eq!(t.len(), values.len(), "grid and samples differ in length");
    assert!(t.len() >= 4, "need at least 4 samples");
    let start = t.len() / 2;
    let tail_t = &t[start..];
    let tail = &values[start..];
    let last = *tail.last().unwrap();

    let mut witness = (t.len() - 1, last);
    let mut tail_monotone = true;
    for i in 1..tail.len() {
        let decreasing = tail[i] < tail[i - 1] || (tail[i] == 0.0 && tail[i - 1] == 0.0);
        if !decreasing || !tail[i].is_finite() {
            tail_monotone = false;
            witness = (start + i, tail[i]);
            break;
        }
    }

    let extrapolated = if tail_t[0] > std::f64::consts::E.exp() {
        let xs: Vec<f64> = tail_t.iter().map(|v| 1.0 / v.ln().ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = tail.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(tail).map(|(x, y)| (x - mx) * (y - my)).sum();
        my - sxy / sxx * mx
    } else {
        f64::NAN
    };

    let small = last.abs() < tol || extrapolated <= INTERCEPT_FRACTION * tail[0].abs();
    LimitVerdict {
        pass: tail_monotone && small,
        tail_monotone,
        last_value: last,
        extrapolated,
        witness_t: t[witness.0],
        witness_value: witness.1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(ln_r: impl Fn(f64) -> f64) -> LimitVerdict {
        let t = geometric_grid(1.0, 1e300, 200);
        let v: Vec<f64> = t.iter().map(|&x| ln_r(x.ln()).exp()).collect();
        decays_to_zero(&t, &v, 1e-4)
    }

    #[test]
    fn grid_endpoints_exact() {
        let g = geometric_grid(1e-3, 1e5, 9);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[8], 1e5);
        assert!((g[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slow_decay_passes() {
        // 1/ln(e+t) and 1/ln(e+ln(1+t))
        assert!(verdict(|l| -(std::f64::consts::E + l.exp()).ln().ln()).pass);
        assert!(verdict(|l| -(std::f64::consts::E + l.exp().ln_1p()).ln().ln()).pass);
        assert!(verdict(|l| -0.5 * l).pass);
    }

    #[test]
    fn nonzero_limits_fail() {
        assert!(!verdict(|_| 0.0).pass);
        // 0.3 + 1/ln t
        assert!(!verdict(|l| (0.3 + 1.0 / l.max(1.0)).ln()).pass);
        // 0.3 + 1/ln ln t
        assert!(!verdict(|l| (0.3 + 1.0 / l.max(2.0).ln()).ln()).pass);
    }

    #[test]
    fn increasing_tail_reports_witness() {
        let v = verdict(|l| 0.1 * l);
        assert!(!v.pass);
        assert!(!v.tail_monotone);
        assert!(v.witness_t > 1e150);
    }
}
