//! The nonlinearity `f`, its primitive `F`, the limit function `g₀`, the
//! constant `C₀`, the function `h` of the L∞ estimate, and sampling checkers
//! for the growth hypotheses at infinity and at zero.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{decays_to_zero, geometric_grid, LimitVerdict};
use crate::error::{Error, Result};
use crate::quadrature::integrate_adaptive;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearityKind {
    /// `s^{p*-1} / ln(e+s)^β`
    LogDampedPower { beta: f64 },
    /// `s^{p*-1} / ln(e+ln(1+s))^β`
    IteratedLogPower { beta: f64 },
    /// `s^{q-1}`
    PurePower { q: f64 },
    /// Linear interpolation of `(s, f)` samples starting at `(0, 0)`,
    /// continued beyond the table by the last log-log slope.
    Custom { s: Vec<f64>, f: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    pub p_star: f64,
    #[serde(default = "one")]
    pub s0: f64,
    #[serde(default = "one")]
    pub c0: f64,
}

fn one() -> f64 {
    1.0
}

/// Critical Sobolev exponent `Np/(N-p)`.
pub fn critical_exponent(dim: usize, p: f64) -> Result<f64> {
    let n = dim as f64;
    if !(p > 1.0) || n <= p {
        return Err(Error::config(format!("need 1 < p < N for p*, got p = {p}, N = {dim}")));
    }
    Ok(n * p / (n - p))
}

impl Nonlinearity {
    pub fn new(kind: NonlinearityKind, p_star: f64) -> Result<Self> {
        let f = Nonlinearity { kind, p_star, s0: 1.0, c0: 1.0 };
        f.validate()?;
        Ok(f)
    }

    pub fn log_damped(p_star: f64, beta: f64) -> Result<Self> {
        Self::new(NonlinearityKind::LogDampedPower { beta }, p_star)
    }

    pub fn iterated_log(p_star: f64, beta: f64) -> Result<Self> {
        Self::new(NonlinearityKind::IteratedLogPower { beta }, p_star)
    }

    pub fn pure_power(p_star: f64, q: f64) -> Result<Self> {
        Self::new(NonlinearityKind::PurePower { q }, p_star)
    }

    pub fn custom(p_star: f64, s: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        Self::new(NonlinearityKind::Custom { s, f }, p_star)
    }

    pub fn with_threshold(mut self, s0: f64, c0: f64) -> Self {
        self.s0 = s0;
        self.c0 = c0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_star > 1.0 && self.p_star.is_finite()) {
            return Err(Error::config(format!("p* must be finite and > 1, got {}", self.p_star)));
        }
        if !(self.s0 > 0.0) {
            return Err(Error::config("s0 must be positive"));
        }
        match &self.kind {
            NonlinearityKind::LogDampedPower { beta } | NonlinearityKind::IteratedLogPower { beta } => {
                if !(*beta > 0.0) {
                    return Err(Error::config(format!("beta must be positive, got {beta}")));
                }
            }
            NonlinearityKind::PurePower { q } => {
                if !(*q > 1.0 && *q <= self.p_star) {
                    return Err(Error::config(format!("pure power needs 1 < q <= p*, got q = {q}")));
                }
            }
            NonlinearityKind::Custom { s, f } => {
                if s.len() < 2 || s.len() != f.len() {
                    return Err(Error::config("custom table needs at least 2 samples of equal length"));
                }
                if s[0] != 0.0 || f[0] != 0.0 {
                    return Err(Error::config("custom table must start at (0, 0)"));
                }
                if s.windows(2).any(|w| !(w[1] > w[0])) || f.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config("custom table abscissae must be strictly increasing"));
                }
            }
        }
        Ok(())
    }

    /// Exponent check against the operator's `p`: pure powers need `p < q`.
    pub fn check_against_p(&self, p: f64) -> Result<()> {
        if let NonlinearityKind::PurePower { q } = self.kind {
            if q <= p {
                return Err(Error::config(format!("pure power needs p < q, got q = {q}, p = {p}")));
            }
        }
        Ok(())
    }

    fn table_tail(s: &[f64], f: &[f64]) -> Option<f64> {
        let n = s.len();
        let (f0, f1) = (f[n - 2], f[n - 1]);
        (s[n - 2] > 0.0 && f0 > 0.0 && f1 > 0.0).then(|| (f1 / f0).ln() / (s[n - 1] / s[n - 2]).ln())
    }

    /// `f(s)` for `s ≥ 0`.
    ///
    /// # Panics
    /// For negative `s`.
    pub fn f(&self, s: f64) -> f64 {
        assert!(s >= 0.0, "f is evaluated on s >= 0 only, got {s}");
        if s == 0.0 {
            return 0.0;
        }
        match &self.kind {
            NonlinearityKind::Custom { s: xs, f: fs } => {
                let n = xs.len();
                if s >= xs[n - 1] {
                    match Self::table_tail(xs, fs) {
                        Some(k) => fs[n - 1] * (s / xs[n - 1]).powf(k),
                        None => fs[n - 1] + (fs[n - 1] - fs[n - 2]) / (xs[n - 1] - xs[n - 2]) * (s - xs[n - 1]),
                    }
                } else {
                    let i = xs.partition_point(|&x| x <= s) - 1;
                    let w = (s - xs[i]) / (xs[i + 1] - xs[i]);
                    fs[i] + w * (fs[i + 1] - fs[i])
                }
            }
            _ => self.ln_f(s).exp(),
        }
    }

    /// `ln f(s)`; `-∞` at `s = 0` and NaN where a custom table is non-positive.
    pub fn ln_f(&self, s: f64) -> f64 {
        assert!(s >= 0.0, "f is evaluated on s >= 0 only, got {s}");
        let k = self.p_star - 1.0;
        match &self.kind {
            NonlinearityKind::LogDampedPower { beta } => k * s.ln() - beta * (E + s).ln().ln(),
            NonlinearityKind::IteratedLogPower { beta } => k * s.ln() - beta * (E + s.ln_1p()).ln().ln(),
            NonlinearityKind::PurePower { q } => (q - 1.0) * s.ln(),
            NonlinearityKind::Custom { s: xs, f: fs } => {
                let n = xs.len();
                if s > xs[n - 1] {
                    if let Some(k) = Self::table_tail(xs, fs) {
                        return fs[n - 1].ln() + k * (s / xs[n - 1]).ln();
                    }
                }
                let v = self.f(s);
                if v > 0.0 {
                    v.ln()
                } else if v == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    f64::NAN
                }
            }
        }
    }

    /// `f′(s)`: closed forms for the prototypes, segment slope for tables.
    pub fn df(&self, s: f64) -> f64 {
        assert!(s >= 0.0, "f is evaluated on s >= 0 only, got {s}");
        let k = self.p_star - 1.0;
        let power = |e: f64| -> f64 {
            if s == 0.0 {
                match e.partial_cmp(&0.0) {
                    Some(std::cmp::Ordering::Greater) => 0.0,
                    Some(std::cmp::Ordering::Equal) => 1.0,
                    _ => f64::INFINITY,
                }
            } else {
                s.powf(e)
            }
        };
        match &self.kind {
            NonlinearityKind::LogDampedPower { beta } => {
                let l = (E + s).ln();
                power(k - 1.0) / l.powf(*beta) * (k - beta * s / (l * (E + s)))
            }
            NonlinearityKind::IteratedLogPower { beta } => {
                let inner = E + s.ln_1p();
                let l = inner.ln();
                power(k - 1.0) / l.powf(*beta) * (k - beta * s / (l * inner * (1.0 + s)))
            }
            NonlinearityKind::PurePower { q } => (q - 1.0) * power(q - 2.0),
            NonlinearityKind::Custom { s: xs, f: fs } => {
                let n = xs.len();
                if s >= xs[n - 1] {
                    match Self::table_tail(xs, fs) {
                        Some(k) => k * self.f(s) / s,
                        None => (fs[n - 1] - fs[n - 2]) / (xs[n - 1] - xs[n - 2]),
                    }
                } else {
                    let i = xs.partition_point(|&x| x <= s) - 1;
                    (fs[i + 1] - fs[i]) / (xs[i + 1] - xs[i])
                }
            }
        }
    }

    /// `∫₀¹ f(su)/f(s) du`, so that `F(s) = s f(s) I(s)` and `s f/F = 1/I`.
    /// Only meaningful where `f > 0`.
    pub fn primitive_factor(&self, s: f64) -> Result<f64> {
        if let NonlinearityKind::PurePower { q } = self.kind {
            return Ok(1.0 / q);
        }
        let lfs = self.ln_f(s);
        if !lfs.is_finite() {
            return Err(Error::numerical(format!("primitive factor needs f(s) > 0, s = {s}")));
        }
        integrate_adaptive(|u| (self.ln_f(s * u) - lfs).exp(), 0.0, 1.0, 1e-12, 0.0)
    }

    /// Primitive `F(s) = ∫₀ˢ f`, relative accuracy 1e-10.
    pub fn primitive(&self, s: f64) -> Result<f64> {
        assert!(s >= 0.0, "F is evaluated on s >= 0 only, got {s}");
        if s == 0.0 {
            return Ok(0.0);
        }
        match &self.kind {
            NonlinearityKind::PurePower { q } => Ok(s.powf(*q) / q),
            NonlinearityKind::Custom { s: xs, f: fs } => Ok(self.table_primitive(xs, fs, s)),
            _ => Ok(s * self.f(s) * self.primitive_factor(s)?),
        }
    }

    /// `ln F(s)` without overflow, for `f > 0` on `(0, s]`.
    pub fn ln_primitive(&self, s: f64) -> Result<f64> {
        match &self.kind {
            NonlinearityKind::Custom { .. } => Ok(self.primitive(s)?.ln()),
            _ => Ok(s.ln() + self.ln_f(s) + self.primitive_factor(s)?.ln()),
        }
    }

    fn table_primitive(&self, xs: &[f64], fs: &[f64], s: f64) -> f64 {
        let n = xs.len();
        let mut acc = 0.0;
        for i in 0..n - 1 {
            if s <= xs[i] {
                return acc;
            }
            let b = s.min(xs[i + 1]);
            acc += 0.5 * (b - xs[i]) * (fs[i] + self.f(b));
        }
        if s > xs[n - 1] {
            acc += match Self::table_tail(xs, fs) {
                Some(k) if (k + 1.0).abs() > 1e-12 => fs[n - 1] * xs[n - 1] / (k + 1.0) * ((s / xs[n - 1]).powf(k + 1.0) - 1.0),
                Some(_) => fs[n - 1] * xs[n - 1] * (s / xs[n - 1]).ln(),
                None => 0.5 * (s - xs[n - 1]) * (fs[n - 1] + self.f(s)),
            };
        }
        acc
    }

    /// `f(a)/f(b)` evaluated in the log domain when both values are positive.
    pub fn ratio(&self, a: f64, b: f64) -> f64 {
        let (la, lb) = (self.ln_f(a), self.ln_f(b));
        if la.is_finite() && lb.is_finite() {
            (la - lb).exp()
        } else {
            self.f(a) / self.f(b)
        }
    }
}

/// Sampling grids for the hypothesis checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleControl {
    /// Large-s grid `[lo, hi]` for the hypotheses at infinity.
    pub large: (f64, f64),
    /// Small-s grid for the hypotheses at zero.
    pub small: (f64, f64),
    pub points: usize,
    /// τ range for the bound on `f(τs)/f(s)`.
    pub tau_bound: (f64, f64),
    /// Compact τ interval on which convergence to `g₀` is checked.
    pub tau_compact: (f64, f64),
    pub tail_tol: f64,
}

impl Default for SampleControl {
    fn default() -> Self {
        SampleControl {
            large: (1.0, 1e300),
            small: (1e-300, 1.0),
            points: 200,
            tau_bound: (1e-6, 1e6),
            tau_compact: (0.1, 10.0),
            tail_tol: 1e-4,
        }
    }
}

/// Verdict of one hypothesis with the sample that decided it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub pass: bool,
    pub witness_s: f64,
    pub witness_value: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub f1_subcritical: HypothesisCheck,
    pub f2_ratio: HypothesisCheck,
    pub f3_sublinear_at_zero: HypothesisCheck,
    pub f4_limit_at_zero: HypothesisCheck,
    /// Smallest `s f(s)/F(s)` over the sampled `s > s0`.
    pub certified_c0: f64,
    /// Sampled sup of `|f(τs)/f(s)|/(1+τ^{p*-1})` over `0 < s < 1`.
    pub c1_estimate: f64,
    /// `q - 1` with `g₀(τ) = τ^{q-1}`.
    pub g0_exponent: f64,
    pub limit_f1: LimitVerdict,
    pub limit_f3: LimitVerdict,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.f1_subcritical.pass && self.f2_ratio.pass && self.f3_sublinear_at_zero.pass && self.f4_limit_at_zero.pass
    }
}

pub fn check_hypotheses(f: &Nonlinearity, p: f64, ctrl: &SampleControl) -> Result<HypothesisReport> {
    let k = f.p_star - 1.0;

    // (f1): f(s)/s^{p*-1} → 0
    let large = geometric_grid(ctrl.large.0, ctrl.large.1, ctrl.points);
    let r1: Vec<f64> = large.iter().map(|&s| (f.ln_f(s) - k * s.ln()).exp()).collect();
    let limit_f1 = decays_to_zero(&large, &r1, ctrl.tail_tol);
    let f1 = HypothesisCheck {
        pass: limit_f1.pass,
        witness_s: limit_f1.witness_t,
        witness_value: limit_f1.witness_value,
        note: format!(
            "finite surrogate on [{:e}, {:e}]: tail monotone = {}, extrapolated limit {:.3e}",
            ctrl.large.0, ctrl.large.1, limit_f1.tail_monotone, limit_f1.extrapolated
        ),
    };

    // (f2): s f/F ≥ c0 > 1 and f nondecreasing beyond s0
    let rho = |s: f64| -> Result<f64> {
        Ok(match &f.kind {
            NonlinearityKind::Custom { .. } => s * f.f(s) / f.primitive(s)?,
            _ => 1.0 / f.primitive_factor(s)?,
        })
    };
    // 20 samples per decade up to 1e40, then the coarse large-s grid
    let dense_end = (f.s0 * 1e10).max(1e40);
    let decades = (dense_end / f.s0).log10().ceil() as usize;
    let mut beyond = geometric_grid(f.s0, dense_end, 20 * decades + 1);
    beyond.remove(0);
    beyond.extend(large.iter().copied().filter(|&s| s > dense_end));
    let mut certified_c0 = f64::INFINITY;
    let mut min_idx = 0;
    let mut decrease: Option<(f64, f64)> = None;
    let mut prev = f.ln_f(f.s0);
    for (i, &s) in beyond.iter().enumerate() {
        let r = rho(s)?;
        if r < certified_c0 {
            certified_c0 = r;
            min_idx = i;
        }
        let lf = f.ln_f(s);
        if decrease.is_none() && !(lf >= prev) {
            decrease = Some((s, f.f(s)));
        }
        prev = lf;
    }
    let mut min_at = beyond[min_idx];
    if min_idx + 1 < beyond.len() {
        let lo = if min_idx == 0 { f.s0 } else { beyond[min_idx - 1] };
        let (s, r) = golden_min(|x| rho(x.exp()).unwrap_or(f64::INFINITY), lo.ln(), beyond[min_idx + 1].ln());
        if r < certified_c0 {
            certified_c0 = r;
            min_at = s.exp();
        }
    }
    let f2 = match decrease {
        Some((s, v)) => HypothesisCheck {
            pass: false,
            witness_s: s,
            witness_value: v,
            note: "f decreases beyond s0".into(),
        },
        None => HypothesisCheck {
            pass: certified_c0 >= f.c0 && certified_c0 > 1.0,
            witness_s: min_at,
            witness_value: certified_c0,
            note: format!("min s f(s)/F(s) over s > {} is {certified_c0:.6}; required c0 = {}", f.s0, f.c0),
        },
    };

    // (f3): f > 0 near 0 and f(s)/s^{p-1} → 0
    let small = geometric_grid(ctrl.small.0, ctrl.small.1, ctrl.points);
    let inv: Vec<f64> = small.iter().rev().map(|s| 1.0 / s).collect();
    let r3: Vec<f64> = small.iter().rev().map(|&s| (f.ln_f(s) - (p - 1.0) * s.ln()).exp()).collect();
    let limit_f3 = decays_to_zero(&inv, &r3, ctrl.tail_tol);
    let nonpositive = small.iter().find(|&&s| !(f.ln_f(s) > f64::NEG_INFINITY));
    let f3 = match nonpositive {
        Some(&s) => HypothesisCheck {
            pass: false,
            witness_s: s,
            witness_value: f.f(s),
            note: "f is not positive near 0".into(),
        },
        None => HypothesisCheck {
            pass: limit_f3.pass,
            witness_s: 1.0 / limit_f3.witness_t,
            witness_value: limit_f3.witness_value,
            note: format!("f(s)/s^(p-1) on [{:e}, {:e}], extrapolated limit {:.3e}", ctrl.small.0, ctrl.small.1, limit_f3.extrapolated),
        },
    };

    // (f4): bound with C1, and convergence of f(τs)/f(s) on a compact τ set
    let taus = geometric_grid(ctrl.tau_bound.0, ctrl.tau_bound.1, 61);
    let s_grid = geometric_grid(1e-12, 0.999, 60);
    let mut c1 = 0.0f64;
    let mut c1_at = (0.0, 0.0);
    for &tau in &taus {
        let denom = 1.0 + tau.powf(k);
        for &s in &s_grid {
            let v = f.ratio(tau * s, s).abs() / denom;
            if !(v <= c1) {
                c1 = if v.is_nan() { f64::INFINITY } else { v };
                c1_at = (s, tau);
            }
        }
    }
    let compact = geometric_grid(ctrl.tau_compact.0, ctrl.tau_compact.1, 21);
    let mut worst_spread = 0.0f64;
    let mut worst_tau = compact[0];
    let mut g0_positive = true;
    for &tau in &compact {
        let seq: Vec<f64> = (8..=12).map(|e| f.ratio(tau * 10f64.powi(-e), 10f64.powi(-e))).collect();
        let last = *seq.last().unwrap();
        let spread = seq.iter().map(|v| (v - last).abs()).fold(0.0, f64::max) / last.abs();
        if !(spread <= worst_spread) {
            worst_spread = if spread.is_nan() { f64::INFINITY } else { spread };
            worst_tau = tau;
        }
        g0_positive &= last > 0.0;
    }
    let g0_exponent = g0_exponent(f)?;
    let bounded = c1.is_finite() && c1 < 1e12;
    let converged = worst_spread <= ctrl.tail_tol;
    let f4 = HypothesisCheck {
        pass: bounded && converged && g0_positive,
        witness_s: if bounded { c1_at.0 } else { c1_at.0 },
        witness_value: if !bounded { c1 } else { worst_spread },
        note: format!(
            "C1 estimate {c1:.6} at (s, τ) = ({:.3e}, {:.3e}); worst tail spread {worst_spread:.3e} at τ = {worst_tau:.3}; g0 > 0: {g0_positive}",
            c1_at.0, c1_at.1
        ),
    };

    Ok(HypothesisReport {
        f1_subcritical: f1,
        f2_ratio: f2,
        f3_sublinear_at_zero: f3,
        f4_limit_at_zero: f4,
        certified_c0,
        c1_estimate: c1,
        g0_exponent,
        limit_f1,
        limit_f3,
    })
}

/// `g₀(τ) = lim_{s→0} f(τs)/f(s)` by Richardson extrapolation on the
/// decades `s = 10^{-4}, …, 10^{-10}`, assuming a first-order remainder in `s`.
pub fn compute_g0(f: &Nonlinearity, tau: f64) -> Result<f64> {
    assert!(tau > 0.0, "g0 needs tau > 0, got {tau}");
    if tau == 1.0 {
        return Ok(1.0);
    }
    if let NonlinearityKind::PurePower { q } = f.kind {
        return Ok(tau.powf(q - 1.0));
    }
    let levels: Vec<f64> = (4..=10)
        .map(|e| {
            let s = 10f64.powi(-e);
            f.ratio(tau * s, s)
        })
        .collect();
    let rich: Vec<f64> = levels.windows(2).map(|w| (10.0 * w[1] - w[0]) / 9.0).collect();
    let n = rich.len();
    let (a, b) = (rich[n - 2], rich[n - 1]);
    if !b.is_finite() || (a - b).abs() > 1e-6 * b.abs().max(1e-300) {
        return Err(Error::numerical(format!(
            "g0({tau}) extrapolation did not settle: last estimates {a:.12e}, {b:.12e}"
        )));
    }
    Ok(b)
}

/// Exponent `q - 1` of the power form of `g₀`, from `τ = 2` and `τ = 1/2`.
pub fn g0_exponent(f: &Nonlinearity) -> Result<f64> {
    let up = compute_g0(f, 2.0)?.ln() / 2f64.ln();
    let down = compute_g0(f, 0.5)?.ln() / 0.5f64.ln();
    Ok(0.5 * (up + down))
}

/// Minimum of a unimodal `g` on `[a, b]` by golden-section search: `(x, g(x))`.
fn golden_min(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..100 {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - ratio * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + ratio * (b - a);
            gd = g(d);
        }
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs()) {
            break;
        }
    }
    let x = 0.5 * (a + b);
    (x, g(x))
}

/// `C₀ = max(0, sup_{s>0} -f(s)/s^{p-1})`; `+∞` when the sup is unbounded.
pub fn compute_c0(f: &Nonlinearity, p: f64) -> f64 {
    let ratio = |s: f64| -f.f(s) / s.powf(p - 1.0);
    let grid = geometric_grid(1e-12, 1e12, 481);
    let vals: Vec<f64> = grid.iter().map(|&s| ratio(s)).collect();
    let (imax, &vmax) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    if !(vmax > 0.0) {
        return 0.0;
    }
    let n = grid.len();
    // a decade in from either end: 20 samples per decade
    if imax == 0 || imax == n - 1 {
        let inner = if imax == 0 { vals[20] } else { vals[n - 21] };
        if (vmax - inner).abs() > 1e-6 * vmax.abs() {
            return f64::INFINITY;
        }
        return vmax;
    }
    // golden-section refinement in ln s
    let (_, neg) = golden_min(|x| -ratio(x.exp()), grid[imax - 1].ln(), grid[imax + 1].ln());
    vmax.max(-neg)
}

/// `h(s) = s^{p*-1} / [(λ_bound + δ) V_sup s^{p-1} + f(s)]`, written as
/// `1 / [(λ_bound + δ) V_sup s^{p-p*} + f(s)/s^{p*-1}]` to avoid overflow.
pub fn h_of(f: &Nonlinearity, s: f64, lambda_bound: f64, v_sup: f64, p: f64, delta: f64) -> f64 {
    assert!(s >= 0.0, "h is evaluated on s >= 0 only, got {s}");
    if s == 0.0 {
        return 0.0;
    }
    let k = f.p_star - 1.0;
    let linear = (lambda_bound + delta) * v_sup * ((p - f.p_star) * s.ln()).exp();
    let nonlinear = match f.kind {
        NonlinearityKind::Custom { .. } if !(f.f(s) > 0.0) => f.f(s) / s.powf(k),
        _ => (f.ln_f(s) - k * s.ln()).exp(),
    };
    let denom = linear + nonlinear;
    assert!(denom > 0.0, "h has a non-positive denominator at s = {s}");
    1.0 / denom
}
