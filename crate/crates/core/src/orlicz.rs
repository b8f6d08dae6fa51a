//! N-functions: conjugates, the Luxemburg gauge, Δ₂ and essential-growth
//! checks, Young and Hölder verifiers, and the compactness hypotheses for
//! slightly subcritical nonlinearities.

use serde::{Deserialize, Serialize};

use crate::asymptotics::{decays_to_zero, geometric_grid, LimitVerdict};
use crate::error::{Error, Result};
use crate::geometry::{integrate, GridFunction, RadialMesh};
use crate::nonlinearity::{check_hypotheses, Nonlinearity, SampleControl};

/// Density `a` of an N-function `A(t) = ∫₀ᵗ a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Density {
    /// `A(t) = coefficient · t^exponent`.
    Power { exponent: f64, coefficient: f64 },
    /// `a(t) = eᵗ - 1`, `A(t) = eᵗ - t - 1`.
    ExpMinusOne,
    /// Monotone piecewise-linear samples from `(0, 0)`, continued with the last slope.
    Table { t: Vec<f64>, a: Vec<f64> },
    /// `a = f`, so `A = F`.
    Primitive(Nonlinearity),
    /// `a = f⁻¹` for strictly increasing `f`, so `A(t) = t f⁻¹(t) - F(f⁻¹(t))`.
    InverseOf(Nonlinearity),
    /// `a*(t) = sup{s : a(s) ≤ t}` and `A*(t) = t a*(t) - A(a*(t))`.
    Conjugate(Box<NFunction>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NFunction {
    density: Density,
    strictly_increasing: bool,
}

/// Validate a density on a geometric grid and wrap it as an N-function.
pub fn make_nfunction(density: Density) -> Result<NFunction> {
    match &density {
        Density::Power { exponent, coefficient } => {
            if !(*exponent > 1.0 && *coefficient > 0.0) {
                return Err(Error::Validation(format!(
                    "power N-function needs exponent > 1 and coefficient > 0, got {exponent}, {coefficient}"
                )));
            }
        }
        Density::Table { t, a } => {
            if t.len() < 2 || t.len() != a.len() || t[0] != 0.0 {
                return Err(Error::Validation("density table must start at t = 0 with matching lengths".into()));
            }
            if let Some(i) = t.windows(2).position(|w| !(w[1] > w[0])) {
                return Err(Error::Validation(format!("density table abscissa {} is not increasing", t[i + 1])));
            }
            if a[a.len() - 1] == a[a.len() - 2] {
                return Err(Error::Validation("density table must end with a positive slope so that a → ∞".into()));
            }
        }
        Density::Primitive(f) | Density::InverseOf(f) => f.validate()?,
        _ => {}
    }
    let candidate = NFunction { density, strictly_increasing: false };
    let a0 = candidate.density(0.0);
    if a0 != 0.0 {
        return Err(Error::Validation(format!("density must vanish at 0, a(0) = {a0}")));
    }
    let grid = geometric_grid(1e-6, 1e6, 200);
    let values: Vec<f64> = grid.iter().map(|&t| candidate.density(t)).collect();
    let mut strictly = values[0] > 0.0;
    let mut prev = 0.0;
    for (t, &v) in grid.iter().zip(&values) {
        if !(v >= prev) {
            return Err(Error::Validation(format!(
                "density decreases at sample t = {t:e}: a = {v:e} after {prev:e}"
            )));
        }
        strictly &= v > prev;
        prev = v;
    }
    let n = values.len();
    if !(values[n - 1] > values[n - 21] || values[n - 1] == f64::INFINITY) {
        return Err(Error::Validation(format!(
            "density does not grow over the last sampled decade (a({:e}) = {:e})",
            grid[n - 1],
            values[n - 1]
        )));
    }
    Ok(NFunction { strictly_increasing: strictly, ..candidate })
}

/// Inverse of a strictly increasing `f` by bisection in `ln s`.
fn invert_nonlinearity(f: &Nonlinearity, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let target = t.ln();
    let (mut lo, mut hi) = (-700.0f64, 700.0f64);
    if !(f.ln_f(hi.exp()) >= target) {
        return f64::INFINITY;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f.ln_f(mid.exp()) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

impl NFunction {
    pub fn density_kind(&self) -> &Density {
        &self.density
    }

    pub fn strictly_increasing(&self) -> bool {
        self.strictly_increasing
    }

    pub fn power(exponent: f64, coefficient: f64) -> Result<Self> {
        make_nfunction(Density::Power { exponent, coefficient })
    }

    /// `a(t)`.
    pub fn density(&self, t: f64) -> f64 {
        assert!(t >= 0.0, "N-functions are evaluated on t >= 0, got {t}");
        match &self.density {
            Density::Power { exponent, coefficient } => {
                if t == 0.0 {
                    0.0
                } else {
                    coefficient * exponent * t.powf(exponent - 1.0)
                }
            }
            Density::ExpMinusOne => t.exp_m1(),
            Density::Table { t: ts, a } => {
                let n = ts.len();
                let i = if t >= ts[n - 1] { n - 2 } else { ts.partition_point(|&x| x <= t) - 1 };
                a[i] + (a[i + 1] - a[i]) / (ts[i + 1] - ts[i]) * (t - ts[i])
            }
            Density::Primitive(f) => f.f(t),
            Density::InverseOf(f) => invert_nonlinearity(f, t),
            Density::Conjugate(inner) => inner.generalized_inverse(t),
        }
    }

    /// `A(t)`.
    pub fn value(&self, t: f64) -> f64 {
        assert!(t >= 0.0, "N-functions are evaluated on t >= 0, got {t}");
        if t == 0.0 {
            return 0.0;
        }
        match &self.density {
            Density::Power { exponent, coefficient } => coefficient * t.powf(*exponent),
            Density::ExpMinusOne => {
                if t < 0.1 {
                    let mut term = t * t / 2.0;
                    let mut sum = term;
                    for k in 3..30 {
                        term *= t / k as f64;
                        sum += term;
                    }
                    sum
                } else {
                    t.exp_m1() - t
                }
            }
            Density::Table { t: ts, a } => {
                let mut acc = 0.0;
                for i in 0..ts.len() - 1 {
                    if t <= ts[i] {
                        return acc;
                    }
                    let b = t.min(ts[i + 1]);
                    acc += 0.5 * (b - ts[i]) * (a[i] + self.density(b));
                }
                let last = ts[ts.len() - 1];
                if t > last {
                    acc += 0.5 * (t - last) * (a[a.len() - 1] + self.density(t));
                }
                acc
            }
            Density::Primitive(f) => f.primitive(t).unwrap_or(f64::NAN),
            Density::InverseOf(f) => {
                let s = invert_nonlinearity(f, t);
                s * t * (1.0 - f.primitive_factor(s).unwrap_or(f64::NAN))
            }
            Density::Conjugate(inner) => inner.conjugate_value(t),
        }
    }

    /// `ln A(t)`, finite far beyond the overflow range of `A` for the
    /// power, exponential and nonlinearity-based densities.
    pub fn ln_value(&self, t: f64) -> f64 {
        match &self.density {
            Density::Power { exponent, coefficient } => coefficient.ln() + exponent * t.ln(),
            Density::ExpMinusOne if t > 1.0 => t + (-(t + 1.0) * (-t).exp()).ln_1p(),
            Density::Primitive(f) => f.ln_primitive(t).unwrap_or(f64::NAN),
            Density::InverseOf(f) => {
                let s = invert_nonlinearity(f, t);
                t.ln() + s.ln() + (-f.primitive_factor(s).unwrap_or(f64::NAN)).ln_1p()
            }
            _ => self.value(t).ln(),
        }
    }

    /// `t a(t) / A(t)`; exact for powers and free of cancellation for the
    /// nonlinearity-based densities.
    pub fn growth_ratio(&self, t: f64) -> f64 {
        match &self.density {
            Density::Power { exponent, .. } => *exponent,
            Density::Primitive(f) => 1.0 / f.primitive_factor(t).unwrap_or(f64::NAN),
            Density::InverseOf(f) => {
                let s = invert_nonlinearity(f, t);
                1.0 / (1.0 - f.primitive_factor(s).unwrap_or(f64::NAN))
            }
            _ => t * self.density(t) / self.value(t),
        }
    }

    /// `sup{s ≥ 0 : a(s) ≤ t}`, `+∞` when `a` never exceeds `t`.
    pub fn generalized_inverse(&self, t: f64) -> f64 {
        match &self.density {
            Density::Primitive(f) if self.strictly_increasing => return invert_nonlinearity(f, t),
            Density::InverseOf(f) if self.strictly_increasing => return f.f(t),
            _ => {}
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while self.density(hi) <= t {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return f64::INFINITY;
            }
        }
        for _ in 0..1100 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.density(mid) <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `A*(t) = t a*(t) - A(a*(t))` (equality case of Young's inequality).
    pub fn conjugate_value(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let s = self.generalized_inverse(t);
        if !s.is_finite() {
            return f64::INFINITY;
        }
        t * s - self.value(s)
    }

    pub fn conjugate(&self) -> NFunction {
        NFunction {
            density: Density::Conjugate(Box::new(self.clone())),
            strictly_increasing: self.strictly_increasing,
        }
    }

    /// Smallest `t` with `A(t) ≥ y`.
    pub fn inverse_value(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while self.value(hi) < y {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return f64::INFINITY;
            }
        }
        for _ in 0..1100 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.value(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// `∫_Ω A(|u|/λ) dx` by the mesh quadrature.
pub fn modular(u: &GridFunction, a: &NFunction, mesh: &RadialMesh, lambda: f64) -> f64 {
    integrate(&GridFunction::new(u.values().iter().map(|v| a.value(v.abs() / lambda)).collect()), mesh)
}

/// Luxemburg gauge `inf{λ > 0 : ∫ A(|u|/λ) ≤ 1}` by bisection in `ln λ`.
pub fn gauge_norm(u: &GridFunction, a: &NFunction, mesh: &RadialMesh) -> f64 {
    let sup = u.sup_norm();
    if sup == 0.0 {
        return 0.0;
    }
    // bracket: start from sup|u| / A⁻¹(1/|Ω|) and double outward
    let guess = sup / a.inverse_value(1.0 / mesh.volume()).max(f64::MIN_POSITIVE);
    let mut lo = guess;
    let mut hi = guess;
    while modular(u, a, mesh, lo) <= 1.0 {
        lo *= 0.5;
    }
    while modular(u, a, mesh, hi) > 1.0 {
        hi *= 2.0;
    }
    let (mut l, mut h) = (lo.ln(), hi.ln());
    while h - l > 1e-13 {
        let m = 0.5 * (l + h);
        if modular(u, a, mesh, m.exp()) <= 1.0 {
            h = m;
        } else {
            l = m;
        }
    }
    h.exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta2Report {
    pub verdict: bool,
    /// Sup of `t a(t)/A(t)` over the sampled `t ≥ t0`.
    pub k0: f64,
    pub t0: f64,
    /// Log-log slope of the ratio over the tail of the grid.
    pub tail_slope: f64,
    pub witness_t: f64,
    pub witness_ratio: f64,
    pub note: String,
}

/// Tail slope above which the growth ratio counts as diverging.
const DELTA2_SLOPE_TOL: f64 = 1e-2;

/// Δ₂ near infinity via the growth ratio `t a(t)/A(t)` on an increasing grid.
pub fn check_delta2(a: &NFunction, t_grid: &[f64]) -> Delta2Report {
    assert!(t_grid.len() >= 4, "Δ₂ check needs at least 4 samples");
    let ratios: Vec<f64> = t_grid.iter().map(|&t| a.growth_ratio(t)).collect();
    let (imax, &k0) = ratios
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .unwrap();
    let start = t_grid.len() / 2;
    let xs: Vec<f64> = t_grid[start..].iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = ratios[start..].iter().map(|r| r.ln()).collect();
    let tail_slope = ls_slope(&xs, &ys);
    let verdict = tail_slope <= DELTA2_SLOPE_TOL && k0.is_finite();
    let (witness_t, witness_ratio) = if verdict {
        (t_grid[imax], k0)
    } else {
        (*t_grid.last().unwrap(), *ratios.last().unwrap())
    };
    Delta2Report {
        verdict,
        k0,
        t0: t_grid[0],
        tail_slope,
        witness_t,
        witness_ratio,
        note: format!(
            "finite surrogate on [{:e}, {:e}]: t a(t)/A(t) tail log-log slope {tail_slope:.3e}",
            t_grid[0],
            t_grid[t_grid.len() - 1]
        ),
    }
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlowerReport {
    pub verdict: bool,
    /// One limit verdict per sampled δ.
    pub per_delta: Vec<(f64, LimitVerdict)>,
}

/// `B ≪ A`: `B(δt)/A(t) → 0` as `t → ∞` for every sampled `δ > 1`.
pub fn check_essentially_slower(b: &NFunction, a: &NFunction, delta_grid: &[f64], t_grid: &[f64]) -> SlowerReport {
    let per_delta: Vec<(f64, LimitVerdict)> = delta_grid
        .iter()
        .map(|&delta| {
            assert!(delta > 1.0, "essential-growth comparison needs δ > 1, got {delta}");
            let ratio: Vec<f64> = t_grid.iter().map(|&t| (b.ln_value(delta * t) - a.ln_value(t)).exp()).collect();
            (delta, decays_to_zero(t_grid, &ratio, 1e-4))
        })
        .collect();
    SlowerReport {
        verdict: per_delta.iter().all(|(_, v)| v.pass),
        per_delta,
    }
}

/// `A(s) + A*(t) - st`, non-negative up to rounding.
pub fn young_gap(s: f64, t: f64, a: &NFunction) -> f64 {
    assert!(s >= 0.0 && t >= 0.0, "Young gap is defined for s, t >= 0");
    a.value(s) + a.conjugate_value(t) - s * t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub lhs: f64,
    pub rhs: f64,
    pub verdict: bool,
}

/// `|∫ u v| ≤ 2 ‖u‖_A ‖v‖_{A*}`.
pub fn holder_check(u: &GridFunction, v: &GridFunction, a: &NFunction, mesh: &RadialMesh) -> HolderReport {
    let product = GridFunction::new(u.values().iter().zip(v.values()).map(|(x, y)| x * y).collect());
    let lhs = integrate(&product, mesh).abs();
    let rhs = 2.0 * gauge_norm(u, a, mesh) * gauge_norm(v, &a.conjugate(), mesh);
    HolderReport {
        lhs,
        rhs,
        verdict: lhs <= rhs * (1.0 + 1e-9) + 1e-14,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactnessReport {
    pub delta2: Delta2Report,
    pub essentially_slower: SlowerReport,
    pub certified_c0: f64,
    /// `c0/(c0-1)` for the certified `c0`.
    pub k0_bound: f64,
    pub conjugate_exponent: f64,
    pub note: String,
}

impl CompactnessReport {
    pub fn pass(&self) -> bool {
        self.delta2.verdict && self.essentially_slower.verdict
    }
}

/// The two Orlicz hypotheses used for compactness with `a = f⁻¹`: Δ₂ near
/// infinity for `A`, and `F` growing essentially more slowly than `t^{p*}`.
pub fn compactness_hypotheses(f: &Nonlinearity, p: f64, dim: usize) -> Result<CompactnessReport> {
    let probe = geometric_grid(1e-6, 1e40, 400);
    if let Some(w) = probe.windows(2).find(|w| !(f.ln_f(w[1]) > f.ln_f(w[0]))) {
        return Err(Error::Validation(format!(
            "f is not strictly increasing near s = {:e}; monotonize it (e.g. s ↦ max_(t≤s) f(t) + s^q) before inverting",
            w[1]
        )));
    }
    let hyp = check_hypotheses(f, p, &SampleControl::default())?;
    let c0 = hyp.certified_c0;
    let a = make_nfunction(Density::InverseOf(f.clone()))?;
    let t_grid: Vec<f64> = geometric_grid(f.s0, 1e40, 801).into_iter().map(|s| f.f(s)).collect();
    let delta2 = check_delta2(&a, &t_grid);
    let f_bar = make_nfunction(Density::Primitive(f.clone()))?;
    let critical = NFunction::power(f.p_star, 1.0)?;
    let slow_grid = geometric_grid(1.0, 1e300, 200);
    let essentially_slower = check_essentially_slower(&f_bar, &critical, &[1.5, 2.0, 4.0], &slow_grid);
    let star = crate::nonlinearity::critical_exponent(dim, p)?;
    Ok(CompactnessReport {
        delta2,
        essentially_slower,
        certified_c0: c0,
        k0_bound: c0 / (c0 - 1.0),
        conjugate_exponent: star / (star - 1.0),
        note: "asymptotic verdicts are finite-surrogate verdicts on sampled grids".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, norm, DomainKind, NormKind};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mesh() -> RadialMesh {
        build_mesh(DomainKind::Ball { radius: 1.0 }, 3, 41, 1.0).unwrap()
    }

    fn sup_conjugate(a: &NFunction, t: f64) -> f64 {
        // golden-section oracle for sup_s (s t - A(s)) on a bracketing interval
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while t * hi - a.value(hi) > -1.0 && hi < 1e6 && a.density(hi) < t {
            hi *= 2.0;
        }
        hi *= 2.0;
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..300 {
            let c = hi - g * (hi - lo);
            let d = lo + g * (hi - lo);
            if t * c - a.value(c) > t * d - a.value(d) {
                hi = d;
            } else {
                lo = c;
            }
        }
        let s = 0.5 * (lo + hi);
        t * s - a.value(s)
    }

    #[test]
    fn make_examples() {
        let a = NFunction::power(2.0, 0.5).unwrap();
        assert_eq!(a.value(3.0), 4.5);
        let e = make_nfunction(Density::ExpMinusOne).unwrap();
        for t in [1e-4, 0.05, 0.5, 2.0, 10.0] {
            let oracle = crate::quadrature::integrate_adaptive(|s| s.exp_m1(), 0.0, t, 1e-13, 0.0).unwrap();
            assert_relative_eq!(e.value(t), oracle, max_relative = 1e-10);
        }
        let err = make_nfunction(Density::Table { t: vec![0.0, 1.0], a: vec![0.0, -1.0] }).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("decreases")), "{err:?}");
    }

    #[test]
    fn self_conjugate_quadratic() {
        let a = NFunction::power(2.0, 0.5).unwrap().conjugate();
        for t in [0.1, 1.0, 3.0, 17.0] {
            assert_relative_eq!(a.value(t), t * t / 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn power_legendre_pair() {
        for p in [1.5, 3.0, 6.0] {
            let a = NFunction::power(p, 1.0 / p).unwrap();
            let q = p / (p - 1.0);
            let conj = a.conjugate();
            for t in geometric_grid(0.05, 20.0, 20) {
                assert_relative_eq!(conj.value(t), t.powf(q) / q, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn conjugate_matches_sup_definition() {
        let e = make_nfunction(Density::ExpMinusOne).unwrap();
        for t in [0.3, 2.0, 9.0] {
            assert_relative_eq!(e.conjugate_value(t), sup_conjugate(&e, t), max_relative = 1e-9);
        }
    }

    #[test]
    fn flat_segment_gives_jump() {
        let a = make_nfunction(Density::Table { t: vec![0.0, 1.0, 2.0, 3.0], a: vec![0.0, 1.0, 1.0, 2.0] }).unwrap();
        assert!(!a.strictly_increasing());
        assert_relative_eq!(a.generalized_inverse(1.0), 2.0, max_relative = 1e-12);
        assert_relative_eq!(a.generalized_inverse(0.999), 0.999, max_relative = 1e-12);
        for t in [0.2, 1.0, 1.5, 2.0, 2.7, 5.0] {
            assert!(a.generalized_inverse(a.density(t)) >= t - 1e-12);
        }
    }

    #[test]
    fn double_conjugation() {
        for a in [NFunction::power(3.0, 0.7).unwrap(), make_nfunction(Density::ExpMinusOne).unwrap()] {
            let cc = a.conjugate().conjugate();
            for t in geometric_grid(0.1, 5.0, 10) {
                assert_relative_eq!(cc.value(t), a.value(t), max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn gauge_examples() {
        let mesh = mesh();
        let c = 1.7;
        for p in [1.5, 2.0, 4.0] {
            let a = NFunction::power(p, 1.0).unwrap();
            let u = GridFunction::new(vec![c; mesh.len()]);
            let expected = norm(&u, &mesh, NormKind::Lebesgue(p));
            assert_relative_eq!(gauge_norm(&u, &a, &mesh), expected, max_relative = 1e-10);
            // c·(4π/3)^{1/p} up to trapezoid error
            assert_relative_eq!(expected, c * (4.0 * std::f64::consts::PI / 3.0).powf(1.0 / p), max_relative = 2e-3);
        }
        let a = NFunction::power(2.0, 1.0).unwrap();
        assert_eq!(gauge_norm(&GridFunction::zeros(&mesh), &a, &mesh), 0.0);
        let u = GridFunction::from_fn(&mesh, |r| 1.0 - r * r + 0.3 * r);
        let g = gauge_norm(&u, &a, &mesh);
        assert_relative_eq!(gauge_norm(&u.scaled(-1.0), &a, &mesh), g, max_relative = 1e-12);
        assert_relative_eq!(gauge_norm(&u.scaled(0.5), &a, &mesh), 0.5 * g, max_relative = 1e-12);
    }

    #[test]
    fn gauge_properties_on_random_functions() {
        let mesh = mesh();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e = make_nfunction(Density::ExpMinusOne).unwrap();
        for _ in 0..20 {
            let u = GridFunction::new((0..mesh.len()).map(|_| rng.gen_range(-3.0..3.0)).collect());
            let v = GridFunction::new((0..mesh.len()).map(|_| rng.gen_range(-3.0..3.0)).collect());
            let gu = gauge_norm(&u, &e, &mesh);
            assert!(modular(&u, &e, &mesh, gu) <= 1.0 + 1e-9);
            assert!(gauge_norm(&u.axpy(1.0, &v), &e, &mesh) <= gu + gauge_norm(&v, &e, &mesh) + 1e-12);
            assert!(gu <= modular(&u, &e, &mesh, 1.0).max(1.0) + 1e-12);
        }
    }

    #[test]
    fn delta2_examples() {
        let grid = geometric_grid(1.0, 1e8, 200);
        let r = check_delta2(&NFunction::power(3.0, 1.0).unwrap(), &grid);
        assert!(r.verdict);
        assert_eq!(r.k0, 3.0);
        let r = check_delta2(&make_nfunction(Density::ExpMinusOne).unwrap(), &geometric_grid(1.0, 500.0, 200));
        assert!(!r.verdict);
        assert!(r.witness_ratio > 400.0);
    }

    #[test]
    fn essentially_slower_examples() {
        let grid = geometric_grid(1.0, 1e8, 200);
        let deltas = [1.5, 2.0, 4.0];
        let q = NFunction::power(4.0, 1.0).unwrap();
        let crit = NFunction::power(6.0, 1.0).unwrap();
        assert!(check_essentially_slower(&q, &crit, &deltas, &grid).verdict);
        assert!(!check_essentially_slower(&crit, &crit, &deltas, &grid).verdict);
        let f = Nonlinearity::log_damped(6.0, 1.0).unwrap();
        let f_bar = make_nfunction(Density::Primitive(f)).unwrap();
        assert!(check_essentially_slower(&f_bar, &crit, &deltas, &geometric_grid(1.0, 1e300, 200)).verdict);
    }

    #[test]
    fn young_examples_and_grid() {
        let a = NFunction::power(2.0, 0.5).unwrap();
        assert_eq!(young_gap(0.0, 0.0, &a), 0.0);
        assert!(young_gap(3.0, 3.0, &a).abs() < 1e-12);
        assert_relative_eq!(young_gap(1.0, 2.0, &a), 0.5, max_relative = 1e-12);
        let e = make_nfunction(Density::ExpMinusOne).unwrap();
        for b in [&a, &e] {
            for s in geometric_grid(0.01, 4.0, 50) {
                for t in geometric_grid(0.01, 4.0, 50) {
                    assert!(young_gap(s, t, b) >= -1e-12);
                }
                assert!(young_gap(s, b.density(s), b).abs() <= 1e-10 * (1.0 + s * b.density(s)));
            }
        }
    }

    #[test]
    fn holder_examples() {
        let mesh = mesh();
        let a = NFunction::power(2.0, 1.0).unwrap();
        let u = GridFunction::new(vec![1.3; mesh.len()]);
        let zero = GridFunction::zeros(&mesh);
        let r = holder_check(&u, &zero, &a, &mesh);
        assert!(r.verdict && r.lhs == 0.0 && r.rhs == 0.0);
        let v = GridFunction::new(vec![0.4; mesh.len()]);
        let r = holder_check(&u, &v, &a, &mesh);
        let l2 = |g: &GridFunction| norm(g, &mesh, NormKind::Lebesgue(2.0));
        assert_relative_eq!(r.lhs, l2(&u) * l2(&v), max_relative = 1e-12);
        // ‖v‖ for A* = t²/4 is ‖v‖₂/2
        assert_relative_eq!(r.rhs, l2(&u) * l2(&v), max_relative = 1e-9);
        assert!(r.verdict);
    }

    #[test]
    fn compactness_examples() {
        let f = Nonlinearity::log_damped(6.0, 1.0).unwrap();
        let r = compactness_hypotheses(&f, 2.0, 3).unwrap();
        assert!(r.pass(), "{r:#?}");
        assert!(r.delta2.k0 <= r.k0_bound + 1e-9);
        let crit = Nonlinearity::pure_power(6.0, 6.0).unwrap();
        assert!(!compactness_hypotheses(&crit, 2.0, 3).unwrap().essentially_slower.verdict);
        let sub = Nonlinearity::pure_power(6.0, 4.0).unwrap();
        let r = compactness_hypotheses(&sub, 2.0, 3).unwrap();
        assert!(r.pass());
        assert_relative_eq!(r.delta2.k0, 4.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn non_monotone_f_needs_monotonization() {
        let s: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
        let fv: Vec<f64> = s.iter().map(|x| x * (x - 1.0) * (x - 1.0)).collect();
        let f = Nonlinearity::custom(6.0, s, fv).unwrap();
        assert!(matches!(compactness_hypotheses(&f, 2.0, 3), Err(Error::Validation(_))));
    }
}
