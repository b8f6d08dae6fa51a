//! Executable checks on computed objects: the Picone identity, the
//! L∞ growth estimate along a branch, the nonexistence window for positive
//! solutions and the bifurcation direction.

use serde::{Deserialize, Serialize};

use crate::continuation::{Branch, Side};
use crate::eigen::{nonexistence_inputs, subdomain_eigenvalue_spec, EigenOptions, EigenResult, Sign};
use crate::error::Result;
use crate::geometry::{gradient_midpoints, integrate, GridFunction, RadialMesh};
use crate::nonlinearity::{compute_c0, critical_exponent, g0_exponent, h_of, Nonlinearity};
use crate::operator::{strong_residual_norm, OperatorConfig};
use crate::weights::{check_m_hypotheses, evaluate, sign_decompose, MHypothesisReport, WeightSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Where the check was decided (a radius, a λ, a sample index).
    pub location: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    pub value: f64,
    pub tolerance: f64,
    pub witness: Option<Witness>,
    pub note: String,
}

impl CheckResult {
    pub fn new(name: &str, pass: bool, value: f64, tolerance: f64, witness: Witness, note: impl Into<String>) -> Self {
        CheckResult {
            name: name.to_string(),
            status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
            value,
            tolerance,
            witness: Some(witness),
            note: note.into(),
        }
    }

    pub fn with_status(mut self, status: CheckStatus) -> Self {
        self.status = status;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn push(&mut self, c: CheckResult) {
        self.checks.push(c);
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }

    pub fn all_pass(&self) -> bool {
        self.failures().next().is_none()
    }
}

/// Cell-midpoint values of the two sides of the Picone identity,
/// `L(v₁, v₂)` and `R(v₁, v₂)`, one entry per cell.
///
/// `v₂` must be positive at every node (shift it by a small constant near a
/// Dirichlet boundary) and `v₁` non-negative.
pub fn picone(v1: &GridFunction, v2: &GridFunction, mesh: &RadialMesh, p: f64) -> (GridFunction, GridFunction) {
    assert!(v2.values().iter().all(|&x| x > 0.0), "picone needs v2 > 0 at every node");
    assert!(v1.values().iter().all(|&x| x >= 0.0), "picone needs v1 >= 0");
    let d1 = gradient_midpoints(v1, mesh);
    let d2 = gradient_midpoints(v2, mesh);
    let w: Vec<f64> = v1
        .values()
        .iter()
        .zip(v2.values())
        .map(|(a, b)| a.powf(p) / b.powf(p - 1.0))
        .collect();
    let dw = gradient_midpoints(&GridFunction::new(w), mesh);
    let mut l = Vec::with_capacity(d1.len());
    let mut r = Vec::with_capacity(d1.len());
    for k in 0..d1.len() {
        let t = 0.5 * (v1.values()[k] + v1.values()[k + 1]) / (0.5 * (v2.values()[k] + v2.values()[k + 1]));
        let (a, b) = (d1[k], d2[k]);
        let flux2 = if b == 0.0 { 0.0 } else { b.abs().powf(p - 2.0) * b };
        l.push(a.abs().powf(p) + (p - 1.0) * t.powf(p) * b.abs().powf(p) - p * t.powf(p - 1.0) * a * flux2);
        r.push(a.abs().powf(p) - flux2 * dw[k]);
    }
    (GridFunction::new(l), GridFunction::new(r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinfParams {
    pub epsilon: f64,
    pub slack: f64,
    /// Only points with `‖u‖∞` at least this enter the slope fit.
    pub sup_threshold: f64,
    pub delta: f64,
    /// Strong residual above which a point is not treated as a solution.
    pub residual_tol: f64,
}

impl Default for LinfParams {
    fn default() -> Self {
        LinfParams { epsilon: 0.05, slack: 0.1, sup_threshold: 1.0, delta: 1.0, residual_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinfReport {
    pub status: CheckStatus,
    /// `(p*-1)p/N + ε`.
    pub exponent: f64,
    /// `sup (y - exponent·x)` over all points.
    pub empirical_constant: f64,
    pub slope: f64,
    pub bound: f64,
    pub points_used: usize,
    pub witness: Option<Witness>,
}

/// Growth of `h(‖u‖∞)` against `(1 + ‖u‖_{p*}^{1/(p-1)}) ‖u‖_{p*}` along a branch.
pub fn linf_estimate_check(
    b: &Branch,
    cfg: &OperatorConfig,
    mesh: &RadialMesh,
    lambda_bound: f64,
    v_sup: f64,
    params: &LinfParams,
) -> Result<LinfReport> {
    let p = cfg.p;
    let n = cfg.dim as f64;
    let p_star = critical_exponent(cfg.dim, p)?;
    let exponent = (p_star - 1.0) * p / n + params.epsilon;
    let bound = exponent + params.slack;

    for (k, pt) in b.points.iter().enumerate() {
        let c = cfg.clone().with_lambda(pt.lambda);
        let res = strong_residual_norm(&pt.u, &c, mesh);
        if !(res <= params.residual_tol * pt.sup_norm.max(1.0)) {
            return Ok(LinfReport {
                status: CheckStatus::NotApplicable,
                exponent,
                empirical_constant: f64::NAN,
                slope: f64::NAN,
                bound,
                points_used: 0,
                witness: Some(Witness { location: k as f64, values: vec![pt.lambda, res] }),
            });
        }
    }

    let xy: Vec<(f64, f64, f64)> = b
        .points
        .iter()
        .filter(|pt| pt.sup_norm > 0.0)
        .map(|pt| {
            let l = pt.lp_star_norm;
            let x = ((1.0 + l.powf(1.0 / (p - 1.0))) * l).ln();
            let y = h_of(&cfg.f, pt.sup_norm, lambda_bound, v_sup, p, params.delta).ln();
            (x, y, pt.sup_norm)
        })
        .collect();
    let (mut empirical_constant, mut worst) = (f64::NEG_INFINITY, None);
    for &(x, y, s) in &xy {
        let c = y - exponent * x;
        if c > empirical_constant {
            empirical_constant = c;
            worst = Some(Witness { location: s, values: vec![x, y] });
        }
    }
    let fit: Vec<(f64, f64)> = xy.iter().filter(|t| t.2 >= params.sup_threshold).map(|t| (t.0, t.1)).collect();
    if fit.len() < 4 {
        return Ok(LinfReport {
            status: CheckStatus::Inconclusive,
            exponent,
            empirical_constant,
            slope: f64::NAN,
            bound,
            points_used: fit.len(),
            witness: worst,
        });
    }
    let m = fit.len() as f64;
    let mx = fit.iter().map(|t| t.0).sum::<f64>() / m;
    let my = fit.iter().map(|t| t.1).sum::<f64>() / m;
    let sxx: f64 = fit.iter().map(|t| (t.0 - mx).powi(2)).sum();
    let sxy: f64 = fit.iter().map(|t| (t.0 - mx) * (t.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(LinfReport {
        status: if slope <= bound { CheckStatus::Pass } else { CheckStatus::Fail },
        exponent,
        empirical_constant,
        slope,
        bound,
        points_used: fit.len(),
        witness: worst,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub c0: f64,
    pub sup_m_plus: f64,
    /// `λ₁(1, ω^{+,0})`.
    pub lambda1_omega_plus0: f64,
    pub alpha_plus0: f64,
    /// Window from the `ω^{+,0}` bound, scaled by `α₊,₀`.
    pub window_plus0: Option<(f64, f64)>,
    /// Window from the `ω⁰` bound.
    pub window_zero: Option<(f64, f64)>,
    pub hypotheses: MHypothesisReport,
    pub note: String,
}

/// Interval `[Λ₋₁, Λ₁]` outside of which no non-negative nontrivial solution
/// exists. Each available bound is reported; the returned window intersects
/// those whose component hypothesis holds, and is `(-∞, ∞)` when none does.
pub fn nonexistence_window(
    v: &WeightSpec,
    m: &WeightSpec,
    f: &Nonlinearity,
    mesh: &RadialMesh,
    p: f64,
    opts: &EigenOptions,
) -> Result<(f64, f64, WindowReport)> {
    let d = sign_decompose(m, 0.0);
    let hypotheses = check_m_hypotheses(m, v, &d, mesh);
    let c0 = compute_c0(f, p);
    let sup_m_plus = hypotheses.sup_m_plus;
    let one = WeightSpec::constant(1.0, v.domain().start, v.domain().end);

    let mut lambda1_omega = f64::INFINITY;
    for c in &d.omega_plus0 {
        lambda1_omega = lambda1_omega.min(subdomain_eigenvalue_spec(&one, c, mesh, p, Sign::Plus, opts)?);
    }
    let alpha = if c0 == 0.0 || sup_m_plus == 0.0 { 1.0 } else { 1.0 + c0 * sup_m_plus / lambda1_omega };

    let window_plus0 = if d.omega_plus0.is_empty() {
        None
    } else {
        let (lm, lp) = nonexistence_inputs(v, &d.omega_plus0, mesh, p, opts)?;
        Some((alpha * lm, alpha * lp))
    };
    let window_zero = if d.omega_0.is_empty() { None } else { Some(nonexistence_inputs(v, &d.omega_0, mesh, p, opts)?) };

    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut used = Vec::new();
    if let (Some(w), true) = (window_plus0, hypotheses.m2.holds) {
        lo = lo.max(w.0);
        hi = hi.min(w.1);
        used.push("omega_plus0");
    }
    if let (Some(w), true) = (window_zero, hypotheses.m3.holds) {
        lo = lo.max(w.0);
        hi = hi.min(w.1);
        used.push("omega_0");
    }
    let note = if used.is_empty() {
        "neither component hypothesis holds; no bound on λ".to_string()
    } else {
        format!("intersection of the bounds from {}", used.join(" and "))
    };
    Ok((
        lo,
        hi,
        WindowReport {
            c0,
            sup_m_plus,
            lambda1_omega_plus0: lambda1_omega,
            alpha_plus0: alpha,
            window_plus0,
            window_zero,
            hypotheses,
            note,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionSide {
    Right,
    Left,
    HypothesisViolated,
}

impl DirectionSide {
    pub fn as_side(self) -> Option<Side> {
        match self {
            DirectionSide::Right => Some(Side::Right),
            DirectionSide::Left => Some(Side::Left),
            DirectionSide::HypothesisViolated => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionReport {
    pub integral: f64,
    /// `q` in `g₀(τ) = τ^{q-1}`.
    pub q: f64,
    /// Difference between trapezoid and lumped-mass quadratures.
    pub quadrature_error: f64,
    pub side: DirectionSide,
}

/// `∫ m g₀(φ) φ` with `g₀(τ) = τ^{q-1}`. A negative integral means the
/// branch leaves λ₁ to the right and λ₋₁ to the left; the origin is read off
/// the sign of `e.lambda`.
pub fn bifurcation_direction(m: &GridFunction, e: &EigenResult, f: &Nonlinearity, mesh: &RadialMesh) -> Result<DirectionReport> {
    let q = g0_exponent(f)? + 1.0;
    let phi = &e.eigenfunction;
    let integrand = GridFunction::new(
        m.values().iter().zip(phi.values()).map(|(mi, x)| mi * x.max(0.0).powf(q)).collect(),
    );
    let integral = integrate(&integrand, mesh);
    let lumped: f64 = integrand.values().iter().zip(mesh.lumped_weights()).map(|(a, w)| a * w).sum();
    let side = if integral < 0.0 {
        if e.lambda > 0.0 {
            DirectionSide::Right
        } else {
            DirectionSide::Left
        }
    } else {
        DirectionSide::HypothesisViolated
    };
    Ok(DirectionReport { integral, q, quadrature_error: (integral - lumped).abs(), side })
}

/// `V` and `m` as grid functions on `mesh`.
pub fn weights_on(v: &WeightSpec, m: &WeightSpec, mesh: &RadialMesh) -> (GridFunction, GridFunction) {
    (evaluate(v, mesh), evaluate(m, mesh))
}
