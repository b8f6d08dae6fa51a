//! Newton solves at fixed λ and pseudo-arclength tracing of positive
//! solution branches bifurcating from the principal eigenvalues.
//!
//! The Jacobian at `u = 0` is degenerate for `p ≠ 2`, so a branch is seeded
//! at a finite amplitude `ε φ` and the first points are computed with λ free
//! and the value at the peak of `φ` pinned. After that the secant tangent
//! drives a pseudo-arclength predictor-corrector.

use serde::{Deserialize, Serialize};

use crate::eigen::EigenResult;
use crate::error::{Error, Result};
use crate::geometry::{norm, GridFunction, NormKind, RadialMesh};
use crate::nonlinearity::critical_exponent;
use crate::operator::{jacobian, lambda_derivative, residual, residual_floor, strong_residual_norm, OperatorConfig};
use crate::tridiag::solve_bordered;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonOptions {
    /// Residual tolerance relative to `max(|λ|, 1) ‖u‖∞^{p-1}` (or 1 at `u = 0`).
    /// Residuals at twice the round-off floor of the operator are accepted too.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-10, max_iter: 50 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub u: GridFunction,
    pub iterations: usize,
    pub residual: f64,
    /// `u > 0` at every free node.
    pub positive: bool,
}

fn threshold(u: &GridFunction, cfg: &OperatorConfig, mesh: &RadialMesh, tol: f64) -> f64 {
    (tol * residual_scale(u, cfg)).max(2.0 * residual_floor(u, cfg, mesh))
}

fn residual_scale(u: &GridFunction, cfg: &OperatorConfig) -> f64 {
    let s = u.sup_norm();
    if s == 0.0 {
        1.0
    } else {
        cfg.lambda.abs().max(1.0) * s.powf(cfg.p - 1.0)
    }
}

pub fn is_positive(u: &GridFunction, mesh: &RadialMesh) -> bool {
    mesh.free_nodes().all(|i| u.values()[i] > 0.0)
}

/// Damped Newton on the residual at fixed `lambda`, with backtracking on
/// the strong residual norm.
pub fn newton_solve(
    lambda: f64,
    u0: &GridFunction,
    cfg: &OperatorConfig,
    mesh: &RadialMesh,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let cfg = cfg.clone().with_lambda(lambda);
    let mut u = GridFunction::with_dirichlet(mesh, u0.values().to_vec());
    let mut res = strong_residual_norm(&u, &cfg, mesh);
    let mut iterations = 0;
    while res > threshold(&u, &cfg, mesh, opts.tol) {
        if iterations == opts.max_iter {
            return Err(Error::Solver { reason: "Newton iteration limit reached".into(), iterations, residual: res });
        }
        iterations += 1;
        let r = residual(&u, &cfg, mesh);
        let j = jacobian(&u, &cfg, mesh).map_err(|e| solver_error(e, iterations, res))?;
        let rhs: Vec<f64> = r.values().iter().map(|v| -v).collect();
        let du = GridFunction::new(j.solve(&rhs).map_err(|e| solver_error(e, iterations, res))?);
        let mut t = 1.0;
        loop {
            let trial = u.axpy(t, &du);
            let tr = strong_residual_norm(&trial, &cfg, mesh);
            if tr.is_finite() && (tr <= (1.0 - 1e-4 * t) * res || tr <= threshold(&trial, &cfg, mesh, opts.tol)) {
                u = trial;
                res = tr;
                break;
            }
            t *= 0.5;
            if t < 1e-10 {
                return Err(Error::Solver { reason: "line search failed".into(), iterations, residual: res });
            }
        }
    }
    let positive = is_positive(&u, mesh);
    Ok(NewtonOutcome { u, iterations, residual: res, positive })
}

fn solver_error(e: Error, iterations: usize, residual: f64) -> Error {
    Error::Solver { reason: e.to_string(), iterations, residual }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Right,
    Left,
}

/// `(λ ± δλ, ε φ)` with `δλ = 0.02 |λ|`.
pub fn bifurcation_predictor(e: &EigenResult, epsilon: f64, side: Side) -> (f64, GridFunction) {
    if epsilon == 0.0 {
        return (e.lambda, e.eigenfunction.scaled(0.0));
    }
    let dl = 0.02 * e.lambda.abs();
    let lambda = match side {
        Side::Right => e.lambda + dl,
        Side::Left => e.lambda - dl,
    };
    (lambda, e.eigenfunction.scaled(epsilon))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub lambda: f64,
    pub u: GridFunction,
    pub sup_norm: f64,
    pub lp_star_norm: f64,
    pub sobolev_norm: f64,
    /// λ-component of the unit secant arriving at this point.
    pub tangent_dlambda: f64,
    pub is_fold: bool,
    pub residual_norm: f64,
}

impl BranchPoint {
    pub fn new(lambda: f64, u: GridFunction, cfg: &OperatorConfig, mesh: &RadialMesh) -> Result<Self> {
        let p_star = critical_exponent(cfg.dim, cfg.p)?;
        let c = cfg.clone().with_lambda(lambda);
        Ok(BranchPoint {
            lambda,
            sup_norm: u.sup_norm(),
            lp_star_norm: norm(&u, mesh, NormKind::Lebesgue(p_star)),
            sobolev_norm: norm(&u, mesh, NormKind::SobolevSeminorm(cfg.p)),
            tangent_dlambda: 0.0,
            is_fold: false,
            residual_norm: strong_residual_norm(&u, &c, mesh),
            u,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchOrigin {
    Lambda1,
    LambdaMinus1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Reconnected,
    NormCap,
    LambdaCap,
    StepFailure,
    /// A corrected point was not positive; the branch is truncated there.
    PositivityLost,
    /// The point budget ran out first.
    PointBudget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub origin: BranchOrigin,
    pub termination: Termination,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepControl {
    pub newton: NewtonOptions,
    /// Number of sup-norm-pinned points before switching to arclength.
    pub pinned_points: usize,
    /// Ratio between consecutive pinned amplitudes.
    pub pinned_growth: f64,
    pub initial_step: Option<f64>,
    pub min_step: f64,
    pub max_step: f64,
    pub max_points: usize,
    /// Newton iterations at or below which the step is doubled.
    pub fast_iterations: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            newton: NewtonOptions::default(),
            pinned_points: 3,
            pinned_growth: 1.25,
            initial_step: None,
            min_step: 1e-7,
            max_step: 0.5,
            max_points: 400,
            fast_iterations: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub norm_cap: f64,
    pub lambda_window: (f64, f64),
    /// Reconnection: sup-norm at most this and λ within `reconnect_lambda_tol`
    /// of `reconnect_target`.
    pub reconnect_norm: f64,
    pub reconnect_target: Option<f64>,
    pub reconnect_lambda_tol: f64,
}

impl Caps {
    /// Defaults for a branch between the principal eigenvalues.
    pub fn between(lambda_1: f64, lambda_minus_1: f64, seed_amplitude: f64) -> Self {
        let span = if lambda_1.is_finite() && lambda_minus_1.is_finite() {
            (lambda_1 - lambda_minus_1).abs()
        } else {
            lambda_1.abs().max(lambda_minus_1.abs()).min(f64::MAX)
        };
        Caps {
            norm_cap: 1e3,
            lambda_window: (-1e6, 1e6),
            reconnect_norm: seed_amplitude,
            reconnect_target: None,
            reconnect_lambda_tol: 0.05 * span,
        }
    }
}

/// Extra scalar equation closing the Newton system.
enum Constraint<'a> {
    /// `u[index] = value`.
    Pin { index: usize, value: f64 },
    /// `⟨u - u_pred, τ_u⟩ + (λ - λ_pred) τ_λ / Λ² = 0`.
    Arclength { u_pred: &'a [f64], lambda_pred: f64, tau_u: &'a [f64], tau_lambda: f64 },
}

/// Inner-product weights `μ_i / |Ω|` and the λ scale `Λ`.
struct Metric {
    w: Vec<f64>,
    lambda_scale: f64,
}

impl Metric {
    fn new(mesh: &RadialMesh, lambda_scale: f64) -> Self {
        let vol = mesh.volume();
        Metric {
            w: mesh.lumped_weights().iter().map(|m| m / vol).collect(),
            lambda_scale: lambda_scale.abs().max(1.0),
        }
    }

    fn dot_u(&self, a: &[f64], b: &[f64]) -> f64 {
        self.w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
    }

    fn dot(&self, au: &[f64], al: f64, bu: &[f64], bl: f64) -> f64 {
        self.dot_u(au, bu) + al * bl / self.lambda_scale.powi(2)
    }

    fn norm(&self, du: &[f64], dl: f64) -> f64 {
        (self.dot_u(du, du) + (dl / self.lambda_scale).powi(2)).sqrt()
    }
}

/// Newton on the residual plus one constraint, with `(u, λ)` unknown.
fn correct(
    u: &GridFunction,
    lambda: f64,
    constraint: &Constraint,
    metric: &Metric,
    cfg: &OperatorConfig,
    mesh: &RadialMesh,
    opts: &NewtonOptions,
) -> Result<(GridFunction, f64, usize, f64)> {
    let mut u = u.clone();
    let mut lambda = lambda;
    let mut c = cfg.clone();
    let mut first = None;
    for it in 0..=opts.max_iter {
        c.lambda = lambda;
        let r = residual(&u, &c, mesh);
        let res = strong_residual_norm(&u, &c, mesh);
        let (gval, row, d) = match constraint {
            Constraint::Pin { index, value } => {
                let mut row = vec![0.0; mesh.len()];
                row[*index] = 1.0;
                (u.values()[*index] - value, row, 0.0)
            }
            Constraint::Arclength { u_pred, lambda_pred, tau_u, tau_lambda } => {
                let du: Vec<f64> = u.values().iter().zip(*u_pred).map(|(a, b)| a - b).collect();
                let l2 = metric.lambda_scale.powi(2);
                let row: Vec<f64> = metric.w.iter().zip(*tau_u).map(|(w, t)| w * t).collect();
                (metric.dot_u(&du, tau_u) + (lambda - lambda_pred) * tau_lambda / l2, row, tau_lambda / l2)
            }
        };
        let limit = threshold(&u, &c, mesh, opts.tol);
        if !res.is_finite() {
            break;
        }
        let gtol = match constraint {
            Constraint::Pin { value, .. } => 1e-12 * value.abs(),
            Constraint::Arclength { .. } => 1e-12 * metric.norm(u.values(), lambda),
        };
        if res <= limit && gval.abs() <= gtol && it > 0 {
            return Ok((u, lambda, it, res));
        }
        if it == opts.max_iter {
            break;
        }
        let r0 = *first.get_or_insert(res);
        if res > 1e6 * r0.max(limit) {
            break;
        }
        let j = jacobian(&u, &c, mesh)?;
        let rl = lambda_derivative(&u, &c, mesh);
        let rhs: Vec<f64> = r.values().iter().map(|v| -v).collect();
        let (du, dl) = solve_bordered(&j, &rl, &row, d, &rhs, -gval)?;
        u = GridFunction::with_dirichlet(mesh, u.values().iter().zip(&du).map(|(a, b)| a + b).collect());
        lambda += dl;
    }
    c.lambda = lambda;
    Err(Error::Solver {
        reason: "corrector did not converge".into(),
        iterations: opts.max_iter,
        residual: strong_residual_norm(&u, &c, mesh),
    })
}

/// First branch point from an eigenpair: λ free, amplitude pinned at `epsilon`
/// at the peak of the eigenfunction, starting from the predictor.
pub fn seed_point(
    e: &EigenResult,
    epsilon: f64,
    side: Side,
    cfg: &OperatorConfig,
    mesh: &RadialMesh,
    opts: &NewtonOptions,
) -> Result<BranchPoint> {
    if !e.converged() {
        return Err(Error::Validation(format!("eigenpair is not converged ({:?})", e.status)));
    }
    let (l0, u0) = bifurcation_predictor(e, epsilon, side);
    if epsilon == 0.0 {
        return BranchPoint::new(l0, u0, cfg, mesh);
    }
    let index = e.eigenfunction.argmax_abs();
    let metric = Metric::new(mesh, e.lambda);
    let (u, lambda, _, _) = correct(&u0, l0, &Constraint::Pin { index, value: epsilon }, &metric, cfg, mesh, opts)?;
    if !is_positive(&u, mesh) {
        return Err(Error::Solver { reason: "seed point is not positive".into(), iterations: 0, residual: 0.0 });
    }
    BranchPoint::new(lambda, u, cfg, mesh)
}

fn unit_secant(metric: &Metric, a: &BranchPoint, b: &BranchPoint) -> (Vec<f64>, f64, f64) {
    let du: Vec<f64> = b.u.values().iter().zip(a.u.values()).map(|(x, y)| x - y).collect();
    let dl = b.lambda - a.lambda;
    let len = metric.norm(&du, dl);
    (du.iter().map(|x| x / len).collect(), dl / len, len)
}

/// Trace a branch from `start`, a positive solution. Stops on the first
/// termination condition; every accepted point is a converged positive
/// solution. `norm_cap` termination does not prove unboundedness.
pub fn trace_branch(
    start: BranchPoint,
    origin: BranchOrigin,
    cfg: &OperatorConfig,
    mesh: &RadialMesh,
    ctrl: &StepControl,
    caps: &Caps,
) -> Branch {
    let metric = Metric::new(mesh, start.lambda);
    let mut branch = Branch { points: vec![start], origin, termination: Termination::PointBudget, diagnostic: None };
    if ctrl.max_points <= 1 {
        return branch;
    }
    let index = branch.points[0].u.argmax_abs();

    // Pinned phase.
    while branch.points.len() < ctrl.pinned_points.max(1) && branch.points.len() < ctrl.max_points {
        let last = branch.points.last().unwrap();
        let value = last.u.values()[index] * ctrl.pinned_growth;
        let guess = last.u.scaled(ctrl.pinned_growth);
        match correct(&guess, last.lambda, &Constraint::Pin { index, value }, &metric, cfg, mesh, &ctrl.newton) {
            Ok((u, lambda, _, _)) => {
                if let Some(t) = accept(&mut branch, lambda, u, cfg, mesh, caps) {
                    branch.termination = t;
                    finish(&mut branch, &metric);
                    return branch;
                }
            }
            Err(e) => {
                branch.termination = Termination::StepFailure;
                branch.diagnostic = Some(format!("pinned corrector failed: {e}"));
                finish(&mut branch, &metric);
                return branch;
            }
        }
    }

    // Arclength phase.
    let mut step = ctrl.initial_step.unwrap_or_else(|| {
        let n = branch.points.len();
        if n >= 2 {
            unit_secant(&metric, &branch.points[n - 2], &branch.points[n - 1]).2
        } else {
            ctrl.min_step * 100.0
        }
    });
    let (mut tau_u, mut tau_l) = if branch.points.len() >= 2 {
        let n = branch.points.len();
        let (u, l, _) = unit_secant(&metric, &branch.points[n - 2], &branch.points[n - 1]);
        (u, l)
    } else {
        let p = &branch.points[0];
        let len = metric.norm(p.u.values(), 0.0);
        (p.u.values().iter().map(|x| x / len).collect(), 0.0)
    };
    let mut positivity_failures = 0usize;
    while branch.points.len() < ctrl.max_points {
        let last = branch.points.last().unwrap().clone();
        // Approach the trivial line geometrically so reconnection is resolved.
        let amplitude = metric.norm(last.u.values(), 0.0);
        let h = if metric.dot_u(&tau_u, last.u.values()) < 0.0 { step.min(0.5 * amplitude) } else { step };
        let u_pred: Vec<f64> = last.u.values().iter().zip(&tau_u).map(|(a, t)| a + h * t).collect();
        let lambda_pred = last.lambda + h * tau_l;
        let guess = GridFunction::with_dirichlet(mesh, u_pred.clone());
        let constraint = Constraint::Arclength { u_pred: &u_pred, lambda_pred, tau_u: &tau_u, tau_lambda: tau_l };
        let rejection = match correct(&guess, lambda_pred, &constraint, &metric, cfg, mesh, &ctrl.newton) {
            Ok((u, lambda, iters, _)) => {
                let probe = BranchPoint { lambda, u: u.clone(), ..last.clone() };
                let (nu, nl, _) = unit_secant(&metric, &last, &probe);
                let offset: Vec<f64> = u.values().iter().zip(&u_pred).map(|(a, b)| a - b).collect();
                if metric.norm(&offset, lambda - lambda_pred) > h {
                    format!("corrector drifted beyond the step")
                } else if metric.dot(&nu, nl, &tau_u, tau_l) < 0.0 {
                    format!("step reversed direction")
                } else if !is_positive(&u, mesh) {
                    positivity_failures += 1;
                    format!("corrected solution is not positive at λ = {lambda}")
                } else {
                    if let Some(t) = accept(&mut branch, lambda, u, cfg, mesh, caps) {
                        branch.termination = t;
                        finish(&mut branch, &metric);
                        return branch;
                    }
                    positivity_failures = 0;
                    tau_u = nu;
                    tau_l = nl;
                    if iters <= ctrl.fast_iterations {
                        step = (2.0 * h).min(ctrl.max_step);
                    } else {
                        step = h;
                    }
                    continue;
                }
            }
            Err(e) => e.to_string(),
        };
        log::debug!("step {h:e} from λ = {} rejected: {rejection}", last.lambda);
        step = 0.5 * h;
        if step < ctrl.min_step {
            if positivity_failures > 0 {
                branch.termination = Termination::PositivityLost;
                branch.diagnostic = Some(format!("{rejection}; branch truncated"));
            } else {
                branch.termination = Termination::StepFailure;
                branch.diagnostic = Some(format!("step fell below {:e}: {rejection}", ctrl.min_step));
            }
            break;
        }
    }
    finish(&mut branch, &metric);
    branch
}

/// Append a corrected point, returning a termination if one applies.
fn accept(
    branch: &mut Branch,
    lambda: f64,
    u: GridFunction,
    cfg: &OperatorConfig,
    mesh: &RadialMesh,
    caps: &Caps,
) -> Option<Termination> {
    if !is_positive(&u, mesh) {
        branch.diagnostic = Some(format!("non-positive solution at λ = {lambda}; branch truncated"));
        return Some(Termination::PositivityLost);
    }
    let point = match BranchPoint::new(lambda, u, cfg, mesh) {
        Ok(p) => p,
        Err(e) => {
            branch.diagnostic = Some(e.to_string());
            return Some(Termination::StepFailure);
        }
    };
    let (sup, l) = (point.sup_norm, point.lambda);
    branch.points.push(point);
    if sup > caps.norm_cap {
        return Some(Termination::NormCap);
    }
    if l < caps.lambda_window.0 || l > caps.lambda_window.1 {
        return Some(Termination::LambdaCap);
    }
    if let Some(target) = caps.reconnect_target {
        if sup <= caps.reconnect_norm && (l - target).abs() <= caps.reconnect_lambda_tol {
            return Some(Termination::Reconnected);
        }
    }
    None
}

/// Fill in secant tangents and fold marks.
fn finish(branch: &mut Branch, metric: &Metric) {
    let n = branch.points.len();
    for k in 1..n {
        let (_, tl, _) = unit_secant(metric, &branch.points[k - 1], &branch.points[k]);
        branch.points[k].tangent_dlambda = tl;
    }
    if n >= 2 {
        branch.points[0].tangent_dlambda = branch.points[1].tangent_dlambda;
    }
    for k in detect_folds(branch) {
        branch.points[k].is_fold = true;
    }
}

/// Indices `k` where `tangent_dlambda` changes sign between `k` and `k + 1`,
/// i.e. where λ has a local extremum along the branch.
pub fn detect_folds(b: &Branch) -> Vec<usize> {
    let t: Vec<f64> = b.points.iter().map(|p| p.tangent_dlambda).collect();
    folds_of(&t)
}

pub fn folds_of(tangent_dlambda: &[f64]) -> Vec<usize> {
    if tangent_dlambda.len() < 3 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut prev: Option<(usize, f64)> = None;
    for (k, &t) in tangent_dlambda.iter().enumerate() {
        if t == 0.0 {
            continue;
        }
        if let Some((j, s)) = prev {
            if s.signum() != t.signum() {
                out.push(j.max(k - 1));
            }
        }
        prev = Some((k, t));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{principal_eigenvalue, EigenOptions, Sign};
    use crate::geometry::{build_mesh, DomainKind};
    use crate::nonlinearity::Nonlinearity;

    fn ball(n: usize) -> RadialMesh {
        build_mesh(DomainKind::Ball { radius: 1.0 }, 3, n, 1.0).unwrap()
    }

    fn config(mesh: &RadialMesh, v: impl Fn(f64) -> f64, m: impl Fn(f64) -> f64) -> OperatorConfig {
        OperatorConfig::new(
            2.0,
            3,
            GridFunction::from_fn(mesh, v),
            GridFunction::from_fn(mesh, m),
            Nonlinearity::log_damped(6.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn trivial_solution_in_zero_iterations() {
        let mesh = ball(51);
        let cfg = config(&mesh, |_| 1.0, |_| 0.0);
        let out = newton_solve(0.0, &GridFunction::zeros(&mesh), &cfg, &mesh, &NewtonOptions::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.u.sup_norm(), 0.0);
    }

    #[test]
    fn manufactured_solution_recovered() {
        let mut errs = Vec::new();
        for n in [101, 201] {
            let mesh = ball(n);
            let cfg = config(&mesh, |_| 1.0, |_| 0.0).with_source(GridFunction::new(vec![6.0; n]));
            let out = newton_solve(0.0, &GridFunction::zeros(&mesh), &cfg, &mesh, &NewtonOptions::default()).unwrap();
            assert!(out.positive);
            let err = mesh
                .nodes()
                .iter()
                .zip(out.u.values())
                .map(|(r, u)| (u - (1.0 - r * r)).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[1] < 1e-3, "{errs:?}");
        assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
    }

    #[test]
    fn predictor_construction() {
        let mesh = ball(101);
        let e = principal_eigenvalue(&GridFunction::new(vec![1.0; 101]), &mesh, 2.0, Sign::Plus, &EigenOptions::default());
        let (l, u) = bifurcation_predictor(&e, 0.0, Side::Right);
        assert_eq!(l, e.lambda);
        assert_eq!(u.sup_norm(), 0.0);
        let (l, u) = bifurcation_predictor(&e, 0.01, Side::Right);
        assert!((u.sup_norm() - 0.01).abs() < 1e-15);
        assert!(l > e.lambda);
        let (l, _) = bifurcation_predictor(&e, 0.01, Side::Left);
        assert!(l < e.lambda);
    }

    #[test]
    fn single_point_branch() {
        let mesh = ball(101);
        let cfg = config(&mesh, |_| 1.0, |_| -1.0);
        let e = principal_eigenvalue(&cfg.v, &mesh, 2.0, Sign::Plus, &EigenOptions::default());
        let start = seed_point(&e, 0.0, Side::Right, &cfg, &mesh, &NewtonOptions::default()).unwrap();
        let ctrl = StepControl { max_points: 1, ..StepControl::default() };
        let b = trace_branch(start, BranchOrigin::Lambda1, &cfg, &mesh, &ctrl, &Caps::between(e.lambda, f64::NEG_INFINITY, 0.01));
        assert_eq!(b.points.len(), 1);
    }

    #[test]
    fn fold_detection() {
        assert!(folds_of(&[1.0, 0.5, 0.2, 0.1]).is_empty());
        // λ = sin(s): dλ/ds on secants, extrema of sin at π/2 and 3π/2
        let s: Vec<f64> = (0..40).map(|k| k as f64 * 0.2).collect();
        let l: Vec<f64> = s.iter().map(|x| x.sin()).collect();
        let mut t = vec![0.0];
        t.extend(l.windows(2).map(|w| w[1] - w[0]));
        t[0] = t[1];
        let folds = folds_of(&t);
        let extrema: Vec<usize> = (1..39).filter(|&k| (l[k] - l[k - 1]) * (l[k + 1] - l[k]) < 0.0).collect();
        assert_eq!(folds, extrema);
        assert_eq!(folds.len(), 2);
    }

    #[test]
    fn negative_m_branch_goes_right() {
        let mesh = ball(201);
        let cfg = config(&mesh, |_| 1.0, |_| -1.0);
        let opts = EigenOptions { tol: 1e-12, ..EigenOptions::default() };
        let e = principal_eigenvalue(&cfg.v, &mesh, 2.0, Sign::Plus, &opts);
        let newton = NewtonOptions { tol: 1e-12, max_iter: 30 };
        let start = seed_point(&e, 0.1, Side::Right, &cfg, &mesh, &newton).unwrap();
        let ctrl = StepControl { newton, max_points: 30, ..StepControl::default() };
        let caps = Caps { norm_cap: 5.0, ..Caps::between(e.lambda, f64::NEG_INFINITY, 0.1) };
        let b = trace_branch(start, BranchOrigin::Lambda1, &cfg, &mesh, &ctrl, &caps);
        assert!(b.points.len() > 5, "{:?} {:?}", b.termination, b.diagnostic);
        for p in &b.points {
            assert!(p.lambda > e.lambda, "{} vs {}", p.lambda, e.lambda);
            assert!(p.residual_norm <= 1e-9);
        }
        assert!(b.points.windows(2).all(|w| w[1].lambda > w[0].lambda));
        assert!(detect_folds(&b).is_empty());
    }
}
