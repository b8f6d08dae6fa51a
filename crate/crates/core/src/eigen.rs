//! Principal eigenvalues of `-Δ_p φ = λ V |φ|^{p-2} φ` with an indefinite
//! weight, by minimizing `∫|∇u|^p` over `{∫ V |u|^p = 1}`.
//!
//! Each step takes the gradient of the Lagrangian `∫|∇u|^p - λ∫V|u|^p`,
//! preconditions it with the secant stiffness at the current iterate, runs
//! an Armijo backtracking on the Rayleigh quotient and renormalizes. For
//! `p = 2` a unit step is exactly one inverse-iteration step.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{GridFunction, Interval, RadialMesh};
use crate::tridiag::{dot, TridiagonalSystem};
use crate::weights::{evaluate, WeightSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenStatus {
    Converged,
    NoSignMass,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub lambda: f64,
    /// Non-negative, sup-norm 1 (all zeros for the sentinel).
    pub eigenfunction: GridFunction,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub status: EigenStatus,
}

impl EigenResult {
    pub fn converged(&self) -> bool {
        self.status == EigenStatus::Converged
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { tol: 1e-9, max_iter: 50_000 }
    }
}

/// `+1` for λ₁(V), `-1` for λ₋₁(V).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `Σ c_k |D_k|^p`, the discrete `∫|∇u|^p`.
pub fn dirichlet_energy(u: &[f64], mesh: &RadialMesh, p: f64) -> f64 {
    u.windows(2)
        .enumerate()
        .map(|(k, w)| mesh.cell_measures()[k] * ((w[1] - w[0]) / mesh.spacing(k)).abs().powf(p))
        .sum()
}

/// `Σ μ_i V_i |u_i|^p`, the discrete `∫ V |u|^p`.
pub fn weighted_mass(u: &[f64], v: &[f64], mesh: &RadialMesh, p: f64) -> f64 {
    mesh.free_nodes()
        .map(|i| mesh.lumped_weights()[i] * v[i] * u[i].abs().powf(p))
        .sum()
}

pub fn rayleigh_quotient(u: &GridFunction, v: &GridFunction, mesh: &RadialMesh, p: f64) -> f64 {
    dirichlet_energy(u.values(), mesh, p) / weighted_mass(u.values(), v.values(), mesh, p)
}

fn signed_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(e) * x.signum()
    }
}

/// Stiffness `Σ c_k |D_k|^{p-2} D_k ∂D_k/∂u_i` (gradient of the energy over `p`).
fn stiffness(u: &[f64], mesh: &RadialMesh, p: f64) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for k in 0..u.len() - 1 {
        let h = mesh.spacing(k);
        let flux = mesh.cell_measures()[k] * signed_pow((u[k + 1] - u[k]) / h, p - 1.0) / h;
        out[k] -= flux;
        out[k + 1] += flux;
    }
    out
}

/// Gradient of the Lagrangian over `p`, zero at Dirichlet nodes.
fn lagrangian_gradient(u: &[f64], v: &[f64], lambda: f64, mesh: &RadialMesh, p: f64) -> Vec<f64> {
    let mut g = stiffness(u, mesh, p);
    for (i, gi) in g.iter_mut().enumerate() {
        if mesh.dirichlet_mask()[i] {
            *gi = 0.0;
        } else {
            *gi -= lambda * mesh.lumped_weights()[i] * v[i] * signed_pow(u[i], p - 1.0);
        }
    }
    g
}

/// Stiffness with weights `max(1, p-1) (D² + δ²)^{(p-2)/2}`, the larger of
/// the secant and tangent weights, so the step never overshoots in
/// stiffness-dominated directions. Identity at Dirichlet rows.
fn secant_stiffness(u: &[f64], v: &[f64], lambda: f64, mesh: &RadialMesh, p: f64) -> TridiagonalSystem {
    let n = u.len();
    let slopes: Vec<f64> = (0..n - 1).map(|k| (u[k + 1] - u[k]) / mesh.spacing(k)).collect();
    let dmax = slopes.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    let delta2 = (1e-6 * dmax).powi(2).max(f64::MIN_POSITIVE);
    let lift = (p - 1.0).max(1.0);
    let mut t = TridiagonalSystem::zeros(n);
    for (k, d) in slopes.iter().enumerate() {
        let w = if p == 2.0 { 1.0 } else { lift * (d * d + delta2).powf(0.5 * (p - 2.0)) };
        let s = mesh.cell_measures()[k] * w / mesh.spacing(k).powi(2);
        t.main[k] += s;
        t.main[k + 1] += s;
        t.sub[k] -= s;
        t.sup[k] -= s;
    }
    // Where λV < 0 the weight term is a positive potential; leaving it out
    // wrecks the conditioning once λ is large.
    let umax = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let du2 = if p < 2.0 { (1e-3 * umax).powi(2).max(f64::MIN_POSITIVE) } else { 0.0 };
    for i in 0..n {
        let lv = lambda * v[i];
        if lv < 0.0 {
            let w = if p == 2.0 { 1.0 } else { lift * (u[i] * u[i] + du2).powf(0.5 * (p - 2.0)) };
            t.main[i] -= mesh.lumped_weights()[i] * lv * w;
        }
    }
    for i in 0..n {
        if mesh.dirichlet_mask()[i] {
            t.main[i] = 1.0;
            if i > 0 {
                t.sub[i - 1] = 0.0;
                t.sup[i - 1] = 0.0;
            }
            if i + 1 < n {
                t.sub[i] = 0.0;
                t.sup[i] = 0.0;
            }
        }
    }
    t
}

/// Pointwise eigen-residual `max |S_i/μ_i - λ V_i |u_i|^{p-2}u_i|` of the
/// sup-normalized `u`, relative to `max(|λ|, 1)`.
pub fn kkt_residual(u: &GridFunction, v: &GridFunction, lambda: f64, mesh: &RadialMesh, p: f64) -> f64 {
    let sup = u.sup_norm();
    if sup == 0.0 {
        return f64::INFINITY;
    }
    let w: Vec<f64> = u.values().iter().map(|x| x / sup).collect();
    let g = lagrangian_gradient(&w, v.values(), lambda, mesh, p);
    let r = mesh.free_nodes()
        .map(|i| g[i].abs() / mesh.lumped_weights()[i])
        .fold(0.0, f64::max);
    r / lambda.abs().max(1.0)
}

/// Round-off level of [`kkt_residual`]: machine epsilon times
/// `Σ_j |K_ij| |u_j| / μ_i` with `K` the secant stiffness, the backward error
/// of the linear solves that produce the iterate.
pub fn kkt_floor(u: &GridFunction, v: &GridFunction, lambda: f64, mesh: &RadialMesh, p: f64) -> f64 {
    let sup = u.sup_norm();
    if sup == 0.0 {
        return 0.0;
    }
    let w: Vec<f64> = u.values().iter().map(|x| x / sup).collect();
    let mut mag = vec![0.0; w.len()];
    for k in 0..w.len() - 1 {
        let h = mesh.spacing(k);
        let d = (w[k + 1] - w[k]) / h;
        if d != 0.0 {
            let entry = mesh.cell_measures()[k] * d.abs().powf(p - 2.0) / (h * h);
            let t = entry * (w[k].abs() + w[k + 1].abs());
            mag[k] += t;
            mag[k + 1] += t;
        }
    }
    let r = mesh.free_nodes()
        .map(|i| {
            let mu = mesh.lumped_weights()[i];
            (mag[i] + (lambda * mu * v.values()[i] * signed_pow(w[i], p - 1.0)).abs()) / mu
        })
        .fold(0.0, f64::max);
    f64::EPSILON * r / lambda.abs().max(1.0)
}

/// Node range (inclusive) of the longest run of free nodes with `V > 0`,
/// measured in `r`.
fn largest_positive_run(v: &[f64], mesh: &RadialMesh) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, f64)> = None;
    let mut start = None;
    for i in 0..=v.len() {
        let inside = i < v.len() && !mesh.dirichlet_mask()[i] && v[i] > 0.0;
        match (inside, start) {
            (true, None) => start = Some(i),
            (false, Some(a)) => {
                let b = i - 1;
                let lo = mesh.nodes()[a.saturating_sub(1)];
                let hi = mesh.nodes()[(b + 1).min(v.len() - 1)];
                if best.map_or(true, |(_, _, len)| hi - lo > len) {
                    best = Some((a, b, hi - lo));
                }
                start = None;
            }
            _ => {}
        }
    }
    best.map(|(a, b, _)| (a, b))
}

/// Hat function peaking at fraction `at` of the largest run where `V > 0`.
fn initial_bump(v: &[f64], mesh: &RadialMesh, at: f64) -> Option<Vec<f64>> {
    let (a, b) = largest_positive_run(v, mesh)?;
    let nodes = mesh.nodes();
    let lo = nodes[a.saturating_sub(1)];
    let hi = nodes[(b + 1).min(nodes.len() - 1)];
    let c = lo + at * (hi - lo);
    let w = (c - lo).min(hi - c);
    let mut u: Vec<f64> = nodes
        .iter()
        .enumerate()
        .map(|(i, &r)| if i >= a && i <= b { (1.0 - (r - c).abs() / w).max(0.0) } else { 0.0 })
        .collect();
    if u.iter().all(|&x| x == 0.0) {
        // Run narrower than the hat resolution: single-node spike.
        let i = (a..=b).min_by(|&i, &j| (nodes[i] - c).abs().total_cmp(&(nodes[j] - c).abs())).unwrap();
        u[i] = 1.0;
    }
    Some(u)
}

fn has_sign_mass(v: &[f64], mesh: &RadialMesh) -> bool {
    mesh.free_nodes().any(|i| v[i] > 0.0 && mesh.lumped_weights()[i] > 0.0)
}

fn sentinel(mesh: &RadialMesh, sign: Sign) -> EigenResult {
    EigenResult {
        lambda: sign.factor() * f64::INFINITY,
        eigenfunction: GridFunction::zeros(mesh),
        iterations: 0,
        kkt_residual: f64::NAN,
        status: EigenStatus::NoSignMass,
    }
}

/// [`kkt_residual`] restricted to nodes the quotient can resolve. A node
/// with `p |g_i| u_i ≤ 8ε|λ|` moves `Q` by less than its rounding, so no
/// descent step can correct it; for `p < 2` such nodes sit in the
/// exponentially small tail and carry residuals of order `λ|V| u^{p-1}`.
fn resolved_kkt(u: &[f64], v: &[f64], lambda: f64, mesh: &RadialMesh, p: f64) -> f64 {
    let sup = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if sup == 0.0 {
        return f64::INFINITY;
    }
    let g = lagrangian_gradient(u, v, lambda, mesh, p);
    let resolution = 8.0 * f64::EPSILON * lambda.abs();
    // g is homogeneous of degree p-1 in u
    let scale = sup.powf(p - 1.0);
    mesh.free_nodes()
        .filter(|&i| p * g[i].abs() * u[i].abs() > resolution)
        .map(|i| g[i].abs() / mesh.lumped_weights()[i] / scale)
        .fold(0.0, f64::max)
        / lambda.abs().max(1.0)
}

/// Minimize the Rayleigh quotient over `{∫V|u|^p > 0}` starting from `u0`.
pub fn minimize_from(
    v: &GridFunction,
    mesh: &RadialMesh,
    p: f64,
    u0: &GridFunction,
    opts: &EigenOptions,
) -> EigenResult {
    assert_eq!(v.len(), mesh.len(), "V is not aligned with the mesh");
    assert_eq!(u0.len(), mesh.len(), "initial guess is not aligned with the mesh");
    let vv = v.values();
    let mut u: Vec<f64> = u0
        .values()
        .iter()
        .enumerate()
        .map(|(i, x)| if mesh.dirichlet_mask()[i] { 0.0 } else { x.abs() })
        .collect();
    let g0 = weighted_mass(&u, vv, mesh, p);
    if !(g0 > 0.0) {
        return sentinel(mesh, Sign::Plus);
    }
    let normalize = |u: &mut Vec<f64>| {
        let g = weighted_mass(u, vv, mesh, p);
        let s = g.powf(-1.0 / p);
        u.iter_mut().for_each(|x| *x *= s);
    };
    normalize(&mut u);
    let mut lambda = dirichlet_energy(&u, mesh, p);
    let mut iterations = 0;
    let mut status = EigenStatus::MaxIter;
    let mut kkt = f64::INFINITY;

    while iterations < opts.max_iter {
        iterations += 1;
        let g = lagrangian_gradient(&u, vv, lambda, mesh, p);
        let k = secant_stiffness(&u, vv, lambda, mesh, p);
        let d: Vec<f64> = match k.solve(&g) {
            Ok(x) => x.iter().map(|x| -x).collect(),
            Err(_) => g.iter().map(|x| -x).collect(),
        };
        // ∇Q·d at the normalized iterate equals p g·d.
        let slope = p * dot(&g, &d);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let w: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let gw = weighted_mass(&w, vv, mesh, p);
            if gw > 0.0 {
                let q = dirichlet_energy(&w, mesh, p) / gw;
                if q <= lambda + 1e-4 * t * slope + 8.0 * f64::EPSILON * lambda.abs() {
                    accepted = Some(w);
                    break;
                }
            }
            t *= 0.5;
        }
        let Some(w) = accepted else {
            // No descent left at round-off level.
            let uu = GridFunction::new(u.clone());
            kkt = kkt_residual(&uu, v, lambda, mesh, p);
            let settled = kkt.min(resolved_kkt(&u, vv, lambda, mesh, p));
            if settled < opts.tol.max(kkt_floor(&uu, v, lambda, mesh, p)) {
                status = EigenStatus::Converged;
            }
            break;
        };
        u = w.into_iter().map(f64::abs).collect();
        normalize(&mut u);
        let next = dirichlet_energy(&u, mesh, p);
        let change = (next - lambda).abs() / next.abs();
        lambda = next;
        if change < opts.tol {
            let uu = GridFunction::new(u.clone());
            kkt = kkt_residual(&uu, v, lambda, mesh, p);
            let settled = kkt.min(resolved_kkt(&u, vv, lambda, mesh, p));
            if settled < opts.tol.max(kkt_floor(&uu, v, lambda, mesh, p)) {
                status = EigenStatus::Converged;
                break;
            }
        }
    }
    if !kkt.is_finite() {
        kkt = kkt_residual(&GridFunction::new(u.clone()), v, lambda, mesh, p);
    }
    let sup = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let phi = GridFunction::with_dirichlet(mesh, u.iter().map(|x| x / sup).collect());
    EigenResult { lambda, eigenfunction: phi, iterations, kkt_residual: kkt, status }
}

/// λ₁(V) for `Sign::Plus`, λ₋₁(V) = -λ₁(-V) for `Sign::Minus`.
pub fn principal_eigenvalue(v: &GridFunction, mesh: &RadialMesh, p: f64, sign: Sign, opts: &EigenOptions) -> EigenResult {
    let sv = v.scaled(sign.factor());
    if !has_sign_mass(sv.values(), mesh) {
        return sentinel(mesh, sign);
    }
    let u0 = initial_bump(sv.values(), mesh, 0.5).expect("sign mass implies a positive run");
    let mut e = minimize_from(&sv, mesh, p, &GridFunction::new(u0), opts);
    e.lambda *= sign.factor();
    e
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultistartResult {
    pub best: EigenResult,
    pub lambdas: Vec<f64>,
    /// `(max - min) / |best|` over the starts.
    pub spread: f64,
    pub agree: bool,
}

/// Three runs from bumps at 1/4, 1/2 and 3/4 of the largest positive run.
/// Disagreement beyond `tol` is reported, not resolved.
pub fn multistart(v: &GridFunction, mesh: &RadialMesh, p: f64, sign: Sign, opts: &EigenOptions) -> MultistartResult {
    let sv = v.scaled(sign.factor());
    if !has_sign_mass(sv.values(), mesh) {
        let s = sentinel(mesh, sign);
        return MultistartResult { lambdas: vec![s.lambda], best: s, spread: 0.0, agree: true };
    }
    let runs: Vec<EigenResult> = [0.25, 0.5, 0.75]
        .iter()
        .map(|&at| {
            let u0 = initial_bump(sv.values(), mesh, at).expect("sign mass implies a positive run");
            let mut e = minimize_from(&sv, mesh, p, &GridFunction::new(u0), opts);
            e.lambda *= sign.factor();
            e
        })
        .collect();
    let lambdas: Vec<f64> = runs.iter().map(|e| e.lambda).collect();
    let best = runs
        .into_iter()
        .min_by(|a, b| (a.lambda.abs()).total_cmp(&b.lambda.abs()))
        .unwrap();
    let lo = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / best.lambda.abs();
    MultistartResult { best, lambdas, spread, agree: spread <= opts.tol.max(1e-6) }
}

/// Linear interpolation of nodal values at `r`.
fn interpolate(values: &[f64], nodes: &[f64], r: f64) -> f64 {
    let k = nodes.partition_point(|&x| x <= r).clamp(1, nodes.len() - 1);
    let (a, b) = (nodes[k - 1], nodes[k]);
    let t = ((r - a) / (b - a)).clamp(0.0, 1.0);
    values[k - 1] * (1.0 - t) + values[k] * t
}

fn subdomain_with(
    v_at: impl Fn(&RadialMesh, &[Option<usize>]) -> GridFunction,
    component: &Interval,
    mesh: &RadialMesh,
    p: f64,
    sign: Sign,
    opts: &EigenOptions,
) -> Result<EigenResult> {
    let (sub, origin) = mesh.restrict(component)?;
    let v = v_at(&sub, &origin);
    Ok(principal_eigenvalue(&v, &sub, p, sign, opts))
}

/// Principal eigenvalue on the shell over `component`, with Dirichlet pins at
/// its interior endpoints. `V` is carried over from parent nodes and
/// interpolated where the submesh has new nodes.
pub fn subdomain_eigenvalue(
    v: &GridFunction,
    component: &Interval,
    mesh: &RadialMesh,
    p: f64,
    sign: Sign,
    opts: &EigenOptions,
) -> Result<f64> {
    let e = subdomain_with(
        |sub, origin| {
            GridFunction::new(
                sub.nodes()
                    .iter()
                    .zip(origin)
                    .map(|(&r, o)| match o {
                        Some(i) => v.values()[*i],
                        None => interpolate(v.values(), mesh.nodes(), r),
                    })
                    .collect(),
            )
        },
        component,
        mesh,
        p,
        sign,
        opts,
    )?;
    Ok(e.lambda)
}

/// As [`subdomain_eigenvalue`], evaluating `V` from its piecewise description.
pub fn subdomain_eigenvalue_spec(
    v: &WeightSpec,
    component: &Interval,
    mesh: &RadialMesh,
    p: f64,
    sign: Sign,
    opts: &EigenOptions,
) -> Result<f64> {
    let e = subdomain_with(|sub, _| evaluate(v, sub), component, mesh, p, sign, opts)?;
    Ok(e.lambda)
}

/// `(λ₋₁(V, ω), λ₁(V, ω))` for `ω` the union of `components`: the infimum of
/// λ₁ and the supremum of λ₋₁ over the components. With no components both
/// are infinite sentinels.
pub fn nonexistence_inputs(
    v: &WeightSpec,
    components: &[Interval],
    mesh: &RadialMesh,
    p: f64,
    opts: &EigenOptions,
) -> Result<(f64, f64)> {
    let mut plus = f64::INFINITY;
    let mut minus = f64::NEG_INFINITY;
    for c in components {
        plus = plus.min(subdomain_eigenvalue_spec(v, c, mesh, p, Sign::Plus, opts)?);
        minus = minus.max(subdomain_eigenvalue_spec(v, c, mesh, p, Sign::Minus, opts)?);
    }
    Ok((minus, plus))
}
