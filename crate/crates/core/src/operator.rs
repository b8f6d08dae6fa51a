//! Discrete radial p-Laplacian: residual and Jacobian of the weak form of
//! `-Δ_p u = λ V |u|^{p-2} u + m f(u⁺) + source` with P1 elements in `r`.
//!
//! With midpoint slopes `D_k`, exact shell measures `c_k` and lumped masses
//! `μ_i`, the residual at a free node is
//!
//! ```text
//! R_i = Σ_k c_k φ(D_k) ∂D_k/∂u_i - μ_i [λ V_i |u_i|^{p-2} u_i + m_i f(u_i⁺) + source_i]
//! ```
//!
//! where `φ(g) = (g² + δ²)^{(p-2)/2} g`. Dirichlet rows are identity rows and
//! the origin of a ball carries the natural (zero-flux) condition. `R_i/μ_i`
//! approximates the strong residual pointwise.

use crate::error::{Error, Result};
use crate::geometry::{gradient_midpoints, GridFunction, RadialMesh};
use crate::nonlinearity::{critical_exponent, Nonlinearity};
use crate::tridiag::TridiagonalSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorConfig {
    pub p: f64,
    pub dim: usize,
    pub delta_reg: f64,
    pub lambda: f64,
    pub v: GridFunction,
    pub m: GridFunction,
    pub f: Nonlinearity,
    /// Optional forcing, used for manufactured solutions.
    pub source: Option<GridFunction>,
}

pub const DEFAULT_DELTA_REG: f64 = 1e-10;

impl OperatorConfig {
    pub fn new(p: f64, dim: usize, v: GridFunction, m: GridFunction, f: Nonlinearity) -> Result<Self> {
        critical_exponent(dim, p)?;
        if v.len() != m.len() {
            return Err(Error::config("weights V and m have different lengths"));
        }
        Ok(OperatorConfig {
            p,
            dim,
            delta_reg: DEFAULT_DELTA_REG,
            lambda: 0.0,
            v,
            m,
            f,
            source: None,
        })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_delta_reg(mut self, delta: f64) -> Self {
        assert!(delta >= 0.0, "regularization must be non-negative");
        self.delta_reg = delta;
        self
    }

    pub fn with_source(mut self, source: GridFunction) -> Self {
        self.source = Some(source);
        self
    }

    /// `φ(g) = (g² + δ²)^{(p-2)/2} g`.
    pub fn flux(&self, g: f64) -> f64 {
        if self.p == 2.0 {
            return g;
        }
        let q = g * g + self.delta_reg * self.delta_reg;
        if q == 0.0 {
            return 0.0;
        }
        q.powf(0.5 * (self.p - 2.0)) * g
    }

    /// `φ′(g) = (g² + δ²)^{(p-4)/2} ((p-1) g² + δ²)`.
    pub fn flux_derivative(&self, g: f64) -> f64 {
        if self.p == 2.0 {
            return 1.0;
        }
        let d2 = self.delta_reg * self.delta_reg;
        let q = g * g + d2;
        if q == 0.0 {
            return if self.p > 2.0 { 0.0 } else { f64::INFINITY };
        }
        q.powf(0.5 * (self.p - 4.0)) * ((self.p - 1.0) * g * g + d2)
    }

    fn eigen_term(&self, u: f64) -> f64 {
        if u == 0.0 {
            0.0
        } else {
            u.abs().powf(self.p - 2.0) * u
        }
    }

    fn eigen_term_derivative(&self, u: f64) -> Result<f64> {
        if self.p == 2.0 {
            return Ok(1.0);
        }
        if u != 0.0 {
            return Ok((self.p - 1.0) * u.abs().powf(self.p - 2.0));
        }
        if self.p > 2.0 {
            Ok(0.0)
        } else if self.delta_reg > 0.0 {
            Ok((self.p - 1.0) * self.delta_reg.powf(self.p - 2.0))
        } else {
            Err(Error::SingularLinearization("|u|^{p-2} is singular at u = 0 for p < 2".into()))
        }
    }

    /// Right-hand side `λ V |u|^{p-2}u + m f(u⁺) + source` at node `i`.
    fn rhs(&self, i: usize, u: f64) -> f64 {
        let mut r = self.lambda * self.v.values()[i] * self.eigen_term(u) + self.m.values()[i] * self.f.f(u.max(0.0));
        if let Some(s) = &self.source {
            r += s.values()[i];
        }
        r
    }

    fn check(&self, u: &GridFunction, mesh: &RadialMesh) {
        assert_eq!(u.len(), mesh.len(), "state is not aligned with the mesh");
        assert_eq!(self.v.len(), mesh.len(), "V is not aligned with the mesh");
        assert_eq!(self.m.len(), mesh.len(), "m is not aligned with the mesh");
    }
}

/// Stiffness part `Σ_k c_k φ(D_k) ∂D_k/∂u_i` at every node.
pub fn stiffness_action(u: &GridFunction, cfg: &OperatorConfig, mesh: &RadialMesh) -> Vec<f64> {
    let d = gradient_midpoints(u, mesh);
    let mut out = vec![0.0; mesh.len()];
    for (k, dk) in d.iter().enumerate() {
        let flux = mesh.cell_measures()[k] * cfg.flux(*dk) / mesh.spacing(k);
        out[k] -= flux;
        out[k + 1] += flux;
    }
    out
}

pub fn residual(u: &GridFunction, cfg: &OperatorConfig, mesh: &RadialMesh) -> GridFunction {
    cfg.check(u, mesh);
    let mut r = stiffness_action(u, cfg, mesh);
    let mu = mesh.lumped_weights();
    for (i, ri) in r.iter_mut().enumerate() {
        if mesh.dirichlet_mask()[i] {
            *ri = u.values()[i];
        } else {
            *ri -= mu[i] * cfg.rhs(i, u.values()[i]);
        }
    }
    GridFunction::new(r)
}

/// `max_i |R_i| / μ_i` over free nodes, the pointwise (strong) residual.
pub fn strong_residual_norm(u: &GridFunction, cfg: &OperatorConfig, mesh: &RadialMesh) -> f64 {
    let r = residual(u, cfg, mesh);
    mesh.free_nodes()
        .map(|i| r.values()[i].abs() / mesh.lumped_weights()[i])
        .fold(0.0, f64::max)
}

/// Round-off level of [`strong_residual_norm`] at `u`: machine epsilon times
/// `(Σ_j |J_ij| |u_j| + μ_i |rhs_i|) / μ_i`, maximized over free nodes. This is
/// the smallest residual a backward-stable linear solve can certify.
pub fn residual_floor(u: &GridFunction, cfg: &OperatorConfig, mesh: &RadialMesh) -> f64 {
    cfg.check(u, mesh);
    let d = gradient_midpoints(u, mesh);
    let x = u.values();
    let mut mag = vec![0.0; mesh.len()];
    for (k, dk) in d.iter().enumerate() {
        let dphi = cfg.flux_derivative(*dk);
        if dphi.is_finite() {
            let h = mesh.spacing(k);
            let t = mesh.cell_measures()[k] * dphi / (h * h) * (x[k].abs() + x[k + 1].abs());
            mag[k] += t;
            mag[k + 1] += t;
        }
    }
    mesh.free_nodes()
        .map(|i| {
            let mu = mesh.lumped_weights()[i];
            (mag[i] + mu * cfg.rhs(i, x[i]).abs()) / mu
        })
        .fold(0.0, f64::max)
        * f64::EPSILON
}

/// `∂R/∂λ`.
pub fn lambda_derivative(u: &GridFunction, cfg: &OperatorConfig, mesh: &RadialMesh) -> Vec<f64> {
    (0..mesh.len())
        .map(|i| {
            if mesh.dirichlet_mask()[i] {
                0.0
            } else {
                -mesh.lumped_weights()[i] * cfg.v.values()[i] * cfg.eigen_term(u.values()[i])
            }
        })
        .collect()
}

/// Exact derivative of [`residual`] with respect to the nodal values.
pub fn jacobian(u: &GridFunction, cfg: &OperatorConfig, mesh: &RadialMesh) -> Result<TridiagonalSystem> {
    cfg.check(u, mesh);
    let n = mesh.len();
    let d = gradient_midpoints(u, mesh);
    let mut t = TridiagonalSystem::zeros(n);
    for (k, dk) in d.iter().enumerate() {
        let dphi = cfg.flux_derivative(*dk);
        if !dphi.is_finite() {
            return Err(Error::SingularLinearization(format!(
                "zero slope in cell {k} with p = {} < 2 and no gradient regularization",
                cfg.p
            )));
        }
        let h = mesh.spacing(k);
        let s = mesh.cell_measures()[k] * dphi / (h * h);
        t.main[k] += s;
        t.main[k + 1] += s;
        t.sup[k] -= s;
        t.sub[k] -= s;
    }
    let mu = mesh.lumped_weights();
    for i in 0..n {
        if mesh.dirichlet_mask()[i] {
            t.main[i] = 1.0;
            if i > 0 {
                t.sub[i - 1] = 0.0;
                t.sup[i - 1] = 0.0;
            }
            if i + 1 < n {
                t.sup[i] = 0.0;
                t.sub[i] = 0.0;
            }
            continue;
        }
        let ui = u.values()[i];
        let mut local = cfg.lambda * cfg.v.values()[i] * cfg.eigen_term_derivative(ui)?;
        if ui > 0.0 {
            local += cfg.m.values()[i] * cfg.f.df(ui);
        }
        t.main[i] -= mu[i] * local;
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, DomainKind};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const DIM: usize = 5;

    fn ball(n: usize) -> RadialMesh {
        build_mesh(DomainKind::Ball { radius: 1.0 }, DIM, n, 1.0).unwrap()
    }

    fn cfg(mesh: &RadialMesh, p: f64) -> OperatorConfig {
        let f = Nonlinearity::log_damped(critical_exponent(mesh.dim(), p).unwrap(), 1.0).unwrap();
        OperatorConfig::new(
            p,
            mesh.dim(),
            GridFunction::new(vec![1.0; mesh.len()]),
            GridFunction::new(vec![0.0; mesh.len()]),
            f,
        )
        .unwrap()
    }

    /// Max of |R_i/μ_i - target(r_i)| over free nodes with r ≥ r_min.
    fn interior_defect(r: &GridFunction, mesh: &RadialMesh, target: impl Fn(f64) -> f64, r_min: f64) -> f64 {
        mesh.free_nodes()
            .filter(|&i| mesh.nodes()[i] >= r_min)
            .map(|i| (r.values()[i] / mesh.lumped_weights()[i] - target(mesh.nodes()[i])).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn trivial_state_has_zero_residual() {
        let mesh = ball(21);
        let mut c = cfg(&mesh, 3.0).with_lambda(7.0);
        c.m = GridFunction::new((0..mesh.len()).map(|i| (i as f64).sin()).collect());
        let r = residual(&GridFunction::zeros(&mesh), &c, &mesh);
        assert!(r.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn manufactured_quadratic_p2() {
        // -Δ(1 - r²) = 2N
        let mesh = ball(401);
        let c = cfg(&mesh, 2.0).with_delta_reg(0.0);
        let u = GridFunction::dirichlet_from_fn(&mesh, |r| 1.0 - r * r);
        let r = residual(&u, &c, &mesh);
        let d = interior_defect(&r, &mesh, |_| 2.0 * DIM as f64, 0.25);
        assert!(d < 1e-3, "defect {d:e}");
    }

    #[test]
    fn manufactured_consistency_order() {
        // u = 1 - r^{p'} has constant -Δ_p u = N p'^{p-1}
        for p in [1.5f64, 2.0, 3.0] {
            let pp: f64 = p / (p - 1.0);
            let target = DIM as f64 * pp.powf(p - 1.0);
            let defects: Vec<f64> = [41, 81, 161]
                .iter()
                .map(|&n| {
                    let mesh = ball(n);
                    let c = cfg(&mesh, p);
                    let u = GridFunction::dirichlet_from_fn(&mesh, |r| 1.0 - r.powf(pp));
                    interior_defect(&residual(&u, &c, &mesh), &mesh, |_| target, 0.25)
                })
                .collect();
            for w in defects.windows(2) {
                let order = (w[0] / w[1]).log2();
                assert!(order >= 1.8 || w[1] < 1e-9, "p = {p}: defects {defects:?}");
            }
        }
    }

    #[test]
    fn eigenpair_residual_converges() {
        let defects: Vec<f64> = [51, 101, 201]
            .iter()
            .map(|&n| {
                let mesh = build_mesh(DomainKind::Ball { radius: 1.0 }, 3, n, 1.0).unwrap();
                let c = cfg(&mesh, 2.0).with_delta_reg(0.0).with_lambda(PI * PI);
                let u = GridFunction::dirichlet_from_fn(&mesh, |r| if r == 0.0 { PI } else { (PI * r).sin() / r });
                interior_defect(&residual(&u, &c, &mesh), &mesh, |_| 0.0, 0.1)
            })
            .collect();
        for w in defects.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.8, "{defects:?}");
        }
    }

    #[test]
    fn linear_jacobian_is_weighted_second_difference() {
        let mesh = ball(11);
        let c = cfg(&mesh, 2.0).with_delta_reg(0.0);
        let j = jacobian(&GridFunction::zeros(&mesh), &c, &mesh).unwrap();
        for k in 0..9 {
            let h = mesh.spacing(k);
            assert_relative_eq!(j.sup[k], -mesh.cell_measures()[k] / (h * h), max_relative = 1e-14);
            assert_eq!(j.sup[k], j.sub[k]);
        }
        assert_eq!(j.main[10], 1.0);
        assert_eq!(j.sup[9], 0.0);
        assert_eq!(j.sub[9], 0.0);
    }

    fn fd_check(p: f64, seed: u64) -> f64 {
        let mesh = ball(31);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = cfg(&mesh, p).with_lambda(rng.gen_range(-20.0..20.0));
        c.v = GridFunction::new((0..mesh.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        c.m = GridFunction::new((0..mesh.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let u = GridFunction::with_dirichlet(&mesh, (0..mesh.len()).map(|_| rng.gen_range(0.1..2.0)).collect());
        let dir = GridFunction::with_dirichlet(&mesh, (0..mesh.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let j = jacobian(&u, &c, &mesh).unwrap();
        let jv = j.mul_vec(dir.values());
        let eps = 1e-6;
        let rp = residual(&u.axpy(eps, &dir), &c, &mesh);
        let rm = residual(&u.axpy(-eps, &dir), &c, &mesh);
        let fd: Vec<f64> = rp.values().iter().zip(rm.values()).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let scale = jv.iter().map(|v| v.abs()).fold(0.0, f64::max);
        jv.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        for p in [1.5f64, 2.0, 3.0] {
            for seed in 0..5 {
                let err = fd_check(p, seed);
                assert!(err < 1e-5, "p = {p}, seed {seed}: relative error {err:e}");
            }
        }
    }

    #[test]
    fn degenerate_jacobian_at_trivial_state() {
        let mesh = ball(21);
        let c = cfg(&mesh, 3.0).with_delta_reg(1e-4);
        let j = jacobian(&GridFunction::zeros(&mesh), &c, &mesh).unwrap();
        for k in 0..19 {
            let scale = mesh.cell_measures()[k] / mesh.spacing(k).powi(2);
            assert!(j.sup[k].abs() <= 1.0001e-4 * scale);
        }
    }

    #[test]
    fn singular_linearization_reported() {
        let mesh = ball(21);
        let c = cfg(&mesh, 1.5).with_delta_reg(0.0);
        let u = GridFunction::dirichlet_from_fn(&mesh, |r| if r < 0.5 { 1.0 } else { 2.0 * (1.0 - r) });
        assert!(matches!(jacobian(&u, &c, &mesh), Err(Error::SingularLinearization(_))));
    }

    #[test]
    fn jacobian_symmetry() {
        let mesh = ball(25);
        let c = cfg(&mesh, 3.0);
        let u = GridFunction::dirichlet_from_fn(&mesh, |r| (1.0 - r) * (1.0 + 3.0 * r));
        let j = jacobian(&u, &c, &mesh).unwrap();
        for k in 0..mesh.len() - 2 {
            assert_eq!(j.sup[k], j.sub[k]);
        }
    }

    #[test]
    fn homogeneity_of_residual() {
        let mesh = ball(25);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in [2.0, 3.0] {
            let c = cfg(&mesh, p).with_delta_reg(0.0).with_lambda(4.0);
            let u = GridFunction::with_dirichlet(&mesh, (0..mesh.len()).map(|i| i as f64 * 0.1 + rng.gen_range(0.0..0.05)).collect());
            let t: f64 = 1.7;
            let a = residual(&u.scaled(t), &c, &mesh);
            let b = residual(&u, &c, &mesh);
            for (x, y) in a.values().iter().zip(b.values()) {
                assert_relative_eq!(*x, t.powf(p - 1.0) * y, max_relative = 1e-12, epsilon = 1e-14);
            }
        }
    }
}
