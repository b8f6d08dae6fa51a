//! Radial meshes on balls and annuli in ℝᴺ, nodal grid functions and the
//! quadratures that turn radial sums into integrals over the full domain.
//!
//! Every integral over Ω of a radial function reduces to
//! `ω_{N-1} ∫ g(r) r^{N-1} dr`, where `ω_{N-1}` is the area of the unit
//! (N-1)-sphere. Three weight sets are kept per mesh:
//!
//! * trapezoid weights, used by [`integrate`] and the Lebesgue norms;
//! * exact cell measures `ω ∫_{r_k}^{r_{k+1}} r^{N-1} dr`, which integrate
//!   `|∇u|^p` exactly for the piecewise-linear interpolant of `u`;
//! * lumped nodal measures `ω ∫ ψ_i r^{N-1} dr` of the hat functions `ψ_i`,
//!   used by the discrete operator. They sum to the exact domain volume.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Open radial interval `(start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Self {
        Interval { start, end }
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    pub fn contains(&self, r: f64) -> bool {
        r > self.start && r < self.end
    }

    /// Intersection, `None` when empty or degenerate.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        (end > start).then_some(Interval { start, end })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DomainKind {
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

impl DomainKind {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            DomainKind::Ball { radius } => (0.0, radius),
            DomainKind::Annulus { inner, outer } => (inner, outer),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            DomainKind::Ball { radius } if !(radius > 0.0 && radius.is_finite()) => {
                Err(Error::config(format!("ball radius must be positive, got {radius}")))
            }
            DomainKind::Annulus { inner, outer }
                if !(inner > 0.0 && outer > inner && outer.is_finite()) =>
            {
                Err(Error::config(format!(
                    "annulus radii must satisfy 0 < a < b, got a = {inner}, b = {outer}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Area of the unit (N-1)-sphere, `2 π^{N/2} / Γ(N/2)`.
pub fn sphere_area(dim: usize) -> f64 {
    use std::f64::consts::PI;
    // Γ(N/2) for integer N through the half-integer recursion.
    let mut gamma = if dim % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if dim % 2 == 0 { 1.0 } else { 0.5 };
    while x < dim as f64 / 2.0 - 1e-12 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(dim as f64 / 2.0) / gamma
}

/// Radial grid of a ball or annulus in ℝᴺ.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMesh {
    kind: DomainKind,
    dim: usize,
    nodes: Vec<f64>,
    surface_factor: f64,
    dirichlet: Vec<bool>,
    cell_measures: Vec<f64>,
    lumped: Vec<f64>,
    trapezoid: Vec<f64>,
}

/// Build a mesh with `node_count` nodes. `grading = 1` is uniform; `grading > 1`
/// shrinks cells geometrically toward the outer boundary so that the last
/// cell is `grading` times narrower than the first.
pub fn build_mesh(kind: DomainKind, dim: usize, node_count: usize, grading: f64) -> Result<RadialMesh> {
    kind.validate()?;
    if dim < 2 {
        return Err(Error::config(format!("dimension N must be at least 2, got {dim}")));
    }
    if node_count < 3 {
        return Err(Error::config(format!("need at least 3 nodes, got {node_count}")));
    }
    if !(grading > 0.0 && grading.is_finite()) {
        return Err(Error::config(format!("grading must be positive, got {grading}")));
    }
    let (r0, r1) = kind.bounds();
    let cells = node_count - 1;
    let nodes: Vec<f64> = if grading == 1.0 {
        (0..node_count)
            .map(|i| r0 + (r1 - r0) * i as f64 / cells as f64)
            .collect()
    } else {
        let ratio = grading.powf(-1.0 / (cells as f64 - 1.0).max(1.0));
        let widths: Vec<f64> = (0..cells).map(|i| ratio.powi(i as i32)).collect();
        let total: f64 = widths.iter().sum();
        let mut acc = 0.0;
        let mut nodes = Vec::with_capacity(node_count);
        nodes.push(r0);
        for w in &widths[..cells - 1] {
            acc += w;
            nodes.push(r0 + (r1 - r0) * acc / total);
        }
        nodes.push(r1);
        nodes
    };
    RadialMesh::from_nodes(kind, dim, nodes)
}

impl RadialMesh {
    /// Mesh from explicit nodes; the first and last node must match the domain bounds.
    pub fn from_nodes(kind: DomainKind, dim: usize, nodes: Vec<f64>) -> Result<RadialMesh> {
        kind.validate()?;
        let (r0, r1) = kind.bounds();
        if nodes.len() < 3 {
            return Err(Error::config("a mesh needs at least 3 nodes"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("mesh nodes must be strictly increasing"));
        }
        if nodes[0] != r0 || *nodes.last().unwrap() != r1 {
            return Err(Error::config("mesh nodes must start and end at the domain bounds"));
        }
        let n = nodes.len();
        let surface_factor = sphere_area(dim);
        let mut dirichlet = vec![false; n];
        dirichlet[n - 1] = true;
        if matches!(kind, DomainKind::Annulus { .. }) {
            dirichlet[0] = true;
        }

        let mut cell_measures = Vec::with_capacity(n - 1);
        let mut lumped = vec![0.0; n];
        let mut trapezoid = vec![0.0; n];
        for k in 0..n - 1 {
            let (a, h) = (nodes[k], nodes[k + 1] - nodes[k]);
            let (whole, left, right) = cell_moments(a, h, dim);
            cell_measures.push(surface_factor * whole);
            lumped[k] += surface_factor * left;
            lumped[k + 1] += surface_factor * right;
            let wa = a.powi(dim as i32 - 1);
            let wb = nodes[k + 1].powi(dim as i32 - 1);
            trapezoid[k] += surface_factor * 0.5 * h * wa;
            trapezoid[k + 1] += surface_factor * 0.5 * h * wb;
        }
        Ok(RadialMesh {
            kind,
            dim,
            nodes,
            surface_factor,
            dirichlet,
            cell_measures,
            lumped,
            trapezoid,
        })
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn surface_factor(&self) -> f64 {
        self.surface_factor
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    /// Indices of nodes whose values are unknowns.
    pub fn free_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| !self.dirichlet[i])
    }

    pub fn spacing(&self, cell: usize) -> f64 {
        self.nodes[cell + 1] - self.nodes[cell]
    }

    /// Exact measures of the shells `r_k < |x| < r_{k+1}`.
    pub fn cell_measures(&self) -> &[f64] {
        &self.cell_measures
    }

    /// `ω ∫ ψ_i r^{N-1} dr` for the hat function of each node.
    pub fn lumped_weights(&self) -> &[f64] {
        &self.lumped
    }

    pub fn trapezoid_weights(&self) -> &[f64] {
        &self.trapezoid
    }

    /// Exact measure of the domain.
    pub fn volume(&self) -> f64 {
        let (a, b) = self.kind.bounds();
        self.surface_factor * (b.powi(self.dim as i32) - a.powi(self.dim as i32)) / self.dim as f64
    }

    /// Measure in ℝᴺ of the radial shell over `interval`.
    pub fn shell_measure(&self, interval: &Interval) -> f64 {
        let n = self.dim as i32;
        self.surface_factor * (interval.end.powi(n) - interval.start.powi(n)) / self.dim as f64
    }

    /// Submesh over `interval`, which must lie inside the domain. Parent nodes
    /// strictly inside the interval are kept and the endpoints are inserted.
    /// The result is a ball when the interval starts at the centre of a ball,
    /// and an annulus (Dirichlet at both ends) otherwise. Returns the submesh
    /// and, for each submesh node, the parent node it came from.
    pub fn restrict(&self, interval: &Interval) -> Result<(RadialMesh, Vec<Option<usize>>)> {
        let (lo, hi) = self.kind.bounds();
        let tol = 1e-12 * (hi - lo);
        if interval.start < lo - tol || interval.end > hi + tol || interval.length() <= 0.0 {
            return Err(Error::config(format!(
                "interval ({}, {}) is not a sub-interval of the domain",
                interval.start, interval.end
            )));
        }
        let start = interval.start.max(lo);
        let end = interval.end.min(hi);
        let min_gap = 1e-3 * self.nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let mut nodes = vec![start];
        let mut origin = vec![self.nodes.iter().position(|&r| (r - start).abs() <= tol)];
        for (i, &r) in self.nodes.iter().enumerate() {
            if r > start + min_gap && r < end - min_gap {
                nodes.push(r);
                origin.push(Some(i));
            }
        }
        nodes.push(end);
        origin.push(self.nodes.iter().position(|&r| (r - end).abs() <= tol));

        let kind = match self.kind {
            DomainKind::Ball { .. } if start <= tol => DomainKind::Ball { radius: end },
            _ => DomainKind::Annulus { inner: start, outer: end },
        };
        // Too few parent nodes: refine uniformly so the eigenproblem stays resolved.
        const MIN_NODES: usize = 33;
        if nodes.len() < MIN_NODES {
            let mesh = build_mesh(kind, self.dim, MIN_NODES, 1.0)?;
            let origin = mesh
                .nodes()
                .iter()
                .map(|&r| self.nodes.iter().position(|&q| (q - r).abs() <= tol))
                .collect();
            return Ok((mesh, origin));
        }
        Ok((RadialMesh::from_nodes(kind, self.dim, nodes)?, origin))
    }
}

/// Moments of `r^{N-1}` over the cell `[a, a+h]`: the whole integral and the
/// integrals against the left and right hat functions. Expanded binomially
/// in `h` so that no cancellation occurs for thin cells.
fn cell_moments(a: f64, h: f64, dim: usize) -> (f64, f64, f64) {
    let m = dim - 1;
    let mut whole = 0.0;
    let mut right = 0.0;
    let mut binom = 1.0;
    for k in 0..=m {
        let term = binom * a.powi((m - k) as i32) * h.powi(k as i32);
        whole += term / (k as f64 + 1.0);
        right += term / (k as f64 + 2.0);
        binom = binom * (m - k) as f64 / (k as f64 + 1.0);
    }
    whole *= h;
    right *= h;
    (whole, whole - right, right)
}

/// Nodal values of a scalar field on a [`RadialMesh`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
    dirichlet_mask: Vec<bool>,
}

impl GridFunction {
    /// Unconstrained values (no Dirichlet pins), e.g. weights.
    pub fn new(values: Vec<f64>) -> Self {
        let dirichlet_mask = vec![false; values.len()];
        GridFunction { values, dirichlet_mask }
    }

    pub fn from_fn(mesh: &RadialMesh, f: impl Fn(f64) -> f64) -> Self {
        Self::new(mesh.nodes().iter().map(|&r| f(r)).collect())
    }

    /// Values carrying the mesh's Dirichlet mask; masked entries are set to 0.
    pub fn with_dirichlet(mesh: &RadialMesh, mut values: Vec<f64>) -> Self {
        assert_eq!(values.len(), mesh.len(), "grid function length does not match mesh");
        for (v, &pinned) in values.iter_mut().zip(mesh.dirichlet_mask()) {
            if pinned {
                *v = 0.0;
            }
        }
        GridFunction {
            values,
            dirichlet_mask: mesh.dirichlet_mask().to_vec(),
        }
    }

    pub fn dirichlet_from_fn(mesh: &RadialMesh, f: impl Fn(f64) -> f64) -> Self {
        Self::with_dirichlet(mesh, mesh.nodes().iter().map(|&r| f(r)).collect())
    }

    pub fn zeros(mesh: &RadialMesh) -> Self {
        Self::with_dirichlet(mesh, vec![0.0; mesh.len()])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet_mask
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Apply `f` nodewise, keeping the mask (masked nodes stay 0).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .zip(&self.dirichlet_mask)
            .map(|(&v, &m)| if m { 0.0 } else { f(v) })
            .collect();
        GridFunction {
            values,
            dirichlet_mask: self.dirichlet_mask.clone(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| factor * v)
    }

    /// `self + factor * other`, keeping this function's mask.
    pub fn axpy(&self, factor: f64, other: &GridFunction) -> Self {
        assert_eq!(self.len(), other.len(), "grid function lengths differ");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .zip(&self.dirichlet_mask)
            .map(|((&a, &b), &m)| if m { 0.0 } else { a + factor * b })
            .collect();
        GridFunction {
            values,
            dirichlet_mask: self.dirichlet_mask.clone(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Index of the largest absolute value.
    pub fn argmax_abs(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if v.abs() > self.values[best].abs() {
                best = i;
            }
        }
        best
    }

    fn check_aligned(&self, mesh: &RadialMesh) {
        assert_eq!(
            self.values.len(),
            mesh.len(),
            "grid function of length {} is not aligned with a mesh of {} nodes",
            self.values.len(),
            mesh.len()
        );
    }
}

/// `∫_Ω g dx` by the composite trapezoid rule with the `r^{N-1}` weight.
pub fn integrate(g: &GridFunction, mesh: &RadialMesh) -> f64 {
    g.check_aligned(mesh);
    g.values()
        .iter()
        .zip(mesh.trapezoid_weights())
        .map(|(v, w)| v * w)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "exponent")]
pub enum NormKind {
    Lebesgue(f64),
    Sup,
    SobolevSeminorm(f64),
}

pub fn norm(g: &GridFunction, mesh: &RadialMesh, kind: NormKind) -> f64 {
    g.check_aligned(mesh);
    match kind {
        NormKind::Sup => g.sup_norm(),
        NormKind::Lebesgue(q) => {
            assert!(q >= 1.0, "Lebesgue exponent must be at least 1, got {q}");
            let sum: f64 = g
                .values()
                .iter()
                .zip(mesh.trapezoid_weights())
                .map(|(v, w)| w * v.abs().powf(q))
                .sum();
            sum.powf(1.0 / q)
        }
        NormKind::SobolevSeminorm(p) => {
            assert!(p > 1.0, "Sobolev exponent must exceed 1, got {p}");
            let sum: f64 = gradient_midpoints(g, mesh)
                .iter()
                .zip(mesh.cell_measures())
                .map(|(d, c)| c * d.abs().powf(p))
                .sum();
            sum.powf(1.0 / p)
        }
    }
}

/// Difference quotients `(g_{i+1} - g_i) / (r_{i+1} - r_i)`, one per cell.
pub fn gradient_midpoints(g: &GridFunction, mesh: &RadialMesh) -> Vec<f64> {
    g.check_aligned(mesh);
    g.values()
        .windows(2)
        .zip(mesh.nodes().windows(2))
        .map(|(v, r)| (v[1] - v[0]) / (r[1] - r[0]))
        .collect()
}
