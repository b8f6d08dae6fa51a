//! Piecewise-polynomial radial weights `V` and `m`, their sign decomposition
//! into Ω⁺, Ω⁻, Ω⁰ and the hypothesis checks (m1)-(m3).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridFunction, Interval, RadialMesh};

/// Polynomial `Σ coeffs[k] r^k` on `[start, end)`; the last piece of a spec
/// is closed on the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightPiece {
    pub start: f64,
    pub end: f64,
    pub coeffs: Vec<f64>,
}

impl WeightPiece {
    pub fn value(&self, r: f64) -> f64 {
        horner(&self.coeffs, r)
    }

}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pieces: Vec<WeightPiece>,
}

impl WeightSpec {
    pub fn new(pieces: Vec<WeightPiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::config("a weight needs at least one piece"));
        }
        for piece in &pieces {
            if !(piece.end > piece.start) {
                return Err(Error::config(format!(
                    "weight piece [{}, {}) has non-positive length",
                    piece.start, piece.end
                )));
            }
        }
        for pair in pieces.windows(2) {
            if (pair[1].start - pair[0].end).abs() > 1e-12 * pair[0].end.abs().max(1.0) {
                return Err(Error::config(format!(
                    "weight pieces must be contiguous: gap or overlap at {} / {}",
                    pair[0].end, pair[1].start
                )));
            }
        }
        Ok(WeightSpec { pieces })
    }

    pub fn constant(value: f64, start: f64, end: f64) -> Self {
        Self::polynomial(vec![value], start, end)
    }

    pub fn polynomial(coeffs: Vec<f64>, start: f64, end: f64) -> Self {
        WeightSpec {
            pieces: vec![WeightPiece { start, end, coeffs }],
        }
    }

    /// Piecewise constant weight: `breaks` has one more entry than `values`.
    pub fn piecewise_constant(breaks: &[f64], values: &[f64]) -> Result<Self> {
        if breaks.len() != values.len() + 1 {
            return Err(Error::config("piecewise constant weight needs len(breaks) = len(values) + 1"));
        }
        Self::new(
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| WeightPiece {
                    start: breaks[i],
                    end: breaks[i + 1],
                    coeffs: vec![v],
                })
                .collect(),
        )
    }

    pub fn pieces(&self) -> &[WeightPiece] {
        &self.pieces
    }

    pub fn domain(&self) -> Interval {
        Interval::new(self.pieces[0].start, self.pieces.last().unwrap().end)
    }

    pub fn negated(&self) -> Self {
        WeightSpec {
            pieces: self
                .pieces
                .iter()
                .map(|p| WeightPiece {
                    start: p.start,
                    end: p.end,
                    coeffs: p.coeffs.iter().map(|c| -c).collect(),
                })
                .collect(),
        }
    }

    /// Value at `r`, or `None` outside the covered range.
    pub fn value(&self, r: f64) -> Option<f64> {
        let last = self.pieces.len() - 1;
        self.pieces
            .iter()
            .enumerate()
            .find(|(i, p)| r >= p.start && (r < p.end || (*i == last && r <= p.end)))
            .map(|(_, p)| p.value(r))
    }

    /// Largest value over the covered range (exact, via critical points).
    pub fn max_value(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| extreme_on(&p.coeffs, p.start, p.end, true))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| extreme_on(&p.coeffs, p.start, p.end, false))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Nodal samples of the weight on the mesh.
///
/// # Panics
/// If a mesh node lies outside every piece.
pub fn evaluate(w: &WeightSpec, mesh: &RadialMesh) -> GridFunction {
    GridFunction::new(
        mesh.nodes()
            .iter()
            .map(|&r| {
                w.value(r)
                    .unwrap_or_else(|| panic!("mesh node r = {r} lies outside the weight's pieces"))
            })
            .collect(),
    )
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| k as f64 * c)
        .collect()
}

fn trimmed(coeffs: &[f64]) -> &[f64] {
    let len = coeffs.iter().rposition(|&c| c != 0.0).map_or(0, |i| i + 1);
    &coeffs[..len]
}

/// Real roots of the polynomial strictly inside `(a, b)`, ascending.
///
/// Critical points (roots of the derivative, found recursively) split the
/// interval into monotone pieces; each sign change is then bisected.
pub fn roots_in(coeffs: &[f64], a: f64, b: f64) -> Vec<f64> {
    let c = trimmed(coeffs);
    match c.len() {
        0 | 1 => Vec::new(),
        2 => {
            let r = -c[0] / c[1];
            if r > a && r < b {
                vec![r]
            } else {
                Vec::new()
            }
        }
        _ => {
            let crit = roots_in(&derivative(c), a, b);
            let scale = c.iter().map(|v| v.abs()).fold(0.0, f64::max)
                * a.abs().max(b.abs()).max(1.0).powi(c.len() as i32 - 1);
            let mut knots = Vec::with_capacity(crit.len() + 2);
            knots.push(a);
            knots.extend(&crit);
            knots.push(b);
            let mut roots = Vec::new();
            for (i, pair) in knots.windows(2).enumerate() {
                let (x0, x1) = (pair[0], pair[1]);
                let (f0, f1) = (horner(c, x0), horner(c, x1));
                if i > 0 && f0.abs() <= 1e-14 * scale {
                    // multiple root at a critical point
                    roots.push(x0);
                    continue;
                }
                if f0 * f1 < 0.0 && f1.abs() > 1e-14 * scale {
                    roots.push(bisect(c, x0, x1, f0));
                }
            }
            roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (b - a));
            roots
        }
    }
}

fn bisect(c: &[f64], mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let sign_lo = f_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = horner(c, mid);
        if v == 0.0 {
            return mid;
        }
        if v.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn extreme_on(coeffs: &[f64], a: f64, b: f64, max: bool) -> f64 {
    let mut candidates = vec![a, b];
    candidates.extend(roots_in(&derivative(coeffs), a, b));
    let values = candidates.into_iter().map(|x| horner(coeffs, x));
    if max {
        values.fold(f64::NEG_INFINITY, f64::max)
    } else {
        values.fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignClass {
    Positive,
    Negative,
    Zero,
}

fn classify(value: f64, tolerance: f64) -> SignClass {
    if value > tolerance {
        SignClass::Positive
    } else if value < -tolerance {
        SignClass::Negative
    } else {
        SignClass::Zero
    }
}

/// Sign structure of a weight over its radial range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignDecomposition {
    pub positive_set: Vec<Interval>,
    pub negative_set: Vec<Interval>,
    pub zero_set: Vec<Interval>,
    /// Interior of Ω⁺ ∪ Ω⁰, as connected components.
    pub omega_plus0: Vec<Interval>,
    /// Interior of Ω⁰, as connected components.
    pub omega_0: Vec<Interval>,
}

impl SignDecomposition {
    pub fn total_length(set: &[Interval]) -> f64 {
        set.iter().map(Interval::length).sum()
    }
}

pub fn sign_decompose(m: &WeightSpec, tolerance: f64) -> SignDecomposition {
    assert!(tolerance >= 0.0, "zero-classification tolerance must be non-negative");
    // Elementary segments of constant sign, and the class of each joint between them.
    let mut segments: Vec<(Interval, SignClass)> = Vec::new();
    let mut joints: Vec<SignClass> = Vec::new();
    for piece in m.pieces() {
        let mut breaks = vec![piece.start];
        if tolerance > 0.0 {
            let mut shifted = piece.coeffs.clone();
            if shifted.is_empty() {
                shifted.push(0.0);
            }
            shifted[0] -= tolerance;
            breaks.extend(roots_in(&shifted, piece.start, piece.end));
            shifted[0] += 2.0 * tolerance;
            breaks.extend(roots_in(&shifted, piece.start, piece.end));
        } else {
            breaks.extend(roots_in(&piece.coeffs, piece.start, piece.end));
        }
        breaks.push(piece.end);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        for pair in breaks.windows(2) {
            let seg = Interval::new(pair[0], pair[1]);
            if !segments.is_empty() {
                let at = seg.start;
                joints.push(classify(m.value(at).unwrap_or_else(|| piece.value(at)), tolerance));
            }
            segments.push((seg, classify(piece.value(seg.midpoint()), tolerance)));
        }
    }

    let components = |accept: &dyn Fn(SignClass) -> bool| -> Vec<Interval> {
        let mut out: Vec<Interval> = Vec::new();
        let mut open = false;
        for (i, (seg, class)) in segments.iter().enumerate() {
            if !accept(*class) {
                open = false;
                continue;
            }
            if open && accept(joints[i - 1]) {
                out.last_mut().unwrap().end = seg.end;
            } else {
                out.push(*seg);
            }
            open = true;
        }
        out
    };

    SignDecomposition {
        positive_set: components(&|c| c == SignClass::Positive),
        negative_set: components(&|c| c == SignClass::Negative),
        zero_set: components(&|c| c == SignClass::Zero),
        omega_plus0: components(&|c| c != SignClass::Negative),
        omega_0: components(&|c| c == SignClass::Zero),
    }
}

/// Result of checking that `V` takes both signs on a set of positive measure
/// inside an open set `ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentCheck {
    pub components: Vec<Interval>,
    pub v_positive_measure: f64,
    pub v_negative_measure: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MHypothesisReport {
    pub sup_m_plus: f64,
    pub sup_m_minus: f64,
    pub m1: bool,
    pub m2: ComponentCheck,
    pub m3: ComponentCheck,
}

pub fn check_m_hypotheses(
    m: &WeightSpec,
    v: &WeightSpec,
    d: &SignDecomposition,
    mesh: &RadialMesh,
) -> MHypothesisReport {
    let sup_m_plus = m.max_value().max(0.0);
    let sup_m_minus = (-m.min_value()).max(0.0);
    let v_signs = sign_decompose(v, 0.0);
    let check = |omega: &[Interval]| {
        let measure = |set: &[Interval]| -> f64 {
            omega
                .iter()
                .flat_map(|w| set.iter().filter_map(move |s| w.intersect(s)))
                .map(|i| mesh.shell_measure(&i))
                .sum()
        };
        let v_positive_measure = measure(&v_signs.positive_set);
        let v_negative_measure = measure(&v_signs.negative_set);
        ComponentCheck {
            components: omega.to_vec(),
            v_positive_measure,
            v_negative_measure,
            holds: !omega.is_empty() && v_positive_measure > 0.0 && v_negative_measure > 0.0,
        }
    };
    MHypothesisReport {
        sup_m_plus,
        sup_m_minus,
        m1: sup_m_plus > 0.0 && sup_m_minus > 0.0,
        m2: check(&d.omega_plus0),
        m3: check(&d.omega_0),
    }
}
