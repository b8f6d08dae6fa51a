//! Batch front end: a JSON run configuration, one mode per run, artifacts
//! written to an output directory.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::continuation::{
    detect_folds, newton_solve, seed_point, trace_branch, Branch, BranchOrigin, Caps, NewtonOptions, Side, StepControl,
};
use crate::eigen::{principal_eigenvalue, EigenOptions, EigenResult, EigenStatus, Sign};
use crate::error::Error;
use crate::geometry::{build_mesh, DomainKind, GridFunction, RadialMesh};
use crate::nonlinearity::{check_hypotheses, critical_exponent, Nonlinearity, NonlinearityKind, SampleControl};
use crate::operator::{OperatorConfig, DEFAULT_DELTA_REG};
use crate::asymptotics::geometric_grid;
use crate::orlicz::{check_delta2, compactness_hypotheses, gauge_norm, holder_check, make_nfunction, young_gap, Density};
use crate::verify::{
    bifurcation_direction, linf_estimate_check, nonexistence_window, picone, CheckResult, CheckStatus, DirectionReport,
    DirectionSide, LinfParams, VerificationReport, Witness,
};
use crate::weights::{check_m_hypotheses, evaluate, sign_decompose, WeightPiece, WeightSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Eig,
    Solve,
    Branch,
    Verify,
    Hypotheses,
    OrliczDemo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub domain: DomainKind,
    pub dim: usize,
    pub nodes: usize,
    #[serde(default = "unit")]
    pub grading: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityConfig {
    #[serde(flatten)]
    pub kind: NonlinearityKind,
    #[serde(default)]
    pub s0: Option<f64>,
    #[serde(default)]
    pub c0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub eigen: EigenOptions,
    pub newton: NewtonOptions,
    pub delta_reg: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { eigen: EigenOptions::default(), newton: NewtonOptions::default(), delta_reg: DEFAULT_DELTA_REG }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationConfig {
    /// Sup-norm of the first branch point.
    pub seed_amplitude: f64,
    pub step: StepControl,
    pub norm_cap: Option<f64>,
    pub lambda_window: Option<(f64, f64)>,
    pub reconnect_lambda_tol: Option<f64>,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            seed_amplitude: 4e-3,
            step: StepControl::default(),
            norm_cap: None,
            lambda_window: None,
            reconnect_lambda_tol: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialGuess {
    Zero,
    /// `amplitude · φ` for the principal eigenfunction of the given sign.
    Eigenfunction { sign: Sign, amplitude: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub lambda: f64,
    pub initial: InitialGuess,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { lambda: 0.0, initial: InitialGuess::Zero }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub linf: LinfParams,
    pub picone_pairs: usize,
    pub picone_p: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { linf: LinfParams::default(), picone_pairs: 20, picone_p: 2.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub geometry: GeometryConfig,
    pub p: f64,
    pub v: Vec<WeightPiece>,
    /// Defaults to `m ≡ 0`.
    #[serde(default)]
    pub m: Option<Vec<WeightPiece>>,
    #[serde(default)]
    pub nonlinearity: Option<NonlinearityConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub continuation: ContinuationConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| RunError::config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|e| RunError::config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let positive = [
            ("solver.eigen.tol", self.solver.eigen.tol),
            ("solver.newton.tol", self.solver.newton.tol),
            ("continuation.seed_amplitude", self.continuation.seed_amplitude),
            ("continuation.step.min_step", self.continuation.step.min_step),
            ("continuation.step.max_step", self.continuation.step.max_step),
            ("verify.linf.epsilon", self.verify.linf.epsilon),
            ("verify.linf.residual_tol", self.verify.linf.residual_tol),
        ];
        for (name, x) in positive {
            if !(x > 0.0) {
                return Err(RunError::config(format!("{name} must be > 0, got {x}")));
            }
        }
        if self.solver.delta_reg < 0.0 {
            return Err(RunError::config("solver.delta_reg must be >= 0"));
        }
        if !(self.p > 1.0) {
            return Err(RunError::config(format!("p must be > 1, got {}", self.p)));
        }
        let needs_p_star = !matches!(self.mode, Mode::Eig | Mode::OrliczDemo);
        if needs_p_star && !(self.p < self.geometry.dim as f64) {
            return Err(RunError::config(format!(
                "mode {:?} needs N > p, got N = {} and p = {}",
                self.mode, self.geometry.dim, self.p
            )));
        }
        if self.nonlinearity.is_none() && matches!(self.mode, Mode::Branch | Mode::Verify | Mode::Hypotheses) {
            return Err(RunError::config(format!("mode {:?} needs a nonlinearity", self.mode)));
        }
        Ok(())
    }
}

/// Failure of a run, with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunError {
    pub code: i32,
    pub kind: String,
    pub message: String,
    #[serde(default)]
    pub details: Option<Value>,
}

impl RunError {
    pub fn config(msg: impl Into<String>) -> Self {
        RunError { code: 2, kind: "configuration".into(), message: msg.into(), details: None }
    }

    pub fn solver(msg: impl Into<String>) -> Self {
        RunError { code: 3, kind: "solver".into(), message: msg.into(), details: None }
    }

    pub fn verification(msg: impl Into<String>, details: Value) -> Self {
        RunError { code: 4, kind: "verification".into(), message: msg.into(), details: Some(details) }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        RunError { code: 3, kind: "io".into(), message: format!("{}: {e}", path.display()), details: None }
    }

    pub fn record(&self) -> Value {
        json!({ "status": "error", "code": self.code, "kind": self.kind, "message": self.message, "details": self.details })
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Validation(_) => RunError::config(e.to_string()),
            _ => RunError::solver(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: Mode,
    pub files: Vec<PathBuf>,
}

/// JSON number, or a string label for the non-finite sentinels.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// Inverse of [`num`].
pub fn parse_num(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => match s.as_str() {
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            _ => None,
        },
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub index: usize,
    pub lambda: f64,
    pub sup_norm: f64,
    pub lp_star_norm: f64,
    pub sobolev_norm: f64,
    pub tangent_dlambda: f64,
    pub is_fold: bool,
    pub residual_norm: f64,
}

pub fn branch_rows(b: &Branch) -> Vec<BranchRow> {
    b.points
        .iter()
        .enumerate()
        .map(|(index, pt)| BranchRow {
            index,
            lambda: pt.lambda,
            sup_norm: pt.sup_norm,
            lp_star_norm: pt.lp_star_norm,
            sobolev_norm: pt.sobolev_norm,
            tangent_dlambda: pt.tangent_dlambda,
            is_fold: pt.is_fold,
            residual_norm: pt.residual_norm,
        })
        .collect()
}

pub fn write_branch_csv(path: &Path, rows: &[BranchRow]) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| RunError::io(path, e))?;
    if rows.is_empty() {
        w.write_record(["index", "lambda", "sup_norm", "lp_star_norm", "sobolev_norm", "tangent_dlambda", "is_fold", "residual_norm"])
            .map_err(|e| RunError::io(path, e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| RunError::io(path, e))?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

pub fn read_branch_csv(path: &Path) -> Result<Vec<BranchRow>, RunError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| RunError::io(path, e))?;
    r.deserialize().collect::<Result<Vec<BranchRow>, _>>().map_err(|e| RunError::io(path, e))
}

pub fn write_profile_csv(path: &Path, mesh: &RadialMesh, u: &GridFunction) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| RunError::io(path, e))?;
    w.write_record(["r", "value"]).map_err(|e| RunError::io(path, e))?;
    for (r, x) in mesh.nodes().iter().zip(u.values()) {
        w.write_record([r.to_string(), x.to_string()]).map_err(|e| RunError::io(path, e))?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

pub fn read_profile_csv(path: &Path) -> Result<Vec<(f64, f64)>, RunError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| RunError::io(path, e))?;
    r.deserialize().collect::<Result<Vec<(f64, f64)>, _>>().map_err(|e| RunError::io(path, e))
}

fn write_json(path: &Path, v: &Value) -> Result<(), RunError> {
    let text = serde_json::to_string_pretty(v).map_err(|e| RunError::io(path, e))?;
    fs::write(path, text + "\n").map_err(|e| RunError::io(path, e))
}

struct Problem {
    mesh: RadialMesh,
    v_spec: WeightSpec,
    m_spec: WeightSpec,
    v: GridFunction,
    m: GridFunction,
}

impl Problem {
    fn new(cfg: &RunConfig) -> Result<Self, RunError> {
        let g = &cfg.geometry;
        let mesh = build_mesh(g.domain, g.dim, g.nodes, g.grading)?;
        let (a, b) = g.domain.bounds();
        let v_spec = WeightSpec::new(cfg.v.clone())?;
        let m_spec = match &cfg.m {
            Some(pieces) => WeightSpec::new(pieces.clone())?,
            None => WeightSpec::constant(0.0, a, b),
        };
        for (name, w) in [("v", &v_spec), ("m", &m_spec)] {
            let d = w.domain();
            if (d.start - a).abs() > 1e-12 || (d.end - b).abs() > 1e-12 {
                return Err(RunError::config(format!(
                    "weight {name} covers [{}, {}] but the domain is [{a}, {b}]",
                    d.start, d.end
                )));
            }
        }
        let v = evaluate(&v_spec, &mesh);
        let m = evaluate(&m_spec, &mesh);
        Ok(Problem { mesh, v_spec, m_spec, v, m })
    }

    fn nonlinearity(&self, cfg: &RunConfig) -> Result<Nonlinearity, RunError> {
        let p_star = critical_exponent(cfg.geometry.dim, cfg.p)?;
        let nc = cfg
            .nonlinearity
            .as_ref()
            .map(|n| (n.kind.clone(), n.s0, n.c0))
            .unwrap_or((NonlinearityKind::PurePower { q: cfg.p }, None, None));
        let mut f = Nonlinearity::new(nc.0, p_star)?;
        if nc.1.is_some() || nc.2.is_some() {
            let (s0, c0) = (nc.1.unwrap_or(f.s0), nc.2.unwrap_or(f.c0));
            f = f.with_threshold(s0, c0);
            f.validate()?;
        }
        Ok(f)
    }

    fn operator(&self, cfg: &RunConfig) -> Result<OperatorConfig, RunError> {
        let f = self.nonlinearity(cfg)?;
        Ok(OperatorConfig::new(cfg.p, cfg.geometry.dim, self.v.clone(), self.m.clone(), f)?
            .with_delta_reg(cfg.solver.delta_reg))
    }

    fn eigenpairs(&self, cfg: &RunConfig) -> Result<(EigenResult, EigenResult), RunError> {
        let ep = principal_eigenvalue(&self.v, &self.mesh, cfg.p, Sign::Plus, &cfg.solver.eigen);
        let em = principal_eigenvalue(&self.v, &self.mesh, cfg.p, Sign::Minus, &cfg.solver.eigen);
        for (name, e) in [("lambda_1", &ep), ("lambda_minus_1", &em)] {
            if e.status == EigenStatus::MaxIter {
                return Err(RunError::solver(format!(
                    "{name}: eigensolver hit the iteration cap ({} iterations, kkt {:.3e})",
                    e.iterations, e.kkt_residual
                )));
            }
        }
        Ok((ep, em))
    }
}

fn eigen_json(e: &EigenResult) -> Value {
    json!({
        "lambda": num(e.lambda),
        "status": e.status,
        "iterations": e.iterations,
        "kkt_residual": num(e.kkt_residual),
    })
}

fn direction_json(d: &DirectionReport) -> Value {
    json!({ "integral": d.integral, "q": d.q, "quadrature_error": d.quadrature_error, "side": d.side })
}

/// Both principal eigenpairs, their direction integrals and the two traced branches.
#[derive(Debug, Clone)]
pub struct BranchRun {
    pub mesh: RadialMesh,
    pub v_spec: WeightSpec,
    pub m_spec: WeightSpec,
    pub operator: OperatorConfig,
    pub ep: EigenResult,
    pub em: EigenResult,
    pub directions: [DirectionReport; 2],
    /// Branch from λ₁ first, then from λ₋₁.
    pub branches: Vec<Branch>,
}

/// The branch-mode computation without writing artifacts.
pub fn trace_both(cfg: &RunConfig, threads: usize) -> Result<BranchRun, RunError> {
    cfg.validate()?;
    let pb = Problem::new(cfg)?;
    run_branches(cfg, &pb, threads)
}

fn trace_one(
    e: &EigenResult,
    other: f64,
    origin: BranchOrigin,
    side: Side,
    op: &OperatorConfig,
    mesh: &RadialMesh,
    cfg: &RunConfig,
    caps: Caps,
) -> Result<Branch, RunError> {
    let c = &cfg.continuation;
    let newton = c.step.newton;
    let start = seed_point(e, c.seed_amplitude, side, op, mesh, &newton)?;
    let caps = Caps { reconnect_target: Some(other), ..caps };
    Ok(trace_branch(start, origin, op, mesh, &c.step, &caps))
}

fn run_branches(cfg: &RunConfig, pb: &Problem, threads: usize) -> Result<BranchRun, RunError> {
    let op = pb.operator(cfg)?;
    let (ep, em) = pb.eigenpairs(cfg)?;
    if !(ep.lambda.is_finite() && em.lambda.is_finite()) {
        return Err(RunError::config("branch tracing needs V to take both signs (both principal eigenvalues finite)"));
    }
    let dp = bifurcation_direction(&pb.m, &ep, &op.f, &pb.mesh)?;
    let dm = bifurcation_direction(&pb.m, &em, &op.f, &pb.mesh)?;
    // With a non-negative integral the subcritical side is the natural guess.
    let side_p = dp.side.as_side().unwrap_or(Side::Left);
    let side_m = dm.side.as_side().unwrap_or(Side::Right);

    let c = &cfg.continuation;
    let mut caps = Caps::between(ep.lambda, em.lambda, c.seed_amplitude);
    if let Some(x) = c.norm_cap {
        caps.norm_cap = x;
    }
    if let Some(w) = c.lambda_window {
        caps.lambda_window = w;
    }
    if let Some(t) = c.reconnect_lambda_tol {
        caps.reconnect_lambda_tol = t;
    }
    let mesh = &pb.mesh;
    let (bp, bm) = if threads >= 2 {
        std::thread::scope(|s| {
            let hp = s.spawn(|| trace_one(&ep, em.lambda, BranchOrigin::Lambda1, side_p, &op, mesh, cfg, caps));
            let bm = trace_one(&em, ep.lambda, BranchOrigin::LambdaMinus1, side_m, &op, mesh, cfg, caps);
            (hp.join().expect("branch thread panicked"), bm)
        })
    } else {
        (
            trace_one(&ep, em.lambda, BranchOrigin::Lambda1, side_p, &op, mesh, cfg, caps),
            trace_one(&em, ep.lambda, BranchOrigin::LambdaMinus1, side_m, &op, mesh, cfg, caps),
        )
    };
    Ok(BranchRun {
        mesh: pb.mesh.clone(),
        v_spec: pb.v_spec.clone(),
        m_spec: pb.m_spec.clone(),
        operator: op.clone(),
        ep,
        em,
        directions: [dp, dm],
        branches: vec![bp?, bm?],
    })
}

/// Sign agreement between the predicted side and `λ - λ_origin` over the
/// first five points. `None` when the integral is too close to zero to call.
fn direction_agreement(d: &DirectionReport, b: &Branch, lambda0: f64) -> Option<CheckResult> {
    let side = d.side.as_side()?;
    if d.integral.abs() <= 10.0 * d.quadrature_error {
        return None;
    }
    let sign = match side {
        Side::Right => 1.0,
        Side::Left => -1.0,
    };
    let first: Vec<f64> = b.points.iter().take(5).map(|pt| pt.lambda - lambda0).collect();
    let bad = first.iter().position(|&dl| !(sign * dl > 0.0));
    let name = match b.origin {
        BranchOrigin::Lambda1 => "direction_lambda_1",
        BranchOrigin::LambdaMinus1 => "direction_lambda_minus_1",
    };
    let witness = match bad {
        Some(k) => Witness { location: k as f64, values: vec![b.points[k].lambda, lambda0] },
        None => Witness { location: 0.0, values: first.clone() },
    };
    Some(CheckResult::new(
        name,
        bad.is_none() && first.len() == 5,
        d.integral,
        10.0 * d.quadrature_error,
        witness,
        format!("predicted side {:?}", side),
    ))
}

fn branch_file(origin: BranchOrigin) -> &'static str {
    match origin {
        BranchOrigin::Lambda1 => "branch_lambda1.csv",
        BranchOrigin::LambdaMinus1 => "branch_lambda_minus1.csv",
    }
}

/// Execute one run; artifacts go to `cfg.out`.
pub fn run(cfg: &RunConfig, threads: usize) -> Result<RunSummary, RunError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out).map_err(|e| RunError::io(&cfg.out, e))?;
    let pb = Problem::new(cfg)?;
    let out = |name: &str| cfg.out.join(name);
    let mut files = Vec::new();

    match cfg.mode {
        Mode::Eig => {
            let (ep, em) = pb.eigenpairs(cfg)?;
            for (e, name) in [(&ep, "eigenfunction_plus.csv"), (&em, "eigenfunction_minus.csv")] {
                if e.lambda.is_finite() {
                    write_profile_csv(&out(name), &pb.mesh, &e.eigenfunction)?;
                    files.push(out(name));
                }
            }
            write_json(&out("eigen.json"), &json!({ "lambda_1": eigen_json(&ep), "lambda_minus_1": eigen_json(&em) }))?;
            files.push(out("eigen.json"));
        }
        Mode::Solve => {
            let op = pb.operator(cfg)?.with_lambda(cfg.solve.lambda);
            let u0 = match cfg.solve.initial {
                InitialGuess::Zero => GridFunction::zeros(&pb.mesh),
                InitialGuess::Eigenfunction { sign, amplitude } => {
                    let e = principal_eigenvalue(&pb.v, &pb.mesh, cfg.p, sign, &cfg.solver.eigen);
                    e.eigenfunction.scaled(amplitude)
                }
            };
            let r = newton_solve(cfg.solve.lambda, &u0, &op, &pb.mesh, &cfg.solver.newton)?;
            write_profile_csv(&out("solution.csv"), &pb.mesh, &r.u)?;
            write_json(
                &out("solve.json"),
                &json!({
                    "lambda": cfg.solve.lambda,
                    "iterations": r.iterations,
                    "residual": r.residual,
                    "positive": r.positive,
                    "sup_norm": r.u.sup_norm(),
                }),
            )?;
            files.extend([out("solution.csv"), out("solve.json")]);
        }
        Mode::Branch => {
            let br = run_branches(cfg, &pb, threads)?;
            let mut summary = Vec::new();
            let mut diagram = csv::Writer::from_path(out("diagram.csv")).map_err(|e| RunError::io(&out("diagram.csv"), e))?;
            diagram.write_record(["branch", "lambda", "sup_norm"]).map_err(|e| RunError::io(&out("diagram.csv"), e))?;
            let mut failures = Vec::new();
            for (b, d, l0) in [
                (&br.branches[0], &br.directions[0], br.ep.lambda),
                (&br.branches[1], &br.directions[1], br.em.lambda),
            ] {
                let rows = branch_rows(b);
                write_branch_csv(&out(branch_file(b.origin)), &rows)?;
                files.push(out(branch_file(b.origin)));
                let tag = if b.origin == BranchOrigin::Lambda1 { "lambda1" } else { "lambda_minus1" };
                for r in &rows {
                    diagram
                        .write_record([tag.to_string(), r.lambda.to_string(), r.sup_norm.to_string()])
                        .map_err(|e| RunError::io(&out("diagram.csv"), e))?;
                }
                let agreement = direction_agreement(d, b, l0);
                if let Some(c) = agreement.as_ref().filter(|c| c.status == CheckStatus::Fail) {
                    failures.push(serde_json::to_value(c).expect("check result serializes"));
                }
                summary.push(json!({
                    "origin": b.origin,
                    "origin_lambda": l0,
                    "points": b.points.len(),
                    "termination": b.termination,
                    "diagnostic": b.diagnostic,
                    "folds": detect_folds(b),
                    "direction": direction_json(d),
                    "direction_check": agreement.map(|c| c.status),
                }));
            }
            diagram.flush().map_err(|e| RunError::io(&out("diagram.csv"), e))?;
            files.push(out("diagram.csv"));
            write_json(&out("branch.json"), &json!({ "branches": summary }))?;
            files.push(out("branch.json"));
            if !failures.is_empty() {
                return Err(RunError::verification("branch direction disagrees with the predicted side", json!(failures)));
            }
        }
        Mode::Verify => {
            let report = verify_all(cfg, &pb, threads)?;
            let path = out("verification.json");
            write_json(&path, &serde_json::to_value(&report).expect("report serializes"))?;
            files.push(path);
            if !report.all_pass() {
                let failed: Vec<Value> = report.failures().map(|c| serde_json::to_value(c).expect("serializes")).collect();
                return Err(RunError::verification("verification checks failed", json!(failed)));
            }
        }
        Mode::Hypotheses => {
            let f = pb.nonlinearity(cfg)?;
            let fh = check_hypotheses(&f, cfg.p, &SampleControl::default())?;
            let comp = compactness_hypotheses(&f, cfg.p, cfg.geometry.dim)?;
            let d = sign_decompose(&pb.m_spec, 0.0);
            let mh = check_m_hypotheses(&pb.m_spec, &pb.v_spec, &d, &pb.mesh);
            write_json(
                &out("hypotheses.json"),
                &json!({
                    "nonlinearity": fh,
                    "all_f_pass": fh.all_pass(),
                    "compactness": comp,
                    "compactness_pass": comp.pass(),
                    "m": mh,
                    "sign_decomposition": d,
                }),
            )?;
            files.push(out("hypotheses.json"));
        }
        Mode::OrliczDemo => {
            files.extend(orlicz_demo(cfg, &pb)?);
        }
    }
    Ok(RunSummary { mode: cfg.mode, files })
}

fn verify_all(cfg: &RunConfig, pb: &Problem, threads: usize) -> Result<VerificationReport, RunError> {
    let mut report = VerificationReport::default();
    let br = run_branches(cfg, pb, threads)?;
    let op = pb.operator(cfg)?;
    let (lo, hi, _) = nonexistence_window(&pb.v_spec, &pb.m_spec, &op.f, &pb.mesh, cfg.p, &cfg.solver.eigen)?;

    report.push(CheckResult::new(
        "window_contains_eigenvalues",
        lo < br.em.lambda && br.ep.lambda < hi,
        hi - lo,
        0.0,
        Witness { location: 0.0, values: vec![lo, br.em.lambda, br.ep.lambda, hi] },
        "Λ₋₁ < λ₋₁(V) < 0 < λ₁(V) < Λ₁",
    ));
    for b in &br.branches {
        let outside = b.points.iter().position(|pt| pt.lambda < lo || pt.lambda > hi);
        let witness = match outside {
            Some(k) => Witness { location: k as f64, values: vec![b.points[k].lambda, lo, hi] },
            None => Witness { location: 0.0, values: vec![lo, hi] },
        };
        report.push(CheckResult::new(
            &format!("window_contains_{}", branch_file(b.origin).trim_end_matches(".csv")),
            outside.is_none(),
            b.points.len() as f64,
            0.0,
            witness,
            format!("{} points, termination {:?}", b.points.len(), b.termination),
        ));
    }
    for (d, b, l0) in [
        (&br.directions[0], &br.branches[0], br.ep.lambda),
        (&br.directions[1], &br.branches[1], br.em.lambda),
    ] {
        match direction_agreement(d, b, l0) {
            Some(c) => report.push(c),
            None => report.push(CheckResult {
                name: format!("direction_{}", branch_file(b.origin).trim_end_matches(".csv")),
                status: if d.side == DirectionSide::HypothesisViolated { CheckStatus::NotApplicable } else { CheckStatus::Inconclusive },
                value: d.integral,
                tolerance: 10.0 * d.quadrature_error,
                witness: None,
                note: format!("side {:?}", d.side),
            }),
        }
    }
    let lambda_bound = br.branches.iter().flat_map(|b| b.points.iter().map(|pt| pt.lambda.abs())).fold(0.0, f64::max);
    let v_sup = pb.v.sup_norm();
    for b in &br.branches {
        let r = linf_estimate_check(b, &op, &pb.mesh, lambda_bound, v_sup, &cfg.verify.linf)?;
        report.push(CheckResult {
            name: format!("linf_{}", branch_file(b.origin).trim_end_matches(".csv")),
            status: r.status,
            value: r.slope,
            tolerance: r.bound,
            witness: r.witness.clone(),
            note: format!("empirical constant {:.6}, {} points in the fit", r.empirical_constant, r.points_used),
        });
    }
    report.push(picone_check(cfg)?);
    Ok(report)
}

/// Picone on seeded smooth positive pairs: `L ≥ 0` and the discrete gap
/// `‖L - R‖∞` shrinking under two refinements.
fn picone_check(cfg: &RunConfig) -> Result<CheckResult, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let g = &cfg.geometry;
    let base = (g.nodes / 4).max(11);
    let meshes = [base, 2 * base - 1, 4 * base - 3]
        .iter()
        .map(|&n| build_mesh(g.domain, g.dim, n, g.grading))
        .collect::<Result<Vec<_>, _>>()?;
    let (a, b) = g.domain.bounds();
    let width = b - a;
    let p = cfg.verify.picone_p;
    let mut worst_l = f64::INFINITY;
    for k in 0..cfg.verify.picone_pairs {
        let c: [f64; 6] = std::array::from_fn(|_| rng.gen_range(0.0..1.0));
        let v1 = |r: f64| 0.5 + 1.5 * c[0] + 0.4 * (c[1] - 0.5) * (std::f64::consts::PI * (1.0 + 3.0 * c[2]) * (r - a) / width).sin();
        let v2 = |r: f64| 0.5 + 1.5 * c[3] + 0.4 * (c[4] - 0.5) * (std::f64::consts::PI * (1.0 + 3.0 * c[5]) * (r - a) / width).cos();
        let mut gaps = Vec::new();
        for mesh in &meshes {
            let (l, r) = picone(&GridFunction::from_fn(mesh, v1), &GridFunction::from_fn(mesh, v2), mesh, p);
            worst_l = worst_l.min(l.values().iter().copied().fold(f64::INFINITY, f64::min));
            gaps.push(l.values().iter().zip(r.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        }
        if !(gaps[1] < gaps[0] && gaps[2] < gaps[1]) || worst_l < -1e-12 {
            return Ok(CheckResult::new(
                "picone",
                false,
                worst_l,
                1e-12,
                Witness { location: k as f64, values: gaps },
                "pair index in location; gaps under refinement in values",
            ));
        }
    }
    Ok(CheckResult::new(
        "picone",
        true,
        worst_l,
        1e-12,
        Witness { location: cfg.verify.picone_pairs as f64, values: vec![worst_l] },
        format!("{} seeded pairs, p = {p}", cfg.verify.picone_pairs),
    ))
}

fn orlicz_demo(cfg: &RunConfig, pb: &Problem) -> Result<Vec<PathBuf>, RunError> {
    let p = cfg.p;
    let q = p / (p - 1.0);
    let out = |name: &str| cfg.out.join(name);
    let a = make_nfunction(Density::Power { exponent: p, coefficient: 1.0 / p })?;
    let e = make_nfunction(Density::ExpMinusOne)?;

    let path = out("orlicz_conjugate.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| RunError::io(&path, e))?;
    w.write_record(["t", "a_value", "conjugate_value", "exact_conjugate", "young_gap_on_curve"])
        .map_err(|e| RunError::io(&path, e))?;
    for t in geometric_grid(1e-2, 1e2, 21) {
        let s = a.generalized_inverse(t);
        w.write_record([
            t.to_string(),
            a.value(t).to_string(),
            a.conjugate_value(t).to_string(),
            (t.powf(q) / q).to_string(),
            young_gap(s, t, &a).to_string(),
        ])
        .map_err(|e| RunError::io(&path, e))?;
    }
    w.flush().map_err(|e| RunError::io(&path, e))?;

    let grid = geometric_grid(1.0, 1e6, 200);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut gauges = Vec::new();
    for _ in 0..10 {
        let (c0, c1, k) = (rng.gen_range(0.1..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(1.0..5.0));
        let u = GridFunction::from_fn(&pb.mesh, |r| c0 + c1 * (k * r).sin());
        let v = GridFunction::from_fn(&pb.mesh, |r| c1 - c0 * (k * r).cos());
        gauges.push(json!({
            "gauge": gauge_norm(&u, &a, &pb.mesh),
            "holder": holder_check(&u, &v, &a, &pb.mesh),
        }));
    }
    let mut tables = json!({
        "p": p,
        "delta2_power": check_delta2(&a, &grid),
        "delta2_exp": check_delta2(&e, &grid),
        "gauges": gauges,
    });
    if cfg.nonlinearity.is_some() && p < cfg.geometry.dim as f64 {
        let f = pb.nonlinearity(cfg)?;
        tables["compactness"] = serde_json::to_value(compactness_hypotheses(&f, p, cfg.geometry.dim)?).expect("serializes");
    }
    write_json(&out("orlicz.json"), &tables)?;
    Ok(vec![path, out("orlicz.json")])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eig_config(out: &Path) -> RunConfig {
        RunConfig::from_json(&format!(
            r#"{{
                "mode": "eig",
                "geometry": {{ "domain": {{ "kind": "ball", "radius": 1.0 }}, "dim": 3, "nodes": 201 }},
                "p": 2.0,
                "v": [{{ "start": 0.0, "end": 1.0, "coeffs": [1.0] }}],
                "out": {:?}
            }}"#,
            out
        ))
        .unwrap()
    }

    #[test]
    fn eig_mode_reports_sentinel() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = eig_config(dir.path());
        run(&cfg, 1).unwrap();
        let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("eigen.json")).unwrap()).unwrap();
        let l1 = parse_num(&report["lambda_1"]["lambda"]).unwrap();
        assert!((l1 - std::f64::consts::PI.powi(2)).abs() < 0.01 * l1);
        assert_eq!(parse_num(&report["lambda_minus_1"]["lambda"]), Some(f64::NEG_INFINITY));
        let prof = read_profile_csv(&dir.path().join("eigenfunction_plus.csv")).unwrap();
        assert_eq!(prof.len(), 201);
        assert!(!dir.path().join("eigenfunction_minus.csv").exists());
    }

    #[test]
    fn solve_mode_trivial() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = eig_config(dir.path());
        cfg.mode = Mode::Solve;
        run(&cfg, 1).unwrap();
        let prof = read_profile_csv(&dir.path().join("solution.csv")).unwrap();
        assert!(prof.iter().all(|&(_, u)| u == 0.0));
    }

    #[test]
    fn config_errors_map_to_code_2() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = eig_config(dir.path());
        cfg.solver.eigen.tol = 0.0;
        assert_eq!(run(&cfg, 1).unwrap_err().code, 2);
        let mut cfg = eig_config(dir.path());
        cfg.mode = Mode::Branch;
        cfg.p = 3.0;
        assert_eq!(run(&cfg, 1).unwrap_err().code, 2);
        let mut cfg = eig_config(dir.path());
        cfg.v[0].end = 0.9;
        assert_eq!(run(&cfg, 1).unwrap_err().code, 2);
        assert_eq!(RunConfig::from_json("{ \"mode\": \"nope\" }").unwrap_err().code, 2);
    }

    #[test]
    fn num_round_trip() {
        for x in [1.5, f64::INFINITY, f64::NEG_INFINITY] {
            assert_eq!(parse_num(&num(x)), Some(x));
        }
        assert!(parse_num(&num(f64::NAN)).unwrap().is_nan());
    }
}
