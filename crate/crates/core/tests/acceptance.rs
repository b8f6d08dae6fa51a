//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use pbif::asymptotics::geometric_grid;
use pbif::cli::{trace_both, BranchRun, RunConfig};
use pbif::eigen::{multistart, principal_eigenvalue, subdomain_eigenvalue_spec, EigenOptions, Sign};
use pbif::geometry::{build_mesh, norm, DomainKind, GridFunction, Interval, NormKind, RadialMesh};
use pbif::nonlinearity::{check_hypotheses, critical_exponent, Nonlinearity, SampleControl};
use pbif::operator::{jacobian, residual, OperatorConfig};
use pbif::orlicz::{
    check_delta2, compactness_hypotheses, gauge_norm, holder_check, make_nfunction, young_gap, Density, NFunction,
};
use pbif::verify::{linf_estimate_check, nonexistence_window, picone, CheckStatus, LinfParams};
use pbif::weights::{evaluate, WeightSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn ball(dim: usize, n: usize) -> RadialMesh {
    build_mesh(DomainKind::Ball { radius: 1.0 }, dim, n, 1.0).unwrap()
}

fn regression_config() -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/regression.json");
    RunConfig::load(&path).unwrap()
}

fn eigenvalue_anchor() -> Outcome {
    let start = Instant::now();
    let mesh = ball(3, 2000);
    let ones = GridFunction::new(vec![1.0; mesh.len()]);
    let e = principal_eigenvalue(&ones, &mesh, 2.0, Sign::Plus, &EigenOptions::default());
    let elapsed = start.elapsed().as_secs_f64();
    let rel = (e.lambda - PI * PI).abs() / (PI * PI);
    let errs: Vec<f64> = [101, 201, 401]
        .iter()
        .map(|&n| {
            let m = ball(3, n);
            let e = principal_eigenvalue(&GridFunction::new(vec![1.0; n]), &m, 2.0, Sign::Plus, &EigenOptions::default());
            (e.lambda - PI * PI).abs()
        })
        .collect();
    let order = errs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
    (
        e.converged() && rel < 0.01 && elapsed < 30.0 && order >= 1.8,
        format!("λ₁ = {:.8} (rel err {rel:.2e} ≤ 1e-2), {elapsed:.2} s (< 30 s), order {order:.3} (≥ 1.8)", e.lambda),
    )
}

/// Random three-piece weight taking both signs.
fn random_weight(rng: &mut ChaCha8Rng) -> WeightSpec {
    let a = rng.gen_range(0.2..0.45);
    let b = rng.gen_range(0.55..0.85);
    let mut vals = [rng.gen_range(0.2..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..-0.2)];
    if rng.gen_bool(0.5) {
        vals.iter_mut().for_each(|x| *x = -*x);
    }
    WeightSpec::piecewise_constant(&[0.0, a, b, 1.0], &vals).unwrap()
}

fn antisymmetry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mesh = ball(3, 201);
    let opts = EigenOptions { tol: 1e-11, ..Default::default() };
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let p = [1.5, 2.0, 3.0][k % 3];
        let v = evaluate(&random_weight(&mut rng), &mesh);
        let minus = principal_eigenvalue(&v, &mesh, p, Sign::Minus, &opts);
        // λ₁(-V) from off-centre starting bumps
        let plus = multistart(&v.scaled(-1.0), &mesh, p, Sign::Plus, &opts);
        if !(minus.converged() && plus.best.converged()) {
            return (false, format!("weight {k}, p = {p}: {:?} / {:?}", minus.status, plus.best.status));
        }
        for l in [plus.lambdas[0], plus.lambdas[2]] {
            worst = worst.max((minus.lambda + l).abs() / l.abs());
        }
    }
    (worst <= 1e-8, format!("max |λ₋₁(V) + λ₁(-V)| / |λ₁(-V)| = {worst:.2e} (≤ 1e-8) over 10 weights"))
}

fn domain_monotonicity() -> Outcome {
    let mesh = ball(3, 401);
    let v = WeightSpec::piecewise_constant(&[0.0, 0.5, 1.0], &[1.0, -1.0]).unwrap();
    let opts = EigenOptions { tol: 1e-11, ..Default::default() };
    let pairs = [((0.0, 1.0), (0.0, 0.8)), ((0.0, 0.8), (0.1, 0.7)), ((0.1, 0.7), (0.2, 0.6)), ((0.2, 0.6), (0.25, 0.5)), ((0.0, 0.5), (0.1, 0.45))];
    let mut lines = Vec::new();
    let mut ok = true;
    for (outer, inner) in pairs {
        let lo = subdomain_eigenvalue_spec(&v, &Interval::new(outer.0, outer.1), &mesh, 2.0, Sign::Plus, &opts).unwrap();
        let li = subdomain_eigenvalue_spec(&v, &Interval::new(inner.0, inner.1), &mesh, 2.0, Sign::Plus, &opts).unwrap();
        ok &= li > lo;
        lines.push(format!("{li:.3} > {lo:.3}"));
    }
    (ok, format!("λ₁(V, ω′) > λ₁(V, ω): {}", lines.join(", ")))
}

/// First five accepted points, all with sup-norm at most 0.01, per branch.
fn small_points(run: &BranchRun) -> Vec<Vec<usize>> {
    run.branches
        .iter()
        .map(|b| (0..b.points.len()).take_while(|&k| b.points[k].sup_norm <= 0.01).take(5).collect())
        .collect()
}

fn bifurcation_point(run: &BranchRun) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for ((b, idx), (e, d)) in run.branches.iter().zip(small_points(run)).zip([(&run.ep, &run.directions[0]), (&run.em, &run.directions[1])]) {
        let l0 = e.lambda;
        let close = idx.iter().all(|&k| (b.points[k].lambda - l0).abs() <= 0.05 * l0.abs());
        // negative integral: right of λ₁, left of λ₋₁
        let sign = if l0 > 0.0 { 1.0 } else { -1.0 };
        let side = d.integral >= 0.0 || idx.iter().all(|&k| sign * (b.points[k].lambda - l0) > 0.0);
        ok &= idx.len() == 5 && close && side && d.integral < 0.0;
        let max_dl = idx.iter().map(|&k| (b.points[k].lambda - l0).abs()).fold(0.0, f64::max);
        parts.push(format!("λ₀ = {l0:.6}, integral {:.3e}, {} points, max |λ-λ₀| = {max_dl:.2e}", d.integral, idx.len()));
    }
    (ok, parts.join("; "))
}

fn profile_convergence(run: &BranchRun) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for ((b, idx), e) in run.branches.iter().zip(small_points(run)).zip([&run.ep, &run.em]) {
        let mut pts: Vec<(f64, f64)> = idx
            .iter()
            .map(|&k| {
                let pt = &b.points[k];
                (pt.sup_norm, pt.u.scaled(1.0 / pt.sup_norm).axpy(-1.0, &e.eigenfunction).sup_norm())
            })
            .collect();
        pts.sort_by(|a, b| b.0.total_cmp(&a.0));
        ok &= pts.len() == 5 && pts.windows(2).all(|w| w[1].1 < w[0].1);
        parts.push(pts.iter().map(|p| format!("{:.1e}", p.1)).collect::<Vec<_>>().join(" > "));
    }
    (ok, format!("‖u/‖u‖∞ - φ‖∞ as ‖u‖∞ ↓ 0: [{}]", parts.join("], [")))
}

fn window(run: &BranchRun) -> Outcome {
    let opts = EigenOptions { tol: 1e-12, ..Default::default() };
    let (lo, hi, rep) = nonexistence_window(&run.v_spec, &run.m_spec, &run.operator.f, &run.mesh, 2.0, &opts).unwrap();
    let strict = lo < run.em.lambda && run.em.lambda < 0.0 && 0.0 < run.ep.lambda && run.ep.lambda < hi;
    let inside = run.branches.iter().all(|b| b.points.iter().all(|pt| lo <= pt.lambda && pt.lambda <= hi));
    let alpha_one = rep.c0 == 0.0 && rep.alpha_plus0 == 1.0;
    let n: usize = run.branches.iter().map(|b| b.points.len()).sum();
    (
        strict && inside && alpha_one,
        format!(
            "[{lo:.3}, {hi:.3}] ⊃ ({:.3}, {:.3}) strictly; {n} branch points inside: {inside}; α₊,₀ = {}",
            run.em.lambda, run.ep.lambda, rep.alpha_plus0
        ),
    )
}

fn picone_suite() -> Outcome {
    let mesh = ball(3, 101);
    let mut worst_eq: f64 = 0.0;
    for p in [1.5, 2.0, 3.0] {
        let v = GridFunction::from_fn(&mesh, |r| 1.0 + r - r * r);
        let (l, r) = picone(&v, &v, &mesh, p);
        let (l2, _) = picone(&v.scaled(2.0), &v, &mesh, p);
        worst_eq = l.values().iter().chain(r.values()).chain(l2.values()).fold(worst_eq, |a, x| a.max(x.abs()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut min_l = f64::INFINITY;
    let mut shrinking = 0;
    for _ in 0..20 {
        let c: [f64; 6] = std::array::from_fn(|_| rng.gen_range(0.0..1.0));
        let v1 = |r: f64| 0.5 + 1.5 * c[0] + 0.4 * (c[1] - 0.5) * (PI * (1.0 + 3.0 * c[2]) * r).sin();
        let v2 = |r: f64| 0.5 + 1.5 * c[3] + 0.4 * (c[4] - 0.5) * (PI * (1.0 + 3.0 * c[5]) * r).cos();
        let gaps: Vec<f64> = [51, 101, 201]
            .iter()
            .map(|&n| {
                let m = ball(3, n);
                let (l, r) = picone(&GridFunction::from_fn(&m, v1), &GridFunction::from_fn(&m, v2), &m, 2.5);
                min_l = l.values().iter().copied().fold(min_l, f64::min);
                l.values().iter().zip(r.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            })
            .collect();
        if gaps[1] < gaps[0] && gaps[2] < gaps[1] {
            shrinking += 1;
        }
    }
    (
        worst_eq <= 1e-12 && min_l >= -1e-12 && shrinking == 20,
        format!("equality cases {worst_eq:.1e} (≤ 1e-12); min L = {min_l:.2e} (≥ -1e-12); gap shrinks on {shrinking}/20 pairs"),
    )
}

fn linf_estimate(run: &BranchRun) -> Outcome {
    let lambda_bound = run.branches.iter().flat_map(|b| b.points.iter().map(|pt| pt.lambda.abs())).fold(0.0, f64::max);
    let params = LinfParams { epsilon: 0.05, slack: 0.1, ..Default::default() };
    let mut ok = true;
    let mut parts = Vec::new();
    for b in &run.branches {
        let r = linf_estimate_check(b, &run.operator, &run.mesh, lambda_bound, 1.0, &params).unwrap();
        ok &= r.status == CheckStatus::Pass;
        parts.push(format!("slope {:.3} ≤ {:.4} ({:?}, {} points)", r.slope, r.bound, r.status, r.points_used));
    }
    (ok, parts.join("; "))
}

fn orlicz_suite() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();

    let p: f64 = 3.0;
    let q = p / (p - 1.0);
    let a = NFunction::power(p, 1.0 / p).unwrap();
    let conj_err = geometric_grid(0.05, 20.0, 20)
        .into_iter()
        .map(|t| (a.conjugate_value(t) - t.powf(q) / q).abs() / (t.powf(q) / q))
        .fold(0.0, f64::max);
    ok &= conj_err <= 1e-8;
    notes.push(format!("conjugate {conj_err:.1e}"));

    let mesh = ball(3, 201);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ap = NFunction::power(p, 1.0).unwrap();
    let mut gauge_err: f64 = 0.0;
    for _ in 0..10 {
        let (c0, c1, k) = (rng.gen_range(0.1..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(1.0..6.0));
        let u = GridFunction::from_fn(&mesh, |r| c0 + c1 * (k * r).sin());
        let lp = norm(&u, &mesh, NormKind::Lebesgue(p));
        gauge_err = gauge_err.max((gauge_norm(&u, &ap, &mesh) - lp).abs() / lp);
    }
    ok &= gauge_err <= 1e-8;
    notes.push(format!("gauge vs Lᵖ {gauge_err:.1e}"));

    let e = make_nfunction(Density::ExpMinusOne).unwrap();
    let mut min_gap = f64::INFINITY;
    let mut locus: f64 = 0.0;
    for b in [&a, &e] {
        for s in geometric_grid(0.01, 4.0, 50) {
            for t in geometric_grid(0.01, 4.0, 50) {
                min_gap = min_gap.min(young_gap(s, t, b));
            }
            let t = b.density(s);
            locus = locus.max(young_gap(s, t, b).abs() / (1.0 + s * t));
        }
    }
    ok &= min_gap >= -1e-12 && locus <= 1e-10;
    notes.push(format!("Young gap min {min_gap:.1e}, on t = a(s) {locus:.1e}"));

    let d_pow = check_delta2(&ap, &geometric_grid(1.0, 1e8, 200));
    let d_exp = check_delta2(&e, &geometric_grid(1.0, 500.0, 200));
    ok &= d_pow.verdict && d_pow.k0 == p && !d_exp.verdict;
    notes.push(format!("Δ₂: t^p {} (k₀ = {}), eᵗ-t-1 {}", d_pow.verdict, d_pow.k0, d_exp.verdict));

    let mut holder_ok = 0;
    for _ in 0..100 {
        let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let u = GridFunction::from_fn(&mesh, |r| c[0] + c[1] * r * r);
        let v = GridFunction::from_fn(&mesh, |r| c[2] * (3.0 * r).cos() + c[3]);
        if holder_check(&u, &v, &e, &mesh).verdict {
            holder_ok += 1;
        }
    }
    ok &= holder_ok == 100;
    notes.push(format!("Hölder {holder_ok}/100"));
    (ok, notes.join("; "))
}

fn compactness() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, f) in [
        ("log", Nonlinearity::log_damped(6.0, 1.0).unwrap()),
        ("iterated log", Nonlinearity::iterated_log(6.0, 1.0).unwrap()),
    ] {
        let r = compactness_hypotheses(&f, 2.0, 3).unwrap();
        let c0 = r.certified_c0;
        let bound = c0 / (c0 - 1.0) + 0.1;
        ok &= r.delta2.verdict && r.delta2.k0 <= bound && r.essentially_slower.verdict;
        notes.push(format!("{name}: k₀ = {:.4} ≤ {bound:.4}, slower {}", r.delta2.k0, r.essentially_slower.verdict));
    }
    let crit = compactness_hypotheses(&Nonlinearity::pure_power(6.0, 6.0).unwrap(), 2.0, 3).unwrap();
    ok &= !crit.essentially_slower.verdict;
    notes.push(format!("critical power slower: {}", crit.essentially_slower.verdict));
    (ok, notes.join("; "))
}

fn hypothesis_checkers() -> Outcome {
    let ctrl = SampleControl::default();
    let log = check_hypotheses(&Nonlinearity::log_damped(6.0, 1.0).unwrap(), 2.0, &ctrl).unwrap();
    let crit = check_hypotheses(&Nonlinearity::pure_power(6.0, 6.0).unwrap(), 2.0, &ctrl).unwrap();
    let g0_err = (log.g0_exponent - 5.0).abs();
    (
        log.all_pass() && g0_err <= 1e-3 && !crit.f1_subcritical.pass,
        format!(
            "log prototype all pass: {}, g₀ exponent {:.6} (|err| {g0_err:.1e} ≤ 1e-3); critical power (f1) pass: {}",
            log.all_pass(),
            log.g0_exponent,
            crit.f1_subcritical.pass
        ),
    )
}

fn jacobian_fd() -> Outcome {
    let mesh = ball(5, 31);
    let mut worst: f64 = 0.0;
    for p in [1.5f64, 2.0, 3.0] {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let f = Nonlinearity::log_damped(critical_exponent(5, p).unwrap(), 1.0).unwrap();
            let v = GridFunction::new((0..mesh.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let m = GridFunction::new((0..mesh.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let cfg = OperatorConfig::new(p, 5, v, m, f).unwrap().with_lambda(rng.gen_range(-20.0..20.0));
            let u = GridFunction::with_dirichlet(&mesh, (0..mesh.len()).map(|_| rng.gen_range(0.1..2.0)).collect());
            let dir = GridFunction::with_dirichlet(&mesh, (0..mesh.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let jv = jacobian(&u, &cfg, &mesh).unwrap().mul_vec(dir.values());
            let h = 1e-6;
            let rp = residual(&u.axpy(h, &dir), &cfg, &mesh);
            let rm = residual(&u.axpy(-h, &dir), &cfg, &mesh);
            let scale = jv.iter().map(|x| x.abs()).fold(0.0, f64::max);
            let err = jv
                .iter()
                .zip(rp.values().iter().zip(rm.values()))
                .map(|(j, (a, b))| (j - (a - b) / (2.0 * h)).abs())
                .fold(0.0, f64::max)
                / scale;
            worst = worst.max(err);
        }
    }
    (worst <= 1e-5, format!("max relative FD mismatch {worst:.2e} (≤ 1e-5) over 15 states"))
}

fn run_binary(config: &Path, out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_pbif"))
        .args(["--config", config.to_str().unwrap(), "--mode", "branch", "--threads", "2", "--out", out.to_str().unwrap()])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn determinism() -> Outcome {
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/regression.json");
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    if !(run_binary(&config, &a) && run_binary(&config, &b)) {
        return (false, "branch mode did not exit 0".into());
    }
    let mut same = true;
    let mut sizes = Vec::new();
    for name in ["branch_lambda1.csv", "branch_lambda_minus1.csv", "diagram.csv"] {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        same &= x == y;
        sizes.push(format!("{name} {} B", x.len()));
    }
    (same, format!("byte-identical: {same} ({})", sizes.join(", ")))
}

fn main() {
    let run = trace_both(&regression_config(), 2).expect("regression branches");
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("eigenvalue anchor", Box::new(eigenvalue_anchor)),
        ("eigenvalue antisymmetry", Box::new(antisymmetry)),
        ("domain monotonicity", Box::new(domain_monotonicity)),
        ("bifurcation point", Box::new(|| bifurcation_point(&run))),
        ("normalized-profile convergence", Box::new(|| profile_convergence(&run))),
        ("nonexistence window", Box::new(|| window(&run))),
        ("Picone identity", Box::new(picone_suite)),
        ("L∞ estimate", Box::new(|| linf_estimate(&run))),
        ("Orlicz suite", Box::new(orlicz_suite)),
        ("compactness hypotheses", Box::new(compactness)),
        ("hypothesis checkers", Box::new(hypothesis_checkers)),
        ("Jacobian correctness", Box::new(jacobian_fd)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(_) => (false, "panicked".to_string()),
        };
        if !ok {
            failed += 1;
        }
        println!("{} {:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("{}/{} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
