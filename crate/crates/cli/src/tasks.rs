use anyhow::Result;
use freeprob_core::calculus::{fdq, second_fdq_left, second_fdq_right};
use freeprob_core::curvature::{bl_bound, cd_certificate, JacobianTensor};
use freeprob_core::eigen;
use freeprob_core::exact::QMatrix;
use freeprob_core::mc_oracle::{corpus, crosscheck, McConfig};
use freeprob_core::ncpoly::bimodule_act;
use freeprob_core::rational::{self, frac};
use freeprob_core::rigidity::{obata_report, RigidityReport};
use freeprob_core::spectral::{laplacian, poincare_constant, TensorSpace, TruncatedSpace};
use freeprob_core::{NcPoly, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::scenario::{Resolved, Scenario, Task};

#[derive(Debug, Serialize)]
pub struct Outcome {
    pub task: String,
    pub passed: bool,
    pub tolerance: f64,
    pub summary: String,
    pub result: Value,
    #[serde(skip)]
    pub files: Vec<(String, String)>,
    #[serde(skip)]
    pub mc: Option<Value>,
}

impl Outcome {
    fn new(task: Task, passed: bool, tolerance: f64, summary: String, result: Value) -> Self {
        Outcome { task: task.to_string(), passed, tolerance, summary, result, files: Vec::new(), mc: None }
    }

    fn failed(task: Task, tolerance: f64, err: &anyhow::Error) -> Self {
        let msg = format!("{err:#}");
        Outcome::new(task, false, tolerance, format!("failed: {msg}"), json!({ "stage": task.to_string(), "error": msg }))
    }
}

pub fn run_task(task: Task, sc: &Scenario, env: &Resolved) -> Outcome {
    let tol = match task {
        Task::LeibnizSuite | Task::JacobianSymmetry => 0.0,
        Task::TraceCrosscheck => sc.mc.c0,
        _ => sc.tolerances.spectral,
    };
    let r = match task {
        Task::LeibnizSuite => leibniz_suite(sc),
        Task::TraceCrosscheck => trace_crosscheck(sc, env),
        Task::Spectrum => spectrum(sc, env),
        Task::Poincare => poincare(sc, env),
        Task::Cd => cd(sc, env),
        Task::Bl => bl(sc, env),
        Task::Rigidity => rigidity(sc, env),
        Task::JacobianSymmetry => jacobian_symmetry(env),
    };
    r.unwrap_or_else(|e| Outcome::failed(task, tol, &e))
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, max_deg: usize) -> NcPoly {
    let mut p = NcPoly::zero(n);
    for _ in 0..rng.random_range(1..=4) {
        let len = rng.random_range(0..=max_deg);
        let w = Word::from_letters((0..len).map(|_| rng.random_range(0..n)));
        let num = rng.random_range(1i64..=4) * if rng.random_bool(0.5) { 1 } else { -1 };
        p.add_term(w, frac(num, rng.random_range(1i64..=3)));
    }
    p
}

fn leibniz_suite(sc: &Scenario) -> Result<Outcome> {
    let n = sc.n;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let one = NcPoly::one(n);
    let (mut leibniz, mut realness, mut coassoc) = (0usize, 0usize, 0usize);
    for _ in 0..sc.suite.cases {
        let p = random_poly(&mut rng, n, sc.suite.max_degree);
        let q = random_poly(&mut rng, n, sc.suite.max_degree);
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let rhs = &bimodule_act(&one, &fdq(i, &p)?, &q)? + &bimodule_act(&p, &fdq(i, &q)?, &one)?;
        leibniz += usize::from(fdq(i, &(&p * &q))? != rhs);
        realness += usize::from(fdq(i, &p.star())? != fdq(i, &p)?.dagger());
        coassoc += usize::from(second_fdq_left(j, i, &p)? != second_fdq_right(i, j, &p)?);
    }
    let failures = leibniz + realness + coassoc;
    Ok(Outcome::new(
        Task::LeibnizSuite,
        failures == 0,
        0.0,
        format!("{} cases, {failures} exact mismatches", sc.suite.cases),
        json!({
            "cases": sc.suite.cases,
            "max_degree": sc.suite.max_degree,
            "leibniz_failures": leibniz,
            "realness_failures": realness,
            "coassociativity_failures": coassoc,
        }),
    ))
}

fn trace_crosscheck(sc: &Scenario, env: &Resolved) -> Result<Outcome> {
    let cfg = McConfig::new(sc.mc.size, sc.mc.trials, sc.seed, env.state.model().clone())?;
    let words = corpus(sc.n)?;
    let cc = crosscheck(&words, &cfg, sc.mc.c0)?;
    let passed = cc.failures <= sc.mc.max_failures;
    let worst = cc
        .rows
        .iter()
        .zip(&words)
        .map(|(r, w)| (r.mean - rational::to_f64(&env.state.trace(w))).abs() / r.bound)
        .fold(0.0, f64::max);
    let mut csv = String::from("word,exact,mean,stderr,bound,pass\n");
    for r in &cc.rows {
        csv.push_str(&format!("{},{},{:.12},{:.12},{:.12},{}\n", r.word, r.exact, r.mean, r.stderr, r.bound, r.pass));
    }
    let mut out = Outcome::new(
        Task::TraceCrosscheck,
        passed,
        sc.mc.c0,
        format!("{} words, {} outside 4(stderr + c0/N), worst ratio {worst:.3}", cc.rows.len(), cc.failures),
        json!({ "bound": "4 (stderr + c0 / N)", "max_failures": sc.mc.max_failures, "words": cc.rows.len(), "failures": cc.failures }),
    );
    out.files.push(("crosscheck.csv".into(), csv));
    out.mc = Some(json!({
        "N": cc.size,
        "T": cc.trials,
        "seed": cc.seed,
        "c0": sc.mc.c0,
        "failures": cc.failures,
        "rows": cc.rows,
    }));
    Ok(out)
}

fn spectrum(sc: &Scenario, env: &Resolved) -> Result<Outcome> {
    let tol = sc.tolerances.spectral;
    let space = TruncatedSpace::new(env.state.clone(), sc.degree)?;
    let lap = laplacian(&space, &env.xi)?;
    let spec = lap.spectrum(tol)?;
    let self_adjoint = lap.is_self_adjoint();
    let lowest = &spec.clusters[0];
    let kernel_ok = lowest.value.abs() <= tol && lowest.multiplicity == 1;
    let labels: Vec<String> = (0..space.dim()).map(|k| space.label(k)).collect();
    let listing: Vec<String> = spec.clusters.iter().map(|c| format!("{} (x{})", fmt_value(c.value, tol), c.multiplicity)).collect();
    let mut out = Outcome::new(
        Task::Spectrum,
        self_adjoint && kernel_ok,
        tol,
        format!("dim {}: {}", space.dim(), listing.join(", ")),
        json!({
            "dim": space.dim(),
            "degree": sc.degree,
            "self_adjoint": self_adjoint,
            "kernel_is_constants": kernel_ok,
            "clusters": spec.clusters,
        }),
    );
    out.files.push(("spectrum.csv".into(), spec.to_csv(&labels)));
    Ok(out)
}

fn fmt_value(v: f64, tol: f64) -> String {
    let r = v.round();
    if (v - r).abs() <= tol {
        format!("{}", r as i64)
    } else {
        format!("{v:.10}")
    }
}

fn lambda_min(a: &QMatrix) -> Result<f64> {
    let n = a.rows();
    let e = eigen::generalized_symmetric(&a.to_f64(), &QMatrix::identity(n).to_f64())?;
    Ok(e.values[0])
}

/// Curvature constant: the scenario's value, else `lambda_min(A)` for the
/// quadratic potential of the model.
fn curvature(sc: &Scenario, env: &Resolved) -> Result<Option<f64>> {
    match (env.curvature, &sc.potential) {
        (Some(c), _) => Ok(Some(c)),
        (None, None) => Ok(Some(lambda_min(&env.precision)?)),
        (None, Some(_)) => Ok(None),
    }
}

fn poincare(sc: &Scenario, env: &Resolved) -> Result<Outcome> {
    let tol = sc.tolerances.spectral;
    let space = TruncatedSpace::new(env.state.clone(), sc.degree)?;
    laplacian(&space, &env.xi)?;
    let p = poincare_constant(&space, tol)?;
    let c = curvature(sc, env)?;
    let bound = c.map(|c| 1.0 / c);
    let passed = bound.is_none_or(|b| p.constant <= b + tol);
    let summary = match bound {
        Some(b) => format!("C_P = {:.10} (gap {:.10}, multiplicity {}), bound 1/c = {b:.10}", p.constant, p.gap, p.gap_multiplicity),
        None => format!("C_P = {:.10} (gap {:.10}, multiplicity {})", p.constant, p.gap, p.gap_multiplicity),
    };
    Ok(Outcome::new(Task::Poincare, passed, tol, summary, json!({ "poincare": p, "curvature": c, "bound": bound })))
}

fn cd(sc: &Scenario, env: &Resolved) -> Result<Outcome> {
    let tol = sc.tolerances.spectral;
    let t = JacobianTensor::of(&env.xi)?;
    let space = TensorSpace::new(env.state.clone(), sc.tolerances.cd_degree)?;
    let cert = cd_certificate(&t, &space, tol)?;
    let c = curvature(sc, env)?;
    let passed = match c {
        Some(c) => cert.certifies(c),
        None => cert.min_eigenvalue > tol,
    };
    let target = c.map_or("> 0".to_string(), |c| format!(">= {c:.10}"));
    Ok(Outcome::new(
        Task::Cd,
        passed,
        tol,
        format!("min eigenvalue {:.10} (target {target}), {}", cert.min_eigenvalue, cert.label),
        json!({ "certificate": cert, "curvature": c }),
    ))
}

fn bl(sc: &Scenario, env: &Resolved) -> Result<Outcome> {
    let tol = sc.tolerances.spectral;
    let t = JacobianTensor::of(&env.xi)?;
    let y = &env.observable;
    let degree = sc.tolerances.cd_degree.max(y.degree().unwrap_or(0).saturating_sub(1));
    let space = TensorSpace::new(env.state.clone(), degree)?;
    let c = match curvature(sc, env)? {
        Some(c) => c,
        None => cd_certificate(&t, &space, tol)?.min_eigenvalue,
    };
    let b = bl_bound(y, &t, &space, c, tol)?;
    Ok(Outcome::new(
        Task::Bl,
        b.ordered,
        tol,
        format!("Var {:.10} <= BL {:.10} <= E/c {:.10}: {}", b.variance, b.bl_value, b.plain_bound, b.ordered),
        json!({ "observable": y.to_string(), "tensor_degree": degree, "bound": b }),
    ))
}

fn rigidity(sc: &Scenario, env: &Resolved) -> Result<Outcome> {
    let tols = sc.tolerances.rigidity();
    let report = obata_report(&env.state, &env.xi, sc.degree, &tols)?;
    let r_ok = sc.expected_r.is_none_or(|r| r == report.r);
    let mut summary = format!("r = {}, {}", report.r, report.verdict.message());
    if !r_ok {
        summary.push_str(&format!(" (expected r = {})", sc.expected_r.unwrap_or_default()));
    }
    let mut out = Outcome::new(
        Task::Rigidity,
        report.passed() && r_ok,
        tols.eigen,
        summary,
        serde_json::to_value(&report)?,
    );
    out.files.push(("saturators.csv".into(), saturators_csv(&report)));
    out.files.push(("moments.csv".into(), moments_csv(&report)));
    Ok(out)
}

fn saturators_csv(report: &RigidityReport) -> String {
    let mut s = String::from("index,poly,affine_residual,skew_part_zero,energy,energy2,energy_identity_residual,stein_residual\n");
    for (k, e) in report.saturators.iter().enumerate() {
        s.push_str(&format!(
            "{k},{},{:e},{},{:.12},{:.12},{:e},{:e}\n",
            e.poly, e.affine_residual, e.skew_part_zero, e.energy, e.energy2, e.energy_identity_residual, e.stein_residual
        ));
    }
    s
}

fn moments_csv(report: &RigidityReport) -> String {
    let mut s = String::from("direction,y,variance,order,value,expected,residual\n");
    for d in &report.directions {
        for m in &d.semicircular.moments {
            s.push_str(&format!("{},{},{},{},{},{},{:e}\n", d.index, d.y, d.variance, m.order, m.value, m.expected, m.residual));
        }
    }
    s
}

fn jacobian_symmetry(env: &Resolved) -> Result<Outcome> {
    let t = JacobianTensor::of(&env.xi)?;
    let s = t.symmetries();
    Ok(Outcome::new(
        Task::JacobianSymmetry,
        s.all(),
        0.0,
        format!("schwarz {}, star {}, dagger {}", s.schwarz, s.star, s.dagger),
        json!({ "potential": env.potential.poly().to_string(), "symmetries": s, "jacobian": t }),
    ))
}
