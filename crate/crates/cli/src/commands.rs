//! One function per subcommand. Each returns a [`Report`]; input and
//! applicability problems come back as [`CliError`].

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use num_rational::BigRational;
use serde_json::json;

use noether_core::extremal::{ensemble_drift, step_halving, EnsembleConfig, EnsembleReport};
use noether_core::homogeneity::solves;
use noether_core::invariance::InvarianceReport;
use noether_core::{
    check_family, check_generator, detect_weights, first_integral, generator_of, scaling_integral,
    search_report, verify_symbolic, Ansatz, Error as CoreError, Expr, Family, FirstIntegral,
    Generator, Infinitesimal, Problem, Symbol, Weights,
};
use noether_core::expr::dot;

use crate::corpus::CorpusEntry;
use crate::error::CliError;
use crate::files::Document;
use crate::report::{Report, Status};

/// Bound on `|∂H/∂u|` along integrated extremals.
pub const STATIONARITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericOptions {
    /// Largest accepted relative drift.
    pub tol: f64,
    pub step: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions {
            tol: 1e-6,
            step: 1e-3,
            trials: 20,
            seed: 42,
        }
    }
}

impl NumericOptions {
    fn ensemble(&self) -> EnsembleConfig {
        EnsembleConfig {
            trials: self.trials,
            seed: self.seed,
            step: self.step,
            psi0: -0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Transform {
    Family(Family),
    Generator(Generator),
}

impl Transform {
    /// The family or generator of `secondary` if given, else of `primary`.
    pub fn of(primary: &Document, secondary: Option<&Document>) -> Result<Transform, CliError> {
        let doc = secondary.unwrap_or(primary);
        if let Some(f) = &doc.family {
            Ok(Transform::Family(f.clone()))
        } else if let Some(g) = &doc.generator {
            Ok(Transform::Generator(Generator::single(g.clone())))
        } else {
            Err(CliError::Usage(format!("{}: no [family] or [generator] defined", doc.origin)))
        }
    }

    pub fn generator(&self) -> Result<Generator, CliError> {
        match self {
            Transform::Family(f) => Ok(generator_of(f)?),
            Transform::Generator(g) => Ok(g.clone()),
        }
    }
}

fn residual_lines(r: &InvarianceReport) -> Vec<String> {
    let mut out = Vec::new();
    for (k, l) in r.lagrangian_residual.iter().enumerate() {
        if !l.is_zero() {
            out.push(format!("R_L[s{}] = {l}", k + 1));
        }
    }
    for (k, rs) in r.dynamics_residuals.iter().enumerate() {
        for (i, e) in rs.iter().enumerate() {
            if !e.is_zero() {
                out.push(format!("R_phi{}[s{}] = {e}", i + 1, k + 1));
            }
        }
    }
    out
}

fn fmt_q(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn fmt_weights(w: &Weights) -> String {
    let list = |v: &[BigRational]| v.iter().map(fmt_q).collect::<Vec<_>>().join(", ");
    format!(
        "alpha = {}, beta = ({}), gamma = ({})",
        fmt_q(&w.alpha),
        list(&w.beta),
        list(&w.gamma)
    )
}

/// `ψ0·f + ψ·ξ − τ·H` with `H` left symbolic; re-parses (with the `H`
/// macro) to the expanded integral.
pub fn h_form(p: &Problem, g: &Infinitesimal) -> String {
    let costates: Vec<Expr> = p.costates().into_iter().map(Expr::sym).collect();
    let base = (Expr::sym(Symbol::Abnormal) * g.f.clone() + dot(&costates, &g.xi)).normalize();
    let tau = g.tau.normalize();
    let neg = (-tau.clone()).normalize();
    let (sign, shown) = if tau.to_string().starts_with('-') { ("+", neg) } else { ("-", tau.clone()) };
    match (base.is_zero(), tau.is_zero()) {
        (_, true) => base.to_string(),
        (true, false) => format!("{}({shown})*H", if sign == "-" { "-" } else { "" }),
        (false, false) => format!("{base} {sign} ({shown})*H"),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report data serializes")
}

pub fn check(p: &Problem, t: &Transform) -> Result<Report, CliError> {
    let mut rep = Report::new(format!("check {}", p.name()));
    let mut data = serde_json::Map::new();
    if let Transform::Family(fam) = t {
        let r = check_family(p, fam)?;
        rep.check("family quasi-invariance", r.passed, r.conclusion());
        if !r.passed {
            for line in residual_lines(&r) {
                rep.line(line);
            }
        }
        if let Some(rest) = &r.remainder_terms {
            let l = &rest.lagrangian;
            rep.line(format!("remainder L: {l}"));
            for (i, e) in rest.dynamics.iter().enumerate() {
                rep.line(format!("remainder phi{}: {e}", i + 1));
            }
        }
        data.insert("family".into(), to_json(&r));
    }
    let gen = t.generator()?;
    let r = check_generator(p, &gen)?;
    rep.check("generator necessary conditions", r.passed, r.conclusion());
    if !r.passed {
        for line in residual_lines(&r) {
            rep.line(line);
        }
    }
    data.insert("generator".into(), to_json(&r));
    rep.data = serde_json::Value::Object(data);
    Ok(rep)
}

pub fn derive(p: &Problem, t: &Transform, expected: Option<&Expr>) -> Result<Report, CliError> {
    let mut rep = Report::new(format!("derive {}", p.name()));
    let gen = t.generator()?;
    let mut integrals = Vec::new();
    for k in 1..=gen.r() {
        let c = match first_integral(p, &gen, k) {
            Ok(c) => c,
            Err(CoreError::NecessaryConditionsFailed { parameter }) => {
                rep.check(format!("s{parameter} necessary conditions"), false, "generator fails");
                let r = check_generator(p, &gen)?;
                for line in residual_lines(&r) {
                    rep.line(line);
                }
                rep.data = json!({ "generator": to_json(&r) });
                return Ok(rep);
            }
            Err(e) => return Err(e.into()),
        };
        let v = verify_symbolic(p, &c, gen.parameter(k)?)?;
        rep.line(format!("C{k} = {}", h_form(p, gen.parameter(k)?)));
        rep.line(format!("   = {}", c.value));
        rep.check(
            format!("s{k} symbolic certificate"),
            v.certified(),
            format!("dC/dt - H_u*(upsilon - tau*udot) = {}", v.residual),
        );
        integrals.push(json!({ "integral": c.value, "verification": to_json(&v) }));
        if let (Some(e), 1) = (expected, gen.r()) {
            rep.check("matches expected integral", c.value == *e, format!("expected {e}"));
        }
    }
    rep.data = json!({ "integrals": integrals });
    Ok(rep)
}

pub fn homog(p: &Problem, expected: Option<&Weights>, integral: Option<&Expr>) -> Result<Report, CliError> {
    let mut rep = Report::new(format!("homog {}", p.name()));
    let basis = detect_weights(p)?;
    if basis.is_empty() {
        rep.line("no nonzero scaling weights");
    }
    let mut entries = Vec::new();
    for w in &basis {
        let c = scaling_integral(p, w)?;
        let v = verify_symbolic(p, &c, &w.generator())?;
        rep.line(fmt_weights(w));
        rep.line(format!("  C = {}", h_form(p, &w.generator())));
        rep.line(format!("    = {}", c.value));
        rep.check(
            format!("scaling integral for ({})", fmt_weights(w)),
            v.certified(),
            format!("residual {}", v.residual),
        );
        entries.push(json!({ "weights": to_json(w), "integral": c.value }));
    }
    if let Some(w) = expected {
        let inside = solves(p, w)?;
        rep.check("expected weights in solution space", inside, fmt_weights(w));
        if let (true, Some(e)) = (inside, integral) {
            let c = scaling_integral(p, w)?;
            rep.check("scaling integral matches expected", c.value == *e, format!("expected {e}"));
        }
    }
    rep.data = json!({ "basis": entries });
    Ok(rep)
}

pub fn search(p: &Problem, a: &Ansatz) -> Result<Report, CliError> {
    let mut rep = Report::new(format!("search {}", p.name()));
    let r = search_report(p, a)?;
    rep.line(format!(
        "degree {}: {} unknowns, {} equations, rank {}, {} generators",
        a.degree,
        r.unknowns,
        r.equations,
        r.rank,
        r.generators.len()
    ));
    for (k, e) in r.generators.iter().enumerate() {
        let g = &e.generator;
        let list = |v: &[Expr]| v.iter().map(Expr::to_string).collect::<Vec<_>>().join(", ");
        rep.line(format!(
            "g{}: tau = {}, xi = ({}), upsilon = ({}), f = {}",
            k + 1,
            g.tau,
            list(&g.xi),
            list(&g.upsilon),
            g.f
        ));
        rep.line(format!("  C = {}", e.integral));
        rep.check(
            format!("g{} certified", k + 1),
            e.residual.is_zero(),
            format!("residual {}", e.residual),
        );
    }
    rep.data = to_json(&r);
    Ok(rep)
}

fn drift_table(r: &EnsembleReport) -> Vec<String> {
    let mut out = vec!["trial  max_abs_drift  relative_drift".to_string()];
    out.extend(
        r.per_trial
            .iter()
            .map(|t| format!("{:5}  {:.6e}  {:.6e}", t.trial, t.max_abs_drift, t.relative_drift)),
    );
    out
}

fn ensemble_check(rep: &mut Report, label: &str, r: &EnsembleReport, tol: f64) -> bool {
    rep.check(
        format!("{label} drift"),
        r.worst.relative_drift <= tol,
        format!(
            "worst relative drift {:.3e} (trial {}), tolerance {tol:e}, {} of {} trials completed",
            r.worst.relative_drift, r.worst_trial, r.completed, r.trials
        ),
    )
}

pub fn simulate(p: &Problem, c: &FirstIntegral, opts: &NumericOptions, csv: Option<&Path>) -> Result<Report, CliError> {
    let mut rep = Report::new(format!("simulate {}", p.name()));
    if let Err(e @ CoreError::UnsolvableControl(_)) = p.solve_control() {
        rep.set_status(Status::NotApplicable);
        rep.line(format!("{e}"));
        rep.line("numeric integration needs u*; verify the integral symbolically with `noether derive`");
        return Ok(rep);
    }
    let cfg = opts.ensemble();
    let r = ensemble_drift(p, c, &cfg)?;
    rep.line(format!("C = {}", c.value));
    ensemble_check(&mut rep, "integral", &r, opts.tol);
    rep.check(
        "stationarity",
        r.max_stationarity_residual <= STATIONARITY_TOL,
        format!("max |H_u| = {:.3e}", r.max_stationarity_residual),
    );
    let halving = step_halving(p, c, &cfg)?;
    rep.check(
        "step halving",
        halving.passed,
        format!(
            "worst drift {:.3e} at h, {:.3e} at h/2",
            halving.full, halving.half
        ),
    );
    let mut data = serde_json::Map::new();
    if p.is_autonomous() {
        let h = ensemble_drift(p, &FirstIntegral::negative_hamiltonian(p), &cfg)?;
        ensemble_check(&mut rep, "hamiltonian", &h, opts.tol);
        data.insert("hamiltonian".into(), to_json(&h));
    }
    if r.blown_up > 0 {
        rep.line(format!("{} trials blew up and were excluded", r.blown_up));
    }
    let table = drift_table(&r);
    rep.lines.extend(table.iter().cloned());
    if let Some(path) = csv {
        let io = |e: std::io::Error| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        let mut notes = vec![
            format!("integral {}", c.value),
            format!("worst trial {} of {}", r.worst_trial, r.trials),
        ];
        notes.extend(table);
        r.worst_trajectory.write_csv(&mut w, &notes).map_err(io)?;
        rep.line(format!("worst trajectory written to {}", path.display()));
    }
    data.insert("ensemble".into(), to_json(&r));
    data.insert("halving".into(), to_json(&halving));
    rep.data = serde_json::Value::Object(data);
    Ok(rep)
}

/// Runs one entry end to end; the report's checks are the pipeline stages.
pub fn corpus_entry(entry: &CorpusEntry, opts: &NumericOptions) -> Report {
    let mut rep = Report::new(entry.name.clone());
    if let Err(e) = run_entry(entry, opts, &mut rep) {
        rep.check("error", false, e.to_string());
    }
    rep
}

fn run_entry(entry: &CorpusEntry, opts: &NumericOptions, rep: &mut Report) -> Result<(), CliError> {
    let doc = &entry.doc;
    let p = doc.require_problem()?;
    let expected = doc.expected_integral().expect("corpus entries have an expected integral");
    let t = Transform::of(doc, None)?;
    let checked = check(p, &t)?;
    rep.checks.extend(checked.checks);
    let gen = t.generator()?;
    let c = first_integral(p, &gen, 1)?;
    rep.line(format!("C = {}", c.value));
    rep.check("derived integral matches expected", c.value == *expected, format!("expected {expected}"));
    let v = verify_symbolic(p, &FirstIntegral::user(p, expected.clone())?, gen.parameter(1)?)?;
    rep.check("expected integral certified", v.certified(), format!("residual {}", v.residual));
    if let Some(w) = doc.expect.as_ref().and_then(|e| e.weights.as_ref()) {
        let h = homog(p, Some(w), Some(expected))?;
        rep.checks.extend(h.checks);
    }
    if entry.numeric() {
        let cfg = opts.ensemble();
        let r = ensemble_drift(p, &c, &cfg)?;
        ensemble_check(rep, "integral", &r, opts.tol);
        rep.check(
            "stationarity",
            r.max_stationarity_residual <= STATIONARITY_TOL,
            format!("max |H_u| = {:.3e}", r.max_stationarity_residual),
        );
        if p.is_autonomous() {
            let h = ensemble_drift(p, &FirstIntegral::negative_hamiltonian(p), &cfg)?;
            ensemble_check(rep, "hamiltonian", &h, opts.tol);
        }
    }
    Ok(())
}

pub fn corpus(entries: &[CorpusEntry], opts: &NumericOptions) -> Report {
    let mut rep = Report::new("corpus");
    let mut results = Vec::new();
    for entry in entries {
        let r = corpus_entry(entry, opts);
        let label = if r.passed() { "PASS" } else { "FAIL" };
        rep.line(format!("{label} {}", entry.name));
        for c in r.checks.iter().filter(|c| !c.passed) {
            rep.line(format!("  {}: {}", c.name, c.detail));
        }
        rep.check(entry.name.clone(), r.passed(), format!("{} stages", r.checks.len()));
        results.push(json!({ "name": entry.name, "status": r.status, "lines": r.lines, "checks": r.checks }));
    }
    let passed = rep.checks.iter().filter(|c| c.passed).count();
    rep.line(format!("{passed} of {} entries pass", entries.len()));
    rep.data = json!({ "entries": results, "options": {
        "tol": opts.tol, "step": opts.step, "trials": opts.trials, "seed": opts.seed,
    } });
    rep
}
