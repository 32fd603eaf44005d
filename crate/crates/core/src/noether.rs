//! Noether first integrals `C = ψ0·f + ψ·ξ − H·τ` and their symbolic
//! verification along extremals.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{dot, sum, Expr, Symbol};
use crate::family::{Generator, Infinitesimal};
use crate::invariance::determining_residuals;
use crate::model::{check_scope, in_phase, in_txu, Problem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntegralSource {
    /// Built from parameter `parameter` (from 1) of a generator.
    Generator { parameter: usize },
    Homogeneity,
    User,
}

/// A function of `(t, x, u, ψ0, ψ)` claimed constant along extremals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FirstIntegral {
    pub value: Expr,
    pub source: IntegralSource,
    #[serde(skip)]
    pub problem: Problem,
}

impl FirstIntegral {
    /// Wraps a user-supplied expression after checking its symbols.
    pub fn user(p: &Problem, value: Expr) -> Result<FirstIntegral> {
        let value = value.normalize();
        check_scope(&value, "first integral", in_phase(p.n(), p.m()))?;
        Ok(FirstIntegral {
            value,
            source: IntegralSource::User,
            problem: p.clone(),
        })
    }

    /// `−H`, the integral of the time translation on autonomous problems.
    pub fn negative_hamiltonian(p: &Problem) -> FirstIntegral {
        FirstIntegral {
            value: (-p.hamiltonian()).normalize(),
            source: IntegralSource::Generator { parameter: 1 },
            problem: p.clone(),
        }
    }
}

fn costates(p: &Problem) -> Vec<Expr> {
    p.costates().into_iter().map(Expr::Sym).collect()
}

pub(crate) fn integral_value(p: &Problem, inf: &Infinitesimal) -> Expr {
    sum([
        Expr::sym(Symbol::Abnormal) * inf.f.clone(),
        dot(&costates(p), &inf.xi),
        -(p.hamiltonian() * inf.tau.clone()),
    ])
    .normalize()
}

/// First integral for parameter `k` (from 1). The generator must satisfy
/// the determining equations for that parameter.
pub fn first_integral(p: &Problem, g: &Generator, k: usize) -> Result<FirstIntegral> {
    let inf = g.parameter(k)?;
    inf.check_dims(p)?;
    let r = determining_residuals(p, inf);
    if !r.is_zero() {
        return Err(Error::NecessaryConditionsFailed { parameter: k });
    }
    first_integral_unchecked(p, g, k)
}

/// As [`first_integral`] without checking the determining equations.
pub fn first_integral_unchecked(p: &Problem, g: &Generator, k: usize) -> Result<FirstIntegral> {
    let inf = g.parameter(k)?;
    inf.check_dims(p)?;
    Ok(FirstIntegral {
        value: integral_value(p, inf),
        source: IntegralSource::Generator { parameter: k },
        problem: p.clone(),
    })
}

/// Outcome of differentiating a first integral along extremals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verification {
    /// `dC/dt` with `x' = φ`, `ψ' = −∂H/∂x` and formal control rates `udot`.
    pub derivative: Expr,
    /// `∂H/∂u·(υ − τ·udot)`, which vanishes wherever stationarity holds.
    pub stationarity_term: Expr,
    /// `derivative − stationarity_term`; zero certifies the conservation law.
    pub residual: Expr,
    /// `derivative` with the control rates dropped. For autonomous problems
    /// this is the derivative computed with `H` held constant.
    pub reduced_derivative: Expr,
}

impl Verification {
    pub fn certified(&self) -> bool {
        self.residual.is_zero()
    }
}

/// Differentiates `c` along extremals and factors out the stationarity
/// condition. A generator satisfying the determining equations gives
/// `dC/dt = ∂H/∂u·(υ − τ·udot)` identically, so the residual is zero.
pub fn verify_symbolic(p: &Problem, c: &FirstIntegral, g: &Infinitesimal) -> Result<Verification> {
    g.check_dims(p)?;
    let derivative = p.extremal_derivative(&c.value);
    let h = p.hamiltonian();
    let direction: Vec<Expr> = g
        .upsilon
        .iter()
        .zip(p.controls())
        .map(|(ups, u)| {
            let rate = match u {
                Symbol::Control(j) => Expr::sym(Symbol::ControlRate(j)),
                _ => unreachable!("controls() yields control symbols"),
            };
            ups.clone() - g.tau.clone() * rate
        })
        .collect();
    let hu: Vec<Expr> = p.controls().into_iter().map(|u| h.diff(u)).collect();
    let stationarity_term = dot(&hu, &direction).normalize();
    let residual = (derivative.clone() - stationarity_term.clone()).normalize();
    let no_rates: BTreeMap<Symbol, Expr> = (1..=p.m())
        .map(|j| {
            let j = u16::try_from(j).expect("dimension fits in u16");
            (Symbol::ControlRate(j), Expr::zero())
        })
        .collect();
    let reduced_derivative = derivative.compose(&no_rates);
    Ok(Verification {
        derivative,
        stationarity_term,
        residual,
        reduced_derivative,
    })
}

/// Adds `ψ0·δf` to an integral, matching a gauge term that gained `s·δf`.
pub fn gauge_adjust(c: &FirstIntegral, delta_f: &Expr) -> Result<FirstIntegral> {
    let delta_f = delta_f.normalize();
    check_scope(&delta_f, "gauge adjustment", in_txu(c.problem.n(), c.problem.m()))?;
    Ok(FirstIntegral {
        value: (c.value.clone() + Expr::sym(Symbol::Abnormal) * delta_f).normalize(),
        ..c.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn p_h(s: &str, prob: &Problem) -> Expr {
        let mut m = BTreeMap::new();
        m.insert("H".to_string(), prob.hamiltonian());
        Expr::parse_with(s, &m).unwrap()
    }

    fn ps(v: &[&str]) -> Vec<Expr> {
        v.iter().map(|s| p(s)).collect()
    }

    fn problem(n: usize, m: usize, l: &str, phi: &[&str]) -> Problem {
        Problem::new("test", n, m, p(l), ps(phi), (0.0, 1.0)).unwrap()
    }

    fn inf(tau: &str, xi: &[&str], ups: &[&str], f: &str) -> Infinitesimal {
        Infinitesimal::new(p(tau), ps(xi), ps(ups), p(f)).unwrap()
    }

    fn martinet() -> Problem {
        problem(3, 2, "u1^2 + u2^2", &["u1", "u2", "u1*x2^2/2"])
    }

    fn ex42() -> Problem {
        problem(4, 2, "u1^2 + u2^2", &["u1*(1 + x2)", "u1*x3", "u2", "u1*x3^2"])
    }

    fn ex42_gen() -> Infinitesimal {
        inf("2*t", &["3*x1", "2*(1 + x2)", "x3", "3*x4"], &["-u1", "-u2"], "0")
    }

    #[test]
    fn martinet_integral() {
        let prob = martinet();
        let g = inf("2*t", &["x1", "x2", "3*x3"], &["-u1", "-u2"], "0");
        let c = first_integral(&prob, &Generator::single(g.clone()), 1).unwrap();
        assert_eq!(c.value, p_h("psi1*x1 + psi2*x2 + 3*psi3*x3 - 2*H*t", &prob));
        assert_eq!(c.source, IntegralSource::Generator { parameter: 1 });
        assert!(verify_symbolic(&prob, &c, &g).unwrap().certified());
    }

    #[test]
    fn ex3_1_integral() {
        let prob = problem(3, 2, "u1^2 + u2^2", &["u1", "u2", "u2*x2^2/2"]);
        let g = inf("0", &["t", "t", "x2^2*t/2"], &["1", "1"], "2*(x1 + x2)");
        let c = first_integral(&prob, &Generator::single(g.clone()), 1).unwrap();
        assert_eq!(
            c.value,
            p("2*psi0*(x1 + x2) + psi1*t + psi2*t + psi3*x2^2*t/2")
        );
        assert!(verify_symbolic(&prob, &c, &g).unwrap().certified());
    }

    #[test]
    fn zero_generator_gives_zero_integral() {
        let prob = martinet();
        let g = Infinitesimal::zero(3, 2);
        let c = first_integral(&prob, &Generator::single(g.clone()), 1).unwrap();
        assert!(c.value.is_zero());
        assert!(verify_symbolic(&prob, &c, &g).unwrap().residual.is_zero());
    }

    #[test]
    fn failing_generator_is_rejected_unless_overridden() {
        let prob = martinet();
        let g = Generator::single(inf("0", &["x1", "0", "0"], &["0", "0"], "0"));
        assert_eq!(
            first_integral(&prob, &g, 1),
            Err(Error::NecessaryConditionsFailed { parameter: 1 })
        );
        let c = first_integral_unchecked(&prob, &g, 1).unwrap();
        assert_eq!(c.value, p("psi1*x1"));
        assert!(first_integral(&prob, &g, 2).is_err());
    }

    #[test]
    fn ex4_2_reduction_matches_hand_derivation() {
        let prob = ex42();
        let g = ex42_gen();
        let c = first_integral(&prob, &Generator::single(g.clone()), 1).unwrap();
        assert_eq!(
            c.value,
            p_h("3*psi1*x1 + 2*psi2*(1 + x2) + psi3*x3 + 3*psi4*x4 - 2*t*H", &prob)
        );
        let v = verify_symbolic(&prob, &c, &g).unwrap();
        assert!(v.certified());
        // Holding H constant, dC/dt = ψ·φ − 2H.
        let expected = p_h(
            "psi1*(1 + x2)*u1 + psi2*x3*u1 + psi3*u2 + psi4*x3^2*u1 - 2*H",
            &prob,
        );
        assert_eq!(v.reduced_derivative, expected);
        // ... which stationarity turns into 0, i.e. H = −ψ0(u1² + u2²).
        let u_star: BTreeMap<Symbol, Expr> =
            prob.controls().into_iter().zip(prob.solve_control().unwrap()).collect();
        assert!(v.reduced_derivative.substitute(&u_star).unwrap().is_zero());
        let h_rel = p_h("H + psi0*(u1^2 + u2^2)", &prob);
        assert!(h_rel.substitute(&u_star).unwrap().is_zero());
    }

    #[test]
    fn time_optimal_integral_verifies_without_closed_form_control() {
        let prob = problem(4, 1, "1", &["1 + x2", "x3", "u1", "x3^2 - x2^2"]);
        assert!(prob.solve_control().is_err());
        let g = inf("0", &["x1 - t", "x2", "x3", "2*x4"], &["u1"], "0");
        let c = first_integral(&prob, &Generator::single(g.clone()), 1).unwrap();
        assert_eq!(c.value, p("psi1*(x1 - t) + psi2*x2 + psi3*x3 + 2*psi4*x4"));
        assert!(verify_symbolic(&prob, &c, &g).unwrap().certified());
    }

    #[test]
    fn corrupted_integral_has_nonzero_residual() {
        let prob = martinet();
        let g = inf("2*t", &["x1", "x2", "3*x3"], &["-u1", "-u2"], "0");
        let c = first_integral(&prob, &Generator::single(g.clone()), 1).unwrap();
        let bad = FirstIntegral::user(&prob, c.value.clone() + Expr::t()).unwrap();
        let v = verify_symbolic(&prob, &bad, &g).unwrap();
        assert_eq!(v.residual, p("1"));
    }

    #[test]
    fn hamiltonian_is_conserved_for_autonomous_problems() {
        let prob = ex42();
        let g = Infinitesimal::time_translation(4, 2);
        let c = first_integral(&prob, &Generator::single(g.clone()), 1).unwrap();
        assert_eq!(c.value, (-prob.hamiltonian()).normalize());
        assert_eq!(c, FirstIntegral::negative_hamiltonian(&prob));
        assert!(verify_symbolic(&prob, &c, &g).unwrap().certified());
    }

    #[test]
    fn gauge_adjustment() {
        let prob = problem(4, 1, "u1", &["1 + x2", "x3", "u1", "x3^2 - x2^2"]);
        let base = FirstIntegral::user(&prob, p("psi1*(x1 - t) + psi2*x2 + psi3*x3 + 2*psi4*x4"))
            .unwrap();
        let adj = gauge_adjust(&base, &p("x3")).unwrap();
        assert_eq!(
            adj.value,
            p("psi1*(x1 - t) + psi2*x2 + psi3*x3 + 2*psi4*x4 + psi0*x3")
        );
        let g = inf("0", &["x1 - t", "x2", "x3", "2*x4"], &["u1"], "x3");
        let direct = first_integral(&prob, &Generator::single(g.clone()), 1).unwrap();
        assert_eq!(direct.value, adj.value);
        assert!(verify_symbolic(&prob, &adj, &g).unwrap().certified());
        assert_eq!(gauge_adjust(&base, &Expr::zero()).unwrap(), base);
        assert!(gauge_adjust(&base, &p("psi1")).is_err());
    }

    #[test]
    fn user_integral_scope() {
        let prob = martinet();
        assert!(FirstIntegral::user(&prob, p("psi1*x1 + s")).is_err());
        assert!(FirstIntegral::user(&prob, p("psi4")).is_err());
        assert!(FirstIntegral::user(&prob, p("psi0*t + u2")).is_ok());
    }
}
