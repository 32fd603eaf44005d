//! Quasi-invariance of a problem under a finite family (orders 0 and 1 in
//! `s`), and the determining equations a generator must satisfy.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::expr::{dot, sum, Expr, Symbol};
use crate::family::{Family, Generator, Infinitesimal};
use crate::model::Problem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Family,
    Generator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Orders 0 and 1 of a finite family vanish.
    QuasiInvariant,
    /// A generator satisfies the determining equations. These are necessary
    /// for quasi-invariance of some family, not known to be sufficient.
    NecessaryConditionsSatisfied,
    Failed,
}

/// Lagrangian and dynamics parts of one residual set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residuals {
    pub lagrangian: Expr,
    pub dynamics: Vec<Expr>,
}

impl Residuals {
    fn iter(&self) -> impl Iterator<Item = &Expr> {
        std::iter::once(&self.lagrangian).chain(&self.dynamics)
    }

    pub fn is_zero(&self) -> bool {
        self.iter().all(Expr::is_zero)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub kind: CheckKind,
    pub passed: bool,
    pub verdict: Verdict,
    /// First-order residual of the Lagrangian condition, one per parameter.
    pub lagrangian_residual: Vec<Expr>,
    /// First-order residuals of the dynamics conditions, one vector per
    /// parameter.
    pub dynamics_residuals: Vec<Vec<Expr>>,
    /// Residuals at `s = 0` (family checks only).
    pub order_zero: Option<Residuals>,
    /// Parts of order ≥ 2 in `s` that quasi-invariance discards (family
    /// checks only).
    pub remainder_terms: Option<Residuals>,
    /// Set when any residual involves formal control rates `udot`.
    pub udot_dependence: bool,
}

impl InvarianceReport {
    fn finish(
        kind: CheckKind,
        per_param: Vec<Residuals>,
        order_zero: Option<Residuals>,
        remainder_terms: Option<Residuals>,
    ) -> InvarianceReport {
        let passed = per_param.iter().all(Residuals::is_zero)
            && order_zero.as_ref().is_none_or(Residuals::is_zero);
        let has_udot = |e: &Expr| {
            e.symbols()
                .iter()
                .any(|s| matches!(s, Symbol::ControlRate(_)))
        };
        let udot_dependence = per_param
            .iter()
            .chain(order_zero.iter())
            .chain(remainder_terms.iter())
            .flat_map(Residuals::iter)
            .any(has_udot);
        let verdict = match (passed, kind) {
            (false, _) => Verdict::Failed,
            (true, CheckKind::Family) => Verdict::QuasiInvariant,
            (true, CheckKind::Generator) => Verdict::NecessaryConditionsSatisfied,
        };
        let (lagrangian_residual, dynamics_residuals) = per_param
            .into_iter()
            .map(|r| (r.lagrangian, r.dynamics))
            .unzip();
        InvarianceReport {
            kind,
            passed,
            verdict,
            lagrangian_residual,
            dynamics_residuals,
            order_zero,
            remainder_terms,
            udot_dependence,
        }
    }

    pub fn conclusion(&self) -> &'static str {
        match self.verdict {
            Verdict::QuasiInvariant => "quasi-invariant",
            Verdict::NecessaryConditionsSatisfied => "necessary conditions satisfied",
            Verdict::Failed => "failed",
        }
    }

    /// True when the residuals for parameter `k` (from 1) vanish.
    pub fn parameter_passes(&self, k: usize) -> bool {
        let i = k - 1;
        self.lagrangian_residual[i].is_zero() && self.dynamics_residuals[i].iter().all(Expr::is_zero)
    }
}

/// Linearized change of `g` along a generator:
/// `g_t τ + g_x·ξ + g_u·υ + g·D_t τ`.
fn variation(p: &Problem, g: &Expr, inf: &Infinitesimal, dt_tau: &Expr) -> Expr {
    let gx: Vec<Expr> = p.states().into_iter().map(|x| g.diff(x)).collect();
    let gu: Vec<Expr> = p.controls().into_iter().map(|u| g.diff(u)).collect();
    sum([
        g.diff(Symbol::Time) * inf.tau.clone(),
        dot(&gx, &inf.xi),
        dot(&gu, &inf.upsilon),
        g.clone() * dt_tau.clone(),
    ])
}

/// Determining-equation residuals of one generator component: the
/// Lagrangian residual `D_t f − δL` and the dynamics residuals
/// `D_t ξ_i − δφ_i`.
pub fn determining_residuals(p: &Problem, inf: &Infinitesimal) -> Residuals {
    let dt_tau = p.total_derivative(&inf.tau);
    let lagrangian =
        (p.total_derivative(&inf.f) - variation(p, p.lagrangian(), inf, &dt_tau)).normalize();
    let dynamics = p
        .dynamics()
        .iter()
        .zip(&inf.xi)
        .map(|(phi, xi)| (p.total_derivative(xi) - variation(p, phi, inf, &dt_tau)).normalize())
        .collect();
    Residuals {
        lagrangian,
        dynamics,
    }
}

/// Checks the determining equations for every parameter of `g`.
pub fn check_generator(p: &Problem, g: &Generator) -> Result<InvarianceReport> {
    for inf in g.parameters() {
        inf.check_dims(p)?;
    }
    let per_param = g
        .parameters()
        .iter()
        .map(|inf| determining_residuals(p, inf))
        .collect();
    Ok(InvarianceReport::finish(
        CheckKind::Generator,
        per_param,
        None,
        None,
    ))
}

/// Checks that the order-0 and order-1 Taylor coefficients in `s` of
/// `L∘h^s·D_tT − L − D_tF` and `φ∘h^s·D_tT − D_tX` vanish.
pub fn check_family(p: &Problem, fam: &Family) -> Result<InvarianceReport> {
    fam.check_dims(p)?;
    fam.check_origin()?;

    let mut pullback = BTreeMap::new();
    pullback.insert(Symbol::Time, fam.time().clone());
    for (x, e) in p.states().into_iter().zip(fam.state()) {
        pullback.insert(x, e.clone());
    }
    for (u, e) in p.controls().into_iter().zip(fam.control()) {
        pullback.insert(u, e.clone());
    }
    let dt_time = p.total_derivative(fam.time());

    let defect_l = (p.lagrangian().compose(&pullback) * dt_time.clone()
        - p.lagrangian().clone()
        - p.total_derivative(fam.gauge()))
    .normalize();
    let defect_phi: Vec<Expr> = p
        .dynamics()
        .iter()
        .zip(fam.state())
        .map(|(phi, x)| {
            (phi.compose(&pullback) * dt_time.clone() - p.total_derivative(x)).normalize()
        })
        .collect();

    let origin = fam.at_origin();
    let params = fam.params();
    let order_zero = |e: &Expr| e.compose(&origin);
    let order_one = |e: &Expr, s: Symbol| e.diff(s).compose(&origin);
    let remainder = |e: &Expr| {
        let linear = sum(params.iter().map(|&s| order_one(e, s) * Expr::sym(s)));
        (e.clone() - order_zero(e) - linear).normalize()
    };

    let per_param = params
        .iter()
        .map(|&s| Residuals {
            lagrangian: order_one(&defect_l, s),
            dynamics: defect_phi.iter().map(|e| order_one(e, s)).collect(),
        })
        .collect();
    let zero = Residuals {
        lagrangian: order_zero(&defect_l),
        dynamics: defect_phi.iter().map(order_zero).collect(),
    };
    let rest = Residuals {
        lagrangian: remainder(&defect_l),
        dynamics: defect_phi.iter().map(remainder).collect(),
    };
    Ok(InvarianceReport::finish(
        CheckKind::Family,
        per_param,
        Some(zero),
        Some(rest),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::generator_of;

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn ps(v: &[&str]) -> Vec<Expr> {
        v.iter().map(|s| p(s)).collect()
    }

    fn problem(n: usize, m: usize, l: &str, phi: &[&str]) -> Problem {
        Problem::new("test", n, m, p(l), ps(phi), (0.0, 1.0)).unwrap()
    }

    fn ex41() -> Problem {
        problem(
            4,
            2,
            "u1^2 + u2^2",
            &["x3", "x4", "-x1*(x1^2 + x2^2) + u1", "-x2*(x1^2 + x2^2) + u2"],
        )
    }

    fn inf(tau: &str, xi: &[&str], ups: &[&str], f: &str) -> Infinitesimal {
        Infinitesimal::new(p(tau), ps(xi), ps(ups), p(f)).unwrap()
    }

    #[test]
    fn rotation_generator_passes() {
        let g = inf("0", &["-x2", "x1", "-x4", "x3"], &["-u2", "u1"], "0");
        let r = check_generator(&ex41(), &Generator::single(g)).unwrap();
        assert!(r.passed);
        assert_eq!(r.verdict, Verdict::NecessaryConditionsSatisfied);
        assert_eq!(r.conclusion(), "necessary conditions satisfied");
        assert!(!r.udot_dependence);
    }

    #[test]
    fn zero_generator_passes() {
        let r = check_generator(&ex41(), &Generator::single(Infinitesimal::zero(4, 2))).unwrap();
        assert!(r.passed);
        assert!(r.lagrangian_residual[0].is_zero());
    }

    #[test]
    fn lone_xi1_fails_in_x1_equation() {
        let g = inf("0", &["x1", "0", "0", "0"], &["0", "0"], "0");
        let r = check_generator(&ex41(), &Generator::single(g)).unwrap();
        assert!(!r.passed);
        assert_eq!(r.verdict, Verdict::Failed);
        // D_t(x1) − ∂φ1/∂x·ξ = x3 − 0.
        assert_eq!(r.dynamics_residuals[0][0], p("x3"));
        assert!(r.lagrangian_residual[0].is_zero());
    }

    #[test]
    fn dimension_mismatch() {
        let g = inf("0", &["x1"], &["0", "0"], "0");
        assert!(check_generator(&ex41(), &Generator::single(g)).is_err());
    }

    #[test]
    fn ex3_1_family() {
        let prob = problem(3, 2, "u1^2 + u2^2", &["u1", "u2", "u2*x2^2/2"]);
        let fam = Family::new(
            1,
            p("t"),
            ps(&["x1 + s*t", "x2 + s*t", "x3 + x2^2*s*t/2"]),
            ps(&["u1 + s", "u2 + s"]),
            p("2*s*(x1 + x2)"),
        )
        .unwrap();
        let r = check_family(&prob, &fam).unwrap();
        assert!(r.passed);
        assert_eq!(r.verdict, Verdict::QuasiInvariant);
        let rest = r.remainder_terms.unwrap();
        assert_eq!(rest.lagrangian, p("2*s^2"));
        assert_eq!(rest.dynamics[2], p("((u2*t^2 + 2*x2*t)*s^2 + t^2*s^3)/2"));
        assert!(rest.dynamics[0].is_zero());
        let gen = generator_of(&fam).unwrap();
        assert!(check_generator(&prob, &gen).unwrap().passed);
    }

    #[test]
    fn ex4_1_family() {
        let fam = Family::new(
            1,
            p("t"),
            ps(&["x1 - x2*s", "x2 + x1*s", "x3 - x4*s", "x4 + x3*s"]),
            ps(&["u1 - u2*s", "u2 + u1*s"]),
            p("0"),
        )
        .unwrap();
        let r = check_family(&ex41(), &fam).unwrap();
        assert!(r.passed);
        let rest = r.remainder_terms.unwrap();
        assert_eq!(rest.lagrangian, p("(u1^2 + u2^2)*s^2"));
        assert_eq!(rest.dynamics[2], p("(x2*s - x1)*(x1^2 + x2^2)*s^2"));
        assert_eq!(rest.dynamics[3], p("(-x2 - x1*s)*(x1^2 + x2^2)*s^2"));
    }

    #[test]
    fn ex4_2_family() {
        let prob = problem(4, 2, "u1^2 + u2^2", &["u1*(1 + x2)", "u1*x3", "u2", "u1*x3^2"]);
        let fam = Family::new(
            1,
            p("t*(1 + 2*s)"),
            ps(&["x1*(1 + 3*s)", "x2 + 2*s*(1 + x2)", "x3*(1 + s)", "x4*(1 + 3*s)"]),
            ps(&["u1*(1 - s)", "u2*(1 - s)"]),
            p("0"),
        )
        .unwrap();
        let r = check_family(&prob, &fam).unwrap();
        assert!(r.passed);
        let rest = r.remainder_terms.unwrap();
        assert_eq!(rest.lagrangian, p("(u1^2 + u2^2)*(2*s - 3)*s^2"));
        assert_eq!(rest.dynamics[0], p("-4*u1*(1 + x2)*s^3"));
        assert_eq!(rest.dynamics[1], p("-u1*x3*(1 + 2*s)*s^2"));
        assert_eq!(rest.dynamics[2], p("-2*u2*s^2"));
        assert_eq!(rest.dynamics[3], p("u1*x3^2*(1 - 3*s - 2*s^2)*s^2"));
    }

    #[test]
    fn drift_family() {
        let prob = problem(2, 1, "u1^2", &["1 + x2^2", "u1"]);
        let fam = Family::new(
            1,
            p("t*(1 - 2*s)"),
            ps(&["x1 + 2*s*(t - 2*x1)", "x2*(1 - s)"]),
            ps(&["u1*(1 + s)"]),
            p("0"),
        )
        .unwrap();
        let r = check_family(&prob, &fam).unwrap();
        assert!(r.passed);
        let rest = r.remainder_terms.unwrap();
        assert_eq!(rest.lagrangian, p("-(3 + 2*s)*u1^2*s^2"));
        assert_eq!(rest.dynamics[0], p("(5*x2^2 - 2*x2^2*s)*s^2"));
        assert_eq!(rest.dynamics[1], p("-2*u1*s^2"));
    }

    #[test]
    fn identity_family_is_exactly_invariant() {
        let r = check_family(&ex41(), &Family::identity(4, 2)).unwrap();
        assert!(r.passed);
        assert!(r.remainder_terms.unwrap().is_zero());
    }

    #[test]
    fn non_invariant_family_fails_at_first_order() {
        let fam = Family::new(
            1,
            p("t"),
            ps(&["x1*(1 + s)", "x2", "x3", "x4"]),
            ps(&["u1", "u2"]),
            p("0"),
        )
        .unwrap();
        let r = check_family(&ex41(), &fam).unwrap();
        assert!(!r.passed);
        assert!(r.order_zero.unwrap().is_zero());
        assert!(!r.dynamics_residuals[0][0].is_zero());
    }

    #[test]
    fn u_dependent_family_sets_udot_flag() {
        let prob = problem(1, 1, "u1^2", &["u1"]);
        let fam = Family::new(1, p("t"), ps(&["x1 + s*u1"]), ps(&["u1"]), p("0")).unwrap();
        let r = check_family(&prob, &fam).unwrap();
        assert!(r.udot_dependence);
        assert!(!r.passed);
    }

    #[test]
    fn exponential_family_remainder_is_exact() {
        // Martinet with the exponential scaling family: exactly invariant,
        // so the remainder vanishes despite the exp atoms.
        let prob = problem(3, 2, "u1^2 + u2^2", &["u1", "u2", "u1*x2^2/2"]);
        let fam = Family::new(
            1,
            p("exp(2*s)*t"),
            ps(&["exp(s)*x1", "exp(s)*x2", "exp(3*s)*x3"]),
            ps(&["exp(-s)*u1", "exp(-s)*u2"]),
            p("0"),
        )
        .unwrap();
        let r = check_family(&prob, &fam).unwrap();
        assert!(r.passed);
        assert!(r.remainder_terms.unwrap().is_zero());
    }
}
