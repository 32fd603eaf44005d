//! Optimal control problems `min ∫ L(t,x,u) dt, x' = φ(t,x,u)` with
//! unconstrained controls, and the objects of the maximum principle.

use std::collections::BTreeMap;

use num_traits::Signed;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{dot, sum, Expr, Symbol};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Problem {
    name: String,
    n: usize,
    m: usize,
    lagrangian: Expr,
    dynamics: Vec<Expr>,
    horizon: (f64, f64),
}

pub(crate) fn check_scope(
    e: &Expr,
    context: &str,
    allowed: impl Fn(Symbol) -> bool,
) -> Result<()> {
    match e.symbols().into_iter().find(|&s| !allowed(s)) {
        Some(symbol) => Err(Error::SymbolOutOfScope {
            context: context.to_string(),
            symbol,
        }),
        None => Ok(()),
    }
}

/// Predicate for symbols in `(t, x, u)` with the given dimensions.
pub(crate) fn in_txu(n: usize, m: usize) -> impl Fn(Symbol) -> bool {
    move |s| match s {
        Symbol::Time => true,
        Symbol::State(i) => usize::from(i) <= n,
        Symbol::Control(j) => usize::from(j) <= m,
        _ => false,
    }
}

/// Predicate for symbols in `(t, x, u, ψ0, ψ)`.
pub(crate) fn in_phase(n: usize, m: usize) -> impl Fn(Symbol) -> bool {
    let txu = in_txu(n, m);
    move |s| match s {
        Symbol::Abnormal => true,
        Symbol::Costate(i) => usize::from(i) <= n,
        other => txu(other),
    }
}

fn idx(i: usize) -> u16 {
    u16::try_from(i).expect("dimension fits in u16")
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        lagrangian: Expr,
        dynamics: Vec<Expr>,
        horizon: (f64, f64),
    ) -> Result<Problem> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidProblem(format!(
                "dimensions must be positive (n = {n}, m = {m})"
            )));
        }
        if n > usize::from(u16::MAX) || m > usize::from(u16::MAX) {
            return Err(Error::InvalidProblem("dimension too large".into()));
        }
        if dynamics.len() != n {
            return Err(Error::DimensionMismatch {
                what: "dynamics".into(),
                expected: n,
                found: dynamics.len(),
            });
        }
        let (a, b) = horizon;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidProblem(format!(
                "horizon [{a}, {b}] must satisfy a < b"
            )));
        }
        let lagrangian = lagrangian.normalize();
        check_scope(&lagrangian, "lagrangian", in_txu(n, m))?;
        let dynamics: Vec<Expr> = dynamics.iter().map(Expr::normalize).collect();
        for (i, phi) in dynamics.iter().enumerate() {
            check_scope(phi, &format!("dynamics[{}]", i + 1), in_txu(n, m))?;
        }
        Ok(Problem {
            name: name.into(),
            n,
            m,
            lagrangian,
            dynamics,
            horizon,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    pub fn dynamics(&self) -> &[Expr] {
        &self.dynamics
    }

    pub fn horizon(&self) -> (f64, f64) {
        self.horizon
    }

    pub fn states(&self) -> Vec<Symbol> {
        (1..=self.n).map(|i| Symbol::State(idx(i))).collect()
    }

    pub fn controls(&self) -> Vec<Symbol> {
        (1..=self.m).map(|j| Symbol::Control(idx(j))).collect()
    }

    pub fn costates(&self) -> Vec<Symbol> {
        (1..=self.n).map(|i| Symbol::Costate(idx(i))).collect()
    }

    fn costate_exprs(&self) -> Vec<Expr> {
        self.costates().into_iter().map(Expr::Sym).collect()
    }

    /// True when neither `L` nor `φ` depends on `t`.
    pub fn is_autonomous(&self) -> bool {
        std::iter::once(&self.lagrangian)
            .chain(&self.dynamics)
            .all(|e| !e.symbols().contains(&Symbol::Time))
    }

    pub fn is_polynomial(&self) -> bool {
        std::iter::once(&self.lagrangian)
            .chain(&self.dynamics)
            .all(Expr::is_polynomial)
    }

    /// `H = ψ0·L + ψ·φ`.
    pub fn hamiltonian(&self) -> Expr {
        let h = Expr::sym(Symbol::Abnormal) * self.lagrangian.clone()
            + dot(&self.costate_exprs(), &self.dynamics);
        h.normalize()
    }

    /// `ψ' = −∂H/∂x`, one entry per state.
    pub fn adjoint_rhs(&self) -> Vec<Expr> {
        let h = self.hamiltonian();
        self.states()
            .into_iter()
            .map(|x| (-h.diff(x)).normalize())
            .collect()
    }

    /// `∂H/∂u`, one entry per control.
    pub fn stationarity(&self) -> Vec<Expr> {
        let h = self.hamiltonian();
        self.controls().into_iter().map(|u| h.diff(u)).collect()
    }

    /// Closed-form `u*(t, x, ψ0, ψ)` solving `∂H/∂u = 0` for `ψ0 < 0`.
    ///
    /// Supported when the `u`-Hessian of `H` is diagonal with entries
    /// `c_j·ψ0`, each `c_j` a positive rational constant. Then `H` is
    /// strictly concave in `u` and the stationarity system is affine and
    /// decoupled.
    pub fn solve_control(&self) -> Result<Vec<Expr>> {
        let h = self.hamiltonian();
        let controls = self.controls();
        let psi0 = Expr::sym(Symbol::Abnormal);
        let mut zero_u = BTreeMap::new();
        for &u in &controls {
            zero_u.insert(u, Expr::zero());
        }
        let mut out = Vec::with_capacity(self.m);
        for (j, &uj) in controls.iter().enumerate() {
            let g = h.diff(uj);
            for (k, &uk) in controls.iter().enumerate() {
                let second = g.diff(uk);
                if k != j {
                    if !second.is_zero() {
                        return Err(Error::UnsolvableControl(format!(
                            "∂²H/∂{uj}∂{uk} = {second} is not zero"
                        )));
                    }
                    continue;
                }
                let c = (second.clone() / psi0.clone()).as_constant();
                match c {
                    Some(c) if c.is_positive() => {
                        let u_star = -(g.compose(&zero_u))
                            / (Expr::Const(c) * psi0.clone());
                        out.push(u_star.normalize());
                    }
                    _ => {
                        return Err(Error::UnsolvableControl(format!(
                            "∂²H/∂{uj}² = {second} is not a positive multiple of psi0"
                        )))
                    }
                }
            }
        }
        Ok(out)
    }

    /// Total time derivative along the dynamics with formal control rates:
    /// `D_t g = ∂g/∂t + ∂g/∂x·φ + ∂g/∂u·u'`.
    pub fn total_derivative(&self, g: &Expr) -> Expr {
        let mut terms = vec![g.diff(Symbol::Time)];
        for (x, phi) in self.states().into_iter().zip(&self.dynamics) {
            terms.push(g.diff(x) * phi.clone());
        }
        for j in 1..=self.m {
            let jj = idx(j);
            terms.push(g.diff(Symbol::Control(jj)) * Expr::sym(Symbol::ControlRate(jj)));
        }
        sum(terms).normalize()
    }

    /// Total time derivative along extremals: like
    /// [`total_derivative`](Self::total_derivative) with, in addition,
    /// `ψ' = −∂H/∂x` for the costates.
    pub fn extremal_derivative(&self, g: &Expr) -> Expr {
        let mut terms = vec![self.total_derivative(g)];
        for (psi, rhs) in self.costates().into_iter().zip(self.adjoint_rhs()) {
            terms.push(g.diff(psi) * rhs);
        }
        sum(terms).normalize()
    }
}

/// A point `(t, x, u, ψ0, ψ)` of an extremal.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremalPoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub psi0: f64,
    pub psi: Vec<f64>,
}

impl ExtremalPoint {
    pub fn new(t: f64, x: Vec<f64>, u: Vec<f64>, psi0: f64, psi: Vec<f64>) -> Result<Self> {
        if psi0 > 0.0 {
            return Err(Error::InvalidArgument(format!("psi0 = {psi0} must be ≤ 0")));
        }
        if psi0 == 0.0 && psi.iter().all(|&p| p == 0.0) {
            return Err(Error::InvalidArgument(
                "multipliers (psi0, psi) must not vanish together".into(),
            ));
        }
        Ok(ExtremalPoint { t, x, u, psi0, psi })
    }

    /// Value of a symbol at this point. Parameters and control rates are
    /// not defined on a point.
    pub fn lookup(&self, s: Symbol) -> Option<f64> {
        let at = |v: &[f64], i: u16| v.get(usize::from(i).checked_sub(1)?).copied();
        match s {
            Symbol::Time => Some(self.t),
            Symbol::State(i) => at(&self.x, i),
            Symbol::Control(j) => at(&self.u, j),
            Symbol::Abnormal => Some(self.psi0),
            Symbol::Costate(i) => at(&self.psi, i),
            Symbol::Param(_) | Symbol::ControlRate(_) => None,
        }
    }

    pub fn eval(&self, e: &Expr) -> Result<f64> {
        Ok(e.eval_with(&|s| self.lookup(s))?)
    }
}
