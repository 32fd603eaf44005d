//! Symbolic expressions over time, states, controls, costates and family
//! parameters.
//!
//! [`Expr`] is a plain expression tree. Every operation that needs a
//! canonical answer (differentiation, substitution, zero testing) goes
//! through the exact normal form in [`poly`]: an expanded Laurent polynomial
//! in the symbols and merged exponential atoms, over arbitrary-precision
//! rationals, divided by a monic multi-term denominator when a genuine
//! quotient is present. [`Expr::normalize`] converts that normal form back
//! into a tree with a fixed term order, so two normalized expressions are
//! equal as functions of the polynomial/exponential algebra exactly when
//! they are structurally equal.

mod compiled;
mod parse;
pub(crate) mod poly;
mod print;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

pub use compiled::CompiledExpr;
use poly::{Monomial, Poly, RatFun};

/// A variable of the optimal control setting.
///
/// Indices are 1-based. The derived order (time, states, controls, `psi0`,
/// costates, parameters, control rates) is the canonical symbol order used
/// when sorting monomials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Time,
    State(u16),
    Control(u16),
    /// The abnormal multiplier `psi0`.
    Abnormal,
    Costate(u16),
    /// Family parameter `s_k`.
    Param(u16),
    /// Formal control derivative `udot_j`. Only produced by total time
    /// derivatives; the parser never accepts it.
    ControlRate(u16),
}

impl Symbol {
    pub fn index(self) -> Option<u16> {
        match self {
            Symbol::Time | Symbol::Abnormal => None,
            Symbol::State(i)
            | Symbol::Control(i)
            | Symbol::Costate(i)
            | Symbol::Param(i)
            | Symbol::ControlRate(i) => Some(i),
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Time => write!(f, "t"),
            Symbol::State(i) => write!(f, "x{i}"),
            Symbol::Control(i) => write!(f, "u{i}"),
            Symbol::Abnormal => write!(f, "psi0"),
            Symbol::Costate(i) => write!(f, "psi{i}"),
            Symbol::Param(i) => write!(f, "s{i}"),
            Symbol::ControlRate(i) => write!(f, "udot{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at column {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{name}` at column {pos}")]
    UnknownSymbol { pos: usize, name: String },
    #[error("non-integer exponent at column {pos}")]
    NonIntegerExponent { pos: usize },
    #[error("no value bound for symbol `{0}`")]
    MissingSymbol(Symbol),
    #[error("division by zero")]
    DivisionByZero,
    #[error("cyclic substitution: `{0}` depends on itself through the bindings")]
    CyclicBinding(Symbol),
}

/// Expression tree node.
///
/// Trees built with the arithmetic operators are raw; use
/// [`Expr::normalize`] (or any operation documented as normalizing) to obtain
/// the canonical form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Const(BigRational),
    Sym(Symbol),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    /// Integer power with a nonzero exponent.
    Pow(Box<Expr>, i64),
    Quotient(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
}

/// Exponents of a monomial, one entry per symbol with nonzero power.
pub type Exponents = Vec<(Symbol, i32)>;

impl Expr {
    pub fn zero() -> Expr {
        Expr::Const(BigRational::zero())
    }

    pub fn one() -> Expr {
        Expr::Const(BigRational::one())
    }

    pub fn int(v: i64) -> Expr {
        Expr::Const(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn rational(p: i64, q: i64) -> Expr {
        Expr::Const(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn sym(s: Symbol) -> Expr {
        Expr::Sym(s)
    }

    pub fn t() -> Expr {
        Expr::Sym(Symbol::Time)
    }

    pub fn x(i: u16) -> Expr {
        Expr::Sym(Symbol::State(i))
    }

    pub fn u(j: u16) -> Expr {
        Expr::Sym(Symbol::Control(j))
    }

    pub fn psi(i: u16) -> Expr {
        if i == 0 {
            Expr::Sym(Symbol::Abnormal)
        } else {
            Expr::Sym(Symbol::Costate(i))
        }
    }

    pub fn s(k: u16) -> Expr {
        Expr::Sym(Symbol::Param(k))
    }

    pub fn powi(self, k: i64) -> Expr {
        if k == 0 {
            Expr::one()
        } else {
            Expr::Pow(Box::new(self), k)
        }
    }

    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }

    /// Parses the infix expression language and returns the normalized tree.
    pub fn parse(text: &str) -> Result<Expr, ExprError> {
        Expr::parse_with(text, &BTreeMap::new())
    }

    /// Like [`Expr::parse`], with additional named sub-expressions (for
    /// instance `H` bound to a Hamiltonian) resolved before symbol lookup.
    pub fn parse_with(text: &str, macros: &BTreeMap<String, Expr>) -> Result<Expr, ExprError> {
        let raw = parse::parse(text, macros)?;
        Ok(raw.normalize())
    }

    pub(crate) fn to_ratfun(&self) -> RatFun {
        match self {
            Expr::Const(c) => RatFun::constant(c.clone()),
            Expr::Sym(s) => RatFun::symbol(*s),
            Expr::Sum(terms) => terms
                .iter()
                .fold(RatFun::zero(), |acc, t| acc.add(&t.to_ratfun())),
            Expr::Product(factors) => {
                let mut acc = RatFun::one();
                for f in factors {
                    acc = acc.mul(&f.to_ratfun());
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
            Expr::Pow(base, k) => base.to_ratfun().powi(*k),
            Expr::Quotient(a, b) => a.to_ratfun().mul(&b.to_ratfun().recip()),
            Expr::Exp(a) => a.to_ratfun().exp(),
        }
    }

    pub(crate) fn from_ratfun(r: &RatFun) -> Expr {
        if r.is_undefined() {
            return Expr::Quotient(Box::new(Expr::one()), Box::new(Expr::zero()));
        }
        let num = poly_to_expr(&r.num);
        if r.is_poly() {
            num
        } else {
            Expr::Quotient(Box::new(num), Box::new(poly_to_expr(&r.den)))
        }
    }

    /// Canonical form: expanded, like terms combined, fixed monomial order.
    pub fn normalize(&self) -> Expr {
        Expr::from_ratfun(&self.to_ratfun())
    }

    /// Exact zero test on the normal form.
    pub fn is_zero(&self) -> bool {
        self.to_ratfun().is_zero()
    }

    /// Exact equality as functions (difference normalizes to zero).
    pub fn equivalent(&self, other: &Expr) -> bool {
        self.to_ratfun().sub(&other.to_ratfun()).is_zero()
    }

    /// Exact partial derivative, normalized.
    pub fn diff(&self, v: Symbol) -> Expr {
        Expr::from_ratfun(&self.to_ratfun().diff(v))
    }

    /// Simultaneous substitution followed by normalization.
    ///
    /// Rejects binding sets in which a bound symbol reaches itself through
    /// the replacements (including a direct self-reference).
    pub fn substitute(&self, bindings: &BTreeMap<Symbol, Expr>) -> Result<Expr, ExprError> {
        check_acyclic(bindings)?;
        Ok(self.compose(bindings))
    }

    /// Simultaneous substitution without the cycle check. This is pullback
    /// along a map, e.g. `L(T, X, U)` where `T` itself mentions `t`.
    pub fn compose(&self, bindings: &BTreeMap<Symbol, Expr>) -> Expr {
        let map: BTreeMap<Symbol, RatFun> = bindings
            .iter()
            .map(|(s, e)| (*s, e.to_ratfun()))
            .collect();
        Expr::from_ratfun(&self.to_ratfun().substitute(&map))
    }

    /// Floating-point evaluation.
    pub fn eval(&self, env: &HashMap<Symbol, f64>) -> Result<f64, ExprError> {
        self.eval_with(&|s| env.get(&s).copied())
    }

    pub fn eval_with(&self, lookup: &dyn Fn(Symbol) -> Option<f64>) -> Result<f64, ExprError> {
        CompiledExpr::new(self).eval(lookup)
    }

    /// All symbols referenced, after normalization (so `x1 - x1` has none).
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.to_ratfun().symbols_into(&mut out);
        out
    }

    /// Symbols appearing anywhere in the tree as written.
    pub fn raw_symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_raw_symbols(&mut out);
        out
    }

    fn collect_raw_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Expr::Const(_) => {}
            Expr::Sym(s) => {
                out.insert(*s);
            }
            Expr::Sum(v) | Expr::Product(v) => v.iter().for_each(|e| e.collect_raw_symbols(out)),
            Expr::Pow(b, _) | Expr::Exp(b) => b.collect_raw_symbols(out),
            Expr::Quotient(a, b) => {
                a.collect_raw_symbols(out);
                b.collect_raw_symbols(out);
            }
        }
    }

    /// `Some(c)` when the expression normalizes to a rational constant.
    pub fn as_constant(&self) -> Option<BigRational> {
        self.to_ratfun().as_constant()
    }

    /// True when the normal form is a polynomial: no quotient, no `exp`, no
    /// negative powers.
    pub fn is_polynomial(&self) -> bool {
        let r = self.to_ratfun();
        r.is_poly() && !r.num.has_exp() && !r.num.has_negative_power()
    }

    /// Terms of a polynomial as `(exponents, coefficient)` pairs in canonical
    /// order, or `None` when the expression is not a polynomial.
    pub fn polynomial_terms(&self) -> Option<Vec<(Exponents, BigRational)>> {
        let r = self.to_ratfun();
        if !r.is_poly() || r.num.has_exp() || r.num.has_negative_power() {
            return None;
        }
        Some(
            r.num
                .terms
                .into_iter()
                .map(|(m, c)| (m.powers, c))
                .collect(),
        )
    }

    /// Maximum total degree of a polynomial expression (`None` if not one,
    /// `Some(-1)` is never returned; the zero polynomial has degree 0).
    pub fn total_degree(&self) -> Option<i64> {
        let r = self.to_ratfun();
        if !self.is_polynomial() {
            return None;
        }
        Some(r.num.terms.keys().map(Monomial::total_degree).max().unwrap_or(0))
    }

    /// Multiplies by a rational constant and normalizes.
    pub fn scaled(&self, k: &BigRational) -> Expr {
        Expr::from_ratfun(&self.to_ratfun().scale(k))
    }
}

fn check_acyclic(bindings: &BTreeMap<Symbol, Expr>) -> Result<(), ExprError> {
    let deps: BTreeMap<Symbol, BTreeSet<Symbol>> = bindings
        .iter()
        .map(|(s, e)| {
            let used = e
                .symbols()
                .into_iter()
                .filter(|u| bindings.contains_key(u))
                .collect();
            (*s, used)
        })
        .collect();
    // Depth-first search with colouring: 0 unvisited, 1 on stack, 2 done.
    let mut state: BTreeMap<Symbol, u8> = BTreeMap::new();
    fn visit(
        s: Symbol,
        deps: &BTreeMap<Symbol, BTreeSet<Symbol>>,
        state: &mut BTreeMap<Symbol, u8>,
    ) -> Result<(), ExprError> {
        match state.get(&s) {
            Some(1) => return Err(ExprError::CyclicBinding(s)),
            Some(2) => return Ok(()),
            _ => {}
        }
        state.insert(s, 1);
        for &d in &deps[&s] {
            visit(d, deps, state)?;
        }
        state.insert(s, 2);
        Ok(())
    }
    for &s in deps.keys() {
        visit(s, &deps, &mut state)?;
    }
    Ok(())
}

fn monomial_factor(s: Symbol, p: i32) -> Expr {
    if p == 1 {
        Expr::Sym(s)
    } else {
        Expr::Pow(Box::new(Expr::Sym(s)), i64::from(p))
    }
}

fn term_to_expr(m: &Monomial, c: &BigRational) -> Expr {
    let mut numer: Vec<Expr> = Vec::new();
    let mut denom: Vec<Expr> = Vec::new();
    for &(s, p) in &m.powers {
        if p > 0 {
            numer.push(monomial_factor(s, p));
        } else {
            denom.push(monomial_factor(s, -p));
        }
    }
    if let Some(e) = &m.exp {
        numer.push(Expr::Exp(Box::new(Expr::from_ratfun(e))));
    }
    if !c.is_one() || numer.is_empty() {
        numer.insert(0, Expr::Const(c.clone()));
    }
    let top = if numer.len() == 1 {
        numer.pop().expect("one factor")
    } else {
        Expr::Product(numer)
    };
    match denom.len() {
        0 => top,
        1 => Expr::Quotient(Box::new(top), Box::new(denom.pop().expect("one factor"))),
        _ => Expr::Quotient(Box::new(top), Box::new(Expr::Product(denom))),
    }
}

fn poly_to_expr(p: &Poly) -> Expr {
    let mut terms: Vec<Expr> = p.terms.iter().map(|(m, c)| term_to_expr(m, c)).collect();
    match terms.len() {
        0 => Expr::zero(),
        1 => terms.pop().expect("one term"),
        _ => Expr::Sum(terms),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_expr(f, self)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Self {
        Expr::int(v)
    }
}

impl From<Symbol> for Expr {
    fn from(s: Symbol) -> Self {
        Expr::Sym(s)
    }
}

impl From<BigRational> for Expr {
    fn from(c: BigRational) -> Self {
        Expr::Const(c)
    }
}

fn flatten_into(kind_sum: bool, e: Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Sum(v) if kind_sum => out.extend(v),
        Expr::Product(v) if !kind_sum => out.extend(v),
        other => out.push(other),
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        let mut v = Vec::new();
        flatten_into(true, self, &mut v);
        flatten_into(true, rhs, &mut v);
        Expr::Sum(v)
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        self + (-rhs)
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        let mut v = Vec::new();
        flatten_into(false, self, &mut v);
        flatten_into(false, rhs, &mut v);
        Expr::Product(v)
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Quotient(Box::new(self), Box::new(rhs))
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(-c),
            other => Expr::Product(vec![Expr::int(-1), other]),
        }
    }
}

macro_rules! ref_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                $tr::$m(self.clone(), rhs.clone())
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                $tr::$m(self, rhs.clone())
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                $tr::$m(self.clone(), rhs)
            }
        }
    )*};
}
ref_ops!(Add add, Sub sub, Mul mul, Div div);

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -(self.clone())
    }
}

/// Sum of a sequence of expressions (raw tree).
pub fn sum<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
    let v: Vec<Expr> = items.into_iter().collect();
    match v.len() {
        0 => Expr::zero(),
        _ => Expr::Sum(v),
    }
}

/// Dot product of two equally long slices (raw tree).
pub fn dot(a: &[Expr], b: &[Expr]) -> Expr {
    debug_assert_eq!(a.len(), b.len());
    sum(a.iter().zip(b).map(|(x, y)| x * y))
}
