//! Generator discovery by polynomial ansatz and exact coefficient matching.
//!
//! The determining equations are linear in `(τ, ξ, υ, f)`. Each unknown
//! coefficient of the ansatz is a unit generator; its residuals give one
//! column of the homogeneous system, one row per monomial in
//! `(t, x, u, udot)` of each residual. The nullspace is the solution space.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, Symbol};
use crate::family::{Generator, Infinitesimal};
use crate::invariance::determining_residuals;
use crate::linalg::{canonical_basis, Matrix};
use crate::model::Problem;
use crate::noether::{first_integral, verify_symbolic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Ansatz {
    /// Maximum total degree: in `(t, x)` for `τ`, `ξ`, `f`; in `(t, x, u)`
    /// for `υ`.
    pub degree: u32,
    /// When false, `τ = 0`.
    pub include_time_change: bool,
    /// When false, `f = 0`.
    pub include_gauge: bool,
}

impl Default for Ansatz {
    fn default() -> Self {
        Ansatz {
            degree: 1,
            include_time_change: true,
            include_gauge: true,
        }
    }
}

type Powers = Vec<(Symbol, i32)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Tau,
    Xi(usize),
    Upsilon(usize),
    Gauge,
}

/// One unknown coefficient: the monomial it multiplies in one component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unknown {
    pub slot: Slot,
    pub monomial: Powers,
}

/// Exponent vectors over `vars` with total degree ≤ `degree`, graded, then
/// in the order the variables are listed.
fn monomials(vars: &[Symbol], degree: u32) -> Vec<Powers> {
    fn rec(vars: &[Symbol], left: u32, acc: &mut Powers, out: &mut Vec<Powers>) {
        let Some((&v, rest)) = vars.split_first() else {
            if left == 0 {
                out.push(acc.clone());
            }
            return;
        };
        for k in (0..=left).rev() {
            if k > 0 {
                acc.push((v, k as i32));
            }
            rec(rest, left - k, acc, out);
            if k > 0 {
                acc.pop();
            }
        }
    }
    let mut out = Vec::new();
    for d in 0..=degree {
        rec(vars, d, &mut Vec::new(), &mut out);
    }
    out
}

fn monomial_expr(powers: &Powers) -> Expr {
    powers
        .iter()
        .fold(Expr::one(), |acc, &(s, k)| acc * Expr::sym(s).powi(i64::from(k)))
        .normalize()
}

fn unknowns(p: &Problem, a: &Ansatz) -> Vec<Unknown> {
    let mut tx = vec![Symbol::Time];
    tx.extend(p.states());
    let mut txu = tx.clone();
    txu.extend(p.controls());
    let tx_monos = monomials(&tx, a.degree);
    let txu_monos = monomials(&txu, a.degree);

    let mut out = Vec::new();
    let mut push = |slot: Slot, monos: &[Powers]| {
        for mono in monos {
            out.push(Unknown {
                slot,
                monomial: mono.clone(),
            });
        }
    };
    if a.include_time_change {
        push(Slot::Tau, &tx_monos);
    }
    for i in 0..p.n() {
        push(Slot::Xi(i), &tx_monos);
    }
    for j in 0..p.m() {
        push(Slot::Upsilon(j), &txu_monos);
    }
    if a.include_gauge {
        // Constant gauge terms are trivial.
        let nonconstant: Vec<Powers> = tx_monos.into_iter().filter(|m| !m.is_empty()).collect();
        push(Slot::Gauge, &nonconstant);
    }
    out
}

fn assemble(p: &Problem, unknowns: &[Unknown], coeffs: &[BigRational]) -> Infinitesimal {
    let mut g = Infinitesimal::zero(p.n(), p.m());
    let mut parts: BTreeMap<Slot, Vec<Expr>> = BTreeMap::new();
    for (u, c) in unknowns.iter().zip(coeffs) {
        if !c.is_zero() {
            parts
                .entry(u.slot)
                .or_default()
                .push(monomial_expr(&u.monomial).scaled(c));
        }
    }
    for (slot, terms) in parts {
        let e = crate::expr::sum(terms).normalize();
        match slot {
            Slot::Tau => g.tau = e,
            Slot::Xi(i) => g.xi[i] = e,
            Slot::Upsilon(j) => g.upsilon[j] = e,
            Slot::Gauge => g.f = e,
        }
    }
    g
}

/// Solution space of the determining equations within an ansatz.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub ansatz: Ansatz,
    pub unknowns: Vec<Unknown>,
    pub equations: usize,
    pub rank: usize,
    /// Canonical basis: reduced echelon rows in unknown order, each scaled
    /// to primitive integers with a positive pivot.
    pub vectors: Vec<Vec<BigRational>>,
    pub basis: Vec<Infinitesimal>,
}

impl SearchOutcome {
    /// Coefficient vector of `g` in the ansatz, or `None` if `g` has a term
    /// outside it.
    pub fn coordinates(&self, g: &Infinitesimal) -> Option<Vec<BigRational>> {
        let index: BTreeMap<(Slot, &Powers), usize> = self
            .unknowns
            .iter()
            .enumerate()
            .map(|(k, u)| ((u.slot, &u.monomial), k))
            .collect();
        let mut v = vec![BigRational::zero(); self.unknowns.len()];
        let mut components = vec![(Slot::Tau, &g.tau)];
        components.extend(g.xi.iter().enumerate().map(|(i, e)| (Slot::Xi(i), e)));
        components.extend(g.upsilon.iter().enumerate().map(|(j, e)| (Slot::Upsilon(j), e)));
        components.push((Slot::Gauge, &g.f));
        for (slot, e) in components {
            for (powers, c) in e.polynomial_terms()? {
                if slot == Slot::Gauge && powers.is_empty() {
                    // Constant gauge offsets do not change the residuals.
                    continue;
                }
                let k = *index.get(&(slot, &powers))?;
                v[k] = c;
            }
        }
        Some(v)
    }

    /// True when `g` lies in the span of the basis, up to a constant gauge
    /// offset.
    pub fn contains(&self, g: &Infinitesimal) -> bool {
        let Some(v) = self.coordinates(g) else {
            return false;
        };
        Matrix::from_rows(self.unknowns.len(), self.vectors.clone()).row_space_contains(&v)
    }
}

/// Builds and solves the determining system for `a`.
pub fn search(p: &Problem, a: &Ansatz) -> Result<SearchOutcome> {
    if !p.is_polynomial() {
        return Err(Error::NonPolynomial(format!("problem `{}`", p.name())));
    }
    let unknowns = unknowns(p, a);
    if unknowns.is_empty() {
        return Err(Error::EmptyAnsatz);
    }
    // Sparse columns keyed by (residual index, monomial).
    let mut rows: BTreeMap<(usize, Powers), Vec<(usize, BigRational)>> = BTreeMap::new();
    let one = BigRational::one();
    for (col, _) in unknowns.iter().enumerate() {
        let mut unit = vec![BigRational::zero(); unknowns.len()];
        unit[col] = one.clone();
        let g = assemble(p, &unknowns, &unit);
        let r = determining_residuals(p, &g);
        let residuals = std::iter::once(&r.lagrangian).chain(&r.dynamics);
        for (eq, e) in residuals.enumerate() {
            let terms = e
                .polynomial_terms()
                .expect("residuals of a polynomial problem are polynomial");
            for (powers, c) in terms {
                rows.entry((eq, powers)).or_default().push((col, c));
            }
        }
    }
    let mut mat = Matrix::new(unknowns.len());
    for entries in rows.values() {
        let mut row = vec![BigRational::zero(); unknowns.len()];
        for (col, c) in entries {
            row[*col] = c.clone();
        }
        mat.push_row(row);
    }
    let equations = mat.nrows();
    let rank = mat.rank();
    let vectors = canonical_basis(unknowns.len(), mat.nullspace());
    let basis = vectors.iter().map(|v| assemble(p, &unknowns, v)).collect();
    Ok(SearchOutcome {
        ansatz: *a,
        unknowns,
        equations,
        rank,
        vectors,
        basis,
    })
}

/// Basis of generators satisfying the determining equations within `a`.
pub fn search_generators(p: &Problem, a: &Ansatz) -> Result<Vec<Infinitesimal>> {
    Ok(search(p, a)?.basis)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchEntry {
    pub generator: Infinitesimal,
    pub integral: Expr,
    pub residual: Expr,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchReport {
    pub ansatz: Ansatz,
    pub unknowns: usize,
    pub equations: usize,
    pub rank: usize,
    pub generators: Vec<SearchEntry>,
}

/// Basis generators with their first integrals and verification residuals.
pub fn search_report(p: &Problem, a: &Ansatz) -> Result<SearchReport> {
    let outcome = search(p, a)?;
    let generators = outcome
        .basis
        .iter()
        .map(|g| {
            let c = first_integral(p, &Generator::single(g.clone()), 1)?;
            let v = verify_symbolic(p, &c, g)?;
            Ok(SearchEntry {
                generator: g.clone(),
                integral: c.value,
                residual: v.residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SearchReport {
        ansatz: *a,
        unknowns: outcome.unknowns.len(),
        equations: outcome.equations,
        rank: outcome.rank,
        generators,
    })
}
