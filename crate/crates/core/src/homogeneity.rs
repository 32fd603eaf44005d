//! Scaling symmetries of polynomial problems.
//!
//! If `L(λ^α t, λ^β x, λ^γ u) = λ^{−α} L` and
//! `φ_i(λ^α t, λ^β x, λ^γ u) = λ^{β_i − α} φ_i`, then
//! `Σ β_i ψ_i x_i − α H t` is a first integral. For polynomials the scaling
//! conditions are linear equations in `(α, β, γ)`, one per monomial.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, Symbol};
use crate::family::Infinitesimal;
use crate::linalg::{canonical_basis, Matrix};
use crate::model::Problem;
use crate::noether::{integral_value, FirstIntegral, IntegralSource};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Weights {
    pub alpha: BigRational,
    pub beta: Vec<BigRational>,
    pub gamma: Vec<BigRational>,
}

fn fmt_q(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl Serialize for Weights {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Weights", 3)?;
        st.serialize_field("alpha", &fmt_q(&self.alpha))?;
        st.serialize_field("beta", &self.beta.iter().map(fmt_q).collect::<Vec<_>>())?;
        st.serialize_field("gamma", &self.gamma.iter().map(fmt_q).collect::<Vec<_>>())?;
        st.end()
    }
}

impl Weights {
    pub fn new(alpha: BigRational, beta: Vec<BigRational>, gamma: Vec<BigRational>) -> Result<Weights> {
        let w = Weights { alpha, beta, gamma };
        if w.is_zero() {
            return Err(Error::ZeroWeights);
        }
        Ok(w)
    }

    fn is_zero(&self) -> bool {
        self.to_vector().iter().all(Zero::is_zero)
    }

    /// `(α, β_1..β_n, γ_1..γ_m)`.
    pub fn to_vector(&self) -> Vec<BigRational> {
        std::iter::once(self.alpha.clone())
            .chain(self.beta.iter().cloned())
            .chain(self.gamma.iter().cloned())
            .collect()
    }

    fn from_vector(n: usize, v: &[BigRational]) -> Weights {
        Weights {
            alpha: v[0].clone(),
            beta: v[1..=n].to_vec(),
            gamma: v[n + 1..].to_vec(),
        }
    }

    /// The induced generator `τ = αt, ξ_i = β_i x_i, υ_k = γ_k u_k, f = 0`.
    pub fn generator(&self) -> Infinitesimal {
        let idx = |i: usize| u16::try_from(i).expect("dimension fits in u16");
        Infinitesimal {
            tau: Expr::t().scaled(&self.alpha),
            xi: self
                .beta
                .iter()
                .enumerate()
                .map(|(i, b)| Expr::x(idx(i + 1)).scaled(b))
                .collect(),
            upsilon: self
                .gamma
                .iter()
                .enumerate()
                .map(|(k, g)| Expr::u(idx(k + 1)).scaled(g))
                .collect(),
            f: Expr::zero(),
        }
    }
}

/// Degree equations in the unknowns `(α, β, γ)`, one row per monomial of
/// `L` and of each `φ_i`.
pub fn weight_system(p: &Problem) -> Result<Matrix> {
    let (n, m) = (p.n(), p.m());
    let mut mat = Matrix::new(1 + n + m);
    let mut add_rows = |e: &Expr, what: &str, shift: Option<usize>| -> Result<()> {
        let terms = e
            .polynomial_terms()
            .ok_or_else(|| Error::NonPolynomial(format!("{what} = {e}")))?;
        for (powers, _) in terms {
            let mut row = vec![BigRational::zero(); 1 + n + m];
            row[0] = BigRational::one();
            for (s, k) in powers {
                let col = match s {
                    Symbol::Time => 0,
                    Symbol::State(i) => usize::from(i),
                    Symbol::Control(j) => n + usize::from(j),
                    other => unreachable!("problem symbols are in (t, x, u), got {other}"),
                };
                row[col] += BigRational::from_integer(k.into());
            }
            if let Some(i) = shift {
                row[i] -= BigRational::one();
            }
            mat.push_row(row);
        }
        Ok(())
    };
    add_rows(p.lagrangian(), "L", None)?;
    for (i, phi) in p.dynamics().iter().enumerate() {
        add_rows(phi, &format!("phi{}", i + 1), Some(i + 1))?;
    }
    Ok(mat)
}

/// Basis of all scaling weights, canonical and deterministic. Empty when
/// only the zero solution exists.
pub fn detect_weights(p: &Problem) -> Result<Vec<Weights>> {
    let sys = weight_system(p)?;
    let basis = canonical_basis(sys.cols(), sys.nullspace());
    Ok(basis
        .iter()
        .map(|v| Weights::from_vector(p.n(), v))
        .collect())
}

/// True when `w` satisfies every degree equation of `p`.
pub fn solves(p: &Problem, w: &Weights) -> Result<bool> {
    if w.beta.len() != p.n() || w.gamma.len() != p.m() {
        return Err(Error::DimensionMismatch {
            what: "weights".into(),
            expected: p.n() + p.m(),
            found: w.beta.len() + w.gamma.len(),
        });
    }
    let sys = weight_system(p)?;
    let v = w.to_vector();
    Ok(sys
        .rows()
        .iter()
        .all(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum::<BigRational>().is_zero()))
}

/// `Σ β_i ψ_i x_i − α H t`.
pub fn scaling_integral(p: &Problem, w: &Weights) -> Result<FirstIntegral> {
    if w.is_zero() {
        return Err(Error::ZeroWeights);
    }
    if !solves(p, w)? {
        return Err(Error::WeightsNotSolution);
    }
    let value = integral_value(p, &w.generator());
    Ok(FirstIntegral {
        value,
        source: IntegralSource::Homogeneity,
        problem: p.clone(),
    })
}
