//! Parameter families of transformations `h^s = (T, X, U)` with gauge term
//! `F`, and their infinitesimal generators at `s = 0`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, Symbol};
use crate::homogeneity::Weights;
use crate::model::{check_scope, in_txu, Problem};

/// An `r`-parameter family in closed form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Family {
    r: usize,
    time: Expr,
    state: Vec<Expr>,
    control: Vec<Expr>,
    gauge: Expr,
}

fn param(k: usize) -> Symbol {
    Symbol::Param(u16::try_from(k).expect("parameter index fits in u16"))
}

fn in_family_scope(n: usize, m: usize, r: usize) -> impl Fn(Symbol) -> bool {
    let txu = in_txu(n, m);
    move |s| match s {
        Symbol::Param(k) => (1..=r).contains(&usize::from(k)),
        other => txu(other),
    }
}

impl Family {
    pub fn new(
        r: usize,
        time: Expr,
        state: Vec<Expr>,
        control: Vec<Expr>,
        gauge: Expr,
    ) -> Result<Family> {
        if r == 0 {
            return Err(Error::InvalidArgument("a family needs r ≥ 1 parameters".into()));
        }
        let (n, m) = (state.len(), control.len());
        let scope = in_family_scope(n, m, r);
        let time = time.normalize();
        check_scope(&time, "T", &scope)?;
        let state: Vec<Expr> = state.iter().map(Expr::normalize).collect();
        for (i, x) in state.iter().enumerate() {
            check_scope(x, &format!("X{}", i + 1), &scope)?;
        }
        let control: Vec<Expr> = control.iter().map(Expr::normalize).collect();
        for (j, u) in control.iter().enumerate() {
            check_scope(u, &format!("U{}", j + 1), &scope)?;
        }
        let gauge = gauge.normalize();
        check_scope(&gauge, "F", &scope)?;
        Ok(Family {
            r,
            time,
            state,
            control,
            gauge,
        })
    }

    /// `T = t, X = x, U = u, F = 0`.
    pub fn identity(n: usize, m: usize) -> Family {
        let idx = |i: usize| u16::try_from(i).expect("dimension fits in u16");
        Family {
            r: 1,
            time: Expr::t(),
            state: (1..=n).map(|i| Expr::x(idx(i))).collect(),
            control: (1..=m).map(|j| Expr::u(idx(j))).collect(),
            gauge: Expr::zero(),
        }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn time(&self) -> &Expr {
        &self.time
    }

    pub fn state(&self) -> &[Expr] {
        &self.state
    }

    pub fn control(&self) -> &[Expr] {
        &self.control
    }

    pub fn gauge(&self) -> &Expr {
        &self.gauge
    }

    pub fn n(&self) -> usize {
        self.state.len()
    }

    pub fn m(&self) -> usize {
        self.control.len()
    }

    pub fn params(&self) -> Vec<Symbol> {
        (1..=self.r).map(param).collect()
    }

    /// Bindings `s_k → 0` for every parameter.
    pub(crate) fn at_origin(&self) -> BTreeMap<Symbol, Expr> {
        self.params().into_iter().map(|s| (s, Expr::zero())).collect()
    }

    pub(crate) fn check_dims(&self, p: &Problem) -> Result<()> {
        if self.n() != p.n() {
            return Err(Error::DimensionMismatch {
                what: "family state components".into(),
                expected: p.n(),
                found: self.n(),
            });
        }
        if self.m() != p.m() {
            return Err(Error::DimensionMismatch {
                what: "family control components".into(),
                expected: p.m(),
                found: self.m(),
            });
        }
        Ok(())
    }

    /// Verifies `h^0 = id` and that `F` is constant at `s = 0`.
    pub fn check_origin(&self) -> Result<()> {
        let zero = self.at_origin();
        let idx = |i: usize| u16::try_from(i).expect("dimension fits in u16");
        let mut expect = vec![("T".to_string(), &self.time, Expr::t())];
        for (i, x) in self.state.iter().enumerate() {
            expect.push((format!("X{}", i + 1), x, Expr::x(idx(i + 1))));
        }
        for (j, u) in self.control.iter().enumerate() {
            expect.push((format!("U{}", j + 1), u, Expr::u(idx(j + 1))));
        }
        for (component, e, id) in expect {
            let value = e.compose(&zero);
            if value != id {
                return Err(Error::NotIdentityAtOrigin { component, value });
            }
        }
        let f0 = self.gauge.compose(&zero);
        if f0.as_constant().is_none() {
            return Err(Error::GaugeNotConstantAtOrigin(f0));
        }
        Ok(())
    }
}

/// One parameter's worth of generator: `(τ, ξ, υ, f)` in `(t, x, u)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Infinitesimal {
    pub tau: Expr,
    pub xi: Vec<Expr>,
    pub upsilon: Vec<Expr>,
    pub f: Expr,
}

impl Infinitesimal {
    pub fn new(tau: Expr, xi: Vec<Expr>, upsilon: Vec<Expr>, f: Expr) -> Result<Infinitesimal> {
        let scope = in_txu(xi.len(), upsilon.len());
        let g = Infinitesimal {
            tau: tau.normalize(),
            xi: xi.iter().map(Expr::normalize).collect(),
            upsilon: upsilon.iter().map(Expr::normalize).collect(),
            f: f.normalize(),
        };
        check_scope(&g.tau, "tau", &scope)?;
        for (i, e) in g.xi.iter().enumerate() {
            check_scope(e, &format!("xi{}", i + 1), &scope)?;
        }
        for (j, e) in g.upsilon.iter().enumerate() {
            check_scope(e, &format!("upsilon{}", j + 1), &scope)?;
        }
        check_scope(&g.f, "f", &scope)?;
        Ok(g)
    }

    pub fn zero(n: usize, m: usize) -> Infinitesimal {
        Infinitesimal {
            tau: Expr::zero(),
            xi: vec![Expr::zero(); n],
            upsilon: vec![Expr::zero(); m],
            f: Expr::zero(),
        }
    }

    /// `∂/∂t`, the time translation.
    pub fn time_translation(n: usize, m: usize) -> Infinitesimal {
        Infinitesimal {
            tau: Expr::one(),
            ..Infinitesimal::zero(n, m)
        }
    }

    pub fn n(&self) -> usize {
        self.xi.len()
    }

    pub fn m(&self) -> usize {
        self.upsilon.len()
    }

    fn components(&self) -> impl Iterator<Item = &Expr> {
        std::iter::once(&self.tau)
            .chain(&self.xi)
            .chain(&self.upsilon)
            .chain(std::iter::once(&self.f))
    }

    fn map(&self, g: impl Fn(&Expr) -> Expr) -> Infinitesimal {
        Infinitesimal {
            tau: g(&self.tau),
            xi: self.xi.iter().map(&g).collect(),
            upsilon: self.upsilon.iter().map(&g).collect(),
            f: g(&self.f),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components().all(Expr::is_zero)
    }

    pub fn scaled(&self, k: &BigRational) -> Infinitesimal {
        self.map(|e| e.scaled(k))
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: &BigRational, other: &Infinitesimal, b: &BigRational) -> Infinitesimal {
        assert_eq!((self.n(), self.m()), (other.n(), other.m()), "generator dimensions");
        let lin = |x: &Expr, y: &Expr| (x.scaled(a) + y.scaled(b)).normalize();
        Infinitesimal {
            tau: lin(&self.tau, &other.tau),
            xi: self.xi.iter().zip(&other.xi).map(|(x, y)| lin(x, y)).collect(),
            upsilon: self
                .upsilon
                .iter()
                .zip(&other.upsilon)
                .map(|(x, y)| lin(x, y))
                .collect(),
            f: lin(&self.f, &other.f),
        }
    }

    /// Same generator with `c` added to the gauge component.
    pub fn with_gauge_shift(&self, c: &Expr) -> Infinitesimal {
        Infinitesimal {
            f: (self.f.clone() + c.clone()).normalize(),
            ..self.clone()
        }
    }

    pub(crate) fn check_dims(&self, p: &Problem) -> Result<()> {
        if self.n() != p.n() {
            return Err(Error::DimensionMismatch {
                what: "generator xi".into(),
                expected: p.n(),
                found: self.n(),
            });
        }
        if self.m() != p.m() {
            return Err(Error::DimensionMismatch {
                what: "generator upsilon".into(),
                expected: p.m(),
                found: self.m(),
            });
        }
        Ok(())
    }
}

/// Generator of an `r`-parameter family: one [`Infinitesimal`] per parameter.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Generator {
    parameters: Vec<Infinitesimal>,
}

impl Generator {
    pub fn new(parameters: Vec<Infinitesimal>) -> Result<Generator> {
        let Some(first) = parameters.first() else {
            return Err(Error::InvalidArgument("a generator needs at least one parameter".into()));
        };
        let dims = (first.n(), first.m());
        if let Some(bad) = parameters.iter().find(|g| (g.n(), g.m()) != dims) {
            return Err(Error::DimensionMismatch {
                what: "generator parameters".into(),
                expected: dims.0,
                found: bad.n(),
            });
        }
        Ok(Generator { parameters })
    }

    pub fn single(g: Infinitesimal) -> Generator {
        Generator {
            parameters: vec![g],
        }
    }

    pub fn r(&self) -> usize {
        self.parameters.len()
    }

    pub fn parameters(&self) -> &[Infinitesimal] {
        &self.parameters
    }

    /// Component for parameter `k`, counted from 1.
    pub fn parameter(&self, k: usize) -> Result<&Infinitesimal> {
        k.checked_sub(1)
            .and_then(|i| self.parameters.get(i))
            .ok_or(Error::ParameterOutOfRange {
                index: k,
                r: self.r(),
            })
    }

    pub fn is_zero(&self) -> bool {
        self.parameters.iter().all(Infinitesimal::is_zero)
    }
}

/// Derivative in `s_k` at `s = 0` of every component.
pub fn generator_of(fam: &Family) -> Result<Generator> {
    fam.check_origin()?;
    let zero = fam.at_origin();
    let first_order = |e: &Expr, s: Symbol| e.diff(s).compose(&zero);
    let parameters = fam
        .params()
        .into_iter()
        .map(|s| Infinitesimal {
            tau: first_order(&fam.time, s),
            xi: fam.state.iter().map(|e| first_order(e, s)).collect(),
            upsilon: fam.control.iter().map(|e| first_order(e, s)).collect(),
            f: first_order(&fam.gauge, s),
        })
        .collect();
    Ok(Generator { parameters })
}

/// Closed form used by [`scaling_family`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingForm {
    /// `e^{αs} t`
    Exponential,
    /// `(1 + s)^α t`, integer weights only
    Power,
    /// `(1 + αs) t`
    Linear,
}

/// One-parameter family scaling `t`, `x_i`, `u_k` by the given weights.
pub fn scaling_family(w: &Weights, form: ScalingForm) -> Result<Family> {
    let s = Expr::s(1);
    let factor = |c: &BigRational| -> Result<Expr> {
        Ok(match form {
            ScalingForm::Exponential => (Expr::Const(c.clone()) * s.clone()).exp(),
            ScalingForm::Linear => Expr::one() + Expr::Const(c.clone()) * s.clone(),
            ScalingForm::Power => {
                let k = c
                    .is_integer()
                    .then(|| c.to_integer().to_i64())
                    .flatten()
                    .ok_or_else(|| Error::NonIntegerWeight(c.to_string()))?;
                (Expr::one() + s.clone()).powi(k)
            }
        })
    };
    let idx = |i: usize| u16::try_from(i).expect("dimension fits in u16");
    let time = factor(&w.alpha)? * Expr::t();
    let state = w
        .beta
        .iter()
        .enumerate()
        .map(|(i, b)| Ok(factor(b)? * Expr::x(idx(i + 1))))
        .collect::<Result<Vec<_>>>()?;
    let control = w
        .gamma
        .iter()
        .enumerate()
        .map(|(k, g)| Ok(factor(g)? * Expr::u(idx(k + 1))))
        .collect::<Result<Vec<_>>>()?;
    Family::new(1, time, state, control, Expr::zero())
}
