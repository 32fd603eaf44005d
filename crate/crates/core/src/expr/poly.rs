//! Canonical normal form backing [`Expr`](super::Expr).
//!
//! A normalized expression is a quotient `num / den` of two Laurent
//! polynomials whose monomials may carry one merged exponential factor
//! `exp(E)`. The denominator is `1` unless it has at least two terms; in that
//! case its common monomial content is divided out and its leading
//! coefficient is `1`. The numerator is therefore a canonical
//! polynomial/exponential form whenever the input is free of non-monomial
//! quotients, and the zero test is simply `num == 0`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::Symbol;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Monomial {
    /// Sorted by symbol, exponents never zero.
    pub(crate) powers: Vec<(Symbol, i32)>,
    /// Merged exponential factor; never the zero function.
    pub(crate) exp: Option<Box<RatFun>>,
}

impl Monomial {
    pub(crate) fn one() -> Self {
        Monomial {
            powers: Vec::new(),
            exp: None,
        }
    }

    pub(crate) fn var(sym: Symbol, power: i32) -> Self {
        Monomial {
            powers: if power == 0 { Vec::new() } else { vec![(sym, power)] },
            exp: None,
        }
    }

    pub(crate) fn is_one(&self) -> bool {
        self.powers.is_empty() && self.exp.is_none()
    }

    pub(crate) fn power_of(&self, sym: Symbol) -> i32 {
        self.powers
            .binary_search_by(|(s, _)| s.cmp(&sym))
            .map(|i| self.powers[i].1)
            .unwrap_or(0)
    }

    pub(crate) fn total_degree(&self) -> i64 {
        self.powers.iter().map(|&(_, p)| i64::from(p)).sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut powers = Vec::with_capacity(self.powers.len() + other.powers.len());
        let (mut i, mut j) = (0, 0);
        while i < self.powers.len() && j < other.powers.len() {
            let (a, pa) = self.powers[i];
            let (b, pb) = other.powers[j];
            match a.cmp(&b) {
                std::cmp::Ordering::Less => {
                    powers.push((a, pa));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    powers.push((b, pb));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    if pa + pb != 0 {
                        powers.push((a, pa + pb));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        powers.extend_from_slice(&self.powers[i..]);
        powers.extend_from_slice(&other.powers[j..]);
        let exp = match (&self.exp, &other.exp) {
            (None, None) => None,
            (Some(a), None) => Some(a.clone()),
            (None, Some(b)) => Some(b.clone()),
            (Some(a), Some(b)) => {
                let sum = a.add(b);
                if sum.is_zero() {
                    None
                } else {
                    Some(Box::new(sum))
                }
            }
        };
        Monomial { powers, exp }
    }

    fn inverse(&self) -> Monomial {
        Monomial {
            powers: self.powers.iter().map(|&(s, p)| (s, -p)).collect(),
            exp: self.exp.as_ref().map(|e| Box::new(e.neg())),
        }
    }

    fn symbols_into(&self, out: &mut BTreeSet<Symbol>) {
        out.extend(self.powers.iter().map(|&(s, _)| s));
        if let Some(e) = &self.exp {
            e.symbols_into(out);
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Poly {
    pub(crate) terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub(crate) fn zero() -> Self {
        Poly::default()
    }

    pub(crate) fn constant(c: BigRational) -> Self {
        Poly::term(Monomial::one(), c)
    }

    pub(crate) fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    pub(crate) fn term(m: Monomial, c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .iter()
                .next()
                .is_some_and(|(m, c)| m.is_one() && c.is_one())
    }

    pub(crate) fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    fn single_term(&self) -> Option<(&Monomial, &BigRational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub(crate) fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub(crate) fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub(crate) fn scale(&self, k: &BigRational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    fn mul_monomial(&self, m: &Monomial) -> Poly {
        let mut out = Poly::zero();
        for (mm, c) in &self.terms {
            out.add_term(mm.mul(m), c.clone());
        }
        out
    }

    pub(crate) fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    fn pow(&self, mut k: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Leading term under the fixed monomial order (the largest monomial).
    fn leading_coefficient(&self) -> Option<&BigRational> {
        self.terms.iter().next_back().map(|(_, c)| c)
    }

    fn diff(&self, v: Symbol) -> RatFun {
        let mut plain = Poly::zero();
        let mut from_exp = RatFun::zero();
        for (m, c) in &self.terms {
            let p = m.power_of(v);
            if p != 0 {
                let lowered = m.mul(&Monomial::var(v, -1));
                plain.add_term(lowered, c * BigRational::from_integer(BigInt::from(p)));
            }
            if let Some(e) = &m.exp {
                let de = e.diff(v);
                if !de.is_zero() {
                    let factor = RatFun::from_poly(Poly::term(m.clone(), c.clone()));
                    from_exp = from_exp.add(&factor.mul(&de));
                }
            }
        }
        RatFun::from_poly(plain).add(&from_exp)
    }

    fn symbols_into(&self, out: &mut BTreeSet<Symbol>) {
        for m in self.terms.keys() {
            m.symbols_into(out);
        }
    }

    fn substitute(&self, map: &BTreeMap<Symbol, RatFun>) -> RatFun {
        let mut acc = RatFun::zero();
        for (m, c) in &self.terms {
            let mut term = RatFun::constant(c.clone());
            for &(s, p) in &m.powers {
                let base = match map.get(&s) {
                    Some(r) => r.clone(),
                    None => RatFun::symbol(s),
                };
                term = term.mul(&base.powi(i64::from(p)));
            }
            if let Some(e) = &m.exp {
                term = term.mul(&e.substitute(map).exp());
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// Common symbol content: per-symbol minimum exponent over all terms.
    fn monomial_content(&self) -> Monomial {
        let mut syms = BTreeSet::new();
        for m in self.terms.keys() {
            syms.extend(m.powers.iter().map(|&(s, _)| s));
        }
        let powers = syms
            .into_iter()
            .filter_map(|s| {
                let min = self.terms.keys().map(|m| m.power_of(s)).min().unwrap_or(0);
                (min != 0).then_some((s, min))
            })
            .collect();
        let mut exps = self.terms.keys().map(|m| &m.exp);
        let first = exps.next().cloned().flatten();
        let exp = match first {
            Some(e) if self.terms.keys().all(|m| m.exp.as_ref() == Some(&e)) => Some(e),
            _ => None,
        };
        Monomial { powers, exp }
    }

    /// `Some(k)` when `self == k * other` for a rational `k`.
    fn ratio_to(&self, other: &Poly) -> Option<BigRational> {
        if self.terms.len() != other.terms.len() || other.is_zero() {
            return None;
        }
        let mut ratio: Option<BigRational> = None;
        for ((ma, ca), (mb, cb)) in self.terms.iter().zip(other.terms.iter()) {
            if ma != mb {
                return None;
            }
            let r = ca / cb;
            match &ratio {
                None => ratio = Some(r),
                Some(q) if *q == r => {}
                Some(_) => return None,
            }
        }
        ratio
    }

    pub(crate) fn has_exp(&self) -> bool {
        self.terms.keys().any(|m| m.exp.is_some())
    }

    pub(crate) fn has_negative_power(&self) -> bool {
        self.terms
            .keys()
            .any(|m| m.powers.iter().any(|&(_, p)| p < 0))
    }
}

/// Normalized quotient of two [`Poly`] values; see the module docs for the
/// invariants maintained by [`RatFun::new`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct RatFun {
    pub(crate) num: Poly,
    pub(crate) den: Poly,
}

impl RatFun {
    pub(crate) fn zero() -> Self {
        RatFun {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub(crate) fn one() -> Self {
        RatFun::constant(BigRational::one())
    }

    /// Canonical representative of a division by the zero polynomial.
    pub(crate) fn undefined() -> Self {
        RatFun {
            num: Poly::one(),
            den: Poly::zero(),
        }
    }

    pub(crate) fn constant(c: BigRational) -> Self {
        RatFun::from_poly(Poly::constant(c))
    }

    pub(crate) fn symbol(s: Symbol) -> Self {
        RatFun::from_poly(Poly::term(Monomial::var(s, 1), BigRational::one()))
    }

    pub(crate) fn from_poly(num: Poly) -> Self {
        RatFun {
            num,
            den: Poly::one(),
        }
    }

    pub(crate) fn new(num: Poly, den: Poly) -> Self {
        if den.is_zero() {
            return RatFun::undefined();
        }
        if num.is_zero() {
            return RatFun::zero();
        }
        if den.is_one() {
            return RatFun::from_poly(num);
        }
        if let Some((m, c)) = den.single_term() {
            let inv = c.recip();
            let num = num.mul_monomial(&m.inverse()).scale(&inv);
            return RatFun::from_poly(num);
        }
        let content = den.monomial_content();
        let (mut num, mut den) = if content.is_one() {
            (num, den)
        } else {
            let inv = content.inverse();
            (num.mul_monomial(&inv), den.mul_monomial(&inv))
        };
        if let Some(lc) = den.leading_coefficient().cloned() {
            if !lc.is_one() {
                let inv = lc.recip();
                num = num.scale(&inv);
                den = den.scale(&inv);
            }
        }
        if let Some(k) = num.ratio_to(&den) {
            return RatFun::constant(k);
        }
        RatFun { num, den }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub(crate) fn is_undefined(&self) -> bool {
        self.den.is_zero()
    }

    pub(crate) fn is_poly(&self) -> bool {
        self.den.is_one()
    }

    pub(crate) fn as_constant(&self) -> Option<BigRational> {
        if self.is_poly() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub(crate) fn add(&self, other: &RatFun) -> RatFun {
        if self.is_undefined() || other.is_undefined() {
            return RatFun::undefined();
        }
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            if self.den.is_one() {
                return RatFun::from_poly(self.num.add(&other.num));
            }
            return RatFun::new(self.num.add(&other.num), self.den.clone());
        }
        RatFun::new(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub(crate) fn neg(&self) -> RatFun {
        if self.is_undefined() {
            return self.clone();
        }
        RatFun {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub(crate) fn sub(&self, other: &RatFun) -> RatFun {
        self.add(&other.neg())
    }

    pub(crate) fn mul(&self, other: &RatFun) -> RatFun {
        if self.is_undefined() || other.is_undefined() {
            return RatFun::undefined();
        }
        if self.is_zero() || other.is_zero() {
            return RatFun::zero();
        }
        if self.den.is_one() && other.den.is_one() {
            return RatFun::from_poly(self.num.mul(&other.num));
        }
        RatFun::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub(crate) fn scale(&self, k: &BigRational) -> RatFun {
        if self.is_undefined() {
            return self.clone();
        }
        if k.is_zero() {
            return RatFun::zero();
        }
        RatFun {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    pub(crate) fn recip(&self) -> RatFun {
        if self.is_undefined() || self.is_zero() {
            return RatFun::undefined();
        }
        RatFun::new(self.den.clone(), self.num.clone())
    }

    pub(crate) fn powi(&self, k: i64) -> RatFun {
        if k == 0 {
            return if self.is_undefined() {
                RatFun::undefined()
            } else {
                RatFun::one()
            };
        }
        let base = if k < 0 { self.recip() } else { self.clone() };
        if base.is_undefined() {
            return base;
        }
        let k = u32::try_from(k.unsigned_abs()).expect("exponent range checked by caller");
        if base.den.is_one() {
            RatFun::from_poly(base.num.pow(k))
        } else {
            RatFun::new(base.num.pow(k), base.den.pow(k))
        }
    }

    pub(crate) fn exp(&self) -> RatFun {
        if self.is_undefined() {
            return RatFun::undefined();
        }
        if self.is_zero() {
            return RatFun::one();
        }
        let m = Monomial {
            powers: Vec::new(),
            exp: Some(Box::new(self.clone())),
        };
        RatFun::from_poly(Poly::term(m, BigRational::one()))
    }

    pub(crate) fn diff(&self, v: Symbol) -> RatFun {
        if self.is_undefined() {
            return self.clone();
        }
        let dn = self.num.diff(v);
        if self.den.is_one() {
            return dn;
        }
        let dd = self.den.diff(v);
        let n = RatFun::from_poly(self.num.clone());
        let d = RatFun::from_poly(self.den.clone());
        // (n'd - nd') / d^2
        dn.mul(&d).sub(&n.mul(&dd)).mul(&d.powi(-2))
    }

    pub(crate) fn substitute(&self, map: &BTreeMap<Symbol, RatFun>) -> RatFun {
        if self.is_undefined() {
            return self.clone();
        }
        let n = self.num.substitute(map);
        if self.den.is_one() {
            return n;
        }
        n.mul(&self.den.substitute(map).recip())
    }

    pub(crate) fn symbols_into(&self, out: &mut BTreeSet<Symbol>) {
        self.num.symbols_into(out);
        self.den.symbols_into(out);
    }
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_i64(), r.denom().to_i64()) {
        if n.unsigned_abs() < (1 << 53) && d < (1 << 53) {
            return n as f64 / d as f64;
        }
    }
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}
