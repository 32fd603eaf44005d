//! Infix printer producing text that [`Expr::parse`](super::Expr::parse)
//! reads back to the same normalized tree.

use std::fmt::{self, Write};

use num_rational::BigRational;
use num_traits::{One, Signed};

use super::Expr;

const SUM: u8 = 0;
const PROD: u8 = 1;
const UNARY: u8 = 2;
const POW: u8 = 3;
const ATOM: u8 = 4;

fn const_prec(c: &BigRational) -> u8 {
    if !c.is_integer() {
        PROD
    } else if c.is_negative() {
        UNARY
    } else {
        ATOM
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) => const_prec(c),
        Expr::Sym(_) | Expr::Exp(_) => ATOM,
        Expr::Sum(v) => match v.len() {
            0 => ATOM,
            1 => prec(&v[0]),
            _ => SUM,
        },
        Expr::Product(v) => match v.len() {
            0 => ATOM,
            1 => prec(&v[0]),
            _ => PROD,
        },
        Expr::Quotient(..) => PROD,
        Expr::Pow(..) => POW,
    }
}

/// If `e` prints with a leading minus sign, returns its negation.
fn negated_term(e: &Expr) -> Option<Expr> {
    match e {
        Expr::Const(c) if c.is_negative() => Some(Expr::Const(-c)),
        Expr::Product(v) if !v.is_empty() => match &v[0] {
            Expr::Const(c) if c.is_negative() => {
                let c = -c;
                let mut rest: Vec<Expr> = v[1..].to_vec();
                if !c.is_one() || rest.is_empty() {
                    rest.insert(0, Expr::Const(c));
                }
                Some(if rest.len() == 1 {
                    rest.pop().expect("one factor")
                } else {
                    Expr::Product(rest)
                })
            }
            _ => None,
        },
        Expr::Quotient(a, b) => negated_term(a).map(|na| Expr::Quotient(Box::new(na), b.clone())),
        _ => None,
    }
}

fn write_const<W: Write>(w: &mut W, c: &BigRational) -> fmt::Result {
    if c.is_integer() {
        write!(w, "{}", c.numer())
    } else {
        write!(w, "{}/{}", c.numer(), c.denom())
    }
}

fn write_at<W: Write>(w: &mut W, e: &Expr, min: u8) -> fmt::Result {
    if prec(e) < min {
        w.write_char('(')?;
        write_inner(w, e)?;
        w.write_char(')')
    } else {
        write_inner(w, e)
    }
}

fn write_inner<W: Write>(w: &mut W, e: &Expr) -> fmt::Result {
    match e {
        Expr::Const(c) => write_const(w, c),
        Expr::Sym(s) => write!(w, "{s}"),
        Expr::Sum(v) => {
            if v.is_empty() {
                return w.write_char('0');
            }
            write_at(w, &v[0], SUM)?;
            for term in &v[1..] {
                match negated_term(term) {
                    Some(neg) => {
                        w.write_str(" - ")?;
                        write_at(w, &neg, PROD)?;
                    }
                    None => {
                        w.write_str(" + ")?;
                        write_at(w, term, PROD)?;
                    }
                }
            }
            Ok(())
        }
        Expr::Product(v) => {
            if v.is_empty() {
                return w.write_char('1');
            }
            let mut rest = &v[..];
            if v.len() > 1 {
                if let Expr::Const(c) = &v[0] {
                    if c.is_negative() && (-c).is_one() {
                        w.write_char('-')?;
                        write_at(w, &v[1], POW)?;
                        rest = &v[2..];
                        for f in rest {
                            w.write_char('*')?;
                            write_at(w, f, POW)?;
                        }
                        return Ok(());
                    }
                }
            }
            write_at(w, &rest[0], PROD)?;
            rest = &rest[1..];
            for f in rest {
                w.write_char('*')?;
                write_at(w, f, POW)?;
            }
            Ok(())
        }
        Expr::Quotient(a, b) => {
            write_at(w, a, PROD)?;
            w.write_char('/')?;
            write_at(w, b, POW)
        }
        Expr::Pow(b, k) => {
            write_at(w, b, ATOM)?;
            if *k < 0 {
                write!(w, "^({k})")
            } else {
                write!(w, "^{k}")
            }
        }
        Expr::Exp(a) => {
            w.write_str("exp(")?;
            write_at(w, a, SUM)?;
            w.write_char(')')
        }
    }
}

pub(super) fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    write_at(f, e, SUM)
}
