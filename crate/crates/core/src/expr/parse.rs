//! Recursive-descent parser for the infix expression language.
//!
//! Precedence, loosest first: `+ -`, `* /`, unary `-`, `^`. The exponent of
//! `^` must evaluate to an integer constant. Symbols are `t`, `x<i>`, `u<j>`,
//! `psi0`, `psi<i>`, `s<k>` and the alias `s` for `s1`; `exp(...)` is the only
//! function. Literals are integers or decimals; rationals are written `p/q`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::{Expr, ExprError, Symbol};

/// Exponents beyond this magnitude are rejected to keep expansion bounded.
const MAX_EXPONENT: i64 = 1000;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let col = i + 1;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
            }
            '+' => {
                out.push((col, Tok::Plus));
                i += 1;
            }
            '-' => {
                out.push((col, Tok::Minus));
                i += 1;
            }
            '*' => {
                out.push((col, Tok::Star));
                i += 1;
            }
            '/' => {
                out.push((col, Tok::Slash));
                i += 1;
            }
            '^' => {
                out.push((col, Tok::Caret));
                i += 1;
            }
            '(' => {
                out.push((col, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((col, Tok::RParen));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                let lit = &text[start..i];
                out.push((col, Tok::Num(decimal_literal(lit, col)?)));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((col, Tok::Ident(text[start..i].to_string())));
            }
            other => {
                return Err(ExprError::Syntax {
                    pos: col,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

fn decimal_literal(lit: &str, pos: usize) -> Result<BigRational, ExprError> {
    let bad = || ExprError::Syntax {
        pos,
        msg: format!("malformed number `{lit}`"),
    };
    let (int_part, frac_part) = match lit.split_once('.') {
        Some((a, b)) => (a, b),
        None => (lit, ""),
    };
    if (int_part.is_empty() && frac_part.is_empty()) || frac_part.contains('.') {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let d = BigInt::from(10u32).pow(frac_part.len() as u32);
    Ok(BigRational::new(n, d))
}

fn resolve_symbol(name: &str, pos: usize) -> Result<Symbol, ExprError> {
    let unknown = || ExprError::UnknownSymbol {
        pos,
        name: name.to_string(),
    };
    match name {
        "t" => return Ok(Symbol::Time),
        "s" => return Ok(Symbol::Param(1)),
        "psi0" => return Ok(Symbol::Abnormal),
        _ => {}
    }
    let (prefix, digits) = name
        .find(|c: char| c.is_ascii_digit())
        .map(|k| name.split_at(k))
        .ok_or_else(unknown)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0')
    {
        return Err(unknown());
    }
    let idx: u16 = digits.parse().map_err(|_| unknown())?;
    match prefix {
        "x" => Ok(Symbol::State(idx)),
        "u" => Ok(Symbol::Control(idx)),
        "psi" => Ok(Symbol::Costate(idx)),
        "s" => Ok(Symbol::Param(idx)),
        _ => Err(unknown()),
    }
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end_col: usize,
    macros: &'a BTreeMap<String, Expr>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(c, _)| *c)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ExprError> {
        let col = self.col();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            _ => Err(ExprError::Syntax {
                pos: col,
                msg: format!("expected {what}"),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = acc + self.term()?;
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = acc - self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    acc = acc * self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.bump();
                    acc = acc / self.unary()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                Ok(-self.unary()?)
            }
            Some(Tok::Plus) => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.bump();
        let col = self.col();
        let exponent = self.exponent()?;
        let k = exponent
            .as_constant()
            .filter(|c| c.is_integer())
            .ok_or(ExprError::NonIntegerExponent { pos: col })?;
        let k = k
            .to_integer()
            .to_i64()
            .filter(|k| k.abs() <= MAX_EXPONENT)
            .ok_or_else(|| ExprError::Syntax {
                pos: col,
                msg: format!("exponent magnitude exceeds {MAX_EXPONENT}"),
            })?;
        if self.peek() == Some(&Tok::Caret) {
            return Err(ExprError::Syntax {
                pos: self.col(),
                msg: "chained `^` must be parenthesized".into(),
            });
        }
        Ok(base.powi(k))
    }

    fn exponent(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                Ok(-self.exponent()?)
            }
            Some(Tok::Plus) => {
                self.bump();
                self.exponent()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let col = self.col();
        match self.bump() {
            Some(Tok::Num(c)) => Ok(Expr::Const(c)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    if name != "exp" {
                        return Err(ExprError::UnknownSymbol { pos: col, name });
                    }
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)` closing exp(")?;
                    return Ok(arg.exp());
                }
                if name == "exp" {
                    return Err(ExprError::Syntax {
                        pos: col,
                        msg: "`exp` needs a parenthesized argument".into(),
                    });
                }
                if let Some(e) = self.macros.get(&name) {
                    return Ok(e.clone());
                }
                Ok(Expr::Sym(resolve_symbol(&name, col)?))
            }
            Some(_) => Err(ExprError::Syntax {
                pos: col,
                msg: "expected a number, symbol or `(`".into(),
            }),
            None => Err(ExprError::Syntax {
                pos: col,
                msg: "unexpected end of input".into(),
            }),
        }
    }
}

pub(super) fn parse(text: &str, macros: &BTreeMap<String, Expr>) -> Result<Expr, ExprError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end_col: text.len() + 1,
        macros,
    };
    if p.peek().is_none() {
        return Err(ExprError::Syntax {
            pos: 1,
            msg: "empty expression".into(),
        });
    }
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return Err(ExprError::Syntax {
            pos: p.col(),
            msg: "unexpected trailing input".into(),
        });
    }
    Ok(e)
}
