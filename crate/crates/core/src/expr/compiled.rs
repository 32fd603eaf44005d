use super::poly::{rational_to_f64, Poly, RatFun};
use super::{Expr, ExprError, Symbol};

#[derive(Clone, Debug)]
struct Term {
    coef: f64,
    powers: Vec<(Symbol, i32)>,
    exp: Option<Box<CompiledExpr>>,
}

/// Normal form with coefficients converted to `f64` once, for repeated
/// evaluation inside integrators.
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    num: Vec<Term>,
    den: Option<Vec<Term>>,
    undefined: bool,
}

fn compile_poly(p: &Poly) -> Vec<Term> {
    p.terms
        .iter()
        .map(|(m, c)| Term {
            coef: rational_to_f64(c),
            powers: m.powers.clone(),
            exp: m.exp.as_ref().map(|e| Box::new(CompiledExpr::from_ratfun(e))),
        })
        .collect()
}

fn eval_terms(terms: &[Term], lookup: &dyn Fn(Symbol) -> Option<f64>) -> Result<f64, ExprError> {
    let mut total = 0.0;
    for term in terms {
        let mut v = term.coef;
        for &(s, p) in &term.powers {
            let x = lookup(s).ok_or(ExprError::MissingSymbol(s))?;
            if p < 0 && x == 0.0 {
                return Err(ExprError::DivisionByZero);
            }
            v *= x.powi(p);
        }
        if let Some(e) = &term.exp {
            v *= e.eval(lookup)?.exp();
        }
        total += v;
    }
    Ok(total)
}

impl CompiledExpr {
    pub fn new(e: &Expr) -> Self {
        CompiledExpr::from_ratfun(&e.to_ratfun())
    }

    fn from_ratfun(r: &RatFun) -> Self {
        CompiledExpr {
            num: compile_poly(&r.num),
            den: (!r.is_poly() && !r.is_undefined()).then(|| compile_poly(&r.den)),
            undefined: r.is_undefined(),
        }
    }

    pub fn eval(&self, lookup: &dyn Fn(Symbol) -> Option<f64>) -> Result<f64, ExprError> {
        if self.undefined {
            return Err(ExprError::DivisionByZero);
        }
        let n = eval_terms(&self.num, lookup)?;
        match &self.den {
            None => Ok(n),
            Some(den) => {
                let d = eval_terms(den, lookup)?;
                if d == 0.0 {
                    Err(ExprError::DivisionByZero)
                } else {
                    Ok(n / d)
                }
            }
        }
    }
}
