//! TOML documents describing problems, families, generators and expected
//! results.
//!
//! A document holds any of the tables `[problem]`, `[family]`, `[generator]`
//! and `[expect]`. The fields of a single problem, family or generator may
//! also sit at the top level, so a bare problem file needs no table header.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use num_rational::BigRational;
use serde::Deserialize;
use toml::Spanned;

use noether_core::{Expr, Family, Infinitesimal, Problem, Weights};

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    name: Option<String>,
    n: Option<usize>,
    m: Option<usize>,
    lagrangian: Option<Spanned<String>>,
    dynamics: Option<Vec<Spanned<String>>>,
    horizon: Option<Spanned<[f64; 2]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    r: Option<usize>,
    #[serde(rename = "T")]
    time: Option<Spanned<String>>,
    #[serde(rename = "X")]
    state: Option<Vec<Spanned<String>>>,
    #[serde(rename = "U")]
    control: Option<Vec<Spanned<String>>>,
    #[serde(rename = "F")]
    gauge: Option<Spanned<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    tau: Option<Spanned<String>>,
    xi: Option<Vec<Spanned<String>>>,
    upsilon: Option<Vec<Spanned<String>>>,
    f: Option<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    alpha: Spanned<String>,
    beta: Vec<Spanned<String>>,
    gamma: Vec<Spanned<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExpect {
    integral: Option<Spanned<String>>,
    weights: Option<RawWeights>,
    #[serde(default)]
    numeric: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    problem: Option<RawProblem>,
    family: Option<RawFamily>,
    generator: Option<RawGenerator>,
    expect: Option<RawExpect>,

    name: Option<String>,
    n: Option<usize>,
    m: Option<usize>,
    lagrangian: Option<Spanned<String>>,
    dynamics: Option<Vec<Spanned<String>>>,
    horizon: Option<Spanned<[f64; 2]>>,

    r: Option<usize>,
    #[serde(rename = "T")]
    time: Option<Spanned<String>>,
    #[serde(rename = "X")]
    state: Option<Vec<Spanned<String>>>,
    #[serde(rename = "U")]
    control: Option<Vec<Spanned<String>>>,
    #[serde(rename = "F")]
    gauge: Option<Spanned<String>>,

    tau: Option<Spanned<String>>,
    xi: Option<Vec<Spanned<String>>>,
    upsilon: Option<Vec<Spanned<String>>>,
    f: Option<Spanned<String>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expect {
    pub integral: Option<Expr>,
    pub weights: Option<Weights>,
    pub numeric: bool,
}

/// A parsed document. Every part is optional; commands ask for the parts
/// they need through the `require_*` accessors.
#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub origin: String,
    pub problem: Option<Problem>,
    pub family: Option<Family>,
    pub generator: Option<Infinitesimal>,
    pub expect: Option<Expect>,
}

struct Ctx<'a> {
    origin: &'a str,
    text: &'a str,
}

impl Ctx<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        self.text[..span.start.min(self.text.len())].matches('\n').count() + 1
    }

    fn err(&self, span: Option<Range<usize>>, message: impl Into<String>) -> CliError {
        CliError::Parse {
            origin: self.origin.to_string(),
            line: span.map(|s| self.line(s)),
            message: message.into(),
        }
    }

    fn expr(&self, field: &str, s: &Spanned<String>, macros: &BTreeMap<String, Expr>) -> Result<Expr, CliError> {
        Expr::parse_with(s.get_ref(), macros)
            .map_err(|e| self.err(Some(s.span()), format!("{field}: {e}")))
    }

    fn exprs(&self, field: &str, v: &[Spanned<String>]) -> Result<Vec<Expr>, CliError> {
        v.iter()
            .enumerate()
            .map(|(i, s)| self.expr(&format!("{field}[{}]", i + 1), s, &BTreeMap::new()))
            .collect()
    }

    fn missing(&self, table: &str, field: &str) -> CliError {
        self.err(None, format!("{table}: missing field `{field}`"))
    }

    fn core(&self, span: Option<Range<usize>>, e: noether_core::Error) -> CliError {
        self.err(span, e.to_string())
    }
}

impl Document {
    pub fn parse(origin: &str, text: &str) -> Result<Document, CliError> {
        let ctx = Ctx { origin, text };
        let raw: RawDocument = toml::from_str(text).map_err(|e| ctx.err(e.span(), e.message()))?;

        let top_problem = RawProblem {
            name: raw.name,
            n: raw.n,
            m: raw.m,
            lagrangian: raw.lagrangian,
            dynamics: raw.dynamics,
            horizon: raw.horizon,
        };
        let problem = match (raw.problem, top_problem) {
            (Some(p), _) => Some(p),
            (None, p) if p.lagrangian.is_some() || p.dynamics.is_some() || p.n.is_some() => Some(p),
            _ => None,
        };
        let problem = problem
            .map(|p| Self::problem(&ctx, p))
            .transpose()?;

        let top_family = RawFamily {
            r: raw.r,
            time: raw.time,
            state: raw.state,
            control: raw.control,
            gauge: raw.gauge,
        };
        let family = match (raw.family, top_family) {
            (Some(f), _) => Some(f),
            (None, f) if f.time.is_some() || f.state.is_some() || f.r.is_some() => Some(f),
            _ => None,
        };
        let family = family.map(|f| Self::family(&ctx, f)).transpose()?;

        let top_generator = RawGenerator {
            tau: raw.tau,
            xi: raw.xi,
            upsilon: raw.upsilon,
            f: raw.f,
        };
        let generator = match (raw.generator, top_generator) {
            (Some(g), _) => Some(g),
            (None, g) if g.tau.is_some() || g.xi.is_some() => Some(g),
            _ => None,
        };
        let generator = generator.map(|g| Self::generator(&ctx, g)).transpose()?;

        let expect = raw
            .expect
            .map(|e| Self::expect(&ctx, e, problem.as_ref()))
            .transpose()?;

        Ok(Document {
            origin: origin.to_string(),
            problem,
            family,
            generator,
            expect,
        })
    }

    pub fn load(path: &Path) -> Result<Document, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut doc = Document::parse(&path.display().to_string(), &text)?;
        if let Some(p) = &doc.problem {
            if p.name().is_empty() {
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
                doc.problem = Some(rename(p, &stem.unwrap_or_default()));
            }
        }
        Ok(doc)
    }

    fn problem(ctx: &Ctx, p: RawProblem) -> Result<Problem, CliError> {
        let n = p.n.ok_or_else(|| ctx.missing("problem", "n"))?;
        let m = p.m.ok_or_else(|| ctx.missing("problem", "m"))?;
        let l = p.lagrangian.ok_or_else(|| ctx.missing("problem", "lagrangian"))?;
        let dynamics = p.dynamics.ok_or_else(|| ctx.missing("problem", "dynamics"))?;
        let horizon = p.horizon.map_or((0.0, 1.0), |h| {
            let [a, b] = *h.get_ref();
            (a, b)
        });
        let span = l.span();
        let lagrangian = ctx.expr("lagrangian", &l, &BTreeMap::new())?;
        let phi = ctx.exprs("dynamics", &dynamics)?;
        Problem::new(p.name.unwrap_or_default(), n, m, lagrangian, phi, horizon)
            .map_err(|e| ctx.core(Some(span), e))
    }

    fn family(ctx: &Ctx, f: RawFamily) -> Result<Family, CliError> {
        let time = f.time.ok_or_else(|| ctx.missing("family", "T"))?;
        let state = f.state.ok_or_else(|| ctx.missing("family", "X"))?;
        let control = f.control.ok_or_else(|| ctx.missing("family", "U"))?;
        let span = time.span();
        let gauge = match &f.gauge {
            Some(g) => ctx.expr("F", g, &BTreeMap::new())?,
            None => Expr::zero(),
        };
        let fam = Family::new(
            f.r.unwrap_or(1),
            ctx.expr("T", &time, &BTreeMap::new())?,
            ctx.exprs("X", &state)?,
            ctx.exprs("U", &control)?,
            gauge,
        )
        .map_err(|e| ctx.core(Some(span.clone()), e))?;
        fam.check_origin().map_err(|e| ctx.core(Some(span), e))?;
        Ok(fam)
    }

    fn generator(ctx: &Ctx, g: RawGenerator) -> Result<Infinitesimal, CliError> {
        let tau = match &g.tau {
            Some(t) => ctx.expr("tau", t, &BTreeMap::new())?,
            None => Expr::zero(),
        };
        let xi = g.xi.ok_or_else(|| ctx.missing("generator", "xi"))?;
        let upsilon = g.upsilon.ok_or_else(|| ctx.missing("generator", "upsilon"))?;
        let f = match &g.f {
            Some(f) => ctx.expr("f", f, &BTreeMap::new())?,
            None => Expr::zero(),
        };
        let span = xi.first().map(|s| s.span());
        Infinitesimal::new(tau, ctx.exprs("xi", &xi)?, ctx.exprs("upsilon", &upsilon)?, f)
            .map_err(|e| ctx.core(span, e))
    }

    fn expect(ctx: &Ctx, e: RawExpect, problem: Option<&Problem>) -> Result<Expect, CliError> {
        let mut macros = BTreeMap::new();
        if let Some(p) = problem {
            macros.insert("H".to_string(), p.hamiltonian());
        }
        let integral = e
            .integral
            .as_ref()
            .map(|s| ctx.expr("integral", s, &macros))
            .transpose()?;
        let weights = e.weights.map(|w| Self::weights(ctx, w)).transpose()?;
        Ok(Expect {
            integral,
            weights,
            numeric: e.numeric,
        })
    }

    fn weights(ctx: &Ctx, w: RawWeights) -> Result<Weights, CliError> {
        let q = |s: &Spanned<String>| {
            BigRational::from_str(s.get_ref().trim())
                .map_err(|_| ctx.err(Some(s.span()), format!("`{}` is not a rational number", s.get_ref())))
        };
        let span = w.alpha.span();
        Weights::new(
            q(&w.alpha)?,
            w.beta.iter().map(q).collect::<Result<_, _>>()?,
            w.gamma.iter().map(q).collect::<Result<_, _>>()?,
        )
        .map_err(|e| ctx.core(Some(span), e))
    }

    pub fn require_problem(&self) -> Result<&Problem, CliError> {
        self.problem
            .as_ref()
            .ok_or_else(|| CliError::Usage(format!("{}: no problem defined", self.origin)))
    }

    /// Expected integral, if any, as stated in the `[expect]` table.
    pub fn expected_integral(&self) -> Option<&Expr> {
        self.expect.as_ref()?.integral.as_ref()
    }
}

fn rename(p: &Problem, name: &str) -> Problem {
    Problem::new(
        name,
        p.n(),
        p.m(),
        p.lagrangian().clone(),
        p.dynamics().to_vec(),
        p.horizon(),
    )
    .expect("renaming keeps a valid problem valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    const PROBLEM: &str = r#"
name = "si"
n = 1
m = 1
lagrangian = "u1^2"
dynamics = ["u1"]
"#;

    #[test]
    fn top_level_problem() {
        let doc = Document::parse("si.toml", PROBLEM).unwrap();
        let p = doc.problem.unwrap();
        assert_eq!(p.name(), "si");
        assert_eq!(p.horizon(), (0.0, 1.0));
        assert!(doc.family.is_none() && doc.generator.is_none());
    }

    #[test]
    fn top_level_generator_and_family() {
        let g = Document::parse("g.toml", "tau = \"1\"\nxi = [\"0\"]\nupsilon = [\"0\"]\n").unwrap();
        assert_eq!(g.generator.unwrap().tau, Expr::one());
        let f = Document::parse("f.toml", "T = \"t + s\"\nX = [\"x1\"]\nU = [\"u1\"]\n").unwrap();
        assert_eq!(f.family.unwrap().r(), 1);
    }

    #[test]
    fn expression_errors_carry_the_line() {
        let text = "n = 1\nm = 1\nlagrangian = \"u1^2\"\ndynamics = [\n  \"u1 +\",\n]\n";
        match Document::parse("bad.toml", text) {
            Err(CliError::Parse { line, message, .. }) => {
                assert_eq!(line, Some(5));
                assert!(message.starts_with("dynamics[1]"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn toml_errors_carry_the_line() {
        match Document::parse("bad.toml", "n = 1\nm = = 2\n") {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, Some(2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(Document::parse("x.toml", "lagrangain = \"u1\"\n").is_err());
    }

    #[test]
    fn scope_errors_surface_as_parse_errors() {
        let text = "n = 1\nm = 1\nlagrangian = \"u2^2\"\ndynamics = [\"u1\"]\n";
        assert!(matches!(
            Document::parse("x.toml", text),
            Err(CliError::Parse { line: Some(3), .. })
        ));
    }

    #[test]
    fn expected_integral_may_use_h() {
        let text = format!("[problem]\n{PROBLEM}\n[expect]\nintegral = \"psi1*x1 - 2*H*t\"\n");
        let doc = Document::parse("e.toml", &text).unwrap();
        let h = doc.problem.as_ref().unwrap().hamiltonian();
        let expected = (Expr::psi(1) * Expr::x(1) - Expr::int(2) * h * Expr::t()).normalize();
        assert_eq!(doc.expected_integral(), Some(&expected));
    }

    #[test]
    fn weights_parse_as_rationals() {
        let text = format!(
            "[problem]\n{PROBLEM}\n[expect]\nweights = {{ alpha = \"2\", beta = [\"1\"], gamma = [\"-1/1\"] }}\n"
        );
        let w = Document::parse("w.toml", &text).unwrap().expect.unwrap().weights.unwrap();
        assert_eq!(w.gamma[0], BigRational::from_integer((-1).into()));
        let bad = text.replace("\"2\"", "\"two\"");
        assert!(Document::parse("w.toml", &bad).is_err());
    }
}
