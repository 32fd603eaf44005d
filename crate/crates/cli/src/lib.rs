//! Command-line front end: problem files, the bundled corpus and reports.

pub mod commands;
pub mod corpus;
pub mod error;
pub mod files;
pub mod report;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use noether_core::{Ansatz, Expr, FirstIntegral};

use crate::commands::{NumericOptions, Transform};
use crate::error::CliError;
use crate::files::Document;
use crate::report::Report;

#[derive(Debug, Parser)]
#[command(name = "noether", version, about = "Symmetries and first integrals of optimal control problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Largest accepted relative drift in numeric checks.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    /// RK4 step size.
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub step: f64,
    /// Number of random extremals per ensemble.
    #[arg(long, global = true, default_value_t = 20)]
    pub trials: usize,
    /// Seed for the ensemble initial conditions.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Output path: the worst trajectory as CSV for `simulate`, the JSON
    /// report otherwise.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print the JSON report instead of text.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check quasi-invariance under a family, or the determining equations for a generator.
    Check {
        /// Problem file or bundled corpus entry name.
        problem: String,
        /// Family or generator file; defaults to the one in the problem document.
        transform: Option<String>,
    },
    /// Build the first integral of a generator and certify it symbolically.
    Derive {
        problem: String,
        transform: Option<String>,
    },
    /// Detect scaling weights of a polynomial problem.
    Homog { problem: String },
    /// Search polynomial generators of bounded degree.
    Search {
        problem: String,
        #[arg(long, default_value_t = 1)]
        degree: u32,
        /// Force tau = 0.
        #[arg(long)]
        no_time_change: bool,
        /// Force f = 0.
        #[arg(long)]
        no_gauge: bool,
    },
    /// Integrate random extremals and measure the drift of an integral.
    Simulate {
        problem: String,
        /// Family or generator whose integral is tested.
        transform: Option<String>,
        /// Integral to test, in expression syntax (`H` is the Hamiltonian).
        #[arg(long)]
        integral: Option<String>,
    },
    /// Run every corpus entry end to end.
    Corpus {
        /// Directory of entry files; defaults to the bundled corpus.
        #[arg(long)]
        dir: Option<PathBuf>,
        /// List entry names and exit.
        #[arg(long)]
        list: bool,
    },
}

/// Reads a document from a path, falling back to a bundled corpus entry of
/// that name.
pub fn resolve(arg: &str) -> Result<Document, CliError> {
    let path = Path::new(arg);
    if path.exists() {
        return Document::load(path);
    }
    corpus::builtin_document(arg).ok_or_else(|| CliError::Io {
        path: arg.to_string(),
        message: "no such file or bundled corpus entry".into(),
    })
}

fn numeric(c: &Common) -> Result<NumericOptions, CliError> {
    if !(c.step > 0.0 && c.step.is_finite()) {
        return Err(CliError::Usage(format!("--step must be positive, got {}", c.step)));
    }
    if c.tol.is_nan() || c.tol < 0.0 {
        return Err(CliError::Usage(format!("--tol must be non-negative, got {}", c.tol)));
    }
    Ok(NumericOptions {
        tol: c.tol,
        step: c.step,
        trials: c.trials,
        seed: c.seed,
    })
}

fn simulate_integral(
    doc: &Document,
    transform: Option<&Document>,
    integral: Option<&str>,
) -> Result<FirstIntegral, CliError> {
    let p = doc.require_problem()?;
    if let Some(text) = integral {
        let mut macros = std::collections::BTreeMap::new();
        macros.insert("H".to_string(), p.hamiltonian());
        let e = Expr::parse_with(text, &macros).map_err(|e| CliError::Parse {
            origin: "--integral".into(),
            line: None,
            message: e.to_string(),
        })?;
        return Ok(FirstIntegral::user(p, e)?);
    }
    let from_transform = |t: Transform| -> Result<FirstIntegral, CliError> {
        Ok(noether_core::first_integral(p, &t.generator()?, 1)?)
    };
    if let Some(t) = transform {
        return from_transform(Transform::of(doc, Some(t))?);
    }
    if let Some(e) = doc.expected_integral() {
        return Ok(FirstIntegral::user(p, e.clone())?);
    }
    if let Ok(t) = Transform::of(doc, None) {
        return from_transform(t);
    }
    if p.is_autonomous() {
        return Ok(FirstIntegral::negative_hamiltonian(p));
    }
    Err(CliError::Usage("no integral given: use --integral or a generator file".into()))
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    let opts = numeric(&cli.common)?;
    let csv = cli.common.out.as_deref();
    match &cli.command {
        Command::Check { problem, transform } => {
            let doc = resolve(problem)?;
            let other = transform.as_deref().map(resolve).transpose()?;
            commands::check(doc.require_problem()?, &Transform::of(&doc, other.as_ref())?)
        }
        Command::Derive { problem, transform } => {
            let doc = resolve(problem)?;
            let other = transform.as_deref().map(resolve).transpose()?;
            let t = Transform::of(&doc, other.as_ref())?;
            // The stored expectation belongs to the document's own transform.
            let expected = other.is_none().then(|| doc.expected_integral()).flatten();
            commands::derive(doc.require_problem()?, &t, expected)
        }
        Command::Homog { problem } => {
            let doc = resolve(problem)?;
            let expect = doc.expect.as_ref();
            commands::homog(
                doc.require_problem()?,
                expect.and_then(|e| e.weights.as_ref()),
                expect.and_then(|e| e.integral.as_ref()),
            )
        }
        Command::Search {
            problem,
            degree,
            no_time_change,
            no_gauge,
        } => {
            let doc = resolve(problem)?;
            let a = Ansatz {
                degree: *degree,
                include_time_change: !no_time_change,
                include_gauge: !no_gauge,
            };
            commands::search(doc.require_problem()?, &a)
        }
        Command::Simulate {
            problem,
            transform,
            integral,
        } => {
            let doc = resolve(problem)?;
            let other = transform.as_deref().map(resolve).transpose()?;
            let p = doc.require_problem()?;
            // Reported as not applicable before any integral is required.
            if matches!(p.solve_control(), Err(noether_core::Error::UnsolvableControl(_))) {
                return commands::simulate(p, &FirstIntegral::negative_hamiltonian(p), &opts, None);
            }
            let c = simulate_integral(&doc, other.as_ref(), integral.as_deref())?;
            commands::simulate(p, &c, &opts, csv)
        }
        Command::Corpus { dir, list } => {
            let entries = match dir {
                Some(d) => corpus::load_dir(d)?,
                None => corpus::builtin(),
            };
            if *list {
                let mut rep = Report::new("corpus --list");
                for e in &entries {
                    rep.line(e.name.clone());
                }
                return Ok(rep);
            }
            Ok(commands::corpus(&entries, &opts))
        }
    }
}

/// Full command-line behavior; returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(rep) => {
            let json = rep.to_json();
            let simulate = matches!(cli.command, Command::Simulate { .. });
            if let (Some(path), false) = (&cli.common.out, simulate) {
                if let Err(e) = std::fs::write(path, format!("{json}\n")) {
                    let _ = writeln!(stderr, "error: {}: {e}", path.display());
                    return 2;
                }
            }
            let body = if cli.common.json { format!("{json}\n") } else { rep.to_text() };
            let _ = write!(stdout, "{body}");
            rep.exit_status
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
