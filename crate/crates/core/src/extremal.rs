//! Pontryagin extremals by fixed-step RK4 and drift of first integrals
//! along them.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{CompiledExpr, Expr, Symbol};
use crate::model::{ExtremalPoint, Problem};
use crate::noether::FirstIntegral;

/// Any state or costate component beyond this magnitude aborts a trial.
pub const BLOW_UP: f64 = 1e9;

/// A sampled extremal on the horizon of its problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub problem: Problem,
    pub grid: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub costates: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    pub psi0: f64,
    /// Largest `|∂H/∂u|` over all samples.
    pub max_stationarity_residual: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn point(&self, i: usize) -> ExtremalPoint {
        ExtremalPoint {
            t: self.grid[i],
            x: self.states[i].clone(),
            u: self.controls[i].clone(),
            psi0: self.psi0,
            psi: self.costates[i].clone(),
        }
    }

    /// CSV with header `t,x1..,psi1..,u1..`, one row per sample, followed by
    /// `notes` as `#` comment lines.
    pub fn write_csv<W: Write>(&self, w: &mut W, notes: &[String]) -> io::Result<()> {
        let p = &self.problem;
        let mut header = vec!["t".to_string()];
        header.extend((1..=p.n()).map(|i| format!("x{i}")));
        header.extend((1..=p.n()).map(|i| format!("psi{i}")));
        header.extend((1..=p.m()).map(|j| format!("u{j}")));
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.len() {
            let row: Vec<String> = std::iter::once(self.grid[i])
                .chain(self.states[i].iter().copied())
                .chain(self.costates[i].iter().copied())
                .chain(self.controls[i].iter().copied())
                .map(|v| v.to_string())
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        for note in notes {
            writeln!(w, "# {note}")?;
        }
        Ok(())
    }
}

/// Compiled right-hand side of the state-costate system with `u = u*`.
struct Field {
    n: usize,
    psi0: f64,
    control: Vec<CompiledExpr>,
    dynamics: Vec<CompiledExpr>,
    adjoint: Vec<CompiledExpr>,
    stationarity: Vec<CompiledExpr>,
}

fn lookup<'a>(
    t: f64,
    x: &'a [f64],
    u: &'a [f64],
    psi0: f64,
    psi: &'a [f64],
) -> impl Fn(Symbol) -> Option<f64> + 'a {
    let at = |v: &[f64], i: u16| v.get(usize::from(i).checked_sub(1)?).copied();
    move |s| match s {
        Symbol::Time => Some(t),
        Symbol::State(i) => at(x, i),
        Symbol::Control(j) => at(u, j),
        Symbol::Abnormal => Some(psi0),
        Symbol::Costate(i) => at(psi, i),
        Symbol::Param(_) | Symbol::ControlRate(_) => None,
    }
}

impl Field {
    fn new(p: &Problem, psi0: f64) -> Result<Field> {
        let control = p.solve_control()?;
        Ok(Field {
            n: p.n(),
            psi0,
            control: control.iter().map(CompiledExpr::new).collect(),
            dynamics: p.dynamics().iter().map(CompiledExpr::new).collect(),
            adjoint: p.adjoint_rhs().iter().map(CompiledExpr::new).collect(),
            stationarity: p.stationarity().iter().map(CompiledExpr::new).collect(),
        })
    }

    fn control(&self, t: f64, x: &[f64], psi: &[f64]) -> Result<Vec<f64>> {
        let env = lookup(t, x, &[], self.psi0, psi);
        Ok(self
            .control
            .iter()
            .map(|c| c.eval(&env))
            .collect::<std::result::Result<_, _>>()?)
    }

    /// `y = (x, ψ)`; returns `(y', u)`.
    fn rhs(&self, t: f64, y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (x, psi) = y.split_at(self.n);
        let u = self.control(t, x, psi)?;
        let mut dy = Vec::with_capacity(2 * self.n);
        {
            let env = lookup(t, x, &u, self.psi0, psi);
            for e in self.dynamics.iter().chain(&self.adjoint) {
                dy.push(e.eval(&env)?);
            }
        }
        Ok((dy, u))
    }

    fn stationarity_residual(&self, t: f64, x: &[f64], u: &[f64], psi: &[f64]) -> Result<f64> {
        let env = lookup(t, x, u, self.psi0, psi);
        let mut worst: f64 = 0.0;
        for g in &self.stationarity {
            worst = worst.max(g.eval(&env)?.abs());
        }
        Ok(worst)
    }
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

fn escaped(y: &[f64]) -> bool {
    y.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP)
}

/// Number of RK4 steps covering `[a, b]` with steps no longer than `step`.
pub fn step_count(a: f64, b: f64, step: f64) -> usize {
    // The small slack keeps (b − a)/step = 1000.0000000001 from adding a step.
    (((b - a) / step) - 1e-9).ceil().max(1.0) as usize
}

/// Integrates `x' = φ(t,x,u*)`, `ψ' = −∂H/∂x(t,x,u*,ψ0,ψ)` with classical
/// RK4 over the problem horizon, with `u* = u*(t, x, ψ0, ψ)` from
/// [`Problem::solve_control`].
pub fn integrate_extremal(
    p: &Problem,
    x0: &[f64],
    psi_a: &[f64],
    psi0: f64,
    step: f64,
) -> Result<Trajectory> {
    if x0.len() != p.n() || psi_a.len() != p.n() {
        return Err(Error::DimensionMismatch {
            what: "initial state/costate".into(),
            expected: p.n(),
            found: if x0.len() != p.n() { x0.len() } else { psi_a.len() },
        });
    }
    if !(psi0 < 0.0 && psi0.is_finite()) {
        return Err(Error::InvalidArgument(format!("psi0 = {psi0} must be negative")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("step = {step} must be positive")));
    }
    let field = Field::new(p, psi0)?;
    let (a, b) = p.horizon();
    let steps = step_count(a, b, step);
    let h = (b - a) / steps as f64;
    let n = p.n();

    let mut y: Vec<f64> = x0.iter().chain(psi_a).copied().collect();
    if escaped(&y) {
        return Err(Error::BlowUp { time: a });
    }
    let mut traj = Trajectory {
        problem: p.clone(),
        grid: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        costates: Vec::with_capacity(steps + 1),
        controls: Vec::with_capacity(steps + 1),
        psi0,
        max_stationarity_residual: 0.0,
    };
    let record =|traj: &mut Trajectory, t: f64, y: &[f64]| -> Result<()> {
        let (x, psi) = y.split_at(n);
        let u = field.control(t, x, psi)?;
        let res = field.stationarity_residual(t, x, &u, psi)?;
        traj.max_stationarity_residual = traj.max_stationarity_residual.max(res);
        traj.grid.push(t);
        traj.states.push(x.to_vec());
        traj.costates.push(psi.to_vec());
        traj.controls.push(u);
        Ok(())
    };
    record(&mut traj, a, &y)?;
    for k in 0..steps {
        let t = a + k as f64 * h;
        let (k1, _) = field.rhs(t, &y)?;
        let (k2, _) = field.rhs(t + h / 2.0, &axpy(&y, h / 2.0, &k1))?;
        let (k3, _) = field.rhs(t + h / 2.0, &axpy(&y, h / 2.0, &k2))?;
        let (k4, _) = field.rhs(t + h, &axpy(&y, h, &k3))?;
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t_next = if k + 1 == steps { b } else { a + (k + 1) as f64 * h };
        if escaped(&y) {
            return Err(Error::BlowUp { time: t_next });
        }
        record(&mut traj, t_next, &y)?;
    }
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftReport {
    pub integral: Expr,
    /// `C` at the first sample.
    pub reference: f64,
    pub max_abs_drift: f64,
    /// `max_abs_drift / max(1, |reference|)`.
    pub relative_drift: f64,
}

/// Evaluates `c` along `traj` and measures its departure from `C(a)`.
pub fn drift(traj: &Trajectory, c: &FirstIntegral) -> Result<DriftReport> {
    if c.problem != traj.problem {
        return Err(Error::ProblemMismatch {
            integral: c.problem.name().to_string(),
            trajectory: traj.problem.name().to_string(),
        });
    }
    let compiled = CompiledExpr::new(&c.value);
    let value_at = |i: usize| -> Result<f64> {
        let env = lookup(
            traj.grid[i],
            &traj.states[i],
            &traj.controls[i],
            traj.psi0,
            &traj.costates[i],
        );
        Ok(compiled.eval(&env)?)
    };
    let reference = value_at(0)?;
    if !reference.is_finite() {
        return Err(Error::InvalidArgument("integral is not finite at t = a".into()));
    }
    let mut max_abs_drift: f64 = 0.0;
    for i in 1..traj.len() {
        max_abs_drift = max_abs_drift.max((value_at(i)? - reference).abs());
    }
    Ok(DriftReport {
        integral: c.value.clone(),
        reference,
        max_abs_drift,
        relative_drift: max_abs_drift / reference.abs().max(1.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnsembleConfig {
    pub trials: usize,
    pub seed: u64,
    pub step: f64,
    pub psi0: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            trials: 20,
            seed: 42,
            step: 1e-3,
            psi0: -0.5,
        }
    }
}

/// Initial data of one ensemble trial: `(x(a), ψ(a))`.
pub fn ensemble_initial_conditions(n: usize, cfg: &EnsembleConfig) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.trials)
        .map(|_| {
            let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let psi: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
            (x0, psi)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialDrift {
    pub trial: usize,
    pub max_abs_drift: f64,
    pub relative_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleReport {
    /// Report of the trial with the largest relative drift.
    pub worst: DriftReport,
    pub worst_trial: usize,
    pub trials: usize,
    pub completed: usize,
    /// Trials excluded because they left the `BLOW_UP` bound.
    pub blown_up: usize,
    pub max_stationarity_residual: f64,
    pub per_trial: Vec<TrialDrift>,
    #[serde(skip)]
    pub worst_trajectory: Trajectory,
}

/// Runs `cfg.trials` extremals from seeded random initial data and reports
/// the worst drift of `c`.
pub fn ensemble_drift(p: &Problem, c: &FirstIntegral, cfg: &EnsembleConfig) -> Result<EnsembleReport> {
    if cfg.trials == 0 {
        return Err(Error::EmptyEnsemble);
    }
    p.solve_control()?;
    let mut worst: Option<(usize, DriftReport, Trajectory)> = None;
    let mut blown_up = 0;
    let mut per_trial = Vec::new();
    let mut max_res: f64 = 0.0;
    for (trial, (x0, psi)) in ensemble_initial_conditions(p.n(), cfg).into_iter().enumerate() {
        let traj = match integrate_extremal(p, &x0, &psi, cfg.psi0, cfg.step) {
            Ok(traj) => traj,
            Err(Error::BlowUp { .. }) => {
                blown_up += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let d = drift(&traj, c)?;
        max_res = max_res.max(traj.max_stationarity_residual);
        per_trial.push(TrialDrift {
            trial,
            max_abs_drift: d.max_abs_drift,
            relative_drift: d.relative_drift,
        });
        if worst.as_ref().is_none_or(|(_, w, _)| d.relative_drift > w.relative_drift) {
            worst = Some((trial, d, traj));
        }
    }
    let Some((worst_trial, worst, worst_trajectory)) = worst else {
        return Err(Error::AllTrialsBlewUp(cfg.trials));
    };
    Ok(EnsembleReport {
        worst,
        worst_trial,
        trials: cfg.trials,
        completed: cfg.trials - blown_up,
        blown_up,
        max_stationarity_residual: max_res,
        per_trial,
        worst_trajectory,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HalvingReport {
    pub step: f64,
    /// Worst absolute drift over trials at `step`.
    pub full: f64,
    /// Worst absolute drift over the same trials at `step / 2`.
    pub half: f64,
    /// Smallest per-trial ratio `full / half`.
    pub min_ratio: f64,
    pub passed: bool,
}

/// Absolute drift below which differences are dominated by rounding.
pub const DRIFT_FLOOR: f64 = 1e-12;

/// Re-runs the ensemble at half the step. Fourth-order convergence predicts
/// a drift reduction near 16; the check requires at least 8 for every trial
/// whose halved drift is above [`DRIFT_FLOOR`].
pub fn step_halving(p: &Problem, c: &FirstIntegral, cfg: &EnsembleConfig) -> Result<HalvingReport> {
    let full = ensemble_drift(p, c, cfg)?;
    let half_cfg = EnsembleConfig {
        step: cfg.step / 2.0,
        ..*cfg
    };
    let half = ensemble_drift(p, c, &half_cfg)?;
    let mut min_ratio = f64::INFINITY;
    let mut passed = true;
    for f in &full.per_trial {
        let Some(h) = half.per_trial.iter().find(|h| h.trial == f.trial) else {
            continue;
        };
        let ratio = if h.max_abs_drift > 0.0 {
            f.max_abs_drift / h.max_abs_drift
        } else {
            f64::INFINITY
        };
        if h.max_abs_drift > DRIFT_FLOOR {
            min_ratio = min_ratio.min(ratio);
            passed &= ratio >= 8.0;
        }
    }
    let worst_abs = |r: &EnsembleReport| {
        r.per_trial
            .iter()
            .map(|t| t.max_abs_drift)
            .fold(0.0, f64::max)
    };
    Ok(HalvingReport {
        step: cfg.step,
        full: worst_abs(&full),
        half: worst_abs(&half),
        min_ratio,
        passed,
    })
}
