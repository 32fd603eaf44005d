use thiserror::Error;

use crate::expr::{Expr, ExprError, Symbol};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("{context} references `{symbol}`, which is out of scope")]
    SymbolOutOfScope { context: String, symbol: Symbol },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("family is not the identity at s = 0: {component} reduces to {value}")]
    NotIdentityAtOrigin { component: String, value: Expr },

    #[error("gauge term at s = 0 must be constant, got {0}")]
    GaugeNotConstantAtOrigin(Expr),

    #[error("power-form scaling family needs integer weights, got {0}")]
    NonIntegerWeight(String),

    #[error("parameter index {index} out of range 1..={r}")]
    ParameterOutOfRange { index: usize, r: usize },

    #[error("generator fails the necessary conditions for parameter {parameter}")]
    NecessaryConditionsFailed { parameter: usize },

    #[error("problem is not polynomial: {0}")]
    NonPolynomial(String),

    #[error("weights are all zero")]
    ZeroWeights,

    #[error("weights do not solve the homogeneity system")]
    WeightsNotSolution,

    #[error("ansatz has no unknown coefficients")]
    EmptyAnsatz,

    #[error("no closed-form control: {0}")]
    UnsolvableControl(String),

    #[error("trajectory blew up at t = {time}")]
    BlowUp { time: f64 },

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("every ensemble trial blew up ({0} trials)")]
    AllTrialsBlewUp(usize),

    #[error("first integral belongs to problem `{integral}`, trajectory to `{trajectory}`")]
    ProblemMismatch {
        integral: String,
        trajectory: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
