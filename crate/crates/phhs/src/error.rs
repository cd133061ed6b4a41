use thiserror::Error;

use crate::expr::ParseError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PhhsError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("two-form is singular at the evaluation point")]
    SingularForm,
    #[error("no symplectic partner above threshold; form is degenerate")]
    DegenerateForm,
    #[error("one-form is not closed: loop residual {residual:.3e} exceeds {threshold:.3e}")]
    NonClosedForm { residual: f64, threshold: f64 },
    #[error("J is not an almost complex structure: residual {0:.3e}")]
    NotAlmostComplex(f64),
    #[error("J is not anticompatible with the real form: residual {0:.3e}")]
    NotAnticompatible(f64),
    #[error("expression is not holomorphic: residual {0:.3e}")]
    NotHolomorphic(f64),
    #[error("Hamiltonian depends on Q coordinates: variation {0:.3e}")]
    QDependence(f64),
    #[error("denominator vanishes on the sample set")]
    ZeroDenominator,
    #[error("model has no Liouville primitive")]
    MissingPrimitive,
    #[error("step budget exceeded: {needed} steps needed, {budget} allowed")]
    StepBudgetExceeded { needed: usize, budget: usize },
    #[error("state left the finite region after {steps} steps")]
    NonFiniteState { steps: usize },
    #[error("metric is singular at the evaluation point")]
    SingularMetric,
    #[error("orbit did not close within the step budget")]
    NoReturn,
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, PhhsError>;
