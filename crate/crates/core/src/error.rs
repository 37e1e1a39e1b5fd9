//! Crate-wide error type.

use thiserror::Error;

/// One parameter-validation failure: the offending field and why it failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub reason: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Error, Debug)]
pub enum CoreError {
    /// Device parameters failed validation.
    #[error("invalid device parameters: {}", join_violations(.0))]
    InvalidParams(Vec<Violation>),

    /// The coupled-level splitting pushed the lower tunneling energy below
    /// the conduction-band minimum: E_star - J < 0.
    #[error("degenerate geometry: E_star - J = {e_minus_j:.6} eV < 0 (J = {j:.6} eV)")]
    DegenerateGeometry { e_minus_j: f64, j: f64 },

    /// Strict closed-form tunneling was asked for a carrier energy above the
    /// barrier base, where its bracket goes negative.
    #[error("carrier energy {energy:.6} eV lies above the barrier base {barrier:.6} eV")]
    AboveBarrier { energy: f64, barrier: f64 },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    /// LU elimination hit a pivot below the singularity floor.
    #[error("singular matrix: pivot {pivot:.3e} in column {col}")]
    SingularMatrix { pivot: f64, col: usize },

    /// Step-size control drove the step below the representable floor.
    #[error("step size underflow at t = {t:.6e} ns (h = {h:.3e} ns)")]
    StepSizeUnderflow { t: f64, h: f64 },

    /// The stage equations failed to converge within the iteration budget.
    #[error("Newton iteration diverged at t = {t:.6e} ns")]
    NewtonDivergence { t: f64 },

    /// The generator's null space has dimension >= 2: no unique steady state
    /// (for example a fully disconnected dark state). Callers that only need
    /// a stationary point can fall back to long-time integration.
    #[error("degenerate kernel: null space dimension {dim}")]
    DegenerateKernel { dim: usize },

    /// A caller-supplied argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
