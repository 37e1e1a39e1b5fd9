//! Dense numerics sized for the five-state generators: LU solves, a
//! compensated matrix exponential, a stiff Runge-Kutta integrator, and the
//! steady-state solver built on top of them.

mod dd;
mod expm;
mod lu;
mod radau;
mod steady;

pub use expm::matrix_exponential_apply;
pub use lu::{lu_factor, lu_solve, LuFactors};
pub use radau::{integrate, IntegrationStats, SolverConfig, Trajectory};
pub use steady::steady_state;
