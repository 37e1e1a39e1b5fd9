//! Rate-equation simulator for a photocell built from two vertically stacked,
//! dipole-dipole-coupled quantum dots.
//!
//! The model tracks five occupation probabilities: the two upper levels
//! (delocalized exciton states `x1`/`x2` when the dots are coupled, or the
//! independent dot excitations `a1`/`a2` when they are not), the conduction
//! level `alpha` that carriers tunnel into, the drained level `beta` behind
//! the load, and the common ground `b`. Radiative pumping fills the upper
//! levels, phonon-assisted transfer moves population between them, field
//! ionization tunnels carriers out through the barrier, and a load rate
//! `Gamma` converts the `alpha`-`beta` drop into extracted power.
//!
//! Everything is expressed in a single canonical unit system: energies in
//! eV, lengths in nm, times in ns, temperatures in K. Rates are 1/ns.
//!
//! Module map:
//! - [`constants`]: pinned physical constants in canonical units.
//! - [`model`]: device parameters, validation, and derived model rates.
//! - [`rates`]: the individual physics pieces (coupling, pumping, planck
//!   occupations, band profile, WKB tunneling).
//! - [`kinetics`]: the two population-dynamics generators.
//! - [`numerics`]: stiff integrator, matrix exponential, steady state.
//! - [`observables`]: currents, voltages, I-V sweeps, peak power.
//! - [`experiments`]: the canned parameter sweeps and dynamics runs.

pub mod constants;
pub mod error;
pub mod experiments;
pub mod kinetics;
pub mod model;
pub mod numerics;
pub mod observables;
pub mod rates;

mod quad;

pub use error::{CoreError, Violation};
pub use kinetics::{coupled_generator, rhs, uncoupled_generator, Generator, PopulationState, N_STATES};
pub use model::{derive_rates, validate_params, DerivedRates, DeviceParams, GammaXSpec, ModelKind};
pub use numerics::{
    integrate, lu_solve, matrix_exponential_apply, steady_state, IntegrationStats, SolverConfig,
    Trajectory,
};
pub use observables::{
    iv_sweep, log_grid, operating_point, peak_power, relative_enhancement, terminal_voltage,
    IVCurve, IVPoint, OperatingPoint, PeakPower, PointFlag,
};
