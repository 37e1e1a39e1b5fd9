//! Physical constants in the crate's canonical units (eV, nm, ns, K).
//!
//! Derived once from the exact 2018 SI definitions (h, e, c, k_B exact;
//! electron mass and fine-structure constant CODATA 2018) and pinned as
//! literals so every build computes bit-identical results.

/// Reduced Planck constant, eV ns. h / (2 pi e) * 1e9.
pub const HBAR: f64 = 6.582119569509067e-7;

/// Boltzmann constant, eV/K.
pub const K_B: f64 = 8.617333262145179e-5;

/// Speed of light, nm/ns. Numerically equal to the m/s value.
pub const C_LIGHT: f64 = 2.99792458e8;

/// hbar * c, eV nm.
pub const HBAR_C: f64 = 197.3269804593025;

/// Coulomb coupling factor e^2 / (4 pi eps_0), eV nm. Equals alpha * hbar * c.
pub const COULOMB_FACTOR: f64 = 1.4399645478437055;

/// Electron rest energy m_e c^2, eV. Effective masses in the model are
/// dimensionless multiples of this.
pub const ELECTRON_REST_ENERGY: f64 = 510998.9499961642;
