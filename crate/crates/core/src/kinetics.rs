//! Five-state population kinetics.
//!
//! State order is fixed across the crate:
//!
//! | index | coupled model      | uncoupled model    |
//! |-------|--------------------|--------------------|
//! | 0     | x1 (upper split)   | a1 (dot 1 excited) |
//! | 1     | x2 (lower split)   | a2 (dot 2 excited) |
//! | 2     | alpha (extracted)  | alpha              |
//! | 3     | beta (post-load)   | beta               |
//! | 4     | b (ground)         | b                  |
//!
//! A generator is the rate matrix A with A[dest][src] the transfer rate from
//! `src` into `dest`; diagonals hold the negated column sums so populations
//! are conserved. d rho / dt = A rho.

use crate::error::CoreError;
use crate::model::{DerivedRates, ModelKind};

/// Number of kinetic states.
pub const N_STATES: usize = 5;

/// Population vector tagged with the model variant it belongs to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PopulationState {
    pub values: [f64; N_STATES],
    pub kind: ModelKind,
}

impl PopulationState {
    /// Everything in the ground state b.
    pub fn ground(kind: ModelKind) -> Self {
        PopulationState {
            values: [0.0, 0.0, 0.0, 0.0, 1.0],
            kind,
        }
    }

    /// State labels in index order for the given variant.
    pub fn labels(kind: ModelKind) -> [&'static str; N_STATES] {
        match kind {
            ModelKind::Coupled => ["x1", "x2", "alpha", "beta", "b"],
            ModelKind::Uncoupled => ["a1", "a2", "alpha", "beta", "b"],
        }
    }

    /// Total population.
    pub fn trace(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Verify the vector is a population: finite, trace within `tol` of one,
    /// no component below -`tol`.
    pub fn check(&self, tol: f64) -> Result<(), CoreError> {
        for (i, v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(CoreError::InvalidInput(format!(
                    "population component {i} is {v}"
                )));
            }
            if *v < -tol {
                return Err(CoreError::InvalidInput(format!(
                    "population component {i} is {v}, below -{tol:e}"
                )));
            }
        }
        let drift = (self.trace() - 1.0).abs();
        if drift > tol {
            return Err(CoreError::InvalidInput(format!(
                "population trace drifted by {drift:e}, above {tol:e}"
            )));
        }
        Ok(())
    }

    /// Zero out negative components no larger than `tol` in magnitude and
    /// renormalize the trace to one. Components below -`tol` are left alone
    /// so genuine integrator failures stay visible.
    pub fn clamped(&self, tol: f64) -> Self {
        let mut values = self.values;
        for v in &mut values {
            if *v < 0.0 && *v >= -tol {
                *v = 0.0;
            }
        }
        let trace: f64 = values.iter().sum();
        if trace > 0.0 {
            for v in &mut values {
                *v /= trace;
            }
        }
        PopulationState { values, kind: self.kind }
    }
}

/// Rate matrix of one model variant, with the rates it was built from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Generator {
    /// A[dest][src]; columns sum to zero.
    pub matrix: [[f64; N_STATES]; N_STATES],
    pub kind: ModelKind,
    pub rates: DerivedRates,
}

impl Generator {
    /// Build the generator for the requested variant.
    pub fn new(kind: ModelKind, rates: &DerivedRates) -> Self {
        match kind {
            ModelKind::Coupled => coupled_generator(rates),
            ModelKind::Uncoupled => uncoupled_generator(rates),
        }
    }

    /// A * y.
    pub fn apply(&self, y: &[f64; N_STATES]) -> [f64; N_STATES] {
        let mut out = [0.0; N_STATES];
        for (r, row) in self.matrix.iter().enumerate() {
            let mut acc = 0.0;
            for (c, a) in row.iter().enumerate() {
                acc += a * y[c];
            }
            out[r] = acc;
        }
        out
    }

    /// Smallest nonzero transfer rate in the matrix, 1/ns. Its inverse is a
    /// conservative proxy for the slowest relaxation timescale.
    pub fn min_nonzero_rate(&self) -> f64 {
        let mut min = f64::INFINITY;
        for (r, row) in self.matrix.iter().enumerate() {
            for (c, a) in row.iter().enumerate() {
                if r != c && *a > 0.0 && *a < min {
                    min = *a;
                }
            }
        }
        min
    }
}

/// Set each diagonal to the negated sum of its column's off-diagonals,
/// accumulated in ascending row order.
fn fill_diagonal(m: &mut [[f64; N_STATES]; N_STATES]) {
    for c in 0..N_STATES {
        let mut s = 0.0;
        for r in 0..N_STATES {
            if r != c {
                s += m[r][c];
            }
        }
        m[c][c] = -s;
    }
}

/// Generator of the dipole-coupled variant.
///
/// The pump drives b -> x1 only (the antisymmetric x2 is dark), phonons
/// shuttle population between the split levels, both levels tunnel into
/// alpha at their own energies, the load drains alpha into beta with a
/// parallel nonradiative branch chi, and beta resets to b.
pub fn coupled_generator(rates: &DerivedRates) -> Generator {
    let mut m = [[0.0; N_STATES]; N_STATES];
    m[1][0] = rates.gamma_x * (1.0 + rates.n_x);
    m[2][0] = rates.gamma_x1_alpha;
    m[4][0] = rates.gamma_h * (1.0 + rates.n_h);
    m[0][1] = rates.gamma_x * rates.n_x;
    m[2][1] = rates.gamma_x2_alpha;
    m[3][2] = rates.gamma_load;
    m[4][2] = rates.chi * rates.gamma_load;
    m[4][3] = rates.gamma_beta_b;
    m[0][4] = rates.gamma_h * rates.n_h;
    fill_diagonal(&mut m);
    Generator {
        matrix: m,
        kind: ModelKind::Coupled,
        rates: *rates,
    }
}

/// Generator of the independent-dot variant: each dot pumps and decays at
/// half the coupled radiative rate, tunnels at the single-dot energy, and
/// there is no interdot transfer.
pub fn uncoupled_generator(rates: &DerivedRates) -> Generator {
    let half_rad = rates.gamma_h / 2.0;
    let mut m = [[0.0; N_STATES]; N_STATES];
    m[2][0] = rates.gamma_a_alpha;
    m[4][0] = half_rad * (1.0 + rates.n_h);
    m[2][1] = rates.gamma_a_alpha;
    m[4][1] = half_rad * (1.0 + rates.n_h);
    m[3][2] = rates.gamma_load;
    m[4][2] = rates.chi * rates.gamma_load;
    m[4][3] = rates.gamma_beta_b;
    m[0][4] = half_rad * rates.n_h;
    m[1][4] = half_rad * rates.n_h;
    fill_diagonal(&mut m);
    Generator {
        matrix: m,
        kind: ModelKind::Uncoupled,
        rates: *rates,
    }
}

/// Time derivative of the populations: A * y.
pub fn rhs(generator: &Generator, y: &[f64; N_STATES]) -> [f64; N_STATES] {
    generator.apply(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_rates, DeviceParams};

    fn reference_rates() -> DerivedRates {
        derive_rates(&DeviceParams::default()).unwrap()
    }

    fn column_sum_ascending(m: &[[f64; N_STATES]; N_STATES], c: usize) -> f64 {
        let mut s = 0.0;
        for r in 0..N_STATES {
            if r != c {
                s += m[r][c];
            }
        }
        s + m[c][c]
    }

    #[test]
    fn columns_sum_to_zero_exactly() {
        let rates = reference_rates();
        for g in [coupled_generator(&rates), uncoupled_generator(&rates)] {
            for c in 0..N_STATES {
                assert_eq!(column_sum_ascending(&g.matrix, c), 0.0, "column {c}");
            }
        }
    }

    #[test]
    fn off_diagonals_nonnegative_diagonal_nonpositive() {
        let rates = reference_rates();
        for g in [coupled_generator(&rates), uncoupled_generator(&rates)] {
            for r in 0..N_STATES {
                for c in 0..N_STATES {
                    if r == c {
                        assert!(g.matrix[r][c] <= 0.0);
                    } else {
                        assert!(g.matrix[r][c] >= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn coupled_entries_match_rates() {
        let rates = reference_rates();
        let m = coupled_generator(&rates).matrix;
        assert_eq!(m[4][0], rates.gamma_h * (1.0 + rates.n_h));
        assert_eq!(m[0][4], rates.gamma_h * rates.n_h);
        assert_eq!(m[1][0], rates.gamma_x * (1.0 + rates.n_x));
        assert_eq!(m[0][1], rates.gamma_x * rates.n_x);
        assert_eq!(m[2][0], rates.gamma_x1_alpha);
        assert_eq!(m[2][1], rates.gamma_x2_alpha);
        assert_eq!(m[3][2], rates.gamma_load);
        assert_eq!(m[4][2], rates.chi * rates.gamma_load);
        assert_eq!(m[4][3], rates.gamma_beta_b);
        // No direct pump into the dark level, no alpha -> x backflow.
        assert_eq!(m[1][4], 0.0);
        assert_eq!(m[0][2], 0.0);
    }

    #[test]
    fn uncoupled_dots_are_interchangeable_and_untransferring(){
        let rates = reference_rates();
        let m = uncoupled_generator(&rates).matrix;
        assert_eq!(m[4][0], m[4][1]);
        assert_eq!(m[2][0], m[2][1]);
        assert_eq!(m[0][4], m[1][4]);
        assert_eq!(m[4][0], rates.gamma_h / 2.0 * (1.0 + rates.n_h));
        assert_eq!(m[2][0], rates.gamma_a_alpha);
        assert_eq!(m[1][0], 0.0);
        assert_eq!(m[0][1], 0.0);
    }

    #[test]
    fn rhs_conserves_total_population() {
        let rates = reference_rates();
        for g in [coupled_generator(&rates), uncoupled_generator(&rates)] {
            for y in [
                [0.2, 0.2, 0.2, 0.2, 0.2],
                [1.0, 0.0, 0.0, 0.0, 0.0],
                [0.05, 0.1, 0.15, 0.3, 0.4],
            ] {
                let dy = rhs(&g, &y);
                let s: f64 = dy.iter().sum();
                // Entries reach ~2e7, so rounding leaves ~1e-9 absolute.
                assert!(s.abs() < 1e-7, "trace leak {s:e}");
            }
        }
    }

    #[test]
    fn ground_state_only_feels_the_pump() {
        let rates = reference_rates();
        let y = PopulationState::ground(ModelKind::Coupled).values;
        let dy = rhs(&coupled_generator(&rates), &y);
        assert_eq!(dy[0], rates.gamma_h * rates.n_h);
        assert_eq!(dy[1], 0.0);
        assert_eq!(dy[2], 0.0);
        assert_eq!(dy[3], 0.0);
        assert_eq!(dy[4], -rates.gamma_h * rates.n_h);

        let dy = rhs(&uncoupled_generator(&rates), &y);
        assert_eq!(dy[0], rates.gamma_h / 2.0 * rates.n_h);
        assert_eq!(dy[0], dy[1]);
        assert_eq!(dy[4], -rates.gamma_h * rates.n_h);
    }

    #[test]
    fn min_nonzero_rate_of_reference_device() {
        let rates = reference_rates();
        let g = coupled_generator(&rates);
        // Slowest process at the reference point is the load itself.
        assert_eq!(g.min_nonzero_rate(), rates.chi * rates.gamma_load);
    }

    #[test]
    fn state_labels_follow_variant() {
        assert_eq!(PopulationState::labels(ModelKind::Coupled)[0], "x1");
        assert_eq!(PopulationState::labels(ModelKind::Uncoupled)[0], "a1");
        assert_eq!(PopulationState::labels(ModelKind::Coupled)[4], "b");
    }

    #[test]
    fn clamp_fixes_small_negatives_only() {
        let s = PopulationState {
            values: [-1e-14, 0.25, 0.25, 0.25, 0.25],
            kind: ModelKind::Coupled,
        };
        let c = s.clamped(1e-12);
        assert_eq!(c.values[0], 0.0);
        assert!((c.trace() - 1.0).abs() < 1e-15);
        assert!(s.check(1e-12).is_ok());

        let bad = PopulationState {
            values: [-0.5, 0.5, 0.5, 0.25, 0.25],
            kind: ModelKind::Coupled,
        };
        assert_eq!(bad.clamped(1e-12).values[0], -0.5);
        assert!(bad.check(1e-12).is_err());
    }
}
