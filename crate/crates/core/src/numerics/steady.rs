//! Stationary populations of a generator: solve A rho = 0 with unit trace.
//!
//! The trace condition replaces the ground-state balance row (the rows of A
//! are linearly dependent, summing to zero). The raw LU solution is refined
//! with compensated residuals because the rate matrix spans ~9 orders of
//! magnitude and the interesting populations can sit near 1e-7.

use crate::error::CoreError;
use crate::kinetics::{Generator, PopulationState, N_STATES};
use crate::numerics::dd::Dd;
use crate::numerics::lu::lu_factor;

const N: usize = N_STATES;

/// Row replaced by the unit-trace condition.
const TRACE_ROW: usize = N - 1;

/// Refinement sweeps; each one costs a compensated residual and a solve.
const REFINE_SWEEPS: usize = 5;

/// Negative populations up to this magnitude are rounding debris.
const CLAMP_TOL: f64 = 1e-12;

/// Stationary residual the solution must satisfy in the infinity norm,
/// relative to the largest gross flux through any state. Rounding alone
/// makes the raw residual scale with the flux magnitude, so an absolute
/// bound would reject exact-to-roundoff solutions at strong driving.
const RESIDUAL_TOL: f64 = 1e-12;

/// Dimension of the null space, counted by row echelon with a relative
/// pivot threshold.
fn kernel_dim(a: &[[f64; N]; N], rel_tol: f64) -> usize {
    let mut m = *a;
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1e-300);
    let tol = rel_tol * scale;
    let mut rank = 0;
    let mut row = 0;
    for col in 0..N {
        let mut p = row;
        let mut pmax = 0.0;
        for r in row..N {
            let v = m[r][col].abs();
            if v > pmax {
                pmax = v;
                p = r;
            }
        }
        if pmax <= tol {
            continue;
        }
        m.swap(row, p);
        for r in row + 1..N {
            let f = m[r][col] / m[row][col];
            for c in col..N {
                m[r][c] -= f * m[row][c];
            }
        }
        rank += 1;
        row += 1;
        if row == N {
            break;
        }
    }
    N - rank
}

/// Stationary population of the generator.
///
/// Fails with `DegenerateKernel` when the kinetics decompose into disjoint
/// pieces (null space dimension above one), in which case no unique
/// stationary population exists.
pub fn steady_state(generator: &Generator) -> Result<PopulationState, CoreError> {
    let a = &generator.matrix;

    // Trace-closed system M x = e_trace.
    let mut m = vec![0.0; N * N];
    for r in 0..N {
        for c in 0..N {
            m[r * N + c] = if r == TRACE_ROW { 1.0 } else { a[r][c] };
        }
    }
    let factors = match lu_factor(&m, N) {
        Ok(f) => f,
        Err(CoreError::SingularMatrix { .. }) => {
            return Err(CoreError::DegenerateKernel {
                dim: kernel_dim(a, 1e-12),
            });
        }
        Err(e) => return Err(e),
    };

    let mut b = [0.0; N];
    b[TRACE_ROW] = 1.0;
    let mut x = b.to_vec();
    factors.solve_in_place(&mut x);

    // Iterative refinement with double-double residuals.
    for _ in 0..REFINE_SWEEPS {
        let mut resid = vec![0.0; N];
        for r in 0..N {
            let mut acc = Dd::from_f64(-b[r]);
            for c in 0..N {
                acc = acc.add(Dd::prod(m[r * N + c], x[c]));
            }
            resid[r] = -(acc.hi + acc.lo);
        }
        factors.solve_in_place(&mut resid);
        for r in 0..N {
            x[r] += resid[r];
        }
    }

    // Strip rounding debris, renormalize, and verify stationarity.
    let mut values = [0.0; N];
    for (r, v) in x.iter().enumerate() {
        if *v < -CLAMP_TOL {
            return Err(CoreError::InvalidInput(format!(
                "stationary solve produced population {v:e} in component {r}"
            )));
        }
        values[r] = v.max(0.0);
    }
    let trace: f64 = values.iter().sum();
    for v in &mut values {
        *v /= trace;
    }
    let mut residual: f64 = 0.0;
    let mut flux_scale: f64 = 1.0;
    for row in a.iter() {
        let mut acc = 0.0;
        let mut gross = 0.0;
        for (c, v) in row.iter().enumerate() {
            let term = v * values[c];
            acc += term;
            gross += term.abs();
        }
        residual = residual.max(acc.abs());
        flux_scale = flux_scale.max(gross);
    }
    if residual > RESIDUAL_TOL * flux_scale {
        return Err(CoreError::InvalidInput(format!(
            "stationary residual {residual:e} exceeds {:e}",
            RESIDUAL_TOL * flux_scale
        )));
    }
    Ok(PopulationState {
        values,
        kind: generator.kind,
    })
}
