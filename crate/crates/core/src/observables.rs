//! Photocell observables built on the stationary populations: current,
//! terminal voltage, power, and the load sweep with peak refinement.

use rayon::prelude::*;

use crate::constants::K_B;
use crate::error::CoreError;
use crate::kinetics::{Generator, PopulationState};
use crate::model::{DerivedRates, ModelKind};
use crate::numerics::steady_state;

/// Whether an operating point is a regular load point or the open-circuit
/// edge where the voltage formula diverges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointFlag {
    Nominal,
    OpenCircuit,
}

/// Steady-state working point of the cell at one load rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatingPoint {
    /// Load rate Gamma, 1/ns.
    pub gamma_load: f64,
    /// Electron current through the load, e/ns: Gamma times the alpha
    /// population.
    pub current: f64,
    /// Terminal voltage, V.
    pub voltage: f64,
    /// Delivered power, eV/ns.
    pub power: f64,
    /// Power at the excitation energy for the same current, eV/ns; the
    /// incident-side reference for efficiency ratios.
    pub power_sun: f64,
    /// Stationary populations behind the numbers above.
    pub rho: PopulationState,
    pub flag: PointFlag,
}

/// Terminal voltage from the stationary populations: the load energy drop
/// plus the thermal chemical-potential split ln(rho_alpha / rho_beta).
/// Returns an infinity when one of the two populations vanishes.
pub fn terminal_voltage(rates: &DerivedRates, rho: &PopulationState) -> f64 {
    rates.e_alpha_beta + K_B * rates.t_a * (rho.values[2] / rho.values[3]).ln()
}

/// Solve the stationary point at one load rate.
pub fn operating_point(
    kind: ModelKind,
    rates: &DerivedRates,
    gamma_load: f64,
) -> Result<OperatingPoint, CoreError> {
    if !gamma_load.is_finite() || gamma_load < 0.0 {
        return Err(CoreError::InvalidInput(format!(
            "load rate must be finite and nonnegative, got {gamma_load}"
        )));
    }
    let r = rates.with_gamma_load(gamma_load);
    let generator = Generator::new(kind, &r);
    let rho = steady_state(&generator)?;
    let current = gamma_load * rho.values[2];
    let power_sun = current * r.e_x1;
    if gamma_load == 0.0 || rho.values[3] == 0.0 {
        // Open circuit: no current, and the voltage formula diverges. The
        // delivered power limit is zero.
        return Ok(OperatingPoint {
            gamma_load,
            current,
            voltage: f64::INFINITY,
            power: 0.0,
            power_sun,
            rho,
            flag: PointFlag::OpenCircuit,
        });
    }
    let voltage = terminal_voltage(&r, &rho);
    Ok(OperatingPoint {
        gamma_load,
        current,
        voltage,
        power: current * voltage,
        power_sun,
        rho,
        flag: PointFlag::Nominal,
    })
}

/// One sweep entry; failures are carried per point so a sweep survives
/// isolated degenerate cells.
#[derive(Clone, Debug)]
pub struct IVPoint {
    pub gamma_load: f64,
    pub outcome: Result<OperatingPoint, String>,
}

/// Load sweep of one model variant, carrying the rates it was built from
/// so later refinement can re-evaluate the same physics.
#[derive(Clone, Debug)]
pub struct IVCurve {
    pub kind: ModelKind,
    pub rates: DerivedRates,
    pub points: Vec<IVPoint>,
}

/// Geometric grid from `lo` to `hi` inclusive with exact endpoints.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo, "log grid needs 0 < lo < hi");
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (la, lb) = (lo.ln(), hi.ln());
            let mut g: Vec<f64> = (0..n)
                .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
                .collect();
            g[0] = lo;
            g[n - 1] = hi;
            g
        }
    }
}

/// Sweep the load over `grid`. Points are independent, so they run in
/// parallel; the output order follows the grid, and every point is a
/// deterministic function of its own inputs.
pub fn iv_sweep(kind: ModelKind, rates: &DerivedRates, grid: &[f64]) -> IVCurve {
    let points: Vec<IVPoint> = grid
        .par_iter()
        .map(|&gamma| IVPoint {
            gamma_load: gamma,
            outcome: operating_point(kind, rates, gamma).map_err(|e| e.to_string()),
        })
        .collect();
    IVCurve {
        kind,
        rates: *rates,
        points,
    }
}

/// Refined power maximum of a load sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakPower {
    /// Peak delivered power, eV/ns.
    pub power: f64,
    /// Load rate at the peak, 1/ns.
    pub at: f64,
    /// True when the grid argmax sits on the sweep edge, in which case the
    /// reported values are the raw edge point and the true peak may lie
    /// outside the sweep range.
    pub on_boundary: bool,
}

/// Locate the power maximum of the sweep: grid argmax, then golden-section
/// refinement in log load between the neighboring grid points. Boundary
/// maxima are flagged and returned unrefined.
pub fn peak_power(curve: &IVCurve) -> Result<PeakPower, CoreError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in curve.points.iter().enumerate() {
        if let Ok(op) = &p.outcome {
            if op.flag == PointFlag::Nominal && op.power.is_finite() {
                if best.map_or(true, |(_, bp)| op.power > bp) {
                    best = Some((i, op.power));
                }
            }
        }
    }
    let (idx, grid_power) = best.ok_or_else(|| {
        CoreError::InvalidInput("sweep contains no usable operating points".into())
    })?;
    if idx == 0 || idx == curve.points.len() - 1 {
        return Ok(PeakPower {
            power: grid_power,
            at: curve.points[idx].gamma_load,
            on_boundary: true,
        });
    }

    let eval = |lg: f64| -> Result<f64, CoreError> {
        Ok(operating_point(curve.kind, &curve.rates, lg.exp())?.power)
    };
    let mut a = curve.points[idx - 1].gamma_load.ln();
    let mut b = curve.points[idx + 1].gamma_load.ln();
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while b - a > 1e-12 * (1.0 + a.abs().max(b.abs())) {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INVPHI * (b - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INVPHI * (b - a);
            f2 = eval(x2)?;
        }
    }
    let (lg_best, p_best) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    // The refined peak can only improve on the grid point; keep the better.
    if p_best >= grid_power {
        Ok(PeakPower {
            power: p_best,
            at: lg_best.exp(),
            on_boundary: false,
        })
    } else {
        Ok(PeakPower {
            power: grid_power,
            at: curve.points[idx].gamma_load,
            on_boundary: false,
        })
    }
}

/// Relative gain of one peak power over a baseline peak power.
pub fn relative_enhancement(peak: f64, baseline: f64) -> f64 {
    (peak - baseline) / baseline
}
