//! Prepackaged studies: transient dynamics, the coupled-over-uncoupled
//! power enhancement, and sweeps of the phonon transfer rate and the
//! stacking geometry.

use rayon::prelude::*;

use crate::error::CoreError;
use crate::kinetics::{Generator, PopulationState};
use crate::model::{derive_rates, DeviceParams, ModelKind};
use crate::numerics::{integrate, SolverConfig, Trajectory};
use crate::observables::{iv_sweep, log_grid, peak_power, relative_enhancement, PeakPower};

/// Load grid used when hunting for peak power. The optimum load of
/// physically interesting geometries sits at 1e5..1e7 per ns, orders above
/// any realistic external load, so the search range is deliberately wide;
/// four points per decade is enough to bracket a smooth single maximum.
pub fn wide_load_grid() -> Vec<f64> {
    log_grid(1e-4, 1e9, 53)
}

/// Uniform grid from `lo` to `hi` inclusive with exact endpoints.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let mut g: Vec<f64> = (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect();
            g[0] = lo;
            g[n - 1] = hi;
            g
        }
    }
}

/// Peak powers of both variants and the relative gain of the coupled one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Enhancement {
    pub coupled: PeakPower,
    pub uncoupled: PeakPower,
    /// (coupled peak - uncoupled peak) / uncoupled peak.
    pub eta: f64,
}

/// Compare the peak power of the two variants for one device.
pub fn enhancement(params: &DeviceParams) -> Result<Enhancement, CoreError> {
    let rates = derive_rates(params)?;
    let grid = wide_load_grid();
    let coupled = peak_power(&iv_sweep(ModelKind::Coupled, &rates, &grid))?;
    let uncoupled = peak_power(&iv_sweep(ModelKind::Uncoupled, &rates, &grid))?;
    Ok(Enhancement {
        coupled,
        uncoupled,
        eta: relative_enhancement(coupled.power, uncoupled.power),
    })
}

/// One point of the transfer-rate scan.
#[derive(Clone, Debug)]
pub struct PhononPoint {
    pub multiplier: f64,
    /// Transfer rate actually used: `multiplier` times the device's own.
    pub gamma_x: f64,
    /// Enhancement eta, or the failure text for this multiplier alone.
    pub outcome: Result<f64, String>,
}

/// Enhancement as a function of the interdot transfer rate, scanned as
/// multiples of the device's own resolved rate. The uncoupled variant has
/// no transfer channel, so its peak is computed once and shared; a failure
/// at one multiplier is carried in that point, not returned wholesale.
pub fn phonon_rate_sweep(
    params: &DeviceParams,
    multipliers: &[f64],
) -> Result<Vec<PhononPoint>, CoreError> {
    let rates = derive_rates(params)?;
    let grid = wide_load_grid();
    let uncoupled = peak_power(&iv_sweep(ModelKind::Uncoupled, &rates, &grid))?;
    Ok(multipliers
        .par_iter()
        .map(|&m| {
            let mut r = rates;
            r.gamma_x = rates.gamma_x * m;
            let outcome = peak_power(&iv_sweep(ModelKind::Coupled, &r, &grid))
                .map(|coupled| relative_enhancement(coupled.power, uncoupled.power))
                .map_err(|e| e.to_string());
            PhononPoint { multiplier: m, gamma_x: r.gamma_x, outcome }
        })
        .collect())
}

/// One cell of the geometry scan.
#[derive(Clone, Debug)]
pub struct GeometryCell {
    pub d_perp: f64,
    pub w_br: f64,
    /// Enhancement eta, or the failure text (close stacking makes the
    /// splitting exceed the escape energy and the geometry degenerate).
    pub outcome: Result<f64, String>,
}

/// Default scan axes: stacking distances over 1..4 nm and barrier
/// thicknesses over 0.2..1.5 nm, eight points each.
pub fn default_geometry_axes() -> (Vec<f64>, Vec<f64>) {
    (linspace(1.0, 4.0, 8), linspace(0.2, 1.5, 8))
}

/// Scan the enhancement over stacking distance and barrier thickness.
/// Cells are independent and run in parallel; the output is row-major with
/// `d_perp` as the slow axis, and each cell carries its own outcome.
pub fn geometry_sweep(
    params: &DeviceParams,
    d_perp_axis: &[f64],
    w_br_axis: &[f64],
) -> Vec<GeometryCell> {
    let cells: Vec<(f64, f64)> = d_perp_axis
        .iter()
        .flat_map(|&d| w_br_axis.iter().map(move |&w| (d, w)))
        .collect();
    cells
        .par_iter()
        .map(|&(d_perp, w_br)| {
            let p = DeviceParams {
                d_perp,
                w_br,
                ..*params
            };
            GeometryCell {
                d_perp,
                w_br,
                outcome: enhancement(&p).map(|e| e.eta).map_err(|e| e.to_string()),
            }
        })
        .collect()
}

/// Relaxation from the all-ground start, reported on a geometric time grid
/// from 1 fs to `t_end` ns.
pub fn population_dynamics(
    params: &DeviceParams,
    kind: ModelKind,
    t_end: f64,
    n_points: usize,
    config: &SolverConfig,
) -> Result<Trajectory, CoreError> {
    if !(t_end > 1e-6) {
        return Err(CoreError::InvalidInput(format!(
            "dynamics end time must exceed 1e-6 ns, got {t_end}"
        )));
    }
    let rates = derive_rates(params)?;
    let generator = Generator::new(kind, &rates);
    let y0 = PopulationState::ground(kind);
    let checkpoints = log_grid(1e-6, t_end, n_points.max(2));
    integrate(&generator, &y0, 0.0, &checkpoints, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::steady_state;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn reference_enhancement_matches_golden() {
        let e = enhancement(&DeviceParams::default()).unwrap();
        assert!(rel(e.eta, 0.14770314854189526) < 1e-9, "{}", e.eta);
        assert!(!e.coupled.on_boundary);
        assert!(!e.uncoupled.on_boundary);
    }

    #[test]
    fn phonon_sweep_matches_goldens_and_saturates() {
        let mults = [0.01, 0.1, 0.5, 1.0, 2.0, 4.0];
        let sweep = phonon_rate_sweep(&DeviceParams::default(), &mults).unwrap();
        let golden = [
            -0.02870859472320465,
            0.06901057985009855,
            0.13430749749840273,
            0.14770314854189526,
            0.15514319940280716,
            0.1590732233340082,
        ];
        let etas: Vec<f64> = sweep.iter().map(|p| *p.outcome.as_ref().unwrap()).collect();
        for ((point, eta), (gm, geta)) in sweep.iter().zip(&etas).zip(mults.iter().zip(&golden)) {
            assert_eq!(point.multiplier, *gm);
            assert_eq!(point.gamma_x, 630055.0839278034 * gm);
            assert!(rel(*eta, *geta) < 1e-8, "mult {gm}: {eta} vs {geta}");
        }
        // Monotone approach to a plateau.
        assert!(etas.windows(2).all(|w| w[1] > w[0]));
        assert!(etas[5] - etas[4] <= 0.1 * etas[4]);
    }

    #[test]
    fn geometry_scan_finds_an_interior_optimum() {
        let (d_axis, w_axis) = default_geometry_axes();
        let cells = geometry_sweep(&DeviceParams::default(), &d_axis, &w_axis);
        assert_eq!(cells.len(), 64);
        // Closest stacking makes the splitting exceed the escape energy.
        for c in cells.iter().take(8) {
            assert_eq!(c.d_perp, 1.0);
            assert!(c.outcome.is_err());
        }
        let (best_idx, best_eta) = cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.outcome.as_ref().ok().map(|e| (i, *e)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let (di, wi) = (best_idx / 8, best_idx % 8);
        assert_eq!((di, wi), (3, 3), "best eta {best_eta} at {di},{wi}");
        assert!(rel(cells[best_idx].d_perp, 16.0 / 7.0) < 1e-14);
        assert!(rel(cells[best_idx].w_br, 0.2 + 3.0 * 1.3 / 7.0) < 1e-14);
        assert!(rel(best_eta, 0.18596984160396487) < 1e-8, "{best_eta}");
    }

    #[test]
    fn dynamics_relax_to_the_stationary_state() {
        let params = DeviceParams::default();
        let traj = population_dynamics(
            &params,
            ModelKind::Coupled,
            200.0,
            41,
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(traj.times.len(), 42);
        assert_eq!(traj.times[0], 0.0);
        assert_eq!(*traj.times.last().unwrap(), 200.0);
        let rates = derive_rates(&params).unwrap();
        let rho = steady_state(&Generator::new(ModelKind::Coupled, &rates)).unwrap();
        for r in 0..5 {
            let diff = (traj.last().values[r] - rho.values[r]).abs();
            assert!(diff < 1e-8, "component {r} off by {diff:e}");
        }
    }

    #[test]
    fn linspace_covers_endpoints() {
        let g = linspace(1.0, 4.0, 8);
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[7], 4.0);
        assert!(rel(g[3], 16.0 / 7.0) < 1e-15);
    }
}
