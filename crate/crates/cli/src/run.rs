//! Experiment dispatch: resolve the config, run one subcommand, and
//! assemble its console text and output files.
//!
//! Exit codes: 0 for success, 2 when a sweep completed but some points or
//! cells failed (their rows are flagged in the CSV), 1 for fatal errors
//! (bad config, unreadable files, a computation the experiment cannot
//! proceed without). All file contents are assembled first and written at
//! the end by a single writer, so a fatal error leaves no partial file set.

use std::fmt::Write as _;
use std::path::PathBuf;

use qdpc_core::experiments::{
    enhancement, geometry_sweep, linspace, phonon_rate_sweep, population_dynamics, Enhancement,
};
use qdpc_core::{
    derive_rates, iv_sweep, log_grid, operating_point, peak_power, relative_enhancement,
    DerivedRates, ModelKind, OperatingPoint, PeakPower, PointFlag, PopulationState,
};
use serde_json::json;

use crate::config::{self, RunConfig};
use crate::output::{self, json_f64, OutPaths};

/// Which model variants a command runs. Sweeps compare both variants by
/// definition and ignore this choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ModelChoice {
    Coupled,
    Uncoupled,
    Both,
}

impl ModelChoice {
    fn kinds(self) -> Vec<ModelKind> {
        match self {
            ModelChoice::Coupled => vec![ModelKind::Coupled],
            ModelChoice::Uncoupled => vec![ModelKind::Uncoupled],
            ModelChoice::Both => vec![ModelKind::Coupled, ModelKind::Uncoupled],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Rates,
    Dynamics,
    Steady,
    Iv,
    SweepGammaX,
    SweepGeometry,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Rates => "rates",
            Experiment::Dynamics => "dynamics",
            Experiment::Steady => "steady",
            Experiment::Iv => "iv",
            Experiment::SweepGammaX => "sweep-gamma-x",
            Experiment::SweepGeometry => "sweep-geometry",
        }
    }

    /// Data-producing experiments refuse to run without somewhere to put
    /// the data; the two inspection commands print to the console.
    fn needs_out(self) -> bool {
        !matches!(self, Experiment::Rates | Experiment::Steady)
    }
}

/// One CLI invocation after flag parsing.
#[derive(Clone, Debug)]
pub struct Invocation {
    pub experiment: Experiment,
    pub config_path: Option<PathBuf>,
    pub out: Option<String>,
    pub model: ModelChoice,
    pub sets: Vec<String>,
}

/// What the process should print and return.
pub struct RunOutcome {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn execute(inv: &Invocation) -> RunOutcome {
    match run(inv) {
        Ok((partial, stdout)) => RunOutcome {
            exit_code: if partial { 2 } else { 0 },
            stdout,
            stderr: String::new(),
        },
        Err(message) => RunOutcome {
            exit_code: 1,
            stdout: String::new(),
            stderr: format!("error: {message}\n"),
        },
    }
}

fn flag_name(flag: PointFlag) -> &'static str {
    match flag {
        PointFlag::Nominal => "nominal",
        PointFlag::OpenCircuit => "open_circuit",
    }
}

fn op_json(op: &OperatingPoint) -> serde_json::Value {
    json!({
        "Gamma_per_ns": json_f64(op.gamma_load),
        "j_e_per_ns": json_f64(op.current),
        "V_volts": json_f64(op.voltage),
        "P_eV_per_ns": json_f64(op.power),
        "P_sun_eV_per_ns": json_f64(op.power_sun),
        "rho": op.rho.values.iter().map(|&v| json_f64(v)).collect::<Vec<_>>(),
        "state_labels": PopulationState::labels(op.rho.kind),
        "flag": flag_name(op.flag),
    })
}

fn peak_json(peak: &PeakPower) -> serde_json::Value {
    json!({
        "P_eV_per_ns": json_f64(peak.power),
        "Gamma_per_ns": json_f64(peak.at),
        "on_grid_boundary": peak.on_boundary,
    })
}

fn enhancement_json(e: &Enhancement) -> serde_json::Value {
    json!({
        "eta": json_f64(e.eta),
        "coupled_peak": peak_json(&e.coupled),
        "uncoupled_peak": peak_json(&e.uncoupled),
        "search": "wide load grid with golden-section refinement",
    })
}

fn rates_json(r: &DerivedRates) -> serde_json::Value {
    json!({
        "J_eV": json_f64(r.j_coupling),
        "mu_nm": json_f64(r.mu_len),
        "E_x1_eV": json_f64(r.e_x1),
        "E_x2_eV": json_f64(r.e_x2),
        "E_alpha_beta_eV": json_f64(r.e_alpha_beta),
        "gamma_h_per_ns": json_f64(r.gamma_h),
        "n_h": json_f64(r.n_h),
        "gamma_x_per_ns": json_f64(r.gamma_x),
        "n_x": json_f64(r.n_x),
        "Gamma_x1_alpha_per_ns": json_f64(r.gamma_x1_alpha),
        "Gamma_x2_alpha_per_ns": json_f64(r.gamma_x2_alpha),
        "Gamma_a_alpha_per_ns": json_f64(r.gamma_a_alpha),
        "Gamma_beta_b_per_ns": json_f64(r.gamma_beta_b),
        "Gamma_load_per_ns": json_f64(r.gamma_load),
        "chi": json_f64(r.chi),
        "T_a_K": json_f64(r.t_a),
    })
}

fn rates_table(r: &DerivedRates) -> String {
    let rows: [(&str, f64); 16] = [
        ("J_eV", r.j_coupling),
        ("mu_nm", r.mu_len),
        ("E_x1_eV", r.e_x1),
        ("E_x2_eV", r.e_x2),
        ("E_alpha_beta_eV", r.e_alpha_beta),
        ("gamma_h_per_ns", r.gamma_h),
        ("n_h", r.n_h),
        ("gamma_x_per_ns", r.gamma_x),
        ("n_x", r.n_x),
        ("Gamma_x1_alpha_per_ns", r.gamma_x1_alpha),
        ("Gamma_x2_alpha_per_ns", r.gamma_x2_alpha),
        ("Gamma_a_alpha_per_ns", r.gamma_a_alpha),
        ("Gamma_beta_b_per_ns", r.gamma_beta_b),
        ("Gamma_load_per_ns", r.gamma_load),
        ("chi", r.chi),
        ("T_a_K", r.t_a),
    ];
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = String::from("derived quantities (canonical units eV, nm, ns, K):\n");
    for (k, v) in rows {
        let _ = writeln!(s, "  {k:<width$} = {}", output::fmt(v));
    }
    s
}

/// Model-convention provenance embedded in every summary: the quantities
/// the device description leaves open and the choices this tool pins.
fn conventions(cfg: &RunConfig) -> serde_json::Value {
    let gamma_x_rule = match cfg.device.gamma_x_spec {
        qdpc_core::GammaXSpec::TwoJ { multiplier } => format!(
            "level-splitting rule: 2J/hbar scaled by {}",
            output::fmt(multiplier)
        ),
        qdpc_core::GammaXSpec::Explicit(rate) => {
            format!("explicit rate {} 1/ns", output::fmt(rate))
        }
    };
    json!({
        "units": {
            "energy": "eV",
            "length": "nm",
            "time": "ns",
            "rate": "1/ns",
            "temperature": "K",
        },
        "E_star_eV": json_f64(cfg.device.e_star),
        "Gamma_beta_b": "electron tunneling rate evaluated at E_star_eV; the drain reset reuses it",
        "gamma_x": gamma_x_rule,
        "energy_reference": "ground level b at zero; pump energy E_x1 equals E_1b_eV",
    })
}

fn run(inv: &Invocation) -> Result<(bool, String), String> {
    let text = match &inv.config_path {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config `{}`: {e}", path.display()))?,
        None => String::new(),
    };
    let cfg = config::parse_with_overrides(&text, &inv.sets).map_err(|e| e.to_string())?;
    let hash = config::config_hash(&cfg);
    let paths = match (&inv.out, inv.experiment.needs_out()) {
        (Some(prefix), _) => Some(OutPaths::new(prefix)),
        (None, false) => None,
        (None, true) => {
            return Err(format!(
                "`{}` writes data files; pass --out <prefix>",
                inv.experiment.name()
            ));
        }
    };

    let mut console = String::new();
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    let mut partial = false;
    let mut summary = json!({
        "tool": "qdpc",
        "experiment": inv.experiment.name(),
        "config_fnv1a": hash,
        "conventions": conventions(&cfg),
        "models": {},
    });

    match inv.experiment {
        Experiment::Rates => {
            let rates = derive_rates(&cfg.device).map_err(|e| e.to_string())?;
            console.push_str(&rates_table(&rates));
            summary["rates"] = rates_json(&rates);
        }
        Experiment::Steady => {
            let rates = derive_rates(&cfg.device).map_err(|e| e.to_string())?;
            for kind in inv.model.kinds() {
                let op = operating_point(kind, &rates, cfg.device.gamma_load)
                    .map_err(|e| e.to_string())?;
                let _ = writeln!(
                    console,
                    "steady model={}: Gamma = {} 1/ns, j = {} e/ns, V = {} V, P = {} eV/ns ({})",
                    kind.label(),
                    output::fmt(op.gamma_load),
                    output::fmt(op.current),
                    output::fmt(op.voltage),
                    output::fmt(op.power),
                    flag_name(op.flag),
                );
                summary["models"][kind.label()] = op_json(&op);
            }
        }
        Experiment::Dynamics => {
            for kind in inv.model.kinds() {
                let traj = population_dynamics(
                    &cfg.device,
                    kind,
                    cfg.t_end_ns,
                    cfg.n_checkpoints,
                    &cfg.solver,
                )
                .map_err(|e| e.to_string())?;
                let drift = traj
                    .states
                    .iter()
                    .map(|s| (s.trace() - 1.0).abs())
                    .fold(0.0_f64, f64::max);
                let _ = writeln!(
                    console,
                    "dynamics model={}: {} checkpoints to {} ns, max |trace-1| = {}, {} steps accepted",
                    kind.label(),
                    traj.times.len() - 1,
                    output::fmt(cfg.t_end_ns),
                    output::fmt(drift),
                    traj.stats.steps_accepted,
                );
                summary["models"][kind.label()] = json!({
                    "t_end_ns": json_f64(cfg.t_end_ns),
                    "checkpoints": traj.times.len() - 1,
                    "final_rho": traj.last().values.iter().map(|&v| json_f64(v)).collect::<Vec<_>>(),
                    "state_labels": PopulationState::labels(kind),
                    "max_abs_trace_drift": json_f64(drift),
                    "solver": {
                        "steps_accepted": traj.stats.steps_accepted,
                        "steps_rejected": traj.stats.steps_rejected,
                        "newton_iterations": traj.stats.newton_iterations,
                        "lu_factorizations": traj.stats.lu_factorizations,
                    },
                });
                if let Some(paths) = &paths {
                    let csv = output::dynamics_csv(&traj, kind, &hash);
                    files.push((paths.experiment_model("dynamics", kind), csv));
                }
            }
        }
        Experiment::Iv => {
            let rates = derive_rates(&cfg.device).map_err(|e| e.to_string())?;
            let grid = log_grid(cfg.gamma_grid_lo, cfg.gamma_grid_hi, cfg.gamma_grid_points);
            let mut peaks: Vec<(ModelKind, Option<PeakPower>)> = Vec::new();
            for kind in inv.model.kinds() {
                let curve = iv_sweep(kind, &rates, &grid);
                let failed = curve.points.iter().filter(|p| p.outcome.is_err()).count();
                partial |= failed > 0;
                let mut entry = json!({
                    "points": curve.points.len(),
                    "failed_points": failed,
                });
                match peak_power(&curve) {
                    Ok(peak) => {
                        let _ = writeln!(
                            console,
                            "iv model={}: grid peak P = {} eV/ns at Gamma = {} 1/ns{}",
                            kind.label(),
                            output::fmt(peak.power),
                            output::fmt(peak.at),
                            if peak.on_boundary { " (on grid edge)" } else { "" },
                        );
                        entry["peak"] = peak_json(&peak);
                        peaks.push((kind, Some(peak)));
                    }
                    Err(e) => {
                        partial = true;
                        let _ = writeln!(console, "iv model={}: no usable points ({e})", kind.label());
                        entry["peak_error"] = json!(e.to_string());
                        peaks.push((kind, None));
                    }
                }
                summary["models"][kind.label()] = entry;
                if let Some(paths) = &paths {
                    let (csv, _) = output::iv_csv(&curve, &hash);
                    files.push((paths.experiment_model("iv", kind), csv));
                }
            }
            let coupled = peaks.iter().find(|(k, _)| *k == ModelKind::Coupled);
            let uncoupled = peaks.iter().find(|(k, _)| *k == ModelKind::Uncoupled);
            if let (Some((_, Some(c))), Some((_, Some(u)))) = (coupled, uncoupled) {
                // Grid-limited ratio of the two sweep peaks; the refined
                // value below re-searches each peak on a wide load range.
                let eta_grid = relative_enhancement(c.power, u.power);
                summary["eta_grid_peak"] = json_f64(eta_grid);
                let _ = writeln!(console, "eta (grid peaks) = {}", output::fmt(eta_grid));
                let refined = enhancement(&cfg.device).map_err(|e| e.to_string())?;
                summary["enhancement_refined"] = enhancement_json(&refined);
                let _ = writeln!(console, "eta (refined) = {}", output::fmt(refined.eta));
            }
        }
        Experiment::SweepGammaX => {
            let points = phonon_rate_sweep(&cfg.device, &cfg.gamma_x_multipliers)
                .map_err(|e| e.to_string())?;
            let mut entries = Vec::new();
            for p in &points {
                match &p.outcome {
                    Ok(eta) => {
                        let _ = writeln!(
                            console,
                            "gamma_x multiplier {}: eta = {}",
                            output::fmt(p.multiplier),
                            output::fmt(*eta),
                        );
                        entries.push(json!({
                            "multiplier": json_f64(p.multiplier),
                            "gamma_x_per_ns": json_f64(p.gamma_x),
                            "eta": json_f64(*eta),
                        }));
                    }
                    Err(reason) => {
                        partial = true;
                        let _ = writeln!(
                            console,
                            "gamma_x multiplier {}: failed ({reason})",
                            output::fmt(p.multiplier),
                        );
                        entries.push(json!({
                            "multiplier": json_f64(p.multiplier),
                            "gamma_x_per_ns": json_f64(p.gamma_x),
                            "failed": reason,
                        }));
                    }
                }
            }
            summary["points"] = json!(entries);
            if let Some(paths) = &paths {
                let (csv, _) = output::phonon_csv(&points, &hash);
                files.push((paths.experiment("sweep-gamma-x"), csv));
            }
        }
        Experiment::SweepGeometry => {
            let d_axis = linspace(cfg.d_perp_min, cfg.d_perp_max, cfg.d_perp_points);
            let w_axis = linspace(cfg.w_br_min, cfg.w_br_max, cfg.w_br_points);
            let cells = geometry_sweep(&cfg.device, &d_axis, &w_axis);
            let failed = cells.iter().filter(|c| c.outcome.is_err()).count();
            partial |= failed > 0;
            summary["axes"] = json!({
                "d_perp_nm": d_axis.iter().map(|&v| json_f64(v)).collect::<Vec<_>>(),
                "w_br_nm": w_axis.iter().map(|&v| json_f64(v)).collect::<Vec<_>>(),
            });
            summary["failed_cells"] = json!(failed);
            let best = cells
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.outcome.as_ref().ok().map(|&eta| (i, eta)))
                .max_by(|a, b| a.1.total_cmp(&b.1));
            match best {
                Some((idx, eta)) => {
                    let cols = w_axis.len();
                    let (row, col) = (idx / cols, idx % cols);
                    let on_boundary = (d_axis.len() > 1 && (row == 0 || row == d_axis.len() - 1))
                        || (cols > 1 && (col == 0 || col == cols - 1));
                    let _ = writeln!(
                        console,
                        "best eta = {} at d_perp = {} nm, w_br = {} nm{}",
                        output::fmt(eta),
                        output::fmt(cells[idx].d_perp),
                        output::fmt(cells[idx].w_br),
                        if on_boundary { " (on scan boundary)" } else { "" },
                    );
                    if failed > 0 {
                        let _ = writeln!(console, "{failed} of {} cells failed", cells.len());
                    }
                    summary["best"] = json!({
                        "d_perp_nm": json_f64(cells[idx].d_perp),
                        "w_br_nm": json_f64(cells[idx].w_br),
                        "eta": json_f64(eta),
                        "on_scan_boundary": on_boundary,
                    });
                }
                None => {
                    partial = true;
                    let _ = writeln!(console, "no geometry cell produced a valid enhancement");
                    summary["best"] = serde_json::Value::Null;
                }
            }
            if let Some(paths) = &paths {
                let (csv, _) = output::geometry_csv(&cells, &hash);
                files.push((paths.experiment("sweep-geometry"), csv));
            }
        }
    }

    if let Some(paths) = &paths {
        files.insert(0, (paths.config(), config::serialize_config(&cfg)));
        let mut summary_text =
            serde_json::to_string_pretty(&summary).expect("summary serializes");
        summary_text.push('\n');
        files.push((paths.summary(), summary_text));
        for (path, content) in &files {
            output::write_text(path, content)
                .map_err(|e| format!("cannot write `{}`: {e}", path.display()))?;
        }
    }

    Ok((partial, console))
}
