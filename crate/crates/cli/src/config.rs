//! Strict `key = value` run configuration.
//!
//! The format is line-based: blank lines and `#` comments are skipped, and
//! every other line must read `key = value`. Dimensioned keys carry their
//! unit as a suffix (`w_d_nm`, `Gamma_load_per_ns`) so a file cannot
//! silently mix conventions; a known quantity spelled without its unit is
//! rejected with the expected spelling, and unknown or duplicated keys are
//! errors. An empty document resolves to the reference device with default
//! solver and grid settings.
//!
//! [`serialize_config`] emits a canonical echo of the resolved settings.
//! Floats print in shortest round-trip form, so
//! `parse_config(&serialize_config(cfg))` reproduces `cfg` exactly, and the
//! FNV-1a hash of that text identifies the run in every output file.

use std::collections::HashSet;
use std::fmt;

use qdpc_core::{DeviceParams, GammaXSpec, SolverConfig};

/// Line number used for `--set` overrides in error reports.
const OVERRIDE_LINE: usize = usize::MAX;
/// Line number used for whole-document consistency checks.
const DOCUMENT_LINE: usize = 0;

/// Fully resolved run settings: device, solver, and sweep grids.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub device: DeviceParams,
    pub solver: SolverConfig,
    /// Dynamics horizon in ns; checkpoints are log-spaced from 1e-6 ns.
    pub t_end_ns: f64,
    pub n_checkpoints: usize,
    /// Load-rate grid for the current-voltage sweep, in 1/ns.
    pub gamma_grid_lo: f64,
    pub gamma_grid_hi: f64,
    pub gamma_grid_points: usize,
    /// Multipliers scanned by the transfer-rate sweep.
    pub gamma_x_multipliers: Vec<f64>,
    /// Geometry scan axes: stacking distance and barrier thickness, in nm.
    pub d_perp_min: f64,
    pub d_perp_max: f64,
    pub d_perp_points: usize,
    pub w_br_min: f64,
    pub w_br_max: f64,
    pub w_br_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            device: DeviceParams::default(),
            solver: SolverConfig::default(),
            t_end_ns: 200.0,
            n_checkpoints: 60,
            gamma_grid_lo: 1e-4,
            gamma_grid_hi: 1e3,
            gamma_grid_points: 60,
            gamma_x_multipliers: vec![0.01, 0.1, 0.5, 1.0, 2.0, 4.0],
            d_perp_min: 1.0,
            d_perp_max: 4.0,
            d_perp_points: 8,
            w_br_min: 0.2,
            w_br_max: 1.5,
            w_br_points: 8,
        }
    }
}

/// Why a config document was rejected. `line` is 1-based for file content,
/// [`OVERRIDE_LINE`] for `--set` pairs, and 0 for whole-document checks.
#[derive(Clone, Debug, PartialEq)]
pub enum ConfigError {
    Parse { line: usize, message: String },
    UnknownKey { line: usize, key: String },
    UnitMismatch { line: usize, key: String, expected: String },
}

fn locate(line: usize) -> String {
    match line {
        DOCUMENT_LINE => "config".to_string(),
        OVERRIDE_LINE => "--set override".to_string(),
        n => format!("line {n}"),
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, message } => write!(f, "{}: {message}", locate(*line)),
            ConfigError::UnknownKey { line, key } => {
                write!(f, "{}: unknown key `{key}`", locate(*line))
            }
            ConfigError::UnitMismatch { line, key, expected } => write!(
                f,
                "{}: key `{key}` is missing its unit suffix, write `{expected}`",
                locate(*line)
            ),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Keys that would be ambiguous without a unit, mapped to their required
/// spelling. Matching a bare stem yields [`ConfigError::UnitMismatch`]
/// instead of a generic unknown-key report.
const UNIT_SUFFIXED: &[(&str, &str)] = &[
    ("E_g", "E_g_eV"),
    ("delta_E_c", "delta_E_c_eV"),
    ("delta_E_v", "delta_E_v_eV"),
    ("w_d", "w_d_nm"),
    ("F_d", "F_d_V_per_nm"),
    ("F_br", "F_br_V_per_nm"),
    ("T_a", "T_a_K"),
    ("E_1b", "E_1b_eV"),
    ("w_br", "w_br_nm"),
    ("d_perp", "d_perp_nm"),
    ("E_star", "E_star_eV"),
    ("Gamma_load", "Gamma_load_per_ns"),
    ("h_init", "h_init_ns"),
    ("h_min", "h_min_ns"),
    ("t_end", "t_end_ns"),
    ("Gamma_grid_lo", "Gamma_grid_lo_per_ns"),
    ("Gamma_grid_hi", "Gamma_grid_hi_per_ns"),
    ("d_perp_min", "d_perp_min_nm"),
    ("d_perp_max", "d_perp_max_nm"),
    ("w_br_min", "w_br_min_nm"),
    ("w_br_max", "w_br_max_nm"),
];

fn classify_unknown(key: &str, line: usize) -> ConfigError {
    for (bare, suffixed) in UNIT_SUFFIXED {
        if key == *bare {
            return ConfigError::UnitMismatch {
                line,
                key: key.to_string(),
                expected: (*suffixed).to_string(),
            };
        }
    }
    ConfigError::UnknownKey { line, key: key.to_string() }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_with_overrides(text, &[])
}

/// Parse `text`, then apply `--set` style `key=value` pairs under the same
/// key rules. Overrides may repeat file keys (that is their purpose) and
/// apply in order; duplicates inside the file itself are rejected.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut pairs: Vec<(String, String, usize)> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::Parse { line: line_no, message: "empty key".to_string() });
        }
        if !seen.insert(key.clone()) {
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("duplicate key `{key}`"),
            });
        }
        pairs.push((key, value, line_no));
    }
    for item in overrides {
        let Some((key, value)) = item.split_once('=') else {
            return Err(ConfigError::Parse {
                line: OVERRIDE_LINE,
                message: format!("expected `key=value`, got `{item}`"),
            });
        };
        pairs.push((key.trim().to_string(), value.trim().to_string(), OVERRIDE_LINE));
    }
    build(pairs)
}

/// How `gamma_x` was written, before pairing it with a possible multiplier.
enum GammaXRaw {
    TwoJ,
    Explicit(f64),
}

fn build(pairs: Vec<(String, String, usize)>) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut gamma_x: Option<GammaXRaw> = None;
    let mut gamma_x_multiplier: Option<(f64, usize)> = None;

    for (key, value, line) in pairs {
        match key.as_str() {
            "E_g_eV" => cfg.device.e_g = float(&value, line)?,
            "delta_E_c_eV" => cfg.device.delta_e_c = float(&value, line)?,
            "delta_E_v_eV" => cfg.device.delta_e_v = float(&value, line)?,
            "m_e_eff" => cfg.device.m_e_eff = float(&value, line)?,
            "m_h_eff" => cfg.device.m_h_eff = float(&value, line)?,
            "eps_r" => cfg.device.eps_r = float(&value, line)?,
            "w_d_nm" => cfg.device.w_d = float(&value, line)?,
            "F_d_V_per_nm" => cfg.device.f_d = float(&value, line)?,
            "F_br_V_per_nm" => cfg.device.f_br = float(&value, line)?,
            "chi" => cfg.device.chi = float(&value, line)?,
            "T_a_K" => cfg.device.t_a = float(&value, line)?,
            "E_1b_eV" => cfg.device.e_1b = float(&value, line)?,
            "n_h" => cfg.device.n_h = float(&value, line)?,
            "w_br_nm" => cfg.device.w_br = float(&value, line)?,
            "d_perp_nm" => cfg.device.d_perp = float(&value, line)?,
            "dipole_fraction" => cfg.device.dipole_fraction = float(&value, line)?,
            "E_star_eV" => cfg.device.e_star = float(&value, line)?,
            "Gamma_load_per_ns" => cfg.device.gamma_load = float(&value, line)?,
            "gamma_x" => {
                gamma_x = Some(if value == "2J" {
                    GammaXRaw::TwoJ
                } else {
                    GammaXRaw::Explicit(float(&value, line)?)
                });
            }
            "gamma_x_multiplier" => gamma_x_multiplier = Some((float(&value, line)?, line)),
            "rel_tol" => cfg.solver.rel_tol = float(&value, line)?,
            "abs_tol" => cfg.solver.abs_tol = float(&value, line)?,
            "newton_tol" => cfg.solver.newton_tol = float(&value, line)?,
            "max_newton_iters" => cfg.solver.max_newton_iters = integer(&value, line)?,
            "h_init_ns" => cfg.solver.h_init = float(&value, line)?,
            "h_min_ns" => cfg.solver.h_min = float(&value, line)?,
            "max_steps" => cfg.solver.max_steps = integer(&value, line)?,
            "t_end_ns" => cfg.t_end_ns = float(&value, line)?,
            "n_checkpoints" => cfg.n_checkpoints = integer(&value, line)?,
            "Gamma_grid_lo_per_ns" => cfg.gamma_grid_lo = float(&value, line)?,
            "Gamma_grid_hi_per_ns" => cfg.gamma_grid_hi = float(&value, line)?,
            "Gamma_grid_points" => cfg.gamma_grid_points = integer(&value, line)?,
            "gamma_x_multipliers" => cfg.gamma_x_multipliers = float_list(&value, line)?,
            "d_perp_min_nm" => cfg.d_perp_min = float(&value, line)?,
            "d_perp_max_nm" => cfg.d_perp_max = float(&value, line)?,
            "d_perp_points" => cfg.d_perp_points = integer(&value, line)?,
            "w_br_min_nm" => cfg.w_br_min = float(&value, line)?,
            "w_br_max_nm" => cfg.w_br_max = float(&value, line)?,
            "w_br_points" => cfg.w_br_points = integer(&value, line)?,
            _ => return Err(classify_unknown(&key, line)),
        }
    }

    cfg.device.gamma_x_spec = match (gamma_x, gamma_x_multiplier) {
        (None, None) => cfg.device.gamma_x_spec,
        (Some(GammaXRaw::TwoJ), None) => GammaXSpec::TwoJ { multiplier: 1.0 },
        // A multiplier alone scales the default splitting-pinned rule.
        (None, Some((m, _))) => GammaXSpec::TwoJ { multiplier: m },
        (Some(GammaXRaw::TwoJ), Some((m, _))) => GammaXSpec::TwoJ { multiplier: m },
        (Some(GammaXRaw::Explicit(rate)), None) => GammaXSpec::Explicit(rate),
        (Some(GammaXRaw::Explicit(_)), Some((_, line))) => {
            return Err(ConfigError::Parse {
                line,
                message: "gamma_x_multiplier only applies when gamma_x = 2J".to_string(),
            });
        }
    };

    check_document(&cfg)?;
    Ok(cfg)
}

/// Cross-field sanity checks that no single line can establish.
fn check_document(cfg: &RunConfig) -> Result<(), ConfigError> {
    let doc = |message: String| ConfigError::Parse { line: DOCUMENT_LINE, message };
    if !(cfg.t_end_ns > 1e-6) {
        return Err(doc(format!(
            "t_end_ns must exceed 0.000001 (the first checkpoint), got {}",
            cfg.t_end_ns
        )));
    }
    if cfg.n_checkpoints < 2 {
        return Err(doc("n_checkpoints must be at least 2".to_string()));
    }
    if !(cfg.gamma_grid_lo > 0.0 && cfg.gamma_grid_hi > cfg.gamma_grid_lo) {
        return Err(doc(format!(
            "load grid requires 0 < Gamma_grid_lo_per_ns < Gamma_grid_hi_per_ns, got {} and {}",
            cfg.gamma_grid_lo, cfg.gamma_grid_hi
        )));
    }
    if cfg.gamma_grid_points < 2 {
        return Err(doc("Gamma_grid_points must be at least 2".to_string()));
    }
    if cfg.gamma_x_multipliers.is_empty() {
        return Err(doc("gamma_x_multipliers must not be empty".to_string()));
    }
    for axis in [
        ("d_perp", cfg.d_perp_min, cfg.d_perp_max, cfg.d_perp_points),
        ("w_br", cfg.w_br_min, cfg.w_br_max, cfg.w_br_points),
    ] {
        let (name, lo, hi, points) = axis;
        if !(lo > 0.0 && hi >= lo) {
            return Err(doc(format!(
                "{name} axis requires 0 < min <= max, got {lo} and {hi}"
            )));
        }
        if points == 0 || (points == 1 && hi > lo) {
            return Err(doc(format!("{name}_points too small for the axis span")));
        }
    }
    Ok(())
}

fn float(value: &str, line: usize) -> Result<f64, ConfigError> {
    let v: f64 = value.parse().map_err(|_| ConfigError::Parse {
        line,
        message: format!("expected a number, got `{value}`"),
    })?;
    if !v.is_finite() {
        return Err(ConfigError::Parse {
            line,
            message: format!("value must be finite, got `{value}`"),
        });
    }
    Ok(v)
}

fn integer(value: &str, line: usize) -> Result<usize, ConfigError> {
    value.parse().map_err(|_| ConfigError::Parse {
        line,
        message: format!("expected a non-negative integer, got `{value}`"),
    })
}

fn float_list(value: &str, line: usize) -> Result<Vec<f64>, ConfigError> {
    if value.trim().is_empty() {
        return Err(ConfigError::Parse {
            line,
            message: "expected a comma-separated list of numbers".to_string(),
        });
    }
    value.split(',').map(|item| float(item.trim(), line)).collect()
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Canonical echo of the resolved settings, one key per line in fixed
/// order. Parsing this text reproduces the config exactly.
pub fn serialize_config(cfg: &RunConfig) -> String {
    let d = &cfg.device;
    let s = &cfg.solver;
    let mut out = String::from("# resolved run configuration\n");
    {
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("E_g_eV", fmt_f64(d.e_g));
        kv("delta_E_c_eV", fmt_f64(d.delta_e_c));
        kv("delta_E_v_eV", fmt_f64(d.delta_e_v));
        kv("m_e_eff", fmt_f64(d.m_e_eff));
        kv("m_h_eff", fmt_f64(d.m_h_eff));
        kv("eps_r", fmt_f64(d.eps_r));
        kv("w_d_nm", fmt_f64(d.w_d));
        kv("F_d_V_per_nm", fmt_f64(d.f_d));
        kv("F_br_V_per_nm", fmt_f64(d.f_br));
        kv("chi", fmt_f64(d.chi));
        kv("T_a_K", fmt_f64(d.t_a));
        kv("E_1b_eV", fmt_f64(d.e_1b));
        kv("n_h", fmt_f64(d.n_h));
        kv("w_br_nm", fmt_f64(d.w_br));
        kv("d_perp_nm", fmt_f64(d.d_perp));
        kv("dipole_fraction", fmt_f64(d.dipole_fraction));
        kv("E_star_eV", fmt_f64(d.e_star));
        kv("Gamma_load_per_ns", fmt_f64(d.gamma_load));
        match d.gamma_x_spec {
            GammaXSpec::TwoJ { multiplier } => {
                kv("gamma_x", "2J".to_string());
                kv("gamma_x_multiplier", fmt_f64(multiplier));
            }
            GammaXSpec::Explicit(rate) => kv("gamma_x", fmt_f64(rate)),
        }
        kv("rel_tol", fmt_f64(s.rel_tol));
        kv("abs_tol", fmt_f64(s.abs_tol));
        kv("newton_tol", fmt_f64(s.newton_tol));
        kv("max_newton_iters", s.max_newton_iters.to_string());
        kv("h_init_ns", fmt_f64(s.h_init));
        kv("h_min_ns", fmt_f64(s.h_min));
        kv("max_steps", s.max_steps.to_string());
        kv("t_end_ns", fmt_f64(cfg.t_end_ns));
        kv("n_checkpoints", cfg.n_checkpoints.to_string());
        kv("Gamma_grid_lo_per_ns", fmt_f64(cfg.gamma_grid_lo));
        kv("Gamma_grid_hi_per_ns", fmt_f64(cfg.gamma_grid_hi));
        kv("Gamma_grid_points", cfg.gamma_grid_points.to_string());
        kv(
            "gamma_x_multipliers",
            cfg.gamma_x_multipliers.iter().map(|&m| fmt_f64(m)).collect::<Vec<_>>().join(","),
        );
        kv("d_perp_min_nm", fmt_f64(cfg.d_perp_min));
        kv("d_perp_max_nm", fmt_f64(cfg.d_perp_max));
        kv("d_perp_points", cfg.d_perp_points.to_string());
        kv("w_br_min_nm", fmt_f64(cfg.w_br_min));
        kv("w_br_max_nm", fmt_f64(cfg.w_br_max));
        kv("w_br_points", cfg.w_br_points.to_string());
    }
    out
}

/// 64-bit FNV-1a of arbitrary bytes, as fixed-width lowercase hex.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

/// Hash that identifies a resolved config in output provenance lines.
pub fn config_hash(cfg: &RunConfig) -> String {
    fnv1a_hex(serialize_config(cfg).as_bytes())
}
