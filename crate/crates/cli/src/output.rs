//! Deterministic serialization of experiment results.
//!
//! Every file is assembled as a single string and written once. CSVs start
//! with `#` provenance comments (tool, experiment, resolved-config hash)
//! and contain no timestamps, so reruns with the same config produce
//! byte-identical files. Failed sweep rows keep their axis columns and
//! carry the reason in the trailing flag column; no unflagged NaN or Inf
//! leaves the process.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use qdpc_core::experiments::{GeometryCell, PhononPoint};
use qdpc_core::{IVCurve, ModelKind, PointFlag, Trajectory};

/// Shortest round-trip decimal form, shared by every writer.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}

/// JSON value for a float. Non-finite values become strings so the summary
/// stays valid JSON while still flagging the special value.
pub fn json_f64(v: f64) -> serde_json::Value {
    match serde_json::Number::from_f64(v) {
        Some(n) => serde_json::Value::Number(n),
        None => serde_json::Value::String(fmt(v)),
    }
}

/// Failure text embedded in a CSV cell: separators collapse to `;`.
fn flag_text(reason: &str) -> String {
    reason.replace([',', '\n', '\r'], ";")
}

fn provenance(experiment: &str, model: Option<ModelKind>, hash: &str) -> String {
    let mut s = String::from("# qdpc ");
    s.push_str(experiment);
    if let Some(kind) = model {
        s.push_str(" model=");
        s.push_str(kind.label());
    }
    s.push_str("\n# config_fnv1a = ");
    s.push_str(hash);
    s.push('\n');
    s
}

/// Population trajectory as CSV. The column names cover both variants: the
/// first two states are the delocalized pair when coupled and the bare dot
/// excitations otherwise.
pub fn dynamics_csv(traj: &Trajectory, kind: ModelKind, hash: &str) -> String {
    let mut s = provenance("dynamics", Some(kind), hash);
    s.push_str("t_ns,rho_x1|a1,rho_x2|a2,rho_alpha,rho_beta,rho_b\n");
    for (t, state) in traj.times.iter().zip(&traj.states) {
        s.push_str(&fmt(*t));
        for v in state.values {
            s.push(',');
            s.push_str(&fmt(v));
        }
        s.push('\n');
    }
    s
}

/// Load sweep as CSV. Returns the text and whether any point failed.
pub fn iv_csv(curve: &IVCurve, hash: &str) -> (String, bool) {
    let mut s = provenance("iv", Some(curve.kind), hash);
    s.push_str("Gamma_per_ns,V_volts,j_e_per_ns,P_eV_per_ns,P_sun_eV_per_ns,flag\n");
    let mut partial = false;
    for point in &curve.points {
        s.push_str(&fmt(point.gamma_load));
        match &point.outcome {
            Ok(op) => {
                for v in [op.voltage, op.current, op.power, op.power_sun] {
                    s.push(',');
                    s.push_str(&fmt(v));
                }
                s.push(',');
                s.push_str(match op.flag {
                    PointFlag::Nominal => "nominal",
                    PointFlag::OpenCircuit => "open_circuit",
                });
            }
            Err(reason) => {
                partial = true;
                s.push_str(",,,,,failed: ");
                s.push_str(&flag_text(reason));
            }
        }
        s.push('\n');
    }
    (s, partial)
}

/// Transfer-rate sweep as CSV. Returns the text and whether any point failed.
pub fn phonon_csv(points: &[PhononPoint], hash: &str) -> (String, bool) {
    let mut s = provenance("sweep-gamma-x", None, hash);
    s.push_str("multiplier,gamma_x_per_ns,eta,flag\n");
    let mut partial = false;
    for p in points {
        s.push_str(&fmt(p.multiplier));
        s.push(',');
        s.push_str(&fmt(p.gamma_x));
        match &p.outcome {
            Ok(eta) => {
                s.push(',');
                s.push_str(&fmt(*eta));
                s.push_str(",ok");
            }
            Err(reason) => {
                partial = true;
                s.push_str(",,failed: ");
                s.push_str(&flag_text(reason));
            }
        }
        s.push('\n');
    }
    (s, partial)
}

/// Geometry scan as CSV, row-major with stacking distance as the slow
/// axis. Returns the text and whether any cell failed.
pub fn geometry_csv(cells: &[GeometryCell], hash: &str) -> (String, bool) {
    let mut s = provenance("sweep-geometry", None, hash);
    s.push_str("d_perp_nm,w_br_nm,eta,flag\n");
    let mut partial = false;
    for cell in cells {
        s.push_str(&fmt(cell.d_perp));
        s.push(',');
        s.push_str(&fmt(cell.w_br));
        match &cell.outcome {
            Ok(eta) => {
                s.push(',');
                s.push_str(&fmt(*eta));
                s.push_str(",ok");
            }
            Err(reason) => {
                partial = true;
                s.push_str(",,failed: ");
                s.push_str(&flag_text(reason));
            }
        }
        s.push('\n');
    }
    (s, partial)
}

/// File layout under one output prefix.
pub struct OutPaths {
    prefix: String,
}

impl OutPaths {
    pub fn new(prefix: &str) -> Self {
        OutPaths { prefix: prefix.to_string() }
    }

    fn with_suffix(&self, suffix: &str) -> PathBuf {
        PathBuf::from(format!("{}.{suffix}", self.prefix))
    }

    pub fn config(&self) -> PathBuf {
        self.with_suffix("config.txt")
    }

    pub fn summary(&self) -> PathBuf {
        self.with_suffix("summary.json")
    }

    pub fn experiment(&self, name: &str) -> PathBuf {
        self.with_suffix(&format!("{name}.csv"))
    }

    pub fn experiment_model(&self, name: &str, kind: ModelKind) -> PathBuf {
        self.with_suffix(&format!("{name}.{}.csv", kind.label()))
    }
}

/// Write `content` to `path`, creating parent directories as needed.
pub fn write_text(path: &Path, content: &str) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, content)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qdpc_core::{derive_rates, iv_sweep, DeviceParams, ModelKind};

    #[test]
    fn iv_rows_carry_flags_and_finite_axis_values() {
        let rates = derive_rates(&DeviceParams::default()).unwrap();
        let curve = iv_sweep(ModelKind::Coupled, &rates, &[0.0, 0.08]);
        let (text, partial) = iv_csv(&curve, "deadbeefdeadbeef");
        assert!(!partial);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# qdpc iv model=coupled");
        assert_eq!(lines[1], "# config_fnv1a = deadbeefdeadbeef");
        assert_eq!(
            lines[2],
            "Gamma_per_ns,V_volts,j_e_per_ns,P_eV_per_ns,P_sun_eV_per_ns,flag"
        );
        assert!(lines[3].starts_with("0,inf,0,0,0,open_circuit"), "{}", lines[3]);
        assert!(lines[4].ends_with(",nominal"), "{}", lines[4]);
    }

    #[test]
    fn failure_reasons_cannot_break_the_row_structure() {
        assert_eq!(flag_text("a,b\nc"), "a;b;c");
    }

    #[test]
    fn non_finite_json_values_become_strings() {
        assert_eq!(json_f64(1.5), serde_json::json!(1.5));
        assert_eq!(json_f64(f64::INFINITY), serde_json::json!("inf"));
    }
}
