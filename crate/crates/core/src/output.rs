//! Result files: the rates CSV, the run manifest and the optimizer trace.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::attacker::OptimizationTrace;
use crate::error::{Error, Result};
use crate::harness::{CampaignResult, CampaignSpec};
use crate::scenario::SystemConfig;

pub const CSV_HEADER: &str = "sweep_var,value,attack,receiver,user,rate_mean,rate_ci95,trials";
pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// 12 significant digits, scientific notation.
fn fmt_rate(x: f64) -> String {
    format!("{x:.11e}")
}

/// Results as CSV text. Per-user rows use the 1-based user index, the
/// system sum rate uses `sum`.
pub fn results_csv(result: Option<&CampaignResult>) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    let Some(result) = result else {
        return out;
    };
    let var = result.sweep_var.name();
    for cell in &result.cells {
        let attack = cell.scheme.attack.to_string();
        let receiver = cell.scheme.receiver.label();
        let rows = cell
            .users
            .iter()
            .enumerate()
            .map(|(k, s)| ((k + 1).to_string(), s))
            .chain(std::iter::once(("sum".to_string(), &cell.system)));
        for (user, stat) in rows {
            let _ = writeln!(
                out,
                "{var},{},{attack},{receiver},{user},{},{},{}",
                cell.value,
                fmt_rate(stat.mean),
                fmt_rate(stat.ci95),
                stat.trials
            );
        }
    }
    out
}

/// Everything needed to reproduce a run.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_digest: String,
    pub results_digest: String,
    pub seed: u64,
    pub trials: usize,
    pub sweep: String,
    pub schemes: Vec<String>,
    pub pinv_fallbacks: usize,
    pub degenerate_svd: usize,
    pub config: SystemConfig,
}

impl Manifest {
    pub fn new(cfg: &SystemConfig, spec: &CampaignSpec, result: &CampaignResult, csv: &str) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest: result.config_digest.clone(),
            results_digest: hex::encode(Sha256::digest(csv.as_bytes())),
            seed: cfg.seed,
            trials: spec.trials,
            sweep: spec.sweep.to_string(),
            schemes: spec.schemes.iter().map(|s| s.to_string()).collect(),
            pinv_fallbacks: result.pinv_fallbacks,
            degenerate_svd: result.degenerate_svd,
            config: cfg.clone(),
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `results.csv` and `manifest.json` into `out_dir`, creating it if needed.
pub fn emit_results(
    cfg: &SystemConfig,
    spec: &CampaignSpec,
    result: &CampaignResult,
    out_dir: impl AsRef<Path>,
) -> Result<(PathBuf, PathBuf)> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = results_csv(Some(result));
    let manifest = Manifest::new(cfg, spec, result, &csv);
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    let csv_path = dir.join(RESULTS_FILE);
    let manifest_path = dir.join(MANIFEST_FILE);
    write(&csv_path, &csv)?;
    write(&manifest_path, &json)?;
    Ok((csv_path, manifest_path))
}

pub fn trace_csv(trace: &OptimizationTrace) -> String {
    let mut out = String::from("iteration,objective\n");
    for (t, f) in trace.objective.iter().enumerate() {
        let _ = writeln!(out, "{},{}", t + 1, fmt_rate(*f));
    }
    out
}

pub fn write_trace(trace: &OptimizationTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    write(path, &trace_csv(trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_results_are_header_only() {
        assert_eq!(results_csv(None), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn rates_use_twelve_significant_digits() {
        assert_eq!(fmt_rate(8.79), "8.79000000000e0");
        assert_eq!(fmt_rate(1.0 / 3.0), "3.33333333333e-1");
    }

    #[test]
    fn trace_rows() {
        let trace = OptimizationTrace {
            objective: vec![1.0, 2.5],
            step: 0.1,
            iterations_run: 1,
            max_modulus_error: 0.0,
            zero_operator: false,
        };
        assert_eq!(trace_csv(&trace), "iteration,objective\n1,1.00000000000e0\n2,2.50000000000e0\n");
    }

    #[test]
    fn io_errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let trace = OptimizationTrace {
            objective: vec![],
            step: 0.0,
            iterations_run: 0,
            max_modulus_error: 0.0,
            zero_operator: false,
        };
        let err = write_trace(&trace, blocker.join("trace.csv")).unwrap_err();
        assert!(err.to_string().contains("file"));
    }
}
