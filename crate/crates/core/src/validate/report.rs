use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ValidateError;
use crate::correctors::OrderFit;
use crate::whitham::Classification;

/// Largest relative change of each conserved quantity over a CNLS run.
/// Momentum and Hamiltonian are measured against `max(|I(0)|, total mass)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub mass1: f64,
    pub mass2: f64,
    pub momentum: f64,
    pub hamiltonian: f64,
}

/// One `ε` of a validity experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsRun {
    pub eps: f64,
    pub nu: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub err_sup: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matching_error: Option<f64>,
    /// Distance to a rerun at `dt/4` on twice the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_error: Option<f64>,
    /// Distance between the full and the shortened Richardson ladders.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_spread: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift: Option<Drift>,
}

impl EpsRun {
    pub fn failed(eps: f64, nu: f64, why: String) -> Self {
        Self {
            eps,
            nu,
            err_sup: None,
            failure: Some(why),
            matching_error: None,
            solver_error: None,
            beta_spread: None,
            drift: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripMonitorOutcome {
    pub eta: f64,
    pub lifespan: f64,
    pub horizon: f64,
    pub radius: f64,
    pub max_norm: f64,
    pub algebra_constant: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub experiment: String,
    pub order_n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_b: Option<f64>,
    pub classification: Classification,
    /// Hyperbolic runs are gated; elliptic and mixed ones are reported only.
    pub gated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_order: Option<f64>,
    pub tolerance: f64,
    pub complete: bool,
    pub monotone: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<OrderFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monitor: Option<StripMonitorOutcome>,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub runs: Vec<EpsRun>,
}

impl ValidityReport {
    /// What the exit code reflects: a failed check only counts on gated runs.
    pub fn gate_ok(&self) -> bool {
        self.passed || !self.gated
    }

    /// `(ε, err)` of the completed runs, in run order.
    pub fn completed(&self) -> Vec<(f64, f64)> {
        self.runs.iter().filter_map(|r| r.err_sup.map(|e| (r.eps, e))).collect()
    }
}

/// Local slopes between consecutive completed runs.
pub fn partial_orders(points: &[(f64, f64)]) -> Vec<Option<f64>> {
    let mut out = vec![None; points.len()];
    for k in 1..points.len() {
        let (e0, a) = points[k - 1];
        let (e1, b) = points[k];
        if a > 0.0 && b > 0.0 {
            out[k] = Some((b / a).ln() / (e1 / e0).ln());
        }
    }
    out
}

pub fn errors_csv(report: &ValidityReport) -> String {
    let pts = report.completed();
    let mut out = String::from("eps,err_sup,order_partial\n");
    for ((eps, err), order) in pts.iter().zip(partial_orders(&pts)) {
        write!(out, "{eps:.16e},{err:.16e},").unwrap();
        if let Some(o) = order {
            write!(out, "{o:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn digest(report: &ValidityReport) -> String {
    let mut s = String::new();
    writeln!(s, "experiment: {}", report.experiment).unwrap();
    writeln!(s, "corrector order: {}", report.order_n).unwrap();
    if let Some(b) = report.phase_b {
        writeln!(s, "window exponent b: {b}").unwrap();
    }
    writeln!(
        s,
        "classification: {}{}",
        report.classification,
        if report.gated { "" } else { " (not gated)" }
    )
    .unwrap();
    for r in &report.runs {
        match (r.err_sup, &r.failure) {
            (Some(e), _) => writeln!(s, "  eps {:<8} err_sup {e:.6e}", r.eps).unwrap(),
            (None, Some(f)) => writeln!(s, "  eps {:<8} failed: {f}", r.eps).unwrap(),
            _ => {}
        }
    }
    if let Some(f) = report.fit {
        write!(s, "fitted order {:.4} (R^2 {:.5})", f.order, f.r2).unwrap();
        if let Some(e) = report.expected_order {
            write!(s, ", expected {e} +/- {}", report.tolerance).unwrap();
        }
        s.push('\n');
    }
    if let Some(m) = report.monitor {
        writeln!(
            s,
            "strip monitor: eta {:.4e}, horizon {:.4e}, max norm {:.6e} vs R {:.6e}",
            m.eta, m.horizon, m.max_norm, m.radius
        )
        .unwrap();
    }
    for c in &report.checks {
        writeln!(s, "[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail).unwrap();
    }
    writeln!(s, "overall: {}", if report.passed { "pass" } else { "FAIL" }).unwrap();
    s
}

/// Writes `errors.csv`, `summary.toml` and `digest.txt` into `dir`.
pub fn emit_report(report: &ValidityReport, dir: &Path) -> Result<(), ValidateError> {
    let io = |e: std::io::Error| ValidateError::Io(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    fs::write(dir.join("errors.csv"), errors_csv(report)).map_err(io)?;
    let summary = toml::to_string(report).map_err(|e| ValidateError::Io(e.to_string()))?;
    fs::write(dir.join("summary.toml"), summary).map_err(io)?;
    fs::write(dir.join("digest.txt"), digest(report)).map_err(io)
}
