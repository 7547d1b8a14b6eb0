//! Validity experiments: CNLS runs from synthesized modulated wavetrains,
//! compared with modulation solutions and their corrections over a ladder
//! of `ε`, plus report emission.

mod config;
mod data;
mod experiments;
mod report;

pub use config::{ExperimentConfig, NuRelation};
pub use data::{initial_data, reconstruct_phase, synthesize_cnls};
pub use experiments::{
    cumulative_integral, run_phase_comparison, run_residual_scaling, run_strip_monitor, run_theorem_c,
    run_theorem_d, setup, ResidualScalingReport, Setup,
};
pub use report::{
    digest, emit_report, errors_csv, partial_orders, Check, Drift, EpsRun, StripMonitorOutcome, ValidityReport,
};

use thiserror::Error;

use crate::cnls::CnlsError;
use crate::correctors::CorrectorError;
use crate::spectral::SpectralError;
use crate::whitham::WhithamError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidateError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Cnls(#[from] CnlsError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Whitham(#[from] WhithamError),
    #[error(transparent)]
    Corrector(#[from] CorrectorError),
    #[error("x = {x} outside the periodized window |x| <= {limit}")]
    WindowExceeded { x: f64, limit: f64 },
    #[error("{0}")]
    Io(String),
}
