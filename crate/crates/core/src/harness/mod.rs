//! Ensemble experiments: stochastic kinetic-limit comparison, deterministic
//! flatness, persistence and plots, all driven by one JSON config.

mod compare;
mod config;
mod ensemble;
mod fluct;
mod output;
mod svg;

pub use compare::{
    census_summary, compare_theorem1, flatness_theorem2, kinetic_on_cells, run_kinetic,
    sample_check, simulate, CellRow, CensusSummary, ComparisonReport, KineticRecord,
    KineticReport, Outcome, Report, SampleCheckReport, TimeRow,
};
pub use config::{
    BudgetTerms, CoarseSection, ExperimentConfig, ExperimentKind, ExperimentPlan, FormKind,
    GridSection, InitKind, KineticSection, OutputSection, PhysicsSection, RunSection,
};
pub use ensemble::{run_ensemble, RawTable, Welford};
pub use fluct::{cell_ids, compute_fluctuations, CellId, FluctuationSeries};
pub use output::{
    emit_outputs, fluctuations_csv, kinetic_csv, modes_csv, plot_from_dir, render_svgs, Manifest,
    FLUCTUATIONS_HEADER, KINETIC_HEADER, MODES_HEADER,
};
pub use svg::{heatmap, line_chart, Series};

use thiserror::Error;

use crate::census::CensusError;
use crate::dynamics::DynamicsError;
use crate::freq::FreqError;
use crate::kinetic::KineticError;
use crate::measures::MeasureError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("cannot parse: {0}")]
    Parse(String),
    #[error("member {member} failed: {source}")]
    Member { member: u64, source: DynamicsError },
    #[error(transparent)]
    Freq(#[from] FreqError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Kinetic(#[from] KineticError),
    #[error(transparent)]
    Census(#[from] CensusError),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    /// Config and input problems, as opposed to failures while running.
    pub fn is_validation(&self) -> bool {
        matches!(self, HarnessError::Validation(_) | HarnessError::Parse(_))
    }
}
