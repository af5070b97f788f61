//! Fixed-width sequential confidence intervals for the Gini index.
//!
//! The crate is organised bottom-up:
//!
//! * [`estimator`] maintains the sample Gini index, the Gini mean
//!   difference and the plug-in asymptotic variance `V²ₙ` incrementally.
//! * [`sequential`] implements the pilot-size rule and the stopping rule
//!   `n ≥ (z_{α/2}/d)²(V²ₙ + 1/n)`.
//! * [`source`] supplies observations from seeded samplers or text files.
//! * [`oracle`] provides brute-force and population ground truth.
//! * [`harness`] replicates the procedure many times and summarises
//!   stopping times and coverage.

pub mod error;
pub mod estimator;
pub mod harness;
pub mod oracle;
pub mod quadrature;
pub mod sequential;
pub mod source;

pub use error::{Error, Result};
pub use estimator::{RunningState, StatisticsSnapshot};
pub use harness::{
    format_report, format_reports, run_experiment, ExperimentConfig, ReportStyle, SimulationReport,
};
pub use oracle::{
    brute_force_statistics, population_params, true_gini, true_params, TruePopulationParams,
};
pub use sequential::{
    optimal_c, pilot_size, run_sequential, should_stop, z_quantile, SequentialResult,
    StoppingConfig,
};
pub use source::{
    derive_stream, open_file_source, DistributionSpec, FileFormat, FileSource, IterSource,
    ObservationSource, SampleStream, SeedSpec,
};
