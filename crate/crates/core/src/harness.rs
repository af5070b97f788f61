//! Monte Carlo replication of the sequential procedure.
//!
//! Replication `i` always draws from `derive_stream(master_seed, i)` and the
//! per-replication results are reduced in index order, so a report depends
//! only on the configuration, never on the number of workers.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::population_params;
use crate::sequential::{run_sequential, SequentialResult, StoppingConfig, DEFAULT_N_MAX};
use crate::source::{DistributionSpec, ObservationSource, SampleStream, SeedSpec};

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_D: f64 = 0.01;
pub const DEFAULT_REPLICATIONS: u64 = 2000;
pub const DEFAULT_SEED: u64 = 42;

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_d() -> f64 {
    DEFAULT_D
}
fn default_replications() -> u64 {
    DEFAULT_REPLICATIONS
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_cap() -> usize {
    DEFAULT_N_MAX
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub distribution: DistributionSpec,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_d")]
    pub d: f64,
    #[serde(default = "default_replications")]
    pub replications: u64,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    /// Worker threads; 0 uses every available core. Never affects results.
    #[serde(default)]
    pub workers: usize,
    /// Hard cap on any single run's sample size.
    #[serde(default = "default_cap")]
    pub n_cap: usize,
}

impl ExperimentConfig {
    pub fn new(distribution: DistributionSpec) -> Self {
        Self {
            distribution,
            alpha: DEFAULT_ALPHA,
            d: DEFAULT_D,
            replications: DEFAULT_REPLICATIONS,
            master_seed: DEFAULT_SEED,
            workers: 0,
            n_cap: DEFAULT_N_MAX,
        }
    }

    pub fn stopping(&self) -> Result<StoppingConfig> {
        StoppingConfig::new(self.alpha, self.d)?.with_n_max(self.n_cap)
    }

    pub fn validate(&self) -> Result<()> {
        self.distribution.validate()?;
        self.stopping()?;
        if self.replications == 0 {
            return Err(Error::InvalidConfig(
                "replications must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Aggregate of many sequential runs, one row of the results table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub distribution: DistributionSpec,
    pub alpha: f64,
    pub d: f64,
    pub replications: u64,
    pub master_seed: u64,
    pub pilot: usize,
    /// Population Gini index used to judge coverage.
    pub true_gini: f64,
    pub xi_sq: f64,
    /// Optimal fixed sample size `C`.
    pub c_opt: u64,
    /// Mean stopping time.
    pub n_bar: f64,
    /// Standard error of `n_bar`.
    pub se_n: f64,
    /// `n_bar / c_opt`
    pub ratio: f64,
    /// Largest stopping time observed.
    pub n_max: usize,
    /// Fraction of intervals containing the true Gini index.
    pub p: f64,
    pub se_p: f64,
}

/// Summary statistics of a batch of completed runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub n_bar: f64,
    pub se_n: f64,
    pub n_max: usize,
    pub p: f64,
    pub se_p: f64,
}

/// Reduces runs in the given order.
pub fn summarize(results: &[SequentialResult], truth: f64) -> RunSummary {
    let r = results.len() as f64;
    let n_bar = results.iter().map(|x| x.n_final as f64).sum::<f64>() / r;
    let se_n = if results.len() > 1 {
        let ss: f64 = results
            .iter()
            .map(|x| (x.n_final as f64 - n_bar).powi(2))
            .sum();
        (ss / (r - 1.0)).sqrt() / r.sqrt()
    } else {
        0.0
    };
    let covered = results.iter().filter(|x| x.covers(truth)).count() as f64;
    let p = covered / r;
    RunSummary {
        n_bar,
        se_n,
        n_max: results.iter().map(|x| x.n_final).max().unwrap_or(0),
        p,
        se_p: (p * (1.0 - p) / r).sqrt(),
    }
}

/// Runs `replications` sequential procedures, replication `i` reading from
/// `make_source(i)`. Results come back in index order; the first failing
/// index aborts the batch.
pub fn run_replications<S, F>(
    stopping: &StoppingConfig,
    replications: u64,
    workers: usize,
    make_source: F,
) -> Result<Vec<SequentialResult>>
where
    S: ObservationSource,
    F: Fn(u64) -> Result<S> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<SequentialResult>> = pool.install(|| {
        (0..replications)
            .into_par_iter()
            .map(|i| make_source(i).and_then(|mut src| run_sequential(&mut src, stopping)))
            .collect()
    });
    outcomes
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|source| Error::Replication {
                index: i as u64,
                source: Box::new(source),
            })
        })
        .collect()
}

/// Reproduces one row of the simulation table.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SimulationReport> {
    config.validate()?;
    let stopping = config.stopping()?;
    let truth = population_params(&config.distribution, config.alpha, config.d)?;
    let results = run_replications(&stopping, config.replications, config.workers, |i| {
        SampleStream::new(&config.distribution, SeedSpec::new(config.master_seed, i))
    })?;
    let summary = summarize(&results, truth.gini);
    Ok(SimulationReport {
        distribution: config.distribution,
        alpha: config.alpha,
        d: config.d,
        replications: config.replications,
        master_seed: config.master_seed,
        pilot: stopping.pilot(),
        true_gini: truth.gini,
        xi_sq: truth.xi_sq,
        c_opt: truth.c_opt,
        n_bar: summary.n_bar,
        se_n: summary.se_n,
        ratio: summary.n_bar / truth.c_opt as f64,
        n_max: summary.n_max,
        p: summary.p,
        se_p: summary.se_p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportStyle {
    Table,
    Csv,
    Json,
}

impl FromStr for ReportStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Self::Table),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidConfig(format!(
                "unknown report style {other:?}"
            ))),
        }
    }
}

pub const CSV_HEADER: &str = "family,param_a,param_b,alpha,d,replications,master_seed,pilot,\
true_gini,xi_sq,c_opt,n_bar,se_n,ratio,n_max,p,se_p";

fn params_of(spec: &DistributionSpec) -> (f64, f64) {
    match *spec {
        DistributionSpec::Gamma { shape, rate } => (shape, rate),
        DistributionSpec::Lognormal { meanlog, sdlog } => (meanlog, sdlog),
        DistributionSpec::Pareto { scale, shape } => (scale, shape),
    }
}

/// Renders a single report.
pub fn format_report(report: &SimulationReport, style: ReportStyle) -> String {
    match style {
        ReportStyle::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        _ => format_reports(std::slice::from_ref(report), style),
    }
}

/// Renders several reports; JSON output is an array.
pub fn format_reports(reports: &[SimulationReport], style: ReportStyle) -> String {
    let mut out = String::new();
    match style {
        ReportStyle::Json => {
            out = serde_json::to_string_pretty(reports).expect("reports serialize");
            out.push('\n');
        }
        ReportStyle::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in reports {
                let (a, b) = params_of(&r.distribution);
                let _ = writeln!(
                    out,
                    "{},{a},{b},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.distribution.family(),
                    r.alpha,
                    r.d,
                    r.replications,
                    r.master_seed,
                    r.pilot,
                    r.true_gini,
                    r.xi_sq,
                    r.c_opt,
                    r.n_bar,
                    r.se_n,
                    r.ratio,
                    r.n_max,
                    r.p,
                    r.se_p
                );
            }
        }
        ReportStyle::Table => {
            let rule = "-".repeat(66);
            let _ = writeln!(
                out,
                "{:<12}{:>12}{:>8}{:>10}{:>10}{:>10}",
                "Distribution", "N̄", "C", "N̄/C", "max(N)", "p"
            );
            let _ = writeln!(
                out,
                "{:<12}{:>12}{:>8}{:>10}{:>10}{:>10}",
                "", "s(N̄)", "", "", "", "s_p"
            );
            out.push_str(&rule);
            out.push('\n');
            for r in reports {
                let _ = writeln!(
                    out,
                    "{:<12}{:>12.3}{:>8}{:>10.4}{:>10}{:>10.4}",
                    r.distribution.label(),
                    r.n_bar,
                    r.c_opt,
                    r.ratio,
                    r.n_max,
                    r.p
                );
                let _ = writeln!(
                    out,
                    "{:<12}{:>12.4}{:>8}{:>10}{:>10}{:>10.4}",
                    "", r.se_n, "", "", "", r.se_p
                );
                out.push_str(&rule);
                out.push('\n');
            }
        }
    }
    out
}
