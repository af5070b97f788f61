//! `gini-seq`: sequential fixed-width confidence intervals for the Gini index.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 data ran out before
//! the stopping rule fired, 4 malformed or invalid data, 5 Gini undefined
//! (zero mean), 6 hard sample-size cap reached, 7 invalid configuration or
//! unmet moment condition.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gini_seq::sequential::DEFAULT_N_MAX;
use gini_seq::{
    format_reports, run_experiment, run_sequential, true_params, DistributionSpec, Error,
    ExperimentConfig, FileFormat, FileSource, ReportStyle, StoppingConfig,
};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "gini-seq",
    version,
    about = "Sequential fixed-width confidence intervals for the Gini index"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the stopping rule over observed data.
    Estimate(EstimateArgs),
    /// Replicate the procedure on simulated data and summarise.
    Simulate(SimulateArgs),
    /// Population Gini, variance components and optimal sample size.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// Numeric file (comma or whitespace separated); `-` or absent reads stdin.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Miscoverage level; the interval has confidence 1 - alpha.
    #[arg(long)]
    alpha: f64,
    /// Interval half-width.
    #[arg(long)]
    d: f64,
    /// Skip the first line of the input.
    #[arg(long)]
    header: bool,
    /// Give up after this many observations.
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    n_max: usize,
    /// Report every stopping-rule evaluation.
    #[arg(long)]
    trace: bool,
    #[arg(long, value_enum, default_value_t = EstimateFormat::Text)]
    format: EstimateFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimateFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Gamma,
    Lognormal,
    Pareto,
    All,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::Gamma => "gamma",
            Family::Lognormal => "lognormal",
            Family::Pareto => "pareto",
            Family::All => "all",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Style {
    Table,
    Csv,
    Json,
}

impl From<Style> for ReportStyle {
    fn from(s: Style) -> Self {
        match s {
            Style::Table => ReportStyle::Table,
            Style::Csv => ReportStyle::Csv,
            Style::Json => ReportStyle::Json,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON experiment config; flags given alongside override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Two distribution parameters: gamma shape,rate; lognormal meanlog,sdlog; pareto scale,shape.
    #[arg(long, value_delimiter = ',')]
    params: Option<Vec<f64>>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long, value_enum, default_value_t = Style::Table)]
    format: Style,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long, value_delimiter = ',')]
    params: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    d: f64,
    /// Draws for the Monte Carlo cross-check.
    #[arg(long, default_value_t = gini_seq::oracle::DEFAULT_MC_BUDGET)]
    mc_budget: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Serialize)]
struct EstimateConfig {
    input: String,
    alpha: f64,
    d: f64,
    header: bool,
    n_max: usize,
    trace: bool,
    z: f64,
    pilot: usize,
}

#[derive(Serialize)]
struct OracleConfig {
    distribution: DistributionSpec,
    alpha: f64,
    d: f64,
    mc_budget: usize,
    seed: u64,
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

fn exit_code(error: &Error) -> u8 {
    match error {
        Error::SourceExhausted { .. } => 3,
        Error::Parse { .. } | Error::NegativeValue { .. } | Error::InvalidObservation(_) => 4,
        Error::UndefinedGini => 5,
        Error::CapExceeded { .. } => 6,
        Error::InvalidConfig(_) | Error::MomentExistence(_) | Error::Domain(_) => 7,
        Error::Replication { source, .. } => exit_code(source),
        Error::InsufficientData { .. } | Error::File { .. } | Error::Io(_) => 1,
    }
}

fn echo_config<T: Serialize>(config: &T) {
    let json = serde_json::to_string(config).expect("config serializes");
    eprintln!("config: {json}");
}

fn spec_for(family: Family, params: Option<&[f64]>) -> Result<DistributionSpec, Failure> {
    match params {
        Some(p) => Ok(DistributionSpec::from_parts(family.name(), p)?),
        None => Ok(DistributionSpec::default_for(family.name())?),
    }
}

fn estimate(args: EstimateArgs) -> Result<(), Failure> {
    let stopping = StoppingConfig::new(args.alpha, args.d)?
        .with_n_max(args.n_max)?
        .with_trace(args.trace);
    let format = FileFormat {
        has_header: args.header,
    };
    let input = args
        .input
        .as_ref()
        .filter(|p| p.as_os_str() != "-")
        .map(|p| p.display().to_string());
    echo_config(&EstimateConfig {
        input: input.clone().unwrap_or_else(|| "-".into()),
        alpha: stopping.alpha(),
        d: stopping.d(),
        header: args.header,
        n_max: stopping.n_max(),
        trace: args.trace,
        z: stopping.z(),
        pilot: stopping.pilot(),
    });

    let result = match &input {
        Some(path) => {
            let mut source = gini_seq::open_file_source(path, format)?;
            run_sequential(&mut source, &stopping)
        }
        None => {
            let stdin = io::stdin();
            let mut source = FileSource::from_reader(stdin.lock(), format);
            run_sequential(&mut source, &stopping)
        }
    }?;

    let mut out = String::new();
    match args.format {
        EstimateFormat::Json => {
            out = serde_json::to_string_pretty(&result).expect("result serializes");
            out.push('\n');
        }
        EstimateFormat::Text => {
            use std::fmt::Write as _;
            let _ = writeln!(out, "n\t{}", result.n_final);
            let _ = writeln!(out, "gini\t{}", result.gini);
            let _ = writeln!(out, "interval\t({}, {})", result.ci_low, result.ci_high);
            let _ = writeln!(out, "v_sq\t{}", result.v_sq);
            if !result.trace.is_empty() {
                out.push_str("\nn\tv_sq\tthreshold\n");
                for step in &result.trace {
                    let _ = writeln!(out, "{}\t{}\t{}", step.n, step.v_sq, step.threshold);
                }
            }
        }
    }
    io::stdout().write_all(out.as_bytes())?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let base: Option<ExperimentConfig> = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| Error::File {
                path: path.clone(),
                source,
            })?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?,
            )
        }
        None => None,
    };

    let specs: Vec<DistributionSpec> = match (args.family, base) {
        (Some(Family::All), _) => {
            if args.params.is_some() {
                return Err(Failure::Usage(
                    "--params cannot be combined with --family all".into(),
                ));
            }
            vec![
                DistributionSpec::REFERENCE_GAMMA,
                DistributionSpec::REFERENCE_LOGNORMAL,
                DistributionSpec::REFERENCE_PARETO,
            ]
        }
        (Some(family), _) => vec![spec_for(family, args.params.as_deref())?],
        (None, Some(config)) => match args.params.as_deref() {
            Some(p) => vec![DistributionSpec::from_parts(
                config.distribution.family(),
                p,
            )?],
            None => vec![config.distribution],
        },
        (None, None) => {
            return Err(Failure::Usage(
                "either --family or --config is required".into(),
            ))
        }
    };

    let configs: Vec<ExperimentConfig> = specs
        .into_iter()
        .map(|spec| {
            let mut c = base.unwrap_or_else(|| ExperimentConfig::new(spec));
            c.distribution = spec;
            if let Some(v) = args.alpha {
                c.alpha = v;
            }
            if let Some(v) = args.d {
                c.d = v;
            }
            if let Some(v) = args.reps {
                c.replications = v;
            }
            if let Some(v) = args.seed {
                c.master_seed = v;
            }
            if let Some(v) = args.workers {
                c.workers = v;
            }
            if let Some(v) = args.n_max {
                c.n_cap = v;
            }
            c
        })
        .collect();
    for c in &configs {
        c.validate()?;
        c.distribution.require_fourth_moment()?;
        echo_config(c);
    }

    let reports = configs
        .iter()
        .map(run_experiment)
        .collect::<Result<Vec<_>, _>>()?;
    let text = if reports.len() == 1 {
        gini_seq::format_report(&reports[0], args.format.into())
    } else {
        format_reports(&reports, args.format.into())
    };
    match &args.output {
        Some(path) => fs::write(path, text).map_err(|source| Error::File {
            path: path.clone(),
            source,
        })?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<(), Failure> {
    if args.family == Family::All {
        return Err(Failure::Usage("oracle takes a single family".into()));
    }
    let spec = spec_for(args.family, args.params.as_deref())?;
    echo_config(&OracleConfig {
        distribution: spec,
        alpha: args.alpha,
        d: args.d,
        mc_budget: args.mc_budget,
        seed: args.seed,
    });
    let params = true_params(&spec, args.alpha, args.d, args.mc_budget, args.seed)?;
    let mut text = serde_json::to_string_pretty(&params).expect("params serialize");
    text.push('\n');
    io::stdout().write_all(text.as_bytes())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Simulate(a) => simulate(a),
        Command::Oracle(a) => oracle(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
