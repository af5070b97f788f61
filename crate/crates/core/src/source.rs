//! Observation sources: seeded samplers for the income distributions and
//! line-oriented numeric files.

use std::collections::VecDeque;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Pareto};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::sequential::normal_cdf;

/// Pull-based stream of nonnegative observations.
///
/// `None` signals exhaustion; samplers never return it.
pub trait ObservationSource {
    fn next_observation(&mut self) -> Option<Result<f64>>;
}

impl<S: ObservationSource + ?Sized> ObservationSource for &mut S {
    fn next_observation(&mut self) -> Option<Result<f64>> {
        (**self).next_observation()
    }
}

/// Adapts any `f64` iterator into a source.
#[derive(Debug, Clone)]
pub struct IterSource<I>(I);

impl<I: Iterator<Item = f64>> IterSource<I> {
    pub fn new<T: IntoIterator<IntoIter = I>>(values: T) -> Self {
        IterSource(values.into_iter())
    }
}

impl<I: Iterator<Item = f64>> ObservationSource for IterSource<I> {
    fn next_observation(&mut self) -> Option<Result<f64>> {
        self.0.next().map(Ok)
    }
}

/// Income distribution families with their parameters.
///
/// Serialized as `{"family": "...", "params": {...}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "lowercase")]
pub enum DistributionSpec {
    Gamma {
        shape: f64,
        rate: f64,
    },
    /// Parameters are on the log scale.
    Lognormal {
        meanlog: f64,
        sdlog: f64,
    },
    Pareto {
        scale: f64,
        shape: f64,
    },
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gamma { shape, rate } => write!(f, "gamma(shape={shape}, rate={rate})"),
            Self::Lognormal { meanlog, sdlog } => {
                write!(f, "lognormal(meanlog={meanlog}, sdlog={sdlog})")
            }
            Self::Pareto { scale, shape } => write!(f, "pareto(scale={scale}, shape={shape})"),
        }
    }
}

impl DistributionSpec {
    pub const REFERENCE_GAMMA: Self = Self::Gamma {
        shape: 2.649,
        rate: 0.84,
    };
    pub const REFERENCE_LOGNORMAL: Self = Self::Lognormal {
        meanlog: 2.185,
        sdlog: 0.562,
    };
    pub const REFERENCE_PARETO: Self = Self::Pareto {
        scale: 20000.0,
        shape: 5.0,
    };

    pub fn family(&self) -> &'static str {
        match self {
            Self::Gamma { .. } => "gamma",
            Self::Lognormal { .. } => "lognormal",
            Self::Pareto { .. } => "pareto",
        }
    }

    /// Human-readable family name as used in report tables.
    pub fn label(&self) -> &'static str {
        match self {
            Self::Gamma { .. } => "Gamma",
            Self::Lognormal { .. } => "Log-normal",
            Self::Pareto { .. } => "Pareto",
        }
    }

    /// The default parameterisation of a family by name.
    pub fn default_for(family: &str) -> Result<Self> {
        match family {
            "gamma" => Ok(Self::REFERENCE_GAMMA),
            "lognormal" => Ok(Self::REFERENCE_LOGNORMAL),
            "pareto" => Ok(Self::REFERENCE_PARETO),
            other => Err(Error::InvalidConfig(format!("unknown family {other:?}"))),
        }
    }

    /// Builds a spec from a family name and its two parameters in the
    /// order gamma(shape, rate), lognormal(meanlog, sdlog), pareto(scale, shape).
    pub fn from_parts(family: &str, params: &[f64]) -> Result<Self> {
        let &[a, b] = params else {
            return Err(Error::InvalidConfig(format!(
                "{family} takes exactly two parameters, got {}",
                params.len()
            )));
        };
        let spec = match family {
            "gamma" => Self::Gamma { shape: a, rate: b },
            "lognormal" => Self::Lognormal {
                meanlog: a,
                sdlog: b,
            },
            "pareto" => Self::Pareto { scale: a, shape: b },
            other => return Err(Error::InvalidConfig(format!("unknown family {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Gamma { shape, rate } => shape > 0.0 && rate > 0.0,
            // meanlog may be any real; the others must be positive.
            Self::Lognormal { meanlog, sdlog } => meanlog.is_finite() && sdlog > 0.0,
            Self::Pareto { scale, shape } => scale > 0.0 && shape > 0.0,
        };
        let finite = match *self {
            Self::Gamma { shape: a, rate: b }
            | Self::Lognormal {
                meanlog: a,
                sdlog: b,
            }
            | Self::Pareto { scale: a, shape: b } => a.is_finite() && b.is_finite(),
        };
        if ok && finite {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "invalid parameters for {self}"
            )))
        }
    }

    /// Fails unless `E[X⁴]` is finite.
    pub fn require_fourth_moment(&self) -> Result<()> {
        match *self {
            Self::Pareto { shape, .. } if shape <= 4.0 => Err(Error::MomentExistence(format!(
                "Pareto shape {shape} must exceed 4 for a finite fourth moment"
            ))),
            _ => Ok(()),
        }
    }

    /// Lower end of the support.
    pub fn support_min(&self) -> f64 {
        match *self {
            Self::Pareto { scale, .. } => scale,
            _ => 0.0,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Gamma { shape, rate } => shape / rate,
            Self::Lognormal { meanlog, sdlog } => (meanlog + 0.5 * sdlog * sdlog).exp(),
            Self::Pareto { scale, shape } if shape > 1.0 => shape * scale / (shape - 1.0),
            Self::Pareto { .. } => f64::INFINITY,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Gamma { shape, rate } => shape / (rate * rate),
            Self::Lognormal { meanlog, sdlog } => {
                let s2 = sdlog * sdlog;
                s2.exp_m1() * (2.0 * meanlog + s2).exp()
            }
            Self::Pareto { scale, shape } if shape > 2.0 => {
                scale * scale * shape / ((shape - 1.0) * (shape - 1.0) * (shape - 2.0))
            }
            Self::Pareto { .. } => f64::INFINITY,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.support_min() || (x <= 0.0 && !matches!(self, Self::Gamma { .. })) {
            return 0.0;
        }
        match *self {
            Self::Gamma { shape, rate } => {
                if x == 0.0 {
                    return if shape < 1.0 {
                        f64::INFINITY
                    } else if shape == 1.0 {
                        rate
                    } else {
                        0.0
                    };
                }
                (shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - ln_gamma(shape)).exp()
            }
            Self::Lognormal { meanlog, sdlog } => {
                let z = (x.ln() - meanlog) / sdlog;
                (-0.5 * z * z).exp() / (x * sdlog * (2.0 * std::f64::consts::PI).sqrt())
            }
            Self::Pareto { scale, shape } => shape / x * (scale / x).powf(shape),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.support_min() {
            return 0.0;
        }
        match *self {
            Self::Gamma { shape, rate } => gamma_lr(shape, rate * x),
            Self::Lognormal { meanlog, sdlog } => normal_cdf((x.ln() - meanlog) / sdlog),
            Self::Pareto { scale, shape } => 1.0 - (scale / x).powf(shape),
        }
    }

    /// `∫_0^x t dF(t)`, the contribution of values below `x` to the mean.
    pub fn partial_mean(&self, x: f64) -> f64 {
        if x <= self.support_min() {
            return 0.0;
        }
        match *self {
            Self::Gamma { shape, rate } => shape / rate * gamma_lr(shape + 1.0, rate * x),
            Self::Lognormal { meanlog, sdlog } => {
                self.mean() * normal_cdf((x.ln() - meanlog - sdlog * sdlog) / sdlog)
            }
            Self::Pareto { scale, shape } => self.mean() * (1.0 - (scale / x).powf(shape - 1.0)),
        }
    }
}

/// A ready-to-draw distribution.
#[derive(Debug, Clone, Copy)]
pub enum Sampler {
    Gamma(Gamma<f64>),
    Lognormal(LogNormal<f64>),
    Pareto(Pareto<f64>),
}

impl Sampler {
    pub fn new(spec: &DistributionSpec) -> Result<Self> {
        spec.validate()?;
        let invalid = |e: &dyn fmt::Display| Error::InvalidConfig(format!("{spec}: {e}"));
        Ok(match *spec {
            DistributionSpec::Gamma { shape, rate } => {
                Self::Gamma(Gamma::new(shape, 1.0 / rate).map_err(|e| invalid(&e))?)
            }
            DistributionSpec::Lognormal { meanlog, sdlog } => {
                Self::Lognormal(LogNormal::new(meanlog, sdlog).map_err(|e| invalid(&e))?)
            }
            DistributionSpec::Pareto { scale, shape } => {
                Self::Pareto(Pareto::new(scale, shape).map_err(|e| invalid(&e))?)
            }
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Gamma(d) => d.sample(rng),
            Self::Lognormal(d) => d.sample(rng),
            Self::Pareto(d) => d.sample(rng),
        }
    }
}

/// Random number generator used for every replication stream.
pub type StreamRng = ChaCha8Rng;

/// Identifies one reproducible substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }
}

/// ChaCha keyed by the master seed, with the replication index selecting the
/// 64-bit stream (nonce). Streams never overlap.
pub fn derive_stream(seed: SeedSpec) -> StreamRng {
    let mut rng = StreamRng::seed_from_u64(seed.master_seed);
    rng.set_stream(seed.stream_index);
    rng
}

/// Endless stream of draws from one distribution.
#[derive(Debug, Clone)]
pub struct SampleStream {
    sampler: Sampler,
    rng: StreamRng,
}

impl SampleStream {
    pub fn new(spec: &DistributionSpec, seed: SeedSpec) -> Result<Self> {
        Ok(Self {
            sampler: Sampler::new(spec)?,
            rng: derive_stream(seed),
        })
    }
}

impl ObservationSource for SampleStream {
    fn next_observation(&mut self) -> Option<Result<f64>> {
        Some(Ok(self.sampler.sample(&mut self.rng)))
    }
}

impl Iterator for SampleStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.sampler.sample(&mut self.rng))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileFormat {
    /// Skip the first line.
    pub has_header: bool,
}

/// Values read from text, one or more per line, separated by commas or
/// whitespace. Blank lines are ignored.
#[derive(Debug)]
pub struct FileSource<R> {
    reader: R,
    pending: VecDeque<(usize, String)>,
    line_no: usize,
    format: FileFormat,
    failed: bool,
}

impl<R: BufRead> FileSource<R> {
    pub fn from_reader(reader: R, format: FileFormat) -> Self {
        Self {
            reader,
            pending: VecDeque::new(),
            line_no: 0,
            format,
            failed: false,
        }
    }

    fn fill(&mut self) -> Result<bool> {
        let mut line = String::new();
        loop {
            line.clear();
            if self.reader.read_line(&mut line)? == 0 {
                return Ok(false);
            }
            self.line_no += 1;
            if self.line_no == 1 && self.format.has_header {
                continue;
            }
            let line_no = self.line_no;
            self.pending.extend(
                line.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| (line_no, t.to_owned())),
            );
            if !self.pending.is_empty() {
                return Ok(true);
            }
        }
    }

    fn next_value(&mut self) -> Result<Option<f64>> {
        if self.pending.is_empty() && !self.fill()? {
            return Ok(None);
        }
        let (line, token) = self.pending.pop_front().expect("filled above");
        let value: f64 = token
            .parse()
            .ok()
            .filter(|v: &f64| !v.is_nan())
            .ok_or_else(|| Error::Parse {
                line,
                token: token.clone(),
            })?;
        if value < 0.0 {
            return Err(Error::NegativeValue { line, value });
        }
        if !value.is_finite() {
            return Err(Error::Parse { line, token });
        }
        Ok(Some(value))
    }
}

impl<R: BufRead> ObservationSource for FileSource<R> {
    fn next_observation(&mut self) -> Option<Result<f64>> {
        if self.failed {
            return None;
        }
        let out = self.next_value().transpose();
        if matches!(out, Some(Err(_))) {
            self.failed = true;
        }
        out
    }
}

/// Opens a numeric text file as an observation source.
pub fn open_file_source(
    path: impl AsRef<Path>,
    format: FileFormat,
) -> Result<FileSource<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(FileSource::from_reader(BufReader::new(file), format))
}
