//! Purely sequential fixed-width interval procedure.
//!
//! Draw a pilot sample of size `m = max{4, ⌈z/d⌉}`, then one observation at a
//! time, stopping at the first `n ≥ m` with `n ≥ (z/d)²(V²ₙ + 1/n)`. The
//! reported interval is `(Ĝ_N − d, Ĝ_N + d)`.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::estimator::{RunningState, MIN_VARIANCE_N};
use crate::source::ObservationSource;

pub const DEFAULT_N_MAX: usize = 10_000_000;

// Acklam's rational approximation to the lower normal quantile.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const P_LOW: f64 = 0.024_25;

fn acklam(p: f64) -> f64 {
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -acklam(1.0 - p)
    }
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Upper `p` quantile of the standard normal: the `z` with `Φ(z) = 1 − p`.
///
/// Rational approximation followed by one Newton step on `Φ(x) = p`.
pub fn z_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(p));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let x = acklam(p);
    let x = x - (normal_cdf(x) - p) / normal_pdf(x);
    Ok(-x)
}

/// `max{4, ⌈z_{α/2} / d⌉}`.
pub fn pilot_size(alpha: f64, d: f64) -> Result<usize> {
    Ok(StoppingConfig::new(alpha, d)?.pilot())
}

/// Optimal fixed sample size `⌊(z_{α/2}/d)² ξ²⌋ + 1` for known `ξ²`.
pub fn optimal_c(xi_sq: f64, alpha: f64, d: f64) -> Result<u64> {
    if !(xi_sq >= 0.0 && xi_sq.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "xi_sq must be finite and >= 0, got {xi_sq}"
        )));
    }
    let config = StoppingConfig::new(alpha, d)?;
    Ok((config.scale() * xi_sq).floor() as u64 + 1)
}

/// Parameters of the stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingConfig {
    alpha: f64,
    d: f64,
    z: f64,
    pilot: usize,
    n_max: usize,
    record_trace: bool,
}

impl StoppingConfig {
    pub fn new(alpha: f64, d: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "d must be positive and finite, got {d}"
            )));
        }
        let z = z_quantile(alpha / 2.0)?;
        let floor = (z / d).ceil();
        if floor > DEFAULT_N_MAX as f64 {
            return Err(Error::InvalidConfig(format!(
                "d = {d} needs a pilot larger than {DEFAULT_N_MAX}"
            )));
        }
        Ok(Self {
            alpha,
            d,
            z,
            pilot: (floor as usize).max(MIN_VARIANCE_N),
            n_max: DEFAULT_N_MAX,
            record_trace: false,
        })
    }

    /// Replaces the hard cap on the sample size.
    pub fn with_n_max(mut self, n_max: usize) -> Result<Self> {
        if n_max < self.pilot {
            return Err(Error::InvalidConfig(format!(
                "n_max = {n_max} is below the pilot size {}",
                self.pilot
            )));
        }
        self.n_max = n_max;
        Ok(self)
    }

    pub fn with_trace(mut self, record: bool) -> Self {
        self.record_trace = record;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// `z_{α/2}`.
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn pilot(&self) -> usize {
        self.pilot
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn records_trace(&self) -> bool {
        self.record_trace
    }

    /// `(z_{α/2} / d)²`.
    pub fn scale(&self) -> f64 {
        let r = self.z / self.d;
        r * r
    }

    /// Right-hand side of the stopping inequality at sample size `n`.
    pub fn threshold(&self, n: usize, v_sq: f64) -> f64 {
        self.scale() * (v_sq + 1.0 / n as f64)
    }
}

/// True iff `n ≥ (z/d)² (V²ₙ + 1/n)`.
pub fn should_stop(n: usize, v_sq: f64, config: &StoppingConfig) -> bool {
    n as f64 >= config.threshold(n, v_sq)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub n: usize,
    pub v_sq: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialResult {
    pub n_final: usize,
    pub gini: f64,
    pub v_sq: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceStep>,
}

impl SequentialResult {
    pub fn covers(&self, value: f64) -> bool {
        self.ci_low < value && value < self.ci_high
    }
}

fn draw<S: ObservationSource + ?Sized>(
    source: &mut S,
    state: &mut RunningState,
    threshold: f64,
) -> Result<()> {
    match source.next_observation() {
        Some(x) => state.push(x?),
        None => Err(Error::SourceExhausted {
            n: state.len(),
            threshold,
        }),
    }
}

/// Runs the pilot stage and the one-at-a-time stage until the rule fires.
pub fn run_sequential<S: ObservationSource + ?Sized>(
    source: &mut S,
    config: &StoppingConfig,
) -> Result<SequentialResult> {
    let mut state =
        RunningState::with_capacity(config.pilot().saturating_mul(16).min(config.n_max()));
    let mut trace = Vec::new();

    // Until the pilot is complete the unmet requirement is the pilot size itself.
    let pilot_threshold = config.pilot() as f64;
    for _ in 0..config.pilot() {
        draw(source, &mut state, pilot_threshold)?;
    }

    loop {
        let snap = state.snapshot()?;
        let n = snap.n;
        let threshold = config.threshold(n, snap.v_sq);
        if config.records_trace() {
            trace.push(TraceStep {
                n,
                v_sq: snap.v_sq,
                threshold,
            });
        }
        if n as f64 >= threshold {
            return Ok(SequentialResult {
                n_final: n,
                gini: snap.gini,
                v_sq: snap.v_sq,
                ci_low: snap.gini - config.d(),
                ci_high: snap.gini + config.d(),
                trace,
            });
        }
        if n >= config.n_max() {
            return Err(Error::CapExceeded {
                n_max: config.n_max(),
            });
        }
        draw(source, &mut state, threshold)?;
    }
}
