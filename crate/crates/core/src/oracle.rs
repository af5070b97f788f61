//! Ground truth for the estimators and the simulation study.
//!
//! Two independent routes are provided:
//!
//! * [`brute_force_statistics`] recomputes every sample statistic literally,
//!   with nested loops and a from-scratch leave-one-out GMD for each point.
//! * [`population_params`] evaluates the population quantities by numerical
//!   quadrature of `g(x) = E|x − X|`, written in closed form through each
//!   family's distribution function and partial mean. [`true_params`] adds a
//!   large-sample Monte Carlo estimate of the same quantities as a
//!   cross-check.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::estimator::{RunningState, StatisticsSnapshot};
use crate::quadrature::integrate_to_infinity;
use crate::sequential::{normal_cdf, optimal_c};
use crate::source::{DistributionSpec, SampleStream, SeedSpec};

/// Smallest accepted Monte Carlo sample for [`true_params`].
pub const MIN_MC_BUDGET: usize = 100_000;
/// Default Monte Carlo sample for [`true_params`].
pub const DEFAULT_MC_BUDGET: usize = 1_000_000;
const MC_BATCHES: usize = 10;

/// Every sample statistic by direct evaluation of its defining sum.
///
/// O(n³) because of the literal jackknife.
pub fn brute_force_statistics(xs: &[f64]) -> Result<StatisticsSnapshot> {
    if let Some(&bad) = xs.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidObservation(bad));
    }
    let n = xs.len();
    if n < 4 {
        return Err(Error::InsufficientData { needed: 4, have: n });
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    if mean <= 0.0 {
        return Err(Error::UndefinedGini);
    }
    let variance = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);

    let mut abs_sum = 0.0;
    let mut weighted_sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let diff = (xs[i] - xs[j]).abs();
            abs_sum += diff;
            weighted_sum += 0.5 * (xs[i] + xs[j]) * diff;
        }
    }
    let n_pairs = nf * (nf - 1.0) / 2.0;
    let gmd = abs_sum / n_pairs;
    let tau = 2.0 / (nf * (nf - 1.0)) * weighted_sum;

    let loo_pairs = (nf - 1.0) * (nf - 2.0) / 2.0;
    let pseudo: Vec<f64> = (0..n)
        .map(|skip| {
            let mut s = 0.0;
            for i in (0..n).filter(|&i| i != skip) {
                for j in (i + 1..n).filter(|&j| j != skip) {
                    s += (xs[i] - xs[j]).abs();
                }
            }
            nf * gmd - (nf - 2.0) * (s / loo_pairs)
        })
        .collect();
    let w_bar = pseudo.iter().sum::<f64>() / nf;
    let s_w_sq = pseudo.iter().map(|w| (w - w_bar).powi(2)).sum::<f64>() / (nf - 1.0);

    let v_sq = gmd.powi(2) * variance / (4.0 * mean.powi(4)) - gmd / mean.powi(3) * tau
        + gmd.powi(2) / mean.powi(2)
        + s_w_sq / (4.0 * mean.powi(2));

    Ok(StatisticsSnapshot {
        n,
        mean,
        variance,
        gmd,
        gini: gmd / (2.0 * mean),
        tau,
        s_w_sq,
        v_sq,
    })
}

/// Closed-form population Gini index.
pub fn true_gini(spec: &DistributionSpec) -> Result<f64> {
    spec.validate()?;
    Ok(match *spec {
        DistributionSpec::Gamma { shape, .. } => {
            (ln_gamma(shape + 0.5) - ln_gamma(shape + 1.0)).exp() / std::f64::consts::PI.sqrt()
        }
        DistributionSpec::Lognormal { sdlog, .. } => {
            2.0 * normal_cdf(sdlog / std::f64::consts::SQRT_2) - 1.0
        }
        DistributionSpec::Pareto { shape, .. } if shape > 1.0 => 1.0 / (2.0 * shape - 1.0),
        DistributionSpec::Pareto { shape, .. } => {
            return Err(Error::MomentExistence(format!(
                "Pareto shape {shape} has no finite mean"
            )))
        }
    })
}

/// Asymptotic variance of `√n(Ĝₙ − G)` from its ingredients.
pub fn assemble_xi_sq(mu: f64, delta: f64, sigma_sq: f64, tau: f64, sigma1_sq: f64) -> f64 {
    delta * delta * sigma_sq / (4.0 * mu.powi(4)) - delta * tau / mu.powi(3)
        + delta * delta / (mu * mu)
        + sigma1_sq / (mu * mu)
}

/// Large-sample Monte Carlo estimates, reported alongside the quadrature
/// values. Standard errors come from `MC_BATCHES` equal batch means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloCheck {
    pub budget: usize,
    pub seed: u64,
    pub delta: f64,
    pub delta_se: f64,
    pub tau: f64,
    pub tau_se: f64,
    pub sigma1_sq: f64,
    pub sigma1_sq_se: f64,
    pub xi_sq: f64,
    pub xi_sq_se: f64,
    pub c_opt: u64,
}

/// Population quantities for one distribution and interval design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruePopulationParams {
    pub distribution: DistributionSpec,
    pub alpha: f64,
    pub d: f64,
    /// `E(X)`
    pub mu: f64,
    /// `E|X₁ − X₂|`
    pub delta: f64,
    /// `Var(X)`
    pub sigma_sq: f64,
    /// `E(X₁|X₁ − X₂|)`
    pub tau: f64,
    /// `Var(E[|X₁ − X₂| | X₁])`
    pub sigma1_sq: f64,
    pub xi_sq: f64,
    /// Closed-form Gini index.
    pub gini: f64,
    /// Optimal fixed sample size for known `ξ²`.
    pub c_opt: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloCheck>,
}

impl TruePopulationParams {
    /// `ξ²` recomputed from the stored components.
    pub fn assembled_xi_sq(&self) -> f64 {
        assemble_xi_sq(self.mu, self.delta, self.sigma_sq, self.tau, self.sigma1_sq)
    }
}

const QUAD_TOL: f64 = 1e-13;

/// Population parameters by quadrature. Deterministic and accurate to
/// roughly ten significant digits.
pub fn population_params(
    spec: &DistributionSpec,
    alpha: f64,
    d: f64,
) -> Result<TruePopulationParams> {
    spec.validate()?;
    spec.require_fourth_moment()?;
    let mu = spec.mean();
    let sigma_sq = spec.variance();
    let lo = spec.support_min();
    let scale = mu;

    // g(x) = E|x − X| = x(2F(x) − 1) + μ − 2∫_0^x t dF(t)
    let g = |x: f64| x * (2.0 * spec.cdf(x) - 1.0) + mu - 2.0 * spec.partial_mean(x);
    let tol = QUAD_TOL * mu;
    let delta = integrate_to_infinity(|x| g(x) * spec.pdf(x), lo, scale, tol);
    let g_sq = integrate_to_infinity(|x| g(x).powi(2) * spec.pdf(x), lo, scale, tol * mu);
    let tau = integrate_to_infinity(|x| x * g(x) * spec.pdf(x), lo, scale, tol * mu);
    let sigma1_sq = g_sq - delta * delta;

    let xi_sq = assemble_xi_sq(mu, delta, sigma_sq, tau, sigma1_sq);
    Ok(TruePopulationParams {
        distribution: *spec,
        alpha,
        d,
        mu,
        delta,
        sigma_sq,
        tau,
        sigma1_sq,
        xi_sq,
        gini: true_gini(spec)?,
        c_opt: optimal_c(xi_sq, alpha, d)?,
        monte_carlo: None,
    })
}

struct McPoint {
    delta: f64,
    tau: f64,
    sigma1_sq: f64,
    xi_sq: f64,
}

fn mc_point(sample: Vec<f64>, mu: f64, sigma_sq: f64) -> Result<McPoint> {
    let state = RunningState::from_batch(sample)?;
    let delta = state.gmd()?;
    let tau = state.tau_hat()?;
    let sigma1_sq = state.s_w_sq()? / 4.0;
    Ok(McPoint {
        delta,
        tau,
        sigma1_sq,
        xi_sq: assemble_xi_sq(mu, delta, sigma_sq, tau, sigma1_sq),
    })
}

fn batch_se(values: &[f64]) -> f64 {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (var / k).sqrt()
}

/// Quadrature population parameters plus a Monte Carlo cross-check at
/// `mc_budget` draws: `Δ` and `τ` from the U-statistics, `σ₁²` from `s²_w/4`,
/// with `μ` and `σ²` taken analytically.
pub fn true_params(
    spec: &DistributionSpec,
    alpha: f64,
    d: f64,
    mc_budget: usize,
    seed: u64,
) -> Result<TruePopulationParams> {
    if mc_budget < MIN_MC_BUDGET {
        return Err(Error::InvalidConfig(format!(
            "mc_budget must be at least {MIN_MC_BUDGET}, got {mc_budget}"
        )));
    }
    let mut params = population_params(spec, alpha, d)?;
    let sample: Vec<f64> = SampleStream::new(spec, SeedSpec::new(seed, 0))?
        .take(mc_budget)
        .collect();

    let batch_len = mc_budget / MC_BATCHES;
    let batches = sample
        .chunks_exact(batch_len)
        .take(MC_BATCHES)
        .map(|chunk| mc_point(chunk.to_vec(), params.mu, params.sigma_sq))
        .collect::<Result<Vec<_>>>()?;
    let se = |f: fn(&McPoint) -> f64| batch_se(&batches.iter().map(f).collect::<Vec<_>>());

    let full = mc_point(sample, params.mu, params.sigma_sq)?;
    params.monte_carlo = Some(MonteCarloCheck {
        budget: mc_budget,
        seed,
        delta: full.delta,
        delta_se: se(|p| p.delta),
        tau: full.tau,
        tau_se: se(|p| p.tau),
        sigma1_sq: full.sigma1_sq,
        sigma1_sq_se: se(|p| p.sigma1_sq),
        xi_sq: full.xi_sq,
        xi_sq_se: se(|p| p.xi_sq),
        c_opt: optimal_c(full.xi_sq.max(0.0), alpha, d)?,
    });
    Ok(params)
}
