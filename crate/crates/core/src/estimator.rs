//! Incremental U-statistic estimators for the Gini index.
//!
//! [`RunningState`] keeps the observations sorted together with, for every
//! observation, its total absolute distance to all the others
//! (`T_j = Σ_{i≠j} |X_j − X_i|`). From these the sample Gini mean difference,
//! the `τ` estimator, the jackknife pseudo-value spread `s²_w` and the
//! plug-in variance `V²` of the Gini estimator follow in O(n) per snapshot.
//!
//! A push costs O(n): one insertion into the sorted vectors plus one sweep
//! that adds `|X_j − x|` to every stored `T_j`. Every
//! [`REFRESH_INTERVAL`] pushes the running totals are rebuilt from the sorted
//! data to keep floating-point drift bounded.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of pushes between exact rebuilds of the running totals.
pub const REFRESH_INTERVAL: usize = 1024;

/// Minimum sample size for the jackknife spread and `V²`.
pub const MIN_VARIANCE_N: usize = 4;

#[derive(Debug, Clone, Default)]
pub struct RunningState {
    sorted: Vec<f64>,
    /// `T_j` for each entry of `sorted`, same order.
    t_values: Vec<f64>,
    sum: f64,
    /// Welford mean and sum of squared deviations.
    mean: f64,
    m2: f64,
    /// Σ_{i<j} |X_i − X_j|
    pair_abs_sum: f64,
    /// Σ_{i<j} ½(X_i + X_j)|X_i − X_j|
    pair_weighted_sum: f64,
    since_refresh: usize,
}

/// All sample statistics at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticsSnapshot {
    pub n: usize,
    pub mean: f64,
    /// Sample variance with divisor `n − 1`.
    pub variance: f64,
    /// Gini mean difference `Δ̂ₙ`.
    pub gmd: f64,
    pub gini: f64,
    pub tau: f64,
    pub s_w_sq: f64,
    pub v_sq: f64,
}

impl StatisticsSnapshot {
    /// Assembles `V²ₙ` from its ingredients.
    pub fn variance_estimate(mean: f64, variance: f64, gmd: f64, tau: f64, s_w_sq: f64) -> f64 {
        let m2 = mean * mean;
        gmd * gmd * variance / (4.0 * m2 * m2) - gmd * tau / (m2 * mean)
            + gmd * gmd / m2
            + s_w_sq / (4.0 * m2)
    }
}

fn check_observation(x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidObservation(x))
    }
}

fn pairs(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

impl RunningState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            sorted: Vec::with_capacity(capacity),
            t_values: Vec::with_capacity(capacity),
            ..Self::default()
        }
    }

    /// Builds a state by pushing every value in order.
    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Result<Self> {
        let mut state = Self::new();
        for x in values {
            state.push(x)?;
        }
        Ok(state)
    }

    /// Builds a state from a whole sample at once in O(n log n).
    pub fn from_batch(mut values: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&x| check_observation(x).is_err()) {
            return Err(Error::InvalidObservation(bad));
        }
        values.sort_by(f64::total_cmp);
        let mut state = Self {
            t_values: vec![0.0; values.len()],
            sorted: values,
            ..Self::default()
        };
        state.refresh();
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn t_values(&self) -> &[f64] {
        &self.t_values
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn pair_abs_sum(&self) -> f64 {
        self.pair_abs_sum
    }

    pub fn pair_weighted_sum(&self) -> f64 {
        self.pair_weighted_sum
    }

    /// Adds one observation. Rejects negative, NaN and infinite values.
    pub fn push(&mut self, x: f64) -> Result<()> {
        check_observation(x)?;

        // Insert after any equal values so ties keep arrival order.
        let k = self.sorted.partition_point(|&v| v <= x);
        let x_sq = x * x;
        let mut t_new = 0.0;
        let mut w_new = 0.0;
        for (t, &y) in self.t_values.iter_mut().zip(&self.sorted) {
            let gap = (y - x).abs();
            *t += gap;
            t_new += gap;
            w_new += (y * y - x_sq).abs();
        }
        self.sorted.insert(k, x);
        self.t_values.insert(k, t_new);

        self.pair_abs_sum += t_new;
        self.pair_weighted_sum += 0.5 * w_new;
        self.sum += x;
        let n = self.sorted.len() as f64;
        let delta = x - self.mean;
        self.mean += delta / n;
        self.m2 += delta * (x - self.mean);

        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_INTERVAL {
            self.refresh();
        }
        Ok(())
    }

    /// Rebuilds every running total from the sorted values.
    ///
    /// Works on consecutive gaps `g_k = Y_(k) − Y_(k−1)`, which are
    /// nonnegative and exactly zero across ties: gap `k` separates `k − 1`
    /// values below from `n − k + 1` values above it.
    pub fn refresh(&mut self) {
        self.since_refresh = 0;
        let n = self.sorted.len();
        if n == 0 {
            *self = Self::default();
            return;
        }

        let mut pair_abs = 0.0;
        let mut pair_sq = 0.0;
        // Forward pass: contribution of gaps at or below j (values beneath Y_j).
        let mut below = 0.0;
        for j in 0..n {
            if j > 0 {
                let gap = self.sorted[j] - self.sorted[j - 1];
                let gap_sq =
                    self.sorted[j] * self.sorted[j] - self.sorted[j - 1] * self.sorted[j - 1];
                let lower = j as f64;
                let upper = (n - j) as f64;
                below += gap * lower;
                pair_abs += gap * lower * upper;
                pair_sq += gap_sq * lower * upper;
            }
            self.t_values[j] = below;
        }
        // Backward pass: gaps above j.
        let mut above = 0.0;
        for j in (0..n).rev() {
            self.t_values[j] += above;
            if j > 0 {
                let gap = self.sorted[j] - self.sorted[j - 1];
                above += gap * (n - j) as f64;
            }
        }
        self.pair_abs_sum = pair_abs;
        self.pair_weighted_sum = 0.5 * pair_sq;

        self.sum = self.sorted.iter().sum();
        self.mean = self.sum / n as f64;
        let mean = self.mean;
        self.m2 = self.sorted.iter().map(|&v| (v - mean) * (v - mean)).sum();
    }

    fn require(&self, needed: usize) -> Result<()> {
        if self.len() < needed {
            Err(Error::InsufficientData {
                needed,
                have: self.len(),
            })
        } else {
            Ok(())
        }
    }

    pub fn mean(&self) -> Result<f64> {
        self.require(1)?;
        Ok(self.sum / self.len() as f64)
    }

    /// Sample variance with divisor `n − 1`.
    pub fn sample_variance(&self) -> Result<f64> {
        self.require(2)?;
        Ok(self.m2.max(0.0) / (self.len() - 1) as f64)
    }

    /// Sample Gini mean difference.
    pub fn gmd(&self) -> Result<f64> {
        self.require(2)?;
        Ok(self.pair_abs_sum / pairs(self.len()))
    }

    /// `Δ̂ₙ / (2 X̄ₙ)`, always within `[0, 1]` for nonnegative data.
    pub fn gini(&self) -> Result<f64> {
        let gmd = self.gmd()?;
        let mean = self.mean()?;
        if mean <= 0.0 {
            return Err(Error::UndefinedGini);
        }
        // Σ|X_i − X_j| ≤ Σ(X_i + X_j) bounds the ratio by 1; clip rounding.
        Ok((gmd / (2.0 * mean)).clamp(0.0, 1.0))
    }

    /// U-statistic estimator of `τ = E(X₁|X₁ − X₂|)`.
    pub fn tau_hat(&self) -> Result<f64> {
        self.require(2)?;
        Ok(self.pair_weighted_sum / pairs(self.len()))
    }

    /// Sample variance of the jackknife pseudo-values
    /// `W_j = nΔ̂ₙ − (n − 2)Δ̂ₙ^(j)`.
    ///
    /// Substituting `C(n−1,2)Δ̂ₙ^(j) = C(n,2)Δ̂ₙ − T_j` reduces every
    /// pseudo-value to `W_j = 2T_j / (n − 1)`.
    pub fn s_w_sq(&self) -> Result<f64> {
        self.require(MIN_VARIANCE_N)?;
        let n = self.len();
        let t_mean = self.t_values.iter().sum::<f64>() / n as f64;
        let ss: f64 = self
            .t_values
            .iter()
            .map(|&t| (t - t_mean) * (t - t_mean))
            .sum();
        let scale = 2.0 / (n - 1) as f64;
        Ok(scale * scale * ss / (n - 1) as f64)
    }

    /// Every statistic at the current sample size, including `V²ₙ`.
    pub fn snapshot(&self) -> Result<StatisticsSnapshot> {
        self.require(MIN_VARIANCE_N)?;
        let gini = self.gini()?;
        let mean = self.mean()?;
        let variance = self.sample_variance()?;
        let gmd = self.gmd()?;
        let tau = self.tau_hat()?;
        let s_w_sq = self.s_w_sq()?;
        Ok(StatisticsSnapshot {
            n: self.len(),
            mean,
            variance,
            gmd,
            gini,
            tau,
            s_w_sq,
            v_sq: StatisticsSnapshot::variance_estimate(mean, variance, gmd, tau, s_w_sq),
        })
    }
}
