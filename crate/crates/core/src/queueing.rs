//! Queue fed by bandwidth traces and its Weibull-type overflow tail.
//!
//! For self-similar input with Hurst parameter `H`, the occupancy tail is
//! asymptotically
//!
//! ```text
//! P(V > x) ≈ exp(−θ x^{2−2H}),   θ = ((1−m)(1−H)/H)^{2H} / (2 m a (1−H)²)
//! ```
//!
//! with `θ > 0`, so the expression is a decaying probability. The formula is
//! a large-buffer asymptotic; simulations are compared on shape (linearity of
//! `ln P` in `x^{2−2H}`), not on absolute level.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::ou::Trace;
use crate::statistics::{hurst_from_indices, linear_regression};
use crate::synthesis::BandwidthSpec;
use crate::traffic::TrafficIndices;

pub const DEFAULT_BURN_IN_FRACTION: f64 = 0.1;
pub const DEFAULT_THRESHOLD_COUNT: usize = 20;
pub const DEFAULT_LOW_QUANTILE: f64 = 0.5;
pub const DEFAULT_HIGH_QUANTILE: f64 = 0.999;
pub const MIN_SHAPE_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueueParams {
    /// `max(1/download_rate, 1/upload_rate)`, a utilization surrogate in `(0, 1)`.
    pub m: f64,
    pub hurst: f64,
    /// Variance coefficient `γ(Var(B) + Var(S)) + σK′`.
    pub a: f64,
}

impl QueueParams {
    pub fn new(m: f64, hurst: f64, a: f64) -> Result<Self> {
        let p = Self { m, hurst, a };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("m", self.m)?;
        ensure_finite("hurst", self.hurst)?;
        ensure_finite("a", self.a)?;
        if !(self.m > 0.0 && self.m < 1.0) {
            return Err(Error::UnstableQueue { m: self.m });
        }
        if !(0.5..1.0).contains(&self.hurst) {
            return Err(Error::invalid(format!(
                "hurst must lie in [0.5, 1), got {}",
                self.hurst
            )));
        }
        if self.a <= 0.0 {
            return Err(Error::invalid(format!("variance coefficient a must be > 0, got {}", self.a)));
        }
        Ok(())
    }

    /// Decay rate `θ` of the tail; always positive for valid parameters.
    pub fn theta(&self) -> f64 {
        let h = self.hurst;
        let base = (1.0 - self.m) * (1.0 - h) / h;
        base.powf(2.0 * h) / (2.0 * self.m * self.a * (1.0 - h).powi(2))
    }

    pub fn exponent(&self) -> f64 {
        2.0 - 2.0 * self.hurst
    }
}

/// `m = max(1/download_rate, 1/upload_rate)`, required to lie in `(0, 1)`.
pub fn rate_parameter(download_rate: f64, upload_rate: f64) -> Result<f64> {
    ensure_finite("download_rate", download_rate)?;
    ensure_finite("upload_rate", upload_rate)?;
    if download_rate <= 0.0 || upload_rate <= 0.0 {
        return Err(Error::invalid(format!(
            "rates must be > 0, got download={download_rate} upload={upload_rate}"
        )));
    }
    let m = (1.0 / download_rate).max(1.0 / upload_rate);
    if m >= 1.0 {
        return Err(Error::UnstableQueue { m });
    }
    Ok(m)
}

/// Builds `(m, H, a)` from a model instance.
///
/// `H` uses the single-index configuration `n0 = n1 = spec.traffic.n` plus
/// `spec.epsilon`; `variances` is `(Var(B), Var(S))`.
pub fn queue_params_from_spec(
    spec: &BandwidthSpec,
    rates: (f64, f64),
    variances: (f64, f64),
) -> Result<QueueParams> {
    let m = rate_parameter(rates.0, rates.1)?;
    let hurst = hurst_from_indices(&TrafficIndices::single(spec.traffic.n)?, spec.epsilon)?;
    let (var_b, var_s) = variances;
    let a = spec.ou.gamma * (var_b + var_s) + spec.ou.sigma * spec.kprime;
    QueueParams::new(m, hurst, a)
}

/// `P(V > x) = exp(−θ x^{2−2H})`.
pub fn norros_tail(params: &QueueParams, x: f64) -> Result<f64> {
    params.validate()?;
    ensure_finite("x", x)?;
    if x < 0.0 {
        return Err(Error::invalid(format!("buffer level must be >= 0, got {x}")));
    }
    Ok((-params.theta() * x.powf(params.exponent())).exp())
}

/// Lindley recursion `V_{k+1} = max(0, V_k + arrivals_k − C·dt)` from `V_0 = 0`.
///
/// `arrivals` holds the work arriving in each step; the output has one more
/// sample than the input and shares its grid step.
pub fn simulate_queue(arrivals: &Trace, service_rate: f64) -> Result<Trace> {
    ensure_finite("service_rate", service_rate)?;
    if service_rate <= 0.0 {
        return Err(Error::invalid(format!("service rate must be > 0, got {service_rate}")));
    }
    if let Some((k, v)) = arrivals.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::invalid(format!("arrival {k} is negative ({v})")));
    }
    let service = service_rate * arrivals.dt();
    let mut occupancy = Vec::with_capacity(arrivals.len() + 1);
    let mut v = 0.0f64;
    occupancy.push(v);
    for &arr in arrivals.values() {
        v = (v + arr - service).max(0.0);
        occupancy.push(v);
    }
    Trace::new(arrivals.dt(), occupancy)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub thresholds: Vec<f64>,
    /// Fraction of post-burn-in samples strictly above each threshold.
    pub probabilities: Vec<f64>,
    pub model_probabilities: Option<Vec<f64>>,
    pub regression_slope: Option<f64>,
    pub regression_intercept: Option<f64>,
    pub regression_r2: Option<f64>,
    pub burn_in: usize,
    pub samples: usize,
}

impl TailReport {
    /// Fills in the closed-form tail at each threshold.
    pub fn with_model(mut self, params: &QueueParams) -> Result<Self> {
        let model = self
            .thresholds
            .iter()
            .map(|&x| norros_tail(params, x.max(0.0)))
            .collect::<Result<Vec<_>>>()?;
        self.model_probabilities = Some(model);
        Ok(self)
    }

    /// Fills in the shape regression for the given Hurst parameter.
    pub fn with_shape(mut self, hurst: f64) -> Result<Self> {
        let (slope, intercept, r2) = tail_shape_check(&self, hurst)?;
        self.regression_slope = Some(slope);
        self.regression_intercept = Some(intercept);
        self.regression_r2 = Some(r2);
        Ok(self)
    }
}

fn burn_in_count(len: usize, fraction: f64) -> Result<usize> {
    ensure_finite("burn_in_fraction", fraction)?;
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::invalid(format!("burn-in fraction must lie in [0, 1), got {fraction}")));
    }
    let skip = (len as f64 * fraction).floor() as usize;
    if skip >= len {
        return Err(Error::invalid("no samples left after burn-in"));
    }
    Ok(skip)
}

fn sorted_tail(occupancy: &Trace, skip: usize) -> Vec<f64> {
    let mut v = occupancy.values()[skip..].to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Empirical exceedance probabilities after discarding the leading
/// `burn_in_fraction` of samples.
pub fn empirical_tail(occupancy: &Trace, thresholds: &[f64], burn_in_fraction: f64) -> Result<TailReport> {
    let skip = burn_in_count(occupancy.len(), burn_in_fraction)?;
    if thresholds.is_empty() {
        return Err(Error::invalid("no thresholds"));
    }
    for (i, x) in thresholds.iter().enumerate() {
        ensure_finite("threshold", *x)?;
        if i > 0 && *x <= thresholds[i - 1] {
            return Err(Error::invalid("thresholds must be strictly increasing"));
        }
    }
    let sorted = sorted_tail(occupancy, skip);
    let total = sorted.len() as f64;
    let probabilities = thresholds
        .iter()
        .map(|&x| {
            let at_or_below = sorted.partition_point(|&v| v <= x);
            (sorted.len() - at_or_below) as f64 / total
        })
        .collect();
    Ok(TailReport {
        thresholds: thresholds.to_vec(),
        probabilities,
        model_probabilities: None,
        regression_slope: None,
        regression_intercept: None,
        regression_r2: None,
        burn_in: skip,
        samples: sorted.len(),
    })
}

/// Up to `count` distinct empirical quantiles, evenly spaced in probability
/// between `low` and `high`, of the post-burn-in occupancy.
pub fn quantile_thresholds(
    occupancy: &Trace,
    burn_in_fraction: f64,
    count: usize,
    low: f64,
    high: f64,
) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::invalid("need at least two thresholds"));
    }
    if !(0.0 <= low && low < high && high <= 1.0) {
        return Err(Error::invalid(format!("quantile range must satisfy 0 <= low < high <= 1, got [{low}, {high}]")));
    }
    let skip = burn_in_count(occupancy.len(), burn_in_fraction)?;
    let sorted = sorted_tail(occupancy, skip);
    let last = (sorted.len() - 1) as f64;
    let mut out: Vec<f64> = Vec::with_capacity(count);
    for i in 0..count {
        let p = low + (high - low) * i as f64 / (count - 1) as f64;
        let pos = p * last;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let q = sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo]);
        if out.last().is_none_or(|&prev| q > prev) {
            out.push(q);
        }
    }
    Ok(out)
}

/// Default grid: 20 quantiles from the 50th to the 99.9th percentile.
pub fn default_thresholds(occupancy: &Trace, burn_in_fraction: f64) -> Result<Vec<f64>> {
    quantile_thresholds(
        occupancy,
        burn_in_fraction,
        DEFAULT_THRESHOLD_COUNT,
        DEFAULT_LOW_QUANTILE,
        DEFAULT_HIGH_QUANTILE,
    )
}

/// Least-squares fit of `ln P̂` against `x^{2−2H}` over thresholds with
/// `P̂ ∈ (0, 1)`. Returns `(slope, intercept, r²)`.
pub fn tail_shape_check(report: &TailReport, hurst: f64) -> Result<(f64, f64, f64)> {
    ensure_finite("hurst", hurst)?;
    if !(0.5..1.0).contains(&hurst) {
        return Err(Error::invalid(format!("hurst must lie in [0.5, 1), got {hurst}")));
    }
    let exponent = 2.0 - 2.0 * hurst;
    let points: Vec<(f64, f64)> = report
        .thresholds
        .iter()
        .zip(&report.probabilities)
        .filter(|(x, p)| **x >= 0.0 && **p > 0.0 && **p < 1.0)
        .map(|(x, p)| (x.powf(exponent), p.ln()))
        .collect();
    if points.len() < MIN_SHAPE_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_SHAPE_POINTS,
            got: points.len(),
        });
    }
    linear_regression(&points).ok_or_else(|| Error::invalid("thresholds collapse to a single regressor value"))
}
