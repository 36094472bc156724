//! Ornstein–Uhlenbeck process `dS = γ(μ − S)dt + σ dW`.
//!
//! Paths are generated with the exact Gaussian transition
//!
//! ```text
//! S(t + Δ) = S(t)e^{−γΔ} + μ(1 − e^{−γΔ}) + σ sqrt((1 − e^{−2γΔ}) / 2γ) · Z
//! ```
//!
//! so there is no discretization bias at any step size.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuParams {
    /// Mean-reversion rate, 1/time.
    pub gamma: f64,
    /// Long-run mean.
    #[serde(default)]
    pub mu: f64,
    /// Volatility, value·time^(−1/2).
    pub sigma: f64,
    /// Initial value.
    #[serde(default)]
    pub s0: f64,
}

impl OuParams {
    pub fn new(gamma: f64, mu: f64, sigma: f64, s0: f64) -> Result<Self> {
        let params = Self {
            gamma,
            mu,
            sigma,
            s0,
        };
        params.validate()?;
        Ok(params)
    }

    /// Zero-mean process started at the origin.
    pub fn zero_mean(gamma: f64, sigma: f64) -> Result<Self> {
        Self::new(gamma, 0.0, sigma, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("gamma", self.gamma)?;
        ensure_finite("mu", self.mu)?;
        ensure_finite("sigma", self.sigma)?;
        ensure_finite("s0", self.s0)?;
        if self.gamma <= 0.0 {
            return Err(Error::invalid(format!(
                "gamma must be > 0, got {}",
                self.gamma
            )));
        }
        if self.sigma < 0.0 {
            return Err(Error::invalid(format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// Standard deviation of one exact transition over `dt`.
    pub fn transition_std(&self, dt: f64) -> f64 {
        // 1 − e^{−2γΔ} via expm1 keeps precision for small γΔ.
        let one_minus = -(-2.0 * self.gamma * dt).exp_m1();
        self.sigma * (one_minus / (2.0 * self.gamma)).sqrt()
    }
}

/// Uniform time grid: `count` steps of width `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub dt: f64,
    pub count: usize,
}

impl Grid {
    pub fn new(dt: f64, count: usize) -> Result<Self> {
        let grid = Self { dt, count };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("dt", self.dt)?;
        if self.dt <= 0.0 {
            return Err(Error::invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.count < 1 {
            return Err(Error::invalid("grid needs at least one step"));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.count as f64
    }
}

/// Uniformly sampled time series `x_0 .. x_N` with step `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    dt: f64,
    values: Vec<f64>,
}

impl Trace {
    pub fn new(dt: f64, values: Vec<f64>) -> Result<Self> {
        ensure_finite("dt", dt)?;
        if dt <= 0.0 {
            return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
        }
        if values.is_empty() {
            return Err(Error::invalid("trace must hold at least one sample"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "trace value at index {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self { dt, values })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time stamp of sample `k`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Same values relabelled with a different step.
    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Self::new(dt, self.values.clone())
    }

    /// Drops the first `skip` samples.
    pub fn tail(&self, skip: usize) -> Result<Self> {
        if skip >= self.values.len() {
            return Err(Error::invalid(format!(
                "cannot skip {skip} of {} samples",
                self.values.len()
            )));
        }
        Ok(Self {
            dt: self.dt,
            values: self.values[skip..].to_vec(),
        })
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.dt, self.values.iter().map(|v| v * factor).collect())
    }
}

/// One exact OU transition of length `dt` from `current`, driven by the
/// standard-normal variate `z`.
pub fn exact_step(current: f64, params: &OuParams, dt: f64, z: f64) -> Result<f64> {
    ensure_finite("current", current)?;
    ensure_finite("z", z)?;
    ensure_finite("dt", dt)?;
    if dt <= 0.0 {
        return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
    }
    params.validate()?;
    Ok(step_unchecked(current, params, dt, z))
}

#[inline]
fn step_unchecked(current: f64, params: &OuParams, dt: f64, z: f64) -> f64 {
    let decay = (-params.gamma * dt).exp();
    current * decay + params.mu * (1.0 - decay) + params.transition_std(dt) * z
}

/// Exact OU path of `grid.count + 1` samples starting at `params.s0`.
pub fn generate_path(params: &OuParams, grid: &Grid, seed: u64) -> Result<Trace> {
    let mut rng = rng::ou_stream(seed, 0);
    generate_path_with(params, grid, &mut rng)
}

pub(crate) fn generate_path_with<R: Rng + ?Sized>(
    params: &OuParams,
    grid: &Grid,
    rng: &mut R,
) -> Result<Trace> {
    params.validate()?;
    grid.validate()?;
    let decay = (-params.gamma * grid.dt).exp();
    let drift = params.mu * (1.0 - decay);
    let std = params.transition_std(grid.dt);

    let mut values = Vec::with_capacity(grid.count + 1);
    let mut current = params.s0;
    values.push(current);
    for _ in 0..grid.count {
        let z: f64 = rng.sample(StandardNormal);
        current = current * decay + drift + std * z;
        values.push(current);
    }
    Trace::new(grid.dt, values)
}

/// Long-run mean and variance `(μ, σ²/2γ)`.
pub fn stationary_moments(params: &OuParams) -> Result<(f64, f64)> {
    params.validate()?;
    Ok((
        params.mu,
        params.sigma * params.sigma / (2.0 * params.gamma),
    ))
}

/// Stationary autocovariance `σ²/(2γ) · e^{−γ|lag|}`.
pub fn stationary_autocovariance(params: &OuParams, lag: f64) -> Result<f64> {
    params.validate()?;
    if lag.is_nan() {
        return Err(Error::invalid("lag must not be NaN"));
    }
    let (_, variance) = stationary_moments(params)?;
    Ok(variance * (-params.gamma * lag.abs()).exp())
}
