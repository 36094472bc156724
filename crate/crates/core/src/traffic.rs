//! Power-law traffic marginal.
//!
//! Density `f(x) = (n − 1) a^{n−1} x^{−n}` for `x ≥ a`, zero below the
//! cutoff. Samples come from the inverse CDF `x = a (1 − u)^{−1/(n−1)}`,
//! which is the familiar `a / sqrt(1 − u)` when `n = 3`.

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLawParams {
    /// Lower cutoff, the infimum of the support.
    pub a: f64,
    /// Tail index of the density. Finite mean needs `n > 2`, finite variance `n > 3`.
    pub n: f64,
}

impl PowerLawParams {
    pub fn new(a: f64, n: f64) -> Result<Self> {
        let params = Self { a, n };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("a", self.a)?;
        ensure_finite("n", self.n)?;
        if self.a <= 0.0 {
            return Err(Error::invalid(format!("cutoff a must be > 0, got {}", self.a)));
        }
        if self.n <= 1.0 {
            return Err(Error::invalid(format!(
                "tail index n must be > 1 for a normalizable density, got {}",
                self.n
            )));
        }
        Ok(())
    }

    /// `k = (n − 1) a^{n−1}`.
    pub fn normalization(&self) -> f64 {
        (self.n - 1.0) * self.a.powf(self.n - 1.0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.a {
            0.0
        } else {
            1.0 - (self.a / x).powf(self.n - 1.0)
        }
    }

    /// `a (n − 1)/(n − 2)`, infinite for `n ≤ 2`.
    pub fn mean(&self) -> f64 {
        if self.n > 2.0 {
            self.a * (self.n - 1.0) / (self.n - 2.0)
        } else {
            f64::INFINITY
        }
    }

    /// Variance, infinite for `n ≤ 3`.
    pub fn variance(&self) -> f64 {
        if self.n > 3.0 {
            let alpha = self.n - 1.0;
            self.a * self.a * alpha / ((alpha - 1.0).powi(2) * (alpha - 2.0))
        } else {
            f64::INFINITY
        }
    }
}

/// ON/OFF period tail indices; only `min(n0, n1)` enters the Hurst link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficIndices {
    pub n0: f64,
    pub n1: f64,
}

impl TrafficIndices {
    pub fn new(n0: f64, n1: f64) -> Result<Self> {
        let indices = Self { n0, n1 };
        indices.validate()?;
        Ok(indices)
    }

    /// Both periods share the index of a single marginal.
    pub fn single(n: f64) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("n0", self.n0)?;
        ensure_finite("n1", self.n1)?;
        if self.n0 <= 1.0 || self.n1 <= 1.0 {
            return Err(Error::invalid(format!(
                "tail indices must exceed 1, got n0={} n1={}",
                self.n0, self.n1
            )));
        }
        Ok(())
    }

    pub fn min_index(&self) -> f64 {
        self.n0.min(self.n1)
    }
}

/// Inverse-transform sample for a uniform variate `u`.
///
/// `u` must lie in `(0, 1)`: `u = 1` is the image of `+∞` and is rejected.
/// The map is strictly increasing in `u` and tends to `a` as `u → 0⁺`.
pub fn power_law_sample(params: &PowerLawParams, u: f64) -> Result<f64> {
    params.validate()?;
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::invalid(format!(
            "uniform variate must lie in (0, 1), got {u}"
        )));
    }
    Ok(sample_unchecked(params, u))
}

#[inline]
fn sample_unchecked(params: &PowerLawParams, u: f64) -> f64 {
    // ln(1 − u) via ln_1p for accuracy near u = 0.
    params.a * (-(-u).ln_1p() / (params.n - 1.0)).exp()
}

pub fn power_law_pdf(params: &PowerLawParams, x: f64) -> f64 {
    if x < params.a {
        0.0
    } else {
        params.normalization() * x.powf(-params.n)
    }
}

/// `count` i.i.d. traffic samples.
pub fn generate_traffic_series(params: &PowerLawParams, count: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = rng::traffic_stream(seed, 0);
    generate_traffic_with(params, count, &mut rng)
}

pub(crate) fn generate_traffic_with<R: Rng + ?Sized>(
    params: &PowerLawParams,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    params.validate()?;
    if count < 1 {
        return Err(Error::invalid("traffic series needs count >= 1"));
    }
    Ok((0..count)
        .map(|_| {
            let u: f64 = rng.sample(Open01);
            sample_unchecked(params, u)
        })
        .collect())
}
