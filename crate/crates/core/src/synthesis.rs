//! Bandwidth traces as discretized stochastic integrals.
//!
//! One step of the individual bandwidth process is
//!
//! ```text
//! bw_i = | B(t_{i+1}) · (S_{t_{i+1}} − S_{t_i}) |
//! ```
//!
//! where `B` is a fresh power-law traffic sample and `S` one exact OU path.
//! Aggregates are pointwise sums of independently seeded components;
//! multiservice models keep one independent trace per named service.
//!
//! Randomness is organized in lanes: lane `l` of a seed owns ChaCha streams
//! `2l` (OU) and `2l + 1` (traffic). A single trace uses lane 0, component
//! `i` of an aggregate or multiservice model uses lane `i`, so component 0
//! reproduces the single-trace output exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::ou::{self, Grid, OuParams, Trace};
use crate::rng;
use crate::statistics::hurst_from_indices;
use crate::traffic::{self, PowerLawParams, TrafficIndices};

/// Upper bound (exclusive) on the Hurst slack.
pub const MAX_EPSILON: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthSpec {
    pub traffic: PowerLawParams,
    pub ou: OuParams,
    pub grid: Grid,
    /// Model constant `K′`; only the closed-form moment expressions read it.
    #[serde(default)]
    pub kprime: f64,
    /// Hurst slack `ε ∈ [0, 0.25)`.
    #[serde(default)]
    pub epsilon: f64,
    /// OU steps simulated and discarded before the first recorded increment.
    #[serde(default)]
    pub burn_in: usize,
}

impl BandwidthSpec {
    pub fn new(traffic: PowerLawParams, ou: OuParams, grid: Grid) -> Result<Self> {
        let spec = Self {
            traffic,
            ou,
            grid,
            kprime: 0.0,
            epsilon: 0.0,
            burn_in: 0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_kprime(mut self, kprime: f64) -> Result<Self> {
        self.kprime = kprime;
        self.validate()?;
        Ok(self)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        self.epsilon = epsilon;
        self.validate()?;
        Ok(self)
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Result<Self> {
        self.burn_in = burn_in;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.traffic.validate()?;
        self.ou.validate()?;
        self.grid.validate()?;
        ensure_finite("kprime", self.kprime)?;
        ensure_finite("epsilon", self.epsilon)?;
        if self.ou.mu != 0.0 {
            return Err(Error::invalid(format!(
                "the bandwidth model uses a zero-mean OU process, got mu={}",
                self.ou.mu
            )));
        }
        if !(0.0..MAX_EPSILON).contains(&self.epsilon) {
            return Err(Error::invalid(format!(
                "epsilon must lie in [0, {MAX_EPSILON}), got {}",
                self.epsilon
            )));
        }
        // Within the LRD range of the index, H + ε must stay below 1.
        let n = self.traffic.n;
        if n > 2.0 && n <= 3.0 {
            let h = (4.0 - n) / 2.0;
            if h + self.epsilon >= 1.0 {
                return Err(Error::invalid(format!(
                    "H + epsilon = {} must stay below 1",
                    h + self.epsilon
                )));
            }
        }
        Ok(())
    }

    /// Hurst parameter of the single-index configuration `n0 = n1 = n`.
    pub fn hurst(&self) -> Result<f64> {
        hurst_from_indices(&TrafficIndices::single(self.traffic.n)?, self.epsilon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateSpec {
    pub components: Vec<BandwidthSpec>,
}

impl AggregateSpec {
    pub fn new(components: Vec<BandwidthSpec>) -> Result<Self> {
        let spec = Self { components };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .components
            .first()
            .ok_or_else(|| Error::invalid("an aggregate needs at least one component"))?;
        for (i, c) in self.components.iter().enumerate() {
            c.validate()?;
            if c.grid != first.grid {
                return Err(Error::invalid(format!(
                    "component {i} grid {:?} differs from component 0 grid {:?}",
                    c.grid, first.grid
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedService {
    pub name: String,
    pub spec: BandwidthSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiserviceSpec {
    pub services: Vec<NamedService>,
}

impl MultiserviceSpec {
    pub fn new(services: Vec<NamedService>) -> Result<Self> {
        let spec = Self { services };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .services
            .first()
            .ok_or_else(|| Error::invalid("a multiservice model needs at least one service"))?;
        for (i, s) in self.services.iter().enumerate() {
            if s.name.trim().is_empty() {
                return Err(Error::invalid(format!("service {i} has an empty name")));
            }
            if self.services[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::invalid(format!("duplicate service name {:?}", s.name)));
            }
            s.spec.validate()?;
            if s.spec.grid != first.spec.grid {
                return Err(Error::invalid(format!(
                    "service {:?} does not share the grid of {:?}",
                    s.name, first.name
                )));
            }
        }
        Ok(())
    }
}

/// Signed Ito-sum increments `B_i · ΔS_i` of one lane, before the absolute value.
fn lane_increments(spec: &BandwidthSpec, seed: u64, lane: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let path_grid = Grid::new(spec.grid.dt, spec.grid.count + spec.burn_in)?;
    let path = ou::generate_path_with(&spec.ou, &path_grid, &mut rng::ou_stream(seed, lane))?;
    let traffic = traffic::generate_traffic_with(
        &spec.traffic,
        spec.grid.count,
        &mut rng::traffic_stream(seed, lane),
    )?;
    let kept = &path.values()[spec.burn_in..];
    Ok(kept
        .windows(2)
        .zip(traffic)
        .map(|(s, b)| b * (s[1] - s[0]))
        .collect())
}

/// Signed discretized stochastic integral increments for one peer.
///
/// Summing these over a fixed horizon approximates `∫ B dS`; this is the
/// quantity whose distribution is stable under grid refinement.
pub fn ito_increments(spec: &BandwidthSpec, seed: u64) -> Result<Trace> {
    Trace::new(spec.grid.dt, lane_increments(spec, seed, 0)?)
}

fn lane_bandwidth(spec: &BandwidthSpec, seed: u64, lane: u64) -> Result<Vec<f64>> {
    Ok(lane_increments(spec, seed, lane)?
        .into_iter()
        .map(f64::abs)
        .collect())
}

/// Individual bandwidth trace of `grid.count` non-negative increments.
pub fn synthesize_bandwidth(spec: &BandwidthSpec, seed: u64) -> Result<Trace> {
    Trace::new(spec.grid.dt, lane_bandwidth(spec, seed, 0)?)
}

/// Aggregate trace plus the per-component traces that were summed.
pub fn synthesize_aggregate_with_components(
    spec: &AggregateSpec,
    seed: u64,
) -> Result<(Trace, Vec<Trace>)> {
    spec.validate()?;
    let dt = spec.components[0].grid.dt;
    let components = spec
        .components
        .par_iter()
        .enumerate()
        .map(|(i, c)| lane_bandwidth(c, seed, i as u64))
        .collect::<Result<Vec<_>>>()?;

    let mut total = vec![0.0; components[0].len()];
    for c in &components {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    let traces = components
        .into_iter()
        .map(|c| Trace::new(dt, c))
        .collect::<Result<Vec<_>>>()?;
    Ok((Trace::new(dt, total)?, traces))
}

/// Pointwise sum of independently seeded component traces.
pub fn synthesize_aggregate(spec: &AggregateSpec, seed: u64) -> Result<Trace> {
    synthesize_aggregate_with_components(spec, seed).map(|(total, _)| total)
}

/// One independent bandwidth trace per service, in declaration order.
pub fn synthesize_multiservice(spec: &MultiserviceSpec, seed: u64) -> Result<Vec<(String, Trace)>> {
    spec.validate()?;
    spec.services
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let values = lane_bandwidth(&s.spec, seed, i as u64)?;
            Ok((s.name.clone(), Trace::new(s.spec.grid.dt, values)?))
        })
        .collect()
}
