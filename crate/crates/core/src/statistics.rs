//! Empirical statistics of traces and the closed-form moment expressions of
//! the bandwidth model.
//!
//! [`model_moments`] and [`aggregate_model_moments`] evaluate the model's
//! closed-form mean/variance expressions term for term:
//! `E = γ(E(B) + E(S)) + σK′`, `Var = γ(Var(B) + Var(S)) + σK′`. They are not
//! the moments of the synthesized process and are reported side by side with
//! empirical values rather than checked against them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::ou::Trace;
use crate::rng;
use crate::synthesis::{BandwidthSpec, MAX_EPSILON};
use crate::traffic::TrafficIndices;

/// Number of bootstrap replicates behind [`MomentReport`] standard errors.
pub const BOOTSTRAP_REPLICATES: usize = 500;
/// Block length exponent: blocks hold `N^0.6` samples.
pub const BLOCK_EXPONENT: f64 = 0.6;
const BOOTSTRAP_SEED: u64 = 0x0b5e_55ed_b007;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub mean: f64,
    /// Unbiased (n − 1) sample variance.
    pub variance: f64,
    pub count: usize,
    /// Block-bootstrap standard error of the mean.
    pub mean_se: f64,
    /// Block-bootstrap standard error of the variance.
    pub variance_se: f64,
    pub block_length: usize,
}

fn mean_of(values: &[f64]) -> f64 {
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return first;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample mean and variance with circular block-bootstrap standard errors.
///
/// Plain `1/sqrt(N)` errors understate the uncertainty of long-range
/// dependent series; resampling blocks of `N^0.6` consecutive samples keeps
/// the dependence inside each block.
pub fn sample_moments(trace: &Trace) -> Result<MomentReport> {
    let x = trace.values();
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid("sample moments need at least two samples"));
    }
    let mean = mean_of(x);
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let variance = centered.iter().map(|d| d * d).sum::<f64>() / (n as f64 - 1.0);

    let block = ((n as f64).powf(BLOCK_EXPONENT).round() as usize).clamp(1, n);
    let (mean_se, variance_se) = block_bootstrap_se(&centered, block);
    Ok(MomentReport {
        mean,
        variance,
        count: n,
        mean_se,
        variance_se,
        block_length: block,
    })
}

/// Circular moving-block bootstrap of the mean and variance of `centered`.
fn block_bootstrap_se(centered: &[f64], block: usize) -> (f64, f64) {
    let n = centered.len();
    let mut p1 = Vec::with_capacity(n + 1);
    let mut p2 = Vec::with_capacity(n + 1);
    p1.push(0.0);
    p2.push(0.0);
    for &d in centered {
        p1.push(p1.last().unwrap() + d);
        p2.push(p2.last().unwrap() + d * d);
    }
    let block_sum = |p: &[f64], start: usize| {
        let end = start + block;
        if end <= n {
            p[end] - p[start]
        } else {
            p[n] - p[start] + p[end - n]
        }
    };

    let blocks = n.div_ceil(block);
    let m = (blocks * block) as f64;
    let mut rng = rng::stream(BOOTSTRAP_SEED, 0);
    let mut means = Vec::with_capacity(BOOTSTRAP_REPLICATES);
    let mut vars = Vec::with_capacity(BOOTSTRAP_REPLICATES);
    for _ in 0..BOOTSTRAP_REPLICATES {
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..blocks {
            let start = rng.random_range(0..n);
            s1 += block_sum(&p1, start);
            s2 += block_sum(&p2, start);
        }
        let rep_mean = s1 / m;
        let rep_var = if m > 1.0 {
            (s2 / m - rep_mean * rep_mean).max(0.0) * m / (m - 1.0)
        } else {
            0.0
        };
        means.push(rep_mean);
        vars.push(rep_var);
    }
    (std_dev(&means), std_dev(&vars))
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Biased (1/N) sample autocovariance at lags `0..=max_lag`.
pub fn sample_autocovariance(trace: &Trace, max_lag: usize) -> Result<Vec<f64>> {
    let x = trace.values();
    let n = x.len();
    if 4 * max_lag >= n {
        return Err(Error::invalid(format!(
            "max_lag {max_lag} must be below a quarter of the trace length {n}"
        )));
    }
    let first = x[0];
    if x.iter().all(|&v| v == first) {
        return Ok(vec![0.0; max_lag + 1]);
    }
    let mean = mean_of(x);
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    Ok((0..=max_lag)
        .map(|k| d[..n - k].iter().zip(&d[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64)
        .collect())
}

/// Autocorrelation `ACV(k)/ACV(0)` at lags `0..=max_lag` with batch-means
/// standard errors.
///
/// The point estimate uses the whole trace; the error bar is the spread of
/// the same statistic over `batches` contiguous, non-overlapping batches
/// divided by `sqrt(batches)`.
pub fn autocorrelation_with_se(
    trace: &Trace,
    max_lag: usize,
    batches: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if batches < 2 {
        return Err(Error::invalid("need at least two batches"));
    }
    let ratio = |acv: Vec<f64>| -> Result<Vec<f64>> {
        if acv[0] <= 0.0 {
            return Err(Error::invalid("autocorrelation of a constant series is undefined"));
        }
        Ok(acv.iter().map(|c| c / acv[0]).collect())
    };
    let full = ratio(sample_autocovariance(trace, max_lag)?)?;
    let len = trace.len() / batches;
    let per_batch = (0..batches)
        .map(|b| {
            let chunk = Trace::new(trace.dt(), trace.values()[b * len..(b + 1) * len].to_vec())?;
            ratio(sample_autocovariance(&chunk, max_lag)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let se = (0..=max_lag)
        .map(|k| {
            let column: Vec<f64> = per_batch.iter().map(|r| r[k]).collect();
            std_dev(&column) / (batches as f64).sqrt()
        })
        .collect();
    Ok((full, se))
}

/// Inputs of the closed-form moment expressions for one component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentFormulaInput {
    pub gamma: f64,
    pub sigma: f64,
    pub kprime: f64,
    pub traffic_mean: f64,
    pub traffic_variance: f64,
    pub ou_mean: f64,
    pub ou_variance: f64,
}

impl MomentFormulaInput {
    pub fn from_spec(spec: &BandwidthSpec, traffic: (f64, f64), ou: (f64, f64)) -> Self {
        Self {
            gamma: spec.ou.gamma,
            sigma: spec.ou.sigma,
            kprime: spec.kprime,
            traffic_mean: traffic.0,
            traffic_variance: traffic.1,
            ou_mean: ou.0,
            ou_variance: ou.1,
        }
    }

    /// `(γ(E(B) + E(S)) + σK′, γ(Var(B) + Var(S)) + σK′)`.
    pub fn moments(&self) -> (f64, f64) {
        let offset = self.sigma * self.kprime;
        (
            self.gamma * (self.traffic_mean + self.ou_mean) + offset,
            self.gamma * (self.traffic_variance + self.ou_variance) + offset,
        )
    }
}

/// Closed-form mean and variance of an individual bandwidth process, exactly
/// as the model states them.
pub fn model_moments(
    spec: &BandwidthSpec,
    traffic_moments: (f64, f64),
    ou_moments: (f64, f64),
) -> Result<(f64, f64)> {
    spec.validate()?;
    Ok(MomentFormulaInput::from_spec(spec, traffic_moments, ou_moments).moments())
}

/// Componentwise sum of [`MomentFormulaInput::moments`].
pub fn aggregate_model_moments(components: &[MomentFormulaInput]) -> Result<(f64, f64)> {
    if components.is_empty() {
        return Err(Error::invalid("aggregate moments need at least one component"));
    }
    Ok(components.iter().fold((0.0, 0.0), |(m, v), c| {
        let (cm, cv) = c.moments();
        (m + cm, v + cv)
    }))
}

/// `H = (4 − min(n0, n1))/2 + ε`.
///
/// `min(n0, n1)` must lie in `(2, 3]`; the closed end admits the
/// short-range boundary `H = 1/2`.
pub fn hurst_from_indices(indices: &TrafficIndices, epsilon: f64) -> Result<f64> {
    indices.validate()?;
    ensure_finite("epsilon", epsilon)?;
    let min = indices.min_index();
    if !(min > 2.0 && min <= 3.0) {
        return Err(Error::invalid(format!(
            "min(n0, n1) = {min} violates 2 < min(n0, n1) <= 3"
        )));
    }
    if !(0.0..MAX_EPSILON).contains(&epsilon) {
        return Err(Error::invalid(format!(
            "epsilon = {epsilon} violates 0 <= epsilon < {MAX_EPSILON}"
        )));
    }
    let h = (4.0 - min) / 2.0 + epsilon;
    if h >= 1.0 {
        return Err(Error::invalid(format!("H = {h} violates H < 1")));
    }
    Ok(h)
}

/// Least-squares fit of `C1 t^{2(H−1)} + C2 e^{−λt} + C3`, `t = k·dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcvModelFit {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub lambda: f64,
    pub hurst: f64,
    /// Sum of squared residuals over lags `1..len`.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Both shape terms vanish: the series is explained by the constant alone.
    pub degenerate: bool,
}

impl AcvModelFit {
    /// Fitted ACV at time lag `t > 0`.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.c1 * t.powf(2.0 * (self.hurst - 1.0)) + self.c2 * (-self.lambda * t).exp() + self.c3
    }
}

const HURST_LO: f64 = 0.5 + 1e-9;
const HURST_HI: f64 = 1.0 - 1e-9;
const LAMBDA_LO: f64 = 1e-12;
const FIT_MAX_ITER: usize = 2_000;
const FIT_HURST_STARTS: [f64; 2] = [0.6, 0.9];
const FIT_LAMBDA_STARTS: [f64; 4] = [0.02, 0.1, 0.5, 2.5];

struct AcvProblem<'a> {
    t: Vec<f64>,
    y: &'a [f64],
}

// Parameter order: [c1, c2, c3, lambda, hurst].
impl AcvProblem<'_> {
    fn basis(&self, i: usize, lambda: f64, hurst: f64) -> [f64; 3] {
        let t = self.t[i];
        [t.powf(2.0 * (hurst - 1.0)), (-lambda * t).exp(), 1.0]
    }

    fn residuals(&self, p: &[f64; 5]) -> Vec<f64> {
        (0..self.t.len())
            .map(|i| {
                let b = self.basis(i, p[3], p[4]);
                self.y[i] - (p[0] * b[0] + p[1] * b[1] + p[2] * b[2])
            })
            .collect()
    }

    fn cost(&self, p: &[f64; 5]) -> f64 {
        self.residuals(p).iter().map(|r| r * r).sum()
    }

    /// Jacobian of the model (not the residual) in row-major order.
    fn jacobian(&self, p: &[f64; 5]) -> Vec<[f64; 5]> {
        (0..self.t.len())
            .map(|i| {
                let t = self.t[i];
                let b = self.basis(i, p[3], p[4]);
                [
                    b[0],
                    b[1],
                    1.0,
                    -p[1] * t * b[1],
                    p[0] * b[0] * 2.0 * t.ln(),
                ]
            })
            .collect()
    }

    /// Linear least squares for `(C1, C2, C3)` at fixed `(λ, H)`.
    fn linear_coefficients(&self, lambda: f64, hurst: f64) -> [f64; 3] {
        let mut a = [[0.0; 3]; 3];
        let mut g = [0.0; 3];
        for i in 0..self.t.len() {
            let b = self.basis(i, lambda, hurst);
            for r in 0..3 {
                g[r] += b[r] * self.y[i];
                for c in 0..3 {
                    a[r][c] += b[r] * b[c];
                }
            }
        }
        solve::<3>(a, g).unwrap_or_else(|| {
            let mean = self.y.iter().sum::<f64>() / self.y.len() as f64;
            [0.0, 0.0, mean]
        })
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= scale * 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for c in col..N {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn project(p: &mut [f64; 5]) {
    p[3] = p[3].max(LAMBDA_LO);
    p[4] = p[4].clamp(HURST_LO, HURST_HI);
}

/// Projected Levenberg–Marquardt from one start. Returns (params, cost, iterations, converged).
fn levenberg_marquardt(problem: &AcvProblem, mut p: [f64; 5]) -> ([f64; 5], f64, usize, bool) {
    let scale: f64 = problem.y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut cost = problem.cost(&p);
    let mut damping = 1e-3;
    for iter in 1..=FIT_MAX_ITER {
        if cost <= 1e-30 * scale {
            return (p, cost, iter, true);
        }
        let r = problem.residuals(&p);
        let jac = problem.jacobian(&p);
        let mut jtj = [[0.0; 5]; 5];
        let mut jtr = [0.0; 5];
        for (row, ri) in jac.iter().zip(&r) {
            for a in 0..5 {
                jtr[a] += row[a] * ri;
                for b in 0..5 {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        let diag_max = (0..5).map(|i| jtj[i][i]).fold(0.0f64, f64::max);
        let grad = jtr.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad <= 1e-15 * scale.sqrt() * diag_max.sqrt() {
            return (p, cost, iter, true);
        }

        loop {
            let mut lhs = jtj;
            for i in 0..5 {
                lhs[i][i] += damping * (jtj[i][i] + 1e-12 * diag_max);
            }
            let step = solve::<5>(lhs, jtr);
            let mut trial = p;
            if let Some(step) = step {
                for i in 0..5 {
                    trial[i] += step[i];
                }
                project(&mut trial);
            }
            let trial_cost = problem.cost(&trial);
            if step.is_some() && trial_cost.is_finite() && trial_cost < cost {
                let moved = (0..5)
                    .map(|i| (trial[i] - p[i]).abs() / (p[i].abs() + 1e-12))
                    .fold(0.0f64, f64::max);
                let improvement = (cost - trial_cost) / cost;
                p = trial;
                cost = trial_cost;
                damping = (damping / 3.0).max(1e-15);
                if moved < 1e-14 || improvement < 1e-14 {
                    return (p, cost, iter, true);
                }
                break;
            }
            damping *= 4.0;
            if damping > 1e16 {
                // No descent direction left: a stationary point within the bounds.
                return (p, cost, iter, true);
            }
        }
    }
    (p, cost, FIT_MAX_ITER, false)
}

/// Fits the three-term ACV model to `acv` (index = lag, lag 0 excluded from
/// the residual) sampled every `dt`.
///
/// Runs projected Levenberg–Marquardt from 8 starts on the `(H, λ)` grid
/// `{0.6, 0.9} × {0.02, 0.1, 0.5, 2.5}/dt` with the linear coefficients
/// solved exactly at each start. The best converged start wins, ties broken
/// by lower `H`.
pub fn fit_acv_model(acv: &[f64], dt: f64) -> Result<AcvModelFit> {
    if acv.len() < 10 {
        return Err(Error::invalid(format!(
            "ACV fit needs at least 10 lags, got {}",
            acv.len()
        )));
    }
    ensure_finite("dt", dt)?;
    if dt <= 0.0 {
        return Err(Error::invalid("dt must be > 0"));
    }
    if let Some(k) = acv.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("ACV at lag {k} is not finite")));
    }
    let problem = AcvProblem {
        t: (1..acv.len()).map(|k| k as f64 * dt).collect(),
        y: &acv[1..],
    };

    let mut best: Option<AcvModelFit> = None;
    for &h0 in &FIT_HURST_STARTS {
        for &l0 in &FIT_LAMBDA_STARTS {
            let lambda0 = l0 / dt;
            let c = problem.linear_coefficients(lambda0, h0);
            let start = [c[0], c[1], c[2], lambda0, h0];
            let (p, cost, iterations, converged) = levenberg_marquardt(&problem, start);
            let candidate = AcvModelFit {
                c1: p[0],
                c2: p[1],
                c3: p[2],
                lambda: p[3],
                hurst: p[4],
                residual: cost,
                converged,
                iterations,
                degenerate: false,
            };
            let better = match &best {
                None => true,
                Some(b) => {
                    (candidate.converged, -candidate.residual, -candidate.hurst)
                        > (b.converged, -b.residual, -b.hurst)
                }
            };
            if better {
                best = Some(candidate);
            }
        }
    }
    let mut fit = best.expect("at least one start");
    let size = acv[1..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    fit.degenerate = fit.c1.abs() <= 1e-9 * size.max(f64::MIN_POSITIVE)
        && fit.c2.abs() <= 1e-9 * size.max(f64::MIN_POSITIVE);
    if fit.degenerate {
        fit.c1 = 0.0;
        fit.c2 = 0.0;
    }
    if !fit.converged {
        return Err(Error::FitFailed {
            message: format!("no start converged within {FIT_MAX_ITER} iterations"),
            best: Box::new(fit),
        });
    }
    Ok(fit)
}

/// Outcome of the partial-sum / power-law-decay LRD check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrdDiagnostic {
    /// `Σ_{k=1}^{m} ACV(k)` for `m = 1..len−1`.
    pub partial_sums: Vec<f64>,
    /// Fitted decay exponent exceeds −1, so the partial sums grow without bound.
    pub diverges: bool,
    /// Slope of `ln|ACV(k)|` against `ln k` over the upper half of lags.
    pub decay_exponent: Option<f64>,
    /// `H = 1 + exponent/2`.
    pub hurst: Option<f64>,
    /// The regression window mixes signs (or has too few non-zero points),
    /// so the magnitude regression is not trustworthy.
    pub unreliable: bool,
    /// `(ln k, ln|ACV(k)|)` pairs used in the regression.
    pub regression_points: Vec<(f64, f64)>,
}

impl LrdDiagnostic {
    /// Divergent partial sums backed by a trustworthy regression.
    pub fn is_lrd(&self) -> bool {
        self.diverges && !self.unreliable
    }
}

/// Ordinary least squares `y = slope·x + intercept`; returns (slope, intercept, r²).
pub fn linear_regression(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope, intercept, r2))
}

/// Long-range dependence check on an ACV series (index = lag).
pub fn lrd_diagnostic(acv: &[f64]) -> Result<LrdDiagnostic> {
    if acv.len() < 32 {
        return Err(Error::invalid(format!(
            "LRD diagnostic needs at least 32 lags, got {}",
            acv.len()
        )));
    }
    let mut partial_sums = Vec::with_capacity(acv.len() - 1);
    let mut running = 0.0;
    for v in &acv[1..] {
        running += v;
        partial_sums.push(running);
    }

    let last = acv.len() - 1;
    let window = &acv[last.div_ceil(2).max(1)..];
    let start = acv.len() - window.len();
    let has_pos = window.iter().any(|&v| v > 0.0);
    let has_neg = window.iter().any(|&v| v < 0.0);
    let regression_points: Vec<(f64, f64)> = window
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (((start + i) as f64).ln(), v.abs().ln()))
        .collect();
    let fitted = linear_regression(&regression_points);
    let decay_exponent = fitted.map(|f| f.0);
    let unreliable = (has_pos && has_neg) || fitted.is_none();
    Ok(LrdDiagnostic {
        partial_sums,
        diverges: decay_exponent.is_some_and(|e| e > -1.0),
        decay_exponent,
        hurst: decay_exponent.map(|e| 1.0 + e / 2.0),
        unreliable,
        regression_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ou::{Grid, OuParams};
    use crate::traffic::PowerLawParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn trace(values: &[f64]) -> Trace {
        Trace::new(1.0, values.to_vec()).unwrap()
    }

    #[test]
    fn moments_of_small_traces() {
        let r = sample_moments(&trace(&[5.0, 5.0, 5.0, 5.0])).unwrap();
        assert_eq!((r.mean, r.variance, r.count), (5.0, 0.0, 4));
        let r = sample_moments(&trace(&[0.0, 1.0])).unwrap();
        assert_eq!((r.mean, r.variance), (0.5, 0.5));
        assert!(sample_moments(&trace(&[1.0])).is_err());
    }

    #[test]
    fn bootstrap_se_is_near_iid_value_for_white_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..50_000).map(|_| rng.sample(StandardNormal)).collect();
        let r = sample_moments(&trace(&xs)).unwrap();
        let iid = (1.0 / 50_000.0f64).sqrt();
        assert!(r.mean_se > 0.7 * iid && r.mean_se < 1.3 * iid, "{}", r.mean_se);
        let iid_var = (2.0 / 50_000.0f64).sqrt();
        assert!(r.variance_se > 0.7 * iid_var && r.variance_se < 1.3 * iid_var);
    }

    #[test]
    fn acv_of_constant_is_zero() {
        let acv = sample_autocovariance(&trace(&[0.1; 100]), 10).unwrap();
        assert!(acv.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn acv_lag_zero_is_biased_variance() {
        let xs = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0, 3.0, 6.0, 0.0, 9.0];
        let acv = sample_autocovariance(&trace(&xs), 2).unwrap();
        let r = sample_moments(&trace(&xs)).unwrap();
        assert!((acv[0] - r.variance * 9.0 / 10.0).abs() < 1e-12);
        assert!(sample_autocovariance(&trace(&xs), 3).is_err());
    }

    #[test]
    fn white_noise_acv_within_band() {
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let acv = sample_autocovariance(&trace(&xs), 20).unwrap();
        for (k, c) in acv.iter().enumerate().skip(1) {
            assert!(c.abs() < 4.0 / (n as f64).sqrt(), "lag {k}: {c}");
        }
    }

    #[test]
    fn model_moment_arithmetic() {
        let spec = BandwidthSpec::new(
            PowerLawParams::new(1.0, 3.0).unwrap(),
            OuParams::zero_mean(1.0, 0.0).unwrap(),
            Grid::new(0.1, 10).unwrap(),
        )
        .unwrap();
        assert_eq!(model_moments(&spec, (2.0, 0.0), (0.0, 0.0)).unwrap().0, 2.0);

        let mut s = spec;
        s.ou = OuParams::zero_mean(0.5, 2.0).unwrap();
        s.kprime = 0.1;
        let (_, var) = model_moments(&s, (0.0, 4.0), (0.0, 1.0)).unwrap();
        assert!((var - 2.7).abs() < 1e-12);

        s.ou = OuParams::zero_mean(1.0, 3.0).unwrap();
        s.kprime = 0.0;
        assert_eq!(model_moments(&s, (0.0, 0.0), (0.0, 0.0)).unwrap().1, 0.0);
    }

    fn input(gamma: f64, sigma: f64, kprime: f64, eb: f64, es: f64) -> MomentFormulaInput {
        MomentFormulaInput {
            gamma,
            sigma,
            kprime,
            traffic_mean: eb,
            traffic_variance: 2.0 * eb,
            ou_mean: es,
            ou_variance: 0.5,
        }
    }

    #[test]
    fn aggregate_moment_sums() {
        let one = input(0.7, 1.3, 0.2, 3.0, 0.0);
        assert_eq!(aggregate_model_moments(&[one]).unwrap(), one.moments());
        let (m2, v2) = aggregate_model_moments(&[one, one]).unwrap();
        assert_eq!((m2, v2), (2.0 * one.moments().0, 2.0 * one.moments().1));
        let parts = [
            input(0.5, 1.0, 0.0, 2.0, 0.0),
            input(1.5, 2.0, 0.0, 3.0, 1.0),
            input(2.0, 0.1, 0.0, 1.0, -0.5),
        ];
        let (m, _) = aggregate_model_moments(&parts).unwrap();
        assert!((m - (0.5 * 2.0 + 1.5 * 4.0 + 2.0 * 0.5)).abs() < 1e-12);
        assert!(aggregate_model_moments(&[]).is_err());
    }

    #[test]
    fn hurst_link() {
        let h = |n0, n1, e| hurst_from_indices(&TrafficIndices::new(n0, n1).unwrap(), e);
        assert_eq!(h(3.0, 3.0, 0.0).unwrap(), 0.5);
        assert_eq!(h(2.5, 2.8, 0.0).unwrap(), 0.75);
        assert!((h(2.2, 4.0, 0.01).unwrap() - 0.91).abs() < 1e-12);
        assert!(h(3.5, 3.5, 0.0).is_err());
        assert!(h(2.0, 2.5, 0.0).is_err());
        assert!(h(2.1, 2.5, 0.1).is_err());
        assert!(h(2.5, 2.5, 0.3).is_err());
        let mut prev = f64::INFINITY;
        for i in 1..=100 {
            let hi = h(2.0 + i as f64 / 100.0, 4.0, 0.0).unwrap();
            assert!(hi < prev);
            prev = hi;
        }
    }

    fn model(c1: f64, h: f64, c2: f64, lambda: f64, c3: f64, len: usize) -> Vec<f64> {
        (0..len)
            .map(|k| {
                let t = k.max(1) as f64;
                c1 * t.powf(2.0 * (h - 1.0)) + c2 * (-lambda * t).exp() + c3
            })
            .collect()
    }

    #[test]
    fn fit_recovers_pure_power_law() {
        let acv: Vec<f64> = model(2.0, 0.75, 0.0, 1.0, 0.0, 200);
        let fit = fit_acv_model(&acv, 1.0).unwrap();
        assert!((fit.c1 - 2.0).abs() < 2e-3, "{fit:?}");
        assert!((fit.hurst - 0.75).abs() < 1e-3, "{fit:?}");
        assert!(fit.c2.abs() < 1e-3 && fit.c3.abs() < 1e-3, "{fit:?}");
    }

    #[test]
    fn fit_recovers_exponential_plus_constant() {
        let acv = model(0.0, 0.75, 3.0, 0.2, 1.0, 200);
        let fit = fit_acv_model(&acv, 1.0).unwrap();
        assert!(fit.c1.abs() < 1e-3, "{fit:?}");
        assert!((fit.c2 - 3.0).abs() < 3e-3, "{fit:?}");
        assert!((fit.lambda - 0.2).abs() < 2e-4, "{fit:?}");
        assert!((fit.c3 - 1.0).abs() < 1e-3, "{fit:?}");
    }

    #[test]
    fn fit_of_constant_is_degenerate() {
        let fit = fit_acv_model(&[4.0; 50], 1.0).unwrap();
        assert!(fit.degenerate);
        assert_eq!((fit.c1, fit.c2), (0.0, 0.0));
        assert!((fit.c3 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_short_series() {
        assert!(fit_acv_model(&[1.0; 9], 1.0).is_err());
    }

    #[test]
    fn lrd_on_power_laws_and_exponentials() {
        let power = |e: f64| -> Vec<f64> { (0..256).map(|k| (k.max(1) as f64).powf(e)).collect() };
        for e in [-0.2, -0.5, -0.8] {
            let d = lrd_diagnostic(&power(e)).unwrap();
            assert!(d.diverges && d.is_lrd(), "exponent {e}");
            assert!((d.decay_exponent.unwrap() - e).abs() < 1e-9);
        }
        for e in [-1.5, -2.0] {
            assert!(!lrd_diagnostic(&power(e)).unwrap().diverges, "exponent {e}");
        }
        let geometric: Vec<f64> = (0..64).map(|k| (-(k as f64)).exp()).collect();
        assert!(!lrd_diagnostic(&geometric).unwrap().diverges);
        let d = lrd_diagnostic(&power(-0.5)).unwrap();
        assert!((d.hurst.unwrap() - 0.75).abs() < 1e-9);
        assert_eq!(d.partial_sums.len(), 255);
    }

    #[test]
    fn lrd_flags_sign_changes() {
        let alternating: Vec<f64> = (0..64).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let d = lrd_diagnostic(&alternating).unwrap();
        assert!(d.unreliable && !d.is_lrd());
        assert!(lrd_diagnostic(&[1.0; 31]).is_err());
    }

    #[test]
    fn regression_on_exact_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 - 0.5 * i as f64)).collect();
        let (s, b, r2) = linear_regression(&pts).unwrap();
        assert!((s + 0.5).abs() < 1e-12 && (b - 3.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }
}
