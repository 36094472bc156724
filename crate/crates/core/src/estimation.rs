//! Parameter estimation for the bandwidth model.
//!
//! The OU parameters `(γ, σ)` and the traffic tail index `n` are estimated
//! separately: `(γ, σ)` from an OU-attributed trace, `n` from traffic samples.
//!
//! Three routes to `(γ, σ)` exist side by side:
//!
//! - [`Method::ExactMle`] maximizes the exact Gaussian likelihood of a
//!   zero-mean OU process observed on a uniform grid (stationary density for
//!   `x_0`, exact transitions after). The likelihood is profiled onto
//!   `A = e^{−γΔ} ∈ (0, 1)` and maximized in one dimension.
//! - [`Method::LiteralQuintic`] evaluates the stationarity equations exactly
//!   as written for this model: the quintic
//!   `C1 A⁵ − C2 A³ + C3 A² + C4 A − C5 = 0` and the closed-form `σ̂` whose
//!   numerator uses `Σ x_k` rather than `Σ x_k x_{k−1}`. It is not the
//!   likelihood maximizer and is reported next to it, never merged.
//! - [`Method::Ar1Oracle`] is the least-squares AR(1) coefficient. It
//!   coincides with the conditional (x_0-free) MLE, see
//!   [`estimate_gamma_sigma_conditional`].

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::ou::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactMle,
    ConditionalMle,
    LiteralQuintic,
    Ar1Oracle,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StandardErrors {
    pub gamma: Option<f64>,
    pub sigma: Option<f64>,
    pub n: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub method: Method,
    pub gamma_hat: Option<f64>,
    pub sigma_hat: Option<f64>,
    pub n_hat: Option<f64>,
    /// `A = e^{−γ̂Δ}` at the estimate.
    pub a_hat: Option<f64>,
    pub log_likelihood: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub standard_errors: StandardErrors,
    pub notes: Vec<String>,
}

impl EstimationResult {
    fn empty(method: Method) -> Self {
        Self {
            method,
            gamma_hat: None,
            sigma_hat: None,
            n_hat: None,
            a_hat: None,
            log_likelihood: None,
            converged: false,
            iterations: 0,
            standard_errors: StandardErrors::default(),
            notes: Vec::new(),
        }
    }
}

/// Sufficient statistics of a zero-mean AR(1) observed as `x_0..x_n`.
#[derive(Debug, Clone, Copy)]
struct Sums {
    transitions: usize,
    x0_sq: f64,
    /// Σ_{k≥1} x_k²
    sxx: f64,
    /// Σ_{k≥1} x_k x_{k−1}
    sxy: f64,
    /// Σ_{k≥1} x_{k−1}²
    syy: f64,
    /// Σ_{k≥1} x_k
    sum_x: f64,
}

impl Sums {
    fn new(x: &[f64]) -> Self {
        let mut s = Sums {
            transitions: x.len() - 1,
            x0_sq: x[0] * x[0],
            sxx: 0.0,
            sxy: 0.0,
            syy: 0.0,
            sum_x: 0.0,
        };
        for w in x.windows(2) {
            s.sxx += w[1] * w[1];
            s.sxy += w[1] * w[0];
            s.syy += w[0] * w[0];
            s.sum_x += w[1];
        }
        s
    }

    /// Σ (x_k − A x_{k−1})²
    fn rss(&self, a: f64) -> f64 {
        (self.sxx - 2.0 * a * self.sxy + a * a * self.syy).max(0.0)
    }

    fn rss_prime(&self, a: f64) -> f64 {
        -2.0 * self.sxy + 2.0 * a * self.syy
    }
}

/// Which terms enter the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Likelihood {
    Exact,
    Conditional,
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn one_minus_a_sq(a: f64) -> f64 {
    (1.0 - a) * (1.0 + a)
}

fn check_ou_args(trace: &Trace, gamma: f64, sigma: f64) -> Result<()> {
    ensure_finite("gamma", gamma)?;
    ensure_finite("sigma", sigma)?;
    if trace.len() < 2 {
        return Err(Error::invalid("likelihood needs at least two observations"));
    }
    if gamma <= 0.0 || sigma <= 0.0 {
        return Err(Error::invalid(format!(
            "gamma and sigma must be > 0, got gamma={gamma} sigma={sigma}"
        )));
    }
    Ok(())
}

fn log_likelihood_from(trace: &Trace, gamma: f64, sigma: f64, kind: Likelihood) -> f64 {
    let x = trace.values();
    let n = (x.len() - 1) as f64;
    let a = (-gamma * trace.dt()).exp();
    let q = -(-2.0 * gamma * trace.dt()).exp_m1();
    let v = sigma * sigma / (2.0 * gamma);
    let rss: f64 = x.windows(2).map(|w| (w[1] - a * w[0]).powi(2)).sum();
    let transitions = -0.5 * n * (LN_2PI + (v * q).ln()) - rss / (2.0 * v * q);
    match kind {
        Likelihood::Exact => transitions - 0.5 * (LN_2PI + v.ln()) - x[0] * x[0] / (2.0 * v),
        Likelihood::Conditional => transitions,
    }
}

/// Exact log-likelihood of a zero-mean OU process observed at uniform
/// spacing: stationary density for `x_0` plus Gaussian transitions with mean
/// `e^{−γΔ} x_{k−1}` and variance `σ²(1 − e^{−2γΔ})/(2γ)`.
pub fn ou_log_likelihood(trace: &Trace, gamma: f64, sigma: f64) -> Result<f64> {
    check_ou_args(trace, gamma, sigma)?;
    Ok(log_likelihood_from(trace, gamma, sigma, Likelihood::Exact))
}

/// Transition-only log-likelihood (the `x_0` term dropped).
pub fn ou_conditional_log_likelihood(trace: &Trace, gamma: f64, sigma: f64) -> Result<f64> {
    check_ou_args(trace, gamma, sigma)?;
    Ok(log_likelihood_from(trace, gamma, sigma, Likelihood::Conditional))
}

/// Stationary-variance estimate `v̂(A) = σ²/(2γ)` maximizing the likelihood at fixed `A`.
fn profile_variance(s: &Sums, a: f64, kind: Likelihood) -> f64 {
    let q = one_minus_a_sq(a);
    let n = s.transitions as f64;
    match kind {
        Likelihood::Exact => (s.x0_sq + s.rss(a) / q) / (n + 1.0),
        Likelihood::Conditional => s.rss(a) / (n * q),
    }
}

fn profile_log_likelihood(s: &Sums, a: f64, kind: Likelihood) -> f64 {
    let q = one_minus_a_sq(a);
    let n = s.transitions as f64;
    let v = profile_variance(s, a, kind);
    match kind {
        Likelihood::Exact => -0.5 * (n + 1.0) * (LN_2PI + v.ln() + 1.0) - 0.5 * n * q.ln(),
        Likelihood::Conditional => -0.5 * n * (LN_2PI + (v * q).ln() + 1.0),
    }
}

fn profile_derivative(s: &Sums, a: f64, kind: Likelihood) -> f64 {
    let q = one_minus_a_sq(a);
    let n = s.transitions as f64;
    match kind {
        Likelihood::Exact => {
            let g = s.x0_sq + s.rss(a) / q;
            let g_prime = s.rss_prime(a) / q + s.rss(a) * 2.0 * a / (q * q);
            -0.5 * (n + 1.0) * g_prime / g + n * a / q
        }
        Likelihood::Conditional => -0.5 * n * s.rss_prime(a) / s.rss(a),
    }
}

const PROFILE_GRID: usize = 4_000;
const LN_RATE_LO: f64 = -20.7; // γΔ ≈ 1e-9
const LN_RATE_HI: f64 = 3.7; // γΔ ≈ 40
const GOLDEN_TOL: f64 = 1e-12;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

struct ProfileMax {
    a: f64,
    iterations: usize,
    interior: bool,
}

/// Maximizes the profile likelihood over `A ∈ (0, 1)`.
///
/// A log-spaced scan of `γΔ` brackets the maximum, golden-section search
/// narrows it to `1e-12`, and bisection on the analytic derivative over the
/// scan bracket polishes the stationary point.
fn maximize_profile(s: &Sums, kind: Likelihood) -> ProfileMax {
    let a_at = |i: usize| {
        let u = LN_RATE_LO + (LN_RATE_HI - LN_RATE_LO) * i as f64 / (PROFILE_GRID - 1) as f64;
        (-u.exp()).exp()
    };
    let f = |a: f64| {
        let v = profile_log_likelihood(s, a, kind);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let (best, _) = (0..PROFILE_GRID)
        .map(|i| (i, f(a_at(i))))
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let interior = best > 0 && best < PROFILE_GRID - 1;
    if !interior {
        return ProfileMax {
            a: a_at(best),
            iterations: PROFILE_GRID,
            interior: false,
        };
    }
    // A decreases along the grid.
    let (mut lo, mut hi) = (a_at(best + 1), a_at(best - 1));
    let (bracket_lo, bracket_hi) = (lo, hi);
    let mut iterations = PROFILE_GRID;

    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > GOLDEN_TOL {
        iterations += 1;
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    let mut a = 0.5 * (lo + hi);

    let d = |a: f64| profile_derivative(s, a, kind);
    let (mut dlo, mut dhi) = (bracket_lo, bracket_hi);
    if d(dlo) > 0.0 && d(dhi) < 0.0 {
        for _ in 0..200 {
            iterations += 1;
            let mid = 0.5 * (dlo + dhi);
            if mid <= dlo || mid >= dhi {
                break;
            }
            if d(mid) > 0.0 {
                dlo = mid;
            } else {
                dhi = mid;
            }
        }
        // Function values tie within rounding across a ~sqrt(eps) plateau,
        // so the derivative root is the sharper answer.
        a = 0.5 * (dlo + dhi);
    }
    ProfileMax {
        a,
        iterations,
        interior: true,
    }
}

/// Observed-information standard errors from a central-difference Hessian.
fn hessian_se(trace: &Trace, gamma: f64, sigma: f64, kind: Likelihood) -> (Option<f64>, Option<f64>) {
    let ll = |g: f64, s: f64| log_likelihood_from(trace, g, s, kind);
    let (hg, hs) = (1e-4 * gamma, 1e-4 * sigma);
    let f0 = ll(gamma, sigma);
    let gg = (ll(gamma + hg, sigma) - 2.0 * f0 + ll(gamma - hg, sigma)) / (hg * hg);
    let ss = (ll(gamma, sigma + hs) - 2.0 * f0 + ll(gamma, sigma - hs)) / (hs * hs);
    let gs = (ll(gamma + hg, sigma + hs) - ll(gamma + hg, sigma - hs) - ll(gamma - hg, sigma + hs)
        + ll(gamma - hg, sigma - hs))
        / (4.0 * hg * hs);
    // Covariance = inverse of the negated Hessian.
    let det = gg * ss - gs * gs;
    if !(det > 0.0 && gg < 0.0) {
        return (None, None);
    }
    let var_g = -ss / det;
    let var_s = -gg / det;
    let se = |v: f64| (v > 0.0 && v.is_finite()).then(|| v.sqrt());
    (se(var_g), se(var_s))
}

fn fit_ou(trace: &Trace, kind: Likelihood) -> Result<EstimationResult> {
    if trace.len() < 10 {
        return Err(Error::invalid(format!(
            "OU estimation needs at least 10 observations, got {}",
            trace.len()
        )));
    }
    let s = Sums::new(trace.values());
    if s.syy == 0.0 || s.sxx == 0.0 {
        return Err(Error::EstimationDegenerate(
            "trace is identically zero (or zero before its last sample)".into(),
        ));
    }
    let method = match kind {
        Likelihood::Exact => Method::ExactMle,
        Likelihood::Conditional => Method::ConditionalMle,
    };
    let best = maximize_profile(&s, kind);
    let a = best.a;
    let gamma = -a.ln() / trace.dt();
    let v = profile_variance(&s, a, kind);
    let sigma = (2.0 * gamma * v).sqrt();

    let mut out = EstimationResult::empty(method);
    out.a_hat = Some(a);
    out.iterations = best.iterations;
    out.converged = best.interior && gamma > 0.0 && sigma > 0.0 && sigma.is_finite();
    if !best.interior {
        out.notes.push(format!(
            "profile maximum sits on the search boundary (A = {a}); A must lie strictly inside (0, 1)"
        ));
    }
    if gamma > 0.0 && gamma.is_finite() && sigma > 0.0 && sigma.is_finite() {
        out.gamma_hat = Some(gamma);
        out.sigma_hat = Some(sigma);
        out.log_likelihood = Some(log_likelihood_from(trace, gamma, sigma, kind));
        let (se_g, se_s) = hessian_se(trace, gamma, sigma, kind);
        out.standard_errors.gamma = se_g;
        out.standard_errors.sigma = se_s;
    }
    Ok(out)
}

/// Exact-likelihood estimate of `(γ, σ)` for a zero-mean OU trace.
pub fn estimate_gamma_sigma(trace: &Trace) -> Result<EstimationResult> {
    fit_ou(trace, Likelihood::Exact)
}

/// Conditional-likelihood estimate; `γ̂` equals the AR(1) oracle's analytically.
pub fn estimate_gamma_sigma_conditional(trace: &Trace) -> Result<EstimationResult> {
    fit_ou(trace, Likelihood::Conditional)
}

/// Least-squares AR(1) oracle: `Â = Σ x_k x_{k−1} / Σ x²_{k−1}`, `γ̂ = −ln Â / Δ`.
pub fn ar1_oracle(trace: &Trace) -> Result<EstimationResult> {
    if trace.len() < 3 {
        return Err(Error::invalid("AR(1) oracle needs at least 3 observations"));
    }
    let s = Sums::new(trace.values());
    if s.syy == 0.0 {
        return Err(Error::EstimationDegenerate("trace is identically zero".into()));
    }
    let a = s.sxy / s.syy;
    let mut out = EstimationResult::empty(Method::Ar1Oracle);
    out.a_hat = Some(a);
    out.iterations = 1;
    if !(a > 0.0 && a < 1.0) {
        out.notes.push(format!("AR(1) coefficient {a} lies outside (0, 1)"));
        return Ok(out);
    }
    let gamma = -a.ln() / trace.dt();
    let residual_variance = s.rss(a) / s.transitions as f64;
    let sigma = (2.0 * gamma * residual_variance / one_minus_a_sq(a)).sqrt();
    out.gamma_hat = Some(gamma);
    out.sigma_hat = Some(sigma);
    out.converged = true;
    if sigma > 0.0 {
        out.log_likelihood = Some(log_likelihood_from(trace, gamma, sigma, Likelihood::Conditional));
    }
    Ok(out)
}

/// Coefficients `C1..C5` of the quintic stationarity condition in `A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuinticCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
}

impl QuinticCoefficients {
    /// `C1 = nσ⁴`, `C2 = 2C1`, `C3 = Σx²_{k−1}`, `C4 = Σ(σ⁴ − x²_{k−1})`, `C5 = σ²C3`.
    pub fn from_trace(trace: &Trace, sigma: f64) -> Self {
        let s = Sums::new(trace.values());
        let n = s.transitions as f64;
        let s4 = sigma.powi(4);
        Self {
            c1: n * s4,
            c2: 2.0 * n * s4,
            c3: s.syy,
            c4: n * s4 - s.syy,
            c5: sigma * sigma * s.syy,
        }
    }

    /// `C1 A⁵ − C2 A³ + C3 A² + C4 A − C5` as a general quintic.
    pub fn polynomial(&self) -> Quintic {
        Quintic {
            coeffs: [-self.c5, self.c4, self.c3, -self.c2, 0.0, self.c1],
        }
    }
}

/// `Σ coeffs[i] · A^i`, degree ≤ 5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quintic {
    pub coeffs: [f64; 6],
}

impl Quintic {
    /// Monic quintic with the given roots.
    pub fn from_roots(roots: [f64; 5]) -> Self {
        let mut c = vec![1.0];
        for r in roots {
            let mut next = vec![0.0; c.len() + 1];
            for (i, ci) in c.iter().enumerate() {
                next[i + 1] += ci;
                next[i] -= r * ci;
            }
            c = next;
        }
        let mut coeffs = [0.0; 6];
        coeffs.copy_from_slice(&c);
        Self { coeffs }
    }

    pub fn eval(&self, a: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * a + c)
    }
}

const ROOT_GRID: usize = 10_000;
const ROOT_TOL: f64 = 1e-12;

/// Real roots in the open interval `(0, 1)` located by sign changes on a
/// `10⁴`-point grid and refined by bisection to `1e-12`.
///
/// Roots of even multiplicity do not change sign and are not reported.
pub fn unit_interval_roots(poly: &Quintic) -> Vec<f64> {
    let at = |i: usize| i as f64 / ROOT_GRID as f64;
    let mut roots = Vec::new();
    let mut prev_x = at(1);
    let mut prev_v = poly.eval(prev_x);
    if prev_v == 0.0 {
        roots.push(prev_x);
    }
    for i in 2..ROOT_GRID {
        let x = at(i);
        let v = poly.eval(x);
        if v == 0.0 {
            roots.push(x);
        } else if prev_v != 0.0 && (prev_v < 0.0) != (v < 0.0) {
            let (mut lo, mut hi, lo_neg) = (prev_x, x, prev_v < 0.0);
            while hi - lo > ROOT_TOL {
                let mid = 0.5 * (lo + hi);
                let m = poly.eval(mid);
                if m == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (m < 0.0) == lo_neg {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_v = v;
    }
    // Sign changes between the last grid point and 1, or 0 and the first.
    for (lo, hi) in [(f64::EPSILON, at(1)), (at(ROOT_GRID - 1), 1.0 - f64::EPSILON)] {
        let (vlo, vhi) = (poly.eval(lo), poly.eval(hi));
        if vlo != 0.0 && vhi != 0.0 && (vlo < 0.0) != (vhi < 0.0) {
            let (mut l, mut h) = (lo, hi);
            while h - l > ROOT_TOL {
                let mid = 0.5 * (l + h);
                if (poly.eval(mid) < 0.0) == (vlo < 0.0) {
                    l = mid;
                } else {
                    h = mid;
                }
            }
            roots.push(0.5 * (l + h));
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Candidate `A` values in `(0, 1)` from the literal quintic at volatility `sigma`.
pub fn literal_gamma_roots(trace: &Trace, sigma: f64) -> Result<Vec<f64>> {
    ensure_finite("sigma", sigma)?;
    if sigma <= 0.0 {
        return Err(Error::invalid(format!("sigma must be > 0, got {sigma}")));
    }
    if trace.len() < 2 {
        return Err(Error::invalid("need at least two observations"));
    }
    Ok(unit_interval_roots(
        &QuinticCoefficients::from_trace(trace, sigma).polynomial(),
    ))
}

/// `γ̂ = −ln A / Δ`.
pub fn gamma_from_a(a: f64, dt: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::invalid(format!("A must lie in (0, 1), got {a}")));
    }
    Ok(-a.ln() / dt)
}

/// Literal closed-form `σ̂` at a given `A`:
///
/// ```text
/// σ̂² = [2x₀²(1 − A²) + 2Σx_k − 2AΣx²_{k−1}] / [(n + 1)(1 − A²)]
/// ```
///
/// `None` when the radicand is negative (no admissible solution).
pub fn literal_sigma(trace: &Trace, a: f64) -> Result<Option<f64>> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::invalid(format!("A must lie in (0, 1), got {a}")));
    }
    if trace.len() < 2 {
        return Err(Error::invalid("need at least two observations"));
    }
    let s = Sums::new(trace.values());
    let q = one_minus_a_sq(a);
    let numerator = 2.0 * s.x0_sq * q + 2.0 * s.sum_x - 2.0 * a * s.syy;
    let radicand = numerator / ((s.transitions as f64 + 1.0) * q);
    Ok((radicand >= 0.0).then(|| radicand.sqrt()))
}

const LITERAL_TOL: f64 = 1e-10;
const LITERAL_MAX_ITER: usize = 200;

/// Fixed-point iteration of the literal equations: start from the sample
/// standard deviation, solve the quintic for `A`, update `σ` from the closed
/// form, repeat. Among several roots the one closest to the previous `A`
/// is followed (the AR(1) coefficient seeds the first choice).
pub fn estimate_literal(trace: &Trace) -> Result<EstimationResult> {
    if trace.len() < 10 {
        return Err(Error::invalid("literal estimation needs at least 10 observations"));
    }
    let x = trace.values();
    let s = Sums::new(x);
    if s.syy == 0.0 {
        return Err(Error::EstimationDegenerate("trace is identically zero".into()));
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let mut sigma = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt();
    let seed_a = s.sxy / s.syy;
    let mut prev_a = if seed_a > 0.0 && seed_a < 1.0 { seed_a } else { 0.5 };

    let mut out = EstimationResult::empty(Method::LiteralQuintic);
    for iter in 1..=LITERAL_MAX_ITER {
        out.iterations = iter;
        let roots = literal_gamma_roots(trace, sigma)?;
        let Some(a) = roots
            .iter()
            .copied()
            .min_by(|p, q| (p - prev_a).abs().total_cmp(&(q - prev_a).abs()))
        else {
            out.notes.push(format!("iteration {iter}: quintic has no root in (0, 1) at sigma={sigma}"));
            break;
        };
        out.a_hat = Some(a);
        out.gamma_hat = Some(-a.ln() / trace.dt());
        let Some(next_sigma) = literal_sigma(trace, a)? else {
            out.notes.push(format!(
                "iteration {iter}: sigma radicand is negative at A={a}, no admissible solution"
            ));
            break;
        };
        out.sigma_hat = Some(next_sigma);
        let settled = (next_sigma - sigma).abs() <= LITERAL_TOL * sigma.max(1.0)
            && (a - prev_a).abs() <= LITERAL_TOL;
        sigma = next_sigma;
        prev_a = a;
        if settled {
            out.converged = next_sigma > 0.0;
            break;
        }
        if sigma <= 0.0 {
            out.notes.push(format!("iteration {iter}: sigma collapsed to zero"));
            break;
        }
    }
    if let (Some(g), Some(sg)) = (out.gamma_hat, out.sigma_hat) {
        if g > 0.0 && sg > 0.0 {
            out.log_likelihood = Some(log_likelihood_from(trace, g, sg, Likelihood::Exact));
        }
    }
    if !out.converged && out.notes.is_empty() {
        out.notes.push(format!("no fixed point within {LITERAL_MAX_ITER} iterations"));
    }
    Ok(out)
}

/// Tail-index estimate `n̂ = 1 + N / Σ ln(x_j / a)`.
pub fn estimate_powerlaw_index(samples: &[f64], a: f64) -> Result<f64> {
    ensure_finite("a", a)?;
    if a <= 0.0 {
        return Err(Error::invalid(format!("cutoff a must be > 0, got {a}")));
    }
    if samples.is_empty() {
        return Err(Error::invalid("no traffic samples"));
    }
    let mut log_sum = 0.0;
    for (j, &x) in samples.iter().enumerate() {
        if !(x >= a) || !x.is_finite() {
            return Err(Error::invalid(format!(
                "sample {j} = {x} lies below the cutoff {a}"
            )));
        }
        log_sum += (x / a).ln();
    }
    if log_sum == 0.0 {
        return Err(Error::DivergentEstimate);
    }
    Ok(1.0 + samples.len() as f64 / log_sum)
}

/// Asymptotic standard error `(n̂ − 1)/sqrt(N)` of the tail-index estimate.
pub fn powerlaw_index_se(n_hat: f64, count: usize) -> f64 {
    (n_hat - 1.0) / (count as f64).sqrt()
}

/// Separable estimation: `(γ, σ)` by exact MLE from the OU trace, `n` from
/// traffic samples. A failure in one part is recorded in `notes` and leaves
/// the other part intact; the call fails only when both parts fail.
pub fn estimate_all(ou_trace: &Trace, traffic_samples: &[f64], a: f64) -> Result<EstimationResult> {
    let ou = estimate_gamma_sigma(ou_trace).map_err(|e| e.attribute("gamma, sigma"));
    let index = estimate_powerlaw_index(traffic_samples, a).map_err(|e| e.attribute("n"));
    let mut out = match (&ou, &index) {
        (Err(e), Err(_)) => return Err(e.clone()),
        (Ok(r), _) => r.clone(),
        (Err(e), Ok(_)) => {
            let mut r = EstimationResult::empty(Method::ExactMle);
            r.notes.push(e.to_string());
            r
        }
    };
    match index {
        Ok(n_hat) => {
            out.n_hat = Some(n_hat);
            out.standard_errors.n = Some(powerlaw_index_se(n_hat, traffic_samples.len()));
        }
        Err(e) => {
            out.converged = false;
            out.notes.push(e.to_string());
        }
    }
    if ou.is_err() {
        out.converged = false;
    }
    Ok(out)
}
