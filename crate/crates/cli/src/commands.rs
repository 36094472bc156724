use std::path::{Path, PathBuf};

use p2pbw::estimation::{
    ar1_oracle, estimate_gamma_sigma, estimate_gamma_sigma_conditional, estimate_literal,
    estimate_powerlaw_index, powerlaw_index_se, EstimationResult,
};
use p2pbw::ou::{generate_path, stationary_moments};
use p2pbw::queueing::{
    default_thresholds, empirical_tail, queue_params_from_spec, rate_parameter, simulate_queue,
    tail_shape_check, QueueParams, TailReport,
};
use p2pbw::statistics::{
    fit_acv_model, lrd_diagnostic, model_moments, sample_autocovariance, sample_moments,
    AcvModelFit, MomentReport,
};
use p2pbw::synthesis::{
    synthesize_aggregate_with_components, synthesize_bandwidth, synthesize_multiservice,
};
use p2pbw::traffic::generate_traffic_series;
use p2pbw::{Error, Trace};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{GeneratePlan, RunConfig, Signal, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};
use crate::io::{read_trace, read_values, sibling, table_csv, trace_csv, Run};

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn require_seed(cfg: &RunConfig, command: &str) -> CliResult<u64> {
    cfg.seed
        .ok_or_else(|| CliError::usage(format!("{command}: a seed is required (--seed or `seed`)")))
}

fn extension(path: &Path) -> String {
    path.extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into())
}

pub fn generate(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let g = cfg
        .generate
        .as_ref()
        .ok_or_else(|| CliError::usage("generate: no [generate] section in the config"))?;
    let plan = g.plan()?;
    let seed = require_seed(cfg, "generate")?;
    let core = |e: Error| CliError::from_core("generate", e);
    let mut run = Run::new("generate", cfg);
    let ext = extension(&g.output);
    match plan {
        GeneratePlan::Single(spec) => {
            let trace = match g.signal {
                Signal::Bandwidth => synthesize_bandwidth(&spec, seed),
                Signal::OuPath => generate_path(&spec.ou, &spec.grid, seed),
                Signal::Traffic => generate_traffic_series(&spec.traffic, spec.grid.count, seed)
                    .and_then(|v| Trace::new(spec.grid.dt, v)),
            }
            .map_err(core)?;
            run.emit(&g.output, trace_csv(&trace).as_bytes())?;
        }
        GeneratePlan::Aggregate(spec) => {
            let (total, components) = synthesize_aggregate_with_components(&spec, seed).map_err(core)?;
            run.emit(&g.output, trace_csv(&total).as_bytes())?;
            if g.write_components {
                for (i, c) in components.iter().enumerate() {
                    run.emit(&sibling(&g.output, &format!("_component{i}"), &ext), trace_csv(c).as_bytes())?;
                }
            }
        }
        GeneratePlan::Multiservice(spec) => {
            for (name, trace) in synthesize_multiservice(&spec, seed).map_err(core)? {
                run.emit(&sibling(&g.output, &format!("_{name}"), &ext), trace_csv(&trace).as_bytes())?;
            }
        }
    }
    Ok(run.written)
}

#[derive(Debug, Serialize)]
struct Deviation {
    gamma: Option<f64>,
    sigma: Option<f64>,
    gamma_relative: Option<f64>,
    sigma_relative: Option<f64>,
}

#[derive(Debug, Serialize)]
struct MethodEntry {
    result: Option<EstimationResult>,
    error: Option<String>,
    /// Estimate minus the exact-likelihood estimate.
    deviation_from_exact_mle: Option<Deviation>,
}

#[derive(Debug, Serialize)]
struct Methods {
    exact_mle: MethodEntry,
    conditional_mle: MethodEntry,
    literal_quintic: MethodEntry,
    ar1_oracle: MethodEntry,
}

#[derive(Debug, Serialize)]
struct OuSection {
    observations: usize,
    dt: f64,
    methods: Methods,
}

#[derive(Debug, Serialize)]
struct TailIndexSection {
    n_hat: Option<f64>,
    standard_error: Option<f64>,
    samples: usize,
    cutoff: f64,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct EstimateReport {
    schema_version: u32,
    /// `null` when no OU trace was given.
    ou: Option<OuSection>,
    /// `null` when no traffic samples were given.
    tail_index: Option<TailIndexSection>,
}

fn deviation(r: &EstimationResult, base: &EstimationResult) -> Deviation {
    let diff = |a: Option<f64>, b: Option<f64>| a.zip(b).map(|(a, b)| a - b);
    let rel = |a: Option<f64>, b: Option<f64>| a.zip(b).and_then(|(a, b)| finite((a - b) / b));
    Deviation {
        gamma: diff(r.gamma_hat, base.gamma_hat),
        sigma: diff(r.sigma_hat, base.sigma_hat),
        gamma_relative: rel(r.gamma_hat, base.gamma_hat),
        sigma_relative: rel(r.sigma_hat, base.sigma_hat),
    }
}

fn ou_section(trace: &Trace) -> OuSection {
    type Estimator = fn(&Trace) -> p2pbw::Result<EstimationResult>;
    let estimators: [Estimator; 4] = [
        estimate_gamma_sigma,
        estimate_gamma_sigma_conditional,
        estimate_literal,
        ar1_oracle,
    ];
    let results: Vec<_> = estimators.par_iter().map(|f| f(trace)).collect();
    let exact = results[0].as_ref().ok().cloned();
    let mut entries = results.into_iter().map(|r| match r {
        Ok(result) => MethodEntry {
            deviation_from_exact_mle: exact.as_ref().map(|base| deviation(&result, base)),
            result: Some(result),
            error: None,
        },
        Err(e) => MethodEntry {
            result: None,
            error: Some(format!("gamma, sigma: {e}")),
            deviation_from_exact_mle: None,
        },
    });
    let mut next = || entries.next().expect("four estimators");
    let mut exact_entry = next();
    exact_entry.deviation_from_exact_mle = None;
    OuSection {
        observations: trace.len(),
        dt: trace.dt(),
        methods: Methods {
            exact_mle: exact_entry,
            conditional_mle: next(),
            literal_quintic: next(),
            ar1_oracle: next(),
        },
    }
}

pub fn estimate(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let e = cfg
        .estimate
        .as_ref()
        .ok_or_else(|| CliError::usage("estimate: no [estimate] section in the config"))?;
    e.validate()?;
    let ou_trace = e.ou_trace.as_deref().map(read_trace).transpose()?;
    let samples = e.traffic_samples.as_deref().map(read_values).transpose()?;

    let ou = ou_trace.as_ref().map(ou_section);
    let tail_index = samples.map(|xs| {
        let cutoff = e.cutoff.expect("validated");
        match estimate_powerlaw_index(&xs, cutoff) {
            Ok(n_hat) => TailIndexSection {
                n_hat: Some(n_hat),
                standard_error: Some(powerlaw_index_se(n_hat, xs.len())),
                samples: xs.len(),
                cutoff,
                error: None,
            },
            Err(err) => TailIndexSection {
                n_hat: None,
                standard_error: None,
                samples: xs.len(),
                cutoff,
                error: Some(format!("n: {err}")),
            },
        }
    });
    let report = EstimateReport {
        schema_version: SCHEMA_VERSION,
        ou,
        tail_index,
    };
    let mut run = Run::new("estimate", cfg);
    run.emit_json(&e.output, &report)?;

    let mut errors = Vec::new();
    if let Some(ou) = &report.ou {
        errors.extend(ou.methods.exact_mle.error.clone());
    }
    if let Some(t) = &report.tail_index {
        errors.extend(t.error.clone());
    }
    if !errors.is_empty() {
        return Err(CliError::data(format!("estimate: {}", errors.join("; "))));
    }
    if let Some(r) = report.ou.as_ref().and_then(|o| o.methods.exact_mle.result.as_ref()) {
        if !r.converged {
            return Err(CliError::NonConvergence(format!(
                "estimate: exact likelihood maximization did not converge ({})",
                r.notes.join("; ")
            )));
        }
    }
    Ok(run.written)
}

#[derive(Debug, Serialize)]
struct ModelSection {
    mean: Option<f64>,
    variance: Option<f64>,
    traffic_mean: Option<f64>,
    traffic_variance: Option<f64>,
    ou_mean: f64,
    ou_variance: f64,
    hurst: Option<f64>,
}

#[derive(Debug, Serialize)]
struct LrdSection {
    verdict: bool,
    diverges: bool,
    unreliable: bool,
    decay_exponent: Option<f64>,
    hurst: Option<f64>,
}

#[derive(Debug, Serialize)]
struct AnalyzeReport {
    schema_version: u32,
    observations: usize,
    dt: f64,
    max_lag: usize,
    moments: MomentReport,
    model: Option<ModelSection>,
    acv_fit: Option<AcvModelFit>,
    lrd: Option<LrdSection>,
    warnings: Vec<String>,
}

pub fn analyze(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let a = cfg
        .analyze
        .as_ref()
        .ok_or_else(|| CliError::usage("analyze: no [analyze] section in the config"))?;
    if let Some(m) = &a.model {
        m.validate().map_err(|e| CliError::config("analyze.model", e))?;
    }
    let trace = read_trace(&a.input)?;
    let data = |e: Error| CliError::from_core("analyze", e);
    let acv = sample_autocovariance(&trace, a.max_lag).map_err(data)?;
    let moments = sample_moments(&trace).map_err(data)?;
    let mut warnings = Vec::new();
    if moments.variance == 0.0 {
        warnings.push("degenerate statistics: the trace is constant (zero variance)".to_string());
    }

    let acv_fit = match fit_acv_model(&acv, trace.dt()) {
        Ok(fit) => Some(fit),
        Err(Error::FitFailed { message, best }) => {
            warnings.push(format!("ACV model fit did not converge: {message}"));
            Some(*best)
        }
        Err(e) => {
            warnings.push(format!("ACV model fit skipped: {e}"));
            None
        }
    };
    if acv_fit.is_some_and(|f| f.degenerate) {
        warnings.push("ACV model fit is degenerate: only the constant term is non-zero".into());
    }
    let lrd = match lrd_diagnostic(&acv) {
        Ok(d) => Some(d),
        Err(e) => {
            warnings.push(format!("LRD diagnostic skipped: {e}"));
            None
        }
    };
    if lrd.as_ref().is_some_and(|d| d.unreliable) {
        warnings.push("LRD regression window mixes signs or is empty; verdict is negative".into());
    }

    let model = match &a.model {
        None => None,
        Some(spec) => {
            let traffic = (spec.traffic.mean(), spec.traffic.variance());
            let ou = stationary_moments(&spec.ou).map_err(|e| CliError::config("analyze.model", e))?;
            let (mean, variance) =
                model_moments(spec, traffic, ou).map_err(|e| CliError::config("analyze.model", e))?;
            let hurst = match spec.hurst() {
                Ok(h) => Some(h),
                Err(e) => {
                    warnings.push(format!("model Hurst parameter unavailable: {e}"));
                    None
                }
            };
            Some(ModelSection {
                mean: finite(mean),
                variance: finite(variance),
                traffic_mean: finite(traffic.0),
                traffic_variance: finite(traffic.1),
                ou_mean: ou.0,
                ou_variance: ou.1,
                hurst,
            })
        }
    };

    let mut run = Run::new("analyze", cfg);
    let dt = trace.dt();
    run.emit(
        &sibling(&a.output, "_acv", "csv"),
        table_csv(
            &["lag", "time", "acv", "fitted"],
            acv.iter().enumerate().map(|(k, c)| {
                let t = k as f64 * dt;
                let fitted = acv_fit.filter(|_| k > 0).map(|f| f.evaluate(t)).and_then(finite);
                vec![Some(k as f64), Some(t), Some(*c), fitted]
            }),
        )
        .as_bytes(),
    )?;
    if let Some(d) = &lrd {
        run.emit(
            &sibling(&a.output, "_partial_sums", "csv"),
            table_csv(
                &["lag", "partial_sum"],
                d.partial_sums
                    .iter()
                    .enumerate()
                    .map(|(i, s)| vec![Some((i + 1) as f64), Some(*s)]),
            )
            .as_bytes(),
        )?;
        run.emit(
            &sibling(&a.output, "_loglog", "csv"),
            table_csv(
                &["ln_lag", "ln_abs_acv"],
                d.regression_points.iter().map(|(x, y)| vec![Some(*x), Some(*y)]),
            )
            .as_bytes(),
        )?;
    }
    let report = AnalyzeReport {
        schema_version: SCHEMA_VERSION,
        observations: trace.len(),
        dt,
        max_lag: a.max_lag,
        moments,
        model,
        acv_fit,
        lrd: lrd.map(|d| LrdSection {
            verdict: d.is_lrd(),
            diverges: d.diverges,
            unreliable: d.unreliable,
            decay_exponent: d.decay_exponent,
            hurst: d.hurst,
        }),
        warnings,
    };
    run.emit_json(&a.output, &report)?;
    Ok(run.written)
}

#[derive(Debug, Serialize)]
struct QueueParamsSection {
    m: f64,
    hurst: f64,
    a: f64,
    theta: f64,
    exponent: f64,
}

#[derive(Debug, Serialize)]
struct QueueReport {
    schema_version: u32,
    /// Tail formula as evaluated, with `theta > 0`.
    tail_formula: &'static str,
    params: QueueParamsSection,
    steps: usize,
    dt: f64,
    service_rate: f64,
    mean_arrival_rate: f64,
    utilization: f64,
    tail: TailReport,
    warnings: Vec<String>,
}

const TAIL_FORMULA: &str = "P(V > x) = exp(-theta * x^(2 - 2H))";

pub fn queue(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let q = cfg
        .queue
        .as_ref()
        .ok_or_else(|| CliError::usage("queue: no [queue] section in the config"))?;
    q.validate()?;
    let usage = |e: Error| CliError::config("queue", e);
    let data = |e: Error| CliError::from_core("queue", e);

    let m = rate_parameter(q.download_rate, q.upload_rate).map_err(usage)?;
    let hurst = match (q.hurst, &q.model) {
        (Some(h), _) => h,
        (None, Some(spec)) => spec.hurst().map_err(|e| CliError::config("queue.model", e))?,
        (None, None) => unreachable!("validated"),
    };
    let a = match (q.variance_coefficient, &q.model) {
        (Some(a), _) => a,
        (None, Some(spec)) => {
            let ou = stationary_moments(&spec.ou).map_err(usage)?;
            let traffic_variance = spec.traffic.variance();
            if !traffic_variance.is_finite() {
                return Err(CliError::usage(
                    "queue: traffic variance is infinite for n <= 3; set `variance_coefficient`",
                ));
            }
            queue_params_from_spec(spec, (q.download_rate, q.upload_rate), (traffic_variance, ou.1))
                .map_err(usage)?
                .a
        }
        (None, None) => {
            return Err(CliError::usage("queue: set `variance_coefficient` or give a `model`"))
        }
    };
    let params = QueueParams::new(m, hurst, a).map_err(usage)?;

    let arrivals = match (&q.arrivals, &q.model) {
        (Some(path), _) => read_trace(path)?,
        (None, Some(spec)) => {
            let seed = require_seed(cfg, "queue")?;
            synthesize_bandwidth(spec, seed).map_err(data)?
        }
        (None, None) => unreachable!("validated"),
    };
    let dt = arrivals.dt();
    let mean_arrival_rate = arrivals.values().iter().sum::<f64>() / arrivals.len() as f64 / dt;
    let service_rate = match (q.service_rate, q.utilization) {
        (Some(c), _) => c,
        (None, Some(u)) => mean_arrival_rate / u,
        (None, None) => unreachable!("validated"),
    };
    if !(service_rate.is_finite() && service_rate > 0.0) {
        return Err(CliError::data(format!(
            "queue: service rate {service_rate} derived from the arrivals is not positive"
        )));
    }
    let occupancy = simulate_queue(&arrivals, service_rate).map_err(data)?;
    let thresholds = match &q.thresholds {
        Some(t) => t.clone(),
        None => default_thresholds(&occupancy, q.burn_in_fraction).map_err(data)?,
    };
    let mut warnings = Vec::new();
    let mut tail = empirical_tail(&occupancy, &thresholds, q.burn_in_fraction)
        .map_err(|e| CliError::config("queue.thresholds", e))?
        .with_model(&params)
        .map_err(data)?;
    match tail_shape_check(&tail, hurst) {
        Ok((slope, intercept, r2)) => {
            tail.regression_slope = Some(slope);
            tail.regression_intercept = Some(intercept);
            tail.regression_r2 = Some(r2);
            if slope >= 0.0 {
                warnings.push("tail regression slope is not negative".into());
            }
        }
        Err(e) => warnings.push(format!("tail shape regression skipped: {e}")),
    }

    let exponent = params.exponent();
    let mut run = Run::new("queue", cfg);
    run.notes.push(format!("tail formula evaluated as {TAIL_FORMULA} with theta > 0"));
    let model = tail.model_probabilities.clone().unwrap_or_default();
    run.emit(
        &sibling(&q.output, "_tail", "csv"),
        table_csv(
            &["x", "p_empirical", "p_model", "x_pow"],
            tail.thresholds.iter().enumerate().map(|(i, &x)| {
                vec![
                    Some(x),
                    Some(tail.probabilities[i]),
                    model.get(i).copied(),
                    finite(x.max(0.0).powf(exponent)),
                ]
            }),
        )
        .as_bytes(),
    )?;
    let report = QueueReport {
        schema_version: SCHEMA_VERSION,
        tail_formula: TAIL_FORMULA,
        params: QueueParamsSection {
            m: params.m,
            hurst: params.hurst,
            a: params.a,
            theta: params.theta(),
            exponent,
        },
        steps: arrivals.len(),
        dt,
        service_rate,
        mean_arrival_rate,
        utilization: mean_arrival_rate / service_rate,
        tail,
        warnings,
    };
    run.emit_json(&q.output, &report)?;
    Ok(run.written)
}
