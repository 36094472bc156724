//! `p2pbw`: generate, estimate, analyze and queue bandwidth traces.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numeric non-convergence.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "p2pbw", version, about = "Stochastic-integral bandwidth traces: synthesis, estimation, statistics and queue tails")]
struct Cli {
    /// Seed for every random stream; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML config file (JSON when the name ends in `.json`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for independent components; output does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic traces.
    Generate(GenerateArgs),
    /// Estimate OU parameters and the traffic tail index.
    Estimate(EstimateArgs),
    /// Moments, autocovariance fit and LRD diagnostic of a trace.
    Analyze(AnalyzeArgs),
    /// Simulate a queue and compare its tail with the closed form.
    Queue(QueueArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SignalArg {
    Bandwidth,
    OuPath,
    Traffic,
}

#[derive(Args)]
struct ModelArgs {
    /// Traffic cutoff a.
    #[arg(long)]
    a: Option<f64>,
    /// Traffic tail index n.
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    kprime: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    burn_in: Option<usize>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    signal: Option<SignalArg>,
    /// Aggregate this many independent copies of the model.
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    write_components: bool,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    ou_trace: Option<PathBuf>,
    #[arg(long)]
    traffic_samples: Option<PathBuf>,
    #[arg(long)]
    cutoff: Option<f64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    max_lag: Option<usize>,
}

#[derive(Args)]
struct QueueArgs {
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    arrivals: Option<PathBuf>,
    #[arg(long)]
    service_rate: Option<f64>,
    #[arg(long)]
    utilization: Option<f64>,
    #[arg(long)]
    download_rate: Option<f64>,
    #[arg(long)]
    upload_rate: Option<f64>,
    #[arg(long)]
    hurst: Option<f64>,
    #[arg(long)]
    variance_coefficient: Option<f64>,
    #[arg(long)]
    burn_in_fraction: Option<f64>,
    #[command(flatten)]
    model: ModelArgs,
}

/// Writes each present flag over the config value.
struct Overrides<'a> {
    root: &'a mut Value,
    section: &'static str,
}

impl Overrides<'_> {
    fn put<T: Into<Value>>(&mut self, path: &[&str], value: Option<T>) {
        if let Some(v) = value {
            let mut full = vec![self.section];
            full.extend_from_slice(path);
            config::set(self.root, &full, v.into());
        }
    }

    fn path(&mut self, key: &str, value: Option<PathBuf>) {
        self.put(&[key], value.map(|p| p.to_string_lossy().into_owned()));
    }

    fn model(&mut self, m: ModelArgs) {
        self.put(&["model", "traffic", "a"], m.a);
        self.put(&["model", "traffic", "n"], m.n);
        self.put(&["model", "ou", "gamma"], m.gamma);
        self.put(&["model", "ou", "sigma"], m.sigma);
        self.put(&["model", "grid", "dt"], m.dt);
        self.put(&["model", "grid", "count"], m.count);
        self.put(&["model", "kprime"], m.kprime);
        self.put(&["model", "epsilon"], m.epsilon);
        self.put(&["model", "burn_in"], m.burn_in);
    }
}

fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::usage(format!("--jobs: {e}")))?;
    }
    let mut root = config::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config::set(&mut root, &["seed"], json!(seed));
    }
    let command = cli.command;
    let section = match &command {
        Command::Generate(_) => "generate",
        Command::Estimate(_) => "estimate",
        Command::Analyze(_) => "analyze",
        Command::Queue(_) => "queue",
    };
    let mut o = Overrides {
        root: &mut root,
        section,
    };
    match command {
        Command::Generate(g) => {
            o.path("output", g.output);
            o.put(
                &["signal"],
                g.signal.map(|s| match s {
                    SignalArg::Bandwidth => "bandwidth",
                    SignalArg::OuPath => "ou_path",
                    SignalArg::Traffic => "traffic",
                }),
            );
            o.put(&["replicas"], g.replicas);
            o.put(&["write_components"], g.write_components.then_some(true));
            o.model(g.model);
        }
        Command::Estimate(e) => {
            o.path("output", e.output);
            o.path("ou_trace", e.ou_trace);
            o.path("traffic_samples", e.traffic_samples);
            o.put(&["cutoff"], e.cutoff);
        }
        Command::Analyze(a) => {
            o.path("input", a.input);
            o.path("output", a.output);
            o.put(&["max_lag"], a.max_lag);
        }
        Command::Queue(q) => {
            o.path("output", q.output);
            o.path("arrivals", q.arrivals);
            o.put(&["service_rate"], q.service_rate);
            o.put(&["utilization"], q.utilization);
            o.put(&["download_rate"], q.download_rate);
            o.put(&["upload_rate"], q.upload_rate);
            o.put(&["hurst"], q.hurst);
            o.put(&["variance_coefficient"], q.variance_coefficient);
            o.put(&["burn_in_fraction"], q.burn_in_fraction);
            o.model(q.model);
        }
    }
    let cfg = config::resolve(root)?;
    match section {
        "generate" => commands::generate(&cfg),
        "estimate" => commands::estimate(&cfg),
        "analyze" => commands::analyze(&cfg),
        _ => commands::queue(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("p2pbw: {} error: {e}", e.kind());
            ExitCode::from(e.exit_code())
        }
    }
}
