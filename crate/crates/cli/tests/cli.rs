use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const MODEL: &[&str] = &[
    "--a", "1", "--n", "2.5", "--gamma", "1", "--sigma", "0.5", "--dt", "0.1",
];

fn p2pbw(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_p2pbw"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn generate(dir: &Path, output: &str, extra: &[&str]) -> Output {
    let mut args = vec!["--seed", "11", "generate", "--output", output];
    args.extend_from_slice(MODEL);
    args.extend_from_slice(extra);
    p2pbw(dir, &args)
}

#[test]
fn generate_is_byte_identical_across_runs_and_job_counts() {
    let dir = TempDir::new().unwrap();
    let a = generate(dir.path(), "a.csv", &["--count", "3000", "--replicas", "4"]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    let b = p2pbw(
        dir.path(),
        &[
            "--jobs", "1", "--seed", "11", "generate", "--output", "b.csv", "--a", "1", "--n",
            "2.5", "--gamma", "1", "--sigma", "0.5", "--dt", "0.1", "--count", "3000",
            "--replicas", "4",
        ],
    );
    assert_eq!(code(&b), 0, "{}", stderr(&b));
    let fa = std::fs::read(dir.path().join("a.csv")).unwrap();
    let fb = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(fa, fb);

    let c = generate(dir.path(), "c.csv", &["--count", "3000", "--replicas", "4"]);
    assert_eq!(code(&c), 0);
    let mut ma = json(dir.path().join("a.csv.meta.json"));
    let mut mc = json(dir.path().join("c.csv.meta.json"));
    for m in [&mut ma, &mut mc] {
        let obj = m.as_object_mut().unwrap();
        obj.remove("generated_at");
        obj.remove("output");
        obj["config"]["generate"]
            .as_object_mut()
            .unwrap()
            .remove("output");
    }
    assert_eq!(ma, mc);
}

#[test]
fn different_seeds_differ() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&generate(dir.path(), "a.csv", &["--count", "100"])), 0);
    let mut args = vec!["--seed", "12", "generate", "--output", "b.csv", "--count", "100"];
    args.extend_from_slice(MODEL);
    assert_eq!(code(&p2pbw(dir.path(), &args)), 0);
    assert_ne!(
        std::fs::read(dir.path().join("a.csv")).unwrap(),
        std::fs::read(dir.path().join("b.csv")).unwrap()
    );
}

#[test]
fn trace_csv_format_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let out = generate(dir.path(), "t.csv", &["--count", "50"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time,value"));
    assert_eq!(lines.next().unwrap().split(',').next(), Some("0.0"));
    assert_eq!(text.lines().count(), 51);
    for line in text.lines().skip(1) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v >= 0.0);
    }

    let meta = json(dir.path().join("t.csv.meta.json"));
    assert_eq!(meta["schema_version"], 1);
    assert_eq!(meta["seed"], 11);
    assert_eq!(meta["command"], "generate");
    assert_eq!(meta["library_version"], env!("CARGO_PKG_VERSION"));
    assert!(meta["generated_at"].as_str().unwrap().ends_with('Z'));
    assert_eq!(meta["config"]["generate"]["model"]["ou"]["gamma"], 1.0);
    assert_eq!(meta["config"]["generate"]["model"]["grid"]["count"], 50);
    // No temporary files are left behind.
    let names: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names.len(), 2, "{names:?}");
}

#[test]
fn zero_sigma_gives_all_zero_bandwidth() {
    let dir = TempDir::new().unwrap();
    let out = p2pbw(
        dir.path(),
        &[
            "--seed", "1", "generate", "--output", "z.csv", "--a", "1", "--n", "2.5", "--gamma",
            "1", "--sigma", "0", "--dt", "0.1", "--count", "200",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("z.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0.0")));
}

#[test]
fn aggregate_writes_component_files_that_sum_to_the_total() {
    let dir = TempDir::new().unwrap();
    let out = generate(
        dir.path(),
        "agg.csv",
        &["--count", "200", "--replicas", "3", "--write-components"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let read = |name: &str| -> Vec<f64> {
        std::fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let total = read("agg.csv");
    let parts: Vec<Vec<f64>> = (0..3).map(|i| read(&format!("agg_component{i}.csv"))).collect();
    for k in 0..total.len() {
        let s = parts[0][k] + parts[1][k] + parts[2][k];
        assert_eq!(s, total[k], "row {k}");
    }
    assert!(dir.path().join("agg_component2.csv.meta.json").exists());
}

#[test]
fn multiservice_config_writes_one_file_per_service() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"
seed = 5

[generate]
output = "svc.csv"

[[generate.services]]
name = "audio"
[generate.services.spec]
traffic = { a = 1.0, n = 2.5 }
ou = { gamma = 1.0, sigma = 0.5 }
grid = { dt = 0.1, count = 100 }

[[generate.services]]
name = "video"
[generate.services.spec]
traffic = { a = 2.0, n = 2.2 }
ou = { gamma = 0.5, sigma = 1.0 }
grid = { dt = 0.1, count = 100 }
"#;
    std::fs::write(dir.path().join("run.toml"), cfg).unwrap();
    let out = p2pbw(dir.path(), &["--config", "run.toml", "generate"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for name in ["svc_audio.csv", "svc_video.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
        assert!(dir.path().join(format!("{name}.meta.json")).exists());
    }
    assert_ne!(
        std::fs::read(dir.path().join("svc_audio.csv")).unwrap(),
        std::fs::read(dir.path().join("svc_video.csv")).unwrap()
    );
}

#[test]
fn flags_override_config_values() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"
seed = 5
[generate]
output = "c.csv"
model = { traffic = { a = 1.0, n = 2.5 }, ou = { gamma = 1.0, sigma = 0.5 }, grid = { dt = 0.1, count = 100 } }
"#;
    std::fs::write(dir.path().join("run.toml"), cfg).unwrap();
    let out = p2pbw(
        dir.path(),
        &["--config", "run.toml", "--seed", "9", "generate", "--count", "40"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let meta = json(dir.path().join("c.csv.meta.json"));
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["config"]["generate"]["model"]["grid"]["count"], 40);
    assert_eq!(meta["config"]["generate"]["model"]["ou"]["sigma"], 0.5);
}

#[test]
fn generate_then_estimate_round_trip() {
    let dir = TempDir::new().unwrap();
    let ou = generate(dir.path(), "ou.csv", &["--count", "20000", "--signal", "ou-path"]);
    assert_eq!(code(&ou), 0, "{}", stderr(&ou));
    let tr = p2pbw(
        dir.path(),
        &[
            "--seed", "11", "generate", "--output", "tr.csv", "--signal", "traffic", "--a", "1",
            "--n", "3", "--gamma", "1", "--sigma", "0.5", "--dt", "0.1", "--count", "20000",
        ],
    );
    assert_eq!(code(&tr), 0, "{}", stderr(&tr));
    let est = p2pbw(
        dir.path(),
        &[
            "estimate", "--ou-trace", "ou.csv", "--traffic-samples", "tr.csv", "--cutoff", "1",
            "--output", "est.json",
        ],
    );
    assert_eq!(code(&est), 0, "{}", stderr(&est));
    let r = json(dir.path().join("est.json"));
    let mle = &r["ou"]["methods"]["exact_mle"]["result"];
    let g = mle["gamma_hat"].as_f64().unwrap();
    let s = mle["sigma_hat"].as_f64().unwrap();
    let se_g = mle["standard_errors"]["gamma"].as_f64().unwrap();
    let se_s = mle["standard_errors"]["sigma"].as_f64().unwrap();
    assert!((g - 1.0).abs() < 4.0 * se_g, "gamma {g} se {se_g}");
    assert!((s - 0.5).abs() < 4.0 * se_s, "sigma {s} se {se_s}");
    let n = r["tail_index"]["n_hat"].as_f64().unwrap();
    let se_n = r["tail_index"]["standard_error"].as_f64().unwrap();
    assert!((n - 3.0).abs() < 4.0 * se_n, "n {n} se {se_n}");
    // Every method is reported separately.
    for m in ["exact_mle", "conditional_mle", "literal_quintic", "ar1_oracle"] {
        assert!(r["ou"]["methods"].get(m).is_some(), "{m}");
    }
}

#[test]
fn traffic_only_estimate_reports_no_ou_section() {
    let dir = TempDir::new().unwrap();
    let mut rows = String::from("time,value\n");
    for k in 0..500 {
        let u = (k as f64 + 0.5) / 500.0;
        rows.push_str(&format!("{k},{}\n", 2.0 * (1.0 - u).powf(-1.0 / 1.5)));
    }
    std::fs::write(dir.path().join("x.csv"), rows).unwrap();
    let out = p2pbw(
        dir.path(),
        &["estimate", "--traffic-samples", "x.csv", "--cutoff", "2", "--output", "e.json"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = json(dir.path().join("e.json"));
    assert!(r["ou"].is_null());
    assert!(r["tail_index"]["n_hat"].as_f64().unwrap() > 2.0);
}

#[test]
fn corrupted_csv_is_a_data_error_naming_the_line() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "time,value\n0,1\n0.1,2\n0.2,oops\n").unwrap();
    let out = p2pbw(dir.path(), &["analyze", "--input", "bad.csv", "--output", "a.json"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));
    assert!(!dir.path().join("a.json").exists());

    std::fs::write(dir.path().join("hdr.csv"), "t,v\n0,1\n").unwrap();
    let out = p2pbw(dir.path(), &["analyze", "--input", "hdr.csv", "--output", "a.json"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 1"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("c.toml"), "sed = 3\n").unwrap();
    let out = p2pbw(dir.path(), &["--config", "c.toml", "generate"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("unknown field"));

    let out = p2pbw(dir.path(), &["generate", "--output", "x.csv", "--count", "10", "--a", "1"]);
    assert_eq!(code(&out), 1);

    let mut args = vec!["generate", "--output", "x.csv", "--count", "10"];
    args.extend_from_slice(MODEL);
    let out = p2pbw(dir.path(), &args);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("seed"));

    assert_eq!(code(&p2pbw(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&p2pbw(dir.path(), &["--help"])), 0);

    let out = generate(dir.path(), "x.csv", &["--count", "10", "--n", "3.5"]);
    assert_eq!(code(&out), 1);
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn analyze_flags_constant_trace_and_rejects_lrd_for_white_noise() {
    let dir = TempDir::new().unwrap();
    let mut flat = String::from("time,value\n");
    for k in 0..400 {
        flat.push_str(&format!("{},3\n", k as f64 * 0.5));
    }
    std::fs::write(dir.path().join("flat.csv"), flat).unwrap();
    let out = p2pbw(
        dir.path(),
        &["analyze", "--input", "flat.csv", "--output", "f.json", "--max-lag", "40"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = json(dir.path().join("f.json"));
    let warnings = r["warnings"].as_array().unwrap();
    assert!(warnings.iter().any(|w| w.as_str().unwrap().contains("constant")));

    // Deterministic pseudo-random white noise.
    let mut state: u64 = 0x9e3779b97f4a7c15;
    let mut noise = String::from("time,value\n");
    for k in 0..20000 {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        let u = (state >> 11) as f64 / (1u64 << 53) as f64;
        noise.push_str(&format!("{k},{}\n", u - 0.5));
    }
    std::fs::write(dir.path().join("noise.csv"), noise).unwrap();
    let out = p2pbw(dir.path(), &["analyze", "--input", "noise.csv", "--output", "n.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = json(dir.path().join("n.json"));
    assert_eq!(r["lrd"]["verdict"], false);
    assert!(dir.path().join("n_acv.csv").exists());
    let acv = std::fs::read_to_string(dir.path().join("n_acv.csv")).unwrap();
    assert!(acv.starts_with("lag,time,acv,fitted\n"));
}

fn queue_args<'a>(output: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec![
        "--seed", "4", "queue", "--output", output, "--download-rate", "2", "--upload-rate", "4",
        "--variance-coefficient", "1", "--count", "100000",
    ];
    args.extend_from_slice(MODEL);
    args.extend_from_slice(extra);
    args
}

#[test]
fn queue_end_to_end_reports_tail_and_regression() {
    let dir = TempDir::new().unwrap();
    let out = p2pbw(dir.path(), &queue_args("q.json", &["--utilization", "0.8"]));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = json(dir.path().join("q.json"));
    assert_eq!(r["params"]["hurst"], 0.75);
    assert_eq!(r["params"]["m"], 0.5);
    let p = r["tail"]["probabilities"].as_array().unwrap();
    let probs: Vec<f64> = p.iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(probs.windows(2).all(|w| w[1] <= w[0]));
    assert!(r["tail"]["regression_r2"].as_f64().unwrap() > 0.8);
    assert!(r["tail"]["regression_slope"].as_f64().unwrap() < 0.0);
    let tail = std::fs::read_to_string(dir.path().join("q_tail.csv")).unwrap();
    assert!(tail.starts_with("x,p_empirical,p_model,x_pow\n"));
}

#[test]
fn queue_underload_has_zero_tail() {
    let dir = TempDir::new().unwrap();
    let out = p2pbw(dir.path(), &queue_args("q.json", &["--service-rate", "1e12"]));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = json(dir.path().join("q.json"));
    for p in r["tail"]["probabilities"].as_array().unwrap() {
        assert_eq!(p.as_f64().unwrap(), 0.0);
    }
}

#[test]
fn queue_with_unstable_rates_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let mut args = queue_args("q.json", &["--utilization", "0.8"]);
    let pos = args.iter().position(|a| *a == "--download-rate").unwrap();
    args[pos + 1] = "1";
    let out = p2pbw(dir.path(), &args);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("unstable"));
}
