//! Trace CSV format, atomic writes and metadata sidecars.
//!
//! Floats are written in the shortest decimal form that parses back to the
//! same `f64`, so data files are byte-identical across runs and platforms.

use std::io::Write;
use std::path::{Path, PathBuf};

use p2pbw::Trace;
use serde::Serialize;

use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};

pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        ryu::Buffer::new().format_finite(v).to_string()
    } else {
        String::new()
    }
}

/// CSV with a header row; `None` cells are left empty.
pub fn table_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<Option<f64>>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(|c| c.map(format_f64).unwrap_or_default()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn trace_csv(trace: &Trace) -> String {
    table_csv(
        &["time", "value"],
        trace
            .values()
            .iter()
            .enumerate()
            .map(|(k, v)| vec![Some(trace.time(k)), Some(*v)]),
    )
}

/// Reads `time,value` rows. Errors name the file and line.
fn read_rows(path: &Path) -> CliResult<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::data(format!("opening {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::data(format!("{}: line 1: {e}", path.display())))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["time", "value"] {
        return Err(CliError::data(format!(
            "{}: line 1: expected header `time,value`",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::data(format!("{}: line {line}: {e}", path.display()))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize, name: &str| -> CliResult<f64> {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    CliError::data(format!(
                        "{}: line {line}: {name} {raw:?} is not a finite number",
                        path.display()
                    ))
                })
        };
        rows.push((field(0, "time")?, field(1, "value")?));
    }
    if rows.is_empty() {
        return Err(CliError::data(format!("{}: no data rows", path.display())));
    }
    Ok(rows)
}

/// Reads a uniformly sampled trace; the step is inferred from the times.
pub fn read_trace(path: &Path) -> CliResult<Trace> {
    let rows = read_rows(path)?;
    if rows.len() < 2 {
        return Err(CliError::data(format!(
            "{}: a trace needs at least two rows to define its time step",
            path.display()
        )));
    }
    let t0 = rows[0].0;
    let dt = rows[1].0 - t0;
    if !(dt > 0.0) {
        return Err(CliError::data(format!("{}: line 3: times must increase", path.display())));
    }
    for (k, (t, _)) in rows.iter().enumerate() {
        let want = t0 + k as f64 * dt;
        if (t - want).abs() > 1e-6 * dt {
            return Err(CliError::data(format!(
                "{}: line {}: time {t} breaks the uniform step {dt}",
                path.display(),
                k + 2
            )));
        }
    }
    Trace::new(dt, rows.into_iter().map(|r| r.1).collect())
        .map_err(|e| CliError::from_core(&path.display().to_string(), e))
}

/// Reads the value column only (for i.i.d. samples).
pub fn read_values(path: &Path) -> CliResult<Vec<f64>> {
    Ok(read_rows(path)?.into_iter().map(|r| r.1).collect())
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let fail = |e: std::io::Error| CliError::data(format!("writing {}: {e}", path.display()));
    std::fs::create_dir_all(&dir).map_err(fail)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(fail)?;
    tmp.write_all(contents).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

/// `<stem><suffix>.<ext>` next to `path`.
pub fn sibling(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

#[derive(Serialize)]
struct Metadata<'a> {
    schema_version: u32,
    tool: &'static str,
    library_version: &'static str,
    command: &'a str,
    output: String,
    seed: Option<u64>,
    generated_at: String,
    notes: &'a [String],
    config: &'a RunConfig,
}

/// Context shared by every file a command writes.
pub struct Run<'a> {
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub notes: Vec<String>,
    pub written: Vec<PathBuf>,
}

impl<'a> Run<'a> {
    pub fn new(command: &'a str, config: &'a RunConfig) -> Self {
        Self {
            command,
            config,
            notes: Vec::new(),
            written: Vec::new(),
        }
    }

    /// Writes `contents` and its `.meta.json` sidecar, both atomically.
    pub fn emit(&mut self, path: &Path, contents: &[u8]) -> CliResult<()> {
        write_atomic(path, contents)?;
        let meta = Metadata {
            schema_version: SCHEMA_VERSION,
            tool: "p2pbw",
            library_version: p2pbw::VERSION,
            command: self.command,
            output: path.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            seed: self.config.seed,
            generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            notes: &self.notes,
            config: self.config,
        };
        let mut json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        json.push('\n');
        write_atomic(&sidecar_path(path), json.as_bytes())?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    pub fn emit_json<T: Serialize>(&mut self, path: &Path, value: &T) -> CliResult<()> {
        let mut json = serde_json::to_string_pretty(value).expect("report serializes");
        json.push('\n');
        self.emit(path, json.as_bytes())
    }
}
