use crate::config::Config;
use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const SCHEMA: &str = "choquard-report/1";

/// JSON report: config echo, per-command results and timings.
pub struct Report {
    command: &'static str,
    config: Value,
    seed: u64,
    results: Map<String, Value>,
    timings: Map<String, Value>,
    started: Instant,
}

impl Report {
    pub fn new(command: &'static str, config: &Config, seed: u64) -> Result<Self> {
        Ok(Self {
            command,
            config: serde_json::to_value(config)?,
            seed,
            results: Map::new(),
            timings: Map::new(),
            started: Instant::now(),
        })
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.results.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    /// Runs `f` and records its wall-clock time under `phase`.
    pub fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.insert(phase.to_string(), json!(t.elapsed().as_secs_f64()));
        out
    }

    pub fn write(mut self, path: &Path) -> Result<()> {
        self.timings
            .insert("total".into(), json!(self.started.elapsed().as_secs_f64()));
        let generated = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let doc = json!({
            "schema": SCHEMA,
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "generated_unix": generated,
            "seed": self.seed,
            "config": self.config,
            "results": Value::Object(self.results),
            "timings_s": Value::Object(self.timings),
        });
        let text = serde_json::to_string_pretty(&doc)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

/// Comma-separated, LF-terminated CSV with a mandatory header row.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
