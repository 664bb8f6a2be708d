//! File outputs: metrics records, batch aggregates, trace and sweep CSV.
//!
//! Data files are byte-reproducible for identical requests: fixed field
//! order, no timestamps, full-precision floats. Wall-clock information goes
//! only into the separate run manifest. Files are written to a temporary
//! name and renamed into place.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use safelane_core::sim::{EpisodeMetrics, TraceRow};

/// Atomically write `bytes` to `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// One metrics record per line, in seed order.
pub fn write_jsonl<T: Serialize>(path: &Path, values: &[T]) -> Result<()> {
    let mut bytes = Vec::new();
    for v in values {
        serde_json::to_writer(&mut bytes, v)?;
        bytes.push(b'\n');
    }
    write_atomic(path, &bytes)
}

/// Per-episode record paired with its seed.
#[derive(Debug, Serialize)]
pub struct EpisodeRecord {
    pub seed: u64,
    #[serde(flatten)]
    pub metrics: EpisodeMetricsOut,
}

/// Serialization view of the episode metrics (drops non-finite min gap).
#[derive(Debug, Serialize)]
pub struct EpisodeMetricsOut {
    pub steps: usize,
    pub mean_speed: f64,
    pub mean_abs_jerk: f64,
    pub rms_jerk: f64,
    pub crash: bool,
    pub crash_step: Option<u64>,
    pub route_miss: bool,
    pub merge_miss: bool,
    pub ego_exited: bool,
    pub min_front_gap: Option<f64>,
}

impl From<&EpisodeMetrics> for EpisodeMetricsOut {
    fn from(m: &EpisodeMetrics) -> Self {
        Self {
            steps: m.steps,
            mean_speed: m.mean_speed,
            mean_abs_jerk: m.mean_abs_jerk,
            rms_jerk: m.rms_jerk,
            crash: m.crash,
            crash_step: m.crash_step,
            route_miss: m.route_miss,
            merge_miss: m.merge_miss,
            ego_exited: m.ego_exited,
            min_front_gap: m.min_front_gap.is_finite().then_some(m.min_front_gap),
        }
    }
}

/// Batch summary: per-seed means and standard deviations plus event rates.
#[derive(Debug, Serialize)]
pub struct Aggregate {
    pub scenario: String,
    pub controller: String,
    pub seeds: usize,
    pub failed_seeds: usize,
    pub mean_speed: f64,
    pub speed_std: f64,
    pub mean_abs_jerk: f64,
    pub abs_jerk_std: f64,
    pub rms_jerk: f64,
    pub crash_rate: f64,
    pub route_miss_rate: f64,
    pub merge_miss_rate: f64,
}

impl Aggregate {
    pub fn from_records(
        scenario: &str,
        controller: &str,
        records: &[EpisodeRecord],
        failed_seeds: usize,
    ) -> Self {
        let n = records.len().max(1) as f64;
        let mean = |f: fn(&EpisodeRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
        let std = |f: fn(&EpisodeRecord) -> f64, m: f64| {
            (records.iter().map(|r| (f(r) - m).powi(2)).sum::<f64>() / n).sqrt()
        };
        let mean_speed = mean(|r| r.metrics.mean_speed);
        let mean_abs_jerk = mean(|r| r.metrics.mean_abs_jerk);
        Self {
            scenario: scenario.to_string(),
            controller: controller.to_string(),
            seeds: records.len(),
            failed_seeds,
            mean_speed,
            speed_std: std(|r| r.metrics.mean_speed, mean_speed),
            mean_abs_jerk,
            abs_jerk_std: std(|r| r.metrics.mean_abs_jerk, mean_abs_jerk),
            rms_jerk: mean(|r| r.metrics.rms_jerk),
            crash_rate: mean(|r| r.metrics.crash as u8 as f64),
            route_miss_rate: mean(|r| r.metrics.route_miss as u8 as f64),
            merge_miss_rate: mean(|r| r.metrics.merge_miss as u8 as f64),
        }
    }
}

/// Trace CSV: one row per (step, vehicle); the jerk column is empty on a
/// vehicle's first recorded row.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("step,id,section,lane,pos,speed,accel,jerk\n");
    for r in rows {
        let jerk = r.jerk.map(|j| format!("{j}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.step, r.id, r.section, r.lane, r.pos, r.speed, r.accel, jerk
        ));
    }
    out
}

/// Run manifest: the only output that may carry wall-clock information.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub request: String,
    pub seeds: Vec<u64>,
    pub version: String,
    pub unix_time: u64,
}

impl Manifest {
    pub fn new(command: &str, request: String, seeds: Vec<u64>) -> Self {
        Self {
            command: command.to_string(),
            request,
            seeds,
            version: env!("CARGO_PKG_VERSION").to_string(),
            unix_time: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

/// Resolve the output directory: flag value, else `SAFELANE_OUT`, else
/// `./out`.
pub fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("SAFELANE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Write a string with a trailing newline if missing.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut bytes = text.as_bytes().to_vec();
    if !text.ends_with('\n') {
        bytes.push(b'\n');
    }
    write_atomic(path, &bytes)
}

/// Small helper for CSV assembly.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        let mut buf = String::from(header);
        buf.push('\n');
        Self { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}
