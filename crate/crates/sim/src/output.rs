//! File formats written by the CLI.
//!
//! CSV files carry a header row. Every output directory gets a
//! `manifest.json` holding the resolved config, so a run can be repeated
//! from the manifest alone.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ftn_slp_core::{IterationRecord, Solution};
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{SimError, SimResult};
use crate::metrics::ConstellationPoint;
use crate::sweep::{Status, SweepOutcome, SweepRow};

/// Bumped whenever a column or manifest field changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

pub const GIT_HASH: &str = env!("FTN_SLP_GIT_HASH");

pub const SWEEP_COLUMNS: [&str; 9] = [
    "axis",
    "trial",
    "mmse",
    "throughput",
    "energy",
    "min_margin",
    "iterations",
    "wall_time_s",
    "status",
];

fn create(path: &Path) -> SimResult<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| SimError::io(format!("creating {}", dir.display()), e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| SimError::io(format!("creating {}", path.display()), e))
}

fn csv_writer(path: &Path) -> SimResult<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> SimResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| SimError::io(format!("writing {}", path.display()), e))
}

/// `antenna, slot, re, im` for every entry of `S`.
pub fn write_solution(path: &Path, sol: &Solution) -> SimResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["antenna", "slot", "re", "im"])?;
    for n in 0..sol.s.nrows() {
        for l in 0..sol.s.ncols() {
            let z = sol.s[(n, l)];
            w.write_record([n.to_string(), l.to_string(), z.re.to_string(), z.im.to_string()])?;
        }
    }
    w.flush().map_err(|e| SimError::io(format!("writing {}", path.display()), e))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Full per-iteration trace.
pub fn write_trace(path: &Path, trace: &[IterationRecord]) -> SimResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["k", "f", "mmse", "energy", "min_margin", "rho_lo", "rho_hi", "step", "wall_time"])?;
    for r in trace {
        w.write_record([
            r.iteration.to_string(),
            r.f.to_string(),
            r.mmse.to_string(),
            r.energy.to_string(),
            opt(r.min_margin.is_finite().then_some(r.min_margin)),
            opt(r.rho_lo),
            opt(r.rho_hi),
            opt(r.step),
            r.wall_time.to_string(),
        ])?;
    }
    w.flush().map_err(|e| SimError::io(format!("writing {}", path.display()), e))
}

/// Convergence trace with `k, f, mmse, wall_time`. `start` is `(f, mmse)`
/// at the random initial block, written as `k = -1`.
pub fn write_convergence(path: &Path, start: Option<(f64, f64)>, trace: &[IterationRecord]) -> SimResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["k", "f", "mmse", "wall_time"])?;
    if let Some((f, mmse)) = start {
        w.write_record(["-1".to_string(), f.to_string(), mmse.to_string(), "0".to_string()])?;
    }
    for r in trace {
        w.write_record([r.iteration.to_string(), r.f.to_string(), r.mmse.to_string(), r.wall_time.to_string()])?;
    }
    w.flush().map_err(|e| SimError::io(format!("writing {}", path.display()), e))
}

pub fn write_constellation(path: &Path, points: &[ConstellationPoint]) -> SimResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["user", "slot", "re", "im", "margin"])?;
    for p in points {
        w.write_record([p.user.to_string(), p.slot.to_string(), p.re.to_string(), p.im.to_string(), p.margin.to_string()])?;
    }
    w.flush().map_err(|e| SimError::io(format!("writing {}", path.display()), e))
}

fn sweep_record(r: &SweepRow) -> [String; 9] {
    [
        r.axis.to_string(),
        r.trial.clone(),
        opt(r.mmse),
        opt(r.throughput),
        opt(r.energy),
        opt(r.min_margin),
        opt(r.iterations),
        opt(r.wall_time_s),
        r.status.as_str().to_string(),
    ]
}

/// Trial rows, then aggregate rows, then a `truncated` marker if the sweep
/// was interrupted.
pub fn write_sweep(path: &Path, out: &SweepOutcome) -> SimResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(SWEEP_COLUMNS)?;
    for r in out.rows.iter().chain(&out.aggregate_rows()) {
        w.write_record(sweep_record(r))?;
    }
    if out.truncated {
        let mut marker = [""; 9].map(String::from);
        marker[1] = "truncated".into();
        marker[8] = Status::Truncated.as_str().into();
        w.write_record(marker)?;
    }
    w.flush().map_err(|e| SimError::io(format!("writing {}", path.display()), e))
}

/// One `key=value` line per iteration.
pub fn diagnostics_line(r: &IterationRecord) -> String {
    let o = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.9e}"));
    format!(
        "iter={} f={:.12e} mmse={:.12e} energy={:.9e} min_margin={:.6e} rho_lo={} rho_hi={} step={} t={:.6}",
        r.iteration,
        r.f,
        r.mmse,
        r.energy,
        r.min_margin,
        o(r.rho_lo),
        o(r.rho_hi),
        o(r.step),
        r.wall_time
    )
}

pub fn write_diagnostics(path: &Path, label: &str, trace: &[IterationRecord]) -> SimResult<()> {
    let mut w = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map(BufWriter::new)
        .map_err(|e| SimError::io(format!("opening {}", path.display()), e))?;
    let mut write = || -> std::io::Result<()> {
        for r in trace {
            writeln!(w, "run={label} {}", diagnostics_line(r))?;
        }
        w.flush()
    };
    write().map_err(|e| SimError::io(format!("writing {}", path.display()), e))
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub git_hash: &'static str,
    pub command: &'a str,
    pub config: &'a ScenarioConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepManifest>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepManifest {
    pub axis: String,
    pub values: Vec<f64>,
    pub trials: usize,
    pub baseline: bool,
    pub truncated: bool,
}

impl<'a> Manifest<'a> {
    pub fn new(command: &'a str, config: &'a ScenarioConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            git_hash: GIT_HASH,
            command,
            config,
            sweep: None,
            files: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> SimResult<PathBuf> {
        let path = dir.join("manifest.json");
        write_json(&path, self)?;
        Ok(path)
    }
}
