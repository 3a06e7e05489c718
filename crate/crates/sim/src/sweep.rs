//! Monte Carlo sweeps over one scenario parameter.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{SimError, SimResult};
use crate::scenario::{Draw, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Energy budget `E` in dBm.
    Energy,
    /// QoS threshold `Γ` in dB.
    Qos,
    /// Compression factor `τ`.
    Tau,
    /// Block length `L`.
    BlockLen,
    /// Number of users `K`.
    Users,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Energy => "energy_dbm",
            Axis::Qos => "qos_db",
            Axis::Tau => "tau",
            Axis::BlockLen => "block_len",
            Axis::Users => "n_users",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> SimResult<ScenarioConfig> {
        let mut cfg = base.clone();
        let count = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(SimError::Config(format!("{} must be a positive integer, got {v}", self.name())))
            }
        };
        match self {
            Axis::Energy => cfg.energy_dbm = value,
            Axis::Qos => {
                cfg.qos_db = value;
                cfg.qos_per_user_db = None;
            }
            Axis::Tau => cfg.pulse.tau = value,
            Axis::BlockLen => cfg.dims.block_len = count(value)?,
            Axis::Users => {
                cfg.dims.n_users = count(value)?;
                cfg.qos_per_user_db = None;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Default grid for the axis.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            Axis::Energy => vec![26.0, 28.0, 30.0, 32.0, 34.0, 36.0],
            Axis::Qos => vec![5.0, 10.0, 15.0, 20.0, 25.0],
            Axis::Tau => vec![0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0],
            Axis::BlockLen => vec![10.0, 15.0, 20.0, 25.0, 30.0],
            Axis::Users => vec![1.0, 2.0, 3.0, 4.0],
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = SimError;

    fn from_str(s: &str) -> SimResult<Self> {
        Ok(match s {
            "E" | "energy" | "energy_dbm" => Axis::Energy,
            "gamma" | "Gamma" | "qos" | "qos_db" => Axis::Qos,
            "tau" => Axis::Tau,
            "L" | "block_len" => Axis::BlockLen,
            "K" | "users" | "n_users" => Axis::Users,
            other => return Err(SimError::Config(format!("unknown sweep axis `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Infeasible,
    Error,
    Baseline,
    Aggregate,
    Truncated,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Infeasible => "infeasible",
            Status::Error => "error",
            Status::Baseline => "baseline",
            Status::Aggregate => "aggregate",
            Status::Truncated => "truncated",
        }
    }
}

/// One CSV row: a trial, its sensing-only baseline, or an aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: f64,
    /// Trial index, or `mean`, `std`, `baseline_mean`, `baseline_std`.
    pub trial: String,
    pub mmse: Option<f64>,
    pub throughput: Option<f64>,
    pub energy: Option<f64>,
    pub min_margin: Option<f64>,
    pub iterations: Option<f64>,
    pub wall_time_s: Option<f64>,
    pub status: Status,
}

impl SweepRow {
    fn failed(axis: f64, trial: u64, status: Status) -> Self {
        Self {
            axis,
            trial: trial.to_string(),
            mmse: None,
            throughput: None,
            energy: None,
            min_margin: None,
            iterations: None,
            wall_time_s: None,
            status,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stat {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 with fewer than two samples.
    pub std: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self::default();
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { n, mean, std }
    }

    pub fn std_err(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.std / (self.n as f64).sqrt()
        }
    }
}

/// Per-value statistics of a finished sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub value: f64,
    pub mmse: Stat,
    pub throughput: Stat,
    pub baseline_mmse: Stat,
    pub failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub trials: usize,
    /// Also solve the sensing-only problem for every trial.
    pub baseline: bool,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub axis: Axis,
    pub values: Vec<f64>,
    /// Trial and baseline rows, ordered by value, then trial.
    pub rows: Vec<SweepRow>,
    pub truncated: bool,
}

/// Run `trials` independent draws at every value. Each draw's random
/// streams depend only on the base seeds, the value and the trial index,
/// so the result does not depend on scheduling. Setting `stop` ends the
/// sweep early; finished trials are kept.
pub fn run_sweep(
    base: &ScenarioConfig,
    axis: Axis,
    values: &[f64],
    opts: SweepOptions,
    stop: &AtomicBool,
) -> SimResult<SweepOutcome> {
    if values.is_empty() {
        return Err(SimError::Config("sweep needs at least one value".into()));
    }
    if opts.trials == 0 {
        return Err(SimError::Config("trials must be at least 1".into()));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(SimError::Config("sweep values must be strictly increasing".into()));
    }
    let configs = values
        .iter()
        .map(|&v| axis.apply(base, v))
        .collect::<SimResult<Vec<_>>>()?;
    let jobs: Vec<(usize, u64)> = (0..values.len())
        .flat_map(|i| (0..opts.trials as u64).map(move |t| (i, t)))
        .collect();
    let results: Vec<Option<Vec<SweepRow>>> = jobs
        .par_iter()
        .map(|&(i, trial)| {
            if stop.load(Ordering::SeqCst) {
                return None;
            }
            let value = values[i];
            let draw = Draw {
                trial,
                key: value.to_bits(),
            };
            Some(run_point(&configs[i], value, draw, opts.baseline))
        })
        .collect();
    let truncated = results.iter().any(Option::is_none);
    let rows = results.into_iter().flatten().flatten().collect();
    Ok(SweepOutcome {
        axis,
        values: values.to_vec(),
        rows,
        truncated,
    })
}

fn run_point(cfg: &ScenarioConfig, value: f64, draw: Draw, baseline: bool) -> Vec<SweepRow> {
    let inst = match Instance::build(cfg, draw) {
        Ok(i) => i,
        Err(e) => {
            log::warn!("{}={value} trial {}: {e}", "axis", draw.trial);
            return vec![SweepRow::failed(value, draw.trial, Status::Error)];
        }
    };
    let mut rows = vec![solve_row(cfg, &inst, value, draw.trial, Status::Ok)];
    if baseline {
        rows.push(solve_row(cfg, &inst.sensing_only(), value, draw.trial, Status::Baseline));
    }
    rows
}

fn solve_row(cfg: &ScenarioConfig, inst: &Instance, value: f64, trial: u64, ok: Status) -> SweepRow {
    match inst.solve(cfg) {
        Ok(sol) => {
            let m = inst.metrics(cfg, &sol);
            SweepRow {
                axis: value,
                trial: trial.to_string(),
                mmse: Some(m.mmse),
                throughput: Some(m.throughput_bits_per_t0),
                energy: Some(m.energy_used),
                min_margin: m.min_ci_margin.is_finite().then_some(m.min_ci_margin),
                iterations: Some(m.iterations as f64),
                wall_time_s: Some(m.wall_time_s),
                status: ok,
            }
        }
        Err(e) => {
            log::warn!("value {value} trial {trial}: {e}");
            let status = if matches!(e, SimError::Infeasible(_)) {
                Status::Infeasible
            } else {
                Status::Error
            };
            SweepRow::failed(value, trial, status)
        }
    }
}

impl SweepOutcome {
    fn column(&self, value: f64, status: Status, pick: impl Fn(&SweepRow) -> Option<f64>) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.axis == value && r.status == status)
            .filter_map(pick)
            .collect()
    }

    pub fn summary(&self) -> Vec<PointSummary> {
        self.values
            .iter()
            .map(|&v| PointSummary {
                value: v,
                mmse: Stat::of(&self.column(v, Status::Ok, |r| r.mmse)),
                throughput: Stat::of(&self.column(v, Status::Ok, |r| r.throughput)),
                baseline_mmse: Stat::of(&self.column(v, Status::Baseline, |r| r.mmse)),
                failures: self
                    .rows
                    .iter()
                    .filter(|r| r.axis == v && matches!(r.status, Status::Infeasible | Status::Error))
                    .count(),
            })
            .collect()
    }

    /// `mean`, `std` and, when baselines were run, `baseline_mean` and
    /// `baseline_std` rows for every value.
    pub fn aggregate_rows(&self) -> Vec<SweepRow> {
        let mut out = Vec::new();
        for &v in &self.values {
            for (status, prefix) in [(Status::Ok, ""), (Status::Baseline, "baseline_")] {
                let stats: [Stat; 6] = [
                    Stat::of(&self.column(v, status, |r| r.mmse)),
                    Stat::of(&self.column(v, status, |r| r.throughput)),
                    Stat::of(&self.column(v, status, |r| r.energy)),
                    Stat::of(&self.column(v, status, |r| r.min_margin)),
                    Stat::of(&self.column(v, status, |r| r.iterations)),
                    Stat::of(&self.column(v, status, |r| r.wall_time_s)),
                ];
                if stats[0].n == 0 {
                    continue;
                }
                for (label, pick) in [("mean", 0usize), ("std", 1usize)] {
                    let get = |s: &Stat| (s.n > 0).then(|| if pick == 0 { s.mean } else { s.std });
                    out.push(SweepRow {
                        axis: v,
                        trial: format!("{prefix}{label}"),
                        mmse: get(&stats[0]),
                        throughput: get(&stats[1]),
                        energy: get(&stats[2]),
                        min_margin: get(&stats[3]),
                        iterations: get(&stats[4]),
                        wall_time_s: get(&stats[5]),
                        status: Status::Aggregate,
                    });
                }
            }
        }
        out
    }
}
