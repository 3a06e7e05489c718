//! Scenario configuration: JSON schema, defaults and dotted-path overrides.

use std::path::Path;

use ftn_slp_core::ci::EnergyMode;
use ftn_slp_core::channel::WindowMode;
use ftn_slp_core::sensing::GradientForm;
use ftn_slp_core::solver::{BpsOptions, IpmOptions};
use ftn_slp_core::{Algorithm, DesignOptions, Dimensions, PulseSpec, Subsolver};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{SimError, SimResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DimsConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_users: usize,
    pub block_len: usize,
    /// Channel taps `P`.
    pub taps: usize,
    /// Pulse truncation `Q`, in symbol periods.
    pub half_width: usize,
}

impl Default for DimsConfig {
    fn default() -> Self {
        Self {
            n_tx: 3,
            n_rx: 8,
            n_users: 2,
            block_len: 15,
            taps: 3,
            half_width: 3,
        }
    }
}

impl DimsConfig {
    pub fn to_dims(&self) -> Dimensions {
        Dimensions {
            n_tx: self.n_tx,
            n_rx: self.n_rx,
            n_users: self.n_users,
            block_len: self.block_len,
            taps: self.taps,
            half_width: self.half_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseConfig {
    pub rolloff: f64,
    /// Nominal symbol period `T0` in seconds.
    pub t0: f64,
    /// Compression factor `τ`.
    pub tau: f64,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            rolloff: 0.3,
            t0: 1e-3,
            tau: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerConfig {
    pub sigma_c2_dbm: f64,
    pub sigma_r2_dbm: f64,
    pub sigma_h2_dbm: f64,
    /// Variance of the communication channel taps; `σ_C²` when unset.
    pub tap_variance_dbm: Option<f64>,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            sigma_c2_dbm: 0.0,
            sigma_r2_dbm: 0.0,
            sigma_h2_dbm: 20.0,
            tap_variance_dbm: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Seeds {
    pub channel: u64,
    pub symbols: u64,
    pub init: u64,
    pub noise: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            channel: 1,
            symbols: 2,
            init: 3,
            noise: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyModeConfig {
    Total,
    PerAntenna,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowModeConfig {
    Truncate,
    Fold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmConfig {
    Minorization,
    Sca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsolverConfig {
    Bps,
    Ipm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientConfig {
    Regularized,
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Outer stopping threshold, relative to `‖S_0‖²`.
    pub tol: f64,
    pub max_iter: usize,
    /// BPS bisection tolerance, relative to the right end of the bracket.
    pub rho_tol: f64,
    pub monotone_tol: f64,
    pub line_search_tol: f64,
    pub gradient: GradientConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = DesignOptions::default();
        Self {
            tol: d.tol,
            max_iter: d.max_iter,
            rho_tol: d.bps.rho_tol,
            monotone_tol: d.monotone_tol,
            line_search_tol: d.line_search_tol,
            gradient: GradientConfig::Regularized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub dims: DimsConfig,
    pub pulse: PulseConfig,
    pub powers: PowerConfig,
    /// QoS threshold `Γ` in dB, shared by every user unless `qos_per_user_db` is set.
    pub qos_db: f64,
    pub qos_per_user_db: Option<Vec<f64>>,
    pub energy_dbm: f64,
    pub energy_mode: EnergyModeConfig,
    pub window_mode: WindowModeConfig,
    pub algorithm: AlgorithmConfig,
    pub subsolver: SubsolverConfig,
    pub seeds: Seeds,
    pub solver: SolverConfig,
    pub trials: usize,
    /// Noise draws for the empirical throughput check; 0 skips it.
    pub noise_draws: usize,
    /// Accept `K ≥ N_t`, which the system model otherwise rules out.
    pub allow_k_ge_nt: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            dims: DimsConfig::default(),
            pulse: PulseConfig::default(),
            powers: PowerConfig::default(),
            qos_db: 15.0,
            qos_per_user_db: None,
            energy_dbm: 30.0,
            energy_mode: EnergyModeConfig::Total,
            window_mode: WindowModeConfig::Truncate,
            algorithm: AlgorithmConfig::Minorization,
            subsolver: SubsolverConfig::Bps,
            seeds: Seeds::default(),
            solver: SolverConfig::default(),
            trials: 20,
            noise_draws: 0,
            allow_k_ge_nt: false,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> SimResult<Self> {
        serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))
    }

    /// Read a config file, apply `key=value` overrides and validate.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> SimResult<Self> {
        let mut value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| SimError::Config(format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str::<Value>(&text)
                    .map_err(|e| SimError::Config(format!("{}: {e}", p.display())))?
            }
            None => serde_json::to_value(Self::default()).expect("default config serializes"),
        };
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: Self = serde_json::from_value(value).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> SimResult<()> {
        let dims = self.dims.to_dims();
        let check = if self.allow_k_ge_nt {
            dims.validate_sizes()
        } else {
            dims.validate()
        };
        check.map_err(|e| SimError::Config(e.to_string()))?;
        self.pulse_spec()?;
        if let Some(q) = &self.qos_per_user_db {
            if q.len() != self.dims.n_users {
                return Err(SimError::Config(format!(
                    "qos_per_user_db has {} entries for {} users",
                    q.len(),
                    self.dims.n_users
                )));
            }
        }
        let finite = [
            ("qos_db", self.qos_db),
            ("energy_dbm", self.energy_dbm),
            ("powers.sigma_c2_dbm", self.powers.sigma_c2_dbm),
            ("powers.sigma_r2_dbm", self.powers.sigma_r2_dbm),
            ("powers.sigma_h2_dbm", self.powers.sigma_h2_dbm),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(SimError::Config(format!("{name} must be finite")));
            }
        }
        let s = &self.solver;
        if !(s.tol > 0.0) || !(s.rho_tol > 0.0) || !(s.line_search_tol > 0.0) || !(s.monotone_tol >= 0.0) {
            return Err(SimError::Config("solver tolerances must be positive".into()));
        }
        if self.trials == 0 {
            return Err(SimError::Config("trials must be at least 1".into()));
        }
        Ok(())
    }

    pub fn dims(&self) -> Dimensions {
        self.dims.to_dims()
    }

    pub fn pulse_spec(&self) -> SimResult<PulseSpec> {
        PulseSpec::new(self.pulse.rolloff, self.pulse.t0, self.pulse.tau, self.dims.half_width)
            .map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn qos(&self) -> Vec<f64> {
        self.qos_per_user_db
            .clone()
            .unwrap_or_else(|| vec![self.qos_db; self.dims.n_users])
    }

    pub fn energy_mode(&self) -> EnergyMode {
        match self.energy_mode {
            EnergyModeConfig::Total => EnergyMode::Total,
            EnergyModeConfig::PerAntenna => EnergyMode::PerAntenna,
        }
    }

    pub fn window_mode(&self) -> WindowMode {
        match self.window_mode {
            WindowModeConfig::Truncate => WindowMode::Truncate,
            WindowModeConfig::Fold => WindowMode::Fold,
        }
    }

    pub fn design_options(&self) -> DesignOptions {
        let s = &self.solver;
        DesignOptions {
            algorithm: match self.algorithm {
                AlgorithmConfig::Minorization => Algorithm::Minorization,
                AlgorithmConfig::Sca => Algorithm::Sca,
            },
            subsolver: match self.subsolver {
                SubsolverConfig::Bps => Subsolver::Bps,
                SubsolverConfig::Ipm => Subsolver::Ipm,
            },
            tol: s.tol,
            max_iter: s.max_iter,
            monotone_tol: s.monotone_tol,
            line_search_tol: s.line_search_tol,
            gradient: match s.gradient {
                GradientConfig::Regularized => GradientForm::Regularized,
                GradientConfig::Literal => GradientForm::Literal,
            },
            bps: BpsOptions {
                rho_tol: s.rho_tol,
                ..BpsOptions::default()
            },
            ipm: IpmOptions::default(),
        }
    }
}

/// Set `a.b.c=value` inside a JSON tree. The value is parsed as JSON when
/// possible and taken as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> SimResult<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| SimError::Config(format!("override `{assignment}` is not key=value")))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(SimError::Config(format!("override `{assignment}` has an empty key")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| SimError::Config(format!("`{}` is not a table", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            obj.insert((*key).to_string(), value);
            return Ok(());
        }
        node = obj
            .entry((*key).to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!()
}
