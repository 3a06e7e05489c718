//! Turning a config into a solved instance.

use ftn_slp_core::channel::{assemble_effective, build_window, sample_comm_channel, whiten};
use ftn_slp_core::ci::{build_ci_system, build_energy_form, db_to_linear, CISystem, EnergyMode, SymbolBlock};
use ftn_slp_core::linalg::CMatrix;
use ftn_slp_core::solver::random_initial;
use ftn_slp_core::{DesignProblem, EffectiveChannel, PulseTables, SensingLift, Solution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{SimError, SimResult};
use crate::metrics::{block_throughput, constellation, simulated_throughput, ConstellationPoint};

/// Identifies one Monte Carlo draw: the trial index and a stream key
/// (the sweep value's bit pattern, 0 for single runs).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Draw {
    pub trial: u64,
    pub key: u64,
}

impl Draw {
    pub fn rng(&self, base_seed: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(self.trial));
        rng.set_stream(self.key);
        rng
    }
}

/// All model matrices for one draw.
#[derive(Debug, Clone)]
pub struct Instance {
    pub tables: PulseTables,
    pub eff: EffectiveChannel,
    pub block: SymbolBlock,
    pub problem: DesignProblem,
    pub draw: Draw,
}

impl Instance {
    pub fn build(cfg: &ScenarioConfig, draw: Draw) -> SimResult<Self> {
        let dims = cfg.dims();
        let tables = PulseTables::new(cfg.pulse_spec()?, dims.block_len, dims.taps)?;
        let sigma_c2 = db_to_linear(cfg.powers.sigma_c2_dbm);
        let tap_var = db_to_linear(cfg.powers.tap_variance_dbm.unwrap_or(cfg.powers.sigma_c2_dbm));
        let comm = sample_comm_channel(&mut draw.rng(cfg.seeds.channel), &dims, tap_var, sigma_c2)?;
        let window = build_window(&dims, cfg.window_mode())?;
        let w = whiten(&window, &tables.gram_ext)?;
        let eff = assemble_effective(&comm, &tables, &dims, &window, &w)?;
        let block = SymbolBlock::random_qpsk(&mut draw.rng(cfg.seeds.symbols), dims.n_users, dims.block_len);
        let ci = build_ci_system(&eff, &block, &cfg.qos(), sigma_c2)?;
        let energy = build_energy_form(&tables, &dims, cfg.energy_dbm, cfg.energy_mode())?;
        let problem = DesignProblem {
            lift: SensingLift::new(&tables, &dims)?,
            ci,
            energy,
            sigma_r2: db_to_linear(cfg.powers.sigma_r2_dbm),
            sigma_h2: db_to_linear(cfg.powers.sigma_h2_dbm),
        };
        Ok(Self {
            tables,
            eff,
            block,
            problem,
            draw,
        })
    }

    /// The same instance with the CI constraints removed.
    pub fn sensing_only(&self) -> Self {
        let mut out = self.clone();
        out.problem.ci = CISystem::empty(self.problem.n_vars());
        out
    }

    /// Complex noise variance `σ_C² λ_i` on each received symbol, user-major.
    pub fn noise_vars(&self, cfg: &ScenarioConfig) -> Vec<f64> {
        let sigma_c2 = db_to_linear(cfg.powers.sigma_c2_dbm);
        let l = self.eff.noise_eigs.len();
        (0..cfg.dims.n_users * l)
            .map(|i| sigma_c2 * self.eff.noise_eigs[i % l])
            .collect()
    }

    /// The random starting block `S_{-1}`.
    pub fn initial(&self, cfg: &ScenarioConfig) -> CMatrix {
        random_initial(&mut self.draw.rng(cfg.seeds.init), &self.problem)
    }

    pub fn solve(&self, cfg: &ScenarioConfig) -> SimResult<Solution> {
        let init = self.initial(cfg);
        match self.problem.solve(&init, &cfg.design_options()) {
            Ok(sol) => Ok(sol),
            Err(ftn_slp_core::Error::Infeasible { min_energy, .. }) if self.problem.energy.mode == EnergyMode::PerAntenna => {
                let need = min_energy.map_or("unknown".to_string(), |v| format!("{v:.6e}"));
                Err(SimError::Infeasible(format!(
                    "per-antenna budgets of {:.6e} each cannot meet the constructive-interference constraints \
                     (total energy needed without the per-antenna split: {need})",
                    self.problem.energy.budget / self.problem.energy.n_tx as f64
                )))
            }
            Err(e) => Err(e.into()),
        }
    }

    pub fn metrics(&self, cfg: &ScenarioConfig, sol: &Solution) -> MetricsRecord {
        let y = self.eff.received(&sol.s);
        let noise = self.noise_vars(cfg);
        let tau = cfg.pulse.tau;
        let empirical = (cfg.noise_draws > 0).then(|| {
            let d = ftn_slp_core::linalg::vec_rows(&self.block.data);
            simulated_throughput(
                &mut self.draw.rng(cfg.seeds.noise),
                y.as_slice(),
                d.as_slice(),
                &noise,
                tau,
                cfg.noise_draws,
            )
        });
        let points = (self.problem.ci.rows() > 0).then(|| constellation(&self.eff, &self.problem.ci, &sol.s, &sol.s_hat));
        MetricsRecord {
            mmse: sol.mmse,
            objective: sol.f,
            objective_trace: sol.trace.iter().map(|r| r.f).collect(),
            mmse_trace: sol.trace.iter().map(|r| r.mmse).collect(),
            throughput_bits_per_t0: block_throughput(&y, &self.block.data, &noise, tau),
            empirical_throughput: empirical,
            energy_used: sol.energy,
            energy_budget: self.problem.energy.budget,
            min_ci_margin: sol.min_margin,
            wall_time_s: sol.wall_time,
            iterations: sol.iterations,
            converged: sol.converged,
            min_feasible_energy: sol.min_energy,
            slater: sol.slater_holds(self.problem.energy.budget),
            constellation: points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub mmse: f64,
    /// `tr((σ_R²/σ_H² I + X̄ᴴX̄)⁻¹)`, the quantity the solvers minimize.
    pub objective: f64,
    pub objective_trace: Vec<f64>,
    pub mmse_trace: Vec<f64>,
    pub throughput_bits_per_t0: f64,
    pub empirical_throughput: Option<f64>,
    pub energy_used: f64,
    pub energy_budget: f64,
    /// Infinite for sensing-only designs.
    #[serde(serialize_with = "finite_or_null", deserialize_with = "null_as_infinite")]
    pub min_ci_margin: f64,
    pub wall_time_s: f64,
    pub iterations: usize,
    pub converged: bool,
    pub min_feasible_energy: Option<f64>,
    pub slater: Option<bool>,
    pub constellation: Option<Vec<ConstellationPoint>>,
}

fn finite_or_null<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

fn null_as_infinite<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// Draw the instance for trial 0, solve it and compute its metrics.
pub fn run_design(cfg: &ScenarioConfig) -> SimResult<(Solution, MetricsRecord)> {
    run_draw(cfg, Draw::default())
}

pub fn run_draw(cfg: &ScenarioConfig, draw: Draw) -> SimResult<(Solution, MetricsRecord)> {
    let inst = Instance::build(cfg, draw)?;
    let sol = inst.solve(cfg)?;
    let m = inst.metrics(cfg, &sol);
    Ok((sol, m))
}
