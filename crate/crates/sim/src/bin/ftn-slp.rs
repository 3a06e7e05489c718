use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use ftn_slp::config::{AlgorithmConfig, SubsolverConfig};
use ftn_slp::output::{self, Manifest, SweepManifest};
use ftn_slp::{run_design, run_sweep, Axis, Instance, ScenarioConfig, SimError, SimResult, SweepOptions};
use log::info;

#[derive(Parser)]
#[command(name = "ftn-slp", version, about = "Symbol-level precoding design for FTN ISAC links")]
struct Cli {
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "FTN_SLP_THREADS")]
    threads: Option<usize>,
    /// Only print errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON scenario file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted-path override, e.g. `dims.block_len=20`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args, Clone)]
struct Output {
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and write the block, trace and metrics.
    Design {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo sweep over one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        output: Output,
        /// energy_dbm (E), qos_db (gamma), tau, block_len (L) or n_users (K).
        #[arg(long)]
        axis: String,
        /// Comma-separated, increasing; the axis default grid when omitted.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Trials per value; `trials` from the config when omitted.
        #[arg(long)]
        trials: Option<usize>,
        /// Skip the sensing-only baseline solves.
        #[arg(long)]
        no_baseline: bool,
    },
    /// Run both algorithms from the same starting point and write their traces.
    Converge {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        output: Output,
        /// Run every algorithm with both subsolvers.
        #[arg(long)]
        compare_subsolvers: bool,
    },
    /// Write the noiseless received constellation of a designed block.
    Constellation {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        output: Output,
    },
    /// Parse and check a config without solving anything.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> SimResult<ScenarioConfig> {
    ScenarioConfig::load(common.config.as_deref(), &common.overrides)
}

fn relative(dir: &Path, files: &[PathBuf]) -> Vec<String> {
    files
        .iter()
        .map(|p| p.strip_prefix(dir).unwrap_or(p).display().to_string())
        .collect()
}

fn design(common: &Common, out: &Path) -> SimResult<()> {
    let cfg = load(common)?;
    let (sol, metrics) = run_design(&cfg)?;
    let files = [
        out.join("solution.csv"),
        out.join("trace.csv"),
        out.join("metrics.json"),
        out.join("diagnostics.log"),
    ];
    output::write_solution(&files[0], &sol)?;
    output::write_trace(&files[1], &sol.trace)?;
    output::write_json(&files[2], &metrics)?;
    let _ = std::fs::remove_file(&files[3]);
    output::write_diagnostics(&files[3], "design", &sol.trace)?;
    let mut manifest = Manifest::new("design", &cfg);
    manifest.files = relative(out, &files);
    manifest.write(out)?;
    info!(
        "mmse {:.6e}, throughput {:.4} bits/T0, energy {:.4e} of {:.4e}, {} iterations, {:.2} s",
        metrics.mmse, metrics.throughput_bits_per_t0, metrics.energy_used, metrics.energy_budget, metrics.iterations, metrics.wall_time_s
    );
    Ok(())
}

fn sweep(common: &Common, out: &Path, axis: &str, values: &[f64], trials: Option<usize>, baseline: bool) -> SimResult<()> {
    let cfg = load(common)?;
    let axis: Axis = axis.parse()?;
    let values = if values.is_empty() { axis.default_values() } else { values.to_vec() };
    let opts = SweepOptions {
        trials: trials.unwrap_or(cfg.trials),
        baseline,
    };
    let stop = Arc::new(AtomicBool::new(false));
    {
        let stop = Arc::clone(&stop);
        ctrlc::set_handler(move || stop.store(true, Ordering::SeqCst))
            .map_err(|e| SimError::io("installing Ctrl-C handler", std::io::Error::other(e)))?;
    }
    info!("sweeping {axis} over {values:?}, {} trials each", opts.trials);
    let outcome = run_sweep(&cfg, axis, &values, opts, &stop)?;
    let csv = out.join("sweep.csv");
    output::write_sweep(&csv, &outcome)?;
    let mut manifest = Manifest::new("sweep", &cfg);
    manifest.sweep = Some(SweepManifest {
        axis: axis.name().into(),
        values: values.clone(),
        trials: opts.trials,
        baseline,
        truncated: outcome.truncated,
    });
    manifest.files = relative(out, &[csv]);
    manifest.write(out)?;
    for p in outcome.summary() {
        info!(
            "{axis}={}: mmse {:.4e} ± {:.2e}, throughput {:.4} ± {:.3}, {} failed",
            p.value,
            p.mmse.mean,
            p.mmse.std,
            p.throughput.mean,
            p.throughput.std,
            p.failures
        );
    }
    if outcome.truncated {
        log::warn!("interrupted; partial results written");
    }
    Ok(())
}

fn converge(common: &Common, out: &Path, compare: bool) -> SimResult<()> {
    let cfg = load(common)?;
    let inst = Instance::build(&cfg, Default::default())?;
    let subsolvers = if compare {
        vec![SubsolverConfig::Bps, SubsolverConfig::Ipm]
    } else {
        vec![cfg.subsolver]
    };
    let diag = out.join("diagnostics.log");
    std::fs::create_dir_all(out).map_err(|e| SimError::io(format!("creating {}", out.display()), e))?;
    let _ = std::fs::remove_file(&diag);
    let mut files = vec![diag.clone()];
    let start = inst.problem.objective(&inst.initial(&cfg))?;
    for alg in [AlgorithmConfig::Minorization, AlgorithmConfig::Sca] {
        for &sub in &subsolvers {
            let run = ScenarioConfig {
                algorithm: alg,
                subsolver: sub,
                ..cfg.clone()
            };
            let sol = inst.solve(&run)?;
            let name = match (alg, compare) {
                (AlgorithmConfig::Minorization, false) => "minorization".to_string(),
                (AlgorithmConfig::Sca, false) => "sca".to_string(),
                (a, true) => format!("{}_{}", tag(a), sub_tag(sub)),
            };
            let path = out.join(format!("converge_{name}.csv"));
            output::write_convergence(&path, Some((start.f, start.mmse)), &sol.trace)?;
            output::write_diagnostics(&diag, &name, &sol.trace)?;
            info!("{name}: {} iterations, f {:.6e}, {:.2} s", sol.iterations, sol.f, sol.wall_time);
            files.push(path);
        }
    }
    let mut manifest = Manifest::new("converge", &cfg);
    manifest.files = relative(out, &files);
    manifest.write(out)?;
    Ok(())
}

fn tag(a: AlgorithmConfig) -> &'static str {
    match a {
        AlgorithmConfig::Minorization => "minorization",
        AlgorithmConfig::Sca => "sca",
    }
}

fn sub_tag(s: SubsolverConfig) -> &'static str {
    match s {
        SubsolverConfig::Bps => "bps",
        SubsolverConfig::Ipm => "ipm",
    }
}

fn constellation(common: &Common, out: &Path) -> SimResult<()> {
    let cfg = load(common)?;
    let (_, metrics) = run_design(&cfg)?;
    let points = metrics.constellation.unwrap_or_default();
    let path = out.join("constellation.csv");
    output::write_constellation(&path, &points)?;
    let mut manifest = Manifest::new("constellation", &cfg);
    manifest.files = relative(out, &[path]);
    manifest.write(out)?;
    let worst = points.iter().map(|p| p.margin).fold(f64::INFINITY, f64::min);
    info!("{} points, smallest margin {worst:.4e}", points.len());
    Ok(())
}

fn validate(common: &Common) -> SimResult<()> {
    let cfg = load(common)?;
    let d = cfg.dims();
    println!(
        "config ok: N_t={} N_r={} K={} L={} P={} Q={} tau={} E={} dBm",
        d.n_tx, d.n_rx, d.n_users, d.block_len, d.taps, d.half_width, cfg.pulse.tau, cfg.energy_dbm
    );
    Ok(())
}

fn run(cli: &Cli) -> SimResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| SimError::Config(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Design { common, output } => design(common, &output.out),
        Command::Sweep {
            common,
            output,
            axis,
            values,
            trials,
            no_baseline,
        } => sweep(common, &output.out, axis, values, *trials, !no_baseline),
        Command::Converge {
            common,
            output,
            compare_subsolvers,
        } => converge(common, &output.out, *compare_subsolvers),
        Command::Constellation { common, output } => constellation(common, &output.out),
        Command::Validate { common } => validate(common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        match cli.verbose {
            0 => log::LevelFilter::Info,
            1 => log::LevelFilter::Debug,
            _ => log::LevelFilter::Trace,
        }
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
