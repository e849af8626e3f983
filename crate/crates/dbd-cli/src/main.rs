use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dbd_cli::config::{schema_document, ExperimentConfig};
use dbd_cli::runner::{relocalize, run_instance_with, SolutionArtifact};
use dbd_cli::{output, run_sweep_to, write_run_artifacts};
use dbd_core::model::{draw_scenario, synth_measurement, Scenario};
use dbd_core::solver::SolverStatus;

/// Dual-blind deconvolution experiment runner: simulate overlaid
/// radar-communications measurements, solve the atomic-norm dual SDP,
/// localize delay-Doppler supports, and recover waveforms and messages.
#[derive(Parser)]
#[command(name = "dbd", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment configuration (JSON; see `dbd schema`).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a scenario and synthesize its measurement (no solve).
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Full single-instance pipeline: solve, localize, recover, score.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Localization grid as `GTxGV`, e.g. 256x256.
        #[arg(long)]
        grid: Option<String>,
        /// Write the solver residual trace to residuals.csv.
        #[arg(long)]
        emit_residuals: bool,
        /// Write the standard-form conic problem to problem.json.
        #[arg(long)]
        emit_problem: bool,
        /// Override the noise regularization weight (noisy variant).
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Re-run localization from a prior solve's artifacts.
    Localize {
        /// Directory holding scenario.json + solution.json.
        #[arg(long, default_value = "out")]
        input: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Localization grid as `GTxGV`.
        #[arg(long)]
        grid: Option<String>,
    },
    /// Monte-Carlo sweep over the config's axes.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Worker threads (default: available cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print the config schema, defaults and artifact formats as JSON.
    Schema {
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_grid(s: &str) -> anyhow::Result<(usize, usize)> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| anyhow::anyhow!("grid must look like 256x256, got {s}"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn load_config(common: &CommonArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            // config/domain errors exit with 2, runtime failures with 1
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

#[derive(Debug)]
struct ConfigError(anyhow::Error);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for ConfigError {}

fn as_config_error(e: anyhow::Error) -> anyhow::Error {
    anyhow::Error::new(ConfigError(e))
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Simulate { common } => {
            let cfg = load_config(&common).map_err(as_config_error)?;
            let spec = cfg.scenario_spec().map_err(as_config_error)?;
            let scen = draw_scenario(&spec).map_err(|e| as_config_error(e.into()))?;
            let meas = synth_measurement(&scen);
            std::fs::create_dir_all(&common.out)?;
            output::write_json(&common.out.join("scenario.json"), &scen)?;
            output::write_json(&common.out.join("measurement.json"), &meas)?;
            let (dt, dv) = scen.min_separation();
            println!(
                "simulated {} samples (min separation: delta_tau={dt:.4}, delta_nu={dv:.4}) -> {}",
                meas.y.len(),
                common.out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve { common, grid, emit_residuals, emit_problem, mu } => {
            let mut cfg = load_config(&common).map_err(as_config_error)?;
            if let Some(g) = grid {
                cfg.localize.grid = parse_grid(&g).map_err(as_config_error)?;
            }
            if mu.is_some() {
                cfg.mu = mu;
            }
            let spec = cfg.scenario_spec().map_err(as_config_error)?;
            let outcome = run_instance_with(
                &spec,
                &cfg.solver,
                &cfg.localize,
                cfg.mu,
                cfg.cap_to_model_order,
            )?;
            write_run_artifacts(&common.out, &outcome, emit_residuals, emit_problem)?;
            println!(
                "solver: {:?} after {} iterations (objective {:.6})",
                outcome.solution.status, outcome.solution.iterations, outcome.solution.objective
            );
            for (label, ests) in
                [("radar", &outcome.radar_supports), ("comms", &outcome.comms_supports)]
            {
                for (e, est) in ests.iter().enumerate() {
                    println!(
                        "{label} emitter {e}: {} supports {}",
                        est.supports.len(),
                        est.supports
                            .iter()
                            .map(|(t, v)| format!("({t:.4}, {v:.4})"))
                            .collect::<Vec<_>>()
                            .join(" ")
                    );
                }
            }
            if let Some(m) = &outcome.metrics {
                println!(
                    "scores: r_err={:.3e} c_err={:.3e} g_err={:.3e} success={}",
                    m.r_err, m.c_err, m.g_err, m.success
                );
            } else if let Some(err) = &outcome.recover_error {
                println!("recovery failed: {err}");
            }
            // solver success governs the exit code regardless of recovery
            match outcome.solution.status {
                SolverStatus::Optimal => Ok(ExitCode::SUCCESS),
                SolverStatus::MaxIters | SolverStatus::Infeasible => {
                    eprintln!("solver did not reach optimality: {:?}", outcome.solution.status);
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Localize { input, out, grid } => {
            let scen: Scenario =
                serde_json::from_reader(std::fs::File::open(input.join("scenario.json"))?)?;
            let art: SolutionArtifact =
                serde_json::from_reader(std::fs::File::open(input.join("solution.json"))?)?;
            let mut settings = dbd_core::localize::LocalizeSettings::default();
            if let Some(g) = grid {
                settings.grid = parse_grid(&g).map_err(as_config_error)?;
            }
            let (rs, cs, rg, cg) = relocalize(&scen, &art.q, &settings)?;
            std::fs::create_dir_all(&out)?;
            for (e, g) in rg.iter().enumerate() {
                let name =
                    if e == 0 { "poly_radar.csv".into() } else { format!("poly_radar_{e}.csv") };
                output::write_poly_csv(&out.join(name), g)?;
            }
            for (e, g) in cg.iter().enumerate() {
                let name =
                    if e == 0 { "poly_comms.csv".into() } else { format!("poly_comms_{e}.csv") };
                output::write_poly_csv(&out.join(name), g)?;
            }
            output::write_json(&out.join("supports.json"), &(rs, cs))?;
            println!("localization artifacts written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { common, jobs } => {
            let cfg = load_config(&common).map_err(as_config_error)?;
            if cfg.sweep.is_none() {
                return Err(as_config_error(anyhow::anyhow!("config has no sweep section")));
            }
            let jobs = jobs
                .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
                .unwrap_or(1);
            let (rows, aggregates) = run_sweep_to(&cfg, &common.out, jobs)?;
            let failures = rows.iter().filter(|r| !r.error.is_empty()).count();
            println!(
                "sweep complete: {} trials over {} cells ({failures} failed) -> {}",
                rows.len(),
                aggregates.len(),
                common.out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Schema { out } => {
            let doc = schema_document();
            let text = serde_json::to_string_pretty(&doc)?;
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => println!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
