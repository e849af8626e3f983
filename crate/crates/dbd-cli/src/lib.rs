//! Batch experiment runner for the dual-blind deconvolution pipeline:
//! config ingestion, single-shot solves, Monte-Carlo sweeps, and CSV/JSON
//! artifact emission.

pub mod config;
pub mod output;
pub mod runner;
pub mod sweep;

use std::path::Path;

use config::ExperimentConfig;
use runner::{RunOutcome, SolutionArtifact};

/// Write the artifact set of a single run into `out`.
///
/// Always writes `scenario.json` and `measurement.json`; after a solve also
/// `solution.json`, the polynomial surface CSVs, and (when recovery
/// produced anything) `estimate.json` + `metrics.json`.
pub fn write_run_artifacts(
    out: &Path,
    outcome: &RunOutcome,
    emit_residuals: bool,
    emit_problem: bool,
) -> anyhow::Result<()> {
    std::fs::create_dir_all(out)?;
    output::write_json(&out.join("scenario.json"), &outcome.scenario)?;
    output::write_json(&out.join("measurement.json"), &outcome.measurement)?;
    output::write_json(&out.join("solution.json"), &SolutionArtifact::from(&outcome.solution))?;
    if emit_problem {
        output::write_json(&out.join("problem.json"), &outcome.problem)?;
    }
    for (e, g) in outcome.radar_grids.iter().enumerate() {
        let name = if e == 0 { "poly_radar.csv".into() } else { format!("poly_radar_{e}.csv") };
        output::write_poly_csv(&out.join(name), g)?;
    }
    for (e, g) in outcome.comms_grids.iter().enumerate() {
        let name = if e == 0 { "poly_comms.csv".into() } else { format!("poly_comms_{e}.csv") };
        output::write_poly_csv(&out.join(name), g)?;
    }
    if emit_residuals {
        output::write_residuals_csv(&out.join("residuals.csv"), &outcome.solution.history)?;
    }
    if let Some(est) = &outcome.estimate {
        output::write_json(&out.join("estimate.json"), est)?;
    }
    if let Some(m) = &outcome.metrics {
        output::write_json(&out.join("metrics.json"), m)?;
    }
    Ok(())
}

/// Run a sweep and write `sweep.csv` + `sweep_aggregate.csv`.
pub fn run_sweep_to(
    config: &ExperimentConfig,
    out: &Path,
    jobs: usize,
) -> anyhow::Result<(Vec<sweep::TrialRow>, Vec<sweep::CellAggregate>)> {
    std::fs::create_dir_all(out)?;
    let rows = sweep::run_sweep(config, jobs)?;
    let trials = config.sweep.as_ref().map(|s| s.trials).unwrap_or(0);
    let aggregates = sweep::aggregate(&rows, trials);
    output::write_sweep_csv(&out.join("sweep.csv"), &rows)?;
    output::write_aggregate_csv(&out.join("sweep_aggregate.csv"), &aggregates)?;
    Ok((rows, aggregates))
}
