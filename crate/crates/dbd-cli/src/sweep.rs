//! Monte-Carlo sweep engine: cartesian product of axes, independent seeded
//! trials on a bounded worker pool, crash isolation per trial.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use dbd_core::model::{ScenarioSpec, VariantSpec};
use dbd_core::util::derive_seed;

use crate::config::{ExperimentConfig, SweepAxis, SweepConfig};
use crate::runner::run_instance_with;

/// One row of `sweep.csv`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TrialRow {
    pub cell_index: usize,
    /// (axis name, value) pairs identifying the cell.
    pub cell: Vec<(String, String)>,
    pub trial: usize,
    pub seed: u64,
    pub status: String,
    pub iterations: usize,
    pub objective: f64,
    pub duality_value: f64,
    pub r_err: f64,
    pub c_err: f64,
    pub g_err: f64,
    pub s_err: f64,
    pub radar_max_err: f64,
    pub comms_max_err: f64,
    pub r_tau_err: f64,
    pub r_nu_err: f64,
    pub c_tau_err: f64,
    pub c_nu_err: f64,
    pub z_err_radar: f64,
    pub z_err_comms: f64,
    pub success: bool,
    pub error: String,
}

/// One row of `sweep_aggregate.csv` (per cell).
#[derive(Debug, Clone, serde::Serialize)]
pub struct CellAggregate {
    pub cell_index: usize,
    pub cell: Vec<(String, String)>,
    pub trials: usize,
    pub solved: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_r_err: f64,
    pub mean_c_err: f64,
    pub mean_g_err: f64,
    pub mean_r_tau_err: f64,
    pub mean_r_nu_err: f64,
    pub mean_z_err_radar: f64,
    pub mean_z_err_comms: f64,
}

/// Apply one axis value to the scenario spec.
fn apply_axis(spec: &mut ScenarioSpec, axis: &SweepAxis, idx: usize) -> anyhow::Result<()> {
    match axis {
        SweepAxis::LEqualsQ { values } => {
            let v = values[idx];
            spec.dims = dbd_core::model::Dimensions::new(
                spec.dims.m(),
                spec.dims.p(),
                spec.dims.j(),
                v,
                v,
            )?;
        }
        SweepAxis::J { values } => {
            spec.dims = dbd_core::model::Dimensions::new(
                spec.dims.m(),
                spec.dims.p(),
                values[idx],
                spec.dims.l(),
                spec.dims.q(),
            )?;
        }
        SweepAxis::M { values } => {
            spec.dims = dbd_core::model::Dimensions::new(
                values[idx],
                spec.dims.p(),
                spec.dims.j(),
                spec.dims.l(),
                spec.dims.q(),
            )?;
        }
        SweepAxis::SnrDb { values } => {
            spec.variant = VariantSpec::Noisy { snr_db: values[idx] };
        }
        SweepAxis::TauE { values } => {
            let rho = match spec.variant {
                VariantSpec::Unsync { rho, .. } => rho,
                _ => 1.0,
            };
            spec.variant = VariantSpec::Unsync { tau_e: values[idx], rho };
        }
        SweepAxis::PTilde { values } => {
            spec.variant = VariantSpec::UnequalPri { p_tilde: values[idx] };
        }
    }
    Ok(())
}

fn cell_label(axes: &[SweepAxis], multi_index: &[usize]) -> Vec<(String, String)> {
    axes.iter()
        .zip(multi_index)
        .map(|(a, &i)| (a.name().to_string(), a.value_string(i)))
        .collect()
}

fn unrank(mut idx: usize, axes: &[SweepAxis]) -> Vec<usize> {
    // row-major over the axis list: the last axis varies fastest
    let mut multi = vec![0usize; axes.len()];
    for (k, axis) in axes.iter().enumerate().rev() {
        multi[k] = idx % axis.len();
        idx /= axis.len();
    }
    multi
}

/// Run the sweep on `jobs` worker threads. Trials are fully independent:
/// each derives its own seed from the master seed, so results are identical
/// regardless of scheduling; a failing trial is recorded and skipped.
pub fn run_sweep(config: &ExperimentConfig, jobs: usize) -> anyhow::Result<Vec<TrialRow>> {
    let sweep: &SweepConfig =
        config.sweep.as_ref().ok_or_else(|| anyhow::anyhow!("config has no sweep section"))?;
    let cells: usize = sweep.axes.iter().map(SweepAxis::len).product();
    let total = cells * sweep.trials;
    let jobs = jobs.max(1);

    let next = AtomicUsize::new(0);
    let rows: Mutex<Vec<Option<TrialRow>>> = Mutex::new(vec![None; total]);

    std::thread::scope(|scope| {
        for _ in 0..jobs.min(total.max(1)) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= total {
                    break;
                }
                let cell_index = k / sweep.trials;
                let trial = k % sweep.trials;
                let multi = unrank(cell_index, &sweep.axes);
                let cell = cell_label(&sweep.axes, &multi);
                let seed = derive_seed(config.seed, "sweep-trial", k as u64);

                let row = run_trial(config, sweep, &multi, cell_index, trial, seed, cell);
                rows.lock().unwrap()[k] = Some(row);
            });
        }
    });

    Ok(rows.into_inner().unwrap().into_iter().map(Option::unwrap).collect())
}

fn run_trial(
    config: &ExperimentConfig,
    sweep: &SweepConfig,
    multi_index: &[usize],
    cell_index: usize,
    trial: usize,
    seed: u64,
    cell: Vec<(String, String)>,
) -> TrialRow {
    let mut row = TrialRow {
        cell_index,
        cell,
        trial,
        seed,
        status: "error".into(),
        iterations: 0,
        objective: f64::NAN,
        duality_value: f64::NAN,
        r_err: f64::NAN,
        c_err: f64::NAN,
        g_err: f64::NAN,
        s_err: f64::NAN,
        radar_max_err: f64::NAN,
        comms_max_err: f64::NAN,
        r_tau_err: f64::NAN,
        r_nu_err: f64::NAN,
        c_tau_err: f64::NAN,
        c_nu_err: f64::NAN,
        z_err_radar: f64::NAN,
        z_err_comms: f64::NAN,
        success: false,
        error: String::new(),
    };

    let outcome = catch_unwind(AssertUnwindSafe(|| -> anyhow::Result<_> {
        let mut spec = config.scenario_spec()?;
        for (axis, &i) in sweep.axes.iter().zip(multi_index) {
            apply_axis(&mut spec, axis, i)?;
        }
        spec.seed = seed;
        run_instance_with(
            &spec,
            &config.solver,
            &config.localize,
            config.mu,
            config.cap_to_model_order,
        )
    }));

    match outcome {
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().map(Clone::clone))
                .unwrap_or_else(|| "panic".into());
            row.error = format!("panic: {msg}");
        }
        Ok(Err(e)) => {
            row.error = e.to_string();
        }
        Ok(Ok(out)) => {
            row.status = format!("{:?}", out.solution.status).to_lowercase();
            row.iterations = out.solution.iterations;
            row.objective = out.solution.objective;
            if let Some(m) = &out.metrics {
                row.duality_value = m.duality_value;
                row.r_err = m.r_err;
                row.c_err = m.c_err;
                row.g_err = m.g_err;
                row.s_err = m.s_err;
                row.radar_max_err =
                    m.radar_supports.iter().map(|s| s.max_err).fold(0.0, f64::max);
                row.comms_max_err =
                    m.comms_supports.iter().map(|s| s.max_err).fold(0.0, f64::max);
                row.r_tau_err = m.r_tau_err;
                row.r_nu_err = m.r_nu_err;
                row.c_tau_err = m.c_tau_err;
                row.c_nu_err = m.c_nu_err;
                row.z_err_radar = m.z_err_radar;
                row.z_err_comms = m.z_err_comms;
                row.success = m.success;
            } else if let Some(e) = &out.recover_error {
                row.error = e.clone();
            }
        }
    }
    row
}

/// Aggregate per-trial rows into per-cell statistics. Means are taken over
/// trials with a usable estimate; errored trials count against the success
/// rate only.
pub fn aggregate(rows: &[TrialRow], trials: usize) -> Vec<CellAggregate> {
    let mut cells: Vec<Vec<&TrialRow>> = Vec::new();
    for row in rows {
        if row.cell_index >= cells.len() {
            cells.resize_with(row.cell_index + 1, Vec::new);
        }
        cells[row.cell_index].push(row);
    }
    cells
        .iter()
        .enumerate()
        .map(|(cell_index, cell_rows)| {
            let solved: Vec<&&TrialRow> =
                cell_rows.iter().filter(|r| r.error.is_empty() && r.r_err.is_finite()).collect();
            let successes = cell_rows.iter().filter(|r| r.success).count();
            let mean = |f: fn(&TrialRow) -> f64| -> f64 {
                if solved.is_empty() {
                    f64::NAN
                } else {
                    solved.iter().map(|r| f(r)).sum::<f64>() / solved.len() as f64
                }
            };
            CellAggregate {
                cell_index,
                cell: cell_rows.first().map(|r| r.cell.clone()).unwrap_or_default(),
                trials,
                solved: solved.len(),
                successes,
                success_rate: successes as f64 / trials.max(1) as f64,
                mean_r_err: mean(|r| r.r_err),
                mean_c_err: mean(|r| r.c_err),
                mean_g_err: mean(|r| r.g_err),
                mean_r_tau_err: mean(|r| r.r_tau_err),
                mean_r_nu_err: mean(|r| r.r_nu_err),
                mean_z_err_radar: mean(|r| r.z_err_radar),
                mean_z_err_comms: mean(|r| r.z_err_comms),
            }
        })
        .collect()
}
