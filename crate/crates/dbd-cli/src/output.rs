//! Artifact writers. Every float is printed with 17 significant digits so
//! identical configs reproduce byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use dbd_core::localize::NormGrid;
use dbd_core::solver::ResidualSample;
use dbd_core::util::fmt_f64;

use crate::sweep::{CellAggregate, TrialRow};

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let file = File::create(path)
        .map_err(|e| anyhow::anyhow!("cannot create {}: {e}", path.display()))?;
    serde_json::to_writer(BufWriter::new(file), value)?;
    Ok(())
}

/// Dual-polynomial surface as `tau,nu,norm` rows.
pub fn write_poly_csv(path: &Path, grid: &NormGrid) -> anyhow::Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "tau,nu,norm")?;
    for i in 0..grid.gt {
        for k in 0..grid.gv {
            writeln!(
                w,
                "{},{},{}",
                fmt_f64(i as f64 / grid.gt as f64),
                fmt_f64(k as f64 / grid.gv as f64),
                fmt_f64(grid.at(i, k))
            )?;
        }
    }
    Ok(())
}

pub fn write_residuals_csv(path: &Path, history: &[ResidualSample]) -> anyhow::Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "iteration,primal,dual,gap")?;
    for s in history {
        writeln!(w, "{},{},{},{}", s.iter, fmt_f64(s.primal), fmt_f64(s.dual), fmt_f64(s.gap))?;
    }
    Ok(())
}

fn axis_columns(rows: &[TrialRow]) -> Vec<String> {
    rows.first().map(|r| r.cell.iter().map(|(n, _)| n.clone()).collect()).unwrap_or_default()
}

pub fn write_sweep_csv(path: &Path, rows: &[TrialRow]) -> anyhow::Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    let axes = axis_columns(rows);
    writeln!(
        w,
        "{}trial,seed,status,iterations,objective,duality_value,r_err,c_err,g_err,s_err,\
         radar_max_err,comms_max_err,r_tau_err,r_nu_err,c_tau_err,c_nu_err,z_err_radar,\
         z_err_comms,success,error",
        axes.iter().map(|a| format!("{a},")).collect::<String>()
    )?;
    for r in rows {
        let axis_vals: String = r.cell.iter().map(|(_, v)| format!("{v},")).collect();
        writeln!(
            w,
            "{axis_vals}{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.trial,
            r.seed,
            r.status,
            r.iterations,
            fmt_f64(r.objective),
            fmt_f64(r.duality_value),
            fmt_f64(r.r_err),
            fmt_f64(r.c_err),
            fmt_f64(r.g_err),
            fmt_f64(r.s_err),
            fmt_f64(r.radar_max_err),
            fmt_f64(r.comms_max_err),
            fmt_f64(r.r_tau_err),
            fmt_f64(r.r_nu_err),
            fmt_f64(r.c_tau_err),
            fmt_f64(r.c_nu_err),
            fmt_f64(r.z_err_radar),
            fmt_f64(r.z_err_comms),
            r.success,
            r.error.replace(',', ";"),
        )?;
    }
    Ok(())
}

pub fn write_aggregate_csv(path: &Path, aggregates: &[CellAggregate]) -> anyhow::Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    let axes: Vec<String> = aggregates
        .first()
        .map(|a| a.cell.iter().map(|(n, _)| n.clone()).collect())
        .unwrap_or_default();
    writeln!(
        w,
        "{}trials,solved,successes,success_rate,mean_r_err,mean_c_err,mean_g_err,\
         mean_r_tau_err,mean_r_nu_err,mean_z_err_radar,mean_z_err_comms",
        axes.iter().map(|a| format!("{a},")).collect::<String>()
    )?;
    for a in aggregates {
        let axis_vals: String = a.cell.iter().map(|(_, v)| format!("{v},")).collect();
        writeln!(
            w,
            "{axis_vals}{},{},{},{},{},{},{},{},{},{},{}",
            a.trials,
            a.solved,
            a.successes,
            fmt_f64(a.success_rate),
            fmt_f64(a.mean_r_err),
            fmt_f64(a.mean_c_err),
            fmt_f64(a.mean_g_err),
            fmt_f64(a.mean_r_tau_err),
            fmt_f64(a.mean_r_nu_err),
            fmt_f64(a.mean_z_err_radar),
            fmt_f64(a.mean_z_err_comms),
        )?;
    }
    Ok(())
}
