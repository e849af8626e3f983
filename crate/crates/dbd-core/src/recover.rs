//! Gain/waveform/message recovery from localized supports, and end-to-end
//! scoring against ground truth.
//!
//! With supports in hand the remaining unknowns enter linearly: stacking one
//! `J`-wide column block per radar support (steering-conjugated subspace
//! rows) and one `PJ`-wide block per comms path gives the design matrix
//! `W0 = [W_r, W_c]`, and `min_z ||y - W0 z||_2` recovers every
//! gain-scaled coefficient vector at once. Rank-one factorization of the
//! per-support blocks then splits gains from the shared waveform under a
//! canonical gauge (unit norm, first sizable entry real-positive).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::kernels::wraparound_dist;
use crate::localize::SupportEstimate;
use crate::model::Scenario;
use crate::operators::{lifted_comms, lifted_radar};
use crate::solver::{ConicSolution, SolverStatus};
use crate::util::{serde_cvec, C64};
use crate::{DbdError, Result};

/// Recovered parameters of one emitter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmitterEstimate {
    pub supports: Vec<(f64, f64)>,
    pub peak_norms: Vec<f64>,
    #[serde(with = "serde_cvec")]
    pub gains: Vec<C64>,
    /// Unit-norm coefficient vector (radar `u`, comms `v`) in canonical gauge.
    #[serde(with = "serde_cvec")]
    pub coeffs: Vec<C64>,
    /// Reconstructed signal: radar spectrum `s = B u` (length `M`) or
    /// concatenated messages `g = D v` (one entry per measurement sample).
    #[serde(with = "serde_cvec")]
    pub signal: Vec<C64>,
}

/// Full recovery output with diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Estimate {
    pub radars: Vec<EmitterEstimate>,
    pub comms: Vec<EmitterEstimate>,
    /// Least-squares residual `||y - W0 z||_2`.
    pub residual: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    pub solver_status: SolverStatus,
    pub solver_iterations: usize,
    pub objective: f64,
    /// `<q, y>` in the real inner product.
    pub duality_value: f64,
    /// Sup of the polynomial norms over the localization grids.
    pub cert_sup_radar: f64,
    pub cert_sup_comms: f64,
}

/// Stack the per-support column blocks of the least-squares design matrix.
///
/// Column order: radar emitters first (each support contributing its
/// emitter's subspace width), then comms emitters.
pub fn build_design_matrix(
    scen: &Scenario,
    radar_supports: &[SupportEstimate],
    comms_supports: &[SupportEstimate],
) -> Result<DMatrix<C64>> {
    let grid = scen.grid();
    if radar_supports.len() != scen.radars.len() || comms_supports.len() != scen.comms.len() {
        return Err(DbdError::Dimension("one support estimate per emitter required".into()));
    }
    let n_cols: usize = radar_supports
        .iter()
        .zip(&scen.radars)
        .map(|(s, r)| s.supports.len() * r.u.len())
        .sum::<usize>()
        + comms_supports
            .iter()
            .zip(&scen.comms)
            .map(|(s, c)| s.supports.len() * c.v.len())
            .sum::<usize>();
    if n_cols == 0 {
        return Err(DbdError::Degenerate("no supports to fit".into()));
    }
    let _ = n_cols;
    let mut w = DMatrix::from_element(grid.len(), n_cols, C64::new(0.0, 0.0));
    let mut col = 0;
    let m = grid.m();
    for (est, radar) in radar_supports.iter().zip(&scen.radars) {
        for &(tau, nu) in &est.supports {
            for s in grid.iter() {
                let phase = grid.atom_entry(&s, tau, nu).conj();
                for j in 0..radar.u.len() {
                    w[(s.ntilde, col + j)] = phase * radar.b[(s.ntilde % m, j)];
                }
            }
            col += radar.u.len();
        }
    }
    for (est, comms) in comms_supports.iter().zip(&scen.comms) {
        for &(tau, nu) in &est.supports {
            for s in grid.iter() {
                let phase = grid.atom_entry(&s, tau, nu).conj();
                for j in 0..comms.v.len() {
                    w[(s.ntilde, col + j)] = phase * comms.d[(s.ntilde, j)];
                }
            }
            col += comms.v.len();
        }
    }
    Ok(w)
}

/// Least-squares solve `min_z ||y - W0 z||` via column-pivoted QR, with a
/// condition check that names the closest support pair when the system is
/// numerically rank deficient.
pub fn solve_waveforms(
    y: &[C64],
    w0: &DMatrix<C64>,
    supports_for_blame: &[(f64, f64)],
) -> Result<(Vec<C64>, f64)> {
    if w0.nrows() != y.len() {
        return Err(DbdError::Dimension("design matrix row count mismatch".into()));
    }
    if w0.ncols() > w0.nrows() {
        return Err(DbdError::IllPosed(format!(
            "more unknowns ({}) than samples ({})",
            w0.ncols(),
            w0.nrows()
        )));
    }
    let ncols = w0.ncols();
    let (q, r, perm) = w0.clone().col_piv_qr().unpack();
    let diag: Vec<f64> = (0..ncols).map(|i| r[(i, i)].norm()).collect();
    let dmax = diag.iter().cloned().fold(0.0f64, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if dmax == 0.0 || dmax / dmin.max(1e-300) > 1e10 {
        let blame = closest_pair(supports_for_blame)
            .map(|(a, b, d)| {
                format!(" (closest support pair ({:.4},{:.4}) and ({:.4},{:.4}), distance {d:.2e})",
                    a.0, a.1, b.0, b.1)
            })
            .unwrap_or_default();
        return Err(DbdError::IllPosed(format!(
            "design matrix condition exceeds 1e10{blame}"
        )));
    }
    // thin-QR least squares: A P = Q R  =>  z = P R^{-1} Q^H y
    let rhs = DMatrix::from_fn(y.len(), 1, |i, _| y[i]);
    let mut zp = q.adjoint() * rhs;
    for i in (0..ncols).rev() {
        let mut acc = zp[(i, 0)];
        for k in (i + 1)..ncols {
            acc -= r[(i, k)] * zp[(k, 0)];
        }
        zp[(i, 0)] = acc / r[(i, i)];
    }
    perm.inv_permute_rows(&mut zp);
    let z: Vec<C64> = (0..ncols).map(|i| zp[(i, 0)]).collect();
    let mut res2 = 0.0;
    for r in 0..y.len() {
        let mut acc = C64::new(0.0, 0.0);
        for c in 0..w0.ncols() {
            acc += w0[(r, c)] * z[c];
        }
        res2 += (y[r] - acc).norm_sqr();
    }
    Ok((z, res2.sqrt()))
}

fn closest_pair(supports: &[(f64, f64)]) -> Option<((f64, f64), (f64, f64), f64)> {
    let mut best: Option<((f64, f64), (f64, f64), f64)> = None;
    for i in 0..supports.len() {
        for j in (i + 1)..supports.len() {
            let dt = wraparound_dist(supports[i].0, supports[j].0);
            let dv = wraparound_dist(supports[i].1, supports[j].1);
            let d = (dt * dt + dv * dv).sqrt();
            if best.map_or(true, |(_, _, bd)| d < bd) {
                best = Some((supports[i], supports[j], d));
            }
        }
    }
    best
}

/// Canonical gauge: unit norm with the first entry of magnitude within
/// 1e-6 of the maximum rotated to be real-positive.
fn gauge_fix(v: &mut [C64]) -> Result<C64> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(DbdError::Degenerate("all-zero coefficient block".into()));
    }
    let vmax = v.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let anchor = v
        .iter()
        .find(|z| z.norm() >= 1e-6 * vmax)
        .copied()
        .unwrap_or(C64::new(1.0, 0.0));
    let rot = (anchor / anchor.norm()).conj() / norm;
    for z in v.iter_mut() {
        *z *= rot;
    }
    // returns the factor that maps gauged coefficients back to raw ones
    Ok(C64::new(1.0, 0.0) / rot)
}

/// Split stacked per-support blocks `z_l ~ gain_l * coeff` into gains and a
/// shared unit-norm coefficient vector (dominant left singular vector).
fn factor_blocks(blocks: &[Vec<C64>]) -> Result<(Vec<C64>, Vec<C64>)> {
    let width = blocks.first().map_or(0, Vec::len);
    if width == 0 {
        return Ok((vec![], vec![]));
    }
    let stack = DMatrix::from_fn(width, blocks.len(), |r, c| blocks[c][r]);
    let svd = stack.clone().svd(true, false);
    let u = svd.u.as_ref().ok_or_else(|| DbdError::Degenerate("SVD failed".into()))?;
    if svd.singular_values[0] <= 0.0 {
        return Err(DbdError::Degenerate("all-zero coefficient block".into()));
    }
    let mut coeff: Vec<C64> = (0..width).map(|r| u[(r, 0)]).collect();
    gauge_fix(&mut coeff)?;
    let gains: Vec<C64> = blocks
        .iter()
        .map(|b| coeff.iter().zip(b).map(|(c, z)| c.conj() * z).sum())
        .collect();
    Ok((gains, coeff))
}

/// Partition the least-squares solution, factor each emitter's blocks, and
/// reconstruct signals.
pub fn factor_estimate(
    scen: &Scenario,
    radar_supports: &[SupportEstimate],
    comms_supports: &[SupportEstimate],
    z: &[C64],
    residual: f64,
    diagnostics: Diagnostics,
) -> Result<Estimate> {
    let mut offset = 0usize;
    let mut radars = Vec::new();
    for (est, radar) in radar_supports.iter().zip(&scen.radars) {
        let width = radar.u.len();
        let blocks: Vec<Vec<C64>> = (0..est.supports.len())
            .map(|l| z[offset + l * width..offset + (l + 1) * width].to_vec())
            .collect();
        offset += est.supports.len() * width;
        let (gains, coeffs) = factor_blocks(&blocks)?;
        let signal = if coeffs.is_empty() {
            vec![]
        } else {
            (0..scen.dims.m())
                .map(|r| (0..width).map(|j| radar.b[(r, j)] * coeffs[j]).sum())
                .collect()
        };
        radars.push(EmitterEstimate {
            supports: est.supports.clone(),
            peak_norms: est.peak_norms.clone(),
            gains,
            coeffs,
            signal,
        });
    }
    let mut comms = Vec::new();
    for (est, ce) in comms_supports.iter().zip(&scen.comms) {
        let width = ce.v.len();
        let blocks: Vec<Vec<C64>> = (0..est.supports.len())
            .map(|l| z[offset + l * width..offset + (l + 1) * width].to_vec())
            .collect();
        offset += est.supports.len() * width;
        let (gains, coeffs) = factor_blocks(&blocks)?;
        let signal = if coeffs.is_empty() {
            vec![]
        } else {
            (0..scen.len_y())
                .map(|r| (0..width).map(|j| ce.d[(r, j)] * coeffs[j]).sum())
                .collect()
        };
        comms.push(EmitterEstimate {
            supports: est.supports.clone(),
            peak_norms: est.peak_norms.clone(),
            gains,
            coeffs,
            signal,
        });
    }
    Ok(Estimate { radars, comms, residual, diagnostics })
}

/// Convenience: run the least-squares stage end to end.
pub fn recover(
    scen: &Scenario,
    meas_y: &[C64],
    radar_supports: &[SupportEstimate],
    comms_supports: &[SupportEstimate],
    sol: &ConicSolution,
    cert_sup_radar: f64,
    cert_sup_comms: f64,
) -> Result<Estimate> {
    let total: usize = radar_supports
        .iter()
        .chain(comms_supports)
        .map(|e| e.supports.len())
        .sum();
    if total == 0 {
        // nothing localized: a valid (vacuously unsuccessful) estimate
        let qy: f64 = sol.q.iter().zip(meas_y).map(|(q, y)| (q * y.conj()).re).sum();
        let empty = |est: &SupportEstimate| EmitterEstimate {
            supports: est.supports.clone(),
            peak_norms: est.peak_norms.clone(),
            gains: vec![],
            coeffs: vec![],
            signal: vec![],
        };
        return Ok(Estimate {
            radars: radar_supports.iter().map(empty).collect(),
            comms: comms_supports.iter().map(empty).collect(),
            residual: meas_y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
            diagnostics: Diagnostics {
                solver_status: sol.status,
                solver_iterations: sol.iterations,
                objective: sol.objective,
                duality_value: qy,
                cert_sup_radar,
                cert_sup_comms,
            },
        });
    }
    let w0 = build_design_matrix(scen, radar_supports, comms_supports)?;
    let mut blame: Vec<(f64, f64)> = Vec::new();
    for e in radar_supports.iter().chain(comms_supports) {
        blame.extend(&e.supports);
    }
    let (z, residual) = solve_waveforms(meas_y, &w0, &blame)?;
    let qy: f64 = sol.q.iter().zip(meas_y).map(|(q, y)| (q * y.conj()).re).sum();
    factor_estimate(
        scen,
        radar_supports,
        comms_supports,
        &z,
        residual,
        Diagnostics {
            solver_status: sol.status,
            solver_iterations: sol.iterations,
            objective: sol.objective,
            duality_value: qy,
            cert_sup_radar,
            cert_sup_comms,
        },
    )
}

/// Minimum-cost assignment (Hungarian algorithm, shortest augmenting paths).
/// Returns `assign[row] = col` minimizing the total cost of a perfect
/// matching on the square cost matrix.
pub fn hungarian(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols());
    if n == 0 {
        return vec![];
    }
    // potentials and matching over a (1-indexed) internal layout
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1]; // p[col] = row matched to col; p[0] = current row
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Match estimated supports to truth by minimum-cost assignment under the
/// wrap-around Euclidean metric. Returns matched index pairs (est, truth)
/// and their distances; unmatched entries are dropped.
pub fn match_supports(
    estimated: &[(f64, f64)],
    truth: &[(f64, f64)],
) -> Vec<(usize, usize, f64)> {
    let m = estimated.len();
    let n = truth.len();
    let k = m.max(n);
    if k == 0 {
        return vec![];
    }
    const PAD: f64 = 1e3;
    let cost = DMatrix::from_fn(k, k, |i, j| {
        if i < m && j < n {
            let dt = wraparound_dist(estimated[i].0, truth[j].0);
            let dv = wraparound_dist(estimated[i].1, truth[j].1);
            (dt * dt + dv * dv).sqrt()
        } else {
            PAD
        }
    });
    let assign = hungarian(&cost);
    let mut out = Vec::new();
    for (i, &j) in assign.iter().enumerate() {
        if i < m && j < n {
            out.push((i, j, cost[(i, j)]));
        }
    }
    out.sort_by_key(|(i, _, _)| *i);
    out
}

/// Per-emitter support scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportScore {
    pub matched: Vec<(usize, usize, f64)>,
    pub cardinality_ok: bool,
    /// Stacked l2 error over matched pairs.
    pub stacked_err: f64,
    /// Largest matched pair distance.
    pub max_err: f64,
}

#[derive(Default)]
struct AxisErrors {
    tau_sum: f64,
    nu_sum: f64,
    count: usize,
}

impl AxisErrors {
    fn accumulate(&mut self, matched: &[(usize, usize, f64)], est: &[(f64, f64)], truth: &[(f64, f64)]) {
        for &(i, j, _) in matched {
            self.tau_sum += wraparound_dist(est[i].0, truth[j].0);
            self.nu_sum += wraparound_dist(est[i].1, truth[j].1);
            self.count += 1;
        }
    }

    fn mean_tau(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.tau_sum / self.count as f64
        }
    }

    fn mean_nu(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.nu_sum / self.count as f64
        }
    }
}

fn score_supports(est: &[(f64, f64)], truth: &[(f64, f64)]) -> SupportScore {
    let matched = match_supports(est, truth);
    let stacked_err = matched.iter().map(|(_, _, d)| d * d).sum::<f64>().sqrt();
    let max_err = matched.iter().map(|(_, _, d)| *d).fold(0.0f64, f64::max);
    SupportScore { cardinality_ok: est.len() == truth.len(), matched, stacked_err, max_err }
}

/// Relative error after the optimal complex-scale alignment
/// `min_c ||truth - c est|| / ||truth||`, plus the absolute form.
fn aligned_error(truth: &[C64], est: &[C64]) -> (f64, f64) {
    let t2: f64 = truth.iter().map(|z| z.norm_sqr()).sum();
    let e2: f64 = est.iter().map(|z| z.norm_sqr()).sum();
    if e2 == 0.0 {
        return (t2.sqrt(), 1.0);
    }
    let dot: C64 = est.iter().zip(truth).map(|(e, t)| e.conj() * t).sum();
    let c = dot / e2;
    let err2: f64 = truth
        .iter()
        .zip(est)
        .map(|(t, e)| (t - c * e).norm_sqr())
        .sum();
    let abs = err2.max(0.0).sqrt();
    (abs, if t2 > 0.0 { abs / t2.sqrt() } else { abs })
}

/// End-to-end metrics against the ground-truth scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    pub radar_supports: Vec<SupportScore>,
    pub comms_supports: Vec<SupportScore>,
    /// Stacked radar support error over all emitters (the paper-style `r`).
    pub r_err: f64,
    /// Stacked comms support error over all emitters.
    pub c_err: f64,
    /// Mean matched radar delay / Doppler errors (wrap-around, all emitters).
    pub r_tau_err: f64,
    pub r_nu_err: f64,
    /// Mean matched comms delay / Doppler errors.
    pub c_tau_err: f64,
    pub c_nu_err: f64,
    /// Message error `||g - c g_hat||` after scale alignment (primary comms
    /// emitter; per-emitter list alongside).
    pub g_err: f64,
    pub g_errs: Vec<f64>,
    /// Radar spectrum error after scale alignment (primary emitter).
    pub s_err: f64,
    pub s_errs: Vec<f64>,
    /// Waveform-channel matrix relative errors (used by the unequal-PRI
    /// variant's reporting).
    pub z_err_radar: f64,
    pub z_err_comms: f64,
    pub success: bool,
    pub duality_value: f64,
    pub duality_gap_to_model: f64,
}

/// Score an estimate against the scenario that generated the measurement.
pub fn score(estimate: &Estimate, scen: &Scenario) -> Metrics {
    let mut radar_scores = Vec::new();
    let mut r_err2 = 0.0;
    let mut cards_ok = true;
    let mut r_axis = AxisErrors::default();
    for (est, truth) in estimate.radars.iter().zip(&scen.radars) {
        let truth_supports = truth.channel.supports();
        let sc = score_supports(&est.supports, &truth_supports);
        cards_ok &= sc.cardinality_ok;
        r_err2 += sc.stacked_err * sc.stacked_err;
        r_axis.accumulate(&sc.matched, &est.supports, &truth_supports);
        radar_scores.push(sc);
    }
    let mut comms_scores = Vec::new();
    let mut c_err2 = 0.0;
    let mut c_axis = AxisErrors::default();
    for (est, truth) in estimate.comms.iter().zip(&scen.comms) {
        let truth_supports = truth.channel.supports();
        let sc = score_supports(&est.supports, &truth_supports);
        cards_ok &= sc.cardinality_ok;
        c_err2 += sc.stacked_err * sc.stacked_err;
        c_axis.accumulate(&sc.matched, &est.supports, &truth_supports);
        comms_scores.push(sc);
    }

    // message error: truth g = D v
    let mut g_errs = Vec::new();
    for (est, ce) in estimate.comms.iter().zip(&scen.comms) {
        let truth_g: Vec<C64> = (0..scen.len_y())
            .map(|r| (0..ce.v.len()).map(|j| ce.d[(r, j)] * ce.v[j]).sum())
            .collect();
        let (abs, _) = aligned_error(&truth_g, &est.signal);
        g_errs.push(abs);
    }
    let mut s_errs = Vec::new();
    for (est, re) in estimate.radars.iter().zip(&scen.radars) {
        let truth_s: Vec<C64> = (0..scen.dims.m())
            .map(|r| (0..re.u.len()).map(|j| re.b[(r, j)] * re.u[j]).sum())
            .collect();
        let (abs, _) = aligned_error(&truth_s, &est.signal);
        s_errs.push(abs);
    }

    // waveform-channel matrix errors for the primary emitters
    let (z_err_radar, z_err_comms) = {
        let zr_true = lifted_radar(scen);
        let zc_true = lifted_comms(scen);
        let grid = scen.grid();
        let zr_err = if estimate.radars[0].coeffs.is_empty() {
            1.0
        } else {
            let mut h = vec![C64::new(0.0, 0.0); grid.len()];
            for (g, &(t, v)) in
                estimate.radars[0].gains.iter().zip(&estimate.radars[0].supports)
            {
                for s in grid.iter() {
                    h[s.ntilde] += g.conj() * grid.atom_entry(&s, t, v);
                }
            }
            let u = &estimate.radars[0].coeffs;
            let mut num = 0.0;
            let mut den = 0.0;
            for r in 0..u.len() {
                for c in 0..grid.len() {
                    let z_est = u[r] * h[c].conj();
                    num += (z_est - zr_true[(r, c)]).norm_sqr();
                    den += zr_true[(r, c)].norm_sqr();
                }
            }
            (num / den.max(1e-300)).sqrt()
        };
        let zc_err = if estimate.comms[0].coeffs.is_empty() {
            1.0
        } else {
            let mut h = vec![C64::new(0.0, 0.0); grid.len()];
            for (g, &(t, v)) in estimate.comms[0].gains.iter().zip(&estimate.comms[0].supports) {
                for s in grid.iter() {
                    h[s.ntilde] += g.conj() * grid.atom_entry(&s, t, v);
                }
            }
            let v = &estimate.comms[0].coeffs;
            let mut num = 0.0;
            let mut den = 0.0;
            for r in 0..v.len() {
                for c in 0..grid.len() {
                    let z_est = v[r] * h[c].conj();
                    num += (z_est - zc_true[(r, c)]).norm_sqr();
                    den += zc_true[(r, c)].norm_sqr();
                }
            }
            (num / den.max(1e-300)).sqrt()
        };
        (zr_err, zc_err)
    };

    let r_err = r_err2.sqrt();
    let g_err = g_errs.first().copied().unwrap_or(0.0);
    let total_atoms: usize =
        scen.radars.iter().map(|r| r.channel.len()).sum::<usize>()
            + scen.comms.iter().map(|c| c.channel.len()).sum::<usize>();
    let duality_gap_to_model = (estimate.diagnostics.duality_value - total_atoms as f64).abs();
    let success = cards_ok && r_err < 1e-3 && g_err < 1e-3;
    Metrics {
        radar_supports: radar_scores,
        comms_supports: comms_scores,
        r_err,
        c_err: c_err2.sqrt(),
        r_tau_err: r_axis.mean_tau(),
        r_nu_err: r_axis.mean_nu(),
        c_tau_err: c_axis.mean_tau(),
        c_nu_err: c_axis.mean_nu(),
        g_err,
        g_errs,
        s_err: s_errs.first().copied().unwrap_or(0.0),
        s_errs,
        z_err_radar,
        z_err_comms,
        success,
        duality_value: estimate.diagnostics.duality_value,
        duality_gap_to_model,
    }
}
