//! Support localization: dual-polynomial grid scan plus local refinement.
//!
//! Solved dual vectors put the norm of the corresponding polynomial at (or
//! numerically near) its peak level exactly on the delay-Doppler supports.
//! Candidates come from an 8-neighbor local-maximum scan of `||f||_2` on a
//! regular torus grid; each candidate is then refined by a damped Newton
//! ascent on the smooth squared norm, and near-duplicates are merged.

use serde::{Deserialize, Serialize};

use crate::kernels::{wrap_unit, wraparound_dist};
use crate::model::SampleGrid;
use crate::operators::{eval_poly_jet, poly_norm_grid, Basis, PolyKind};
use crate::util::C64;
use crate::{DbdError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalizeSettings {
    /// Scan grid (delay cells, Doppler cells).
    pub grid: (usize, usize),
    /// Accept local maxima with norm at least `(1 - eps_loc) * peak_level`.
    pub eps_loc: f64,
    /// Wrap-around merge radius; `None` picks `0.25 * min(1/M, 1/P)`.
    pub merge_radius: Option<f64>,
    pub refine_iters: usize,
    /// Expected peak level (1 for every variant except the lag-relaxed radar
    /// polynomial, whose bound is `rho`).
    pub peak_level: f64,
    /// Keep at most this many supports (highest peaks win). Noisy sweeps use
    /// the known model order here; the default keeps every thresholded peak.
    #[serde(default)]
    pub max_supports: Option<usize>,
}

impl Default for LocalizeSettings {
    fn default() -> Self {
        Self {
            grid: (256, 256),
            eps_loc: 1e-2,
            merge_radius: None,
            refine_iters: 50,
            peak_level: 1.0,
            max_supports: None,
        }
    }
}

/// Localized supports of one polynomial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportEstimate {
    pub supports: Vec<(f64, f64)>,
    pub peak_norms: Vec<f64>,
    pub kind: String,
}

/// `||f||_2` sampled on a regular grid of `[0,1)^2`, row-major in delay.
#[derive(Debug, Clone)]
pub struct NormGrid {
    pub values: Vec<f64>,
    pub gt: usize,
    pub gv: usize,
}

impl NormGrid {
    pub fn at(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.gv + k]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

/// Evaluate the polynomial norm surface.
pub fn grid_scan(
    q: &[C64],
    basis: Basis,
    sample_grid: &SampleGrid,
    gt: usize,
    gv: usize,
) -> Result<NormGrid> {
    let values = poly_norm_grid(q, basis, sample_grid, gt, gv)?;
    Ok(NormGrid { values, gt, gv })
}

/// Squared norm with gradient and Hessian at one point.
fn squared_norm_jet(
    q: &[C64],
    basis: Basis,
    sample_grid: &SampleGrid,
    tau: f64,
    nu: f64,
) -> Result<(f64, [f64; 2], [[f64; 2]; 2])> {
    let jet = eval_poly_jet(q, basis, sample_grid, tau, nu)?;
    let dotr =
        |a: &[C64], b: &[C64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum() };
    let h = dotr(&jet.f, &jet.f);
    let g = [2.0 * dotr(&jet.f, &jet.ft), 2.0 * dotr(&jet.f, &jet.fv)];
    let htt = 2.0 * (dotr(&jet.ft, &jet.ft) + dotr(&jet.f, &jet.ftt));
    let hvv = 2.0 * (dotr(&jet.fv, &jet.fv) + dotr(&jet.f, &jet.fvv));
    let htv = 2.0 * (dotr(&jet.ft, &jet.fv) + dotr(&jet.f, &jet.ftv));
    Ok((h, g, [[htt, htv], [htv, hvv]]))
}

/// Refine one candidate by damped Newton ascent on the squared norm.
/// Never decreases the value; stays on the torus.
fn refine(
    q: &[C64],
    basis: Basis,
    sample_grid: &SampleGrid,
    start: (f64, f64),
    iters: usize,
) -> Result<((f64, f64), f64)> {
    let mut point = start;
    let (mut val, mut grad, mut hess) = squared_norm_jet(q, basis, sample_grid, point.0, point.1)?;
    for _ in 0..iters {
        let gnorm = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
        if gnorm <= 1e-10 {
            break;
        }
        // Newton direction at a concave peak; fall back to scaled gradient
        // ascent when the Hessian is not negative definite.
        let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
        let mut dir = if hess[0][0] < 0.0 && det > 0.0 {
            [
                -(hess[1][1] * grad[0] - hess[0][1] * grad[1]) / det,
                -(-hess[1][0] * grad[0] + hess[0][0] * grad[1]) / det,
            ]
        } else {
            let scale = 1.0 / (1.0 + gnorm);
            [grad[0] * scale, grad[1] * scale]
        };
        if dir[0] * grad[0] + dir[1] * grad[1] <= 0.0 {
            let scale = 1.0 / (1.0 + gnorm);
            dir = [grad[0] * scale, grad[1] * scale];
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = (wrap_unit(point.0 + step * dir[0]), wrap_unit(point.1 + step * dir[1]));
            let (cv, cg, ch) = squared_norm_jet(q, basis, sample_grid, cand.0, cand.1)?;
            if cv > val {
                point = cand;
                val = cv;
                grad = cg;
                hess = ch;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok((point, val.max(0.0).sqrt()))
}

/// Locate supports: thresholded local maxima of the norm surface, refined to
/// stationarity and de-duplicated on the torus.
pub fn locate_supports(
    q: &[C64],
    basis: Basis,
    sample_grid: &SampleGrid,
    kind: PolyKind,
    settings: &LocalizeSettings,
) -> Result<SupportEstimate> {
    let (gt, gv) = settings.grid;
    if gt < 2 || gv < 2 {
        return Err(DbdError::Domain("localization grid must be at least 2x2".into()));
    }
    let grid = grid_scan(q, basis, sample_grid, gt, gv)?;
    let threshold = (1.0 - settings.eps_loc) * settings.peak_level;

    let mut candidates = Vec::new();
    for i in 0..gt {
        for k in 0..gv {
            let v = grid.at(i, k);
            if v < threshold {
                continue;
            }
            let mut is_max = true;
            'nb: for di in [-1i64, 0, 1] {
                for dk in [-1i64, 0, 1] {
                    if di == 0 && dk == 0 {
                        continue;
                    }
                    let ni = (i as i64 + di).rem_euclid(gt as i64) as usize;
                    let nk = (k as i64 + dk).rem_euclid(gv as i64) as usize;
                    if grid.at(ni, nk) > v {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                candidates.push((i as f64 / gt as f64, k as f64 / gv as f64));
            }
        }
    }

    let mut refined = Vec::with_capacity(candidates.len());
    for c in candidates {
        let (point, norm) = refine(q, basis, sample_grid, c, settings.refine_iters)?;
        if norm >= threshold {
            refined.push((point, norm));
        }
    }

    // merge duplicates, keeping the higher peak
    let merge_radius = settings.merge_radius.unwrap_or_else(|| {
        0.25 * (1.0 / sample_grid.m() as f64).min(1.0 / sample_grid.pulses() as f64)
    });
    refined.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut kept: Vec<((f64, f64), f64)> = Vec::new();
    for (p, n) in refined {
        let dup = kept.iter().any(|(kp, _)| {
            let dt = wraparound_dist(kp.0, p.0);
            let dv = wraparound_dist(kp.1, p.1);
            (dt * dt + dv * dv).sqrt() < merge_radius
        });
        if !dup {
            kept.push((p, n));
        }
    }
    if let Some(cap) = settings.max_supports {
        kept.truncate(cap);
    }
    kept.sort_by(|a, b| (a.0).0.total_cmp(&(b.0).0).then((a.0).1.total_cmp(&(b.0).1)));

    Ok(SupportEstimate {
        supports: kept.iter().map(|(p, _)| *p).collect(),
        peak_norms: kept.iter().map(|(_, n)| *n).collect(),
        kind: match kind {
            PolyKind::Radar => "radar".into(),
            PolyKind::Comms => "comms".into(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{draw_scenario, Dimensions, ScenarioSpec, SupportSpec, VariantSpec};
    use crate::util::cis;

    /// A dual vector whose radar polynomial is the 2-D Dirichlet product
    /// kernel centered at `r0`: with J = 1 and an all-ones basis,
    /// `f(r) = (1/MP) sum e^{j2pi(n(tau-tau0) + p(nu-nu0))}`, a clean peak of
    /// height exactly 1.
    fn dirichlet_q(dims: &Dimensions, r0: (f64, f64)) -> Vec<C64> {
        let grid = SampleGrid::new(dims, 1);
        grid.iter()
            .map(|s| cis(-(s.n as f64 * r0.0 + s.pulse as f64 * r0.1)) / grid.len() as f64)
            .collect()
    }

    fn j1_scenario(m: usize, p: usize) -> crate::model::Scenario {
        draw_scenario(&ScenarioSpec {
            dims: Dimensions::new(m, p, 1, 1, 1).unwrap(),
            variant: VariantSpec::Baseline,
            supports: SupportSpec::Random,
            seed: 1,
        })
        .unwrap()
    }

    #[test]
    fn zero_dual_vector_gives_empty_estimate() {
        let scen = j1_scenario(7, 5);
        let grid = scen.grid();
        let q = vec![C64::new(0.0, 0.0); grid.len()];
        let g = grid_scan(&q, Basis::radar(&scen.radar().b), &grid, 16, 16).unwrap();
        assert!(g.values.iter().all(|v| *v == 0.0));
        let est = locate_supports(
            &q,
            Basis::radar(&scen.radar().b),
            &grid,
            PolyKind::Radar,
            &LocalizeSettings { grid: (32, 32), ..Default::default() },
        )
        .unwrap();
        assert!(est.supports.is_empty());
    }

    #[test]
    fn dirichlet_peak_is_found_and_refined() {
        let scen = j1_scenario(9, 7);
        let grid = scen.grid();
        let r0 = (0.3717, 0.6123);
        let q = dirichlet_q(&scen.dims, r0);
        assert!(scen.radar().b.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-12));
        let est = locate_supports(
            &q,
            Basis::radar(&scen.radar().b),
            &grid,
            PolyKind::Radar,
            &LocalizeSettings { grid: (64, 64), ..Default::default() },
        )
        .unwrap();
        assert_eq!(est.supports.len(), 1, "supports: {:?}", est.supports);
        let (t, v) = est.supports[0];
        assert!(wraparound_dist(t, r0.0) < 1e-8, "tau {t}");
        assert!(wraparound_dist(v, r0.1) < 1e-8, "nu {v}");
        assert!((est.peak_norms[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn refinement_is_idempotent_and_non_decreasing() {
        let scen = j1_scenario(9, 7);
        let grid = scen.grid();
        let r0 = (0.123, 0.841);
        let q = dirichlet_q(&scen.dims, r0);
        let basis = Basis::radar(&scen.radar().b);
        let start = (0.12, 0.85);
        let (v0, _, _) = squared_norm_jet(&q, basis, &grid, start.0, start.1).unwrap();
        let (p1, n1) = refine(&q, basis, &grid, start, 50).unwrap();
        assert!(n1 * n1 >= v0 - 1e-15);
        let (p2, n2) = refine(&q, basis, &grid, p1, 50).unwrap();
        assert!(wraparound_dist(p1.0, p2.0) < 1e-12);
        assert!(wraparound_dist(p1.1, p2.1) < 1e-12);
        assert!((n1 - n2).abs() < 1e-12);
    }

    #[test]
    fn nearby_candidates_merge_to_one() {
        let scen = j1_scenario(9, 7);
        let grid = scen.grid();
        let q = dirichlet_q(&scen.dims, (0.5, 0.5));
        let est = locate_supports(
            &q,
            Basis::radar(&scen.radar().b),
            &grid,
            PolyKind::Radar,
            &LocalizeSettings { grid: (16, 16), eps_loc: 0.3, ..Default::default() },
        )
        .unwrap();
        assert_eq!(est.supports.len(), 1);
    }

    #[test]
    fn two_separated_peaks_both_found() {
        let scen = j1_scenario(11, 9);
        let grid = scen.grid();
        let r0 = (0.2, 0.3);
        let r1 = (0.7, 0.8);
        let q: Vec<C64> = dirichlet_q(&scen.dims, r0)
            .into_iter()
            .zip(dirichlet_q(&scen.dims, r1))
            .map(|(a, b)| a + b)
            .collect();
        let est = locate_supports(
            &q,
            Basis::radar(&scen.radar().b),
            &grid,
            PolyKind::Radar,
            &LocalizeSettings { grid: (64, 64), eps_loc: 0.1, ..Default::default() },
        )
        .unwrap();
        assert_eq!(est.supports.len(), 2, "{:?}", est.supports);
        for want in [r0, r1] {
            assert!(est.supports.iter().any(|(t, v)| {
                wraparound_dist(*t, want.0) < 1e-3 && wraparound_dist(*v, want.1) < 1e-3
            }));
        }
    }
}
