//! Lifted linear measurement maps, their adjoints, and evaluation of the
//! vector-valued dual polynomials.
//!
//! With `G_n = e_n b_n^H` and `A_n = e_n d_n^H`, the forward maps send the
//! waveform-channel matrices `Z_r = u h_r^H` and `Z_c = v h_c^H` to the
//! measurement, entry by entry: `[F_r(Z)]_n = Tr(G_n Z) = b_n^H Z e_n`. The
//! adjoints stack the dual vector against the subspace rows, and contracting
//! an adjoint against a steering atom gives the closed-form exponential sums
//! used everywhere downstream:
//!
//! `f_r(tau, nu) = sum_n q_n e^{j2pi(n tau + p nu)} b_n`  (length `J`),
//! `f_c(tau, nu) = sum_n q_n e^{j2pi(n tau + p nu)} d_n`  (length `PJ`).

use nalgebra::DMatrix;

use crate::model::{ChannelParams, SampleGrid, Scenario};
use crate::util::{cis, C64};
use crate::{DbdError, Result};

/// Which dual polynomial / lifted map a call refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyKind {
    Radar,
    Comms,
}

/// A subspace basis paired with its row-indexing rule.
///
/// Radar rows depend only on the frequency sample (`M` rows reused across
/// pulses); communications rows are per measurement sample.
#[derive(Debug, Clone, Copy)]
pub struct Basis<'a> {
    mat: &'a DMatrix<C64>,
    kind: PolyKind,
}

impl<'a> Basis<'a> {
    pub fn radar(mat: &'a DMatrix<C64>) -> Self {
        Self { mat, kind: PolyKind::Radar }
    }

    pub fn comms(mat: &'a DMatrix<C64>) -> Self {
        Self { mat, kind: PolyKind::Comms }
    }

    pub fn width(&self) -> usize {
        self.mat.ncols()
    }

    #[inline]
    fn row_index(&self, grid: &SampleGrid, ntilde: usize) -> usize {
        match self.kind {
            PolyKind::Radar => ntilde % grid.m(),
            PolyKind::Comms => ntilde,
        }
    }

    #[inline]
    pub fn entry(&self, grid: &SampleGrid, ntilde: usize, col: usize) -> C64 {
        self.mat[(self.row_index(grid, ntilde), col)]
    }

    fn check(&self, grid: &SampleGrid) -> Result<()> {
        let want_rows = match self.kind {
            PolyKind::Radar => grid.m(),
            PolyKind::Comms => grid.len(),
        };
        if self.mat.nrows() != want_rows {
            return Err(DbdError::Dimension(format!(
                "basis has {} rows, geometry needs {want_rows}",
                self.mat.nrows()
            )));
        }
        Ok(())
    }
}

/// Forward map: `[F(Z)]_n = row_n^H Z e_n` for `Z` of shape `width x len`.
pub fn forward(z: &DMatrix<C64>, basis: Basis, grid: &SampleGrid) -> Result<Vec<C64>> {
    basis.check(grid)?;
    if z.nrows() != basis.width() || z.ncols() != grid.len() {
        return Err(DbdError::Dimension(format!(
            "lifted matrix must be {}x{}, got {}x{}",
            basis.width(),
            grid.len(),
            z.nrows(),
            z.ncols()
        )));
    }
    Ok((0..grid.len())
        .map(|nt| (0..z.nrows()).map(|j| basis.entry(grid, nt, j) * z[(j, nt)]).sum())
        .collect())
}

pub fn forward_radar(z: &DMatrix<C64>, b: &DMatrix<C64>, grid: &SampleGrid) -> Result<Vec<C64>> {
    forward(z, Basis::radar(b), grid)
}

pub fn forward_comms(z: &DMatrix<C64>, d: &DMatrix<C64>, grid: &SampleGrid) -> Result<Vec<C64>> {
    forward(z, Basis::comms(d), grid)
}

/// Adjoint map under the real inner product `<A,B> = Re Tr(B^H A)`:
/// column `n` of the result is `q_n` times the conjugated basis row.
pub fn adjoint(q: &[C64], basis: Basis, grid: &SampleGrid) -> Result<DMatrix<C64>> {
    basis.check(grid)?;
    if q.len() != grid.len() {
        return Err(DbdError::Dimension(format!(
            "dual vector must have length {}, got {}",
            grid.len(),
            q.len()
        )));
    }
    Ok(DMatrix::from_fn(basis.width(), grid.len(), |j, nt| {
        q[nt] * basis.entry(grid, nt, j).conj()
    }))
}

pub fn adjoint_radar(q: &[C64], b: &DMatrix<C64>, grid: &SampleGrid) -> Result<DMatrix<C64>> {
    adjoint(q, Basis::radar(b), grid)
}

pub fn adjoint_comms(q: &[C64], d: &DMatrix<C64>, grid: &SampleGrid) -> Result<DMatrix<C64>> {
    adjoint(q, Basis::comms(d), grid)
}

/// Evaluate the dual polynomial at one point.
pub fn eval_poly(q: &[C64], basis: Basis, grid: &SampleGrid, tau: f64, nu: f64) -> Result<Vec<C64>> {
    basis.check(grid)?;
    if q.len() != grid.len() {
        return Err(DbdError::Dimension("dual vector length mismatch".into()));
    }
    let mut f = vec![C64::new(0.0, 0.0); basis.width()];
    for s in grid.iter() {
        let w = q[s.ntilde] * grid.atom_entry(&s, tau, nu);
        for (j, fj) in f.iter_mut().enumerate() {
            *fj += w * basis.entry(grid, s.ntilde, j).conj();
        }
    }
    Ok(f)
}

pub fn eval_poly_r(q: &[C64], b: &DMatrix<C64>, grid: &SampleGrid, tau: f64, nu: f64) -> Result<Vec<C64>> {
    eval_poly(q, Basis::radar(b), grid, tau, nu)
}

pub fn eval_poly_c(q: &[C64], d: &DMatrix<C64>, grid: &SampleGrid, tau: f64, nu: f64) -> Result<Vec<C64>> {
    eval_poly(q, Basis::comms(d), grid, tau, nu)
}

/// Polynomial value with first and second partial derivatives at one point;
/// feeds the Newton refinement of support localization.
#[derive(Debug, Clone)]
pub struct PolyJet {
    pub f: Vec<C64>,
    pub ft: Vec<C64>,
    pub fv: Vec<C64>,
    pub ftt: Vec<C64>,
    pub ftv: Vec<C64>,
    pub fvv: Vec<C64>,
}

pub fn eval_poly_jet(
    q: &[C64],
    basis: Basis,
    grid: &SampleGrid,
    tau: f64,
    nu: f64,
) -> Result<PolyJet> {
    basis.check(grid)?;
    let w = basis.width();
    let mut jet = PolyJet {
        f: vec![C64::new(0.0, 0.0); w],
        ft: vec![C64::new(0.0, 0.0); w],
        fv: vec![C64::new(0.0, 0.0); w],
        ftt: vec![C64::new(0.0, 0.0); w],
        ftv: vec![C64::new(0.0, 0.0); w],
        fvv: vec![C64::new(0.0, 0.0); w],
    };
    let two_pi = 2.0 * std::f64::consts::PI;
    for s in grid.iter() {
        let base = q[s.ntilde] * grid.atom_entry(&s, tau, nu);
        let dn = C64::new(0.0, two_pi * s.n as f64);
        let dp = C64::new(0.0, two_pi * s.pulse as f64);
        for j in 0..w {
            let e = basis.entry(grid, s.ntilde, j).conj() * base;
            jet.f[j] += e;
            jet.ft[j] += dn * e;
            jet.fv[j] += dp * e;
            jet.ftt[j] += dn * dn * e;
            jet.ftv[j] += dn * dp * e;
            jet.fvv[j] += dp * dp * e;
        }
    }
    Ok(jet)
}

/// `||f(tau_i, nu_k)||_2` on a regular `gt x gv` grid of `[0,1)^2`,
/// row-major in `tau`. Separable evaluation: the coefficient of the 2-D
/// monomial `(n, pulse)` is accumulated once per basis column, then expanded
/// along each axis with precomputed exponential tables.
pub fn poly_norm_grid(
    q: &[C64],
    basis: Basis,
    grid: &SampleGrid,
    gt: usize,
    gv: usize,
) -> Result<Vec<f64>> {
    basis.check(grid)?;
    if gt < 2 || gv < 2 {
        return Err(DbdError::Domain("grid must be at least 2x2".into()));
    }
    if q.len() != grid.len() {
        return Err(DbdError::Dimension("dual vector length mismatch".into()));
    }
    let m = grid.m();
    let pulses = grid.pulses();
    let nh = (m - 1) / 2;
    let width = basis.width();

    // exponential tables: et[n_idx][i] = e^{j2pi n tau_i}, ev[pulse][k]
    let et: Vec<Vec<C64>> = (0..m)
        .map(|ni| {
            let n = ni as f64 - nh as f64;
            (0..gt).map(|i| cis(n * i as f64 / gt as f64)).collect()
        })
        .collect();
    let ev: Vec<Vec<C64>> = (0..pulses)
        .map(|p| (0..gv).map(|k| cis(p as f64 * k as f64 / gv as f64)).collect())
        .collect();

    let mut norms = vec![0.0f64; gt * gv];
    let mut coeff = vec![C64::new(0.0, 0.0); m * pulses];
    let mut inner = vec![C64::new(0.0, 0.0); m * gv];
    for col in 0..width {
        coeff.fill(C64::new(0.0, 0.0));
        for s in grid.iter() {
            let ni = (s.n + nh as i64) as usize;
            coeff[ni * pulses + s.pulse] +=
                q[s.ntilde] * basis.entry(grid, s.ntilde, col).conj();
        }
        inner.fill(C64::new(0.0, 0.0));
        for ni in 0..m {
            for p in 0..pulses {
                let c = coeff[ni * pulses + p];
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                let row = &ev[p];
                let dst = &mut inner[ni * gv..(ni + 1) * gv];
                for (k, e) in row.iter().enumerate() {
                    dst[k] += c * e;
                }
            }
        }
        for i in 0..gt {
            let base = i * gv;
            // f(tau_i, nu_k) = sum_ni et[ni][i] * inner[ni][k]
            let mut rowacc = vec![C64::new(0.0, 0.0); gv];
            for ni in 0..m {
                let e = et[ni][i];
                let src = &inner[ni * gv..(ni + 1) * gv];
                for (k, s) in src.iter().enumerate() {
                    rowacc[k] += e * s;
                }
            }
            for (k, f) in rowacc.iter().enumerate() {
                norms[base + k] += f.norm_sqr();
            }
        }
    }
    for v in &mut norms {
        *v = v.sqrt();
    }
    Ok(norms)
}

/// Channel vector `h` such that the rank-one lifted matrix `coeffs * h^H`
/// reproduces that side's measurement contribution exactly.
pub fn lifted_channel_vector(channel: &ChannelParams, grid: &SampleGrid) -> Vec<C64> {
    let mut h = vec![C64::new(0.0, 0.0); grid.len()];
    for ((&g, &t), &v) in channel.gains().iter().zip(channel.delays()).zip(channel.dopplers()) {
        for s in grid.iter() {
            h[s.ntilde] += g.conj() * grid.atom_entry(&s, t, v);
        }
    }
    h
}

/// Rank-one radar waveform-channel matrix `Z_r = u h_r^H` of a scenario.
pub fn lifted_radar(scen: &Scenario) -> DMatrix<C64> {
    let grid = scen.grid();
    let h = lifted_channel_vector(&scen.radar().channel, &grid);
    let u = &scen.radar().u;
    DMatrix::from_fn(u.len(), grid.len(), |j, nt| u[j] * h[nt].conj())
}

/// Rank-one comms waveform-channel matrix `Z_c = v h_c^H` of a scenario.
pub fn lifted_comms(scen: &Scenario) -> DMatrix<C64> {
    let grid = scen.grid();
    let h = lifted_channel_vector(&scen.comms().channel, &grid);
    let v = &scen.comms().v;
    DMatrix::from_fn(v.len(), grid.len(), |j, nt| v[j] * h[nt].conj())
}

/// Real inner product `<x, y> = Re(y^H x)` of complex vectors.
pub fn inner_re(x: &[C64], y: &[C64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a * b.conj()).re).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        draw_scenario, steering_atom, synth_measurement, Dimensions, ScenarioSpec, SupportSpec,
        VariantSpec,
    };
    use rand::Rng;

    fn small_scenario(seed: u64) -> Scenario {
        draw_scenario(&ScenarioSpec {
            dims: Dimensions::new(7, 3, 2, 2, 1).unwrap(),
            variant: VariantSpec::Baseline,
            supports: SupportSpec::Random,
            seed,
        })
        .unwrap()
    }

    fn rand_cvec(rng: &mut impl Rng, n: usize) -> Vec<C64> {
        (0..n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
    }

    #[test]
    fn forward_of_zero_is_zero() {
        let scen = small_scenario(1);
        let grid = scen.grid();
        let z = DMatrix::zeros(2, grid.len());
        let y = forward_radar(&z, &scen.radar().b, &grid).unwrap();
        assert!(y.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn forward_of_atom_matches_direct_substitution() {
        let scen = small_scenario(2);
        let grid = scen.grid();
        let (tau, nu) = (0.41, 0.13);
        let a = steering_atom(tau, nu, &scen.dims).unwrap();
        let u = &scen.radar().u;
        let z = DMatrix::from_fn(u.len(), grid.len(), |j, nt| u[j] * a[nt].conj());
        let y = forward_radar(&z, &scen.radar().b, &grid).unwrap();
        for s in grid.iter() {
            let bu: C64 = (0..u.len()).map(|j| scen.radar().b[(s.ntilde % 7, j)] * u[j]).sum();
            let want = bu * cis(-(s.n as f64 * tau + s.pulse as f64 * nu));
            assert!((y[s.ntilde] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn synthesis_equals_sum_of_lifted_forwards() {
        for seed in [3u64, 4, 5] {
            let scen = small_scenario(seed);
            let grid = scen.grid();
            let meas = synth_measurement(&scen);
            let yr = forward_radar(&lifted_radar(&scen), &scen.radar().b, &grid).unwrap();
            let yc = forward_comms(&lifted_comms(&scen), &scen.comms().d, &grid).unwrap();
            let mut err: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for i in 0..grid.len() {
                err += (yr[i] + yc[i] - meas.y[i]).norm_sqr();
                scale += meas.y[i].norm_sqr();
            }
            assert!(err.sqrt() <= 1e-12 * scale.sqrt().max(1.0));
        }
    }

    #[test]
    fn lifted_matrices_are_rank_one() {
        let scen = small_scenario(8);
        let z = lifted_radar(&scen);
        let svals = z.svd(false, false).singular_values;
        assert!(svals[0] > 1e-6);
        for k in 1..svals.len() {
            assert!(svals[k] < 1e-10 * svals[0]);
        }
    }

    #[test]
    fn adjoint_identity_holds_over_random_instances() {
        let mut rng = crate::util::stream_rng(99, "adjoint-test", 0);
        let dims_pool = [(5usize, 2usize, 2usize), (7, 3, 3), (9, 4, 2), (13, 2, 4)];
        for trial in 0..100 {
            let (m, p, j) = dims_pool[trial % dims_pool.len()];
            let dims = Dimensions::new(m, p, j, 1, 1).unwrap();
            let scen = draw_scenario(&ScenarioSpec {
                dims,
                variant: VariantSpec::Baseline,
                supports: SupportSpec::Random,
                seed: trial as u64,
            })
            .unwrap();
            let grid = scen.grid();
            let q = rand_cvec(&mut rng, grid.len());
            let _ = p;
            for (basis, width) in [
                (Basis::radar(&scen.radar().b), j),
                (Basis::comms(&scen.comms().d), j),
            ] {
                let z = DMatrix::from_fn(width, grid.len(), |_, _| {
                    C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                });
                let fz = forward(&z, basis, &grid).unwrap();
                let aq = adjoint(&q, basis, &grid).unwrap();
                let lhs = inner_re(&fz, &q);
                let rhs: f64 = (0..width)
                    .map(|r| {
                        (0..grid.len()).map(|c| (z[(r, c)] * aq[(r, c)].conj()).re).sum::<f64>()
                    })
                    .sum();
                let zf = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                let qn = q.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                assert!(
                    (lhs - rhs).abs() <= 1e-10 * (zf * qn).max(1.0),
                    "adjoint identity violated: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn adjoint_of_canonical_vector_is_single_column() {
        let scen = small_scenario(6);
        let grid = scen.grid();
        let mut q = vec![C64::new(0.0, 0.0); grid.len()];
        let nt = 9;
        q[nt] = C64::new(1.0, 0.0);
        let a = adjoint_radar(&q, &scen.radar().b, &grid).unwrap();
        for c in 0..grid.len() {
            for r in 0..a.nrows() {
                let want = if c == nt { scen.radar().b[(nt % 7, r)].conj() } else { C64::new(0.0, 0.0) };
                assert!((a[(r, c)] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn eval_poly_matches_adjoint_times_atom() {
        let scen = small_scenario(7);
        let grid = scen.grid();
        let mut rng = crate::util::stream_rng(7, "poly", 0);
        let q = rand_cvec(&mut rng, grid.len());
        for basis in [Basis::radar(&scen.radar().b), Basis::comms(&scen.comms().d)] {
            let aq = adjoint(&q, basis, &grid).unwrap();
            for i in 0..64 {
                for k in 0..64 {
                    let (tau, nu) = (i as f64 / 64.0, k as f64 / 64.0);
                    let f = eval_poly(&q, basis, &grid, tau, nu).unwrap();
                    let a = steering_atom(tau, nu, &scen.dims).unwrap();
                    for (j, fj) in f.iter().enumerate() {
                        let want: C64 = (0..grid.len()).map(|c| aq[(j, c)] * a[c]).sum();
                        assert!((fj - want).norm() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn poly_norm_bounded_by_l1_times_row_norm() {
        let scen = small_scenario(10);
        let grid = scen.grid();
        let mut rng = crate::util::stream_rng(10, "bound", 0);
        let q = rand_cvec(&mut rng, grid.len());
        let q1: f64 = q.iter().map(|z| z.norm()).sum();
        let bmax = (0..7)
            .map(|r| (0..2).map(|c| scen.radar().b[(r, c)].norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0f64, f64::max);
        for (tau, nu) in [(0.1, 0.9), (0.33, 0.41), (0.77, 0.2)] {
            let f = eval_poly_r(&q, &scen.radar().b, &grid, tau, nu).unwrap();
            let fnorm = f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!(fnorm <= q1 * bmax + 1e-12);
        }
    }

    #[test]
    fn norm_grid_matches_pointwise_eval() {
        let scen = small_scenario(12);
        let grid = scen.grid();
        let mut rng = crate::util::stream_rng(12, "grid", 0);
        let q = rand_cvec(&mut rng, grid.len());
        for basis in [Basis::radar(&scen.radar().b), Basis::comms(&scen.comms().d)] {
            let (gt, gv) = (16usize, 8usize);
            let norms = poly_norm_grid(&q, basis, &grid, gt, gv).unwrap();
            for i in 0..gt {
                for k in 0..gv {
                    let f = eval_poly(&q, basis, &grid, i as f64 / gt as f64, k as f64 / gv as f64)
                        .unwrap();
                    let want = f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    assert!((norms[i * gv + k] - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn zero_dual_vector_gives_zero_everything() {
        let scen = small_scenario(13);
        let grid = scen.grid();
        let q = vec![C64::new(0.0, 0.0); grid.len()];
        let a = adjoint_radar(&q, &scen.radar().b, &grid).unwrap();
        assert!(a.iter().all(|z| z.norm() == 0.0));
        let f = eval_poly_c(&q, &scen.comms().d, &grid, 0.3, 0.4).unwrap();
        assert!(f.iter().all(|z| z.norm() == 0.0));
    }
}
