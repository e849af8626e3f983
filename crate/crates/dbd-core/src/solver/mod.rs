//! First-order conic solver for the emitted SDPs.
//!
//! Consensus-form ADMM: the variable vector `x` carries `(q, K)`, each PSD
//! block is an affine image `S_i = E_i x + F_i`, and the iteration alternates
//!
//! 1. an equality-constrained least-squares `x`-step whose normal matrix is
//!    block-diagonal over tiny variable groups (diagonal for the baseline
//!    problems), with the trace-constraint correction solved through one
//!    cached Cholesky factor,
//! 2. a projection of each (over-relaxed) block iterate onto the PSD cone,
//! 3. the scaled dual update.
//!
//! Per-iteration cost is dominated by one Hermitian eigendecomposition per
//! block. Projections use a rank-aware reconstruction: whichever of the
//! negative/positive eigenspaces is smaller drives a rank-k update.

mod barrier;
mod eig;

pub use barrier::solve_reference;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::sdp::{BlockKind, ConicProblem};
use crate::util::C64;
use crate::{DbdError, Result};

/// Equilibration mode for the block affine maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    None,
    /// Iterative per-block row equilibration (congruence scaling), a few
    /// damped passes.
    #[default]
    Ruiz,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSettings {
    pub max_iters: usize,
    pub eps_primal: f64,
    pub eps_dual: f64,
    pub eps_gap: f64,
    /// Over-relaxation factor in (1, 2).
    pub over_relaxation: f64,
    pub scaling: Scaling,
    /// Refine the final iterate by re-fitting x to the projected blocks.
    pub polish: bool,
    /// Initial penalty parameter.
    pub rho0: f64,
    /// Residual-balancing updates of the penalty parameter.
    pub adapt_rho: bool,
    /// Stop adapting after this iteration (keeps late iterations monotone).
    pub rho_freeze_iter: usize,
    /// Residuals are evaluated every this many iterations.
    pub check_every: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iters: 50_000,
            eps_primal: 1e-7,
            eps_dual: 1e-7,
            eps_gap: 1e-7,
            over_relaxation: 1.6,
            scaling: Scaling::Ruiz,
            polish: false,
            rho0: 1.0,
            adapt_rho: true,
            rho_freeze_iter: 20_000,
            check_every: 25,
        }
    }
}

impl SolverSettings {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(DbdError::Domain("max_iters must be >= 1".into()));
        }
        if !(self.eps_primal > 0.0 && self.eps_dual > 0.0 && self.eps_gap > 0.0) {
            return Err(DbdError::Domain("tolerances must be positive".into()));
        }
        if !(1.0 < self.over_relaxation && self.over_relaxation < 2.0) {
            return Err(DbdError::Domain("over_relaxation must lie in (1, 2)".into()));
        }
        if self.rho0 <= 0.0 {
            return Err(DbdError::Domain("rho0 must be positive".into()));
        }
        if self.check_every == 0 {
            return Err(DbdError::Domain("check_every must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Optimal,
    MaxIters,
    Infeasible,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResidualSample {
    pub iter: usize,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub q: Vec<C64>,
    pub k: DMatrix<C64>,
    pub status: SolverStatus,
    pub residuals: Residuals,
    pub iterations: usize,
    /// Objective in the problem's original sense.
    pub objective: f64,
    /// Full solved variable vector.
    pub x: Vec<f64>,
    /// Residual trace at every check point.
    pub history: Vec<ResidualSample>,
}

/// Frobenius-nearest PSD matrix of a real symmetric input (eigenvalue clamp).
pub fn psd_project(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = s.nrows();
    if n != s.ncols() {
        return Err(DbdError::Dimension("psd_project needs a square matrix".into()));
    }
    let scale = s.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    for r in 0..n {
        for c in (r + 1)..n {
            if (s[(r, c)] - s[(c, r)]).abs() > 1e-9 * scale {
                return Err(DbdError::Domain(format!(
                    "matrix is not symmetric at ({r},{c}): {} vs {}",
                    s[(r, c)],
                    s[(c, r)]
                )));
            }
        }
    }
    // symmetrize roundoff, then clamp
    let mut buf: Vec<f64> = vec![0.0; n * n];
    for c in 0..n {
        for r in 0..n {
            buf[c * n + r] = 0.5 * (s[(r, c)] + s[(c, r)]);
        }
    }
    let mut w = vec![0.0; n];
    let mut ws = eig::EigWorkspace::new();
    let mut vecs = buf;
    eig::eigh_real_inplace(&mut vecs, n, &mut w, &mut ws)?;
    let mut out = vec![0.0; n * n];
    let scaled: Vec<f64> = {
        let mut cols = Vec::new();
        for (k, &lam) in w.iter().enumerate() {
            if lam > 0.0 {
                let s = lam.sqrt();
                cols.extend(vecs[k * n..(k + 1) * n].iter().map(|v| v * s));
            }
        }
        cols
    };
    let kpos = scaled.len() / n.max(1);
    eig::syrk_update(&mut out, n, &scaled, kpos, 1.0);
    Ok(DMatrix::from_fn(n, n, |r, c| out[c * n + r]))
}

/// Projection of a Hermitian matrix (dense column-major buffer) onto the PSD
/// cone, in place. Returns the number of clamped (negative) eigenvalues.
pub(crate) fn hermitian_project_inplace(
    buf: &mut [C64],
    n: usize,
    ws: &mut eig::EigWorkspace,
    evecs: &mut Vec<C64>,
    evals: &mut Vec<f64>,
    scratch: &mut Vec<C64>,
) -> Result<usize> {
    evecs.clear();
    evecs.extend_from_slice(buf);
    evals.resize(n, 0.0);
    eig::eigh_inplace(evecs, n, evals, ws)?;
    let kneg = evals.iter().filter(|l| **l < 0.0).count();
    let kpos = n - kneg;
    if kneg == 0 {
        return Ok(0);
    }
    if kpos == 0 {
        buf.fill(C64::new(0.0, 0.0));
        return Ok(kneg);
    }
    if kneg <= kpos {
        scratch.clear();
        for k in 0..kneg {
            let s = (-evals[k]).sqrt();
            scratch.extend(evecs[k * n..(k + 1) * n].iter().map(|v| v * s));
        }
        eig::herk_update(buf, n, scratch, kneg, 1.0);
    } else {
        scratch.clear();
        for k in kneg..n {
            let s = evals[k].sqrt();
            scratch.extend(evecs[k * n..(k + 1) * n].iter().map(|v| v * s));
        }
        buf.fill(C64::new(0.0, 0.0));
        eig::herk_update(buf, n, scratch, kpos, 1.0);
    }
    Ok(kneg)
}

#[derive(Debug, Clone, Copy)]
struct Term {
    r: u32,
    c: u32,
    var: u32,
    w: C64,
}

#[derive(Debug)]
struct BlockWork {
    side: usize,
    kind: BlockKind,
    /// terms sorted by (r, c)
    terms: Vec<Term>,
    const_dense: Vec<C64>,
    z: Vec<C64>,
    u: Vec<C64>,
    s: Vec<C64>,
}

impl BlockWork {
    #[inline]
    fn idx(&self, r: u32, c: u32) -> usize {
        c as usize * self.side + r as usize
    }
}

/// Variable groups coupled through shared block entries.
#[derive(Debug)]
struct Group {
    vars: Vec<u32>,
    /// rho-independent block part of the local normal matrix
    b: DMatrix<f64>,
    /// local quadratic objective diagonal
    qdiag: Vec<f64>,
    inv: DMatrix<f64>,
}

struct Workspace {
    nx: usize,
    blocks: Vec<BlockWork>,
    /// h[v] = qdiag[v] + rho * hb[v] for ungrouped vars
    qdiag: Vec<f64>,
    hb: Vec<f64>,
    h: Vec<f64>,
    c_min: Vec<f64>,
    /// adjoint of block constants, folded into the x-step rhs
    e_const: Vec<f64>,
    groups: Vec<Group>,
    group_of: Vec<i32>,
    /// trace/equality rows
    t_rows: Vec<Vec<(u32, f64)>>,
    t_rhs: Vec<f64>,
    gt: GtFactor,
}

/// Factorization of the equality Schur complement `T H^{-1} T^T`. The trace
/// classes have disjoint variable support, so the matrix is diagonal for
/// every problem the builder emits; a dense Cholesky covers anything else.
enum GtFactor {
    None,
    Diagonal(Vec<f64>),
    Dense(nalgebra::Cholesky<f64, nalgebra::Dyn>),
}

impl GtFactor {
    fn solve(&self, r: &mut nalgebra::DVector<f64>) {
        match self {
            GtFactor::None => {}
            GtFactor::Diagonal(d) => {
                for (x, di) in r.iter_mut().zip(d) {
                    *x /= di;
                }
            }
            GtFactor::Dense(chol) => {
                let solved = chol.solve(&*r);
                r.copy_from(&solved);
            }
        }
    }
}

fn build_workspace(problem: &ConicProblem, settings: &SolverSettings) -> Result<Workspace> {
    problem.validate()?;
    let nx = problem.nx;

    let mut blocks = Vec::with_capacity(problem.blocks.len());
    for b in &problem.blocks {
        let side = b.side;
        let mut const_dense = vec![C64::new(0.0, 0.0); side * side];
        for cst in &b.constants {
            let (r, c) = (cst.row as usize, cst.col as usize);
            const_dense[c * side + r] += cst.value;
            if r != c {
                const_dense[r * side + c] += cst.value.conj();
            }
        }
        let mut terms: Vec<Term> =
            b.terms.iter().map(|t| Term { r: t.row, c: t.col, var: t.var, w: t.coeff }).collect();
        terms.sort_by_key(|t| (t.r, t.c, t.var));
        blocks.push(BlockWork {
            side,
            kind: b.kind,
            terms,
            const_dense,
            z: vec![C64::new(0.0, 0.0); side * side],
            u: vec![C64::new(0.0, 0.0); side * side],
            s: vec![C64::new(0.0, 0.0); side * side],
        });
    }

    // Ruiz-style congruence equilibration on each block's rows.
    if matches!(settings.scaling, Scaling::Ruiz) {
        for blk in &mut blocks {
            let n = blk.side;
            let mut d = vec![1.0f64; n];
            for _pass in 0..6 {
                let mut rownorm = vec![0.0f64; n];
                for t in &blk.terms {
                    let v = (t.w.norm() * d[t.r as usize] * d[t.c as usize]).abs();
                    rownorm[t.r as usize] = rownorm[t.r as usize].max(v);
                    rownorm[t.c as usize] = rownorm[t.c as usize].max(v);
                }
                for (rc, val) in blk.const_dense.iter().enumerate() {
                    if val.norm_sqr() > 0.0 {
                        let (r, c) = (rc % n, rc / n);
                        let v = val.norm() * d[r] * d[c];
                        rownorm[r] = rownorm[r].max(v);
                        rownorm[c] = rownorm[c].max(v);
                    }
                }
                for (dr, rn) in d.iter_mut().zip(&rownorm) {
                    if *rn > 1e-12 {
                        *dr /= rn.sqrt();
                    }
                }
            }
            for t in &mut blk.terms {
                t.w *= d[t.r as usize] * d[t.c as usize];
            }
            let const_scaled: Vec<C64> = blk
                .const_dense
                .iter()
                .enumerate()
                .map(|(rc, v)| v * (d[rc % n] * d[rc / n]))
                .collect();
            blk.const_dense = const_scaled;
        }
    }

    // objective in minimize form, normalized
    let mut c_min = vec![0.0f64; nx];
    for &(v, w) in &problem.objective.linear {
        c_min[v as usize] += w;
    }
    let mut qdiag = vec![0.0f64; nx];
    for &(v, w) in &problem.objective.quad_diag {
        if w < 0.0 {
            return Err(DbdError::Domain("quadratic objective must be convex".into()));
        }
        qdiag[v as usize] += w;
    }
    // normalize the objective so penalty parameters start on a sane scale;
    // the reported objective is always evaluated on the raw problem data
    let cnorm = c_min.iter().map(|v| v * v).sum::<f64>().sqrt();
    let obj_scale = if cnorm > 1.0 { 1.0 / cnorm } else { 1.0 };
    for v in &mut c_min {
        *v *= obj_scale;
    }
    for v in &mut qdiag {
        *v *= obj_scale;
    }

    // group detection: vars sharing one block entry are coupled
    let mut parent: Vec<u32> = (0..nx as u32).collect();
    fn find(parent: &mut [u32], v: u32) -> u32 {
        let mut v = v;
        while parent[v as usize] != v {
            parent[v as usize] = parent[parent[v as usize] as usize];
            v = parent[v as usize];
        }
        v
    }
    for blk in &blocks {
        let mut i = 0;
        while i < blk.terms.len() {
            let mut j = i + 1;
            while j < blk.terms.len()
                && blk.terms[j].r == blk.terms[i].r
                && blk.terms[j].c == blk.terms[i].c
            {
                j += 1;
            }
            let ra = find(&mut parent, blk.terms[i].var);
            for t in &blk.terms[i + 1..j] {
                let rb = find(&mut parent, t.var);
                parent[rb as usize] = ra;
            }
            i = j;
        }
    }

    // hb (rho-independent block Hessian diagonal) + rho-independent group parts
    let mut hb = vec![0.0f64; nx];
    use std::collections::HashMap;
    let mut members: HashMap<u32, Vec<u32>> = HashMap::new();
    for v in 0..nx as u32 {
        let root = find(&mut parent, v);
        members.entry(root).or_default().push(v);
    }
    let mut group_of = vec![-1i32; nx];
    let mut group_sets: Vec<Vec<u32>> = Vec::new();
    for (_, mut vars) in members {
        if vars.len() > 1 {
            vars.sort_unstable();
            for &v in &vars {
                group_of[v as usize] = group_sets.len() as i32;
            }
            group_sets.push(vars);
        }
    }

    let mut group_mats: Vec<DMatrix<f64>> =
        group_sets.iter().map(|g| DMatrix::zeros(g.len(), g.len())).collect();
    let local_index = |gs: &Vec<u32>, v: u32| gs.binary_search(&v).unwrap();

    for blk in &blocks {
        let mut i = 0;
        while i < blk.terms.len() {
            let mut j = i + 1;
            while j < blk.terms.len()
                && blk.terms[j].r == blk.terms[i].r
                && blk.terms[j].c == blk.terms[i].c
            {
                j += 1;
            }
            let mult = if blk.terms[i].r == blk.terms[i].c { 1.0 } else { 2.0 };
            for a in i..j {
                let ta = &blk.terms[a];
                hb[ta.var as usize] += mult * ta.w.norm_sqr();
                let g = group_of[ta.var as usize];
                if g >= 0 {
                    let gs = &group_sets[g as usize];
                    let la = local_index(gs, ta.var);
                    for tb in &blk.terms[a + 1..j] {
                        let cross = mult * (ta.w.conj() * tb.w).re;
                        if cross != 0.0 {
                            let lb = local_index(gs, tb.var);
                            group_mats[g as usize][(la, lb)] += cross;
                            group_mats[g as usize][(lb, la)] += cross;
                        }
                    }
                }
            }
            i = j;
        }
    }

    // groups whose couplings all vanished degrade to singletons
    let mut groups = Vec::new();
    for (gi, gs) in group_sets.into_iter().enumerate() {
        let b = &group_mats[gi];
        let coupled = (0..gs.len())
            .any(|a| (a + 1..gs.len()).any(|bb| b[(a, bb)].abs() > 1e-14 * (1.0 + b[(a, a)].abs())));
        if !coupled {
            for &v in &gs {
                group_of[v as usize] = -1;
            }
            continue;
        }
        let id = groups.len() as i32;
        for &v in &gs {
            group_of[v as usize] = id;
        }
        let mut bmat = DMatrix::zeros(gs.len(), gs.len());
        for a in 0..gs.len() {
            bmat[(a, a)] = hb[gs[a] as usize];
            for c in (a + 1)..gs.len() {
                bmat[(a, c)] = b[(a, c)];
                bmat[(c, a)] = b[(c, a)];
            }
        }
        let qd: Vec<f64> = gs.iter().map(|&v| qdiag[v as usize]).collect();
        groups.push(Group { vars: gs, b: bmat, qdiag: qd, inv: DMatrix::zeros(0, 0) });
    }

    for v in 0..nx {
        if hb[v] == 0.0 && qdiag[v] == 0.0 {
            return Err(DbdError::Domain(format!(
                "variable {v} appears in no block and has no quadratic weight"
            )));
        }
    }

    // adjoint of the block constants
    let mut e_const = vec![0.0f64; nx];
    for blk in &blocks {
        for t in &blk.terms {
            let mult = if t.r == t.c { 1.0 } else { 2.0 };
            let val = blk.const_dense[blk.idx(t.r, t.c)];
            e_const[t.var as usize] += mult * (t.w.conj() * val).re;
        }
    }

    let t_rows: Vec<Vec<(u32, f64)>> = problem.eqs.iter().map(|e| e.terms.clone()).collect();
    let t_rhs: Vec<f64> = problem.eqs.iter().map(|e| e.rhs).collect();

    Ok(Workspace {
        nx,
        blocks,
        qdiag,
        hb,
        h: vec![0.0; nx],
        c_min,
        e_const,
        groups,
        group_of,
        t_rows,
        t_rhs,
        gt: GtFactor::None,
    })
}

impl Workspace {
    /// Recompute rho-dependent factors: h, group inverses, and the Cholesky
    /// of the equality Schur complement `T H^{-1} T^T`.
    fn refresh_rho(&mut self, rho: f64) -> Result<()> {
        for v in 0..self.nx {
            self.h[v] = self.qdiag[v] + rho * self.hb[v];
        }
        for g in &mut self.groups {
            let n = g.vars.len();
            let mut hmat = &g.b * rho;
            for a in 0..n {
                hmat[(a, a)] += g.qdiag[a];
            }
            g.inv = hmat
                .try_inverse()
                .ok_or_else(|| DbdError::Solver("singular group normal matrix".into()))?;
        }
        let m = self.t_rows.len();
        if m > 0 {
            // diagonal part from ungrouped vars
            let mut diag = vec![0.0f64; m];
            for (j, row) in self.t_rows.iter().enumerate() {
                for &(v, w) in row {
                    let g = self.group_of[v as usize];
                    if g < 0 {
                        diag[j] += w * w / self.h[v as usize];
                    }
                }
            }
            // grouped contributions couple rows sharing a group
            use std::collections::HashMap;
            let mut touch: HashMap<i32, Vec<(usize, usize, f64)>> = HashMap::new();
            for (j, row) in self.t_rows.iter().enumerate() {
                for &(v, w) in row {
                    let g = self.group_of[v as usize];
                    if g >= 0 {
                        let gi = &self.groups[g as usize];
                        let lv = gi.vars.binary_search(&v).unwrap();
                        touch.entry(g).or_default().push((j, lv, w));
                    }
                }
            }
            let mut cross: Vec<(usize, usize, f64)> = Vec::new();
            for (g, list) in touch {
                let inv = &self.groups[g as usize].inv;
                for &(j1, l1, w1) in &list {
                    for &(j2, l2, w2) in &list {
                        let val = w1 * inv[(l1, l2)] * w2;
                        if j1 == j2 {
                            diag[j1] += val;
                        } else {
                            cross.push((j1, j2, val));
                        }
                    }
                }
            }
            if cross.is_empty() {
                if diag.iter().any(|d| *d <= 0.0) {
                    return Err(DbdError::Solver("equality Schur complement not PD".into()));
                }
                self.gt = GtFactor::Diagonal(diag);
            } else {
                let mut gt = DMatrix::zeros(m, m);
                for (j, d) in diag.iter().enumerate() {
                    gt[(j, j)] = *d;
                }
                for (j1, j2, v) in cross {
                    gt[(j1, j2)] += v;
                }
                self.gt = GtFactor::Dense(
                    nalgebra::Cholesky::new(gt).ok_or_else(|| {
                        DbdError::Solver("equality Schur complement not PD".into())
                    })?,
                );
            }
        }
        Ok(())
    }

    /// Apply `H^{-1}` to a dense vector in place.
    fn apply_hinv(&self, v: &mut [f64]) {
        for (i, val) in v.iter_mut().enumerate() {
            if self.group_of[i] < 0 {
                *val /= self.h[i];
            }
        }
        for g in &self.groups {
            let n = g.vars.len();
            let mut local = nalgebra::DVector::zeros(n);
            for (a, &var) in g.vars.iter().enumerate() {
                local[a] = v[var as usize];
            }
            let solved = &g.inv * local;
            for (a, &var) in g.vars.iter().enumerate() {
                v[var as usize] = solved[a];
            }
        }
    }
}

/// Solve a conic problem with ADMM.
pub fn solve(problem: &ConicProblem, settings: &SolverSettings) -> Result<ConicSolution> {
    settings.validate()?;
    let mut ws = build_workspace(problem, settings)?;
    let mut rho = settings.rho0;
    ws.refresh_rho(rho)?;

    let nx = ws.nx;
    let mut x = vec![0.0f64; nx];
    let mut g = vec![0.0f64; nx];
    let mut adj_dz = vec![0.0f64; nx];
    let mut eigws = eig::EigWorkspace::new();
    let max_side2 = ws.blocks.iter().map(|b| b.side * b.side).max().unwrap_or(0);
    let mut z_old = vec![C64::new(0.0, 0.0); max_side2];
    let mut evecs: Vec<C64> = Vec::new();
    let mut evals: Vec<f64> = Vec::new();
    let mut scratch: Vec<C64> = Vec::new();
    let mut rbuf: Vec<f64> = Vec::new();
    let mut rvecs: Vec<f64> = Vec::new();
    let mut rscr: Vec<f64> = Vec::new();

    let alpha = settings.over_relaxation;
    let mut history = Vec::new();
    let mut status = SolverStatus::MaxIters;
    let mut res = Residuals { primal: f64::INFINITY, dual: f64::INFINITY, gap: f64::INFINITY };
    let mut iterations = settings.max_iters;
    let cnorm = ws.c_min.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dnorm = ws.t_rhs.iter().map(|v| v * v).sum::<f64>().sqrt();

    for iter in 0..settings.max_iters {
        // ---- x-step rhs: g = -c + rho * sum_i E_i^*(Z_i - U_i - F_i)
        g.copy_from_slice(&ws.c_min);
        for v in &mut g {
            *v = -*v;
        }
        for (v, ec) in g.iter_mut().zip(&ws.e_const) {
            *v -= rho * ec;
        }
        for blk in &ws.blocks {
            for t in &blk.terms {
                let mult = if t.r == t.c { 1.0 } else { 2.0 };
                let idx = blk.idx(t.r, t.c);
                let target = blk.z[idx] - blk.u[idx];
                g[t.var as usize] += rho * mult * (t.w.conj() * target).re;
            }
        }
        x.copy_from_slice(&g);
        ws.apply_hinv(&mut x);

        // ---- equality correction
        if !ws.t_rows.is_empty() {
            let m = ws.t_rows.len();
            let mut r = nalgebra::DVector::zeros(m);
            for (j, row) in ws.t_rows.iter().enumerate() {
                let mut acc = -ws.t_rhs[j];
                for &(v, w) in row {
                    acc += w * x[v as usize];
                }
                r[j] = acc;
            }
            ws.gt.solve(&mut r);
            let mut corr = vec![0.0f64; nx];
            for (j, row) in ws.t_rows.iter().enumerate() {
                for &(v, w) in row {
                    corr[v as usize] += w * r[j];
                }
            }
            ws.apply_hinv(&mut corr);
            for (xv, cv) in x.iter_mut().zip(&corr) {
                *xv -= cv;
            }
        }

        // ---- per-block: affine image, over-relaxation, projection, dual
        adj_dz.fill(0.0);
        let mut rp2 = 0.0f64;
        let mut snorm2 = 0.0f64;
        let mut znorm2 = 0.0f64;
        let mut gap_abs = 0.0f64;
        for blk in &mut ws.blocks {
            let n = blk.side;
            blk.s.copy_from_slice(&blk.const_dense);
            for t in &blk.terms {
                let add = t.w * x[t.var as usize];
                let i1 = t.c as usize * n + t.r as usize;
                blk.s[i1] += add;
                if t.r != t.c {
                    blk.s[t.r as usize * n + t.c as usize] += add.conj();
                }
            }
            z_old[..n * n].copy_from_slice(&blk.z);
            // relaxed iterate + scaled dual, projected
            for i in 0..n * n {
                let s_hat = alpha * blk.s[i] + (1.0 - alpha) * blk.z[i];
                blk.z[i] = s_hat + blk.u[i];
            }
            match blk.kind {
                BlockKind::Hermitian => {
                    hermitian_project_inplace(
                        &mut blk.z,
                        n,
                        &mut eigws,
                        &mut evecs,
                        &mut evals,
                        &mut scratch,
                    )?;
                }
                BlockKind::RealSym => {
                    rbuf.clear();
                    rbuf.extend(blk.z.iter().map(|z| z.re));
                    rvecs.clear();
                    rvecs.extend_from_slice(&rbuf);
                    evals.resize(n, 0.0);
                    eig::eigh_real_inplace(&mut rvecs, n, &mut evals, &mut eigws)?;
                    let kneg = evals.iter().filter(|l| **l < 0.0).count();
                    if kneg > 0 {
                        if kneg <= n - kneg {
                            rscr.clear();
                            for k in 0..kneg {
                                let s = (-evals[k]).sqrt();
                                rscr.extend(rvecs[k * n..(k + 1) * n].iter().map(|v| v * s));
                            }
                            eig::syrk_update(&mut rbuf, n, &rscr, kneg, 1.0);
                        } else {
                            rscr.clear();
                            for k in kneg..n {
                                let s = evals[k].sqrt();
                                rscr.extend(rvecs[k * n..(k + 1) * n].iter().map(|v| v * s));
                            }
                            rbuf.fill(0.0);
                            eig::syrk_update(&mut rbuf, n, &rscr, n - kneg, 1.0);
                        }
                    }
                    for (zi, ri) in blk.z.iter_mut().zip(&rbuf) {
                        *zi = C64::new(*ri, 0.0);
                    }
                }
            }
            // dual update u += s_hat - z  (z currently holds the projection)
            for i in 0..n * n {
                let s_hat = alpha * blk.s[i] + (1.0 - alpha) * z_old[i];
                blk.u[i] += s_hat - blk.z[i];
            }
            // residual pieces
            for i in 0..n * n {
                rp2 += (blk.s[i] - blk.z[i]).norm_sqr();
                snorm2 += blk.s[i].norm_sqr();
                znorm2 += blk.z[i].norm_sqr();
                gap_abs += (blk.z[i] * blk.u[i].conj()).re;
            }
            for t in &blk.terms {
                let mult = if t.r == t.c { 1.0 } else { 2.0 };
                let idx = blk.idx(t.r, t.c);
                let dz = blk.z[idx] - z_old[idx];
                adj_dz[t.var as usize] += mult * (t.w.conj() * dz).re;
            }
        }

        if iter % settings.check_every == settings.check_every - 1 || iter + 1 == settings.max_iters
        {
            let mut teq2 = 0.0f64;
            for (j, row) in ws.t_rows.iter().enumerate() {
                let mut acc = -ws.t_rhs[j];
                for &(v, w) in row {
                    acc += w * x[v as usize];
                }
                teq2 += acc * acc;
            }
            let rp = (rp2 + teq2).sqrt() / snorm2.sqrt().max(znorm2.sqrt()).max(1.0);
            let rd_abs = rho * adj_dz.iter().map(|v| v * v).sum::<f64>().sqrt();
            let rd = rd_abs / cnorm.max(1.0);
            let gap = (rho * gap_abs).abs()
                / problem.objective.value_min(&x).abs().max(dnorm).max(1.0);
            res = Residuals { primal: rp, dual: rd, gap };
            history.push(ResidualSample { iter, primal: rp, dual: rd, gap });

            if !rp.is_finite() || !x.iter().all(|v| v.is_finite()) {
                status = SolverStatus::Infeasible;
                iterations = iter + 1;
                break;
            }
            if rp <= settings.eps_primal && rd <= settings.eps_dual && gap <= settings.eps_gap {
                status = SolverStatus::Optimal;
                iterations = iter + 1;
                break;
            }
            if settings.adapt_rho && iter < settings.rho_freeze_iter {
                let mut changed = false;
                if rp > 10.0 * rd && rho < 1e8 {
                    rho *= 2.0;
                    for blk in &mut ws.blocks {
                        for u in &mut blk.u {
                            *u *= 0.5;
                        }
                    }
                    changed = true;
                } else if rd > 10.0 * rp && rho > 1e-8 {
                    rho *= 0.5;
                    for blk in &mut ws.blocks {
                        for u in &mut blk.u {
                            *u *= 2.0;
                        }
                    }
                    changed = true;
                }
                if changed {
                    ws.refresh_rho(rho)?;
                }
            }
        }
    }

    if settings.polish {
        polish(&mut ws, &mut x, &mut eigws, &mut evecs, &mut evals, &mut scratch)?;
    }

    let q = problem.vars.extract_q(&x);
    let k = if problem.vars.gram_sides.is_empty() {
        DMatrix::zeros(0, 0)
    } else {
        problem.vars.extract_gram(&x, 0)
    };
    let objective = problem.objective.value(&x);
    Ok(ConicSolution { q, k, status, residuals: res, iterations, objective, x, history })
}

/// Re-fit x to the PSD-projected blocks under the equality constraints
/// (one regularized least-squares pass).
fn polish(
    ws: &mut Workspace,
    x: &mut [f64],
    eigws: &mut eig::EigWorkspace,
    evecs: &mut Vec<C64>,
    evals: &mut Vec<f64>,
    scratch: &mut Vec<C64>,
) -> Result<()> {
    // project the current affine images
    for blk in &mut ws.blocks {
        let n = blk.side;
        blk.s.copy_from_slice(&blk.const_dense);
        for t in &blk.terms {
            let add = t.w * x[t.var as usize];
            let i1 = t.c as usize * n + t.r as usize;
            blk.s[i1] += add;
            if t.r != t.c {
                blk.s[t.r as usize * n + t.c as usize] += add.conj();
            }
        }
        blk.z.copy_from_slice(&blk.s);
        hermitian_project_inplace(&mut blk.z, n, eigws, evecs, evals, scratch)?;
    }
    // least-squares fit: minimize sum ||E x + F - Z||^2 + eps ||x - x0||^2
    let eps = 1e-8;
    let mut g = vec![0.0f64; ws.nx];
    for (gv, (ec, x0)) in g.iter_mut().zip(ws.e_const.iter().zip(x.iter())) {
        *gv = -ec + eps * x0;
    }
    for blk in &ws.blocks {
        for t in &blk.terms {
            let mult = if t.r == t.c { 1.0 } else { 2.0 };
            let idx = blk.idx(t.r, t.c);
            g[t.var as usize] += mult * (t.w.conj() * blk.z[idx]).re;
        }
    }
    // normal matrix at rho = 1 with a small Tikhonov term; reuse the group
    // machinery by temporarily shifting qdiag.
    let saved_q = ws.qdiag.clone();
    for v in &mut ws.qdiag {
        *v = eps;
    }
    for gmat in &mut ws.groups {
        for q in &mut gmat.qdiag {
            *q = eps;
        }
    }
    ws.refresh_rho(1.0)?;
    let mut xp = g.clone();
    ws.apply_hinv(&mut xp);
    if !ws.t_rows.is_empty() {
        let m = ws.t_rows.len();
        let mut r = nalgebra::DVector::zeros(m);
        for (j, row) in ws.t_rows.iter().enumerate() {
            let mut acc = -ws.t_rhs[j];
            for &(v, w) in row {
                acc += w * xp[v as usize];
            }
            r[j] = acc;
        }
        ws.gt.solve(&mut r);
        let mut corr = vec![0.0f64; ws.nx];
        for (j, row) in ws.t_rows.iter().enumerate() {
            for &(v, w) in row {
                corr[v as usize] += w * r[j];
            }
        }
        ws.apply_hinv(&mut corr);
        for (xv, cv) in xp.iter_mut().zip(&corr) {
            *xv -= cv;
        }
    }
    x.copy_from_slice(&xp);
    ws.qdiag = saved_q;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::{BlockTerm, LinearEq, Objective, PsdBlock, Sense, VarMap};

    fn lambda_min_problem() -> ConicProblem {
        // minimize Tr(diag(1,2) X) s.t. Tr(X) = 1, X >= 0 (Hermitian 2x2)
        let vars = VarMap { q_len: 0, gram_sides: vec![2] };
        let terms = vec![
            BlockTerm { row: 0, col: 0, var: vars.k_diag(0, 0), coeff: C64::new(1.0, 0.0) },
            BlockTerm { row: 0, col: 1, var: vars.k_off(0, 0, 1).0, coeff: C64::new(1.0, 0.0) },
            BlockTerm { row: 0, col: 1, var: vars.k_off(0, 0, 1).1, coeff: C64::new(0.0, 1.0) },
            BlockTerm { row: 1, col: 1, var: vars.k_diag(0, 1), coeff: C64::new(1.0, 0.0) },
        ];
        ConicProblem {
            nx: vars.nx(),
            vars: vars.clone(),
            blocks: vec![PsdBlock {
                name: "x".into(),
                side: 2,
                kind: crate::sdp::BlockKind::Hermitian,
                terms,
                constants: vec![],
            }],
            eqs: vec![LinearEq {
                terms: vec![(vars.k_diag(0, 0), 1.0), (vars.k_diag(0, 1), 1.0)],
                rhs: 1.0,
            }],
            objective: Objective {
                sense: Sense::Minimize,
                linear: vec![(vars.k_diag(0, 0), 1.0), (vars.k_diag(0, 1), 2.0)],
                quad_diag: vec![],
                constant: 0.0,
            },
        }
    }

    #[test]
    fn solves_lambda_min_problem() {
        let prob = lambda_min_problem();
        let settings = SolverSettings { eps_gap: 1e-9, ..Default::default() };
        let sol = solve(&prob, &settings).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sol.objective - 1.0).abs() < 1e-5, "objective {}", sol.objective);
        assert!((sol.k[(0, 0)].re - 1.0).abs() < 1e-4);
        assert!(sol.k[(1, 1)].re.abs() < 1e-4);
    }

    #[test]
    fn determinism_of_iterates() {
        let prob = lambda_min_problem();
        let settings = SolverSettings { max_iters: 500, ..Default::default() };
        let a = solve(&prob, &settings).unwrap();
        let b = solve(&prob, &settings).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.iterations, b.iterations);
        let ha: Vec<_> = a.history.iter().map(|h| (h.iter, h.primal.to_bits())).collect();
        let hb: Vec<_> = b.history.iter().map(|h| (h.iter, h.primal.to_bits())).collect();
        assert_eq!(ha, hb);
    }

    #[test]
    fn psd_project_examples() {
        let d = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -2.0]);
        let p = psd_project(&d).unwrap();
        assert!((p[(0, 0)] - 3.0).abs() < 1e-12);
        assert!(p[(1, 1)].abs() < 1e-12);

        // PSD input is a fixed point
        let mut rng = crate::util::stream_rng(3, "psd", 0);
        use rand::Rng as _;
        let a = DMatrix::from_fn(6, 6, |_, _| rng.random::<f64>() - 0.5);
        let spd = &a * a.transpose();
        let p = psd_project(&spd).unwrap();
        assert!((&p - &spd).norm() < 1e-12 * spd.norm().max(1.0));

        // asymmetric input is rejected
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(psd_project(&bad).is_err());
    }

    #[test]
    fn psd_project_is_frobenius_nearest_on_2x2() {
        // independent oracle on 2x2 symmetric matrices: dense search over
        // the PSD parametrization [a, b; b, c] via projected gradient from
        // many starts would be overkill; instead compare against the
        // closed-form eigenvalue clamp computed by hand.
        let cases = [
            [1.0, 2.0, 2.0, -1.0],
            [0.0, 1.0, 1.0, 0.0],
            [-3.0, 0.2, 0.2, -4.0],
            [2.0, -0.7, -0.7, 0.4],
        ];
        for c in cases {
            let s = DMatrix::from_row_slice(2, 2, &c);
            let p = psd_project(&s).unwrap();
            // hand clamp
            let tr = c[0] + c[3];
            let det = c[0] * c[3] - c[1] * c[2];
            let disc = (tr * tr / 4.0 - det).sqrt();
            let (l1, l2) = (tr / 2.0 - disc, tr / 2.0 + disc);
            for (lam, keep) in [(l1, l1 > 0.0), (l2, l2 > 0.0)] {
                // eigvec for lam: (b, lam - a) or (lam - d, b)
                let (vx, vy) = if c[1].abs() > 1e-12 {
                    (c[1], lam - c[0])
                } else if lam == c[0] {
                    (1.0, 0.0)
                } else {
                    (0.0, 1.0)
                };
                let n = (vx * vx + vy * vy).sqrt();
                if n == 0.0 {
                    continue;
                }
                let (vx, vy) = (vx / n, vy / n);
                let quad = vx * (p[(0, 0)] * vx + p[(0, 1)] * vy)
                    + vy * (p[(1, 0)] * vx + p[(1, 1)] * vy);
                let want = if keep { lam } else { 0.0 };
                assert!((quad - want).abs() < 1e-10, "case {c:?}: {quad} vs {want}");
            }
        }
    }

    #[test]
    fn hermitian_projection_matches_real_embedding_projection() {
        let mut rng = crate::util::stream_rng(5, "herm-vs-emb", 0);
        use rand::Rng as _;
        let n = 6usize;
        let mut h = vec![C64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for c in r..n {
                let z = if r == c {
                    C64::new(rng.random::<f64>() - 0.5, 0.0)
                } else {
                    C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                };
                h[c * n + r] = z;
                h[r * n + c] = z.conj();
            }
        }
        let mut hp = h.clone();
        let mut ws = eig::EigWorkspace::new();
        let (mut ev, mut ew, mut sc) = (Vec::new(), Vec::new(), Vec::new());
        hermitian_project_inplace(&mut hp, n, &mut ws, &mut ev, &mut ew, &mut sc).unwrap();

        // embed, project with the real path, extract
        let mut emb = DMatrix::zeros(2 * n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                let z = h[c * n + r];
                emb[(r, c)] = z.re;
                emb[(r + n, c + n)] = z.re;
                emb[(r, c + n)] = -z.im;
                emb[(r + n, c)] = z.im;
            }
        }
        let pe = psd_project(&emb).unwrap();
        for r in 0..n {
            for c in 0..n {
                let want = C64::new(pe[(r, c)], pe[(r + n, c)]);
                assert!((hp[c * n + r] - want).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn settings_validation() {
        let mut s = SolverSettings::default();
        s.over_relaxation = 2.5;
        assert!(s.validate().is_err());
        let mut s = SolverSettings::default();
        s.max_iters = 0;
        assert!(s.validate().is_err());
    }
}
