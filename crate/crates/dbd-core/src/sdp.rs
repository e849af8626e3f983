//! Assembly of the atomic-norm dual semidefinite program in a solver-neutral
//! standard conic form.
//!
//! The dual program has a free complex vector `q` (one entry per measurement
//! sample) and a Hermitian Gram matrix `K` indexed by the 2-D monomials
//! `(n, pulse)`. Feasibility is expressed by
//!
//! * two-level Toeplitz trace constraints `Tr(Theta_{k1,k2} K) = delta` that
//!   pin the Gram polynomial `a(r)^H K a(r)` to the constant 1, and
//! * one linear matrix inequality per emitter, `[[K, C],[C^H, w I]] >= 0`,
//!   whose off-diagonal block `C` holds the dual-polynomial coefficients and
//!   is linear in `q`.
//!
//! Everything is lowered onto one real variable vector `x = (q, K)`; each
//! PSD block is an affine image of `x` given by sparse upper-triangle terms.
//! This keeps the description exact and lets different solvers (the ADMM
//! engine, the dense barrier reference, or an external tool reading the JSON
//! form) consume identical data.

use serde::{Deserialize, Serialize};

use crate::model::{Measurement, Scenario, Variant};
use crate::util::{serde_c64, C64};
use crate::{DbdError, Result};

/// One symmetry-reduced two-level Toeplitz offset `(n1, n2)`.
///
/// `n1` is the delay-axis offset in `[0, M-1]`; `n2` the Doppler-axis offset
/// in `[-(P-1), P-1]`, restricted to `n2 >= 0` when `n1 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToeplitzIndex {
    pub n1: i64,
    pub n2: i64,
}

impl ToeplitzIndex {
    pub fn is_origin(&self) -> bool {
        self.n1 == 0 && self.n2 == 0
    }
}

/// Enumerate the symmetry-reduced trace constraints for an `m x p` monomial
/// grid. Exactly one entry (the origin) carries right-hand side 1.
pub fn enumerate_trace_constraints(m: usize, p: usize) -> Vec<(ToeplitzIndex, f64)> {
    let mut out = Vec::with_capacity(p + (m - 1) * (2 * p - 1));
    for n2 in 0..p as i64 {
        out.push((ToeplitzIndex { n1: 0, n2 }, if n2 == 0 { 1.0 } else { 0.0 }));
    }
    for n1 in 1..m as i64 {
        for n2 in -(p as i64 - 1)..=(p as i64 - 1) {
            out.push((ToeplitzIndex { n1, n2 }, 0.0));
        }
    }
    out
}

/// PSD block scalar field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    /// Complex Hermitian; entries below the diagonal are conjugates of the
    /// stored upper triangle.
    Hermitian,
    /// Real symmetric.
    RealSym,
}

/// `S[row, col] += coeff * x[var]` with `row <= col` (upper triangle).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockTerm {
    pub row: u32,
    pub col: u32,
    pub var: u32,
    #[serde(with = "serde_c64")]
    pub coeff: C64,
}

/// Constant contribution `S[row, col] += value` with `row <= col`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockConst {
    pub row: u32,
    pub col: u32,
    #[serde(with = "serde_c64")]
    pub value: C64,
}

/// One PSD cone constraint `S = affine(x) >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdBlock {
    pub name: String,
    pub side: usize,
    pub kind: BlockKind,
    pub terms: Vec<BlockTerm>,
    pub constants: Vec<BlockConst>,
}

/// Sparse real equality row `sum_k w_k x_{i_k} = rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearEq {
    pub terms: Vec<(u32, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Maximize,
    Minimize,
}

/// Objective stored in minimize form:
/// `value_min(x) = c^T x + 1/2 sum_i qd_i x_i^2 + constant`.
/// `sense` records how to report it (`Maximize` negates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub sense: Sense,
    pub linear: Vec<(u32, f64)>,
    pub quad_diag: Vec<(u32, f64)>,
    pub constant: f64,
}

impl Objective {
    pub fn value_min(&self, x: &[f64]) -> f64 {
        let lin: f64 = self.linear.iter().map(|&(i, w)| w * x[i as usize]).sum();
        let quad: f64 =
            self.quad_diag.iter().map(|&(i, w)| 0.5 * w * x[i as usize] * x[i as usize]).sum();
        lin + quad + self.constant
    }

    /// Objective in the problem's original sense.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self.sense {
            Sense::Minimize => self.value_min(x),
            Sense::Maximize => -self.value_min(x),
        }
    }
}

/// Location of the structured variables inside `x`.
///
/// `q` is stored first as interleaved `[Re q_0, Im q_0, Re q_1, ...]`. Each
/// linear matrix inequality carries its own Gram matrix; Gram `g`'s
/// parameters follow in order, enumerated row-major over the upper triangle
/// with one real for each diagonal entry and an `(Re, Im)` pair for each
/// strict upper entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarMap {
    pub q_len: usize,
    pub gram_sides: Vec<usize>,
}

impl VarMap {
    pub fn nx(&self) -> usize {
        2 * self.q_len + self.gram_sides.iter().map(|s| s * s).sum::<usize>()
    }

    pub fn q_re(&self, ntilde: usize) -> u32 {
        (2 * ntilde) as u32
    }

    pub fn q_im(&self, ntilde: usize) -> u32 {
        (2 * ntilde + 1) as u32
    }

    fn gram_base(&self, g: usize) -> usize {
        2 * self.q_len + self.gram_sides[..g].iter().map(|s| s * s).sum::<usize>()
    }

    /// Start of row `r`'s parameters within Gram `g`'s range.
    fn k_row_start(&self, g: usize, r: usize) -> usize {
        // row t contributes 1 + 2(s - 1 - t) parameters
        let s = self.gram_sides[g];
        self.gram_base(g) + r + (2 * s - 1 - r) * r
    }

    pub fn k_diag(&self, g: usize, r: usize) -> u32 {
        self.k_row_start(g, r) as u32
    }

    /// `(re, im)` parameter indices of Gram `g`'s strict upper entry `(r, c)`.
    pub fn k_off(&self, g: usize, r: usize, c: usize) -> (u32, u32) {
        debug_assert!(r < c && c < self.gram_sides[g]);
        let base = self.k_row_start(g, r) + 1 + 2 * (c - r - 1);
        (base as u32, (base + 1) as u32)
    }

    /// Read `q` out of a solved variable vector.
    pub fn extract_q(&self, x: &[f64]) -> Vec<C64> {
        (0..self.q_len).map(|i| C64::new(x[2 * i], x[2 * i + 1])).collect()
    }

    /// Read Gram matrix `g` out of a solved variable vector.
    pub fn extract_gram(&self, x: &[f64], g: usize) -> nalgebra::DMatrix<C64> {
        let s = self.gram_sides[g];
        let mut k = nalgebra::DMatrix::from_element(s, s, C64::new(0.0, 0.0));
        for r in 0..s {
            k[(r, r)] = C64::new(x[self.k_diag(g, r) as usize], 0.0);
            for c in (r + 1)..s {
                let (re, im) = self.k_off(g, r, c);
                let z = C64::new(x[re as usize], x[im as usize]);
                k[(r, c)] = z;
                k[(c, r)] = z.conj();
            }
        }
        k
    }
}

/// A complete conic problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicProblem {
    pub nx: usize,
    pub vars: VarMap,
    pub blocks: Vec<PsdBlock>,
    pub eqs: Vec<LinearEq>,
    pub objective: Objective,
}

impl ConicProblem {
    /// Structural validation: indices in range, Hermitian diagonals real,
    /// equalities referencing declared variables.
    pub fn validate(&self) -> Result<()> {
        for b in &self.blocks {
            for t in &b.terms {
                if t.row > t.col || t.col as usize >= b.side {
                    return Err(DbdError::Dimension(format!(
                        "block {}: term at ({},{}) outside upper triangle",
                        b.name, t.row, t.col
                    )));
                }
                if t.var as usize >= self.nx {
                    return Err(DbdError::Dimension(format!(
                        "block {}: term references unknown variable {}",
                        b.name, t.var
                    )));
                }
                if t.row == t.col && t.coeff.im.abs() > 1e-12 {
                    return Err(DbdError::Dimension(format!(
                        "block {}: complex coefficient on diagonal ({},{})",
                        b.name, t.row, t.row
                    )));
                }
                if matches!(b.kind, BlockKind::RealSym) && t.coeff.im.abs() > 1e-12 {
                    return Err(DbdError::Dimension(format!(
                        "block {}: complex coefficient in real block",
                        b.name
                    )));
                }
            }
            for c in &b.constants {
                if c.row > c.col || c.col as usize >= b.side {
                    return Err(DbdError::Dimension(format!(
                        "block {}: constant at ({},{}) outside upper triangle",
                        b.name, c.row, c.col
                    )));
                }
            }
        }
        for (i, eq) in self.eqs.iter().enumerate() {
            if eq.terms.iter().any(|&(v, _)| v as usize >= self.nx) {
                return Err(DbdError::Dimension(format!(
                    "equality {i} references unknown variable"
                )));
            }
        }
        Ok(())
    }
}

/// Options for [`build_dual_sdp`].
#[derive(Debug, Clone, Default)]
pub struct SdpOptions {
    /// Regularization weight for the noisy variant. Defaults to the norm of
    /// the stored noise realization (the "known noise level" assumption).
    pub mu: Option<f64>,
}

/// Assemble the dual SDP for a scenario variant.
///
/// Reads only the scenario's dimensions, variant parameters and subspace
/// bases, never the true channels or coefficients.
///
/// Each emitter's sup-norm constraint becomes one LMI `[[K, C],[C^H, w I]]`
/// with its own Gram matrix and its own set of trace constraints; the dual
/// vector `q` is shared by every LMI through the coefficient block `C`.
pub fn build_dual_sdp(
    meas: &Measurement,
    scen: &Scenario,
    opts: &SdpOptions,
) -> Result<ConicProblem> {
    let grid = scen.grid();
    if meas.y.len() != grid.len() {
        return Err(DbdError::Dimension(format!(
            "measurement has {} samples, geometry needs {}",
            meas.y.len(),
            grid.len()
        )));
    }
    let m = grid.m();
    let pulses = grid.pulses();
    let k_side = m * pulses;
    let n_lmis = scen.radars.len() + scen.comms.len();
    let vars = VarMap { q_len: grid.len(), gram_sides: vec![k_side; n_lmis] };
    let nx = vars.nx();
    let nh = (m as i64 - 1) / 2;

    let rho = match scen.variant {
        Variant::Unsync { rho, .. } => rho,
        _ => 1.0,
    };

    struct LmiSpec<'a> {
        name: String,
        width: usize,
        diag: f64,
        // (basis matrix, per-sample row index fn marker: true = radar)
        basis: &'a nalgebra::DMatrix<C64>,
        radar_rows: bool,
    }
    let mut specs = Vec::new();
    for (e, radar) in scen.radars.iter().enumerate() {
        if radar.b.ncols() != radar.u.len() {
            return Err(DbdError::Dimension("radar basis width mismatch".into()));
        }
        specs.push(LmiSpec {
            name: format!("lmi_radar_{e}"),
            width: radar.u.len(),
            diag: rho * rho,
            basis: &radar.b,
            radar_rows: true,
        });
    }
    for (e, comms) in scen.comms.iter().enumerate() {
        if comms.d.ncols() != comms.v.len() {
            return Err(DbdError::Dimension("comms basis width mismatch".into()));
        }
        specs.push(LmiSpec {
            name: format!("lmi_comms_{e}"),
            width: comms.v.len(),
            diag: 1.0,
            basis: &comms.d,
            radar_rows: false,
        });
    }

    let mut blocks = Vec::new();
    let mut eqs = Vec::new();
    // congruence scaling D = diag(ks^{1/4} I, ks^{-1/4} I): the Gram block's
    // entries sit near 1/ks by the trace normalization while the identity
    // block sits at 1; the scaled LMI D S D >= 0 constrains the same set and
    // keeps the variable semantics, but balances the block for first-order
    // solvers
    let cs = (k_side as f64).sqrt();
    for (g, spec) in specs.iter().enumerate() {
        let mut terms = gram_terms_scaled(&vars, g, 0, cs);
        for s in grid.iter() {
            let gram_row = ((s.n + nh) as usize + m * s.pulse) as u32;
            let brow = if spec.radar_rows { s.ntilde % m } else { s.ntilde };
            for col in 0..spec.width {
                let b = spec.basis[(brow, col)];
                terms.push(BlockTerm {
                    row: gram_row,
                    col: (k_side + col) as u32,
                    var: vars.q_re(s.ntilde),
                    coeff: b,
                });
                terms.push(BlockTerm {
                    row: gram_row,
                    col: (k_side + col) as u32,
                    var: vars.q_im(s.ntilde),
                    coeff: C64::new(0.0, -1.0) * b,
                });
            }
        }
        let constants = (0..spec.width)
            .map(|a| BlockConst {
                row: (k_side + a) as u32,
                col: (k_side + a) as u32,
                value: C64::new(spec.diag / cs, 0.0),
            })
            .collect();
        blocks.push(PsdBlock {
            name: spec.name.clone(),
            side: k_side + spec.width,
            kind: BlockKind::Hermitian,
            terms,
            constants,
        });
        for (idx, rhs) in enumerate_trace_constraints(m, pulses) {
            let (re_row, im_row) = trace_rows(&vars, g, m, pulses, idx);
            eqs.push(LinearEq { terms: re_row, rhs });
            if !idx.is_origin() {
                eqs.push(LinearEq { terms: im_row, rhs: 0.0 });
            }
        }
    }

    let objective = match scen.variant {
        Variant::Noisy { .. } => {
            let mu = opts.mu.unwrap_or_else(|| meas.noise_norm());
            let mut linear = Vec::with_capacity(2 * grid.len());
            let mut quad = Vec::with_capacity(2 * grid.len());
            for nt in 0..grid.len() {
                linear.push((vars.q_re(nt), -meas.y[nt].re));
                linear.push((vars.q_im(nt), -meas.y[nt].im));
                quad.push((vars.q_re(nt), 2.0 * mu));
                quad.push((vars.q_im(nt), 2.0 * mu));
            }
            Objective { sense: Sense::Maximize, linear, quad_diag: quad, constant: 0.0 }
        }
        Variant::Unsync { .. } => {
            let mut linear = Vec::with_capacity(2 * grid.len());
            let mut quad = Vec::with_capacity(2 * grid.len());
            let mut y2 = 0.0;
            for nt in 0..grid.len() {
                linear.push((vars.q_re(nt), -meas.y[nt].re));
                linear.push((vars.q_im(nt), -meas.y[nt].im));
                quad.push((vars.q_re(nt), 1.0));
                quad.push((vars.q_im(nt), 1.0));
                y2 += meas.y[nt].norm_sqr();
            }
            Objective { sense: Sense::Minimize, linear, quad_diag: quad, constant: 0.5 * y2 }
        }
        _ => {
            let mut linear = Vec::with_capacity(2 * grid.len());
            for nt in 0..grid.len() {
                linear.push((vars.q_re(nt), -meas.y[nt].re));
                linear.push((vars.q_im(nt), -meas.y[nt].im));
            }
            Objective { sense: Sense::Maximize, linear, quad_diag: vec![], constant: 0.0 }
        }
    };

    let problem = ConicProblem { nx, vars, blocks, eqs, objective };
    problem.validate()?;
    Ok(problem)
}

/// Identity terms mapping Gram `g`'s parameters into rows/cols
/// `[at, at+side)` of a block.
#[cfg(test)]
fn gram_terms(vars: &VarMap, g: usize, at: usize) -> Vec<BlockTerm> {
    gram_terms_scaled(vars, g, at, 1.0)
}

fn gram_terms_scaled(vars: &VarMap, g: usize, at: usize, scale: f64) -> Vec<BlockTerm> {
    let s = vars.gram_sides[g];
    let mut terms = Vec::with_capacity(s * s);
    for r in 0..s {
        terms.push(BlockTerm {
            row: (at + r) as u32,
            col: (at + r) as u32,
            var: vars.k_diag(g, r),
            coeff: C64::new(scale, 0.0),
        });
        for c in (r + 1)..s {
            let (re, im) = vars.k_off(g, r, c);
            terms.push(BlockTerm {
                row: (at + r) as u32,
                col: (at + c) as u32,
                var: re,
                coeff: C64::new(scale, 0.0),
            });
            terms.push(BlockTerm {
                row: (at + r) as u32,
                col: (at + c) as u32,
                var: im,
                coeff: C64::new(0.0, scale),
            });
        }
    }
    terms
}

/// Real/imag equality rows of one Toeplitz class: the sum of `K[row, col]`
/// over ordered index pairs with `col - row` offset `(n1, n2)` equals the
/// class right-hand side.
fn trace_rows(
    vars: &VarMap,
    g: usize,
    m: usize,
    pulses: usize,
    idx: ToeplitzIndex,
) -> (Vec<(u32, f64)>, Vec<(u32, f64)>) {
    let mut re_row = Vec::new();
    let mut im_row = Vec::new();
    let nh = (m as i64 - 1) / 2;
    for p_row in 0..pulses as i64 {
        let p_col = p_row + idx.n2;
        if !(0..pulses as i64).contains(&p_col) {
            continue;
        }
        for n_row in -nh..=nh {
            let n_col = n_row + idx.n1;
            if !(-nh..=nh).contains(&n_col) {
                continue;
            }
            let row = ((n_row + nh) + m as i64 * p_row) as usize;
            let col = ((n_col + nh) + m as i64 * p_col) as usize;
            if row == col {
                re_row.push((vars.k_diag(g, row), 1.0));
            } else if row < col {
                let (re, im) = vars.k_off(g, row, col);
                re_row.push((re, 1.0));
                im_row.push((im, 1.0));
            } else {
                // entry below the diagonal: conjugate of the stored parameter
                let (re, im) = vars.k_off(g, col, row);
                re_row.push((re, 1.0));
                im_row.push((im, -1.0));
            }
        }
    }
    (re_row, im_row)
}

/// Replace each Hermitian block `H = A + jB` by the real symmetric
/// `[[A, -B], [B, A]]` of doubled side. Variables, equalities, objective and
/// solution extraction are untouched, so optima correspond exactly.
pub fn real_embedding(problem: &ConicProblem) -> ConicProblem {
    let mut out = problem.clone();
    for b in &mut out.blocks {
        if matches!(b.kind, BlockKind::RealSym) {
            continue;
        }
        let s = b.side as u32;
        let mut terms = Vec::with_capacity(4 * b.terms.len());
        for t in &b.terms {
            let (r, c, w) = (t.row, t.col, t.coeff);
            if r == c {
                terms.push(BlockTerm { row: r, col: c, var: t.var, coeff: C64::new(w.re, 0.0) });
                terms.push(BlockTerm {
                    row: r + s,
                    col: c + s,
                    var: t.var,
                    coeff: C64::new(w.re, 0.0),
                });
            } else {
                if w.re != 0.0 {
                    terms.push(BlockTerm {
                        row: r,
                        col: c,
                        var: t.var,
                        coeff: C64::new(w.re, 0.0),
                    });
                    terms.push(BlockTerm {
                        row: r + s,
                        col: c + s,
                        var: t.var,
                        coeff: C64::new(w.re, 0.0),
                    });
                }
                if w.im != 0.0 {
                    terms.push(BlockTerm {
                        row: r,
                        col: c + s,
                        var: t.var,
                        coeff: C64::new(-w.im, 0.0),
                    });
                    terms.push(BlockTerm {
                        row: c,
                        col: r + s,
                        var: t.var,
                        coeff: C64::new(w.im, 0.0),
                    });
                }
            }
        }
        let mut constants = Vec::with_capacity(4 * b.constants.len());
        for cst in &b.constants {
            let (r, c, w) = (cst.row, cst.col, cst.value);
            if r == c {
                constants.push(BlockConst { row: r, col: c, value: C64::new(w.re, 0.0) });
                constants.push(BlockConst { row: r + s, col: c + s, value: C64::new(w.re, 0.0) });
            } else {
                if w.re != 0.0 {
                    constants.push(BlockConst { row: r, col: c, value: C64::new(w.re, 0.0) });
                    constants
                        .push(BlockConst { row: r + s, col: c + s, value: C64::new(w.re, 0.0) });
                }
                if w.im != 0.0 {
                    constants.push(BlockConst { row: r, col: c + s, value: C64::new(-w.im, 0.0) });
                    constants.push(BlockConst { row: c, col: r + s, value: C64::new(w.im, 0.0) });
                }
            }
        }
        b.side *= 2;
        b.kind = BlockKind::RealSym;
        b.terms = terms;
        b.constants = constants;
    }
    out
}

/// Dense evaluation of a block's affine map at `x` (test and polish aid;
/// the solver keeps its own packed representation).
pub fn eval_block(b: &PsdBlock, x: &[f64]) -> nalgebra::DMatrix<C64> {
    let mut s = nalgebra::DMatrix::from_element(b.side, b.side, C64::new(0.0, 0.0));
    for t in &b.terms {
        let (r, c) = (t.row as usize, t.col as usize);
        let add = t.coeff * x[t.var as usize];
        s[(r, c)] += add;
        if r != c {
            s[(c, r)] += add.conj();
        }
    }
    for cst in &b.constants {
        let (r, c) = (cst.row as usize, cst.col as usize);
        s[(r, c)] += cst.value;
        if r != c {
            s[(c, r)] += cst.value.conj();
        }
    }
    s
}
