//! Dense log-barrier interior-point reference solver.
//!
//! A deliberately simple second solver for cross-validating the ADMM engine
//! on small instances: path following on
//! `t * f0(x) - sum_i log det S_i(x)` subject to the equality rows, with
//! damped Newton steps. Dense Hessians make it cubic in `nx`, so it is only
//! suitable for problems with a few hundred variables.

use nalgebra::{DMatrix, DVector};

use crate::sdp::{ConicProblem, PsdBlock};
use crate::util::C64;
use crate::{DbdError, Result};

/// Expanded component list of one term's symmetrization:
/// `(r, c, w)` meaning `w * e_r e_c^H` contributes to the block.
fn components(b: &PsdBlock) -> Vec<(usize, Vec<(u32, u32, C64)>)> {
    // grouped by variable: var -> list of matrix components
    use std::collections::BTreeMap;
    let mut map: BTreeMap<usize, Vec<(u32, u32, C64)>> = BTreeMap::new();
    for t in &b.terms {
        let list = map.entry(t.var as usize).or_default();
        list.push((t.row, t.col, t.coeff));
        if t.row != t.col {
            list.push((t.col, t.row, t.coeff.conj()));
        }
    }
    map.into_iter().collect()
}

fn eval_block_dense(b: &PsdBlock, x: &[f64]) -> DMatrix<C64> {
    crate::sdp::eval_block(b, x)
}

/// Hermitian Cholesky with strict positive-pivot checks (nalgebra's complex
/// Cholesky does not reject indefinite inputs). Returns the lower factor.
fn chol_pd(m: &DMatrix<C64>) -> Option<DMatrix<C64>> {
    let n = m.nrows();
    let mut l = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for j in 0..n {
        let mut diag = m[(j, j)].re;
        for k in 0..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if !(diag > 0.0) || m[(j, j)].im.abs() > 1e-9 * (1.0 + m[(j, j)].re.abs()) {
            return None;
        }
        let d = diag.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut acc = m[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / d;
        }
    }
    Some(l)
}

/// Inverse of a Hermitian PD matrix from its lower Cholesky factor.
fn chol_inverse(l: &DMatrix<C64>) -> DMatrix<C64> {
    let n = l.nrows();
    // solve L W = I, then S^{-1} = W^H W
    let mut w = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for col in 0..n {
        for i in 0..n {
            let mut acc = if i == col { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            for k in 0..i {
                acc -= l[(i, k)] * w[(k, col)];
            }
            w[(i, col)] = acc / l[(i, i)].re;
        }
    }
    let mut inv = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for r in 0..n {
        for c in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in r.max(c)..n {
                acc += w[(k, r)].conj() * w[(k, c)];
            }
            inv[(r, c)] = acc;
        }
    }
    inv
}

/// Minimize the problem to tolerance `tol` (duality-gap style bound from the
/// barrier parameter). Returns the objective in the original sense and the
/// solved variable vector.
pub fn solve_reference(problem: &ConicProblem, tol: f64) -> Result<(f64, Vec<f64>)> {
    problem.validate()?;
    let nx = problem.nx;
    let m_rows = problem.eqs.len();

    // strictly feasible start: min-norm solution of the equality rows
    // (disjoint rows assumed, which holds for the trace classes); error out
    // if any block is not PD there.
    let mut x = vec![0.0f64; nx];
    for eq in &problem.eqs {
        let wn: f64 = eq.terms.iter().map(|&(_, w)| w * w).sum();
        if wn == 0.0 {
            if eq.rhs != 0.0 {
                return Err(DbdError::Solver("inconsistent empty equality row".into()));
            }
            continue;
        }
        for &(v, w) in &eq.terms {
            x[v as usize] += eq.rhs * w / wn;
        }
    }
    let block_comps: Vec<Vec<(usize, Vec<(u32, u32, C64)>)>> =
        problem.blocks.iter().map(components).collect();
    for b in &problem.blocks {
        let s = eval_block_dense(b, &x);
        if chol_pd(&s).is_none() {
            return Err(DbdError::Solver(format!(
                "reference solver: start point not interior for block {}",
                b.name
            )));
        }
    }

    let mut c = vec![0.0f64; nx];
    for &(v, w) in &problem.objective.linear {
        c[v as usize] += w;
    }
    let mut qd = vec![0.0f64; nx];
    for &(v, w) in &problem.objective.quad_diag {
        qd[v as usize] += w;
    }

    let total_side: usize = problem.blocks.iter().map(|b| b.side).sum();
    let mut t = 1.0f64;
    let t_max = (total_side as f64 / tol).max(1.0);

    while t <= t_max * 10.0 {
        // Newton iterations at fixed t
        for _newton in 0..60 {
            // gradient and Hessian
            let mut grad = DVector::from_fn(nx, |i, _| t * (c[i] + qd[i] * x[i]));
            let mut hess = DMatrix::zeros(nx, nx);
            for i in 0..nx {
                hess[(i, i)] += t * qd[i];
            }
            for (b, comps) in problem.blocks.iter().zip(&block_comps) {
                let s = eval_block_dense(b, &x);
                let l = chol_pd(&s).ok_or_else(|| {
                    DbdError::Solver("reference solver left the cone interior".into())
                })?;
                let sinv = chol_inverse(&l);
                // grad -= E^*(S^{-1})
                for (var, comp) in comps {
                    let mut acc = 0.0;
                    for &(r, cc, w) in comp {
                        acc += (w * sinv[(cc as usize, r as usize)]).re;
                    }
                    grad[*var] -= acc;
                }
                // hess += E^*(S^{-1} (.) S^{-1})
                for (ia, (va, ca)) in comps.iter().enumerate() {
                    for (vb, cb) in comps.iter().skip(ia) {
                        let mut acc = C64::new(0.0, 0.0);
                        for &(r1, c1, w1) in ca {
                            for &(r2, c2, w2) in cb {
                                acc += w1
                                    * w2
                                    * sinv[(c1 as usize, r2 as usize)]
                                    * sinv[(c2 as usize, r1 as usize)];
                            }
                        }
                        hess[(*va, *vb)] += acc.re;
                        if va != vb {
                            hess[(*vb, *va)] += acc.re;
                        }
                    }
                }
            }

            // KKT system with equality rows
            let dim = nx + m_rows;
            let mut kkt = DMatrix::zeros(dim, dim);
            kkt.view_mut((0, 0), (nx, nx)).copy_from(&hess);
            for (j, eq) in problem.eqs.iter().enumerate() {
                for &(v, w) in &eq.terms {
                    kkt[(v as usize, nx + j)] = w;
                    kkt[(nx + j, v as usize)] = w;
                }
            }
            let mut rhs = DVector::zeros(dim);
            for i in 0..nx {
                rhs[i] = -grad[i];
            }
            for (j, eq) in problem.eqs.iter().enumerate() {
                let mut acc = eq.rhs;
                for &(v, w) in &eq.terms {
                    acc -= w * x[v as usize];
                }
                rhs[nx + j] = acc;
            }
            let sol = kkt
                .lu()
                .solve(&rhs)
                .ok_or_else(|| DbdError::Solver("reference KKT solve failed".into()))?;
            let step: Vec<f64> = sol.as_slice()[..nx].to_vec();
            let decrement: f64 = (0..nx).map(|i| -grad[i] * step[i]).sum::<f64>().max(0.0);

            // backtracking line search staying inside the cone
            let mut alpha = 1.0f64;
            'ls: for _ in 0..60 {
                let trial: Vec<f64> =
                    x.iter().zip(&step).map(|(xv, sv)| xv + alpha * sv).collect();
                for b in &problem.blocks {
                    if chol_pd(&eval_block_dense(b, &trial)).is_none() {
                        alpha *= 0.5;
                        continue 'ls;
                    }
                }
                x = trial;
                break;
            }
            if decrement.sqrt() < 1e-9 {
                break;
            }
        }
        if total_side as f64 / t < tol {
            break;
        }
        t *= 10.0;
    }

    Ok((problem.objective.value(&x), x))
}
