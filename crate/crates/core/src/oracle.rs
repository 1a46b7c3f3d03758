//! Reference computations that share no code path with the solvers they
//! check: explicit dense matrices for the `(u, v)` system and a primal-dual
//! (Chambolle-Pock) solver for the decomposition model.

use nalgebra::{DMatrix, DVector};

use crate::admm::{ModelParams, SolverState};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::ops::{Kernel, KernelBank};

/// Dense `HW x HW` matrix of periodic correlation with `k`.
pub fn correlation_matrix(k: &Kernel, height: usize, width: usize) -> DMatrix<f64> {
    let n = height * width;
    let r = k.radius() as isize;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..height {
        for j in 0..width {
            for a in -r..=r {
                for b in -r..=r {
                    let t = k.get(a, b);
                    if t == 0.0 {
                        continue;
                    }
                    let si = (i as isize + a).rem_euclid(height as isize) as usize;
                    let sj = (j as isize + b).rem_euclid(width as isize) as usize;
                    m[(i * width + j, si * width + sj)] += t;
                }
            }
        }
    }
    m
}

fn to_vec(g: &Grid) -> DVector<f64> {
    DVector::from_column_slice(g.as_slice())
}

/// Solves the assembled `2HW x 2HW` `(u, v)` system by LU factorization.
pub fn dense_lss_solve(
    f: &Grid,
    state: &SolverState,
    bank: &KernelBank,
    params: &ModelParams,
) -> Result<(Grid, Grid)> {
    let (h, w) = f.dims();
    let n = h * w;
    let e2 = params.e2_mode.coefficient(params.r_q);
    let mut sys = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let mut b1 = to_vec(f);
    let b2 = to_vec(f) + (to_vec(&state.q) - to_vec(&state.mu_hat)) * params.r_q;
    let mut e1 = DMatrix::<f64>::identity(n, n);
    for (m, k) in bank.iter().enumerate() {
        let c = correlation_matrix(k, h, w);
        e1 += c.transpose() * &c * params.r_p;
        b1 += c.transpose() * (to_vec(&state.p[m]) - to_vec(&state.lambda_hat[m])) * params.r_p;
    }
    sys.view_mut((0, 0), (n, n)).copy_from(&e1);
    for d in 0..n {
        sys[(d, n + d)] = 1.0;
        sys[(n + d, d)] = 1.0;
        sys[(n + d, n + d)] = e2;
    }
    let mut rhs = DVector::zeros(2 * n);
    rhs.rows_mut(0, n).copy_from(&b1);
    rhs.rows_mut(n, n).copy_from(&b2);
    let sol = sys
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("dense system is singular".into()))?;
    Ok((
        Grid::from_vec(h, w, sol.rows(0, n).iter().copied().collect())?,
        Grid::from_vec(h, w, sol.rows(n, n).iter().copied().collect())?,
    ))
}

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub u: Grid,
    pub v: Grid,
    pub objective: f64,
    pub iterations: usize,
}

/// Minimizes the decomposition model with the primal-dual hybrid gradient
/// method.
///
/// `v` is eliminated in closed form (`v = S(f - u; beta)`), which turns the
/// fidelity and `beta ||v||_1` terms into a Huber function of `f - u`; the
/// method then alternates a projection of the dual variables onto
/// `|y_m| <= alpha_m` with the Huber proximal step. Iteration stops when the
/// best objective improves by less than `rel_tol` (relative) over a block
/// of `check_every` iterations, or after `max_iters`.
pub fn primal_dual_reference(
    f: &Grid,
    bank: &KernelBank,
    params: &ModelParams,
    max_iters: usize,
    rel_tol: f64,
) -> Result<ReferenceSolution> {
    params.validate(bank.width())?;
    let (h, w) = f.dims();
    let n = h * w;
    let stencils: Vec<Vec<(isize, isize, f64)>> = bank
        .iter()
        .map(|k| {
            let r = k.radius() as isize;
            let mut taps = Vec::new();
            for a in -r..=r {
                for b in -r..=r {
                    if k.get(a, b) != 0.0 {
                        taps.push((a, b, k.get(a, b)));
                    }
                }
            }
            taps
        })
        .collect();
    // ||K||^2 <= sum_m ||k_m||_1^2 (Young)
    let op_norm_sq: f64 = stencils
        .iter()
        .map(|t| t.iter().map(|x| x.2.abs()).sum::<f64>().powi(2))
        .sum::<f64>()
        .max(1e-12);
    let tau = 0.99 / op_norm_sq.sqrt();
    let sigma = tau;

    let idx = |i: usize, j: usize, a: isize, b: isize| {
        let si = (i as isize + a).rem_euclid(h as isize) as usize;
        let sj = (j as isize + b).rem_euclid(w as isize) as usize;
        si * w + sj
    };
    let fv = f.as_slice();
    let beta = params.beta;
    let objective = |u: &[f64]| -> f64 {
        let mut total = 0.0;
        for (m, taps) in stencils.iter().enumerate() {
            let mut l1 = 0.0;
            for i in 0..h {
                for j in 0..w {
                    let ku: f64 = taps.iter().map(|&(a, b, t)| t * u[idx(i, j, a, b)]).sum();
                    l1 += ku.abs();
                }
            }
            total += params.alphas[m] * l1;
        }
        for p in 0..n {
            let z = fv[p] - u[p];
            total += if z.abs() <= beta {
                0.5 * z * z
            } else {
                beta * z.abs() - 0.5 * beta * beta
            };
        }
        total
    };

    let mut u = fv.to_vec();
    let mut u_bar = u.clone();
    let mut y = vec![vec![0.0; n]; stencils.len()];
    let mut best_u = u.clone();
    let mut best = objective(&u);
    let mut block_start_best = best;
    let check_every = 2000;
    let mut iterations = 0;

    while iterations < max_iters {
        for (m, taps) in stencils.iter().enumerate() {
            let alpha = params.alphas[m];
            for i in 0..h {
                for j in 0..w {
                    let ku: f64 = taps.iter().map(|&(a, b, t)| t * u_bar[idx(i, j, a, b)]).sum();
                    let p = i * w + j;
                    y[m][p] = (y[m][p] + sigma * ku).clamp(-alpha, alpha);
                }
            }
        }
        let mut kty = vec![0.0; n];
        for (m, taps) in stencils.iter().enumerate() {
            for i in 0..h {
                for j in 0..w {
                    let yv = y[m][i * w + j];
                    for &(a, b, t) in taps {
                        kty[idx(i, j, a, b)] += t * yv;
                    }
                }
            }
        }
        for p in 0..n {
            let z = u[p] - tau * kty[p];
            let w0 = fv[p] - z;
            let wn = if w0.abs() <= beta * (1.0 + tau) {
                w0 / (1.0 + tau)
            } else {
                w0 - tau * beta * w0.signum()
            };
            let un = fv[p] - wn;
            u_bar[p] = 2.0 * un - u[p];
            u[p] = un;
        }
        iterations += 1;

        if iterations % 100 == 0 {
            let obj = objective(&u);
            if obj < best {
                best = obj;
                best_u.clone_from(&u);
            }
        }
        if iterations % check_every == 0 {
            if block_start_best - best <= rel_tol * best.abs().max(1.0) {
                break;
            }
            block_start_best = best;
        }
    }

    let u = Grid::from_vec(h, w, best_u)?;
    let v = f.sub(&u)?.map(|z| z.signum() * (z.abs() - beta).max(0.0));
    Ok(ReferenceSolution {
        u,
        v,
        objective: best,
        iterations,
    })
}
