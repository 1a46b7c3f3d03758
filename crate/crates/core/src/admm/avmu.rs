//! Shrinkage of the auxiliary variables and the scaled multiplier ascent.

use super::{ModelParams, SolverState};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridStack};
use crate::ops::{conv_periodic, soft_threshold_grid, KernelBank};

/// `p_m = S(K_m u + lambda_hat_m; alpha_m / r_p)`,
/// `lambda_hat_m += K_m u - p_m`.
pub fn avmu_u(
    u_new: &Grid,
    state: &SolverState,
    bank: &KernelBank,
    params: &ModelParams,
) -> Result<(GridStack, GridStack)> {
    params.validate(bank.width())?;
    state.validate(bank.width(), u_new.dims())?;
    update_p(u_new, state, bank, &params.alphas, params.r_p)
}

/// `q = S(v + mu_hat; beta / r_q)`, `mu_hat += v - q`.
pub fn avmu_v(v_new: &Grid, state: &SolverState, params: &ModelParams) -> Result<(Grid, Grid)> {
    if !(params.beta >= 0.0) {
        return Err(Error::validation("beta", "must be >= 0"));
    }
    super::check_penalty("r_q", params.r_q)?;
    state.validate(state.width(), v_new.dims())?;
    update_q(v_new, state, params.beta, params.r_q)
}

pub(crate) fn update_p(
    u: &Grid,
    state: &SolverState,
    bank: &KernelBank,
    alphas: &[f64],
    r_p: f64,
) -> Result<(GridStack, GridStack)> {
    let mut ps = Vec::with_capacity(bank.width());
    let mut lambdas = Vec::with_capacity(bank.width());
    for (m, k) in bank.iter().enumerate() {
        let e = conv_periodic(u, k);
        let (p, lambda) = shrink_and_ascend(&e, &state.lambda_hat[m], alphas[m] / r_p)?;
        ps.push(p);
        lambdas.push(lambda);
    }
    Ok((GridStack::new(ps)?, GridStack::new(lambdas)?))
}

pub(crate) fn update_q(v: &Grid, state: &SolverState, beta: f64, r_q: f64) -> Result<(Grid, Grid)> {
    shrink_and_ascend(v, &state.mu_hat, beta / r_q)
}

fn shrink_and_ascend(e: &Grid, multiplier: &Grid, gamma: f64) -> Result<(Grid, Grid)> {
    let aux = soft_threshold_grid(&e.add(multiplier)?, gamma)?;
    let next = multiplier.add(e)?.sub(&aux)?;
    Ok((aux, next))
}
