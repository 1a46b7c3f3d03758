//! Scaled ADMM for the sparse decomposition model
//!
//! ```text
//! min_{u,v}  beta ||v||_1 + sum_m alpha_m ||K_m u||_1 + 1/2 ||u + v - f||_2^2
//! ```
//!
//! split as `p_m = K_m u`, `q = v` with scaled multipliers `lambda_hat_m`,
//! `mu_hat`. One iteration is an exact `(u, v)` solve in the Fourier domain
//! followed by shrinkage of `(p, q)` and the multiplier ascent.

mod avmu;
mod kkt;
mod lss;

use serde::{Deserialize, Serialize};

pub use avmu::{avmu_u, avmu_v};
pub use kkt::{kkt_check, KktReport};
pub use lss::{lss_solve, LssOperator};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridStack};
use crate::ops::{adjoint_conv, conv_periodic, KernelBank};

/// Which `v`-block coefficient the `(u, v)` solve uses.
///
/// `Corrected` is `(1 + r_q) I`, the exact minimizer of the scaled augmented
/// Lagrangian. `Paper` is `r_q I`, kept only to compare against that variant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum E2Mode {
    #[default]
    Corrected,
    Paper,
}

impl E2Mode {
    pub fn coefficient(self, r_q: f64) -> f64 {
        match self {
            E2Mode::Corrected => 1.0 + r_q,
            E2Mode::Paper => r_q,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub alphas: Vec<f64>,
    pub beta: f64,
    pub r_p: f64,
    pub r_q: f64,
    pub e2_mode: E2Mode,
}

impl ModelParams {
    pub fn new(alphas: Vec<f64>, beta: f64, r_p: f64, r_q: f64) -> Result<Self> {
        let params = ModelParams {
            alphas,
            beta,
            r_p,
            r_q,
            e2_mode: E2Mode::Corrected,
        };
        params.validate(params.alphas.len())?;
        Ok(params)
    }

    pub fn with_e2_mode(mut self, mode: E2Mode) -> Self {
        self.e2_mode = mode;
        self
    }

    pub fn validate(&self, bank_width: usize) -> Result<()> {
        if self.alphas.len() != bank_width {
            return Err(Error::validation(
                "alphas",
                format!("expected {bank_width} weights, got {}", self.alphas.len()),
            ));
        }
        if self.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::validation("alphas", "weights must be finite and >= 0"));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::validation("beta", "must be finite and >= 0"));
        }
        check_penalty("r_p", self.r_p)?;
        check_penalty("r_q", self.r_q)
    }
}

pub(crate) fn check_penalty(field: &str, r: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::validation(field, "penalty must be finite and > 0"));
    }
    Ok(())
}

/// One ADMM iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub p: GridStack,
    pub q: Grid,
    pub lambda_hat: GridStack,
    pub mu_hat: Grid,
    pub u: Grid,
    pub v: Grid,
    pub iteration: usize,
}

impl SolverState {
    pub fn zeros(m: usize, height: usize, width: usize) -> Self {
        SolverState {
            p: GridStack::zeros(m, height, width),
            q: Grid::zeros(height, width),
            lambda_hat: GridStack::zeros(m, height, width),
            mu_hat: Grid::zeros(height, width),
            u: Grid::zeros(height, width),
            v: Grid::zeros(height, width),
            iteration: 0,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.q.dims()
    }

    pub fn width(&self) -> usize {
        self.p.len()
    }

    pub(crate) fn validate(&self, m: usize, dims: (usize, usize)) -> Result<()> {
        if self.p.len() != m || self.lambda_hat.len() != m {
            return Err(Error::arg(format!(
                "state holds {} / {} auxiliary channels, bank has {m}",
                self.p.len(),
                self.lambda_hat.len()
            )));
        }
        for g in [&self.q, &self.mu_hat, &self.u, &self.v] {
            if g.dims() != dims {
                return Err(Error::Shape {
                    expected: dims,
                    actual: g.dims(),
                });
            }
        }
        for s in [&self.p, &self.lambda_hat] {
            if s.dims() != dims {
                return Err(Error::Shape {
                    expected: dims,
                    actual: s.dims(),
                });
            }
        }
        Ok(())
    }

    fn is_finite(&self) -> bool {
        self.p.is_finite()
            && self.lambda_hat.is_finite()
            && self.q.is_finite()
            && self.mu_hat.is_finite()
            && self.u.is_finite()
            && self.v.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub max_iters: usize,
    /// Stop once `max(primal_p, primal_q)` drops to this value.
    pub tol: Option<f64>,
}

impl StoppingRule {
    pub fn iterations(max_iters: usize) -> Self {
        StoppingRule {
            max_iters,
            tol: None,
        }
    }
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule::iterations(100)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub primal_p: f64,
    pub primal_q: f64,
    pub dual: f64,
}

#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub u: Grid,
    pub v: Grid,
    pub objective_trace: Vec<f64>,
    pub primal_residual_p: Vec<f64>,
    pub primal_residual_q: Vec<f64>,
    pub dual_residual: Vec<f64>,
    pub iterations_run: usize,
    pub kkt: KktReport,
    /// Final iterate, including auxiliary variables and multipliers.
    pub state: SolverState,
}

/// One full iteration: `(u, v)` solve, then both shrinkage/multiplier blocks.
pub(crate) fn iterate(
    f: &Grid,
    state: &SolverState,
    op: &LssOperator,
    alphas: &[f64],
    beta: f64,
) -> Result<SolverState> {
    let (u, v) = op.solve(f, state)?;
    let (p, lambda_hat) = avmu::update_p(&u, state, op.bank(), alphas, op.r_p())?;
    let (q, mu_hat) = avmu::update_q(&v, state, beta, op.r_q())?;
    let next = SolverState {
        p,
        q,
        lambda_hat,
        mu_hat,
        u,
        v,
        iteration: state.iteration + 1,
    };
    if !next.is_finite() {
        return Err(Error::Divergence {
            iteration: next.iteration,
        });
    }
    Ok(next)
}

pub fn admm_solve(
    f: &Grid,
    bank: &KernelBank,
    params: &ModelParams,
    stop: StoppingRule,
) -> Result<DecompositionResult> {
    params.validate(bank.width())?;
    if stop.max_iters == 0 {
        return Err(Error::arg("stopping rule needs at least one iteration"));
    }
    let (h, w) = f.dims();
    let op = LssOperator::new(bank, params.r_p, params.r_q, params.e2_mode, h, w)?;

    let mut state = SolverState::zeros(bank.width(), h, w);
    let mut objective_trace = Vec::with_capacity(stop.max_iters);
    let mut primal_p = Vec::with_capacity(stop.max_iters);
    let mut primal_q = Vec::with_capacity(stop.max_iters);
    let mut dual = Vec::with_capacity(stop.max_iters);

    for _ in 0..stop.max_iters {
        let next = iterate(f, &state, &op, &params.alphas, params.beta)?;
        let res = residuals(&state, &next, bank, params)?;
        objective_trace.push(objective(&next.u, &next.v, f, bank, params)?);
        primal_p.push(res.primal_p);
        primal_q.push(res.primal_q);
        dual.push(res.dual);
        state = next;
        if let Some(tol) = stop.tol {
            if res.primal_p.max(res.primal_q) <= tol {
                break;
            }
        }
    }

    let mut result = DecompositionResult {
        u: state.u.clone(),
        v: state.v.clone(),
        iterations_run: state.iteration,
        objective_trace,
        primal_residual_p: primal_p,
        primal_residual_q: primal_q,
        dual_residual: dual,
        kkt: KktReport::default(),
        state,
    };
    result.kkt = kkt_check(&result, f, bank, params)?;
    Ok(result)
}

/// `beta ||v||_1 + sum_m alpha_m ||K_m u||_1 + 1/2 ||u + v - f||^2`.
pub fn objective(u: &Grid, v: &Grid, f: &Grid, bank: &KernelBank, params: &ModelParams) -> Result<f64> {
    params.validate(bank.width())?;
    u.ensure_same_dims(v)?;
    u.ensure_same_dims(f)?;
    let reg: f64 = bank
        .iter()
        .zip(&params.alphas)
        .map(|(k, a)| a * conv_periodic(u, k).norm1())
        .sum();
    let r = u.add(v)?.sub(f)?;
    let fit = r.inner(&r)?;
    Ok(params.beta * v.norm1() + reg + 0.5 * fit)
}

/// Scaled augmented Lagrangian at `(u, v)` with the auxiliary variables and
/// multipliers taken from `state`.
pub fn augmented_lagrangian(
    u: &Grid,
    v: &Grid,
    state: &SolverState,
    f: &Grid,
    bank: &KernelBank,
    params: &ModelParams,
) -> Result<f64> {
    params.validate(bank.width())?;
    state.validate(bank.width(), f.dims())?;
    u.ensure_same_dims(f)?;
    v.ensure_same_dims(f)?;
    let (r_p, r_q) = (params.r_p, params.r_q);

    let q_gap = v.sub(&state.q)?.add(&state.mu_hat)?;
    let mut total = params.beta * state.q.norm1() + 0.5 * r_q * q_gap.norm2().powi(2)
        - 0.5 * r_q * state.mu_hat.norm2().powi(2);
    for (m, k) in bank.iter().enumerate() {
        let gap = conv_periodic(u, k).sub(&state.p[m])?.add(&state.lambda_hat[m])?;
        total += params.alphas[m] * state.p[m].norm1() + 0.5 * r_p * gap.norm2().powi(2)
            - 0.5 * r_p * state.lambda_hat[m].norm2().powi(2);
    }
    total += 0.5 * u.add(v)?.sub(f)?.norm2().powi(2);
    Ok(total)
}

/// Analytic `(u, v)`-gradient of the scaled augmented Lagrangian.
pub fn lagrangian_gradient(
    u: &Grid,
    v: &Grid,
    state: &SolverState,
    f: &Grid,
    bank: &KernelBank,
    params: &ModelParams,
) -> Result<(Grid, Grid)> {
    state.validate(bank.width(), f.dims())?;
    let fit = u.add(v)?.sub(f)?;
    let mut grad_u = fit.clone();
    for (m, k) in bank.iter().enumerate() {
        let gap = conv_periodic(u, k).sub(&state.p[m])?.add(&state.lambda_hat[m])?;
        grad_u.add_scaled(params.r_p, &adjoint_conv(&gap, k))?;
    }
    let mut grad_v = fit;
    grad_v.add_scaled(params.r_q, &v.sub(&state.q)?.add(&state.mu_hat)?)?;
    Ok((grad_u, grad_v))
}

/// Primal residuals of consecutive iterates and the dual residual.
pub fn residuals(
    prev: &SolverState,
    next: &SolverState,
    bank: &KernelBank,
    params: &ModelParams,
) -> Result<Residuals> {
    let mut primal_p = 0.0f64;
    let mut dual_p = 0.0f64;
    for (m, k) in bank.iter().enumerate() {
        primal_p = primal_p.max(conv_periodic(&next.u, k).sub(&next.p[m])?.norm2());
        let dp = next.p[m].sub(&prev.p[m])?;
        dual_p = dual_p.max(adjoint_conv(&dp, k).norm2());
    }
    let primal_q = next.v.sub(&next.q)?.norm2();
    let dual = params.r_p * dual_p + params.r_q * next.q.sub(&prev.q)?.norm2();
    Ok(Residuals {
        primal_p,
        primal_q,
        dual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::make_diff_bank;

    fn reference_params() -> ModelParams {
        ModelParams::new(vec![0.6, 0.6], 0.1, 0.07, 0.07).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(vec![0.1], 0.1, 0.0, 0.07).is_err());
        assert!(ModelParams::new(vec![0.1], 0.1, 0.07, -1.0).is_err());
        assert!(ModelParams::new(vec![-0.1], 0.1, 0.07, 0.07).is_err());
        assert!(ModelParams::new(vec![0.1], f64::NAN, 0.07, 0.07).is_err());
        let p = ModelParams::new(vec![0.0, 0.0], 0.0, 0.07, 0.07).unwrap();
        let err = p.validate(3).unwrap_err();
        assert!(err.to_string().contains("alphas"));
    }

    #[test]
    fn objective_examples() {
        let bank = make_diff_bank(2, 1).unwrap();
        let params = reference_params();
        let z = Grid::zeros(4, 4);
        assert_eq!(objective(&z, &z, &z, &bank, &params).unwrap(), 0.0);
        let c = Grid::filled(4, 4, 0.8);
        assert_eq!(objective(&c, &z, &c, &bank, &params).unwrap(), 0.0);
        let mut f = Grid::zeros(4, 4);
        f[(0, 0)] = 1.0;
        f[(2, 3)] = -1.0;
        assert_eq!(objective(&z, &z, &f, &bank, &params).unwrap(), 1.0);
    }

    #[test]
    fn lagrangian_reduces_to_objective() {
        let bank = make_diff_bank(2, 1).unwrap();
        let params = reference_params();
        let z = Grid::zeros(5, 5);
        let zero_state = SolverState::zeros(2, 5, 5);
        assert_eq!(
            augmented_lagrangian(&z, &z, &zero_state, &z, &bank, &params).unwrap(),
            0.0
        );

        let u = Grid::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.1);
        let v = Grid::from_fn(5, 5, |i, j| if i == j { 0.4 } else { 0.0 });
        let f = Grid::from_fn(5, 5, |i, j| (i + j) as f64 * 0.05);
        let mut state = SolverState::zeros(2, 5, 5);
        state.p = GridStack::new(bank.iter().map(|k| conv_periodic(&u, k)).collect()).unwrap();
        state.q = v.clone();
        let al = augmented_lagrangian(&u, &v, &state, &f, &bank, &params).unwrap();
        let obj = objective(&u, &v, &f, &bank, &params).unwrap();
        assert!((al - obj).abs() < 1e-12);
    }

    #[test]
    fn zero_image_stays_zero() {
        let bank = make_diff_bank(2, 1).unwrap();
        let f = Grid::zeros(6, 6);
        let res = admm_solve(&f, &bank, &reference_params(), StoppingRule::iterations(10)).unwrap();
        assert_eq!(res.u, f);
        assert_eq!(res.v, f);
        assert!(res.objective_trace.iter().all(|&o| o == 0.0));
        assert_eq!(res.iterations_run, 10);
        assert_eq!(res.objective_trace.len(), 10);
    }

    #[test]
    fn constant_image_is_a_fixed_point() {
        let bank = make_diff_bank(2, 1).unwrap();
        let f = Grid::filled(6, 8, 0.45);
        let res = admm_solve(&f, &bank, &reference_params(), StoppingRule::iterations(5)).unwrap();
        assert!(res.u.sub(&f).unwrap().norm_inf() < 1e-14);
        assert!(res.v.norm_inf() < 1e-14);
        for trace in [&res.primal_residual_p, &res.primal_residual_q, &res.dual_residual] {
            assert!(trace.iter().all(|&r| r < 1e-13));
        }
        let k = &res.kkt;
        for x in [
            k.feasibility_p,
            k.feasibility_q,
            k.stationarity_u,
            k.multiplier_bound_p,
            k.multiplier_bound_q,
        ] {
            assert!(x < 1e-13);
        }
    }

    #[test]
    fn tolerance_stops_early() {
        let bank = make_diff_bank(2, 1).unwrap();
        let f = Grid::filled(6, 6, 0.2);
        let stop = StoppingRule {
            max_iters: 50,
            tol: Some(1e-8),
        };
        let res = admm_solve(&f, &bank, &reference_params(), stop).unwrap();
        assert_eq!(res.iterations_run, 1);
        assert_eq!(res.objective_trace.len(), 1);
    }

    #[test]
    fn zero_iterations_rejected() {
        let bank = make_diff_bank(2, 1).unwrap();
        let f = Grid::zeros(4, 4);
        assert!(admm_solve(&f, &bank, &reference_params(), StoppingRule::iterations(0)).is_err());
    }

    #[test]
    fn first_iteration_residual_recomputed() {
        let bank = make_diff_bank(2, 1).unwrap();
        let params = reference_params();
        let f = Grid::from_fn(8, 8, |i, j| if (2..5).contains(&i) && j > 3 { 0.7 } else { 0.1 });
        let res = admm_solve(&f, &bank, &params, StoppingRule::iterations(1)).unwrap();
        let st = &res.state;
        let expect = bank
            .iter()
            .enumerate()
            .map(|(m, k)| {
                let ku = conv_periodic(&st.u, k);
                ku.as_slice()
                    .iter()
                    .zip(st.p[m].as_slice())
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        assert!((res.primal_residual_p[0] - expect).abs() < 1e-14);
        assert!(expect > 0.0);
    }
}
