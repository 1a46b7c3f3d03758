use std::sync::Arc;

use rustfft::num_complex::Complex64;

use super::{check_penalty, E2Mode, ModelParams, SolverState};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::ops::{adjoint_conv, fft_plan, kernel_otf, Fft2d, KernelBank};

/// Smallest admissible `|e2 * e1_hat - 1|` before the solve is declared singular.
const SINGULAR_GUARD: f64 = 1e-12;

/// Precomputed Fourier-domain solver for the `(u, v)` block system
///
/// ```text
/// [ E1  I  ] [u]   [b1]      E1 = sum_m r_p K_m^T K_m + I
/// [ I   E2 ] [v] = [b2]      E2 = e2 I
/// ```
///
/// with `b1 = f + r_p sum_m K_m^T (p_m - lambda_hat_m)` and
/// `b2 = f + r_q (q - mu_hat)`. `E1` is diagonal in frequency, so
/// `u = (e2 E1 - I)^{-1} (e2 b1 - b2)` and `v = b1 - E1 u` cost two forward
/// and two inverse transforms.
#[derive(Debug, Clone)]
pub struct LssOperator {
    bank: KernelBank,
    r_p: f64,
    r_q: f64,
    e1_hat: Vec<f64>,
    e2: f64,
    plan: Arc<Fft2d>,
}

impl LssOperator {
    pub fn new(
        bank: &KernelBank,
        r_p: f64,
        r_q: f64,
        e2_mode: E2Mode,
        height: usize,
        width: usize,
    ) -> Result<Self> {
        check_penalty("r_p", r_p)?;
        check_penalty("r_q", r_q)?;
        let mut e1_hat = vec![1.0; height * width];
        for k in bank.iter() {
            let otf = kernel_otf(k, height, width)?;
            for (e, c) in e1_hat.iter_mut().zip(otf.values()) {
                *e += r_p * c.norm_sqr();
            }
        }
        let e2 = e2_mode.coefficient(r_q);
        if let Some(bad) = e1_hat.iter().find(|&&e| (e2 * e - 1.0).abs() < SINGULAR_GUARD) {
            return Err(Error::Numerical(format!(
                "singular (u, v) system: e2 * e1_hat - 1 = {:e}",
                e2 * bad - 1.0
            )));
        }
        Ok(LssOperator {
            bank: bank.clone(),
            r_p,
            r_q,
            e1_hat,
            e2,
            plan: fft_plan(height, width),
        })
    }

    pub fn bank(&self) -> &KernelBank {
        &self.bank
    }

    pub fn r_p(&self) -> f64 {
        self.r_p
    }

    pub fn r_q(&self) -> f64 {
        self.r_q
    }

    /// `1 + r_p sum_m |K_m^(w)|^2` per frequency bin, row-major.
    pub fn e1_hat(&self) -> &[f64] {
        &self.e1_hat
    }

    pub fn e2(&self) -> f64 {
        self.e2
    }

    /// Right-hand sides `(b1, b2)` for the current auxiliary state.
    pub fn rhs(&self, f: &Grid, state: &SolverState) -> Result<(Grid, Grid)> {
        state.validate(self.bank.width(), f.dims())?;
        let mut b1 = f.clone();
        for (m, k) in self.bank.iter().enumerate() {
            let d = state.p[m].sub(&state.lambda_hat[m])?;
            b1.add_scaled(self.r_p, &adjoint_conv(&d, k))?;
        }
        let mut b2 = f.clone();
        b2.add_scaled(self.r_q, &state.q.sub(&state.mu_hat)?)?;
        Ok((b1, b2))
    }

    pub fn solve(&self, f: &Grid, state: &SolverState) -> Result<(Grid, Grid)> {
        if f.dims() != self.plan.dims() {
            return Err(Error::Shape {
                expected: self.plan.dims(),
                actual: f.dims(),
            });
        }
        let (b1, b2) = self.rhs(f, state)?;
        let b1_hat = self.plan.forward(&b1);
        let b2_hat = self.plan.forward(&b2);
        let mut u_hat = Vec::with_capacity(b1_hat.len());
        let mut v_hat = Vec::with_capacity(b1_hat.len());
        for ((&e1, &c1), &c2) in self.e1_hat.iter().zip(&b1_hat).zip(&b2_hat) {
            let uh: Complex64 = (c1 * self.e2 - c2) / (self.e2 * e1 - 1.0);
            v_hat.push(c1 - uh * e1);
            u_hat.push(uh);
        }
        Ok((self.plan.inverse_real(u_hat), self.plan.inverse_real(v_hat)))
    }
}

/// Exact minimizer of the scaled augmented Lagrangian over `(u, v)` with
/// `(p, q, lambda_hat, mu_hat)` held at `state`.
pub fn lss_solve(
    f: &Grid,
    state: &SolverState,
    bank: &KernelBank,
    params: &ModelParams,
) -> Result<(Grid, Grid)> {
    params.validate(bank.width())?;
    let (h, w) = f.dims();
    LssOperator::new(bank, params.r_p, params.r_q, params.e2_mode, h, w)?.solve(f, state)
}
