use super::{DecompositionResult, ModelParams};
use crate::error::Result;
use crate::grid::Grid;
use crate::ops::{adjoint_conv, conv_periodic, KernelBank};

/// Optimality report for a final ADMM iterate. All entries are nonnegative
/// and vanish at a saddle point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KktReport {
    /// `max_m ||K_m u - p_m||_inf`
    pub feasibility_p: f64,
    /// `||v - q||_inf`
    pub feasibility_q: f64,
    /// `||(u + v - f) + r_p sum_m K_m^T (K_m u - p_m + lambda_hat_m)||_inf`
    pub stationarity_u: f64,
    /// Largest violation of `r_p lambda_hat_m in alpha_m d|p_m|`.
    pub multiplier_bound_p: f64,
    /// Largest violation of `r_q mu_hat in beta d|q|`.
    pub multiplier_bound_q: f64,
}

impl KktReport {
    pub fn fields(&self) -> [(&'static str, f64); 5] {
        [
            ("feasibility_p", self.feasibility_p),
            ("feasibility_q", self.feasibility_q),
            ("stationarity_u", self.stationarity_u),
            ("multiplier_bound_p", self.multiplier_bound_p),
            ("multiplier_bound_q", self.multiplier_bound_q),
        ]
    }

    pub fn max(&self) -> f64 {
        self.fields().iter().fold(0.0, |m, (_, v)| m.max(*v))
    }
}

pub fn kkt_check(
    result: &DecompositionResult,
    f: &Grid,
    bank: &KernelBank,
    params: &ModelParams,
) -> Result<KktReport> {
    let st = &result.state;
    st.validate(bank.width(), f.dims())?;
    let (u, v) = (&result.u, &result.v);

    let mut feasibility_p = 0.0f64;
    let mut multiplier_bound_p = 0.0f64;
    let mut grad_u = u.add(v)?.sub(f)?;
    for (m, k) in bank.iter().enumerate() {
        let ku = conv_periodic(u, k);
        feasibility_p = feasibility_p.max(ku.sub(&st.p[m])?.norm_inf());
        let gap = ku.sub(&st.p[m])?.add(&st.lambda_hat[m])?;
        grad_u.add_scaled(params.r_p, &adjoint_conv(&gap, k))?;
        multiplier_bound_p = multiplier_bound_p.max(subgradient_violation(
            &st.p[m],
            &st.lambda_hat[m],
            params.r_p,
            params.alphas[m],
        ));
    }

    Ok(KktReport {
        feasibility_p,
        feasibility_q: v.sub(&st.q)?.norm_inf(),
        stationarity_u: grad_u.norm_inf(),
        multiplier_bound_p,
        multiplier_bound_q: subgradient_violation(&st.q, &st.mu_hat, params.r_q, params.beta),
    })
}

/// Violation of `r * multiplier in weight * d|aux|`, pixelwise maximum.
fn subgradient_violation(aux: &Grid, multiplier: &Grid, r: f64, weight: f64) -> f64 {
    aux.as_slice()
        .iter()
        .zip(multiplier.as_slice())
        .map(|(&x, &y)| {
            let dual = r * y;
            if x != 0.0 {
                (dual - weight * x.signum()).abs()
            } else {
                (dual.abs() - weight).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inactive_q_has_no_violation() {
        let q = Grid::zeros(3, 3);
        let mu = Grid::from_fn(3, 3, |i, j| (i as f64 - j as f64) * 0.3);
        // |r mu| <= 0.07 * 0.6 < beta
        assert_eq!(subgradient_violation(&q, &mu, 0.07, 0.1), 0.0);
        assert!(subgradient_violation(&q, &mu, 1.0, 0.1) > 0.0);
    }

    #[test]
    fn on_support_requires_sign_match() {
        let mut q = Grid::zeros(2, 2);
        q[(0, 1)] = -0.5;
        let mut mu = Grid::zeros(2, 2);
        mu[(0, 1)] = -2.0;
        assert!(subgradient_violation(&q, &mu, 0.05, 0.1).abs() < 1e-15);
        mu[(0, 1)] = 2.0;
        assert!((subgradient_violation(&q, &mu, 0.05, 0.1) - 0.2).abs() < 1e-15);
    }
}
