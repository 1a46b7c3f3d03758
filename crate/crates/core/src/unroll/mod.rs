//! Unrolled forward engine: `L` ADMM iterations as network layers, each
//! with its own kernel bank and thresholds and shared penalties `r_p, r_q`.
//!
//! The auxiliary variables and multipliers `(p, q, lambda_hat, mu_hat)`
//! flow from layer to layer; the `(u, v)` produced inside a layer does not.
//! The network output is the last layer's `(u, v)`.

mod bundle;

pub use bundle::{load_bundle, read_bundle, save_bundle, write_bundle, BUNDLE_VERSION};

use crate::admm::{
    check_penalty, iterate, objective, residuals, E2Mode, LssOperator, ModelParams, SolverState,
};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::ops::{make_diff_bank, KernelBank};

/// Penalties and thresholds used by [`ParameterBundle::init_default`].
pub const DEFAULT_PENALTY: f64 = 0.07;
pub const DEFAULT_BETA: f64 = 0.07;
pub const DEFAULT_ALPHA_SUM: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterBundle {
    width: usize,
    depth: usize,
    radius: usize,
    pub(crate) r_p: f64,
    pub(crate) r_q: f64,
    pub(crate) e2_mode: E2Mode,
    pub(crate) layer_kernels: Vec<KernelBank>,
    pub(crate) layer_alphas: Vec<Vec<f64>>,
    pub(crate) layer_betas: Vec<f64>,
}

impl ParameterBundle {
    /// Checked constructor; every layer must carry `width` kernels of radius `radius`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        width: usize,
        depth: usize,
        radius: usize,
        r_p: f64,
        r_q: f64,
        e2_mode: E2Mode,
        layer_kernels: Vec<KernelBank>,
        layer_alphas: Vec<Vec<f64>>,
        layer_betas: Vec<f64>,
    ) -> Result<Self> {
        let b = ParameterBundle {
            width,
            depth,
            radius,
            r_p,
            r_q,
            e2_mode,
            layer_kernels,
            layer_alphas,
            layer_betas,
        };
        b.validate()?;
        Ok(b)
    }

    /// Difference-kernel initialization: `alpha = 1.5 / M`, `beta = 0.07`,
    /// `r_p = r_q = 0.07` in every layer.
    pub fn init_default(width: usize, depth: usize, radius: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::arg("bundle depth must be at least 1"));
        }
        let bank = make_diff_bank(width, radius)?;
        let alpha = DEFAULT_ALPHA_SUM / width as f64;
        Self::new(
            width,
            depth,
            radius,
            DEFAULT_PENALTY,
            DEFAULT_PENALTY,
            E2Mode::Corrected,
            vec![bank; depth],
            vec![vec![alpha; width]; depth],
            vec![DEFAULT_BETA; depth],
        )
    }

    /// Bundle whose layers all share `bank` and `params`; its forward pass is
    /// the solver truncated at `depth` iterations.
    pub fn constant(bank: &KernelBank, params: &ModelParams, depth: usize) -> Result<Self> {
        params.validate(bank.width())?;
        if depth == 0 {
            return Err(Error::arg("bundle depth must be at least 1"));
        }
        Self::new(
            bank.width(),
            depth,
            bank.radius(),
            params.r_p,
            params.r_q,
            params.e2_mode,
            vec![bank.clone(); depth],
            vec![params.alphas.clone(); depth],
            vec![params.beta; depth],
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::validation("M", "must be positive"));
        }
        if self.depth == 0 {
            return Err(Error::validation("L", "must be positive"));
        }
        check_penalty("r_p", self.r_p)?;
        check_penalty("r_q", self.r_q)?;
        if self.layer_kernels.len() != self.depth {
            return Err(Error::validation(
                "layer_kernels",
                format!("expected {} layers, got {}", self.depth, self.layer_kernels.len()),
            ));
        }
        for (l, bank) in self.layer_kernels.iter().enumerate() {
            if bank.width() != self.width || bank.radius() != self.radius {
                return Err(Error::validation(
                    format!("layer_kernels[{l}]"),
                    format!(
                        "expected {} kernels of radius {}, got {} of radius {}",
                        self.width,
                        self.radius,
                        bank.width(),
                        bank.radius()
                    ),
                ));
            }
        }
        if self.layer_alphas.len() != self.depth {
            return Err(Error::validation(
                "layer_alphas",
                format!("expected {} layers, got {}", self.depth, self.layer_alphas.len()),
            ));
        }
        for (l, alphas) in self.layer_alphas.iter().enumerate() {
            if alphas.len() != self.width {
                return Err(Error::validation(
                    format!("layer_alphas[{l}]"),
                    format!("expected {} weights, got {}", self.width, alphas.len()),
                ));
            }
            if alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                return Err(Error::validation(
                    format!("layer_alphas[{l}]"),
                    "weights must be finite and >= 0",
                ));
            }
        }
        if self.layer_betas.len() != self.depth {
            return Err(Error::validation(
                "layer_betas",
                format!("expected {} values, got {}", self.depth, self.layer_betas.len()),
            ));
        }
        if self.layer_betas.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::validation("layer_betas", "values must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn r_p(&self) -> f64 {
        self.r_p
    }

    pub fn r_q(&self) -> f64 {
        self.r_q
    }

    pub fn e2_mode(&self) -> E2Mode {
        self.e2_mode
    }

    pub fn set_e2_mode(&mut self, mode: E2Mode) {
        self.e2_mode = mode;
    }

    pub fn layer_kernels(&self) -> &[KernelBank] {
        &self.layer_kernels
    }

    pub fn layer_alphas(&self) -> &[Vec<f64>] {
        &self.layer_alphas
    }

    pub fn layer_betas(&self) -> &[f64] {
        &self.layer_betas
    }

    /// Layer `l` expressed as solver parameters.
    pub fn layer_params(&self, l: usize) -> ModelParams {
        ModelParams {
            alphas: self.layer_alphas[l].clone(),
            beta: self.layer_betas[l],
            r_p: self.r_p,
            r_q: self.r_q,
            e2_mode: self.e2_mode,
        }
    }

    pub fn get_scalar(&self, s: BundleScalar) -> Result<f64> {
        self.check_scalar(s)?;
        Ok(match s {
            BundleScalar::Rp => self.r_p,
            BundleScalar::Rq => self.r_q,
            BundleScalar::Alpha { layer, m } => self.layer_alphas[layer][m],
            BundleScalar::Beta { layer } => self.layer_betas[layer],
            BundleScalar::KernelTap { layer, m, row, col } => {
                let k = &self.layer_kernels[layer].kernels()[m];
                k.taps()[row * k.side() + col]
            }
        })
    }

    /// Copy of the bundle with one scalar replaced; the result is revalidated.
    pub fn with_scalar(&self, s: BundleScalar, value: f64) -> Result<Self> {
        self.check_scalar(s)?;
        let mut b = self.clone();
        match s {
            BundleScalar::Rp => b.r_p = value,
            BundleScalar::Rq => b.r_q = value,
            BundleScalar::Alpha { layer, m } => b.layer_alphas[layer][m] = value,
            BundleScalar::Beta { layer } => b.layer_betas[layer] = value,
            BundleScalar::KernelTap { layer, m, row, col } => {
                let mut kernels = b.layer_kernels[layer].clone().into_kernels();
                let side = kernels[m].side();
                kernels[m].taps_mut()[row * side + col] = value;
                b.layer_kernels[layer] = KernelBank::new(kernels)?;
            }
        }
        b.validate()?;
        Ok(b)
    }

    fn check_scalar(&self, s: BundleScalar) -> Result<()> {
        let side = 2 * self.radius + 1;
        let ok = match s {
            BundleScalar::Rp | BundleScalar::Rq => true,
            BundleScalar::Alpha { layer, m } => layer < self.depth && m < self.width,
            BundleScalar::Beta { layer } => layer < self.depth,
            BundleScalar::KernelTap { layer, m, row, col } => {
                layer < self.depth && m < self.width && row < side && col < side
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::arg(format!("{s:?} is out of range for this bundle")))
        }
    }
}

/// Address of a single scalar parameter inside a bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BundleScalar {
    Rp,
    Rq,
    Alpha { layer: usize, m: usize },
    Beta { layer: usize },
    KernelTap { layer: usize, m: usize, row: usize, col: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSnapshot {
    pub u: Grid,
    pub v: Grid,
    /// `max_m ||K_m u - p_m||_2`
    pub primal_p: f64,
    /// `||v - q||_2`
    pub primal_q: f64,
    pub dual: f64,
    /// Model objective at `(u, v)` under this layer's kernels and weights.
    pub objective: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayerTrace {
    pub layers: Vec<LayerSnapshot>,
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub u: Grid,
    pub v: Grid,
    pub trace: Option<LayerTrace>,
}

pub fn idnet_forward(f: &Grid, bundle: &ParameterBundle, trace: bool) -> Result<ForwardOutput> {
    bundle.validate()?;
    let (h, w) = f.dims();
    let mut state = SolverState::zeros(bundle.width(), h, w);
    let mut snapshots = trace.then(|| Vec::with_capacity(bundle.depth()));
    let mut op: Option<LssOperator> = None;

    for l in 0..bundle.depth() {
        let bank = &bundle.layer_kernels[l];
        // Rebuild the Fourier tables only when the kernels change.
        if op.as_ref().is_none_or(|o| o.bank() != bank) {
            op = Some(LssOperator::new(bank, bundle.r_p, bundle.r_q, bundle.e2_mode, h, w)?);
        }
        let layer_op = op.as_ref().expect("operator built above");
        let next = iterate(f, &state, layer_op, &bundle.layer_alphas[l], bundle.layer_betas[l])?;
        if let Some(snaps) = snapshots.as_mut() {
            let params = bundle.layer_params(l);
            let res = residuals(&state, &next, bank, &params)?;
            snaps.push(LayerSnapshot {
                u: next.u.clone(),
                v: next.v.clone(),
                primal_p: res.primal_p,
                primal_q: res.primal_q,
                dual: res.dual,
                objective: objective(&next.u, &next.v, f, bank, &params)?,
            });
        }
        state = next;
    }

    Ok(ForwardOutput {
        u: state.u,
        v: state.v,
        trace: snapshots.map(|layers| LayerTrace { layers }),
    })
}

/// Central-difference sensitivity `d functional(u_L, v_L) / d scalar`.
///
/// A debugging aid for externally trained bundles; not used for training.
pub fn finite_difference(
    f: &Grid,
    bundle: &ParameterBundle,
    scalar: BundleScalar,
    step: f64,
    functional: impl Fn(&Grid, &Grid) -> f64,
) -> Result<f64> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::arg("finite-difference step must be positive"));
    }
    let x = bundle.get_scalar(scalar)?;
    let eval = |value: f64| -> Result<f64> {
        let out = idnet_forward(f, &bundle.with_scalar(scalar, value)?, false)?;
        Ok(functional(&out.u, &out.v))
    };
    Ok((eval(x + step)? - eval(x - step)?) / (2.0 * step))
}
