//! Multichannel decomposition with optional log-domain (Retinex) wrapping.
//!
//! Each selected channel `F_k` is decomposed with the same solver
//! configuration. In log mode the solver sees `f_k = ln max(F_k, eps)` and
//! the outputs are mapped back as `U_k = exp u_k`, `V_k = exp v_k`, so that
//! `F_k = U_k * V_k` on the clamped range. The stacked output is
//! `[U_1..U_K, V_1..V_K, passthrough...]`.

use rayon::prelude::*;

use crate::admm::{admm_solve, ModelParams, StoppingRule};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridStack};
use crate::io::TraceRow;
use crate::ops::KernelBank;
use crate::unroll::{idnet_forward, ParameterBundle};

/// Lower clamp applied before the logarithm of 8-bit-derived intensities.
pub const DEFAULT_LOG_EPS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelPlan {
    pub decompose: Vec<usize>,
    pub passthrough: Vec<usize>,
    pub log_domain: bool,
}

impl ChannelPlan {
    /// Decompose every channel, no passthrough.
    pub fn all(n_channels: usize, log_domain: bool) -> Self {
        ChannelPlan {
            decompose: (0..n_channels).collect(),
            passthrough: Vec::new(),
            log_domain,
        }
    }

    pub fn validate(&self, n_channels: usize) -> Result<()> {
        if self.decompose.is_empty() {
            return Err(Error::arg("channel plan must decompose at least one channel"));
        }
        let mut seen = vec![false; n_channels];
        for &c in self.decompose.iter().chain(&self.passthrough) {
            let slot = seen.get_mut(c).ok_or_else(|| {
                Error::arg(format!("channel index {c} out of range for {n_channels} channels"))
            })?;
            if *slot {
                return Err(Error::arg(format!("channel index {c} listed twice")));
            }
            *slot = true;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum SolverConfig {
    Admm {
        bank: KernelBank,
        params: ModelParams,
        stop: StoppingRule,
    },
    Unroll {
        bundle: ParameterBundle,
    },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub trace: bool,
    pub log_eps: f64,
}

impl RunConfig {
    pub fn new(solver: SolverConfig) -> Self {
        RunConfig {
            solver,
            trace: false,
            log_eps: DEFAULT_LOG_EPS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MultichannelOutput {
    pub u: GridStack,
    pub v: GridStack,
    pub stacked: GridStack,
    /// Per decomposed channel, present when tracing was requested.
    pub traces: Vec<Option<Vec<TraceRow>>>,
}

pub fn log_transform(stack: &GridStack, eps: f64) -> Result<GridStack> {
    if !(eps > 0.0) {
        return Err(Error::arg("log clamp eps must be positive"));
    }
    GridStack::new(stack.iter().map(|g| g.map(|x| x.max(eps).ln())).collect())
}

pub fn exp_transform(stack: &GridStack) -> Result<GridStack> {
    let out = GridStack::new(stack.iter().map(|g| g.map(f64::exp)).collect())?;
    if !out.is_finite() {
        return Err(Error::Numerical("exponential overflowed".into()));
    }
    Ok(out)
}

/// Decomposes one single-channel image under `config`.
pub fn decompose_channel(f: &Grid, config: &RunConfig) -> Result<(Grid, Grid, Option<Vec<TraceRow>>)> {
    match &config.solver {
        SolverConfig::Admm { bank, params, stop } => {
            let res = admm_solve(f, bank, params, *stop)?;
            let trace = config.trace.then(|| {
                (0..res.iterations_run)
                    .map(|k| TraceRow {
                        iteration: k + 1,
                        objective: res.objective_trace[k],
                        primal_p: res.primal_residual_p[k],
                        primal_q: res.primal_residual_q[k],
                        dual: res.dual_residual[k],
                    })
                    .collect()
            });
            Ok((res.u, res.v, trace))
        }
        SolverConfig::Unroll { bundle } => {
            let out = idnet_forward(f, bundle, config.trace)?;
            let trace = out.trace.map(|t| {
                t.layers
                    .iter()
                    .enumerate()
                    .map(|(l, s)| TraceRow {
                        iteration: l + 1,
                        objective: s.objective,
                        primal_p: s.primal_p,
                        primal_q: s.primal_q,
                        dual: s.dual,
                    })
                    .collect()
            });
            Ok((out.u, out.v, trace))
        }
    }
}

pub fn decompose_multichannel(
    input: &GridStack,
    plan: &ChannelPlan,
    config: &RunConfig,
) -> Result<MultichannelOutput> {
    plan.validate(input.len())?;
    let prepared = if plan.log_domain {
        log_transform(input, config.log_eps)?
    } else {
        input.clone()
    };

    let results: Vec<(Grid, Grid, Option<Vec<TraceRow>>)> = plan
        .decompose
        .par_iter()
        .map(|&c| {
            decompose_channel(&prepared[c], config).map_err(|e| Error::Channel {
                channel: c,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut us = Vec::with_capacity(results.len());
    let mut vs = Vec::with_capacity(results.len());
    let mut traces = Vec::with_capacity(results.len());
    for (u, v, t) in results {
        us.push(u);
        vs.push(v);
        traces.push(t);
    }
    let (mut u, mut v) = (GridStack::new(us)?, GridStack::new(vs)?);
    if plan.log_domain {
        u = exp_transform(&u)?;
        v = exp_transform(&v)?;
    }
    let stacked = GridStack::new(
        u.iter()
            .chain(v.iter())
            .cloned()
            .chain(plan.passthrough.iter().map(|&c| input[c].clone()))
            .collect(),
    )?;
    Ok(MultichannelOutput {
        u,
        v,
        stacked,
        traces,
    })
}
