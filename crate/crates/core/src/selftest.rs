//! Built-in oracle suite behind the `selftest` subcommand.

use crate::admm::{admm_solve, lagrangian_gradient, lss_solve, ModelParams, SolverState, StoppingRule};
use crate::error::Result;
use crate::grid::GridStack;
use crate::ops::{adjoint_conv, apply_otf, conv_periodic, kernel_otf, make_diff_bank, Kernel};
use crate::oracle::dense_lss_solve;
use crate::synth::{make_squares_scene, SceneSpec, SplitMix64};
use crate::unroll::{idnet_forward, ParameterBundle};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, worst: f64, limit: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: worst <= limit,
        detail: format!("worst {worst:.3e} (limit {limit:.0e})"),
    }
}

fn random_state(rng: &mut SplitMix64, m: usize, h: usize, w: usize) -> SolverState {
    let mut grids = |count: usize| {
        GridStack::new((0..count).map(|_| rng.grid(h, w, -1.0, 1.0)).collect()).expect("uniform dims")
    };
    let p = grids(m);
    let lambda_hat = grids(m);
    let q = grids(1).into_channels().remove(0);
    let mu_hat = grids(1).into_channels().remove(0);
    SolverState {
        p,
        q,
        lambda_hat,
        mu_hat,
        ..SolverState::zeros(m, h, w)
    }
}

fn reference_params() -> ModelParams {
    ModelParams::new(vec![0.6, 0.6], 0.1, 0.07, 0.07).expect("valid constants")
}

pub fn run_selftest() -> Result<Vec<CheckOutcome>> {
    let mut rng = SplitMix64::new(0x5e1f_7e57);
    let bank = make_diff_bank(2, 1)?;
    let params = reference_params();
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for _ in 0..5 {
        let f = rng.grid(8, 8, -1.0, 1.0);
        let st = random_state(&mut rng, 2, 8, 8);
        let (u, v) = lss_solve(&f, &st, &bank, &params)?;
        let (ud, vd) = dense_lss_solve(&f, &st, &bank, &params)?;
        worst = worst.max(u.sub(&ud)?.norm_inf()).max(v.sub(&vd)?.norm_inf());
    }
    out.push(outcome("dense-solve equivalence", worst, 1e-8));

    let mut worst = 0.0f64;
    for _ in 0..20 {
        let f = rng.grid(8, 10, -2.0, 2.0);
        let st = random_state(&mut rng, 2, 8, 10);
        let (u, v) = lss_solve(&f, &st, &bank, &params)?;
        let (gu, gv) = lagrangian_gradient(&u, &v, &st, &f, &bank, &params)?;
        worst = worst.max(gu.norm_inf().max(gv.norm_inf()) / (1.0 + f.norm_inf()));
    }
    out.push(outcome("subproblem stationarity", worst, 1e-9));

    let (mut adj, mut fft) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let u = rng.grid(8, 8, -1.0, 1.0);
        let w = rng.grid(8, 8, -1.0, 1.0);
        let k = Kernel::new(2, (0..25).map(|_| rng.uniform(-1.0, 1.0)).collect())?;
        let gap = (conv_periodic(&u, &k).inner(&w)? - u.inner(&adjoint_conv(&w, &k))?).abs();
        adj = adj.max(gap / (u.norm2() * w.norm2()));
        let spectral = apply_otf(&u, &kernel_otf(&k, 8, 8)?)?;
        fft = fft.max(spectral.sub(&conv_periodic(&u, &k))?.norm_inf());
    }
    out.push(outcome("adjoint identity", adj, 1e-10));
    out.push(outcome("fft vs direct convolution", fft, 1e-10));

    let scene = make_squares_scene(&SceneSpec::reference())?;
    let mut worst = 0.0f64;
    for depth in [1, 4, 16] {
        let bundle = ParameterBundle::constant(&bank, &params, depth)?;
        let net = idnet_forward(&scene.image, &bundle, false)?;
        let res = admm_solve(&scene.image, &bank, &params, StoppingRule::iterations(depth))?;
        worst = worst
            .max(net.u.sub(&res.u)?.norm_inf())
            .max(net.v.sub(&res.v)?.norm_inf());
    }
    out.push(outcome("truncation equivalence", worst, 1e-12));

    let res = admm_solve(&scene.image, &bank, &params, StoppingRule::iterations(2000))?;
    let feas = res.kkt.feasibility_p.max(res.kkt.feasibility_q);
    out.push(outcome("kkt feasibility at 2000 iterations", feas, 1e-4));
    out.push(outcome("kkt report at 2000 iterations", res.kkt.max(), 1e-3));

    Ok(out)
}
