use idecomp::admm::{admm_solve, lss_solve, E2Mode, ModelParams, SolverState, StoppingRule};
use idecomp::ops::{make_diff_bank, KernelBank};
use idecomp::oracle::{correlation_matrix, dense_lss_solve, primal_dual_reference};
use idecomp::synth::SplitMix64;
use idecomp::{Grid, GridStack};
use nalgebra::{DMatrix, DVector};

fn random_state(rng: &mut SplitMix64, m: usize, h: usize, w: usize) -> SolverState {
    let mut stack = |n: usize| GridStack::new((0..n).map(|_| rng.grid(h, w, -1.0, 1.0)).collect()).unwrap();
    let p = stack(m);
    let lambda_hat = stack(m);
    let q = stack(1).into_channels().remove(0);
    let mu_hat = stack(1).into_channels().remove(0);
    SolverState {
        p,
        q,
        lambda_hat,
        mu_hat,
        ..SolverState::zeros(m, h, w)
    }
}

#[test]
fn fft_solve_matches_dense_on_random_instances() {
    let mut rng = SplitMix64::new(11);
    for (m, r) in [(2, 1), (4, 1), (2, 2)] {
        let bank = make_diff_bank(m, r).unwrap();
        for mode in [E2Mode::Corrected, E2Mode::Paper] {
            let params = ModelParams::new(vec![0.3; m], 0.2, 0.5, 0.3).unwrap().with_e2_mode(mode);
            for _ in 0..4 {
                let (h, w) = (5 + rng.below(4), 5 + rng.below(4));
                let f = rng.grid(h, w, -1.0, 1.0);
                let st = random_state(&mut rng, m, h, w);
                let (u, v) = lss_solve(&f, &st, &bank, &params).unwrap();
                let (ud, vd) = dense_lss_solve(&f, &st, &bank, &params).unwrap();
                assert!(u.sub(&ud).unwrap().norm_inf() < 1e-9);
                assert!(v.sub(&vd).unwrap().norm_inf() < 1e-9);
            }
        }
    }
}

fn shrink(z: f64, t: f64) -> f64 {
    z.signum() * (z.abs() - t).max(0.0)
}

// Textbook ADMM with unscaled multipliers lambda = r_p * lambda_hat, mu = r_q * mu_hat,
// solving each (u, v) block densely.
fn unscaled_admm(f: &Grid, bank: &KernelBank, params: &ModelParams, iters: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let (h, w) = f.dims();
    let n = h * w;
    let ks: Vec<DMatrix<f64>> = bank.iter().map(|k| correlation_matrix(k, h, w)).collect();
    let (r_p, r_q) = (params.r_p, params.r_q);
    let mut e1 = DMatrix::<f64>::identity(n, n);
    for k in &ks {
        e1 += r_p * k.transpose() * k;
    }
    let mut sys = DMatrix::<f64>::zeros(2 * n, 2 * n);
    sys.view_mut((0, 0), (n, n)).copy_from(&e1);
    sys.view_mut((0, n), (n, n)).fill_with_identity();
    sys.view_mut((n, 0), (n, n)).fill_with_identity();
    sys.view_mut((n, n), (n, n)).fill_with_identity();
    for i in 0..n {
        sys[(n + i, n + i)] = 1.0 + r_q;
    }
    let lu = sys.lu();
    let fv = DVector::from_column_slice(f.as_slice());
    let m = ks.len();
    let mut p = vec![DVector::<f64>::zeros(n); m];
    let mut lam = vec![DVector::<f64>::zeros(n); m];
    let mut q = DVector::<f64>::zeros(n);
    let mut mu = DVector::<f64>::zeros(n);
    let mut out = Vec::new();
    for _ in 0..iters {
        let mut b1 = fv.clone();
        for k in 0..m {
            b1 += ks[k].transpose() * (r_p * &p[k] - &lam[k]);
        }
        let b2 = &fv + r_q * &q - &mu;
        let mut rhs = DVector::<f64>::zeros(2 * n);
        rhs.rows_mut(0, n).copy_from(&b1);
        rhs.rows_mut(n, n).copy_from(&b2);
        let x = lu.solve(&rhs).unwrap();
        let (u, v) = (x.rows(0, n).into_owned(), x.rows(n, n).into_owned());
        for k in 0..m {
            let ku = &ks[k] * &u;
            p[k] = (&ku + &lam[k] / r_p).map(|z| shrink(z, params.alphas[k] / r_p));
            lam[k] += r_p * (&ku - &p[k]);
        }
        q = (&v + &mu / r_q).map(|z| shrink(z, params.beta / r_q));
        mu += r_q * (&v - &q);
        out.push((u.as_slice().to_vec(), v.as_slice().to_vec()));
    }
    out
}

#[test]
fn scaled_iterates_match_unscaled_formulation() {
    let mut rng = SplitMix64::new(12);
    let bank = make_diff_bank(2, 1).unwrap();
    let params = ModelParams::new(vec![0.2, 0.2], 0.1, 0.3, 0.4).unwrap();
    let f = rng.grid(6, 6, 0.0, 1.0);
    let reference = unscaled_admm(&f, &bank, &params, 12);
    for (k, (u_ref, v_ref)) in reference.iter().enumerate() {
        let res = admm_solve(&f, &bank, &params, StoppingRule::iterations(k + 1)).unwrap();
        let du = res.u.as_slice().iter().zip(u_ref).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let dv = res.v.as_slice().iter().zip(v_ref).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(du.max(dv) < 1e-12, "iteration {}: {du:e} {dv:e}", k + 1);
    }
}

#[test]
fn admm_reaches_reference_objective_on_random_image() {
    let mut rng = SplitMix64::new(13);
    let bank = make_diff_bank(2, 1).unwrap();
    let params = ModelParams::new(vec![0.1, 0.1], 0.2, 0.5, 0.5).unwrap();
    let f = rng.grid(10, 12, 0.0, 1.0);
    let res = admm_solve(&f, &bank, &params, StoppingRule::iterations(3000)).unwrap();
    let reference = primal_dual_reference(&f, &bank, &params, 400_000, 1e-13).unwrap();
    let obj = *res.objective_trace.last().unwrap();
    assert!(
        (obj - reference.objective).abs() <= 1e-6 * reference.objective,
        "{obj} vs {}",
        reference.objective
    );
    assert!(obj >= reference.objective - 1e-9 * reference.objective);
}
