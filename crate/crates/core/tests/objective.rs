use cbdt::objective::{group_stats, loss_grad_hess, loss_value, term_grad_hess, CompositeLossParams, LossTerm};
use proptest::prelude::*;

fn arms(n: usize) -> Vec<u8> {
    (0..n).map(|i| (i % 2) as u8).collect()
}

/// Loss with the arm means inside the variance term pinned to `frozen`.
fn frozen_loss(yhat: &[f64], y: &[f64], t: &[u8], p: &CompositeLossParams, frozen: (f64, f64)) -> f64 {
    let s = group_stats(yhat, t).unwrap();
    let (mut vt, mut vc) = (0.0, 0.0);
    for (v, a) in yhat.iter().zip(t) {
        if *a == 1 {
            vt += (v - frozen.0).powi(2);
        } else {
            vc += (v - frozen.1).powi(2);
        }
    }
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    yhat.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        + p.lambda * (vt / s.n_t as f64 + vc / s.n_c as f64)
        + p.gamma * (s.mean_all - ybar).powi(2)
        + p.alpha * (s.ate_hat - p.tau_ref).powi(2)
}

fn vectors(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-5.0..5.0f64, n), prop::collection::vec(-5.0..5.0f64, n))
}

proptest! {
    #[test]
    fn gradient_matches_central_differences(
        (yhat, y) in vectors(12),
        lambda in 0.0..4.0f64, gamma in 0.0..4.0f64, alpha in 0.0..4.0f64, tau_ref in -2.0..2.0f64,
    ) {
        let t = arms(12);
        let p = CompositeLossParams { lambda, gamma, alpha, tau_ref, exact_chain_gradients: false };
        let gh = loss_grad_hess(&yhat, &y, &t, &p).unwrap();
        let s = group_stats(&yhat, &t).unwrap();
        let frozen = (s.mean_t, s.mean_c);
        let step = 1e-3;
        for i in 0..yhat.len() {
            let mut up = yhat.clone();
            up[i] += step;
            let mut down = yhat.clone();
            down[i] -= step;
            let fd = (frozen_loss(&up, &y, &t, &p, frozen) - frozen_loss(&down, &y, &t, &p, frozen)) / (2.0 * step);
            prop_assert!((fd - gh.g[i]).abs() <= 1e-7 * fd.abs().max(1.0), "row {i}: fd {fd} vs {}", gh.g[i]);
        }
    }

    #[test]
    fn exact_and_frozen_gradients_agree((yhat, y) in vectors(15), lambda in 0.0..4.0f64) {
        let t = arms(15);
        let frozen = CompositeLossParams { lambda, ..Default::default() };
        let exact = CompositeLossParams { exact_chain_gradients: true, ..frozen.clone() };
        let a = loss_grad_hess(&yhat, &y, &t, &frozen).unwrap();
        let b = loss_grad_hess(&yhat, &y, &t, &exact).unwrap();
        for (ga, gb) in a.g.iter().zip(&b.g) {
            prop_assert!((ga - gb).abs() < 1e-12);
        }
    }

    #[test]
    fn ate_gradient_sums_cancel((yhat, y) in vectors(9), alpha in 0.1..4.0f64, tau_ref in -3.0..3.0f64) {
        let t = arms(9);
        let p = CompositeLossParams { alpha, tau_ref, ..Default::default() };
        let gh = term_grad_hess(LossTerm::AteCalibration, &yhat, &y, &t, &p).unwrap();
        prop_assert!(gh.g.iter().sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn loss_is_nonnegative((yhat, y) in vectors(10)) {
        let p = CompositeLossParams::default();
        prop_assert!(loss_value(&yhat, &y, &arms(10), &p).unwrap() >= 0.0);
    }
}

#[test]
fn exact_hessian_discrepancy_is_order_one_over_n() {
    let discrepancy = |n: usize| {
        let yhat: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = vec![0.0; n];
        let t = arms(n);
        let p = CompositeLossParams {
            lambda: 2.0,
            gamma: 0.0,
            alpha: 0.0,
            ..Default::default()
        };
        let exact = CompositeLossParams {
            exact_chain_gradients: true,
            ..p.clone()
        };
        let a = term_grad_hess(LossTerm::IntraGroupVariance, &yhat, &y, &t, &p).unwrap();
        let b = term_grad_hess(LossTerm::IntraGroupVariance, &yhat, &y, &t, &exact).unwrap();
        a.h.iter().zip(&b.h).map(|(x, y)| (x - y).abs() / x).fold(0.0, f64::max)
    };
    let (d100, d200) = (discrepancy(100), discrepancy(200));
    // relative gap is 1/n_arm
    assert!((d100 - 1.0 / 50.0).abs() < 1e-12);
    assert!((d100 / d200 - 2.0).abs() < 1e-9);
}
