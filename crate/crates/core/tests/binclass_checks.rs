//! Monte-Carlo and brute-force checks of the classification closed forms.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use tradeoff_core::binclass::{
    dual_objective, expected_phi, BinOptimOptions, GaussMixSetting,
};
use tradeoff_core::gauss::std_normal_cdf;
use tradeoff_core::linalg::toeplitz_correlation;
use tradeoff_core::oracle::mc_expected_phi;
use tradeoff_core::rng::stream_rng;

/// Misclassification rate of the mixture matches Phi(-a) by simulation.
#[test]
fn standard_risk_matches_mixture_simulation() {
    let d = 5;
    let mu = DVector::from_vec(vec![0.4, -0.2, 0.5, 0.1, -0.3]);
    let sigma = toeplitz_correlation(d, 0.3);
    let setting = GaussMixSetting::new(mu.clone(), sigma.clone(), 0.0, 2.0).unwrap();
    let theta = DVector::from_vec(vec![0.9, -0.1, 0.4, 0.2, -0.6]);
    let a = setting.theta_stats(&theta).unwrap().a;
    let sr = std_normal_cdf(-a).value();

    // sample x = y mu + Sigma^{1/2} z through Cholesky
    let chol = sigma.cholesky().unwrap();
    let l = chol.l();
    let mut rng = stream_rng(42, 0);
    let n = 400_000;
    let mut errors = 0u64;
    for _ in 0..n {
        let flip: f64 = StandardNormal.sample(&mut rng);
        let y: f64 = if flip >= 0.0 { 1.0 } else { -1.0 };
        let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        let x = &mu * y + &l * z;
        if y * theta.dot(&x) <= 0.0 {
            errors += 1;
        }
    }
    let rate = errors as f64 / n as f64;
    let se = (sr * (1.0 - sr) / n as f64).sqrt();
    assert!(
        (rate - sr).abs() <= 3.0 * se,
        "simulated {rate} vs closed {sr} (se {se})"
    );
}

/// Closed-form expected surrogate vs Monte-Carlo on a small grid (the full
/// 27-point, 1e7-sample version runs in the acceptance suite).
#[test]
fn expected_phi_matches_monte_carlo_grid() {
    let mut seed = 0;
    for &a in &[-1.0, 0.5, 2.0] {
        for &b in &[0.25, 1.0, 4.0] {
            for &gamma in &[0.1, 1.0, 10.0] {
                seed += 1;
                let closed = expected_phi(a, b, gamma).unwrap();
                let (mc, se) = mc_expected_phi(a, b, gamma, 400_000, seed);
                assert!(
                    (closed - mc).abs() <= 4.0 * se.max(1e-9),
                    "(a={a}, b={b}, gamma={gamma}): closed {closed} mc {mc} se {se}"
                );
            }
        }
    }
}

/// The sphere solver beats a coarse random search over directions.
#[test]
fn tradeoff_solver_beats_random_search() {
    let d = 10;
    let eps = 0.5;
    let lambda = 1.0;
    let mu = {
        let mut rng = stream_rng(5, 0);
        let scale = 1.0 / (d as f64).sqrt();
        DVector::from_fn(d, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        })
    };
    let setting =
        GaussMixSetting::new(mu, DMatrix::identity(d, d), eps, f64::INFINITY).unwrap();

    let solved = setting.pareto_point(lambda, &BinOptimOptions::default()).unwrap();
    let solved_obj = lambda * solved.sr + solved.ar;

    // random search: 1e5 directions, each with a coarse inner gamma grid
    let mut rng = stream_rng(6, 0);
    let mut best = f64::INFINITY;
    let gammas: Vec<f64> = (0..61)
        .map(|i| 1e-8 * (1e16_f64).powf(i as f64 / 60.0))
        .collect();
    for _ in 0..100_000 {
        let theta = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        let Ok(st) = setting.theta_stats(&theta) else {
            continue;
        };
        let sr = std_normal_cdf(-st.a).value();
        let mut fmin = f64::INFINITY;
        for &g in &gammas {
            let v = dual_objective(st.a, st.b, eps, g).unwrap();
            if v < fmin {
                fmin = v;
            }
        }
        let obj = lambda * sr + fmin;
        if obj < best {
            best = obj;
        }
    }
    assert!(
        solved_obj <= best + 1e-4,
        "solver {solved_obj} vs random search {best}"
    );
}
