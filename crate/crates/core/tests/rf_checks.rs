//! Gradient and sweep checks for the random-features objective.

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};
use tradeoff_core::oracle::fd_gradient_check;
use tradeoff_core::random_features::{
    pareto_sweep, Objective, QuadraticTarget, RFModel, RFSetting, RfSolveOptions, SampleBatch,
};
use tradeoff_core::rng::stream_rng;

/// Analytic gradient vs central differences at random points away from the
/// ReLU kinks.
#[test]
fn objective_gradient_matches_finite_differences() {
    let d = 10;
    let width = 50;
    let sigma = 1.0;
    let setting = RFSetting::new(d, width, sigma, 0.3, 400).unwrap();
    let target = QuadraticTarget::sample(d, 1.0, &mut stream_rng(31, 0));

    // redraw the batch until every preactivation clears the kink margin
    let mut obj = None;
    for attempt in 0..20 {
        let batch = SampleBatch::generate(&target, sigma, d, 400, &mut stream_rng(31, 1 + attempt));
        let u = RFModel::sample_weights(width, d, &mut stream_rng(31, 100 + attempt));
        let candidate = Objective::new(&setting, &u, &target, &batch).unwrap();
        if candidate.min_abs_preactivation() >= 1e-6 {
            obj = Some(candidate);
            break;
        }
    }
    let obj = obj.expect("no kink-free batch found in 20 attempts");

    let lambda = 0.7;
    for k in 0..20 {
        let mut rng = stream_rng(32, k);
        let theta = DVector::from_fn(width, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            0.3 * z
        });
        let (_, grad) = obj.value_grad(lambda, &theta);
        let err = fd_gradient_check(|t| obj.value(lambda, t), &grad, &theta, 1e-6);
        assert!(err <= 1e-5, "point {k}: gradient error {err}");
    }
}

/// Wider networks dominate: mean risks at fixed lambda do not grow with
/// width (small-scale version of the full acceptance run).
#[test]
fn mean_risks_nonincreasing_in_width() {
    let d = 6;
    let setting = RFSetting::new(d, 8, 1.0, 0.3, 2_000).unwrap();
    let target = QuadraticTarget::sample(d, 1.0, &mut stream_rng(33, 0));
    let widths = [8, 24, 64];
    let lambdas = [0.1, 10.0];
    let reps = 4;
    let recs = pareto_sweep(
        &setting,
        &target,
        &lambdas,
        &widths,
        reps,
        9,
        &RfSolveOptions::default(),
    )
    .unwrap();
    assert_eq!(recs.len(), widths.len() * reps * lambdas.len());
    assert!(recs.iter().all(|r| r.error.is_none()));

    for (li, &lambda) in lambdas.iter().enumerate() {
        let mean = |wi: usize| -> (f64, f64) {
            let vals: Vec<&_> = recs
                .iter()
                .filter(|r| r.width == widths[wi] && r.lambda == lambda)
                .collect();
            assert_eq!(vals.len(), reps);
            let sr = vals.iter().map(|r| r.sr).sum::<f64>() / reps as f64;
            let ar = vals.iter().map(|r| r.ar).sum::<f64>() / reps as f64;
            (sr, ar)
        };
        let _ = li;
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for wi in 0..widths.len() {
            let (sr, ar) = mean(wi);
            assert!(ar >= sr - 1e-12);
            assert!(
                sr <= prev.0 + 1e-4 && ar <= prev.1 + 1e-4,
                "width {} did not improve: sr {sr} ar {ar} prev {prev:?}",
                widths[wi]
            );
            prev = (sr, ar);
        }
    }
}
