//! Brute-force verifiers for the closed forms: primal transport
//! maximization on empirical distributions, dual scalar minimization,
//! Monte-Carlo surrogates, and finite-difference gradient checks.
//!
//! Everything here is deliberately independent of the solver paths it
//! checks; a disagreement points at one of the two sides, never at shared
//! code.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec;
use crate::linreg::robust_surrogate_phi;
use crate::optim::golden_section_min;
use crate::rng::stream_rng;

/// Finitely supported distribution over `(x, y)` pairs.
#[derive(Debug, Clone)]
pub struct EmpiricalDist {
    points: Vec<(DVector<f64>, f64)>,
    weights: Vec<f64>,
}

impl EmpiricalDist {
    /// Uniform weights over the atoms.
    pub fn uniform(points: Vec<(DVector<f64>, f64)>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty support".into()));
        }
        let w = 1.0 / n as f64;
        Self::weighted(points, vec![w; n])
    }

    pub fn weighted(points: Vec<(DVector<f64>, f64)>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "support size {} vs {} weights",
                points.len(),
                weights.len()
            )));
        }
        let dim = points[0].0.len();
        if points.iter().any(|(x, y)| x.len() != dim || !y.is_finite()) {
            return Err(Error::InvalidInput("ragged or non-finite support".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidInput("negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { points, weights })
    }

    pub fn dim(&self) -> usize {
        self.points[0].0.len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[(DVector<f64>, f64)] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Empirical standard risk `sum w_i (y_i - x_i^T theta)^2`.
    pub fn standard_risk(&self, theta: &DVector<f64>) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|((x, y), w)| {
                let r = y - theta.dot(x);
                w * r * r
            })
            .sum()
    }

    /// Second moments `(Sigma, v, sigma_y2)` of the atoms, the inputs the
    /// closed forms take.
    pub fn moments(&self) -> (DMatrix<f64>, DVector<f64>, f64) {
        let d = self.dim();
        let mut sigma = DMatrix::zeros(d, d);
        let mut v = DVector::zeros(d);
        let mut sy2 = 0.0;
        for ((x, y), w) in self.points.iter().zip(&self.weights) {
            sigma += x * x.transpose() * *w;
            v += x * (*w * *y);
            sy2 += w * y * y;
        }
        // symmetrize away accumulation roundoff
        sigma = (&sigma + sigma.transpose()) * 0.5;
        (sigma, v, sy2)
    }
}

/// Feasible transport attack found by projected gradient ascent.
#[derive(Debug, Clone)]
pub struct PrimalResult {
    /// Achieved adversarial objective (a lower bound on the true risk).
    pub value: f64,
    pub perturbations: Vec<DVector<f64>>,
    /// `sqrt(sum w_i ||delta_i||^2)`, always within the budget.
    pub transport_cost: f64,
}

const PRIMAL_RESTARTS: usize = 10;

/// Maximizes `sum w_i (y_i - (x_i + delta_i)^T theta)^2` over perturbations
/// with `sum w_i ||delta_i||^2 <= eps^2` by projected gradient ascent with
/// [`PRIMAL_RESTARTS`] counter-seeded restarts (restart 0 starts at zero).
/// Returns the best feasible iterate; its value is a lower bound on the
/// adversarial risk.
pub fn primal_ar_quadratic(
    dist: &EmpiricalDist,
    theta: &DVector<f64>,
    eps: f64,
    iters: usize,
    seed: u64,
) -> PrimalResult {
    let n = dist.len();
    let zero = vec![DVector::zeros(dist.dim()); n];
    let base = PrimalResult {
        value: dist.standard_risk(theta),
        perturbations: zero.clone(),
        transport_cost: 0.0,
    };
    let theta_norm2 = theta.norm_squared();
    if eps == 0.0 || theta_norm2 == 0.0 {
        // either no budget or the loss does not depend on x
        return base;
    }

    let runs = exec::map_range(PRIMAL_RESTARTS, |restart| {
        let mut deltas = if restart == 0 {
            zero.clone()
        } else {
            let mut rng = stream_rng(seed, restart as u64);
            let raw: Vec<DVector<f64>> = (0..n)
                .map(|_| DVector::from_fn(dist.dim(), |_, _| StandardNormal.sample(&mut rng)))
                .collect();
            project_to_budget(raw, &dist.weights, 0.7 * eps)
        };
        // ascent in the weight-metric geometry; Lipschitz constant 2||theta||^2
        let step = 0.45 / theta_norm2;
        let mut best_value = f64::NEG_INFINITY;
        let mut best = deltas.clone();
        for _ in 0..iters {
            for (i, (x, y)) in dist.points.iter().enumerate() {
                let r = y - theta.dot(x) - theta.dot(&deltas[i]);
                deltas[i] -= theta * (2.0 * step * r);
            }
            deltas = project_to_budget(deltas, &dist.weights, eps);
            let value: f64 = dist
                .points
                .iter()
                .zip(&deltas)
                .zip(&dist.weights)
                .map(|(((x, y), delta), w)| {
                    let r = y - theta.dot(x) - theta.dot(delta);
                    w * r * r
                })
                .sum();
            if value > best_value {
                best_value = value;
                best = deltas.clone();
            }
        }
        (best_value, best)
    });

    let mut result = base;
    for (value, deltas) in runs {
        if value > result.value {
            let cost = transport_cost(&deltas, &dist.weights);
            result = PrimalResult {
                value,
                perturbations: deltas,
                transport_cost: cost,
            };
        }
    }
    result
}

fn transport_cost(deltas: &[DVector<f64>], weights: &[f64]) -> f64 {
    deltas
        .iter()
        .zip(weights)
        .map(|(d, w)| w * d.norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// Exact projection onto the weighted transport ball: uniform rescale.
fn project_to_budget(deltas: Vec<DVector<f64>>, weights: &[f64], eps: f64) -> Vec<DVector<f64>> {
    let cost = transport_cost(&deltas, weights);
    if cost <= eps || cost == 0.0 {
        return deltas;
    }
    let scale = eps / cost;
    deltas.into_iter().map(|d| d * scale).collect()
}

/// Result of the scalar dual minimization for the quadratic loss.
#[derive(Debug, Clone, Copy)]
pub struct DualResult {
    pub value: f64,
    /// Minimizing multiplier; `inf` when `eps = 0`.
    pub gamma_star: f64,
}

/// Minimizes `gamma eps^2 + sum w_i phi_gamma(theta; z_i)` over
/// `gamma > ||theta||^2` (golden-section on `log(gamma - ||theta||^2)`).
pub fn dual_ar_quadratic(dist: &EmpiricalDist, theta: &DVector<f64>, eps: f64) -> DualResult {
    let sr = dist.standard_risk(theta);
    let norm2 = theta.norm_squared();
    if eps == 0.0 {
        return DualResult {
            value: sr,
            gamma_star: f64::INFINITY,
        };
    }
    if norm2 == 0.0 {
        // phi_gamma is the unperturbed loss for every gamma
        return DualResult {
            value: sr,
            gamma_star: 0.0,
        };
    }

    let objective = |gamma: f64| -> f64 {
        let surrogate: f64 = dist
            .points
            .iter()
            .zip(&dist.weights)
            .map(|((x, y), w)| w * robust_surrogate_phi(theta, gamma, x, *y))
            .sum();
        gamma * eps * eps + surrogate
    };

    // search over t = log(gamma - ||theta||^2): coarse scan, golden refine
    let scale = 1.0 + norm2;
    let lo = (1e-12 * scale).ln();
    let hi = (1e12 * scale).ln();
    let n_grid = 241;
    let mut best_i: usize = 0;
    let mut best_v = f64::INFINITY;
    let step = (hi - lo) / (n_grid - 1) as f64;
    for i in 0..n_grid {
        let v = objective(norm2 + (lo + step * i as f64).exp());
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = lo + step * (best_i + 1).min(n_grid - 1) as f64;
    let (t, v) = golden_section_min(|t| objective(norm2 + t.exp()), a, b, 120);
    let (value, gamma) = if v < best_v {
        (v, norm2 + t.exp())
    } else {
        (best_v, norm2 + (lo + step * best_i as f64).exp())
    };
    DualResult {
        value: value.max(sr),
        gamma_star: gamma,
    }
}

/// Monte-Carlo estimate of the expected truncated-quadratic surrogate:
/// draws `nu ~ N(0,1)` and averages
/// `I(nu <= -a) + max(1 - (b gamma / 2)(nu + a)^2, 0) I(nu > -a)`.
///
/// Returns `(mean, standard_error)`. Chunked with per-chunk streams, so the
/// estimate is reproducible regardless of thread count.
pub fn mc_expected_phi(a: f64, b: f64, gamma: f64, n_samples: usize, seed: u64) -> (f64, f64) {
    assert!(n_samples >= 2, "need at least 2 samples");
    const CHUNK: usize = 1 << 16;
    let n_chunks = n_samples.div_ceil(CHUNK);
    let half_bg = 0.5 * b * gamma;

    let partials = exec::map_range(n_chunks, |c| {
        let mut rng = stream_rng(seed, c as u64);
        let take = if c == n_chunks - 1 {
            n_samples - c * CHUNK
        } else {
            CHUNK
        };
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..take {
            let nu: f64 = StandardNormal.sample(&mut rng);
            let v = if nu <= -a {
                1.0
            } else {
                let t = nu + a;
                (1.0 - half_bg * t * t).max(0.0)
            };
            sum += v;
            sum_sq += v * v;
        }
        (sum, sum_sq)
    });

    let (sum, sum_sq) = partials
        .into_iter()
        .fold((0.0, 0.0), |(s, q), (ps, pq)| (s + ps, q + pq));
    let n = n_samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}

/// Compares an analytic gradient against central differences with
/// per-coordinate step `h (1 + |theta_i|)`; returns the worst
/// `|fd - grad| / max(1, |fd|, |grad|)` over coordinates.
pub fn fd_gradient_check<F>(f: F, analytic: &DVector<f64>, theta: &DVector<f64>, h: f64) -> f64
where
    F: Fn(&DVector<f64>) -> f64,
{
    assert_eq!(analytic.len(), theta.len(), "gradient/point length mismatch");
    let mut worst = 0.0_f64;
    for i in 0..theta.len() {
        let hi = h * (1.0 + theta[i].abs());
        let mut up = theta.clone();
        let mut dn = theta.clone();
        up[i] += hi;
        dn[i] -= hi;
        let fd = (f(&up) - f(&dn)) / (2.0 * hi);
        let denom = 1.0_f64.max(fd.abs()).max(analytic[i].abs());
        worst = worst.max((fd - analytic[i]).abs() / denom);
    }
    worst
}
