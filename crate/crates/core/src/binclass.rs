//! Gaussian-mixture binary classification with 0-1 loss under an `l_r`
//! feature-transport adversary.
//!
//! Labels are +-1 with class means +-mu and shared covariance Sigma. For a
//! linear classifier `sign(x^T theta)` both risks depend on `theta` only
//! through two scale-invariant statistics:
//!
//! - `a = mu^T theta / ||Sigma^{1/2} theta||` (normalized margin),
//! - `b = ||Sigma^{1/2} theta||^2 / ||theta||_q^2` with `1/r + 1/q = 1`.
//!
//! Standard risk is `Phi(-a)`. Adversarial risk is a scalar infimum
//! `inf_{gamma >= 0} [gamma eps^2 / b + E_phi(a, gamma)]` where `E_phi` is
//! the closed-form expectation of the truncated-quadratic robust surrogate
//! (see [`expected_phi`]). The tradeoff solver minimizes
//! `lambda Phi(-a) + F(theta, gamma)` over unit `theta` by multi-start
//! simplex search on the sphere.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec;
use crate::gauss::{cdf, std_normal_cdf, std_normal_pdf, Probability};
use crate::linalg::SpectralDecomp;
use crate::rng::stream_rng;

/// Beyond this value of `sqrt(2/(b gamma)) - a` the truncation boundary is
/// deep in the Gaussian tail and the tail terms are dropped, which keeps the
/// `gamma -> 0` limit free of inf * 0.
const DELTA_SATURATION: f64 = 40.0;

const LN_10: f64 = std::f64::consts::LN_10;

/// Gaussian-mixture classification setting.
///
/// `r` is the transport norm order in `[1, inf]` (`f64::INFINITY` allowed);
/// the dual exponent `q` with `1/r + 1/q = 1` is derived. Class priors do
/// not enter either risk under the symmetric means, so none are stored.
#[derive(Debug, Clone)]
pub struct GaussMixSetting {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    eps: f64,
    r: f64,
    decomp: SpectralDecomp,
}

impl GaussMixSetting {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>, eps: f64, r: f64) -> Result<Self> {
        let decomp = SpectralDecomp::new_psd(&sigma)?;
        if mu.len() != sigma.nrows() {
            return Err(Error::DimensionMismatch {
                expected: sigma.nrows(),
                got: mu.len(),
            });
        }
        if mu.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSetting("mu has non-finite entries".into()));
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidSetting(format!("eps = {eps} must be >= 0")));
        }
        if !(r >= 1.0) {
            return Err(Error::InvalidSetting(format!(
                "perturbation norm order r = {r} must be in [1, inf]"
            )));
        }
        Ok(Self {
            mu,
            sigma,
            eps,
            r,
            decomp,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn norm_order(&self) -> f64 {
        self.r
    }

    /// Dual exponent `q`: `r = 1 <-> q = inf`, `r = inf <-> q = 1`,
    /// otherwise `q = r / (r - 1)`.
    pub fn dual_exponent(&self) -> f64 {
        if self.r == 1.0 {
            f64::INFINITY
        } else if self.r.is_infinite() {
            1.0
        } else {
            self.r / (self.r - 1.0)
        }
    }

    /// The scale-invariant pair `(a, b)` of a direction.
    pub fn theta_stats(&self, theta: &DVector<f64>) -> Result<ThetaStats> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: theta.len(),
            });
        }
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("theta has non-finite entries".into()));
        }
        let s2 = self.decomp.quad_form(theta);
        let s = s2.sqrt();
        let floor = 1e-12 * self.decomp.max_eigenvalue().sqrt() * theta.norm();
        if !(s > floor) || s == 0.0 {
            return Err(Error::DegenerateDirection(format!(
                "||Sigma^(1/2) theta|| = {s:e} vanishes for this direction"
            )));
        }
        let a = self.mu.dot(theta) / s;
        let nq = dual_norm(theta, self.dual_exponent());
        Ok(ThetaStats {
            a,
            b: s2 / (nq * nq),
        })
    }

    /// Adversarial risk of a direction: scalar infimum of
    /// `F(theta, gamma) = gamma eps^2 / b + E_phi(a, gamma)` over
    /// `gamma >= 0`, located by a log-grid scan plus golden-section
    /// refinement. At `eps = 0` it equals the standard risk.
    pub fn adversarial_risk(&self, theta: &DVector<f64>) -> Result<AdversarialRiskBin> {
        let stats = self.theta_stats(theta)?;
        Ok(adversarial_risk_ab(stats.a, stats.b, self.eps))
    }

    fn default_starts(&self, opts: &BinOptimOptions) -> Vec<DVector<f64>> {
        let d = self.dim();
        let mut starts = Vec::new();
        if self.mu.norm() > 0.0 {
            starts.push(self.mu.normalize());
        }
        let fisher = self.decomp.pinv_apply(&self.mu);
        if fisher.norm() > 1e-300 {
            starts.push(fisher.normalize());
        }
        if starts.is_empty() {
            starts.push(DVector::from_fn(d, |i, _| if i == 0 { 1.0 } else { 0.0 }));
        }
        for k in 0..opts.random_restarts {
            let mut rng = stream_rng(opts.seed, k as u64);
            let v = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            if v.norm() > 0.0 {
                starts.push(v.normalize());
            }
        }
        starts
    }

    /// Simplex descent over the unit sphere from one start, in tangent
    /// charts re-centered at the incumbent with a shrinking simplex.
    fn optimize_from(
        &self,
        start: &DVector<f64>,
        lambda: f64,
        opts: &BinOptimOptions,
    ) -> (DVector<f64>, f64) {
        let objective = |theta: &DVector<f64>| -> f64 {
            match self.theta_stats(theta) {
                Ok(st) => {
                    let sr = cdf(-st.a);
                    if self.eps == 0.0 {
                        (1.0 + lambda) * sr
                    } else {
                        let (fmin, _, _) = min_dual_over_gamma(st.a, st.b, self.eps);
                        lambda * sr + fmin
                    }
                }
                Err(_) => f64::INFINITY,
            }
        };

        let mut center = start.normalize();
        let mut best_val = objective(&center);
        let mut scale = 0.3;
        for cycle in 0..opts.nm_cycles {
            let basis = tangent_basis(&center);
            let chart = |x: &DVector<f64>| -> f64 {
                let v = &center + &basis * x;
                objective(&v.normalize())
            };
            let res = crate::optim::nelder_mead(
                chart,
                &DVector::zeros(self.dim() - 1),
                &crate::optim::NelderMeadOptions {
                    max_iters: opts.nm_iters,
                    f_tol: 1e-14,
                    x_tol: 1e-12,
                    init_scale: scale,
                },
            );
            let improved = res.value < best_val;
            if improved {
                center = (&center + &basis * res.x).normalize();
                let gain = best_val - res.value;
                best_val = res.value;
                if cycle >= 2 && gain <= 1e-14 * (1.0 + best_val.abs()) {
                    break;
                }
            } else if cycle >= 2 {
                break;
            }
            scale = (scale * 0.15).max(3e-7);
        }
        (center, best_val)
    }

    /// Minimizes `lambda Phi(-a_theta) + F(theta, gamma)` over unit `theta`
    /// and `gamma >= 0` with multi-start (class-mean direction, Fisher
    /// direction, seeded random units); returns the best point found.
    pub fn pareto_point(&self, lambda: f64, opts: &BinOptimOptions) -> Result<BinParetoPoint> {
        let starts = self.default_starts(opts);
        self.pareto_point_from_starts(lambda, &starts, opts)
    }

    fn pareto_point_from_starts(
        &self,
        lambda: f64,
        starts: &[DVector<f64>],
        opts: &BinOptimOptions,
    ) -> Result<BinParetoPoint> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        if self.dim() < 2 {
            return Err(Error::InvalidSetting(
                "sphere search needs dimension >= 2".into(),
            ));
        }
        let runs = exec::map_slice(starts, |s| self.optimize_from(s, lambda, opts));
        let best = runs
            .into_iter()
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(std::cmp::Ordering::Equal))
            .ok_or_else(|| Error::InvalidInput("no starts supplied".into()))?;
        if !best.1.is_finite() {
            return Err(Error::NoConvergence {
                context: format!("all restarts degenerate at lambda={lambda}"),
                residual: f64::INFINITY,
            });
        }
        let theta = best.0;
        let stats = self.theta_stats(&theta)?;
        let risk = adversarial_risk_ab(stats.a, stats.b, self.eps);
        Ok(BinParetoPoint {
            lambda,
            theta,
            a: stats.a,
            b: stats.b,
            gamma_star: risk.gamma_star,
            sr: cdf(-stats.a),
            ar: risk.value,
        })
    }

    /// One point per weight, in order. Later points reuse the previous
    /// optimum as an extra start, so the sweep walks the curve; restarts
    /// within each point run concurrently.
    pub fn pareto_sweep(
        &self,
        lambdas: &[f64],
        opts: &BinOptimOptions,
    ) -> Result<Vec<BinParetoPoint>> {
        if lambdas.is_empty() {
            return Err(Error::InvalidInput("empty lambda grid".into()));
        }
        let mut points = Vec::with_capacity(lambdas.len());
        let mut starts = self.default_starts(opts);
        for &lambda in lambdas {
            let point = self
                .pareto_point_from_starts(lambda, &starts, opts)
                .map_err(|e| e.at_lambda(lambda))?;
            starts.push(point.theta.clone());
            points.push(point);
        }
        Ok(points)
    }
}

/// Scale-invariant classifier statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaStats {
    pub a: f64,
    pub b: f64,
}

/// Result of the scalar dual minimization.
#[derive(Debug, Clone, Copy)]
pub struct AdversarialRiskBin {
    pub value: f64,
    /// Minimizing multiplier; `inf` when `eps = 0` (the infimum is the
    /// large-`gamma` limit).
    pub gamma_star: f64,
    /// Set when the minimizer still sat on the bracket edge after all
    /// expansions.
    pub boundary_warning: bool,
}

/// One record of the classification tradeoff curve; `theta` has unit l2 norm.
#[derive(Debug, Clone)]
pub struct BinParetoPoint {
    pub lambda: f64,
    pub theta: DVector<f64>,
    pub a: f64,
    pub b: f64,
    pub gamma_star: f64,
    pub sr: f64,
    pub ar: f64,
}

/// Options for the sphere search.
#[derive(Debug, Clone)]
pub struct BinOptimOptions {
    pub seed: u64,
    pub random_restarts: usize,
    pub nm_cycles: usize,
    pub nm_iters: usize,
}

impl Default for BinOptimOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            random_restarts: 6,
            nm_cycles: 6,
            nm_iters: 1500,
        }
    }
}

/// Standard risk `Phi(-a)` of a classifier with normalized margin `a`.
pub fn standard_risk(a: f64) -> Probability {
    std_normal_cdf(-a)
}

/// Closed-form expectation of the robust surrogate of the 0-1 loss:
///
/// `Phi(delta - a) + (b gamma / 2) { (a + delta) phi(a - delta) - a phi(a)
///  + (a^2 + 1) [Phi(a - delta) - Phi(a)] }` with `delta = sqrt(2/(b gamma))`.
///
/// The value lies in `[0, 1]` up to roundoff: it is an average of surrogate
/// losses capped at 1.
pub fn expected_phi(a: f64, b: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput(format!("gamma = {gamma} must be > 0")));
    }
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidInput(format!("b = {b} must be > 0 and finite")));
    }
    if !a.is_finite() {
        return Err(Error::InvalidInput(format!("a = {a} must be finite")));
    }
    Ok(expected_phi_raw(a, b, gamma))
}

fn expected_phi_raw(a: f64, b: f64, gamma: f64) -> f64 {
    let bg = b * gamma;
    let delta = (2.0 / bg).sqrt();
    let pdf = std_normal_pdf;
    let val = if !delta.is_finite() || delta - a > DELTA_SATURATION {
        // truncation boundary deep in the tail: Phi(delta - a) -> 1 and the
        // boundary terms underflow
        1.0 + 0.5 * bg * (-(a * pdf(a)) - (a * a + 1.0) * cdf(a))
    } else if delta < 1e-3 {
        // bg/2 = 1/delta^2 amplifies roundoff of the brace (an O(delta^3)
        // difference of O(1) terms); its Taylor form is exact to O(delta^3)
        cdf(delta - a) - pdf(a) * (delta / 3.0 + a * delta * delta / 4.0)
    } else {
        cdf(delta - a)
            + 0.5
                * bg
                * ((a + delta) * pdf(a - delta) - a * pdf(a)
                    + (a * a + 1.0) * (cdf(a - delta) - cdf(a)))
    };
    val.max(0.0)
}

/// Dual adversarial-risk objective at explicit statistics:
/// `F = gamma eps^2 / b + E_phi(a, gamma)`.
pub fn dual_objective(a: f64, b: f64, eps: f64, gamma: f64) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidInput(format!("b = {b} must be > 0 and finite")));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput(format!("gamma = {gamma} must be > 0")));
    }
    Ok(gamma / b * eps * eps + expected_phi_raw(a, 1.0, gamma))
}

/// Adversarial risk at explicit statistics `(a, b)` and budget `eps`.
pub fn adversarial_risk_ab(a: f64, b: f64, eps: f64) -> AdversarialRiskBin {
    let sr = cdf(-a);
    if eps == 0.0 {
        return AdversarialRiskBin {
            value: sr,
            gamma_star: f64::INFINITY,
            boundary_warning: false,
        };
    }
    let (value, gamma_star, boundary_warning) = min_dual_over_gamma(a, b, eps);
    AdversarialRiskBin {
        value: value.clamp(sr, 1.0),
        gamma_star,
        boundary_warning,
    }
}

/// Scans `F` on a log grid over `gamma`, expands the bracket by 10x per side
/// while the best point sits on an edge, then refines with golden-section
/// inside the two neighboring cells. Returns `(min value, argmin, boundary)`.
fn min_dual_over_gamma(a: f64, b: f64, eps: f64) -> (f64, f64, bool) {
    let f = |ln_g: f64| {
        let g = ln_g.exp();
        g / b * eps * eps + expected_phi_raw(a, 1.0, g)
    };

    const GRID: usize = 81;
    const EXPANSIONS: usize = 6;
    let mut lo = -8.0 * LN_10;
    let mut hi = 8.0 * LN_10;
    for expansion in 0..=EXPANSIONS {
        let step = (hi - lo) / (GRID - 1) as f64;
        let mut best_i = 0;
        let mut best_v = f64::INFINITY;
        for i in 0..GRID {
            let v = f(lo + step * i as f64);
            if v < best_v {
                best_v = v;
                best_i = i;
            }
        }
        if best_i == 0 {
            lo -= LN_10;
        } else if best_i == GRID - 1 {
            hi += LN_10;
        } else {
            let (x, v) = crate::optim::golden_section_min(
                f,
                lo + step * (best_i - 1) as f64,
                lo + step * (best_i + 1) as f64,
                72,
            );
            let (value, arg) = if v < best_v {
                (v, x)
            } else {
                (best_v, lo + step * best_i as f64)
            };
            return (value, arg.exp(), false);
        }
        if expansion == EXPANSIONS {
            // still on the edge; report the edge value with a warning
            let edge = if best_i == 0 { lo + LN_10 } else { hi - LN_10 };
            return (best_v, edge.exp(), true);
        }
    }
    unreachable!()
}

/// `||x||_q` with the large-entry factored out so extreme exponents neither
/// overflow nor underflow.
fn dual_norm(x: &DVector<f64>, q: f64) -> f64 {
    if q.is_infinite() {
        return x.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    if q == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = x.iter().map(|v| (v.abs() / m).powf(q)).sum();
    m * s.powf(1.0 / q)
}

/// Orthonormal basis of the tangent space at unit vector `p`: columns
/// `2..d` of the Householder reflection mapping `e1` to `p`.
fn tangent_basis(p: &DVector<f64>) -> DMatrix<f64> {
    let d = p.len();
    let mut u = p.clone();
    u[0] -= 1.0;
    let n = u.norm();
    if n < 1e-12 {
        return DMatrix::from_fn(d, d - 1, |i, j| if i == j + 1 { 1.0 } else { 0.0 });
    }
    u /= n;
    DMatrix::from_fn(d, d - 1, |i, j| {
        let e = if i == j + 1 { 1.0 } else { 0.0 };
        e - 2.0 * u[i] * u[j + 1]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::toeplitz_correlation;
    use approx::assert_relative_eq;

    fn setting(d: usize, rho: f64, eps: f64, r: f64) -> GaussMixSetting {
        let mu = DVector::from_fn(d, |i, _| 0.3 + 0.1 * (i as f64 * 1.7).sin());
        GaussMixSetting::new(mu, toeplitz_correlation(d, rho), eps, r).unwrap()
    }

    #[test]
    fn stats_identity_mu_direction() {
        let s = setting(4, 0.0, 0.5, 2.0);
        let st = s.theta_stats(&s.mu().clone()).unwrap();
        assert_relative_eq!(st.a, s.mu().norm(), epsilon = 1e-14);
        assert_relative_eq!(st.b, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn stats_scale_invariance() {
        let s = setting(5, 0.4, 0.5, 4.0);
        let theta = DVector::from_vec(vec![0.2, -1.0, 0.4, 0.8, -0.3]);
        let st1 = s.theta_stats(&theta).unwrap();
        // power-of-two scaling is exact in binary floating point
        let st4 = s.theta_stats(&(&theta * 4.0)).unwrap();
        assert_eq!(st1, st4);
        let st3 = s.theta_stats(&(&theta * 3.0)).unwrap();
        assert_relative_eq!(st1.a, st3.a, epsilon = 1e-13);
        assert_relative_eq!(st1.b, st3.b, epsilon = 1e-13);
    }

    #[test]
    fn stats_match_extended_precision_fixture() {
        // 50-digit reference for d = 4, r = inf (q = 1), Sigma = L L^T
        let sigma = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.3, -0.2, 0.05, //
                0.3, 0.9, 0.03, -0.345, //
                -0.2, 0.03, 1.49, 0.31, //
                0.05, -0.345, 0.31, 0.8925,
            ],
        );
        let mu = DVector::from_vec(vec![0.9, -0.5, 1.1, 0.4]);
        let theta = DVector::from_vec(vec![0.7, -1.3, 0.2, 2.1]);
        let s = GaussMixSetting::new(mu, sigma, 0.5, f64::INFINITY).unwrap();
        let st = s.theta_stats(&theta).unwrap();
        assert_relative_eq!(st.a, 0.844_373_394_385_291_2, epsilon = 1e-14);
        assert_relative_eq!(st.b, 0.415_361_005_949_161_7, epsilon = 1e-14);
    }

    #[test]
    fn stats_cauchy_schwarz_bound() {
        let s = setting(6, 0.5, 0.5, 2.0);
        let bound = s
            .mu()
            .dot(&s.decomp.pinv_apply(s.mu()))
            .sqrt();
        for k in 0..20 {
            let mut rng = stream_rng(11, k);
            let theta = DVector::from_fn(6, |_, _| StandardNormal.sample(&mut rng));
            let st = s.theta_stats(&theta).unwrap();
            assert!(st.a.abs() <= bound + 1e-10, "a={} bound={}", st.a, bound);
        }
    }

    #[test]
    fn degenerate_direction_is_rejected() {
        // rank-1 covariance, theta orthogonal to its range
        let u = DVector::from_vec(vec![1.0, 1.0]);
        let sigma = &u * u.transpose();
        let s = GaussMixSetting::new(DVector::from_vec(vec![1.0, 0.0]), sigma, 0.1, 2.0).unwrap();
        let theta = DVector::from_vec(vec![1.0, -1.0]);
        assert!(matches!(
            s.theta_stats(&theta),
            Err(Error::DegenerateDirection(_))
        ));
    }

    #[test]
    fn dual_exponents() {
        for (r, q) in [(1.0, f64::INFINITY), (2.0, 2.0), (f64::INFINITY, 1.0), (3.0, 1.5)] {
            let s = setting(3, 0.0, 0.1, r);
            assert_eq!(s.dual_exponent(), q);
        }
    }

    #[test]
    fn standard_risk_values() {
        assert_eq!(standard_risk(0.0).value(), 0.5);
        let s = setting(4, 0.0, 0.0, 2.0);
        let st = s.theta_stats(&s.mu().clone()).unwrap();
        assert_relative_eq!(
            standard_risk(st.a).value(),
            cdf(-s.mu().norm()),
            epsilon = 1e-15
        );
    }

    #[test]
    fn expected_phi_limits() {
        for &a in &[-1.0, 0.0, 0.7, 3.0] {
            let hi = expected_phi(a, 1.0, 1e12).unwrap();
            assert!((hi - cdf(-a)).abs() <= 1e-5, "a={a} got {hi}");
            let lo = expected_phi(a, 1.0, 1e-12).unwrap();
            assert!((lo - 1.0).abs() <= 1e-5, "a={a} got {lo}");
        }
    }

    #[test]
    fn expected_phi_rejects_bad_input() {
        assert!(expected_phi(0.0, 1.0, 0.0).is_err());
        assert!(expected_phi(0.0, 1.0, -1.0).is_err());
        assert!(expected_phi(0.0, 0.0, 1.0).is_err());
        assert!(expected_phi(0.0, -2.0, 1.0).is_err());
    }

    #[test]
    fn expected_phi_bounded_and_monotone_in_a() {
        for &b in &[0.25, 1.0, 4.0] {
            for &gamma in &[0.01, 0.5, 2.0, 50.0] {
                let mut prev = f64::INFINITY;
                for i in -40..=40 {
                    let a = 0.25 * i as f64;
                    let v = expected_phi(a, b, gamma).unwrap();
                    assert!((0.0..=1.0 + 1e-10).contains(&v), "out of range at a={a}: {v}");
                    assert!(v <= prev + 1e-12, "not nonincreasing at a={a}");
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn adversarial_risk_eps_zero_is_standard() {
        let s = setting(4, 0.3, 0.0, 2.0);
        let theta = DVector::from_vec(vec![0.5, 0.1, -0.2, 0.9]);
        let st = s.theta_stats(&theta).unwrap();
        let r = s.adversarial_risk(&theta).unwrap();
        assert_eq!(r.value, cdf(-st.a));
        assert!(r.gamma_star.is_infinite());
    }

    #[test]
    fn adversarial_risk_separated_classes_vanishes() {
        // At a = 20, eps = 0.1 both risks are negligible, but the adversary
        // can always buy error mass p at transport cost sqrt(p) * a, so the
        // infimum sits near eps^2/a^2 = 2.5e-5, not at zero.
        let r = adversarial_risk_ab(20.0, 1.0, 0.1);
        assert!(cdf(-20.0) <= 1e-6);
        assert!(r.value <= 2e-4, "ar = {}", r.value);
        assert!(r.value >= 2.5e-5, "ar = {} below the transport bound", r.value);
    }

    #[test]
    fn adversarial_risk_matches_dense_grid_scan() {
        let (a, b, eps) = (1.0, 1.0, 0.5);
        let fast = adversarial_risk_ab(a, b, eps);
        let mut best = f64::INFINITY;
        let n = 100_000;
        for i in 0..=n {
            let gamma = 1e-8 * (1e16_f64).powf(i as f64 / n as f64);
            let v = dual_objective(a, b, eps, gamma).unwrap();
            if v < best {
                best = v;
            }
        }
        assert!(
            (fast.value - best).abs() <= 1e-6,
            "golden {} grid {}",
            fast.value,
            best
        );
        assert!(!fast.boundary_warning);
    }

    #[test]
    fn adversarial_risk_dominates_standard_and_grows_with_eps() {
        let mut prev = 0.0;
        for &eps in &[0.0, 0.1, 0.3, 0.6, 1.0] {
            let r = adversarial_risk_ab(1.2, 0.8, eps);
            assert!(r.value >= cdf(-1.2) - 1e-12);
            assert!(r.value >= prev - 1e-12, "not nondecreasing in eps");
            prev = r.value;
        }
    }

    #[test]
    fn weighted_objective_decreases_in_a() {
        // d/da [lambda Phi(-a) + min_gamma F] <= -lambda phi(-a) < 0
        let lambda = 0.7;
        let h = 1e-4;
        for &b in &[0.5, 1.0, 2.0] {
            for &a in &[-1.0, 0.0, 1.0, 2.0] {
                let obj = |a: f64| {
                    let (v, _, _) = min_dual_over_gamma(a, b, 0.4);
                    lambda * cdf(-a) + v
                };
                let slope = (obj(a + h) - obj(a - h)) / (2.0 * h);
                assert!(slope < 0.0, "slope {slope} at a={a} b={b}");
            }
        }
    }

    #[test]
    fn pareto_point_eps_zero_takes_fisher_direction() {
        let s = setting(4, 0.3, 0.0, f64::INFINITY);
        let opts = BinOptimOptions::default();
        let p = s.pareto_point(1.0, &opts).unwrap();
        let fisher = s.decomp.pinv_apply(s.mu()).normalize();
        let angle = p.theta.dot(&fisher).abs().min(1.0).acos();
        assert!(angle <= 1e-3, "angle {angle}");
        let a_best = s.mu().dot(&s.decomp.pinv_apply(s.mu())).sqrt();
        assert!((p.sr - cdf(-a_best)).abs() <= 1e-8);
        assert_eq!(p.sr, p.ar);
    }

    #[test]
    fn pareto_point_r2_identity_collapses_to_mu() {
        let s = setting(4, 0.0, 0.5, 2.0);
        let opts = BinOptimOptions::default();
        let p = s.pareto_point(0.5, &opts).unwrap();
        let mu_dir = s.mu().normalize();
        let angle = p.theta.dot(&mu_dir).abs().min(1.0).acos();
        assert!(angle <= 1e-3, "angle {angle}");
        assert!((p.sr - cdf(-s.mu().norm())).abs() <= 1e-8);
    }

    #[test]
    fn unit_theta_and_scale_invariant_risks() {
        let s = setting(5, 0.2, 0.4, f64::INFINITY);
        let p = s.pareto_point(2.0, &BinOptimOptions::default()).unwrap();
        assert_relative_eq!(p.theta.norm(), 1.0, epsilon = 1e-12);
        // risks are invariant under positive scaling of theta
        let scaled = &p.theta * 7.5;
        let r1 = s.adversarial_risk(&p.theta).unwrap();
        let r2 = s.adversarial_risk(&scaled).unwrap();
        assert_relative_eq!(r1.value, r2.value, epsilon = 1e-12);
    }

    #[test]
    fn sweep_orders_risks() {
        let s = setting(4, 0.0, 0.5, f64::INFINITY);
        let lambdas = [0.0, 0.1, 1.0, 10.0, 100.0];
        let points = s.pareto_sweep(&lambdas, &BinOptimOptions::default()).unwrap();
        for w in points.windows(2) {
            assert!(w[1].sr <= w[0].sr + 1e-9, "sr not nonincreasing");
            assert!(w[1].ar >= w[0].ar - 1e-9, "ar not nondecreasing");
        }
        for p in &points {
            assert!(p.ar >= p.sr - 1e-12);
        }
    }

    #[test]
    fn sweep_eps_zero_equal_risks() {
        let s = setting(4, 0.2, 0.0, f64::INFINITY);
        let points = s
            .pareto_sweep(&[0.5, 5.0], &BinOptimOptions::default())
            .unwrap();
        for p in points {
            assert_eq!(p.sr, p.ar);
        }
    }

    #[test]
    fn tangent_basis_is_orthonormal_complement() {
        let p = DVector::from_vec(vec![0.4, -0.6, 0.2, 0.66]).normalize();
        let b = tangent_basis(&p);
        let gram = b.transpose() * &b;
        assert_relative_eq!(gram, DMatrix::identity(3, 3), epsilon = 1e-12);
        let pb = p.transpose() * &b;
        assert!(pb.iter().all(|v| v.abs() < 1e-12));
    }
}
