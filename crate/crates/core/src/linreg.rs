//! Linear regression with quadratic loss under a quadratic feature-transport
//! adversary: closed-form risks and the weighted-sum tradeoff solver.
//!
//! With second moments `Sigma = E[x x^T]`, `v = E[y x]`, `sigma_y2 = E[y^2]`:
//!
//! - standard risk   `SR(theta) = sigma_y2 + theta^T Sigma theta - 2 v^T theta`
//! - adversarial risk `AR(theta) = (sqrt(SR(theta)) + eps ||theta||)^2`
//!
//! The minimizer of `lambda * SR + AR` is either `theta = 0` or the
//! ridge-like point `(Sigma + gamma* I)^{-1} v`, where `gamma*` solves a
//! scalar fixed-point equation; see [`LinRegSetting::solve_pareto_point`].

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{SpectralDecomp, EIG_FLOOR, PSD_TOL};

/// Default fixed-point residual target.
pub const DEFAULT_FIXED_POINT_TOL: f64 = 1e-12;

/// Largest multiplier bracket explored before declaring the zero branch.
const GAMMA_MAX: f64 = 1e12;

/// Finite stand-in for `lambda = inf` documented for callers that want the
/// standard-risk endpoint of the curve.
pub const LAMBDA_INF_PROXY: f64 = 1e6;

/// Second-moment description of the regression problem plus the adversary
/// budget `eps` (in l2 feature units).
#[derive(Debug, Clone)]
pub struct LinRegSetting {
    sigma: DMatrix<f64>,
    v: DVector<f64>,
    sigma_y2: f64,
    eps: f64,
    decomp: SpectralDecomp,
}

impl LinRegSetting {
    /// Validates and builds a setting.
    ///
    /// `sigma` must be symmetric PSD (up to roundoff), the joint second
    /// moment matrix of `(x, y)` must be PSD, and `eps >= 0`.
    pub fn new(sigma: DMatrix<f64>, v: DVector<f64>, sigma_y2: f64, eps: f64) -> Result<Self> {
        let decomp = SpectralDecomp::new_psd(&sigma)?;
        if v.len() != sigma.nrows() {
            return Err(Error::DimensionMismatch {
                expected: sigma.nrows(),
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) || !sigma_y2.is_finite() {
            return Err(Error::InvalidSetting("non-finite moments".into()));
        }
        if sigma_y2 < 0.0 {
            return Err(Error::InvalidSetting(format!("sigma_y2 = {sigma_y2} < 0")));
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidSetting(format!("eps = {eps} must be >= 0")));
        }
        // PSD of the joint second moments of (x, y): sigma_y2 >= v^T Sigma^+ v
        let resid = sigma_y2 - v.dot(&decomp.pinv_apply(&v));
        if resid < -PSD_TOL {
            return Err(Error::InvalidSetting(format!(
                "joint second moments not PSD: sigma_y2 - v^T Sigma^+ v = {resid:e}"
            )));
        }
        Ok(Self {
            sigma,
            v,
            sigma_y2,
            eps,
        decomp,
        })
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn sigma_y2(&self) -> f64 {
        self.sigma_y2
    }

    pub fn second_moment(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn cross_moment(&self) -> &DVector<f64> {
        &self.v
    }

    /// Same moments with a different adversary budget.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.sigma.clone(), self.v.clone(), self.sigma_y2, eps)
    }

    fn check_dim(&self, theta: &DVector<f64>) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: theta.len(),
            });
        }
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("theta has non-finite entries".into()));
        }
        Ok(())
    }

    /// `SR(theta)`, clamped at zero against roundoff.
    pub fn standard_risk(&self, theta: &DVector<f64>) -> Result<f64> {
        self.check_dim(theta)?;
        let sr = self.sigma_y2 + self.decomp.quad_form(theta) - 2.0 * self.v.dot(theta);
        Ok(sr.max(0.0))
    }

    /// `AR(theta) = (sqrt(SR) + eps ||theta||)^2`.
    pub fn adversarial_risk(&self, theta: &DVector<f64>) -> Result<f64> {
        let sr = self.standard_risk(theta)?;
        let root = sr.sqrt() + self.eps * theta.norm();
        Ok(root * root)
    }

    /// `lambda * SR(theta) + AR(theta)`.
    pub fn weighted_objective(&self, lambda: f64, theta: &DVector<f64>) -> Result<f64> {
        let sr = self.standard_risk(theta)?;
        let nrm = theta.norm();
        let ar = {
            let root = sr.sqrt() + self.eps * nrm;
            root * root
        };
        Ok(lambda * sr + ar)
    }

    /// `A(gamma)` of the stationary system: `sqrt(SR(w)) / ||w||` at
    /// `w = (Sigma + gamma I)^{-1} v`. The radicand is clamped at zero;
    /// roundoff can push it slightly negative at the least-squares optimum.
    fn stationary_ratio(&self, gamma: f64) -> (f64, DVector<f64>) {
        let w = self.decomp.shifted_solve(&self.v, gamma);
        let norm = w.norm();
        if norm == 0.0 {
            return (f64::INFINITY, w);
        }
        let sr = (self.sigma_y2 + self.decomp.quad_form(&w) - 2.0 * self.v.dot(&w)).max(0.0);
        (sr.sqrt() / norm, w)
    }

    /// Right-hand side of the fixed-point equation, written division-free in
    /// `A` so `A = 0` (perfect interpolation) and `A -> inf` are both safe:
    /// `rhs = eps A (eps + A) / ((1 + lambda) A + eps)`.
    fn fixed_point_rhs(&self, lambda: f64, a: f64) -> f64 {
        if a.is_infinite() {
            return f64::INFINITY;
        }
        self.eps * a * (self.eps + a) / ((1.0 + lambda) * a + self.eps)
    }

    /// Solves the weighted-sum problem `min_theta lambda*SR + AR` for one
    /// `lambda`, returning the better of the zero candidate and the
    /// stationary candidate `(Sigma + gamma* I)^{-1} v`.
    ///
    /// `gamma*` is found by damped fixed-point iteration (damping 1/2) with a
    /// bisection fallback on an expanding bracket; if no stationary root
    /// exists below `1e12` the zero branch is declared. When several roots
    /// are bracketed, the objective picks the best.
    pub fn solve_pareto_point(&self, lambda: f64, tol: f64) -> Result<ParetoPoint> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!(
                "lambda must be finite and >= 0, got {lambda}; use {LAMBDA_INF_PROXY:e} as the lambda = inf proxy"
            )));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!("tol must be > 0, got {tol}")));
        }

        let zero_obj = (1.0 + lambda) * self.sigma_y2;
        let zero_point = ParetoPoint {
            lambda,
            theta: DVector::zeros(self.dim()),
            gamma_star: 0.0,
            sr: self.sigma_y2,
            ar: self.sigma_y2,
            branch: Branch::Zero,
        };

        if self.v.norm() == 0.0 {
            // SR(theta) = sigma_y2 + theta^T Sigma theta is minimized at 0
            return Ok(zero_point);
        }

        let mut roots: Vec<f64> = Vec::new();
        if self.eps == 0.0 {
            roots.push(0.0);
        } else {
            // damped iteration
            let mut gamma = self.eps * self.eps;
            let mut residual = f64::INFINITY;
            for _ in 0..200 {
                let (a, _) = self.stationary_ratio(gamma);
                let rhs = self.fixed_point_rhs(lambda, a);
                if !rhs.is_finite() {
                    break;
                }
                residual = (gamma - rhs).abs();
                if residual <= tol {
                    break;
                }
                gamma = 0.5 * gamma + 0.5 * rhs;
            }
            if residual <= tol {
                roots.push(gamma);
            } else {
                roots = self.bisect_fixed_point(lambda, tol)?;
            }
        }

        let mut best = zero_point;
        let mut best_obj = zero_obj;
        for gamma in roots {
            let (a, w) = self.stationary_ratio(gamma);
            if !a.is_finite() {
                continue;
            }
            let norm2 = w.norm_squared();
            let sr = a * a * norm2;
            let ar = (a + self.eps) * (a + self.eps) * norm2;
            let obj = lambda * sr + ar;
            if obj < best_obj {
                best_obj = obj;
                best = ParetoPoint {
                    lambda,
                    theta: w,
                    gamma_star: gamma,
                    sr,
                    ar,
                    branch: Branch::Stationary,
                };
            }
        }
        Ok(best)
    }

    /// Bisection fallback: expands the upper bracket geometrically, scans for
    /// sign changes of `g(gamma) = gamma - rhs(gamma)`, and polishes each one.
    /// No sign change up to [`GAMMA_MAX`] means no stationary candidate.
    fn bisect_fixed_point(&self, lambda: f64, tol: f64) -> Result<Vec<f64>> {
        let g = |gamma: f64| {
            let (a, _) = self.stationary_ratio(gamma);
            let rhs = self.fixed_point_rhs(lambda, a);
            gamma - rhs
        };

        let mut hi = 1.0;
        while g(hi) <= 0.0 {
            hi *= 2.0;
            if hi > GAMMA_MAX {
                return Ok(Vec::new());
            }
        }

        // scan for every sign change: 0 plus a log-spaced ladder up to hi
        let mut grid = vec![0.0];
        let lo_exp = (hi * 1e-12).max(EIG_FLOOR);
        let n_pts = 96;
        for i in 0..=n_pts {
            grid.push(lo_exp * (hi / lo_exp).powf(i as f64 / n_pts as f64));
        }

        let mut roots = Vec::new();
        let mut prev_x = grid[0];
        let mut prev_g = g(prev_x);
        for &x in &grid[1..] {
            let gx = g(x);
            if prev_g <= 0.0 && gx > 0.0 {
                let root = bisect_root(&g, prev_x, x);
                let residual = g(root).abs();
                if residual <= tol.max(64.0 * f64::EPSILON * (1.0 + root)) {
                    roots.push(root);
                } else {
                    return Err(Error::NoConvergence {
                        context: format!("fixed-point bisection at lambda={lambda}"),
                        residual,
                    });
                }
            }
            prev_x = x;
            prev_g = gx;
        }
        Ok(roots)
    }

    /// One [`ParetoPoint`] per weight, in the given order. Points are solved
    /// concurrently under the `parallel` feature; errors carry the offending
    /// `lambda`.
    pub fn pareto_sweep(&self, lambdas: &[f64]) -> Result<Vec<ParetoPoint>> {
        if lambdas.is_empty() {
            return Err(Error::InvalidInput("empty lambda grid".into()));
        }
        exec::map_slice(lambdas, |&lambda| {
            self.solve_pareto_point(lambda, DEFAULT_FIXED_POINT_TOL)
                .map_err(|e| e.at_lambda(lambda))
        })
        .into_iter()
        .collect()
    }
}

/// Generative shorthand `y = x^T theta0 + w`, `x ~ N(0, Sigma)`,
/// `w ~ N(0, noise_sigma^2)`.
#[derive(Debug, Clone)]
pub struct GenerativeLinReg {
    pub theta0: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub noise_sigma: f64,
}

impl GenerativeLinReg {
    /// Converts to moment form: `v = Sigma theta0`,
    /// `sigma_y2 = noise_sigma^2 + theta0^T Sigma theta0`.
    pub fn to_setting(&self, eps: f64) -> Result<LinRegSetting> {
        if self.noise_sigma < 0.0 {
            return Err(Error::InvalidSetting(format!(
                "noise_sigma = {} < 0",
                self.noise_sigma
            )));
        }
        if self.theta0.len() != self.sigma.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.sigma.nrows(),
                got: self.theta0.len(),
            });
        }
        let v = &self.sigma * &self.theta0;
        let sigma_y2 = self.noise_sigma * self.noise_sigma + self.theta0.dot(&v);
        LinRegSetting::new(self.sigma.clone(), v, sigma_y2, eps)
    }
}

/// Which candidate of the weighted-sum problem won.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `theta = 0`; both risks equal `sigma_y2`.
    Zero,
    /// The ridge-like stationary point `(Sigma + gamma* I)^{-1} v`.
    Stationary,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::Zero => write!(f, "zero"),
            Branch::Stationary => write!(f, "stationary"),
        }
    }
}

/// One record of the tradeoff curve.
#[derive(Debug, Clone)]
pub struct ParetoPoint {
    pub lambda: f64,
    pub theta: DVector<f64>,
    pub gamma_star: f64,
    pub sr: f64,
    pub ar: f64,
    pub branch: Branch,
}

/// Robust surrogate of the quadratic loss at anchor `(x0, y0)`:
/// `+inf` when `gamma < ||theta||^2`, otherwise
/// `gamma (y0 - x0^T theta)^2 / (gamma - ||theta||^2)`.
pub fn robust_surrogate_phi(theta: &DVector<f64>, gamma: f64, x0: &DVector<f64>, y0: f64) -> f64 {
    debug_assert!(gamma >= 0.0, "gamma must be >= 0");
    let norm2 = theta.norm_squared();
    let residual = y0 - theta.dot(x0);
    if norm2 == 0.0 {
        // loss does not depend on x; the supremum is the unperturbed loss
        return residual * residual;
    }
    if gamma < norm2 {
        return f64::INFINITY;
    }
    if residual == 0.0 {
        return 0.0;
    }
    if gamma == norm2 {
        return f64::INFINITY;
    }
    gamma * residual * residual / (gamma - norm2)
}

fn bisect_root(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    // invariant: g(lo) <= 0 < g(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
