//! Random-features regression on the sphere: Monte-Carlo standard risk,
//! first-order adversarial risk, and the weighted-sum tradeoff solver.
//!
//! Data lives on the sphere of radius `sqrt(d)`; responses come from a
//! trace-centered random quadratic plus Gaussian noise. The model is
//! `theta^T relu(U x)` with `N` frozen unit rows in `U`. Risks over a fixed
//! sample batch:
//!
//! - `SR(theta) = mean_i (f(x_i) - theta^T s_i)^2 + sigma^2`
//! - `AR(theta) = SR(theta)
//!    + 2 eps sqrt(mean_i [((f_i - theta^T s_i)^2 + sigma^2) * ||U^T D_i theta||^2])`
//!
//! with `s_i = relu(U x_i)` and `D_i = diag(relu'(U x_i))`. The `AR` form is
//! a first-order expansion in `eps`; the remainder is dropped and results are
//! labeled first-order accordingly.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec;
use crate::optim::{lbfgs_minimize, LbfgsOptions};
use crate::rng::{derive_seed, stream_rng};

/// Stream carrying the training batch of a solve.
pub const STREAM_TRAIN: u64 = 0;
/// Stream carrying the held-out evaluation batch of a solve.
pub const STREAM_EVAL: u64 = 1;
/// Streams `STREAM_WEIGHTS_BASE + width_index` carry first-layer weights.
pub const STREAM_WEIGHTS_BASE: u64 = 2;

/// Smoothing added under the square root of the optimizer objective so the
/// gradient exists at `theta = 0`.
const SQRT_SMOOTHING: f64 = 1e-12;

/// Per-realization seed of a sweep cell row.
pub fn realization_seed(master: u64, realization: usize) -> u64 {
    derive_seed(master, realization as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
}

/// Problem description: dimensions, noise, budget, and Monte-Carlo size.
#[derive(Debug, Clone)]
pub struct RFSetting {
    pub dim: usize,
    pub width: usize,
    pub noise_sigma: f64,
    pub eps: f64,
    pub n_mc: usize,
    pub activation: Activation,
}

impl RFSetting {
    pub fn new(dim: usize, width: usize, noise_sigma: f64, eps: f64, n_mc: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidSetting(format!("dim = {dim} must be >= 2")));
        }
        if width == 0 || n_mc == 0 {
            return Err(Error::InvalidSetting("width and n_mc must be >= 1".into()));
        }
        if noise_sigma < 0.0 || !noise_sigma.is_finite() {
            return Err(Error::InvalidSetting(format!(
                "noise_sigma = {noise_sigma} must be >= 0"
            )));
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidSetting(format!("eps = {eps} must be >= 0")));
        }
        Ok(Self {
            dim,
            width,
            noise_sigma,
            eps,
            n_mc,
            activation: Activation::Relu,
        })
    }

    /// The first-order adversarial form is an expansion for small budgets;
    /// past this point the dropped remainder may matter.
    pub fn first_order_caveat(&self) -> bool {
        self.eps > 0.5
    }
}

/// Frozen first-layer weights plus trainable second layer.
#[derive(Debug, Clone)]
pub struct RFModel {
    pub u: DMatrix<f64>,
    pub theta: DVector<f64>,
}

impl RFModel {
    /// Validates that every row of `u` is unit l2 norm (within 1e-12) and
    /// that `theta` matches the width.
    pub fn new(u: DMatrix<f64>, theta: DVector<f64>) -> Result<Self> {
        check_unit_rows(&u)?;
        if theta.len() != u.nrows() {
            return Err(Error::DimensionMismatch {
                expected: u.nrows(),
                got: theta.len(),
            });
        }
        Ok(Self { u, theta })
    }

    /// `width` unit rows drawn uniformly on the sphere `S^{d-1}(1)`.
    pub fn sample_weights(width: usize, dim: usize, rng: &mut ChaCha12Rng) -> DMatrix<f64> {
        let mut u = DMatrix::zeros(width, dim);
        for i in 0..width {
            let row = random_direction(dim, rng);
            for j in 0..dim {
                u[(i, j)] = row[j];
            }
        }
        u
    }
}

fn check_unit_rows(u: &DMatrix<f64>) -> Result<()> {
    for i in 0..u.nrows() {
        let norm: f64 = (0..u.ncols()).map(|j| u[(i, j)] * u[(i, j)]).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSetting(format!(
                "row {i} of U has norm {norm}, expected 1"
            )));
        }
    }
    Ok(())
}

fn random_direction(dim: usize, rng: &mut ChaCha12Rng) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| {
            let z: f64 = StandardNormal.sample(rng);
            z
        });
        let n = v.norm();
        if n > 0.0 {
            return v / n;
        }
    }
}

/// Trace-centered random quadratic target
/// `f(x) = beta0 + x^T beta1 + (fstar / d) (x^T G x - tr G)`; the centering
/// makes the quadratic part mean-zero on the sphere of radius `sqrt(d)`.
#[derive(Debug, Clone)]
pub struct QuadraticTarget {
    pub beta0: f64,
    pub beta1: DVector<f64>,
    pub fstar: f64,
    pub g: DMatrix<f64>,
}

impl QuadraticTarget {
    pub fn new(beta0: f64, beta1: DVector<f64>, fstar: f64, g: DMatrix<f64>) -> Result<Self> {
        if g.nrows() != beta1.len() || g.ncols() != beta1.len() {
            return Err(Error::DimensionMismatch {
                expected: beta1.len(),
                got: g.nrows(),
            });
        }
        Ok(Self {
            beta0,
            beta1,
            fstar,
            g,
        })
    }

    /// The standard random draw: `beta0 = 0`, entries of `beta1` iid
    /// `N(0, 1/d)`, entries of `G` iid `N(0, 1)`.
    pub fn sample(dim: usize, fstar: f64, rng: &mut ChaCha12Rng) -> Self {
        let scale = 1.0 / (dim as f64).sqrt();
        let beta1 = DVector::from_fn(dim, |_, _| {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        });
        let g = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
        Self {
            beta0: 0.0,
            beta1,
            fstar,
            g,
        }
    }

    pub fn dim(&self) -> usize {
        self.beta1.len()
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        assert_eq!(x.len(), self.dim(), "target_eval dimension mismatch");
        let d = self.dim() as f64;
        let quad = (x.transpose() * &self.g * x)[(0, 0)] - self.g.trace();
        self.beta0 + self.beta1.dot(x) + self.fstar / d * quad
    }

    fn eval_row(&self, x: &DMatrix<f64>, i: usize) -> f64 {
        let d = self.dim();
        let mut lin = self.beta0;
        let mut quad = 0.0;
        for j in 0..d {
            let xj = x[(i, j)];
            lin += xj * self.beta1[j];
            let mut acc = 0.0;
            for k in 0..d {
                acc += self.g[(j, k)] * x[(i, k)];
            }
            quad += xj * acc;
        }
        lin + self.fstar / d as f64 * (quad - self.g.trace())
    }
}

/// `n` iid points uniform on the sphere of radius `sqrt(d)` (normalized
/// Gaussian draws), one per row.
pub fn sample_sphere(dim: usize, n: usize, rng: &mut ChaCha12Rng) -> DMatrix<f64> {
    assert!(dim >= 1 && n >= 1, "sample_sphere needs dim >= 1, n >= 1");
    let mut m = DMatrix::zeros(n, dim);
    let radius = (dim as f64).sqrt();
    for i in 0..n {
        let dir = random_direction(dim, rng);
        for j in 0..dim {
            m[(i, j)] = dir[j] * radius;
        }
    }
    m
}

/// Sphere points with noisy responses `y = f(x) + noise_sigma * w`.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl SampleBatch {
    pub fn generate(
        target: &QuadraticTarget,
        noise_sigma: f64,
        dim: usize,
        n: usize,
        rng: &mut ChaCha12Rng,
    ) -> Self {
        let x = sample_sphere(dim, n, rng);
        let y = DVector::from_fn(n, |i, _| {
            let w: f64 = StandardNormal.sample(rng);
            target.eval_row(&x, i) + noise_sigma * w
        });
        Self { x, y }
    }

    /// Validates row radii `sqrt(d)` within 1e-10.
    pub fn from_parts(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        let radius = (x.ncols() as f64).sqrt();
        for i in 0..x.nrows() {
            let norm: f64 = (0..x.ncols()).map(|j| x[(i, j)] * x[(i, j)]).sum::<f64>().sqrt();
            if (norm - radius).abs() > 1e-10 {
                return Err(Error::InvalidInput(format!(
                    "row {i} has radius {norm}, expected {radius}"
                )));
            }
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The weighted tradeoff objective on a fixed batch, with features cached:
/// `value(lambda, theta) = (1 + lambda) SR(theta) + 2 eps sqrt(m + 1e-12)`
/// where `m` is the batch mean of the adversarial bracket. Minimizing it for
/// a given `lambda` traces the weighted-sum curve `lambda * SR + AR`.
pub struct Objective {
    s: DMatrix<f64>,
    mask: DMatrix<f64>,
    u: DMatrix<f64>,
    f: DVector<f64>,
    sigma2: f64,
    eps: f64,
    min_abs_pre: f64,
}

impl Objective {
    pub fn new(
        setting: &RFSetting,
        u: &DMatrix<f64>,
        target: &QuadraticTarget,
        batch: &SampleBatch,
    ) -> Result<Self> {
        if u.ncols() != setting.dim || u.nrows() != setting.width {
            return Err(Error::DimensionMismatch {
                expected: setting.width,
                got: u.nrows(),
            });
        }
        if batch.x.ncols() != setting.dim || target.dim() != setting.dim {
            return Err(Error::DimensionMismatch {
                expected: setting.dim,
                got: batch.x.ncols(),
            });
        }
        check_unit_rows(u)?;
        let pre = &batch.x * u.transpose();
        let s = pre.map(|v| v.max(0.0));
        // relu'(0) = 0: strict inequality keeps the derivative deterministic
        let mask = pre.map(|v| if v > 0.0 { 1.0 } else { 0.0 });
        let min_abs_pre = pre.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        let n = batch.len();
        let f = DVector::from_fn(n, |i, _| target.eval_row(&batch.x, i));
        Ok(Self {
            s,
            mask,
            u: u.clone(),
            f,
            sigma2: setting.noise_sigma * setting.noise_sigma,
            eps: setting.eps,
            min_abs_pre,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.f.len()
    }

    pub fn width(&self) -> usize {
        self.u.nrows()
    }

    /// Smallest `|u_i^T x|` in the batch; a gradient check wants this away
    /// from zero (ReLU kinks).
    pub fn min_abs_preactivation(&self) -> f64 {
        self.min_abs_pre
    }

    fn bracket_mean(&self, theta: &DVector<f64>, r: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = self.n_samples() as f64;
        let mut w = self.mask.clone();
        for (a, mut col) in w.column_iter_mut().enumerate() {
            col *= theta[a];
        }
        let j = &w * &self.u; // n x d rows U^T D_i theta
        let g = DVector::from_fn(self.n_samples(), |i, _| j.row(i).norm_squared());
        let m = (0..self.n_samples())
            .map(|i| (r[i] * r[i] + self.sigma2) * g[i])
            .sum::<f64>()
            / n;
        (m, g, j)
    }

    /// `(SR, first-order AR)` of the batch at `theta`, without smoothing.
    pub fn risks(&self, theta: &DVector<f64>) -> (f64, f64) {
        let n = self.n_samples() as f64;
        let r = &self.s * theta - &self.f;
        let sr = r.norm_squared() / n + self.sigma2;
        if self.eps == 0.0 {
            return (sr, sr);
        }
        let (m, _, _) = self.bracket_mean(theta, &r);
        (sr, sr + 2.0 * self.eps * m.sqrt())
    }

    pub fn value(&self, lambda: f64, theta: &DVector<f64>) -> f64 {
        let n = self.n_samples() as f64;
        let r = &self.s * theta - &self.f;
        let sr = r.norm_squared() / n + self.sigma2;
        if self.eps == 0.0 {
            return (1.0 + lambda) * sr;
        }
        let (m, _, _) = self.bracket_mean(theta, &r);
        (1.0 + lambda) * sr + 2.0 * self.eps * (m + SQRT_SMOOTHING).sqrt()
    }

    pub fn value_grad(&self, lambda: f64, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        let n = self.n_samples() as f64;
        let r = &self.s * theta - &self.f;
        let sr = r.norm_squared() / n + self.sigma2;
        let grad_sr = self.s.tr_mul(&r) * (2.0 * (1.0 + lambda) / n);
        if self.eps == 0.0 {
            return ((1.0 + lambda) * sr, grad_sr);
        }
        let (m, g, j) = self.bracket_mean(theta, &r);
        let root = (m + SQRT_SMOOTHING).sqrt();
        let value = (1.0 + lambda) * sr + 2.0 * self.eps * root;

        // d m / d theta = (2/n) [ S^T (r .* g) + (mask .* (J U^T))^T c ]
        let rg = DVector::from_fn(self.n_samples(), |i, _| r[i] * g[i]);
        let c = DVector::from_fn(self.n_samples(), |i, _| r[i] * r[i] + self.sigma2);
        let k = &j * self.u.transpose();
        let mk = self.mask.component_mul(&k);
        let dm = (self.s.tr_mul(&rg) + mk.tr_mul(&c)) * (2.0 / n);
        let grad = grad_sr + dm * (self.eps / root);
        (value, grad)
    }

    /// Ridge-regularized least-squares point, used to warm-start the solver;
    /// for `eps = 0` it already minimizes the objective.
    pub fn least_squares_start(&self) -> DVector<f64> {
        let nw = self.width();
        let gram = self.s.tr_mul(&self.s);
        let rhs = self.s.tr_mul(&self.f);
        let mut ridge = 1e-10 * (gram.trace() / nw as f64).max(1e-300);
        for _ in 0..40 {
            let mut shifted = gram.clone();
            for i in 0..nw {
                shifted[(i, i)] += ridge;
            }
            if let Some(chol) = shifted.cholesky() {
                return chol.solve(&rhs);
            }
            ridge *= 100.0;
        }
        DVector::zeros(nw)
    }
}

/// Empirical standard risk `mean (f - theta^T s)^2 + sigma^2`.
pub fn sr_empirical(
    setting: &RFSetting,
    model: &RFModel,
    target: &QuadraticTarget,
    batch: &SampleBatch,
) -> Result<f64> {
    let obj = Objective::new(setting, &model.u, target, batch)?;
    Ok(obj.risks(&model.theta).0)
}

/// First-order adversarial risk on the batch.
pub fn ar_firstorder(
    setting: &RFSetting,
    model: &RFModel,
    target: &QuadraticTarget,
    batch: &SampleBatch,
) -> Result<f64> {
    let obj = Objective::new(setting, &model.u, target, batch)?;
    Ok(obj.risks(&model.theta).1)
}

#[derive(Debug, Clone)]
pub struct RfSolveOptions {
    /// Target `||grad|| <= grad_tol * (1 + |objective|)`.
    pub grad_tol: f64,
    pub max_iters: usize,
}

impl Default for RfSolveOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            max_iters: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RfSolution {
    pub theta: DVector<f64>,
    /// Held-out standard risk.
    pub sr: f64,
    /// Held-out first-order adversarial risk.
    pub ar: f64,
    pub objective: f64,
    pub grad_norm: f64,
    pub iters: usize,
}

/// First-order optimality accepted by the solver postcondition.
const GRAD_ACCEPT: f64 = 1e-5;

fn solve_on(
    objective: &Objective,
    eval: &Objective,
    lambda: f64,
    start: &DVector<f64>,
    opts: &RfSolveOptions,
) -> Result<RfSolution> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    let res = lbfgs_minimize(
        |theta| objective.value_grad(lambda, theta),
        start,
        &LbfgsOptions {
            max_iters: opts.max_iters,
            grad_tol: opts.grad_tol,
            ..Default::default()
        },
    );
    if res.grad_norm > GRAD_ACCEPT * (1.0 + res.value.abs()) {
        return Err(Error::NoConvergence {
            context: format!("weighted solve at lambda={lambda}"),
            residual: res.grad_norm,
        });
    }
    let (sr, ar) = eval.risks(&res.x);
    Ok(RfSolution {
        theta: res.x,
        sr,
        ar,
        objective: res.value,
        grad_norm: res.grad_norm,
        iters: res.iters,
    })
}

/// Minimizes the weighted objective for one `lambda`. The training batch
/// comes from stream [`STREAM_TRAIN`] of `seed`, the held-out evaluation
/// batch from [`STREAM_EVAL`]; reported risks use the held-out batch.
pub fn solve_pareto(
    setting: &RFSetting,
    u: &DMatrix<f64>,
    target: &QuadraticTarget,
    lambda: f64,
    seed: u64,
    opts: &RfSolveOptions,
) -> Result<RfSolution> {
    let train = SampleBatch::generate(
        target,
        setting.noise_sigma,
        setting.dim,
        setting.n_mc,
        &mut stream_rng(seed, STREAM_TRAIN),
    );
    let eval = SampleBatch::generate(
        target,
        setting.noise_sigma,
        setting.dim,
        setting.n_mc,
        &mut stream_rng(seed, STREAM_EVAL),
    );
    let obj = Objective::new(setting, u, target, &train)?;
    let ev = Objective::new(setting, u, target, &eval)?;
    solve_on(&obj, &ev, lambda, &obj.least_squares_start(), opts)
}

/// One sweep record; `error` is set when the cell's solve failed and the
/// risk fields are then NaN.
#[derive(Debug, Clone)]
pub struct RfCurveRecord {
    pub width: usize,
    pub realization: usize,
    pub lambda: f64,
    pub sr: f64,
    pub ar: f64,
    pub theta_norm: f64,
    pub error: Option<String>,
}

/// Full sweep over `widths x realizations x lambdas`.
///
/// Per realization one training and one evaluation batch are drawn and
/// shared across all widths and weights (common random numbers); `U` is
/// redrawn per `(width, realization)`. Cells run concurrently; within a
/// cell, `lambda` points run in order and warm-start from the previous
/// optimum. Solver failures are recorded per cell and the sweep continues.
#[allow(clippy::too_many_arguments)]
pub fn pareto_sweep(
    setting: &RFSetting,
    target: &QuadraticTarget,
    lambdas: &[f64],
    widths: &[usize],
    realizations: usize,
    seed: u64,
    opts: &RfSolveOptions,
) -> Result<Vec<RfCurveRecord>> {
    if lambdas.is_empty() || widths.is_empty() || realizations == 0 {
        return Err(Error::InvalidInput(
            "sweep needs nonempty lambdas, widths, and realizations >= 1".into(),
        ));
    }
    let cells: Vec<(usize, usize)> = widths
        .iter()
        .enumerate()
        .flat_map(|(wi, _)| (0..realizations).map(move |rep| (wi, rep)))
        .collect();

    let per_cell = exec::map_slice(&cells, |&(wi, rep)| {
        let width = widths[wi];
        let cell_setting = RFSetting {
            width,
            ..setting.clone()
        };
        let rep_seed = realization_seed(seed, rep);
        let train = SampleBatch::generate(
            target,
            setting.noise_sigma,
            setting.dim,
            setting.n_mc,
            &mut stream_rng(rep_seed, STREAM_TRAIN),
        );
        let eval = SampleBatch::generate(
            target,
            setting.noise_sigma,
            setting.dim,
            setting.n_mc,
            &mut stream_rng(rep_seed, STREAM_EVAL),
        );
        let u = RFModel::sample_weights(
            width,
            setting.dim,
            &mut stream_rng(rep_seed, STREAM_WEIGHTS_BASE + wi as u64),
        );

        let mut records = Vec::with_capacity(lambdas.len());
        let built = Objective::new(&cell_setting, &u, target, &train)
            .and_then(|obj| Objective::new(&cell_setting, &u, target, &eval).map(|ev| (obj, ev)));
        match built {
            Ok((obj, ev)) => {
                let ls = obj.least_squares_start();
                let mut start = ls.clone();
                for &lambda in lambdas {
                    match solve_on(&obj, &ev, lambda, &start, opts) {
                        Ok(sol) => {
                            start = sol.theta.clone();
                            records.push(RfCurveRecord {
                                width,
                                realization: rep,
                                lambda,
                                sr: sol.sr,
                                ar: sol.ar,
                                theta_norm: sol.theta.norm(),
                                error: None,
                            });
                        }
                        Err(e) => {
                            start = ls.clone();
                            records.push(RfCurveRecord {
                                width,
                                realization: rep,
                                lambda,
                                sr: f64::NAN,
                                ar: f64::NAN,
                                theta_norm: f64::NAN,
                                error: Some(e.to_string()),
                            });
                        }
                    }
                }
            }
            Err(e) => {
                for &lambda in lambdas {
                    records.push(RfCurveRecord {
                        width,
                        realization: rep,
                        lambda,
                        sr: f64::NAN,
                        ar: f64::NAN,
                        theta_norm: f64::NAN,
                        error: Some(e.to_string()),
                    });
                }
            }
        }
        records
    });

    Ok(per_cell.into_iter().flatten().collect())
}
