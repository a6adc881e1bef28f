//! Nelder-Mead simplex minimization for low-dimensional problems.

use nalgebra::DVector;

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub max_iters: usize,
    /// Converged when the simplex value spread drops below
    /// `f_tol * (1 + |f_best|)`.
    pub f_tol: f64,
    /// Converged when the simplex diameter drops below `x_tol`.
    pub x_tol: f64,
    /// Edge length of the initial simplex around `x0`.
    pub init_scale: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            f_tol: 1e-13,
            x_tol: 1e-11,
            init_scale: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Standard simplex method (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2). For dimension 0 the start point is returned unchanged.
pub fn nelder_mead<F>(f: F, x0: &DVector<f64>, opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: Fn(&DVector<f64>) -> f64,
{
    let n = x0.len();
    if n == 0 {
        return NelderMeadResult {
            x: x0.clone(),
            value: f(x0),
            iters: 0,
            converged: true,
        };
    }

    let mut simplex: Vec<DVector<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.clone());
    for i in 0..n {
        let mut v = x0.clone();
        v[i] += opts.init_scale;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(&f).collect();

    let mut iters = 0;
    let mut converged = false;
    while iters < opts.max_iters {
        iters += 1;

        // order: best first
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap_or(std::cmp::Ordering::Equal));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        values = idx.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diam = simplex[1..]
            .iter()
            .map(|v| (v - &simplex[0]).norm())
            .fold(0.0, f64::max);
        if spread <= opts.f_tol * (1.0 + values[0].abs()) && diam <= opts.x_tol {
            converged = true;
            break;
        }

        let centroid: DVector<f64> =
            simplex[..n].iter().fold(DVector::zeros(n), |acc, v| acc + v) / n as f64;

        let reflected = &centroid + (&centroid - &simplex[n]);
        let f_r = f(&reflected);

        if f_r < values[0] {
            let expanded = &centroid + (&reflected - &centroid) * 2.0;
            let f_e = f(&expanded);
            if f_e < f_r {
                simplex[n] = expanded;
                values[n] = f_e;
            } else {
                simplex[n] = reflected;
                values[n] = f_r;
            }
        } else if f_r < values[n - 1] {
            simplex[n] = reflected;
            values[n] = f_r;
        } else {
            let contracted = if f_r < values[n] {
                &centroid + (&reflected - &centroid) * 0.5
            } else {
                &centroid + (&simplex[n] - &centroid) * 0.5
            };
            let f_c = f(&contracted);
            if f_c < values[n].min(f_r) {
                simplex[n] = contracted;
                values[n] = f_c;
            } else {
                // shrink toward best
                for i in 1..=n {
                    simplex[i] = &simplex[0] + (&simplex[i] - &simplex[0]) * 0.5;
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }

    let (best, &value) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap();
    NelderMeadResult {
        x: simplex[best].clone(),
        value,
        iters,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic_bowl() {
        let target = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let f = |x: &DVector<f64>| (x - &target).norm_squared();
        let res = nelder_mead(&f, &DVector::zeros(4), &NelderMeadOptions::default());
        assert!(res.value < 1e-12, "value {}", res.value);
        assert!((res.x - target).norm() < 1e-5);
    }

    #[test]
    fn minimizes_rosenbrock_2d() {
        let f = |x: &DVector<f64>| {
            100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
        };
        let mut best = f64::INFINITY;
        let mut x = DVector::from_vec(vec![-1.2, 1.0]);
        // restart-from-best handles the curved valley
        for _ in 0..4 {
            let res = nelder_mead(
                f,
                &x,
                &NelderMeadOptions {
                    max_iters: 4000,
                    init_scale: 0.2,
                    ..Default::default()
                },
            );
            best = res.value;
            x = res.x;
        }
        assert!(best < 1e-10, "value {best}");
    }
}
