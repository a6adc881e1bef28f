//! Golden-section search.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimum of `f` on `[a, b]` by golden-section search.
///
/// Returns `(x_min, f_min)`. Deterministic: always runs `max_evals`
/// evaluations unless the interval collapses first.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, max_evals: usize) -> (f64, f64) {
    if b < a {
        std::mem::swap(&mut a, &mut b);
    }
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evals = 2usize;

    while evals < max_evals && (b - a).abs() > f64::EPSILON * (1.0 + a.abs() + b.abs()) {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        evals += 1;
    }

    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_minimum() {
        let (x, fx) = golden_section_min(|x| (x - 1.3).powi(2) + 0.5, -10.0, 10.0, 200);
        assert!((x - 1.3).abs() < 1e-8);
        assert!((fx - 0.5).abs() < 1e-12);
    }

    #[test]
    fn handles_swapped_bracket() {
        // cosh is flat to f64 within ~sqrt(eps) of its minimum
        let (x, _) = golden_section_min(|x| x.cosh(), 5.0, -5.0, 200);
        assert!(x.abs() < 1e-6);
    }
}
