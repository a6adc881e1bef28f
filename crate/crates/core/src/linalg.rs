//! Dense symmetric-matrix helpers shared by the setting types.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Floor applied to shifted eigenvalues when inverting `M + gamma I`.
pub const EIG_FLOOR: f64 = 1e-12;

/// Symmetry tolerance accepted by the setting constructors.
pub const SYM_TOL: f64 = 1e-12;

/// Eigenvalues are allowed to dip this far below zero before a matrix is
/// rejected as non-PSD.
pub const PSD_TOL: f64 = 1e-10;

pub fn check_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidSetting(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return Err(Error::InvalidSetting(format!(
                    "matrix not symmetric at ({i},{j}): {} vs {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// Eigendecomposition of a symmetric PSD matrix, cached so shifted solves
/// `(M + gamma I)^{-1} v` cost O(d^2) per shift.
#[derive(Debug, Clone)]
pub struct SpectralDecomp {
    vectors: DMatrix<f64>,
    values: DVector<f64>,
}

impl SpectralDecomp {
    /// Decomposes `m`, rejecting matrices that are asymmetric beyond
    /// [`SYM_TOL`] or have an eigenvalue below `-`[`PSD_TOL`].
    pub fn new_psd(m: &DMatrix<f64>) -> Result<Self> {
        check_symmetric(m, SYM_TOL)?;
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSetting("matrix has non-finite entries".into()));
        }
        let eig = nalgebra::SymmetricEigen::new(m.clone());
        if let Some(min) = eig.eigenvalues.iter().cloned().reduce(f64::min) {
            if min < -PSD_TOL {
                return Err(Error::InvalidSetting(format!(
                    "matrix not PSD: smallest eigenvalue {min:e}"
                )));
            }
        }
        Ok(Self {
            vectors: eig.eigenvectors,
            values: eig.eigenvalues,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// `(M + gamma I)^{-1} rhs`. Shifted eigenvalues are floored at
    /// [`EIG_FLOOR`]; for `gamma` below the floor this falls back to the
    /// pseudo-inverse so null-space components are dropped, not amplified.
    pub fn shifted_solve(&self, rhs: &DVector<f64>, gamma: f64) -> DVector<f64> {
        if gamma <= EIG_FLOOR {
            return self.pinv_apply(rhs);
        }
        let coords = self.vectors.transpose() * rhs;
        let scaled = DVector::from_iterator(
            self.dim(),
            coords
                .iter()
                .zip(self.values.iter())
                .map(|(c, &l)| c / (l.max(0.0) + gamma).max(EIG_FLOOR)),
        );
        &self.vectors * scaled
    }

    /// Pseudo-inverse apply `M^+ rhs`: components along eigenvalues below the
    /// relative cutoff are dropped.
    pub fn pinv_apply(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let cutoff = self.max_eigenvalue() * EIG_FLOOR + f64::MIN_POSITIVE;
        let coords = self.vectors.transpose() * rhs;
        let scaled = DVector::from_iterator(
            self.dim(),
            coords
                .iter()
                .zip(self.values.iter())
                .map(|(c, &l)| if l > cutoff { c / l } else { 0.0 }),
        );
        &self.vectors * scaled
    }

    /// Quadratic form `x^T M x` with eigenvalues clamped at zero, so the
    /// result of a PSD form never goes negative from roundoff.
    pub fn quad_form(&self, x: &DVector<f64>) -> f64 {
        let coords = self.vectors.transpose() * x;
        coords
            .iter()
            .zip(self.values.iter())
            .map(|(c, &l)| l.max(0.0) * c * c)
            .sum()
    }

    /// `M^{1/2} x` through the eigenbasis.
    pub fn sqrt_apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let coords = self.vectors.transpose() * x;
        let scaled = DVector::from_iterator(
            self.dim(),
            coords
                .iter()
                .zip(self.values.iter())
                .map(|(c, &l)| c * l.max(0.0).sqrt()),
        );
        &self.vectors * scaled
    }
}

/// `Sigma_{ij} = rho^{|i-j|}`, the covariance family used throughout the
/// sweep configurations.
pub fn toeplitz_correlation(d: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| rho.powi((i as i32 - j as i32).abs()))
}
