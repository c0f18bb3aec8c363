//! Position-dependent Hermitian metrics and their regularization.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{DecError, Result};

type EvalFn = dyn Fn(&[Complex64]) -> DMatrix<Complex64> + Send + Sync;

/// A map from position to an M x M Hermitian matrix, plus a uniform real
/// shift applied to every entry.
///
/// The shift regularizes meshes whose right simplices produce zero dual
/// volumes. Its sign is selectable: on asymmetric grids a negative shift
/// tips every right angle acute so all dual volumes come out positive, which
/// downstream eigensolves need from their mass matrices.
#[derive(Clone)]
pub struct MetricField {
    eval: Arc<EvalFn>,
    epsilon: f64,
}

impl std::fmt::Debug for MetricField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricField")
            .field("epsilon", &self.epsilon)
            .finish()
    }
}

impl MetricField {
    /// The identity metric.
    pub fn euclidean() -> Self {
        Self::from_fn(|x| DMatrix::identity(x.len(), x.len()))
    }

    /// A constant metric.
    pub fn constant(h: DMatrix<Complex64>) -> Self {
        Self::from_fn(move |_| h.clone())
    }

    pub fn from_fn(
        f: impl Fn(&[Complex64]) -> DMatrix<Complex64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(f),
            epsilon: 0.0,
        }
    }

    /// Sets the uniform entrywise shift (signed).
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Evaluates the regularized metric at `x`, checking Hermitian symmetry.
    pub fn evaluate(&self, x: &[Complex64]) -> Result<DMatrix<Complex64>> {
        let mut h = (self.eval)(x);
        if h.nrows() != h.ncols() || h.nrows() < x.len() {
            return Err(DecError::Parameter(format!(
                "metric must be at least {}x{}, got {}x{}",
                x.len(),
                x.len(),
                h.nrows(),
                h.ncols()
            )));
        }
        let scale = h.iter().map(|v| v.norm()).fold(1.0_f64, f64::max);
        let mut defect: f64 = 0.0;
        for i in 0..h.nrows() {
            for j in 0..h.ncols() {
                defect = defect.max((h[(i, j)] - h[(j, i)].conj()).norm());
            }
        }
        if defect > 1e-12 * scale {
            return Err(DecError::NonHermitianMetric(defect));
        }
        if self.epsilon != 0.0 {
            for v in h.iter_mut() {
                *v += Complex64::new(self.epsilon, 0.0);
            }
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn euclidean_is_identity() {
        let m = MetricField::euclidean();
        let h = m.evaluate(&[c(0.3, 0.0), c(0.7, 0.0)]).unwrap();
        assert_eq!(h, DMatrix::identity(2, 2));
    }

    #[test]
    fn epsilon_shifts_every_entry() {
        let m = MetricField::euclidean().with_epsilon(-1e-3);
        let h = m.evaluate(&[c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(h[(0, 0)], c(1.0 - 1e-3, 0.0));
        assert_eq!(h[(0, 1)], c(-1e-3, 0.0));
    }

    #[test]
    fn non_hermitian_rejected() {
        let bad = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.2, 0.0), c(1.0, 0.0)]);
        let m = MetricField::constant(bad);
        assert!(matches!(
            m.evaluate(&[c(0.0, 0.0), c(0.0, 0.0)]),
            Err(DecError::NonHermitianMetric(_))
        ));
    }

    #[test]
    fn hermitian_with_imaginary_offdiagonal_accepted() {
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.1), c(0.0, -0.1), c(1.0, 0.0)]);
        let m = MetricField::constant(h);
        assert!(m.evaluate(&[c(0.0, 0.0), c(0.0, 0.0)]).is_ok());
    }
}
