use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::Distribution;
use crate::error::{PomdpError, Result};
use crate::model::RandomSource;

/// Multivariate normal density `N(mean, covariance)`.
///
/// Density evaluation needs an invertible covariance; sampling works for any
/// positive semi-definite covariance through its eigendecomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDensity {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    // covariance = factor * factor^T
    factor: DMatrix<f64>,
}

impl GaussianDensity {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(PomdpError::DimensionMismatch(format!(
                "mean has length {d}, covariance is {}x{}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        let scale = covariance.amax().max(1.0);
        if (&covariance - covariance.transpose()).amax() > 1e-12 * scale {
            return Err(PomdpError::InvalidDistribution("covariance is not symmetric".into()));
        }
        let eigen = covariance.clone().symmetric_eigen();
        if eigen.eigenvalues.iter().any(|&l| l < -1e-12 * scale) {
            return Err(PomdpError::InvalidDistribution(
                "covariance is not positive semi-definite".into(),
            ));
        }
        let roots = eigen.eigenvalues.map(|l| l.max(0.0).sqrt());
        let factor = &eigen.eigenvectors * DMatrix::from_diagonal(&roots);
        Ok(Self {
            mean,
            covariance,
            factor,
        })
    }

    /// Isotropic Gaussian `N(mean, sigma^2 I)`.
    pub fn isotropic(mean: DVector<f64>, sigma: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(mean, DMatrix::identity(d, d) * (sigma * sigma))
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn density(&self, x: &DVector<f64>) -> Result<f64> {
        let d = self.dimension();
        if x.len() != d {
            return Err(PomdpError::DimensionMismatch(format!(
                "point has length {}, density has dimension {d}",
                x.len()
            )));
        }
        let chol = self
            .covariance
            .clone()
            .cholesky()
            .ok_or(PomdpError::SingularCovariance)?;
        let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        if !log_det.is_finite() {
            return Err(PomdpError::SingularCovariance);
        }
        let diff = x - &self.mean;
        let solved = chol.solve(&diff);
        let mahalanobis = diff.dot(&solved);
        let log_norm = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
        Ok((log_norm - 0.5 * mahalanobis).exp())
    }
}

/// Shorthand for the density of the 1-D normal `N(mean, sigma^2)` at `x`.
pub(crate) fn normal_pdf(x: f64, mean: f64, sigma: f64) -> f64 {
    let z = (x - mean) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

impl Distribution<DVector<f64>> for GaussianDensity {
    /// Density at `value`; zero when the covariance is singular.
    fn probability(&self, value: &DVector<f64>) -> f64 {
        self.density(value).unwrap_or(0.0)
    }

    fn sample(&self, rng: &mut RandomSource) -> DVector<f64> {
        let z = DVector::from_fn(self.dimension(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.mean + &self.factor * z
    }

    fn argmax(&self) -> Result<DVector<f64>> {
        Ok(self.mean.clone())
    }
}
