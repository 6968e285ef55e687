//! Bayesian linear regression with a normal-inverse-gamma prior: weighted
//! conjugate updates and the Student-t posterior predictive.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::bootstrap::CandidateWeights;
use crate::data::RegressionData;
use crate::error::{Error, Result};
use crate::math::student_t_log_pdf;
use crate::scoring::PredictiveModel;

/// Normal-inverse-gamma parameters: coefficients are `N(mean, σ² cov)` and
/// the noise variance σ² is `InvGamma(shape, scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NigParams {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    shape: f64,
    scale: f64,
}

impl NigParams {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, shape: f64, scale: f64) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::invalid(format!(
                "covariance is {}x{}, expected {d}x{d}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if !(shape > 0.0 && shape.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!(
                "inverse-gamma parameters must be positive and finite, got {shape}, {scale}"
            )));
        }
        // positive definiteness is checked where the matrix is factored
        Ok(NigParams {
            mean,
            cov,
            shape,
            scale,
        })
    }

    /// Numerically flat proper prior: zero mean, `scale_v * I` covariance,
    /// and vague inverse-gamma hyperparameters.
    pub fn flat(dim: usize, scale_v: f64, shape: f64, scale: f64) -> Result<Self> {
        NigParams::new(
            DVector::zeros(dim),
            DMatrix::identity(dim, dim) * scale_v,
            shape,
            scale,
        )
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Weighted conjugate update with each row replicated by its resample count:
/// with `C = diag(counts)`,
/// `Vₙ⁻¹ = V₀⁻¹ + XᵀCX`, `mₙ = Vₙ(V₀⁻¹m₀ + XᵀCy)`,
/// `aₙ = a₀ + Σc/2`, `bₙ = b₀ + ½(m₀ᵀV₀⁻¹m₀ + yᵀCy − mₙᵀVₙ⁻¹mₙ)`.
pub fn blr_posterior(
    prior: &NigParams,
    data: &RegressionData,
    weights: &CandidateWeights,
) -> Result<NigParams> {
    if weights.len() != data.len() {
        return Err(Error::invalid(format!(
            "{} weights for {} observations",
            weights.len(),
            data.len()
        )));
    }
    let d = data.dim();
    if prior.dim() != d {
        return Err(Error::invalid(format!(
            "prior dimension {} does not match data dimension {d}",
            prior.dim()
        )));
    }
    let b = weights.label();

    let prior_prec = Cholesky::new(prior.cov.clone())
        .ok_or_else(|| Error::numeric(Some(b), "prior covariance is not positive definite"))?
        .inverse();

    let mut precision = prior_prec.clone();
    let mut rhs = &prior_prec * &prior.mean;
    let mut sum_c = 0.0;
    let mut yty = 0.0;
    for (i, c) in weights.iter_nonzero() {
        let c = c as f64;
        let x = data.features(i);
        let y = data.target(i);
        precision.syger(c, x, x, 1.0);
        rhs.axpy(c * y, x, 1.0);
        sum_c += c;
        yty += c * y * y;
    }

    let chol = Cholesky::new(precision.clone())
        .ok_or_else(|| Error::numeric(Some(b), "posterior precision is not positive definite"))?;
    let mean = chol.solve(&rhs);
    let cov = chol.inverse();

    let shape = prior.shape + sum_c / 2.0;
    let m0_quad = prior.mean.dot(&(&prior_prec * &prior.mean));
    let mn_quad = mean.dot(&rhs); // mₙᵀVₙ⁻¹mₙ since Vₙ⁻¹mₙ = rhs
    let scale = prior.scale + 0.5 * (m0_quad + yty - mn_quad);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::numeric(
            Some(b),
            format!("posterior scale {scale} is not positive"),
        ));
    }
    NigParams::new(mean, cov, shape, scale)
}

/// Log predictive density: Student-t with `ν = 2aₙ` degrees of freedom,
/// location `xᵀmₙ` and squared scale `(bₙ/aₙ)(1 + xᵀVₙx)`.
pub fn blr_log_predictive(post: &NigParams, x: &DVector<f64>, y: f64) -> f64 {
    let nu = 2.0 * post.shape;
    let loc = x.dot(&post.mean);
    let scale2 = (post.scale / post.shape) * (1.0 + x.dot(&(&post.cov * x)));
    student_t_log_pdf(y, loc, scale2, nu)
}

/// Predictive mean, used as the point prediction for MSE/MAE.
pub fn blr_predictive_mean(post: &NigParams, x: &DVector<f64>) -> f64 {
    x.dot(&post.mean)
}

/// Bayesian linear regression as a scorable posterior-predictive engine.
#[derive(Debug, Clone)]
pub struct BayesLinReg {
    prior: NigParams,
}

impl BayesLinReg {
    pub fn new(prior: NigParams) -> Self {
        BayesLinReg { prior }
    }

    pub fn prior(&self) -> &NigParams {
        &self.prior
    }
}

impl PredictiveModel for BayesLinReg {
    type Data = RegressionData;
    type Point = (DVector<f64>, f64);
    type Posterior = NigParams;

    fn fit(&self, data: &RegressionData, weights: &CandidateWeights) -> Result<NigParams> {
        blr_posterior(&self.prior, data, weights)
    }

    fn log_predictive(&self, post: &NigParams, point: &(DVector<f64>, f64)) -> f64 {
        blr_log_predictive(post, &point.0, point.1)
    }

    fn dataset_log_predictive(&self, post: &NigParams, data: &RegressionData) -> f64 {
        data.iter()
            .map(|(x, y)| blr_log_predictive(post, x, y))
            .sum()
    }
}
