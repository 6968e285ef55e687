//! Held-out metrics and pmf diagnostics shared by the experiments.

use crate::conjugate::{neg_binom_log_predictive, GammaParams};
use crate::error::{Error, Result};
use crate::math::ln_gamma;

/// Truncation point for count-pmf comparisons; tables built to this length
/// assert that the truncated tail is negligible.
pub const PMF_KMAX: usize = 500;
/// Maximum tail mass allowed beyond [`PMF_KMAX`].
pub const PMF_TAIL_TOL: f64 = 1e-8;

/// Arithmetic mean of per-observation log predictive densities.
pub fn mean_log_predictive(log_densities: &[f64]) -> Result<f64> {
    if log_densities.is_empty() {
        return Err(Error::invalid("mean of an empty vector"));
    }
    Ok(log_densities.iter().sum::<f64>() / log_densities.len() as f64)
}

/// Mean squared and mean absolute error of point predictions.
pub fn mse_mae(predictions: &[f64], targets: &[f64]) -> Result<(f64, f64)> {
    if predictions.is_empty() {
        return Err(Error::invalid("mse_mae of empty vectors"));
    }
    if predictions.len() != targets.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    let n = predictions.len() as f64;
    let mut se = 0.0;
    let mut ae = 0.0;
    for (&p, &t) in predictions.iter().zip(targets) {
        let r = p - t;
        se += r * r;
        ae += r.abs();
    }
    Ok((se / n, ae / n))
}

/// Total variation distance `½ Σ |p_k − q_k|` between two truncated pmfs.
///
/// Both inputs must be nonnegative and sum to at most one (up to rounding);
/// they must share a support length.
pub fn pmf_total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::invalid("pmf supports differ or are empty"));
    }
    for &v in p.iter().chain(q) {
        if v < 0.0 || !v.is_finite() {
            return Err(Error::invalid(format!("pmf entry {v} is negative or not finite")));
        }
    }
    for (name, pmf) in [("p", p), ("q", q)] {
        let total: f64 = pmf.iter().sum();
        if total > 1.0 + 1e-9 {
            return Err(Error::invalid(format!("pmf {name} sums to {total} > 1")));
        }
    }
    Ok(0.5 * p.iter().zip(q).map(|(&a, &b)| (a - b).abs()).sum::<f64>())
}

/// Poisson pmf over `0..=kmax`.
pub fn poisson_pmf(rate: f64, kmax: usize) -> Vec<f64> {
    (0..=kmax)
        .map(|k| (k as f64 * rate.ln() - rate - ln_gamma(k as f64 + 1.0)).exp())
        .collect()
}

/// Negative-binomial predictive pmf over `0..=kmax`.
pub fn neg_binom_pmf(post: &GammaParams, kmax: usize) -> Vec<f64> {
    (0..=kmax)
        .map(|k| neg_binom_log_predictive(post, k as u64).exp())
        .collect()
}

/// Builds a count pmf to [`PMF_KMAX`] and asserts its truncated tail is
/// below [`PMF_TAIL_TOL`].
pub fn checked_pmf(pmf_to: impl Fn(usize) -> Vec<f64>) -> Result<Vec<f64>> {
    let pmf = pmf_to(PMF_KMAX);
    let total: f64 = pmf.iter().sum();
    if total < 1.0 - PMF_TAIL_TOL {
        return Err(Error::numeric(
            None,
            format!("pmf mass {total} leaves tail above {PMF_TAIL_TOL} beyond k={PMF_KMAX}"),
        ));
    }
    Ok(pmf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn mean_log_predictive_basics() {
        assert_eq!(mean_log_predictive(&[0.0, 0.0]).unwrap(), 0.0);
        assert_relative_eq!(
            mean_log_predictive(&[2f64.ln(), 8f64.ln()]).unwrap(),
            4f64.ln(),
            epsilon = 1e-14
        );
        assert_eq!(mean_log_predictive(&[-1.3]).unwrap(), -1.3);
        assert!(mean_log_predictive(&[]).is_err());
    }

    #[test]
    fn mse_mae_basics() {
        assert_eq!(mse_mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), (0.0, 0.0));
        assert_eq!(mse_mae(&[1.0, -1.0], &[0.0, 0.0]).unwrap(), (1.0, 1.0));
        assert_eq!(mse_mae(&[3.0, 0.0, 0.0], &[0.0, 0.0, 0.0]).unwrap(), (3.0, 1.0));
        assert!(mse_mae(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse_mae(&[], &[]).is_err());
    }

    #[test]
    fn total_variation_basics() {
        let p = vec![0.5, 0.5];
        assert_eq!(pmf_total_variation(&p, &p).unwrap(), 0.0);
        assert_eq!(pmf_total_variation(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_relative_eq!(
            pmf_total_variation(&[0.5, 0.5], &[1.0, 0.0]).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert!(pmf_total_variation(&[-0.1, 1.1], &[0.5, 0.5]).is_err());
        assert!(pmf_total_variation(&[0.5], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn poisson_pmf_sums_to_one() {
        let pmf = checked_pmf(|kmax| poisson_pmf(5.0, kmax)).unwrap();
        let total: f64 = pmf.iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn neg_binom_pmf_tail_check() {
        let post = crate::conjugate::GammaParams::new(17.5, 3.5).unwrap();
        assert!(checked_pmf(|kmax| neg_binom_pmf(&post, kmax)).is_ok());
        // a heavy-tailed posterior fails the tail check
        let fat = crate::conjugate::GammaParams::new(0.5, 0.001).unwrap();
        assert!(checked_pmf(|kmax| neg_binom_pmf(&fat, kmax)).is_err());
    }

    fn random_pmf(v: Vec<f64>) -> Vec<f64> {
        let total: f64 = v.iter().sum();
        v.iter().map(|&x| x / total).collect()
    }

    proptest! {
        #[test]
        fn tv_is_symmetric_bounded_and_triangular(
            a in proptest::collection::vec(1e-6f64..1.0, 8),
            b in proptest::collection::vec(1e-6f64..1.0, 8),
            c in proptest::collection::vec(1e-6f64..1.0, 8),
        ) {
            let (p, q, r) = (random_pmf(a), random_pmf(b), random_pmf(c));
            let pq = pmf_total_variation(&p, &q).unwrap();
            let qp = pmf_total_variation(&q, &p).unwrap();
            prop_assert!((pq - qp).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&pq));
            let pr = pmf_total_variation(&p, &r).unwrap();
            let rq = pmf_total_variation(&r, &q).unwrap();
            prop_assert!(pq <= pr + rq + 1e-12);
        }

        #[test]
        fn mae_bounded_by_root_mse(
            residuals in proptest::collection::vec(-100.0f64..100.0, 1..50),
        ) {
            let zeros = vec![0.0; residuals.len()];
            let (mse, mae) = mse_mae(&residuals, &zeros).unwrap();
            prop_assert!(mae <= mse.sqrt() + 1e-12);
        }
    }
}
