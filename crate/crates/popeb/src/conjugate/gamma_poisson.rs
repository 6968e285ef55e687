//! Gamma-Poisson counts: weighted conjugate updates, the negative-binomial
//! predictive, and the moment-matched empirical-Bayes prior.

use crate::bootstrap::CandidateWeights;
use crate::data::CountData;
use crate::error::{Error, Result};
use crate::math::{ln_gamma, mean_variance};
use crate::scoring::PredictiveModel;

/// Gamma distribution in shape-rate form (mean `shape / rate`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    shape: f64,
    rate: f64,
}

impl GammaParams {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) || !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::invalid(format!(
                "gamma parameters must be positive and finite, got shape {shape}, rate {rate}"
            )));
        }
        Ok(GammaParams { shape, rate })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }
}

/// Conjugate update with resample multiplicities: the posterior is
/// `Gamma(shape + Σ cₙ xₙ, rate + Σ cₙ)`.
pub fn gamma_poisson_posterior(
    prior: &GammaParams,
    data: &CountData,
    weights: &CandidateWeights,
) -> Result<GammaParams> {
    if weights.len() != data.len() {
        return Err(Error::invalid(format!(
            "{} weights for {} observations",
            weights.len(),
            data.len()
        )));
    }
    let mut sum_x = 0.0;
    let mut sum_c = 0.0;
    for (&x, &c) in data.values().iter().zip(weights.counts()) {
        sum_x += c as f64 * x as f64;
        sum_c += c as f64;
    }
    GammaParams::new(prior.shape + sum_x, prior.rate + sum_c)
}

/// Log pmf of the posterior predictive: a negative binomial with
/// `r = shape` and success probability `rate / (rate + 1)`.
pub fn neg_binom_log_predictive(post: &GammaParams, k: u64) -> f64 {
    let (a, b) = (post.shape, post.rate);
    let k = k as f64;
    ln_gamma(k + a) - ln_gamma(a) - ln_gamma(k + 1.0) + a * (b / (b + 1.0)).ln()
        - k * (b + 1.0).ln()
}

/// Moment-matched Gamma prior: `shape = mean² / var`, `rate = mean / var`,
/// with the population (1/N) variance.
pub fn eb_moment_match_gamma(data: &CountData) -> Result<GammaParams> {
    if data.len() < 2 {
        return Err(Error::invalid(
            "moment matching needs at least two observations",
        ));
    }
    let values: Vec<f64> = data.values().iter().map(|&x| x as f64).collect();
    let (mean, var) = mean_variance(&values)?;
    if var <= 0.0 {
        return Err(Error::DegenerateData(
            "sample variance is zero; moment-matched Gamma is undefined".into(),
        ));
    }
    GammaParams::new(mean * mean / var, mean / var)
}

/// The Gamma-Poisson model as a scorable posterior-predictive engine.
#[derive(Debug, Clone)]
pub struct GammaPoisson {
    prior: GammaParams,
}

impl GammaPoisson {
    pub fn new(prior: GammaParams) -> Self {
        GammaPoisson { prior }
    }

    pub fn prior(&self) -> &GammaParams {
        &self.prior
    }
}

impl PredictiveModel for GammaPoisson {
    type Data = CountData;
    type Point = u64;
    type Posterior = GammaParams;

    fn fit(&self, data: &CountData, weights: &CandidateWeights) -> Result<GammaParams> {
        gamma_poisson_posterior(&self.prior, data, weights)
    }

    fn log_predictive(&self, post: &GammaParams, x: &u64) -> f64 {
        neg_binom_log_predictive(post, *x)
    }

    fn dataset_log_predictive(&self, post: &GammaParams, data: &CountData) -> f64 {
        data.values()
            .iter()
            .map(|&x| neg_binom_log_predictive(post, x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::{Distribution, Gamma as GammaDist, Poisson};

    fn counts(values: Vec<u32>) -> CandidateWeights {
        CandidateWeights::from_counts(1, values).unwrap()
    }

    #[test]
    fn posterior_updates_match_hand_calc() {
        let prior = GammaParams::new(2.5, 0.5).unwrap();
        let data = CountData::new(vec![5, 4, 6]).unwrap();

        let post = gamma_poisson_posterior(&prior, &data, &CandidateWeights::identity(3)).unwrap();
        assert_relative_eq!(post.shape(), 17.5);
        assert_relative_eq!(post.rate(), 3.5);

        let post = gamma_poisson_posterior(&prior, &data, &counts(vec![2, 0, 1])).unwrap();
        assert_relative_eq!(post.shape(), 18.5);
        assert_relative_eq!(post.rate(), 3.5);
    }

    #[test]
    fn all_zero_counts_return_prior() {
        let prior = GammaParams::new(2.5, 0.5).unwrap();
        let data = CountData::new(vec![5, 4, 6]).unwrap();
        let zero = CandidateWeights::unchecked_for_tests(1, vec![0, 0, 0]);
        let post = gamma_poisson_posterior(&prior, &data, &zero).unwrap();
        assert_eq!(post, prior);
    }

    #[test]
    fn weight_length_mismatch_rejected() {
        let prior = GammaParams::new(1.0, 1.0).unwrap();
        let data = CountData::new(vec![1, 2]).unwrap();
        assert!(gamma_poisson_posterior(&prior, &data, &CandidateWeights::identity(3)).is_err());
    }

    #[test]
    fn geometric_special_case() {
        // Gam(1, 1) predictive is geometric with p = 1/2
        let post = GammaParams::new(1.0, 1.0).unwrap();
        assert_relative_eq!(neg_binom_log_predictive(&post, 0), 0.5f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(
            neg_binom_log_predictive(&post, 3),
            (1.0f64 / 16.0).ln(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn predictive_normalizes() {
        let post = GammaParams::new(17.5, 3.5).unwrap();
        let total: f64 = (0..=500)
            .map(|k| neg_binom_log_predictive(&post, k).exp())
            .sum();
        assert!(total <= 1.0 + 1e-12 && total >= 1.0 - 1e-8, "total {total}");
    }

    #[test]
    fn predictive_matches_monte_carlo() {
        // theta ~ Gam(post), k ~ Poisson(theta) should reproduce the NB pmf
        let post = GammaParams::new(17.5, 3.5).unwrap();
        let mut rng = Seed(11).stream(0);
        let gamma = GammaDist::new(post.shape(), 1.0 / post.rate()).unwrap();
        let n = 1_000_000usize;
        let mut freq = vec![0u64; 21];
        for _ in 0..n {
            let theta: f64 = gamma.sample(&mut rng);
            let k = Poisson::new(theta).unwrap().sample(&mut rng) as usize;
            if k <= 20 {
                freq[k] += 1;
            }
        }
        for k in 0..=20u64 {
            let p = neg_binom_log_predictive(&post, k).exp();
            let phat = freq[k as usize] as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (phat - p).abs() <= 3.0 * se,
                "k={k}: empirical {phat}, pmf {p}, se {se}"
            );
        }
    }

    #[test]
    fn moment_match_formula() {
        // mean 5, population variance 10 -> Gam(2.5, 0.5)
        let data = CountData::new(vec![5 - 3, 5 + 3, 5 - 3, 5 + 3, 5 - 1, 5 + 1, 5 - 1, 5 + 1])
            .unwrap();
        let values: Vec<f64> = data.values().iter().map(|&x| x as f64).collect();
        let (mean, var) = mean_variance(&values).unwrap();
        assert_relative_eq!(mean, 5.0);
        assert_relative_eq!(var, 5.0);
        let g = eb_moment_match_gamma(&data).unwrap();
        assert_relative_eq!(g.shape(), 5.0);
        assert_relative_eq!(g.rate(), 1.0);
    }

    #[test]
    fn moment_match_rejects_constant_data() {
        let data = CountData::new(vec![4, 4, 4]).unwrap();
        assert!(matches!(
            eb_moment_match_gamma(&data),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn moment_match_on_contaminated_mixture() {
        // 0.95 Poisson(5) + 0.05 Poisson(50): exact moments are mean 7.25,
        // variance 103.4375, so shape ~ 0.508 and rate ~ 0.0701
        let mut rng = Seed(12).stream(0);
        let p5 = Poisson::new(5.0).unwrap();
        let p50 = Poisson::new(50.0).unwrap();
        let values: Vec<u64> = (0..100_000)
            .map(|_| {
                if rng.gen::<f64>() < 0.05 {
                    p50.sample(&mut rng) as u64
                } else {
                    p5.sample(&mut rng) as u64
                }
            })
            .collect();
        let g = eb_moment_match_gamma(&CountData::new(values).unwrap()).unwrap();
        assert!((0.4..=0.65).contains(&g.shape()), "shape {}", g.shape());
        assert!((0.06..=0.08).contains(&g.rate()), "rate {}", g.rate());
    }

    #[test]
    fn sequential_updates_equal_batch() {
        let prior = GammaParams::new(2.5, 0.5).unwrap();
        let batch = gamma_poisson_posterior(
            &prior,
            &CountData::new(vec![3, 9]).unwrap(),
            &CandidateWeights::identity(2),
        )
        .unwrap();
        let step1 = gamma_poisson_posterior(
            &prior,
            &CountData::new(vec![3]).unwrap(),
            &CandidateWeights::identity(1),
        )
        .unwrap();
        let step2 = gamma_poisson_posterior(
            &step1,
            &CountData::new(vec![9]).unwrap(),
            &CandidateWeights::identity(1),
        )
        .unwrap();
        assert_relative_eq!(batch.shape(), step2.shape(), epsilon = 1e-12);
        assert_relative_eq!(batch.rate(), step2.rate(), epsilon = 1e-12);
    }

    #[test]
    fn weighted_update_equals_expanded_dataset() {
        let prior = GammaParams::new(2.5, 0.5).unwrap();
        let data = CountData::new(vec![5, 4, 6, 50]).unwrap();
        let w = counts(vec![2, 0, 1, 1]);
        let weighted = gamma_poisson_posterior(&prior, &data, &w).unwrap();
        let expanded = CountData::new(vec![5, 5, 6, 50]).unwrap();
        let direct =
            gamma_poisson_posterior(&prior, &expanded, &CandidateWeights::identity(4)).unwrap();
        assert_relative_eq!(weighted.shape(), direct.shape(), epsilon = 1e-10);
        assert_relative_eq!(weighted.rate(), direct.rate(), epsilon = 1e-10);
    }
}
