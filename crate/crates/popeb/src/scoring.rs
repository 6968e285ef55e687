//! Model-agnostic candidate scoring, MAP selection, and full-Bayes weights.
//!
//! Every candidate resample is fitted once and scored by the log predictive
//! density of the original dataset: `score[b] = Σₙ log p(xₙ | Z⁽ᵇ⁾)`,
//! where each observation enters with unit multiplicity regardless of how
//! often the resample contains it. Products of that many likelihoods
//! underflow doubles long before realistic dataset sizes, so scores and
//! weights live in natural-log space throughout.

use crate::bootstrap::CandidateWeights;
use crate::error::{Error, Result};
use crate::math::log_sum_exp;
use crate::par;

/// A posterior-predictive engine that can be fitted to weighted data.
///
/// `fit` must be deterministic in its inputs and `log_predictive` must be a
/// proper log density (or log pmf) over the observation space.
pub trait PredictiveModel: Sync {
    type Data: Sync;
    type Point;
    type Posterior: Send + Sync;

    /// Posterior handle for the dataset reweighted by resample counts.
    fn fit(&self, data: &Self::Data, weights: &CandidateWeights) -> Result<Self::Posterior>;

    /// Log predictive density of a single observation.
    fn log_predictive(&self, post: &Self::Posterior, x: &Self::Point) -> f64;

    /// Log predictive density summed over every observation of `data` with
    /// unit multiplicity.
    fn dataset_log_predictive(&self, post: &Self::Posterior, data: &Self::Data) -> f64;
}

/// Per-candidate log predictive scores of the original dataset.
///
/// Entries are finite or `-inf`; the index is the candidate label.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    scores: Vec<f64>,
}

impl ScoreTable {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::invalid("score table must hold at least one candidate"));
        }
        for (b, &s) in scores.iter().enumerate() {
            if s.is_nan() || s == f64::INFINITY {
                return Err(Error::numeric(Some(b), format!("score {s} is not finite or -inf")));
            }
        }
        Ok(ScoreTable { scores })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn score(&self, b: usize) -> f64 {
        self.scores[b]
    }
}

/// Fits every candidate and scores it on the original dataset.
///
/// Candidates are evaluated concurrently; the table is assembled in
/// candidate order so the result is independent of scheduling.
pub fn score_candidates<M: PredictiveModel>(
    model: &M,
    data: &M::Data,
    candidates: &[CandidateWeights],
) -> Result<ScoreTable> {
    let posteriors = fit_candidates(model, data, candidates)?;
    score_fitted(model, data, &posteriors)
}

fn fit_candidates<M: PredictiveModel>(
    model: &M,
    data: &M::Data,
    candidates: &[CandidateWeights],
) -> Result<Vec<M::Posterior>> {
    if candidates.is_empty() {
        return Err(Error::invalid("candidate list must not be empty"));
    }
    par::map_indexed(candidates.len(), |b| {
        model
            .fit(data, &candidates[b])
            .map_err(|e| e.tag_candidate(b))
    })
    .into_iter()
    .collect()
}

fn score_fitted<M: PredictiveModel>(
    model: &M,
    data: &M::Data,
    posteriors: &[M::Posterior],
) -> Result<ScoreTable> {
    let scores = par::map_indexed(posteriors.len(), |b| {
        model.dataset_log_predictive(&posteriors[b], data)
    });
    for (b, &s) in scores.iter().enumerate() {
        if s.is_nan() || s == f64::INFINITY {
            return Err(Error::numeric(Some(b), format!("candidate score {s}")));
        }
    }
    ScoreTable::new(scores)
}

/// Index of the highest-scoring candidate; ties break toward the smallest
/// index, so the identity candidate wins any tie it is part of.
pub fn select_map(table: &ScoreTable) -> Result<usize> {
    let mut best = None;
    for (b, &s) in table.scores().iter().enumerate() {
        if s == f64::NEG_INFINITY {
            continue;
        }
        match best {
            Some((_, bs)) if s <= bs => {}
            _ => best = Some((b, s)),
        }
    }
    best.map(|(b, _)| b)
        .ok_or_else(|| Error::NoValidCandidate("every candidate scored -inf".into()))
}

/// Normalized likelihood weights `w_b = exp(score_b - logsumexp(scores))`.
pub fn fb_weights(table: &ScoreTable) -> Result<Vec<f64>> {
    let norm = log_sum_exp(table.scores())?;
    if norm == f64::NEG_INFINITY {
        return Err(Error::NoValidCandidate("every candidate scored -inf".into()));
    }
    Ok(table.scores().iter().map(|&s| (s - norm).exp()).collect())
}

/// A fitted candidate set: posterior handles are computed once per scoring
/// pass and reused by every subsequent MAP or FB predictive query.
pub struct CandidateEnsemble<M: PredictiveModel> {
    posteriors: Vec<M::Posterior>,
    table: ScoreTable,
    map_index: usize,
    log_weights: Vec<f64>,
}

impl<M: PredictiveModel> CandidateEnsemble<M> {
    pub fn fit(model: &M, data: &M::Data, candidates: &[CandidateWeights]) -> Result<Self> {
        let posteriors = fit_candidates(model, data, candidates)?;
        let table = score_fitted(model, data, &posteriors)?;
        let map_index = select_map(&table)?;
        let norm = log_sum_exp(table.scores())?;
        let log_weights = table.scores().iter().map(|&s| s - norm).collect();
        Ok(CandidateEnsemble {
            posteriors,
            table,
            map_index,
            log_weights,
        })
    }

    pub fn len(&self) -> usize {
        self.posteriors.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn table(&self) -> &ScoreTable {
        &self.table
    }

    pub fn map_index(&self) -> usize {
        self.map_index
    }

    pub fn fb_weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|&lw| lw.exp()).collect()
    }

    pub fn posterior(&self, b: usize) -> &M::Posterior {
        &self.posteriors[b]
    }

    pub fn map_posterior(&self) -> &M::Posterior {
        &self.posteriors[self.map_index]
    }

    /// Log predictive of a new observation under the MAP candidate.
    pub fn map_log_predictive(&self, model: &M, x: &M::Point) -> f64 {
        model.log_predictive(&self.posteriors[self.map_index], x)
    }

    /// Log predictive of a new observation under the score-weighted mixture
    /// of all candidates: `log Σ_b w_b p(x | Z⁽ᵇ⁾)`.
    pub fn fb_log_predictive(&self, model: &M, x: &M::Point) -> Result<f64> {
        let terms: Vec<f64> = self
            .posteriors
            .iter()
            .zip(&self.log_weights)
            .map(|(post, &lw)| lw + model.log_predictive(post, x))
            .collect();
        log_sum_exp(&terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bootstrap::make_candidate_set;
    use crate::conjugate::{neg_binom_log_predictive, GammaParams, GammaPoisson};
    use crate::data::CountData;
    use crate::rng::Seed;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn table(scores: Vec<f64>) -> ScoreTable {
        ScoreTable::new(scores).unwrap()
    }

    #[test]
    fn select_map_basics() {
        assert_eq!(select_map(&table(vec![-3.0])).unwrap(), 0);
        // tie breaks to the smallest index
        assert_eq!(select_map(&table(vec![-10.0, -5.0, -5.0])).unwrap(), 1);
        assert_eq!(select_map(&table(vec![-5.0, -5.0, -7.0])).unwrap(), 0);
        assert!(matches!(
            select_map(&table(vec![f64::NEG_INFINITY, f64::NEG_INFINITY])),
            Err(Error::NoValidCandidate(_))
        ));
    }

    #[test]
    fn fb_weights_basics() {
        let w = fb_weights(&table(vec![0.0, 0.0, 0.0, 0.0])).unwrap();
        for wi in &w {
            assert_relative_eq!(*wi, 0.25, epsilon = 1e-12);
        }

        let w = fb_weights(&table(vec![0.0, -800.0])).unwrap();
        assert!(w[0] > 1.0 - 1e-12 && w[0].is_finite());
        assert!(w[1] >= 0.0 && w[1] < 1e-300);

        let w = fb_weights(&table(vec![3f64.ln(), 1f64.ln()])).unwrap();
        assert_relative_eq!(w[0], 0.75, epsilon = 1e-12);
        assert_relative_eq!(w[1], 0.25, epsilon = 1e-12);

        assert!(fb_weights(&table(vec![f64::NEG_INFINITY])).is_err());
    }

    #[test]
    fn score_table_rejects_nan() {
        assert!(ScoreTable::new(vec![f64::NAN]).is_err());
        assert!(ScoreTable::new(vec![f64::INFINITY]).is_err());
        assert!(ScoreTable::new(vec![]).is_err());
    }

    #[test]
    fn identity_score_matches_closed_form() {
        // B=1 on [5,4,6] with prior Gam(2.5, 0.5): the single score is the
        // sum of NB(k; 17.5, rate 3.5) log pmfs over the data
        let model = GammaPoisson::new(GammaParams::new(2.5, 0.5).unwrap());
        let data = CountData::new(vec![5, 4, 6]).unwrap();
        let cands = vec![CandidateWeights::identity(3)];
        let t = score_candidates(&model, &data, &cands).unwrap();
        let post = GammaParams::new(17.5, 3.5).unwrap();
        let want: f64 = [5u64, 4, 6]
            .iter()
            .map(|&k| neg_binom_log_predictive(&post, k))
            .sum();
        assert_relative_eq!(t.score(0), want, epsilon = 1e-12);
    }

    #[test]
    fn identical_candidates_score_identically() {
        let model = GammaPoisson::new(GammaParams::new(2.5, 0.5).unwrap());
        let data = CountData::new(vec![5, 4, 6]).unwrap();
        let cands = vec![
            CandidateWeights::identity(3),
            CandidateWeights::from_counts(1, vec![1, 1, 1]).unwrap(),
            CandidateWeights::from_counts(2, vec![1, 1, 1]).unwrap(),
        ];
        let t = score_candidates(&model, &data, &cands).unwrap();
        assert_eq!(t.score(0), t.score(1));
        assert_eq!(t.score(1), t.score(2));
        // identity wins the tie
        assert_eq!(select_map(&t).unwrap(), 0);
    }

    #[test]
    fn b_equals_one_reduces_to_classical_bayes() {
        let model = GammaPoisson::new(GammaParams::new(2.5, 0.5).unwrap());
        let data = CountData::new(vec![5, 4, 6]).unwrap();
        let cands = vec![CandidateWeights::identity(3)];
        let ens = CandidateEnsemble::fit(&model, &data, &cands).unwrap();
        let post = GammaParams::new(17.5, 3.5).unwrap();
        for k in [0u64, 3, 7, 20] {
            let classical = neg_binom_log_predictive(&post, k);
            assert_relative_eq!(ens.map_log_predictive(&model, &k), classical, epsilon = 1e-12);
            assert_relative_eq!(
                ens.fb_log_predictive(&model, &k).unwrap(),
                classical,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn fb_collapses_to_map_under_weight_concentration() {
        let model = GammaPoisson::new(GammaParams::new(2.5, 0.5).unwrap());
        let data = CountData::new(vec![5, 4, 6, 5, 6]).unwrap();
        let cands = make_candidate_set(5, 10, &mut Seed(3).stream(0)).unwrap();
        let mut ens = CandidateEnsemble::fit(&model, &data, &cands).unwrap();
        // force one dominating score
        let b = ens.map_index;
        for (i, lw) in ens.log_weights.iter_mut().enumerate() {
            *lw = if i == b { 0.0 } else { -750.0 };
        }
        for k in [0u64, 4, 9] {
            assert_relative_eq!(
                ens.fb_log_predictive(&model, &k).unwrap(),
                ens.map_log_predictive(&model, &k),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn fb_map_sandwich_and_additivity() {
        let model = GammaPoisson::new(GammaParams::new(2.5, 0.5).unwrap());
        let data = CountData::new(vec![5, 4, 6, 50, 5, 3]).unwrap();
        let cands = make_candidate_set(6, 12, &mut Seed(4).stream(0)).unwrap();
        let ens = CandidateEnsemble::fit(&model, &data, &cands).unwrap();

        for k in [0u64, 5, 12, 50] {
            let per: Vec<f64> = (0..ens.len())
                .map(|b| model.log_predictive(ens.posterior(b), &k))
                .collect();
            let hi = per.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = per.iter().cloned().fold(f64::INFINITY, f64::min);
            let fb = ens.fb_log_predictive(&model, &k).unwrap();
            assert!(fb <= hi + 1e-12 && fb >= lo - 1e-12, "{lo} {fb} {hi}");
        }

        // score on a concatenated dataset is the sum of the parts
        let left = CountData::new(vec![5, 4]).unwrap();
        let right = CountData::new(vec![6, 50, 5, 3]).unwrap();
        for b in 0..ens.len() {
            let post = ens.posterior(b);
            let whole = model.dataset_log_predictive(post, &data);
            let parts = model.dataset_log_predictive(post, &left)
                + model.dataset_log_predictive(post, &right);
            assert_relative_eq!(whole, parts, epsilon = 1e-10);
        }
    }

    #[test]
    fn map_never_scores_below_identity() {
        let model = GammaPoisson::new(GammaParams::new(2.5, 0.5).unwrap());
        for seed in 0..10u64 {
            let mut rng = Seed(seed).stream(0);
            let data = CountData::new(
                (0..40).map(|i| (i * 7 % 11) as u64 + seed % 3).collect(),
            )
            .unwrap();
            let cands = make_candidate_set(40, 15, &mut rng).unwrap();
            let t = score_candidates(&model, &data, &cands).unwrap();
            let b = select_map(&t).unwrap();
            assert!(t.score(b) >= t.score(0));
        }
    }

    #[test]
    fn permuting_candidates_permutes_weights() {
        let model = GammaPoisson::new(GammaParams::new(2.5, 0.5).unwrap());
        let data = CountData::new(vec![5, 4, 6, 50, 5, 3, 7, 2]).unwrap();
        let cands = make_candidate_set(8, 6, &mut Seed(7).stream(0)).unwrap();
        let t = score_candidates(&model, &data, &cands).unwrap();
        let w = fb_weights(&t).unwrap();

        let perm = [4usize, 0, 5, 2, 1, 3];
        let permuted: Vec<CandidateWeights> = perm.iter().map(|&i| cands[i].clone()).collect();
        let tp = score_candidates(&model, &data, &permuted).unwrap();
        let wp = fb_weights(&tp).unwrap();
        for (j, &i) in perm.iter().enumerate() {
            assert_relative_eq!(wp[j], w[i], epsilon = 1e-12);
            assert_relative_eq!(tp.score(j), t.score(i), epsilon = 1e-12);
        }
        // the selected candidate is the same one, at its permuted position
        let b = select_map(&t).unwrap();
        let bp = select_map(&tp).unwrap();
        assert_eq!(perm[bp], b);
    }

    proptest! {
        #[test]
        fn fb_weights_sum_to_one(scores in proptest::collection::vec(-500.0f64..100.0, 1..40)) {
            let w = fb_weights(&table(scores)).unwrap();
            let total: f64 = w.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(w.iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x)));
        }

        #[test]
        fn log_sum_exp_shift_invariance(
            v in proptest::collection::vec(-300.0f64..300.0, 1..30),
            c in -100.0f64..100.0,
        ) {
            let shifted: Vec<f64> = v.iter().map(|&x| x + c).collect();
            let a = crate::math::log_sum_exp(&v).unwrap();
            let b = crate::math::log_sum_exp(&shifted).unwrap();
            prop_assert!((b - (a + c)).abs() < 1e-12 * (1.0 + a.abs().max(b.abs())));
        }
    }
}
