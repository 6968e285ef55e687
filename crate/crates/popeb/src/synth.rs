//! Seeded synthetic data generators for the four experiments.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::data::{CountData, Document, DocumentData, RegressionData, VectorData};
use crate::error::{Error, Result};

/// Counts from a contaminated Poisson: each observation comes from
/// `Poisson(rate_contaminated)` with probability `contamination`, otherwise
/// from `Poisson(rate_dominant)`.
pub fn contaminated_counts<R: Rng>(
    n: usize,
    rate_dominant: f64,
    rate_contaminated: f64,
    contamination: f64,
    rng: &mut R,
) -> Result<CountData> {
    if !(0.0..1.0).contains(&contamination) {
        return Err(Error::invalid("contamination must lie in [0, 1)"));
    }
    let dominant = Poisson::new(rate_dominant)
        .map_err(|e| Error::invalid(format!("bad dominant rate: {e}")))?;
    let contaminated = Poisson::new(rate_contaminated)
        .map_err(|e| Error::invalid(format!("bad contaminated rate: {e}")))?;
    let values = (0..n)
        .map(|_| {
            if rng.gen::<f64>() < contamination {
                contaminated.sample(rng) as u64
            } else {
                dominant.sample(rng) as u64
            }
        })
        .collect();
    CountData::new(values)
}

/// Linear-regression rows with a fraction of grossly corrupted targets.
///
/// Features are standard normal, coefficients are drawn once per call, and
/// clean targets get Gaussian noise of `noise_sd`. A `outlier_frac` share of
/// targets receives additional noise inflated by `outlier_scale`. The output
/// goes through the same standardize-and-append-intercept path as the file
/// loader.
pub fn contaminated_regression<R: Rng>(
    n: usize,
    dim: usize,
    noise_sd: f64,
    outlier_frac: f64,
    outlier_scale: f64,
    rng: &mut R,
) -> Result<RegressionData> {
    if n == 0 || dim == 0 {
        return Err(Error::invalid("regression generator needs n >= 1 and dim >= 1"));
    }
    let coef: Vec<f64> = (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * 0.3)
        .collect();
    let mut rows = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut y: f64 = x.iter().zip(&coef).map(|(&a, &b)| a * b).sum::<f64>()
            + noise_sd * rng.sample::<f64, _>(StandardNormal);
        if rng.gen::<f64>() < outlier_frac {
            y += noise_sd * outlier_scale * rng.sample::<f64, _>(StandardNormal);
        }
        rows.push(x);
        targets.push(y);
    }
    RegressionData::standardized(&rows, &targets, 1.0)
}

/// Vector rows from a misspecified mixture with a share of off-manifold
/// contamination.
///
/// `k_true` component means are drawn from `N(0, spread² I)`. Each component
/// carries its own random orthogonal frame and per-axis scales, producing
/// correlated anisotropic clouds that a diagonal-covariance fit cannot
/// represent. Contaminated rows are uniform over `[-box_half, box_half]^dim`.
pub fn contaminated_gmm<R: Rng>(
    n: usize,
    dim: usize,
    k_true: usize,
    contamination: f64,
    rng: &mut R,
) -> Result<VectorData> {
    if n == 0 || dim == 0 || k_true == 0 {
        return Err(Error::invalid("mixture generator needs n, dim, k >= 1"));
    }
    if !(0.0..1.0).contains(&contamination) {
        return Err(Error::invalid("contamination must lie in [0, 1)"));
    }
    let spread = 2.0;
    let box_half = 8.0;
    let means: Vec<Vec<f64>> = (0..k_true)
        .map(|_| {
            (0..dim)
                .map(|_| spread * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let frames: Vec<Vec<f64>> = (0..k_true).map(|_| random_orthogonal(dim, rng)).collect();
    let scales: Vec<Vec<f64>> = (0..k_true)
        .map(|_| (0..dim).map(|_| rng.gen_range(0.3..1.7)).collect())
        .collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            if rng.gen::<f64>() < contamination {
                (0..dim).map(|_| rng.gen_range(-box_half..box_half)).collect()
            } else {
                let c = rng.gen_range(0..k_true);
                let z: Vec<f64> = (0..dim)
                    .map(|d| scales[c][d] * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                (0..dim)
                    .map(|i| {
                        means[c][i]
                            + (0..dim).map(|j| frames[c][i * dim + j] * z[j]).sum::<f64>()
                    })
                    .collect()
            }
        })
        .collect();
    VectorData::new(rows)
}

/// Random orthogonal matrix (row-major) via Gram-Schmidt on Gaussian draws.
fn random_orthogonal<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut q = vec![0.0; dim * dim];
    for i in 0..dim {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for j in 0..i {
            let dot: f64 = (0..dim).map(|d| v[d] * q[j * dim + d]).sum();
            for d in 0..dim {
                v[d] -= dot * q[j * dim + d];
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        for d in 0..dim {
            q[i * dim + d] = v[d] / norm;
        }
    }
    q
}

/// Bag-of-words documents from a bursty topic mixture with a share of
/// uniform-noise documents.
///
/// `k_true` sparse topics are drawn once and each document mixes them
/// through a Dirichlet. Word draws are self-reinforcing: with probability
/// [`BURSTINESS`] a token repeats an earlier token of the same document
/// instead of sampling its topic, so documents are overdispersed relative
/// to the multinomial a topic model assumes. A `noise_frac` share of
/// documents is replaced by uniform draws over the vocabulary.
pub fn synthetic_corpus<R: Rng>(
    n_docs: usize,
    vocab: usize,
    k_true: usize,
    mean_len: f64,
    noise_frac: f64,
    rng: &mut R,
) -> Result<DocumentData> {
    if n_docs == 0 || vocab == 0 || k_true == 0 {
        return Err(Error::invalid("corpus generator needs docs, vocab, k >= 1"));
    }
    if !(0.0..1.0).contains(&noise_frac) {
        return Err(Error::invalid("noise fraction must lie in [0, 1)"));
    }
    let len_dist = Poisson::new(mean_len)
        .map_err(|e| Error::invalid(format!("bad mean length: {e}")))?;

    // sparse topics via normalized Gamma(0.05) draws
    let topics: Vec<Vec<f64>> = (0..k_true)
        .map(|_| {
            let raw: Vec<f64> = (0..vocab).map(|_| sample_gamma(0.05, rng)).collect();
            let total: f64 = raw.iter().sum();
            raw.iter().map(|&x| x / total).collect()
        })
        .collect();

    let docs: Vec<Document> = (0..n_docs)
        .map(|_| {
            let len = (len_dist.sample(rng) as usize).max(1);
            let mut drawn: Vec<u32> = Vec::with_capacity(len);
            let mut counts: std::collections::BTreeMap<u32, u32> = Default::default();
            if rng.gen::<f64>() < noise_frac {
                for _ in 0..len {
                    *counts.entry(rng.gen_range(0..vocab) as u32).or_insert(0) += 1;
                }
            } else {
                // per-document topic proportions from Dirichlet(0.3)
                let raw: Vec<f64> = (0..k_true).map(|_| sample_gamma(0.3, rng)).collect();
                let total: f64 = raw.iter().sum();
                let theta: Vec<f64> = raw.iter().map(|&x| x / total).collect();
                for _ in 0..len {
                    let word = if !drawn.is_empty() && rng.gen::<f64>() < BURSTINESS {
                        drawn[rng.gen_range(0..drawn.len())]
                    } else {
                        let topic = sample_categorical(&theta, rng);
                        sample_categorical(&topics[topic], rng) as u32
                    };
                    drawn.push(word);
                    *counts.entry(word).or_insert(0) += 1;
                }
            }
            Document::new(counts.into_iter().collect(), vocab)
        })
        .collect::<Result<_>>()?;
    DocumentData::new(docs, vocab)
}

/// Probability that a token repeats an earlier token of its document.
pub const BURSTINESS: f64 = 0.4;

fn sample_gamma<R: Rng>(shape: f64, rng: &mut R) -> f64 {
    rand_distr::Gamma::new(shape, 1.0)
        .expect("positive shape")
        .sample(rng)
        .max(1e-300)
}

fn sample_categorical<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let mut u = rng.gen::<f64>();
    for (i, &p) in probs.iter().enumerate() {
        if u < p {
            return i;
        }
        u -= p;
    }
    probs.len() - 1
}
