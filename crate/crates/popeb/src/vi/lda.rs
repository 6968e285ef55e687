//! Batch variational inference for latent Dirichlet allocation.
//!
//! Local variables (per-document topic proportions and per-word assignment
//! distributions) are optimized for every document; resample weights over
//! whole documents enter only the topic-parameter update. Held-out scoring
//! folds a document in against point-estimate topics.

use rand::Rng;

use crate::bootstrap::CandidateWeights;
use crate::data::{Document, DocumentData};
use crate::error::{Error, Result};
use crate::math::{digamma, log_sum_exp};
use crate::par;

/// Inner-loop convergence: stop when the mean absolute change in gamma
/// drops below this.
pub const GAMMA_TOL: f64 = 1e-4;
/// Inner-loop iteration cap for training-time local steps.
pub const LOCAL_MAX_ITERS: usize = 100;

/// Symmetric Dirichlet hyperparameters: `alpha` on per-document topic
/// proportions, `eta` on topic-word distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaPrior {
    k: usize,
    alpha: f64,
    eta: f64,
}

impl LdaPrior {
    pub fn new(k: usize, alpha: f64, eta: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("topic count must be at least 1"));
        }
        if alpha <= 0.0 || eta <= 0.0 {
            return Err(Error::invalid("LDA hyperparameters must be positive"));
        }
        Ok(LdaPrior { k, alpha, eta })
    }

    /// Corpus defaults: `alpha = 1/K`, `eta = 0.005`.
    pub fn default_for(k: usize) -> Result<Self> {
        LdaPrior::new(k, 1.0 / k as f64, 0.005)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Global topic parameters: a `K x V` matrix of Dirichlet counts, every
/// entry at least `eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaGlobals {
    lambda: Vec<f64>,
    k: usize,
    v: usize,
}

impl LdaGlobals {
    pub fn new(lambda: Vec<f64>, k: usize, v: usize) -> Result<Self> {
        if lambda.len() != k * v || k == 0 || v == 0 {
            return Err(Error::invalid("lambda must be a nonempty K x V matrix"));
        }
        if lambda.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::numeric(None, "lambda entries must be positive"));
        }
        Ok(LdaGlobals { lambda, k, v })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vocab(&self) -> usize {
        self.v
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.lambda[k * self.v..(k + 1) * self.v]
    }

    /// Natural coordinates: the flattened matrix (the Dirichlet natural
    /// parameter differs only by an additive constant, which cancels in
    /// every gradient).
    pub fn to_natural(&self) -> Vec<f64> {
        self.lambda.clone()
    }

    pub fn from_natural(k: usize, v: usize, nat: &[f64]) -> Result<Self> {
        LdaGlobals::new(nat.to_vec(), k, v)
    }

    /// Top `count` word ids of each topic by weight, for qualitative output.
    pub fn top_words(&self, count: usize) -> Vec<Vec<u32>> {
        (0..self.k)
            .map(|kk| {
                let mut idx: Vec<u32> = (0..self.v as u32).collect();
                idx.sort_by(|&a, &b| {
                    self.row(kk)[b as usize]
                        .partial_cmp(&self.row(kk)[a as usize])
                        .unwrap()
                        .then(a.cmp(&b))
                });
                idx.truncate(count);
                idx
            })
            .collect()
    }
}

/// Expected log topics `E[ln beta_kw] = psi(lambda_kw) - psi(sum_w lambda_kw)`,
/// precomputed once per global state and shared across documents.
pub struct LdaExpLog {
    elog: Vec<f64>,
    v: usize,
}

impl LdaExpLog {
    pub fn new(globals: &LdaGlobals) -> Self {
        let (k, v) = (globals.k, globals.v);
        let mut elog = Vec::with_capacity(k * v);
        for kk in 0..k {
            let row = globals.row(kk);
            let psi_total = digamma(row.iter().sum());
            elog.extend(row.iter().map(|&x| digamma(x) - psi_total));
        }
        LdaExpLog { elog, v }
    }

    fn at(&self, k: usize, w: u32) -> f64 {
        self.elog[k * self.v + w as usize]
    }
}

/// Per-document local variables after one converged local step.
#[derive(Debug, Clone)]
pub struct DocLocal {
    /// Topic-proportion Dirichlet parameters, length K; every entry >= alpha.
    pub gamma: Vec<f64>,
    /// Assignment distributions, row per unique word in document order,
    /// rows normalized.
    pub phi: Vec<f64>,
}

/// Optimizes one document's local variables against fixed topics:
/// `phi_wk ∝ exp(psi(gamma_k) + E[ln beta_kw])`,
/// `gamma_k = alpha + sum_w count_w phi_wk`,
/// stopping at [`GAMMA_TOL`] mean absolute gamma change or `max_inner`
/// iterations.
pub fn lda_local_step(
    doc: &Document,
    elog: &LdaExpLog,
    prior: &LdaPrior,
    max_inner: usize,
) -> DocLocal {
    let k = prior.k;
    let words = doc.words();
    let mut gamma = vec![prior.alpha + doc.len() as f64 / k as f64; k];
    let mut phi = vec![0.0; words.len() * k];
    let mut log_row = vec![0.0; k];
    let mut psi_gamma = vec![0.0; k];
    for _ in 0..max_inner.max(1) {
        for (kk, pg) in psi_gamma.iter_mut().enumerate() {
            *pg = digamma(gamma[kk]);
        }
        let mut new_gamma = vec![prior.alpha; k];
        for (wi, &(w, count)) in words.iter().enumerate() {
            for kk in 0..k {
                log_row[kk] = psi_gamma[kk] + elog.at(kk, w);
            }
            let norm = log_sum_exp(&log_row).expect("K >= 1");
            let row = &mut phi[wi * k..(wi + 1) * k];
            for kk in 0..k {
                let p = (log_row[kk] - norm).exp();
                row[kk] = p;
                new_gamma[kk] += count as f64 * p;
            }
        }
        let delta: f64 = gamma
            .iter()
            .zip(&new_gamma)
            .map(|(&a, &b)| (a - b).abs())
            .sum::<f64>()
            / k as f64;
        gamma = new_gamma;
        if delta < GAMMA_TOL {
            break;
        }
    }
    DocLocal { gamma, phi }
}

/// Topic update from resample-weighted local variables:
/// `lambda_kw = eta + sum_d c_d sum_{w in d} count_dw phi_dwk`.
/// Documents accumulate in corpus order.
pub fn lda_global_update(
    corpus: &DocumentData,
    weights: &CandidateWeights,
    locals: &[DocLocal],
    prior: &LdaPrior,
) -> LdaGlobals {
    let k = prior.k;
    let v = corpus.vocab();
    debug_assert_eq!(weights.len(), corpus.len());
    debug_assert_eq!(locals.len(), corpus.len());
    let mut lambda = vec![prior.eta; k * v];
    for (d, c) in weights.iter_nonzero() {
        let c = c as f64;
        let words = corpus.doc(d).words();
        let phi = &locals[d].phi;
        for (wi, &(w, count)) in words.iter().enumerate() {
            let scale = c * count as f64;
            for kk in 0..k {
                lambda[kk * v + w as usize] += scale * phi[wi * k + kk];
            }
        }
    }
    LdaGlobals { lambda, k, v }
}

/// Point-estimate topics `beta_kw = lambda_kw / sum_w lambda_kw` with their
/// logs, used by held-out fold-in.
pub struct LdaPointTopics {
    beta: Vec<f64>,
    log_beta: Vec<f64>,
    k: usize,
    v: usize,
}

impl LdaPointTopics {
    pub fn new(globals: &LdaGlobals) -> Self {
        let (k, v) = (globals.k, globals.v);
        let mut beta = Vec::with_capacity(k * v);
        let mut log_beta = Vec::with_capacity(k * v);
        for kk in 0..k {
            let row = globals.row(kk);
            let total: f64 = row.iter().sum();
            for &x in row {
                let b = x / total;
                beta.push(b);
                log_beta.push(b.ln());
            }
        }
        LdaPointTopics {
            beta,
            log_beta,
            k,
            v,
        }
    }

    /// Fold-in: fit the document's topic proportions against the fixed
    /// point-estimate topics, then return the total log predictive
    /// `sum_w count_w ln sum_k theta_k beta_kw`.
    pub fn doc_log_predictive(&self, doc: &Document, prior: &LdaPrior, max_inner: usize) -> f64 {
        let k = self.k;
        let words = doc.words();
        let mut gamma = vec![prior.alpha() + doc.len() as f64 / k as f64; k];
        let mut log_row = vec![0.0; k];
        for _ in 0..max_inner.max(1) {
            let psi_gamma: Vec<f64> = gamma.iter().map(|&g| digamma(g)).collect();
            let mut new_gamma = vec![prior.alpha(); k];
            for &(w, count) in words {
                for kk in 0..k {
                    log_row[kk] = psi_gamma[kk] + self.log_beta[kk * self.v + w as usize];
                }
                let norm = log_sum_exp(&log_row).expect("K >= 1");
                for kk in 0..k {
                    new_gamma[kk] += count as f64 * (log_row[kk] - norm).exp();
                }
            }
            let delta: f64 = gamma
                .iter()
                .zip(&new_gamma)
                .map(|(&a, &b)| (a - b).abs())
                .sum::<f64>()
                / k as f64;
            gamma = new_gamma;
            if delta < GAMMA_TOL {
                break;
            }
        }
        let theta_total: f64 = gamma.iter().sum();
        let mut total = 0.0;
        for &(w, count) in words {
            let mut p = 0.0;
            for kk in 0..k {
                p += gamma[kk] / theta_total * self.beta[kk * self.v + w as usize];
            }
            total += count as f64 * p.ln();
        }
        total
    }
}

/// Average per-token held-out log predictive of one document under fold-in.
pub fn lda_per_word_log_predictive(
    globals: &LdaGlobals,
    prior: &LdaPrior,
    doc: &Document,
) -> f64 {
    let topics = LdaPointTopics::new(globals);
    topics.doc_log_predictive(doc, prior, LOCAL_MAX_ITERS) / doc.len() as f64
}

/// Seeded initialization: `lambda = eta + Uniform(0, 1)`.
pub fn lda_init<R: Rng>(vocab: usize, prior: &LdaPrior, rng: &mut R) -> LdaGlobals {
    let lambda = (0..prior.k * vocab)
        .map(|_| prior.eta + rng.gen::<f64>())
        .collect();
    LdaGlobals {
        lambda,
        k: prior.k,
        v: vocab,
    }
}

/// Batch coordinate ascent until the topic-parameter change drops below
/// `tol` or `max_iters` is reached. Returns the final globals and the
/// number of iterations executed.
pub fn lda_cavi(
    corpus: &DocumentData,
    prior: &LdaPrior,
    init: LdaGlobals,
    max_iters: usize,
    tol: f64,
) -> (LdaGlobals, usize) {
    let identity = CandidateWeights::identity(corpus.len());
    let mut globals = init;
    let mut iters = 0;
    for _ in 0..max_iters {
        let locals = lda_all_locals(corpus, &globals, prior, LOCAL_MAX_ITERS);
        let next = lda_global_update(corpus, &identity, &locals, prior);
        let delta = globals
            .lambda
            .iter()
            .zip(&next.lambda)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        globals = next;
        iters += 1;
        if delta < tol {
            break;
        }
    }
    (globals, iters)
}

/// Local steps for every document, in parallel, in corpus order.
pub fn lda_all_locals(
    corpus: &DocumentData,
    globals: &LdaGlobals,
    prior: &LdaPrior,
    max_inner: usize,
) -> Vec<DocLocal> {
    let elog = LdaExpLog::new(globals);
    par::map_indexed(corpus.len(), |d| {
        lda_local_step(corpus.doc(d), &elog, prior, max_inner)
    })
}

/// Inner-iteration cap for the fold-in passes inside candidate scoring.
/// Scoring runs once per candidate per iteration, so it gets a tighter
/// budget than the training local steps.
pub const SCORE_INNER_ITERS: usize = 20;

/// LDA as a bumpable model: per-document local passes, weighted topic
/// updates, and a capped fold-in score against point-estimate topics.
#[derive(Debug, Clone, Copy)]
pub struct LdaModel {
    prior: LdaPrior,
    score_inner_iters: usize,
}

impl LdaModel {
    pub fn new(prior: LdaPrior) -> Self {
        LdaModel {
            prior,
            score_inner_iters: SCORE_INNER_ITERS,
        }
    }

    pub fn prior(&self) -> &LdaPrior {
        &self.prior
    }
}

impl crate::bumpvi::BumpableModel for LdaModel {
    type Data = DocumentData;
    type Locals = Vec<DocLocal>;
    type Globals = LdaGlobals;

    fn n_obs(&self, data: &DocumentData) -> usize {
        data.len()
    }

    fn local_step(&self, data: &DocumentData, globals: &LdaGlobals) -> Result<Vec<DocLocal>> {
        Ok(lda_all_locals(data, globals, &self.prior, LOCAL_MAX_ITERS))
    }

    fn global_fixed_point(
        &self,
        data: &DocumentData,
        weights: &CandidateWeights,
        locals: &Vec<DocLocal>,
    ) -> LdaGlobals {
        lda_global_update(data, weights, locals, &self.prior)
    }

    fn predictive_score(&self, data: &DocumentData, globals: &LdaGlobals) -> f64 {
        let topics = LdaPointTopics::new(globals);
        par::map_indexed(data.len(), |d| {
            topics.doc_log_predictive(data.doc(d), &self.prior, self.score_inner_iters)
        })
        .iter()
        .sum()
    }

    fn to_natural(&self, globals: &LdaGlobals) -> Vec<f64> {
        globals.to_natural()
    }

    fn from_natural(&self, nat: &[f64]) -> Result<LdaGlobals> {
        let k = self.prior.k;
        if nat.is_empty() || nat.len() % k != 0 {
            return Err(Error::invalid(format!(
                "natural vector length {} is not K*V for K={k}",
                nat.len()
            )));
        }
        LdaGlobals::from_natural(k, nat.len() / k, nat)
    }
}
