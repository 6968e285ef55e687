//! Population empirical Bayes predictive inference.
//!
//! The crate builds predictive densities that stay useful when the model is
//! misspecified. The recipe: resample the observed dataset with replacement,
//! fit the model to each resample, score each fit by the log predictive
//! density of the original observations, then either predict from the best
//! resample (the MAP route, a form of bumping) or mix all resamples by their
//! normalized scores (the full-Bayes route). For conditionally conjugate
//! models where exact fits are out of reach, [`bumpvi`] folds the same
//! selection step into each natural-gradient iteration of stochastic
//! variational inference.
//!
//! Exact conjugate engines live in [`conjugate`] (Gamma-Poisson counts,
//! normal-inverse-gamma linear regression), mean-field variational engines
//! in [`vi`] (diagonal Gaussian mixtures and latent Dirichlet allocation),
//! and the model-agnostic scoring machinery in [`scoring`]. The `popeb`
//! binary drives the four reproduction experiments; see the README.

pub mod bootstrap;
pub mod bumpvi;
pub mod config;
pub mod conjugate;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiments;
pub mod io;
pub mod math;
pub mod par;
pub mod rng;
pub mod scoring;
pub mod synth;
pub mod vi;

pub use bootstrap::{bootstrap_sample, make_candidate_set, CandidateWeights};
pub use data::{CountData, Document, DocumentData, RegressionData, VectorData};
pub use error::{Error, Result};
pub use rng::Seed;
pub use scoring::{
    fb_weights, score_candidates, select_map, CandidateEnsemble, PredictiveModel, ScoreTable,
};
