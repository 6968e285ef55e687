//! Exact conjugate Bayesian engines.

mod gamma_poisson;
mod linreg;

pub use gamma_poisson::{
    eb_moment_match_gamma, gamma_poisson_posterior, neg_binom_log_predictive, GammaParams,
    GammaPoisson,
};
pub use linreg::{
    blr_log_predictive, blr_posterior, blr_predictive_mean, BayesLinReg, NigParams,
};
