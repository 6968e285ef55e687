//! Mean-field variational engines for the two non-conjugate models.

pub mod gmm;
pub mod lda;

pub use gmm::{
    gmm_cavi, gmm_dataset_log_predictive, gmm_elbo, gmm_global_step, gmm_init, gmm_local_step,
    gmm_log_predictive, GmmGlobals, GmmPredictive, GmmPrior, GmmState,
};
pub use lda::{
    lda_all_locals, lda_cavi, lda_global_update, lda_init, lda_local_step,
    lda_per_word_log_predictive, DocLocal, LdaExpLog, LdaGlobals, LdaPointTopics, LdaPrior,
};
