//! Jeffreys-prior penalized maximum likelihood for binomial regression
//! under the logit, probit, and complementary log-log links, with a
//! linear-programming separation detector and a numerical verification
//! harness for the estimator's existence behavior.
//!
//! The penalized objective is l*(beta) = l(beta) + (1/2) log det X'MW(beta)X.
//! Its maximizer stays finite even on completely separated data, where the
//! plain maximum likelihood estimate runs away to infinity; the fit engine,
//! the detector, and the harness in this crate let each of those behaviors
//! be observed and cross-checked directly.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod fit;
pub mod harness;
pub mod linalg;
pub mod link;
pub mod lp;
pub mod model;
pub mod penalty;
pub mod separation;

#[cfg(test)]
pub(crate) mod testutil;

pub use dataset::{Dataset, RawRow};
pub use error::{Error, Result};
pub use fit::{fit_mle, fit_penalized, standard_errors, FitConfig, FitResult, FitStatus};
pub use link::{link_eval, LinkEval, LinkKind};
pub use model::{fisher_info, log_likelihood, score, FisherInfo, ModelState};
pub use penalty::{
    binet_cauchy_det, binet_cauchy_logdet, penalized_gradient, penalized_loglik, penalty,
    PenaltyEval,
};
pub use separation::{detect_separation, SeparationKind, SeparationReport};
