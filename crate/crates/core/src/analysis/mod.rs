//! Exact Poisson-binomial tails, the lemma classifiers and the closed-form
//! approximation constants.

pub mod bounds;
pub mod lemmas;
pub mod poisson;

pub use bounds::*;
pub use lemmas::{classify_k, classify_single, CaseId, LemmaCase, Witness};
pub use poisson::{median_lower_bound_check, PoissonBinomial};
