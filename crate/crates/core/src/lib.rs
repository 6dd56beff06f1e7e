//! Selective classification with out-of-distribution detection (SCOD).
//!
//! The crate is organised around the pieces needed to build, estimate and
//! evaluate joint classifier/rejector pairs:
//!
//! - [`distributions`]: synthetic ground-truth environments with exact
//!   densities, posteriors and reproducible sampling.
//! - [`bayes_rules`]: closed-form Bayes-optimal rejectors (Chow, density
//!   ratio, joint SCOD, open-set) used as references and test oracles.
//! - [`scorer_models`]: small trainable scorers with hand-written gradients
//!   for the decoupled and coupled surrogate losses.
//! - [`post_hoc_scores`]: MSP, max-logit, energy, embedding norms, residual
//!   and SIRC baseline scores.
//! - [`plugin_rejectors`]: black-box and loss-based plug-in rejectors, the
//!   mixture-proportion estimate, noise correction and the abstention-budget
//!   search.
//! - [`metrics`]: joint risk, risk-coverage curves, AUC-ROC and FPR@95TPR.
//! - [`diagnostics`]: Monte-Carlo regret reports that compare learned
//!   estimates against exact quantities.
//! - [`scenarios`]: the bundled synthetic environments.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled (the default) and plain iterators otherwise.
//! Both paths produce bit-identical results.

#![allow(clippy::needless_range_loop)]

pub mod bayes_rules;
pub mod diagnostics;
pub mod distributions;
mod error;
pub mod metrics;
pub mod numeric;
pub mod par;
pub mod plugin_rejectors;
pub mod post_hoc_scores;
pub mod scenarios;
pub mod scorer_models;

pub use error::{Result, ScodError};
