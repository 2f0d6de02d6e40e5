//! Transductive top-k linear classification.
//!
//! The crate trains linear classifiers whose goal is precision among the `k`
//! highest-scoring instances of a known, unlabeled test set. The objective is
//! the regularized hinge loss on the labeled training set, minimized subject
//! to exactly `k` test instances being predicted positive.
//!
//! - [`dataset`]: LIBSVM-format parsing, splitting, the synthetic figure scenario.
//! - [`linear_model`]: scoring, top-k selection, intercept adjustment, precision@k.
//! - [`svm`]: the baseline hinge-loss SVM used for initialization.
//! - [`hinge_qp`]: the shared exact convex minimizer for weighted hinge objectives.
//! - [`ttk`]: the feasible-direction solver.
//! - [`exact`]: branch-and-bound over test sign assignments (small scale).
//! - [`population`]: quantile-constrained precision over two-component Gaussian mixtures.
//! - [`bench`]: experimental protocol, statistics and result tables.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod exact;
pub mod hinge_qp;
pub mod linear_model;
pub mod population;
pub mod svm;
pub mod ttk;

pub use dataset::{Dataset, Instance, Label, TransductiveProblem};
pub use error::{Error, Result};
pub use linear_model::LinearModel;
