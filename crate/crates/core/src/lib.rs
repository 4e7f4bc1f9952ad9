//! Interpretable rule ensembles mined from random forests.
//!
//! The crate follows the forest from training to an explanation:
//!
//! 1. [`forest`] grows a random forest over categorical attributes.
//! 2. [`rules`] turns every root-to-leaf path into a set-membership rule and
//!    measures it against the training data.
//! 3. [`preselect`] keeps individually strong, mutually dissimilar rules.
//! 4. [`select`] solves a 0-1 program that picks a small, accurate,
//!    high-coverage, low-overlap rule ensemble.
//! 5. [`enrich`] attaches complementary rules found through pairwise
//!    containment metarules.
//! 6. [`ensemble`] turns rule sets into classifiers and scores them.
//!
//! [`pipeline`] wires the stages together, runs Monte Carlo cross-validation
//! and produces the export files.
//!
//! Data-parallel inner loops (tree growth, rule evaluation, similarity rows,
//! heuristic restarts, CV rounds) go through [`Exec`]. With the `parallel`
//! feature disabled every [`Exec`] runs sequentially.

pub mod data;
pub mod enrich;
pub mod ensemble;
mod error;
mod exec;
pub mod forest;
pub mod pipeline;
pub mod preselect;
pub mod rules;
pub mod seed;
pub mod select;

pub use error::{Error, Result};
pub use exec::Exec;
