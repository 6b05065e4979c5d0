//! Robustness-aware metrics for multiple-choice LLM evaluation under
//! option-order permutation.
//!
//! Models answering multiple-choice questions often change their pick when
//! the options are merely reordered. This crate measures that: it builds the
//! named permutation subsets (original, original+inverse, cyclic, random
//! pairs and tuples, full), computes nine per-question metrics from
//! label-probability logs (fluctuation rate, average/strong/worst/best
//! accuracy, sensitivity-gap complement, probability mass, Brier and entropy
//! complements, and prior-debiased accuracy), and runs an assessment protocol
//! that regresses each subset-computed metric against full-permutation
//! fluctuation and original-order accuracy across (model, benchmark) points.
//! A seeded synthetic-model simulator produces probability logs with tunable
//! knowledge, positional bias, and order-sensitive noise, so the whole
//! pipeline runs at desk scale.
//!
//! Modules follow the pipeline: [`types`] holds the domain model,
//! [`permutations`] builds subsets, [`simulate`] emits logs, [`metrics`]
//! scores them, [`protocol`] runs the assessment, and [`io`] reads and
//! writes the file formats behind the `mcqperm` command-line tool.

pub mod error;
pub mod io;
pub mod metrics;
pub mod permutations;
pub mod protocol;
pub(crate) mod rng;
pub mod simulate;
pub mod types;

pub use error::{Error, Result};
