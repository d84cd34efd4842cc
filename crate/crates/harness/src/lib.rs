//! Baselines, Monte-Carlo evaluation and the sweep runner around
//! `iscc-core`.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod design;
pub mod eval;
pub mod experiment;
pub mod scene;
