//! Symbol-level waveform synthesis for integrated sensing and covert
//! communication.
//!
//! The solvers maximize the worst-case radar SCNR over a set of targets while
//! keeping every communication user inside a symbol-error budget, shaping the
//! signal seen by each target toward a Gaussian reference, and respecting a
//! frame power budget.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod mm;
pub mod oracle;
pub mod pda;
pub mod psk;
pub mod qam;
pub mod rng;
pub mod robust;
pub mod sets;
pub mod special;
pub mod surrogate;

pub use error::{Error, Result};
pub use linalg::C64;
