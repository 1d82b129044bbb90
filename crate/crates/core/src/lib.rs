//! Phase retrieval from magnitude-only measurements `y_i = |<a_i, x>|`.
//!
//! Real and complex signals share one code path through the [`Field`] trait.
//! Measurement operators are matrix-free: dense Gaussian rows or coded
//! diffraction patterns evaluated with FFTs.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod field;
pub mod init;
pub mod loss;
pub mod measurements;
pub mod rng;
pub mod sensing;
pub mod signal;
pub mod solvers;

pub use error::{Error, Result};
pub use field::Field;
pub use init::{spectral_initialize, InitParams, InitResult, InitWarning};
pub use loss::{rwf_loss, wf_loss};
pub use measurements::{Measurements, NoiseMeta, Provenance};
pub use num_complex::Complex64;
pub use sensing::{make_cdp, make_gaussian, measure, Ensemble, EnsembleDescriptor, EnsembleKind, NoiseSpec};
pub use signal::{dist_up_to_phase, relative_error, FieldKind, Signal};
pub use solvers::{run, Algorithm, RunTrace, SolverConfig, StopReason, TracePoint};
