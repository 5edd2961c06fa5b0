//! Sketching and sampling algorithms for robust subspace approximation and
//! M-estimator regression.
//!
//! The crate is `no_std` and needs only `alloc`. Enable the default `parallel`
//! feature to evaluate row scores and solver restarts on a rayon pool; results
//! are identical with or without it.
#![no_std]

extern crate alloc;

#[cfg(not(feature = "parallel"))]
mod float;

pub mod error;
pub mod linalg;
pub mod loss;
pub mod measure;
mod par;
pub mod seed;
pub mod sketch;
pub mod conditioning;
pub mod sampling;
pub mod dimreduce;
pub mod bicriteria;
pub mod small;
pub mod pipeline;
pub mod regression;
pub mod hardness;
pub mod oracle;

pub use error::{Error, Result};
pub use linalg::{CsrMatrix, Matrix};
pub use loss::{m_value, LossKind, LossSpec};
pub use measure::{entrywise_norm_p, residual_cost, v_norm_p, CostReport, Subspace, WeightVector};
