//! Kernel SVM classifiers with a bounded, ε-insensitive asymmetric elastic net
//! loss, trained by half-quadratic iterations over clipped dual coordinate
//! descent, plus the evaluation and benchmarking tools around them.

pub mod data;
pub mod error;
pub mod evaluation;
pub mod experiments;
pub mod kernels;
pub mod losses;
pub mod oracle;
pub mod qp;
pub mod trainer;
pub mod verify;

pub use error::{Error, Result};
