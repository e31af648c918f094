//! Short-and-sparse blind deconvolution.
//!
//! Recovers a short kernel `h` (length `M`) and a sparse signal `x` (length
//! `N`) from their circular convolution `y = x (*) h`. The main solver,
//! [`roco`], works directly on the lifted rank-one matrix `Z = x h^T`; the
//! [`bilinear`] module provides alternating-descent baselines on the
//! bilinear Lasso. [`harness`] drives seeded sweeps and image deblurring.

pub mod bilinear;
pub mod data;
pub mod error;
pub mod harness;
pub mod lifting;
pub mod metrics;
pub mod rank_one;
pub mod roco;

pub use error::{Error, Result};
pub use lifting::{Kernel, LiftedMatrix, Signal};
