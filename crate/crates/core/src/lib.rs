//! Deep manifold transformation.
//!
//! An MLP encoder (optionally paired with a decoder) is trained so that
//! fuzzy neighbourhood similarities computed in the latent space match
//! those of the input space, giving a parametric nonlinear
//! dimensionality reduction. The crate also contains the toy dataset
//! generators, the neighbourhood/similarity pipeline, the embedding
//! quality metrics and the `dmt` command line front end.

pub mod cli;
pub mod datasets;
mod error;
pub mod graph;
pub mod losses;
pub mod metrics;
pub mod network;
pub mod numerics;
pub mod trainer;

pub use error::{Error, Result};
pub use numerics::{Matrix, SeededRng};
