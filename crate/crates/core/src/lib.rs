//! Generative graph convolutional networks for growing graphs.
//!
//! Nodes of an observed graph are replayed in random orders and attached in
//! batches through candidate adjacency matrices; a graph-convolutional
//! Gaussian encoder with an inner-product decoder is trained on the sum of
//! per-step negative ELBOs whose KL terms use the previous step's posterior
//! as prior for old nodes. At test time new nodes enter with no edges at
//! all, and their links are predicted from their attributes and the learned
//! weights. Two static baselines (a graph-convolutional VAE and an MLP VAE)
//! share the same encoder layout.
//!
//! See `examples/` for runnable walkthroughs of each capability.

pub mod checkpoint;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod graph;
pub mod loss;
pub mod model;
pub mod numeric;
pub mod train;

pub use error::{Error, Result};
