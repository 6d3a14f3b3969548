//! Contrastive node-representation learning on graphs with a one-layer GCN
//! encoder, an NCE objective and a random-direction contrastive regulariser
//! that keeps representation norms in check.

pub mod checkpoint;
pub mod cli;
pub mod dataset;
pub mod diagnostics;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod graph;
pub mod linalg;
pub mod loss;
pub mod optim;
pub mod rng;
pub mod strategy;
pub mod synthetic;
pub mod train;

pub use error::{Error, Result};
pub use graph::Graph;
pub use linalg::{CsrMatrix, DenseMatrix};
pub use rng::Prng;
