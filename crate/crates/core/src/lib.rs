pub mod data;
pub mod diffnet;
pub mod dnet;
pub mod error;
pub mod gibbs;
pub mod graph;
pub mod harness;
pub mod matrix;
pub mod metrics;
pub mod structures;
pub mod variates;
pub mod wishart;

pub use error::{Error, Result};
pub use graph::AdjacencyMatrix;
pub use matrix::{DataMatrix, SymMatrix};
