pub mod bench;
pub mod bounds;
pub mod citest;
pub mod error;
pub mod graph;
pub mod sada;
pub mod solvers;
pub mod stats;
pub mod synth;

pub use error::{Result, SadaError};
