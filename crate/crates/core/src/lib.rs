//! Hypothesis databases: causal structures to functional dependencies,
//! folding and schema synthesis, and U-relational encoding of trial data.

pub mod error;
pub mod fd;
pub mod folding;
pub mod pipeline;
pub mod sem;
pub mod synth4c;
pub mod synth4u;
pub mod urel;

pub use error::{Error, Result};
