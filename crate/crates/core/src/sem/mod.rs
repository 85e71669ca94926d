//! Structures of equations, causal ordering and the fd encoding of a hypothesis.

mod coa;
mod encode;
mod structure;

pub use coa::{
    check_no_overdetermined_subset, coa_t, minimal_substructures, Block, CausalMapping,
    DEFAULT_ENUMERATION_CAP,
};
pub use encode::{classification, classify, encode, h_encode, AttrClass};
pub use structure::{Equation, Structure};
