//! Schema synthesis from fds, with normal-form, preservation and
//! lossless-join checks.

mod lossless;
mod normal_forms;
mod schema;

pub use lossless::{chase_oracle, lossless_join};
pub use normal_forms::{
    bcnf_violation, bcnf_violation_exhaustive, candidate_keys, is_3nf, is_bcnf, preserves,
    preserves_by_projection, third_nf_violation, Witness,
};
pub use schema::{RelScheme, Schema};

use crate::error::Result;
use crate::fd::{AttrSet, FdSet};

pub const DEFAULT_CAP_ATTRS: usize = 12;

#[derive(Clone, Copy, Debug, Default)]
pub struct SynthOptions {
    /// Append a scheme holding a key of the universe when no scheme contains one.
    pub force_lossless: bool,
}

/// Synthesis over a parsimonious set: one scheme per distinct lhs, merging
/// groups whose keys are mutually derivable. The first key seen is kept and
/// schemes are named `R1..Rn` in creation order.
pub fn synthesize(sigma: &FdSet) -> Result<Schema> {
    synthesize_with(sigma, SynthOptions::default())
}

pub fn synthesize_with(sigma: &FdSet, opts: SynthOptions) -> Result<Schema> {
    sigma.require_parsimonious("synthesize")?;
    let mut schemes: Vec<RelScheme> = Vec::new();
    for fd in sigma.union_rule().iter() {
        match schemes
            .iter_mut()
            .find(|s| sigma.equivalent_sets(&fd.lhs, &s.key))
        {
            Some(s) => s.attrs.extend(fd.attrs()),
            None => schemes.push(RelScheme {
                name: format!("R{}", schemes.len() + 1),
                attrs: fd.attrs(),
                key: fd.lhs.clone(),
            }),
        }
    }
    let mut schema = Schema {
        source: sigma.clone(),
        schemes,
    };
    if opts.force_lossless {
        let all = sigma.mentioned();
        let has_key = schema
            .schemes
            .iter()
            .any(|s| all.is_subset(&sigma.closure(&s.attrs)));
        if !has_key && !all.is_empty() {
            let key = minimal_key(sigma, &all);
            schema.schemes.push(RelScheme {
                name: format!("R{}", schema.schemes.len() + 1),
                attrs: key.clone(),
                key,
            });
        }
    }
    Ok(schema)
}

/// A minimal key of `attrs`, dropping attributes from the back of the order.
pub fn minimal_key(sigma: &FdSet, attrs: &AttrSet) -> AttrSet {
    let mut key = attrs.clone();
    for a in attrs.iter().rev() {
        let mut smaller = key.clone();
        smaller.remove(a);
        if !smaller.is_empty() && attrs.is_subset(&sigma.closure(&smaller)) {
            key = smaller;
        }
    }
    key
}
