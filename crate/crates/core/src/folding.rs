//! Folding: rewrites each fd so its lhs reaches back to the attributes that
//! ultimately determine the target, skipping intermediate ones.

use crate::error::{Error, Result};
use crate::fd::{Attr, AttrSet, Fd, FdSet};

pub const DEFAULT_IS_FOLDED_CAP: usize = 10;

/// How one fd was folded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldStep {
    pub target: Attr,
    pub lhs: AttrSet,
    /// Indices (into the input set) of fds whose target was consumed.
    pub consumed: Vec<usize>,
    /// Indices of fds reached through a cycle; their target stays in the lhs.
    pub cyclic: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Folding {
    pub folded: FdSet,
    pub trace: Vec<FoldStep>,
}

/// Folding of a single target. The caller guarantees `sigma` is parsimonious.
pub fn afolding_unchecked(sigma: &FdSet, target: Attr) -> FoldStep {
    let n = sigma.universe().len();
    let fds: Vec<&Fd> = sigma.iter().collect();
    let mut star = vec![false; n];
    let mut lambda = vec![false; n];
    star[target.index()] = true;
    let mut star_count = 1usize;
    let mut size = 0usize;
    let mut pending: Vec<usize> = (0..fds.len()).collect();
    let mut consumed = Vec::new();
    let mut cyclic = Vec::new();
    while size < star_count {
        size = star_count;
        pending.retain(|&i| {
            let fd = fds[i];
            let b = fd.rhs.iter().next().expect("singleton rhs");
            if !star[b.index()] {
                return true;
            }
            for a in &fd.lhs {
                if !star[a.index()] {
                    star[a.index()] = true;
                    star_count += 1;
                }
            }
            if fd.lhs.iter().all(|a| !lambda[a.index()]) {
                lambda[b.index()] = true;
                consumed.push(i);
            } else {
                cyclic.push(i);
            }
            false
        });
    }
    let lhs = (0..n)
        .filter(|i| star[*i] && !lambda[*i])
        .map(|i| Attr(i as u32))
        .collect();
    FoldStep {
        target,
        lhs,
        consumed,
        cyclic,
    }
}

/// Folded lhs for `target`.
pub fn afolding(sigma: &FdSet, target: Attr) -> Result<AttrSet> {
    sigma.require_parsimonious("afolding")?;
    if !sigma.iter().any(|fd| fd.rhs.contains(&target)) {
        return Err(Error::Precondition(format!(
            "{} is not the target of any fd",
            sigma.universe().name(target)
        )));
    }
    Ok(afolding_unchecked(sigma, target).lhs)
}

/// Folds every fd of a parsimonious set, keeping fd order.
pub fn folding(sigma: &FdSet) -> Result<Folding> {
    sigma.require_parsimonious("folding")?;
    let mut folded = FdSet::empty(sigma.universe().clone());
    let mut trace = Vec::with_capacity(sigma.len());
    for fd in sigma.iter() {
        let target = fd.target().expect("parsimonious sets have singleton rhs");
        let step = afolding_unchecked(sigma, target);
        folded.insert(Fd::single(step.lhs.clone(), target)?)?;
        trace.push(step);
    }
    Ok(Folding { folded, trace })
}

/// Exhaustive folded-ness test: `X -> A` is folded iff it is non-trivial and
/// no `Y` that does not contain `X` has `Y -> X` derivable while `X -> Y` is not.
pub fn is_folded(sigma: &FdSet, fd: &Fd, cap: usize) -> Result<bool> {
    let n = sigma.universe().len();
    if n > cap || n > 24 {
        return Err(Error::capacity("universe size for is_folded", cap.min(24), n));
    }
    if fd.is_trivial() {
        return Ok(false);
    }
    let x = &fd.lhs;
    let x_closure = sigma.closure(x);
    for mask in 1u32..(1u32 << n) {
        let y: AttrSet = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| Attr(i as u32))
            .collect();
        if x.is_subset(&y) {
            continue;
        }
        if x.is_subset(&sigma.closure(&y)) && !y.is_subset(&x_closure) {
            return Ok(false);
        }
    }
    Ok(true)
}
