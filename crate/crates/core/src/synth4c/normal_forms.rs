use itertools::Itertools;

use super::{RelScheme, Schema};
use crate::error::{Error, Result};
use crate::fd::{Attr, AttrSet, Fd, FdSet};

/// A scheme and an fd that breaks a normal form in it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub scheme: String,
    pub fd: Fd,
}

impl Witness {
    pub fn describe(&self, sigma: &FdSet) -> String {
        format!("{}: {}", self.scheme, sigma.fmt_fd(&self.fd))
    }
}

pub(crate) fn align(schema: &Schema, sigma: &FdSet) -> Result<FdSet> {
    sigma.reindex(schema.universe())
}

fn is_superkey(sigma: &FdSet, x: &AttrSet, scheme: &RelScheme) -> bool {
    scheme.attrs.is_subset(&sigma.closure(x))
}

fn check_cap(scheme: &RelScheme, cap: usize) -> Result<()> {
    if scheme.attrs.len() > cap {
        return Err(Error::capacity(
            format!("attributes of scheme {}", scheme.name),
            cap,
            scheme.attrs.len(),
        ));
    }
    Ok(())
}

/// Non-empty subsets of `attrs` in size-then-lexicographic order.
fn subsets(attrs: &AttrSet) -> impl Iterator<Item = AttrSet> + '_ {
    let v: Vec<Attr> = attrs.iter().copied().collect();
    (1..=v.len()).flat_map(move |k| {
        v.clone()
            .into_iter()
            .combinations(k)
            .map(|c| c.into_iter().collect::<AttrSet>())
    })
}

/// BCNF check. For a canonical `sigma` only its own fds lying inside a
/// scheme are inspected; otherwise all projected fds are enumerated.
pub fn bcnf_violation(schema: &Schema, sigma: &FdSet, cap: usize) -> Result<Option<Witness>> {
    let sigma = align(schema, sigma)?;
    if !sigma.is_canonical() {
        return bcnf_violation_exhaustive(schema, &sigma, cap);
    }
    for scheme in &schema.schemes {
        for fd in sigma.iter() {
            if fd.attrs().is_subset(&scheme.attrs)
                && !fd.is_trivial()
                && !is_superkey(&sigma, &fd.lhs, scheme)
            {
                return Ok(Some(Witness {
                    scheme: scheme.name.clone(),
                    fd: fd.clone(),
                }));
            }
        }
    }
    Ok(None)
}

pub fn is_bcnf(schema: &Schema, sigma: &FdSet, cap: usize) -> Result<bool> {
    Ok(bcnf_violation(schema, sigma, cap)?.is_none())
}

/// BCNF check over every fd of the closure projected onto each scheme.
pub fn bcnf_violation_exhaustive(schema: &Schema, sigma: &FdSet, cap: usize) -> Result<Option<Witness>> {
    let sigma = align(schema, sigma)?;
    for scheme in &schema.schemes {
        check_cap(scheme, cap)?;
        for x in subsets(&scheme.attrs) {
            let closure = sigma.closure(&x);
            let gained: AttrSet = closure
                .intersection(&scheme.attrs)
                .filter(|a| !x.contains(a))
                .copied()
                .collect();
            if !gained.is_empty() && !scheme.attrs.is_subset(&closure) {
                return Ok(Some(Witness {
                    scheme: scheme.name.clone(),
                    fd: Fd::new(x, gained)?,
                }));
            }
        }
    }
    Ok(None)
}

/// Minimal subsets of `scheme` whose closure covers it.
pub fn candidate_keys(scheme: &RelScheme, sigma: &FdSet, cap: usize) -> Result<Vec<AttrSet>> {
    check_cap(scheme, cap)?;
    let mut keys: Vec<AttrSet> = Vec::new();
    for k in subsets(&scheme.attrs) {
        if keys.iter().any(|found| found.is_subset(&k)) {
            continue;
        }
        if is_superkey(sigma, &k, scheme) {
            keys.push(k);
        }
    }
    Ok(keys)
}

/// 3NF check: every projected `X -> A` has `X` a superkey or `A` prime.
pub fn third_nf_violation(schema: &Schema, sigma: &FdSet, cap: usize) -> Result<Option<Witness>> {
    let sigma = align(schema, sigma)?;
    for scheme in &schema.schemes {
        let prime: AttrSet = candidate_keys(scheme, &sigma, cap)?.into_iter().flatten().collect();
        let bad = |x: &AttrSet, a: &Attr| {
            !x.contains(a) && !prime.contains(a) && !is_superkey(&sigma, x, scheme)
        };
        for fd in sigma.decompose().iter() {
            if fd.attrs().is_subset(&scheme.attrs) && fd.rhs.iter().any(|a| bad(&fd.lhs, a)) {
                return Ok(Some(Witness {
                    scheme: scheme.name.clone(),
                    fd: fd.clone(),
                }));
            }
        }
        for x in subsets(&scheme.attrs) {
            let closure = sigma.closure(&x);
            if let Some(a) = closure.intersection(&scheme.attrs).find(|a| bad(&x, a)) {
                return Ok(Some(Witness {
                    scheme: scheme.name.clone(),
                    fd: Fd::single(x.clone(), *a)?,
                }));
            }
        }
    }
    Ok(None)
}

pub fn is_3nf(schema: &Schema, sigma: &FdSet, cap: usize) -> Result<bool> {
    Ok(third_nf_violation(schema, sigma, cap)?.is_none())
}

/// Dependency preservation by restricted closure: grow `X` through
/// `(Z ∩ S)+ ∩ S` over every scheme `S` until it stabilizes.
pub fn preserves(schema: &Schema, sigma: &FdSet) -> Result<bool> {
    let sigma = align(schema, sigma)?;
    for fd in sigma.iter() {
        let mut z = fd.lhs.clone();
        loop {
            let before = z.len();
            for scheme in &schema.schemes {
                let inside: AttrSet = z.intersection(&scheme.attrs).copied().collect();
                if inside.is_empty() {
                    continue;
                }
                let reach = sigma.closure(&inside);
                z.extend(reach.intersection(&scheme.attrs).copied());
            }
            if z.len() == before {
                break;
            }
        }
        if !fd.rhs.is_subset(&z) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Dependency preservation by explicitly projecting the closure onto each
/// scheme. Exponential in scheme width.
pub fn preserves_by_projection(schema: &Schema, sigma: &FdSet, cap: usize) -> Result<bool> {
    let sigma = align(schema, sigma)?;
    let mut projected = FdSet::empty(sigma.universe().clone());
    for scheme in &schema.schemes {
        check_cap(scheme, cap)?;
        for x in subsets(&scheme.attrs) {
            let gained: AttrSet = sigma
                .closure(&x)
                .intersection(&scheme.attrs)
                .filter(|a| !x.contains(a))
                .copied()
                .collect();
            if !gained.is_empty() {
                projected.insert(Fd::new(x, gained)?)?;
            }
        }
    }
    let all = sigma.iter().all(|fd| projected.member(fd));
    Ok(all)
}
