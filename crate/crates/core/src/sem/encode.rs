use std::fmt;

use super::{coa_t, CausalMapping, Structure};
use crate::error::{Error, Result};
use crate::fd::{Fd, FdSet, Universe, PHI, UPSILON};

/// Role of an attribute with respect to an encoded hypothesis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttrClass {
    Exogenous,
    Endogenous,
    Domain,
    Epistemic,
}

impl fmt::Display for AttrClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AttrClass::Exogenous => "exogenous",
            AttrClass::Endogenous => "endogenous",
            AttrClass::Domain => "domain",
            AttrClass::Epistemic => "epistemic",
        };
        f.write_str(s)
    }
}

/// Encodes a causal mapping as fds. An equation whose only non-domain
/// variable is its target yields `phi -> x`; any other yields
/// `(vars \ x) upsilon -> x`. Domain variables receive no fd.
pub fn h_encode(s: &Structure, mapping: &CausalMapping) -> Result<FdSet> {
    let mut named: Vec<(Vec<&str>, &str)> = Vec::new();
    for (e, x) in mapping.pairs() {
        if s.is_domain(x) {
            continue;
        }
        let eq = &s.equations()[e];
        if !eq.vars.contains(&x) {
            return Err(Error::Precondition(format!(
                "mapping pairs {} with {} which it does not mention",
                eq.id,
                s.variables()[x]
            )));
        }
        let exogenous = eq.vars.iter().all(|v| *v == x || s.is_domain(*v));
        let lhs: Vec<&str> = if exogenous {
            vec![PHI]
        } else {
            eq.vars
                .iter()
                .filter(|v| **v != x)
                .map(|v| s.variables()[*v].as_str())
                .chain(std::iter::once(UPSILON))
                .collect()
        };
        named.push((lhs, s.variables()[x].as_str()));
    }
    let mentioned = |n: &str| named.iter().any(|(l, r)| *r == n || l.contains(&n));
    let names: Vec<&str> = [PHI, UPSILON]
        .into_iter()
        .chain(s.variables().iter().map(String::as_str))
        .filter(|n| mentioned(n))
        .collect();
    let universe = Universe::new(names)?;
    let mut out = FdSet::empty(universe.clone());
    for (lhs, rhs) in named {
        out.insert(Fd::single(universe.set(lhs)?, universe.attr(rhs)?)?)?;
    }
    Ok(out)
}

/// Causal ordering, fd encoding and left reduction in one step.
pub fn encode(s: &Structure) -> Result<FdSet> {
    let mapping = coa_t(s)?;
    Ok(h_encode(s, &mapping)?.left_reduce())
}

/// Classifies an attribute by the fds that determine it.
pub fn classify(name: &str, sigma: &FdSet) -> Result<AttrClass> {
    let u = sigma.universe();
    let a = u
        .lookup(name)
        .ok_or_else(|| Error::Domain(format!("attribute {name} is not in the fd universe")))?;
    if u.kind(a).is_epistemic() {
        return Ok(AttrClass::Epistemic);
    }
    let upsilon = u.upsilon();
    let mut class = AttrClass::Domain;
    for fd in sigma.iter().filter(|fd| fd.rhs.contains(&a)) {
        let is_upsilon_fd = upsilon.is_some_and(|v| fd.lhs.contains(&v));
        class = if is_upsilon_fd {
            AttrClass::Endogenous
        } else {
            AttrClass::Exogenous
        };
    }
    Ok(class)
}

/// Classification of every attribute in the universe, in universe order.
pub fn classification(sigma: &FdSet) -> Vec<(String, AttrClass)> {
    sigma
        .universe()
        .names()
        .iter()
        .map(|n| (n.clone(), classify(n, sigma).expect("name comes from the universe")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s1() -> Structure {
        Structure::new(
            &["t", "x0", "r", "x"],
            &[
                ("f1", vec!["t"]),
                ("f2", vec!["x0"]),
                ("f3", vec!["r"]),
                ("f4", vec!["x", "t", "x0", "r"]),
            ],
            1,
        )
        .unwrap()
    }

    #[test]
    fn malthus_encoding() {
        let sigma = encode(&s1()).unwrap();
        let expected = FdSet::parse("phi -> x0\nphi -> r\nx0 r t upsilon -> x\n").unwrap();
        assert!(sigma.set_eq(&expected), "{sigma}");
        assert_eq!(classify("t", &sigma).unwrap(), AttrClass::Domain);
        assert_eq!(classify("x0", &sigma).unwrap(), AttrClass::Exogenous);
        assert_eq!(classify("x", &sigma).unwrap(), AttrClass::Endogenous);
        assert_eq!(classify("phi", &sigma).unwrap(), AttrClass::Epistemic);
        assert!(matches!(classify("nope", &sigma), Err(Error::Domain(_))));
    }

    #[test]
    fn exogenous_with_domain_variable() {
        let s = Structure::new(&["t", "a"], &[("f1", vec!["t"]), ("f2", vec!["a", "t"])], 1).unwrap();
        let sigma = encode(&s).unwrap();
        assert!(sigma.set_eq(&FdSet::parse("phi -> a").unwrap()));
    }
}
