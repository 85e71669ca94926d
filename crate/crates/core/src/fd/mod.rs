//! Attributes, functional dependencies and their Armstrong-rule machinery.

mod closure;
mod oracle;
mod text;

pub use closure::CanonicalViolation;
pub use oracle::DEFAULT_ORACLE_CAP;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use indexmap::IndexSet;

use crate::error::{Error, Result};

pub const PHI: &str = "phi";
pub const UPSILON: &str = "upsilon";
pub const TID: &str = "tid";

/// Index of an attribute inside its [`Universe`]. Ordering follows the universe order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Attr(pub u32);

impl Attr {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

pub type AttrSet = BTreeSet<Attr>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttrKind {
    Phenomenon,
    Hypothesis,
    Trial,
    User,
}

impl AttrKind {
    pub fn of_name(name: &str) -> AttrKind {
        match name {
            PHI => AttrKind::Phenomenon,
            UPSILON => AttrKind::Hypothesis,
            TID => AttrKind::Trial,
            _ => AttrKind::User,
        }
    }

    pub fn is_epistemic(self) -> bool {
        self != AttrKind::User
    }
}

/// Maps the Greek spellings onto the reserved ASCII names.
pub fn normalize_name(name: &str) -> &str {
    match name {
        "φ" => PHI,
        "υ" => UPSILON,
        other => other,
    }
}

pub(crate) fn check_name(name: &str) -> Result<()> {
    let bad = name.is_empty()
        || name.chars().any(|c| c.is_whitespace() || c == ',' || c == '(' || c == ')')
        || name.contains("->")
        || name.starts_with('#');
    if bad {
        return Err(Error::InvalidName(name.to_string()));
    }
    Ok(())
}

/// The ordered attribute universe. Reserved attributes come first
/// (phi, upsilon, tid), then user attributes in declaration order.
#[derive(Debug, PartialEq, Eq)]
pub struct Universe {
    names: Vec<String>,
    kinds: Vec<AttrKind>,
    index: HashMap<String, Attr>,
}

impl Universe {
    pub fn new<I, S>(names: I) -> Result<Arc<Universe>>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen: IndexSet<String> = IndexSet::new();
        for n in names {
            let n = normalize_name(n.as_ref().trim());
            check_name(n)?;
            seen.insert(n.to_string());
        }
        let mut ordered: Vec<(AttrKind, usize, String)> = seen
            .into_iter()
            .enumerate()
            .map(|(i, n)| (AttrKind::of_name(&n), i, n))
            .collect();
        ordered.sort();
        let mut u = Universe {
            names: Vec::with_capacity(ordered.len()),
            kinds: Vec::with_capacity(ordered.len()),
            index: HashMap::new(),
        };
        for (i, (kind, _, name)) in ordered.into_iter().enumerate() {
            u.index.insert(name.clone(), Attr(i as u32));
            u.names.push(name);
            u.kinds.push(kind);
        }
        Ok(Arc::new(u))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, a: Attr) -> &str {
        &self.names[a.index()]
    }

    pub fn kind(&self, a: Attr) -> AttrKind {
        self.kinds[a.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lookup(&self, name: &str) -> Option<Attr> {
        self.index.get(normalize_name(name)).copied()
    }

    pub fn attr(&self, name: &str) -> Result<Attr> {
        self.lookup(name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    pub fn set<I, S>(&self, names: I) -> Result<AttrSet>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        names.into_iter().map(|n| self.attr(n.as_ref())).collect()
    }

    pub fn all(&self) -> AttrSet {
        (0..self.names.len() as u32).map(Attr).collect()
    }

    pub fn contains(&self, a: Attr) -> bool {
        a.index() < self.names.len()
    }

    pub fn phi(&self) -> Option<Attr> {
        self.lookup(PHI)
    }

    pub fn upsilon(&self) -> Option<Attr> {
        self.lookup(UPSILON)
    }

    pub fn names_of(&self, set: &AttrSet) -> Vec<String> {
        set.iter().map(|a| self.name(*a).to_string()).collect()
    }

    /// Space separated attribute names in universe order.
    pub fn fmt_set(&self, set: &AttrSet) -> String {
        self.names_of(set).join(" ")
    }
}

/// A functional dependency `lhs -> rhs`; both sides are non-empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fd {
    pub lhs: AttrSet,
    pub rhs: AttrSet,
}

impl Fd {
    pub fn new(lhs: AttrSet, rhs: AttrSet) -> Result<Fd> {
        if lhs.is_empty() {
            return Err(Error::EmptyAttributeSet("fd lhs".into()));
        }
        if rhs.is_empty() {
            return Err(Error::EmptyAttributeSet("fd rhs".into()));
        }
        Ok(Fd { lhs, rhs })
    }

    pub fn single(lhs: AttrSet, rhs: Attr) -> Result<Fd> {
        Fd::new(lhs, [rhs].into_iter().collect())
    }

    pub fn is_trivial(&self) -> bool {
        self.rhs.is_subset(&self.lhs)
    }

    /// The single rhs attribute, if the rhs is a singleton.
    pub fn target(&self) -> Option<Attr> {
        if self.rhs.len() == 1 {
            self.rhs.iter().next().copied()
        } else {
            None
        }
    }

    pub fn attrs(&self) -> AttrSet {
        self.lhs.union(&self.rhs).copied().collect()
    }
}

/// An ordered, duplicate-free set of fds over a shared universe.
#[derive(Clone, Debug)]
pub struct FdSet {
    universe: Arc<Universe>,
    fds: IndexSet<Fd>,
}

impl FdSet {
    pub fn empty(universe: Arc<Universe>) -> FdSet {
        FdSet {
            universe,
            fds: IndexSet::new(),
        }
    }

    pub fn from_fds<I: IntoIterator<Item = Fd>>(universe: Arc<Universe>, fds: I) -> Result<FdSet> {
        let mut set = FdSet::empty(universe);
        for fd in fds {
            set.insert(fd)?;
        }
        Ok(set)
    }

    /// Builds a set from named fds; the universe is every mentioned name
    /// in first-appearance order.
    pub fn from_named<L, R, S>(fds: &[(L, R)]) -> Result<FdSet>
    where
        L: AsRef<[S]>,
        R: AsRef<[S]>,
        S: AsRef<str>,
    {
        let names = fds.iter().flat_map(|(l, r)| {
            l.as_ref()
                .iter()
                .chain(r.as_ref().iter())
                .map(|s| s.as_ref().to_string())
        });
        let universe = Universe::new(names)?;
        let mut set = FdSet::empty(universe.clone());
        for (l, r) in fds {
            let lhs = universe.set(l.as_ref())?;
            let rhs = universe.set(r.as_ref())?;
            set.insert(Fd::new(lhs, rhs)?)?;
        }
        Ok(set)
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    /// Inserts `fd`; returns false if it was already present.
    pub fn insert(&mut self, fd: Fd) -> Result<bool> {
        if let Some(a) = fd.attrs().into_iter().find(|a| !self.universe.contains(*a)) {
            return Err(Error::UnknownAttribute(format!("#{}", a.0)));
        }
        Ok(self.fds.insert(fd))
    }

    pub(crate) fn push_unchecked(&mut self, fd: Fd) {
        self.fds.insert(fd);
    }

    pub fn len(&self) -> usize {
        self.fds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fds.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fd> + '_ {
        self.fds.iter()
    }

    pub fn get(&self, i: usize) -> Option<&Fd> {
        self.fds.get_index(i)
    }

    pub fn contains(&self, fd: &Fd) -> bool {
        self.fds.contains(fd)
    }

    /// Attributes occurring in some fd.
    pub fn mentioned(&self) -> AttrSet {
        self.fds.iter().flat_map(|fd| fd.attrs()).collect()
    }

    pub fn without(&self, i: usize) -> FdSet {
        let fds = self
            .fds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, fd)| fd.clone())
            .collect();
        FdSet {
            universe: self.universe.clone(),
            fds,
        }
    }

    pub fn filter<P: FnMut(&Fd) -> bool>(&self, mut keep: P) -> FdSet {
        FdSet {
            universe: self.universe.clone(),
            fds: self.fds.iter().filter(|fd| keep(fd)).cloned().collect(),
        }
    }

    /// `X -> Y` with names in universe order.
    pub fn fmt_fd(&self, fd: &Fd) -> String {
        format!(
            "{} -> {}",
            self.universe.fmt_set(&fd.lhs),
            self.universe.fmt_set(&fd.rhs)
        )
    }

    /// Name-level view used for set comparisons across universes.
    pub fn named(&self) -> BTreeSet<(BTreeSet<String>, BTreeSet<String>)> {
        self.fds
            .iter()
            .map(|fd| {
                (
                    self.universe.names_of(&fd.lhs).into_iter().collect(),
                    self.universe.names_of(&fd.rhs).into_iter().collect(),
                )
            })
            .collect()
    }

    /// Set equality on the named fds, independent of order and universe.
    pub fn set_eq(&self, other: &FdSet) -> bool {
        self.named() == other.named()
    }

    /// Re-expresses this set over another universe containing all mentioned names.
    pub fn reindex(&self, universe: &Arc<Universe>) -> Result<FdSet> {
        if Arc::ptr_eq(universe, &self.universe) || **universe == *self.universe {
            return Ok(FdSet {
                universe: universe.clone(),
                fds: self.fds.clone(),
            });
        }
        let map = |s: &AttrSet| -> Result<AttrSet> {
            s.iter().map(|a| universe.attr(self.universe.name(*a))).collect()
        };
        let mut out = FdSet::empty(universe.clone());
        for fd in &self.fds {
            out.push_unchecked(Fd::new(map(&fd.lhs)?, map(&fd.rhs)?)?);
        }
        Ok(out)
    }

    /// Union of two sets over the merged universe (names of `self` first).
    pub fn union_with(&self, other: &FdSet) -> Result<FdSet> {
        let names = self
            .universe
            .names()
            .iter()
            .chain(other.universe.names().iter())
            .cloned()
            .collect::<Vec<_>>();
        let universe = Universe::new(names)?;
        let mut out = self.reindex(&universe)?;
        for fd in other.reindex(&universe)?.fds {
            out.push_unchecked(fd);
        }
        Ok(out)
    }
}

impl fmt::Display for FdSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fd in &self.fds {
            writeln!(f, "{}", self.fmt_fd(fd))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_names_sort_first() {
        let u = Universe::new(["x1", "upsilon", "a", "phi"]).unwrap();
        assert_eq!(u.names(), &["phi", "upsilon", "x1", "a"]);
        assert_eq!(u.kind(Attr(0)), AttrKind::Phenomenon);
        assert_eq!(u.kind(Attr(2)), AttrKind::User);
    }

    #[test]
    fn greek_aliases_resolve() {
        let u = Universe::new(["φ", "υ", "x"]).unwrap();
        assert_eq!(u.attr("phi").unwrap(), u.attr("φ").unwrap());
        assert_eq!(u.attr("upsilon").unwrap(), Attr(1));
    }

    #[test]
    fn rejects_bad_names() {
        assert!(Universe::new(["a b"]).is_err());
        assert!(Universe::new([""]).is_err());
        assert!(Universe::new(["#x"]).is_err());
    }

    #[test]
    fn empty_sides_rejected() {
        assert!(Fd::new(AttrSet::new(), [Attr(0)].into()).is_err());
        assert!(Fd::new([Attr(0)].into(), AttrSet::new()).is_err());
    }

    #[test]
    fn duplicates_collapse() {
        let s = FdSet::from_named(&[(["A"], ["B"]), (["A"], ["B"])]).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn union_with_merges_universes() {
        let a = FdSet::from_named(&[(["A"], ["B"])]).unwrap();
        let b = FdSet::from_named(&[(["C"], ["A"])]).unwrap();
        let u = a.union_with(&b).unwrap();
        assert_eq!(u.len(), 2);
        assert_eq!(u.universe().names(), &["A", "B", "C"]);
    }
}
