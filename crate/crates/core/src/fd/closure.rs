use super::{Attr, AttrSet, Fd, FdSet};
use crate::error::{Error, Result};

/// First clause of canonicality broken by an fd, with the offending fd.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CanonicalViolation {
    NotSingletonRhs(Fd),
    Redundant(Fd),
    NotLeftReduced { fd: Fd, extraneous: Attr },
}

fn to_set(mark: &[bool]) -> AttrSet {
    mark.iter()
        .enumerate()
        .filter(|(_, m)| **m)
        .map(|(i, _)| Attr(i as u32))
        .collect()
}

/// Fixpoint closure over an explicit list of fds: repeated passes, each fd
/// fires at most once.
pub(crate) fn closure_over<'a, I>(n: usize, fds: I, x: &AttrSet) -> AttrSet
where
    I: IntoIterator<Item = &'a Fd>,
{
    let mut mark = vec![false; n];
    for a in x {
        mark[a.index()] = true;
    }
    let mut pending: Vec<&Fd> = fds.into_iter().collect();
    loop {
        let before = pending.len();
        pending.retain(|fd| {
            if fd.lhs.iter().all(|a| mark[a.index()]) {
                for b in &fd.rhs {
                    mark[b.index()] = true;
                }
                false
            } else {
                true
            }
        });
        if pending.len() == before {
            break;
        }
    }
    to_set(&mark)
}

impl FdSet {
    /// Attribute closure `X+`.
    pub fn closure(&self, x: &AttrSet) -> AttrSet {
        closure_over(self.universe.len(), self.fds.iter(), x)
    }

    /// Closure with unknown-attribute and empty-input checks.
    pub fn xclosure(&self, x: &AttrSet) -> Result<AttrSet> {
        if x.is_empty() {
            return Err(Error::EmptyAttributeSet("closure input".into()));
        }
        if let Some(a) = x.iter().find(|a| !self.universe.contains(**a)) {
            return Err(Error::UnknownAttribute(format!("#{}", a.0)));
        }
        Ok(self.closure(x))
    }

    /// Counter-based linear-time closure; agrees with [`FdSet::closure`].
    pub fn closure_linear(&self, x: &AttrSet) -> AttrSet {
        let n = self.universe.len();
        let fds: Vec<&Fd> = self.fds.iter().collect();
        let mut missing: Vec<usize> = fds.iter().map(|fd| fd.lhs.len()).collect();
        let mut waiting: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, fd) in fds.iter().enumerate() {
            for a in &fd.lhs {
                waiting[a.index()].push(i);
            }
        }
        let mut mark = vec![false; n];
        let mut queue: Vec<Attr> = Vec::new();
        for a in x {
            if !mark[a.index()] {
                mark[a.index()] = true;
                queue.push(*a);
            }
        }
        while let Some(a) = queue.pop() {
            for &i in &waiting[a.index()] {
                missing[i] -= 1;
                if missing[i] == 0 {
                    for b in &fds[i].rhs {
                        if !mark[b.index()] {
                            mark[b.index()] = true;
                            queue.push(*b);
                        }
                    }
                }
            }
        }
        to_set(&mark)
    }

    /// Whether `fd` is in the closure of this set.
    pub fn member(&self, fd: &Fd) -> bool {
        fd.rhs.is_subset(&self.closure(&fd.lhs))
    }

    pub fn implies(&self, x: &AttrSet, y: &AttrSet) -> bool {
        y.is_subset(&self.closure(x))
    }

    /// Mutual derivability `X <-> Y`.
    pub fn equivalent_sets(&self, x: &AttrSet, y: &AttrSet) -> bool {
        self.implies(x, y) && self.implies(y, x)
    }

    /// Both sets derive each other's fds.
    pub fn covers(&self, other: &FdSet) -> bool {
        other.iter().all(|fd| self.member(fd))
    }

    pub fn equivalent(&self, other: &FdSet) -> bool {
        self.covers(other) && other.covers(self)
    }

    /// Removes extraneous lhs attributes, scanning fds in order and each lhs
    /// in attribute order against the current set.
    pub fn left_reduce(&self) -> FdSet {
        let mut current: Vec<Fd> = self.fds.iter().cloned().collect();
        for i in 0..current.len() {
            let attrs: Vec<Attr> = current[i].lhs.iter().copied().collect();
            for a in attrs {
                let fd = &current[i];
                if fd.lhs.len() < 2 || !fd.lhs.contains(&a) {
                    continue;
                }
                let mut reduced = fd.lhs.clone();
                reduced.remove(&a);
                let closure = closure_over(self.universe.len(), current.iter(), &reduced);
                if fd.rhs.is_subset(&closure) {
                    current[i].lhs = reduced;
                }
            }
        }
        let mut out = FdSet::empty(self.universe.clone());
        for fd in current {
            out.push_unchecked(fd);
        }
        out
    }

    /// Splits every fd into singleton-rhs fds.
    pub fn decompose(&self) -> FdSet {
        let mut out = FdSet::empty(self.universe.clone());
        for fd in &self.fds {
            for b in &fd.rhs {
                out.push_unchecked(Fd {
                    lhs: fd.lhs.clone(),
                    rhs: [*b].into_iter().collect(),
                });
            }
        }
        out
    }

    /// Groups fds by lhs (first-appearance order) and unions their rhs.
    pub fn union_rule(&self) -> FdSet {
        let mut groups: indexmap::IndexMap<AttrSet, AttrSet> = indexmap::IndexMap::new();
        for fd in &self.fds {
            groups
                .entry(fd.lhs.clone())
                .or_default()
                .extend(fd.rhs.iter().copied());
        }
        let mut out = FdSet::empty(self.universe.clone());
        for (lhs, rhs) in groups {
            out.push_unchecked(Fd { lhs, rhs });
        }
        out
    }

    pub fn canonical_violation(&self) -> Option<CanonicalViolation> {
        if let Some(fd) = self.fds.iter().find(|fd| fd.rhs.len() != 1) {
            return Some(CanonicalViolation::NotSingletonRhs(fd.clone()));
        }
        for (i, fd) in self.fds.iter().enumerate() {
            let rest = self.fds.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, f)| f);
            if fd.rhs.is_subset(&closure_over(self.universe.len(), rest, &fd.lhs)) {
                return Some(CanonicalViolation::Redundant(fd.clone()));
            }
        }
        for fd in &self.fds {
            for a in &fd.lhs {
                let mut reduced = fd.lhs.clone();
                reduced.remove(a);
                if fd.rhs.is_subset(&self.closure(&reduced)) {
                    return Some(CanonicalViolation::NotLeftReduced {
                        fd: fd.clone(),
                        extraneous: *a,
                    });
                }
            }
        }
        None
    }

    /// Singleton rhs, non-redundant and left-reduced.
    pub fn is_canonical(&self) -> bool {
        self.canonical_violation().is_none()
    }

    /// Canonical and every attribute is the rhs of at most one fd.
    pub fn is_parsimonious(&self) -> bool {
        self.has_unique_targets() && self.is_canonical()
    }

    pub(crate) fn has_unique_targets(&self) -> bool {
        let mut seen = AttrSet::new();
        self.fds
            .iter()
            .flat_map(|fd| fd.rhs.iter())
            .all(|b| seen.insert(*b))
    }

    pub fn require_parsimonious(&self, what: &str) -> Result<()> {
        if !self.has_unique_targets() {
            return Err(Error::Precondition(format!(
                "{what}: some attribute is the rhs of more than one fd"
            )));
        }
        if let Some(v) = self.canonical_violation() {
            let detail = match v {
                CanonicalViolation::NotSingletonRhs(fd) => format!("non-singleton rhs in {}", self.fmt_fd(&fd)),
                CanonicalViolation::Redundant(fd) => format!("redundant fd {}", self.fmt_fd(&fd)),
                CanonicalViolation::NotLeftReduced { fd, extraneous } => format!(
                    "{} has extraneous attribute {}",
                    self.fmt_fd(&fd),
                    self.universe.name(extraneous)
                ),
            };
            return Err(Error::Precondition(format!("{what}: input is not canonical: {detail}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(s: &FdSet, names: &[&str]) -> AttrSet {
        s.universe().set(names).unwrap()
    }

    #[test]
    fn closure_of_chain() {
        let s = FdSet::parse("A -> B\nB -> C\n").unwrap();
        assert_eq!(s.closure(&set(&s, &["A"])), set(&s, &["A", "B", "C"]));
        assert_eq!(s.closure(&set(&s, &["C"])), set(&s, &["C"]));
        assert_eq!(s.closure_linear(&set(&s, &["A"])), set(&s, &["A", "B", "C"]));
    }

    #[test]
    fn xclosure_rejects_empty_input() {
        let s = FdSet::parse("A -> B").unwrap();
        assert!(s.xclosure(&AttrSet::new()).is_err());
        assert!(s.xclosure(&[Attr(9)].into()).is_err());
    }

    #[test]
    fn member_and_non_member() {
        let s = FdSet::parse("A -> B\nB -> C\n").unwrap();
        let u = s.universe();
        assert!(s.member(&Fd::new(u.set(["A"]).unwrap(), u.set(["C"]).unwrap()).unwrap()));
        assert!(!s.member(&Fd::new(u.set(["C"]).unwrap(), u.set(["A"]).unwrap()).unwrap()));
    }

    #[test]
    fn left_reduce_drops_extraneous() {
        let s = FdSet::parse("A -> B\nA B -> C\n").unwrap();
        let r = s.left_reduce();
        assert!(r.set_eq(&FdSet::parse("A -> B\nA -> C\n").unwrap()));
        assert!(r.is_canonical());
    }

    #[test]
    fn canonical_checks() {
        assert!(!FdSet::parse("A -> B\nA B -> B\n").unwrap().is_canonical());
        assert!(matches!(
            FdSet::parse("A -> B C").unwrap().canonical_violation(),
            Some(CanonicalViolation::NotSingletonRhs(_))
        ));
        assert!(matches!(
            FdSet::parse("A -> B\nB -> C\nA -> C").unwrap().canonical_violation(),
            Some(CanonicalViolation::Redundant(_))
        ));
        assert!(FdSet::parse("A -> B\nB -> A\n").unwrap().is_parsimonious());
    }

    #[test]
    fn parsimony_requires_unique_targets() {
        let s = FdSet::parse("A -> C\nB -> C\n").unwrap();
        assert!(s.is_canonical());
        assert!(!s.is_parsimonious());
        assert!(s.require_parsimonious("test").is_err());
    }

    #[test]
    fn union_and_decompose_are_inverse() {
        let s = FdSet::parse("A -> B\nC -> D\nA -> E\n").unwrap();
        let u = s.union_rule();
        assert_eq!(u.len(), 2);
        assert!(u.decompose().set_eq(&s));
        assert!(u.equivalent(&s));
    }
}
