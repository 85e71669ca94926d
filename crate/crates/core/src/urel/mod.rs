//! U-relations: relations whose rows carry conditions over discrete random
//! variables, a world table of marginals, repair-key, the positive algebra
//! rewritten over conditions, and possible-world enumeration.

mod csvio;
mod ops;
mod query;
mod value;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use indexmap::IndexMap;

use crate::error::{Error, Result};

pub use csvio::{read_certain, read_urelation, read_world, write_certain, write_table, write_urelation, write_world};
pub use ops::{conf, enumerate_worlds, repair_key, u_join, u_project, u_select, World, DEFAULT_WORLD_CAP};
pub use query::{CmpOp, Predicate, Query};
pub use value::Value;

/// Tolerance on probability sums.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// Random variable id, printed `x{n}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

impl std::str::FromStr for VarId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.strip_prefix('x')
            .and_then(|n| n.parse().ok())
            .map(VarId)
            .ok_or_else(|| Error::Domain(format!("bad variable id {s:?}")))
    }
}

/// A total or partial assignment of value ids (1-based) to variables.
pub type Assignment = BTreeMap<VarId, u32>;

/// Condition of a row: variable/value pairs sorted by variable, each
/// variable at most once.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cond(Vec<(VarId, u32)>);

impl Cond {
    pub fn new(pairs: impl IntoIterator<Item = (VarId, u32)>) -> Result<Self> {
        let mut v: Vec<(VarId, u32)> = pairs.into_iter().collect();
        v.sort();
        v.dedup();
        if v.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Domain(format!("inconsistent condition {}", Cond(v))));
        }
        Ok(Cond(v))
    }

    pub fn single(var: VarId, value: u32) -> Self {
        Cond(vec![(var, value)])
    }

    pub fn pairs(&self) -> &[(VarId, u32)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.iter().map(|(v, _)| *v)
    }

    /// Conjunction, or `None` if some variable is mapped to two values.
    pub fn merge(&self, other: &Cond) -> Option<Cond> {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, b) = (self.0[i], other.0[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => {
                    out.push(a);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    if a.1 != b.1 {
                        return None;
                    }
                    out.push(a);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Some(Cond(out))
    }

    pub fn holds_in(&self, world: &Assignment) -> bool {
        self.0.iter().all(|(v, d)| world.get(v) == Some(d))
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(v, d)| format!("{v}->{d}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Marginal distributions of the random variables. Value ids are 1-based.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WorldTable {
    vars: BTreeMap<VarId, Vec<f64>>,
    next: u32,
}

impl WorldTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Allocates the next variable id with the given marginals.
    pub fn fresh(&mut self, probs: Vec<f64>) -> Result<VarId> {
        let var = VarId(self.next);
        self.insert(var, probs)?;
        Ok(var)
    }

    pub fn insert(&mut self, var: VarId, probs: Vec<f64>) -> Result<()> {
        if self.vars.contains_key(&var) {
            return Err(Error::Integrity(format!("variable {var} defined twice")));
        }
        if probs.is_empty() {
            return Err(Error::Domain(format!("variable {var} has an empty domain")));
        }
        if let Some(p) = probs.iter().find(|p| p.is_nan() || **p <= 0.0) {
            return Err(Error::Domain(format!("variable {var} has non-positive probability {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::Domain(format!("marginals of {var} sum to {sum}")));
        }
        self.vars.insert(var, probs);
        self.next = self.next.max(var.0 + 1);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars.keys().copied()
    }

    pub fn marginals(&self, var: VarId) -> Option<&[f64]> {
        self.vars.get(&var).map(Vec::as_slice)
    }

    pub fn prob(&self, var: VarId, value: u32) -> Option<f64> {
        let m = self.vars.get(&var)?;
        m.get(usize::try_from(value).ok()?.checked_sub(1)?).copied()
    }

    /// Probability of a (partial) assignment, variables being independent.
    pub fn prob_of(&self, world: &Assignment) -> Result<f64> {
        world.iter().try_fold(1.0, |acc, (v, d)| {
            self.prob(*v, *d)
                .map(|p| acc * p)
                .ok_or_else(|| Error::Integrity(format!("{v}->{d} is not in the world table")))
        })
    }

    /// Number of total assignments over `vars`, saturating.
    pub fn world_count<'a>(&self, vars: impl IntoIterator<Item = &'a VarId>) -> usize {
        vars.into_iter()
            .map(|v| self.vars.get(v).map_or(1, Vec::len))
            .fold(1usize, usize::saturating_mul)
    }

    pub fn check_cond(&self, cond: &Cond) -> Result<()> {
        for (v, d) in cond.pairs() {
            if self.prob(*v, *d).is_none() {
                return Err(Error::Integrity(format!("condition {v}->{d} is not in the world table")));
            }
        }
        Ok(())
    }
}

/// A row of a U-relation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct URow {
    pub cond: Cond,
    pub values: Vec<Value>,
}

/// Relation with condition columns. With no conditions it is classical.
#[derive(Clone, Debug, PartialEq)]
pub struct URelation {
    pub name: String,
    pub cols: Vec<String>,
    pub rows: Vec<URow>,
}

impl URelation {
    pub fn new(name: impl Into<String>, cols: Vec<String>) -> Result<Self> {
        check_cols(&cols)?;
        Ok(URelation {
            name: name.into(),
            cols,
            rows: Vec::new(),
        })
    }

    /// A relation whose rows hold unconditionally.
    pub fn certain(name: impl Into<String>, cols: Vec<String>, rows: Vec<Vec<Value>>) -> Result<Self> {
        let mut r = URelation::new(name, cols)?;
        for values in rows {
            r.push(Cond::default(), values)?;
        }
        Ok(r)
    }

    pub fn push(&mut self, cond: Cond, values: Vec<Value>) -> Result<()> {
        if values.len() != self.cols.len() {
            return Err(Error::Domain(format!(
                "row of width {} in {} with {} columns",
                values.len(),
                self.name,
                self.cols.len()
            )));
        }
        self.rows.push(URow { cond, values });
        Ok(())
    }

    pub fn col(&self, name: &str) -> Result<usize> {
        self.cols
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownAttribute(format!("{name} in {}", self.name)))
    }

    /// Widest condition over all rows.
    pub fn cond_width(&self) -> usize {
        self.rows.iter().map(|r| r.cond.len()).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        self.rows.iter().flat_map(|r| r.cond.vars()).collect()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// The classical relation this one denotes in `world`.
    pub fn decode(&self, world: &Assignment) -> Table {
        Table {
            cols: self.cols.clone(),
            rows: self
                .rows
                .iter()
                .filter(|r| r.cond.holds_in(world))
                .map(|r| r.values.clone())
                .collect(),
        }
    }
}

impl fmt::Display for URelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} [{}]", self.name, self.cols.join(" "))?;
        for r in &self.rows {
            let vals: Vec<&str> = r.values.iter().map(Value::as_str).collect();
            writeln!(f, "  {} | {}", r.cond, vals.join(" "))?;
        }
        Ok(())
    }
}

/// Classical relation under set semantics, used for decoded worlds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub cols: Vec<String>,
    pub rows: BTreeSet<Vec<Value>>,
}

impl Table {
    pub fn col(&self, name: &str) -> Result<usize> {
        self.cols
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    /// Same relation with columns permuted into `order`.
    pub fn reorder(&self, order: &[String]) -> Result<Table> {
        let idx: Vec<usize> = order.iter().map(|c| self.col(c)).collect::<Result<_>>()?;
        Ok(Table {
            cols: order.to_vec(),
            rows: self.rows.iter().map(|r| idx.iter().map(|i| r[*i].clone()).collect()).collect(),
        })
    }
}

/// Classical relation with a key that must hold exactly (trial data keyed
/// with `tid`).
#[derive(Clone, Debug, PartialEq)]
pub struct CertainRelation {
    pub name: String,
    pub cols: Vec<String>,
    pub key: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl CertainRelation {
    pub fn new(name: impl Into<String>, cols: Vec<String>, key: Vec<String>, rows: Vec<Vec<Value>>) -> Result<Self> {
        let name = name.into();
        check_cols(&cols)?;
        let key_idx: Vec<usize> = key
            .iter()
            .map(|k| {
                cols.iter()
                    .position(|c| c == k)
                    .ok_or_else(|| Error::UnknownAttribute(format!("key column {k} in {name}")))
            })
            .collect::<Result<_>>()?;
        let mut seen = HashSet::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols.len() {
                return Err(Error::Domain(format!(
                    "{name}: row {} has {} cells, expected {}",
                    i + 1,
                    row.len(),
                    cols.len()
                )));
            }
            let k: Vec<&Value> = key_idx.iter().map(|j| &row[*j]).collect();
            if !seen.insert(k.clone()) {
                let shown: Vec<String> = key.iter().zip(&k).map(|(c, v)| format!("{c}={v}")).collect();
                return Err(Error::Integrity(format!("{name}: duplicate key {}", shown.join(", "))));
            }
        }
        Ok(CertainRelation { name, cols, key, rows })
    }

    pub fn col(&self, name: &str) -> Result<usize> {
        self.cols
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownAttribute(format!("{name} in {}", self.name)))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_urelation(&self) -> URelation {
        URelation {
            name: self.name.clone(),
            cols: self.cols.clone(),
            rows: self
                .rows
                .iter()
                .map(|v| URow {
                    cond: Cond::default(),
                    values: v.clone(),
                })
                .collect(),
        }
    }
}

fn check_cols(cols: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for c in cols {
        if c.is_empty() {
            return Err(Error::InvalidName(c.clone()));
        }
        if !seen.insert(c) {
            return Err(Error::Domain(format!("duplicate column {c}")));
        }
    }
    Ok(())
}

/// U-relations sharing one world table.
#[derive(Clone, Debug, Default)]
pub struct UDatabase {
    pub relations: IndexMap<String, URelation>,
    pub world: WorldTable,
}

impl UDatabase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, rel: URelation) -> Result<()> {
        for r in &rel.rows {
            self.world.check_cond(&r.cond)?;
        }
        if self.relations.contains_key(&rel.name) {
            return Err(Error::Integrity(format!("relation {} defined twice", rel.name)));
        }
        self.relations.insert(rel.name.clone(), rel);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&URelation> {
        self.relations
            .get(name)
            .ok_or_else(|| Error::Domain(format!("no relation named {name}")))
    }

    /// Every relation decoded in `world`.
    pub fn decode(&self, world: &Assignment) -> BTreeMap<String, Table> {
        self.relations.iter().map(|(n, r)| (n.clone(), r.decode(world))).collect()
    }
}
