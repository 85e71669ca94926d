//! Uncertainty introduction over trial data: the explanation relation,
//! u-factor learning on exogenous relations, u-factorization and
//! u-propagation into endogenous relations.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::fd::{Fd, FdSet, PHI, TID, UPSILON};
use crate::folding::folding;
use crate::synth4c::synthesize;
use crate::urel::{
    repair_key, u_join, u_project, u_select, CertainRelation, Predicate, URelation, Value, WorldTable,
};

/// Weight column of the explanation relation.
pub const CONF: &str = "Conf";

#[derive(Clone, Copy, Debug, Default)]
pub struct U4Options {
    /// Treat numeric values within this distance as equal when learning
    /// u-factors. Off by default.
    pub epsilon: Option<f64>,
}

/// `Y0 := project[phi, upsilon](repair-key[phi @ Conf](H0))`.
pub fn build_explanation(h0: &CertainRelation, world: &mut WorldTable) -> Result<URelation> {
    for c in [PHI, UPSILON, CONF] {
        h0.col(c)?;
    }
    let repaired = repair_key(h0, &[PHI.to_string()], CONF, world, "Y0")?;
    u_project(&repaired, &[PHI.to_string(), UPSILON.to_string()])
}

/// Relations keyed without `upsilon` hold exogenous trial inputs.
pub fn is_exogenous(rel: &CertainRelation) -> bool {
    !rel.key.iter().any(|k| k == UPSILON)
}

/// Key without `tid`.
pub fn grouping_key(rel: &CertainRelation) -> Vec<String> {
    rel.key.iter().filter(|k| *k != TID).cloned().collect()
}

/// Non-key columns.
pub fn payload(rel: &CertainRelation) -> Vec<String> {
    rel.cols.iter().filter(|c| !rel.key.contains(c)).cloned().collect()
}

/// Learned u-factor groups of one exogenous relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UFactorGroups {
    pub relation: String,
    pub key: Vec<String>,
    /// Each group lists its pivot first.
    pub groups: Vec<Vec<String>>,
}

impl UFactorGroups {
    pub fn pivots(&self) -> impl Iterator<Item = &str> + '_ {
        self.groups.iter().map(|g| g[0].as_str())
    }

    /// `pivot -> b` for every other member `b` of a group.
    pub fn pivot_fds(&self) -> Vec<(String, String)> {
        self.groups
            .iter()
            .flat_map(|g| g[1..].iter().map(move |b| (g[0].clone(), b.clone())))
            .collect()
    }
}

fn same(a: &Value, b: &Value, eps: Option<f64>) -> bool {
    match (eps, a.as_f64(), b.as_f64()) {
        (Some(e), Some(x), Some(y)) => (x - y).abs() <= e,
        _ => a == b,
    }
}

/// Whether `key a -> b` holds in `h`.
fn determines(h: &CertainRelation, key: &[usize], a: usize, b: usize, eps: Option<f64>) -> bool {
    if eps.is_none() {
        let mut seen: HashMap<(Vec<&Value>, &Value), &Value> = HashMap::new();
        return h.rows.iter().all(|r| {
            let k = (key.iter().map(|i| &r[*i]).collect(), &r[a]);
            *seen.entry(k).or_insert(&r[b]) == &r[b]
        });
    }
    h.rows.iter().enumerate().all(|(i, r)| {
        h.rows[i + 1..].iter().all(|s| {
            let agree = key.iter().all(|k| r[*k] == s[*k]) && same(&r[a], &s[a], eps);
            !agree || same(&r[b], &s[b], eps)
        })
    })
}

/// Groups non-key columns of `h` that determine each other in the instance
/// (relative to the key without `tid`), closed transitively. Groups and
/// members follow column order; the first member is the pivot.
pub fn learn_u_factors(h: &CertainRelation, opts: U4Options) -> Result<UFactorGroups> {
    if h.is_empty() {
        return Err(Error::Precondition(format!("{} has no rows to learn u-factors from", h.name)));
    }
    let key = grouping_key(h);
    let key_idx: Vec<usize> = key.iter().map(|k| h.col(k)).collect::<Result<_>>()?;
    let cols = payload(h);
    let idx: Vec<usize> = cols.iter().map(|c| h.col(c)).collect::<Result<_>>()?;

    let mut parent: Vec<usize> = (0..cols.len()).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            if determines(h, &key_idx, idx[i], idx[j], opts.epsilon)
                && determines(h, &key_idx, idx[j], idx[i], opts.epsilon)
            {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<String>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for (i, c) in cols.iter().enumerate() {
        let r = root(&mut parent, i);
        let g = *slot.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(c.clone());
    }
    Ok(UFactorGroups {
        relation: h.name.clone(),
        key,
        groups,
    })
}

/// `Gamma_k`: pivot fds of every exogenous relation plus the upsilon-fds
/// of `sigma`, left-reduced.
pub fn gamma(sigma: &FdSet, groups: &[UFactorGroups]) -> Result<FdSet> {
    let u = sigma.universe().clone();
    let mut out = FdSet::empty(u.clone());
    for g in groups {
        for (p, b) in g.pivot_fds() {
            out.insert(Fd::single(u.set([p])?, u.attr(&b)?)?)?;
        }
    }
    let upsilon = u.upsilon();
    for fd in sigma.iter() {
        if upsilon.is_some_and(|v| fd.lhs.contains(&v)) {
            out.insert(fd.clone())?;
        }
    }
    Ok(out.left_reduce())
}

/// `Y := project[X, A](repair-key[X @ count](group-by[X, A; count](H)))`
/// for grouping key `X` and pivot `A`.
pub fn u_factorize(h: &CertainRelation, key: &[String], pivot: &str, world: &mut WorldTable, name: &str) -> Result<URelation> {
    let mut cols: Vec<String> = key.to_vec();
    cols.push(pivot.to_string());
    let idx: Vec<usize> = cols.iter().map(|c| h.col(c)).collect::<Result<_>>()?;
    let mut order: Vec<Vec<Value>> = Vec::new();
    let mut counts: HashMap<Vec<Value>, usize> = HashMap::new();
    for row in &h.rows {
        let k: Vec<Value> = idx.iter().map(|i| row[*i].clone()).collect();
        let n = counts.entry(k.clone()).or_insert(0);
        if *n == 0 {
            order.push(k);
        }
        *n += 1;
    }
    let count_col = unused_name(&cols, "count");
    let rows = order
        .into_iter()
        .map(|mut k| {
            let n = counts[&k];
            k.push(Value::new(n.to_string()));
            k
        })
        .collect();
    let mut with_count = cols.clone();
    with_count.push(count_col.clone());
    let grouped = CertainRelation::new(format!("gamma({})", h.name), with_count, cols.clone(), rows)?;
    repair_key(&grouped, key, &count_col, world, name)
}

fn unused_name(cols: &[String], base: &str) -> String {
    let mut name = base.to_string();
    while cols.contains(&name) {
        name.push('_');
    }
    name
}

/// U-factor projections of one exogenous relation, by pivot.
#[derive(Clone, Debug)]
pub struct Projections {
    pub relation: usize,
    pub factors: Vec<(String, URelation)>,
}

/// Everything produced for one hypothesis.
#[derive(Clone, Debug)]
pub struct Synthesis4U {
    pub groups: Vec<UFactorGroups>,
    pub gamma: FdSet,
    pub gamma_folded: FdSet,
    pub mapping: Vec<Projections>,
    pub exogenous: Vec<URelation>,
    pub endogenous: Vec<URelation>,
}

impl Synthesis4U {
    pub fn relations(&self) -> impl Iterator<Item = &URelation> + '_ {
        self.exogenous.iter().chain(&self.endogenous)
    }
}

/// Full uncertainty introduction for hypothesis `upsilon = k`: learns
/// u-factors of the exogenous relations of `hk`, folds `Gamma_k`, then runs
/// u-factorization (part I) and u-propagation (part II). New relations are
/// named `Y{k}_1, Y{k}_2, ...`.
pub fn synthesize4u(
    sigma: &FdSet,
    hk: &[CertainRelation],
    y0: &URelation,
    k: &Value,
    world: &mut WorldTable,
    opts: U4Options,
) -> Result<Synthesis4U> {
    let exo: Vec<usize> = (0..hk.len()).filter(|i| is_exogenous(&hk[*i])).collect();
    for i in (0..hk.len()).filter(|i| !exo.contains(i)) {
        hk[i].col(TID).map_err(|_| Error::Precondition(format!("{} has no {TID} column", hk[i].name)))?;
    }
    let mut groups = Vec::new();
    for i in &exo {
        hk[*i].col(TID).map_err(|_| Error::Precondition(format!("{} has no {TID} column", hk[*i].name)))?;
        if !hk[*i].is_empty() {
            groups.push((*i, learn_u_factors(&hk[*i], opts)?));
        }
    }
    let learned: Vec<UFactorGroups> = groups.iter().map(|(_, g)| g.clone()).collect();
    let gamma = gamma(sigma, &learned)?;
    let gamma_folded = folding(&gamma)?.folded;
    let u = gamma_folded.universe().clone();
    let upsilon = u.upsilon();
    let is_upsilon_fd = |fd: &Fd| upsilon.is_some_and(|v| fd.lhs.contains(&v));
    let mut counter = 0;
    let mut next_name = || {
        counter += 1;
        format!("Y{k}_{counter}")
    };

    // Part I
    let phi_fds = gamma_folded.filter(|fd| !is_upsilon_fd(fd));
    let mut pivots: Vec<String> = Vec::new();
    for scheme in &synthesize(&phi_fds)?.schemes {
        let key = u.names_of(&scheme.key);
        let is_pivot = key.len() == 1 && learned.iter().any(|g| g.pivots().any(|p| p == key[0]));
        if !is_pivot {
            return Err(Error::Integrity(format!(
                "exogenous scheme {} is keyed by {}, not by a learned pivot",
                scheme.name,
                key.join(" ")
            )));
        }
        pivots.push(key[0].clone());
    }
    for g in &learned {
        for p in g.pivots() {
            if !pivots.iter().any(|q| q == p) {
                pivots.push(p.to_string());
            }
        }
    }
    let mut mapping: Vec<Projections> = Vec::new();
    let mut exogenous = Vec::new();
    for p in &pivots {
        let (rel, g) = groups
            .iter()
            .find(|(_, g)| g.pivots().any(|q| q == p))
            .expect("pivot comes from a learned group");
        let y = u_factorize(&hk[*rel], &g.key, p, world, &next_name())?;
        match mapping.iter_mut().find(|m| m.relation == *rel) {
            Some(m) => m.factors.push((p.clone(), y.clone())),
            None => mapping.push(Projections {
                relation: *rel,
                factors: vec![(p.clone(), y.clone())],
            }),
        }
        exogenous.push(y);
    }

    // Part II
    let upsilon_fds = gamma_folded.filter(|fd| is_upsilon_fd(fd));
    let determined: BTreeSet<String> = upsilon_fds.iter().flat_map(|fd| u.names_of(&fd.rhs)).collect();
    let selected = u_select(y0, &Predicate::eq(UPSILON, k.clone()))?;
    let mut endogenous = Vec::new();
    for scheme in &synthesize(&upsilon_fds)?.schemes {
        let names = u.names_of(&scheme.attrs);
        let (t, s): (Vec<String>, Vec<String>) = names.into_iter().partition(|n| determined.contains(n));
        let Some(hq) = hk
            .iter()
            .find(|h| !is_exogenous(h) && t.iter().all(|a| payload(h).contains(a)))
        else {
            continue;
        };
        let t: Vec<String> = hq.cols.iter().filter(|c| t.contains(c)).cloned().collect();
        let mut joined: Option<URelation> = None;
        let mut x: Vec<String> = Vec::new();
        for m in &mapping {
            let h = &hk[m.relation];
            let l = payload(h);
            let hits: Vec<&String> = l.iter().filter(|a| s.contains(a)).collect();
            if hits.is_empty() {
                continue;
            }
            let g = &groups.iter().find(|(i, _)| *i == m.relation).expect("mapped").1;
            let mut j = match joined.take() {
                Some(j) => u_join(&j, &h.to_urelation())?,
                None => h.to_urelation(),
            };
            for a in &g.key {
                if !x.contains(a) {
                    x.push(a.clone());
                }
            }
            for a in hits {
                if !g.pivots().any(|p| p == a) {
                    continue;
                }
                let (_, y) = m.factors.iter().find(|(p, _)| p == a).ok_or_else(|| {
                    Error::Integrity(format!("no u-factor projection for pivot {a} of {}", h.name))
                })?;
                j = u_join(&j, y)?;
            }
            joined = Some(j);
        }
        let zq = grouping_key(hq);
        let mut zt = zq.clone();
        zt.extend(t.iter().cloned());
        let mut tid_zt = vec![TID.to_string()];
        tid_zt.extend(zt.iter().cloned());
        let hq_part = u_project(&hq.to_urelation(), &tid_zt)?;
        let mut body = selected.clone();
        if let Some(j) = joined {
            let mut tid_x = vec![TID.to_string()];
            tid_x.extend(x);
            let j = u_project(&j, &tid_x)?;
            check_trials(hq, &j)?;
            body = u_join(&body, &j)?;
        }
        body = u_join(&body, &hq_part)?;
        endogenous.push(u_project(&body, &zt)?.with_name(next_name()));
    }

    Ok(Synthesis4U {
        groups: learned,
        gamma,
        gamma_folded,
        mapping,
        exogenous,
        endogenous,
    })
}

fn check_trials(hq: &CertainRelation, j: &URelation) -> Result<()> {
    let t = hq.col(TID)?;
    let jt = j.col(TID)?;
    let known: HashSet<&Value> = j.rows.iter().map(|r| &r.values[jt]).collect();
    if let Some(row) = hq.rows.iter().find(|r| !known.contains(&r[t])) {
        return Err(Error::Integrity(format!(
            "{}: trial {TID}={} has no exogenous row",
            hq.name, row[t]
        )));
    }
    Ok(())
}
