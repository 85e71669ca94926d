use std::collections::{BTreeSet, HashMap, HashSet};

use super::{Assignment, CertainRelation, Cond, Predicate, URelation, URow, Value, VarId, WorldTable};
use crate::error::{Error, Result};

pub const DEFAULT_WORLD_CAP: usize = 1_000_000;

/// `repair-key_{key@weight}`: one fresh variable per distinct key group, one
/// alternative per row of the group, weighted by `weight`. The weight
/// column is dropped from the result.
pub fn repair_key(
    rel: &CertainRelation,
    key: &[String],
    weight: &str,
    world: &mut WorldTable,
    name: &str,
) -> Result<URelation> {
    let key_idx: Vec<usize> = key.iter().map(|k| rel.col(k)).collect::<Result<_>>()?;
    let w_idx = rel.col(weight)?;
    if key_idx.contains(&w_idx) {
        return Err(Error::Domain(format!("weight column {weight} is part of the key")));
    }
    let rest: Vec<usize> = (0..rel.cols.len()).filter(|i| *i != w_idx).collect();

    let mut seen = HashSet::new();
    let mut groups: Vec<(Vec<&Value>, Vec<usize>)> = Vec::new();
    let mut group_of: HashMap<Vec<&Value>, usize> = HashMap::new();
    let mut weights = Vec::with_capacity(rel.rows.len());
    for (i, row) in rel.rows.iter().enumerate() {
        let w = row[w_idx]
            .as_f64()
            .filter(|w| *w > 0.0)
            .ok_or_else(|| Error::Domain(format!("{}: weight {:?} is not a positive number", rel.name, row[w_idx].as_str())))?;
        weights.push(w);
        let body: Vec<&Value> = rest.iter().map(|j| &row[*j]).collect();
        if !seen.insert(body) {
            return Err(Error::Integrity(format!(
                "{}: row {} repeats every non-weight column",
                rel.name,
                i + 1
            )));
        }
        let k: Vec<&Value> = key_idx.iter().map(|j| &row[*j]).collect();
        let g = *group_of.entry(k.clone()).or_insert_with(|| {
            groups.push((k, Vec::new()));
            groups.len() - 1
        });
        groups[g].1.push(i);
    }

    let mut out = URelation::new(name, rest.iter().map(|i| rel.cols[*i].clone()).collect())?;
    let mut cond_of = vec![Cond::default(); rel.rows.len()];
    for (_, members) in &groups {
        let total: f64 = members.iter().map(|i| weights[*i]).sum();
        let var = world.fresh(members.iter().map(|i| weights[*i] / total).collect())?;
        for (alt, i) in members.iter().enumerate() {
            cond_of[*i] = Cond::single(var, alt as u32 + 1);
        }
    }
    for (row, cond) in rel.rows.iter().zip(cond_of) {
        out.push(cond, rest.iter().map(|i| row[*i].clone()).collect())?;
    }
    Ok(out)
}

/// Selection over data columns; conditions pass through untouched.
pub fn u_select(r: &URelation, pred: &Predicate) -> Result<URelation> {
    let bound = pred.bind(&r.cols)?;
    Ok(URelation {
        name: r.name.clone(),
        cols: r.cols.clone(),
        rows: r.rows.iter().filter(|row| bound.eval(&row.values)).cloned().collect(),
    })
}

/// Projection onto `cols`, keeping every row's condition. Duplicates stay.
pub fn u_project(r: &URelation, cols: &[String]) -> Result<URelation> {
    let idx: Vec<usize> = cols.iter().map(|c| r.col(c)).collect::<Result<_>>()?;
    let mut out = URelation::new(r.name.clone(), cols.to_vec())?;
    out.rows = r
        .rows
        .iter()
        .map(|row| URow {
            cond: row.cond.clone(),
            values: idx.iter().map(|i| row.values[*i].clone()).collect(),
        })
        .collect();
    Ok(out)
}

/// Natural join on the shared data columns, keeping only pairs of rows whose
/// conditions are consistent. Output columns: `r`'s, then `s`'s new ones.
pub fn u_join(r: &URelation, s: &URelation) -> Result<URelation> {
    let shared: Vec<(usize, usize)> = r
        .cols
        .iter()
        .enumerate()
        .filter_map(|(i, c)| s.cols.iter().position(|d| d == c).map(|j| (i, j)))
        .collect();
    let extra: Vec<usize> = (0..s.cols.len()).filter(|j| !shared.iter().any(|(_, k)| k == j)).collect();
    let mut cols = r.cols.clone();
    cols.extend(extra.iter().map(|j| s.cols[*j].clone()));
    let mut out = URelation::new(format!("{}_{}", r.name, s.name), cols)?;

    let mut index: HashMap<Vec<&Value>, Vec<&URow>> = HashMap::new();
    for row in &s.rows {
        index
            .entry(shared.iter().map(|(_, j)| &row.values[*j]).collect())
            .or_default()
            .push(row);
    }
    for left in &r.rows {
        let k: Vec<&Value> = shared.iter().map(|(i, _)| &left.values[*i]).collect();
        for right in index.get(&k).into_iter().flatten() {
            if let Some(cond) = left.cond.merge(&right.cond) {
                let mut values = left.values.clone();
                values.extend(extra.iter().map(|j| right.values[*j].clone()));
                out.rows.push(URow { cond, values });
            }
        }
    }
    Ok(out)
}

/// One total assignment over the enumerated variables.
#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub assignment: Assignment,
    pub prob: f64,
}

/// All total assignments over `vars`, in lexicographic order of value ids.
pub fn enumerate_worlds(world: &WorldTable, vars: &BTreeSet<VarId>, cap: usize) -> Result<Vec<World>> {
    let domains: Vec<(VarId, &[f64])> = vars
        .iter()
        .map(|v| {
            world
                .marginals(*v)
                .map(|m| (*v, m))
                .ok_or_else(|| Error::Integrity(format!("{v} is not in the world table")))
        })
        .collect::<Result<_>>()?;
    let count = world.world_count(vars);
    if count > cap {
        return Err(Error::capacity("number of worlds", cap, count));
    }
    let mut out = Vec::with_capacity(count);
    let mut digits = vec![0usize; domains.len()];
    loop {
        let mut assignment = Assignment::new();
        let mut prob = 1.0;
        for ((v, m), d) in domains.iter().zip(&digits) {
            assignment.insert(*v, *d as u32 + 1);
            prob *= m[*d];
        }
        out.push(World { assignment, prob });
        let mut i = domains.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < domains[i].1.len() {
                break;
            }
            digits[i] = 0;
        }
    }
}

/// Probability that `tuple` appears in `r`, by enumerating the variables of
/// the rows that carry it.
pub fn conf(r: &URelation, tuple: &[Value], world: &WorldTable, cap: usize) -> Result<f64> {
    if tuple.len() != r.cols.len() {
        return Err(Error::Domain(format!(
            "tuple of width {} for {} with {} columns",
            tuple.len(),
            r.name,
            r.cols.len()
        )));
    }
    let conds: Vec<&Cond> = r.rows.iter().filter(|row| row.values == tuple).map(|row| &row.cond).collect();
    if conds.iter().any(|c| c.is_empty()) {
        return Ok(1.0);
    }
    let vars: BTreeSet<VarId> = conds.iter().flat_map(|c| c.vars()).collect();
    if vars.is_empty() {
        return Ok(0.0);
    }
    Ok(enumerate_worlds(world, &vars, cap)?
        .into_iter()
        .filter(|w| conds.iter().any(|c| c.holds_in(&w.assignment)))
        .map(|w| w.prob)
        .sum())
}
