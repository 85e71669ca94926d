use super::normal_forms::align;
use super::Schema;
use crate::error::{Error, Result};
use crate::fd::FdSet;

/// Lossless-join criterion for synthesized schemas: every scheme's key
/// either determines all attributes or sits strictly inside another key.
pub fn lossless_join(schema: &Schema, sigma: &FdSet) -> Result<bool> {
    if schema.len() <= 1 {
        return Ok(true);
    }
    let sigma = align(schema, sigma)?;
    let all = schema.attrs();
    Ok(schema.schemes.iter().enumerate().all(|(i, r)| {
        all.is_subset(&sigma.closure(&r.key))
            || schema
                .schemes
                .iter()
                .enumerate()
                .any(|(j, s)| i != j && r.key.is_subset(&s.key) && r.key != s.key)
    }))
}

/// Tableau chase: one row per scheme, distinguished symbols on the scheme's
/// attributes; fds equate symbols until fixpoint. Lossless iff some row
/// ends fully distinguished.
pub fn chase_oracle(schema: &Schema, sigma: &FdSet, cap: usize) -> Result<bool> {
    let sigma = align(schema, sigma)?.decompose();
    let cols: Vec<_> = schema.attrs().into_iter().collect();
    if cols.len() > cap {
        return Err(Error::capacity("attributes for chase", cap, cols.len()));
    }
    let col_of = |a| cols.iter().position(|c| *c == a);
    // 0 is the distinguished symbol; others are unique per cell.
    let mut rows: Vec<Vec<usize>> = schema
        .schemes
        .iter()
        .enumerate()
        .map(|(i, s)| {
            cols.iter()
                .enumerate()
                .map(|(j, a)| if s.attrs.contains(a) { 0 } else { 1 + i * cols.len() + j })
                .collect()
        })
        .collect();
    let fds: Vec<(Vec<usize>, usize)> = sigma
        .iter()
        .filter_map(|fd| {
            let lhs: Option<Vec<usize>> = fd.lhs.iter().map(|a| col_of(*a)).collect();
            let rhs = col_of(*fd.rhs.iter().next()?)?;
            Some((lhs?, rhs))
        })
        .collect();
    loop {
        let mut changed = false;
        for (lhs, b) in &fds {
            for i in 0..rows.len() {
                for k in i + 1..rows.len() {
                    if lhs.iter().all(|c| rows[i][*c] == rows[k][*c]) && rows[i][*b] != rows[k][*b] {
                        let keep = rows[i][*b].min(rows[k][*b]);
                        let drop = rows[i][*b].max(rows[k][*b]);
                        for row in rows.iter_mut() {
                            if row[*b] == drop {
                                row[*b] = keep;
                            }
                        }
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(rows.iter().any(|r| r.iter().all(|v| *v == 0)))
}
