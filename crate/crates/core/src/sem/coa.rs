//! Causal ordering: minimal complete substructures peeled layer by layer,
//! and the total causal mapping from equations to variables.

use std::collections::BTreeSet;

use itertools::Itertools;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::Structure;
use crate::error::{Error, Result};

pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// A minimal complete substructure solved at one recursion step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub layer: usize,
    pub equations: Vec<usize>,
    pub variables: Vec<usize>,
}

impl Block {
    pub fn is_coupled(&self) -> bool {
        self.variables.len() > 1
    }
}

/// Total causal mapping: every equation is paired with one of its variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalMapping {
    pub blocks: Vec<Block>,
    var_of: Vec<usize>,
}

impl CausalMapping {
    pub fn var_of(&self, eq: usize) -> usize {
        self.var_of[eq]
    }

    /// `(equation, variable)` pairs in equation order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.var_of.iter().copied().enumerate()
    }

    pub fn layer_count(&self) -> usize {
        self.blocks.iter().map(|b| b.layer + 1).max().unwrap_or(0)
    }

    pub fn coupled_groups(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(|b| b.is_coupled())
    }

    pub fn layer_of(&self, eq: usize) -> usize {
        self.blocks
            .iter()
            .find(|b| b.equations.contains(&eq))
            .map(|b| b.layer)
            .expect("every equation belongs to a block")
    }
}

/// Kuhn's augmenting-path matching. `adj[l]` lists right vertices of left
/// vertex `l`; returns the right vertex matched to each left vertex.
fn max_matching(adj: &[Vec<usize>], n_right: usize) -> Vec<Option<usize>> {
    fn augment(l: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &r in &adj[l] {
            if seen[r] {
                continue;
            }
            seen[r] = true;
            if owner[r].is_none_or(|o| augment(o, adj, seen, owner)) {
                owner[r] = Some(l);
                return true;
            }
        }
        false
    }
    let mut owner: Vec<Option<usize>> = vec![None; n_right];
    for l in 0..adj.len() {
        let mut seen = vec![false; n_right];
        augment(l, adj, &mut seen, &mut owner);
    }
    let mut of_left = vec![None; adj.len()];
    for (r, o) in owner.iter().enumerate() {
        if let Some(l) = o {
            of_left[*l] = Some(r);
        }
    }
    of_left
}

fn has_perfect_matching(adj: &[Vec<usize>], n_right: usize) -> bool {
    max_matching(adj, n_right).iter().all(Option::is_some)
}

/// Checks that every set of k equations mentions at least k variables.
pub fn check_no_overdetermined_subset(s: &Structure) -> Result<()> {
    let adj: Vec<Vec<usize>> = s.equations().iter().map(|e| e.vars.clone()).collect();
    if has_perfect_matching(&adj, s.variables().len()) {
        Ok(())
    } else {
        Err(Error::MalformedStructure(
            "some set of equations mentions fewer variables than equations".into(),
        ))
    }
}

/// All minimal complete substructures, by exhaustive enumeration of equation
/// subsets in size-then-lexicographic order.
pub fn minimal_substructures(s: &Structure, cap: usize) -> Result<Vec<Vec<usize>>> {
    let n = s.equations().len();
    if n > cap.min(63) {
        return Err(Error::capacity("equations to enumerate", cap.min(63), n));
    }
    check_no_overdetermined_subset(s)?;
    let mut found: Vec<(u64, Vec<usize>)> = Vec::new();
    for k in 1..=n {
        for combo in (0..n).combinations(k) {
            let mask = combo.iter().fold(0u64, |m, e| m | 1 << e);
            if found.iter().any(|(f, _)| f & mask == *f) {
                continue;
            }
            let nv = s.vars_of(&combo).len();
            if nv < k {
                let ids = combo.iter().map(|e| s.equations()[*e].id.as_str()).join(",");
                return Err(Error::MalformedStructure(format!(
                    "equations {{{ids}}} mention only {nv} variables"
                )));
            }
            if nv == k {
                found.push((mask, combo));
            }
        }
    }
    Ok(found.into_iter().map(|(_, c)| c).collect())
}

/// Lexicographically least perfect matching of a block: equations in index
/// order take the lowest-index variable that still admits a completion.
fn block_assignment(s: &Structure, eqs: &[usize], vars: &[usize]) -> Vec<(usize, usize)> {
    let mut taken: BTreeSet<usize> = BTreeSet::new();
    let mut out = Vec::new();
    for (i, &e) in eqs.iter().enumerate() {
        let choice = vars
            .iter()
            .copied()
            .filter(|v| !taken.contains(v) && s.equations()[e].vars.contains(v))
            .find(|v| {
                let rest: Vec<Vec<usize>> = eqs[i + 1..]
                    .iter()
                    .map(|f| {
                        s.equations()[*f]
                            .vars
                            .iter()
                            .copied()
                            .filter(|w| vars.contains(w) && !taken.contains(w) && w != v)
                            .collect()
                    })
                    .collect();
                has_perfect_matching(&rest, s.variables().len())
            })
            .expect("a block always admits a perfect matching");
        taken.insert(choice);
        out.push((e, choice));
    }
    out
}

/// Causal ordering of a complete structure.
///
/// Blocks are the strongly connected components of the dependency graph
/// induced by any perfect matching; a block's layer is one more than the
/// deepest block it depends on. This agrees with recursive peeling of
/// minimal complete substructures.
pub fn coa_t(s: &Structure) -> Result<CausalMapping> {
    s.check_complete()?;
    let n = s.equations().len();
    let adj: Vec<Vec<usize>> = s.equations().iter().map(|e| e.vars.clone()).collect();
    let matching = max_matching(&adj, n);
    if matching.iter().any(Option::is_none) {
        return Err(Error::MalformedStructure(
            "some set of equations mentions fewer variables than equations".into(),
        ));
    }
    let mut owner = vec![0usize; n];
    for (e, v) in matching.iter().enumerate() {
        owner[v.expect("checked above")] = e;
    }
    let mut graph: DiGraph<usize, ()> = DiGraph::new();
    let nodes: Vec<_> = (0..n).map(|e| graph.add_node(e)).collect();
    for (e, eq) in s.equations().iter().enumerate() {
        for v in &eq.vars {
            let dep = owner[*v];
            if dep != e {
                graph.add_edge(nodes[dep], nodes[e], ());
            }
        }
    }
    let sccs = tarjan_scc(&graph);
    let mut comp = vec![0usize; n];
    for (c, members) in sccs.iter().enumerate() {
        for node in members {
            comp[graph[*node]] = c;
        }
    }
    let mut layer = vec![0usize; sccs.len()];
    loop {
        let mut changed = false;
        for (e, eq) in s.equations().iter().enumerate() {
            for v in &eq.vars {
                let d = comp[owner[*v]];
                if d != comp[e] && layer[comp[e]] < layer[d] + 1 {
                    layer[comp[e]] = layer[d] + 1;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut blocks: Vec<Block> = sccs
        .iter()
        .enumerate()
        .map(|(c, members)| {
            let mut equations: Vec<usize> = members.iter().map(|nd| graph[*nd]).collect();
            equations.sort_unstable();
            let mut variables: Vec<usize> = s.vars_of(&equations).into_iter().filter(|v| comp[owner[*v]] == c).collect();
            variables.sort_unstable();
            Block {
                layer: layer[c],
                equations,
                variables,
            }
        })
        .collect();
    blocks.sort_by_key(|b| (b.layer, b.equations[0]));
    let mut var_of = vec![0usize; n];
    for b in &blocks {
        for (e, v) in block_assignment(s, &b.equations, &b.variables) {
            var_of[e] = v;
        }
    }
    Ok(CausalMapping { blocks, var_of })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn fig3a() -> Structure {
        let m = [
            "1000000", "0100000", "0010000", "1111100", "1011100", "0001010", "0000101",
        ];
        let matrix: Vec<Vec<u8>> = m.iter().map(|r| r.bytes().map(|b| b - b'0').collect()).collect();
        let vars: Vec<String> = (1..=7).map(|i| format!("x{i}")).collect();
        let eqs: Vec<String> = (1..=7).map(|i| format!("f{i}")).collect();
        Structure::from_matrix(&vars, &eqs, &matrix, 0).unwrap()
    }

    #[test]
    fn first_step_minimal_sets() {
        let s = fig3a();
        assert_eq!(minimal_substructures(&s, 20).unwrap(), vec![vec![0], vec![1], vec![2]]);
        let r = s.residual(&[0, 1, 2]).unwrap();
        assert_eq!(minimal_substructures(&r, 20).unwrap(), vec![vec![0, 1]]);
    }

    #[test]
    fn fig3a_ordering() {
        let m = coa_t(&fig3a()).unwrap();
        assert_eq!(m.layer_count(), 3);
        let coupled: Vec<_> = m.coupled_groups().collect();
        assert_eq!(coupled.len(), 1);
        assert_eq!(coupled[0].variables, vec![3, 4]);
        let pairs: Vec<_> = m.pairs().collect();
        assert_eq!(pairs, (0..7).map(|i| (i, i)).collect::<Vec<_>>());
        assert_eq!(m.layer_of(5), 2);
    }

    #[test]
    fn lower_triangular_has_three_layers() {
        let s = Structure::new(
            &["x1", "x2", "x3"],
            &[("f1", vec!["x1"]), ("f2", vec!["x1", "x2"]), ("f3", vec!["x1", "x2", "x3"])],
            0,
        )
        .unwrap();
        let m = coa_t(&s).unwrap();
        assert_eq!(m.layer_count(), 3);
        assert_eq!(m.coupled_groups().count(), 0);
    }

    #[test]
    fn matching_stays_inside_equations() {
        let s = Structure::new(
            &["x1", "x2", "x3"],
            &[("f1", vec!["x2", "x3"]), ("f2", vec!["x1", "x3"]), ("f3", vec!["x1", "x2"])],
            0,
        )
        .unwrap();
        let m = coa_t(&s).unwrap();
        for (e, v) in m.pairs() {
            assert!(s.equations()[e].vars.contains(&v));
        }
        assert_eq!(m.pairs().collect::<Vec<_>>(), vec![(0, 1), (1, 2), (2, 0)]);
    }

    #[test]
    fn overdetermined_rejected() {
        let s = Structure::new(&["a", "b", "c"], &[("f1", vec!["a"]), ("f2", vec!["a"]), ("f3", vec!["a", "b", "c"])], 0).unwrap();
        assert!(matches!(coa_t(&s), Err(Error::MalformedStructure(_))));
        assert!(matches!(minimal_substructures(&s, 20), Err(Error::MalformedStructure(_))));
        assert!(check_no_overdetermined_subset(&s).is_err());
    }

    #[test]
    fn incomplete_rejected() {
        let s = Structure::new(&["a", "b"], &[("f1", vec!["a", "b"])], 0).unwrap();
        assert!(matches!(coa_t(&s), Err(Error::Incomplete { .. })));
    }
}
