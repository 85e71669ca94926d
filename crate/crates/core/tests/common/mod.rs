#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use hypc::fd::FdSet;
use hypc::sem::{encode, Structure};
use hypc::urel::{enumerate_worlds, CmpOp, Cond, Predicate, Query, UDatabase, URelation, Value, VarId};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Seeded generator; `HYPC_SEED` overrides the default seed.
pub fn rng(default_seed: u64) -> StdRng {
    let seed = std::env::var("HYPC_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(default_seed);
    StdRng::seed_from_u64(seed)
}

/// Random set where every attribute has at most one lhs, left-reduced.
pub fn random_unique_lhs(rng: &mut StdRng, max_attrs: usize) -> FdSet {
    loop {
        let n = rng.gen_range(2..=max_attrs);
        let names: Vec<String> = (0..n).map(|i| format!("a{i}")).collect();
        let mut fds: Vec<(Vec<String>, Vec<String>)> = Vec::new();
        for (i, target) in names.iter().enumerate() {
            if !rng.gen_bool(0.6) {
                continue;
            }
            let mut others: Vec<&String> = names.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, s)| s).collect();
            others.shuffle(rng);
            let k = rng.gen_range(1..=3.min(others.len()));
            fds.push((others[..k].iter().map(|s| s.to_string()).collect(), vec![target.clone()]));
        }
        if fds.is_empty() {
            continue;
        }
        return FdSet::from_named(&fds).unwrap().left_reduce();
    }
}

/// Random complete structure: a hidden perfect matching plus extra incidences.
pub fn random_structure(rng: &mut StdRng, max_vars: usize) -> Structure {
    let n = rng.gen_range(2..=max_vars);
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let domain = usize::from(rng.gen_bool(0.3));
    let mut perm: Vec<usize> = (domain..n).collect();
    perm.shuffle(rng);
    let mut eqs: Vec<(String, Vec<String>)> = Vec::new();
    if domain == 1 {
        eqs.push(("f0".into(), vec![names[0].clone()]));
    }
    let density = rng.gen_range(0.1..0.5);
    for (i, &own) in perm.iter().enumerate() {
        let mut vars = vec![names[own].clone()];
        for (j, name) in names.iter().enumerate() {
            if j != own && rng.gen_bool(density) {
                vars.push(name.clone());
            }
        }
        eqs.push((format!("f{}", i + 1 + domain), vars));
    }
    let eq_refs: Vec<(&str, Vec<&str>)> = eqs
        .iter()
        .map(|(id, vs)| (id.as_str(), vs.iter().map(String::as_str).collect()))
        .collect();
    let var_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Structure::new(&var_refs, &eq_refs, domain).unwrap()
}

/// Left-reduced encoding of a random structure.
pub fn random_encoded(rng: &mut StdRng, max_vars: usize) -> FdSet {
    loop {
        let s = random_structure(rng, max_vars);
        let sigma = encode(&s).unwrap();
        if !sigma.is_empty() {
            return sigma;
        }
    }
}

/// Mix of both generators, all parsimonious, `|U| <= max_attrs`.
pub fn random_parsimonious(rng: &mut StdRng, max_attrs: usize) -> FdSet {
    if rng.gen_bool(0.5) {
        random_unique_lhs(rng, max_attrs)
    } else {
        random_encoded(rng, max_attrs - 2)
    }
}

/// Random U-database with at most `max_worlds` worlds: 2 to 3 relations over
/// columns drawn from `a..d`, small integer values, 0 to 2 conditions per row.
pub fn random_udb(rng: &mut StdRng, max_worlds: usize) -> UDatabase {
    let mut db = UDatabase::new();
    let mut worlds = 1;
    for _ in 0..rng.gen_range(1..=3) {
        let size = rng.gen_range(2..=4);
        if worlds * size > max_worlds {
            break;
        }
        worlds *= size;
        let raw: Vec<f64> = (0..size).map(|_| rng.gen_range(1..=5) as f64).collect();
        let total: f64 = raw.iter().sum();
        db.world.fresh(raw.iter().map(|w| w / total).collect()).unwrap();
    }
    let vars: Vec<VarId> = db.world.vars().collect();
    let pool = ["a", "b", "c", "d"];
    for r in 0..rng.gen_range(2..=3) {
        let mut cols: Vec<String> = pool.iter().map(|s| s.to_string()).collect();
        cols.shuffle(rng);
        cols.truncate(rng.gen_range(1..=3));
        let mut rel = URelation::new(format!("R{r}"), cols.clone()).unwrap();
        for _ in 0..rng.gen_range(0..=6) {
            let n = rng.gen_range(0..=2.min(vars.len()));
            let mut chosen = vars.clone();
            chosen.shuffle(rng);
            let cond = Cond::new(chosen[..n].iter().map(|v| {
                let size = db.world.marginals(*v).unwrap().len() as u32;
                (*v, rng.gen_range(1..=size))
            }))
            .unwrap();
            let values = cols.iter().map(|_| Value::new(rng.gen_range(0..3).to_string())).collect();
            rel.push(cond, values).unwrap();
        }
        db.insert(rel).unwrap();
    }
    db
}

fn random_predicate(rng: &mut StdRng, cols: &[String], depth: usize) -> Predicate {
    let col = |rng: &mut StdRng| cols[rng.gen_range(0..cols.len())].clone();
    match rng.gen_range(0..if depth == 0 { 3 } else { 6 }) {
        0 => Predicate::Cmp(CmpOp::Eq, col(rng), Value::new(rng.gen_range(0..3).to_string())),
        1 => Predicate::Cmp(
            [CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge][rng.gen_range(0..5)],
            col(rng),
            Value::new(rng.gen_range(0..3).to_string()),
        ),
        2 => Predicate::ColEq(col(rng), col(rng)),
        3 => Predicate::And(vec![random_predicate(rng, cols, depth - 1), random_predicate(rng, cols, depth - 1)]),
        4 => Predicate::Or(vec![random_predicate(rng, cols, depth - 1), random_predicate(rng, cols, depth - 1)]),
        _ => Predicate::Not(Box::new(random_predicate(rng, cols, depth - 1))),
    }
}

fn random_subquery(rng: &mut StdRng, db: &UDatabase, ops: usize) -> (Query, Vec<String>) {
    if ops == 0 {
        let names: Vec<&String> = db.relations.keys().collect();
        let name = names[rng.gen_range(0..names.len())].clone();
        let cols = db.get(&name).unwrap().cols.clone();
        return (Query::Rel(name), cols);
    }
    match rng.gen_range(0..3) {
        0 => {
            let (q, cols) = random_subquery(rng, db, ops - 1);
            (Query::Select(random_predicate(rng, &cols, 1), Box::new(q)), cols)
        }
        1 => {
            let (q, cols) = random_subquery(rng, db, ops - 1);
            let mut keep = cols.clone();
            keep.shuffle(rng);
            keep.truncate(rng.gen_range(1..=cols.len()));
            (Query::Project(keep.clone(), Box::new(q)), keep)
        }
        _ => {
            let left = rng.gen_range(0..ops);
            let (a, ca) = random_subquery(rng, db, left);
            let (b, cb) = random_subquery(rng, db, ops - 1 - left);
            let mut cols = ca.clone();
            cols.extend(cb.into_iter().filter(|c| !ca.contains(c)));
            (Query::Join(Box::new(a), Box::new(b)), cols)
        }
    }
}

/// Random query with exactly `ops` select/project/join operators.
pub fn random_query(rng: &mut StdRng, db: &UDatabase, ops: usize) -> Query {
    random_subquery(rng, db, ops).0
}

/// Worlds where decoding the rewritten result differs from evaluating the
/// query classically on the decoded database.
pub fn rewrite_mismatches(db: &UDatabase, q: &Query) -> usize {
    let rewritten = q.eval(db).unwrap();
    let vars: BTreeSet<VarId> = db.world.vars().collect();
    enumerate_worlds(&db.world, &vars, 1 << 20)
        .unwrap()
        .iter()
        .filter(|w| {
            let classical = q.eval_classical(&db.decode(&w.assignment)).unwrap();
            rewritten.decode(&w.assignment) != classical
        })
        .count()
}
