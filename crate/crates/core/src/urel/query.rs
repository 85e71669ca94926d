//! Positive algebra over named relations, in a parenthesized form:
//!
//! ```text
//! (project (phi upsilon) (select (and (= upsilon 3) (>= t 5)) (join Y0 Y3_4)))
//! ```
//!
//! Predicates: `(= col v)`, `(!= col v)`, `(< col v)`, `(<= col v)`,
//! `(> col v)`, `(>= col v)`, `(=col a b)`, `(and ..)`, `(or ..)`, `(not p)`,
//! `true`. Values may be double-quoted.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::ops::{u_join, u_project, u_select};
use super::{Table, UDatabase, URelation, Value};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    const ALL: [(CmpOp, &'static str); 6] = [
        (CmpOp::Eq, "="),
        (CmpOp::Ne, "!="),
        (CmpOp::Lt, "<"),
        (CmpOp::Le, "<="),
        (CmpOp::Gt, ">"),
        (CmpOp::Ge, ">="),
    ];

    fn symbol(self) -> &'static str {
        CmpOp::ALL.iter().find(|(op, _)| *op == self).map(|(_, s)| *s).unwrap_or("?")
    }

    fn holds(self, a: &Value, b: &Value) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Predicate {
    True,
    Cmp(CmpOp, String, Value),
    ColEq(String, String),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Not(Box<Predicate>),
}

pub(crate) enum Bound {
    True,
    Cmp(CmpOp, usize, Value),
    ColEq(usize, usize),
    And(Vec<Bound>),
    Or(Vec<Bound>),
    Not(Box<Bound>),
}

impl Bound {
    pub(crate) fn eval(&self, row: &[Value]) -> bool {
        match self {
            Bound::True => true,
            Bound::Cmp(op, i, v) => op.holds(&row[*i], v),
            Bound::ColEq(i, j) => row[*i] == row[*j],
            Bound::And(ps) => ps.iter().all(|p| p.eval(row)),
            Bound::Or(ps) => ps.iter().any(|p| p.eval(row)),
            Bound::Not(p) => !p.eval(row),
        }
    }
}

fn is_cond_col(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some('V' | 'D'))
        && name.len() > 1
        && chars.all(|c| c.is_ascii_digit())
}

impl Predicate {
    pub fn eq(col: &str, v: impl Into<Value>) -> Self {
        Predicate::Cmp(CmpOp::Eq, col.to_string(), v.into())
    }

    pub(crate) fn bind(&self, cols: &[String]) -> Result<Bound> {
        let col = |name: &str| {
            cols.iter().position(|c| c == name).ok_or_else(|| {
                if is_cond_col(name) {
                    Error::Domain(format!("predicate references condition column {name}"))
                } else {
                    Error::UnknownAttribute(name.to_string())
                }
            })
        };
        Ok(match self {
            Predicate::True => Bound::True,
            Predicate::Cmp(op, c, v) => Bound::Cmp(*op, col(c)?, v.clone()),
            Predicate::ColEq(a, b) => Bound::ColEq(col(a)?, col(b)?),
            Predicate::And(ps) => Bound::And(ps.iter().map(|p| p.bind(cols)).collect::<Result<_>>()?),
            Predicate::Or(ps) => Bound::Or(ps.iter().map(|p| p.bind(cols)).collect::<Result<_>>()?),
            Predicate::Not(p) => Bound::Not(Box::new(p.bind(cols)?)),
        })
    }
}

fn quote(v: &str) -> String {
    if v.is_empty() || v.chars().any(|c| c.is_whitespace() || c == '(' || c == ')' || c == '"') {
        format!("\"{}\"", v.replace('"', "\\\""))
    } else {
        v.to_string()
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, head: &str, ps: &[Predicate]| {
            write!(f, "({head}")?;
            for p in ps {
                write!(f, " {p}")?;
            }
            write!(f, ")")
        };
        match self {
            Predicate::True => write!(f, "true"),
            Predicate::Cmp(op, c, v) => write!(f, "({} {} {})", op.symbol(), c, quote(v.as_str())),
            Predicate::ColEq(a, b) => write!(f, "(=col {a} {b})"),
            Predicate::And(ps) => list(f, "and", ps),
            Predicate::Or(ps) => list(f, "or", ps),
            Predicate::Not(p) => write!(f, "(not {p})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Query {
    Rel(String),
    Select(Predicate, Box<Query>),
    Project(Vec<String>, Box<Query>),
    Join(Box<Query>, Box<Query>),
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Rel(n) => write!(f, "{n}"),
            Query::Select(p, q) => write!(f, "(select {p} {q})"),
            Query::Project(cols, q) => write!(f, "(project ({}) {q})", cols.join(" ")),
            Query::Join(a, b) => write!(f, "(join {a} {b})"),
        }
    }
}

impl Query {
    pub fn parse(text: &str) -> Result<Query> {
        let tokens = tokenize(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let q = p.query()?;
        if let Some((line, t)) = p.tokens.get(p.pos) {
            return Err(Error::Parse {
                line: *line,
                msg: format!("trailing input {}", t.show()),
            });
        }
        Ok(q)
    }

    /// Number of select/project/join nodes.
    pub fn operator_count(&self) -> usize {
        match self {
            Query::Rel(_) => 0,
            Query::Select(_, q) | Query::Project(_, q) => 1 + q.operator_count(),
            Query::Join(a, b) => 1 + a.operator_count() + b.operator_count(),
        }
    }

    /// Rewritten evaluation over U-relations.
    pub fn eval(&self, db: &UDatabase) -> Result<URelation> {
        match self {
            Query::Rel(n) => Ok(db.get(n)?.clone()),
            Query::Select(p, q) => u_select(&q.eval(db)?, p),
            Query::Project(cols, q) => u_project(&q.eval(db)?, cols),
            Query::Join(a, b) => u_join(&a.eval(db)?, &b.eval(db)?),
        }
    }

    /// Classical evaluation over one decoded world.
    pub fn eval_classical(&self, tables: &BTreeMap<String, Table>) -> Result<Table> {
        match self {
            Query::Rel(n) => tables
                .get(n)
                .cloned()
                .ok_or_else(|| Error::Domain(format!("no relation named {n}"))),
            Query::Select(p, q) => {
                let t = q.eval_classical(tables)?;
                let b = p.bind(&t.cols)?;
                Ok(Table {
                    rows: t.rows.iter().filter(|r| b.eval(r)).cloned().collect(),
                    cols: t.cols,
                })
            }
            Query::Project(cols, q) => {
                let t = q.eval_classical(tables)?;
                let idx: Vec<usize> = cols.iter().map(|c| t.col(c)).collect::<Result<_>>()?;
                Ok(Table {
                    cols: cols.clone(),
                    rows: t.rows.iter().map(|r| idx.iter().map(|i| r[*i].clone()).collect()).collect(),
                })
            }
            Query::Join(a, b) => {
                let (l, r) = (a.eval_classical(tables)?, b.eval_classical(tables)?);
                let shared: Vec<(usize, usize)> = l
                    .cols
                    .iter()
                    .enumerate()
                    .filter_map(|(i, c)| r.cols.iter().position(|d| d == c).map(|j| (i, j)))
                    .collect();
                let extra: Vec<usize> = (0..r.cols.len()).filter(|j| !shared.iter().any(|(_, k)| k == j)).collect();
                let mut cols = l.cols.clone();
                cols.extend(extra.iter().map(|j| r.cols[*j].clone()));
                let mut index: HashMap<Vec<&Value>, Vec<&Vec<Value>>> = HashMap::new();
                for row in &r.rows {
                    index.entry(shared.iter().map(|(_, j)| &row[*j]).collect()).or_default().push(row);
                }
                let mut rows = BTreeSet::new();
                for left in &l.rows {
                    let k: Vec<&Value> = shared.iter().map(|(i, _)| &left[*i]).collect();
                    for right in index.get(&k).into_iter().flatten() {
                        let mut v = left.clone();
                        v.extend(extra.iter().map(|j| right[*j].clone()));
                        rows.insert(v);
                    }
                }
                Ok(Table { cols, rows })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Open,
    Close,
    Atom(String),
    Quoted(String),
}

impl Token {
    fn show(&self) -> String {
        match self {
            Token::Open => "'('".into(),
            Token::Close => "')'".into(),
            Token::Atom(s) => format!("{s:?}"),
            Token::Quoted(s) => format!("\"{s}\""),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\n' => line += 1,
            c if c.is_whitespace() => {}
            ';' => {
                while chars.peek().is_some_and(|c| *c != '\n') {
                    chars.next();
                }
            }
            '(' => out.push((line, Token::Open)),
            ')' => out.push((line, Token::Close)),
            '"' => {
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => {
                            return Err(Error::Parse {
                                line,
                                msg: "unterminated string".into(),
                            })
                        }
                        Some('"') => break,
                        Some('\\') => s.extend(chars.next()),
                        Some(c) => s.push(c),
                    }
                }
                out.push((line, Token::Quoted(s)));
            }
            c => {
                let mut s = String::from(c);
                while chars.peek().is_some_and(|c| !c.is_whitespace() && *c != '(' && *c != ')' && *c != '"') {
                    s.extend(chars.next());
                }
                out.push((line, Token::Atom(s)));
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
}

impl Parser {
    fn line(&self) -> usize {
        self.tokens
            .get(self.pos)
            .or(self.tokens.last())
            .map_or(1, |(l, _)| *l)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            line: self.line(),
            msg: msg.into(),
        })
    }

    fn next(&mut self) -> Result<Token> {
        match self.tokens.get(self.pos) {
            Some((_, t)) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => self.err("unexpected end of query"),
        }
    }

    fn expect_close(&mut self) -> Result<()> {
        match self.next()? {
            Token::Close => Ok(()),
            t => {
                self.pos -= 1;
                self.err(format!("expected ')', found {}", t.show()))
            }
        }
    }

    fn atom(&mut self) -> Result<String> {
        match self.next()? {
            Token::Atom(s) => Ok(s),
            t => {
                self.pos -= 1;
                self.err(format!("expected a name, found {}", t.show()))
            }
        }
    }

    fn value(&mut self) -> Result<Value> {
        match self.next()? {
            Token::Atom(s) | Token::Quoted(s) => Ok(Value::new(s)),
            t => {
                self.pos -= 1;
                self.err(format!("expected a value, found {}", t.show()))
            }
        }
    }

    fn query(&mut self) -> Result<Query> {
        match self.next()? {
            Token::Atom(name) => Ok(Query::Rel(name)),
            Token::Open => {
                let head = self.atom()?;
                let q = match head.as_str() {
                    "select" => {
                        let p = self.predicate()?;
                        Query::Select(p, Box::new(self.query()?))
                    }
                    "project" => {
                        if self.next()? != Token::Open {
                            self.pos -= 1;
                            return self.err("project expects a column list");
                        }
                        let mut cols = Vec::new();
                        while self.tokens.get(self.pos).map(|(_, t)| t) != Some(&Token::Close) {
                            cols.push(self.atom()?);
                        }
                        self.pos += 1;
                        Query::Project(cols, Box::new(self.query()?))
                    }
                    "join" => {
                        let a = self.query()?;
                        Query::Join(Box::new(a), Box::new(self.query()?))
                    }
                    other => return self.err(format!("unknown operator {other:?}")),
                };
                self.expect_close()?;
                Ok(q)
            }
            t => {
                self.pos -= 1;
                self.err(format!("expected a query, found {}", t.show()))
            }
        }
    }

    fn predicate(&mut self) -> Result<Predicate> {
        match self.next()? {
            Token::Atom(s) if s == "true" => Ok(Predicate::True),
            Token::Open => {
                let head = self.atom()?;
                let p = if let Some((op, _)) = CmpOp::ALL.iter().find(|(_, s)| *s == head) {
                    let col = self.atom()?;
                    Predicate::Cmp(*op, col, self.value()?)
                } else {
                    match head.as_str() {
                        "=col" => {
                            let a = self.atom()?;
                            Predicate::ColEq(a, self.atom()?)
                        }
                        "and" | "or" => {
                            let mut ps = Vec::new();
                            while self.tokens.get(self.pos).map(|(_, t)| t) != Some(&Token::Close) {
                                ps.push(self.predicate()?);
                            }
                            if head == "and" {
                                Predicate::And(ps)
                            } else {
                                Predicate::Or(ps)
                            }
                        }
                        "not" => Predicate::Not(Box::new(self.predicate()?)),
                        other => return self.err(format!("unknown predicate {other:?}")),
                    }
                };
                self.expect_close()?;
                Ok(p)
            }
            t => {
                self.pos -= 1;
                self.err(format!("expected a predicate, found {}", t.show()))
            }
        }
    }
}
