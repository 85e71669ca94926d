//! Line-oriented fd format: `A B -> C D`, `#` starts a comment.

use super::{Fd, FdSet, Universe};
use crate::error::{Error, Result};

type NamedFd = (Vec<String>, Vec<String>);

fn parse_lines(text: &str) -> Result<Vec<NamedFd>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse {
            line: i + 1,
            msg: msg.to_string(),
        };
        let (l, r) = line.split_once("->").ok_or_else(|| err("missing '->'"))?;
        if r.contains("->") {
            return Err(err("more than one '->'"));
        }
        let lhs: Vec<String> = l.split_whitespace().map(str::to_string).collect();
        let rhs: Vec<String> = r.split_whitespace().map(str::to_string).collect();
        if lhs.is_empty() {
            return Err(err("empty left-hand side"));
        }
        if rhs.is_empty() {
            return Err(err("empty right-hand side"));
        }
        out.push((lhs, rhs));
    }
    Ok(out)
}

impl FdSet {
    /// Parses the text format; the universe is built from the mentioned names.
    pub fn parse(text: &str) -> Result<FdSet> {
        let named = parse_lines(text)?;
        let universe = Universe::new(named.iter().flat_map(|(l, r)| l.iter().chain(r.iter())))?;
        let mut set = FdSet::empty(universe.clone());
        for (l, r) in named {
            set.push_unchecked(Fd::new(universe.set(&l)?, universe.set(&r)?)?);
        }
        Ok(set)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}
