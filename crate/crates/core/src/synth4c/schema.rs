use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::{AttrSet, FdSet, Universe};

/// A relation scheme `name[key | rest]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelScheme {
    pub name: String,
    pub attrs: AttrSet,
    pub key: AttrSet,
}

/// An ordered list of relation schemes together with the fds they came from.
#[derive(Clone, Debug)]
pub struct Schema {
    pub source: FdSet,
    pub schemes: Vec<RelScheme>,
}

#[derive(Serialize, Deserialize)]
struct SchemeFile {
    name: String,
    attrs: Vec<String>,
    key: Vec<String>,
}

impl Schema {
    pub fn universe(&self) -> &Arc<Universe> {
        self.source.universe()
    }

    /// Union of all scheme attributes.
    pub fn attrs(&self) -> AttrSet {
        self.schemes.iter().flat_map(|s| s.attrs.iter().copied()).collect()
    }

    pub fn len(&self) -> usize {
        self.schemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schemes.is_empty()
    }

    pub fn scheme(&self, name: &str) -> Option<&RelScheme> {
        self.schemes.iter().find(|s| s.name == name)
    }

    /// Attribute names of a scheme: key first, then the rest, each in universe order.
    pub fn ordered_names(&self, scheme: &RelScheme) -> Vec<String> {
        let u = self.universe();
        let rest: AttrSet = scheme.attrs.difference(&scheme.key).copied().collect();
        let mut names = u.names_of(&scheme.key);
        names.extend(u.names_of(&rest));
        names
    }

    /// Builds a schema from named schemes over the universe of `source`.
    pub fn from_named<S: AsRef<str>>(source: FdSet, schemes: &[(&str, &[S], &[S])]) -> Result<Schema> {
        let u = source.universe().clone();
        let mut out = Vec::new();
        for (name, attrs, key) in schemes {
            out.push(check_scheme(name, u.set(attrs.iter())?, u.set(key.iter())?)?);
        }
        Ok(Schema { source, schemes: out })
    }

    pub fn to_json(&self) -> String {
        let files: Vec<SchemeFile> = self
            .schemes
            .iter()
            .map(|s| SchemeFile {
                name: s.name.clone(),
                attrs: self.ordered_names(s),
                key: self.universe().names_of(&s.key),
            })
            .collect();
        serde_json::to_string_pretty(&files).expect("schema serializes")
    }

    /// Reads a schema file; names resolve against the universe of `source`.
    pub fn from_json(text: &str, source: FdSet) -> Result<Schema> {
        let files: Vec<SchemeFile> = serde_json::from_str(text)?;
        let u = source.universe().clone();
        let mut schemes = Vec::new();
        for f in files {
            schemes.push(check_scheme(&f.name, u.set(&f.attrs)?, u.set(&f.key)?)?);
        }
        Ok(Schema { source, schemes })
    }
}

fn check_scheme(name: &str, attrs: AttrSet, key: AttrSet) -> Result<RelScheme> {
    if attrs.is_empty() || key.is_empty() {
        return Err(Error::EmptyAttributeSet(format!("scheme {name}")));
    }
    if !key.is_subset(&attrs) {
        return Err(Error::Domain(format!("key of {name} is not within its attributes")));
    }
    Ok(RelScheme {
        name: name.to_string(),
        attrs,
        key,
    })
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let u = self.universe();
        for s in &self.schemes {
            let rest: AttrSet = s.attrs.difference(&s.key).copied().collect();
            writeln!(f, "{}[{} | {}]", s.name, u.fmt_set(&s.key), u.fmt_set(&rest))?;
        }
        Ok(())
    }
}
