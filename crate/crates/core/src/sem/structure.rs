use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::{check_name, AttrKind};

/// One equation and the indices of the variables it mentions (ascending).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub id: String,
    pub vars: Vec<usize>,
}

/// A structure: equations over variables. The first `domain_prefix`
/// variables are domain variables such as time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    variables: Vec<String>,
    equations: Vec<Equation>,
    domain_prefix: usize,
}

#[derive(Serialize, Deserialize)]
struct EquationFile {
    id: String,
    vars: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct StructureFile {
    variables: Vec<String>,
    #[serde(default)]
    domain_prefix: usize,
    equations: Vec<EquationFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<u8>>>,
}

impl Structure {
    /// Builds and validates a structure from named equations.
    pub fn new<S: AsRef<str>>(
        variables: &[S],
        equations: &[(S, Vec<S>)],
        domain_prefix: usize,
    ) -> Result<Structure> {
        let variables: Vec<String> = variables.iter().map(|v| v.as_ref().to_string()).collect();
        let mut index = HashMap::new();
        for (i, v) in variables.iter().enumerate() {
            check_name(v)?;
            if AttrKind::of_name(crate::fd::normalize_name(v)).is_epistemic() {
                return Err(Error::ReservedAttribute(v.clone()));
            }
            if index.insert(v.clone(), i).is_some() {
                return Err(Error::MalformedStructure(format!("duplicate variable {v}")));
            }
        }
        if domain_prefix > variables.len() {
            return Err(Error::MalformedStructure(format!(
                "domain prefix {domain_prefix} exceeds {} variables",
                variables.len()
            )));
        }
        let mut ids = BTreeSet::new();
        let mut eqs = Vec::with_capacity(equations.len());
        for (id, vars) in equations {
            let id = id.as_ref().to_string();
            if !ids.insert(id.clone()) {
                return Err(Error::MalformedStructure(format!("duplicate equation {id}")));
            }
            let mut idx = BTreeSet::new();
            for v in vars {
                let i = *index
                    .get(v.as_ref())
                    .ok_or_else(|| Error::UnknownAttribute(v.as_ref().to_string()))?;
                if !idx.insert(i) {
                    return Err(Error::MalformedStructure(format!(
                        "equation {id} mentions {} twice",
                        v.as_ref()
                    )));
                }
            }
            if idx.is_empty() {
                return Err(Error::MalformedStructure(format!("equation {id} mentions no variable")));
            }
            eqs.push(Equation {
                id,
                vars: idx.into_iter().collect(),
            });
        }
        let s = Structure {
            variables,
            equations: eqs,
            domain_prefix,
        };
        if let Some(v) = (0..s.variables.len()).find(|v| s.equations.iter().all(|e| !e.vars.contains(v))) {
            return Err(Error::MalformedStructure(format!(
                "variable {} appears in no equation",
                s.variables[v]
            )));
        }
        Ok(s)
    }

    /// Builds a structure from an incidence matrix (rows are equations).
    pub fn from_matrix<S: AsRef<str>>(
        variables: &[S],
        equation_ids: &[S],
        matrix: &[Vec<u8>],
        domain_prefix: usize,
    ) -> Result<Structure> {
        if matrix.len() != equation_ids.len() {
            return Err(Error::MalformedStructure("matrix rows do not match equations".into()));
        }
        let mut eqs = Vec::new();
        for (id, row) in equation_ids.iter().zip(matrix) {
            if row.len() != variables.len() {
                return Err(Error::MalformedStructure(format!(
                    "matrix row {} has {} columns, expected {}",
                    id.as_ref(),
                    row.len(),
                    variables.len()
                )));
            }
            let vars = row
                .iter()
                .zip(variables)
                .filter(|(b, _)| **b != 0)
                .map(|(_, v)| v.as_ref())
                .collect::<Vec<_>>();
            eqs.push((id.as_ref(), vars));
        }
        let vars: Vec<&str> = variables.iter().map(|v| v.as_ref()).collect();
        Structure::new(&vars, &eqs, domain_prefix)
    }

    pub fn from_json(text: &str) -> Result<Structure> {
        let file: StructureFile = serde_json::from_str(text)?;
        let eqs: Vec<(&str, Vec<&str>)> = file
            .equations
            .iter()
            .map(|e| (e.id.as_str(), e.vars.iter().map(String::as_str).collect()))
            .collect();
        let vars: Vec<&str> = file.variables.iter().map(String::as_str).collect();
        let s = Structure::new(&vars, &eqs, file.domain_prefix)?;
        if let Some(m) = &file.matrix {
            if *m != s.matrix() {
                return Err(Error::MalformedStructure(
                    "matrix disagrees with the equation variable lists".into(),
                ));
            }
        }
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        let file = StructureFile {
            variables: self.variables.clone(),
            domain_prefix: self.domain_prefix,
            equations: self
                .equations
                .iter()
                .map(|e| EquationFile {
                    id: e.id.clone(),
                    vars: e.vars.iter().map(|v| self.variables[*v].clone()).collect(),
                })
                .collect(),
            matrix: Some(self.matrix()),
        };
        serde_json::to_string_pretty(&file).expect("structure serializes")
    }

    /// Incidence matrix, one row per equation.
    pub fn matrix(&self) -> Vec<Vec<u8>> {
        self.equations
            .iter()
            .map(|e| {
                (0..self.variables.len())
                    .map(|v| u8::from(e.vars.contains(&v)))
                    .collect()
            })
            .collect()
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn domain_prefix(&self) -> usize {
        self.domain_prefix
    }

    pub fn is_domain(&self, var: usize) -> bool {
        var < self.domain_prefix
    }

    pub fn is_complete(&self) -> bool {
        self.equations.len() == self.variables.len()
    }

    pub fn check_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::Incomplete {
                equations: self.equations.len(),
                variables: self.variables.len(),
            })
        }
    }

    /// Variables mentioned by a set of equations.
    pub fn vars_of(&self, eqs: &[usize]) -> BTreeSet<usize> {
        eqs.iter()
            .flat_map(|e| self.equations[*e].vars.iter().copied())
            .collect()
    }

    /// The structure left after removing `eqs` and every variable they mention.
    pub fn residual(&self, eqs: &[usize]) -> Result<Structure> {
        let gone_vars = self.vars_of(eqs);
        let kept_vars: Vec<usize> = (0..self.variables.len()).filter(|v| !gone_vars.contains(v)).collect();
        let prefix = kept_vars.iter().filter(|v| self.is_domain(**v)).count();
        let names: Vec<&str> = kept_vars.iter().map(|v| self.variables[*v].as_str()).collect();
        let rest: Vec<(&str, Vec<&str>)> = self
            .equations
            .iter()
            .enumerate()
            .filter(|(i, _)| !eqs.contains(i))
            .map(|(_, e)| {
                (
                    e.id.as_str(),
                    e.vars
                        .iter()
                        .filter(|v| !gone_vars.contains(v))
                        .map(|v| self.variables[*v].as_str())
                        .collect(),
                )
            })
            .collect();
        Structure::new(&names, &rest, prefix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_with_matrix() {
        let s = Structure::new(&["t", "x"], &[("f1", vec!["t"]), ("f2", vec!["x", "t"])], 1).unwrap();
        let again = Structure::from_json(&s.to_json()).unwrap();
        assert_eq!(s, again);
        assert_eq!(s.matrix(), vec![vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn matrix_mismatch_rejected() {
        let text = r#"{"variables":["a","b"],"equations":[{"id":"f1","vars":["a"]},{"id":"f2","vars":["b"]}],"matrix":[[1,1],[0,1]]}"#;
        assert!(matches!(Structure::from_json(text), Err(Error::MalformedStructure(_))));
    }

    #[test]
    fn reserved_variable_rejected() {
        assert!(matches!(
            Structure::new(&["phi"], &[("f1", vec!["phi"])], 0),
            Err(Error::ReservedAttribute(_))
        ));
    }

    #[test]
    fn unused_variable_rejected() {
        assert!(Structure::new(&["a", "b"], &[("f1", vec!["a"])], 0).is_err());
    }

    #[test]
    fn incomplete_detected() {
        let s = Structure::new(&["a", "b"], &[("f1", vec!["a", "b"])], 0).unwrap();
        assert!(matches!(s.check_complete(), Err(Error::Incomplete { equations: 1, variables: 2 })));
    }
}
