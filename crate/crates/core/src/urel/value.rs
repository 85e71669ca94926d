use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

/// A cell value. Keeps the text as written; equality and ordering use the
/// numeric reading when there is one, so `.5`, `0.5` and `0.50` coincide.
#[derive(Clone, Debug)]
pub struct Value {
    text: String,
    num: Option<f64>,
}

impl Value {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let num = text
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(|v| if v == 0.0 { 0.0 } else { v });
        Value { text, num }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn as_f64(&self) -> Option<f64> {
        self.num
    }

    /// Canonical decimal form, used as the identity of the value.
    pub fn canonical(&self) -> String {
        match self.num {
            Some(v) => format!("{v}"),
            None => self.text.clone(),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::new(s)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::new(format!("{v}"))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.num, other.num) {
            (Some(a), Some(b)) => a.total_cmp(&b),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.text.cmp(&other.text),
        }
    }
}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self.num {
            Some(v) => {
                0u8.hash(state);
                v.to_bits().hash(state);
            }
            None => {
                1u8.hash(state);
                self.text.hash(state);
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_spellings_coincide() {
        assert_eq!(Value::new(".5"), Value::new("0.50"));
        assert_eq!(Value::new("-0"), Value::new("0"));
        assert_ne!(Value::new("1"), Value::new("1.5"));
        assert_eq!(Value::new(".397").canonical(), "0.397");
        assert_eq!(Value::new(".397").to_string(), ".397");
    }

    #[test]
    fn numbers_sort_before_text() {
        let mut v = [Value::new("b"), Value::new("10"), Value::new("9"), Value::new("a")];
        v.sort();
        let s: Vec<String> = v.iter().map(Value::to_string).collect();
        assert_eq!(s, ["9", "10", "a", "b"]);
    }

    #[test]
    fn nan_is_text() {
        assert_eq!(Value::new("NaN").as_f64(), None);
    }
}
