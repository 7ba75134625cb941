use std::fmt;

use serde::{Deserialize, Serialize};

use super::MiningError;

/// Class values of every dataset: whether the expected behavior was active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Active,
    Inactive,
}

impl Class {
    pub fn as_str(self) -> &'static str {
        match self {
            Class::Active => "active",
            Class::Inactive => "inactive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "active" => Some(Class::Active),
            "inactive" => Some(Class::Inactive),
            _ => None,
        }
    }

    pub fn is_active(self) -> bool {
        self == Class::Active
    }
}

impl From<bool> for Class {
    fn from(active: bool) -> Self {
        if active {
            Class::Active
        } else {
            Class::Inactive
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttributeKind {
    Numeric,
    Nominal(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Numeric,
        }
    }

    pub fn nominal(name: impl Into<String>, values: &[&str]) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Nominal(values.iter().map(|v| v.to_string()).collect()),
        }
    }
}

/// A feature value. Nominal values are stored as indices into the
/// attribute's value list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Numeric(f64),
    Nominal(usize),
}

impl Value {
    /// Numeric value, or the nominal index as a number.
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Numeric(v) => v,
            Value::Nominal(i) => i as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub values: Vec<Value>,
    pub class: Class,
}

/// Feature attributes followed by a binary `active`/`inactive` class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    relation: String,
    features: Vec<Attribute>,
    class_name: String,
    rows: Vec<Row>,
}

impl Dataset {
    pub fn new(relation: impl Into<String>, features: Vec<Attribute>, class_name: impl Into<String>) -> Self {
        Self {
            relation: relation.into(),
            features,
            class_name: class_name.into(),
            rows: Vec::new(),
        }
    }

    /// Numeric features only.
    pub fn numeric<S: AsRef<str>>(relation: &str, features: &[S], class_name: &str) -> Self {
        Self::new(
            relation,
            features.iter().map(|f| Attribute::numeric(f.as_ref())).collect(),
            class_name,
        )
    }

    pub fn relation(&self) -> &str {
        &self.relation
    }

    pub fn features(&self) -> &[Attribute] {
        &self.features
    }

    pub fn class_name(&self) -> &str {
        &self.class_name
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|a| a.name == name)
    }

    pub fn push(&mut self, row: Row) -> Result<(), MiningError> {
        if row.values.len() != self.features.len() {
            return Err(MiningError::Arity {
                line: None,
                expected: self.features.len() + 1,
                found: row.values.len() + 1,
            });
        }
        for (attr, value) in self.features.iter().zip(&row.values) {
            let ok = match (&attr.kind, value) {
                (AttributeKind::Numeric, Value::Numeric(v)) => v.is_finite(),
                (AttributeKind::Nominal(values), Value::Nominal(i)) => *i < values.len(),
                _ => false,
            };
            if !ok {
                return Err(MiningError::BadValue {
                    line: None,
                    attribute: attr.name.clone(),
                    value: format!("{value:?}"),
                });
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn push_numeric(&mut self, values: &[f64], class: Class) -> Result<(), MiningError> {
        self.push(Row {
            values: values.iter().map(|&v| Value::Numeric(v)).collect(),
            class,
        })
    }

    /// Same header, selected rows.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            relation: self.relation.clone(),
            features: self.features.clone(),
            class_name: self.class_name.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let active = self.rows.iter().filter(|r| r.class.is_active()).count();
        (active, self.rows.len() - active)
    }
}
