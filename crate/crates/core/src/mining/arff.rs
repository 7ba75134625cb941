//! ARFF-compatible reading and writing.
//!
//! The writer emits exactly: `@relation <name>`, one `@attribute` line per
//! attribute (class last), `@data`, then comma-separated rows with LF
//! endings. The reader also skips `%` comments and blank lines and accepts
//! keywords in any case.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use super::dataset::{Attribute, AttributeKind, Class, Dataset, Row, Value};
use super::MiningError;

pub fn arff_write(ds: &Dataset, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "@relation {}", ds.relation())?;
    for attr in ds.features() {
        match &attr.kind {
            AttributeKind::Numeric => writeln!(out, "@attribute {} numeric", attr.name)?,
            AttributeKind::Nominal(values) => writeln!(out, "@attribute {} {{{}}}", attr.name, values.join(","))?,
        }
    }
    writeln!(out, "@attribute {} {{active,inactive}}", ds.class_name())?;
    writeln!(out, "@data")?;
    for row in ds.rows() {
        let mut line = String::new();
        for (attr, value) in ds.features().iter().zip(&row.values) {
            match (value, &attr.kind) {
                (Value::Numeric(v), _) => line.push_str(&v.to_string()),
                (Value::Nominal(i), AttributeKind::Nominal(values)) => line.push_str(&values[*i]),
                (Value::Nominal(i), AttributeKind::Numeric) => line.push_str(&i.to_string()),
            }
            line.push(',');
        }
        line.push_str(row.class.as_str());
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn arff_to_string(ds: &Dataset) -> String {
    let mut buf = Vec::new();
    arff_write(ds, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("ARFF output is UTF-8")
}

pub fn arff_write_file(ds: &Dataset, path: impl AsRef<Path>) -> Result<(), MiningError> {
    fs::write(path, arff_to_string(ds))?;
    Ok(())
}

pub fn arff_read_file(path: impl AsRef<Path>) -> Result<Dataset, MiningError> {
    arff_read(&fs::read_to_string(path)?)
}

/// Parses ARFF text. The last attribute must be nominal `{active,inactive}`.
pub fn arff_read(source: &str) -> Result<Dataset, MiningError> {
    let mut relation: Option<String> = None;
    let mut attributes: Vec<Attribute> = Vec::new();
    let mut in_data = false;
    let mut dataset: Option<Dataset> = None;

    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let header = |reason: &str| MiningError::MalformedHeader {
            line: line_no,
            reason: reason.to_string(),
        };

        if in_data {
            let ds = dataset.as_mut().expect("dataset built at @data");
            ds.push(parse_row(ds, line, line_no)?)
                .map_err(|e| e.at_line(line_no))?;
            continue;
        }

        let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match keyword.to_ascii_lowercase().as_str() {
            "@relation" => {
                if relation.is_some() {
                    return Err(header("duplicate @relation"));
                }
                if rest.is_empty() {
                    return Err(header("@relation needs a name"));
                }
                relation = Some(rest.to_string());
            }
            "@attribute" => {
                if relation.is_none() {
                    return Err(header("@attribute before @relation"));
                }
                attributes.push(parse_attribute(rest, line_no)?);
            }
            "@data" => {
                let relation = relation.clone().ok_or_else(|| header("@data before @relation"))?;
                let class = attributes.pop().ok_or_else(|| header("no attributes declared"))?;
                match &class.kind {
                    AttributeKind::Nominal(v) if is_class_values(v) => {}
                    _ => return Err(header("last attribute must be nominal {active,inactive}")),
                }
                dataset = Some(Dataset::new(relation, std::mem::take(&mut attributes), class.name));
                in_data = true;
            }
            _ => return Err(header("expected @relation, @attribute or @data")),
        }
    }
    dataset.ok_or(MiningError::MalformedHeader {
        line: source.lines().count(),
        reason: "missing @data section".into(),
    })
}

fn is_class_values(values: &[String]) -> bool {
    let mut sorted: Vec<&str> = values.iter().map(String::as_str).collect();
    sorted.sort_unstable();
    sorted == ["active", "inactive"]
}

fn parse_attribute(rest: &str, line: usize) -> Result<Attribute, MiningError> {
    let (name, kind) = rest.split_once(char::is_whitespace).ok_or(MiningError::MalformedHeader {
        line,
        reason: "@attribute needs a name and a type".into(),
    })?;
    let kind = kind.trim();
    if let Some(body) = kind.strip_prefix('{') {
        let body = body.strip_suffix('}').ok_or(MiningError::MalformedHeader {
            line,
            reason: "unterminated nominal value list".into(),
        })?;
        let values: Vec<String> = body.split(',').map(|v| v.trim().to_string()).collect();
        if values.iter().any(String::is_empty) {
            return Err(MiningError::MalformedHeader {
                line,
                reason: "empty nominal value".into(),
            });
        }
        return Ok(Attribute {
            name: name.to_string(),
            kind: AttributeKind::Nominal(values),
        });
    }
    match kind.to_ascii_lowercase().as_str() {
        "numeric" | "real" | "integer" => Ok(Attribute::numeric(name)),
        other => Err(MiningError::UnknownAttributeKind {
            line,
            kind: other.to_string(),
        }),
    }
}

fn parse_row(ds: &Dataset, line: &str, line_no: usize) -> Result<Row, MiningError> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    let expected = ds.features().len() + 1;
    if fields.len() != expected {
        return Err(MiningError::Arity {
            line: Some(line_no),
            expected,
            found: fields.len(),
        });
    }
    let bad = |attribute: &str, value: &str| MiningError::BadValue {
        line: Some(line_no),
        attribute: attribute.to_string(),
        value: value.to_string(),
    };
    let mut values = Vec::with_capacity(expected - 1);
    for (attr, field) in ds.features().iter().zip(&fields) {
        let value = match &attr.kind {
            AttributeKind::Numeric => Value::Numeric(field.parse().map_err(|_| bad(&attr.name, field))?),
            AttributeKind::Nominal(options) => {
                Value::Nominal(options.iter().position(|o| o == field).ok_or_else(|| bad(&attr.name, field))?)
            }
        };
        values.push(value);
    }
    let class_field = fields[expected - 1];
    let class = Class::parse(class_field).ok_or_else(|| bad(ds.class_name(), class_field))?;
    Ok(Row { values, class })
}
