use std::collections::{BTreeMap, HashMap, HashSet};

use crate::composer::{edge_key, CompositionPlan, ServiceInterface};
use crate::ontology::{MatchError, Taxonomy};
use crate::qos::{Polarity, QosAttribute, QosVector, Schema};

use super::DataError;

#[derive(Debug, Clone, PartialEq)]
pub struct RegistryRecord {
    pub service_id: String,
    pub task_id: String,
    pub values: BTreeMap<String, f64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl RegistryRecord {
    pub fn qos(&self) -> QosVector {
        QosVector::new(self.service_id.clone(), self.values.clone())
    }
}

/// Candidate services with their attribute schema, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    schema: Schema,
    records: Vec<RegistryRecord>,
}

impl Registry {
    pub fn new(schema: Schema, records: Vec<RegistryRecord>) -> Result<Self, DataError> {
        if records.is_empty() {
            return Err(DataError::EmptyRegistry);
        }
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if !seen.insert(r.service_id.as_str()) {
                return Err(DataError::Parse {
                    line: i + 2,
                    message: format!("duplicate service_id `{}`", r.service_id),
                });
            }
            if r.values.len() != schema.len() || schema.names().any(|n| !r.values.contains_key(n)) {
                return Err(DataError::Parse {
                    line: i + 2,
                    message: format!("service `{}` does not match the schema", r.service_id),
                });
            }
            if let Some((name, _)) = r.values.iter().find(|(_, v)| !v.is_finite()) {
                return Err(DataError::NonFiniteValue {
                    line: i + 2,
                    attribute: name.clone(),
                });
            }
        }
        Ok(Self { schema, records })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn records(&self) -> &[RegistryRecord] {
        &self.records
    }

    pub fn get(&self, service_id: &str) -> Option<&RegistryRecord> {
        self.records.iter().find(|r| r.service_id == service_id)
    }

    /// Records grouped by task, each group in file order.
    pub fn by_task(&self) -> BTreeMap<&str, Vec<&RegistryRecord>> {
        let mut out: BTreeMap<&str, Vec<&RegistryRecord>> = BTreeMap::new();
        for r in &self.records {
            out.entry(r.task_id.as_str()).or_default().push(r);
        }
        out
    }

    pub fn services_by_task(&self) -> HashMap<String, Vec<String>> {
        let mut out: HashMap<String, Vec<String>> = HashMap::new();
        for r in &self.records {
            out.entry(r.task_id.clone())
                .or_default()
                .push(r.service_id.clone());
        }
        out
    }

    /// Concept ids of every service's parameters.
    pub fn interfaces(&self, taxonomy: &Taxonomy) -> Result<HashMap<String, ServiceInterface>, MatchError> {
        self.records
            .iter()
            .map(|r| {
                let ids = |cs: &[String]| {
                    cs.iter()
                        .map(|c| taxonomy.concept_id(c))
                        .collect::<Result<Vec<_>, _>>()
                };
                Ok((
                    r.service_id.clone(),
                    ServiceInterface {
                        inputs: ids(&r.inputs)?,
                        outputs: ids(&r.outputs)?,
                    },
                ))
            })
            .collect()
    }

    /// Referential checks against the plan and taxonomy: every task known,
    /// every concept declared, every wired parameter position present.
    pub fn validate_against(&self, plan: &CompositionPlan, taxonomy: &Taxonomy) -> Result<(), DataError> {
        for r in &self.records {
            if !plan.contains(&r.task_id) {
                return Err(DataError::UnknownTask {
                    service: r.service_id.clone(),
                    task: r.task_id.clone(),
                });
            }
            for c in r.inputs.iter().chain(&r.outputs) {
                if !taxonomy.contains(c) {
                    return Err(MatchError::UnknownConcept(c.clone()).into());
                }
            }
        }
        let groups = self.by_task();
        let none = Vec::new();
        for ((from, to), pairs) in plan.all_link_pairs() {
            for a in groups.get(from.as_str()).unwrap_or(&none) {
                for b in groups.get(to.as_str()).unwrap_or(&none) {
                    if let Some(&(o, i)) = pairs
                        .iter()
                        .find(|(o, i)| *o >= a.outputs.len() || *i >= b.inputs.len())
                    {
                        return Err(DataError::UnknownParameter {
                            edge: edge_key(from, to),
                            from: a.service_id.clone(),
                            to: b.service_id.clone(),
                            out_index: o,
                            in_index: i,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

fn parse_attribute_column(col: &str) -> Result<QosAttribute, DataError> {
    let mut parts = col.splitn(3, ':');
    let name = parts.next().unwrap_or_default().trim();
    let polarity = parts
        .next()
        .and_then(|p| {
            let mut chars = p.trim().chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Polarity::from_symbol(c),
                _ => None,
            }
        })
        .ok_or_else(|| DataError::UnknownAttribute(col.to_string()))?;
    if name.is_empty() {
        return Err(DataError::UnknownAttribute(col.to_string()));
    }
    let unit = parts.next().unwrap_or_default().trim();
    Ok(QosAttribute::new(name, polarity, unit))
}

fn split_concepts(field: &str) -> Vec<String> {
    field
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Parses the registry CSV. The header is
/// `service_id,task_id,<name:+|->...,inputs,outputs`; concept lists are
/// semicolon separated.
pub fn parse_registry(text: &str) -> Result<Registry, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 4
        || cols[0] != "service_id"
        || cols[1] != "task_id"
        || cols[cols.len() - 2] != "inputs"
        || cols[cols.len() - 1] != "outputs"
    {
        return Err(DataError::Parse {
            line: 1,
            message: "header must be service_id,task_id,<attributes>,inputs,outputs".into(),
        });
    }
    let attributes = cols[2..cols.len() - 2]
        .iter()
        .map(|c| parse_attribute_column(c))
        .collect::<Result<Vec<_>, _>>()?;
    let schema = Schema::new(attributes)?;

    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != cols.len() {
            return Err(DataError::Parse {
                line,
                message: format!("expected {} fields, found {}", cols.len(), row.len()),
            });
        }
        let service_id = row[0].to_string();
        if service_id.is_empty() || row[1].is_empty() {
            return Err(DataError::Parse {
                line,
                message: "empty service_id or task_id".into(),
            });
        }
        if let Some(first) = seen.insert(service_id.clone(), line) {
            return Err(DataError::Parse {
                line,
                message: format!("duplicate service_id `{service_id}` (first on line {first})"),
            });
        }
        let mut values = BTreeMap::new();
        for (attr, raw) in schema.attributes().iter().zip(row.iter().skip(2)) {
            let v: f64 = raw.parse().map_err(|_| DataError::Parse {
                line,
                message: format!("`{raw}` is not a number for `{}`", attr.name),
            })?;
            if !v.is_finite() {
                return Err(DataError::NonFiniteValue {
                    line,
                    attribute: attr.name.clone(),
                });
            }
            values.insert(attr.name.clone(), v);
        }
        records.push(RegistryRecord {
            service_id,
            task_id: row[1].to_string(),
            values,
            inputs: split_concepts(&row[cols.len() - 2]),
            outputs: split_concepts(&row[cols.len() - 1]),
        });
    }
    Registry::new(schema, records)
}

pub fn write_registry(registry: &Registry) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["service_id".to_string(), "task_id".to_string()];
    for a in registry.schema().attributes() {
        header.push(if a.unit.is_empty() {
            format!("{}:{}", a.name, a.polarity.symbol())
        } else {
            format!("{}:{}:{}", a.name, a.polarity.symbol(), a.unit)
        });
    }
    header.extend(["inputs".to_string(), "outputs".to_string()]);
    writer.write_record(&header).expect("in-memory write");
    for r in registry.records() {
        let mut row = vec![r.service_id.clone(), r.task_id.clone()];
        row.extend(registry.schema().names().map(|n| r.values[n].to_string()));
        row.push(r.inputs.join(";"));
        row.push(r.outputs.join(";"));
        writer.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8")
}
