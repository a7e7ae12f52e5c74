//! QoS attributes and the scaling phase.
//!
//! Raw attribute values are min-max scaled over one task's candidate set so
//! that every value lands in `[0, 1]` and larger always means better.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QosError {
    #[error("candidate set is empty")]
    EmptyCandidateSet,
    #[error("schema mismatch for service `{service}`: {detail}")]
    SchemaMismatch { service: String, detail: String },
    #[error("service `{service}`: value {value} of `{attribute}` outside [{min}, {max}]")]
    OutOfRangeValue {
        service: String,
        attribute: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("service `{service}`: non-finite value for `{attribute}`")]
    NonFiniteValue { service: String, attribute: String },
    #[error("duplicate attribute `{0}` in schema")]
    DuplicateAttribute(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    /// Larger is better (availability, throughput).
    Positive,
    /// Smaller is better (response time, latency).
    Negative,
}

impl Polarity {
    pub fn symbol(self) -> char {
        match self {
            Polarity::Positive => '+',
            Polarity::Negative => '-',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '+' => Some(Polarity::Positive),
            '-' => Some(Polarity::Negative),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QosAttribute {
    pub name: String,
    pub polarity: Polarity,
    #[serde(default)]
    pub unit: String,
}

impl QosAttribute {
    pub fn new(name: impl Into<String>, polarity: Polarity, unit: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            polarity,
            unit: unit.into(),
        }
    }
}

/// Ordered list of attributes with unique names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    attributes: Vec<QosAttribute>,
}

impl Schema {
    pub fn new(attributes: Vec<QosAttribute>) -> Result<Self, QosError> {
        let mut seen = std::collections::BTreeSet::new();
        for attr in &attributes {
            if !seen.insert(attr.name.as_str()) {
                return Err(QosError::DuplicateAttribute(attr.name.clone()));
            }
        }
        Ok(Self { attributes })
    }

    pub fn attributes(&self) -> &[QosAttribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&QosAttribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }
}

/// Raw QoS measurements of one service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QosVector {
    pub service_id: String,
    pub values: BTreeMap<String, f64>,
}

impl QosVector {
    pub fn new(service_id: impl Into<String>, values: BTreeMap<String, f64>) -> Self {
        Self {
            service_id: service_id.into(),
            values,
        }
    }

    fn check_finite(&self) -> Result<(), QosError> {
        match self.values.iter().find(|(_, v)| !v.is_finite()) {
            Some((name, _)) => Err(QosError::NonFiniteValue {
                service: self.service_id.clone(),
                attribute: name.clone(),
            }),
            None => Ok(()),
        }
    }
}

/// Scaled QoS values, each in `[0, 1]` with higher meaning better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedQosVector {
    pub service_id: String,
    pub values: BTreeMap<String, f64>,
}

impl NormalizedQosVector {
    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.values().sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extreme {
    pub min: f64,
    pub max: f64,
}

impl Extreme {
    pub fn spread(&self) -> f64 {
        self.max - self.min
    }

    pub fn contains(&self, v: f64) -> bool {
        self.min <= v && v <= self.max
    }
}

/// Per-attribute minimum and maximum over one candidate set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AttributeExtremes(pub BTreeMap<String, Extreme>);

impl AttributeExtremes {
    pub fn get(&self, attribute: &str) -> Option<&Extreme> {
        self.0.get(attribute)
    }
}

fn same_keys<V, W>(a: &BTreeMap<String, V>, b: &BTreeMap<String, W>) -> bool {
    a.len() == b.len() && a.keys().zip(b.keys()).all(|(x, y)| x == y)
}

pub fn compute_extremes(candidates: &[QosVector]) -> Result<AttributeExtremes, QosError> {
    let first = candidates.first().ok_or(QosError::EmptyCandidateSet)?;
    let mut extremes: BTreeMap<String, Extreme> = BTreeMap::new();
    for candidate in candidates {
        if !same_keys(&candidate.values, &first.values) {
            return Err(QosError::SchemaMismatch {
                service: candidate.service_id.clone(),
                detail: format!(
                    "attributes {:?} differ from {:?}",
                    candidate.values.keys().collect::<Vec<_>>(),
                    first.values.keys().collect::<Vec<_>>()
                ),
            });
        }
        candidate.check_finite()?;
        for (name, &v) in &candidate.values {
            extremes
                .entry(name.clone())
                .and_modify(|e| {
                    e.min = e.min.min(v);
                    e.max = e.max.max(v);
                })
                .or_insert(Extreme { min: v, max: v });
        }
    }
    Ok(AttributeExtremes(extremes))
}

/// Applies the negative/positive min-max formula to a single value without
/// range checking. A zero spread maps every value to 1.
pub fn scale_value(value: f64, extreme: Extreme, polarity: Polarity) -> f64 {
    let spread = extreme.spread();
    if spread == 0.0 {
        return 1.0;
    }
    match polarity {
        Polarity::Negative => (extreme.max - value) / spread,
        Polarity::Positive => (value - extreme.min) / spread,
    }
}

pub fn normalize(
    candidate: &QosVector,
    extremes: &AttributeExtremes,
    schema: &Schema,
) -> Result<NormalizedQosVector, QosError> {
    let mismatch = |detail: String| QosError::SchemaMismatch {
        service: candidate.service_id.clone(),
        detail,
    };
    if candidate.values.len() != schema.len() {
        return Err(mismatch(format!(
            "{} values for a {}-attribute schema",
            candidate.values.len(),
            schema.len()
        )));
    }
    candidate.check_finite()?;
    let mut values = BTreeMap::new();
    for attr in schema.attributes() {
        let value = *candidate
            .values
            .get(&attr.name)
            .ok_or_else(|| mismatch(format!("missing attribute `{}`", attr.name)))?;
        let extreme = *extremes
            .get(&attr.name)
            .ok_or_else(|| mismatch(format!("no extremes for `{}`", attr.name)))?;
        if !extreme.contains(value) {
            return Err(QosError::OutOfRangeValue {
                service: candidate.service_id.clone(),
                attribute: attr.name.clone(),
                value,
                min: extreme.min,
                max: extreme.max,
            });
        }
        values.insert(attr.name.clone(), scale_value(value, extreme, attr.polarity));
    }
    Ok(NormalizedQosVector {
        service_id: candidate.service_id.clone(),
        values,
    })
}

/// Computes extremes over `candidates` and normalizes each of them.
pub fn normalize_all(
    candidates: &[QosVector],
    schema: &Schema,
) -> Result<(AttributeExtremes, Vec<NormalizedQosVector>), QosError> {
    let extremes = compute_extremes(candidates)?;
    let normalized = candidates
        .iter()
        .map(|c| normalize(c, &extremes, schema))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((extremes, normalized))
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}
