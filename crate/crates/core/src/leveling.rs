//! QoS levels relative to a user request, expert training-set synthesis,
//! and per-service utility.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cba::{self, CbaError, Classifier, Instance, TrainingInstance};
use crate::qos::{scale_value, AttributeExtremes, NormalizedQosVector, Polarity, Schema};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LevelError {
    #[error("invalid level scheme: {0}")]
    InvalidScheme(String),
    #[error("level {level} outside [1, {n_levels}]")]
    LevelOutOfRange { level: usize, n_levels: usize },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("requested range for `{attribute}` is empty")]
    DegenerateRequest { attribute: String },
    #[error("unknown class label `{0}`")]
    UnknownClass(String),
    #[error(transparent)]
    Classification(#[from] CbaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeRequest {
    pub lo: f64,
    pub hi: f64,
    /// 1 is most important.
    #[serde(default = "default_rank")]
    pub rank: u32,
}

fn default_rank() -> u32 {
    1
}

/// Requested raw-unit range and preference rank per attribute.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserRequest {
    pub attributes: BTreeMap<String, AttributeRequest>,
}

impl UserRequest {
    pub fn validate(&self, schema: &Schema) -> Result<(), LevelError> {
        for name in schema.names() {
            let r = self
                .attributes
                .get(name)
                .ok_or_else(|| LevelError::InvalidRequest(format!("missing attribute `{name}`")))?;
            if !(r.lo.is_finite() && r.hi.is_finite()) {
                return Err(LevelError::InvalidRequest(format!(
                    "`{name}` needs finite bounds, got [{}, {}]",
                    r.lo, r.hi
                )));
            }
            if r.lo > r.hi {
                return Err(LevelError::DegenerateRequest {
                    attribute: name.to_string(),
                });
            }
            if r.rank == 0 {
                return Err(LevelError::InvalidRequest(format!("`{name}` rank must be >= 1")));
            }
        }
        if let Some(extra) = self.attributes.keys().find(|k| schema.get(k).is_none()) {
            return Err(LevelError::InvalidRequest(format!(
                "attribute `{extra}` is not in the schema"
            )));
        }
        Ok(())
    }

    /// Schema attributes ordered by preference rank, then name.
    pub fn preference_order<'a>(&self, schema: &'a Schema) -> Vec<&'a str> {
        let mut names: Vec<&str> = schema.names().collect();
        names.sort_by_key(|n| (self.attributes.get(*n).map_or(u32::MAX, |r| r.rank), *n));
        names
    }
}

/// Class coefficients, strictly descending from 1; level `k` uses entry
/// `k - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LevelScheme {
    coefficients: Vec<f64>,
}

impl LevelScheme {
    pub fn new(coefficients: Vec<f64>) -> Result<Self, LevelError> {
        if coefficients.len() < 2 {
            return Err(LevelError::InvalidScheme("need at least 2 levels".into()));
        }
        if coefficients[0] != 1.0 {
            return Err(LevelError::InvalidScheme("first coefficient must be 1".into()));
        }
        if coefficients.iter().any(|&c| !(c > 0.0 && c <= 1.0)) {
            return Err(LevelError::InvalidScheme("coefficients must lie in (0, 1]".into()));
        }
        if coefficients.windows(2).any(|w| w[1] >= w[0]) {
            return Err(LevelError::InvalidScheme(
                "coefficients must be strictly descending".into(),
            ));
        }
        Ok(Self { coefficients })
    }

    /// Evenly spaced coefficients `1, (n-1)/n, ..., 1/n`.
    pub fn linear(n_levels: usize) -> Result<Self, LevelError> {
        Self::new(
            (0..n_levels)
                .map(|k| (n_levels - k) as f64 / n_levels as f64)
                .collect(),
        )
    }

    pub fn n_levels(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient(&self, level: usize) -> Result<f64, LevelError> {
        if level == 0 || level > self.coefficients.len() {
            return Err(LevelError::LevelOutOfRange {
                level,
                n_levels: self.coefficients.len(),
            });
        }
        Ok(self.coefficients[level - 1])
    }
}

impl Default for LevelScheme {
    fn default() -> Self {
        Self {
            coefficients: vec![1.0, 0.75, 0.25],
        }
    }
}

impl TryFrom<Vec<f64>> for LevelScheme {
    type Error = LevelError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<LevelScheme> for Vec<f64> {
    fn from(s: LevelScheme) -> Self {
        s.coefficients
    }
}

pub fn class_label(level: usize) -> String {
    format!("L{level}")
}

pub fn parse_class_label(label: &str) -> Result<usize, LevelError> {
    label
        .strip_prefix('L')
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| LevelError::UnknownClass(label.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredService {
    pub service_id: String,
    pub normalized: NormalizedQosVector,
    pub level: usize,
    pub utility: f64,
}

/// Distance band of every discrete label, per attribute. Two tasks with equal
/// profiles get identical training sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BandProfile {
    /// `(attribute, band per label)` in preference order.
    pub bands: Vec<(String, Vec<usize>)>,
    pub n_levels: usize,
}

/// Band of a normalized shortfall: 0 when inside the requested range,
/// otherwise `(0, 1]` is split evenly into bands `1..n_levels-1`.
pub fn shortfall_band(shortfall: f64, n_levels: usize) -> usize {
    if shortfall <= 0.0 {
        return 0;
    }
    let bands = (n_levels - 1) as f64;
    ((shortfall * bands).ceil() as usize).clamp(1, n_levels - 1)
}

/// Lower edge of the requested range after scaling: the value a normalized
/// attribute must reach to count as inside the request. It may fall outside
/// `[0, 1]` when the request lies beyond the observed values.
fn requested_floor(
    attribute: &str,
    request: &AttributeRequest,
    extremes: &AttributeExtremes,
    polarity: Polarity,
) -> Result<f64, LevelError> {
    let extreme = *extremes
        .get(attribute)
        .ok_or_else(|| LevelError::InvalidRequest(format!("no extremes for `{attribute}`")))?;
    if extreme.spread() == 0.0 {
        // Every candidate shares the value; the attribute cannot separate them.
        return Ok(0.0);
    }
    let a = scale_value(request.lo, extreme, polarity);
    let b = scale_value(request.hi, extreme, polarity);
    Ok(a.min(b))
}

pub fn band_profile(
    request: &UserRequest,
    extremes: &AttributeExtremes,
    schema: &Schema,
    scheme: &LevelScheme,
    bins: u32,
) -> Result<BandProfile, LevelError> {
    if bins < 2 {
        return Err(CbaError::InvalidBins(bins).into());
    }
    request.validate(schema)?;
    let mut bands = Vec::with_capacity(schema.len());
    for name in request.preference_order(schema) {
        let polarity = schema.get(name).expect("validated").polarity;
        let floor = requested_floor(name, &request.attributes[name], extremes, polarity)?;
        let per_label = (0..bins)
            .map(|k| {
                // Upper edge of the bin: a value inside the request never
                // lands in a bin judged outside it.
                let edge = (k + 1) as f64 / bins as f64;
                shortfall_band(floor - edge, scheme.n_levels())
            })
            .collect();
        bands.push((name.to_string(), per_label));
    }
    Ok(BandProfile {
        bands,
        n_levels: scheme.n_levels(),
    })
}

impl BandProfile {
    /// Level of a labelled row and the attribute that decided it (the worst
    /// band, ties going to the more preferred attribute).
    pub fn level_of(&self, labels: &[u32]) -> (usize, Option<&str>) {
        let mut worst: Option<(usize, &str)> = None;
        for ((name, bands), &label) in self.bands.iter().zip(labels) {
            let band = bands[label as usize];
            if band > 0 && worst.is_none_or(|(b, _)| band > b) {
                worst = Some((band, name));
            }
        }
        match worst {
            Some((band, name)) => (band + 1, Some(name)),
            None => (1, None),
        }
    }

    /// Every label combination, labelled by [`BandProfile::level_of`].
    pub fn training_set(&self) -> Vec<TrainingInstance> {
        let bins: Vec<u32> = self.bands.iter().map(|(_, b)| b.len() as u32).collect();
        let total: usize = bins.iter().map(|&b| b as usize).product();
        let mut out = Vec::with_capacity(total);
        let mut labels = vec![0u32; bins.len()];
        for _ in 0..total {
            let (level, _) = self.level_of(&labels);
            let items: Instance = self
                .bands
                .iter()
                .zip(&labels)
                .map(|((name, _), l)| (name.clone(), l.to_string()))
                .collect();
            out.push(TrainingInstance::new(items, class_label(level)));
            // Odometer increment, last attribute fastest.
            for i in (0..labels.len()).rev() {
                labels[i] += 1;
                if labels[i] < bins[i] {
                    break;
                }
                labels[i] = 0;
            }
        }
        out
    }
}

/// Emulates the expert: every discretized label combination, labelled with
/// the level of its worst attribute relative to the request.
pub fn synthesize_training_set(
    request: &UserRequest,
    extremes: &AttributeExtremes,
    schema: &Schema,
    scheme: &LevelScheme,
    bins: u32,
) -> Result<Vec<TrainingInstance>, LevelError> {
    Ok(band_profile(request, extremes, schema, scheme, bins)?.training_set())
}

pub fn discretize_vector(normalized: &NormalizedQosVector, bins: u32) -> Result<Instance, LevelError> {
    normalized
        .values
        .iter()
        .map(|(name, &v)| Ok((name.clone(), cba::discretize(v, bins)?.to_string())))
        .collect()
}

pub fn classify_candidates(
    candidates: &[NormalizedQosVector],
    classifier: &Classifier,
    bins: u32,
) -> Result<Vec<(String, usize)>, LevelError> {
    candidates
        .iter()
        .map(|c| {
            let instance = discretize_vector(c, bins)?;
            let level = parse_class_label(classifier.predict(&instance)?)?;
            Ok((c.service_id.clone(), level))
        })
        .collect()
}

/// `coefficient(level) * mean(normalized values)`.
pub fn compute_utility(
    normalized: &NormalizedQosVector,
    level: usize,
    scheme: &LevelScheme,
) -> Result<f64, LevelError> {
    Ok(scheme.coefficient(level)? * normalized.mean())
}

/// Keeps services whose utility is strictly above `threshold`, in order.
pub fn filter_eligible(scored: &[ScoredService], threshold: f64) -> Vec<ScoredService> {
    scored
        .iter()
        .filter(|s| s.utility > threshold)
        .cloned()
        .collect()
}
