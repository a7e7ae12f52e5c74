//! Classification based on associations.
//!
//! Class association rules are mined level-wise with Apriori over
//! `(itemset, class)` pairs, sorted by precedence, and reduced to an ordered
//! classifier with a single coverage pass.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitset::BitSet as TidSet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CbaError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("value {0} outside [0, 1]")]
    ValueOutOfRange(f64),
    #[error("at least 2 bins are required, got {0}")]
    InvalidBins(u32),
    #[error("invalid mining config: {0}")]
    InvalidConfig(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// One `attribute=value` pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Item {
    pub attribute: String,
    pub value: String,
}

impl Item {
    pub fn new(attribute: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            attribute: attribute.into(),
            value: value.into(),
        }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.attribute, self.value)
    }
}

/// Attribute name to discrete label, one entry per attribute.
pub type Instance = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingInstance {
    pub items: Instance,
    pub class_label: String,
}

impl TrainingInstance {
    pub fn new(items: Instance, class_label: impl Into<String>) -> Self {
        Self {
            items,
            class_label: class_label.into(),
        }
    }
}

pub type Antecedent = BTreeSet<Item>;

pub fn antecedent_matches(antecedent: &Antecedent, instance: &Instance) -> bool {
    antecedent
        .iter()
        .all(|item| instance.get(&item.attribute) == Some(&item.value))
}

pub fn render_antecedent(antecedent: &Antecedent) -> String {
    let parts: Vec<String> = antecedent.iter().map(Item::to_string).collect();
    parts.join(",")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAssociationRule {
    pub antecedent: Antecedent,
    pub consequent: String,
    pub support: f64,
    pub confidence: f64,
}

impl fmt::Display for ClassAssociationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} => {} [{} {}]",
            render_antecedent(&self.antecedent),
            self.consequent,
            self.support,
            self.confidence
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub min_support: f64,
    pub min_confidence: f64,
    /// `None` means no limit beyond the number of attributes.
    #[serde(default)]
    pub max_antecedent_size: Option<usize>,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            min_support: 0.01,
            min_confidence: 0.5,
            max_antecedent_size: None,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<(), CbaError> {
        let in_unit = |v: f64| v > 0.0 && v <= 1.0;
        if !in_unit(self.min_support) {
            return Err(CbaError::InvalidConfig(format!(
                "min_support {} not in (0, 1]",
                self.min_support
            )));
        }
        if !in_unit(self.min_confidence) {
            return Err(CbaError::InvalidConfig(format!(
                "min_confidence {} not in (0, 1]",
                self.min_confidence
            )));
        }
        if self.max_antecedent_size == Some(0) {
            return Err(CbaError::InvalidConfig("max_antecedent_size must be positive".into()));
        }
        Ok(())
    }
}

/// Equal-width label for a normalized value: `floor(value * bins)`, with 1.0
/// folded into the top bin.
pub fn discretize(value: f64, bins: u32) -> Result<u32, CbaError> {
    if bins < 2 {
        return Err(CbaError::InvalidBins(bins));
    }
    if !(0.0..=1.0).contains(&value) {
        return Err(CbaError::ValueOutOfRange(value));
    }
    Ok(((value * bins as f64).floor() as u32).min(bins - 1))
}

/// Returns the shared attribute set of `data`.
fn schema_of(data: &[TrainingInstance]) -> Result<Vec<String>, CbaError> {
    let first = data.first().ok_or(CbaError::EmptyTrainingSet)?;
    let attributes: Vec<String> = first.items.keys().cloned().collect();
    for (i, inst) in data.iter().enumerate() {
        if inst.items.len() != attributes.len()
            || !inst.items.keys().zip(&attributes).all(|(a, b)| a == b)
        {
            return Err(CbaError::SchemaMismatch(format!(
                "instance {i} has attributes {:?}, expected {:?}",
                inst.items.keys().collect::<Vec<_>>(),
                attributes
            )));
        }
    }
    Ok(attributes)
}

/// Frequent ruleitem: item ids (sorted) plus the rows containing them.
struct RuleItem {
    items: Vec<usize>,
    tids: TidSet,
}

/// Mines every class association rule meeting the support, confidence and
/// antecedent-size limits.
pub fn mine_cars(
    data: &[TrainingInstance],
    config: &MiningConfig,
) -> Result<Vec<ClassAssociationRule>, CbaError> {
    config.validate()?;
    let attributes = schema_of(data)?;
    let n = data.len();
    let max_len = config
        .max_antecedent_size
        .unwrap_or(attributes.len())
        .min(attributes.len());

    // Vertical layout: one tidset per item and per class. Item ids follow
    // (attribute, value) order so sorted id lists render in antecedent order.
    let mut item_keys: BTreeSet<(usize, &str)> = BTreeSet::new();
    for inst in data {
        for (a, value) in inst.items.values().enumerate() {
            item_keys.insert((a, value.as_str()));
        }
    }
    let item_keys: Vec<(usize, &str)> = item_keys.into_iter().collect();
    let item_index: HashMap<(usize, &str), usize> =
        item_keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let mut item_tids = vec![TidSet::new(n); item_keys.len()];
    let classes: Vec<&str> = data
        .iter()
        .map(|i| i.class_label.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut class_tids = vec![TidSet::new(n); classes.len()];
    for (row, inst) in data.iter().enumerate() {
        for (a, value) in inst.items.values().enumerate() {
            item_tids[item_index[&(a, value.as_str())]].insert(row);
        }
        let c = classes.binary_search(&inst.class_label.as_str()).unwrap();
        class_tids[c].insert(row);
    }

    let support_of = |count: usize| count as f64 / n as f64;
    let mut rules = Vec::new();
    let mut emit = |items: &[usize], tids: &TidSet, class: usize, rule_count: usize| {
        let confidence = rule_count as f64 / tids.count() as f64;
        if confidence >= config.min_confidence {
            rules.push(ClassAssociationRule {
                antecedent: items
                    .iter()
                    .map(|&id| {
                        let (a, v) = item_keys[id];
                        Item::new(attributes[a].clone(), v)
                    })
                    .collect(),
                consequent: classes[class].to_string(),
                support: support_of(rule_count),
                confidence,
            });
        }
    };

    // Level 1.
    let mut frontier: Vec<Vec<RuleItem>> = Vec::with_capacity(classes.len());
    for (c, ctids) in class_tids.iter().enumerate() {
        let mut level = Vec::new();
        for (id, tids) in item_tids.iter().enumerate() {
            let rule_count = tids.and_count(ctids);
            if support_of(rule_count) >= config.min_support {
                emit(&[id], tids, c, rule_count);
                level.push(RuleItem {
                    items: vec![id],
                    tids: tids.clone(),
                });
            }
        }
        frontier.push(level);
    }

    // Level k from frequent level k-1 of the same class.
    for _k in 2..=max_len {
        let mut any = false;
        for (c, ctids) in class_tids.iter().enumerate() {
            let previous = std::mem::take(&mut frontier[c]);
            let known: HashSet<&[usize]> = previous.iter().map(|r| r.items.as_slice()).collect();
            let mut next = Vec::new();
            for (i, a) in previous.iter().enumerate() {
                let prefix = &a.items[..a.items.len() - 1];
                for b in &previous[i + 1..] {
                    if &b.items[..b.items.len() - 1] != prefix {
                        break;
                    }
                    let (last_a, last_b) = (*a.items.last().unwrap(), *b.items.last().unwrap());
                    if item_keys[last_a].0 == item_keys[last_b].0 {
                        continue;
                    }
                    let mut items = a.items.clone();
                    items.push(last_b);
                    let all_subsets_frequent = (0..items.len() - 2).all(|skip| {
                        let subset: Vec<usize> = items
                            .iter()
                            .enumerate()
                            .filter(|&(j, _)| j != skip)
                            .map(|(_, &id)| id)
                            .collect();
                        known.contains(subset.as_slice())
                    });
                    if !all_subsets_frequent {
                        continue;
                    }
                    let tids = a.tids.and(&item_tids[last_b]);
                    let rule_count = tids.and_count(ctids);
                    if support_of(rule_count) >= config.min_support {
                        emit(&items, &tids, c, rule_count);
                        next.push(RuleItem { items, tids });
                    }
                }
            }
            any |= !next.is_empty();
            frontier[c] = next;
        }
        if !any {
            break;
        }
    }
    Ok(rules)
}

/// Precedence: confidence desc, support desc, shorter antecedent, then
/// antecedent text and class name.
pub fn compare_precedence(
    a: &ClassAssociationRule,
    b: &ClassAssociationRule,
    a_text: &str,
    b_text: &str,
) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then_with(|| b.support.total_cmp(&a.support))
        .then_with(|| a.antecedent.len().cmp(&b.antecedent.len()))
        .then_with(|| a_text.cmp(b_text))
        .then_with(|| a.consequent.cmp(&b.consequent))
}

pub fn sort_rules(rules: Vec<ClassAssociationRule>) -> Vec<ClassAssociationRule> {
    let mut keyed: Vec<(String, ClassAssociationRule)> = rules
        .into_iter()
        .map(|r| (render_antecedent(&r.antecedent), r))
        .collect();
    keyed.sort_by(|(ta, a), (tb, b)| compare_precedence(a, b, ta, tb));
    keyed.into_iter().map(|(_, r)| r).collect()
}

/// Ordered rule list with a fallback class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub attributes: Vec<String>,
    pub rules: Vec<ClassAssociationRule>,
    pub default_class: String,
}

fn majority<'a>(labels: impl Iterator<Item = &'a str>) -> Option<&'a str> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    // max_by_key keeps the last maximum; iterate in reverse so the
    // lexicographically smallest class wins ties.
    counts
        .into_iter()
        .rev()
        .max_by_key(|&(_, n)| n)
        .map(|(l, _)| l)
}

/// Single coverage pass over `rules`, which must already be sorted.
pub fn build_classifier(
    data: &[TrainingInstance],
    rules: &[ClassAssociationRule],
) -> Result<Classifier, CbaError> {
    let attributes = schema_of(data)?;
    let mut covered = vec![false; data.len()];
    let mut kept = Vec::new();
    for rule in rules {
        let matched: Vec<usize> = (0..data.len())
            .filter(|&i| !covered[i] && antecedent_matches(&rule.antecedent, &data[i].items))
            .collect();
        if matched.iter().any(|&i| data[i].class_label == rule.consequent) {
            for i in matched {
                covered[i] = true;
            }
            kept.push(rule.clone());
        }
    }
    let uncovered = data
        .iter()
        .zip(&covered)
        .filter(|(_, &c)| !c)
        .map(|(d, _)| d.class_label.as_str());
    let default_class = match majority(uncovered) {
        Some(c) => c,
        None => majority(data.iter().map(|d| d.class_label.as_str())).unwrap(),
    }
    .to_string();
    Ok(Classifier {
        attributes,
        rules: kept,
        default_class,
    })
}

/// Mines, sorts and builds in one call.
pub fn train(data: &[TrainingInstance], config: &MiningConfig) -> Result<Classifier, CbaError> {
    let rules = sort_rules(mine_cars(data, config)?);
    build_classifier(data, &rules)
}

impl Classifier {
    pub fn predict(&self, instance: &Instance) -> Result<&str, CbaError> {
        if instance.len() != self.attributes.len()
            || !instance.keys().zip(&self.attributes).all(|(a, b)| a == b)
        {
            return Err(CbaError::SchemaMismatch(format!(
                "instance attributes {:?}, classifier expects {:?}",
                instance.keys().collect::<Vec<_>>(),
                self.attributes
            )));
        }
        Ok(self
            .rules
            .iter()
            .find(|r| antecedent_matches(&r.antecedent, instance))
            .map_or(self.default_class.as_str(), |r| r.consequent.as_str()))
    }

    /// Line-oriented text form: an `ATTRIBUTES` header, one rule per line,
    /// then `DEFAULT class`.
    pub fn to_text(&self) -> String {
        let mut out = format!("ATTRIBUTES {}\n", self.attributes.join(","));
        for rule in &self.rules {
            out.push_str(&rule.to_string());
            out.push('\n');
        }
        out.push_str(&format!("DEFAULT {}\n", self.default_class));
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CbaError> {
        let err = |line: usize, message: String| CbaError::Parse { line, message };
        let mut attributes = None;
        let mut rules = Vec::new();
        let mut default_class = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if default_class.is_some() {
                return Err(err(line_no, "content after DEFAULT line".into()));
            }
            if let Some(rest) = line.strip_prefix("ATTRIBUTES") {
                attributes = Some(
                    rest.trim()
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(str::to_string)
                        .collect::<Vec<_>>(),
                );
            } else if let Some(rest) = line.strip_prefix("DEFAULT ") {
                default_class = Some(rest.trim().to_string());
            } else {
                rules.push(parse_rule(line).map_err(|m| err(line_no, m))?);
            }
        }
        let attributes = attributes.ok_or_else(|| err(1, "missing ATTRIBUTES header".into()))?;
        let default_class =
            default_class.ok_or_else(|| err(text.lines().count(), "missing DEFAULT line".into()))?;
        Ok(Self {
            attributes,
            rules,
            default_class,
        })
    }
}

fn parse_rule(line: &str) -> Result<ClassAssociationRule, String> {
    let (lhs, rhs) = line.split_once(" => ").ok_or("expected `=>`")?;
    let antecedent = lhs
        .split(',')
        .map(|tok| {
            tok.split_once('=')
                .map(|(a, v)| Item::new(a, v))
                .ok_or_else(|| format!("bad item `{tok}`"))
        })
        .collect::<Result<Antecedent, _>>()?;
    let (class, stats) = rhs.split_once(" [").ok_or("expected `[supp conf]`")?;
    let stats = stats.strip_suffix(']').ok_or("unterminated `[`")?;
    let (supp, conf) = stats.split_once(' ').ok_or("expected two numbers")?;
    let parse = |s: &str| s.parse::<f64>().map_err(|e| format!("bad number `{s}`: {e}"));
    Ok(ClassAssociationRule {
        antecedent,
        consequent: class.to_string(),
        support: parse(supp)?,
        confidence: parse(conf)?,
    })
}
