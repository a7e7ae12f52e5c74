use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::composer::CompositionPlan;
use crate::leveling::{AttributeRequest, UserRequest};
use crate::ontology::{Taxonomy, TaxonomyAxioms};
use crate::qos::{Polarity, QosAttribute, Schema};

use super::{DataError, Registry, RegistryRecord};

/// Generator ranges loosely follow the magnitudes of the public QWS
/// measurements. They are generator policy, not reference data.
const QWS_ATTRIBUTES: [(&str, Polarity, &str, f64, f64); 9] = [
    ("response_time", Polarity::Negative, "ms", 37.0, 4990.0),
    ("availability", Polarity::Positive, "%", 7.0, 100.0),
    ("throughput", Polarity::Positive, "req/s", 0.1, 43.1),
    ("reliability", Polarity::Positive, "%", 33.0, 89.0),
    ("successability", Polarity::Positive, "%", 8.0, 100.0),
    ("compliance", Polarity::Positive, "%", 33.0, 100.0),
    ("best_practices", Polarity::Positive, "%", 5.0, 95.0),
    ("latency", Polarity::Negative, "ms", 0.25, 4140.0),
    ("documentation", Polarity::Positive, "%", 1.0, 96.0),
];

/// Attribute `index` of the generator schema with its value range. Beyond
/// the nine QWS-like attributes, positive unit-range attributes are used.
pub fn qws_attribute(index: usize) -> (QosAttribute, f64, f64) {
    match QWS_ATTRIBUTES.get(index) {
        Some(&(name, polarity, unit, lo, hi)) => (QosAttribute::new(name, polarity, unit), lo, hi),
        None => (QosAttribute::new(format!("attr{index}"), Polarity::Positive, ""), 0.0, 1.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticInstance {
    pub registry: Registry,
    pub plan: CompositionPlan,
    pub taxonomy: Taxonomy,
    pub request: UserRequest,
}

/// A request accepting the better 60% of every generator range.
pub fn synthetic_request(attributes: usize) -> UserRequest {
    let attributes = (0..attributes)
        .map(|i| {
            let (attr, lo, hi) = qws_attribute(i);
            let span = hi - lo;
            let range = match attr.polarity {
                Polarity::Positive => AttributeRequest {
                    lo: lo + 0.4 * span,
                    hi,
                    rank: i as u32 + 1,
                },
                Polarity::Negative => AttributeRequest {
                    lo,
                    hi: lo + 0.6 * span,
                    rank: i as u32 + 1,
                },
            };
            (attr.name, range)
        })
        .collect();
    UserRequest { attributes }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Deterministic chain-shaped instance with `tasks * candidates` services.
///
/// The taxonomy is a random tree over `4 * tasks` concepts. For every plan
/// edge one anchor concept is drawn; the upstream outputs and downstream
/// inputs on that edge are taken from the anchor's root path extended by one
/// descending branch, so every generated link is admissible. A few sibling
/// pairs are declared disjoint.
pub fn generate_synthetic(
    tasks: usize,
    candidates: usize,
    attributes: usize,
    seed: u64,
) -> Result<SyntheticInstance, DataError> {
    let (tasks, candidates, attributes) = (tasks.max(1), candidates.max(1), attributes.max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n_concepts = 4 * tasks;
    let concepts: Vec<String> = (0..n_concepts).map(|i| format!("C{i}")).collect();
    let mut parent = vec![usize::MAX; n_concepts];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n_concepts];
    for (k, slot) in parent.iter_mut().enumerate().skip(1) {
        let p = rng.gen_range(0..k);
        *slot = p;
        children[p].push(k);
    }
    let mut disjoint = Vec::new();
    let sibling_groups: Vec<&Vec<usize>> = children.iter().filter(|c| c.len() >= 2).collect();
    for _ in 0..(tasks / 4).max(1) {
        if let Some(group) = sibling_groups.choose(&mut rng) {
            let picked: Vec<&usize> = group.choose_multiple(&mut rng, 2).collect();
            let pair = (concepts[*picked[0]].clone(), concepts[*picked[1]].clone());
            if !disjoint.contains(&pair) && !disjoint.contains(&(pair.1.clone(), pair.0.clone())) {
                disjoint.push(pair);
            }
        }
    }
    let taxonomy = Taxonomy::new(TaxonomyAxioms {
        concepts: concepts.clone(),
        subclass: (1..n_concepts)
            .map(|k| (concepts[k].clone(), concepts[parent[k]].clone()))
            .collect(),
        equivalent: Vec::new(),
        disjoint,
    })?;

    // Comparable concept set per edge: root path of the anchor plus one
    // random branch below it.
    let comparable = |anchor: usize, rng: &mut ChaCha8Rng| {
        let mut path = vec![anchor];
        let mut up = anchor;
        while parent[up] != usize::MAX {
            up = parent[up];
            path.push(up);
        }
        let mut down = anchor;
        while let Some(&c) = children[down].choose(rng) {
            path.push(c);
            down = c;
        }
        path
    };
    let edge_sets: Vec<Vec<usize>> = (0..tasks.saturating_sub(1))
        .map(|_| {
            let anchor = rng.gen_range(0..n_concepts);
            comparable(anchor, &mut rng)
        })
        .collect();

    let task_ids: Vec<String> = (1..=tasks).map(|t| format!("T{t}")).collect();
    let plan = CompositionPlan::chain(task_ids.clone())?;

    let schema = Schema::new((0..attributes).map(|i| qws_attribute(i).0).collect())?;
    let ranges: Vec<(f64, f64)> = (0..attributes)
        .map(|i| {
            let (_, lo, hi) = qws_attribute(i);
            (lo, hi)
        })
        .collect();
    let width = candidates.to_string().len();
    let mut records = Vec::with_capacity(tasks * candidates);
    for (t, task) in task_ids.iter().enumerate() {
        for j in 1..=candidates {
            let values: BTreeMap<String, f64> = schema
                .names()
                .zip(&ranges)
                .map(|(name, &(lo, hi))| (name.to_string(), round2(rng.gen_range(lo..=hi))))
                .collect();
            let input = match t {
                0 => rng.gen_range(0..n_concepts),
                _ => *edge_sets[t - 1].choose(&mut rng).unwrap(),
            };
            let output = match edge_sets.get(t) {
                Some(set) => *set.choose(&mut rng).unwrap(),
                None => rng.gen_range(0..n_concepts),
            };
            records.push(RegistryRecord {
                service_id: format!("{task}_S{j:0width$}"),
                task_id: task.clone(),
                values,
                inputs: vec![concepts[input].clone()],
                outputs: vec![concepts[output].clone()],
            });
        }
    }
    Ok(SyntheticInstance {
        registry: Registry::new(schema, records)?,
        plan,
        taxonomy,
        request: synthetic_request(attributes),
    })
}
