//! Concept taxonomy and semantic matchmaking between an output concept and
//! an input concept.
//!
//! Subsumption is transitive reachability over a DAG of equivalence classes.
//! Disjointness axioms are inherited downwards: if `A` and `B` are declared
//! disjoint then so is any pair of their sub-concepts.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitset::BitSet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("duplicate concept `{0}`")]
    DuplicateConcept(String),
    #[error("subsumption cycle through `{0}`")]
    CycleDetected(String),
    #[error("`{a}` and `{b}` are declared disjoint but one subsumes the other")]
    Inconsistent { a: String, b: String },
    #[error("disjoint link from `{from}` to `{to}` ({out_concept} -> {in_concept})")]
    DisjointMatch {
        from: String,
        to: String,
        out_concept: String,
        in_concept: String,
    },
    #[error("no shared parameters between `{from}` and `{to}`")]
    NoSharedParameters { from: String, to: String },
}

/// Degree of match, ordered worst to best so `Ord` follows quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MatchType {
    Disjoint,
    Intersection,
    Subsume,
    PlugIn,
    Exact,
}

impl MatchType {
    pub const ALL: [MatchType; 5] = [
        MatchType::Exact,
        MatchType::PlugIn,
        MatchType::Subsume,
        MatchType::Intersection,
        MatchType::Disjoint,
    ];
}

impl fmt::Display for MatchType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MatchType::Exact => "Exact",
            MatchType::PlugIn => "PlugIn",
            MatchType::Subsume => "Subsume",
            MatchType::Intersection => "Intersection",
            MatchType::Disjoint => "Disjoint",
        };
        f.write_str(s)
    }
}

/// Link weight of a match type. Disjoint links are inadmissible.
pub fn matching_quality(match_type: MatchType) -> Option<f64> {
    match match_type {
        MatchType::Exact => Some(1.0),
        MatchType::PlugIn => Some(0.75),
        MatchType::Subsume => Some(0.5),
        MatchType::Intersection => Some(0.25),
        MatchType::Disjoint => None,
    }
}

/// Axioms as declared, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TaxonomyAxioms {
    pub concepts: Vec<String>,
    /// `(child, parent)`
    pub subclass: Vec<(String, String)>,
    pub equivalent: Vec<(String, String)>,
    pub disjoint: Vec<(String, String)>,
}

/// Validated, closed taxonomy. Immutable once built.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    axioms: TaxonomyAxioms,
    index: HashMap<String, usize>,
    /// Equivalence class of each concept.
    class_of: Vec<usize>,
    /// Per class: classes it is subsumed by, reflexive.
    ancestors: Vec<BitSet>,
    /// Per class: classes it subsumes, reflexive.
    descendants: Vec<BitSet>,
    /// Declared disjoint class pairs.
    disjoint: Vec<(usize, usize)>,
}

impl PartialEq for Taxonomy {
    fn eq(&self, other: &Self) -> bool {
        self.axioms == other.axioms
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl Taxonomy {
    pub fn new(axioms: TaxonomyAxioms) -> Result<Self, MatchError> {
        let mut index = HashMap::with_capacity(axioms.concepts.len());
        for (i, c) in axioms.concepts.iter().enumerate() {
            if index.insert(c.clone(), i).is_some() {
                return Err(MatchError::DuplicateConcept(c.clone()));
            }
        }
        let lookup = |c: &str| {
            index
                .get(c)
                .copied()
                .ok_or_else(|| MatchError::UnknownConcept(c.to_string()))
        };
        let n = axioms.concepts.len();

        let mut uf: Vec<usize> = (0..n).collect();
        for (a, b) in &axioms.equivalent {
            let (ra, rb) = (find(&mut uf, lookup(a)?), find(&mut uf, lookup(b)?));
            if ra != rb {
                uf[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut class_ids: BTreeMap<usize, usize> = BTreeMap::new();
        let mut class_of = vec![0; n];
        for (i, slot) in class_of.iter_mut().enumerate() {
            let root = find(&mut uf, i);
            let next = class_ids.len();
            *slot = *class_ids.entry(root).or_insert(next);
        }
        let k = class_ids.len();
        // Representative concept name per class, for error messages.
        let mut rep = vec![usize::MAX; k];
        for (i, &c) in class_of.iter().enumerate() {
            if rep[c] == usize::MAX {
                rep[c] = i;
            }
        }

        let mut parents: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (child, parent) in &axioms.subclass {
            let (c, p) = (class_of[lookup(child)?], class_of[lookup(parent)?]);
            if c != p && !parents[c].contains(&p) {
                parents[c].push(p);
            }
        }

        // Iterative DFS post-order gives parents before children; a grey
        // node reached again is a cycle.
        let mut state = vec![0u8; k];
        let mut order = Vec::with_capacity(k);
        for start in 0..k {
            if state[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            state[start] = 1;
            while let Some((node, next)) = stack.pop() {
                if next < parents[node].len() {
                    stack.push((node, next + 1));
                    let p = parents[node][next];
                    match state[p] {
                        0 => {
                            state[p] = 1;
                            stack.push((p, 0));
                        }
                        1 => {
                            return Err(MatchError::CycleDetected(axioms.concepts[rep[p]].clone()))
                        }
                        _ => {}
                    }
                } else {
                    state[node] = 2;
                    order.push(node);
                }
            }
        }

        let mut ancestors: Vec<BitSet> = vec![BitSet::new(k); k];
        for &c in &order {
            let mut set = BitSet::new(k);
            set.insert(c);
            for &p in &parents[c] {
                set.union_with(&ancestors[p]);
            }
            ancestors[c] = set;
        }
        let mut descendants = vec![BitSet::new(k); k];
        for (c, anc) in ancestors.iter().enumerate() {
            for a in anc.iter() {
                descendants[a].insert(c);
            }
        }

        let mut disjoint = Vec::with_capacity(axioms.disjoint.len());
        for (a, b) in &axioms.disjoint {
            let (ca, cb) = (class_of[lookup(a)?], class_of[lookup(b)?]);
            if ancestors[ca].contains(cb) || ancestors[cb].contains(ca) {
                return Err(MatchError::Inconsistent {
                    a: a.clone(),
                    b: b.clone(),
                });
            }
            disjoint.push((ca, cb));
        }

        Ok(Self {
            axioms,
            index,
            class_of,
            ancestors,
            descendants,
            disjoint,
        })
    }

    pub fn axioms(&self) -> &TaxonomyAxioms {
        &self.axioms
    }

    pub fn len(&self) -> usize {
        self.axioms.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axioms.concepts.is_empty()
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.index.contains_key(concept)
    }

    pub fn concept_id(&self, concept: &str) -> Result<usize, MatchError> {
        self.index
            .get(concept)
            .copied()
            .ok_or_else(|| MatchError::UnknownConcept(concept.to_string()))
    }

    pub fn concept_name(&self, id: usize) -> &str {
        &self.axioms.concepts[id]
    }

    /// `sub ⊑ sup`, reflexive and through equivalences.
    pub fn subsumed_by(&self, sub: usize, sup: usize) -> bool {
        self.ancestors[self.class_of[sub]].contains(self.class_of[sup])
    }

    pub fn equivalent(&self, a: usize, b: usize) -> bool {
        self.class_of[a] == self.class_of[b]
    }

    fn disjoint_classes(&self, a: usize, b: usize) -> bool {
        let (anc_a, anc_b) = (&self.ancestors[a], &self.ancestors[b]);
        self.disjoint.iter().any(|&(x, y)| {
            (anc_a.contains(x) && anc_b.contains(y)) || (anc_a.contains(y) && anc_b.contains(x))
        })
    }

    /// Match type by concept id.
    pub fn match_ids(&self, out_concept: usize, in_concept: usize) -> MatchType {
        let (o, i) = (self.class_of[out_concept], self.class_of[in_concept]);
        if o == i {
            MatchType::Exact
        } else if self.ancestors[o].contains(i) {
            MatchType::PlugIn
        } else if self.ancestors[i].contains(o) {
            MatchType::Subsume
        } else if self.disjoint_classes(o, i) {
            MatchType::Disjoint
        } else if self.descendants[o].intersects(&self.descendants[i]) {
            MatchType::Intersection
        } else {
            MatchType::Disjoint
        }
    }

    pub fn match_type(&self, out_concept: &str, in_concept: &str) -> Result<MatchType, MatchError> {
        Ok(self.match_ids(self.concept_id(out_concept)?, self.concept_id(in_concept)?))
    }

    /// Line-record form: `concept`, `subclass child parent`, `equiv a b`,
    /// `disjoint a b`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.axioms.concepts {
            out.push_str(&format!("concept {c}\n"));
        }
        for (c, p) in &self.axioms.subclass {
            out.push_str(&format!("subclass {c} {p}\n"));
        }
        for (a, b) in &self.axioms.equivalent {
            out.push_str(&format!("equiv {a} {b}\n"));
        }
        for (a, b) in &self.axioms.disjoint {
            out.push_str(&format!("disjoint {a} {b}\n"));
        }
        out
    }
}

/// Mean matching quality over the `(out, in)` concept pairs linking two
/// services.
pub fn link_quality(
    taxonomy: &Taxonomy,
    from_service: &str,
    to_service: &str,
    pairs: &[(String, String)],
) -> Result<f64, MatchError> {
    if pairs.is_empty() {
        return Err(MatchError::NoSharedParameters {
            from: from_service.to_string(),
            to: to_service.to_string(),
        });
    }
    let mut total = 0.0;
    for (out_c, in_c) in pairs {
        let m = taxonomy.match_type(out_c, in_c)?;
        total += matching_quality(m).ok_or_else(|| MatchError::DisjointMatch {
            from: from_service.to_string(),
            to: to_service.to_string(),
            out_concept: out_c.clone(),
            in_concept: in_c.clone(),
        })?;
    }
    Ok(total / pairs.len() as f64)
}

/// Match types for concept-id pairs, filled once before composition.
#[derive(Debug, Clone, Default)]
pub struct MatchCache {
    table: HashMap<(usize, usize), MatchType>,
}

impl MatchCache {
    pub fn precompute(taxonomy: &Taxonomy, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let table = pairs
            .into_iter()
            .map(|(o, i)| ((o, i), taxonomy.match_ids(o, i)))
            .collect();
        Self { table }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, out_concept: usize, in_concept: usize) -> Option<MatchType> {
        self.table.get(&(out_concept, in_concept)).copied()
    }

    /// Cached value, or computed on the spot for pairs not precomputed.
    pub fn lookup(&self, taxonomy: &Taxonomy, out_concept: usize, in_concept: usize) -> MatchType {
        self.get(out_concept, in_concept)
            .unwrap_or_else(|| taxonomy.match_ids(out_concept, in_concept))
    }
}
