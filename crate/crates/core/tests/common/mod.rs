//! Independent reference implementations used as test oracles. None of them
//! call into the library's algorithms; they only share plain data.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

// ---------------------------------------------------------------------------
// Class association rules

pub type Row = (BTreeMap<String, String>, String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OracleRule {
    pub antecedent: BTreeSet<(String, String)>,
    pub class: String,
    pub support_count: usize,
    pub antecedent_count: usize,
}

/// Random table with `attrs` attributes (`a0..`), up to `labels` values
/// per attribute and up to `classes` classes.
pub fn random_rows(rng: &mut impl Rng, max_rows: usize, attrs: usize, labels: usize, classes: usize) -> Vec<Row> {
    let n = rng.gen_range(1..=max_rows);
    (0..n)
        .map(|_| {
            let items = (0..attrs)
                .map(|a| (format!("a{a}"), rng.gen_range(0..labels).to_string()))
                .collect();
            (items, format!("c{}", rng.gen_range(0..classes)))
        })
        .collect()
}

fn matches(antecedent: &BTreeSet<(String, String)>, items: &BTreeMap<String, String>) -> bool {
    antecedent.iter().all(|(a, v)| items.get(a) == Some(v))
}

/// Every non-empty sub-itemset of every row, each with every class, counted
/// directly over the table and filtered by the thresholds.
pub fn brute_force_cars(rows: &[Row], min_support: f64, min_confidence: f64, max_len: usize) -> Vec<OracleRule> {
    let mut antecedents: BTreeSet<BTreeSet<(String, String)>> = BTreeSet::new();
    for (items, _) in rows {
        let list: Vec<(String, String)> = items.iter().map(|(a, v)| (a.clone(), v.clone())).collect();
        for mask in 1u32..(1 << list.len()) {
            if mask.count_ones() as usize > max_len {
                continue;
            }
            let subset = list
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, x)| x.clone())
                .collect();
            antecedents.insert(subset);
        }
    }
    let classes: BTreeSet<&String> = rows.iter().map(|(_, c)| c).collect();
    let n = rows.len() as f64;
    let mut out = Vec::new();
    for ant in antecedents {
        let antecedent_count = rows.iter().filter(|(items, _)| matches(&ant, items)).count();
        for &class in &classes {
            let support_count = rows
                .iter()
                .filter(|(items, c)| c == class && matches(&ant, items))
                .count();
            if support_count == 0 {
                continue;
            }
            let support = support_count as f64 / n;
            let confidence = support_count as f64 / antecedent_count as f64;
            if support >= min_support && confidence >= min_confidence {
                out.push(OracleRule {
                    antecedent: ant.clone(),
                    class: class.clone(),
                    support_count,
                    antecedent_count,
                });
            }
        }
    }
    out
}

/// Plain rule view for replaying a coverage pass.
#[derive(Debug, Clone, PartialEq)]
pub struct PlainRule {
    pub antecedent: BTreeSet<(String, String)>,
    pub class: String,
}

/// Replays a single coverage pass over `sorted` and returns the rules it
/// keeps plus the resulting default class.
pub fn replay_coverage(rows: &[Row], sorted: &[PlainRule]) -> (Vec<PlainRule>, String) {
    let mut covered = vec![false; rows.len()];
    let mut kept = Vec::new();
    for rule in sorted {
        let hit: Vec<usize> = (0..rows.len())
            .filter(|&i| !covered[i] && matches(&rule.antecedent, &rows[i].0))
            .collect();
        if hit.iter().any(|&i| rows[i].1 == rule.class) {
            for i in hit {
                covered[i] = true;
            }
            kept.push(rule.clone());
        }
    }
    let uncovered: Vec<&str> = (0..rows.len())
        .filter(|&i| !covered[i])
        .map(|i| rows[i].1.as_str())
        .collect();
    let default = if uncovered.is_empty() {
        majority(rows.iter().map(|r| r.1.as_str()))
    } else {
        majority(uncovered.into_iter())
    };
    (kept, default)
}

/// Most frequent label, ties to the lexicographically smallest.
pub fn majority<'a>(labels: impl Iterator<Item = &'a str>) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap();
    counts.into_iter().find(|&(_, c)| c == best).unwrap().0.to_string()
}

/// Checks the kept rules one by one: each must correctly classify at least
/// one instance left uncovered by the rules before it. Returns the default
/// class implied by what remains uncovered.
pub fn check_kept_rules(rows: &[Row], kept: &[PlainRule]) -> Result<String, String> {
    let mut covered = vec![false; rows.len()];
    for (k, rule) in kept.iter().enumerate() {
        let hit: Vec<usize> = (0..rows.len())
            .filter(|&i| !covered[i] && matches(&rule.antecedent, &rows[i].0))
            .collect();
        if !hit.iter().any(|&i| rows[i].1 == rule.class) {
            return Err(format!("kept rule {k} classifies no uncovered instance correctly"));
        }
        for i in hit {
            covered[i] = true;
        }
    }
    let uncovered: Vec<&str> = (0..rows.len())
        .filter(|&i| !covered[i])
        .map(|i| rows[i].1.as_str())
        .collect();
    Ok(if uncovered.is_empty() {
        majority(rows.iter().map(|r| r.1.as_str()))
    } else {
        majority(uncovered.into_iter())
    })
}

// ---------------------------------------------------------------------------
// Concept matching

/// Concept DAG stored as parent lists; concept `k` only has parents below `k`.
#[derive(Debug, Clone)]
pub struct NaiveTaxonomy {
    pub names: Vec<String>,
    pub parents: Vec<Vec<usize>>,
    pub equivalent: Vec<(usize, usize)>,
    pub disjoint: Vec<(usize, usize)>,
}

impl NaiveTaxonomy {
    pub fn random(rng: &mut impl Rng, n: usize) -> Self {
        let names = (0..n).map(|i| format!("K{i}")).collect();
        let mut parents = vec![Vec::new(); n];
        for (k, ps) in parents.iter_mut().enumerate().skip(1) {
            // A few roots, otherwise one or two parents.
            if rng.gen_bool(0.15) {
                continue;
            }
            let p = rng.gen_range(0..k);
            ps.push(p);
            if k > 1 && rng.gen_bool(0.3) {
                let q = rng.gen_range(0..k);
                if q != p {
                    ps.push(q);
                }
            }
        }
        let mut t = Self {
            names,
            parents,
            equivalent: Vec::new(),
            disjoint: Vec::new(),
        };
        if rng.gen_bool(0.3) {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if a != b && !t.is_ancestor(a, b) && !t.is_ancestor(b, a) {
                t.equivalent.push((a, b));
            }
        }
        for _ in 0..rng.gen_range(0..3) {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if a != b && !t.is_ancestor(a, b) && !t.is_ancestor(b, a) {
                t.disjoint.push((a, b));
            }
        }
        t
    }

    pub fn from_axioms(axioms: &qoscomp::ontology::TaxonomyAxioms) -> Self {
        let id = |c: &String| axioms.concepts.iter().position(|x| x == c).unwrap();
        let pairs = |v: &[(String, String)]| v.iter().map(|(a, b)| (id(a), id(b))).collect();
        let mut parents = vec![Vec::new(); axioms.concepts.len()];
        for (c, p) in &axioms.subclass {
            parents[id(c)].push(id(p));
        }
        Self {
            names: axioms.concepts.clone(),
            parents,
            equivalent: pairs(&axioms.equivalent),
            disjoint: pairs(&axioms.disjoint),
        }
    }

    /// Reflexive: is `sup` reachable from `sub` by parent steps, where an
    /// equivalence counts as a step in either direction?
    pub fn is_ancestor(&self, sup: usize, sub: usize) -> bool {
        let mut seen = vec![false; self.names.len()];
        let mut stack = vec![sub];
        while let Some(c) = stack.pop() {
            if c == sup {
                return true;
            }
            if std::mem::replace(&mut seen[c], true) {
                continue;
            }
            stack.extend(&self.parents[c]);
            for &(a, b) in &self.equivalent {
                if a == c {
                    stack.push(b);
                }
                if b == c {
                    stack.push(a);
                }
            }
        }
        false
    }

    pub fn axioms(&self) -> qoscomp::ontology::TaxonomyAxioms {
        qoscomp::ontology::TaxonomyAxioms {
            concepts: self.names.clone(),
            subclass: self
                .parents
                .iter()
                .enumerate()
                .flat_map(|(c, ps)| ps.iter().map(move |&p| (c, p)))
                .map(|(c, p)| (self.names[c].clone(), self.names[p].clone()))
                .collect(),
            equivalent: self
                .equivalent
                .iter()
                .map(|&(a, b)| (self.names[a].clone(), self.names[b].clone()))
                .collect(),
            disjoint: self
                .disjoint
                .iter()
                .map(|&(a, b)| (self.names[a].clone(), self.names[b].clone()))
                .collect(),
        }
    }

    /// Quality of one output-to-input concept pair; `None` when disjoint.
    pub fn quality(&self, out: usize, inp: usize) -> Option<f64> {
        if self.is_ancestor(inp, out) && self.is_ancestor(out, inp) {
            return Some(1.0);
        }
        if self.is_ancestor(inp, out) {
            return Some(0.75);
        }
        if self.is_ancestor(out, inp) {
            return Some(0.5);
        }
        let declared = self.disjoint.iter().any(|&(x, y)| {
            (self.is_ancestor(x, out) && self.is_ancestor(y, inp))
                || (self.is_ancestor(y, out) && self.is_ancestor(x, inp))
        });
        if declared {
            return None;
        }
        let n = self.names.len();
        if (0..n).any(|d| self.is_ancestor(out, d) && self.is_ancestor(inp, d)) {
            return Some(0.25);
        }
        None
    }
}

// ---------------------------------------------------------------------------
// Greedy composition

#[derive(Debug, Clone)]
pub struct NaiveService {
    pub id: String,
    pub utility: f64,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct NaiveInstance {
    pub taxonomy: NaiveTaxonomy,
    /// Plan listing order.
    pub tasks: Vec<String>,
    pub edges: Vec<(String, String)>,
    /// Explicit `(out, in)` positions per edge; absent means all pairs.
    pub wiring: BTreeMap<(String, String), Vec<(usize, usize)>>,
    pub candidates: BTreeMap<String, Vec<NaiveService>>,
}

/// Random DAG instance with up to `max_tasks` tasks and up to
/// `max_candidates` candidates per task.
pub fn random_instance(rng: &mut impl Rng, max_tasks: usize, max_candidates: usize, chain: bool) -> NaiveInstance {
    let n_concepts = rng.gen_range(4..=9);
    let taxonomy = NaiveTaxonomy::random(rng, n_concepts);
    let n = rng.gen_range(if chain { 3 } else { 1 }..=max_tasks);
    let hidden: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if (chain && j == i + 1) || (!chain && rng.gen_bool(0.4)) {
                edges.push((hidden[i].clone(), hidden[j].clone()));
            }
        }
    }
    let mut tasks = hidden.clone();
    if !chain {
        tasks.shuffle(rng);
    }
    let mut wiring = BTreeMap::new();
    for e in &edges {
        if rng.gen_bool(0.3) {
            wiring.insert(e.clone(), vec![(0, 0)]);
        }
    }
    let mut candidates = BTreeMap::new();
    for t in &hidden {
        let k = rng.gen_range(1..=max_candidates);
        let list = (0..k)
            .map(|s| NaiveService {
                id: format!("{t}_s{s}"),
                utility: rng.gen_range(0.05..1.0),
                inputs: (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(0..n_concepts)).collect(),
                outputs: (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(0..n_concepts)).collect(),
            })
            .collect();
        candidates.insert(t.clone(), list);
    }
    NaiveInstance {
        taxonomy,
        tasks,
        edges,
        wiring,
        candidates,
    }
}

impl NaiveInstance {
    pub fn service(&self, id: &str) -> &NaiveService {
        self.candidates
            .values()
            .flatten()
            .find(|s| s.id == id)
            .unwrap()
    }

    pub fn preds(&self, task: &str) -> Vec<String> {
        let order = self.topological_order();
        order
            .into_iter()
            .filter(|p| self.edges.iter().any(|(a, b)| a == p && b == task))
            .collect()
    }

    pub fn succs(&self, task: &str) -> Vec<String> {
        let order = self.topological_order();
        order
            .into_iter()
            .filter(|s| self.edges.iter().any(|(a, b)| a == task && b == s))
            .collect()
    }

    /// Repeatedly takes the first listed task whose predecessors are done.
    pub fn topological_order(&self) -> Vec<String> {
        let mut done: Vec<String> = Vec::new();
        while done.len() < self.tasks.len() {
            let next = self
                .tasks
                .iter()
                .find(|t| {
                    !done.contains(t)
                        && self
                            .edges
                            .iter()
                            .filter(|(_, b)| b == *t)
                            .all(|(a, _)| done.contains(a))
                })
                .unwrap();
            done.push(next.clone());
        }
        done
    }

    /// Mean pair quality of the link `from -> to`, `None` if inadmissible.
    pub fn link(&self, from_task: &str, from: &NaiveService, to_task: &str, to: &NaiveService) -> Option<f64> {
        let pairs: Vec<(usize, usize)> = match self.wiring.get(&(from_task.to_string(), to_task.to_string())) {
            Some(pos) => pos.iter().map(|&(o, i)| (from.outputs[o], to.inputs[i])).collect(),
            None => from
                .outputs
                .iter()
                .flat_map(|&o| to.inputs.iter().map(move |&i| (o, i)))
                .collect(),
        };
        let mut total = 0.0;
        for &(o, i) in &pairs {
            total += self.taxonomy.quality(o, i)?;
        }
        Some(total / pairs.len() as f64)
    }

    /// Mean incoming link quality of `service` at `task` given the selected
    /// services; `Some(1.0)` for a source task, `None` if inadmissible.
    pub fn incoming(&self, task: &str, service: &NaiveService, chosen: &BTreeMap<String, String>) -> Option<f64> {
        let preds = self.preds(task);
        if preds.is_empty() {
            return Some(1.0);
        }
        let mut total = 0.0;
        for p in &preds {
            total += self.link(p, self.service(&chosen[p]), task, service)?;
        }
        Some(total / preds.len() as f64)
    }

    pub fn outgoing(&self, task: &str, service: &NaiveService, chosen: &BTreeMap<String, String>) -> Option<Option<f64>> {
        let succs = self.succs(task);
        if succs.is_empty() {
            return Some(None);
        }
        let mut total = 0.0;
        for s in &succs {
            total += self.link(task, service, s, self.service(&chosen[s]))?;
        }
        Some(Some(total / succs.len() as f64))
    }
}

/// Task to its queue of `(service, F)` entries.
pub type Queues = BTreeMap<String, Vec<(String, f64)>>;

#[derive(Debug, Clone, PartialEq)]
pub struct NaivePick {
    pub task: String,
    pub service: String,
    pub final_utility: f64,
}

/// Queue of one task: admissible candidates by `F` descending, then id.
pub fn naive_queue(inst: &NaiveInstance, task: &str, chosen: &BTreeMap<String, String>) -> Vec<(String, f64)> {
    let mut queue: Vec<(String, f64)> = inst.candidates[task]
        .iter()
        .filter_map(|s| {
            let q = inst.incoming(task, s, chosen)?;
            let f = if inst.preds(task).is_empty() { s.utility } else { s.utility * q };
            Some((s.id.clone(), f))
        })
        .collect();
    queue.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    queue
}

/// Step-by-step greedy selection. `Err(task)` names the first task whose
/// queue is empty.
pub fn naive_greedy(inst: &NaiveInstance) -> Result<(Vec<NaivePick>, Queues), String> {
    let mut chosen = BTreeMap::new();
    let mut picks = Vec::new();
    let mut queues = BTreeMap::new();
    for task in inst.topological_order() {
        let queue = naive_queue(inst, &task, &chosen);
        let (id, f) = queue.first().cloned().ok_or_else(|| task.clone())?;
        chosen.insert(task.clone(), id.clone());
        picks.push(NaivePick {
            task: task.clone(),
            service: id,
            final_utility: f,
        });
        queues.insert(task, queue);
    }
    Ok((picks, queues))
}

pub fn score(picks: &[NaivePick]) -> f64 {
    picks.iter().map(|p| p.final_utility).product()
}

/// Every composite that swaps exactly one task to its queue's runner-up,
/// with every task's `F` recomputed from scratch; the best by score, earlier
/// topological position winning ties. `None` when no swap is admissible.
pub fn exhaustive_one_swap(
    inst: &NaiveInstance,
    primary: &[NaivePick],
    queues: &Queues,
) -> Option<Vec<NaivePick>> {
    let mut best: Option<Vec<NaivePick>> = None;
    for (pos, pick) in primary.iter().enumerate() {
        let Some((second, _)) = queues[&pick.task].get(1) else {
            continue;
        };
        let mut chosen: BTreeMap<String, String> =
            primary.iter().map(|p| (p.task.clone(), p.service.clone())).collect();
        chosen.insert(pick.task.clone(), second.clone());
        let mut picks = Vec::new();
        let mut ok = true;
        for (i, p) in primary.iter().enumerate() {
            let s = inst.service(&chosen[&p.task]);
            let f = if i == pos {
                queues[&p.task][1].1
            } else {
                match inst.incoming(&p.task, s, &chosen) {
                    Some(q) => s.utility * q,
                    None => {
                        ok = false;
                        break;
                    }
                }
            };
            picks.push(NaivePick {
                task: p.task.clone(),
                service: s.id.clone(),
                final_utility: f,
            });
        }
        if ok && best.as_ref().is_none_or(|b| score(&picks) > score(b)) {
            best = Some(picks);
        }
    }
    best
}

/// Hand recomputation of the replacement at `task`: the remaining queue
/// entries rescored with the mean of incoming and outgoing link quality.
pub fn naive_replacement(
    inst: &NaiveInstance,
    primary: &[NaivePick],
    queues: &Queues,
    task: &str,
) -> Option<(String, f64, f64)> {
    let chosen: BTreeMap<String, String> =
        primary.iter().map(|p| (p.task.clone(), p.service.clone())).collect();
    let failed = &chosen[task];
    let mut best: Option<(String, f64, f64)> = None;
    for (id, _) in &queues[task] {
        if id == failed {
            continue;
        }
        let s = inst.service(id);
        let prev = if inst.preds(task).is_empty() {
            None
        } else {
            let Some(q) = inst.incoming(task, s, &chosen) else {
                continue;
            };
            Some(q)
        };
        let Some(next) = inst.outgoing(task, s, &chosen) else {
            continue;
        };
        let q = match (prev, next) {
            (Some(p), Some(n)) => (p + n) / 2.0,
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => 1.0,
        };
        let f = s.utility * q;
        let better = match &best {
            None => true,
            Some((bid, bf, _)) => f > *bf || (f == *bf && id < bid),
        };
        if better {
            best = Some((id.clone(), f, q));
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Glue to the library types

pub fn plan_of(inst: &NaiveInstance) -> qoscomp::composer::CompositionPlan {
    qoscomp::composer::CompositionPlan::new(
        inst.tasks.clone(),
        inst.edges.clone(),
        inst.wiring.clone(),
    )
    .unwrap()
}

pub fn eligible_of(inst: &NaiveInstance) -> BTreeMap<String, Vec<qoscomp::composer::Candidate>> {
    inst.candidates
        .iter()
        .map(|(t, list)| {
            (
                t.clone(),
                list.iter()
                    .map(|s| qoscomp::composer::Candidate::new(s.id.clone(), s.utility))
                    .collect(),
            )
        })
        .collect()
}

pub fn interfaces_of(
    inst: &NaiveInstance,
) -> (
    std::collections::HashMap<String, qoscomp::composer::ServiceInterface>,
    std::collections::HashMap<String, Vec<String>>,
) {
    let mut interfaces = std::collections::HashMap::new();
    let mut by_task = std::collections::HashMap::new();
    for (t, list) in &inst.candidates {
        for s in list {
            interfaces.insert(
                s.id.clone(),
                qoscomp::composer::ServiceInterface {
                    inputs: s.inputs.clone(),
                    outputs: s.outputs.clone(),
                },
            );
        }
        by_task.insert(t.clone(), list.iter().map(|s| s.id.clone()).collect());
    }
    (interfaces, by_task)
}

/// Naive view of a loaded engine input with the utilities of its eligible
/// candidates.
pub fn instance_from_inputs(
    inputs: &qoscomp::engine::Inputs,
    eligible: &BTreeMap<String, Vec<qoscomp::composer::Candidate>>,
) -> NaiveInstance {
    let axioms = inputs.taxonomy.axioms();
    let taxonomy = NaiveTaxonomy::from_axioms(axioms);
    let id = |c: &String| axioms.concepts.iter().position(|x| x == c).unwrap();
    let candidates = eligible
        .iter()
        .map(|(task, list)| {
            let services = list
                .iter()
                .map(|c| {
                    let r = inputs.registry.get(&c.service_id).unwrap();
                    NaiveService {
                        id: c.service_id.clone(),
                        utility: c.utility,
                        inputs: r.inputs.iter().map(id).collect(),
                        outputs: r.outputs.iter().map(id).collect(),
                    }
                })
                .collect();
            (task.clone(), services)
        })
        .collect();
    NaiveInstance {
        taxonomy,
        tasks: inputs.plan.tasks().to_vec(),
        edges: inputs.plan.edges().to_vec(),
        wiring: inputs.plan.all_link_pairs().clone(),
        candidates,
    }
}
