//! Greedy composite selection over a search graph of per-task priority
//! queues.
//!
//! Tasks are visited in topological order. Source tasks rank candidates by
//! utility `U`; every other task ranks by `F = U * q`, where `q` is the mean
//! link quality from the services already chosen for its predecessors. The
//! head of each queue is selected. Ties go to the smaller service id.

mod links;
mod plan;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::leveling::ScoredService;
use crate::ontology::{MatchError, MatchType};

pub use links::{Link, LinkModel, ServiceInterface, ServiceLinks};
pub use plan::{edge_key, CompositionPlan};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComposeError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("plan contains a cycle through `{0}`")]
    CycleDetected(String),
    #[error("task `{0}` has no eligible candidate")]
    NoEligibleCandidate(String),
    #[error("task `{0}`: every candidate has an inadmissible link to the selected predecessors")]
    NoAdmissibleLink(String),
    #[error("no alternative composite: no queue has a second admissible entry")]
    NoAlternative,
    #[error("service `{service}` is not the selection of task `{task}`")]
    NotSelectedService { task: String, service: String },
    #[error("task `{0}` has no admissible replacement candidate")]
    NoReplacementCandidate(String),
    #[error(transparent)]
    Match(#[from] MatchError),
}

/// Eligible service of a task with its utility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub service_id: String,
    pub utility: f64,
}

impl Candidate {
    pub fn new(service_id: impl Into<String>, utility: f64) -> Self {
        Self {
            service_id: service_id.into(),
            utility,
        }
    }
}

impl From<&ScoredService> for Candidate {
    fn from(s: &ScoredService) -> Self {
        Self::new(s.service_id.clone(), s.utility)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueEntry {
    pub service_id: String,
    pub utility: f64,
    pub final_utility: f64,
    pub link_quality: f64,
    pub matches: Vec<MatchType>,
}

fn queue_order(a: &QueueEntry, b: &QueueEntry) -> Ordering {
    b.final_utility
        .total_cmp(&a.final_utility)
        .then_with(|| a.service_id.cmp(&b.service_id))
}

/// Max-priority queue on `F`, kept fully sorted so the runner-up is
/// addressable.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ServiceQueue {
    entries: Vec<QueueEntry>,
}

impl ServiceQueue {
    pub fn from_entries(mut entries: Vec<QueueEntry>) -> Self {
        entries.sort_by(queue_order);
        Self { entries }
    }

    pub fn head(&self) -> Option<&QueueEntry> {
        self.entries.first()
    }

    pub fn second(&self) -> Option<&QueueEntry> {
        self.entries.get(1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &QueueEntry> {
        self.entries.iter()
    }

    pub fn remove(&mut self, service_id: &str) -> Option<QueueEntry> {
        let pos = self.entries.iter().position(|e| e.service_id == service_id)?;
        Some(self.entries.remove(pos))
    }
}

/// One queue per task plus the plan's adjacency, in topological order.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGraph {
    plan: CompositionPlan,
    queues: BTreeMap<String, ServiceQueue>,
}

impl SearchGraph {
    pub fn order(&self) -> &[String] {
        self.plan.order()
    }

    pub fn plan(&self) -> &CompositionPlan {
        &self.plan
    }

    pub fn queue(&self, task: &str) -> Option<&ServiceQueue> {
        self.queues.get(task)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub task: String,
    pub service_id: String,
    pub utility: f64,
    pub final_utility: f64,
    pub link_quality: f64,
    pub matches: Vec<MatchType>,
}

impl Selection {
    fn from_entry(task: &str, e: &QueueEntry) -> Self {
        Self {
            task: task.to_string(),
            service_id: e.service_id.clone(),
            utility: e.utility,
            final_utility: e.final_utility,
            link_quality: e.link_quality,
            matches: e.matches.clone(),
        }
    }
}

/// One service per task, in topological order, with the product of the
/// selected `F` values as aggregate score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeService {
    pub selections: Vec<Selection>,
    pub score: f64,
}

impl CompositeService {
    fn from_selections(selections: Vec<Selection>) -> Self {
        let score = selections.iter().map(|s| s.final_utility).product();
        Self { selections, score }
    }

    pub fn assignment(&self) -> BTreeMap<&str, &str> {
        self.selections
            .iter()
            .map(|s| (s.task.as_str(), s.service_id.as_str()))
            .collect()
    }

    pub fn selection(&self, task: &str) -> Option<&Selection> {
        self.selections.iter().find(|s| s.task == task)
    }

    pub fn service_for(&self, task: &str) -> Option<&str> {
        self.selection(task).map(|s| s.service_id.as_str())
    }
}

fn admissible(err: &MatchError) -> bool {
    !matches!(
        err,
        MatchError::DisjointMatch { .. } | MatchError::NoSharedParameters { .. }
    )
}

/// Mean link from the services selected for `neighbours` (upstream when
/// `incoming`) to `service`. `Ok(None)` when some link is inadmissible,
/// and `Ok(Some(None))` when there are no neighbours.
fn mean_link(
    links: &impl LinkModel,
    task: &str,
    service: &str,
    neighbours: &[String],
    chosen: &impl Fn(&str) -> Option<String>,
    incoming: bool,
) -> Result<Option<Option<Link>>, ComposeError> {
    if neighbours.is_empty() {
        return Ok(Some(None));
    }
    let mut total = 0.0;
    let mut matches = Vec::new();
    for other in neighbours {
        let other_service =
            chosen(other).ok_or_else(|| ComposeError::UnknownTask(other.clone()))?;
        let result = if incoming {
            links.link(other, &other_service, task, service)
        } else {
            links.link(task, service, other, &other_service)
        };
        match result {
            Ok(link) => {
                total += link.quality;
                matches.extend(link.matches);
            }
            Err(e) if !admissible(&e) => return Ok(None),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Some(Some(Link {
        quality: total / neighbours.len() as f64,
        matches,
    })))
}

/// Builds the search graph and returns it with the head-of-queue composite.
pub fn build_search_graph(
    plan: &CompositionPlan,
    eligible: &BTreeMap<String, Vec<Candidate>>,
    links: &impl LinkModel,
) -> Result<(SearchGraph, CompositeService), ComposeError> {
    let mut queues = BTreeMap::new();
    let mut chosen: BTreeMap<String, String> = BTreeMap::new();
    let mut selections = Vec::with_capacity(plan.order().len());
    for task in plan.order() {
        let candidates = eligible
            .get(task)
            .filter(|c| !c.is_empty())
            .ok_or_else(|| ComposeError::NoEligibleCandidate(task.clone()))?;
        let preds = plan.predecessors(task);
        let lookup = |t: &str| chosen.get(t).cloned();
        let mut entries = Vec::with_capacity(candidates.len());
        for c in candidates {
            let link = match mean_link(links, task, &c.service_id, preds, &lookup, true)? {
                None => continue,
                Some(link) => link,
            };
            let (quality, matches) = link.map_or((1.0, Vec::new()), |l| (l.quality, l.matches));
            entries.push(QueueEntry {
                service_id: c.service_id.clone(),
                utility: c.utility,
                final_utility: if preds.is_empty() { c.utility } else { c.utility * quality },
                link_quality: quality,
                matches,
            });
        }
        let queue = ServiceQueue::from_entries(entries);
        let head = queue
            .head()
            .ok_or_else(|| ComposeError::NoAdmissibleLink(task.clone()))?;
        chosen.insert(task.clone(), head.service_id.clone());
        selections.push(Selection::from_entry(task, head));
        queues.insert(task.clone(), queue);
    }
    let graph = SearchGraph {
        plan: plan.clone(),
        queues,
    };
    Ok((graph, CompositeService::from_selections(selections)))
}

/// Recomputes `F` of `task`'s current selection from its predecessors'
/// current selections. `None` when a link is inadmissible.
fn reevaluate(
    selection: &Selection,
    plan: &CompositionPlan,
    by_task: &BTreeMap<String, String>,
    links: &impl LinkModel,
) -> Result<Option<Selection>, ComposeError> {
    let preds = plan.predecessors(&selection.task);
    let lookup = |t: &str| by_task.get(t).cloned();
    Ok(
        match mean_link(links, &selection.task, &selection.service_id, preds, &lookup, true)? {
            None => None,
            Some(None) => Some(selection.clone()),
            Some(Some(link)) => Some(Selection {
                final_utility: selection.utility * link.quality,
                link_quality: link.quality,
                matches: link.matches,
                ..selection.clone()
            }),
        },
    )
}

/// Best composite differing from `primary` at exactly one task, where that
/// task takes its queue's runner-up and its direct successors' `F` are
/// recomputed against it. Earlier tasks win score ties.
pub fn first_alternative(
    graph: &SearchGraph,
    primary: &CompositeService,
    links: &impl LinkModel,
) -> Result<CompositeService, ComposeError> {
    let plan = &graph.plan;
    let mut best: Option<CompositeService> = None;
    'tasks: for task in plan.order() {
        let Some(second) = graph.queues.get(task).and_then(ServiceQueue::second) else {
            continue;
        };
        let mut selections = primary.selections.clone();
        let idx = selections
            .iter()
            .position(|s| &s.task == task)
            .ok_or_else(|| ComposeError::UnknownTask(task.clone()))?;
        selections[idx] = Selection::from_entry(task, second);
        let by_task: BTreeMap<String, String> = selections
            .iter()
            .map(|s| (s.task.clone(), s.service_id.clone()))
            .collect();
        for succ in plan.successors(task) {
            let pos = selections
                .iter()
                .position(|s| &s.task == succ)
                .ok_or_else(|| ComposeError::UnknownTask(succ.clone()))?;
            match reevaluate(&selections[pos], plan, &by_task, links)? {
                Some(updated) => selections[pos] = updated,
                None => continue 'tasks,
            }
        }
        let candidate = CompositeService::from_selections(selections);
        if best.as_ref().is_none_or(|b| candidate.score > b.score) {
            best = Some(candidate);
        }
    }
    best.ok_or(ComposeError::NoAlternative)
}

/// Drops `failed_service` from `task`'s queue, re-scores the remaining
/// entries against both neighbouring selections and substitutes the new
/// head. Each entry's link quality becomes the mean of its incoming and
/// outgoing link qualities (one side at a boundary task).
pub fn replace_unavailable(
    graph: &mut SearchGraph,
    composite: &CompositeService,
    task: &str,
    failed_service: &str,
    links: &impl LinkModel,
) -> Result<CompositeService, ComposeError> {
    if !graph.plan.contains(task) {
        return Err(ComposeError::UnknownTask(task.to_string()));
    }
    if composite.service_for(task) != Some(failed_service) {
        return Err(ComposeError::NotSelectedService {
            task: task.to_string(),
            service: failed_service.to_string(),
        });
    }
    let plan = graph.plan.clone();
    let by_task: BTreeMap<String, String> = composite
        .selections
        .iter()
        .map(|s| (s.task.clone(), s.service_id.clone()))
        .collect();
    let lookup = |t: &str| by_task.get(t).cloned();
    let queue = graph.queues.entry(task.to_string()).or_default();
    queue.remove(failed_service);

    let mut entries = Vec::with_capacity(queue.len());
    for e in queue.iter() {
        let prev = mean_link(links, task, &e.service_id, plan.predecessors(task), &lookup, true)?;
        let next = mean_link(links, task, &e.service_id, plan.successors(task), &lookup, false)?;
        let (Some(prev), Some(next)) = (prev, next) else {
            continue;
        };
        let (quality, matches) = match (prev, next) {
            (Some(p), Some(n)) => ((p.quality + n.quality) / 2.0, [p.matches, n.matches].concat()),
            (Some(one), None) | (None, Some(one)) => (one.quality, one.matches),
            (None, None) => (1.0, Vec::new()),
        };
        entries.push(QueueEntry {
            service_id: e.service_id.clone(),
            utility: e.utility,
            final_utility: e.utility * quality,
            link_quality: quality,
            matches,
        });
    }
    *queue = ServiceQueue::from_entries(entries);
    let head = queue
        .head()
        .ok_or_else(|| ComposeError::NoReplacementCandidate(task.to_string()))?;

    let mut selections = composite.selections.clone();
    let idx = selections.iter().position(|s| s.task == task).unwrap();
    selections[idx] = Selection::from_entry(task, head);
    let by_task: BTreeMap<String, String> = selections
        .iter()
        .map(|s| (s.task.clone(), s.service_id.clone()))
        .collect();
    for succ in plan.successors(task) {
        let pos = selections.iter().position(|s| &s.task == succ).unwrap();
        // The head was admissible on its outgoing side, so this succeeds.
        if let Some(updated) = reevaluate(&selections[pos], &plan, &by_task, links)? {
            selections[pos] = updated;
        }
    }
    Ok(CompositeService::from_selections(selections))
}
