use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::ComposeError;

/// Abstract composition plan: tasks and data-flow edges forming a DAG.
///
/// `link_pairs` optionally names, per edge, which `(output index, input
/// index)` parameter positions are connected. Edges without an entry connect
/// every output of the upstream service to every input of the downstream one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PlanFile", into = "PlanFile")]
pub struct CompositionPlan {
    tasks: Vec<String>,
    edges: Vec<(String, String)>,
    link_pairs: BTreeMap<(String, String), Vec<(usize, usize)>>,
    order: Vec<String>,
    predecessors: BTreeMap<String, Vec<String>>,
    successors: BTreeMap<String, Vec<String>>,
}

/// On-disk shape of a plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    tasks: Vec<String>,
    #[serde(default)]
    edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    link_pairs: BTreeMap<String, Vec<(usize, usize)>>,
}

pub fn edge_key(from: &str, to: &str) -> String {
    format!("{from}->{to}")
}

impl TryFrom<PlanFile> for CompositionPlan {
    type Error = ComposeError;

    fn try_from(file: PlanFile) -> Result<Self, Self::Error> {
        let mut link_pairs = BTreeMap::new();
        for (key, pairs) in file.link_pairs {
            let (from, to) = key
                .split_once("->")
                .ok_or_else(|| ComposeError::InvalidPlan(format!("bad edge key `{key}`")))?;
            link_pairs.insert((from.trim().to_string(), to.trim().to_string()), pairs);
        }
        CompositionPlan::new(file.tasks, file.edges, link_pairs)
    }
}

impl From<CompositionPlan> for PlanFile {
    fn from(plan: CompositionPlan) -> Self {
        PlanFile {
            tasks: plan.tasks,
            edges: plan.edges,
            link_pairs: plan
                .link_pairs
                .into_iter()
                .map(|((f, t), p)| (edge_key(&f, &t), p))
                .collect(),
        }
    }
}

impl CompositionPlan {
    pub fn new(
        tasks: Vec<String>,
        edges: Vec<(String, String)>,
        link_pairs: BTreeMap<(String, String), Vec<(usize, usize)>>,
    ) -> Result<Self, ComposeError> {
        if tasks.is_empty() {
            return Err(ComposeError::InvalidPlan("plan has no tasks".into()));
        }
        let position: HashMap<&str, usize> =
            tasks.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
        if position.len() != tasks.len() {
            return Err(ComposeError::InvalidPlan("duplicate task id".into()));
        }
        let pos = |t: &str| {
            position
                .get(t)
                .copied()
                .ok_or_else(|| ComposeError::UnknownTask(t.to_string()))
        };
        let mut seen = BTreeSet::new();
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); tasks.len()];
        let mut succs: Vec<Vec<usize>> = vec![Vec::new(); tasks.len()];
        for (from, to) in &edges {
            let (f, t) = (pos(from)?, pos(to)?);
            if f == t {
                return Err(ComposeError::CycleDetected(from.clone()));
            }
            if !seen.insert((f, t)) {
                return Err(ComposeError::InvalidPlan(format!(
                    "duplicate edge {}",
                    edge_key(from, to)
                )));
            }
            preds[t].push(f);
            succs[f].push(t);
        }
        for (from, to) in link_pairs.keys() {
            let key = (pos(from)?, pos(to)?);
            if !seen.contains(&key) {
                return Err(ComposeError::InvalidPlan(format!(
                    "link_pairs for non-edge {}",
                    edge_key(from, to)
                )));
            }
        }

        // Kahn's algorithm; among ready tasks the one listed first goes first.
        let mut indegree: Vec<usize> = preds.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..tasks.len()).filter(|&i| indegree[i] == 0).collect();
        let mut order_idx = Vec::with_capacity(tasks.len());
        while let Some(next) = ready.pop_first() {
            order_idx.push(next);
            for &s in &succs[next] {
                indegree[s] -= 1;
                if indegree[s] == 0 {
                    ready.insert(s);
                }
            }
        }
        if order_idx.len() != tasks.len() {
            let stuck = (0..tasks.len()).find(|&i| indegree[i] > 0).unwrap();
            return Err(ComposeError::CycleDetected(tasks[stuck].clone()));
        }
        let rank: Vec<usize> = {
            let mut r = vec![0; tasks.len()];
            for (k, &i) in order_idx.iter().enumerate() {
                r[i] = k;
            }
            r
        };
        let named = |list: &Vec<usize>| {
            let mut list = list.clone();
            list.sort_by_key(|&i| rank[i]);
            list.into_iter().map(|i| tasks[i].clone()).collect::<Vec<_>>()
        };
        let predecessors = tasks.iter().cloned().zip(preds.iter().map(named)).collect();
        let successors = tasks.iter().cloned().zip(succs.iter().map(named)).collect();
        let order = order_idx.iter().map(|&i| tasks[i].clone()).collect();

        Ok(Self {
            tasks,
            edges,
            link_pairs,
            order,
            predecessors,
            successors,
        })
    }

    /// Linear chain `T1 -> T2 -> ... -> Tn`.
    pub fn chain(tasks: Vec<String>) -> Result<Self, ComposeError> {
        let edges = tasks
            .windows(2)
            .map(|w| (w[0].clone(), w[1].clone()))
            .collect();
        Self::new(tasks, edges, BTreeMap::new())
    }

    pub fn tasks(&self) -> &[String] {
        &self.tasks
    }

    pub fn edges(&self) -> &[(String, String)] {
        &self.edges
    }

    pub fn contains(&self, task: &str) -> bool {
        self.predecessors.contains_key(task)
    }

    /// Tasks in topological order.
    pub fn order(&self) -> &[String] {
        &self.order
    }

    /// Direct predecessors, in topological order.
    pub fn predecessors(&self, task: &str) -> &[String] {
        self.predecessors.get(task).map_or(&[], Vec::as_slice)
    }

    /// Direct successors, in topological order.
    pub fn successors(&self, task: &str) -> &[String] {
        self.successors.get(task).map_or(&[], Vec::as_slice)
    }

    pub fn link_pairs(&self, from: &str, to: &str) -> Option<&[(usize, usize)]> {
        self.link_pairs
            .get(&(from.to_string(), to.to_string()))
            .map(Vec::as_slice)
    }

    pub fn all_link_pairs(&self) -> &BTreeMap<(String, String), Vec<(usize, usize)>> {
        &self.link_pairs
    }
}
