//! End-to-end pipeline: validation, per-task scaling and classification,
//! eligibility, then composition.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::cba::Classifier;
use crate::composer::{
    build_search_graph, first_alternative, replace_unavailable, Candidate, ComposeError,
    CompositeService, CompositionPlan, SearchGraph, ServiceLinks,
};
use crate::io::{DataError, EngineConfig, Registry};
use crate::leveling::{
    band_profile, classify_candidates, compute_utility, filter_eligible, BandProfile,
    ScoredService,
};
use crate::ontology::Taxonomy;
use crate::qos::{normalize_all, QosVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Load,
    Validate,
    Scale,
    Classify,
    Compose,
    Alternative,
    Replace,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Load => "load",
            Stage::Validate => "validate",
            Stage::Scale => "scale",
            Stage::Classify => "classify",
            Stage::Compose => "compose",
            Stage::Alternative => "alternative",
            Stage::Replace => "replace",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
#[error("[{stage}] {kind}")]
pub struct EngineError {
    pub stage: Stage,
    pub task: Option<String>,
    pub kind: DataError,
}

impl EngineError {
    pub fn new(stage: Stage, source: impl Into<DataError>) -> Self {
        Self {
            stage,
            task: None,
            kind: source.into(),
        }
    }

    fn at(stage: Stage, task: &str, source: impl Into<DataError>) -> Self {
        Self {
            stage,
            task: Some(task.to_string()),
            kind: source.into(),
        }
    }
}

/// Everything the engine reads, already parsed.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub registry: Registry,
    pub plan: CompositionPlan,
    pub taxonomy: Taxonomy,
    pub config: EngineConfig,
}

impl Inputs {
    /// Referential and range checks across all artifacts.
    pub fn validate(&self) -> Result<(), EngineError> {
        self.config
            .validate_for(self.registry.schema())
            .and_then(|_| self.registry.validate_against(&self.plan, &self.taxonomy))
            .map_err(|e| EngineError::new(Stage::Validate, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskDiagnostics {
    pub task: String,
    pub candidates: usize,
    pub eligible: usize,
    /// Candidate count per level, index 0 is level 1.
    pub level_counts: Vec<usize>,
    pub rules: usize,
    pub default_class: String,
}

/// Scored and eligible services of every plan task.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub scored: BTreeMap<String, Vec<ScoredService>>,
    pub eligible: BTreeMap<String, Vec<Candidate>>,
    pub classifiers: BTreeMap<String, Classifier>,
    pub diagnostics: Vec<TaskDiagnostics>,
}

/// Classifiers are trained once per distinct band profile.
#[derive(Debug, Default)]
pub struct ClassifierCache {
    trained: HashMap<BandProfile, Classifier>,
}

impl ClassifierCache {
    pub fn len(&self) -> usize {
        self.trained.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trained.is_empty()
    }

    fn get_or_train(
        &mut self,
        profile: BandProfile,
        config: &EngineConfig,
    ) -> Result<&Classifier, DataError> {
        if !self.trained.contains_key(&profile) {
            let data = profile.training_set();
            let classifier = crate::cba::train(&data, &config.mining)?;
            self.trained.insert(profile.clone(), classifier);
        }
        Ok(&self.trained[&profile])
    }
}

/// Scales, classifies and scores each task's candidates against extremes
/// taken over that task only, then applies the eligibility threshold.
pub fn rank_services(inputs: &Inputs, cache: &mut ClassifierCache) -> Result<Ranking, EngineError> {
    let config = &inputs.config;
    let schema = inputs.registry.schema();
    let groups = inputs.registry.by_task();
    let mut ranking = Ranking {
        scored: BTreeMap::new(),
        eligible: BTreeMap::new(),
        classifiers: BTreeMap::new(),
        diagnostics: Vec::new(),
    };
    for task in inputs.plan.order() {
        let records = groups.get(task.as_str()).map_or(&[][..], Vec::as_slice);
        if records.is_empty() {
            ranking.scored.insert(task.clone(), Vec::new());
            ranking.eligible.insert(task.clone(), Vec::new());
            continue;
        }
        let vectors: Vec<QosVector> = records.iter().map(|r| r.qos()).collect();
        let (extremes, normalized) =
            normalize_all(&vectors, schema).map_err(|e| EngineError::at(Stage::Scale, task, e))?;
        let classify_err = |e: DataError| EngineError::at(Stage::Classify, task, e);
        let profile = band_profile(&config.request, &extremes, schema, &config.levels, config.bins)
            .map_err(|e| classify_err(e.into()))?;
        let classifier = cache.get_or_train(profile, config).map_err(classify_err)?;
        let levels = classify_candidates(&normalized, classifier, config.bins)
            .map_err(|e| classify_err(e.into()))?;
        let mut level_counts = vec![0; config.levels.n_levels()];
        let mut scored = Vec::with_capacity(normalized.len());
        for (n, (_, level)) in normalized.into_iter().zip(levels) {
            let utility =
                compute_utility(&n, level, &config.levels).map_err(|e| classify_err(e.into()))?;
            level_counts[level - 1] += 1;
            scored.push(ScoredService {
                service_id: n.service_id.clone(),
                normalized: n,
                level,
                utility,
            });
        }
        let eligible: Vec<Candidate> = filter_eligible(&scored, config.threshold)
            .iter()
            .map(Candidate::from)
            .collect();
        ranking.diagnostics.push(TaskDiagnostics {
            task: task.clone(),
            candidates: scored.len(),
            eligible: eligible.len(),
            level_counts,
            rules: classifier.rules.len(),
            default_class: classifier.default_class.clone(),
        });
        ranking.classifiers.insert(task.clone(), classifier.clone());
        ranking.scored.insert(task.clone(), scored);
        ranking.eligible.insert(task.clone(), eligible);
    }
    Ok(ranking)
}

pub fn service_links<'a>(inputs: &'a Inputs) -> Result<ServiceLinks<'a>, EngineError> {
    let interfaces = inputs
        .registry
        .interfaces(&inputs.taxonomy)
        .map_err(|e| EngineError::new(Stage::Validate, e))?;
    Ok(ServiceLinks::new(
        &inputs.taxonomy,
        &inputs.plan,
        interfaces,
        &inputs.registry.services_by_task(),
    ))
}

fn compose_error(stage: Stage, e: ComposeError) -> EngineError {
    let task = match &e {
        ComposeError::NoEligibleCandidate(t)
        | ComposeError::NoAdmissibleLink(t)
        | ComposeError::NoReplacementCandidate(t)
        | ComposeError::UnknownTask(t) => Some(t.clone()),
        ComposeError::NotSelectedService { task, .. } => Some(task.clone()),
        _ => None,
    };
    EngineError {
        stage,
        task,
        kind: e.into(),
    }
}

#[derive(Debug, Clone)]
pub struct Composition {
    pub graph: SearchGraph,
    pub primary: CompositeService,
    /// `None` when no queue has a runner-up.
    pub alternative: Option<CompositeService>,
}

pub fn compose_ranked(
    inputs: &Inputs,
    ranking: &Ranking,
    links: &ServiceLinks<'_>,
) -> Result<Composition, EngineError> {
    let (graph, primary) = build_search_graph(&inputs.plan, &ranking.eligible, links)
        .map_err(|e| compose_error(Stage::Compose, e))?;
    let alternative = match first_alternative(&graph, &primary, links) {
        Ok(alt) => Some(alt),
        Err(ComposeError::NoAlternative) => None,
        Err(e) => return Err(compose_error(Stage::Alternative, e)),
    };
    Ok(Composition {
        graph,
        primary,
        alternative,
    })
}

/// Outcome of a full run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub ranking: Ranking,
    pub composition: Composition,
}

pub fn run(inputs: &Inputs) -> Result<Outcome, EngineError> {
    inputs.validate()?;
    let ranking = rank_services(inputs, &mut ClassifierCache::default())?;
    let links = service_links(inputs)?;
    let composition = compose_ranked(inputs, &ranking, &links)?;
    Ok(Outcome {
        ranking,
        composition,
    })
}

/// Re-runs the pipeline to rebuild the search graph, then replaces
/// `failed_service` at `task` in `composite`.
pub fn replace(
    inputs: &Inputs,
    composite: &CompositeService,
    task: &str,
    failed_service: &str,
) -> Result<CompositeService, EngineError> {
    let mut outcome = run(inputs)?;
    let links = service_links(inputs)?;
    replace_unavailable(
        &mut outcome.composition.graph,
        composite,
        task,
        failed_service,
        &links,
    )
    .map_err(|e| compose_error(Stage::Replace, e))
}
