use std::collections::HashMap;

use crate::ontology::{matching_quality, MatchCache, MatchError, MatchType, Taxonomy};

use super::plan::CompositionPlan;

/// Quality of the semantic link between two concrete services.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub quality: f64,
    pub matches: Vec<MatchType>,
}

/// Source of semantic link qualities between services bound to adjacent
/// tasks. `Err` marks an inadmissible link.
pub trait LinkModel {
    fn link(
        &self,
        from_task: &str,
        from_service: &str,
        to_task: &str,
        to_service: &str,
    ) -> Result<Link, MatchError>;
}

/// Input and output concept ids of one service, in parameter order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ServiceInterface {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

/// Link model over a taxonomy, the services' declared parameters and the
/// plan's parameter wiring. Match types of every wired concept pair are
/// computed up front.
pub struct ServiceLinks<'a> {
    taxonomy: &'a Taxonomy,
    plan: &'a CompositionPlan,
    interfaces: HashMap<String, ServiceInterface>,
    cache: MatchCache,
}

impl<'a> ServiceLinks<'a> {
    /// `services_by_task` lists the candidates of each task; only services on
    /// either side of a plan edge contribute concept pairs to the cache.
    pub fn new(
        taxonomy: &'a Taxonomy,
        plan: &'a CompositionPlan,
        interfaces: HashMap<String, ServiceInterface>,
        services_by_task: &HashMap<String, Vec<String>>,
    ) -> Self {
        let mut pairs = Vec::new();
        let none = Vec::new();
        for (from_task, to_task) in plan.edges() {
            let wiring = plan.link_pairs(from_task, to_task);
            for a in services_by_task.get(from_task).unwrap_or(&none) {
                for b in services_by_task.get(to_task).unwrap_or(&none) {
                    if let (Some(ia), Some(ib)) = (interfaces.get(a), interfaces.get(b)) {
                        pairs.extend(concept_pairs(ia, ib, wiring));
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let cache = MatchCache::precompute(taxonomy, pairs);
        Self {
            taxonomy,
            plan,
            interfaces,
            cache,
        }
    }

    pub fn cache(&self) -> &MatchCache {
        &self.cache
    }

    pub fn interface(&self, service: &str) -> Option<&ServiceInterface> {
        self.interfaces.get(service)
    }
}

/// Concept-id pairs wired between two services. Out-of-range positions are
/// skipped; loaders reject them before this point.
fn concept_pairs(
    from: &ServiceInterface,
    to: &ServiceInterface,
    wiring: Option<&[(usize, usize)]>,
) -> Vec<(usize, usize)> {
    match wiring {
        Some(positions) => positions
            .iter()
            .filter_map(|&(o, i)| Some((*from.outputs.get(o)?, *to.inputs.get(i)?)))
            .collect(),
        None => from
            .outputs
            .iter()
            .flat_map(|&o| to.inputs.iter().map(move |&i| (o, i)))
            .collect(),
    }
}

impl LinkModel for ServiceLinks<'_> {
    fn link(
        &self,
        from_task: &str,
        from_service: &str,
        to_task: &str,
        to_service: &str,
    ) -> Result<Link, MatchError> {
        let no_params = || MatchError::NoSharedParameters {
            from: from_service.to_string(),
            to: to_service.to_string(),
        };
        let (a, b) = match (self.interfaces.get(from_service), self.interfaces.get(to_service)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(no_params()),
        };
        let pairs = concept_pairs(a, b, self.plan.link_pairs(from_task, to_task));
        if pairs.is_empty() {
            return Err(no_params());
        }
        let mut total = 0.0;
        let mut matches = Vec::with_capacity(pairs.len());
        for (o, i) in pairs {
            let m = self.cache.lookup(self.taxonomy, o, i);
            total += matching_quality(m).ok_or_else(|| MatchError::DisjointMatch {
                from: from_service.to_string(),
                to: to_service.to_string(),
                out_concept: self.taxonomy.concept_name(o).to_string(),
                in_concept: self.taxonomy.concept_name(i).to_string(),
            })?;
            matches.push(m);
        }
        Ok(Link {
            quality: total / matches.len() as f64,
            matches,
        })
    }
}
