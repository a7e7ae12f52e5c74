//! Timing harness for the ranking phase over synthetic instances.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::time::Instant;

use crate::composer::{build_search_graph, first_alternative, ComposeError, CompositeService};
use crate::engine::{rank_services, service_links, ClassifierCache, EngineError, Inputs, Stage};
use crate::io::{generate_synthetic, EngineConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub tasks: usize,
    pub candidates: usize,
    pub repetitions: usize,
    /// Graph build, selection and first alternative, per run.
    pub runs_ms: Vec<f64>,
    pub mean_ranking_ms: f64,
    pub mean_primary_ms: f64,
    pub mean_alternative_ms: f64,
    pub mean_classification_ms: Option<f64>,
    /// Task to service of the primary composite.
    pub assignment: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSettings {
    pub attributes: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub include_classification: bool,
    pub config: EngineConfig,
}

impl Default for BenchSettings {
    fn default() -> Self {
        Self {
            attributes: 4,
            repetitions: 20,
            seed: 42,
            include_classification: false,
            config: EngineConfig::default(),
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

pub fn run_point(
    tasks: usize,
    candidates: usize,
    settings: &BenchSettings,
) -> Result<BenchResult, EngineError> {
    let instance = generate_synthetic(tasks, candidates, settings.attributes, settings.seed)
        .map_err(|e| EngineError::new(Stage::Load, e))?;
    let inputs = Inputs {
        registry: instance.registry,
        plan: instance.plan,
        taxonomy: instance.taxonomy,
        config: EngineConfig {
            request: instance.request,
            ..settings.config.clone()
        },
    };
    inputs.validate()?;
    let reps = settings.repetitions.max(1);

    let mut classification_ms = Vec::new();
    let ranking = if settings.include_classification {
        let mut last = None;
        for _ in 0..reps {
            let t = Instant::now();
            last = Some(rank_services(&inputs, &mut ClassifierCache::default())?);
            classification_ms.push(ms(t));
        }
        last.unwrap()
    } else {
        rank_services(&inputs, &mut ClassifierCache::default())?
    };
    let links = service_links(&inputs)?;

    let once = || -> Result<(f64, f64, CompositeService), EngineError> {
        let t = Instant::now();
        let (graph, primary) = build_search_graph(&inputs.plan, &ranking.eligible, &links)
            .map_err(|e| EngineError::new(Stage::Compose, e))?;
        let primary_ms = ms(t);
        let t = Instant::now();
        match first_alternative(&graph, &primary, &links) {
            Ok(_) | Err(ComposeError::NoAlternative) => {}
            Err(e) => return Err(EngineError::new(Stage::Alternative, e)),
        }
        Ok((primary_ms, ms(t), primary))
    };

    let (_, _, primary) = once()?;
    let mut primary_ms = Vec::with_capacity(reps);
    let mut alternative_ms = Vec::with_capacity(reps);
    for _ in 0..reps {
        let (p, a, _) = once()?;
        primary_ms.push(p);
        alternative_ms.push(a);
    }
    let runs_ms: Vec<f64> = primary_ms.iter().zip(&alternative_ms).map(|(p, a)| p + a).collect();
    Ok(BenchResult {
        tasks,
        candidates,
        repetitions: reps,
        mean_ranking_ms: mean(&runs_ms),
        runs_ms,
        mean_primary_ms: mean(&primary_ms),
        mean_alternative_ms: mean(&alternative_ms),
        mean_classification_ms: settings
            .include_classification
            .then(|| mean(&classification_ms)),
        assignment: primary
            .selections
            .into_iter()
            .map(|s| (s.task, s.service_id))
            .collect(),
    })
}

/// Every `(tasks, candidates)` pair of `tasks_axis x candidates_axis`,
/// run sequentially.
pub fn run_grid(
    tasks_axis: &[usize],
    candidates_axis: &[usize],
    settings: &BenchSettings,
) -> Result<Vec<BenchResult>, EngineError> {
    let mut out = Vec::with_capacity(tasks_axis.len() * candidates_axis.len());
    for &t in tasks_axis {
        for &c in candidates_axis {
            out.push(run_point(t, c, settings)?);
        }
    }
    Ok(out)
}

pub fn to_csv(results: &[BenchResult]) -> String {
    let with_classification = results.iter().any(|r| r.mean_classification_ms.is_some());
    let mut out = String::from(
        "tasks,candidates,repetitions,mean_ranking_ms,mean_primary_ms,mean_alternative_ms",
    );
    if with_classification {
        out.push_str(",mean_classification_ms");
    }
    out.push('\n');
    for r in results {
        write!(
            out,
            "{},{},{},{:.6},{:.6},{:.6}",
            r.tasks,
            r.candidates,
            r.repetitions,
            r.mean_ranking_ms,
            r.mean_primary_ms,
            r.mean_alternative_ms
        )
        .unwrap();
        if with_classification {
            write!(out, ",{:.6}", r.mean_classification_ms.unwrap_or(0.0)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// 1-based ranks with ties sharing their average rank.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of average ranks. `None`
/// when either side is constant or fewer than two points are given.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let (mx, my) = (mean(&rx), mean(&ry));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Tasks,
    Candidates,
}

/// Mean over slices of the Spearman correlation between the axis value and
/// mean ranking time, each slice holding the other axis fixed.
pub fn axis_trend(results: &[BenchResult], axis: Axis) -> Option<f64> {
    let mut slices: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in results {
        let (fixed, varying) = match axis {
            Axis::Tasks => (r.candidates, r.tasks),
            Axis::Candidates => (r.tasks, r.candidates),
        };
        let slot = slices.entry(fixed).or_default();
        slot.0.push(varying as f64);
        slot.1.push(r.mean_ranking_ms);
    }
    let rhos: Vec<f64> = slices
        .values()
        .filter_map(|(x, y)| spearman(x, y))
        .collect();
    (!rhos.is_empty()).then(|| mean(&rhos))
}

/// Spearman correlation between `tasks * candidates` and mean ranking time
/// over all grid points.
pub fn size_trend(results: &[BenchResult]) -> Option<f64> {
    let size: Vec<f64> = results.iter().map(|r| (r.tasks * r.candidates) as f64).collect();
    let time: Vec<f64> = results.iter().map(|r| r.mean_ranking_ms).collect();
    spearman(&size, &time)
}
