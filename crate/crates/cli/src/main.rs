use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qoscomp::bench::{axis_trend, run_grid, size_trend, to_csv, Axis, BenchSettings};
use qoscomp::cba;
use qoscomp::composer::ComposeError;
use qoscomp::engine::{self, EngineError, Inputs};
use qoscomp::io::{
    self, generate_synthetic, load_config, load_plan, load_registry, load_taxonomy, write_file,
    write_plan, write_registry, write_taxonomy, DataError, EngineConfig,
};
use qoscomp::leveling::{AttributeRequest, LevelScheme};
use qoscomp::ontology::MatchError;
use qoscomp::report::{composite_json, write_composite, Report, SavedReport};

#[derive(Parser)]
#[command(name = "qoscomp", version, about = "QoS-aware service composition engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select the primary and first alternative composite services.
    Compose {
        #[command(flatten)]
        inputs: InputArgs,
        /// Print the JSON report instead of text.
        #[arg(long)]
        json: bool,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time the ranking phase over a grid of synthetic instances.
    Bench {
        /// Axis values, `10,20,30` for both axes or `10,20x5,10` for
        /// tasks x candidates.
        #[arg(long, default_value = "10,20,30,40,50")]
        grid: String,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        attributes: usize,
        /// Time classification separately and add it as a column.
        #[arg(long)]
        include_classification: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic registry, plan, taxonomy and config.
    Generate {
        #[arg(long, default_value_t = 10)]
        tasks: usize,
        #[arg(long, default_value_t = 10)]
        candidates: usize,
        #[arg(long, default_value_t = 4)]
        attributes: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and print the classifier of every task, or of a training CSV.
    Classify {
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long)]
        task: Option<String>,
        /// Train on this CSV (attribute columns then `class`) instead.
        #[arg(long, conflicts_with = "task")]
        training: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replace a failed service in a saved composite.
    Replace {
        #[command(flatten)]
        inputs: InputArgs,
        /// JSON report written by `compose --out`.
        #[arg(long)]
        composite: PathBuf,
        /// `TASK:SERVICE` that became unavailable.
        #[arg(long)]
        fail: String,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    registry: Option<PathBuf>,
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Comma-separated class coefficients, e.g. `1,0.75,0.25`.
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    bins: Option<u32>,
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| anyhow!("missing --{flag}"))
}

fn load_stage<T>(r: Result<T, DataError>) -> Result<T, EngineError> {
    r.map_err(|e| EngineError::new(engine::Stage::Load, e))
}

impl InputArgs {
    fn config(&self) -> Result<EngineConfig> {
        let mut config = match &self.config {
            Some(p) => load_stage(load_config(p))?,
            None => EngineConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(t) = self.threshold {
            config.threshold = t;
        }
        if let Some(b) = self.bins {
            config.bins = b;
        }
        if let Some(levels) = &self.levels {
            let coefficients = levels
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .with_context(|| format!("--levels `{levels}` is not a number list"))?;
            config.levels = LevelScheme::new(coefficients)
                .map_err(|e| EngineError::new(engine::Stage::Validate, e))?;
        }
        config
            .validate()
            .map_err(|e| EngineError::new(engine::Stage::Validate, e))?;
        Ok(config)
    }

    fn load(&self) -> Result<Inputs> {
        let registry = load_stage(load_registry(required(&self.registry, "registry")?))?;
        let plan = load_stage(load_plan(required(&self.plan, "plan")?))?;
        let taxonomy = load_stage(load_taxonomy(required(&self.taxonomy, "taxonomy")?))?;
        let mut config = self.config()?;
        if config.request.attributes.is_empty() {
            // No request: accept the whole observed range of every attribute.
            for (rank, attr) in registry.schema().attributes().iter().enumerate() {
                let values = registry.records().iter().map(|r| r.values[&attr.name]);
                let lo = values.clone().fold(f64::INFINITY, f64::min);
                let hi = values.fold(f64::NEG_INFINITY, f64::max);
                config.request.attributes.insert(
                    attr.name.clone(),
                    AttributeRequest {
                        lo,
                        hi,
                        rank: rank as u32 + 1,
                    },
                );
            }
        }
        let inputs = Inputs {
            registry,
            plan,
            taxonomy,
            config,
        };
        inputs.validate()?;
        Ok(inputs)
    }
}

fn emit(text: &str, out: Option<&Path>, file_text: Option<&str>) -> Result<()> {
    print!("{text}");
    if let Some(path) = out {
        write_file(path, file_text.unwrap_or(text)).map_err(|e| EngineError::new(engine::Stage::Load, e))?;
    }
    Ok(())
}

fn parse_grid(grid: &str) -> Result<(Vec<usize>, Vec<usize>)> {
    let axis = |s: &str| -> Result<Vec<usize>> {
        let values = s
            .split(',')
            .map(|v| v.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("bad grid axis `{s}`"))?;
        if values.is_empty() || values.contains(&0) {
            bail!("grid values must be positive integers");
        }
        Ok(values)
    };
    match grid.split_once('x') {
        Some((t, c)) => Ok((axis(t)?, axis(c)?)),
        None => {
            let v = axis(grid)?;
            Ok((v.clone(), v))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compose { inputs, json, out } => {
            let inputs = inputs.load()?;
            let outcome = engine::run(&inputs)?;
            let report = Report::new(&outcome);
            let json_text = report.to_json();
            let shown = if json { json_text.clone() } else { report.to_text() };
            emit(&shown, out.as_deref(), Some(&json_text))
        }
        Command::Bench {
            grid,
            reps,
            seed,
            attributes,
            include_classification,
            out,
        } => {
            let (tasks, candidates) = parse_grid(&grid)?;
            let settings = BenchSettings {
                attributes,
                repetitions: reps,
                seed,
                include_classification,
                config: EngineConfig::default(),
            };
            let results = run_grid(&tasks, &candidates, &settings)?;
            let csv = to_csv(&results);
            let fmt = |r: Option<f64>| r.map_or("n/a".to_string(), |v| format!("{v:.3}"));
            eprintln!(
                "spearman: tasks axis {}, candidates axis {}, tasks x candidates {}",
                fmt(axis_trend(&results, Axis::Tasks)),
                fmt(axis_trend(&results, Axis::Candidates)),
                fmt(size_trend(&results))
            );
            emit(&csv, out.as_deref(), None)
        }
        Command::Generate {
            tasks,
            candidates,
            attributes,
            seed,
            out,
        } => {
            if tasks == 0 || candidates == 0 || attributes == 0 {
                bail!("--tasks, --candidates and --attributes must be at least 1");
            }
            let s = load_stage(generate_synthetic(tasks, candidates, attributes, seed))?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let config = EngineConfig {
                seed,
                request: s.request.clone(),
                ..EngineConfig::default()
            };
            let files = [
                ("registry.csv", write_registry(&s.registry)),
                ("plan.json", write_plan(&s.plan)),
                ("taxonomy.txt", write_taxonomy(&s.taxonomy)),
                ("config.json", config.to_json()),
            ];
            for (name, text) in files {
                load_stage(write_file(&out.join(name), &text))?;
            }
            println!(
                "wrote {} services over {} tasks to {}",
                s.registry.records().len(),
                tasks,
                out.display()
            );
            Ok(())
        }
        Command::Classify {
            inputs,
            task,
            training,
            out,
        } => {
            let text = match training {
                Some(path) => {
                    let config = inputs.config()?;
                    let text = std::fs::read_to_string(&path)
                        .map_err(|source| DataError::Io { path: path.clone(), source })
                        .map_err(|e| EngineError::new(engine::Stage::Load, e))?;
                    let data = load_stage(io::parse_training_csv(&text))?;
                    let classifier = cba::train(&data, &config.mining)
                        .map_err(|e| EngineError::new(engine::Stage::Classify, e))?;
                    classifier.to_text()
                }
                None => {
                    let inputs = inputs.load()?;
                    if let Some(t) = &task {
                        if !inputs.plan.contains(t) {
                            return Err(EngineError::new(
                                engine::Stage::Validate,
                                ComposeError::UnknownTask(t.clone()),
                            )
                            .into());
                        }
                    }
                    let ranking =
                        engine::rank_services(&inputs, &mut engine::ClassifierCache::default())?;
                    let mut text = String::new();
                    for (name, classifier) in &ranking.classifiers {
                        if task.as_ref().is_some_and(|t| t != name) {
                            continue;
                        }
                        text.push_str(&format!("# task {name}\n"));
                        text.push_str(&classifier.to_text());
                        for s in &ranking.scored[name] {
                            text.push_str(&format!(
                                "# {} L{} U={:.6}\n",
                                s.service_id, s.level, s.utility
                            ));
                        }
                    }
                    text
                }
            };
            emit(&text, out.as_deref(), None)
        }
        Command::Replace {
            inputs,
            composite,
            fail,
            json,
            out,
        } => {
            let (task, service) = fail
                .split_once(':')
                .ok_or_else(|| anyhow!("--fail expects TASK:SERVICE, got `{fail}`"))?;
            let inputs = inputs.load()?;
            let text = std::fs::read_to_string(&composite)
                .map_err(|source| DataError::Io { path: composite.clone(), source })
                .map_err(|e| EngineError::new(engine::Stage::Load, e))?;
            let saved: SavedReport = serde_json::from_str(&text)
                .map_err(|e| EngineError::new(engine::Stage::Load, e))?;
            let replaced = engine::replace(&inputs, &saved.primary, task, service)?;
            let json_text = composite_json(&replaced);
            let shown = if json {
                json_text.clone()
            } else {
                let mut s = String::new();
                write_composite(&mut s, "replacement", &replaced);
                s
            };
            emit(&shown, out.as_deref(), Some(&json_text))
        }
    }
}

/// Exit status per error kind.
fn exit_code(err: &anyhow::Error) -> u8 {
    let Some(e) = err.downcast_ref::<EngineError>() else {
        return 2;
    };
    match &e.kind {
        DataError::Io { .. } => 3,
        DataError::Parse { .. }
        | DataError::Json(_)
        | DataError::Csv(_)
        | DataError::UnknownAttribute(_)
        | DataError::NonFiniteValue { .. }
        | DataError::EmptyRegistry => 4,
        DataError::Qos(_) => 5,
        DataError::Match(MatchError::DisjointMatch { .. } | MatchError::NoSharedParameters { .. }) => 11,
        DataError::Match(_) => 6,
        DataError::UnknownTask { .. } | DataError::UnknownParameter { .. } => 7,
        DataError::Plan(c) => match c {
            ComposeError::InvalidPlan(_) | ComposeError::UnknownTask(_) | ComposeError::CycleDetected(_) => 7,
            ComposeError::NoEligibleCandidate(_) => 10,
            ComposeError::NoAdmissibleLink(_) => 11,
            ComposeError::NoReplacementCandidate(_) => 12,
            ComposeError::NotSelectedService { .. } => 13,
            ComposeError::NoAlternative => 14,
            ComposeError::Match(_) => 6,
        },
        DataError::Level(_) | DataError::InvalidConfig(_) => 8,
        DataError::Cba(_) => 9,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
