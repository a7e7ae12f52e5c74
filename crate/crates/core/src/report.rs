//! Composite reports in JSON and plain text. Field order is fixed so equal
//! runs produce equal bytes.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::composer::CompositeService;
use crate::engine::{Outcome, TaskDiagnostics};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report<'a> {
    pub primary: &'a CompositeService,
    pub alternative: Option<&'a CompositeService>,
    pub tasks: &'a [TaskDiagnostics],
}

impl<'a> Report<'a> {
    pub fn new(outcome: &'a Outcome) -> Self {
        Self {
            primary: &outcome.composition.primary,
            alternative: outcome.composition.alternative.as_ref(),
            tasks: &outcome.ranking.diagnostics,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "tasks").unwrap();
        for d in self.tasks {
            let levels: Vec<String> = d.level_counts.iter().map(usize::to_string).collect();
            writeln!(
                out,
                "  {}: {} candidates, {} eligible, levels [{}], {} rules, default {}",
                d.task,
                d.candidates,
                d.eligible,
                levels.join(" "),
                d.rules,
                d.default_class
            )
            .unwrap();
        }
        write_composite(&mut out, "primary", self.primary);
        match self.alternative {
            Some(alt) => write_composite(&mut out, "alternative", alt),
            None => writeln!(out, "alternative: none").unwrap(),
        }
        out
    }
}

pub fn write_composite(out: &mut String, title: &str, c: &CompositeService) {
    writeln!(out, "{title} (score {:.6})", c.score).unwrap();
    for s in &c.selections {
        writeln!(
            out,
            "  {} -> {}  U={:.6} F={:.6} q={:.6}",
            s.task, s.service_id, s.utility, s.final_utility, s.link_quality
        )
        .unwrap();
    }
}

/// The part of a saved report needed to replay a failure.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SavedReport {
    pub primary: CompositeService,
}

pub fn composite_json(c: &CompositeService) -> String {
    let mut s = serde_json::to_string_pretty(c).expect("composite serializes");
    s.push('\n');
    s
}
