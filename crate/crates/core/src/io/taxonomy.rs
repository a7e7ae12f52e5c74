use crate::ontology::{Taxonomy, TaxonomyAxioms};

use super::DataError;

/// Parses `concept X`, `subclass Child Parent`, `equiv A B` and
/// `disjoint A B` records, one per line. `#` starts a comment.
pub fn parse_taxonomy(text: &str) -> Result<Taxonomy, DataError> {
    let mut axioms = TaxonomyAxioms::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |message: &str| DataError::Parse {
            line: idx + 1,
            message: format!("{message}: `{line}`"),
        };
        let pair = || (fields[1].to_string(), fields[2].to_string());
        match (fields[0], fields.len()) {
            ("concept", 2) => axioms.concepts.push(fields[1].to_string()),
            ("subclass", 3) => axioms.subclass.push(pair()),
            ("equiv", 3) => axioms.equivalent.push(pair()),
            ("disjoint", 3) => axioms.disjoint.push(pair()),
            ("concept" | "subclass" | "equiv" | "disjoint", _) => {
                return Err(bad("wrong number of fields"))
            }
            _ => return Err(bad("unknown record")),
        }
    }
    Ok(Taxonomy::new(axioms)?)
}

pub fn write_taxonomy(taxonomy: &Taxonomy) -> String {
    taxonomy.to_text()
}
