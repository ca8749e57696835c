//! Problem JSON.
//!
//! ```json
//! {
//!   "version": 1,
//!   "id": "progression-number-grid_3x3-00000000000000ff",
//!   "layout": "grid_3x3",
//!   "context": [{"slots": [{"slot": 0, "shape": "square", "size": 2, "color": 4, "angle": 0}]}, ...],
//!   "answers": [...8 panels...],
//!   "correct_index": 5,
//!   "concept_tags": [{"family": "progression", "attributes": ["number"], "layout": "grid_3x3", ...}],
//!   "answer_strategy": "fair_bisection",
//!   "rules": {"layout": "grid_3x3", "rules": [...], "free": [...]},
//!   "seed": 255
//! }
//! ```
//!
//! `angle` is in degrees. The ground truth is `answers[correct_index]`.

use serde::{Deserialize, Serialize};

use super::answers::{Strategy, CANDIDATES};
use super::generator::{ConceptSpec, Problem, RavenMatrix};
use super::model::{Entity, LayoutKind, Panel};
use super::rules::RuleSet;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IoError {
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
}

fn violation(path: impl Into<String>, message: impl Into<String>) -> IoError {
    IoError::SchemaViolation { path: path.into(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelJson {
    pub slots: Vec<Entity>,
}

impl From<&Panel> for PanelJson {
    fn from(p: &Panel) -> Self {
        PanelJson { slots: p.entities().to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemJson {
    version: u32,
    id: String,
    layout: LayoutKind,
    context: Vec<PanelJson>,
    answers: Vec<PanelJson>,
    correct_index: usize,
    concept_tags: Vec<ConceptSpec>,
    answer_strategy: Strategy,
    rules: RuleSet,
    seed: u64,
}

pub fn panels_to_json(panels: &[Panel]) -> Vec<PanelJson> {
    panels.iter().map(PanelJson::from).collect()
}

/// Converts wire panels, reporting errors under `field[i]`.
pub fn panels_from_json(layout: LayoutKind, panels: &[PanelJson], field: &str) -> Result<Vec<Panel>, IoError> {
    panels
        .iter()
        .enumerate()
        .map(|(i, p)| {
            Panel::new(layout, p.slots.clone()).map_err(|e| violation(format!("{field}[{i}].slots"), e.to_string()))
        })
        .collect()
}

pub fn write_problem(problem: &Problem) -> String {
    let json = ProblemJson {
        version: FORMAT_VERSION,
        id: problem.id.clone(),
        layout: problem.layout(),
        context: panels_to_json(&problem.matrix.context),
        answers: panels_to_json(&problem.answers),
        correct_index: problem.correct_index,
        concept_tags: problem.concept_tags.clone(),
        answer_strategy: problem.answer_strategy,
        rules: problem.matrix.ruleset.clone(),
        seed: problem.seed,
    };
    let mut text = serde_json::to_string_pretty(&json).expect("problem serializes");
    text.push('\n');
    text
}

pub fn read_problem(text: &str) -> Result<Problem, IoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let json: ProblemJson = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        violation(path, e.into_inner().to_string())
    })?;
    if json.version != FORMAT_VERSION {
        return Err(violation("version", format!("unsupported version {}", json.version)));
    }
    if json.context.len() != 8 {
        return Err(violation("context", format!("expected 8 panels, got {}", json.context.len())));
    }
    if json.answers.len() != CANDIDATES {
        return Err(violation("answers", format!("expected {CANDIDATES} panels, got {}", json.answers.len())));
    }
    if json.correct_index >= CANDIDATES {
        return Err(violation("correct_index", format!("{} is not in 0..{CANDIDATES}", json.correct_index)));
    }
    let context = panels_from_json(json.layout, &json.context, "context")?;
    let answers = panels_from_json(json.layout, &json.answers, "answers")?;
    for i in 0..answers.len() {
        if answers[..i].contains(&answers[i]) {
            return Err(violation(format!("answers[{i}]"), "duplicate candidate"));
        }
    }
    let rules = RuleSet::new(json.rules.layout, json.rules.rules.clone(), json.rules.free.clone())
        .map_err(|e| violation("rules", e.to_string()))?;
    if rules != json.rules {
        return Err(violation("rules", "rules and free attributes must be sorted"));
    }
    if rules.layout != json.layout {
        return Err(violation("rules.layout", "differs from problem layout"));
    }
    for (i, spec) in json.concept_tags.iter().enumerate() {
        spec.validate().map_err(|e| violation(format!("concept_tags[{i}]"), e.to_string()))?;
    }
    Ok(Problem {
        id: json.id,
        matrix: RavenMatrix { context, ground_truth: answers[json.correct_index].clone(), ruleset: rules },
        answers,
        correct_index: json.correct_index,
        concept_tags: json.concept_tags,
        answer_strategy: json.answer_strategy,
        seed: json.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raven::generator::{sample_problem, Family};
    use crate::raven::model::Attribute;

    fn problem() -> Problem {
        let spec = ConceptSpec::new(Family::Sameness, &[Attribute::Color], LayoutKind::Grid2x2);
        sample_problem(&spec, 7).unwrap()
    }

    #[test]
    fn round_trip() {
        let p = problem();
        assert_eq!(read_problem(&write_problem(&p)).unwrap(), p);
    }

    #[test]
    fn truncated_text_is_a_schema_violation() {
        let text = write_problem(&problem());
        let err = read_problem(&text[..text.len() / 2]).unwrap_err();
        assert!(matches!(err, IoError::SchemaViolation { .. }));
    }

    #[test]
    fn errors_carry_the_json_path() {
        let text = write_problem(&problem()).replacen("\"size\": ", "\"size\": 40", 1);
        let IoError::SchemaViolation { path, .. } = read_problem(&text).unwrap_err();
        assert!(path.starts_with("context[0].slots"), "{path}");
        let mut value: serde_json::Value = serde_json::from_str(&write_problem(&problem())).unwrap();
        value["answers"][3]["slots"][0]["shape"] = "octagon".into();
        let IoError::SchemaViolation { path, .. } = read_problem(&value.to_string()).unwrap_err();
        assert_eq!(path, "answers[3].slots[0].shape");
    }
}
