//! Concept specifications and the problem generator.
//!
//! A [`ConceptSpec`] names a relation family, the attributes it binds and a
//! layout. Sampling a problem draws a ruleset for the spec, three rows that
//! satisfy it, and a candidate set over the ruled attributes; the draw is
//! repeated until the oracle certifies the ground truth as the unique answer.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::answers::{self, Strategy};
use super::edit::{build_panel, mask_with_count, random_mask, Look};
use super::model::{Angle, Arrangement, Attribute, LayoutKind, Panel, Shape, Value};
use super::oracle::{solve_candidates, Verdict};
use super::rules::{check_row, next_value, Relation, Rule, RuleSet, PROGRESSION_DELTAS};
use crate::seed;

/// Retry budget of [`sample_problem`].
pub const RETRY_BUDGET: usize = 1000;
const ROW_ATTEMPTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Sameness,
    Progression,
    Arithmetic,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Sameness, Family::Progression, Family::Arithmetic];

    pub fn name(self) -> &'static str {
        match self {
            Family::Sameness => "sameness",
            Family::Progression => "progression",
            Family::Arithmetic => "arithmetic",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name.to_ascii_lowercase())
    }

    pub fn relation(self) -> Relation {
        match self {
            Family::Sameness => Relation::Constant,
            Family::Progression => Relation::Progression,
            Family::Arithmetic => Relation::Arithmetic,
        }
    }
}

/// How attributes outside the spec behave.
///
/// - `Free`: sampled independently per panel.
/// - `Constant`: entity attributes constant along each row, entity count too
///   when no arrangement attribute is bound.
/// - `Random`: a random rule per entity attribute and on either `number` or
///   `position`, as in the original RAVEN distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    #[default]
    Free,
    Constant,
    Random,
}

impl Background {
    pub fn name(self) -> &'static str {
        match self {
            Background::Free => "free",
            Background::Constant => "constant",
            Background::Random => "random",
        }
    }

    pub fn from_name(name: &str) -> Option<Background> {
        [Background::Free, Background::Constant, Background::Random]
            .into_iter()
            .find(|b| b.name() == name)
    }
}

fn all_deltas() -> Vec<i8> {
    PROGRESSION_DELTAS.to_vec()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConceptSpec {
    pub family: Family,
    pub attributes: Vec<Attribute>,
    pub layout: LayoutKind,
    /// Allowed progression steps.
    #[serde(default = "all_deltas")]
    pub deltas: Vec<i8>,
    #[serde(default)]
    pub background: Background,
    #[serde(default)]
    pub answers: Strategy,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerationError {
    #[error("invalid concept spec {spec}: {reason}")]
    InvalidSpec { spec: String, reason: String },
    #[error("no well-posed problem for {spec} after {attempts} attempts")]
    GenerationExhausted { spec: String, attempts: usize },
}

impl ConceptSpec {
    /// Spec with default deltas, free background and fair answers;
    /// attributes are sorted and deduplicated.
    pub fn new(family: Family, attributes: &[Attribute], layout: LayoutKind) -> ConceptSpec {
        let mut attributes = attributes.to_vec();
        attributes.sort();
        attributes.dedup();
        ConceptSpec {
            family,
            attributes,
            layout,
            deltas: all_deltas(),
            background: Background::Free,
            answers: Strategy::default(),
        }
    }

    pub fn with_background(mut self, background: Background) -> ConceptSpec {
        self.background = background;
        self
    }

    pub fn with_answers(mut self, strategy: Strategy) -> ConceptSpec {
        self.answers = strategy;
        self
    }

    pub fn with_deltas(mut self, deltas: &[i8]) -> ConceptSpec {
        self.deltas = deltas.to_vec();
        self
    }

    /// Family-level tag, e.g. `sameness`.
    pub fn family_tag(&self) -> String {
        self.family.name().to_string()
    }

    /// Detailed tag, e.g. `sameness/color+shape/center`.
    pub fn tag(&self) -> String {
        let attrs: Vec<&str> = self.attributes.iter().map(|a| a.name()).collect();
        format!("{}/{}/{}", self.family.name(), attrs.join("+"), self.layout.name())
    }

    /// Tags used for report slicing.
    pub fn tags(&self) -> Vec<String> {
        vec![self.family_tag(), self.tag()]
    }

    fn invalid(&self, reason: impl Into<String>) -> GenerationError {
        GenerationError::InvalidSpec { spec: self.tag(), reason: reason.into() }
    }

    /// Attributes that will carry a rule in every sampled ruleset.
    fn always_ruled(&self) -> Vec<Attribute> {
        let mut out = self.attributes.clone();
        if self.background != Background::Free {
            out.extend(
                self.layout
                    .attributes()
                    .into_iter()
                    .filter(|a| a.is_entity_attribute() && !self.attributes.contains(a)),
            );
        }
        out
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.attributes.is_empty() {
            return Err(self.invalid("no bound attribute"));
        }
        let mut sorted = self.attributes.clone();
        sorted.sort();
        sorted.dedup();
        if sorted != self.attributes {
            return Err(self.invalid("attributes must be sorted and distinct"));
        }
        let relation = self.family.relation();
        for &a in &self.attributes {
            if !a.applies_to(self.layout) {
                return Err(self.invalid(format!("{a} is not defined for layout {}", self.layout)));
            }
            if !a.supports(relation) {
                return Err(self.invalid(format!("{} cannot be applied to {a}", relation.name())));
            }
        }
        let arrangement_bound = self.attributes.iter().filter(|a| a.is_arrangement_attribute()).count();
        if self.family != Family::Sameness && arrangement_bound > 1 {
            return Err(self.invalid("at most one of number, position, row, column may vary"));
        }
        if self.family == Family::Progression
            && (self.deltas.is_empty() || self.deltas.iter().any(|d| !PROGRESSION_DELTAS.contains(d)))
        {
            return Err(self.invalid(format!("deltas {:?} not within {PROGRESSION_DELTAS:?}", self.deltas)));
        }
        let capacity: usize = self
            .always_ruled()
            .iter()
            .map(|a| a.domain(self.layout).len())
            .product();
        if capacity < answers::CANDIDATES {
            return Err(self.invalid(format!(
                "ruled attributes admit only {capacity} distinct candidates"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for ConceptSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

/// Context panels (row-major, last cell missing), the missing panel and the
/// ruleset shared by all three rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RavenMatrix {
    pub context: Vec<Panel>,
    pub ground_truth: Panel,
    pub ruleset: RuleSet,
}

impl RavenMatrix {
    pub fn layout(&self) -> LayoutKind {
        self.ruleset.layout
    }

    /// Row `r` (0-based), the last row completed with the ground truth.
    pub fn row(&self, r: usize) -> [Panel; 3] {
        let cell = |i: usize| {
            if i == 8 {
                self.ground_truth.clone()
            } else {
                self.context[i].clone()
            }
        };
        [cell(3 * r), cell(3 * r + 1), cell(3 * r + 2)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub id: String,
    pub matrix: RavenMatrix,
    pub answers: Vec<Panel>,
    pub correct_index: usize,
    pub concept_tags: Vec<ConceptSpec>,
    pub answer_strategy: Strategy,
    pub seed: u64,
}

impl Problem {
    pub fn layout(&self) -> LayoutKind {
        self.matrix.layout()
    }

    /// String tags for report slicing, deduplicated in order.
    pub fn tags(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for t in self.concept_tags.iter().flat_map(ConceptSpec::tags) {
            if !out.contains(&t) {
                out.push(t);
            }
        }
        out
    }
}

pub type Dataset = Vec<Problem>;

fn family_rule<R: Rng + ?Sized>(spec: &ConceptSpec, attribute: Attribute, rng: &mut R) -> Rule {
    match spec.family {
        Family::Sameness => Rule::constant(attribute),
        Family::Progression => {
            let &d = spec.deltas.choose(rng).expect("validated non-empty");
            Rule::progression(attribute, d).expect("validated")
        }
        Family::Arithmetic => {
            let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
            Rule::arithmetic(attribute, sign).expect("validated")
        }
    }
}

/// Draws the ruleset for one problem of `spec`.
pub fn sample_ruleset<R: Rng + ?Sized>(spec: &ConceptSpec, rng: &mut R) -> RuleSet {
    let layout = spec.layout;
    let mut rules: Vec<Rule> = spec.attributes.iter().map(|&a| family_rule(spec, a, rng)).collect();
    let unbound_entity: Vec<Attribute> = layout
        .attributes()
        .into_iter()
        .filter(|a| a.is_entity_attribute() && !spec.attributes.contains(a))
        .collect();
    let arrangement_free =
        layout.arrangement().is_some() && !spec.attributes.iter().any(|a| a.is_arrangement_attribute());
    match spec.background {
        Background::Free => {}
        Background::Constant => {
            rules.extend(unbound_entity.iter().map(|&a| Rule::constant(a)));
            if arrangement_free {
                rules.push(Rule::constant(Attribute::Number));
            }
        }
        Background::Random => {
            for &a in &unbound_entity {
                rules.push(*Rule::all_for(a).choose(rng).expect("constant is always valid"));
            }
            if arrangement_free {
                let mut options = Rule::all_for(Attribute::Number);
                options.extend(Rule::all_for(Attribute::Position));
                rules.push(*options.choose(rng).expect("non-empty"));
            }
        }
    }
    let free = layout
        .attributes()
        .into_iter()
        .filter(|a| !rules.iter().any(|r| r.attribute == *a))
        .collect();
    RuleSet::new(layout, rules, free).expect("sampled rules are valid for the layout")
}

/// Three values obeying `rule`, the first drawn uniformly from the domain.
fn value_triple<R: Rng + ?Sized>(rule: &Rule, layout: LayoutKind, rng: &mut R) -> Option<[Value; 3]> {
    let domain = rule.attribute.domain(layout);
    for _ in 0..ROW_ATTEMPTS {
        let &a = domain.choose(rng)?;
        let b = match rule.relation {
            Relation::Arithmetic => *domain.choose(rng)?,
            _ => match next_value(rule, layout, &[a]) {
                Ok(v) => v,
                Err(_) => continue,
            },
        };
        if let Ok(c) = next_value(rule, layout, &[a, b]) {
            return Some([a, b, c]);
        }
    }
    None
}

fn arrangement_value(arr: Arrangement, attribute: Attribute, mask: Value) -> Value {
    match attribute {
        Attribute::Number => mask.count_ones() as Value,
        Attribute::Position => mask,
        Attribute::Row => arr.rows_of(mask),
        Attribute::Column => arr.columns_of(mask),
        _ => unreachable!("not an arrangement attribute"),
    }
}

fn mask_triple<R: Rng + ?Sized>(rs: &RuleSet, arr: Arrangement, rng: &mut R) -> Option<[Value; 3]> {
    let layout = rs.layout;
    let arrangement_rules: Vec<&Rule> =
        rs.rules.iter().filter(|r| r.attribute.is_arrangement_attribute()).collect();
    for _ in 0..ROW_ATTEMPTS {
        let masks = if let Some(r) = rs.rule_for(Attribute::Position) {
            value_triple(r, layout, rng)?
        } else if let Some(r) = rs.rule_for(Attribute::Number) {
            let counts = value_triple(r, layout, rng)?;
            counts.map(|n| mask_with_count(arr, n as u8, rng))
        } else {
            [random_mask(arr, rng), random_mask(arr, rng), random_mask(arr, rng)]
        };
        let ok = arrangement_rules.iter().all(|r| {
            let v = masks.map(|m| arrangement_value(arr, r.attribute, m));
            r.holds_values(layout, v)
        });
        if ok {
            return Some(masks);
        }
    }
    None
}

fn random_level<R: Rng + ?Sized>(attribute: Attribute, rng: &mut R) -> Value {
    let domain = attribute.domain(LayoutKind::Center);
    *domain.choose(rng).expect("entity domains are non-empty")
}

fn sample_row<R: Rng + ?Sized>(rs: &RuleSet, rng: &mut R) -> Option<[Panel; 3]> {
    let layout = rs.layout;
    let mut columns: Vec<(Attribute, [Value; 3])> = Vec::new();
    for attribute in [Attribute::Shape, Attribute::Size, Attribute::Color, Attribute::Angle] {
        let values = match rs.rule_for(attribute) {
            Some(rule) => value_triple(rule, layout, rng)?,
            None => [0; 3].map(|_| random_level(attribute, rng)),
        };
        columns.push((attribute, values));
    }
    let masks = match layout.arrangement() {
        Some(arr) => Some(mask_triple(rs, arr, rng)?),
        None => None,
    };
    let io = match rs.rule_for(Attribute::InsideOutside) {
        Some(rule) => Some(value_triple(rule, layout, rng)?),
        None => None,
    };
    let panels: Vec<Panel> = (0..3)
        .map(|k| {
            let level = |a: Attribute| columns.iter().find(|(x, _)| *x == a).expect("all entity attributes").1[k];
            let main = Look {
                shape: Shape::from_level(level(Attribute::Shape)).expect("in domain"),
                size: level(Attribute::Size) as u8,
                color: level(Attribute::Color) as u8,
                angle: Angle::from_index(level(Attribute::Angle) as u8).expect("in domain"),
            };
            let inner = layout.has_outer().then(|| {
                let mut inner = Look::random(rng);
                match io.map(|v| v[k]) {
                    Some(1) => inner.shape = main.shape,
                    Some(_) if inner.shape == main.shape => {
                        let others: Vec<Shape> = Shape::ALL.into_iter().filter(|&s| s != main.shape).collect();
                        inner.shape = *others.choose(rng).expect("five shapes");
                    }
                    _ => {}
                }
                inner
            });
            build_panel(layout, main, masks.map(|m| m[k]), inner)
        })
        .collect();
    let row: [Panel; 3] = panels.try_into().expect("three panels");
    matches!(check_row(rs, &row), Ok(true)).then_some(row)
}

/// Samples a matrix satisfying `ruleset` on all three rows.
pub fn sample_matrix<R: Rng + ?Sized>(ruleset: &RuleSet, rng: &mut R) -> Option<RavenMatrix> {
    let mut cells = Vec::with_capacity(9);
    for _ in 0..3 {
        cells.extend(sample_row(ruleset, rng)?);
    }
    let ground_truth = cells.pop().expect("nine cells");
    Some(RavenMatrix { context: cells, ground_truth, ruleset: ruleset.clone() })
}

pub fn problem_id(spec: &ConceptSpec, seed: u64) -> String {
    let attrs: Vec<&str> = spec.attributes.iter().map(|a| a.name()).collect();
    format!("{}-{}-{}-{seed:016x}", spec.family.name(), attrs.join("+"), spec.layout.name())
}

/// Deterministic in `(spec, seed)`; the result is certified by the oracle.
pub fn sample_problem(spec: &ConceptSpec, seed: u64) -> Result<Problem, GenerationError> {
    spec.validate()?;
    let mut rng = seed::rng(seed);
    for _ in 0..RETRY_BUDGET {
        let ruleset = sample_ruleset(spec, &mut rng);
        let Some(matrix) = sample_matrix(&ruleset, &mut rng) else { continue };
        let ruled = ruleset.ruled_attributes();
        let Ok(set) = answers::generate(spec.answers, &matrix.ground_truth, &ruled, &mut rng) else {
            continue;
        };
        if solve_candidates(&matrix.context, &set.candidates) != Verdict::Unique(set.correct_index) {
            continue;
        }
        return Ok(Problem {
            id: problem_id(spec, seed),
            matrix,
            answers: set.candidates,
            correct_index: set.correct_index,
            concept_tags: vec![spec.clone()],
            answer_strategy: set.strategy,
            seed,
        });
    }
    Err(GenerationError::GenerationExhausted { spec: spec.tag(), attempts: RETRY_BUDGET })
}

/// Seed of instance `instance` of spec `spec_index` under `master`.
pub fn suite_seed(master: u64, spec_index: usize, instance: usize) -> u64 {
    seed::derive_seed(master, &[spec_index as u64, instance as u64])
}

/// `n_per_spec` problems per spec, spec-major order, generated in parallel.
pub fn concept_suite(specs: &[ConceptSpec], n_per_spec: usize, master: u64) -> Result<Dataset, GenerationError> {
    let jobs: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|s| (0..n_per_spec).map(move |i| (s, i)))
        .collect();
    jobs.par_iter()
        .map(|&(s, i)| sample_problem(&specs[s], suite_seed(master, s, i)))
        .collect()
}
