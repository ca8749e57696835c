//! Candidate answer sets and the context-blind majority-vote attack.
//!
//! Two construction strategies are provided:
//!
//! - **Biased perturbation**: each of the seven distractors copies the correct
//!   panel and re-samples exactly one attribute. The correct panel then holds
//!   the modal value of every attribute, which the majority-vote attack
//!   exploits without looking at the matrix.
//! - **Fair bisection**: three doubling rounds. Each round picks an attribute
//!   and, for every distinct value `v` it currently takes among the
//!   candidates, a fresh value `f(v)`; each candidate gets a copy with the
//!   attribute mapped through `f`. Value multiplicities are preserved round
//!   by round, so per-attribute counts no longer single out the correct
//!   panel.
//!
//! Candidate order is shuffled, so the correct index is uniform over 0..8.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::edit::{keeps_others, perturb, set_attribute};
use super::model::{Attribute, LayoutKind, Panel, Value};

pub const CANDIDATES: usize = 8;
const DISTRACTOR_ATTEMPTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    BiasedPerturbation,
    #[default]
    FairBisection,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::BiasedPerturbation => "biased",
            Strategy::FairBisection => "fair",
        }
    }

    pub fn from_name(name: &str) -> Option<Strategy> {
        match name {
            "biased" | "biased_perturbation" => Some(Strategy::BiasedPerturbation),
            "fair" | "fair_bisection" => Some(Strategy::FairBisection),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnswerError {
    #[error("could not form {CANDIDATES} distinct candidates by editing {attributes:?}")]
    GenerationExhausted { attributes: Vec<Attribute> },
    #[error("no editable attribute given")]
    NoAttributes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerSet {
    pub candidates: Vec<Panel>,
    pub correct_index: usize,
    pub strategy: Strategy,
}

/// Attributes edited when no explicit list is given: entity attributes, the
/// occupancy attributes of grid layouts and `inside_outside` of out-in layouts.
pub fn editable_attributes(layout: LayoutKind) -> Vec<Attribute> {
    layout
        .attributes()
        .into_iter()
        .filter(|a| !matches!(a, Attribute::Row | Attribute::Column))
        .collect()
}

pub fn gen_biased(correct: &Panel, seed: u64) -> Result<AnswerSet, AnswerError> {
    let mut rng = crate::seed::rng(seed);
    biased_over(correct, &editable_attributes(correct.layout()), &mut rng)
}

pub fn gen_fair(correct: &Panel, seed: u64) -> Result<AnswerSet, AnswerError> {
    let mut rng = crate::seed::rng(seed);
    fair_over(correct, &editable_attributes(correct.layout()), &mut rng)
}

pub fn generate<R: Rng + ?Sized>(
    strategy: Strategy,
    correct: &Panel,
    attributes: &[Attribute],
    rng: &mut R,
) -> Result<AnswerSet, AnswerError> {
    match strategy {
        Strategy::BiasedPerturbation => biased_over(correct, attributes, rng),
        Strategy::FairBisection => fair_over(correct, attributes, rng),
    }
}

fn editable(correct: &Panel, attributes: &[Attribute]) -> Vec<Attribute> {
    let mut out: Vec<Attribute> = attributes
        .iter()
        .copied()
        .filter(|a| correct.value(*a).is_some() && a.domain(correct.layout()).len() > 1)
        .collect();
    out.sort();
    out.dedup();
    out
}

fn finish<R: Rng + ?Sized>(mut candidates: Vec<Panel>, strategy: Strategy, rng: &mut R) -> AnswerSet {
    let correct = candidates[0].clone();
    candidates.shuffle(rng);
    let correct_index = candidates.iter().position(|c| *c == correct).expect("present");
    AnswerSet { candidates, correct_index, strategy }
}

/// Biased strategy over an explicit attribute list.
pub fn biased_over<R: Rng + ?Sized>(
    correct: &Panel,
    attributes: &[Attribute],
    rng: &mut R,
) -> Result<AnswerSet, AnswerError> {
    let attrs = editable(correct, attributes);
    if attrs.is_empty() {
        return Err(AnswerError::NoAttributes);
    }
    let mut candidates = vec![correct.clone()];
    let mut attempts = 0;
    while candidates.len() < CANDIDATES {
        attempts += 1;
        if attempts > DISTRACTOR_ATTEMPTS {
            return Err(AnswerError::GenerationExhausted { attributes: attrs });
        }
        let &attribute = attrs.choose(rng).expect("non-empty");
        if let Some(d) = perturb(correct, attribute, &attrs, rng) {
            if !candidates.contains(&d) {
                candidates.push(d);
            }
        }
    }
    Ok(finish(candidates, Strategy::BiasedPerturbation, rng))
}

/// Fair strategy over an explicit attribute list.
pub fn fair_over<R: Rng + ?Sized>(
    correct: &Panel,
    attributes: &[Attribute],
    rng: &mut R,
) -> Result<AnswerSet, AnswerError> {
    let attrs = editable(correct, attributes);
    if attrs.is_empty() {
        return Err(AnswerError::NoAttributes);
    }
    for _ in 0..DISTRACTOR_ATTEMPTS / 8 {
        let mut order = attrs.clone();
        order.shuffle(rng);
        let mut candidates = vec![correct.clone()];
        let mut round = 0;
        while candidates.len() < CANDIDATES && round < 3 * order.len().max(3) {
            let attribute = order[round % order.len()];
            round += 1;
            if let Some(copies) = bisect(&candidates, attribute, &attrs, rng) {
                candidates.extend(copies);
            }
        }
        if candidates.len() == CANDIDATES {
            return Ok(finish(candidates, Strategy::FairBisection, rng));
        }
    }
    Err(AnswerError::GenerationExhausted { attributes: attrs })
}

fn bisect<R: Rng + ?Sized>(
    candidates: &[Panel],
    attribute: Attribute,
    preserve: &[Attribute],
    rng: &mut R,
) -> Option<Vec<Panel>> {
    let layout = candidates[0].layout();
    let current: Vec<Value> = candidates.iter().map(|c| c.value(attribute)).collect::<Option<_>>()?;
    let distinct: BTreeSet<Value> = current.iter().copied().collect();
    let mut fresh: Vec<Value> = attribute
        .domain(layout)
        .into_iter()
        .filter(|v| !distinct.contains(v))
        .collect();
    if fresh.len() < distinct.len() {
        return None;
    }
    'retry: for _ in 0..16 {
        fresh.shuffle(rng);
        let mapping: BTreeMap<Value, Value> = distinct.iter().copied().zip(fresh.iter().copied()).collect();
        let mut copies = Vec::with_capacity(candidates.len());
        for (c, v) in candidates.iter().zip(&current) {
            let target = mapping[v];
            let Some(copy) = (0..8)
                .filter_map(|_| set_attribute(c, attribute, target, rng))
                .find(|copy| keeps_others(c, copy, attribute, preserve))
            else {
                continue 'retry;
            };
            if candidates.contains(&copy) || copies.contains(&copy) {
                continue 'retry;
            }
            copies.push(copy);
        }
        return Some(copies);
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Index(usize),
    Abstain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackVerdict {
    pub chosen: Choice,
    pub scores: Vec<usize>,
}

/// Slot-wise feature vector: entity count, then occupancy, shape, size,
/// color and angle for every slot of the layout (−1 when empty).
pub fn features(panel: &Panel) -> Vec<Value> {
    let mut out = vec![panel.entities().len() as Value];
    for slot in 0..panel.layout().slot_count() {
        match panel.entity_at(slot) {
            Some(e) => out.extend([
                1,
                Value::from(e.shape.level()),
                Value::from(e.size),
                Value::from(e.color),
                Value::from(e.angle.index()),
            ]),
            None => out.extend([0, -1, -1, -1, -1]),
        }
    }
    out
}

/// Picks the candidate agreeing with the most per-feature modal values.
///
/// Every value tied for the mode counts as modal. Ties between candidates go
/// to the lowest index. Only the candidate list is read.
pub fn majority_vote_attack(candidates: &[Panel]) -> AttackVerdict {
    if candidates.is_empty() {
        return AttackVerdict { chosen: Choice::Abstain, scores: Vec::new() };
    }
    let rows: Vec<Vec<Value>> = candidates.iter().map(features).collect();
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut scores = vec![0usize; candidates.len()];
    for f in 0..width {
        let mut counts: BTreeMap<Option<Value>, usize> = BTreeMap::new();
        for r in &rows {
            *counts.entry(r.get(f).copied()).or_default() += 1;
        }
        let top = counts.values().copied().max().unwrap_or(0);
        for (i, r) in rows.iter().enumerate() {
            if counts[&r.get(f).copied()] == top {
                scores[i] += 1;
            }
        }
    }
    let best = scores.iter().copied().max().unwrap_or(0);
    let chosen = scores.iter().position(|&s| s == best).expect("non-empty");
    AttackVerdict { chosen: Choice::Index(chosen), scores }
}
