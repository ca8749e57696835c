//! Exploitability of candidate sets under context-blind attacks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::answers::{majority_vote_attack, Choice};
use super::generator::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attack {
    MajorityVote,
}

impl Attack {
    pub fn name(self) -> &'static str {
        match self {
            Attack::MajorityVote => "majority-vote",
        }
    }

    pub fn from_name(name: &str) -> Option<Attack> {
        (name == "majority-vote" || name == "majority_vote").then_some(Attack::MajorityVote)
    }

    pub fn choose(self, problem: &Problem) -> Choice {
        match self {
            Attack::MajorityVote => majority_vote_attack(&problem.answers).chosen,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExploitError {
    #[error("dataset is empty")]
    EmptyDataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploitRow {
    pub concept_tag: String,
    pub n: usize,
    pub attack: String,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExploitReport {
    pub attack: Attack,
    pub n: usize,
    pub hits: usize,
    /// Overall row first (`concept_tag` = `all`), then one row per tag.
    pub rows: Vec<ExploitRow>,
}

impl ExploitReport {
    pub fn rate(&self) -> f64 {
        self.hits as f64 / self.n as f64
    }

    /// CSV with header `concept_tag,n,attack,rate`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("concept_tag,n,attack,rate\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{:.6}\n", r.concept_tag, r.n, r.attack, r.rate));
        }
        out
    }
}

/// Fraction of problems where `attack` picks the correct index.
pub fn exploitability(dataset: &[Problem], attack: Attack) -> Result<ExploitReport, ExploitError> {
    if dataset.is_empty() {
        return Err(ExploitError::EmptyDataset);
    }
    let mut per_tag: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut hits = 0;
    for p in dataset {
        let hit = attack.choose(p) == Choice::Index(p.correct_index);
        hits += usize::from(hit);
        for tag in p.tags() {
            let e = per_tag.entry(tag).or_default();
            e.0 += 1;
            e.1 += usize::from(hit);
        }
    }
    let row = |tag: String, n: usize, h: usize| ExploitRow {
        concept_tag: tag,
        n,
        attack: attack.name().to_string(),
        rate: h as f64 / n as f64,
    };
    let mut rows = vec![row("all".to_string(), dataset.len(), hits)];
    rows.extend(per_tag.into_iter().map(|(t, (n, h))| row(t, n, h)));
    Ok(ExploitReport { attack, n: dataset.len(), hits, rows })
}
