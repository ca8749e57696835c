//! RAVEN-style progressive matrices.

pub mod answers;
pub mod edit;
pub mod exploit;
pub mod generator;
pub mod io;
pub mod model;
pub mod oracle;
pub mod render;
pub mod rules;
pub mod suites;

pub use answers::{AnswerSet, AttackVerdict, Choice, Strategy};
pub use generator::{
    concept_suite, sample_problem, Background, ConceptSpec, Dataset, Family, GenerationError, Problem, RavenMatrix,
};
pub use model::{Angle, Attribute, Entity, LayoutKind, Panel, Shape, Value};
pub use oracle::Verdict;
pub use rules::{Relation, Rule, RuleError, RuleSet};
