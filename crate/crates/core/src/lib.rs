//! Procedural generation and symbolic verification of concept-based
//! abstraction benchmarks.
//!
//! Two domains are covered:
//!
//! - [`raven`]: 3×3 progressive matrices with 8 candidate answers, built from
//!   row-wise relations over entity attributes, certified unique by a
//!   rule-induction oracle, with biased and fair candidate-set generators and
//!   a context-blind majority-vote attack.
//! - [`arc`]: color-grid tasks in the public ARC JSON format, the 3-guess
//!   exact-match metric, grid primitives and parametric concept families.

pub mod arc;
pub mod raven;
pub mod seed;
