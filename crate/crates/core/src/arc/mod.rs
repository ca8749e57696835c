//! ARC-style grid tasks.

pub mod concepts;
pub mod grid;
pub mod ops;

pub use concepts::{FamilyId, FamilyParams};
pub use grid::{parse_task, score, write_task, ArcError, ArcGrid, ArcPair, ArcTask, MAX_GUESSES};
pub use ops::{components, translate_until_contact, Connectivity, Direction, GridObject};
