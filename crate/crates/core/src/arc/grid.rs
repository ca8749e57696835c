//! Grids, tasks, task JSON and the 3-guess metric.

use std::fmt;

use serde::{Deserialize, Serialize};

pub const MAX_DIM: usize = 30;
pub const COLORS: u8 = 10;
pub const MAX_GUESSES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArcError {
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("value out of range at {path}: {message}")]
    ValueOutOfRange { path: String, message: String },
    #[error("test pair {pair} has {got} guesses, at most {MAX_GUESSES} allowed")]
    TooManyGuesses { pair: usize, got: usize },
    #[error("expected predictions for {expected} test pairs, got {got}")]
    PredictionCountMismatch { expected: usize, got: usize },
}

/// Row-major color grid, 1..=30 cells per side, colors 0..=9.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArcGrid {
    height: usize,
    width: usize,
    cells: Vec<u8>,
}

impl ArcGrid {
    /// Panics on invalid dimensions or color; use [`ArcGrid::from_rows`] for
    /// untrusted input.
    pub fn new(height: usize, width: usize, fill: u8) -> ArcGrid {
        assert!((1..=MAX_DIM).contains(&height) && (1..=MAX_DIM).contains(&width), "grid {height}x{width}");
        assert!(fill < COLORS, "color {fill}");
        ArcGrid { height, width, cells: vec![fill; height * width] }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<ArcGrid, ArcError> {
        let wide: Vec<Vec<i64>> = rows.iter().map(|r| r.iter().map(|&c| i64::from(c)).collect()).collect();
        ArcGrid::from_raw(&wide, "grid")
    }

    fn from_raw(rows: &[Vec<i64>], path: &str) -> Result<ArcGrid, ArcError> {
        let height = rows.len();
        if !(1..=MAX_DIM).contains(&height) {
            return Err(ArcError::ValueOutOfRange {
                path: path.to_string(),
                message: format!("height {height} is not in 1..={MAX_DIM}"),
            });
        }
        let width = rows[0].len();
        let mut cells = Vec::with_capacity(height * width);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(ArcError::SchemaViolation {
                    path: format!("{path}[{r}]"),
                    message: format!("row has {} cells, expected {width}", row.len()),
                });
            }
            if !(1..=MAX_DIM).contains(&width) {
                return Err(ArcError::ValueOutOfRange {
                    path: format!("{path}[{r}]"),
                    message: format!("width {width} is not in 1..={MAX_DIM}"),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if !(0..i64::from(COLORS)).contains(&v) {
                    return Err(ArcError::ValueOutOfRange {
                        path: format!("{path}[{r}][{c}]"),
                        message: format!("color {v} is not in 0..=9"),
                    });
                }
                cells.push(v as u8);
            }
        }
        Ok(ArcGrid { height, width, cells })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.cells[r * self.width + c]
    }

    pub fn set(&mut self, r: usize, c: usize, color: u8) {
        assert!(color < COLORS, "color {color}");
        self.cells[r * self.width + c] = color;
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        self.cells.chunks(self.width).map(<[u8]>::to_vec).collect()
    }

    pub fn in_bounds(&self, r: isize, c: isize) -> bool {
        r >= 0 && c >= 0 && (r as usize) < self.height && (c as usize) < self.width
    }
}

impl fmt::Debug for ArcGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ArcGrid {}x{}", self.height, self.width)?;
        for row in self.cells.chunks(self.width) {
            let line: String = row.iter().map(|&c| char::from(b'0' + c)).collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

impl Serialize for ArcGrid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ArcGrid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<i64>>::deserialize(d)?;
        ArcGrid::from_raw(&rows, "grid").map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcPair {
    pub input: ArcGrid,
    pub output: ArcGrid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArcTask {
    #[serde(skip_serializing_if = "String::is_empty")]
    pub id: String,
    pub train: Vec<ArcPair>,
    pub test: Vec<ArcPair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concept_tag: Option<String>,
}

#[derive(Deserialize)]
struct RawPair {
    input: Vec<Vec<i64>>,
    output: Vec<Vec<i64>>,
}

#[derive(Deserialize)]
struct RawTask {
    #[serde(default)]
    id: String,
    train: Vec<RawPair>,
    test: Vec<RawPair>,
    #[serde(default)]
    concept_tag: Option<String>,
}

fn convert_pairs(raw: &[RawPair], field: &str) -> Result<Vec<ArcPair>, ArcError> {
    raw.iter()
        .enumerate()
        .map(|(i, p)| {
            Ok(ArcPair {
                input: ArcGrid::from_raw(&p.input, &format!("{field}[{i}].input"))?,
                output: ArcGrid::from_raw(&p.output, &format!("{field}[{i}].output"))?,
            })
        })
        .collect()
}

impl<'de> Deserialize<'de> for ArcTask {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawTask::deserialize(d)?;
        task_from_raw(raw).map_err(serde::de::Error::custom)
    }
}

fn task_from_raw(raw: RawTask) -> Result<ArcTask, ArcError> {
    let train = convert_pairs(&raw.train, "train")?;
    let test = convert_pairs(&raw.test, "test")?;
    if train.is_empty() {
        return Err(ArcError::SchemaViolation { path: "train".into(), message: "no demonstration pairs".into() });
    }
    if test.is_empty() {
        return Err(ArcError::SchemaViolation { path: "test".into(), message: "no test pairs".into() });
    }
    Ok(ArcTask { id: raw.id, train, test, concept_tag: raw.concept_tag })
}

/// Parses the public ARC task format, plus optional `id` and `concept_tag`.
pub fn parse_task(text: &str) -> Result<ArcTask, ArcError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawTask = serde_path_to_error::deserialize(de).map_err(|e| ArcError::SchemaViolation {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })?;
    task_from_raw(raw)
}

pub fn write_task(task: &ArcTask) -> String {
    serde_json::to_string(task).expect("task serializes")
}

/// Mean over test pairs of 1 if any guess equals the target, else 0.
pub fn score(task: &ArcTask, predictions: &[Vec<ArcGrid>]) -> Result<f64, ArcError> {
    if predictions.len() != task.test.len() {
        return Err(ArcError::PredictionCountMismatch { expected: task.test.len(), got: predictions.len() });
    }
    if let Some((pair, guesses)) = predictions.iter().enumerate().find(|(_, g)| g.len() > MAX_GUESSES) {
        return Err(ArcError::TooManyGuesses { pair, got: guesses.len() });
    }
    let solved = task
        .test
        .iter()
        .zip(predictions)
        .filter(|(pair, guesses)| guesses.contains(&pair.output))
        .count();
    Ok(solved as f64 / task.test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_BY_ONE: &str = r#"{"train":[{"input":[[1]],"output":[[1]]}],"test":[{"input":[[2]],"output":[[2]]}]}"#;

    #[test]
    fn parses_minimal_task() {
        let task = parse_task(ONE_BY_ONE).unwrap();
        assert_eq!(task.train.len(), 1);
        assert_eq!(task.test[0].output.rows(), vec![vec![2]]);
        assert_eq!(write_task(&task), ONE_BY_ONE);
    }

    #[test]
    fn color_ten_is_out_of_range() {
        let text = ONE_BY_ONE.replace("[[2]],\"output\"", "[[10]],\"output\"");
        match parse_task(&text) {
            Err(ArcError::ValueOutOfRange { path, .. }) => assert_eq!(path, "test[0].input[0][0]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dimension_and_shape_errors() {
        let big = vec![vec![0u8; 31]];
        assert!(matches!(ArcGrid::from_rows(&big), Err(ArcError::ValueOutOfRange { .. })));
        assert!(matches!(ArcGrid::from_rows(&[]), Err(ArcError::ValueOutOfRange { .. })));
        let ragged = vec![vec![0u8, 1], vec![0u8]];
        assert!(matches!(ArcGrid::from_rows(&ragged), Err(ArcError::SchemaViolation { .. })));
        assert!(matches!(parse_task("{\"train\":"), Err(ArcError::SchemaViolation { .. })));
    }

    #[test]
    fn three_guess_rule() {
        let task = parse_task(ONE_BY_ONE).unwrap();
        let right = ArcGrid::from_rows(&[vec![2]]).unwrap();
        let wrong = ArcGrid::from_rows(&[vec![3]]).unwrap();
        assert_eq!(score(&task, &[vec![right.clone()]]).unwrap(), 1.0);
        assert_eq!(score(&task, &[vec![wrong.clone(); 3]]).unwrap(), 0.0);
        assert_eq!(score(&task, &[vec![wrong.clone(), wrong.clone(), right.clone()]]).unwrap(), 1.0);
        assert!(matches!(
            score(&task, &[vec![wrong.clone(); 4]]),
            Err(ArcError::TooManyGuesses { pair: 0, got: 4 })
        ));
        assert!(score(&task, &[]).is_err());
    }
}
