//! Concept-sliced accuracy reports: CSV and an aligned text table.
//!
//! CSV columns are `model,slice,n,correct,accuracy`; `correct` is a sum of
//! per-item scores, which are fractional only for ARC tasks with several
//! test pairs. The text table has one row per model and one column per
//! slice, headed `slice (n=N)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::eval::ResultRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub slice: String,
    pub n: usize,
    pub correct: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

fn row(model: &str, slice: &str, n: usize, correct: f64) -> ReportRow {
    let accuracy = if n == 0 { 0.0 } else { correct / n as f64 };
    ReportRow { model: model.to_string(), slice: slice.to_string(), n, correct, accuracy }
}

impl EvalReport {
    /// Overall row named `overall`, then one row per concept tag in tag order.
    pub fn from_records(model: &str, overall: &str, records: &[ResultRecord]) -> EvalReport {
        let mut items: Vec<(&str, &[String], f64)> = Vec::new();
        for r in records {
            let score = if r.correct { r.weight } else { 0.0 };
            match items.last_mut() {
                Some(last) if last.0 == r.item_id => last.2 += score,
                _ => items.push((&r.item_id, &r.concept_tags, score)),
            }
        }
        let mut slices: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
        for (_, tags, score) in &items {
            for t in tags.iter() {
                let e = slices.entry(t.as_str()).or_default();
                e.0 += 1;
                e.1 += score;
            }
        }
        let total: f64 = items.iter().map(|i| i.2).sum();
        let mut rows = vec![row(model, overall, items.len(), total)];
        rows.extend(slices.into_iter().map(|(s, (n, c))| row(model, s, n, c)));
        EvalReport { rows }
    }

    pub fn merge(&mut self, other: &EvalReport) {
        self.rows.extend(other.rows.iter().cloned());
    }

    /// Rows whose slice is listed, in list order per model.
    pub fn select(&self, slices: &[&str]) -> EvalReport {
        let mut rows = Vec::new();
        for model in self.models() {
            for s in slices {
                rows.extend(self.rows.iter().filter(|r| r.model == model && r.slice == *s).cloned());
            }
        }
        EvalReport { rows }
    }

    pub fn models(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.model) {
                out.push(r.model.clone());
            }
        }
        out
    }

    pub fn get(&self, model: &str, slice: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.model == model && r.slice == slice)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("rows serialize");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
    }

    pub fn from_csv(text: &str) -> Result<EvalReport, HarnessError> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let rows = reader
            .deserialize()
            .collect::<Result<Vec<ReportRow>, _>>()
            .map_err(|e| HarnessError::ConfigInvalid(format!("report csv: {e}")))?;
        Ok(EvalReport { rows })
    }

    /// Aligned table, accuracies as percentages with one decimal.
    pub fn render_table(&self) -> String {
        let mut columns: Vec<(String, usize)> = Vec::new();
        for r in &self.rows {
            if !columns.iter().any(|c| c.0 == r.slice) {
                columns.push((r.slice.clone(), r.n));
            }
        }
        let models = self.models();
        let mut grid: Vec<Vec<String>> = vec![std::iter::once("model".to_string())
            .chain(columns.iter().map(|(s, n)| format!("{s} (n={n})")))
            .collect()];
        for m in &models {
            let mut line = vec![m.clone()];
            for (s, _) in &columns {
                line.push(self.get(m, s).map(|r| format!("{:.1}%", 100.0 * r.accuracy)).unwrap_or_default());
            }
            grid.push(line);
        }
        let widths: Vec<usize> = (0..grid[0].len())
            .map(|c| grid.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for line in &grid {
            let cells: Vec<String> = line
                .iter()
                .enumerate()
                .map(|(c, cell)| if c == 0 { format!("{cell:<w$}", w = widths[c]) } else { format!("{cell:>w$}", w = widths[c]) })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Status;

    fn rec(item: &str, tags: &[&str], correct: bool) -> ResultRecord {
        ResultRecord {
            request_id: item.into(),
            item_id: item.into(),
            concept_tags: tags.iter().map(|t| t.to_string()).collect(),
            weight: 1.0,
            status: Status::Answered,
            answers: Vec::new(),
            correct,
        }
    }

    #[test]
    fn slices_and_table() {
        let recs = vec![rec("a", &["x"], true), rec("b", &["x", "y"], false), rec("c", &["y"], true)];
        let r = EvalReport::from_records("m", "test", &recs);
        assert_eq!(r.rows.len(), 3);
        assert_eq!(r.get("m", "test").unwrap().n, 3);
        assert_eq!(r.get("m", "x").unwrap().accuracy, 0.5);
        let table = r.render_table();
        assert!(table.starts_with("model  test (n=3)  x (n=2)  y (n=2)"), "{table}");
        assert!(table.contains("66.7%"));
    }

    #[test]
    fn single_slice_has_one_data_row() {
        let r = EvalReport::from_records("m", "probe", &[rec("a", &[], true)]);
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.render_table().lines().count(), 2);
        assert_eq!(EvalReport::from_csv(&r.to_csv()).unwrap(), r);
    }
}
