//! Efficacy table: pass counts per CWE and configuration, with averages.

use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::pipeline::RepairAttempt;
use crate::rtlcheck::VerdictStatus;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub passes: u32,
    pub total: u32,
    /// Subset of `total` that was neither Pass nor Fail.
    pub indeterminate: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EfficacyReport {
    /// cwe_id -> config label -> cell, in first-seen order.
    pub rows: IndexMap<String, IndexMap<String, Cell>>,
    /// config label -> integer percent.
    pub averages: IndexMap<String, u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Csv,
}

/// `100 * passes / total` rounded to the nearest integer, halves up.
pub fn percent(passes: u64, total: u64) -> Option<u32> {
    (total > 0).then(|| ((200 * passes + total) / (2 * total)) as u32)
}

pub fn aggregate<'a>(
    attempts: impl IntoIterator<Item = &'a RepairAttempt>,
    labeling: impl Fn(&RepairAttempt) -> String,
) -> EfficacyReport {
    aggregate_outcomes(
        attempts
            .into_iter()
            .map(|a| (a.cwe_id.clone(), labeling(a), a.verdict.status)),
    )
}

/// Aggregates `(cwe_id, config_label, status)` triples. Only Pass counts as
/// a success; Fail and Indeterminate count toward the total.
pub fn aggregate_outcomes(outcomes: impl IntoIterator<Item = (String, String, VerdictStatus)>) -> EfficacyReport {
    let mut report = EfficacyReport::default();
    let mut columns: IndexMap<String, (u64, u64)> = IndexMap::new();
    for (cwe, label, status) in outcomes {
        let cell = report
            .rows
            .entry(cwe)
            .or_default()
            .entry(label.clone())
            .or_default();
        cell.total += 1;
        let col = columns.entry(label).or_default();
        col.1 += 1;
        match status {
            VerdictStatus::Pass => {
                cell.passes += 1;
                col.0 += 1;
            }
            VerdictStatus::Indeterminate => cell.indeterminate += 1,
            VerdictStatus::Fail => {}
        }
    }
    for (label, (p, t)) in columns {
        if let Some(avg) = percent(p, t) {
            report.averages.insert(label, avg);
        }
    }
    report
}

impl EfficacyReport {
    /// Config labels in first-seen order across rows.
    pub fn columns(&self) -> Vec<&str> {
        let mut cols: Vec<&str> = Vec::new();
        for row in self.rows.values() {
            for label in row.keys() {
                if !cols.contains(&label.as_str()) {
                    cols.push(label);
                }
            }
        }
        cols
    }

    pub fn cell(&self, cwe_id: &str, label: &str) -> Option<Cell> {
        self.rows.get(cwe_id)?.get(label).copied()
    }

    pub fn attempt_count(&self) -> u32 {
        self.rows.values().flat_map(|r| r.values()).map(|c| c.total).sum()
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Markdown => self.markdown(),
            Format::Csv => self.csv(),
        }
    }

    fn markdown(&self) -> String {
        let cols = self.columns();
        let mut out = String::new();
        out.push_str("| CWE |");
        for c in &cols {
            let _ = write!(out, " {} |", c.replace('|', "\\|"));
        }
        out.push_str(" Indeterminate |\n|---|");
        out.push_str(&"---|".repeat(cols.len() + 1));
        out.push('\n');
        let mut indeterminate_total = 0;
        for (cwe, row) in &self.rows {
            let _ = write!(out, "| {cwe} |");
            for c in &cols {
                match row.get(*c) {
                    Some(cell) => {
                        let _ = write!(out, " {} out of {} |", cell.passes, cell.total);
                    }
                    None => out.push_str(" - |"),
                }
            }
            let ind: u32 = row.values().map(|c| c.indeterminate).sum();
            indeterminate_total += ind;
            let _ = writeln!(out, " {ind} |");
        }
        if !self.rows.is_empty() {
            out.push_str("| Average |");
            for c in &cols {
                match self.averages.get(*c) {
                    Some(p) => {
                        let _ = write!(out, " {p}% |");
                    }
                    None => out.push_str(" - |"),
                }
            }
            let _ = writeln!(out, " {indeterminate_total} |");
        }
        out
    }

    fn csv(&self) -> String {
        let mut out = String::from("cwe,config,passes,total\r\n");
        let cols = self.columns();
        for (cwe, row) in &self.rows {
            for c in &cols {
                if let Some(cell) = row.get(*c) {
                    let _ = write!(out, "{},{},{},{}\r\n", csv_field(cwe), csv_field(c), cell.passes, cell.total);
                }
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcomes(cwe: &str, label: &str, passes: u32, total: u32) -> Vec<(String, String, VerdictStatus)> {
        (0..total)
            .map(|i| {
                let s = if i < passes { VerdictStatus::Pass } else { VerdictStatus::Fail };
                (cwe.to_string(), label.to_string(), s)
            })
            .collect()
    }

    #[test]
    fn two_of_five() {
        let r = aggregate_outcomes(outcomes("CWE-1191", "Basic", 2, 5));
        assert_eq!(r.cell("CWE-1191", "Basic"), Some(Cell { passes: 2, total: 5, indeterminate: 0 }));
        assert!(r.render(Format::Markdown).contains("| CWE-1191 | 2 out of 5 | 0 |"));
    }

    #[test]
    fn empty_input() {
        let r = aggregate_outcomes(Vec::new());
        assert!(r.rows.is_empty() && r.averages.is_empty());
        assert_eq!(r.render(Format::Csv), "cwe,config,passes,total\r\n");
    }

    #[test]
    fn zero_of_five_is_zero_percent() {
        let r = aggregate_outcomes(outcomes("CWE-1231", "Basic", 0, 5));
        assert_eq!(r.averages["Basic"], 0);
    }

    #[test]
    fn indeterminate_counts_in_total_only() {
        let mut o = outcomes("CWE-1", "A", 1, 2);
        o.push(("CWE-1".into(), "A".into(), VerdictStatus::Indeterminate));
        let r = aggregate_outcomes(o);
        assert_eq!(r.cell("CWE-1", "A"), Some(Cell { passes: 1, total: 3, indeterminate: 1 }));
        assert_eq!(r.averages["A"], 33);
        assert!(r.render(Format::Markdown).contains("| CWE-1 | 1 out of 3 | 1 |"));
    }

    #[test]
    fn rounding_halves_up() {
        assert_eq!(percent(1, 8), Some(13)); // 12.5
        assert_eq!(percent(1, 3), Some(33));
        assert_eq!(percent(2, 3), Some(67));
        assert_eq!(percent(0, 0), None);
    }

    #[test]
    fn csv_quotes_when_needed() {
        let r = aggregate_outcomes(outcomes("CWE-1", "a,\"b\"", 1, 1));
        assert_eq!(r.render(Format::Csv), "cwe,config,passes,total\r\nCWE-1,\"a,\"\"b\"\"\",1,1\r\n");
    }
}
