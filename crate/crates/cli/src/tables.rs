//! Per-instance result tables: mean indicator per column, with the best
//! column of each row flagged.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;

/// One solver or operator run on one instance with one seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub column: String,
    pub instance_id: String,
    pub seed: u64,
    pub metric: Option<f64>,
    pub score: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub instance_id: String,
    /// Mean indicator per column; `None` when every run failed.
    pub means: Vec<Option<f64>>,
    pub mean_scores: Vec<f64>,
    pub best: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

impl Table {
    /// Groups results by instance and column. Rows keep first-seen instance
    /// order; the best column is the one with the highest mean problem
    /// score, earliest column on ties.
    pub fn build(columns: &[String], results: &[RunResult]) -> Table {
        let mut order: Vec<String> = Vec::new();
        let mut cells: BTreeMap<(String, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for r in results {
            if !order.contains(&r.instance_id) {
                order.push(r.instance_id.clone());
            }
            let c = columns.iter().position(|c| *c == r.column).expect("known column");
            let cell = cells.entry((r.instance_id.clone(), c)).or_default();
            if let Some(m) = r.metric {
                cell.0.push(m);
            }
            cell.1.push(r.score);
        }
        let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        let rows = order
            .into_iter()
            .map(|instance_id| {
                let (means, mean_scores): (Vec<_>, Vec<_>) = (0..columns.len())
                    .map(|c| {
                        let cell = cells.get(&(instance_id.clone(), c));
                        (
                            cell.and_then(|(m, _)| mean(m)),
                            cell.and_then(|(_, s)| mean(s)).unwrap_or(f64::NEG_INFINITY),
                        )
                    })
                    .unzip();
                let best = (0..columns.len()).fold(0, |b, c| if mean_scores[c] > mean_scores[b] { c } else { b });
                Row {
                    instance_id,
                    means,
                    mean_scores,
                    best,
                }
            })
            .collect();
        Table {
            columns: columns.to_vec(),
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("instance");
        for c in &self.columns {
            write!(out, ",{c}").unwrap();
        }
        out.push_str(",best\n");
        for row in &self.rows {
            out.push_str(&row.instance_id);
            for m in &row.means {
                match m {
                    Some(v) => write!(out, ",{v:e}").unwrap(),
                    None => out.push_str(",failed"),
                }
            }
            writeln!(out, ",{}", self.columns[row.best]).unwrap();
        }
        out
    }

    /// Aligned plain text; the best cell of each row is marked with `*`.
    pub fn to_text(&self) -> String {
        let cell = |m: &Option<f64>, best: bool| {
            let v = m.map_or_else(|| "failed".to_string(), |v| format!("{v:.3e}"));
            if best {
                format!("{v}*")
            } else {
                v
            }
        };
        let id_width = self.rows.iter().map(|r| r.instance_id.len()).chain([8]).max().unwrap_or(8);
        let widths: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(c, name)| {
                self.rows
                    .iter()
                    .map(|r| cell(&r.means[c], r.best == c).len())
                    .chain([name.len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = format!("{:<id_width$}", "instance");
        for (c, name) in self.columns.iter().enumerate() {
            write!(out, "  {:>w$}", name, w = widths[c]).unwrap();
        }
        out.push('\n');
        for row in &self.rows {
            write!(out, "{:<id_width$}", row.instance_id).unwrap();
            for (c, m) in row.means.iter().enumerate() {
                write!(out, "  {:>w$}", cell(m, row.best == c), w = widths[c]).unwrap();
            }
            out.push('\n');
        }
        out
    }
}
