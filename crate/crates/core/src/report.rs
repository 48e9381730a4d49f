//! Machine-readable evaluation reports and their plain-text rendering.
//!
//! A [`ReportDocument`] holds summary tables (one row per dataset
//! partition, one column per evaluated run) plus the full per-run detail.
//! Serialization is canonical: `to_json` followed by `from_json` and
//! `to_json` again yields identical bytes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::annotations::{AttributeType, ValidationMode};
use crate::error::{Error, Result};
use crate::evaluate::Protocol;

pub const REPORT_FORMAT: &str = "fadet-report/1";

/// Partition name covering every image.
pub const ALL_PARTITION: &str = "all";

pub const CATEGORY_TABLE: &str = "category";
pub const ATTRIBUTE_TABLE: &str = "attribute";

pub const METRIC_WEIGHTED_MAP: &str = "weighted_map";
pub const METRIC_WEIGHTED_MEAN_CORLOC: &str = "weighted_mean_corloc";
pub const METRIC_ATTRIBUTE_PRECISION: &str = "attribute_precision";
pub const METRIC_ATTRIBUTE_RECALL: &str = "attribute_recall";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocument {
    pub format: String,
    pub tables: Vec<SummaryTable>,
    #[serde(default)]
    pub runs: Vec<RunReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryTable {
    pub name: String,
    pub metrics: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<SummaryRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryRow {
    pub dataset: String,
    /// `values[metric][column]`; `null` marks an undefined cell.
    pub values: Vec<Vec<Option<f64>>>,
}

/// Inputs and protocol a run was evaluated under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    pub groundtruth: String,
    pub detections: String,
    pub attr_vocab: String,
    pub cat_vocab: String,
    pub validation: ValidationMode,
    pub protocol: Protocol,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub label: String,
    pub settings: RunSettings,
    pub partitions: Vec<PartitionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionReport {
    pub dataset: String,
    pub metrics: EvaluationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationReport {
    pub images: usize,
    pub images_without_detections: usize,
    pub groundtruth_instances: usize,
    pub evaluated_detections: usize,
    pub weighted_map: Option<f64>,
    pub weighted_mean_corloc: Option<f64>,
    pub corloc_detected: usize,
    /// Pooled over every attribute.
    pub attribute_precision: Option<f64>,
    pub attribute_recall: Option<f64>,
    pub classes: Vec<ClassRow>,
    pub attribute_types: Vec<AttributeTypeRow>,
    pub attributes: Vec<AttributeRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassRow {
    pub category_id: usize,
    pub name: String,
    pub groundtruth: usize,
    pub detections: usize,
    pub true_positives: usize,
    pub ap: Option<f64>,
    pub corloc_detected: usize,
    pub corloc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeTypeRow {
    pub attr_type: AttributeType,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeRow {
    pub attribute_id: usize,
    pub name: String,
    pub attr_type: AttributeType,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

type MetricFn = fn(&EvaluationReport) -> Option<f64>;

impl ReportDocument {
    /// Builds summary tables from the runs: one column per run, one row per
    /// partition in order of first appearance.
    pub fn from_runs(runs: Vec<RunReport>) -> Self {
        let mut datasets: Vec<String> = Vec::new();
        for run in &runs {
            for p in &run.partitions {
                if !datasets.contains(&p.dataset) {
                    datasets.push(p.dataset.clone());
                }
            }
        }
        let columns: Vec<String> = runs.iter().map(|r| r.label.clone()).collect();
        let cell = |run: &RunReport, dataset: &str, f: MetricFn| {
            run.partitions
                .iter()
                .find(|p| p.dataset == dataset)
                .and_then(|p| f(&p.metrics))
        };
        let table = |name: &str, metrics: [(&str, MetricFn); 2]| SummaryTable {
            name: name.to_string(),
            metrics: metrics.iter().map(|m| m.0.to_string()).collect(),
            columns: columns.clone(),
            rows: datasets
                .iter()
                .map(|d| SummaryRow {
                    dataset: d.clone(),
                    values: metrics
                        .iter()
                        .map(|(_, f)| runs.iter().map(|r| cell(r, d, *f)).collect())
                        .collect(),
                })
                .collect(),
        };
        let tables = vec![
            table(
                CATEGORY_TABLE,
                [
                    (METRIC_WEIGHTED_MAP, |m| m.weighted_map),
                    (METRIC_WEIGHTED_MEAN_CORLOC, |m| m.weighted_mean_corloc),
                ],
            ),
            table(
                ATTRIBUTE_TABLE,
                [
                    (METRIC_ATTRIBUTE_PRECISION, |m| m.attribute_precision),
                    (METRIC_ATTRIBUTE_RECALL, |m| m.attribute_recall),
                ],
            ),
        ];
        Self {
            format: REPORT_FORMAT.to_string(),
            tables,
            runs,
        }
    }

    /// Combines documents column-wise: tables with the same name and metrics
    /// gain the other document's columns, rows are unioned by dataset and
    /// missing cells become undefined.
    pub fn merge(docs: Vec<ReportDocument>) -> Result<Self> {
        let mut iter = docs.into_iter();
        let Some(mut acc) = iter.next() else {
            return Err(Error::Protocol("no reports to merge".into()));
        };
        for doc in iter {
            for table in doc.tables {
                match acc.tables.iter_mut().find(|t| t.name == table.name) {
                    Some(existing) => existing.append_columns(table)?,
                    None => acc.tables.push(table),
                }
            }
            acc.runs.extend(doc.runs);
        }
        Ok(acc)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Protocol(format!("cannot serialize report: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ReportDocument = serde_json::from_str(text)
            .map_err(|e| Error::Protocol(format!("malformed report: {e}")))?;
        if doc.format != REPORT_FORMAT {
            return Err(Error::Protocol(format!(
                "unsupported report format {:?}, expected {REPORT_FORMAT:?}",
                doc.format
            )));
        }
        for t in &doc.tables {
            t.check_shape()?;
        }
        Ok(doc)
    }

    /// Aligned plain-text rendering. Undefined cells print as an em dash.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tables.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            render_summary(&mut out, t);
        }
        for run in &self.runs {
            for p in &run.partitions {
                out.push('\n');
                render_partition(&mut out, &run.label, p);
            }
        }
        out
    }
}

impl SummaryTable {
    fn check_shape(&self) -> Result<()> {
        for row in &self.rows {
            if row.values.len() != self.metrics.len()
                || row.values.iter().any(|v| v.len() != self.columns.len())
            {
                return Err(Error::Protocol(format!(
                    "table {:?} row {:?} does not have {} metrics x {} columns",
                    self.name,
                    row.dataset,
                    self.metrics.len(),
                    self.columns.len()
                )));
            }
        }
        Ok(())
    }

    fn append_columns(&mut self, other: SummaryTable) -> Result<()> {
        if self.metrics != other.metrics {
            return Err(Error::Protocol(format!(
                "table {:?} has metrics {:?} in one report and {:?} in another",
                self.name, self.metrics, other.metrics
            )));
        }
        let (old_cols, new_cols) = (self.columns.len(), other.columns.len());
        for row in &mut self.rows {
            let theirs = other.rows.iter().find(|r| r.dataset == row.dataset);
            for (m, cells) in row.values.iter_mut().enumerate() {
                match theirs {
                    Some(r) => cells.extend(r.values[m].iter().copied()),
                    None => cells.extend(std::iter::repeat_n(None, new_cols)),
                }
            }
        }
        for r in other.rows {
            if self.rows.iter().any(|x| x.dataset == r.dataset) {
                continue;
            }
            let values = r
                .values
                .into_iter()
                .map(|cells| std::iter::repeat_n(None, old_cols).chain(cells).collect())
                .collect();
            self.rows.push(SummaryRow {
                dataset: r.dataset,
                values,
            });
        }
        self.columns.extend(other.columns);
        Ok(())
    }
}

const UNDEFINED: &str = "—";

fn fmt_ratio(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}"))
        .unwrap_or_else(|| UNDEFINED.to_string())
}

fn metric_title(metric: &str) -> String {
    match metric {
        METRIC_WEIGHTED_MAP => "weighted mAP".into(),
        METRIC_WEIGHTED_MEAN_CORLOC => "weighted mean CorLoc".into(),
        METRIC_ATTRIBUTE_PRECISION => "Attribute Precision".into(),
        METRIC_ATTRIBUTE_RECALL => "Attribute Recall".into(),
        other => other.replace('_', " "),
    }
}

/// Pads to `width` display characters.
fn pad(s: &str, width: usize, right_align: bool) -> String {
    let n = s.chars().count();
    let fill = " ".repeat(width.saturating_sub(n));
    if right_align {
        format!("{fill}{s}")
    } else {
        format!("{s}{fill}")
    }
}

/// Renders rows of cells; the first column is left-aligned, the rest right-aligned.
fn render_grid(out: &mut String, rows: &[Vec<String>]) {
    let ncols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..ncols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| pad(s, widths[c], c > 0))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
}

fn render_summary(out: &mut String, t: &SummaryTable) {
    let _ = writeln!(out, "[{}]", t.name);
    let mut header1 = vec!["Dataset".to_string()];
    let mut header2 = vec![String::new()];
    for m in &t.metrics {
        for (k, c) in t.columns.iter().enumerate() {
            header1.push(if k == 0 {
                metric_title(m)
            } else {
                String::new()
            });
            header2.push(c.clone());
        }
    }
    let mut rows = vec![header1, header2];
    for r in &t.rows {
        let mut line = vec![r.dataset.clone()];
        for cells in &r.values {
            line.extend(cells.iter().map(|v| fmt_ratio(*v)));
        }
        rows.push(line);
    }
    // metric titles are left-aligned over their column group
    let ncols = rows[0].len();
    let mut widths: Vec<usize> = (0..ncols)
        .map(|c| {
            rows.iter()
                .skip(1)
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let per = t.columns.len().max(1);
    for (mi, m) in t.metrics.iter().enumerate() {
        let start = 1 + mi * per;
        let span: usize = widths[start..start + per].iter().sum::<usize>() + 2 * (per - 1);
        let need = metric_title(m).chars().count();
        if need > span {
            widths[start + per - 1] += need - span;
        }
    }
    widths[0] = widths[0].max("Dataset".len());
    for (ri, row) in rows.iter().enumerate() {
        let mut line = String::new();
        let mut c = 0;
        while c < row.len() {
            if c > 0 {
                line.push_str("  ");
            }
            if ri == 0 && c > 0 {
                let span: usize = widths[c..c + per].iter().sum::<usize>() + 2 * (per - 1);
                line.push_str(&pad(&row[c], span, false));
                c += per;
            } else {
                line.push_str(&pad(&row[c], widths[c], c > 0));
                c += 1;
            }
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }
}

fn render_partition(out: &mut String, label: &str, p: &PartitionReport) {
    let m = &p.metrics;
    let _ = writeln!(out, "[{label} / {}]", p.dataset);
    let _ = writeln!(
        out,
        "images {}  without detections {}  groundtruth {}  evaluated detections {}",
        m.images, m.images_without_detections, m.groundtruth_instances, m.evaluated_detections
    );
    let mut rows = vec![vec![
        "category".to_string(),
        "gt".into(),
        "dets".into(),
        "tp".into(),
        "AP".into(),
        "CorLoc".into(),
    ]];
    for c in &m.classes {
        rows.push(vec![
            format!("{} {}", c.category_id, c.name),
            c.groundtruth.to_string(),
            c.detections.to_string(),
            c.true_positives.to_string(),
            fmt_ratio(c.ap),
            fmt_ratio(c.corloc),
        ]);
    }
    render_grid(out, &rows);
    out.push('\n');
    let mut rows = vec![vec![
        "attribute type".to_string(),
        "tp".into(),
        "fp".into(),
        "fn".into(),
        "precision".into(),
        "recall".into(),
    ]];
    for t in &m.attribute_types {
        rows.push(vec![
            t.attr_type.to_string(),
            t.tp.to_string(),
            t.fp.to_string(),
            t.fn_.to_string(),
            fmt_ratio(t.precision),
            fmt_ratio(t.recall),
        ]);
    }
    render_grid(out, &rows);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(columns: &[&str], rows: &[(&str, [Vec<Option<f64>>; 2])]) -> SummaryTable {
        SummaryTable {
            name: CATEGORY_TABLE.into(),
            metrics: vec![
                METRIC_WEIGHTED_MAP.into(),
                METRIC_WEIGHTED_MEAN_CORLOC.into(),
            ],
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: rows
                .iter()
                .map(|(d, v)| SummaryRow {
                    dataset: d.to_string(),
                    values: v.to_vec(),
                })
                .collect(),
        }
    }

    fn doc(tables: Vec<SummaryTable>) -> ReportDocument {
        ReportDocument {
            format: REPORT_FORMAT.into(),
            tables,
            runs: vec![],
        }
    }

    #[test]
    fn json_round_trip_is_canonical() {
        let d = doc(vec![table(
            &["a", "b"],
            &[("x", [vec![Some(0.1425), None], vec![Some(1.0), Some(0.5)]])],
        )]);
        let s = d.to_json().unwrap();
        let back = ReportDocument::from_json(&s).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.to_json().unwrap(), s);
        assert!(s.contains("0.1425"));
        assert!(s.contains("null"));
    }

    #[test]
    fn rejects_wrong_format_or_shape() {
        let mut d = doc(vec![]);
        d.format = "other/9".into();
        assert!(ReportDocument::from_json(&d.to_json().unwrap()).is_err());
        let bad = doc(vec![table(
            &["a", "b"],
            &[("x", [vec![Some(0.1)], vec![Some(1.0), Some(0.5)]])],
        )]);
        assert!(ReportDocument::from_json(&bad.to_json().unwrap()).is_err());
    }

    #[test]
    fn merge_appends_columns() {
        let a = doc(vec![table(
            &["no pruning"],
            &[("DeepFashion", [vec![Some(0.1)], vec![Some(0.6)]])],
        )]);
        let b = doc(vec![table(
            &["pruning 0.7"],
            &[
                ("DeepFashion", [vec![Some(0.2)], vec![Some(0.7)]]),
                ("Runway", [vec![Some(0.3)], vec![None]]),
            ],
        )]);
        let m = ReportDocument::merge(vec![a, b]).unwrap();
        let t = &m.tables[0];
        assert_eq!(t.columns, vec!["no pruning", "pruning 0.7"]);
        assert_eq!(t.rows[0].values[0], vec![Some(0.1), Some(0.2)]);
        assert_eq!(t.rows[1].dataset, "Runway");
        assert_eq!(t.rows[1].values[0], vec![None, Some(0.3)]);
        t.check_shape().unwrap();
    }

    #[test]
    fn text_rendering_marks_undefined() {
        let d = doc(vec![table(
            &["c1", "c2"],
            &[(
                "DeepFashion",
                [vec![Some(0.1425), None], vec![Some(0.6418), Some(1.0)]],
            )],
        )]);
        let text = d.render_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "[category]");
        assert!(lines[1].starts_with("Dataset"));
        assert!(lines[1].contains("weighted mAP"));
        assert!(lines[3].contains("0.1425"));
        assert!(lines[3].contains(UNDEFINED));
        assert!(lines[3].contains("1.0000"));
        // every data line has the same display width as the column header line
        assert_eq!(lines[2].chars().count(), lines[3].chars().count());
    }
}
