//! Confusion matrices and precision/recall/F1 reports.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::SentimentLabel;
use crate::error::{Error, Result};
use crate::text::{read_bytes, utf8_lines};

const K: usize = SentimentLabel::COUNT;

/// Counts indexed `[gold][predicted]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub cells: [[u64; K]; K],
}

/// One-vs-rest 2×2 view for a single class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinaryCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn from_cells(cells: [[u64; K]; K]) -> Self {
        ConfusionMatrix { cells }
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..K).map(|i| self.cells[i][i]).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = [[0; K]; K];
        for (g, row) in self.cells.iter().enumerate() {
            for (p, &v) in row.iter().enumerate() {
                t[p][g] = v;
            }
        }
        ConfusionMatrix { cells: t }
    }

    pub fn one_vs_rest(&self, class: SentimentLabel) -> BinaryCounts {
        let c = class.index();
        let tp = self.cells[c][c];
        let fn_ = self.cells[c].iter().sum::<u64>() - tp;
        let fp = (0..K).map(|g| self.cells[g][c]).sum::<u64>() - tp;
        BinaryCounts {
            tp,
            fp,
            fn_,
            tn: self.total() - tp - fn_ - fp,
        }
    }
}

/// Builds the confusion matrix of paired gold and predicted labels.
pub fn confusion(golds: &[SentimentLabel], preds: &[SentimentLabel]) -> Result<ConfusionMatrix> {
    if golds.len() != preds.len() {
        return Err(Error::Invalid(format!(
            "{} gold labels but {} predictions",
            golds.len(),
            preds.len()
        )));
    }
    if golds.is_empty() {
        return Err(Error::Invalid("no labels to evaluate".into()));
    }
    let mut m = ConfusionMatrix::default();
    for (g, p) in golds.iter().zip(preds) {
        m.cells[g.index()][p.index()] += 1;
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: SentimentLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Precision was undefined (nothing predicted as this class) and set to 0.
    pub precision_undefined: bool,
    /// Recall was undefined (class absent from gold) and set to 0.
    pub recall_undefined: bool,
}

/// JSON schema: `classes` (one object per class in label order with
/// `label`, `precision`, `recall`, `f1`, `support`, `precision_undefined`,
/// `recall_undefined`), then `macro_precision`, `macro_recall`, `macro_f1`,
/// `weighted_f1`, `accuracy`, `total` and `confusion` (`cells[gold][pred]`).
/// Values carry full precision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub classes: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
    pub total: u64,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    pub fn class(&self, label: SentimentLabel) -> &ClassMetrics {
        &self.classes[label.index()]
    }

    pub fn has_warnings(&self) -> bool {
        self.classes
            .iter()
            .any(|c| c.precision_undefined || c.recall_undefined)
    }
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Per-class, macro and support-weighted metrics. Undefined precision or
/// recall is reported as 0 and flagged.
pub fn metrics(matrix: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = matrix.total();
    if total == 0 {
        return Err(Error::Invalid("confusion matrix is empty".into()));
    }
    let classes: Vec<ClassMetrics> = SentimentLabel::ALL
        .iter()
        .map(|&label| {
            let b = matrix.one_vs_rest(label);
            let (precision, precision_undefined) = ratio(b.tp, b.tp + b.fp);
            let (recall, recall_undefined) = ratio(b.tp, b.tp + b.fn_);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                label,
                precision,
                recall,
                f1,
                support: b.tp + b.fn_,
                precision_undefined,
                recall_undefined,
            }
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| classes.iter().map(f).sum::<f64>() / K as f64;
    let weighted_f1 = classes.iter().map(|c| c.f1 * c.support as f64).sum::<f64>() / total as f64;
    Ok(MetricsReport {
        macro_precision: mean(|c| c.precision),
        macro_recall: mean(|c| c.recall),
        macro_f1: mean(|c| c.f1),
        weighted_f1,
        accuracy: matrix.trace() as f64 / total as f64,
        total,
        confusion: *matrix,
        classes,
    })
}

/// Rounds half away from zero at two decimals, as printed in reports.
pub fn round2(v: f64) -> f64 {
    // The small nudge keeps values such as 0.125 (stored just below) from
    // rounding down.
    let scaled = v * 100.0;
    (scaled + scaled.signum() * 1e-9).round() / 100.0
}

fn fmt2(v: f64) -> String {
    format!("{:.2}", round2(v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Self::Text),
            "json" => Ok(Self::Json),
            other => Err(Error::Invalid(format!("unknown report format {other:?}"))),
        }
    }
}

pub fn render(report: &MetricsReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(report),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

/// Table layout: one row per class, then the macro and weighted rows.
pub fn render_text(report: &MetricsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<14}{:>10}{:>10}{:>10}{:>10}", "", "precision", "recall", "f1-score", "support");
    let _ = writeln!(out);
    for c in &report.classes {
        let _ = writeln!(
            out,
            "{:<14}{:>10}{:>10}{:>10}{:>10}",
            c.label.as_str(),
            fmt2(c.precision),
            fmt2(c.recall),
            fmt2(c.f1),
            c.support
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<14}{:>10}{:>10}{:>10}{:>10}", "accuracy", "", "", fmt2(report.accuracy), report.total);
    let _ = writeln!(
        out,
        "{:<14}{:>10}{:>10}{:>10}{:>10}",
        "macro avg",
        fmt2(report.macro_precision),
        fmt2(report.macro_recall),
        fmt2(report.macro_f1),
        report.total
    );
    let _ = writeln!(out, "{:<14}{:>10}{:>10}{:>10}{:>10}", "weighted avg", "", "", fmt2(report.weighted_f1), report.total);
    for c in &report.classes {
        if c.precision_undefined {
            let _ = writeln!(out, "warning: precision undefined for {} (no predictions); set to 0", c.label);
        }
        if c.recall_undefined {
            let _ = writeln!(out, "warning: recall undefined for {} (no gold examples); set to 0", c.label);
        }
    }
    out
}

/// Reads `gold<TAB>pred` pairs; a `gold<TAB>pred` header line is skipped.
pub fn parse_pairs(source_name: &str, bytes: &[u8]) -> Result<(Vec<SentimentLabel>, Vec<SentimentLabel>)> {
    let (mut golds, mut preds) = (Vec::new(), Vec::new());
    for (line_no, line) in (1..).zip(utf8_lines(source_name, bytes)?) {
        if line.trim().is_empty() || (line_no == 1 && line.starts_with("gold\t")) {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(Error::parse(source_name, line_no, "expected gold<TAB>pred"));
        }
        let label = |s: &str| s.parse().map_err(|e: Error| Error::parse(source_name, line_no, e.to_string()));
        golds.push(label(cols[0])?);
        preds.push(label(cols[1])?);
    }
    Ok((golds, preds))
}

/// Reads `id<TAB>label[<TAB>...]` rows into an id → label map. A header whose
/// first column is `id` is skipped.
pub fn parse_labels_by_id(source_name: &str, bytes: &[u8]) -> Result<Vec<(String, SentimentLabel)>> {
    let mut rows = Vec::new();
    for (line_no, line) in (1..).zip(utf8_lines(source_name, bytes)?) {
        if line.trim().is_empty() || (line_no == 1 && line.starts_with("id\t")) {
            continue;
        }
        let mut cols = line.split('\t');
        let (Some(id), Some(label)) = (cols.next(), cols.next()) else {
            return Err(Error::parse(source_name, line_no, "expected id<TAB>label"));
        };
        let label = label
            .parse()
            .map_err(|e: Error| Error::parse(source_name, line_no, e.to_string()))?;
        rows.push((id.to_owned(), label));
    }
    Ok(rows)
}

/// Joins gold and predicted labels by id, in gold order. Every gold id must
/// have exactly one prediction.
pub fn join_by_id(
    gold: &[(String, SentimentLabel)],
    pred: &[(String, SentimentLabel)],
) -> Result<(Vec<SentimentLabel>, Vec<SentimentLabel>)> {
    let mut by_id: HashMap<&str, SentimentLabel> = HashMap::with_capacity(pred.len());
    for (id, l) in pred {
        if by_id.insert(id, *l).is_some() {
            return Err(Error::Invalid(format!("duplicate prediction for id {id:?}")));
        }
    }
    let mut golds = Vec::with_capacity(gold.len());
    let mut preds = Vec::with_capacity(gold.len());
    for (id, g) in gold {
        let p = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::Invalid(format!("no prediction for id {id:?}")))?;
        golds.push(*g);
        preds.push(*p);
    }
    Ok((golds, preds))
}

/// Loads labels for evaluation. Without `pred`, `gold` holds
/// `gold<TAB>pred` pairs; otherwise both files hold `id<TAB>label` rows and
/// are joined by id.
pub fn load_evaluation_pairs(gold: &Path, pred: Option<&Path>) -> Result<(Vec<SentimentLabel>, Vec<SentimentLabel>)> {
    let gold_bytes = read_bytes(gold)?;
    let gold_name = gold.display().to_string();
    match pred {
        None => parse_pairs(&gold_name, &gold_bytes),
        Some(pred) => {
            let pred_bytes = read_bytes(pred)?;
            let g = parse_labels_by_id(&gold_name, &gold_bytes)?;
            let p = parse_labels_by_id(&pred.display().to_string(), &pred_bytes)?;
            join_by_id(&g, &p)
        }
    }
}
