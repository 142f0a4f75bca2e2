//! Confusion matrices, per-dialect precision/recall/F1 and report rendering.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::corpus::{DialectLabel, Utterance, NUM_DIALECTS};
use crate::error::{Error, Result};
use crate::models::{load_utterance_audio, ModelBundle, ModelKind};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_DIALECTS]; NUM_DIALECTS],
}

impl Default for ConfusionMatrix {
    fn default() -> Self {
        Self {
            counts: [[0; NUM_DIALECTS]; NUM_DIALECTS],
        }
    }
}

impl ConfusionMatrix {
    pub fn add(&mut self, truth: DialectLabel, predicted: DialectLabel) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_DIALECTS).map(|k| self.counts[k][k]).sum()
    }

    pub fn row_sum(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }

    pub fn col_sum(&self, k: usize) -> u64 {
        self.counts.iter().map(|r| r[k]).sum()
    }

    /// Tab-separated matrix with dialect codes as row and column headers.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("true\\pred");
        for l in DialectLabel::all() {
            s.push('\t');
            s.push_str(l.code());
        }
        s.push('\n');
        for (l, row) in DialectLabel::all().zip(&self.counts) {
            s.push_str(l.code());
            for c in row {
                let _ = write!(s, "\t{c}");
            }
            s.push('\n');
        }
        s
    }
}

pub fn confusion(truth: &[DialectLabel], predicted: &[DialectLabel]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::Shape(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in truth.iter().zip(predicted) {
        cm.add(t, p);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Indexed by class, in registry order.
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    /// Unweighted means over the classes that occur as truth or prediction.
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub total: u64,
}

impl Default for EvalReport {
    fn default() -> Self {
        Self {
            per_class: vec![ClassMetrics::default(); NUM_DIALECTS],
            accuracy: 0.0,
            macro_precision: 0.0,
            macro_recall: 0.0,
            macro_f1: 0.0,
            total: 0,
        }
    }
}

/// `num / den`, with 0/0 taken as 0.
fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> EvalReport {
    let mut per_class = Vec::with_capacity(NUM_DIALECTS);
    let mut present = Vec::new();
    for k in 0..NUM_DIALECTS {
        let tp = cm.counts[k][k] as f64;
        let (rows, cols) = (cm.row_sum(k), cm.col_sum(k));
        let precision = ratio(tp, cols as f64);
        let recall = ratio(tp, rows as f64);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        per_class.push(ClassMetrics {
            precision,
            recall,
            f1,
            support: rows,
        });
        if rows > 0 || cols > 0 {
            present.push(k);
        }
    }
    let mean = |f: fn(&ClassMetrics) -> f64| ratio(present.iter().map(|&k| f(&per_class[k])).sum(), present.len() as f64);
    let total = cm.total();
    EvalReport {
        accuracy: ratio(cm.trace() as f64, total as f64),
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        per_class,
        total,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportStyle {
    Tsv,
    Table,
}

impl std::str::FromStr for ReportStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(ReportStyle::Tsv),
            "table" => Ok(ReportStyle::Table),
            _ => Err(Error::Config(format!("unknown report style {s:?} (expected tsv or table)"))),
        }
    }
}

fn fmt_metric(v: f64, full_precision: bool) -> String {
    if full_precision {
        format!("{v}")
    } else {
        format!("{v:.2}")
    }
}

/// One row per dialect in registry order followed by an accuracy footer.
/// Values are rounded to two decimals unless `full_precision` is set
/// (which only affects the TSV style).
pub fn render_report(report: &EvalReport, style: ReportStyle, full_precision: bool) -> String {
    let mut s = String::new();
    match style {
        ReportStyle::Tsv => {
            s.push_str("dialect\tprecision\trecall\tf1\tsupport\n");
            for (l, m) in DialectLabel::all().zip(&report.per_class) {
                let f = |v| fmt_metric(v, full_precision);
                let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}", l.code(), f(m.precision), f(m.recall), f(m.f1), m.support);
            }
            let _ = writeln!(s, "# accuracy={}", fmt_metric(report.accuracy, full_precision));
        }
        ReportStyle::Table => {
            let _ = writeln!(
                s,
                "{:<22} {:<4} {:>9} {:>6} {:>6} {:>7}",
                "Dialect", "Code", "precision", "recall", "f1", "support"
            );
            for (l, m) in DialectLabel::all().zip(&report.per_class) {
                let _ = writeln!(
                    s,
                    "{:<22} {:<4} {:>9.2} {:>6.2} {:>6.2} {:>7}",
                    l.name(),
                    l.code(),
                    m.precision,
                    m.recall,
                    m.f1,
                    m.support
                );
            }
            let _ = writeln!(
                s,
                "{:<27} {:>9.2} {:>6.2} {:>6.2} {:>7}",
                "macro avg", report.macro_precision, report.macro_recall, report.macro_f1, report.total
            );
            let _ = writeln!(s, "# accuracy={:.2}", report.accuracy);
        }
    }
    s
}

/// Predicted and true labels for each utterance, loading audio relative to
/// `audio_root` for fusion bundles.
pub fn predict_all(bundle: &ModelBundle, utts: &[Utterance], audio_root: &Path) -> Result<(Vec<DialectLabel>, Vec<DialectLabel>)> {
    let mut truth = Vec::with_capacity(utts.len());
    let mut predicted = Vec::with_capacity(utts.len());
    for u in utts {
        let audio = match bundle.kind() {
            ModelKind::Fusion => Some(load_utterance_audio(u, audio_root)?),
            ModelKind::Text => None,
        };
        let p = bundle.predict(&u.transcript_dialectal, audio.as_ref()).map_err(|e| match e {
            Error::Utterance { .. } => e,
            other => Error::Utterance {
                id: u.id.clone(),
                message: other.to_string(),
            },
        })?;
        truth.push(u.dialect);
        predicted.push(p.label);
    }
    Ok((truth, predicted))
}

pub fn evaluate(bundle: &ModelBundle, utts: &[Utterance], audio_root: &Path) -> Result<(ConfusionMatrix, EvalReport)> {
    let (t, p) = predict_all(bundle, utts, audio_root)?;
    let cm = confusion(&t, &p)?;
    let report = metrics(&cm);
    Ok((cm, report))
}
