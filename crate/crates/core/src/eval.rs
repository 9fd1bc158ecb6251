//! Metrics: entity-linking and mention-detection precision/recall/F1, NED
//! accuracy on correctly detected mentions, top-K retrieval recall, and the
//! annotation-proportion report.
//!
//! Matching is exact-offset and micro-averaged over the corpus. Gold is
//! treated as a map from (document, span) to the set of gold concepts at
//! that span; a prediction is an entity-linking true positive when its span
//! matches a gold span and its concept matches any gold concept there.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{GoldAnnotation, Span};
use crate::kb::ConceptId;
use crate::paradigms::ScoredPrediction;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("the proportion report needs at least 2 views, got {0}")]
    TooFewViews(usize),
}

/// Precision, recall, and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn new(tp: usize, n_pred: usize, n_gold: usize) -> Prf {
        let precision = if n_pred == 0 {
            0.0
        } else {
            tp as f64 / n_pred as f64
        };
        let recall = if n_gold == 0 {
            0.0
        } else {
            tp as f64 / n_gold as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

/// Raw match counts behind the metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsCounts {
    /// Predictions matching a gold span with a gold concept.
    pub tp_el: usize,
    /// Predictions matching a gold span.
    pub tp_ner: usize,
    /// Predictions (deduplicated per span upstream).
    pub n_pred: usize,
    /// Distinct gold spans.
    pub n_gold: usize,
}

/// Micro-averaged evaluation of one prediction set against one gold set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub el: Prf,
    pub ner: Prf,
    /// Among predictions whose span matches a gold span, the fraction with a
    /// gold concept; `None` when no span matches.
    pub ned_accuracy: Option<f64>,
    pub counts: MetricsCounts,
}

impl MetricsReport {
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self).unwrap())
    }
}

/// Evaluate predictions against gold annotations.
///
/// Predictions must already be deduplicated per (doc_id, span); every
/// linker in this crate guarantees that.
pub fn evaluate(predictions: &[ScoredPrediction], gold: &[GoldAnnotation]) -> MetricsReport {
    let mut gold_spans: BTreeMap<(&str, Span), BTreeSet<&ConceptId>> = BTreeMap::new();
    for ann in gold {
        gold_spans
            .entry((ann.doc_id.as_str(), ann.span))
            .or_default()
            .insert(&ann.concept);
    }
    let n_gold = gold_spans.len();
    let n_pred = predictions.len();
    let mut tp_ner = 0usize;
    let mut tp_el = 0usize;
    for pred in predictions {
        if let Some(concepts) = gold_spans.get(&(pred.doc_id.as_str(), pred.span)) {
            tp_ner += 1;
            if concepts.contains(&pred.concept) {
                tp_el += 1;
            }
        }
    }
    MetricsReport {
        el: Prf::new(tp_el, n_pred, n_gold),
        ner: Prf::new(tp_ner, n_pred, n_gold),
        ned_accuracy: if tp_ner > 0 {
            Some(tp_el as f64 / tp_ner as f64)
        } else {
            None
        },
        counts: MetricsCounts {
            tp_el,
            tp_ner,
            n_pred,
            n_gold,
        },
    }
}

/// Fraction of distinct gold (document, concept) pairs whose concept appears
/// in that document's top-k retrieved list.
pub fn recall_at_k(
    retrieved: &BTreeMap<String, Vec<ConceptId>>,
    gold: &[GoldAnnotation],
    k: usize,
) -> f64 {
    let gold_pairs: BTreeSet<(&str, &ConceptId)> = gold
        .iter()
        .map(|ann| (ann.doc_id.as_str(), &ann.concept))
        .collect();
    if gold_pairs.is_empty() {
        return 0.0;
    }
    let mut hits = 0usize;
    for (doc_id, concept) in &gold_pairs {
        if let Some(ranked) = retrieved.get(*doc_id) {
            let mut seen = BTreeSet::new();
            let top_k = ranked
                .iter()
                .filter(|c| seen.insert(*c))
                .take(k)
                .any(|c| c == *concept);
            if top_k {
                hits += 1;
            }
        }
    }
    hits as f64 / gold_pairs.len() as f64
}

/// One partial-view run for the proportion report.
#[derive(Debug, Clone)]
pub struct ViewRun {
    pub view: String,
    /// Share of training annotations whose concept lies in the view.
    pub annotation_proportion: f64,
    /// Metrics of the baseline full-KB run.
    pub full: MetricsReport,
    /// Metrics of the partial-view run.
    pub partial: MetricsReport,
}

/// Row of the proportion report. Drops are `full − partial` (positive means
/// the partial run is worse); the NED delta is `partial − full` (positive
/// means disambiguation got easier).
#[derive(Debug, Clone, Serialize)]
pub struct ProportionRow {
    pub view: String,
    pub proportion: f64,
    pub el_f1_drop: f64,
    pub ner_f1_drop: f64,
    pub ned_acc_delta: Option<f64>,
}

/// Proportion report: one row per view plus Pearson correlations between the
/// annotation proportion and each drop.
#[derive(Debug, Clone, Serialize)]
pub struct ProportionReport {
    pub rows: Vec<ProportionRow>,
    pub pearson_el_f1_drop: Option<f64>,
    pub pearson_ner_f1_drop: Option<f64>,
    pub pearson_ned_acc_delta: Option<f64>,
}

/// Pearson correlation; `None` when either side has zero variance or fewer
/// than two points remain.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mean_x) * (y - mean_y);
        var_x += (x - mean_x).powi(2);
        var_y += (y - mean_y).powi(2);
    }
    if var_x == 0.0 || var_y == 0.0 {
        return None;
    }
    Some(cov / (var_x.sqrt() * var_y.sqrt()))
}

/// Build the proportion report from per-view runs. Requires at least two
/// views.
pub fn proportion_report(runs: &[ViewRun]) -> Result<ProportionReport, EvalError> {
    if runs.len() < 2 {
        return Err(EvalError::TooFewViews(runs.len()));
    }
    let rows: Vec<ProportionRow> = runs
        .iter()
        .map(|run| ProportionRow {
            view: run.view.clone(),
            proportion: run.annotation_proportion,
            el_f1_drop: run.full.el.f1 - run.partial.el.f1,
            ner_f1_drop: run.full.ner.f1 - run.partial.ner.f1,
            ned_acc_delta: match (run.partial.ned_accuracy, run.full.ned_accuracy) {
                (Some(p), Some(f)) => Some(p - f),
                _ => None,
            },
        })
        .collect();
    let proportions: Vec<f64> = rows.iter().map(|r| r.proportion).collect();
    let el: Vec<f64> = rows.iter().map(|r| r.el_f1_drop).collect();
    let ner: Vec<f64> = rows.iter().map(|r| r.ner_f1_drop).collect();
    let ned_pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.ned_acc_delta.map(|d| (r.proportion, d)))
        .collect();
    Ok(ProportionReport {
        pearson_el_f1_drop: pearson(&proportions, &el),
        pearson_ner_f1_drop: pearson(&proportions, &ner),
        pearson_ned_acc_delta: pearson(
            &ned_pairs.iter().map(|(p, _)| *p).collect::<Vec<_>>(),
            &ned_pairs.iter().map(|(_, d)| *d).collect::<Vec<_>>(),
        ),
        rows,
    })
}

fn fmt_opt(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.6}"),
        None => "n/a".to_string(),
    }
}

impl ProportionReport {
    /// TSV rendering: header, one row per view, correlations as trailing
    /// comment lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("view\tproportion\tel_f1_drop\tner_f1_drop\tned_acc_delta\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{}\t{:.6}\t{:.6}\t{:.6}\t{}\n",
                row.view,
                row.proportion,
                row.el_f1_drop,
                row.ner_f1_drop,
                fmt_opt(row.ned_acc_delta),
            ));
        }
        out.push_str(&format!(
            "# pearson_el_f1_drop\t{}\n# pearson_ner_f1_drop\t{}\n# pearson_ned_acc_delta\t{}\n",
            fmt_opt(self.pearson_el_f1_drop),
            fmt_opt(self.pearson_ner_f1_drop),
            fmt_opt(self.pearson_ned_acc_delta),
        ));
        out
    }

    /// Minimal SVG scatter of proportion against the two F1 drops.
    pub fn to_svg(&self) -> String {
        let width = 640.0;
        let height = 420.0;
        let margin = 60.0;
        let max_drop = self
            .rows
            .iter()
            .flat_map(|r| [r.el_f1_drop, r.ner_f1_drop])
            .fold(0.05_f64, f64::max);
        let min_drop = self
            .rows
            .iter()
            .flat_map(|r| [r.el_f1_drop, r.ner_f1_drop])
            .fold(0.0_f64, f64::min);
        let x = |p: f64| margin + p * (width - 2.0 * margin);
        let y = |d: f64| {
            height - margin - (d - min_drop) / (max_drop - min_drop).max(1e-9)
                * (height - 2.0 * margin)
        };
        let mut svg = format!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">"#
        );
        svg.push_str(&format!(
            r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
            m = margin,
            b = height - margin,
            r = width - margin,
            t = margin,
        ));
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" font-size="12">annotation proportion</text><text x="12" y="{}" font-size="12" transform="rotate(-90 12,{})">F1 drop</text>"#,
            width / 2.0 - 60.0,
            height - 18.0,
            height / 2.0,
            height / 2.0,
        ));
        for row in &self.rows {
            svg.push_str(&format!(
                r#"<circle cx="{:.1}" cy="{:.1}" r="5" fill="steelblue" fill-opacity="0.8"><title>{} el</title></circle>"#,
                x(row.proportion),
                y(row.el_f1_drop),
                row.view
            ));
            svg.push_str(&format!(
                r#"<rect x="{:.1}" y="{:.1}" width="8" height="8" fill="orange" fill-opacity="0.8"><title>{} ner</title></rect>"#,
                x(row.proportion) - 4.0,
                y(row.ner_f1_drop) - 4.0,
                row.view
            ));
        }
        svg.push_str("</svg>\n");
        svg
    }
}
