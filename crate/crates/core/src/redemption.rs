//! Redemption methods: post-pruning and score thresholding.
//!
//! Post-pruning takes predictions made against the full training KB and
//! deletes those whose concept lies outside the partial view. Thresholding
//! never needs the full KB: it searches a score cutoff on the development
//! split that maximizes end-to-end F1 and applies it at inference.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::GoldAnnotation;
use crate::eval::evaluate;
use crate::kb::PartialKb;
use crate::paradigms::{Paradigm, ScoredPrediction};

#[derive(Debug, thiserror::Error)]
pub enum RedemptionError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A tuned score cutoff, valid for one paradigm's score scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub value: f64,
    pub paradigm: Paradigm,
    /// Split the search ran on.
    pub tuned_on: String,
    /// F1 achieved on that split at the chosen cutoff.
    pub dev_f1: f64,
}

/// Keep exactly the predictions whose concept is in `partial`, preserving
/// order. Callers are expected to pass predictions produced against the full
/// training KB.
pub fn post_prune(
    predictions: &[ScoredPrediction],
    partial: &PartialKb,
) -> Vec<ScoredPrediction> {
    predictions
        .iter()
        .filter(|p| partial.contains(&p.concept))
        .cloned()
        .collect()
}

/// Keep predictions scoring at least `theta`, preserving order.
pub fn apply_threshold(predictions: &[ScoredPrediction], theta: f64) -> Vec<ScoredPrediction> {
    predictions
        .iter()
        .filter(|p| p.score >= theta)
        .cloned()
        .collect()
}

/// Search the cutoff maximizing F1 of `{p : score(p) ≥ θ}` against
/// `dev_gold`.
///
/// F1 as a function of θ only changes at observed scores, so the candidate
/// grid `{-∞} ∪ scores ∪ {just above max}` searches the optimum exactly.
/// Ties are broken toward the largest θ — the most conservative filter —
/// which in particular drives θ strictly above every score when nothing is
/// worth keeping. Empty prediction lists tune to `-∞`.
pub fn tune_threshold(
    dev_predictions: &[ScoredPrediction],
    dev_gold: &[GoldAnnotation],
) -> Threshold {
    let paradigm = dev_predictions
        .first()
        .map(|p| p.paradigm)
        .unwrap_or(Paradigm::NerNed);
    let mut candidates = vec![f64::NEG_INFINITY];
    let mut scores: Vec<f64> = dev_predictions.iter().map(|p| p.score).collect();
    scores.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    scores.dedup();
    if let Some(&max) = scores.last() {
        candidates.extend(scores.iter());
        candidates.push(next_above(max));
    }

    let mut best_theta = f64::NEG_INFINITY;
    let mut best_f1 = f64::NEG_INFINITY;
    for &theta in &candidates {
        let kept = apply_threshold(dev_predictions, theta);
        let f1 = evaluate(&kept, dev_gold).el.f1;
        if f1 >= best_f1 {
            best_f1 = f1;
            best_theta = theta;
        }
    }
    Threshold {
        value: best_theta,
        paradigm,
        tuned_on: "dev".to_string(),
        dev_f1: best_f1,
    }
}

/// Smallest representable value strictly above `x`; used as the "keep
/// nothing" grid point.
fn next_above(x: f64) -> f64 {
    let next = f64::from_bits(if x >= 0.0 {
        x.to_bits() + 1
    } else {
        x.to_bits() - 1
    });
    debug_assert!(next > x);
    next
}

#[derive(Serialize, Deserialize)]
struct ThresholdFile {
    paradigm: Paradigm,
    /// `null` encodes −∞ (no filtering); finite numbers round-trip exactly.
    theta: Option<f64>,
    dev_f1: f64,
    tuned_on: String,
}

impl Threshold {
    /// Persist as JSON `{"paradigm", "theta", "dev_f1", "tuned_on"}`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RedemptionError> {
        let file = ThresholdFile {
            paradigm: self.paradigm,
            theta: if self.value.is_finite() {
                Some(self.value)
            } else {
                None
            },
            dev_f1: self.dev_f1,
            tuned_on: self.tuned_on.clone(),
        };
        std::fs::write(path, serde_json::to_string(&file).unwrap())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Threshold, RedemptionError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let file: ThresholdFile =
            serde_json::from_str(&text).map_err(|e| RedemptionError::Parse {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        Ok(Threshold {
            value: file.theta.unwrap_or(f64::NEG_INFINITY),
            paradigm: file.paradigm,
            tuned_on: file.tuned_on,
            dev_f1: file.dev_f1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Span;
    use crate::kb::{subset, Concept, KnowledgeBase, Selector};

    fn pred(doc: &str, start: usize, end: usize, concept: &str, score: f64) -> ScoredPrediction {
        ScoredPrediction {
            doc_id: doc.into(),
            span: Span { start, end },
            concept: concept.parse().unwrap(),
            score,
            paradigm: Paradigm::NerNed,
        }
    }

    fn gold(doc: &str, start: usize, end: usize, concept: &str) -> GoldAnnotation {
        GoldAnnotation {
            doc_id: doc.into(),
            span: Span { start, end },
            concept: concept.parse().unwrap(),
        }
    }

    #[test]
    fn post_prune_keeps_only_view_members() {
        let kb = KnowledgeBase::new(
            "kb",
            ["A", "B", "C"]
                .iter()
                .map(|id| Concept::new(id.parse().unwrap(), format!("n{id}"), [], []).unwrap()),
        )
        .unwrap();
        let partial = subset(&kb, "a", &Selector::Ids(vec!["A".parse().unwrap()]))
            .unwrap()
            .partial;
        let preds = vec![
            pred("d", 0, 1, "A", 0.9),
            pred("d", 2, 3, "B", 0.8),
            pred("d", 4, 5, "C", 0.7),
        ];
        let kept = post_prune(&preds, &partial);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].concept.as_str(), "A");

        // Pruning to the full id set is the identity.
        let all = subset(&kb, "all", &Selector::Ids(kb.ids().cloned().collect()))
            .unwrap()
            .partial;
        assert_eq!(post_prune(&preds, &all), preds);
    }

    #[test]
    fn post_prune_worked_example() {
        // Six detected pairs; the partial view holds two of the concepts.
        let preds = vec![
            pred("x", 0, 12, "D007213", 0.35),
            pred("x", 21, 32, "D007022", 1.00),
            pred("x", 36, 53, "D005441", 0.43),
            pred("x", 105, 117, "D007213", 0.35),
            pred("x", 119, 122, "D003922", 0.94),
            pred("x", 127, 133, "D012964", 0.38),
        ];
        let kb = KnowledgeBase::new(
            "mesh",
            ["D007213", "D007022", "D005441", "D003922", "D012964"]
                .iter()
                .map(|id| Concept::new(id.parse().unwrap(), format!("n{id}"), [], []).unwrap()),
        )
        .unwrap();
        let medic = subset(
            &kb,
            "medic",
            &Selector::Ids(vec!["D007022".parse().unwrap(), "D003922".parse().unwrap()]),
        )
        .unwrap()
        .partial;
        let kept = post_prune(&preds, &medic);
        let ids: Vec<&str> = kept.iter().map(|p| p.concept.as_str()).collect();
        assert_eq!(ids, vec!["D007022", "D003922"]);
    }

    #[test]
    fn apply_threshold_worked_example() {
        let preds = vec![
            pred("x", 0, 12, "C564365", 0.35),
            pred("x", 21, 32, "D007022", 1.00),
            pred("x", 36, 53, "D003681", 0.43),
            pred("x", 105, 117, "C564365", 0.35),
            pred("x", 119, 122, "D003922", 0.94),
            pred("x", 127, 133, "D000747", 0.38),
        ];
        let kept = apply_threshold(&preds, 0.8);
        let scores: Vec<f64> = kept.iter().map(|p| p.score).collect();
        assert_eq!(scores, vec![1.00, 0.94]);
    }

    #[test]
    fn apply_threshold_boundaries() {
        let preds = vec![pred("d", 0, 1, "A", 0.2), pred("d", 2, 3, "B", 0.7)];
        assert_eq!(apply_threshold(&preds, f64::NEG_INFINITY), preds);
        assert!(apply_threshold(&preds, 0.71).is_empty());
        // θ equal to a score keeps it (filter is ≥).
        assert_eq!(apply_threshold(&preds, 0.7).len(), 1);
    }

    #[test]
    fn tune_threshold_worked_example() {
        // Scores 0.9 (correct), 0.6 (wrong), 0.4 (correct); two gold.
        let preds = vec![
            pred("d", 0, 5, "A", 0.9),
            pred("d", 10, 15, "X", 0.6),
            pred("d", 20, 25, "B", 0.4),
        ];
        let gold = vec![gold("d", 0, 5, "A"), gold("d", 20, 25, "B")];
        let threshold = tune_threshold(&preds, &gold);
        // F1 at -∞ and at 0.4 are both 0.8; the tie goes to the larger θ.
        assert_eq!(threshold.value, 0.4);
        assert!((threshold.dev_f1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn tune_threshold_all_correct_keeps_everything() {
        let preds = vec![pred("d", 0, 5, "A", 0.9), pred("d", 10, 15, "B", 0.3)];
        let gold = vec![gold("d", 0, 5, "A"), gold("d", 10, 15, "B")];
        let threshold = tune_threshold(&preds, &gold);
        assert_eq!(threshold.value, 0.3);
        assert!((threshold.dev_f1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tune_threshold_all_wrong_filters_everything() {
        let preds = vec![pred("d", 0, 5, "X", 0.9), pred("d", 10, 15, "Y", 0.3)];
        let gold = vec![gold("d", 0, 5, "A")];
        let threshold = tune_threshold(&preds, &gold);
        assert!(threshold.value > 0.9);
        assert_eq!(threshold.dev_f1, 0.0);
        assert!(apply_threshold(&preds, threshold.value).is_empty());
    }

    #[test]
    fn tune_threshold_empty_input() {
        let threshold = tune_threshold(&[], &[gold("d", 0, 5, "A")]);
        assert_eq!(threshold.value, f64::NEG_INFINITY);
        assert_eq!(threshold.dev_f1, 0.0);
    }

    #[test]
    fn threshold_save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for value in [0.25, f64::NEG_INFINITY] {
            let threshold = Threshold {
                value,
                paradigm: Paradigm::Generative,
                tuned_on: "dev".into(),
                dev_f1: 0.5,
            };
            let path = dir.path().join("threshold.json");
            threshold.save(&path).unwrap();
            let loaded = Threshold::load(&path).unwrap();
            assert_eq!(threshold, loaded);
        }
    }
}
