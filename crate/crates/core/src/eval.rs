//! Entity-level precision/recall/F1 with conlleval span semantics, plus
//! token accuracy for corpora without entity structure.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntitySpan {
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    pub label: String,
}

/// Maximal BIO2 spans. A span opens at B-X and extends through consecutive
/// I-X of the same type. conlleval's lenient rule applies: an I-X after O,
/// after a different type, or at sentence start also opens a span.
pub fn extract_spans(tags: &[String]) -> Result<Vec<EntitySpan>> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, String)> = None;
    for (k, tag) in tags.iter().enumerate() {
        let (starts, label) = if tag == "O" {
            (false, None)
        } else if let Some(ty) = tag.strip_prefix("B-") {
            (true, Some(ty))
        } else if let Some(ty) = tag.strip_prefix("I-") {
            let continues = matches!(&open, Some((_, cur)) if cur == ty);
            (!continues, Some(ty))
        } else {
            return Err(Error::InvalidInput(format!(
                "malformed tag {tag:?} at position {k} (expected O, B-X, or I-X)"
            )));
        };
        match label {
            None => {
                if let Some((s, ty)) = open.take() {
                    spans.push(EntitySpan {
                        start: s,
                        end: k,
                        label: ty,
                    });
                }
            }
            Some(ty) => {
                if starts {
                    if let Some((s, prev)) = open.take() {
                        spans.push(EntitySpan {
                            start: s,
                            end: k,
                            label: prev,
                        });
                    }
                    open = Some((k, ty.to_string()));
                }
            }
        }
    }
    if let Some((s, ty)) = open {
        spans.push(EntitySpan {
            start: s,
            end: tags.len(),
            label: ty,
        });
    }
    Ok(spans)
}

/// Entity precision, recall, and F1 as percentages. A predicted span is
/// correct iff start, end, and label all match a gold span.
pub fn prf1(gold: &[Vec<String>], pred: &[Vec<String>]) -> Result<(f64, f64, f64)> {
    if gold.len() != pred.len() {
        return Err(Error::InvalidInput(format!(
            "{} gold sentences vs {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    let mut n_gold = 0usize;
    let mut n_pred = 0usize;
    let mut n_correct = 0usize;
    for (g, p) in gold.iter().zip(pred) {
        if g.len() != p.len() {
            return Err(Error::InvalidInput(
                "sentence length mismatch between gold and prediction".into(),
            ));
        }
        let gs = extract_spans(g)?;
        let ps = extract_spans(p)?;
        n_gold += gs.len();
        n_pred += ps.len();
        n_correct += ps.iter().filter(|s| gs.contains(s)).count();
    }
    let precision = if n_pred == 0 {
        0.0
    } else {
        100.0 * n_correct as f64 / n_pred as f64
    };
    let recall = if n_gold == 0 {
        0.0
    } else {
        100.0 * n_correct as f64 / n_gold as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok((precision, recall, f1))
}

/// Matched tags / total tags, as a percentage.
pub fn token_accuracy(gold: &[Vec<usize>], pred: &[Vec<usize>]) -> Result<f64> {
    if gold.len() != pred.len() {
        return Err(Error::InvalidInput("sentence count mismatch".into()));
    }
    let mut total = 0usize;
    let mut matched = 0usize;
    for (g, p) in gold.iter().zip(pred) {
        if g.len() != p.len() {
            return Err(Error::InvalidInput("sentence length mismatch".into()));
        }
        total += g.len();
        matched += g.iter().zip(p).filter(|(a, b)| a == b).count();
    }
    if total == 0 {
        return Err(Error::InvalidInput("no tokens to score".into()));
    }
    Ok(100.0 * matched as f64 / total as f64)
}

/// Key-value metrics block: one `key=value` line per metric, values to two
/// decimals.
pub fn metrics_report(pairs: &[(&str, f64)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v:.2}\n")).collect()
}
