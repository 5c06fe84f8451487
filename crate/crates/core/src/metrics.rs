//! Corpus-level cumulative BLEU-4 and ROUGE-LCS precision/recall/F1.
//!
//! BLEU is corpus-pooled and unsmoothed: clipped modified n-gram precisions
//! p1..p4 are pooled over all pairs, the score is `BP * exp(mean(ln pn))`,
//! and any zero precision zeroes the score. ROUGE-LCS is computed per pair
//! from the longest common subsequence and macro-averaged.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("hypothesis/reference counts differ: {hyps} vs {refs}")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("empty evaluation set")]
    EmptySet,
    #[error("empty {side} sequence at pair {index}")]
    EmptySequence { side: &'static str, index: usize },
}

/// Corpus scores, all in `[0, 1]`. Rendered x100 at the CLI boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub bleu4: f64,
    pub rouge_precision: f64,
    pub rouge_recall: f64,
    pub rouge_f1: f64,
    pub pair_count: usize,
}

fn ngram_counts<'a>(tokens: &'a [String], n: usize) -> HashMap<&'a [String], u64> {
    let mut counts: HashMap<&[String], u64> = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Cumulative corpus BLEU-4 over aligned token sequences.
///
/// Every reference must be non-empty; hypotheses may be empty (they simply
/// contribute no n-grams, and an all-empty corpus scores 0).
pub fn bleu4_corpus(
    hypotheses: &[Vec<String>],
    references: &[Vec<String>],
) -> Result<f64, MetricsError> {
    if hypotheses.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            hyps: hypotheses.len(),
            refs: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let mut matched = [0u64; 4];
    let mut total = [0u64; 4];
    let mut hyp_len = 0u64;
    let mut ref_len = 0u64;
    for (index, (hyp, rf)) in hypotheses.iter().zip(references).enumerate() {
        if rf.is_empty() {
            return Err(MetricsError::EmptySequence {
                side: "reference",
                index,
            });
        }
        hyp_len += hyp.len() as u64;
        ref_len += rf.len() as u64;
        for n in 1..=4 {
            let hyp_grams = ngram_counts(hyp, n);
            let ref_grams = ngram_counts(rf, n);
            for (gram, count) in &hyp_grams {
                total[n - 1] += count;
                matched[n - 1] += (*count).min(ref_grams.get(gram).copied().unwrap_or(0));
            }
        }
    }
    if hyp_len == 0 {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for n in 0..4 {
        if matched[n] == 0 || total[n] == 0 {
            return Ok(0.0);
        }
        log_sum += (matched[n] as f64 / total[n] as f64).ln();
    }
    let brevity = if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    Ok(brevity * (log_sum / 4.0).exp())
}

fn lcs_length(a: &[String], b: &[String]) -> usize {
    // one-row DP over the shorter side
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut row = vec![0usize; short.len() + 1];
    for item in long {
        let mut diag = 0;
        for (j, other) in short.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if item == other {
                diag + 1
            } else {
                above.max(row[j])
            };
            diag = above;
        }
    }
    row[short.len()]
}

/// ROUGE-LCS precision, recall, and F1 for one hypothesis/reference pair.
pub fn rouge_lcs_pair(
    hypothesis: &[String],
    reference: &[String],
) -> Result<(f64, f64, f64), MetricsError> {
    if hypothesis.is_empty() {
        return Err(MetricsError::EmptySequence {
            side: "hypothesis",
            index: 0,
        });
    }
    if reference.is_empty() {
        return Err(MetricsError::EmptySequence {
            side: "reference",
            index: 0,
        });
    }
    let lcs = lcs_length(hypothesis, reference) as f64;
    let precision = lcs / hypothesis.len() as f64;
    let recall = lcs / reference.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok((precision, recall, f1))
}

/// Full report: corpus BLEU-4 plus macro-averaged ROUGE-LCS.
pub fn evaluate(
    hypotheses: &[Vec<String>],
    references: &[Vec<String>],
) -> Result<EvalReport, MetricsError> {
    if hypotheses.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            hyps: hypotheses.len(),
            refs: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let bleu4 = bleu4_corpus(hypotheses, references)?;
    let mut p_sum = 0.0;
    let mut r_sum = 0.0;
    let mut f_sum = 0.0;
    for (index, (hyp, rf)) in hypotheses.iter().zip(references).enumerate() {
        let (p, r, f) = rouge_lcs_pair(hyp, rf).map_err(|e| match e {
            MetricsError::EmptySequence { side, .. } => MetricsError::EmptySequence { side, index },
            other => other,
        })?;
        p_sum += p;
        r_sum += r;
        f_sum += f;
    }
    let n = hypotheses.len() as f64;
    Ok(EvalReport {
        bleu4,
        rouge_precision: p_sum / n,
        rouge_recall: r_sum / n,
        rouge_f1: f_sum / n,
        pair_count: hypotheses.len(),
    })
}
