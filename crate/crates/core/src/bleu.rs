//! Corpus-level BLEU baseline (n = 1..4, uniform weights, no smoothing).
//!
//! Tokenization is a whitespace split of the text lines. Matching counts are
//! clipped per segment, summed over the corpus, and only then turned into
//! precisions.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

/// Sufficient statistics for BLEU.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NGramStats {
    /// Clipped matches, index `n - 1`.
    pub matches: [u64; MAX_ORDER],
    /// Hypothesis n-grams, index `n - 1`.
    pub totals: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl NGramStats {
    pub fn merge(&mut self, other: &NGramStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    /// Modified n-gram precision for order `n` (1-based); 0 when there are no
    /// hypothesis n-grams.
    pub fn precision(&self, n: usize) -> f64 {
        let total = self.totals[n - 1];
        if total == 0 {
            0.0
        } else {
            self.matches[n - 1] as f64 / total as f64
        }
    }

    pub fn brevity_penalty(&self) -> f64 {
        if self.hyp_len == 0 {
            0.0
        } else if self.hyp_len < self.ref_len {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        } else {
            1.0
        }
    }

    pub fn bleu(&self) -> f64 {
        let mut log_sum = 0.0;
        for n in 1..=MAX_ORDER {
            let p = self.precision(n);
            if p == 0.0 {
                return 0.0;
            }
            log_sum += p.ln();
        }
        self.brevity_penalty() * (log_sum / MAX_ORDER as f64).exp()
    }
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            let key: Vec<&str> = window.iter().map(AsRef::as_ref).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts
}

/// Statistics of one segment pair.
pub fn segment_stats<S: AsRef<str>, T: AsRef<str>>(
    reference: &[S],
    hypothesis: &[T],
) -> NGramStats {
    let mut stats = NGramStats {
        hyp_len: hypothesis.len() as u64,
        ref_len: reference.len() as u64,
        ..Default::default()
    };
    for n in 1..=MAX_ORDER {
        let ref_counts = ngram_counts(reference, n);
        let hyp_counts = ngram_counts(hypothesis, n);
        stats.totals[n - 1] = hypothesis.len().saturating_sub(n - 1) as u64;
        stats.matches[n - 1] = hyp_counts
            .iter()
            .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
            .sum();
    }
    stats
}

/// Whitespace tokenization used for BLEU.
pub fn tokenize(line: &str) -> Vec<&str> {
    line.split_whitespace().collect()
}

/// Corpus statistics, merged in segment order.
pub fn corpus_stats<S: AsRef<str>, T: AsRef<str>>(
    refs: &[Vec<S>],
    hyps: &[Vec<T>],
) -> Result<NGramStats> {
    if refs.len() != hyps.len() {
        return Err(Error::Alignment {
            path: "<hypotheses>".into(),
            expected: refs.len(),
            found: hyps.len(),
        });
    }
    if refs.is_empty() {
        return Err(Error::EmptyCorpus("BLEU over zero segments".into()));
    }
    let mut total = NGramStats::default();
    for (r, h) in refs.iter().zip(hyps) {
        total.merge(&segment_stats(r, h));
    }
    Ok(total)
}

/// Corpus BLEU in `[0, 1]`.
pub fn corpus_bleu<S: AsRef<str>, T: AsRef<str>>(refs: &[Vec<S>], hyps: &[Vec<T>]) -> Result<f64> {
    Ok(corpus_stats(refs, hyps)?.bleu())
}
