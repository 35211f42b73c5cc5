//! Corpus-wide scoring and difficulty export.
//!
//! Segments are processed in parallel on the current rayon pool; results are
//! collected in segment order and every reduction is a sequential
//! left-to-right sum, so output does not depend on the number of workers.

use rayon::prelude::*;

use crate::corpus::{CorpusEmbeddings, EvaluationCorpus};
use crate::difficulty::{da_scores, difficulty_from_maxima, system_score, DAScores, DifficultyMap};
use crate::error::{Error, Result};
use crate::similarity::{build_similarity_matrix, mean_or_zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoreOptions {
    /// When false every weight is 1 and the DA scores equal the raw ones.
    pub difficulty: bool,
    /// Leave the scored system out of its own difficulty average.
    pub exclude_self: bool,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            difficulty: true,
            exclude_self: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

#[derive(Debug, Clone)]
pub struct SystemScores {
    pub system: String,
    pub segments: Vec<DAScores>,
    /// Segment means of the unweighted scores.
    pub bert: Prf,
    /// Segment means of the difficulty-aware scores.
    pub da: Prf,
}

fn embeddings(corpus: &EvaluationCorpus) -> Result<&CorpusEmbeddings> {
    let emb = corpus
        .embeddings
        .as_ref()
        .ok_or_else(|| Error::Config("corpus has no embeddings bound".into()))?;
    if emb.systems.is_empty() {
        return Err(Error::EmptySystemSet);
    }
    Ok(emb)
}

fn score_segment(emb: &CorpusEmbeddings, n: usize, opts: ScoreOptions) -> Result<Vec<DAScores>> {
    let reference = &emb.reference[n];
    let matrices = emb
        .systems
        .iter()
        .map(|s| build_similarity_matrix(reference, &s[n]))
        .collect::<Result<Vec<_>>>()?;
    if !opts.difficulty {
        let ones = DifficultyMap::ones(n, reference.tokens().to_vec());
        return Ok(matrices.iter().map(|m| da_scores(m, &ones)).collect());
    }
    let maxima: Vec<Vec<f64>> = matrices.iter().map(|m| m.row_maxima()).collect();
    if opts.exclude_self {
        matrices
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let dmap = difficulty_from_maxima(n, reference.tokens(), &maxima, Some(k))?;
                Ok(da_scores(m, &dmap))
            })
            .collect()
    } else {
        let dmap = difficulty_from_maxima(n, reference.tokens(), &maxima, None)?;
        Ok(matrices.iter().map(|m| da_scores(m, &dmap)).collect())
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    mean_or_zero(&v)
}

/// Scores every system on every segment. Systems come back in corpus order
/// (sorted by name).
pub fn score_corpus(corpus: &EvaluationCorpus, opts: ScoreOptions) -> Result<Vec<SystemScores>> {
    let emb = embeddings(corpus)?;
    let per_segment: Vec<Vec<DAScores>> = (0..corpus.len())
        .into_par_iter()
        .map(|n| score_segment(emb, n, opts))
        .collect::<Result<_>>()?;

    let mut columns: Vec<Vec<DAScores>> = vec![Vec::with_capacity(corpus.len()); emb.systems.len()];
    for row in per_segment {
        for (k, s) in row.into_iter().enumerate() {
            columns[k].push(s);
        }
    }
    corpus
        .systems
        .iter()
        .zip(columns)
        .map(|(system, segments)| {
            let bert = Prf {
                precision: mean_of(segments.iter().map(|s| s.raw.precision)),
                recall: mean_of(segments.iter().map(|s| s.raw.recall)),
                f: mean_of(segments.iter().map(|s| s.raw.f)),
            };
            let da = Prf {
                precision: mean_of(segments.iter().map(|s| s.da_precision)),
                recall: mean_of(segments.iter().map(|s| s.da_recall)),
                f: system_score(&segments)?,
            };
            Ok(SystemScores {
                system: system.name.clone(),
                segments,
                bert,
                da,
            })
        })
        .collect()
}

/// Difficulty weights of every reference segment over all bound systems.
pub fn corpus_difficulty(corpus: &EvaluationCorpus) -> Result<Vec<DifficultyMap>> {
    let emb = embeddings(corpus)?;
    (0..corpus.len())
        .into_par_iter()
        .map(|n| {
            let reference = &emb.reference[n];
            let maxima = emb
                .systems
                .iter()
                .map(|s| build_similarity_matrix(reference, &s[n]).map(|m| m.row_maxima()))
                .collect::<Result<Vec<_>>>()?;
            difficulty_from_maxima(n, reference.tokens(), &maxima, None)
        })
        .collect()
}

/// Equal-width histogram of difficulty weights over `[0, 2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub counts: Vec<u64>,
    pub total: u64,
    pub mean: f64,
}

pub const HISTOGRAM_RANGE: f64 = 2.0;

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        HISTOGRAM_RANGE / self.counts.len() as f64
    }

    pub fn lower_edge(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_width()
    }
}

/// Bins weights (clipped to `[0, 2]`); the top edge falls in the last bin.
pub fn difficulty_histogram(maps: &[DifficultyMap], bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    let mut counts = vec![0u64; bins];
    let mut sum = 0.0;
    let mut total = 0u64;
    for w in maps.iter().flat_map(|m| m.weights.iter()) {
        let clipped = w.clamp(0.0, HISTOGRAM_RANGE);
        let bin = ((clipped / HISTOGRAM_RANGE * bins as f64).floor() as usize).min(bins - 1);
        counts[bin] += 1;
        sum += w;
        total += 1;
    }
    Ok(Histogram {
        counts,
        total,
        mean: if total == 0 { 0.0 } else { sum / total as f64 },
    })
}
