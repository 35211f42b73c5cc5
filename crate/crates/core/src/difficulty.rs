//! Cross-system difficulty weights and difficulty-aware scores.
//!
//! A reference token's difficulty is one minus the average, over all K
//! systems, of that token's best similarity within each system's hypothesis.
//! Tokens most systems reproduce get weights near 0; tokens most systems miss
//! get weights near 1 (up to 2 when similarities go negative).
//!
//! The weights multiply the greedy-matched similarities directly. There is no
//! renormalization by the weight sum, so difficulty-aware scores sit well
//! below their unweighted counterparts.

use crate::error::{Error, Result};
use crate::similarity::{
    build_similarity_matrix, greedy_match, harmonic_mean, MatchScores, SegmentEmbedding,
    SimilarityMatrix, SIMILARITY_SLACK,
};

/// Per-token difficulty weights of one reference segment.
#[derive(Debug, Clone, PartialEq)]
pub struct DifficultyMap {
    pub segment_index: usize,
    pub weights: Vec<f64>,
    pub ref_tokens: Vec<String>,
    pub k_systems: usize,
}

impl DifficultyMap {
    pub fn new(
        segment_index: usize,
        ref_tokens: Vec<String>,
        weights: Vec<f64>,
        k_systems: usize,
    ) -> Result<Self> {
        if k_systems == 0 {
            return Err(Error::EmptySystemSet);
        }
        if weights.len() != ref_tokens.len() {
            return Err(Error::DimensionMismatch {
                context: format!("difficulty weights of segment {segment_index}"),
                expected: ref_tokens.len(),
                found: weights.len(),
            });
        }
        if let Some(w) = weights
            .iter()
            .find(|w| !(-SIMILARITY_SLACK..=2.0 + SIMILARITY_SLACK).contains(*w))
        {
            return Err(Error::Config(format!(
                "difficulty weight {w} outside [0, 2] in segment {segment_index}"
            )));
        }
        Ok(Self {
            segment_index,
            weights,
            ref_tokens,
            k_systems,
        })
    }

    /// Every weight set to 1: the difficulty-aware scores reduce to plain BERTScore.
    pub fn ones(segment_index: usize, ref_tokens: Vec<String>) -> Self {
        Self {
            segment_index,
            weights: vec![1.0; ref_tokens.len()],
            ref_tokens,
            k_systems: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Difficulty weights of a reference from its `K` system hypotheses.
///
/// `hypotheses[k]` is system k's output for this same segment. An empty
/// hypothesis contributes a best similarity of 0 for every token.
pub fn compute_difficulty(
    segment_index: usize,
    reference: &SegmentEmbedding,
    hypotheses: &[&SegmentEmbedding],
) -> Result<DifficultyMap> {
    let maxima = hypotheses
        .iter()
        .map(|h| build_similarity_matrix(reference, h).map(|m| m.row_maxima()))
        .collect::<Result<Vec<_>>>()?;
    difficulty_from_maxima(segment_index, reference.tokens(), &maxima, None)
}

/// Difficulty weights from each system's per-reference-token best similarity.
///
/// `row_maxima[k][i]` is system k's best similarity for reference token i.
/// With `exclude = Some(k)` system k is left out of the average
/// (leave-one-out variant).
///
/// The K contributions of a token are summed in ascending value order, so the
/// result does not depend on how the systems are ordered.
pub fn difficulty_from_maxima(
    segment_index: usize,
    ref_tokens: &[String],
    row_maxima: &[Vec<f64>],
    exclude: Option<usize>,
) -> Result<DifficultyMap> {
    let included: Vec<&Vec<f64>> = row_maxima
        .iter()
        .enumerate()
        .filter(|(k, _)| Some(*k) != exclude)
        .map(|(_, m)| m)
        .collect();
    if included.is_empty() {
        return Err(Error::EmptySystemSet);
    }
    for m in &included {
        if m.len() != ref_tokens.len() {
            return Err(Error::DimensionMismatch {
                context: format!("per-system maxima of segment {segment_index}"),
                expected: ref_tokens.len(),
                found: m.len(),
            });
        }
    }
    let k = included.len();
    let mut column = Vec::with_capacity(k);
    let weights = (0..ref_tokens.len())
        .map(|i| {
            column.clear();
            column.extend(included.iter().map(|m| m[i]));
            column.sort_by(f64::total_cmp);
            let sum = column.iter().fold(0.0, |acc, v| acc + v);
            1.0 - sum / k as f64
        })
        .collect();
    DifficultyMap::new(segment_index, ref_tokens.to_vec(), weights, k)
}

/// Weight of hypothesis token `hyp_index`.
///
/// A token whose surface string does not occur in the reference keeps weight 1.
/// Otherwise it takes the weight of the matching reference occurrence; with
/// repeated occurrences, the one most similar to this hypothesis token wins
/// and ties go to the lowest reference index.
pub fn hypothesis_weight(
    sim: &SimilarityMatrix<'_>,
    hyp_index: usize,
    dmap: &DifficultyMap,
) -> f64 {
    let token = &sim.hyp_tokens()[hyp_index];
    let mut best: Option<(usize, f64)> = None;
    for (i, t) in sim.ref_tokens().iter().enumerate() {
        if t != token {
            continue;
        }
        let s = sim.get(i, hyp_index);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map_or(1.0, |(i, _)| dmap.weights[i])
}

/// Difficulty-aware recall, precision and F alongside the raw scores.
#[derive(Debug, Clone, PartialEq)]
pub struct DAScores {
    pub da_recall: f64,
    pub da_precision: f64,
    pub da_f: f64,
    pub raw: MatchScores,
}

/// Weights every greedy match by its difficulty.
///
/// # Panics
///
/// If `dmap` does not have one weight per row of `sim`.
pub fn da_scores(sim: &SimilarityMatrix<'_>, dmap: &DifficultyMap) -> DAScores {
    assert_eq!(
        dmap.len(),
        sim.rows(),
        "difficulty map of segment {} does not match the similarity matrix",
        dmap.segment_index
    );
    let raw = greedy_match(sim);
    let da_recall = weighted_mean(dmap.weights.iter().copied(), &raw.per_ref_max);
    let da_precision = weighted_mean(
        (0..sim.cols()).map(|j| hypothesis_weight(sim, j, dmap)),
        &raw.per_hyp_max,
    );
    DAScores {
        da_recall,
        da_precision,
        da_f: harmonic_mean(da_precision, da_recall),
        raw,
    }
}

fn weighted_mean(weights: impl Iterator<Item = f64>, values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    weights.zip(values).fold(0.0, |acc, (w, v)| acc + w * v) / values.len() as f64
}

/// System-level score: mean segment DA-F, summed in segment order.
pub fn system_score(per_segment: &[DAScores]) -> Result<f64> {
    if per_segment.is_empty() {
        return Err(Error::EmptyCorpus("no segments to aggregate".into()));
    }
    Ok(per_segment.iter().fold(0.0, |acc, s| acc + s.da_f) / per_segment.len() as f64)
}
