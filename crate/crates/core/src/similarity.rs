//! Token embeddings, cosine similarity matrices and greedy max matching.
//!
//! These are the unweighted BERTScore quantities. Embeddings are consumed as
//! given: no re-normalization and no layer selection happen here, the
//! extractor owns both. Cosine similarity is always computed in full (dot
//! product divided by both norms) even if the inputs happen to be unit length.

use crate::error::{Error, Result};

/// Slack allowed when checking that a cosine lies in `[-1, 1]`.
pub const SIMILARITY_SLACK: f64 = 1e-9;

/// Contextual embeddings of one segment: one row per subword token.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentEmbedding {
    tokens: Vec<String>,
    dim: usize,
    values: Vec<f64>,
    /// Squared row norms.
    sq_norms: Vec<f64>,
}

impl SegmentEmbedding {
    /// Builds an embedding from a row-major `tokens.len() × dim` buffer.
    ///
    /// Rejects zero rows and non-finite values.
    pub fn new(tokens: Vec<String>, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DegenerateEmbedding(
                "embedding dimension must be at least 1".into(),
            ));
        }
        if values.len() != tokens.len() * dim {
            return Err(Error::DimensionMismatch {
                context: "embedding buffer length vs tokens × dim".into(),
                expected: tokens.len() * dim,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::DegenerateEmbedding(format!(
                "non-finite value in row {} (token {:?})",
                pos / dim,
                tokens[pos / dim]
            )));
        }
        let mut sq_norms = Vec::with_capacity(tokens.len());
        for (i, row) in values.chunks_exact(dim).enumerate() {
            let n = dot(row, row);
            if n == 0.0 {
                return Err(Error::DegenerateEmbedding(format!(
                    "zero vector in row {i} (token {:?})",
                    tokens[i]
                )));
            }
            sq_norms.push(n);
        }
        Ok(Self {
            tokens,
            dim,
            values,
            sq_norms,
        })
    }

    /// Convenience constructor from per-token rows.
    pub fn from_rows<S: Into<String>>(
        tokens: Vec<S>,
        rows: Vec<Vec<f64>>,
        dim: usize,
    ) -> Result<Self> {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if rows.len() != tokens.len() {
            return Err(Error::DimensionMismatch {
                context: "row count vs token count".into(),
                expected: tokens.len(),
                found: rows.len(),
            });
        }
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "row length".into(),
                    expected: dim,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(tokens, dim, values)
    }

    /// An empty segment (L = 0) of the given dimension.
    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(Vec::new(), dim, Vec::new())
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

// `sqrt(‖a‖²‖b‖²)` rather than `‖a‖·‖b‖`: the former makes the similarity of
// a vector with itself exactly 1.
#[inline]
fn cosine_with_sq_norms(a: &[f64], b: &[f64], sq_norm_a: f64, sq_norm_b: f64) -> f64 {
    let value = dot(a, b) / (sq_norm_a * sq_norm_b).sqrt();
    assert!(
        value.abs() <= 1.0 + SIMILARITY_SLACK,
        "cosine similarity {value} outside [-1, 1]"
    );
    value
}

/// Cosine similarity `a·b / (‖a‖‖b‖)`.
///
/// Symmetric bit-for-bit: the dot product is accumulated in index order and
/// both products commute exactly. `cosine_similarity(a, a)` is exactly 1.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "cosine similarity operands".into(),
            expected: a.len(),
            found: b.len(),
        });
    }
    let (sq_a, sq_b) = (dot(a, a), dot(b, b));
    if sq_a == 0.0 || sq_b == 0.0 {
        return Err(Error::DegenerateEmbedding(
            "cosine similarity of a zero-norm vector".into(),
        ));
    }
    Ok(cosine_with_sq_norms(a, b, sq_a, sq_b))
}

/// `|t| × |h|` matrix of token similarities between a reference and a hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<'a> {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    ref_tokens: &'a [String],
    hyp_tokens: &'a [String],
}

impl<'a> SimilarityMatrix<'a> {
    /// Wraps precomputed similarities (row-major, reference × hypothesis).
    pub fn from_values(
        ref_tokens: &'a [String],
        hyp_tokens: &'a [String],
        values: Vec<f64>,
    ) -> Result<Self> {
        let (rows, cols) = (ref_tokens.len(), hyp_tokens.len());
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "similarity matrix buffer".into(),
                expected: rows * cols,
                found: values.len(),
            });
        }
        if let Some(v) = values
            .iter()
            .find(|v| v.is_nan() || v.abs() > 1.0 + SIMILARITY_SLACK)
        {
            return Err(Error::Config(format!("similarity {v} outside [-1, 1]")));
        }
        Ok(Self {
            rows,
            cols,
            values,
            ref_tokens,
            hyp_tokens,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn ref_tokens(&self) -> &'a [String] {
        self.ref_tokens
    }

    pub fn hyp_tokens(&self) -> &'a [String] {
        self.hyp_tokens
    }

    /// Best similarity of each reference token; 0 when the hypothesis is empty.
    pub fn row_maxima(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| max_or_zero(self.row(i).iter().copied()))
            .collect()
    }

    /// Best similarity of each hypothesis token; 0 when the reference is empty.
    pub fn col_maxima(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| max_or_zero((0..self.rows).map(|i| self.get(i, j))))
            .collect()
    }
}

/// Computes every pairwise cosine between reference and hypothesis rows.
pub fn build_similarity_matrix<'a>(
    reference: &'a SegmentEmbedding,
    hypothesis: &'a SegmentEmbedding,
) -> Result<SimilarityMatrix<'a>> {
    if reference.dim != hypothesis.dim {
        return Err(Error::DimensionMismatch {
            context: "reference vs hypothesis embedding".into(),
            expected: reference.dim,
            found: hypothesis.dim,
        });
    }
    let mut values = Vec::with_capacity(reference.len() * hypothesis.len());
    for (t, sq_t) in reference.rows().zip(&reference.sq_norms) {
        for (h, sq_h) in hypothesis.rows().zip(&hypothesis.sq_norms) {
            values.push(cosine_with_sq_norms(t, h, *sq_t, *sq_h));
        }
    }
    Ok(SimilarityMatrix {
        rows: reference.len(),
        cols: hypothesis.len(),
        values,
        ref_tokens: &reference.tokens,
        hyp_tokens: &hypothesis.tokens,
    })
}

/// Unweighted BERTScore recall, precision and F for one segment pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchScores {
    pub recall: f64,
    pub precision: f64,
    pub f: f64,
    pub per_ref_max: Vec<f64>,
    pub per_hyp_max: Vec<f64>,
}

/// Greedy matching: each token is paired with its most similar counterpart.
pub fn greedy_match(sim: &SimilarityMatrix<'_>) -> MatchScores {
    let per_ref_max = sim.row_maxima();
    let per_hyp_max = sim.col_maxima();
    let recall = mean_or_zero(&per_ref_max);
    let precision = mean_or_zero(&per_hyp_max);
    MatchScores {
        recall,
        precision,
        f: harmonic_mean(precision, recall),
        per_ref_max,
        per_hyp_max,
    }
}

pub(crate) fn max_or_zero(values: impl Iterator<Item = f64>) -> f64 {
    values
        .fold(None, |best: Option<f64>, v| match best {
            Some(b) if b >= v => Some(b),
            _ => Some(v),
        })
        .unwrap_or(0.0)
}

/// Left-to-right mean; 0 for an empty slice.
pub(crate) fn mean_or_zero(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().fold(0.0, |acc, v| acc + v) / values.len() as f64
}

/// `2PR / (P + R)`, with `P + R = 0` mapped to 0.
pub fn harmonic_mean(precision: f64, recall: f64) -> f64 {
    let denom = precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn cosine_examples() {
        let e1 = [1.0, 0.0, 0.0, 0.0];
        assert_eq!(cosine_similarity(&e1, &e1).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&e1, &[0.0, 1.0, 0.0, 0.0]).unwrap(), 0.0);
        let v = cosine_similarity(&e1, &[0.6, 0.8, 0.0, 0.0]).unwrap();
        assert!((v - 0.6).abs() < 1e-12, "{v}");
    }

    #[test]
    fn cosine_rejects_zero_and_mismatch() {
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::DegenerateEmbedding(_))
        ));
        assert!(matches!(
            cosine_similarity(&[1.0], &[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_row_rejected_on_construction() {
        let err =
            SegmentEmbedding::from_rows(vec!["a", "b"], vec![vec![1.0, 0.0], vec![0.0, 0.0]], 2)
                .unwrap_err();
        assert!(matches!(err, Error::DegenerateEmbedding(_)));
    }

    #[test]
    fn matrix_examples() {
        let r = SegmentEmbedding::from_rows(vec!["x"], vec![vec![1.0, 0.0]], 2).unwrap();
        let m = build_similarity_matrix(&r, &r).unwrap();
        assert_eq!((m.rows(), m.cols(), m.get(0, 0)), (1, 1, 1.0));

        let r =
            SegmentEmbedding::from_rows(vec!["a", "b"], vec![vec![1.0, 0.0], vec![0.0, 1.0]], 2)
                .unwrap();
        let swapped =
            SegmentEmbedding::from_rows(vec!["b", "a"], vec![vec![0.0, 1.0], vec![1.0, 0.0]], 2)
                .unwrap();
        let m = build_similarity_matrix(&r, &swapped).unwrap();
        assert_eq!(m.values, vec![0.0, 1.0, 1.0, 0.0]);

        let h = SegmentEmbedding::from_rows(vec!["c"], vec![vec![0.6, 0.8]], 2).unwrap();
        let m = build_similarity_matrix(&r, &h).unwrap();
        assert!((m.get(0, 0) - 0.6).abs() < 1e-12);
        assert!((m.get(1, 0) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn matrix_dimension_mismatch() {
        let a = SegmentEmbedding::from_rows(vec!["a"], vec![vec![1.0, 0.0]], 2).unwrap();
        let b = SegmentEmbedding::from_rows(vec!["a"], vec![vec![1.0, 0.0, 0.0]], 3).unwrap();
        assert!(matches!(
            build_similarity_matrix(&a, &b),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 3,
                ..
            })
        ));
    }

    #[test]
    fn greedy_examples() {
        let t = toks(&["a", "b"]);
        let m = SimilarityMatrix::from_values(&t, &t, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let s = greedy_match(&m);
        assert_eq!((s.recall, s.precision, s.f), (1.0, 1.0, 1.0));

        let m = SimilarityMatrix::from_values(&t, &t, vec![0.8, 0.2, 0.1, 0.6]).unwrap();
        let s = greedy_match(&m);
        assert!((s.recall - 0.7).abs() < 1e-12);
        assert!((s.precision - 0.7).abs() < 1e-12);
        assert!((s.f - 0.7).abs() < 1e-12);

        let empty: Vec<String> = Vec::new();
        let m = SimilarityMatrix::from_values(&t, &empty, vec![]).unwrap();
        let s = greedy_match(&m);
        assert_eq!((s.recall, s.precision, s.f), (0.0, 0.0, 0.0));
        assert_eq!(s.per_ref_max, vec![0.0, 0.0]);
        assert!(s.per_hyp_max.is_empty());
    }

    #[test]
    fn harmonic_mean_zero_convention() {
        assert_eq!(harmonic_mean(0.0, 0.0), 0.0);
        assert_eq!(harmonic_mean(0.5, -0.5), 0.0);
    }

    fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, dim)
            .prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
    }

    fn matrix() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
        (0usize..=5, 0usize..=5).prop_flat_map(|(r, c)| {
            prop::collection::vec(-1.0f64..=1.0, r * c).prop_map(move |v| (r, c, v))
        })
    }

    proptest! {
        #[test]
        fn self_similarity_is_one(a in vector(6), c in 0.01f64..100.0) {
            prop_assert_eq!(cosine_similarity(&a, &a).unwrap(), 1.0);
            let scaled: Vec<f64> = a.iter().map(|x| x * c).collect();
            prop_assert!((cosine_similarity(&a, &scaled).unwrap() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn cosine_symmetric_and_bounded(a in vector(5), b in vector(5)) {
            let ab = cosine_similarity(&a, &b).unwrap();
            prop_assert_eq!(ab, cosine_similarity(&b, &a).unwrap());
            prop_assert!(ab.abs() <= 1.0 + SIMILARITY_SLACK);
        }

        #[test]
        fn greedy_matches_brute_force((r, c, values) in matrix()) {
            let rt: Vec<String> = (0..r).map(|i| format!("r{i}")).collect();
            let ht: Vec<String> = (0..c).map(|j| format!("h{j}")).collect();
            let m = SimilarityMatrix::from_values(&rt, &ht, values.clone()).unwrap();
            let s = greedy_match(&m);
            // brute force row/column maxima
            let mut row_max = vec![f64::NEG_INFINITY; r];
            let mut col_max = vec![f64::NEG_INFINITY; c];
            for i in 0..r {
                for j in 0..c {
                    row_max[i] = row_max[i].max(values[i * c + j]);
                    col_max[j] = col_max[j].max(values[i * c + j]);
                }
            }
            if c == 0 { row_max.iter_mut().for_each(|v| *v = 0.0); }
            if r == 0 { col_max.iter_mut().for_each(|v| *v = 0.0); }
            prop_assert_eq!(&s.per_ref_max, &row_max);
            prop_assert_eq!(&s.per_hyp_max, &col_max);
            let recall = if r == 0 { 0.0 } else { row_max.iter().sum::<f64>() / r as f64 };
            let precision = if c == 0 { 0.0 } else { col_max.iter().sum::<f64>() / c as f64 };
            prop_assert!((s.recall - recall).abs() < 1e-12);
            prop_assert!((s.precision - precision).abs() < 1e-12);
            if s.precision > 0.0 && s.recall > 0.0 {
                prop_assert!(s.f >= s.precision.min(s.recall) - 1e-12);
                prop_assert!(s.f <= s.precision.max(s.recall) + 1e-12);
            }
        }

        #[test]
        fn appending_hyp_token_never_lowers_ref_max(
            reference in prop::collection::vec(vector(4), 1..5),
            hyp in prop::collection::vec(vector(4), 1..5),
            extra in vector(4),
        ) {
            let r = SegmentEmbedding::from_rows((0..reference.len()).map(|i| format!("t{i}")).collect(), reference, 4).unwrap();
            let h = SegmentEmbedding::from_rows((0..hyp.len()).map(|i| format!("h{i}")).collect(), hyp.clone(), 4).unwrap();
            let mut longer = hyp;
            longer.push(extra);
            let h2 = SegmentEmbedding::from_rows((0..longer.len()).map(|i| format!("h{i}")).collect(), longer, 4).unwrap();
            let before = greedy_match(&build_similarity_matrix(&r, &h).unwrap());
            let after = greedy_match(&build_similarity_matrix(&r, &h2).unwrap());
            for (b, a) in before.per_ref_max.iter().zip(&after.per_ref_max) {
                prop_assert!(a >= b);
            }
        }

        #[test]
        fn hypothesis_permutation_invariance(
            reference in prop::collection::vec(vector(3), 1..5),
            hyp in prop::collection::vec(vector(3), 1..6),
            seed in any::<u64>(),
        ) {
            let r = SegmentEmbedding::from_rows((0..reference.len()).map(|i| format!("t{i}")).collect(), reference, 3).unwrap();
            let mut order: Vec<usize> = (0..hyp.len()).collect();
            // deterministic shuffle from the seed
            let mut s = seed;
            for i in (1..order.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                order.swap(i, (s >> 33) as usize % (i + 1));
            }
            let permuted: Vec<Vec<f64>> = order.iter().map(|&i| hyp[i].clone()).collect();
            let h = SegmentEmbedding::from_rows((0..hyp.len()).map(|i| format!("h{i}")).collect(), hyp, 3).unwrap();
            let hp = SegmentEmbedding::from_rows((0..permuted.len()).map(|i| format!("h{i}")).collect(), permuted, 3).unwrap();
            let a = greedy_match(&build_similarity_matrix(&r, &h).unwrap());
            let b = greedy_match(&build_similarity_matrix(&r, &hp).unwrap());
            prop_assert_eq!(a.recall, b.recall);
            prop_assert!((a.precision - b.precision).abs() < 1e-12);
            prop_assert!((a.f - b.f).abs() < 1e-12);
        }
    }
}
