//! Synthetic corpora for the benchmarks.

use damteval::corpus::{CorpusEmbeddings, SystemOutput};
use damteval::{EvaluationCorpus, SegmentEmbedding};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

/// Random segment of `len` tokens drawn from a small vocabulary.
pub fn segment(rng: &mut StdRng, len: usize, dim: usize) -> SegmentEmbedding {
    let tokens: Vec<String> = (0..len)
        .map(|_| format!("w{}", rng.random_range(0..50)))
        .collect();
    let rows = (0..len)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    SegmentEmbedding::from_rows(tokens, rows, dim).unwrap()
}

/// Corpus with `systems` outputs over `segments` segments of 15 to 35 tokens.
pub fn corpus(seed: u64, systems: usize, segments: usize, dim: usize) -> EvaluationCorpus {
    let mut rng = StdRng::seed_from_u64(seed);
    let draw = |rng: &mut StdRng| {
        let len = rng.random_range(15..36);
        segment(rng, len, dim)
    };
    let reference: Vec<SegmentEmbedding> = (0..segments).map(|_| draw(&mut rng)).collect();
    let outputs: Vec<Vec<SegmentEmbedding>> = (0..systems)
        .map(|_| (0..segments).map(|_| draw(&mut rng)).collect())
        .collect();
    let text = |segs: &[SegmentEmbedding]| {
        segs.iter()
            .map(|s| s.tokens().join(" "))
            .collect::<Vec<_>>()
    };
    let named = outputs
        .iter()
        .enumerate()
        .map(|(k, s)| SystemOutput {
            name: format!("sys{k:02}"),
            segments: text(s),
        })
        .collect();
    let mut corpus = EvaluationCorpus::new(text(&reference), named).unwrap();
    corpus.embeddings = Some(CorpusEmbeddings {
        dim,
        reference,
        systems: outputs,
    });
    corpus
}
