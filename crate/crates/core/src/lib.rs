//! Difficulty-aware BERTScore and system-level metric meta-evaluation.
//!
//! Reference tokens that most MT systems fail to reproduce receive a larger
//! weight in the final score. Given precomputed contextual embeddings for a
//! reference set and K systems' outputs, this crate computes per-token
//! difficulty weights, difficulty-aware precision/recall/F, and the
//! statistics used to compare metrics against human judgments (Pearson,
//! Spearman, Kendall, top-K sweeps, rank-agreement tables). A corpus BLEU
//! baseline is included for comparison rows.

pub mod bleu;
pub mod corpus;
pub mod difficulty;
pub mod emb1;
pub mod error;
pub mod pipeline;
pub mod similarity;
pub mod stats;

pub use corpus::{bind_embeddings, load_text_corpus, EvaluationCorpus, HumanScores};
pub use difficulty::{
    compute_difficulty, da_scores, hypothesis_weight, system_score, DAScores, DifficultyMap,
};
pub use emb1::{read_emb1, write_emb1, EmbeddingFile, EmbeddingRecord};
pub use error::{Error, Result};
pub use pipeline::{
    corpus_difficulty, difficulty_histogram, score_corpus, ScoreOptions, SystemScores,
};
pub use similarity::{
    build_similarity_matrix, cosine_similarity, greedy_match, MatchScores, SegmentEmbedding,
    SimilarityMatrix,
};
pub use stats::{
    correlate, kendall, pearson, rank_report, spearman, top_k_select, top_k_sweep,
    CorrelationResult, Direction, RankReport, TauVariant, TopK,
};
