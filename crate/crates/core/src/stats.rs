//! System-level meta-evaluation: correlations with human scores, top-K
//! subsets and rank-agreement reports.
//!
//! Statistics are kept signed here; taking absolute values is a reporting
//! concern.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use crate::corpus::HumanScores;
use crate::error::{Error, Result};

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mean_x, b - mean_y);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "Pearson correlation of a constant vector".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Ranks starting at 1; tied values share their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman's ρ: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y)).map_err(|_| {
        Error::UndefinedCorrelation("Spearman correlation of an all-tied vector".into())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TauVariant {
    /// `(concordant − discordant) / (n(n−1)/2)`; tied pairs count for neither.
    #[default]
    A,
    /// Tie-corrected: denominator `sqrt((n0 − ties_x)(n0 − ties_y))`.
    B,
}

/// Kendall's τ.
pub fn kendall(x: &[f64], y: &[f64], variant: TauVariant) -> Result<f64> {
    check_lengths(x, y)?;
    let n = x.len();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut ties_x, mut ties_y) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let sx = x[i].partial_cmp(&x[j]).unwrap_or(Ordering::Equal);
            let sy = y[i].partial_cmp(&y[j]).unwrap_or(Ordering::Equal);
            match (sx, sy) {
                (Ordering::Equal, Ordering::Equal) => {
                    ties_x += 1;
                    ties_y += 1;
                }
                (Ordering::Equal, _) => ties_x += 1,
                (_, Ordering::Equal) => ties_y += 1,
                (a, b) if a == b => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as i64;
    let numerator = (concordant - discordant) as f64;
    let tau = match variant {
        TauVariant::A => numerator / pairs as f64,
        TauVariant::B => {
            let denom = (((pairs - ties_x) * (pairs - ties_y)) as f64).sqrt();
            if denom == 0.0 {
                return Err(Error::UndefinedCorrelation(
                    "Kendall tau-b with an all-tied vector".into(),
                ));
            }
            numerator / denom
        }
    };
    Ok(tau.clamp(-1.0, 1.0))
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "correlation inputs".into(),
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need at least 2 samples, got {}",
            x.len()
        )));
    }
    Ok(())
}

/// Signed Pearson, Spearman and Kendall statistics over `n` systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationResult {
    pub pearson_r: f64,
    pub spearman_rho: f64,
    pub kendall_tau: f64,
    pub n: usize,
}

impl CorrelationResult {
    /// The `|r|`, `|ρ|`, `|τ|` form used in comparison tables.
    pub fn absolute(&self) -> Self {
        Self {
            pearson_r: self.pearson_r.abs(),
            spearman_rho: self.spearman_rho.abs(),
            kendall_tau: self.kendall_tau.abs(),
            n: self.n,
        }
    }
}

pub fn correlate(x: &[f64], y: &[f64], variant: TauVariant) -> Result<CorrelationResult> {
    Ok(CorrelationResult {
        pearson_r: pearson(x, y)?,
        spearman_rho: spearman(x, y)?,
        kendall_tau: kendall(x, y, variant)?,
        n: x.len(),
    })
}

/// Metric scores and human scores aligned on the same system names.
///
/// Errors with the symmetric difference when the system sets differ.
pub fn paired(
    metric: &HumanScores,
    human: &HumanScores,
) -> Result<(Vec<String>, Vec<f64>, Vec<f64>)> {
    let a: BTreeSet<&String> = metric.keys().collect();
    let b: BTreeSet<&String> = human.keys().collect();
    if a != b {
        let only_metric: Vec<&str> = a.difference(&b).map(|s| s.as_str()).collect();
        let only_human: Vec<&str> = b.difference(&a).map(|s| s.as_str()).collect();
        return Err(Error::Config(format!(
            "system sets differ: only in metric scores [{}]; only in human scores [{}]",
            only_metric.join(", "),
            only_human.join(", ")
        )));
    }
    let names: Vec<String> = metric.keys().cloned().collect();
    let x = names.iter().map(|n| metric[n]).collect();
    let y = names.iter().map(|n| human[n]).collect();
    Ok((names, x, y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopK {
    /// `floor(K · fraction)`, raised to 2 if smaller.
    Fraction(f64),
    Count(usize),
}

/// Absorbs representation error in products like `0.29 × 100`.
const FLOOR_EPSILON: f64 = 1e-9;

/// Systems ordered best-first by human score (ties by name ascending).
pub fn rank_by_score(scores: &HumanScores) -> Vec<String> {
    let mut names: Vec<&String> = scores.keys().collect();
    names.sort_by(|a, b| scores[*b].total_cmp(&scores[*a]).then_with(|| a.cmp(b)));
    names.into_iter().cloned().collect()
}

/// Resolves a top-K request against `total` systems.
pub fn resolve_k(total: usize, top: TopK) -> Result<usize> {
    let k = match top {
        TopK::Fraction(f) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("top fraction {f} not in (0, 1]")));
            }
            ((total as f64 * f + FLOOR_EPSILON).floor() as usize).max(2)
        }
        TopK::Count(k) => k,
    };
    if k < 2 {
        return Err(Error::InsufficientSystems(format!(
            "top-k needs k >= 2, got {k}"
        )));
    }
    if k > total {
        return Err(Error::InsufficientSystems(format!(
            "requested top {k} of only {total} systems"
        )));
    }
    Ok(k)
}

/// The top systems by human score, best first.
pub fn top_k_select(human: &HumanScores, top: TopK) -> Result<Vec<String>> {
    let k = resolve_k(human.len(), top)?;
    let mut ranked = rank_by_score(human);
    ranked.truncate(k);
    Ok(ranked)
}

/// One step of a top-K sweep. `correlation` is `Err` for a gap where some
/// statistic is undefined on that subset.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub k: usize,
    pub correlation: std::result::Result<CorrelationResult, String>,
}

/// Correlations on the top-k systems by human score, for each k in the range.
pub fn top_k_sweep(
    metric: &HumanScores,
    human: &HumanScores,
    k_range: RangeInclusive<usize>,
    variant: TauVariant,
) -> Result<Vec<SweepPoint>> {
    paired(metric, human)?;
    let total = human.len();
    resolve_k(total, TopK::Count(*k_range.start()))?;
    resolve_k(total, TopK::Count(*k_range.end()))?;
    let ranked = rank_by_score(human);
    Ok(k_range
        .map(|k| {
            let subset = &ranked[..k];
            let x: Vec<f64> = subset.iter().map(|n| metric[n]).collect();
            let y: Vec<f64> = subset.iter().map(|n| human[n]).collect();
            SweepPoint {
                k,
                correlation: correlate(&x, &y, variant).map_err(|e| e.to_string()),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    HigherBetter,
    LowerBetter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub system: String,
    pub score: f64,
    pub human_score: f64,
    pub metric_rank: usize,
    pub human_rank: usize,
    /// `metric_rank − human_rank`; positive means the metric ranks it worse.
    pub delta: i64,
}

/// Systems that shared a score and were ordered by name.
#[derive(Debug, Clone, PartialEq)]
pub struct TieGroup {
    pub side: &'static str,
    pub score: f64,
    pub systems: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    /// Ordered by human rank.
    pub entries: Vec<RankEntry>,
    pub sum_abs_delta: u64,
    pub ties: Vec<TieGroup>,
}

fn ranks(
    scores: &HumanScores,
    direction: Direction,
    side: &'static str,
) -> (Vec<(String, usize)>, Vec<TieGroup>) {
    let mut names: Vec<&String> = scores.keys().collect();
    names.sort_by(|a, b| {
        let by_score = match direction {
            Direction::HigherBetter => scores[*b].total_cmp(&scores[*a]),
            Direction::LowerBetter => scores[*a].total_cmp(&scores[*b]),
        };
        by_score.then_with(|| a.cmp(b))
    });
    let mut ties = Vec::new();
    let mut i = 0;
    while i < names.len() {
        let mut j = i + 1;
        while j < names.len() && scores[names[j]] == scores[names[i]] {
            j += 1;
        }
        if j - i > 1 {
            ties.push(TieGroup {
                side,
                score: scores[names[i]],
                systems: names[i..j].iter().map(|s| s.to_string()).collect(),
            });
        }
        i = j;
    }
    let ranked = names
        .into_iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i + 1))
        .collect();
    (ranked, ties)
}

/// Compares metric-induced and human-induced system ranks (1 = best).
pub fn rank_report(
    metric: &HumanScores,
    human: &HumanScores,
    direction: Direction,
) -> Result<RankReport> {
    paired(metric, human)?;
    let (metric_ranks, mut ties) = ranks(metric, direction, "metric");
    let (human_ranks, human_ties) = ranks(human, Direction::HigherBetter, "human");
    ties.extend(human_ties);
    let metric_rank_of: std::collections::HashMap<&str, usize> =
        metric_ranks.iter().map(|(n, r)| (n.as_str(), *r)).collect();
    let entries: Vec<RankEntry> = human_ranks
        .iter()
        .map(|(name, human_rank)| {
            let metric_rank = metric_rank_of[name.as_str()];
            RankEntry {
                system: name.clone(),
                score: metric[name],
                human_score: human[name],
                metric_rank,
                human_rank: *human_rank,
                delta: metric_rank as i64 - *human_rank as i64,
            }
        })
        .collect();
    let sum_abs_delta = entries.iter().map(|e| e.delta.unsigned_abs()).sum();
    Ok(RankReport {
        entries,
        sum_abs_delta,
        ties,
    })
}
