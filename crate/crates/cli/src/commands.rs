use std::collections::HashMap;

use damteval::bleu::{corpus_bleu, tokenize};
use damteval::corpus::read_human_scores;
use damteval::pipeline::{Prf, HISTOGRAM_RANGE};
use damteval::stats::{paired, SweepPoint};
use damteval::{
    corpus_difficulty, correlate, difficulty_histogram, rank_report, score_corpus, top_k_select,
    top_k_sweep, CorrelationResult, Direction, Error, HumanScores, Result, ScoreOptions,
    TauVariant, TopK,
};
use serde::Serialize;

use crate::cli::{CorrelateArgs, DifficultyArgs, RankReportArgs, ScoreArgs, SweepArgs, Tau};
use crate::inputs::{load_corpus, read_score_table, top_request};
use crate::report::{emit, fmt6, serialize_opt_round6, serialize_round6, tsv_cell, Tsv};

/// Top fraction used by `correlate` when neither `--top-frac` nor `--top-k` is given.
pub const DEFAULT_TOP_FRACTION: f64 = 0.3;

fn tau_variant(t: Tau) -> TauVariant {
    match t {
        Tau::A => TauVariant::A,
        Tau::B => TauVariant::B,
    }
}

fn tau_name(t: Tau) -> &'static str {
    match t {
        Tau::A => "a",
        Tau::B => "b",
    }
}

#[derive(Serialize)]
struct PrfJson {
    #[serde(serialize_with = "serialize_round6")]
    precision: f64,
    #[serde(serialize_with = "serialize_round6")]
    recall: f64,
    #[serde(serialize_with = "serialize_round6")]
    f: f64,
}

impl From<Prf> for PrfJson {
    fn from(p: Prf) -> Self {
        Self {
            precision: p.precision,
            recall: p.recall,
            f: p.f,
        }
    }
}

#[derive(Serialize)]
struct ScoreRow {
    system: String,
    bertscore: PrfJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    da_bertscore: Option<PrfJson>,
    #[serde(
        skip_serializing_if = "Option::is_none",
        serialize_with = "serialize_opt_round6"
    )]
    bleu: Option<f64>,
}

#[derive(Serialize)]
struct ScoreReport {
    segments: usize,
    difficulty: bool,
    exclude_self: bool,
    systems: Vec<ScoreRow>,
}

pub fn score(args: &ScoreArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let opts = ScoreOptions {
        difficulty: !args.no_difficulty,
        exclude_self: args.exclude_self,
    };
    let scored = score_corpus(&corpus, opts)?;
    let bleu = if args.bleu {
        let refs: Vec<Vec<&str>> = corpus.references.iter().map(|l| tokenize(l)).collect();
        let values = corpus
            .systems
            .iter()
            .map(|s| {
                let hyps: Vec<Vec<&str>> = s.segments.iter().map(|l| tokenize(l)).collect();
                corpus_bleu(&refs, &hyps)
            })
            .collect::<Result<Vec<_>>>()?;
        Some(values)
    } else {
        None
    };

    let report = ScoreReport {
        segments: corpus.len(),
        difficulty: opts.difficulty,
        exclude_self: opts.exclude_self,
        systems: scored
            .iter()
            .enumerate()
            .map(|(i, s)| ScoreRow {
                system: s.system.clone(),
                bertscore: s.bert.into(),
                da_bertscore: opts.difficulty.then(|| s.da.into()),
                bleu: bleu.as_ref().map(|b| b[i]),
            })
            .collect(),
    };

    emit(
        &args.output,
        || {
            let mut header = vec!["system", "bertscore_p", "bertscore_r", "bertscore_f"];
            if opts.difficulty {
                header.extend(["da_bertscore_p", "da_bertscore_r", "da_bertscore_f"]);
            }
            if bleu.is_some() {
                header.push("bleu");
            }
            let mut t = Tsv::new(header);
            for (i, s) in scored.iter().enumerate() {
                let mut row = vec![
                    tsv_cell(&s.system),
                    fmt6(s.bert.precision),
                    fmt6(s.bert.recall),
                    fmt6(s.bert.f),
                ];
                if opts.difficulty {
                    row.extend([fmt6(s.da.precision), fmt6(s.da.recall), fmt6(s.da.f)]);
                }
                if let Some(b) = &bleu {
                    row.push(fmt6(b[i]));
                }
                t.push(row);
            }
            t
        },
        &report,
    )
}

#[derive(Serialize)]
struct StatJson {
    n: usize,
    #[serde(serialize_with = "serialize_opt_round6")]
    abs_r: Option<f64>,
    #[serde(serialize_with = "serialize_opt_round6")]
    abs_tau: Option<f64>,
    #[serde(serialize_with = "serialize_opt_round6")]
    abs_rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    undefined: Option<String>,
}

impl StatJson {
    fn from_result(n: usize, r: Result<CorrelationResult>) -> Self {
        match r {
            Ok(c) => {
                let a = c.absolute();
                Self {
                    n,
                    abs_r: Some(a.pearson_r),
                    abs_tau: Some(a.kendall_tau),
                    abs_rho: Some(a.spearman_rho),
                    undefined: None,
                }
            }
            Err(e) => Self {
                n,
                abs_r: None,
                abs_tau: None,
                abs_rho: None,
                undefined: Some(e.to_string()),
            },
        }
    }

    fn cells(&self) -> [String; 3] {
        let f = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), fmt6);
        [f(self.abs_r), f(self.abs_tau), f(self.abs_rho)]
    }
}

#[derive(Serialize)]
struct MetricCorrelation {
    metric: String,
    all: StatJson,
    top: StatJson,
}

#[derive(Serialize)]
struct CorrelateReport {
    tau: &'static str,
    top_k: usize,
    top_systems: Vec<String>,
    metrics: Vec<MetricCorrelation>,
}

fn subset_values(scores: &HumanScores, names: &[String]) -> Vec<f64> {
    names.iter().map(|n| scores[n]).collect()
}

pub fn correlate_cmd(args: &CorrelateArgs) -> Result<()> {
    let table = read_score_table(&args.meta.scores)?;
    let human = read_human_scores(&args.meta.human)?;
    let variant = tau_variant(args.tau);
    let top = top_request(&args.top).unwrap_or(TopK::Fraction(DEFAULT_TOP_FRACTION));
    for scores in &table.scores {
        paired(scores, &human)?;
    }
    let top_systems = top_k_select(&human, top)?;
    let human_top = subset_values(&human, &top_systems);

    let metrics: Vec<MetricCorrelation> = table
        .metrics
        .iter()
        .zip(&table.scores)
        .map(|(metric, scores)| {
            let (_, x, y) = paired(scores, &human)?;
            let x_top = subset_values(scores, &top_systems);
            Ok(MetricCorrelation {
                metric: metric.clone(),
                all: StatJson::from_result(x.len(), correlate(&x, &y, variant)),
                top: StatJson::from_result(
                    top_systems.len(),
                    correlate(&x_top, &human_top, variant),
                ),
            })
        })
        .collect::<Result<_>>()?;

    let report = CorrelateReport {
        tau: tau_name(args.tau),
        top_k: top_systems.len(),
        top_systems,
        metrics,
    };
    emit(
        &args.output,
        || {
            let mut t = Tsv::new(["metric", "subset", "n", "abs_r", "abs_tau", "abs_rho"]);
            for m in &report.metrics {
                for (subset, stat) in [("all", &m.all), ("top", &m.top)] {
                    let [r, tau, rho] = stat.cells();
                    t.push(vec![
                        tsv_cell(&m.metric),
                        subset.into(),
                        stat.n.to_string(),
                        r,
                        tau,
                        rho,
                    ]);
                }
            }
            t
        },
        &report,
    )
}

#[derive(Serialize)]
struct SweepRow {
    metric: String,
    k: usize,
    #[serde(serialize_with = "serialize_opt_round6")]
    tau: Option<f64>,
    #[serde(serialize_with = "serialize_opt_round6")]
    rho: Option<f64>,
    #[serde(serialize_with = "serialize_opt_round6")]
    r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    undefined: Option<String>,
}

impl SweepRow {
    fn new(metric: &str, p: SweepPoint) -> Self {
        match p.correlation {
            Ok(c) => Self {
                metric: metric.into(),
                k: p.k,
                tau: Some(c.kendall_tau),
                rho: Some(c.spearman_rho),
                r: Some(c.pearson_r),
                undefined: None,
            },
            Err(e) => Self {
                metric: metric.into(),
                k: p.k,
                tau: None,
                rho: None,
                r: None,
                undefined: Some(e),
            },
        }
    }
}

#[derive(Serialize)]
struct SweepReport {
    tau: &'static str,
    k_min: usize,
    k_max: usize,
    series: Vec<SweepRow>,
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    let table = read_score_table(&args.meta.scores)?;
    let human = read_human_scores(&args.meta.human)?;
    let k_max = args.k_max.unwrap_or(human.len());
    if args.k_min > k_max {
        return Err(Error::Config(format!(
            "--k-min {} exceeds --k-max {k_max}",
            args.k_min
        )));
    }
    let mut series = Vec::new();
    for (metric, scores) in table.metrics.iter().zip(&table.scores) {
        for p in top_k_sweep(scores, &human, args.k_min..=k_max, tau_variant(args.tau))? {
            series.push(SweepRow::new(metric, p));
        }
    }
    let report = SweepReport {
        tau: tau_name(args.tau),
        k_min: args.k_min,
        k_max,
        series,
    };
    emit(
        &args.output,
        || {
            let mut t = Tsv::new(["metric", "k", "tau", "rho", "r"]);
            let f = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), fmt6);
            for row in &report.series {
                t.push(vec![
                    tsv_cell(&row.metric),
                    row.k.to_string(),
                    f(row.tau),
                    f(row.rho),
                    f(row.r),
                ]);
            }
            t
        },
        &report,
    )
}

#[derive(Serialize)]
struct Bin {
    #[serde(serialize_with = "serialize_round6")]
    lower: f64,
    count: u64,
}

#[derive(Serialize)]
struct TokenWeight {
    segment: usize,
    index: usize,
    token: String,
    #[serde(serialize_with = "serialize_round6")]
    weight: f64,
}

#[derive(Serialize)]
struct DifficultyReport {
    systems: Vec<String>,
    tokens: u64,
    #[serde(serialize_with = "serialize_round6")]
    mean_weight: f64,
    #[serde(serialize_with = "serialize_round6")]
    bin_width: f64,
    #[serde(serialize_with = "serialize_round6")]
    range_max: f64,
    histogram: Vec<Bin>,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_token: Option<Vec<TokenWeight>>,
}

pub fn difficulty(args: &DifficultyArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let maps = corpus_difficulty(&corpus)?;
    let hist = difficulty_histogram(&maps, args.histogram_bins)?;
    let per_token: Vec<TokenWeight> = maps
        .iter()
        .flat_map(|m| {
            m.ref_tokens
                .iter()
                .zip(&m.weights)
                .enumerate()
                .map(|(i, (tok, w))| TokenWeight {
                    segment: m.segment_index,
                    index: i,
                    token: tok.clone(),
                    weight: *w,
                })
        })
        .collect();
    let report = DifficultyReport {
        systems: corpus
            .system_names()
            .into_iter()
            .map(String::from)
            .collect(),
        tokens: hist.total,
        mean_weight: hist.mean,
        bin_width: hist.bin_width(),
        range_max: HISTOGRAM_RANGE,
        histogram: hist
            .counts
            .iter()
            .enumerate()
            .map(|(i, &count)| Bin {
                lower: hist.lower_edge(i),
                count,
            })
            .collect(),
        per_token: args.per_token.then_some(per_token),
    };
    emit(
        &args.output,
        || {
            if let Some(tokens) = &report.per_token {
                let mut t = Tsv::new(["segment", "token_index", "token", "weight"]);
                for w in tokens {
                    t.push(vec![
                        w.segment.to_string(),
                        w.index.to_string(),
                        tsv_cell(&w.token),
                        fmt6(w.weight),
                    ]);
                }
                t
            } else {
                let mut t = Tsv::new(["bin_lower", "count"]);
                for b in &report.histogram {
                    t.push(vec![fmt6(b.lower), b.count.to_string()]);
                }
                t
            }
        },
        &report,
    )
}

#[derive(Serialize)]
struct RankRow {
    system: String,
    #[serde(serialize_with = "serialize_round6")]
    score: f64,
    #[serde(serialize_with = "serialize_round6")]
    human: f64,
    metric_rank: usize,
    human_rank: usize,
    delta: i64,
}

#[derive(Serialize)]
struct TieJson {
    side: &'static str,
    #[serde(serialize_with = "serialize_round6")]
    score: f64,
    systems: Vec<String>,
}

#[derive(Serialize)]
struct MetricRanks {
    metric: String,
    direction: &'static str,
    systems: Vec<RankRow>,
    sum_abs_delta: u64,
    ties: Vec<TieJson>,
}

#[derive(Serialize)]
struct RankReportJson {
    metrics: Vec<MetricRanks>,
}

fn parse_directions(specs: &[String], metrics: &[String]) -> Result<HashMap<String, Direction>> {
    let mut out = HashMap::new();
    for spec in specs {
        let Some((metric, dir)) = spec.split_once('=') else {
            return Err(Error::Config(format!(
                "--direction expects METRIC=higher|lower, got {spec:?}"
            )));
        };
        let dir = match dir {
            "higher" => Direction::HigherBetter,
            "lower" => Direction::LowerBetter,
            other => {
                return Err(Error::Config(format!(
                    "unknown direction {other:?} for {metric}"
                )))
            }
        };
        if !metrics.iter().any(|m| m == metric) {
            return Err(Error::Config(format!(
                "--direction names unknown metric {metric:?}"
            )));
        }
        out.insert(metric.to_owned(), dir);
    }
    Ok(out)
}

pub fn rank_report_cmd(args: &RankReportArgs) -> Result<()> {
    let table = read_score_table(&args.meta.scores)?;
    let human = read_human_scores(&args.meta.human)?;
    let directions = parse_directions(&args.directions, &table.metrics)?;
    let mut metrics = Vec::new();
    for (metric, scores) in table.metrics.iter().zip(&table.scores) {
        let direction = directions.get(metric).copied().unwrap_or_default();
        let report = rank_report(scores, &human, direction)?;
        for tie in &report.ties {
            eprintln!(
                "WARN tie: metric={metric} side={} score={} systems={} (ordered by name)",
                tie.side,
                fmt6(tie.score),
                tie.systems.join(",")
            );
        }
        metrics.push(MetricRanks {
            metric: metric.clone(),
            direction: match direction {
                Direction::HigherBetter => "higher",
                Direction::LowerBetter => "lower",
            },
            systems: report
                .entries
                .iter()
                .map(|e| RankRow {
                    system: e.system.clone(),
                    score: e.score,
                    human: e.human_score,
                    metric_rank: e.metric_rank,
                    human_rank: e.human_rank,
                    delta: e.delta,
                })
                .collect(),
            sum_abs_delta: report.sum_abs_delta,
            ties: report
                .ties
                .into_iter()
                .map(|t| TieJson {
                    side: t.side,
                    score: t.score,
                    systems: t.systems,
                })
                .collect(),
        });
    }
    let report = RankReportJson { metrics };
    emit(
        &args.output,
        || {
            let mut t = Tsv::new([
                "metric",
                "system",
                "score",
                "human",
                "metric_rank",
                "human_rank",
                "delta",
            ]);
            for m in &report.metrics {
                for s in &m.systems {
                    t.push(vec![
                        tsv_cell(&m.metric),
                        tsv_cell(&s.system),
                        fmt6(s.score),
                        fmt6(s.human),
                        s.metric_rank.to_string(),
                        s.human_rank.to_string(),
                        format!("{:+}", s.delta),
                    ]);
                }
                t.push(vec![
                    tsv_cell(&m.metric),
                    "sum(|delta|)".into(),
                    "-".into(),
                    "-".into(),
                    "-".into(),
                    "-".into(),
                    m.sum_abs_delta.to_string(),
                ]);
            }
            t
        },
        &report,
    )
}
