use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use damteval::corpus::{load_text_corpus_named, read_human_scores, system_name};
use damteval::emb1::read_emb1;
use damteval::{bind_embeddings, top_k_select, Error, EvaluationCorpus, HumanScores, Result, TopK};

use crate::cli::{CorpusArgs, SubsetArgs, TopArgs};

pub fn top_request(top: &TopArgs) -> Option<TopK> {
    match (top.top_frac, top.top_k) {
        (Some(f), _) => Some(TopK::Fraction(f)),
        (_, Some(k)) => Some(TopK::Count(k)),
        _ => None,
    }
}

struct SystemFiles {
    name: String,
    hypothesis: PathBuf,
    embedding: PathBuf,
}

fn list_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.into(),
        source: e,
    })? {
        let path = entry
            .map_err(|e| Error::Io {
                path: dir.into(),
                source: e,
            })?
            .path();
        let hidden = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'));
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn read_manifest(path: &Path) -> Result<Vec<SystemFiles>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut systems = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [name, hyp, emb] = cols[..] else {
            return Err(Error::Parse {
                path: path.into(),
                line: i + 1,
                message: format!("expected system<TAB>hypothesis<TAB>embedding, got {line:?}"),
            });
        };
        systems.push(SystemFiles {
            name: name.to_owned(),
            hypothesis: base.join(hyp),
            embedding: base.join(emb),
        });
    }
    Ok(systems)
}

fn system_files(args: &CorpusArgs) -> Result<Vec<SystemFiles>> {
    if let Some(manifest) = &args.manifest {
        return read_manifest(manifest);
    }
    let (Some(hyps_dir), Some(emb_dir)) = (&args.hyps_dir, &args.emb_dir) else {
        return Err(Error::Config(
            "--hyps-dir and --emb-dir are required without --manifest".into(),
        ));
    };
    list_dir(hyps_dir)?
        .into_iter()
        .map(|hypothesis| {
            let name = system_name(&hypothesis)?;
            let embedding = emb_dir.join(format!("{name}.emb1"));
            Ok(SystemFiles {
                name,
                hypothesis,
                embedding,
            })
        })
        .collect()
}

/// Loads text, embeddings and (optionally) narrows to the top systems.
pub fn load_corpus(args: &CorpusArgs) -> Result<EvaluationCorpus> {
    let files = system_files(args)?;
    if files.is_empty() {
        return Err(Error::EmptySystemSet);
    }
    let named: Vec<(String, PathBuf)> = files
        .iter()
        .map(|f| (f.name.clone(), f.hypothesis.clone()))
        .collect();
    let corpus = load_text_corpus_named(&args.refs, &named, None)?;
    let ref_emb = read_emb1(&args.emb_ref)?;
    let mut sys_embs = HashMap::new();
    for f in &files {
        if !f.embedding.exists() {
            return Err(Error::Coverage {
                path: f.embedding.clone(),
                message: format!("no embedding file for system {:?}", f.name),
            });
        }
        sys_embs.insert(f.name.clone(), read_emb1(&f.embedding)?);
    }
    let mut corpus = bind_embeddings(corpus, &ref_emb, &sys_embs)?;
    apply_subset(&mut corpus, &args.subset)?;
    Ok(corpus)
}

fn apply_subset(corpus: &mut EvaluationCorpus, subset: &SubsetArgs) -> Result<()> {
    let Some(path) = &subset.human else {
        if top_request(&subset.top).is_some() {
            return Err(Error::Config("--top-frac/--top-k need --human".into()));
        }
        return Ok(());
    };
    let Some(top) = top_request(&subset.top) else {
        return Ok(());
    };
    let human = read_human_scores(path)?;
    let missing: Vec<&str> = corpus
        .system_names()
        .into_iter()
        .filter(|n| !human.contains_key(*n))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Config(format!(
            "{}: no human score for systems {}",
            path.display(),
            missing.join(", ")
        )));
    }
    let known: HumanScores = human
        .into_iter()
        .filter(|(n, _)| corpus.system_index(n).is_some())
        .collect();
    let keep = top_k_select(&known, top)?;
    corpus.retain_systems(&keep)
}

/// Metric score table: metric names in column order, then per-metric scores.
#[derive(Debug)]
pub struct ScoreTable {
    pub metrics: Vec<String>,
    pub scores: Vec<HumanScores>,
}

pub fn read_score_table(path: &Path) -> Result<ScoreTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.into(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(parse_err(1, "empty score table".into()));
    };
    let columns: Vec<&str> = header.split('\t').collect();
    if columns.len() < 2 || columns[0] != "system" {
        return Err(parse_err(1, "header must be `system<TAB>metric...`".into()));
    }
    let metrics: Vec<String> = columns[1..].iter().map(|s| s.to_string()).collect();
    let mut scores = vec![HumanScores::new(); metrics.len()];
    for (i, line) in lines {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != columns.len() {
            return Err(parse_err(
                i + 1,
                format!("expected {} columns, found {}", columns.len(), cols.len()),
            ));
        }
        for (m, value) in cols[1..].iter().enumerate() {
            let v: f64 = value
                .trim()
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_err(i + 1, format!("unparseable score {value:?}")))?;
            if scores[m].insert(cols[0].to_owned(), v).is_some() {
                return Err(Error::Config(format!(
                    "{}: duplicate system {:?} at line {}",
                    path.display(),
                    cols[0],
                    i + 1
                )));
            }
        }
    }
    Ok(ScoreTable { metrics, scores })
}
