//! Test-set ingestion: references, per-system hypotheses, system-level human
//! scores and the precomputed embeddings that scoring runs on.
//!
//! Token strings come from the embedding files. Text lines are kept for
//! provenance and for the surface-level BLEU baseline only.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use crate::emb1::EmbeddingFile;
use crate::error::{Error, Result};
use crate::similarity::SegmentEmbedding;

/// System name → system-level human score.
pub type HumanScores = BTreeMap<String, f64>;

#[derive(Debug, Clone)]
pub struct SystemOutput {
    pub name: String,
    pub segments: Vec<String>,
}

/// Aligned embeddings for the reference and every system, segment by segment.
#[derive(Debug, Clone)]
pub struct CorpusEmbeddings {
    pub dim: usize,
    pub reference: Vec<SegmentEmbedding>,
    /// Same order as `EvaluationCorpus::systems`.
    pub systems: Vec<Vec<SegmentEmbedding>>,
}

#[derive(Debug, Clone)]
pub struct EvaluationCorpus {
    pub references: Vec<String>,
    /// Sorted by name.
    pub systems: Vec<SystemOutput>,
    pub human_scores: Option<HumanScores>,
    pub embeddings: Option<CorpusEmbeddings>,
}

impl EvaluationCorpus {
    /// Builds a corpus from in-memory segments, validating alignment.
    pub fn new(references: Vec<String>, systems: Vec<SystemOutput>) -> Result<Self> {
        if references.is_empty() {
            return Err(Error::EmptyCorpus("reference set has no segments".into()));
        }
        let mut seen = BTreeSet::new();
        for s in &systems {
            if !seen.insert(s.name.as_str()) {
                return Err(Error::Config(format!("duplicate system name {:?}", s.name)));
            }
            if s.segments.len() != references.len() {
                return Err(Error::Alignment {
                    path: PathBuf::from(&s.name),
                    expected: references.len(),
                    found: s.segments.len(),
                });
            }
        }
        let mut systems = systems;
        systems.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(Self {
            references,
            systems,
            human_scores: None,
            embeddings: None,
        })
    }

    pub fn len(&self) -> usize {
        self.references.len()
    }

    pub fn is_empty(&self) -> bool {
        self.references.is_empty()
    }

    pub fn system_names(&self) -> Vec<&str> {
        self.systems.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn system_index(&self, name: &str) -> Option<usize> {
        self.systems.iter().position(|s| s.name == name)
    }

    /// Keeps only the named systems (and their embeddings, if bound).
    pub fn retain_systems(&mut self, names: &[String]) -> Result<()> {
        let wanted: BTreeSet<&str> = names.iter().map(String::as_str).collect();
        let known: BTreeSet<&str> = self.systems.iter().map(|s| s.name.as_str()).collect();
        let unknown: Vec<&str> = wanted.difference(&known).copied().collect();
        if !unknown.is_empty() {
            return Err(Error::Config(format!(
                "unknown systems: {}",
                unknown.join(", ")
            )));
        }
        let keep: Vec<bool> = self
            .systems
            .iter()
            .map(|s| wanted.contains(s.name.as_str()))
            .collect();
        if let Some(emb) = &mut self.embeddings {
            let mut flags = keep.iter();
            emb.systems.retain(|_| *flags.next().unwrap());
        }
        let mut flags = keep.iter();
        self.systems.retain(|_| *flags.next().unwrap());
        Ok(())
    }
}

/// Reads a UTF-8 file with one segment per `\n`-terminated line.
pub fn read_segments(path: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| {
        let valid = &e.as_bytes()[..e.utf8_error().valid_up_to()];
        Error::Parse {
            path: path.to_path_buf(),
            line: valid.iter().filter(|&&b| b == b'\n').count() + 1,
            message: "invalid UTF-8".into(),
        }
    })?;
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let body = text.strip_suffix('\n').unwrap_or(&text);
    Ok(body.split('\n').map(str::to_owned).collect())
}

/// Parses a `system<TAB>score` file.
pub fn read_human_scores(path: &Path) -> Result<HumanScores> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut scores = HumanScores::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let mut cols = line.split('\t');
        let (Some(name), Some(score), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(parse_err(format!(
                "expected 2 tab-separated columns: {line:?}"
            )));
        };
        let value: f64 = score
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("unparseable score {score:?}")))?;
        if !value.is_finite() {
            return Err(parse_err(format!("non-finite score {score:?}")));
        }
        if scores.insert(name.to_owned(), value).is_some() {
            return Err(Error::Config(format!(
                "{}: duplicate system {name:?} at line {}",
                path.display(),
                i + 1
            )));
        }
    }
    Ok(scores)
}

/// System name used for a hypothesis file: its filename stem.
pub fn system_name(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_owned)
        .ok_or_else(|| {
            Error::Config(format!(
                "cannot derive a system name from {}",
                path.display()
            ))
        })
}

/// Loads references and hypothesis files named by filename stem.
pub fn load_text_corpus(
    refs_path: &Path,
    system_paths: &[PathBuf],
    human_scores_path: Option<&Path>,
) -> Result<EvaluationCorpus> {
    let named = system_paths
        .iter()
        .map(|p| Ok((system_name(p)?, p.clone())))
        .collect::<Result<Vec<_>>>()?;
    load_text_corpus_named(refs_path, &named, human_scores_path)
}

/// Like [`load_text_corpus`] with explicit system names.
pub fn load_text_corpus_named(
    refs_path: &Path,
    systems: &[(String, PathBuf)],
    human_scores_path: Option<&Path>,
) -> Result<EvaluationCorpus> {
    let references = read_segments(refs_path)?;
    if references.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "{} has no segments",
            refs_path.display()
        )));
    }
    let mut seen = BTreeSet::new();
    let mut outputs = Vec::with_capacity(systems.len());
    for (name, path) in systems {
        if !seen.insert(name.as_str()) {
            return Err(Error::Config(format!(
                "duplicate system name {name:?} ({})",
                path.display()
            )));
        }
        let segments = read_segments(path)?;
        if segments.len() != references.len() {
            return Err(Error::Alignment {
                path: path.clone(),
                expected: references.len(),
                found: segments.len(),
            });
        }
        outputs.push(SystemOutput {
            name: name.clone(),
            segments,
        });
    }
    let mut corpus = EvaluationCorpus::new(references, outputs)?;
    corpus.human_scores = human_scores_path.map(read_human_scores).transpose()?;
    Ok(corpus)
}

fn materialize(
    file: &EmbeddingFile,
    n_segments: usize,
    expected_dim: usize,
    role: &str,
) -> Result<Vec<SegmentEmbedding>> {
    let path = file.display_name();
    if file.dim as usize != expected_dim {
        return Err(Error::DimensionMismatch {
            context: format!("{role} embeddings ({})", path.display()),
            expected: expected_dim,
            found: file.dim as usize,
        });
    }
    let present: BTreeSet<usize> = file
        .records
        .iter()
        .map(|r| r.segment_index as usize)
        .collect();
    let missing: Vec<String> = (0..n_segments)
        .filter(|i| !present.contains(i))
        .map(|i| i.to_string())
        .collect();
    let extra: Vec<String> = present
        .iter()
        .filter(|&&i| i >= n_segments)
        .map(|i| i.to_string())
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        let mut message = format!("{role} embeddings do not cover segments 0..{n_segments}");
        if !missing.is_empty() {
            message.push_str(&format!("; missing indices {}", missing.join(",")));
        }
        if !extra.is_empty() {
            message.push_str(&format!("; unexpected indices {}", extra.join(",")));
        }
        return Err(Error::Coverage { path, message });
    }
    file.records
        .iter()
        .map(|r| {
            r.to_segment(expected_dim).map_err(|e| match e {
                Error::DegenerateEmbedding(m) => Error::DegenerateEmbedding(format!(
                    "{} segment {}: {m}",
                    path.display(),
                    r.segment_index
                )),
                other => other,
            })
        })
        .collect()
}

/// Attaches embeddings to a text corpus.
///
/// Each file must cover exactly segments `0..N` and share the reference's
/// dimension. Binding order of systems does not matter.
pub fn bind_embeddings(
    mut corpus: EvaluationCorpus,
    ref_emb: &EmbeddingFile,
    sys_embs: &HashMap<String, EmbeddingFile>,
) -> Result<EvaluationCorpus> {
    let n = corpus.len();
    let dim = ref_emb.dim as usize;
    let reference = materialize(ref_emb, n, dim, "reference")?;
    let known: BTreeSet<&str> = corpus.systems.iter().map(|s| s.name.as_str()).collect();
    let unexpected: Vec<&str> = sys_embs
        .keys()
        .map(String::as_str)
        .filter(|k| !known.contains(k))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if !unexpected.is_empty() {
        return Err(Error::Config(format!(
            "embeddings given for unknown systems: {}",
            unexpected.join(", ")
        )));
    }
    let mut systems = Vec::with_capacity(corpus.systems.len());
    for s in &corpus.systems {
        let file = sys_embs.get(&s.name).ok_or_else(|| Error::Coverage {
            path: PathBuf::from(&s.name),
            message: format!("no embedding file for system {:?}", s.name),
        })?;
        systems.push(materialize(file, n, dim, &format!("system {:?}", s.name))?);
    }
    corpus.embeddings = Some(CorpusEmbeddings {
        dim,
        reference,
        systems,
    });
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emb1::EmbeddingRecord;
    use std::io::Write;

    fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
        let p = dir.join(name);
        fs::File::create(&p)
            .unwrap()
            .write_all(content.as_bytes())
            .unwrap();
        p
    }

    fn emb(dim: u32, indices: &[u32]) -> EmbeddingFile {
        EmbeddingFile::new(
            dim,
            indices
                .iter()
                .map(|&i| EmbeddingRecord {
                    segment_index: i,
                    tokens: vec!["x".into()],
                    values: (0..dim).map(|d| (d + 1) as f32).collect(),
                })
                .collect(),
        )
    }

    #[test]
    fn loads_aligned_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let refs = write(dir.path(), "ref.txt", "a b\nc d\n");
        let systems: Vec<PathBuf> = ["C", "A", "B"]
            .iter()
            .map(|n| write(dir.path(), &format!("{n}.txt"), "x\ny\n"))
            .collect();
        let human = write(dir.path(), "human.tsv", "MSRA.6926\t0.214\nA\t-0.5\n");
        let c = load_text_corpus(&refs, &systems, Some(&human)).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.system_names(), vec!["A", "B", "C"]);
        assert_eq!(c.human_scores.as_ref().unwrap()["MSRA.6926"], 0.214);
    }

    #[test]
    fn alignment_error_names_file() {
        let dir = tempfile::tempdir().unwrap();
        let refs = write(dir.path(), "ref.txt", "a\nb\n");
        let bad = write(dir.path(), "bad.txt", "a\nb\nc\n");
        match load_text_corpus(&refs, std::slice::from_ref(&bad), None) {
            Err(Error::Alignment {
                path,
                expected: 2,
                found: 3,
            }) => assert_eq!(path, bad),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_system_and_bad_human_score() {
        let dir = tempfile::tempdir().unwrap();
        let refs = write(dir.path(), "ref.txt", "a\n");
        let a = write(dir.path(), "A.txt", "a\n");
        let sub = dir.path().join("sub");
        fs::create_dir(&sub).unwrap();
        let a2 = write(&sub, "A.txt", "a\n");
        assert!(matches!(
            load_text_corpus(&refs, &[a.clone(), a2], None),
            Err(Error::Config(_))
        ));
        let human = write(dir.path(), "h.tsv", "A\t0.1\nB\tabc\n");
        match load_text_corpus(&refs, &[a], Some(&human)) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_lines_are_segments() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "r.txt", "a\n\nb");
        assert_eq!(read_segments(&p).unwrap(), vec!["a", "", "b"]);
    }

    #[test]
    fn bind_checks_coverage_and_dimension() {
        let refs = vec!["r0".to_string(), "r1".to_string()];
        let sys = |n: &str| SystemOutput {
            name: n.into(),
            segments: vec!["h0".into(), "h1".into()],
        };
        let corpus = EvaluationCorpus::new(refs, vec![sys("A"), sys("B")]).unwrap();

        let mut embs = HashMap::new();
        embs.insert("A".to_string(), emb(4, &[0, 1]));
        embs.insert("B".to_string(), emb(4, &[0, 1]));
        let bound = bind_embeddings(corpus.clone(), &emb(4, &[0, 1]), &embs).unwrap();
        assert_eq!(bound.embeddings.as_ref().unwrap().systems.len(), 2);

        embs.insert("B".to_string(), emb(4, &[0]));
        match bind_embeddings(corpus.clone(), &emb(4, &[0, 1]), &embs) {
            Err(Error::Coverage { message, .. }) => {
                assert!(message.contains("missing indices 1"), "{message}")
            }
            other => panic!("{other:?}"),
        }

        let mut embs = HashMap::new();
        embs.insert("A".to_string(), emb(4, &[0, 1]));
        embs.insert("B".to_string(), emb(4, &[0, 1]));
        match bind_embeddings(corpus.clone(), &emb(8, &[0, 1]), &embs) {
            Err(Error::DimensionMismatch {
                context,
                expected: 8,
                found: 4,
            }) => {
                assert!(context.contains("\"A\""), "{context}")
            }
            other => panic!("{other:?}"),
        }

        embs.remove("B");
        assert!(matches!(
            bind_embeddings(corpus, &emb(4, &[0, 1]), &embs),
            Err(Error::Coverage { .. })
        ));
    }

    #[test]
    fn retain_systems_keeps_embeddings_aligned() {
        let sys = |n: &str| SystemOutput {
            name: n.into(),
            segments: vec!["h".into()],
        };
        let corpus =
            EvaluationCorpus::new(vec!["r".into()], vec![sys("A"), sys("B"), sys("C")]).unwrap();
        let mut embs = HashMap::new();
        for (n, d) in [("A", 1u32), ("B", 2), ("C", 3)] {
            let mut f = emb(3, &[0]);
            f.records[0].tokens = vec![n.into()];
            f.records[0].values = vec![d as f32, 0.0, 0.0];
            embs.insert(n.to_string(), f);
        }
        let mut bound = bind_embeddings(corpus, &emb(3, &[0]), &embs).unwrap();
        bound.retain_systems(&["C".into(), "A".into()]).unwrap();
        assert_eq!(bound.system_names(), vec!["A", "C"]);
        let e = bound.embeddings.unwrap();
        assert_eq!(e.systems[1][0].tokens(), &["C".to_string()]);
    }
}
