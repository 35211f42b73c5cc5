use std::fs;
use std::io::{self, Write};
use std::path::Path;

use damteval::{Error, Result};
use serde::Serialize;

use crate::cli::{OutputArgs, OutputFormat};

/// Fixed 6-decimal rendering; negative zero prints as zero.
pub fn fmt6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

/// Rounds to 6 decimals for JSON payloads.
pub fn round6(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub fn serialize_round6<S: serde::Serializer>(
    x: &f64,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round6(*x))
}

pub fn serialize_opt_round6<S: serde::Serializer>(
    x: &Option<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&round6(*v)),
        None => s.serialize_none(),
    }
}

/// Tab-separated table with a header row.
#[derive(Debug, Default)]
pub struct Tsv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Tsv {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for row in std::iter::once(&self.header).chain(&self.rows) {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }
}

/// Escapes characters that would break a TSV cell.
pub fn tsv_cell(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('\t', "\\t")
        .replace('\n', "\\n")
}

pub fn render_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("cannot serialize report: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Renders either form and writes it to `--out` or stdout.
pub fn emit<T: Serialize>(args: &OutputArgs, tsv: impl FnOnce() -> Tsv, json: &T) -> Result<()> {
    let body = match args.output {
        OutputFormat::Tsv => tsv().render(),
        OutputFormat::Json => render_json(json)?,
    };
    write_output(args.out.as_deref(), &body)
}

pub fn write_output(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, body).map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        }),
        None => io::stdout()
            .lock()
            .write_all(body.as_bytes())
            .map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            }),
    }
}
