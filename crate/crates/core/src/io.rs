//! Text and JSON file formats.
//!
//! * `tm-v1`: first line `n`, then `n` rows of the transition matrix.
//! * `fm-v1`: first line `FM n`, then `n` rows of the flow matrix.
//! * `cc-v1`: JSON clustering with 1-based labels and the objective.
//! * multiway cut: `n m`, a line of terminals, then `u v weight` edges, 1-based.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cycle::{ClusteringError, CycleClustering, ObjectiveValue};
use crate::gen::multiway::{Edge, MultiwayCutInstance};
use crate::markov::{FlowMatrix, MarkovError, TransitionMatrix};

pub const CLUSTERING_FORMAT: &str = "cc-v1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("expected a {expected} file, found {found}")]
    WrongFormat { expected: &'static str, found: &'static str },
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
    #[error("invalid clustering file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn parse_err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse { line, msg: msg.into() }
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// A matrix file of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixFile {
    Transition(TransitionMatrix),
    Flow(FlowMatrix),
}

impl MatrixFile {
    pub fn n(&self) -> usize {
        match self {
            MatrixFile::Transition(p) => p.n(),
            MatrixFile::Flow(w) => w.n(),
        }
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_rows<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    n: usize,
    last_line: usize,
) -> Result<Vec<f64>, FormatError> {
    let mut data = Vec::with_capacity(n * n);
    let mut at = last_line;
    for _ in 0..n {
        let (ln, line) = lines.next().ok_or_else(|| parse_err(at + 1, "missing matrix row"))?;
        at = ln;
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| parse_err(ln, format!("invalid number `{tok}`")))?;
            data.push(v);
        }
        let got = data.len() - before;
        if got != n {
            return Err(parse_err(ln, format!("expected {n} entries, found {got}")));
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing content after matrix"));
    }
    Ok(data)
}

/// Reads either matrix format, deciding by the header line.
pub fn parse_matrix(text: &str) -> Result<MatrixFile, FormatError> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    let (flow, n_tok) = match toks.as_slice() {
        ["FM", n] => (true, *n),
        [n] => (false, *n),
        _ => return Err(parse_err(ln, format!("invalid header `{header}`"))),
    };
    let n: usize = n_tok.parse().map_err(|_| parse_err(ln, format!("invalid bin count `{n_tok}`")))?;
    if n == 0 {
        return Err(parse_err(ln, "bin count must be positive"));
    }
    let data = parse_rows(&mut lines, n, ln)?;
    Ok(if flow {
        MatrixFile::Flow(FlowMatrix::from_flat(n, data)?)
    } else {
        MatrixFile::Transition(TransitionMatrix::from_flat(n, data)?)
    })
}

pub fn parse_transition_matrix(text: &str) -> Result<TransitionMatrix, FormatError> {
    match parse_matrix(text)? {
        MatrixFile::Transition(p) => Ok(p),
        MatrixFile::Flow(_) => Err(FormatError::WrongFormat { expected: "tm-v1", found: "fm-v1" }),
    }
}

pub fn parse_flow_matrix(text: &str) -> Result<FlowMatrix, FormatError> {
    match parse_matrix(text)? {
        MatrixFile::Flow(w) => Ok(w),
        MatrixFile::Transition(_) => Err(FormatError::WrongFormat { expected: "fm-v1", found: "tm-v1" }),
    }
}

fn write_rows(out: &mut String, n: usize, data: &[f64]) {
    for row in data.chunks(n) {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
}

pub fn format_transition_matrix(p: &TransitionMatrix) -> String {
    let mut out = format!("{}\n", p.n());
    write_rows(&mut out, p.n(), p.as_slice());
    out
}

pub fn format_flow_matrix(w: &FlowMatrix) -> String {
    let mut out = format!("FM {}\n", w.n());
    write_rows(&mut out, w.n(), w.as_slice());
    out
}

/// JSON clustering record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringFile {
    pub format: String,
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub assignment: Vec<usize>,
    pub objective: ObjectiveValue,
}

impl ClusteringFile {
    pub fn new(c: &CycleClustering, alpha: f64, objective: ObjectiveValue) -> Self {
        Self {
            format: CLUSTERING_FORMAT.to_string(),
            n: c.n(),
            m: c.m(),
            alpha,
            assignment: c.to_one_based(),
            objective,
        }
    }

    pub fn clustering(&self) -> Result<CycleClustering, FormatError> {
        if self.assignment.len() != self.n {
            return Err(parse_err(
                0,
                format!("assignment has {} entries but n = {}", self.assignment.len(), self.n),
            ));
        }
        Ok(CycleClustering::from_one_based(self.m, &self.assignment)?)
    }

    pub fn objective(&self) -> ObjectiveValue {
        ObjectiveValue { alpha: self.alpha, ..self.objective }
    }
}

pub fn parse_clustering(text: &str) -> Result<ClusteringFile, FormatError> {
    let file: ClusteringFile = serde_json::from_str(text)?;
    if file.format != CLUSTERING_FORMAT {
        return Err(parse_err(0, format!("unsupported clustering format `{}`", file.format)));
    }
    Ok(file)
}

pub fn format_clustering(file: &ClusteringFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("clustering serializes");
    s.push('\n');
    s
}

/// Parses the multiway-cut text format. Vertex ids in the file are 1-based.
pub fn parse_multiway_cut(text: &str) -> Result<MultiwayCutInstance, FormatError> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let nums: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(ln, format!("invalid integer `{t}`"))))
        .collect::<Result<_, _>>()?;
    let [n, m] = nums[..] else {
        return Err(parse_err(ln, "expected `n m`"));
    };
    let (ln, tline) = lines.next().ok_or_else(|| parse_err(ln + 1, "missing terminal line"))?;
    let one_based = |t: &str, ln: usize| -> Result<usize, FormatError> {
        let v: usize = t.parse().map_err(|_| parse_err(ln, format!("invalid vertex `{t}`")))?;
        if v == 0 || v > n {
            return Err(parse_err(ln, format!("vertex {v} out of range 1..={n}")));
        }
        Ok(v - 1)
    };
    let terminals: Vec<usize> =
        tline.split_whitespace().map(|t| one_based(t, ln)).collect::<Result<_, _>>()?;
    if terminals.len() != m {
        return Err(parse_err(ln, format!("expected {m} terminals, found {}", terminals.len())));
    }
    let mut edges = Vec::new();
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let [u, v, c] = toks[..] else {
            return Err(parse_err(ln, "expected `u v weight`"));
        };
        let weight: f64 = c.parse().map_err(|_| parse_err(ln, format!("invalid weight `{c}`")))?;
        edges.push(Edge { u: one_based(u, ln)?, v: one_based(v, ln)?, weight });
    }
    Ok(MultiwayCutInstance { vertices: n, edges, terminals })
}

pub fn format_multiway_cut(mc: &MultiwayCutInstance) -> String {
    let mut out = format!("{} {}\n", mc.vertices, mc.terminals.len());
    let t: Vec<String> = mc.terminals.iter().map(|t| (t + 1).to_string()).collect();
    out.push_str(&t.join(" "));
    out.push('\n');
    for e in &mc.edges {
        let _ = writeln!(out, "{} {} {}", e.u + 1, e.v + 1, fmt_f64(e.weight));
    }
    out
}

/// Writes points as CSV with a leading `step` column.
pub fn write_points_csv<W: Write>(out: W, columns: &[&str], points: &[Vec<f64>]) -> Result<(), FormatError> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["step"];
    header.extend_from_slice(columns);
    wtr.write_record(&header)?;
    for (k, p) in points.iter().enumerate() {
        let mut rec = vec![k.to_string()];
        rec.extend(p.iter().map(|&v| fmt_f64(v)));
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a CSV written by [`write_points_csv`], returning the coordinate columns.
pub fn read_points_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), FormatError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
    let mut points = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let p = rec
            .iter()
            .skip(1)
            .map(|t| t.parse::<f64>().map_err(|_| parse_err(k + 2, format!("invalid number `{t}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        points.push(p);
    }
    Ok((header, points))
}
