//! Plain-text dataset files.
//!
//! * edges: `<src>\t<dst>` per line, 0-based ids, `#` comments ignored.
//!   Any whitespace separates the two ids when reading.
//! * features: line `i` holds the comma-separated feature row of node `i`.
//! * labels: `<node>\t<class>` per line, every node exactly once.
//!
//! Writing emits canonical edges (`u < v`, lexicographic) and labels in node
//! order, so equal graphs serialize to identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetPaths {
    pub edges: PathBuf,
    pub features: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
}

impl DatasetPaths {
    /// Conventional file names inside `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            edges: dir.join("edges.tsv"),
            features: dir.join("features.csv"),
            labels: Some(dir.join("labels.tsv")),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_pair(path: &Path, line_no: usize, line: &str) -> Result<(usize, usize)> {
    let mut parts = line.split_whitespace();
    let mut next_id = |what: &str| -> Result<usize> {
        let tok = parts
            .next()
            .ok_or_else(|| parse_err(path, line_no, format!("missing {what}")))?;
        tok.parse()
            .map_err(|_| parse_err(path, line_no, format!("bad {what} `{tok}`")))
    };
    let a = next_id("first id")?;
    let b = next_id("second id")?;
    if parts.next().is_some() {
        return Err(parse_err(path, line_no, "expected exactly two fields"));
    }
    Ok((a, b))
}

pub fn load_dataset<T: Scalar>(
    edges_path: &Path,
    features_path: &Path,
    labels_path: Option<&Path>,
) -> Result<Graph<T>> {
    let features = read_features::<T>(features_path)?;
    let n = features.rows();

    let text = read(edges_path)?;
    let mut edges = Vec::new();
    for (line_no, line) in content_lines(&text) {
        let (u, v) = parse_pair(edges_path, line_no, line)?;
        if u >= n || v >= n {
            return Err(parse_err(
                edges_path,
                line_no,
                format!("node id {} out of range for {n} nodes", u.max(v)),
            ));
        }
        if u == v {
            return Err(parse_err(
                edges_path,
                line_no,
                format!("self-loop on node {u}"),
            ));
        }
        edges.push((u, v));
    }

    let labels = labels_path.map(|p| read_labels(p, n)).transpose()?;
    Graph::new(edges, features, labels)
}

fn read_features<T: Scalar>(path: &Path) -> Result<Mat<T>> {
    let text = read(path)?;
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (line_no, line) in content_lines(&text) {
        let row = line
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                tok.parse::<f64>()
                    .map(T::of)
                    .map_err(|_| parse_err(path, line_no, format!("bad float `{tok}`")))
            })
            .collect::<Result<Vec<T>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    path,
                    line_no,
                    format!("{} features, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Dataset(format!(
            "{}: no feature rows",
            path.display()
        )));
    }
    Mat::from_rows(&rows)
}

fn read_labels(path: &Path, n: usize) -> Result<Vec<usize>> {
    let text = read(path)?;
    let mut labels: Vec<Option<usize>> = vec![None; n];
    for (line_no, line) in content_lines(&text) {
        let (node, class) = parse_pair(path, line_no, line)?;
        if node >= n {
            return Err(parse_err(
                path,
                line_no,
                format!("node id {node} out of range for {n} nodes"),
            ));
        }
        if labels[node].replace(class).is_some() {
            return Err(parse_err(
                path,
                line_no,
                format!("duplicate label for node {node}"),
            ));
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            l.ok_or_else(|| Error::Dataset(format!("{}: node {i} has no label", path.display())))
        })
        .collect()
}

pub fn write_dataset<T: Scalar>(graph: &Graph<T>, paths: &DatasetPaths) -> Result<()> {
    let mut edges = String::new();
    for (u, v) in graph.edges() {
        writeln!(edges, "{u}\t{v}").unwrap();
    }
    fs::write(&paths.edges, edges).map_err(|e| Error::io(&paths.edges, e))?;

    let mut feats = String::new();
    for r in 0..graph.num_nodes() {
        let row = graph.features().row(r);
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                feats.push(',');
            }
            write!(feats, "{v}").unwrap();
        }
        feats.push('\n');
    }
    fs::write(&paths.features, feats).map_err(|e| Error::io(&paths.features, e))?;

    if let (Some(path), Some(labels)) = (&paths.labels, graph.labels()) {
        let mut out = String::new();
        for (i, l) in labels.iter().enumerate() {
            writeln!(out, "{i}\t{l}").unwrap();
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}
