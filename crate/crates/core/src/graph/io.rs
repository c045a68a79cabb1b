//! Plain-text dataset files.
//!
//! * edge list: one `u v` pair per line, 0-based ids, `#` starts a comment;
//! * features: one node per line, whitespace-separated decimals;
//! * labels: one non-negative integer per line;
//! * split: lines `train: ids...`, `val: ids...`, `test: ids...`, or a JSON
//!   object with `train`, `val` and `test` arrays.

use std::fs;
use std::path::{Path, PathBuf};

use super::{Dataset, Graph, Split};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub const GRAPH_FILE: &str = "graph.txt";
pub const FEATURES_FILE: &str = "features.txt";
pub const LABELS_FILE: &str = "labels.txt";
pub const SPLIT_FILE: &str = "split.txt";

/// Locations of the four files that make up a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetFiles {
    pub graph: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
    pub split: PathBuf,
}

impl DatasetFiles {
    /// The conventional file names inside `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            graph: dir.join(GRAPH_FILE),
            features: dir.join(FEATURES_FILE),
            labels: dir.join(LABELS_FILE),
            split: dir.join(SPLIT_FILE),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Lines with comments stripped, paired with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

pub fn parse_edge_list(text: &str, num_nodes: usize, path: &Path) -> Result<Graph> {
    let mut edges = Vec::new();
    for (line_no, line) in content_lines(text) {
        let mut fields = line.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(path, line_no, "expected exactly two node ids"));
        };
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_err(path, line_no, format!("invalid node id {s:?}")))
        };
        let (u, v) = (parse(a)?, parse(b)?);
        if u == v {
            return Err(parse_err(path, line_no, format!("self-loop on node {u}")));
        }
        if u >= num_nodes || v >= num_nodes {
            return Err(parse_err(
                path,
                line_no,
                format!("node id {} >= number of nodes {num_nodes}", u.max(v)),
            ));
        }
        edges.push((u, v));
    }
    Graph::from_edges(num_nodes, edges)
}

pub fn read_edge_list(path: impl AsRef<Path>, num_nodes: usize) -> Result<Graph> {
    let path = path.as_ref();
    parse_edge_list(&read(path)?, num_nodes, path)
}

pub fn read_features(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut rows = Vec::new();
    for (line_no, line) in content_lines(&text) {
        let row = line
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_err(path, line_no, format!("invalid feature value {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                return Err(parse_err(
                    path,
                    line_no,
                    format!("{} features, expected {first}", row.len()),
                ));
            }
        }
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = read(path)?;
    content_lines(&text)
        .map(|(line_no, line)| {
            line.parse::<usize>()
                .map_err(|_| parse_err(path, line_no, format!("invalid label {line:?}")))
        })
        .collect()
}

pub fn parse_split(text: &str, path: &Path) -> Result<Split> {
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| parse_err(path, e.line(), e.to_string()));
    }
    let mut split = Split::default();
    let mut seen = [false; 3];
    for (line_no, line) in content_lines(text) {
        let Some((key, rest)) = line.split_once(':') else {
            return Err(parse_err(path, line_no, "expected `train:`, `val:` or `test:`"));
        };
        let (slot, target) = match key.trim() {
            "train" => (0, &mut split.train),
            "val" | "validation" => (1, &mut split.val),
            "test" => (2, &mut split.test),
            other => return Err(parse_err(path, line_no, format!("unknown split {other:?}"))),
        };
        if std::mem::replace(&mut seen[slot], true) {
            return Err(parse_err(path, line_no, format!("split {:?} given twice", key.trim())));
        }
        for s in rest.split_whitespace() {
            target.push(
                s.parse()
                    .map_err(|_| parse_err(path, line_no, format!("invalid node id {s:?}")))?,
            );
        }
    }
    Ok(split)
}

pub fn read_split(path: impl AsRef<Path>) -> Result<Split> {
    let path = path.as_ref();
    parse_split(&read(path)?, path)
}

/// Loads and validates a dataset. The node count is the number of labels.
/// When `num_classes` is `None` it is one more than the largest label.
pub fn load_dataset(files: &DatasetFiles, num_classes: Option<usize>) -> Result<Dataset> {
    let labels = read_labels(&files.labels)?;
    let features = read_features(&files.features)?;
    let graph = read_edge_list(&files.graph, labels.len())?;
    let split = read_split(&files.split)?;
    let num_classes = num_classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
    Dataset::new(graph, features, labels, split, num_classes)
}

pub fn format_edge_list(graph: &Graph) -> String {
    let mut out = format!("# {} nodes, {} edges\n", graph.num_nodes(), graph.num_edges());
    for (u, v) in graph.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

fn write(path: &Path, contents: String) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn write_edge_list(graph: &Graph, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), format_edge_list(graph))
}

pub fn write_features(features: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for row in features.row_iter() {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    write(path.as_ref(), out)
}

pub fn write_labels(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let out: String = labels.iter().map(|l| format!("{l}\n")).collect();
    write(path.as_ref(), out)
}

pub fn write_split(split: &Split, path: impl AsRef<Path>) -> Result<()> {
    let line = |name: &str, ids: &[usize]| {
        let ids: Vec<String> = ids.iter().map(usize::to_string).collect();
        format!("{name}: {}\n", ids.join(" "))
    };
    let out = line("train", &split.train) + &line("val", &split.val) + &line("test", &split.test);
    write(path.as_ref(), out)
}

/// Writes the four dataset files into `dir` (created if missing).
pub fn save_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<DatasetFiles> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let files = DatasetFiles::in_dir(dir);
    write_edge_list(&dataset.graph, &files.graph)?;
    write_features(&dataset.features, &files.features)?;
    write_labels(&dataset.labels, &files.labels)?;
    write_split(&dataset.split, &files.split)?;
    Ok(files)
}
