//! Immutable CSR graph, feature matrices, and the full-/low-/high-pass
//! aggregation operators every other module consumes.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Node id type. u32 keeps the CSR column array compact.
pub type NodeId = u32;

/// How neighbor features are combined by the low-pass operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Normalization {
    /// Row-normalized adjacency: each row of the operator is a mean over neighbors.
    RandomWalk,
    /// Symmetric normalization `D^{-1/2} A D^{-1/2}`.
    Symmetric,
}

/// Aggregation operator selection: normalization kind plus optional self-loops.
///
/// The default is random-walk normalization without self-loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AggregationKind {
    pub normalization: Normalization,
    pub add_self_loops: bool,
}

impl Default for AggregationKind {
    fn default() -> Self {
        AggregationKind {
            normalization: Normalization::RandomWalk,
            add_self_loops: false,
        }
    }
}

impl AggregationKind {
    pub fn random_walk() -> Self {
        Self::default()
    }

    pub fn symmetric() -> Self {
        AggregationKind {
            normalization: Normalization::Symmetric,
            add_self_loops: false,
        }
    }

    pub fn with_self_loops(mut self) -> Self {
        self.add_self_loops = true;
        self
    }
}

/// Options for [`Graph::load`] and [`Graph::from_edges`]. Defaults to an
/// undirected graph with self-loops rejected.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub directed: bool,
    pub allow_self_loops: bool,
}

/// Immutable labeled sparse graph in CSR form.
///
/// Column indices are sorted and deduplicated within each row. Undirected
/// graphs store both directions so neighbor scans are O(deg). Labels are
/// class ids in `0..n_classes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_nodes: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<NodeId>,
    directed: bool,
    labels: Vec<u32>,
    n_classes: usize,
}

impl Graph {
    /// Build from an edge list and per-node labels.
    ///
    /// `labels.len()` fixes the node count; every endpoint must be below it.
    /// Undirected inputs are mirrored; duplicate edges collapse.
    pub fn from_edges(
        edges: &[(NodeId, NodeId)],
        labels: Vec<u32>,
        opts: LoadOptions,
    ) -> Result<Graph> {
        let n = labels.len();
        for (i, &(u, v)) in edges.iter().enumerate() {
            if u as usize >= n || v as usize >= n {
                return Err(Error::Invalid(format!(
                    "edge {} ({u} {v}) references a node >= node count {n}",
                    i + 1
                )));
            }
            if u == v && !opts.allow_self_loops {
                return Err(Error::Invalid(format!(
                    "self-loop {u}-{v} at edge {}",
                    i + 1
                )));
            }
        }
        Ok(Self::build(edges, labels, opts))
    }

    fn build(edges: &[(NodeId, NodeId)], labels: Vec<u32>, opts: LoadOptions) -> Graph {
        let n = labels.len();
        let mut pairs: Vec<(NodeId, NodeId)> = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            pairs.push((u, v));
            if !opts.directed && u != v {
                pairs.push((v, u));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();

        let mut row_ptr = vec![0usize; n + 1];
        for &(u, _) in &pairs {
            row_ptr[u as usize + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = pairs.into_iter().map(|(_, v)| v).collect();

        let n_classes = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        Graph {
            n_nodes: n,
            row_ptr,
            col_idx,
            directed: opts.directed,
            labels,
            n_classes,
        }
    }

    /// Load a graph from an edge-list file and a label file.
    ///
    /// Edge lines are `u<ws>v`; `#`-prefixed and blank lines are skipped.
    /// The label file has one base-10 class id per line; line i labels node i
    /// and its line count fixes the node count, so isolated nodes are allowed.
    pub fn load(edge_path: &Path, label_path: &Path, opts: LoadOptions) -> Result<Graph> {
        let labels = load_labels(label_path)?;
        let n = labels.len();

        let text = std::fs::read_to_string(edge_path).map_err(|e| Error::io(edge_path, e))?;
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let u = parse_node(it.next(), edge_path, lineno)?;
            let v = parse_node(it.next(), edge_path, lineno)?;
            if let Some(extra) = it.next() {
                return Err(Error::parse(
                    edge_path,
                    lineno,
                    format!("trailing token {extra:?}"),
                ));
            }
            if u as usize >= n || v as usize >= n {
                return Err(Error::parse(
                    edge_path,
                    lineno,
                    format!("edge {u} {v} references a node >= node count {n}"),
                ));
            }
            if u == v && !opts.allow_self_loops {
                return Err(Error::parse(
                    edge_path,
                    lineno,
                    format!("self-loop {u}-{v} rejected"),
                ));
            }
            edges.push((u, v));
        }
        Ok(Self::build(&edges, labels, opts))
    }

    /// Serialize back to the edge-list text format. Undirected edges are
    /// written once with the smaller endpoint first, so load → write → load
    /// round-trips exactly.
    pub fn write_edges(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for u in 0..self.n_nodes as NodeId {
            for &v in self.neighbors(u) {
                if self.directed || u <= v {
                    writeln!(out, "{u} {v}").unwrap();
                }
            }
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Serialize the label file: one class id per line.
    pub fn write_labels(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for &l in &self.labels {
            writeln!(out, "{l}").unwrap();
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of classes (max label + 1).
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, v: NodeId) -> u32 {
        self.labels[v as usize]
    }

    /// Stored adjacency entries (both directions for undirected graphs).
    pub fn n_incidences(&self) -> usize {
        self.col_idx.len()
    }

    /// Edge count: undirected edges are counted once (self-loops too).
    pub fn n_edges(&self) -> usize {
        if self.directed {
            self.col_idx.len()
        } else {
            let loops = (0..self.n_nodes as NodeId)
                .filter(|&v| self.has_edge(v, v))
                .count();
            (self.col_idx.len() - loops) / 2 + loops
        }
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.row_ptr[v as usize + 1] - self.row_ptr[v as usize]
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.col_idx[self.row_ptr[v as usize]..self.row_ptr[v as usize + 1]]
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Nodes with no stored neighbors.
    pub fn zero_degree_nodes(&self) -> Vec<NodeId> {
        (0..self.n_nodes as NodeId)
            .filter(|&v| self.degree(v) == 0)
            .collect()
    }
}

fn parse_node(token: Option<&str>, path: &Path, lineno: usize) -> Result<NodeId> {
    let token = token.ok_or_else(|| Error::parse(path, lineno, "expected two node ids"))?;
    token
        .parse::<NodeId>()
        .map_err(|_| Error::parse(path, lineno, format!("non-integer token {token:?}")))
}

/// Read a label file: one base-10 class id per line, blank lines skipped.
pub fn load_labels(path: &Path) -> Result<Vec<u32>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let l = line
            .parse::<u32>()
            .map_err(|_| Error::parse(path, lineno + 1, format!("non-integer label {line:?}")))?;
        labels.push(l);
    }
    Ok(labels)
}

/// Dense row-major feature matrix, immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    /// Wrap a row-major buffer. All entries must be finite.
    pub fn from_rows(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<FeatureMatrix> {
        if data.len() != n_rows * n_cols {
            return Err(Error::Invalid(format!(
                "feature buffer length {} != {n_rows}x{n_cols}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "non-finite feature value at row {} col {}",
                bad / n_cols.max(1),
                bad % n_cols.max(1)
            )));
        }
        Ok(FeatureMatrix {
            n_rows,
            n_cols,
            data,
        })
    }

    /// Read a CSV of decimal floats with exactly `n_nodes` rows.
    pub fn load_csv(path: &Path, n_nodes: usize) -> Result<FeatureMatrix> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut data = Vec::new();
        let mut n_cols = None;
        let mut n_rows = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = 0usize;
            for tok in line.split(',') {
                let v: f64 = tok.trim().parse().map_err(|_| {
                    Error::parse(path, lineno, format!("non-numeric field {tok:?}"))
                })?;
                if !v.is_finite() {
                    return Err(Error::parse(
                        path,
                        lineno,
                        format!("non-finite value {tok:?}"),
                    ));
                }
                data.push(v);
                cols += 1;
            }
            match n_cols {
                None => n_cols = Some(cols),
                Some(c) if c != cols => {
                    return Err(Error::parse(
                        path,
                        lineno,
                        format!("ragged row: {cols} fields, expected {c}"),
                    ))
                }
                _ => {}
            }
            n_rows += 1;
        }
        if n_rows != n_nodes {
            return Err(Error::Invalid(format!(
                "feature file {} has {n_rows} rows, expected {n_nodes}",
                path.display()
            )));
        }
        Ok(FeatureMatrix {
            n_rows,
            n_cols: n_cols.unwrap_or(0),
            data,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for i in 0..self.n_rows {
            let row = self.row(i);
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{v}").unwrap();
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// New matrix whose row k is `self.row(idx[k])`.
    pub fn gather_rows(&self, idx: &[NodeId]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.n_cols);
        for &i in idx {
            data.extend_from_slice(self.row(i as usize));
        }
        FeatureMatrix {
            n_rows: idx.len(),
            n_cols: self.n_cols,
            data,
        }
    }
}

/// One-hot label matrix Z (n_nodes × n_classes) of a graph.
pub fn one_hot_labels(g: &Graph) -> FeatureMatrix {
    let c = g.n_classes();
    let mut data = vec![0.0; g.n_nodes() * c];
    for (i, &l) in g.labels().iter().enumerate() {
        data[i * c + l as usize] = 1.0;
    }
    FeatureMatrix {
        n_rows: g.n_nodes(),
        n_cols: c,
        data,
    }
}

fn check_dims(g: &Graph, x: &FeatureMatrix) -> Result<()> {
    if x.n_rows() != g.n_nodes() {
        return Err(Error::Invalid(format!(
            "feature rows {} != node count {}",
            x.n_rows(),
            g.n_nodes()
        )));
    }
    Ok(())
}

/// Low-pass filtered features: each output row mixes the node's neighborhood.
///
/// Random-walk normalization takes the neighbor mean (an error is raised if
/// any node has degree zero and self-loops are off, since the mean is
/// undefined); symmetric normalization applies `D^{-1/2} A D^{-1/2}` and
/// leaves zero-degree rows at zero.
pub fn aggregate_low_pass(
    g: &Graph,
    x: &FeatureMatrix,
    kind: AggregationKind,
) -> Result<FeatureMatrix> {
    check_dims(g, x)?;
    let n = g.n_nodes();
    let f = x.n_cols();

    if kind.normalization == Normalization::RandomWalk && !kind.add_self_loops {
        let offenders = g.zero_degree_nodes();
        if !offenders.is_empty() {
            let total = offenders.len();
            return Err(Error::DegenerateNodes {
                nodes: offenders.into_iter().take(8).collect(),
                total,
            });
        }
    }

    let mut out = vec![0.0; n * f];
    let self_loop = kind.add_self_loops;
    match kind.normalization {
        Normalization::RandomWalk => {
            out.par_chunks_mut(f).enumerate().for_each(|(i, row)| {
                let mut deg = g.degree(i as NodeId) as f64;
                if self_loop {
                    deg += 1.0;
                    row.copy_from_slice(x.row(i));
                }
                for &u in g.neighbors(i as NodeId) {
                    let xu = x.row(u as usize);
                    for (k, v) in row.iter_mut().zip(xu) {
                        *k += *v;
                    }
                }
                for k in row.iter_mut() {
                    *k /= deg;
                }
            });
        }
        Normalization::Symmetric => {
            let deg: Vec<f64> = (0..n)
                .map(|i| g.degree(i as NodeId) as f64 + if self_loop { 1.0 } else { 0.0 })
                .collect();
            let inv_sqrt: Vec<f64> = deg
                .iter()
                .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
                .collect();
            out.par_chunks_mut(f).enumerate().for_each(|(i, row)| {
                if self_loop {
                    let w = inv_sqrt[i] * inv_sqrt[i];
                    for (k, v) in row.iter_mut().zip(x.row(i)) {
                        *k = w * *v;
                    }
                }
                for &u in g.neighbors(i as NodeId) {
                    let w = inv_sqrt[i] * inv_sqrt[u as usize];
                    let xu = x.row(u as usize);
                    for (k, v) in row.iter_mut().zip(xu) {
                        *k += w * *v;
                    }
                }
            });
        }
    }
    FeatureMatrix::from_rows(n, f, out)
}

/// High-pass filtered features: `x - aggregate_low_pass(g, x, kind)`.
pub fn aggregate_high_pass(
    g: &Graph,
    x: &FeatureMatrix,
    kind: AggregationKind,
) -> Result<FeatureMatrix> {
    let lp = aggregate_low_pass(g, x, kind)?;
    let data: Vec<f64> = x.data.iter().zip(&lp.data).map(|(a, b)| a - b).collect();
    FeatureMatrix::from_rows(x.n_rows, x.n_cols, data)
}
