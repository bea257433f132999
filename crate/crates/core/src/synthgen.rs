//! Graph generators: sampled two-class model graphs with Gaussian node
//! features, and controlled edge-homophily graphs built from per-class
//! intra/inter edge budgets.

use std::collections::HashSet;
use std::path::PathBuf;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::csbmh::CsbmhParams;
use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, Graph, LoadOptions, NodeId};

/// A generated two-class model graph with its realized neighbor-label
/// fraction (intra edges over all edges, after integer rounding of the
/// per-node budgets).
#[derive(Debug, Clone)]
pub struct CsbmhSample {
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub realized_h: f64,
}

fn round_half_up(x: f64) -> usize {
    x.round() as usize
}

/// Sample a directed graph from the two-class model: node features come from
/// the class Gaussian, and each node draws `round(h·d)` distinct intra-class
/// and `round(d) − round(h·d)` distinct inter-class out-neighbors.
/// Deterministic for a fixed seed.
pub fn generate_csbmh_graph(
    params: &CsbmhParams,
    n0: usize,
    n1: usize,
    seed: u64,
) -> Result<CsbmhSample> {
    params.validate()?;
    if n0 < 2 || n1 < 2 {
        return Err(Error::Invalid("need at least 2 nodes per class".into()));
    }
    let budgets = |d: f64, own: usize, other: usize| -> Result<(usize, usize)> {
        let total = round_half_up(d);
        let intra = round_half_up(params.h * d).min(total);
        let inter = total - intra;
        if intra > own - 1 {
            return Err(Error::Invalid(format!(
                "intra-class degree {intra} exceeds available pool {}",
                own - 1
            )));
        }
        if inter > other {
            return Err(Error::Invalid(format!(
                "inter-class degree {inter} exceeds available pool {other}"
            )));
        }
        Ok((intra, inter))
    };
    let (intra0, inter0) = budgets(params.d0, n0, n1)?;
    let (intra1, inter1) = budgets(params.d1, n1, n0)?;

    let n = n0 + n1;
    let dim = params.mu0.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut data = Vec::with_capacity(n * dim);
    let sd0 = params.sigma0_sq.sqrt();
    let sd1 = params.sigma1_sq.sqrt();
    for i in 0..n {
        let (mean, sd) = if i < n0 {
            (&params.mu0, sd0)
        } else {
            (&params.mu1, sd1)
        };
        for m in mean {
            let z: f64 = StandardNormal.sample(&mut rng);
            data.push(m + sd * z);
        }
    }
    let features = FeatureMatrix::from_rows(n, dim, data)?;

    // distinct draws from a pool, skipping the node itself inside its class
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    let draw = |rng: &mut ChaCha8Rng, count: usize, lo: usize, hi: usize, skip: Option<usize>| {
        let pool = hi - lo - skip.map_or(0, |_| 1);
        debug_assert!(count <= pool);
        let mut chosen = HashSet::with_capacity(count);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let mut v = lo + rng.gen_range(0..pool);
            if let Some(s) = skip {
                if v >= s {
                    v += 1;
                }
            }
            if chosen.insert(v) {
                out.push(v as NodeId);
            }
        }
        out
    };
    for i in 0..n {
        let (intra, inter, own_lo, own_hi, other_lo, other_hi) = if i < n0 {
            (intra0, inter0, 0, n0, n0, n)
        } else {
            (intra1, inter1, n0, n, 0, n0)
        };
        for v in draw(&mut rng, intra, own_lo, own_hi, Some(i)) {
            edges.push((i as NodeId, v));
        }
        for v in draw(&mut rng, inter, other_lo, other_hi, None) {
            edges.push((i as NodeId, v));
        }
    }

    let mut labels = vec![0u32; n];
    for l in labels[n0..].iter_mut() {
        *l = 1;
    }
    let graph = Graph::from_edges(
        &edges,
        labels,
        LoadOptions {
            directed: true,
            allow_self_loops: false,
        },
    )?;

    let intra_total = n0 * intra0 + n1 * intra1;
    let total = n0 * (intra0 + inter0) + n1 * (intra1 + inter1);
    Ok(CsbmhSample {
        graph,
        features,
        realized_h: intra_total as f64 / total as f64,
    })
}

/// Where node features for a generated homophily graph come from.
#[derive(Debug, Clone)]
pub enum FeatureSource {
    /// Per-class isotropic Gaussian blobs: class c centers on
    /// `spread · e_{c mod dim}`, unit variance.
    GaussianBlobs { dim: usize, spread: f64 },
    /// A CSV whose rows align with the generated nodes (class blocks are
    /// contiguous); rows are permuted within each class block.
    FromFile(PathBuf),
}

/// Spec for the controlled edge-homophily generator.
#[derive(Debug, Clone)]
pub struct HomophilyGenSpec {
    pub n_classes: usize,
    pub nodes_per_class: usize,
    pub intra_edges_per_class: usize,
    pub target_h_edge: f64,
    pub feature_source: FeatureSource,
    pub seed: u64,
}

impl Default for HomophilyGenSpec {
    fn default() -> Self {
        HomophilyGenSpec {
            n_classes: 5,
            nodes_per_class: 400,
            intra_edges_per_class: 4000,
            target_h_edge: 0.5,
            feature_source: FeatureSource::GaussianBlobs {
                dim: 5,
                spread: 2.0,
            },
            seed: 0,
        }
    }
}

/// Written next to generated datasets so downstream runs can read the spec
/// and the realized homophily back.
#[derive(Debug, Clone, Serialize)]
pub struct GenManifest {
    pub n_nodes: usize,
    pub n_classes: usize,
    pub n_edges: usize,
    pub directed: bool,
    pub seed: u64,
    pub realized_h_edge: f64,
}

/// Sample `count` distinct unordered pairs through an injection from
/// `0..pool_size`; switches from rejection sampling to a partial shuffle of
/// the enumerated pool when the request is dense.
fn sample_distinct_pairs(
    rng: &mut ChaCha8Rng,
    pool_size: usize,
    count: usize,
    decode: impl Fn(usize) -> (NodeId, NodeId),
) -> Vec<(NodeId, NodeId)> {
    debug_assert!(count <= pool_size);
    if count * 2 > pool_size {
        let mut pool: Vec<usize> = (0..pool_size).collect();
        for i in 0..count {
            let j = rng.gen_range(i..pool_size);
            pool.swap(i, j);
        }
        return pool[..count].iter().map(|&i| decode(i)).collect();
    }
    let mut chosen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let i = rng.gen_range(0..pool_size);
        if chosen.insert(i) {
            out.push(decode(i));
        }
    }
    out
}

/// Build an undirected graph with a controlled edge homophily level: per
/// class, `intra_edges_per_class` distinct intra pairs and
/// `round(intra/target − intra)` distinct inter pairs, deduplicated across
/// classes. Returns the graph, features, and the realized edge homophily.
pub fn generate_homophily_graph(spec: &HomophilyGenSpec) -> Result<(Graph, FeatureMatrix, f64)> {
    if spec.n_classes < 2 || spec.nodes_per_class < 2 {
        return Err(Error::Invalid(
            "need >= 2 classes and >= 2 nodes per class".into(),
        ));
    }
    if !(spec.target_h_edge > 0.0 && spec.target_h_edge <= 1.0) {
        return Err(Error::Invalid(format!(
            "target_h_edge {} outside (0, 1]",
            spec.target_h_edge
        )));
    }
    let npc = spec.nodes_per_class;
    let n = spec.n_classes * npc;
    let intra_pool = npc * (npc - 1) / 2;
    if spec.intra_edges_per_class > intra_pool {
        return Err(Error::Invalid(format!(
            "{} intra edges requested but only {intra_pool} distinct pairs exist per class",
            spec.intra_edges_per_class
        )));
    }
    let inter_per_class = round_half_up(
        spec.intra_edges_per_class as f64 / spec.target_h_edge - spec.intra_edges_per_class as f64,
    );
    let inter_pool = npc * (n - npc);
    if inter_per_class > inter_pool {
        return Err(Error::Invalid(format!(
            "{inter_per_class} inter edges requested but only {inter_pool} distinct pairs exist per class"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut edge_set: HashSet<(NodeId, NodeId)> = HashSet::new();
    let mut intra_count = 0usize;

    for c in 0..spec.n_classes {
        let base = (c * npc) as NodeId;
        let intra = sample_distinct_pairs(&mut rng, intra_pool, spec.intra_edges_per_class, |i| {
            // unrank i into an unordered pair (a, b), a < b, within the class
            let (a, b) = unrank_pair(i, npc);
            (base + a as NodeId, base + b as NodeId)
        });
        for (u, v) in intra {
            if edge_set.insert((u.min(v), u.max(v))) {
                intra_count += 1;
            }
        }
        let inter = sample_distinct_pairs(&mut rng, inter_pool, inter_per_class, |i| {
            let a = i / (n - npc);
            let r = i % (n - npc);
            let b = if r < c * npc { r } else { r + npc };
            (base + a as NodeId, b as NodeId)
        });
        for (u, v) in inter {
            edge_set.insert((u.min(v), u.max(v)));
        }
    }

    let mut edges: Vec<(NodeId, NodeId)> = edge_set.into_iter().collect();
    edges.sort_unstable();
    let labels: Vec<u32> = (0..n).map(|i| (i / npc) as u32).collect();
    let graph = Graph::from_edges(&edges, labels, LoadOptions::default())?;
    let realized = intra_count as f64 / edges.len() as f64;

    let features = match &spec.feature_source {
        FeatureSource::GaussianBlobs { dim, spread } => {
            let dim = (*dim).max(1);
            let mut data = Vec::with_capacity(n * dim);
            for i in 0..n {
                let c = i / npc;
                for j in 0..dim {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let mean = if j == c % dim { *spread } else { 0.0 };
                    data.push(mean + z);
                }
            }
            FeatureMatrix::from_rows(n, dim, data)?
        }
        FeatureSource::FromFile(path) => {
            let x = FeatureMatrix::load_csv(path, n)?;
            // permute rows within each class block
            let mut order: Vec<NodeId> = (0..n as NodeId).collect();
            for c in 0..spec.n_classes {
                let block = &mut order[c * npc..(c + 1) * npc];
                for i in 0..npc {
                    let j = rng.gen_range(i..npc);
                    block.swap(i, j);
                }
            }
            x.gather_rows(&order)
        }
    };

    Ok((graph, features, realized))
}

/// Inverse of the row-major enumeration of unordered pairs `(a, b)`,
/// `0 <= a < b < n`.
fn unrank_pair(mut index: usize, n: usize) -> (usize, usize) {
    let mut a = 0usize;
    let mut row = n - 1;
    while index >= row {
        index -= row;
        a += 1;
        row -= 1;
    }
    (a, a + 1 + index)
}
