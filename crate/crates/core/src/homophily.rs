//! The seven baseline homophily metrics, computed over the CSR graph without
//! materializing any dense N×N similarity matrix.
//!
//! Conventions: edge homophily counts each undirected edge once, while the
//! degree-weighted quantities behind adjusted homophily and label
//! informativeness run over directed incidences (both directions of every
//! undirected edge), matching their usual definitions. Natural log throughout.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{
    aggregate_low_pass, one_hot_labels, AggregationKind, FeatureMatrix, Graph, NodeId,
};

/// All metrics for one graph. `h_ge` is present only when features were given.
#[derive(Debug, Clone, Serialize)]
pub struct HomophilyReport {
    pub h_edge: f64,
    pub h_node: f64,
    pub h_class: f64,
    pub h_agg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_ge: Option<f64>,
    pub h_adj: f64,
    pub li: f64,
    /// Per-node same-label neighbor fractions (NaN for zero-degree nodes).
    #[serde(skip)]
    pub per_node_homophily: Option<Vec<f64>>,
}

impl HomophilyReport {
    /// One-row CSV with a fixed header; an absent `h_ge` leaves its cell empty.
    pub fn to_csv(&self) -> String {
        let ge = self.h_ge.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "h_edge,h_node,h_class,h_agg,h_ge,h_adj,li\n{},{},{},{},{},{},{}\n",
            self.h_edge, self.h_node, self.h_class, self.h_agg, ge, self.h_adj, self.li
        )
    }
}

/// Compute every metric at once. `include_self` controls whether a node's own
/// aggregated row joins its same-label multiset in `h_agg`.
pub fn homophily_report(
    g: &Graph,
    features: Option<&FeatureMatrix>,
    agg: AggregationKind,
    include_self: bool,
) -> Result<HomophilyReport> {
    let h_edge = h_edge(g)?;
    let (mean, per_node) = h_node(g)?;
    Ok(HomophilyReport {
        h_edge,
        h_node: mean,
        h_class: h_class(g)?,
        h_agg: h_agg(g, agg, include_self)?,
        h_ge: features.map(|x| h_ge(g, x)).transpose()?,
        h_adj: h_adj(g)?,
        li: label_informativeness(g)?,
        per_node_homophily: Some(per_node),
    })
}

fn require_edges(g: &Graph, metric: &'static str) -> Result<()> {
    if g.n_incidences() == 0 {
        return Err(Error::UndefinedMetric {
            metric,
            reason: "graph has no edges".into(),
        });
    }
    Ok(())
}

/// Fraction of edges whose endpoints share a label.
pub fn h_edge(g: &Graph) -> Result<f64> {
    require_edges(g, "h_edge")?;
    let mut intra = 0usize;
    let mut total = 0usize;
    for u in 0..g.n_nodes() as NodeId {
        for &v in g.neighbors(u) {
            if g.directed() || u <= v {
                total += 1;
                if g.label(u) == g.label(v) {
                    intra += 1;
                }
            }
        }
    }
    Ok(intra as f64 / total as f64)
}

/// Mean over nodes of the same-label neighbor fraction, plus the per-node
/// vector. Zero-degree nodes are excluded from the mean (their local value is
/// undefined) and carry NaN in the vector.
pub fn h_node(g: &Graph) -> Result<(f64, Vec<f64>)> {
    let mut per_node = vec![f64::NAN; g.n_nodes()];
    let mut sum = 0.0;
    let mut counted = 0usize;
    for v in 0..g.n_nodes() as NodeId {
        let deg = g.degree(v);
        if deg == 0 {
            continue;
        }
        let same = g
            .neighbors(v)
            .iter()
            .filter(|&&u| g.label(u) == g.label(v))
            .count();
        let frac = same as f64 / deg as f64;
        per_node[v as usize] = frac;
        sum += frac;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::UndefinedMetric {
            metric: "h_node",
            reason: "every node has degree zero".into(),
        });
    }
    Ok((sum / counted as f64, per_node))
}

/// Class homophily: excess of each class's degree-weighted intra-class edge
/// fraction over the class share, clamped at zero and averaged over C−1.
/// A class with zero total degree contributes nothing.
pub fn h_class(g: &Graph) -> Result<f64> {
    let c = g.n_classes();
    if c < 2 {
        return Err(Error::UndefinedMetric {
            metric: "h_class",
            reason: "fewer than two classes".into(),
        });
    }
    require_edges(g, "h_class")?;
    let mut class_deg = vec![0u64; c];
    let mut class_same = vec![0u64; c];
    let mut class_size = vec![0u64; c];
    for v in 0..g.n_nodes() as NodeId {
        let k = g.label(v) as usize;
        class_size[k] += 1;
        class_deg[k] += g.degree(v) as u64;
        class_same[k] += g
            .neighbors(v)
            .iter()
            .filter(|&&u| g.label(u) == g.label(v))
            .count() as u64;
    }
    let n = g.n_nodes() as f64;
    let mut total = 0.0;
    for k in 0..c {
        if class_deg[k] == 0 {
            continue;
        }
        let h_k = class_same[k] as f64 / class_deg[k] as f64;
        total += (h_k - class_size[k] as f64 / n).max(0.0);
    }
    Ok(total / (c as f64 - 1.0))
}

/// Generalized edge homophily: mean cosine similarity across edges.
/// Zero-norm feature rows contribute cosine 0.
pub fn h_ge(g: &Graph, x: &FeatureMatrix) -> Result<f64> {
    if x.n_rows() != g.n_nodes() {
        return Err(Error::Invalid(format!(
            "feature rows {} != node count {}",
            x.n_rows(),
            g.n_nodes()
        )));
    }
    require_edges(g, "h_ge")?;
    let norms: Vec<f64> = (0..g.n_nodes())
        .map(|i| x.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut sum = 0.0;
    let mut total = 0usize;
    for u in 0..g.n_nodes() as NodeId {
        for &v in g.neighbors(u) {
            if g.directed() || u <= v {
                total += 1;
                let nu = norms[u as usize];
                let nv = norms[v as usize];
                if nu > 0.0 && nv > 0.0 {
                    let dot: f64 = x
                        .row(u as usize)
                        .iter()
                        .zip(x.row(v as usize))
                        .map(|(a, b)| a * b)
                        .sum();
                    sum += dot / (nu * nv);
                }
            }
        }
    }
    Ok(sum / total as f64)
}

/// Guard on the `same >= diff` comparison in [`h_agg`]. Balanced
/// neighborhoods produce exact rational ties whose float sign depends on
/// summation order; ties satisfy the condition by definition, so anything
/// within this band counts.
const H_AGG_TIE_EPS: f64 = 1e-12;

/// Aggregation homophily: the fraction of nodes whose mean post-aggregation
/// similarity to same-label nodes is at least the mean to different-label
/// nodes. Similarities are rows of `(ÂZ)(ÂZ)ᵀ`, evaluated per node through
/// C-dimensional aggregated label vectors, never as a dense matrix. A node
/// whose same- or different-label multiset is empty counts toward the
/// numerator (the comparison is vacuous).
pub fn h_agg(g: &Graph, kind: AggregationKind, include_self: bool) -> Result<f64> {
    require_edges(g, "h_agg")?;
    let z = one_hot_labels(g);
    let r = aggregate_low_pass(g, &z, kind)?;
    let c = g.n_classes();
    let n = g.n_nodes();

    // per-class sums of aggregated label vectors and class sizes
    let mut class_sum = vec![0.0f64; c * c];
    let mut class_count = vec![0usize; c];
    for v in 0..n {
        let k = g.label(v as NodeId) as usize;
        class_count[k] += 1;
        for (acc, val) in class_sum[k * c..(k + 1) * c].iter_mut().zip(r.row(v)) {
            *acc += val;
        }
    }
    let grand_sum: Vec<f64> = (0..c)
        .map(|j| (0..c).map(|k| class_sum[k * c + j]).sum::<f64>())
        .collect();

    let mut satisfied = 0usize;
    for v in 0..n {
        let k = g.label(v as NodeId) as usize;
        let rv = r.row(v);
        let mut same_sum = class_sum[k * c..(k + 1) * c].to_vec();
        let mut same_n = class_count[k];
        if !include_self {
            for (acc, val) in same_sum.iter_mut().zip(rv) {
                *acc -= val;
            }
            same_n -= 1;
        }
        let diff_n = n - class_count[k];
        if same_n == 0 || diff_n == 0 {
            satisfied += 1;
            continue;
        }
        let same_mean: f64 =
            rv.iter().zip(&same_sum).map(|(a, b)| a * b).sum::<f64>() / same_n as f64;
        let diff_mean: f64 = rv
            .iter()
            .zip(grand_sum.iter().zip(&class_sum[k * c..(k + 1) * c]))
            .map(|(a, (g_, s))| a * (g_ - s))
            .sum::<f64>()
            / diff_n as f64;
        if same_mean >= diff_mean - H_AGG_TIE_EPS {
            satisfied += 1;
        }
    }
    Ok(satisfied as f64 / n as f64)
}

fn degree_class_shares(g: &Graph) -> (Vec<f64>, f64) {
    let c = g.n_classes();
    let mut class_deg = vec![0u64; c];
    for v in 0..g.n_nodes() as NodeId {
        class_deg[g.label(v) as usize] += g.degree(v) as u64;
    }
    let total: u64 = class_deg.iter().sum();
    (
        class_deg.iter().map(|&d| d as f64 / total as f64).collect(),
        total as f64,
    )
}

/// Adjusted homophily: edge homophily recentred by the degree-weighted class
/// shares. Can be negative on heterophilic graphs.
pub fn h_adj(g: &Graph) -> Result<f64> {
    require_edges(g, "h_adj")?;
    let (shares, _) = degree_class_shares(g);
    let sq: f64 = shares.iter().map(|p| p * p).sum();
    if 1.0 - sq <= 0.0 {
        return Err(Error::UndefinedMetric {
            metric: "h_adj",
            reason: "a single class carries all degree mass".into(),
        });
    }
    Ok((h_edge(g)? - sq) / (1.0 - sq))
}

/// Label informativeness: `2 − H(joint)/H(marginal)` of the edge-endpoint
/// label distribution, with `0·log 0 := 0`.
pub fn label_informativeness(g: &Graph) -> Result<f64> {
    require_edges(g, "li")?;
    let c = g.n_classes();
    let (shares, total) = degree_class_shares(g);
    let denom: f64 = shares
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum();
    if denom == 0.0 {
        return Err(Error::UndefinedMetric {
            metric: "li",
            reason: "all degree mass is in one class".into(),
        });
    }
    let mut joint = vec![0u64; c * c];
    for u in 0..g.n_nodes() as NodeId {
        for &v in g.neighbors(u) {
            joint[g.label(u) as usize * c + g.label(v) as usize] += 1;
        }
    }
    let numer: f64 = joint
        .iter()
        .filter(|&&cnt| cnt > 0)
        .map(|&cnt| {
            let p = cnt as f64 / total;
            p * p.ln()
        })
        .sum();
    Ok(2.0 - numer / denom)
}
