//! Shared test oracles: dense direct-definition homophily metrics and a
//! sampling oracle for generalized χ² variables. Everything here is written
//! against the definitions, independent of the library's streaming
//! implementations.

#![allow(dead_code)]
// index loops below deliberately transcribe the textbook definitions
#![allow(clippy::needless_range_loop)]

use homoscope_core::graph::{Graph, LoadOptions, NodeId};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Dense adjacency with labels, built once per oracle evaluation.
pub struct DenseOracle {
    pub n: usize,
    pub c: usize,
    pub adj: Vec<Vec<bool>>,
    pub labels: Vec<u32>,
}

impl DenseOracle {
    pub fn from_graph(g: &Graph) -> Self {
        let n = g.n_nodes();
        let mut adj = vec![vec![false; n]; n];
        for u in 0..n as NodeId {
            for &v in g.neighbors(u) {
                adj[u as usize][v as usize] = true;
            }
        }
        DenseOracle {
            n,
            c: g.n_classes(),
            adj,
            labels: g.labels().to_vec(),
        }
    }

    fn degree(&self, v: usize) -> usize {
        self.adj[v].iter().filter(|&&b| b).count()
    }

    pub fn h_edge(&self) -> f64 {
        let mut intra = 0usize;
        let mut total = 0usize;
        for u in 0..self.n {
            for v in u..self.n {
                if self.adj[u][v] {
                    total += 1;
                    if self.labels[u] == self.labels[v] {
                        intra += 1;
                    }
                }
            }
        }
        intra as f64 / total as f64
    }

    pub fn h_node(&self) -> f64 {
        let mut sum = 0.0;
        let mut counted = 0usize;
        for v in 0..self.n {
            let d = self.degree(v);
            if d == 0 {
                continue;
            }
            let same = (0..self.n)
                .filter(|&u| self.adj[v][u] && self.labels[u] == self.labels[v])
                .count();
            sum += same as f64 / d as f64;
            counted += 1;
        }
        sum / counted as f64
    }

    pub fn h_class(&self) -> f64 {
        let mut total = 0.0;
        for k in 0..self.c {
            let members: Vec<usize> = (0..self.n)
                .filter(|&v| self.labels[v] == k as u32)
                .collect();
            let deg: usize = members.iter().map(|&v| self.degree(v)).sum();
            if deg == 0 {
                continue;
            }
            let same: usize = members
                .iter()
                .map(|&v| {
                    (0..self.n)
                        .filter(|&u| self.adj[v][u] && self.labels[u] == self.labels[v])
                        .count()
                })
                .sum();
            let h_k = same as f64 / deg as f64;
            total += (h_k - members.len() as f64 / self.n as f64).max(0.0);
        }
        total / (self.c as f64 - 1.0)
    }

    pub fn h_ge(&self, features: &[Vec<f64>]) -> f64 {
        let cosine = |a: &[f64], b: &[f64]| -> f64 {
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            if na == 0.0 || nb == 0.0 {
                return 0.0;
            }
            a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)
        };
        let mut sum = 0.0;
        let mut total = 0usize;
        for u in 0..self.n {
            for v in u..self.n {
                if self.adj[u][v] {
                    total += 1;
                    sum += cosine(&features[u], &features[v]);
                }
            }
        }
        sum / total as f64
    }

    /// Dense post-aggregation similarity: S = (ÂZ)(ÂZ)ᵀ with the random-walk
    /// operator, means taken over explicit multisets (self included).
    pub fn h_agg(&self) -> f64 {
        let mut r = vec![vec![0.0f64; self.c]; self.n];
        for v in 0..self.n {
            let d = self.degree(v) as f64;
            for u in 0..self.n {
                if self.adj[v][u] {
                    r[v][self.labels[u] as usize] += 1.0 / d;
                }
            }
        }
        let mut s = vec![vec![0.0f64; self.n]; self.n];
        for v in 0..self.n {
            for u in 0..self.n {
                s[v][u] = r[v].iter().zip(&r[u]).map(|(a, b)| a * b).sum();
            }
        }
        let mut satisfied = 0usize;
        for v in 0..self.n {
            let mut same = Vec::new();
            let mut diff = Vec::new();
            for u in 0..self.n {
                if self.labels[u] == self.labels[v] {
                    same.push(s[v][u]);
                } else {
                    diff.push(s[v][u]);
                }
            }
            if same.is_empty() || diff.is_empty() {
                satisfied += 1;
                continue;
            }
            let m_same = same.iter().sum::<f64>() / same.len() as f64;
            let m_diff = diff.iter().sum::<f64>() / diff.len() as f64;
            // exact rational ties satisfy the condition; the guard keeps the
            // float sign of a tie from depending on summation order
            if m_same >= m_diff - 1e-12 {
                satisfied += 1;
            }
        }
        satisfied as f64 / self.n as f64
    }

    fn class_degree_shares(&self) -> Vec<f64> {
        let total: usize = (0..self.n).map(|v| self.degree(v)).sum();
        (0..self.c)
            .map(|k| {
                (0..self.n)
                    .filter(|&v| self.labels[v] == k as u32)
                    .map(|v| self.degree(v))
                    .sum::<usize>() as f64
                    / total as f64
            })
            .collect()
    }

    pub fn h_adj(&self) -> f64 {
        let sq: f64 = self.class_degree_shares().iter().map(|p| p * p).sum();
        (self.h_edge() - sq) / (1.0 - sq)
    }

    pub fn li(&self) -> f64 {
        let total: usize = (0..self.n).map(|v| self.degree(v)).sum();
        let shares = self.class_degree_shares();
        let denom: f64 = shares
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum();
        let mut joint = vec![vec![0usize; self.c]; self.c];
        for u in 0..self.n {
            for v in 0..self.n {
                if self.adj[u][v] {
                    joint[self.labels[u] as usize][self.labels[v] as usize] += 1;
                }
            }
        }
        let numer: f64 = joint
            .iter()
            .flatten()
            .filter(|&&cnt| cnt > 0)
            .map(|&cnt| {
                let p = cnt as f64 / total as f64;
                p * p.ln()
            })
            .sum();
        2.0 - numer / denom
    }
}

/// Random connected-enough labeled graph: ER edges, isolated nodes patched
/// with one random edge, every class forced nonempty.
pub fn random_graph(rng: &mut ChaCha8Rng, max_n: usize) -> Graph {
    let n = rng.gen_range(5..=max_n);
    let c = rng.gen_range(2..=4.min(n));
    let p = rng.gen_range(0.08..0.4);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(p) {
                edges.push((u as NodeId, v as NodeId));
            }
        }
    }
    let mut deg = vec![0usize; n];
    for &(u, v) in &edges {
        deg[u as usize] += 1;
        deg[v as usize] += 1;
    }
    for v in 0..n {
        if deg[v] == 0 {
            let u = loop {
                let u = rng.gen_range(0..n);
                if u != v {
                    break u;
                }
            };
            edges.push((v as NodeId, u as NodeId));
            deg[v] += 1;
            deg[u] += 1;
        }
    }
    let mut labels: Vec<u32> = (0..n).map(|_| rng.gen_range(0..c) as u32).collect();
    for k in 0..c {
        labels[k] = k as u32;
    }
    Graph::from_edges(&edges, labels, LoadOptions::default()).unwrap()
}

/// One draw of Σ wᵢYᵢ + X + offset for a generalized χ² spec.
pub fn sample_gchi2(spec: &homoscope_core::gchi2::GChi2Spec, rng: &mut ChaCha8Rng) -> f64 {
    let mut q = spec.offset;
    for t in &spec.terms {
        let z: f64 = StandardNormal.sample(rng);
        let mut y = (z + t.noncentrality.sqrt()).powi(2);
        if t.dof > 1 {
            let g = Gamma::new((t.dof - 1) as f64 / 2.0, 2.0).unwrap();
            y += g.sample(rng);
        }
        q += t.weight * y;
    }
    if spec.gaussian_sd > 0.0 {
        let z: f64 = StandardNormal.sample(rng);
        q += spec.gaussian_mean + spec.gaussian_sd * z;
    }
    q
}

/// Monte Carlo CDF estimate with fixed per-chunk streams (thread-safe and
/// deterministic), returning the estimate and its standard error.
pub fn mc_gchi2_cdf(
    spec: &homoscope_core::gchi2::GChi2Spec,
    x: f64,
    n_draws: u64,
    seed: u64,
) -> (f64, f64) {
    use rayon::prelude::*;
    const CHUNK: u64 = 1 << 16;
    let n_chunks = n_draws.div_ceil(CHUNK);
    let hits: u64 = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk + 1);
            let count = CHUNK.min(n_draws - chunk * CHUNK);
            (0..count)
                .filter(|_| sample_gchi2(spec, &mut rng) <= x)
                .count() as u64
        })
        .sum();
    let p = hits as f64 / n_draws as f64;
    (p, (p * (1.0 - p) / n_draws as f64).sqrt())
}
