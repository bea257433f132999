//! Classifier-based performance metrics: training-free classifiers (kernel
//! regression under an NNGP or linear kernel, Gaussian naive Bayes), the
//! subsample-repeat protocol that turns their accuracies into a one-sided
//! p-value, and the intra/inter-distance proportion statistic over supplied
//! embeddings.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{aggregate_low_pass, AggregationKind, FeatureMatrix, Graph, NodeId};
use crate::stats::{welch_ttest, Alternative, TTestResult};

/// Which training-free classifier scores the features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classifier {
    /// Kernel regression with the ReLU NNGP kernel (non-linear).
    KrNngp,
    /// Kernel regression with the cosine kernel (linear).
    KrLinear,
    /// Gaussian naive Bayes.
    Gnb,
}

/// Configuration of the subsample-repeat protocol.
#[derive(Debug, Clone, Serialize)]
pub struct CpmConfig {
    pub n_sample: usize,
    pub train_fraction: f64,
    pub repeats: usize,
    pub seed: u64,
    pub classifier: Classifier,
    pub aggregation: AggregationKind,
    pub ridge: f64,
}

impl Default for CpmConfig {
    fn default() -> Self {
        CpmConfig {
            n_sample: 500,
            train_fraction: 0.6,
            repeats: 100,
            seed: 0,
            classifier: Classifier::KrNngp,
            aggregation: AggregationKind::random_walk(),
            ridge: 1e-8,
        }
    }
}

impl CpmConfig {
    fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Invalid(format!(
                "train_fraction {} outside (0, 1)",
                self.train_fraction
            )));
        }
        if self.repeats < 2 {
            return Err(Error::Invalid("need at least 2 repeats".into()));
        }
        if self.n_sample < 2 {
            return Err(Error::Invalid("n_sample must be at least 2".into()));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::Invalid("ridge must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Loose 0.5-threshold call on the paper-convention p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictNt05 {
    FavorsGraphAware,
    FavorsGraphAgnostic,
}

/// Statistically significant call at the 0.05 / 0.95 cuts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictSst005 {
    GraphAwareBetter,
    GraphAgnosticBetter,
    Inconclusive,
}

/// Paired accuracy samples and the test outcome.
///
/// `p_value` is the one-sided p for H₁: Acc(aggregated) < Acc(raw) — the
/// convention reported in the literature, where values near 1 favor the
/// graph-aware side. `p_reversed` is the complementary one-sided p.
#[derive(Debug, Clone, Serialize)]
pub struct CpmReport {
    pub acc_x: Vec<f64>,
    pub acc_h: Vec<f64>,
    pub t_stat: f64,
    pub dof: f64,
    pub p_value: f64,
    pub p_reversed: f64,
    pub verdict_nt05: VerdictNt05,
    pub verdict_sst005: VerdictSst005,
    pub n_sample_used: usize,
    /// True when `n_sample` exceeded the labeled-node count and was clamped.
    pub clamped: bool,
}

/// ReLU NNGP kernel
/// `(uᵀv·(π − θ) + √(‖u‖²‖v‖² − (uᵀv)²)) / 2π` with `θ` the angle between
/// `u` and `v`. The angle is taken through `atan2`, which equals the
/// arccos of the clamped cosine and is exact at the parallel and
/// antiparallel edges. Zero-norm inputs give 0.
pub fn nngp_kernel(u: &[f64], v: &[f64]) -> f64 {
    let uu: f64 = u.iter().map(|a| a * a).sum();
    let vv: f64 = v.iter().map(|a| a * a).sum();
    if uu == 0.0 || vv == 0.0 {
        return 0.0;
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let cross = (uu * vv - dot * dot).max(0.0).sqrt();
    let theta = cross.atan2(dot);
    (dot * (std::f64::consts::PI - theta) + cross) / (2.0 * std::f64::consts::PI)
}

/// Cosine similarity; zero-norm inputs give 0.
pub fn linear_kernel(u: &[f64], v: &[f64]) -> f64 {
    let uu: f64 = u.iter().map(|a| a * a).sum();
    let vv: f64 = v.iter().map(|a| a * a).sum();
    if uu == 0.0 || vv == 0.0 {
        return 0.0;
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    (dot / (uu * vv).sqrt()).clamp(-1.0, 1.0)
}

fn argmax_row(row: &[f64]) -> u32 {
    let mut best = 0usize;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best as u32
}

/// Kernel regression: solve `(K_train + jitter·I)·A = Z_train` and predict
/// `argmax` of `K_test_train·A` per row, ties to the lowest class id. The
/// jitter is `ridge` times the mean diagonal of `K_train`, so `ridge = 0`
/// solves the plain system.
pub fn kernel_regression_predict(
    k_train: &DMatrix<f64>,
    k_test_train: &DMatrix<f64>,
    z_train: &DMatrix<f64>,
    ridge: f64,
) -> Result<Vec<u32>> {
    let n = k_train.nrows();
    if k_train.ncols() != n || k_test_train.ncols() != n || z_train.nrows() != n {
        return Err(Error::Invalid("kernel regression shape mismatch".into()));
    }
    let mut system = k_train.clone();
    if ridge > 0.0 {
        let jitter = ridge * system.diagonal().mean();
        for i in 0..n {
            system[(i, i)] += jitter;
        }
    }
    let alpha = system
        .lu()
        .solve(z_train)
        .ok_or_else(|| Error::Solver("train Gram matrix is singular; increase --ridge".into()))?;
    let scores = k_test_train * alpha;
    Ok((0..scores.nrows())
        .map(|i| argmax_row(scores.row(i).transpose().as_slice()))
        .collect())
}

/// Gaussian naive Bayes: per-class feature Gaussians with a shared variance
/// floor of `1e-9` times the largest overall feature variance, class priors
/// from the training frequencies, `argmax` log-posterior with ties to the
/// lowest class id. Every class in `0..n_classes` must appear in training.
pub fn gnb_fit_predict(
    x_train: &FeatureMatrix,
    y_train: &[u32],
    n_classes: usize,
    x_test: &FeatureMatrix,
) -> Result<Vec<u32>> {
    let n = x_train.n_rows();
    let f = x_train.n_cols();
    if y_train.len() != n || x_test.n_cols() != f {
        return Err(Error::Invalid("naive Bayes shape mismatch".into()));
    }

    let mut counts = vec![0usize; n_classes];
    let mut means = vec![0.0f64; n_classes * f];
    for (i, &c) in y_train.iter().enumerate() {
        counts[c as usize] += 1;
        for (m, v) in means[c as usize * f..(c as usize + 1) * f]
            .iter_mut()
            .zip(x_train.row(i))
        {
            *m += v;
        }
    }
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Invalid(format!(
            "class {missing} absent from training sample"
        )));
    }
    for (c, &cnt) in counts.iter().enumerate() {
        for m in means[c * f..(c + 1) * f].iter_mut() {
            *m /= cnt as f64;
        }
    }

    let mut vars = vec![0.0f64; n_classes * f];
    for (i, &c) in y_train.iter().enumerate() {
        let mrow = &means[c as usize * f..(c as usize + 1) * f];
        for ((s, m), v) in vars[c as usize * f..(c as usize + 1) * f]
            .iter_mut()
            .zip(mrow)
            .zip(x_train.row(i))
        {
            let d = v - m;
            *s += d * d;
        }
    }
    for (c, &cnt) in counts.iter().enumerate() {
        for s in vars[c * f..(c + 1) * f].iter_mut() {
            *s /= cnt as f64;
        }
    }

    // variance floor: 1e-9 of the largest overall feature variance
    let mut grand_mean = vec![0.0f64; f];
    for i in 0..n {
        for (m, v) in grand_mean.iter_mut().zip(x_train.row(i)) {
            *m += v;
        }
    }
    for m in grand_mean.iter_mut() {
        *m /= n as f64;
    }
    let mut max_var = 0.0f64;
    for (j, gm) in grand_mean.iter().enumerate() {
        let var_j: f64 = (0..n)
            .map(|i| (x_train.get(i, j) - gm).powi(2))
            .sum::<f64>()
            / n as f64;
        max_var = max_var.max(var_j);
    }
    let floor = 1e-9 * max_var;
    for s in vars.iter_mut() {
        *s = (*s + floor).max(f64::MIN_POSITIVE);
    }

    let ln_priors: Vec<f64> = counts.iter().map(|&c| (c as f64 / n as f64).ln()).collect();

    let two_pi_ln = (2.0 * std::f64::consts::PI).ln();
    let mut out = Vec::with_capacity(x_test.n_rows());
    let mut scores = vec![0.0f64; n_classes];
    for i in 0..x_test.n_rows() {
        let x = x_test.row(i);
        for c in 0..n_classes {
            let mrow = &means[c * f..(c + 1) * f];
            let vrow = &vars[c * f..(c + 1) * f];
            let mut ll = ln_priors[c];
            for ((xv, m), s) in x.iter().zip(mrow).zip(vrow) {
                let d = xv - m;
                ll -= 0.5 * (two_pi_ln + s.ln() + d * d / s);
            }
            scores[c] = ll;
        }
        out.push(argmax_row(&scores));
    }
    Ok(out)
}

/// Draw `k` distinct values from `0..n` in random order (sparse
/// Fisher-Yates, O(k) time and space).
fn sample_without_replacement(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<NodeId> {
    debug_assert!(k <= n);
    let mut swapped: HashMap<usize, usize> = HashMap::new();
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let j = rng.gen_range(i..n);
        let vj = *swapped.get(&j).unwrap_or(&j);
        let vi = *swapped.get(&i).unwrap_or(&i);
        out.push(vj as NodeId);
        swapped.insert(j, vi);
    }
    out
}

fn one_hot(labels: &[u32], n_classes: usize) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(labels.len(), n_classes);
    for (i, &l) in labels.iter().enumerate() {
        z[(i, l as usize)] = 1.0;
    }
    z
}

fn gram(
    kernel: impl Fn(&[f64], &[f64]) -> f64,
    rows_a: &FeatureMatrix,
    rows_b: &FeatureMatrix,
) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(rows_a.n_rows(), rows_b.n_rows());
    for i in 0..rows_a.n_rows() {
        for j in 0..rows_b.n_rows() {
            k[(i, j)] = kernel(rows_a.row(i), rows_b.row(j));
        }
    }
    k
}

fn round_accuracy(
    features: &FeatureMatrix,
    labels: &[u32],
    n_classes: usize,
    n_train: usize,
    classifier: Classifier,
    ridge: f64,
) -> Result<f64> {
    let train_idx: Vec<NodeId> = (0..n_train as NodeId).collect();
    let test_idx: Vec<NodeId> = (n_train as NodeId..labels.len() as NodeId).collect();
    let y_train = &labels[..n_train];
    let y_test = &labels[n_train..];

    let predicted = match classifier {
        Classifier::Gnb => {
            let x_train = features.gather_rows(&train_idx);
            let x_test = features.gather_rows(&test_idx);
            gnb_fit_predict(&x_train, y_train, n_classes, &x_test)?
        }
        Classifier::KrNngp | Classifier::KrLinear => {
            let x_train = features.gather_rows(&train_idx);
            let x_test = features.gather_rows(&test_idx);
            let kernel = match classifier {
                Classifier::KrNngp => nngp_kernel,
                _ => linear_kernel,
            };
            let k_train = gram(kernel, &x_train, &x_train);
            let k_test_train = gram(kernel, &x_test, &x_train);
            let z_train = one_hot(y_train, n_classes);
            kernel_regression_predict(&k_train, &k_test_train, &z_train, ridge)?
        }
    };
    let correct = predicted.iter().zip(y_test).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / y_test.len() as f64)
}

/// The subsample-repeat protocol: precompute the aggregated features once,
/// then per round sample nodes without replacement, split train/test, score
/// the classifier on the raw and the aggregated features over the same
/// sample and split, and Welch-test the two accuracy vectors.
///
/// Rounds draw independent RNG streams from `(seed, round)`, so parallel and
/// serial runs agree bit for bit.
pub fn cpm_pvalue(g: &Graph, x: &FeatureMatrix, cfg: &CpmConfig) -> Result<CpmReport> {
    cfg.validate()?;
    if x.n_rows() != g.n_nodes() {
        return Err(Error::Invalid("feature rows != node count".into()));
    }
    let n = g.n_nodes();
    let n_classes = g.n_classes();
    let clamped = cfg.n_sample > n;
    let n_sample = cfg.n_sample.min(n);
    let n_train = ((cfg.train_fraction * n_sample as f64).round() as usize).clamp(1, n_sample - 1);

    let h = aggregate_low_pass(g, x, cfg.aggregation)?;
    let labels = g.labels();

    let accs: Vec<Result<(f64, f64)>> = (0..cfg.repeats)
        .into_par_iter()
        .map(|round| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(round as u64 + 1);
            let sample = sample_without_replacement(&mut rng, n, n_sample);
            let sample_labels: Vec<u32> = sample.iter().map(|&v| labels[v as usize]).collect();
            let wrap = |e: Error| Error::Classifier {
                round,
                msg: e.to_string(),
            };
            let x_round = x.gather_rows(&sample);
            let h_round = h.gather_rows(&sample);
            let acc_x = round_accuracy(
                &x_round,
                &sample_labels,
                n_classes,
                n_train,
                cfg.classifier,
                cfg.ridge,
            )
            .map_err(wrap)?;
            let acc_h = round_accuracy(
                &h_round,
                &sample_labels,
                n_classes,
                n_train,
                cfg.classifier,
                cfg.ridge,
            )
            .map_err(|e: Error| Error::Classifier {
                round,
                msg: e.to_string(),
            })?;
            Ok((acc_x, acc_h))
        })
        .collect();

    let mut acc_x = Vec::with_capacity(cfg.repeats);
    let mut acc_h = Vec::with_capacity(cfg.repeats);
    for r in accs {
        let (ax, ah) = r?;
        acc_x.push(ax);
        acc_h.push(ah);
    }

    let test = welch_ttest(&acc_h, &acc_x, Alternative::Less)?;
    let p = test.p_value;
    let verdict_nt05 = if p > 0.5 {
        VerdictNt05::FavorsGraphAware
    } else {
        VerdictNt05::FavorsGraphAgnostic
    };
    let verdict_sst005 = if p < 0.05 {
        VerdictSst005::GraphAgnosticBetter
    } else if p > 0.95 {
        VerdictSst005::GraphAwareBetter
    } else {
        VerdictSst005::Inconclusive
    };
    Ok(CpmReport {
        acc_x,
        acc_h,
        t_stat: test.t_stat,
        dof: test.dof,
        p_value: p,
        p_reversed: 1.0 - p,
        verdict_nt05,
        verdict_sst005,
        n_sample_used: n_sample,
        clamped,
    })
}

/// Configuration of the per-node distance test behind [`prop_statistic`].
#[derive(Debug, Clone, Serialize)]
pub struct PropConfig {
    /// Distance budget per side (intra and inter), sampled without
    /// replacement; all pairs when the pool is smaller.
    pub pairs_per_node: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for PropConfig {
    fn default() -> Self {
        PropConfig {
            pairs_per_node: 300,
            alpha: 0.05,
            seed: 0,
        }
    }
}

/// Proportion of nodes whose intra-class distances are significantly smaller
/// than their inter-class distances.
#[derive(Debug, Clone, Serialize)]
pub struct PropReport {
    pub prop: f64,
    pub n_significant: usize,
    /// Nodes whose test rejected neither direction at `alpha`.
    pub n_marginal_excluded: usize,
    /// Nodes that could not be tested (fewer than two distances on a side).
    pub n_unevaluated: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_node_pvalues: Option<Vec<f64>>,
}

/// Per node, Welch-test sampled intra-class against inter-class Euclidean
/// distances (one-sided, intra < inter); a node counts as significant iff
/// p < alpha. Nodes in single-member classes, or with fewer than two
/// distances on either side, are excluded from the denominator and counted
/// separately.
pub fn prop_statistic(emb: &FeatureMatrix, labels: &[u32], cfg: &PropConfig) -> Result<PropReport> {
    if emb.n_rows() != labels.len() {
        return Err(Error::Invalid("embedding rows != label count".into()));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 0.5) {
        return Err(Error::Invalid(format!(
            "alpha {} outside (0, 0.5)",
            cfg.alpha
        )));
    }
    let n = labels.len();
    let n_classes = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    if n_classes < 2 {
        return Err(Error::Invalid(
            "prop statistic needs at least two classes".into(),
        ));
    }
    let mut members: Vec<Vec<NodeId>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l as usize].push(i as NodeId);
    }

    let dist = |a: NodeId, b: NodeId| -> f64 {
        emb.row(a as usize)
            .iter()
            .zip(emb.row(b as usize))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };

    let outcomes: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|v| {
            let c = labels[v] as usize;
            let intra_pool = members[c].len() - 1;
            let inter_pool = n - members[c].len();
            if intra_pool < 2 || inter_pool < 2 {
                return None;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(v as u64 + 1);

            let k_intra = cfg.pairs_per_node.min(intra_pool);
            // sample positions in the class list, skipping v's own slot
            let own = members[c].binary_search(&(v as NodeId)).unwrap();
            let intra: Vec<f64> = sample_without_replacement(&mut rng, intra_pool, k_intra)
                .into_iter()
                .map(|p| {
                    let p = p as usize;
                    let u = members[c][if p >= own { p + 1 } else { p }];
                    dist(v as NodeId, u)
                })
                .collect();

            let k_inter = cfg.pairs_per_node.min(inter_pool);
            // inter pool indexed by rank among nodes outside class c
            let before: Vec<usize> = {
                let mut acc = Vec::with_capacity(n_classes);
                let mut run = 0usize;
                for (cls, m) in members.iter().enumerate() {
                    acc.push(run);
                    if cls != c {
                        run += m.len();
                    }
                }
                acc
            };
            let inter: Vec<f64> = sample_without_replacement(&mut rng, inter_pool, k_inter)
                .into_iter()
                .map(|p| {
                    let p = p as usize;
                    // locate the class whose block contains rank p
                    let mut cls = 0usize;
                    for k in 0..n_classes {
                        if k == c {
                            continue;
                        }
                        if p >= before[k] && p < before[k] + members[k].len() {
                            cls = k;
                            break;
                        }
                    }
                    dist(v as NodeId, members[cls][p - before[cls]])
                })
                .collect();

            let test = welch_ttest(&intra, &inter, Alternative::Less).ok()?;
            Some(test.p_value)
        })
        .collect();

    let mut n_significant = 0usize;
    let mut n_marginal = 0usize;
    let mut evaluated = 0usize;
    let mut pvalues = vec![f64::NAN; n];
    for (v, p) in outcomes.into_iter().enumerate() {
        match p {
            None => {}
            Some(p) => {
                evaluated += 1;
                pvalues[v] = p;
                if p < cfg.alpha {
                    n_significant += 1;
                } else if p <= 1.0 - cfg.alpha {
                    n_marginal += 1;
                }
            }
        }
    }
    if evaluated == 0 {
        return Err(Error::Invalid(
            "no node had enough intra/inter distances to test".into(),
        ));
    }
    Ok(PropReport {
        prop: n_significant as f64 / evaluated as f64,
        n_significant,
        n_marginal_excluded: n_marginal,
        n_unevaluated: n - evaluated,
        per_node_pvalues: Some(pvalues),
    })
}

/// One-sided Welch test for H₁: mean(props_a) < mean(props_b).
pub fn prop_pvalue(props_a: &[f64], props_b: &[f64]) -> Result<TTestResult> {
    welch_ttest(props_a, props_b, Alternative::Less)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)] // oracle code transcribes the definitions
mod tests {
    use super::*;
    use crate::graph::LoadOptions;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn nngp_kernel_closed_forms() {
        assert_eq!(nngp_kernel(&[1.0, 1.0], &[1.0, 1.0]), 1.0);
        assert!((nngp_kernel(&[1.0, 0.0], &[0.0, 1.0]) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert_eq!(nngp_kernel(&[1.0, 0.0], &[-1.0, 0.0]), 0.0);
        assert_eq!(nngp_kernel(&[0.0, 0.0], &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn nngp_diagonal_is_half_norm_squared() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let u: Vec<f64> = (0..6).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let nn: f64 = u.iter().map(|a| a * a).sum();
            assert!((nngp_kernel(&u, &u) - nn / 2.0).abs() <= 1e-12 * nn.max(1.0));
        }
    }

    #[test]
    fn kernels_are_symmetric() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let u: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let v: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            assert!((nngp_kernel(&u, &v) - nngp_kernel(&v, &u)).abs() < 1e-12);
            assert!((linear_kernel(&u, &v) - linear_kernel(&v, &u)).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_kernel_values() {
        assert!((linear_kernel(&[1.0, 2.0], &[2.0, 1.0]) - 0.8).abs() < 1e-15);
        assert!((linear_kernel(&[3.0, 4.0], &[3.0, 4.0]) - 1.0).abs() < 1e-12);
        assert_eq!(linear_kernel(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert_eq!(linear_kernel(&[0.0], &[1.0]), 0.0);
    }

    #[test]
    fn kernel_regression_identity_gram() {
        let k_train = DMatrix::identity(3, 3);
        let z = one_hot(&[2, 0, 1], 3);
        let mut k_test = DMatrix::zeros(1, 3);
        k_test[(0, 0)] = 1.0;
        let labels = kernel_regression_predict(&k_train, &k_test, &z, 0.0).unwrap();
        assert_eq!(labels, vec![2]); // picks the label of train node 0
    }

    #[test]
    fn kernel_regression_zero_row_tie_breaks_low() {
        let k_train = DMatrix::identity(2, 2);
        let z = one_hot(&[1, 0], 2);
        let k_test = DMatrix::zeros(1, 2);
        let labels = kernel_regression_predict(&k_train, &k_test, &z, 0.0).unwrap();
        assert_eq!(labels, vec![0]);
    }

    #[test]
    fn kernel_regression_singular_reports_solver_error() {
        let k_train = DMatrix::zeros(2, 2);
        let z = one_hot(&[0, 1], 2);
        let k_test = DMatrix::zeros(1, 2);
        let err = kernel_regression_predict(&k_train, &k_test, &z, 0.0).unwrap_err();
        assert!(matches!(err, Error::Solver(_)));
    }

    #[test]
    fn gnb_separated_means() {
        let x_train = FeatureMatrix::from_rows(4, 1, vec![0.1, -0.1, 10.0, 9.9]).unwrap();
        let x_test = FeatureMatrix::from_rows(2, 1, vec![0.0, 10.05]).unwrap();
        let labels = gnb_fit_predict(&x_train, &[0, 0, 1, 1], 2, &x_test).unwrap();
        assert_eq!(labels, vec![0, 1]);
    }

    #[test]
    fn gnb_symmetric_tie_breaks_low() {
        // both classes share the same single duplicated training point
        let x_train = FeatureMatrix::from_rows(2, 1, vec![1.0, 1.0]).unwrap();
        let x_test = FeatureMatrix::from_rows(1, 1, vec![1.0]).unwrap();
        let labels = gnb_fit_predict(&x_train, &[0, 1], 2, &x_test).unwrap();
        assert_eq!(labels, vec![0]);
    }

    #[test]
    fn gnb_missing_class_is_an_error() {
        let x_train = FeatureMatrix::from_rows(2, 1, vec![1.0, 2.0]).unwrap();
        let x_test = FeatureMatrix::from_rows(1, 1, vec![1.0]).unwrap();
        assert!(gnb_fit_predict(&x_train, &[0, 0], 2, &x_test).is_err());
    }

    #[test]
    fn gnb_matches_log_posterior_oracle() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let n = 30usize;
            let data: Vec<f64> = (0..n * 3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let x_train = FeatureMatrix::from_rows(n, 3, data).unwrap();
            let y: Vec<u32> = (0..n).map(|i| (i % 2) as u32).collect();
            let test_data: Vec<f64> = (0..15).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let x_test = FeatureMatrix::from_rows(5, 3, test_data).unwrap();
            let got = gnb_fit_predict(&x_train, &y, 2, &x_test).unwrap();

            // oracle: direct density evaluation with the same floor rule
            let mut stats = vec![(vec![0.0; 3], vec![0.0; 3], 0usize); 2];
            for (i, &c) in y.iter().enumerate() {
                stats[c as usize].2 += 1;
                for j in 0..3 {
                    stats[c as usize].0[j] += x_train.get(i, j);
                }
            }
            for s in stats.iter_mut() {
                for m in s.0.iter_mut() {
                    *m /= s.2 as f64;
                }
            }
            for (i, &c) in y.iter().enumerate() {
                for j in 0..3 {
                    let d = x_train.get(i, j) - stats[c as usize].0[j];
                    stats[c as usize].1[j] += d * d;
                }
            }
            for s in stats.iter_mut() {
                for v in s.1.iter_mut() {
                    *v /= s.2 as f64;
                }
            }
            let mut max_var = 0.0f64;
            for j in 0..3 {
                let mean: f64 = (0..n).map(|i| x_train.get(i, j)).sum::<f64>() / n as f64;
                let var: f64 = (0..n)
                    .map(|i| (x_train.get(i, j) - mean).powi(2))
                    .sum::<f64>()
                    / n as f64;
                max_var = max_var.max(var);
            }
            let floor = 1e-9 * max_var;
            for ti in 0..5 {
                let mut best = (f64::NEG_INFINITY, 0u32);
                for c in 0..2 {
                    let mut ll = (stats[c].2 as f64 / n as f64).ln();
                    for j in 0..3 {
                        let var = stats[c].1[j] + floor;
                        let d = x_test.get(ti, j) - stats[c].0[j];
                        ll -= 0.5 * ((2.0 * PI * var).ln() + d * d / var);
                    }
                    if ll > best.0 {
                        best = (ll, c as u32);
                    }
                }
                assert_eq!(got[ti], best.1);
            }
        }
    }

    fn two_cluster_embedding(n_per: usize, gap: f64, seed: u64) -> (FeatureMatrix, Vec<u32>) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for c in 0..2u32 {
            for _ in 0..n_per {
                data.push(c as f64 * gap + rng.gen_range(-0.1..0.1));
                data.push(rng.gen_range(-0.1..0.1));
                labels.push(c);
            }
        }
        (
            FeatureMatrix::from_rows(2 * n_per, 2, data).unwrap(),
            labels,
        )
    }

    #[test]
    fn prop_tight_separated_clusters_is_one() {
        let (emb, labels) = two_cluster_embedding(20, 50.0, 4);
        let report = prop_statistic(&emb, &labels, &PropConfig::default()).unwrap();
        assert_eq!(report.prop, 1.0);
        assert_eq!(report.n_unevaluated, 0);
    }

    #[test]
    fn prop_random_labels_near_zero() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let n = 80;
        let data: Vec<f64> = (0..n * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let emb = FeatureMatrix::from_rows(n, 3, data).unwrap();
        let labels: Vec<u32> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let report = prop_statistic(&emb, &labels, &PropConfig::default()).unwrap();
        assert!(report.prop < 0.2, "prop = {}", report.prop);
    }

    #[test]
    fn prop_matches_exhaustive_oracle_on_small_input() {
        // 6 nodes, pools small enough that sampling covers all pairs
        let emb = FeatureMatrix::from_rows(6, 1, vec![0.0, 0.1, 0.2, 5.0, 5.1, 5.2]).unwrap();
        let labels = vec![0, 0, 0, 1, 1, 1];
        let report = prop_statistic(
            &emb,
            &labels,
            &PropConfig {
                pairs_per_node: 300,
                alpha: 0.05,
                seed: 1,
            },
        )
        .unwrap();
        let pvals = report.per_node_pvalues.unwrap();
        // oracle: all-pairs distances through the stats module directly
        for v in 0..6usize {
            let mut intra = Vec::new();
            let mut inter = Vec::new();
            for u in 0..6usize {
                if u == v {
                    continue;
                }
                let d = (emb.get(v, 0) - emb.get(u, 0)).abs();
                if labels[u] == labels[v] {
                    intra.push(d);
                } else {
                    inter.push(d);
                }
            }
            let expect = welch_ttest(&intra, &inter, Alternative::Less)
                .unwrap()
                .p_value;
            assert!((pvals[v] - expect).abs() < 1e-12, "node {v}");
        }
        assert_eq!(report.prop, 1.0);
    }

    #[test]
    fn prop_invariant_under_rotation() {
        let (emb, labels) = two_cluster_embedding(15, 3.0, 8);
        let cfg = PropConfig::default();
        let base = prop_statistic(&emb, &labels, &cfg).unwrap();
        // rigid rotation by 40 degrees
        let (s, c) = (40.0f64.to_radians().sin(), 40.0f64.to_radians().cos());
        let rotated: Vec<f64> = (0..emb.n_rows())
            .flat_map(|i| {
                let r = emb.row(i);
                [c * r[0] - s * r[1], s * r[0] + c * r[1]]
            })
            .collect();
        let emb_rot = FeatureMatrix::from_rows(emb.n_rows(), 2, rotated).unwrap();
        let rot = prop_statistic(&emb_rot, &labels, &cfg).unwrap();
        assert_eq!(base.prop, rot.prop);
        assert_eq!(base.n_significant, rot.n_significant);
    }

    #[test]
    fn prop_small_classes_excluded() {
        // class 2 is a singleton, class 1 offers one intra distance:
        // only the three class-0 nodes are testable
        let emb = FeatureMatrix::from_rows(6, 1, vec![0.0, 0.1, 0.2, 5.0, 5.1, 9.0]).unwrap();
        let labels = vec![0, 0, 0, 1, 1, 2];
        let report = prop_statistic(&emb, &labels, &PropConfig::default()).unwrap();
        assert_eq!(report.n_unevaluated, 3);
        assert!(report.n_significant + report.n_marginal_excluded <= 3);

        // every node untestable is an error
        let emb = FeatureMatrix::from_rows(3, 1, vec![0.0, 0.1, 9.0]).unwrap();
        assert!(prop_statistic(&emb, &[0, 0, 1], &PropConfig::default()).is_err());
    }

    #[test]
    fn prop_pvalue_wrapper() {
        let a = [0.9, 0.91, 0.92];
        let b = [0.5, 0.52, 0.51];
        let r = prop_pvalue(&a, &b).unwrap();
        assert!(r.p_value > 0.99);
        let r = prop_pvalue(&a, &a).unwrap();
        assert_eq!(r.p_value, 0.5);
    }

    fn homophilous_fixture() -> (Graph, FeatureMatrix) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
        let n_per = 60usize;
        let mut edges = Vec::new();
        let n = 2 * n_per;
        // mostly intra-class ring plus a few cross edges
        for c in 0..2usize {
            let base = c * n_per;
            for i in 0..n_per {
                edges.push(((base + i) as NodeId, (base + (i + 1) % n_per) as NodeId));
                edges.push(((base + i) as NodeId, (base + (i + 7) % n_per) as NodeId));
            }
        }
        for _ in 0..6 {
            edges.push((
                rng.gen_range(0..n_per) as NodeId,
                rng.gen_range(n_per..n) as NodeId,
            ));
        }
        let labels: Vec<u32> = (0..n).map(|i| (i / n_per) as u32).collect();
        let g = Graph::from_edges(&edges, labels, LoadOptions::default()).unwrap();
        let data: Vec<f64> = (0..n)
            .flat_map(|i| {
                let m = if i < n_per { -1.0 } else { 1.0 };
                [m + rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)]
            })
            .collect();
        let x = FeatureMatrix::from_rows(n, 2, data).unwrap();
        (g, x)
    }

    #[test]
    fn cpm_reproducible_and_thread_independent() {
        let (g, x) = homophilous_fixture();
        let cfg = CpmConfig {
            n_sample: 60,
            repeats: 8,
            seed: 7,
            ..Default::default()
        };
        let a = cpm_pvalue(&g, &x, &cfg).unwrap();
        let b = cpm_pvalue(&g, &x, &cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );

        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = pool.install(|| cpm_pvalue(&g, &x, &cfg).unwrap());
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap()
        );
    }

    #[test]
    fn cpm_acc_x_ignores_edges() {
        let (g, x) = homophilous_fixture();
        let cfg = CpmConfig {
            n_sample: 60,
            repeats: 6,
            seed: 3,
            ..Default::default()
        };
        let base = cpm_pvalue(&g, &x, &cfg).unwrap();

        // rewire: shift every edge's endpoint within its class block
        let n = g.n_nodes() as NodeId;
        let mut edges = Vec::new();
        for u in 0..n {
            for &v in g.neighbors(u) {
                if u <= v {
                    let shifted = if v < 60 {
                        (v + 13) % 60
                    } else {
                        60 + (v - 60 + 13) % 60
                    };
                    if u != shifted {
                        edges.push((u, shifted));
                    }
                }
            }
        }
        let g2 = Graph::from_edges(&edges, g.labels().to_vec(), LoadOptions::default()).unwrap();
        let rewired = cpm_pvalue(&g2, &x, &cfg).unwrap();
        assert_eq!(base.acc_x, rewired.acc_x);
    }

    #[test]
    fn cpm_aggregation_equal_to_raw_is_inconclusive() {
        // 2-cliques with identical features per clique: H == X exactly
        let edges = vec![(0, 1), (2, 3), (4, 5), (6, 7)];
        let labels = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let g = Graph::from_edges(&edges, labels, LoadOptions::default()).unwrap();
        let data: Vec<f64> = (0..8)
            .flat_map(|i| {
                let pair = (i / 2) as f64;
                [pair, -pair]
            })
            .collect();
        let x = FeatureMatrix::from_rows(8, 2, data).unwrap();
        let cfg = CpmConfig {
            n_sample: 8,
            repeats: 10,
            seed: 5,
            classifier: Classifier::Gnb,
            ..Default::default()
        };
        let report = cpm_pvalue(&g, &x, &cfg).unwrap();
        assert_eq!(report.acc_x, report.acc_h);
        assert_eq!(report.p_value, 0.5);
        assert_eq!(report.verdict_sst005, VerdictSst005::Inconclusive);
        assert!(!report.clamped);
    }

    #[test]
    fn cpm_clamps_oversized_sample() {
        let (g, x) = homophilous_fixture();
        let cfg = CpmConfig {
            n_sample: 100_000,
            repeats: 4,
            seed: 1,
            ..Default::default()
        };
        let report = cpm_pvalue(&g, &x, &cfg).unwrap();
        assert!(report.clamped);
        assert_eq!(report.n_sample_used, g.n_nodes());
    }

    #[test]
    fn sampling_without_replacement_is_uniform_enough() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut seen = [0usize; 10];
        for _ in 0..2000 {
            let s = sample_without_replacement(&mut rng, 10, 4);
            assert_eq!(s.len(), 4);
            let mut sorted = s.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 4);
            for v in s {
                seen[v as usize] += 1;
            }
        }
        // each value expected 800 times
        for (v, &cnt) in seen.iter().enumerate() {
            assert!((cnt as f64 - 800.0).abs() < 150.0, "value {v} seen {cnt}");
        }
    }
}
