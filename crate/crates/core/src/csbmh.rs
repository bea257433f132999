//! Analytical engine for the two-class contextual stochastic block model with
//! an explicit homophily parameter: filtered Gaussian parameters, the optimal
//! Bayes classifier and its error, divergence measures with their
//! decompositions, homophily sweeps with regime detection, concentration
//! bounds, and a Monte Carlo oracle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gchi2::{gchi2_cdf, normal_cdf, GChi2Spec, GChi2Term, WEIGHT_EPS};

/// Model parameters: two isotropic Gaussian classes, per-class node degrees
/// (continuous), homophily level `h`, and an optional class prior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsbmhParams {
    pub mu0: Vec<f64>,
    pub mu1: Vec<f64>,
    pub sigma0_sq: f64,
    pub sigma1_sq: f64,
    pub d0: f64,
    pub d1: f64,
    #[serde(default)]
    pub h: f64,
    #[serde(default = "default_prior")]
    pub prior_p0: f64,
}

fn default_prior() -> f64 {
    0.5
}

impl CsbmhParams {
    /// The running example configuration used throughout the sweep tests:
    /// `mu0 = [-1, 0]`, `mu1 = [0, 1]`, `sigma0_sq = 1`, `sigma1_sq = 2`,
    /// `d0 = d1 = 5`, balanced prior.
    pub fn standard() -> CsbmhParams {
        CsbmhParams {
            mu0: vec![-1.0, 0.0],
            mu1: vec![0.0, 1.0],
            sigma0_sq: 1.0,
            sigma1_sq: 2.0,
            d0: 5.0,
            d1: 5.0,
            h: 0.5,
            prior_p0: 0.5,
        }
    }

    pub fn with_h(mut self, h: f64) -> CsbmhParams {
        self.h = h;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu0.len() != self.mu1.len() || self.mu0.is_empty() {
            return Err(Error::Invalid(
                "mu0 and mu1 must be nonempty and equal-length".into(),
            ));
        }
        if !(self.sigma0_sq > 0.0) || !(self.sigma1_sq > 0.0) {
            return Err(Error::Invalid("variances must be positive".into()));
        }
        if !(self.d0 > 0.0) || !(self.d1 > 0.0) {
            return Err(Error::Invalid("degrees must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.h) {
            return Err(Error::Invalid(format!("h = {} outside [0, 1]", self.h)));
        }
        if !(self.prior_p0 > 0.0 && self.prior_p0 < 1.0) {
            return Err(Error::Invalid(format!(
                "prior_p0 = {} outside (0, 1)",
                self.prior_p0
            )));
        }
        Ok(())
    }
}

/// JSON-file configuration for sweeps and the model-graph generator: the
/// model parameters plus an optional explicit homophily grid.
#[derive(Debug, Clone, Deserialize)]
pub struct SweepConfig {
    #[serde(flatten)]
    pub params: CsbmhParams,
    #[serde(default)]
    pub h_grid: Option<Vec<f64>>,
}

impl SweepConfig {
    pub fn load(path: &std::path::Path) -> Result<SweepConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })?;
        let config: SweepConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.into(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        config.params.validate()?;
        if let Some(grid) = &config.h_grid {
            if grid.is_empty() {
                return Err(Error::Invalid("h_grid must be nonempty".into()));
            }
        }
        Ok(config)
    }
}

/// Filter channel of a feature distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Channel {
    /// Full-pass: the raw features.
    Fp,
    /// Low-pass: neighborhood means.
    Lp,
    /// High-pass: feature minus neighborhood mean.
    Hp,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Fp, Channel::Lp, Channel::Hp];

    pub fn as_str(&self) -> &'static str {
        match self {
            Channel::Fp => "FP",
            Channel::Lp => "LP",
            Channel::Hp => "HP",
        }
    }
}

/// Two isotropic Gaussians: the state of one filter channel.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPair {
    pub mean0: Vec<f64>,
    pub mean1: Vec<f64>,
    pub var0: f64,
    pub var1: f64,
    pub channel: Channel,
}

impl GaussianPair {
    pub fn dim(&self) -> usize {
        self.mean0.len()
    }

    /// Squared Euclidean distance between the class means.
    pub fn mean_dist_sq(&self) -> f64 {
        self.mean0
            .iter()
            .zip(&self.mean1)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// The three filtered channels of one parameter set.
#[derive(Debug, Clone)]
pub struct FilteredChannels {
    pub fp: GaussianPair,
    pub lp: GaussianPair,
    pub hp: GaussianPair,
}

impl FilteredChannels {
    pub fn get(&self, c: Channel) -> &GaussianPair {
        match c {
            Channel::Fp => &self.fp,
            Channel::Lp => &self.lp,
            Channel::Hp => &self.hp,
        }
    }
}

/// Filtered class distributions: the low-pass channel pulls each mean toward
/// the other class by `h` and shrinks the mixture variance by the degree;
/// the high-pass channel keeps the residual around the neighborhood mean.
pub fn filtered_params(p: &CsbmhParams) -> Result<FilteredChannels> {
    p.validate()?;
    let (h, v0, v1) = (p.h, p.sigma0_sq, p.sigma1_sq);
    let lp_mean0: Vec<f64> = p
        .mu0
        .iter()
        .zip(&p.mu1)
        .map(|(a, b)| h * (a - b) + b)
        .collect();
    let lp_mean1: Vec<f64> = p
        .mu0
        .iter()
        .zip(&p.mu1)
        .map(|(a, b)| h * (b - a) + a)
        .collect();
    let lp_var0 = (h * (v0 - v1) + v1) / p.d0;
    let lp_var1 = (h * (v1 - v0) + v0) / p.d1;
    let hp_mean0: Vec<f64> = p
        .mu0
        .iter()
        .zip(&p.mu1)
        .map(|(a, b)| (1.0 - h) * (a - b))
        .collect();
    let hp_mean1: Vec<f64> = p
        .mu0
        .iter()
        .zip(&p.mu1)
        .map(|(a, b)| (1.0 - h) * (b - a))
        .collect();
    Ok(FilteredChannels {
        fp: GaussianPair {
            mean0: p.mu0.clone(),
            mean1: p.mu1.clone(),
            var0: v0,
            var1: v1,
            channel: Channel::Fp,
        },
        lp: GaussianPair {
            mean0: lp_mean0,
            mean1: lp_mean1,
            var0: lp_var0,
            var1: lp_var1,
            channel: Channel::Lp,
        },
        hp: GaussianPair {
            mean0: hp_mean0,
            mean1: hp_mean1,
            var0: v0 + lp_var0,
            var1: v1 + lp_var1,
            channel: Channel::Hp,
        },
    })
}

/// Coefficients of the Bayes discriminant `Q(x) = a·xᵀx + bᵀx + c`;
/// the classifier predicts class 1 iff `Q(x) ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesCoefficients {
    pub a: f64,
    pub b: Vec<f64>,
    pub c: f64,
}

impl BayesCoefficients {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let xx: f64 = x.iter().map(|v| v * v).sum();
        let bx: f64 = self.b.iter().zip(x).map(|(bi, xi)| bi * xi).sum();
        self.a * xx + bx + self.c
    }
}

/// Optimal Bayes discriminant for a Gaussian pair under a class prior.
pub fn bayes_coefficients(pair: &GaussianPair, prior_p0: f64) -> BayesCoefficients {
    let (v0, v1) = (pair.var0, pair.var1);
    let f_h = pair.dim() as f64;
    let a = 0.5 * (1.0 / v1 - 1.0 / v0);
    let b: Vec<f64> = pair
        .mean0
        .iter()
        .zip(&pair.mean1)
        .map(|(m0, m1)| m0 / v0 - m1 / v1)
        .collect();
    let m1m1: f64 = pair.mean1.iter().map(|v| v * v).sum();
    let m0m0: f64 = pair.mean0.iter().map(|v| v * v).sum();
    let c = m1m1 / (2.0 * v1) - m0m0 / (2.0 * v0)
        + (prior_p0 / (1.0 - prior_p0)).ln()
        + 0.5 * f_h * (v1 / v0).ln();
    BayesCoefficients { a, b, c }
}

/// Posterior probability of class 1, `1 / (1 + exp(Q(x)))`, saturating for
/// |Q| beyond the representable exponential range.
pub fn posterior_eta(coef: &BayesCoefficients, x: &[f64]) -> f64 {
    let q = coef.eval(x);
    if q > 700.0 {
        0.0
    } else if q < -700.0 {
        1.0
    } else {
        1.0 / (1.0 + q.exp())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Probabilistic Bayes error of the pair: the exact misclassification
/// probability of the Bayes classifier.
///
/// The discriminant `Q(x)` is a weighted noncentral χ² variable per class,
/// so each class error is one generalized-χ² CDF evaluation; when the
/// quadratic coefficient vanishes (equal variances) `Q` is normal and the
/// computation falls back to `normal_cdf`.
pub fn pbe(pair: &GaussianPair, prior_p0: f64) -> Result<f64> {
    let p0 = prior_p0;
    let p1 = 1.0 - prior_p0;
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::Invalid(format!("prior_p0 = {p0} outside (0, 1)")));
    }
    if !(pair.var0 > 0.0 && pair.var1 > 0.0) {
        return Err(Error::Invalid("pair variances must be positive".into()));
    }
    let coef = bayes_coefficients(pair, prior_p0);
    let f_h = pair.dim() as u32;
    let btb = dot(&coef.b, &coef.b);

    if coef.a.abs() < WEIGHT_EPS {
        // equal variances: Q(x) = bᵀx + c is normal under either class
        if btb < 1e-300 {
            // identical class-conditionals: always predict the side Q lands on
            return Ok(if coef.c <= 0.0 { p0 } else { p1 });
        }
        let z0 = -(dot(&coef.b, &pair.mean0) + coef.c) / (pair.var0 * btb).sqrt();
        let z1 = -(dot(&coef.b, &pair.mean1) + coef.c) / (pair.var1 * btb).sqrt();
        return Ok(p0 * normal_cdf(z0) + p1 * (1.0 - normal_cdf(z1)));
    }

    let xi = coef.c - btb / (4.0 * coef.a);
    let class_cdf = |mean: &[f64], var: f64| -> Result<f64> {
        let sigma = var.sqrt();
        let lambda: f64 = mean
            .iter()
            .zip(&coef.b)
            .map(|(m, b)| {
                let t = m / sigma + b / (2.0 * coef.a * sigma);
                t * t
            })
            .sum();
        let spec = GChi2Spec::from_terms(vec![GChi2Term {
            weight: coef.a * var,
            dof: f_h,
            noncentrality: lambda,
        }]);
        gchi2_cdf(&spec, -xi)
    };
    let cdf0 = class_cdf(&pair.mean0, pair.var0)?;
    let cdf1 = class_cdf(&pair.mean1, pair.var1)?;
    Ok(p0 * cdf0 + p1 * (1.0 - cdf1))
}

/// Negative generalized Jeffreys divergence under a balanced prior, split
/// into its additive parts.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DNgj {
    pub total: f64,
    /// Expected negative normalized distance (inter-class term).
    pub ennd: f64,
    /// Negative variance ratio (intra-class imbalance term).
    pub nvr: f64,
}

/// Balanced-prior negative generalized Jeffreys divergence. Smaller values
/// mean more distinguishable classes; both parts are nonpositive.
pub fn d_ngj(pair: &GaussianPair) -> DNgj {
    let d_sq = pair.mean_dist_sq();
    let f_h = pair.dim() as f64;
    let rho_sq = pair.var0 / pair.var1;
    let ennd = -d_sq * (1.0 / (4.0 * pair.var1) + 1.0 / (4.0 * pair.var0));
    let nvr = -(f_h / 4.0) * (rho_sq + 1.0 / rho_sq - 2.0);
    DNgj {
        total: ennd + nvr,
        ennd,
        nvr,
    }
}

/// Prior-weighted negative generalized Jeffreys divergence,
/// `−p0·KL(P0‖P1) − p1·KL(P1‖P0)`. Reduces to [`d_ngj`]'s total at `p0 = 0.5`.
pub fn d_ngj_prior(pair: &GaussianPair, prior_p0: f64) -> f64 {
    let p0 = prior_p0;
    let p1 = 1.0 - prior_p0;
    let f_h = pair.dim() as f64;
    let d_sq = pair.mean_dist_sq();
    let rho_sq = pair.var0 / pair.var1;
    let ln_rho = 0.5 * rho_sq.ln();
    f_h * ln_rho * (p0 - p1)
        - (f_h / 2.0) * (p0 * rho_sq + p1 / rho_sq - 1.0)
        - d_sq * (p0 / (2.0 * pair.var1) + p1 / (2.0 * pair.var0))
}

/// Negative squared Wasserstein-2 distance between the class Gaussians.
pub fn nswd(pair: &GaussianPair) -> f64 {
    let f_h = pair.dim() as f64;
    let ds = pair.var0.sqrt() - pair.var1.sqrt();
    -pair.mean_dist_sq() - f_h * ds * ds
}

/// Negative squared Hellinger distance between the class Gaussians, in [-1, 0].
pub fn nshd(pair: &GaussianPair) -> f64 {
    let f_h = pair.dim() as f64;
    let rho_sq = pair.var0 / pair.var1;
    let bc = (2.0 / (rho_sq + 1.0 / rho_sq)).powf(f_h / 2.0)
        * (-pair.mean_dist_sq() / (4.0 * (pair.var0 + pair.var1))).exp();
    -1.0 + bc
}

/// Which measures a sweep serializes. Everything is computed regardless
/// (PBE drives the regime labels and the rest are closed-form).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasureSet {
    pub pbe: bool,
    pub d_ngj: bool,
    pub nswd: bool,
    pub nshd: bool,
}

impl Default for MeasureSet {
    fn default() -> Self {
        MeasureSet {
            pbe: true,
            d_ngj: true,
            nswd: true,
            nshd: true,
        }
    }
}

impl MeasureSet {
    /// Parse a comma-separated list such as `"pbe,dngj,nswd,nshd"`.
    pub fn parse(s: &str) -> Result<MeasureSet> {
        let mut set = MeasureSet {
            pbe: false,
            d_ngj: false,
            nswd: false,
            nshd: false,
        };
        for tok in s.split(',') {
            match tok.trim().to_ascii_lowercase().as_str() {
                "pbe" => set.pbe = true,
                "dngj" | "d_ngj" => set.d_ngj = true,
                "nswd" => set.nswd = true,
                "nshd" => set.nshd = true,
                "" => {}
                other => return Err(Error::Invalid(format!("unknown measure {other:?}"))),
            }
        }
        if set
            == (MeasureSet {
                pbe: false,
                d_ngj: false,
                nswd: false,
                nshd: false,
            })
        {
            return Err(Error::Invalid("no measures selected".into()));
        }
        Ok(set)
    }
}

/// Per-channel curves over the homophily grid.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelCurves {
    pub pbe: Vec<f64>,
    pub d_ngj: Vec<f64>,
    pub ennd: Vec<f64>,
    pub nvr: Vec<f64>,
    pub nswd: Vec<f64>,
    pub nshd: Vec<f64>,
}

/// Result of a homophily sweep: grid, per-channel measures, and the channel
/// of minimal PBE at every grid point.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub h_grid: Vec<f64>,
    pub fp: ChannelCurves,
    pub lp: ChannelCurves,
    pub hp: ChannelCurves,
    pub regime: Vec<Channel>,
    #[serde(skip)]
    pub measures: MeasureSet,
}

/// Default homophily grid: 191 uniform points on [0.005, 0.955].
pub fn default_h_grid() -> Vec<f64> {
    (0..191).map(|i| 0.005 + 0.005 * i as f64).collect()
}

impl SweepResult {
    pub fn channel(&self, c: Channel) -> &ChannelCurves {
        match c {
            Channel::Fp => &self.fp,
            Channel::Lp => &self.lp,
            Channel::Hp => &self.hp,
        }
    }

    /// CSV: `h`, then the selected per-channel measure columns, then `regime`.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["h".to_string()];
        let mut cols: Vec<(&str, &Vec<f64>)> = Vec::new();
        for ch in Channel::ALL {
            let curves = self.channel(ch);
            let tag = ch.as_str().to_ascii_lowercase();
            if self.measures.pbe {
                cols.push(("pbe", &curves.pbe));
                header.push(format!("{tag}_pbe"));
            }
            if self.measures.d_ngj {
                cols.push(("d_ngj", &curves.d_ngj));
                header.push(format!("{tag}_d_ngj"));
                cols.push(("ennd", &curves.ennd));
                header.push(format!("{tag}_ennd"));
                cols.push(("nvr", &curves.nvr));
                header.push(format!("{tag}_nvr"));
            }
            if self.measures.nswd {
                cols.push(("nswd", &curves.nswd));
                header.push(format!("{tag}_nswd"));
            }
            if self.measures.nshd {
                cols.push(("nshd", &curves.nshd));
                header.push(format!("{tag}_nshd"));
            }
        }
        header.push("regime".into());

        let mut out = header.join(",");
        out.push('\n');
        for (i, h) in self.h_grid.iter().enumerate() {
            let mut row = vec![h.to_string()];
            for (_, col) in &cols {
                row.push(col[i].to_string());
            }
            row.push(self.regime[i].as_str().to_string());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Evaluate all measures per channel across an increasing homophily grid and
/// label each point with the channel of minimal PBE (ties resolved FP, then
/// LP, then HP — the no-op filter wins when aggregation buys nothing).
pub fn sweep(params: &CsbmhParams, h_grid: &[f64], measures: MeasureSet) -> Result<SweepResult> {
    if h_grid.is_empty() {
        return Err(Error::Invalid("empty h grid".into()));
    }
    for w in h_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Invalid("h grid must be strictly increasing".into()));
        }
    }
    if h_grid[0] < 0.0 || *h_grid.last().unwrap() > 1.0 {
        return Err(Error::Invalid("h grid values must lie in [0, 1]".into()));
    }

    struct Point {
        per_channel: [(f64, DNgj, f64, f64); 3],
        regime: Channel,
    }

    let points: Vec<Result<Point>> = h_grid
        .par_iter()
        .map(|&h| {
            let channels = filtered_params(&params.clone().with_h(h))?;
            let mut per_channel = [(
                0.0,
                DNgj {
                    total: 0.0,
                    ennd: 0.0,
                    nvr: 0.0,
                },
                0.0,
                0.0,
            ); 3];
            for (slot, ch) in per_channel.iter_mut().zip(Channel::ALL) {
                let pair = channels.get(ch);
                *slot = (
                    pbe(pair, params.prior_p0)?,
                    d_ngj(pair),
                    nswd(pair),
                    nshd(pair),
                );
            }
            let mut regime = Channel::Fp;
            let mut best = per_channel[0].0;
            for (i, ch) in Channel::ALL.iter().enumerate().skip(1) {
                if per_channel[i].0 < best {
                    best = per_channel[i].0;
                    regime = *ch;
                }
            }
            Ok(Point {
                per_channel,
                regime,
            })
        })
        .collect();

    let empty = || ChannelCurves {
        pbe: Vec::new(),
        d_ngj: Vec::new(),
        ennd: Vec::new(),
        nvr: Vec::new(),
        nswd: Vec::new(),
        nshd: Vec::new(),
    };
    let mut result = SweepResult {
        h_grid: h_grid.to_vec(),
        fp: empty(),
        lp: empty(),
        hp: empty(),
        regime: Vec::new(),
        measures,
    };
    for point in points {
        let point = point?;
        for (i, ch) in Channel::ALL.iter().enumerate() {
            let (pbe_v, ngj, nswd_v, nshd_v) = point.per_channel[i];
            let curves = match ch {
                Channel::Fp => &mut result.fp,
                Channel::Lp => &mut result.lp,
                Channel::Hp => &mut result.hp,
            };
            curves.pbe.push(pbe_v);
            curves.d_ngj.push(ngj.total);
            curves.ennd.push(ngj.ennd);
            curves.nvr.push(ngj.nvr);
            curves.nswd.push(nswd_v);
            curves.nshd.push(nshd_v);
        }
        result.regime.push(point.regime);
    }
    Ok(result)
}

/// Concentration-bound value `2·F_h·exp(−(D − t/√F_h)²/V)`.
///
/// `D` and `V` come from the per-channel distance/variance constructors
/// below; the caller guarantees `t` is at least `√F_h` times the pairwise
/// distance, per the bound's precondition. Values above 1 are vacuous and
/// returned as-is.
pub fn concentration_bound(d: f64, v: f64, t: f64, f_h: u32) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Invalid(format!(
            "variance term {v} must be positive"
        )));
    }
    if d < 0.0 {
        return Err(Error::Invalid(format!(
            "distance term {d} must be nonnegative"
        )));
    }
    let f = f_h as f64;
    let dev = d - t / f.sqrt();
    Ok(2.0 * f * (-(dev * dev) / v).exp())
}

/// Variance term for raw features with per-dimension bounds `[lo, hi]`.
pub fn bound_variance_fp(lo: f64, hi: f64) -> f64 {
    (hi - lo) * (hi - lo)
}

/// Variance term for low-pass features of nodes with degrees `deg_v`, `deg_j`.
pub fn bound_variance_lp(lo: f64, hi: f64, deg_v: f64, deg_j: f64) -> f64 {
    (0.5 / deg_v + 0.5 / deg_j) * (hi - lo) * (hi - lo)
}

/// Variance term for high-pass features.
pub fn bound_variance_hp(lo: f64, hi: f64, deg_v: f64, deg_j: f64) -> f64 {
    (1.0 + 0.5 / deg_v + 0.5 / deg_j) * (hi - lo) * (hi - lo)
}

/// Relative center distance `‖(μ_v − μ̃_v) − (μ_j − μ̃_j)‖`: the quantity
/// governing high-pass separability.
pub fn relative_center_distance(
    mean_v: &[f64],
    agg_mean_v: &[f64],
    mean_j: &[f64],
    agg_mean_j: &[f64],
) -> f64 {
    mean_v
        .iter()
        .zip(agg_mean_v)
        .zip(mean_j.iter().zip(agg_mean_j))
        .map(|((mv, av), (mj, aj))| {
            let d = (mv - av) - (mj - aj);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

const MC_CHUNK: u64 = 1 << 16;

/// Monte Carlo estimate of the Bayes error: draw the class by the prior,
/// sample the feature vector, and classify by the sign of `Q`. Returns the
/// misclassification rate and its binomial standard error. Chunks have fixed
/// boundaries and per-chunk RNG streams, so the result is identical for any
/// thread count.
pub fn monte_carlo_bayes_error(
    pair: &GaussianPair,
    prior_p0: f64,
    n_draws: u64,
    seed: u64,
) -> (f64, f64) {
    assert!(n_draws >= 1);
    let coef = bayes_coefficients(pair, prior_p0);
    let sd0 = pair.var0.sqrt();
    let sd1 = pair.var1.sqrt();
    let dim = pair.dim();

    let n_chunks = n_draws.div_ceil(MC_CHUNK);
    let errors: u64 = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk + 1);
            let count = MC_CHUNK.min(n_draws - chunk * MC_CHUNK);
            let mut x = vec![0.0f64; dim];
            let mut bad = 0u64;
            for _ in 0..count {
                let is_class0 = rng.gen_bool(prior_p0);
                let (mean, sd) = if is_class0 {
                    (&pair.mean0, sd0)
                } else {
                    (&pair.mean1, sd1)
                };
                for (xi, m) in x.iter_mut().zip(mean) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *xi = m + sd * z;
                }
                let q = coef.eval(&x);
                // predicts class 1 iff q <= 0
                let predicted1 = q <= 0.0;
                if predicted1 == is_class0 {
                    bad += 1;
                }
            }
            bad
        })
        .sum();

    let p = errors as f64 / n_draws as f64;
    let se = (p * (1.0 - p) / n_draws as f64).sqrt();
    (p, se)
}
