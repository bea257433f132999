//! Statistical primitives behind the hypothesis-testing pipelines.

use serde::Serialize;
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Direction of the alternative hypothesis for a two-sample test on means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Alternative {
    /// mean(a) < mean(b)
    Less,
    /// mean(a) > mean(b)
    Greater,
    TwoSided,
}

#[derive(Debug, Clone, Serialize)]
pub struct TTestResult {
    pub t_stat: f64,
    pub dof: f64,
    pub p_value: f64,
    pub alternative: Alternative,
}

/// Student-t CDF via the regularized incomplete beta function.
pub fn student_t_cdf(t: f64, dof: f64) -> f64 {
    assert!(dof > 0.0, "dof must be positive");
    if t == 0.0 {
        return 0.5;
    }
    let x = dof / (dof + t * t);
    let half_tail = 0.5 * beta_reg(dof / 2.0, 0.5, x);
    if t < 0.0 {
        half_tail
    } else {
        1.0 - half_tail
    }
}

fn mean_var(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-sample t-test on means. `pooled = false` is Welch's unequal-variance
/// form with the Welch–Satterthwaite degrees of freedom; `pooled = true` is
/// the classic equal-variance test.
///
/// Degenerate samples are handled without erroring: both variances zero with
/// equal means gives t = 0 (one-sided p = 0.5); with unequal means the test
/// is decided by sign (p = 0 or 1).
pub fn ttest_ind(
    a: &[f64],
    b: &[f64],
    alternative: Alternative,
    pooled: bool,
) -> Result<TTestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Invalid(format!(
            "t-test needs at least 2 observations per sample (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);

    let (se_sq, dof) = if pooled {
        let pooled_var = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
        (pooled_var * (1.0 / na + 1.0 / nb), na + nb - 2.0)
    } else {
        let ra = va / na;
        let rb = vb / nb;
        let se_sq = ra + rb;
        let dof = if se_sq > 0.0 {
            se_sq * se_sq / (ra * ra / (na - 1.0) + rb * rb / (nb - 1.0))
        } else {
            na + nb - 2.0
        };
        (se_sq, dof)
    };

    let diff = ma - mb;
    let (t_stat, cdf_at_t) = if se_sq > 0.0 {
        let t = diff / se_sq.sqrt();
        (t, student_t_cdf(t, dof))
    } else if diff == 0.0 {
        (0.0, 0.5)
    } else if diff < 0.0 {
        (f64::NEG_INFINITY, 0.0)
    } else {
        (f64::INFINITY, 1.0)
    };

    let p_value = match alternative {
        Alternative::Less => cdf_at_t,
        Alternative::Greater => 1.0 - cdf_at_t,
        Alternative::TwoSided => 2.0 * cdf_at_t.min(1.0 - cdf_at_t),
    };
    Ok(TTestResult {
        t_stat,
        dof,
        p_value,
        alternative,
    })
}

/// Welch's unequal-variance t-test.
pub fn welch_ttest(a: &[f64], b: &[f64], alternative: Alternative) -> Result<TTestResult> {
    ttest_ind(a, b, alternative, false)
}
