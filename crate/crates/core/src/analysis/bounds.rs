//! Checks of recorded residual histories against the theoretical decay
//! bounds, plus the restricted-isometry partial-sum estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::analysis::constants::{rip_delta, EstimateOptions};
use crate::dictionaries::Dictionary;
use crate::error::{Error, Result};
use crate::greedy::GreedyTrace;
use crate::lpspace::{lp_norm, SampledFunction, SmoothnessParams};

/// Relative slack allowed when comparing a residual against a bound.
pub const BOUND_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundViolation {
    pub k: usize,
    pub m: usize,
    pub residual: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub passed: bool,
    /// Rate constant `c1 = t^{q'} / (2 (16 gamma)^{1/(q-1)} V^{q'})`.
    pub c1: f64,
    pub pairs_checked: usize,
    /// `1 - max ||f_m|| / bound` over all checked pairs.
    pub min_slack: f64,
    pub violations: Vec<BoundViolation>,
}

/// Checks `||f_m|| <= ||f_k|| exp(-c1 (m-k) / K^{r q'}) + 2 eps` for every
/// pair `k < m` of recorded iterations with `K + m <= D` (`d = None` means
/// no depth restriction).
///
/// Requires `r q' >= 1`.
#[allow(clippy::too_many_arguments)]
pub fn verify_decay_bound(
    trace: &GreedyTrace,
    k_sparsity: usize,
    d: Option<usize>,
    r: f64,
    v: f64,
    eps: f64,
    params: &SmoothnessParams,
    t: f64,
) -> Result<DecayReport> {
    if k_sparsity == 0 {
        return Err(Error::param("K", "must be at least 1"));
    }
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::param("V", format!("{v} is not a positive number")));
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::param("eps", format!("{eps} is not a nonnegative number")));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::param("t", format!("{t} not in (0, 1]")));
    }
    if r * params.q_conj < 1.0 - 1e-12 {
        return Err(Error::param(
            "r",
            format!("r q' = {} < 1; the exponential bound needs r q' >= 1", r * params.q_conj),
        ));
    }
    let qc = params.q_conj;
    let c1 = t.powf(qc) / (2.0 * (16.0 * params.gamma).powf(1.0 / (params.q - 1.0)) * v.powf(qc));
    let scale = (k_sparsity as f64).powf(r * qc);
    let norms = &trace.residual_norms;
    let last = norms.len().saturating_sub(1);
    let m_hi = d.map_or(last, |d| last.min(d.saturating_sub(k_sparsity)));

    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    let mut violations = Vec::new();
    for m in 1..=m_hi {
        for k in 0..m {
            let bound = norms[k] * (-c1 * (m - k) as f64 / scale).exp() + 2.0 * eps;
            pairs += 1;
            let ratio = if bound > 0.0 {
                norms[m] / bound
            } else if norms[m] == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(ratio);
            if norms[m] > bound * (1.0 + BOUND_RTOL) {
                violations.push(BoundViolation {
                    k,
                    m,
                    residual: norms[m],
                    bound,
                });
            }
        }
    }
    Ok(DecayReport {
        passed: violations.is_empty(),
        c1,
        pairs_checked: pairs,
        min_slack: 1.0 - worst,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    /// Smallest `C` for which the rate bound holds at every recorded `m`.
    pub c_hat: f64,
    /// Constant required at each `m` (`None` where `||f_m|| <= 2 eps`).
    pub required: Vec<Option<f64>>,
}

/// Smallest constant `C` with
/// `||f_m|| <= max(2 eps, C (A + eps) (1 + m t^{q'})^{-1/q'})` along the
/// trace, for a constant weakness sequence `t`.
pub fn verify_rate_bound(
    trace: &GreedyTrace,
    a_eps: f64,
    eps: f64,
    params: &SmoothnessParams,
    t: f64,
) -> Result<RateReport> {
    if !(a_eps.is_finite() && a_eps >= 0.0 && eps >= 0.0) || a_eps + eps == 0.0 {
        return Err(Error::param("A", "A(eps) + eps must be positive"));
    }
    let qc = params.q_conj;
    let required: Vec<Option<f64>> = trace
        .residual_norms
        .iter()
        .enumerate()
        .map(|(m, &norm)| {
            (norm > 2.0 * eps).then(|| norm * (1.0 + m as f64 * t.powf(qc)).powf(1.0 / qc) / (a_eps + eps))
        })
        .collect();
    let c_hat = required.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    Ok(RateReport { c_hat, required })
}

/// Least-squares slope of `ln norms[m]` against `ln m` for `m` in
/// `[m_lo, m_hi]`, skipping zero residuals. `None` with fewer than two
/// usable points.
pub fn fit_loglog_slope(norms: &[f64], m_lo: usize, m_hi: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = (m_lo.max(1)..=m_hi.min(norms.len().saturating_sub(1)))
        .map(|m| (m as f64, norms[m]))
        .collect();
    fit_loglog(&pts)
}

/// Least-squares slope of `ln y` against `ln x` over the points with
/// positive finite coordinates.
pub fn fit_loglog(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialSumReport {
    pub delta: f64,
    pub delta_exact: bool,
    /// `(1 + delta) / (1 - delta)`.
    pub bound: f64,
    /// Largest observed `||S_A f||^2 / ||f||^2`.
    pub max_ratio: f64,
    pub trials: usize,
    pub violations: usize,
}

/// Samples `f = sum_B c_i g_i` with `|B| <= D` and a random `A` within
/// `B`, and compares the partial sum `S_A f = sum_A c_i g_i` with
/// `(1 + delta) / (1 - delta) ||f||_2^2`.
pub fn check_partial_sum_bound(
    dict: &Dictionary,
    d: usize,
    trials: usize,
    seed: u64,
    opts: &EstimateOptions,
) -> Result<PartialSumReport> {
    let est = rip_delta(dict, d, opts)?;
    let delta = est.value;
    if delta >= 1.0 {
        return Err(Error::param("D", format!("delta = {delta} >= 1 at this depth")));
    }
    let bound = (1.0 + delta) / (1.0 - delta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = dict.len();
    let mut max_ratio: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..trials {
        let b_len = rng.random_range(1..=d.min(n));
        let b = rand::seq::index::sample(&mut rng, n, b_len).into_vec();
        let a_len = rng.random_range(1..=b_len);
        let c: Vec<f64> = (0..b_len).map(|_| rng.sample(StandardNormal)).collect();
        let f = SampledFunction::combination(dict.grid(), &dict.select(&b), &c)?;
        let s_a = SampledFunction::combination(dict.grid(), &dict.select(&b[..a_len]), &c[..a_len])?;
        let ratio = (lp_norm(&s_a, 2.0)? / lp_norm(&f, 2.0)?).powi(2);
        max_ratio = max_ratio.max(ratio);
        if ratio > bound * (1.0 + 1e-9) {
            violations += 1;
        }
    }
    Ok(PartialSumReport {
        delta,
        delta_exact: est.exact,
        bound,
        max_ratio,
        trials,
        violations,
    })
}
