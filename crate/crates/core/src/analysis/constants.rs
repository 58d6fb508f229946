//! Estimators for the dictionary constants: the Nikol'skii-type `l1`
//! constant `C1` (A1), the `(K, D)`-unconditionality constant `U` (A2), the
//! `l1` incoherence constant `V` (A3) and the restricted isometry constant
//! `delta`.
//!
//! Every constant is a supremum of a ratio over subsets and coefficients.
//! The subset part is enumerated (or sampled beyond the budget). The
//! coefficient part is reduced to finite problems:
//!
//! * `sup_c sum_A |c_i| / ||sum_B c_i g_i||` equals the maximum over sign
//!   patterns `s` on `A` of `1 / min { ||sum_B c_i g_i|| : s . c_A = 1 }`.
//!   The inner minimum is a best-approximation problem, so `C1` and `V` are
//!   computed to solver precision for every `p`; in `L_2` it has the closed
//!   form `sqrt(u^T G_B^{-1} u)`.
//! * `U` in `L_2` is a generalized eigenvalue problem. For other `p` the
//!   outer supremum over directions on `A` is not concave and is estimated
//!   by multi-start pattern search, giving a lower bound.
//!
//! Each estimate carries a witness (subsets and coefficients) whose ratio
//! reproduces the reported value.

use itertools::Itertools;
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionaries::{gram_of, Dictionary};
use crate::error::{Error, Result};
use crate::lpspace::{check_exponent, lp_norm, SampledFunction};
use crate::solvers::{project_best, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionKind {
    #[serde(rename = "nikolskii_c1")]
    NikolskiiC1,
    #[serde(rename = "unconditionality_u")]
    UnconditionalityU,
    #[serde(rename = "l1_incoherence_v")]
    L1IncoherenceV,
    #[serde(rename = "rip_delta")]
    RipDelta,
}

/// Subsets and coefficients attaining an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// `A` (for `delta`: the Gram subset).
    pub subset: Vec<usize>,
    /// `B`, the support of `coefficients`.
    pub support: Vec<usize>,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionParams {
    pub k: Option<usize>,
    pub d: Option<usize>,
    pub r: Option<f64>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEstimate {
    pub kind: ConditionKind,
    pub value: f64,
    /// True when every candidate subset was examined and each per-subset
    /// value is a true supremum; false for sampled or local-search lower
    /// bounds.
    pub exact: bool,
    pub witness: Witness,
    pub params: ConditionParams,
    pub candidates: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    /// Maximum number of candidate subsets before sampling kicks in.
    pub budget: usize,
    pub seed: u64,
    /// Random starts for the `U` pattern search when `p != 2`.
    pub starts: usize,
    pub solver: SolverOptions,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            budget: 2_000_000,
            seed: 0,
            starts: 20,
            solver: SolverOptions {
                opt_tol: 1e-11,
                max_inner_iter: 200,
                atol: 1e-14,
                force_iterative: false,
            },
        }
    }
}

/// Pairs `(A, B)` with `A` a nonempty subset of `B`, `|A| <= K` and
/// `|B| = min(D, |dict|)`. Suprema grow with `B`, so only maximal `B` are
/// listed.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub pairs: Vec<(Vec<usize>, Vec<usize>)>,
    pub exhaustive: bool,
    pub k: usize,
    pub d: usize,
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

impl CandidateSet {
    pub fn new(n: usize, k: usize, d: usize, budget: usize, seed: u64) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::param("K", format!("need 1 <= K <= {n}, got {k}")));
        }
        if d < k {
            return Err(Error::param("D", format!("need D >= K = {k}, got {d}")));
        }
        let b = d.min(n);
        let per_b: u128 = (1..=k.min(b)).map(|a| binomial(b, a)).sum();
        let total = binomial(n, b).saturating_mul(per_b);
        if total <= budget as u128 {
            let pairs = (0..n)
                .combinations(b)
                .flat_map(|big| {
                    let smalls: Vec<Vec<usize>> = (1..=k.min(b))
                        .flat_map(|a| big.iter().copied().combinations(a))
                        .collect();
                    smalls.into_iter().map(move |small| (small, big.clone()))
                })
                .collect();
            return Ok(Self {
                pairs,
                exhaustive: true,
                k,
                d,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs = (0..budget.max(1))
            .map(|_| {
                let mut big = sample(&mut rng, n, b).into_vec();
                big.sort_unstable();
                let a = rng.random_range(1..=k.min(b));
                let mut small: Vec<usize> = sample(&mut rng, b, a).into_iter().map(|i| big[i]).collect();
                small.sort_unstable();
                (small, big)
            })
            .collect();
        Ok(Self {
            pairs,
            exhaustive: false,
            k,
            d,
        })
    }

    /// Distinct `A` sets, in first-appearance order.
    pub fn small_sets(&self) -> Vec<Vec<usize>> {
        self.pairs.iter().map(|(a, _)| a.clone()).unique().collect()
    }
}

struct Candidate {
    value: f64,
    witness: Witness,
    exact: bool,
}

/// Max-reduction that keeps the earliest candidate on ties, so parallel
/// evaluation stays deterministic.
fn best_of(results: Vec<Result<Candidate>>) -> Result<Option<Candidate>> {
    let mut best: Option<Candidate> = None;
    for r in results {
        let c = r?;
        if best.as_ref().is_none_or(|b| c.value > b.value) {
            best = Some(c);
        }
    }
    Ok(best)
}

fn check_r(r: f64) -> Result<()> {
    if (0.5..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::param("r", format!("{r} not in [1/2, 1]")))
    }
}

/// Sign patterns on `len` coordinates with the first sign fixed to `+1`.
fn sign_patterns(len: usize) -> impl Iterator<Item = Vec<f64>> {
    (0..1usize << len.saturating_sub(1)).map(move |bits| {
        (0..len)
            .map(|i| if i > 0 && bits >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 })
            .collect()
    })
}

fn combination(dict: &Dictionary, support: &[usize], coefficients: &[f64]) -> SampledFunction {
    SampledFunction::combination(dict.grid(), &dict.select(support), coefficients)
        .expect("dictionary elements share a grid")
}

/// `sum_A |c_i| / (|A|^r ||sum_B c_i g_i||_p)` for coefficients on `B`.
pub fn l1_ratio(dict: &Dictionary, a: &[usize], b: &[usize], c: &[f64], r: f64, p: f64) -> Result<f64> {
    let l1: f64 = b
        .iter()
        .zip(c)
        .filter(|(i, _)| a.contains(i))
        .map(|(_, v)| v.abs())
        .sum();
    let norm = lp_norm(&combination(dict, b, c), p)?;
    Ok(l1 / ((a.len() as f64).powf(r) * norm))
}

/// `||sum_A c_i g_i||_p / ||sum_B c_i g_i||_p` for coefficients on `B`.
pub fn restriction_ratio(dict: &Dictionary, a: &[usize], b: &[usize], c: &[f64], p: f64) -> Result<f64> {
    let restricted: Vec<f64> = b
        .iter()
        .zip(c)
        .map(|(i, &v)| if a.contains(i) { v } else { 0.0 })
        .collect();
    let top = lp_norm(&combination(dict, b, &restricted), p)?;
    Ok(top / lp_norm(&combination(dict, b, c), p)?)
}

/// `| ||sum a_i e_i||_2^2 / ||a||_2^2 - 1 |`.
pub fn rip_ratio(dict: &Dictionary, subset: &[usize], a: &[f64]) -> Result<f64> {
    let energy = lp_norm(&combination(dict, subset, a), 2.0)?.powi(2);
    let coeff: f64 = a.iter().map(|v| v * v).sum();
    Ok((energy / coeff - 1.0).abs())
}

/// Re-evaluates the ratio defining `est` at its witness.
pub fn evaluate_witness(dict: &Dictionary, est: &ConditionEstimate) -> Result<f64> {
    let w = &est.witness;
    let p = est.params.p;
    match est.kind {
        ConditionKind::NikolskiiC1 | ConditionKind::L1IncoherenceV => {
            l1_ratio(dict, &w.subset, &w.support, &w.coefficients, est.params.r.unwrap_or(1.0), p)
        }
        ConditionKind::UnconditionalityU => restriction_ratio(dict, &w.subset, &w.support, &w.coefficients, p),
        ConditionKind::RipDelta => rip_ratio(dict, &w.subset, &w.coefficients),
    }
}

/// `sup_c sum_A |c_i| / (|A|^r ||sum_B c_i g_i||)` for one pair `(A, B)`.
fn l1_sup(dict: &Dictionary, a: &[usize], b: &[usize], r: f64, p: f64, opts: &EstimateOptions) -> Result<Candidate> {
    let scale = (a.len() as f64).powf(r);
    if p == 2.0 {
        let gram = gram_of(&dict.select(b));
        let chol = Cholesky::new(gram).ok_or_else(|| Error::SingularGram(b.to_vec()))?;
        let mut best: Option<Candidate> = None;
        for s in sign_patterns(a.len()) {
            let u = DVector::from_iterator(
                b.len(),
                b.iter().map(|i| a.iter().position(|j| j == i).map_or(0.0, |pos| s[pos])),
            );
            let y = chol.solve(&u);
            let value = u.dot(&y).sqrt() / scale;
            if best.as_ref().is_none_or(|c| value > c.value) {
                best = Some(Candidate {
                    value,
                    witness: Witness {
                        subset: a.to_vec(),
                        support: b.to_vec(),
                        coefficients: y.iter().copied().collect(),
                    },
                    exact: true,
                });
            }
        }
        return Ok(best.expect("at least one sign pattern"));
    }

    // Eliminate c_{a0} through s . c_A = 1 (s_{a0} = +1) and minimize
    // ||g_{a0} + sum_{A \ a0} c_i (g_i - s_i g_{a0}) + sum_{B \ A} c_i g_i||.
    let a0 = a[0];
    let anchor = dict.element(a0);
    let free: Vec<usize> = a[1..].iter().chain(b.iter().filter(|i| !a.contains(i))).copied().collect();
    let mut best: Option<Candidate> = None;
    for s in sign_patterns(a.len()) {
        let directions: Vec<SampledFunction> = free
            .iter()
            .map(|&i| {
                let mut v = dict.element(i).scaled(-1.0);
                if let Some(pos) = a.iter().position(|&j| j == i) {
                    v.axpy(s[pos], anchor).expect("same grid");
                }
                v
            })
            .collect();
        let span: Vec<&SampledFunction> = directions.iter().collect();
        let proj = match project_best(anchor, &span, p, &opts.solver) {
            Ok(proj) => proj,
            Err(Error::NoConvergence { best, .. }) => *best,
            Err(Error::NumericallyDependentSpan { .. }) => return Err(Error::SingularGram(b.to_vec())),
            Err(e) => return Err(e),
        };
        let mut coefficients = vec![0.0; b.len()];
        let mut anchor_coeff = 1.0;
        for (&i, &d) in free.iter().zip(&proj.coefficients) {
            let pos = b.iter().position(|&j| j == i).expect("free index in B");
            coefficients[pos] = d;
            if let Some(apos) = a.iter().position(|&j| j == i) {
                anchor_coeff -= s[apos] * d;
            }
        }
        coefficients[b.iter().position(|&j| j == a0).expect("A within B")] = anchor_coeff;
        let value = l1_ratio(dict, a, b, &coefficients, r, p)?;
        if best.as_ref().is_none_or(|c| value > c.value) {
            best = Some(Candidate {
                value,
                witness: Witness {
                    subset: a.to_vec(),
                    support: b.to_vec(),
                    coefficients,
                },
                exact: proj.converged,
            });
        }
    }
    Ok(best.expect("at least one sign pattern"))
}

/// `sup_c ||sum_A c_i g_i|| / ||sum_B c_i g_i||` for one pair `(A, B)`.
fn restriction_sup(
    dict: &Dictionary,
    a: &[usize],
    b: &[usize],
    p: f64,
    opts: &EstimateOptions,
    stream: u64,
) -> Result<Candidate> {
    let lambda: Vec<usize> = b.iter().copied().filter(|i| !a.contains(i)).collect();
    if lambda.is_empty() {
        return Ok(Candidate {
            value: 1.0,
            witness: Witness {
                subset: a.to_vec(),
                support: b.to_vec(),
                coefficients: vec![1.0; b.len()],
            },
            exact: true,
        });
    }
    if p == 2.0 {
        let gram = gram_of(&dict.select(b));
        let chol = Cholesky::new(gram.clone()).ok_or_else(|| Error::SingularGram(b.to_vec()))?;
        let l = chol.l();
        let mut block = DMatrix::zeros(b.len(), b.len());
        for (i, bi) in b.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                if a.contains(bi) && a.contains(bj) {
                    block[(i, j)] = gram[(i, j)];
                }
            }
        }
        // L^{-1} M L^{-T}
        let left = l
            .solve_lower_triangular(&block)
            .ok_or_else(|| Error::SingularGram(b.to_vec()))?;
        let sym = l
            .solve_lower_triangular(&left.transpose())
            .ok_or_else(|| Error::SingularGram(b.to_vec()))?;
        let sym = (&sym + sym.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let (imax, lmax) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        let w = eig.eigenvectors.column(imax).into_owned();
        let v = l
            .transpose()
            .solve_upper_triangular(&w)
            .ok_or_else(|| Error::SingularGram(b.to_vec()))?;
        return Ok(Candidate {
            value: lmax.max(0.0).sqrt(),
            witness: Witness {
                subset: a.to_vec(),
                support: b.to_vec(),
                coefficients: v.iter().copied().collect(),
            },
            exact: true,
        });
    }

    let a_elems = dict.select(a);
    let l_elems = dict.select(&lambda);
    let objective = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let fa = SampledFunction::combination(dict.grid(), &a_elems, x)?;
        let top = lp_norm(&fa, p)?;
        let proj = match project_best(&fa, &l_elems, p, &opts.solver) {
            Ok(proj) => proj,
            Err(Error::NoConvergence { best, .. }) => *best,
            Err(Error::NumericallyDependentSpan { .. }) => return Err(Error::SingularGram(b.to_vec())),
            Err(e) => return Err(e),
        };
        Ok((top / proj.residual_norm, proj.coefficients))
    };
    let normalize = |x: &mut Vec<f64>| {
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= n);
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(stream);
    let starts = if a.len() == 1 { 1 } else { opts.starts.max(1) };
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for _ in 0..starts {
        let mut x: Vec<f64> = (0..a.len())
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        normalize(&mut x);
        let (mut fx, mut cx) = objective(&x)?;
        let mut step = 0.5;
        while a.len() > 1 && step > 1e-6 {
            let mut improved = false;
            for i in 0..a.len() {
                for sign in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[i] += sign * step;
                    normalize(&mut y);
                    let (fy, cy) = objective(&y)?;
                    if fy > fx {
                        x = y;
                        fx = fy;
                        cx = cy;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if best.as_ref().is_none_or(|bst| fx > bst.0) {
            best = Some((fx, x, cx));
        }
    }
    let (_, x, c_lambda) = best.expect("at least one start");
    let coefficients: Vec<f64> = b
        .iter()
        .map(|i| match a.iter().position(|j| j == i) {
            Some(pos) => x[pos],
            None => -c_lambda[lambda.iter().position(|j| j == i).expect("index in Lambda")],
        })
        .collect();
    let value = restriction_ratio(dict, a, b, &coefficients, p)?;
    Ok(Candidate {
        value,
        witness: Witness {
            subset: a.to_vec(),
            support: b.to_vec(),
            coefficients,
        },
        exact: a.len() == 1,
    })
}

fn finish(
    kind: ConditionKind,
    best: Option<Candidate>,
    exhaustive: bool,
    params: ConditionParams,
    candidates: usize,
) -> ConditionEstimate {
    let best = best.expect("candidate sets are nonempty");
    ConditionEstimate {
        kind,
        value: best.value,
        exact: exhaustive && best.exact,
        witness: best.witness,
        params,
        candidates,
    }
}

fn all_exact(results: &[Result<Candidate>]) -> bool {
    results.iter().all(|r| r.as_ref().is_ok_and(|c| c.exact))
}

/// Nikol'skii-type constant `C1` over the `A` sets of `cands`.
pub fn estimate_nikolskii_on(
    dict: &Dictionary,
    cands: &CandidateSet,
    r: f64,
    p: f64,
    opts: &EstimateOptions,
) -> Result<ConditionEstimate> {
    check_r(r)?;
    check_exponent(p)?;
    let sets = cands.small_sets();
    let results: Vec<Result<Candidate>> = sets.par_iter().map(|a| l1_sup(dict, a, a, r, p, opts)).collect();
    let exact = all_exact(&results);
    let best = best_of(results)?;
    Ok(finish(
        ConditionKind::NikolskiiC1,
        best,
        cands.exhaustive && exact,
        ConditionParams {
            k: Some(cands.k),
            d: None,
            r: Some(r),
            p,
        },
        sets.len(),
    ))
}

pub fn estimate_nikolskii(
    dict: &Dictionary,
    k: usize,
    r: f64,
    p: f64,
    opts: &EstimateOptions,
) -> Result<ConditionEstimate> {
    let cands = CandidateSet::new(dict.len(), k, k, opts.budget, opts.seed)?;
    estimate_nikolskii_on(dict, &cands, r, p, opts)
}

/// `(K, D)`-unconditionality constant `U` over the pairs of `cands`.
pub fn estimate_unconditionality_on(
    dict: &Dictionary,
    cands: &CandidateSet,
    p: f64,
    opts: &EstimateOptions,
) -> Result<ConditionEstimate> {
    check_exponent(p)?;
    let results: Vec<Result<Candidate>> = cands
        .pairs
        .par_iter()
        .enumerate()
        .map(|(i, (a, b))| restriction_sup(dict, a, b, p, opts, i as u64))
        .collect();
    let exact = all_exact(&results);
    let best = best_of(results)?;
    Ok(finish(
        ConditionKind::UnconditionalityU,
        best,
        cands.exhaustive && exact,
        ConditionParams {
            k: Some(cands.k),
            d: Some(cands.d),
            r: None,
            p,
        },
        cands.pairs.len(),
    ))
}

pub fn estimate_unconditionality(
    dict: &Dictionary,
    k: usize,
    d: usize,
    p: f64,
    opts: &EstimateOptions,
) -> Result<ConditionEstimate> {
    let cands = CandidateSet::new(dict.len(), k, d, opts.budget, opts.seed)?;
    estimate_unconditionality_on(dict, &cands, p, opts)
}

/// `l1` incoherence constant `V` over the pairs of `cands`.
pub fn estimate_a3_on(
    dict: &Dictionary,
    cands: &CandidateSet,
    r: f64,
    p: f64,
    opts: &EstimateOptions,
) -> Result<ConditionEstimate> {
    check_r(r)?;
    check_exponent(p)?;
    let results: Vec<Result<Candidate>> = cands
        .pairs
        .par_iter()
        .map(|(a, b)| l1_sup(dict, a, b, r, p, opts))
        .collect();
    let exact = all_exact(&results);
    let best = best_of(results)?;
    Ok(finish(
        ConditionKind::L1IncoherenceV,
        best,
        cands.exhaustive && exact,
        ConditionParams {
            k: Some(cands.k),
            d: Some(cands.d),
            r: Some(r),
            p,
        },
        cands.pairs.len(),
    ))
}

pub fn estimate_a3(
    dict: &Dictionary,
    k: usize,
    d: usize,
    r: f64,
    p: f64,
    opts: &EstimateOptions,
) -> Result<ConditionEstimate> {
    let cands = CandidateSet::new(dict.len(), k, d, opts.budget, opts.seed)?;
    estimate_a3_on(dict, &cands, r, p, opts)
}

/// Restricted isometry constant of depth `D`: the largest deviation of a
/// `D x D` Gram submatrix spectrum from 1.
pub fn rip_delta(dict: &Dictionary, d: usize, opts: &EstimateOptions) -> Result<ConditionEstimate> {
    let n = dict.len();
    if d == 0 || d > n {
        return Err(Error::param("D", format!("need 1 <= D <= {n}, got {d}")));
    }
    let total = binomial(n, d);
    let exhaustive = total <= opts.budget as u128;
    let subsets: Vec<Vec<usize>> = if exhaustive {
        (0..n).combinations(d).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        (0..opts.budget.max(1))
            .map(|_| {
                let mut s = sample(&mut rng, n, d).into_vec();
                s.sort_unstable();
                s
            })
            .collect()
    };
    let results: Vec<Result<Candidate>> = subsets
        .par_iter()
        .map(|s| {
            let eig = SymmetricEigen::new(gram_of(&dict.select(s)));
            let (imin, lmin) = eig.eigenvalues.argmin();
            let (imax, lmax) = eig.eigenvalues.argmax();
            let (col, value) = if 1.0 - lmin >= lmax - 1.0 {
                (imin, 1.0 - lmin)
            } else {
                (imax, lmax - 1.0)
            };
            Ok(Candidate {
                value,
                witness: Witness {
                    subset: s.clone(),
                    support: s.clone(),
                    coefficients: eig.eigenvectors.column(col).iter().copied().collect(),
                },
                exact: true,
            })
        })
        .collect();
    let best = best_of(results)?;
    Ok(finish(
        ConditionKind::RipDelta,
        best,
        exhaustive,
        ConditionParams {
            k: None,
            d: Some(d),
            r: None,
            p: 2.0,
        },
        subsets.len(),
    ))
}

/// `C1`, `U` and `V` computed on one shared candidate set, plus `delta` at
/// depth `D` for `L_2` dictionaries.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantSet {
    pub c1: ConditionEstimate,
    pub u: ConditionEstimate,
    pub v: ConditionEstimate,
    pub delta: Option<ConditionEstimate>,
}

pub fn estimate_all(
    dict: &Dictionary,
    k: usize,
    d: usize,
    r: f64,
    p: f64,
    opts: &EstimateOptions,
) -> Result<ConstantSet> {
    let cands = CandidateSet::new(dict.len(), k, d, opts.budget, opts.seed)?;
    Ok(ConstantSet {
        c1: estimate_nikolskii_on(dict, &cands, r, p, opts)?,
        u: estimate_unconditionality_on(dict, &cands, p, opts)?,
        v: estimate_a3_on(dict, &cands, r, p, opts)?,
        delta: if p == 2.0 {
            Some(rip_delta(dict, d.min(dict.len()), opts)?)
        } else {
            None
        },
    })
}
