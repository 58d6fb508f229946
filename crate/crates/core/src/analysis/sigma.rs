//! Best `m`-term approximation error `sigma_m(f0)` by exhaustive subset
//! search, with a beam-search fallback that only yields upper bounds.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::constants::binomial;
use crate::dictionaries::Dictionary;
use crate::error::{Error, Result};
use crate::lpspace::{check_exponent, lp_norm, SampledFunction};
use crate::solvers::{project_best, SolverOptions};

type Fit = Option<(f64, Vec<f64>)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SigmaMethod {
    Exhaustive,
    Capped { beam_width: usize },
}

/// `values[m]`, `supports[m]` and `coefficients[m]` describe the best
/// `m`-term approximant found, for `m = 0..=m_max`.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaTable {
    pub values: Vec<f64>,
    pub supports: Vec<Vec<usize>>,
    pub coefficients: Vec<Vec<f64>>,
    pub method: SigmaMethod,
    pub p: f64,
    pub subsets_evaluated: u64,
}

impl SigmaTable {
    pub fn sigma(&self, m: usize) -> f64 {
        self.values[m.min(self.values.len() - 1)]
    }

    pub fn m_max(&self) -> usize {
        self.values.len() - 1
    }

    /// `m,sigma_m,support` with the support as space-separated indices.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,sigma_m,support\n");
        for (m, (v, s)) in self.values.iter().zip(&self.supports).enumerate() {
            let support = s.iter().map(|i| i.to_string()).join(" ");
            let _ = writeln!(out, "{m},{},{support}", crate::experiments::fmt_f64(*v));
        }
        out
    }
}

/// Number of projections an exhaustive search up to `m_max` terms needs.
pub fn exhaustive_cost(n: usize, m_max: usize) -> u128 {
    (1..=m_max.min(n)).map(|m| binomial(n, m)).sum()
}

fn evaluate(
    f0: &SampledFunction,
    dict: &Dictionary,
    subset: &[usize],
    p: f64,
    opts: &SolverOptions,
) -> Result<Option<(f64, Vec<f64>)>> {
    match project_best(f0, &dict.select(subset), p, opts) {
        Ok(proj) => Ok(Some((proj.residual_norm, proj.coefficients))),
        Err(Error::NoConvergence { best, .. }) => Ok(Some((best.residual_norm, best.coefficients))),
        Err(Error::NumericallyDependentSpan { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Smallest residual among `subsets`; ties keep the earliest subset.
fn best_subset(
    f0: &SampledFunction,
    dict: &Dictionary,
    subsets: &[Vec<usize>],
    p: f64,
    opts: &SolverOptions,
) -> Result<Vec<Fit>> {
    subsets.par_iter().map(|s| evaluate(f0, dict, s, p, opts)).collect()
}

fn check_inputs(f0: &SampledFunction, dict: &Dictionary, m_max: usize, p: f64) -> Result<()> {
    check_exponent(p)?;
    if dict.is_empty() {
        return Err(Error::param("dictionary", "empty"));
    }
    if m_max == 0 {
        return Err(Error::param("m_max", "must be at least 1"));
    }
    f0.check_same_grid(dict.element(0))
}

struct Builder {
    values: Vec<f64>,
    supports: Vec<Vec<usize>>,
    coefficients: Vec<Vec<f64>>,
}

impl Builder {
    fn new(f0: &SampledFunction, p: f64) -> Result<Self> {
        Ok(Self {
            values: vec![lp_norm(f0, p)?],
            supports: vec![Vec::new()],
            coefficients: vec![Vec::new()],
        })
    }

    /// Appends level `m`, falling back to the previous level if it is
    /// better (a shorter support is also admissible for `m` terms).
    fn push(&mut self, best: Option<(f64, Vec<usize>, Vec<f64>)>) {
        let prev = *self.values.last().expect("level 0 present");
        match best {
            Some((v, s, c)) if v <= prev => {
                self.values.push(v);
                self.supports.push(s);
                self.coefficients.push(c);
            }
            _ => {
                self.values.push(prev);
                self.supports.push(self.supports.last().expect("nonempty").clone());
                self.coefficients.push(self.coefficients.last().expect("nonempty").clone());
            }
        }
    }

    fn finish(self, method: SigmaMethod, p: f64, evaluated: u64) -> SigmaTable {
        SigmaTable {
            values: self.values,
            supports: self.supports,
            coefficients: self.coefficients,
            method,
            p,
            subsets_evaluated: evaluated,
        }
    }
}

fn pick(
    subsets: &[Vec<usize>],
    results: &[Option<(f64, Vec<f64>)>],
) -> Option<(f64, Vec<usize>, Vec<f64>)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, r) in results.iter().enumerate() {
        if let Some((v, _)) = r {
            if best.is_none_or(|(b, _)| *v < b) {
                best = Some((*v, i));
            }
        }
    }
    best.map(|(v, i)| (v, subsets[i].clone(), results[i].as_ref().expect("present").1.clone()))
}

/// Exhaustive `sigma_m` for `m = 0..=m_max`. Numerically dependent subsets
/// are skipped. Fails with [`Error::CapExceeded`] when more than
/// `combo_cap` projections would be needed.
pub fn sigma_m_oracle(
    f0: &SampledFunction,
    dict: &Dictionary,
    m_max: usize,
    p: f64,
    combo_cap: u128,
    opts: &SolverOptions,
) -> Result<SigmaTable> {
    check_inputs(f0, dict, m_max, p)?;
    let n = dict.len();
    let needed = exhaustive_cost(n, m_max);
    if needed > combo_cap {
        return Err(Error::CapExceeded { needed, cap: combo_cap });
    }
    let mut table = Builder::new(f0, p)?;
    for m in 1..=m_max {
        if m > n {
            table.push(None);
            continue;
        }
        let subsets: Vec<Vec<usize>> = (0..n).combinations(m).collect();
        let results = best_subset(f0, dict, &subsets, p, opts)?;
        table.push(pick(&subsets, &results));
    }
    Ok(table.finish(SigmaMethod::Exhaustive, p, needed as u64))
}

/// Beam search over supports: each level extends the `beam_width` best
/// supports of the previous level by one element. Values are upper bounds
/// on `sigma_m`.
pub fn sigma_m_capped(
    f0: &SampledFunction,
    dict: &Dictionary,
    m_max: usize,
    p: f64,
    beam_width: usize,
    opts: &SolverOptions,
) -> Result<SigmaTable> {
    check_inputs(f0, dict, m_max, p)?;
    if beam_width == 0 {
        return Err(Error::param("beam_width", "must be at least 1"));
    }
    let n = dict.len();
    let mut table = Builder::new(f0, p)?;
    let mut beam: Vec<Vec<usize>> = vec![Vec::new()];
    let mut evaluated = 0u64;
    for m in 1..=m_max {
        if m > n || beam.is_empty() {
            table.push(None);
            continue;
        }
        let candidates: Vec<Vec<usize>> = beam
            .iter()
            .flat_map(|s| {
                (0..n).filter(|i| !s.contains(i)).map(move |i| {
                    let mut t = s.clone();
                    t.push(i);
                    t.sort_unstable();
                    t
                })
            })
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        evaluated += candidates.len() as u64;
        let results = best_subset(f0, dict, &candidates, p, opts)?;
        table.push(pick(&candidates, &results));
        let mut ranked: Vec<(f64, usize)> = results
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().map(|(v, _)| (*v, i)))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        beam = ranked
            .into_iter()
            .take(beam_width)
            .map(|(_, i)| candidates[i].clone())
            .collect();
    }
    Ok(table.finish(SigmaMethod::Capped { beam_width }, p, evaluated))
}
