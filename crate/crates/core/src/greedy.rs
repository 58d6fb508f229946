//! WCGA, its Hilbert-space alias WOMP, and the thresholding greedy
//! algorithm for orthogonal bases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionaries::{Dictionary, DictionarySpec};
use crate::error::{Error, Result};
use crate::lpspace::{check_exponent, lp_norm, NormingFunctional, SampledFunction};
use crate::solvers::{project_best_warm, Projection, SolverOptions};

/// Version of the serialized trace document.
pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// How step (1) picks among elements satisfying the weak inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Selection {
    /// Smallest index attaining the maximum score.
    #[default]
    Argmax,
    /// Uniform among indices with score `>= t * max`.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyConfig {
    /// Weakness parameter in `(0, 1]`.
    pub t: f64,
    pub p: f64,
    /// Defaults to `10 * |dict|`.
    pub max_iter: Option<usize>,
    /// Halt once `||f_m|| <= stop_tol`; defaults to `1e-10 ||f0||`.
    pub stop_tol: Option<f64>,
    /// Optimality tolerance handed to the projection; defaults to `1e-9 ||f0||`.
    pub opt_tol: Option<f64>,
    pub max_inner_iter: usize,
    #[serde(default)]
    pub selection: Selection,
}

impl GreedyConfig {
    pub fn new(p: f64) -> Self {
        Self {
            t: 1.0,
            p,
            max_iter: None,
            stop_tol: None,
            opt_tol: None,
            max_inner_iter: 100,
            selection: Selection::Argmax,
        }
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = Some(max_iter);
        self
    }

    pub fn with_selection(mut self, selection: Selection) -> Self {
        self.selection = selection;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t <= 1.0) {
            return Err(Error::param("t", format!("weakness parameter {} not in (0, 1]", self.t)));
        }
        check_exponent(self.p)?;
        for (name, v) in [("stop_tol", self.stop_tol), ("opt_tol", self.opt_tol)] {
            if let Some(v) = v {
                if !(v >= 0.0) {
                    return Err(Error::param(name, "must be nonnegative"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    ZeroTarget,
    MaxIter,
    StopTol,
    /// `sup_g |F_{f_{m-1}}(g)|` vanished (to within `opt_tol`).
    ZeroFunctional,
    /// An already selected element was picked again; the span did not grow.
    Stalled,
    /// Thresholding run: fixed number of terms.
    Terms,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreedyTrace {
    pub algorithm: String,
    pub config: GreedyConfig,
    /// `T^m`, in selection order.
    pub selected: Vec<usize>,
    /// `||f_m||` for `m = 0..=M`.
    pub residual_norms: Vec<f64>,
    /// Coefficients of `G_m` on `selected[..m]`, for `m = 1..=M`.
    pub coefficients: Vec<Vec<f64>>,
    /// `sup_g |F_{f_{m-1}}(g)|` at each selection step.
    pub max_scores: Vec<f64>,
    /// `max_{j <= m} |F_{f_m}(phi_j)|` after each projection.
    pub optimality: Vec<f64>,
    pub ties_broken: usize,
    pub status: HaltReason,
    #[serde(skip)]
    pub final_projection: Option<Projection>,
}

impl GreedyTrace {
    pub fn iterations(&self) -> usize {
        self.residual_norms.len().saturating_sub(1)
    }

    pub fn final_norm(&self) -> f64 {
        *self.residual_norms.last().unwrap_or(&0.0)
    }

    /// `||f_m||`, holding the last value once the run has halted.
    pub fn norm_at(&self, m: usize) -> f64 {
        let i = m.min(self.residual_norms.len().saturating_sub(1));
        self.residual_norms.get(i).copied().unwrap_or(0.0)
    }
}

/// Serialized form of a trace, as written by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceDocument {
    pub schema_version: u32,
    #[serde(default)]
    pub dictionary: Option<DictionarySpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub trace: GreedyTrace,
}

impl TraceDocument {
    pub fn new(trace: GreedyTrace, dictionary: Option<DictionarySpec>, seed: Option<u64>) -> Self {
        Self {
            schema_version: TRACE_SCHEMA_VERSION,
            dictionary,
            seed,
            trace,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("schema_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::config("schema_version", "missing or not an integer"))?;
        if found != u64::from(TRACE_SCHEMA_VERSION) {
            return Err(Error::SchemaVersion {
                found: found as u32,
                expected: TRACE_SCHEMA_VERSION,
            });
        }
        Ok(serde_json::from_value(value)?)
    }
}

/// Picks an index satisfying `s_i >= t * max s`.
///
/// With `t >= 1` or no generator this is the smallest maximizing index;
/// otherwise the choice is uniform over all eligible indices.
pub fn weak_select(scores: &[f64], t: f64, rng: Option<&mut ChaCha8Rng>) -> Option<usize> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if scores.is_empty() || !max.is_finite() {
        return None;
    }
    match rng {
        Some(rng) if t < 1.0 => {
            let threshold = t * max;
            let eligible: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= threshold).collect();
            Some(eligible[rng.random_range(0..eligible.len())])
        }
        _ => scores.iter().position(|&s| s == max),
    }
}

fn scores(functional: &NormingFunctional, dict: &Dictionary) -> Vec<f64> {
    let elements = dict.elements();
    if elements.len() >= 256 {
        elements
            .par_iter()
            .map(|g| functional.apply_slice(g.values()).abs())
            .collect()
    } else {
        elements
            .iter()
            .map(|g| functional.apply_slice(g.values()).abs())
            .collect()
    }
}

/// Weak Chebyshev Greedy Algorithm.
///
/// Each step scores every element by `|F_{f_{m-1}}(g)|`, selects one
/// satisfying the weak inequality (smallest argmax by default), and
/// re-projects `f0` onto the span of everything selected so far.
pub fn wcga_run(f0: &SampledFunction, dict: &Dictionary, cfg: &GreedyConfig) -> Result<GreedyTrace> {
    run_chebyshev(f0, dict, cfg, "wcga")
}

/// WOMP: the WCGA in `L_2`. Requires an `L_2`-normalized dictionary.
pub fn womp_run(f0: &SampledFunction, dict: &Dictionary, cfg: &GreedyConfig) -> Result<GreedyTrace> {
    if cfg.p != 2.0 {
        return Err(Error::param("p", "WOMP runs in L_2"));
    }
    run_chebyshev(f0, dict, cfg, "womp")
}

fn run_chebyshev(
    f0: &SampledFunction,
    dict: &Dictionary,
    cfg: &GreedyConfig,
    algorithm: &str,
) -> Result<GreedyTrace> {
    cfg.validate()?;
    if cfg.p != dict.p() {
        return Err(Error::param(
            "p",
            format!("dictionary is normalized in L_{} but the run uses L_{}", dict.p(), cfg.p),
        ));
    }
    if *f0.grid() != dict.grid() {
        return Err(Error::GridMismatch);
    }
    let p = cfg.p;
    let f0_norm = lp_norm(f0, p)?;
    let mut trace = GreedyTrace {
        algorithm: algorithm.to_string(),
        config: *cfg,
        selected: Vec::new(),
        residual_norms: vec![f0_norm],
        coefficients: Vec::new(),
        max_scores: Vec::new(),
        optimality: Vec::new(),
        ties_broken: 0,
        status: HaltReason::MaxIter,
        final_projection: None,
    };
    if f0_norm == 0.0 {
        trace.status = HaltReason::ZeroTarget;
        return Ok(trace);
    }

    let max_iter = cfg.max_iter.unwrap_or(10 * dict.len());
    let stop_tol = cfg.stop_tol.unwrap_or(1e-10 * f0_norm);
    let opt_tol = cfg.opt_tol.unwrap_or(1e-9 * f0_norm);
    let solver = SolverOptions {
        opt_tol,
        max_inner_iter: cfg.max_inner_iter,
        atol: stop_tol,
        force_iterative: false,
    };
    let mut rng = match cfg.selection {
        Selection::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        Selection::Argmax => None,
    };

    let mut residual = f0.clone();
    let mut coefficients: Vec<f64> = Vec::new();
    for m in 1..=max_iter + 1 {
        if trace.final_norm() <= stop_tol {
            trace.status = HaltReason::StopTol;
            break;
        }
        if m > max_iter {
            trace.status = HaltReason::MaxIter;
            break;
        }
        let functional = NormingFunctional::new(&residual, p)?;
        let s = scores(&functional, dict);
        let max = s.iter().copied().fold(0.0, f64::max);
        if max <= opt_tol {
            trace.status = HaltReason::ZeroFunctional;
            break;
        }
        let choice = weak_select(&s, cfg.t, rng.as_mut()).expect("nonempty dictionary");
        if s.iter().filter(|&&v| v == max).count() > 1 {
            trace.ties_broken += 1;
        }
        trace.max_scores.push(max);
        if trace.selected.contains(&choice) {
            trace.status = HaltReason::Stalled;
            break;
        }

        let g = dict.element(choice);
        let mut warm = coefficients.clone();
        warm.push(residual.dot(g)? / g.dot(g)?);
        trace.selected.push(choice);
        let span = dict.select(&trace.selected);
        let projection = project_best_warm(f0, &span, p, &solver, Some(&warm)).map_err(|e| Error::Iteration {
            iteration: m,
            source: Box::new(e),
        })?;

        coefficients = projection.coefficients.clone();
        residual = projection.residual.clone();
        trace.residual_norms.push(projection.residual_norm);
        trace.coefficients.push(coefficients.clone());
        trace.optimality.push(projection.optimality);
        trace.final_projection = Some(projection);
    }
    Ok(trace)
}

/// Thresholding greedy algorithm: keeps the `m` largest coefficients of
/// `f0` in an orthogonal basis (ties broken by index) and reports the
/// errors `||f0 - G_k||_p` for `k = 0..=m`.
pub fn tga_run(f0: &SampledFunction, basis: &Dictionary, m: usize, p: f64) -> Result<GreedyTrace> {
    check_exponent(p)?;
    let c = basis.coefficients(f0)?;
    // Magnitudes equal to 12 significant digits count as ties, so rounding
    // in the coefficient functionals cannot reorder them.
    let top = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let key = |v: f64| if top > 0.0 { (v.abs() / top * 1e12).round() as u64 } else { 0 };
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| key(c[b]).cmp(&key(c[a])).then(a.cmp(&b)));
    order.truncate(m.min(c.len()));

    let mut residual = f0.clone();
    let mut trace = GreedyTrace {
        algorithm: "tga".to_string(),
        config: GreedyConfig::new(p).with_max_iter(m),
        selected: Vec::with_capacity(order.len()),
        residual_norms: vec![lp_norm(f0, p)?],
        coefficients: Vec::with_capacity(order.len()),
        max_scores: Vec::new(),
        optimality: Vec::new(),
        ties_broken: 0,
        status: HaltReason::Terms,
        final_projection: None,
    };
    let mut kept = Vec::with_capacity(order.len());
    for &k in &order {
        residual.axpy(-c[k], basis.element(k))?;
        trace.selected.push(k);
        kept.push(c[k]);
        trace.residual_norms.push(lp_norm(&residual, p)?);
        trace.coefficients.push(kept.clone());
    }
    trace.final_projection = Some(Projection {
        coefficients: kept,
        residual_norm: trace.final_norm(),
        residual,
        iterations_used: 0,
        converged: true,
        optimality: f64::NAN,
    });
    Ok(trace)
}
