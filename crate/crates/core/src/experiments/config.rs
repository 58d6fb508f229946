//! Declarative TOML experiment configuration.

use serde::{Deserialize, Serialize};

use crate::dictionaries::DictionarySpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Greedy error after `m'` iterations against `sigma_m`.
    Lebesgue,
    /// Exact-recovery success rates over sparsity and iteration budget.
    Phase,
    /// Thresholding against the WCGA on a basis.
    TgaCompare,
    /// Residual decay on a dense target and the implied rate constant.
    Rate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmName {
    Wcga,
    Womp,
    Tga,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetRule {
    /// `m' = ceil(c m ln(m + 1))`.
    #[default]
    Mlogm,
    /// `m' = ceil(c m)`.
    Linear,
}

impl BudgetRule {
    pub fn iterations(self, c: f64, m: usize) -> usize {
        let m = m as f64;
        let raw = match self {
            BudgetRule::Mlogm => c * m * (m + 1.0).ln(),
            BudgetRule::Linear => c * m,
        };
        // Guard against 2.0000000000000004 rounding up to 3.
        (raw - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    #[default]
    Argmax,
    /// Uniform among the `t`-eligible elements, seeded per trial.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub name: AlgorithmName,
    #[serde(default = "one_f64")]
    pub t: f64,
    #[serde(default)]
    pub budget: BudgetRule,
    #[serde(default = "one_f64")]
    pub budget_c: f64,
    #[serde(default)]
    pub selection: SelectionMode,
    /// Relative to `||f0||`.
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
    /// Relative to `||f0||`.
    #[serde(default = "default_opt_tol")]
    pub opt_tol: f64,
    #[serde(default = "default_inner")]
    pub max_inner_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Sparse,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientLaw {
    #[default]
    Gaussian,
    Rademacher,
    /// `+-j^{-alpha}` for the `j`-th coefficient.
    Power,
    /// A quarter of the coefficients at `+-1` with random signs, the rest
    /// at `0.9` with a common sign.
    Adversarial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub kind: TargetKind,
    /// Sparsity for sparse targets; phase experiments take it from `k_values`.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub law: CoefficientLaw,
    #[serde(default = "one_f64")]
    pub alpha: f64,
    /// Noise level relative to the clean target's norm.
    #[serde(default)]
    pub noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    #[serde(default)]
    pub m_max: Option<usize>,
    #[serde(default = "default_cap")]
    pub combo_cap: u64,
    /// Beam search width used when the exhaustive cost exceeds the cap.
    #[serde(default)]
    pub beam_width: Option<usize>,
    /// `sigma_m` at or below `atol * ||f0||` counts as zero.
    #[serde(default = "default_atol")]
    pub atol: f64,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self {
            m_max: None,
            combo_cap: default_cap(),
            beam_width: None,
            atol: default_atol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub m_values: Vec<usize>,
    #[serde(default)]
    pub k_values: Vec<usize>,
    #[serde(default)]
    pub budget_factors: Vec<f64>,
    /// Iterations of a rate run.
    #[serde(default)]
    pub iterations: Option<usize>,
    /// Inclusive `m` range of the log-log fit in rate runs.
    #[serde(default)]
    pub fit_range: Option<[usize; 2]>,
    /// `C` in the `phi(m)` measurement `min { k : ||f_k|| <= C sigma_m } / m`.
    #[serde(default)]
    pub phi_constant: Option<f64>,
    /// Success threshold of phase runs, relative to `||f0||`.
    #[serde(default)]
    pub success_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub trials: usize,
    pub dictionary: DictionarySpec,
    pub algorithm: AlgorithmSpec,
    pub target: TargetSpec,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
}

fn one_f64() -> f64 {
    1.0
}

fn default_stop_tol() -> f64 {
    1e-10
}

fn default_opt_tol() -> f64 {
    1e-9
}

fn default_inner() -> usize {
    100
}

fn default_cap() -> u64 {
    2_000_000
}

fn default_atol() -> f64 {
    1e-10
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let key = e
                .message()
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "<document>".into());
            Error::config(key, e.to_string().trim_end())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::config(key, msg));
        if self.trials == 0 {
            return bad("trials", "must be at least 1".into());
        }
        let a = &self.algorithm;
        if !(a.t > 0.0 && a.t <= 1.0) {
            return bad("algorithm.t", format!("{} not in (0, 1]", a.t));
        }
        if !(a.budget_c > 0.0) {
            return bad("algorithm.budget_c", "must be positive".into());
        }
        if a.name == AlgorithmName::Womp && self.dictionary.p() != 2.0 {
            return bad("algorithm.name", "womp requires dictionary.p = 2".into());
        }
        if !(a.stop_tol >= 0.0 && a.opt_tol > 0.0) {
            return bad("algorithm.opt_tol", "tolerances must be positive".into());
        }
        let t = &self.target;
        if !(t.noise >= 0.0 && t.noise.is_finite()) {
            return bad("target.noise", "must be a nonnegative number".into());
        }
        if t.law == CoefficientLaw::Power && !(t.alpha > 0.0) {
            return bad("target.alpha", "must be positive".into());
        }
        let s = &self.sweep;
        if s.budget_factors.iter().any(|&c| !(c > 0.0)) {
            return bad("sweep.budget_factors", "factors must be positive".into());
        }
        match self.kind {
            ExperimentKind::Lebesgue | ExperimentKind::TgaCompare => {
                if s.m_values.is_empty() {
                    return bad("sweep.m_values", "required for this kind".into());
                }
                if t.kind == TargetKind::Sparse && t.k.is_none() {
                    return bad("target.k", "sparse targets need k".into());
                }
                if self.kind == ExperimentKind::TgaCompare && a.name != AlgorithmName::Wcga {
                    return bad("algorithm.name", "tga_compare pits TGA against wcga".into());
                }
            }
            ExperimentKind::Phase => {
                if s.k_values.is_empty() || s.k_values.contains(&0) {
                    return bad("sweep.k_values", "need a nonempty list of positive sparsities".into());
                }
                if s.budget_factors.is_empty() {
                    return bad("sweep.budget_factors", "required for phase experiments".into());
                }
                if t.kind != TargetKind::Sparse {
                    return bad("target.kind", "phase experiments use sparse targets".into());
                }
                if a.name == AlgorithmName::Tga {
                    return bad("algorithm.name", "phase experiments run wcga or womp".into());
                }
            }
            ExperimentKind::Rate => {
                if a.name == AlgorithmName::Tga {
                    return bad("algorithm.name", "rate experiments run wcga or womp".into());
                }
                if let Some([lo, hi]) = s.fit_range {
                    if lo == 0 || lo >= hi {
                        return bad("sweep.fit_range", "need 1 <= lo < hi".into());
                    }
                }
            }
        }
        if let Some(k) = t.k {
            if k == 0 {
                return bad("target.k", "must be at least 1".into());
            }
        }
        Ok(())
    }

    /// Budget factors swept by Lebesgue runs; `[budget_c]` when none are listed.
    pub fn budget_factors(&self) -> Vec<f64> {
        if self.sweep.budget_factors.is_empty() {
            vec![self.algorithm.budget_c]
        } else {
            self.sweep.budget_factors.clone()
        }
    }
}
