//! Seeded target generation.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::dictionaries::{Dictionary, SparseElement};
use crate::error::{Error, Result};
use crate::experiments::config::{CoefficientLaw, TargetKind, TargetSpec};
use crate::lpspace::{lp_norm, SampledFunction};

/// A generated target `f0 = f + e` with its clean sparse representation
/// `f` and the noise level `eps = ||e||_p`.
#[derive(Debug, Clone)]
pub struct TargetInstance {
    pub f0: SampledFunction,
    pub clean: SampledFunction,
    pub representation: SparseElement,
    pub eps: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TargetSummary {
    pub support: Vec<usize>,
    pub l1_norm: f64,
    pub eps: f64,
}

impl TargetInstance {
    pub fn summary(&self) -> TargetSummary {
        TargetSummary {
            support: self.representation.support.clone(),
            l1_norm: self.representation.l1_norm(),
            eps: self.eps,
        }
    }
}

/// RNG for trial `trial` of an experiment seeded with `seed`; `salt`
/// separates independent sweeps (e.g. sparsity levels) sharing a seed.
pub fn trial_rng(seed: u64, salt: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(trial as u64);
    rng
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn coefficients(law: CoefficientLaw, alpha: f64, count: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match law {
        CoefficientLaw::Gaussian => (0..count)
            .map(|_| loop {
                let v: f64 = rng.sample(StandardNormal);
                if v != 0.0 {
                    break v;
                }
            })
            .collect(),
        CoefficientLaw::Rademacher => (0..count).map(|_| sign(rng)).collect(),
        CoefficientLaw::Power => (1..=count).map(|j| sign(rng) * (j as f64).powf(-alpha)).collect(),
        CoefficientLaw::Adversarial => {
            let large = count.div_ceil(4);
            let chosen = sample(rng, count, large).into_vec();
            let common = sign(rng);
            (0..count)
                .map(|i| if chosen.contains(&i) { sign(rng) } else { 0.9 * common })
                .collect()
        }
    }
}

/// Draws a target following `spec`. `k` overrides `spec.k` for sparse
/// targets.
pub fn make_target(spec: &TargetSpec, dict: &Dictionary, k: Option<usize>, rng: &mut ChaCha8Rng) -> Result<TargetInstance> {
    let n = dict.len();
    let support: Vec<usize> = match spec.kind {
        TargetKind::Sparse => {
            let k = k.or(spec.k).ok_or_else(|| Error::config("target.k", "sparse targets need k"))?;
            if k > n {
                return Err(Error::config("target.k", format!("{k} exceeds dictionary size {n}")));
            }
            let mut s = sample(rng, n, k).into_vec();
            s.sort_unstable();
            s
        }
        TargetKind::Dense => (0..n).collect(),
    };
    let coeffs = coefficients(spec.law, spec.alpha, support.len(), rng);
    let representation = SparseElement::new(support, coeffs)?;
    let clean = dict.synthesize(&representation)?;
    let mut f0 = clean.clone();
    let mut eps = 0.0;
    if spec.noise > 0.0 {
        let grid = dict.grid();
        let raw: Vec<f64> = (0..grid.node_count()).map(|_| rng.sample(StandardNormal)).collect();
        let noise = SampledFunction::new(grid, raw)?;
        let scale = spec.noise * lp_norm(&clean, dict.p())? / lp_norm(&noise, dict.p())?;
        f0.axpy(scale, &noise)?;
        eps = lp_norm(&f0.sub(&clean)?, dict.p())?;
    }
    Ok(TargetInstance {
        f0,
        clean,
        representation,
        eps,
    })
}
