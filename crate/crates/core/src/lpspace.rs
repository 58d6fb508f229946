//! Discretized `L_p([0,1]^d)`: uniform periodic grids, sampled functions,
//! quadrature norms and the norming (peak) functional.
//!
//! The grid uses the rectangle rule with equal weights `n^{-d}` on the nodes
//! `{j/n : 0 <= j < n}^d`. On a periodic grid this rule integrates
//! trigonometric polynomials below the Nyquist frequency exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform tensor grid on `[0,1)^d` with equal quadrature weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    points_per_axis: usize,
}

impl Grid {
    pub fn new(dim: usize, points_per_axis: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        if points_per_axis == 0 {
            return Err(Error::param("points_per_axis", "must be positive"));
        }
        let fits = (0..dim).try_fold(1usize, |acc, _| acc.checked_mul(points_per_axis));
        match fits {
            Some(n) if n <= (1 << 28) => Ok(Self { dim, points_per_axis }),
            _ => Err(Error::param("points_per_axis", "grid too large")),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn node_count(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    /// Quadrature weight of every node.
    pub fn weight(&self) -> f64 {
        1.0 / self.node_count() as f64
    }

    /// Per-axis integer indices of node `k`; the first axis varies slowest.
    pub fn node_index(&self, mut k: usize) -> Vec<usize> {
        let n = self.points_per_axis;
        let mut idx = vec![0; self.dim];
        for slot in idx.iter_mut().rev() {
            *slot = k % n;
            k /= n;
        }
        idx
    }

    pub fn node(&self, k: usize) -> Vec<f64> {
        let n = self.points_per_axis as f64;
        self.node_index(k).into_iter().map(|j| j as f64 / n).collect()
    }

    pub fn nodes(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.node_count()).map(|k| self.node(k))
    }
}

/// A real function sampled on every node of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::LengthMismatch {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.node_count()],
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = grid.nodes().map(|x| f(&x)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn norm(&self, p: f64) -> Result<f64> {
        lp_norm(self, p)
    }

    /// Quadrature `L_2` inner product.
    pub fn dot(&self, other: &SampledFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        Ok(s * self.grid.weight())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &SampledFunction) -> Result<()> {
        self.check_same_grid(x)?;
        for (s, v) in self.values.iter_mut().zip(&x.values) {
            *s += a * v;
        }
        Ok(())
    }

    pub fn add(&self, other: &SampledFunction) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &SampledFunction) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// `sum_j coeffs[j] * elements[j]` on `grid`.
    pub fn combination(grid: Grid, elements: &[&SampledFunction], coeffs: &[f64]) -> Result<Self> {
        if elements.len() != coeffs.len() {
            return Err(Error::param(
                "coeffs",
                format!("{} coefficients for {} elements", coeffs.len(), elements.len()),
            ));
        }
        let mut out = Self::zeros(grid);
        for (g, &c) in elements.iter().zip(coeffs) {
            out.axpy(c, g)?;
        }
        Ok(out)
    }

    pub(crate) fn check_same_grid(&self, other: &SampledFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

/// `|x|^e` with a fast path for small integer exponents.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AbsPow {
    e: f64,
    int: Option<i32>,
}

impl AbsPow {
    pub(crate) fn new(e: f64) -> Self {
        let int = (e.fract() == 0.0 && e.abs() <= 16.0).then_some(e as i32);
        Self { e, int }
    }

    #[inline]
    pub(crate) fn eval(&self, x: f64) -> f64 {
        let a = x.abs();
        match self.int {
            Some(0) => 1.0,
            Some(1) => a,
            Some(2) => a * a,
            Some(k) => a.powi(k),
            None => a.powf(self.e),
        }
    }
}

/// `(sum_k w |v_k|^p)^{1/p}` without overflow: samples are rescaled by
/// their max modulus first.
pub(crate) fn lp_norm_slice(values: &[f64], weight: f64, p: f64) -> f64 {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let pw = AbsPow::new(p);
    let s: f64 = values.iter().map(|v| pw.eval(v / scale)).sum();
    scale * (s * weight).powf(1.0 / p)
}

/// Quadrature `L_p` norm.
pub fn lp_norm(f: &SampledFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(lp_norm_slice(&f.values, f.grid.weight(), p))
}

/// The norming functional `F_f` of a nonzero `f` in `L_p`, stored as its
/// density `w * |f|^{p-1} sign(f) / ||f||^{p-1}` so that repeated
/// evaluations cost one dot product each.
#[derive(Debug, Clone)]
pub struct NormingFunctional {
    grid: Grid,
    density: Vec<f64>,
}

impl NormingFunctional {
    pub fn new(f: &SampledFunction, p: f64) -> Result<Self> {
        check_exponent(p)?;
        let density = norming_density(&f.values, f.grid.weight(), p).ok_or(Error::ZeroFunction)?;
        Ok(Self {
            grid: f.grid,
            density,
        })
    }

    pub fn apply(&self, g: &SampledFunction) -> Result<f64> {
        if g.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.apply_slice(&g.values))
    }

    #[inline]
    pub(crate) fn apply_slice(&self, g: &[f64]) -> f64 {
        self.density.iter().zip(g).map(|(h, v)| h * v).sum()
    }
}

pub(crate) fn norming_density(values: &[f64], weight: f64, p: f64) -> Option<Vec<f64>> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let pw = AbsPow::new(p - 1.0);
    let norm = lp_norm_slice(values, weight, p) / scale;
    let factor = weight / pw.eval(norm);
    Some(
        values
            .iter()
            .map(|v| {
                let u = v / scale;
                factor * pw.eval(u) * u.signum()
            })
            .collect(),
    )
}

/// `F_f(g)` for the unique norming functional of `f` in `L_p`.
pub fn peak_functional(f: &SampledFunction, g: &SampledFunction, p: f64) -> Result<f64> {
    f.check_same_grid(g)?;
    NormingFunctional::new(f, p)?.apply(g)
}

/// Power-type bound `rho(u) <= gamma u^q` on the modulus of smoothness of
/// `L_p`, together with the dual exponent `q' = q/(q-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessParams {
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
    pub q_conj: f64,
}

pub fn smoothness_params(p: f64) -> Result<SmoothnessParams> {
    check_exponent(p)?;
    let (q, gamma) = if p >= 2.0 {
        (2.0, (p - 1.0) / 2.0)
    } else {
        (p, 1.0 / p)
    };
    Ok(SmoothnessParams {
        p,
        q,
        gamma,
        q_conj: q / (q - 1.0),
    })
}
