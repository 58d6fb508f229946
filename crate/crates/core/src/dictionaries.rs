//! Dictionary builders: the real trigonometric system, the Haar system and
//! explicit matrix dictionaries, each normalized in `L_p` on a grid.

use std::collections::HashSet;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lpspace::{check_exponent, lp_norm, Grid, SampledFunction};

/// Reproducible descriptor of a dictionary: its type and parameters, never
/// its samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DictionarySpec {
    Trig {
        #[serde(default = "one")]
        d: usize,
        max_freq: usize,
        p: f64,
        #[serde(default = "default_points")]
        points: usize,
    },
    Haar {
        #[serde(default = "one")]
        d: usize,
        levels: u32,
        p: f64,
        #[serde(default = "default_points")]
        points: usize,
    },
    Gaussian {
        rows: usize,
        cols: usize,
        seed: u64,
        p: f64,
    },
    /// Explicit columns supplied by the caller; not rebuildable from the
    /// descriptor alone.
    Matrix { columns: usize, p: f64, points: usize },
}

fn one() -> usize {
    1
}

fn default_points() -> usize {
    256
}

impl DictionarySpec {
    pub fn p(&self) -> f64 {
        match *self {
            DictionarySpec::Trig { p, .. }
            | DictionarySpec::Haar { p, .. }
            | DictionarySpec::Gaussian { p, .. }
            | DictionarySpec::Matrix { p, .. } => p,
        }
    }

    pub fn build(&self) -> Result<Dictionary> {
        match *self {
            DictionarySpec::Trig {
                d,
                max_freq,
                p,
                points,
            } => build_trig(d, max_freq, p, Grid::new(d, points)?),
            DictionarySpec::Haar {
                d,
                levels,
                p,
                points,
            } => {
                let grid = Grid::new(d, points)?;
                if d == 1 {
                    build_haar(levels, p, grid)
                } else {
                    build_haar_tensor(levels, p, grid)
                }
            }
            DictionarySpec::Gaussian {
                rows,
                cols,
                seed,
                p,
            } => build_gaussian(rows, cols, seed, p),
            DictionarySpec::Matrix { .. } => Err(Error::param(
                "type",
                "matrix dictionaries carry explicit columns and cannot be rebuilt from a descriptor",
            )),
        }
    }
}

/// Ordered finite family of unit-norm sampled functions.
///
/// The element order is fixed at construction and defines tie-breaking in
/// the greedy selection step.
#[derive(Debug, Clone)]
pub struct Dictionary {
    elements: Vec<SampledFunction>,
    labels: Vec<String>,
    p: f64,
    spec: DictionarySpec,
    orthogonal: bool,
}

impl Dictionary {
    fn from_raw(
        raw: Vec<SampledFunction>,
        labels: Vec<String>,
        p: f64,
        spec: DictionarySpec,
        orthogonal: bool,
    ) -> Result<Self> {
        debug_assert_eq!(raw.len(), labels.len());
        let unique: HashSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(Error::param("labels", "dictionary labels must be unique"));
        }
        let elements = raw
            .into_iter()
            .enumerate()
            .map(|(i, g)| {
                let norm = lp_norm(&g, p)?;
                if norm == 0.0 {
                    return Err(Error::param("columns", format!("element {i} is zero")));
                }
                Ok(g.scaled(1.0 / norm))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            elements,
            labels,
            p,
            spec,
            orthogonal,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &SampledFunction {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[SampledFunction] {
        &self.elements
    }

    pub fn select(&self, indices: &[usize]) -> Vec<&SampledFunction> {
        indices.iter().map(|&i| &self.elements[i]).collect()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn spec(&self) -> &DictionarySpec {
        &self.spec
    }

    pub fn grid(&self) -> Grid {
        *self.elements[0].grid()
    }

    /// True for trigonometric and Haar systems, whose coefficient
    /// functionals are rescaled `L_2` inner products.
    pub fn is_orthogonal(&self) -> bool {
        self.orthogonal
    }

    /// Expansion coefficients `c_k(f) = <f, g_k> / <g_k, g_k>` with respect
    /// to an orthogonal system.
    pub fn coefficients(&self, f: &SampledFunction) -> Result<Vec<f64>> {
        if !self.orthogonal {
            return Err(Error::NotOrthogonal(format!("{:?}", self.spec)));
        }
        self.elements
            .iter()
            .map(|g| Ok(f.dot(g)? / g.dot(g)?))
            .collect()
    }

    /// `sum_i x_i g_i` for a sparse element.
    pub fn synthesize(&self, element: &SparseElement) -> Result<SampledFunction> {
        if let Some(&bad) = element.support.iter().find(|&&i| i >= self.len()) {
            return Err(Error::param("support", format!("index {bad} out of range")));
        }
        SampledFunction::combination(self.grid(), &self.select(&element.support), &element.coefficients)
    }
}

/// `f = sum_{i in T} x_i g_i` with no stored zero coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseElement {
    pub support: Vec<usize>,
    pub coefficients: Vec<f64>,
}

impl SparseElement {
    pub fn new(support: Vec<usize>, coefficients: Vec<f64>) -> Result<Self> {
        if support.len() != coefficients.len() {
            return Err(Error::param("coefficients", "one coefficient per support index"));
        }
        if coefficients.iter().any(|&c| c == 0.0 || !c.is_finite()) {
            return Err(Error::param("coefficients", "coefficients must be finite and nonzero"));
        }
        let unique: HashSet<usize> = support.iter().copied().collect();
        if unique.len() != support.len() {
            return Err(Error::param("support", "indices must be distinct"));
        }
        Ok(Self {
            support,
            coefficients,
        })
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// `sum |x_i|`.
    pub fn l1_norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c.abs()).sum()
    }
}

/// Univariate real trigonometric factor: 0 is the constant, `2k-1` is
/// `cos 2 pi k x` and `2k` is `sin 2 pi k x`.
fn trig_factor(index: usize, x: f64) -> f64 {
    if index == 0 {
        return 1.0;
    }
    let k = index.div_ceil(2) as f64;
    if index % 2 == 1 {
        (2.0 * PI * k * x).cos()
    } else {
        (2.0 * PI * k * x).sin()
    }
}

fn trig_label(index: usize) -> String {
    match index {
        0 => "1".to_string(),
        i if i % 2 == 1 => format!("cos{}", i.div_ceil(2)),
        i => format!("sin{}", i / 2),
    }
}

/// Lexicographic enumeration of `d`-tuples over `0..base`.
fn tuples(d: usize, base: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = base.pow(d as u32);
    (0..total).map(move |mut k| {
        let mut t = vec![0; d];
        for slot in t.iter_mut().rev() {
            *slot = k % base;
            k /= base;
        }
        t
    })
}

/// Tensor products of univariate factor tables, `tables[a][j][node_along_axis]`.
fn tensorize(grid: Grid, tables: &[Vec<f64>], count: usize, d: usize) -> Vec<(Vec<usize>, SampledFunction)> {
    let n = grid.points_per_axis();
    tuples(d, count)
        .map(|tuple| {
            let values = (0..grid.node_count())
                .map(|k| {
                    grid.node_index(k)
                        .iter()
                        .zip(&tuple)
                        .map(|(&node, &factor)| tables[factor][node])
                        .product()
                })
                .collect();
            debug_assert_eq!(tables[0].len(), n);
            (tuple, SampledFunction::new(grid, values).expect("finite samples"))
        })
        .collect()
}

/// Real trigonometric system with frequencies up to `max_freq` per axis,
/// normalized in `L_p`. Elements are ordered lexicographically over the
/// per-axis factor sequence `1, cos1, sin1, cos2, sin2, ...`, so the
/// constant comes first; there are `(2N+1)^d` of them.
pub fn build_trig(d: usize, max_freq: usize, p: f64, grid: Grid) -> Result<Dictionary> {
    check_exponent(p)?;
    if d == 0 || grid.dim() != d {
        return Err(Error::param("d", format!("grid has dimension {}, requested {d}", grid.dim())));
    }
    if max_freq == 0 {
        return Err(Error::param("max_freq", "must be positive"));
    }
    if 2 * max_freq >= grid.points_per_axis() {
        return Err(Error::param(
            "max_freq",
            format!(
                "frequency {max_freq} is at or above Nyquist for {} points per axis",
                grid.points_per_axis()
            ),
        ));
    }
    let n = grid.points_per_axis();
    let count = 2 * max_freq + 1;
    let tables: Vec<Vec<f64>> = (0..count)
        .map(|j| (0..n).map(|i| trig_factor(j, i as f64 / n as f64)).collect())
        .collect();
    let (labels, raw): (Vec<_>, Vec<_>) = tensorize(grid, &tables, count, d)
        .into_iter()
        .map(|(t, f)| (t.iter().map(|&j| trig_label(j)).collect::<Vec<_>>().join("*"), f))
        .unzip();
    Dictionary::from_raw(
        raw,
        labels,
        p,
        DictionarySpec::Trig {
            d,
            max_freq,
            p,
            points: n,
        },
        true,
    )
}

/// Univariate Haar factors on `n` points: the constant (labelled `[0,1]`)
/// followed by `H_I` for every dyadic `I` of length `2^-j`, `j = 0..levels-1`,
/// with `+1` on the left half of `I` and `-1` on the right half.
///
/// The constant and the first Haar function `H_(0,1]` both live at level
/// zero, so the system has exactly `2^levels` elements.
fn haar_tables(levels: u32, n: usize) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut labels = vec!["[0,1]".to_string()];
    let mut tables = vec![vec![1.0; n]];
    for j in 0..levels {
        let count = 1usize << j;
        let width = n / count;
        for k in 0..count {
            let mut v = vec![0.0; n];
            for (i, slot) in v.iter_mut().enumerate().skip(k * width).take(width) {
                *slot = if i < k * width + width / 2 { 1.0 } else { -1.0 };
            }
            labels.push(if j == 0 {
                "(0,1]".to_string()
            } else {
                format!("({k},{})/{count}", k + 1)
            });
            tables.push(v);
        }
    }
    (labels, tables)
}

fn check_haar_grid(levels: u32, grid: Grid) -> Result<()> {
    let n = grid.points_per_axis();
    if levels >= usize::BITS || !n.is_multiple_of(1usize << levels) {
        return Err(Error::param(
            "levels",
            format!("2^{levels} must divide the {n} points per axis"),
        ));
    }
    Ok(())
}

/// Univariate Haar system with `2^levels` elements, normalized in `L_p`.
pub fn build_haar(levels: u32, p: f64, grid: Grid) -> Result<Dictionary> {
    check_exponent(p)?;
    if grid.dim() != 1 {
        return Err(Error::param("grid", "the univariate Haar system needs a 1-d grid"));
    }
    check_haar_grid(levels, grid)?;
    let (labels, tables) = haar_tables(levels, grid.points_per_axis());
    let raw = tables
        .into_iter()
        .map(|v| SampledFunction::new(grid, v))
        .collect::<Result<Vec<_>>>()?;
    Dictionary::from_raw(
        raw,
        labels,
        p,
        DictionarySpec::Haar {
            d: 1,
            levels,
            p,
            points: grid.points_per_axis(),
        },
        true,
    )
}

/// Multivariate Haar system: tensor products of univariate Haar factors,
/// renormalized in `L_p`; `(2^levels)^d` elements.
pub fn build_haar_tensor(levels: u32, p: f64, grid: Grid) -> Result<Dictionary> {
    check_exponent(p)?;
    check_haar_grid(levels, grid)?;
    let d = grid.dim();
    let (names, tables) = haar_tables(levels, grid.points_per_axis());
    let (labels, raw): (Vec<_>, Vec<_>) = tensorize(grid, &tables, tables.len(), d)
        .into_iter()
        .map(|(t, f)| (t.iter().map(|&j| names[j].clone()).collect::<Vec<_>>().join("x"), f))
        .unzip();
    Dictionary::from_raw(
        raw,
        labels,
        p,
        DictionarySpec::Haar {
            d,
            levels,
            p,
            points: grid.points_per_axis(),
        },
        true,
    )
}

/// Wraps explicit value vectors as an `L_p`-normalized dictionary.
pub fn build_matrix(columns: Vec<Vec<f64>>, p: f64, grid: Grid) -> Result<Dictionary> {
    check_exponent(p)?;
    if columns.is_empty() {
        return Err(Error::param("columns", "at least one column is required"));
    }
    let count = columns.len();
    let raw = columns
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            if c.iter().all(|&v| v == 0.0) {
                return Err(Error::param("columns", format!("column {i} is zero")));
            }
            SampledFunction::new(grid, c)
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = (0..count).map(|i| format!("col{i}")).collect();
    Dictionary::from_raw(
        raw,
        labels,
        p,
        DictionarySpec::Matrix {
            columns: count,
            p,
            points: grid.points_per_axis(),
        },
        false,
    )
}

/// Seeded Gaussian `rows x cols` matrix dictionary on a 1-d grid of `rows`
/// points.
pub fn build_gaussian(rows: usize, cols: usize, seed: u64, p: f64) -> Result<Dictionary> {
    if cols == 0 {
        return Err(Error::param("cols", "must be positive"));
    }
    let grid = Grid::new(1, rows)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let columns = (0..cols)
        .map(|_| (0..rows).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let mut dict = build_matrix(columns, p, grid)?;
    dict.spec = DictionarySpec::Gaussian { rows, cols, seed, p };
    Ok(dict)
}

/// Quadrature Gram matrix `<g_i, g_j>`.
pub fn gram(dict: &Dictionary) -> DMatrix<f64> {
    gram_of(&dict.elements.iter().collect::<Vec<_>>())
}

pub(crate) fn gram_of(elements: &[&SampledFunction]) -> DMatrix<f64> {
    let k = elements.len();
    let mut g = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = elements[i].dot(elements[j]).expect("dictionary elements share a grid");
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff_from_identity(g: &DMatrix<f64>) -> f64 {
        let id = DMatrix::<f64>::identity(g.nrows(), g.ncols());
        (g - id).abs().max()
    }

    fn assert_normalized(dict: &Dictionary, tol: f64) {
        for g in dict.elements() {
            assert!((lp_norm(g, dict.p()).unwrap() - 1.0).abs() < tol);
        }
    }

    #[test]
    fn trig_small_l2() {
        let grid = Grid::new(1, 64).unwrap();
        let dict = build_trig(1, 1, 2.0, grid).unwrap();
        assert_eq!(dict.len(), 3);
        assert_eq!(dict.labels(), ["1", "cos1", "sin1"]);
        assert_normalized(&dict, 1e-10);
        let c = &dict.element(1).values()[1];
        let expected = 2f64.sqrt() * (2.0 * PI / 64.0).cos();
        assert!((c - expected).abs() < 1e-12);
    }

    #[test]
    fn trig_l4_cos_matches_closed_form() {
        let grid = Grid::new(1, 256).unwrap();
        let dict = build_trig(1, 2, 4.0, grid).unwrap();
        assert_eq!(dict.len(), 5);
        assert_normalized(&dict, 1e-9);
        // int cos^4 = 3/8
        let norm = (3.0f64 / 8.0).powf(0.25);
        for (i, x) in grid.nodes().enumerate() {
            let expected = (2.0 * PI * x[0]).cos() / norm;
            assert!((dict.element(1).values()[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn trig_tensor_count_and_order() {
        let grid = Grid::new(2, 16).unwrap();
        let dict = build_trig(2, 1, 2.0, grid).unwrap();
        assert_eq!(dict.len(), 9);
        assert_eq!(dict.labels()[0], "1*1");
        assert_eq!(dict.labels()[1], "1*cos1");
        assert_eq!(dict.labels()[3], "cos1*1");
        assert!(max_abs_diff_from_identity(&gram(&dict)) < 1e-10);
    }

    #[test]
    fn trig_rejects_nyquist() {
        let grid = Grid::new(1, 16).unwrap();
        assert!(build_trig(1, 8, 2.0, grid).is_err());
        assert!(build_trig(1, 7, 2.0, grid).is_ok());
        assert!(build_trig(2, 3, 2.0, grid).is_err());
    }

    #[test]
    fn trig_gram_is_identity_in_l2() {
        let grid = Grid::new(1, 256).unwrap();
        let dict = build_trig(1, 20, 2.0, grid).unwrap();
        assert!(max_abs_diff_from_identity(&gram(&dict)) < 1e-10);
    }

    #[test]
    fn haar_level_one() {
        let grid = Grid::new(1, 8).unwrap();
        let dict = build_haar(1, 2.0, grid).unwrap();
        assert_eq!(dict.labels(), ["[0,1]", "(0,1]"]);
        assert_eq!(dict.element(1).values(), &[1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0]);
        assert_normalized(&dict, 1e-12);
    }

    #[test]
    fn haar_count_and_norms() {
        let grid = Grid::new(1, 64).unwrap();
        let dict = build_haar(3, 1.5, grid).unwrap();
        assert_eq!(dict.len(), 8);
        // direct quadrature of |H_I|^1.5
        for g in dict.elements() {
            let s: f64 = g.values().iter().map(|v| v.abs().powf(1.5)).sum::<f64>() / 64.0;
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn haar_dual_norm_identity() {
        let grid = Grid::new(1, 32).unwrap();
        for p in [1.25, 1.5, 2.0, 3.0] {
            let dict = build_haar(4, p, grid).unwrap();
            let p_conj = p / (p - 1.0);
            for g in dict.elements() {
                let ratio = lp_norm(g, p_conj).unwrap() / lp_norm(g, 2.0).unwrap().powi(2);
                assert!((ratio - 1.0).abs() < 1e-9, "p={p} ratio={ratio}");
            }
        }
    }

    #[test]
    fn haar_gram_identity_and_grid_checks() {
        let grid = Grid::new(1, 16).unwrap();
        let dict = build_haar(4, 2.0, grid).unwrap();
        assert!(max_abs_diff_from_identity(&gram(&dict)) < 1e-10);
        assert!(build_haar(5, 2.0, grid).is_err());
        assert!(build_haar(2, 2.0, Grid::new(2, 16).unwrap()).is_err());
    }

    #[test]
    fn haar_tensor() {
        let grid = Grid::new(2, 8).unwrap();
        let dict = build_haar_tensor(2, 3.0, grid).unwrap();
        assert_eq!(dict.len(), 16);
        assert_normalized(&dict, 1e-12);
        let l2 = DictionarySpec::Haar {
            d: 2,
            levels: 2,
            p: 2.0,
            points: 8,
        }
        .build()
        .unwrap();
        assert!(max_abs_diff_from_identity(&gram(&l2)) < 1e-10);
    }

    #[test]
    fn matrix_identity_columns() {
        let grid = Grid::new(1, 4).unwrap();
        let cols = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 3.0 } else { 0.0 }).collect())
            .collect();
        let dict = build_matrix(cols, 2.0, grid).unwrap();
        assert!(max_abs_diff_from_identity(&gram(&dict)) < 1e-14);
    }

    #[test]
    fn matrix_correlated_pair() {
        let grid = Grid::new(1, 2).unwrap();
        let rho: f64 = 0.37;
        let cols = vec![vec![2.0, 0.0], vec![5.0 * rho, 5.0 * (1.0 - rho * rho).sqrt()]];
        let g = gram(&build_matrix(cols, 2.0, grid).unwrap());
        assert!((g[(0, 1)] - rho).abs() < 1e-12);
        assert!((g[(1, 0)] - rho).abs() < 1e-12);
        assert!((g[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_rejects_zero_column() {
        let grid = Grid::new(1, 2).unwrap();
        assert!(build_matrix(vec![vec![1.0, 0.0], vec![0.0, 0.0]], 2.0, grid).is_err());
    }

    #[test]
    fn gaussian_is_normalized_and_deterministic() {
        let a = build_gaussian(64, 128, 7, 2.0).unwrap();
        let b = build_gaussian(64, 128, 7, 2.0).unwrap();
        assert_eq!(a.len(), 128);
        assert_normalized(&a, 1e-12);
        for (x, y) in a.elements().iter().zip(b.elements()) {
            assert_eq!(x.values(), y.values());
        }
        let c = build_gaussian(64, 128, 8, 2.0).unwrap();
        assert_ne!(a.element(0).values(), c.element(0).values());
    }

    #[test]
    fn rebuild_is_bit_identical() {
        let spec = DictionarySpec::Trig {
            d: 1,
            max_freq: 5,
            p: 3.0,
            points: 64,
        };
        let a = spec.build().unwrap();
        let b = spec.build().unwrap();
        for (x, y) in a.elements().iter().zip(b.elements()) {
            assert_eq!(x.values(), y.values());
        }
    }

    #[test]
    fn spec_json_roundtrip() {
        let spec = DictionarySpec::Gaussian {
            rows: 64,
            cols: 128,
            seed: 3,
            p: 2.0,
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"type\":\"gaussian\""));
        assert_eq!(serde_json::from_str::<DictionarySpec>(&json).unwrap(), spec);
    }

    #[test]
    fn coefficients_of_orthogonal_systems() {
        let grid = Grid::new(1, 64).unwrap();
        let dict = build_trig(1, 3, 4.0, grid).unwrap();
        let x = SparseElement::new(vec![1, 4], vec![2.0, -0.5]).unwrap();
        let f = dict.synthesize(&x).unwrap();
        let c = dict.coefficients(&f).unwrap();
        for (i, ci) in c.iter().enumerate() {
            let expected = match i {
                1 => 2.0,
                4 => -0.5,
                _ => 0.0,
            };
            assert!((ci - expected).abs() < 1e-12);
        }
        let g = build_gaussian(8, 4, 1, 2.0).unwrap();
        let f = g.element(0).clone();
        assert!(matches!(g.coefficients(&f), Err(Error::NotOrthogonal(_))));
    }

    #[test]
    fn sparse_element_validation() {
        assert!(SparseElement::new(vec![0, 1], vec![1.0]).is_err());
        assert!(SparseElement::new(vec![0, 1], vec![1.0, 0.0]).is_err());
        assert!(SparseElement::new(vec![2, 2], vec![1.0, 1.0]).is_err());
        let x = SparseElement::new(vec![3, 1], vec![-2.0, 0.5]).unwrap();
        assert_eq!(x.l1_norm(), 2.5);
    }
}
