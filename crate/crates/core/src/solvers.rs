//! Best `L_p` approximation from the span of finitely many elements.
//!
//! For `p = 2` the projection is a least-squares problem solved by a thin
//! QR factorization with one step of iterative refinement. For other `p`
//! the convex objective `c -> sum_k w |f0 - Phi c|_k^p` is minimized by a
//! damped Newton iteration; the stopping rule is the first-order condition
//! `max_j |F_r(phi_j)| <= opt_tol`, i.e. the norming functional of the
//! residual annihilates the span.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lpspace::{check_exponent, lp_norm_slice, AbsPow, Grid, SampledFunction};

/// Gram condition numbers above this make the best approximant ill-posed.
pub const MAX_CONDITION: f64 = 1e12;

/// Floor applied to `|r|` inside the Newton weights `|r|^{p-2}`.
pub const WEIGHT_FLOOR: f64 = 1e-12;

/// Residuals below this fraction of the largest one are treated as zeros of
/// the minimizer when `p < 2`.
const PIN_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// First-order optimality tolerance on `max_j |F_r(phi_j)|`.
    pub opt_tol: f64,
    pub max_inner_iter: usize,
    /// Residuals at or below this norm are accepted as exact.
    pub atol: f64,
    /// Use the Newton path even for `p = 2`.
    pub force_iterative: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            opt_tol: 1e-9,
            max_inner_iter: 100,
            atol: 1e-10,
            force_iterative: false,
        }
    }
}

impl SolverOptions {
    /// Default tolerances scaled by the target norm: `opt_tol = 1e-9 ||f0||`
    /// and `atol = 1e-10 ||f0||`.
    pub fn relative_to(f0_norm: f64) -> Self {
        Self {
            opt_tol: 1e-9 * f0_norm,
            atol: 1e-10 * f0_norm,
            ..Self::default()
        }
    }
}

/// Result of a best-approximation solve: `residual = f0 - sum c_j phi_j`.
#[derive(Debug, Clone, Serialize)]
pub struct Projection {
    pub coefficients: Vec<f64>,
    #[serde(skip)]
    pub residual: SampledFunction,
    pub residual_norm: f64,
    pub iterations_used: usize,
    pub converged: bool,
    /// `max_j |F_r(phi_j)|` at the returned point (zero for an exact residual).
    pub optimality: f64,
}

/// Column-major `nodes x k` matrix of the span.
fn span_matrix(span: &[&SampledFunction]) -> DMatrix<f64> {
    let rows = span[0].values().len();
    DMatrix::from_iterator(rows, span.len(), span.iter().flat_map(|g| g.values().iter().copied()))
}

/// Spectral condition number of the quadrature Gram matrix of `phi`.
pub(crate) fn gram_condition(phi: &DMatrix<f64>) -> f64 {
    let gram = phi.transpose() * phi;
    let eig = SymmetricEigen::new(gram).eigenvalues;
    let max = eig.max();
    let min = eig.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn least_squares(phi: &DMatrix<f64>, target: &DVector<f64>) -> DVector<f64> {
    let qr = phi.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let solve = |rhs: &DVector<f64>| {
        r.solve_upper_triangular(&(q.transpose() * rhs))
            .expect("full-rank span after conditioning check")
    };
    let mut c = solve(target);
    let residual = target - phi * &c;
    c += solve(&residual);
    c
}

/// Best approximant to `f0` from `span(span)` in `L_p`.
pub fn project_best(
    f0: &SampledFunction,
    span: &[&SampledFunction],
    p: f64,
    opts: &SolverOptions,
) -> Result<Projection> {
    project_best_warm(f0, span, p, opts, None)
}

/// As [`project_best`], optionally starting the Newton iteration from
/// `warm` when that point has a lower objective than the `L_2` solution.
pub fn project_best_warm(
    f0: &SampledFunction,
    span: &[&SampledFunction],
    p: f64,
    opts: &SolverOptions,
    warm: Option<&[f64]>,
) -> Result<Projection> {
    check_exponent(p)?;
    for g in span {
        f0.check_same_grid(g)?;
    }
    let grid = *f0.grid();
    let weight = grid.weight();
    let f0_norm = lp_norm_slice(f0.values(), weight, p);
    if span.is_empty() {
        return Ok(Projection {
            coefficients: Vec::new(),
            residual: f0.clone(),
            residual_norm: f0_norm,
            iterations_used: 0,
            converged: true,
            optimality: 0.0,
        });
    }

    let phi = span_matrix(span);
    let condition = gram_condition(&phi);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::NumericallyDependentSpan { condition });
    }

    let k = span.len();
    if f0_norm == 0.0 {
        return finish(grid, f0, &phi, DVector::zeros(k), p, 0, true);
    }

    // Work with f0 scaled to unit max modulus.
    let scale = f0.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let target = DVector::from_iterator(f0.values().len(), f0.values().iter().map(|v| v / scale));
    let l2 = least_squares(&phi, &target);

    if p == 2.0 && !opts.force_iterative {
        return finish(grid, f0, &phi, l2 * scale, p, 0, true);
    }

    let problem = NewtonProblem {
        phi: &phi,
        target: &target,
        weight,
        p,
    };
    let opt_tol = opts.opt_tol;
    let atol = opts.atol / scale;
    let warm = warm
        .filter(|w| w.len() == k)
        .map(|w| DVector::from_iterator(k, w.iter().map(|v| v / scale)))
        .filter(|w| problem.objective(w) < problem.objective(&l2));
    let run = match warm {
        None => problem.descend(l2, opt_tol, atol, opts.max_inner_iter),
        Some(w) => {
            let warm_run = problem.descend(w, opt_tol, atol, opts.max_inner_iter);
            if warm_run.converged {
                warm_run
            } else {
                // A warm start can trap the iteration near a zero of the
                // residual; retry from the least-squares point.
                let cold = problem.descend(l2, opt_tol, atol, opts.max_inner_iter);
                if cold.better_than(&warm_run) {
                    cold
                } else {
                    warm_run
                }
            }
        }
    };
    let run = if run.converged || p >= 2.0 {
        run
    } else {
        match problem.pin_zeros(&run, opt_tol, atol, opts.max_inner_iter) {
            Some(pinned) if pinned.better_than(&run) => pinned,
            _ => run,
        }
    };
    let Descent {
        c,
        iterations,
        converged,
        ..
    } = run;
    let projection = finish(grid, f0, &phi, c * scale, p, iterations, converged)?;
    if projection.converged {
        Ok(projection)
    } else {
        Err(Error::NoConvergence {
            optimality: projection.optimality,
            best: Box::new(projection),
        })
    }
}

/// Assembles the residual from unscaled coefficients and reports optimality.
fn finish(
    grid: Grid,
    f0: &SampledFunction,
    phi: &DMatrix<f64>,
    coefficients: DVector<f64>,
    p: f64,
    iterations: usize,
    converged: bool,
) -> Result<Projection> {
    let fitted = phi * &coefficients;
    let values: Vec<f64> = f0.values().iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let weight = grid.weight();
    let residual_norm = lp_norm_slice(&values, weight, p);
    let resolved: Vec<f64> = values
        .iter()
        .zip(f0.values().iter().zip(fitted.iter()))
        .map(|(&v, (&t, &g))| if is_rounding(v, t, g) { 0.0 } else { v })
        .collect();
    let optimality = annihilation(&resolved, phi, weight, p);
    Ok(Projection {
        coefficients: coefficients.iter().copied().collect(),
        residual: SampledFunction::new(grid, values)?,
        residual_norm,
        iterations_used: iterations,
        converged,
        optimality,
    })
}

/// `r = t - g` is indistinguishable from zero at working precision.
pub(crate) fn is_rounding(r: f64, t: f64, g: f64) -> bool {
    r.abs() <= 8.0 * f64::EPSILON * (t.abs() + g.abs())
}

/// `max_j |F_r(phi_j)|`, zero when `r = 0`.
fn annihilation(residual: &[f64], phi: &DMatrix<f64>, weight: f64, p: f64) -> f64 {
    match crate::lpspace::norming_density(residual, weight, p) {
        None => 0.0,
        Some(h) => {
            let h = DVector::from_vec(h);
            (phi.transpose() * h).amax()
        }
    }
}

struct NewtonProblem<'a> {
    phi: &'a DMatrix<f64>,
    target: &'a DVector<f64>,
    weight: f64,
    p: f64,
}

struct NewtonState {
    residual: DVector<f64>,
    objective: f64,
    gradient: DVector<f64>,
    optimality: f64,
    norm: f64,
    /// Rounding-error bound on `objective`: residuals come from cancelling
    /// `target - Phi c`.
    noise: f64,
}

impl NewtonState {
    fn is_converged(&self, opt_tol: f64, atol: f64) -> bool {
        self.norm <= atol || self.optimality <= opt_tol
    }
}

struct Descent {
    c: DVector<f64>,
    state: NewtonState,
    iterations: usize,
    converged: bool,
}

impl Descent {
    fn better_than(&self, other: &Descent) -> bool {
        match (self.converged, other.converged) {
            (true, false) => true,
            (false, true) => false,
            _ => self.state.optimality < other.state.optimality,
        }
    }
}

impl NewtonProblem<'_> {
    /// Damped Newton from `c` until the optimality measure drops to
    /// `opt_tol`, the residual to `atol`, or `max_iter` steps are spent.
    fn descend(&self, mut c: DVector<f64>, opt_tol: f64, atol: f64, max_iter: usize) -> Descent {
        let mut iterations = 0;
        let mut state = self.evaluate(&c);
        let mut converged = state.is_converged(opt_tol, atol);
        while !converged && iterations < max_iter {
            iterations += 1;
            let Some(step) = self.newton_step(&state) else {
                break;
            };
            let slope = state.gradient.dot(&step);
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let trial = &c + &step * t;
                let next = self.evaluate(&trial);
                let armijo = next.objective <= state.objective + 1e-4 * t * slope;
                // Near the optimum objective differences drop below rounding;
                // fall back to the optimality measure.
                let flat = next.objective <= state.objective + state.noise.max(next.noise)
                    && next.optimality < state.optimality;
                if armijo || flat {
                    accepted = Some((trial, next));
                    break;
                }
                t *= 0.5;
            }
            let Some((trial, next)) = accepted else {
                break;
            };
            c = trial;
            state = next;
            converged = state.is_converged(opt_tol, atol);
        }
        Descent {
            c,
            state,
            iterations,
            converged,
        }
    }

    /// For `p < 2` the minimizer may vanish exactly at some nodes, where
    /// Newton only creeps towards zero. Pins the nodes whose residual has
    /// collapsed to zero and minimizes over the remaining freedom.
    fn pin_zeros(&self, run: &Descent, opt_tol: f64, atol: f64, max_iter: usize) -> Option<Descent> {
        let r = &run.state.residual;
        let top = r.amax();
        let pinned: Vec<usize> = (0..r.len()).filter(|&i| r[i].abs() <= PIN_THRESHOLD * top).collect();
        if pinned.is_empty() {
            return None;
        }
        let free: Vec<usize> = (0..r.len()).filter(|&i| r[i].abs() > PIN_THRESHOLD * top).collect();
        let k = self.phi.ncols();
        let phi_z = self.phi.select_rows(&pinned);
        let t_z = self.target.select_rows(&pinned);
        let eig = SymmetricEigen::new(phi_z.transpose() * &phi_z);
        let lmax = eig.eigenvalues.amax();
        let rhs = phi_z.transpose() * t_z;
        let mut c0 = DVector::zeros(k);
        let mut null = Vec::new();
        for (j, &l) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(j);
            if l > 1e-10 * lmax {
                c0 += v * (v.dot(&rhs) / l);
            } else {
                null.push(v.into_owned());
            }
        }
        let fixed = Descent {
            state: self.evaluate(&c0),
            c: c0.clone(),
            iterations: run.iterations,
            converged: false,
        };
        if null.is_empty() {
            let converged = fixed.state.is_converged(opt_tol, atol);
            return Some(Descent { converged, ..fixed });
        }
        let basis = DMatrix::from_columns(&null);
        let phi_free = self.phi.select_rows(&free);
        let reduced_phi = &phi_free * &basis;
        let reduced_target = self.target.select_rows(&free) - &phi_free * &c0;
        let reduced = NewtonProblem {
            phi: &reduced_phi,
            target: &reduced_target,
            weight: self.weight,
            p: self.p,
        };
        let inner = reduced.descend(DVector::zeros(basis.ncols()), opt_tol, atol, max_iter);
        let c = c0 + basis * inner.c;
        let state = self.evaluate(&c);
        let converged = state.is_converged(opt_tol, atol);
        Some(Descent {
            c,
            state,
            iterations: run.iterations + inner.iterations,
            converged,
        })
    }

    fn objective(&self, c: &DVector<f64>) -> f64 {
        let pw = AbsPow::new(self.p);
        let r = self.target - self.phi * c;
        r.iter().map(|&v| pw.eval(v)).sum::<f64>() * self.weight
    }

    fn evaluate(&self, c: &DVector<f64>) -> NewtonState {
        let p = self.p;
        let pw = AbsPow::new(p);
        let pw1 = AbsPow::new(p - 1.0);
        let fitted = self.phi * c;
        let residual = self.target - &fitted;
        let objective = residual.iter().map(|&v| pw.eval(v)).sum::<f64>() * self.weight;
        let noise = 16.0
            * f64::EPSILON
            * (objective
                + p * self.weight
                    * residual
                        .iter()
                        .zip(self.target.iter().zip(fitted.iter()))
                        .map(|(&r, (&t, &g))| pw1.eval(r) * (t.abs() + g.abs()))
                        .sum::<f64>());
        // d/dc of sum w|r|^p is -p Phi^T (w |r|^{p-1} sign r)
        let dual = DVector::from_iterator(
            residual.len(),
            residual
                .iter()
                .zip(self.target.iter().zip(fitted.iter()))
                .map(|(&v, (&t, &g))| if is_rounding(v, t, g) { 0.0 } else { self.weight * pw1.eval(v) * v.signum() }),
        );
        let pairing = self.phi.transpose() * &dual;
        let gradient = &pairing * (-p);
        let norm = objective.powf(1.0 / p);
        let optimality = if norm == 0.0 {
            0.0
        } else {
            pairing.amax() / pw1.eval(norm)
        };
        NewtonState {
            residual,
            objective,
            gradient,
            optimality,
            norm,
            noise,
        }
    }

    fn newton_step(&self, state: &NewtonState) -> Option<DVector<f64>> {
        let p = self.p;
        let pw2 = AbsPow::new(p - 2.0);
        let k = self.phi.ncols();
        let curvature = state
            .residual
            .map(|v| self.weight * p * (p - 1.0) * pw2.eval(v.abs().max(WEIGHT_FLOOR)));
        let mut weighted = self.phi.clone();
        for (mut col, _) in weighted.column_iter_mut().zip(0..k) {
            col.component_mul_assign(&curvature);
        }
        let hessian = self.phi.transpose() * weighted;
        let rhs = -&state.gradient;
        if let Some(chol) = hessian.clone().cholesky() {
            return Some(chol.solve(&rhs));
        }
        let ridge = hessian.diagonal().amax().max(f64::MIN_POSITIVE) * 1e-10;
        let regularized = hessian + DMatrix::identity(k, k) * ridge;
        regularized.cholesky().map(|chol| chol.solve(&rhs))
    }
}
