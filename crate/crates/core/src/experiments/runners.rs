//! Experiment runners. Trials run in parallel, each on its own RNG stream,
//! and are assembled in trial order.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::bounds::{fit_loglog, fit_loglog_slope, verify_rate_bound};
use crate::analysis::sigma::{exhaustive_cost, sigma_m_capped, sigma_m_oracle, SigmaMethod, SigmaTable};
use crate::dictionaries::Dictionary;
use crate::error::{Error, Result};
use crate::experiments::config::{AlgorithmName, ExperimentConfig, ExperimentKind, SelectionMode};
use crate::experiments::report::{
    max_finite, median, rows_to_csv, write_pair, ExperimentReport, Flag, PerM, RateSummary, Row, SuccessMatrix,
    Summary, TgaSummary, TrialSummary, REPORT_SCHEMA_VERSION,
};
use crate::experiments::targets::{make_target, trial_rng, TargetInstance};
use crate::greedy::{tga_run, wcga_run, womp_run, GreedyConfig, GreedyTrace, Selection};
use crate::lpspace::{lp_norm, smoothness_params};
use crate::solvers::SolverOptions;

/// Everything a run produced: CSV rows, the JSON report and the per-trial
/// targets, traces and oracle tables for downstream checks.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub rows: Vec<Row>,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub trial: usize,
    pub k: usize,
    pub target: TargetInstance,
    /// WCGA/WOMP trace first; the thresholding trace second when present.
    pub traces: Vec<GreedyTrace>,
    pub sigma: Option<SigmaTable>,
}

impl ExperimentOutput {
    pub fn csv(&self) -> String {
        rows_to_csv(&self.rows)
    }

    pub fn write(&self, dir: &std::path::Path, stem: &str) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
        write_pair(dir, stem, &self.rows, &self.report)
    }
}

struct TrialOutcome {
    rows: Vec<Row>,
    summary: TrialSummary,
    record: Option<TrialRecord>,
}

impl TrialOutcome {
    fn failed(trial: usize, k: usize, err: Error) -> Self {
        Self {
            rows: vec![Row::error(trial)],
            summary: TrialSummary {
                trial,
                k,
                f0_norm: f64::NAN,
                eps: f64::NAN,
                l1_norm: f64::NAN,
                iterations: 0,
                oracle: None,
                error: Some(err.to_string()),
            },
            record: None,
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::Lebesgue => run_lebesgue(cfg),
        ExperimentKind::Phase => run_phase(cfg),
        ExperimentKind::TgaCompare => run_tga_compare(cfg),
        ExperimentKind::Rate => run_rate(cfg),
    }
}

pub fn build_dictionary(cfg: &ExperimentConfig) -> Result<Dictionary> {
    cfg.dictionary.build().map_err(|e| match e {
        Error::InvalidParameter { name, reason } => Error::config(format!("dictionary.{name}"), reason),
        other => other,
    })
}

/// Greedy configuration of one trial. Tolerances are scaled by `||f0||`;
/// random selection draws its seed from the trial's stream.
pub fn greedy_config(cfg: &ExperimentConfig, p: f64, f0_norm: f64, max_iter: usize, rng: &mut ChaCha8Rng) -> GreedyConfig {
    let a = &cfg.algorithm;
    let selection = match a.selection {
        SelectionMode::Argmax => Selection::Argmax,
        SelectionMode::Random => Selection::Random { seed: rng.random() },
    };
    GreedyConfig {
        t: a.t,
        p,
        max_iter: Some(max_iter),
        stop_tol: Some(a.stop_tol * f0_norm),
        opt_tol: Some(a.opt_tol * f0_norm),
        max_inner_iter: a.max_inner_iter,
        selection,
    }
}

fn run_greedy(cfg: &ExperimentConfig, dict: &Dictionary, target: &TargetInstance, max_iter: usize, rng: &mut ChaCha8Rng) -> Result<GreedyTrace> {
    let f0_norm = lp_norm(&target.f0, dict.p())?;
    let gcfg = greedy_config(cfg, dict.p(), f0_norm, max_iter, rng);
    match cfg.algorithm.name {
        AlgorithmName::Womp => womp_run(&target.f0, dict, &gcfg),
        _ => wcga_run(&target.f0, dict, &gcfg),
    }
}

fn oracle_table(cfg: &ExperimentConfig, dict: &Dictionary, target: &TargetInstance, m_top: usize) -> Result<SigmaTable> {
    let p = dict.p();
    let f0_norm = lp_norm(&target.f0, p)?;
    let m_max = cfg.oracle.m_max.unwrap_or(m_top).max(m_top).max(1);
    let opts = SolverOptions::relative_to(f0_norm);
    let cap = u128::from(cfg.oracle.combo_cap);
    if exhaustive_cost(dict.len(), m_max) > cap {
        if let Some(width) = cfg.oracle.beam_width {
            return sigma_m_capped(&target.f0, dict, m_max, p, width, &opts);
        }
    }
    sigma_m_oracle(&target.f0, dict, m_max, p, cap, &opts)
}

fn method_name(table: &SigmaTable) -> String {
    match table.method {
        SigmaMethod::Exhaustive => "exhaustive".into(),
        SigmaMethod::Capped { beam_width } => format!("capped (beam width {beam_width})"),
    }
}

fn summary_for(trial: usize, k: usize, target: &TargetInstance, p: f64, iterations: usize, oracle: Option<String>) -> Result<TrialSummary> {
    Ok(TrialSummary {
        trial,
        k,
        f0_norm: lp_norm(&target.f0, p)?,
        eps: target.eps,
        l1_norm: target.representation.l1_norm(),
        iterations,
        oracle,
        error: None,
    })
}

/// First `k` with `||f_k|| <= bound`.
fn first_within(trace: &GreedyTrace, bound: f64) -> Option<usize> {
    trace.residual_norms.iter().position(|&v| v <= bound)
}

fn assemble(cfg: &ExperimentConfig, dict: &Dictionary, outcomes: Vec<TrialOutcome>, summary: Summary) -> ExperimentOutput {
    let mut rows = Vec::new();
    let mut trials = Vec::new();
    let mut records = Vec::new();
    for o in outcomes {
        rows.extend(o.rows);
        trials.push(o.summary);
        records.extend(o.record);
    }
    let errors = trials.iter().filter(|t| t.error.is_some()).count();
    ExperimentOutput {
        report: ExperimentReport {
            schema_version: REPORT_SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            kind: cfg.kind,
            config: cfg.clone(),
            dictionary_size: dict.len(),
            rows: rows.len(),
            summary: Summary { errors, ..summary },
            trials,
        },
        rows,
        records,
    }
}

fn ratio_of(res: f64, sigma: f64, atol: f64) -> (f64, bool) {
    if sigma <= atol {
        (res, true)
    } else {
        (res / sigma, false)
    }
}

/// Greedy error after `m' = ceil(c m ln(m+1))` (or `ceil(c m)`) iterations
/// against `sigma_m`, for every listed `m` and budget factor `c`.
pub fn run_lebesgue(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let dict = build_dictionary(cfg)?;
    let p = dict.p();
    let factors = cfg.budget_factors();
    let m_values = &cfg.sweep.m_values;
    let m_top = *m_values.iter().max().expect("validated nonempty");
    let budgets: Vec<Vec<usize>> = factors
        .iter()
        .map(|&c| {
            m_values
                .iter()
                .map(|&m| match cfg.algorithm.name {
                    AlgorithmName::Tga => m,
                    _ => cfg.algorithm.budget.iterations(c, m),
                })
                .collect()
        })
        .collect();
    let max_iter = budgets.iter().flatten().copied().max().unwrap_or(0);
    let phi_c = cfg.sweep.phi_constant.unwrap_or(1.0);

    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let run = || -> Result<TrialOutcome> {
                let mut rng = trial_rng(cfg.seed, 0, trial);
                let target = make_target(&cfg.target, &dict, None, &mut rng)?;
                let f0_norm = lp_norm(&target.f0, p)?;
                let atol = cfg.oracle.atol * f0_norm;
                let table = oracle_table(cfg, &dict, &target, m_top)?;
                let capped = matches!(table.method, SigmaMethod::Capped { .. });
                let trace = match cfg.algorithm.name {
                    AlgorithmName::Tga => tga_run(&target.f0, &dict, m_top.min(dict.len()), p)?,
                    _ => run_greedy(cfg, &dict, &target, max_iter, &mut rng)?,
                };
                let mut rows = Vec::new();
                for budget in &budgets {
                    for (&m, &m_prime) in m_values.iter().zip(budget) {
                        let res = trace.norm_at(m_prime);
                        let sigma = table.sigma(m);
                        let (ratio, zero) = ratio_of(res, sigma, atol);
                        let flag = match (zero, capped) {
                            (true, _) => Flag::SigmaZero,
                            (false, true) => Flag::Capped,
                            (false, false) => Flag::Ok,
                        };
                        rows.push(Row {
                            trial,
                            m,
                            m_prime,
                            res_norm: res,
                            sigma_m: sigma,
                            ratio,
                            flag,
                        });
                    }
                }
                Ok(TrialOutcome {
                    rows,
                    summary: summary_for(
                        trial,
                        target.representation.len(),
                        &target,
                        p,
                        trace.iterations(),
                        Some(method_name(&table)),
                    )?,
                    record: Some(TrialRecord {
                        trial,
                        k: target.representation.len(),
                        target,
                        traces: vec![trace],
                        sigma: Some(table),
                    }),
                })
            };
            run().unwrap_or_else(|e| TrialOutcome::failed(trial, 0, e))
        })
        .collect();

    let row_count = factors.len() * m_values.len();
    let ok_rows = |c_idx: usize, m_idx: usize| -> Vec<f64> {
        outcomes
            .iter()
            .filter(|o| o.rows.len() == row_count)
            .map(|o| &o.rows[c_idx * m_values.len() + m_idx])
            .filter(|r| matches!(r.flag, Flag::Ok | Flag::Capped))
            .map(|r| r.ratio)
            .collect()
    };
    let phi_hat = |m: usize| -> Option<f64> {
        if m == 0 {
            return None;
        }
        median(outcomes.iter().filter_map(|o| o.record.as_ref()).filter_map(|rec| {
            let sigma = rec.sigma.as_ref()?.sigma(m);
            let atol = cfg.oracle.atol * rec.traces[0].residual_norms[0];
            first_within(&rec.traces[0], phi_c * sigma + atol).map(|k| k as f64 / m as f64)
        }))
    };
    let mut per_m = Vec::new();
    for (ci, &c) in factors.iter().enumerate() {
        for (mi, &m) in m_values.iter().enumerate() {
            let ratios = ok_rows(ci, mi);
            per_m.push(PerM {
                m,
                m_prime: budgets[ci][mi],
                budget_c: c,
                median_ratio: median(ratios.iter().copied()),
                max_ratio: max_finite(ratios),
                phi_hat: phi_hat(m),
            });
        }
    }
    let phi_points: Vec<(f64, f64)> = per_m
        .iter()
        .filter(|e| e.budget_c == factors[0])
        .filter_map(|e| e.phi_hat.map(|v| (e.m as f64, v)))
        .collect();
    let all_ratios: Vec<f64> = outcomes
        .iter()
        .flat_map(|o| o.rows.iter())
        .filter(|r| matches!(r.flag, Flag::Ok | Flag::Capped))
        .map(|r| r.ratio)
        .collect();
    let summary = Summary {
        ratio_max: max_finite(all_ratios.iter().copied()),
        ratio_median: median(all_ratios),
        per_m,
        phi_exponent: fit_loglog(&phi_points),
        ..Summary::default()
    };
    Ok(assemble(cfg, &dict, outcomes, summary))
}

/// Exact-recovery success over a grid of sparsity levels `K` and budget
/// factors `b` (budget `ceil(b K)` iterations).
pub fn run_phase(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let dict = build_dictionary(cfg)?;
    let p = dict.p();
    let ks = &cfg.sweep.k_values;
    if let Some(&k) = ks.iter().find(|&&k| k > dict.len()) {
        return Err(Error::config("sweep.k_values", format!("{k} exceeds dictionary size {}", dict.len())));
    }
    let factors = &cfg.sweep.budget_factors;
    let tol = cfg.sweep.success_tol.unwrap_or(1e-8);
    let budget = |f: f64, k: usize| ((f * k as f64 - 1e-9).ceil() as usize).max(1);
    let jobs: Vec<(usize, usize)> = ks.iter().flat_map(|&k| (0..cfg.trials).map(move |t| (k, t))).collect();

    let outcomes: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(k, trial)| {
            let run = || -> Result<TrialOutcome> {
                let mut rng = trial_rng(cfg.seed, k as u64, trial);
                let target = make_target(&cfg.target, &dict, Some(k), &mut rng)?;
                let f0_norm = lp_norm(&target.f0, p)?;
                let max_iter = factors.iter().map(|&f| budget(f, k)).max().unwrap_or(1);
                let trace = run_greedy(cfg, &dict, &target, max_iter, &mut rng)?;
                let rows = factors
                    .iter()
                    .map(|&f| {
                        let b = budget(f, k);
                        let res = trace.norm_at(b);
                        Row {
                            trial,
                            m: k,
                            m_prime: b,
                            res_norm: res,
                            sigma_m: f64::NAN,
                            ratio: res / f0_norm,
                            flag: if res <= tol * f0_norm { Flag::Success } else { Flag::Failure },
                        }
                    })
                    .collect();
                Ok(TrialOutcome {
                    rows,
                    summary: summary_for(trial, k, &target, p, trace.iterations(), None)?,
                    record: Some(TrialRecord {
                        trial,
                        k,
                        target,
                        traces: vec![trace],
                        sigma: None,
                    }),
                })
            };
            run().unwrap_or_else(|e| TrialOutcome::failed(trial, k, e))
        })
        .collect();

    let rates = ks
        .iter()
        .map(|&k| {
            (0..factors.len())
                .map(|fi| {
                    let wins = outcomes
                        .iter()
                        .filter(|o| o.rows.len() == factors.len() && o.rows[fi].m == k)
                        .filter(|o| o.rows[fi].flag == Flag::Success)
                        .count();
                    wins as f64 / cfg.trials as f64
                })
                .collect()
        })
        .collect();
    let summary = Summary {
        success: Some(SuccessMatrix {
            k_values: ks.clone(),
            budget_factors: factors.clone(),
            rates,
            trials: cfg.trials,
        }),
        ..Summary::default()
    };
    Ok(assemble(cfg, &dict, outcomes, summary))
}

/// Thresholding after `m` terms against the WCGA after `m` and after
/// `ceil(m ln(m + 1))` iterations, all relative to `sigma_m`.
pub fn run_tga_compare(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let dict = build_dictionary(cfg)?;
    if !dict.is_orthogonal() {
        return Err(Error::config("dictionary.type", "thresholding needs an orthogonal basis (trig or haar)"));
    }
    let p = dict.p();
    let m_values = &cfg.sweep.m_values;
    let m_top = (*m_values.iter().max().expect("validated nonempty")).min(dict.len());
    let mln = |m: usize| crate::experiments::config::BudgetRule::Mlogm.iterations(1.0, m).max(m);
    let max_iter = m_values.iter().map(|&m| mln(m)).max().unwrap_or(0);

    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let run = || -> Result<TrialOutcome> {
                let mut rng = trial_rng(cfg.seed, 0, trial);
                let target = make_target(&cfg.target, &dict, None, &mut rng)?;
                let atol = cfg.oracle.atol * lp_norm(&target.f0, p)?;
                let table = oracle_table(cfg, &dict, &target, m_top)?;
                let tga = tga_run(&target.f0, &dict, m_top, p)?;
                let wcga = run_greedy(cfg, &dict, &target, max_iter, &mut rng)?;
                let mut rows = Vec::new();
                for &m in m_values {
                    let sigma = table.sigma(m);
                    for (flag, m_prime, res) in [
                        (Flag::Tga, m, tga.norm_at(m)),
                        (Flag::WcgaM, m, wcga.norm_at(m)),
                        (Flag::WcgaMln, mln(m), wcga.norm_at(mln(m))),
                    ] {
                        rows.push(Row {
                            trial,
                            m,
                            m_prime,
                            res_norm: res,
                            sigma_m: sigma,
                            ratio: ratio_of(res, sigma, atol).0,
                            flag,
                        });
                    }
                }
                Ok(TrialOutcome {
                    rows,
                    summary: summary_for(
                        trial,
                        target.representation.len(),
                        &target,
                        p,
                        wcga.iterations(),
                        Some(method_name(&table)),
                    )?,
                    record: Some(TrialRecord {
                        trial,
                        k: target.representation.len(),
                        target,
                        traces: vec![wcga, tga],
                        sigma: Some(table),
                    }),
                })
            };
            run().unwrap_or_else(|e| TrialOutcome::failed(trial, 0, e))
        })
        .collect();

    let ratio = |o: &TrialOutcome, m: usize, flag: Flag| {
        o.rows.iter().find(|r| r.m == m && r.flag == flag).map(|r| r.ratio)
    };
    let growth: Vec<(f64, f64)> = m_values
        .iter()
        .filter(|&&m| m > 0)
        .filter_map(|&m| median(outcomes.iter().filter_map(|o| ratio(o, m, Flag::Tga))).map(|v| (m as f64, v)))
        .collect();
    let mut pairs = 0usize;
    let mut not_better = 0usize;
    for o in &outcomes {
        for &m in m_values.iter().filter(|&&m| m > 0) {
            if let (Some(a), Some(b)) = (ratio(o, m, Flag::Tga), ratio(o, m, Flag::WcgaMln)) {
                if a.is_finite() && b.is_finite() {
                    pairs += 1;
                    not_better += usize::from(a >= b);
                }
            }
        }
    }
    let tga_ratios: Vec<f64> = outcomes
        .iter()
        .flat_map(|o| o.rows.iter())
        .filter(|r| r.flag == Flag::Tga)
        .map(|r| r.ratio)
        .collect();
    let summary = Summary {
        ratio_max: max_finite(tga_ratios.iter().copied()),
        ratio_median: median(tga_ratios),
        tga: Some(TgaSummary {
            growth_exponent: fit_loglog(&growth),
            tga_not_better_fraction: (pairs > 0).then(|| not_better as f64 / pairs as f64),
        }),
        ..Summary::default()
    };
    Ok(assemble(cfg, &dict, outcomes, summary))
}

/// Residual decay on (typically dense) targets: per-`m` rate constants with
/// `A(eps)` the `l1` norm of the clean coefficients, and the log-log slope.
pub fn run_rate(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let dict = build_dictionary(cfg)?;
    let p = dict.p();
    let params = smoothness_params(p)?;
    let iterations = cfg.sweep.iterations.unwrap_or(100);
    let fit_range = cfg.sweep.fit_range.unwrap_or([10, 100]);
    let t = cfg.algorithm.t;

    let outcomes: Vec<(TrialOutcome, Option<f64>, f64)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let run = || -> Result<(TrialOutcome, Option<f64>, f64)> {
                let mut rng = trial_rng(cfg.seed, 0, trial);
                let target = make_target(&cfg.target, &dict, None, &mut rng)?;
                let trace = run_greedy(cfg, &dict, &target, iterations, &mut rng)?;
                let rate = verify_rate_bound(&trace, target.representation.l1_norm(), target.eps, &params, t)?;
                let rows = (0..=iterations)
                    .map(|m| Row {
                        trial,
                        m,
                        m_prime: m,
                        res_norm: trace.norm_at(m),
                        sigma_m: f64::NAN,
                        ratio: rate.required.get(m).copied().flatten().unwrap_or(f64::NAN),
                        flag: Flag::Rate,
                    })
                    .collect();
                let norms: Vec<f64> = (0..=iterations).map(|m| trace.norm_at(m)).collect();
                let slope = fit_loglog_slope(&norms, fit_range[0], fit_range[1]);
                Ok((
                    TrialOutcome {
                        rows,
                        summary: summary_for(
                            trial,
                            target.representation.len(),
                            &target,
                            p,
                            trace.iterations(),
                            None,
                        )?,
                        record: Some(TrialRecord {
                            trial,
                            k: target.representation.len(),
                            target,
                            traces: vec![trace],
                            sigma: None,
                        }),
                    },
                    slope,
                    rate.c_hat,
                ))
            };
            run().unwrap_or_else(|e| (TrialOutcome::failed(trial, 0, e), None, f64::NAN))
        })
        .collect();

    let slopes: Vec<Option<f64>> = outcomes.iter().map(|o| o.1).collect();
    let c_hat: Vec<f64> = outcomes.iter().map(|o| o.2).collect();
    let summary = Summary {
        rate: Some(RateSummary {
            fit_range,
            median_slope: median(slopes.iter().flatten().copied()),
            slopes,
            c_hat,
        }),
        ..Summary::default()
    };
    Ok(assemble(cfg, &dict, outcomes.into_iter().map(|o| o.0).collect(), summary))
}
