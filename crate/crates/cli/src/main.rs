//! Command-line front end: experiment runs, condition constants, oracle
//! tables, trace extraction and bound verification.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sparse_greedy::analysis::{
    estimate_a3, estimate_all, sigma_m_capped, sigma_m_oracle, verify_decay_bound, verify_rate_bound,
    ConditionEstimate, EstimateOptions,
};
use sparse_greedy::dictionaries::DictionarySpec;
use sparse_greedy::experiments::{
    build_dictionary, make_target, run_demo, run_experiment, trial_rng, ExperimentConfig, ExperimentReport,
};
use sparse_greedy::greedy::TraceDocument;
use sparse_greedy::lpspace::{lp_norm, smoothness_params};
use sparse_greedy::solvers::SolverOptions;
use sparse_greedy::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "sparse-greedy", version, about = "Greedy sparse approximation in L_p")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment config and write `<stem>.csv` and `<stem>.json`.
    Run {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Output file stem; defaults to the config file stem.
        #[arg(long)]
        stem: Option<String>,
    },
    /// Estimate the condition constants of a dictionary.
    Constants(ConstantsArgs),
    /// Best m-term errors of one trial's target, as CSV.
    Sigma {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the greedy trace of one trial as JSON.
    Trace {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a saved trace against a convergence bound.
    Verify(VerifyArgs),
    /// Print the summary of a JSON report.
    Inspect { report: PathBuf },
    /// Run the built-in seeded showcase.
    Demo {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DictKind {
    Trig,
    Haar,
    Gaussian,
}

/// Exponent `r` used for a family of dictionaries.
#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum Preset {
    /// Orthonormal systems: `r = 1/2`.
    OrthonormalR,
    /// Uniformly bounded orthogonal systems, `p >= 2`: `r = 1/2`.
    BoundedOrthogonal,
    /// Uniformly bounded orthogonal systems, `1 < p <= 2`: `r = 1/p`.
    BoundedOrthogonalQ,
    /// Haar basis: `r = 1/p'`.
    Haar,
    /// Schauder bases: `r = 1`.
    Schauder,
}

impl Preset {
    fn r(self, p: f64) -> f64 {
        match self {
            Preset::OrthonormalR | Preset::BoundedOrthogonal => 0.5,
            Preset::BoundedOrthogonalQ => 1.0 / p,
            Preset::Haar => 1.0 - 1.0 / p,
            Preset::Schauder => 1.0,
        }
    }
}

#[derive(clap::Args, Debug)]
struct ConstantsArgs {
    #[arg(long, value_enum)]
    dict: DictKind,
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Maximal frequency (trig), number of levels (haar) or columns (gaussian).
    #[arg(long = "N")]
    n: usize,
    #[arg(long)]
    p: f64,
    #[arg(long = "K")]
    k: usize,
    /// Depth; defaults to `2K`.
    #[arg(long = "D")]
    depth: Option<usize>,
    #[arg(long, value_enum, conflicts_with = "r")]
    preset: Option<Preset>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, default_value_t = 64)]
    points: usize,
    /// Rows of a gaussian dictionary.
    #[arg(long, default_value_t = 64)]
    rows: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Candidate subsets examined before sampling.
    #[arg(long, default_value_t = 2_000_000)]
    budget: usize,
    /// Print the estimates with witnesses as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BoundKind {
    /// Exponential decay for targets close to `K`-sparse.
    Decay,
    /// Algebraic rate in terms of the coefficient norm `A`.
    Rate,
}

#[derive(clap::Args, Debug)]
struct VerifyArgs {
    trace: PathBuf,
    #[arg(long, value_enum)]
    bound: BoundKind,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long = "D")]
    depth: Option<usize>,
    #[arg(long)]
    r: Option<f64>,
    /// `V`; estimated from the trace's dictionary when omitted.
    #[arg(long = "V")]
    v: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Coefficient norm `A(eps)` for the rate bound.
    #[arg(long = "A")]
    a: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}

/// `Ok(false)` reports a failed check.
fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Run { config, out, stem } => run(&config, &out, stem),
        Command::Constants(args) => constants(&args),
        Command::Sigma {
            config,
            trial,
            m_max,
            out,
        } => sigma(&config, trial, m_max, out.as_deref()),
        Command::Trace { config, trial, out } => trace(&config, trial, &out),
        Command::Verify(args) => verify(&args),
        Command::Inspect { report } => inspect(&report),
        Command::Demo { out } => demo(out.as_deref()),
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    ExperimentConfig::from_toml(&text)
}

fn run(config: &Path, out: &Path, stem: Option<String>) -> Result<bool> {
    let cfg = load_config(config)?;
    let stem = stem.unwrap_or_else(|| {
        config
            .file_stem()
            .map_or_else(|| "report".into(), |s| s.to_string_lossy().into_owned())
    });
    let output = run_experiment(&cfg)?;
    let (csv, json) = output.write(out, &stem)?;
    println!("wrote {} and {}", csv.display(), json.display());
    let errors = output.report.summary.errors;
    if errors > 0 {
        eprintln!("{errors} trial(s) failed; see the JSON report");
    }
    Ok(errors == 0)
}

fn constants(args: &ConstantsArgs) -> Result<bool> {
    let spec = match args.dict {
        DictKind::Trig => DictionarySpec::Trig {
            d: args.d,
            max_freq: args.n,
            p: args.p,
            points: args.points,
        },
        DictKind::Haar => DictionarySpec::Haar {
            d: args.d,
            levels: u32::try_from(args.n).map_err(|_| Error::config("N", "too many levels"))?,
            p: args.p,
            points: args.points,
        },
        DictKind::Gaussian => DictionarySpec::Gaussian {
            rows: args.rows,
            cols: args.n,
            seed: args.seed,
            p: args.p,
        },
    };
    let dict = spec.build()?;
    let r = match (args.r, args.preset) {
        (Some(r), _) => r,
        (None, Some(preset)) => preset.r(args.p),
        (None, None) => return Err(Error::config("r", "give --r or --preset")),
    };
    let depth = args.depth.unwrap_or(2 * args.k);
    let opts = EstimateOptions {
        budget: args.budget,
        seed: args.seed,
        ..EstimateOptions::default()
    };
    let set = estimate_all(&dict, args.k, depth, r, args.p, &opts)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&set).map_err(Error::from)?);
        return Ok(true);
    }
    println!("dictionary: {} elements, K = {}, D = {depth}, r = {r}, p = {}", dict.len(), args.k, args.p);
    print_estimate("C1", &set.c1);
    print_estimate("U", &set.u);
    print_estimate("V", &set.v);
    if let Some(delta) = &set.delta {
        print_estimate("delta", delta);
    }
    Ok(true)
}

fn print_estimate(name: &str, est: &ConditionEstimate) {
    let kind = if est.exact { "exact" } else { "lower bound" };
    println!(
        "{name} = {:.12} ({kind}, {} candidates, witness A = {:?})",
        est.value, est.candidates, est.witness.subset
    );
}

fn sigma(config: &Path, trial: usize, m_max: Option<usize>, out: Option<&Path>) -> Result<bool> {
    let cfg = load_config(config)?;
    let dict = build_dictionary(&cfg)?;
    let p = dict.p();
    let mut rng = trial_rng(cfg.seed, 0, trial);
    let target = make_target(&cfg.target, &dict, None, &mut rng)?;
    let m_max = m_max
        .or(cfg.oracle.m_max)
        .or_else(|| cfg.sweep.m_values.iter().copied().max())
        .unwrap_or(1);
    let f0_norm = lp_norm(&target.f0, p)?;
    let opts = SolverOptions::relative_to(f0_norm);
    let cap = u128::from(cfg.oracle.combo_cap);
    let table = match sigma_m_oracle(&target.f0, &dict, m_max, p, cap, &opts) {
        Err(Error::CapExceeded { .. }) if cfg.oracle.beam_width.is_some() => {
            sigma_m_capped(&target.f0, &dict, m_max, p, cfg.oracle.beam_width.unwrap_or(1), &opts)?
        }
        other => other?,
    };
    match out {
        Some(path) => {
            fs::write(path, table.to_csv())?;
            println!("wrote {}", path.display());
        }
        None => print!("{}", table.to_csv()),
    }
    Ok(true)
}

fn trace(config: &Path, trial: usize, out: &Path) -> Result<bool> {
    let mut cfg = load_config(config)?;
    if trial >= cfg.trials {
        return Err(Error::config("trial", format!("{trial} >= trials = {}", cfg.trials)));
    }
    cfg.trials = trial + 1;
    let output = run_experiment(&cfg)?;
    let Some(record) = output.records.into_iter().find(|r| r.trial == trial) else {
        let msg = output.report.trials.get(trial).and_then(|t| t.error.clone());
        eprintln!("error: trial {trial} failed: {}", msg.unwrap_or_default());
        return Ok(false);
    };
    let summary = record.target.summary();
    let trace = record.traces.into_iter().next().expect("every record holds a greedy trace");
    let doc = TraceDocument::new(trace, Some(cfg.dictionary.clone()), Some(cfg.seed));
    let mut text = serde_json::to_string_pretty(&doc).map_err(Error::from)?;
    text.push('\n');
    fs::write(out, text)?;
    println!(
        "wrote {} ({} iterations, K = {}, A = {:.12}, eps = {:.12})",
        out.display(),
        doc.trace.iterations(),
        summary.support.len(),
        summary.l1_norm,
        summary.eps
    );
    Ok(true)
}

fn verify(args: &VerifyArgs) -> Result<bool> {
    let text = fs::read_to_string(&args.trace)?;
    let doc = TraceDocument::from_json(&text)?;
    let trace = &doc.trace;
    let p = trace.config.p;
    let t = trace.config.t;
    let params = smoothness_params(p)?;
    match args.bound {
        BoundKind::Decay => {
            let k = args.k.ok_or_else(|| Error::config("K", "the decay bound needs --K"))?;
            let r = args.r.ok_or_else(|| Error::config("r", "the decay bound needs --r"))?;
            let v = match args.v {
                Some(v) => v,
                None => {
                    let spec = doc
                        .dictionary
                        .as_ref()
                        .ok_or_else(|| Error::config("V", "trace has no dictionary; give --V"))?;
                    let dict = spec.build()?;
                    let depth = args.depth.unwrap_or(dict.len()).min(dict.len());
                    let est = estimate_a3(&dict, k, depth, r, p, &EstimateOptions::default())?;
                    println!("V = {:.12} (estimated{})", est.value, if est.exact { "" } else { ", lower bound" });
                    est.value
                }
            };
            let report = verify_decay_bound(trace, k, args.depth, r, v, args.eps, &params, t)?;
            let verdict = if report.passed { "PASS" } else { "FAIL" };
            println!(
                "{verdict} (min slack {:.6}, {} pairs, c1 = {:.6e}, {} violations)",
                report.min_slack,
                report.pairs_checked,
                report.c1,
                report.violations.len()
            );
            Ok(report.passed)
        }
        BoundKind::Rate => {
            let a = args.a.ok_or_else(|| Error::config("A", "the rate bound needs --A"))?;
            let report = verify_rate_bound(trace, a, args.eps, &params, t)?;
            println!("required constant C = {:.6}", report.c_hat);
            Ok(true)
        }
    }
}

fn inspect(path: &Path) -> Result<bool> {
    let report = ExperimentReport::from_json(&fs::read_to_string(path)?)?;
    println!(
        "{:?} experiment, {} rows, {} trials, {} errors",
        report.kind,
        report.rows,
        report.trials.len(),
        report.summary.errors
    );
    println!("{}", serde_json::to_string_pretty(&report.summary).map_err(Error::from)?);
    Ok(true)
}

fn demo(out: Option<&Path>) -> Result<bool> {
    let results = run_demo(out)?;
    let mut clean = true;
    for (name, output) in &results {
        let s = &output.report.summary;
        clean &= s.errors == 0;
        let ratio = s.ratio_median.map_or_else(|| "-".into(), |v| format!("{v:.4}"));
        println!("{name}: {} rows, median ratio {ratio}, {} errors", output.rows.len(), s.errors);
    }
    if let Some(dir) = out {
        println!("reports written to {}", dir.display());
    }
    Ok(clean)
}
