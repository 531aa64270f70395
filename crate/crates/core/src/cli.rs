//! The `bb84` command line: `validate`, `bounds`, `brute-check`, `simulate`.
//!
//! Exit status is 0 when every check passes, 1 when a check fails and 2 for
//! usage, I/O or parse errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::protocol;
use crate::scenario::{self, Scenario};
use crate::security::{self, BoundMode, BoundParams, BoundReport, PerBitNoise, TraceNormBound};

#[derive(Debug, Parser)]
#[command(name = "bb84", version, about = "BB84 collective-attack bounds, checks and simulation")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (JSON).
    config: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Uniform,
    #[value(name = "per_coset", alias = "per-coset")]
    PerCoset,
}

impl From<ModeArg> for BoundMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Uniform => BoundMode::Uniform,
            ModeArg::PerCoset => BoundMode::PerCoset,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the attack, code, noise and protocol sections.
    Validate(Common),
    /// Evaluate the information bounds, optionally over a parameter grid.
    Bounds {
        #[command(flatten)]
        common: Common,
        /// `param=lo:hi:steps` with param one of p_test, delta, alpha, n, r. Repeatable.
        #[arg(long)]
        sweep: Vec<String>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Also search for parameters reaching the target bound.
        #[arg(long)]
        witness: bool,
        #[arg(long, default_value_t = 0.02)]
        witness_p_test: f64,
        /// Target as a power of two.
        #[arg(long, default_value_t = -100.0, allow_hyphen_values = true)]
        witness_target: f64,
        /// Error-correction parities per key bit in the witness search.
        #[arg(long, default_value_t = 0.15)]
        witness_r_frac: f64,
    },
    /// Compare the closed forms against explicit enumeration (n ≤ 10).
    BruteCheck {
        #[command(flatten)]
        common: Common,
        /// Random POVMs tested against the trace bound.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the protocol once, or a Monte Carlo check of the sampling bound.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Monte Carlo trials; without it a single transcript is written.
        #[arg(long)]
        trials: Option<usize>,
        /// Overrides the scenario's rng_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the scenario's Monte Carlo slack.
        #[arg(long)]
        delta: Option<f64>,
    },
}

enum Failure {
    Usage(String),
    Check(String),
}

type Outcome = Result<(String, bool), Failure>;

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (common, result) = match &cli.command {
        Command::Validate(common) => (common, validate(common)),
        Command::Bounds { common, sweep, mode, witness, witness_p_test, witness_target, witness_r_frac } => {
            let w = witness.then_some((*witness_p_test, *witness_target, *witness_r_frac));
            (common, bounds(common, sweep, mode.map(Into::into), w))
        }
        Command::BruteCheck { common, trials, seed } => (common, brute_check(common, *trials, *seed)),
        Command::Simulate { common, trials, seed, delta } => (common, simulate(common, *trials, *seed, *delta)),
    };
    match result {
        Ok((text, passed)) => match emit(common.out.as_deref(), &text) {
            Ok(()) => ExitCode::from(if passed { 0 } else { 1 }),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

fn load(common: &Common) -> Result<Scenario, Failure> {
    Scenario::load(&common.config).map_err(|e| Failure::Usage(format!("{}: {e}", common.config.display())))
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn validate(common: &Common) -> Outcome {
    let s = load(common)?;
    let summary = scenario::validate(&s);
    Ok((pretty(&summary), summary.passed))
}

#[derive(Debug, Clone, PartialEq)]
struct Sweep {
    param: String,
    values: Vec<f64>,
}

const SWEEP_PARAMS: [&str; 5] = ["p_test", "delta", "alpha", "n", "r"];

fn parse_sweep(spec: &str) -> Result<Sweep, String> {
    let (param, range) = spec.split_once('=').ok_or_else(|| format!("sweep `{spec}` is not param=lo:hi:steps"))?;
    if !SWEEP_PARAMS.contains(&param) {
        return Err(format!("cannot sweep `{param}`; choose one of {}", SWEEP_PARAMS.join(", ")));
    }
    let parts: Vec<&str> = range.split(':').collect();
    let [lo, hi, steps] = parts[..] else {
        return Err(format!("sweep `{spec}` is not param=lo:hi:steps"));
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| format!("bad number `{s}` in sweep `{spec}`"));
    let (lo, hi) = (num(lo)?, num(hi)?);
    let steps: usize = steps.parse().map_err(|_| format!("bad step count `{steps}` in sweep `{spec}`"))?;
    if steps == 0 {
        return Err(format!("sweep `{spec}` needs at least one step"));
    }
    let values =
        (0..steps).map(|i| if steps == 1 { lo } else { lo + (hi - lo) * i as f64 / (steps - 1) as f64 }).collect();
    Ok(Sweep { param: param.to_string(), values })
}

/// Grid points in row-major order, first sweep outermost.
fn grid(sweeps: &[Sweep]) -> Vec<Vec<f64>> {
    sweeps.iter().fold(vec![Vec::new()], |acc, s| {
        acc.iter()
            .flat_map(|prefix| {
                s.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

fn apply_point(base: &BoundParams, sweeps: &[Sweep], point: &[f64]) -> (BoundParams, Map<String, Value>) {
    let mut p = base.clone();
    let mut echo = Map::new();
    for (s, &v) in sweeps.iter().zip(point) {
        match s.param.as_str() {
            "p_test" => p.p_test = v,
            "delta" => p.delta = v,
            "alpha" => p.alpha = v,
            "n" => p.n = v.round().max(0.0) as u64,
            "r" => p.r = v.round().max(0.0) as u64,
            _ => unreachable!("validated in parse_sweep"),
        }
        let shown = if matches!(s.param.as_str(), "n" | "r") { json!(v.round() as u64) } else { json!(v) };
        echo.insert(s.param.clone(), shown);
    }
    (p, echo)
}

struct CodeBound {
    n: u64,
    tr: TraceNormBound,
    noise: PerBitNoise,
}

fn evaluate(params: &BoundParams, code_bound: Option<&CodeBound>) -> Result<BoundReport, String> {
    let report = security::total_info_bound(params).map_err(|e| e.to_string())?;
    Ok(match code_bound {
        Some(cb) if cb.n == params.n => report.with_code_bound(&cb.tr, &cb.noise),
        _ => report,
    })
}

fn bounds(common: &Common, sweep: &[String], mode: Option<BoundMode>, witness: Option<(f64, f64, f64)>) -> Outcome {
    let s = load(common)?;
    if s.bounds.is_none() && witness.is_none() {
        return Err(Failure::Usage("scenario has no bounds section; add one or pass --witness".into()));
    }
    let sweeps: Vec<Sweep> = sweep.iter().map(|x| parse_sweep(x)).collect::<Result<_, _>>().map_err(Failure::Usage)?;
    if !sweeps.is_empty() && s.bounds.is_none() {
        return Err(Failure::Usage("--sweep needs a bounds section".into()));
    }

    let code_bound = match (s.parity_code(), s.per_bit_noise()) {
        (Some(code), Some(noise)) => {
            let code = code.map_err(Failure::Check)?;
            let noise = noise.map_err(Failure::Check)?;
            let tr = security::trace_norm_bound(&code, &noise).map_err(|e| Failure::Check(e.to_string()))?;
            Some(CodeBound { n: code.n() as u64, tr, noise })
        }
        _ => None,
    };
    let base = match &s.bounds {
        Some(_) => Some(s.bound_params(mode).map_err(Failure::Check)?),
        None => None,
    };

    let witness_record =
        witness.map(|(p_test, target, r_frac)| match security::search_witness(p_test, target, r_frac) {
            Some(w) => (json!({ "witness": w }), true),
            None => (
                json!({ "witness": null, "error": format!("no parameters reach 2^{target} at p_test = {p_test}") }),
                false,
            ),
        });

    let mut passed = true;
    let text = if sweeps.is_empty() {
        let mut doc = Map::new();
        if let Some(params) = &base {
            match evaluate(params, code_bound.as_ref()) {
                Ok(r) => {
                    doc.insert("report".into(), json!(r));
                }
                Err(e) => {
                    passed = false;
                    doc.insert("error".into(), json!(e));
                }
            }
        }
        if let Some((w, ok)) = witness_record {
            passed &= ok;
            doc.insert("witness".into(), w["witness"].clone());
        }
        pretty(&doc)
    } else {
        let base = base.expect("checked above");
        let points = grid(&sweeps);
        let records: Vec<(String, bool)> = points
            .par_iter()
            .enumerate()
            .map(|(index, point)| {
                let (params, echo) = apply_point(&base, &sweeps, point);
                let (record, ok) = match evaluate(&params, code_bound.as_ref()) {
                    Ok(r) => (json!({ "index": index, "point": echo, "report": r }), true),
                    Err(e) => (json!({ "index": index, "point": echo, "error": e }), false),
                };
                (serde_json::to_string(&record).expect("records serialize"), ok)
            })
            .collect();
        let mut text = String::new();
        for (line, ok) in records {
            passed &= ok;
            text.push_str(&line);
            text.push('\n');
        }
        if let Some((w, ok)) = witness_record {
            passed &= ok;
            text.push_str(&serde_json::to_string(&w).expect("records serialize"));
            text.push('\n');
        }
        text
    };
    Ok((text, passed))
}

fn brute_check(common: &Common, trials: usize, seed: u64) -> Outcome {
    let s = load(common)?;
    let code = s.parity_code().ok_or_else(|| Failure::Usage("brute-check needs a code section".into()))?;
    let noise =
        s.per_bit_noise().ok_or_else(|| Failure::Usage("brute-check needs a noise section or an attack".into()))?;
    let code = code.map_err(Failure::Check)?;
    let noise = noise.map_err(Failure::Check)?;
    let report = security::brute_force_check(&code, &noise, trials, seed).map_err(|e| Failure::Check(e.to_string()))?;
    Ok((pretty(&report), report.passed))
}

fn simulate(common: &Common, trials: Option<usize>, seed: Option<u64>, delta: Option<f64>) -> Outcome {
    let s = load(common)?;
    let mut cfg = s.protocol_config().ok_or_else(|| Failure::Usage("simulate needs a protocol section".into()))?;
    if let Some(seed) = seed {
        cfg.rng_seed = seed;
    }
    let model = s.error_model().map_err(Failure::Usage)?;
    match trials {
        None => {
            let t = protocol::run_protocol(&cfg, &model).map_err(|e| Failure::Check(e.to_string()))?;
            Ok((pretty(&t), t.accepted))
        }
        Some(trials) => {
            let delta = delta
                .or_else(|| s.monte_carlo_delta())
                .ok_or_else(|| Failure::Usage("Monte Carlo needs --delta, protocol.delta or bounds.delta".into()))?;
            let report = protocol::hoeffding_monte_carlo(&cfg, &model, delta, trials)
                .map_err(|e| Failure::Check(e.to_string()))?;
            Ok((pretty(&report), report.within_3_sigma))
        }
    }
}
