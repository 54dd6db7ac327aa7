use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use pomdp_weighted::chain::{ergodic_decomposition, mixing_threshold, product_chain, MIXING_CAP};
use pomdp_weighted::evaluations::{irregularity_exact, irregularity_mc, irregularity_sup};
use pomdp_weighted::measures::{disintegrate, image_measure, invariance_residual, kr_distance, SupportedMeasure};
use pomdp_weighted::reproduce::{reproduce, ReproduceOptions, EXAMPLES};
use pomdp_weighted::strategies::{strategy_from_json, StationaryStrategy};
use pomdp_weighted::tree::DEFAULT_NODE_BUDGET;
use pomdp_weighted::values::{
    asymptotic_value_estimate, limsup_belief_payoff_mc, value_discounted, value_n, weighted_payoff_exact,
    weighted_payoff_mc, Extreme, Stream,
};
use pomdp_weighted::{Error, Evaluation, EvaluationSpec, RunRecord, Scenario, Strategy};

const EXIT_VALIDATION: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_USAGE: u8 = 64;

/// Values, weighted payoffs and ergodic diagnostics for finite POMDPs.
#[derive(Parser, Debug)]
#[command(name = "pomdp-weighted", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Scenario JSON file, or a builtin instance (ex1, ex1-revealed, ex2, blind).
    #[arg(long, global = true)]
    scenario: Option<String>,
    /// Strategy name (always:<action>, doubling, uniform, or a scenario entry) or JSON file.
    #[arg(long, global = true)]
    strategy: Option<String>,
    /// Evaluation as inline JSON, a JSON file, or a scenario entry.
    #[arg(long, global = true)]
    evaluation: Option<String>,
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Monte Carlo sample count; switches estimators to simulation.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Node budget for tree enumeration and dynamic programming.
    #[arg(long, global = true, default_value_t = DEFAULT_NODE_BUDGET)]
    budget: usize,
    /// Record wall time in the output (breaks byte-identical reruns).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ValueMode {
    N,
    Discounted,
    Asymptotic,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum StreamArg {
    Belief,
    State,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a scenario file.
    Validate { file: Option<String> },
    /// Optimal values: n-stage, discounted, or the asymptotic estimate.
    Value {
        #[arg(long, value_enum, default_value_t = ValueMode::N)]
        mode: ValueMode,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 50)]
        n_max: usize,
    },
    /// Weighted payoff of a strategy under an evaluation.
    Evaluate,
    /// Irregularity of an evaluation; the sup over pure strategies without --strategy.
    Irregularity,
    /// Ergodic decomposition of the chain induced by a transducer.
    Ergodic,
    /// Expected liminf of average payoffs.
    Liminf {
        #[arg(long, value_enum, default_value_t = StreamArg::State)]
        stream: StreamArg,
    },
    /// Expected limsup of average payoffs.
    Limsup {
        #[arg(long, value_enum, default_value_t = StreamArg::State)]
        stream: StreamArg,
    },
    /// Invariance residual of a measure, or the occupation diagnostics of an evaluation.
    Invariance {
        /// JSON atom list `[{"belief": [...], "mass": m}, ...]`.
        #[arg(long)]
        measure: Option<String>,
    },
    /// Pinned reproduction of a built-in example.
    Reproduce {
        #[arg(value_parser = EXAMPLES)]
        example: String,
        #[arg(long)]
        l: Option<usize>,
    },
}

#[derive(Debug)]
enum Failure {
    Model(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Model(Error::InvalidInput(msg.into()))
}

fn read_text(path: &str) -> Outcome<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{path}: {e}")))
}

fn load_scenario(arg: Option<&str>) -> Outcome<Scenario> {
    let arg = arg.ok_or_else(|| invalid("--scenario is required"))?;
    if !Path::new(arg).exists() {
        if let Some(s) = Scenario::builtin(arg) {
            return Ok(s);
        }
    }
    Ok(Scenario::from_json_str(arg, &read_text(arg)?)?)
}

fn load_strategy(s: &Scenario, arg: Option<&str>) -> Outcome<Strategy> {
    let arg = arg.ok_or_else(|| invalid("--strategy is required"))?;
    if s.strategies.contains_key(arg) || !Path::new(arg).exists() {
        return Ok(s.strategy(arg)?);
    }
    let v: Value = serde_json::from_str(&read_text(arg)?).map_err(|e| invalid(format!("{arg}: {e}")))?;
    Ok(strategy_from_json(&s.pomdp, &v)?)
}

fn load_evaluation(s: &Scenario, arg: Option<&str>) -> Outcome<Evaluation> {
    let arg = arg.ok_or_else(|| invalid("--evaluation is required"))?;
    let spec: EvaluationSpec = if let Some(spec) = s.evaluation(arg) {
        spec.clone()
    } else {
        let text = if arg.trim_start().starts_with('{') { arg.to_string() } else { read_text(arg)? };
        serde_json::from_str(&text).map_err(|e| invalid(format!("evaluation: {e}")))?
    };
    Ok(Evaluation::new(spec)?)
}

fn record(command: &str, c: &Common, seed: bool) -> RunRecord {
    let mut rec = RunRecord::new(command, seed.then_some(c.seed));
    if let Some(v) = &c.scenario {
        rec.param("scenario", v);
    }
    if let Some(v) = &c.strategy {
        rec.param("strategy", v);
    }
    if let Some(v) = &c.evaluation {
        rec.param("evaluation", v);
    }
    rec
}

fn horizon_for(c: &Common, e: &Evaluation) -> usize {
    c.horizon.or(e.support_end()).unwrap_or(1_000)
}

fn run(cli: &Cli) -> Outcome<RunRecord> {
    let c = &cli.common;
    match &cli.command {
        Command::Validate { file } => {
            let s = load_scenario(file.as_deref().or(c.scenario.as_deref()))?;
            let mut rec = RunRecord::new("validate", None);
            rec.param("scenario", &s.name);
            let p = &s.pomdp;
            rec.push(&s.name, "states", p.n_states() as f64, 0.0, "structural");
            rec.push(&s.name, "actions", p.n_actions() as f64, 0.0, "structural");
            rec.push(&s.name, "signals", p.n_signals() as f64, 0.0, "structural");
            let known = if p.has_known_payoffs() { 1.0 } else { 0.0 };
            rec.push(&s.name, "known_payoffs", known, 0.0, "structural");
            Ok(rec)
        }
        Command::Value { mode, n, lambda, tol, n_max } => {
            let s = load_scenario(c.scenario.as_deref())?;
            let mut rec = record("value", c, false);
            let (param, report) = match mode {
                ValueMode::N => (format!("v_n;n={n}"), value_n(&s.pomdp, &s.initial_belief, *n, c.budget)?),
                ValueMode::Discounted => (
                    format!("v_lambda;lambda={lambda}"),
                    value_discounted(&s.pomdp, &s.initial_belief, *lambda, *tol, c.budget)?,
                ),
                ValueMode::Asymptotic => (
                    format!("v_asymptotic;n_max={n_max}"),
                    asymptotic_value_estimate(&s.pomdp, &s.initial_belief, *n_max, c.budget)?,
                ),
            };
            rec.push_report(&s.name, &param, &report);
            Ok(rec)
        }
        Command::Evaluate => {
            let s = load_scenario(c.scenario.as_deref())?;
            let strat = load_strategy(&s, c.strategy.as_deref())?;
            let e = load_evaluation(&s, c.evaluation.as_deref())?;
            let horizon = horizon_for(c, &e);
            let mut rec = record("evaluate", c, c.samples.is_some());
            rec.param("horizon", horizon);
            let report = match c.samples {
                Some(n) => {
                    rec.param("samples", n);
                    weighted_payoff_mc(&s.pomdp, &s.initial_belief, &strat, &e, horizon, n, c.seed)?
                }
                None => weighted_payoff_exact(&s.pomdp, &s.initial_belief, &strat, &e, horizon, c.budget)?,
            };
            rec.push_report(&s.name, "weighted_payoff", &report);
            Ok(rec)
        }
        Command::Irregularity => {
            let s = load_scenario(c.scenario.as_deref())?;
            let e = load_evaluation(&s, c.evaluation.as_deref())?;
            let horizon = horizon_for(c, &e);
            let mut rec = record("irregularity", c, c.samples.is_some());
            rec.param("horizon", horizon);
            let (p, x1) = (&s.pomdp, &s.initial_belief);
            match (c.strategy.as_deref(), c.samples) {
                (None, _) => {
                    let v = irregularity_sup(p, x1, &e, horizon, c.budget)?;
                    rec.push(&s.name, "irregularity_sup", v, 0.0, "exact_tree");
                }
                (Some(name), Some(n)) => {
                    rec.param("samples", n);
                    let strat = load_strategy(&s, Some(name))?;
                    let est = irregularity_mc(p, x1, &strat, &e, horizon, n, c.seed)?;
                    rec.push(&s.name, "irregularity", est.mean, 3.0 * est.std_error + est.aux, "monte_carlo");
                }
                (Some(name), None) => {
                    let strat = load_strategy(&s, Some(name))?;
                    let r = irregularity_exact(p, x1, &strat, &e, horizon, c.budget)?;
                    rec.push_irregularity(&s.name, "irregularity", &r);
                }
            }
            Ok(rec)
        }
        Command::Ergodic => {
            let s = load_scenario(c.scenario.as_deref())?;
            let strat = load_strategy(&s, c.strategy.as_deref())?;
            let t = strat
                .as_transducer()
                .ok_or_else(|| invalid("ergodic needs a finite-memory (transducer) strategy"))?;
            let chain = product_chain(&s.pomdp, t, &s.initial_belief)?;
            let dec = ergodic_decomposition(&chain)?;
            let mut rec = record("ergodic", c, false);
            rec.push(&s.name, "ergodic_classes", dec.classes.len() as f64, 0.0, "ergodic_exact");
            for (d, (g, a)) in dec.class_values.iter().zip(&dec.absorption).enumerate() {
                rec.push(&s.name, &format!("class_value;d={}", d + 1), *g, 0.0, "ergodic_exact");
                rec.push(&s.name, &format!("absorption;d={}", d + 1), *a, 0.0, "ergodic_exact");
            }
            rec.push(&s.name, "liminf_value", dec.liminf_value(), 0.0, "ergodic_exact");
            let mix = mixing_threshold(&chain, &dec, MIXING_CAP);
            rec.push(&s.name, "mixing_threshold", mix.map_or(f64::NAN, |l| l as f64), 0.0, "ergodic_exact");
            rec.details = Some(serde_json::json!({ "labels": chain.labels(), "decomposition": dec }));
            Ok(rec)
        }
        Command::Liminf { stream } | Command::Limsup { stream } => {
            let extreme = if matches!(cli.command, Command::Liminf { .. }) { Extreme::Liminf } else { Extreme::Limsup };
            let name = if extreme == Extreme::Liminf { "liminf" } else { "limsup" };
            let stream = match stream {
                StreamArg::Belief => Stream::Belief,
                StreamArg::State => Stream::State,
            };
            let s = load_scenario(c.scenario.as_deref())?;
            let strat = load_strategy(&s, c.strategy.as_deref())?;
            let mut rec = record(name, c, true);
            let stream_name = if stream == Stream::Belief { "belief" } else { "state" };
            rec.param("stream", stream_name);
            if let (Some(t), None, Stream::State) = (strat.as_transducer(), c.samples, stream) {
                // averages of a finite chain converge almost surely, so both extremes agree
                let dec = ergodic_decomposition(&product_chain(&s.pomdp, t, &s.initial_belief)?)?;
                rec.seed = None;
                rec.push(&s.name, &format!("{name}_value"), dec.liminf_value(), 0.0, "ergodic_exact");
                return Ok(rec);
            }
            let horizon = c.horizon.unwrap_or(10_000);
            let samples = c.samples.unwrap_or(1_000);
            rec.param("horizon", horizon);
            rec.param("samples", samples);
            let r = limsup_belief_payoff_mc(&s.pomdp, &s.initial_belief, &strat, horizon, samples, c.seed, extreme, stream)?;
            rec.push_report(&s.name, &format!("{name}_{stream_name}_proxy"), &r);
            Ok(rec)
        }
        Command::Invariance { measure } => {
            let s = load_scenario(c.scenario.as_deref())?;
            let mut rec = record("invariance", c, false);
            let p = &s.pomdp;
            if let Some(path) = measure {
                rec.param("measure", path);
                let text = if path.trim_start().starts_with('[') { path.clone() } else { read_text(path)? };
                let mu: SupportedMeasure = serde_json::from_str(&text).map_err(|e| invalid(format!("measure: {e}")))?;
                let strat = match load_strategy(&s, c.strategy.as_deref())? {
                    Strategy::Stationary(st) => st,
                    _ => return Err(invalid("invariance of a measure needs a stationary strategy")),
                };
                rec.push(&s.name, "invariance_residual", invariance_residual(p, &mu, &strat)?, 0.0, "exact_transport");
                return Ok(rec);
            }
            let strat = load_strategy(&s, c.strategy.as_deref())?;
            let e = load_evaluation(&s, c.evaluation.as_deref())?;
            let horizon = horizon_for(c, &e);
            rec.param("horizon", horizon);
            let d = disintegrate(p, &s.initial_belief, &strat, &e, horizon, c.budget)?;
            let induced: &StationaryStrategy = &d.strategy;
            let image = image_measure(p, &d.occupation, induced)?;
            rec.push(&s.name, "occupation_atoms", d.occupation.len() as f64, 0.0, "exact_tree");
            rec.push(&s.name, "history_shift_l1", d.history_l1, 0.0, "exact_tree");
            rec.push(&s.name, "kr_occupation_shifted", kr_distance(&d.occupation, &d.shifted)?, 0.0, "exact_transport");
            rec.push(&s.name, "kr_occupation_image", kr_distance(&d.occupation, &image)?, 0.0, "exact_transport");
            rec.details = Some(serde_json::json!({ "occupation": d.occupation, "strategy": induced }));
            Ok(rec)
        }
        Command::Reproduce { example, l } => {
            let opts = ReproduceOptions {
                l: *l,
                horizon: c.horizon,
                samples: c.samples,
                seed: c.seed,
                budget: c.budget,
            };
            Ok(reproduce(example, &opts)?)
        }
    }
}

fn emit(rec: &RunRecord, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(rec).expect("record serializes") + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["command", "instance", "parameter", "value", "error_bound", "method", "seed"])
                .expect("in-memory write");
            let seed = rec.seed.map(|s| s.to_string()).unwrap_or_default();
            for o in &rec.outputs {
                w.write_record([
                    rec.command.as_str(),
                    &o.instance,
                    &o.parameter,
                    &o.value.to_string(),
                    &o.error_bound.to_string(),
                    &o.method,
                    &seed,
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    match run(&cli) {
        Ok(mut rec) => {
            if cli.common.timing {
                rec.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            print!("{}", emit(&rec, cli.common.format));
            ExitCode::SUCCESS
        }
        Err(Failure::Model(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_budget() { EXIT_BUDGET } else { EXIT_VALIDATION })
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}
