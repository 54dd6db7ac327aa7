//! Run records and the pinned reproductions of the built-in examples.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::chain::{ergodic_decomposition, liminf_value_transducer, product_chain};
use crate::error::{Error, Result};
use crate::evaluations::{irregularity_exact, irregularity_mc, EvaluationSpec, IrregularityReport};
use crate::instances;
use crate::model::Belief;
use crate::sim;
use crate::strategies::{
    doubling_strategy, enumerate_transducers, BehaviorStrategy, Strategy, Transducer, DEFAULT_TRANSDUCER_CAP,
};
use crate::values::{
    asymptotic_value_estimate, play_proxy, value_sequence, weighted_payoff_exact, weighted_payoff_mc, Extreme,
    Method, Stream, ValueReport,
};
use crate::Evaluation;

/// One emitted number. `parameter` names the quantity and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Output {
    pub instance: String,
    pub parameter: String,
    pub value: f64,
    pub error_bound: f64,
    pub method: String,
}

/// A pass/fail flag against a pinned target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub outputs: Vec<Output>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl RunRecord {
    pub fn new(command: &str, seed: Option<u64>) -> Self {
        RunRecord {
            command: command.to_string(),
            parameters: BTreeMap::new(),
            seed,
            outputs: Vec::new(),
            checks: Vec::new(),
            details: None,
            wall_time_ms: None,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("parameter serializes");
        self.parameters.insert(key.to_string(), v);
    }

    pub fn push(&mut self, instance: &str, parameter: &str, value: f64, error_bound: f64, method: &str) {
        self.outputs.push(Output {
            instance: instance.to_string(),
            parameter: parameter.to_string(),
            value,
            error_bound,
            method: method.to_string(),
        });
    }

    pub fn push_report(&mut self, instance: &str, parameter: &str, r: &ValueReport) {
        self.push(instance, parameter, r.value, r.error_bound, r.method.as_str());
    }

    /// Irregularity brackets are emitted as their lower end with the bracket
    /// width as error bound.
    pub fn push_irregularity(&mut self, instance: &str, parameter: &str, r: &IrregularityReport) {
        let method = if r.is_exact() { "exact_tree" } else { "truncated_tree" };
        self.push(instance, parameter, r.lower, r.upper - r.lower, method);
    }

    pub fn check(&mut self, name: &str, value: f64, target: &str, pass: bool) {
        self.checks.push(Check {
            name: name.to_string(),
            value,
            target: target.to_string(),
            pass,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone)]
pub struct ReproduceOptions {
    pub l: Option<usize>,
    pub horizon: Option<usize>,
    pub samples: Option<usize>,
    pub seed: u64,
    pub budget: usize,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        ReproduceOptions {
            l: None,
            horizon: None,
            samples: None,
            seed: 0,
            budget: crate::values::DEFAULT_DP_BUDGET,
        }
    }
}

pub const EXAMPLES: [&str; 4] = ["ex1", "ex2", "blind-limsup", "known-payoffs"];

pub fn reproduce(example: &str, opts: &ReproduceOptions) -> Result<RunRecord> {
    match example {
        "ex1" => reproduce_ex1(opts.l.unwrap_or(8), opts.budget),
        "ex2" => reproduce_ex2(opts.l.unwrap_or(10), opts.horizon, opts.samples.unwrap_or(10_000), opts.seed),
        "blind-limsup" => reproduce_blind_limsup(opts.horizon.unwrap_or(100_000), 3),
        "known-payoffs" => {
            reproduce_known_payoffs(opts.horizon.unwrap_or(2_000), opts.samples.unwrap_or(1_000), 5, opts.seed)
        }
        _ => Err(Error::InvalidInput(format!(
            "unknown example {example:?}; expected one of {}",
            EXAMPLES.join(", ")
        ))),
    }
}

/// Frozen matching states: the block evaluation earns 1 while every n-stage
/// value is 1/2.
pub fn reproduce_ex1(l: usize, budget: usize) -> Result<RunRecord> {
    if l == 0 {
        return Err(Error::InvalidInput("l must be >= 1".into()));
    }
    let mut rec = RunRecord::new("reproduce ex1", None);
    rec.param("l", l);
    let p = instances::matching();
    let x1 = Belief::uniform(2);
    let n_max = 50;
    let seq = value_sequence(&p, &x1, n_max, budget)?;
    let worst = seq.iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max);
    rec.push("ex1", &format!("baseline_value;n={n_max}"), seq[n_max - 1], 0.0, Method::ExactDp.as_str());
    rec.check("baseline v_n = 0.5 for n = 1..=50", worst, "max deviation <= 1e-9", worst <= 1e-9);

    let e = Evaluation::new(EvaluationSpec::StateBlockEx1 { l })?;
    let strat = Strategy::switch_after(0, l, 1);
    let v = weighted_payoff_exact(&p, &x1, &strat, &e, 2 * l, budget)?;
    rec.push_report("ex1", &format!("v_theta;l={l}"), &v);
    rec.check("v_theta = 1", v.value, "1 +- 1e-9", (v.value - 1.0).abs() <= 1e-9 && v.error_bound == 0.0);

    let irr = irregularity_exact(&p, &x1, &strat, &e, 2 * l, budget)?;
    rec.push_irregularity("ex1", &format!("irregularity;l={l}"), &irr);
    let target = 2.0 / l as f64;
    rec.check(
        "irregularity = 2/l",
        irr.lower,
        &format!("{target} exactly"),
        irr.is_exact() && irr.lower == target,
    );
    Ok(rec)
}

/// Default horizon for the run-block evaluation: far beyond the expected
/// waiting time `2^(l+1)` for a run of `l` first states.
pub fn ex2_default_horizon(l: usize) -> usize {
    let wait = 1usize.checked_shl(l as u32 + 1).unwrap_or(usize::MAX / 64);
    (64 * wait).max(50 * l)
}

/// Uniform redraws: the run evaluation earns 1 at irregularity 2/l while the
/// long-run average is 1/2.
pub fn reproduce_ex2(l: usize, horizon: Option<usize>, samples: usize, seed: u64) -> Result<RunRecord> {
    if l == 0 {
        return Err(Error::InvalidInput("l must be >= 1".into()));
    }
    let horizon = horizon.unwrap_or_else(|| ex2_default_horizon(l));
    let mut rec = RunRecord::new("reproduce ex2", Some(seed));
    rec.param("l", l);
    rec.param("horizon", horizon);
    rec.param("samples", samples);
    let p = instances::redraw();
    let x1 = Belief::uniform(2);

    let t = Transducer::constant(1, 2, 0);
    let dec = ergodic_decomposition(&product_chain(&p, &t, &x1)?)?;
    let pi = dec.stationary.first().cloned().unwrap_or_default();
    let gamma = dec.class_values.first().copied().unwrap_or(f64::NAN);
    rec.push("ex2", "ergodic_classes", dec.classes.len() as f64, 0.0, "ergodic_exact");
    rec.push("ex2", "class_value;d=1", gamma, 0.0, "ergodic_exact");
    let pi_ok = pi.len() == 2 && pi.iter().all(|v| (v - 0.5).abs() <= 1e-9);
    rec.check("one ergodic class", dec.classes.len() as f64, "1", dec.classes.len() == 1);
    rec.check("stationary law (0.5, 0.5)", pi.first().copied().unwrap_or(f64::NAN), "0.5 +- 1e-9", pi_ok);
    rec.check("class value 0.5", gamma, "0.5 +- 1e-9", (gamma - 0.5).abs() <= 1e-9);

    let base = asymptotic_value_estimate(&p, &x1, 50, crate::values::DEFAULT_DP_BUDGET)?;
    rec.push_report("ex2", "asymptotic_value;n_max=50", &base);
    rec.check("asymptotic baseline 0.5", base.value, "0.5 +- 1e-9", (base.value - 0.5).abs() <= 1e-9);

    let e = Evaluation::new(EvaluationSpec::RunBlockEx2 { l })?;
    let strat = Strategy::uniform();
    let v = weighted_payoff_mc(&p, &x1, &strat, &e, horizon, samples, seed)?;
    rec.push_report("ex2", &format!("v_theta;l={l}"), &v);
    rec.check("v_theta >= 0.99", v.value, ">= 0.99", v.value >= 0.99);

    let irr = irregularity_mc(&p, &x1, &strat, &e, horizon, samples, seed)?;
    rec.push("ex2", &format!("irregularity;l={l}"), irr.mean, 3.0 * irr.std_error + irr.aux, "monte_carlo");
    let target = 2.0 / l as f64;
    rec.check(
        "irregularity = 2/l",
        irr.mean,
        &format!("{target} +- 3 SE"),
        (irr.mean - target).abs() <= 3.0 * irr.std_error + 1e-12,
    );
    Ok(rec)
}

/// Blind MDP: every finite-memory strategy earns 1/2 in the long run while the
/// doubling strategy swings the running average.
pub fn reproduce_blind_limsup(horizon: usize, max_memory: usize) -> Result<RunRecord> {
    if horizon < 2 {
        return Err(Error::InvalidInput("horizon must be >= 2".into()));
    }
    let mut rec = RunRecord::new("reproduce blind-limsup", None);
    rec.param("horizon", horizon);
    rec.param("max_memory", max_memory);
    let p = instances::blind();
    let x1 = Belief::uniform(2);

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let transducers = enumerate_transducers(&p, max_memory, DEFAULT_TRANSDUCER_CAP)?;
    for t in &transducers {
        let v = liminf_value_transducer(&p, &x1, t)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    rec.push("blind", &format!("transducer_count;max_memory={max_memory}"), transducers.len() as f64, 0.0, "enumeration");
    rec.push("blind", "transducer_liminf_min", lo, 0.0, "ergodic_exact");
    rec.push("blind", "transducer_liminf_max", hi, 0.0, "ergodic_exact");
    let worst = (lo - 0.5).abs().max((hi - 0.5).abs());
    rec.check("every transducer earns 0.5", worst, "max deviation <= 1e-9", worst <= 1e-9);

    let doubling = doubling_strategy();
    let mut liminf_sum = 0.0;
    for (k1, name) in [(0, "alpha"), (1, "beta")] {
        let play = sim::simulate_deterministic(&p, k1, &doubling, horizon)?;
        let sup = play_proxy(&play, Extreme::Limsup, Stream::State);
        let inf = play_proxy(&play, Extreme::Liminf, Stream::State);
        liminf_sum += inf;
        rec.push("blind", &format!("doubling_limsup;start={name}"), sup, 0.0, "deterministic");
        rec.push("blind", &format!("doubling_liminf;start={name}"), inf, 0.0, "deterministic");
        rec.check(&format!("doubling limsup from {name} >= 0.9"), sup, ">= 0.9", sup >= 0.9);
    }
    let avg = liminf_sum / 2.0;
    rec.push("blind", "doubling_liminf;averaged", avg, 0.0, "deterministic");
    rec.check("doubling liminf averaged <= 0.2", avg, "<= 0.2", avg <= 0.2);
    Ok(rec)
}

/// Paired comparison of the belief-stream and state-stream limsup proxies on
/// a lift, one row per random reactive strategy. Returns
/// `(belief, state, difference)` estimates.
pub fn compare_streams(
    p: &crate::Pomdp,
    x1: &Belief,
    strat: &Strategy,
    horizon: usize,
    samples: usize,
    seed: u64,
) -> Result<[sim::McEstimate; 3]> {
    let run = |which: usize| {
        sim::estimate(samples, seed, |rng| {
            let play = sim::simulate(p, x1, strat, horizon, rng, |_| false)?;
            let b = play_proxy(&play, Extreme::Limsup, Stream::Belief);
            let s = play_proxy(&play, Extreme::Limsup, Stream::State);
            Ok([[b, s, b - s][which], 0.0])
        })
    };
    Ok([run(0)?, run(1)?, run(2)?])
}

fn known_payoffs_block(
    rec: &mut RunRecord,
    instance: &str,
    base: &crate::Pomdp,
    horizon: usize,
    samples: usize,
    n_strategies: usize,
    seed: u64,
) -> Result<()> {
    let lift = base.known_payoff_lift();
    let x1 = base.lift_belief(&Belief::uniform(base.n_states()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in 0..n_strategies {
        let strat = Strategy::Behavior(BehaviorStrategy::random_reactive(lift.n_actions(), lift.n_signals(), &mut rng));
        let [b, s, d] = compare_streams(&lift, &x1, &strat, horizon, samples, seed.wrapping_add(j as u64))?;
        rec.push(instance, &format!("limsup_belief;strategy={j}"), b.mean, 3.0 * b.std_error, "monte_carlo");
        rec.push(instance, &format!("limsup_state;strategy={j}"), s.mean, 3.0 * s.std_error, "monte_carlo");
        rec.push(instance, &format!("limsup_difference;strategy={j}"), d.mean, 3.0 * d.std_error, "monte_carlo");
        rec.check(
            &format!("{instance} streams agree, strategy {j}"),
            d.mean,
            "|belief - state| <= 3 SE",
            d.mean.abs() <= 3.0 * d.std_error + 1e-12,
        );
    }
    Ok(())
}

/// Belief-stream versus state-stream limsup on the known-payoff lift of the
/// blind MDP, plus the same comparison on the revealed matching instance.
pub fn reproduce_known_payoffs(horizon: usize, samples: usize, n_strategies: usize, seed: u64) -> Result<RunRecord> {
    if horizon < 2 || samples < 2 {
        return Err(Error::InvalidInput("need horizon >= 2 and samples >= 2".into()));
    }
    let mut rec = RunRecord::new("reproduce known-payoffs", Some(seed));
    rec.param("horizon", horizon);
    rec.param("samples", samples);
    rec.param("strategies", n_strategies);
    let blind = instances::blind();
    let revealed = instances::matching_revealed();
    for (name, p) in [("blind-lift", &blind), ("revealed-lift", &revealed)] {
        let lift = p.known_payoff_lift();
        let levels = p.reward_levels().len();
        let classes: Vec<usize> = (0..lift.n_states()).map(|k| k % levels).collect();
        let known = lift.is_payoff_partition(&classes, true);
        rec.push(name, "known_payoffs", if known { 1.0 } else { 0.0 }, 0.0, "structural");
        known_payoffs_block(&mut rec, name, p, horizon, samples, n_strategies, seed)?;
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ex1_small() {
        let rec = reproduce_ex1(2, crate::values::DEFAULT_DP_BUDGET).unwrap();
        assert!(rec.passed(), "{rec:?}");
        assert_eq!(rec.outputs[2].value, 1.0);
    }

    #[test]
    fn record_round_trips() {
        let rec = reproduce_ex1(4, crate::values::DEFAULT_DP_BUDGET).unwrap();
        let text = serde_json::to_string(&rec).unwrap();
        let back: RunRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rec);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn unknown_example() {
        assert!(reproduce("ex9", &ReproduceOptions::default()).is_err());
    }
}
