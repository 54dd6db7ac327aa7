//! Values and payoffs: belief dynamic programming, weighted payoffs and
//! liminf/limsup estimators.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::chain::{product_chain, weighted_chain_payoff};
use crate::error::{Error, Result};
use crate::evaluations::{prefix_averages, window, Evaluation};
use crate::model::{canonical_key, Belief, BeliefKey, Play, Pomdp};
use crate::sim;
use crate::strategies::Strategy;
use crate::tree::walk_plays;

/// Default cap on memoized `(belief, stage)` entries.
pub const DEFAULT_DP_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactDp,
    TruncatedDp,
    MonteCarlo,
    ErgodicExact,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ExactDp => "exact_dp",
            Method::TruncatedDp => "truncated_dp",
            Method::MonteCarlo => "monte_carlo",
            Method::ErgodicExact => "ergodic_exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueReport {
    pub value: f64,
    pub method: Method,
    pub error_bound: f64,
    pub horizon_or_samples: usize,
}

/// Belief-space backward induction for deterministic stage weights.
struct WeightedDp<'a, W> {
    p: &'a Pomdp,
    weight: W,
    horizon: usize,
    budget: usize,
    memo: HashMap<(BeliefKey, usize), f64>,
}

impl<W: Fn(usize) -> f64> WeightedDp<'_, W> {
    /// Optimal `Σ_{m' >= m} θ_{m'} g(x_{m'}, i_{m'})` from belief `x` at stage `m`.
    fn value(&mut self, x: &[f64], m: usize) -> Result<f64> {
        if m > self.horizon {
            return Ok(0.0);
        }
        let key = (canonical_key(x), m);
        if let Some(v) = self.memo.get(&key) {
            return Ok(*v);
        }
        if self.memo.len() >= self.budget {
            return Err(Error::BudgetExceeded { budget: self.budget });
        }
        let w = (self.weight)(m);
        let mut best = f64::NEG_INFINITY;
        for i in 0..self.p.n_actions() {
            let mut v = w * self.p.stage_payoff_unchecked(x, i);
            if m < self.horizon {
                for branch in self.p.belief_transition_unchecked(x, i) {
                    v += branch.probability * self.value(branch.posterior.weights(), m + 1)?;
                }
            }
            // ties keep the first action
            if v > best {
                best = v;
            }
        }
        self.memo.insert(key, best);
        Ok(best)
    }
}

fn check(p: &Pomdp, x1: &Belief) -> Result<()> {
    if x1.dim() != p.n_states() {
        return Err(Error::InvalidInput(format!(
            "belief has dimension {}, POMDP has {} states",
            x1.dim(),
            p.n_states()
        )));
    }
    Ok(())
}

/// `sup_σ E[Σ_{m<=horizon} w(m) g(x_m, i_m)]` for deterministic weights.
pub fn weighted_value_dp<W: Fn(usize) -> f64>(
    p: &Pomdp,
    x1: &Belief,
    weight: W,
    horizon: usize,
    budget: usize,
) -> Result<f64> {
    check(p, x1)?;
    let mut dp = WeightedDp {
        p,
        weight,
        horizon,
        budget,
        memo: HashMap::new(),
    };
    dp.value(x1.weights(), 1)
}

/// Exact `n`-stage value `v_n(x_1)`.
pub fn value_n(p: &Pomdp, x1: &Belief, n: usize, budget: usize) -> Result<ValueReport> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be >= 1".into()));
    }
    let v = weighted_value_dp(p, x1, |_| 1.0 / n as f64, n, budget)?;
    Ok(ValueReport {
        value: v,
        method: Method::ExactDp,
        error_bound: 0.0,
        horizon_or_samples: n,
    })
}

/// `v_n(x_1)` for `n = 1..=n_max`, sharing the memo across horizons.
pub fn value_sequence(p: &Pomdp, x1: &Belief, n_max: usize, budget: usize) -> Result<Vec<f64>> {
    check(p, x1)?;
    // unnormalized values V_t, stored by remaining stages
    let mut dp = WeightedDp {
        p,
        weight: |_| 1.0,
        horizon: n_max,
        budget,
        memo: HashMap::new(),
    };
    (1..=n_max)
        .map(|n| Ok(dp.value(x1.weights(), n_max - n + 1)? / n as f64))
        .collect()
}

/// Discounted value `v_λ(x_1)` truncated at the first `T` with
/// `(1-λ)^T <= tol`.
pub fn value_discounted(p: &Pomdp, x1: &Belief, lambda: f64, tol: f64, budget: usize) -> Result<ValueReport> {
    if !(lambda > 0.0 && lambda < 1.0) || tol <= 0.0 {
        return Err(Error::InvalidInput("need λ in (0,1) and tol > 0".into()));
    }
    let horizon = ((tol.ln() / (1.0 - lambda).ln()).ceil() as usize).max(1);
    if horizon > budget {
        return Err(Error::Truncation {
            horizon: budget,
            required: format!("{horizon}"),
        });
    }
    let v = weighted_value_dp(p, x1, |m| lambda * (1.0 - lambda).powi(m as i32 - 1), horizon, budget)?;
    Ok(ValueReport {
        value: v,
        method: Method::TruncatedDp,
        error_bound: (1.0 - lambda).powi(horizon as i32),
        horizon_or_samples: horizon,
    })
}

/// `v_{n_max}(x_1)` as an estimate of the asymptotic value, with error bound
/// the spread of `v_n` over the last quartile of `n <= n_max` plus `1/n_max`.
pub fn asymptotic_value_estimate(p: &Pomdp, x1: &Belief, n_max: usize, budget: usize) -> Result<ValueReport> {
    if n_max < 2 {
        return Err(Error::InvalidInput("n_max must be >= 2".into()));
    }
    let seq = value_sequence(p, x1, n_max, budget)?;
    let tail = &seq[n_max - n_max / 4 - 1..];
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ValueReport {
        value: seq[n_max - 1],
        method: Method::TruncatedDp,
        error_bound: hi - lo + 1.0 / n_max as f64,
        horizon_or_samples: n_max,
    })
}

/// A play whose weights a deterministic evaluation can be read from.
fn placeholder_play(n_states: usize, horizon: usize) -> Play {
    let mut play = Play::with_dim(n_states);
    let x = vec![1.0 / n_states as f64; n_states];
    for m in 0..horizon {
        play.push_stage(0, &x);
        play.push_action(0, 0.0, 0.0);
        if m + 1 < horizon {
            play.signals.push(0);
        }
    }
    play
}

/// `γ_θ(x_1, σ) = E[Σ_m θ_m r(k_m, i_m)]` over plays truncated at `horizon`.
/// Deterministic evaluations under a transducer go through the product chain;
/// everything else enumerates the play tree. The error bound is the expected
/// weight beyond the horizon.
pub fn weighted_payoff_exact(
    p: &Pomdp,
    x1: &Belief,
    strat: &Strategy,
    e: &Evaluation,
    horizon: usize,
    budget: usize,
) -> Result<ValueReport> {
    if let (true, Some(t)) = (e.is_deterministic(), strat.as_transducer()) {
        check(p, x1)?;
        let a = e.assess(&placeholder_play(p.n_states(), horizon))?;
        let c = product_chain(p, t, x1)?;
        return Ok(ValueReport {
            value: weighted_chain_payoff(&c, &a.weights),
            method: if a.tail_weight > 0.0 { Method::TruncatedDp } else { Method::ExactDp },
            error_bound: a.tail_weight,
            horizon_or_samples: horizon,
        });
    }
    weighted_payoff_tree(p, x1, strat, e, horizon, budget)
}

/// [`weighted_payoff_exact`] forced through tree enumeration.
pub fn weighted_payoff_tree(
    p: &Pomdp,
    x1: &Belief,
    strat: &Strategy,
    e: &Evaluation,
    horizon: usize,
    budget: usize,
) -> Result<ValueReport> {
    let (mut value, mut tail) = (0.0, 0.0);
    walk_plays(p, x1, strat, horizon, budget, |play, prob| {
        let a = e.assess(play)?;
        value += prob * a.payoff(&play.rewards);
        tail += prob * a.tail_weight;
        Ok(())
    })?;
    Ok(ValueReport {
        value,
        method: if tail > 0.0 { Method::TruncatedDp } else { Method::ExactDp },
        error_bound: tail,
        horizon_or_samples: horizon,
    })
}

/// Monte Carlo `γ_θ(x_1, σ)`; error bound is three standard errors plus the
/// expected weight left beyond the horizon.
pub fn weighted_payoff_mc(
    p: &Pomdp,
    x1: &Belief,
    strat: &Strategy,
    e: &Evaluation,
    horizon: usize,
    samples: usize,
    seed: u64,
) -> Result<ValueReport> {
    let est = sim::estimate(samples, seed, |rng| {
        let play = sim::simulate(p, x1, strat, horizon, rng, |play| e.settles_now(play))?;
        let a = e.assess(&play)?;
        Ok([a.payoff(&play.rewards), a.tail_weight])
    })?;
    Ok(ValueReport {
        value: est.mean,
        method: Method::MonteCarlo,
        error_bound: 3.0 * est.std_error + est.aux,
        horizon_or_samples: samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extreme {
    Limsup,
    Liminf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stream {
    /// `g(x_m, i_m)`.
    Belief,
    /// `r(k_m, i_m)`.
    State,
}

/// Max (limsup) or min (liminf) of the running averages over the window
/// `[len/2, len]`.
pub fn average_proxy(payoffs: &[f64], extreme: Extreme) -> f64 {
    let averages = prefix_averages(payoffs);
    match extreme {
        Extreme::Limsup => window(&averages).fold(f64::NEG_INFINITY, f64::max),
        Extreme::Liminf => window(&averages).fold(f64::INFINITY, f64::min),
    }
}

/// The proxy of one play for the given mode.
pub fn play_proxy(play: &Play, extreme: Extreme, stream: Stream) -> f64 {
    let payoffs = match stream {
        Stream::Belief => &play.belief_payoffs,
        Stream::State => &play.rewards,
    };
    average_proxy(payoffs, extreme)
}

/// Sample mean of the limsup/liminf proxy of average payoffs; error bound is
/// three standard errors.
#[allow(clippy::too_many_arguments)]
pub fn limsup_belief_payoff_mc(
    p: &Pomdp,
    x1: &Belief,
    strat: &Strategy,
    horizon: usize,
    samples: usize,
    seed: u64,
    extreme: Extreme,
    stream: Stream,
) -> Result<ValueReport> {
    if horizon < 2 {
        return Err(Error::InvalidInput("horizon must be >= 2".into()));
    }
    let est = sim::estimate(samples, seed, |rng| {
        let play = sim::simulate(p, x1, strat, horizon, rng, |_| false)?;
        Ok([play_proxy(&play, extreme, stream), 0.0])
    })?;
    Ok(ValueReport {
        value: est.mean,
        method: Method::MonteCarlo,
        error_bound: 3.0 * est.std_error,
        horizon_or_samples: samples,
    })
}
