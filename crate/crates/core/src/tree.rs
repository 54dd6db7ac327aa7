//! Exhaustive enumeration of truncated play trees.

use crate::error::{Error, Result};
use crate::model::{Belief, Play, Pomdp};
use crate::strategies::Strategy;

/// Default cap on visited tree nodes.
pub const DEFAULT_NODE_BUDGET: usize = 2_000_000;

struct Walker<'a, F> {
    p: &'a Pomdp,
    strat: &'a Strategy,
    horizon: usize,
    budget: usize,
    nodes: usize,
    play: Play,
    leaf: F,
}

impl<F> Walker<'_, F>
where
    F: FnMut(&Play, f64) -> Result<()>,
{
    fn visit(&mut self, k: usize, belief: Vec<f64>, memory: usize, prob: f64) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::BudgetExceeded {
                budget: self.budget,
            });
        }
        let (ni, nk, ns) = (self.p.n_actions(), self.p.n_states(), self.p.n_signals());
        self.play.push_stage(k, &belief);
        let mut dist = vec![0.0; ni];
        self.strat.fill(
            memory,
            &self.play.actions,
            &self.play.signals,
            &belief,
            &mut dist,
        )?;
        for (i, &pi) in dist.iter().enumerate() {
            if pi <= 0.0 {
                continue;
            }
            let reward = self.p.reward(k, i);
            let g = self.p.stage_payoff_unchecked(&belief, i);
            self.play.push_action(i, reward, g);
            if self.play.len() == self.horizon {
                (self.leaf)(&self.play, prob * pi)?;
            } else {
                let row = self.p.row(k, i);
                let mut posteriors: Vec<Option<Vec<f64>>> = vec![None; ns];
                for k2 in 0..nk {
                    for s in 0..ns {
                        let q = row[k2 * ns + s];
                        if q <= 0.0 {
                            continue;
                        }
                        let post = posteriors[s]
                            .get_or_insert_with(|| posterior(self.p, &belief, i, s))
                            .clone();
                        self.play.signals.push(s);
                        let next_memory = self.strat.advance(memory, i, s);
                        let res = self.visit(k2, post, next_memory, prob * pi * q);
                        self.play.signals.pop();
                        res?;
                    }
                }
            }
            self.play.pop_action();
        }
        self.play.pop_stage();
        Ok(())
    }
}

fn posterior(p: &Pomdp, belief: &[f64], i: usize, s: usize) -> Vec<f64> {
    p.posterior_or_fallback(belief, i, s)
}

/// Calls `leaf(play, probability)` on every positive-probability play of
/// length `horizon`. Returns the number of visited nodes.
pub fn walk_plays<F>(
    p: &Pomdp,
    x1: &Belief,
    strat: &Strategy,
    horizon: usize,
    budget: usize,
    leaf: F,
) -> Result<usize>
where
    F: FnMut(&Play, f64) -> Result<()>,
{
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    if x1.dim() != p.n_states() {
        return Err(Error::InvalidInput(format!(
            "belief has dimension {}, POMDP has {} states",
            x1.dim(),
            p.n_states()
        )));
    }
    let mut walker = Walker {
        p,
        strat,
        horizon,
        budget,
        nodes: 0,
        play: Play::with_dim(p.n_states()),
        leaf,
    };
    for (k, &xk) in x1.weights().iter().enumerate() {
        if xk > 0.0 {
            walker.visit(k, x1.weights().to_vec(), strat.initial_memory(), xk)?;
        }
    }
    Ok(walker.nodes)
}

/// Maximum over pure strategies of `E[f(play)]` on plays truncated at
/// `horizon`, by backward induction over observed histories.
pub fn sup_over_pure_strategies<F>(
    p: &Pomdp,
    x1: &Belief,
    horizon: usize,
    budget: usize,
    f: F,
) -> Result<f64>
where
    F: Fn(&Play) -> Result<f64>,
{
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    let particles: Vec<(Vec<usize>, f64)> = x1
        .weights()
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(k, w)| (vec![k], *w))
        .collect();
    let mut ctx = SupCtx {
        p,
        horizon,
        budget,
        nodes: 0,
        f: &f,
        actions: Vec::new(),
        signals: Vec::new(),
        beliefs: Vec::new(),
    };
    ctx.node(particles, x1.weights().to_vec())
}

struct SupCtx<'a, F> {
    p: &'a Pomdp,
    horizon: usize,
    budget: usize,
    nodes: usize,
    f: &'a F,
    actions: Vec<usize>,
    signals: Vec<usize>,
    beliefs: Vec<f64>,
}

impl<F> SupCtx<'_, F>
where
    F: Fn(&Play) -> Result<f64>,
{
    fn node(&mut self, particles: Vec<(Vec<usize>, f64)>, belief: Vec<f64>) -> Result<f64> {
        self.nodes += particles.len();
        if self.nodes > self.budget {
            return Err(Error::BudgetExceeded {
                budget: self.budget,
            });
        }
        let (nk, ns) = (self.p.n_states(), self.p.n_signals());
        self.beliefs.extend_from_slice(&belief);
        let mut best = f64::NEG_INFINITY;
        for i in 0..self.p.n_actions() {
            self.actions.push(i);
            let value = if self.actions.len() == self.horizon {
                let mut total = 0.0;
                for (states, prob) in &particles {
                    let play = self.materialize(states);
                    total += prob * (self.f)(&play)?;
                }
                total
            } else {
                let mut total = 0.0;
                for s in 0..ns {
                    let mut next = Vec::new();
                    for (states, prob) in &particles {
                        let k = *states.last().unwrap();
                        for k2 in 0..nk {
                            let q = self.p.q(k, i, k2, s);
                            if q > 0.0 {
                                let mut path = states.clone();
                                path.push(k2);
                                next.push((path, prob * q));
                            }
                        }
                    }
                    if next.is_empty() {
                        continue;
                    }
                    let post = self.p.posterior_or_fallback(&belief, i, s);
                    self.signals.push(s);
                    let v = self.node(next, post);
                    self.signals.pop();
                    total += v?;
                }
                total
            };
            self.actions.pop();
            if value > best {
                best = value;
            }
        }
        let n = self.beliefs.len() - nk;
        self.beliefs.truncate(n);
        Ok(best)
    }

    fn materialize(&self, states: &[usize]) -> Play {
        let rewards = states
            .iter()
            .zip(&self.actions)
            .map(|(k, i)| self.p.reward(*k, *i))
            .collect();
        let nk = self.p.n_states();
        let belief_payoffs = self
            .actions
            .iter()
            .enumerate()
            .map(|(m, i)| {
                self.p
                    .stage_payoff_unchecked(&self.beliefs[m * nk..(m + 1) * nk], *i)
            })
            .collect();
        Play {
            states: states.to_vec(),
            actions: self.actions.clone(),
            signals: self.signals.clone(),
            beliefs: self.beliefs.clone(),
            rewards,
            belief_payoffs,
            n_states: nk,
        }
    }
}
