//! Evaluations `θ = (θ_m)`: stage weights that may depend on the play.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Belief, Play, Pomdp};
use crate::sim::{self, McEstimate};
use crate::strategies::Strategy;
use crate::tree::{self, walk_plays};

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Serializable description of a standard evaluation family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvaluationSpec {
    NStage { n: usize },
    Discounted { lambda: f64 },
    /// `θ_m = weights[m-1]`, non-increasing.
    Decreasing { weights: Vec<f64> },
    /// `θ_m = levels[j]` for `breaks[j-1] < m <= breaks[j]`.
    PiecewiseConstant { breaks: Vec<usize>, levels: Vec<f64> },
    /// Weight `1/l` on stages `1..=l` if the first state is the first declared
    /// state, on stages `l+1..=2l` otherwise.
    StateBlockEx1 { l: usize },
    /// Weight `1/l` on the first run of `l` consecutive stages, all after
    /// stage 1, spent in the first declared state.
    RunBlockEx2 { l: usize },
    /// `θ_m = 1/η` for `m <= η`, where `η` is the first `n >= l` whose average
    /// belief payoff is within `1/l` of the limsup proxy over `horizon` stages.
    LimsupTheta { l: usize, horizon: usize },
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measurability {
    /// `θ_m` depends on the first `m-1` action/signal pairs.
    PrefixObserved,
    /// `θ_m` depends on the first `m` states and `m-1` actions and signals.
    PrefixFull,
    /// `θ_m` depends on the whole observed play.
    PlayObserved,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Pointwise,
    InExpectation,
    None,
}

/// The weights an evaluation assigns to a truncated play.
#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    /// `θ_1, …, θ_H` with `H = play.len()`.
    pub weights: Vec<f64>,
    /// `Σ_{m>H} θ_m`.
    pub tail_weight: f64,
    /// `Σ_{m>=H} |θ_m - θ_{m+1}|`.
    pub remainder: Remainder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Remainder {
    Exact(f64),
    /// Only an upper bound is known; the lower bound is 0.
    Bound(f64),
}

impl Remainder {
    pub fn lower(&self) -> f64 {
        match self {
            Remainder::Exact(v) => *v,
            Remainder::Bound(_) => 0.0,
        }
    }

    pub fn upper(&self) -> f64 {
        match self {
            Remainder::Exact(v) | Remainder::Bound(v) => *v,
        }
    }
}

impl Assessment {
    /// `|θ_1| + Σ_m |θ_m - θ_{m+1}|` as a `(lower, upper)` pair.
    pub fn irregularity(&self) -> (f64, f64) {
        let visible = variation(&self.weights);
        (visible + self.remainder.lower(), visible + self.remainder.upper())
    }

    pub fn payoff(&self, rewards: &[f64]) -> f64 {
        self.weights.iter().zip(rewards).map(|(w, r)| w * r).sum()
    }
}

/// `|θ_1| + Σ_{m<H} |θ_m - θ_{m+1}|` over the given weights.
pub fn variation(weights: &[f64]) -> f64 {
    match weights.first() {
        None => 0.0,
        Some(first) => {
            first.abs()
                + weights
                    .windows(2)
                    .map(|w| (w[0] - w[1]).abs())
                    .sum::<f64>()
        }
    }
}

#[derive(Debug, Clone)]
enum Rule {
    Spec(EvaluationSpec),
    Smoothed { inner: Box<Evaluation>, block: usize },
    Conditional(Arc<ConditionalTable>),
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    rule: Rule,
    measurability: Measurability,
    normalization: Normalization,
}

impl Evaluation {
    pub fn new(spec: EvaluationSpec) -> Result<Self> {
        make_evaluation(spec)
    }

    pub fn measurability(&self) -> Measurability {
        self.measurability
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn spec(&self) -> Option<&EvaluationSpec> {
        match &self.rule {
            Rule::Spec(s) => Some(s),
            _ => None,
        }
    }

    pub fn conditional_table(&self) -> Option<&ConditionalTable> {
        match &self.rule {
            Rule::Conditional(t) => Some(t),
            _ => None,
        }
    }

    /// Weights that do not depend on the play.
    pub fn is_deterministic(&self) -> bool {
        match &self.rule {
            Rule::Spec(s) => matches!(
                s,
                EvaluationSpec::NStage { .. }
                    | EvaluationSpec::Discounted { .. }
                    | EvaluationSpec::Decreasing { .. }
                    | EvaluationSpec::PiecewiseConstant { .. }
                    | EvaluationSpec::Zero
            ),
            Rule::Smoothed { inner, .. } => inner.is_deterministic(),
            Rule::Conditional(_) => false,
        }
    }

    /// A stage after which every weight vanishes on every play, if any.
    pub fn support_end(&self) -> Option<usize> {
        match &self.rule {
            Rule::Spec(s) => match s {
                EvaluationSpec::NStage { n } => Some(*n),
                EvaluationSpec::Discounted { lambda } => (*lambda >= 1.0).then_some(1),
                EvaluationSpec::Decreasing { weights } => Some(weights.len()),
                EvaluationSpec::PiecewiseConstant { breaks, .. } => breaks.last().copied(),
                EvaluationSpec::StateBlockEx1 { l } => Some(2 * l),
                EvaluationSpec::RunBlockEx2 { .. } => None,
                EvaluationSpec::LimsupTheta { horizon, .. } => Some(*horizon),
                EvaluationSpec::Zero => Some(0),
            },
            Rule::Smoothed { inner, block } => inner.support_end().map(|h| h.div_ceil(*block) * block),
            Rule::Conditional(t) => Some(t.depth + 1),
        }
    }

    /// Whether every weight of the play is determined by its visible part.
    pub fn settled(&self, play: &Play) -> bool {
        match &self.rule {
            Rule::Spec(EvaluationSpec::RunBlockEx2 { l }) => run_start(play, *l).is_some(),
            Rule::Spec(EvaluationSpec::StateBlockEx1 { l }) => {
                !play.is_empty() && play.len() >= if play.states[0] == 0 { *l } else { 2 * l }
            }
            _ => match self.support_end() {
                Some(h) => play.len() >= h,
                None => false,
            },
        }
    }

    /// [`Evaluation::settled`] for a play that was not yet settled one stage
    /// earlier; constant time per stage during simulation.
    pub fn settles_now(&self, play: &Play) -> bool {
        match &self.rule {
            Rule::Spec(EvaluationSpec::RunBlockEx2 { l }) => {
                let h = play.len();
                h > *l && play.states[h - l..].iter().all(|&k| k == 0)
            }
            _ => self.settled(play),
        }
    }

    /// Weights on the visible part of the play with the tail information.
    pub fn assess(&self, play: &Play) -> Result<Assessment> {
        let h = play.len();
        if let Some(full) = self.full_weights(play)? {
            let mut weights = vec![0.0; h];
            let visible = full.len().min(h);
            weights[..visible].copy_from_slice(&full[..visible]);
            let tail_weight = full.iter().skip(h).sum();
            let remainder = if h == 0 {
                0.0
            } else {
                let mut r = 0.0;
                let at = |m: usize| full.get(m - 1).copied().unwrap_or(0.0);
                for m in h..full.len().max(h) + 1 {
                    r += (at(m) - at(m + 1)).abs();
                }
                r
            };
            return Ok(Assessment {
                weights,
                tail_weight,
                remainder: Remainder::Exact(remainder),
            });
        }
        match &self.rule {
            Rule::Spec(EvaluationSpec::Discounted { lambda }) => {
                let weights: Vec<f64> = (0..h).map(|m| lambda * (1.0 - lambda).powi(m as i32)).collect();
                let last = weights.last().copied().unwrap_or(0.0);
                Ok(Assessment {
                    weights,
                    tail_weight: (1.0 - lambda).powi(h as i32),
                    remainder: Remainder::Exact(last),
                })
            }
            Rule::Spec(EvaluationSpec::RunBlockEx2 { l }) => Ok(Assessment {
                weights: vec![0.0; h],
                tail_weight: 1.0,
                remainder: Remainder::Exact(2.0 / *l as f64),
            }),
            Rule::Smoothed { inner, block } => {
                let (block, lambda) = match inner.spec() {
                    Some(EvaluationSpec::Discounted { lambda }) => (*block, *lambda),
                    _ => {
                        return Err(Error::Truncation {
                            horizon: h,
                            required: "the smoothed evaluation's settled support".into(),
                        })
                    }
                };
                let theta = |m: usize| lambda * (1.0 - lambda).powi(m as i32 - 1);
                let omega = |m: usize| theta((m - 1) / block * block + 1);
                let weights: Vec<f64> = (1..=h).map(omega).collect();
                let last = weights.last().copied().unwrap_or(0.0);
                let block_end = h.div_ceil(block) * block;
                let q = (1.0 - lambda).powi(block as i32);
                let later_blocks = block as f64 * lambda * q.powi((block_end / block) as i32) / (1.0 - q);
                let tail_weight = if h == 0 {
                    1.0
                } else {
                    (block_end - h) as f64 * last + later_blocks
                };
                Ok(Assessment {
                    weights,
                    tail_weight,
                    remainder: Remainder::Exact(last),
                })
            }
            _ => Err(Error::Truncation {
                horizon: h,
                required: "the evaluation's support".into(),
            }),
        }
    }

    /// `θ_1, θ_2, …` up to the last non-zero weight, when the visible part of
    /// the play determines them.
    fn full_weights(&self, play: &Play) -> Result<Option<Vec<f64>>> {
        let out = match &self.rule {
            Rule::Spec(s) => match s {
                EvaluationSpec::NStage { n } => Some(vec![1.0 / *n as f64; *n]),
                EvaluationSpec::Discounted { lambda } if *lambda >= 1.0 => Some(vec![1.0]),
                EvaluationSpec::Discounted { .. } => None,
                EvaluationSpec::Decreasing { weights } => Some(weights.clone()),
                EvaluationSpec::PiecewiseConstant { breaks, levels } => {
                    let mut w = Vec::with_capacity(*breaks.last().unwrap_or(&0));
                    let mut start = 0;
                    for (&end, &level) in breaks.iter().zip(levels) {
                        w.extend(std::iter::repeat_n(level, end - start));
                        start = end;
                    }
                    Some(w)
                }
                EvaluationSpec::StateBlockEx1 { l } => {
                    if play.is_empty() {
                        return Ok(Some(Vec::new()));
                    }
                    let v = 1.0 / *l as f64;
                    let mut w = vec![0.0; 2 * l];
                    let range = if play.states[0] == 0 { 0..*l } else { *l..2 * l };
                    w[range].iter_mut().for_each(|x| *x = v);
                    Some(w)
                }
                EvaluationSpec::RunBlockEx2 { l } => run_start(play, *l).map(|n| {
                    let mut w = vec![0.0; n + l];
                    w[n..].iter_mut().for_each(|x| *x = 1.0 / *l as f64);
                    w
                }),
                EvaluationSpec::LimsupTheta { l, horizon } => {
                    if play.len() < *horizon {
                        return Err(Error::Truncation {
                            horizon: play.len(),
                            required: format!("{horizon}"),
                        });
                    }
                    let eta = eta_horizon(&play.belief_payoffs[..*horizon], *l)?;
                    Some(vec![1.0 / eta as f64; eta])
                }
                EvaluationSpec::Zero => Some(Vec::new()),
            },
            Rule::Smoothed { inner, block } => match inner.full_weights(play)? {
                None => None,
                Some(theta) => {
                    let end = theta.len().div_ceil(*block) * block;
                    Some(
                        (1..=end)
                            .map(|m| theta.get((m - 1) / block * block).copied().unwrap_or(0.0))
                            .collect(),
                    )
                }
            },
            Rule::Conditional(t) => {
                if play.len() < t.depth + 1 {
                    return Err(Error::Truncation {
                        horizon: play.len(),
                        required: format!("{}", t.depth + 1),
                    });
                }
                Some(t.weights_along(&play.actions, &play.signals))
            }
        };
        Ok(out)
    }

    /// `θ_1, …, θ_H` on the visible part of the play.
    pub fn weights(&self, play: &Play) -> Result<Vec<f64>> {
        Ok(self.assess(play)?.weights)
    }
}

/// Number of stages `N >= 1` preceding the first run of `l` stages in the
/// first declared state, if the play contains one.
fn run_start(play: &Play, l: usize) -> Option<usize> {
    let mut run = 0;
    for (m, &k) in play.states.iter().enumerate().skip(1) {
        if k == 0 {
            run += 1;
            if run == l {
                return Some(m + 1 - l);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// Builds an evaluation from its description after range checks.
pub fn make_evaluation(spec: EvaluationSpec) -> Result<Evaluation> {
    let bad = |msg: String| Err(Error::InvalidInput(msg));
    let unit = |v: f64| (0.0..=1.0).contains(&v);
    use Measurability::*;
    let (measurability, normalization) = match &spec {
        EvaluationSpec::NStage { n } => {
            if *n == 0 {
                return bad("n_stage needs n >= 1".into());
            }
            (PrefixObserved, Normalization::Pointwise)
        }
        EvaluationSpec::Discounted { lambda } => {
            if !(*lambda > 0.0 && *lambda <= 1.0) {
                return bad(format!("discount factor {lambda} outside (0,1]"));
            }
            (PrefixObserved, Normalization::Pointwise)
        }
        EvaluationSpec::Decreasing { weights } => {
            if weights.is_empty() || !weights.iter().all(|w| unit(*w)) {
                return bad("decreasing weights must be non-empty and in [0,1]".into());
            }
            if weights.windows(2).any(|w| w[1] > w[0]) {
                return bad("decreasing weights must be non-increasing".into());
            }
            (PrefixObserved, sum_class(weights.iter().sum()))
        }
        EvaluationSpec::PiecewiseConstant { breaks, levels } => {
            if breaks.is_empty() || breaks.len() != levels.len() {
                return bad("piecewise_constant needs as many levels as breaks".into());
            }
            if breaks[0] == 0 || breaks.windows(2).any(|w| w[1] <= w[0]) {
                return bad("piecewise_constant breaks must be increasing and positive".into());
            }
            if !levels.iter().all(|v| unit(*v)) {
                return bad("piecewise_constant levels must lie in [0,1]".into());
            }
            let mut total = 0.0;
            let mut start = 0;
            for (&end, &level) in breaks.iter().zip(levels) {
                total += (end - start) as f64 * level;
                start = end;
            }
            (PrefixObserved, sum_class(total))
        }
        EvaluationSpec::StateBlockEx1 { l } | EvaluationSpec::RunBlockEx2 { l } => {
            if *l == 0 {
                return bad("block length l must be >= 1".into());
            }
            let class = if matches!(spec, EvaluationSpec::StateBlockEx1 { .. }) {
                PrefixFull
            } else {
                PlayObserved
            };
            (class, Normalization::Pointwise)
        }
        EvaluationSpec::LimsupTheta { l, horizon } => {
            if *l == 0 || *horizon < *l {
                return bad(format!("limsup_theta needs 1 <= l <= horizon, got l={l}, horizon={horizon}"));
            }
            (PlayObserved, Normalization::Pointwise)
        }
        EvaluationSpec::Zero => (PrefixObserved, Normalization::None),
    };
    Ok(Evaluation {
        rule: Rule::Spec(spec),
        measurability,
        normalization,
    })
}

fn sum_class(total: f64) -> Normalization {
    if (total - 1.0).abs() <= NORMALIZATION_TOLERANCE {
        Normalization::Pointwise
    } else {
        Normalization::None
    }
}

/// Piecewise-constant version `ω_m = θ_{tl+1}` for `tl+1 <= m <= (t+1)l`.
pub fn block_smooth(e: &Evaluation, l: usize) -> Result<Evaluation> {
    if l == 0 {
        return Err(Error::InvalidInput("block length must be >= 1".into()));
    }
    if l == 1 {
        return Ok(e.clone());
    }
    Ok(Evaluation {
        rule: Rule::Smoothed {
            inner: Box::new(e.clone()),
            block: l,
        },
        measurability: e.measurability,
        normalization: Normalization::None,
    })
}

/// First `n >= l` (1-based) whose prefix average is at least the limsup proxy
/// minus `1/l`; the proxy is the largest prefix average over
/// `[len/2, len]`. Returns `len` if no index qualifies.
pub fn eta_horizon(payoffs: &[f64], l: usize) -> Result<usize> {
    let n = payoffs.len();
    if l == 0 || n < l {
        return Err(Error::InvalidInput(format!(
            "sequence of length {n} is shorter than l = {l}"
        )));
    }
    let averages = prefix_averages(payoffs);
    let proxy = window(&averages).fold(f64::NEG_INFINITY, f64::max);
    let target = proxy - 1.0 / l as f64;
    Ok((l..=n).find(|&m| averages[m - 1] >= target).unwrap_or(n))
}

pub(crate) fn prefix_averages(payoffs: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    payoffs
        .iter()
        .enumerate()
        .map(|(m, x)| {
            sum += x;
            sum / (m + 1) as f64
        })
        .collect()
}

/// Prefix averages at indices `n ∈ [len/2, len]` (1-based, `n >= 1`).
pub(crate) fn window(averages: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let n = averages.len();
    let start = (n / 2).max(1);
    averages[start - 1..].iter().copied()
}

/// Exact or bracketed irregularity `I(θ, x_1, σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrregularityReport {
    pub lower: f64,
    pub upper: f64,
    pub horizon: usize,
    pub tail_bound: f64,
}

impl IrregularityReport {
    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }
}

/// `I(θ, x_1, σ)` by enumeration of the play tree truncated at `horizon`.
pub fn irregularity_exact(
    p: &Pomdp,
    x1: &Belief,
    strat: &Strategy,
    e: &Evaluation,
    horizon: usize,
    budget: usize,
) -> Result<IrregularityReport> {
    let (mut lower, mut upper) = (0.0, 0.0);
    walk_plays(p, x1, strat, horizon, budget, |play, prob| {
        let (lo, hi) = e.assess(play)?.irregularity();
        lower += prob * lo;
        upper += prob * hi;
        Ok(())
    })?;
    Ok(IrregularityReport {
        lower,
        upper,
        horizon,
        tail_bound: upper - lower,
    })
}

/// `I(θ, x_1)` over pure strategies on the truncated tree, reported as the
/// largest upper bracket. Fails when the tree exceeds the budget.
pub fn irregularity_sup(
    p: &Pomdp,
    x1: &Belief,
    e: &Evaluation,
    horizon: usize,
    budget: usize,
) -> Result<f64> {
    tree::sup_over_pure_strategies(p, x1, horizon, budget, |play| Ok(e.assess(play)?.irregularity().1))
}

/// Monte Carlo estimate of the truncated irregularity. Simulation stops early
/// once the evaluation is settled.
pub fn irregularity_mc(
    p: &Pomdp,
    x1: &Belief,
    strat: &Strategy,
    e: &Evaluation,
    horizon: usize,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    sim::estimate(samples, seed, |rng| {
        let play = sim::simulate(p, x1, strat, horizon, rng, |play| e.settles_now(play))?;
        let a = e.assess(&play)?;
        let (lo, hi) = a.irregularity();
        Ok([lo, hi - lo])
    })
}

/// Prefix tree of conditional weights `ρ_m = E[θ_m | F^o_m]`.
#[derive(Debug, Clone)]
pub struct ConditionalTable {
    n_signals: usize,
    /// Longest stored prefix; weights exist for stages `1..=depth+1`.
    depth: usize,
    nodes: Vec<Node>,
    index: HashMap<(u32, u32), u32>,
}

#[derive(Debug, Clone)]
struct Node {
    stage: usize,
    mass: f64,
    weight: f64,
    children: Vec<u32>,
}

/// A reachable observed prefix with its conditional weight.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixNode {
    /// The stage `m` whose weight the prefix carries (prefix length `m-1`).
    pub stage: usize,
    pub mass: f64,
    pub rho: f64,
    /// `(mass, rho)` of each one-pair extension.
    pub children: Vec<(f64, f64)>,
}

impl ConditionalTable {
    fn new(n_signals: usize, depth: usize) -> Self {
        ConditionalTable {
            n_signals,
            depth,
            nodes: vec![Node {
                stage: 1,
                mass: 0.0,
                weight: 0.0,
                children: Vec::new(),
            }],
            index: HashMap::new(),
        }
    }

    fn child(&mut self, parent: u32, i: usize, s: usize) -> u32 {
        let code = (i * self.n_signals + s) as u32;
        if let Some(&c) = self.index.get(&(parent, code)) {
            return c;
        }
        let id = self.nodes.len() as u32;
        let stage = self.nodes[parent as usize].stage + 1;
        self.nodes.push(Node {
            stage,
            mass: 0.0,
            weight: 0.0,
            children: Vec::new(),
        });
        self.nodes[parent as usize].children.push(id);
        self.index.insert((parent, code), id);
        id
    }

    fn rho(&self, id: u32) -> f64 {
        let n = &self.nodes[id as usize];
        if n.mass > 0.0 {
            n.weight / n.mass
        } else {
            0.0
        }
    }

    fn weights_along(&self, actions: &[usize], signals: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.depth + 1);
        let mut node = Some(0u32);
        for m in 0..=self.depth {
            out.push(node.map(|id| self.rho(id)).unwrap_or(0.0));
            if m < self.depth {
                node = node.and_then(|id| {
                    let code = (actions[m] * self.n_signals + signals[m]) as u32;
                    self.index.get(&(id, code)).copied()
                });
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn prefixes(&self) -> impl Iterator<Item = PrefixNode> + '_ {
        (0..self.nodes.len() as u32).map(move |id| {
            let n = &self.nodes[id as usize];
            PrefixNode {
                stage: n.stage,
                mass: n.mass,
                rho: self.rho(id),
                children: n
                    .children
                    .iter()
                    .map(|&c| (self.nodes[c as usize].mass, self.rho(c)))
                    .collect(),
            }
        })
    }
}

/// `ρ_m = E[θ_m | F^o_m]` under `(x_1, σ)` on the tree truncated at
/// `horizon`. The evaluation must be settled on every play at that horizon.
pub fn conditional_evaluation(
    p: &Pomdp,
    x1: &Belief,
    strat: &Strategy,
    e: &Evaluation,
    horizon: usize,
    budget: usize,
) -> Result<Evaluation> {
    let mut table = ConditionalTable::new(p.n_signals(), horizon - 1);
    let mut path = Vec::with_capacity(horizon);
    walk_plays(p, x1, strat, horizon, budget, |play, prob| {
        let a = e.assess(play)?;
        if a.tail_weight > 0.0 || matches!(a.remainder, Remainder::Bound(_)) {
            return Err(Error::Truncation {
                horizon,
                required: "a horizon covering the evaluation's support".into(),
            });
        }
        path.clear();
        path.push(0u32);
        for m in 0..horizon - 1 {
            let next = table.child(path[m], play.actions[m], play.signals[m]);
            path.push(next);
        }
        for (id, w) in path.iter().zip(&a.weights) {
            let node = &mut table.nodes[*id as usize];
            node.mass += prob;
            node.weight += prob * w;
        }
        Ok(())
    })?;
    Ok(Evaluation {
        rule: Rule::Conditional(Arc::new(table)),
        measurability: Measurability::PrefixObserved,
        normalization: Normalization::InExpectation,
    })
}
