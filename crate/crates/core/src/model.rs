//! The POMDP tuple, beliefs over states and Bayes updates.
//!
//! A [`Pomdp`] holds finite state, action and signal sets together with the
//! joint transition kernel `q(k, i) ∈ Δ(K × S)` and the stage reward
//! `r(k, i) ∈ [0, 1]`. Beliefs are probability vectors over the states; the
//! decision-maker's belief after observing `(i, s)` is the Bayes posterior
//! computed by [`Pomdp::belief_transition`].

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on probability row sums.
pub const ROW_TOLERANCE: f64 = 1e-9;
/// Signals whose probability falls below this are dropped from Bayes updates.
pub const SIGNAL_CUTOFF: f64 = 1e-12;
/// Grid used to canonicalize beliefs before hashing.
pub const CANONICAL_GRID: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Pomdp {
    states: Vec<String>,
    actions: Vec<String>,
    signals: Vec<String>,
    /// Flattened `[k][i][k'][s]`.
    transition: Vec<f64>,
    /// Flattened `[k][i]`.
    reward: Vec<f64>,
}

impl Pomdp {
    /// Builds and validates a POMDP from flattened tables.
    ///
    /// `transition` is indexed `[k][i][k'][s]` and `reward` is indexed `[k][i]`.
    pub fn from_tables(
        states: Vec<String>,
        actions: Vec<String>,
        signals: Vec<String>,
        transition: Vec<f64>,
        reward: Vec<f64>,
    ) -> Result<Self> {
        let (nk, ni, ns) = (states.len(), actions.len(), signals.len());
        if nk == 0 || ni == 0 || ns == 0 {
            return Err(Error::InvalidInput(
                "state, action and signal sets must be non-empty".into(),
            ));
        }
        if transition.len() != nk * ni * nk * ns {
            return Err(Error::InvalidInput(format!(
                "transition table has {} entries, expected {}",
                transition.len(),
                nk * ni * nk * ns
            )));
        }
        if reward.len() != nk * ni {
            return Err(Error::InvalidInput(format!(
                "reward table has {} entries, expected {}",
                reward.len(),
                nk * ni
            )));
        }
        let p = Pomdp {
            states,
            actions,
            signals,
            transition,
            reward,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds a POMDP from closures `q(k, i, k', s)` and `r(k, i)`.
    pub fn from_fn(
        states: &[&str],
        actions: &[&str],
        signals: &[&str],
        q: impl Fn(usize, usize, usize, usize) -> f64,
        r: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let (nk, ni, ns) = (states.len(), actions.len(), signals.len());
        let mut transition = Vec::with_capacity(nk * ni * nk * ns);
        let mut reward = Vec::with_capacity(nk * ni);
        for k in 0..nk {
            for i in 0..ni {
                reward.push(r(k, i));
                for k2 in 0..nk {
                    for s in 0..ns {
                        transition.push(q(k, i, k2, s));
                    }
                }
            }
        }
        Self::from_tables(
            states.iter().map(|s| s.to_string()).collect(),
            actions.iter().map(|s| s.to_string()).collect(),
            signals.iter().map(|s| s.to_string()).collect(),
            transition,
            reward,
        )
    }

    fn validate(&self) -> Result<()> {
        for k in 0..self.n_states() {
            for i in 0..self.n_actions() {
                let r = self.reward(k, i);
                if !(0.0..=1.0).contains(&r) || r.is_nan() {
                    return Err(Error::InvalidInput(format!(
                        "reward ({},{}) = {} is outside [0,1]",
                        self.states[k], self.actions[i], r
                    )));
                }
                let row = self.row(k, i);
                if let Some(bad) = row.iter().find(|v| **v < 0.0 || v.is_nan()) {
                    return Err(Error::InvalidInput(format!(
                        "transition row ({},{}) has negative entry {}",
                        self.states[k], self.actions[i], bad
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_TOLERANCE {
                    return Err(Error::RowSum {
                        row: format!("transition row ({},{})", self.states[k], self.actions[i]),
                        sum,
                        deviation: sum - 1.0,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn n_signals(&self) -> usize {
        self.signals.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn signals(&self) -> &[String] {
        &self.signals
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|a| a == name)
    }

    pub fn signal_index(&self, name: &str) -> Option<usize> {
        self.signals.iter().position(|a| a == name)
    }

    /// `q(k, i)(k', s)`.
    #[inline]
    pub fn q(&self, k: usize, i: usize, next: usize, s: usize) -> f64 {
        let (nk, ni, ns) = (self.n_states(), self.n_actions(), self.n_signals());
        self.transition[((k * ni + i) * nk + next) * ns + s]
    }

    /// The `K × S` table `q(k, i)`, indexed `[k'][s]`.
    #[inline]
    pub fn row(&self, k: usize, i: usize) -> &[f64] {
        let (nk, ni, ns) = (self.n_states(), self.n_actions(), self.n_signals());
        let start = (k * ni + i) * nk * ns;
        &self.transition[start..start + nk * ns]
    }

    #[inline]
    pub fn reward(&self, k: usize, i: usize) -> f64 {
        self.reward[k * self.n_actions() + i]
    }

    fn check_belief(&self, x: &Belief) -> Result<()> {
        if x.dim() != self.n_states() {
            return Err(Error::InvalidInput(format!(
                "belief has dimension {}, POMDP has {} states",
                x.dim(),
                self.n_states()
            )));
        }
        Ok(())
    }

    fn check_action(&self, i: usize) -> Result<()> {
        if i >= self.n_actions() {
            return Err(Error::InvalidInput(format!(
                "action index {} out of range ({} actions)",
                i,
                self.n_actions()
            )));
        }
        Ok(())
    }

    /// Bayes update: for each signal of positive probability, its probability
    /// `q(x, i)(s)` and the posterior `q̄(x, i, s)` over next states.
    pub fn belief_transition(&self, x: &Belief, i: usize) -> Result<Vec<SignalBranch>> {
        self.check_belief(x)?;
        self.check_action(i)?;
        Ok(self.belief_transition_unchecked(x.weights(), i))
    }

    pub(crate) fn belief_transition_unchecked(&self, x: &[f64], i: usize) -> Vec<SignalBranch> {
        let (nk, ns) = (self.n_states(), self.n_signals());
        // joint[s][k'] = Σ_k x(k) q(k,i)(k',s)
        let mut joint = vec![0.0; ns * nk];
        for (k, &xk) in x.iter().enumerate() {
            if xk == 0.0 {
                continue;
            }
            let row = self.row(k, i);
            for k2 in 0..nk {
                for s in 0..ns {
                    joint[s * nk + k2] += xk * row[k2 * ns + s];
                }
            }
        }
        let mut out = Vec::new();
        for s in 0..ns {
            let slice = &joint[s * nk..(s + 1) * nk];
            let prob: f64 = slice.iter().sum();
            if prob < SIGNAL_CUTOFF {
                continue;
            }
            let posterior = slice.iter().map(|v| v / prob).collect();
            out.push(SignalBranch {
                signal: s,
                probability: prob,
                posterior: Belief(posterior),
            });
        }
        out
    }

    /// Posterior after `(i, s)`, falling back to the Dirac mass at the first
    /// state when the signal has (numerically) zero probability.
    pub(crate) fn posterior_or_fallback(&self, x: &[f64], i: usize, s: usize) -> Vec<f64> {
        let (nk, ns) = (self.n_states(), self.n_signals());
        let mut post = vec![0.0; nk];
        for (k, &xk) in x.iter().enumerate() {
            if xk == 0.0 {
                continue;
            }
            let row = self.row(k, i);
            for (k2, slot) in post.iter_mut().enumerate() {
                *slot += xk * row[k2 * ns + s];
            }
        }
        let total: f64 = post.iter().sum();
        if total < SIGNAL_CUTOFF {
            let mut dirac = vec![0.0; nk];
            dirac[0] = 1.0;
            return dirac;
        }
        post.iter_mut().for_each(|v| *v /= total);
        post
    }

    /// `g(x, i) = Σ_k x(k) r(k, i)`.
    pub fn stage_payoff(&self, x: &Belief, i: usize) -> Result<f64> {
        self.check_belief(x)?;
        self.check_action(i)?;
        Ok(self.stage_payoff_unchecked(x.weights(), i))
    }

    #[inline]
    pub(crate) fn stage_payoff_unchecked(&self, x: &[f64], i: usize) -> f64 {
        x.iter()
            .enumerate()
            .map(|(k, xk)| xk * self.reward(k, i))
            .sum()
    }

    /// Distinct reward values in increasing order, merged on a 1e-12 grid.
    pub fn reward_levels(&self) -> Vec<f64> {
        let mut levels: Vec<f64> = self.reward.clone();
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        levels.dedup_by(|a, b| (*a - *b).abs() <= CANONICAL_GRID);
        levels
    }

    /// The auxiliary POMDP with state space `K × r(K × I)` whose second
    /// component records the previous stage's reward and is paid out one
    /// stage later.
    ///
    /// The first component follows the original dynamics: from `(k, u)` under
    /// action `i`, the lift moves to `(k', r(k, i))` and emits `s` with
    /// probability `q(k, i)(k', s)`.
    pub fn known_payoff_lift(&self) -> Pomdp {
        let levels = self.reward_levels();
        let level_of = |v: f64| {
            levels
                .iter()
                .position(|u| (u - v).abs() <= CANONICAL_GRID)
                .expect("reward value is one of the levels")
        };
        let (nk, ni, ns, nu) = (
            self.n_states(),
            self.n_actions(),
            self.n_signals(),
            levels.len(),
        );
        let n_lift = nk * nu;
        let mut states = Vec::with_capacity(n_lift);
        for k in 0..nk {
            for u in &levels {
                states.push(format!("{}|{}", self.states[k], u));
            }
        }
        let mut transition = vec![0.0; n_lift * ni * n_lift * ns];
        let mut reward = vec![0.0; n_lift * ni];
        for k in 0..nk {
            for (u_idx, &u) in levels.iter().enumerate() {
                let from = k * nu + u_idx;
                for i in 0..ni {
                    reward[from * ni + i] = u;
                    let recorded = level_of(self.reward(k, i));
                    for k2 in 0..nk {
                        let to = k2 * nu + recorded;
                        for s in 0..ns {
                            transition[((from * ni + i) * n_lift + to) * ns + s] =
                                self.q(k, i, k2, s);
                        }
                    }
                }
            }
        }
        Pomdp {
            states,
            actions: self.actions.clone(),
            signals: self.signals.clone(),
            transition,
            reward,
        }
    }

    /// Lifts a belief on `K` to the lifted state space, placing the recorded
    /// reward component on the lowest reward level.
    pub fn lift_belief(&self, x: &Belief) -> Result<Belief> {
        self.check_belief(x)?;
        let nu = self.reward_levels().len();
        let mut w = vec![0.0; self.n_states() * nu];
        for (k, xk) in x.weights().iter().enumerate() {
            w[k * nu] = *xk;
        }
        Ok(Belief(w))
    }

    /// The coarsest partition of states forced by the signal condition of
    /// known payoffs, as a class label per state.
    pub fn signal_partition(&self) -> Vec<usize> {
        let nk = self.n_states();
        let mut parent: Vec<usize> = (0..nk).collect();
        fn find(parent: &mut [usize], mut a: usize) -> usize {
            while parent[a] != a {
                parent[a] = parent[parent[a]];
                a = parent[a];
            }
            a
        }
        for s in 0..self.n_signals() {
            let mut first: Option<usize> = None;
            for k in 0..nk {
                for i in 0..self.n_actions() {
                    for k2 in 0..nk {
                        if self.q(k, i, k2, s) > 0.0 {
                            match first {
                                None => first = Some(k2),
                                Some(f) => {
                                    let (a, b) = (find(&mut parent, f), find(&mut parent, k2));
                                    parent[a] = b;
                                }
                            }
                        }
                    }
                }
            }
        }
        (0..nk).map(|k| find(&mut parent, k)).collect()
    }

    /// Whether the POMDP has known payoffs: some partition of the states makes
    /// rewards class-measurable and lets each signal determine the class of
    /// the state it lands in.
    pub fn has_known_payoffs(&self) -> bool {
        self.is_payoff_partition(&self.signal_partition(), false)
    }

    /// Checks a partition (class label per state): rewards must be constant on
    /// classes, and every signal (every action/signal pair when `per_action`)
    /// must lead into a single class.
    pub fn is_payoff_partition(&self, classes: &[usize], per_action: bool) -> bool {
        let (nk, ni, ns) = (self.n_states(), self.n_actions(), self.n_signals());
        for k1 in 0..nk {
            for k2 in 0..nk {
                if classes[k1] == classes[k2]
                    && (0..ni).any(|i| (self.reward(k1, i) - self.reward(k2, i)).abs() > CANONICAL_GRID)
                {
                    return false;
                }
            }
        }
        let groups: Vec<Vec<usize>> = if per_action {
            (0..ni).map(|i| vec![i]).collect()
        } else {
            vec![(0..ni).collect()]
        };
        for s in 0..ns {
            for group in &groups {
                let mut seen: Option<usize> = None;
                for k in 0..nk {
                    for &i in group {
                        for k2 in 0..nk {
                            if self.q(k, i, k2, s) > 0.0 {
                                match seen {
                                    None => seen = Some(classes[k2]),
                                    Some(c) if c != classes[k2] => return false,
                                    _ => {}
                                }
                            }
                        }
                    }
                }
            }
        }
        true
    }
}

/// One signal outcome of a Bayes update.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBranch {
    pub signal: usize,
    pub probability: f64,
    pub posterior: Belief,
}

/// A probability vector over states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Belief(Vec<f64>);

impl Belief {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("belief must be non-empty".into()));
        }
        if let Some(bad) = weights
            .iter()
            .find(|w| !(0.0..=1.0).contains(*w) || w.is_nan())
        {
            return Err(Error::InvalidInput(format!(
                "belief entry {bad} is outside [0,1]"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            return Err(Error::RowSum {
                row: "belief".into(),
                sum,
                deviation: sum - 1.0,
            });
        }
        Ok(Belief(weights))
    }

    pub fn dirac(dim: usize, k: usize) -> Self {
        let mut w = vec![0.0; dim];
        w[k] = 1.0;
        Belief(w)
    }

    pub fn uniform(dim: usize) -> Self {
        Belief(vec![1.0 / dim as f64; dim])
    }

    pub(crate) fn from_raw(weights: Vec<f64>) -> Self {
        Belief(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn l1_distance(&self, other: &Belief) -> f64 {
        l1(&self.0, &other.0)
    }

    /// Integer key on the 1e-12 grid; equal keys identify the same belief.
    pub fn canonical_key(&self) -> BeliefKey {
        canonical_key(&self.0)
    }

    /// The belief snapped to the canonical grid.
    pub fn canonical(&self) -> Belief {
        Belief(self.0.iter().map(|v| snap(*v)).collect())
    }
}

impl TryFrom<Vec<f64>> for Belief {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Belief::new(value)
    }
}

impl From<Belief> for Vec<f64> {
    fn from(b: Belief) -> Self {
        b.0
    }
}

pub type BeliefKey = Vec<i64>;

pub(crate) fn canonical_key(x: &[f64]) -> BeliefKey {
    x.iter()
        .map(|v| (v / CANONICAL_GRID).round() as i64)
        .collect()
}

fn snap(v: f64) -> f64 {
    (v / CANONICAL_GRID).round() * CANONICAL_GRID
}

pub(crate) fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// An observed history `(i_1, s_1, …, i_{m-1}, s_{m-1})`: the information
/// available at stage `m`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObservedHistory(pub Vec<(usize, usize)>);

impl ObservedHistory {
    pub fn new(pairs: Vec<(usize, usize)>) -> Self {
        ObservedHistory(pairs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn validate(&self, p: &Pomdp) -> Result<()> {
        for (idx, (i, s)) in self.0.iter().enumerate() {
            if *i >= p.n_actions() || *s >= p.n_signals() {
                return Err(Error::InvalidInput(format!(
                    "observed pair {idx} = ({i},{s}) out of range"
                )));
            }
        }
        Ok(())
    }

    /// Belief at the end of this history, starting from `x1`; `None` when the
    /// history has zero probability for every strategy that plays its actions.
    pub fn end_belief(&self, p: &Pomdp, x1: &Belief) -> Option<Belief> {
        let mut x = x1.weights().to_vec();
        for &(i, s) in &self.0 {
            let branch = p
                .belief_transition_unchecked(&x, i)
                .into_iter()
                .find(|b| b.signal == s)?;
            x = branch.posterior.0;
        }
        Some(Belief(x))
    }
}

/// A play truncated at `len()` stages, together with the decision-maker's
/// beliefs and both payoff streams.
///
/// `signals` has one entry fewer than `states`: the signal of the last stage
/// only informs the stage after the truncation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Play {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub signals: Vec<usize>,
    /// `x_m`, flattened with stride `|K|`.
    pub beliefs: Vec<f64>,
    /// `r(k_m, i_m)`.
    pub rewards: Vec<f64>,
    /// `g(x_m, i_m)`.
    pub belief_payoffs: Vec<f64>,
    pub n_states: usize,
}

impl Play {
    pub fn with_dim(n_states: usize) -> Self {
        Play {
            n_states,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `x_m` for 1-based stage `m`.
    pub fn belief(&self, m: usize) -> &[f64] {
        &self.beliefs[(m - 1) * self.n_states..m * self.n_states]
    }

    /// The observed history at 1-based stage `m` (the first `m-1` pairs).
    pub fn observed_prefix(&self, m: usize) -> ObservedHistory {
        ObservedHistory(
            self.actions[..m - 1]
                .iter()
                .copied()
                .zip(self.signals[..m - 1].iter().copied())
                .collect(),
        )
    }

    pub(crate) fn push_stage(&mut self, k: usize, belief: &[f64]) {
        self.states.push(k);
        self.beliefs.extend_from_slice(belief);
    }

    pub(crate) fn pop_stage(&mut self) {
        self.states.pop();
        let n = self.beliefs.len() - self.n_states;
        self.beliefs.truncate(n);
    }

    pub(crate) fn push_action(&mut self, i: usize, reward: f64, belief_payoff: f64) {
        self.actions.push(i);
        self.rewards.push(reward);
        self.belief_payoffs.push(belief_payoff);
    }

    pub(crate) fn pop_action(&mut self) {
        self.actions.pop();
        self.rewards.pop();
        self.belief_payoffs.pop();
    }
}

/// Groups masses by canonical belief, preserving first-seen order.
#[derive(Debug, Default, Clone)]
pub(crate) struct BeliefAccumulator {
    index: HashMap<BeliefKey, usize>,
    pub(crate) atoms: Vec<(Vec<f64>, f64)>,
}

impl BeliefAccumulator {
    pub(crate) fn add(&mut self, x: &[f64], mass: f64) {
        let key = canonical_key(x);
        match self.index.get(&key) {
            Some(&idx) => self.atoms[idx].1 += mass,
            None => {
                self.index.insert(key, self.atoms.len());
                self.atoms.push((x.to_vec(), mass));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    #[test]
    fn frozen_single_signal_keeps_belief() {
        let p = instances::matching();
        let x = Belief::uniform(2);
        for i in 0..2 {
            let out = p.belief_transition(&x, i).unwrap();
            assert_eq!(out.len(), 1);
            assert_eq!(out[0].signal, 0);
            assert!((out[0].probability - 1.0).abs() < 1e-12);
            assert_eq!(out[0].posterior.weights(), &[0.5, 0.5]);
        }
    }

    #[test]
    fn revealing_signals_give_dirac_posteriors() {
        let p = instances::matching_revealed();
        let out = p.belief_transition(&Belief::uniform(2), 0).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].posterior.weights(), &[1.0, 0.0]);
        assert_eq!(out[1].posterior.weights(), &[0.0, 1.0]);
    }

    #[test]
    fn noisy_emission_posterior() {
        // frozen states, s1 emitted w.p. 0.6 from α and 0.2 from β
        let p = Pomdp::from_fn(
            &["a", "b"],
            &["x"],
            &["s0", "s1"],
            |k, _, k2, s| {
                if k != k2 {
                    return 0.0;
                }
                let p1 = if k == 0 { 0.6 } else { 0.2 };
                if s == 1 {
                    p1
                } else {
                    1.0 - p1
                }
            },
            |_, _| 0.0,
        )
        .unwrap();
        let out = p.belief_transition(&Belief::uniform(2), 0).unwrap();
        let s1 = out.iter().find(|b| b.signal == 1).unwrap();
        assert!((s1.probability - 0.4).abs() < 1e-12);
        assert!((s1.posterior.weights()[0] - 0.75).abs() < 1e-12);
        assert!((s1.posterior.weights()[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = instances::matching();
        let x = Belief::uniform(3);
        assert!(matches!(
            p.belief_transition(&x, 0),
            Err(Error::InvalidInput(_))
        ));
        assert!(p.stage_payoff(&x, 0).is_err());
    }

    #[test]
    fn stage_payoff_examples() {
        let p = instances::matching();
        assert_eq!(p.stage_payoff(&Belief::dirac(2, 1), 1).unwrap(), 1.0);
        assert_eq!(p.stage_payoff(&Belief::uniform(2), 0).unwrap(), 0.5);
        let x = Belief::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(p.stage_payoff(&x, 0).unwrap(), 0.25);
    }

    #[test]
    fn row_sum_error_names_row() {
        let err = Pomdp::from_fn(
            &["a"],
            &["x"],
            &["s"],
            |_, _, _, _| 1.01,
            |_, _| 0.0,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(a,x)"), "{msg}");
        assert!(msg.contains("1.000e-2"), "{msg}");
    }

    #[test]
    fn reward_out_of_range_rejected() {
        assert!(Pomdp::from_fn(&["a"], &["x"], &["s"], |_, _, _, _| 1.0, |_, _| 1.5).is_err());
    }

    #[test]
    fn lift_of_constant_reward_is_constant() {
        let p = Pomdp::from_fn(
            &["a", "b"],
            &["x", "y"],
            &["s"],
            |_, i, k2, _| if i == 0 { 0.5 } else if k2 == 0 { 1.0 } else { 0.0 },
            |_, _| 0.3,
        )
        .unwrap();
        let lift = p.known_payoff_lift();
        assert_eq!(lift.n_states(), 2);
        for k in 0..lift.n_states() {
            for i in 0..lift.n_actions() {
                assert_eq!(lift.reward(k, i), 0.3);
            }
        }
        assert_eq!(lift.signals(), p.signals());
    }

    #[test]
    fn lift_pins_second_component_to_previous_reward() {
        let p = instances::matching();
        let lift = p.known_payoff_lift();
        assert_eq!(lift.n_states(), 4);
        let levels = p.reward_levels();
        let nu = levels.len();
        for k in 0..2 {
            for u in 0..nu {
                let from = k * nu + u;
                for i in 0..2 {
                    for to in 0..4 {
                        for s in 0..lift.n_signals() {
                            if lift.q(from, i, to, s) > 0.0 {
                                assert_eq!(levels[to % nu], p.reward(k, i));
                                assert_eq!(to / nu, k, "matching POMDP keeps the state");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn known_payoffs_detection() {
        assert!(!instances::blind().has_known_payoffs());
        assert!(instances::matching_revealed().has_known_payoffs());
        // in the lift of a POMDP with known payoffs, the recorded reward is
        // determined by the action and the signal
        let p = instances::matching_revealed();
        let nu = p.reward_levels().len();
        let lift = p.known_payoff_lift();
        let by_level: Vec<usize> = (0..lift.n_states()).map(|k| k % nu).collect();
        assert!(lift.is_payoff_partition(&by_level, true));
        let blind = instances::blind().known_payoff_lift();
        let by_level: Vec<usize> = (0..blind.n_states()).map(|k| k % 2).collect();
        assert!(!blind.is_payoff_partition(&by_level, true));
    }

    #[test]
    fn canonical_key_merges_float_dust() {
        let a = Belief::from_raw(vec![0.1 + 0.2, 0.7]);
        let b = Belief::from_raw(vec![0.3, 0.7]);
        assert_eq!(a.canonical_key(), b.canonical_key());
    }
}
