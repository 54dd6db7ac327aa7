//! Behavior strategies, finite-memory transducers and stationary belief
//! strategies.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{canonical_key, l1, Belief, BeliefKey, ObservedHistory, Pomdp};

/// Off-support tolerance (L1) for stationary strategy lookups.
pub const STATIONARY_TOLERANCE: f64 = 1e-9;
/// Default cap on the raw number of transducers enumerated.
pub const DEFAULT_TRANSDUCER_CAP: u128 = 10_000_000;

type CustomRule = dyn Fn(&[usize], &[usize], &[f64]) -> Vec<f64> + Send + Sync;

/// A strategy defined directly on observed histories.
#[derive(Clone)]
pub enum BehaviorStrategy {
    /// Uniform over actions at every history.
    Uniform,
    /// The same mixed action at every history.
    Mixed(Vec<f64>),
    /// Plays `schedule[m-1]` at stage `m`, then `then` forever.
    OpenLoop { schedule: Vec<usize>, then: usize },
    /// Plays `stay` for 2, 2^4, 2^9, …, 2^(n²) stages, with a single `switch`
    /// after each block.
    Doubling { stay: usize, switch: usize },
    /// Mixed action depending only on the last observed pair; row 0 is used at
    /// the first stage, row `1 + i·|S| + s` after `(i, s)`.
    Reactive { n_signals: usize, table: Vec<Vec<f64>> },
    /// Arbitrary rule on `(actions, signals, belief)`.
    Custom(Arc<CustomRule>),
}

impl fmt::Debug for BehaviorStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BehaviorStrategy::Uniform => write!(f, "Uniform"),
            BehaviorStrategy::Mixed(d) => f.debug_tuple("Mixed").field(d).finish(),
            BehaviorStrategy::OpenLoop { schedule, then } => f
                .debug_struct("OpenLoop")
                .field("schedule", schedule)
                .field("then", then)
                .finish(),
            BehaviorStrategy::Doubling { stay, switch } => f
                .debug_struct("Doubling")
                .field("stay", stay)
                .field("switch", switch)
                .finish(),
            BehaviorStrategy::Reactive { table, .. } => {
                f.debug_struct("Reactive").field("table", table).finish()
            }
            BehaviorStrategy::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl BehaviorStrategy {
    /// A custom rule from `(actions so far, signals so far, current belief)` to
    /// a distribution over actions.
    pub fn custom(
        rule: impl Fn(&[usize], &[usize], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        BehaviorStrategy::Custom(Arc::new(rule))
    }

    /// A reactive strategy with random mixed actions.
    pub fn random_reactive(n_actions: usize, n_signals: usize, rng: &mut impl Rng) -> Self {
        let rows = 1 + n_actions * n_signals;
        let table = (0..rows)
            .map(|_| {
                let raw: Vec<f64> = (0..n_actions).map(|_| rng.gen_range(0.05..1.0)).collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / total).collect()
            })
            .collect();
        BehaviorStrategy::Reactive { n_signals, table }
    }

    fn fill(&self, actions: &[usize], signals: &[usize], belief: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let n = out.len();
        match self {
            BehaviorStrategy::Uniform => out.iter_mut().for_each(|v| *v = 1.0 / n as f64),
            BehaviorStrategy::Mixed(d) => out.copy_from_slice(d),
            BehaviorStrategy::OpenLoop { schedule, then } => {
                let i = schedule.get(actions.len()).copied().unwrap_or(*then);
                out[i] = 1.0;
            }
            BehaviorStrategy::Doubling { stay, switch } => {
                let i = if doubling_switches_at(actions.len() as u64 + 1) {
                    *switch
                } else {
                    *stay
                };
                out[i] = 1.0;
            }
            BehaviorStrategy::Reactive { n_signals, table } => {
                let row = match (actions.last(), signals.last()) {
                    (Some(i), Some(s)) => 1 + i * n_signals + s,
                    _ => 0,
                };
                out.copy_from_slice(&table[row]);
            }
            BehaviorStrategy::Custom(rule) => {
                let d = rule(actions, signals, belief);
                out.copy_from_slice(&d);
            }
        }
    }

    fn is_pure(&self) -> bool {
        matches!(
            self,
            BehaviorStrategy::OpenLoop { .. } | BehaviorStrategy::Doubling { .. }
        )
    }
}

/// Whether the doubling strategy plays its switching action at 1-based stage `m`.
pub fn doubling_switches_at(m: u64) -> bool {
    let mut pos: u64 = 0;
    let mut n: u32 = 1;
    loop {
        let block = n.checked_mul(n).and_then(|e| 1u64.checked_shl(e));
        let Some(block) = block else { return false };
        pos = match pos.checked_add(block).and_then(|v| v.checked_add(1)) {
            Some(v) => v,
            None => return false,
        };
        if pos == m {
            return true;
        }
        if pos > m {
            return false;
        }
        n += 1;
    }
}

/// The doubling strategy of the blind MDP, with `T` = action 0 and `B` = action 1.
pub fn doubling_strategy() -> Strategy {
    Strategy::Behavior(BehaviorStrategy::Doubling { stay: 0, switch: 1 })
}

/// A pure strategy with finite memory `(σ_u, σ_a, M, m_0)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transducer {
    n_memory: usize,
    n_actions: usize,
    n_signals: usize,
    initial: usize,
    act: Vec<usize>,
    /// Flattened `[m][i][s]`.
    update: Vec<usize>,
}

impl Transducer {
    pub fn new(
        n_actions: usize,
        n_signals: usize,
        initial: usize,
        act: Vec<usize>,
        update: Vec<usize>,
    ) -> Result<Self> {
        let n_memory = act.len();
        if n_memory == 0 {
            return Err(Error::InvalidInput("transducer needs a memory state".into()));
        }
        if initial >= n_memory {
            return Err(Error::InvalidInput("initial memory state out of range".into()));
        }
        if act.iter().any(|i| *i >= n_actions) {
            return Err(Error::InvalidInput("transducer action out of range".into()));
        }
        if update.len() != n_memory * n_actions * n_signals {
            return Err(Error::InvalidInput(format!(
                "update table has {} entries, expected {}",
                update.len(),
                n_memory * n_actions * n_signals
            )));
        }
        if update.iter().any(|m| *m >= n_memory) {
            return Err(Error::InvalidInput("update target out of range".into()));
        }
        Ok(Transducer {
            n_memory,
            n_actions,
            n_signals,
            initial,
            act,
            update,
        })
    }

    /// The one-state transducer that always plays `action`.
    pub fn constant(n_actions: usize, n_signals: usize, action: usize) -> Self {
        Transducer::new(n_actions, n_signals, 0, vec![action], vec![0; n_actions * n_signals])
            .expect("constant transducer is well-formed")
    }

    pub fn n_memory(&self) -> usize {
        self.n_memory
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_signals(&self) -> usize {
        self.n_signals
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn act(&self, m: usize) -> usize {
        self.act[m]
    }

    pub fn update(&self, m: usize, i: usize, s: usize) -> usize {
        self.update[(m * self.n_actions + i) * self.n_signals + s]
    }

    /// Memory state reached after folding the update over `h`.
    pub fn fold(&self, h: &ObservedHistory) -> usize {
        h.pairs()
            .iter()
            .fold(self.initial, |m, &(i, s)| self.update(m, i, s))
    }

    /// Breadth-first relabeling of the memory states reachable from `m_0`,
    /// exploring `(i, s)` in lexicographic order. Isomorphic transducers have
    /// equal canonical forms.
    pub fn canonical(&self) -> Transducer {
        let mut label = vec![usize::MAX; self.n_memory];
        let mut order = Vec::with_capacity(self.n_memory);
        let mut queue = VecDeque::new();
        label[self.initial] = 0;
        order.push(self.initial);
        queue.push_back(self.initial);
        while let Some(m) = queue.pop_front() {
            for i in 0..self.n_actions {
                for s in 0..self.n_signals {
                    let next = self.update(m, i, s);
                    if label[next] == usize::MAX {
                        label[next] = order.len();
                        order.push(next);
                        queue.push_back(next);
                    }
                }
            }
        }
        let act = order.iter().map(|&m| self.act[m]).collect();
        let mut update = Vec::with_capacity(order.len() * self.n_actions * self.n_signals);
        for &m in &order {
            for i in 0..self.n_actions {
                for s in 0..self.n_signals {
                    update.push(label[self.update(m, i, s)]);
                }
            }
        }
        Transducer {
            n_memory: order.len(),
            n_actions: self.n_actions,
            n_signals: self.n_signals,
            initial: 0,
            act,
            update,
        }
    }

    /// JSON table form using the POMDP's action and signal names.
    pub fn to_json(&self, p: &Pomdp) -> Value {
        let mut update = serde_json::Map::new();
        for m in 0..self.n_memory {
            for i in 0..self.n_actions {
                for s in 0..self.n_signals {
                    update.insert(
                        format!("m{},{},{}", m, p.actions()[i], p.signals()[s]),
                        Value::String(format!("m{}", self.update(m, i, s))),
                    );
                }
            }
        }
        let act: serde_json::Map<String, Value> = (0..self.n_memory)
            .map(|m| (format!("m{m}"), Value::String(p.actions()[self.act[m]].clone())))
            .collect();
        serde_json::json!({
            "kind": "transducer",
            "memory": (0..self.n_memory).map(|m| format!("m{m}")).collect::<Vec<_>>(),
            "initial": format!("m{}", self.initial),
            "act": act,
            "update": update,
        })
    }

    /// Parses the JSON table form; missing update entries keep the memory state.
    pub fn from_json(p: &Pomdp, value: &Value) -> Result<Self> {
        let table: TransducerTable = serde_json::from_value(value.clone())
            .map_err(|e| Error::InvalidInput(format!("transducer table: {e}")))?;
        let mem_index = |name: &str| {
            table
                .memory
                .iter()
                .position(|m| m == name)
                .ok_or_else(|| Error::InvalidInput(format!("unknown memory state {name}")))
        };
        let n = table.memory.len();
        let initial = mem_index(&table.initial)?;
        let mut act = vec![0; n];
        for (m, name) in table.memory.iter().enumerate() {
            let a = table
                .act
                .get(name)
                .ok_or_else(|| Error::InvalidInput(format!("no action for memory state {name}")))?;
            act[m] = p
                .action_index(a)
                .ok_or_else(|| Error::InvalidInput(format!("unknown action {a}")))?;
        }
        let (ni, ns) = (p.n_actions(), p.n_signals());
        let mut update: Vec<usize> = (0..n * ni * ns).map(|idx| idx / (ni * ns)).collect();
        for (key, target) in &table.update {
            let parts: Vec<&str> = key.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::InvalidInput(format!("bad update key {key}")));
            }
            let m = mem_index(parts[0])?;
            let i = p
                .action_index(parts[1])
                .ok_or_else(|| Error::InvalidInput(format!("unknown action {}", parts[1])))?;
            let s = p
                .signal_index(parts[2])
                .ok_or_else(|| Error::InvalidInput(format!("unknown signal {}", parts[2])))?;
            update[(m * ni + i) * ns + s] = mem_index(target)?;
        }
        Transducer::new(ni, ns, initial, act, update)
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct TransducerTable {
    memory: Vec<String>,
    initial: String,
    act: HashMap<String, String>,
    #[serde(default)]
    update: HashMap<String, String>,
}

/// Number of raw transducers with exactly `n` memory states and `m_0 = 0`.
fn raw_count(n: usize, n_actions: usize, n_signals: usize) -> Option<u128> {
    let acts = (n_actions as u128).checked_pow(n as u32)?;
    let updates = (n as u128).checked_pow((n * n_actions * n_signals) as u32)?;
    acts.checked_mul(updates)
}

/// All transducers with at most `max_memory` memory states, one per
/// isomorphism class, in deterministic order (by size, then by tables).
pub fn enumerate_transducers(p: &Pomdp, max_memory: usize, cap: u128) -> Result<Vec<Transducer>> {
    if max_memory == 0 {
        return Err(Error::InvalidInput("max_memory must be at least 1".into()));
    }
    let (ni, ns) = (p.n_actions(), p.n_signals());
    let mut total: u128 = 0;
    for n in 1..=max_memory {
        total = raw_count(n, ni, ns)
            .and_then(|c| total.checked_add(c))
            .unwrap_or(u128::MAX);
    }
    if total > cap {
        return Err(Error::EnumerationCap { count: total, cap });
    }
    let mut out = Vec::new();
    for n in 1..=max_memory {
        let slots = n * ni * ns;
        let mut act = vec![0usize; n];
        loop {
            let mut update = vec![0usize; slots];
            loop {
                let t = Transducer {
                    n_memory: n,
                    n_actions: ni,
                    n_signals: ns,
                    initial: 0,
                    act: act.clone(),
                    update: update.clone(),
                };
                if t.canonical() == t {
                    out.push(t);
                }
                if !odometer(&mut update, n) {
                    break;
                }
            }
            if !odometer(&mut act, ni) {
                break;
            }
        }
    }
    Ok(out)
}

/// Advances a little-endian base-`radix` counter; false on wrap-around.
fn odometer(digits: &mut [usize], radix: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

/// A strategy that plays according to the current belief only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryStrategy {
    support: Vec<Belief>,
    actions: Vec<Vec<f64>>,
    #[serde(skip)]
    index: HashMap<BeliefKey, usize>,
}

impl StationaryStrategy {
    pub fn new(support: Vec<Belief>, actions: Vec<Vec<f64>>) -> Result<Self> {
        if support.len() != actions.len() {
            return Err(Error::InvalidInput(
                "stationary strategy needs one action distribution per support point".into(),
            ));
        }
        for d in &actions {
            let sum: f64 = d.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || d.iter().any(|v| *v < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "action distribution {d:?} is not a probability vector"
                )));
            }
        }
        let index = support
            .iter()
            .enumerate()
            .map(|(idx, b)| (b.canonical_key(), idx))
            .collect();
        Ok(StationaryStrategy {
            support,
            actions,
            index,
        })
    }

    /// The same mixed action at every belief of `support`.
    pub fn constant(support: Vec<Belief>, dist: Vec<f64>) -> Result<Self> {
        let actions = vec![dist; support.len()];
        Self::new(support, actions)
    }

    pub fn support(&self) -> &[Belief] {
        &self.support
    }

    pub fn action_table(&self) -> &[Vec<f64>] {
        &self.actions
    }

    /// Action distribution at `x`: exact support hit, else the nearest
    /// support point within the L1 tolerance.
    pub fn act(&self, x: &[f64]) -> Result<&[f64]> {
        if let Some(&idx) = self.index.get(&canonical_key(x)) {
            return Ok(&self.actions[idx]);
        }
        let (idx, distance) = self
            .support
            .iter()
            .enumerate()
            .map(|(idx, b)| (idx, l1(b.weights(), x)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap_or((usize::MAX, f64::INFINITY));
        if distance <= STATIONARY_TOLERANCE {
            Ok(&self.actions[idx])
        } else {
            Err(Error::OffSupport {
                belief: x.to_vec(),
                distance,
            })
        }
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .support
            .iter()
            .enumerate()
            .map(|(idx, b)| (b.canonical_key(), idx))
            .collect();
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let mut s: StationaryStrategy = serde_json::from_value(value.clone())
            .map_err(|e| Error::InvalidInput(format!("stationary strategy: {e}")))?;
        s.rebuild_index();
        Self::new(s.support, s.actions)
    }
}

/// Any of the supported strategy kinds.
#[derive(Debug, Clone)]
pub enum Strategy {
    Behavior(BehaviorStrategy),
    Transducer(Transducer),
    Stationary(StationaryStrategy),
}

impl Strategy {
    pub fn uniform() -> Self {
        Strategy::Behavior(BehaviorStrategy::Uniform)
    }

    pub fn always(n_actions: usize, n_signals: usize, action: usize) -> Self {
        Strategy::Transducer(Transducer::constant(n_actions, n_signals, action))
    }

    /// Plays `first` for `stages` stages and `then` afterwards.
    pub fn switch_after(first: usize, stages: usize, then: usize) -> Self {
        Strategy::Behavior(BehaviorStrategy::OpenLoop {
            schedule: vec![first; stages],
            then,
        })
    }

    pub fn is_pure(&self) -> bool {
        match self {
            Strategy::Transducer(_) => true,
            Strategy::Behavior(b) => b.is_pure(),
            Strategy::Stationary(s) => s
                .actions
                .iter()
                .all(|d| d.iter().any(|v| (*v - 1.0).abs() < 1e-15)),
        }
    }

    pub fn as_transducer(&self) -> Option<&Transducer> {
        match self {
            Strategy::Transducer(t) => Some(t),
            _ => None,
        }
    }

    pub(crate) fn initial_memory(&self) -> usize {
        match self {
            Strategy::Transducer(t) => t.initial,
            _ => 0,
        }
    }

    #[inline]
    pub(crate) fn advance(&self, memory: usize, i: usize, s: usize) -> usize {
        match self {
            Strategy::Transducer(t) => t.update(memory, i, s),
            _ => memory,
        }
    }

    /// Writes the action distribution at the current node into `out`.
    pub(crate) fn fill(
        &self,
        memory: usize,
        actions: &[usize],
        signals: &[usize],
        belief: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        match self {
            Strategy::Transducer(t) => {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[t.act(memory)] = 1.0;
            }
            Strategy::Behavior(b) => b.fill(actions, signals, belief, out),
            Strategy::Stationary(s) => out.copy_from_slice(s.act(belief)?),
        }
        Ok(())
    }
}

/// Action distribution of `strat` after the observed history `h`, starting
/// from belief `x1` (needed by belief-based strategies).
pub fn strategy_action(
    strat: &Strategy,
    p: &Pomdp,
    x1: &Belief,
    h: &ObservedHistory,
) -> Result<Vec<f64>> {
    h.validate(p)?;
    let actions: Vec<usize> = h.pairs().iter().map(|(i, _)| *i).collect();
    let signals: Vec<usize> = h.pairs().iter().map(|(_, s)| *s).collect();
    let belief = h
        .end_belief(p, x1)
        .unwrap_or_else(|| Belief::dirac(p.n_states(), 0));
    let memory = match strat {
        Strategy::Transducer(t) => t.fold(h),
        _ => 0,
    };
    let mut out = vec![0.0; p.n_actions()];
    strat.fill(memory, &actions, &signals, belief.weights(), &mut out)?;
    Ok(out)
}

/// Resolves a named builtin: `always:<action>`, `doubling`, `uniform`.
pub fn builtin_strategy(p: &Pomdp, name: &str) -> Option<Strategy> {
    if let Some(action) = name.strip_prefix("always:") {
        let i = p.action_index(action)?;
        return Some(Strategy::always(p.n_actions(), p.n_signals(), i));
    }
    match name {
        "doubling" if p.n_actions() >= 2 => Some(doubling_strategy()),
        "uniform" => Some(Strategy::uniform()),
        _ => None,
    }
}

/// Parses a strategy from its JSON form (`"kind": "transducer"`,
/// `"stationary"`, `"open_loop"` or `"mixed"`).
pub fn strategy_from_json(p: &Pomdp, value: &Value) -> Result<Strategy> {
    let kind = value.get("kind").and_then(Value::as_str).unwrap_or("transducer");
    match kind {
        "transducer" => Ok(Strategy::Transducer(Transducer::from_json(p, value)?)),
        "stationary" => Ok(Strategy::Stationary(StationaryStrategy::from_json(value)?)),
        "mixed" => {
            let d: Vec<f64> = serde_json::from_value(value["distribution"].clone())
                .map_err(|e| Error::InvalidInput(format!("mixed strategy: {e}")))?;
            if d.len() != p.n_actions() {
                return Err(Error::InvalidInput("mixed strategy has wrong dimension".into()));
            }
            Ok(Strategy::Behavior(BehaviorStrategy::Mixed(d)))
        }
        "open_loop" => {
            let names: Vec<String> = serde_json::from_value(value["schedule"].clone())
                .map_err(|e| Error::InvalidInput(format!("open-loop schedule: {e}")))?;
            let then: String = serde_json::from_value(value["then"].clone())
                .map_err(|e| Error::InvalidInput(format!("open-loop tail: {e}")))?;
            let idx = |a: &str| {
                p.action_index(a)
                    .ok_or_else(|| Error::InvalidInput(format!("unknown action {a}")))
            };
            let schedule = names.iter().map(|a| idx(a)).collect::<Result<Vec<_>>>()?;
            Ok(Strategy::Behavior(BehaviorStrategy::OpenLoop {
                schedule,
                then: idx(&then)?,
            }))
        }
        other => Err(Error::InvalidInput(format!("unknown strategy kind {other}"))),
    }
}
