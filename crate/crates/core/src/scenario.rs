//! JSON scenarios: a POMDP, an initial belief and optional named strategies
//! and evaluations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::evaluations::{Evaluation, EvaluationSpec};
use crate::instances;
use crate::model::{Belief, Pomdp};
use crate::strategies::{builtin_strategy, strategy_from_json, Strategy};

#[derive(Debug, Deserialize, Serialize)]
struct RawScenario {
    states: Vec<String>,
    actions: Vec<String>,
    signals: Vec<String>,
    transition: BTreeMap<String, BTreeMap<String, f64>>,
    reward: BTreeMap<String, f64>,
    #[serde(default)]
    initial_belief: Option<Vec<f64>>,
    #[serde(default)]
    strategies: BTreeMap<String, Value>,
    #[serde(default)]
    evaluations: BTreeMap<String, EvaluationSpec>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub pomdp: Pomdp,
    pub initial_belief: Belief,
    pub strategies: BTreeMap<String, Value>,
    pub evaluations: BTreeMap<String, EvaluationSpec>,
}

fn pair<'a>(key: &'a str, what: &str) -> Result<(&'a str, &'a str)> {
    key.split_once(',')
        .map(|(a, b)| (a.trim(), b.trim()))
        .ok_or_else(|| Error::InvalidInput(format!("{what} key {key:?} is not of the form \"a,b\"")))
}

fn index(names: &[String], name: &str, what: &str) -> Result<usize> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::InvalidInput(format!("unknown {what} {name:?}")))
}

impl Scenario {
    /// Parses and validates a scenario. Missing transition entries are zero;
    /// the initial belief defaults to uniform.
    pub fn from_json_str(name: &str, text: &str) -> Result<Self> {
        let raw: RawScenario =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("scenario JSON: {e}")))?;
        let (nk, ni, ns) = (raw.states.len(), raw.actions.len(), raw.signals.len());
        let mut transition = vec![0.0; nk * ni * nk * ns];
        for (row_key, row) in &raw.transition {
            let (k, i) = pair(row_key, "transition")?;
            let (k, i) = (index(&raw.states, k, "state")?, index(&raw.actions, i, "action")?);
            for (entry_key, prob) in row {
                let (k2, s) = pair(entry_key, "transition entry")?;
                let (k2, s) = (index(&raw.states, k2, "state")?, index(&raw.signals, s, "signal")?);
                transition[((k * ni + i) * nk + k2) * ns + s] = *prob;
            }
        }
        let mut reward = vec![f64::NAN; nk * ni];
        for (key, value) in &raw.reward {
            let (k, i) = pair(key, "reward")?;
            reward[index(&raw.states, k, "state")? * ni + index(&raw.actions, i, "action")?] = *value;
        }
        if let Some(missing) = reward.iter().position(|r| r.is_nan()) {
            return Err(Error::InvalidInput(format!(
                "reward ({},{}) is missing",
                raw.states[missing / ni],
                raw.actions[missing % ni]
            )));
        }
        let pomdp = Pomdp::from_tables(raw.states, raw.actions, raw.signals, transition, reward)?;
        let initial_belief = match raw.initial_belief {
            Some(w) => {
                if w.len() != nk {
                    return Err(Error::InvalidInput(format!(
                        "initial belief has {} entries for {nk} states",
                        w.len()
                    )));
                }
                Belief::new(w)?
            }
            None => Belief::uniform(nk),
        };
        let scenario = Scenario {
            name: name.to_string(),
            pomdp,
            initial_belief,
            strategies: raw.strategies,
            evaluations: raw.evaluations,
        };
        for key in scenario.strategies.keys() {
            scenario.strategy(key)?;
        }
        for spec in scenario.evaluations.values() {
            Evaluation::new(spec.clone())?;
        }
        Ok(scenario)
    }

    /// A built-in instance with the uniform initial belief.
    pub fn builtin(name: &str) -> Option<Self> {
        let pomdp = instances::by_name(name)?;
        let initial_belief = Belief::uniform(pomdp.n_states());
        Some(Scenario {
            name: name.to_string(),
            pomdp,
            initial_belief,
            strategies: BTreeMap::new(),
            evaluations: BTreeMap::new(),
        })
    }

    /// Resolves a strategy: a name declared in the scenario, then a builtin.
    pub fn strategy(&self, name: &str) -> Result<Strategy> {
        if let Some(v) = self.strategies.get(name) {
            return strategy_from_json(&self.pomdp, v);
        }
        builtin_strategy(&self.pomdp, name).ok_or_else(|| Error::InvalidInput(format!("unknown strategy {name:?}")))
    }

    pub fn evaluation(&self, name: &str) -> Option<&EvaluationSpec> {
        self.evaluations.get(name)
    }

    pub fn to_json(&self) -> Value {
        let p = &self.pomdp;
        let mut transition = BTreeMap::new();
        let mut reward = BTreeMap::new();
        for k in 0..p.n_states() {
            for i in 0..p.n_actions() {
                let key = format!("{},{}", p.states()[k], p.actions()[i]);
                let mut row = BTreeMap::new();
                for k2 in 0..p.n_states() {
                    for s in 0..p.n_signals() {
                        let q = p.q(k, i, k2, s);
                        if q > 0.0 {
                            row.insert(format!("{},{}", p.states()[k2], p.signals()[s]), q);
                        }
                    }
                }
                transition.insert(key.clone(), row);
                reward.insert(key, p.reward(k, i));
            }
        }
        serde_json::to_value(RawScenario {
            states: p.states().to_vec(),
            actions: p.actions().to_vec(),
            signals: p.signals().to_vec(),
            transition,
            reward,
            initial_belief: Some(self.initial_belief.weights().to_vec()),
            strategies: self.strategies.clone(),
            evaluations: self.evaluations.clone(),
        })
        .expect("scenario serializes")
    }
}
