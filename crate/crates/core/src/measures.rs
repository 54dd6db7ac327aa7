//! Finitely supported measures on beliefs: occupation measures, images under
//! stationary strategies, transport distance and the history disintegration.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluations::Evaluation;
use crate::model::{l1, Belief, BeliefAccumulator, ObservedHistory, Pomdp, ROW_TOLERANCE};
use crate::strategies::{strategy_action, StationaryStrategy, Strategy};
use crate::tree::walk_plays;

/// Atoms lighter than this are dropped.
pub const ATOM_CUTOFF: f64 = 1e-12;
const FLOW_EPS: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub belief: Belief,
    pub mass: f64,
}

/// A probability measure on beliefs with finitely many atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct SupportedMeasure {
    atoms: Vec<Atom>,
}

impl TryFrom<Vec<Atom>> for SupportedMeasure {
    type Error = Error;

    fn try_from(atoms: Vec<Atom>) -> Result<Self> {
        SupportedMeasure::new(atoms.into_iter().map(|a| (a.belief, a.mass)).collect())
    }
}

impl From<SupportedMeasure> for Vec<Atom> {
    fn from(m: SupportedMeasure) -> Self {
        m.atoms
    }
}

impl SupportedMeasure {
    /// Merges atoms on the canonical grid and prunes light ones; masses must
    /// sum to one.
    pub fn new(atoms: Vec<(Belief, f64)>) -> Result<Self> {
        let dim = atoms.first().map(|(b, _)| b.dim());
        let mut acc = BeliefAccumulator::default();
        for (b, m) in &atoms {
            if Some(b.dim()) != dim {
                return Err(Error::InvalidInput("atoms of different dimensions".into()));
            }
            if m.is_nan() || *m < 0.0 {
                return Err(Error::InvalidInput(format!("negative atom mass {m}")));
            }
            acc.add(b.weights(), *m);
        }
        let total: f64 = atoms.iter().map(|(_, m)| m).sum();
        if (total - 1.0).abs() > ROW_TOLERANCE {
            return Err(Error::RowSum {
                row: "measure".into(),
                sum: total,
                deviation: total - 1.0,
            });
        }
        Ok(Self::from_accumulator(acc, 1.0))
    }

    pub fn dirac(x: Belief) -> Self {
        SupportedMeasure {
            atoms: vec![Atom { belief: x, mass: 1.0 }],
        }
    }

    fn from_accumulator(acc: BeliefAccumulator, scale: f64) -> Self {
        let atoms = acc
            .atoms
            .into_iter()
            .filter(|(_, m)| m / scale >= ATOM_CUTOFF)
            .map(|(x, m)| Atom {
                belief: Belief::from_raw(x),
                mass: m / scale,
            })
            .collect();
        SupportedMeasure { atoms }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Mass of the atom at `x` on the canonical grid.
    pub fn mass_at(&self, x: &Belief) -> f64 {
        let key = x.canonical_key();
        self.atoms
            .iter()
            .filter(|a| a.belief.canonical_key() == key)
            .map(|a| a.mass)
            .sum()
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.mass * f(a.belief.weights())).sum()
    }
}

/// Occupation measure with the weight it was normalized by.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Occupation {
    pub measure: SupportedMeasure,
    /// `E[Σ_{m<=H} θ_m]`; the measure is divided by it.
    pub total_weight: f64,
    /// `E[Σ_{m>H} θ_m]`.
    pub tail_weight: f64,
}

/// `E[Σ_m θ_m δ_{x_m}]` over plays truncated at `horizon`, renormalized.
pub fn occupation_measure(
    p: &Pomdp,
    x1: &Belief,
    strat: &Strategy,
    e: &Evaluation,
    horizon: usize,
    budget: usize,
) -> Result<Occupation> {
    let mut acc = BeliefAccumulator::default();
    let (mut total, mut tail) = (0.0, 0.0);
    walk_plays(p, x1, strat, horizon, budget, |play, prob| {
        let a = e.assess(play)?;
        for (m, w) in a.weights.iter().enumerate() {
            if *w > 0.0 {
                acc.add(play.belief(m + 1), prob * w);
                total += prob * w;
            }
        }
        tail += prob * a.tail_weight;
        Ok(())
    })?;
    if total <= 0.0 {
        return Err(Error::InvalidInput("evaluation puts no weight within the horizon".into()));
    }
    Ok(Occupation {
        measure: SupportedMeasure::from_accumulator(acc, total),
        total_weight: total,
        tail_weight: tail,
    })
}

/// Image of `μ` under `σ^{♯q}`: each atom `x` sends mass
/// `σ(x)(i)·q(x,i)(s)` to the posterior `q̄(x,i,s)`.
pub fn image_measure(p: &Pomdp, mu: &SupportedMeasure, strat: &StationaryStrategy) -> Result<SupportedMeasure> {
    let mut acc = BeliefAccumulator::default();
    for atom in &mu.atoms {
        let x = &atom.belief;
        if x.dim() != p.n_states() {
            return Err(Error::InvalidInput("measure and POMDP dimensions differ".into()));
        }
        let sigma = strat.act(x.weights())?;
        for (i, &pi) in sigma.iter().enumerate() {
            if pi <= 0.0 {
                continue;
            }
            for branch in p.belief_transition(x, i)? {
                acc.add(branch.posterior.weights(), atom.mass * pi * branch.probability);
            }
        }
    }
    let total = mu.total_mass();
    Ok(SupportedMeasure::from_accumulator(acc, total))
}

/// Kantorovich–Rubinstein distance with the L1 ground metric, by successive
/// shortest paths on the bipartite transport network. Both measures are
/// rescaled to unit mass first.
pub fn kr_distance(mu: &SupportedMeasure, nu: &SupportedMeasure) -> Result<f64> {
    if let (Some(a), Some(b)) = (mu.atoms.first(), nu.atoms.first()) {
        if a.belief.dim() != b.belief.dim() {
            return Err(Error::InvalidInput("measures live on different belief spaces".into()));
        }
    }
    let supply: Vec<f64> = mu.atoms.iter().map(|a| a.mass / mu.total_mass()).collect();
    let demand: Vec<f64> = nu.atoms.iter().map(|a| a.mass / nu.total_mass()).collect();
    let cost: Vec<Vec<f64>> = mu
        .atoms
        .iter()
        .map(|a| nu.atoms.iter().map(|b| l1(a.belief.weights(), b.belief.weights())).collect())
        .collect();
    Ok(transport_cost(&supply, &demand, &cost))
}

/// Minimum cost of moving `supply` onto `demand` (equal totals) with unit
/// costs `cost[i][j]`.
pub fn transport_cost(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (n, m) = (supply.len(), demand.len());
    let mut left = supply.to_vec();
    let mut right = demand.to_vec();
    let mut flow = vec![vec![0.0; m]; n];
    // nodes: 0..n sources, n..n+m sinks
    loop {
        // Bellman–Ford from every source with remaining supply
        let nodes = n + m;
        let mut dist = vec![f64::INFINITY; nodes];
        let mut pred = vec![usize::MAX; nodes];
        for i in 0..n {
            if left[i] > FLOW_EPS {
                dist[i] = 0.0;
            }
        }
        for _ in 0..nodes {
            let mut changed = false;
            for i in 0..n {
                if dist[i].is_finite() {
                    for j in 0..m {
                        let d = dist[i] + cost[i][j];
                        if d < dist[n + j] - 1e-15 {
                            dist[n + j] = d;
                            pred[n + j] = i;
                            changed = true;
                        }
                    }
                }
            }
            for j in 0..m {
                if dist[n + j].is_finite() {
                    for i in 0..n {
                        if flow[i][j] > FLOW_EPS {
                            let d = dist[n + j] - cost[i][j];
                            if d < dist[i] - 1e-15 {
                                dist[i] = d;
                                pred[i] = n + j;
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let target = (0..m)
            .filter(|&j| right[j] > FLOW_EPS && dist[n + j].is_finite())
            .min_by(|&a, &b| dist[n + a].partial_cmp(&dist[n + b]).unwrap());
        let Some(j_end) = target else { break };
        // bottleneck along the path
        let mut bottleneck = right[j_end];
        let mut v = n + j_end;
        loop {
            let u = pred[v];
            if u == usize::MAX {
                bottleneck = bottleneck.min(left[v]);
                break;
            }
            if v < n {
                // backward arc sink u -> source v
                bottleneck = bottleneck.min(flow[v][u - n]);
            }
            v = u;
        }
        if bottleneck <= FLOW_EPS {
            break;
        }
        let mut v = n + j_end;
        right[j_end] -= bottleneck;
        loop {
            let u = pred[v];
            if u == usize::MAX {
                left[v] -= bottleneck;
                break;
            }
            if v >= n {
                flow[u][v - n] += bottleneck;
            } else {
                flow[v][u - n] -= bottleneck;
            }
            v = u;
        }
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..m {
            total += flow[i][j] * cost[i][j];
        }
    }
    total
}

/// `d_KR(μ, σ^{♯q}(μ))`.
pub fn invariance_residual(p: &Pomdp, mu: &SupportedMeasure, strat: &StationaryStrategy) -> Result<f64> {
    kr_distance(mu, &image_measure(p, mu, strat)?)
}

/// Observed histories sharing an end belief, with their conditional masses
/// and the action distribution the strategy plays after them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Group {
    pub belief: Belief,
    pub mass: f64,
    pub members: Vec<GroupMember>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMember {
    pub history: Vec<(usize, usize)>,
    pub conditional_mass: f64,
    pub actions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisintegrationTable {
    pub groups: Vec<Group>,
}

/// The weighted history measure `θ_f`, its one-step shift `θ'_f`, their end
/// belief images and the stationary strategy induced by the grouping.
#[derive(Debug, Clone)]
pub struct Disintegration {
    pub table: DisintegrationTable,
    pub strategy: StationaryStrategy,
    /// End-belief image of `θ_f`, divided by `total_weight`.
    pub occupation: SupportedMeasure,
    /// End-belief image of `θ'_f`, divided by `total_weight`.
    pub shifted: SupportedMeasure,
    /// `‖θ'_f - θ_f‖_1` (unnormalized).
    pub history_l1: f64,
    pub total_weight: f64,
}

struct HistoryNode {
    parent: u32,
    pair: (usize, usize),
    belief: Vec<f64>,
    theta: f64,
}

/// Builds `θ_f(h) = E[θ_m 1{h_m = h}]` over the tree truncated at `horizon`
/// and the objects derived from it.
pub fn disintegrate(
    p: &Pomdp,
    x1: &Belief,
    strat: &Strategy,
    e: &Evaluation,
    horizon: usize,
    budget: usize,
) -> Result<Disintegration> {
    let ns = p.n_signals();
    let mut nodes = vec![HistoryNode {
        parent: u32::MAX,
        pair: (0, 0),
        belief: x1.weights().to_vec(),
        theta: 0.0,
    }];
    let mut index: HashMap<(u32, u32), u32> = HashMap::new();
    let mut path = Vec::with_capacity(horizon);
    walk_plays(p, x1, strat, horizon, budget, |play, prob| {
        let a = e.assess(play)?;
        path.clear();
        path.push(0u32);
        for m in 0..play.len() - 1 {
            let parent = path[m];
            let code = (play.actions[m] * ns + play.signals[m]) as u32;
            let id = *index.entry((parent, code)).or_insert_with(|| {
                nodes.push(HistoryNode {
                    parent,
                    pair: (play.actions[m], play.signals[m]),
                    belief: play.belief(m + 2).to_vec(),
                    theta: 0.0,
                });
                (nodes.len() - 1) as u32
            });
            path.push(id);
        }
        for (id, w) in path.iter().zip(&a.weights) {
            nodes[*id as usize].theta += prob * w;
        }
        Ok(())
    })?;

    let history_of = |mut id: u32| {
        let mut h = Vec::new();
        while id != 0 {
            let node = &nodes[id as usize];
            h.push(node.pair);
            id = node.parent;
        }
        h.reverse();
        h
    };

    let total: f64 = nodes.iter().map(|n| n.theta).sum();
    if total <= 0.0 {
        return Err(Error::InvalidInput("evaluation puts no weight within the horizon".into()));
    }

    // θ'_f, keyed by node for histories inside the tree
    let mut shifted_theta = vec![0.0; nodes.len()];
    let mut outside = 0.0;
    let mut shifted_acc = BeliefAccumulator::default();
    let mut occupation_acc = BeliefAccumulator::default();
    let mut groups: Vec<Group> = Vec::new();
    let mut group_index: HashMap<Vec<i64>, usize> = HashMap::new();
    for (id, node) in nodes.iter().enumerate() {
        if node.theta <= 0.0 {
            continue;
        }
        let history = history_of(id as u32);
        let sigma = strategy_action(strat, p, x1, &ObservedHistory(history.clone()))?;
        occupation_acc.add(&node.belief, node.theta);
        let key = crate::model::canonical_key(&node.belief);
        let g = *group_index.entry(key).or_insert_with(|| {
            groups.push(Group {
                belief: Belief::from_raw(node.belief.clone()),
                mass: 0.0,
                members: Vec::new(),
            });
            groups.len() - 1
        });
        groups[g].mass += node.theta;
        groups[g].members.push(GroupMember {
            history,
            conditional_mass: node.theta,
            actions: sigma.clone(),
        });
        for (i, &pi) in sigma.iter().enumerate() {
            if pi <= 0.0 {
                continue;
            }
            for branch in p.belief_transition_unchecked(&node.belief, i) {
                let mass = node.theta * pi * branch.probability;
                shifted_acc.add(branch.posterior.weights(), mass);
                let code = (i * ns + branch.signal) as u32;
                match index.get(&(id as u32, code)) {
                    Some(&child) => shifted_theta[child as usize] += mass,
                    None => outside += mass,
                }
            }
        }
    }
    let history_l1 = nodes
        .iter()
        .zip(&shifted_theta)
        .map(|(n, s)| (n.theta - s).abs())
        .sum::<f64>()
        + outside;

    let mut support = Vec::with_capacity(groups.len());
    let mut actions = Vec::with_capacity(groups.len());
    for group in groups.iter_mut() {
        let mut dist = vec![0.0; p.n_actions()];
        for member in group.members.iter_mut() {
            member.conditional_mass /= group.mass;
            for (d, a) in dist.iter_mut().zip(&member.actions) {
                *d += member.conditional_mass * a;
            }
        }
        group.mass /= total;
        support.push(group.belief.clone());
        actions.push(dist);
    }
    let strategy = StationaryStrategy::new(support, actions)?;
    Ok(Disintegration {
        table: DisintegrationTable { groups },
        strategy,
        occupation: SupportedMeasure::from_accumulator(occupation_acc, total),
        shifted: SupportedMeasure::from_accumulator(shifted_acc, total),
        history_l1,
        total_weight: total,
    })
}
