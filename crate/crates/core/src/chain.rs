//! Finite Markov chains induced by a POMDP and a transducer.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Belief, Pomdp, ROW_TOLERANCE};
use crate::strategies::Transducer;

/// Transition probabilities at or below this are not edges of the support graph.
pub const EDGE_THRESHOLD: f64 = 1e-12;
/// Tolerance on transient mass and class averages for the mixing threshold.
pub const MIXING_TOLERANCE: f64 = 0.01;
pub const MIXING_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    n: usize,
    /// Row-major `n × n`.
    transition: Vec<f64>,
    payoff: Vec<f64>,
    initial: Vec<f64>,
    labels: Vec<String>,
}

impl MarkovChain {
    pub fn new(transition: Vec<Vec<f64>>, payoff: Vec<f64>, initial: Vec<f64>) -> Result<Self> {
        let n = payoff.len();
        if n == 0 || transition.len() != n || initial.len() != n {
            return Err(Error::InvalidInput("chain tables have inconsistent sizes".into()));
        }
        let labels = (0..n).map(|u| u.to_string()).collect();
        let mut flat = Vec::with_capacity(n * n);
        for row in &transition {
            if row.len() != n {
                return Err(Error::InvalidInput("chain transition must be square".into()));
            }
            flat.extend_from_slice(row);
        }
        let c = MarkovChain {
            n,
            transition: flat,
            payoff,
            initial,
            labels,
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        for u in 0..self.n {
            let row = self.row(u);
            if row.iter().any(|v| *v < 0.0 || v.is_nan()) {
                return Err(Error::InvalidInput(format!("chain row {} has a negative entry", self.labels[u])));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::RowSum {
                    row: format!("chain row {}", self.labels[u]),
                    sum,
                    deviation: sum - 1.0,
                });
            }
            if !(0.0..=1.0).contains(&self.payoff[u]) {
                return Err(Error::InvalidInput(format!("chain payoff at {} outside [0,1]", self.labels[u])));
            }
        }
        let total: f64 = self.initial.iter().sum();
        if (total - 1.0).abs() > ROW_TOLERANCE || self.initial.iter().any(|v| *v < 0.0) {
            return Err(Error::RowSum {
                row: "initial distribution".into(),
                sum: total,
                deviation: total - 1.0,
            });
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.transition[u * self.n..(u + 1) * self.n]
    }

    pub fn payoff(&self) -> &[f64] {
        &self.payoff
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `y P`.
    pub fn step(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (u, &yu) in y.iter().enumerate() {
            if yu != 0.0 {
                for (o, p) in out.iter_mut().zip(self.row(u)) {
                    *o += yu * p;
                }
            }
        }
        out
    }

    /// Running average of the payoff along a simulated path of `steps` stages
    /// started at `start`.
    pub fn simulate_average(&self, start: usize, steps: usize, rng: &mut impl Rng) -> f64 {
        let mut u = start;
        let mut total = 0.0;
        for _ in 0..steps {
            total += self.payoff[u];
            let x: f64 = rng.gen();
            let mut acc = 0.0;
            let row = self.row(u);
            let mut next = row.iter().rposition(|p| *p > 0.0).unwrap_or(u);
            for (v, p) in row.iter().enumerate() {
                acc += p;
                if x < acc {
                    next = v;
                    break;
                }
            }
            u = next;
        }
        total / steps as f64
    }
}

/// The chain on `K × M` of a POMDP driven by a transducer, with payoff
/// `r(k, act(m))` and initial law `x_1 ⊗ δ_{m_0}`. State `(k, m)` has index
/// `k·|M| + m`.
pub fn product_chain(p: &Pomdp, t: &Transducer, x1: &Belief) -> Result<MarkovChain> {
    if x1.dim() != p.n_states() {
        return Err(Error::InvalidInput("initial belief has the wrong dimension".into()));
    }
    let (nk, ns, nm) = (p.n_states(), p.n_signals(), t.n_memory());
    let n = nk * nm;
    let mut transition = vec![0.0; n * n];
    let mut payoff = vec![0.0; n];
    let mut labels = Vec::with_capacity(n);
    for k in 0..nk {
        for m in 0..nm {
            let u = k * nm + m;
            let i = t.act(m);
            payoff[u] = p.reward(k, i);
            labels.push(format!("{}/{}", p.states()[k], m));
            for k2 in 0..nk {
                for s in 0..ns {
                    let q = p.q(k, i, k2, s);
                    if q > 0.0 {
                        transition[u * n + k2 * nm + t.update(m, i, s)] += q;
                    }
                }
            }
        }
    }
    let mut initial = vec![0.0; n];
    for (k, xk) in x1.weights().iter().enumerate() {
        initial[k * nm + t.initial()] = *xk;
    }
    Ok(MarkovChain {
        n,
        transition,
        payoff,
        initial,
        labels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicDecomposition {
    pub transient: Vec<usize>,
    pub classes: Vec<Vec<usize>>,
    /// One full-length vector per class, supported on the class.
    pub stationary: Vec<Vec<f64>>,
    pub class_values: Vec<f64>,
    /// Probability of ending in each class from the chain's initial law.
    pub absorption: Vec<f64>,
}

impl ErgodicDecomposition {
    /// `E[liminf average payoff] = Σ_d absorption_d · γ_d`.
    pub fn liminf_value(&self) -> f64 {
        self.absorption.iter().zip(&self.class_values).map(|(a, g)| a * g).sum()
    }

    /// Class index per state, `None` for transient states.
    pub fn class_of(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for (d, class) in self.classes.iter().enumerate() {
            for &u in class {
                out[u] = Some(d);
            }
        }
        out
    }
}

/// Strongly connected components of the support graph, by an iterative
/// Tarjan search. Components come out in reverse topological order.
fn strongly_connected(c: &MarkovChain) -> Vec<Vec<usize>> {
    let n = c.n;
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|u| (0..n).filter(|&v| c.row(u)[v] > EDGE_THRESHOLD).collect())
        .collect();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next_index = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&(u, pos)) = work.last() {
            if pos < succ[u].len() {
                let v = succ[u][pos];
                work.last_mut().expect("non-empty").1 += 1;
                if index[v] == usize::MAX {
                    index[v] = next_index;
                    low[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    work.push((v, 0));
                } else if on_stack[v] {
                    low[u] = low[u].min(index[v]);
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    low[parent] = low[parent].min(low[u]);
                }
                if low[u] == index[u] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == u {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out
}

/// Recurrent classes (closed components), their stationary laws and values,
/// and absorption probabilities from the initial law.
pub fn ergodic_decomposition(c: &MarkovChain) -> Result<ErgodicDecomposition> {
    let n = c.n;
    let mut component = vec![0; n];
    let comps = strongly_connected(c);
    for (j, comp) in comps.iter().enumerate() {
        for &u in comp {
            component[u] = j;
        }
    }
    let mut classes: Vec<Vec<usize>> = comps
        .into_iter()
        .filter(|comp| {
            comp.iter().all(|&u| {
                c.row(u)
                    .iter()
                    .enumerate()
                    .all(|(v, p)| *p <= EDGE_THRESHOLD || component[v] == component[u])
            })
        })
        .collect();
    classes.sort_by_key(|comp| comp[0]);
    let mut class_of = vec![None; n];
    for (d, class) in classes.iter().enumerate() {
        for &u in class {
            class_of[u] = Some(d);
        }
    }
    let transient: Vec<usize> = (0..n).filter(|u| class_of[*u].is_none()).collect();

    let mut stationary = Vec::with_capacity(classes.len());
    let mut class_values = Vec::with_capacity(classes.len());
    for (d, class) in classes.iter().enumerate() {
        let size = class.len();
        let mut a = DMatrix::<f64>::zeros(size, size);
        for (r, &u) in class.iter().enumerate() {
            for (col, &v) in class.iter().enumerate() {
                // row `col` of P^T - I
                a[(col, r)] = c.row(u)[v] - if u == v { 1.0 } else { 0.0 };
            }
        }
        for col in 0..size {
            a[(size - 1, col)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(size);
        b[size - 1] = 1.0;
        let pi = a.lu().solve(&b).ok_or(Error::SingularSystem { class: d })?;
        let mut full = vec![0.0; n];
        for (r, &u) in class.iter().enumerate() {
            full[u] = pi[r];
        }
        class_values.push(class.iter().map(|&u| full[u] * c.payoff[u]).sum());
        stationary.push(full);
    }

    let absorption = absorption_from(c, &classes, &class_of, &transient, &c.initial)?;
    Ok(ErgodicDecomposition {
        transient,
        classes,
        stationary,
        class_values,
        absorption,
    })
}

fn absorption_from(
    c: &MarkovChain,
    classes: &[Vec<usize>],
    class_of: &[Option<usize>],
    transient: &[usize],
    initial: &[f64],
) -> Result<Vec<f64>> {
    let d_count = classes.len();
    let mut absorption = vec![0.0; d_count];
    for (u, &y) in initial.iter().enumerate() {
        if let Some(d) = class_of[u] {
            absorption[d] += y;
        }
    }
    let t = transient.len();
    if t == 0 {
        return Ok(absorption);
    }
    let mut a = DMatrix::<f64>::identity(t, t);
    let mut r = DMatrix::<f64>::zeros(t, d_count);
    for (x, &u) in transient.iter().enumerate() {
        for (y, &v) in transient.iter().enumerate() {
            a[(x, y)] -= c.row(u)[v];
        }
        for (v, p) in c.row(u).iter().enumerate() {
            if let Some(d) = class_of[v] {
                r[(x, d)] += p;
            }
        }
    }
    let x = a.lu().solve(&r).ok_or(Error::SingularSystem { class: d_count })?;
    for (row, &u) in transient.iter().enumerate() {
        for d in 0..d_count {
            absorption[d] += initial[u] * x[(row, d)];
        }
    }
    Ok(absorption)
}

/// `y_1 P^l`.
pub fn step_distribution(c: &MarkovChain, l: usize) -> Vec<f64> {
    let mut y = c.initial.clone();
    for _ in 0..l {
        y = c.step(&y);
    }
    y
}

/// Smallest `l` such that for every `n ∈ [l, cap]` and every start state, the
/// mass left on transient states after `n` steps is below 0.01, and the
/// `n`-stage average payoff from every state of class `d` is within 0.01 of
/// `γ_d`. `None` if no such `l <= cap` exists.
pub fn mixing_threshold(c: &MarkovChain, dec: &ErgodicDecomposition, cap: usize) -> Option<usize> {
    let n = c.n;
    let class_of = dec.class_of(n);
    // rows of P^t, and running sums of P^t f
    let mut power: Vec<Vec<f64>> = (0..n)
        .map(|u| {
            let mut e = vec![0.0; n];
            e[u] = 1.0;
            e
        })
        .collect();
    let mut sums = vec![0.0; n];
    let mut last_bad = 0;
    for steps in 1..=cap {
        for u in 0..n {
            sums[u] += power[u].iter().zip(&c.payoff).map(|(a, f)| a * f).sum::<f64>();
            power[u] = c.step(&power[u]);
        }
        let transient_ok = (0..n).all(|u| {
            dec.transient.iter().map(|&v| power[u][v]).sum::<f64>() < MIXING_TOLERANCE
        });
        let averages_ok = (0..n).all(|u| match class_of[u] {
            Some(d) => (sums[u] / steps as f64 - dec.class_values[d]).abs() <= MIXING_TOLERANCE,
            None => true,
        });
        if !(transient_ok && averages_ok) {
            last_bad = steps;
        }
    }
    (last_bad < cap).then_some(last_bad + 1)
}

/// Exact expected liminf average payoff of a transducer.
pub fn liminf_value_transducer(p: &Pomdp, x1: &Belief, t: &Transducer) -> Result<f64> {
    let c = product_chain(p, t, x1)?;
    Ok(ergodic_decomposition(&c)?.liminf_value())
}

/// `E[Σ_m θ_m f(u_m)]` for deterministic weights `θ_1, θ_2, …`.
pub fn weighted_chain_payoff(c: &MarkovChain, weights: &[f64]) -> f64 {
    let mut y = c.initial.clone();
    let mut total = 0.0;
    for (m, w) in weights.iter().enumerate() {
        if m > 0 {
            y = c.step(&y);
        }
        total += w * y.iter().zip(&c.payoff).map(|(a, f)| a * f).sum::<f64>();
    }
    total
}
