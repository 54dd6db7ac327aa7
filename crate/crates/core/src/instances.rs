//! Built-in POMDPs: the counterexamples reproduced by the `reproduce`
//! harness and a few small instances used throughout the tests.

use rand::Rng;

use crate::model::Pomdp;

/// Two frozen states `α, β`, actions `α, β`, a single signal; payoff 1 iff
/// the action matches the state.
pub fn matching() -> Pomdp {
    Pomdp::from_fn(
        &["alpha", "beta"],
        &["alpha", "beta"],
        &["s0"],
        |k, _, k2, _| if k == k2 { 1.0 } else { 0.0 },
        |k, i| if k == i { 1.0 } else { 0.0 },
    )
    .expect("valid instance")
}

/// The matching POMDP where the signal reveals the next state.
pub fn matching_revealed() -> Pomdp {
    Pomdp::from_fn(
        &["alpha", "beta"],
        &["alpha", "beta"],
        &["alpha", "beta"],
        |k, _, k2, s| if k == k2 && s == k2 { 1.0 } else { 0.0 },
        |k, i| if k == i { 1.0 } else { 0.0 },
    )
    .expect("valid instance")
}

/// The state is redrawn uniformly at every stage; payoff 1 in `α`, 0 in `β`.
/// The signal reports the current state, so the observed play reveals every
/// state while the belief about the next state stays uniform.
pub fn redraw() -> Pomdp {
    Pomdp::from_fn(
        &["alpha", "beta"],
        &["wait"],
        &["alpha", "beta"],
        |k, _, _, s| if s == k { 0.5 } else { 0.0 },
        |k, _| if k == 0 { 1.0 } else { 0.0 },
    )
    .expect("valid instance")
}

/// Blind MDP: `T` keeps the state, `B` switches it; payoff 0 in `α`, 1 in `β`.
pub fn blind() -> Pomdp {
    Pomdp::from_fn(
        &["alpha", "beta"],
        &["T", "B"],
        &["s0"],
        |k, i, k2, _| {
            let next = if i == 0 { k } else { 1 - k };
            if k2 == next {
                1.0
            } else {
                0.0
            }
        },
        |k, _| if k == 1 { 1.0 } else { 0.0 },
    )
    .expect("valid instance")
}

/// One state, one action, one signal, constant reward `c`.
pub fn constant(c: f64) -> Pomdp {
    Pomdp::from_fn(&["k"], &["i"], &["s"], |_, _, _, _| 1.0, |_, _| c).expect("valid instance")
}

/// A good state (reward 1) that falls into an absorbing bad state (reward 0)
/// with probability `fall` per stage, whichever action is played. The signal
/// reveals the next state.
pub fn decaying(fall: f64) -> Pomdp {
    Pomdp::from_fn(
        &["good", "bad"],
        &["x", "y"],
        &["good", "bad"],
        |k, _, k2, s| {
            if s != k2 {
                return 0.0;
            }
            match (k, k2) {
                (0, 0) => 1.0 - fall,
                (0, 1) => fall,
                (1, 1) => 1.0,
                _ => 0.0,
            }
        },
        |k, _| if k == 0 { 1.0 } else { 0.0 },
    )
    .expect("valid instance")
}

/// Two states that flip with probability `flip` per stage under action 0 and
/// stay under action 1, observed through a symmetric noisy channel that
/// reports the next state correctly with probability `accuracy`.
pub fn noisy(flip: f64, accuracy: f64) -> Pomdp {
    Pomdp::from_fn(
        &["alpha", "beta"],
        &["drift", "hold"],
        &["a", "b"],
        |k, i, k2, s| {
            let move_prob = if i == 0 {
                if k2 == k {
                    1.0 - flip
                } else {
                    flip
                }
            } else if k2 == k {
                1.0
            } else {
                0.0
            };
            let obs = if s == k2 { accuracy } else { 1.0 - accuracy };
            move_prob * obs
        },
        |k, i| match (k, i) {
            (0, 0) => 0.2,
            (0, 1) => 0.6,
            (1, 0) => 0.9,
            _ => 0.1,
        },
    )
    .expect("valid instance")
}

/// A fully observed chain with `n` states and `n_actions` actions, random
/// transition rows and rewards; the signal is the next state.
pub fn random_observed_chain(n: usize, n_actions: usize, rng: &mut impl Rng) -> Pomdp {
    let names: Vec<String> = (0..n).map(|k| format!("k{k}")).collect();
    let actions: Vec<String> = (0..n_actions).map(|i| format!("a{i}")).collect();
    let mut rows = vec![vec![0.0; n]; n * n_actions];
    for row in rows.iter_mut() {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        for (slot, v) in row.iter_mut().zip(raw) {
            *slot = v / total;
        }
    }
    let rewards: Vec<f64> = (0..n * n_actions).map(|_| rng.gen::<f64>()).collect();
    let mut transition = Vec::with_capacity(n * n_actions * n * n);
    for k in 0..n {
        for i in 0..n_actions {
            for k2 in 0..n {
                for s in 0..n {
                    transition.push(if s == k2 { rows[k * n_actions + i][k2] } else { 0.0 });
                }
            }
        }
    }
    Pomdp::from_tables(names.clone(), actions, names, transition, rewards)
        .expect("random rows are normalized")
}

/// Looks up a built-in instance by name.
pub fn by_name(name: &str) -> Option<Pomdp> {
    match name {
        "ex1" | "matching" => Some(matching()),
        "ex1-revealed" | "matching-revealed" => Some(matching_revealed()),
        "ex2" | "redraw" => Some(redraw()),
        "blind" => Some(blind()),
        _ => None,
    }
}
