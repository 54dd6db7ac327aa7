mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{arb_pomdp, arb_pomdp_and_belief};
use pomdp_weighted::evaluations::{
    block_smooth, conditional_evaluation, eta_horizon, irregularity_exact, irregularity_mc, variation, Measurability,
    Normalization,
};
use pomdp_weighted::sim::{simulate, simulate_deterministic};
use pomdp_weighted::strategies::doubling_strategy;
use pomdp_weighted::tree::{walk_plays, DEFAULT_NODE_BUDGET};
use pomdp_weighted::{instances, Belief, Evaluation, EvaluationSpec, Play, Strategy as Plan};

fn eval(spec: EvaluationSpec) -> Evaluation {
    Evaluation::new(spec).unwrap()
}

/// A single-signal play through the given states with constant payoffs.
fn play_through(states: &[usize]) -> Play {
    let h = states.len();
    Play {
        states: states.to_vec(),
        actions: vec![0; h],
        signals: vec![0; h.saturating_sub(1)],
        beliefs: vec![0.5; 2 * h],
        rewards: vec![0.0; h],
        belief_payoffs: vec![0.0; h],
        n_states: 2,
    }
}

fn arb_decreasing() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..30).prop_map(|mut w| {
        w.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let total: f64 = w.iter().sum::<f64>().max(1e-3);
        w.into_iter().map(|v| v / total).collect()
    })
}

/// Independent irregularity of a deterministic weight sequence.
fn irregularity_oracle(weights: &[f64]) -> f64 {
    let mut total = weights.first().copied().unwrap_or(0.0).abs();
    for m in 0..weights.len() {
        let next = weights.get(m + 1).copied().unwrap_or(0.0);
        total += (weights[m] - next).abs();
    }
    total
}

proptest! {
    #[test]
    fn pointwise_normalized_weights_sum_to_one((p, x) in arb_pomdp_and_belief(), n in 1usize..20, lambda in 0.05f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let play = simulate(&p, &x, &Plan::uniform(), 40, &mut rng, |_| false).unwrap();
        let e = eval(EvaluationSpec::NStage { n });
        prop_assert_eq!(e.normalization(), Normalization::Pointwise);
        let total: f64 = e.weights(&play).unwrap().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        let d = eval(EvaluationSpec::Discounted { lambda });
        let a = d.assess(&play).unwrap();
        prop_assert!((a.weights.iter().sum::<f64>() + a.tail_weight - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn decreasing_weights_are_normalized_and_exact(w in arb_decreasing()) {
        let e = eval(EvaluationSpec::Decreasing { weights: w.clone() });
        prop_assert_eq!(e.measurability(), Measurability::PrefixObserved);
        let play = play_through(&vec![0; w.len() + 3]);
        let got = e.weights(&play).unwrap();
        prop_assert!((got.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!((variation(&got) - irregularity_oracle(&w)).abs() <= 1e-12);
    }

    #[test]
    fn irregularity_brackets_are_consistent((p, x) in arb_pomdp_and_belief(), lambda in 0.05f64..0.9, horizon in 1usize..5) {
        let e = eval(EvaluationSpec::Discounted { lambda });
        let r = irregularity_exact(&p, &x, &Plan::uniform(), &e, horizon, DEFAULT_NODE_BUDGET).unwrap();
        prop_assert!(r.lower <= r.upper + 1e-15);
        prop_assert!(r.upper - r.lower <= 2.0 * r.tail_bound + 1e-9);
        prop_assert!(r.lower <= 2.0 * lambda + 1e-9 && 2.0 * lambda <= r.upper + 1e-9);
    }

    /// `|Σ θ_m b_m − Σ_{m>l} ω_m b_m| <= 2l·I` for deterministic θ, its block
    /// smoothing ω and any `b` bounded by 1.
    #[test]
    fn block_smoothing_deviation_is_bounded(w in arb_decreasing(), l in 1usize..8, b in prop::collection::vec(-1.0f64..=1.0, 60)) {
        let e = eval(EvaluationSpec::Decreasing { weights: w.clone() });
        let smooth = block_smooth(&e, l).unwrap();
        let play = play_through(&vec![0; 60]);
        let theta = e.weights(&play).unwrap();
        let omega = smooth.weights(&play).unwrap();
        let lhs: f64 = theta.iter().zip(&b).map(|(t, x)| t * x).sum::<f64>()
            - omega.iter().zip(&b).skip(l).map(|(o, x)| o * x).sum::<f64>();
        prop_assert!(lhs.abs() <= 2.0 * l as f64 * irregularity_oracle(&w) + 1e-12);
    }

    #[test]
    fn eta_matches_brute_force_scan(payoffs in prop::collection::vec(0.0f64..=1.0, 1..200), l in 1usize..10) {
        prop_assume!(payoffs.len() >= l);
        prop_assert_eq!(eta_horizon(&payoffs, l).unwrap(), eta_oracle(&payoffs, l));
    }

    /// The conditional evaluation only reads actions and signals.
    #[test]
    fn conditional_weights_ignore_states((p, x) in arb_pomdp().prop_flat_map(|p| {
        let n = p.n_states();
        (Just(p), common::arb_belief(n))
    }), l in 1usize..4, seed in any::<u64>()) {
        let horizon = 4;
        let e = eval(EvaluationSpec::LimsupTheta { l: l.min(horizon), horizon });
        let rho = conditional_evaluation(&p, &x, &Plan::uniform(), &e, horizon, DEFAULT_NODE_BUDGET).unwrap();
        prop_assert_eq!(rho.measurability(), Measurability::PrefixObserved);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let play = simulate(&p, &x, &Plan::uniform(), horizon, &mut rng, |_| false).unwrap();
        let mut moved = play.clone();
        for k in moved.states.iter_mut() {
            *k = (*k + 1) % p.n_states();
        }
        prop_assert_eq!(rho.weights(&play).unwrap(), rho.weights(&moved).unwrap());
        // changing the last observed pair leaves the earlier weights alone
        let mut tail = play.clone();
        if let Some(last) = tail.actions.last_mut() {
            *last = (*last + 1) % p.n_actions();
        }
        let (a, b) = (rho.weights(&play).unwrap(), rho.weights(&tail).unwrap());
        prop_assert_eq!(&a[..horizon], &b[..horizon]);
    }

    #[test]
    fn limsup_rho_is_a_bounded_supermartingale((p, x) in arb_pomdp_and_belief(), l in 1usize..6) {
        let horizon = 5;
        let e = eval(EvaluationSpec::LimsupTheta { l: l.min(horizon), horizon });
        let rho = conditional_evaluation(&p, &x, &Plan::uniform(), &e, horizon, DEFAULT_NODE_BUDGET).unwrap();
        let table = rho.conditional_table().unwrap();
        let l = l.min(horizon) as f64;
        for node in table.prefixes().filter(|n| n.mass > 0.0) {
            prop_assert!(node.rho.abs() <= (1.0 / l).min(1.0 / node.stage as f64) + 1e-9);
            let child_mass: f64 = node.children.iter().map(|c| c.0).sum();
            if child_mass > 0.0 {
                let next: f64 = node.children.iter().map(|(m, r)| m * r).sum::<f64>() / child_mass;
                prop_assert!(next <= node.rho + 1e-9);
            }
        }
    }
}

fn eta_oracle(payoffs: &[f64], l: usize) -> usize {
    let n = payoffs.len();
    let avg = |m: usize| payoffs[..m].iter().sum::<f64>() / m as f64;
    let mut proxy = f64::NEG_INFINITY;
    for m in (n / 2).max(1)..=n {
        proxy = proxy.max(avg(m));
    }
    for m in l..=n {
        if avg(m) >= proxy - 1.0 / l as f64 {
            return m;
        }
    }
    n
}

#[test]
fn eta_on_doubling_trajectory_from_beta() {
    let play = simulate_deterministic(&instances::blind(), 1, &doubling_strategy(), 2_000).unwrap();
    let got = eta_horizon(&play.rewards, 4).unwrap();
    assert_eq!(got, eta_oracle(&play.rewards, 4));
    assert_eq!(eta_horizon(&[0.3; 12], 5).unwrap(), 5);
    assert_eq!(eta_horizon(&[0.0, 1.0, 0.0], 1).unwrap(), 1);
    assert!(eta_horizon(&[0.5; 3], 4).is_err());
}

#[test]
fn closed_form_irregularities() {
    let p = instances::blind();
    let x1 = Belief::uniform(2);
    let t = Plan::always(2, 1, 0);
    for n in [2, 10, 100] {
        let r = irregularity_exact(&p, &x1, &t, &eval(EvaluationSpec::NStage { n }), n, DEFAULT_NODE_BUDGET).unwrap();
        assert!(r.is_exact());
        assert_eq!(r.lower, 2.0 / n as f64);
    }
    for lambda in [0.5f64, 0.1, 0.01] {
        // numeric summation of λ + Σ_m |θ_m − θ_{m+1}|
        let mut sum = lambda;
        let mut theta = lambda;
        for _ in 0..20_000 {
            let next = theta * (1.0 - lambda);
            sum += theta - next;
            theta = next;
        }
        let h = (1e-13f64.ln() / (1.0 - lambda).ln()).ceil() as usize;
        let r = irregularity_exact(&p, &x1, &t, &eval(EvaluationSpec::Discounted { lambda }), h, DEFAULT_NODE_BUDGET).unwrap();
        assert!((sum - 2.0 * lambda).abs() < 1e-12);
        assert!((r.lower - 2.0 * lambda).abs() < 1e-9 && (r.upper - 2.0 * lambda).abs() < 1e-9, "{r:?}");
    }
}

#[test]
fn monte_carlo_irregularities() {
    let p = instances::matching();
    let x1 = Belief::uniform(2);
    let u = Plan::uniform();
    let n10 = irregularity_mc(&p, &x1, &u, &eval(EvaluationSpec::NStage { n: 10 }), 10, 10_000, 3).unwrap();
    assert!((n10.mean - 0.2).abs() < 1e-12 && n10.std_error < 1e-12);
    let block = irregularity_mc(&p, &x1, &u, &eval(EvaluationSpec::StateBlockEx1 { l: 4 }), 8, 20_000, 5).unwrap();
    assert!((block.mean - 0.5).abs() <= 3.0 * block.std_error + 1e-12);
    let zero = irregularity_mc(&p, &x1, &u, &eval(EvaluationSpec::Zero), 5, 100, 1).unwrap();
    assert_eq!(zero.mean, 0.0);
}

#[test]
fn block_smoothing_examples() {
    let play = play_through(&[0; 24]);
    let n6 = eval(EvaluationSpec::NStage { n: 6 });
    assert_eq!(block_smooth(&n6, 3).unwrap().weights(&play).unwrap(), n6.weights(&play).unwrap());
    assert_eq!(block_smooth(&n6, 1).unwrap().weights(&play).unwrap(), n6.weights(&play).unwrap());
    let lambda = 0.3;
    let d = block_smooth(&eval(EvaluationSpec::Discounted { lambda }), 4).unwrap();
    for (m, w) in d.weights(&play).unwrap().iter().enumerate() {
        let t = m / 4;
        assert!((w - lambda * (1.0 - lambda).powi(4 * t as i32)).abs() < 1e-15);
    }
}

#[test]
fn conditional_evaluation_examples() {
    let p = instances::matching();
    let x1 = Belief::uniform(2);
    let u = Plan::uniform();
    // a prefix-observed evaluation is its own conditional version
    let n3 = eval(EvaluationSpec::NStage { n: 3 });
    let rho = conditional_evaluation(&p, &x1, &u, &n3, 5, DEFAULT_NODE_BUDGET).unwrap();
    walk_plays(&p, &x1, &u, 5, DEFAULT_NODE_BUDGET, |play, _| {
        let (a, b) = (rho.weights(play).unwrap(), n3.weights(play).unwrap());
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12), "{a:?} vs {b:?}");
        Ok(())
    })
    .unwrap();
    for l in [1, 2, 3] {
        let e = eval(EvaluationSpec::StateBlockEx1 { l });
        let rho = conditional_evaluation(&p, &x1, &u, &e, 2 * l + 1, DEFAULT_NODE_BUDGET).unwrap();
        for node in rho.conditional_table().unwrap().prefixes() {
            let expected = if node.stage <= 2 * l { 0.5 / l as f64 } else { 0.0 };
            assert!((node.rho - expected).abs() < 1e-12);
        }
    }
    let zero = conditional_evaluation(&p, &x1, &u, &eval(EvaluationSpec::Zero), 4, DEFAULT_NODE_BUDGET).unwrap();
    assert!(zero.conditional_table().unwrap().prefixes().all(|n| n.rho == 0.0));
}

#[test]
fn run_block_weights_sit_on_a_run() {
    let p = instances::redraw();
    let e = eval(EvaluationSpec::RunBlockEx2 { l: 3 });
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let play = simulate(&p, &Belief::uniform(2), &Plan::uniform(), 500, &mut rng, |pl| e.settles_now(pl)).unwrap();
        let w = e.weights(&play).unwrap();
        let payoff: f64 = w.iter().zip(&play.rewards).map(|(a, r)| a * r).sum();
        assert!((payoff - 1.0).abs() < 1e-12);
        assert_eq!(w[0], 0.0);
    }
}
