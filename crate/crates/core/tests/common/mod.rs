#![allow(dead_code)]

use proptest::prelude::*;

use pomdp_weighted::{Belief, Pomdp};

fn normalize(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|j| format!("{prefix}{j}")).collect()
}

/// Random POMDP with up to 4 states, 3 actions and 3 signals. Some entries of
/// every row are zeroed to exercise zero-probability signals.
pub fn arb_pomdp() -> impl Strategy<Value = Pomdp> {
    (1usize..=4, 1usize..=3, 1usize..=3).prop_flat_map(|(nk, ni, ns)| {
        let row = nk * ns;
        (
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, row), nk * ni),
            prop::collection::vec(prop::collection::vec(any::<bool>(), row), nk * ni),
            prop::collection::vec(0.0f64..=1.0, nk * ni),
        )
            .prop_map(move |(rows, masks, reward)| {
                let mut transition = Vec::with_capacity(nk * ni * row);
                for (r, mask) in rows.into_iter().zip(masks) {
                    let mut r: Vec<f64> = r.iter().zip(&mask).map(|(v, keep)| if *keep { v + 0.05 } else { 0.0 }).collect();
                    if r.iter().all(|v| *v == 0.0) {
                        r[0] = 1.0;
                    }
                    transition.extend(normalize(r));
                }
                Pomdp::from_tables(names("k", nk), names("i", ni), names("s", ns), transition, reward)
                    .expect("normalized rows")
            })
    })
}

pub fn arb_belief(dim: usize) -> impl Strategy<Value = Belief> {
    prop::collection::vec(0.0f64..1.0, dim).prop_map(move |mut w| {
        w[0] += 1e-3;
        Belief::new(normalize(w)).expect("normalized")
    })
}

pub fn arb_pomdp_and_belief() -> impl Strategy<Value = (Pomdp, Belief)> {
    arb_pomdp().prop_flat_map(|p| {
        let n = p.n_states();
        (Just(p), arb_belief(n))
    })
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Minimum-cost transport between `supply` and `demand` by enumerating every
/// basis of the transportation polytope: each vertex is supported on a
/// spanning tree of the bipartite graph with `n + m - 1` cells, whose flows
/// follow by peeling leaves.
pub fn transport_by_vertices(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (n, m) = (supply.len(), demand.len());
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..m).map(move |b| (a, b))).collect();
    let size = n + m - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(size);
    choose(&cells, size, 0, &mut chosen, &mut |basis| {
        if let Some(flow) = tree_flow(basis, supply, demand) {
            if flow.iter().all(|f| *f >= -1e-12) {
                let c: f64 = basis.iter().zip(&flow).map(|(&(a, b), f)| f * cost[a][b]).sum();
                best = best.min(c);
            }
        }
    });
    best
}

fn choose(
    cells: &[(usize, usize)],
    size: usize,
    start: usize,
    chosen: &mut Vec<(usize, usize)>,
    visit: &mut dyn FnMut(&[(usize, usize)]),
) {
    if chosen.len() == size {
        visit(chosen);
        return;
    }
    let left = size - chosen.len();
    for idx in start..=cells.len() - left {
        chosen.push(cells[idx]);
        // every subset of a basis is a forest
        if is_forest(chosen) {
            choose(cells, size, idx + 1, chosen, visit);
        }
        chosen.pop();
    }
}

fn is_forest(cells: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..2 * cells.len() + 16).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            x = parent[x];
        }
        x
    }
    for &(a, b) in cells {
        let (ra, rb) = (find(&mut parent, 2 * a), find(&mut parent, 2 * b + 1));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    true
}

/// Flows on a spanning tree basis, or `None` if the cells contain a cycle.
fn tree_flow(basis: &[(usize, usize)], supply: &[f64], demand: &[f64]) -> Option<Vec<f64>> {
    let n = supply.len();
    let nodes = n + demand.len();
    let mut parent: Vec<usize> = (0..nodes).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in basis {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, n + b));
        if ra == rb {
            return None;
        }
        parent[ra] = rb;
    }
    let mut residual: Vec<f64> = supply.iter().copied().chain(demand.iter().map(|d| -d)).collect();
    let mut degree = vec![0usize; nodes];
    for &(a, b) in basis {
        degree[a] += 1;
        degree[n + b] += 1;
    }
    let mut flow = vec![f64::NAN; basis.len()];
    let mut done = vec![false; basis.len()];
    for _ in 0..basis.len() {
        let (e, leaf) = basis
            .iter()
            .enumerate()
            .filter(|(e, _)| !done[*e])
            .find_map(|(e, &(a, b))| {
                if degree[a] == 1 {
                    Some((e, a))
                } else if degree[n + b] == 1 {
                    Some((e, n + b))
                } else {
                    None
                }
            })?;
        let (a, b) = basis[e];
        let other = if leaf == a { n + b } else { a };
        // a supply leaf ships its residual; a demand leaf receives it
        let f = if leaf < n { residual[leaf] } else { -residual[leaf] };
        flow[e] = f;
        if leaf < n {
            residual[leaf] -= f;
            residual[other] += f;
        } else {
            residual[leaf] += f;
            residual[other] -= f;
        }
        done[e] = true;
        degree[a] -= 1;
        degree[n + b] -= 1;
    }
    Some(flow)
}
