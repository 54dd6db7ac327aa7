//! Play simulation and reproducible sharded Monte Carlo.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Belief, Play, Pomdp};
use crate::strategies::Strategy;

/// Number of independent random streams a Monte Carlo run is split into.
/// Fixed so that results do not depend on the thread count.
pub const SHARDS: u64 = 32;

/// Sample mean and standard error of a statistic, plus the mean of an
/// auxiliary non-negative quantity (typically unaccounted tail weight).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub aux: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: f64,
    mean: f64,
    m2: f64,
    aux: f64,
}

impl Welford {
    fn push(&mut self, x: f64, aux: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
        self.aux += (aux - self.aux) / self.n;
    }

    fn merge(self, other: Welford) -> Welford {
        if other.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return other;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Welford {
            n,
            mean: self.mean + d * other.n / n,
            m2: self.m2 + other.m2 + d * d * self.n * other.n / n,
            aux: self.aux + (other.aux - self.aux) * other.n / n,
        }
    }
}

/// The random stream of one shard.
pub fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// Runs `draw` `samples` times across [`SHARDS`] seeded streams and merges
/// the `[statistic, aux]` pairs in shard order.
pub fn estimate<F>(samples: usize, seed: u64, draw: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<[f64; 2]> + Sync,
{
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be >= 1".into()));
    }
    let shards: Vec<Result<Welford>> = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let count = samples / SHARDS as usize + usize::from((shard as usize) < samples % SHARDS as usize);
            let mut rng = shard_rng(seed, shard);
            let mut w = Welford::default();
            for _ in 0..count {
                let [x, aux] = draw(&mut rng)?;
                w.push(x, aux);
            }
            Ok(w)
        })
        .collect();
    let mut total = Welford::default();
    for w in shards {
        total = total.merge(w?);
    }
    let variance = if total.n > 1.0 {
        total.m2 / (total.n - 1.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean: total.mean,
        std_error: (variance.max(0.0) / total.n).sqrt(),
        samples,
        aux: total.aux,
    })
}

fn sample(dist: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (j, &p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    dist.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Simulates one play of up to `horizon` stages, stopping early as soon as
/// `stop(&play)` holds after a completed stage.
pub fn simulate<R, S>(
    p: &Pomdp,
    x1: &Belief,
    strat: &Strategy,
    horizon: usize,
    rng: &mut R,
    stop: S,
) -> Result<Play>
where
    R: Rng,
    S: Fn(&Play) -> bool,
{
    if x1.dim() != p.n_states() {
        return Err(Error::InvalidInput("initial belief has the wrong dimension".into()));
    }
    let (nk, ns) = (p.n_states(), p.n_signals());
    let mut play = Play::with_dim(nk);
    let mut belief = x1.weights().to_vec();
    let mut k = sample(&belief, rng);
    let mut memory = strat.initial_memory();
    let mut dist = vec![0.0; p.n_actions()];
    for m in 1..=horizon {
        play.push_stage(k, &belief);
        strat.fill(memory, &play.actions, &play.signals, &belief, &mut dist)?;
        let i = sample(&dist, rng);
        play.push_action(i, p.reward(k, i), p.stage_payoff_unchecked(&belief, i));
        if m == horizon || stop(&play) {
            break;
        }
        let j = sample(p.row(k, i), rng);
        let (k2, s) = (j / ns, j % ns);
        play.signals.push(s);
        memory = strat.advance(memory, i, s);
        belief = p.posterior_or_fallback(&belief, i, s);
        k = k2;
    }
    Ok(play)
}

/// The play of a strategy when every draw is deterministic.
pub fn simulate_deterministic(p: &Pomdp, k1: usize, strat: &Strategy, horizon: usize) -> Result<Play> {
    let x1 = Belief::dirac(p.n_states(), k1);
    let mut rng = shard_rng(0, 0);
    simulate(p, &x1, strat, horizon, &mut rng, |_| false)
}
