use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{AtomicConstraint, Conjunction, Pta, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub trials: u64,
    /// Mean accumulated delay over trials that reached a final location.
    pub mean: f64,
    pub std_err: f64,
    pub terminated_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub trials: u64,
    pub seed: u64,
    pub step_budget: u64,
    pub shards: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            trials: 100_000,
            seed: 0,
            step_budget: 10_000_000,
            shards: 64,
        }
    }
}

pub fn simulate(pta: &Pta, trials: u64, seed: u64) -> SimStats {
    simulate_with(
        pta,
        &SimOptions {
            trials,
            seed,
            ..Default::default()
        },
    )
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    count: u64,
    mean: f64,
    m2: f64,
    runs: u64,
}

impl Acc {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(a: Acc, b: Acc) -> Acc {
        if a.count == 0 {
            return Acc { runs: a.runs + b.runs, ..b };
        }
        if b.count == 0 {
            return Acc { runs: a.runs + b.runs, ..a };
        }
        let n = (a.count + b.count) as f64;
        let d = b.mean - a.mean;
        Acc {
            count: a.count + b.count,
            mean: a.mean + d * b.count as f64 / n,
            m2: a.m2 + b.m2 + d * d * a.count as f64 * b.count as f64 / n,
            runs: a.runs + b.runs,
        }
    }
}

/// Samples runs that always wait as long as the invariant and the guard
/// allow, choosing edges by weight. Trials are split into seeded shards so
/// results do not depend on the thread count.
pub fn simulate_with(pta: &Pta, opts: &SimOptions) -> SimStats {
    let shards = opts.shards.max(1).min(opts.trials.max(1));
    let acc = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let n = opts.trials / shards + u64::from(shard < opts.trials % shards);
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(shard);
            let mut acc = Acc::default();
            for _ in 0..n {
                acc.runs += 1;
                if let Some(d) = trial(pta, &mut rng, opts.step_budget) {
                    acc.push(d);
                }
            }
            acc
        })
        .reduce(Acc::default, Acc::merge);

    let std_err = if acc.count > 1 {
        (acc.m2 / (acc.count - 1) as f64 / acc.count as f64).sqrt()
    } else {
        0.0
    };
    SimStats {
        trials: acc.runs,
        mean: if acc.count > 0 { acc.mean } else { f64::NAN },
        std_err,
        terminated_fraction: if acc.runs > 0 {
            acc.count as f64 / acc.runs as f64
        } else {
            0.0
        },
    }
}

fn holds(c: &AtomicConstraint, v: &[f64]) -> bool {
    let x = v[c.left] - v[c.right];
    let b = c.bound as f64;
    match c.relation {
        Relation::Lt => x < b,
        Relation::Le => x <= b,
        Relation::Ge => x >= b,
        Relation::Gt => x > b,
    }
}

fn all_hold(c: &Conjunction, v: &[f64]) -> bool {
    c.conjuncts.iter().all(|a| holds(a, v))
}

/// Largest delay keeping every single-clock upper bound satisfied.
fn max_delay(conj: &[&Conjunction], v: &[f64]) -> f64 {
    conj.iter()
        .flat_map(|c| c.conjuncts.iter())
        .filter(|a| a.right == 0 && a.relation.is_upper())
        .map(|a| a.bound as f64 - v[a.left])
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
}

/// Accumulated delay of one run, or `None` if it does not reach a final
/// location.
fn trial(pta: &Pta, rng: &mut ChaCha8Rng, budget: u64) -> Option<f64> {
    let mut loc = pta.initial()?;
    let mut v = vec![0.0; pta.clock_count() + 1];
    let mut total = 0.0;
    for _ in 0..budget {
        if pta.locations[loc].is_final {
            return Some(total);
        }
        let edges: Vec<_> = pta.out_edges(loc).filter(|e| e.weight > 0.0).collect();
        let first = edges.first()?;
        let d = max_delay(&[&pta.locations[loc].invariant, &first.guard], &v);
        if !d.is_finite() {
            return None;
        }
        for x in v.iter_mut().skip(1) {
            *x += d;
        }
        total += d;
        let sum: f64 = edges.iter().map(|e| e.weight).sum();
        let mut pick = rng.random::<f64>() * sum;
        let mut chosen = edges[edges.len() - 1];
        for e in &edges {
            if pick < e.weight {
                chosen = e;
                break;
            }
            pick -= e.weight;
        }
        if !all_hold(&chosen.guard, &v) {
            return None;
        }
        for &r in &chosen.resets {
            v[r] = 0.0;
        }
        loc = chosen.target;
        if !all_hold(&pta.locations[loc].invariant, &v) {
            return None;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    #[test]
    fn example1_mean() {
        let pta = parse_model(include_str!("../../models/example1.pta")).unwrap();
        let s = simulate(&pta, 20_000, 0);
        assert_eq!(s.trials, 20_000);
        assert_eq!(s.terminated_fraction, 1.0);
        // Every path waits 5 then 10.
        assert_eq!(s.mean, 15.0);
        assert_eq!(s.std_err, 0.0);
    }

    #[test]
    fn zero_delay_model() {
        let pta = parse_model("clocks x\nlocation A initial invariant x <= 0\nlocation B final\nedge A -> B weight 1\n").unwrap();
        let s = simulate(&pta, 1000, 3);
        assert_eq!((s.mean, s.std_err), (0.0, 0.0));
    }

    #[test]
    fn reproducible_for_fixed_seed() {
        let pta = parse_model(include_str!("../../models/geometric_c.pta")).unwrap();
        let a = simulate(&pta, 2000, 7);
        let b = simulate(&pta, 2000, 7);
        assert_eq!(a, b);
        assert!((a.mean - 1000.0).abs() < 4.0 * a.std_err, "{a:?}");
    }

    #[test]
    fn disabled_exit_never_terminates() {
        let pta = parse_model(
            "clocks x\nlocation A initial invariant x <= 5\nlocation B final\nedge A -> B guard x >= 9 weight 1\n",
        )
        .unwrap();
        let s = simulate(&pta, 100, 0);
        assert_eq!(s.terminated_fraction, 0.0);
        assert!(s.mean.is_nan());
    }
}
