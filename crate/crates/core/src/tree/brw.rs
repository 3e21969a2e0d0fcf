use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::BrwSpec;
use crate::error::{Error, Result};
use crate::law::Offspring;
use crate::rng::{derive, stream, Purpose};

/// One BRW run: per-generation extremes of a rightmost-particles beam.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrwRun {
    /// `R_n` for `n = 1, 2, …` until the horizon or extinction.
    pub rightmost: Vec<f64>,
    /// The `k` rightmost positions of each generation, in decreasing order.
    pub top: Vec<Vec<f64>>,
    /// First generation at which the beam dropped particles.
    pub first_cap_hit: Option<usize>,
    /// Generation at which the population died out.
    pub extinct_at: Option<usize>,
}

/// Simulate `generations` generations from one particle at 0, keeping the
/// `cap` rightmost particles and reporting the `k` rightmost.
pub fn simulate_brw(
    spec: &BrwSpec,
    generations: usize,
    cap: usize,
    k: usize,
    seed: u64,
) -> Result<BrwRun> {
    if generations == 0 || cap == 0 {
        return Err(Error::Config("generations and cap must be positive".into()));
    }
    let mut rng = stream(seed, 0, Purpose::Aux);
    let mut pos = vec![0.0];
    let mut run = BrwRun {
        rightmost: Vec::new(),
        top: Vec::new(),
        first_cap_hit: None,
        extinct_at: None,
    };
    for g in 1..=generations {
        let (next, dropped) = spec.step_beam(&pos, cap, &mut rng);
        pos = next;
        if dropped && run.first_cap_hit.is_none() {
            run.first_cap_hit = Some(g);
        }
        if pos.is_empty() {
            run.extinct_at = Some(g);
            break;
        }
        let mut top = pos.clone();
        let kk = k.min(top.len());
        if kk > 0 && kk < top.len() {
            top.select_nth_unstable_by(kk - 1, |a, b| b.total_cmp(a));
            top.truncate(kk);
        }
        top.sort_by(|a, b| b.total_cmp(a));
        top.truncate(kk);
        run.rightmost
            .push(pos.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        run.top.push(top);
    }
    Ok(run)
}

/// Median and interquartile range of `R_n` over independent replicas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrwTracks {
    pub replicas: usize,
    pub median: Vec<f64>,
    pub iqr: Vec<f64>,
    /// Replicas alive at each generation.
    pub alive: Vec<usize>,
    pub cap_hits: usize,
}

pub fn simulate_brw_replicas(
    spec: &BrwSpec,
    generations: usize,
    cap: usize,
    replicas: usize,
    seed: u64,
) -> Result<BrwTracks> {
    let runs = (0..replicas as u64)
        .into_par_iter()
        .map(|r| simulate_brw(spec, generations, cap, 1, derive(seed, r)))
        .collect::<Result<Vec<BrwRun>>>()?;
    let mut median = Vec::with_capacity(generations);
    let mut iqr = Vec::with_capacity(generations);
    let mut alive = Vec::with_capacity(generations);
    for g in 0..generations {
        let mut xs: Vec<f64> = runs
            .iter()
            .filter_map(|r| r.rightmost.get(g).copied())
            .collect();
        alive.push(xs.len());
        if xs.is_empty() {
            break;
        }
        xs.sort_by(f64::total_cmp);
        let q = |p: f64| xs[((xs.len() - 1) as f64 * p).round() as usize];
        median.push(q(0.5));
        iqr.push(q(0.75) - q(0.25));
    }
    let cap_hits = runs.iter().filter(|r| r.first_cap_hit.is_some()).count();
    Ok(BrwTracks {
        replicas,
        median,
        iqr,
        alive,
        cap_hits,
    })
}

#[derive(Clone, Copy, Debug)]
struct Frontier {
    pos: f64,
    order: Reverse<u64>,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        self.pos
            .total_cmp(&other.pos)
            .then(self.order.cmp(&other.order))
    }
}

/// Greedy exploration of a binary BRW.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyRun {
    pub steps: usize,
    /// `(n, Q_{v_n} / n)` at logarithmically spaced checkpoints.
    pub track: Vec<(usize, f64)>,
    /// `Q_{v_n} / n` at the last step.
    pub speed: f64,
    /// Position of the leftmost individual queried.
    pub leftmost: f64,
}

/// Query the rightmost unqueried individual `steps` times, starting from the
/// root at 0. Ties go to the earlier-named individual.
pub fn greedy_brw(spec: &BrwSpec, steps: usize, seed: u64) -> Result<GreedyRun> {
    if spec.n != Offspring::Fixed(2) {
        return Err(Error::Config("greedy search needs binary offspring".into()));
    }
    if steps == 0 {
        return Err(Error::Config("steps must be positive".into()));
    }
    let mut rng = stream(seed, 0, Purpose::Aux);
    let mut heap = BinaryHeap::with_capacity(steps + 2);
    let mut counter = 0u64;
    heap.push(Frontier {
        pos: 0.0,
        order: Reverse(counter),
    });
    let mut leftmost = 0.0f64;
    let mut track = Vec::new();
    let mut next_mark = 1usize;
    let mut last = 0.0;
    for n in 1..=steps {
        let v = heap
            .pop()
            .expect("binary trees never run out of individuals");
        leftmost = leftmost.min(v.pos);
        last = v.pos;
        for _ in 0..2 {
            counter += 1;
            heap.push(Frontier {
                pos: v.pos + spec.xi.sample(&mut rng),
                order: Reverse(counter),
            });
        }
        if n == next_mark || n == steps {
            track.push((n, v.pos / n as f64));
            next_mark = (next_mark * 2).max(n + 1);
        }
    }
    Ok(GreedyRun {
        steps,
        track,
        speed: last / steps as f64,
        leftmost,
    })
}

/// Independent greedy runs; their `leftmost` values are draws of `L`.
pub fn greedy_replicas(
    spec: &BrwSpec,
    steps: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<GreedyRun>> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| greedy_brw(spec, steps, derive(seed, r)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::Law;

    #[test]
    fn deterministic_steps_give_exact_positions() {
        let spec = BrwSpec {
            n: Offspring::Fixed(2),
            xi: Law::Const(1.0),
        };
        let run = simulate_brw(&spec, 20, 1000, 3, 1).unwrap();
        for (g, r) in run.rightmost.iter().enumerate() {
            assert_eq!(*r, (g + 1) as f64);
        }
        let greedy = greedy_brw(&spec, 500, 2).unwrap();
        assert!((greedy.speed - 1.0).abs() < 0.02, "{}", greedy.speed);
    }

    #[test]
    fn unary_is_a_random_walk() {
        let spec = BrwSpec {
            n: Offspring::Fixed(1),
            xi: Law::Normal(0.0, 1.0),
        };
        let run = simulate_brw(&spec, 50, 10, 1, 7).unwrap();
        let mut rng = stream(7, 0, Purpose::Aux);
        let mut s = 0.0;
        for r in &run.rightmost {
            s += spec.xi.sample(&mut rng);
            assert_eq!(*r, s);
        }
        assert!(run.first_cap_hit.is_none());
    }

    #[test]
    fn extinction_is_reported() {
        let spec = BrwSpec {
            n: Offspring::Bernoulli(0.3),
            xi: Law::Normal(0.0, 1.0),
        };
        let run = simulate_brw(&spec, 1000, 100, 1, 3).unwrap();
        assert!(run.extinct_at.is_some());
    }
}
