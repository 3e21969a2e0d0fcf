use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{phi, FrozenNu};
use crate::distance::ks_to_cdf;
use crate::error::{Error, Result};
use crate::pool::SamplePool;
use crate::rng::{derive, stream, Purpose, Rng};
use crate::value::Value;

/// Largest KS distance to the `x0 = 1` oracle accepted as input.
pub const PRECHECK_KS: f64 = 0.05;

const BLOCK: usize = 4096;
const Z_BINS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrozenLocalStats {
    pub samples: usize,
    pub precheck_ks: f64,
    pub p_edge_inf: f64,
    pub p_edge_fin: f64,
    pub p_edge_out: f64,
    pub p_vertex_inf: f64,
    pub p_vertex_fin: f64,
    pub p_vertex_out: f64,
    /// `(bin_lo, bin_hi, count)` of the join time `Z` on `[1/2, 1]`.
    pub z_bins: Vec<(f64, f64, usize)>,
    /// `count / (samples · width)` per bin.
    pub z_density: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
enum Class {
    Inf,
    Fin,
    #[default]
    Out,
}

#[derive(Clone, Debug, Default)]
struct Counts {
    edge: [usize; 3],
    vertex: [usize; 3],
    z: [usize; Z_BINS],
}

impl Counts {
    fn add(mut self, o: Counts) -> Counts {
        for i in 0..3 {
            self.edge[i] += o.edge[i];
            self.vertex[i] += o.vertex[i];
        }
        for i in 0..Z_BINS {
            self.z[i] += o.z[i];
        }
        self
    }
}

fn slot(c: Class) -> usize {
    match c {
        Class::Inf => 0,
        Class::Fin => 1,
        Class::Out => 2,
    }
}

fn draw(values: &[Value], rng: &mut Rng) -> Value {
    values[rng.random_range(0..values.len())]
}

fn min_of(vs: impl IntoIterator<Item = Value>) -> Value {
    vs.into_iter().fold(Value::Inf, Value::min)
}

/// Edge `e` with weight `u` and neighbouring join times of minimum `m`.
fn classify_edge(u: f64, m: Value) -> Class {
    if m.x() <= u {
        Class::Out
    } else if m.is_inf() {
        Class::Fin
    } else {
        Class::Inf
    }
}

fn classify_vertex(values: &[Value], rng: &mut Rng) -> Class {
    let u: [f64; 3] = std::array::from_fn(|_| rng.random());
    let ab: [(Value, Value); 3] = std::array::from_fn(|_| (draw(values, rng), draw(values, rng)));
    let y: [Value; 3] = std::array::from_fn(|k| phi(ab[k].0.min(ab[k].1), u[k]));
    let mut class = Class::Out;
    for k in 0..3 {
        let others = (0..3).filter(|&j| j != k).map(|j| y[j]);
        let m = min_of([ab[k].0, ab[k].1].into_iter().chain(others));
        match classify_edge(u[k], m) {
            Class::Inf => return Class::Inf,
            Class::Fin => class = Class::Fin,
            Class::Out => {}
        }
    }
    class
}

fn block(values: &[Value], n: usize, rng: &mut Rng) -> Counts {
    let mut c = Counts::default();
    for _ in 0..n {
        let u: f64 = rng.random();
        let m = min_of((0..4).map(|_| draw(values, rng)));
        let class = classify_edge(u, m);
        c.edge[slot(class)] += 1;
        if class == Class::Inf {
            let t = m.x();
            if (0.5..=1.0).contains(&t) {
                let b = (((t - 0.5) / 0.5 * Z_BINS as f64) as usize).min(Z_BINS - 1);
                c.z[b] += 1;
            }
        }
        c.vertex[slot(classify_vertex(values, rng))] += 1;
    }
    c
}

/// Monte Carlo edge and vertex statistics of frozen percolation on the
/// 3-regular tree, from a pool approximating the join-time fixed point.
pub fn frozen_perc_local_stats(
    fixed_pool: &SamplePool,
    n_samples: usize,
    seed: u64,
) -> Result<FrozenLocalStats> {
    if n_samples == 0 || fixed_pool.is_empty() {
        return Err(Error::Config(
            "need a nonempty pool and a positive sample count".into(),
        ));
    }
    let ks = ks_to_cdf(fixed_pool, &FrozenNu { x0: 1.0 })?;
    if ks > PRECHECK_KS {
        return Err(Error::Degenerate(format!(
            "pool is {ks:.4} in KS from the join-time law (limit {PRECHECK_KS})"
        )));
    }
    let key = derive(seed, 0xF70);
    let blocks = n_samples.div_ceil(BLOCK);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let n = BLOCK.min(n_samples - b * BLOCK);
            block(
                &fixed_pool.values,
                n,
                &mut stream(key, b as u64, Purpose::Aux),
            )
        })
        .reduce(Counts::default, Counts::add);
    let n = n_samples as f64;
    let width = 0.5 / Z_BINS as f64;
    let z_bins: Vec<(f64, f64, usize)> = (0..Z_BINS)
        .map(|i| {
            (
                0.5 + i as f64 * width,
                0.5 + (i + 1) as f64 * width,
                counts.z[i],
            )
        })
        .collect();
    let z_density = z_bins.iter().map(|b| b.2 as f64 / (n * width)).collect();
    Ok(FrozenLocalStats {
        samples: n_samples,
        precheck_ks: ks,
        p_edge_inf: counts.edge[0] as f64 / n,
        p_edge_fin: counts.edge[1] as f64 / n,
        p_edge_out: counts.edge[2] as f64 / n,
        p_vertex_inf: counts.vertex[0] as f64 / n,
        p_vertex_fin: counts.vertex[1] as f64 / n,
        p_vertex_out: counts.vertex[2] as f64 / n,
        z_bins,
        z_density,
    })
}

/// Average of `1/(4t⁴)` over `[lo, hi]`.
pub fn z_density_oracle(lo: f64, hi: f64) -> f64 {
    (lo.powi(-3) - hi.powi(-3)) / 12.0 / (hi - lo)
}
