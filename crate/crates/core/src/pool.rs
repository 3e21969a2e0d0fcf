use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::Law;
use crate::rng::{derive, stream, Purpose, Rng};
use crate::value::{ext_cmp, StateSpace, Value};

/// Anything that can produce a single state-space value.
pub trait Sampler: Send + Sync {
    fn sample(&self, rng: &mut Rng) -> Value;
}

impl Sampler for Law {
    fn sample(&self, rng: &mut Rng) -> Value {
        Value::Real(Law::sample(self, rng))
    }
}

/// Point mass.
#[derive(Clone, Copy, Debug)]
pub struct Delta(pub Value);

impl Sampler for Delta {
    fn sample(&self, _rng: &mut Rng) -> Value {
        self.0
    }
}

/// Uniform resampling from a fixed list of values.
pub struct Empirical(pub Vec<Value>);

impl Sampler for Empirical {
    fn sample(&self, rng: &mut Rng) -> Value {
        use rand::Rng as _;
        self.0[rng.random_range(0..self.0.len())]
    }
}

/// Empirical distribution standing for `Tⁿ(μ₀)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePool {
    pub values: Vec<Value>,
    pub generation: u64,
    pub seed_lineage: Vec<u64>,
}

impl SamplePool {
    pub fn new(values: Vec<Value>) -> SamplePool {
        SamplePool {
            values,
            generation: 0,
            seed_lineage: Vec::new(),
        }
    }

    pub fn from_reals(xs: &[f64]) -> SamplePool {
        SamplePool::new(xs.iter().map(|&x| Value::from_ext(x)).collect())
    }

    /// `n` independent draws, one counter-based stream per index.
    pub fn sample(sampler: &dyn Sampler, n: usize, seed: u64) -> SamplePool {
        let key = derive(seed, 0x1A17);
        let values = (0..n)
            .into_par_iter()
            .map(|i| sampler.sample(&mut stream(key, i as u64, Purpose::Init)))
            .collect();
        SamplePool {
            values,
            generation: 0,
            seed_lineage: vec![seed],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(1, Value::dim)
    }

    pub fn is_scalar(&self) -> bool {
        self.values.iter().all(Value::is_scalar)
    }

    pub fn reals(&self) -> Vec<f64> {
        self.values.iter().map(Value::x).collect()
    }

    pub fn coord(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|v| v.coord(i)).collect()
    }

    pub fn frac_inf(&self) -> f64 {
        self.values.iter().filter(|v| v.is_inf()).count() as f64 / self.len().max(1) as f64
    }

    pub fn check_state(&self, space: &StateSpace) -> Result<()> {
        match self.values.iter().find(|v| !space.contains(v)) {
            Some(v) => Err(Error::StateSpace {
                value: *v,
                space: space.describe(),
                generation: self.generation,
            }),
            None => Ok(()),
        }
    }

    pub fn summary(&self) -> Summary {
        Summary::of(&self.values)
    }
}

/// Pairs `(X, Y)` carried by the bivariate map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BivariatePool {
    pub x: Vec<Value>,
    pub y: Vec<Value>,
    pub generation: u64,
}

impl BivariatePool {
    pub fn diagonal(pool: &SamplePool) -> BivariatePool {
        BivariatePool {
            x: pool.values.clone(),
            y: pool.values.clone(),
            generation: pool.generation,
        }
    }

    /// Two independent resamplings of `pool`, paired index by index.
    pub fn independent(pool: &SamplePool, seed: u64) -> BivariatePool {
        use rand::Rng as _;
        let n = pool.len();
        let key = derive(seed, 0xB1);
        let pick = |purpose: Purpose| -> Vec<Value> {
            (0..n)
                .into_par_iter()
                .map(|i| pool.values[stream(key, i as u64, purpose).random_range(0..n)])
                .collect()
        };
        BivariatePool {
            x: pick(Purpose::Init),
            y: pick(Purpose::Shuffle),
            generation: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn marginal_x(&self) -> SamplePool {
        SamplePool {
            values: self.x.clone(),
            generation: self.generation,
            seed_lineage: Vec::new(),
        }
    }

    pub fn marginal_y(&self) -> SamplePool {
        SamplePool {
            values: self.y.clone(),
            generation: self.generation,
            seed_lineage: Vec::new(),
        }
    }
}

/// Summary statistics of coordinate 0 over finite values, plus the exact
/// fraction at `+∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub median: f64,
    /// Quantiles at levels 0.1, 0.2, …, 0.9 (extended reals; `∞` as `f64::INFINITY`).
    pub quantiles: Vec<f64>,
    pub frac_inf: f64,
    pub min: f64,
    pub max: f64,
    /// Means of every coordinate for vector pools.
    pub coord_means: Vec<f64>,
}

impl Summary {
    pub fn of(values: &[Value]) -> Summary {
        let n = values.len();
        let mut sorted: Vec<Value> = values
            .iter()
            .map(|v| {
                if v.is_scalar() {
                    *v
                } else {
                    Value::Real(v.coord(0))
                }
            })
            .collect();
        sorted.par_sort_unstable_by(ext_cmp);
        let finite: Vec<f64> = sorted.iter().filter_map(Value::finite).collect();
        let nf = finite.len();
        let mean = if nf > 0 {
            finite.iter().sum::<f64>() / nf as f64
        } else {
            f64::NAN
        };
        let variance = if nf > 1 {
            finite.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1) as f64
        } else {
            0.0
        };
        let q = |level: f64| -> f64 {
            if n == 0 {
                return f64::NAN;
            }
            let idx = ((level * n as f64).ceil() as usize).clamp(1, n) - 1;
            sorted[idx].x()
        };
        let dim = values.first().map_or(1, Value::dim);
        let coord_means = if dim > 1 {
            (0..dim)
                .map(|c| values.iter().map(|v| v.coord(c)).sum::<f64>() / n.max(1) as f64)
                .collect()
        } else {
            Vec::new()
        };
        Summary {
            n,
            mean,
            variance,
            median: q(0.5),
            quantiles: (1..10).map(|k| q(k as f64 / 10.0)).collect(),
            frac_inf: (n - nf) as f64 / n.max(1) as f64,
            min: finite.first().copied().unwrap_or(f64::NAN),
            max: finite.last().copied().unwrap_or(f64::NAN),
            coord_means,
        }
    }

    /// Stored quantile nearest to `level` (median at 0.5).
    pub fn quantile(&self, level: f64) -> f64 {
        if (level - 0.5).abs() < 1e-12 || self.quantiles.is_empty() {
            return self.median;
        }
        let k = ((level * 10.0).round() as usize).clamp(1, 9);
        self.quantiles[k - 1]
    }

    pub fn std(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Histogram of the finite values plus the count at `+∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub inf_count: u64,
}

impl Histogram {
    /// Freedman–Diaconis bin width over the finite values.
    pub fn freedman_diaconis(values: &[f64]) -> Histogram {
        let mut finite: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        let inf_count = (values.len() - finite.len()) as u64;
        if finite.is_empty() {
            return Histogram {
                edges: Vec::new(),
                counts: Vec::new(),
                inf_count,
            };
        }
        finite.sort_unstable_by(f64::total_cmp);
        let n = finite.len();
        let (lo, hi) = (finite[0], finite[n - 1]);
        let q = |p: f64| finite[((p * (n - 1) as f64).round() as usize).min(n - 1)];
        let iqr = q(0.75) - q(0.25);
        let bins = if hi <= lo {
            1
        } else {
            let width = 2.0 * iqr / (n as f64).cbrt();
            if width > 0.0 {
                (((hi - lo) / width).ceil() as usize).clamp(1, 10_000)
            } else {
                ((n as f64).sqrt().ceil() as usize).clamp(1, 10_000)
            }
        };
        let span = if hi > lo { hi - lo } else { 1.0 };
        let edges: Vec<f64> = (0..=bins)
            .map(|k| lo + span * k as f64 / bins as f64)
            .collect();
        Histogram::with_edges_sorted(&finite, edges, inf_count)
    }

    /// Histogram over given edges; values outside are dropped.
    pub fn with_edges(values: &[f64], edges: Vec<f64>) -> Histogram {
        let mut finite: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        let inf_count = (values.len() - finite.len()) as u64;
        finite.sort_unstable_by(f64::total_cmp);
        Histogram::with_edges_sorted(&finite, edges, inf_count)
    }

    fn with_edges_sorted(sorted: &[f64], edges: Vec<f64>, inf_count: u64) -> Histogram {
        let bins = edges.len().saturating_sub(1);
        let mut counts = vec![0u64; bins];
        for &x in sorted {
            if bins == 0 || x < edges[0] || x > edges[bins] {
                continue;
            }
            let k = edges
                .partition_point(|e| *e <= x)
                .saturating_sub(1)
                .min(bins - 1);
            counts[k] += 1;
        }
        Histogram {
            edges,
            counts,
            inf_count,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", self.edges[k], self.edges[k + 1], c));
        }
        s.push_str(&format!("inf,inf,{}\n", self.inf_count));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_counts_inf_exactly() {
        let p = SamplePool::new(vec![
            Value::Real(1.0),
            Value::Inf,
            Value::Real(3.0),
            Value::Inf,
        ]);
        let s = p.summary();
        assert_eq!(s.frac_inf, 0.5);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.median, 3.0);
        assert_eq!(s.quantiles[8], f64::INFINITY);
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = SamplePool::sample(&Law::Exp(1.0), 1000, 9);
        let b = SamplePool::sample(&Law::Exp(1.0), 1000, 9);
        assert_eq!(a, b);
        assert_ne!(a, SamplePool::sample(&Law::Exp(1.0), 1000, 10));
    }

    #[test]
    fn histogram_totals() {
        let xs: Vec<f64> = (0..1000)
            .map(|i| (i as f64 * 0.37).sin())
            .chain([f64::INFINITY; 3])
            .collect();
        let h = Histogram::freedman_diaconis(&xs);
        assert_eq!(h.counts.iter().sum::<u64>(), 1000);
        assert_eq!(h.inf_count, 3);
        assert!(h.to_csv().ends_with("inf,inf,3\n"));
        let c = Histogram::freedman_diaconis(&[2.0; 10]);
        assert_eq!(c.counts, vec![10]);
    }

    #[test]
    fn independent_bipool_has_pool_marginals() {
        let p = SamplePool::sample(&Law::Uniform(0.0, 1.0), 500, 1);
        let bp = BivariatePool::independent(&p, 2);
        assert!(bp.x.iter().all(|v| p.values.contains(v)));
        assert_ne!(bp.x, bp.y);
    }
}
