//! Bootstrap Monte Carlo for the maps `T` and `T⁽²⁾`, iteration drivers and
//! the endogeny diagnostic.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{diagonal_gap, marginal_ks, wasserstein_p, Gap};
use crate::error::{Error, Result};
use crate::noise::NoiseDraw;
use crate::pool::{BivariatePool, SamplePool, Summary};
use crate::rde::{Children, EvalCx, Rde};
use crate::rng::{derive, generation_key, stream, Purpose, Rng};
use crate::value::Value;

/// Children drawn uniformly with replacement from a pool, lazily and in order.
pub struct PoolChildren<'a> {
    values: &'a [Value],
    rng: Rng,
    picked: Vec<usize>,
}

impl<'a> PoolChildren<'a> {
    pub fn new(values: &'a [Value], key: u64, index: u64) -> PoolChildren<'a> {
        PoolChildren {
            values,
            rng: stream(key, index, Purpose::Indices),
            picked: Vec::new(),
        }
    }
}

impl Children for PoolChildren<'_> {
    fn child(&mut self, j: usize) -> Value {
        while self.picked.len() <= j {
            self.picked
                .push(self.rng.random_range(0..self.values.len()));
        }
        self.values[self.picked[j]]
    }
}

/// Options for a single evaluation.
#[derive(Clone, Debug)]
pub struct EvalOpts {
    pub bound: Option<Vec<f64>>,
    pub horizon_factor: usize,
}

/// Evaluate output sample `index` of one `T` step under key `key`.
pub fn eval_sample(
    spec: &dyn Rde,
    values: &[Value],
    key: u64,
    index: u64,
    opts: &EvalOpts,
) -> (Value, bool) {
    let mut nd = NoiseDraw::new(key, index);
    spec.draw(&mut nd);
    let mut kids = PoolChildren::new(values, key, index);
    let mut cx = EvalCx::new(opts.bound.clone());
    cx.horizon_factor = opts.horizon_factor;
    let v = spec.eval(&mut nd, &mut kids, &mut cx);
    (v, cx.capped)
}

/// Per-step bookkeeping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    /// Evaluations stopped at the hard cap without a truncation certificate.
    pub capped: usize,
}

fn check_nonempty(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::TooSmall(n));
    }
    Ok(())
}

fn check_outputs(spec: &dyn Rde, out: &[Value], generation: u64) -> Result<()> {
    let space = spec.state();
    match out.iter().find(|v| !space.contains(v)) {
        Some(v) => Err(Error::StateSpace {
            value: *v,
            space: space.describe(),
            generation,
        }),
        None => Ok(()),
    }
}

/// One application of `T` with cap statistics.
pub fn apply_t_stats(
    pool: &SamplePool,
    spec: &dyn Rde,
    seed: u64,
) -> Result<(SamplePool, StepStats)> {
    check_nonempty(pool.len())?;
    let key = generation_key(seed, pool.generation);
    let opts = EvalOpts {
        bound: spec.support_bound(&pool.values),
        horizon_factor: 1,
    };
    let out: Vec<(Value, bool)> = (0..pool.len() as u64)
        .into_par_iter()
        .map(|i| eval_sample(spec, &pool.values, key, i, &opts))
        .collect();
    let capped = out.iter().filter(|o| o.1).count();
    let values: Vec<Value> = out.into_iter().map(|o| o.0).collect();
    check_outputs(spec, &values, pool.generation + 1)?;
    let mut seed_lineage = pool.seed_lineage.clone();
    seed_lineage.push(seed);
    Ok((
        SamplePool {
            values,
            generation: pool.generation + 1,
            seed_lineage,
        },
        StepStats { capped },
    ))
}

/// One application of `T`: each output is `g` of fresh noise and children
/// drawn uniformly with replacement from `pool`.
pub fn apply_t(pool: &SamplePool, spec: &dyn Rde, seed: u64) -> Result<SamplePool> {
    apply_t_stats(pool, spec, seed).map(|r| r.0)
}

/// One application of `T⁽²⁾`: both coordinates share the noise and the child
/// indices of each output pair.
pub fn apply_t2(bp: &BivariatePool, spec: &dyn Rde, seed: u64) -> Result<BivariatePool> {
    check_nonempty(bp.len())?;
    if bp.x.len() != bp.y.len() {
        return Err(Error::SizeMismatch(bp.x.len(), bp.y.len()));
    }
    let key = generation_key(seed, bp.generation);
    let ox = EvalOpts {
        bound: spec.support_bound(&bp.x),
        horizon_factor: 1,
    };
    let oy = EvalOpts {
        bound: spec.support_bound(&bp.y),
        horizon_factor: 1,
    };
    let (x, y): (Vec<Value>, Vec<Value>) = (0..bp.len() as u64)
        .into_par_iter()
        .map(|i| {
            (
                eval_sample(spec, &bp.x, key, i, &ox).0,
                eval_sample(spec, &bp.y, key, i, &oy).0,
            )
        })
        .unzip();
    check_outputs(spec, &x, bp.generation + 1)?;
    check_outputs(spec, &y, bp.generation + 1)?;
    Ok(BivariatePool {
        x,
        y,
        generation: bp.generation + 1,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "p", rename_all = "snake_case")]
pub enum Distance {
    Ks,
    Wasserstein(f64),
}

impl Distance {
    pub fn between(&self, a: &SamplePool, b: &SamplePool) -> Result<f64> {
        match *self {
            Distance::Ks => marginal_ks(a, b),
            Distance::Wasserstein(p) => wasserstein_p(a, b, p),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub distance: Distance,
    /// Divergence threshold in units of the current pool standard deviation.
    pub divergence_threshold: f64,
    /// Number of consecutive generations the median must rise.
    pub window: usize,
    /// Generations always run before a convergence stop.
    pub min_iters: usize,
    /// Quantile level tracked by the divergence test.
    #[serde(default = "half")]
    pub divergence_level: f64,
    /// Compare each pool with the one `period` generations back.
    #[serde(default = "one")]
    pub period: usize,
    pub seed: u64,
}

fn one() -> usize {
    1
}

fn half() -> f64 {
    0.5
}

impl Default for IterConfig {
    fn default() -> IterConfig {
        IterConfig {
            max_iters: 200,
            tol: 0.01,
            distance: Distance::Ks,
            divergence_threshold: 1.0,
            window: 10,
            min_iters: 1,
            divergence_level: 0.5,
            period: 1,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIters,
    Diverged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenRecord {
    pub generation: u64,
    pub distance: f64,
    pub capped: usize,
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub records: Vec<GenRecord>,
    pub stop_reason: StopReason,
    pub capped_total: usize,
}

/// Divergence test on a median track (index = generation - 1).
///
/// Fires when the median rose in each of the last `window` generations by a
/// total of more than `threshold * std`, or when it exceeds 10⁶ times the
/// generation-1 scale.
pub fn diverging(
    medians: &[f64],
    std_now: f64,
    gen1_scale: f64,
    window: usize,
    threshold: f64,
) -> bool {
    let n = medians.len();
    let last = medians[n - 1];
    if !last.is_finite() {
        return false;
    }
    if gen1_scale > 0.0 && last.abs() > 1e6 * gen1_scale {
        return true;
    }
    if n <= window {
        return false;
    }
    let w = &medians[n - 1 - window..];
    let rising = w
        .windows(2)
        .all(|p| p[1].is_finite() && p[0].is_finite() && p[1] > p[0]);
    rising && last - w[0] > threshold * std_now
}

/// Iterate `T` from `init` until successive pools are within `tol`, the
/// budget is exhausted, or divergence is detected.
pub fn iterate(
    spec: &dyn Rde,
    init: &SamplePool,
    cfg: &IterConfig,
) -> Result<(SamplePool, IterationReport)> {
    if !(cfg.tol > 0.0) {
        return Err(Error::Config("tol must be positive".into()));
    }
    init.check_state(&spec.state())?;
    let mut pool = init.clone();
    let mut records = Vec::new();
    let mut medians = Vec::new();
    let mut gen1_scale = 0.0;
    let mut capped_total = 0;
    let mut stop_reason = StopReason::MaxIters;
    let period = cfg.period.max(1);
    let mut back: std::collections::VecDeque<SamplePool> = std::collections::VecDeque::new();
    for it in 0..cfg.max_iters {
        let (next, stats) = apply_t_stats(&pool, spec, cfg.seed)?;
        back.push_back(pool.clone());
        if back.len() > period {
            back.pop_front();
        }
        let distance = if back.len() == period {
            cfg.distance.between(&back[0], &next).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        let summary = next.summary();
        capped_total += stats.capped;
        let level = summary.quantile(cfg.divergence_level);
        medians.push(level);
        if it == 0 {
            gen1_scale = level.abs().max(summary.std());
            if !gen1_scale.is_finite() {
                gen1_scale = 0.0;
            }
        }
        let diverged = diverging(
            &medians,
            summary.std(),
            gen1_scale,
            cfg.window,
            cfg.divergence_threshold,
        );
        records.push(GenRecord {
            generation: next.generation,
            distance,
            capped: stats.capped,
            summary,
        });
        pool = next;
        if diverged {
            stop_reason = StopReason::Diverged;
            break;
        }
        if it + 1 >= cfg.min_iters && distance < cfg.tol {
            stop_reason = StopReason::Converged;
            break;
        }
    }
    Ok((
        pool,
        IterationReport {
            records,
            stop_reason,
            capped_total,
        },
    ))
}

/// Continue iterating from `pool` for `generations` steps and pool
/// `per_snapshot` values from every `thin`-th generation.
///
/// Averaging over generations damps the drift of the empirical law that
/// resampling causes when relaxation is slow.
pub fn time_average(
    spec: &dyn Rde,
    pool: &SamplePool,
    generations: usize,
    thin: usize,
    per_snapshot: usize,
    seed: u64,
) -> Result<(SamplePool, SamplePool)> {
    let thin = thin.max(1);
    let mut cur = pool.clone();
    let mut kept = Vec::new();
    for g in 1..=generations {
        cur = apply_t(&cur, spec, seed)?;
        if g % thin == 0 {
            let mut rng = stream(derive(seed, cur.generation), 0, Purpose::Aux);
            kept.extend((0..per_snapshot).map(|_| cur.values[rng.random_range(0..cur.len())]));
        }
    }
    Ok((SamplePool::new(kept), cur))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndogenyConfig {
    pub max_iters: usize,
    /// Normalized gap below which the trend is called endogenous.
    pub gap_tol: f64,
    /// Generations over which a plateau is assessed.
    pub plateau_window: usize,
    /// Largest relative decline between the two halves of the window for a plateau.
    pub plateau_rel: f64,
    /// Exponent of the gap statistic.
    pub p: f64,
    pub seed: u64,
}

impl Default for EndogenyConfig {
    fn default() -> EndogenyConfig {
        EndogenyConfig {
            max_iters: 200,
            gap_tol: 0.05,
            plateau_window: 20,
            plateau_rel: 0.05,
            p: 1.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "endogenous-trend")]
    Endogenous,
    #[serde(rename = "non-endogenous-trend")]
    NonEndogenous,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Endogenous => "endogenous-trend",
            Verdict::NonEndogenous => "non-endogenous-trend",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub generation: u64,
    pub gap: Gap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndogenyReport {
    pub records: Vec<GapRecord>,
    pub verdict: Verdict,
}

impl EndogenyReport {
    pub fn final_gap(&self) -> Option<Gap> {
        self.records.last().map(|r| r.gap)
    }
}

/// Iterate `T⁽²⁾` from `μ ⊗ μ` (two independent resamplings of `fixed`) and
/// track the normalized diagonal gap.
pub fn endogeny_iterate(
    spec: &dyn Rde,
    fixed: &SamplePool,
    cfg: &EndogenyConfig,
) -> Result<EndogenyReport> {
    let mut bp = BivariatePool::independent(fixed, cfg.seed);
    let embed = |v: &Value| spec.embed(v);
    let mut records = Vec::new();
    for _ in 0..cfg.max_iters {
        bp = apply_t2(&bp, spec, cfg.seed)?;
        let gap = diagonal_gap(&bp, cfg.p, &embed, cfg.seed)?;
        records.push(GapRecord {
            generation: bp.generation,
            gap,
        });
        if gap.normalized < cfg.gap_tol {
            return Ok(EndogenyReport {
                records,
                verdict: Verdict::Endogenous,
            });
        }
    }
    let w = cfg.plateau_window;
    let verdict = if w >= 2 && records.len() >= w {
        let tail: Vec<f64> = records[records.len() - w..]
            .iter()
            .map(|r| r.gap.normalized)
            .collect();
        let (a, b) = tail.split_at(w / 2);
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let (early, late) = (mean(a), mean(b));
        let floor = tail.iter().copied().fold(f64::INFINITY, f64::min);
        if floor > cfg.gap_tol && (early - late) / early < cfg.plateau_rel {
            Verdict::NonEndogenous
        } else {
            Verdict::Inconclusive
        }
    } else {
        Verdict::Inconclusive
    };
    Ok(EndogenyReport { records, verdict })
}
