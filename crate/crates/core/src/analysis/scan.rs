use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{iterate, IterConfig, IterationReport, StopReason};
use crate::error::{Error, Result};
use crate::pool::{Delta, SamplePool};
use crate::rde::Rde;
use crate::rng::derive;
use crate::value::Value;

/// A one-parameter family of RDEs.
pub type Family<'a> = dyn Fn(f64) -> Result<Arc<dyn Rde>> + Sync + 'a;

/// Which side of the critical value has no fixed point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    DivergesAbove,
    DivergesBelow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanVerdict {
    Converged,
    Diverged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub points: usize,
    pub bisections: usize,
    pub orientation: Orientation,
    pub pool: usize,
}

impl Default for GridConfig {
    fn default() -> GridConfig {
        GridConfig {
            points: 8,
            bisections: 5,
            orientation: Orientation::DivergesAbove,
            pool: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub param: f64,
    pub seed: u64,
    /// Verdict of the run itself.
    pub raw: ScanVerdict,
    /// Verdict after isotonic cleanup (equals `raw` for bisection points).
    pub verdict: ScanVerdict,
    pub report: IterationReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub grid: Vec<ScanPoint>,
    pub bisection: Vec<ScanPoint>,
    /// Grid verdicts changed by the cleanup.
    pub flips: usize,
    pub bracket: (f64, f64),
    pub estimate: f64,
    pub width: f64,
    pub grid_config: GridConfig,
    pub iter_config: IterConfig,
}

fn run_point(
    family: &Family<'_>,
    param: f64,
    cfg: &IterConfig,
    n: usize,
    seed: u64,
) -> Result<ScanPoint> {
    let spec = family(param)?;
    let init = SamplePool::sample(&Delta(Value::ZERO), n, seed);
    let cfg = IterConfig {
        seed,
        ..cfg.clone()
    };
    let (_, report) = iterate(spec.as_ref(), &init, &cfg)?;
    let raw = if report.stop_reason == StopReason::Diverged {
        ScanVerdict::Diverged
    } else {
        ScanVerdict::Converged
    };
    Ok(ScanPoint {
        param,
        seed,
        raw,
        verdict: raw,
        report,
    })
}

/// Threshold `t` such that points `< t` are labelled `first` and points
/// `>= t` the other verdict, with the fewest disagreements.
fn isotonic(labels: &[bool]) -> (usize, usize) {
    (0..=labels.len())
        .map(|t| {
            let miss = labels[..t].iter().filter(|&&d| d).count()
                + labels[t..].iter().filter(|&&d| !d).count();
            (t, miss)
        })
        .min_by_key(|&(_, miss)| miss)
        .expect("nonempty range")
}

/// Locate the boundary between convergence and divergence of iteration
/// from `δ₀` on `bracket`, by a grid followed by bisection.
pub fn critical_scan(
    family: &Family<'_>,
    bracket: (f64, f64),
    grid: &GridConfig,
    iter: &IterConfig,
) -> Result<ScanResult> {
    let (lo, hi) = bracket;
    if !(lo < hi) || grid.points < 2 {
        return Err(Error::Config(
            "scan needs lo < hi and at least 2 grid points".into(),
        ));
    }
    let params: Vec<f64> = (0..grid.points)
        .map(|i| lo + (hi - lo) * i as f64 / (grid.points - 1) as f64)
        .collect();
    let mut points = params
        .par_iter()
        .enumerate()
        .map(|(i, &c)| run_point(family, c, iter, grid.pool, derive(iter.seed, i as u64)))
        .collect::<Result<Vec<ScanPoint>>>()?;

    let above = grid.orientation == Orientation::DivergesAbove;
    let bad = |v: ScanVerdict| v == ScanVerdict::Diverged;
    let labels: Vec<bool> = points.iter().map(|p| bad(p.raw) == above).collect();
    let (t, flips) = isotonic(&labels);
    for (i, p) in points.iter_mut().enumerate() {
        let late = i >= t;
        p.verdict = if late == above {
            ScanVerdict::Diverged
        } else {
            ScanVerdict::Converged
        };
    }
    if t == 0 || t == points.len() {
        let raw: Vec<String> = points
            .iter()
            .map(|p| format!("{}:{:?}", p.param, p.raw))
            .collect();
        return Err(Error::Degenerate(format!(
            "no verdict change on the grid after cleanup [{}]",
            raw.join(", ")
        )));
    }
    let (mut a, mut b) = (params[t - 1], params[t]);
    let mut bisection = Vec::new();
    for k in 0..grid.bisections {
        let mid = 0.5 * (a + b);
        let p = run_point(
            family,
            mid,
            iter,
            grid.pool,
            derive(iter.seed, (grid.points + k) as u64),
        )?;
        if (p.raw == ScanVerdict::Diverged) == above {
            b = mid;
        } else {
            a = mid;
        }
        bisection.push(p);
    }
    Ok(ScanResult {
        grid: points,
        bisection,
        flips,
        bracket: (a, b),
        estimate: 0.5 * (a + b),
        width: b - a,
        grid_config: grid.clone(),
        iter_config: iter.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotonic_finds_step() {
        assert_eq!(isotonic(&[false, false, true, true]), (2, 0));
        assert_eq!(isotonic(&[false, true, false, true, true]), (1, 1));
        assert_eq!(isotonic(&[true, true]), (0, 0));
    }
}
