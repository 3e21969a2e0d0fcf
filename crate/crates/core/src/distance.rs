//! Distances between pools and diagnostics on pools.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pool::{BivariatePool, SamplePool};
use crate::rng::{derive, stream, Purpose};
use crate::value::{ext_cmp, Value};

/// A distribution function on the extended reals.
pub trait Cdf: Send + Sync {
    /// `P(X <= x)` for finite `x`.
    fn cdf(&self, x: f64) -> f64;
    /// `P(X < x)`; equals `cdf` for continuous laws.
    fn cdf_left(&self, x: f64) -> f64 {
        self.cdf(x)
    }
    /// `P(X = +∞)`.
    fn inf_mass(&self) -> f64 {
        0.0
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> Cdf for F {
    fn cdf(&self, x: f64) -> f64 {
        self(x)
    }
}

fn sorted_scalar(p: &SamplePool) -> Result<Vec<Value>> {
    if !p.is_scalar() {
        return Err(Error::VectorPool);
    }
    let mut v = p.values.clone();
    v.sort_unstable_by(ext_cmp);
    Ok(v)
}

/// Two-sample Kolmogorov–Smirnov distance; `+∞` compares above every real.
pub fn ks_distance(a: &SamplePool, b: &SamplePool) -> Result<f64> {
    let (sa, sb) = (sorted_scalar(a)?, sorted_scalar(b)?);
    if sa.is_empty() || sb.is_empty() {
        return Err(Error::TooSmall(0));
    }
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < sa.len() && j < sb.len() {
        let v = if ext_cmp(&sa[i], &sb[j]).is_le() {
            sa[i]
        } else {
            sb[j]
        };
        while i < sa.len() && ext_cmp(&sa[i], &v).is_eq() {
            i += 1;
        }
        while j < sb.len() && ext_cmp(&sb[j], &v).is_eq() {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Maximum over coordinates of the marginal KS distances.
pub fn marginal_ks(a: &SamplePool, b: &SamplePool) -> Result<f64> {
    if a.is_scalar() && b.is_scalar() {
        return ks_distance(a, b);
    }
    if a.dim() != b.dim() {
        return Err(Error::Config("pools of different dimension".into()));
    }
    (0..a.dim()).try_fold(0.0f64, |m, c| {
        let pa = SamplePool::from_reals(&a.coord(c));
        let pb = SamplePool::from_reals(&b.coord(c));
        Ok(m.max(ks_distance(&pa, &pb)?))
    })
}

/// One-sample KS distance of a scalar pool to a distribution function,
/// using left limits at atoms and treating `+∞` as its own atom.
pub fn ks_to_cdf(pool: &SamplePool, f: &dyn Cdf) -> Result<f64> {
    let s = sorted_scalar(pool)?;
    let n = s.len() as f64;
    if s.is_empty() {
        return Err(Error::TooSmall(0));
    }
    let mut d = 0.0f64;
    let mut i = 0usize;
    while i < s.len() {
        let Value::Real(x) = s[i] else { break };
        let below = i as f64 / n;
        let mut j = i;
        while j < s.len() && s[j] == s[i] {
            j += 1;
        }
        let at = j as f64 / n;
        d = d
            .max((f.cdf_left(x) - below).abs())
            .max((f.cdf(x) - at).abs());
        i = j;
    }
    let finite_frac = i as f64 / n;
    d = d.max(((1.0 - f.inf_mass()) - finite_frac).abs());
    Ok(d)
}

/// Total-variation distance of an integer-valued pool to a pmf.
pub fn tv_discrete(
    pool: &SamplePool,
    pmf: &dyn Fn(i64) -> f64,
    support: std::ops::RangeInclusive<i64>,
) -> f64 {
    let n = pool.len() as f64;
    let mut total = 0.0;
    let mut covered = 0.0;
    for k in support {
        let c = pool
            .values
            .iter()
            .filter(|v| v.finite() == Some(k as f64))
            .count() as f64
            / n;
        total += (c - pmf(k)).abs();
        covered += c;
    }
    0.5 * (total + (1.0 - covered))
}

/// `W_p` between equal-size finite scalar pools via sorted coupling.
pub fn wasserstein_p(a: &SamplePool, b: &SamplePool, p: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::Config("wasserstein order must be >= 1".into()));
    }
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(a.len(), b.len()));
    }
    let (sa, sb) = (sorted_scalar(a)?, sorted_scalar(b)?);
    if sa.iter().chain(&sb).any(Value::is_inf) {
        return Err(Error::InfiniteValues);
    }
    if sa.is_empty() {
        return Ok(0.0);
    }
    let s: f64 = sa
        .iter()
        .zip(&sb)
        .map(|(x, y)| (x.x() - y.x()).abs().powf(p))
        .sum();
    Ok((s / sa.len() as f64).powf(1.0 / p))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub raw: f64,
    pub normalized: f64,
    pub degenerate: bool,
}

/// Distance of a bivariate pool from the diagonal, normalized by the same
/// statistic on an independently shuffled pairing.
pub fn diagonal_gap(
    bp: &BivariatePool,
    p: f64,
    embed: &dyn Fn(&Value) -> f64,
    seed: u64,
) -> Result<Gap> {
    let x: Vec<f64> = bp.x.iter().map(embed).collect();
    let y: Vec<f64> = bp.y.iter().map(embed).collect();
    if x.iter().chain(&y).any(|v| !v.is_finite()) {
        return Err(Error::InfiniteValues);
    }
    if x.is_empty() {
        return Err(Error::TooSmall(0));
    }
    let stat = |ys: &[f64]| -> f64 {
        let s: f64 = x.iter().zip(ys).map(|(a, b)| (a - b).abs().powf(p)).sum();
        (s / x.len() as f64).powf(1.0 / p)
    };
    let raw = stat(&y);
    let mut shuffled = y.clone();
    shuffled.shuffle(&mut stream(
        derive(seed, bp.generation),
        0,
        Purpose::Shuffle,
    ));
    let denom = stat(&shuffled);
    if denom <= 0.0 {
        return Ok(Gap {
            raw,
            normalized: if raw == 0.0 { 0.0 } else { f64::INFINITY },
            degenerate: true,
        });
    }
    Ok(Gap {
        raw,
        normalized: raw / denom,
        degenerate: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub alpha: f64,
    pub r2: f64,
}

/// Exponential tail rate from the top `fit_fraction` of a scalar pool.
pub fn tail_exponent(pool: &SamplePool, fit_fraction: f64) -> Result<TailFit> {
    let mut xs: Vec<f64> = pool.values.iter().filter_map(Value::finite).collect();
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len();
    let m = ((fit_fraction * n as f64) as usize).min(n);
    if m < 3 {
        return Err(Error::Degenerate("too few tail samples".into()));
    }
    let tail = &xs[n - m..];
    if tail[0] == tail[m - 1] {
        return Err(Error::Degenerate("no spread in the tail".into()));
    }
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let rank = n - m + k;
            (x, ((n - rank) as f64 / (n + 1) as f64).ln())
        })
        .collect();
    let (slope, _, r2) = least_squares(&pts);
    Ok(TailFit { alpha: -slope, r2 })
}

/// Ordinary least squares `y = a x + b`; returns `(a, b, r²)`.
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let r2 = if syy > 0.0 {
        (sxy * sxy) / (sxx * syy)
    } else {
        1.0
    };
    (a, b, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::Law;

    fn pool(xs: &[f64]) -> SamplePool {
        SamplePool::from_reals(xs)
    }

    #[test]
    fn ks_trivial_cases() {
        let a = pool(&[0.0, 0.0]);
        assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_distance(&a, &pool(&[1.0, 1.0])).unwrap(), 1.0);
        let b = pool(&[0.0, f64::INFINITY]);
        assert_eq!(ks_distance(&a, &b).unwrap(), 0.5);
        let v = SamplePool::new(vec![Value::Vec2([0.0, 1.0])]);
        assert!(matches!(ks_distance(&v, &v), Err(Error::VectorPool)));
    }

    #[test]
    fn wasserstein_trivial_cases() {
        assert_eq!(
            wasserstein_p(&pool(&[0.0, 1.0]), &pool(&[2.0, 3.0]), 1.0).unwrap(),
            2.0
        );
        let w = wasserstein_p(&pool(&[0.0, 10.0]), &pool(&[0.0, 0.0]), 2.0).unwrap();
        assert!((w - 50f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            wasserstein_p(&pool(&[0.0]), &pool(&[0.0, 1.0]), 1.0),
            Err(Error::SizeMismatch(1, 2))
        ));
        assert!(matches!(
            wasserstein_p(&pool(&[f64::INFINITY]), &pool(&[0.0]), 1.0),
            Err(Error::InfiniteValues)
        ));
    }

    #[test]
    fn ks_to_cdf_handles_atoms() {
        let p = pool(&[0.0, 0.0, 1.0, f64::INFINITY]);
        struct Atoms;
        impl Cdf for Atoms {
            fn cdf(&self, x: f64) -> f64 {
                if x < 0.0 {
                    0.0
                } else if x < 1.0 {
                    0.5
                } else {
                    0.75
                }
            }
            fn cdf_left(&self, x: f64) -> f64 {
                if x <= 0.0 {
                    0.0
                } else if x <= 1.0 {
                    0.5
                } else {
                    0.75
                }
            }
            fn inf_mass(&self) -> f64 {
                0.25
            }
        }
        assert!(ks_to_cdf(&p, &Atoms).unwrap() < 1e-12);
    }

    #[test]
    fn tail_rate_of_exponential() {
        let p = SamplePool::sample(&Law::Exp(0.5), 100_000, 4);
        let fit = tail_exponent(&p, 0.1).unwrap();
        assert!((fit.alpha - 2.0).abs() < 0.2, "{fit:?}");
        assert!(tail_exponent(&pool(&[1.0; 100]), 0.5).is_err());
    }

    #[test]
    fn gap_of_diagonal_is_zero() {
        let p = SamplePool::sample(&Law::Exp(1.0), 1000, 1);
        let g = diagonal_gap(&BivariatePool::diagonal(&p), 1.0, &|v| v.x(), 3).unwrap();
        assert_eq!(g.raw, 0.0);
        assert_eq!(g.normalized, 0.0);
        let ind = BivariatePool::independent(&p, 5);
        let g = diagonal_gap(&ind, 1.0, &|v| v.x(), 3).unwrap();
        assert!((g.normalized - 1.0).abs() < 0.1);
    }
}
