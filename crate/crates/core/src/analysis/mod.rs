//! Studies built on the engine: critical scans, scaling fits, moment
//! recursions, contraction certificates and fixed-point checks.

mod discount;
mod fit;
mod moments;
mod scan;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{marginal_ks, wasserstein_p};
use crate::engine::apply_t;
use crate::error::{Error, Result};
use crate::law::Law;
use crate::pool::{SamplePool, Sampler};
use crate::rde::Rde;
use crate::rng::{derive, stream, Purpose};

pub use discount::{discount_certificate, discount_norm, Certificate, NormEstimate};
pub use fit::{scaling_fit, scaling_fit_bootstrap, FitReport, ScalingModel};
pub use moments::{moment_recursion, MomentSpec, Moments};
pub use scan::{
    critical_scan, Family, GridConfig, Orientation, ScanPoint, ScanResult, ScanVerdict,
};

/// `E[(ξ + L)⁺]` with `L` drawn from `l_pool` and independent `ξ`.
pub fn speed_from_l(l_pool: &SamplePool, xi: &Law, n: usize, seed: u64) -> Result<f64> {
    if l_pool.is_empty() || n == 0 {
        return Err(Error::TooSmall(0));
    }
    let key = derive(seed, 0x28);
    let s: f64 = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(key, i, Purpose::Aux);
            let l = l_pool.values[rng.random_range(0..l_pool.len())].x();
            (xi.sample(&mut rng) + l).max(0.0)
        })
        .sum();
    Ok(s / n as f64)
}

/// `E[(maxᵢ (ξᵢ + Lᵢ))⁺]` over `arity` independent children.
pub fn speed_from_l_max(
    l_pool: &SamplePool,
    xi: &Law,
    arity: usize,
    n: usize,
    seed: u64,
) -> Result<f64> {
    if l_pool.is_empty() || n == 0 || arity == 0 {
        return Err(Error::TooSmall(0));
    }
    let key = derive(seed, 0x29);
    let s: f64 = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(key, i, Purpose::Aux);
            (0..arity)
                .map(|_| l_pool.values[rng.random_range(0..l_pool.len())].x() + xi.sample(&mut rng))
                .fold(0.0, f64::max)
        })
        .sum();
    Ok(s / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointCheck {
    pub n: usize,
    pub tol: f64,
    /// KS distance between the oracle pool and its image under `T`.
    pub ks: f64,
    /// `W₁` between the same pools, when both are finite and scalar.
    pub w1: Option<f64>,
    /// Change of the mass at `∞`.
    pub inf_mass_error: f64,
    pub pass: bool,
}

/// Apply `T` once to `n` oracle draws and compare.
pub fn verify_fixed_point(
    spec: &dyn Rde,
    oracle: &dyn Sampler,
    n: usize,
    tol: f64,
    seed: u64,
) -> Result<FixedPointCheck> {
    let pool = SamplePool::sample(oracle, n, derive(seed, 0));
    let image = apply_t(&pool, spec, derive(seed, 1))?;
    let ks = marginal_ks(&pool, &image)?;
    let w1 = if pool.is_scalar() {
        wasserstein_p(&pool, &image, 1.0).ok()
    } else {
        None
    };
    let inf_mass_error = (pool.frac_inf() - image.frac_inf()).abs();
    Ok(FixedPointCheck {
        n,
        tol,
        ks,
        w1,
        inf_mass_error,
        pass: ks < tol && inf_mass_error < tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::oracles::Logistic;
    use crate::catalog::{build_spec, closed_cdf, parse_params, FrozenNu};
    use crate::pool::Delta;
    use crate::value::Value;

    #[test]
    fn speed_trivial_cases() {
        let zero = SamplePool::sample(&Delta(Value::ZERO), 100, 1);
        assert_eq!(speed_from_l(&zero, &Law::Const(1.0), 1000, 1).unwrap(), 1.0);
        let neg = SamplePool::from_reals(&[-0.5, 0.0, -2.0]);
        assert_eq!(speed_from_l(&neg, &Law::Const(-1.0), 1000, 1).unwrap(), 0.0);
    }

    #[test]
    fn fixed_point_checks() {
        let none = parse_params::<&str>(&[]).unwrap();
        let mf = build_spec("meanfield_matching", &none).unwrap();
        assert!(closed_cdf("meanfield_matching", &none).is_ok());
        let ok = verify_fixed_point(mf.as_ref(), &Logistic, 100_000, 0.01, 3).unwrap();
        assert!(ok.pass, "{ok:?}");
        let pi2_3 = std::f64::consts::PI.powi(2) / 3.0;
        let bad = verify_fixed_point(
            mf.as_ref(),
            &Law::Normal(0.0, pi2_3.sqrt()),
            100_000,
            0.01,
            3,
        )
        .unwrap();
        assert!(!bad.pass, "{bad:?}");
        let fp = build_spec("frozen_perc", &none).unwrap();
        let fr = verify_fixed_point(fp.as_ref(), &FrozenNu { x0: 1.0 }, 100_000, 0.01, 3).unwrap();
        assert!(fr.pass && fr.inf_mass_error < 0.01, "{fr:?}");
    }
}
