//! Root finding, quadrature and one-dimensional minimization.

use argmin::core::{CostFunction, Executor};
use argmin::solver::brent::BrentOpt;
use roots::{find_root_brent, SimpleConvergency};

use crate::error::{Error, Result};

/// Root of `f` on `[lo, hi]`, which must bracket a sign change.
pub fn solve_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo * fhi < 0.0) {
        return Err(Error::NoSignChange(lo, hi));
    }
    let mut conv = SimpleConvergency {
        eps: tol,
        max_iter: 500,
    };
    find_root_brent(lo, hi, &f, &mut conv).map_err(|e| Error::Numeric(format!("{e:?}")))
}

/// `∫_a^b f` by double-exponential quadrature to absolute error `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    quadrature::double_exponential::integrate(f, a, b, tol).integral
}

/// `∫_a^∞ f` via the substitution `x = a + t / (1 - t)`.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> f64 {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - t;
        let v = f(a + t / s) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, tol)
}

/// `∫_a^b f` to relative accuracy `rel`, refining until two successive
/// estimates agree.
pub fn integrate_rel<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel: f64) -> f64 {
    let mut tol = 1e-3;
    let mut prev = integrate(&f, a, b, tol);
    loop {
        tol *= 1e-2;
        let cur = integrate(&f, a, b, tol);
        if (cur - prev).abs() <= rel * cur.abs().max(1e-300) || tol < 1e-15 {
            return cur;
        }
        prev = cur;
    }
}

struct Cost<F>(F);

impl<F: Fn(f64) -> f64> CostFunction for Cost<F> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, p: &f64) -> std::result::Result<f64, argmin::core::Error> {
        Ok((self.0)(*p))
    }
}

/// Minimizer and minimum of `f` on `[lo, hi]` (Brent's method).
pub fn minimize<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let res = Executor::new(Cost(f), BrentOpt::new(lo, hi))
        .configure(|s| s.max_iters(500))
        .run()
        .map_err(|e| Error::Numeric(e.to_string()))?;
    let x = res
        .state
        .best_param
        .ok_or_else(|| Error::Numeric("no minimizer".into()))?;
    Ok((x, res.state.best_cost))
}
