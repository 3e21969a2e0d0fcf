use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::distance::least_squares;
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingModel {
    /// `y = A x^α`, fitted in log–log coordinates.
    Power,
    /// `y = A exp(-c / √x)`, fitted as `log y` against `1/√x`.
    ExpInverseSqrt,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: ScalingModel,
    /// `α` for the power model, `c` for the exponential one.
    pub exponent: f64,
    /// `log A`.
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
    /// Percentile bootstrap 95% interval of the exponent, when requested.
    pub ci: Option<(f64, f64)>,
}

fn transform(points: &[(f64, f64)], model: ScalingModel) -> Result<Vec<(f64, f64)>> {
    if points.len() < 4 {
        return Err(Error::Config(format!(
            "scaling fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    points
        .iter()
        .map(|&(x, y)| {
            if !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite() {
                return Err(Error::Degenerate(format!("nonpositive point ({x}, {y})")));
            }
            Ok(match model {
                ScalingModel::Power => (x.ln(), y.ln()),
                ScalingModel::ExpInverseSqrt => (x.sqrt().recip(), y.ln()),
            })
        })
        .collect()
}

fn fit_transformed(t: &[(f64, f64)], model: ScalingModel) -> (f64, f64, f64) {
    let (slope, icpt, r2) = least_squares(t);
    let exponent = match model {
        ScalingModel::Power => slope,
        ScalingModel::ExpInverseSqrt => -slope,
    };
    (exponent, icpt, r2)
}

/// Least-squares fit of a scaling law to `(parameter gap, observable)` points.
pub fn scaling_fit(points: &[(f64, f64)], model: ScalingModel) -> Result<FitReport> {
    let t = transform(points, model)?;
    let (exponent, intercept, r2) = fit_transformed(&t, model);
    Ok(FitReport {
        model,
        exponent,
        intercept,
        r2,
        points: points.len(),
        ci: None,
    })
}

/// [`scaling_fit`] with a percentile bootstrap interval over resampled points.
pub fn scaling_fit_bootstrap(
    points: &[(f64, f64)],
    model: ScalingModel,
    reps: usize,
    seed: u64,
) -> Result<FitReport> {
    let t = transform(points, model)?;
    let mut rep = scaling_fit(points, model)?;
    let mut rng = stream(seed, 0, Purpose::Aux);
    let mut ex: Vec<f64> = (0..reps)
        .filter_map(|_| {
            let s: Vec<(f64, f64)> = (0..t.len())
                .map(|_| t[rng.random_range(0..t.len())])
                .collect();
            let e = fit_transformed(&s, model).0;
            e.is_finite().then_some(e)
        })
        .collect();
    if !ex.is_empty() {
        ex.sort_by(f64::total_cmp);
        let q = |p: f64| ex[((ex.len() - 1) as f64 * p).round() as usize];
        rep.ci = Some((q(0.025), q(0.975)));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_exponent_is_exact() {
        let pts: Vec<(f64, f64)> = [0.1, 0.2, 0.5, 1.0, 2.0]
            .iter()
            .map(|&x: &f64| (x, x.powi(3)))
            .collect();
        let f = scaling_fit(&pts, ScalingModel::Power).unwrap();
        assert!((f.exponent - 3.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exp_inverse_sqrt_rate() {
        let pts: Vec<(f64, f64)> = [0.01, 0.02, 0.05, 0.1]
            .iter()
            .map(|&x: &f64| (x, 2.0 * (-0.7 / x.sqrt()).exp()))
            .collect();
        let f = scaling_fit(&pts, ScalingModel::ExpInverseSqrt).unwrap();
        assert!((f.exponent - 0.7).abs() < 1e-10);
        assert!((f.intercept - 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(scaling_fit(&[(1.0, 1.0); 3], ScalingModel::Power).is_err());
        assert!(scaling_fit(
            &[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0), (4.0, 1.0)],
            ScalingModel::Power
        )
        .is_err());
    }
}
