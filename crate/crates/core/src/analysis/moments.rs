use serde::{Deserialize, Serialize};

use crate::catalog::{quicksort_c, ParamMap, Registry};
use crate::error::{Error, Result};
use crate::law::Offspring;
use crate::numeric::integrate_rel;

/// Joint moments of `(ξ₀, ξ₁, ξ₂, …)` for `X = ξ₀ + Σᵢ ξᵢ Xᵢ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    pub e_xi0: f64,
    pub e_xi0_sq: f64,
    /// `Σ E ξᵢ`
    pub sum_e_xi: f64,
    /// `Σ E ξᵢ²`
    pub sum_e_xi_sq: f64,
    /// `Σ_{i≠j} E ξᵢ ξⱼ`
    pub sum_cross: f64,
    /// `Σ E ξ₀ ξᵢ`
    pub sum_e_xi0_xi: f64,
    /// Mean to use when `Σ E ξᵢ = 1` leaves it undetermined.
    pub mean_input: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
}

impl MomentSpec {
    /// `X = U X₁ + (1 − U) X₂ + C(U)` with the centred solution.
    pub fn quicksort() -> MomentSpec {
        let e_c2 = integrate_rel(|u| quicksort_c(u).powi(2), 0.0, 1.0, 1e-10);
        let e_uc = integrate_rel(|u| u * quicksort_c(u), 0.0, 1.0, 1e-10);
        MomentSpec {
            e_xi0: 0.0,
            e_xi0_sq: e_c2,
            sum_e_xi: 1.0,
            sum_e_xi_sq: 2.0 / 3.0,
            sum_cross: 2.0 * (1.0 / 2.0 - 1.0 / 3.0),
            sum_e_xi0_xi: 2.0 * e_uc,
            mean_input: Some(0.0),
        }
    }

    /// Total progeny `X = 1 + Σ_{i ≤ N} Xᵢ`.
    pub fn gw_progeny(n: Offspring) -> MomentSpec {
        let m = n.mean();
        MomentSpec {
            e_xi0: 1.0,
            e_xi0_sq: 1.0,
            sum_e_xi: m,
            sum_e_xi_sq: m,
            sum_cross: n.factorial_moment2(),
            sum_e_xi0_xi: m,
            mean_input: None,
        }
    }

    /// Moment data of a catalog entry whose map is linear.
    pub fn for_entry(reg: &Registry, id: &str, raw: &ParamMap) -> Result<Option<MomentSpec>> {
        let (_, p) = reg.resolve(id, raw)?;
        Ok(match id {
            "quicksort" => Some(MomentSpec::quicksort()),
            "gw_progeny" => Some(MomentSpec::gw_progeny(p.offspring("N")?)),
            _ => None,
        })
    }
}

/// Solve the first- and second-moment equations obtained by taking
/// expectations in `X = ξ₀ + Σ ξᵢ Xᵢ`.
pub fn moment_recursion(ms: &MomentSpec) -> Result<Moments> {
    let mean = if (1.0 - ms.sum_e_xi).abs() > 1e-12 {
        ms.e_xi0 / (1.0 - ms.sum_e_xi)
    } else if ms.e_xi0.abs() <= 1e-12 {
        ms.mean_input.ok_or_else(|| {
            Error::Config("Σ E ξᵢ = 1 leaves the mean free; supply mean_input".into())
        })?
    } else {
        return Err(Error::Degenerate(
            "Σ E ξᵢ = 1 with E ξ₀ ≠ 0: no finite mean".into(),
        ));
    };
    if ms.sum_e_xi_sq >= 1.0 {
        return Err(Error::Degenerate(format!(
            "Σ E ξᵢ² = {} >= 1: second moment not determined",
            ms.sum_e_xi_sq
        )));
    }
    let second_moment = (ms.e_xi0_sq + 2.0 * mean * ms.sum_e_xi0_xi + mean * mean * ms.sum_cross)
        / (1.0 - ms.sum_e_xi_sq);
    Ok(Moments {
        mean,
        second_moment,
        variance: second_moment - mean * mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halving_chain() {
        let ms = MomentSpec {
            e_xi0: 1.0,
            e_xi0_sq: 1.0,
            sum_e_xi: 0.5,
            sum_e_xi_sq: 0.25,
            sum_cross: 0.0,
            sum_e_xi0_xi: 0.5,
            mean_input: None,
        };
        let m = moment_recursion(&ms).unwrap();
        assert!((m.mean - 2.0).abs() < 1e-15);
        assert!((m.second_moment - 4.0).abs() < 1e-15);
    }

    #[test]
    fn geometric_progeny() {
        let m = moment_recursion(&MomentSpec::gw_progeny(Offspring::Bernoulli(0.5))).unwrap();
        assert!((m.mean - 2.0).abs() < 1e-15);
        assert!((m.second_moment - 6.0).abs() < 1e-12);
    }

    #[test]
    fn quicksort_second_moment() {
        let m = moment_recursion(&MomentSpec::quicksort()).unwrap();
        assert_eq!(m.mean, 0.0);
        // 7 - 2π²/3
        assert!((m.second_moment - (7.0 - 2.0 * std::f64::consts::PI.powi(2) / 3.0)).abs() < 1e-8);
    }

    #[test]
    fn non_contraction_is_reported() {
        let mut ms = MomentSpec::gw_progeny(Offspring::Poisson(0.5));
        ms.sum_e_xi_sq = 1.2;
        assert!(moment_recursion(&ms).is_err());
    }
}
