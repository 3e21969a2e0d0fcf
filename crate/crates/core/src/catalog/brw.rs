use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::{Law, Offspring};
use crate::noise::{Arity, NoiseDraw, TermLaw};
use crate::numeric::{minimize, solve_root};
use crate::pool::Sampler;
use crate::rde::{Children, EvalCx, Rde};
use crate::rng::Rng;
use crate::value::{StateSpace, Value};

use super::{param, CatalogEntry, Entry, Oracle, OracleKind, ParamKind, Params};

/// Branching random walk with independent displacements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrwSpec {
    pub n: Offspring,
    pub xi: Law,
}

pub fn brw_spec_from(p: &Params) -> Result<BrwSpec> {
    Ok(BrwSpec {
        n: p.offspring("N")?,
        xi: p.law("xi")?,
    })
}

impl BrwSpec {
    pub fn binary_pm1(p: f64) -> BrwSpec {
        BrwSpec {
            n: Offspring::Fixed(2),
            xi: Law::Pm1(p),
        }
    }

    /// `m(θ) = E Σᵢ e^{θ ξᵢ}`.
    pub fn m(&self, theta: f64) -> Option<f64> {
        self.xi.mgf(theta).map(|g| self.n.mean() * g)
    }

    /// Largest `θ` (capped at 100) up to which `m` is finite.
    pub fn theta_max(&self) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 100.0f64);
        if self.m(hi).is_some_and(f64::is_finite) {
            return hi;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.m(mid).is_some_and(f64::is_finite) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Some `θ > 0` with `m(θ) < ∞`.
    pub fn moment_condition(&self) -> bool {
        self.theta_max() > 0.0
    }

    /// Speed of the rightmost particle, `inf_{θ>0} log m(θ) / θ`.
    pub fn speed(&self) -> Result<f64> {
        if !self.moment_condition() {
            return Err(Error::Numeric("no θ > 0 with finite m(θ)".into()));
        }
        if let Some((s, mass)) = self.xi.atom_at_sup() {
            if self.n.mean() * mass >= 1.0 {
                return Ok(s);
            }
        }
        let top = self.theta_max() * (1.0 - 1e-9);
        let f = |t: f64| self.m(t).map_or(f64::INFINITY, |m| m.ln() / t);
        let grid: Vec<f64> = (0..=400)
            .map(|k| 1e-4 * (top / 1e-4).powf(k as f64 / 400.0))
            .collect();
        let (k, _) = grid
            .iter()
            .enumerate()
            .map(|(k, &t)| (k, f(t)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty grid");
        let lo = grid[k.saturating_sub(1)];
        let hi = grid[(k + 1).min(grid.len() - 1)];
        if hi <= lo {
            return Ok(f(grid[k]));
        }
        let (_, v) = minimize(f, lo, hi)?;
        Ok(v.min(f(grid[k])))
    }

    /// `θ > argmin m` with `m(θ) = 1`: exponential rate of the all-time
    /// maximum when the speed is negative.
    pub fn range_rate(&self) -> Result<f64> {
        let top = self.theta_max() * (1.0 - 1e-9);
        let h = |t: f64| self.m(t).map_or(f64::INFINITY, f64::ln);
        let (tmin, hmin) = minimize(h, 1e-9, top)?;
        if hmin >= 0.0 {
            return Err(Error::Numeric(
                "m(θ) >= 1 for all θ; the range is infinite".into(),
            ));
        }
        let mut hi = tmin * 2.0 + 1e-3;
        while h(hi) < 0.0 {
            if hi >= top {
                return Err(Error::Numeric("m(θ) stays below 1".into()));
            }
            hi = (hi * 2.0).min(top);
        }
        solve_root(h, tmin, hi, 1e-13)
    }

    /// One generation of a beam: children of every particle, keeping the
    /// `cap` rightmost. Returns whether anything was dropped.
    pub fn step_beam(&self, positions: &[f64], cap: usize, rng: &mut Rng) -> (Vec<f64>, bool) {
        let mut next = Vec::new();
        for &x in positions {
            let k = self.n.sample(rng);
            for _ in 0..k {
                next.push(x + self.xi.sample(rng));
            }
        }
        let dropped = next.len() > cap;
        if dropped {
            next.select_nth_unstable_by(cap - 1, |a, b| b.total_cmp(a));
            next.truncate(cap);
        }
        (next, dropped)
    }
}

pub(super) fn entries() -> Vec<Box<dyn CatalogEntry>> {
    vec![
        Box::new(Entry {
            id: "brw_range",
            anchor: "R = max(0, max_i (xi_i + R_i))",
            params: vec![
                param("N", "fixed:2", ParamKind::Offspring, "offspring law"),
                param("xi", "normal:-1.5:1", ParamKind::Law, "displacement law"),
            ],
            kind: Some(OracleKind::ReferenceSimulation),
            build: |p| {
                Ok(Arc::new(BrwRange {
                    spec: brw_spec_from(p)?,
                }))
            },
            oracles: Some(|p| {
                let spec = brw_spec_from(p)?;
                let mut v = Vec::new();
                if let Ok(rate) = spec.range_rate() {
                    v.push(Oracle::constant("tail_rate", rate));
                    v.push(Oracle::ReferenceSimulation {
                        name: "brw_all_time_max".into(),
                        sampler: Arc::new(RangeSampler {
                            spec,
                            margin: 9.0 * std::f64::consts::LN_10 / rate,
                            cap: 1000,
                        }),
                    });
                }
                Ok(v)
            }),
            init: None,
        }),
        Box::new(Entry {
            id: "brw_greedy_L",
            anchor: "L = min(0, max_i (L_i + xi_i))",
            params: vec![
                param("N", "fixed:2", ParamKind::Offspring, "offspring law"),
                param("xi", "pm1:0.3", ParamKind::Law, "displacement law"),
            ],
            kind: Some(OracleKind::RootEquation),
            build: |p| {
                Ok(Arc::new(GreedyL {
                    spec: brw_spec_from(p)?,
                }))
            },
            oracles: Some(|_| {
                Ok(vec![Oracle::root("p_crit", (0.0, 0.5), |p| {
                    16.0 * p * (1.0 - p) - 1.0
                })])
            }),
            init: None,
        }),
        Box::new(Entry {
            id: "brw_extreme",
            anchor: "X = -gamma + max_i (xi_i + X_i)",
            params: vec![
                param(
                    "gamma",
                    "1.1774100225154747",
                    ParamKind::real(f64::NEG_INFINITY, f64::INFINITY),
                    "centering",
                ),
                param("N", "fixed:2", ParamKind::Offspring, "offspring law"),
                param("xi", "normal:0:1", ParamKind::Law, "displacement law"),
            ],
            kind: None,
            build: |p| {
                Ok(Arc::new(BrwExtreme {
                    gamma: p.f64("gamma")?,
                    spec: brw_spec_from(p)?,
                }))
            },
            oracles: None,
            init: None,
        }),
    ]
}

fn draw_brw(spec: &BrwSpec, nd: &mut NoiseDraw) {
    let k = spec.n.sample(nd.rng());
    nd.arity = Arity::Finite(k);
    nd.set_terms(TermLaw::Iid(spec.xi));
}

pub struct BrwRange {
    pub spec: BrwSpec,
}

impl Rde for BrwRange {
    fn id(&self) -> &str {
        "brw_range"
    }
    fn state(&self) -> StateSpace {
        StateSpace::NONNEG
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        draw_brw(&self.spec, nd);
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        let k = nd.finite_arity().unwrap_or(0);
        Value::Real(
            (0..k)
                .map(|j| nd.term(j) + kids.child(j).x())
                .fold(0.0, f64::max),
        )
    }
    fn monotone(&self) -> bool {
        true
    }
    fn offspring_mean(&self) -> Option<f64> {
        Some(self.spec.n.mean())
    }
}

/// All-time maximum of a BRW started at 0, by beam simulation until the
/// beam leader is `margin` below the running maximum.
pub struct RangeSampler {
    spec: BrwSpec,
    margin: f64,
    cap: usize,
}

impl Sampler for RangeSampler {
    fn sample(&self, rng: &mut Rng) -> Value {
        let mut pos = vec![0.0];
        let mut best = 0.0f64;
        for _ in 0..100_000 {
            pos = self.spec.step_beam(&pos, self.cap, rng).0;
            let lead = pos.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if pos.is_empty() || lead < best - self.margin {
                break;
            }
            best = best.max(lead);
        }
        Value::Real(best)
    }
}

pub struct GreedyL {
    pub spec: BrwSpec,
}

impl Rde for GreedyL {
    fn id(&self) -> &str {
        "brw_greedy_L"
    }
    fn state(&self) -> StateSpace {
        StateSpace::NONPOS
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        draw_brw(&self.spec, nd);
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        let k = nd.finite_arity().unwrap_or(0);
        let m = (0..k)
            .map(|j| kids.child(j).x() + nd.term(j))
            .fold(f64::NEG_INFINITY, f64::max);
        Value::Real(m.min(0.0))
    }
    fn monotone(&self) -> bool {
        true
    }
    fn offspring_mean(&self) -> Option<f64> {
        Some(self.spec.n.mean())
    }
}

pub struct BrwExtreme {
    pub gamma: f64,
    pub spec: BrwSpec,
}

impl Rde for BrwExtreme {
    fn id(&self) -> &str {
        "brw_extreme"
    }
    fn state(&self) -> StateSpace {
        StateSpace::REAL
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        draw_brw(&self.spec, nd);
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        let k = nd.finite_arity().unwrap_or(0);
        let m = (0..k)
            .map(|j| nd.term(j) + kids.child(j).x())
            .fold(f64::NEG_INFINITY, f64::max);
        Value::Real(m - self.gamma)
    }
    fn monotone(&self) -> bool {
        true
    }
    fn offspring_mean(&self) -> Option<f64> {
        Some(self.spec.n.mean())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speeds() {
        let g = BrwSpec {
            n: Offspring::Fixed(2),
            xi: Law::Normal(0.0, 1.0),
        }
        .speed()
        .unwrap();
        assert!((g - (2.0 * std::f64::consts::LN_2).sqrt()).abs() < 1e-6);
        assert_eq!(BrwSpec::binary_pm1(0.9).speed().unwrap(), 1.0);
        let crit = BrwSpec::binary_pm1(0.066_987_298_107_780_68).speed().unwrap();
        assert!(crit.abs() < 1e-4, "{crit}");
        assert!(BrwSpec::binary_pm1(0.3).speed().unwrap() > 0.0);
        assert_eq!(
            BrwSpec {
                n: Offspring::Fixed(2),
                xi: Law::Const(1.0)
            }
            .speed()
            .unwrap(),
            1.0
        );
    }

    #[test]
    fn range_rate_solves_m_equal_one() {
        let s = BrwSpec {
            n: Offspring::Fixed(2),
            xi: Law::Normal(-1.5, 1.0),
        };
        let t = s.range_rate().unwrap();
        assert!((s.m(t).unwrap() - 1.0).abs() < 1e-9);
        assert!(t > 1.5);
    }
}
