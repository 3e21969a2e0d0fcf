use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;

use crate::engine::{iterate, IterConfig};
use crate::error::Result;
use crate::law::{Law, Offspring};
use crate::noise::{Arity, NoiseDraw, TermLaw};
use crate::numeric::{integrate_rel, solve_root};
use crate::pool::{Delta, SamplePool};
use crate::rde::{Children, EvalCx, Rde};
use crate::rng::{derive, stream, Purpose};
use crate::value::{StateSpace, Value};

use super::oracles::{AtomExp, Bern, GumbelAtom};
use super::{param, CatalogEntry, Entry, Oracle, OracleKind, ParamKind, Params};

/// Positive root of `c² + e^{-c} = 1`.
pub fn gw_matching_constant() -> f64 {
    solve_root(|c| c * c + (-c).exp() - 1.0, 0.1, 2.0, 1e-14).expect("bracketed root")
}

fn bern_root(p: f64) -> Result<f64> {
    solve_root(|x| x - (-p * x).exp(), 0.0, 1.0, 1e-14)
}

fn matching_oracles(n: Offspring, nu: Law) -> Result<Vec<Oracle>> {
    let mut v = Vec::new();
    if n != Offspring::Poisson(1.0) {
        return Ok(v);
    }
    match nu {
        Law::Exp(m) if m == 1.0 => {
            let c = gw_matching_constant();
            v.push(Oracle::root("c", (0.1, 2.0), |c| c * c + (-c).exp() - 1.0));
            v.push(Oracle::ClosedCdf(Arc::new(GumbelAtom(c))));
        }
        Law::Bern(p) if p > 0.0 => {
            v.push(Oracle::root("x", (0.0, 1.0), move |x| x - (-p * x).exp()));
            v.push(Oracle::ClosedCdf(Arc::new(Bern(1.0 - bern_root(p)?))));
        }
        _ => {}
    }
    Ok(v)
}

pub(super) fn entries() -> Vec<Box<dyn CatalogEntry>> {
    vec![
        Box::new(Entry {
            id: "gw_matching",
            anchor: "X = max(0, xi_i - X_i, 1 <= i <= N)",
            params: vec![
                param("N", "poisson:1", ParamKind::Offspring, "offspring law"),
                param("nu", "exp:1", ParamKind::Law, "edge weight law"),
            ],
            kind: Some(OracleKind::ClosedCdf),
            build: |p| {
                Ok(Arc::new(GwMatching {
                    n: p.offspring("N")?,
                    nu: p.law("nu")?,
                }))
            },
            oracles: Some(|p| matching_oracles(p.offspring("N")?, p.law("nu")?)),
            init: None,
        }),
        Box::new(Entry {
            id: "gw_matching_exp",
            anchor: "X = max(0, xi_i - X_i, 1 <= i <= N), N ~ Poisson(1), xi ~ Exp(1)",
            params: vec![],
            kind: Some(OracleKind::Constant),
            build: |_| {
                Ok(Arc::new(GwMatching {
                    n: Offspring::Poisson(1.0),
                    nu: Law::Exp(1.0),
                }))
            },
            oracles: Some(|_| matching_oracles(Offspring::Poisson(1.0), Law::Exp(1.0))),
            init: None,
        }),
        Box::new(Entry {
            id: "gw_matching_Z",
            anchor: "Z = max(X, xi - Z_1), X from the gw_matching fixed point",
            params: vec![
                param("nu", "exp:1", ParamKind::Law, "edge weight law"),
                param(
                    "x_pool",
                    "20000",
                    ParamKind::Int {
                        min: 2,
                        max: 10_000_000,
                    },
                    "size of the X snapshot",
                ),
                param(
                    "x_iters",
                    "200",
                    ParamKind::Int {
                        min: 1,
                        max: 10_000,
                    },
                    "generations for the X snapshot",
                ),
                param(
                    "x_seed",
                    "41",
                    ParamKind::Int {
                        min: 0,
                        max: i64::MAX,
                    },
                    "seed for the X snapshot",
                ),
            ],
            kind: Some(OracleKind::ReferenceSimulation),
            build: |p| Ok(Arc::new(GwMatchingZ::build(p)?)),
            oracles: None,
            init: None,
        }),
        Box::new(Entry {
            id: "gw_indep_set",
            anchor: "X = max(0, xi - sum_{i <= N} X_i)",
            params: vec![
                param("N", "poisson:1", ParamKind::Offspring, "offspring law"),
                param("nu", "exp:1", ParamKind::Law, "vertex weight law"),
            ],
            kind: None,
            build: |p| {
                Ok(Arc::new(GwIndepSet {
                    n: p.offspring("N")?,
                    nu: p.law("nu")?,
                }))
            },
            oracles: None,
            init: None,
        }),
        Box::new(Entry {
            id: "regular_matching",
            anchor: "X = max(0, xi_i - X_i, 1 <= i <= r - 1), xi ~ Exp(1)",
            params: vec![param(
                "r",
                "2",
                ParamKind::Int { min: 2, max: 64 },
                "degree",
            )],
            kind: Some(OracleKind::RootEquation),
            build: |p| Ok(Arc::new(RegularMatching { r: p.usize("r")? })),
            oracles: Some(|p| {
                let r = p.usize("r")?;
                let b = regular_matching_b(r)?;
                let mut v = vec![
                    Oracle::root("b", (0.0, 1.0), move |b| regular_b_equation(r, b)),
                    Oracle::constant("matching_limit", regular_matching_limit(r, b)),
                ];
                if r == 2 {
                    v.push(Oracle::ClosedCdf(Arc::new(AtomExp { p0: b, rate: 1.0 })));
                }
                Ok(v)
            }),
            init: None,
        }),
    ]
}

pub struct GwMatching {
    pub n: Offspring,
    pub nu: Law,
}

impl Rde for GwMatching {
    fn id(&self) -> &str {
        "gw_matching"
    }
    fn state(&self) -> StateSpace {
        StateSpace::NONNEG
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        let k = self.n.sample(nd.rng());
        nd.arity = Arity::Finite(k);
        nd.set_terms(TermLaw::Iid(self.nu));
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        let k = nd.finite_arity().unwrap_or(0);
        Value::Real(
            (0..k)
                .map(|j| nd.term(j) - kids.child(j).x())
                .fold(0.0, f64::max),
        )
    }
    fn offspring_mean(&self) -> Option<f64> {
        Some(self.n.mean())
    }
}

/// `Z = max(X, ξ - Z₁)` with `X` read from a frozen snapshot of the
/// gw_matching fixed point.
pub struct GwMatchingZ {
    pub nu: Law,
    pub x: Arc<Vec<Value>>,
}

impl GwMatchingZ {
    fn build(p: &Params) -> Result<GwMatchingZ> {
        let nu = p.law("nu")?;
        let x = matching_snapshot(
            nu,
            p.usize("x_pool")?,
            p.usize("x_iters")?,
            p.f64("x_seed")? as u64,
        )?;
        Ok(GwMatchingZ {
            nu,
            x: Arc::new(x.values),
        })
    }
}

/// Fixed-point pool of gw_matching with Poisson(1) offspring, iterated from `δ₀`.
pub fn matching_snapshot(nu: Law, n: usize, iters: usize, seed: u64) -> Result<SamplePool> {
    let spec = GwMatching {
        n: Offspring::Poisson(1.0),
        nu,
    };
    let init = SamplePool::sample(&Delta(Value::ZERO), n, seed);
    let cfg = IterConfig {
        max_iters: iters,
        tol: 1e-3,
        seed,
        ..IterConfig::default()
    };
    Ok(iterate(&spec, &init, &cfg)?.0)
}

impl Rde for GwMatchingZ {
    fn id(&self) -> &str {
        "gw_matching_Z"
    }
    fn state(&self) -> StateSpace {
        StateSpace::NONNEG
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        nd.arity = Arity::Finite(1);
        let i = nd.rng().random_range(0..self.x.len());
        nd.cross.push(self.x[i]);
        nd.push_extra(&self.nu);
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        Value::Real(nd.cross[0].x().max(nd.extra[0] - kids.child(0).x()))
    }
}

/// Monte Carlo of `E ξ 1(ξ > X + Z)` with independent `ξ ~ ν`, `X`, `Z`.
pub fn theorem41_mc(x: &SamplePool, z: &SamplePool, nu: Law, n: usize, seed: u64) -> f64 {
    let key = derive(seed, 0x41);
    let s: f64 = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(key, i, Purpose::Aux);
            let xi = nu.sample(&mut rng);
            let a = x.values[rng.random_range(0..x.len())].x();
            let b = z.values[rng.random_range(0..z.len())].x();
            if xi > a + b {
                xi
            } else {
                0.0
            }
        })
        .sum();
    s / n as f64
}

pub struct GwIndepSet {
    pub n: Offspring,
    pub nu: Law,
}

impl Rde for GwIndepSet {
    fn id(&self) -> &str {
        "gw_indep_set"
    }
    fn state(&self) -> StateSpace {
        StateSpace::NONNEG
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        let k = self.n.sample(nd.rng());
        nd.arity = Arity::Finite(k);
        nd.push_extra(&self.nu);
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        let k = nd.finite_arity().unwrap_or(0);
        let s: f64 = (0..k).map(|j| kids.child(j).x()).sum();
        Value::Real((nd.extra[0] - s).max(0.0))
    }
    fn offspring_mean(&self) -> Option<f64> {
        Some(self.n.mean())
    }
}

pub struct RegularMatching {
    pub r: usize,
}

impl Rde for RegularMatching {
    fn id(&self) -> &str {
        "regular_matching"
    }
    fn state(&self) -> StateSpace {
        StateSpace::NONNEG
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        nd.arity = Arity::Finite(self.r - 1);
        nd.set_terms(TermLaw::Iid(Law::Exp(1.0)));
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        Value::Real(
            (0..self.r - 1)
                .map(|j| nd.term(j) - kids.child(j).x())
                .fold(0.0, f64::max),
        )
    }
}

/// `1 - (1 - bʳ) / (r (1 - b)) - b`, with the quotient written as a finite sum.
fn regular_b_equation(r: usize, b: f64) -> f64 {
    let s: f64 = (0..r).map(|k| b.powi(k as i32)).sum();
    1.0 - s / r as f64 - b
}

pub fn regular_matching_b(r: usize) -> Result<f64> {
    solve_root(|b| regular_b_equation(r, b), 0.0, 1.0, 1e-14)
}

/// Double-integral form of the regular-graph matching limit.
pub fn regular_matching_limit(r: usize, b: f64) -> f64 {
    let rf = r as f64;
    let q = 1.0 - b;
    let rel = 1e-9;
    let top = 60.0;
    let first = integrate_rel(
        |t| t * (-t).exp() * (1.0 - (-t).exp() * q).powi(r as i32 - 1),
        0.0,
        top,
        rel,
    );
    let inner = |t: f64| {
        integrate_rel(
            |z| {
                (-z).exp()
                    * (1.0 - (-z).exp() * q).powi(r as i32 - 2)
                    * (1.0 - (z - t).exp() * q).powi(r as i32 - 1)
            },
            0.0,
            t,
            rel,
        )
    };
    let second = integrate_rel(|t| t * (-t).exp() * inner(t), 0.0, top, rel);
    0.5 * rf * b.powi(r as i32 - 1) * first + 0.5 * rf * (rf - 1.0) * q * second
}

/// Monte Carlo of `½ E Σᵢ ξᵢ 1(ξᵢ - Xᵢ = max_j (ξⱼ - Xⱼ) > 0)` over `r`
/// Exp(1) weights and pool draws.
pub fn regular_matching_mc(pool: &SamplePool, r: usize, n: usize, seed: u64) -> f64 {
    let key = derive(seed, 0x66);
    let s: f64 = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(key, i, Purpose::Aux);
            let mut best = (0.0f64, 0.0f64);
            for _ in 0..r {
                let xi = Law::Exp(1.0).sample(&mut rng);
                let d = xi - pool.values[rng.random_range(0..pool.len())].x();
                if d > best.0 {
                    best = (d, xi);
                }
            }
            best.1
        })
        .sum();
    0.5 * s / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_constants() {
        let c = gw_matching_constant();
        assert!((c * c + (-c).exp() - 1.0).abs() < 1e-12);
        assert!((c - 0.7145).abs() < 1e-3);
        assert!((bern_root(1.0).unwrap() - 0.5671432904).abs() < 1e-9);
    }

    #[test]
    fn regular_matching_r2() {
        let b = regular_matching_b(2).unwrap();
        assert!((b - 1.0 / 3.0).abs() < 1e-12);
        let lim = regular_matching_limit(2, b);
        assert!((lim - 2.0 / 3.0).abs() < 1e-6, "{lim}");
    }

    #[test]
    fn regular_matching_mc_on_closed_law() {
        let law = AtomExp {
            p0: 1.0 / 3.0,
            rate: 1.0,
        };
        let pool = SamplePool::sample(&law, 100_000, 5);
        let mc = regular_matching_mc(&pool, 2, 400_000, 6);
        assert!((mc - 2.0 / 3.0).abs() < 0.01, "{mc}");
    }
}
