use std::sync::Arc;

use crate::error::Result;
use crate::law::{Law, Offspring};
use crate::noise::{Arity, NoiseDraw};
use crate::numeric::{integrate, solve_root};
use crate::pool::Sampler;
use crate::rde::{Children, EvalCx, Rde};
use crate::rng::Rng;
use crate::value::{StateSpace, Value};

use super::oracles::{height_law, progeny_law, AtomExp, Bern};
use super::{param, CatalogEntry, Entry, Oracle, OracleKind, ParamKind, Params};

pub(super) fn entries() -> Vec<Box<dyn CatalogEntry>> {
    vec![
        Box::new(Entry {
            id: "lindley",
            anchor: "X = max(0, X_1 + xi - c)",
            params: vec![
                param("c", "1.5", ParamKind::positive(), "service increment"),
                param("xi", "exp:1", ParamKind::Law, "arrival increment law"),
            ],
            kind: Some(OracleKind::ReferenceSimulation),
            build: |p| {
                Ok(Arc::new(Lindley {
                    c: p.f64("c")?,
                    xi: p.law("xi")?,
                }))
            },
            oracles: Some(lindley_oracles),
            init: None,
        }),
        Box::new(Entry {
            id: "gw_progeny",
            anchor: "X = 1 + sum_{i <= N} X_i",
            params: vec![param(
                "N",
                "poisson:0.5",
                ParamKind::Offspring,
                "offspring law",
            )],
            kind: Some(OracleKind::ClosedCdf),
            build: |p| {
                Ok(Arc::new(GwProgeny {
                    n: p.offspring("N")?,
                }))
            },
            oracles: Some(|p| {
                let n = p.offspring("N")?;
                let mut v = vec![Oracle::ClosedCdf(Arc::new(progeny_law(n)))];
                if n.mean() < 1.0 {
                    v.push(Oracle::constant("mean", 1.0 / (1.0 - n.mean())));
                }
                Ok(v)
            }),
            init: None,
        }),
        Box::new(Entry {
            id: "gw_height",
            anchor: "X = 1 + max_{i <= N} X_i",
            params: vec![param(
                "N",
                "binomial:2:0.4",
                ParamKind::Offspring,
                "offspring law",
            )],
            kind: Some(OracleKind::ClosedCdf),
            build: |p| {
                Ok(Arc::new(GwHeight {
                    n: p.offspring("N")?,
                }))
            },
            oracles: Some(|p| {
                Ok(vec![Oracle::ClosedCdf(Arc::new(height_law(
                    p.offspring("N")?,
                )))])
            }),
            init: None,
        }),
        Box::new(Entry {
            id: "quicksort",
            anchor: "X = U X_1 + (1 - U) X_2 + C(U)",
            params: vec![],
            kind: Some(OracleKind::Constant),
            build: |_| Ok(Arc::new(Quicksort)),
            oracles: Some(|_| {
                let m2 = 3.0 * integrate(|u| quicksort_c(u).powi(2), 0.0, 1.0, 1e-12);
                Ok(vec![
                    Oracle::constant("mean", 0.0),
                    Oracle::constant("second_moment", m2),
                ])
            }),
            init: None,
        }),
        Box::new(Entry {
            id: "noisy_voter",
            anchor: "X = xi + 1(X_1 + X_2 + X_3 >= 2) mod 2",
            params: vec![param(
                "eps",
                "0.1",
                ParamKind::real(0.0, 0.5),
                "flip probability",
            )],
            kind: Some(OracleKind::RootEquation),
            build: |p| Ok(Arc::new(NoisyVoter { eps: p.f64("eps")? })),
            oracles: Some(|p| {
                let eps = p.f64("eps")?;
                let mut v = Vec::new();
                if eps < 1.0 / 6.0 {
                    v.push(Oracle::root(
                        "p_star",
                        (0.0, 0.5 * (1.0 - 1e-9)),
                        move |x| voter_map(eps, x) - x,
                    ));
                }
                v.push(Oracle::ClosedCdf(Arc::new(Bern(0.5))));
                Ok(v)
            }),
            init: Some(|_| Ok(Arc::new(Law::Bern(0.2)))),
        }),
        Box::new(Entry {
            id: "mod2_shift",
            anchor: "X = X_{I+1} + xi mod 2",
            params: vec![param(
                "q",
                "0.2",
                ParamKind::real(0.0, 1.0),
                "flip probability",
            )],
            kind: Some(OracleKind::ClosedCdf),
            build: |p| Ok(Arc::new(Mod2Shift { q: p.f64("q")? })),
            oracles: Some(|_| Ok(vec![Oracle::ClosedCdf(Arc::new(Bern(0.5)))])),
            init: Some(|_| Ok(Arc::new(Law::Bern(0.5)))),
        }),
        Box::new(Entry {
            id: "fractal",
            anchor: "X = 2 min(X_1, X_2) if xi = 0, max(X_1, X_2) / 2 if xi = 1",
            params: vec![param("p", "0.5", ParamKind::real(0.0, 1.0), "P(xi = 1)")],
            kind: None,
            build: |p| Ok(Arc::new(Fractal { p: p.f64("p")? })),
            oracles: None,
            init: Some(|_| Ok(Arc::new(Law::Exp(1.0)))),
        }),
    ]
}

pub struct Lindley {
    pub c: f64,
    pub xi: Law,
}

impl Rde for Lindley {
    fn id(&self) -> &str {
        "lindley"
    }
    fn state(&self) -> StateSpace {
        StateSpace::NONNEG
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        nd.arity = Arity::Finite(1);
        nd.push_extra(&self.xi);
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        Value::Real((kids.child(0).x() + nd.extra[0] - self.c).max(0.0))
    }
    fn monotone(&self) -> bool {
        true
    }
}

fn lindley_oracles(p: &Params) -> Result<Vec<Oracle>> {
    let (c, xi) = (p.f64("c")?, p.law("xi")?);
    let mut v = Vec::new();
    if let Law::Exp(m) = xi {
        let a = c / m;
        if a > 1.0 {
            let sigma = solve_root(
                |s| (-a * (1.0 - s)).exp() - s,
                0.0,
                1.0 - (a - 1.0) / (a * a),
                1e-14,
            )?;
            v.push(Oracle::ClosedCdf(Arc::new(AtomExp {
                p0: 1.0 - sigma,
                rate: (1.0 - sigma) / m,
            })));
            v.push(Oracle::constant("mean", sigma * m / (1.0 - sigma)));
        }
    }
    if xi.mean().is_some_and(|mu| mu < c) {
        v.push(Oracle::ReferenceSimulation {
            name: "random_walk_max".into(),
            sampler: Arc::new(RandomWalkMax::new(c, xi)),
        });
    }
    Ok(v)
}

/// `sup_n S_n` of the walk with increments `xi - c`, run until the chance of
/// a new maximum is below 10⁻⁹.
pub struct RandomWalkMax {
    c: f64,
    xi: Law,
    margin: f64,
}

impl RandomWalkMax {
    pub fn new(c: f64, xi: Law) -> RandomWalkMax {
        let margin =
            cramer_root(&xi, c).map_or(f64::INFINITY, |t| 9.0 * std::f64::consts::LN_10 / t);
        RandomWalkMax { c, xi, margin }
    }
}

impl Sampler for RandomWalkMax {
    fn sample(&self, rng: &mut Rng) -> Value {
        let (mut s, mut m) = (0.0f64, 0.0f64);
        for _ in 0..100_000_000u64 {
            s += self.xi.sample(rng) - self.c;
            m = m.max(s);
            if s < m - self.margin {
                break;
            }
        }
        Value::Real(m)
    }
}

/// Positive root of `log E e^{θ(ξ - c)} = 0`.
pub fn cramer_root(xi: &Law, c: f64) -> Option<f64> {
    let h = |t: f64| xi.mgf(t).map(|m| m.ln() - t * c);
    let (mut lo, mut hi) = (0.0f64, 0.01f64);
    for _ in 0..200 {
        match h(hi) {
            Some(v) if v > 0.0 => {
                let start = (lo * 0.5).max(1e-9).min(hi * 1e-3);
                return solve_root(|t| h(t).unwrap_or(f64::INFINITY), start, hi, 1e-14).ok();
            }
            Some(_) => {
                lo = hi;
                hi *= 2.0;
            }
            None => hi = 0.5 * (lo + hi),
        }
        if hi > 1e6 {
            return None;
        }
    }
    None
}

pub struct GwProgeny {
    pub n: Offspring,
}

impl Rde for GwProgeny {
    fn id(&self) -> &str {
        "gw_progeny"
    }
    fn state(&self) -> StateSpace {
        StateSpace::Integers { lo: 0 }
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        let k = self.n.sample(nd.rng());
        nd.arity = Arity::Finite(k);
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        let k = nd.finite_arity().unwrap_or(0);
        Value::Real(1.0 + (0..k).map(|j| kids.child(j).x()).sum::<f64>())
    }
    fn monotone(&self) -> bool {
        true
    }
    fn offspring_mean(&self) -> Option<f64> {
        Some(self.n.mean())
    }
}

pub struct GwHeight {
    pub n: Offspring,
}

impl Rde for GwHeight {
    fn id(&self) -> &str {
        "gw_height"
    }
    fn state(&self) -> StateSpace {
        StateSpace::Integers { lo: 0 }
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        let k = self.n.sample(nd.rng());
        nd.arity = Arity::Finite(k);
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        let k = nd.finite_arity().unwrap_or(0);
        Value::Real(1.0 + (0..k).map(|j| kids.child(j).x()).fold(0.0, f64::max))
    }
    fn monotone(&self) -> bool {
        true
    }
    fn offspring_mean(&self) -> Option<f64> {
        Some(self.n.mean())
    }
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Toll function of the quicksort recursion.
pub fn quicksort_c(u: f64) -> f64 {
    1.0 + 2.0 * xlogx(u) + 2.0 * xlogx(1.0 - u)
}

pub struct Quicksort;

impl Rde for Quicksort {
    fn id(&self) -> &str {
        "quicksort"
    }
    fn state(&self) -> StateSpace {
        StateSpace::REAL
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        nd.arity = Arity::Finite(2);
        nd.push_extra(&Law::Uniform(0.0, 1.0));
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        let u = nd.extra[0];
        Value::Real(u * kids.child(0).x() + (1.0 - u) * kids.child(1).x() + quicksort_c(u))
    }
    fn monotone(&self) -> bool {
        true
    }
}

/// `P(output = 1)` when the three inputs are iid Bernoulli(x).
pub fn voter_map(eps: f64, x: f64) -> f64 {
    let q = 3.0 * x * x - 2.0 * x * x * x;
    (1.0 - eps) * q + eps * (1.0 - q)
}

pub struct NoisyVoter {
    pub eps: f64,
}

impl Rde for NoisyVoter {
    fn id(&self) -> &str {
        "noisy_voter"
    }
    fn state(&self) -> StateSpace {
        StateSpace::BINARY
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        nd.arity = Arity::Finite(3);
        nd.push_extra(&Law::Bern(self.eps));
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        let s: f64 = (0..3).map(|j| kids.child(j).x()).sum();
        let maj = u8::from(s >= 2.0);
        Value::Real(f64::from((maj + nd.extra[0] as u8) % 2))
    }
}

pub struct Mod2Shift {
    pub q: f64,
}

impl Rde for Mod2Shift {
    fn id(&self) -> &str {
        "mod2_shift"
    }
    fn state(&self) -> StateSpace {
        StateSpace::BINARY
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        nd.arity = Arity::Finite(2);
        nd.push_extra(&Law::Bern(0.5));
        nd.push_extra(&Law::Bern(self.q));
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        let x = kids.child(nd.extra[0] as usize).x() as u8;
        Value::Real(f64::from((x + nd.extra[1] as u8) % 2))
    }
}

pub struct Fractal {
    pub p: f64,
}

impl Rde for Fractal {
    fn id(&self) -> &str {
        "fractal"
    }
    fn state(&self) -> StateSpace {
        StateSpace::NONNEG
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        nd.arity = Arity::Finite(2);
        nd.push_extra(&Law::Bern(self.p));
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        let (a, b) = (kids.child(0).x(), kids.child(1).x());
        Value::Real(if nd.extra[0] == 0.0 {
            2.0 * a.min(b)
        } else {
            0.5 * a.max(b)
        })
    }
    fn monotone(&self) -> bool {
        true
    }
}
