use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;

use crate::law::Law;
use crate::noise::{Arity, NoiseDraw, TermLaw};
use crate::pool::SamplePool;
use crate::rde::{pool_max, Children, EvalCx, Rde};
use crate::rng::{derive, stream, Purpose};
use crate::value::{StateSpace, Value};

use super::oracles::Logistic;
use super::{param, CatalogEntry, Entry, Oracle, OracleKind, ParamKind};

pub(super) fn entries() -> Vec<Box<dyn CatalogEntry>> {
    vec![
        Box::new(Entry {
            id: "meanfield_subtree",
            anchor: "Y = sum_{i >= 1} (c - xi_i + Y_i)^+",
            params: vec![param("c", "0.2", ParamKind::real(0.0, f64::INFINITY), "threshold")],
            kind: Some(OracleKind::Constant),
            build: |p| Ok(Arc::new(Subtree { c: p.f64("c")? })),
            oracles: Some(|_| Ok(vec![Oracle::constant("c0", 0.263)])),
            init: None,
        }),
        Box::new(Entry {
            id: "meanfield_matching",
            anchor: "X = min_{1 <= i < inf} (xi_i - X_i), xi a Poisson process of rate x^{d-1}",
            params: vec![param("d", "1", ParamKind::positive(), "pseudo-dimension")],
            kind: Some(OracleKind::ClosedCdf),
            build: |p| Ok(Arc::new(MinMatching { d: p.f64("d")?, second: false })),
            oracles: Some(|p| {
                if p.f64("d")? == 1.0 {
                    Ok(vec![
                        Oracle::constant("matching_limit", std::f64::consts::PI.powi(2) / 6.0),
                        Oracle::ClosedCdf(Arc::new(Logistic)),
                    ])
                } else {
                    Ok(Vec::new())
                }
            }),
            init: Some(|_| Ok(Arc::new(Law::Uniform(-1.0, 1.0)))),
        }),
        Box::new(Entry {
            id: "meanfield_tsp",
            anchor: "X = second min_{1 <= i < inf} (xi_i - X_i), xi a Poisson process of rate x^{d-1}",
            params: vec![param("d", "1", ParamKind::positive(), "pseudo-dimension")],
            kind: Some(OracleKind::Constant),
            build: |p| Ok(Arc::new(MinMatching { d: p.f64("d")?, second: true })),
            oracles: Some(|p| {
                if p.f64("d")? == 1.0 {
                    Ok(vec![Oracle::constant("tsp_limit", 2.04)])
                } else {
                    Ok(Vec::new())
                }
            }),
            init: Some(|_| Ok(Arc::new(Law::Uniform(-1.0, 1.0)))),
        }),
        Box::new(Entry {
            id: "near_optimal_matching",
            anchor: "(X, Y, Z) = (min_i (xi_i - X_i), min_i (xi_i - (Z_i + lambda) 1(i = i*) - Y_i 1(i != i*)), min_i (xi_i - Y_i))",
            params: vec![param("lambda", "1", ParamKind::positive(), "Lagrange multiplier")],
            kind: None,
            build: |p| Ok(Arc::new(NearOptimal { lambda: p.f64("lambda")? })),
            oracles: None,
            init: Some(|_| Ok(Arc::new(crate::pool::Delta(Value::Vec3([0.0; 3]))))),
        }),
        Box::new(Entry {
            id: "tsp_percolation",
            anchor: "(X, Z) = (max_i W_i, max_i W_i + second max_i W_i), W_i = lambda - xi_i + X_i - Z_i^+",
            params: vec![param("lambda", "1", ParamKind::positive(), "Lagrange multiplier")],
            kind: None,
            build: |p| Ok(Arc::new(TspPercolation { lambda: p.f64("lambda")? })),
            oracles: None,
            init: Some(|_| Ok(Arc::new(crate::pool::Delta(Value::Vec2([0.0; 2]))))),
        }),
        Box::new(Entry {
            id: "fpp_flow",
            anchor: "Z = min(A_2, A_3, A_1 + A_2 + A_3) - min(0, A_1 + A_2, A_1 + A_3), A_i = Z_i + xi_i - a",
            params: vec![param("a", "0.6", ParamKind::open(0.0, 1.0), "traversal-time parameter")],
            kind: None,
            build: |p| Ok(Arc::new(FppFlow { a: p.f64("a")? })),
            oracles: None,
            init: None,
        }),
    ]
}

/// `∫₀^∞ x^d P(X₁ + X₂ > x) dx = E[((X₁ + X₂)⁺)^{d+1}] / (d + 1)` over
/// `n` independent pairs, `X₁` drawn from `first` and `X₂` from `second`.
///
/// Passing consecutive iterates cancels a `T²` translation offset.
pub fn matching_functional(
    first: &SamplePool,
    second: &SamplePool,
    d: f64,
    n: usize,
    seed: u64,
) -> f64 {
    let key = derive(seed, 0x92);
    let s: f64 = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(key, i, Purpose::Aux);
            let a = first.values[rng.random_range(0..first.len())].x();
            let b = second.values[rng.random_range(0..second.len())].x();
            (a + b).max(0.0).powf(d + 1.0)
        })
        .sum();
    s / n as f64 / (d + 1.0)
}

/// Mean tour-edge length for the second-minimum recursion: the root sees two
/// tour edges, so this is half of [`matching_functional`].
pub fn tour_functional(
    first: &SamplePool,
    second: &SamplePool,
    d: f64,
    n: usize,
    seed: u64,
) -> f64 {
    0.5 * matching_functional(first, second, d, n, seed)
}

pub struct Subtree {
    pub c: f64,
}

impl Rde for Subtree {
    fn id(&self) -> &str {
        "meanfield_subtree"
    }
    fn state(&self) -> StateSpace {
        StateSpace::NONNEG
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        nd.arity = Arity::Unbounded;
        nd.set_terms(TermLaw::Poisson { d: 1.0 });
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, cx: &mut EvalCx) -> Value {
        let b = cx.bound(0);
        let mut h = cx.horizon();
        let mut sum = 0.0;
        let mut k = 0;
        loop {
            let xi = nd.term(k);
            if !h.admit(k, b.is_some_and(|b| xi >= self.c + b), cx) {
                break;
            }
            sum += (self.c - xi + kids.child(k).x()).max(0.0);
            k += 1;
        }
        Value::Real(sum)
    }
    fn support_bound(&self, pool: &[Value]) -> Option<Vec<f64>> {
        Some(vec![pool_max(pool, 0)])
    }
    fn unbounded(&self) -> bool {
        true
    }
    fn monotone(&self) -> bool {
        true
    }
}

/// Minimum (or second minimum) of `ξᵢ - Xᵢ` over a Poisson process of rate `x^{d-1}`.
pub struct MinMatching {
    pub d: f64,
    pub second: bool,
}

impl Rde for MinMatching {
    fn id(&self) -> &str {
        if self.second {
            "meanfield_tsp"
        } else {
            "meanfield_matching"
        }
    }
    fn state(&self) -> StateSpace {
        StateSpace::REAL
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        nd.arity = Arity::Unbounded;
        nd.set_terms(TermLaw::Poisson { d: self.d });
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, cx: &mut EvalCx) -> Value {
        let b = cx.bound(0);
        let mut h = cx.horizon();
        let (mut m1, mut m2) = (f64::INFINITY, f64::INFINITY);
        let mut k = 0;
        loop {
            let xi = nd.term(k);
            let target = if self.second { m2 } else { m1 };
            if !h.admit(k, b.is_some_and(|b| xi - b >= target), cx) {
                break;
            }
            let v = xi - kids.child(k).x();
            if v < m1 {
                m2 = m1;
                m1 = v;
            } else if v < m2 {
                m2 = v;
            }
            k += 1;
        }
        Value::Real(if self.second { m2 } else { m1 })
    }
    fn support_bound(&self, pool: &[Value]) -> Option<Vec<f64>> {
        Some(vec![pool_max(pool, 0)])
    }
    fn unbounded(&self) -> bool {
        true
    }
    fn eq_tol(&self) -> f64 {
        0.05
    }
}

pub struct NearOptimal {
    pub lambda: f64,
}

impl NearOptimal {
    fn outputs(&self, terms: &[(f64, [f64; 3])]) -> [f64; 3] {
        let mut istar = 0;
        for (i, t) in terms.iter().enumerate() {
            if t.0 - t.1[0] < terms[istar].0 - terms[istar].1[0] {
                istar = i;
            }
        }
        let mut out = [f64::INFINITY; 3];
        for (i, (xi, v)) in terms.iter().enumerate() {
            out[0] = out[0].min(xi - v[0]);
            out[1] = out[1].min(if i == istar {
                xi - (v[2] + self.lambda)
            } else {
                xi - v[1]
            });
            out[2] = out[2].min(xi - v[1]);
        }
        out
    }
}

impl Rde for NearOptimal {
    fn id(&self) -> &str {
        "near_optimal_matching"
    }
    fn state(&self) -> StateSpace {
        StateSpace::Vector { dim: 3 }
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        nd.arity = Arity::Unbounded;
        nd.set_terms(TermLaw::Poisson { d: 1.0 });
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, cx: &mut EvalCx) -> Value {
        let b = cx.bound.clone();
        let mut h = cx.horizon();
        let mut terms: Vec<(f64, [f64; 3])> = Vec::new();
        let mut cur = [f64::INFINITY; 3];
        let mut k = 0;
        loop {
            let xi = nd.term(k);
            let certified = !terms.is_empty()
                && b.as_ref()
                    .is_some_and(|b| (0..3).all(|c| xi - b[c] >= cur[c]));
            if !h.admit(k, certified, cx) {
                break;
            }
            let v = kids.child(k);
            terms.push((xi, [v.coord(0), v.coord(1), v.coord(2)]));
            cur = self.outputs(&terms);
            k += 1;
        }
        Value::Vec3(cur)
    }
    fn support_bound(&self, pool: &[Value]) -> Option<Vec<f64>> {
        let (mx, my, mz) = (pool_max(pool, 0), pool_max(pool, 1), pool_max(pool, 2));
        Some(vec![mx, my.max(mz + self.lambda), my])
    }
    fn unbounded(&self) -> bool {
        true
    }
    fn eq_tol(&self) -> f64 {
        0.05
    }
}

pub struct TspPercolation {
    pub lambda: f64,
}

impl Rde for TspPercolation {
    fn id(&self) -> &str {
        "tsp_percolation"
    }
    fn state(&self) -> StateSpace {
        StateSpace::Vector { dim: 2 }
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        nd.arity = Arity::Unbounded;
        nd.set_terms(TermLaw::Poisson { d: 1.0 });
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, cx: &mut EvalCx) -> Value {
        let b = cx.bound(0);
        let mut h = cx.horizon();
        let (mut m1, mut m2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut k = 0;
        loop {
            let xi = nd.term(k);
            if !h.admit(k, b.is_some_and(|b| self.lambda - xi + b <= m2), cx) {
                break;
            }
            let v = kids.child(k);
            let w = self.lambda - xi + v.coord(0) - v.coord(1).max(0.0);
            if w > m1 {
                m2 = m1;
                m1 = w;
            } else if w > m2 {
                m2 = w;
            }
            k += 1;
        }
        Value::Vec2([m1, m1 + m2])
    }
    fn support_bound(&self, pool: &[Value]) -> Option<Vec<f64>> {
        let b = pool
            .iter()
            .map(|v| v.coord(0) - v.coord(1).max(0.0))
            .fold(f64::NEG_INFINITY, f64::max);
        Some(vec![b])
    }
    fn unbounded(&self) -> bool {
        true
    }
}

pub struct FppFlow {
    pub a: f64,
}

impl Rde for FppFlow {
    fn id(&self) -> &str {
        "fpp_flow"
    }
    fn state(&self) -> StateSpace {
        StateSpace::NONNEG
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        nd.arity = Arity::Finite(3);
        nd.set_terms(TermLaw::Iid(Law::Exp(1.0)));
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        let a: Vec<f64> = (0..3)
            .map(|j| kids.child(j).x() + nd.term(j) - self.a)
            .collect();
        let top = a[1].min(a[2]).min(a[0] + a[1] + a[2]);
        let bottom = 0.0f64.min(a[0] + a[1]).min(a[0] + a[2]);
        Value::Real((top - bottom).max(0.0))
    }
}
