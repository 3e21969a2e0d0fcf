use std::sync::Arc;

use crate::law::Law;
use crate::noise::{Arity, NoiseDraw, TermLaw};
use crate::rde::{pool_max, Children, Discounted, EvalCx, Rde};
use crate::value::{StateSpace, Value};

use super::oracles::RatioLaw;
use super::{param, CatalogEntry, Entry, Oracle, OracleKind, ParamKind};

/// Weights below this are dropped when sampling the discount sequence.
const NEGLIGIBLE: f64 = 1e-12;

pub(super) fn entries() -> Vec<Box<dyn CatalogEntry>> {
    vec![
        Box::new(Entry {
            id: "find_worstcase",
            anchor: "X = 1 + max(U X_1, (1 - U) X_2)",
            params: vec![],
            kind: None,
            build: |_| Ok(Arc::new(FindWorstCase)),
            oracles: None,
            init: None,
        }),
        Box::new(Entry {
            id: "discounted_brw",
            anchor: "X = eta + c max(X_1, X_2)",
            params: vec![
                param("c", "0.5", ParamKind::open(0.0, 1.0), "discount"),
                param("eta", "exp:1", ParamKind::Law, "node weight law"),
            ],
            kind: None,
            build: |p| {
                Ok(Arc::new(DiscountedBrw {
                    c: p.f64("c")?,
                    eta: p.law("eta")?,
                }))
            },
            oracles: None,
            init: None,
        }),
        Box::new(Entry {
            id: "perc_min",
            anchor: "X = eta + c min(X_1, X_2)",
            params: vec![
                param("c", "0.5", ParamKind::open(0.0, 1.0), "discount"),
                param("eta", "exp:1", ParamKind::Law, "node weight law"),
            ],
            kind: None,
            build: |p| {
                Ok(Arc::new(PercMin {
                    c: p.f64("c")?,
                    eta: p.law("eta")?,
                }))
            },
            oracles: None,
            init: None,
        }),
        Box::new(Entry {
            id: "species_extinction",
            anchor: "X = eta + max_{i >= 1} e^{-xi_i} X_i",
            params: vec![param("eta", "exp:1", ParamKind::Law, "node weight law")],
            kind: None,
            build: |p| {
                Ok(Arc::new(Species {
                    eta: Some(p.law("eta")?),
                }))
            },
            oracles: None,
            init: None,
        }),
        Box::new(Entry {
            id: "species_extinction_hom",
            anchor: "X = max_{i >= 1} e^{-xi_i} X_i",
            params: vec![param(
                "a",
                "1",
                ParamKind::real(0.0, f64::INFINITY),
                "scale of the fixed point",
            )],
            kind: Some(OracleKind::ClosedCdf),
            build: |_| Ok(Arc::new(Species { eta: None })),
            oracles: Some(|p| Ok(vec![Oracle::ClosedCdf(Arc::new(RatioLaw(p.f64("a")?)))])),
            init: Some(|p| Ok(Arc::new(RatioLaw(p.f64("a")?)))),
        }),
    ]
}

pub struct FindWorstCase;

impl Rde for FindWorstCase {
    fn id(&self) -> &str {
        "find_worstcase"
    }
    fn state(&self) -> StateSpace {
        StateSpace::NONNEG
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        nd.arity = Arity::Finite(2);
        nd.push_extra(&Law::Uniform(0.0, 1.0));
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        let u = nd.extra[0];
        Value::Real(1.0 + (u * kids.child(0).x()).max((1.0 - u) * kids.child(1).x()))
    }
    fn monotone(&self) -> bool {
        true
    }
    fn discounted(&self) -> Option<&dyn Discounted> {
        Some(self)
    }
}

impl Discounted for FindWorstCase {
    fn norm_closed(&self, p: f64) -> Option<f64> {
        Some(2.0 / (p + 1.0))
    }
    fn sample_weights(&self, nd: &mut NoiseDraw) -> Vec<f64> {
        self.draw(nd);
        vec![nd.extra[0], 1.0 - nd.extra[0]]
    }
}

pub struct DiscountedBrw {
    pub c: f64,
    pub eta: Law,
}

impl Rde for DiscountedBrw {
    fn id(&self) -> &str {
        "discounted_brw"
    }
    fn state(&self) -> StateSpace {
        StateSpace::NONNEG
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        nd.arity = Arity::Finite(2);
        nd.push_extra(&self.eta);
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        Value::Real(nd.extra[0] + self.c * kids.child(0).x().max(kids.child(1).x()))
    }
    fn monotone(&self) -> bool {
        true
    }
    fn discounted(&self) -> Option<&dyn Discounted> {
        Some(self)
    }
}

impl Discounted for DiscountedBrw {
    fn norm_closed(&self, p: f64) -> Option<f64> {
        Some(2.0 * self.c.powf(p))
    }
    fn sample_weights(&self, _nd: &mut NoiseDraw) -> Vec<f64> {
        vec![self.c, self.c]
    }
}

pub struct PercMin {
    pub c: f64,
    pub eta: Law,
}

impl Rde for PercMin {
    fn id(&self) -> &str {
        "perc_min"
    }
    fn state(&self) -> StateSpace {
        StateSpace::NONNEG
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        nd.arity = Arity::Finite(2);
        nd.push_extra(&self.eta);
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        Value::Real(nd.extra[0] + self.c * kids.child(0).x().min(kids.child(1).x()))
    }
    fn monotone(&self) -> bool {
        true
    }
}

/// `η + max e^{-ξᵢ} Xᵢ` over a rate-1 Poisson process, or without `η`.
pub struct Species {
    pub eta: Option<Law>,
}

impl Rde for Species {
    fn id(&self) -> &str {
        if self.eta.is_some() {
            "species_extinction"
        } else {
            "species_extinction_hom"
        }
    }
    fn state(&self) -> StateSpace {
        StateSpace::NONNEG
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        nd.arity = Arity::Unbounded;
        nd.set_terms(TermLaw::Poisson { d: 1.0 });
        if let Some(eta) = &self.eta {
            nd.push_extra(eta);
        }
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, cx: &mut EvalCx) -> Value {
        let b = cx.bound(0);
        let mut h = cx.horizon();
        let mut best = 0.0f64;
        let mut k = 0;
        loop {
            let w = (-nd.term(k)).exp();
            let certified = b.is_some_and(|b| w * b <= best);
            if !h.admit(k, certified, cx) {
                break;
            }
            best = best.max(w * kids.child(k).x());
            k += 1;
        }
        Value::Real(nd.extra.first().copied().unwrap_or(0.0) + best)
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
    fn discounted(&self) -> Option<&dyn Discounted> {
        Some(self)
    }
}

impl Discounted for Species {
    fn norm_closed(&self, p: f64) -> Option<f64> {
        (p > 0.0).then(|| 1.0 / p)
    }
    fn sample_weights(&self, nd: &mut NoiseDraw) -> Vec<f64> {
        nd.set_terms(TermLaw::Poisson { d: 1.0 });
        let mut w = Vec::new();
        for k in 0.. {
            let x = (-nd.term(k)).exp();
            if x < NEGLIGIBLE {
                break;
            }
            w.push(x);
        }
        w
    }
}
