use std::sync::Arc;

use crate::distance::Cdf;
use crate::law::{open01, Law};
use crate::noise::{Arity, NoiseDraw};
use crate::pool::Sampler;
use crate::rde::{Children, EvalCx, Rde};
use crate::rng::Rng;
use crate::value::{StateSpace, Value};

use super::{param, CatalogEntry, ClosedCdf, Entry, Oracle, OracleKind, ParamKind};

/// State space `[1/2, 1] ∪ {∞}`.
pub const JOIN_TIMES: StateSpace = StateSpace::Interval {
    lo: 0.5,
    hi: 1.0,
    allow_inf: true,
};

/// Real code for `∞` used by gap statistics.
pub const INF_EMBED: f64 = 2.0;

pub(super) fn entries() -> Vec<Box<dyn CatalogEntry>> {
    vec![Box::new(Entry {
        id: "frozen_perc",
        anchor: "Y = Phi(min(Y_1, Y_2), U), Phi(x, u) = x if x > u else inf",
        params: vec![param(
            "x0",
            "1",
            ParamKind::real(0.5, 1.0),
            "upper end of the density part of the oracle",
        )],
        kind: Some(OracleKind::ClosedCdf),
        build: |_| Ok(Arc::new(FrozenPerc)),
        oracles: Some(|p| {
            Ok(vec![Oracle::ClosedCdf(Arc::new(FrozenNu {
                x0: p.f64("x0")?,
            }))])
        }),
        init: Some(|_| Ok(Arc::new(Law::Uniform(0.5, 1.0)))),
    })]
}

/// `Φ(x, u) = x` if `x > u`, else `∞`.
pub fn phi(x: Value, u: f64) -> Value {
    match x {
        Value::Real(v) if v > u => x,
        _ => Value::Inf,
    }
}

pub struct FrozenPerc;

impl Rde for FrozenPerc {
    fn id(&self) -> &str {
        "frozen_perc"
    }
    fn state(&self) -> StateSpace {
        JOIN_TIMES
    }
    fn draw(&self, nd: &mut NoiseDraw) {
        nd.arity = Arity::Finite(2);
        nd.push_extra(&Law::Uniform(0.0, 1.0));
    }
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, _cx: &mut EvalCx) -> Value {
        phi(kids.child(0).min(kids.child(1)), nd.extra[0])
    }
    fn embed(&self, v: &Value) -> f64 {
        if v.is_inf() {
            INF_EMBED
        } else {
            v.x()
        }
    }
}

/// Density `1/(2y²)` on `[1/2, x0]` plus an atom `1/(2 x0)` at `∞`.
#[derive(Clone, Copy, Debug)]
pub struct FrozenNu {
    pub x0: f64,
}

impl Cdf for FrozenNu {
    fn cdf(&self, y: f64) -> f64 {
        if y < 0.5 {
            0.0
        } else {
            1.0 - 1.0 / (2.0 * y.min(self.x0))
        }
    }
    fn inf_mass(&self) -> f64 {
        1.0 / (2.0 * self.x0)
    }
}

impl Sampler for FrozenNu {
    fn sample(&self, rng: &mut Rng) -> Value {
        let u = open01(rng);
        if u < 1.0 - 1.0 / (2.0 * self.x0) {
            Value::Real(1.0 / (2.0 * (1.0 - u)))
        } else {
            Value::Inf
        }
    }
}

impl ClosedCdf for FrozenNu {
    fn name(&self) -> String {
        format!("frozen_nu(x0={})", self.x0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nu_masses() {
        let nu = FrozenNu { x0: 1.0 };
        assert_eq!(nu.inf_mass(), 0.5);
        assert!((nu.cdf(0.75) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(nu.cdf(1.0), 0.5);
        assert_eq!(phi(Value::Real(0.7), 0.8), Value::Inf);
        assert_eq!(phi(Value::Real(0.7), 0.6), Value::Real(0.7));
        assert_eq!(phi(Value::Inf, 0.1), Value::Inf);
    }
}
