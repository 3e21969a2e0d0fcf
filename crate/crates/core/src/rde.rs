//! The strategy trait implemented by every recursive distributional equation.

use crate::noise::NoiseDraw;
use crate::value::{StateSpace, Value};

/// Hard cap on the number of noise terms read by one evaluation.
pub const K_MAX: usize = 10_000;

/// Indexed access to the child values `X₁, X₂, …` of one evaluation.
pub trait Children {
    /// Child `j` (0-based). Repeated calls with the same `j` return the same value.
    fn child(&mut self, j: usize) -> Value;
}

/// Per-evaluation context: support bounds of the input pool and truncation
/// bookkeeping.
#[derive(Clone, Debug)]
pub struct EvalCx {
    /// Entry-specific bounds computed by [`Rde::support_bound`], if known.
    pub bound: Option<Vec<f64>>,
    /// Multiplier applied to the horizon once truncation is certified.
    pub horizon_factor: usize,
    /// Cap used when no certificate is available.
    pub k_max: usize,
    /// Set when an evaluation stopped at `k_max` without a certificate.
    pub capped: bool,
}

impl EvalCx {
    pub fn new(bound: Option<Vec<f64>>) -> EvalCx {
        EvalCx {
            bound,
            horizon_factor: 1,
            k_max: K_MAX,
            capped: false,
        }
    }

    pub fn bound(&self, i: usize) -> Option<f64> {
        self.bound.as_ref().and_then(|b| b.get(i).copied())
    }

    pub fn horizon(&self) -> Horizon {
        Horizon {
            stop: None,
            factor: self.horizon_factor.max(1),
            cap: self.k_max,
        }
    }
}

/// Truncation driver for loops over a lazily generated noise sequence.
#[derive(Clone, Copy, Debug)]
pub struct Horizon {
    stop: Option<usize>,
    factor: usize,
    cap: usize,
}

impl Horizon {
    /// Whether term `k` should be read. `certified` states that no term with
    /// index `>= k` can change the output.
    pub fn admit(&mut self, k: usize, certified: bool, cx: &mut EvalCx) -> bool {
        if let Some(s) = self.stop {
            return k < s;
        }
        if certified {
            let s = k + (k + 1) * (self.factor - 1);
            self.stop = Some(s);
            return k < s;
        }
        if k >= self.cap {
            cx.capped = true;
            return false;
        }
        true
    }
}

/// Multiplicative view of a discounted tree sum `X = η + max ξᵢ Xᵢ`.
pub trait Discounted: Send + Sync {
    /// Closed form of `c(p) = Σᵢ E[ξᵢ^p]`, when known.
    fn norm_closed(&self, p: f64) -> Option<f64>;
    /// One draw of the weights `(ξᵢ)`, truncated where they are negligible.
    fn sample_weights(&self, nd: &mut NoiseDraw) -> Vec<f64>;
}

/// One RDE `X =ᵈ g(ξ, Xᵢ, i ≥ 1)`.
pub trait Rde: Send + Sync {
    fn id(&self) -> &str;

    fn state(&self) -> StateSpace;

    /// Fill in arity, extras and the term law of a fresh noise draw.
    fn draw(&self, nd: &mut NoiseDraw);

    /// The map `g`. Must be deterministic given its inputs.
    fn eval(&self, nd: &mut NoiseDraw, kids: &mut dyn Children, cx: &mut EvalCx) -> Value;

    /// Entry-specific bounds over a pool, used to certify truncation.
    fn support_bound(&self, _pool: &[Value]) -> Option<Vec<f64>> {
        None
    }

    /// Whether evaluation reads an unbounded number of children.
    fn unbounded(&self) -> bool {
        false
    }

    /// Pointwise monotonicity of `g` in the child values.
    fn monotone(&self) -> bool {
        false
    }

    /// Real embedding used by gap and agreement statistics.
    fn embed(&self, v: &Value) -> f64 {
        v.coord(0)
    }

    /// Agreement tolerance for tree probes.
    fn eq_tol(&self) -> f64 {
        1e-9
    }

    /// Mean offspring count, when the arity is a Galton–Watson law.
    fn offspring_mean(&self) -> Option<f64> {
        None
    }

    fn discounted(&self) -> Option<&dyn Discounted> {
        None
    }
}

/// Per-coordinate maximum of the finite values of a pool.
pub fn pool_max(pool: &[Value], coord: usize) -> f64 {
    pool.iter()
        .filter(|v| !v.is_inf())
        .map(|v| v.coord(coord))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn pool_min(pool: &[Value], coord: usize) -> f64 {
    pool.iter()
        .filter(|v| !v.is_inf())
        .map(|v| v.coord(coord))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_stops_after_certificate() {
        let mut cx = EvalCx::new(None);
        let mut h = cx.horizon();
        assert!(h.admit(0, false, &mut cx));
        assert!(!h.admit(3, true, &mut cx));
        cx.horizon_factor = 2;
        let mut h = cx.horizon();
        assert!(h.admit(3, true, &mut cx));
        assert!(h.admit(6, false, &mut cx));
        assert!(!h.admit(7, false, &mut cx));
    }

    #[test]
    fn horizon_caps_without_certificate() {
        let mut cx = EvalCx::new(None);
        cx.k_max = 5;
        let mut h = cx.horizon();
        assert!(h.admit(4, false, &mut cx));
        assert!(!cx.capped);
        assert!(!h.admit(5, false, &mut cx));
        assert!(cx.capped);
    }
}
