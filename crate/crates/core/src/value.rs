use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A point of an RDE state space.
///
/// Scalars are extended reals: `Real` for finite values and `Inf` for the
/// `+∞` sentinel. Discrete alphabets are embedded as `Real`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Real(f64),
    Inf,
    Vec2([f64; 2]),
    Vec3([f64; 3]),
}

impl Value {
    pub const ZERO: Value = Value::Real(0.0);

    pub fn dim(&self) -> usize {
        match self {
            Value::Real(_) | Value::Inf => 1,
            Value::Vec2(_) => 2,
            Value::Vec3(_) => 3,
        }
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, Value::Inf)
    }

    pub fn is_scalar(&self) -> bool {
        self.dim() == 1
    }

    /// Scalar view with `Inf` mapped to `f64::INFINITY`; `None` for vectors.
    pub fn scalar(&self) -> Option<f64> {
        match *self {
            Value::Real(x) => Some(x),
            Value::Inf => Some(f64::INFINITY),
            _ => None,
        }
    }

    /// Scalar view; panics on vectors.
    pub fn x(&self) -> f64 {
        self.scalar().expect("scalar value expected")
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Value::Real(x) => Some(x),
            _ => None,
        }
    }

    /// Coordinate `i`; for scalars only `i == 0` is valid.
    pub fn coord(&self, i: usize) -> f64 {
        match (self, i) {
            (Value::Real(x), 0) => *x,
            (Value::Inf, 0) => f64::INFINITY,
            (Value::Vec2(v), i) if i < 2 => v[i],
            (Value::Vec3(v), i) if i < 3 => v[i],
            _ => panic!("coordinate {i} out of range for {self:?}"),
        }
    }

    pub fn from_ext(x: f64) -> Value {
        if x == f64::INFINITY {
            Value::Inf
        } else {
            Value::Real(x)
        }
    }

    pub fn min(self, other: Value) -> Value {
        if ext_cmp(&self, &other) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Value) -> Value {
        if ext_cmp(&self, &other) == Ordering::Less {
            other
        } else {
            self
        }
    }
}

/// Total order on scalar values with `Inf` above every real.
pub fn ext_cmp(a: &Value, b: &Value) -> Ordering {
    match (a, b) {
        (Value::Inf, Value::Inf) => Ordering::Equal,
        (Value::Inf, _) => Ordering::Greater,
        (_, Value::Inf) => Ordering::Less,
        _ => a.x().total_cmp(&b.x()),
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(x) => write!(f, "{x}"),
            Value::Inf => write!(f, "inf"),
            Value::Vec2([a, b]) => write!(f, "{a},{b}"),
            Value::Vec3([a, b, c]) => write!(f, "{a},{b},{c}"),
        }
    }
}

/// Declared state space of an RDE.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpace {
    /// Real interval, optionally with the `+∞` atom allowed.
    Interval {
        lo: f64,
        hi: f64,
        allow_inf: bool,
    },
    /// Finite integer alphabet `{lo, ..., hi}`.
    Discrete {
        lo: i64,
        hi: i64,
    },
    /// Integers `>= lo`.
    Integers {
        lo: i64,
    },
    Vector {
        dim: usize,
    },
}

impl StateSpace {
    pub const REAL: StateSpace = StateSpace::Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
        allow_inf: false,
    };
    pub const NONNEG: StateSpace = StateSpace::Interval {
        lo: 0.0,
        hi: f64::INFINITY,
        allow_inf: false,
    };
    pub const NONPOS: StateSpace = StateSpace::Interval {
        lo: f64::NEG_INFINITY,
        hi: 0.0,
        allow_inf: false,
    };
    pub const BINARY: StateSpace = StateSpace::Discrete { lo: 0, hi: 1 };

    pub fn dim(&self) -> usize {
        match self {
            StateSpace::Vector { dim } => *dim,
            _ => 1,
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (StateSpace::Interval { allow_inf, .. }, Value::Inf) => *allow_inf,
            (StateSpace::Interval { lo, hi, .. }, Value::Real(x)) => {
                x.is_finite() && *x >= *lo && *x <= *hi
            }
            (StateSpace::Discrete { lo, hi }, Value::Real(x)) => {
                x.fract() == 0.0 && *x >= *lo as f64 && *x <= *hi as f64
            }
            (StateSpace::Integers { lo }, Value::Real(x)) => {
                x.is_finite() && x.fract() == 0.0 && *x >= *lo as f64
            }
            (StateSpace::Vector { dim }, v) => {
                v.dim() == *dim && (0..*dim).all(|i| v.coord(i).is_finite())
            }
            _ => false,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            StateSpace::Interval { lo, hi, allow_inf } => {
                let mut s = format!("[{lo}, {hi}]");
                if *allow_inf {
                    s.push_str(" u {inf}");
                }
                s
            }
            StateSpace::Discrete { lo, hi } => format!("{{{lo}..{hi}}}"),
            StateSpace::Integers { lo } => format!("{{{lo}, {}, ...}}", lo + 1),
            StateSpace::Vector { dim } => format!("R^{dim}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inf_orders_above_reals() {
        assert_eq!(ext_cmp(&Value::Inf, &Value::Real(1e300)), Ordering::Greater);
        assert_eq!(Value::Inf.min(Value::Real(0.7)), Value::Real(0.7));
        assert_eq!(Value::Real(0.7).max(Value::Inf), Value::Inf);
        assert_eq!(Value::from_ext(f64::INFINITY), Value::Inf);
    }

    #[test]
    fn state_membership() {
        let fp = StateSpace::Interval {
            lo: 0.5,
            hi: 1.0,
            allow_inf: true,
        };
        assert!(fp.contains(&Value::Inf));
        assert!(fp.contains(&Value::Real(0.75)));
        assert!(!fp.contains(&Value::Real(0.2)));
        assert!(!StateSpace::NONNEG.contains(&Value::Inf));
        assert!(StateSpace::BINARY.contains(&Value::Real(1.0)));
        assert!(!StateSpace::BINARY.contains(&Value::Real(0.5)));
        assert!(StateSpace::Vector { dim: 2 }.contains(&Value::Vec2([1.0, -2.0])));
        assert!(!StateSpace::Vector { dim: 3 }.contains(&Value::Vec2([1.0, -2.0])));
    }
}
