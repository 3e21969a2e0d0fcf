//! Scalar noise laws and offspring laws, parsed from short strings such as
//! `exp:1`, `uniform:0:1`, `pm1:0.3` or `poisson:1`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Law of a real noise variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Law {
    Const(f64),
    /// Exponential with the given mean.
    Exp(f64),
    Uniform(f64, f64),
    /// Bernoulli(p) on {0, 1}.
    Bern(f64),
    /// +1 with probability p, -1 otherwise.
    Pm1(f64),
    Normal(f64, f64),
    /// Cauchy with location and scale.
    Cauchy(f64, f64),
    /// Standard logistic shifted by the location.
    Logistic(f64),
}

fn nums(parts: &[&str], n: usize, src: &str) -> Result<Vec<f64>> {
    if parts.len() != n {
        return Err(Error::Config(format!(
            "law `{src}` expects {n} numeric argument(s)"
        )));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number `{p}` in `{src}`")))
        })
        .collect()
}

impl FromStr for Law {
    type Err = Error;

    fn from_str(s: &str) -> Result<Law> {
        let mut it = s.split(':');
        let head = it.next().unwrap_or_default();
        let rest: Vec<&str> = it.collect();
        let law = match head {
            "const" => Law::Const(nums(&rest, 1, s)?[0]),
            "exp" => {
                let m = if rest.is_empty() {
                    1.0
                } else {
                    nums(&rest, 1, s)?[0]
                };
                Law::Exp(m)
            }
            "uniform" => {
                let v = if rest.is_empty() {
                    vec![0.0, 1.0]
                } else {
                    nums(&rest, 2, s)?
                };
                Law::Uniform(v[0], v[1])
            }
            "bern" => Law::Bern(nums(&rest, 1, s)?[0]),
            "pm1" => Law::Pm1(nums(&rest, 1, s)?[0]),
            "normal" => {
                let v = nums(&rest, 2, s)?;
                Law::Normal(v[0], v[1])
            }
            "cauchy" => {
                let v = nums(&rest, 2, s)?;
                Law::Cauchy(v[0], v[1])
            }
            "logistic" => {
                let m = if rest.is_empty() {
                    0.0
                } else {
                    nums(&rest, 1, s)?[0]
                };
                Law::Logistic(m)
            }
            _ => return Err(Error::Config(format!("unknown law `{s}`"))),
        };
        law.validate()?;
        Ok(law)
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Law::Const(v) => write!(f, "const:{v}"),
            Law::Exp(m) => write!(f, "exp:{m}"),
            Law::Uniform(a, b) => write!(f, "uniform:{a}:{b}"),
            Law::Bern(p) => write!(f, "bern:{p}"),
            Law::Pm1(p) => write!(f, "pm1:{p}"),
            Law::Normal(m, s) => write!(f, "normal:{m}:{s}"),
            Law::Cauchy(m, s) => write!(f, "cauchy:{m}:{s}"),
            Law::Logistic(m) => write!(f, "logistic:{m}"),
        }
    }
}

impl Law {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Law::Const(v) => v.is_finite(),
            Law::Exp(m) => m > 0.0 && m.is_finite(),
            Law::Uniform(a, b) => a.is_finite() && b.is_finite() && a < b,
            Law::Bern(p) | Law::Pm1(p) => (0.0..=1.0).contains(&p),
            Law::Normal(m, s) | Law::Cauchy(m, s) => m.is_finite() && s >= 0.0,
            Law::Logistic(m) => m.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "law `{self}` has out-of-range parameters"
            )))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Law::Const(v) => v,
            Law::Exp(m) => {
                let e: f64 = Exp1.sample(rng);
                m * e
            }
            Law::Uniform(a, b) => a + (b - a) * rng.random::<f64>(),
            Law::Bern(p) => f64::from(u8::from(rng.random::<f64>() < p)),
            Law::Pm1(p) => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    -1.0
                }
            }
            Law::Normal(m, s) => {
                let z: f64 = StandardNormal.sample(rng);
                m + s * z
            }
            Law::Cauchy(m, s) => {
                let u: f64 = rng.random();
                m + s * (std::f64::consts::PI * (u - 0.5)).tan()
            }
            Law::Logistic(m) => {
                let u: f64 = open01(rng);
                m + (u / (1.0 - u)).ln()
            }
        }
    }

    /// Mean, when finite.
    pub fn mean(&self) -> Option<f64> {
        match *self {
            Law::Const(v) => Some(v),
            Law::Exp(m) => Some(m),
            Law::Uniform(a, b) => Some(0.5 * (a + b)),
            Law::Bern(p) => Some(p),
            Law::Pm1(p) => Some(2.0 * p - 1.0),
            Law::Normal(m, _) | Law::Logistic(m) => Some(m),
            Law::Cauchy(..) => None,
        }
    }

    pub fn variance(&self) -> Option<f64> {
        match *self {
            Law::Const(_) => Some(0.0),
            Law::Exp(m) => Some(m * m),
            Law::Uniform(a, b) => Some((b - a) * (b - a) / 12.0),
            Law::Bern(p) => Some(p * (1.0 - p)),
            Law::Pm1(p) => Some(4.0 * p * (1.0 - p)),
            Law::Normal(_, s) => Some(s * s),
            Law::Logistic(_) => Some(std::f64::consts::PI.powi(2) / 3.0),
            Law::Cauchy(..) => None,
        }
    }

    /// `E[e^{θ ξ}]`, when finite.
    pub fn mgf(&self, theta: f64) -> Option<f64> {
        match *self {
            Law::Const(v) => Some((theta * v).exp()),
            Law::Exp(m) => (theta * m < 1.0).then(|| 1.0 / (1.0 - theta * m)),
            Law::Uniform(a, b) => Some(if theta == 0.0 {
                1.0
            } else {
                ((theta * b).exp() - (theta * a).exp()) / (theta * (b - a))
            }),
            Law::Bern(p) => Some(1.0 - p + p * theta.exp()),
            Law::Pm1(p) => Some(p * theta.exp() + (1.0 - p) * (-theta).exp()),
            Law::Normal(m, s) => Some((theta * m + 0.5 * theta * theta * s * s).exp()),
            Law::Logistic(m) => {
                let t = theta.abs();
                (t < 1.0).then(|| {
                    let pt = std::f64::consts::PI * theta;
                    (theta * m).exp() * if theta == 0.0 { 1.0 } else { pt / pt.sin() }
                })
            }
            Law::Cauchy(..) => (theta == 0.0).then_some(1.0),
        }
    }

    /// Essential supremum.
    pub fn sup(&self) -> f64 {
        match *self {
            Law::Const(v) => v,
            Law::Uniform(_, b) => b,
            Law::Bern(p) => {
                if p > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Law::Pm1(p) => {
                if p > 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Law::Normal(_, s) if s == 0.0 => self.mean().unwrap_or(0.0),
            _ => f64::INFINITY,
        }
    }

    /// Essential supremum and its mass, when the law has an atom there.
    pub fn atom_at_sup(&self) -> Option<(f64, f64)> {
        match *self {
            Law::Const(v) => Some((v, 1.0)),
            Law::Bern(p) if p > 0.0 => Some((1.0, p)),
            Law::Bern(_) => Some((0.0, 1.0)),
            Law::Pm1(p) if p > 0.0 => Some((1.0, p)),
            Law::Pm1(_) => Some((-1.0, 1.0)),
            Law::Normal(m, s) if s == 0.0 => Some((m, 1.0)),
            _ => None,
        }
    }

    pub fn is_lattice(&self) -> bool {
        matches!(self, Law::Const(_) | Law::Bern(_) | Law::Pm1(_))
    }
}

/// A uniform draw on the open interval (0, 1).
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Law of an offspring count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Offspring {
    Fixed(u64),
    /// {0, 1} with P(1) = p.
    Bernoulli(f64),
    Poisson(f64),
    Binomial(u64, f64),
    /// P(N = k) = (1 - q) q^k on {0, 1, ...}.
    Geometric(f64),
}

impl FromStr for Offspring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Offspring> {
        let mut it = s.split(':');
        let head = it.next().unwrap_or_default();
        let rest: Vec<&str> = it.collect();
        let o = match head {
            "fixed" => Offspring::Fixed(nums(&rest, 1, s)?[0] as u64),
            "bernoulli" => Offspring::Bernoulli(nums(&rest, 1, s)?[0]),
            "poisson" => Offspring::Poisson(nums(&rest, 1, s)?[0]),
            "binomial" => {
                let v = nums(&rest, 2, s)?;
                Offspring::Binomial(v[0] as u64, v[1])
            }
            "geometric" => Offspring::Geometric(nums(&rest, 1, s)?[0]),
            _ => return Err(Error::Config(format!("unknown offspring law `{s}`"))),
        };
        let ok = match o {
            Offspring::Fixed(_) => true,
            Offspring::Bernoulli(p) | Offspring::Binomial(_, p) => (0.0..=1.0).contains(&p),
            Offspring::Poisson(m) => m >= 0.0 && m.is_finite(),
            Offspring::Geometric(q) => (0.0..1.0).contains(&q),
        };
        if ok {
            Ok(o)
        } else {
            Err(Error::Config(format!(
                "offspring law `{s}` has out-of-range parameters"
            )))
        }
    }
}

impl fmt::Display for Offspring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Offspring::Fixed(k) => write!(f, "fixed:{k}"),
            Offspring::Bernoulli(p) => write!(f, "bernoulli:{p}"),
            Offspring::Poisson(m) => write!(f, "poisson:{m}"),
            Offspring::Binomial(n, p) => write!(f, "binomial:{n}:{p}"),
            Offspring::Geometric(q) => write!(f, "geometric:{q}"),
        }
    }
}

impl Offspring {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match *self {
            Offspring::Fixed(k) => k as usize,
            Offspring::Bernoulli(p) => usize::from(rng.random::<f64>() < p),
            Offspring::Poisson(m) => {
                if m == 0.0 {
                    0
                } else {
                    let x: f64 = Poisson::new(m).expect("valid poisson").sample(rng);
                    x as usize
                }
            }
            Offspring::Binomial(n, p) => {
                Binomial::new(n, p).expect("valid binomial").sample(rng) as usize
            }
            Offspring::Geometric(q) => {
                let mut k = 0;
                while rng.random::<f64>() < q {
                    k += 1;
                }
                k
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Offspring::Fixed(k) => k as f64,
            Offspring::Bernoulli(p) => p,
            Offspring::Poisson(m) => m,
            Offspring::Binomial(n, p) => n as f64 * p,
            Offspring::Geometric(q) => q / (1.0 - q),
        }
    }

    pub fn pmf(&self, k: usize) -> f64 {
        match *self {
            Offspring::Fixed(j) => f64::from(u8::from(k as u64 == j)),
            Offspring::Bernoulli(p) => match k {
                0 => 1.0 - p,
                1 => p,
                _ => 0.0,
            },
            Offspring::Poisson(m) => (-m + k as f64 * m.ln() - ln_factorial(k)).exp(),
            Offspring::Binomial(n, p) => {
                if k as u64 > n {
                    0.0
                } else {
                    let n = n as usize;
                    (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
                        + k as f64 * p.ln()
                        + (n - k) as f64 * (1.0 - p).ln())
                    .exp()
                }
            }
            Offspring::Geometric(q) => (1.0 - q) * q.powi(k as i32),
        }
    }

    /// `E[N(N - 1)]`.
    pub fn factorial_moment2(&self) -> f64 {
        match *self {
            Offspring::Fixed(k) => (k * k.saturating_sub(1)) as f64,
            Offspring::Bernoulli(_) => 0.0,
            Offspring::Poisson(m) => m * m,
            Offspring::Binomial(n, p) => (n * n.saturating_sub(1)) as f64 * p * p,
            Offspring::Geometric(q) => 2.0 * q * q / ((1.0 - q) * (1.0 - q)),
        }
    }

    /// Probability generating function `E[s^N]`.
    pub fn pgf(&self, s: f64) -> f64 {
        match *self {
            Offspring::Fixed(k) => s.powi(k as i32),
            Offspring::Bernoulli(p) => 1.0 - p + p * s,
            Offspring::Poisson(m) => (m * (s - 1.0)).exp(),
            Offspring::Binomial(n, p) => (1.0 - p + p * s).powi(n as i32),
            Offspring::Geometric(q) => (1.0 - q) / (1.0 - q * s),
        }
    }

    /// Largest possible value, if bounded.
    pub fn max(&self) -> Option<usize> {
        match *self {
            Offspring::Fixed(k) => Some(k as usize),
            Offspring::Bernoulli(_) => Some(1),
            Offspring::Binomial(n, _) => Some(n as usize),
            _ => None,
        }
    }
}

pub fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn parse_roundtrip() {
        for s in [
            "exp:1",
            "uniform:-1:1",
            "bern:0.3",
            "pm1:0.9",
            "normal:0:2",
            "const:1.5",
            "cauchy:0:1",
            "logistic:0",
        ] {
            let l: Law = s.parse().unwrap();
            assert_eq!(l.to_string().parse::<Law>().unwrap(), l);
        }
        for s in [
            "fixed:2",
            "bernoulli:0.5",
            "poisson:1",
            "binomial:3:0.25",
            "geometric:0.5",
        ] {
            let o: Offspring = s.parse().unwrap();
            assert_eq!(o.to_string().parse::<Offspring>().unwrap(), o);
        }
        assert!("exp:-1".parse::<Law>().is_err());
        assert!("bern:2".parse::<Law>().is_err());
        assert!("zeta:2".parse::<Law>().is_err());
    }

    #[test]
    fn pmf_sums_to_one() {
        for o in [
            Offspring::Poisson(1.3),
            Offspring::Binomial(5, 0.3),
            Offspring::Geometric(0.4),
            Offspring::Bernoulli(0.5),
        ] {
            let total: f64 = (0..200).map(|k| o.pmf(k)).sum();
            assert!((total - 1.0).abs() < 1e-10, "{o}: {total}");
            let mean: f64 = (0..200).map(|k| k as f64 * o.pmf(k)).sum();
            assert!((mean - o.mean()).abs() < 1e-9);
        }
    }

    #[test]
    fn sample_means() {
        let mut rng = stream(1, 0, Purpose::Aux);
        for l in [
            Law::Exp(2.0),
            Law::Uniform(-1.0, 3.0),
            Law::Pm1(0.3),
            Law::Logistic(0.5),
        ] {
            let n = 200_000;
            let m: f64 = (0..n).map(|_| l.sample(&mut rng)).sum::<f64>() / n as f64;
            let sd = l.variance().unwrap().sqrt();
            assert!(
                (m - l.mean().unwrap()).abs() < 5.0 * sd / (n as f64).sqrt(),
                "{l}: {m}"
            );
        }
    }

    #[test]
    fn mgf_matches_simulation() {
        let mut rng = stream(2, 0, Purpose::Aux);
        let l = Law::Pm1(0.9);
        let n = 100_000;
        let m: f64 = (0..n)
            .map(|_| (0.5 * l.sample(&mut rng)).exp())
            .sum::<f64>()
            / n as f64;
        assert!((m - l.mgf(0.5).unwrap()).abs() < 0.01);
        assert!(Law::Exp(1.0).mgf(1.0).is_none());
    }
}
