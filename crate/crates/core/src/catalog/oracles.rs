//! Closed-form laws used as oracles.

use crate::distance::Cdf;
use crate::law::{ln_factorial, open01, Offspring};
use crate::pool::Sampler;
use crate::rng::Rng;
use crate::value::Value;

use super::ClosedCdf;

/// Bernoulli(p) on `{0, 1}`.
#[derive(Clone, Copy, Debug)]
pub struct Bern(pub f64);

impl Cdf for Bern {
    fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if x < 1.0 {
            1.0 - self.0
        } else {
            1.0
        }
    }
    fn cdf_left(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x <= 1.0 {
            1.0 - self.0
        } else {
            1.0
        }
    }
}

impl Sampler for Bern {
    fn sample(&self, rng: &mut Rng) -> Value {
        use rand::Rng as _;
        Value::Real(f64::from(u8::from(rng.random::<f64>() < self.0)))
    }
}

impl ClosedCdf for Bern {
    fn name(&self) -> String {
        format!("bernoulli({})", self.0)
    }
}

/// Standard logistic law `1 / (1 + e^{-x})`.
#[derive(Clone, Copy, Debug)]
pub struct Logistic;

impl Cdf for Logistic {
    fn cdf(&self, x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }
}

impl Sampler for Logistic {
    fn sample(&self, rng: &mut Rng) -> Value {
        let u = open01(rng);
        Value::Real((u / (1.0 - u)).ln())
    }
}

impl ClosedCdf for Logistic {
    fn name(&self) -> String {
        "logistic".into()
    }
}

/// `P(X <= x) = exp(-c e^{-x})` on `[0, ∞)`, with an atom `e^{-c}` at 0.
#[derive(Clone, Copy, Debug)]
pub struct GumbelAtom(pub f64);

impl Cdf for GumbelAtom {
    fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            (-self.0 * (-x).exp()).exp()
        }
    }
    fn cdf_left(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.cdf(x)
        }
    }
}

impl Sampler for GumbelAtom {
    fn sample(&self, rng: &mut Rng) -> Value {
        let u = open01(rng);
        if u <= (-self.0).exp() {
            Value::ZERO
        } else {
            Value::Real(-(-u.ln() / self.0).ln())
        }
    }
}

impl ClosedCdf for GumbelAtom {
    fn name(&self) -> String {
        format!("exp(-{} e^-x)", self.0)
    }
}

/// `P(X <= x) = x / (a + x)` on `[0, ∞)`.
#[derive(Clone, Copy, Debug)]
pub struct RatioLaw(pub f64);

impl Cdf for RatioLaw {
    fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if self.0 == 0.0 {
            1.0
        } else {
            x / (self.0 + x)
        }
    }
    fn cdf_left(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.cdf(x)
        }
    }
}

impl Sampler for RatioLaw {
    fn sample(&self, rng: &mut Rng) -> Value {
        let u = open01(rng);
        Value::Real(self.0 * u / (1.0 - u))
    }
}

impl ClosedCdf for RatioLaw {
    fn name(&self) -> String {
        format!("x/({}+x)", self.0)
    }
}

/// Atom `p0` at 0 mixed with `(1 - p0)·Exp(rate)`.
#[derive(Clone, Copy, Debug)]
pub struct AtomExp {
    pub p0: f64,
    pub rate: f64,
}

impl Cdf for AtomExp {
    fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            1.0 - (1.0 - self.p0) * (-self.rate * x).exp()
        }
    }
    fn cdf_left(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.cdf(x)
        }
    }
}

impl Sampler for AtomExp {
    fn sample(&self, rng: &mut Rng) -> Value {
        let u = open01(rng);
        if u <= self.p0 {
            Value::ZERO
        } else {
            Value::Real(-((1.0 - u) / (1.0 - self.p0)).ln() / self.rate)
        }
    }
}

impl ClosedCdf for AtomExp {
    fn name(&self) -> String {
        format!("{} δ0 + {} exp({})", self.p0, 1.0 - self.p0, self.rate)
    }
}

const MAX_SUPPORT: usize = 1_000_000;

/// Law on `{1, 2, …}` given by its pmf, with the missing mass at `+∞`.
pub struct IntegerLaw {
    pmf: Box<dyn Fn(usize) -> f64 + Send + Sync>,
    inf: f64,
    label: String,
}

impl IntegerLaw {
    fn cum(&self, x: f64) -> f64 {
        if x < 1.0 {
            return 0.0;
        }
        let top = (x.floor() as usize).min(MAX_SUPPORT);
        (1..=top).map(|k| (self.pmf)(k)).sum::<f64>().min(1.0)
    }

    pub fn pmf(&self, k: usize) -> f64 {
        (self.pmf)(k)
    }
}

impl Cdf for IntegerLaw {
    fn cdf(&self, x: f64) -> f64 {
        self.cum(x)
    }
    fn cdf_left(&self, x: f64) -> f64 {
        if x.fract() == 0.0 {
            self.cum(x - 1.0)
        } else {
            self.cum(x)
        }
    }
    fn inf_mass(&self) -> f64 {
        self.inf
    }
}

impl Sampler for IntegerLaw {
    fn sample(&self, rng: &mut Rng) -> Value {
        let u = open01(rng);
        let mut acc = 0.0;
        for k in 1..=MAX_SUPPORT {
            acc += (self.pmf)(k);
            if acc >= u {
                return Value::Real(k as f64);
            }
        }
        if self.inf > 0.0 {
            Value::Inf
        } else {
            Value::Real(MAX_SUPPORT as f64)
        }
    }
}

impl ClosedCdf for IntegerLaw {
    fn name(&self) -> String {
        self.label.clone()
    }
}

fn ln_choose(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Extinction probability: smallest fixed point of the pgf on `[0, 1]`.
pub fn extinction_prob(n: &Offspring) -> f64 {
    let mut q = 0.0;
    for _ in 0..100_000 {
        let next = n.pgf(q);
        if (next - q).abs() < 1e-15 {
            return next;
        }
        q = next;
    }
    q
}

/// `P(S_k = j)` for `S_k` a sum of `k` iid offspring counts.
fn sum_pmf(n: &Offspring, k: usize, j: usize) -> f64 {
    match *n {
        Offspring::Fixed(m) => f64::from(u8::from(m as usize * k == j)),
        Offspring::Bernoulli(p) => binom_pmf(k, p, j),
        Offspring::Binomial(m, p) => binom_pmf(m as usize * k, p, j),
        Offspring::Poisson(m) => {
            let lam = m * k as f64;
            if lam == 0.0 {
                f64::from(u8::from(j == 0))
            } else {
                (-lam + j as f64 * lam.ln() - ln_factorial(j)).exp()
            }
        }
        Offspring::Geometric(q) => {
            if q == 0.0 {
                return f64::from(u8::from(j == 0));
            }
            (ln_choose(j + k - 1, j) + k as f64 * (1.0 - q).ln() + j as f64 * q.ln()).exp()
        }
    }
}

fn binom_pmf(n: usize, p: f64, j: usize) -> f64 {
    if j > n {
        return 0.0;
    }
    if p == 0.0 {
        return f64::from(u8::from(j == 0));
    }
    if p == 1.0 {
        return f64::from(u8::from(j == n));
    }
    (ln_choose(n, j) + j as f64 * p.ln() + (n - j) as f64 * (1.0 - p).ln()).exp()
}

/// Total progeny of a Galton–Watson tree: `P(X = k) = P(S_k = k - 1) / k`.
pub fn progeny_law(n: Offspring) -> IntegerLaw {
    let inf = 1.0 - extinction_prob(&n);
    IntegerLaw {
        pmf: Box::new(move |k| {
            if k == 0 {
                0.0
            } else {
                sum_pmf(&n, k, k - 1) / k as f64
            }
        }),
        inf,
        label: format!("progeny({n})"),
    }
}

/// Height of a Galton–Watson tree: `P(X <= k) = φ^k(0)`.
pub fn height_law(n: Offspring) -> IntegerLaw {
    let q = extinction_prob(&n);
    let mut f = vec![0.0f64];
    while f.len() < 200_000 {
        let next = n.pgf(*f.last().unwrap());
        f.push(next);
        if (q - next).abs() < 1e-14 {
            break;
        }
    }
    let f = std::sync::Arc::new(f);
    IntegerLaw {
        pmf: Box::new(move |k| {
            if k == 0 || k >= f.len() {
                0.0
            } else {
                f[k] - f[k - 1]
            }
        }),
        inf: 1.0 - q,
        label: format!("height({n})"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn progeny_mass_and_mean() {
        let law = progeny_law(Offspring::Poisson(0.5));
        let mass: f64 = (1..500).map(|k| law.pmf(k)).sum();
        let mean: f64 = (1..500).map(|k| k as f64 * law.pmf(k)).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!((mean - 2.0).abs() < 1e-9);
        let geo = progeny_law(Offspring::Bernoulli(0.25));
        assert!((geo.pmf(3) - 0.25f64.powi(2) * 0.75).abs() < 1e-15);
    }

    #[test]
    fn height_law_fixed_point() {
        let law = height_law(Offspring::Binomial(2, 0.3));
        assert!((law.cdf(1.0) - 0.49).abs() < 1e-15);
        assert!((law.cdf(2.0) - (0.7f64 + 0.3 * 0.49).powi(2)).abs() < 1e-15);
        assert!(law.inf_mass() < 1e-12);
    }

    #[test]
    fn supercritical_progeny_has_infinite_atom() {
        let law = progeny_law(Offspring::Poisson(2.0));
        let q = extinction_prob(&Offspring::Poisson(2.0));
        assert!((q - 0.2031878699).abs() < 1e-9);
        assert!((law.inf_mass() - (1.0 - q)).abs() < 1e-12);
    }
}
