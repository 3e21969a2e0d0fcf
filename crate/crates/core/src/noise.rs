use rand::Rng as _;
use rand_distr::{Distribution, Exp1};

use crate::law::Law;
use crate::rng::{stream, Purpose, Rng};
use crate::value::Value;

/// Number of children an evaluation may read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    Finite(usize),
    Unbounded,
}

/// How the per-child noise terms `ξ₁, ξ₂, …` are generated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TermLaw {
    None,
    /// Points of a Poisson process on `(0, ∞)` with mean measure `x^d / d`
    /// (rate `x^{d-1}`); `d = 1` is the homogeneous rate-1 process.
    Poisson {
        d: f64,
    },
    /// Independent draws from one law.
    Iid(Law),
}

/// One realization of `(ξ, N)`.
///
/// Terms are generated lazily from their own stream, so extending the
/// sequence never changes earlier terms.
#[derive(Clone, Debug)]
pub struct NoiseDraw {
    pub arity: Arity,
    pub extra: Vec<f64>,
    pub cross: Vec<Value>,
    terms: Vec<f64>,
    gamma: f64,
    law: TermLaw,
    rng: Rng,
    term_rng: Rng,
}

impl NoiseDraw {
    pub fn new(key: u64, index: u64) -> NoiseDraw {
        NoiseDraw {
            arity: Arity::Finite(0),
            extra: Vec::new(),
            cross: Vec::new(),
            terms: Vec::new(),
            gamma: 0.0,
            law: TermLaw::None,
            rng: stream(key, index, Purpose::Noise),
            term_rng: stream(key, index, Purpose::Terms),
        }
    }

    /// Stream for the non-term part of the noise (arity, extras, cross refs).
    pub fn rng(&mut self) -> &mut Rng {
        &mut self.rng
    }

    pub fn set_terms(&mut self, law: TermLaw) {
        self.law = law;
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    pub fn push_extra(&mut self, law: &Law) -> f64 {
        let v = law.sample(&mut self.rng);
        self.extra.push(v);
        v
    }

    /// Term `k` (0-based), generating it and its predecessors if needed.
    pub fn term(&mut self, k: usize) -> f64 {
        while self.terms.len() <= k {
            let next = match self.law {
                TermLaw::None => panic!("noise has no terms"),
                TermLaw::Poisson { d } => {
                    let e: f64 = Exp1.sample(&mut self.term_rng);
                    self.gamma += e;
                    if d == 1.0 {
                        self.gamma
                    } else {
                        (d * self.gamma).powf(1.0 / d)
                    }
                }
                TermLaw::Iid(law) => law.sample(&mut self.term_rng),
            };
            self.terms.push(next);
        }
        self.terms[k]
    }

    /// Number of terms generated so far.
    pub fn materialized(&self) -> usize {
        self.terms.len()
    }

    pub fn finite_arity(&self) -> Option<usize> {
        match self.arity {
            Arity::Finite(n) => Some(n),
            Arity::Unbounded => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_terms_increase_and_extend_stably() {
        let mut a = NoiseDraw::new(11, 5);
        a.set_terms(TermLaw::Poisson { d: 1.0 });
        let first: Vec<f64> = (0..5).map(|k| a.term(k)).collect();
        let more: Vec<f64> = (0..20).map(|k| a.term(k)).collect();
        assert_eq!(&more[..5], &first[..]);
        assert!(more.windows(2).all(|w| w[0] < w[1]));

        let mut b = NoiseDraw::new(11, 5);
        b.set_terms(TermLaw::Poisson { d: 1.0 });
        b.push_extra(&Law::Exp(1.0));
        assert_eq!(b.term(19), more[19]);
    }

    #[test]
    fn poisson_mean_measure() {
        // E #{ξ ≤ x} = x^d / d
        for d in [1.0, 2.0] {
            let x: f64 = 1.5;
            let n = 20_000;
            let mut count = 0usize;
            for i in 0..n {
                let mut nd = NoiseDraw::new(3, i);
                nd.set_terms(TermLaw::Poisson { d });
                let mut k = 0;
                while nd.term(k) <= x {
                    count += 1;
                    k += 1;
                }
            }
            let mean = count as f64 / n as f64;
            let expect = x.powf(d) / d;
            assert!((mean - expect).abs() < 0.05, "d={d}: {mean} vs {expect}");
        }
    }
}
