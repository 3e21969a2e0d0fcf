use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseDraw;
use crate::rde::Rde;
use crate::rng::derive;

/// `c(p) = Σᵢ E[ξᵢ^p]` by closed form and Monte Carlo.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub p: f64,
    pub closed: Option<f64>,
    pub monte_carlo: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl NormEstimate {
    /// The closed form when known, else the Monte Carlo value.
    pub fn value(&self) -> f64 {
        self.closed.unwrap_or(self.monte_carlo)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Smallest grid `p` with `c(p) < 1`.
    pub p: Option<f64>,
    pub c: Option<f64>,
    pub grid: Vec<NormEstimate>,
}

pub fn discount_norm(spec: &dyn Rde, p: f64, samples: usize, seed: u64) -> Result<NormEstimate> {
    let d = spec
        .discounted()
        .ok_or_else(|| Error::Config(format!("`{}` is not a discounted tree sum", spec.id())))?;
    if samples < 2 {
        return Err(Error::TooSmall(samples));
    }
    let key = derive(seed, p.to_bits());
    let xs: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut nd = NoiseDraw::new(key, i);
            d.sample_weights(&mut nd).iter().map(|w| w.powf(p)).sum()
        })
        .collect();
    let n = samples as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(NormEstimate {
        p,
        closed: d.norm_closed(p),
        monte_carlo: mean,
        std_error: (var / n).sqrt(),
        samples,
    })
}

/// Contraction certificate on the integer grid `1..=p_max`.
pub fn discount_certificate(
    spec: &dyn Rde,
    p_max: usize,
    samples: usize,
    seed: u64,
) -> Result<Certificate> {
    let mut grid = Vec::new();
    for p in 1..=p_max {
        let est = discount_norm(spec, p as f64, samples, seed)?;
        grid.push(est);
        if est.value() < 1.0 {
            return Ok(Certificate {
                p: Some(p as f64),
                c: Some(est.value()),
                grid,
            });
        }
    }
    Ok(Certificate {
        p: None,
        c: None,
        grid,
    })
}
