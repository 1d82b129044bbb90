use rand_distr::{Distribution, Poisson};

use crate::error::{check_len, Error, Result};
use crate::field::Field;
use crate::measurements::{Measurements, NoiseMeta, Provenance};
use crate::rng;
use crate::signal::Signal;

use super::{dispatch, Ensemble, Operator};

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    None,
    /// `y_i = |a_i^* x| + w_i`, clipped at zero.
    Bounded { w: Vec<f64> },
    /// `y_i = sqrt(alpha * Poisson(|a_i^* x|^2 / alpha))`.
    Poisson { alpha: f64, seed: u64 },
}

impl NoiseSpec {
    /// Gaussian-direction noise rescaled so that `||w|| / sqrt(m) = rms` exactly.
    pub fn bounded_gaussian(m: usize, rms: f64, seed: u64) -> Result<Self> {
        if m == 0 || !(rms.is_finite() && rms >= 0.0) {
            return Err(Error::Invalid("bounded noise needs m >= 1 and a finite rms >= 0".into()));
        }
        let mut r = rng::stream(seed, rng::NOISE);
        let w: Vec<f64> = (0..m).map(|_| f64::gaussian(&mut r)).collect();
        let norm = crate::field::norm(&w);
        let s = if norm > 0.0 { rms * (m as f64).sqrt() / norm } else { 0.0 };
        Ok(NoiseSpec::Bounded { w: w.into_iter().map(|v| v * s).collect() })
    }

    pub fn poisson(alpha: f64, seed: u64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Invalid(format!("poisson alpha must be positive, got {alpha}")));
        }
        Ok(NoiseSpec::Poisson { alpha, seed })
    }

    pub fn scaled(&self, c: f64) -> Self {
        match self {
            NoiseSpec::Bounded { w } => NoiseSpec::Bounded { w: w.iter().map(|v| v * c).collect() },
            other => other.clone(),
        }
    }
}

/// Magnitude measurements of `x` under `a`, with optional noise.
pub fn measure(a: &Ensemble, x: &Signal, noise: &NoiseSpec) -> Result<Measurements> {
    check_len(a.n(), x.len())?;
    let mags: Vec<f64> = dispatch!(a, x, |op, x| {
        let mut ax = vec![Field::zero(); op.m()];
        op.forward(x, &mut ax);
        ax.iter().map(|v| v.abs()).collect()
    })?;
    match noise {
        NoiseSpec::None => Measurements::clean(mags),
        NoiseSpec::Bounded { w } => {
            check_len(mags.len(), w.len())?;
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid("bounded noise must be finite".into()));
            }
            let mut clipped = 0;
            let y = mags
                .iter()
                .zip(w)
                .map(|(&v, &wi)| {
                    let s = v + wi;
                    if s < 0.0 {
                        clipped += 1;
                        0.0
                    } else {
                        s
                    }
                })
                .collect();
            let noise_rms = crate::field::norm(w) / (w.len() as f64).sqrt();
            Measurements::new(y, Provenance::Bounded, Some(NoiseMeta::Bounded { noise_rms, clipped }))
        }
        NoiseSpec::Poisson { alpha, seed } => {
            if !(alpha.is_finite() && *alpha > 0.0) {
                return Err(Error::Invalid(format!("poisson alpha must be positive, got {alpha}")));
            }
            let mut r = rng::stream(*seed, rng::NOISE);
            let y = mags
                .iter()
                .map(|&v| {
                    let lambda = v * v / alpha;
                    let k = if lambda > 0.0 { Poisson::new(lambda).map(|p| p.sample(&mut r)).unwrap_or(lambda) } else { 0.0 };
                    (alpha * k).sqrt()
                })
                .collect();
            Measurements::new(y, Provenance::Poisson, Some(NoiseMeta::Poisson { alpha: *alpha }))
        }
    }
}
