use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Clean,
    Bounded,
    Poisson,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseMeta {
    /// `||w|| / sqrt(m)` of the injected noise and how many values were clipped at zero.
    Bounded { noise_rms: f64, clipped: usize },
    Poisson { alpha: f64 },
}

/// Nonnegative magnitudes `y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    values: Vec<f64>,
    provenance: Provenance,
    noise_meta: Option<NoiseMeta>,
}

impl Measurements {
    pub fn new(values: Vec<f64>, provenance: Provenance, noise_meta: Option<NoiseMeta>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid("measurements need m >= 1".into()));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Invalid(format!("measurement {bad} is not a finite nonnegative value")));
        }
        Ok(Measurements { values, provenance, noise_meta })
    }

    pub fn clean(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Provenance::Clean, None)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn noise_meta(&self) -> Option<&NoiseMeta> {
        self.noise_meta.as_ref()
    }
}
