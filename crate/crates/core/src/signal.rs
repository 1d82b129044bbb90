//! Real or complex signal vectors and the phase-invariant distance.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{self, Field};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Real,
    Complex,
}

impl FieldKind {
    pub fn tag(self) -> u8 {
        match self {
            FieldKind::Real => 0,
            FieldKind::Complex => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(FieldKind::Real),
            1 => Ok(FieldKind::Complex),
            t => Err(Error::Format(format!("unknown field tag {t}"))),
        }
    }
}

/// A length-`n` vector over the reals or the complex numbers.
///
/// Signals built through [`Signal::real`] / [`Signal::complex`] are checked
/// to be non-empty and finite. The enum variants stay public so solver
/// iterates (which may legitimately diverge) can be carried around unchecked.
#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Signal {
    pub fn real(values: Vec<f64>) -> Result<Self> {
        Self::checked(Signal::Real(values))
    }

    pub fn complex(values: Vec<Complex64>) -> Result<Self> {
        Self::checked(Signal::Complex(values))
    }

    fn checked(s: Signal) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Invalid("signal must have n >= 1".into()));
        }
        if !s.is_finite() {
            return Err(Error::Invalid("signal entries must be finite".into()));
        }
        Ok(s)
    }

    pub fn zeros(n: usize, kind: FieldKind) -> Self {
        match kind {
            FieldKind::Real => Signal::Real(vec![0.0; n]),
            FieldKind::Complex => Signal::Complex(vec![Complex64::new(0.0, 0.0); n]),
        }
    }

    /// Standard Gaussian signal (circularly symmetric, `E|x_j|^2 = 1`, when complex).
    pub fn gaussian(n: usize, kind: FieldKind, seed: u64) -> Self {
        let mut rng = crate::rng::stream(seed, crate::rng::SIGNAL);
        match kind {
            FieldKind::Real => Signal::Real((0..n).map(|_| f64::gaussian(&mut rng)).collect()),
            FieldKind::Complex => Signal::Complex((0..n).map(|_| Complex64::gaussian(&mut rng)).collect()),
        }
    }

    pub fn kind(&self) -> FieldKind {
        match self {
            Signal::Real(_) => FieldKind::Real,
            Signal::Complex(_) => FieldKind::Complex,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Signal::Real(v) => v.len(),
            Signal::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Signal::Real(v) => v.iter().all(|x| x.is_finite()),
            Signal::Complex(v) => v.iter().all(|x| Field::is_finite(*x)),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            Signal::Real(v) => field::norm(v),
            Signal::Complex(v) => field::norm(v),
        }
    }

    pub fn as_real(&self) -> Option<&[f64]> {
        f64::slice(self)
    }

    pub fn as_complex(&self) -> Option<&[Complex64]> {
        Complex64::slice(self)
    }

    /// Promotes a real signal to the complex field; complex signals are cloned.
    pub fn to_complex(&self) -> Signal {
        match self {
            Signal::Real(v) => Signal::Complex(v.iter().map(|&x| Complex64::new(x, 0.0)).collect()),
            Signal::Complex(v) => Signal::Complex(v.clone()),
        }
    }

    pub fn scaled(&self, c: f64) -> Signal {
        match self {
            Signal::Real(v) => Signal::Real(v.iter().map(|&x| x * c).collect()),
            Signal::Complex(v) => Signal::Complex(v.iter().map(|&x| x * c).collect()),
        }
    }

    /// Multiplies by a complex scalar; real signals are promoted first.
    pub fn scaled_complex(&self, c: Complex64) -> Signal {
        match self.to_complex() {
            Signal::Complex(v) => Signal::Complex(v.into_iter().map(|x| x * c).collect()),
            Signal::Real(_) => unreachable!(),
        }
    }

    /// Flat binary container: 1-byte field tag, 8-byte little-endian `n`,
    /// then `n` (real) or `2n` (interleaved re/im) little-endian f64 values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.len();
        let width = match self.kind() {
            FieldKind::Real => 8,
            FieldKind::Complex => 16,
        };
        let mut out = Vec::with_capacity(9 + n * width);
        out.push(self.kind().tag());
        out.extend_from_slice(&(n as u64).to_le_bytes());
        match self {
            Signal::Real(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            Signal::Complex(v) => v.iter().for_each(|x| {
                out.extend_from_slice(&x.re.to_le_bytes());
                out.extend_from_slice(&x.im.to_le_bytes());
            }),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Signal> {
        if bytes.len() < 9 {
            return Err(Error::Format("truncated signal header".into()));
        }
        let kind = FieldKind::from_tag(bytes[0])?;
        let n = u64::from_le_bytes(bytes[1..9].try_into().unwrap()) as usize;
        let doubles = match kind {
            FieldKind::Real => n,
            FieldKind::Complex => n.checked_mul(2).ok_or_else(|| Error::Format("n overflows".into()))?,
        };
        let body = &bytes[9..];
        if body.len() != doubles * 8 {
            return Err(Error::Format(format!(
                "expected {} payload bytes, found {}",
                doubles * 8,
                body.len()
            )));
        }
        let vals = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        match kind {
            FieldKind::Real => Signal::real(vals.collect()),
            FieldKind::Complex => {
                let flat: Vec<f64> = vals.collect();
                Signal::complex(flat.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect())
            }
        }
    }
}

fn same_shape(z: &Signal, x: &Signal) -> Result<()> {
    if z.kind() != x.kind() {
        return Err(Error::Field(format!("{:?} vs {:?}", z.kind(), x.kind())));
    }
    crate::error::check_len(x.len(), z.len())
}

/// `min_phi || z e^{-j phi} - x ||`; for real signals `min(||z - x||, ||z + x||)`.
pub fn dist_up_to_phase(z: &Signal, x: &Signal) -> Result<f64> {
    same_shape(z, x)?;
    Ok(match (z, x) {
        (Signal::Real(z), Signal::Real(x)) => field::dist_up_to_phase(z, x),
        (Signal::Complex(z), Signal::Complex(x)) => field::dist_up_to_phase(z, x),
        _ => unreachable!(),
    })
}

/// `dist_up_to_phase(z, x) / ||x||`.
pub fn relative_error(z: &Signal, x: &Signal) -> Result<f64> {
    let nx = x.norm();
    if nx == 0.0 {
        return Err(Error::ZeroNorm("relative error against a zero reference"));
    }
    Ok(dist_up_to_phase(z, x)? / nx)
}
