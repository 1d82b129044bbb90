//! Scalar fields the solvers are generic over.
//!
//! Inner products conjugate the second argument: `<u, v> = sum_i u_i * conj(v_i)`.
//! Every routine in the crate uses this convention.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::signal::{FieldKind, Signal};

pub trait Field:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Default
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + 'static
{
    const KIND: FieldKind;

    fn zero() -> Self;
    fn from_re(re: f64) -> Self;
    fn re(self) -> f64;
    fn conj(self) -> Self;
    fn abs(self) -> f64;
    fn norm_sqr(self) -> f64;
    fn scale(self, s: f64) -> Self;
    fn is_finite(self) -> bool;

    /// `u / |u|`, with the value at zero defined as zero.
    fn phase(self) -> Self;

    /// Real: N(0, 1). Complex: independent real and imaginary parts, each N(0, 1/2).
    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn slice(signal: &Signal) -> Option<&[Self]>;
    fn wrap(values: Vec<Self>) -> Signal;
}

impl Field for f64 {
    const KIND: FieldKind = FieldKind::Real;

    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn from_re(re: f64) -> Self {
        re
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    #[inline]
    fn norm_sqr(self) -> f64 {
        self * self
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        self * s
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    #[inline]
    fn phase(self) -> Self {
        if self > 0.0 {
            1.0
        } else if self < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
    fn slice(signal: &Signal) -> Option<&[Self]> {
        match signal {
            Signal::Real(v) => Some(v),
            Signal::Complex(_) => None,
        }
    }
    fn wrap(values: Vec<Self>) -> Signal {
        Signal::Real(values)
    }
}

impl Field for Complex64 {
    const KIND: FieldKind = FieldKind::Complex;

    #[inline]
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    #[inline]
    fn from_re(re: f64) -> Self {
        Complex64::new(re, 0.0)
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    #[inline]
    fn abs(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        self * s
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    #[inline]
    fn phase(self) -> Self {
        let r = self.norm();
        if r > 0.0 {
            self / r
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * std::f64::consts::FRAC_1_SQRT_2, im * std::f64::consts::FRAC_1_SQRT_2)
    }
    fn slice(signal: &Signal) -> Option<&[Self]> {
        match signal {
            Signal::Complex(v) => Some(v),
            Signal::Real(_) => None,
        }
    }
    fn wrap(values: Vec<Self>) -> Signal {
        Signal::Complex(values)
    }
}

/// `<u, v>` with the second argument conjugated.
pub fn inner<S: Field>(u: &[S], v: &[S]) -> S {
    u.iter().zip(v).fold(S::zero(), |acc, (&a, &b)| acc + a * b.conj())
}

pub fn norm_sqr<S: Field>(u: &[S]) -> f64 {
    u.iter().map(|&a| a.norm_sqr()).sum()
}

pub fn norm<S: Field>(u: &[S]) -> f64 {
    norm_sqr(u).sqrt()
}

/// Distance up to a global phase.
///
/// The minimising unit scalar is the phase of `<x, z>`; the norm is then
/// evaluated directly instead of through `||z||^2 + ||x||^2 - 2|<z, x>|`,
/// which loses all precision once the distance drops below `sqrt(eps) ||x||`.
/// For the real field this is `min(||z - x||, ||z + x||)`.
pub fn dist_up_to_phase<S: Field>(z: &[S], x: &[S]) -> f64 {
    let c = inner(x, z).phase();
    let c = if c == S::zero() { S::from_re(1.0) } else { c };
    z.iter().zip(x).map(|(&a, &b)| (c * a - b).norm_sqr()).sum::<f64>().sqrt()
}
