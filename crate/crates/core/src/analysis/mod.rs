//! Population-level oracles for real Gaussian measurements: expected RWF and
//! WF losses as functions of the correlation between `z` and `x`, the density
//! of `|uv|` for correlated standard normals, and the sign-flip bound used in
//! the local analysis of RWF.

pub mod quad;
pub mod special;

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;
use crate::solvers::fmt_num;
use quad::{geometric_breakpoints, integrate_pieces, Tolerance};
use special::{bessel_k0e, erfc};

/// Above this `|rho|` the quadrature is replaced by the `|rho| = 1` value.
pub const RHO_SWITCHOVER: f64 = 1.0 - 1e-8;
const TAIL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationState {
    rho: f64,
    norm_x: f64,
    norm_z: f64,
}

impl CorrelationState {
    /// `|rho|` up to `1 + 1e-12` is clamped into `[-1, 1]`.
    pub fn new(rho: f64, norm_x: f64, norm_z: f64) -> Result<Self> {
        if !rho.is_finite() || rho.abs() > 1.0 + 1e-12 {
            return Err(Error::Invalid(format!("correlation {rho} outside [-1, 1]")));
        }
        if !(norm_x > 0.0 && norm_x.is_finite()) {
            return Err(Error::Invalid(format!("norm_x must be positive, got {norm_x}")));
        }
        if !(norm_z >= 0.0 && norm_z.is_finite()) {
            return Err(Error::Invalid(format!("norm_z must be nonnegative, got {norm_z}")));
        }
        Ok(CorrelationState { rho: rho.clamp(-1.0, 1.0), norm_x, norm_z })
    }

    /// State of `z` relative to `x` for real vectors.
    pub fn from_vectors(z: &[f64], x: &[f64]) -> Result<Self> {
        crate::error::check_len(x.len(), z.len())?;
        let nx = crate::field::norm(x);
        let nz = crate::field::norm(z);
        let dot: f64 = z.iter().zip(x).map(|(a, b)| a * b).sum();
        let rho = if nz == 0.0 || nx == 0.0 { 0.0 } else { dot / (nx * nz) };
        Self::new(rho.clamp(-1.0, 1.0), nx, nz)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn norm_x(&self) -> f64 {
        self.norm_x
    }
    pub fn norm_z(&self) -> f64 {
        self.norm_z
    }
}

/// `E|uv|` for standard normals with correlation `rho`:
/// `((1 - rho^2)^{3/2} / pi) int_0^inf t (e^{rho t} + e^{-rho t}) K0(t) dt`.
pub fn expected_abs_product(rho: f64) -> Result<f64> {
    if !rho.is_finite() || rho.abs() > 1.0 + 1e-12 {
        return Err(Error::Invalid(format!("correlation {rho} outside [-1, 1]")));
    }
    let r = rho.abs().min(1.0);
    if r > RHO_SWITCHOVER {
        return Ok(1.0);
    }
    let beta = 1.0 - r;
    // (1 - r)(1 + r) avoids the cancellation in 1 - r^2 near |rho| = 1.
    let pre = ((1.0 - r) * (1.0 + r)).powf(1.5) / PI;
    // t K0(t) cosh-type integrand <= sqrt(2 pi t) e^{-beta t}; integrate the tail bound.
    let tail = |t: f64| pre * (2.0 * PI).sqrt() * (-beta * t).exp() * (t.sqrt() / beta + 0.5 / (beta * beta * t.sqrt()));
    let mut upper = 16.0;
    while tail(upper) > TAIL_TOL {
        upper *= 2.0;
    }
    let mut f = |t: f64| pre * t * ((-beta * t).exp() + (-(1.0 + r) * t).exp()) * bessel_k0e(t);
    let est = integrate_pieces(&mut f, &geometric_breakpoints(upper), Tolerance { abs: 1e-11, rel: 1e-13, max_intervals: 4000 })?;
    Ok(est.value)
}

/// `(1/2)||x||^2 + (1/2)||z||^2 - ||x|| ||z|| E|uv|`.
pub fn expected_rwf_loss(s: &CorrelationState) -> Result<f64> {
    let base = 0.5 * s.norm_x * s.norm_x + 0.5 * s.norm_z * s.norm_z;
    if s.norm_z == 0.0 {
        return Ok(base);
    }
    let cross = s.norm_x * s.norm_z * expected_abs_product(s.rho)?;
    Ok((base - cross).max(0.0))
}

/// `(3/4)||x||^4 + (3/4)||z||^4 - (1/2)||x||^2 ||z||^2 - (rho ||x|| ||z||)^2`.
pub fn expected_wf_loss(s: &CorrelationState) -> f64 {
    let (x2, z2) = (s.norm_x * s.norm_x, s.norm_z * s.norm_z);
    let c = s.rho * s.norm_x * s.norm_z;
    0.75 * x2 * x2 + 0.75 * z2 * z2 - 0.5 * x2 * z2 - c * c
}

/// Density of `|uv|` at `x > 0` for correlation `|rho| < 1`.
pub fn product_magnitude_density(x: f64, rho: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Invalid(format!("density argument must be positive, got {x}")));
    }
    if !(rho.abs() < 1.0) {
        return Err(Error::Invalid(format!("density needs |rho| < 1, got {rho}")));
    }
    let q = (1.0 - rho) * (1.0 + rho);
    let s = x / q;
    // e^{+-rho s} K0(s) = k0e(s) e^{(+-rho - 1) s}, free of overflow.
    let pair = ((rho - 1.0) * s).exp() + ((-rho - 1.0) * s).exp();
    Ok(bessel_k0e(s) * pair / (PI * q.sqrt()))
}

/// Upper bound on `P{(a^T x)(a^T z) < 0 | (a^T x)^2 = t ||x||^2}` for `z = x + h`:
/// `erfc(sqrt(t) ||x|| / (2 ||h||))`. Requires `||h|| < (1 - 1/sqrt 2) ||x||`.
pub fn sign_flip_bound(t: f64, norm_x: f64, norm_h: f64) -> Result<f64> {
    if !(t > 0.0) || !(norm_x > 0.0) || !(norm_h > 0.0) || !t.is_finite() || !norm_x.is_finite() {
        return Err(Error::Invalid("sign flip bound needs positive t, ||x|| and ||h||".into()));
    }
    if !(norm_h < (1.0 - 1.0 / SQRT_2) * norm_x) {
        return Err(Error::OutsideBoundRegime { norm_h, norm_x });
    }
    Ok(erfc(t.sqrt() * norm_x / (2.0 * norm_h)).clamp(0.0, 1.0))
}

/// The sign-flip bound averaged over `t ~ chi^2_1`; an upper bound on the
/// unconditional flip probability.
pub fn expected_sign_flip_bound(norm_x: f64, norm_h: f64) -> Result<f64> {
    sign_flip_bound(1.0, norm_x, norm_h)?;
    // t = s^2 with s ~ N(0,1): 2 int_0^inf erfc(c s) phi(s) ds.
    let c = norm_x / (2.0 * norm_h);
    let mut f = |s: f64| 2.0 * erfc(c * s) * (-0.5 * s * s).exp() / (2.0 * PI).sqrt();
    Ok(integrate_pieces(&mut f, &geometric_breakpoints(40.0), Tolerance { abs: 1e-13, rel: 1e-12, max_intervals: 2000 })?.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub estimate: f64,
    pub std_error: f64,
}

/// Sample mean and standard error of `(1/2)(|u| ||z|| - |v| ||x||)^2` over
/// correlated standard normal pairs.
pub fn monte_carlo_expected_rwf_loss(s: &CorrelationState, samples: usize, seed: u64) -> Result<MonteCarlo> {
    if samples < 1000 {
        return Err(Error::Invalid(format!("need at least 1000 samples, got {samples}")));
    }
    let mut rng = rng::stream(seed, rng::ANALYSIS);
    let c = (1.0 - s.rho * s.rho).max(0.0).sqrt();
    let (mut mean, mut m2) = (0.0, 0.0);
    for k in 0..samples {
        let v: f64 = rng.sample(StandardNormal);
        let w: f64 = rng.sample(StandardNormal);
        let u = s.rho * v + c * w;
        let d = u.abs() * s.norm_z - v.abs() * s.norm_x;
        let val = 0.5 * d * d;
        let delta = val - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (val - mean);
    }
    let var = m2 / (samples - 1) as f64;
    Ok(MonteCarlo { estimate: mean, std_error: (var / samples as f64).sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignFlipBin {
    pub t_lo: f64,
    pub t_hi: f64,
    pub samples: usize,
    pub flips: usize,
    /// The bound at `t_lo`, its largest value over the bin.
    pub bound: f64,
}

impl SignFlipBin {
    pub fn frequency(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.flips as f64 / self.samples as f64
        }
    }

    /// Binomial standard error at the bound's probability.
    pub fn std_error(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            (self.bound * (1.0 - self.bound) / self.samples as f64).sqrt()
        }
    }
}

/// Draws `samples` Gaussian rows against a fixed `x` and `z = x + h` with
/// `||h|| = h_ratio ||x||` and tallies sign disagreements per bin of
/// `t = (a^T x)^2 / ||x||^2`. `edges` must start at 0 and increase; the last
/// bin is open-ended.
pub fn sign_flip_experiment(n: usize, h_ratio: f64, samples: usize, edges: &[f64], seed: u64) -> Result<Vec<SignFlipBin>> {
    if n == 0 || edges.is_empty() || edges[0] != 0.0 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Invalid("sign flip experiment needs n >= 1 and increasing edges from 0".into()));
    }
    let x = crate::signal::Signal::gaussian(n, crate::signal::FieldKind::Real, seed);
    let x = x.as_real().unwrap();
    let nx = crate::field::norm(x);
    let mut rng = rng::stream(seed, rng::ANALYSIS);
    let dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let scale = h_ratio * nx / crate::field::norm(&dir);
    let z: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + scale * d).collect();
    let nh = h_ratio * nx;
    let mut bins: Vec<SignFlipBin> = edges
        .iter()
        .enumerate()
        .map(|(k, &lo)| {
            let bound = if lo == 0.0 { Ok(1.0) } else { sign_flip_bound(lo, nx, nh) };
            bound.map(|bound| SignFlipBin {
                t_lo: lo,
                t_hi: edges.get(k + 1).copied().unwrap_or(f64::INFINITY),
                samples: 0,
                flips: 0,
                bound,
            })
        })
        .collect::<Result<_>>()?;
    let mut a = vec![0.0; n];
    for _ in 0..samples {
        a.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let ax: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
        let az: f64 = a.iter().zip(&z).map(|(p, q)| p * q).sum();
        let t = ax * ax / (nx * nx);
        let k = edges.partition_point(|&e| e <= t) - 1;
        bins[k].samples += 1;
        if ax * az < 0.0 {
            bins[k].flips += 1;
        }
    }
    Ok(bins)
}

pub const LOSS_SURFACE_HEADER: &str = "rho,norm_z,expected_rwf_loss,expected_wf_loss";

/// Writes the expected-loss surface on `rho_points` equispaced correlations in
/// `[-1, 1]` for each `norm_z` level, with `||x|| = norm_x`.
pub fn write_loss_surface<W: Write>(out: &mut W, rho_points: usize, norm_levels: &[f64], norm_x: f64) -> Result<()> {
    if rho_points < 2 {
        return Err(Error::Invalid("the rho grid needs at least 2 points".into()));
    }
    let io = |e: std::io::Error| Error::Format(e.to_string());
    writeln!(out, "{LOSS_SURFACE_HEADER}").map_err(io)?;
    for &nz in norm_levels {
        for i in 0..rho_points {
            let rho = -1.0 + 2.0 * i as f64 / (rho_points - 1) as f64;
            let s = CorrelationState::new(rho, norm_x, nz)?;
            let rwf = expected_rwf_loss(&s)?;
            let wf = expected_wf_loss(&s);
            writeln!(out, "{},{},{},{}", fmt_num(rho), fmt_num(nz), fmt_num(rwf), fmt_num(wf)).map_err(io)?;
        }
    }
    Ok(())
}
