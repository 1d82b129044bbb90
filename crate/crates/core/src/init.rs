//! Truncated spectral initialisation.
//!
//! The norm of `x` is estimated from the mean magnitude, rescaled by the row
//! l1 norms; its direction is the leading eigenvector of
//! `Y = (1/m) sum_i y_i 1{a_l l0 < y_i < a_u l0} a_i a_i^*`, found by power
//! iteration with `Y` applied as `v -> (1/m) A^*(w .* (A v))`.

use crate::error::{check_len, Error, Result};
use crate::field::{self, Field};
use crate::measurements::Measurements;
use crate::rng;
use crate::sensing::{dispatch, Ensemble, Operator};
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitParams {
    pub alpha_l: f64,
    pub alpha_u: f64,
    pub power_iters: usize,
    /// Stop once successive Rayleigh quotients differ by less than this.
    /// Zero always runs the full `power_iters`.
    pub power_tol: f64,
}

impl Default for InitParams {
    fn default() -> Self {
        InitParams { alpha_l: 1.0, alpha_u: 5.0, power_iters: 50, power_tol: 0.0 }
    }
}

impl InitParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha_l > 0.0
            && self.alpha_u.is_finite()
            && self.alpha_l < self.alpha_u
            && self.power_iters >= 1
            && self.power_tol >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("invalid init parameters {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitWarning {
    /// Fewer measurements than unknowns.
    Undersampled,
    /// Fewer samples survived truncation than the signal dimension.
    SparseTruncation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitResult {
    pub z0: Signal,
    pub lambda0: f64,
    pub kept_fraction: f64,
    pub iterations_used: usize,
    /// Rayleigh quotient of each power iterate.
    pub rayleigh: Vec<f64>,
    pub warnings: Vec<InitWarning>,
}

/// `lambda0 = (m n / sum_i ||a_i||_1) * mean(y)`.
pub fn estimate_norm(y: &Measurements, a: &Ensemble) -> Result<f64> {
    check_len(a.m(), y.len())?;
    let l1 = a.total_row_l1();
    if !(l1 > 0.0) {
        return Err(Error::ZeroNorm("sum of row l1 norms"));
    }
    let m = a.m() as f64;
    let mean_y = y.values().iter().sum::<f64>() / m;
    Ok(m * a.n() as f64 / l1 * mean_y)
}

/// Per-sample weights `y_i 1{alpha_l lambda0 < y_i < alpha_u lambda0}` (strict).
pub fn truncation_weights(y: &Measurements, lambda0: f64, p: &InitParams) -> Vec<f64> {
    let (lo, hi) = (p.alpha_l * lambda0, p.alpha_u * lambda0);
    y.values().iter().map(|&v| if lo < v && v < hi { v } else { 0.0 }).collect()
}

/// Matrix-free `Y v` for the given weights.
pub fn apply_spectral_matrix(a: &Ensemble, weights: &[f64], v: &Signal) -> Result<Signal> {
    check_len(a.m(), weights.len())?;
    check_len(a.n(), v.len())?;
    dispatch!(a, v, |op, v| {
        let mut buf = vec![Field::zero(); op.m()];
        let mut out = vec![Field::zero(); op.n()];
        spectral_matvec(op, weights, v, &mut buf, &mut out);
        Field::wrap(out)
    })
}

fn spectral_matvec<S: Field, O: Operator<S>>(op: &O, w: &[f64], v: &[S], buf: &mut [S], out: &mut [S]) {
    op.forward(v, buf);
    for (b, &wi) in buf.iter_mut().zip(w) {
        *b = b.scale(wi);
    }
    op.adjoint(buf, out);
    let inv_m = 1.0 / op.m() as f64;
    out.iter_mut().for_each(|o| *o = o.scale(inv_m));
}

fn power_iteration<S: Field, O: Operator<S>>(op: &O, w: &[f64], p: &InitParams, seed: u64) -> (Vec<S>, Vec<f64>) {
    let mut r = rng::stream(seed, rng::INIT);
    let mut v: Vec<S> = (0..op.n()).map(|_| S::gaussian(&mut r)).collect();
    let nv = field::norm(&v);
    v.iter_mut().for_each(|x| *x = x.scale(1.0 / nv));

    let mut buf = vec![S::zero(); op.m()];
    let mut yv = vec![S::zero(); op.n()];
    let mut rayleigh = Vec::with_capacity(p.power_iters);
    for _ in 0..p.power_iters {
        spectral_matvec(op, w, &v, &mut buf, &mut yv);
        let rq = field::inner(&yv, &v).re();
        let norm = field::norm(&yv);
        let converged = rayleigh.last().is_some_and(|&prev: &f64| (rq - prev).abs() < p.power_tol);
        rayleigh.push(rq);
        if !(norm > 0.0) || converged {
            break;
        }
        for (vi, &yi) in v.iter_mut().zip(&yv) {
            *vi = yi.scale(1.0 / norm);
        }
    }
    (v, rayleigh)
}

/// `z0 = lambda0 * v` with `v` the unit leading eigenvector of `Y`.
pub fn spectral_initialize(y: &Measurements, a: &Ensemble, p: &InitParams, seed: u64) -> Result<InitResult> {
    p.validate()?;
    let lambda0 = estimate_norm(y, a)?;
    let weights = truncation_weights(y, lambda0, p);
    let kept = weights.iter().filter(|&&w| w > 0.0).count();
    if kept == 0 {
        return Err(Error::EmptyTruncation);
    }
    let mut warnings = Vec::new();
    if a.m() < a.n() {
        warnings.push(InitWarning::Undersampled);
    }
    if kept < a.n() {
        warnings.push(InitWarning::SparseTruncation);
    }
    let probe = Signal::zeros(a.n(), a.field());
    let (z0, rayleigh) = dispatch!(a, &probe, |op, _z| {
        let (v, rq) = power_iteration(op, &weights, p, seed);
        (Field::wrap(v.into_iter().map(|x| x.scale(lambda0)).collect()), rq)
    })?;
    Ok(InitResult {
        z0,
        lambda0,
        kept_fraction: kept as f64 / a.m() as f64,
        iterations_used: rayleigh.len(),
        rayleigh,
        warnings,
    })
}
