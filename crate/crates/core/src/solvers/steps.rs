//! Update directions and single-step operators.

use crate::error::{check_len, Error, Result};
use crate::field::Field;
use crate::measurements::Measurements;
use crate::sensing::{dispatch, Ensemble, Operator};
use crate::signal::Signal;

/// `(1/m) A^*(Az - y .* ph(Az))` into `grad`; leaves `Az` in `az`.
pub(crate) fn rwf_gradient_into<S: Field, O: Operator<S>>(op: &O, z: &[S], y: &[f64], az: &mut [S], grad: &mut [S]) {
    op.forward(z, az);
    let resid: Vec<S> = az.iter().zip(y).map(|(&p, &yi)| p - p.phase().scale(yi)).collect();
    op.adjoint(&resid, grad);
    let inv_m = 1.0 / op.m() as f64;
    grad.iter_mut().for_each(|g| *g = g.scale(inv_m));
}

/// `(1/m) sum_i (|a_i^* z|^2 - y_i^2) (a_i^* z) a_i` into `grad`.
pub(crate) fn wf_gradient_into<S: Field, O: Operator<S>>(op: &O, z: &[S], y: &[f64], az: &mut [S], grad: &mut [S]) {
    op.forward(z, az);
    let resid: Vec<S> = az.iter().zip(y).map(|(&p, &yi)| p.scale(p.norm_sqr() - yi * yi)).collect();
    op.adjoint(&resid, grad);
    let inv_m = 1.0 / op.m() as f64;
    grad.iter_mut().for_each(|g| *g = g.scale(inv_m));
}

/// `z -= step (a_i^* z - y_i ph(a_i^* z)) a_i`.
#[inline]
pub(crate) fn single_update<S: Field, O: Operator<S>>(op: &O, z: &mut [S], i: usize, yi: f64, step: f64) {
    let p = op.row_dot(i, z);
    let r = p - p.phase().scale(yi);
    op.add_row(i, -r.scale(step), z);
}

pub(crate) fn minibatch_update<S: Field, O: Operator<S>>(op: &O, z: &mut [S], idx: &[usize], y: &[f64], step: f64) {
    if let Some(l) = op.full_mask(idx) {
        return op.mask_step(l, z, y, step);
    }
    let coefs: Vec<S> = idx
        .iter()
        .map(|&i| {
            let p = op.row_dot(i, z);
            -(p - p.phase().scale(y[i])).scale(step)
        })
        .collect();
    for (&i, &c) in idx.iter().zip(&coefs) {
        op.add_row(i, c, z);
    }
}

/// Exact projection of the block onto its magnitude constraints.
pub(crate) fn block_update<S: Field, O: Operator<S>>(
    op: &O,
    z: &mut [S],
    idx: &[usize],
    y: &[f64],
    solve: BlockSolve,
) -> Result<()> {
    if solve == BlockSolve::Auto {
        if let Some(l) = op.full_mask(idx) {
            // A_G A_G^* = F diag(|d|^2) F^* = n I for a whole unit-modulus mask.
            op.mask_step(l, z, y, 1.0 / op.n() as f64);
            return Ok(());
        }
    }
    let k = idx.len();
    let rows: Vec<Vec<S>> = idx.iter().map(|&i| op.row(i)).collect();
    let resid: Vec<S> = idx
        .iter()
        .zip(&rows)
        .map(|(&i, r)| {
            let p = crate::sensing::dot_plain(r, z);
            p - p.phase().scale(y[i])
        })
        .collect();
    // Gram matrix G_pq = sum_j r_pj conj(r_qj), Hermitian positive semidefinite.
    let mut gram = vec![S::zero(); k * k];
    for p in 0..k {
        for q in 0..=p {
            let g = crate::field::inner(&rows[p], &rows[q]);
            gram[p * k + q] = g;
            gram[q * k + p] = g.conj();
        }
    }
    let coef = cholesky_solve(&mut gram, k, &resid)?;
    for (&i, &c) in idx.iter().zip(&coef) {
        op.add_row(i, -c, z);
    }
    Ok(())
}

/// Solves `G c = b` for Hermitian positive definite `G` (row-major, overwritten
/// by its Cholesky factor). A condition estimate `(max L_ii / min L_ii)^2`
/// above `1e12`, or a non-positive pivot, is reported as a degenerate block.
fn cholesky_solve<S: Field>(g: &mut [S], k: usize, b: &[S]) -> Result<Vec<S>> {
    for j in 0..k {
        let mut d = g[j * k + j].re();
        for p in 0..j {
            d -= g[j * k + p].norm_sqr();
        }
        if !(d > 0.0) {
            return Err(Error::DegenerateBlock(f64::INFINITY));
        }
        let ljj = d.sqrt();
        g[j * k + j] = S::from_re(ljj);
        for i in j + 1..k {
            let mut s = g[i * k + j];
            for p in 0..j {
                s -= g[i * k + p] * g[j * k + p].conj();
            }
            g[i * k + j] = s.scale(1.0 / ljj);
        }
    }
    let diag: Vec<f64> = (0..k).map(|j| g[j * k + j].re()).collect();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    let cond = (hi / lo).powi(2);
    if !(cond <= 1e12) {
        return Err(Error::DegenerateBlock(cond));
    }
    // L w = b, then L^* c = w.
    let mut w = b.to_vec();
    for i in 0..k {
        let mut s = w[i];
        for p in 0..i {
            s -= g[i * k + p] * w[p];
        }
        w[i] = s.scale(1.0 / diag[i]);
    }
    for i in (0..k).rev() {
        let mut s = w[i];
        for p in i + 1..k {
            s -= g[p * k + i].conj() * w[p];
        }
        w[i] = s.scale(1.0 / diag[i]);
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockSolve {
    /// Uses `A_G A_G^* = n I` when the block is a whole CDP mask.
    Auto,
    /// Always forms and factors the Gram matrix.
    Factorize,
}

fn check_measurements(a: &Ensemble, z: &Signal, y: &Measurements) -> Result<()> {
    check_len(a.n(), z.len())?;
    check_len(a.m(), y.len())
}

fn check_block(a: &Ensemble, idx: &[usize]) -> Result<()> {
    if idx.is_empty() {
        return Err(Error::Invalid("index set must be nonempty".into()));
    }
    let mut seen = idx.to_vec();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Invalid("index set must not repeat indices".into()));
    }
    a.check_index(*seen.last().unwrap())
}

/// RWF update direction `(1/m) sum_i (a_i^* z - y_i ph(a_i^* z)) a_i`, `ph(0) = 0`.
pub fn rwf_gradient(z: &Signal, y: &Measurements, a: &Ensemble) -> Result<Signal> {
    check_measurements(a, z, y)?;
    dispatch!(a, z, |op, z| {
        let mut az = vec![Field::zero(); op.m()];
        let mut g = vec![Field::zero(); op.n()];
        rwf_gradient_into(op, z, y.values(), &mut az, &mut g);
        Field::wrap(g)
    })
}

/// Gradient of `(1/4m) sum_i (|a_i^* z|^2 - y_i^2)^2`.
pub fn wf_gradient(z: &Signal, y: &Measurements, a: &Ensemble) -> Result<Signal> {
    check_measurements(a, z, y)?;
    dispatch!(a, z, |op, z| {
        let mut az = vec![Field::zero(); op.m()];
        let mut g = vec![Field::zero(); op.n()];
        wf_gradient_into(op, z, y.values(), &mut az, &mut g);
        Field::wrap(g)
    })
}

/// Single-sample IRWF update with the given step.
pub fn irwf_step(z: &Signal, i: usize, y: &Measurements, a: &Ensemble, step: f64) -> Result<Signal> {
    check_measurements(a, z, y)?;
    a.check_index(i)?;
    if !(step > 0.0) {
        return Err(Error::Invalid(format!("step must be positive, got {step}")));
    }
    let mut out = z.clone();
    dispatch!(a, &mut out, |op, z| single_update(op, z, i, y.values()[i], step))?;
    Ok(out)
}

/// Minibatch IRWF update over the index set `idx`.
pub fn minibatch_irwf_step(z: &Signal, idx: &[usize], y: &Measurements, a: &Ensemble, step: f64) -> Result<Signal> {
    check_measurements(a, z, y)?;
    check_block(a, idx)?;
    if !(step > 0.0) {
        return Err(Error::Invalid(format!("step must be positive, got {step}")));
    }
    let mut out = z.clone();
    dispatch!(a, &mut out, |op, z| minibatch_update(op, z, idx, y.values(), step))?;
    Ok(out)
}

/// Randomised Kaczmarz-PR update: IRWF with step `1 / ||a_i||^2`.
pub fn kaczmarz_step(z: &Signal, i: usize, y: &Measurements, a: &Ensemble) -> Result<Signal> {
    check_measurements(a, z, y)?;
    let rn = a.row_norm_sqr(i)?;
    if !(rn > 0.0) {
        return Err(Error::ZeroNorm("kaczmarz row"));
    }
    let mut out = z.clone();
    dispatch!(a, &mut out, |op, z| single_update(op, z, i, y.values()[i], 1.0 / rn))?;
    Ok(out)
}

/// Block Kaczmarz-PR update `z - A_G^+ (A_G z - y_G .* Ph(A_G z))`.
pub fn block_kaczmarz_step(z: &Signal, idx: &[usize], y: &Measurements, a: &Ensemble) -> Result<Signal> {
    block_kaczmarz_step_with(z, idx, y, a, BlockSolve::Auto)
}

pub fn block_kaczmarz_step_with(
    z: &Signal,
    idx: &[usize],
    y: &Measurements,
    a: &Ensemble,
    solve: BlockSolve,
) -> Result<Signal> {
    check_measurements(a, z, y)?;
    check_block(a, idx)?;
    if idx.len() > a.n() {
        return Err(Error::Invalid(format!("block of {} rows exceeds n = {}", idx.len(), a.n())));
    }
    let mut out = z.clone();
    dispatch!(a, &mut out, |op, z| block_update(op, z, idx, y.values(), solve))??;
    Ok(out)
}
