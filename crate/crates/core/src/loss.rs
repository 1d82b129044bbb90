//! Empirical loss functions.

use crate::error::{check_len, Result};
use crate::field::Field;
use crate::measurements::Measurements;
use crate::sensing::{dispatch, Ensemble, Operator};
use crate::signal::Signal;

/// `(1/2m) sum_i (|a_i^* z| - y_i)^2`.
pub fn rwf_loss(z: &Signal, y: &Measurements, a: &Ensemble) -> Result<f64> {
    check_len(a.n(), z.len())?;
    check_len(a.m(), y.len())?;
    dispatch!(a, z, |op, z| {
        let mut az = vec![Field::zero(); op.m()];
        op.forward(z, &mut az);
        rwf_loss_from_products(&az, y.values())
    })
}

/// `(1/4m) sum_i (|a_i^* z|^2 - y_i^2)^2`.
pub fn wf_loss(z: &Signal, y: &Measurements, a: &Ensemble) -> Result<f64> {
    check_len(a.n(), z.len())?;
    check_len(a.m(), y.len())?;
    dispatch!(a, z, |op, z| {
        let mut az = vec![Field::zero(); op.m()];
        op.forward(z, &mut az);
        let s: f64 = az.iter().zip(y.values()).map(|(v, &yi)| (v.norm_sqr() - yi * yi).powi(2)).sum();
        s / (4.0 * az.len() as f64)
    })
}

pub(crate) fn rwf_loss_from_products<S: Field>(az: &[S], y: &[f64]) -> f64 {
    let s: f64 = az.iter().zip(y).map(|(v, &yi)| (v.abs() - yi).powi(2)).sum();
    s / (2.0 * az.len() as f64)
}
