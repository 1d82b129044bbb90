//! Sensing ensembles and their matrix-free forward / adjoint maps.

mod cdp;
mod dense;
mod descriptor;
mod noise;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::field::Field;
use crate::rng;
use crate::signal::{FieldKind, Signal};

pub use cdp::CdpOperator;
pub use dense::DenseRows;
pub(crate) use dense::dot_plain;
pub use descriptor::EnsembleDescriptor;
pub use noise::{measure, NoiseSpec};

/// Row-access linear map `A` with rows `r_i = a_i^*`.
pub trait Operator<S: Field>: Sync {
    fn n(&self) -> usize;
    fn m(&self) -> usize;
    /// `out = A z`.
    fn forward(&self, z: &[S], out: &mut [S]);
    /// `out = A^* v`.
    fn adjoint(&self, v: &[S], out: &mut [S]);
    /// `a_i^* z`.
    fn row_dot(&self, i: usize, z: &[S]) -> S;
    /// `z += coef * a_i`.
    fn add_row(&self, i: usize, coef: S, z: &mut [S]);
    /// Materialised row `a_i^*`.
    fn row(&self, i: usize) -> Vec<S>;
    fn row_norm_sqr(&self, i: usize) -> f64;
    fn row_l1(&self, i: usize) -> f64;
    /// Mask index when `indices` is exactly one complete CDP block in order.
    fn full_mask(&self, _indices: &[usize]) -> Option<usize> {
        None
    }
    /// Minibatch update over the whole mask `l`:
    /// `z -= step D^(l)* F^* (F D^(l) z - y_l .* Ph(F D^(l) z))`.
    fn mask_step(&self, _l: usize, _z: &mut [S], _y: &[f64], _step: f64) {
        unreachable!("only CDP operators report full mask blocks")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnsembleKind {
    GaussianReal,
    GaussianComplex,
    Cdp,
}

impl EnsembleKind {
    pub fn field(self) -> FieldKind {
        match self {
            EnsembleKind::GaussianReal => FieldKind::Real,
            _ => FieldKind::Complex,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Op {
    Real(DenseRows<f64>),
    Complex(DenseRows<Complex64>),
    Cdp(CdpOperator),
}

/// Immutable sensing operator. Built from a seed (reconstructible through its
/// [`EnsembleDescriptor`]) or from explicit rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub(crate) op: Op,
    seed: Option<u64>,
}

/// Expands `$body` once per concrete (operator, slice) pairing, binding
/// `$op: &impl Operator<S>` and `$z: &[S]`. Mismatched fields are an error.
macro_rules! dispatch {
    ($ens:expr, $sig:expr, |$op:ident, $z:ident| $body:expr) => {
        match (&$ens.op, $sig) {
            ($crate::sensing::Op::Real($op), $crate::signal::Signal::Real($z)) => Ok($body),
            ($crate::sensing::Op::Complex($op), $crate::signal::Signal::Complex($z)) => Ok($body),
            ($crate::sensing::Op::Cdp($op), $crate::signal::Signal::Complex($z)) => Ok($body),
            (_, s) => Err($crate::error::Error::Field(format!(
                "{:?} ensemble cannot act on a {:?} signal",
                $ens.kind(),
                s.kind()
            ))),
        }
    };
}
pub(crate) use dispatch;

impl Ensemble {
    pub fn from_real_rows(n: usize, rows: Vec<f64>) -> Result<Self> {
        let m = Self::check_rows(n, rows.len())?;
        if rows.iter().any(|r| !r.is_finite()) {
            return Err(Error::Invalid("rows must be finite".into()));
        }
        Ok(Ensemble { op: Op::Real(DenseRows::new(n, m, rows)), seed: None })
    }

    /// Rows are given as `a_i^*` (the functional applied to `z`).
    pub fn from_complex_rows(n: usize, rows: Vec<Complex64>) -> Result<Self> {
        let m = Self::check_rows(n, rows.len())?;
        if rows.iter().any(|r| !Field::is_finite(*r)) {
            return Err(Error::Invalid("rows must be finite".into()));
        }
        Ok(Ensemble { op: Op::Complex(DenseRows::new(n, m, rows)), seed: None })
    }

    pub fn from_masks(masks: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = masks.first().map_or(0, |d| d.len());
        if n < 2 || masks.iter().any(|d| d.len() != n) {
            return Err(Error::Invalid("masks must share a length n >= 2".into()));
        }
        if masks.iter().flatten().any(|d| (d.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::Invalid("mask entries must have unit modulus".into()));
        }
        Ok(Ensemble { op: Op::Cdp(CdpOperator::new(masks)), seed: None })
    }

    fn check_rows(n: usize, len: usize) -> Result<usize> {
        if n == 0 || len == 0 || !len.is_multiple_of(n) {
            return Err(Error::Invalid(format!("{len} row entries do not form rows of length {n}")));
        }
        Ok(len / n)
    }

    pub fn kind(&self) -> EnsembleKind {
        match self.op {
            Op::Real(_) => EnsembleKind::GaussianReal,
            Op::Complex(_) => EnsembleKind::GaussianComplex,
            Op::Cdp(_) => EnsembleKind::Cdp,
        }
    }

    pub fn field(&self) -> FieldKind {
        self.kind().field()
    }

    pub fn n(&self) -> usize {
        match &self.op {
            Op::Real(d) => d.n(),
            Op::Complex(d) => d.n(),
            Op::Cdp(c) => c.n(),
        }
    }

    pub fn m(&self) -> usize {
        match &self.op {
            Op::Real(d) => d.m(),
            Op::Complex(d) => d.m(),
            Op::Cdp(c) => c.m(),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn descriptor(&self) -> Option<EnsembleDescriptor> {
        let seed = self.seed?;
        let size = match &self.op {
            Op::Cdp(c) => c.num_masks(),
            _ => self.m(),
        };
        Some(EnsembleDescriptor { kind: self.kind(), n: self.n(), size, seed })
    }

    pub fn cdp(&self) -> Option<&CdpOperator> {
        match &self.op {
            Op::Cdp(c) => Some(c),
            _ => None,
        }
    }

    /// `A z`, length `m`.
    pub fn apply(&self, z: &Signal) -> Result<Signal> {
        check_len(self.n(), z.len())?;
        dispatch!(self, z, |op, z| {
            let mut out = vec![Field::zero(); op.m()];
            op.forward(z, &mut out);
            Field::wrap(out)
        })
    }

    /// `A^* v`, length `n`.
    pub fn adjoint_apply(&self, v: &Signal) -> Result<Signal> {
        check_len(self.m(), v.len())?;
        dispatch!(self, v, |op, v| {
            let mut out = vec![Field::zero(); op.n()];
            op.adjoint(v, &mut out);
            Field::wrap(out)
        })
    }

    /// Materialised row `a_i^*`.
    pub fn row(&self, i: usize) -> Result<Signal> {
        self.check_index(i)?;
        Ok(match &self.op {
            Op::Real(d) => Signal::Real(d.row(i)),
            Op::Complex(d) => Signal::Complex(d.row(i)),
            Op::Cdp(c) => Signal::Complex(c.row(i)),
        })
    }

    pub fn row_norm_sqr(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        Ok(match &self.op {
            Op::Real(d) => d.row_norm_sqr(i),
            Op::Complex(d) => d.row_norm_sqr(i),
            Op::Cdp(c) => c.row_norm_sqr(i),
        })
    }

    /// `sum_i ||a_i||_1`.
    pub fn total_row_l1(&self) -> f64 {
        let m = self.m();
        match &self.op {
            Op::Real(d) => (0..m).map(|i| d.row_l1(i)).sum(),
            Op::Complex(d) => (0..m).map(|i| d.row_l1(i)).sum(),
            Op::Cdp(c) => (0..m).map(|i| c.row_l1(i)).sum(),
        }
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i < self.m() {
            Ok(())
        } else {
            Err(Error::Invalid(format!("row index {i} out of range for m = {}", self.m())))
        }
    }
}

/// I.i.d. Gaussian rows: N(0, 1) entries for the real field, CN(0, 1) (each
/// component N(0, 1/2)) for the complex field. Deterministic in `seed`.
pub fn make_gaussian(n: usize, m: usize, field: FieldKind, seed: u64) -> Result<Ensemble> {
    if n == 0 || m == 0 {
        return Err(Error::Invalid("gaussian ensemble needs n, m >= 1".into()));
    }
    let mut rng = rng::stream(seed, rng::ENSEMBLE);
    let op = match field {
        FieldKind::Real => Op::Real(DenseRows::new(n, m, (0..n * m).map(|_| f64::gaussian(&mut rng)).collect())),
        FieldKind::Complex => {
            Op::Complex(DenseRows::new(n, m, (0..n * m).map(|_| Complex64::gaussian(&mut rng)).collect()))
        }
    };
    Ok(Ensemble { op, seed: Some(seed) })
}

/// `L` masks with i.i.d. uniform unit-modulus entries; `m = n L`.
pub fn make_cdp(n: usize, l: usize, seed: u64) -> Result<Ensemble> {
    if n < 2 || l == 0 {
        return Err(Error::Invalid("cdp ensemble needs n >= 2 and L >= 1".into()));
    }
    let mut rng = rng::stream(seed, rng::ENSEMBLE);
    let masks = (0..l)
        .map(|_| {
            (0..n)
                .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
                .collect()
        })
        .collect();
    Ok(Ensemble { op: Op::Cdp(CdpOperator::new(masks)), seed: Some(seed) })
}
