use crate::field::Field;

use super::Operator;

/// Row-major `m x n` matrix. Row `i` holds `r_i` with `(Az)_i = sum_j r_ij z_j`,
/// i.e. `r_i = a_i^*`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseRows<S> {
    n: usize,
    m: usize,
    data: Vec<S>,
}

impl<S: Field> DenseRows<S> {
    pub fn new(n: usize, m: usize, data: Vec<S>) -> Self {
        assert_eq!(data.len(), n * m);
        DenseRows { n, m, data }
    }

    #[inline]
    pub fn row_slice(&self, i: usize) -> &[S] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }
}

/// `sum_j r_j z_j` with four partial sums so the loop vectorises.
#[inline]
pub(crate) fn dot_plain<S: Field>(r: &[S], z: &[S]) -> S {
    let mut acc = [S::zero(); 4];
    let chunks = r.len() / 4;
    for c in 0..chunks {
        let b = 4 * c;
        acc[0] += r[b] * z[b];
        acc[1] += r[b + 1] * z[b + 1];
        acc[2] += r[b + 2] * z[b + 2];
        acc[3] += r[b + 3] * z[b + 3];
    }
    let mut tail = S::zero();
    for j in 4 * chunks..r.len() {
        tail += r[j] * z[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `z += coef * conj(r)`.
#[inline]
pub(crate) fn axpy_conj<S: Field>(coef: S, r: &[S], z: &mut [S]) {
    for (zj, &rj) in z.iter_mut().zip(r) {
        *zj += coef * rj.conj();
    }
}

impl<S: Field> Operator<S> for DenseRows<S> {
    fn n(&self) -> usize {
        self.n
    }

    fn m(&self) -> usize {
        self.m
    }

    fn forward(&self, z: &[S], out: &mut [S]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot_plain(self.row_slice(i), z);
        }
    }

    fn adjoint(&self, v: &[S], out: &mut [S]) {
        out.iter_mut().for_each(|o| *o = S::zero());
        for (i, &vi) in v.iter().enumerate() {
            if vi != S::zero() {
                axpy_conj(vi, self.row_slice(i), out);
            }
        }
    }

    fn row_dot(&self, i: usize, z: &[S]) -> S {
        dot_plain(self.row_slice(i), z)
    }

    fn add_row(&self, i: usize, coef: S, z: &mut [S]) {
        axpy_conj(coef, self.row_slice(i), z);
    }

    fn row(&self, i: usize) -> Vec<S> {
        self.row_slice(i).to_vec()
    }

    fn row_norm_sqr(&self, i: usize) -> f64 {
        self.row_slice(i).iter().map(|r| r.norm_sqr()).sum()
    }

    fn row_l1(&self, i: usize) -> f64 {
        self.row_slice(i).iter().map(|r| r.abs()).sum()
    }
}
