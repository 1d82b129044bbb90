use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Operator;

/// Coded diffraction patterns: `L` stacked blocks `F D^(l)` with the
/// unnormalised DFT, so every row has squared norm `n`.
///
/// Row `l * n + k` is `r_j = exp(-2 pi i j k / n) d^(l)_j`.
#[derive(Clone)]
pub struct CdpOperator {
    n: usize,
    masks: Vec<Vec<Complex64>>,
    mask_energy: Vec<f64>,
    mask_l1: Vec<f64>,
    roots: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for CdpOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CdpOperator").field("n", &self.n).field("l", &self.masks.len()).finish()
    }
}

impl PartialEq for CdpOperator {
    fn eq(&self, other: &Self) -> bool {
        self.masks == other.masks
    }
}

impl CdpOperator {
    pub fn new(masks: Vec<Vec<Complex64>>) -> Self {
        let n = masks[0].len();
        assert!(masks.iter().all(|d| d.len() == n));
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let roots = (0..n).map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / n as f64)).collect();
        let mask_energy = masks.iter().map(|d| d.iter().map(|c| c.norm_sqr()).sum()).collect();
        let mask_l1 = masks.iter().map(|d| d.iter().map(|c| c.norm()).sum()).collect();
        CdpOperator { n, masks, mask_energy, mask_l1, roots, fwd, inv }
    }

    pub fn masks(&self) -> &[Vec<Complex64>] {
        &self.masks
    }

    pub fn num_masks(&self) -> usize {
        self.masks.len()
    }

    /// `F D^(l) z` into `out` (length `n`).
    pub fn forward_mask(&self, l: usize, z: &[Complex64], out: &mut [Complex64]) {
        for ((o, &d), &zj) in out.iter_mut().zip(&self.masks[l]).zip(z) {
            *o = d * zj;
        }
        self.fwd.process(out);
    }

    /// `out += D^(l)* F^* v` (unnormalised inverse DFT).
    pub fn adjoint_mask_add(&self, l: usize, v: &[Complex64], out: &mut [Complex64]) {
        let mut buf = v.to_vec();
        self.inv.process(&mut buf);
        for ((o, &d), &b) in out.iter_mut().zip(&self.masks[l]).zip(&buf) {
            *o += d.conj() * b;
        }
    }

    #[inline]
    fn split(&self, i: usize) -> (usize, usize) {
        (i / self.n, i % self.n)
    }
}

impl Operator<Complex64> for CdpOperator {
    fn n(&self) -> usize {
        self.n
    }

    fn m(&self) -> usize {
        self.n * self.masks.len()
    }

    fn forward(&self, z: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        for l in 0..self.masks.len() {
            self.forward_mask(l, z, &mut out[l * n..(l + 1) * n]);
        }
    }

    fn adjoint(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for l in 0..self.masks.len() {
            self.adjoint_mask_add(l, &v[l * n..(l + 1) * n], out);
        }
    }

    fn row_dot(&self, i: usize, z: &[Complex64]) -> Complex64 {
        let (l, k) = self.split(i);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut idx = 0usize;
        for (&d, &zj) in self.masks[l].iter().zip(z) {
            acc += self.roots[idx] * d * zj;
            idx += k;
            if idx >= self.n {
                idx -= self.n;
            }
        }
        acc
    }

    fn add_row(&self, i: usize, coef: Complex64, z: &mut [Complex64]) {
        let (l, k) = self.split(i);
        let mut idx = 0usize;
        for (&d, zj) in self.masks[l].iter().zip(z.iter_mut()) {
            *zj += coef * (self.roots[idx] * d).conj();
            idx += k;
            if idx >= self.n {
                idx -= self.n;
            }
        }
    }

    fn row(&self, i: usize) -> Vec<Complex64> {
        let (l, k) = self.split(i);
        self.masks[l]
            .iter()
            .enumerate()
            .map(|(j, &d)| self.roots[(j * k) % self.n] * d)
            .collect()
    }

    fn row_norm_sqr(&self, i: usize) -> f64 {
        self.mask_energy[i / self.n]
    }

    fn row_l1(&self, i: usize) -> f64 {
        self.mask_l1[i / self.n]
    }

    fn full_mask(&self, indices: &[usize]) -> Option<usize> {
        if indices.len() != self.n {
            return None;
        }
        let l = indices[0] / self.n;
        let base = l * self.n;
        indices.iter().enumerate().all(|(k, &i)| i == base + k).then_some(l)
    }

    fn mask_step(&self, l: usize, z: &mut [Complex64], y: &[f64], step: f64) {
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        self.forward_mask(l, z, &mut buf);
        for (b, &yi) in buf.iter_mut().zip(&y[l * n..(l + 1) * n]) {
            let r = *b - crate::field::Field::phase(*b) * yi;
            *b = -(r * step);
        }
        self.adjoint_mask_add(l, &buf, z);
    }
}
