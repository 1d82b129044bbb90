//! Iterative reconstruction: batch RWF and the WF baseline, IRWF and its
//! minibatch form, randomised and block Kaczmarz-PR.
//!
//! Passes are the common currency: one batch iteration, `m` single-sample
//! updates, or `ceil(m / k)` block updates each count as one pass.

mod steps;
mod trace;

use rand::seq::index;
use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::field::{self, Field};
use crate::loss::rwf_loss_from_products;
use crate::measurements::Measurements;
use crate::rng;
use crate::sensing::{dispatch, Ensemble, Operator};
use crate::signal::{FieldKind, Signal};

pub use steps::{
    block_kaczmarz_step, block_kaczmarz_step_with, irwf_step, kaczmarz_step, minibatch_irwf_step, rwf_gradient,
    wf_gradient, BlockSolve,
};
pub use trace::{fmt_num, RunTrace, StopReason, TracePoint, TRACE_CSV_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Rwf,
    Wf,
    Irwf,
    MinibatchIrwf,
    KaczmarzPr,
    BlockKaczmarzPr,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Rwf,
        Algorithm::Wf,
        Algorithm::Irwf,
        Algorithm::MinibatchIrwf,
        Algorithm::KaczmarzPr,
        Algorithm::BlockKaczmarzPr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rwf => "rwf",
            Algorithm::Wf => "wf",
            Algorithm::Irwf => "irwf",
            Algorithm::MinibatchIrwf => "minibatch-irwf",
            Algorithm::KaczmarzPr => "kaczmarz",
            Algorithm::BlockKaczmarzPr => "block-kaczmarz",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown algorithm '{s}'")))
    }

    pub fn is_batch(self) -> bool {
        matches!(self, Algorithm::Rwf | Algorithm::Wf)
    }

    pub fn uses_blocks(self) -> bool {
        matches!(self, Algorithm::MinibatchIrwf | Algorithm::BlockKaczmarzPr)
    }
}

/// Solver settings. The step field is read per algorithm:
///
/// * RWF: `z -= mu * grad`.
/// * WF: `z -= (mu / ||z0||^2) * grad` (constant step, no warm-up schedule).
/// * IRWF / minibatch IRWF: step `rho0 / n`; `mu` is ignored.
/// * Kaczmarz variants: step `1 / ||a_i||^2` or the block pseudoinverse; both
///   `mu` and `rho0` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub mu: f64,
    pub rho0: f64,
    pub minibatch_k: usize,
    pub max_passes: usize,
    /// Stop once the relative error (or the loss, without ground truth) is at most this.
    pub tol: f64,
    pub seed: u64,
    pub record_every: usize,
}

impl SolverConfig {
    /// Defaults: `mu = 0.8` (real) / `1.2` (complex) for RWF, `0.2` for WF,
    /// `rho0 = 1`, `k = 64`, 1000 passes, `tol = 1e-5`.
    pub fn new(algorithm: Algorithm, field: FieldKind) -> Self {
        let mu = match (algorithm, field) {
            (Algorithm::Wf, _) => 0.2,
            (_, FieldKind::Real) => 0.8,
            (_, FieldKind::Complex) => 1.2,
        };
        SolverConfig {
            algorithm,
            mu,
            rho0: 1.0,
            minibatch_k: 64,
            max_passes: 1000,
            tol: 1e-5,
            seed: 0,
            record_every: 1,
        }
    }

    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Invalid(msg));
        if self.algorithm.is_batch() && !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("step size mu must be positive, got {}", self.mu));
        }
        if !(self.rho0 > 0.0 && self.rho0.is_finite()) {
            return bad(format!("rho0 must be positive, got {}", self.rho0));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        if self.algorithm.uses_blocks() {
            if self.minibatch_k == 0 || self.minibatch_k > m {
                return bad(format!("minibatch size {} must lie in 1..={m}", self.minibatch_k));
            }
            if self.algorithm == Algorithm::BlockKaczmarzPr && self.minibatch_k > n {
                return bad(format!("block size {} exceeds n = {n}", self.minibatch_k));
            }
        }
        Ok(())
    }
}

/// Runs the configured algorithm from `z0`. Relative error is tracked when the
/// ground truth `x_opt` is supplied; otherwise the stopping rule uses the loss.
pub fn run(y: &Measurements, a: &Ensemble, z0: &Signal, cfg: &SolverConfig, x_opt: Option<&Signal>) -> Result<RunTrace> {
    check_len(a.n(), z0.len())?;
    check_len(a.m(), y.len())?;
    cfg.validate(a.m(), a.n())?;
    if let Some(x) = x_opt {
        check_len(a.n(), x.len())?;
        if x.kind() != z0.kind() {
            return Err(Error::Field("ground truth and iterate differ in field".into()));
        }
        if x.norm() == 0.0 {
            return Err(Error::ZeroNorm("ground truth"));
        }
    }
    if cfg.algorithm == Algorithm::Wf && z0.norm() == 0.0 {
        return Err(Error::ZeroNorm("WF step is scaled by ||z0||^2"));
    }
    dispatch!(a, z0, |op, z0| {
        let x = x_opt.map(|x| Field::slice(x).expect("field checked above"));
        Runner { op, y: y.values(), cfg, x, x_norm: x.map(field::norm) }.run(z0.to_vec())
    })?
}

struct Runner<'a, S: Field, O: Operator<S>> {
    op: &'a O,
    y: &'a [f64],
    cfg: &'a SolverConfig,
    x: Option<&'a [S]>,
    x_norm: Option<f64>,
}

const DIVERGENCE_FACTOR: f64 = 1e6;

impl<S: Field, O: Operator<S>> Runner<'_, S, O> {
    fn rel(&self, z: &[S]) -> Option<f64> {
        self.x.map(|x| field::dist_up_to_phase(z, x) / self.x_norm.unwrap())
    }

    fn loss(&self, z: &[S], buf: &mut [S]) -> f64 {
        self.op.forward(z, buf);
        rwf_loss_from_products(buf, self.y)
    }

    fn stop(&self, metric: f64, initial: f64, pass: usize, z: &[S]) -> Option<StopReason> {
        if !metric.is_finite() || metric > DIVERGENCE_FACTOR * initial || z.iter().any(|v| !v.is_finite()) {
            Some(StopReason::Diverged)
        } else if metric <= self.cfg.tol {
            Some(StopReason::Tol)
        } else if pass >= self.cfg.max_passes {
            Some(StopReason::Budget)
        } else {
            None
        }
    }

    fn run(&self, z: Vec<S>) -> Result<RunTrace> {
        if self.cfg.algorithm.is_batch() {
            Ok(self.run_batch(z))
        } else {
            self.run_incremental(z)
        }
    }

    fn run_batch(&self, mut z: Vec<S>) -> RunTrace {
        let op = self.op;
        let step = match self.cfg.algorithm {
            Algorithm::Wf => self.cfg.mu / field::norm_sqr(&z),
            _ => self.cfg.mu,
        };
        let mut az = vec![S::zero(); op.m()];
        let mut grad = vec![S::zero(); op.n()];
        let mut history = Vec::new();
        let mut initial = f64::NAN;
        let mut t = 0usize;
        loop {
            match self.cfg.algorithm {
                Algorithm::Wf => steps::wf_gradient_into(op, &z, self.y, &mut az, &mut grad),
                _ => steps::rwf_gradient_into(op, &z, self.y, &mut az, &mut grad),
            }
            let loss = rwf_loss_from_products(&az, self.y);
            let rel = self.rel(&z);
            let metric = rel.unwrap_or(loss);
            if t == 0 {
                initial = metric;
            }
            let stop = self.stop(metric, initial, t, &z);
            if t.is_multiple_of(self.cfg.record_every) || stop.is_some() {
                history.push(TracePoint { pass_count: t as f64, relative_error: rel, loss });
            }
            if let Some(reason) = stop {
                return RunTrace { iterate: S::wrap(z), history, passes_used: t as f64, stop_reason: reason };
            }
            for (zi, &gi) in z.iter_mut().zip(&grad) {
                *zi -= gi.scale(step);
            }
            t += 1;
        }
    }

    fn run_incremental(&self, mut z: Vec<S>) -> Result<RunTrace> {
        let op = self.op;
        let (m, n) = (op.m(), op.n());
        let alg = self.cfg.algorithm;
        let k = if alg.uses_blocks() { self.cfg.minibatch_k } else { 1 };
        let updates_per_pass = m.div_ceil(k);
        let step = self.cfg.rho0 / n as f64;
        // Whole-mask blocks for CDP when the block size equals the mask length.
        let mask_blocks = alg.uses_blocks() && k == n && op.full_mask(&(0..n).collect::<Vec<_>>()).is_some();
        let mut rng = rng::stream(self.cfg.seed, rng::SOLVER);
        let mut buf = vec![S::zero(); m];
        let mut block = Vec::with_capacity(k);
        let mut history = Vec::new();
        let mut initial = f64::NAN;

        for pass in 0..=self.cfg.max_passes {
            if pass > 0 {
                for _ in 0..updates_per_pass {
                    match alg {
                        Algorithm::Irwf => {
                            let i = rng.random_range(0..m);
                            steps::single_update(op, &mut z, i, self.y[i], step);
                        }
                        Algorithm::KaczmarzPr => {
                            let i = rng.random_range(0..m);
                            steps::single_update(op, &mut z, i, self.y[i], 1.0 / op.row_norm_sqr(i));
                        }
                        _ => {
                            block.clear();
                            if mask_blocks {
                                let l = rng.random_range(0..m / n);
                                block.extend(l * n..(l + 1) * n);
                            } else {
                                block.extend(index::sample(&mut rng, m, k));
                            }
                            if alg == Algorithm::MinibatchIrwf {
                                steps::minibatch_update(op, &mut z, &block, self.y, step);
                            } else {
                                steps::block_update(op, &mut z, &block, self.y, BlockSolve::Auto)?;
                            }
                        }
                    }
                }
            }
            let rel = self.rel(&z);
            let record_due = pass % self.cfg.record_every == 0;
            let mut loss = (rel.is_none() || record_due).then(|| self.loss(&z, &mut buf));
            let metric = rel.or(loss).unwrap();
            if pass == 0 {
                initial = metric;
            }
            let stop = self.stop(metric, initial, pass, &z);
            if record_due || stop.is_some() {
                let loss = *loss.get_or_insert_with(|| self.loss(&z, &mut buf));
                history.push(TracePoint { pass_count: pass as f64, relative_error: rel, loss });
            }
            if let Some(reason) = stop {
                return Ok(RunTrace { iterate: S::wrap(z), history, passes_used: pass as f64, stop_reason: reason });
            }
        }
        unreachable!("the pass budget always produces a stop reason")
    }
}

#[cfg(test)]
mod tests;
