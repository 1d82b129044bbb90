//! Experiment configuration.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! line    = blank | comment | entry
//! comment = ws "#" any*
//! entry   = ws key ws "=" ws value ws [comment]
//! key     = [a-z][a-z0-9_]*
//! list    = item ("," item)*
//! ```
//!
//! Keys are case-sensitive and may appear once. Unknown keys are rejected.
//! List-valued keys take comma-separated items; whitespace around items is
//! ignored.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rwf_core::{Algorithm, FieldKind};

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    PhaseTransition,
    ConvergenceRace,
    InitAccuracy,
    NoiseSweep,
    Recover,
    ImageDemo,
    LossSurface,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::PhaseTransition,
        Experiment::ConvergenceRace,
        Experiment::InitAccuracy,
        Experiment::NoiseSweep,
        Experiment::Recover,
        Experiment::ImageDemo,
        Experiment::LossSurface,
    ];

    /// Subcommand and config tag.
    pub fn name(self) -> &'static str {
        match self {
            Experiment::PhaseTransition => "phase-transition",
            Experiment::ConvergenceRace => "converge",
            Experiment::InitAccuracy => "init-accuracy",
            Experiment::NoiseSweep => "noise-sweep",
            Experiment::Recover => "recover",
            Experiment::ImageDemo => "image-demo",
            Experiment::LossSurface => "loss-surface",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        let s = if s == "convergence-race" { "converge".to_string() } else { s };
        Experiment::ALL.into_iter().find(|e| e.name() == s)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Real,
    Complex,
    /// Coded diffraction patterns; `m_over_n` entries are mask counts `L`.
    Cdp,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Real => "real",
            Model::Complex => "complex",
            Model::Cdp => "cdp",
        }
    }

    pub fn field(self) -> FieldKind {
        match self {
            Model::Real => FieldKind::Real,
            _ => FieldKind::Complex,
        }
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "real" => Ok(Model::Real),
            "complex" => Ok(Model::Complex),
            "cdp" => Ok(Model::Cdp),
            other => Err(format!("unknown model '{other}' (expected real, complex or cdp)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    None,
    /// Gaussian-direction noise with `||w|| / sqrt(m) = level * ||x||`.
    Bounded,
    /// Poisson photon noise with intensity scale `alpha = level`.
    Poisson,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::None => "none",
            NoiseKind::Bounded => "bounded",
            NoiseKind::Poisson => "poisson",
        }
    }
}

impl FromStr for NoiseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(NoiseKind::None),
            "bounded" => Ok(NoiseKind::Bounded),
            "poisson" => Ok(NoiseKind::Poisson),
            other => Err(format!("unknown noise '{other}' (expected none, bounded or poisson)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    /// Oversampling ratios `m/n`, or mask counts `L` for the CDP model.
    pub m_over_n: Vec<f64>,
    pub model: Model,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub success_tol: f64,
    pub iteration_budget: usize,
    pub noise: NoiseKind,
    /// Noise levels swept by `noise-sweep`; the first one is used elsewhere.
    pub noise_levels: Vec<f64>,
    pub seed: u64,
    pub output_path: PathBuf,
    /// Step size override; the solver default for the field when absent.
    pub mu: Option<f64>,
    pub rho0: f64,
    pub minibatch_k: usize,
    pub power_iters: usize,
    /// Plain PGM input for `image-demo`; a synthetic image when absent.
    pub image: Option<PathBuf>,
    pub image_size: usize,
    pub rho_grid: usize,
    pub norm_levels: Vec<f64>,
}

impl ExperimentConfig {
    /// Defaults for `experiment`, before any file or flag overrides.
    pub fn defaults(experiment: Experiment) -> Self {
        let (n, m_over_n, trials, algorithms, noise_levels) = match experiment {
            Experiment::PhaseTransition => (256, vec![2.0, 3.0, 4.0, 5.0, 6.0], 50, vec![Algorithm::Rwf, Algorithm::Irwf], vec![0.0]),
            Experiment::ConvergenceRace => (1000, vec![8.0], 10, Algorithm::ALL.to_vec(), vec![0.0]),
            Experiment::InitAccuracy => (128, vec![4.0, 6.0, 8.0, 10.0], 50, vec![Algorithm::Rwf], vec![0.0]),
            Experiment::NoiseSweep => (256, vec![8.0], 20, vec![Algorithm::Rwf], vec![0.0, 0.001, 0.01, 0.1, 1.0]),
            Experiment::Recover => (64, vec![8.0], 1, vec![Algorithm::Rwf], vec![0.0]),
            Experiment::ImageDemo => (0, vec![6.0, 12.0], 1, vec![Algorithm::Rwf], vec![0.0]),
            Experiment::LossSurface => (0, vec![1.0], 1, vec![Algorithm::Rwf], vec![0.0]),
        };
        ExperimentConfig {
            experiment,
            n,
            m_over_n,
            model: if experiment == Experiment::ImageDemo { Model::Cdp } else { Model::Real },
            algorithms,
            trials,
            success_tol: 1e-5,
            iteration_budget: 1000,
            noise: if experiment == Experiment::NoiseSweep { NoiseKind::Poisson } else { NoiseKind::None },
            noise_levels,
            seed: 0,
            output_path: PathBuf::from(format!("{}.csv", experiment.name())),
            mu: None,
            rho0: 1.0,
            minibatch_k: 64,
            power_iters: 50,
            image: None,
            image_size: 64,
            rho_grid: 41,
            norm_levels: vec![0.5, 1.0, 1.5],
        }
    }

    /// Defaults for `experiment` overridden by the entries of `text`.
    /// An `experiment` key, if present, must agree.
    pub fn parse(experiment: Experiment, text: &str) -> Result<Self, HarnessError> {
        let mut cfg = Self::defaults(experiment);
        let mut seen: Vec<String> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| HarnessError::Config(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if !key.starts_with(|c: char| c.is_ascii_lowercase())
                || !key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
            {
                return Err(err(format!("invalid key '{key}'")));
            }
            if value.is_empty() {
                return Err(err(format!("empty value for '{key}'")));
            }
            if seen.iter().any(|k| k == key) {
                return Err(err(format!("duplicate key '{key}'")));
            }
            seen.push(key.to_string());
            if key == "experiment" {
                match Experiment::parse(value) {
                    Some(e) if e == experiment => {}
                    Some(e) => return Err(err(format!("config is for '{e}', not '{experiment}'"))),
                    None => return Err(err(format!("unknown experiment '{value}'"))),
                }
                continue;
            }
            cfg.set(key, value).map_err(err)?;
        }
        Ok(cfg)
    }

    /// Sets one entry from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "n" => self.n = scalar(key, value)?,
            "m_over_n" | "l" => self.m_over_n = list(key, value)?,
            "model" | "field" => self.model = value.parse()?,
            "algorithms" | "algorithm" => {
                self.algorithms = value
                    .split(',')
                    .map(|s| Algorithm::parse(s).map_err(|e| e.to_string()))
                    .collect::<Result<_, _>>()?
            }
            "trials" => self.trials = scalar(key, value)?,
            "success_tol" => self.success_tol = scalar(key, value)?,
            "iteration_budget" => self.iteration_budget = scalar(key, value)?,
            "noise" => self.noise = value.parse()?,
            "noise_levels" | "alphas" => self.noise_levels = list(key, value)?,
            "seed" => self.seed = scalar(key, value)?,
            "output_path" => self.output_path = PathBuf::from(value),
            "mu" => self.mu = Some(scalar(key, value)?),
            "rho0" => self.rho0 = scalar(key, value)?,
            "minibatch_k" => self.minibatch_k = scalar(key, value)?,
            "power_iters" => self.power_iters = scalar(key, value)?,
            "image" => self.image = Some(PathBuf::from(value)),
            "image_size" => self.image_size = scalar(key, value)?,
            "rho_grid" => self.rho_grid = scalar(key, value)?,
            "norm_levels" => self.norm_levels = list(key, value)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Checks every invariant; nothing runs or writes until this passes.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        let sized = !matches!(self.experiment, Experiment::ImageDemo | Experiment::LossSurface);
        if sized && self.n == 0 {
            return fail("n must be at least 1".into());
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.m_over_n.is_empty() || self.m_over_n.iter().any(|r| !(r.is_finite() && *r >= 1.0)) {
            return fail(format!("every m_over_n must be a finite value >= 1, got {:?}", self.m_over_n));
        }
        if self.model == Model::Cdp && self.m_over_n.iter().any(|r| r.fract() != 0.0) {
            return fail(format!("cdp mask counts must be integers, got {:?}", self.m_over_n));
        }
        if !(self.success_tol.is_finite() && self.success_tol > 0.0) {
            return fail(format!("success_tol must be positive, got {}", self.success_tol));
        }
        if self.algorithms.is_empty() {
            return fail("at least one algorithm is required".into());
        }
        if self.noise_levels.is_empty() || self.noise_levels.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return fail(format!("noise levels must be finite and >= 0, got {:?}", self.noise_levels));
        }
        if let Some(mu) = self.mu {
            if !(mu.is_finite() && mu > 0.0) {
                return fail(format!("mu must be positive, got {mu}"));
            }
        }
        if !(self.rho0.is_finite() && self.rho0 > 0.0) || self.minibatch_k == 0 || self.power_iters == 0 {
            return fail("rho0, minibatch_k and power_iters must be positive".into());
        }
        if self.experiment == Experiment::ImageDemo && self.image.is_none() && self.image_size == 0 {
            return fail("image_size must be at least 1".into());
        }
        if self.experiment == Experiment::LossSurface {
            if self.rho_grid < 2 {
                return fail("rho_grid must be at least 2".into());
            }
            if self.norm_levels.is_empty() || self.norm_levels.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return fail("norm_levels must be finite and >= 0".into());
            }
        }
        if self.output_path.as_os_str().is_empty() {
            return fail("output_path is empty".into());
        }
        Ok(())
    }

    /// `key = value` lines reproducing this configuration, less `output_path`.
    pub fn echo(&self) -> Vec<String> {
        let join = |v: &[f64]| v.iter().map(|x| rwf_core::solvers::fmt_num(*x)).collect::<Vec<_>>().join(",");
        let mut lines = vec![
            format!("experiment = {}", self.experiment),
            format!("n = {}", self.n),
            format!("m_over_n = {}", join(&self.m_over_n)),
            format!("model = {}", self.model.name()),
            format!("algorithms = {}", self.algorithms.iter().map(|a| a.name()).collect::<Vec<_>>().join(",")),
            format!("trials = {}", self.trials),
            format!("success_tol = {:?}", self.success_tol),
            format!("iteration_budget = {}", self.iteration_budget),
            format!("noise = {}", self.noise.name()),
            format!("noise_levels = {}", join(&self.noise_levels)),
            format!("seed = {}", self.seed),
        ];
        if let Some(mu) = self.mu {
            lines.push(format!("mu = {mu:?}"));
        }
        lines.push(format!("rho0 = {:?}", self.rho0));
        lines.push(format!("minibatch_k = {}", self.minibatch_k));
        lines.push(format!("power_iters = {}", self.power_iters));
        if let Some(p) = &self.image {
            lines.push(format!("image = {}", p.display()));
        }
        lines.push(format!("image_size = {}", self.image_size));
        lines.push(format!("rho_grid = {}", self.rho_grid));
        lines.push(format!("norm_levels = {}", join(&self.norm_levels)));
        lines
    }
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.trim().parse().map_err(|_| format!("invalid value '{value}' for '{key}'"))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>, String> {
    value.split(',').map(|s| scalar(key, s)).collect()
}
