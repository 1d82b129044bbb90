//! The `rwf` command line.
//!
//! Exit codes: 0 on success, 1 on usage or config errors, 2 on runtime errors.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::experiments::execute;

#[derive(Debug, Parser)]
#[command(name = "rwf", version, about = "Phase retrieval experiments: reshaped Wirtinger flow, incremental variants and Kaczmarz")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Success rate against m/n for each algorithm.
    PhaseTransition(Overrides),
    /// Mean passes and seconds to reach the target error from a shared initialisation.
    Converge(Overrides),
    /// Quartiles of the spectral initialisation error against m/n.
    InitAccuracy(Overrides),
    /// Median final error against noise level.
    NoiseSweep(Overrides),
    /// Full trace of single recovery runs.
    Recover(Overrides),
    /// Recover a grayscale image from coded diffraction patterns.
    ImageDemo(Overrides),
    /// Expected RWF and WF losses over a correlation grid.
    LossSurface(Overrides),
}

/// Flags shared by every subcommand; each overrides the matching config key.
#[derive(Debug, Args)]
struct Overrides {
    /// Config file of `key = value` lines (`#` starts a comment).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Signal dimension.
    #[arg(long)]
    n: Option<String>,
    /// Trials per sweep point.
    #[arg(long)]
    trials: Option<String>,
    /// Master seed; per-trial seeds are derived from it.
    #[arg(long)]
    seed: Option<String>,
    /// Output CSV path.
    #[arg(long, value_name = "PATH")]
    out: Option<String>,
    /// Worker threads for independent trials.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Comma-separated oversampling ratios m/n (mask counts L for cdp).
    #[arg(long, value_name = "LIST")]
    m_over_n: Option<String>,
    /// Measurement model: real, complex or cdp.
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated algorithms: rwf, wf, irwf, minibatch-irwf, kaczmarz, block-kaczmarz.
    #[arg(long, value_name = "LIST")]
    algo: Option<String>,
    /// Relative error counted as success (and where runs stop).
    #[arg(long)]
    success_tol: Option<String>,
    /// Maximum passes per run.
    #[arg(long)]
    budget: Option<String>,
    /// Noise model: none, bounded or poisson.
    #[arg(long)]
    noise: Option<String>,
    /// Comma-separated noise levels (Poisson alpha, or relative rms for bounded).
    #[arg(long, value_name = "LIST")]
    noise_levels: Option<String>,
    /// Step size for RWF and WF.
    #[arg(long)]
    mu: Option<String>,
    /// Incremental step scale; the step is rho0 / n.
    #[arg(long)]
    rho0: Option<String>,
    /// Minibatch and block size.
    #[arg(long)]
    minibatch_k: Option<String>,
    /// Power iterations in the spectral initialisation.
    #[arg(long)]
    power_iters: Option<String>,
    /// Plain PGM image for image-demo.
    #[arg(long, value_name = "PATH")]
    image: Option<String>,
    /// Side of the synthetic image when no --image is given.
    #[arg(long)]
    image_size: Option<String>,
    /// Number of correlation grid points for loss-surface.
    #[arg(long)]
    rho_grid: Option<String>,
    /// Comma-separated ||z|| levels for loss-surface.
    #[arg(long, value_name = "LIST")]
    norm_levels: Option<String>,
}

impl Command {
    fn split(self) -> (Experiment, Overrides) {
        match self {
            Command::PhaseTransition(o) => (Experiment::PhaseTransition, o),
            Command::Converge(o) => (Experiment::ConvergenceRace, o),
            Command::InitAccuracy(o) => (Experiment::InitAccuracy, o),
            Command::NoiseSweep(o) => (Experiment::NoiseSweep, o),
            Command::Recover(o) => (Experiment::Recover, o),
            Command::ImageDemo(o) => (Experiment::ImageDemo, o),
            Command::LossSurface(o) => (Experiment::LossSurface, o),
        }
    }
}

impl Overrides {
    fn into_config(self, experiment: Experiment) -> Result<(ExperimentConfig, usize)> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| HarnessError::Config(format!("cannot read config {}: {e}", path.display())))?;
                ExperimentConfig::parse(experiment, &text)?
            }
            None => ExperimentConfig::defaults(experiment),
        };
        let pairs = [
            ("n", self.n),
            ("trials", self.trials),
            ("seed", self.seed),
            ("output_path", self.out),
            ("m_over_n", self.m_over_n),
            ("model", self.model),
            ("algorithms", self.algo),
            ("success_tol", self.success_tol),
            ("iteration_budget", self.budget),
            ("noise", self.noise),
            ("noise_levels", self.noise_levels),
            ("mu", self.mu),
            ("rho0", self.rho0),
            ("minibatch_k", self.minibatch_k),
            ("power_iters", self.power_iters),
            ("image", self.image),
            ("image_size", self.image_size),
            ("rho_grid", self.rho_grid),
            ("norm_levels", self.norm_levels),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, &v).map_err(|e| HarnessError::Config(format!("--{}: {e}", key.replace('_', "-"))))?;
            }
        }
        if self.jobs == 0 {
            return Err(HarnessError::Config("--jobs must be at least 1".into()));
        }
        cfg.validate()?;
        Ok((cfg, self.jobs))
    }
}

/// Parses `args` (including the program name), runs the experiment and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // clap prints help and version to stdout and errors to stderr.
            let _ = e.print();
            return code;
        }
    };
    let (experiment, overrides) = cli.command.split();
    let outcome = overrides.into_config(experiment).and_then(|(cfg, jobs)| {
        let table = execute(&cfg, jobs)?;
        Ok((cfg, table))
    });
    match outcome {
        Ok((cfg, table)) => {
            println!("wrote {} rows to {}", table.rows.len(), cfg.output_path.display());
            0
        }
        Err(e) => {
            eprintln!("rwf {}: {e}", experiment.name());
            e.exit_code()
        }
    }
}
