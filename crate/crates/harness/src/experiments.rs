//! Experiment drivers.
//!
//! Trial `t` at sweep point `p` draws everything from
//! `derive_seed(derive_seed(seed, p), t)`, so results do not depend on the
//! order or thread in which trials run. Algorithms compared at one point share
//! the signal, ensemble, measurements and spectral initialisation.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rwf_core::analysis::{write_loss_surface, LOSS_SURFACE_HEADER};
use rwf_core::rng::derive_seed;
use rwf_core::solvers::{fmt_num, TRACE_CSV_HEADER};
use rwf_core::{
    dist_up_to_phase, make_cdp, make_gaussian, measure, relative_error, run, spectral_initialize, Algorithm, Complex64,
    Ensemble, InitParams, Measurements, NoiseSpec, RunTrace, Signal, SolverConfig,
};

use crate::config::{Experiment, ExperimentConfig, Model, NoiseKind};
use crate::error::{HarnessError, Result};
use crate::parallel::par_map;
use crate::pgm::GrayImage;
use crate::table::ResultTable;

pub const PHASE_TRANSITION_HEADER: &str = "algorithm,n,m,successes,trials,success_rate";
pub const CONVERGENCE_HEADER: &str = "algorithm,n,m,mean_passes,mean_seconds";
pub const INIT_ACCURACY_HEADER: &str = "n,m,median_err,q25,q75";
pub const NOISE_SWEEP_HEADER: &str = "algorithm,alpha,median_final_err";
pub const IMAGE_DEMO_HEADER: &str = "algorithm,width,height,L,n,m,passes_to_target,final_relative_error,stop_reason";

/// Relative error the image demo counts passes to.
pub const IMAGE_TARGET: f64 = 1e-10;

/// One synthetic problem: signal, ensemble and measurements.
pub struct Instance {
    pub x: Signal,
    pub a: Ensemble,
    pub y: Measurements,
}

pub fn num_measurements(cfg: &ExperimentConfig, ratio: f64) -> usize {
    (ratio * cfg.n as f64).round() as usize
}

pub fn trial_seed(master: u64, point: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(master, point as u64), trial as u64)
}

fn ensemble(model: Model, n: usize, ratio: f64, seed: u64) -> Result<Ensemble> {
    Ok(match model {
        Model::Cdp => make_cdp(n, ratio as usize, seed)?,
        _ => make_gaussian(n, (ratio * n as f64).round() as usize, model.field(), seed)?,
    })
}

/// Noise realisation for level `level`; zero means clean measurements.
fn noise_spec(kind: NoiseKind, level: f64, m: usize, x: &Signal, seed: u64) -> Result<NoiseSpec> {
    Ok(match kind {
        _ if level == 0.0 => NoiseSpec::None,
        NoiseKind::None => NoiseSpec::None,
        NoiseKind::Bounded => NoiseSpec::bounded_gaussian(m, level * x.norm(), seed)?,
        NoiseKind::Poisson => NoiseSpec::poisson(level, seed)?,
    })
}

pub fn instance(cfg: &ExperimentConfig, ratio: f64, noise_level: f64, seed: u64) -> Result<Instance> {
    let x = Signal::gaussian(cfg.n, cfg.model.field(), seed);
    let a = ensemble(cfg.model, cfg.n, ratio, seed)?;
    let noise = noise_spec(cfg.noise, noise_level, a.m(), &x, seed)?;
    let y = measure(&a, &x, &noise)?;
    Ok(Instance { x, a, y })
}

fn init_params(cfg: &ExperimentConfig) -> InitParams {
    InitParams { power_iters: cfg.power_iters, ..InitParams::default() }
}

pub fn solver_config(cfg: &ExperimentConfig, algorithm: Algorithm, tol: f64, seed: u64) -> SolverConfig {
    let mut s = SolverConfig::new(algorithm, cfg.model.field());
    if let Some(mu) = cfg.mu {
        s.mu = mu;
    }
    s.rho0 = cfg.rho0;
    s.minibatch_k = cfg.minibatch_k;
    s.max_passes = cfg.iteration_budget;
    s.tol = tol;
    s.seed = seed;
    s
}

fn expect(cfg: &ExperimentConfig, e: Experiment) -> Result<()> {
    cfg.validate()?;
    if cfg.experiment != e {
        return Err(HarnessError::Config(format!("expected a '{e}' config, got '{}'", cfg.experiment)));
    }
    Ok(())
}

/// Every `(point, trial)` pair in sweep order.
fn grid(points: usize, trials: usize) -> Vec<(usize, usize)> {
    (0..points).flat_map(|p| (0..trials).map(move |t| (p, t))).collect()
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, k) = values.fold((0.0, 0usize), |(s, k), v| (s + v, k + 1));
    s / k as f64
}

/// Final relative errors of every algorithm on one freshly drawn trial.
fn final_errors(cfg: &ExperimentConfig, ratio: f64, level: f64, seed: u64, tol: f64) -> Result<Vec<f64>> {
    let inst = instance(cfg, ratio, level, seed)?;
    let z0 = spectral_initialize(&inst.y, &inst.a, &init_params(cfg), seed)?.z0;
    cfg.algorithms
        .iter()
        .map(|&alg| {
            let trace = run(&inst.y, &inst.a, &z0, &solver_config(cfg, alg, tol, seed), Some(&inst.x))?;
            Ok(trace.final_relative_error().unwrap_or(f64::INFINITY))
        })
        .collect()
}

pub fn run_phase_transition(cfg: &ExperimentConfig, jobs: usize) -> Result<ResultTable> {
    expect(cfg, Experiment::PhaseTransition)?;
    let cells = grid(cfg.m_over_n.len(), cfg.trials);
    let results = par_map(&cells, jobs, |&(p, t)| {
        final_errors(cfg, cfg.m_over_n[p], cfg.noise_levels[0], trial_seed(cfg.seed, p, t), cfg.success_tol)
    });
    let results: Vec<Vec<f64>> = results.into_iter().collect::<Result<_>>()?;
    let mut table = ResultTable::new(PHASE_TRANSITION_HEADER, cfg);
    for (k, alg) in cfg.algorithms.iter().enumerate() {
        for (p, &ratio) in cfg.m_over_n.iter().enumerate() {
            let successes = (0..cfg.trials).filter(|&t| results[p * cfg.trials + t][k] <= cfg.success_tol).count();
            table.push(&[
                alg.name().into(),
                cfg.n.to_string(),
                measurements_for(cfg, ratio).to_string(),
                successes.to_string(),
                cfg.trials.to_string(),
                fmt_num(successes as f64 / cfg.trials as f64),
            ]);
        }
    }
    Ok(table)
}

fn measurements_for(cfg: &ExperimentConfig, ratio: f64) -> usize {
    match cfg.model {
        Model::Cdp => ratio as usize * cfg.n,
        _ => num_measurements(cfg, ratio),
    }
}

/// One algorithm's run in the convergence race.
#[derive(Debug, Clone)]
pub struct RaceRun {
    pub point: usize,
    pub trial: usize,
    pub algorithm: Algorithm,
    pub trace: RunTrace,
    pub seconds: f64,
}

/// Runs every algorithm from the shared spectral initialisation of each trial,
/// stopping at `success_tol` (the race target).
pub fn convergence_race_runs(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<RaceRun>> {
    expect(cfg, Experiment::ConvergenceRace)?;
    let cells = grid(cfg.m_over_n.len(), cfg.trials);
    let results = par_map(&cells, jobs, |&(p, t)| -> Result<Vec<RaceRun>> {
        let seed = trial_seed(cfg.seed, p, t);
        let inst = instance(cfg, cfg.m_over_n[p], cfg.noise_levels[0], seed)?;
        let z0 = spectral_initialize(&inst.y, &inst.a, &init_params(cfg), seed)?.z0;
        cfg.algorithms
            .iter()
            .map(|&algorithm| {
                let scfg = solver_config(cfg, algorithm, cfg.success_tol, seed);
                let start = Instant::now();
                let trace = run(&inst.y, &inst.a, &z0, &scfg, Some(&inst.x))?;
                Ok(RaceRun { point: p, trial: t, algorithm, trace, seconds: start.elapsed().as_secs_f64() })
            })
            .collect()
    });
    Ok(results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect())
}

/// Mean passes used (to the target, or the budget when it is not reached) and
/// mean wall-clock seconds per algorithm and sweep point.
pub fn run_convergence_race(cfg: &ExperimentConfig, jobs: usize) -> Result<ResultTable> {
    let runs = convergence_race_runs(cfg, jobs)?;
    Ok(convergence_table(cfg, &runs))
}

pub fn convergence_table(cfg: &ExperimentConfig, runs: &[RaceRun]) -> ResultTable {
    let mut table = ResultTable::new(CONVERGENCE_HEADER, cfg);
    for &alg in &cfg.algorithms {
        for (p, &ratio) in cfg.m_over_n.iter().enumerate() {
            let sel = || runs.iter().filter(move |r| r.algorithm == alg && r.point == p);
            table.push(&[
                alg.name().into(),
                cfg.n.to_string(),
                measurements_for(cfg, ratio).to_string(),
                fmt_num(mean(sel().map(|r| r.trace.passes_used))),
                fmt_num(mean(sel().map(|r| r.seconds))),
            ]);
        }
    }
    table
}

/// Relative errors of the spectral initialisation, indexed `[point][trial]`.
pub fn init_errors(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<Vec<f64>>> {
    expect(cfg, Experiment::InitAccuracy)?;
    let cells = grid(cfg.m_over_n.len(), cfg.trials);
    let errs = par_map(&cells, jobs, |&(p, t)| -> Result<f64> {
        let seed = trial_seed(cfg.seed, p, t);
        let inst = instance(cfg, cfg.m_over_n[p], cfg.noise_levels[0], seed)?;
        let init = spectral_initialize(&inst.y, &inst.a, &init_params(cfg), seed)?;
        Ok(relative_error(&init.z0, &inst.x)?)
    });
    let errs: Vec<f64> = errs.into_iter().collect::<Result<_>>()?;
    Ok(errs.chunks(cfg.trials).map(<[f64]>::to_vec).collect())
}

pub fn run_init_accuracy(cfg: &ExperimentConfig, jobs: usize) -> Result<ResultTable> {
    let errs = init_errors(cfg, jobs)?;
    let mut table = ResultTable::new(INIT_ACCURACY_HEADER, cfg);
    for (p, &ratio) in cfg.m_over_n.iter().enumerate() {
        let mut e = errs[p].clone();
        e.sort_by(f64::total_cmp);
        table.push(&[
            cfg.n.to_string(),
            measurements_for(cfg, ratio).to_string(),
            fmt_num(quantile(&e, 0.5)),
            fmt_num(quantile(&e, 0.25)),
            fmt_num(quantile(&e, 0.75)),
        ]);
    }
    Ok(table)
}

/// Final relative error against noise level at the first `m_over_n`. Trials
/// share their signal and ensemble across levels. The `alpha` column holds the
/// Poisson scale, or the relative rms `||w|| / (sqrt(m) ||x||)` for bounded noise.
pub fn run_noise_sweep(cfg: &ExperimentConfig, jobs: usize) -> Result<ResultTable> {
    expect(cfg, Experiment::NoiseSweep)?;
    let cells = grid(cfg.noise_levels.len(), cfg.trials);
    let results = par_map(&cells, jobs, |&(l, t)| {
        final_errors(cfg, cfg.m_over_n[0], cfg.noise_levels[l], trial_seed(cfg.seed, 0, t), cfg.success_tol)
    });
    let results: Vec<Vec<f64>> = results.into_iter().collect::<Result<_>>()?;
    let mut table = ResultTable::new(NOISE_SWEEP_HEADER, cfg);
    for (k, alg) in cfg.algorithms.iter().enumerate() {
        for (l, &level) in cfg.noise_levels.iter().enumerate() {
            let errs: Vec<f64> = (0..cfg.trials).map(|t| results[l * cfg.trials + t][k]).collect();
            table.push(&[alg.name().into(), fmt_num(level), fmt_num(median(&errs))]);
        }
    }
    Ok(table)
}

/// Full traces of the first algorithm at the first `m_over_n`, one block of
/// rows per trial.
pub fn run_recover(cfg: &ExperimentConfig, jobs: usize) -> Result<ResultTable> {
    expect(cfg, Experiment::Recover)?;
    let alg = cfg.algorithms[0];
    let ratio = cfg.m_over_n[0];
    let trials: Vec<usize> = (0..cfg.trials).collect();
    let traces = par_map(&trials, jobs, |&t| -> Result<Vec<u8>> {
        let seed = trial_seed(cfg.seed, 0, t);
        let inst = instance(cfg, ratio, cfg.noise_levels[0], seed)?;
        let z0 = spectral_initialize(&inst.y, &inst.a, &init_params(cfg), seed)?.z0;
        let trace = run(&inst.y, &inst.a, &z0, &solver_config(cfg, alg, cfg.success_tol, seed), Some(&inst.x))?;
        let mut buf = Vec::new();
        trace.write_csv_rows(&mut buf, t, alg.name(), inst.a.n(), inst.a.m())?;
        Ok(buf)
    });
    let mut table = ResultTable::new(TRACE_CSV_HEADER, cfg);
    for buf in traces {
        let text = String::from_utf8(buf?).map_err(|e| HarnessError::Runtime(e.to_string()))?;
        table.rows.extend(text.lines().map(str::to_string));
    }
    Ok(table)
}

/// Files written next to the main CSV by the image demo.
pub fn image_demo_paths(output: &Path, l: usize) -> (PathBuf, PathBuf) {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "image-demo".into());
    let dir = output.parent().unwrap_or(Path::new(""));
    (dir.join(format!("{stem}_L{l}.pgm")), dir.join(format!("{stem}_L{l}_trace.csv")))
}

/// Result of recovering one image from `L` coded diffraction patterns.
pub struct ImageRecovery {
    pub l: usize,
    pub m: usize,
    /// Passes to [`IMAGE_TARGET`], `None` if never reached.
    pub passes_to_target: Option<f64>,
    pub final_relative_error: f64,
    pub stop_reason: &'static str,
    pub recovered: GrayImage,
    pub trace_rows: Vec<String>,
}

/// Recovers `image` from CDP magnitudes. An all-zero image yields all-zero
/// measurements; the guard returns the zero image after 0 passes.
pub fn recover_image(cfg: &ExperimentConfig, image: &GrayImage, l: usize, seed: u64) -> Result<ImageRecovery> {
    let n = image.width * image.height;
    let x = Signal::complex(image.to_unit().into_iter().map(|v| Complex64::new(v, 0.0)).collect())?;
    let a = make_cdp(n, l, seed)?;
    let y = measure(&a, &x, &NoiseSpec::None)?;
    let alg = cfg.algorithms[0];
    if y.values().iter().all(|&v| v == 0.0) {
        return Ok(ImageRecovery {
            l,
            m: a.m(),
            passes_to_target: Some(0.0),
            final_relative_error: 0.0,
            stop_reason: "zero-signal",
            recovered: GrayImage::from_unit(image.width, image.height, &vec![0.0; n]),
            trace_rows: Vec::new(),
        });
    }
    let z0 = spectral_initialize(&y, &a, &init_params(cfg), seed)?.z0;
    let trace = run(&y, &a, &z0, &solver_config(cfg, alg, IMAGE_TARGET, seed), Some(&x))?;
    let z = trace.iterate.as_complex().ok_or_else(|| HarnessError::Runtime("expected a complex iterate".into()))?;
    // Undo the global phase against the (non-negative) image itself.
    let xs = x.as_complex().unwrap();
    let c: Complex64 = z.iter().zip(xs).map(|(zi, xi)| zi.conj() * xi).sum();
    let phase = if c.norm() > 0.0 { c / c.norm() } else { Complex64::new(1.0, 0.0) };
    let aligned: Vec<f64> = z.iter().map(|zi| (zi * phase).re).collect();
    let mut buf = Vec::new();
    trace.write_csv_rows(&mut buf, 0, alg.name(), n, a.m())?;
    let text = String::from_utf8(buf).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    Ok(ImageRecovery {
        l,
        m: a.m(),
        passes_to_target: trace.passes_to(IMAGE_TARGET),
        final_relative_error: dist_up_to_phase(&trace.iterate, &x)? / x.norm(),
        stop_reason: trace.stop_reason.name(),
        recovered: GrayImage::from_unit(image.width, image.height, &aligned),
        trace_rows: text.lines().map(str::to_string).collect(),
    })
}

pub fn load_image(cfg: &ExperimentConfig) -> Result<GrayImage> {
    match &cfg.image {
        Some(path) => GrayImage::read(path),
        None => Ok(GrayImage::synthetic(cfg.image_size)),
    }
}

/// Recovers the demo image once per `L` in `m_over_n`. The caller writes the
/// recovered images and traces (see [`image_demo_paths`]).
pub fn run_image_demo(cfg: &ExperimentConfig, jobs: usize) -> Result<(ResultTable, Vec<ImageRecovery>)> {
    expect(cfg, Experiment::ImageDemo)?;
    if cfg.model != Model::Cdp {
        return Err(HarnessError::Config("image-demo requires model = cdp".into()));
    }
    let image = load_image(cfg)?;
    let ls: Vec<usize> = cfg.m_over_n.iter().map(|&r| r as usize).collect();
    let recs = par_map(&ls, jobs, |&l| recover_image(cfg, &image, l, derive_seed(cfg.seed, l as u64)));
    let recs: Vec<ImageRecovery> = recs.into_iter().collect::<Result<_>>()?;
    let mut table = ResultTable::new(IMAGE_DEMO_HEADER, cfg);
    for r in &recs {
        table.push(&[
            cfg.algorithms[0].name().into(),
            image.width.to_string(),
            image.height.to_string(),
            r.l.to_string(),
            (image.width * image.height).to_string(),
            r.m.to_string(),
            r.passes_to_target.map(fmt_num).unwrap_or_default(),
            fmt_num(r.final_relative_error),
            r.stop_reason.into(),
        ]);
    }
    Ok((table, recs))
}

/// Expected RWF and WF losses over a `rho` grid for each `||z||` level, `||x|| = 1`.
pub fn run_loss_surface(cfg: &ExperimentConfig) -> Result<ResultTable> {
    expect(cfg, Experiment::LossSurface)?;
    let mut buf = Vec::new();
    write_loss_surface(&mut buf, cfg.rho_grid, &cfg.norm_levels, 1.0)?;
    let text = String::from_utf8(buf).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let mut table = ResultTable::new(LOSS_SURFACE_HEADER, cfg);
    table.rows.extend(text.lines().skip(1).map(str::to_string));
    Ok(table)
}

/// Runs `cfg` and writes every output file. Nothing is written if the config
/// is invalid or the run fails.
pub fn execute(cfg: &ExperimentConfig, jobs: usize) -> Result<ResultTable> {
    cfg.validate()?;
    let table = match cfg.experiment {
        Experiment::PhaseTransition => run_phase_transition(cfg, jobs)?,
        Experiment::ConvergenceRace => run_convergence_race(cfg, jobs)?,
        Experiment::InitAccuracy => run_init_accuracy(cfg, jobs)?,
        Experiment::NoiseSweep => run_noise_sweep(cfg, jobs)?,
        Experiment::Recover => run_recover(cfg, jobs)?,
        Experiment::LossSurface => run_loss_surface(cfg)?,
        Experiment::ImageDemo => {
            let (table, recs) = run_image_demo(cfg, jobs)?;
            for r in &recs {
                let (img, trace) = image_demo_paths(&cfg.output_path, r.l);
                r.recovered.write(&img)?;
                let mut t = ResultTable::new(TRACE_CSV_HEADER, cfg);
                t.rows = r.trace_rows.clone();
                t.write(&trace)?;
            }
            table.write(&cfg.output_path)?;
            return Ok(table);
        }
    };
    table.write(&cfg.output_path)?;
    Ok(table)
}
