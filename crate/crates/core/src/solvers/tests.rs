use super::*;
use crate::loss::wf_loss;
use crate::sensing::{make_cdp, make_gaussian, measure, NoiseSpec};
use crate::signal::relative_error;
use num_complex::Complex64;

fn one_d(a: f64, y: f64) -> (Ensemble, Measurements) {
    (Ensemble::from_real_rows(1, vec![a]).unwrap(), Measurements::clean(vec![y]).unwrap())
}

fn real(v: &Signal) -> &[f64] {
    v.as_real().unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// `x + frac ||x|| u` with `u` a uniformly random unit direction.
fn perturb(x: &Signal, frac: f64, seed: u64) -> Signal {
    let u = Signal::gaussian(x.len(), x.kind(), seed ^ 0x5eed);
    let c = frac * x.norm() / u.norm();
    match (x, &u) {
        (Signal::Real(x), Signal::Real(u)) => Signal::Real(x.iter().zip(u).map(|(a, b)| a + c * b).collect()),
        (Signal::Complex(x), Signal::Complex(u)) => Signal::Complex(x.iter().zip(u).map(|(a, b)| a + b * c).collect()),
        _ => unreachable!(),
    }
}

struct Instance {
    a: Ensemble,
    x: Signal,
    y: Measurements,
}

fn instance(n: usize, m: usize, kind: FieldKind, seed: u64) -> Instance {
    let a = make_gaussian(n, m, kind, seed).unwrap();
    let x = Signal::gaussian(n, kind, seed);
    let y = measure(&a, &x, &NoiseSpec::None).unwrap();
    Instance { a, x, y }
}

#[test]
fn gradient_examples() {
    let (a, y) = one_d(1.0, 1.0);
    let g = |z: f64| real(&rwf_gradient(&Signal::real(vec![z]).unwrap(), &y, &a).unwrap())[0];
    assert_eq!(g(2.0), 1.0);
    assert_eq!(g(0.0), 0.0);
    assert_eq!(g(-2.0), -1.0);
    let w = wf_gradient(&Signal::real(vec![2.0]).unwrap(), &y, &a).unwrap();
    assert_eq!(real(&w)[0], 6.0);

    for kind in [FieldKind::Real, FieldKind::Complex] {
        let p = instance(16, 96, kind, 3);
        for grad in [rwf_gradient(&p.x, &p.y, &p.a).unwrap(), wf_gradient(&p.x, &p.y, &p.a).unwrap()] {
            assert!(grad.norm() < 1e-12 * p.x.norm(), "{}", grad.norm());
        }
    }
    let cdp = make_cdp(32, 4, 1).unwrap();
    let x = Signal::gaussian(32, FieldKind::Complex, 1);
    let y = measure(&cdp, &x, &NoiseSpec::None).unwrap();
    assert!(rwf_gradient(&x, &y, &cdp).unwrap().norm() < 1e-10);
}

#[test]
fn gradient_errors() {
    let p = instance(8, 40, FieldKind::Real, 0);
    assert!(matches!(rwf_gradient(&Signal::zeros(7, FieldKind::Real), &p.y, &p.a), Err(Error::Dimension { .. })));
    let short = Measurements::clean(vec![1.0; 39]).unwrap();
    assert!(wf_gradient(&p.x, &short, &p.a).is_err());
    assert!(matches!(rwf_gradient(&Signal::zeros(8, FieldKind::Complex), &p.y, &p.a), Err(Error::Field(_))));
}

#[test]
fn wf_gradient_matches_finite_differences() {
    let p = instance(5, 20, FieldKind::Real, 11);
    let z = Signal::gaussian(5, FieldKind::Real, 12);
    let d = Signal::gaussian(5, FieldKind::Real, 13);
    let g = wf_gradient(&z, &p.y, &p.a).unwrap();
    let analytic: f64 = real(&g).iter().zip(real(&d)).map(|(a, b)| a * b).sum();
    let h = 1e-6;
    let shift = |s: f64| {
        Signal::real(real(&z).iter().zip(real(&d)).map(|(a, b)| a + s * b).collect()).unwrap()
    };
    let numeric = (wf_loss(&shift(h), &p.y, &p.a).unwrap() - wf_loss(&shift(-h), &p.y, &p.a).unwrap()) / (2.0 * h);
    assert!((numeric - analytic).abs() <= 1e-5 * analytic.abs().max(1.0), "{numeric} vs {analytic}");
}

#[test]
fn rwf_gradient_is_loss_derivative_away_from_kinks() {
    let p = instance(6, 30, FieldKind::Real, 21);
    let z = Signal::gaussian(6, FieldKind::Real, 22);
    let d = Signal::gaussian(6, FieldKind::Real, 23);
    let g = rwf_gradient(&z, &p.y, &p.a).unwrap();
    let analytic: f64 = real(&g).iter().zip(real(&d)).map(|(a, b)| a * b).sum();
    let h = 1e-6;
    let shift = |s: f64| Signal::real(real(&z).iter().zip(real(&d)).map(|(a, b)| a + s * b).collect()).unwrap();
    let loss = |s: f64| crate::loss::rwf_loss(&shift(s), &p.y, &p.a).unwrap();
    let numeric = (loss(h) - loss(-h)) / (2.0 * h);
    assert!((numeric - analytic).abs() <= 1e-6 * analytic.abs().max(1.0));
}

#[test]
fn one_dimensional_kaczmarz_fits_exactly() {
    let (a, y) = one_d(2.0, 2.0);
    let z = Signal::real(vec![3.0]).unwrap();
    assert_eq!(real(&kaczmarz_step(&z, 0, &y, &a).unwrap())[0], 1.0);
    assert_eq!(real(&irwf_step(&z, 0, &y, &a, 0.25).unwrap())[0], 1.0);
    // Already fit: a z = 2 = y ph(a z).
    let fit = Signal::real(vec![1.0]).unwrap();
    assert_eq!(irwf_step(&fit, 0, &y, &a, 0.7).unwrap(), fit);
}

#[test]
fn kaczmarz_is_irwf_with_row_norm_step() {
    for kind in [FieldKind::Real, FieldKind::Complex] {
        let p = instance(24, 150, kind, 5);
        let mut z = Signal::gaussian(24, kind, 6);
        for i in 0..150 {
            let step = 1.0 / p.a.row_norm_sqr(i).unwrap();
            let k = kaczmarz_step(&z, i, &p.y, &p.a).unwrap();
            let r = irwf_step(&z, i, &p.y, &p.a, step).unwrap();
            assert_eq!(k.to_bytes(), r.to_bytes());
            z = k;
        }
    }
}

#[test]
fn kaczmarz_step_projects_onto_sample() {
    for kind in [FieldKind::Real, FieldKind::Complex] {
        let p = instance(32, 200, kind, 8);
        let z = Signal::gaussian(32, kind, 9);
        for i in [0, 17, 199] {
            let z1 = kaczmarz_step(&z, i, &p.y, &p.a).unwrap();
            let az = p.a.apply(&z1).unwrap();
            let mag = match &az {
                Signal::Real(v) => v[i].abs(),
                Signal::Complex(v) => v[i].norm(),
            };
            assert!((mag - p.y.values()[i]).abs() <= 1e-12 * p.y.values()[i].max(1.0));
        }
    }
    let cdp = make_cdp(16, 3, 2).unwrap();
    let x = Signal::gaussian(16, FieldKind::Complex, 3);
    let y = measure(&cdp, &x, &NoiseSpec::None).unwrap();
    let z1 = kaczmarz_step(&Signal::gaussian(16, FieldKind::Complex, 4), 20, &y, &cdp).unwrap();
    let mag = cdp.apply(&z1).unwrap().as_complex().unwrap()[20].norm();
    assert!((mag - y.values()[20]).abs() < 1e-12 * y.values()[20].max(1.0));
}

#[test]
fn minibatch_reductions() {
    for kind in [FieldKind::Real, FieldKind::Complex] {
        let p = instance(20, 120, kind, 30);
        let z = Signal::gaussian(20, kind, 31);
        let step = 1.0 / 20.0;
        for i in [0, 55, 119] {
            let a = minibatch_irwf_step(&z, &[i], &p.y, &p.a, step).unwrap();
            let b = irwf_step(&z, i, &p.y, &p.a, step).unwrap();
            assert_eq!(a.to_bytes(), b.to_bytes());
        }
        // The full index set is a batch step of size m * step.
        let all: Vec<usize> = (0..120).collect();
        let full = minibatch_irwf_step(&z, &all, &p.y, &p.a, step).unwrap();
        let g = rwf_gradient(&z, &p.y, &p.a).unwrap();
        let batch = match (&z, &g) {
            (Signal::Real(z), Signal::Real(g)) => Signal::Real(z.iter().zip(g).map(|(a, b)| a - 120.0 * step * b).collect()),
            (Signal::Complex(z), Signal::Complex(g)) => {
                Signal::Complex(z.iter().zip(g).map(|(a, b)| a - b * (120.0 * step)).collect())
            }
            _ => unreachable!(),
        };
        assert!(dist_plain(&full, &batch) < 1e-12 * z.norm());
        // The truth is a fixed point for every index set.
        let some = [3, 9, 40, 77];
        let fixed = minibatch_irwf_step(&p.x, &some, &p.y, &p.a, 0.3).unwrap();
        assert!(dist_plain(&fixed, &p.x) < 1e-13 * p.x.norm());
    }
}

fn dist_plain(a: &Signal, b: &Signal) -> f64 {
    match (a, b) {
        (Signal::Real(a), Signal::Real(b)) => a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt(),
        (Signal::Complex(a), Signal::Complex(b)) => a.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt(),
        _ => f64::INFINITY,
    }
}

#[test]
fn block_kaczmarz_fits_block() {
    for kind in [FieldKind::Real, FieldKind::Complex] {
        let p = instance(40, 320, kind, 40);
        let z = Signal::gaussian(40, kind, 41);
        let idx = [5, 80, 81, 200, 13, 319, 150, 2];
        let z1 = block_kaczmarz_step(&z, &idx, &p.y, &p.a).unwrap();
        let az = p.a.apply(&z1).unwrap();
        for &i in &idx {
            let mag = match &az {
                Signal::Real(v) => v[i].abs(),
                Signal::Complex(v) => v[i].norm(),
            };
            assert!((mag - p.y.values()[i]).abs() < 1e-10, "{mag} vs {}", p.y.values()[i]);
        }
        // A single row is the Kaczmarz projection.
        let b = block_kaczmarz_step(&z, &[77], &p.y, &p.a).unwrap();
        let k = kaczmarz_step(&z, 77, &p.y, &p.a).unwrap();
        assert!(dist_plain(&b, &k) < 1e-12 * z.norm());
    }
}

#[test]
fn block_kaczmarz_on_full_mask_is_minibatch() {
    let n = 64;
    let a = make_cdp(n, 4, 17).unwrap();
    let x = Signal::gaussian(n, FieldKind::Complex, 17);
    let y = measure(&a, &x, &NoiseSpec::None).unwrap();
    let mut zb = Signal::gaussian(n, FieldKind::Complex, 18);
    let mut zm = zb.clone();
    let mut rng = rng::stream(1, rng::SOLVER);
    for _ in 0..100 {
        let l = rng.random_range(0..4);
        let idx: Vec<usize> = (l * n..(l + 1) * n).collect();
        zb = block_kaczmarz_step_with(&zb, &idx, &y, &a, BlockSolve::Factorize).unwrap();
        zm = minibatch_irwf_step(&zm, &idx, &y, &a, 1.0 / n as f64).unwrap();
    }
    assert!(dist_plain(&zb, &zm) < 1e-10 * zm.norm(), "{}", dist_plain(&zb, &zm));
    // The fast path agrees with the factorisation.
    let idx: Vec<usize> = (n..2 * n).collect();
    let fast = block_kaczmarz_step(&zb, &idx, &y, &a).unwrap();
    let slow = block_kaczmarz_step_with(&zb, &idx, &y, &a, BlockSolve::Factorize).unwrap();
    assert!(dist_plain(&fast, &slow) < 1e-10 * zb.norm());
}

#[test]
fn step_errors() {
    let p = instance(4, 12, FieldKind::Real, 1);
    let z = Signal::gaussian(4, FieldKind::Real, 2);
    assert!(irwf_step(&z, 12, &p.y, &p.a, 0.1).is_err());
    assert!(irwf_step(&z, 0, &p.y, &p.a, 0.0).is_err());
    assert!(kaczmarz_step(&z, 99, &p.y, &p.a).is_err());
    assert!(minibatch_irwf_step(&z, &[], &p.y, &p.a, 0.1).is_err());
    assert!(minibatch_irwf_step(&z, &[1, 1], &p.y, &p.a, 0.1).is_err());
    assert!(minibatch_irwf_step(&z, &[1, 12], &p.y, &p.a, 0.1).is_err());
    assert!(block_kaczmarz_step(&z, &[0, 1, 2, 3, 4], &p.y, &p.a).is_err());

    let zero = Ensemble::from_real_rows(2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
    let y2 = Measurements::clean(vec![0.0, 1.0]).unwrap();
    let z2 = Signal::real(vec![1.0, 2.0]).unwrap();
    assert!(matches!(kaczmarz_step(&z2, 0, &y2, &zero), Err(Error::ZeroNorm(_))));

    let dup = Ensemble::from_real_rows(2, vec![1.0, 2.0, 1.0, 2.0]).unwrap();
    let y3 = Measurements::clean(vec![1.0, 1.0]).unwrap();
    let err = block_kaczmarz_step(&z2, &[0, 1], &y3, &dup).unwrap_err();
    assert!(matches!(err, Error::DegenerateBlock(_)));
    assert!(err.to_string().starts_with("degenerate block"));
    let near = Ensemble::from_real_rows(2, vec![1.0, 2.0, 1.0, 2.0 + 1e-9]).unwrap();
    assert!(matches!(block_kaczmarz_step(&z2, &[0, 1], &y3, &near), Err(Error::DegenerateBlock(_))));
}

#[test]
fn updates_stay_finite_at_kinks() {
    // Integer rows with sign patterns that make a_i^T z vanish exactly.
    let rows = vec![1.0, -1.0, 0.0, 0.0, 1.0, -1.0, 1.0, 0.0, -1.0, 2.0, -1.0, -1.0];
    let a = Ensemble::from_real_rows(3, rows).unwrap();
    let y = Measurements::clean(vec![1.0, 2.0, 0.5, 3.0]).unwrap();
    let z = Signal::real(vec![1.0, 1.0, 1.0]).unwrap();
    assert_eq!(a.apply(&z).unwrap(), Signal::real(vec![0.0; 4]).unwrap());
    assert!(rwf_gradient(&z, &y, &a).unwrap().is_finite());
    for i in 0..4 {
        let z1 = irwf_step(&z, i, &y, &a, 0.5).unwrap();
        assert_eq!(z1, z, "a zero product leaves the iterate unchanged");
        assert!(kaczmarz_step(&z, i, &y, &a).unwrap().is_finite());
    }
    assert!(block_kaczmarz_step(&z, &[0, 1], &y, &a).unwrap().is_finite());
    assert!(block_kaczmarz_step(&z, &[0, 1, 2], &y, &a).is_err(), "r0 + r1 = r2");

    for (seed, kind) in [(1, FieldKind::Real), (2, FieldKind::Complex)] {
        let p = instance(16, 64, kind, seed);
        let zero = Signal::zeros(16, kind);
        assert_eq!(rwf_gradient(&zero, &p.y, &p.a).unwrap().norm(), 0.0);
        assert!(wf_gradient(&zero, &p.y, &p.a).unwrap().is_finite());
        for i in 0..64 {
            assert!(irwf_step(&zero, i, &p.y, &p.a, 0.1).unwrap().is_finite());
        }
        assert!(minibatch_irwf_step(&zero, &[0, 5, 9], &p.y, &p.a, 0.1).unwrap().is_finite());
    }
}

#[test]
fn algorithm_names_round_trip() {
    for alg in Algorithm::ALL {
        assert_eq!(Algorithm::parse(alg.name()).unwrap(), alg);
    }
    assert_eq!(Algorithm::parse("Minibatch_IRWF").unwrap(), Algorithm::MinibatchIrwf);
    assert!(Algorithm::parse("twf").is_err());
}

#[test]
fn zero_budget_returns_start() {
    let p = instance(16, 96, FieldKind::Real, 2);
    let z0 = Signal::gaussian(16, FieldKind::Real, 77);
    for alg in Algorithm::ALL {
        let mut cfg = SolverConfig::new(alg, FieldKind::Real);
        cfg.max_passes = 0;
        cfg.minibatch_k = 8;
        let tr = run(&p.y, &p.a, &z0, &cfg, Some(&p.x)).unwrap();
        assert_eq!(tr.iterate, z0);
        assert_eq!(tr.stop_reason, StopReason::Budget);
        assert_eq!(tr.passes_used, 0.0);
        assert_eq!(tr.history.len(), 1);
    }
}

type Mutation = Box<dyn Fn(&mut SolverConfig)>;

#[test]
fn invalid_configs_are_rejected() {
    let p = instance(8, 40, FieldKind::Real, 2);
    let z0 = Signal::gaussian(8, FieldKind::Real, 3);
    let base = SolverConfig::new(Algorithm::Rwf, FieldKind::Real);
    let cases: Vec<Mutation> = vec![
        Box::new(|c| c.mu = 0.0),
        Box::new(|c| c.mu = f64::NAN),
        Box::new(|c| c.tol = 0.0),
        Box::new(|c| c.rho0 = -1.0),
        Box::new(|c| c.record_every = 0),
        Box::new(|c| {
            c.algorithm = Algorithm::MinibatchIrwf;
            c.minibatch_k = 41;
        }),
        Box::new(|c| {
            c.algorithm = Algorithm::BlockKaczmarzPr;
            c.minibatch_k = 9;
        }),
    ];
    for f in cases {
        let mut cfg = base.clone();
        f(&mut cfg);
        assert!(matches!(run(&p.y, &p.a, &z0, &cfg, Some(&p.x)), Err(Error::Invalid(_))), "{cfg:?}");
    }
    assert!(run(&p.y, &p.a, &Signal::zeros(7, FieldKind::Real), &base, None).is_err());
    let wf = SolverConfig::new(Algorithm::Wf, FieldKind::Real);
    assert!(run(&p.y, &p.a, &Signal::zeros(8, FieldKind::Real), &wf, None).is_err());
    assert!(run(&p.y, &p.a, &z0, &base, Some(&Signal::zeros(8, FieldKind::Real))).is_err());
}

#[test]
fn traces_are_well_formed() {
    let p = instance(64, 512, FieldKind::Real, 4);
    let z0 = perturb(&p.x, 0.1, 4);
    for alg in Algorithm::ALL {
        let mut cfg = SolverConfig::new(alg, FieldKind::Real);
        cfg.record_every = 3;
        cfg.max_passes = if alg == Algorithm::Wf { 1000 } else { 60 };
        cfg.minibatch_k = 16;
        cfg.tol = 1e-8;
        let tr = run(&p.y, &p.a, &z0, &cfg, Some(&p.x)).unwrap();
        assert!(tr.history.windows(2).all(|w| w[0].pass_count < w[1].pass_count), "{alg:?}");
        assert!(tr.history.iter().all(|h| h.loss.is_finite() && h.relative_error.unwrap().is_finite()));
        let last = tr.history.last().unwrap();
        assert_eq!(last.pass_count, tr.passes_used);
        assert!(tr.history[..tr.history.len() - 1].iter().all(|h| (h.pass_count as usize).is_multiple_of(3)));
        assert_eq!(tr.stop_reason, StopReason::Tol, "{alg:?}");
        assert!(last.relative_error.unwrap() <= 1e-8);
        assert!((relative_error(&tr.iterate, &p.x).unwrap() - last.relative_error.unwrap()).abs() < 1e-15);
    }
    // Without ground truth the loss drives the stopping rule.
    let mut cfg = SolverConfig::new(Algorithm::Rwf, FieldKind::Real);
    cfg.tol = 1e-12;
    let tr = run(&p.y, &p.a, &z0, &cfg, None).unwrap();
    assert_eq!(tr.stop_reason, StopReason::Tol);
    assert!(tr.history.iter().all(|h| h.relative_error.is_none()));
    assert!(tr.history.last().unwrap().loss <= 1e-12);
}

#[test]
fn divergence_is_reported() {
    let p = instance(32, 256, FieldKind::Real, 6);
    let mut cfg = SolverConfig::new(Algorithm::Rwf, FieldKind::Real);
    cfg.mu = 50.0;
    let tr = run(&p.y, &p.a, &perturb(&p.x, 0.1, 1), &cfg, Some(&p.x)).unwrap();
    assert_eq!(tr.stop_reason, StopReason::Diverged);
    assert!(tr.passes_used < 1000.0);
}

#[test]
fn runs_are_deterministic() {
    let p = instance(32, 256, FieldKind::Complex, 9);
    let z0 = perturb(&p.x, 0.2, 9);
    for alg in [Algorithm::Irwf, Algorithm::MinibatchIrwf, Algorithm::KaczmarzPr] {
        let mut cfg = SolverConfig::new(alg, FieldKind::Complex);
        cfg.minibatch_k = 16;
        cfg.max_passes = 5;
        cfg.seed = 3;
        let a = run(&p.y, &p.a, &z0, &cfg, Some(&p.x)).unwrap();
        let b = run(&p.y, &p.a, &z0, &cfg, Some(&p.x)).unwrap();
        assert_eq!(a.iterate.to_bytes(), b.iterate.to_bytes());
        cfg.seed = 4;
        let c = run(&p.y, &p.a, &z0, &cfg, Some(&p.x)).unwrap();
        assert_ne!(a.iterate.to_bytes(), c.iterate.to_bytes());
    }
}

#[test]
fn csv_rows() {
    let tr = RunTrace {
        iterate: Signal::zeros(1, FieldKind::Real),
        history: vec![
            TracePoint { pass_count: 0.0, relative_error: Some(0.5), loss: 2.0 },
            TracePoint { pass_count: 1.5, relative_error: None, loss: 1e-20 },
        ],
        passes_used: 1.5,
        stop_reason: StopReason::Budget,
    };
    let mut out = Vec::new();
    tr.write_csv_rows(&mut out, 7, "rwf", 10, 80).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "7,rwf,10,80,0,0.5,2\n7,rwf,10,80,1.5,,1e-20\n");
    for v in [0.1, 1.0 / 3.0, 6.02e23, -2.5e-300, 72.0] {
        assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
    }
}

const TRIALS: u64 = 100;

#[test]
fn rwf_contracts_in_basin() {
    let (n, m) = (256, 8 * 256);
    let mut good = 0;
    for t in 0..TRIALS {
        let p = instance(n, m, FieldKind::Real, 1000 + t);
        let z0 = perturb(&p.x, 0.05, t);
        let before = relative_error(&z0, &p.x).unwrap();
        let mut cfg = SolverConfig::new(Algorithm::Rwf, FieldKind::Real);
        cfg.max_passes = 30;
        cfg.tol = 1e-300;
        let tr = run(&p.y, &p.a, &z0, &cfg, Some(&p.x)).unwrap();
        if tr.final_relative_error().unwrap() <= before / 10.0 {
            good += 1;
        }
    }
    assert!(good >= 95, "{good} of {TRIALS}");
}

/// Median relative error after each of `passes` passes, over `trials` instances.
fn pass_medians(alg: Algorithm, k: usize, start: f64, passes: usize, trials: u64) -> Vec<f64> {
    pass_medians_rho(alg, k, 1.0, start, passes, trials)
}

fn pass_medians_rho(alg: Algorithm, k: usize, rho0: f64, start: f64, passes: usize, trials: u64) -> Vec<f64> {
    let (n, m) = (256, 8 * 256);
    let mut per_pass = vec![Vec::new(); passes + 1];
    for t in 0..trials {
        let p = instance(n, m, FieldKind::Real, 2000 + t);
        let z0 = perturb(&p.x, start, t);
        let mut cfg = SolverConfig::new(alg, FieldKind::Real);
        cfg.max_passes = passes;
        cfg.minibatch_k = k;
        cfg.rho0 = rho0;
        cfg.tol = 1e-300;
        cfg.seed = t;
        let tr = run(&p.y, &p.a, &z0, &cfg, Some(&p.x)).unwrap();
        for h in &tr.history {
            per_pass[h.pass_count as usize].push(h.relative_error.unwrap());
        }
    }
    per_pass.into_iter().map(median).collect()
}

#[test]
fn irwf_contracts_geometrically() {
    let med = pass_medians(Algorithm::Irwf, 1, 0.05, 5, TRIALS);
    assert!(med[1] < med[0]);
    assert!(med.windows(2).all(|w| w[1] < w[0]), "{med:?}");
    // Roughly constant ratio from pass to pass.
    let ratios: Vec<f64> = med.windows(2).map(|w| w[1] / w[0]).collect();
    let (lo, hi) = ratios.iter().fold((1.0f64, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi < 1.0 && hi / lo < 3.0, "{ratios:?}");
}

#[test]
fn minibatch_contracts_like_single_samples() {
    // Per-pass log contraction. With rho0 = 1 a single-sample step is close to
    // a full projection, which sequential updates exploit better than a
    // 64-row sum; at smaller matched steps the two agree.
    let rate = |m: &[f64]| (m[0] / m[1]).ln();
    for rho0 in [1.0, 0.5, 0.25] {
        let single = pass_medians_rho(Algorithm::Irwf, 1, rho0, 0.05, 1, 50);
        let batch = pass_medians_rho(Algorithm::MinibatchIrwf, 64, rho0, 0.05, 1, 50);
        assert_eq!(single[0], batch[0]);
        if rho0 < 1.0 {
            assert!(batch[1] <= single[1], "rho0 {rho0}: k=64 {} vs k=1 {}", batch[1], single[1]);
        } else {
            assert!(rate(&batch) >= 0.8 * rate(&single), "k=64 {batch:?} vs k=1 {single:?}");
        }
    }
}

#[test]
fn kaczmarz_contracts_in_basin() {
    let med = pass_medians(Algorithm::KaczmarzPr, 1, 0.1, 1, TRIALS);
    assert!(med[1].powi(2) < med[0].powi(2), "{med:?}");
}

#[test]
fn bounded_noise_plateau() {
    let (n, m) = (256, 8 * 256);
    let p = instance(n, m, FieldKind::Real, 55);
    let z0 = perturb(&p.x, 0.1, 55);
    let plateau = |level: f64| {
        let w = NoiseSpec::bounded_gaussian(m, level * p.x.norm(), 56).unwrap();
        let y = measure(&p.a, &p.x, &w).unwrap();
        let mut cfg = SolverConfig::new(Algorithm::Rwf, FieldKind::Real);
        cfg.max_passes = 300;
        cfg.tol = 1e-300;
        run(&y, &p.a, &z0, &cfg, Some(&p.x)).unwrap().final_relative_error().unwrap()
    };
    let full = plateau(0.01);
    let half = plateau(0.005);
    assert!(full > 0.0 && full <= 10.0 * 0.01, "{full}");
    assert!(half <= 0.5 * full * 1.2, "{half} vs {full}");
}

#[test]
fn sign_disagreement_is_rare_near_truth() {
    let (n, m) = (256, 8 * 256);
    let mut flips = 0usize;
    let trials = 20;
    for t in 0..trials {
        let p = instance(n, m, FieldKind::Real, 3000 + t);
        let z = perturb(&p.x, 0.1, t);
        let ax = p.a.apply(&p.x).unwrap();
        let az = p.a.apply(&z).unwrap();
        flips += real(&ax).iter().zip(real(&az)).filter(|(a, b)| *a * *b < 0.0).count();
    }
    let frac = flips as f64 / (trials as usize * m) as f64;
    // For Gaussian rows the flip probability is angle(x, z) / pi.
    let oracle = (0.1f64).atan() / std::f64::consts::PI;
    assert!(frac < 0.05, "{frac}");
    assert!((frac - oracle).abs() < 0.005, "{frac} vs {oracle}");
}

#[test]
fn complex_runs_converge() {
    let p = instance(64, 6 * 64, FieldKind::Complex, 8);
    let z0 = perturb(&p.x, 0.1, 8).scaled_complex(Complex64::from_polar(1.0, 2.0));
    for alg in Algorithm::ALL {
        let mut cfg = SolverConfig::new(alg, FieldKind::Complex);
        cfg.minibatch_k = 16;
        cfg.tol = 1e-10;
        let tr = run(&p.y, &p.a, &z0, &cfg, Some(&p.x)).unwrap();
        assert_eq!(tr.stop_reason, StopReason::Tol, "{alg:?}");
    }
}

#[test]
fn cdp_runs_converge() {
    let n = 64;
    let a = make_cdp(n, 6, 12).unwrap();
    let x = Signal::gaussian(n, FieldKind::Complex, 12);
    let y = measure(&a, &x, &NoiseSpec::None).unwrap();
    let z0 = perturb(&x, 0.1, 12);
    for alg in [Algorithm::Rwf, Algorithm::MinibatchIrwf, Algorithm::KaczmarzPr, Algorithm::BlockKaczmarzPr] {
        let mut cfg = SolverConfig::new(alg, FieldKind::Complex);
        cfg.minibatch_k = n;
        cfg.tol = 1e-10;
        let tr = run(&y, &a, &z0, &cfg, Some(&x)).unwrap();
        assert_eq!(tr.stop_reason, StopReason::Tol, "{alg:?}");
    }
}
