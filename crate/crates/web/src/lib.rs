//! Browser bindings for the phase retrieval demo page (`www/index.html`).
//!
//! Three operations are exported: the expected loss along a correlation grid,
//! a single recovery trace, and a coded-diffraction image reconstruction. The
//! plain-Rust functions behind them are public so they can be tested natively.

use rwf_core::analysis::{expected_rwf_loss, expected_wf_loss, CorrelationState};
use rwf_core::{
    dist_up_to_phase, make_cdp, make_gaussian, measure, run, spectral_initialize, Algorithm, Complex64, FieldKind,
    InitParams, NoiseSpec, Signal, SolverConfig,
};
use wasm_bindgen::prelude::*;

/// `[rho, expected RWF loss, expected WF loss]` triples, flattened, for
/// `points` values of `rho` on `[-1, 1]` with `||x|| = 1`.
pub fn loss_curve(points: usize, norm_z: f64) -> Result<Vec<f64>, String> {
    if !(2..=2001).contains(&points) {
        return Err("points must be between 2 and 2001".into());
    }
    let mut out = Vec::with_capacity(3 * points);
    for k in 0..points {
        let rho = -1.0 + 2.0 * k as f64 / (points - 1) as f64;
        let s = CorrelationState::new(rho, 1.0, norm_z).map_err(|e| e.to_string())?;
        out.extend([rho, expected_rwf_loss(&s).map_err(|e| e.to_string())?, expected_wf_loss(&s)]);
    }
    Ok(out)
}

/// Relative error after each pass of one recovery from the spectral start.
pub fn trace(n: usize, m_over_n: f64, algorithm: &str, complex: bool, seed: u64, max_passes: usize) -> Result<Vec<f64>, String> {
    if n == 0 || n > 512 || !(1.0..=32.0).contains(&m_over_n) || max_passes > 2000 {
        return Err("need 1 <= n <= 512, 1 <= m/n <= 32 and at most 2000 passes".into());
    }
    let alg = Algorithm::parse(algorithm).map_err(|e| e.to_string())?;
    let field = if complex { FieldKind::Complex } else { FieldKind::Real };
    let a = make_gaussian(n, (m_over_n * n as f64).round() as usize, field, seed).map_err(|e| e.to_string())?;
    let x = Signal::gaussian(n, field, seed);
    let y = measure(&a, &x, &NoiseSpec::None).map_err(|e| e.to_string())?;
    let z0 = spectral_initialize(&y, &a, &InitParams::default(), seed).map_err(|e| e.to_string())?.z0;
    let mut cfg = SolverConfig::new(alg, field);
    cfg.minibatch_k = cfg.minibatch_k.min(n / 2).max(1);
    cfg.max_passes = max_passes;
    cfg.tol = 1e-14;
    cfg.seed = seed;
    let t = run(&y, &a, &z0, &cfg, Some(&x)).map_err(|e| e.to_string())?;
    Ok(t.history.iter().map(|p| p.relative_error.unwrap_or(f64::NAN)).collect())
}

/// Reconstruction of a grayscale image from `masks` coded diffraction patterns.
#[wasm_bindgen]
pub struct ImageResult {
    pixels: Vec<u8>,
    passes: f64,
    error: f64,
}

#[wasm_bindgen]
impl ImageResult {
    /// Recovered intensities, row-major, after undoing the global phase.
    #[wasm_bindgen(getter)]
    pub fn pixels(&self) -> Vec<u8> {
        self.pixels.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn passes(&self) -> f64 {
        self.passes
    }

    /// Relative error up to global phase.
    #[wasm_bindgen(getter)]
    pub fn error(&self) -> f64 {
        self.error
    }
}

impl ImageResult {
    pub fn pixel_slice(&self) -> &[u8] {
        &self.pixels
    }
}

pub fn reconstruct(pixels: &[u8], masks: usize, seed: u64, max_passes: usize) -> Result<ImageResult, String> {
    let n = pixels.len();
    if n == 0 || n > 128 * 128 || masks == 0 || masks > 32 {
        return Err("need 1 to 16384 pixels and 1 to 32 masks".into());
    }
    let x = Signal::complex(pixels.iter().map(|&p| Complex64::new(p as f64 / 255.0, 0.0)).collect()).map_err(|e| e.to_string())?;
    if x.norm() == 0.0 {
        return Ok(ImageResult { pixels: vec![0; n], passes: 0.0, error: 0.0 });
    }
    let a = make_cdp(n, masks, seed).map_err(|e| e.to_string())?;
    let y = measure(&a, &x, &NoiseSpec::None).map_err(|e| e.to_string())?;
    let z0 = spectral_initialize(&y, &a, &InitParams::default(), seed).map_err(|e| e.to_string())?.z0;
    let mut cfg = SolverConfig::new(Algorithm::Rwf, FieldKind::Complex);
    cfg.max_passes = max_passes;
    cfg.tol = 1e-10;
    let t = run(&y, &a, &z0, &cfg, Some(&x)).map_err(|e| e.to_string())?;
    let z = t.iterate.as_complex().unwrap();
    let c: Complex64 = z.iter().zip(x.as_complex().unwrap()).map(|(zi, xi)| zi.conj() * xi).sum();
    let phase = c / c.norm();
    let out = z.iter().map(|zi| ((zi * phase).re.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    let error = dist_up_to_phase(&t.iterate, &x).map_err(|e| e.to_string())? / x.norm();
    Ok(ImageResult { pixels: out, passes: t.passes_used, error })
}

/// Synthetic `size x size` test card: a soft disc, a ring and a ramp.
pub fn test_card(size: usize) -> Vec<u8> {
    let s = size as f64;
    let mut out = Vec::with_capacity(size * size);
    for i in 0..size {
        for j in 0..size {
            let (u, v) = ((i as f64 + 0.5) / s - 0.5, (j as f64 + 0.5) / s - 0.5);
            let r = (u * u + v * v).sqrt();
            let val = 0.6 * (-(r / 0.18).powi(2)).exp() + 0.5 * (-((r - 0.36) / 0.03).powi(2)).exp() + 0.25 * (u + v + 1.0);
            out.push((val.min(1.0) * 255.0).round() as u8);
        }
    }
    out
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen(js_name = lossCurve)]
pub fn loss_curve_js(points: usize, norm_z: f64) -> Result<Vec<f64>, JsError> {
    loss_curve(points, norm_z).map_err(js)
}

#[wasm_bindgen(js_name = recoveryTrace)]
pub fn trace_js(n: usize, m_over_n: f64, algorithm: &str, complex: bool, seed: u32, max_passes: usize) -> Result<Vec<f64>, JsError> {
    trace(n, m_over_n, algorithm, complex, seed as u64, max_passes).map_err(js)
}

#[wasm_bindgen(js_name = testCard)]
pub fn test_card_js(size: usize) -> Vec<u8> {
    test_card(size.min(128))
}

#[wasm_bindgen(js_name = reconstructImage)]
pub fn reconstruct_js(pixels: &[u8], masks: usize, seed: u32, max_passes: usize) -> Result<ImageResult, JsError> {
    reconstruct(pixels, masks, seed as u64, max_passes).map_err(js)
}
