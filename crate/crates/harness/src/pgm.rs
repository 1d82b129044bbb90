//! Plain (ASCII, `P2`) portable graymap I/O.

use std::fs;
use std::path::Path;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Row-major samples in `0..=maxval`.
    pub pixels: Vec<u16>,
}

impl GrayImage {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: &str| HarnessError::Runtime(format!("invalid PGM: {msg}"));
        let mut tokens = text.lines().map(|l| l.split('#').next().unwrap_or("")).flat_map(str::split_whitespace);
        if tokens.next() != Some("P2") {
            return Err(bad("expected plain 'P2' magic"));
        }
        let mut num = |what: &str| -> Result<usize> {
            tokens.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad(&format!("missing or invalid {what}")))
        };
        let (width, height, maxval) = (num("width")?, num("height")?, num("maxval")?);
        if width == 0 || height == 0 || maxval == 0 || maxval > u16::MAX as usize {
            return Err(bad("dimensions and maxval must be positive, maxval at most 65535"));
        }
        let mut pixels = Vec::with_capacity(width * height);
        for _ in 0..width * height {
            let v = num("sample")?;
            if v > maxval {
                return Err(bad(&format!("sample {v} exceeds maxval {maxval}")));
            }
            pixels.push(v as u16);
        }
        Ok(GrayImage { width, height, maxval: maxval as u16, pixels })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Runtime(format!("cannot read image {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_plain(&self) -> String {
        let mut out = format!("P2\n{} {}\n{}\n", self.width, self.height, self.maxval);
        for row in self.pixels.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_plain())?;
        Ok(())
    }

    /// Samples scaled to `[0, 1]`.
    pub fn to_unit(&self) -> Vec<f64> {
        self.pixels.iter().map(|&v| v as f64 / self.maxval as f64).collect()
    }

    /// Rounds `[0, 1]` intensities (clamped) to an 8-bit image.
    pub fn from_unit(width: usize, height: usize, values: &[f64]) -> Self {
        let pixels = values.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u16).collect();
        GrayImage { width, height, maxval: 255, pixels }
    }

    /// Deterministic test card: a smooth disc, a ring and a diagonal ramp.
    pub fn synthetic(size: usize) -> Self {
        let s = size as f64;
        let mut values = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                let (u, v) = ((i as f64 + 0.5) / s - 0.5, (j as f64 + 0.5) / s - 0.5);
                let r = (u * u + v * v).sqrt();
                let disc = (-(r / 0.18).powi(2)).exp();
                let ring = (-((r - 0.36) / 0.03).powi(2)).exp();
                let ramp = 0.25 * (u + v + 1.0);
                values.push((0.6 * disc + 0.5 * ring + ramp).min(1.0));
            }
        }
        Self::from_unit(size, size, &values)
    }
}
