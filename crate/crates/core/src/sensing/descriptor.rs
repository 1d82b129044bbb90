use std::fmt;

use crate::error::{Error, Result};
use crate::signal::FieldKind;

use super::{make_cdp, make_gaussian, Ensemble, EnsembleKind};

/// Everything needed to rebuild a seeded ensemble. `size` is `m` for the
/// Gaussian kinds and the mask count `L` for CDP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleDescriptor {
    pub kind: EnsembleKind,
    pub n: usize,
    pub size: usize,
    pub seed: u64,
}

impl EnsembleDescriptor {
    pub fn build(&self) -> Result<Ensemble> {
        match self.kind {
            EnsembleKind::GaussianReal => make_gaussian(self.n, self.size, FieldKind::Real, self.seed),
            EnsembleKind::GaussianComplex => make_gaussian(self.n, self.size, FieldKind::Complex, self.seed),
            EnsembleKind::Cdp => make_cdp(self.n, self.size, self.seed),
        }
    }

    /// Parses the `key = value` block written by `Display`. Keys are
    /// `ensemble.kind`, `ensemble.n`, `ensemble.m` (or `ensemble.l`) and
    /// `ensemble.seed`; other lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let (mut kind, mut n, mut size, mut seed) = (None, None, None, None);
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            let Some((k, v)) = line.split_once('=') else { continue };
            let (k, v) = (k.trim(), v.trim());
            let int = |v: &str| v.parse::<u64>().map_err(|_| Error::Format(format!("bad integer for {k}: {v}")));
            match k {
                "ensemble.kind" => {
                    kind = Some(match v {
                        "gaussian_real" => EnsembleKind::GaussianReal,
                        "gaussian_complex" => EnsembleKind::GaussianComplex,
                        "cdp" => EnsembleKind::Cdp,
                        other => return Err(Error::Format(format!("unknown ensemble kind {other}"))),
                    })
                }
                "ensemble.n" => n = Some(int(v)? as usize),
                "ensemble.m" | "ensemble.l" => size = Some(int(v)? as usize),
                "ensemble.seed" => seed = Some(int(v)?),
                _ => {}
            }
        }
        let missing = |what: &str| Error::Format(format!("ensemble descriptor lacks {what}"));
        Ok(EnsembleDescriptor {
            kind: kind.ok_or_else(|| missing("ensemble.kind"))?,
            n: n.ok_or_else(|| missing("ensemble.n"))?,
            size: size.ok_or_else(|| missing("ensemble.m / ensemble.l"))?,
            seed: seed.ok_or_else(|| missing("ensemble.seed"))?,
        })
    }
}

impl fmt::Display for EnsembleDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, size_key) = match self.kind {
            EnsembleKind::GaussianReal => ("gaussian_real", "m"),
            EnsembleKind::GaussianComplex => ("gaussian_complex", "m"),
            EnsembleKind::Cdp => ("cdp", "l"),
        };
        writeln!(f, "ensemble.kind = {kind}")?;
        writeln!(f, "ensemble.n = {}", self.n)?;
        writeln!(f, "ensemble.{size_key} = {}", self.size)?;
        writeln!(f, "ensemble.seed = {}", self.seed)
    }
}
