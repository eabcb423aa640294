//! Run configuration: `key = value` files with command-line overrides.

use std::path::{Path, PathBuf};

use crate::diagnostics::Quantity;
use crate::error::{Error, Result};
use crate::semidiscrete::{KernelPath, SurfaceFlux};
use crate::simulation::Quadrature;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: String,
    pub degree: usize,
    /// Resolution multiplier applied to the case's element aspect.
    pub resolution: Option<usize>,
    /// Explicit element counts; overrides `resolution`.
    pub elements: Option<Vec<usize>>,
    pub quadrature: Quadrature,
    pub flux: SurfaceFlux,
    pub relaxation: bool,
    pub cfl: Option<f64>,
    pub t_end: Option<f64>,
    pub warp: Option<bool>,
    pub out: Option<PathBuf>,
    /// Simulated time between snapshots.
    pub output_every: Option<f64>,
    pub max_steps: Option<usize>,
    pub adaptive_dt: bool,
    /// Print a progress line every this many steps; 0 disables.
    pub progress_every: usize,
    pub kernel: KernelPath,
    pub relaxation_tol: f64,
    pub relaxation_max_iter: usize,
    pub seed: u64,
    /// Refinement levels for convergence studies.
    pub levels: usize,
    pub quantities: Option<Vec<Quantity>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            case: "sod".into(),
            degree: 4,
            resolution: None,
            elements: None,
            quadrature: Quadrature::Lgl,
            flux: SurfaceFlux::Es,
            relaxation: false,
            cfl: None,
            t_end: None,
            warp: None,
            out: None,
            output_every: None,
            max_steps: None,
            adaptive_dt: false,
            progress_every: 100,
            kernel: KernelPath::Auto,
            relaxation_tol: 1e-14,
            relaxation_max_iter: 100,
            seed: 0,
            levels: 3,
            quantities: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean '{value}' for '{key}'"))),
    }
}

/// `"32"` or `"25x3"`.
pub fn parse_elements(value: &str) -> Result<Vec<usize>> {
    value
        .split('x')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&k| k > 0)
                .ok_or_else(|| Error::Config(format!("invalid element count '{value}'")))
        })
        .collect()
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let k = key.as_str();
        match k {
            "case" => self.case = value.to_string(),
            "degree" => self.degree = parse(k, value)?,
            "resolution" => self.resolution = Some(parse(k, value)?),
            "elements" => self.elements = Some(parse_elements(value)?),
            "quadrature" => self.quadrature = value.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            "flux" => self.flux = value.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            "relaxation" => self.relaxation = parse_bool(k, value)?,
            "cfl" => self.cfl = Some(parse(k, value)?),
            "t_end" => self.t_end = Some(parse(k, value)?),
            "warp" => self.warp = Some(parse_bool(k, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "output_every" => self.output_every = Some(parse(k, value)?),
            "max_steps" => self.max_steps = Some(parse(k, value)?),
            "adaptive_dt" => self.adaptive_dt = parse_bool(k, value)?,
            "progress_every" => self.progress_every = parse(k, value)?,
            "kernel" => {
                self.kernel = match value {
                    "auto" => KernelPath::Auto,
                    "general" => KernelPath::General,
                    _ => return Err(Error::Config(format!("invalid kernel '{value}', expected auto or general"))),
                }
            }
            "relaxation_tol" => self.relaxation_tol = parse(k, value)?,
            "relaxation_max_iter" => self.relaxation_max_iter = parse(k, value)?,
            "seed" => self.seed = parse(k, value)?,
            "levels" => self.levels = parse(k, value)?,
            "quantities" => {
                self.quantities = Some(
                    value
                        .split(',')
                        .map(|v| v.trim().parse().map_err(|e: Error| Error::Config(e.to_string())))
                        .collect::<Result<_>>()?,
                )
            }
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Apply `key = value` lines; `#` starts a comment.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut c = Self::default();
        c.apply_str(&std::fs::read_to_string(path)?)?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree == 0 {
            return Err(Error::Config("degree must be at least 1".into()));
        }
        if let Some(c) = self.cfl {
            if !(c > 0.0) {
                return Err(Error::Config(format!("cfl must be positive, got {c}")));
            }
        }
        if let Some(t) = self.output_every {
            if !(t > 0.0) {
                return Err(Error::Config(format!("output_every must be positive, got {t}")));
            }
        }
        if self.levels == 0 {
            return Err(Error::Config("levels must be at least 1".into()));
        }
        Ok(())
    }
}
