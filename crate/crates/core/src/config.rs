//! Run configuration, stored as TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::{FieldKind, DEFAULT_DEGENERACY_TOL};
use crate::metrics::{RidgeOptions, DEFAULT_ALPHA};
use crate::sharpen::SolverConfig;
use crate::stft::WindowSpec;

/// Tolerances of the extraction methods. `None` picks the grid-derived default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    /// Bound on `|h|` for magnitude-residual roots, s.
    pub abs_tol: Option<f64>,
    /// SET keeps cells with `|w - w1| < set_tol`, rad/s; half a bin by default.
    pub set_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Registry name of the method, see [`crate::methods::MethodRegistry`].
    pub method: String,
    /// Gaussian window width, s.
    pub sigma: f64,
    /// Window support in multiples of sigma.
    pub trunc_radius: f64,
    pub n_fft: Option<usize>,
    /// Mask threshold relative to `max |S^g|`.
    pub gamma: f64,
    pub degeneracy_tol: f64,
    pub solver: SolverConfig,
    /// Residual driving the `rm-if-*` methods: `H_RE` or `H_SET`.
    pub rm_residual: FieldKind,
    pub extract: ExtractConfig,
    pub msst_iters: usize,
    pub multires_sigmas: Vec<f64>,
    pub alpha: f64,
    pub ridge: RidgeOptions,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: "fsst".into(),
            sigma: 0.02,
            trunc_radius: WindowSpec::DEFAULT_TRUNC_RADIUS,
            n_fft: None,
            gamma: 0.01,
            degeneracy_tol: DEFAULT_DEGENERACY_TOL,
            solver: SolverConfig::default(),
            rm_residual: FieldKind::HRe,
            extract: ExtractConfig::default(),
            msst_iters: 3,
            multires_sigmas: vec![0.015, 0.025],
            alpha: DEFAULT_ALPHA,
            ridge: RidgeOptions::default(),
            seed: 0,
            input: None,
            output: None,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn window(&self) -> Result<WindowSpec> {
        WindowSpec::new(self.sigma, self.trunc_radius)
    }

    pub fn validate(&self) -> Result<()> {
        self.window()?;
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if self.n_fft == Some(0) {
            return Err(invalid("n_fft must be positive"));
        }
        positive("degeneracy_tol", self.degeneracy_tol)?;
        self.solver.validate()?;
        if !self.rm_residual.is_signed_residual() {
            return Err(invalid(format!(
                "rm_residual must be H_RE or H_SET, got {:?}",
                self.rm_residual
            )));
        }
        if let Some(t) = self.extract.abs_tol {
            positive("extract.abs_tol", t)?;
        }
        if let Some(t) = self.extract.set_tol {
            positive("extract.set_tol", t)?;
        }
        if self.msst_iters == 0 {
            return Err(invalid("msst_iters must be at least 1"));
        }
        if self.multires_sigmas.len() < 2 {
            return Err(invalid("multires_sigmas needs at least two widths"));
        }
        for s in &self.multires_sigmas {
            positive("multires sigma", *s)?;
        }
        positive("alpha", self.alpha)?;
        if self.alpha == 1.0 {
            return Err(invalid("alpha must not be 1"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Parse {
                path: path.to_path_buf(),
                msg,
            },
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}
