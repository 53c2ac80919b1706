use std::collections::BTreeMap;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Diagnostics, MethodTag, SharpenedTfr};
use crate::error::{invalid, Result};
use crate::estimators::{omega1, residual_slope, EstimatorField, FieldKind};
use crate::stft::{TfBundle, TfGrid, WindowKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    FixedPoint,
    Newton,
    LevenbergMarquardt,
}

impl SolverKind {
    pub fn tag(self) -> MethodTag {
        match self {
            Self::FixedPoint => MethodTag::RmIfFp,
            Self::Newton => MethodTag::RmIfNewton,
            Self::LevenbergMarquardt => MethodTag::RmIfLm,
        }
    }
}

/// Where Newton and LM get `d/dw h` from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeSource {
    /// Central difference on the grid, one-sided next to invalid cells.
    #[default]
    Difference,
    /// Closed form from the window family; needs the `tdg` plane.
    Window,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Fixed-point gain. Defaults to `1/sigma^2` on `H_RE` and `-1` on `H_SET`.
    pub tau: Option<f64>,
    /// LM damping.
    pub rho: f64,
    pub max_iter: usize,
    /// Stop once `|w_{k+1} - w_k| < tol`; defaults to half a bin.
    pub tol: Option<f64>,
    pub slope: SlopeSource,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau: None,
            rho: 1e-6,
            max_iter: 50,
            tol: None,
            slope: SlopeSource::Difference,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(tau) = self.tau {
            if tau == 0.0 || !tau.is_finite() {
                return Err(invalid(format!("tau must be finite and non-zero, got {tau}")));
            }
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(invalid(format!("rho must be positive, got {}", self.rho)));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be at least 1"));
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(invalid(format!("tol must be positive, got {tol}")));
            }
        }
        Ok(())
    }

    pub fn tau_for(&self, kind: FieldKind, grid: &TfGrid) -> f64 {
        self.tau.unwrap_or(match kind {
            FieldKind::HSet => -1.0,
            _ => 1.0 / grid.window.sigma.powi(2),
        })
    }

    pub fn tol_for(&self, grid: &TfGrid) -> f64 {
        self.tol.unwrap_or(grid.d_omega() / 2.0)
    }
}

/// How one cell's iteration ended. `bin` is where its mass is accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellOutcome {
    Converged { bin: usize, iters: usize },
    /// Ran out of iterations.
    MaxIter { bin: usize },
    /// Landed on an invalid cell or hit a degenerate step.
    Stalled { bin: usize, iters: usize },
    /// The next iterate left the frequency axis.
    Dropped { iters: usize },
}

impl CellOutcome {
    pub fn bin(self) -> Option<usize> {
        match self {
            Self::Converged { bin, .. } | Self::MaxIter { bin } | Self::Stalled { bin, .. } => {
                Some(bin)
            }
            Self::Dropped { .. } => None,
        }
    }

    fn iters(self, max_iter: usize) -> usize {
        match self {
            Self::Converged { iters, .. } | Self::Stalled { iters, .. } | Self::Dropped { iters } => {
                iters
            }
            Self::MaxIter { .. } => max_iter,
        }
    }

    fn converged(self) -> bool {
        matches!(self, Self::Converged { .. })
    }
}

trait Step: Sync {
    fn needs_slope(&self) -> bool;
    fn delta(&self, h: f64, slope: Option<f64>) -> Option<f64>;
}

struct FixedPoint {
    tau: f64,
}

impl Step for FixedPoint {
    fn needs_slope(&self) -> bool {
        false
    }

    fn delta(&self, h: f64, _: Option<f64>) -> Option<f64> {
        Some(self.tau * h)
    }
}

struct Newton;

impl Step for Newton {
    fn needs_slope(&self) -> bool {
        true
    }

    fn delta(&self, h: f64, slope: Option<f64>) -> Option<f64> {
        let d = -h / slope?;
        d.is_finite().then_some(d)
    }
}

struct Damped {
    rho: f64,
}

impl Step for Damped {
    fn needs_slope(&self) -> bool {
        true
    }

    fn delta(&self, h: f64, slope: Option<f64>) -> Option<f64> {
        let d = -h / (slope? + self.rho);
        d.is_finite().then_some(d)
    }
}

enum Slopes {
    None,
    Table(Array2<f64>),
    Difference,
}

impl Slopes {
    fn at(&self, h: &EstimatorField, n: usize, k: usize) -> Option<f64> {
        match self {
            Self::None => None,
            Self::Table(t) => Some(t[[n, k]]).filter(|v| v.is_finite()),
            Self::Difference => {
                let dw = h.grid.d_omega();
                let lo = k.checked_sub(1).and_then(|j| h.get(n, j));
                let hi = (k + 1 < h.grid.n_bins).then(|| h.get(n, k + 1)).flatten();
                let mid = h.get(n, k)?;
                match (lo, hi) {
                    (Some(a), Some(c)) => Some((c - a) / (2.0 * dw)),
                    (None, Some(c)) => Some((c - mid) / dw),
                    (Some(a), None) => Some((mid - a) / dw),
                    (None, None) => None,
                }
            }
        }
    }
}

struct Iteration<'a> {
    field: &'a EstimatorField,
    slopes: Slopes,
    rule: Rule<'a>,
    max_iter: usize,
    tol: f64,
    /// Residuals this small count as a root; keeps slope steps off 0/0.
    root_tol: f64,
}

/// Residual magnitude treated as exactly zero, in the field's own units.
fn root_tol(h: &EstimatorField) -> f64 {
    let dw = h.grid.d_omega();
    match h.kind {
        FieldKind::HSet => 1e-9 * dw,
        _ => 1e-9 * h.grid.window.sigma.powi(2) * dw,
    }
}

enum Rule<'a> {
    Residual(&'a dyn Step),
    /// MSST: jump straight to the first-order IF estimate.
    Synchro,
}

impl Iteration<'_> {
    fn run(&self, n: usize, k0: usize, mut visit: impl FnMut(usize)) -> CellOutcome {
        let grid = &self.field.grid;
        let mut k = k0;
        visit(k);
        for it in 1..=self.max_iter {
            let Some(v) = self.field.get(n, k) else {
                return CellOutcome::Stalled { bin: k, iters: it - 1 };
            };
            let target = match &self.rule {
                Rule::Residual(_) if v.abs() <= self.root_tol => {
                    return CellOutcome::Converged { bin: k, iters: it };
                }
                Rule::Residual(step) => {
                    let slope = if step.needs_slope() {
                        self.slopes.at(self.field, n, k)
                    } else {
                        None
                    };
                    let Some(d) = step.delta(v, slope) else {
                        return CellOutcome::Stalled { bin: k, iters: it - 1 };
                    };
                    grid.omega(k) + d
                }
                Rule::Synchro => v,
            };
            let Some(next) = grid.bin_of(target) else {
                return CellOutcome::Dropped { iters: it };
            };
            let moved = (grid.omega(next) - grid.omega(k)).abs();
            k = next;
            visit(k);
            if moved < self.tol {
                return CellOutcome::Converged { bin: k, iters: it };
            }
        }
        CellOutcome::MaxIter { bin: k }
    }

    fn relocate(&self, b: &TfBundle, tag: MethodTag) -> Result<SharpenedTfr> {
        let sg = b.get(WindowKind::G)?;
        if sg.dim() != self.field.values.dim() {
            return Err(invalid("residual field and bundle grids differ"));
        }
        let grid = *b.grid();
        let rows: Vec<(Vec<Complex64>, Diagnostics)> = sg
            .axis_iter(Axis(0))
            .into_par_iter()
            .enumerate()
            .map(|(n, src)| {
                let mut row = vec![Complex64::new(0.0, 0.0); grid.n_bins];
                let mut diag = Diagnostics::default();
                for k in 0..grid.n_bins {
                    if !self.field.valid[[n, k]] {
                        continue;
                    }
                    let outcome = self.run(n, k, |_| {});
                    *diag
                        .iterations
                        .entry(outcome.iters(self.max_iter))
                        .or_insert(0) += 1;
                    match outcome.bin() {
                        Some(target) => row[target] += src[k],
                        None => diag.dropped += 1,
                    }
                    if !outcome.converged() && outcome.bin().is_some() {
                        diag.non_converged += 1;
                    }
                }
                (row, diag)
            })
            .collect();
        let mut out = Array2::<Complex64>::zeros(sg.dim());
        let mut diag = Diagnostics::default();
        for (n, (row, d)) in rows.into_iter().enumerate() {
            out.row_mut(n).iter_mut().zip(row).for_each(|(o, v)| *o = v);
            diag.dropped += d.dropped;
            diag.non_converged += d.non_converged;
            merge(&mut diag.iterations, d.iterations);
        }
        let mut tfr = SharpenedTfr::new(out, grid, tag, self.field.lambda)
            .with_param("max_iter", self.max_iter as f64)
            .with_param("tol", self.tol);
        tfr.field = Some(self.field.kind);
        tfr.diagnostics = diag;
        Ok(tfr)
    }
}

fn merge(into: &mut BTreeMap<usize, usize>, from: BTreeMap<usize, usize>) {
    for (k, v) in from {
        *into.entry(k).or_insert(0) += v;
    }
}

fn build<'a>(
    b: &TfBundle,
    h: &'a EstimatorField,
    cfg: &SolverConfig,
    step: &'a dyn Step,
) -> Result<Iteration<'a>> {
    let slopes = if step.needs_slope() {
        match cfg.slope {
            SlopeSource::Difference => Slopes::Difference,
            SlopeSource::Window => Slopes::Table(residual_slope(b, h)?),
        }
    } else {
        Slopes::None
    };
    Ok(Iteration {
        field: h,
        slopes,
        rule: Rule::Residual(step),
        max_iter: cfg.max_iter,
        tol: cfg.tol_for(&h.grid),
        root_tol: root_tol(h),
    })
}

fn check_residual(h: &EstimatorField) -> Result<()> {
    if !h.kind.is_signed_residual() {
        return Err(invalid(format!(
            "iterative reassignment needs H_RE or H_SET, got {:?}",
            h.kind
        )));
    }
    Ok(())
}

fn make_step(kind: SolverKind, h: &EstimatorField, cfg: &SolverConfig) -> Box<dyn Step> {
    match kind {
        SolverKind::FixedPoint => Box::new(FixedPoint {
            tau: cfg.tau_for(h.kind, &h.grid),
        }),
        SolverKind::Newton => Box::new(Newton),
        SolverKind::LevenbergMarquardt => Box::new(Damped { rho: cfg.rho }),
    }
}

/// Solves `h(t, w) = 0` along frequency from every valid cell and relocates
/// `S^g` to the bin the iteration stops at.
pub fn reassign_iterative(
    b: &TfBundle,
    h: &EstimatorField,
    kind: SolverKind,
    cfg: &SolverConfig,
) -> Result<SharpenedTfr> {
    cfg.validate()?;
    check_residual(h)?;
    let step = make_step(kind, h, cfg);
    let it = build(b, h, cfg, step.as_ref())?;
    let mut tfr = it.relocate(b, kind.tag())?;
    if kind == SolverKind::FixedPoint {
        tfr = tfr.with_param("tau", cfg.tau_for(h.kind, &h.grid));
    }
    if kind == SolverKind::LevenbergMarquardt {
        tfr = tfr.with_param("rho", cfg.rho);
    }
    Ok(tfr)
}

/// Iterates one cell and returns the visited bins (starting bin first).
pub fn trace_cell(
    b: &TfBundle,
    h: &EstimatorField,
    kind: SolverKind,
    cfg: &SolverConfig,
    frame: usize,
    bin: usize,
) -> Result<(Vec<usize>, CellOutcome)> {
    cfg.validate()?;
    check_residual(h)?;
    let (nf, nb) = h.values.dim();
    if frame >= nf || bin >= nb {
        return Err(invalid(format!("cell ({frame}, {bin}) is off the grid")));
    }
    let step = make_step(kind, h, cfg);
    let it = build(b, h, cfg, step.as_ref())?;
    let mut path = Vec::new();
    let outcome = it.run(frame, bin, |k| path.push(k));
    Ok((path, outcome))
}

/// Multi-synchrosqueezing: `n_iters` repeated jumps `w <- w1(t, w)` on the
/// grid, then relocation of `S^g`. Equivalent to the fixed point with
/// `tau = -1` on `H_SET`.
pub fn msst(b: &TfBundle, n_iters: usize, gamma: f64) -> Result<SharpenedTfr> {
    if n_iters == 0 {
        return Err(invalid("msst needs at least one iteration"));
    }
    let w1 = omega1(b, gamma)?;
    let it = Iteration {
        field: &w1,
        slopes: Slopes::None,
        rule: Rule::Synchro,
        max_iter: n_iters,
        tol: w1.grid.d_omega() / 2.0,
        root_tol: 0.0,
    };
    let mut tfr = it.relocate(b, MethodTag::Msst)?.with_param("gamma", gamma);
    tfr.params.remove("tol");
    tfr.params.insert("n_iters".into(), n_iters as f64);
    tfr.params.remove("max_iter");
    Ok(tfr)
}
