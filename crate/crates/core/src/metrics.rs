//! Concentration, ridge accuracy and energy bookkeeping for TF outputs.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sharpen::{EnergyBehavior, SharpenedTfr};
use crate::signal::{ComponentDescriptor, ComponentKind};
use crate::stft::{Mask, TfGrid, TfMatrix};

pub const DEFAULT_ALPHA: f64 = 3.0;

/// Renyi entropy in bits of the distribution `p = m / sum m`, where `m` is
/// the magnitude matrix as given (pass `|S|^2` for a spectrogram).
pub fn renyi_entropy(mags: ArrayView2<f64>, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) || alpha == 1.0 {
        return Err(invalid(format!("alpha must be positive and not 1, got {alpha}")));
    }
    if mags.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
        return Err(invalid("magnitudes must be finite and non-negative"));
    }
    // Normalise by the peak first so the power cannot overflow or underflow.
    let peak = mags.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(invalid("entropy of an all-zero matrix"));
    }
    let total: f64 = mags.iter().map(|m| m / peak).sum();
    let sum_pa: f64 = mags
        .iter()
        .map(|m| (m / peak / total).powf(alpha))
        .sum();
    Ok(sum_pa.log2() / (1.0 - alpha))
}

pub fn renyi_of(tfr: &TfMatrix, alpha: f64) -> Result<f64> {
    let mags: Array2<f64> = tfr.mapv(|z| z.norm());
    renyi_entropy(mags.view(), alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RidgeOptions {
    /// Half-width of the search corridor around a frequency ridge, in bins.
    pub corridor_bins: usize,
    /// Half-width of the search corridor around a time ridge, in frames.
    pub corridor_frames: usize,
    /// Frequency ridges are not scored in frames this close to an impulse.
    /// `None` means the window half-length, i.e. frames whose analysis
    /// window contains the impulse.
    pub impulse_guard: Option<usize>,
}

impl Default for RidgeOptions {
    fn default() -> Self {
        Self {
            corridor_bins: 10,
            corridor_frames: 10,
            impulse_guard: None,
        }
    }
}

/// Score of one component against its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentScore {
    pub kind: ComponentKind,
    /// Position in the descriptor list.
    pub index: usize,
    /// Mean `|argmax - truth|` in bins (frequency ridges) or frames (time
    /// ridges), `None` when no line had energy in its corridor.
    pub mean_error: Option<f64>,
    pub max_error: Option<f64>,
    /// Lines whose corridor held energy.
    pub scored: usize,
    /// Lines whose corridor was empty.
    pub empty: usize,
}

impl ComponentScore {
    /// Fraction of eligible lines with any energy in the corridor.
    pub fn coverage(&self) -> f64 {
        let total = self.scored + self.empty;
        if total == 0 {
            0.0
        } else {
            self.scored as f64 / total as f64
        }
    }
}

struct Accum {
    sum: f64,
    max: f64,
    scored: usize,
    empty: usize,
}

impl Accum {
    fn new() -> Self {
        Self { sum: 0.0, max: 0.0, scored: 0, empty: 0 }
    }

    /// Argmax of `values` over `lo..=hi`, scored against `truth`.
    fn line(&mut self, values: impl Fn(usize) -> f64, lo: usize, hi: usize, truth: f64) {
        let mut best = (0.0, lo);
        for i in lo..=hi {
            let v = values(i);
            if v > best.0 {
                best = (v, i);
            }
        }
        if best.0 > 0.0 {
            let err = (best.1 as f64 - truth).abs();
            self.sum += err;
            self.max = self.max.max(err);
            self.scored += 1;
        } else {
            self.empty += 1;
        }
    }

    fn finish(self, kind: ComponentKind, index: usize) -> ComponentScore {
        if self.empty > 0 && self.scored == 0 {
            log::warn!("component {index} ({kind:?}): every corridor is empty");
        }
        ComponentScore {
            kind,
            index,
            mean_error: (self.scored > 0).then(|| self.sum / self.scored as f64),
            max_error: (self.scored > 0).then_some(self.max),
            scored: self.scored,
            empty: self.empty,
        }
    }
}

fn corridor(center: f64, half: usize, len: usize) -> Option<(usize, usize)> {
    if !(center >= -0.5 && center < len as f64 - 0.5) {
        return None;
    }
    let c = (center + 0.5).floor() as usize;
    Some((c.saturating_sub(half), (c + half).min(len - 1)))
}

/// Per-component localisation error of the argmax of `|tfr|`.
///
/// Frequency ridges (LFM, cosine FM) are scored per interior frame, time
/// ridges (impulse, LGD) per bin. Components the grid cannot see are
/// returned with zero lines.
pub fn ridge_error(
    tfr: &TfMatrix,
    grid: &TfGrid,
    descriptors: &[ComponentDescriptor],
    opts: &RidgeOptions,
) -> Vec<ComponentScore> {
    let mags = tfr.mapv(|z| z.norm());
    let guard = opts
        .impulse_guard
        .unwrap_or_else(|| grid.window.half_len(grid.fs)) as f64;
    let impulse_frames: Vec<f64> = descriptors
        .iter()
        .filter_map(|d| d.impulse_time())
        .map(|t| (t - grid.t0) * grid.fs)
        .collect();
    let dw = grid.d_omega();
    descriptors
        .iter()
        .enumerate()
        .map(|(index, d)| {
            let mut acc = Accum::new();
            match d.kind() {
                ComponentKind::Lfm | ComponentKind::CosFm => {
                    for n in grid.interior_frames() {
                        if impulse_frames.iter().any(|f| (n as f64 - f).abs() <= guard) {
                            continue;
                        }
                        let Some(w) = d.instantaneous_frequency(grid.time(n)) else {
                            continue;
                        };
                        let truth = w / dw;
                        if let Some((lo, hi)) = corridor(truth, opts.corridor_bins, grid.n_bins) {
                            acc.line(|k| mags[[n, k]], lo, hi, truth);
                        }
                    }
                }
                ComponentKind::Impulse => {
                    let t = d.impulse_time().expect("impulse");
                    let truth = (t - grid.t0) * grid.fs;
                    if let Some((lo, hi)) = corridor(truth, opts.corridor_frames, grid.n_frames) {
                        for k in 0..grid.n_bins {
                            acc.line(|n| mags[[n, k]], lo, hi, truth);
                        }
                    }
                }
                ComponentKind::Lgd => {
                    for k in 0..grid.n_bins {
                        let Some(t) = d.group_delay(grid.omega(k)) else {
                            continue;
                        };
                        let truth = (t - grid.t0) * grid.fs;
                        if let Some((lo, hi)) = corridor(truth, opts.corridor_frames, grid.n_frames)
                        {
                            acc.line(|n| mags[[n, k]], lo, hi, truth);
                        }
                    }
                }
            }
            acc.finish(d.kind(), index)
        })
        .collect()
}

/// Worst mean error over the scored components.
pub fn worst_error(scores: &[ComponentScore]) -> Option<f64> {
    scores
        .iter()
        .filter_map(|s| s.mean_error)
        .fold(None, |acc, e| Some(acc.map_or(e, |a: f64| a.max(e))))
}

fn line_sums(
    m: &TfMatrix,
    keep: impl Fn(usize, usize) -> bool,
    grid: &TfGrid,
    behavior: EnergyBehavior,
) -> Vec<(Complex64, f64)> {
    let (nf, nb) = m.dim();
    match behavior {
        EnergyBehavior::TimeRelocation => (0..nb)
            .map(|k| {
                let w = grid.omega(k);
                let mut s = Complex64::new(0.0, 0.0);
                let mut a = 0.0;
                for n in 0..nf {
                    if keep(n, k) {
                        let z = m[[n, k]];
                        s += z * Complex64::from_polar(1.0, -w * n as f64 / grid.fs);
                        a += z.norm();
                    }
                }
                (s, a)
            })
            .collect(),
        _ => (0..nf)
            .map(|n| {
                let mut s = Complex64::new(0.0, 0.0);
                let mut a = 0.0;
                for k in 0..nb {
                    if keep(n, k) {
                        s += m[[n, k]];
                        a += m[[n, k]].norm();
                    }
                }
                (s, a)
            })
            .collect(),
    }
}

/// Output-to-input ratio of masked TF mass.
///
/// Extraction and identity compare squared magnitudes. Relocation methods
/// move complex values, so they compare the magnitudes of the conserved line
/// sums (per frame for frequency moves, per bin and demodulated for time
/// moves); the ratio is 1 unless cells were dropped.
pub fn energy_ratio(out: &SharpenedTfr, source: &TfMatrix, mask: &Mask) -> Result<f64> {
    if out.values.dim() != source.dim() || mask.cells.dim() != source.dim() {
        return Err(invalid("output, source and mask shapes differ"));
    }
    let behavior = out.method.energy_behavior();
    let ratio = match behavior {
        EnergyBehavior::Identity | EnergyBehavior::Extraction => {
            let num: f64 = match behavior {
                EnergyBehavior::Identity => out
                    .values
                    .indexed_iter()
                    .filter(|((n, k), _)| mask.cells[[*n, *k]])
                    .map(|(_, z)| z.norm_sqr())
                    .sum(),
                _ => out.values.iter().map(|z| z.norm_sqr()).sum(),
            };
            let den: f64 = source
                .indexed_iter()
                .filter(|((n, k), _)| mask.cells[[*n, *k]])
                .map(|(_, z)| z.norm_sqr())
                .sum();
            num / den
        }
        _ => {
            let a = line_sums(&out.values, |_, _| true, &out.grid, behavior);
            let b = line_sums(source, |n, k| mask.cells[[n, k]], &out.grid, behavior);
            let num: f64 = a.iter().map(|(s, _)| s.norm()).sum();
            let den: f64 = b.iter().map(|(s, _)| s.norm()).sum();
            num / den
        }
    };
    if ratio.is_finite() {
        Ok(ratio)
    } else {
        Err(invalid("energy ratio undefined on an empty mask"))
    }
}

/// Largest per-line violation of the relocation invariant,
/// `|sum out - sum masked source| / sum |masked source|`, over the lines
/// listed by `lines` (frames, or bins for time relocation).
pub fn line_sum_discrepancy(
    out: &SharpenedTfr,
    source: &TfMatrix,
    mask: &Mask,
    lines: impl IntoIterator<Item = usize>,
) -> f64 {
    let behavior = out.method.energy_behavior();
    let a = line_sums(&out.values, |_, _| true, &out.grid, behavior);
    let b = line_sums(source, |n, k| mask.cells[[n, k]], &out.grid, behavior);
    lines
        .into_iter()
        .filter(|i| b[*i].1 > 0.0)
        .map(|i| (a[i].0 - b[i].0).norm() / b[i].1)
        .fold(0.0, f64::max)
}
