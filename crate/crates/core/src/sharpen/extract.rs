use ndarray::{Array2, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{MethodTag, SharpenedTfr};
use crate::error::{invalid, Result};
use crate::estimators::{EstimatorField, FieldKind};
use crate::stft::{TfBundle, WindowKind};

/// Which cells of a residual field count as roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ExtractRule {
    /// Discrete root of the residual.
    ///
    /// Magnitude residuals keep cells with `|h| < abs_tol` that are a strict
    /// local minimum of `|h|` along frequency or along time (invalid
    /// neighbours count as infinitely large). `abs_tol` defaults to
    /// `sigma^2 * dw`, one bin of IF error.
    ///
    /// Signed residuals keep, for every pair of valid frequency neighbours
    /// whose values change sign, the endpoint with the smaller `|h|`. A given
    /// `abs_tol` is applied on top.
    Root { abs_tol: Option<f64> },
    /// Keep every valid cell with `|h| < tol`.
    Threshold { tol: f64 },
}

impl Default for ExtractRule {
    fn default() -> Self {
        Self::Root { abs_tol: None }
    }
}

/// Keeps `S^g` on the residual's root cells and zeroes everything else.
pub fn extract(b: &TfBundle, h: &EstimatorField, rule: ExtractRule) -> Result<SharpenedTfr> {
    if !h.kind.is_residual() {
        return Err(invalid(format!("extraction needs a residual field, got {:?}", h.kind)));
    }
    let sg = b.get(WindowKind::G)?;
    if h.values.dim() != sg.dim() {
        return Err(invalid("residual field and bundle grids differ"));
    }
    let grid = *b.grid();
    let keep = match rule {
        ExtractRule::Threshold { tol } => {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(invalid(format!("threshold must be positive, got {tol}")));
            }
            let mut keep = Array2::from_elem(h.values.dim(), false);
            Zip::from(&mut keep)
                .and(&h.values)
                .and(&h.valid)
                .for_each(|kp, v, ok| *kp = *ok && v.abs() < tol);
            keep
        }
        ExtractRule::Root { abs_tol } => {
            if let Some(tol) = abs_tol {
                if !(tol > 0.0 && tol.is_finite()) {
                    return Err(invalid(format!("root tolerance must be positive, got {tol}")));
                }
            }
            if h.kind.is_signed_residual() {
                sign_change_roots(h, abs_tol.unwrap_or(f64::INFINITY))
            } else {
                let tol = abs_tol.unwrap_or(grid.window.sigma.powi(2) * grid.d_omega());
                local_min_roots(h, tol)
            }
        }
    };
    let mut out = Array2::<Complex64>::zeros(sg.dim());
    Zip::from(&mut out)
        .and(sg)
        .and(&keep)
        .for_each(|o, s, kp| {
            if *kp {
                *o = *s;
            }
        });
    let tag = if h.kind == FieldKind::HSet {
        MethodTag::Set
    } else {
        MethodTag::EtIf
    };
    let mut tfr = SharpenedTfr::new(out, grid, tag, h.lambda);
    tfr.field = Some(h.kind);
    tfr.diagnostics.survivors = keep.iter().filter(|k| **k).count();
    match rule {
        ExtractRule::Threshold { tol } => tfr = tfr.with_param("threshold", tol),
        ExtractRule::Root { abs_tol: Some(t) } => tfr = tfr.with_param("abs_tol", t),
        ExtractRule::Root { abs_tol: None } => {}
    }
    Ok(tfr)
}

fn mag_at(h: &EstimatorField, n: isize, k: isize) -> f64 {
    let (nf, nb) = h.values.dim();
    if n < 0 || k < 0 || n as usize >= nf || k as usize >= nb {
        return f64::INFINITY;
    }
    h.get(n as usize, k as usize).map_or(f64::INFINITY, f64::abs)
}

/// Relative margin a minimum must clear, so that flat stretches of `|h|`
/// (a stationary tone seen along time) do not yield minima from rounding.
const MIN_MARGIN: f64 = 1e-9;

fn local_min_roots(h: &EstimatorField, tol: f64) -> Array2<bool> {
    let mut keep = Array2::from_elem(h.values.dim(), false);
    Zip::indexed(&mut keep).par_for_each(|(n, k), kp| {
        let Some(v) = h.get(n, k) else { return };
        let v = v.abs();
        if v >= tol {
            return;
        }
        let (n, k) = (n as isize, k as isize);
        let along_w = dips(v, |d| mag_at(h, n, k + d));
        let along_t = dips(v, |d| mag_at(h, n + d, k));
        *kp = along_w || along_t;
    });
    keep
}

/// Strict minimum of `v` against its neighbours `at(-1)` and `at(1)`. A root
/// midway between two cells gives a two-cell plateau; its lower cell counts.
fn dips(v: f64, at: impl Fn(isize) -> f64) -> bool {
    let below = |other: f64| v < other * (1.0 - MIN_MARGIN);
    if !below(at(-1)) {
        return false;
    }
    let next = at(1);
    below(next) || (v <= next * (1.0 + MIN_MARGIN) && next < at(2) * (1.0 - MIN_MARGIN))
}

fn sign_change_roots(h: &EstimatorField, tol: f64) -> Array2<bool> {
    let (nf, nb) = h.values.dim();
    let mut keep = Array2::from_elem((nf, nb), false);
    for n in 0..nf {
        for k in 0..nb.saturating_sub(1) {
            let (Some(a), Some(c)) = (h.get(n, k), h.get(n, k + 1)) else {
                continue;
            };
            let crosses = (a <= 0.0 && c >= 0.0) || (a >= 0.0 && c <= 0.0);
            if !crosses {
                continue;
            }
            let pick = if a.abs() <= c.abs() { k } else { k + 1 };
            if h.values[[n, pick]].abs() < tol {
                keep[[n, pick]] = true;
            }
        }
    }
    keep
}
