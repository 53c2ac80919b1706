use ndarray::{Array2, Axis, Zip};
use num_complex::Complex64;
use rayon::prelude::*;

use super::{MethodTag, SharpenedTfr};
use crate::error::{invalid, Result};
use crate::estimators::{EstimatorField, FieldKind};
use crate::stft::{threshold_mask, TfBundle, WindowKind};

/// Frequency squeezing: each masked cell `(t, eta)` adds `S^g(t, eta)` into
/// the bin nearest its IF estimate.
pub fn squeeze_freq(b: &TfBundle, est: &EstimatorField, gamma: f64) -> Result<SharpenedTfr> {
    let tag = match est.kind {
        FieldKind::Omega1 => MethodTag::Fsst,
        FieldKind::Omega2 => MethodTag::Fsst2,
        other => {
            return Err(invalid(format!(
                "frequency squeezing needs an IF estimate, got {other:?}"
            )))
        }
    };
    let sg = b.get(WindowKind::G)?;
    let grid = *b.grid();
    if est.values.dim() != sg.dim() {
        return Err(invalid("estimator field and bundle grids differ"));
    }
    let mask = threshold_mask(sg, gamma)?;
    let mut out = Array2::<Complex64>::zeros(sg.dim());
    let mut dropped = vec![0usize; grid.n_frames];
    Zip::from(out.axis_iter_mut(Axis(0)))
        .and(sg.axis_iter(Axis(0)))
        .and(est.values.axis_iter(Axis(0)))
        .and(mask.cells.axis_iter(Axis(0)))
        .and(&mut dropped)
        .par_for_each(|mut row, src, w, on, drop_count| {
            for k in 0..grid.n_bins {
                if !on[k] {
                    continue;
                }
                match grid.bin_of(w[k]) {
                    Some(target) => row[target] += src[k],
                    None => *drop_count += 1,
                }
            }
        });
    let mut tfr = SharpenedTfr::new(out, grid, tag, mask.lambda).with_param("gamma", gamma);
    tfr.field = Some(est.kind);
    tfr.diagnostics.dropped = dropped.iter().sum();
    tfr.diagnostics.fallbacks = est.fallbacks;
    Ok(tfr)
}

/// Time squeezing: each masked cell `(mu, w)` moves to the frame nearest its
/// group delay. The coefficient is re-referenced to the target frame,
/// `S(mu, w) exp(-j w (mu - t))`, so the standard-convention row sums
/// `sum_t T(t, w) exp(-j w t)` are preserved.
pub fn squeeze_time(b: &TfBundle, gd: &EstimatorField, gamma: f64) -> Result<SharpenedTfr> {
    if gd.kind != FieldKind::Gdelay {
        return Err(invalid(format!(
            "time squeezing needs a group-delay field, got {:?}",
            gd.kind
        )));
    }
    let sg = b.get(WindowKind::G)?;
    let grid = *b.grid();
    if gd.values.dim() != sg.dim() {
        return Err(invalid("estimator field and bundle grids differ"));
    }
    let mask = threshold_mask(sg, gamma)?;
    let columns: Vec<(Vec<Complex64>, usize)> = (0..grid.n_bins)
        .into_par_iter()
        .map(|k| {
            let w = grid.omega(k);
            let mut col = vec![Complex64::new(0.0, 0.0); grid.n_frames];
            let mut dropped = 0;
            for mu in 0..grid.n_frames {
                if !mask.cells[[mu, k]] {
                    continue;
                }
                match grid.frame_of(gd.values[[mu, k]]) {
                    Some(target) => {
                        let shift = (target as f64 - mu as f64) / grid.fs;
                        col[target] += sg[[mu, k]] * Complex64::from_polar(1.0, w * shift);
                    }
                    None => dropped += 1,
                }
            }
            (col, dropped)
        })
        .collect();
    let mut out = Array2::<Complex64>::zeros(sg.dim());
    let mut dropped = 0;
    for (k, (col, d)) in columns.into_iter().enumerate() {
        out.column_mut(k)
            .iter_mut()
            .zip(col)
            .for_each(|(dst, v)| *dst = v);
        dropped += d;
    }
    let mut tfr = SharpenedTfr::new(out, grid, MethodTag::Tsst, mask.lambda).with_param("gamma", gamma);
    tfr.field = Some(FieldKind::Gdelay);
    tfr.diagnostics.dropped = dropped;
    Ok(tfr)
}
