//! Instantaneous-frequency / group-delay estimators and IF-equation residuals.
//!
//! Every field is defined only on the threshold mask; elsewhere it is marked
//! invalid and stored as NaN, so a zero value always means a genuine root.
//!
//! With `p = S^{tg}/S^g` and `r = S^{g'}/S^g` the estimators reduce to
//! frame-local ratios in which the large `w` terms cancel:
//!
//! * `w1 = w - Im r`
//! * `d/dt(d/dt S / S) = S^{g''}/S^g - r^2`
//! * `j - d/dt(d/dw S / S) = -j (S^{tg'}/S^g - p r)`
//! * `t_hat = t + Re p`, `|d/dw S / S| = |p|`, `Re(d/dw S / S) = Im p`

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::signal::Signal;
use crate::stft::{stft_bundle_kinds, threshold_mask, Mask, TfBundle, TfGrid, WindowKind, WindowSpec};

/// Relative tolerance for the second-order estimator's branch switch.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FieldKind {
    /// First-order IF estimate, rad/s.
    Omega1,
    /// Second-order IF estimate, rad/s.
    Omega2,
    /// Group delay estimate, s.
    Gdelay,
    /// `|S^{tg} / S^g|`, s.
    HMag,
    /// `Re{(d/dw S) / S}`, s.
    HRe,
    /// `w - w1`, rad/s.
    HSet,
    /// Geometric mean of `|S^{tg_i} / S^{g_i}|` over several widths, s.
    HMultires,
}

impl FieldKind {
    pub fn unit(self) -> &'static str {
        match self {
            Self::Omega1 | Self::Omega2 | Self::HSet => "rad/s",
            Self::Gdelay | Self::HMag | Self::HRe | Self::HMultires => "s",
        }
    }

    /// Residuals whose sign changes across a root.
    pub fn is_signed_residual(self) -> bool {
        matches!(self, Self::HRe | Self::HSet)
    }

    pub fn is_residual(self) -> bool {
        matches!(self, Self::HMag | Self::HRe | Self::HSet | Self::HMultires)
    }
}

/// Real-valued field on a TF grid with its validity mask.
#[derive(Debug, Clone)]
pub struct EstimatorField {
    pub kind: FieldKind,
    pub grid: TfGrid,
    /// NaN wherever `valid` is false.
    pub values: Array2<f64>,
    pub valid: Array2<bool>,
    /// Absolute threshold of the mask the field was computed on.
    pub lambda: f64,
    /// Cells where the second-order estimator fell back to the first order.
    pub fallbacks: usize,
}

impl EstimatorField {
    pub fn get(&self, frame: usize, bin: usize) -> Option<f64> {
        self.valid[[frame, bin]].then(|| self.values[[frame, bin]])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    fn from_values(kind: FieldKind, grid: TfGrid, values: Array2<f64>, lambda: f64) -> Self {
        let valid = values.mapv(f64::is_finite);
        Self {
            kind,
            grid,
            values,
            valid,
            lambda,
            fallbacks: 0,
        }
    }
}

fn planes<'a>(b: &'a TfBundle, kinds: &[WindowKind]) -> Result<Vec<&'a Array2<Complex64>>> {
    kinds.iter().map(|k| b.get(*k)).collect()
}

fn mask_of(b: &TfBundle, gamma: f64) -> Result<Mask> {
    threshold_mask(b.get(WindowKind::G)?, gamma)
}

pub fn omega1(b: &TfBundle, gamma: f64) -> Result<EstimatorField> {
    let mask = mask_of(b, gamma)?;
    omega1_on(b, &mask)
}

pub fn omega1_on(b: &TfBundle, mask: &Mask) -> Result<EstimatorField> {
    let p = planes(b, &[WindowKind::G, WindowKind::Dg])?;
    let grid = *b.grid();
    let mut values = Array2::from_elem(p[0].dim(), f64::NAN);
    Zip::indexed(&mut values)
        .and(p[0])
        .and(p[1])
        .and(&mask.cells)
        .par_for_each(|(_, k), v, s, sdg, on| {
            if *on && s.norm() > 0.0 {
                *v = grid.omega(k) - (sdg / s).im;
            }
        });
    Ok(EstimatorField::from_values(FieldKind::Omega1, grid, values, mask.lambda))
}

/// Second-order IF estimate with the chirp-rate correction `q`.
pub fn omega2(b: &TfBundle, gamma: f64, degeneracy_tol: f64) -> Result<EstimatorField> {
    let mask = mask_of(b, gamma)?;
    omega2_on(b, &mask, degeneracy_tol)
}

pub fn omega2_on(b: &TfBundle, mask: &Mask, degeneracy_tol: f64) -> Result<EstimatorField> {
    if !(degeneracy_tol >= 0.0) {
        return Err(invalid("degeneracy tolerance must be non-negative"));
    }
    let p = planes(
        b,
        &[
            WindowKind::G,
            WindowKind::Dg,
            WindowKind::Ddg,
            WindowKind::Tg,
            WindowKind::Tdg,
        ],
    )?;
    let grid = *b.grid();
    let mut values = Array2::from_elem(p[0].dim(), f64::NAN);
    let mut fell_back = Array2::from_elem(p[0].dim(), false);
    Zip::indexed(&mut values)
        .and(&mut fell_back)
        .and(&mask.cells)
        .par_for_each(|(n, k), v, fb, on| {
            let s = p[0][[n, k]];
            if !*on || s.norm() == 0.0 {
                return;
            }
            let r = p[1][[n, k]] / s;
            let ratio_ddg = p[2][[n, k]] / s;
            let ptg = p[3][[n, k]] / s;
            let ratio_tdg = p[4][[n, k]] / s;
            let w1 = grid.omega(k) - r.im;
            // d/dt(d/dw S / S) = j (1 + S^{tg'}/S - p r)
            let b_term = Complex64::i() * (1.0 + ratio_tdg - ptg * r);
            let den = -Complex64::i() * (ratio_tdg - ptg * r);
            if den.norm() < degeneracy_tol * (1.0 + b_term.norm()) {
                *v = w1;
                *fb = true;
                return;
            }
            let q = (ratio_ddg - r * r) / den;
            // d/dw S / (j S) = -p
            *v = w1 + (-(q * ptg)).re;
        });
    let mut field = EstimatorField::from_values(FieldKind::Omega2, grid, values, mask.lambda);
    field.fallbacks = fell_back.iter().filter(|b| **b).count();
    Ok(field)
}

/// Time-reassignment operator `t + Re{S^{tg} / S^g}`.
pub fn group_delay(b: &TfBundle, gamma: f64) -> Result<EstimatorField> {
    let mask = mask_of(b, gamma)?;
    tg_ratio_field(b, &mask, FieldKind::Gdelay, |grid, n, _k, p| grid.time(n) + p.re)
}

/// `|S^{tg} / S^g|`: vanishes on chirp ridges, impulse columns and LGD curves.
pub fn h_mag(b: &TfBundle, gamma: f64) -> Result<EstimatorField> {
    let mask = mask_of(b, gamma)?;
    h_mag_on(b, &mask)
}

pub fn h_mag_on(b: &TfBundle, mask: &Mask) -> Result<EstimatorField> {
    tg_ratio_field(b, mask, FieldKind::HMag, |_, _, _, p| p.norm())
}

/// Signed residual `Re{(d/dw S) / S} = Im{S^{tg} / S^g}`.
pub fn h_re(b: &TfBundle, gamma: f64) -> Result<EstimatorField> {
    let mask = mask_of(b, gamma)?;
    h_re_on(b, &mask)
}

pub fn h_re_on(b: &TfBundle, mask: &Mask) -> Result<EstimatorField> {
    tg_ratio_field(b, mask, FieldKind::HRe, |_, _, _, p| p.im)
}

fn tg_ratio_field(
    b: &TfBundle,
    mask: &Mask,
    kind: FieldKind,
    f: impl Fn(&TfGrid, usize, usize, Complex64) -> f64 + Sync,
) -> Result<EstimatorField> {
    let p = planes(b, &[WindowKind::G, WindowKind::Tg])?;
    let grid = *b.grid();
    let mut values = Array2::from_elem(p[0].dim(), f64::NAN);
    Zip::indexed(&mut values)
        .and(p[0])
        .and(p[1])
        .and(&mask.cells)
        .par_for_each(|(n, k), v, s, stg, on| {
            if *on && s.norm() > 0.0 {
                *v = f(&grid, n, k, stg / s);
            }
        });
    Ok(EstimatorField::from_values(kind, grid, values, mask.lambda))
}

/// Synchroextracting residual `w - w1(t, w)`.
pub fn h_set(omega1_field: &EstimatorField) -> Result<EstimatorField> {
    if omega1_field.kind != FieldKind::Omega1 {
        return Err(invalid(format!(
            "h_set needs an OMEGA1 field, got {:?}",
            omega1_field.kind
        )));
    }
    let grid = omega1_field.grid;
    let mut values = omega1_field.values.clone();
    Zip::indexed(&mut values).for_each(|(_, k), v| *v = grid.omega(k) - *v);
    Ok(EstimatorField {
        kind: FieldKind::HSet,
        values,
        ..omega1_field.clone()
    })
}

/// Multi-resolution residual: geometric mean of `|S^{tg_i}/S^{g_i}|` on the
/// intersection of the per-width masks. All widths share one grid; when
/// `n_fft` is `None` it is sized for the widest window.
pub fn h_multires(
    s: &Signal,
    sigmas: &[f64],
    trunc_radius: f64,
    gamma: f64,
    n_fft: Option<usize>,
) -> Result<EstimatorField> {
    if sigmas.is_empty() {
        return Err(invalid("h_multires needs at least one window width"));
    }
    let specs = sigmas
        .iter()
        .map(|&sg| WindowSpec::new(sg, trunc_radius))
        .collect::<Result<Vec<_>>>()?;
    let widest = specs
        .iter()
        .max_by(|a, b| a.sigma.total_cmp(&b.sigma))
        .copied()
        .expect("non-empty");
    let n_fft = Some(n_fft.unwrap_or_else(|| widest.default_n_fft(s.fs())));

    let m = specs.len() as f64;
    let mut acc: Option<(Array2<f64>, Array2<bool>, f64)> = None;
    for spec in &specs {
        let b = stft_bundle_kinds(s, spec, n_fft, &[WindowKind::G, WindowKind::Tg])?;
        let f = h_mag(&b, gamma)?;
        if f.valid_count() == 0 {
            return Err(Error::EmptyField(format!(
                "mask for sigma = {} is empty",
                spec.sigma
            )));
        }
        let factor = f.values.mapv(|v| v.powf(1.0 / m));
        acc = Some(match acc {
            None => (factor, f.valid, f.lambda),
            Some((prod, valid, lambda)) => (prod * factor, valid & f.valid, lambda.max(f.lambda)),
        });
    }
    let (mut values, valid, lambda) = acc.expect("non-empty");
    Zip::from(&mut values).and(&valid).for_each(|v, ok| {
        if !*ok {
            *v = f64::NAN;
        }
    });
    if !valid.iter().any(|v| *v) {
        return Err(Error::EmptyField("joint multi-resolution mask is empty".into()));
    }
    let grid = crate::stft::grid_for(s, &widest, n_fft)?;
    Ok(EstimatorField {
        kind: FieldKind::HMultires,
        grid,
        values,
        valid,
        lambda,
        fallbacks: 0,
    })
}

/// Closed-form `d/dw h` for the signed residuals, from the window family.
///
/// For the Gaussian window `t^2 g = -sigma^2 t g'`, which closes the
/// frequency derivative of `S^{tg}` over the bundle's planes.
pub fn residual_slope(b: &TfBundle, h: &EstimatorField) -> Result<Array2<f64>> {
    let sigma2 = b.grid().window.sigma.powi(2);
    let mut out = Array2::from_elem(h.values.dim(), f64::NAN);
    match h.kind {
        FieldKind::HRe => {
            let p = planes(b, &[WindowKind::G, WindowKind::Tg, WindowKind::Tdg])?;
            Zip::indexed(&mut out).and(&h.valid).par_for_each(|(n, k), v, ok| {
                let s = p[0][[n, k]];
                if *ok && s.norm() > 0.0 {
                    let ptg = p[1][[n, k]] / s;
                    *v = (sigma2 * p[2][[n, k]] / s + ptg * ptg).re;
                }
            });
        }
        FieldKind::HSet => {
            let p = planes(
                b,
                &[WindowKind::G, WindowKind::Dg, WindowKind::Tg, WindowKind::Tdg],
            )?;
            Zip::indexed(&mut out).and(&h.valid).par_for_each(|(n, k), v, ok| {
                let s = p[0][[n, k]];
                if *ok && s.norm() > 0.0 {
                    let r = p[1][[n, k]] / s;
                    let ptg = p[2][[n, k]] / s;
                    *v = -(p[3][[n, k]] / s - r * ptg).re;
                }
            });
        }
        other => {
            return Err(invalid(format!(
                "closed-form slope is only available for signed residuals, got {other:?}"
            )))
        }
    }
    Ok(out)
}
