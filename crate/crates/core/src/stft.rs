//! Modified short-time Fourier transform with a Gaussian window family.
//!
//! The transform is evaluated with the phase referenced to the frame centre,
//!
//! ```text
//! S^w(t, w) = (1/fs) * sum_u f(t + u) w(u) exp(-j w u),
//! ```
//!
//! one frame per input sample. The five window kinds `g, g', g'', t g, t g'`
//! give the time and frequency partial derivatives of `S^g` in closed form:
//!
//! * `d/dt S^g  = -S^{g'} + j w S^g`
//! * `d/dw S^g  = -j S^{tg}`
//! * `d2/dt2 S^g = S^{g''} - 2 j w S^{g'} - w^2 S^g`
//! * `d2/dtdw S^g = j (S^g + S^{tg'}) + w S^{tg}`

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::signal::Signal;

/// Complex TF plane indexed `[frame, bin]`.
pub type TfMatrix = Array2<Complex64>;

/// Gaussian window `g(t) = exp(-t^2 / (2 sigma^2)) / (sqrt(2 pi) sigma)`,
/// truncated at `trunc_radius * sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub sigma: f64,
    pub trunc_radius: f64,
}

impl WindowSpec {
    pub const DEFAULT_TRUNC_RADIUS: f64 = 5.0;

    pub fn new(sigma: f64, trunc_radius: f64) -> Result<Self> {
        let spec = Self {
            sigma,
            trunc_radius,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(sigma, Self::DEFAULT_TRUNC_RADIUS)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid(format!("window sigma must be positive, got {}", self.sigma)));
        }
        if !(self.trunc_radius >= 3.0 && self.trunc_radius.is_finite()) {
            return Err(invalid(format!(
                "truncation radius must be at least 3 sigma, got {}",
                self.trunc_radius
            )));
        }
        Ok(())
    }

    /// Samples on each side of the centre tap.
    pub fn half_len(&self, fs: f64) -> usize {
        (self.trunc_radius * self.sigma * fs).floor() as usize
    }

    /// Odd sampled length `2 * half_len + 1`.
    pub fn len(&self, fs: f64) -> usize {
        2 * self.half_len(fs) + 1
    }

    /// Next power of two at least four times the sampled length.
    pub fn default_n_fft(&self, fs: f64) -> usize {
        (4 * self.len(fs)).next_power_of_two()
    }

    pub fn value(&self, kind: WindowKind, u: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        let g = (-u * u / (2.0 * s2)).exp() / ((2.0 * PI).sqrt() * self.sigma);
        match kind {
            WindowKind::G => g,
            WindowKind::Dg => -u / s2 * g,
            WindowKind::Ddg => (u * u / (s2 * s2) - 1.0 / s2) * g,
            WindowKind::Tg => u * g,
            WindowKind::Tdg => -u * u / s2 * g,
        }
    }
}

/// Members of the Gaussian window family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    /// `g`
    G,
    /// `g'`
    Dg,
    /// `g''`
    Ddg,
    /// `t g`
    Tg,
    /// `t g'`
    Tdg,
}

impl WindowKind {
    pub const ALL: [WindowKind; 5] = [Self::G, Self::Dg, Self::Ddg, Self::Tg, Self::Tdg];

    pub fn name(self) -> &'static str {
        match self {
            Self::G => "g",
            Self::Dg => "dg",
            Self::Ddg => "ddg",
            Self::Tg => "tg",
            Self::Tdg => "tdg",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// Sampled window at `u_m = m / fs`, `m = -h..=h`.
pub fn sample_window(spec: &WindowSpec, kind: WindowKind, fs: f64) -> Vec<f64> {
    let h = spec.half_len(fs) as isize;
    (-h..=h).map(|m| spec.value(kind, m as f64 / fs)).collect()
}

/// Shared time/frequency axes of every plane in a bundle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfGrid {
    pub n_frames: usize,
    pub n_bins: usize,
    pub n_fft: usize,
    pub fs: f64,
    pub t0: f64,
    pub window: WindowSpec,
}

impl TfGrid {
    /// Frequency bin spacing in rad/s.
    pub fn d_omega(&self) -> f64 {
        2.0 * PI * self.fs / self.n_fft as f64
    }

    pub fn d_t(&self) -> f64 {
        1.0 / self.fs
    }

    pub fn omega(&self, k: usize) -> f64 {
        k as f64 * self.d_omega()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 / self.fs
    }

    pub fn omega_axis(&self) -> Vec<f64> {
        (0..self.n_bins).map(|k| self.omega(k)).collect()
    }

    pub fn t_axis(&self) -> Vec<f64> {
        (0..self.n_frames).map(|n| self.time(n)).collect()
    }

    /// Frames whose window lies entirely inside the signal.
    pub fn interior_frames(&self) -> std::ops::Range<usize> {
        let h = self.window.half_len(self.fs);
        h.min(self.n_frames)..self.n_frames.saturating_sub(h)
    }

    /// Nearest bin to `omega` with half-up rounding, `None` outside the axis.
    pub fn bin_of(&self, omega: f64) -> Option<usize> {
        let x = (omega / self.d_omega() + 0.5).floor();
        (x.is_finite() && x >= 0.0 && x < self.n_bins as f64).then_some(x as usize)
    }

    /// Nearest frame to `t` with half-up rounding, `None` outside the axis.
    pub fn frame_of(&self, t: f64) -> Option<usize> {
        let x = ((t - self.t0) * self.fs + 0.5).floor();
        (x.is_finite() && x >= 0.0 && x < self.n_frames as f64).then_some(x as usize)
    }
}

/// STFT planes over a common grid, one per computed window kind.
#[derive(Debug, Clone)]
pub struct TfBundle {
    grid: TfGrid,
    planes: [Option<TfMatrix>; 5],
}

impl TfBundle {
    pub fn grid(&self) -> &TfGrid {
        &self.grid
    }

    pub fn has(&self, kind: WindowKind) -> bool {
        self.planes[kind.slot()].is_some()
    }

    pub fn get(&self, kind: WindowKind) -> Result<&TfMatrix> {
        self.planes[kind.slot()].as_ref().ok_or_else(|| {
            invalid(format!("bundle is missing the `{}` plane", kind.name()))
        })
    }

    pub fn require(&self, kinds: &[WindowKind]) -> Result<()> {
        kinds.iter().try_for_each(|k| self.get(*k).map(|_| ()))
    }

    pub fn kinds(&self) -> Vec<WindowKind> {
        WindowKind::ALL.into_iter().filter(|k| self.has(*k)).collect()
    }

    pub fn into_plane(mut self, kind: WindowKind) -> Result<TfMatrix> {
        self.planes[kind.slot()]
            .take()
            .ok_or_else(|| invalid(format!("bundle is missing the `{}` plane", kind.name())))
    }
}

fn resolve_n_fft(spec: &WindowSpec, fs: f64, n_fft: Option<usize>) -> Result<usize> {
    let len = spec.len(fs);
    let n_fft = n_fft.unwrap_or_else(|| spec.default_n_fft(fs));
    if n_fft < len {
        return Err(invalid(format!(
            "n_fft = {n_fft} is shorter than the window ({len} samples)"
        )));
    }
    Ok(n_fft)
}

/// Grid that [`stft_bundle`] would produce for this signal.
pub fn grid_for(s: &Signal, spec: &WindowSpec, n_fft: Option<usize>) -> Result<TfGrid> {
    spec.validate()?;
    let n_fft = resolve_n_fft(spec, s.fs(), n_fft)?;
    Ok(TfGrid {
        n_frames: s.len(),
        n_bins: n_fft.div_ceil(2),
        n_fft,
        fs: s.fs(),
        t0: s.t0(),
        window: *spec,
    })
}

/// Single plane of the modified STFT.
pub fn stft(s: &Signal, spec: &WindowSpec, kind: WindowKind, n_fft: Option<usize>) -> Result<TfMatrix> {
    stft_bundle_kinds(s, spec, n_fft, &[kind])?.into_plane(kind)
}

/// All five window kinds.
pub fn stft_bundle(s: &Signal, spec: &WindowSpec, n_fft: Option<usize>) -> Result<TfBundle> {
    stft_bundle_kinds(s, spec, n_fft, &WindowKind::ALL)
}

/// Selected window kinds, one windowing pass per frame.
pub fn stft_bundle_kinds(
    s: &Signal,
    spec: &WindowSpec,
    n_fft: Option<usize>,
    kinds: &[WindowKind],
) -> Result<TfBundle> {
    let grid = grid_for(s, spec, n_fft)?;
    let mut kinds = kinds.to_vec();
    kinds.sort();
    kinds.dedup();
    if kinds.is_empty() {
        return Err(invalid("no window kinds requested"));
    }

    let fs = s.fs();
    let h = spec.half_len(fs);
    let taps: Vec<Vec<f64>> = kinds.iter().map(|k| sample_window(spec, *k, fs)).collect();
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(grid.n_fft);
    let x = s.samples();
    let n = x.len();
    let scale = 1.0 / fs;
    let n_fft = grid.n_fft;
    let n_bins = grid.n_bins;

    let rows: Vec<Vec<Vec<Complex64>>> = (0..n)
        .into_par_iter()
        .map_init(
            || {
                (
                    vec![Complex64::new(0.0, 0.0); n_fft],
                    vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
                )
            },
            |(buf, scratch), frame| {
                let lo = frame.saturating_sub(h);
                let hi = (frame + h).min(n - 1);
                taps.iter()
                    .map(|w| {
                        buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                        for i in lo..=hi {
                            // offset u = i - frame, stored circularly so the
                            // DFT phase is referenced to the frame centre
                            let m = i as isize - frame as isize;
                            let slot = m.rem_euclid(n_fft as isize) as usize;
                            buf[slot] = x[i] * w[(m + h as isize) as usize];
                        }
                        fft.process_with_scratch(buf, scratch);
                        buf[..n_bins].iter().map(|z| z * scale).collect()
                    })
                    .collect()
            },
        )
        .collect();

    let mut planes: [Option<TfMatrix>; 5] = Default::default();
    for (ki, kind) in kinds.iter().enumerate() {
        let mut plane = Array2::zeros((n, n_bins));
        for (frame, row) in rows.iter().enumerate() {
            plane
                .row_mut(frame)
                .iter_mut()
                .zip(&row[ki])
                .for_each(|(dst, src)| *dst = *src);
        }
        planes[kind.slot()] = Some(plane);
    }
    Ok(TfBundle { grid, planes })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskStatus {
    Ok,
    /// The input plane was identically zero.
    Empty,
}

/// Over-threshold region `|S^g| > gamma * max |S^g|`.
#[derive(Debug, Clone)]
pub struct Mask {
    pub cells: Array2<bool>,
    /// Absolute threshold `gamma * max |S^g|`.
    pub lambda: f64,
    pub gamma: f64,
    pub status: MaskStatus,
}

impl Mask {
    pub fn count(&self) -> usize {
        self.cells.iter().filter(|b| **b).count()
    }

    pub fn get(&self, frame: usize, bin: usize) -> bool {
        self.cells[[frame, bin]]
    }
}

pub fn threshold_mask(sg: &TfMatrix, gamma: f64) -> Result<Mask> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!("threshold ratio must be in (0, 1), got {gamma}")));
    }
    let max = sg.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !max.is_finite() {
        return Err(Error::Numerical("non-finite STFT magnitude".into()));
    }
    if max == 0.0 {
        log::warn!("threshold mask on an all-zero plane; mask is empty");
        return Ok(Mask {
            cells: Array2::from_elem(sg.dim(), false),
            lambda: 0.0,
            gamma,
            status: MaskStatus::Empty,
        });
    }
    let lambda = gamma * max;
    Ok(Mask {
        cells: sg.mapv(|z| z.norm() > lambda),
        lambda,
        gamma,
        status: MaskStatus::Ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{gen_impulse, gen_lfm};
    use approx::assert_relative_eq;

    #[test]
    fn window_closed_forms_at_zero() {
        let spec = WindowSpec::gaussian(0.02).unwrap();
        let peak = 1.0 / ((2.0 * PI).sqrt() * 0.02);
        assert_relative_eq!(spec.value(WindowKind::G, 0.0), peak, max_relative = 1e-15);
        assert_eq!(spec.value(WindowKind::Tg, 0.0), 0.0);
        assert_eq!(spec.value(WindowKind::Dg, 0.0), 0.0);
        assert_relative_eq!(
            spec.value(WindowKind::Ddg, 0.0),
            -peak / (0.02 * 0.02),
            max_relative = 1e-14
        );
    }

    #[test]
    fn sampled_window_is_odd_length_and_normalised() {
        let spec = WindowSpec::gaussian(0.02).unwrap();
        let w = sample_window(&spec, WindowKind::G, 1024.0);
        assert_eq!(w.len() % 2, 1);
        assert_eq!(w.len(), 205);
        let n = w.len();
        let trap = (w.iter().sum::<f64>() - 0.5 * (w[0] + w[n - 1])) / 1024.0;
        assert!((trap - 1.0).abs() < 1e-6, "{trap}");
    }

    #[test]
    fn window_derivatives_match_finite_differences() {
        let spec = WindowSpec::gaussian(0.013).unwrap();
        let d = 1e-6;
        for u in [-0.03, -0.01, 0.0, 0.004, 0.02] {
            let g = |x| spec.value(WindowKind::G, x);
            let dg = (g(u + d) - g(u - d)) / (2.0 * d);
            let ddg = (g(u + d) - 2.0 * g(u) + g(u - d)) / (d * d);
            let scale = spec.value(WindowKind::G, 0.0) / 0.013f64.powi(2);
            assert!((spec.value(WindowKind::Dg, u) - dg).abs() < 1e-6 * scale);
            assert!((spec.value(WindowKind::Ddg, u) - ddg).abs() < 1e-3 * scale);
            assert_relative_eq!(spec.value(WindowKind::Tg, u), u * g(u));
            assert_relative_eq!(
                spec.value(WindowKind::Tdg, u),
                u * spec.value(WindowKind::Dg, u)
            );
        }
    }

    #[test]
    fn spec_validation() {
        assert!(WindowSpec::new(0.0, 5.0).is_err());
        assert!(WindowSpec::new(0.01, 2.0).is_err());
        assert!(WindowSpec::new(0.01, 3.0).is_ok());
    }

    #[test]
    fn n_fft_too_small_is_rejected() {
        let s = gen_lfm(1.0, 0.0, 100.0, 0.0, 1024.0, 0.25).unwrap();
        let spec = WindowSpec::gaussian(0.02).unwrap();
        assert!(stft(&s, &spec, WindowKind::G, Some(128)).is_err());
        assert!(stft(&s, &spec, WindowKind::G, Some(205)).is_ok());
    }

    #[test]
    fn default_grid_covers_half_band() {
        let s = gen_lfm(1.0, 0.0, 100.0, 0.0, 1024.0, 1.0).unwrap();
        let spec = WindowSpec::gaussian(0.02).unwrap();
        let g = grid_for(&s, &spec, None).unwrap();
        assert_eq!(g.n_fft, 1024);
        assert_eq!(g.n_bins, 512);
        assert!(g.omega(g.n_bins - 1) < PI * 1024.0);
        assert_eq!(g.bin_of(g.omega(17) + 0.49 * g.d_omega()), Some(17));
        assert_eq!(g.bin_of(g.omega(17) + 0.5 * g.d_omega()), Some(18));
        assert_eq!(g.bin_of(-g.d_omega()), None);
    }

    #[test]
    fn tone_magnitude_is_unity() {
        let fs = 1024.0;
        let s = gen_lfm(1.0, 0.0, 2.0 * PI * 100.0, 0.0, fs, 1.0).unwrap();
        let spec = WindowSpec::gaussian(0.02).unwrap();
        let sg = stft(&s, &spec, WindowKind::G, None).unwrap();
        for n in 103..921 {
            assert!((sg[[n, 100]].norm() - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn impulse_matches_gaussian_closed_form() {
        let fs = 1024.0;
        let sigma = 0.02;
        let s = gen_impulse(1.0, 0.5, fs, 1.0).unwrap();
        let spec = WindowSpec::gaussian(sigma).unwrap();
        let sg = stft(&s, &spec, WindowKind::G, None).unwrap();
        let h = spec.half_len(fs);
        for n in (512 - h)..=(512 + h) {
            let dt = 0.5 - n as f64 / fs;
            let expect = (-dt * dt / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma);
            for k in [0, 37, 255, 511] {
                assert!((sg[[n, k]].norm() - expect).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn mask_extremes_and_empty_input() {
        let s = gen_lfm(1.0, 0.0, 2.0 * PI * 100.0, 0.0, 512.0, 0.5).unwrap();
        let spec = WindowSpec::gaussian(0.02).unwrap();
        let sg = stft(&s, &spec, WindowKind::G, None).unwrap();
        let loose = threshold_mask(&sg, 1e-300).unwrap();
        let nonzero = sg.iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(loose.count(), nonzero);

        let tight = threshold_mask(&sg, 0.999).unwrap();
        assert!(tight.count() > 0);
        let (arg, _) = sg
            .indexed_iter()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        assert!(tight.get(arg.0, arg.1));
        for ((_, k), on) in tight.cells.indexed_iter() {
            if *on {
                assert!(k.abs_diff(arg.1) <= 1);
            }
        }

        let zero = Array2::<Complex64>::zeros((4, 4));
        let m = threshold_mask(&zero, 0.1).unwrap();
        assert_eq!(m.status, MaskStatus::Empty);
        assert_eq!(m.count(), 0);
        assert!(threshold_mask(&sg, 1.0).is_err());
        assert!(threshold_mask(&sg, 0.0).is_err());
    }
}
