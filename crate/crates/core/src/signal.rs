//! Analytic test signals with exact ground-truth instantaneous descriptors.
//!
//! Every generator is a pure function of its arguments. Generated signals
//! carry the [`ComponentDescriptor`]s of the components they were built from,
//! so downstream scoring never has to re-derive the truth.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniformly sampled complex time series.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<Complex64>,
    fs: f64,
    t0: f64,
    descriptors: Vec<ComponentDescriptor>,
}

impl Signal {
    pub fn new(samples: Vec<Complex64>, fs: f64) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(invalid(format!("sample rate must be positive, got {fs}")));
        }
        if samples.is_empty() {
            return Err(invalid("signal has no samples"));
        }
        Ok(Self {
            samples,
            fs,
            t0: 0.0,
            descriptors: Vec::new(),
        })
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn with_descriptors(mut self, descriptors: Vec<ComponentDescriptor>) -> Self {
        self.descriptors = descriptors;
        self
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    /// Time of sample `n` in seconds.
    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 / self.fs
    }

    /// Ground-truth descriptors, empty for ingested data.
    pub fn descriptors(&self) -> &[ComponentDescriptor] {
        &self.descriptors
    }

    /// Riemann-sum energy `sum |x|^2 / fs`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.fs
    }

    /// Mean power per sample.
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn scaled(&self, k: Complex64) -> Signal {
        Signal {
            samples: self.samples.iter().map(|z| z * k).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ComponentKind {
    Lfm,
    CosFm,
    Impulse,
    Lgd,
}

/// Kind-specific parameters. Angular quantities are in rad/s, rates in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ComponentDescriptor {
    /// `A exp(j(a + b t + c t^2 / 2))`.
    Lfm { amplitude: f64, a: f64, b: f64, c: f64 },
    /// `A exp(j(2 pi fc t + (depth / fm) sin(2 pi fm t)))`.
    CosFm {
        amplitude: f64,
        carrier_hz: f64,
        mod_hz: f64,
        depth_hz: f64,
    },
    /// Discrete Dirac placed at sample `index`; `time = index / fs`.
    Impulse { amplitude: f64, time: f64, index: usize },
    /// Spectrum `A exp(-j(a + b w + c w^2 / 2))` on `band`, group delay `b + c w`.
    Lgd {
        amplitude: f64,
        a: f64,
        b: f64,
        c: f64,
        band: [f64; 2],
    },
}

impl ComponentDescriptor {
    pub fn kind(&self) -> ComponentKind {
        match self {
            Self::Lfm { .. } => ComponentKind::Lfm,
            Self::CosFm { .. } => ComponentKind::CosFm,
            Self::Impulse { .. } => ComponentKind::Impulse,
            Self::Lgd { .. } => ComponentKind::Lgd,
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            Self::Lfm { amplitude, .. }
            | Self::CosFm { amplitude, .. }
            | Self::Impulse { amplitude, .. }
            | Self::Lgd { amplitude, .. } => amplitude,
        }
    }

    /// Instantaneous frequency `phi'(t)` in rad/s, for frequency-ridge components.
    pub fn instantaneous_frequency(&self, t: f64) -> Option<f64> {
        match *self {
            Self::Lfm { b, c, .. } => Some(b + c * t),
            Self::CosFm {
                carrier_hz,
                mod_hz,
                depth_hz,
                ..
            } => Some(2.0 * PI * (carrier_hz + depth_hz * (2.0 * PI * mod_hz * t).cos())),
            _ => None,
        }
    }

    /// Chirp rate `phi''(t)` in rad/s^2.
    pub fn chirp_rate(&self, t: f64) -> Option<f64> {
        match *self {
            Self::Lfm { c, .. } => Some(c),
            Self::CosFm {
                mod_hz, depth_hz, ..
            } => Some(-4.0 * PI * PI * depth_hz * mod_hz * (2.0 * PI * mod_hz * t).sin()),
            _ => None,
        }
    }

    /// Group delay in seconds at angular frequency `omega` (LGD only).
    pub fn group_delay(&self, omega: f64) -> Option<f64> {
        match *self {
            Self::Lgd { b, c, band, .. } if omega >= band[0] && omega <= band[1] => {
                Some(b + c * omega)
            }
            _ => None,
        }
    }

    pub fn impulse_time(&self) -> Option<f64> {
        match *self {
            Self::Impulse { time, .. } => Some(time),
            _ => None,
        }
    }
}

fn sample_count(fs: f64, duration: f64) -> Result<usize> {
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(invalid(format!("sample rate must be positive, got {fs}")));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(invalid(format!("duration must be positive, got {duration}")));
    }
    let n = (duration * fs).round() as usize;
    if n == 0 {
        return Err(invalid("duration shorter than one sample"));
    }
    Ok(n)
}

fn check_amplitude(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("amplitude must be positive, got {a}")))
    }
}

/// Linear frequency modulated chirp with phase `a + b t + (c/2) t^2`.
pub fn gen_lfm(amplitude: f64, a: f64, b: f64, c: f64, fs: f64, duration: f64) -> Result<Signal> {
    check_amplitude(amplitude)?;
    let n = sample_count(fs, duration)?;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            Complex64::from_polar(amplitude, a + b * t + 0.5 * c * t * t)
        })
        .collect();
    Ok(Signal::new(samples, fs)?.with_descriptors(vec![ComponentDescriptor::Lfm {
        amplitude,
        a,
        b,
        c,
    }]))
}

/// Unit-area discrete impulse: one sample of height `A fs`.
pub fn gen_impulse(amplitude: f64, t_imp: f64, fs: f64, duration: f64) -> Result<Signal> {
    check_amplitude(amplitude)?;
    let n = sample_count(fs, duration)?;
    if !(t_imp >= 0.0 && t_imp < duration) {
        return Err(invalid(format!(
            "impulse time {t_imp} outside [0, {duration})"
        )));
    }
    let index = (t_imp * fs).round() as usize;
    if index >= n {
        return Err(invalid(format!(
            "impulse time {t_imp} rounds past the last sample"
        )));
    }
    let mut samples = vec![Complex64::new(0.0, 0.0); n];
    samples[index] = Complex64::new(amplitude * fs, 0.0);
    Ok(Signal::new(samples, fs)?.with_descriptors(vec![ComponentDescriptor::Impulse {
        amplitude,
        time: index as f64 / fs,
        index,
    }]))
}

/// Cosine frequency modulation around `carrier_hz` with peak deviation `depth_hz`.
pub fn gen_cosfm(
    amplitude: f64,
    carrier_hz: f64,
    mod_hz: f64,
    depth_hz: f64,
    fs: f64,
    duration: f64,
) -> Result<Signal> {
    check_amplitude(amplitude)?;
    let n = sample_count(fs, duration)?;
    if !(carrier_hz + depth_hz.abs() < fs / 2.0) {
        return Err(invalid(format!(
            "carrier {carrier_hz} Hz + depth {depth_hz} Hz aliases at fs = {fs}"
        )));
    }
    if depth_hz != 0.0 && !(mod_hz > 0.0) {
        return Err(invalid("modulation rate must be positive when depth is nonzero"));
    }
    let index = if depth_hz == 0.0 { 0.0 } else { depth_hz / mod_hz };
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let phase = 2.0 * PI * carrier_hz * t + index * (2.0 * PI * mod_hz * t).sin();
            Complex64::from_polar(amplitude, phase)
        })
        .collect();
    Ok(Signal::new(samples, fs)?.with_descriptors(vec![ComponentDescriptor::CosFm {
        amplitude,
        carrier_hz,
        mod_hz,
        depth_hz,
    }]))
}

/// Linear group delay signal built on the DFT grid of the output length.
///
/// The spectrum `A exp(-j(a + b w + c w^2 / 2))` is gated to `band` (rad/s)
/// and inverted with the `fs / N` Riemann weight, so samples approximate the
/// continuous inverse Fourier transform.
pub fn gen_lgd(
    amplitude: f64,
    a: f64,
    b: f64,
    c: f64,
    band: [f64; 2],
    fs: f64,
    duration: f64,
) -> Result<Signal> {
    check_amplitude(amplitude)?;
    let n = sample_count(fs, duration)?;
    let [lo, hi] = band;
    if !(lo > 0.0 && lo < hi && hi < PI * fs) {
        return Err(invalid(format!(
            "band [{lo}, {hi}] rad/s must lie within (0, {})",
            PI * fs
        )));
    }
    let n_dur = n as f64 / fs;
    for w in [lo, hi] {
        let gd = b + c * w;
        if !(0.0..n_dur).contains(&gd) {
            return Err(invalid(format!(
                "group delay {gd} s at {w} rad/s leaves [0, {n_dur})"
            )));
        }
    }
    let d_omega = 2.0 * PI * fs / n as f64;
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    for (k, bin) in spectrum.iter_mut().enumerate().take(n / 2 + 1) {
        let w = k as f64 * d_omega;
        if w >= lo && w <= hi {
            *bin = Complex64::from_polar(amplitude, -(a + b * w + 0.5 * c * w * w));
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
    let scale = fs / n as f64;
    spectrum.iter_mut().for_each(|z| *z *= scale);
    Ok(Signal::new(spectrum, fs)?.with_descriptors(vec![ComponentDescriptor::Lgd {
        amplitude,
        a,
        b,
        c,
        band,
    }]))
}

/// Element-wise sum of signals on a common grid.
pub fn mix(components: &[Signal]) -> Result<Signal> {
    let first = components
        .first()
        .ok_or_else(|| invalid("mix needs at least one component"))?;
    let mut samples = first.samples.clone();
    let mut descriptors = first.descriptors.clone();
    for s in &components[1..] {
        if s.fs != first.fs || s.len() != first.len() || s.t0 != first.t0 {
            return Err(invalid("mixed signals must share fs, length and t0"));
        }
        samples
            .iter_mut()
            .zip(&s.samples)
            .for_each(|(acc, z)| *acc += z);
        descriptors.extend(s.descriptors.iter().cloned());
    }
    Ok(Signal {
        samples,
        fs: first.fs,
        t0: first.t0,
        descriptors,
    })
}

/// Adds complex circular white Gaussian noise at the requested SNR.
///
/// `snr_db = +inf` returns the input unchanged.
pub fn add_awgn(s: &Signal, snr_db: f64, seed: u64) -> Result<Signal> {
    if snr_db == f64::INFINITY {
        return Ok(s.clone());
    }
    if snr_db.is_nan() {
        return Err(invalid("SNR is NaN"));
    }
    let power = s.power();
    if power == 0.0 {
        return Err(invalid("cannot set an SNR on a zero-energy signal"));
    }
    let noise_power = power / 10f64.powf(snr_db / 10.0);
    let normal = Normal::new(0.0, (noise_power / 2.0).sqrt())
        .map_err(|e| invalid(format!("noise distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = s
        .samples
        .iter()
        .map(|z| z + Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect();
    Ok(Signal {
        samples,
        ..s.clone()
    })
}

/// Analytic signal of a real sequence via one-sided spectrum construction.
pub fn analytic(real: &[f64], fs: f64) -> Result<Signal> {
    if real.is_empty() {
        return Err(invalid("analytic() needs a non-empty input"));
    }
    let n = real.len();
    let mut buf: Vec<Complex64> = real.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    // bins 1..ceil(n/2) doubled; DC and (for even n) Nyquist kept once
    let half = n / 2;
    for (k, z) in buf.iter_mut().enumerate() {
        let gain = if k == 0 || (n % 2 == 0 && k == half) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *z *= gain;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|z| *z *= scale);
    Signal::new(buf, fs)
}

/// Default parameters of the four-component testbed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestbedParams {
    /// Impulse times as fractions of the duration.
    pub impulse_fractions: [f64; 2],
    pub chirp_start_hz: f64,
    pub chirp_end_hz: f64,
    pub carrier_hz: f64,
    pub mod_hz: f64,
    pub depth_hz: f64,
}

impl Default for TestbedParams {
    fn default() -> Self {
        Self {
            impulse_fractions: [0.2, 0.8],
            chirp_start_hz: 50.0,
            chirp_end_hz: 350.0,
            carrier_hz: 400.0,
            mod_hz: 2.0,
            depth_hz: 40.0,
        }
    }
}

/// Two impulses, a linear chirp and a cosine-FM tone, all unit amplitude.
pub fn figure1_testbed(fs: f64, duration: f64) -> Result<Signal> {
    figure1_testbed_with(fs, duration, &TestbedParams::default())
}

pub fn figure1_testbed_with(fs: f64, duration: f64, p: &TestbedParams) -> Result<Signal> {
    let b = 2.0 * PI * p.chirp_start_hz;
    let c = 2.0 * PI * (p.chirp_end_hz - p.chirp_start_hz) / duration;
    mix(&[
        gen_impulse(1.0, p.impulse_fractions[0] * duration, fs, duration)?,
        gen_impulse(1.0, p.impulse_fractions[1] * duration, fs, duration)?,
        gen_lfm(1.0, 0.0, b, c, fs, duration)?,
        gen_cosfm(1.0, p.carrier_hz, p.mod_hz, p.depth_hz, fs, duration)?,
    ])
}
