//! Named test signals.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::io::NoiseInfo;
use crate::signal::{add_awgn, figure1_testbed, gen_impulse, gen_lfm, gen_lgd, mix, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Figure1,
    Figure1Noisy,
    Chirp,
    Impulse,
    Lgd,
    Tones,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Self::Figure1,
        Self::Figure1Noisy,
        Self::Chirp,
        Self::Impulse,
        Self::Lgd,
        Self::Tones,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Figure1 => "figure1",
            Self::Figure1Noisy => "figure1-noisy",
            Self::Chirp => "chirp",
            Self::Impulse => "impulse",
            Self::Lgd => "lgd",
            Self::Tones => "tones",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| invalid(format!("unknown preset {s:?}")))
    }
}

/// Knobs of the presets. Frequencies in Hz, chirp rate in Hz/s.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetParams {
    pub fs: f64,
    pub duration: f64,
    pub snr_db: f64,
    pub seed: u64,
    /// Chirp start frequency.
    pub chirp_b: f64,
    /// Chirp rate.
    pub chirp_c: f64,
    /// Impulse time, s.
    pub impulse_t: f64,
    pub tones: Vec<f64>,
    /// LGD band in Hz and the group delays (s) at its edges.
    pub lgd_band: [f64; 2],
    pub lgd_delays: [f64; 2],
}

impl Default for PresetParams {
    fn default() -> Self {
        Self {
            fs: 1024.0,
            duration: 1.0,
            snr_db: 2.0,
            seed: 42,
            chirp_b: 50.0,
            chirp_c: 300.0,
            impulse_t: 0.5,
            tones: vec![100.0, 300.0],
            lgd_band: [100.0, 400.0],
            lgd_delays: [0.2, 0.8],
        }
    }
}

/// Builds a preset signal; the noisy testbed also returns its noise settings.
pub fn synth(preset: Preset, p: &PresetParams) -> Result<(Signal, Option<NoiseInfo>)> {
    let s = match preset {
        Preset::Figure1 => figure1_testbed(p.fs, p.duration)?,
        Preset::Figure1Noisy => {
            let clean = figure1_testbed(p.fs, p.duration)?;
            let noisy = add_awgn(&clean, p.snr_db, p.seed)?;
            return Ok((
                noisy,
                Some(NoiseInfo {
                    snr_db: p.snr_db,
                    seed: p.seed,
                }),
            ));
        }
        Preset::Chirp => gen_lfm(
            1.0,
            0.0,
            2.0 * PI * p.chirp_b,
            2.0 * PI * p.chirp_c,
            p.fs,
            p.duration,
        )?,
        Preset::Impulse => gen_impulse(1.0, p.impulse_t, p.fs, p.duration)?,
        Preset::Lgd => {
            let [w0, w1] = p.lgd_band.map(|f| 2.0 * PI * f);
            let [d0, d1] = p.lgd_delays;
            let c = (d1 - d0) / (w1 - w0);
            gen_lgd(1.0, 0.0, d0 - c * w0, c, [w0, w1], p.fs, p.duration)?
        }
        Preset::Tones => {
            if p.tones.is_empty() {
                return Err(invalid("tones preset needs at least one frequency"));
            }
            let parts = p
                .tones
                .iter()
                .map(|f| gen_lfm(1.0, 0.0, 2.0 * PI * f, 0.0, p.fs, p.duration))
                .collect::<Result<Vec<_>>>()?;
            mix(&parts)?
        }
    };
    Ok((s, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::ComponentKind;

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("figure2".parse::<Preset>().is_err());
    }

    #[test]
    fn every_preset_builds() {
        let params = PresetParams::default();
        for p in Preset::ALL {
            let (s, noise) = synth(p, &params).unwrap();
            assert_eq!(s.len(), 1024, "{p}");
            assert_eq!(noise.is_some(), p == Preset::Figure1Noisy);
            assert!(!s.descriptors().is_empty());
        }
    }

    #[test]
    fn lgd_delays_hit_the_band_edges() {
        let (s, _) = synth(Preset::Lgd, &PresetParams::default()).unwrap();
        let d = &s.descriptors()[0];
        assert_eq!(d.kind(), ComponentKind::Lgd);
        assert!((d.group_delay(2.0 * PI * 100.0).unwrap() - 0.2).abs() < 1e-12);
        assert!((d.group_delay(2.0 * PI * 400.0).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn noisy_preset_is_deterministic() {
        let p = PresetParams::default();
        let (a, _) = synth(Preset::Figure1Noisy, &p).unwrap();
        let (b, _) = synth(Preset::Figure1Noisy, &p).unwrap();
        assert_eq!(a.samples(), b.samples());
    }
}
