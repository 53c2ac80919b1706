//! File formats.
//!
//! * Signal CSV: header `t,re,im`, one sample per row, values as `{:.16e}`
//!   (17 significant digits, so `f64` round-trips exactly).
//! * Matrix CSV: no header; one row per frequency bin (lowest first), one
//!   column per frame. Complex cells are written `<re><sign><|im|>j`, e.g.
//!   `1.0000000000000000e0-2.5000000000000000e-1j`; real cells are a single
//!   number, with `nan` for cells outside the mask. Axes live in the
//!   metadata JSON next to the matrix.
//! * PGM: binary P5, width = frames, height = bins, highest bin on the first
//!   row, maxval 255. Gray is `20 log10(|z| / max|z|)` mapped linearly from
//!   the floor (default -60 dB) to 0 dB.
//! * Descriptor JSON: sample rate, length, optional noise settings and one
//!   entry per component with its parameters and, for frequency ridges, the
//!   IF in rad/s at every frame.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bench::MethodReport;
use crate::error::{Error, Result};
use crate::estimators::{EstimatorField, FieldKind};
use crate::sharpen::{Diagnostics, MethodTag, SharpenedTfr};
use crate::signal::{analytic, ComponentDescriptor, Signal};
use crate::stft::{TfGrid, TfMatrix};

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

pub fn write_signal_csv(path: &Path, s: &Signal) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,re,im")?;
    for (n, z) in s.samples().iter().enumerate() {
        writeln!(w, "{:.16e},{:.16e},{:.16e}", s.time(n), z.re, z.im)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a signal CSV. The sample rate comes from the time column unless
/// `fs` is given; a real-only file (`t,x`) is made analytic.
pub fn read_signal_csv(path: &Path, fs: Option<f64>) -> Result<Signal> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let real_only = match cols.as_slice() {
        ["t", "re", "im"] => false,
        ["t", _] => true,
        _ => return Err(parse_err(path, format!("expected header t,re,im, got {}", cols.join(",")))),
    };
    let mut t = Vec::new();
    let mut re = Vec::new();
    let mut im = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |j: usize| -> Result<f64> {
            rec.get(j)
                .ok_or_else(|| parse_err(path, format!("row {}: missing column {j}", i + 2)))?
                .parse::<f64>()
                .map_err(|e| parse_err(path, format!("row {}: {e}", i + 2)))
        };
        t.push(num(0)?);
        re.push(num(1)?);
        im.push(if real_only { 0.0 } else { num(2)? });
    }
    if t.is_empty() {
        return Err(parse_err(path, "no samples"));
    }
    let fs = match fs {
        Some(fs) => fs,
        None => infer_fs(&t).map_err(|m| parse_err(path, m))?,
    };
    let s = if real_only {
        analytic(&re, fs)?
    } else {
        Signal::new(
            re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect(),
            fs,
        )?
    };
    Ok(s.with_t0(t[0]))
}

fn infer_fs(t: &[f64]) -> std::result::Result<f64, String> {
    if t.len() < 2 {
        return Err("a single sample does not fix the sample rate; pass it explicitly".into());
    }
    let n = t.len() - 1;
    let dt = (t[n] - t[0]) / n as f64;
    if !(dt > 0.0) {
        return Err("time column must increase".into());
    }
    for (i, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
            return Err(format!("non-uniform sampling at row {}", i + 3));
        }
    }
    Ok(1.0 / dt)
}

/// Reads the first channel of a WAV file as an analytic signal.
pub fn read_wav(path: &Path) -> Result<Signal> {
    let mut r = hound::WavReader::open(path)?;
    let spec = r.spec();
    let ch = spec.channels as usize;
    let x: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => r
            .samples::<f32>()
            .step_by(ch)
            .map(|v| v.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        hound::SampleFormat::Int => {
            let scale = 2f64.powi(spec.bits_per_sample as i32 - 1);
            r.samples::<i32>()
                .step_by(ch)
                .map(|v| v.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()?
        }
    };
    if x.is_empty() {
        return Err(parse_err(path, "no samples"));
    }
    analytic(&x, spec.sample_rate as f64)
}

/// Loads a `.wav` or signal CSV by extension.
pub fn read_signal(path: &Path, fs: Option<f64>) -> Result<Signal> {
    let is_wav = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
    if is_wav {
        read_wav(path)
    } else {
        read_signal_csv(path, fs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseInfo {
    pub snr_db: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorEntry {
    #[serde(flatten)]
    pub descriptor: ComponentDescriptor,
    /// IF in rad/s at each frame, for frequency ridges.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub if_curve: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorFile {
    pub fs: f64,
    pub t0: f64,
    pub n_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseInfo>,
    pub components: Vec<DescriptorEntry>,
}

impl DescriptorFile {
    pub fn from_signal(s: &Signal, noise: Option<NoiseInfo>) -> Self {
        let components = s
            .descriptors()
            .iter()
            .map(|d| DescriptorEntry {
                descriptor: d.clone(),
                if_curve: d.instantaneous_frequency(0.0).map(|_| {
                    (0..s.len())
                        .map(|n| d.instantaneous_frequency(s.time(n) - s.t0()).unwrap_or(f64::NAN))
                        .collect()
                }),
            })
            .collect();
        Self {
            fs: s.fs(),
            t0: s.t0(),
            n_samples: s.len(),
            noise,
            components,
        }
    }

    pub fn descriptors(&self) -> Vec<ComponentDescriptor> {
        self.components.iter().map(|c| c.descriptor.clone()).collect()
    }
}

pub fn write_descriptors(path: &Path, d: &DescriptorFile) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(w, d)?;
    Ok(())
}

pub fn read_descriptors(path: &Path) -> Result<DescriptorFile> {
    let r = BufReader::new(File::open(path)?);
    serde_json::from_reader(r).map_err(|e| parse_err(path, e.to_string()))
}

pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.16e}{}{:.16e}j", z.re, sign, z.im.abs())
}

pub fn parse_complex(s: &str) -> Option<Complex64> {
    let body = s.trim().strip_suffix('j')?;
    // The imaginary sign is the last '+' or '-' not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'))?;
    let re = body[..split].parse().ok()?;
    let im = body[split..].trim_start_matches('+').parse().ok()?;
    Some(Complex64::new(re, im))
}

fn write_rows<T>(path: &Path, m: &Array2<T>, cell: impl Fn(&T) -> String) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let (nf, nb) = m.dim();
    let mut line = String::new();
    for k in 0..nb {
        line.clear();
        for n in 0..nf {
            if n > 0 {
                line.push(',');
            }
            line.push_str(&cell(&m[[n, k]]));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_csv(path: &Path, m: &TfMatrix) -> Result<()> {
    write_rows(path, m, |z| format_complex(*z))
}

/// Reads a complex matrix CSV back to `[frame, bin]` layout.
pub fn read_matrix_csv(path: &Path) -> Result<TfMatrix> {
    let r = BufReader::new(File::open(path)?);
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|c| parse_complex(c).ok_or_else(|| parse_err(path, format!("row {}: bad cell {c:?}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(path, format!("row {} has {} cells, expected {}", i + 1, row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    let nb = rows.len();
    let nf = rows.first().map_or(0, Vec::len);
    Ok(Array2::from_shape_fn((nf, nb), |(n, k)| rows[k][n]))
}

pub fn write_field_csv(path: &Path, f: &EstimatorField) -> Result<()> {
    write_rows(path, &f.values, |v| {
        if v.is_finite() {
            format!("{v:.16e}")
        } else {
            "nan".to_string()
        }
    })
}

/// Sidecar metadata for an exported matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfrMeta {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldKind>,
    pub fs: f64,
    pub t0: f64,
    pub n_frames: usize,
    pub n_bins: usize,
    pub n_fft: usize,
    /// Bin spacing, rad/s.
    pub d_omega: f64,
    pub sigma: f64,
    pub trunc_radius: f64,
    pub lambda: f64,
    pub params: std::collections::BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
}

impl TfrMeta {
    pub fn for_grid(name: &str, grid: &TfGrid, lambda: f64) -> Self {
        Self {
            name: name.to_string(),
            method: None,
            field: None,
            fs: grid.fs,
            t0: grid.t0,
            n_frames: grid.n_frames,
            n_bins: grid.n_bins,
            n_fft: grid.n_fft,
            d_omega: grid.d_omega(),
            sigma: grid.window.sigma,
            trunc_radius: grid.window.trunc_radius,
            lambda,
            params: Default::default(),
            diagnostics: None,
        }
    }

    pub fn for_tfr(name: &str, t: &SharpenedTfr) -> Self {
        Self {
            method: Some(t.method),
            field: t.field,
            params: t.params.clone(),
            diagnostics: Some(t.diagnostics.clone()),
            ..Self::for_grid(name, &t.grid, t.lambda)
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub const DEFAULT_FLOOR_DB: f64 = -60.0;

/// 8-bit gray levels of `|m|` on a dB scale, row-major, highest bin first.
pub fn pgm_levels(m: &TfMatrix, floor_db: f64) -> Vec<u8> {
    let (nf, nb) = m.dim();
    let peak = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut out = Vec::with_capacity(nf * nb);
    for k in (0..nb).rev() {
        for n in 0..nf {
            let a = m[[n, k]].norm();
            let level = if peak > 0.0 && a > 0.0 {
                let db = (20.0 * (a / peak).log10()).max(floor_db);
                (255.0 * (db - floor_db) / -floor_db).round()
            } else {
                0.0
            };
            out.push(level as u8);
        }
    }
    out
}

pub fn write_pgm(path: &Path, m: &TfMatrix, floor_db: f64) -> Result<()> {
    if !(floor_db < 0.0 && floor_db.is_finite()) {
        return Err(crate::error::invalid(format!("floor must be negative dB, got {floor_db}")));
    }
    let (nf, nb) = m.dim();
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{nf} {nb}\n255\n")?;
    w.write_all(&pgm_levels(m, floor_db))?;
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |v| v.to_string())
}

/// Report CSV: `method,renyi,ridge_err,energy_ratio,time_s,nonconv`.
pub fn write_report_csv(w: &mut impl Write, reports: &[MethodReport]) -> Result<()> {
    writeln!(w, "method,renyi,ridge_err,energy_ratio,time_s,nonconv")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.method,
            opt(r.renyi),
            opt(r.ridge_err),
            opt(r.energy_ratio),
            r.wall_time,
            r.non_converged
        )?;
    }
    Ok(())
}

pub fn format_report_table(reports: &[MethodReport]) -> String {
    let mut s = format!(
        "{:<14}{:>10}{:>11}{:>14}{:>11}{:>9}\n",
        "method", "renyi", "ridge_err", "energy_ratio", "time_s", "nonconv"
    );
    let f = |v: Option<f64>, p: usize| v.map_or_else(|| "-".to_string(), |v| format!("{v:.p$}"));
    for r in reports {
        s.push_str(&format!(
            "{:<14}{:>10}{:>11}{:>14}{:>11.4}{:>9}",
            r.method,
            f(r.renyi, 3),
            f(r.ridge_err, 3),
            f(r.energy_ratio, 6),
            r.wall_time,
            r.non_converged
        ));
        if let Some(e) = &r.error {
            s.push_str(&format!("  error: {e}"));
        }
        s.push('\n');
    }
    s
}
