//! Method comparison: timing plus the metrics of [`crate::metrics`].

use std::time::Instant;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{invalid, Result};
use crate::methods::TfMethod;
use crate::metrics::{energy_ratio, renyi_of, ridge_error, worst_error, ComponentScore};
use crate::sharpen::SharpenedTfr;
use crate::signal::Signal;
use crate::stft::{stft_bundle_kinds, threshold_mask, WindowKind};

#[derive(Debug, Clone, Serialize)]
pub struct MethodReport {
    pub method: String,
    pub renyi: Option<f64>,
    pub ridge: Vec<ComponentScore>,
    /// Worst per-component mean ridge error.
    pub ridge_err: Option<f64>,
    pub energy_ratio: Option<f64>,
    /// Median end-to-end wall time, s.
    pub wall_time: f64,
    pub non_converged: usize,
    pub dropped: usize,
    pub error: Option<String>,
}

impl MethodReport {
    /// Report for a method that returned an error.
    pub fn failed(method: &str, wall_time: f64, err: String) -> Self {
        Self {
            method: method.to_string(),
            renyi: None,
            ridge: Vec::new(),
            ridge_err: None,
            energy_ratio: None,
            wall_time,
            non_converged: 0,
            dropped: 0,
            error: Some(err),
        }
    }

    pub fn component(&self, index: usize) -> Option<&ComponentScore> {
        self.ridge.iter().find(|c| c.index == index)
    }
}

/// Scores one output against the signal's descriptors and its source plane.
pub fn evaluate(
    name: &str,
    out: &SharpenedTfr,
    s: &Signal,
    cfg: &RunConfig,
    wall_time: f64,
) -> Result<MethodReport> {
    let src = stft_bundle_kinds(s, &cfg.window()?, Some(out.grid.n_fft), &[WindowKind::G])?
        .into_plane(WindowKind::G)?;
    let mask = threshold_mask(&src, cfg.gamma)?;
    let ridge = ridge_error(&out.values, &out.grid, s.descriptors(), &cfg.ridge);
    Ok(MethodReport {
        method: name.to_string(),
        renyi: renyi_of(&out.values, cfg.alpha).ok(),
        ridge_err: worst_error(&ridge),
        ridge,
        energy_ratio: energy_ratio(out, &src, &mask).ok(),
        wall_time,
        non_converged: out.diagnostics.non_converged,
        dropped: out.diagnostics.dropped,
        error: None,
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Times each method end to end (`repeats` runs, median reported) and scores
/// the last output. Methods run one after another; a failing method yields a
/// report with `error` set and the rest still run.
pub fn bench(
    methods: &[&dyn TfMethod],
    s: &Signal,
    cfg: &RunConfig,
    repeats: usize,
) -> Result<Vec<MethodReport>> {
    if repeats < 3 {
        return Err(invalid(format!("bench needs at least 3 repeats, got {repeats}")));
    }
    cfg.validate()?;
    let mut reports = Vec::with_capacity(methods.len());
    for m in methods {
        let mut times = Vec::with_capacity(repeats);
        let mut last = None;
        for _ in 0..repeats {
            let start = Instant::now();
            let out = m.run(s, cfg);
            times.push(start.elapsed().as_secs_f64());
            let failed = out.is_err();
            last = Some(out);
            if failed {
                break;
            }
        }
        let wall = median(times);
        let report = match last.expect("repeats >= 3") {
            Ok(out) => evaluate(m.name(), &out, s, cfg, wall)
                .unwrap_or_else(|e| MethodReport::failed(m.name(), wall, e.to_string())),
            Err(e) => {
                log::warn!("{} failed: {e}", m.name());
                MethodReport::failed(m.name(), wall, e.to_string())
            }
        };
        reports.push(report);
    }
    Ok(reports)
}
