//! Concentrated TF representations built from a [`TfBundle`].
//!
//! Three families live here:
//!
//! * squeezing along frequency (FSST, second-order FSST) or time (TSST),
//! * extraction of IF-equation roots (SET and the `ET_IF` variants),
//! * iterative root finding on a residual field followed by relocation
//!   (fixed point, Newton, Levenberg-Marquardt, and MSST as the `tau = -1`
//!   fixed point on the SET residual).
//!
//! Relocation methods build a new matrix by accumulation; every masked source
//! cell lands in exactly one output cell unless its target falls off the
//! axis, in which case it is dropped and counted.
//!
//! [`TfBundle`]: crate::stft::TfBundle

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::estimators::FieldKind;
use crate::stft::{TfGrid, TfMatrix};

mod extract;
mod reassign;
mod squeeze;

pub use extract::{extract, ExtractRule};
pub use reassign::{
    msst, reassign_iterative, trace_cell, CellOutcome, SlopeSource, SolverConfig, SolverKind,
};
pub use squeeze::{squeeze_freq, squeeze_time};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MethodTag {
    Stft,
    Fsst,
    Fsst2,
    Tsst,
    Set,
    EtIf,
    RmIfFp,
    RmIfNewton,
    RmIfLm,
    Msst,
}

/// How a method moves TF mass around, which fixes the conserved quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyBehavior {
    /// Output is the source plane.
    Identity,
    /// Output is a masked copy of the source.
    Extraction,
    /// Per-frame complex sums over frequency are preserved.
    FrequencyRelocation,
    /// Per-bin sums over time of `S(t, w) exp(-j w t)` are preserved.
    TimeRelocation,
}

impl MethodTag {
    pub fn energy_behavior(self) -> EnergyBehavior {
        match self {
            Self::Stft => EnergyBehavior::Identity,
            Self::Set | Self::EtIf => EnergyBehavior::Extraction,
            Self::Tsst => EnergyBehavior::TimeRelocation,
            Self::Fsst
            | Self::Fsst2
            | Self::RmIfFp
            | Self::RmIfNewton
            | Self::RmIfLm
            | Self::Msst => EnergyBehavior::FrequencyRelocation,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Cells that hit `max_iter`, a degenerate step or an invalid residual cell.
    pub non_converged: usize,
    /// Cells whose target fell outside the axis.
    pub dropped: usize,
    /// Iteration count -> number of cells.
    pub iterations: BTreeMap<usize, usize>,
    /// Non-zero output cells for extraction methods.
    pub survivors: usize,
    /// Second-order estimator fallbacks to the first-order estimate.
    pub fallbacks: usize,
}

impl Diagnostics {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("non_converged {}\n", self.non_converged));
        out.push_str(&format!("dropped {}\n", self.dropped));
        out.push_str(&format!("survivors {}\n", self.survivors));
        out.push_str(&format!("fallbacks {}\n", self.fallbacks));
        out.push_str("iterations");
        if self.iterations.is_empty() {
            out.push_str(" -");
        }
        for (it, count) in &self.iterations {
            out.push_str(&format!(" {it}:{count}"));
        }
        out.push('\n');
        out
    }
}

/// Output TF matrix with provenance.
#[derive(Debug, Clone)]
pub struct SharpenedTfr {
    pub values: TfMatrix,
    pub grid: TfGrid,
    pub method: MethodTag,
    /// Residual or estimator the method was driven by, if any.
    pub field: Option<FieldKind>,
    pub params: BTreeMap<String, f64>,
    pub lambda: f64,
    pub diagnostics: Diagnostics,
}

impl SharpenedTfr {
    pub(crate) fn new(values: TfMatrix, grid: TfGrid, method: MethodTag, lambda: f64) -> Self {
        Self {
            values,
            grid,
            method,
            field: None,
            params: BTreeMap::new(),
            lambda,
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|z| z.norm() > 0.0).count()
    }
}
