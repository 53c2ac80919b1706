//! Named TF methods behind one trait, selectable at runtime.

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::estimators::{
    group_delay, h_mag, h_multires, h_re, h_set, omega1, omega2, FieldKind,
};
use crate::sharpen::{
    extract, msst, reassign_iterative, squeeze_freq, squeeze_time, ExtractRule, MethodTag,
    SharpenedTfr, SlopeSource, SolverKind,
};
use crate::signal::Signal;
use crate::stft::{stft_bundle_kinds, threshold_mask, TfBundle, WindowKind};

use WindowKind::{Ddg, Dg, Tdg, Tg, G};

pub trait TfMethod: Send + Sync {
    /// Registry key, e.g. `"fsst2"`.
    fn name(&self) -> &'static str;

    fn tag(&self) -> MethodTag;

    /// STFT planes `apply` reads from the bundle.
    fn kinds(&self, cfg: &RunConfig) -> Vec<WindowKind>;

    /// FFT length the bundle must be computed with.
    fn n_fft(&self, s: &Signal, cfg: &RunConfig) -> Result<Option<usize>> {
        let _ = s;
        Ok(cfg.n_fft)
    }

    /// Runs on a precomputed bundle holding at least `kinds(cfg)`.
    fn apply(&self, s: &Signal, b: &TfBundle, cfg: &RunConfig) -> Result<SharpenedTfr>;

    /// Computes the needed planes, then applies.
    fn run(&self, s: &Signal, cfg: &RunConfig) -> Result<SharpenedTfr> {
        cfg.validate()?;
        let b = stft_bundle_kinds(s, &cfg.window()?, self.n_fft(s, cfg)?, &self.kinds(cfg))?;
        self.apply(s, &b, cfg)
    }
}

struct Stft;

impl TfMethod for Stft {
    fn name(&self) -> &'static str {
        "stft"
    }

    fn tag(&self) -> MethodTag {
        MethodTag::Stft
    }

    fn kinds(&self, _: &RunConfig) -> Vec<WindowKind> {
        vec![G]
    }

    fn apply(&self, _: &Signal, b: &TfBundle, cfg: &RunConfig) -> Result<SharpenedTfr> {
        let sg = b.get(G)?;
        let mask = threshold_mask(sg, cfg.gamma)?;
        Ok(SharpenedTfr::new(sg.clone(), *b.grid(), MethodTag::Stft, mask.lambda)
            .with_param("gamma", cfg.gamma))
    }
}

struct Fsst;

impl TfMethod for Fsst {
    fn name(&self) -> &'static str {
        "fsst"
    }

    fn tag(&self) -> MethodTag {
        MethodTag::Fsst
    }

    fn kinds(&self, _: &RunConfig) -> Vec<WindowKind> {
        vec![G, Dg]
    }

    fn apply(&self, _: &Signal, b: &TfBundle, cfg: &RunConfig) -> Result<SharpenedTfr> {
        squeeze_freq(b, &omega1(b, cfg.gamma)?, cfg.gamma)
    }
}

struct Fsst2;

impl TfMethod for Fsst2 {
    fn name(&self) -> &'static str {
        "fsst2"
    }

    fn tag(&self) -> MethodTag {
        MethodTag::Fsst2
    }

    fn kinds(&self, _: &RunConfig) -> Vec<WindowKind> {
        vec![G, Dg, Ddg, Tg, Tdg]
    }

    fn apply(&self, _: &Signal, b: &TfBundle, cfg: &RunConfig) -> Result<SharpenedTfr> {
        let w2 = omega2(b, cfg.gamma, cfg.degeneracy_tol)?;
        Ok(squeeze_freq(b, &w2, cfg.gamma)?.with_param("degeneracy_tol", cfg.degeneracy_tol))
    }
}

struct Tsst;

impl TfMethod for Tsst {
    fn name(&self) -> &'static str {
        "tsst"
    }

    fn tag(&self) -> MethodTag {
        MethodTag::Tsst
    }

    fn kinds(&self, _: &RunConfig) -> Vec<WindowKind> {
        vec![G, Tg]
    }

    fn apply(&self, _: &Signal, b: &TfBundle, cfg: &RunConfig) -> Result<SharpenedTfr> {
        squeeze_time(b, &group_delay(b, cfg.gamma)?, cfg.gamma)
    }
}

struct Set;

impl TfMethod for Set {
    fn name(&self) -> &'static str {
        "set"
    }

    fn tag(&self) -> MethodTag {
        MethodTag::Set
    }

    fn kinds(&self, _: &RunConfig) -> Vec<WindowKind> {
        vec![G, Dg]
    }

    fn apply(&self, _: &Signal, b: &TfBundle, cfg: &RunConfig) -> Result<SharpenedTfr> {
        let hs = h_set(&omega1(b, cfg.gamma)?)?;
        let tol = cfg.extract.set_tol.unwrap_or(b.grid().d_omega() / 2.0);
        Ok(extract(b, &hs, ExtractRule::Threshold { tol })?.with_param("gamma", cfg.gamma))
    }
}

struct EtIf {
    name: &'static str,
    residual: FieldKind,
}

impl TfMethod for EtIf {
    fn name(&self) -> &'static str {
        self.name
    }

    fn tag(&self) -> MethodTag {
        MethodTag::EtIf
    }

    fn kinds(&self, _: &RunConfig) -> Vec<WindowKind> {
        match self.residual {
            FieldKind::HMultires => vec![G],
            _ => vec![G, Tg],
        }
    }

    fn n_fft(&self, s: &Signal, cfg: &RunConfig) -> Result<Option<usize>> {
        if self.residual != FieldKind::HMultires || cfg.n_fft.is_some() {
            return Ok(cfg.n_fft);
        }
        // One grid for every width: size it for the widest window.
        let widest = cfg
            .multires_sigmas
            .iter()
            .copied()
            .chain([cfg.sigma])
            .fold(0.0, f64::max);
        let spec = crate::stft::WindowSpec::new(widest, cfg.trunc_radius)?;
        Ok(Some(spec.default_n_fft(s.fs())))
    }

    fn apply(&self, s: &Signal, b: &TfBundle, cfg: &RunConfig) -> Result<SharpenedTfr> {
        let h = match self.residual {
            FieldKind::HMag => h_mag(b, cfg.gamma)?,
            FieldKind::HRe => h_re(b, cfg.gamma)?,
            _ => h_multires(
                s,
                &cfg.multires_sigmas,
                cfg.trunc_radius,
                cfg.gamma,
                Some(b.grid().n_fft),
            )?,
        };
        let rule = ExtractRule::Root {
            abs_tol: cfg.extract.abs_tol,
        };
        Ok(extract(b, &h, rule)?.with_param("gamma", cfg.gamma))
    }
}

struct RmIf {
    name: &'static str,
    solver: SolverKind,
}

impl TfMethod for RmIf {
    fn name(&self) -> &'static str {
        self.name
    }

    fn tag(&self) -> MethodTag {
        self.solver.tag()
    }

    fn kinds(&self, cfg: &RunConfig) -> Vec<WindowKind> {
        let window_slope = self.solver != SolverKind::FixedPoint && cfg.solver.slope == SlopeSource::Window;
        match (cfg.rm_residual, window_slope) {
            (FieldKind::HSet, false) => vec![G, Dg],
            (FieldKind::HSet, true) => vec![G, Dg, Tg, Tdg],
            (_, false) => vec![G, Tg],
            (_, true) => vec![G, Tg, Tdg],
        }
    }

    fn apply(&self, _: &Signal, b: &TfBundle, cfg: &RunConfig) -> Result<SharpenedTfr> {
        let h = match cfg.rm_residual {
            FieldKind::HSet => h_set(&omega1(b, cfg.gamma)?)?,
            _ => h_re(b, cfg.gamma)?,
        };
        Ok(reassign_iterative(b, &h, self.solver, &cfg.solver)?.with_param("gamma", cfg.gamma))
    }
}

struct Msst;

impl TfMethod for Msst {
    fn name(&self) -> &'static str {
        "msst"
    }

    fn tag(&self) -> MethodTag {
        MethodTag::Msst
    }

    fn kinds(&self, _: &RunConfig) -> Vec<WindowKind> {
        vec![G, Dg]
    }

    fn apply(&self, _: &Signal, b: &TfBundle, cfg: &RunConfig) -> Result<SharpenedTfr> {
        msst(b, cfg.msst_iters, cfg.gamma)
    }
}

/// Methods keyed by name, in registration order.
#[derive(Default)]
pub struct MethodRegistry {
    methods: Vec<Box<dyn TfMethod>>,
}

impl MethodRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every method this crate ships.
    pub fn builtin() -> Self {
        let mut r = Self::new();
        r.register(Box::new(Stft));
        r.register(Box::new(Fsst));
        r.register(Box::new(Fsst2));
        r.register(Box::new(Tsst));
        r.register(Box::new(Set));
        r.register(Box::new(EtIf { name: "et-if-mag", residual: FieldKind::HMag }));
        r.register(Box::new(EtIf { name: "et-if-re", residual: FieldKind::HRe }));
        r.register(Box::new(EtIf { name: "et-multires", residual: FieldKind::HMultires }));
        r.register(Box::new(RmIf { name: "rm-if-fp", solver: SolverKind::FixedPoint }));
        r.register(Box::new(RmIf { name: "rm-if-newton", solver: SolverKind::Newton }));
        r.register(Box::new(RmIf { name: "rm-if-lm", solver: SolverKind::LevenbergMarquardt }));
        r.register(Box::new(Msst));
        r
    }

    /// Adds a method, replacing any with the same name.
    pub fn register(&mut self, m: Box<dyn TfMethod>) {
        match self.methods.iter().position(|x| x.name() == m.name()) {
            Some(i) => self.methods[i] = m,
            None => self.methods.push(m),
        }
    }

    pub fn get(&self, name: &str) -> Result<&dyn TfMethod> {
        self.methods
            .iter()
            .find(|m| m.name() == name)
            .map(|m| m.as_ref())
            .ok_or_else(|| Error::UnknownMethod(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.methods.iter().map(|m| m.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn TfMethod> {
        self.methods.iter().map(|m| m.as_ref())
    }
}
