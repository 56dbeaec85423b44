//! Two-step BDF2 time integration with the advection term evaluated at the
//! extrapolated state, its first-step bootstrap, the classical
//! extrapolated-Gear comparator and the driver loop.
//!
//! Each step solves (3/(2k) − νΔ) ωⁿ⁺¹ = (4ωⁿ − ωⁿ⁻¹)/(2k) − NL + fⁿ⁺¹ mode by
//! mode. The denominator 3/(2k) + ν|κ|² is strictly positive, so a step never
//! fails algebraically.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rustfft::num_complex::Complex64;

use crate::error::{param, Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::manufactured::Manufactured;
use crate::monitors::{Monitor, StepView};
use crate::nonlinear::Advection;
use crate::norms::StatePair;

/// Runs are aborted once ‖ω‖ exceeds this.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Nonlinearity {
    /// Extrapolated advection, dealiased Galerkin products.
    GalerkinDealiased,
    /// Extrapolated advection, skew-symmetric collocation products.
    CollocationSkew,
    /// 2N(ψⁿ, ωⁿ) − N(ψⁿ⁻¹, ωⁿ⁻¹) with dealiased Galerkin products.
    ExtrapolatedGear,
}

impl Nonlinearity {
    pub fn name(self) -> &'static str {
        match self {
            Nonlinearity::GalerkinDealiased => "galerkin",
            Nonlinearity::CollocationSkew => "collocation",
            Nonlinearity::ExtrapolatedGear => "gear",
        }
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Nonlinearity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "galerkin" => Ok(Nonlinearity::GalerkinDealiased),
            "collocation" => Ok(Nonlinearity::CollocationSkew),
            "gear" => Ok(Nonlinearity::ExtrapolatedGear),
            _ => Err(param(
                "nonlinearity",
                format!("expected galerkin|collocation|gear, got `{s}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bootstrap {
    /// One semi-implicit Euler step: (1/k − νΔ)ω¹ = ω⁰/k − N(ψ⁰, ω⁰) + f¹.
    SemiImplicitEuler,
    /// ω¹ taken from the manufactured solution at t = k.
    ExactIfKnown,
}

impl Bootstrap {
    pub fn name(self) -> &'static str {
        match self {
            Bootstrap::SemiImplicitEuler => "euler",
            Bootstrap::ExactIfKnown => "exact",
        }
    }
}

impl FromStr for Bootstrap {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Bootstrap::SemiImplicitEuler),
            "exact" => Ok(Bootstrap::ExactIfKnown),
            _ => Err(param("bootstrap", format!("expected euler|exact, got `{s}`"))),
        }
    }
}

pub type ForcingFn = Arc<dyn Fn(f64) -> SpectralField + Send + Sync>;

/// Right-hand side f, evaluated at t_{n+1} = (n+1)k for the step producing ωⁿ⁺¹.
#[derive(Clone)]
pub enum Forcing {
    Zero,
    Steady(SpectralField),
    TimeDependent(ForcingFn),
    Manufactured(Manufactured),
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => f.write_str("Zero"),
            Forcing::Steady(_) => f.write_str("Steady(..)"),
            Forcing::TimeDependent(_) => f.write_str("TimeDependent(..)"),
            Forcing::Manufactured(m) => write!(f, "Manufactured({m})"),
        }
    }
}

impl Forcing {
    pub fn is_time_dependent(&self) -> bool {
        matches!(self, Forcing::TimeDependent(_) | Forcing::Manufactured(_))
    }

    /// Mean-zero forcing field at time `t`.
    pub fn at(&self, t: f64, grid: Grid, nu: f64) -> SpectralField {
        let mut f = match self {
            Forcing::Zero => SpectralField::zeros(grid),
            Forcing::Steady(f) => f.clone(),
            Forcing::TimeDependent(cb) => cb(t),
            Forcing::Manufactured(m) => m.forcing(grid, nu, t),
        };
        f.zero_mean();
        f
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub nu: f64,
    pub k: f64,
    pub grid: Grid,
    pub nonlinearity: Nonlinearity,
    pub bootstrap: Bootstrap,
    pub forcing: Forcing,
    pub steps: usize,
    /// Working value of the Wente constant used in step-size formulas.
    pub cw_estimate: f64,
}

impl SolverConfig {
    pub fn new(nu: f64, k: f64, grid: Grid) -> Result<Self> {
        let cfg = Self {
            nu,
            k,
            grid,
            nonlinearity: Nonlinearity::GalerkinDealiased,
            bootstrap: Bootstrap::SemiImplicitEuler,
            forcing: Forcing::Zero,
            steps: 0,
            cw_estimate: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_nonlinearity(mut self, nl: Nonlinearity) -> Self {
        self.nonlinearity = nl;
        self
    }

    pub fn with_bootstrap(mut self, b: Bootstrap) -> Self {
        self.bootstrap = b;
        self
    }

    pub fn with_forcing(mut self, f: Forcing) -> Self {
        self.forcing = f;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_cw(mut self, cw: f64) -> Self {
        self.cw_estimate = cw;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(param("nu", format!("must be > 0, got {}", self.nu)));
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(param("k", format!("must be > 0, got {}", self.k)));
        }
        if !(self.cw_estimate.is_finite() && self.cw_estimate > 0.0) {
            return Err(param("cw", format!("must be > 0, got {}", self.cw_estimate)));
        }
        if let Forcing::Steady(f) = &self.forcing {
            if f.grid() != self.grid {
                return Err(Error::GridMismatch {
                    left: self.grid.n(),
                    right: f.grid().n(),
                });
            }
        }
        Ok(())
    }

    /// The uniform bounds are stated for νk ≤ 1.
    pub fn require_bound_regime(&self) -> Result<()> {
        if self.nu * self.k > 1.0 {
            return Err(param(
                "k",
                format!("stability envelopes need nu*k <= 1, got {}", self.nu * self.k),
            ));
        }
        Ok(())
    }

    pub fn forcing_at_level(&self, level: usize) -> SpectralField {
        self.forcing.at(level as f64 * self.k, self.grid, self.nu)
    }
}

/// Stateful integrator reusing its transform scratch between steps.
pub struct Stepper {
    nu: f64,
    k: f64,
    grid: Grid,
    nonlinearity: Nonlinearity,
    advection: Advection,
    ksq: Vec<f64>,
    inv_denom: Vec<f64>,
    omega_ext: SpectralField,
    psi_ext: SpectralField,
    nl: SpectralField,
    /// N(ψ, ω) of the newest level from the previous Gear step.
    gear_cache: Option<(usize, SpectralField)>,
}

impl Stepper {
    pub fn new(cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid;
        let ksq = grid.wavenumber_sq();
        let c = 3.0 / (2.0 * cfg.k);
        let inv_denom = ksq.iter().map(|&q| 1.0 / (c + cfg.nu * q)).collect();
        Ok(Self {
            nu: cfg.nu,
            k: cfg.k,
            grid,
            nonlinearity: cfg.nonlinearity,
            advection: Advection::new(grid),
            ksq,
            inv_denom,
            omega_ext: SpectralField::zeros(grid),
            psi_ext: SpectralField::zeros(grid),
            nl: SpectralField::zeros(grid),
            gear_cache: None,
        })
    }

    /// N(psi_ext, omega_ext) into `self.nl`.
    fn advect(&mut self) -> Result<()> {
        match self.nonlinearity {
            Nonlinearity::CollocationSkew => {
                self.advection
                    .collocation_skew_into(&self.psi_ext, &self.omega_ext, &mut self.nl)
            }
            _ => self
                .advection
                .galerkin_into(&self.psi_ext, &self.omega_ext, &mut self.nl),
        }
    }

    /// psi_ext = (−Δ)⁻¹ omega_ext.
    fn solve_streamfunction(&mut self) {
        let src = self.omega_ext.coeffs();
        for ((d, s), q) in self.psi_ext.coeffs_mut().iter_mut().zip(src).zip(&self.ksq) {
            *d = if *q == 0.0 { Complex64::default() } else { s / *q };
        }
    }

    /// N(ψ, ω) for a single level, left in `self.nl`.
    fn advect_level(&mut self, omega: &SpectralField) -> Result<()> {
        self.omega_ext.coeffs_mut().copy_from_slice(omega.coeffs());
        self.solve_streamfunction();
        self.advect()
    }

    fn check(&self, f: &SpectralField) -> Result<()> {
        if f.grid() != self.grid {
            return Err(Error::GridMismatch {
                left: self.grid.n(),
                right: f.grid().n(),
            });
        }
        Ok(())
    }

    /// Extrapolated nonlinearity N(2ψⁿ − ψⁿ⁻¹, 2ωⁿ − ωⁿ⁻¹) into `self.nl`.
    fn extrapolated_nl(&mut self, older: &SpectralField, newer: &SpectralField) -> Result<()> {
        for ((e, a), b) in self
            .omega_ext
            .coeffs_mut()
            .iter_mut()
            .zip(older.coeffs())
            .zip(newer.coeffs())
        {
            *e = b * 2.0 - a;
        }
        self.solve_streamfunction();
        self.advect()
    }

    /// Gear nonlinearity 2N(ψⁿ, ωⁿ) − N(ψⁿ⁻¹, ωⁿ⁻¹) into `self.nl`.
    fn gear_nl(&mut self, older: &SpectralField, newer: &SpectralField, level: usize) -> Result<()> {
        let prev = match self.gear_cache.take() {
            Some((lvl, f)) if lvl + 1 == level => f,
            _ => {
                self.advect_level(older)?;
                self.nl.clone()
            }
        };
        self.advect_level(newer)?;
        let current = self.nl.clone();
        for ((d, c), p) in self
            .nl
            .coeffs_mut()
            .iter_mut()
            .zip(current.coeffs())
            .zip(prev.coeffs())
        {
            *d = c * 2.0 - p;
        }
        self.gear_cache = Some((level, current));
        Ok(())
    }

    /// Advances `(older, newer)` = (ωⁿ⁻¹, ωⁿ) to ωⁿ⁺¹, writing into `out`.
    /// `level` is n, the index of `newer`; it only keys the Gear cache.
    pub fn advance_into(
        &mut self,
        older: &SpectralField,
        newer: &SpectralField,
        f_next: &SpectralField,
        level: usize,
        out: &mut SpectralField,
    ) -> Result<()> {
        self.check(older)?;
        self.check(newer)?;
        self.check(f_next)?;
        match self.nonlinearity {
            Nonlinearity::ExtrapolatedGear => self.gear_nl(older, newer, level)?,
            _ => self.extrapolated_nl(older, newer)?,
        }
        self.solve(older, newer, f_next, out, level + 1)
    }

    fn solve(
        &self,
        older: &SpectralField,
        newer: &SpectralField,
        f_next: &SpectralField,
        out: &mut SpectralField,
        new_level: usize,
    ) -> Result<()> {
        let inv2k = 1.0 / (2.0 * self.k);
        let mut finite = true;
        for (idx, o) in out.coeffs_mut().iter_mut().enumerate() {
            let rhs = (newer.coeffs()[idx] * 4.0 - older.coeffs()[idx]) * inv2k
                - self.nl.coeffs()[idx]
                + f_next.coeffs()[idx];
            finite &= rhs.re.is_finite() && rhs.im.is_finite();
            *o = rhs * self.inv_denom[idx];
        }
        out.zero_mean();
        if !finite {
            return Err(Error::Blowup {
                step: new_level,
                last_checkpoint: None,
            });
        }
        Ok(())
    }

    /// Bootstrap step producing ω¹ from ω⁰ by semi-implicit Euler.
    pub fn euler_into(
        &mut self,
        omega0: &SpectralField,
        f1: &SpectralField,
        out: &mut SpectralField,
    ) -> Result<()> {
        self.check(omega0)?;
        self.check(f1)?;
        self.advect_level(omega0)?;
        let inv_k = 1.0 / self.k;
        for (idx, o) in out.coeffs_mut().iter_mut().enumerate() {
            let rhs = omega0.coeffs()[idx] * inv_k - self.nl.coeffs()[idx] + f1.coeffs()[idx];
            *o = rhs / (inv_k + self.nu * self.ksq[idx]);
        }
        out.zero_mean();
        if !out.is_finite() {
            return Err(Error::Blowup {
                step: 1,
                last_checkpoint: None,
            });
        }
        Ok(())
    }
}

fn step_with(
    pair: &StatePair,
    f_next: &SpectralField,
    cfg: &SolverConfig,
    nl: Nonlinearity,
) -> Result<SpectralField> {
    let cfg = SolverConfig {
        nonlinearity: nl,
        ..cfg.clone()
    };
    let mut stepper = Stepper::new(&cfg)?;
    f_next.ensure_mean_zero()?;
    let mut out = SpectralField::zeros(cfg.grid);
    stepper.advance_into(&pair.older, &pair.newer, f_next, 1, &mut out)?;
    Ok(out)
}

/// One step of the extrapolated-advection BDF2 scheme. A Gear setting in
/// `cfg` falls back to Galerkin products here.
pub fn bdf2ab2_step(pair: &StatePair, f_next: &SpectralField, cfg: &SolverConfig) -> Result<SpectralField> {
    let nl = match cfg.nonlinearity {
        Nonlinearity::ExtrapolatedGear => Nonlinearity::GalerkinDealiased,
        other => other,
    };
    step_with(pair, f_next, cfg, nl)
}

/// One step of the classical extrapolated-Gear scheme.
pub fn extrapolated_gear_step(
    pair: &StatePair,
    f_next: &SpectralField,
    cfg: &SolverConfig,
) -> Result<SpectralField> {
    step_with(pair, f_next, cfg, Nonlinearity::ExtrapolatedGear)
}

/// Produces the starting pair (ω⁰, ω¹).
pub fn bootstrap_first_step(omega0: &SpectralField, cfg: &SolverConfig) -> Result<StatePair> {
    let mut stepper = Stepper::new(cfg)?;
    bootstrap_with(&mut stepper, omega0, cfg)
}

fn bootstrap_with(stepper: &mut Stepper, omega0: &SpectralField, cfg: &SolverConfig) -> Result<StatePair> {
    omega0.ensure_mean_zero()?;
    let omega1 = match cfg.bootstrap {
        Bootstrap::SemiImplicitEuler => {
            let f1 = cfg.forcing_at_level(1);
            let mut out = SpectralField::zeros(cfg.grid);
            stepper.euler_into(omega0, &f1, &mut out)?;
            out
        }
        Bootstrap::ExactIfKnown => match &cfg.forcing {
            Forcing::Manufactured(m) => m.exact(cfg.grid, cfg.nu, cfg.k),
            _ => {
                return Err(param(
                    "bootstrap",
                    "exact bootstrap needs a manufactured forcing",
                ))
            }
        },
    };
    let mut o0 = omega0.clone();
    o0.zero_mean();
    StatePair::new(o0, omega1)
}

/// Where a run starts from.
#[derive(Debug, Clone)]
pub enum RunStart {
    /// Initial vorticity ω⁰; the first step is the bootstrap.
    Fresh(SpectralField),
    /// A pair (ωˡ⁻¹, ωˡ) at level l, e.g. read back from a checkpoint.
    Resume { pair: StatePair, level: usize },
}

#[derive(Debug, Clone)]
pub struct RunReport {
    /// The final pair (ωⁿ⁻¹, ωⁿ).
    pub pair: StatePair,
    /// Index n of the newest level.
    pub level: usize,
    pub steps_taken: usize,
    pub wall_time: Duration,
}

/// Advances until level `cfg.steps`, invoking every monitor after each new level.
pub fn run(cfg: &SolverConfig, start: RunStart, monitors: &mut [&mut dyn Monitor]) -> Result<RunReport> {
    cfg.validate()?;
    let clock = Instant::now();
    let mut stepper = Stepper::new(cfg)?;
    let (mut pair, mut level) = match start {
        RunStart::Fresh(omega0) => {
            if omega0.grid() != cfg.grid {
                return Err(Error::GridMismatch {
                    left: cfg.grid.n(),
                    right: omega0.grid().n(),
                });
            }
            if cfg.steps == 0 {
                let pair = StatePair::repeated(omega0)?;
                return Ok(RunReport {
                    pair,
                    level: 0,
                    steps_taken: 0,
                    wall_time: clock.elapsed(),
                });
            }
            let pair = bootstrap_with(&mut stepper, &omega0, cfg)?;
            let f1 = cfg.forcing_at_level(1);
            notify(monitors, cfg, &pair, &f1, 1)?;
            (pair, 1)
        }
        RunStart::Resume { pair, level } => {
            if pair.grid() != cfg.grid {
                return Err(Error::GridMismatch {
                    left: cfg.grid.n(),
                    right: pair.grid().n(),
                });
            }
            (pair, level)
        }
    };
    let start_level = level;
    let steady = (!cfg.forcing.is_time_dependent()).then(|| cfg.forcing_at_level(0));
    let mut next = SpectralField::zeros(cfg.grid);
    while level < cfg.steps {
        let f_next = match &steady {
            Some(f) => f.clone(),
            None => cfg.forcing_at_level(level + 1),
        };
        let outcome = stepper.advance_into(&pair.older, &pair.newer, &f_next, level, &mut next);
        if let Err(Error::Blowup { step, .. }) = outcome {
            return Err(blowup(monitors, step));
        }
        outcome?;
        level += 1;
        if !(next.norm() <= BLOWUP_THRESHOLD) {
            return Err(blowup(monitors, level));
        }
        std::mem::swap(&mut pair.older, &mut pair.newer);
        std::mem::swap(&mut pair.newer, &mut next);
        notify(monitors, cfg, &pair, &f_next, level)?;
    }
    Ok(RunReport {
        pair,
        level,
        steps_taken: level - start_level.min(level),
        wall_time: clock.elapsed(),
    })
}

fn notify(
    monitors: &mut [&mut dyn Monitor],
    cfg: &SolverConfig,
    pair: &StatePair,
    forcing: &SpectralField,
    level: usize,
) -> Result<()> {
    let view = StepView {
        level,
        t: level as f64 * cfg.k,
        nu: cfg.nu,
        k: cfg.k,
        older: &pair.older,
        newer: &pair.newer,
        forcing,
    };
    for m in monitors.iter_mut() {
        m.record(&view)?;
    }
    Ok(())
}

fn blowup(monitors: &[&mut dyn Monitor], step: usize) -> Error {
    let last_checkpoint: Option<PathBuf> = monitors.iter().rev().find_map(|m| m.last_checkpoint());
    Error::Blowup {
        step,
        last_checkpoint,
    }
}

/// k₀ = ν / (50 C_w² C_u M₀²).
pub fn max_stable_timestep(nu: f64, cw: f64, cu: f64, m0: f64) -> Result<f64> {
    for (name, v) in [("nu", nu), ("cw", cw), ("cu", cu), ("M0", m0)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(param(name, format!("must be > 0, got {v}")));
        }
    }
    Ok(nu / (50.0 * cw * cw * cu * m0 * m0))
}
