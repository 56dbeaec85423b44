//! Per-step observers attached to [`crate::stepper::run`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::analysis::{l2_envelope, rho0};
use crate::error::Result;
use crate::field::SpectralField;
use crate::norms::{g_equivalence_constants, g_norm_sq_parts, sobolev_norm, GWeight, StatePair};
use crate::snapshot::checkpoint_write;
use crate::spectrum::shell_spectrum;
use crate::stats::{observe, ObservationRow, ProbeMode, StatsAccumulator};

/// Borrowed view of the state right after level `level` was produced:
/// `older` = ωˡ⁻¹, `newer` = ωˡ, `forcing` = fˡ.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a> {
    pub level: usize,
    pub t: f64,
    pub nu: f64,
    pub k: f64,
    pub older: &'a SpectralField,
    pub newer: &'a SpectralField,
    pub forcing: &'a SpectralField,
}

impl StepView<'_> {
    pub fn observe(&self, probes: &[ProbeMode]) -> ObservationRow {
        observe(
            self.older,
            self.newer,
            self.forcing,
            self.level,
            self.t,
            self.nu,
            self.k,
            probes,
        )
    }

    /// ‖[ωˡ⁻¹, ωˡ]‖²_{G(μ)}.
    pub fn g_norm_sq(&self, mu: f64) -> f64 {
        let g = GWeight::new(mu).expect("mu is non-negative");
        g_norm_sq_parts(
            self.older.norm_sq(),
            self.older.inner(self.newer),
            self.newer.norm_sq(),
            g,
        )
    }
}

pub trait Monitor {
    fn record(&mut self, v: &StepView) -> Result<()>;

    /// Most recent checkpoint written by this monitor, if any.
    fn last_checkpoint(&self) -> Option<PathBuf> {
        None
    }
}

fn due(level: usize, every: usize) -> bool {
    level == 1 || (every > 0 && level % every == 0)
}

/// Observation rows every `every` levels (and at level 1), kept in memory
/// or streamed to CSV.
pub struct SeriesRecorder {
    every: usize,
    probes: Vec<ProbeMode>,
    rows: Vec<ObservationRow>,
    sink: Option<BufWriter<File>>,
}

impl SeriesRecorder {
    pub fn new(every: usize, probes: Vec<ProbeMode>) -> Self {
        Self {
            every,
            probes,
            rows: Vec::new(),
            sink: None,
        }
    }

    /// Streams rows to `path`; creates the file and writes the header.
    /// With `append` the file is opened for appending without a header,
    /// for resumed runs.
    pub fn to_csv(path: &Path, every: usize, probes: Vec<ProbeMode>, append: bool) -> Result<Self> {
        let file = if append {
            std::fs::OpenOptions::new().append(true).open(path)?
        } else {
            File::create(path)?
        };
        let mut sink = BufWriter::new(file);
        if !append {
            writeln!(sink, "{}", ObservationRow::CSV_HEADER)?;
        }
        Ok(Self {
            every,
            probes,
            rows: Vec::new(),
            sink: Some(sink),
        })
    }

    pub fn rows(&self) -> &[ObservationRow] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<ObservationRow> {
        self.rows
    }

    pub fn flush(&mut self) -> Result<()> {
        if let Some(s) = self.sink.as_mut() {
            s.flush()?;
        }
        Ok(())
    }
}

impl Monitor for SeriesRecorder {
    fn record(&mut self, v: &StepView) -> Result<()> {
        if !due(v.level, self.every) {
            return Ok(());
        }
        let row = v.observe(&self.probes);
        match self.sink.as_mut() {
            Some(s) => writeln!(s, "{}", row.csv())?,
            None => self.rows.push(row),
        }
        Ok(())
    }
}

/// Feeds a [`StatsAccumulator`] every `every` levels, and the shell spectrum
/// every `spectrum_every` levels. Retains the post-burn-in scalar series
/// for bootstrap intervals.
pub struct StatsMonitor {
    pub acc: StatsAccumulator,
    every: usize,
    spectrum_every: usize,
    probes: Vec<ProbeMode>,
    series: Vec<[f64; 7]>,
}

impl StatsMonitor {
    pub fn new(burn_in_steps: usize, every: usize, spectrum_every: usize, probes: Vec<ProbeMode>) -> Self {
        Self {
            acc: StatsAccumulator::new(burn_in_steps),
            every: every.max(1),
            spectrum_every,
            probes,
            series: Vec::new(),
        }
    }

    pub fn series(&self) -> &[[f64; 7]] {
        &self.series
    }

    /// One scalar column of the retained series, by index into
    /// [`crate::stats::SCALAR_NAMES`].
    pub fn column(&self, idx: usize) -> Vec<f64> {
        self.series.iter().map(|r| r[idx]).collect()
    }
}

impl Monitor for StatsMonitor {
    fn record(&mut self, v: &StepView) -> Result<()> {
        if v.level < self.acc.burn_in_steps() {
            return Ok(());
        }
        if v.level % self.every == 0 {
            let row = v.observe(&self.probes);
            if self.acc.push(&row) {
                self.series.push(row.scalars());
            }
        }
        if self.spectrum_every > 0 && v.level % self.spectrum_every == 0 {
            let shells: Vec<f64> = shell_spectrum(v.newer).into_iter().map(|(_, e)| e).collect();
            self.acc.push_spectrum(v.level, &shells);
        }
        Ok(())
    }
}

/// Checks the invariant ball and the decay envelope of ‖V_n‖²_{G(νk)} for
/// steady forcing, with V₀ = [ω⁰, ω¹] the first recorded pair and
/// n = level − 1, and tracks entry into the absorbing ball of radius² 2ρ₀².
#[derive(Debug, Clone)]
pub struct GBoundMonitor {
    rho0: f64,
    ball_slack: f64,
    pub v0_gsq: Option<f64>,
    pub first_level: usize,
    pub steps_checked: u64,
    pub ball_violations: u64,
    pub envelope_violations: u64,
    pub first_violation: Option<usize>,
    /// Largest ‖V_n‖ / max{‖V₀‖, ρ₀}.
    pub max_ball_ratio: f64,
    /// Largest ‖V_n‖² / envelope(n).
    pub max_envelope_ratio: f64,
    /// First level inside {‖V‖² ≤ 2ρ₀²}.
    pub entry_level: Option<usize>,
    /// Last level outside the absorbing ball after the first entry.
    pub exit_after_entry: Option<usize>,
    pub last_gsq: f64,
}

/// Relative rounding allowance on the envelope comparison.
const ENVELOPE_ROUNDING: f64 = 1e-13;

impl GBoundMonitor {
    /// `f_hm1` is |f|_{H⁻¹} of the steady forcing.
    pub fn new(f_hm1: f64, nu: f64) -> Result<Self> {
        Ok(Self::with_rho0(rho0(f_hm1, nu)?))
    }

    pub fn with_rho0(rho0: f64) -> Self {
        Self {
            rho0,
            ball_slack: 1e-9,
            v0_gsq: None,
            first_level: 0,
            steps_checked: 0,
            ball_violations: 0,
            envelope_violations: 0,
            first_violation: None,
            max_ball_ratio: 0.0,
            max_envelope_ratio: 0.0,
            entry_level: None,
            exit_after_entry: None,
            last_gsq: f64::NAN,
        }
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn passed(&self) -> bool {
        self.steps_checked > 0 && self.ball_violations == 0 && self.envelope_violations == 0
    }
}

impl Monitor for GBoundMonitor {
    fn record(&mut self, v: &StepView) -> Result<()> {
        let gsq = v.g_norm_sq(v.nu * v.k);
        self.last_gsq = gsq;
        let v0_gsq = *self.v0_gsq.get_or_insert_with(|| {
            self.first_level = v.level;
            gsq
        });
        let n = v.level - self.first_level;
        let radius = v0_gsq.sqrt().max(self.rho0);
        let ratio = gsq.sqrt() / radius;
        let env = l2_envelope(n as u64, v.nu, v.k, v0_gsq, self.rho0);
        let env_ratio = if env > 0.0 { gsq / env } else { f64::INFINITY * gsq };
        self.max_ball_ratio = self.max_ball_ratio.max(ratio);
        self.max_envelope_ratio = self.max_envelope_ratio.max(env_ratio);
        let mut bad = false;
        if ratio > 1.0 + self.ball_slack {
            self.ball_violations += 1;
            bad = true;
        }
        if gsq > env * (1.0 + ENVELOPE_ROUNDING) {
            self.envelope_violations += 1;
            bad = true;
        }
        if bad && self.first_violation.is_none() {
            self.first_violation = Some(v.level);
        }
        let inside = gsq <= 2.0 * self.rho0 * self.rho0;
        match (self.entry_level, inside) {
            (None, true) => self.entry_level = Some(v.level),
            (Some(_), false) => self.exit_after_entry = Some(v.level),
            _ => {}
        }
        self.steps_checked += 1;
        Ok(())
    }
}

/// Per-step a-priori inequality
/// 2‖ωⁿ⁺¹‖² + νk‖∇ωⁿ⁺¹‖² ≤ ((4‖ωⁿ‖ + ‖ωⁿ⁻¹‖)/2 + k|fⁿ⁺¹|_{H⁻¹})² + (kĈ_w²/ν)(2‖ωⁿ‖ + ‖ωⁿ⁻¹‖)⁴,
/// checked for n ≥ 1. Violations are counted, never fatal.
#[derive(Debug, Clone)]
pub struct AprioriMonitor {
    cw: f64,
    prev: Option<(usize, f64)>,
    pub checked: u64,
    pub violations: Vec<usize>,
    /// Largest lhs / rhs seen.
    pub max_ratio: f64,
}

impl AprioriMonitor {
    pub fn new(cw_estimate: f64) -> Self {
        Self {
            cw: cw_estimate,
            prev: None,
            checked: 0,
            violations: Vec::new(),
            max_ratio: 0.0,
        }
    }
}

impl Monitor for AprioriMonitor {
    fn record(&mut self, v: &StepView) -> Result<()> {
        let older_norm = v.older.norm();
        if let Some((lvl, oldest)) = self.prev {
            if lvl + 1 == v.level && v.level >= 2 {
                let new_sq = v.newer.norm_sq();
                let grad_sq = sobolev_norm(v.newer, 1.0).powi(2);
                let lhs = 2.0 * new_sq + v.nu * v.k * grad_sq;
                let a = 0.5 * (4.0 * older_norm + oldest) + v.k * sobolev_norm(v.forcing, -1.0);
                let b = 2.0 * older_norm + oldest;
                let rhs = a * a + v.k * self.cw * self.cw / v.nu * b.powi(4);
                let ratio = if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
                self.max_ratio = self.max_ratio.max(ratio);
                if lhs > rhs * (1.0 + 1e-12) {
                    self.violations.push(v.level);
                }
                self.checked += 1;
            }
        }
        self.prev = Some((v.level, older_norm));
        Ok(())
    }
}

/// Tracks the step restriction 32Ĉ_w² max{gⁿ, gⁿ⁻¹, 2β} k ≤ ν with
/// gⁿ = ‖V_n‖²_{G(0)} and β = (1+λ)ρ₀²/C_l.
#[derive(Debug, Clone)]
pub struct StepRestrictionMonitor {
    cw: f64,
    beta: f64,
    prev_g: Option<f64>,
    pub first_satisfied: Option<usize>,
    /// Levels after the first satisfied one at which it failed.
    pub lapses: Vec<usize>,
}

impl StepRestrictionMonitor {
    pub fn new(cw_estimate: f64, rho0: f64, lambda: f64) -> Result<Self> {
        let (cl, _) = g_equivalence_constants(0.0)?;
        Ok(Self {
            cw: cw_estimate,
            beta: (1.0 + lambda) * rho0 * rho0 / cl,
            prev_g: None,
            first_satisfied: None,
            lapses: Vec::new(),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl Monitor for StepRestrictionMonitor {
    fn record(&mut self, v: &StepView) -> Result<()> {
        let g = v.g_norm_sq(0.0);
        if let Some(gp) = self.prev_g {
            let m = g.max(gp).max(2.0 * self.beta);
            let ok = 32.0 * self.cw * self.cw * m * v.k <= v.nu;
            match (self.first_satisfied, ok) {
                (None, true) => self.first_satisfied = Some(v.level),
                (Some(_), false) => self.lapses.push(v.level),
                _ => {}
            }
        }
        self.prev_g = Some(g);
        Ok(())
    }
}

/// Running suprema of ‖∇ω‖ and ‖Δω‖ from a given level on; these are the
/// fitted constants for the higher-norm envelopes.
#[derive(Debug, Clone, Default)]
pub struct HigherNormMonitor {
    pub from_level: usize,
    pub sup_h1: f64,
    pub sup_h2: f64,
}

impl HigherNormMonitor {
    pub fn new(from_level: usize) -> Self {
        Self {
            from_level,
            ..Self::default()
        }
    }
}

impl Monitor for HigherNormMonitor {
    fn record(&mut self, v: &StepView) -> Result<()> {
        if v.level >= self.from_level {
            self.sup_h1 = self.sup_h1.max(sobolev_norm(v.newer, 1.0));
            self.sup_h2 = self.sup_h2.max(sobolev_norm(v.newer, 2.0));
        }
        Ok(())
    }
}

/// Maxima of the consistency gap (‖ωⁿ⁺¹ − ωⁿ‖, √k‖∇(ωⁿ⁺¹ − ωⁿ)‖) over
/// every level from `from_level` on.
#[derive(Debug, Clone, Default)]
pub struct GapMaxMonitor {
    pub from_level: usize,
    pub max_l2: f64,
    pub max_h1: f64,
    pub samples: u64,
}

impl GapMaxMonitor {
    pub fn new(from_level: usize) -> Self {
        Self {
            from_level,
            ..Self::default()
        }
    }
}

impl Monitor for GapMaxMonitor {
    fn record(&mut self, v: &StepView) -> Result<()> {
        if v.level >= self.from_level {
            let d = v.newer - v.older;
            self.max_l2 = self.max_l2.max(d.norm());
            self.max_h1 = self.max_h1.max(v.k.sqrt() * sobolev_norm(&d, 1.0));
            self.samples += 1;
        }
        Ok(())
    }
}

/// Writes a checkpoint `ckpt_<level>.v2dc` into `dir` every `every` levels.
pub struct CheckpointWriter {
    dir: PathBuf,
    every: usize,
    last: Option<PathBuf>,
}

impl CheckpointWriter {
    pub fn new(dir: impl Into<PathBuf>, every: usize) -> Self {
        Self {
            dir: dir.into(),
            every,
            last: None,
        }
    }

    pub fn path_for(dir: &Path, level: usize) -> PathBuf {
        dir.join(format!("ckpt_{level:010}.v2dc"))
    }
}

impl Monitor for CheckpointWriter {
    fn record(&mut self, v: &StepView) -> Result<()> {
        if self.every == 0 || v.level % self.every != 0 {
            return Ok(());
        }
        let path = Self::path_for(&self.dir, v.level);
        let pair = StatePair {
            older: v.older.clone(),
            newer: v.newer.clone(),
        };
        checkpoint_write(&path, &pair, v.level as u64)?;
        self.last = Some(path);
        Ok(())
    }

    fn last_checkpoint(&self) -> Option<PathBuf> {
        self.last.clone()
    }
}
