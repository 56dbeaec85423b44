//! Experiment drivers behind the command-line subcommands. Each writes its
//! outputs under `out_dir` together with a resolved manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    absorbing_time, default_burn_in, fit_power_law, fitted_consistency_constant, l2_envelope,
    observed_orders, rho0,
};
use crate::config::{meta_value, parse_manifest, RunConfig, RunManifest};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::init::band_limited_field;
use crate::monitors::{
    AprioriMonitor, CheckpointWriter, GBoundMonitor, GapMaxMonitor, Monitor, SeriesRecorder,
    StatsMonitor, StepRestrictionMonitor,
};
use crate::nonlinear::{wente_ratios, WenteVariant};
use crate::norms::{g_equivalence_constants, g_norm_sq, sobolev_norm, GWeight, StatePair};
use crate::par;
use crate::snapshot::{checkpoint_read, write_snapshot};
use crate::spectrum::shell_spectrum;
use crate::stats::{block_bootstrap, BootstrapCi, ObservationRow, SCALAR_NAMES};
use crate::stepper::{bootstrap_first_step, max_stable_timestep, run, Forcing, RunReport, RunStart, SolverConfig};

pub const MANIFEST: &str = "manifest.txt";
pub const SERIES: &str = "series.csv";

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn finish_manifest(m: &mut RunManifest, clock: Instant, dir: &Path) -> Result<()> {
    m.wall_seconds = clock.elapsed().as_secs_f64();
    m.write(&dir.join(MANIFEST))
}

/// |f|_{H⁻¹} of a steady forcing, `None` for time-dependent forcing.
pub fn steady_forcing_hm1(cfg: &SolverConfig) -> Option<f64> {
    match &cfg.forcing {
        Forcing::Zero => Some(0.0),
        Forcing::Steady(f) => Some(sobolev_norm(f, -1.0)),
        _ => None,
    }
}

fn auto_burn_in(cfg: &SolverConfig, omega0: &SpectralField) -> usize {
    let Some(fh) = steady_forcing_hm1(cfg) else {
        return 0;
    };
    let Ok(r) = rho0(fh, cfg.nu) else { return 0 };
    let pair = StatePair {
        older: omega0.clone(),
        newer: omega0.clone(),
    };
    let v0 = g_norm_sq(&pair, GWeight::new(cfg.nu * cfg.k).expect("positive")).unwrap_or(0.0).sqrt();
    match absorbing_time(v0, r, cfg.nu) {
        Ok(t0) => default_burn_in(t0, cfg.k),
        Err(_) => 0,
    }
}

/// Result of the `run` driver.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub manifest: RunManifest,
    pub summary: String,
}

/// One simulation: series CSV, optional checkpoints, statistics summary and
/// final snapshot.
pub fn run_simulation(rc: &RunConfig) -> Result<RunOutcome> {
    let clock = Instant::now();
    let cfg = rc.solver_config()?;
    let dir = rc.out_dir.clone();
    prepare_dir(&dir)?;
    let mut manifest = RunManifest::new(rc.clone(), "run");

    let (start, omega0) = if rc.resume.is_empty() {
        let w = rc.initial_field()?;
        (RunStart::Fresh(w.clone()), w)
    } else {
        let ck = checkpoint_read(Path::new(&rc.resume), Some(cfg.grid))?;
        manifest.inputs.push(rc.resume.clone());
        let w = ck.pair.newer.clone();
        (
            RunStart::Resume {
                pair: ck.pair,
                level: ck.step as usize,
            },
            w,
        )
    };
    if rc.init == crate::config::InitKind::File {
        manifest.inputs.push(rc.init_file.clone());
    }
    let burn_in = rc.burn_in.unwrap_or_else(|| auto_burn_in(&cfg, &omega0));
    manifest.derive("burn_in_steps", burn_in);

    let series_path = dir.join(SERIES);
    let append = !rc.resume.is_empty() && series_path.exists();
    let mut series = SeriesRecorder::to_csv(&series_path, rc.every, rc.probes.clone(), append)?;
    let mut stats = StatsMonitor::new(burn_in, rc.every.max(1), rc.spectrum_every, rc.probes.clone());
    let ckpt_dir = dir.join("checkpoints");
    if rc.checkpoint_every > 0 {
        prepare_dir(&ckpt_dir)?;
    }
    let mut ckpt = CheckpointWriter::new(&ckpt_dir, rc.checkpoint_every);
    manifest.outputs.push(series_path.display().to_string());

    let result = {
        let mut monitors: Vec<&mut dyn Monitor> = vec![&mut series, &mut stats, &mut ckpt];
        run(&cfg, start, &mut monitors)
    };
    series.flush()?;
    let report = result?;

    let final_path = dir.join("final.v2df");
    write_snapshot(&final_path, &[report.pair.older.clone(), report.pair.newer.clone()])?;
    manifest.outputs.push(final_path.display().to_string());

    let summary = stats_summary(&stats, rc.seed);
    fs::write(dir.join("summary.txt"), &summary)?;
    if rc.spectrum_every > 0 {
        let mut s = String::from("kappa,value\n");
        for (kappa, v) in stats.acc.mean_spectrum().iter().enumerate() {
            let _ = writeln!(s, "{kappa},{v:.17e}");
        }
        fs::write(dir.join("spectrum.csv"), s)?;
    }
    if let Some(fh) = steady_forcing_hm1(&cfg) {
        manifest.derive("f_hm1", fh);
        manifest.derive("rho0", rho0(fh, cfg.nu)?);
    }
    manifest.derive("final_level", report.level);
    finish_manifest(&mut manifest, clock, &dir)?;
    Ok(RunOutcome {
        report,
        manifest,
        summary,
    })
}

fn stats_summary(stats: &StatsMonitor, seed: u64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "samples={}", stats.acc.samples());
    for (i, name) in SCALAR_NAMES.iter().enumerate() {
        let acc = stats.acc.scalar(name).expect("known name");
        let ci = block_bootstrap(&stats.column(i), 0, 200, seed);
        let _ = writeln!(
            s,
            "{name}.mean={:.12e}\n{name}.variance={:.12e}\n{name}.sigma_mean={:.6e}",
            acc.mean(),
            acc.variance(),
            ci.sigma
        );
    }
    for (i, m) in stats.acc.mode_means().iter().enumerate() {
        let _ = writeln!(s, "mode{i}.mean={m:.12e}");
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Stable,
    Blowup,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanCell {
    pub nu: f64,
    pub k: f64,
    pub status: CellStatus,
    pub final_norm: f64,
    pub blowup_step: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub cells: Vec<ScanCell>,
    /// (ν, k) cells that are stable although a smaller k at the same ν blew up.
    pub non_monotone: Vec<(f64, f64)>,
}

fn scan_cell(rc: &RunConfig, nu: f64, k: f64) -> Result<ScanCell> {
    let mut c = rc.clone();
    c.nu = nu;
    c.k = k;
    let cfg = c.solver_config()?;
    let omega0 = c.initial_field()?;
    Ok(match run(&cfg, RunStart::Fresh(omega0), &mut []) {
        Ok(r) => ScanCell {
            nu,
            k,
            status: CellStatus::Stable,
            final_norm: r.pair.newer.norm(),
            blowup_step: None,
        },
        Err(Error::Blowup { step, .. }) => ScanCell {
            nu,
            k,
            status: CellStatus::Blowup,
            final_norm: f64::NAN,
            blowup_step: Some(step),
        },
        Err(e) => return Err(e),
    })
}

fn scan_row(c: &ScanCell) -> String {
    format!(
        "{},{},{},{:.17e},{}",
        c.nu,
        c.k,
        match c.status {
            CellStatus::Stable => "STABLE",
            CellStatus::Blowup => "BLOWUP",
        },
        c.final_norm,
        c.blowup_step.map_or(String::new(), |s| s.to_string())
    )
}

pub const SCAN_HEADER: &str = "nu,k,status,final_norm,blowup_step";

/// Finds cells that break "stable at k ⇒ stable at every smaller k".
pub fn monotonicity_findings(cells: &[ScanCell]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for c in cells.iter().filter(|c| c.status == CellStatus::Stable) {
        if cells
            .iter()
            .any(|d| d.nu == c.nu && d.k < c.k && d.status == CellStatus::Blowup)
        {
            out.push((c.nu, c.k));
        }
    }
    out
}

/// Classifies every (ν, k) cell of `scan_nu × scan_k` as stable or blown up
/// after `steps` steps. Cells run independently in parallel, each writing
/// its own file; the table is assembled afterwards.
pub fn scan(rc: &RunConfig) -> Result<ScanReport> {
    let clock = Instant::now();
    let dir = rc.out_dir.clone();
    let cell_dir = dir.join("cells");
    prepare_dir(&cell_dir)?;
    let mut jobs = Vec::new();
    for &nu in &rc.scan_nu {
        for &k in &rc.scan_k {
            jobs.push((jobs.len(), nu, k));
        }
    }
    let results = par::map(jobs, |(i, nu, k)| -> Result<ScanCell> {
        let cell = scan_cell(rc, nu, k)?;
        fs::write(
            cell_dir.join(format!("cell_{i:04}.csv")),
            format!("{SCAN_HEADER}\n{}\n", scan_row(&cell)),
        )?;
        Ok(cell)
    });
    let cells = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut table = format!("{SCAN_HEADER}\n");
    for c in &cells {
        table.push_str(&scan_row(c));
        table.push('\n');
    }
    fs::write(dir.join("scan.csv"), table)?;
    let non_monotone = monotonicity_findings(&cells);
    let mut findings = String::from("nu,k\n");
    for (nu, k) in &non_monotone {
        let _ = writeln!(findings, "{nu},{k}");
    }
    fs::write(dir.join("scan_findings.csv"), findings)?;
    let mut m = RunManifest::new(rc.clone(), "scan");
    m.outputs.push(dir.join("scan.csv").display().to_string());
    m.derive("non_monotone_cells", non_monotone.len());
    finish_manifest(&mut m, clock, &dir)?;
    Ok(ScanReport { cells, non_monotone })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergePoint {
    pub k: f64,
    pub steps: usize,
    pub error: f64,
}

/// Relative L² error at t = `horizon` against the manufactured solution,
/// starting from its exact initial value.
pub fn manufactured_error(cfg: &SolverConfig, horizon: f64) -> Result<ConvergePoint> {
    let Forcing::Manufactured(m) = &cfg.forcing else {
        return Err(Error::Flag {
            key: "forcing".into(),
            message: "convergence study needs taylor-green or two-mode forcing".into(),
        });
    };
    let steps = (horizon / cfg.k).round() as usize;
    if ((steps as f64) * cfg.k - horizon).abs() > 1e-9 * horizon {
        return Err(Error::Flag {
            key: "converge_ks".into(),
            message: format!("horizon {horizon} is not a multiple of k = {}", cfg.k),
        });
    }
    let mut c = cfg.clone();
    c.steps = steps;
    let w0 = m.exact(cfg.grid, cfg.nu, 0.0);
    let r = run(&c, RunStart::Fresh(w0), &mut [])?;
    let exact = m.exact(cfg.grid, cfg.nu, steps as f64 * cfg.k);
    Ok(ConvergePoint {
        k: cfg.k,
        steps,
        error: (&r.pair.newer - &exact).norm() / exact.norm(),
    })
}

/// Error-versus-k table for the manufactured solution over `converge_ks`.
pub fn converge(rc: &RunConfig) -> Result<Vec<ConvergePoint>> {
    let clock = Instant::now();
    let dir = rc.out_dir.clone();
    prepare_dir(&dir)?;
    let base = rc.solver_config()?;
    let jobs: Vec<SolverConfig> = rc
        .converge_ks
        .iter()
        .map(|&k| {
            let mut c = base.clone();
            c.k = k;
            c
        })
        .collect();
    let points = par::map(jobs, |c| manufactured_error(&c, rc.horizon))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = points.iter().map(|p| p.error).collect();
    let orders = observed_orders(&errors);
    let mut s = String::from("k,steps,error,order\n");
    for (i, p) in points.iter().enumerate() {
        let order = if i == 0 { String::new() } else { format!("{:.6}", orders[i - 1]) };
        let _ = writeln!(s, "{},{},{:.17e},{order}", p.k, p.steps, p.error);
    }
    fs::write(dir.join("converge.csv"), s)?;
    let mut m = RunManifest::new(rc.clone(), "converge");
    m.outputs.push(dir.join("converge.csv").display().to_string());
    finish_manifest(&mut m, clock, &dir)?;
    Ok(points)
}

/// Outcome of a long bound-verification run.
#[derive(Debug, Clone)]
pub struct SoakReport {
    pub k: f64,
    pub k0: f64,
    pub rho0: f64,
    pub v0_gnorm: f64,
    pub t0: f64,
    pub steps: usize,
    pub bounds: GBoundMonitor,
    pub apriori: AprioriMonitor,
    pub restriction: StepRestrictionMonitor,
    /// Whether the trajectory entered {‖V‖² ≤ 2ρ₀²} by 1.1·T₀ and stayed.
    /// `None` when the run is too short to decide.
    pub absorbed: Option<bool>,
}

impl SoakReport {
    pub fn passed(&self) -> bool {
        self.bounds.passed() && self.absorbed != Some(false) && self.restriction.lapses.is_empty()
    }

    pub fn summary(&self) -> String {
        let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let mut s = String::new();
        let _ = writeln!(s, "k={:e}\nk0={:e}\nrho0={:.12e}\nv0_gnorm={:.12e}", self.k, self.k0, self.rho0, self.v0_gnorm);
        let _ = writeln!(s, "absorbing_time={:.6e}\nsteps={}", self.t0, self.steps);
        let _ = writeln!(
            s,
            "invariant_ball {} max_ratio={:.15} violations={}",
            verdict(self.bounds.ball_violations == 0),
            self.bounds.max_ball_ratio,
            self.bounds.ball_violations
        );
        let _ = writeln!(
            s,
            "envelope {} max_ratio={:.15} violations={}",
            verdict(self.bounds.envelope_violations == 0),
            self.bounds.max_envelope_ratio,
            self.bounds.envelope_violations
        );
        let absorbed = match self.absorbed {
            Some(ok) => verdict(ok).to_string(),
            None => "NA".to_string(),
        };
        let _ = writeln!(
            s,
            "absorbing {absorbed} entry_level={} last_exit={}",
            self.bounds.entry_level.map_or("none".into(), |l| l.to_string()),
            self.bounds.exit_after_entry.map_or("none".into(), |l| l.to_string())
        );
        let _ = writeln!(
            s,
            "step_restriction {} first_satisfied={} lapses={}",
            verdict(self.restriction.lapses.is_empty()),
            self.restriction.first_satisfied.map_or("none".into(), |l| l.to_string()),
            self.restriction.lapses.len()
        );
        let _ = writeln!(
            s,
            "apriori INFO checked={} violations={} max_ratio={:.6}",
            self.apriori.checked,
            self.apriori.violations.len(),
            self.apriori.max_ratio
        );
        s
    }
}

/// Rescales `omega0` so that the bootstrapped pair has ‖V₀‖_{G(νk)} close
/// to `target`, with k = min(k₀, `k_cap`) recomputed as the norm changes.
/// Returns the scaled field, the step and the achieved norm.
pub fn calibrate_soak_start(
    base: &SolverConfig,
    omega0: &SpectralField,
    target: f64,
    r0: f64,
    k_cap: f64,
) -> Result<(SpectralField, f64, f64)> {
    let (_, cu) = g_equivalence_constants(0.0)?;
    let mut w = omega0.scaled(target / omega0.norm().max(f64::MIN_POSITIVE));
    let mut k = k_cap;
    let mut achieved = 0.0;
    for _ in 0..8 {
        let mut c = base.clone();
        c.k = k;
        let pair = bootstrap_first_step(&w, &c)?;
        achieved = g_norm_sq(&pair, GWeight::new(c.nu * k)?)?.sqrt();
        w = w.scaled(target / achieved);
        let m0 = g_norm_sq(&pair, GWeight::new(c.nu)?)?.sqrt() * (target / achieved);
        k = max_stable_timestep(c.nu, c.cw_estimate, cu, m0.max(r0))?.min(k_cap);
    }
    let mut c = base.clone();
    c.k = k;
    let pair = bootstrap_first_step(&w, &c)?;
    achieved = g_norm_sq(&pair, GWeight::new(c.nu * k)?).map(f64::sqrt).unwrap_or(achieved);
    Ok((w, k, achieved))
}

/// Long run with steady forcing checking the invariant ball, the decay
/// envelope, the absorbing property and the step restriction at every step.
/// The initial field is scaled to ‖V₀‖_{G(νk)} ≈ `soak_ratio`·ρ₀ and the step
/// is min(k₀, `k`).
pub fn soak(rc: &RunConfig) -> Result<SoakReport> {
    let clock = Instant::now();
    let base = rc.solver_config()?;
    let fh = steady_forcing_hm1(&base).ok_or_else(|| Error::Flag {
        key: "forcing".into(),
        message: "soak needs a steady forcing".into(),
    })?;
    let r0 = rho0(fh, base.nu)?;
    if r0 == 0.0 {
        return Err(Error::Flag {
            key: "forcing".into(),
            message: "soak needs a nonzero forcing (rho0 = 0)".into(),
        });
    }
    let omega0 = rc.initial_field()?;
    let (w0, k, v0) = calibrate_soak_start(&base, &omega0, rc.soak_ratio * r0, r0, rc.k)?;
    let (_, cu) = g_equivalence_constants(0.0)?;
    let mut cfg = base.clone();
    cfg.k = k;
    cfg.require_bound_regime()?;
    let pair = bootstrap_first_step(&w0, &cfg)?;
    let m0 = g_norm_sq(&pair, GWeight::new(cfg.nu)?)?.sqrt().max(r0);
    let k0 = max_stable_timestep(cfg.nu, cfg.cw_estimate, cu, m0)?;
    let t0 = absorbing_time(v0, r0, cfg.nu)?;

    let dir = rc.out_dir.clone();
    prepare_dir(&dir)?;
    let mut bounds = GBoundMonitor::with_rho0(r0);
    let mut apriori = AprioriMonitor::new(cfg.cw_estimate);
    let mut restriction = StepRestrictionMonitor::new(cfg.cw_estimate, r0, 0.5)?;
    let mut series = SeriesRecorder::to_csv(&dir.join(SERIES), rc.every, rc.probes.clone(), false)?;
    {
        let mut monitors: Vec<&mut dyn Monitor> = vec![&mut bounds, &mut apriori, &mut restriction, &mut series];
        run(&cfg, RunStart::Fresh(w0), &mut monitors)?;
    }
    series.flush()?;

    let deadline = 1.1 * t0 / k;
    let absorbed = match bounds.entry_level {
        Some(e) => Some(e as f64 <= deadline.max(1.0) && bounds.exit_after_entry.is_none()),
        None if (cfg.steps as f64) < deadline => None,
        None => Some(false),
    };
    let report = SoakReport {
        k,
        k0,
        rho0: r0,
        v0_gnorm: v0,
        t0,
        steps: cfg.steps,
        bounds,
        apriori,
        restriction,
        absorbed,
    };
    fs::write(dir.join("soak_summary.txt"), report.summary())?;
    let mut m = RunManifest::new(rc.clone(), "soak");
    m.config.k = k;
    m.derive("f_hm1", fh);
    m.derive("rho0", r0);
    m.derive("k0", k0);
    m.derive("v0_gnorm", v0);
    m.derive("absorbing_time", t0);
    m.outputs.push(dir.join(SERIES).display().to_string());
    finish_manifest(&mut m, clock, &dir)?;
    Ok(report)
}

/// Pass/fail verdicts from a finished run directory.
#[derive(Debug, Clone)]
pub struct AnalyzeReport {
    pub lines: Vec<(String, Option<bool>, String)>,
}

impl AnalyzeReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|(_, v, _)| *v != Some(false))
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        for (name, v, detail) in &self.lines {
            let verdict = match v {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "NA",
            };
            let _ = writeln!(s, "{name} {verdict} {detail}");
        }
        s
    }
}

/// Reads an observation CSV written by [`SeriesRecorder`].
pub fn read_series(path: &Path) -> Result<Vec<ObservationRow>> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let bad = |what: &str| Error::Config {
            line: i + 1,
            message: format!("{}: {what}", path.display()),
        };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 9 {
            return Err(bad("expected 9 columns"));
        }
        let num = |j: usize| cols[j].parse::<f64>().map_err(|_| bad("bad number"));
        rows.push(ObservationRow {
            level: cols[0].parse().map_err(|_| bad("bad step"))?,
            t: num(1)?,
            energy: num(2)?,
            enstrophy: num(3)?,
            palinstrophy: num(4)?,
            gap_l2: num(5)?,
            gap_h1: num(6)?,
            balance: num(7)?,
            gnorm_sq: num(8)?,
            modes: Vec::new(),
        });
    }
    Ok(rows)
}

/// Recomputes the bound envelopes for the series in `dir` from its
/// manifest, writes `envelope.csv` and `analyze_summary.txt`.
pub fn analyze(dir: &Path) -> Result<AnalyzeReport> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let (rc, meta) = parse_manifest(&text)?;
    let rows = read_series(&dir.join(SERIES))?;
    let cfg = rc.solver_config()?;
    let (nu, k) = (cfg.nu, cfg.k);
    let mut lines = Vec::new();

    let r0 = match meta_value(&meta, "rho0").and_then(|v| v.parse::<f64>().ok()) {
        Some(r) => Some(r),
        None => steady_forcing_hm1(&cfg).map(|fh| 2.0 * fh / nu),
    };
    let first = rows.iter().find(|r| r.level == 1);
    let mut env_csv = String::from("step,t,gnorm_sq,envelope,ball_sq,absorbing_sq\n");
    match (r0, first) {
        (Some(r0), Some(first)) if r0 > 0.0 => {
            let v0 = first.gnorm_sq;
            let ball = v0.max(r0 * r0) * (1.0 + 1e-9f64).powi(2);
            let mut ball_ok = true;
            let mut env_ok = true;
            let mut entry = None;
            let mut exit = None;
            for r in &rows {
                let n = (r.level - 1) as u64;
                let env = l2_envelope(n, nu, k, v0, r0);
                ball_ok &= r.gnorm_sq <= ball;
                env_ok &= r.gnorm_sq <= env * (1.0 + 1e-13);
                let inside = r.gnorm_sq <= 2.0 * r0 * r0;
                match (entry, inside) {
                    (None, true) => entry = Some(r.t),
                    (Some(_), false) => exit = Some(r.t),
                    _ => {}
                }
                let _ = writeln!(
                    env_csv,
                    "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                    r.level,
                    r.t,
                    r.gnorm_sq,
                    env,
                    ball,
                    2.0 * r0 * r0
                );
            }
            lines.push(("invariant_ball".into(), Some(ball_ok), String::new()));
            lines.push(("envelope".into(), Some(env_ok), String::new()));
            let t0 = absorbing_time(v0.sqrt(), r0, nu)?;
            let t_end = rows.last().map_or(0.0, |r| r.t);
            let absorbed = match entry {
                Some(t) => Some(t <= 1.1 * t0 + k && exit.is_none()),
                None if t_end < 1.1 * t0 => None,
                None => Some(false),
            };
            lines.push((
                "absorbing".into(),
                absorbed,
                format!("T0={t0:.6e} entry_t={}", entry.map_or("none".into(), |t| format!("{t:.6e}"))),
            ));
        }
        _ => {
            lines.push(("invariant_ball".into(), None, "needs steady nonzero forcing and a level-1 row".into()));
            lines.push(("envelope".into(), None, String::new()));
            lines.push(("absorbing".into(), None, String::new()));
        }
    }
    fs::write(dir.join("envelope.csv"), env_csv)?;

    let burn_in = meta_value(&meta, "burn_in_steps")
        .and_then(|v| v.parse::<usize>().ok())
        .or(rc.burn_in)
        .unwrap_or(0);
    let window: Vec<&ObservationRow> = rows.iter().filter(|r| r.level >= burn_in.max(1)).collect();
    if matches!(cfg.forcing, Forcing::Zero) || window.len() < 2 {
        lines.push(("energy_balance".into(), None, format!("samples={}", window.len())));
    } else {
        let balance: Vec<f64> = window.iter().map(|r| r.balance).collect();
        let ci = block_bootstrap(&balance, 0, 400, rc.seed);
        lines.push((
            "energy_balance".into(),
            Some(ci.mean <= 2.0 * ci.sigma),
            format!("mean={:.6e} sigma={:.6e} samples={}", ci.mean, ci.sigma, balance.len()),
        ));
    }
    let max_l2 = window.iter().map(|r| r.gap_l2).fold(0.0, f64::max);
    let max_h1 = window.iter().map(|r| r.gap_h1).fold(0.0, f64::max);
    lines.push((
        "consistency_gap".into(),
        None,
        format!("max_l2={max_l2:.6e} max_h1={max_h1:.6e} c_d={:.6e}", (max_l2 + max_h1) / k),
    ));
    let report = AnalyzeReport { lines };
    fs::write(dir.join("analyze_summary.txt"), report.text())?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WenteRow {
    pub variant: WenteVariant,
    pub n: usize,
    pub samples: usize,
    pub max_ratio: f64,
}

/// Largest Wente quotients over `samples` random pairs on an N grid. Sample
/// i uses a generator seeded from (`seed`, i), band limit `kmax` and a
/// slope drawn in [−2.5, 0.5], so the same sample set is drawn for every N.
pub fn wente_sample_max(n: usize, samples: usize, kmax: usize, seed: u64) -> Result<[f64; 5]> {
    let grid = Grid::new(n)?;
    let idx: Vec<usize> = (0..samples).collect();
    let per = par::map(idx, |i| -> Result<[f64; 5]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ i as u64);
        let s1 = -2.5 + 3.0 * rand::Rng::gen::<f64>(&mut rng);
        let s2 = -2.5 + 3.0 * rand::Rng::gen::<f64>(&mut rng);
        let psi = band_limited_field(&mut rng, grid, kmax, s1, 1.0, true)?;
        let phi = band_limited_field(&mut rng, grid, kmax, s2, 1.0, true)?;
        wente_ratios(&psi, &phi)
    });
    let mut best = [0.0f64; 5];
    for r in per {
        for (b, v) in best.iter_mut().zip(r?) {
            *b = b.max(v);
        }
    }
    Ok(best)
}

/// `wente-probe`: max quotient per variant and grid size.
pub fn wente_probe(rc: &RunConfig) -> Result<Vec<WenteRow>> {
    let clock = Instant::now();
    let dir = rc.out_dir.clone();
    prepare_dir(&dir)?;
    let mut rows = Vec::new();
    for &n in &rc.wente_n {
        let best = wente_sample_max(n, rc.wente_samples, rc.wente_kmax, rc.seed)?;
        for (variant, max_ratio) in WenteVariant::ALL.into_iter().zip(best) {
            rows.push(WenteRow {
                variant,
                n,
                samples: rc.wente_samples,
                max_ratio,
            });
        }
    }
    let mut s = String::from("variant,N,samples,max_ratio\n");
    for r in &rows {
        let _ = writeln!(s, "{},{},{},{:.17e}", r.variant, r.n, r.samples, r.max_ratio);
    }
    fs::write(dir.join("wente.csv"), s)?;
    let mut m = RunManifest::new(rc.clone(), "wente-probe");
    m.outputs.push(dir.join("wente.csv").display().to_string());
    finish_manifest(&mut m, clock, &dir)?;
    Ok(rows)
}

/// Sampling plan shared by the runs of a stationary-statistics study, in
/// physical time so that every k samples the same instants.
#[derive(Debug, Clone)]
pub struct StatPlan {
    pub horizon: f64,
    pub burn_in_time: f64,
    pub sample_dt: f64,
    pub resamples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct KStatistic {
    pub k: f64,
    pub ci: BootstrapCi,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct ObservableTrend {
    pub name: &'static str,
    pub per_k: Vec<KStatistic>,
    /// |avg(kᵢ) − avg(kᵢ₊₁)|.
    pub diffs: Vec<f64>,
    /// 2·√(σᵢ² + σᵢ₊₁²) for each difference.
    pub tolerances: Vec<f64>,
    pub pass: bool,
}

/// Post-burn-in maxima of the consistency gap for one k.
#[derive(Debug, Clone)]
pub struct GapStatistic {
    pub k: f64,
    pub max_l2: f64,
    pub max_h1: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub observables: Vec<ObservableTrend>,
    pub gaps: Vec<GapStatistic>,
    /// Fit max_l2 ≈ c·k^slope over the runs, when at least two are positive.
    pub gap_fit: Option<(f64, f64)>,
    /// max over runs of (max_l2 + max_h1)/k.
    pub c_d: f64,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.observables.iter().all(|o| o.pass)
    }

    pub fn observable(&self, name: &str) -> Option<&ObservableTrend> {
        self.observables.iter().find(|o| o.name == name)
    }

    /// Flat key=value summary.
    pub fn text(&self) -> String {
        let mut s = String::new();
        for o in &self.observables {
            for st in &o.per_k {
                let _ = writeln!(
                    s,
                    "{}.k{:e}.mean={:.12e}\n{}.k{:e}.sigma={:.6e}",
                    o.name, st.k, st.ci.mean, o.name, st.k, st.ci.sigma
                );
            }
            for (i, (d, t)) in o.diffs.iter().zip(&o.tolerances).enumerate() {
                let _ = writeln!(s, "{}.diff{i}={d:.6e}\n{}.tol{i}={t:.6e}", o.name, o.name);
            }
            let _ = writeln!(s, "{}.verdict={}", o.name, if o.pass { "PASS" } else { "FAIL" });
        }
        for g in &self.gaps {
            let _ = writeln!(s, "gap.k{:e}.max_l2={:.6e}\ngap.k{:e}.max_h1={:.6e}", g.k, g.max_l2, g.k, g.max_h1);
        }
        if let Some((c, p)) = self.gap_fit {
            let _ = writeln!(s, "gap.fit_coefficient={c:.6e}\ngap.fit_slope={p:.6}");
        }
        let _ = writeln!(s, "gap.c_d={:.6e}", self.c_d);
        s
    }
}

/// Time averages of every scalar observable for configurations that differ
/// only in k, at an equal physical horizon. An observable passes when the
/// differences between successive k shrink monotonically or each lies
/// within the combined 2σ interval.
pub fn stationary_stat_convergence(
    configs: &[SolverConfig],
    omega0: &SpectralField,
    plan: &StatPlan,
) -> Result<ConvergenceReport> {
    let jobs: Vec<SolverConfig> = configs.to_vec();
    let runs = par::map(jobs, |cfg| -> Result<(f64, StatsMonitor, GapMaxMonitor)> {
        let mut c = cfg.clone();
        c.steps = (plan.horizon / c.k).round() as usize;
        let every = ((plan.sample_dt / c.k).round() as usize).max(1);
        let burn = (plan.burn_in_time / c.k).round() as usize;
        let mut mon = StatsMonitor::new(burn, every, 0, Vec::new());
        let mut gap = GapMaxMonitor::new(burn);
        run(&c, RunStart::Fresh(omega0.clone()), &mut [&mut mon, &mut gap])?;
        Ok((c.k, mon, gap))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut observables = Vec::new();
    for (idx, name) in SCALAR_NAMES.iter().enumerate() {
        let per_k: Vec<KStatistic> = runs
            .iter()
            .map(|(k, mon, _)| {
                let col = mon.column(idx);
                KStatistic {
                    k: *k,
                    ci: block_bootstrap(&col, 0, plan.resamples, plan.seed),
                    samples: col.len(),
                }
            })
            .collect();
        let diffs: Vec<f64> = per_k.windows(2).map(|w| (w[0].ci.mean - w[1].ci.mean).abs()).collect();
        let tolerances: Vec<f64> = per_k
            .windows(2)
            .map(|w| 2.0 * (w[0].ci.sigma.powi(2) + w[1].ci.sigma.powi(2)).sqrt())
            .collect();
        let decreasing = diffs.windows(2).all(|d| d[1] <= d[0]);
        let within = diffs.iter().zip(&tolerances).all(|(d, t)| d <= t);
        observables.push(ObservableTrend {
            name,
            per_k,
            diffs,
            tolerances,
            pass: decreasing || within,
        });
    }
    let gaps: Vec<GapStatistic> = runs
        .iter()
        .map(|(k, _, g)| GapStatistic {
            k: *k,
            max_l2: g.max_l2,
            max_h1: g.max_h1,
        })
        .collect();
    let ks: Vec<f64> = gaps.iter().map(|g| g.k).collect();
    let l2: Vec<f64> = gaps.iter().map(|g| g.max_l2).collect();
    let h1: Vec<f64> = gaps.iter().map(|g| g.max_h1).collect();
    let gap_fit = fit_power_law(&ks, &l2).ok();
    let c_d = fitted_consistency_constant(&ks, &l2, &h1);
    Ok(ConvergenceReport {
        observables,
        gaps,
        gap_fit,
        c_d,
    })
}

/// Shell spectrum CSV of a field.
pub fn write_spectrum(path: &Path, omega: &SpectralField) -> Result<()> {
    let mut s = String::from("kappa,value\n");
    for (kappa, v) in shell_spectrum(omega) {
        let _ = writeln!(s, "{kappa},{v:.17e}");
    }
    fs::write(path, s)?;
    Ok(())
}
