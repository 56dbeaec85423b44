//! Flat `key=value` configuration with `#` comments, and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::init::random_initial_field;
use crate::manufactured::Manufactured;
use crate::snapshot::read_snapshot;
use crate::stats::ProbeMode;
use crate::stepper::{Bootstrap, Forcing, Nonlinearity, SolverConfig};

/// Spatial forcing profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingKind {
    Zero,
    /// A sin x sin y.
    SinSin,
    /// A sin(k_f y).
    Kolmogorov,
    /// A times a unit-norm sum of all modes with round(|κ|) = k_f and fixed
    /// pseudo-random phases.
    Ring,
    TaylorGreen,
    TwoMode,
}

impl ForcingKind {
    pub fn name(self) -> &'static str {
        match self {
            ForcingKind::Zero => "zero",
            ForcingKind::SinSin => "sinsin",
            ForcingKind::Kolmogorov => "kolmogorov",
            ForcingKind::Ring => "ring",
            ForcingKind::TaylorGreen => "taylor-green",
            ForcingKind::TwoMode => "two-mode",
        }
    }
}

impl FromStr for ForcingKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "zero" => ForcingKind::Zero,
            "sinsin" => ForcingKind::SinSin,
            "kolmogorov" => ForcingKind::Kolmogorov,
            "ring" => ForcingKind::Ring,
            "taylor-green" => ForcingKind::TaylorGreen,
            "two-mode" => ForcingKind::TwoMode,
            _ => {
                return Err(format!(
                    "unknown forcing `{s}` (zero|sinsin|kolmogorov|ring|taylor-green|two-mode)"
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Zero,
    SinSin,
    Random,
    /// First field of the snapshot named by `init_file`.
    File,
    /// Exact solution of the manufactured forcing at t = 0.
    Exact,
}

impl InitKind {
    pub fn name(self) -> &'static str {
        match self {
            InitKind::Zero => "zero",
            InitKind::SinSin => "sinsin",
            InitKind::Random => "random",
            InitKind::File => "file",
            InitKind::Exact => "exact",
        }
    }
}

impl FromStr for InitKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "zero" => InitKind::Zero,
            "sinsin" => InitKind::SinSin,
            "random" => InitKind::Random,
            "file" => InitKind::File,
            "exact" => InitKind::Exact,
            _ => return Err(format!("unknown init `{s}` (zero|sinsin|random|file|exact)")),
        })
    }
}

/// Every configuration key with its default. Flags on the command line use
/// the same names with `-` in place of `_`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub nu: f64,
    pub k: f64,
    pub n: usize,
    pub steps: usize,
    pub nonlinearity: Nonlinearity,
    pub bootstrap: Bootstrap,
    pub cw: f64,
    pub seed: u64,
    pub forcing: ForcingKind,
    pub forcing_amplitude: f64,
    pub forcing_wavenumber: usize,
    pub init: InitKind,
    pub init_slope: f64,
    pub init_amplitude: f64,
    pub init_file: String,
    pub out_dir: PathBuf,
    pub every: usize,
    pub spectrum_every: usize,
    pub checkpoint_every: usize,
    /// `None` means ⌈T₀/k⌉ + 20%.
    pub burn_in: Option<usize>,
    pub probes: Vec<ProbeMode>,
    pub resume: String,
    pub soak_ratio: f64,
    pub scan_nu: Vec<f64>,
    pub scan_k: Vec<f64>,
    pub converge_ks: Vec<f64>,
    pub horizon: f64,
    pub wente_samples: usize,
    pub wente_n: Vec<usize>,
    pub wente_kmax: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            nu: 0.1,
            k: 1e-3,
            n: 64,
            steps: 1000,
            nonlinearity: Nonlinearity::GalerkinDealiased,
            bootstrap: Bootstrap::SemiImplicitEuler,
            cw: 1.0,
            seed: 0,
            forcing: ForcingKind::Zero,
            forcing_amplitude: 0.2,
            forcing_wavenumber: 4,
            init: InitKind::SinSin,
            init_slope: -1.0,
            init_amplitude: 1.0,
            init_file: String::new(),
            out_dir: PathBuf::from("out"),
            every: 10,
            spectrum_every: 0,
            checkpoint_every: 0,
            burn_in: None,
            probes: vec![
                ProbeMode { k: 1, l: 1 },
                ProbeMode { k: 1, l: 2 },
                ProbeMode { k: 2, l: 1 },
            ],
            resume: String::new(),
            soak_ratio: 2.0,
            scan_nu: vec![0.01, 0.05, 0.1],
            scan_k: vec![1e-3, 1e-2, 1e-1, 5e-1],
            converge_ks: vec![4e-3, 2e-3, 1e-3, 5e-4],
            horizon: 1.0,
            wente_samples: 1000,
            wente_n: vec![64, 128],
            wente_kmax: 10,
        }
    }
}

pub const KEYS: [&str; 30] = [
    "nu",
    "k",
    "N",
    "steps",
    "nonlinearity",
    "bootstrap",
    "cw",
    "seed",
    "forcing",
    "forcing_amplitude",
    "forcing_wavenumber",
    "init",
    "init_slope",
    "init_amplitude",
    "init_file",
    "out_dir",
    "every",
    "spectrum_every",
    "checkpoint_every",
    "burn_in",
    "probes",
    "resume",
    "soak_ratio",
    "scan_nu",
    "scan_k",
    "converge_ks",
    "horizon",
    "wente_samples",
    "wente_n",
    "wente_kmax",
];

/// Canonical key for `key`, accepting `-` for `_` and the aliases
/// `grid_n` for `N` and `cw_estimate` for `cw`.
pub fn canonical_key(key: &str) -> Option<&'static str> {
    let k = key.replace('-', "_");
    match k.as_str() {
        "grid_n" | "n" => return Some("N"),
        "cw_estimate" => return Some("cw"),
        _ => {}
    }
    KEYS.iter().copied().find(|c| *c == k)
}

type Parsed<T> = std::result::Result<T, String>;

fn real(v: &str) -> Parsed<f64> {
    let x: f64 = v.parse().map_err(|_| format!("expected a number, got `{v}`"))?;
    if !x.is_finite() {
        return Err(format!("expected a finite number, got `{v}`"));
    }
    Ok(x)
}

fn positive(v: &str) -> Parsed<f64> {
    let x = real(v)?;
    if x <= 0.0 {
        return Err(format!("must be > 0, got {x}"));
    }
    Ok(x)
}

fn count(v: &str) -> Parsed<usize> {
    v.parse().map_err(|_| format!("expected a non-negative integer, got `{v}`"))
}

fn list<T>(v: &str, item: impl Fn(&str) -> Parsed<T>) -> Parsed<Vec<T>> {
    let out: Parsed<Vec<T>> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect();
    let out = out?;
    if out.is_empty() {
        return Err("expected a non-empty comma-separated list".into());
    }
    Ok(out)
}

fn grid_size(v: &str) -> Parsed<usize> {
    let n = count(v)?;
    if n % 2 != 0 {
        return Err(format!("N must be even, got {n}"));
    }
    if n < 8 {
        return Err(format!("N must be >= 8, got {n}"));
    }
    Ok(n)
}

fn probe(v: &str) -> Parsed<ProbeMode> {
    let (a, b) = v
        .split_once(':')
        .ok_or_else(|| format!("expected `k:l`, got `{v}`"))?;
    let k = a.trim().parse().map_err(|_| format!("bad wavenumber `{a}`"))?;
    let l = b.trim().parse().map_err(|_| format!("bad wavenumber `{b}`"))?;
    if k == 0 && l == 0 {
        return Err("probe 0:0 is the mean mode".into());
    }
    Ok(ProbeMode { k, l })
}

fn fmt_list<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Sets one key from its textual value, validating it.
    pub fn set(&mut self, key: &str, value: &str) -> Parsed<()> {
        let canon = canonical_key(key).ok_or_else(|| format!("unknown key `{key}`"))?;
        let v = value.trim();
        match canon {
            "nu" => self.nu = positive(v)?,
            "k" => self.k = positive(v)?,
            "N" => self.n = grid_size(v)?,
            "steps" => self.steps = count(v)?,
            "nonlinearity" => self.nonlinearity = v.parse().map_err(|e: Error| e.to_string())?,
            "bootstrap" => self.bootstrap = v.parse().map_err(|e: Error| e.to_string())?,
            "cw" => self.cw = positive(v)?,
            "seed" => self.seed = v.parse().map_err(|_| format!("expected an unsigned integer, got `{v}`"))?,
            "forcing" => self.forcing = v.parse()?,
            "forcing_amplitude" => self.forcing_amplitude = real(v)?,
            "forcing_wavenumber" => {
                self.forcing_wavenumber = count(v)?;
                if self.forcing_wavenumber == 0 {
                    return Err("must be >= 1".into());
                }
            }
            "init" => self.init = v.parse()?,
            "init_slope" => self.init_slope = real(v)?,
            "init_amplitude" => {
                self.init_amplitude = real(v)?;
                if self.init_amplitude < 0.0 {
                    return Err("must be >= 0".into());
                }
            }
            "init_file" => self.init_file = v.to_string(),
            "out_dir" => self.out_dir = PathBuf::from(v),
            "every" => self.every = count(v)?,
            "spectrum_every" => self.spectrum_every = count(v)?,
            "checkpoint_every" => self.checkpoint_every = count(v)?,
            "burn_in" => self.burn_in = if v == "auto" { None } else { Some(count(v)?) },
            "probes" => {
                self.probes = if v.is_empty() || v == "none" { Vec::new() } else { list(v, probe)? }
            }
            "resume" => self.resume = v.to_string(),
            "soak_ratio" => self.soak_ratio = positive(v)?,
            "scan_nu" => self.scan_nu = list(v, positive)?,
            "scan_k" => self.scan_k = list(v, positive)?,
            "converge_ks" => self.converge_ks = list(v, positive)?,
            "horizon" => self.horizon = positive(v)?,
            "wente_samples" => self.wente_samples = count(v)?,
            "wente_n" => self.wente_n = list(v, grid_size)?,
            "wente_kmax" => self.wente_kmax = count(v)?,
            _ => unreachable!("canonical key {canon} has no setter"),
        }
        Ok(())
    }

    /// Resolved configuration, one `key=value` per line in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        put("nu", self.nu.to_string());
        put("k", self.k.to_string());
        put("N", self.n.to_string());
        put("steps", self.steps.to_string());
        put("nonlinearity", self.nonlinearity.name().into());
        put("bootstrap", self.bootstrap.name().into());
        put("cw", self.cw.to_string());
        put("seed", self.seed.to_string());
        put("forcing", self.forcing.name().into());
        put("forcing_amplitude", self.forcing_amplitude.to_string());
        put("forcing_wavenumber", self.forcing_wavenumber.to_string());
        put("init", self.init.name().into());
        put("init_slope", self.init_slope.to_string());
        put("init_amplitude", self.init_amplitude.to_string());
        put("init_file", self.init_file.clone());
        put("out_dir", self.out_dir.display().to_string());
        put("every", self.every.to_string());
        put("spectrum_every", self.spectrum_every.to_string());
        put("checkpoint_every", self.checkpoint_every.to_string());
        put(
            "burn_in",
            self.burn_in.map_or("auto".to_string(), |b| b.to_string()),
        );
        put(
            "probes",
            self.probes
                .iter()
                .map(|p| format!("{}:{}", p.k, p.l))
                .collect::<Vec<_>>()
                .join(","),
        );
        put("resume", self.resume.clone());
        put("soak_ratio", self.soak_ratio.to_string());
        put("scan_nu", fmt_list(&self.scan_nu));
        put("scan_k", fmt_list(&self.scan_k));
        put("converge_ks", fmt_list(&self.converge_ks));
        put("horizon", self.horizon.to_string());
        put("wente_samples", self.wente_samples.to_string());
        put("wente_n", fmt_list(&self.wente_n));
        put("wente_kmax", self.wente_kmax.to_string());
        s
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.n).expect("N validated on parse")
    }

    /// The steady or manufactured forcing described by the config.
    pub fn forcing_spec(&self) -> Forcing {
        let g = self.grid();
        let a = self.forcing_amplitude;
        let kf = self.forcing_wavenumber as f64;
        match self.forcing {
            ForcingKind::Zero => Forcing::Zero,
            ForcingKind::SinSin => Forcing::Steady(SpectralField::from_fn(g, |x, y| a * x.sin() * y.sin())),
            ForcingKind::Kolmogorov => Forcing::Steady(SpectralField::from_fn(g, |_, y| a * (kf * y).sin())),
            ForcingKind::Ring => Forcing::Steady(ring_forcing(g, self.forcing_wavenumber, a)),
            ForcingKind::TaylorGreen => Forcing::Manufactured(Manufactured::TaylorGreen),
            ForcingKind::TwoMode => Forcing::Manufactured(Manufactured::TwoMode),
        }
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig::new(self.nu, self.k, self.grid())?
            .with_nonlinearity(self.nonlinearity)
            .with_bootstrap(self.bootstrap)
            .with_forcing(self.forcing_spec())
            .with_steps(self.steps)
            .with_cw(self.cw);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn initial_field(&self) -> Result<SpectralField> {
        let g = self.grid();
        match self.init {
            InitKind::Zero => Ok(SpectralField::zeros(g)),
            InitKind::SinSin => {
                let w = SpectralField::from_fn(g, |x, y| x.sin() * y.sin());
                Ok(w.scaled(self.init_amplitude / std::f64::consts::PI))
            }
            InitKind::Random => random_initial_field(self.seed, self.n, self.init_slope, self.init_amplitude),
            InitKind::File => {
                let fields = read_snapshot(Path::new(&self.init_file))?;
                let f = fields.into_iter().next().expect("snapshot holds at least one field");
                if f.grid() != g {
                    return Err(Error::GridMismatch {
                        left: g.n(),
                        right: f.grid().n(),
                    });
                }
                Ok(f)
            }
            InitKind::Exact => match self.forcing_spec() {
                Forcing::Manufactured(m) => Ok(m.exact(g, self.nu, 0.0)),
                _ => Err(Error::Flag {
                    key: "init".into(),
                    message: "`exact` needs a manufactured forcing".into(),
                }),
            },
        }
    }
}

/// Unit-norm sum of the modes with round(|κ|) = `kf`, phases drawn from a
/// fixed generator so the profile depends only on `kf`.
pub fn ring_forcing(grid: Grid, kf: usize, amplitude: f64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7269_6e67 ^ kf as u64);
    let km = kf as i64 + 1;
    let mut modes = Vec::new();
    for k in -km..=km {
        for l in 0..=km {
            if l == 0 && k <= 0 {
                continue;
            }
            let phase: f64 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
            let r = ((k * k + l * l) as f64).sqrt().round() as usize;
            if r == kf {
                modes.push((k, l, Complex64::from_polar(1.0, phase)));
            }
        }
    }
    let f = SpectralField::from_modes(grid, &modes);
    let norm = f.norm();
    f.scaled(amplitude / norm)
}

/// Parses configuration text over the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    apply_text(&mut cfg, text)?;
    Ok(cfg)
}

/// Applies configuration text on top of `cfg`.
pub fn apply_text(cfg: &mut RunConfig, text: &str) -> Result<()> {
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            message: format!("expected key=value, got `{content}`"),
        })?;
        cfg.set(key.trim(), value)
            .map_err(|message| Error::Config { line, message })?;
    }
    Ok(())
}

/// Applies `(key, value)` overrides, e.g. from command-line flags.
pub fn apply_overrides<'a>(cfg: &mut RunConfig, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
    for (key, value) in pairs {
        cfg.set(key, value).map_err(|message| Error::Flag {
            key: key.to_string(),
            message,
        })?;
    }
    Ok(())
}

/// Resolved config plus provenance of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: RunConfig,
    pub command: String,
    pub version: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Extra derived values (ρ₀, effective k, …) as key/value pairs.
    pub derived: Vec<(String, String)>,
    pub started_unix: u64,
    pub wall_seconds: f64,
}

impl RunManifest {
    pub fn new(config: RunConfig, command: &str) -> Self {
        let started_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            config,
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            derived: Vec::new(),
            started_unix,
            wall_seconds: 0.0,
        }
    }

    pub fn derive(&mut self, key: &str, value: impl ToString) {
        self.derived.push((key.to_string(), value.to_string()));
    }

    /// Config lines followed by `meta.*` lines.
    pub fn to_text(&self) -> String {
        let mut s = self.config.to_text();
        let _ = writeln!(s, "meta.command={}", self.command);
        let _ = writeln!(s, "meta.version={}", self.version);
        let _ = writeln!(s, "meta.seed={}", self.config.seed);
        let _ = writeln!(s, "meta.inputs={}", self.inputs.join(","));
        let _ = writeln!(s, "meta.outputs={}", self.outputs.join(","));
        for (k, v) in &self.derived {
            let _ = writeln!(s, "meta.{k}={v}");
        }
        let _ = writeln!(s, "meta.started_unix={}", self.started_unix);
        let _ = writeln!(s, "meta.wall_seconds={}", self.wall_seconds);
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Splits manifest text into its config and `meta.*` entries.
pub fn parse_manifest(text: &str) -> Result<(RunConfig, Vec<(String, String)>)> {
    let mut config_lines = String::new();
    let mut meta = Vec::new();
    for line in text.lines() {
        match line.trim().strip_prefix("meta.") {
            Some(rest) => {
                let (k, v) = rest.split_once('=').unwrap_or((rest, ""));
                meta.push((k.to_string(), v.to_string()));
                config_lines.push('\n');
            }
            None => {
                config_lines.push_str(line);
                config_lines.push('\n');
            }
        }
    }
    Ok((parse_config(&config_lines)?, meta))
}

pub fn meta_value<'a>(meta: &'a [(String, String)], key: &str) -> Option<&'a str> {
    meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}
