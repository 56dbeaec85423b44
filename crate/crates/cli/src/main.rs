//! `ns2d`: experiment front-end for the 2D vorticity solver.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical blowup,
//! 4 invariant violation in `soak`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ns2d::config::{apply_overrides, apply_text, RunConfig};
use ns2d::experiments::{self, CellStatus};
use ns2d::Error;

#[derive(Parser)]
#[command(name = "ns2d", version, about = "BDF2/AB2 spectral solver for 2D vorticity dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run(Keys),
    /// Classify a grid of (nu, k) cells as STABLE or BLOWUP.
    Scan(Keys),
    /// Manufactured-solution error versus time step.
    Converge(Keys),
    /// Long run checking the uniform bounds at every step.
    Soak(Keys),
    /// Recompute envelopes and verdicts for a finished run directory.
    Analyze {
        /// Run directory holding manifest.txt and series.csv.
        dir: PathBuf,
    },
    /// Empirical Wente constants across grid sizes.
    WenteProbe(Keys),
}

/// `--config FILE` followed by one flag per configuration key.
#[derive(Args, Default)]
struct Keys {
    /// Flat key=value configuration file, applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nu: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// Grid size N (even, >= 8).
    #[arg(long = "grid-n", alias = "N")]
    grid_n: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    /// galerkin | collocation | gear
    #[arg(long)]
    nonlinearity: Option<String>,
    /// euler | exact
    #[arg(long)]
    bootstrap: Option<String>,
    #[arg(long)]
    cw: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// zero | sinsin | kolmogorov | ring | taylor-green | two-mode
    #[arg(long)]
    forcing: Option<String>,
    #[arg(long)]
    forcing_amplitude: Option<String>,
    #[arg(long)]
    forcing_wavenumber: Option<String>,
    /// zero | sinsin | random | file | exact
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    init_slope: Option<String>,
    #[arg(long)]
    init_amplitude: Option<String>,
    #[arg(long)]
    init_file: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    #[arg(long)]
    every: Option<String>,
    #[arg(long)]
    spectrum_every: Option<String>,
    #[arg(long)]
    checkpoint_every: Option<String>,
    /// Step count or `auto`.
    #[arg(long)]
    burn_in: Option<String>,
    /// Comma-separated k:l list.
    #[arg(long, allow_hyphen_values = true)]
    probes: Option<String>,
    /// Checkpoint to resume from.
    #[arg(long)]
    resume: Option<String>,
    #[arg(long)]
    soak_ratio: Option<String>,
    #[arg(long)]
    scan_nu: Option<String>,
    #[arg(long)]
    scan_k: Option<String>,
    #[arg(long)]
    converge_ks: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    wente_samples: Option<String>,
    #[arg(long)]
    wente_n: Option<String>,
    #[arg(long)]
    wente_kmax: Option<String>,
}

impl Keys {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        let all: [(&'static str, &Option<String>); 30] = [
            ("nu", &self.nu),
            ("k", &self.k),
            ("N", &self.grid_n),
            ("steps", &self.steps),
            ("nonlinearity", &self.nonlinearity),
            ("bootstrap", &self.bootstrap),
            ("cw", &self.cw),
            ("seed", &self.seed),
            ("forcing", &self.forcing),
            ("forcing_amplitude", &self.forcing_amplitude),
            ("forcing_wavenumber", &self.forcing_wavenumber),
            ("init", &self.init),
            ("init_slope", &self.init_slope),
            ("init_amplitude", &self.init_amplitude),
            ("init_file", &self.init_file),
            ("out_dir", &self.out_dir),
            ("every", &self.every),
            ("spectrum_every", &self.spectrum_every),
            ("checkpoint_every", &self.checkpoint_every),
            ("burn_in", &self.burn_in),
            ("probes", &self.probes),
            ("resume", &self.resume),
            ("soak_ratio", &self.soak_ratio),
            ("scan_nu", &self.scan_nu),
            ("scan_k", &self.scan_k),
            ("converge_ks", &self.converge_ks),
            ("horizon", &self.horizon),
            ("wente_samples", &self.wente_samples),
            ("wente_n", &self.wente_n),
            ("wente_kmax", &self.wente_kmax),
        ];
        all.into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }

    fn resolve(&self) -> ns2d::Result<RunConfig> {
        let mut rc = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)?;
            apply_text(&mut rc, &text)?;
        }
        apply_overrides(&mut rc, self.pairs())?;
        Ok(rc)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Flag { .. } | Error::Parameter { .. } => 2,
        Error::Blowup { .. } => 3,
        _ => 1,
    }
}

fn execute(cmd: Command) -> ns2d::Result<u8> {
    match cmd {
        Command::Run(keys) => {
            let rc = keys.resolve()?;
            let out = experiments::run_simulation(&rc)?;
            println!(
                "run: reached level {} in {:.2}s; outputs in {}",
                out.report.level,
                out.report.wall_time.as_secs_f64(),
                rc.out_dir.display()
            );
            Ok(0)
        }
        Command::Scan(keys) => {
            let rc = keys.resolve()?;
            let rep = experiments::scan(&rc)?;
            let stable = rep.cells.iter().filter(|c| c.status == CellStatus::Stable).count();
            println!("scan: {stable}/{} cells stable", rep.cells.len());
            for (nu, k) in &rep.non_monotone {
                println!("finding: stable at nu={nu} k={k} although a smaller k blew up");
            }
            Ok(0)
        }
        Command::Converge(keys) => {
            let rc = keys.resolve()?;
            let pts = experiments::converge(&rc)?;
            let errs: Vec<f64> = pts.iter().map(|p| p.error).collect();
            for (p, o) in pts.iter().zip(std::iter::once(None).chain(ns2d::analysis::observed_orders(&errs).into_iter().map(Some))) {
                match o {
                    Some(o) => println!("k={:e} error={:.6e} order={o:.4}", p.k, p.error),
                    None => println!("k={:e} error={:.6e}", p.k, p.error),
                }
            }
            Ok(0)
        }
        Command::Soak(keys) => {
            let rc = keys.resolve()?;
            let rep = experiments::soak(&rc)?;
            print!("{}", rep.summary());
            Ok(if rep.passed() { 0 } else { 4 })
        }
        Command::Analyze { dir } => {
            let rep = experiments::analyze(&dir)?;
            print!("{}", rep.text());
            Ok(0)
        }
        Command::WenteProbe(keys) => {
            let rc = keys.resolve()?;
            for r in experiments::wente_probe(&rc)? {
                println!("{},{},{},{:.6}", r.variant, r.n, r.samples, r.max_ratio);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Blowup {
                last_checkpoint: Some(p),
                ..
            } = &e
            {
                eprintln!("last checkpoint: {}", p.display());
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_exit_codes() {
        let cfg = Error::Config {
            line: 3,
            message: "x".into(),
        };
        let flag = Error::Flag {
            key: "nu".into(),
            message: "x".into(),
        };
        let blowup = Error::Blowup {
            step: 7,
            last_checkpoint: None,
        };
        assert_eq!(exit_code(&cfg), 2);
        assert_eq!(exit_code(&flag), 2);
        assert_eq!(exit_code(&blowup), 3);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 1);
    }

    #[test]
    fn flags_map_to_config_keys() {
        assert!(Keys::default().pairs().is_empty());
        let v = Some("1".to_string());
        let keys = Keys {
            nu: v.clone(),
            grid_n: v.clone(),
            wente_kmax: v,
            ..Keys::default()
        };
        let names: Vec<&str> = keys.pairs().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, ["nu", "N", "wente_kmax"]);
        for key in ns2d::config::KEYS {
            assert!(ns2d::config::canonical_key(key).is_some(), "{key}");
        }
    }
}
