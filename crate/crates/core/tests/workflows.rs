use std::fs;
use std::path::Path;

use ns2d::analysis::observed_orders;
use ns2d::config::{apply_overrides, parse_manifest, meta_value, RunConfig};
use ns2d::experiments::{analyze, manufactured_error, read_series, run_simulation, scan, CellStatus, MANIFEST, SERIES};
use ns2d::manufactured::Manufactured;
use ns2d::stepper::{run, Bootstrap, Forcing, RunStart, SolverConfig};
use ns2d::monitors::SeriesRecorder;
use ns2d::{Grid, SpectralField};

fn config(pairs: &[(&str, &str)]) -> RunConfig {
    let mut rc = RunConfig::default();
    apply_overrides(&mut rc, pairs.iter().copied()).unwrap();
    rc
}

fn base_pairs(out: &Path) -> Vec<(&'static str, String)> {
    vec![
        ("nu", "0.02".into()),
        ("k", "2e-3".into()),
        ("N", "16".into()),
        ("forcing", "kolmogorov".into()),
        ("forcing_wavenumber", "2".into()),
        ("forcing_amplitude", "0.5".into()),
        ("init", "random".into()),
        ("seed", "4".into()),
        ("every", "10".into()),
        ("burn_in", "0".into()),
        ("out_dir", out.display().to_string()),
    ]
}

fn with(pairs: &[(&'static str, String)], extra: &[(&'static str, &str)]) -> RunConfig {
    let mut all: Vec<(&str, &str)> = pairs.iter().map(|(k, v)| (*k, v.as_str())).collect();
    all.extend_from_slice(extra);
    config(&all)
}

#[test]
fn resumed_run_reproduces_the_series() {
    let tmp = tempfile::tempdir().unwrap();
    let full_dir = tmp.path().join("full");
    let split_dir = tmp.path().join("split");
    run_simulation(&with(&base_pairs(&full_dir), &[("steps", "1000")])).unwrap();

    let split = base_pairs(&split_dir);
    run_simulation(&with(&split, &[("steps", "500"), ("checkpoint_every", "500")])).unwrap();
    let ckpt = split_dir.join("checkpoints").join("ckpt_0000000500.v2dc");
    assert!(ckpt.exists());
    run_simulation(&with(&split, &[("steps", "1000"), ("resume", ckpt.to_str().unwrap())])).unwrap();

    let a = fs::read_to_string(full_dir.join(SERIES)).unwrap();
    let b = fs::read_to_string(split_dir.join(SERIES)).unwrap();
    assert_eq!(a.lines().count(), 1 + 1 + 100);
    assert_eq!(a, b);
    assert_eq!(
        fs::read(full_dir.join("final.v2df")).unwrap(),
        fs::read(split_dir.join("final.v2df")).unwrap()
    );
}

#[test]
fn manifest_records_config_and_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let rc = with(&base_pairs(&dir), &[("steps", "50")]);
    run_simulation(&rc).unwrap();
    let (back, meta) = parse_manifest(&fs::read_to_string(dir.join(MANIFEST)).unwrap()).unwrap();
    assert_eq!(back.to_text(), rc.to_text());
    assert_eq!(meta_value(&meta, "command"), Some("run"));
    assert_eq!(meta_value(&meta, "final_level"), Some("50"));
    let rows = read_series(&dir.join(SERIES)).unwrap();
    assert_eq!(rows.first().unwrap().level, 1);
    assert_eq!(rows.last().unwrap().level, 50);
}

#[test]
fn analyze_accepts_a_forced_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    run_simulation(&with(&base_pairs(&dir), &[("steps", "2000"), ("k", "1e-3")])).unwrap();
    let rep = analyze(&dir).unwrap();
    assert!(rep.passed(), "{}", rep.text());
    assert!(dir.join("envelope.csv").exists());
}

/// Enstrophy of unforced flow decays, so its running time average over
/// [0, T] decreases with T.
#[test]
fn unforced_enstrophy_average_decreases_with_horizon() {
    let g = Grid::new(32).unwrap();
    let w0 = ns2d::init::random_initial_field(9, 32, -1.0, 3.0).unwrap();
    let cfg = SolverConfig::new(0.05, 1e-2, g).unwrap().with_steps(400);
    let mut rec = SeriesRecorder::new(1, Vec::new());
    run(&cfg, RunStart::Fresh(w0), &mut [&mut rec]).unwrap();
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for (i, row) in rec.rows().iter().enumerate() {
        sum += row.enstrophy;
        let avg = sum / (i + 1) as f64;
        assert!(avg <= prev, "average rose at level {}", row.level);
        prev = avg;
    }
}

/// Time average of ½‖ω‖² over [0, T] for Taylor–Green against its closed
/// form, with trapezoidal sampling of the levels.
#[test]
fn taylor_green_time_average_converges() {
    let g = Grid::new(16).unwrap();
    let nu = 0.1;
    let t_end = 1.0;
    let w0 = Manufactured::TaylorGreen.exact(g, nu, 0.0);
    let e0 = 0.5 * w0.norm_sq();
    let exact = e0 * (1.0 - (-4.0 * nu * t_end).exp()) / (4.0 * nu * t_end);
    let mut errors = Vec::new();
    for k in [2e-2, 1e-2, 5e-3] {
        let steps = (t_end / k).round() as usize;
        let cfg = SolverConfig::new(nu, k, g)
            .unwrap()
            .with_forcing(Forcing::Manufactured(Manufactured::TaylorGreen))
            .with_steps(steps);
        let mut rec = SeriesRecorder::new(1, Vec::new());
        run(&cfg, RunStart::Fresh(w0.clone()), &mut [&mut rec]).unwrap();
        let vals: Vec<f64> = std::iter::once(e0).chain(rec.rows().iter().map(|r| r.enstrophy)).collect();
        assert_eq!(vals.len(), steps + 1);
        let inner: f64 = vals[1..steps].iter().sum();
        let avg = k * (0.5 * (vals[0] + vals[steps]) + inner) / t_end;
        errors.push((avg - exact).abs() / exact);
    }
    for o in observed_orders(&errors) {
        assert!(o >= 1.0, "order {o} from {errors:?}");
    }
}

/// The first-step rule changes the observed order by less than 0.05.
#[test]
fn bootstrap_choice_does_not_change_the_order() {
    let g = Grid::new(32).unwrap();
    let orders = |b: Bootstrap| {
        let errs: Vec<f64> = [4e-3, 2e-3, 1e-3, 5e-4]
            .iter()
            .map(|&k| {
                let cfg = SolverConfig::new(0.1, k, g)
                    .unwrap()
                    .with_bootstrap(b)
                    .with_forcing(Forcing::Manufactured(Manufactured::TwoMode));
                manufactured_error(&cfg, 0.5).unwrap().error
            })
            .collect();
        observed_orders(&errs)
    };
    let euler = orders(Bootstrap::SemiImplicitEuler);
    let exact = orders(Bootstrap::ExactIfKnown);
    for (a, b) in euler.iter().zip(&exact) {
        assert!((a - b).abs() < 0.05, "euler {euler:?} exact {exact:?}");
        assert!((a - 2.0).abs() < 0.2);
    }
}

#[test]
fn scan_flags_blowup_at_large_steps() {
    let tmp = tempfile::tempdir().unwrap();
    let rc = config(&[
        ("N", "16"),
        ("forcing", "sinsin"),
        ("forcing_amplitude", "50"),
        ("init", "random"),
        ("init_amplitude", "200"),
        ("scan_nu", "0.01"),
        ("scan_k", "1e-3,0.5"),
        ("steps", "200"),
        ("out_dir", tmp.path().join("scan").to_str().unwrap()),
    ]);
    let rep = scan(&rc).unwrap();
    assert_eq!(rep.cells.len(), 2);
    assert_eq!(rep.cells[1].status, CellStatus::Blowup);
    assert!(tmp.path().join("scan").join("scan.csv").exists());
}

#[test]
fn steady_state_is_a_fixed_point() {
    let g = Grid::new(16).unwrap();
    let nu = 0.1;
    let w = SpectralField::from_fn(g, |x, y| x.sin() * y.sin());
    let cfg = SolverConfig::new(nu, 0.05, g)
        .unwrap()
        .with_forcing(Forcing::Steady(w.scaled(2.0 * nu)))
        .with_steps(100);
    let r = run(&cfg, RunStart::Fresh(w.clone()), &mut []).unwrap();
    assert!((&r.pair.newer - &w).norm() <= 1e-13 * w.norm());
}
