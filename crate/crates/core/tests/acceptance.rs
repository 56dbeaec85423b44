//! Acceptance checks. Each check prints one `PASS`/`FAIL` line; the process
//! exits non-zero if any check fails. Arguments filter checks by name.

use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ns2d::analysis::{gronwall_bound_floor_n_minus_1, gronwall_two_step_bound, gronwall_worst_case, observed_orders};
use ns2d::config::{apply_overrides, RunConfig};
use ns2d::experiments::{
    manufactured_error, soak, stationary_stat_convergence, wente_sample_max, ConvergenceReport, SoakReport, StatPlan,
};
use ns2d::init::random_initial_field;
use ns2d::nonlinear::{advect_collocation_skew, WenteVariant};
use ns2d::norms::{g_identity_residual, g_identity_scale, sobolev_norm};
use ns2d::stats::observe;
use ns2d::stepper::Nonlinearity;
use ns2d::{Grid, SpectralField};

fn verdict(id: u32, ok: bool, detail: String) {
    println!("{} criterion {id:>2}: {detail}", if ok { "PASS" } else { "FAIL" });
}

fn config(pairs: &[(&str, &str)]) -> RunConfig {
    let mut rc = RunConfig::default();
    apply_overrides(&mut rc, pairs.iter().copied()).unwrap();
    rc
}

fn c01_g_identity() -> bool {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for i in 0..10_000u64 {
        let slope = -2.0 + 2.0 * rng.gen::<f64>();
        let amp = 10f64.powf(-2.0 + 4.0 * rng.gen::<f64>());
        let v0 = random_initial_field(3 * i, 32, slope, amp).unwrap();
        let v1 = random_initial_field(3 * i + 1, 32, slope, amp).unwrap();
        let v2 = random_initial_field(3 * i + 2, 32, slope, amp).unwrap();
        let mu = rng.gen::<f64>();
        let r = g_identity_residual(&v0, &v1, &v2, mu).unwrap();
        let s = g_identity_scale(&v0, &v1, &v2, mu).unwrap();
        worst = worst.max(r.abs() / s);
    }
    let secs = clock.elapsed().as_secs_f64();
    let ok = worst <= 1e-11;
    verdict(1, ok, format!("G-identity max relative residual {worst:.3e} (<= 1e-11), {secs:.1}s"));
    ok
}

fn c02_discrete_gronwall() -> bool {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut violations = 0u64;
    let mut published_violations = 0u64;
    let mut checked = 0u64;
    for _ in 0..10_000 {
        let g1 = 100.0 * rng.gen::<f64>();
        let g2 = 100.0 * rng.gen::<f64>();
        let eps = 1e-3 + 2.0 * rng.gen::<f64>();
        let beta = 10.0 * rng.gen::<f64>();
        let lambda = rng.gen::<f64>();
        let n = rng.gen_range(2..=100u64);
        // Equality is the worst admissible sequence; a random sub-solution
        // is checked alongside it.
        let worst = gronwall_worst_case(g1, g2, eps, beta, lambda, n).unwrap();
        let mut sub = vec![g1, g2];
        for m in 2..=n as usize {
            let cap = (lambda * sub[m - 1] + (1.0 - lambda) * sub[m - 2] + beta * eps) / (1.0 + eps);
            sub.push(cap * rng.gen::<f64>());
        }
        for m in 2..=n {
            let bound = gronwall_two_step_bound(g1, g2, eps, beta, lambda, m).unwrap();
            let published = gronwall_bound_floor_n_minus_1(g1, g2, eps, beta, lambda, m).unwrap();
            let slack = 1e-12 * bound;
            for seq in [&worst, &sub] {
                let g = seq[m as usize];
                checked += 1;
                if g > bound + slack {
                    violations += 1;
                }
                if g > published + 1e-12 * published {
                    published_violations += 1;
                }
            }
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    println!("INFO criterion  2: exponent floor((n-1)/2) violated {published_violations} times");
    let ok = violations == 0;
    verdict(
        2,
        ok,
        format!("Gronwall bound violations {violations} of {checked} comparisons, {secs:.1}s"),
    );
    ok
}

fn c03_taylor_green() -> bool {
    let clock = Instant::now();
    let rc = config(&[("nu", "0.1"), ("N", "32"), ("forcing", "taylor-green")]);
    let base = rc.solver_config().unwrap();
    let errs: Vec<f64> = [1e-3, 5e-4]
        .iter()
        .map(|&k| {
            let mut c = base.clone();
            c.k = k;
            manufactured_error(&c, 1.0).unwrap().error
        })
        .collect();
    let ratio = errs[0] / errs[1];
    let secs = clock.elapsed().as_secs_f64();
    let ok = errs[0] <= 5e-5 && (3.6..=4.4).contains(&ratio);
    verdict(
        3,
        ok,
        format!("Taylor-Green error {:.3e} at k=1e-3 (<= 5e-5), ratio {ratio:.4} (in [3.6, 4.4]), {secs:.1}s", errs[0]),
    );
    ok
}

fn c04_manufactured_order() -> bool {
    let clock = Instant::now();
    let ks = [4e-3, 2e-3, 1e-3, 5e-4];
    let mut ok = true;
    let mut parts = Vec::new();
    for nl in [
        Nonlinearity::GalerkinDealiased,
        Nonlinearity::CollocationSkew,
        Nonlinearity::ExtrapolatedGear,
    ] {
        let rc = config(&[("N", "64"), ("forcing", "two-mode"), ("nonlinearity", nl.name())]);
        let base = rc.solver_config().unwrap();
        let errs: Vec<f64> = ks
            .iter()
            .map(|&k| {
                let mut c = base.clone();
                c.k = k;
                manufactured_error(&c, 1.0).unwrap().error
            })
            .collect();
        let orders = observed_orders(&errs);
        ok &= orders.iter().all(|o| (o - 2.0).abs() <= 0.2);
        let txt: Vec<String> = orders.iter().map(|o| format!("{o:.4}")).collect();
        parts.push(format!("{}=[{}]", nl.name(), txt.join(", ")));
    }
    let secs = clock.elapsed().as_secs_f64();
    verdict(4, ok, format!("observed orders {} (2.0 +- 0.2), {secs:.1}s", parts.join(" ")));
    ok
}

fn soak_run(ratio: &str) -> SoakReport {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("soak");
    let rc = config(&[
        ("nu", "0.1"),
        ("N", "64"),
        ("k", "1e-3"),
        ("steps", "1000000"),
        ("forcing", "sinsin"),
        ("forcing_amplitude", "0.2"),
        ("init", "random"),
        ("init_slope", "2"),
        ("seed", "7"),
        ("soak_ratio", ratio),
        ("every", "10000"),
        ("out_dir", out.to_str().unwrap()),
    ]);
    soak(&rc).unwrap()
}

fn c05_invariant_ball_and_envelope() -> bool {
    let clock = Instant::now();
    let rep = soak_run("2");
    let secs = clock.elapsed().as_secs_f64();
    let b = &rep.bounds;
    let start_ok = rep.v0_gnorm <= 2.0 * rep.rho0 * (1.0 + 1e-9);
    let ok = start_ok && b.steps_checked == 1_000_000 && b.ball_violations == 0 && b.envelope_violations == 0;
    verdict(
        5,
        ok,
        format!(
            "k={:.4e} |V0|/rho0={:.9} steps={} ball max_ratio={:.15} violations={} envelope max_ratio={:.15} violations={}, {secs:.0}s",
            rep.k,
            rep.v0_gnorm / rep.rho0,
            b.steps_checked,
            b.max_ball_ratio,
            b.ball_violations,
            b.max_envelope_ratio,
            b.envelope_violations
        ),
    );
    ok
}

fn c06_absorbing() -> bool {
    let clock = Instant::now();
    let rep = soak_run("4");
    let secs = clock.elapsed().as_secs_f64();
    let b = &rep.bounds;
    let deadline = 1.1 * rep.t0;
    let entry_t = b.entry_level.map(|l| l as f64 * rep.k);
    let ok = rep.absorbed == Some(true);
    verdict(
        6,
        ok,
        format!(
            "|V0|/rho0={:.6} entry t={} (deadline 1.1*T0={deadline:.4}) left afterwards={}, {secs:.0}s",
            rep.v0_gnorm / rep.rho0,
            entry_t.map_or("none".into(), |t| format!("{t:.4}")),
            b.exit_after_entry.is_some()
        ),
    );
    ok
}

fn c07_collocation_orthogonality() -> bool {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for n in [32usize, 64] {
        for i in 0..1000u64 {
            let s1 = -3.0 + 3.0 * rng.gen::<f64>();
            let s2 = -2.0 + 2.0 * rng.gen::<f64>();
            let psi = random_initial_field(2 * i + 1_000_000 * n as u64, n, s1, 1.0).unwrap();
            let omega = random_initial_field(2 * i + 1 + 1_000_000 * n as u64, n, s2, 1.0).unwrap();
            let adv = advect_collocation_skew(&psi, &omega).unwrap();
            let (ux, uy) = psi.perp_gradient();
            let umax = ux
                .to_physical()
                .unwrap()
                .into_iter()
                .zip(uy.to_physical().unwrap())
                .map(|(a, b)| a.hypot(b))
                .fold(0.0f64, f64::max);
            let scale = omega.norm() * sobolev_norm(&omega, 1.0) * umax;
            worst = worst.max(omega.inner(&adv).abs() / scale);
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    let ok = worst <= 1e-11;
    verdict(7, ok, format!("collocation <w, N(w)> max relative {worst:.3e} (<= 1e-11), {secs:.1}s"));
    ok
}

/// One set of forced chaotic runs at N = 64 shared by the gap, energy
/// balance and stationary statistics checks.
fn chaotic() -> &'static ConvergenceReport {
    static REPORT: OnceLock<ConvergenceReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let clock = Instant::now();
        let rc = config(&[
            ("nu", "0.01"),
            ("N", "64"),
            ("forcing", "ring"),
            ("forcing_wavenumber", "4"),
            ("forcing_amplitude", "2"),
            ("init", "random"),
            ("init_amplitude", "1"),
            ("seed", "1"),
        ]);
        let base = rc.solver_config().unwrap();
        let configs: Vec<_> = [2e-3, 1e-3, 5e-4, 2.5e-4]
            .iter()
            .map(|&k| {
                let mut c = base.clone();
                c.k = k;
                c
            })
            .collect();
        let plan = StatPlan {
            horizon: 200.0,
            burn_in_time: 20.0,
            sample_dt: 0.1,
            resamples: 1000,
            seed: 5,
        };
        let rep = stationary_stat_convergence(&configs, &rc.initial_field().unwrap(), &plan).unwrap();
        println!("INFO chaotic runs finished in {:.0}s", clock.elapsed().as_secs_f64());
        rep
    })
}

fn c08_consistency_gap() -> bool {
    let rep = chaotic();
    let ratios: Vec<f64> = rep.gaps.windows(2).map(|w| w[0].max_l2 / w[1].max_l2).collect();
    let linear = ratios.iter().all(|r| (1.6..=2.4).contains(r));
    let h1_first = rep.gaps[0].max_h1;
    let bounded = rep.gaps.iter().all(|g| g.max_h1.is_finite() && g.max_h1 <= h1_first);
    let l2: Vec<String> = rep.gaps.iter().map(|g| format!("{:.3e}", g.max_l2)).collect();
    let h1: Vec<String> = rep.gaps.iter().map(|g| format!("{:.3e}", g.max_h1)).collect();
    let r: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    let ok = linear && bounded;
    verdict(
        8,
        ok,
        format!(
            "gap max_l2=[{}] ratios=[{}] (in [1.6, 2.4]); sqrt(k) gap max=[{}] (bounded by k=2e-3 value)",
            l2.join(", "),
            r.join(", "),
            h1.join(", ")
        ),
    );
    ok
}

fn c09_energy_balance() -> bool {
    // Steady state ω = sin x sin y with f = 2ν ω: the residual vanishes.
    let g = Grid::new(32).unwrap();
    let nu = 0.1;
    let w = SpectralField::from_modes(
        g,
        &[
            (1, 1, ns2d::Complex64::new(-0.25, 0.0)),
            (1, -1, ns2d::Complex64::new(0.25, 0.0)),
        ],
    );
    let f = w.scaled(2.0 * nu);
    let steady = observe(&w, &w, &f, 1, 0.0, nu, 1e-3, &[]).balance;
    let steady_ok = steady == 0.0;

    let rep = chaotic();
    let bal = rep.observable("balance").unwrap();
    let forced_ok = bal.per_k.iter().all(|s| s.ci.mean <= 2.0 * s.ci.sigma);
    let txt: Vec<String> = bal
        .per_k
        .iter()
        .map(|s| format!("k={:e}: {:.3e} (2sigma {:.3e})", s.k, s.ci.mean, 2.0 * s.ci.sigma))
        .collect();
    let ok = steady_ok && forced_ok;
    verdict(
        9,
        ok,
        format!("steady residual {steady:e} (== 0); forced residual {}", txt.join("; ")),
    );
    ok
}

fn c10_wente_stability() -> bool {
    let clock = Instant::now();
    let a = wente_sample_max(64, 1000, 10, 0).unwrap();
    let b = wente_sample_max(128, 1000, 10, 0).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for ((v, x), y) in WenteVariant::ALL.iter().zip(a).zip(b) {
        let rel = (x - y).abs() / x.max(y);
        ok &= rel < 0.05;
        parts.push(format!("{v}: {x:.5}/{y:.5} ({:.2e})", rel));
    }
    let secs = clock.elapsed().as_secs_f64();
    verdict(10, ok, format!("Wente max N=64/N=128 {} (< 5%), {secs:.1}s", parts.join(", ")));
    ok
}

fn c11_stationary_statistics() -> bool {
    let rep = chaotic();
    let ens = rep.observable("enstrophy").unwrap();
    let means: Vec<String> = ens
        .per_k
        .iter()
        .map(|s| format!("{:.5}+-{:.5}", s.ci.mean, s.ci.sigma))
        .collect();
    let diffs: Vec<String> = ens
        .diffs
        .iter()
        .zip(&ens.tolerances)
        .map(|(d, t)| format!("{d:.3e}/{t:.3e}"))
        .collect();
    verdict(
        11,
        ens.pass,
        format!(
            "enstrophy averages [{}]; diff/2sigma [{}] (decreasing or within)",
            means.join(", "),
            diffs.join(", ")
        ),
    );
    ens.pass
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let checks: [(&str, fn() -> bool); 11] = [
        ("c01_g_identity", c01_g_identity),
        ("c02_discrete_gronwall", c02_discrete_gronwall),
        ("c03_taylor_green", c03_taylor_green),
        ("c04_manufactured_order", c04_manufactured_order),
        ("c05_invariant_ball_and_envelope", c05_invariant_ball_and_envelope),
        ("c06_absorbing", c06_absorbing),
        ("c07_collocation_orthogonality", c07_collocation_orthogonality),
        ("c08_consistency_gap", c08_consistency_gap),
        ("c09_energy_balance", c09_energy_balance),
        ("c10_wente_stability", c10_wente_stability),
        ("c11_stationary_statistics", c11_stationary_statistics),
    ];
    let mut failed = Vec::new();
    for (name, check) in checks {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        if !check() {
            failed.push(name);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
