//! Acceptance gate: ten criteria, one test each, run at the stated
//! tolerances. Each test prints its measured numbers; the libtest ok/FAILED
//! line is the per-criterion verdict.

use std::sync::Mutex;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use zf_hgm::hgm::{companion_p, pdf_hgm, ray_state, HgmDensity, DEFAULT_U0};
use zf_hgm::measures::{
    cdf_from_pdf, envelope_cutoff, ergodic_capacity, outage_probability, rayleigh_capacity,
    rayleigh_outage, rayleigh_pdf,
};
use zf_hgm::montecarlo::simulate;
use zf_hgm::ode::IntegratorSettings;
use zf_hgm::scenario::{build_correlation, derive_params, CorrelationSpec, ScenarioConfig};
use zf_hgm::series::{self, TruncationPolicy};
use zf_hgm::special;

/// Wall-clock budgets are part of several criteria; the sampling-heavy ones
/// take this lock so concurrent test threads cannot distort each other's
/// timing.
static HEAVY: Mutex<()> = Mutex::new(());

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn scenario(k_db: f64, corr: CorrelationSpec) -> ScenarioConfig {
    ScenarioConfig {
        k_factor_db: k_db,
        correlation: corr,
        ..ScenarioConfig::default()
    }
}

#[test]
fn criterion_01_hypergeometric_equivalence() {
    let start = Instant::now();
    let settings = IntegratorSettings::default();
    let mut worst = 0.0f64;
    for &(n, nr) in &[(1u32, 4u32), (5, 6), (2, 2)] {
        for &sigma in &[0.5f64, 1.0, 2.0, 5.0, 10.0] {
            let series = special::hyp1f1_series(n, nr, sigma, 1e-15, 10_000)
                .unwrap()
                .into_value()
                .unwrap();
            let (ode, _) = special::hyp1f1_hgm(n, nr, sigma, 1e-3, &settings).unwrap();
            let rel = ((ode - series) / series).abs();
            assert!(
                rel <= 1e-8,
                "(N={n}, NR={nr}, sigma={sigma}): rel {rel:.3e} > 1e-8"
            );
            worst = worst.max(rel);
        }
    }
    let elapsed = start.elapsed();
    println!("criterion 1: worst relative gap {worst:.3e} (limit 1e-8), {elapsed:.2?}");
    assert!(elapsed.as_secs_f64() < 1.0, "budget 1 s exceeded: {elapsed:.2?}");
}

#[test]
fn criterion_02_series_breakdown_flag() {
    let start = Instant::now();
    let policy = TruncationPolicy::default();
    let grid = linspace(0.5, 30.0, 60);

    let low = scenario(1.0, CorrelationSpec::Identity);
    let a_low = derive_params(&low, &build_correlation(&low).unwrap())
        .unwrap()
        .noncentrality;
    for &t in &grid {
        let r = series::pdf_series(t, a_low, 5, 6, &policy).unwrap();
        assert!(r.converged, "K = 1 dB (a = {a_low:.4}) must converge at t = {t}");
    }

    let high = scenario(7.0, CorrelationSpec::Identity);
    let a_high = derive_params(&high, &build_correlation(&high).unwrap())
        .unwrap()
        .noncentrality;
    let broken = grid
        .iter()
        .filter(|&&t| !series::pdf_series(t, a_high, 5, 6, &policy).unwrap().converged)
        .count();
    assert!(broken >= 1, "K = 7 dB (a = {a_high:.4}) must break somewhere");

    let elapsed = start.elapsed();
    println!(
        "criterion 2: a = {a_low:.4} all {} points converged; a = {a_high:.4} flagged {broken}/{}, {elapsed:.2?}",
        grid.len(),
        grid.len()
    );
    assert!(elapsed.as_secs_f64() < 5.0, "budget 5 s exceeded: {elapsed:.2?}");
}

#[test]
fn criterion_03_small_k_series_agreement() {
    let start = Instant::now();
    let cfg = scenario(1.0, CorrelationSpec::Identity);
    let d = derive_params(&cfg, &build_correlation(&cfg).unwrap()).unwrap();
    let policy = TruncationPolicy::default();
    let grid = linspace(0.5, 30.0, 30);
    let u0 = DEFAULT_U0.min(grid[0] / d.gamma1 / 10.0);
    let hgm = pdf_hgm(&d, cfg.n_rx as u32, &grid, u0, &IntegratorSettings::default()).unwrap();
    let mut worst = 0.0f64;
    for (i, &t) in grid.iter().enumerate() {
        let s = series::pdf_series(t / d.gamma1, d.noncentrality, d.dof, cfg.n_rx as u32, &policy)
            .unwrap()
            .into_value()
            .unwrap()
            / d.gamma1;
        let diff = (hgm.points[i].1 - s).abs();
        assert!(diff <= 1e-6, "t = {t}: |hgm - series| = {diff:.3e} > 1e-6");
        worst = worst.max(diff);
    }
    let elapsed = start.elapsed();
    println!("criterion 3: max |pdf_hgm - pdf_series| = {worst:.3e} (limit 1e-6), {elapsed:.2?}");
    assert!(elapsed.as_secs_f64() < 10.0, "budget 10 s exceeded: {elapsed:.2?}");
}

#[test]
fn criterion_04_rayleigh_limit() {
    use zf_hgm::scenario::DerivedParams;
    for &(n, nr, gamma1) in &[(5u32, 6u32, 1.3f64), (1, 4, 2.0)] {
        let p = DerivedParams {
            dof: n,
            k_linear: 1e-7,
            gamma1,
            noncentrality: 1e-6,
            gamma_b_db: 0.0,
        };
        let density = HgmDensity::new(p, nr).unwrap();

        let grid = linspace(0.1, gamma1 * (4.0 * n as f64 + 8.0), 25);
        let mut worst = 0.0f64;
        for &t in &grid {
            let diff = (density.density(t).unwrap() - rayleigh_pdf(t, n, gamma1).unwrap()).abs();
            assert!(diff <= 1e-6, "{n}x: pdf gap {diff:.3e} > 1e-6 at t = {t}");
            worst = worst.max(diff);
        }

        let th = gamma1 * n as f64;
        let out_hgm = outage_probability(&density, th, 500).unwrap();
        let out_closed = rayleigh_outage(th, n, gamma1).unwrap();
        assert!(
            (out_hgm - out_closed).abs() <= 1e-4,
            "outage gap {:.3e}",
            (out_hgm - out_closed).abs()
        );

        let cap_hgm = ergodic_capacity(&density, 2000, 1e-6).unwrap().bpcu;
        let cap_closed = rayleigh_capacity(n, gamma1).unwrap();
        assert!(
            (cap_hgm - cap_closed).abs() <= 1e-4,
            "capacity gap {:.3e}",
            (cap_hgm - cap_closed).abs()
        );

        println!(
            "criterion 4 (N={n}, NR={nr}): pdf gap {worst:.3e}, outage gap {:.3e}, capacity gap {:.3e}",
            (out_hgm - out_closed).abs(),
            (cap_hgm - cap_closed).abs()
        );
    }
}

/// Shared body of criteria 5 and 7: analytic c.d.f. against a 10^6-sample
/// run at the stated thresholds.
fn distribution_against_montecarlo(cfg: &ScenarioConfig, seed: u64, label: &str) {
    let _lock = HEAVY.lock().unwrap();
    let start = Instant::now();
    let rt = build_correlation(cfg).unwrap();
    let d = derive_params(cfg, &rt).unwrap();

    let sim = simulate(cfg, &rt, 1_000_000, 200, seed).unwrap();

    let (t_max, _) = envelope_cutoff(d.dof, d.gamma1, d.noncentrality, 1e-6).unwrap();
    let grid = linspace(t_max / 3000.0, t_max, 3000);
    let u0 = DEFAULT_U0.min(grid[0] / d.gamma1 / 10.0);
    let pdf = pdf_hgm(&d, cfg.n_rx as u32, &grid, u0, &IntegratorSettings::default()).unwrap();
    let cdf = cdf_from_pdf(&pdf).unwrap();

    let ks = sim.ks_distance(|x| cdf.value_at(x));
    let terminal = cdf.terminal();
    let elapsed = start.elapsed();
    println!(
        "{label}: KS = {ks:.4e} (limit 1e-2), terminal cdf = {terminal:.8} (limit 1e-3), {elapsed:.2?}"
    );
    assert!(ks <= 0.01, "{label}: KS {ks:.4e} > 0.01");
    assert!((terminal - 1.0).abs() <= 1e-3, "{label}: terminal {terminal}");
    assert!(
        elapsed.as_secs_f64() < 180.0,
        "{label}: budget 3 min exceeded: {elapsed:.2?}"
    );
}

#[test]
fn criterion_05_distribution_vs_montecarlo() {
    // Identity companion scenario, then the best-effort Laplacian variant.
    let identity = scenario(7.0, CorrelationSpec::Identity);
    distribution_against_montecarlo(&identity, 424242, "criterion 5 (identity)");

    let laplacian = scenario(
        7.0,
        CorrelationSpec::LaplacianUla {
            spacing_wavelengths: 0.5,
        },
    );
    distribution_against_montecarlo(&laplacian, 343434, "criterion 5 (laplacian)");
}

#[test]
fn criterion_06_outage_capacity_sweep() {
    let _lock = HEAVY.lock().unwrap();
    let start = Instant::now();
    let base = ScenarioConfig::default();
    // Per-symbol over per-bit SNR is the bits per symbol: Gamma_s,dB =
    // Gamma_b,dB + 10 log10(log2 M).
    let bits_db = 10.0 * (base.constellation_size as f64).log2().log10();
    let threshold = 10.0;
    for (i, gb) in linspace(-6.0, 4.0, 6).into_iter().enumerate() {
        let cfg = ScenarioConfig {
            gamma_s_db: gb + bits_db,
            ..base.clone()
        };
        let rt = build_correlation(&cfg).unwrap();
        let d = derive_params(&cfg, &rt).unwrap();
        let density = HgmDensity::new(d, cfg.n_rx as u32).unwrap();

        let out_hgm = outage_probability(&density, threshold, 1000).unwrap();
        let cap_hgm = ergodic_capacity(&density, 2000, 1e-6).unwrap().bpcu;

        let sim = simulate(&cfg, &rt, 1_000_000, 200, 6000 + i as u64).unwrap();
        let out_mc = sim.outage(threshold);
        let cap_mc = sim.capacity_bpcu;

        let cap_dev = ((cap_hgm - cap_mc) / cap_mc).abs();
        assert!(
            cap_dev <= 0.02,
            "Gamma_b = {gb} dB: capacity deviation {cap_dev:.4} > 2%"
        );
        let mut line = format!(
            "criterion 6: Gamma_b = {gb:+.1} dB, outage {out_hgm:.4e} vs {out_mc:.4e}, capacity {cap_hgm:.4} vs {cap_mc:.4} ({:.2}%)",
            100.0 * cap_dev
        );
        if out_mc >= 1e-3 {
            let out_dev = ((out_hgm - out_mc) / out_mc).abs();
            assert!(
                out_dev <= 0.02,
                "Gamma_b = {gb} dB: outage deviation {out_dev:.4} > 2%"
            );
            line.push_str(&format!(", outage dev {:.2}%", 100.0 * out_dev));
        }
        println!("{line}");
    }
    println!("criterion 6: swept in {:.2?}", start.elapsed());
}

#[test]
fn criterion_07_high_k_robustness() {
    let cfg = scenario(15.0, CorrelationSpec::Identity);
    distribution_against_montecarlo(&cfg, 151515, "criterion 7 (K = 15 dB)");
}

#[test]
fn criterion_08_ode_residuals() {
    let policy = TruncationPolicy::default();
    let (n, nr) = (5u32, 6u32);
    let mut worst = 0.0f64;
    for &t in &[0.5f64, 1.0, 2.0, 5.0] {
        for &a in &[0.1f64, 0.5, 1.0] {
            let s = series::pdf_derivatives_series(t, a, n, nr, &policy).unwrap();
            let p3 = series::pdf_dt3_series(t, a, n, nr, &policy).unwrap();
            let m = companion_p(t, a, n, nr).unwrap();
            let pred = m[2][0] * s.p + m[2][1] * s.p1 + m[2][2] * s.p2;
            let scale = p3.abs()
                + (m[2][0] * s.p).abs()
                + (m[2][1] * s.p1).abs()
                + (m[2][2] * s.p2).abs();
            let rel = (p3 - pred).abs() / scale;
            assert!(rel <= 1e-8, "(t={t}, a={a}): residual {rel:.3e} > 1e-8");
            worst = worst.max(rel);
        }
    }

    // Transform-domain slope at the origin equals the distribution mean.
    let (a, g1, h) = (2.5f64, 1.0f64, 1e-5f64);
    let m = |s: f64| series::mgf_closed(s, a, n, nr, g1).unwrap();
    let slope = (m(h) - m(-h)) / (2.0 * h);
    let mean = g1 * (n as f64 + a * n as f64 / nr as f64);
    let mgf_rel = ((slope - mean) / mean).abs();
    assert!(mgf_rel <= 1e-6, "mgf slope gap {mgf_rel:.3e} > 1e-6");

    println!("criterion 8: worst ODE residual {worst:.3e} (limit 1e-8), mgf slope gap {mgf_rel:.3e} (limit 1e-6)");
}

#[test]
fn criterion_09_factorization_consistency() {
    // Both factorizations are integrated at rel_tol 1e-10. Tighter settings
    // do not tighten the agreement: roundoff injected near the anchor rides
    // the growing fundamental mode and floors the gap near 2e-10 over these
    // spans (measured; independent of tolerance below 1e-10), so this is the
    // strictest level at which the 10x allowance is a real assertion.
    let settings = IntegratorSettings {
        rel_tol: 1e-10,
        abs_tol: 1e-12,
        ..Default::default()
    };
    let policy = TruncationPolicy::default();
    let (n, nr) = (5u32, 6u32);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let t2 = 2.0 + 6.0 * rng.random::<f64>();
        let a = 1.0 + 9.0 * rng.random::<f64>();
        let t1 = t2 / 2.0;

        let direct = ray_state(t2, a, n, nr, DEFAULT_U0, &settings, &policy).unwrap();

        // Continuation leg: combined-line state at (t1, a), then the pure-t
        // system at fixed a up to t2.
        let y1 = ray_state(t1, a, n, nr, DEFAULT_U0, &settings, &policy).unwrap();
        let rhs = |t: f64, y: &[f64; 3]| {
            let m = companion_p(t, a, n, nr).unwrap();
            [
                y[1],
                y[2],
                m[2][0] * y[0] + m[2][1] * y[1] + m[2][2] * y[2],
            ]
        };
        let cont = zf_hgm::ode::integrate(rhs, t1, t2, y1, &settings).unwrap();

        let rel = ((direct[0] - cont[0]) / direct[0]).abs();
        assert!(
            rel <= 10.0 * settings.rel_tol,
            "(t = {t2:.3}, a = {a:.3}): factorizations differ by {rel:.3e}"
        );
        worst = worst.max(rel);
    }
    println!(
        "criterion 9: worst relative gap {worst:.3e} (limit {:.1e})",
        10.0 * settings.rel_tol
    );
}

#[test]
fn criterion_10_deterministic_outputs() {
    let dir = std::env::temp_dir().join(format!("zf-hgm-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let run = |name: &str| {
        let out = dir.join(name);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_zf-hgm"))
            .args([
                "compare",
                "--points",
                "400",
                "--samples",
                "100000",
                "--seed",
                "4242",
                "--out",
            ])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success(), "compare run failed: {status}");
        let csv = std::fs::read(&out).unwrap();
        let meta = std::fs::read(format!("{}.meta.json", out.display())).unwrap();
        (csv, meta)
    };
    let (csv_a, meta_a) = run("a.csv");
    let (csv_b, meta_b) = run("b.csv");
    assert_eq!(csv_a, csv_b, "CSV bytes differ between identical runs");
    assert_eq!(meta_a, meta_b, "meta bytes differ between identical runs");
    println!(
        "criterion 10: byte-identical compare outputs ({} CSV bytes, {} meta bytes)",
        csv_a.len(),
        meta_a.len()
    );
    std::fs::remove_dir_all(&dir).ok();
}
