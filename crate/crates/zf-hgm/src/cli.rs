//! Command-line front end. Every command writes a CSV file plus a
//! `<out>.meta.json` sidecar carrying the fully resolved configuration, so a
//! result can be reproduced from its sidecar alone. Numbers are printed with
//! 17 significant digits and nothing in the output depends on wall-clock
//! time or thread scheduling.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result};
use crate::hgm::{pdf_hgm, HgmDensity, PdfGrid, DEFAULT_U0};
use crate::measures::{
    cdf_from_pdf, envelope_cutoff, ergodic_capacity, outage_probability, rayleigh_capacity,
    rayleigh_outage, rayleigh_pdf,
};
use crate::montecarlo::simulate;
use crate::ode::IntegratorSettings;
use crate::scenario::{
    build_correlation, db_to_linear, derive_params, CorrelationMatrix, CorrelationSpec,
    DerivedParams, ScenarioConfig,
};

#[derive(Parser)]
#[command(
    name = "zf-hgm",
    version,
    about = "Stream-1 zero-forcing SNR distribution for Rician MIMO with transmit correlation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Density curve on an SNR grid (CSV: t,pdf)
    Pdf(PdfCmd),
    /// Cumulative curve on an SNR grid (CSV: t,cdf)
    Cdf(CdfCmd),
    /// Outage probability across a per-bit SNR sweep (CSV: gamma_b_db,value,method)
    Outage(SweepCmd),
    /// Ergodic capacity across a per-bit SNR sweep (CSV: gamma_b_db,value,method)
    Capacity(SweepCmd),
    /// Channel-level Monte Carlo density estimate (CSV: t,pdf)
    Simulate(SimulateCmd),
    /// Analytic curve against Monte Carlo on one scenario; exits 0 only if they agree
    Compare(CompareCmd),
    /// Quick internal consistency checks
    Selftest,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Receive antenna count
    #[arg(long)]
    nr: Option<usize>,
    /// Transmit stream count
    #[arg(long)]
    nt: Option<usize>,
    /// Rician K-factor in dB; "-inf" selects the Rayleigh limit exactly
    #[arg(long, allow_hyphen_values = true)]
    k_db: Option<f64>,
    /// Azimuth spread of the scattered field, degrees
    #[arg(long)]
    as_deg: Option<f64>,
    /// Per-symbol SNR in dB
    #[arg(long, allow_hyphen_values = true)]
    gs_db: Option<f64>,
    /// Constellation size (power of two)
    #[arg(long)]
    mod_size: Option<u32>,
    /// Transmit correlation model: identity, laplacian, or file
    #[arg(long)]
    corr: Option<String>,
    /// Antenna spacing in wavelengths for the laplacian model
    #[arg(long)]
    corr_spacing: Option<f64>,
    /// Matrix file for the file model
    #[arg(long)]
    corr_file: Option<PathBuf>,
    /// JSON scenario file; explicit flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::from_json(&std::fs::read_to_string(p)?)?,
            None => ScenarioConfig::default(),
        };
        if let Some(v) = self.nr {
            cfg.n_rx = v;
        }
        if let Some(v) = self.nt {
            cfg.n_tx = v;
        }
        if let Some(v) = self.k_db {
            cfg.k_factor_db = v;
        }
        if let Some(v) = self.as_deg {
            cfg.azimuth_spread_deg = v;
        }
        if let Some(v) = self.gs_db {
            cfg.gamma_s_db = v;
        }
        if let Some(v) = self.mod_size {
            cfg.constellation_size = v;
        }
        match self.corr.as_deref() {
            None => {
                if let Some(s) = self.corr_spacing {
                    if let CorrelationSpec::LaplacianUla {
                        ref mut spacing_wavelengths,
                    } = cfg.correlation
                    {
                        *spacing_wavelengths = s;
                    }
                }
            }
            Some("identity") => cfg.correlation = CorrelationSpec::Identity,
            Some("laplacian") => {
                cfg.correlation = CorrelationSpec::LaplacianUla {
                    spacing_wavelengths: self.corr_spacing.unwrap_or(0.5),
                }
            }
            Some("file") => {
                let path = self
                    .corr_file
                    .clone()
                    .ok_or_else(|| Error::invalid("--corr file requires --corr-file"))?;
                cfg.correlation = CorrelationSpec::File { path };
            }
            Some(other) => {
                return Err(Error::invalid(format!(
                    "unknown correlation model {other:?} (expected identity, laplacian, or file)"
                )))
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct NumericsArgs {
    /// Ray anchor in normalized SNR units
    #[arg(long, default_value_t = DEFAULT_U0)]
    u0: f64,
    /// Relative tolerance of the ODE integrator
    #[arg(long, default_value_t = 1e-12)]
    rel_tol: f64,
    /// Absolute tolerance of the ODE integrator
    #[arg(long, default_value_t = 1e-14)]
    abs_tol: f64,
    /// Panels for outage/capacity integrals
    #[arg(long, default_value_t = 2000)]
    resolution: usize,
    /// Envelope tail mass allowed beyond the capacity cutoff
    #[arg(long, default_value_t = 1e-6)]
    tail_tol: f64,
}

impl NumericsArgs {
    fn settings(&self) -> IntegratorSettings {
        IntegratorSettings {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            ..Default::default()
        }
    }

    fn meta(&self) -> serde_json::Value {
        json!({
            "u0": self.u0,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "resolution": self.resolution,
            "tail_tol": self.tail_tol,
        })
    }
}

#[derive(Args)]
struct PdfCmd {
    /// Smallest SNR on the grid, linear scale
    #[arg(long, default_value_t = 0.05)]
    t_min: f64,
    /// Largest SNR on the grid, linear scale
    #[arg(long, default_value_t = 60.0)]
    t_max: f64,
    /// Grid size
    #[arg(long, default_value_t = 400)]
    points: usize,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    numerics: NumericsArgs,
}

#[derive(Args)]
struct CdfCmd {
    /// Smallest SNR on the grid, linear scale
    #[arg(long, default_value_t = 0.05)]
    t_min: f64,
    /// Largest SNR on the grid; defaults to an envelope-chosen cutoff
    #[arg(long)]
    t_max: Option<f64>,
    /// Grid size (also the accumulation resolution)
    #[arg(long, default_value_t = 2000)]
    points: usize,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    numerics: NumericsArgs,
}

#[derive(Args)]
struct SweepCmd {
    /// Outage threshold in dB (outage command only)
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    th_db: f64,
    /// Sweep start, per-bit SNR in dB
    #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
    gb_min_db: f64,
    /// Sweep end, per-bit SNR in dB
    #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
    gb_max_db: f64,
    /// Sweep size
    #[arg(long, default_value_t = 6)]
    gb_points: usize,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    numerics: NumericsArgs,
}

#[derive(Args)]
struct SimulateCmd {
    /// Channel draws
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Histogram bins
    #[arg(long, default_value_t = 200)]
    bins: usize,
    /// Master RNG seed
    #[arg(long, default_value_t = 12345)]
    seed: u64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Args)]
struct CompareCmd {
    /// Smallest SNR on the analytic grid
    #[arg(long, default_value_t = 0.05)]
    t_min: f64,
    /// Largest SNR; defaults to an envelope-chosen cutoff
    #[arg(long)]
    t_max: Option<f64>,
    /// Analytic grid size
    #[arg(long, default_value_t = 1500)]
    points: usize,
    /// Channel draws
    #[arg(long, default_value_t = 200_000)]
    samples: u64,
    /// Histogram bins
    #[arg(long, default_value_t = 200)]
    bins: usize,
    /// Master RNG seed
    #[arg(long, default_value_t = 12345)]
    seed: u64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    numerics: NumericsArgs,
}

/// Agreement limits enforced by the compare command.
pub const COMPARE_KS_LIMIT: f64 = 0.01;
pub const COMPARE_TERMINAL_LIMIT: f64 = 1e-3;

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    crate::configure_thread_pool_from_env();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let informational = matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            );
            let _ = e.print();
            return if informational { 0 } else { 1 };
        }
    };
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(err) => {
            eprintln!(
                "{}",
                json!({"code": err.code(), "message": err.to_string()})
            );
            err.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Pdf(c) => cmd_pdf(c),
        Command::Cdf(c) => cmd_cdf(c),
        Command::Outage(c) => cmd_sweep(c, SweepKind::Outage),
        Command::Capacity(c) => cmd_sweep(c, SweepKind::Capacity),
        Command::Simulate(c) => cmd_simulate(c),
        Command::Compare(c) => cmd_compare(c),
        Command::Selftest => cmd_selftest(),
    }
}

fn sig(v: f64) -> String {
    format!("{v:.16e}")
}

fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::invalid("grid needs at least 2 points"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
        return Err(Error::invalid("grid bounds must satisfy 0 < t_min < t_max"));
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

fn write_lines(path: &Path, header: &str, lines: impl IntoIterator<Item = String>) -> Result<()> {
    let mut s = String::new();
    s.push_str(header);
    s.push('\n');
    for l in lines {
        s.push_str(&l);
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

fn write_meta(out: &Path, body: serde_json::Value) -> Result<()> {
    let path = PathBuf::from(format!("{}.meta.json", out.display()));
    let text = serde_json::to_string_pretty(&body)
        .map_err(|e| Error::Numerical(format!("sidecar serialization: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn meta_base(
    command: &str,
    cfg: &ScenarioConfig,
    derived: &DerivedParams,
    seed: Option<u64>,
) -> serde_json::Value {
    json!({
        "tool": {"name": "zf-hgm", "version": crate::VERSION},
        "command": command,
        "scenario": cfg,
        "derived": derived,
        "seed": seed,
    })
}

struct Resolved {
    cfg: ScenarioConfig,
    rt: CorrelationMatrix,
    derived: DerivedParams,
}

fn resolve_scenario(args: &ScenarioArgs) -> Result<Resolved> {
    let cfg = args.resolve()?;
    let rt = build_correlation(&cfg)?;
    let derived = derive_params(&cfg, &rt)?;
    Ok(Resolved { cfg, rt, derived })
}

/// Analytic density grid: ray-integrated in the noncentral case, closed-form
/// Gamma in the central limit.
fn analytic_grid(r: &Resolved, grid: &[f64], num: &NumericsArgs) -> Result<(PdfGrid, &'static str)> {
    let d = &r.derived;
    if d.noncentrality == 0.0 {
        let points = grid
            .iter()
            .map(|&t| rayleigh_pdf(t, d.dof, d.gamma1).map(|p| (t, p)))
            .collect::<Result<Vec<_>>>()?;
        Ok((
            PdfGrid {
                points,
                params: *d,
                boundary_density: rayleigh_pdf(0.0, d.dof, d.gamma1)?,
            },
            "closed-form",
        ))
    } else {
        let g = pdf_hgm(d, r.cfg.n_rx as u32, grid, num.u0, &num.settings())?;
        Ok((g, "hgm"))
    }
}

fn cmd_pdf(c: PdfCmd) -> Result<i32> {
    let r = resolve_scenario(&c.scenario)?;
    let grid = linspace(c.t_min, c.t_max, c.points)?;
    let (g, method) = analytic_grid(&r, &grid, &c.numerics)?;
    write_lines(
        &c.out,
        "t,pdf",
        g.points.iter().map(|&(t, p)| format!("{},{}", sig(t), sig(p))),
    )?;
    let mut meta = meta_base("pdf", &r.cfg, &r.derived, None);
    meta["numerics"] = c.numerics.meta();
    meta["grid"] = json!({"t_min": c.t_min, "t_max": c.t_max, "points": c.points});
    meta["method"] = json!(method);
    meta["boundary_density"] = json!(g.boundary_density);
    write_meta(&c.out, meta)?;
    Ok(0)
}

fn cmd_cdf(c: CdfCmd) -> Result<i32> {
    let r = resolve_scenario(&c.scenario)?;
    let d = &r.derived;
    let t_max = match c.t_max {
        Some(v) => v,
        None => envelope_cutoff(d.dof, d.gamma1, d.noncentrality, c.numerics.tail_tol)?.0,
    };
    let grid = linspace(c.t_min, t_max, c.points)?;
    let (g, method) = analytic_grid(&r, &grid, &c.numerics)?;
    let cdf = cdf_from_pdf(&g)?;
    write_lines(
        &c.out,
        "t,cdf",
        cdf.points.iter().map(|&(t, f)| format!("{},{}", sig(t), sig(f))),
    )?;
    let mut meta = meta_base("cdf", &r.cfg, &r.derived, None);
    meta["numerics"] = c.numerics.meta();
    meta["grid"] = json!({"t_min": c.t_min, "t_max": t_max, "points": c.points});
    meta["method"] = json!(method);
    meta["terminal_cdf"] = json!(cdf.terminal());
    write_meta(&c.out, meta)?;
    Ok(0)
}

enum SweepKind {
    Outage,
    Capacity,
}

fn cmd_sweep(c: SweepCmd, kind: SweepKind) -> Result<i32> {
    let r = resolve_scenario(&c.scenario)?;
    if c.gb_points == 0 {
        return Err(Error::invalid("gb_points must be at least 1"));
    }
    if !(c.gb_max_db >= c.gb_min_db) {
        return Err(Error::invalid("gb_max_db must not be below gb_min_db"));
    }
    let threshold = db_to_linear(c.th_db);
    let sweep: Vec<f64> = if c.gb_points == 1 {
        vec![c.gb_min_db]
    } else {
        (0..c.gb_points)
            .map(|i| {
                c.gb_min_db + (c.gb_max_db - c.gb_min_db) * i as f64 / (c.gb_points - 1) as f64
            })
            .collect()
    };
    let bits_db = 10.0 * (r.cfg.constellation_size as f64).log2().log10();
    let mut lines = Vec::with_capacity(sweep.len());
    for &gb in &sweep {
        let cfg_i = ScenarioConfig {
            gamma_s_db: gb + bits_db,
            ..r.cfg.clone()
        };
        let d = derive_params(&cfg_i, &r.rt)?;
        let (value, method) = match (&kind, d.noncentrality == 0.0) {
            (SweepKind::Outage, true) => {
                (rayleigh_outage(threshold, d.dof, d.gamma1)?, "closed-form")
            }
            (SweepKind::Outage, false) => {
                let src = HgmDensity::new(d, cfg_i.n_rx as u32)?
                    .with_numerics(c.numerics.u0, c.numerics.settings())?;
                (
                    outage_probability(&src, threshold, c.numerics.resolution)?,
                    "hgm",
                )
            }
            (SweepKind::Capacity, true) => (rayleigh_capacity(d.dof, d.gamma1)?, "closed-form"),
            (SweepKind::Capacity, false) => {
                let src = HgmDensity::new(d, cfg_i.n_rx as u32)?
                    .with_numerics(c.numerics.u0, c.numerics.settings())?;
                (
                    ergodic_capacity(&src, c.numerics.resolution, c.numerics.tail_tol)?.bpcu,
                    "hgm",
                )
            }
        };
        lines.push(format!("{},{},{}", sig(gb), sig(value), method));
    }
    let name = match kind {
        SweepKind::Outage => "outage",
        SweepKind::Capacity => "capacity",
    };
    write_lines(&c.out, "gamma_b_db,value,method", lines)?;
    let mut meta = meta_base(name, &r.cfg, &r.derived, None);
    meta["numerics"] = c.numerics.meta();
    meta["sweep"] = json!({
        "gb_min_db": c.gb_min_db,
        "gb_max_db": c.gb_max_db,
        "gb_points": c.gb_points,
    });
    if matches!(kind, SweepKind::Outage) {
        meta["threshold_db"] = json!(c.th_db);
    }
    write_meta(&c.out, meta)?;
    Ok(0)
}

fn cmd_simulate(c: SimulateCmd) -> Result<i32> {
    let r = resolve_scenario(&c.scenario)?;
    let sim = simulate(&r.cfg, &r.rt, c.samples, c.bins, c.seed)?;
    write_lines(
        &c.out,
        "t,pdf",
        sim.histogram
            .density_points()
            .iter()
            .map(|&(t, p)| format!("{},{}", sig(t), sig(p))),
    )?;
    let mut meta = meta_base("simulate", &r.cfg, &r.derived, Some(c.seed));
    meta["simulation"] = json!({
        "samples": c.samples,
        "bins": c.bins,
        "rejected": sim.rejected,
        "capacity_bpcu": sim.capacity_bpcu,
        "mean_snr": sim.mean_snr,
    });
    write_meta(&c.out, meta)?;
    Ok(0)
}

fn cmd_compare(c: CompareCmd) -> Result<i32> {
    let r = resolve_scenario(&c.scenario)?;
    let d = &r.derived;
    let sim = simulate(&r.cfg, &r.rt, c.samples, c.bins, c.seed)?;
    let t_max = match c.t_max {
        Some(v) => v,
        None => envelope_cutoff(d.dof, d.gamma1, d.noncentrality, c.numerics.tail_tol)?.0,
    };
    let grid = linspace(c.t_min, t_max, c.points)?;
    let (g, method) = analytic_grid(&r, &grid, &c.numerics)?;
    let cdf = cdf_from_pdf(&g)?;

    let ks = sim.ks_distance(|t| cdf.value_at(t));
    let terminal = cdf.terminal();
    let emp = sim.histogram.density_points();
    let max_pdf_dev = emp
        .iter()
        .map(|&(t, p)| (g.value_at(t) - p).abs())
        .fold(0.0f64, f64::max);
    let pass = ks <= COMPARE_KS_LIMIT && (terminal - 1.0).abs() <= COMPARE_TERMINAL_LIMIT;

    let n = sim.samples().len() as f64;
    write_lines(
        &c.out,
        "t,pdf_hgm,pdf_mc,cdf_hgm,cdf_mc",
        emp.iter().map(|&(t, p_mc)| {
            let below = sim.samples().partition_point(|&x| x < t) as f64;
            format!(
                "{},{},{},{},{}",
                sig(t),
                sig(g.value_at(t)),
                sig(p_mc),
                sig(cdf.value_at(t)),
                sig(below / n)
            )
        }),
    )?;
    let mut meta = meta_base("compare", &r.cfg, &r.derived, Some(c.seed));
    meta["numerics"] = c.numerics.meta();
    meta["grid"] = json!({"t_min": c.t_min, "t_max": t_max, "points": c.points});
    meta["simulation"] = json!({"samples": c.samples, "bins": c.bins, "rejected": sim.rejected});
    meta["method"] = json!(method);
    meta["metrics"] = json!({
        "ks_distance": ks,
        "terminal_cdf": terminal,
        "max_pdf_deviation": max_pdf_dev,
        "ks_limit": COMPARE_KS_LIMIT,
        "terminal_limit": COMPARE_TERMINAL_LIMIT,
        "pass": pass,
    });
    write_meta(&c.out, meta)?;

    println!("ks_distance {} (limit {})", sig(ks), sig(COMPARE_KS_LIMIT));
    println!(
        "terminal_cdf {} (limit |1 - x| <= {})",
        sig(terminal),
        sig(COMPARE_TERMINAL_LIMIT)
    );
    println!("max_pdf_deviation {}", sig(max_pdf_dev));
    println!("verdict {}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { 0 } else { 2 })
}

fn cmd_selftest() -> Result<i32> {
    let checks: Vec<(&str, Box<dyn Fn() -> std::result::Result<(), String>>)> = vec![
        (
            "integrator-decay",
            Box::new(|| {
                let y = crate::ode::integrate(
                    |_, y: &[f64; 1]| [-y[0]],
                    0.0,
                    3.0,
                    [1.0],
                    &IntegratorSettings::default(),
                )
                .map_err(|e| e.to_string())?;
                expect_close(y[0], (-3.0f64).exp(), 1e-10)
            }),
        ),
        (
            "kummer-series",
            Box::new(|| {
                let v = crate::special::hyp1f1(5, 6, 2.0).map_err(|e| e.to_string())?;
                expect_close(v, 5.486320123663312784, 1e-12)
            }),
        ),
        (
            "density-series",
            Box::new(|| {
                let v = crate::series::pdf_series(
                    1.0,
                    0.5,
                    5,
                    6,
                    &crate::series::TruncationPolicy::default(),
                )
                .map_err(|e| e.to_string())?
                .into_value()
                .map_err(|e| e.to_string())?;
                expect_close(v, 0.010994725615653887903, 1e-12)
            }),
        ),
        (
            "ray-vs-series",
            Box::new(|| {
                let pol = crate::series::TruncationPolicy::default();
                let direct = crate::series::pdf_series(2.0, 2.0, 5, 6, &pol)
                    .map_err(|e| e.to_string())?
                    .into_value()
                    .map_err(|e| e.to_string())?;
                let params = DerivedParams {
                    dof: 5,
                    k_linear: 1.0,
                    gamma1: 1.0,
                    noncentrality: 2.0,
                    gamma_b_db: 0.0,
                };
                let g = pdf_hgm(&params, 6, &[2.0], DEFAULT_U0, &IntegratorSettings::default())
                    .map_err(|e| e.to_string())?;
                expect_close(g.points[0].1, direct, 1e-8)
            }),
        ),
        (
            "central-outage",
            Box::new(|| {
                let v = rayleigh_outage(1.0, 5, 10f64.sqrt()).map_err(|e| e.to_string())?;
                expect_close(v, 2.0267986722657362834e-5, 1e-10)
            }),
        ),
        (
            "scenario-derivation",
            Box::new(|| {
                let cfg = ScenarioConfig::default();
                let rt = build_correlation(&cfg).map_err(|e| e.to_string())?;
                let d = derive_params(&cfg, &rt).map_err(|e| e.to_string())?;
                expect_close(d.gamma1, 3.1622776601683795, 1e-13)?;
                expect_close(d.noncentrality, 10.003949630201257, 1e-12)
            }),
        ),
        (
            "transform-normalization",
            Box::new(|| {
                let v = crate::series::mgf_closed(0.0, 10.0, 5, 6, 2.0).map_err(|e| e.to_string())?;
                expect_close(v, 1.0, 1e-14)
            }),
        ),
    ];
    let mut failures = 0;
    for (name, f) in checks {
        match f() {
            Ok(()) => println!("ok {name}"),
            Err(msg) => {
                failures += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    if failures == 0 {
        println!("selftest passed");
        Ok(0)
    } else {
        println!("selftest failed ({failures} checks)");
        Ok(2)
    }
}

fn expect_close(got: f64, want: f64, rel: f64) -> std::result::Result<(), String> {
    if (got - want).abs() <= rel * want.abs().max(1e-300) {
        Ok(())
    } else {
        Err(format!("got {got:e}, want {want:e} (rel {rel:e})"))
    }
}
