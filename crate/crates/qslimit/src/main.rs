//! Pipeline CLI: iterate the characteristic-function fixed point, certify
//! the transform bounds, invert the density, simulate quicksort, fit the
//! decay rate, and run the contour recovery — staged through files in an
//! output directory so the expensive iteration is reused by every later
//! stage.
//!
//! Exit codes: 0 success, 2 convergence failure, 3 I/O failure,
//! 4 certification/threshold failure, 5 missing or malformed dependency.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use qslimit::charfn::{
    envelope_certify, equation_residual, fit_decay, iterate_to_fixpoint, with_residual,
    CharFnError, GridCharFn,
};
use qslimit::density::{compare_histogram, invert_density};
use qslimit::laplace::{
    calibrate_a, certify_deriv_bounds, certify_eq2_asymptotic, certify_strip_bounds,
    certify_sup_bound, contour_recover_f, shift_residual, BoundId, BoundReport, BoundSample,
    ContinuationCache, SupScan,
};
use qslimit::quicksim::simulate;
use qslimit::Complex;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "qslimit", version, about = "Limiting quicksort distribution toolkit")]
struct Cli {
    /// Key=value config file overriding the defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for artifacts (must exist).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Gate on acceptance thresholds (exit 4 on failure) instead of only reporting.
    #[arg(long, global = true)]
    strict: bool,
    /// RNG seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the fixed-point iteration; writes charfn.csv and meta.json.
    Iterate,
    /// Certify bounds against charfn.csv; writes bounds/<ID>.json.
    Certify {
        /// Comma-separated bound ids (default: all).
        #[arg(long, value_delimiter = ',')]
        which: Vec<String>,
    },
    /// Invert the density; writes density.csv and density.json.
    Density,
    /// Exact-cost quicksort simulation; writes sim.json.
    Simulate,
    /// Fit the exponential decay rate; writes decay.json.
    Decay,
    /// Bromwich-contour recovery of f; writes contour.json.
    Contour,
    /// Full pipeline in dependency order.
    All,
}

/// Resolved run configuration; field order is the hash canonical order.
#[derive(Debug, Clone, Serialize)]
struct RunConfig {
    t_max: f64,
    h: f64,
    tol: f64,
    max_iter: usize,
    sigma_min: f64,
    seed: u64,
    n: usize,
    samples: usize,
    x_min: f64,
    x_max: f64,
    x_step: f64,
    output_dir: String,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            t_max: 200.0,
            h: 0.02,
            tol: 1e-8,
            max_iter: 60,
            sigma_min: 0.05,
            seed: 42,
            n: 10_000,
            samples: 100_000,
            x_min: -2.0,
            x_max: 8.0,
            x_step: 0.01,
            output_dir: "out".into(),
        }
    }
}

impl RunConfig {
    /// Decay-fit window: [30, 150] at the default t_max = 200, scaled
    /// proportionally for smaller grids.
    fn fit_window(&self) -> (f64, f64) {
        (0.15 * self.t_max, 0.75 * self.t_max)
    }

    fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canon.as_bytes());
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for b in digest {
            write!(out, "{b:02x}").unwrap();
        }
        out
    }
}

enum AppError {
    Convergence(String),
    Io(String),
    Certification(String),
    Dependency(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Convergence(_) => 2,
            AppError::Io(_) => 3,
            AppError::Certification(_) => 4,
            AppError::Dependency(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Convergence(m)
            | AppError::Io(m)
            | AppError::Certification(m)
            | AppError::Dependency(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's default exit code 2 collides with "convergence failure";
            // usage errors report as EX_USAGE instead.
            let _ = e.print();
            return ExitCode::from(64);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.to_string_lossy().into_owned();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out_dir = PathBuf::from(&cfg.output_dir);
    if !out_dir.is_dir() {
        return Err(AppError::Io(format!(
            "output directory {} does not exist",
            out_dir.display()
        )));
    }
    let _lock = LockGuard::acquire(&out_dir)?;
    match cli.command {
        Command::Iterate => cmd_iterate(&cfg, &out_dir),
        Command::Certify { which } => cmd_certify(&cfg, &out_dir, &which),
        Command::Density => cmd_density(&cfg, &out_dir, cli.strict),
        Command::Simulate => cmd_simulate(&cfg, &out_dir, cli.strict),
        Command::Decay => cmd_decay(&cfg, &out_dir, cli.strict),
        Command::Contour => cmd_contour(&cfg, &out_dir, cli.strict),
        Command::All => {
            cmd_iterate(&cfg, &out_dir)?;
            cmd_certify(&cfg, &out_dir, &[])?;
            cmd_decay(&cfg, &out_dir, cli.strict)?;
            cmd_density(&cfg, &out_dir, cli.strict)?;
            cmd_simulate(&cfg, &out_dir, cli.strict)?;
            cmd_contour(&cfg, &out_dir, cli.strict)
        }
    }
}

/// Guards an output directory against concurrent runs; the lock file is
/// removed on drop.
struct LockGuard {
    path: PathBuf,
}

impl LockGuard {
    fn acquire(dir: &Path) -> Result<LockGuard, AppError> {
        let path = dir.join(".qslimit.lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(LockGuard { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(AppError::Io(format!(
                "output directory is locked by another run ({}); remove the stale lock if no run is active",
                path.display()
            ))),
            Err(e) => Err(AppError::Io(format!("cannot create lock file: {e}"))),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, AppError> {
    let mut cfg = RunConfig::default();
    let Some(path) = path else { return Ok(cfg) };
    let text = fs::read_to_string(path)
        .map_err(|e| AppError::Dependency(format!("cannot read config {}: {e}", path.display())))?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            AppError::Dependency(format!("config line {}: expected key=value", lineno + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |e: String| AppError::Dependency(format!("config key {key}: {e}"));
        macro_rules! parse {
            ($field:ident) => {
                cfg.$field = value.parse().map_err(|e| bad(format!("{e}")))?
            };
        }
        match key {
            "t_max" => parse!(t_max),
            "h" => parse!(h),
            "tol" => parse!(tol),
            "max_iter" => parse!(max_iter),
            "sigma_min" => parse!(sigma_min),
            "seed" => parse!(seed),
            "n" => parse!(n),
            "samples" => parse!(samples),
            "x_min" => parse!(x_min),
            "x_max" => parse!(x_max),
            "x_step" => parse!(x_step),
            "output_dir" => cfg.output_dir = value.to_string(),
            other => {
                return Err(AppError::Dependency(format!(
                    "unknown config key '{other}' (line {})",
                    lineno + 1
                )))
            }
        }
    }
    if !(cfg.t_max >= 10.0 && cfg.h > 0.0 && cfg.tol > 0.0 && cfg.x_step > 0.0)
        || cfg.x_max <= cfg.x_min
        || cfg.max_iter == 0
        || cfg.n < 2
        || cfg.samples < 1000
        || cfg.sigma_min <= 0.0
    {
        return Err(AppError::Dependency("config values out of range".into()));
    }
    Ok(cfg)
}

fn write_file(path: &Path, contents: &str) -> Result<(), AppError> {
    fs::write(path, contents)
        .map_err(|e| AppError::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), AppError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| AppError::Io(format!("serialization failed: {e}")))?;
    write_file(path, &(text + "\n"))
}


/// Functional-equation residual samples clipped to the grid.
fn residual_samples(t_max: f64) -> Vec<f64> {
    [1.0, 5.0, 10.0, 20.0].into_iter().filter(|&t| t <= t_max).collect()
}

/// Load charfn.csv, attach the equation residual and decay fit the later
/// stages need for their error budgets.
fn load_charfn(cfg: &RunConfig, dir: &Path) -> Result<GridCharFn, AppError> {
    let path = dir.join("charfn.csv");
    let text = fs::read_to_string(&path).map_err(|e| {
        AppError::Dependency(format!(
            "missing dependency {} (run `qslimit iterate` first): {e}",
            path.display()
        ))
    })?;
    let f = GridCharFn::from_csv(&text)
        .map_err(|e| AppError::Dependency(format!("malformed {}: {e}", path.display())))?;
    let residual = equation_residual(&f, &residual_samples(f.t_max()))
        .map_err(|e| AppError::Dependency(format!("loaded grid unusable: {e}")))?;
    let f = with_residual(f, residual);
    match fit_decay(&f, cfg.fit_window()) {
        Ok(fit) => Ok(f.with_decay_fit(fit)),
        // A grid too short for the decay window still serves the certifiers;
        // tail budgets then fall back to the unit bound on |f|.
        Err(CharFnError::WindowTooSmall { .. }) => Ok(f),
        Err(e) => Err(AppError::Dependency(format!("decay fit failed: {e}"))),
    }
}

#[derive(Serialize)]
struct IterateMeta {
    config: RunConfig,
    config_hash: String,
    iteration_count: usize,
    final_sup_diff: f64,
    equation_residual: f64,
    /// Successive sup-difference ratios diff[k+1]/diff[k].
    contraction_ratios: Vec<f64>,
}

fn cmd_iterate(cfg: &RunConfig, dir: &Path) -> Result<(), AppError> {
    let (f, diffs) = iterate_to_fixpoint(cfg.t_max, cfg.h, cfg.max_iter, cfg.tol).map_err(|e| {
        match e {
            CharFnError::NoConvergence { .. } | CharFnError::Overshoot { .. } => {
                AppError::Convergence(e.to_string())
            }
            other => AppError::Dependency(other.to_string()),
        }
    })?;
    let residual = equation_residual(&f, &residual_samples(f.t_max()))
        .map_err(|e| AppError::Convergence(e.to_string()))?;
    let ratios = diffs.windows(2).map(|w| w[1] / w[0]).collect();
    write_file(&dir.join("charfn.csv"), &f.to_csv())?;
    write_json(
        &dir.join("meta.json"),
        &IterateMeta {
            config: cfg.clone(),
            config_hash: cfg.hash(),
            iteration_count: f.iteration_count(),
            final_sup_diff: diffs.last().copied().unwrap_or(f64::NAN),
            equation_residual: residual,
            contraction_ratios: ratios,
        },
    )?;
    println!(
        "iterate: converged in {} iterations, sup-diff {:.3e}, residual {:.3e}",
        f.iteration_count(),
        diffs.last().copied().unwrap_or(f64::NAN),
        residual
    );
    Ok(())
}

const ALL_BOUND_IDS: [&str; 7] = [
    "EQ1_SHIFT",
    "EQ2_ASYMPTOTIC",
    "LEMMA1_DERIV",
    "LEMMA2_LOWER",
    "LEMMA3_SUP",
    "LEMMA4_STRIP",
    "LEMMA5_REGION",
];

/// Uniform wrapper for bounds/<ID>.json.
#[derive(Serialize)]
struct CertifyArtifact {
    id: String,
    pass: bool,
    config_hash: String,
    reports: Vec<BoundReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    scans: Vec<SupScan>,
}

fn cmd_certify(cfg: &RunConfig, dir: &Path, which: &[String]) -> Result<(), AppError> {
    let f = load_charfn(cfg, dir)?;
    let requested: Vec<String> = if which.is_empty() {
        ALL_BOUND_IDS.iter().map(|s| s.to_string()).collect()
    } else {
        which.to_vec()
    };
    for id in &requested {
        if !ALL_BOUND_IDS.contains(&id.as_str()) {
            return Err(AppError::Dependency(format!(
                "unknown bound id '{id}'; known: {}",
                ALL_BOUND_IDS.join(", ")
            )));
        }
    }
    let bounds_dir = dir.join("bounds");
    fs::create_dir_all(&bounds_dir)
        .map_err(|e| AppError::Io(format!("cannot create {}: {e}", bounds_dir.display())))?;

    let map_lap = |e: qslimit::laplace::LaplaceError| AppError::Dependency(e.to_string());
    let needs_a = requested.iter().any(|id| {
        matches!(
            id.as_str(),
            "EQ2_ASYMPTOTIC" | "LEMMA1_DERIV" | "LEMMA2_LOWER" | "LEMMA4_STRIP" | "LEMMA5_REGION"
        )
    });
    let a = if needs_a { Some(calibrate_a(&f).map_err(map_lap)?) } else { None };
    let needs_scan1 = requested
        .iter()
        .any(|id| matches!(id.as_str(), "LEMMA3_SUP" | "LEMMA4_STRIP" | "LEMMA5_REGION"));
    let scan1 = if needs_scan1 {
        Some(certify_sup_bound(1.0, (-50.0, 50.0), 0.1, &f).map_err(map_lap)?)
    } else {
        None
    };

    let mut artifacts: BTreeMap<String, CertifyArtifact> = BTreeMap::new();
    fn add(
        artifacts: &mut BTreeMap<String, CertifyArtifact>,
        hash: &str,
        id: &str,
        reports: Vec<BoundReport>,
        scans: Vec<SupScan>,
    ) {
        let pass = reports.iter().all(|r| r.pass)
            && scans.iter().all(|s| s.report.pass)
            && (!reports.is_empty() || !scans.is_empty());
        artifacts.insert(
            id.to_string(),
            CertifyArtifact {
                id: id.to_string(),
                pass,
                config_hash: hash.to_string(),
                reports,
                scans,
            },
        );
    }
    let hash = cfg.hash();

    for id in &requested {
        match id.as_str() {
            "EQ1_SHIFT" => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                let mut samples = Vec::new();
                for _ in 0..20 {
                    let s = Complex::new(rng.random_range(0.5..3.0), rng.random_range(-5.0..5.0));
                    let r = shift_residual(s, &f).map_err(map_lap)?;
                    samples.push(BoundSample {
                        re_s: s.re,
                        im_s: s.im,
                        measured: r.residual,
                        allowed: r.budget,
                        err_est: 0.0,
                    });
                }
                let worst = samples
                    .iter()
                    .map(BoundSample::margin)
                    .fold(f64::NEG_INFINITY, f64::max);
                let pass = worst <= 0.0;
                let report = BoundReport {
                    id: BoundId::Eq1Shift,
                    tolerance: 0.0,
                    samples,
                    worst_margin: worst,
                    pass,
                    constants: BTreeMap::new(),
                };
                add(&mut artifacts, &hash, id, vec![report], vec![]);
            }
            "EQ2_ASYMPTOTIC" => {
                let r = certify_eq2_asymptotic(&f, a.unwrap()).map_err(map_lap)?;
                add(&mut artifacts, &hash, id, vec![r], vec![]);
            }
            "LEMMA1_DERIV" | "LEMMA2_LOWER" => {
                if artifacts.contains_key(id.as_str()) {
                    continue;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xD1D2);
                let pts: Vec<Complex> = (0..10)
                    .map(|_| Complex::new(rng.random_range(0.5..3.0), rng.random_range(-4.0..4.0)))
                    .collect();
                let (r1, r2) = certify_deriv_bounds(&pts, 2, &f, a.unwrap()).map_err(map_lap)?;
                add(&mut artifacts, &hash, "LEMMA1_DERIV", vec![r1], vec![]);
                add(&mut artifacts, &hash, "LEMMA2_LOWER", vec![r2], vec![]);
            }
            "LEMMA3_SUP" => {
                let mut scans = vec![scan1.clone().unwrap()];
                for sigma in [0.5, 2.0] {
                    scans.push(certify_sup_bound(sigma, (-50.0, 50.0), 0.1, &f).map_err(map_lap)?);
                }
                add(&mut artifacts, &hash, id, vec![], scans);
            }
            "LEMMA4_STRIP" | "LEMMA5_REGION" => {
                if artifacts.contains_key(id.as_str()) {
                    continue;
                }
                let mut cache = ContinuationCache::new(a.unwrap());
                let (r4, r5) = certify_strip_bounds(&f, scan1.as_ref().unwrap(), &mut cache)
                    .map_err(map_lap)?;
                add(&mut artifacts, &hash, "LEMMA4_STRIP", vec![r4], vec![]);
                add(&mut artifacts, &hash, "LEMMA5_REGION", vec![r5], vec![]);
            }
            _ => unreachable!(),
        }
    }

    let mut all_pass = true;
    for (id, artifact) in &artifacts {
        write_json(&bounds_dir.join(format!("{id}.json")), artifact)?;
        println!("certify {id}: {}", if artifact.pass { "pass" } else { "FAIL" });
        all_pass &= artifact.pass;
    }
    if all_pass {
        Ok(())
    } else {
        Err(AppError::Certification("one or more bound certifications failed".into()))
    }
}

#[derive(Serialize)]
struct DecayArtifact {
    config: RunConfig,
    config_hash: String,
    eta_hat: f64,
    log_c_hat: f64,
    fit_window: (f64, f64),
    rms_residual: f64,
    envelope_max_ratio: f64,
    envelope_pass: bool,
    /// eta_hat refit over alternative windows (lo, hi, eta_hat); gauges how
    /// sensitive the estimate is to the window choice.
    window_sensitivity: Vec<(f64, f64, f64)>,
}

fn cmd_decay(cfg: &RunConfig, dir: &Path, strict: bool) -> Result<(), AppError> {
    let f = load_charfn(cfg, dir)?;
    let fit = fit_decay(&f, cfg.fit_window())
        .map_err(|e| AppError::Dependency(format!("decay fit failed: {e}")))?;
    let env = envelope_certify(&f, 10.0_f64.min(0.5 * cfg.t_max).max(1.0), 1.05);
    let mut window_sensitivity = Vec::new();
    for (lo, hi) in [(0.10, 0.60), (0.15, 0.60), (0.20, 0.80), (0.25, 0.75)] {
        let window = (lo * cfg.t_max, hi * cfg.t_max);
        if let Ok(alt) = fit_decay(&f, window) {
            window_sensitivity.push((window.0, window.1, alt.eta_hat));
        }
    }
    write_json(
        &dir.join("decay.json"),
        &DecayArtifact {
            config: cfg.clone(),
            config_hash: cfg.hash(),
            eta_hat: fit.eta_hat,
            log_c_hat: fit.log_c_hat,
            fit_window: fit.fit_window,
            rms_residual: fit.rms_residual,
            envelope_max_ratio: env.max_ratio,
            envelope_pass: env.pass,
            window_sensitivity,
        },
    )?;
    println!(
        "decay: eta_hat {:.4}, rms residual {:.3e}, envelope ratio {:.3}",
        fit.eta_hat, fit.rms_residual, env.max_ratio
    );
    if strict && (fit.eta_hat <= 0.0 || !env.pass) {
        return Err(AppError::Certification("decay/envelope thresholds not met".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct DensityArtifact {
    config: RunConfig,
    config_hash: String,
    mass: f64,
    mean: f64,
    second_moment: f64,
    trunc_bound: f64,
    eta_used: f64,
    points: usize,
}

fn cmd_density(cfg: &RunConfig, dir: &Path, strict: bool) -> Result<(), AppError> {
    let f = load_charfn(cfg, dir)?;
    let dg = invert_density(&f, cfg.x_min, cfg.x_max, cfg.x_step)
        .map_err(|e| AppError::Dependency(e.to_string()))?;
    write_file(&dir.join("density.csv"), &dg.to_csv())?;
    let artifact = DensityArtifact {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        mass: dg.mass(),
        mean: dg.mean(),
        second_moment: dg.second_moment(),
        trunc_bound: dg.trunc_bound,
        eta_used: dg.eta_used,
        points: dg.len(),
    };
    write_json(&dir.join("density.json"), &artifact)?;
    println!(
        "density: mass {:.6}, mean {:+.2e}, second moment {:.4}",
        artifact.mass, artifact.mean, artifact.second_moment
    );
    if strict && ((artifact.mass - 1.0).abs() > 1e-3 || artifact.mean.abs() > 1e-3) {
        return Err(AppError::Certification("density mass/mean thresholds not met".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct SimArtifact {
    config: RunConfig,
    config_hash: String,
    summary: qslimit::quicksim::SimSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    histogram: Option<qslimit::density::DivergenceReport>,
}

fn cmd_simulate(cfg: &RunConfig, dir: &Path, strict: bool) -> Result<(), AppError> {
    let summary = simulate(cfg.n, cfg.samples, cfg.seed);
    println!(
        "simulate: n {}, samples {}, empirical mean {:+.4e}, variance {:.4}",
        summary.n, summary.samples, summary.empirical_mean, summary.empirical_variance
    );
    // When a density grid is already on disk, attach the CDF comparison.
    let histogram = match fs::read_to_string(dir.join("charfn.csv")) {
        Ok(_) if dir.join("density.csv").exists() => {
            let f = load_charfn(cfg, dir)?;
            match invert_density(&f, cfg.x_min, cfg.x_max, cfg.x_step) {
                Ok(dg) => compare_histogram(&dg, &summary).ok(),
                Err(_) => None,
            }
        }
        _ => None,
    };
    if let Some(h) = &histogram {
        println!(
            "simulate: sup CDF distance {:.4} (noise floor {:.4})",
            h.sup_cdf_distance, h.mc_noise_floor
        );
        if strict && h.sup_cdf_distance >= 0.01 {
            write_json(
                &dir.join("sim.json"),
                &SimArtifact {
                    config: cfg.clone(),
                    config_hash: cfg.hash(),
                    summary,
                    histogram,
                },
            )?;
            return Err(AppError::Certification("sup CDF distance threshold not met".into()));
        }
    }
    write_json(
        &dir.join("sim.json"),
        &SimArtifact {
            config: cfg.clone(),
            config_hash: cfg.hash(),
            summary,
            histogram,
        },
    )
}

#[derive(Serialize)]
struct ContourPoint {
    t: f64,
    recovered: (f64, f64),
    truth: (f64, f64),
    diff: f64,
    budget: f64,
    decay_ceiling: f64,
    pass: bool,
}

#[derive(Serialize)]
struct ContourArtifact {
    config: RunConfig,
    config_hash: String,
    eta_used: f64,
    eps_hat: f64,
    shift_depth: i64,
    points: Vec<ContourPoint>,
    pass: bool,
}

fn cmd_contour(cfg: &RunConfig, dir: &Path, strict: bool) -> Result<(), AppError> {
    let f = load_charfn(cfg, dir)?;
    let fit = f
        .decay_fit()
        .cloned()
        .ok_or_else(|| AppError::Dependency("contour needs a decay fit; grid too short".into()))?;
    let map_lap = |e: qslimit::laplace::LaplaceError| AppError::Dependency(e.to_string());
    let scan = certify_sup_bound(1.0, (-50.0, 50.0), 0.1, &f).map_err(map_lap)?;
    let eps = scan.eps_hat.filter(|&e| e > 0.0).ok_or_else(|| {
        AppError::Dependency("eps_hat from the sigma = 1 sup scan is nonpositive".into())
    })?;
    let a = calibrate_a(&f).map_err(map_lap)?;
    let mut cache = ContinuationCache::new(a);
    let eta = fit.eta_hat.min(eps / 4.0);
    let mut points = Vec::new();
    let mut eta_used = eta;
    for t in [5.0, 10.0, 20.0] {
        if t >= cfg.t_max {
            continue;
        }
        let (rec, budget) = contour_recover_f(t, eta, &f, &mut cache, 8e-3).map_err(map_lap)?;
        let truth = f.eval(t).map_err(|e| AppError::Dependency(e.to_string()))?;
        let diff = (rec - truth).norm();
        // eta is floor-quantized inside contour_recover_f; reconstruct it for
        // the decay ceiling.
        let eta_q = (eta * 64.0).floor() / 64.0;
        eta_used = eta_q;
        let ceiling = 20.0 * (-eta_q * t).exp();
        points.push(ContourPoint {
            t,
            recovered: (rec.re, rec.im),
            truth: (truth.re, truth.im),
            diff,
            budget,
            decay_ceiling: ceiling,
            pass: diff <= budget && rec.norm() <= ceiling,
        });
    }
    let pass = !points.is_empty() && points.iter().all(|p| p.pass);
    write_json(
        &dir.join("contour.json"),
        &ContourArtifact {
            config: cfg.clone(),
            config_hash: cfg.hash(),
            eta_used,
            eps_hat: eps,
            shift_depth: cache.shift_depth,
            points,
            pass,
        },
    )?;
    println!("contour: eta {eta_used:.4}, {}", if pass { "pass" } else { "FAIL" });
    if strict && !pass {
        return Err(AppError::Certification("contour recovery thresholds not met".into()));
    }
    Ok(())
}
