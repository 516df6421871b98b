use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use desboves::bifurcation::{discrete_laplacian, run_sweep, write_grid_csv, BifurcationGrid, LaplacianCell, Rect, SweepConfig};
use desboves::hausdorff::hausdorff_distance;
use desboves::julia::{matched_clouds, render_slice, SliceChart, SliceSpec, DEFAULT_ESCAPE_RADIUS, DEFAULT_MAX_ITER};
use desboves::measure::{LyapunovEstimate, LyapunovMethod};
use desboves::misiurewicz::{check_misiurewicz, density_probe, misiurewicz_candidates, Target, FINDER_TOL, MAX_DEPTH};
use desboves::rng::derive_seed;
use desboves::{selftest as checks, DesbovesMap};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{parse_chart, parse_complex, parse_from_str, parse_list, parse_method, parse_rect, parse_targets, ConfigFile};
use crate::{CliError, Common};

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn load(common: &Common, allowed: &[&str]) -> Result<ConfigFile, CliError> {
    let file = ConfigFile::load(common.config.as_deref())?;
    if let Some(k) = file.keys().find(|k| !allowed.contains(k)) {
        return Err(CliError::Config(format!("unknown config key '{k}' for this command")));
    }
    crate::init_threads(file.pick(common.threads, "threads", parse_from_str)?)?;
    Ok(file)
}

fn out_dir(common: &Common, file: &ConfigFile) -> Result<PathBuf, CliError> {
    let dir = file.pick(common.out.clone(), "out", |s| Ok(PathBuf::from(s)))?.unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn nonzero(l: Complex64) -> Result<Complex64, CliError> {
    if l.norm_sqr() == 0.0 {
        return Err(CliError::Config(desboves::Error::DegenerateLambda.to_string()));
    }
    Ok(l)
}

fn positive<T: PartialOrd + Default + std::fmt::Display>(v: T, name: &str) -> Result<T, CliError> {
    if v <= T::default() {
        return Err(CliError::Config(format!("{name} must be positive, got {v}")));
    }
    Ok(v)
}

fn required<T>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("--{name} is required")))
}

/// Writes via a temporary sibling and renames, so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn fmt_complex(z: Complex64) -> String {
    format!("{},{}", z.re, z.im)
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[command(flatten)]
    pub common: Common,
    /// parameter λ, e.g. 2, -0.5+0.2i or 2,-0.5
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// x, y, z (the invariant lines) or fiber:<w> (the pencil line over w)
    #[arg(long)]
    chart: Option<String>,
    /// center of the view in the slice coordinate
    #[arg(long, allow_hyphen_values = true)]
    center: Option<String>,
    #[arg(long)]
    half_width: Option<f64>,
    /// pixels per side
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    escape_radius: Option<f64>,
    #[arg(long)]
    max_iter: Option<u32>,
    /// recorded in the sidecar; rendering itself is deterministic
    #[arg(long)]
    seed: Option<u64>,
}

pub fn render(a: RenderArgs) -> Result<(), CliError> {
    let f = load(&a.common, &["out", "threads", "lambda", "chart", "center", "half-width", "resolution", "escape-radius", "max-iter", "seed"])?;
    let lambda = nonzero(required(f.pick_str(a.lambda.as_deref(), "lambda", parse_complex)?, "lambda")?)?;
    let chart = f.pick_str(a.chart.as_deref(), "chart", parse_chart)?.unwrap_or(SliceChart::X);
    let center = f.pick_str(a.center.as_deref(), "center", parse_complex)?.unwrap_or_default();
    let half = positive(f.pick(a.half_width, "half-width", parse_from_str)?.unwrap_or(2.0), "half-width")?;
    let resolution = f.pick(a.resolution, "resolution", parse_from_str)?.unwrap_or(512);
    let radius = f.pick(a.escape_radius, "escape-radius", parse_from_str)?.unwrap_or(DEFAULT_ESCAPE_RADIUS);
    let max_iter = positive(f.pick(a.max_iter, "max-iter", parse_from_str)?.unwrap_or(DEFAULT_MAX_ITER), "max-iter")?;
    let seed = f.pick(a.seed, "seed", parse_from_str)?.unwrap_or(0);
    if radius <= 1.0 {
        return Err(CliError::Config(format!("escape-radius must exceed 1, got {radius}")));
    }
    let spec = SliceSpec::square(chart, center, half, resolution);
    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let dir = out_dir(&a.common, &f)?;

    let map = DesbovesMap::new(lambda)?;
    let raster = render_slice(&map, &spec, radius, max_iter)?;
    let mut pgm = Vec::new();
    raster.write_pgm(&mut pgm)?;
    let mut side = Vec::new();
    raster.write_sidecar(&mut side, seed)?;
    writeln!(side, "version={VERSION}")?;
    write_atomic(&dir.join("render.pgm"), &pgm)?;
    write_atomic(&dir.join("render.txt"), &side)?;
    eprintln!("{} of {} pixels bounded", raster.bounded_count(), resolution * resolution);
    Ok(())
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// re_min,re_max,im_min,im_max
    #[arg(long, allow_hyphen_values = true)]
    rect: Option<String>,
    #[arg(long)]
    step: Option<f64>,
    /// base samples per node
    #[arg(long)]
    samples: Option<usize>,
    /// backward-walk depth
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// critical (critical-orbit Green functions) or cloud (log-Jacobian averages)
    #[arg(long)]
    method: Option<String>,
    /// also write laplacian.pgm
    #[arg(long)]
    heatmap: bool,
    /// stop after this many newly computed rows, leaving the checkpoint behind
    #[arg(long, hide = true)]
    stop_after_rows: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct SweepManifest {
    version: String,
    rect: Rect,
    step: f64,
    samples: usize,
    depth: usize,
    seed: u64,
    method: LyapunovMethod,
    nx: usize,
    ny: usize,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    manifest: SweepManifest,
    rows: Vec<Vec<Option<LyapunovEstimate>>>,
}

pub fn sweep(a: SweepArgs) -> Result<(), CliError> {
    let f = load(&a.common, &["out", "threads", "rect", "step", "samples", "depth", "seed", "method", "heatmap"])?;
    let rect = required(f.pick_str(a.rect.as_deref(), "rect", parse_rect)?, "rect")?;
    let step = positive(required(f.pick(a.step, "step", parse_from_str)?, "step")?, "step")?;
    let samples = f.pick(a.samples, "samples", parse_from_str)?.unwrap_or(4000);
    let depth = positive(f.pick(a.depth, "depth", parse_from_str)?.unwrap_or(25), "depth")?;
    let seed = required(f.pick(a.seed, "seed", parse_from_str)?, "seed")?;
    let method = f.pick_str(a.method.as_deref(), "method", parse_method)?.unwrap_or_default();
    let heatmap = a.heatmap || f.pick(None, "heatmap", parse_from_str::<bool>)?.unwrap_or(false);
    let config = SweepConfig { rect, step, samples, depth, seed, method };
    let (nx, ny) = config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let dir = out_dir(&a.common, &f)?;
    let manifest = SweepManifest { version: VERSION.into(), rect, step, samples, depth, seed, method, nx, ny };

    let ckpt_path = dir.join("sweep.checkpoint.json");
    let done = match fs::read(&ckpt_path) {
        Ok(bytes) => {
            let ck: Checkpoint = serde_json::from_slice(&bytes)?;
            if ck.manifest != manifest {
                return Err(CliError::Config(format!("{} belongs to a different sweep; remove it to start over", ckpt_path.display())));
            }
            eprintln!("resuming after {} of {ny} rows", ck.rows.len());
            ck.rows
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e.into()),
    };

    let first = done.len();
    let mut stopped = false;
    let result = run_sweep(&config, done, |row, rows| {
        let ck = Checkpoint { manifest: manifest.clone(), rows: rows.to_vec() };
        let bytes = serde_json::to_vec(&ck).map_err(|e| desboves::Error::Precondition(e.to_string()))?;
        write_atomic(&ckpt_path, &bytes).map_err(|e| desboves::Error::Precondition(e.to_string()))?;
        eprintln!("row {}/{ny}", row + 1);
        if a.stop_after_rows.is_some_and(|k| row + 1 - first >= k) && row + 1 < ny {
            stopped = true;
            return Err(desboves::Error::Precondition("stopped".into()));
        }
        Ok(())
    });
    if stopped {
        eprintln!("stopped; checkpoint at {}", ckpt_path.display());
        return Ok(());
    }
    let grid = result?;
    let lap = discrete_laplacian(&grid);

    let mut csv = BufWriter::new(Vec::new());
    write_grid_csv(&grid, &lap, &mut csv)?;
    write_atomic(&dir.join("sweep.csv"), &csv.into_inner().map_err(|e| e.into_error())?)?;
    write_atomic(&dir.join("manifest.json"), &serde_json::to_vec_pretty(&manifest)?)?;
    if heatmap {
        write_atomic(&dir.join("laplacian.pgm"), &laplacian_pgm(&grid, &lap))?;
    }
    fs::remove_file(&ckpt_path)?;

    let interior = lap.iter().flatten().count();
    let positive = lap.iter().flatten().filter(|c| c.positive).count();
    eprintln!("{positive} of {interior} interior nodes have Δ_h L > 3·stderr");
    Ok(())
}

/// Gray levels 1..=255 scaled between the smallest and largest Laplacian; 0 where undefined.
fn laplacian_pgm(grid: &BifurcationGrid, lap: &[Option<LaplacianCell>]) -> Vec<u8> {
    let vals = lap.iter().flatten().map(|c| c.value);
    let lo = vals.clone().fold(f64::INFINITY, f64::min);
    let hi = vals.fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n{} {}\n255\n", grid.nx, grid.ny).into_bytes();
    // top row is the largest imaginary part
    for row in (0..grid.ny).rev() {
        for col in 0..grid.nx {
            out.push(lap[row * grid.nx + col].map_or(0, |c| 1 + (254.0 * (c.value - lo) / span).round() as u8));
        }
    }
    out
}

#[derive(Args, Debug)]
pub struct MisiurewiczArgs {
    #[command(flatten)]
    pub common: Common,
    /// x0, z0 or both
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// search for the candidate nearest this λ instead of listing all
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// search radius around --lambda
    #[arg(long)]
    radius: Option<f64>,
    /// residual tolerance for clauses (i) to (iii)
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Serialize)]
struct MisiurewiczOutput {
    version: &'static str,
    mode: &'static str,
    targets: Vec<Target>,
    max_depth: usize,
    lambda: Option<Complex64>,
    radius: Option<f64>,
    tolerance: f64,
    reports: Vec<desboves::misiurewicz::VerificationReport>,
}

pub fn misiurewicz(a: MisiurewiczArgs) -> Result<(), CliError> {
    let f = load(&a.common, &["out", "threads", "target", "max-depth", "lambda", "radius", "tolerance"])?;
    let targets = f.pick_str(a.target.as_deref(), "target", parse_targets)?.unwrap_or(Target::BOTH.to_vec());
    let max_depth = f.pick(a.max_depth, "max-depth", parse_from_str)?.unwrap_or(3);
    let lambda = f.pick_str(a.lambda.as_deref(), "lambda", parse_complex)?.map(nonzero).transpose()?;
    let radius = f.pick(a.radius, "radius", parse_from_str)?;
    let tol = positive(f.pick(a.tolerance, "tolerance", parse_from_str)?.unwrap_or(FINDER_TOL), "tolerance")?;
    if max_depth == 0 || max_depth > MAX_DEPTH {
        return Err(CliError::Config(format!("max-depth must be between 1 and {MAX_DEPTH}")));
    }
    let dir = out_dir(&a.common, &f)?;

    let (mode, cands) = match lambda {
        Some(l0) => {
            let r = positive(radius.unwrap_or(0.1), "radius")?;
            match density_probe(l0, r, max_depth) {
                Ok(c) => ("probe", vec![c]),
                Err(desboves::Error::NotFound { depth, closest }) => {
                    return Err(CliError::Failed(format!("no verified candidate within {r} of {l0} up to depth {depth}; closest miss {closest:e}")))
                }
                Err(e) => return Err(e.into()),
            }
        }
        None => {
            let mut all = Vec::new();
            for &t in &targets {
                all.extend(misiurewicz_candidates(t, max_depth)?);
            }
            ("list", all)
        }
    };
    let reports: Vec<_> = cands.iter().map(|c| check_misiurewicz(c, tol)).collect();
    let rejected = reports.iter().filter(|r| r.failed.iter().any(|c| *c != desboves::bifurcation::Clause::Transversal)).count();
    let out = MisiurewiczOutput { version: VERSION, mode, targets, max_depth, lambda, radius, tolerance: tol, reports };
    write_atomic(&dir.join("misiurewicz.json"), &serde_json::to_vec_pretty(&out)?)?;
    eprintln!("{} candidates written", out.reports.len());
    if rejected > 0 {
        return Err(CliError::Failed(format!("{rejected} candidates fail clauses (i)-(iii) at tolerance {tol:e}")));
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct ContinuityArgs {
    #[command(flatten)]
    pub common: Common,
    /// base parameter λ₀
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// points per cloud
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// real increments δ, largest first
    #[arg(long)]
    deltas: Option<String>,
}

/// Non-increasing up to twice the noise floor, with the last value below `last_max`.
pub fn trend_holds(d: &[f64], noise: f64, last_max: f64) -> bool {
    d.windows(2).all(|w| w[1] <= w[0] + 2.0 * noise) && d.last().is_some_and(|&x| x < last_max)
}

pub fn continuity(a: ContinuityArgs) -> Result<(), CliError> {
    let f = load(&a.common, &["out", "threads", "lambda", "samples", "depth", "seed", "deltas"])?;
    let lambda = nonzero(required(f.pick_str(a.lambda.as_deref(), "lambda", parse_complex)?, "lambda")?)?;
    let samples = positive(f.pick(a.samples, "samples", parse_from_str)?.unwrap_or(10_000), "samples")?;
    let depth = positive(f.pick(a.depth, "depth", parse_from_str)?.unwrap_or(25), "depth")?;
    let seed = required(f.pick(a.seed, "seed", parse_from_str)?, "seed")?;
    let deltas = f.pick_str(a.deltas.as_deref(), "deltas", parse_list)?.unwrap_or(vec![0.2, 0.1, 0.05, 0.025]);
    if deltas.is_empty() || deltas.iter().any(|d| *d <= 0.0) || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::Config("deltas must be positive and strictly decreasing".into()));
    }
    for d in &deltas {
        nonzero(lambda + d)?;
    }
    let dir = out_dir(&a.common, &f)?;

    let others: Vec<Complex64> = deltas.iter().map(|d| lambda + d).collect();
    let (base, clouds) = matched_clouds(lambda, &others, samples, depth, seed)?;
    let noise_seed = derive_seed(seed, 1, 0);
    let (twin, _) = matched_clouds(lambda, &[], samples, depth, noise_seed)?;
    let noise = hausdorff_distance(&base, &twin);
    let dh: Vec<f64> = clouds.iter().map(|c| hausdorff_distance(&base, c)).collect();
    let ok = trend_holds(&dh, noise, 0.1);

    let mut csv = String::from("delta,d_H\n");
    for (d, h) in deltas.iter().zip(&dh) {
        csv.push_str(&format!("{d},{h}\n"));
    }
    let mut side = String::new();
    side.push_str(&format!("lambda={}\nsamples={samples}\ndepth={depth}\nseed={seed}\n", fmt_complex(lambda)));
    side.push_str(&format!("deltas={}\n", deltas.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")));
    side.push_str(&format!("noise_seed={noise_seed}\nnoise_floor={noise}\ntrend={}\nversion={VERSION}\n", if ok { "pass" } else { "fail" }));
    write_atomic(&dir.join("continuity.csv"), csv.as_bytes())?;
    write_atomic(&dir.join("continuity.txt"), side.as_bytes())?;
    eprint!("{csv}");
    eprintln!("noise floor {noise}");
    if !ok {
        return Err(CliError::Failed("d_H is not non-increasing within twice the noise floor, or the last value is not below 0.1".into()));
    }
    Ok(())
}

pub fn selftest() -> Result<(), CliError> {
    let results = checks::run_all();
    let mut failed = Vec::new();
    for r in &results {
        match &r.outcome {
            Ok(()) => println!("PASS {}", r.name),
            Err(msg) => {
                println!("FAIL {}: {msg}", r.name);
                failed.push(r.name);
            }
        }
    }
    if failed.is_empty() {
        println!("{} checks passed", results.len());
        Ok(())
    } else {
        Err(CliError::Failed(format!("failed checks: {}", failed.join(", "))))
    }
}
