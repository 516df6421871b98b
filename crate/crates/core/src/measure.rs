//! Equilibrium-measure samples and Lyapunov estimates.
//!
//! Two estimators of L(λ) live here. The cloud average integrates the
//! intrinsic one-step log-Jacobian over backward-orbit samples. The
//! critical-orbit route uses the skew-product split L = log 8 + E_g[Σ G_v(c_j)]:
//! log 2 from the Lattès base, log 4 plus the vertical Green function at the
//! three fiber critical points from the fibers. The second one is much
//! smoother in λ, which is what the parameter sweep needs.

use std::io::{self, Write};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critical::{on_critical_set, CriticalComponent};
use crate::error::{Error, Result};
use crate::family::{eigenvalues2, mat2_mul, DesbovesMap, FixedPointInfo, FixedPointKind, Mat2};
use crate::preimage::{backward_orbit_sample, g_preimages};
use crate::proj::{chordal_distance, from_chart, norm2, to_chart, Chart, ChartCoord, ExtComplex, ProjPoint};
use crate::rng::walk_rng;

/// Number of batches for batch-means standard errors.
pub const BATCHES: usize = 16;
/// Cloud points must stay at least this far from ρ₀.
pub const RHO0_EXCLUSION: f64 = 1e-6;
/// Fraction of discarded critical hits above which an estimate is flagged.
pub const DISCARD_FLAG: f64 = 0.01;
/// Iterates used for the vertical Green function.
pub const GREEN_ITERS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    BackwardOrbit,
    RasterBoundary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    points: Vec<ProjPoint>,
    weights: Vec<f64>,
    pub provenance: Provenance,
    pub seed: u64,
    pub depth: usize,
}

impl PointCloud {
    /// Equal-weight cloud; rejects points too close to ρ₀.
    pub fn new(points: Vec<ProjPoint>, provenance: Provenance, seed: u64, depth: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Precondition("cloud must be nonempty".into()));
        }
        if points.iter().any(|p| chordal_distance(p, &ProjPoint::RHO0) < RHO0_EXCLUSION) {
            return Err(Error::Precondition("cloud point within 1e-6 of [0:1:0]".into()));
        }
        let w = 1.0 / points.len() as f64;
        let weights = vec![w; points.len()];
        Ok(PointCloud { points, weights, provenance, seed, depth })
    }

    pub fn points(&self) -> &[ProjPoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same weights, every point replaced by `f(p)`.
    pub fn map_points(&self, f: impl Fn(&ProjPoint) -> Result<ProjPoint>) -> Result<PointCloud> {
        let points = self.points.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(PointCloud { points, ..self.clone() })
    }

    pub const CSV_HEADER: &'static str = "x_re,x_im,y_re,y_im,z_re,z_im,weight";

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for (p, w) in self.points.iter().zip(&self.weights) {
            let [x, y, z] = p.coords();
            writeln!(out, "{},{},{},{},{},{},{}", x.re, x.im, y.re, y.im, z.re, z.im, w)?;
        }
        Ok(())
    }
}

/// Backward-orbit samples of μ on stream 0 of `seed`.
pub fn sample_equilibrium(map: &DesbovesMap, n_points: usize, depth: usize, seed: u64) -> Result<PointCloud> {
    sample_equilibrium_stream(map, n_points, depth, seed, 0)
}

/// Every walk starts at the repelling fixed point r₀ = [1:0:−1], which lies in
/// the Julia set for every λ, so no burn-in from outside J is needed.
pub fn sample_equilibrium_stream(map: &DesbovesMap, n_points: usize, depth: usize, seed: u64, stream: u64) -> Result<PointCloud> {
    map.require_regular()?;
    let points = (0..n_points as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = walk_rng(seed, stream, i);
            backward_orbit_sample(map, &ProjPoint::R0, depth, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    PointCloud::new(points, Provenance::BackwardOrbit, seed, depth)
}

/// log|det| of the differential in the Fubini–Study metric.
///
/// On a lift v with F = F_λ(v), Euler's relation DF(v)·v = 4F(v) gives
/// |det df|_FS = |det DF(v)|·‖v‖³ / (4‖F(v)‖³). Returns −∞ on the critical set.
pub fn fs_log_jacobian(map: &DesbovesMap, p: &ProjPoint) -> f64 {
    if on_critical_set(map.lambda(), p) != CriticalComponent::None {
        return f64::NEG_INFINITY;
    }
    let v = p.coords();
    let det = map.jacobian_det(p);
    let f = map.eval_lift(&v);
    det.norm().ln() + 3.0 * norm2(&v).ln() - 3.0 * norm2(&f).ln() - 4f64.ln()
}

fn chart_norm_factor(c: &ChartCoord) -> f64 {
    1.0 + c.u.norm_sqr() + c.v.norm_sqr()
}

/// The same quantity computed in explicit affine charts at p and f(p).
pub fn fs_log_jacobian_in(map: &DesbovesMap, p: &ProjPoint, src: Chart, dst: Chart) -> Result<f64> {
    if on_critical_set(map.lambda(), p) != CriticalComponent::None {
        return Ok(f64::NEG_INFINITY);
    }
    let d = map.differential_in(p, src, dst)?;
    let q = map.eval(p)?;
    let cp = to_chart(p, src)?;
    let cq = to_chart(&q, dst)?;
    let det = d[0][0] * d[1][1] - d[0][1] * d[1][0];
    Ok(det.norm().ln() + 1.5 * (chart_norm_factor(&cp) / chart_norm_factor(&cq)).ln())
}

/// Which estimator produced a Lyapunov value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LyapunovMethod {
    #[default]
    CriticalOrbits,
    CloudAverage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub lambda: Complex64,
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub discarded: usize,
    /// More than 1% of samples were critical hits.
    pub flagged: bool,
    /// The 16 batch means; shared-sample estimates can be differenced batchwise.
    pub batch_means: Vec<f64>,
}

impl LyapunovEstimate {
    /// The lower bound log 4 − 3·stderr that every estimate must respect.
    pub fn respects_floor(&self) -> bool {
        self.value >= 4f64.ln() - 3.0 * self.stderr
    }
}

/// Weighted mean and batch-means stderr over contiguous batches.
fn batch_estimate(values: &[(f64, f64)]) -> (f64, f64, Vec<f64>) {
    let n = values.len();
    let total_w: f64 = values.iter().map(|v| v.1).sum();
    let mean = values.iter().map(|(x, w)| x * w).sum::<f64>() / total_w;
    let nb = BATCHES.min(n.max(1));
    let mut batch_means = Vec::with_capacity(nb);
    for b in 0..nb {
        let lo = b * n / nb;
        let hi = (b + 1) * n / nb;
        let chunk = &values[lo..hi];
        let w: f64 = chunk.iter().map(|v| v.1).sum();
        batch_means.push(chunk.iter().map(|(x, w)| x * w).sum::<f64>() / w);
    }
    (mean, batch_stderr(&batch_means), batch_means)
}

/// Standard error of the mean of equally sized batch means.
pub fn batch_stderr(batch_means: &[f64]) -> f64 {
    let k = batch_means.len();
    if k < 2 {
        return f64::INFINITY;
    }
    let m = batch_means.iter().sum::<f64>() / k as f64;
    let var = batch_means.iter().map(|b| (b - m) * (b - m)).sum::<f64>() / (k - 1) as f64;
    (var / k as f64).sqrt()
}

/// Cloud average of the intrinsic log-Jacobian; critical hits are discarded and counted.
#[allow(non_snake_case)]
pub fn lyapunov_L(map: &DesbovesMap, cloud: &PointCloud) -> LyapunovEstimate {
    let vals: Vec<(f64, f64)> = cloud
        .points()
        .par_iter()
        .zip(cloud.weights().par_iter())
        .map(|(p, &w)| (fs_log_jacobian(map, p), w))
        .collect();
    let kept: Vec<(f64, f64)> = vals.iter().copied().filter(|v| v.0.is_finite()).collect();
    let discarded = vals.len() - kept.len();
    let (value, stderr, batch_means) = batch_estimate(&kept);
    LyapunovEstimate {
        lambda: map.lambda(),
        value,
        stderr,
        samples: kept.len(),
        discarded,
        flagged: discarded as f64 > DISCARD_FLAG * vals.len() as f64,
        batch_means,
    }
}

/// Samples of the measure of maximal entropy of the Lattès map g, by backward
/// walks on Y started at w = −1. Independent of λ, so one set serves a whole sweep.
pub fn base_samples(n: usize, depth: usize, seed: u64, stream: u64) -> Result<Vec<ExtComplex>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = walk_rng(seed, stream, i);
            let mut w = ExtComplex::Finite(Complex64::new(-1.0, 0.0));
            for _ in 0..depth {
                let pre = g_preimages(w)?;
                w = pre[rng.gen_range(0..4)];
            }
            Ok(w)
        })
        .collect()
}

/// Vertical Green function lim 4⁻ⁿ log|ηₙ| along the base-normalized orbit of
/// (w, y), where y is read on the lift whose (x, z) has max modulus 1.
pub fn vertical_green(lambda: Complex64, w: ExtComplex, y: Complex64) -> f64 {
    const SWITCH: f64 = 1e8;
    let (mut x, mut z) = w.to_pair();
    let mut eta = y;
    let mut log_eta: Option<f64> = None;
    let log_l = lambda.norm().ln();
    for _ in 0..GREEN_ITERS {
        let (x3, z3) = (x * x * x, z * z * z);
        let bx = -x * (x3 + 2.0 * z3);
        let bz = z * (2.0 * x3 + z3);
        let mb = bx.norm().max(bz.norm());
        match log_eta {
            Some(l) => {
                // |a/(λη³)| < 1e−20 here, so only the leading term survives
                log_eta = Some(4.0 * l + log_l - mb.ln());
            }
            None => {
                let a = z3 - x3 + lambda * (x3 + z3);
                eta = eta * (a + lambda * eta * eta * eta) / mb;
                if eta.norm() > SWITCH || !eta.is_finite() {
                    log_eta = Some(eta.norm().ln());
                }
            }
        }
        x = bx / mb;
        z = bz / mb;
    }
    let l = log_eta.unwrap_or_else(|| eta.norm().ln());
    l.max(0.0) * 0.25f64.powi(GREEN_ITERS as i32)
}

/// Σ_j G_v at the three fiber critical points y³ = −a/(4λ) over w.
pub fn critical_green_sum(lambda: Complex64, w: ExtComplex) -> f64 {
    let (x, z) = w.to_pair();
    let (x3, z3) = (x * x * x, z * z * z);
    let a = z3 - x3 + lambda * (x3 + z3);
    let c = (-a / (4.0 * lambda)).cbrt();
    (0..3).map(|j| vertical_green(lambda, w, c * crate::family::omega_pow(j))).sum()
}

/// L(λ) = log 8 + E[Σ_j G_v(w, c_j(w))] over the given base samples.
pub fn lyapunov_critical(map: &DesbovesMap, base: &[ExtComplex]) -> Result<LyapunovEstimate> {
    map.require_regular()?;
    if base.is_empty() {
        return Err(Error::Precondition("need at least one base sample".into()));
    }
    let l = map.lambda();
    let log8 = 8f64.ln();
    let vals: Vec<(f64, f64)> = base.par_iter().map(|&w| (log8 + critical_green_sum(l, w), 1.0)).collect();
    let (value, stderr, batch_means) = batch_estimate(&vals);
    Ok(LyapunovEstimate { lambda: l, value, stderr, samples: vals.len(), discarded: 0, flagged: false, batch_means })
}

/// Refines p to a point of period `period` and classifies it by the
/// multipliers of the derivative of f^period.
pub fn is_repelling_periodic(map: &DesbovesMap, p: &ProjPoint, period: usize, tol: f64) -> Result<FixedPointInfo> {
    if period == 0 {
        return Err(Error::Precondition("period must be at least 1".into()));
    }
    map.require_regular()?;
    let chart = Chart::from_index(p.pivot());
    let mut cur = *p;
    let mut last = f64::INFINITY;
    for _ in 0..30 {
        let (img, d) = orbit_derivative(map, &cur, period, chart)?;
        let res = chordal_distance(&img, &cur);
        last = res;
        if res < 1e-15 {
            break;
        }
        let u = to_chart(&cur, chart)?;
        let v = to_chart(&img, chart)?;
        let (g0, g1) = (v.u - u.u, v.v - u.v);
        let m = [[d[0][0] - 1.0, d[0][1]], [d[1][0], d[1][1] - 1.0]];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.norm_sqr() == 0.0 {
            break;
        }
        let du = (m[1][1] * g0 - m[0][1] * g1) / det;
        let dv = (-m[1][0] * g0 + m[0][0] * g1) / det;
        let next = from_chart(&ChartCoord { chart, u: u.u - du, v: u.v - dv });
        if !next.coords().iter().all(|c| c.is_finite()) {
            break;
        }
        cur = next;
    }
    let (img, d) = orbit_derivative(map, &cur, period, chart)?;
    let res = chordal_distance(&img, &cur);
    if !(res <= tol) {
        return Err(Error::NotPeriodic { residual: res.min(last) });
    }
    Ok(FixedPointInfo::from_multipliers(cur, eigenvalues2(&d)))
}

/// f^n(p) and the derivative of f^n in the given chart at both ends.
fn orbit_derivative(map: &DesbovesMap, p: &ProjPoint, n: usize, chart: Chart) -> Result<(ProjPoint, Mat2)> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut d: Mat2 = [[one, zero], [zero, one]];
    let mut q = *p;
    let mut src = chart;
    for k in 0..n {
        let img = map.eval(&q)?;
        let dst = if k + 1 == n { chart } else { Chart::from_index(img.pivot()) };
        let step = map.differential_in(&q, src, dst)?;
        d = mat2_mul(&step, &d);
        q = img;
        src = dst;
    }
    Ok((q, d))
}

impl FixedPointInfo {
    pub fn is_repelling(&self) -> bool {
        self.kind == FixedPointKind::Repelling
    }
}
