//! Constructive search for Misiurewicz parameters.
//!
//! A critical point [w:0:1] of f_λ on Y satisfies w³ = (1+λ)/(1−λ), so every
//! w has exactly one parameter λ = (w³−1)/(w³+1) that makes it critical. On Y
//! the map is the λ-independent Lattès map g. Walking the g-preimage tree of
//! w = 0 (x₀) or w = ∞ (z₀) and inverting the trace relation at each node
//! therefore lists parameters whose critical orbit lands on the target.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifurcation::Clause;
use crate::critical::{critical_cubic_on_y, lambda_for_critical_w, trace_residual};
use crate::error::{Error, Result};
use crate::family::DesbovesMap;
use crate::preimage::g_preimages;
use crate::proj::{to_chart, Chart, ExtComplex, ProjPoint};

/// Central-difference step of the transversality proxy.
pub const TRANSVERSALITY_STEP: f64 = 1e-5;
/// Tolerance for clauses (i)–(iii) of emitted candidates.
pub const FINDER_TOL: f64 = 1e-9;
/// Two candidates closer than this in λ are the same parameter.
pub const DEDUP_TOL: f64 = 1e-10;
pub const MAX_DEPTH: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    X0,
    Z0,
}

impl Target {
    pub const BOTH: [Target; 2] = [Target::X0, Target::Z0];

    pub fn point(self) -> ProjPoint {
        match self {
            Target::X0 => ProjPoint::X0,
            Target::Z0 => ProjPoint::Z0,
        }
    }

    /// Position of the target on Y.
    pub fn w(self) -> ExtComplex {
        match self {
            Target::X0 => ExtComplex::Finite(Complex64::new(0.0, 0.0)),
            Target::Z0 => ExtComplex::Infinity,
        }
    }

    /// |1+λ| − 1 for x₀, |1−λ| − 1 for z₀: positive iff the transverse multiplier repels.
    pub fn repelling_margin(self, lambda: Complex64) -> f64 {
        match self {
            Target::X0 => (1.0 + lambda).norm() - 1.0,
            Target::Z0 => (1.0 - lambda).norm() - 1.0,
        }
    }

    /// Chart centered at the target, in which it is the origin.
    fn chart(self) -> Chart {
        match self {
            Target::X0 => Chart::Z,
            Target::Z0 => Chart::X,
        }
    }

    pub fn swapped(self) -> Target {
        match self {
            Target::X0 => Target::Z0,
            Target::Z0 => Target::X0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisiurewiczCandidate {
    pub lambda: Complex64,
    pub w_star: ExtComplex,
    pub n: usize,
    pub target: Target,
    pub on_cubic_residual: f64,
    pub landing_residual: f64,
    pub repelling_margin: f64,
    pub transversality: f64,
}

impl MisiurewiczCandidate {
    /// Candidate for a tree node; residual fields are filled by [`check_misiurewicz`].
    pub fn from_node(w_star: ExtComplex, n: usize, target: Target) -> Result<Self> {
        let lambda = lambda_for_critical_w(w_star)?;
        Ok(Self::with_lambda(lambda, w_star, n, target))
    }

    /// Candidate with an explicit λ, which need not match w*.
    pub fn with_lambda(lambda: Complex64, w_star: ExtComplex, n: usize, target: Target) -> Self {
        MisiurewiczCandidate {
            lambda,
            w_star,
            n,
            target,
            on_cubic_residual: f64::NAN,
            landing_residual: f64::NAN,
            repelling_margin: target.repelling_margin(lambda),
            transversality: f64::NAN,
        }
    }
}

/// Outcome of all four clauses, evaluated independently.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub candidate: MisiurewiczCandidate,
    pub multipliers: Option<[Complex64; 2]>,
    pub failed: Vec<Clause>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failed.is_empty()
    }
}

/// ψ(λ): the target-chart coordinate of gⁿ applied to the trace point of f_λ nearest `w_ref`.
fn landing_coordinate(lambda: Complex64, w_ref: ExtComplex, n: usize, target: Target) -> Result<Complex64> {
    let trace = critical_cubic_on_y(lambda);
    let w = trace
        .w
        .into_iter()
        .min_by(|a, b| a.chordal(w_ref).total_cmp(&b.chordal(w_ref)))
        .expect("three points");
    let map = DesbovesMap::new(lambda)?;
    let end = map.iterate(&w.on_y(), n)?;
    let c = to_chart(&end, target.chart())?;
    // on Y the free coordinate that is not y
    Ok(match target {
        Target::X0 => c.u,
        Target::Z0 => c.v,
    })
}

/// Evaluates clauses (i)–(iv) without stopping at the first failure.
pub fn check_misiurewicz(cand: &MisiurewiczCandidate, tol: f64) -> VerificationReport {
    let mut c = *cand;
    let mut failed = Vec::new();
    c.on_cubic_residual = trace_residual(c.lambda, c.w_star);
    if !(c.on_cubic_residual < tol) {
        failed.push(Clause::OnCubic);
    }
    let map = DesbovesMap::new(c.lambda);
    c.landing_residual = match &map {
        Ok(m) => m.iterate(&c.w_star.on_y(), c.n).map_or(1.0, |p| p.chordal(&c.target.point())),
        Err(_) => 1.0,
    };
    if !(c.landing_residual < tol) {
        failed.push(Clause::Landing);
    }
    c.repelling_margin = c.target.repelling_margin(c.lambda);
    let multipliers = map.as_ref().ok().and_then(|m| m.fixed_point_info(&c.target.point()).ok()).map(|i| i.multipliers);
    let repelling = multipliers.is_some_and(|m| m.iter().all(|e| e.norm() > 1.0));
    if !repelling {
        failed.push(Clause::Repelling);
    }
    let h = TRANSVERSALITY_STEP;
    let plus = landing_coordinate(c.lambda + h, c.w_star, c.n, c.target);
    let minus = landing_coordinate(c.lambda - h, c.w_star, c.n, c.target);
    c.transversality = match (plus, minus) {
        (Ok(p), Ok(m)) => ((p - m) / (2.0 * h)).norm(),
        _ => f64::NAN,
    };
    if !(c.transversality > 10.0 * tol) {
        failed.push(Clause::Transversal);
    }
    VerificationReport { candidate: c, multipliers, failed }
}

/// Errors with the first failed clause.
pub fn verify_misiurewicz(cand: &MisiurewiczCandidate, tol: f64) -> Result<VerificationReport> {
    let report = check_misiurewicz(cand, tol);
    match report.failed.first() {
        Some(&clause) => Err(Error::FailedCondition(clause)),
        None => Ok(report),
    }
}

/// The level-`depth` nodes of the g-preimage tree of the target, with multiplicity.
pub fn tree_level(target: Target, depth: usize) -> Result<Vec<ExtComplex>> {
    let mut level = vec![target.w()];
    for _ in 0..depth {
        level = expand(&level)?;
    }
    Ok(level)
}

fn expand(level: &[ExtComplex]) -> Result<Vec<ExtComplex>> {
    let next: Vec<[ExtComplex; 4]> = level.par_iter().map(|&w| g_preimages(w)).collect::<Result<_>>()?;
    Ok(next.into_iter().flatten().collect())
}

fn screen(w: ExtComplex, n: usize, target: Target) -> Option<MisiurewiczCandidate> {
    let cand = MisiurewiczCandidate::from_node(w, n, target).ok()?;
    (cand.lambda.norm() > 0.0 && cand.repelling_margin > 0.0).then_some(cand)
}

/// Verified candidates up to `max_depth`, merged by λ with the smallest n kept.
pub fn misiurewicz_candidates(target: Target, max_depth: usize) -> Result<Vec<MisiurewiczCandidate>> {
    if max_depth > MAX_DEPTH {
        return Err(Error::Precondition(format!("max_depth must be at most {MAX_DEPTH}")));
    }
    let mut out: Vec<MisiurewiczCandidate> = Vec::new();
    let mut level = vec![target.w()];
    for n in 1..=max_depth {
        level = expand(&level)?;
        let found: Vec<MisiurewiczCandidate> = level
            .par_iter()
            .filter_map(|&w| screen(w, n, target))
            .filter_map(|c| {
                let r = check_misiurewicz(&c, FINDER_TOL);
                let sound = !r.failed.iter().any(|cl| *cl != Clause::Transversal);
                sound.then_some(r.candidate)
            })
            .collect();
        out.extend(found);
    }
    Ok(dedup(out))
}

/// Stable merge: earlier (shallower) entries win.
fn dedup(mut cands: Vec<MisiurewiczCandidate>) -> Vec<MisiurewiczCandidate> {
    let mut idx: Vec<usize> = (0..cands.len()).collect();
    idx.sort_by(|&a, &b| cands[a].lambda.re.total_cmp(&cands[b].lambda.re).then(a.cmp(&b)));
    let mut keep = vec![true; cands.len()];
    for (k, &i) in idx.iter().enumerate() {
        if !keep[i] {
            continue;
        }
        for &j in &idx[k + 1..] {
            if cands[j].lambda.re - cands[i].lambda.re > DEDUP_TOL {
                break;
            }
            if keep[j] && (cands[j].lambda - cands[i].lambda).norm() <= DEDUP_TOL {
                // idx is sorted by position among equal re, but n decides
                if cands[j].n < cands[i].n {
                    keep[i] = false;
                    break;
                }
                keep[j] = false;
            }
        }
    }
    let mut i = 0;
    cands.retain(|_| {
        i += 1;
        keep[i - 1]
    });
    cands
}

/// Nearest fully verified candidate within `radius` of λ₀, searching depth by depth.
pub fn density_probe(lambda0: Complex64, radius: f64, max_depth: usize) -> Result<MisiurewiczCandidate> {
    if lambda0.norm_sqr() == 0.0 {
        return Err(Error::DegenerateLambda);
    }
    if max_depth > MAX_DEPTH {
        return Err(Error::Precondition(format!("max_depth must be at most {MAX_DEPTH}")));
    }
    let mut levels: Vec<(Target, Vec<ExtComplex>)> = Target::BOTH.iter().map(|&t| (t, vec![t.w()])).collect();
    let mut closest = f64::INFINITY;
    for n in 1..=max_depth {
        let mut hits: Vec<MisiurewiczCandidate> = Vec::new();
        for (target, level) in levels.iter_mut() {
            *level = expand(level)?;
            let t = *target;
            let near: Vec<MisiurewiczCandidate> = level
                .par_iter()
                .filter_map(|&w| screen(w, n, t))
                .filter(|c| (c.lambda - lambda0).norm() < radius.max(closest))
                .collect();
            for c in near {
                let d = (c.lambda - lambda0).norm();
                closest = closest.min(d);
                if d < radius {
                    if let Ok(r) = verify_misiurewicz(&c, FINDER_TOL) {
                        hits.push(r.candidate);
                    }
                }
            }
        }
        if let Some(best) = hits
            .into_iter()
            .min_by(|a, b| (a.lambda - lambda0).norm().total_cmp(&(b.lambda - lambda0).norm()))
        {
            return Ok(best);
        }
    }
    Err(Error::NotFound { depth: max_depth, closest })
}
