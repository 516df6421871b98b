//! The 16 preimages of a point, one base quartic and four fiber quartics at a time.
//!
//! The first and third coordinates of F_λ only involve (x, z), so a preimage
//! projects along the pencil to a g-preimage of the projected target. Given
//! such a w with lift (x, z), the scale s is forced by the target and y solves
//!
//!   λy⁴ + (z³ − x³ + λ(x³ + z³))·y − s·Y = 0.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::DesbovesMap;
use crate::proj::{chordal_distance, normalize, ExtComplex, ProjPoint, PROJ_EQ_TOL};
use crate::quartic::{quartic_roots, QuarticRoots};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Forward residual every returned branch must meet.
pub const PREIMAGE_TOL: f64 = 1e-9;
const POLISH_STEPS: usize = 2;

/// The four w with g(w) = W, counted with multiplicity.
///
/// Solved in w = x/z when |W| ≤ 1 and in v = z/x otherwise, so the leading
/// coefficient never vanishes.
pub fn g_preimages(target: ExtComplex) -> Result<[ExtComplex; 4]> {
    let (x, z) = target.to_pair();
    let two = Complex64::new(2.0, 0.0);
    let roots: [ExtComplex; 4] = if z.norm() >= x.norm() {
        // Z w⁴ + 2X w³ + 2Z w + X = 0
        quartic_roots(z, two * x, ZERO, two * z, x)?.roots
    } else {
        // X v⁴ + 2Z v³ + 2X v + Z = 0
        quartic_roots(x, two * z, ZERO, two * x, z)?.roots.map(|v| match v.finite() {
            Some(v) if v.norm_sqr() == 0.0 => ExtComplex::Infinity,
            Some(v) => ExtComplex::Finite(v.inv()),
            None => ExtComplex::Finite(ZERO),
        })
    };
    let mut roots = roots;
    roots.sort_by(|a, b| ext_order(*a).partial_cmp(&ext_order(*b)).expect("finite keys"));
    Ok(roots)
}

/// Sort key: argument first, then modulus; ∞ last.
fn ext_order(w: ExtComplex) -> (f64, f64) {
    match w.finite() {
        Some(w) => arg_key(w),
        None => (f64::MAX, f64::MAX),
    }
}

fn arg_key(w: Complex64) -> (f64, f64) {
    if w.norm_sqr() == 0.0 {
        return (-4.0, 0.0);
    }
    // rounding noise must not move a negative real root between −π and π
    let im = if w.im.abs() <= 1e-12 * w.norm() { 0.0 } else { w.im };
    (im.atan2(w.re), w.norm())
}

/// The fiber over one base root: the lift (x, z) and the four y-roots.
#[derive(Clone, Debug)]
pub struct Fiber {
    pub x: Complex64,
    pub z: Complex64,
    pub ys: [Complex64; 4],
    pub roots: QuarticRoots,
}

fn fiber(map: &DesbovesMap, target: &ProjPoint, w: ExtComplex) -> Result<Fiber> {
    let lambda = map.lambda();
    let (x, z) = match w.finite() {
        Some(w) => (w, ONE),
        None => (ONE, ZERO),
    };
    let [tx, ty, tz] = target.coords();
    let (x3, z3) = (x * x * x, z * z * z);
    let s = if tx.norm() >= tz.norm() { -x * (x3 + 2.0 * z3) / tx } else { z * (2.0 * x3 + z3) / tz };
    if !s.is_finite() || s.norm_sqr() == 0.0 {
        return Err(Error::DegenerateFiber);
    }
    let a = z3 - x3 + lambda * (x3 + z3);
    let roots = quartic_roots(lambda, ZERO, ZERO, a, -s * ty)?;
    let mut ys = [ZERO; 4];
    for (k, r) in roots.roots.iter().enumerate() {
        // leading coefficient λ ≠ 0, so every root is finite
        ys[k] = r.finite().ok_or(Error::DegenerateFiber)?;
    }
    ys.sort_by(|a, b| arg_key(*a).partial_cmp(&arg_key(*b)).expect("finite keys"));
    Ok(Fiber { x, z, ys, roots })
}

/// Cross-product residual of F(v) against the target in the target's pivot chart.
fn system(map: &DesbovesMap, v: &[Complex64; 3], t: &[Complex64; 3], p: usize) -> [Complex64; 2] {
    let f = map.eval_lift(v);
    let [i, j] = others(p);
    [f[i] * t[p] - f[p] * t[i], f[j] * t[p] - f[p] * t[j]]
}

fn others(p: usize) -> [usize; 2] {
    match p {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

/// Newton on the full 3-coordinate system, in the preimage's own pivot chart.
fn polish_branch(map: &DesbovesMap, target: &ProjPoint, raw: [Complex64; 3]) -> Result<(ProjPoint, f64)> {
    let mut best = normalize(raw)?;
    let mut best_res = forward_residual(map, &best, target);
    let t = target.coords();
    let tp = target.pivot();
    for _ in 0..POLISH_STEPS {
        if best_res == 0.0 {
            break;
        }
        let mut v = best.coords();
        let vp = best.pivot();
        let [k0, k1] = others(vp);
        let g = system(map, &v, &t, tp);
        let jf = map.polynomial().jacobian_matrix(&v);
        let [i, j] = others(tp);
        let row = |r: usize, k: usize| jf[r][k] * t[tp] - jf[tp][k] * t[r];
        let (a, b, c, d) = (row(i, k0), row(i, k1), row(j, k0), row(j, k1));
        let det = a * d - b * c;
        if det.norm_sqr() == 0.0 || !det.is_finite() {
            break;
        }
        let du0 = (d * g[0] - b * g[1]) / det;
        let du1 = (-c * g[0] + a * g[1]) / det;
        v[k0] -= du0;
        v[k1] -= du1;
        let Ok(cand) = normalize(v) else { break };
        let res = forward_residual(map, &cand, target);
        if !(res < best_res) {
            break;
        }
        best = cand;
        best_res = res;
    }
    Ok((best, best_res))
}

/// Chordal distance between f(p) and the target; 1 when f(p) is undefined.
pub fn forward_residual(map: &DesbovesMap, p: &ProjPoint, target: &ProjPoint) -> f64 {
    match map.eval(p) {
        Ok(q) => chordal_distance(&q, target),
        Err(_) => 1.0,
    }
}

/// One branch of the preimage set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub point: ProjPoint,
    pub multiplicity: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreimageSet {
    pub target: ProjPoint,
    pub branches: Vec<Branch>,
}

impl PreimageSet {
    /// Multiplicity-weighted branch count; 16 for every regular map.
    pub fn count(&self) -> usize {
        self.branches.iter().map(|b| b.multiplicity).sum()
    }

    pub fn max_residual(&self) -> f64 {
        self.branches.iter().map(|b| b.residual).fold(0.0, f64::max)
    }

    /// The 16 preimages with repeats.
    pub fn flat(&self) -> Vec<ProjPoint> {
        self.branches.iter().flat_map(|b| std::iter::repeat(b.point).take(b.multiplicity)).collect()
    }
}

fn is_pencil_center(p: &ProjPoint) -> bool {
    p.x().norm_sqr() == 0.0 && p.z().norm_sqr() == 0.0
}

fn check_residual(res: f64) -> Result<()> {
    if res < PREIMAGE_TOL {
        Ok(())
    } else {
        Err(Error::SolverDiverged { residual: res })
    }
}

pub fn fiber_preimages(map: &DesbovesMap, target: &ProjPoint) -> Result<PreimageSet> {
    map.require_regular()?;
    if is_pencil_center(target) {
        let b = Branch { point: ProjPoint::RHO0, multiplicity: 16, residual: 0.0 };
        return Ok(PreimageSet { target: *target, branches: vec![b] });
    }
    let base = g_preimages(ExtComplex::w_of(target))?;
    let mut branches = Vec::with_capacity(16);
    let mut k = 0;
    while k < 4 {
        let mb = base[k..].iter().take_while(|w| **w == base[k]).count();
        let fb = fiber(map, target, base[k])?;
        for (y, mf) in fb.roots.clusters() {
            let y = y.finite().ok_or(Error::DegenerateFiber)?;
            let (point, residual) = polish_branch(map, target, [fb.x, y, fb.z])?;
            check_residual(residual)?;
            branches.push(Branch { point, multiplicity: mb * mf, residual });
        }
        k += mb;
    }
    Ok(PreimageSet { target: *target, branches })
}

/// The preimage with base index `bi` and fiber index `fi` (each in 0..4, counted
/// with multiplicity). Drawing both uniformly is uniform over the 16 branches.
pub fn preimage_branch(map: &DesbovesMap, target: &ProjPoint, bi: usize, fi: usize) -> Result<ProjPoint> {
    map.require_regular()?;
    if is_pencil_center(target) {
        return Ok(ProjPoint::RHO0);
    }
    let base = g_preimages(ExtComplex::w_of(target))?;
    let fb = fiber(map, target, base[bi % 4])?;
    let (p, res) = polish_branch(map, target, [fb.x, fb.ys[fi % 4], fb.z])?;
    check_residual(res)?;
    Ok(p)
}

/// The preimage nearest `near`: base root nearest in w, then fiber root nearest.
///
/// Used to continue a walk recorded at one parameter to a nearby parameter.
pub fn preimage_branch_nearest(map: &DesbovesMap, target: &ProjPoint, near: &ProjPoint) -> Result<ProjPoint> {
    map.require_regular()?;
    if is_pencil_center(target) {
        return Ok(ProjPoint::RHO0);
    }
    let base = g_preimages(ExtComplex::w_of(target))?;
    let wn = ExtComplex::w_of(near);
    let w = base
        .into_iter()
        .min_by(|a, b| a.chordal(wn).total_cmp(&b.chordal(wn)))
        .expect("four roots");
    let fb = fiber(map, target, w)?;
    let mut best: Option<(f64, ProjPoint)> = None;
    for y in fb.ys {
        let p = normalize([fb.x, y, fb.z])?;
        let d = chordal_distance(&p, near);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, p));
        }
    }
    let (_, p) = best.expect("four roots");
    let (p, res) = polish_branch(map, target, p.coords())?;
    check_residual(res)?;
    Ok(p)
}

/// Endpoint of a uniform random inverse-branch walk.
pub fn backward_orbit_sample<R: Rng + ?Sized>(map: &DesbovesMap, start: &ProjPoint, steps: usize, rng: &mut R) -> Result<ProjPoint> {
    if start.approx_eq(&ProjPoint::RHO0, PROJ_EQ_TOL) {
        return Err(Error::Precondition("walks cannot start at the exceptional point [0:1:0]".into()));
    }
    map.require_regular()?;
    let mut p = *start;
    for _ in 0..steps {
        let bi = rng.gen_range(0..4);
        let fi = rng.gen_range(0..4);
        p = preimage_branch(map, &p, bi, fi)?;
    }
    Ok(p)
}

/// A walk with every visited point kept, for continuation in λ.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordedWalk {
    pub path: Vec<ProjPoint>,
}

impl RecordedWalk {
    pub fn endpoint(&self) -> ProjPoint {
        *self.path.last().expect("path holds at least the start")
    }
}

pub fn recorded_walk<R: Rng + ?Sized>(map: &DesbovesMap, start: &ProjPoint, steps: usize, rng: &mut R) -> Result<RecordedWalk> {
    if start.approx_eq(&ProjPoint::RHO0, PROJ_EQ_TOL) {
        return Err(Error::Precondition("walks cannot start at the exceptional point [0:1:0]".into()));
    }
    let mut path = Vec::with_capacity(steps + 1);
    path.push(*start);
    let mut p = *start;
    for _ in 0..steps {
        let bi = rng.gen_range(0..4);
        let fi = rng.gen_range(0..4);
        p = preimage_branch(map, &p, bi, fi)?;
        path.push(p);
    }
    Ok(RecordedWalk { path })
}

/// Replays `walk` under `map`, taking at each depth the preimage nearest the
/// recorded one. The start point must be fixed by both maps.
pub fn continue_walk(map: &DesbovesMap, walk: &RecordedWalk) -> Result<RecordedWalk> {
    let mut path = Vec::with_capacity(walk.path.len());
    let mut p = walk.path[0];
    path.push(p);
    for next in &walk.path[1..] {
        p = preimage_branch_nearest(map, &p, next)?;
        path.push(p);
    }
    Ok(RecordedWalk { path })
}
