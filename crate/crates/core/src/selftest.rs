//! Fast built-in checks: closed-form examples and cheap invariants.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bifurcation::{discrete_laplacian, BifurcationGrid, Clause, Rect};
use crate::critical::{critical_cubic_on_y, lambda_for_critical_w};
use crate::error::Error;
use crate::family::{fermat_residual, lattes_g, omega_pow, DesbovesMap};
use crate::julia::{classify_point, render_slice, Escape, SliceChart, SliceSpec};
use crate::measure::{fs_log_jacobian, is_repelling_periodic};
use crate::misiurewicz::{check_misiurewicz, density_probe, MisiurewiczCandidate, Target};
use crate::preimage::{backward_orbit_sample, fiber_preimages, g_preimages};
use crate::proj::{normalize, project_pencil, ExtComplex, ProjPoint};
use crate::quartic::quartic_roots;

type Check = fn() -> Result<(), String>;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub outcome: Result<(), String>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Random λ with 0.1 ≤ |λ| ≤ 10.
pub fn random_lambda<R: Rng>(rng: &mut R) -> Complex64 {
    let r = 10f64.powf(rng.gen_range(-1.0..1.0));
    Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
}

pub fn random_point<R: Rng>(rng: &mut R) -> ProjPoint {
    let mut g = || c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    normalize([g(), g(), g()]).expect("nonzero with probability one")
}

/// A random point of the Fermat curve x³ + y³ + z³ = 0.
pub fn random_fermat_point<R: Rng>(rng: &mut R) -> ProjPoint {
    let x = c(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
    let y = (-1.0 - x * x * x).cbrt() * omega_pow(rng.gen_range(0..3));
    normalize([x, y, c(1.0, 0.0)]).expect("z = 1")
}

fn sigma(p: &ProjPoint) -> ProjPoint {
    p.swap_xz()
}

fn fixed_points() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let f = DesbovesMap::new(random_lambda(&mut rng)).map_err(|e| e.to_string())?;
        let mut pts = vec![ProjPoint::RHO0, ProjPoint::X0, ProjPoint::Z0];
        for j in 0..3 {
            pts.push(normalize([c(1.0, 0.0), c(0.0, 0.0), -omega_pow(j)]).map_err(|e| e.to_string())?);
        }
        for p in pts {
            let d = f.eval(&p).map_err(|e| e.to_string())?.chordal(&p);
            ensure(d < 1e-12, || format!("{p} moved by {d:e} at λ={}", f.lambda()))?;
        }
    }
    Ok(())
}

fn invariant_sets() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let f = DesbovesMap::new(random_lambda(&mut rng)).map_err(|e| e.to_string())?;
        let t = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        for chart in [SliceChart::X, SliceChart::Y, SliceChart::Z] {
            let p = chart.point(t);
            let q = f.eval(&p).map_err(|e| e.to_string())?;
            let off = q.coords()[match chart {
                SliceChart::X => 0,
                SliceChart::Y => 1,
                _ => 2,
            }]
            .norm();
            ensure(off < 1e-10, || format!("{p} left its line: {q}"))?;
        }
        let p = random_fermat_point(&mut rng);
        let q = f.eval(&p).map_err(|e| e.to_string())?;
        ensure(fermat_residual(&q) < 1e-10, || format!("{p} left the Fermat curve"))?;
    }
    Ok(())
}

fn semiconjugacy() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let f = DesbovesMap::new(random_lambda(&mut rng)).map_err(|e| e.to_string())?;
        let p = random_point(&mut rng);
        let lhs = project_pencil(&f.eval(&p).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let rhs = lattes_g(ExtComplex::w_of(&p)).on_y();
        ensure(lhs.chordal(&rhs) < 1e-12, || format!("π∘f ≠ g∘π at {p}"))?;
    }
    Ok(())
}

fn sigma_conjugacy() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let l = random_lambda(&mut rng);
        let f = DesbovesMap::new(l).map_err(|e| e.to_string())?;
        let g = DesbovesMap::new(-l).map_err(|e| e.to_string())?;
        let p = random_point(&mut rng);
        let lhs = f.eval(&sigma(&p)).map_err(|e| e.to_string())?;
        let rhs = sigma(&g.eval(&p).map_err(|e| e.to_string())?);
        ensure(lhs.chordal(&rhs) < 1e-12, || format!("σ-conjugacy fails at {p}, λ={l}"))?;
    }
    Ok(())
}

fn jacobian_closed_form() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let f = DesbovesMap::new(random_lambda(&mut rng)).map_err(|e| e.to_string())?;
        let p = random_point(&mut rng);
        let a = f.jacobian_det(&p);
        let b = f.jacobian_det_numeric(&p);
        let rel = (a - b).norm() / b.norm().max(1e-300);
        ensure(rel < 1e-6, || format!("Jacobian mismatch {a} vs {b} at {p}"))?;
    }
    Ok(())
}

fn zero_parameter_rejected() -> Result<(), String> {
    match DesbovesMap::new(c(0.0, 0.0)) {
        Err(e) => ensure(e.to_string() == "parameter must be nonzero", || e.to_string()),
        Ok(_) => Err("λ = 0 accepted".into()),
    }
}

fn critical_trace() -> Result<(), String> {
    ensure(critical_cubic_on_y(c(1.0, 0.0)).w.iter().all(|w| w.is_infinite()), || "λ=1".into())?;
    let t = critical_cubic_on_y(c(3.0, 0.0));
    ensure(t.residual() < 1e-14, || "λ=3 trace residual".into())?;
    ensure(lambda_for_critical_w(c(-1.0, 0.0).into()) == Err(Error::PoleInput), || "pole".into())?;
    Ok(())
}

fn quartic_examples() -> Result<(), String> {
    let one = c(1.0, 0.0);
    let z = c(0.0, 0.0);
    let r = quartic_roots(one, z, z, z, -one).map_err(|e| e.to_string())?;
    ensure(r.clusters().len() == 4, || "w⁴ − 1".into())?;
    let r = quartic_roots(one, c(-4.0, 0.0), c(6.0, 0.0), c(-4.0, 0.0), one).map_err(|e| e.to_string())?;
    ensure(r.clusters().len() == 1 && r.clusters()[0].1 == 4, || format!("(w − 1)⁴: {:?}", r.clusters()))
}

fn preimage_examples() -> Result<(), String> {
    let ws = g_preimages(c(0.0, 0.0).into()).map_err(|e| e.to_string())?;
    ensure(ws.iter().all(|w| lattes_g(*w).chordal(c(0.0, 0.0).into()) < 1e-12), || "g⁻¹(0)".into())?;
    let f = DesbovesMap::new(c(0.7, -1.1)).map_err(|e| e.to_string())?;
    let s = fiber_preimages(&f, &ProjPoint::RHO0).map_err(|e| e.to_string())?;
    ensure(s.branches.len() == 1 && s.count() == 16 && s.branches[0].point == ProjPoint::RHO0, || "f⁻¹(ρ₀)".into())?;
    let f1 = DesbovesMap::new(c(1.0, 0.0)).map_err(|e| e.to_string())?;
    let s = fiber_preimages(&f1, &ProjPoint::R0).map_err(|e| e.to_string())?;
    ensure(s.flat().iter().any(|p| p.chordal(&ProjPoint::R0) < 1e-12), || "r₀ ∉ f⁻¹(r₀)".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    ensure(backward_orbit_sample(&f, &ProjPoint::RHO0, 3, &mut rng).is_err(), || "walk from ρ₀".into())?;
    let p = random_point(&mut rng);
    ensure(backward_orbit_sample(&f, &p, 0, &mut rng) == Ok(p), || "empty walk".into())?;
    for _ in 0..100 {
        let f = DesbovesMap::new(random_lambda(&mut rng)).map_err(|e| e.to_string())?;
        let t = random_point(&mut rng);
        let s = fiber_preimages(&f, &t).map_err(|e| e.to_string())?;
        ensure(s.count() == 16 && s.max_residual() < 1e-9, || format!("preimages of {t}"))?;
    }
    Ok(())
}

fn log_jacobian_examples() -> Result<(), String> {
    let l = c(0.7, 0.2);
    let f = DesbovesMap::new(l).map_err(|e| e.to_string())?;
    let w = ((1.0 + 5.0 * l) / (1.0 - l)).cbrt();
    let p = normalize([w, c(1.0, 0.0), c(1.0, 0.0)]).map_err(|e| e.to_string())?;
    ensure(fs_log_jacobian(&f, &p) == f64::NEG_INFINITY, || "critical point not −∞".into())?;
    let info = f.fixed_point_info(&ProjPoint::R0).map_err(|e| e.to_string())?;
    let want = (info.multipliers[0] * info.multipliers[1]).norm().ln();
    let got = fs_log_jacobian(&f, &ProjPoint::R0);
    ensure((got - want).abs() < 1e-9, || format!("{got} vs {want}"))
}

fn repelling_points() -> Result<(), String> {
    let f = DesbovesMap::new(c(3.0, 0.0)).map_err(|e| e.to_string())?;
    let r = is_repelling_periodic(&f, &ProjPoint::R0, 1, 1e-12).map_err(|e| e.to_string())?;
    ensure(r.is_repelling() && r.multipliers.iter().any(|m| (m.norm() - 2.0).abs() < 1e-9), || "r₀".into())?;
    let x = is_repelling_periodic(&f, &ProjPoint::X0, 1, 1e-12).map_err(|e| e.to_string())?;
    ensure(x.is_repelling() && x.multipliers.iter().any(|m| (m.norm() - 4.0).abs() < 1e-9), || "x₀".into())?;
    let rho = is_repelling_periodic(&f, &ProjPoint::RHO0, 1, 1e-12).map_err(|e| e.to_string())?;
    ensure(!rho.is_repelling(), || "ρ₀ classified repelling".into())
}

fn escape_examples() -> Result<(), String> {
    let f = DesbovesMap::new(c(2.0, 0.0)).map_err(|e| e.to_string())?;
    ensure(classify_point(&f, &ProjPoint::RHO0, 1e3, 500) == Escape::Escaped(0), || "ρ₀".into())?;
    ensure(classify_point(&f, &ProjPoint::R0, 1e3, 500) == Escape::Bounded, || "r₀".into())?;
    let y = render_slice(&f, &SliceSpec::square(SliceChart::Y, c(0.0, 0.0), 2.0, 32), 1e3, 200).map_err(|e| e.to_string())?;
    ensure(y.bounded_count() == 32 * 32, || "Y slice not all bounded".into())?;
    let h = DesbovesMap::new(c(0.5, 0.0)).map_err(|e| e.to_string())?;
    let x = render_slice(&h, &SliceSpec::square(SliceChart::X, c(0.0, 0.0), 3.0, 32), 1e3, 500).map_err(|e| e.to_string())?;
    ensure(x.bounded_count() > 0 && x.bounded_count() < 32 * 32, || "X slice lacks one region".into())
}

fn stencil_oracles() -> Result<(), String> {
    let rect = Rect::new(1.5, 2.5, -0.5, 0.5).map_err(|e| e.to_string())?;
    let harmonic = BifurcationGrid::from_field(rect, 0.125, |l| (l * l).re).map_err(|e| e.to_string())?;
    ensure(discrete_laplacian(&harmonic).iter().flatten().all(|c| c.value.abs() < 1e-10), || "harmonic".into())?;
    let quad = BifurcationGrid::from_field(rect, 0.125, |l| l.norm_sqr()).map_err(|e| e.to_string())?;
    ensure(discrete_laplacian(&quad).iter().flatten().all(|c| (c.value - 4.0).abs() < 1e-10), || "|λ|²".into())
}

fn misiurewicz_examples() -> Result<(), String> {
    let w3 = c(-2.0, 0.0).cbrt();
    let k = MisiurewiczCandidate::from_node(w3.into(), 1, Target::X0).map_err(|e| e.to_string())?;
    ensure(check_misiurewicz(&k, 1e-9).passed(), || "λ = 3".into())?;
    let wm3 = c(-0.5, 0.0).cbrt();
    let k = MisiurewiczCandidate::from_node(wm3.into(), 1, Target::Z0).map_err(|e| e.to_string())?;
    ensure(check_misiurewicz(&k, 1e-9).passed(), || "λ = −3".into())?;
    let k = MisiurewiczCandidate::from_node(c(0.0, 0.0).into(), 1, Target::X0).map_err(|e| e.to_string())?;
    ensure(check_misiurewicz(&k, 1e-9).failed == vec![Clause::Repelling], || "λ = −1".into())?;
    let k = MisiurewiczCandidate::from_node(ExtComplex::Infinity, 1, Target::Z0).map_err(|e| e.to_string())?;
    ensure(check_misiurewicz(&k, 1e-9).failed == vec![Clause::Repelling], || "λ = 1".into())?;
    let k = MisiurewiczCandidate::with_lambda(c(3.001, 0.0), w3.into(), 1, Target::X0);
    ensure(check_misiurewicz(&k, 1e-9).failed.first() == Some(&Clause::OnCubic), || "tampered".into())?;
    let p = density_probe(c(3.01, 0.0), 0.05, 2).map_err(|e| e.to_string())?;
    ensure((p.lambda - 3.0).norm() < 1e-12, || "probe at 3.01".into())
}

pub const CHECKS: &[(&str, Check)] = &[
    ("fixed points are fixed", fixed_points),
    ("X, Y, Z and C are invariant", invariant_sets),
    ("pencil semiconjugacy to g", semiconjugacy),
    ("sigma conjugates f(lambda) to f(-lambda)", sigma_conjugacy),
    ("Jacobian closed form", jacobian_closed_form),
    ("lambda = 0 is rejected", zero_parameter_rejected),
    ("critical trace on Y", critical_trace),
    ("quartic solver examples", quartic_examples),
    ("preimage examples", preimage_examples),
    ("intrinsic log-Jacobian examples", log_jacobian_examples),
    ("repelling fixed points", repelling_points),
    ("escape classification and slices", escape_examples),
    ("five-point stencil oracles", stencil_oracles),
    ("Misiurewicz closed forms", misiurewicz_examples),
];

pub fn run_all() -> Vec<CheckResult> {
    CHECKS.iter().map(|(name, f)| CheckResult { name, outcome: f() }).collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn every_check_passes() {
        for r in super::run_all() {
            assert!(r.outcome.is_ok(), "{}: {:?}", r.name, r.outcome);
        }
    }
}
