//! Roots of complex polynomials of degree at most four.
//!
//! Aberth–Ehrlich simultaneous iteration does the work; Ferrari's closed form
//! is the fallback when it stalls. Every root is then Newton-polished and
//! nearly coincident roots are merged into clusters with multiplicity.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::proj::ExtComplex;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Required backward error |p(r)| / Σ|cᵢ||r|ⁱ for every finite root.
pub const SOLVER_TOL: f64 = 1e-10;

const MAX_ABERTH_ITERS: usize = 400;
const CLUSTER_RADIUS: f64 = 1e-3;
/// At an m-fold cluster the k-th derivative is only resolvable to this power (m−k)/m.
const CLUSTER_VALIDATE: f64 = 1e3 * f64::EPSILON;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuarticRoots {
    /// Four roots, repeated according to multiplicity; degree drops appear as ∞.
    pub roots: [ExtComplex; 4],
    /// Worst backward error over the finite roots.
    pub residual: f64,
}

impl QuarticRoots {
    pub fn finite(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.roots.iter().filter_map(|r| r.finite())
    }

    /// Distinct roots with their multiplicities.
    pub fn clusters(&self) -> Vec<(ExtComplex, usize)> {
        let mut out: Vec<(ExtComplex, usize)> = Vec::new();
        for r in self.roots {
            match out.iter_mut().find(|(v, _)| *v == r) {
                Some(slot) => slot.1 += 1,
                None => out.push((r, 1)),
            }
        }
        out
    }
}

/// Evaluates p and p' by Horner; `c` is ordered from the leading coefficient.
fn horner(c: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = c[0];
    let mut dp = ZERO;
    for &a in &c[1..] {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

fn backward_error(c: &[Complex64], z: Complex64) -> f64 {
    let (p, _) = horner(c, z);
    let az = z.norm();
    let mut scale = 0.0;
    for &a in c {
        scale = scale * az + a.norm();
    }
    if scale == 0.0 {
        0.0
    } else {
        p.norm() / scale
    }
}

fn quadratic(a: Complex64, b: Complex64, c: Complex64) -> [Complex64; 2] {
    let disc = (b * b - 4.0 * a * c).sqrt();
    let q1 = -b + disc;
    let q2 = -b - disc;
    let q = if q1.norm() >= q2.norm() { q1 } else { q2 } * 0.5;
    if q.norm_sqr() == 0.0 {
        return [ZERO, ZERO];
    }
    [q / a, c / q]
}

fn cube_root_largest(v: Complex64) -> Complex64 {
    if v.norm_sqr() == 0.0 {
        ZERO
    } else {
        v.cbrt()
    }
}

/// One root of the depressed cubic t³ + pt + q = 0, preferring a nonzero one.
fn cardano_root(p: Complex64, q: Complex64) -> Complex64 {
    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let a = -q / 2.0 + disc;
    let b = -q / 2.0 - disc;
    let u = cube_root_largest(if a.norm() >= b.norm() { a } else { b });
    if u.norm_sqr() == 0.0 {
        return ZERO;
    }
    u - p / (3.0 * u)
}

/// Ferrari's method for a monic quartic x⁴ + b x³ + c x² + d x + e.
fn ferrari(b: Complex64, c: Complex64, d: Complex64, e: Complex64) -> [Complex64; 4] {
    let shift = b / 4.0;
    let b2 = b * b;
    let p = c - 3.0 * b2 / 8.0;
    let q = d - b * c / 2.0 + b2 * b / 8.0;
    let r = e - b * d / 4.0 + b2 * c / 16.0 - 3.0 * b2 * b2 / 256.0;
    let ys: [Complex64; 4] = if q.norm() <= 1e-14 * (1.0 + p.norm() + r.norm()) {
        let [s1, s2] = quadratic(Complex64::new(1.0, 0.0), p, r);
        let (a, b) = (s1.sqrt(), s2.sqrt());
        [a, -a, b, -b]
    } else {
        // resolvent m³ + p m² + (p²/4 − r) m − q²/8 = 0, depressed via m = t − p/3
        let a2 = p;
        let a1 = p * p / 4.0 - r;
        let a0 = -q * q / 8.0;
        let pp = a1 - a2 * a2 / 3.0;
        let qq = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
        let mut m = cardano_root(pp, qq) - a2 / 3.0;
        if m.norm_sqr() == 0.0 {
            m = Complex64::new(1e-300, 0.0);
        }
        let s = (2.0 * m).sqrt();
        let k = q / (4.0 * m);
        let base = p / 2.0 + m;
        let one = Complex64::new(1.0, 0.0);
        let [y1, y2] = quadratic(one, -s, base + s * k);
        let [y3, y4] = quadratic(one, s, base - s * k);
        [y1, y2, y3, y4]
    };
    ys.map(|y| y - shift)
}

fn aberth(c: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = c.len() - 1;
    let lead = c[0];
    let monic: Vec<Complex64> = c.iter().map(|&a| a / lead).collect();
    // Fujiwara-type radius for the initial circle
    let radius = monic[1..]
        .iter()
        .enumerate()
        .map(|(k, a)| a.norm().powf(1.0 / (k + 1) as f64))
        .fold(0.0, f64::max)
        .max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / n as f64 + 0.4))
        .collect();
    for _ in 0..MAX_ABERTH_ITERS {
        let mut max_step: f64 = 0.0;
        for k in 0..n {
            let (p, dp) = horner(&monic, z[k]);
            if p.norm_sqr() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let sum: Complex64 = (0..n).filter(|&j| j != k).map(|j| (z[k] - z[j]).inv()).sum();
            let step = ratio / (1.0 - ratio * sum);
            if !step.is_finite() {
                return None;
            }
            z[k] -= step;
            max_step = max_step.max(step.norm() / (1.0 + z[k].norm()));
        }
        if max_step < 1e-16 {
            break;
        }
    }
    z.iter().all(|r| r.is_finite()).then_some(z)
}

fn polish(c: &[Complex64], z: Complex64) -> Complex64 {
    let mut best = z;
    let mut best_err = backward_error(c, z);
    let mut cur = z;
    for _ in 0..4 {
        let (p, dp) = horner(c, cur);
        if dp.norm_sqr() == 0.0 {
            break;
        }
        cur -= p / dp;
        let err = backward_error(c, cur);
        if !(err < best_err) {
            break;
        }
        best = cur;
        best_err = err;
    }
    best
}

/// Derivative test at a cluster centroid: p^{(k)}(c)/k! ≈ 0 for k < m.
fn validate_cluster(c: &[Complex64], center: Complex64, m: usize) -> bool {
    let mut coeffs = c.to_vec();
    for k in 0..m {
        let tol = CLUSTER_VALIDATE.powf((m - k) as f64 / m as f64);
        if backward_error(&coeffs, center) > tol {
            return false;
        }
        if coeffs.len() == 1 {
            return false;
        }
        coeffs = derivative(&coeffs);
    }
    true
}

fn derivative(c: &[Complex64]) -> Vec<Complex64> {
    let deg = c.len() - 1;
    c[..deg].iter().enumerate().map(|(i, &a)| a * (deg - i) as f64).collect()
}

fn cluster_roots(c: &[Complex64], roots: &mut [Complex64]) {
    let n = roots.len();
    let mut assigned = vec![false; n];
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let scale = 1.0 + roots[i].norm();
        let members: Vec<usize> = (i..n)
            .filter(|&j| !assigned[j] && (roots[j] - roots[i]).norm() <= CLUSTER_RADIUS * scale)
            .collect();
        if members.len() > 1 {
            let center = members.iter().map(|&j| roots[j]).sum::<Complex64>() / members.len() as f64;
            if validate_cluster(c, center, members.len()) {
                // the (m−1)-th derivative has a simple root at the cluster
                let mut d = c.to_vec();
                for _ in 1..members.len() {
                    d = derivative(&d);
                }
                let center = polish(&d, center);
                for &j in &members {
                    roots[j] = center;
                    assigned[j] = true;
                }
                continue;
            }
        }
        assigned[i] = true;
    }
}

/// All roots of c4 w⁴ + c3 w³ + c2 w² + c1 w + c0.
pub fn quartic_roots(c4: Complex64, c3: Complex64, c2: Complex64, c1: Complex64, c0: Complex64) -> Result<QuarticRoots> {
    let all = [c4, c3, c2, c1, c0];
    if all.iter().all(|a| a.norm_sqr() == 0.0) {
        return Err(Error::Precondition("polynomial is identically zero".into()));
    }
    let lead = all.iter().position(|a| a.norm_sqr() != 0.0).expect("nonzero");
    let trail = 4 - all.iter().rposition(|a| a.norm_sqr() != 0.0).expect("nonzero");
    let core = &all[lead..5 - trail];
    let deg = core.len() - 1;

    let mut finite: Vec<Complex64> = match deg {
        0 => Vec::new(),
        1 => vec![-core[1] / core[0]],
        2 => quadratic(core[0], core[1], core[2]).to_vec(),
        _ => {
            let a = aberth(core);
            let ok = a.as_ref().is_some_and(|z| z.iter().all(|&r| backward_error(core, r) < SOLVER_TOL));
            if ok {
                a.expect("checked")
            } else {
                let monic: Vec<Complex64> = core.iter().map(|&x| x / core[0]).collect();
                if deg == 4 {
                    ferrari(monic[1], monic[2], monic[3], monic[4]).to_vec()
                } else {
                    // cubic: pad with a root at zero and drop it again
                    let r = ferrari(monic[1], monic[2], monic[3], ZERO);
                    let mut v = r.to_vec();
                    let k = (0..4).min_by(|&i, &j| v[i].norm().total_cmp(&v[j].norm())).expect("4");
                    v.remove(k);
                    v
                }
            }
        }
    };
    for r in finite.iter_mut() {
        *r = polish(core, *r);
    }
    cluster_roots(core, &mut finite);
    let residual = finite.iter().map(|&r| backward_error(core, r)).fold(0.0, f64::max);
    if !(residual < SOLVER_TOL) {
        return Err(Error::SolverDiverged { residual });
    }

    let mut roots = [ExtComplex::Infinity; 4];
    let mut k = 0;
    for r in finite.into_iter().chain(std::iter::repeat(ZERO).take(trail)) {
        roots[k] = ExtComplex::Finite(r);
        k += 1;
    }
    Ok(QuarticRoots { roots, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fourth_roots_of_unity() {
        let r = quartic_roots(c(1.0, 0.0), ZERO, ZERO, ZERO, c(-1.0, 0.0)).unwrap();
        for target in [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)] {
            assert!(r.finite().any(|z| (z - target).norm() < 1e-14));
        }
        assert_eq!(r.clusters().len(), 4);
    }

    #[test]
    fn quadruple_root() {
        // (w − 1)⁴ = w⁴ − 4w³ + 6w² − 4w + 1
        let r = quartic_roots(c(1.0, 0.0), c(-4.0, 0.0), c(6.0, 0.0), c(-4.0, 0.0), c(1.0, 0.0)).unwrap();
        let cl = r.clusters();
        assert_eq!(cl.len(), 1, "{cl:?}");
        assert_eq!(cl[0].1, 4);
        assert!((cl[0].0.finite().unwrap() - 1.0).norm() < 1e-10);
    }

    #[test]
    fn degree_drop_and_zero_roots() {
        let r = quartic_roots(ZERO, ZERO, c(1.0, 0.0), ZERO, c(-4.0, 0.0)).unwrap();
        assert_eq!(r.roots.iter().filter(|x| x.is_infinite()).count(), 2);
        let r = quartic_roots(c(2.0, 0.0), ZERO, c(1.0, 0.0), ZERO, ZERO).unwrap();
        assert_eq!(r.finite().filter(|z| z.norm() == 0.0).count(), 2);
        assert!(quartic_roots(ZERO, ZERO, ZERO, ZERO, ZERO).is_err());
    }

    #[test]
    fn ferrari_agrees_with_aberth() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut g = || c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let (b, cc, d, e) = (g(), g(), g(), g());
            let one = c(1.0, 0.0);
            let coeffs = [one, b, cc, d, e];
            let f = ferrari(b, cc, d, e);
            let a = aberth(&coeffs).unwrap();
            for r in f {
                let r = polish(&coeffs, r);
                assert!(a.iter().any(|z| (z - r).norm() < 1e-8), "{r} vs {a:?}");
            }
        }
    }

    #[test]
    fn random_monic_quartics_vieta() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let mut g = || c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let (c3, c2, c1, c0) = (g(), g(), g(), g());
            let r = quartic_roots(c(1.0, 0.0), c3, c2, c1, c0).unwrap();
            assert!(r.residual < 1e-10);
            let z: Vec<Complex64> = r.finite().collect();
            assert_eq!(z.len(), 4);
            let e1: Complex64 = z.iter().sum();
            let e2 = z[0] * z[1] + z[0] * z[2] + z[0] * z[3] + z[1] * z[2] + z[1] * z[3] + z[2] * z[3];
            let e3 = z[0] * z[1] * z[2] + z[0] * z[1] * z[3] + z[0] * z[2] * z[3] + z[1] * z[2] * z[3];
            let e4 = z[0] * z[1] * z[2] * z[3];
            assert!((e1 + c3).norm() < 1e-8);
            assert!((e2 - c2).norm() < 1e-8);
            assert!((e3 + c1).norm() < 1e-8);
            assert!((e4 - c0).norm() < 1e-8);
        }
    }
}
