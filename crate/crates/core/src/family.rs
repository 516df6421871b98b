//! The elementary Desboves maps
//!
//! ```text
//! f_λ = [ -x(x³+2z³) : y(z³-x³+λ(x³+y³+z³)) : z(2x³+z³) ]
//! ```
//!
//! and the three-parameter family they sit in, their Jacobians, chart
//! differentials, and the one-dimensional restrictions to the invariant lines.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::proj::{normalize, Chart, ExtComplex, ProjPoint};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Algebraic degree of every map in the family.
pub const DEGREE: u32 = 4;

/// Relative size below which an image lift counts as the zero vector.
const INDETERMINACY_TOL: f64 = 1e-13;

/// Relative residual used by the curve-membership predicates.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Primitive cube root of unity ω = e^{2πi/3}.
pub fn omega() -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU / 3.0)
}

/// ω^j for j = 0, 1, 2.
pub fn omega_pow(j: usize) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * (j % 3) as f64 / 3.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct Monomial {
    coef: Complex64,
    exp: [u8; 3],
}

/// Homogeneous polynomial map C³ → C³ of degree 4, stored as monomial tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousMap {
    components: [Vec<Monomial>; 3],
}

type Powers = [[Complex64; 5]; 3];

fn powers(v: &[Complex64; 3]) -> Powers {
    let mut p = [[ONE; 5]; 3];
    for (i, row) in p.iter_mut().enumerate() {
        for k in 1..5 {
            row[k] = row[k - 1] * v[i];
        }
    }
    p
}

impl HomogeneousMap {
    fn from_terms(terms: [&[(Complex64, [u8; 3])]; 3]) -> Self {
        let build = |ts: &[(Complex64, [u8; 3])]| {
            ts.iter()
                .filter(|(c, _)| c.norm_sqr() != 0.0)
                .map(|&(coef, exp)| Monomial { coef, exp })
                .collect::<Vec<_>>()
        };
        HomogeneousMap { components: [build(terms[0]), build(terms[1]), build(terms[2])] }
    }

    pub fn eval(&self, v: &[Complex64; 3]) -> [Complex64; 3] {
        let p = powers(v);
        let mut out = [ZERO; 3];
        for (k, comp) in self.components.iter().enumerate() {
            for m in comp {
                let [a, b, c] = m.exp;
                out[k] += m.coef * p[0][a as usize] * p[1][b as usize] * p[2][c as usize];
            }
        }
        out
    }

    /// The 3×3 matrix of partials ∂F_k/∂v_m.
    pub fn jacobian_matrix(&self, v: &[Complex64; 3]) -> [[Complex64; 3]; 3] {
        let p = powers(v);
        let mut out = [[ZERO; 3]; 3];
        for (k, comp) in self.components.iter().enumerate() {
            for m in comp {
                for var in 0..3 {
                    let e = m.exp[var];
                    if e == 0 {
                        continue;
                    }
                    let mut exp = m.exp;
                    exp[var] -= 1;
                    out[k][var] += m.coef
                        * f64::from(e)
                        * p[0][exp[0] as usize]
                        * p[1][exp[1] as usize]
                        * p[2][exp[2] as usize];
                }
            }
        }
        out
    }
}

pub(crate) fn det3(m: &[[Complex64; 3]; 3]) -> Complex64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// 2×2 complex matrix in row-major order.
pub type Mat2 = [[Complex64; 2]; 2];

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub fn mat2_det(a: &Mat2) -> Complex64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Eigenvalues of a 2×2 complex matrix, larger modulus first.
pub fn eigenvalues2(a: &Mat2) -> [Complex64; 2] {
    let tr = a[0][0] + a[1][1];
    let det = mat2_det(a);
    let disc = (tr * tr - 4.0 * det).sqrt();
    let (p, q) = (tr + disc, tr - disc);
    // avoid cancellation: compute the larger root directly, the other from det
    let big = if p.norm() >= q.norm() { p } else { q } * 0.5;
    let small = if big.norm_sqr() > 0.0 { det / big } else { ZERO };
    if big.norm() >= small.norm() {
        [big, small]
    } else {
        [small, big]
    }
}

/// The parameter λ of the elementary family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Parameter {
    Regular(Complex64),
    /// λ = 0: the limit map with an indeterminacy point at ρ₀.
    Degenerate,
}

impl Parameter {
    pub fn value(self) -> Complex64 {
        match self {
            Parameter::Regular(l) => l,
            Parameter::Degenerate => ZERO,
        }
    }
}

/// Stability type of a fixed point read off its two multipliers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixedPointKind {
    Repelling,
    Saddle,
    Attracting,
    Indifferent,
}

/// Moduli within this distance of 1 are treated as indifferent.
pub const INDIFFERENT_TOL: f64 = 1e-9;

pub fn classify_multipliers(eig: &[Complex64; 2]) -> FixedPointKind {
    let m = [eig[0].norm(), eig[1].norm()];
    if m.iter().any(|&r| (r - 1.0).abs() <= INDIFFERENT_TOL) {
        FixedPointKind::Indifferent
    } else if m.iter().all(|&r| r > 1.0) {
        FixedPointKind::Repelling
    } else if m.iter().all(|&r| r < 1.0) {
        FixedPointKind::Attracting
    } else {
        FixedPointKind::Saddle
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointInfo {
    pub location: ProjPoint,
    pub multipliers: [Complex64; 2],
    pub kind: FixedPointKind,
}

impl FixedPointInfo {
    pub fn from_multipliers(location: ProjPoint, multipliers: [Complex64; 2]) -> Self {
        FixedPointInfo { location, multipliers, kind: classify_multipliers(&multipliers) }
    }
}

/// An elementary Desboves map f_λ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesbovesMap {
    param: Parameter,
    poly: HomogeneousMap,
}

impl DesbovesMap {
    /// Builds f_λ; λ = 0 is refused, use [`DesbovesMap::degenerate`] for it.
    pub fn new(lambda: Complex64) -> Result<Self> {
        if lambda.norm_sqr() == 0.0 {
            return Err(Error::DegenerateLambda);
        }
        if !lambda.is_finite() {
            return Err(Error::Precondition("parameter must be finite".into()));
        }
        Ok(Self::build(Parameter::Regular(lambda)))
    }

    /// The λ = 0 limit map, an endomorphism of P² ∖ {ρ₀} only.
    pub fn degenerate() -> Self {
        Self::build(Parameter::Degenerate)
    }

    fn build(param: Parameter) -> Self {
        let l = param.value();
        let poly = GeneralDesboves::new(-ONE, l, ONE).poly;
        DesbovesMap { param, poly }
    }

    pub fn param(&self) -> Parameter {
        self.param
    }

    pub fn lambda(&self) -> Complex64 {
        self.param.value()
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self.param, Parameter::Degenerate)
    }

    pub(crate) fn require_regular(&self) -> Result<()> {
        if self.is_degenerate() {
            Err(Error::DegenerateLambda)
        } else {
            Ok(())
        }
    }

    pub fn polynomial(&self) -> &HomogeneousMap {
        &self.poly
    }

    /// F_λ on an arbitrary lift.
    pub fn eval_lift(&self, v: &[Complex64; 3]) -> [Complex64; 3] {
        let [x, y, z] = *v;
        let (x3, y3, z3) = (x * x * x, y * y * y, z * z * z);
        let l = self.lambda();
        [-x * (x3 + 2.0 * z3), y * (z3 - x3 + l * (x3 + y3 + z3)), z * (2.0 * x3 + z3)]
    }

    pub fn eval(&self, p: &ProjPoint) -> Result<ProjPoint> {
        let img = self.eval_lift(&p.coords());
        let m = img.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if m <= INDETERMINACY_TOL {
            return Err(Error::IndeterminacyHit);
        }
        normalize(img)
    }

    /// n-fold iterate.
    pub fn iterate(&self, p: &ProjPoint, n: usize) -> Result<ProjPoint> {
        let mut q = *p;
        for _ in 0..n {
            q = self.eval(&q)?;
        }
        Ok(q)
    }

    /// Closed-form Jacobian −8(x³−z³)²(−x³+z³+λ(4y³+x³+z³)) on the canonical lift.
    pub fn jacobian_det(&self, p: &ProjPoint) -> Complex64 {
        jacobian_closed_form(self.lambda(), &p.coords())
    }

    /// Determinant of the 3×3 lift derivative built from the monomial table.
    pub fn jacobian_det_numeric(&self, p: &ProjPoint) -> Complex64 {
        det3(&self.poly.jacobian_matrix(&p.coords()))
    }

    /// Differential in explicit charts at p (source) and f(p) (target).
    pub fn differential_in(&self, p: &ProjPoint, src: Chart, dst: Chart) -> Result<Mat2> {
        let mut v = p.coords();
        let s = v[src.index()];
        if s.norm_sqr() == 0.0 {
            return Err(Error::ChartOverflow);
        }
        for c in v.iter_mut() {
            *c /= s;
        }
        let f = self.poly.eval(&v);
        let jm = self.poly.jacobian_matrix(&v);
        let j = dst.index();
        let fj = f[j];
        if fj.norm_sqr() == 0.0 {
            return Err(Error::ChartOverflow);
        }
        let [a0, a1] = dst.free_indices();
        let [m0, m1] = src.free_indices();
        let entry = |k: usize, m: usize| (jm[k][m] * fj - f[k] * jm[j][m]) / (fj * fj);
        Ok([[entry(a0, m0), entry(a0, m1)], [entry(a1, m0), entry(a1, m1)]])
    }

    /// Differential with charts chosen by the largest coordinate of p and f(p).
    pub fn differential(&self, p: &ProjPoint) -> Result<Mat2> {
        let q = self.eval(p)?;
        self.differential_in(p, Chart::from_index(p.pivot()), Chart::from_index(q.pivot()))
    }

    /// Classifies p as a fixed point; the caller is responsible for p being fixed.
    pub fn fixed_point_info(&self, p: &ProjPoint) -> Result<FixedPointInfo> {
        let c = Chart::from_index(p.pivot());
        let d = self.differential_in(p, c, c)?;
        Ok(FixedPointInfo::from_multipliers(*p, eigenvalues2(&d)))
    }

    /// All 21 fixed points, with their multipliers, in closed form.
    ///
    /// They lie over the five fixed points of g on Y (w = 0, ∞ and w³ = −1),
    /// four finite ones per fiber, plus ρ₀.
    pub fn fixed_point_catalog(&self) -> Result<Vec<FixedPointInfo>> {
        self.require_regular()?;
        let l = self.lambda();
        let mut pts = vec![ProjPoint::RHO0, ProjPoint::X0, ProjPoint::Z0];
        for j in 0..3 {
            let r = -omega_pow(j);
            // [1:0:-ω^j] on Y ∩ C
            pts.push(normalize([ONE, ZERO, r])?);
            // on X ∩ C: [0:t:1] with t³ = -1
            pts.push(normalize([ZERO, r, ONE])?);
            // on Z ∩ C: [1:s:0] with s³ = -1
            pts.push(normalize([ONE, r, ZERO])?);
        }
        // over w³ = -1: y³ = -3/λ
        let ycube = -3.0 / l;
        let y0 = ycube.cbrt();
        for j in 0..3 {
            let w = -omega_pow(j);
            for k in 0..3 {
                pts.push(normalize([w, y0 * omega_pow(k), ONE])?);
            }
        }
        pts.into_iter().map(|p| self.fixed_point_info(&p)).collect()
    }
}

pub(crate) fn jacobian_closed_form(lambda: Complex64, v: &[Complex64; 3]) -> Complex64 {
    let [x, y, z] = *v;
    let (x3, y3, z3) = (x * x * x, y * y * y, z * z * z);
    let d = x3 - z3;
    -8.0 * d * d * (-x3 + z3 + lambda * (4.0 * y3 + x3 + z3))
}

/// The three-parameter family x(y³−z³+aΦ), y(z³−x³+bΦ), z(x³−y³+cΦ), Φ = x³+y³+z³.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralDesboves {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    poly: HomogeneousMap,
}

impl GeneralDesboves {
    pub fn new(a: Complex64, b: Complex64, c: Complex64) -> Self {
        let poly = HomogeneousMap::from_terms([
            &[(a, [4, 0, 0]), (1.0 + a, [1, 3, 0]), (a - 1.0, [1, 0, 3])],
            &[(b - 1.0, [3, 1, 0]), (b, [0, 4, 0]), (1.0 + b, [0, 1, 3])],
            &[(1.0 + c, [3, 0, 1]), (c - 1.0, [0, 3, 1]), (c, [0, 0, 4])],
        ]);
        GeneralDesboves { a, b, c, poly }
    }

    /// abc(a+b+c)(a+1−b)(b+1−c)(c+1−a).
    pub fn hyperplane_product(&self) -> Complex64 {
        let (a, b, c) = (self.a, self.b, self.c);
        a * b * c * (a + b + c) * (a + 1.0 - b) * (b + 1.0 - c) * (c + 1.0 - a)
    }

    pub fn eval(&self, p: &ProjPoint) -> Result<ProjPoint> {
        let img = self.poly.eval(&p.coords());
        let m = img.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if m <= INDETERMINACY_TOL {
            return Err(Error::NotEndomorphism);
        }
        normalize(img)
    }
}

/// True when (a, b, c) avoids the seven hyperplanes.
pub fn well_defined(a: Complex64, b: Complex64, c: Complex64) -> bool {
    GeneralDesboves::new(a, b, c).hyperplane_product().norm_sqr() != 0.0
}

pub fn eval_general(a: Complex64, b: Complex64, c: Complex64, p: &ProjPoint) -> Result<ProjPoint> {
    GeneralDesboves::new(a, b, c).eval(p)
}

/// The Lattès map g(w) = −w(w³+2)/(2w³+1) on Y, evaluated projectively.
pub fn lattes_g(w: ExtComplex) -> ExtComplex {
    let (x, z) = w.to_pair();
    let (gx, gz) = lattes_pair(x, z);
    ExtComplex::from_pair(gx, gz)
}

pub(crate) fn lattes_pair(x: Complex64, z: Complex64) -> (Complex64, Complex64) {
    let (x3, z3) = (x * x * x, z * z * z);
    (-x * (x3 + 2.0 * z3), z * (2.0 * x3 + z3))
}

/// g'(w) for finite w away from the poles.
pub fn lattes_g_derivative(w: Complex64) -> Complex64 {
    let w3 = w * w * w;
    let d = 2.0 * w3 + 1.0;
    (-(4.0 * w3 + 2.0) * d + (w3 * w + 2.0 * w) * 6.0 * w * w) / (d * d)
}

/// The restriction of f_λ to X = {x = 0} in t = y/z: t ↦ (1+λ)t + λt⁴.
pub fn restriction_x(t: Complex64, lambda: Complex64) -> Complex64 {
    (1.0 + lambda) * t + lambda * t * t * t * t
}

fn cubic_residual(form: Complex64, scale: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        form.norm() / scale
    }
}

/// Relative residual of x³+y³+z³ on the canonical lift.
pub fn fermat_residual(p: &ProjPoint) -> f64 {
    let [x, y, z] = p.coords();
    let n = crate::proj::norm2(&p.coords());
    cubic_residual(x * x * x + y * y * y + z * z * z, n * n * n)
}

pub fn on_fermat(p: &ProjPoint) -> bool {
    fermat_residual(p) < MEMBERSHIP_TOL
}

fn line_residual(p: &ProjPoint, i: usize) -> f64 {
    let c = p.coords();
    c[i].norm() / crate::proj::norm2(&c)
}

pub fn on_line_x(p: &ProjPoint) -> bool {
    line_residual(p, 0) < MEMBERSHIP_TOL
}

pub fn on_line_y(p: &ProjPoint) -> bool {
    line_residual(p, 1) < MEMBERSHIP_TOL
}

pub fn on_line_z(p: &ProjPoint) -> bool {
    line_residual(p, 2) < MEMBERSHIP_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proj::chordal_distance;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let f = DesbovesMap::new(ONE).unwrap();
        assert!(f.eval(&ProjPoint::R0).unwrap().approx_eq(&ProjPoint::R0, 1e-15));
        let f = DesbovesMap::new(c(0.3, -2.0)).unwrap();
        assert_eq!(f.eval(&ProjPoint::RHO0).unwrap(), ProjPoint::RHO0);
        let f0 = DesbovesMap::degenerate();
        assert_eq!(f0.eval(&ProjPoint::RHO0), Err(Error::IndeterminacyHit));
        assert_eq!(DesbovesMap::new(ZERO), Err(Error::DegenerateLambda));
    }

    #[test]
    fn general_family_examples() {
        assert!(!well_defined(ZERO, c(2.0, 0.0), c(3.0, 0.0)));
        assert!(well_defined(ONE, ONE, ONE));
        let g = GeneralDesboves::new(ONE, ONE, ONE);
        assert_eq!(g.hyperplane_product(), c(3.0, 0.0));
        let l = c(0.7, 0.4);
        let f = DesbovesMap::new(l).unwrap();
        let p = ProjPoint::new(c(0.2, 0.1), c(-0.5, 0.9), ONE).unwrap();
        let q = eval_general(-ONE, l, ONE, &p).unwrap();
        assert!(chordal_distance(&q, &f.eval(&p).unwrap()) < 1e-14);
    }

    #[test]
    fn ill_defined_family_hits_common_zero() {
        // with a = 0 every component vanishes at [1:0:0]
        let g = GeneralDesboves::new(ZERO, ONE, ONE);
        assert_eq!(g.eval(&ProjPoint::Z0), Err(Error::NotEndomorphism));
    }

    #[test]
    fn jacobian_examples() {
        for l in [c(1.0, 0.0), c(-2.5, 0.3), c(0.01, 5.0)] {
            let f = DesbovesMap::new(l).unwrap();
            let j = f.jacobian_det(&ProjPoint::R0);
            assert!((j - c(64.0, 0.0)).norm() < 1e-12);
            assert!((f.jacobian_det_numeric(&ProjPoint::R0) - j).norm() < 1e-10);
            let on_l0 = ProjPoint::real(1.0, 0.37, 1.0).unwrap();
            assert_eq!(f.jacobian_det(&on_l0), ZERO);
        }
    }

    #[test]
    fn multipliers_at_x0_and_rho0() {
        let l = c(0.4, 0.9);
        let f = DesbovesMap::new(l).unwrap();
        let info = f.fixed_point_info(&ProjPoint::X0).unwrap();
        let has = |target: Complex64| info.multipliers.iter().any(|m| (m - target).norm() < 1e-12);
        assert!(has(1.0 + l), "{:?}", info.multipliers);
        assert!(has(c(-2.0, 0.0)));
        let info = f.fixed_point_info(&ProjPoint::RHO0).unwrap();
        assert!(info.multipliers.iter().all(|m| m.norm() < 1e-15));
        assert_eq!(info.kind, FixedPointKind::Attracting);
    }

    #[test]
    fn lattes_examples() {
        assert_eq!(lattes_g(ExtComplex::Finite(ZERO)), ExtComplex::Finite(ZERO));
        assert_eq!(lattes_g(ExtComplex::Infinity), ExtComplex::Infinity);
        for j in 0..3 {
            let w = omega_pow(j);
            let gw = lattes_g(w.into()).finite().unwrap();
            assert!((gw + w).norm() < 1e-14);
            assert!(lattes_g_derivative(w).norm() < 1e-13);
        }
        // the cube roots of −1/2 are poles
        let pole = Complex64::new(-0.5, 0.0).cbrt();
        assert!(lattes_g(pole.into()).finite().map_or(true, |v| v.norm() > 1e12));
    }

    #[test]
    fn restriction_x_examples() {
        let l = c(0.3, 0.2);
        assert_eq!(restriction_x(ZERO, l), ZERO);
        let h = 1e-7;
        let d = (restriction_x(c(h, 0.0), l) - restriction_x(c(-h, 0.0), l)) / (2.0 * h);
        assert!((d - (1.0 + l)).norm() < 1e-7);
        let t = c(0.3, -0.7);
        let m1 = restriction_x(t, -ONE);
        assert!((m1 + t * t * t * t).norm() < 1e-15);
        let mut big = c(10.0, 1.0);
        for _ in 0..4 {
            big = restriction_x(big, l);
        }
        assert!(big.norm() > 1e20);
    }

    #[test]
    fn catalog_examples() {
        let f = DesbovesMap::new(c(3.0, 0.0)).unwrap();
        let cat = f.fixed_point_catalog().unwrap();
        assert_eq!(cat.len(), 21);
        for info in &cat {
            assert!(f.eval(&info.location).unwrap().approx_eq(&info.location, 1e-12));
        }
        let find = |p: ProjPoint| cat.iter().find(|i| i.location.approx_eq(&p, 1e-12)).unwrap();
        assert_eq!(find(ProjPoint::X0).kind, FixedPointKind::Repelling);
        assert_eq!(find(ProjPoint::Z0).kind, FixedPointKind::Repelling);
        let f = DesbovesMap::new(-ONE).unwrap();
        let cat = f.fixed_point_catalog().unwrap();
        let find = |p: ProjPoint| cat.iter().find(|i| i.location.approx_eq(&p, 1e-12)).unwrap();
        assert_ne!(find(ProjPoint::X0).kind, FixedPointKind::Repelling);
        assert!(find(ProjPoint::X0).multipliers.iter().any(|m| m.norm() < 1e-14));
        assert_eq!(find(ProjPoint::Z0).kind, FixedPointKind::Repelling);
        for j in 0..3 {
            let r = normalize([ONE, ZERO, -omega_pow(j)]).unwrap();
            assert_eq!(find(r).kind, FixedPointKind::Repelling);
        }
    }

    #[test]
    fn membership_examples() {
        assert!(on_fermat(&ProjPoint::R0) && on_line_y(&ProjPoint::R0));
        let r = ProjPoint::RHO0;
        assert!(on_line_x(&r) && on_line_z(&r) && !on_fermat(&r));
    }

    #[test]
    fn eigenvalues_of_triangular() {
        let m = [[c(2.0, 1.0), c(5.0, 0.0)], [ZERO, c(-0.5, 0.0)]];
        let e = eigenvalues2(&m);
        assert!((e[0] - c(2.0, 1.0)).norm() < 1e-14);
        assert!((e[1] - c(-0.5, 0.0)).norm() < 1e-14);
    }
}
