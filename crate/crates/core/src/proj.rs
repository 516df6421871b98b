//! Homogeneous-coordinate arithmetic on the complex projective plane.
//!
//! Points are stored as complex triples `[x:y:z]` in a canonical normalization:
//! the coordinate of largest modulus is divided out, so it becomes exactly `1`
//! and every other coordinate lies in the closed unit disc. Ties go to the
//! lowest index. Metric formulas build unit 2-norm lifts on demand.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for projective equality, measured in chordal distance.
pub const PROJ_EQ_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A point of P²(C) in canonical max-modulus normalization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjPoint([Complex64; 3]);

impl ProjPoint {
    /// ρ₀ = [0:1:0], the center of the invariant pencil.
    pub const RHO0: ProjPoint = ProjPoint([ZERO, ONE, ZERO]);
    /// x₀ = [0:0:1] = X ∩ Y.
    pub const X0: ProjPoint = ProjPoint([ZERO, ZERO, ONE]);
    /// z₀ = [1:0:0] = Z ∩ Y.
    pub const Z0: ProjPoint = ProjPoint([ONE, ZERO, ZERO]);
    /// r₀ = [1:0:-1], a fixed point on the Fermat curve and on Y.
    pub const R0: ProjPoint = ProjPoint([ONE, ZERO, Complex64::new(-1.0, 0.0)]);

    pub fn new(x: Complex64, y: Complex64, z: Complex64) -> Result<Self> {
        normalize([x, y, z])
    }

    /// Convenience constructor from real coordinates.
    pub fn real(x: f64, y: f64, z: f64) -> Result<Self> {
        normalize([x.into(), y.into(), z.into()])
    }

    pub fn coords(&self) -> [Complex64; 3] {
        self.0
    }

    pub fn x(&self) -> Complex64 {
        self.0[0]
    }

    pub fn y(&self) -> Complex64 {
        self.0[1]
    }

    pub fn z(&self) -> Complex64 {
        self.0[2]
    }

    /// Index of the coordinate equal to one in the canonical lift.
    pub fn pivot(&self) -> usize {
        max_modulus_index(&self.0)
    }

    /// Lift with unit Euclidean norm.
    pub fn unit_lift(&self) -> [Complex64; 3] {
        let n = norm2(&self.0);
        [self.0[0] / n, self.0[1] / n, self.0[2] / n]
    }

    pub fn chordal(&self, other: &ProjPoint) -> f64 {
        chordal_distance(self, other)
    }

    pub fn approx_eq(&self, other: &ProjPoint, tol: f64) -> bool {
        chordal_distance(self, other) < tol
    }

    /// The swap σ: [x:y:z] ↦ [z:y:x].
    pub fn swap_xz(&self) -> ProjPoint {
        normalize([self.0[2], self.0[1], self.0[0]]).expect("nonzero by construction")
    }
}

impl fmt::Display for ProjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y, z] = self.0;
        write!(f, "[{x} : {y} : {z}]")
    }
}

fn max_modulus_index(v: &[Complex64; 3]) -> usize {
    let mut best = 0;
    let mut best_m = v[0].norm_sqr();
    for (i, c) in v.iter().enumerate().skip(1) {
        let m = c.norm_sqr();
        if m > best_m {
            best = i;
            best_m = m;
        }
    }
    best
}

pub(crate) fn norm2(v: &[Complex64; 3]) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr()).sqrt()
}

/// Canonical representative of the class of `raw`.
pub fn normalize(raw: [Complex64; 3]) -> Result<ProjPoint> {
    let i = max_modulus_index(&raw);
    let m = raw[i];
    if m.norm_sqr() == 0.0 || !m.is_finite() {
        return Err(Error::ZeroVector);
    }
    let mut out = [raw[0] / m, raw[1] / m, raw[2] / m];
    out[i] = ONE;
    Ok(ProjPoint(out))
}

/// Fubini–Study chordal distance: the norm of the cross product of unit lifts.
pub fn chordal_distance(p: &ProjPoint, q: &ProjPoint) -> f64 {
    let u = p.unit_lift();
    let v = q.unit_lift();
    let c0 = u[1] * v[2] - u[2] * v[1];
    let c1 = u[2] * v[0] - u[0] * v[2];
    let c2 = u[0] * v[1] - u[1] * v[0];
    (c0.norm_sqr() + c1.norm_sqr() + c2.norm_sqr()).sqrt().min(1.0)
}

/// Projection along the pencil of lines through ρ₀ onto Y = {y = 0}.
pub fn project_pencil(p: &ProjPoint) -> Result<ProjPoint> {
    let [x, _, z] = p.0;
    if x.norm_sqr() == 0.0 && z.norm_sqr() == 0.0 {
        return Err(Error::AtPencilCenter);
    }
    normalize([x, ZERO, z])
}

/// Affine chart: the coordinate that is set to one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    /// x = 1, affine coordinates (y/x, z/x).
    X,
    /// y = 1, affine coordinates (x/y, z/y).
    Y,
    /// z = 1, affine coordinates (x/z, y/z).
    Z,
}

impl Chart {
    pub const ALL: [Chart; 3] = [Chart::X, Chart::Y, Chart::Z];

    pub fn index(self) -> usize {
        match self {
            Chart::X => 0,
            Chart::Y => 1,
            Chart::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Chart {
        match i {
            0 => Chart::X,
            1 => Chart::Y,
            _ => Chart::Z,
        }
    }

    /// Homogeneous indices of the two affine coordinates, in order.
    pub fn free_indices(self) -> [usize; 2] {
        match self {
            Chart::X => [1, 2],
            Chart::Y => [0, 2],
            Chart::Z => [0, 1],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartCoord {
    pub chart: Chart,
    pub u: Complex64,
    pub v: Complex64,
}

pub fn to_chart(p: &ProjPoint, chart: Chart) -> Result<ChartCoord> {
    let c = p.0;
    let d = c[chart.index()];
    if d.norm_sqr() == 0.0 {
        return Err(Error::ChartOverflow);
    }
    let [i, j] = chart.free_indices();
    Ok(ChartCoord { chart, u: c[i] / d, v: c[j] / d })
}

pub fn from_chart(c: &ChartCoord) -> ProjPoint {
    let mut raw = [ONE; 3];
    let [i, j] = c.chart.free_indices();
    raw[i] = c.u;
    raw[j] = c.v;
    normalize(raw).expect("chart lift has a unit coordinate")
}

/// A point of the Riemann sphere, used for the w = x/z coordinate on Y.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExtComplex {
    Finite(Complex64),
    Infinity,
}

impl ExtComplex {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            ExtComplex::Finite(c) => Some(c),
            ExtComplex::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtComplex::Infinity)
    }

    /// Homogeneous pair (x, z) with max(|x|, |z|) = 1.
    pub fn to_pair(self) -> (Complex64, Complex64) {
        match self {
            ExtComplex::Infinity => (ONE, ZERO),
            ExtComplex::Finite(w) if w.norm_sqr() <= 1.0 => (w, ONE),
            ExtComplex::Finite(w) => (ONE, w.inv()),
        }
    }

    pub fn from_pair(x: Complex64, z: Complex64) -> ExtComplex {
        if z.norm_sqr() == 0.0 {
            ExtComplex::Infinity
        } else {
            ExtComplex::Finite(x / z)
        }
    }

    /// The point [w:0:1] (or z₀ for w = ∞) on the line Y.
    pub fn on_y(self) -> ProjPoint {
        let (x, z) = self.to_pair();
        normalize([x, ZERO, z]).expect("pair is nonzero")
    }

    /// Reads w = x/z off a point, ignoring its y coordinate.
    pub fn w_of(p: &ProjPoint) -> ExtComplex {
        ExtComplex::from_pair(p.x(), p.z())
    }

    /// Chordal distance on the sphere, matching the metric of Y ⊂ P².
    pub fn chordal(self, other: ExtComplex) -> f64 {
        chordal_distance(&self.on_y(), &other.on_y())
    }
}

impl From<Complex64> for ExtComplex {
    fn from(c: Complex64) -> Self {
        ExtComplex::Finite(c)
    }
}

impl fmt::Display for ExtComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtComplex::Finite(c) => write!(f, "{c}"),
            ExtComplex::Infinity => write!(f, "inf"),
        }
    }
}
