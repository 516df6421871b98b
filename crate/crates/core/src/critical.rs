//! The critical set C_λ = C′_λ ∪ L₀ ∪ L₁ ∪ L₂.
//!
//! C′_λ = {−x³ + z³ + λ(4y³ + x³ + z³) = 0} meets Y in the points [w:0:1]
//! with (1−λ)w³ = 1+λ. Inverting that relation, λ = (w³−1)/(w³+1), turns a
//! search for critical points on Y into closed-form arithmetic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::omega_pow;
use crate::proj::{ExtComplex, ProjPoint};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative tolerance for w³ = ±1 and for the critical-factor predicates.
pub const CRITICAL_TOL: f64 = 1e-12;

/// The three points of C′_λ ∩ Y, with multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalTraceOnY {
    pub lambda: Complex64,
    pub w: [ExtComplex; 3],
}

impl CriticalTraceOnY {
    pub fn points(&self) -> [ProjPoint; 3] {
        self.w.map(ExtComplex::on_y)
    }

    /// True when one of the three trace points is within `tol` (chordal) of `w`.
    pub fn contains(&self, w: ExtComplex, tol: f64) -> bool {
        self.w.iter().any(|v| v.chordal(w) < tol)
    }

    /// Residual |(1−λ)x³ − (1+λ)z³| relative to |x|³ + |z|³, worst over the three points.
    pub fn residual(&self) -> f64 {
        self.w.iter().map(|&w| trace_residual(self.lambda, w)).fold(0.0, f64::max)
    }
}

/// |(1+λ)z³ + (λ−1)x³| / ((|1+λ|+|λ−1|)(|x|³+|z|³)) for w = x/z.
pub fn trace_residual(lambda: Complex64, w: ExtComplex) -> f64 {
    let (x, z) = w.to_pair();
    let (x3, z3) = (x * x * x, z * z * z);
    let val = (1.0 + lambda) * z3 + (lambda - 1.0) * x3;
    let scale = ((1.0 + lambda).norm() + (lambda - 1.0).norm()) * (x3.norm() + z3.norm());
    val.norm() / scale
}

pub fn critical_cubic_on_y(lambda: Complex64) -> CriticalTraceOnY {
    let num = 1.0 + lambda;
    let den = 1.0 - lambda;
    let w = if den.norm_sqr() == 0.0 {
        [ExtComplex::Infinity; 3]
    } else if num.norm_sqr() == 0.0 {
        [ExtComplex::Finite(Complex64::new(0.0, 0.0)); 3]
    } else if num.norm() <= den.norm() {
        let r = (num / den).cbrt();
        [0, 1, 2].map(|j| ExtComplex::Finite(r * omega_pow(j)))
    } else {
        // solve for v = 1/w where it is better conditioned
        let r = (den / num).cbrt();
        [0, 1, 2].map(|j| ExtComplex::Finite((r * omega_pow(j)).inv()))
    };
    CriticalTraceOnY { lambda, w }
}

/// λ = (w³−1)/(w³+1), the parameter whose critical cubic passes through [w:0:1].
pub fn lambda_for_critical_w(w: ExtComplex) -> Result<Complex64> {
    let Some(w) = w.finite() else {
        return Ok(ONE);
    };
    let w3 = w * w * w;
    let scale = 1.0 + w3.norm();
    if (w3 + 1.0).norm() <= CRITICAL_TOL * scale {
        return Err(Error::PoleInput);
    }
    if (w3 - 1.0).norm() <= CRITICAL_TOL * scale {
        return Err(Error::DegenerateLambda);
    }
    Ok((w3 - 1.0) / (w3 + 1.0))
}

/// A disc in parameter space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamDisc {
    pub center: Complex64,
    pub radius: f64,
}

impl ParamDisc {
    pub fn contains(&self, l: Complex64) -> bool {
        (l - self.center).norm() <= self.radius + 1e-12 * (1.0 + self.center.norm() + self.radius)
    }
}

/// Samples W = ∪_{λ∈V} C′_λ ∩ Y on a uniform polar grid of about `n_samples` parameters.
///
/// λ = 0 is skipped when the disc contains it.
pub fn critical_sweep_on_y(disc: ParamDisc, n_samples: usize) -> Result<Vec<ExtComplex>> {
    if disc.radius <= 0.0 || !disc.radius.is_finite() {
        return Err(Error::Precondition("disc radius must be positive".into()));
    }
    let rings = ((n_samples.max(1) as f64).sqrt().ceil() as usize).max(1);
    let per_ring = (n_samples.max(1) / rings).max(1);
    let mut out = Vec::with_capacity(3 * (rings * per_ring + 1));
    let mut push = |l: Complex64| {
        if l.norm_sqr() != 0.0 {
            out.extend_from_slice(&critical_cubic_on_y(l).w);
        }
    };
    push(disc.center);
    for k in 1..=rings {
        let r = disc.radius * k as f64 / rings as f64;
        for m in 0..per_ring {
            let th = std::f64::consts::TAU * m as f64 / per_ring as f64;
            push(disc.center + Complex64::from_polar(r, th));
        }
    }
    Ok(out)
}

/// Which factor of the Jacobian vanishes at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalComponent {
    Cubic,
    /// The line through ρ₀ and [1:0:ω^j].
    Line(u8),
    None,
}

/// Relative value of the cubic factor −x³+z³+λ(4y³+x³+z³).
pub fn cubic_factor_residual(lambda: Complex64, p: &ProjPoint) -> f64 {
    let [x, y, z] = p.coords();
    let (x3, y3, z3) = (x * x * x, y * y * y, z * z * z);
    let val = -x3 + z3 + lambda * (4.0 * y3 + x3 + z3);
    let scale = x3.norm() + z3.norm() + lambda.norm() * (4.0 * y3.norm() + x3.norm() + z3.norm());
    val.norm() / scale
}

pub fn on_critical_set(lambda: Complex64, p: &ProjPoint) -> CriticalComponent {
    let [x, _, z] = p.coords();
    let scale = x.norm() + z.norm();
    if scale == 0.0 {
        // ρ₀ lies on every line of the pencil
        return CriticalComponent::Line(0);
    }
    let (j, d) = (0..3)
        .map(|j| (j, (z - omega_pow(j) * x).norm() / scale))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("three lines");
    if d < CRITICAL_TOL {
        return CriticalComponent::Line(j as u8);
    }
    if cubic_factor_residual(lambda, p) < CRITICAL_TOL {
        return CriticalComponent::Cubic;
    }
    CriticalComponent::None
}
