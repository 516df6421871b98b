//! Numerical laboratory for the elementary Desboves maps
//!
//! f_λ[x:y:z] = [−x(x³+2z³) : y(z³−x³+λ(x³+y³+z³)) : z(2x³+z³)]
//!
//! on the complex projective plane, λ ∈ C*.

pub mod bifurcation;
pub mod critical;
pub mod error;
pub mod family;
pub mod hausdorff;
pub mod julia;
pub mod measure;
pub mod misiurewicz;
pub mod preimage;
pub mod proj;
pub mod quartic;
pub mod rng;
pub mod selftest;

pub use error::{Error, Result};
pub use family::DesbovesMap;
pub use proj::{Chart, ExtComplex, ProjPoint};
