//! Escape-time classification, slice rasters and Julia clouds.
//!
//! The Fatou set is the basin of ρ₀ = [0:1:0], so a point is classified by how
//! fast its pencil height |y| / max(|x|, |z|) blows up.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::DesbovesMap;
use crate::measure::{sample_equilibrium, PointCloud, Provenance};
use crate::preimage::{continue_walk, recorded_walk, RecordedWalk};
use crate::proj::{normalize, ProjPoint};
use crate::rng::walk_rng;

pub const DEFAULT_ESCAPE_RADIUS: f64 = 1e3;
pub const DEFAULT_MAX_ITER: u32 = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Escape {
    Escaped(u32),
    Bounded,
}

impl Escape {
    /// PGM gray level: 255 for bounded, otherwise the escape iterate clamped to 254.
    pub fn gray(self) -> u8 {
        match self {
            Escape::Bounded => 255,
            Escape::Escaped(n) => n.min(254) as u8,
        }
    }
}

/// |y| / max(|x|, |z|), infinite at ρ₀.
pub fn pencil_ratio(v: &[Complex64; 3]) -> f64 {
    let base = v[0].norm().max(v[2].norm());
    if base == 0.0 {
        f64::INFINITY
    } else {
        v[1].norm() / base
    }
}

pub fn classify_point(map: &DesbovesMap, p: &ProjPoint, escape_radius: f64, max_iter: u32) -> Escape {
    let mut v = p.coords();
    for n in 0..=max_iter {
        if !(pencil_ratio(&v) <= escape_radius) {
            return Escape::Escaped(n);
        }
        if n == max_iter {
            break;
        }
        let img = map.eval_lift(&v);
        let m = img.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if m == 0.0 || !m.is_finite() {
            return Escape::Escaped(n + 1);
        }
        v = img.map(|c| c / m);
    }
    Escape::Bounded
}

/// Which complex line a slice parametrizes, and how.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SliceChart {
    /// The invariant line X = {x = 0}, points [0:t:1].
    X,
    /// The invariant line Y = {y = 0}, points [t:0:1].
    Y,
    /// The invariant line Z = {z = 0}, points [1:t:0].
    Z,
    /// The pencil line through [w:0:1] and ρ₀, points [w:t:1].
    Fiber { w: Complex64 },
}

impl SliceChart {
    pub fn point(self, t: Complex64) -> ProjPoint {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let raw = match self {
            SliceChart::X => [zero, t, one],
            SliceChart::Y => [t, zero, one],
            SliceChart::Z => [one, t, zero],
            SliceChart::Fiber { w } => [w, t, one],
        };
        normalize(raw).expect("a coordinate equals one")
    }

    pub fn name(self) -> String {
        match self {
            SliceChart::X => "X".into(),
            SliceChart::Y => "Y".into(),
            SliceChart::Z => "Z".into(),
            SliceChart::Fiber { w } => format!("fiber({},{})", w.re, w.im),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub chart: SliceChart,
    pub center: Complex64,
    pub half_width: f64,
    pub half_height: f64,
    pub resolution: usize,
}

impl SliceSpec {
    pub fn square(chart: SliceChart, center: Complex64, half_width: f64, resolution: usize) -> Self {
        SliceSpec { chart, center, half_width, half_height: half_width, resolution }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::Precondition("resolution must be at least 2".into()));
        }
        if !(self.half_width > 0.0 && self.half_height > 0.0) {
            return Err(Error::Precondition("half-widths must be positive".into()));
        }
        Ok(())
    }

    /// Slice coordinate at the center of pixel (col, row); row 0 is the top.
    pub fn pixel_coord(&self, col: usize, row: usize) -> Complex64 {
        let n = self.resolution as f64;
        let re = self.center.re - self.half_width + (col as f64 + 0.5) * 2.0 * self.half_width / n;
        let im = self.center.im + self.half_height - (row as f64 + 0.5) * 2.0 * self.half_height / n;
        Complex64::new(re, im)
    }

    pub fn pixel_point(&self, col: usize, row: usize) -> ProjPoint {
        self.chart.point(self.pixel_coord(col, row))
    }

    /// Length of a pixel diagonal in the slice coordinate.
    pub fn pixel_diagonal(&self) -> f64 {
        let n = self.resolution as f64;
        (2.0 * self.half_width / n).hypot(2.0 * self.half_height / n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Raster {
    pub slice: SliceSpec,
    pub lambda: Complex64,
    pub escape_radius: f64,
    pub max_iter: u32,
    /// Row-major, row 0 at the top.
    pub pixels: Vec<Escape>,
}

pub fn render_slice(map: &DesbovesMap, slice: &SliceSpec, escape_radius: f64, max_iter: u32) -> Result<Raster> {
    slice.validate()?;
    map.require_regular()?;
    if !(escape_radius > 1.0) {
        return Err(Error::Precondition("escape radius must exceed 1".into()));
    }
    let n = slice.resolution;
    let mut pixels = vec![Escape::Bounded; n * n];
    pixels.par_chunks_mut(n).enumerate().for_each(|(row, line)| {
        for (col, px) in line.iter_mut().enumerate() {
            *px = classify_point(map, &slice.pixel_point(col, row), escape_radius, max_iter);
        }
    });
    Ok(Raster { slice: *slice, lambda: map.lambda(), escape_radius, max_iter, pixels })
}

impl Raster {
    pub fn get(&self, col: usize, row: usize) -> Escape {
        self.pixels[row * self.slice.resolution + col]
    }

    pub fn bounded_count(&self) -> usize {
        self.pixels.iter().filter(|p| **p == Escape::Bounded).count()
    }

    /// Bounded pixels with an escaped 4-neighbour.
    pub fn boundary_pixels(&self) -> Vec<(usize, usize)> {
        let n = self.slice.resolution;
        let mut out = Vec::new();
        for row in 0..n {
            for col in 0..n {
                if self.get(col, row) != Escape::Bounded {
                    continue;
                }
                let nb = [(col.wrapping_sub(1), row), (col + 1, row), (col, row.wrapping_sub(1)), (col, row + 1)];
                if nb.iter().any(|&(c, r)| c < n && r < n && self.get(c, r) != Escape::Bounded) {
                    out.push((col, row));
                }
            }
        }
        out
    }

    /// Boundary pixel centers as a cloud, or None when the raster has no boundary.
    pub fn boundary_cloud(&self) -> Option<PointCloud> {
        let pts: Vec<ProjPoint> = self.boundary_pixels().into_iter().map(|(c, r)| self.slice.pixel_point(c, r)).collect();
        PointCloud::new(pts, Provenance::RasterBoundary, 0, 0).ok()
    }

    /// Binary PGM (P5), one byte per pixel.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.slice.resolution;
        write!(out, "P5\n{n} {n}\n255\n")?;
        let bytes: Vec<u8> = self.pixels.iter().map(|p| p.gray()).collect();
        out.write_all(&bytes)
    }

    /// key=value metadata describing how the raster was produced.
    pub fn write_sidecar<W: Write>(&self, mut out: W, seed: u64) -> io::Result<()> {
        let s = &self.slice;
        writeln!(out, "chart={}", s.chart.name())?;
        writeln!(out, "center={},{}", s.center.re, s.center.im)?;
        writeln!(out, "half_width={}", s.half_width)?;
        writeln!(out, "half_height={}", s.half_height)?;
        writeln!(out, "resolution={}", s.resolution)?;
        writeln!(out, "lambda={},{}", self.lambda.re, self.lambda.im)?;
        writeln!(out, "escape_radius={}", self.escape_radius)?;
        writeln!(out, "max_iter={}", self.max_iter)?;
        writeln!(out, "seed={seed}")?;
        writeln!(out, "encoding=bounded:255,escaped:min(n,254)")
    }
}

/// Pixels whose escape outcome (including the count) differs between two rasters.
pub fn flipped_pixels(a: &Raster, b: &Raster) -> usize {
    a.pixels.iter().zip(&b.pixels).filter(|(x, y)| x != y).count()
}

/// Pixels that are Bounded in one raster and Escaped in the other.
pub fn flipped_categories(a: &Raster, b: &Raster) -> usize {
    a.pixels.iter().zip(&b.pixels).filter(|(x, y)| (**x == Escape::Bounded) != (**y == Escape::Bounded)).count()
}

/// Equilibrium samples, which are Julia samples since supp μ = J.
pub fn julia_cloud(map: &DesbovesMap, n_points: usize, depth: usize, seed: u64) -> Result<PointCloud> {
    sample_equilibrium(map, n_points, depth, seed)
}

/// Largest parameter increment per continuation substep for matched clouds.
pub const MATCH_SUBSTEP: f64 = 0.005;

/// Julia clouds for several parameters built from the same walks.
///
/// Walks are recorded at `lambda0` from r₀, then continued along the segment
/// to each other parameter in substeps of at most [`MATCH_SUBSTEP`], the fiber
/// root at every depth being the one nearest its predecessor. Base choices are
/// shared (the base dynamics does not depend on λ), and continuation is a
/// bijection on fiber roots, so each cloud is still a sample of its own μ.
pub fn matched_clouds(lambda0: Complex64, others: &[Complex64], n_points: usize, depth: usize, seed: u64) -> Result<(PointCloud, Vec<PointCloud>)> {
    let f0 = DesbovesMap::new(lambda0)?;
    let maps: Vec<Vec<DesbovesMap>> = others
        .iter()
        .map(|&l1| {
            let steps = ((l1 - lambda0).norm() / MATCH_SUBSTEP).ceil().max(1.0) as usize;
            (1..=steps)
                .map(|k| DesbovesMap::new(lambda0 + (l1 - lambda0) * (k as f64 / steps as f64)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let walks: Vec<(ProjPoint, Vec<ProjPoint>)> = (0..n_points as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = walk_rng(seed, 0, i);
            let w0 = recorded_walk(&f0, &ProjPoint::R0, depth, &mut rng)?;
            let ends = maps
                .iter()
                .map(|chain| {
                    let mut w: RecordedWalk = w0.clone();
                    for m in chain {
                        w = continue_walk(m, &w)?;
                    }
                    Ok(w.endpoint())
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((w0.endpoint(), ends))
        })
        .collect::<Result<_>>()?;
    let base = PointCloud::new(walks.iter().map(|w| w.0).collect(), Provenance::BackwardOrbit, seed, depth)?;
    let clouds = (0..others.len())
        .map(|k| PointCloud::new(walks.iter().map(|w| w.1[k]).collect(), Provenance::BackwardOrbit, seed, depth))
        .collect::<Result<_>>()?;
    Ok((base, clouds))
}
