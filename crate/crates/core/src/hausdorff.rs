//! Chordal Hausdorff distance between point clouds.
//!
//! A unit lift u maps to the Hermitian matrix uu*/√2, read as a vector of R⁹.
//! Euclidean distance between two such vectors equals the chordal distance of
//! the points, so a uniform grid on three of the nine coordinates prunes the
//! nearest-neighbour search without changing its answer.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::measure::PointCloud;
use crate::proj::{chordal_distance, ProjPoint};

/// Clouds at least this large use the binned route.
pub const BINNING_THRESHOLD: usize = 10_000;

pub fn embed(p: &ProjPoint) -> [f64; 9] {
    let u = p.unit_lift();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let m01 = u[0] * u[1].conj();
    let m02 = u[0] * u[2].conj();
    let m12 = u[1] * u[2].conj();
    [
        u[0].norm_sqr() * s,
        u[1].norm_sqr() * s,
        u[2].norm_sqr() * s,
        m01.re,
        m01.im,
        m02.re,
        m02.im,
        m12.re,
        m12.im,
    ]
}

fn directed_all_pairs(a: &[ProjPoint], b: &[ProjPoint]) -> f64 {
    a.par_iter()
        .map(|p| b.iter().map(|q| chordal_distance(p, q)).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max)
}

pub fn hausdorff_all_pairs(a: &PointCloud, b: &PointCloud) -> f64 {
    directed_all_pairs(a.points(), b.points()).max(directed_all_pairs(b.points(), a.points()))
}

type Cell = (i64, i64, i64);

struct Grid<'a> {
    points: &'a [ProjPoint],
    axes: [usize; 3],
    lo: [f64; 3],
    h: f64,
    cells: HashMap<Cell, Vec<u32>>,
    extent: i64,
}

impl<'a> Grid<'a> {
    fn build(points: &'a [ProjPoint]) -> Self {
        let emb: Vec<[f64; 9]> = points.iter().map(embed).collect();
        let n = emb.len() as f64;
        let mut var = [0.0; 9];
        for k in 0..9 {
            let m = emb.iter().map(|e| e[k]).sum::<f64>() / n;
            var[k] = emb.iter().map(|e| (e[k] - m).powi(2)).sum::<f64>() / n;
        }
        let mut order: Vec<usize> = (0..9).collect();
        order.sort_by(|&i, &j| var[j].total_cmp(&var[i]).then(i.cmp(&j)));
        let axes = [order[0], order[1], order[2]];
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for e in &emb {
            for (k, &ax) in axes.iter().enumerate() {
                lo[k] = lo[k].min(e[ax]);
                hi[k] = hi[k].max(e[ax]);
            }
        }
        let span = (0..3).map(|k| hi[k] - lo[k]).fold(0.0, f64::max).max(1e-9);
        let per_axis = (n / 2.0).cbrt().ceil().max(1.0);
        let h = span / per_axis;
        let mut cells: HashMap<Cell, Vec<u32>> = HashMap::new();
        let mut extent = 0;
        for (i, e) in emb.iter().enumerate() {
            let c = cell_of(e, &axes, &lo, h);
            extent = extent.max(c.0.abs()).max(c.1.abs()).max(c.2.abs());
            cells.entry(c).or_default().push(i as u32);
        }
        Grid { points, axes, lo, h, cells, extent }
    }

    fn nearest(&self, p: &ProjPoint) -> f64 {
        let e = embed(p);
        let c = cell_of(&e, &self.axes, &self.lo, self.h);
        let reach = self.extent + c.0.abs().max(c.1.abs()).max(c.2.abs()) + 1;
        let mut best = f64::INFINITY;
        for k in 0..=reach {
            for dx in -k..=k {
                for dy in -k..=k {
                    for dz in -k..=k {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != k {
                            continue;
                        }
                        if let Some(ids) = self.cells.get(&(c.0 + dx, c.1 + dy, c.2 + dz)) {
                            for &i in ids {
                                best = best.min(chordal_distance(p, &self.points[i as usize]));
                            }
                        }
                    }
                }
            }
            // anything outside ring k is at least k·h away in the projection
            if best <= k as f64 * self.h - 1e-12 {
                break;
            }
        }
        best
    }
}

fn cell_of(e: &[f64; 9], axes: &[usize; 3], lo: &[f64; 3], h: f64) -> Cell {
    let f = |k: usize| ((e[axes[k]] - lo[k]) / h).floor() as i64;
    (f(0), f(1), f(2))
}

fn directed_binned(a: &[ProjPoint], b: &[ProjPoint]) -> f64 {
    let grid = Grid::build(b);
    a.par_iter().map(|p| grid.nearest(p)).reduce(|| 0.0, f64::max)
}

pub fn hausdorff_binned(a: &PointCloud, b: &PointCloud) -> f64 {
    directed_binned(a.points(), b.points()).max(directed_binned(b.points(), a.points()))
}

/// sup over a ∈ A of the distance from a to B.
pub fn directed_hausdorff(a: &PointCloud, b: &PointCloud) -> f64 {
    if a.len().max(b.len()) < BINNING_THRESHOLD {
        directed_all_pairs(a.points(), b.points())
    } else {
        directed_binned(a.points(), b.points())
    }
}

pub fn hausdorff_distance(a: &PointCloud, b: &PointCloud) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Smallest chordal distance from `p` to the cloud.
pub fn distance_to_cloud(p: &ProjPoint, cloud: &PointCloud) -> f64 {
    cloud.points().iter().map(|q| chordal_distance(p, q)).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Provenance;
    use crate::proj::normalize;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> PointCloud {
        let pts = (0..n)
            .map(|_| {
                let mut g = || Complex64::new(rng.gen_range(-spread..spread), rng.gen_range(-spread..spread));
                normalize([g() + 1.0, g(), g() - 1.0]).unwrap()
            })
            .collect();
        PointCloud::new(pts, Provenance::BackwardOrbit, 0, 0).unwrap()
    }

    #[test]
    fn embedding_is_an_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = cloud(&mut rng, 200, 1.5);
        for w in c.points().windows(2) {
            let (a, b) = (embed(&w[0]), embed(&w[1]));
            let d: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            assert!((d - chordal_distance(&w[0], &w[1])).abs() < 1e-12);
        }
    }

    #[test]
    fn trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = cloud(&mut rng, 300, 1.0);
        assert_eq!(hausdorff_distance(&a, &a), 0.0);
        let sub = PointCloud::new(a.points()[..100].to_vec(), Provenance::BackwardOrbit, 0, 0).unwrap();
        assert_eq!(directed_hausdorff(&sub, &a), 0.0);
        assert!(directed_hausdorff(&a, &sub) > 0.0);
    }

    #[test]
    fn binned_matches_all_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for spread in [0.05, 0.5, 3.0] {
            let a = cloud(&mut rng, 2000, spread);
            let b = cloud(&mut rng, 2000, spread * 1.3);
            let exact = hausdorff_all_pairs(&a, &b);
            let binned = hausdorff_binned(&a, &b);
            assert!((exact - binned).abs() < 1e-12, "{exact} {binned}");
        }
    }
}
