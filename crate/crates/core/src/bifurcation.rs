//! Lyapunov sweeps over the parameter plane and their discrete Laplacian.
//!
//! Every node of a sweep is fed the same random numbers. With the
//! critical-orbit estimator the base samples are literally shared, so the
//! five-point stencil cancels most of the Monte Carlo noise, and its standard
//! error comes from the same stencil applied batch by batch.

use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::DesbovesMap;
use crate::measure::{
    base_samples, batch_stderr, lyapunov_L, lyapunov_critical, sample_equilibrium_stream, LyapunovEstimate,
    LyapunovMethod, BATCHES,
};
use crate::proj::ExtComplex;

/// Nodes with |λ| below this are masked out.
pub const R_MIN: f64 = 0.05;

/// The four verification clauses of a Misiurewicz candidate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Clause {
    /// The critical point lies on the cubic factor.
    OnCubic,
    /// The critical orbit lands on the target.
    Landing,
    /// The target is a repelling fixed point.
    Repelling,
    /// The landing is not persistent in λ.
    Transversal,
}

impl Clause {
    pub const ALL: [Clause; 4] = [Clause::OnCubic, Clause::Landing, Clause::Repelling, Clause::Transversal];
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Clause::OnCubic => "i",
            Clause::Landing => "ii",
            Clause::Repelling => "iii",
            Clause::Transversal => "iv",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let r = Rect { re_min, re_max, im_min, im_max };
        if !(re_min <= re_max && im_min <= im_max) || ![re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite()) {
            return Err(Error::Precondition("rectangle corners out of order".into()));
        }
        Ok(r)
    }

    /// Node counts along Re and Im for spacing `step`.
    pub fn shape(&self, step: f64) -> Result<(usize, usize)> {
        if !(step > 0.0) {
            return Err(Error::Precondition("step must be positive".into()));
        }
        let count = |span: f64| (span / step + 1e-9).floor() as usize + 1;
        Ok((count(self.re_max - self.re_min), count(self.im_max - self.im_min)))
    }

    /// Image under λ ↦ −λ.
    pub fn negated(&self) -> Rect {
        Rect { re_min: -self.re_max, re_max: -self.re_min, im_min: -self.im_max, im_max: -self.im_min }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub rect: Rect,
    pub step: f64,
    pub samples: usize,
    pub depth: usize,
    pub seed: u64,
    pub method: LyapunovMethod,
}

impl SweepConfig {
    pub fn node(&self, col: usize, row: usize) -> Complex64 {
        Complex64::new(self.rect.re_min + col as f64 * self.step, self.rect.im_min + row as f64 * self.step)
    }

    pub fn validate(&self) -> Result<(usize, usize)> {
        if self.samples < BATCHES {
            return Err(Error::Precondition("need at least one sample per batch".into()));
        }
        self.rect.shape(self.step)
    }
}

/// Shared random input of a sweep: base samples for the critical-orbit route.
#[derive(Clone, Debug)]
pub struct SweepInput {
    base: Vec<ExtComplex>,
}

pub fn sweep_input(config: &SweepConfig) -> Result<SweepInput> {
    let base = match config.method {
        LyapunovMethod::CriticalOrbits => base_samples(config.samples, config.depth, config.seed, 0)?,
        LyapunovMethod::CloudAverage => Vec::new(),
    };
    Ok(SweepInput { base })
}

/// Estimates at one node; None inside the excluded disc around 0.
pub fn node_estimate(config: &SweepConfig, input: &SweepInput, lambda: Complex64) -> Result<Option<LyapunovEstimate>> {
    if lambda.norm() < R_MIN {
        return Ok(None);
    }
    let map = DesbovesMap::new(lambda)?;
    let est = match config.method {
        LyapunovMethod::CriticalOrbits => lyapunov_critical(&map, &input.base)?,
        LyapunovMethod::CloudAverage => {
            // every node draws the same stream: common random numbers
            let cloud = sample_equilibrium_stream(&map, config.samples, config.depth, config.seed, 0)?;
            lyapunov_L(&map, &cloud)
        }
    };
    Ok(Some(est))
}

/// All nodes of one row (fixed Im λ).
pub fn sweep_row(config: &SweepConfig, input: &SweepInput, row: usize) -> Result<Vec<Option<LyapunovEstimate>>> {
    let (nx, _) = config.validate()?;
    (0..nx).into_par_iter().map(|col| node_estimate(config, input, config.node(col, row))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifurcationGrid {
    pub config: SweepConfig,
    pub nx: usize,
    pub ny: usize,
    /// Row-major from Im λ = im_min upward.
    pub nodes: Vec<Option<LyapunovEstimate>>,
}

impl BifurcationGrid {
    pub fn from_rows(config: SweepConfig, rows: Vec<Vec<Option<LyapunovEstimate>>>) -> Result<Self> {
        let (nx, ny) = config.validate()?;
        if rows.len() != ny || rows.iter().any(|r| r.len() != nx) {
            return Err(Error::Precondition("row data does not match the grid shape".into()));
        }
        Ok(BifurcationGrid { config, nx, ny, nodes: rows.into_iter().flatten().collect() })
    }

    /// A grid whose "estimates" are an exact field, for checking the stencil.
    pub fn from_field(rect: Rect, step: f64, field: impl Fn(Complex64) -> f64) -> Result<Self> {
        let config = SweepConfig { rect, step, samples: BATCHES, depth: 0, seed: 0, method: LyapunovMethod::default() };
        let (nx, ny) = rect.shape(step)?;
        let mut nodes = Vec::with_capacity(nx * ny);
        for row in 0..ny {
            for col in 0..nx {
                let lambda = config.node(col, row);
                let v = field(lambda);
                nodes.push(Some(LyapunovEstimate {
                    lambda,
                    value: v,
                    stderr: 0.0,
                    samples: BATCHES,
                    discarded: 0,
                    flagged: false,
                    batch_means: vec![v; BATCHES],
                }));
            }
        }
        Ok(BifurcationGrid { config, nx, ny, nodes })
    }

    pub fn get(&self, col: usize, row: usize) -> Option<&LyapunovEstimate> {
        self.nodes[row * self.nx + col].as_ref()
    }

    pub fn estimates(&self) -> impl Iterator<Item = &LyapunovEstimate> {
        self.nodes.iter().flatten()
    }
}

/// Runs a full sweep with the default critical-orbit estimator.
pub fn lyapunov_sweep(rect: Rect, step: f64, samples: usize, depth: usize, seed: u64) -> Result<BifurcationGrid> {
    let config = SweepConfig { rect, step, samples, depth, seed, method: LyapunovMethod::default() };
    run_sweep(&config, Vec::new(), |_, _| Ok(()))
}

/// Sweeps rows not yet in `done`, calling `on_row` after each completed row.
pub fn run_sweep(
    config: &SweepConfig,
    mut done: Vec<Vec<Option<LyapunovEstimate>>>,
    mut on_row: impl FnMut(usize, &[Vec<Option<LyapunovEstimate>>]) -> Result<()>,
) -> Result<BifurcationGrid> {
    let (_, ny) = config.validate()?;
    let input = sweep_input(config)?;
    while done.len() < ny {
        let row = done.len();
        done.push(sweep_row(config, &input, row)?);
        on_row(row, &done)?;
    }
    BifurcationGrid::from_rows(config.clone(), done)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplacianCell {
    pub lambda: Complex64,
    pub value: f64,
    pub stderr: f64,
    /// Δ_h L > 3·stderr.
    pub positive: bool,
}

/// Five-point stencil at interior nodes whose five estimates all exist.
pub fn discrete_laplacian(grid: &BifurcationGrid) -> Vec<Option<LaplacianCell>> {
    let h = grid.config.step;
    let h2 = h * h;
    let mut out = vec![None; grid.nx * grid.ny];
    for row in 1..grid.ny.saturating_sub(1) {
        for col in 1..grid.nx.saturating_sub(1) {
            let stencil = [
                grid.get(col, row),
                grid.get(col + 1, row),
                grid.get(col - 1, row),
                grid.get(col, row + 1),
                grid.get(col, row - 1),
            ];
            let [Some(c), Some(e), Some(w), Some(n), Some(s)] = stencil else {
                continue;
            };
            let value = (e.value + w.value + n.value + s.value - 4.0 * c.value) / h2;
            let nb = c.batch_means.len();
            let paired = [e, w, n, s].iter().all(|x| x.batch_means.len() == nb) && nb >= 2;
            let stderr = if paired {
                let batch: Vec<f64> = (0..nb)
                    .map(|b| {
                        (e.batch_means[b] + w.batch_means[b] + n.batch_means[b] + s.batch_means[b]
                            - 4.0 * c.batch_means[b])
                            / h2
                    })
                    .collect();
                batch_stderr(&batch)
            } else {
                (e.stderr.powi(2) + w.stderr.powi(2) + n.stderr.powi(2) + s.stderr.powi(2) + 16.0 * c.stderr.powi(2))
                    .sqrt()
                    / h2
            };
            out[row * grid.nx + col] = Some(LaplacianCell { lambda: c.lambda, value, stderr, positive: value > 3.0 * stderr });
        }
    }
    out
}

/// Grid CSV: one line per node, `nan` where a quantity is undefined.
pub fn write_grid_csv<W: Write>(grid: &BifurcationGrid, lap: &[Option<LaplacianCell>], mut out: W) -> io::Result<()> {
    writeln!(out, "re,im,L,stderr,lap,lap_stderr,flag")?;
    for row in 0..grid.ny {
        for col in 0..grid.nx {
            let l = grid.config.node(col, row);
            let (v, se) = grid.get(col, row).map_or((f64::NAN, f64::NAN), |e| (e.value, e.stderr));
            let cell = lap[row * grid.nx + col];
            let (dv, dse, flag) = cell.map_or((f64::NAN, f64::NAN, 0), |c| (c.value, c.stderr, c.positive as u8));
            writeln!(out, "{},{},{},{},{},{},{}", l.re, l.im, v, se, dv, dse, flag)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect() -> Rect {
        Rect::new(1.5, 2.5, -0.5, 0.5).unwrap()
    }

    #[test]
    fn shape_of_the_reference_grid() {
        assert_eq!(rect().shape(0.125).unwrap(), (9, 9));
        assert!(rect().shape(0.0).is_err());
        assert!(Rect::new(1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn harmonic_field_has_zero_laplacian() {
        let g = BifurcationGrid::from_field(rect(), 0.125, |l| (l * l).re).unwrap();
        for cell in discrete_laplacian(&g).into_iter().flatten() {
            assert!(cell.value.abs() < 1e-11, "{}", cell.value);
            assert!(!cell.positive);
        }
    }

    #[test]
    fn modulus_squared_has_laplacian_four() {
        let g = BifurcationGrid::from_field(rect(), 0.125, |l| l.norm_sqr()).unwrap();
        let cells: Vec<_> = discrete_laplacian(&g).into_iter().flatten().collect();
        assert_eq!(cells.len(), 49);
        for c in cells {
            assert!((c.value - 4.0).abs() < 1e-11);
        }
    }

    #[test]
    fn stencil_error_is_second_order() {
        // the stencil applied to Re(λ⁴) gives exactly 4h²
        for h in [0.1, 0.05, 0.025] {
            let r = Rect::new(1.0, 1.0 + 4.0 * h, -2.0 * h, 2.0 * h).unwrap();
            let g = BifurcationGrid::from_field(r, h, |l| (l * l * l * l).re).unwrap();
            for c in discrete_laplacian(&g).into_iter().flatten() {
                assert!((c.value - 4.0 * h * h).abs() < 1e-9, "{h} {}", c.value);
            }
        }
    }

    #[test]
    fn origin_is_masked() {
        let cfg = SweepConfig {
            rect: Rect::new(-0.1, 0.1, -0.1, 0.1).unwrap(),
            step: 0.1,
            samples: 64,
            depth: 12,
            seed: 1,
            method: LyapunovMethod::CriticalOrbits,
        };
        let g = run_sweep(&cfg, Vec::new(), |_, _| Ok(())).unwrap();
        assert!(g.get(1, 1).is_none());
        assert!(g.get(0, 0).is_some());
        assert!(discrete_laplacian(&g).iter().all(|c| c.is_none()));
    }

    #[test]
    fn resumed_sweep_matches_uninterrupted() {
        let cfg = SweepConfig { rect: rect(), step: 0.25, samples: 256, depth: 15, seed: 3, method: LyapunovMethod::CriticalOrbits };
        let full = run_sweep(&cfg, Vec::new(), |_, _| Ok(())).unwrap();
        let mut saved = Vec::new();
        let stopped = run_sweep(&cfg, Vec::new(), |row, rows| {
            saved = rows.to_vec();
            if row == 1 {
                Err(Error::Precondition("interrupted".into()))
            } else {
                Ok(())
            }
        });
        assert!(stopped.is_err());
        assert_eq!(saved.len(), 2);
        let resumed = run_sweep(&cfg, saved, |_, _| Ok(())).unwrap();
        assert_eq!(full, resumed);
    }
}
