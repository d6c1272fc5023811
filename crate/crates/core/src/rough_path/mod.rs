//! Geometric rough paths over a time partition.
//!
//! A [`RoughPath`] stores one truncated signature per grid cell. Coarser
//! increments are always obtained by Chen concatenation of stored cells, so
//! the Chen relation holds exactly for anything built here.

mod group;
mod io;
mod sampling;
mod smooth;
mod variation;

pub use group::{GroupIncrement, LogSignature};
pub use io::{read_csv, write_csv};
pub use sampling::{
    brownian_lift, brownian_polyline, dyadic_grid, fbm_covariance, fbm_lift, fbm_lift_with, fbm_polyline,
    FbmSampler, BROWNIAN_P,
};
pub use smooth::SmoothPath;
pub use variation::p_variation;

use thiserror::Error;

/// Default number of chords per grid cell when lifting a curved smooth path.
pub const DEFAULT_LIFT_REFINEMENT: usize = 16;

#[derive(Debug, Error)]
pub enum RoughPathError {
    #[error("time grid must have at least two points")]
    EmptyGrid,
    #[error("time grid is not strictly increasing at index {index}")]
    NonMonotoneGrid { index: usize },
    #[error("time grid [{start}, {end}] exceeds the path horizon [0, {horizon}]")]
    GridOutOfRange { start: f64, end: f64, horizon: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },
    #[error("unsupported truncation degree {0}; only 2 and 3 are implemented")]
    UnsupportedDegree(usize),
    #[error("variation exponent p = {0} is not supported (need 1 <= p < 4)")]
    InvalidVariation(f64),
    #[error("Hurst parameter H = {0} is outside the rough-path regime H > 1/4")]
    HurstTooSmall(f64),
    #[error("Hurst parameter H = {hurst} with p = {p} violates H p > 1")]
    HurstVariation { hurst: f64, p: f64 },
    #[error("invalid Hurst parameter H = {0}; need 0 < H < 1")]
    InvalidHurst(f64),
    #[error("sub-grid factor {0} must be a power of two")]
    InvalidSubfactor(usize),
    #[error("grid node {time} is not a node of the dyadic sampling grid")]
    NotDyadic { time: f64 },
    #[error("covariance matrix is not numerically positive definite (size {size})")]
    Factorization { size: usize },
    #[error("increment count {increments} does not match grid with {cells} cells")]
    CellCount { increments: usize, cells: usize },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed rough path file: {0}")]
    Format(String),
}

/// Truncation degree used for variation exponent `p`: 2 below 3, 3 on `[3, 4)`.
pub fn degree_for_p(p: f64) -> Result<usize, RoughPathError> {
    if !(1.0..4.0).contains(&p) {
        return Err(RoughPathError::InvalidVariation(p));
    }
    Ok(if p < 3.0 { 2 } else { 3 })
}

pub(crate) fn check_grid(grid: &[f64], horizon: Option<f64>) -> Result<(), RoughPathError> {
    if grid.len() < 2 {
        return Err(RoughPathError::EmptyGrid);
    }
    if let Some(index) = grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(RoughPathError::NonMonotoneGrid { index: index + 1 });
    }
    if let Some(h) = horizon {
        let (start, end) = (grid[0], *grid.last().unwrap());
        if start < 0.0 || end > h * (1.0 + 1e-12) + 1e-15 {
            return Err(RoughPathError::GridOutOfRange {
                start,
                end,
                horizon: h,
            });
        }
    }
    Ok(())
}

/// Uniform grid with `n` cells on `[0, horizon]`.
pub fn uniform_grid(horizon: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| if i == n { horizon } else { horizon * i as f64 / n as f64 })
        .collect()
}

#[derive(Clone, Debug)]
pub struct RoughPath {
    times: Vec<f64>,
    increments: Vec<GroupIncrement>,
    p: f64,
}

impl RoughPath {
    pub fn new(times: Vec<f64>, increments: Vec<GroupIncrement>, p: f64) -> Result<Self, RoughPathError> {
        check_grid(&times, None)?;
        if increments.len() + 1 != times.len() {
            return Err(RoughPathError::CellCount {
                increments: increments.len(),
                cells: times.len() - 1,
            });
        }
        let (dim, degree) = (increments[0].dim(), increments[0].degree());
        for inc in &increments {
            if inc.dim() != dim {
                return Err(RoughPathError::DimensionMismatch {
                    expected: dim,
                    found: inc.dim(),
                });
            }
            if inc.degree() != degree {
                return Err(RoughPathError::DegreeMismatch {
                    left: degree,
                    right: inc.degree(),
                });
            }
        }
        if p < 1.0 {
            return Err(RoughPathError::InvalidVariation(p));
        }
        if p >= 2.0 && degree_for_p(p)? != degree {
            return Err(RoughPathError::DegreeMismatch {
                left: degree_for_p(p)?,
                right: degree,
            });
        }
        Ok(Self {
            times,
            increments,
            p,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn increments(&self) -> &[GroupIncrement] {
        &self.increments
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.increments[0].dim()
    }

    pub fn degree(&self) -> usize {
        self.increments[0].degree()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn n_cells(&self) -> usize {
        self.increments.len()
    }

    /// Index of the grid node equal to `t` up to a relative tolerance.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-10 * self.horizon().abs().max(1.0);
        let idx = self.times.partition_point(|&s| s < t - tol);
        (idx < self.times.len() && (self.times[idx] - t).abs() <= tol).then_some(idx)
    }

    /// Chen product of the cells between nodes `from` and `to` (`from <= to`).
    pub fn increment_between(&self, from: usize, to: usize) -> GroupIncrement {
        let mut acc = GroupIncrement::identity(self.dim(), self.degree()).expect("valid degree");
        for inc in &self.increments[from..to] {
            acc = acc.concat(inc).expect("homogeneous path");
        }
        acc
    }

    pub fn full_increment(&self) -> GroupIncrement {
        self.increment_between(0, self.n_cells())
    }

    /// First-level path values at the grid nodes, starting from the origin.
    pub fn node_values(&self) -> Vec<Vec<f64>> {
        let mut current = vec![0.0; self.dim()];
        let mut out = vec![current.clone()];
        for inc in &self.increments {
            for (c, d) in current.iter_mut().zip(inc.level1()) {
                *c += d;
            }
            out.push(current.clone());
        }
        out
    }

    /// Merge consecutive cells so that only the nodes in `coarse` remain.
    pub fn coarsen(&self, coarse: &[f64]) -> Result<Self, RoughPathError> {
        check_grid(coarse, None)?;
        let mut idx = Vec::with_capacity(coarse.len());
        for &t in coarse {
            idx.push(self.node_index(t).ok_or(RoughPathError::NotDyadic { time: t })?);
        }
        let increments = idx
            .windows(2)
            .map(|w| self.increment_between(w[0], w[1]))
            .collect();
        Self::new(coarse.to_vec(), increments, self.p)
    }
}

/// Canonical lift of a smooth path onto `grid`.
///
/// Piecewise linear paths are split at their kinks and get the exact
/// signature; curved paths are split into `refinement` chords per cell and the
/// chord signatures are concatenated.
pub fn lift_smooth_path_with(
    path: &SmoothPath,
    grid: &[f64],
    degree: usize,
    refinement: usize,
) -> Result<RoughPath, RoughPathError> {
    check_grid(grid, Some(path.horizon()))?;
    degree_for_p(degree as f64)?;
    let exact = path.is_piecewise_linear();
    let refinement = refinement.max(1);
    let mut increments = Vec::with_capacity(grid.len() - 1);
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut nodes: Vec<f64> = if exact {
            vec![a, b]
        } else {
            (0..=refinement)
                .map(|k| a + (b - a) * k as f64 / refinement as f64)
                .collect()
        };
        nodes.extend(path.breakpoints().iter().copied().filter(|&t| t > a && t < b));
        nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());
        nodes.dedup_by(|x, y| (*x - *y).abs() <= 1e-15);
        let mut acc = GroupIncrement::identity(path.dim(), degree)?;
        let mut prev = path.value(nodes[0]);
        for &t in &nodes[1..] {
            let next = path.value(t);
            let delta: Vec<f64> = next.iter().zip(&prev).map(|(x, y)| x - y).collect();
            acc = acc.concat(&GroupIncrement::segment(&delta, degree)?)?;
            prev = next;
        }
        increments.push(acc);
    }
    RoughPath::new(grid.to_vec(), increments, 1.0)
}

pub fn lift_smooth_path(
    path: &SmoothPath,
    grid: &[f64],
    degree: usize,
) -> Result<RoughPath, RoughPathError> {
    lift_smooth_path_with(path, grid, degree, DEFAULT_LIFT_REFINEMENT)
}
