//! Random drivers: enhanced Brownian motion and fractional Brownian motion.
//!
//! Both are sampled on a fine grid, interpolated linearly and lifted by
//! concatenating exact segment signatures, so the second level of each cell
//! is the Stratonovich midpoint sum over the fine grid.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{check_grid, degree_for_p, uniform_grid, GroupIncrement, RoughPath, RoughPathError, SmoothPath};
use crate::rng::substream;

/// Variation exponent attached to Brownian lifts (any value in (2, 3) works).
pub const BROWNIAN_P: f64 = 2.5;

pub fn dyadic_grid(horizon: f64, level: u32) -> Vec<f64> {
    uniform_grid(horizon, 1usize << level)
}

/// Brownian values on the grid refined `subfactor` times per cell.
///
/// Each cell uses its own substream and fills its sub-grid by midpoint
/// (Lévy) bridge refinement, so doubling `subfactor` keeps every existing
/// sub-grid value and only adds new midpoints.
fn brownian_nodes(
    seed: u64,
    grid: &[f64],
    d: usize,
    subfactor: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), RoughPathError> {
    check_grid(grid, None)?;
    if subfactor == 0 || !subfactor.is_power_of_two() {
        return Err(RoughPathError::InvalidSubfactor(subfactor));
    }
    let levels = subfactor.trailing_zeros();
    let mut times = vec![grid[0]];
    let mut values = vec![vec![0.0; d]];
    for (cell, w) in grid.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let h = b - a;
        let mut rng = substream(seed, cell as u64);
        // local[k][c]: value at sub-node k relative to the cell start
        let mut local = vec![vec![0.0; d]; subfactor + 1];
        for c in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            local[subfactor][c] = z * h.sqrt();
        }
        for level in 1..=levels {
            let stride = subfactor >> level;
            let half_len = h * stride as f64 / subfactor as f64;
            let sd = (0.5 * half_len).sqrt();
            let mut k = stride;
            while k < subfactor {
                for c in 0..d {
                    let z: f64 = rng.sample(StandardNormal);
                    local[k][c] = 0.5 * (local[k - stride][c] + local[k + stride][c]) + sd * z;
                }
                k += 2 * stride;
            }
        }
        let base = values.last().unwrap().clone();
        for (k, v) in local.iter().enumerate().skip(1) {
            times.push(if k == subfactor {
                b
            } else {
                a + h * k as f64 / subfactor as f64
            });
            values.push(v.iter().zip(&base).map(|(x, y)| x + y).collect());
        }
    }
    Ok((times, values))
}

/// Piecewise linear interpolation of a Brownian sample on the refined grid.
pub fn brownian_polyline(
    seed: u64,
    grid: &[f64],
    d: usize,
    subfactor: usize,
) -> Result<SmoothPath, RoughPathError> {
    let (mut times, values) = brownian_nodes(seed, grid, d, subfactor)?;
    let shift = times[0];
    times.iter_mut().for_each(|t| *t -= shift);
    SmoothPath::polyline(times, values)
}

fn lift_nodes(
    fine_times: &[f64],
    values: &[Vec<f64>],
    grid: &[f64],
    degree: usize,
    p: f64,
) -> Result<RoughPath, RoughPathError> {
    let d = values[0].len();
    let tol = 1e-10 * grid.last().unwrap().abs().max(1.0);
    let mut increments = Vec::with_capacity(grid.len() - 1);
    let mut k = fine_times
        .iter()
        .position(|&t| (t - grid[0]).abs() <= tol)
        .ok_or(RoughPathError::NotDyadic { time: grid[0] })?;
    for &end in &grid[1..] {
        let mut acc = GroupIncrement::identity(d, degree)?;
        while fine_times[k] < end - tol {
            if k + 1 >= fine_times.len() {
                return Err(RoughPathError::NotDyadic { time: end });
            }
            let delta: Vec<f64> = values[k + 1].iter().zip(&values[k]).map(|(x, y)| x - y).collect();
            acc = acc.concat(&GroupIncrement::segment(&delta, degree)?)?;
            k += 1;
        }
        if (fine_times[k] - end).abs() > tol {
            return Err(RoughPathError::NotDyadic { time: end });
        }
        increments.push(acc);
    }
    RoughPath::new(grid.to_vec(), increments, p)
}

/// Enhanced Brownian motion on `grid`: level 1 holds the Brownian increments,
/// the area is the midpoint sum over `subfactor` sub-steps per cell.
pub fn brownian_lift(
    seed: u64,
    grid: &[f64],
    d: usize,
    subfactor: usize,
) -> Result<RoughPath, RoughPathError> {
    let (times, values) = brownian_nodes(seed, grid, d, subfactor)?;
    lift_nodes(&times, &values, grid, 2, BROWNIAN_P)
}

/// Exact-in-law fractional Brownian motion on a fixed set of times, by
/// Cholesky factorization of `R(s,t) = (s^{2H} + t^{2H} - |t-s|^{2H}) / 2`.
#[derive(Clone, Debug)]
pub struct FbmSampler {
    hurst: f64,
    times: Vec<f64>,
    factor: DMatrix<f64>,
}

pub fn fbm_covariance(hurst: f64, s: f64, t: f64) -> f64 {
    let h2 = 2.0 * hurst;
    0.5 * (s.powf(h2) + t.powf(h2) - (t - s).abs().powf(h2))
}

impl FbmSampler {
    /// Sampler on the dyadic grid with `2^level` cells over `[0, horizon]`.
    pub fn dyadic(hurst: f64, horizon: f64, level: u32) -> Result<Self, RoughPathError> {
        Self::new(hurst, dyadic_grid(horizon, level))
    }

    /// `times` must start at 0, where the process is pinned.
    pub fn new(hurst: f64, times: Vec<f64>) -> Result<Self, RoughPathError> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(RoughPathError::InvalidHurst(hurst));
        }
        check_grid(&times, None)?;
        let pos = &times[1..];
        let n = pos.len();
        let cov = DMatrix::from_fn(n, n, |i, j| fbm_covariance(hurst, pos[i], pos[j]));
        let factor = cov
            .cholesky()
            .ok_or(RoughPathError::Factorization { size: n })?
            .unpack();
        Ok(Self {
            hurst,
            times,
            factor,
        })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// One scalar sample path at all times (0 at the first time).
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.factor.nrows();
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut out = vec![0.0; n + 1];
        for i in 0..n {
            let mut acc = 0.0;
            for (j, zj) in z.iter().enumerate().take(i + 1) {
                acc += self.factor[(i, j)] * zj;
            }
            out[i + 1] = acc;
        }
        out
    }

    /// `d` independent components; component `c` uses substream `c`.
    pub fn sample_components(&self, seed: u64, d: usize) -> Vec<Vec<f64>> {
        let comps: Vec<Vec<f64>> = (0..d)
            .map(|c| self.sample(&mut substream(seed, c as u64)))
            .collect();
        (0..self.times.len())
            .map(|k| comps.iter().map(|c| c[k]).collect())
            .collect()
    }
}

fn check_fbm_regime(hurst: f64, p: f64) -> Result<usize, RoughPathError> {
    if !(hurst < 1.0) {
        return Err(RoughPathError::InvalidHurst(hurst));
    }
    if hurst <= 0.25 {
        return Err(RoughPathError::HurstTooSmall(hurst));
    }
    let degree = degree_for_p(p)?;
    if hurst * p <= 1.0 {
        return Err(RoughPathError::HurstVariation { hurst, p });
    }
    Ok(degree)
}

/// Piecewise linear fBm sample on the dyadic grid of the given level.
pub fn fbm_polyline(
    seed: u64,
    hurst: f64,
    horizon: f64,
    d: usize,
    dyadic_level: u32,
) -> Result<SmoothPath, RoughPathError> {
    let sampler = FbmSampler::dyadic(hurst, horizon, dyadic_level)?;
    SmoothPath::polyline(sampler.times().to_vec(), sampler.sample_components(seed, d))
}

/// Geometric lift of `d` independent fBm components sampled exactly on the
/// dyadic grid of `dyadic_level`, reported on `grid` (a subset of the dyadic
/// nodes). Requires `H > 1/4` and `H p > 1`; the degree is `⌊p⌋`.
pub fn fbm_lift(
    seed: u64,
    hurst: f64,
    p: f64,
    grid: &[f64],
    d: usize,
    dyadic_level: u32,
) -> Result<RoughPath, RoughPathError> {
    check_fbm_regime(hurst, p)?;
    check_grid(grid, None)?;
    let sampler = FbmSampler::dyadic(hurst, *grid.last().unwrap(), dyadic_level)?;
    fbm_lift_with(&sampler, seed, p, grid, d)
}

/// As [`fbm_lift`] with a prepared sampler, for repeated sampling.
pub fn fbm_lift_with(
    sampler: &FbmSampler,
    seed: u64,
    p: f64,
    grid: &[f64],
    d: usize,
) -> Result<RoughPath, RoughPathError> {
    let degree = check_fbm_regime(sampler.hurst(), p)?;
    check_grid(grid, None)?;
    let values = sampler.sample_components(seed, d);
    lift_nodes(sampler.times(), &values, grid, degree, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_brownian_has_no_area() {
        let rp = brownian_lift(3, &uniform_grid(1.0, 4), 1, 8).unwrap();
        for inc in rp.increments() {
            let db = inc.level1()[0];
            assert!((inc.l2(0, 0) - 0.5 * db * db).abs() < 1e-15);
        }
    }

    #[test]
    fn brownian_area_is_antisymmetric() {
        let rp = brownian_lift(11, &uniform_grid(1.0, 8), 3, 16).unwrap();
        for inc in rp.increments() {
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(inc.area(i, j), -inc.area(j, i));
                }
            }
            assert!(inc.geometric_defect() < 1e-12);
        }
    }

    #[test]
    fn refinement_keeps_coarse_values() {
        let grid = uniform_grid(1.0, 4);
        let (t4, v4) = brownian_nodes(5, &grid, 2, 4).unwrap();
        let (t8, v8) = brownian_nodes(5, &grid, 2, 8).unwrap();
        for (k, t) in t4.iter().enumerate() {
            assert_eq!(*t, t8[2 * k]);
            assert_eq!(v4[k], v8[2 * k]);
        }
    }

    #[test]
    fn subfactor_must_be_dyadic() {
        assert!(matches!(
            brownian_lift(1, &[0.0, 1.0], 2, 3),
            Err(RoughPathError::InvalidSubfactor(3))
        ));
    }

    #[test]
    fn fbm_regime_checks() {
        let grid = dyadic_grid(1.0, 3);
        assert!(matches!(
            fbm_lift(1, 0.2, 3.5, &grid, 2, 3),
            Err(RoughPathError::HurstTooSmall(_))
        ));
        assert!(matches!(
            fbm_lift(1, 0.3, 3.2, &grid, 2, 3),
            Err(RoughPathError::HurstVariation { .. })
        ));
        let rp = fbm_lift(1, 0.35, 3.5, &grid, 2, 5).unwrap();
        assert_eq!(rp.degree(), 3);
        assert_eq!(rp.n_cells(), 8);
        assert!(fbm_lift(1, 0.35, 3.5, &[0.0, 0.3, 1.0], 2, 5).is_err());
    }

    #[test]
    fn fbm_lift_is_geometric() {
        let rp = fbm_lift(9, 0.4, 3.5, &dyadic_grid(1.0, 2), 2, 6).unwrap();
        for inc in rp.increments() {
            assert!(inc.geometric_defect() < 1e-12);
            assert!(inc.level3_symmetric_defect() < 1e-12);
        }
    }
}
