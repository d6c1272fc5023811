use rayon::prelude::*;

use super::{Flow, FlowError, FlowMap, FlowValue};

/// Summary statistics of a tabulated flow over its time nodes and y-grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableStats {
    pub min_dphi: f64,
    pub max_dphi: f64,
    /// `sup_t |φ(t, 0)|`, interpolated when 0 is not a grid point.
    pub sup_phi_at_zero: f64,
    pub max_d2phi_over_dphi: f64,
}

/// Flow values precomputed at fixed time nodes on a uniform y-grid, with
/// Hermite interpolation in `y`. Exact identity at the terminal node.
#[derive(Clone, Debug)]
pub struct FlowTable {
    horizon: f64,
    times: Vec<f64>,
    lo: f64,
    hi: f64,
    n: usize,
    identity: bool,
    /// `[time][node]`
    phi: Vec<Vec<f64>>,
    dphi: Vec<Vec<f64>>,
    d2phi: Vec<Vec<f64>>,
}

impl FlowTable {
    /// Tabulates `flow` at `times` on `n + 1` equally spaced points of `[lo, hi]`.
    pub fn build(flow: &Flow, times: &[f64], lo: f64, hi: f64, n: usize) -> Result<Self, FlowError> {
        assert!(hi > lo && n >= 1, "empty y-range");
        let horizon = flow.horizon();
        let mut times = times.to_vec();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let identity = flow.is_identity();
        let (mut phi, mut dphi, mut d2phi) = (Vec::new(), Vec::new(), Vec::new());
        if !identity {
            let columns: Vec<Vec<FlowValue>> = (0..=n)
                .into_par_iter()
                .map(|j| flow.trajectory(lo + (hi - lo) * j as f64 / n as f64, &times))
                .collect::<Result<_, _>>()?;
            for i in 0..times.len() {
                phi.push(columns.iter().map(|c| c[i].phi).collect());
                dphi.push(columns.iter().map(|c| c[i].dphi).collect());
                d2phi.push(columns.iter().map(|c| c[i].d2phi).collect());
            }
        }
        Ok(Self {
            horizon,
            times,
            lo,
            hi,
            n,
            identity,
            phi,
            dphi,
            d2phi,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn time_index(&self, t: f64) -> Result<usize, FlowError> {
        let tol = 1e-10 * self.horizon.max(1.0);
        let idx = self.times.partition_point(|&s| s < t - tol);
        if idx < self.times.len() && (self.times[idx] - t).abs() <= tol {
            Ok(idx)
        } else {
            Err(FlowError::OffGrid { t })
        }
    }

    fn is_terminal(&self, t: f64) -> bool {
        (t - self.horizon).abs() <= 1e-10 * self.horizon.max(1.0)
    }

    pub fn stats(&self) -> TableStats {
        if self.identity {
            return TableStats {
                min_dphi: 1.0,
                max_dphi: 1.0,
                sup_phi_at_zero: 0.0,
                max_d2phi_over_dphi: 0.0,
            };
        }
        let mut stats = TableStats {
            min_dphi: f64::INFINITY,
            max_dphi: 0.0,
            sup_phi_at_zero: 0.0,
            max_d2phi_over_dphi: 0.0,
        };
        for (i, &t) in self.times.iter().enumerate() {
            for (d1, d2) in self.dphi[i].iter().zip(&self.d2phi[i]) {
                stats.min_dphi = stats.min_dphi.min(*d1);
                stats.max_dphi = stats.max_dphi.max(*d1);
                stats.max_d2phi_over_dphi = stats.max_d2phi_over_dphi.max((d2 / d1).abs());
            }
            if (self.lo..=self.hi).contains(&0.0) {
                if let Ok(v) = self.value(t, 0.0) {
                    stats.sup_phi_at_zero = stats.sup_phi_at_zero.max(v.phi.abs());
                }
            }
        }
        if self.times.iter().any(|&t| self.is_terminal(t)) {
            stats.min_dphi = stats.min_dphi.min(1.0);
            stats.max_dphi = stats.max_dphi.max(1.0);
        }
        stats
    }
}

impl FlowMap for FlowTable {
    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn is_identity(&self) -> bool {
        self.identity
    }

    fn value(&self, t: f64, y: f64) -> Result<FlowValue, FlowError> {
        if self.identity || self.is_terminal(t) {
            return Ok(FlowValue::identity(t, y));
        }
        let i = self.time_index(t)?;
        if !(y >= self.lo && y <= self.hi) {
            return Err(FlowError::OutOfTable {
                y,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let h = (self.hi - self.lo) / self.n as f64;
        let j = (((y - self.lo) / h).floor() as usize).min(self.n - 1);
        let s = (y - self.lo - j as f64 * h) / h;
        let (p, d, a) = (&self.phi[i], &self.dphi[i], &self.d2phi[i]);
        let (s2, s3) = (s * s, s * s * s);
        let (s4, s5) = (s3 * s, s3 * s2);

        let q0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
        let q1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
        let q2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
        let q3 = 0.5 * (s3 - 2.0 * s4 + s5);
        let q4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
        let q5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
        let phi = q0 * p[j]
            + q1 * h * d[j]
            + q2 * h * h * a[j]
            + q3 * h * h * a[j + 1]
            + q4 * h * d[j + 1]
            + q5 * p[j + 1];

        let c00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let c10 = s3 - 2.0 * s2 + s;
        let c01 = -2.0 * s3 + 3.0 * s2;
        let c11 = s3 - s2;
        let dphi = c00 * d[j] + c10 * h * a[j] + c01 * d[j + 1] + c11 * h * a[j + 1];

        let d2phi = (1.0 - s) * a[j] + s * a[j + 1];
        Ok(FlowValue {
            t,
            y,
            phi,
            dphi,
            d2phi,
        })
    }
}
