use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::BsdeError;

/// Rows per partial Gram sum; partial sums are added in chunk order so the
/// result does not depend on the thread count.
const CHUNK: usize = 1024;
const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// `1, ξ, ..., ξ^degree` in the standardized variable `ξ = (x - mean)/std`.
    Polynomial { degree: usize },
    /// Hat functions on `bins` equal bins spanning the cross-section.
    PiecewiseLinear { bins: usize },
}

impl Basis {
    pub fn size(&self) -> usize {
        match self {
            Basis::Polynomial { degree } => degree + 1,
            Basis::PiecewiseLinear { bins } => bins + 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum FeatureMap {
    Constant,
    Polynomial { mean: f64, scale: f64, degree: usize },
    Hat { lo: f64, width: f64, bins: usize },
}

impl FeatureMap {
    fn fit(basis: &Basis, x: &[f64]) -> Self {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        if var.sqrt() <= 1e-12 * (1.0 + mean.abs()) {
            return FeatureMap::Constant;
        }
        match *basis {
            Basis::Polynomial { degree } => FeatureMap::Polynomial {
                mean,
                scale: var.sqrt(),
                degree,
            },
            Basis::PiecewiseLinear { bins } => {
                let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                FeatureMap::Hat {
                    lo,
                    width: (hi - lo) / bins as f64,
                    bins,
                }
            }
        }
    }

    fn size(&self) -> usize {
        match self {
            FeatureMap::Constant => 1,
            FeatureMap::Polynomial { degree, .. } => degree + 1,
            FeatureMap::Hat { bins, .. } => bins + 1,
        }
    }

    fn features(&self, x: f64, out: &mut [f64]) {
        match *self {
            FeatureMap::Constant => out[0] = 1.0,
            FeatureMap::Polynomial { mean, scale, degree } => {
                let xi = (x - mean) / scale;
                out[0] = 1.0;
                for j in 1..=degree {
                    out[j] = out[j - 1] * xi;
                }
            }
            FeatureMap::Hat { lo, width, bins } => {
                out.fill(0.0);
                let s = ((x - lo) / width).clamp(0.0, bins as f64);
                let j = (s.floor() as usize).min(bins - 1);
                let w = s - j as f64;
                out[j] = 1.0 - w;
                out[j + 1] = w;
            }
        }
    }
}

/// Design matrix of one cross-section with its factorized Gram matrix.
#[derive(Clone, Debug)]
pub struct Design {
    map: FeatureMap,
    features: Vec<f64>,
    n: usize,
    k: usize,
    factor: DMatrix<f64>,
    condition: f64,
    ridge: f64,
}

/// Fitted conditional expectation `x ↦ Σ c_j b_j(x)`.
#[derive(Clone, Debug)]
pub struct Regression {
    map: FeatureMap,
    pub coefficients: Vec<f64>,
    pub condition: f64,
    pub ridge: f64,
}

impl Regression {
    pub fn eval(&self, x: f64) -> f64 {
        let mut buf = vec![0.0; self.map.size()];
        self.map.features(x, &mut buf);
        buf.iter().zip(&self.coefficients).map(|(b, c)| b * c).sum()
    }

    /// Coefficients of `1, x, x², ...` for a polynomial fit.
    pub fn monomial_coefficients(&self) -> Option<Vec<f64>> {
        match self.map {
            FeatureMap::Constant => Some(vec![self.coefficients[0]]),
            FeatureMap::Polynomial { mean, scale, degree } => {
                let mut out = vec![0.0; degree + 1];
                // ((x - mean)/scale)^j = Σ_i C(j,i) x^i (-mean)^{j-i} / scale^j
                for (j, c) in self.coefficients.iter().enumerate() {
                    let mut binom = 1.0;
                    for (i, o) in out.iter_mut().enumerate().take(j + 1) {
                        *o += c * binom * (-mean).powi((j - i) as i32) / scale.powi(j as i32);
                        binom = binom * (j - i) as f64 / (i + 1) as f64;
                    }
                }
                Some(out)
            }
            FeatureMap::Hat { .. } => None,
        }
    }
}

impl Design {
    pub fn new(basis: &Basis, x: &[f64]) -> Result<Self, BsdeError> {
        let n = x.len();
        if basis.size() >= n {
            return Err(BsdeError::BasisTooLarge {
                basis: basis.size(),
                paths: n,
            });
        }
        if let Basis::PiecewiseLinear { bins: 0 } = basis {
            return Err(BsdeError::BasisTooLarge { basis: 0, paths: n });
        }
        let map = FeatureMap::fit(basis, x);
        let k = map.size();
        let mut features = vec![0.0; n * k];
        features
            .par_chunks_mut(k)
            .zip(x.par_iter())
            .for_each(|(row, &xv)| map.features(xv, row));
        let partial: Vec<Vec<f64>> = features
            .par_chunks(CHUNK * k)
            .map(|rows| {
                let mut g = vec![0.0; k * k];
                for row in rows.chunks(k) {
                    for a in 0..k {
                        for b in a..k {
                            g[a * k + b] += row[a] * row[b];
                        }
                    }
                }
                g
            })
            .collect();
        let mut gram = DMatrix::<f64>::zeros(k, k);
        for g in &partial {
            for a in 0..k {
                for b in a..k {
                    gram[(a, b)] += g[a * k + b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                gram[(a, b)] = gram[(b, a)];
            }
        }
        let eig = gram.clone().symmetric_eigen().eigenvalues;
        let (lmin, lmax) = eig.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
        let mut ridge = 0.0;
        let chol = if condition <= MAX_CONDITION {
            gram.clone().cholesky()
        } else {
            None
        };
        let factor = match chol {
            Some(c) => c.unpack(),
            None => {
                ridge = lmax.max(1.0) / MAX_CONDITION;
                let mut reg = gram;
                for a in 0..k {
                    reg[(a, a)] += ridge;
                }
                reg.cholesky().ok_or(BsdeError::Regression { size: k })?.unpack()
            }
        };
        Ok(Self {
            map,
            features,
            n,
            k,
            factor,
            condition,
            ridge,
        })
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn is_constant_only(&self) -> bool {
        self.map == FeatureMap::Constant
    }

    /// Least-squares coefficients for `target` (one value per row).
    pub fn fit(&self, target: &[f64]) -> Regression {
        assert_eq!(target.len(), self.n, "target length");
        let k = self.k;
        let partial: Vec<Vec<f64>> = self
            .features
            .par_chunks(CHUNK * k)
            .zip(target.par_chunks(CHUNK))
            .map(|(rows, ys)| {
                let mut r = vec![0.0; k];
                for (row, y) in rows.chunks(k).zip(ys) {
                    for a in 0..k {
                        r[a] += row[a] * y;
                    }
                }
                r
            })
            .collect();
        let mut rhs = DVector::<f64>::zeros(k);
        for r in &partial {
            for a in 0..k {
                rhs[a] += r[a];
            }
        }
        let l = &self.factor;
        let w = l.solve_lower_triangular(&rhs).expect("nonsingular factor");
        let c = l.transpose().solve_upper_triangular(&w).expect("nonsingular factor");
        Regression {
            map: self.map.clone(),
            coefficients: c.iter().copied().collect(),
            condition: self.condition,
            ridge: self.ridge,
        }
    }

    /// Fitted values on the design rows.
    pub fn predict(&self, fit: &Regression) -> Vec<f64> {
        self.features
            .par_chunks(self.k)
            .map(|row| row.iter().zip(&fit.coefficients).map(|(b, c)| b * c).sum())
            .collect()
    }
}

/// One-off least-squares fit of `target` against `basis(x)`.
pub fn regress(basis: &Basis, x: &[f64], target: &[f64]) -> Result<Regression, BsdeError> {
    Ok(Design::new(basis, x)?.fit(target))
}
