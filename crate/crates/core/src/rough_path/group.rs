//! Truncated tensor-algebra group elements of step 2 and 3.
//!
//! Tensors are stored row-major: `level2[i * d + j]` and
//! `level3[(i * d + j) * d + k]`, where the first index belongs to the
//! earliest integration variable.

use super::RoughPathError;

#[derive(Clone, Debug, PartialEq)]
pub struct GroupIncrement {
    dim: usize,
    level1: Vec<f64>,
    level2: Vec<f64>,
    level3: Option<Vec<f64>>,
}

/// Truncated logarithm of a group element. For geometric increments every
/// level is a Lie element.
#[derive(Clone, Debug, PartialEq)]
pub struct LogSignature {
    pub dim: usize,
    pub level1: Vec<f64>,
    pub level2: Vec<f64>,
    pub level3: Option<Vec<f64>>,
}

fn outer(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

fn check_degree(degree: usize) -> Result<(), RoughPathError> {
    if degree == 2 || degree == 3 {
        Ok(())
    } else {
        Err(RoughPathError::UnsupportedDegree(degree))
    }
}

impl GroupIncrement {
    pub fn identity(dim: usize, degree: usize) -> Result<Self, RoughPathError> {
        check_degree(degree)?;
        Ok(Self {
            dim,
            level1: vec![0.0; dim],
            level2: vec![0.0; dim * dim],
            level3: (degree == 3).then(|| vec![0.0; dim * dim * dim]),
        })
    }

    /// Signature of the straight line segment with increment `delta`.
    pub fn segment(delta: &[f64], degree: usize) -> Result<Self, RoughPathError> {
        check_degree(degree)?;
        let level2: Vec<f64> = outer(delta, delta).into_iter().map(|v| 0.5 * v).collect();
        let level3 = (degree == 3).then(|| {
            outer(&level2, delta)
                .into_iter()
                .map(|v| v / 3.0)
                .collect::<Vec<_>>()
        });
        Ok(Self {
            dim: delta.len(),
            level1: delta.to_vec(),
            level2,
            level3,
        })
    }

    pub fn from_levels(
        level1: Vec<f64>,
        level2: Vec<f64>,
        level3: Option<Vec<f64>>,
    ) -> Result<Self, RoughPathError> {
        let dim = level1.len();
        if level2.len() != dim * dim {
            return Err(RoughPathError::DimensionMismatch {
                expected: dim * dim,
                found: level2.len(),
            });
        }
        if let Some(l3) = &level3 {
            if l3.len() != dim * dim * dim {
                return Err(RoughPathError::DimensionMismatch {
                    expected: dim * dim * dim,
                    found: l3.len(),
                });
            }
        }
        Ok(Self {
            dim,
            level1,
            level2,
            level3,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        if self.level3.is_some() {
            3
        } else {
            2
        }
    }

    pub fn level1(&self) -> &[f64] {
        &self.level1
    }

    pub fn level2(&self) -> &[f64] {
        &self.level2
    }

    pub fn level3(&self) -> Option<&[f64]> {
        self.level3.as_deref()
    }

    pub fn l2(&self, i: usize, j: usize) -> f64 {
        self.level2[i * self.dim + j]
    }

    pub fn l3(&self, i: usize, j: usize, k: usize) -> Option<f64> {
        self.level3
            .as_ref()
            .map(|l3| l3[(i * self.dim + j) * self.dim + k])
    }

    /// Lévy area component `A^{ij}`, the antisymmetric part of level 2.
    pub fn area(&self, i: usize, j: usize) -> f64 {
        0.5 * (self.l2(i, j) - self.l2(j, i))
    }

    fn check_compatible(&self, other: &Self) -> Result<(), RoughPathError> {
        if self.dim != other.dim {
            return Err(RoughPathError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if self.degree() != other.degree() {
            return Err(RoughPathError::DegreeMismatch {
                left: self.degree(),
                right: other.degree(),
            });
        }
        Ok(())
    }

    /// Chen product: the increment over `[s,u]` from those over `[s,t]` and `[t,u]`.
    pub fn concat(&self, next: &Self) -> Result<Self, RoughPathError> {
        self.check_compatible(next)?;
        let d = self.dim;
        let level1: Vec<f64> = self
            .level1
            .iter()
            .zip(&next.level1)
            .map(|(a, b)| a + b)
            .collect();
        let mut level2 = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let idx = i * d + j;
                level2.push(self.level2[idx] + next.level2[idx] + self.level1[i] * next.level1[j]);
            }
        }
        let level3 = match (&self.level3, &next.level3) {
            (Some(a3), Some(b3)) => {
                let mut out = Vec::with_capacity(d * d * d);
                for i in 0..d {
                    for j in 0..d {
                        for k in 0..d {
                            let idx = (i * d + j) * d + k;
                            out.push(
                                a3[idx]
                                    + b3[idx]
                                    + self.level1[i] * next.level2[j * d + k]
                                    + self.level2[i * d + j] * next.level1[k],
                            );
                        }
                    }
                }
                Some(out)
            }
            _ => None,
        };
        Ok(Self {
            dim: d,
            level1,
            level2,
            level3,
        })
    }

    /// Group inverse, written out level by level.
    pub fn inverse(&self) -> Self {
        let d = self.dim;
        let level1: Vec<f64> = self.level1.iter().map(|v| -v).collect();
        let mut level2 = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                level2.push(-self.level2[i * d + j] + self.level1[i] * self.level1[j]);
            }
        }
        let level3 = self.level3.as_ref().map(|a3| {
            let mut out = Vec::with_capacity(d * d * d);
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        let (a1, a2) = (&self.level1, &self.level2);
                        out.push(
                            -a3[(i * d + j) * d + k]
                                + a1[i] * a2[j * d + k]
                                + a2[i * d + j] * a1[k]
                                - a1[i] * a1[j] * a1[k],
                        );
                    }
                }
            }
            out
        });
        Self {
            dim: d,
            level1,
            level2,
            level3,
        }
    }

    /// Signature of the same increment read in reverse word order, i.e. the
    /// increment seen by a solver stepping backward in time with
    /// `r = T - t` as its clock. Equals the inverse composed with the
    /// dilation by `-1`.
    pub fn word_reversed(&self) -> Self {
        let d = self.dim;
        let mut level2 = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                level2[i * d + j] = self.level2[j * d + i];
            }
        }
        let level3 = self.level3.as_ref().map(|a3| {
            let mut out = vec![0.0; d * d * d];
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        out[(i * d + j) * d + k] = a3[(k * d + j) * d + i];
                    }
                }
            }
            out
        });
        Self {
            dim: d,
            level1: self.level1.clone(),
            level2,
            level3,
        }
    }

    /// Truncated logarithm `x - x^2/2 + x^3/3` of `1 + x`.
    pub fn log(&self) -> LogSignature {
        let d = self.dim;
        let (a1, a2) = (&self.level1, &self.level2);
        let mut level2 = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                level2.push(a2[i * d + j] - 0.5 * a1[i] * a1[j]);
            }
        }
        let level3 = self.level3.as_ref().map(|a3| {
            let mut out = Vec::with_capacity(d * d * d);
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        out.push(
                            a3[(i * d + j) * d + k]
                                - 0.5 * (a1[i] * a2[j * d + k] + a2[i * d + j] * a1[k])
                                + a1[i] * a1[j] * a1[k] / 3.0,
                        );
                    }
                }
            }
            out
        });
        LogSignature {
            dim: d,
            level1: a1.clone(),
            level2,
            level3,
        }
    }

    /// Largest deviation of `Sym(level2)` from `level1 ⊗ level1 / 2`.
    pub fn geometric_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let sym = 0.5 * (self.l2(i, j) + self.l2(j, i));
                worst = worst.max((sym - 0.5 * self.level1[i] * self.level1[j]).abs());
            }
        }
        worst
    }

    /// Largest deviation of the fully symmetrised level 3 from
    /// `level1^{⊗3} / 6`; zero for degree-2 elements.
    pub fn level3_symmetric_defect(&self) -> f64 {
        let Some(l3) = &self.level3 else {
            return 0.0;
        };
        let d = self.dim;
        let a1 = &self.level1;
        let at = |i: usize, j: usize, k: usize| l3[(i * d + j) * d + k];
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let sym = (at(i, j, k)
                        + at(i, k, j)
                        + at(j, i, k)
                        + at(j, k, i)
                        + at(k, i, j)
                        + at(k, j, i))
                        / 6.0;
                    worst = worst.max((sym - a1[i] * a1[j] * a1[k] / 6.0).abs());
                }
            }
        }
        worst
    }

    /// Homogeneous norm `|ℓ1| + |ℓ2|^{1/2} + |ℓ3|^{1/3}` of the logarithm,
    /// equivalent to the Carnot–Carathéodory norm.
    pub fn homogeneous_norm(&self) -> f64 {
        let log = self.log();
        let euclid = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut norm = euclid(&log.level1) + euclid(&log.level2).sqrt();
        if let Some(l3) = &log.level3 {
            norm += euclid(l3).cbrt();
        }
        norm
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, b) in self.level1.iter().zip(&other.level1) {
            worst = worst.max((a - b).abs());
        }
        for (a, b) in self.level2.iter().zip(&other.level2) {
            worst = worst.max((a - b).abs());
        }
        if let (Some(a3), Some(b3)) = (&self.level3, &other.level3) {
            for (a, b) in a3.iter().zip(b3) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_neutral() {
        let x = GroupIncrement::segment(&[0.3, -1.2], 3).unwrap();
        let e = GroupIncrement::identity(2, 3).unwrap();
        assert_eq!(e.concat(&x).unwrap(), x);
        assert_eq!(x.concat(&e).unwrap(), x);
    }

    #[test]
    fn straight_segment_has_no_area() {
        let x = GroupIncrement::segment(&[1.0, 0.0], 2).unwrap();
        assert_eq!(x.level2(), &[0.5, 0.0, 0.0, 0.0]);
        assert_eq!(x.area(0, 1), 0.0);
    }

    #[test]
    fn inverse_cancels() {
        let a = GroupIncrement::segment(&[1.0, 0.5], 3).unwrap();
        let b = GroupIncrement::segment(&[-0.2, 2.0], 3).unwrap();
        let x = a.concat(&b).unwrap();
        let id = GroupIncrement::identity(2, 3).unwrap();
        assert!(x.concat(&x.inverse()).unwrap().max_abs_diff(&id) < 1e-14);
        assert!(x.inverse().concat(&x).unwrap().max_abs_diff(&id) < 1e-14);
    }

    #[test]
    fn word_reversal_is_dilated_inverse() {
        let a = GroupIncrement::segment(&[1.0, 0.5], 3).unwrap();
        let b = GroupIncrement::segment(&[-0.2, 2.0], 3).unwrap();
        let x = a.concat(&b).unwrap();
        let inv = x.inverse();
        let dilated = GroupIncrement::from_levels(
            inv.level1().iter().map(|v| -v).collect(),
            inv.level2().to_vec(),
            inv.level3().map(|l| l.iter().map(|v| -v).collect()),
        )
        .unwrap();
        assert!(x.word_reversed().max_abs_diff(&dilated) < 1e-14);
        // Reversing the word order equals concatenating the pieces in reverse.
        let manual = b.concat(&a).unwrap();
        assert!(x.word_reversed().max_abs_diff(&manual) < 1e-14);
    }

    #[test]
    fn mismatches_are_rejected() {
        let a = GroupIncrement::identity(2, 2).unwrap();
        let b = GroupIncrement::identity(2, 3).unwrap();
        let c = GroupIncrement::identity(3, 2).unwrap();
        assert!(matches!(
            a.concat(&b),
            Err(RoughPathError::DegreeMismatch { .. })
        ));
        assert!(matches!(
            a.concat(&c),
            Err(RoughPathError::DimensionMismatch { .. })
        ));
        assert!(GroupIncrement::identity(2, 4).is_err());
    }

    #[test]
    fn log_of_segment_is_its_increment() {
        let x = GroupIncrement::segment(&[0.7, -0.4, 1.1], 3).unwrap();
        let log = x.log();
        assert!(log.level2.iter().all(|v| v.abs() < 1e-15));
        assert!(log.level3.unwrap().iter().all(|v| v.abs() < 1e-15));
    }
}
