use std::fmt;
use std::sync::Arc;

use super::RoughPathError;

type PathFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Linear {
        velocity: Vec<f64>,
    },
    Polyline {
        times: Vec<f64>,
        points: Vec<Vec<f64>>,
    },
    Closure {
        dim: usize,
        value: PathFn,
        velocity: PathFn,
    },
}

/// A driver of bounded variation given by an evaluation rule and its
/// derivative on `[0, T]`. Paths start at the origin.
#[derive(Clone)]
pub struct SmoothPath {
    horizon: f64,
    repr: Repr,
}

impl fmt::Debug for SmoothPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.repr {
            Repr::Linear { .. } => "linear",
            Repr::Polyline { .. } => "polyline",
            Repr::Closure { .. } => "closure",
        };
        f.debug_struct("SmoothPath")
            .field("horizon", &self.horizon)
            .field("dim", &self.dim())
            .field("kind", &kind)
            .finish()
    }
}

impl SmoothPath {
    /// `η_t = velocity · t`.
    pub fn linear(velocity: Vec<f64>, horizon: f64) -> Self {
        Self {
            horizon,
            repr: Repr::Linear { velocity },
        }
    }

    /// Constant path at the origin.
    pub fn constant(dim: usize, horizon: f64) -> Self {
        Self::linear(vec![0.0; dim], horizon)
    }

    /// Piecewise linear interpolation of `points` at `times`. The first time
    /// must be 0 and the last the horizon; points are shifted so the path
    /// starts at the origin.
    pub fn polyline(times: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self, RoughPathError> {
        if times.len() < 2 || times.len() != points.len() {
            return Err(RoughPathError::EmptyGrid);
        }
        super::check_grid(&times, None)?;
        if times[0] != 0.0 {
            return Err(RoughPathError::GridOutOfRange {
                start: times[0],
                end: *times.last().unwrap(),
                horizon: *times.last().unwrap(),
            });
        }
        let dim = points[0].len();
        if let Some(bad) = points.iter().find(|p| p.len() != dim) {
            return Err(RoughPathError::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        let origin = points[0].clone();
        let points = points
            .into_iter()
            .map(|p| p.iter().zip(&origin).map(|(a, b)| a - b).collect())
            .collect();
        let horizon = *times.last().unwrap();
        Ok(Self {
            horizon,
            repr: Repr::Polyline { times, points },
        })
    }

    /// Arbitrary smooth path from closures for the value and the derivative.
    pub fn from_fn<F, G>(dim: usize, horizon: f64, value: F, velocity: G) -> Self
    where
        F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        G: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            horizon,
            repr: Repr::Closure {
                dim,
                value: Arc::new(value),
                velocity: Arc::new(velocity),
            },
        }
    }

    /// Component `k` follows `amplitude[k] * sin(frequency[k] * t)`.
    pub fn sine(amplitude: Vec<f64>, frequency: Vec<f64>, horizon: f64) -> Self {
        let dim = amplitude.len();
        let (a1, w1) = (amplitude.clone(), frequency.clone());
        Self::from_fn(
            dim,
            horizon,
            move |t| a1.iter().zip(&w1).map(|(a, w)| a * (w * t).sin()).collect(),
            move |t| {
                amplitude
                    .iter()
                    .zip(&frequency)
                    .map(|(a, w)| a * w * (w * t).cos())
                    .collect()
            },
        )
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Linear { velocity } => velocity.len(),
            Repr::Polyline { points, .. } => points[0].len(),
            Repr::Closure { dim, .. } => *dim,
        }
    }

    /// Points in `(0, T)` where the derivative may jump.
    pub fn breakpoints(&self) -> &[f64] {
        match &self.repr {
            Repr::Polyline { times, .. } => &times[1..times.len() - 1],
            _ => &[],
        }
    }

    fn piece(times: &[f64], t: f64) -> usize {
        let idx = times.partition_point(|&s| s <= t);
        idx.clamp(1, times.len() - 1) - 1
    }

    pub fn value(&self, t: f64) -> Vec<f64> {
        match &self.repr {
            Repr::Linear { velocity } => velocity.iter().map(|v| v * t).collect(),
            Repr::Polyline { times, points } => {
                let i = Self::piece(times, t);
                let w = (t - times[i]) / (times[i + 1] - times[i]);
                points[i]
                    .iter()
                    .zip(&points[i + 1])
                    .map(|(a, b)| a + w * (b - a))
                    .collect()
            }
            Repr::Closure { value, .. } => value(t),
        }
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        match &self.repr {
            Repr::Linear { velocity } => velocity.clone(),
            Repr::Polyline { times, points } => Self::slope(times, points, Self::piece(times, t)),
            Repr::Closure { velocity, .. } => velocity(t),
        }
    }

    /// Derivative at `t` for a step over `[lo, hi]` that does not straddle a
    /// breakpoint; at a kink the piece containing the step is used.
    pub fn velocity_on(&self, t: f64, lo: f64, hi: f64) -> Vec<f64> {
        match &self.repr {
            Repr::Polyline { times, points } => {
                Self::slope(times, points, Self::piece(times, 0.5 * (lo + hi)))
            }
            _ => self.velocity(t),
        }
    }

    fn slope(times: &[f64], points: &[Vec<f64>], i: usize) -> Vec<f64> {
        let h = times[i + 1] - times[i];
        points[i]
            .iter()
            .zip(&points[i + 1])
            .map(|(a, b)| (b - a) / h)
            .collect()
    }

    /// True when the path is linear between consecutive breakpoints.
    pub fn is_piecewise_linear(&self) -> bool {
        !matches!(self.repr, Repr::Closure { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyline_evaluates_and_differentiates() {
        let p = SmoothPath::polyline(
            vec![0.0, 1.0, 2.0],
            vec![vec![1.0, 1.0], vec![2.0, 1.0], vec![2.0, 2.0]],
        )
        .unwrap();
        assert_eq!(p.value(0.0), vec![0.0, 0.0]);
        assert_eq!(p.value(1.5), vec![1.0, 0.5]);
        assert_eq!(p.velocity(0.5), vec![1.0, 0.0]);
        assert_eq!(p.velocity_on(1.0, 1.0, 1.5), vec![0.0, 1.0]);
        assert_eq!(p.velocity_on(1.0, 0.5, 1.0), vec![1.0, 0.0]);
        assert_eq!(p.breakpoints(), &[1.0]);
    }

    #[test]
    fn non_monotone_polyline_rejected() {
        let err = SmoothPath::polyline(vec![0.0, 1.0, 0.5], vec![vec![0.0]; 3]);
        assert!(matches!(err, Err(RoughPathError::NonMonotoneGrid { .. })));
    }
}
