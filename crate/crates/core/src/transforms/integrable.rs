use std::fmt;
use std::sync::Arc;

use crate::quadrature::{integrate_piecewise, QuadratureError};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An integrable function on ℝ, with its discontinuities exposed so that
/// quadrature can split there.
#[derive(Clone)]
pub enum IntegrableFn {
    Zero,
    /// `value` on `[lo, hi]`, zero elsewhere.
    Constant { value: f64, lo: f64, hi: f64 },
    /// `height · exp(-(x - center)² / (2 width²))`.
    Gaussian { height: f64, center: f64, width: f64 },
    Custom {
        f: ScalarFn,
        /// Derivative where `f` is smooth; central differences when absent.
        df: Option<ScalarFn>,
        breakpoints: Vec<f64>,
        /// Interval outside which `f` vanishes, if known.
        support: Option<(f64, f64)>,
    },
}

impl fmt::Debug for IntegrableFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Constant { value, lo, hi } => write!(f, "Constant({value} on [{lo}, {hi}])"),
            Self::Gaussian { height, center, width } => write!(f, "Gaussian({height}, {center}, {width})"),
            Self::Custom { breakpoints, support, .. } => f
                .debug_struct("Custom")
                .field("breakpoints", breakpoints)
                .field("support", support)
                .finish(),
        }
    }
}

impl IntegrableFn {
    pub fn custom<F>(f: F, breakpoints: Vec<f64>, support: Option<(f64, f64)>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::Custom {
            f: Arc::new(f),
            df: None,
            breakpoints,
            support,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Constant { value, lo, hi } => *value == 0.0 || lo >= hi,
            Self::Gaussian { height, .. } => *height == 0.0,
            Self::Custom { .. } => false,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant { value, lo, hi } => {
                if x >= *lo && x <= *hi {
                    *value
                } else {
                    0.0
                }
            }
            Self::Gaussian { height, center, width } => {
                let u = (x - center) / width;
                height * (-0.5 * u * u).exp()
            }
            Self::Custom { f, .. } => f(x),
        }
    }

    /// Derivative away from breakpoints.
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Self::Zero | Self::Constant { .. } => 0.0,
            Self::Gaussian { width, center, .. } => -(x - center) / (width * width) * self.value(x),
            Self::Custom { f, df, .. } => match df {
                Some(df) => df(x),
                None => {
                    let h = 1e-5 * x.abs().max(1.0);
                    (f(x + h) - f(x - h)) / (2.0 * h)
                }
            },
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Constant { lo, hi, .. } => vec![*lo, *hi],
            Self::Custom { breakpoints, .. } => breakpoints.clone(),
            _ => Vec::new(),
        }
    }

    /// The constant value of `f` on `(a, b)` when that is known in closed form.
    pub fn constant_on(&self, a: f64, b: f64) -> Option<f64> {
        match self {
            Self::Zero => Some(0.0),
            Self::Constant { value, lo, hi } => {
                if a >= *lo && b <= *hi {
                    Some(*value)
                } else if b <= *lo || a >= *hi {
                    Some(0.0)
                } else {
                    None
                }
            }
            Self::Custom {
                support: Some((lo, hi)),
                ..
            } if b <= *lo || a >= *hi => Some(0.0),
            _ => None,
        }
    }

    /// `∫_a^b f` to absolute tolerance `tol`.
    pub fn integral(&self, a: f64, b: f64, tol: f64) -> Result<f64, QuadratureError> {
        match self {
            Self::Zero => Ok(0.0),
            Self::Constant { value, lo, hi } => {
                let (l, h, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
                Ok(sign * value * (h.min(*hi) - l.max(*lo)).max(0.0))
            }
            _ => integrate_piecewise(|x| self.value(x), a, b, &self.breakpoints(), tol),
        }
    }

    /// `‖f‖_{L¹(ℝ)}`.
    pub fn l1_norm(&self, tol: f64) -> Result<f64, QuadratureError> {
        match self {
            Self::Zero => Ok(0.0),
            Self::Constant { value, lo, hi } => Ok(value.abs() * (hi - lo).max(0.0)),
            Self::Gaussian { height, width, .. } => {
                Ok(height.abs() * width.abs() * (2.0 * std::f64::consts::PI).sqrt())
            }
            Self::Custom {
                f,
                breakpoints,
                support,
                ..
            } => match support {
                Some((lo, hi)) => integrate_piecewise(|x| f(x).abs(), *lo, *hi, breakpoints, tol),
                None => {
                    // x = s / (1 - s²) maps (-1, 1) onto ℝ
                    let to_s = |x: f64| 2.0 * x / (1.0 + (1.0 + 4.0 * x * x).sqrt());
                    let mapped: Vec<f64> = breakpoints.iter().map(|&x| to_s(x)).collect();
                    integrate_piecewise(
                        |s| {
                            let q = 1.0 - s * s;
                            let x = s / q;
                            let jac = (1.0 + s * s) / (q * q);
                            let v = f(x).abs() * jac;
                            if v.is_finite() {
                                v
                            } else {
                                0.0
                            }
                        },
                        -1.0,
                        1.0,
                        &mapped,
                        tol,
                    )
                }
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    #[test]
    fn norms_match_closed_forms() {
        let c = IntegrableFn::Constant {
            value: -0.5,
            lo: 0.0,
            hi: 3.0,
        };
        assert_eq!(c.l1_norm(1e-12).unwrap(), 1.5);
        assert_eq!(c.integral(-1.0, 1.0, 1e-12).unwrap(), -0.5);
        let g = IntegrableFn::Gaussian {
            height: 2.0,
            center: 1.0,
            width: 0.5,
        };
        let quad = integrate(|x| g.value(x), -20.0, 20.0, 1e-12).unwrap();
        assert!((g.l1_norm(1e-12).unwrap() - quad).abs() < 1e-10);
        let custom = IntegrableFn::custom(|x: f64| 1.0 / (1.0 + x * x), vec![], None);
        assert!((custom.l1_norm(1e-10).unwrap() - std::f64::consts::PI).abs() < 1e-8);
    }

    #[test]
    fn step_function_splits_at_breakpoints() {
        let step = IntegrableFn::custom(|x: f64| if (0.0..=1.0).contains(&x) { 0.5 } else { 0.0 }, vec![0.0, 1.0], None);
        assert!((step.integral(-2.0, 0.5, 1e-12).unwrap() - 0.25).abs() < 1e-12);
        assert!((step.l1_norm(1e-10).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn gaussian_derivative() {
        let g = IntegrableFn::Gaussian {
            height: 1.0,
            center: 0.0,
            width: 1.0,
        };
        let h = 1e-6;
        let fd = (g.value(0.7 + h) - g.value(0.7 - h)) / (2.0 * h);
        assert!((g.derivative(0.7) - fd).abs() < 1e-8);
    }
}
