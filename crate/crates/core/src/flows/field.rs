use std::fmt;
use std::sync::Arc;

use super::jet::{Jet, MAX_ORDER};

/// A scalar vector field `G: ℝ → ℝ` with derivatives up to order 4.
///
/// Log-ODE steps need up to the fourth derivative (second derivative of a
/// level-3 bracket); the ODE route needs two.
pub trait VectorField: Send + Sync {
    /// `[G, G', G'', G''', G'''']` at `y`; entries beyond `order` may be left 0.
    fn derivatives(&self, y: f64, order: usize) -> [f64; MAX_ORDER + 1];

    fn is_zero(&self) -> bool {
        false
    }

    fn jet(&self, y: f64, order: usize) -> Jet {
        Jet::new(self.derivatives(y, order), order)
    }

    fn value(&self, y: f64) -> f64 {
        self.derivatives(y, 0)[0]
    }
}

pub type SharedField = Arc<dyn VectorField>;

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroField;

impl VectorField for ZeroField {
    fn derivatives(&self, _y: f64, _order: usize) -> [f64; MAX_ORDER + 1] {
        [0.0; MAX_ORDER + 1]
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// `G(y) = a + b y`.
#[derive(Clone, Copy, Debug)]
pub struct AffineField {
    pub a: f64,
    pub b: f64,
}

impl AffineField {
    pub fn constant(a: f64) -> Self {
        Self { a, b: 0.0 }
    }

    pub fn linear(b: f64) -> Self {
        Self { a: 0.0, b }
    }
}

impl VectorField for AffineField {
    fn derivatives(&self, y: f64, _order: usize) -> [f64; MAX_ORDER + 1] {
        [self.a + self.b * y, self.b, 0.0, 0.0, 0.0]
    }

    fn is_zero(&self) -> bool {
        self.a == 0.0 && self.b == 0.0
    }
}

/// `G(y) = amplitude · sin(frequency · y)`.
#[derive(Clone, Copy, Debug)]
pub struct SineField {
    pub amplitude: f64,
    pub frequency: f64,
}

impl VectorField for SineField {
    fn derivatives(&self, y: f64, _order: usize) -> [f64; MAX_ORDER + 1] {
        let (a, w) = (self.amplitude, self.frequency);
        let (s, c) = (w * y).sin_cos();
        [
            a * s,
            a * w * c,
            -a * w * w * s,
            -a * w.powi(3) * c,
            a * w.powi(4) * s,
        ]
    }

    fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Field from closures for `G, G', G''`; third and fourth derivatives are
/// central differences of `G''`.
#[derive(Clone)]
pub struct FnField {
    value: ScalarFn,
    d1: ScalarFn,
    d2: ScalarFn,
    step: f64,
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField").field("step", &self.step).finish()
    }
}

impl FnField {
    pub fn new<F, G, H>(value: F, d1: G, d2: H) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
            step: 1e-3,
        }
    }
}

impl VectorField for FnField {
    fn derivatives(&self, y: f64, order: usize) -> [f64; MAX_ORDER + 1] {
        let mut out = [0.0; MAX_ORDER + 1];
        out[0] = (self.value)(y);
        if order >= 1 {
            out[1] = (self.d1)(y);
        }
        if order >= 2 {
            out[2] = (self.d2)(y);
        }
        if order >= 3 {
            let h = self.step * y.abs().max(1.0);
            let (up, down) = ((self.d2)(y + h), (self.d2)(y - h));
            out[3] = (up - down) / (2.0 * h);
            if order >= 4 {
                out[4] = (up - 2.0 * out[2] + down) / (h * h);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fn_field_difference_derivatives() {
        let f = FnField::new(|y: f64| y.sin(), |y: f64| y.cos(), |y: f64| -y.sin());
        let d = f.derivatives(0.4, 4);
        assert!((d[3] + 0.4_f64.cos()).abs() < 1e-6);
        assert!((d[4] - 0.4_f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn zero_detection() {
        assert!(ZeroField.is_zero());
        assert!(AffineField::linear(0.0).is_zero());
        assert!(!AffineField::constant(1.0).is_zero());
    }
}
