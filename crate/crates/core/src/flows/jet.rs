//! Truncated Taylor jets `(f, f', f'', ...)` of scalar functions on ℝ, used
//! to build Lie brackets of vector fields and their derivatives.

pub const MAX_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub d: [f64; MAX_ORDER + 1],
    pub order: usize,
}

const BINOM: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0, 0.0],
    [1.0, 3.0, 3.0, 1.0, 0.0],
    [1.0, 4.0, 6.0, 4.0, 1.0],
];

impl Jet {
    pub fn new(d: [f64; MAX_ORDER + 1], order: usize) -> Self {
        Self { d, order }
    }

    pub fn zero(order: usize) -> Self {
        Self {
            d: [0.0; MAX_ORDER + 1],
            order,
        }
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order);
        let mut d = [0.0; MAX_ORDER + 1];
        for (k, dk) in d.iter_mut().enumerate().take(order + 1) {
            for j in 0..=k {
                *dk += BINOM[k][j] * self.d[j] * other.d[k - j];
            }
        }
        Jet { d, order }
    }

    /// Derivative as a jet of one order less.
    pub fn deriv(&self) -> Jet {
        assert!(self.order > 0, "cannot differentiate an order-0 jet");
        let mut d = [0.0; MAX_ORDER + 1];
        d[..self.order].copy_from_slice(&self.d[1..=self.order]);
        Jet {
            d,
            order: self.order - 1,
        }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order);
        let mut d = [0.0; MAX_ORDER + 1];
        for k in 0..=order {
            d[k] = self.d[k] - other.d[k];
        }
        Jet { d, order }
    }

    /// `self += scale * other`, truncated to the lower order.
    pub fn axpy(&mut self, scale: f64, other: &Jet) {
        self.order = self.order.min(other.order);
        for k in 0..=self.order {
            self.d[k] += scale * other.d[k];
        }
    }

    /// Lie bracket `[A, B] = A B' - B A'` of vector fields on ℝ.
    pub fn bracket(&self, other: &Jet) -> Jet {
        self.mul(&other.deriv()).sub(&other.mul(&self.deriv()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sin_jet(y: f64) -> Jet {
        Jet::new([y.sin(), y.cos(), -y.sin(), -y.cos(), y.sin()], 4)
    }

    fn exp_jet(y: f64, a: f64) -> Jet {
        let e = (a * y).exp();
        Jet::new([e, a * e, a * a * e, a.powi(3) * e, a.powi(4) * e], 4)
    }

    #[test]
    fn leibniz_matches_closed_form() {
        let y = 0.7;
        let p = sin_jet(y).mul(&exp_jet(y, 2.0));
        // (sin·e^{2y})'' = e^{2y}(3 sin + 4 cos)
        let e = (2.0 * y).exp();
        assert!((p.d[2] - e * (3.0 * y.sin() + 4.0 * y.cos())).abs() < 1e-12);
        assert_eq!(p.order, 4);
    }

    #[test]
    fn bracket_of_constant_and_linear() {
        let one = Jet::new([1.0, 0.0, 0.0, 0.0, 0.0], 4);
        let lin = Jet::new([2.0, 1.0, 0.0, 0.0, 0.0], 4); // y at y = 2
        let b = one.bracket(&lin);
        assert_eq!(b.d[0], 1.0);
        assert_eq!(b.order, 3);
        assert_eq!(lin.bracket(&lin).d[0], 0.0);
    }
}
