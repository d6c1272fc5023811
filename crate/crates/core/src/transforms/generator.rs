use std::fmt;
use std::sync::Arc;

use super::IntegrableFn;

/// Domination `|g(t, y, z)| <= a + b|y| + c|z| + f(|y|) z²`.
#[derive(Clone, Debug)]
pub struct GrowthSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub f: IntegrableFn,
}

impl GrowthSpec {
    pub fn new(a: f64, b: f64, c: f64, f: IntegrableFn) -> Self {
        assert!(a >= 0.0 && b >= 0.0 && c >= 0.0, "growth constants must be nonnegative");
        Self { a, b, c, f }
    }

    /// `max(|f(r)|, |f(-r)|)`, so that `f_env(|y|) >= |f(y)|` for signed `f`.
    pub fn f_envelope(&self, r: f64) -> f64 {
        self.f.value(r).abs().max(self.f.value(-r).abs())
    }

    pub fn bound(&self, y: f64, z: f64) -> f64 {
        self.a + self.b * y.abs() + self.c * z.abs() + self.f_envelope(y.abs()) * z * z
    }

    /// First sampled point of the grid `ys × zs` at time `t` where the
    /// domination fails.
    pub fn violation<G: Generator + ?Sized>(&self, g: &G, t: f64, ys: &[f64], zs: &[f64]) -> Option<(f64, f64)> {
        for &y in ys {
            for &z in zs {
                let tol = 1e-12 * (1.0 + self.bound(y, z));
                if g.eval(t, y, z).abs() > self.bound(y, z) + tol {
                    return Some((y, z));
                }
            }
        }
        None
    }
}

/// A BSDE generator `g(t, y, z)`.
pub trait Generator: Send + Sync {
    fn eval(&self, t: f64, y: f64, z: f64) -> f64;

    fn growth(&self) -> GrowthSpec;

    /// `f` when `g` is of the form `h(t, y, z) + f(y) z²` with `h` of linear growth.
    fn quadratic_coefficient(&self) -> Option<&IntegrableFn> {
        None
    }

    /// `(a, b, c, f)` when `g = a + b|y| + c|z| + f(y) z²` exactly.
    fn mixed_form(&self) -> Option<MixedGenerator> {
        None
    }

    fn is_zero(&self) -> bool {
        false
    }
}

pub type SharedGenerator = Arc<dyn Generator>;

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroGenerator;

impl Generator for ZeroGenerator {
    fn eval(&self, _t: f64, _y: f64, _z: f64) -> f64 {
        0.0
    }

    fn growth(&self) -> GrowthSpec {
        GrowthSpec::new(0.0, 0.0, 0.0, IntegrableFn::Zero)
    }

    fn mixed_form(&self) -> Option<MixedGenerator> {
        Some(MixedGenerator {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            f: IntegrableFn::Zero,
        })
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// `g = a + alpha·y + beta·z`.
#[derive(Clone, Copy, Debug)]
pub struct LinearGenerator {
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl LinearGenerator {
    pub fn in_y(alpha: f64) -> Self {
        Self {
            a: 0.0,
            alpha,
            beta: 0.0,
        }
    }
}

impl Generator for LinearGenerator {
    fn eval(&self, _t: f64, y: f64, z: f64) -> f64 {
        self.a + self.alpha * y + self.beta * z
    }

    fn growth(&self) -> GrowthSpec {
        GrowthSpec::new(self.a.abs(), self.alpha.abs(), self.beta.abs(), IntegrableFn::Zero)
    }

    fn is_zero(&self) -> bool {
        self.a == 0.0 && self.alpha == 0.0 && self.beta == 0.0
    }
}

/// `g = f(y) z²`.
#[derive(Clone, Debug)]
pub struct QuadraticGenerator {
    pub f: IntegrableFn,
}

impl Generator for QuadraticGenerator {
    fn eval(&self, _t: f64, y: f64, z: f64) -> f64 {
        self.f.value(y) * z * z
    }

    fn growth(&self) -> GrowthSpec {
        GrowthSpec::new(0.0, 0.0, 0.0, self.f.clone())
    }

    fn quadratic_coefficient(&self) -> Option<&IntegrableFn> {
        Some(&self.f)
    }

    fn mixed_form(&self) -> Option<MixedGenerator> {
        Some(MixedGenerator {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            f: self.f.clone(),
        })
    }

    fn is_zero(&self) -> bool {
        self.f.is_zero()
    }
}

/// `g = a + b|y| + c|z| + f(y) z²`, the class preserved by the space transform.
#[derive(Clone, Debug)]
pub struct MixedGenerator {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub f: IntegrableFn,
}

impl Generator for MixedGenerator {
    fn eval(&self, _t: f64, y: f64, z: f64) -> f64 {
        self.a + self.b * y.abs() + self.c * z.abs() + self.f.value(y) * z * z
    }

    fn growth(&self) -> GrowthSpec {
        GrowthSpec::new(self.a.abs(), self.b.abs(), self.c.abs(), self.f.clone())
    }

    fn quadratic_coefficient(&self) -> Option<&IntegrableFn> {
        Some(&self.f)
    }

    fn mixed_form(&self) -> Option<MixedGenerator> {
        Some(self.clone())
    }

    fn is_zero(&self) -> bool {
        self.a == 0.0 && self.b == 0.0 && self.c == 0.0 && self.f.is_zero()
    }
}

type GeneratorFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Generator from a closure with a declared growth bound.
#[derive(Clone)]
pub struct FnGenerator {
    g: GeneratorFn,
    growth: GrowthSpec,
}

impl fmt::Debug for FnGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnGenerator").field("growth", &self.growth).finish()
    }
}

impl FnGenerator {
    pub fn new<F>(g: F, growth: GrowthSpec) -> Self
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self { g: Arc::new(g), growth }
    }
}

impl Generator for FnGenerator {
    fn eval(&self, t: f64, y: f64, z: f64) -> f64 {
        (self.g)(t, y, z)
    }

    fn growth(&self) -> GrowthSpec {
        self.growth.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn built_in_generators_respect_their_growth() {
        let bump = IntegrableFn::Gaussian {
            height: -0.8,
            center: 1.5,
            width: 0.7,
        };
        let gens: Vec<SharedGenerator> = vec![
            Arc::new(ZeroGenerator),
            Arc::new(LinearGenerator {
                a: -1.0,
                alpha: 0.5,
                beta: -2.0,
            }),
            Arc::new(QuadraticGenerator { f: bump.clone() }),
            Arc::new(MixedGenerator {
                a: 1.0,
                b: 0.3,
                c: 0.2,
                f: bump,
            }),
        ];
        let ys: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.1).collect();
        let zs: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.25).collect();
        for g in gens {
            assert_eq!(g.growth().violation(g.as_ref(), 0.0, &ys, &zs), None);
        }
    }

    #[test]
    fn violation_is_detected() {
        let g = FnGenerator::new(|_, y, _| y * y, GrowthSpec::new(1.0, 1.0, 0.0, IntegrableFn::Zero));
        assert!(g.growth().violation(&g, 0.0, &[0.5, 3.0], &[0.0]).is_some());
    }
}
