use std::path::Path;
use std::sync::Arc;

use super::{Generator, GrowthSpec, IntegrableFn, TransformError};
use crate::flows::{SharedField, VectorField};
use crate::quadrature::integrate;

/// Default half-width `L` of the working domain `[-L, L]`.
pub const DEFAULT_DOMAIN: f64 = 50.0;

const CELLS: usize = 4096;

/// How `u'^{-1}(x)` in the transformed coefficients is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DerivativeReading {
    /// `u'(u⁻¹(x))`
    #[default]
    Composed,
    /// `1 / u'(x)`
    Reciprocal,
}

/// `u(x) = ∫₀ˣ exp(2F(y)) dy` with `F(y) = ∫₀^y f`, cached on a grid of
/// `[-L, L]` that contains 0 and the breakpoints of `f`; affine outside.
#[derive(Clone, Debug)]
pub struct ZvonkinMap {
    f: IntegrableFn,
    half_width: f64,
    tol: f64,
    l1: f64,
    identity: bool,
    nodes: Vec<f64>,
    big_f: Vec<f64>,
    u: Vec<f64>,
}

impl ZvonkinMap {
    pub fn build(f: IntegrableFn, half_width: f64, tol: f64) -> Result<Self, TransformError> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(TransformError::InvalidDomain(half_width));
        }
        let l1 = f.l1_norm(tol)?;
        let identity = f.is_zero();
        let mut map = Self {
            f,
            half_width,
            tol,
            l1,
            identity,
            nodes: Vec::new(),
            big_f: Vec::new(),
            u: Vec::new(),
        };
        if identity {
            return Ok(map);
        }
        let mut nodes: Vec<f64> = (0..=CELLS)
            .map(|k| -half_width + 2.0 * half_width * k as f64 / CELLS as f64)
            .chain(map.f.breakpoints().into_iter().filter(|x| x.abs() < half_width))
            .chain(std::iter::once(0.0))
            .collect();
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * half_width);
        let zero = nodes.iter().position(|&x| x.abs() <= 1e-12 * half_width).expect("0 is a node");
        nodes[zero] = 0.0;
        let n = nodes.len();
        map.nodes = nodes;
        map.big_f = vec![0.0; n];
        map.u = vec![0.0; n];
        for k in zero..n - 1 {
            map.big_f[k + 1] = map.big_f[k] + map.f_increment(k, map.nodes[k + 1])?;
            map.u[k + 1] = map.u[k] + map.u_increment(k, map.nodes[k + 1])?;
        }
        for k in (0..zero).rev() {
            map.big_f[k] = map.big_f[k + 1] - map.f.integral(map.nodes[k], map.nodes[k + 1], tol)?;
            map.u[k] = map.u[k + 1] - map.u_increment(k, map.nodes[k + 1])?;
        }
        Ok(map)
    }

    pub fn f(&self) -> &IntegrableFn {
        &self.f
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// `‖f‖_{L¹(ℝ)}`.
    pub fn l1_norm(&self) -> f64 {
        self.l1
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// `[u(-L), u(L)]`.
    pub fn range(&self) -> (f64, f64) {
        if self.identity {
            (-self.half_width, self.half_width)
        } else {
            (self.u[0], self.u[self.u.len() - 1])
        }
    }

    /// `e^{2‖f‖₁}`, the quasi-isometry constant.
    pub fn isometry_constant(&self) -> f64 {
        (2.0 * self.l1).exp()
    }

    fn cell(&self, x: f64) -> usize {
        let idx = self.nodes.partition_point(|&s| s <= x);
        idx.clamp(1, self.nodes.len() - 1) - 1
    }

    /// `∫_{x_k}^x f` for `x` in cell `k`.
    fn f_increment(&self, k: usize, x: f64) -> Result<f64, TransformError> {
        let a = self.nodes[k];
        match self.f.constant_on(a, self.nodes[k + 1]) {
            Some(c) => Ok(c * (x - a)),
            None => Ok(self.f.integral(a, x, self.tol)?),
        }
    }

    /// `∫_{x_k}^x exp(2F)` for `x` in cell `k`.
    fn u_increment(&self, k: usize, x: f64) -> Result<f64, TransformError> {
        let a = self.nodes[k];
        let scale = (2.0 * self.big_f[k]).exp();
        match self.f.constant_on(a, self.nodes[k + 1]) {
            Some(c) if c == 0.0 => Ok(scale * (x - a)),
            Some(c) => Ok(scale * (2.0 * c * (x - a)).exp_m1() / (2.0 * c)),
            None => {
                let inner = |s: f64| {
                    let fi = self.f.integral(a, s, self.tol * 1e-2).unwrap_or(f64::NAN);
                    (2.0 * fi).exp()
                };
                Ok(scale * integrate(inner, a, x, self.tol)?)
            }
        }
    }

    pub fn big_f(&self, x: f64) -> f64 {
        if self.identity {
            return 0.0;
        }
        let x = x.clamp(-self.half_width, self.half_width);
        let k = self.cell(x);
        self.big_f[k] + self.f_increment(k, x).expect("quadrature converged at build time")
    }

    pub fn u(&self, x: f64) -> f64 {
        if self.identity {
            return x;
        }
        let n = self.nodes.len();
        if x > self.half_width {
            return self.u[n - 1] + self.du(self.half_width) * (x - self.half_width);
        }
        if x < -self.half_width {
            return self.u[0] + self.du(-self.half_width) * (x + self.half_width);
        }
        let k = self.cell(x);
        self.u[k] + self.u_increment(k, x).expect("quadrature converged at build time")
    }

    /// `u' = exp(2F)`.
    pub fn du(&self, x: f64) -> f64 {
        if self.identity {
            return 1.0;
        }
        (2.0 * self.big_f(x)).exp()
    }

    /// `u'' = 2 f u'` (zero on the affine extension).
    pub fn d2u(&self, x: f64) -> f64 {
        if self.identity || x.abs() > self.half_width {
            return 0.0;
        }
        2.0 * self.f.value(x) * self.du(x)
    }

    /// `u⁻¹(y)`, using the affine extension outside `[u(-L), u(L)]`.
    pub fn inverse(&self, y: f64) -> f64 {
        if self.identity {
            return y;
        }
        let (lo, hi) = self.range();
        if y > hi {
            return self.half_width + (y - hi) / self.du(self.half_width);
        }
        if y < lo {
            return -self.half_width + (y - lo) / self.du(-self.half_width);
        }
        let k = self.u.partition_point(|&v| v <= y).clamp(1, self.u.len() - 1) - 1;
        let (mut a, mut b) = (self.nodes[k], self.nodes[k + 1]);
        let mut x = a + (b - a) * (y - self.u[k]) / (self.u[k + 1] - self.u[k]);
        for _ in 0..100 {
            let r = self.u(x) - y;
            if r.abs() <= 1e-14 * y.abs().max(1.0) {
                break;
            }
            if r < 0.0 {
                a = x;
            } else {
                b = x;
            }
            let newton = x - r / self.du(x);
            x = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
            if b - a <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                break;
            }
        }
        x
    }

    /// `u⁻¹(y)`, failing outside the cached range.
    pub fn checked_inverse(&self, y: f64) -> Result<f64, TransformError> {
        let (lo, hi) = self.range();
        if self.identity || (y >= lo && y <= hi) {
            Ok(self.inverse(y))
        } else {
            Err(TransformError::Range { y, lo, hi })
        }
    }

    /// `x, F(x), u(x), u'(x)` rows at `xs`.
    pub fn write_csv<P: AsRef<Path>>(&self, file: P, xs: &[f64]) -> Result<(), TransformError> {
        let mut w = csv::Writer::from_path(file)?;
        w.write_record(["x", "F", "u", "uprime"])?;
        for &x in xs {
            w.write_record([x, self.big_f(x), self.u(x), self.du(x)].map(|v| v.to_string()))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Transformed vector field `G̃(x) = u'(u⁻¹x) G(u⁻¹x)` under the default reading.
#[derive(Clone)]
pub struct ZvonkinField {
    map: Arc<ZvonkinMap>,
    field: SharedField,
    reading: DerivativeReading,
}

impl ZvonkinField {
    pub fn new(map: Arc<ZvonkinMap>, field: SharedField, reading: DerivativeReading) -> Self {
        Self { map, field, reading }
    }

    fn value_at(&self, x: f64) -> f64 {
        let w = self.map.inverse(x);
        match self.reading {
            DerivativeReading::Composed => self.map.du(w) * self.field.value(w),
            DerivativeReading::Reciprocal => self.field.value(w) / self.map.du(x),
        }
    }

    /// `(G̃, G̃', G̃'')` in closed form for the composed reading.
    fn composed(&self, x: f64) -> [f64; 3] {
        let w = self.map.inverse(x);
        let du = self.map.du(w);
        let g = self.field.derivatives(w, 2);
        let (f, df) = if w.abs() <= self.map.half_width() {
            (self.map.f().value(w), self.map.f().derivative(w))
        } else {
            (0.0, 0.0)
        };
        [
            du * g[0],
            2.0 * f * g[0] + g[1],
            (2.0 * df * g[0] + 2.0 * f * g[1] + g[2]) / du,
        ]
    }
}

impl VectorField for ZvonkinField {
    fn derivatives(&self, x: f64, order: usize) -> [f64; 5] {
        let mut out = [0.0; 5];
        if self.field.is_zero() {
            return out;
        }
        if self.map.is_identity() {
            return self.field.derivatives(x, order);
        }
        let h = 1e-3 * x.abs().max(1.0);
        match self.reading {
            DerivativeReading::Composed => {
                let c = self.composed(x);
                out[..3].copy_from_slice(&c);
                if order >= 3 {
                    let (up, down) = (self.composed(x + h)[2], self.composed(x - h)[2]);
                    out[3] = (up - down) / (2.0 * h);
                    out[4] = (up - 2.0 * c[2] + down) / (h * h);
                }
            }
            DerivativeReading::Reciprocal => {
                let v: Vec<f64> = (-3..=3).map(|k| self.value_at(x + k as f64 * h)).collect();
                out[0] = v[3];
                out[1] = (v[4] - v[2]) / (2.0 * h);
                out[2] = (v[4] - 2.0 * v[3] + v[2]) / (h * h);
                out[3] = (v[5] - 2.0 * v[4] + 2.0 * v[2] - v[1]) / (2.0 * h.powi(3));
                out[4] = (v[5] - 4.0 * v[4] + 6.0 * v[3] - 4.0 * v[2] + v[1]) / h.powi(4);
            }
        }
        out
    }

    fn is_zero(&self) -> bool {
        self.field.is_zero()
    }
}

/// `g̃(t, y, z) = u'(u⁻¹y)(a + b|u⁻¹y|) + c|z|` under the default reading.
#[derive(Clone, Debug)]
pub struct ZvonkinGenerator {
    pub map: Arc<ZvonkinMap>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub reading: DerivativeReading,
}

impl ZvonkinGenerator {
    /// Evaluation that fails outside `[u(-L), u(L)]`.
    pub fn checked_eval(&self, y: f64, z: f64) -> Result<f64, TransformError> {
        self.map.checked_inverse(y)?;
        Ok(Generator::eval(self, 0.0, y, z))
    }

    /// `K a + K² b|y| + c|z|` with `K = e^{2‖f‖₁}`, valid for the composed reading.
    pub fn growth_bound(&self, y: f64, z: f64) -> f64 {
        let k = self.map.isometry_constant();
        k * self.a + k * k * self.b * y.abs() + self.c * z.abs()
    }
}

/// Unchecked evaluation: `u⁻¹` uses the affine continuation, so the solver
/// can run and range escapes are reported when mapping back.
impl Generator for ZvonkinGenerator {
    fn eval(&self, _t: f64, y: f64, z: f64) -> f64 {
        let w = self.map.inverse(y);
        let scale = match self.reading {
            DerivativeReading::Composed => self.map.du(w),
            DerivativeReading::Reciprocal => 1.0 / self.map.du(y),
        };
        scale * (self.a + self.b * w.abs()) + self.c * z.abs()
    }

    fn growth(&self) -> GrowthSpec {
        let k = self.map.isometry_constant();
        GrowthSpec::new(k * self.a.abs(), k * k * self.b.abs(), self.c.abs(), IntegrableFn::Zero)
    }

    fn is_zero(&self) -> bool {
        self.a == 0.0 && self.b == 0.0 && self.c == 0.0
    }
}
