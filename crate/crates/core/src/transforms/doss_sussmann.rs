use std::sync::Arc;

use super::{GrowthSpec, SharedGenerator, TransformError};
use crate::flows::{flow_inverse, FlowMap, FlowValue, InverseConfig, TableStats};

/// Change of variables `Y = Φ(t, Ỹ)`, `Z = ∂Φ(t, Ỹ) Z̃` that removes the
/// rough integral from the BSDE.
#[derive(Clone)]
pub struct DossSussmann {
    flow: Arc<dyn FlowMap>,
    base: SharedGenerator,
    inverse: InverseConfig,
}

/// Growth constants of the transformed generator measured from flow extrema:
/// `|g̃| <= a + b|ỹ| + c|z̃| + (f(|Φ|) ∂Φ + ½|∂²Φ|/∂Φ) z̃²`.
#[derive(Clone, Debug)]
pub struct TransportedGrowth {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub base: GrowthSpec,
    pub max_d2_ratio: f64,
}

impl TransportedGrowth {
    pub fn from_stats(base: GrowthSpec, stats: &TableStats) -> Self {
        Self {
            a: (base.a + base.b * stats.sup_phi_at_zero) / stats.min_dphi,
            b: base.b * stats.max_dphi / stats.min_dphi,
            c: base.c,
            max_d2_ratio: stats.max_d2phi_over_dphi,
            base,
        }
    }

    /// Quadratic coefficient of the bound at a flow value.
    pub fn f_part(&self, v: &FlowValue) -> f64 {
        self.base.f_envelope(v.phi.abs()) * v.dphi + 0.5 * v.d2phi.abs() / v.dphi
    }

    pub fn bound(&self, v: &FlowValue, ztil: f64) -> f64 {
        self.a + self.b * v.y.abs() + self.c * ztil.abs() + self.f_part(v) * ztil * ztil
    }

    /// `C'` in `∫_{-L}^{L} |f̃| <= ‖f‖₁ + C'`.
    pub fn integrability_offset(&self, half_width: f64) -> f64 {
        half_width * self.max_d2_ratio
    }
}

impl DossSussmann {
    pub fn new(flow: Arc<dyn FlowMap>, base: SharedGenerator) -> Self {
        Self {
            flow,
            base,
            inverse: InverseConfig::default(),
        }
    }

    pub fn with_inverse_config(mut self, inverse: InverseConfig) -> Self {
        self.inverse = inverse;
        self
    }

    pub fn flow(&self) -> &Arc<dyn FlowMap> {
        &self.flow
    }

    pub fn base(&self) -> &SharedGenerator {
        &self.base
    }

    fn flow_value(&self, t: f64, ytil: f64) -> Result<FlowValue, TransformError> {
        let v = self.flow.value(t, ytil)?;
        if !(v.dphi > 0.0) {
            return Err(TransformError::Positivity {
                t,
                y: ytil,
                dphi: v.dphi,
            });
        }
        Ok(v)
    }

    /// `g̃(t, ỹ, z̃) = (g(t, Φ, ∂Φ z̃) + ½ ∂²Φ z̃²) / ∂Φ` with the flow at `(t, ỹ)`.
    pub fn generator(&self, t: f64, ytil: f64, ztil: f64) -> Result<f64, TransformError> {
        if self.flow.is_identity() {
            return Ok(self.base.eval(t, ytil, ztil));
        }
        let v = self.flow_value(t, ytil)?;
        Ok((self.base.eval(t, v.phi, v.dphi * ztil) + 0.5 * v.d2phi * ztil * ztil) / v.dphi)
    }

    /// `(Ỹ, Z̃) = (Φ⁻¹(t, Y), Z / ∂Φ(t, Ỹ))`.
    pub fn forward(&self, t: f64, y: f64, z: f64) -> Result<(f64, f64), TransformError> {
        if self.flow.is_identity() {
            return Ok((y, z));
        }
        let ytil = flow_inverse(self.flow.as_ref(), t, y, &self.inverse)?;
        let v = self.flow_value(t, ytil)?;
        Ok((ytil, z / v.dphi))
    }

    /// `(Y, Z) = (Φ(t, Ỹ), ∂Φ(t, Ỹ) Z̃)`.
    pub fn inverse(&self, t: f64, ytil: f64, ztil: f64) -> Result<(f64, f64), TransformError> {
        if self.flow.is_identity() {
            return Ok((ytil, ztil));
        }
        let v = self.flow_value(t, ytil)?;
        Ok((v.phi, v.dphi * ztil))
    }

    /// `f̃(t, ỹ) = f(Φ) ∂Φ + ½ ∂²Φ / ∂Φ` for a base generator `h + f(y) z²`.
    pub fn tilde_f(&self, t: f64, ytil: f64) -> Result<f64, TransformError> {
        let f = self.base.quadratic_coefficient().ok_or(TransformError::MissingGrowth)?;
        if self.flow.is_identity() {
            return Ok(f.value(ytil));
        }
        let v = self.flow_value(t, ytil)?;
        Ok(f.value(v.phi) * v.dphi + 0.5 * v.d2phi / v.dphi)
    }

    pub fn transported_growth(&self, stats: &TableStats) -> TransportedGrowth {
        TransportedGrowth::from_stats(self.base.growth(), stats)
    }

    /// Spot-checks the transported bound on `ys × zs` at time `t`; returns the
    /// first violating point.
    pub fn growth_violation(
        &self,
        growth: &TransportedGrowth,
        t: f64,
        ys: &[f64],
        zs: &[f64],
    ) -> Result<Option<(f64, f64)>, TransformError> {
        for &y in ys {
            let v = if self.flow.is_identity() {
                FlowValue::identity(t, y)
            } else {
                self.flow_value(t, y)?
            };
            for &z in zs {
                let g = self.generator(t, y, z)?;
                let bound = growth.bound(&v, z);
                if g.abs() > bound * (1.0 + 1e-12) + 1e-12 {
                    return Ok(Some((y, z)));
                }
            }
        }
        Ok(None)
    }
}
