use super::{TransformError, ZvonkinMap};

/// A twice weakly differentiable map of the state space.
pub trait SpaceMap {
    fn u(&self, x: f64) -> f64;
    fn du(&self, x: f64) -> f64;
    fn d2u(&self, x: f64) -> f64;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityMap;

impl SpaceMap for IdentityMap {
    fn u(&self, x: f64) -> f64 {
        x
    }

    fn du(&self, _x: f64) -> f64 {
        1.0
    }

    fn d2u(&self, _x: f64) -> f64 {
        0.0
    }
}

impl SpaceMap for ZvonkinMap {
    fn u(&self, x: f64) -> f64 {
        ZvonkinMap::u(self, x)
    }

    fn du(&self, x: f64) -> f64 {
        ZvonkinMap::du(self, x)
    }

    fn d2u(&self, x: f64) -> f64 {
        ZvonkinMap::d2u(self, x)
    }
}

/// Maximum over nodes of the discrete Itô–Krylov defect
/// `|u(Y_i) - u(Y_0) - Σ u'(Y)(-g Δt + Z ΔW) - ½ Σ u''(Y) Z² Δt|`,
/// left-point sums. `times`, `y` have one more entry than `z`, `g`, `dw`.
pub fn ito_krylov_residual<U: SpaceMap + ?Sized>(
    map: &U,
    times: &[f64],
    y: &[f64],
    z: &[f64],
    g: &[f64],
    dw: &[f64],
) -> Result<f64, TransformError> {
    let n = times.len().saturating_sub(1);
    if y.len() != n + 1 || z.len() != n || g.len() != n || dw.len() != n {
        return Err(TransformError::Misaligned(format!(
            "{} times, {} Y, {} Z, {} g, {} dW",
            times.len(),
            y.len(),
            z.len(),
            g.len(),
            dw.len()
        )));
    }
    let u0 = map.u(y[0]);
    let mut sum = 0.0;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let dt = times[i + 1] - times[i];
        sum += map.du(y[i]) * (-g[i] * dt + z[i] * dw[i]) + 0.5 * map.d2u(y[i]) * z[i] * z[i] * dt;
        worst = worst.max((map.u(y[i + 1]) - u0 - sum).abs());
    }
    Ok(worst)
}
