use super::{FlowError, FlowMap};

#[derive(Clone, Copy, Debug)]
pub struct InverseConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Maximum number of doublings of the bracketing step.
    pub max_growth: usize,
}

impl Default for InverseConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            max_growth: 60,
        }
    }
}

/// Solves `φ(t, y) = x` for `y` with Newton steps safeguarded by bisection.
pub fn flow_inverse<M: FlowMap + ?Sized>(map: &M, t: f64, x: f64, config: &InverseConfig) -> Result<f64, FlowError> {
    if map.is_identity() {
        return Ok(x);
    }
    let eval = |y: f64| map.value(t, y).map(|v| (v.phi - x, v.dphi));
    let mut y = x;
    let (mut r, mut dr) = eval(y)?;
    if r.abs() <= config.tol {
        return Ok(y);
    }

    // first try plain Newton from x, then bracket
    let (mut lo, mut hi);
    let mut step = (r / dr).abs().max(1e-3 * x.abs().max(1.0));
    let mut growth = 0;
    if r < 0.0 {
        lo = y;
        loop {
            let cand = lo + step;
            let (rc, _) = eval(cand)?;
            if rc >= 0.0 {
                hi = cand;
                break;
            }
            lo = cand;
            step *= 2.0;
            growth += 1;
            if growth > config.max_growth {
                return Err(FlowError::Bracket { t, x, growth });
            }
        }
    } else {
        hi = y;
        loop {
            let cand = hi - step;
            let (rc, _) = eval(cand)?;
            if rc <= 0.0 {
                lo = cand;
                break;
            }
            hi = cand;
            step *= 2.0;
            growth += 1;
            if growth > config.max_growth {
                return Err(FlowError::Bracket { t, x, growth });
            }
        }
    }

    // rtsafe: Newton inside [lo, hi], bisect when it leaves or stalls
    let mut last_width = hi - lo;
    for _ in 0..config.max_iter {
        let newton = y - r / dr;
        let y_next = if dr > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        y = y_next;
        (r, dr) = eval(y)?;
        if r.abs() <= config.tol {
            return Ok(y);
        }
        if r < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let width = hi - lo;
        if width <= 4.0 * f64::EPSILON * y.abs().max(1.0) {
            return Ok(y);
        }
        if width > 0.5 * last_width {
            // slow progress: force a bisection next round
            dr = 0.0;
        }
        last_width = width;
    }
    Err(FlowError::NoConvergence { t, x })
}

/// `(ψ, ∂ψ, ∂²ψ)` at `(t, x)` with `ψ = φ(t, ·)⁻¹`.
pub fn flow_inverse_with_derivatives<M: FlowMap + ?Sized>(
    map: &M,
    t: f64,
    x: f64,
    config: &InverseConfig,
) -> Result<(f64, f64, f64), FlowError> {
    if map.is_identity() {
        return Ok((x, 1.0, 0.0));
    }
    let y = flow_inverse(map, t, x, config)?;
    let v = map.value(t, y)?;
    Ok((y, 1.0 / v.dphi, -v.d2phi / v.dphi.powi(3)))
}
