//! Adaptive Gauss–Kronrod (7/15) quadrature.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature on [{a}, {b}] did not reach tolerance {tol} (estimate {estimate}, error {error})")]
    NoConvergence {
        a: f64,
        b: f64,
        tol: f64,
        estimate: f64,
        error: f64,
    },
    #[error("integrand is not finite at x = {0}")]
    NonFinite(f64),
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Kronrod panel: (K15 estimate, |K15 - G7|).
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64), QuadratureError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::NonFinite(x))
        }
    };
    let fc = eval(c)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = h * XGK[k];
        let s = eval(c - dx)? + eval(c + dx)?;
        kronrod += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    Ok((kronrod * h, ((kronrod - gauss) * h).abs()))
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by bisection of
/// the panel with the largest error estimate, up to `max_panels` panels.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, QuadratureError> {
    integrate_with_limit(f, a, b, tol, 2000)
}

pub fn integrate_with_limit<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate_with_limit(f, b, a, tol, max_panels).map(|v| -v);
    }
    let (v, e) = gauss_kronrod(&f, a, b)?;
    let mut panels = vec![(a, b, v, e)];
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= tol {
            return Ok(total);
        }
        if panels.len() >= max_panels {
            return Err(QuadratureError::NoConvergence {
                a,
                b,
                tol,
                estimate: total,
                error: err,
            });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (pa, pb, _, _) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        if !(mid > pa && mid < pb) {
            return Err(QuadratureError::NoConvergence {
                a,
                b,
                tol,
                estimate: total,
                error: err,
            });
        }
        let (v1, e1) = gauss_kronrod(&f, pa, mid)?;
        let (v2, e2) = gauss_kronrod(&f, mid, pb)?;
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
}

/// Integral over `[a, b]` split at the interior `breakpoints`.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<f64, QuadratureError> {
    let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut nodes = vec![lo];
    nodes.extend(breakpoints.iter().copied().filter(|&x| x > lo && x < hi));
    nodes.push(hi);
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let share = tol / (nodes.len() - 1) as f64;
    let mut total = 0.0;
    for w in nodes.windows(2) {
        total += integrate(&f, w[0], w[1], share)?;
    }
    Ok(sign * total)
}
