//! Cubic Hermite helpers shared by the profile and diffeomorphism tables.

/// Index `k` with `xs[k] <= x <= xs[k + 1]`, or `None` outside the table.
pub(crate) fn locate(xs: &[f64], x: f64) -> Option<usize> {
    let n = xs.len();
    if n < 2 || !(x >= xs[0] && x <= xs[n - 1]) {
        return None;
    }
    let k = xs.partition_point(|&v| v <= x);
    Some(k.saturating_sub(1).min(n - 2))
}

/// Cubic Hermite interpolant on `[x0, x1]`.
pub(crate) fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let dx = x1 - x0;
    let s = (x - x0) / dx;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * dx * d0 + h01 * y1 + h11 * dx * d1
}

/// Derivative of [`hermite`] with respect to `x`.
pub(crate) fn hermite_deriv(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let dx = x1 - x0;
    let s = (x - x0) / dx;
    let s2 = s * s;
    let dh00 = 6.0 * s2 - 6.0 * s;
    let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
    let dh01 = -6.0 * s2 + 6.0 * s;
    let dh11 = 3.0 * s2 - 2.0 * s;
    (dh00 * y0 + dh01 * y1) / dx + dh10 * d0 + dh11 * d1
}

/// Fritsch–Carlson limiting of node slopes so that the Hermite interpolant of
/// increasing data stays increasing. Slopes already inside the monotonicity
/// region are returned unchanged.
pub(crate) fn monotone_slopes(xs: &[f64], ys: &[f64], ds: &[f64]) -> Vec<f64> {
    let mut out = ds.to_vec();
    for k in 0..xs.len().saturating_sub(1) {
        let delta = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
        if delta == 0.0 {
            out[k] = 0.0;
            out[k + 1] = 0.0;
            continue;
        }
        let a = out[k] / delta;
        let b = out[k + 1] / delta;
        if a < 0.0 {
            out[k] = 0.0;
        }
        if b < 0.0 {
            out[k + 1] = 0.0;
        }
        let r2 = a * a + b * b;
        if r2 > 9.0 {
            let tau = 3.0 / r2.sqrt();
            out[k] = tau * a * delta;
            out[k + 1] = tau * b * delta;
        }
    }
    out
}

/// Composite four-point Gauss–Legendre nodes and weights on `[-1, 1]`.
pub(crate) const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
    (-0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
];

/// Four-point Gauss–Legendre integral of `f` over `[a, b]`.
pub(crate) fn gauss4(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GAUSS4.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}
