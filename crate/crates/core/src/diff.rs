//! Central finite differences.

/// Step for first derivatives with a second-order stencil: ε^{1/3}·max(1,|x|).
pub fn step_first(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Step for the fourth-order stencil used inside nested (Jacobi) derivatives: ε^{1/4}·max(1,|x|).
pub fn step_nested(x: f64) -> f64 {
    f64::EPSILON.powf(0.25) * x.abs().max(1.0)
}

/// Second-order central difference of `f` with respect to component `k` of `z`.
pub fn central<F>(f: F, z: &[f64], k: usize) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let h = step_first(z[k]);
    let mut w = z.to_vec();
    w[k] = z[k] + h;
    let hi = w[k];
    let fp = f(&w);
    w[k] = z[k] - h;
    let lo = w[k];
    let fm = f(&w);
    (fp - fm) / (hi - lo)
}

/// Gradient by second-order central differences.
pub fn gradient<F>(f: F, z: &[f64]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    (0..z.len()).map(|k| central(&f, z, k)).collect()
}

/// Fourth-order central difference of a vector-valued `f` along component `k`.
///
/// Returns df/dz_k for every output component.
pub fn central4_vec<F>(f: F, z: &[f64], k: usize) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let h = step_nested(z[k]);
    let mut w = z.to_vec();
    let mut eval = |offset: f64| {
        w[k] = z[k] + offset;
        f(&w)
    };
    let f2p = eval(2.0 * h);
    let f1p = eval(h);
    let f1m = eval(-h);
    let f2m = eval(-2.0 * h);
    f2p.iter()
        .zip(&f1p)
        .zip(f1m.iter().zip(&f2m))
        .map(|((a, b), (c, d))| (-a + 8.0 * b - 8.0 * c + d) / (12.0 * h))
        .collect()
}

/// Scalar fourth-order central difference of a one-argument function.
pub fn derivative4<F>(f: F, x: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let h = step_nested(x);
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_matches_polynomial_derivative() {
        let f = |z: &[f64]| z[0].powi(3) + 2.0 * z[0] * z[1];
        let g = gradient(f, &[1.5, -0.5]);
        assert!((g[0] - (3.0 * 2.25 - 1.0)).abs() < 1e-9);
        assert!((g[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn fourth_order_is_tight_on_smooth_functions() {
        let d = derivative4(f64::sin, 0.7);
        assert!((d - 0.7f64.cos()).abs() < 1e-11);
        let v = central4_vec(|z: &[f64]| vec![z[0].exp(), z[0] * z[0]], &[0.3], 0);
        assert!((v[0] - 0.3f64.exp()).abs() < 1e-11);
        assert!((v[1] - 0.6).abs() < 1e-11);
    }
}
