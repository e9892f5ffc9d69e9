//! Analytic trajectories, acceleration expansions and kinetic-energy series.
//!
//! The oscillatory solutions have removable `1/η` and `1/⟨η²⟩` poles. They are
//! evaluated through the kernels of [`kernels`], which are algebraically equal
//! to the textbook forms but stay accurate for small phase arguments.

use serde::{Deserialize, Serialize};

use crate::algebra::DeformationFn;
use crate::dynamics::gup_velocity_to_scaled_momentum;
use crate::error::{Error, Result};

/// Phase argument below which the Taylor branch is used.
pub const TAYLOR_SWITCH: f64 = 1e-4;

/// `(s, k, q, r)` with `s = sin(ωt)/ω`, `k = (1 − cos ωt)/ω`,
/// `q = (1 − cos ωt)/ω²`, `r = (ωt − sin ωt)/ω²`.
pub fn kernels(omega: f64, t: f64) -> (f64, f64, f64, f64) {
    let u = omega * t;
    if u.abs() < TAYLOR_SWITCH {
        let u2 = u * u;
        let s = t * (1.0 - u2 / 6.0 + u2 * u2 / 120.0);
        let k = t * u * (0.5 - u2 / 24.0 + u2 * u2 / 720.0);
        let q = t * t * (0.5 - u2 / 24.0 + u2 * u2 / 720.0);
        let r = t * t * u * (1.0 / 6.0 - u2 / 120.0 + u2 * u2 / 5040.0);
        return (s, k, q, r);
    }
    let half = (0.5 * u).sin();
    let one_minus_cos = 2.0 * half * half;
    let s = u.sin() / omega;
    let k = one_minus_cos / omega;
    let q = one_minus_cos / (omega * omega);
    let r = u_minus_sin(u) / (omega * omega);
    (s, k, q, r)
}

/// `u − sin u`, by its series when `|u| < 1`.
fn u_minus_sin(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return u - u.sin();
    }
    let u2 = u * u;
    let mut term = u * u2 / 6.0;
    let mut sum = 0.0f64;
    let mut n = 3.0;
    while term.abs() > 1e-18 * sum.abs() || sum == 0.0 {
        sum += term;
        term *= -u2 / ((n + 1.0) * (n + 2.0));
        n += 2.0;
        if term == 0.0 {
            break;
        }
    }
    sum
}

/// Initial position and velocity in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarInit {
    pub x01: f64,
    pub x02: f64,
    pub v01: f64,
    pub v02: f64,
}

fn nc2d_core(omega: f64, c: f64, init: &PlanarInit, t: f64) -> (f64, f64) {
    let (s, k, q, r) = kernels(omega, t);
    let x1 = init.x01 + init.v01 * s + init.v02 * k + c * q;
    let x2 = init.x02 + init.v02 * s - init.v01 * k - c * r;
    (x1, x2)
}

/// Uniform fall (`H = p²/2m − m g X₁`) with `{X₁,X₂} = θ`, `{P₁,P₂} = η`.
pub fn nc2d_uniform_trajectory(m: f64, theta: f64, eta: f64, g: f64, init: &PlanarInit, t: f64) -> (f64, f64) {
    nc2d_core(eta / m, g - g * theta * eta, init, t)
}

/// Mass-free form with `γ = θm`, `α = η/m`.
pub fn nc2d_uniform_trajectory_scaled(gamma: f64, alpha: f64, g: f64, init: &PlanarInit, t: f64) -> (f64, f64) {
    nc2d_core(alpha, g - g * gamma * alpha, init, t)
}

/// Momenta `(P₁, P₂)` along the uniform-fall solution, with `P₂ = m(Ẋ₂ − mgθ)`.
pub fn nc2d_uniform_momenta(m: f64, theta: f64, eta: f64, g: f64, init: &PlanarInit, t: f64) -> (f64, f64) {
    let omega = eta / m;
    let (s, k, _, _) = kernels(omega, t);
    let (sin_u, cos_u) = if (omega * t).abs() < TAYLOR_SWITCH {
        (omega * s, 1.0 - omega * k)
    } else {
        (omega * t).sin_cos()
    };
    let b = m * init.v02 - m * m * g * theta;
    let p1 = m * init.v01 * cos_u + b * sin_u + m * g * s;
    let p2 = -m * init.v01 * sin_u + b * cos_u - m * g * k;
    (p1, p2)
}

/// Kinetic energy `P²/2m` of the canonical-NC uniform-fall solution.
pub fn nc2d_kinetic_energy(m: f64, theta: f64, eta: f64, g: f64, init: &PlanarInit, t: f64) -> f64 {
    let (p1, p2) = nc2d_uniform_momenta(m, theta, eta, g, init, t);
    (p1 * p1 + p2 * p2) / (2.0 * m)
}

/// Mass-free kinetic energy per unit mass under `γ = θm`, `α = η/m`.
pub fn nc2d_kinetic_energy_scaled_per_mass(gamma: f64, alpha: f64, g: f64, init: &PlanarInit, t: f64) -> f64 {
    nc2d_kinetic_energy(1.0, gamma, alpha, g, init, t)
}

/// `ẍ ≈ g + 3F′(0)g√βm|v| + (2F″(0) − F′(0)²)gβm²v²`.
pub fn gup_acceleration_first_order(fp0: f64, fpp0: f64, beta: f64, m: f64, v: f64, g: f64) -> f64 {
    let y = beta.sqrt() * m * v.abs();
    if y > 0.1 {
        log::warn!("series argument sqrt(beta) m |v| = {y:.3e} exceeds 0.1");
    }
    g + 3.0 * fp0 * g * y + (2.0 * fpp0 - fp0 * fp0) * g * y * y
}

/// Exact free-fall acceleration `g F (F + x F′)` at velocity `v`, `x = √β m |p′|`.
pub fn gup_acceleration_exact(f: &DeformationFn, beta: f64, m: f64, v: f64, g: f64) -> Result<f64> {
    let gamma = beta.sqrt() * m;
    let pp = gup_velocity_to_scaled_momentum(f, gamma, v)?;
    let x = gamma * pp.abs();
    let fv = f.value(x);
    Ok(g * fv * (fv + x * f.derivative(x)))
}

/// `3F′(0)|v|√β(m₁−m₂) + (2F″(0)−F′(0)²)v²β(m₁²−m₂²)`.
pub fn gup_eotvos(fp0: f64, fpp0: f64, beta: f64, m1: f64, m2: f64, v: f64) -> Result<f64> {
    gup_eotvos_pair(fp0, fpp0, beta, beta, m1, m2, v)
}

/// Eötvös parameter for two bodies with individual `β₁, β₂`.
pub fn gup_eotvos_pair(fp0: f64, fpp0: f64, beta1: f64, beta2: f64, m1: f64, m2: f64, v: f64) -> Result<f64> {
    if !(m1 > 0.0) {
        return Err(Error::NonPositiveMass(m1));
    }
    if !(m2 > 0.0) {
        return Err(Error::NonPositiveMass(m2));
    }
    let y1 = beta1.sqrt() * m1;
    let y2 = beta2.sqrt() * m2;
    Ok(3.0 * fp0 * v.abs() * (y1 - y2) + (2.0 * fpp0 - fp0 * fp0) * v * v * (y1 * y1 - y2 * y2))
}

/// [`gup_eotvos`] with `√β = 1/(c·m_P)`, i.e. minimal length at the Planck length.
pub fn gup_eotvos_planck(fp0: f64, fpp0: f64, m1: f64, m2: f64, v: f64, c: f64, m_p: f64) -> Result<f64> {
    let sb = 1.0 / (c * m_p);
    gup_eotvos(fp0, fpp0, sb * sb, m1, m2, v)
}

/// Initial position and velocity in three dimensions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialInit {
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
}

fn rotinv_core(omega2: f64, g: f64, init: &SpatialInit, t: f64) -> Vec<f64> {
    let omega = omega2.sqrt();
    let (s, _, q, _) = kernels(omega, t);
    // cos ωt = 1 − ω² q
    init.x0
        .iter()
        .zip(&init.v0)
        .enumerate()
        .map(|(i, (x0, v0))| {
            let fall = if i == 0 { g * q } else { 0.0 };
            x0 - omega2 * q * x0 + v0 * s - fall
        })
        .collect()
}

/// Uniform field with the rotationally invariant effective Hamiltonian,
/// `ẍ = −g δ_{i1} − ⟨η²⟩x/6m²`.
pub fn rotinv_uniform_trajectory(m: f64, eta2_mean: f64, g: f64, init: &SpatialInit, t: f64) -> Vec<f64> {
    rotinv_core(eta2_mean / (6.0 * m * m), g, init, t)
}

/// Mass-free form with `B = ⟨η²⟩/m²`.
pub fn rotinv_uniform_trajectory_scaled(b: f64, g: f64, init: &SpatialInit, t: f64) -> Vec<f64> {
    rotinv_core(b / 6.0, g, init, t)
}

/// Terms of the kinetic-energy series: `zero + first + second`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KineticSeries {
    /// `m v²/2`
    pub zero: f64,
    /// order √β
    pub first: f64,
    /// order β
    pub second: f64,
}

impl KineticSeries {
    pub fn total(&self) -> f64 {
        self.zero + self.first + self.second
    }

    fn check(self, y: f64) -> Self {
        if y > 0.1 {
            log::warn!("kinetic series argument {y:.3e} exceeds 0.1");
        }
        self
    }
}

/// `T = mv²/2 − F′(0)√βm²|v|v² + (5F′(0)² − F″(0))βm³v⁴/2`.
pub fn gup_kinetic_series(fp0: f64, fpp0: f64, beta: f64, m: f64, v: f64) -> KineticSeries {
    let sb = beta.sqrt();
    let v2 = v * v;
    KineticSeries {
        zero: m * v2 / 2.0,
        first: -fp0 * sb * m * m * v.abs() * v2,
        second: (5.0 * fp0 * fp0 - fpp0) * beta * m.powi(3) * v2 * v2 / 2.0,
    }
    .check(sb * m * v.abs())
}

/// Sum of the series over parts sharing `β` and velocity.
pub fn gup_kinetic_series_sum_over_parts(fp0: f64, fpp0: f64, beta: f64, masses: &[f64], v: f64) -> KineticSeries {
    let m: f64 = masses.iter().sum();
    let m2: f64 = masses.iter().map(|a| a * a).sum();
    let m3: f64 = masses.iter().map(|a| a * a * a).sum();
    let sb = beta.sqrt();
    let v2 = v * v;
    KineticSeries {
        zero: m * v2 / 2.0,
        first: -fp0 * sb * v.abs() * v2 * m2,
        second: (5.0 * fp0 * fp0 - fpp0) * beta * v2 * v2 / 2.0 * m3,
    }
}

/// `N` equal parts of mass `m_a`: `(whole body, sum over parts)`.
pub fn gup_kinetic_series_equal_parts(
    fp0: f64,
    fpp0: f64,
    beta: f64,
    n: usize,
    m_a: f64,
    v: f64,
) -> (KineticSeries, KineticSeries) {
    let nf = n as f64;
    let part = gup_kinetic_series(fp0, fpp0, beta, m_a, v);
    let whole = KineticSeries {
        zero: nf * part.zero,
        first: nf * nf * part.first,
        second: nf * nf * nf * part.second,
    };
    let sum = KineticSeries { zero: nf * part.zero, first: nf * part.first, second: nf * part.second };
    (whole, sum)
}

/// Series with `√β m = γ`: every term is linear in `m`.
pub fn gup_kinetic_series_scaled(fp0: f64, fpp0: f64, gamma: f64, m: f64, v: f64) -> KineticSeries {
    let v2 = v * v;
    KineticSeries {
        zero: m * v2 / 2.0,
        first: -fp0 * gamma * m * v.abs() * v2,
        second: (5.0 * fp0 * fp0 - fpp0) * gamma * gamma * m * v2 * v2 / 2.0,
    }
    .check(gamma * v.abs())
}

/// Exact `T = m p′²/2` with `p′` from the velocity inversion.
pub fn gup_exact_kinetic(f: &DeformationFn, gamma: f64, m: f64, v: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::NonPositiveMass(m));
    }
    let pp = gup_velocity_to_scaled_momentum(f, gamma, v)?;
    Ok(m * pp * pp / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    /// Unexpanded trajectory, reference for the stable kernels.
    fn nc2d_unexpanded(m: f64, th: f64, eta: f64, g: f64, i: &PlanarInit, t: f64) -> (f64, f64) {
        let w = eta / m;
        let a = m * m * g / (eta * eta) - m * m * g * th / eta + m * i.v02 / eta;
        let x1 = m * i.v01 / eta * (w * t).sin() + a * (1.0 - (w * t).cos()) + i.x01;
        let x2 = a * (w * t).sin() - m * i.v01 / eta * (1.0 - (w * t).cos()) - m * g / eta * t + m * g * th * t + i.x02;
        (x1, x2)
    }

    #[test]
    fn nc2d_matches_unexpanded_form() {
        let init = PlanarInit { x01: 0.3, x02: -1.0, v01: 0.7, v02: 0.2 };
        for t in [0.5, 3.0, 17.0] {
            let (a1, a2) = nc2d_uniform_trajectory(1.3, 0.02, 0.4, 9.8, &init, t);
            let (b1, b2) = nc2d_unexpanded(1.3, 0.02, 0.4, 9.8, &init, t);
            assert!(rel(a1, b1) < 1e-11 && rel(a2, b2) < 1e-11, "t={t}: {a1} {b1} {a2} {b2}");
        }
    }

    #[test]
    fn nc2d_limits() {
        let init = PlanarInit { x01: 1.0, x02: 2.0, v01: 3.0, v02: 4.0 };
        assert_eq!(nc2d_uniform_trajectory(2.0, 0.0, 0.0, 9.8, &init, 0.0), (1.0, 2.0));
        let t = 1.5;
        let (x1, x2) = nc2d_uniform_trajectory(2.0, 0.0, 0.0, 9.8, &init, t);
        assert!(rel(x1, 9.8 * t * t / 2.0 + 3.0 * t + 1.0) < 1e-15);
        assert!(rel(x2, 4.0 * t + 2.0) < 1e-15);
        // θ alone leaves the parabola untouched.
        let (y1, y2) = nc2d_uniform_trajectory(2.0, 0.3, 0.0, 9.8, &init, t);
        assert_eq!((y1, y2), (x1, x2));
    }

    #[test]
    fn taylor_branch_is_continuous() {
        let init = PlanarInit { x01: 0.1, x02: 0.2, v01: 0.3, v02: -0.4 };
        let t = 2.0;
        let below = TAYLOR_SWITCH * (1.0 - 1e-9) / t;
        let above = TAYLOR_SWITCH * (1.0 + 1e-9) / t;
        let (a1, a2) = nc2d_uniform_trajectory_scaled(0.01, below, 9.8, &init, t);
        let (b1, b2) = nc2d_uniform_trajectory_scaled(0.01, above, 9.8, &init, t);
        assert!(rel(a1, b1) < 1e-10 && rel(a2, b2) < 1e-10);
        let si = SpatialInit { x0: vec![1.0, 2.0, 3.0], v0: vec![0.5, 0.0, -0.5] };
        let wb = (TAYLOR_SWITCH * (1.0 - 1e-9) / t).powi(2) * 6.0;
        let wa = (TAYLOR_SWITCH * (1.0 + 1e-9) / t).powi(2) * 6.0;
        let xa = rotinv_uniform_trajectory_scaled(wb, 9.8, &si, t);
        let xb = rotinv_uniform_trajectory_scaled(wa, 9.8, &si, t);
        for (a, b) in xa.iter().zip(&xb) {
            assert!(rel(*a, *b) < 1e-10);
        }
    }

    #[test]
    fn scaled_equals_unscaled_under_substitution() {
        let init = PlanarInit { x01: 0.0, x02: 0.0, v01: 1.0, v02: -2.0 };
        let (gamma, alpha) = (0.01, 0.1);
        for m in [1e-3, 1.0, 1e3] {
            for t in [0.1, 1.0, 10.0, 60.0] {
                let a = nc2d_uniform_trajectory(m, gamma / m, alpha * m, 9.8, &init, t);
                let b = nc2d_uniform_trajectory_scaled(gamma, alpha, 9.8, &init, t);
                assert!(rel(a.0, b.0) < 1e-12 && rel(a.1, b.1) < 1e-12);
            }
        }
    }

    #[test]
    fn rotinv_matches_unexpanded_form() {
        let (m, e2, g, t): (f64, f64, f64, f64) = (2.0, 0.9, 9.8, 3.3);
        let si = SpatialInit { x0: vec![1.0, -2.0, 0.5], v0: vec![0.3, 0.1, -0.2] };
        let w = (e2 / (6.0 * m * m)).sqrt();
        let c = 6.0 * g * m * m / e2;
        let got = rotinv_uniform_trajectory(m, e2, g, &si, t);
        for (i, g_i) in got.iter().enumerate() {
            let d = if i == 0 { c } else { 0.0 };
            let want = (si.x0[i] + d) * (w * t).cos() + si.v0[i] / w * (w * t).sin() - d;
            assert!(rel(*g_i, want) < 1e-11, "{i}: {g_i} {want}");
        }
        let flat = rotinv_uniform_trajectory(m, 0.0, g, &si, t);
        assert!(rel(flat[0], si.x0[0] + si.v0[0] * t - g * t * t / 2.0) < 1e-15);
        assert_eq!(rotinv_uniform_trajectory(m, e2, g, &si, 0.0), si.x0);
    }

    #[test]
    fn acceleration_series() {
        assert_eq!(gup_acceleration_first_order(1.0, 2.0, 0.0, 3.0, 4.0, 9.8), 9.8);
        let (beta, m, v, g) = (1e-4, 2.0, 1.5, 9.8);
        let a = gup_acceleration_first_order(0.0, 2.0, beta, m, v, g);
        assert!(rel(a, g * (1.0 + 4.0 * beta * m * m * v * v)) < 1e-15);
    }

    #[test]
    fn exact_acceleration_agrees_with_series_to_its_order() {
        for f in [DeformationFn::Won19, DeformationFn::Won18, DeformationFn::KempfQuadratic, DeformationFn::Pedram] {
            let (m, v, g) = (1.0, 1.0, 9.8);
            let err = |beta: f64| {
                let ex = gup_acceleration_exact(&f, beta, m, v, g).unwrap();
                (ex - gup_acceleration_first_order(f.fp0(), f.fpp0(), beta, m, v, g)).abs()
            };
            let ratio = err(1e-6) / err(0.25e-6);
            // O(β^{3/2}) remainder; Kempf and Pedram have vanishing odd terms, so O(β²).
            let expect: f64 = if f.fp0() == 0.0 { 16.0 } else { 8.0 };
            assert!((ratio / expect - 1.0).abs() < 0.05, "{}: {ratio}", f.name());
        }
    }

    #[test]
    fn eotvos_examples() {
        assert_eq!(gup_eotvos(1.0, 2.0, 0.3, 2.0, 2.0, 5.0).unwrap(), 0.0);
        let sb1: f64 = 0.01;
        let gamma = 0.05;
        let (m1, m2) = (3.0, 0.2);
        let b1 = (gamma / m1) * (gamma / m1);
        let b2 = (gamma / m2) * (gamma / m2);
        assert!(gup_eotvos_pair(1.0, 2.0, b1, b2, m1, m2, 1.0).unwrap().abs() < 1e-15);
        assert!(gup_eotvos(1.0, 2.0, sb1 * sb1, m1, m2, 1.0).unwrap() > 0.0);
        assert!(matches!(gup_eotvos(0.0, 2.0, 1.0, 0.0, 1.0, 1.0), Err(Error::NonPositiveMass(_))));
    }

    #[test]
    fn kinetic_series_relations() {
        let s = gup_kinetic_series(1.0, 2.0, 0.0, 2.0, 3.0);
        assert_eq!(s.total(), 9.0);
        let (f1, f2, beta, ma, v) = (-2.0, 2.0, 1e-6, 0.5, 2.0);
        let (whole, parts) = gup_kinetic_series_equal_parts(f1, f2, beta, 4, ma, v);
        let direct = gup_kinetic_series(f1, f2, beta, 4.0 * ma, v);
        assert!(rel(whole.total(), direct.total()) < 1e-15);
        let sum = gup_kinetic_series_sum_over_parts(f1, f2, beta, &[ma; 4], v);
        assert!(rel(parts.total(), sum.total()) < 1e-15);
        assert!(whole.total() != parts.total());
        // scaled: additive for any partition
        let gamma = 1e-3;
        let masses = [0.1, 0.7, 2.2];
        let total: f64 = masses.iter().map(|&m| gup_kinetic_series_scaled(f1, f2, gamma, m, v).total()).sum();
        let whole = gup_kinetic_series_scaled(f1, f2, gamma, masses.iter().sum(), v).total();
        assert!(rel(total, whole) < 1e-14);
    }

    #[test]
    fn exact_kinetic_matches_series_and_limits() {
        let f = DeformationFn::KempfQuadratic;
        assert!(rel(gup_exact_kinetic(&f, 0.0, 2.0, 3.0).unwrap(), 9.0) < 1e-15);
        let (gamma, m, v) = (1e-3, 2.0, 1.0);
        let ex = gup_exact_kinetic(&f, gamma, m, v).unwrap();
        let series = gup_kinetic_series_scaled(f.fp0(), f.fpp0(), gamma, m, v).total();
        assert!(rel(ex, series) < 1e-10);
    }

    #[test]
    fn nc2d_momenta_consistent_with_trajectory() {
        let (m, th, eta, g) = (1.7, 0.03, 0.5, 9.8);
        let init = PlanarInit { x01: 0.0, x02: 0.0, v01: 0.4, v02: -0.9 };
        let t = 2.1;
        let h = 1e-5;
        let (a1, a2) = nc2d_uniform_trajectory(m, th, eta, g, &init, t + h);
        let (b1, b2) = nc2d_uniform_trajectory(m, th, eta, g, &init, t - h);
        let (v1, v2) = ((a1 - b1) / (2.0 * h), (a2 - b2) / (2.0 * h));
        let (p1, p2) = nc2d_uniform_momenta(m, th, eta, g, &init, t);
        assert!(rel(p1, m * v1) < 1e-8);
        assert!(rel(p2, m * (v2 - m * g * th)) < 1e-8);
    }
}
