//! Sun–Earth–Moon free fall in a canonical noncommutative phase space.

use serde::{Deserialize, Serialize};

use super::constants::Constants;
use crate::error::{Error, Result};
use crate::wep::{eotvos_from_accelerations, EotvosReport};

/// Largest |Δa/a| compatible with lunar laser ranging.
pub const LLR_GATE: f64 = 2.1e-13;

/// Ratio `R_EM / R` above which the equal-distance geometry is flagged.
pub const GEOMETRY_WARN: f64 = 1e-2;

/// Deformation parameters of the two bodies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SemBodies {
    PerBody { theta_e: f64, eta_e: f64, theta_m: f64, eta_m: f64 },
    /// `α = η/m`, `γ = θ m` per body.
    Scaling { alpha_e: f64, alpha_m: f64, gamma_e: f64, gamma_m: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SunEarthMoonParams {
    pub g_newton: f64,
    pub m_s: f64,
    pub m_e: f64,
    pub m_m: f64,
    /// Common distance of both bodies from the Sun, m.
    pub r: f64,
    pub r_em: f64,
    pub v_e: f64,
    pub v_m: f64,
    pub bodies: SemBodies,
}

impl SunEarthMoonParams {
    /// Geometry from `k`: `R = 1 AU`, orbital speeds and masses from the constants block.
    pub fn from_constants(k: &Constants, bodies: SemBodies) -> Self {
        SunEarthMoonParams {
            g_newton: k.g_newton,
            m_s: k.m_sun,
            m_e: k.m_earth,
            m_m: k.m_moon,
            r: k.au,
            r_em: k.r_earth_moon,
            v_e: k.v_earth,
            v_m: k.v_moon,
            bodies,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for m in [self.m_s, self.m_e, self.m_m] {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::NonPositiveMass(m));
            }
        }
        if !(self.r > 0.0 && self.r_em > 0.0 && self.r_em < 2.0 * self.r) {
            return Err(Error::GeometryViolation(format!(
                "need 0 < R_EM < 2R, got R = {:e}, R_EM = {:e}",
                self.r, self.r_em
            )));
        }
        if self.r_em / self.r > GEOMETRY_WARN {
            log::warn!("R_EM/R = {:e} is not small; neglected terms may matter", self.r_em / self.r);
        }
        Ok(())
    }

    /// `(α_E, γ_E, α_M, γ_M)`
    pub fn per_mass(&self) -> (f64, f64, f64, f64) {
        match self.bodies {
            SemBodies::PerBody { theta_e, eta_e, theta_m, eta_m } => {
                (eta_e / self.m_e, theta_e * self.m_e, eta_m / self.m_m, theta_m * self.m_m)
            }
            SemBodies::Scaling { alpha_e, alpha_m, gamma_e, gamma_m } => (alpha_e, gamma_e, alpha_m, gamma_m),
        }
    }

    /// `Gm_S / R²`
    pub fn newtonian(&self) -> f64 {
        self.g_newton * self.m_s / (self.r * self.r)
    }
}

/// Accelerations along the Sun direction and the neglected bracket terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemAccelerations {
    pub a_e: f64,
    pub a_m: f64,
    /// `∓(3R_EM/2v_E R²)(R·Ṙ)` brackets multiplying the θ terms.
    pub bracket_e: f64,
    pub bracket_m: f64,
    /// Acceleration terms dropped from `a_e`, `a_m`.
    pub neglected_e: f64,
    pub neglected_m: f64,
}

/// Free-fall accelerations of the Earth and the Moon at equal distance from the Sun.
///
/// Frame: Sun at the origin, `X₁` through the middle of the Earth–Moon segment,
/// `X^E = (R√(1 − R_EM²/4R²), R_EM/2)`, `X^M = (same, −R_EM/2)`,
/// `Ẋ^E = (0, v_E)`, `Ẋ^M = (v_M, v_E)`.
pub fn sem_accelerations(p: &SunEarthMoonParams) -> Result<SemAccelerations> {
    p.validate()?;
    let (alpha_e, gamma_e, alpha_m, gamma_m) = p.per_mass();
    let x1 = p.r * (1.0 - p.r_em * p.r_em / (4.0 * p.r * p.r)).sqrt();
    let x2 = 0.5 * p.r_em;
    let rdot_e = x2 * p.v_e;
    let rdot_m = x1 * p.v_m - x2 * p.v_e;
    let k = 3.0 * p.r_em / (2.0 * p.v_e * p.r * p.r);
    let bracket_e = -k * rdot_e;
    let bracket_m = k * rdot_m;
    let theta_unit = p.g_newton * p.m_s * p.v_e / p.r.powi(3);
    let a0 = -p.newtonian();
    Ok(SemAccelerations {
        a_e: a0 + alpha_e * p.v_e + gamma_e * theta_unit,
        a_m: a0 + alpha_m * p.v_e + gamma_m * theta_unit,
        bracket_e,
        bracket_m,
        neglected_e: gamma_e * theta_unit * bracket_e,
        neglected_m: gamma_m * theta_unit * bracket_m,
    })
}

/// Eötvös parameter with momentum (`eta`) and coordinate (`theta`) parts.
pub fn sem_eotvos(p: &SunEarthMoonParams) -> Result<EotvosReport> {
    let acc = sem_accelerations(p)?;
    let (alpha_e, gamma_e, alpha_m, gamma_m) = p.per_mass();
    let d_eta = p.v_e * p.r * p.r / (p.g_newton * p.m_s) * (alpha_e - alpha_m);
    let d_theta = p.v_e / p.r * (gamma_e - gamma_m);
    let mut rep = eotvos_from_accelerations(acc.a_e, acc.a_m)?
        .with_component("eta", d_eta)
        .with_component("theta", d_theta)
        .with_meta("mechanism", "sun_earth_moon")
        .with_meta("neglected_e", format!("{:e}", acc.neglected_e))
        .with_meta("neglected_m", format!("{:e}", acc.neglected_m))
        .with_meta("sign_convention", "components use (a_E - a_M)/a with a = Gm_S/R^2 > 0");
    // a_E − a_M is ~1e−13 of a_E; form it directly to avoid cancellation
    let theta_unit = p.g_newton * p.m_s * p.v_e / p.r.powi(3);
    let diff = (alpha_e - alpha_m) * p.v_e + (gamma_e - gamma_m) * theta_unit;
    rep.delta_a_over_a = 2.0 * diff / (acc.a_e + acc.a_m);
    let total = d_eta + d_theta;
    rep.linearized_total = Some(total);
    let gate = if passes_llr_gate(&rep) { "pass" } else { "fail" };
    Ok(rep.with_meta("llr_gate", gate))
}

/// `|Δa/a| ≤ 2.1e−13`, tested on the exact ratio and the linearized sum.
pub fn passes_llr_gate(rep: &EotvosReport) -> bool {
    rep.delta_a_over_a.abs() <= LLR_GATE && rep.linearized_total.is_none_or(|t| t.abs() <= LLR_GATE)
}

/// Parameter bounds implied by `|Δa^η/a| ≤ accuracy` and `|Δa^θ/a| ≤ accuracy` separately.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlrBounds {
    pub accuracy: f64,
    /// `|α_E − α_M|`, s⁻¹.
    pub bound_alpha_diff: f64,
    /// `|γ_E − γ_M|`, s.
    pub bound_gamma_diff: f64,
    pub r: f64,
    pub v_e: f64,
    pub gm_s: f64,
}

pub fn parameter_bounds_from_llr(accuracy: f64, p: &SunEarthMoonParams) -> Result<LlrBounds> {
    if !(accuracy > 0.0 && accuracy.is_finite()) {
        return Err(Error::InvalidSpec(format!("accuracy must be positive, got {accuracy:e}")));
    }
    p.validate()?;
    let gm_s = p.g_newton * p.m_s;
    Ok(LlrBounds {
        accuracy,
        bound_alpha_diff: accuracy * gm_s / (p.v_e * p.r * p.r),
        bound_gamma_diff: accuracy * p.r / p.v_e,
        r: p.r,
        v_e: p.v_e,
        gm_s,
    })
}
