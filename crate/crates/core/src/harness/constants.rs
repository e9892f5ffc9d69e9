//! Physical constants (SI) with compiled-in CODATA 2018 / IAU defaults.

use serde::{Deserialize, Serialize};

/// Every field may be overridden from the config `[constants]` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    /// Gravitational constant, m³ kg⁻¹ s⁻².
    #[serde(rename = "G")]
    pub g_newton: f64,
    /// Speed of light, m/s.
    pub c: f64,
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Planck mass, kg.
    pub m_p: f64,
    /// Planck length, m.
    pub l_p: f64,
    /// Astronomical unit, m.
    pub au: f64,
    /// Solar mass, kg.
    pub m_sun: f64,
    /// Earth mass, kg.
    pub m_earth: f64,
    /// Moon mass, kg.
    pub m_moon: f64,
    /// Mean Earth–Moon distance, m.
    pub r_earth_moon: f64,
    /// Mean orbital speed of the Earth, m/s.
    pub v_earth: f64,
    /// Mean orbital speed of the Moon around the Earth, m/s.
    pub v_moon: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            g_newton: 6.674_30e-11,
            c: 299_792_458.0,
            hbar: 1.054_571_817e-34,
            m_p: 2.176_434e-8,
            l_p: 1.616_255e-35,
            au: 1.495_978_707e11,
            m_sun: 1.988_47e30,
            m_earth: 5.972_2e24,
            m_moon: 7.342e22,
            r_earth_moon: 3.844e8,
            v_earth: 29_780.0,
            v_moon: 1_022.0,
        }
    }
}

impl Constants {
    /// `√β` for a minimal length equal to the Planck length, `ħ√β = l_P`.
    pub fn planck_sqrt_beta(&self) -> f64 {
        self.l_p / self.hbar
    }
}
