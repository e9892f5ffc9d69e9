//! TOML run configuration. Unknown keys are rejected.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::constants::Constants;
use super::sem::SemBodies;
use crate::algebra::{AlgebraSpec, DeformationFn, JacobiSampling};
use crate::closed_forms::PlanarInit;
use crate::composite::{CompositeSystem, Particle, ParticleParams, SoccerBallMode};
use crate::dynamics::{HamiltonianSpec, StepPolicy};
use crate::error::{Error, Result};
use crate::wep::{MassScalingRule, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Simulate,
    WepSweep,
    Eotvos,
    Composite,
    Jacobi,
    Bounds,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Simulate => "simulate",
            ScenarioKind::WepSweep => "wep-sweep",
            ScenarioKind::Eotvos => "eotvos",
            ScenarioKind::Composite => "composite",
            ScenarioKind::Jacobi => "jacobi",
            ScenarioKind::Bounds => "bounds",
        }
    }
}

/// Output unit scales; emitted values are divided by them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Units {
    pub length: f64,
    pub time: f64,
    pub mass: f64,
}

impl Default for Units {
    fn default() -> Self {
        Units { length: 1.0, time: 1.0, mass: 1.0 }
    }
}

impl Units {
    pub fn is_si(&self) -> bool {
        *self == Units::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateCfg {
    pub algebra: AlgebraSpec,
    pub hamiltonian: HamiltonianSpec,
    pub x0: Vec<f64>,
    /// Initial momentum; alternatively `v0` is inverted to a momentum.
    pub p0: Option<Vec<f64>>,
    pub v0: Option<Vec<f64>>,
    #[serde(default)]
    pub t0: f64,
    pub t_end: f64,
    pub policy: StepPolicy,
}

fn default_gate_divergence() -> f64 {
    1e-8
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WepSweepCfg {
    pub algebra: AlgebraSpec,
    pub rule: Option<MassScalingRule>,
    pub scenario: Scenario,
    pub masses: Vec<f64>,
    /// Also run the sweep with the template parameters held fixed.
    #[serde(default = "default_true")]
    pub compare_fixed: bool,
    #[serde(default = "default_gate_divergence")]
    pub gate_divergence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalBody {
    pub m: f64,
    pub theta: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mechanism", rename_all = "snake_case", deny_unknown_fields)]
pub enum EotvosCfg {
    Gup {
        deformation: DeformationFn,
        m1: f64,
        m2: f64,
        /// Common speed; if absent it is solved from `target`.
        v: Option<f64>,
        target: Option<f64>,
        /// Defaults to the Planck value `ħ√β = l_P`.
        beta: Option<f64>,
        /// Applies `√β_a m_a = γ` instead of a common β.
        rule: Option<MassScalingRule>,
        #[serde(default = "default_g")]
        g: f64,
    },
    Canonical { bodies: [CanonicalBody; 2], g: f64, v: [f64; 2] },
    SunEarthMoon { bodies: SemBodies },
}

fn default_g() -> f64 {
    9.81
}

/// Constituents either listed, shared, or generated from a scaling rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemCfg {
    pub particles: Option<Vec<Particle>>,
    pub masses: Option<Vec<f64>>,
    pub params: Option<ParticleParams>,
    pub rule: Option<MassScalingRule>,
}

impl SystemCfg {
    pub fn build(&self) -> Result<CompositeSystem> {
        match (&self.particles, &self.masses, &self.params, &self.rule) {
            (Some(p), None, None, None) => CompositeSystem::new(p.clone()),
            (None, Some(m), Some(p), None) => CompositeSystem::uniform(m, p.clone()),
            (None, Some(m), None, Some(r)) => CompositeSystem::from_rule(m, r),
            _ => Err(Error::Config(
                "system: give `particles`, or `masses` with exactly one of `params`, `rule`".into(),
            )),
        }
    }
}

fn default_n() -> Vec<usize> {
    vec![2, 4, 8, 16, 32]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompositeCfg {
    Effective { system: SystemCfg },
    Kinetic { system: SystemCfg, g: f64, init: PlanarInit, times: Vec<f64> },
    SoccerBall {
        deformation: DeformationFn,
        #[serde(default = "default_n")]
        n: Vec<usize>,
        m_a: f64,
        v: f64,
        mode: SoccerBallMode,
    },
    Trajectory {
        system: SystemCfg,
        family: String,
        potential: HamiltonianSpec,
        x0: Vec<f64>,
        v0: Vec<f64>,
        t_end: f64,
        dt: f64,
    },
}

fn default_jacobi_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JacobiCfg {
    pub algebras: Vec<AlgebraSpec>,
    #[serde(default)]
    pub sampling: JacobiSampling,
    #[serde(default = "default_jacobi_tol")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsCfg {
    pub accuracy: f64,
}

/// One run. `scenario` selects which section is used; that section must be present
/// and no other section may be.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub units: Units,
    pub simulate: Option<SimulateCfg>,
    pub wep_sweep: Option<WepSweepCfg>,
    pub eotvos: Option<EotvosCfg>,
    pub composite: Option<CompositeCfg>,
    pub jacobi: Option<JacobiCfg>,
    pub bounds: Option<BoundsCfg>,
}

/// Parsed config with its source text and the constants it overrides.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub source: String,
    pub overridden_constants: BTreeSet<String>,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<LoadedConfig> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let raw: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let overridden_constants = raw
            .get("constants")
            .and_then(|c| c.as_table())
            .map(|t| t.keys().cloned().collect())
            .unwrap_or_default();
        config.check_sections()?;
        Ok(LoadedConfig { config, source: text.to_string(), overridden_constants })
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn check_sections(&self) -> Result<()> {
        let present = [
            (ScenarioKind::Simulate, self.simulate.is_some()),
            (ScenarioKind::WepSweep, self.wep_sweep.is_some()),
            (ScenarioKind::Eotvos, self.eotvos.is_some()),
            (ScenarioKind::Composite, self.composite.is_some()),
            (ScenarioKind::Jacobi, self.jacobi.is_some()),
            (ScenarioKind::Bounds, self.bounds.is_some()),
        ];
        for (kind, has) in present {
            if kind == self.scenario && !has {
                return Err(Error::Config(format!("missing section [{}]", section(kind))));
            }
            if kind != self.scenario && has {
                return Err(Error::Config(format!(
                    "section [{}] does not belong to scenario \"{}\"",
                    section(kind),
                    self.scenario.name()
                )));
            }
        }
        let u = self.units;
        if ![u.length, u.time, u.mass].iter().all(|v| *v > 0.0 && v.is_finite()) {
            return Err(Error::Config("units: scales must be positive".into()));
        }
        Ok(())
    }
}

fn section(kind: ScenarioKind) -> &'static str {
    match kind {
        ScenarioKind::WepSweep => "wep_sweep",
        k => k.name(),
    }
}
