//! Composite bodies: center-of-mass reduction, effective parameters, kinetic energy
//! additivity and soccer-ball scaling.

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraSpec, DeformationFn, LieConstants, PhasePoint};
use crate::closed_forms::{self, KineticSeries, PlanarInit};
use crate::dynamics::{eom_vector_field, integrate, momentum_for_velocity, HamiltonianSpec, StepPolicy};
use crate::error::{Error, Result};
use crate::wep::{apply_scaling, MassScalingRule, ScaledParams};

/// Relative tolerance used to decide whether per-particle constants obey a scaling rule.
pub const SCALING_RTOL: f64 = 1e-12;

/// Deformation parameters of one constituent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParticleParams {
    Canonical { theta: f64, eta: f64 },
    LieTimeCommuting { kappa: f64 },
    LieGeneral { constants: LieConstants },
    Gup { beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Particle {
    pub mass: f64,
    pub params: ParticleParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeSystem {
    pub particles: Vec<Particle>,
}

impl CompositeSystem {
    pub fn new(particles: Vec<Particle>) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::InvalidSpec("composite system needs at least one particle".into()));
        }
        if let Some(p) = particles.iter().find(|p| !(p.mass > 0.0 && p.mass.is_finite())) {
            return Err(Error::NonPositiveMass(p.mass));
        }
        Ok(CompositeSystem { particles })
    }

    /// Constituents whose parameters follow `rule`.
    pub fn from_rule(masses: &[f64], rule: &MassScalingRule) -> Result<Self> {
        let particles = masses
            .iter()
            .map(|&m| {
                let params = match apply_scaling(rule, m)? {
                    ScaledParams::Gup { beta } => ParticleParams::Gup { beta },
                    ScaledParams::Canonical { theta, eta } => ParticleParams::Canonical { theta, eta },
                    ScaledParams::Lie { kappa } => ParticleParams::LieTimeCommuting { kappa },
                    ScaledParams::LieGeneral(constants) => ParticleParams::LieGeneral { constants },
                    ScaledParams::RotInv { .. } => {
                        return Err(Error::Incompatible("rot-invariant rule has no composite form".into()))
                    }
                };
                Ok(Particle { mass: m, params })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(particles)
    }

    /// Constituents sharing the same parameters.
    pub fn uniform(masses: &[f64], params: ParticleParams) -> Result<Self> {
        Self::new(masses.iter().map(|&mass| Particle { mass, params: params.clone() }).collect())
    }

    pub fn total_mass(&self) -> f64 {
        self.particles.iter().map(|p| p.mass).sum()
    }

    /// `μ_a = m_a / M`
    pub fn mass_fractions(&self) -> Vec<f64> {
        let m = self.total_mass();
        self.particles.iter().map(|p| p.mass / m).collect()
    }

    fn canonical(&self) -> Result<Vec<(f64, f64, f64)>> {
        self.particles
            .iter()
            .enumerate()
            .map(|(i, p)| match p.params {
                ParticleParams::Canonical { theta, eta } => Ok((p.mass, theta, eta)),
                _ => Err(Error::MissingParams(format!("particle {i}: canonical theta, eta"))),
            })
            .collect()
    }
}

/// `(θ̃, η̃)` with `θ̃ = Σm_a²θ_a/M²`, `η̃ = Ση_a`.
pub fn effective_canonical_params(sys: &CompositeSystem) -> Result<(f64, f64)> {
    let c = sys.canonical()?;
    let m = sys.total_mass();
    let theta = c.iter().map(|(ma, th, _)| ma * ma * th).sum::<f64>() / (m * m);
    let eta = c.iter().map(|(_, _, e)| e).sum();
    Ok((theta, eta))
}

/// Brackets between center-of-mass and relative coordinates, per particle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossBrackets {
    /// `{X̃₁, ΔX₂^(a)} = μ_aθ_a − θ̃`
    pub x: Vec<f64>,
    /// `{P̃₁, ΔP₂^(a)} = η_a − μ_aΣ_bη_b`
    pub p: Vec<f64>,
    pub theta_eff: f64,
    pub eta_eff: f64,
}

impl CrossBrackets {
    /// All entries vanish relative to the effective parameters.
    pub fn all_zero(&self, rtol: f64) -> bool {
        let xs = self.theta_eff.abs().max(f64::MIN_POSITIVE);
        let ps = self.eta_eff.abs().max(f64::MIN_POSITIVE);
        self.x.iter().all(|v| v.abs() <= rtol * xs) && self.p.iter().all(|v| v.abs() <= rtol * ps)
    }
}

pub fn com_cross_brackets(sys: &CompositeSystem) -> Result<CrossBrackets> {
    let c = sys.canonical()?;
    let (theta_eff, eta_eff) = effective_canonical_params(sys)?;
    let mu = sys.mass_fractions();
    Ok(CrossBrackets {
        x: c.iter().zip(&mu).map(|((_, th, _), u)| u * th - theta_eff).collect(),
        p: c.iter().zip(&mu).map(|((_, _, e), u)| e - u * eta_eff).collect(),
        theta_eff,
        eta_eff,
    })
}

/// Effective Lie constants of the center of mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LieEffective {
    /// `1/κ_eff = Σμ_a²/κ_a` (time-commuting family).
    pub kappa_eff: Option<f64>,
    /// `Σμ_a²θ⁰`, `Σμ_a²θ^k`, `Σμ_aθ̄^k`, `Σμ_a²θ̃^k` (general family).
    pub constants: Option<LieConstants>,
    /// True when every `κ_a/m_a` (or `θ⁰m`, `θ^k m`, `θ̃ m`, `θ̄`) agrees across particles,
    /// so the center-of-mass brackets close into the same algebra with mass-free constants.
    pub closes: bool,
}

fn all_close(vals: &[f64]) -> bool {
    let scale = vals.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    vals.iter().all(|v| (v - vals[0]).abs() <= SCALING_RTOL * scale)
}

pub fn effective_lie_params(sys: &CompositeSystem) -> Result<LieEffective> {
    let mu = sys.mass_fractions();
    let first = &sys.particles[0].params;
    match first {
        ParticleParams::LieTimeCommuting { .. } => {
            let mut inv = 0.0;
            let mut per_mass = Vec::new();
            for (i, (p, u)) in sys.particles.iter().zip(&mu).enumerate() {
                let ParticleParams::LieTimeCommuting { kappa } = p.params else {
                    return Err(Error::MissingParams(format!("particle {i}: kappa")));
                };
                inv += u * u / kappa;
                per_mass.push(kappa / p.mass);
            }
            Ok(LieEffective { kappa_eff: Some(1.0 / inv), constants: None, closes: all_close(&per_mass) })
        }
        ParticleParams::LieGeneral { .. } => {
            let mut eff = LieConstants::default();
            let mut closes = true;
            let mut cols: Vec<Vec<f64>> = vec![Vec::new(); 9 * 10];
            for (a, (p, u)) in sys.particles.iter().zip(&mu).enumerate() {
                let ParticleParams::LieGeneral { constants: c } = &p.params else {
                    return Err(Error::MissingParams(format!("particle {a}: Lie constants")));
                };
                for i in 0..3 {
                    for j in 0..3 {
                        eff.theta0[i][j] += u * u * c.theta0[i][j];
                        cols[i * 3 + j].push(c.theta0[i][j] * p.mass);
                        for k in 0..3 {
                            eff.theta[k][i][j] += u * u * c.theta[k][i][j];
                            eff.theta_bar[k][i][j] += u * c.theta_bar[k][i][j];
                            eff.theta_tilde[k][i][j] += u * u * c.theta_tilde[k][i][j];
                            let base = 9 + k * 9 + i * 3 + j;
                            cols[base].push(c.theta[k][i][j] * p.mass);
                            cols[base + 27].push(c.theta_tilde[k][i][j] * p.mass);
                            cols[base + 54].push(c.theta_bar[k][i][j]);
                        }
                    }
                }
            }
            for col in cols.iter().filter(|c| !c.is_empty()) {
                closes &= all_close(col);
            }
            Ok(LieEffective { kappa_eff: None, constants: Some(eff), closes })
        }
        _ => Err(Error::MissingParams("particle 0: Lie parameters".into())),
    }
}

/// Center-of-mass dynamics in `(X̃, P̃′ = P̃/M)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositeEom {
    pub total_mass: f64,
    /// Effective single-body algebra of the center of mass.
    pub algebra: AlgebraSpec,
    /// True when the scaling relations hold, so relative motion decouples exactly.
    pub decoupled: bool,
    /// Set when relative-motion coupling is ignored as an approximation.
    pub warning: Option<String>,
}

/// Builds the center-of-mass field for the requested family.
pub fn composite_eom(sys: &CompositeSystem, family: &str) -> Result<CompositeEom> {
    let m = sys.total_mass();
    let (algebra, decoupled) = match family {
        "canonical_nc_2d" => {
            let (theta, eta) = effective_canonical_params(sys)?;
            let cb = com_cross_brackets(sys)?;
            (AlgebraSpec::CanonicalNC2D { theta, eta }, cb.all_zero(SCALING_RTOL))
        }
        "lie_time_commuting" => {
            let eff = effective_lie_params(sys)?;
            let kappa = eff.kappa_eff.ok_or_else(|| Error::MissingParams("kappa".into()))?;
            (AlgebraSpec::LieTimeCommuting { kappa, rho: 1, tau: 2 }, eff.closes)
        }
        "lie_general" => {
            let eff = effective_lie_params(sys)?;
            let c = eff.constants.ok_or_else(|| Error::MissingParams("Lie constants".into()))?;
            (AlgebraSpec::LieGeneral(c), eff.closes)
        }
        other => return Err(Error::Incompatible(format!("no composite reduction for {other}"))),
    };
    let warning = (!decoupled).then(|| {
        log::warn!("scaling relations do not hold; relative-motion coupling is ignored");
        "scaling relations do not hold; center-of-mass motion uses effective parameters \
         with the relative-motion coupling neglected"
            .to_string()
    });
    Ok(CompositeEom { total_mass: m, algebra, decoupled, warning })
}

impl CompositeEom {
    /// `(Ẋ̃, Ṗ̃′)` for a center of mass in `potential` (its mass field is replaced by M).
    pub fn field(&self, potential: &HamiltonianSpec, x: &[f64], p_scaled: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let m = self.total_mass;
        let ham = potential.with_mass(m);
        let z = PhasePoint { x: x.to_vec(), p: p_scaled.iter().map(|v| v * m).collect(), t };
        let f = eom_vector_field(&self.algebra, &ham, &z)?;
        let d = x.len();
        Ok((f[..d].to_vec(), f[d..].iter().map(|v| v / m).collect()))
    }

    /// Integrates from initial position and velocity; samples are `(t, X̃, P̃′)`.
    pub fn integrate_scaled(
        &self,
        potential: &HamiltonianSpec,
        x0: &[f64],
        v0: &[f64],
        t_end: f64,
        dt: f64,
    ) -> Result<Vec<(f64, Vec<f64>, Vec<f64>)>> {
        let m = self.total_mass;
        let ham = potential.with_mass(m);
        let p0 = momentum_for_velocity(&self.algebra, &ham, x0, v0, 0.0)?;
        let z0 = PhasePoint { x: x0.to_vec(), p: p0, t: 0.0 };
        let tr = integrate(&self.algebra, &ham, &z0, t_end, &StepPolicy::FixedRk4 { dt })?;
        Ok(tr
            .samples
            .into_iter()
            .map(|s| (s.t, s.x, s.p.iter().map(|v| v / m).collect()))
            .collect())
    }
}

/// Kinetic energy of a canonical-NC body in uniform fall, whole vs sum of parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KineticReport {
    pub whole: f64,
    pub sum_of_parts: f64,
    pub mismatch: f64,
    /// Mass-free form `M·T′(γ, α)` when the parts follow the canonical scaling.
    pub scaled: Option<f64>,
}

/// Kinetic energies at time `t` for parts moving with common initial velocity.
pub fn kinetic_energy_report(sys: &CompositeSystem, g: f64, init: &PlanarInit, t: f64) -> Result<KineticReport> {
    let c = sys.canonical()?;
    let m = sys.total_mass();
    let (theta, eta) = effective_canonical_params(sys)?;
    let whole = closed_forms::nc2d_kinetic_energy(m, theta, eta, g, init, t);
    let sum_of_parts = c
        .iter()
        .map(|(ma, th, e)| closed_forms::nc2d_kinetic_energy(*ma, *th, *e, g, init, t))
        .sum();
    let gammas: Vec<f64> = c.iter().map(|(ma, th, _)| th * ma).collect();
    let alphas: Vec<f64> = c.iter().map(|(ma, _, e)| e / ma).collect();
    let scaled = (all_close(&gammas) && all_close(&alphas))
        .then(|| m * closed_forms::nc2d_kinetic_energy_scaled_per_mass(gammas[0], alphas[0], g, init, t));
    Ok(KineticReport { whole, sum_of_parts, mismatch: whole - sum_of_parts, scaled })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SoccerBallMode {
    FixedBeta { beta: f64 },
    Scaled { gamma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoccerBallRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub term: &'static str,
    pub value: f64,
    pub fitted_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoccerBallReport {
    pub records: Vec<SoccerBallRecord>,
    pub slope_first: Option<f64>,
    pub slope_second: Option<f64>,
    /// A term vanishing identically (e.g. F′(0) = 0) has no exponent.
    pub degenerate_first: bool,
    pub degenerate_second: bool,
}

/// Ordinary least-squares slope of `ln|y|` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Fits the growth of the first- and second-order kinetic corrections of a body made of
/// `N` equal parts of mass `m_a`.
pub fn soccer_ball_scaling(
    f: &DeformationFn,
    n_range: &[usize],
    m_a: f64,
    v: f64,
    mode: SoccerBallMode,
) -> Result<SoccerBallReport> {
    if n_range.len() < 4 {
        return Err(Error::InvalidSpec("soccer-ball fit needs at least four N values".into()));
    }
    if !(m_a > 0.0) {
        return Err(Error::NonPositiveMass(m_a));
    }
    let (fp0, fpp0) = (f.fp0(), f.fpp0());
    let series: Vec<KineticSeries> = n_range
        .iter()
        .map(|&n| {
            let m = n as f64 * m_a;
            match mode {
                SoccerBallMode::FixedBeta { beta } => closed_forms::gup_kinetic_series(fp0, fpp0, beta, m, v),
                SoccerBallMode::Scaled { gamma } => closed_forms::gup_kinetic_series_scaled(fp0, fpp0, gamma, m, v),
            }
        })
        .collect();
    for (s, n) in series.iter().zip(n_range) {
        if s.first.abs() > s.zero.abs() || s.second.abs() > s.zero.abs() {
            return Err(Error::SeriesOutOfRange(format!("correction exceeds m v^2/2 at N = {n}")));
        }
    }
    let ns: Vec<f64> = n_range.iter().map(|&n| n as f64).collect();
    let fit = |vals: Vec<f64>| -> (Option<f64>, bool) {
        if vals.iter().all(|v| *v == 0.0) {
            (None, true)
        } else {
            (Some(log_log_slope(&ns, &vals)), false)
        }
    };
    let (slope_first, degenerate_first) = fit(series.iter().map(|s| s.first).collect());
    let (slope_second, degenerate_second) = fit(series.iter().map(|s| s.second).collect());
    let mut records = Vec::new();
    for (s, &n) in series.iter().zip(n_range) {
        records.push(SoccerBallRecord { n, term: "first", value: s.first, fitted_slope: slope_first });
        records.push(SoccerBallRecord { n, term: "second", value: s.second, fitted_slope: slope_second });
    }
    Ok(SoccerBallReport { records, slope_first, slope_second, degenerate_first, degenerate_second })
}
