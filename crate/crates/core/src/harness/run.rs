//! Scenario dispatch: runs one config and writes its outputs and manifest.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::config::{CompositeCfg, EotvosCfg, LoadedConfig, ScenarioConfig, ScenarioKind, SimulateCfg, Units};
use super::output::{Cell, Format, Manifest, OutputDir, Table};
use super::sem::{self, SemBodies, SunEarthMoonParams};
use crate::algebra::{max_jacobi_residual, DeformationFn, JacobiSummary, PhasePoint};
use crate::closed_forms;
use crate::composite::{
    com_cross_brackets, composite_eom, effective_canonical_params, effective_lie_params, kinetic_energy_report,
    soccer_ball_scaling, CompositeSystem, CrossBrackets, KineticReport, LieEffective,
};
use crate::dynamics::{integrate, momentum_for_velocity, StepPolicy, Trajectory};
use crate::error::{Error, Result};
use crate::wep::{eotvos_from_accelerations, nc2d_eotvos_report, wep_divergence, EotvosReport, MassScalingRule, WepDivergence};

/// Result of [`run_scenario`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: Manifest,
    /// `None` when the scenario has no acceptance gate.
    pub gate: Option<bool>,
}

struct Emitted {
    gate: Option<bool>,
    tolerances: BTreeMap<String, f64>,
    assumptions: Vec<String>,
}

impl Emitted {
    fn new(gate: Option<bool>) -> Self {
        Emitted { gate, tolerances: BTreeMap::new(), assumptions: Vec::new() }
    }

    fn tol(mut self, k: &str, v: f64) -> Self {
        self.tolerances.insert(k.to_string(), v);
        self
    }

    fn assume(mut self, s: impl Into<String>) -> Self {
        self.assumptions.push(s.into());
        self
    }
}

/// Runs `cfg`, writing outputs and `manifest.json` into `out`.
pub fn run_scenario(cfg: &LoadedConfig, out: &Path, format: Format) -> Result<RunOutcome> {
    let c = &cfg.config;
    let mut dir = OutputDir::create(out)?;
    let emitted = match c.scenario {
        ScenarioKind::Simulate => simulate(c, c.simulate.as_ref().expect("checked"), &mut dir, format)?,
        ScenarioKind::WepSweep => wep_sweep(c, &mut dir, format)?,
        ScenarioKind::Eotvos => eotvos(c, c.eotvos.as_ref().expect("checked"), &mut dir, format)?,
        ScenarioKind::Composite => composite(c.composite.as_ref().expect("checked"), &mut dir, format)?,
        ScenarioKind::Jacobi => jacobi(c, &mut dir, format)?,
        ScenarioKind::Bounds => bounds(c, &mut dir, format)?,
    };
    let manifest = Manifest {
        scenario: c.scenario.name().to_string(),
        config_sha256: super::output::sha256_hex(cfg.source.as_bytes()),
        package: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        format,
        constants: c.constants.clone(),
        constants_overridden: cfg.overridden_constants.iter().cloned().collect(),
        units: c.units,
        tolerances: emitted.tolerances,
        assumptions: emitted.assumptions,
        gate: emitted.gate,
        outputs: dir.files.clone(),
    };
    std::fs::write(dir.path("manifest.json"), crate::json::to_string(&manifest)?)?;
    Ok(RunOutcome { manifest, gate: emitted.gate })
}

/// Writes `table` as CSV or `value` as JSON under `stem`.
fn emit<T: Serialize>(dir: &mut OutputDir, format: Format, stem: &str, value: &T, table: &Table) -> Result<()> {
    match format {
        Format::Csv => dir.write_table(&format!("{stem}.csv"), table),
        Format::Json => dir.write_json(&format!("{stem}.json"), value),
    }
}

fn rescale(tr: &Trajectory, u: Units) -> Trajectory {
    if u.is_si() {
        return tr.clone();
    }
    let (l, t, m) = (u.length, u.time, u.mass);
    let mut out = tr.clone();
    for s in &mut out.samples {
        s.t /= t;
        s.x.iter_mut().for_each(|x| *x /= l);
        s.p.iter_mut().for_each(|p| *p /= m * l / t);
    }
    for v in &mut out.velocities {
        v.iter_mut().for_each(|x| *x /= l / t);
    }
    out.energies.iter_mut().for_each(|h| *h /= m * l * l / (t * t));
    out.meta.max_energy_drift /= m * l * l / (t * t);
    out
}

fn simulate(c: &ScenarioConfig, s: &SimulateCfg, dir: &mut OutputDir, format: Format) -> Result<Emitted> {
    let p0 = match (&s.p0, &s.v0) {
        (Some(p), None) => p.clone(),
        (None, Some(v)) => momentum_for_velocity(&s.algebra, &s.hamiltonian, &s.x0, v, s.t0)?,
        _ => return Err(Error::Config("simulate: give exactly one of p0, v0".into())),
    };
    let z0 = PhasePoint::new(s.x0.clone(), p0, s.t0)?;
    let tr = rescale(&integrate(&s.algebra, &s.hamiltonian, &z0, s.t_end, &s.policy)?, c.units);
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            tr.write_csv(&mut buf)?;
            dir.write_bytes("trajectory.csv", &buf)?;
        }
        Format::Json => dir.write_json("trajectory.json", &tr)?,
    }
    let mut e = Emitted::new(None);
    match s.policy {
        StepPolicy::FixedRk4 { dt } => e = e.tol("dt", dt),
        StepPolicy::AdaptiveRk45 { rtol, atol, dt_max, dt_min } => {
            e = e.tol("rtol", rtol).tol("atol", atol).tol("dt_max", dt_max).tol("dt_min", dt_min)
        }
    }
    Ok(e)
}

#[derive(Serialize)]
struct SweepOutput {
    scaled: Option<WepDivergence>,
    fixed: Option<WepDivergence>,
}

fn wep_sweep(c: &ScenarioConfig, dir: &mut OutputDir, format: Format) -> Result<Emitted> {
    let s = c.wep_sweep.as_ref().expect("checked");
    let scaled = s.rule.as_ref().map(|r| wep_divergence(&s.algebra, Some(r), &s.scenario, &s.masses)).transpose()?;
    let fixed = (s.compare_fixed || s.rule.is_none())
        .then(|| wep_divergence(&s.algebra, None, &s.scenario, &s.masses))
        .transpose()?;
    let mut t = Table::new(&[
        "mode",
        "family",
        "rule",
        "divergence",
        "scaled_momentum_divergence",
        "length_scale",
        "max_energy_drift",
    ]);
    for (mode, d) in [("scaled", &scaled), ("fixed", &fixed)] {
        if let Some(d) = d {
            t.push(vec![
                mode.into(),
                d.family.clone().into(),
                d.rule.clone().unwrap_or_else(|| "none".into()).into(),
                d.divergence.into(),
                d.scaled_momentum_divergence.into(),
                d.length_scale.into(),
                d.max_energy_drift.into(),
            ]);
        }
    }
    emit(dir, format, "wep_divergence", &SweepOutput { scaled: scaled.clone(), fixed }, &t)?;
    let gate = scaled.map(|d| d.divergence <= s.gate_divergence);
    Ok(Emitted::new(gate).tol("gate_divergence", s.gate_divergence))
}

#[derive(Serialize)]
struct EotvosOutput {
    report: EotvosReport,
    inputs: BTreeMap<String, f64>,
}

fn report_table(rep: &EotvosReport) -> Table {
    let mut t = Table::new(&["quantity", "value"]);
    t.push(vec!["delta_a_over_a".into(), rep.delta_a_over_a.into()]);
    t.push(vec!["a1".into(), rep.a1.into()]);
    t.push(vec!["a2".into(), rep.a2.into()]);
    if let Some(l) = rep.linearized_total {
        t.push(vec!["linearized_total".into(), l.into()]);
    }
    for (k, v) in &rep.components {
        t.push(vec![format!("component:{k}").into(), (*v).into()]);
    }
    t
}

/// Smallest `|v|` with `3F′(0)|v|√β(m₁−m₂) + (2F″(0)−F′(0)²)v²β(m₁²−m₂²) = target`.
pub fn gup_speed_for_target(f: &DeformationFn, beta: f64, m1: f64, m2: f64, target: f64) -> Result<f64> {
    let sb = beta.sqrt();
    let b = 3.0 * f.fp0() * sb * (m1 - m2);
    let a = (2.0 * f.fpp0() - f.fp0() * f.fp0()) * beta * (m1 * m1 - m2 * m2);
    let root = if a == 0.0 {
        (b != 0.0).then(|| target / b)
    } else {
        let disc = b * b + 4.0 * a * target;
        (disc >= 0.0).then(|| {
            let r = [(-b + disc.sqrt()) / (2.0 * a), (-b - disc.sqrt()) / (2.0 * a)];
            r.into_iter().filter(|v| *v >= 0.0).fold(f64::INFINITY, f64::min)
        })
    };
    match root {
        Some(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(Error::NoConvergence(format!("no speed reaches Eötvös parameter {target:e}"))),
    }
}

fn eotvos(c: &ScenarioConfig, e: &EotvosCfg, dir: &mut OutputDir, format: Format) -> Result<Emitted> {
    let k = &c.constants;
    let mut inputs = BTreeMap::new();
    let mut em = Emitted::new(None).tol("llr_gate", sem::LLR_GATE);
    let report = match e {
        EotvosCfg::Gup { deformation, m1, m2, v, target, beta, rule, g } => {
            deformation.validate()?;
            if beta.is_none() {
                em = em.assume("beta from the Planck length: hbar sqrt(beta) = l_P");
            }
            let beta = beta.unwrap_or_else(|| k.planck_sqrt_beta().powi(2));
            let v = match (v, target) {
                (Some(v), None) => *v,
                (None, Some(t)) => {
                    em = em.assume("speed solved from the first-order Eötvös series at a common beta");
                    inputs.insert("target".into(), *t);
                    gup_speed_for_target(deformation, beta, *m1, *m2, *t)?
                }
                _ => return Err(Error::Config("eotvos.gup: give exactly one of v, target".into())),
            };
            let (b1, b2) = match rule {
                None => (beta, beta),
                Some(MassScalingRule::GupScaling { gamma }) => ((gamma / m1).powi(2), (gamma / m2).powi(2)),
                Some(r) => return Err(Error::Incompatible(format!("{} does not apply to GUP bodies", r.name()))),
            };
            let a1 = closed_forms::gup_acceleration_exact(deformation, b1, *m1, v, *g)?;
            let a2 = closed_forms::gup_acceleration_exact(deformation, b2, *m2, v, *g)?;
            let lin = closed_forms::gup_eotvos_pair(deformation.fp0(), deformation.fpp0(), b1, b2, *m1, *m2, v)?;
            let (y1, y2) = (b1.sqrt() * m1, b2.sqrt() * m2);
            let fp0 = deformation.fp0();
            let mut rep = eotvos_from_accelerations(a1, a2)?
                .with_component("sqrt_beta", 3.0 * fp0 * v.abs() * (y1 - y2))
                .with_component("beta", (2.0 * deformation.fpp0() - fp0 * fp0) * v * v * (y1 * y1 - y2 * y2))
                .with_meta("mechanism", "gup")
                .with_meta("deformation", deformation.name())
                .with_meta("accelerations", "exact");
            rep.linearized_total = Some(lin);
            for (name, val) in [("v", v), ("beta1", b1), ("beta2", b2), ("m1", *m1), ("m2", *m2), ("g", *g)] {
                inputs.insert(name.into(), val);
            }
            rep
        }
        EotvosCfg::Canonical { bodies, g, v } => {
            let b = [(bodies[0].m, bodies[0].theta, bodies[0].eta), (bodies[1].m, bodies[1].theta, bodies[1].eta)];
            inputs.insert("g".into(), *g);
            nc2d_eotvos_report(b, *g, *v)?
        }
        EotvosCfg::SunEarthMoon { bodies } => {
            let p = SunEarthMoonParams::from_constants(k, bodies.clone());
            em = em
                .assume("bodies at equal distance R = 1 AU from the Sun")
                .assume("X1 through the middle of the Earth-Moon segment, X2 along it");
            sem::sem_eotvos(&p)?
        }
    };
    let gate = sem::passes_llr_gate(&report);
    let table = report_table(&report);
    emit(dir, format, "eotvos", &EotvosOutput { report, inputs }, &table)?;
    em.gate = Some(gate);
    Ok(em)
}

#[derive(Serialize)]
struct EffectiveOutput {
    total_mass: f64,
    mass_fractions: Vec<f64>,
    theta_eff: Option<f64>,
    eta_eff: Option<f64>,
    cross_brackets: Option<CrossBrackets>,
    lie: Option<LieEffective>,
}

fn effective(sys: &CompositeSystem) -> EffectiveOutput {
    let canon = effective_canonical_params(sys).ok();
    EffectiveOutput {
        total_mass: sys.total_mass(),
        mass_fractions: sys.mass_fractions(),
        theta_eff: canon.map(|c| c.0),
        eta_eff: canon.map(|c| c.1),
        cross_brackets: com_cross_brackets(sys).ok(),
        lie: effective_lie_params(sys).ok(),
    }
}

fn composite(cc: &CompositeCfg, dir: &mut OutputDir, format: Format) -> Result<Emitted> {
    match cc {
        CompositeCfg::Effective { system } => {
            let out = effective(&system.build()?);
            let mut t = Table::new(&["quantity", "value"]);
            t.push(vec!["total_mass".into(), out.total_mass.into()]);
            for (name, v) in [("theta_eff", out.theta_eff), ("eta_eff", out.eta_eff)] {
                if let Some(v) = v {
                    t.push(vec![name.into(), v.into()]);
                }
            }
            if let Some(k) = out.lie.as_ref().and_then(|l| l.kappa_eff) {
                t.push(vec!["kappa_eff".into(), k.into()]);
            }
            emit(dir, format, "effective", &out, &t)?;
            Ok(Emitted::new(None))
        }
        CompositeCfg::Kinetic { system, g, init, times } => {
            let sys = system.build()?;
            let reports: Vec<(f64, KineticReport)> = times
                .iter()
                .map(|&t| kinetic_energy_report(&sys, *g, init, t).map(|r| (t, r)))
                .collect::<Result<_>>()?;
            let mut t = Table::new(&["t", "whole", "sum_of_parts", "mismatch", "scaled"]);
            for (time, r) in &reports {
                let scaled: Cell = r.scaled.map_or_else(|| "".into(), Cell::from);
                t.push(vec![(*time).into(), r.whole.into(), r.sum_of_parts.into(), r.mismatch.into(), scaled]);
            }
            let gate = reports
                .iter()
                .all(|(_, r)| r.scaled.is_some())
                .then(|| reports.iter().all(|(_, r)| r.mismatch.abs() <= 1e-12 * r.whole.abs()));
            #[derive(Serialize)]
            struct Row<'a> {
                t: f64,
                #[serde(flatten)]
                report: &'a KineticReport,
            }
            let rows: Vec<Row> = reports.iter().map(|(t, r)| Row { t: *t, report: r }).collect();
            emit(dir, format, "kinetic", &rows, &t)?;
            Ok(Emitted::new(gate).tol("additivity_rtol", 1e-12))
        }
        CompositeCfg::SoccerBall { deformation, n, m_a, v, mode } => {
            let rep = soccer_ball_scaling(deformation, n, *m_a, *v, *mode)?;
            let mut t = Table::new(&["N", "term", "value", "fitted_slope"]);
            for r in &rep.records {
                let slope: Cell = r.fitted_slope.map_or_else(|| "".into(), Cell::from);
                t.push(vec![(r.n as f64).into(), r.term.into(), r.value.into(), slope]);
            }
            emit(dir, format, "soccer_ball", &rep, &t)?;
            Ok(Emitted::new(None))
        }
        CompositeCfg::Trajectory { system, family, potential, x0, v0, t_end, dt } => {
            let eom = composite_eom(&system.build()?, family)?;
            let samples = eom.integrate_scaled(potential, x0, v0, *t_end, *dt)?;
            let d = x0.len();
            let mut header = vec!["t".to_string()];
            header.extend((1..=d).map(|i| format!("X{i}")));
            header.extend((1..=d).map(|i| format!("P{i}_per_M")));
            let mut t = Table { header, rows: Vec::new() };
            for (time, x, p) in &samples {
                t.push(std::iter::once(*time).chain(x.iter().copied()).chain(p.iter().copied()).map(Cell::from).collect());
            }
            #[derive(Serialize)]
            struct Out<'a> {
                decoupled: bool,
                warning: &'a Option<String>,
                total_mass: f64,
                samples: &'a [(f64, Vec<f64>, Vec<f64>)],
            }
            let out = Out { decoupled: eom.decoupled, warning: &eom.warning, total_mass: eom.total_mass, samples: &samples };
            emit(dir, format, "composite_trajectory", &out, &t)?;
            let e = Emitted::new(None).tol("dt", *dt);
            Ok(match &eom.warning {
                Some(w) => e.assume(w.clone()),
                None => e,
            })
        }
    }
}

fn jacobi(c: &ScenarioConfig, dir: &mut OutputDir, format: Format) -> Result<Emitted> {
    let j = c.jacobi.as_ref().expect("checked");
    let results: Vec<JacobiSummary> =
        j.algebras.iter().map(|a| max_jacobi_residual(a, &j.sampling)).collect::<Result<_>>()?;
    let mut t = Table::new(&["family", "max_residual", "worst_triple", "samples", "pass"]);
    for r in &results {
        t.push(vec![
            r.family.clone().into(),
            r.max_residual.into(),
            format!("{}-{}-{}", r.worst_triple[0], r.worst_triple[1], r.worst_triple[2]).into(),
            (r.samples as f64).into(),
            (if r.max_residual <= j.tolerance { "true" } else { "false" }).into(),
        ]);
    }
    emit(dir, format, "jacobi", &results, &t)?;
    let gate = results.iter().all(|r| r.max_residual <= j.tolerance);
    Ok(Emitted::new(Some(gate)).tol("jacobi", j.tolerance))
}

fn bounds(c: &ScenarioConfig, dir: &mut OutputDir, format: Format) -> Result<Emitted> {
    let b = c.bounds.as_ref().expect("checked");
    let none = SemBodies::Scaling { alpha_e: 0.0, alpha_m: 0.0, gamma_e: 0.0, gamma_m: 0.0 };
    let p = SunEarthMoonParams::from_constants(&c.constants, none);
    let r = sem::parameter_bounds_from_llr(b.accuracy, &p)?;
    let mut t = Table::new(&["quantity", "value"]);
    t.push(vec!["bound_alpha_diff".into(), r.bound_alpha_diff.into()]);
    t.push(vec!["bound_gamma_diff".into(), r.bound_gamma_diff.into()]);
    emit(dir, format, "bounds", &r, &t)?;
    Ok(Emitted::new(None)
        .tol("accuracy", b.accuracy)
        .assume("each mechanism bounded separately at the given accuracy")
        .assume("R = constants.au, v_E = constants.v_earth, Gm_S = G constants.m_sun")
        .assume("bounds are magnitudes; the Eötvös sign convention does not enter"))
}
