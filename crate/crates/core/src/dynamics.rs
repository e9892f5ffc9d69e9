//! Gravitational Hamiltonians, deformed equations of motion and their integration.

use serde::{Deserialize, Serialize};

use crate::algebra::{structure_matrix, AlgebraSpec, DeformationFn, PhasePoint};
use crate::error::{Error, Result};
use crate::json;

fn default_r_min() -> f64 {
    1e-9
}

fn default_axis() -> usize {
    1
}

fn default_sign() -> f64 {
    -1.0
}

/// Hamiltonian of a single body of mass `m` (inertial ≡ gravitational).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HamiltonianSpec {
    /// `H = p²/2m + sign·m·g·x_axis` (axis is 1-based).
    UniformField {
        m: f64,
        g: f64,
        #[serde(default = "default_axis")]
        axis: usize,
        #[serde(default = "default_sign")]
        sign: f64,
    },
    /// `H = p²/2m − GM·m/|x|`
    PointSource {
        m: f64,
        gm: f64,
        #[serde(default = "default_r_min")]
        r_min: f64,
    },
    Free {
        m: f64,
    },
    /// `H = p²/2m + m g x₁ + ⟨η²⟩x²/12m`
    RotInvEffectiveUniform {
        m: f64,
        g: f64,
        eta2_mean: f64,
    },
    /// `H = p²/2m − GMm/r + ⟨η²⟩r²/12m − GMm⟨θ²⟩L²/8r⁵ + GMm⟨θ²⟩p²/12r³`
    RotInvEffectivePoint {
        m: f64,
        gm: f64,
        theta2_mean: f64,
        eta2_mean: f64,
        #[serde(default = "default_r_min")]
        r_min: f64,
    },
}

impl HamiltonianSpec {
    pub fn mass(&self) -> f64 {
        match self {
            HamiltonianSpec::UniformField { m, .. }
            | HamiltonianSpec::PointSource { m, .. }
            | HamiltonianSpec::Free { m }
            | HamiltonianSpec::RotInvEffectiveUniform { m, .. }
            | HamiltonianSpec::RotInvEffectivePoint { m, .. } => *m,
        }
    }

    /// Same Hamiltonian for a body of a different mass.
    pub fn with_mass(&self, mass: f64) -> Self {
        let mut h = self.clone();
        match &mut h {
            HamiltonianSpec::UniformField { m, .. }
            | HamiltonianSpec::PointSource { m, .. }
            | HamiltonianSpec::Free { m }
            | HamiltonianSpec::RotInvEffectiveUniform { m, .. }
            | HamiltonianSpec::RotInvEffectivePoint { m, .. } => *m = mass,
        }
        h
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.mass();
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::NonPositiveMass(m));
        }
        match self {
            HamiltonianSpec::UniformField { g, sign, axis, .. } => {
                if !g.is_finite() || (*sign != 1.0 && *sign != -1.0) || *axis == 0 {
                    return Err(Error::InvalidSpec("uniform_field: finite g, sign = ±1, axis >= 1".into()));
                }
            }
            HamiltonianSpec::PointSource { gm, r_min, .. } => {
                if !(*gm > 0.0) || !(*r_min >= 0.0) {
                    return Err(Error::InvalidSpec("point_source: GM > 0 and r_min >= 0".into()));
                }
            }
            HamiltonianSpec::Free { .. } => {}
            HamiltonianSpec::RotInvEffectiveUniform { g, eta2_mean, .. } => {
                if !g.is_finite() || !(*eta2_mean >= 0.0) {
                    return Err(Error::InvalidSpec("rot_inv_effective_uniform: <eta^2> >= 0".into()));
                }
            }
            HamiltonianSpec::RotInvEffectivePoint { gm, theta2_mean, eta2_mean, r_min, .. } => {
                if !(*gm > 0.0) || !(*theta2_mean >= 0.0) || !(*eta2_mean >= 0.0) || !(*r_min >= 0.0) {
                    return Err(Error::InvalidSpec(
                        "rot_inv_effective_point: GM > 0, <theta^2>, <eta^2>, r_min >= 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Flattened form of every supported Hamiltonian:
/// `p²/2m + c·x + h x²/2 − GMm/r − GMm a L²/8r⁵ + GMm a p²/12r³`.
#[derive(Debug, Clone)]
struct Resolved {
    m: f64,
    lin: Vec<f64>,
    harm: f64,
    gm: f64,
    theta2: f64,
    r_min: f64,
    /// Use the explicit classical-limit rotationally invariant field.
    rotinv_point: bool,
}

fn resolve(alg: &AlgebraSpec, ham: &HamiltonianSpec, d: usize) -> Result<Resolved> {
    let m = ham.mass();
    if !(m > 0.0) {
        return Err(Error::NonPositiveMass(m));
    }
    let mut r = Resolved { m, lin: vec![0.0; d], harm: 0.0, gm: 0.0, theta2: 0.0, r_min: 0.0, rotinv_point: false };
    match ham {
        HamiltonianSpec::UniformField { g, axis, sign, .. } => {
            if *axis > d {
                return Err(Error::DimensionMismatch { expected: d, found: *axis });
            }
            r.lin[axis - 1] = sign * m * g;
        }
        HamiltonianSpec::PointSource { gm, r_min, .. } => {
            r.gm = *gm;
            r.r_min = *r_min;
        }
        HamiltonianSpec::Free { .. } => {}
        HamiltonianSpec::RotInvEffectiveUniform { g, eta2_mean, .. } => {
            r.lin[0] = m * g;
            r.harm = eta2_mean / (6.0 * m);
        }
        HamiltonianSpec::RotInvEffectivePoint { gm, theta2_mean, eta2_mean, r_min, .. } => {
            r.gm = *gm;
            r.r_min = *r_min;
            r.theta2 = *theta2_mean;
            r.harm = eta2_mean / (6.0 * m);
            r.rotinv_point = true;
        }
    }
    let ham_is_rotinv = matches!(
        ham,
        HamiltonianSpec::RotInvEffectiveUniform { .. } | HamiltonianSpec::RotInvEffectivePoint { .. }
    );
    match alg {
        AlgebraSpec::RotInvEffective { theta2_mean, eta2_mean } => {
            if ham_is_rotinv {
                let (t2, e2) = match ham {
                    HamiltonianSpec::RotInvEffectiveUniform { eta2_mean, .. } => (*theta2_mean, *eta2_mean),
                    HamiltonianSpec::RotInvEffectivePoint { theta2_mean, eta2_mean, .. } => {
                        (*theta2_mean, *eta2_mean)
                    }
                    _ => unreachable!(),
                };
                if t2 != *theta2_mean || e2 != *eta2_mean {
                    return Err(Error::Incompatible(
                        "rot-invariant Hamiltonian means differ from the algebra's".into(),
                    ));
                }
            } else {
                // Promote the plain potential to its effective form.
                r.harm = eta2_mean / (6.0 * m);
                if r.gm > 0.0 {
                    r.theta2 = *theta2_mean;
                    r.rotinv_point = true;
                }
            }
        }
        AlgebraSpec::Ordinary { .. } => {}
        _ if ham_is_rotinv => {
            return Err(Error::Incompatible(format!(
                "rot-invariant effective Hamiltonian with {} brackets",
                alg.family_name()
            )));
        }
        _ => {}
    }
    Ok(r)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Resolved {
    fn radius(&self, x: &[f64]) -> Result<f64> {
        let r = norm2(x).sqrt();
        if r < self.r_min {
            return Err(Error::SingularRadius { r, r_min: self.r_min });
        }
        Ok(r)
    }

    fn energy(&self, x: &[f64], p: &[f64]) -> Result<f64> {
        let m = self.m;
        let p2 = norm2(p);
        let x2 = norm2(x);
        let mut h = p2 / (2.0 * m) + dot(&self.lin, x) + 0.5 * self.harm * x2;
        if self.gm > 0.0 {
            let r = self.radius(x)?;
            let l2 = x2 * p2 - dot(x, p).powi(2);
            let k = self.gm * m;
            h += -k / r - k * self.theta2 * l2 / (8.0 * r.powi(5)) + k * self.theta2 * p2 / (12.0 * r.powi(3));
        }
        Ok(h)
    }

    /// Analytic ∇H in `(x, p)` ordering.
    fn grad(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        let d = x.len();
        let m = self.m;
        let mut g = vec![0.0; 2 * d];
        for i in 0..d {
            g[i] = self.lin[i] + self.harm * x[i];
            g[d + i] = p[i] / m;
        }
        if self.gm > 0.0 {
            let r = self.radius(x)?;
            let k = self.gm * m;
            let a = self.theta2;
            let p2 = norm2(p);
            let xp = dot(x, p);
            let l2 = norm2(x) * p2 - xp * xp;
            let r3 = r.powi(3);
            let r5 = r.powi(5);
            let r7 = r.powi(7);
            for i in 0..d {
                // ∂/∂x_i
                let dl2_dx = 2.0 * x[i] * p2 - 2.0 * xp * p[i];
                g[i] += k * x[i] / r3
                    - k * a * (dl2_dx / (8.0 * r5) - 5.0 * l2 * x[i] / (8.0 * r7))
                    - k * a * p2 * 3.0 * x[i] / (12.0 * r5);
                // ∂/∂p_i
                let dl2_dp = 2.0 * norm2(x) * p[i] - 2.0 * xp * x[i];
                g[d + i] += -k * a * dl2_dp / (8.0 * r5) + k * a * p[i] / (6.0 * r3);
            }
        }
        if let Some(index) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { index });
        }
        Ok(g)
    }

    /// Classical-limit field written in `(x, p′ = p/m)` and mapped back to `(x, p)`.
    fn rotinv_point_field(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        let d = x.len();
        let m = self.m;
        let r = self.radius(x)?;
        let pp: Vec<f64> = p.iter().map(|v| v / m).collect();
        let a = self.theta2 * m * m;
        let b = self.harm * 6.0 / m;
        let gm = self.gm;
        let xpp = dot(x, &pp);
        let pp2 = norm2(&pp);
        let cross2 = norm2(x) * pp2 - xpp * xpp;
        let (r3, r5, r7) = (r.powi(3), r.powi(5), r.powi(7));
        let mut out = vec![0.0; 2 * d];
        for i in 0..d {
            out[i] = pp[i] - gm * a / 12.0 * (pp[i] / r3 - 3.0 * x[i] * xpp / r5);
            let dpp = -gm * x[i] / r3 - b * x[i] / 6.0
                - gm * a / 4.0 * (xpp * pp[i] / r5 - 2.0 * x[i] * pp2 / r5 + 5.0 * x[i] * cross2 / (2.0 * r7))
                - self.lin[i] / m;
            out[d + i] = m * dpp;
        }
        Ok(out)
    }
}

fn check_dim(alg: &AlgebraSpec, z: &PhasePoint) -> Result<usize> {
    let d = alg.dim();
    if z.x.len() != d || z.p.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: z.x.len().max(z.p.len()) });
    }
    Ok(d)
}

fn field_resolved(alg: &AlgebraSpec, r: &Resolved, z: &PhasePoint) -> Result<Vec<f64>> {
    if r.rotinv_point {
        return r.rotinv_point_field(&z.x, &z.p);
    }
    let g = r.grad(&z.x, &z.p)?;
    match alg {
        AlgebraSpec::RotInvEffective { .. } => Ok(canonical_apply(&g)),
        _ => Ok(structure_matrix(alg, z)?.apply(&g)),
    }
}

fn canonical_apply(g: &[f64]) -> Vec<f64> {
    let d = g.len() / 2;
    let mut out = vec![0.0; 2 * d];
    for i in 0..d {
        out[i] = g[d + i];
        out[d + i] = -g[i];
    }
    out
}

/// `ż = Ω(z,t)∇H(z)`; rotationally invariant variants use their explicit field.
pub fn eom_vector_field(alg: &AlgebraSpec, ham: &HamiltonianSpec, z: &PhasePoint) -> Result<Vec<f64>> {
    let d = check_dim(alg, z)?;
    let r = resolve(alg, ham, d)?;
    field_resolved(alg, &r, z)
}

/// Value of the (effective) Hamiltonian at `z`.
pub fn energy(alg: &AlgebraSpec, ham: &HamiltonianSpec, z: &PhasePoint) -> Result<f64> {
    let d = check_dim(alg, z)?;
    resolve(alg, ham, d)?.energy(&z.x, &z.p)
}

/// Analytic `∇H` at `z`, ordering `(x, p)`.
pub fn hamiltonian_gradient(alg: &AlgebraSpec, ham: &HamiltonianSpec, z: &PhasePoint) -> Result<Vec<f64>> {
    let d = check_dim(alg, z)?;
    resolve(alg, ham, d)?.grad(&z.x, &z.p)
}

/// Time-stepping policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepPolicy {
    FixedRk4 {
        dt: f64,
    },
    AdaptiveRk45 {
        rtol: f64,
        atol: f64,
        dt_max: f64,
        #[serde(default = "StepPolicy::default_dt_min")]
        dt_min: f64,
    },
}

impl StepPolicy {
    fn default_dt_min() -> f64 {
        1e-14
    }

    pub fn name(&self) -> &'static str {
        match self {
            StepPolicy::FixedRk4 { .. } => "rk4",
            StepPolicy::AdaptiveRk45 { .. } => "dopri5",
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            StepPolicy::FixedRk4 { dt } => *dt > 0.0 && dt.is_finite(),
            StepPolicy::AdaptiveRk45 { rtol, atol, dt_max, dt_min } => {
                *rtol > 0.0 && *atol >= 0.0 && *dt_max > 0.0 && *dt_min > 0.0 && dt_min <= dt_max
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("bad step policy {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub algebra_hash: String,
    pub hamiltonian_hash: String,
    pub algebra: AlgebraSpec,
    pub hamiltonian: HamiltonianSpec,
    pub policy: StepPolicy,
    pub integrator: String,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// `max_t |H(t) − H(0)|`
    #[serde(deserialize_with = "json::lenient::f64")]
    pub max_energy_drift: f64,
    /// False for algebras with explicit time dependence, where H is not conserved.
    pub energy_conserved: bool,
}

/// Sampled solution of the equations of motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<PhasePoint>,
    /// `ẋ(t)` from the vector field at each sample.
    #[serde(deserialize_with = "json::lenient::vec2")]
    pub velocities: Vec<Vec<f64>>,
    #[serde(deserialize_with = "json::lenient::vec")]
    pub energies: Vec<f64>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.samples.first().map(|s| s.dim()).unwrap_or(0)
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &PhasePoint {
        self.samples.last().expect("trajectory has samples")
    }

    /// CSV with header `t,x1..xd,p1..pd,v1..vd,H` and 17 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let d = self.dim();
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        for prefix in ["x", "p", "v"] {
            header.extend((1..=d).map(|i| format!("{prefix}{i}")));
        }
        header.push("H".into());
        wr.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        for ((s, v), h) in self.samples.iter().zip(&self.velocities).zip(&self.energies) {
            let row: Vec<String> = std::iter::once(s.t)
                .chain(s.x.iter().copied())
                .chain(s.p.iter().copied())
                .chain(v.iter().copied())
                .chain(std::iter::once(*h))
                .map(|x| format!("{x:.16e}"))
                .collect();
            wr.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        json::to_string(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Dormand–Prince 5(4) tableau.
mod dp {
    pub const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    pub const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    pub const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    pub const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
}

fn axpy(z: &[f64], h: f64, ks: &[&[f64]], coef: &[f64]) -> Vec<f64> {
    let mut out = z.to_vec();
    for (k, &c) in ks.iter().zip(coef) {
        if c != 0.0 {
            for (o, kv) in out.iter_mut().zip(k.iter()) {
                *o += h * c * kv;
            }
        }
    }
    out
}

struct System<'a> {
    alg: &'a AlgebraSpec,
    r: Resolved,
}

impl System<'_> {
    fn f(&self, z: &[f64], t: f64) -> Result<Vec<f64>> {
        let out = field_resolved(self.alg, &self.r, &PhasePoint::from_z(z, t))?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(format!("vector field at t = {t:e}")));
        }
        Ok(out)
    }

    fn rk4_step(&self, z: &[f64], t: f64, h: f64) -> Result<Vec<f64>> {
        let k1 = self.f(z, t)?;
        let k2 = self.f(&axpy(z, h, &[&k1], &[0.5]), t + 0.5 * h)?;
        let k3 = self.f(&axpy(z, h, &[&k2], &[0.5]), t + 0.5 * h)?;
        let k4 = self.f(&axpy(z, h, &[&k3], &[1.0]), t + h)?;
        Ok(axpy(z, h, &[&k1, &k2, &k3, &k4], &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]))
    }

    /// One Dormand–Prince attempt: (5th-order solution, error estimate, last stage).
    fn dp_step(&self, z: &[f64], t: f64, h: f64, k1: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let mut ks: Vec<Vec<f64>> = vec![k1.to_vec()];
        for s in 1..7 {
            let refs: Vec<&[f64]> = ks.iter().map(|k| k.as_slice()).collect();
            let zs = axpy(z, h, &refs, &dp::A[s][..s]);
            ks.push(self.f(&zs, t + dp::C[s] * h)?);
        }
        let refs: Vec<&[f64]> = ks.iter().map(|k| k.as_slice()).collect();
        let z5 = axpy(z, h, &refs, &dp::B5);
        let err: Vec<f64> = (0..z.len())
            .map(|i| h * (0..7).map(|s| (dp::B5[s] - dp::B4[s]) * ks[s][i]).sum::<f64>())
            .collect();
        Ok((z5, err, ks.pop().unwrap()))
    }
}

/// Integrates from `z0` to `t_end` with the given step policy.
pub fn integrate(
    alg: &AlgebraSpec,
    ham: &HamiltonianSpec,
    z0: &PhasePoint,
    t_end: f64,
    policy: &StepPolicy,
) -> Result<Trajectory> {
    alg.validate()?;
    ham.validate()?;
    policy.validate()?;
    let d = check_dim(alg, z0)?;
    if !z0.is_finite() {
        return Err(Error::NonFiniteValue("initial phase point".into()));
    }
    if !(t_end > z0.t) {
        return Err(Error::InvalidSpec(format!("t_end = {t_end} must exceed t0 = {}", z0.t)));
    }
    let sys = System { alg, r: resolve(alg, ham, d)? };
    let t0 = z0.t;
    let mut times = vec![t0];
    let mut states = vec![z0.z()];
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    match *policy {
        StepPolicy::FixedRk4 { dt } => {
            let n = ((t_end - t0) / dt - 1e-9).ceil().max(1.0) as usize;
            let span = t_end - t0;
            let mut z = z0.z();
            for i in 0..n {
                let ta = t0 + span * i as f64 / n as f64;
                let tb = if i + 1 == n { t_end } else { t0 + span * (i + 1) as f64 / n as f64 };
                z = sys.rk4_step(&z, ta, tb - ta)?;
                times.push(tb);
                states.push(z.clone());
                accepted += 1;
            }
        }
        StepPolicy::AdaptiveRk45 { rtol, atol, dt_max, dt_min } => {
            let mut z = z0.z();
            let mut t = t0;
            let mut k1 = sys.f(&z, t)?;
            let scale0: f64 = z.iter().map(|v| atol + rtol * v.abs()).fold(f64::INFINITY, f64::min);
            let f0 = k1.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let mut h = if f0 > 0.0 { (0.01 * scale0 / f0).sqrt().max(1e-3 * scale0 / f0) } else { dt_max };
            h = h.clamp(dt_min, dt_max).min(t_end - t0);
            while t < t_end {
                let last = t + h >= t_end;
                let hs = if last { t_end - t } else { h };
                let (z5, err, k7) = sys.dp_step(&z, t, hs, &k1)?;
                let en = z
                    .iter()
                    .zip(&z5)
                    .zip(&err)
                    .map(|((a, b), e)| e.abs() / (atol + rtol * a.abs().max(b.abs())))
                    .fold(0.0, f64::max);
                if en <= 1.0 {
                    t = if last { t_end } else { t + hs };
                    z = z5;
                    k1 = k7;
                    times.push(t);
                    states.push(z.clone());
                    accepted += 1;
                    let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                    h = (hs * fac).min(dt_max);
                } else {
                    rejected += 1;
                    h = hs * (0.9 * en.powf(-0.2)).clamp(0.1, 1.0);
                }
                if h < dt_min && t < t_end {
                    return Err(Error::StepUnderflow { t, dt: h });
                }
            }
        }
    }
    let mut samples = Vec::with_capacity(states.len());
    let mut velocities = Vec::with_capacity(states.len());
    let mut energies = Vec::with_capacity(states.len());
    for (z, &t) in states.iter().zip(&times) {
        let pt = PhasePoint::from_z(z, t);
        let f = field_resolved(alg, &sys.r, &pt)?;
        velocities.push(f[..d].to_vec());
        energies.push(sys.r.energy(&pt.x, &pt.p)?);
        samples.push(pt);
    }
    let h0 = energies[0];
    let drift = energies.iter().map(|h| (h - h0).abs()).fold(0.0, f64::max);
    Ok(Trajectory {
        samples,
        velocities,
        energies,
        meta: TrajectoryMeta {
            algebra_hash: json::sha256_of(alg)?,
            hamiltonian_hash: json::sha256_of(ham)?,
            algebra: alg.clone(),
            hamiltonian: ham.clone(),
            policy: policy.clone(),
            integrator: policy.name().into(),
            accepted_steps: accepted,
            rejected_steps: rejected,
            max_energy_drift: drift,
            energy_conserved: !alg.is_time_dependent(),
        },
    })
}

/// Inverts `v = p′F(γ|p′|)` for the scaled momentum `p′ = P/m`.
pub fn gup_velocity_to_scaled_momentum(f: &DeformationFn, gamma: f64, v: f64) -> Result<f64> {
    if !v.is_finite() || !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::NonFiniteValue(format!("v = {v}, gamma = {gamma}")));
    }
    if v == 0.0 {
        return Ok(0.0);
    }
    if gamma == 0.0 {
        return Ok(v);
    }
    let target = v.abs();
    let g = |p: f64| p * f.value(gamma * p);
    let dg = |p: f64| f.value(gamma * p) + gamma * p * f.derivative(gamma * p);
    let cap = f.domain_limit().map(|l| l / gamma);
    let tol = 1e-12 * target.max(1.0);

    let mut hi = target;
    let mut found = false;
    for _ in 0..2000 {
        if let Some(c) = cap {
            if hi >= c {
                hi = c * (1.0 - 1e-15);
            }
        }
        let gv = g(hi);
        if gv.is_finite() && gv >= target {
            found = true;
            break;
        }
        if cap.is_some_and(|c| hi >= c * (1.0 - 2e-15)) {
            break;
        }
        hi *= 2.0;
    }
    if !found {
        return Err(Error::BracketNotFound { v });
    }
    let n = 512;
    for k in 0..=n {
        let p = hi * k as f64 / n as f64;
        if !(dg(p) > 0.0) {
            return Err(Error::NonMonotonicMap { at: p });
        }
    }

    let (mut lo, mut up) = (0.0, hi);
    let mut p = 0.5 * (lo + up);
    for _ in 0..500 {
        let r = g(p) - target;
        if r.abs() <= tol {
            return Ok(p.copysign(v));
        }
        if r > 0.0 {
            up = p;
        } else {
            lo = p;
        }
        let newton = p - r / dg(p);
        p = if newton > lo && newton < up { newton } else { 0.5 * (lo + up) };
        if up - lo <= f64::EPSILON * up {
            break;
        }
    }
    let r = g(p) - target;
    if r.abs() <= tol {
        Ok(p.copysign(v))
    } else {
        Err(Error::NoConvergence(format!("velocity inversion at v = {v:e}, residual {r:e}")))
    }
}

/// Momentum giving velocity `v` at position `x` and time `t`, by Newton iteration.
pub fn momentum_for_velocity(
    alg: &AlgebraSpec,
    ham: &HamiltonianSpec,
    x: &[f64],
    v: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    let d = alg.dim();
    if x.len() != d || v.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.len().max(v.len()) });
    }
    let m = ham.mass();
    if let AlgebraSpec::Gup1D { deformation, beta } = alg {
        let pp = gup_velocity_to_scaled_momentum(deformation, beta.sqrt() * m, v[0])?;
        return Ok(vec![m * pp]);
    }
    let r = resolve(alg, ham, d)?;
    let vel = |p: &[f64]| -> Result<Vec<f64>> {
        let f = field_resolved(alg, &r, &PhasePoint { x: x.to_vec(), p: p.to_vec(), t })?;
        Ok(f[..d].to_vec())
    };
    let scale = v.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    let tol = 1e-13 * scale;
    let mut p: Vec<f64> = v.iter().map(|vi| m * vi).collect();
    for _ in 0..100 {
        let cur = vel(&p)?;
        let res: Vec<f64> = cur.iter().zip(v).map(|(a, b)| a - b).collect();
        let rn = res.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if rn <= tol {
            return Ok(p);
        }
        // Jacobian ∂ẋ/∂p by central differences.
        let mut jac = vec![vec![0.0; d]; d];
        for j in 0..d {
            let h = f64::EPSILON.cbrt() * p[j].abs().max(m * scale * 1e-3).max(f64::MIN_POSITIVE);
            let mut pp = p.clone();
            pp[j] += h;
            let up = vel(&pp)?;
            pp[j] = p[j] - h;
            let dn = vel(&pp)?;
            for i in 0..d {
                jac[i][j] = (up[i] - dn[i]) / (2.0 * h);
            }
        }
        let step = solve_linear(jac, res.clone())
            .ok_or_else(|| Error::NoConvergence("singular velocity Jacobian".into()))?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = p.iter().zip(&step).map(|(a, s)| a - lambda * s).collect();
            let tr = vel(&trial).map(|c| c.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max));
            if let Ok(tn) = tr {
                if tn < rn || lambda < 1e-6 {
                    p = trial;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-9 {
                return Err(Error::NoConvergence("velocity inversion line search".into()));
            }
        }
    }
    Err(Error::NoConvergence("velocity inversion".into()))
}

/// Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c] == 0.0 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            let (top, bottom) = a.split_at_mut(r);
            for (x, y) in bottom[0][c..n].iter_mut().zip(&top[c][c..n]) {
                *x -= f * y;
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}
