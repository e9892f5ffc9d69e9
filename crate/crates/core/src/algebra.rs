//! Deformed algebra catalog and its classical (Poisson-bracket) realization.
//!
//! Every commutator `[A,B] = iħ{A,B}` is represented by its Poisson bracket; an
//! [`AlgebraSpec`] materializes the antisymmetric structure matrix Ω(z,t) in
//! the ordering `(x₁…x_d, p₁…p_d)` so that `{f,g} = ∇f·Ω·∇g`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diff;
use crate::error::{Error, Result};

/// Deformation function `F(√β|P|)` of the one-dimensional GUP algebra.
///
/// The argument is the non-negative dimensionless combination `√β|P|`, which
/// makes every entry even in `P` by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeformationFn {
    /// `1 + x²`
    KempfQuadratic,
    /// `1 / (1 − x²)`
    Pedram,
    /// `(1 − x)²`
    Won18,
    /// `1 / (1 − x)`
    Won19,
    /// `Σ c_k x^k`, with `c_0 = 1`.
    CustomPolynomial(Vec<f64>),
}

impl DeformationFn {
    pub const NAMES: [(&'static str, &'static str); 5] = [
        ("kempf_quadratic", "F(x) = 1 + x^2"),
        ("pedram", "F(x) = 1 / (1 - x^2)"),
        ("won18", "F(x) = (1 - x)^2"),
        ("won19", "F(x) = 1 / (1 - x)"),
        ("custom_polynomial", "F(x) = sum_k c_k x^k with c_0 = 1"),
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DeformationFn::KempfQuadratic => "kempf_quadratic",
            DeformationFn::Pedram => "pedram",
            DeformationFn::Won18 => "won18",
            DeformationFn::Won19 => "won19",
            DeformationFn::CustomPolynomial(_) => "custom_polynomial",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "kempf_quadratic" => Some(DeformationFn::KempfQuadratic),
            "pedram" => Some(DeformationFn::Pedram),
            "won18" => Some(DeformationFn::Won18),
            "won19" => Some(DeformationFn::Won19),
            _ => None,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            DeformationFn::KempfQuadratic => 1.0 + x * x,
            DeformationFn::Pedram => 1.0 / (1.0 - x * x),
            DeformationFn::Won18 => (1.0 - x) * (1.0 - x),
            DeformationFn::Won19 => 1.0 / (1.0 - x),
            DeformationFn::CustomPolynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            DeformationFn::KempfQuadratic => 2.0 * x,
            DeformationFn::Pedram => 2.0 * x / ((1.0 - x * x) * (1.0 - x * x)),
            DeformationFn::Won18 => -2.0 * (1.0 - x),
            DeformationFn::Won19 => 1.0 / ((1.0 - x) * (1.0 - x)),
            DeformationFn::CustomPolynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * x + k as f64 * ck),
        }
    }

    /// `F′(0)`
    pub fn fp0(&self) -> f64 {
        self.derivative(0.0)
    }

    /// `F″(0)`
    pub fn fpp0(&self) -> f64 {
        match self {
            DeformationFn::KempfQuadratic
            | DeformationFn::Pedram
            | DeformationFn::Won18
            | DeformationFn::Won19 => 2.0,
            DeformationFn::CustomPolynomial(c) => 2.0 * c.get(2).copied().unwrap_or(0.0),
        }
    }

    /// Upper bound of the admissible argument (maximal momentum), if any.
    pub fn domain_limit(&self) -> Option<f64> {
        match self {
            DeformationFn::Pedram | DeformationFn::Won19 => Some(1.0),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let DeformationFn::CustomPolynomial(c) = self {
            if c.is_empty() || c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec("custom_polynomial needs finite coefficients".into()));
            }
        }
        if self.value(0.0) != 1.0 {
            return Err(Error::InvalidSpec(format!("{}: F(0) must equal 1", self.name())));
        }
        // Evenness in P holds through |P|; sample it anyway so a broken
        // implementation of `value` cannot slip through.
        for k in 1..=8 {
            let p = 0.1 * k as f64;
            let a = self.value((-p).abs());
            let b = self.value(p.abs());
            if a != b {
                return Err(Error::InvalidSpec(format!("{}: F not even", self.name())));
            }
        }
        Ok(())
    }
}

/// Matrix deformation `F_ij(√βP₁, √βP₂, √βP₃)` of the translation-invariant 3D algebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gup3dForm {
    /// `√(1+q²)(δ_ij + q_i q_j)`
    SqrtIsotropic,
    /// `δ_ij(1+q²) + 2 q_i q_j`
    FirstOrderIsotropic,
    /// `δ_ij − (|q|δ_ij + q_i q_j/|q|) + (q²δ_ij + 3 q_i q_j)`
    AliDasVagenas,
    /// `δ_ij F(|q_i|)`
    Separable(DeformationFn),
}

impl Gup3dForm {
    /// Evaluates `F_ij` at `q = √β P`.
    pub fn matrix(&self, q: [f64; 3]) -> [[f64; 3]; 3] {
        let q2: f64 = q.iter().map(|v| v * v).sum();
        let qn = q2.sqrt();
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let d = if i == j { 1.0 } else { 0.0 };
                m[i][j] = match self {
                    Gup3dForm::SqrtIsotropic => (1.0 + q2).sqrt() * (d + q[i] * q[j]),
                    Gup3dForm::FirstOrderIsotropic => d * (1.0 + q2) + 2.0 * q[i] * q[j],
                    Gup3dForm::AliDasVagenas => {
                        let cross = if qn > 0.0 { q[i] * q[j] / qn } else { 0.0 };
                        d - (qn * d + cross) + (q2 * d + 3.0 * q[i] * q[j])
                    }
                    Gup3dForm::Separable(f) => d * f.value(q[i].abs()),
                };
            }
        }
        m
    }

    pub fn validate(&self) -> Result<()> {
        if let Gup3dForm::Separable(f) = self {
            f.validate()?;
        }
        let id = self.matrix([0.0; 3]);
        for (i, row) in id.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let d = if i == j { 1.0 } else { 0.0 };
                if (v - d).abs() > 0.0 {
                    return Err(Error::InvalidSpec("Gup3D: F_ij(0) must be the identity".into()));
                }
            }
        }
        let samples = [[0.1, -0.2, 0.05], [0.3, 0.1, -0.4], [-0.25, 0.35, 0.15]];
        for q in samples {
            let a = self.matrix(q);
            let b = self.matrix([-q[0], -q[1], -q[2]]);
            if a != b {
                return Err(Error::InvalidSpec("Gup3D: F_ij must be even".into()));
            }
        }
        Ok(())
    }
}

/// Rational function of `s = P²`: `num(s) / den(s)` with ascending coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalFn {
    pub num: Vec<f64>,
    #[serde(default = "RationalFn::unit_den")]
    pub den: Vec<f64>,
}

fn poly(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * s + ck)
}

fn poly_deriv(c: &[f64], s: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, &ck)| acc * s + k as f64 * ck)
}

impl RationalFn {
    fn unit_den() -> Vec<f64> {
        vec![1.0]
    }

    pub fn polynomial(num: Vec<f64>) -> Self {
        RationalFn { num, den: vec![1.0] }
    }

    pub fn constant(c: f64) -> Self {
        Self::polynomial(vec![c])
    }

    pub fn eval(&self, s: f64) -> f64 {
        poly(&self.num, s) / poly(&self.den, s)
    }

    /// d/ds
    pub fn deriv(&self, s: f64) -> f64 {
        let n = poly(&self.num, s);
        let d = poly(&self.den, s);
        (poly_deriv(&self.num, s) * d - n * poly_deriv(&self.den, s)) / (d * d)
    }
}

/// Constant arrays of the general Lie-type algebra.
///
/// `{X_i,X_j} = θ⁰_ij t + θ^k_ij X_k`,
/// `{X_i,P_j} = δ_ij + θ̄^k_ij X_k + θ̃^k_ij P_k`, `{P_i,P_j} = 0`.
/// Arrays with an upper index are stored as `[k][i][j]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LieConstants {
    #[serde(default)]
    pub theta0: [[f64; 3]; 3],
    #[serde(default)]
    pub theta: [[[f64; 3]; 3]; 3],
    #[serde(default)]
    pub theta_bar: [[[f64; 3]; 3]; 3],
    #[serde(default)]
    pub theta_tilde: [[[f64; 3]; 3]; 3],
}

impl LieConstants {
    pub fn validate(&self) -> Result<()> {
        if !is_antisymmetric(&self.theta0) {
            return Err(Error::InvalidSpec("LieGeneral: theta0 must be antisymmetric".into()));
        }
        for k in 0..3 {
            if !is_antisymmetric(&self.theta[k]) {
                return Err(Error::InvalidSpec(format!(
                    "LieGeneral: theta^{} must be antisymmetric",
                    k + 1
                )));
            }
        }
        let all = self
            .theta0
            .iter()
            .flatten()
            .chain(self.theta.iter().flatten().flatten())
            .chain(self.theta_bar.iter().flatten().flatten())
            .chain(self.theta_tilde.iter().flatten().flatten());
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("LieGeneral: non-finite constant".into()));
        }
        Ok(())
    }

    /// Miao's first algebra on axes `(k, l, γ)` (1-based).
    pub fn miao_variant1(kappa: f64, kappa_tilde: f64, axes: [usize; 3]) -> Self {
        let mut c = Self::miao_common(kappa, kappa_tilde, axes);
        let [k, l, _] = zero_based(axes);
        set_anti(&mut c.theta0, k, l, 1.0 / kappa);
        c
    }

    /// Miao's second algebra on axes `(k, l, γ)` (1-based).
    pub fn miao_variant2(kappa: f64, kappa_tilde: f64, kappa_bar: f64, axes: [usize; 3]) -> Self {
        let mut c = Self::miao_common(kappa, kappa_tilde, axes);
        let [k, l, g] = zero_based(axes);
        // {X_γ,P_k} ∋ −X_l/κ̄, {X_γ,P_l} ∋ −X_k/κ̄
        c.theta_bar[l][g][k] = -1.0 / kappa_bar;
        c.theta_bar[k][g][l] = -1.0 / kappa_bar;
        c
    }

    fn miao_common(kappa: f64, kappa_tilde: f64, axes: [usize; 3]) -> Self {
        let [k, l, g] = zero_based(axes);
        let mut c = LieConstants::default();
        set_anti(&mut c.theta0, k, g, -1.0 / kappa);
        set_anti(&mut c.theta0, l, g, 1.0 / kappa);
        set_anti(&mut c.theta[l], k, g, 1.0 / kappa_tilde);
        set_anti(&mut c.theta[k], l, g, -1.0 / kappa_tilde);
        // {X_γ,P_k} = −P_l/κ̃, {X_γ,P_l} = P_k/κ̃; {X_k,P_γ} and {X_l,P_γ} stay δ.
        c.theta_tilde[l][g][k] = -1.0 / kappa_tilde;
        c.theta_tilde[k][g][l] = 1.0 / kappa_tilde;
        c
    }
}

fn zero_based(axes: [usize; 3]) -> [usize; 3] {
    [axes[0] - 1, axes[1] - 1, axes[2] - 1]
}

fn set_anti(m: &mut [[f64; 3]; 3], i: usize, j: usize, v: f64) {
    m[i][j] = v;
    m[j][i] = -v;
}

fn is_antisymmetric(m: &[[f64; 3]; 3]) -> bool {
    (0..3).all(|i| (0..3).all(|j| m[i][j] == -m[j][i]))
}

fn default_rho() -> usize {
    1
}

fn default_tau() -> usize {
    2
}

fn default_sk_dim() -> usize {
    3
}

/// One deformed algebra family with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgebraSpec {
    Ordinary {
        dim: usize,
    },
    /// `{X,P} = F(√β|P|)`
    #[serde(rename = "gup_1d")]
    Gup1D {
        deformation: DeformationFn,
        beta: f64,
    },
    /// `{X_i,P_j} = F_ij(√βP)`, `{X_i,X_j} = {P_i,P_j} = 0`
    #[serde(rename = "gup_3d")]
    Gup3D {
        form: Gup3dForm,
        beta: f64,
    },
    /// `{X_i,X_j} = G(P²)(X_iP_j − X_jP_i)`, `{X_i,P_j} = f(P²)δ_ij + F(P²)P_iP_j`
    SnyderKempfGeneral {
        #[serde(default = "default_sk_dim")]
        dim: usize,
        f: RationalFn,
        #[serde(rename = "F")]
        big_f: RationalFn,
        #[serde(rename = "G")]
        big_g: RationalFn,
    },
    #[serde(rename = "canonical_nc_2d")]
    CanonicalNC2D {
        theta: f64,
        eta: f64,
    },
    /// σ_ij = Σ_k θ_ik η_jk / 4 is derived, not stored.
    #[serde(rename = "canonical_nc_3d")]
    CanonicalNC3D {
        theta: [[f64; 3]; 3],
        eta: [[f64; 3]; 3],
    },
    /// Effective classical form of the rotationally invariant algebra; no bracket.
    RotInvEffective {
        theta2_mean: f64,
        eta2_mean: f64,
    },
    /// `{X_ρ,X_τ} = t/κ`
    LieTimeCommuting {
        kappa: f64,
        #[serde(default = "default_rho")]
        rho: usize,
        #[serde(default = "default_tau")]
        tau: usize,
    },
    LieGeneral(LieConstants),
    LieMiaoVariant1 {
        kappa: f64,
        kappa_tilde: f64,
        axes: [usize; 3],
    },
    LieMiaoVariant2 {
        kappa: f64,
        kappa_tilde: f64,
        kappa_bar: f64,
        axes: [usize; 3],
    },
}

impl AlgebraSpec {
    pub const FAMILIES: [(&'static str, &'static str); 11] = [
        ("ordinary", "undeformed canonical brackets in `dim` dimensions"),
        ("gup_1d", "{X,P} = F(sqrt(beta)|P|)"),
        ("gup_3d", "{X_i,P_j} = F_ij(sqrt(beta) P), {X,X} = {P,P} = 0"),
        ("snyder_kempf_general", "{X_i,X_j} = G(P^2)(X_i P_j - X_j P_i), {X_i,P_j} = f delta_ij + F P_i P_j"),
        ("canonical_nc_2d", "{X1,X2} = theta, {P1,P2} = eta"),
        ("canonical_nc_3d", "{X_i,X_j} = theta_ij, {P_i,P_j} = eta_ij, {X_i,P_j} = delta_ij + sigma_ij"),
        ("rot_inv_effective", "effective classical Hamiltonian with <theta^2>, <eta^2> (no bracket)"),
        ("lie_time_commuting", "{X_rho,X_tau} = t/kappa"),
        ("lie_general", "{X_i,X_j} = theta0_ij t + theta^k_ij X_k, {X_i,P_j} = delta_ij + bar^k_ij X_k + tilde^k_ij P_k"),
        ("lie_miao_variant1", "Lie algebra with kappa, kappa_tilde on axes (k, l, gamma)"),
        ("lie_miao_variant2", "Lie algebra with kappa, kappa_tilde, kappa_bar on axes (k, l, gamma)"),
    ];

    /// Kempf algebra `(β, β′)` in its Poisson form.
    pub fn kempf(dim: usize, beta: f64, beta_prime: f64) -> Self {
        AlgebraSpec::SnyderKempfGeneral {
            dim,
            f: RationalFn::polynomial(vec![1.0, beta]),
            big_f: RationalFn::constant(beta_prime),
            big_g: RationalFn {
                num: vec![-(2.0 * beta - beta_prime), -(2.0 * beta + beta_prime) * beta],
                den: vec![1.0, beta],
            },
        }
    }

    /// Snyder algebra with parameter β.
    pub fn snyder(dim: usize, beta: f64) -> Self {
        AlgebraSpec::SnyderKempfGeneral {
            dim,
            f: RationalFn::constant(1.0),
            big_f: RationalFn::constant(beta),
            big_g: RationalFn::constant(beta),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            AlgebraSpec::Ordinary { .. } => "ordinary",
            AlgebraSpec::Gup1D { .. } => "gup_1d",
            AlgebraSpec::Gup3D { .. } => "gup_3d",
            AlgebraSpec::SnyderKempfGeneral { .. } => "snyder_kempf_general",
            AlgebraSpec::CanonicalNC2D { .. } => "canonical_nc_2d",
            AlgebraSpec::CanonicalNC3D { .. } => "canonical_nc_3d",
            AlgebraSpec::RotInvEffective { .. } => "rot_inv_effective",
            AlgebraSpec::LieTimeCommuting { .. } => "lie_time_commuting",
            AlgebraSpec::LieGeneral(_) => "lie_general",
            AlgebraSpec::LieMiaoVariant1 { .. } => "lie_miao_variant1",
            AlgebraSpec::LieMiaoVariant2 { .. } => "lie_miao_variant2",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AlgebraSpec::Ordinary { dim } | AlgebraSpec::SnyderKempfGeneral { dim, .. } => *dim,
            AlgebraSpec::Gup1D { .. } => 1,
            AlgebraSpec::CanonicalNC2D { .. } => 2,
            _ => 3,
        }
    }

    pub fn has_bracket(&self) -> bool {
        !matches!(self, AlgebraSpec::RotInvEffective { .. })
    }

    /// True when Ω depends explicitly on time (Lie families).
    pub fn is_time_dependent(&self) -> bool {
        match self {
            AlgebraSpec::LieTimeCommuting { .. }
            | AlgebraSpec::LieMiaoVariant1 { .. }
            | AlgebraSpec::LieMiaoVariant2 { .. } => true,
            AlgebraSpec::LieGeneral(c) => c.theta0.iter().flatten().any(|v| *v != 0.0),
            _ => false,
        }
    }

    /// Lie constants for the general and Miao variants.
    pub fn lie_constants(&self) -> Option<LieConstants> {
        match self {
            AlgebraSpec::LieGeneral(c) => Some(c.clone()),
            AlgebraSpec::LieMiaoVariant1 { kappa, kappa_tilde, axes } => {
                Some(LieConstants::miao_variant1(*kappa, *kappa_tilde, *axes))
            }
            AlgebraSpec::LieMiaoVariant2 { kappa, kappa_tilde, kappa_bar, axes } => Some(
                LieConstants::miao_variant2(*kappa, *kappa_tilde, *kappa_bar, *axes),
            ),
            _ => None,
        }
    }

    /// Checks the parameter invariants of the variant.
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} must be finite")))
            }
        };
        match self {
            AlgebraSpec::Ordinary { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidSpec("ordinary: dim must be positive".into()));
                }
            }
            AlgebraSpec::Gup1D { deformation, beta } => {
                finite("beta", *beta)?;
                if *beta < 0.0 {
                    return Err(Error::InvalidSpec("beta must be >= 0".into()));
                }
                deformation.validate()?;
            }
            AlgebraSpec::Gup3D { form, beta } => {
                finite("beta", *beta)?;
                if *beta < 0.0 {
                    return Err(Error::InvalidSpec("beta must be >= 0".into()));
                }
                form.validate()?;
            }
            AlgebraSpec::SnyderKempfGeneral { dim, f, big_f, big_g } => {
                if !(2..=3).contains(dim) {
                    return Err(Error::InvalidSpec("snyder_kempf_general: dim must be 2 or 3".into()));
                }
                for (name, r) in [("f", f), ("F", big_f), ("G", big_g)] {
                    if r.num.is_empty() || r.den.is_empty() {
                        return Err(Error::InvalidSpec(format!("{name}: empty coefficient list")));
                    }
                }
                if f.eval(0.0) != 1.0 {
                    return Err(Error::InvalidSpec("snyder_kempf_general: f(0) must equal 1".into()));
                }
            }
            AlgebraSpec::CanonicalNC2D { theta, eta } => {
                finite("theta", *theta)?;
                finite("eta", *eta)?;
            }
            AlgebraSpec::CanonicalNC3D { theta, eta } => {
                if !is_antisymmetric(theta) || !is_antisymmetric(eta) {
                    return Err(Error::InvalidSpec("canonical_nc_3d: theta and eta must be antisymmetric".into()));
                }
            }
            AlgebraSpec::RotInvEffective { theta2_mean, eta2_mean } => {
                finite("theta2_mean", *theta2_mean)?;
                finite("eta2_mean", *eta2_mean)?;
                if *theta2_mean < 0.0 || *eta2_mean < 0.0 {
                    return Err(Error::InvalidSpec("<theta^2>, <eta^2> must be >= 0".into()));
                }
            }
            AlgebraSpec::LieTimeCommuting { kappa, rho, tau } => {
                finite("kappa", *kappa)?;
                if *kappa == 0.0 {
                    return Err(Error::InvalidSpec("kappa must be nonzero".into()));
                }
                if !(1..=3).contains(rho) || !(1..=3).contains(tau) || rho == tau {
                    return Err(Error::InvalidSpec("rho, tau must be distinct axes in 1..=3".into()));
                }
            }
            AlgebraSpec::LieGeneral(c) => c.validate()?,
            AlgebraSpec::LieMiaoVariant1 { kappa, kappa_tilde, axes } => {
                check_axes(axes)?;
                check_nonzero(&[*kappa, *kappa_tilde])?;
            }
            AlgebraSpec::LieMiaoVariant2 { kappa, kappa_tilde, kappa_bar, axes } => {
                check_axes(axes)?;
                check_nonzero(&[*kappa, *kappa_tilde, *kappa_bar])?;
            }
        }
        Ok(())
    }
}

fn check_axes(axes: &[usize; 3]) -> Result<()> {
    let ok = axes.iter().all(|a| (1..=3).contains(a))
        && axes[0] != axes[1]
        && axes[1] != axes[2]
        && axes[0] != axes[2];
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidSpec("axes must be a permutation of 1, 2, 3".into()))
    }
}

fn check_nonzero(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite() && *x != 0.0) {
        Ok(())
    } else {
        Err(Error::InvalidSpec("kappa parameters must be finite and nonzero".into()))
    }
}

/// Coordinates, momenta and time of a d-dimensional particle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    #[serde(deserialize_with = "crate::json::lenient::vec")]
    pub x: Vec<f64>,
    #[serde(deserialize_with = "crate::json::lenient::vec")]
    pub p: Vec<f64>,
    #[serde(deserialize_with = "crate::json::lenient::f64")]
    pub t: f64,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, p: Vec<f64>, t: f64) -> Result<Self> {
        if x.len() != p.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), found: p.len() });
        }
        let pt = PhasePoint { x, p, t };
        if !pt.is_finite() {
            return Err(Error::NonFiniteValue("phase point".into()));
        }
        Ok(pt)
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.p).all(|v| v.is_finite()) && self.t.is_finite()
    }

    /// Flat phase vector `(x₁…x_d, p₁…p_d)`.
    pub fn z(&self) -> Vec<f64> {
        let mut z = self.x.clone();
        z.extend_from_slice(&self.p);
        z
    }

    pub fn from_z(z: &[f64], t: f64) -> Self {
        let d = z.len() / 2;
        PhasePoint { x: z[..d].to_vec(), p: z[d..].to_vec(), t }
    }
}

/// The 2d×2d antisymmetric bracket matrix, row-major, ordering `(x…, p…)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrix {
    d: usize,
    data: Vec<f64>,
}

impl StructureMatrix {
    fn zeros(d: usize) -> Self {
        StructureMatrix { d, data: vec![0.0; 4 * d * d] }
    }

    fn canonical(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m.set(i, d + i, 1.0);
        }
        m
    }

    /// Sets entry (a,b) with a < b and mirrors it with a sign flip.
    fn set(&mut self, a: usize, b: usize, v: f64) {
        let n = 2 * self.d;
        debug_assert!(a < b);
        self.data[a * n + b] = v;
        self.data[b * n + a] = -v;
    }

    fn set_xx(&mut self, i: usize, j: usize, v: f64) {
        if i < j {
            self.set(i, j, v);
        } else if j < i {
            self.set(j, i, -v);
        }
    }

    fn set_pp(&mut self, i: usize, j: usize, v: f64) {
        let d = self.d;
        self.set_xx(d + i, d + j, v);
    }

    fn set_xp(&mut self, i: usize, j: usize, v: f64) {
        let d = self.d;
        self.set(i, d + j, v);
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * 2 * self.d + b]
    }

    /// `{X_i,X_j}`
    pub fn xx(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }

    /// `{X_i,P_j}`
    pub fn xp(&self, i: usize, j: usize) -> f64 {
        self.get(i, self.d + j)
    }

    /// `{P_i,P_j}`
    pub fn pp(&self, i: usize, j: usize) -> f64 {
        self.get(self.d + i, self.d + j)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `Ω·v`
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = 2 * self.d;
        (0..n)
            .map(|a| self.data[a * n..(a + 1) * n].iter().zip(v).map(|(o, w)| o * w).sum())
            .collect()
    }

    /// `u·Ω·v`
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(self.apply(v)).map(|(a, b)| a * b).sum()
    }

    pub fn is_antisymmetric(&self) -> bool {
        let n = 2 * self.d;
        (0..n).all(|a| (0..n).all(|b| self.data[a * n + b] == -self.data[b * n + a]))
    }
}

/// Materializes Ω(z,t) for the given algebra.
pub fn structure_matrix(spec: &AlgebraSpec, z: &PhasePoint) -> Result<StructureMatrix> {
    let d = spec.dim();
    if z.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: z.dim() });
    }
    let mut om = StructureMatrix::canonical(d);
    match spec {
        AlgebraSpec::Ordinary { .. } => {}
        AlgebraSpec::Gup1D { deformation, beta } => {
            let v = deformation.value(beta.sqrt() * z.p[0].abs());
            if !v.is_finite() {
                return Err(Error::NonFiniteValue(format!(
                    "F(sqrt(beta)|P|) outside the domain of {}",
                    deformation.name()
                )));
            }
            om.set_xp(0, 0, v);
        }
        AlgebraSpec::Gup3D { form, beta } => {
            let sb = beta.sqrt();
            let f = form.matrix([sb * z.p[0], sb * z.p[1], sb * z.p[2]]);
            for (i, row) in f.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::NonFiniteValue("F_ij".into()));
                    }
                    om.set_xp(i, j, *v);
                }
            }
        }
        AlgebraSpec::SnyderKempfGeneral { f, big_f, big_g, .. } => {
            let s: f64 = z.p.iter().map(|v| v * v).sum();
            let (fv, bf, bg) = (f.eval(s), big_f.eval(s), big_g.eval(s));
            if !(fv.is_finite() && bf.is_finite() && bg.is_finite()) {
                return Err(Error::NonFiniteValue("f, F or G".into()));
            }
            for i in 0..d {
                for j in 0..d {
                    let delta = if i == j { fv } else { 0.0 };
                    om.set_xp(i, j, delta + bf * z.p[i] * z.p[j]);
                    if i < j {
                        om.set_xx(i, j, bg * (z.x[i] * z.p[j] - z.x[j] * z.p[i]));
                    }
                }
            }
        }
        AlgebraSpec::CanonicalNC2D { theta, eta } => {
            om.set_xx(0, 1, *theta);
            om.set_pp(0, 1, *eta);
        }
        AlgebraSpec::CanonicalNC3D { theta, eta } => {
            for i in 0..3 {
                for j in 0..3 {
                    if i < j {
                        om.set_xx(i, j, theta[i][j]);
                        om.set_pp(i, j, eta[i][j]);
                    }
                    let sigma: f64 = (0..3).map(|k| theta[i][k] * eta[j][k]).sum::<f64>() / 4.0;
                    let delta = if i == j { 1.0 } else { 0.0 };
                    om.set_xp(i, j, delta + sigma);
                }
            }
        }
        AlgebraSpec::RotInvEffective { .. } => {
            return Err(Error::UnsupportedBracket("rot_inv_effective"));
        }
        AlgebraSpec::LieTimeCommuting { kappa, rho, tau } => {
            om.set_xx(rho - 1, tau - 1, z.t / kappa);
        }
        AlgebraSpec::LieGeneral(_)
        | AlgebraSpec::LieMiaoVariant1 { .. }
        | AlgebraSpec::LieMiaoVariant2 { .. } => {
            let c = spec.lie_constants().expect("lie family");
            for i in 0..3 {
                for j in 0..3 {
                    if i < j {
                        let v = c.theta0[i][j] * z.t
                            + (0..3).map(|k| c.theta[k][i][j] * z.x[k]).sum::<f64>();
                        om.set_xx(i, j, v);
                    }
                    let delta = if i == j { 1.0 } else { 0.0 };
                    let v = delta
                        + (0..3)
                            .map(|k| c.theta_bar[k][i][j] * z.x[k] + c.theta_tilde[k][i][j] * z.p[k])
                            .sum::<f64>();
                    om.set_xp(i, j, v);
                }
            }
        }
    }
    Ok(om)
}

/// Scalar function on phase space, `f(z, t)` with `z = (x…, p…)`.
pub trait PhaseFunction {
    fn value(&self, z: &[f64], t: f64) -> f64;

    /// Analytic gradient, if known.
    fn gradient(&self, _z: &[f64], _t: f64) -> Option<Vec<f64>> {
        None
    }
}

impl<F> PhaseFunction for F
where
    F: Fn(&[f64]) -> f64,
{
    fn value(&self, z: &[f64], _t: f64) -> f64 {
        self(z)
    }
}

/// A single phase-space coordinate `z_k`, with its exact gradient.
#[derive(Debug, Clone, Copy)]
pub struct Basis(pub usize);

impl PhaseFunction for Basis {
    fn value(&self, z: &[f64], _t: f64) -> f64 {
        z[self.0]
    }

    fn gradient(&self, z: &[f64], _t: f64) -> Option<Vec<f64>> {
        let mut g = vec![0.0; z.len()];
        g[self.0] = 1.0;
        Some(g)
    }
}

fn grad_of(f: &dyn PhaseFunction, z: &[f64], t: f64) -> Result<Vec<f64>> {
    let g = f
        .gradient(z, t)
        .unwrap_or_else(|| diff::gradient(|w: &[f64]| f.value(w, t), z));
    if let Some(index) = g.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGradient { index });
    }
    Ok(g)
}

/// `{f,g} = Σ_ab ∂_a f Ω_ab ∂_b g` at `z`.
pub fn poisson_bracket(
    f: &dyn PhaseFunction,
    g: &dyn PhaseFunction,
    spec: &AlgebraSpec,
    z: &PhasePoint,
) -> Result<f64> {
    let om = structure_matrix(spec, z)?;
    let zv = z.z();
    let gf = grad_of(f, &zv, z.t)?;
    let gg = grad_of(g, &zv, z.t)?;
    Ok(om.bilinear(&gf, &gg))
}

/// Ω and its first derivatives at one phase point, reused across index triples.
struct JacobiProbe {
    n: usize,
    omega: Vec<f64>,
    /// `domega[d][a*n+b] = ∂Ω_ab/∂z_d`
    domega: Vec<Vec<f64>>,
}

impl JacobiProbe {
    fn new(spec: &AlgebraSpec, z: &PhasePoint) -> Result<Self> {
        let omega = structure_matrix(spec, z)?.data;
        let zv = z.z();
        let n = zv.len();
        // Evaluation failures inside the stencil surface as NaN and are caught below.
        let eval = |w: &[f64]| -> Vec<f64> {
            match structure_matrix(spec, &PhasePoint::from_z(w, z.t)) {
                Ok(m) => m.data,
                Err(_) => vec![f64::NAN; n * n],
            }
        };
        let domega: Vec<Vec<f64>> = (0..n).map(|k| diff::central4_vec(eval, &zv, k)).collect();
        if domega.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue("structure-matrix derivative".into()));
        }
        Ok(JacobiProbe { n, omega, domega })
    }

    fn residual(&self, [a, b, c]: [usize; 3]) -> f64 {
        let n = self.n;
        let om = |i: usize, j: usize| self.omega[i * n + j];
        let dom = |k: usize, i: usize, j: usize| self.domega[k][i * n + j];
        (0..n)
            .map(|k| om(a, k) * dom(k, b, c) + om(b, k) * dom(k, c, a) + om(c, k) * dom(k, a, b))
            .sum()
    }
}

/// Cyclic sum `{a,{b,c}} + {b,{c,a}} + {c,{a,b}}` for basis variables `a, b, c`.
pub fn jacobi_residual(spec: &AlgebraSpec, z: &PhasePoint, triple: [usize; 3]) -> Result<f64> {
    let n = 2 * spec.dim();
    if let Some(&bad) = triple.iter().find(|&&i| i >= n) {
        return Err(Error::DimensionMismatch { expected: n, found: bad + 1 });
    }
    Ok(JacobiProbe::new(spec, z)?.residual(triple))
}

/// Sampling box for [`max_jacobi_residual`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JacobiSampling {
    pub samples: usize,
    pub x_half_width: f64,
    pub p_half_width: f64,
    #[serde(default)]
    pub t: f64,
    pub seed: u64,
}

impl Default for JacobiSampling {
    fn default() -> Self {
        JacobiSampling { samples: 100, x_half_width: 1.0, p_half_width: 1.0, t: 1.0, seed: 7 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JacobiSummary {
    pub family: String,
    pub max_residual: f64,
    pub worst_triple: [usize; 3],
    pub worst_point: Vec<f64>,
    pub samples: usize,
}

/// Maximum |Jacobi residual| over all index triples and `samples` random points.
pub fn max_jacobi_residual(spec: &AlgebraSpec, sampling: &JacobiSampling) -> Result<JacobiSummary> {
    let d = spec.dim();
    let n = 2 * d;
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut summary = JacobiSummary {
        family: spec.family_name().to_string(),
        max_residual: 0.0,
        worst_triple: [0, 0, 0],
        worst_point: vec![0.0; n],
        samples: sampling.samples,
    };
    for _ in 0..sampling.samples {
        let x: Vec<f64> = (0..d)
            .map(|_| rng.gen_range(-sampling.x_half_width..=sampling.x_half_width))
            .collect();
        let p: Vec<f64> = (0..d)
            .map(|_| rng.gen_range(-sampling.p_half_width..=sampling.p_half_width))
            .collect();
        let z = PhasePoint { x, p, t: sampling.t };
        let probe = JacobiProbe::new(spec, &z)?;
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let r = probe.residual([a, b, c]).abs();
                    if r > summary.max_residual {
                        summary.max_residual = r;
                        summary.worst_triple = [a, b, c];
                        summary.worst_point = z.z();
                    }
                }
            }
        }
    }
    Ok(summary)
}

/// `f(F−G) − 2 (df/ds)(f + F s)` at `s = P²`.
pub fn snyder_kempf_constraint_residual(
    f: &RationalFn,
    big_f: &RationalFn,
    big_g: &RationalFn,
    p: f64,
) -> Result<f64> {
    let s = p * p;
    let (fv, bf, bg, df) = (f.eval(s), big_f.eval(s), big_g.eval(s), f.deriv(s));
    let r = fv * (bf - bg) - 2.0 * df * (fv + bf * s);
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::NonFiniteValue(format!("constraint residual at P = {p}")))
    }
}

/// Same residual for arbitrary functions of `s = P²`, with `df/ds` by finite differences.
pub fn snyder_kempf_constraint_residual_with<F, FF, FG>(f: F, big_f: FF, big_g: FG, p: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    FF: Fn(f64) -> f64,
    FG: Fn(f64) -> f64,
{
    let s = p * p;
    let df = diff::derivative4(&f, s);
    let (fv, bf) = (f(s), big_f(s));
    let r = fv * (bf - big_g(s)) - 2.0 * df * (fv + bf * s);
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::NonFiniteValue(format!("constraint residual at P = {p}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: &[f64], p: &[f64], t: f64) -> PhasePoint {
        PhasePoint::new(x.to_vec(), p.to_vec(), t).unwrap()
    }

    #[test]
    fn ordinary_is_canonical() {
        let om = structure_matrix(&AlgebraSpec::Ordinary { dim: 2 }, &pt(&[0.3, -1.0], &[2.0, 0.1], 0.0)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(om.xp(i, j), if i == j { 1.0 } else { 0.0 });
                assert_eq!(om.xx(i, j), 0.0);
                assert_eq!(om.pp(i, j), 0.0);
            }
        }
        assert!(om.is_antisymmetric());
    }

    #[test]
    fn canonical_nc_2d_entries() {
        let spec = AlgebraSpec::CanonicalNC2D { theta: 0.25, eta: -0.5 };
        let om = structure_matrix(&spec, &pt(&[1.0, 2.0], &[3.0, 4.0], 0.0)).unwrap();
        assert_eq!(om.xx(0, 1), 0.25);
        assert_eq!(om.xx(1, 0), -0.25);
        assert_eq!(om.pp(0, 1), -0.5);
        assert_eq!(om.xp(0, 0), 1.0);
        assert_eq!(om.xp(0, 1), 0.0);
    }

    #[test]
    fn gup_1d_at_zero_momentum_is_one() {
        let spec = AlgebraSpec::Gup1D { deformation: DeformationFn::KempfQuadratic, beta: 0.3 };
        let om = structure_matrix(&spec, &pt(&[5.0], &[0.0], 0.0)).unwrap();
        assert_eq!(om.xp(0, 0), 1.0);
    }

    #[test]
    fn lie_time_commuting_grows_with_time() {
        let spec = AlgebraSpec::LieTimeCommuting { kappa: 2.0, rho: 1, tau: 2 };
        let om = structure_matrix(&spec, &pt(&[0.0; 3], &[0.0; 3], 3.0)).unwrap();
        assert_eq!(om.xx(0, 1), 1.5);
        assert_eq!(om.xx(1, 0), -1.5);
        assert_eq!(om.xx(0, 2), 0.0);
    }

    #[test]
    fn rot_inv_has_no_bracket() {
        let spec = AlgebraSpec::RotInvEffective { theta2_mean: 1.0, eta2_mean: 1.0 };
        let err = structure_matrix(&spec, &pt(&[0.0; 3], &[0.0; 3], 0.0)).unwrap_err();
        assert_eq!(err, Error::UnsupportedBracket("rot_inv_effective"));
        let e2 = poisson_bracket(&Basis(0), &Basis(3), &spec, &pt(&[0.0; 3], &[0.0; 3], 0.0));
        assert!(matches!(e2, Err(Error::UnsupportedBracket(_))));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let spec = AlgebraSpec::CanonicalNC2D { theta: 0.0, eta: 0.0 };
        let err = structure_matrix(&spec, &pt(&[0.0; 3], &[0.0; 3], 0.0)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, found: 3 });
    }

    #[test]
    fn bracket_examples() {
        let z = pt(&[0.2, 0.4], &[0.1, -0.3], 0.0);
        let ord = AlgebraSpec::Ordinary { dim: 2 };
        assert_eq!(poisson_bracket(&Basis(0), &Basis(2), &ord, &z).unwrap(), 1.0);
        let nc = AlgebraSpec::CanonicalNC2D { theta: 0.7, eta: 0.1 };
        assert_eq!(poisson_bracket(&Basis(0), &Basis(1), &nc, &z).unwrap(), 0.7);
    }

    #[test]
    fn bracket_of_p_squared_with_x_under_gup() {
        // {P², X} = −2P·F(√β|P|), hand-differentiated.
        let beta = 0.2;
        let p0 = 1.3;
        let spec = AlgebraSpec::Gup1D { deformation: DeformationFn::KempfQuadratic, beta };
        let z = pt(&[0.5], &[p0], 0.0);
        let p2 = |w: &[f64]| w[1] * w[1];
        let got = poisson_bracket(&p2, &Basis(0), &spec, &z).unwrap();
        let want = -2.0 * p0 * (1.0 + beta * p0 * p0);
        assert!((got - want).abs() < 1e-8 * want.abs(), "{got} vs {want}");
    }

    #[test]
    fn non_finite_gradient_is_an_error() {
        let spec = AlgebraSpec::Ordinary { dim: 1 };
        let z = pt(&[0.0], &[1.0], 0.0);
        let bad = |w: &[f64]| w[0].ln();
        assert!(matches!(
            poisson_bracket(&bad, &Basis(1), &spec, &z),
            Err(Error::NonFiniteGradient { .. })
        ));
    }

    #[test]
    fn jacobi_vanishes_for_constant_omega() {
        let ord = AlgebraSpec::Ordinary { dim: 3 };
        let z = pt(&[0.1, 0.2, 0.3], &[1.0, -1.0, 0.5], 0.0);
        assert_eq!(jacobi_residual(&ord, &z, [0, 1, 3]).unwrap(), 0.0);

        let theta = [[0.0, 0.3, -0.2], [-0.3, 0.0, 0.1], [0.2, -0.1, 0.0]];
        let eta = [[0.0, -0.4, 0.6], [0.4, 0.0, 0.25], [-0.6, -0.25, 0.0]];
        let nc3 = AlgebraSpec::CanonicalNC3D { theta, eta };
        let s = max_jacobi_residual(&nc3, &JacobiSampling { samples: 10, ..Default::default() }).unwrap();
        assert!(s.max_residual <= 1e-8);
    }

    #[test]
    fn sigma_is_derived_from_theta_and_eta() {
        let theta = [[0.0, 0.3, 0.0], [-0.3, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let eta = [[0.0, 0.5, 0.0], [-0.5, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let om = structure_matrix(&AlgebraSpec::CanonicalNC3D { theta, eta }, &pt(&[0.0; 3], &[0.0; 3], 0.0)).unwrap();
        // σ_11 = θ_12 η_12 / 4, σ_22 = θ_21 η_21 / 4
        assert!((om.xp(0, 0) - (1.0 + 0.3 * 0.5 / 4.0)).abs() < 1e-15);
        assert!((om.xp(1, 1) - (1.0 + 0.3 * 0.5 / 4.0)).abs() < 1e-15);
        assert_eq!(om.xp(2, 2), 1.0);
    }

    #[test]
    fn constraint_examples() {
        let one = RationalFn::constant(1.0);
        let zero = RationalFn::constant(0.0);
        assert_eq!(snyder_kempf_constraint_residual(&one, &zero, &zero, 2.5).unwrap(), 0.0);

        // f = 1+βP², F = G = 0 at P = 1, β = 1: −2·β·(1+βP²) = −4.
        let f = RationalFn::polynomial(vec![1.0, 1.0]);
        let r = snyder_kempf_constraint_residual(&f, &zero, &zero, 1.0).unwrap();
        assert_eq!(r, -4.0);

        for (beta, bp) in [(0.1, 0.3), (1.0, 2.0), (0.7, 0.0), (2.5, 1.1)] {
            if let AlgebraSpec::SnyderKempfGeneral { f, big_f, big_g, .. } = AlgebraSpec::kempf(3, beta, bp) {
                for p in [0.0, 0.3, 1.0, 2.7] {
                    let r = snyder_kempf_constraint_residual(&f, &big_f, &big_g, p).unwrap();
                    assert!(r.abs() < 1e-10, "beta={beta} bp={bp} p={p} r={r}");
                }
            }
        }
    }

    #[test]
    fn constraint_with_closures_agrees() {
        let (beta, bp) = (0.4, 0.9);
        let f = move |s: f64| 1.0 + beta * s;
        let big_f = move |_s: f64| bp;
        let big_g = move |s: f64| -((2.0 * beta - bp) + (2.0 * beta + bp) * beta * s) / (1.0 + beta * s);
        let r = snyder_kempf_constraint_residual_with(f, big_f, big_g, 1.7).unwrap();
        assert!(r.abs() < 1e-9);
    }

    #[test]
    fn deformation_registry_values() {
        assert_eq!(DeformationFn::KempfQuadratic.value(0.5), 1.25);
        assert_eq!(DeformationFn::Pedram.value(0.5), 1.0 / 0.75);
        assert_eq!(DeformationFn::Won18.value(0.5), 0.25);
        assert_eq!(DeformationFn::Won19.value(0.5), 2.0);
        assert_eq!(DeformationFn::Won18.fp0(), -2.0);
        assert_eq!(DeformationFn::Won19.fp0(), 1.0);
        let c = DeformationFn::CustomPolynomial(vec![1.0, 0.5, 3.0]);
        assert_eq!(c.value(2.0), 1.0 + 1.0 + 12.0);
        assert_eq!(c.fp0(), 0.5);
        assert_eq!(c.fpp0(), 6.0);
        for f in [DeformationFn::KempfQuadratic, DeformationFn::Pedram, DeformationFn::Won18, DeformationFn::Won19] {
            f.validate().unwrap();
            assert_eq!(DeformationFn::from_name(f.name()), Some(f.clone()));
            let num = diff::derivative4(|x| f.value(x), 0.3);
            assert!((num - f.derivative(0.3)).abs() < 1e-9);
        }
        assert!(DeformationFn::CustomPolynomial(vec![2.0, 1.0]).validate().is_err());
    }

    #[test]
    fn validation_catches_bad_parameters() {
        assert!(AlgebraSpec::Gup1D { deformation: DeformationFn::Pedram, beta: -1.0 }.validate().is_err());
        assert!(AlgebraSpec::LieTimeCommuting { kappa: 0.0, rho: 1, tau: 2 }.validate().is_err());
        assert!(AlgebraSpec::LieTimeCommuting { kappa: 1.0, rho: 2, tau: 2 }.validate().is_err());
        let bad = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        assert!(AlgebraSpec::CanonicalNC3D { theta: bad, eta: [[0.0; 3]; 3] }.validate().is_err());
        let c = LieConstants { theta0: bad, ..LieConstants::default() };
        assert!(AlgebraSpec::LieGeneral(c).validate().is_err());
        assert!(AlgebraSpec::LieMiaoVariant1 { kappa: 1.0, kappa_tilde: 1.0, axes: [1, 1, 3] }.validate().is_err());
        assert!(AlgebraSpec::kempf(3, 0.1, 0.2).validate().is_ok());
    }

    #[test]
    fn spec_serde_uses_family_tag() {
        let spec = AlgebraSpec::Gup1D { deformation: DeformationFn::Won18, beta: 0.5 };
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains("\"family\":\"gup_1d\""), "{s}");
        let back: AlgebraSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        let custom: AlgebraSpec =
            serde_json::from_str(r#"{"family":"gup_1d","deformation":{"custom_polynomial":[1,0,2]},"beta":1}"#).unwrap();
        assert_eq!(
            custom,
            AlgebraSpec::Gup1D { deformation: DeformationFn::CustomPolynomial(vec![1.0, 0.0, 2.0]), beta: 1.0 }
        );
        assert!(serde_json::from_str::<AlgebraSpec>(r#"{"family":"ordinary","dim":2,"typo":1}"#).is_err());
    }
}
