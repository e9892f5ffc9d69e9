use proptest::prelude::*;

use wep_core::algebra::{poisson_bracket, structure_matrix, AlgebraSpec, DeformationFn, LieConstants, PhasePoint};
use wep_core::closed_forms;
use wep_core::composite::{com_cross_brackets, effective_canonical_params, CompositeSystem, Particle, ParticleParams};
use wep_core::dynamics::{eom_vector_field, integrate, HamiltonianSpec, StepPolicy};
use wep_core::harness::sem::{sem_eotvos, SemBodies, SunEarthMoonParams};
use wep_core::harness::Constants;
use wep_core::wep::{wep_divergence, MassScalingRule, Scenario};

fn coord() -> impl Strategy<Value = f64> {
    -2.0..2.0f64
}

fn point(d: usize) -> impl Strategy<Value = PhasePoint> {
    (prop::collection::vec(coord(), d), prop::collection::vec(coord(), d), 0.0..3.0f64)
        .prop_map(|(x, p, t)| PhasePoint { x, p, t })
}

fn antisym(a: f64, b: f64, c: f64) -> [[f64; 3]; 3] {
    [[0.0, a, b], [-a, 0.0, c], [-b, -c, 0.0]]
}

fn algebra_3d() -> impl Strategy<Value = AlgebraSpec> {
    prop_oneof![
        Just(AlgebraSpec::Ordinary { dim: 3 }),
        (coord(), coord(), coord(), coord(), coord(), coord())
            .prop_map(|(a, b, c, d, e, f)| AlgebraSpec::CanonicalNC3D { theta: antisym(a, b, c), eta: antisym(d, e, f) }),
        (0.1..10.0f64).prop_map(|kappa| AlgebraSpec::LieTimeCommuting { kappa, rho: 1, tau: 3 }),
        (0.5..5.0f64, 0.5..5.0f64).prop_map(|(k, kt)| AlgebraSpec::LieMiaoVariant1 { kappa: k, kappa_tilde: kt, axes: [1, 2, 3] }),
        (0.0..0.5f64, 0.0..0.5f64).prop_map(|(b, bp)| AlgebraSpec::kempf(3, b, bp)),
    ]
}

fn quadratic(c: Vec<f64>) -> impl Fn(&[f64]) -> f64 {
    move |z: &[f64]| z.iter().zip(&c).map(|(zi, ci)| ci * zi).sum::<f64>() + c[0] * z[0] * z[z.len() - 1]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn structure_matrix_is_antisymmetric(alg in algebra_3d(), z in point(3)) {
        prop_assert!(structure_matrix(&alg, &z).unwrap().is_antisymmetric());
    }

    #[test]
    fn bracket_is_antisymmetric(
        alg in algebra_3d(),
        z in point(3),
        a in prop::collection::vec(coord(), 6),
        b in prop::collection::vec(coord(), 6),
    ) {
        let (f, g) = (quadratic(a), quadratic(b));
        let fg = poisson_bracket(&f, &g, &alg, &z).unwrap();
        let gf = poisson_bracket(&g, &f, &alg, &z).unwrap();
        prop_assert!((fg + gf).abs() <= 1e-9 * (1.0 + fg.abs()));
    }

    #[test]
    fn zero_deformation_is_ordinary(z in point(2), m in 0.1..10.0f64) {
        let ham = HamiltonianSpec::UniformField { m, g: 9.8, axis: 1, sign: -1.0 };
        let base = eom_vector_field(&AlgebraSpec::Ordinary { dim: 2 }, &ham, &z).unwrap();
        let nc = eom_vector_field(&AlgebraSpec::CanonicalNC2D { theta: 0.0, eta: 0.0 }, &ham, &z).unwrap();
        prop_assert_eq!(&base, &nc);
        let z1 = PhasePoint { x: vec![z.x[0]], p: vec![z.p[0]], t: z.t };
        let b1 = eom_vector_field(&AlgebraSpec::Ordinary { dim: 1 }, &ham, &z1).unwrap();
        let g1 = eom_vector_field(&AlgebraSpec::Gup1D { deformation: DeformationFn::Won18, beta: 0.0 }, &ham, &z1).unwrap();
        prop_assert_eq!(b1, g1);
    }

    #[test]
    fn gup_fall_is_time_reversible(beta in 0.0..0.05f64, p0 in -1.0..1.0f64, m in 0.5..2.0f64) {
        let alg = AlgebraSpec::Gup1D { deformation: DeformationFn::KempfQuadratic, beta };
        let ham = HamiltonianSpec::UniformField { m, g: 1.0, axis: 1, sign: -1.0 };
        let policy = StepPolicy::FixedRk4 { dt: 1e-3 };
        let fwd = integrate(&alg, &ham, &PhasePoint { x: vec![0.3], p: vec![p0], t: 0.0 }, 1.0, &policy).unwrap();
        let end = fwd.last();
        let back_start = PhasePoint { x: end.x.clone(), p: vec![-end.p[0]], t: 0.0 };
        let back = integrate(&alg, &ham, &back_start, 1.0, &policy).unwrap();
        prop_assert!((back.last().x[0] - 0.3).abs() < 1e-9);
        prop_assert!((-back.last().p[0] - p0).abs() < 1e-9);
    }

    #[test]
    fn scaled_momentum_is_mass_free(m1 in 0.01..100.0f64, m2 in 0.01..100.0f64, gamma in 0.0..0.05f64) {
        let scenario = Scenario::UniformFall { g: 9.8, sign: -1.0, x0: vec![0.0], v0: vec![0.5], t_end: 0.5, dt: 1e-3 };
        let template = AlgebraSpec::Gup1D { deformation: DeformationFn::KempfQuadratic, beta: 0.0 };
        let d = wep_divergence(&template, Some(&MassScalingRule::GupScaling { gamma }), &scenario, &[m1, m2]).unwrap();
        prop_assert!(d.divergence <= 1e-9 && d.scaled_momentum_divergence <= 1e-9);
    }

    #[test]
    fn equal_per_mass_constants_null_eotvos(alpha in -1e-18..1e-18f64, gamma in -1e-6..1e-6f64) {
        let p = SunEarthMoonParams::from_constants(
            &Constants::default(),
            SemBodies::Scaling { alpha_e: alpha, alpha_m: alpha, gamma_e: gamma, gamma_m: gamma },
        );
        let rep = sem_eotvos(&p).unwrap();
        prop_assert_eq!(rep.delta_a_over_a, 0.0);
        prop_assert_eq!(rep.linearized_total, Some(0.0));
    }

    #[test]
    fn splitting_a_part_keeps_effective_params(
        masses in prop::collection::vec(0.01..10.0f64, 1..8),
        split in 0.05..0.95f64,
        gamma in 1e-3..1.0f64,
        alpha in 1e-3..1.0f64,
    ) {
        let rule = MassScalingRule::CanonicalScaling { gamma, alpha };
        let whole = CompositeSystem::from_rule(&masses, &rule).unwrap();
        let mut parts = masses.clone();
        let last = parts.pop().unwrap();
        parts.extend([last * split, last * (1.0 - split)]);
        let split_sys = CompositeSystem::from_rule(&parts, &rule).unwrap();
        let (t1, e1) = effective_canonical_params(&whole).unwrap();
        let (t2, e2) = effective_canonical_params(&split_sys).unwrap();
        prop_assert!((t1 - t2).abs() <= 1e-12 * t1.abs());
        prop_assert!((e1 - e2).abs() <= 1e-12 * e1.abs());
    }

    #[test]
    fn cross_brackets_vanish_iff_scaling(
        masses in prop::collection::vec(0.01..10.0f64, 2..6),
        gamma in 1e-3..1.0f64,
        alpha in 1e-3..1.0f64,
        perturb in prop::option::of((0usize..6, 0.01..0.5f64)),
    ) {
        let mut particles: Vec<Particle> = masses
            .iter()
            .map(|&m| Particle { mass: m, params: ParticleParams::Canonical { theta: gamma / m, eta: alpha * m } })
            .collect();
        if let Some((i, eps)) = perturb {
            let k = i % particles.len();
            if let ParticleParams::Canonical { theta, .. } = &mut particles[k].params {
                *theta *= 1.0 + eps;
            }
        }
        let cb = com_cross_brackets(&CompositeSystem::new(particles).unwrap()).unwrap();
        prop_assert_eq!(cb.all_zero(1e-12), perturb.is_none());
    }

    #[test]
    fn exact_gup_kinetic_is_additive(
        masses in prop::collection::vec(0.01..10.0f64, 1..10),
        gamma in 0.0..0.1f64,
        v in -1.0..1.0f64,
    ) {
        let f = DeformationFn::Won18;
        let whole = closed_forms::gup_exact_kinetic(&f, gamma, masses.iter().sum(), v).unwrap();
        let sum: f64 = masses.iter().map(|m| closed_forms::gup_exact_kinetic(&f, gamma, *m, v).unwrap()).sum();
        prop_assert!((whole - sum).abs() <= 1e-12 * whole.abs().max(f64::MIN_POSITIVE));
    }

    #[test]
    fn scaled_kinetic_series_is_homogeneous(m in 0.01..10.0f64, lambda in 0.1..10.0f64, v in -2.0..2.0f64) {
        let a = closed_forms::gup_kinetic_series_scaled(1.0, 2.0, 0.01, m, v).total();
        let b = closed_forms::gup_kinetic_series_scaled(1.0, 2.0, 0.01, lambda * m, v).total();
        prop_assert!((b - lambda * a).abs() <= 1e-12 * b.abs().max(f64::MIN_POSITIVE));
    }

    #[test]
    fn lie_general_scaling_closes(masses in prop::collection::vec(0.01..10.0f64, 2..6), g0 in 0.01..1.0f64) {
        let mut gamma0 = [[0.0; 3]; 3];
        gamma0[0][2] = g0;
        gamma0[2][0] = -g0;
        let rule = MassScalingRule::LieGeneralScaling {
            gamma0,
            gamma: [[[0.0; 3]; 3]; 3],
            gamma_tilde: [[[0.0; 3]; 3]; 3],
            theta_bar: LieConstants::default().theta_bar,
        };
        let sys = CompositeSystem::from_rule(&masses, &rule).unwrap();
        let eff = wep_core::composite::effective_lie_params(&sys).unwrap();
        prop_assert!(eff.closes);
        let c = eff.constants.unwrap();
        let m: f64 = masses.iter().sum();
        prop_assert!((c.theta0[0][2] - g0 / m).abs() <= 1e-12 * g0 / m);
    }

    #[test]
    fn phase_point_json_round_trip(x in prop::collection::vec(-1e20..1e20f64, 1..4), t in -1e16..1e16f64) {
        let z = PhasePoint { p: x.iter().map(|v| -v).collect(), x, t };
        let back: PhasePoint = serde_json::from_str(&wep_core::json::to_string(&z).unwrap()).unwrap();
        prop_assert_eq!(back, z);
    }
}
