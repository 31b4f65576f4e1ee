//! Stein kernels, discrepancies, contraction and CLT probes, and diffusion identities.

use freestein_core::diffusion::{
    bakry_emery_probe, dirichlet_residual, eigen_residual, gamma, gamma2, langevin_apply, langevin_check,
    laplacian_apply, stationarity_residual, variance_check, VarianceInputs,
};
use freestein_core::stein::{kernel_grid_check, source_discrepancy, stability_report, transported_moment_kernel};
use freestein_core::{
    clt_experiment, contraction_check, moment_stein_kernel, solve_equilibrium, solve_moment_map, stability_probe,
    stein_discrepancy, stein_residual, transported_kernel, w2_distance, ChebMeasure, ContractionMode,
    ConvexPotential, ConvolutionOptions, DiffusionOptions, EquilibriumOptions, Error, HessianManifold,
    MomentMapOptions, Polynomial, SteinKernel1D,
};
use proptest::prelude::*;

fn poly(c: &[f64]) -> ConvexPotential {
    ConvexPotential::polynomial(c).unwrap()
}

fn gibbs(u: &ConvexPotential) -> ChebMeasure {
    solve_equilibrium(u, &EquilibriumOptions::default()).unwrap().measure
}

const HALF: [f64; 3] = [0.0, 0.0, 0.5];
const QUARTIC: [f64; 5] = [0.0, 0.0, 0.0, 0.0, 0.25];
const MIXED: [f64; 5] = [0.0, 0.0, 0.5, 0.0, 0.25];

/// The targets of the WS suite with their potentials when they are Gibbs laws.
fn ws_family() -> Vec<(&'static str, ChebMeasure, Option<ConvexPotential>)> {
    vec![
        ("eta", ChebMeasure::semicircle(), Some(poly(&HALF))),
        ("S(0,1/2)", ChebMeasure::scaled_semicircle(0.5).unwrap(), Some(poly(&[0.0, 0.0, 1.0]))),
        ("S(0,2)", ChebMeasure::scaled_semicircle(2.0).unwrap(), Some(poly(&[0.0, 0.0, 0.25]))),
        ("uniform", ChebMeasure::uniform(-1.0, 1.0).unwrap(), None),
        ("quartic", gibbs(&poly(&QUARTIC)), Some(poly(&QUARTIC))),
        ("mixed", gibbs(&poly(&MIXED)), Some(poly(&MIXED))),
    ]
}

#[test]
fn ws_inequality_and_kernel_invariants() {
    let opts = MomentMapOptions::default();
    let v = poly(&HALF);
    for (name, mu, _) in ws_family() {
        let map = solve_moment_map(&mu, &opts).unwrap();
        let source = source_discrepancy(&map);
        let a = moment_stein_kernel(map);
        let d = stein_discrepancy(&a, &mu).unwrap();
        let w2 = w2_distance(&mu, &ChebMeasure::semicircle()).unwrap();
        assert!(w2 * w2 <= d + 1e-8, "{name}: {w2} vs {d}");
        assert!((d - source).abs() <= 1e-8, "{name}: {d} vs {source}");
        let (asym, min) = kernel_grid_check(&a, 64).unwrap();
        assert!(asym == 0.0 && min > 0.0, "{name}");
        for k in 1..=8 {
            let r = stein_residual(&a, &mu, &v, &Polynomial::monomial(k)).unwrap();
            assert!(r <= 1e-6, "{name}, x^{k}: {r}");
        }
    }
}

#[test]
fn scaled_semicircle_values() {
    for v in [0.5, 2.0] {
        let mu = ChebMeasure::scaled_semicircle(v).unwrap();
        let a = moment_stein_kernel(solve_moment_map(&mu, &MomentMapOptions::default()).unwrap());
        assert!((a.eval(0.3, -0.4).unwrap() - v).abs() < 1e-9);
        assert!((stein_discrepancy(&a, &mu).unwrap() - (v - 1.0).powi(2)).abs() < 1e-8);
        assert!((w2_distance(&mu, &ChebMeasure::semicircle()).unwrap() - (v.sqrt() - 1.0).abs()).abs() < 1e-8);
    }
}

#[test]
fn stein_residual_examples() {
    let eta = ChebMeasure::semicircle();
    let half = poly(&HALF);
    let one = SteinKernel1D::constant(1.0, eta.support());
    assert!(stein_residual(&one, &eta, &half, &Polynomial::monomial(3)).unwrap() < 1e-9);
    let s2 = ChebMeasure::scaled_semicircle(2.0).unwrap();
    let two = SteinKernel1D::constant(2.0, s2.support());
    assert!(stein_residual(&two, &s2, &half, &Polynomial::monomial(1)).unwrap() < 1e-9);
    let wrong = SteinKernel1D::constant(1.0, s2.support());
    assert!((stein_residual(&wrong, &s2, &half, &Polynomial::monomial(1)).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn transported_kernels() {
    let eta = ChebMeasure::semicircle();
    let opts = MomentMapOptions::default();
    // V = x^2/2 leaves the kernel unchanged.
    let base = SteinKernel1D::constant(1.0, eta.support());
    let same = transported_kernel(base, &eta, &poly(&HALF)).unwrap();
    assert!((same.eval(0.5, -1.0).unwrap() - 1.0).abs() < 1e-12);
    // V = c x^2 / 2 on eta: mu_V = S(0, c^2), A_V = c^2, transported kernel = c.
    let c = 1.5;
    let v = poly(&[0.0, 0.0, 0.5 * c]);
    let a = transported_moment_kernel(&eta, &v, &opts).unwrap();
    assert!((a.eval(0.2, 1.1).unwrap() - c).abs() < 1e-8);
    assert!(stein_residual(&a, &eta, &v, &Polynomial::monomial(1)).unwrap() < 1e-8);
    // Quartic Gibbs law against its own potential.
    let mixed = poly(&MIXED);
    let nu = gibbs(&mixed);
    let a = transported_moment_kernel(&nu, &mixed, &opts).unwrap();
    for k in 1..=4 {
        assert!(stein_residual(&a, &nu, &mixed, &Polynomial::monomial(k)).unwrap() <= 1e-5);
    }
    let off = ChebMeasure::uniform(-1.0, 1.0).unwrap();
    let tilted = poly(&[0.0, 0.3, 0.5]);
    let inner = SteinKernel1D::constant(1.0, off.support());
    assert!(matches!(transported_kernel(inner, &off, &tilted), Err(Error::BarycenterNotZero { .. })));
    assert!(matches!(transported_moment_kernel(&off, &tilted, &opts), Err(Error::NotCentered { .. })));
}

#[test]
fn contraction_and_caffarelli() {
    let opts = MomentMapOptions::default();
    let r = contraction_check(&poly(&HALF), ContractionMode::MomentMap, &opts).unwrap();
    assert!((r.bound_observed - 1.0).abs() < 1e-6 && r.pass);
    let r = contraction_check(&poly(&MIXED), ContractionMode::MomentMap, &opts).unwrap();
    assert!(r.bound_observed <= 1.0 + 1e-6 && r.kernel_sup.unwrap() <= 1.0 + 1e-6 && r.pass);
    let r = contraction_check(&poly(&[0.0, 0.0, 1.0]), ContractionMode::Caffarelli, &opts).unwrap();
    assert!((r.bound_observed - 0.5f64.sqrt()).abs() < 1e-8 && r.bound_observed <= 0.5f64.sqrt() + 1e-8);
    assert!(matches!(
        contraction_check(&poly(&QUARTIC), ContractionMode::MomentMap, &opts),
        Err(Error::HypothesisNotMet(_))
    ));
}

#[test]
fn stability_probe_and_report() {
    let r = stability_probe(&poly(&HALF)).unwrap();
    assert!(r.w2 < 1e-9 && r.transport_deviation < 1e-9);
    assert!(matches!(stability_probe(&poly(&[0.0, 0.0, 2.0])), Err(Error::HypothesisNotMet(_))));
    let r = stability_report(&poly(&[0.0, 0.0, 2.0])).unwrap();
    assert_eq!(r.failed_hypotheses.len(), 2);
}

#[test]
fn clt_on_the_semicircle_and_moment_law() {
    let opts = ConvolutionOptions::default();
    let r = clt_experiment(&poly(&HALF), &[2, 4, 8], &opts).unwrap();
    assert!(r.entries.iter().all(|e| e.w2_squared < 1e-16));
    let r = clt_experiment(&poly(&MIXED), &[2, 4, 8], &opts).unwrap();
    for e in &r.entries {
        assert!((e.m4 - e.m4_predicted).abs() < 1e-8, "{e:?}");
    }
    assert!(r.entries.windows(2).all(|w| w[1].w2_squared < w[0].w2_squared));
    assert!(matches!(clt_experiment(&poly(&HALF), &[0], &opts), Err(Error::InvalidArgument(_))));
}

fn manifolds() -> Vec<(&'static str, HessianManifold)> {
    let opts = MomentMapOptions::default();
    ws_family()
        .into_iter()
        .filter_map(|(name, mu, u)| {
            let map = solve_moment_map(&mu, &opts).unwrap();
            u.map(|u| (name, HessianManifold::new(map, u, DiffusionOptions::default())))
        })
        .collect()
}

#[test]
fn diffusion_identities_on_the_gibbs_family() {
    for (name, m) in manifolds() {
        assert!(eigen_residual(&m) <= 1e-5, "{name}");
        for i in 1..=5 {
            assert!(stationarity_residual(&m, &Polynomial::monomial(i)) <= 1e-7, "{name}, x^{i}");
            for j in i..=5 {
                let r = dirichlet_residual(&m, &Polynomial::monomial(i), &Polynomial::monomial(j));
                assert!(r.residual <= 1e-6 && r.symmetry <= 1e-8, "{name}, ({i}, {j}): {r:?}");
            }
        }
        assert!(stationarity_residual(&m, &Polynomial::monomial(6)) <= 1e-7);
        let u = m.u_target().clone();
        let nu = solve_equilibrium(&u, &EquilibriumOptions::default()).unwrap().measure;
        for k in 0..=5 {
            assert!(langevin_check(&u, &nu, &Polynomial::monomial(k)).residual <= 1e-7, "{name}, x^{k}");
        }
    }
}

#[test]
fn ornstein_uhlenbeck_examples() {
    let half = poly(&HALF);
    let m = HessianManifold::from_gibbs(&half, &MomentMapOptions::default()).unwrap();
    let x = Polynomial::monomial(1);
    let x2 = Polynomial::monomial(2);
    let r = dirichlet_residual(&m, &x, &x);
    assert!((r.energy - 1.0).abs() < 1e-9 && r.residual < 1e-9);
    let r = dirichlet_residual(&m, &x, &x2);
    assert!(r.energy.abs() < 1e-9 && r.pairing_fg.abs() < 1e-9);
    let r = dirichlet_residual(&m, &Polynomial::new(vec![3.0]), &x2);
    assert!(r.energy.abs() < 1e-12 && r.pairing_fg.abs() < 1e-9);
    assert!((laplacian_apply(&m, &x2, 0.5) - 1.5).abs() < 1e-9);
    assert!((gamma(&m, &x, &x2, 0.2, 0.9) - 1.1).abs() < 1e-9);
    assert!((gamma2(&m, &x, -0.3, 0.4) - 1.0).abs() < 1e-9);

    let eta = ChebMeasure::semicircle();
    assert!((langevin_apply(&half, &eta, &x2, 0.7) - (2.0 * 0.49 - 2.0)).abs() < 1e-9);
    let l = langevin_check(&half, &eta, &x2);
    assert!((l.quadratic_form - 2.0).abs() < 1e-9 && (l.h1_seminorm_sq - 2.0).abs() < 1e-9);
    assert!(langevin_check(&half, &eta, &Polynomial::new(vec![4.0])).quadratic_form.abs() < 1e-12);

    let family: Vec<Polynomial> =
        [vec![0.0, 1.0], vec![-1.0, 0.0, 1.0], vec![0.0, -2.0, 0.0, 1.0]].into_iter().map(Polynomial::new).collect();
    let r = bakry_emery_probe(&m, &family, 16, 0.5).unwrap();
    assert!(r.exploratory && r.min_gap >= -1e-9);
    let r = bakry_emery_probe(&m, &[Polynomial::new(vec![1.0])], 8, 0.5).unwrap();
    assert!(r.min_gap.abs() < 1e-12);
}

#[test]
fn variance_inequalities() {
    let eta = ChebMeasure::semicircle();
    let x = Polynomial::monomial(1);
    let r = variance_check(&VarianceInputs::FreePoincare { mu: &eta, constant: Some(1.0) }, &x).unwrap();
    assert!((r.lhs - 1.0).abs() < 1e-12 && (r.rhs - 1.0).abs() < 1e-12 && r.pass);
    for c in [0.5, 2.0] {
        let v = poly(&[0.0, 0.0, 0.5 * c]);
        let r = variance_check(&VarianceInputs::BrascampLieb { v: &v }, &x).unwrap();
        assert!((r.lhs - 1.0 / c).abs() < 1e-10 && (r.rhs - 1.0 / c).abs() < 1e-10);
        let s = ChebMeasure::scaled_semicircle(c).unwrap();
        let a = moment_stein_kernel(solve_moment_map(&s, &MomentMapOptions::default()).unwrap());
        let r = variance_check(&VarianceInputs::WeightedPoincare { mu: &s, kernel: &a }, &x).unwrap();
        assert!((r.lhs - c).abs() < 1e-10 && (r.rhs - c).abs() < 1e-9, "{r:?}");
    }
    let mixed = poly(&MIXED);
    let nu = gibbs(&mixed);
    let a = moment_stein_kernel(solve_moment_map(&nu, &MomentMapOptions::default()).unwrap());
    for k in 1..=6 {
        let f = Polynomial::monomial(k);
        assert!(variance_check(&VarianceInputs::FreePoincare { mu: &eta, constant: None }, &f).unwrap().pass);
        assert!(variance_check(&VarianceInputs::BrascampLieb { v: &mixed }, &f).unwrap().pass);
        assert!(variance_check(&VarianceInputs::WeightedPoincare { mu: &nu, kernel: &a }, &f).unwrap().pass);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn uniformly_convex_kernels_are_bounded(c in 0.5f64..2.0, quart in 0.0f64..0.4) {
        let u = poly(&[0.0, 0.0, 0.5 * c, 0.0, quart]);
        let r = contraction_check(&u, ContractionMode::MomentMap, &MomentMapOptions::default()).unwrap();
        prop_assert!(r.kernel_sup.unwrap() <= 1.0 / r.epsilon + 1e-6);
        prop_assert!(r.bound_observed <= 1.0 / r.epsilon + 1e-6);
    }

    #[test]
    fn ws_inequality_on_random_gibbs_laws(c in 0.4f64..2.5, quart in 0.0f64..0.4) {
        let mu = gibbs(&poly(&[0.0, 0.0, 0.5 * c, 0.0, quart]));
        let a = moment_stein_kernel(solve_moment_map(&mu, &MomentMapOptions::default()).unwrap());
        let w2 = w2_distance(&mu, &ChebMeasure::semicircle()).unwrap();
        prop_assert!(w2 * w2 <= stein_discrepancy(&a, &mu).unwrap() + 1e-8);
    }
}
