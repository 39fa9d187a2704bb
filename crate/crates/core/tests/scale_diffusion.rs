use proptest::prelude::*;
use scalekit::diffusion::{z_by_definition, DiffusionScale};
use scalekit::exit::{green_density, up_exit, DiffusionProvider, ExitSpec, ScaleProvider};
use scalekit::levy::LevyScale;
use scalekit::model::{Coefficient, DiffusionModel, SnlpModel};

#[test]
fn sinh_at_one_and_second_order() {
    let m = DiffusionModel::brownian(0.0, 1.0);
    let err = |h: f64| {
        let sc = DiffusionScale::solve_uniform(&m, 0.5, 0.0, 1.0, h).unwrap();
        (sc.w(1.0, 0.0).unwrap() - 1f64.sinh()).abs()
    };
    let (e1, e2) = (err(1e-3), err(2e-3));
    assert!(e1 <= 1e-6, "error {e1}");
    let ratio = e2 / e1;
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn drifted_brownian_matches_levy_scale_up_to_normalization() {
    // With anchor 0, s'(y) = e^{-2μy}, so W_diff(x, y) = e^{-2μy} W_levy(x - y) / 2.
    for mu in [-1.0, 0.5] {
        let m = DiffusionModel::brownian(mu, 1.0);
        let levy = LevyScale::new(SnlpModel::brownian(mu, 1.0), 0.7).unwrap();
        let sp = DiffusionProvider::new(m, 0.7, 1e-3).unwrap();
        for (x, y) in [(0.5, 0.0), (1.2, -0.3), (2.0, 1.0)] {
            let expect = (-2.0 * mu * y).exp() * levy.w(x - y).unwrap() / 2.0;
            let got = sp.w(x, y).unwrap();
            assert!((got - expect).abs() <= 1e-6 * expect.max(1.0), "mu={mu} ({x},{y}): {got} vs {expect}");
            let z = sp.z(x, y).unwrap();
            let z_levy = levy.z(x - y).unwrap();
            assert!((z - z_levy).abs() <= 1e-6 * z_levy, "Z mu={mu}: {z} vs {z_levy}");
        }
    }
}

#[test]
fn z_agrees_with_its_definition() {
    let m = DiffusionModel::ornstein_uhlenbeck(1.0, 0.2, 0.8);
    let sc = DiffusionScale::solve_uniform(&m, 0.6, -0.4, 0.8, 1e-3).unwrap();
    let direct = z_by_definition(&m, 0.6, 0.8, -0.4, 1e-3).unwrap();
    assert!((sc.z(0.8, -0.4).unwrap() - direct).abs() < 1e-6);
}

#[test]
fn exit_probabilities_do_not_depend_on_the_scale_anchor() {
    let mut m = DiffusionModel::ornstein_uhlenbeck(0.8, 0.0, 1.0);
    let spec = ExitSpec::new(-0.7, 0.9, 0.1, 0.4).unwrap();
    let a = DiffusionProvider::new(m.clone(), 0.4, 1e-3).unwrap();
    m.scale_anchor = 0.6;
    let b = DiffusionProvider::new(m, 0.4, 1e-3).unwrap();
    assert!((up_exit(&a, &spec).unwrap() - up_exit(&b, &spec).unwrap()).abs() < 1e-12);
    // G scales with s and m' inversely, so G·m' is invariant.
    let ga = green_density(&a, &spec, 0.3).unwrap() * a.reference_density(0.3).unwrap();
    let gb = green_density(&b, &spec, 0.3).unwrap() * b.reference_density(0.3).unwrap();
    assert!((ga - gb).abs() < 1e-10 * ga);
}

#[test]
fn table_coefficients_are_supported() {
    let m = DiffusionModel {
        left: -2.0,
        right: 2.0,
        mu: Coefficient::Table { x: vec![-2.0, 0.0, 2.0], y: vec![1.0, 0.0, -1.0] },
        sigma: Coefficient::constant(1.0),
        scale_anchor: 0.0,
        boundary_behavior: None,
    };
    let linear = DiffusionModel { left: -2.0, right: 2.0, ..DiffusionModel::ornstein_uhlenbeck(0.5, 0.0, 1.0) };
    let a = DiffusionScale::solve_uniform(&m, 0.3, -1.0, 1.0, 1e-3).unwrap();
    let b = DiffusionScale::solve_uniform(&linear, 0.3, -1.0, 1.0, 1e-3).unwrap();
    assert!((a.w(1.0, -1.0).unwrap() - b.w(1.0, -1.0).unwrap()).abs() < 1e-9);
}

#[test]
fn evaluation_outside_the_solved_grid_is_an_error() {
    let sc = DiffusionScale::solve_uniform(&DiffusionModel::brownian(0.0, 1.0), 0.5, 0.0, 1.0, 1e-2).unwrap();
    assert!(sc.w(1.5, 0.0).is_err());
    assert!(sc.w(0.5, 0.1).is_err());
    assert_eq!(sc.w(-0.5, 0.0).unwrap(), 0.0);
    assert_eq!(sc.z(-0.5, 0.0).unwrap(), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn w_increasing_and_z_at_least_one(
        rate in 0.1f64..2.0,
        level in -1.0f64..1.0,
        sig in 0.4f64..2.0,
        q in 0.0f64..3.0,
        y in -1.0f64..0.5,
        span in 0.05f64..1.5,
    ) {
        let m = DiffusionModel::ornstein_uhlenbeck(rate, level, sig);
        let sc = DiffusionScale::solve_uniform(&m, q, y, y + span, 5e-3).unwrap();
        prop_assert!(sc.psi_values().windows(2).all(|w| w[1] > w[0]));
        prop_assert!(sc.z_values().iter().all(|z| *z >= 1.0));
    }

    #[test]
    fn w_grows_with_q(q in 0.0f64..2.0, dq in 0.01f64..2.0, x in 0.05f64..1.5) {
        let m = DiffusionModel::brownian(-0.5, 1.2);
        let lo = DiffusionScale::solve_uniform(&m, q, 0.0, x, 5e-3).unwrap().w(x, 0.0).unwrap();
        let hi = DiffusionScale::solve_uniform(&m, q + dq, 0.0, x, 5e-3).unwrap().w(x, 0.0).unwrap();
        prop_assert!(hi >= lo);
    }
}
