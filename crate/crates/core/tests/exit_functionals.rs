use proptest::prelude::*;
use scalekit::exit::{
    down_exit, green_density, killed_resolvent, mean_discounted_occupation, provider_for, up_exit, DiffusionProvider,
    ExitSpec, ScaleProvider,
};
use scalekit::levy::LevyScale;
use scalekit::model::{DiffusionModel, JumpLaw, Model, SnlpModel};

fn bm_diffusion(q: f64) -> DiffusionProvider {
    DiffusionProvider::new(DiffusionModel::brownian(0.0, 1.0), q, 1e-3).unwrap()
}

fn levy_catalog() -> Vec<SnlpModel> {
    vec![
        SnlpModel::brownian(0.0, 1.0),
        SnlpModel::brownian(-1.0, 1.0),
        SnlpModel::cramer_lundberg(1.5, 1.0, 1.0),
        SnlpModel { drift: 0.4, gaussian: 0.7, jump_rate: 2.0, jump_law: JumpLaw::Exponential { mean: 0.3 } },
        SnlpModel { drift: 2.0, gaussian: 0.0, jump_rate: 1.0, jump_law: JumpLaw::Fixed { size: 0.7 } },
    ]
}

#[test]
fn brownian_down_exit_is_a_sinh_ratio() {
    let levy = LevyScale::new(SnlpModel::brownian(0.0, 1.0), 0.0).unwrap();
    for q in [0.1, 0.5, 2.0] {
        let s = LevyScale::new(*levy.model(), q).unwrap();
        let r = (2.0 * q).sqrt();
        for (b, a, x) in [(0.0, 1.0, 0.3), (-1.0, 2.0, 0.5)] {
            let spec = ExitSpec::new(b, a, x, q).unwrap();
            let expect = (r * (a - x)).sinh() / (r * (a - b)).sinh();
            assert!((down_exit(&s, &spec).unwrap() - expect).abs() < 1e-8);
            let up_expect = (r * (x - b)).sinh() / (r * (a - b)).sinh();
            assert!((up_exit(&s, &spec).unwrap() - up_expect).abs() < 1e-8);
        }
    }
}

#[test]
fn sinh_ratio_example() {
    let s = LevyScale::new(SnlpModel::brownian(0.0, 1.0), 1.0).unwrap();
    let spec = ExitSpec::new(0.0, 1.0, 0.5, 1.0).unwrap();
    let v = up_exit(&s, &spec).unwrap();
    assert!((v - 0.39664).abs() < 1e-5, "{v}");
}

#[test]
fn green_density_examples() {
    let sp = bm_diffusion(0.0);
    let spec = ExitSpec::new(0.0, 1.0, 0.3, 0.0).unwrap();
    assert!((green_density(&sp, &spec, 0.7).unwrap() - 0.09).abs() < 1e-12);
    assert!((green_density(&sp, &spec, 0.3).unwrap() - 0.21).abs() < 1e-12);
    assert!(green_density(&sp, &spec, 1.0).is_err());
}

#[test]
fn green_density_is_symmetric_for_self_dual_diffusions() {
    let m = DiffusionModel::ornstein_uhlenbeck(1.0, 0.2, 0.9);
    let sp = DiffusionProvider::new(m, 0.5, 1e-3).unwrap();
    for (x, y) in [(0.1, 0.6), (-0.4, 0.2), (0.5, -0.5)] {
        let g_xy = green_density(&sp, &ExitSpec::new(-0.8, 0.9, x, 0.5).unwrap(), y).unwrap();
        let g_yx = green_density(&sp, &ExitSpec::new(-0.8, 0.9, y, 0.5).unwrap(), x).unwrap();
        assert!((g_xy - g_yx).abs() < 1e-6 * g_xy.max(1.0), "({x},{y}): {g_xy} vs {g_yx}");
    }
}

#[test]
fn driftless_brownian_green_density_mirrors() {
    let sp = bm_diffusion(0.7);
    let (b, a) = (-0.5, 1.5);
    for (x, y) in [(0.2, 0.9), (1.1, 0.0), (0.5, 0.5)] {
        let g = green_density(&sp, &ExitSpec::new(b, a, x, 0.7).unwrap(), y).unwrap();
        let mirrored = green_density(&sp, &ExitSpec::new(b, a, a + b - x, 0.7).unwrap(), a + b - y).unwrap();
        assert!((g - mirrored).abs() < 1e-8, "{g} vs {mirrored}");
    }
}

#[test]
fn chain_identity_on_all_analytic_configurations() {
    for m in levy_catalog() {
        for q in [0.1, 0.5, 2.0] {
            let s = LevyScale::new(m, q).unwrap();
            for (b, a, x) in [(-2.0, 1.0, 0.0), (0.0, 3.0, 2.5)] {
                let spec = ExitSpec::new(b, a, x, q).unwrap();
                let total = up_exit(&s, &spec).unwrap()
                    + down_exit(&s, &spec).unwrap()
                    + q * mean_discounted_occupation(&s, &spec, 600).unwrap();
                assert!((total - 1.0).abs() < 1e-8, "{m:?} q={q} ({b},{a},{x}): {total}");
            }
        }
    }
}

#[test]
fn chain_identity_for_diffusions() {
    let m = DiffusionModel::ornstein_uhlenbeck(1.0, 0.0, 1.0);
    let sp = DiffusionProvider::new(m, 0.5, 1e-3).unwrap();
    let spec = ExitSpec::new(-1.0, 1.0, 0.2, 0.5).unwrap();
    let total = up_exit(&sp, &spec).unwrap()
        + down_exit(&sp, &spec).unwrap()
        + 0.5 * mean_discounted_occupation(&sp, &spec, 200).unwrap();
    assert!((total - 1.0).abs() < 1e-6, "{total}");
}

#[test]
fn expected_exit_time_of_brownian_motion() {
    let sp = bm_diffusion(0.0);
    let spec = ExitSpec::new(0.0, 1.0, 0.5, 0.0).unwrap();
    assert!((mean_discounted_occupation(&sp, &spec, 200).unwrap() - 0.25).abs() < 1e-9);
}

#[test]
fn killed_resolvent_rejects_negative_f_and_vanishes_for_zero_f() {
    let sp = bm_diffusion(0.5);
    let spec = ExitSpec::new(0.0, 1.0, 0.5, 0.5).unwrap();
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let m = vec![2.0; 11];
    assert_eq!(killed_resolvent(&sp, &spec, &grid, &[0.0; 11], &m).unwrap(), 0.0);
    let mut f = vec![1.0; 11];
    f[3] = -1.0;
    assert!(killed_resolvent(&sp, &spec, &grid, &f, &m).is_err());
}

#[test]
fn spec_validation() {
    assert!(ExitSpec::new(1.0, 0.0, 0.5, 0.0).is_err());
    assert!(ExitSpec::new(0.0, 1.0, 1.0, 0.0).is_err());
    assert!(ExitSpec::new(0.0, 1.0, 0.5, -1.0).is_err());
    // q mismatch between spec and provider.
    let sp = bm_diffusion(0.5);
    assert!(up_exit(&sp, &ExitSpec::new(0.0, 1.0, 0.5, 0.0).unwrap()).is_err());
}

fn arb_case() -> impl Strategy<Value = (usize, f64, f64, f64, f64)> {
    (0usize..6, 0.0f64..2.0, -2.0f64..0.0, 0.2f64..2.0, 0.05f64..0.95)
}

fn provider(idx: usize, q: f64) -> Box<dyn ScaleProvider> {
    let model: Model =
        if idx < 5 { levy_catalog()[idx].into() } else { DiffusionModel::ornstein_uhlenbeck(1.0, 0.0, 1.0).into() };
    provider_for(&model, q, 2e-3).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn ranges_and_positivity((idx, q, b, a, t) in arb_case(), ty in 0.05f64..0.95) {
        let sp = provider(idx, q);
        let x = b + t * (a - b);
        let spec = ExitSpec::new(b, a, x, q).unwrap();
        let up = up_exit(sp.as_ref(), &spec).unwrap();
        let down = down_exit(sp.as_ref(), &spec).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&up));
        prop_assert!((-1e-9..=1.0 + 1e-9).contains(&down));
        prop_assert!(up + down <= 1.0 + 1e-9);
        let y = b + ty * (a - b);
        prop_assert!(green_density(sp.as_ref(), &spec, y).unwrap() >= -1e-9);
    }

    #[test]
    fn monotone_in_q((idx, q, b, a, t) in arb_case(), dq in 0.05f64..1.0) {
        let x = b + t * (a - b);
        let lo = provider(idx, q);
        let hi = provider(idx, q + dq);
        let s_lo = ExitSpec::new(b, a, x, q).unwrap();
        let s_hi = ExitSpec::new(b, a, x, q + dq).unwrap();
        prop_assert!(up_exit(hi.as_ref(), &s_hi).unwrap() <= up_exit(lo.as_ref(), &s_lo).unwrap() + 1e-9);
        prop_assert!(down_exit(hi.as_ref(), &s_hi).unwrap() <= down_exit(lo.as_ref(), &s_lo).unwrap() + 1e-9);
    }

    #[test]
    fn enlarging_the_window_lowers_up_exit((idx, q, b, a, t) in arb_case(), extra in 0.05f64..1.0) {
        let sp = provider(idx, q);
        let x = b + t * (a - b);
        let near = up_exit(sp.as_ref(), &ExitSpec::new(b, a, x, q).unwrap()).unwrap();
        let far = up_exit(sp.as_ref(), &ExitSpec::new(b, a + extra, x, q).unwrap()).unwrap();
        prop_assert!(far <= near + 1e-9);
    }
}
