use scalekit::exit::{mean_discounted_occupation, provider_for, up_exit, ExitSpec};
use scalekit::mc::{estimate_exits, estimate_green_density, estimate_up_exit, simulate_paths, ExitSide, McConfig};
use scalekit::model::{DiffusionModel, Model, SnlpModel};

fn cfg(paths: u64, step: f64, seed: u64) -> McConfig {
    McConfig { paths, step, horizon: 50.0, seed, ..McConfig::default() }
}

fn bm() -> Model {
    SnlpModel::brownian(0.0, 1.0).into()
}

#[test]
fn standard_error_shrinks_like_one_over_root_n() {
    let spec = ExitSpec::new(0.0, 1.0, 0.3, 0.0).unwrap();
    let small = estimate_up_exit(&bm(), &spec, &cfg(2_000, 1e-3, 11)).unwrap();
    let large = estimate_up_exit(&bm(), &spec, &cfg(32_000, 1e-3, 11)).unwrap();
    let ratio = small.std_error / large.std_error;
    assert!((ratio / 4.0 - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn bridge_correction_removes_most_of_the_step_bias() {
    // Without the crossing check a coarse grid overshoots the true exit and
    // undercounts exits through whichever barrier is crossed between steps.
    let spec = ExitSpec::new(0.0, 1.0, 0.3, 0.0).unwrap();
    let coarse = McConfig { bridge_correction: false, ..cfg(20_000, 1e-2, 5) };
    let corrected = McConfig { bridge_correction: true, ..coarse };
    let raw = estimate_up_exit(&bm(), &spec, &coarse).unwrap();
    let fixed = estimate_up_exit(&bm(), &spec, &corrected).unwrap();
    let (e_raw, e_fixed) = ((raw.mean - 0.3).abs(), (fixed.mean - 0.3).abs());
    assert!(e_fixed < 3.0 * fixed.std_error + 1e-3, "corrected error {e_fixed}");
    assert!(e_fixed < e_raw, "{e_fixed} vs {e_raw}");
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let model: Model = SnlpModel::cramer_lundberg(1.5, 1.0, 1.0).into();
    let spec = ExitSpec::new(-2.0, 1.0, 0.0, 0.3).unwrap();
    let one = McConfig { workers: 1, ..cfg(3_000, 1e-3, 99) };
    let four = McConfig { workers: 4, ..one };
    let (u1, d1) = estimate_exits(&model, &spec, &one).unwrap();
    let (u4, d4) = estimate_exits(&model, &spec, &four).unwrap();
    assert_eq!(u1.mean.to_bits(), u4.mean.to_bits());
    assert_eq!(d1.std_error.to_bits(), d4.std_error.to_bits());
    let g1 = estimate_green_density(&model, &spec, -0.5, &one).unwrap();
    let g4 = estimate_green_density(&model, &spec, -0.5, &four).unwrap();
    assert_eq!(g1.mean.to_bits(), g4.mean.to_bits());
}

#[test]
fn different_seeds_give_different_paths() {
    let spec = ExitSpec::new(0.0, 1.0, 0.3, 0.0).unwrap();
    let a = estimate_up_exit(&bm(), &spec, &cfg(500, 1e-3, 1)).unwrap();
    let b = estimate_up_exit(&bm(), &spec, &cfg(500, 1e-3, 2)).unwrap();
    assert_ne!(a.mean, b.mean);
}

#[test]
fn integrated_green_estimates_recover_the_exit_time() {
    // At q = 0 the occupation density integrates to E[τ] = x(1 - x) = 0.21.
    let model: Model = DiffusionModel::brownian(0.0, 1.0).into();
    let spec = ExitSpec::new(0.0, 1.0, 0.3, 0.0).unwrap();
    // Densities are with respect to the speed measure, so weight by m'(y).
    let sp = provider_for(&model, 0.0, 1e-3).unwrap();
    let c = McConfig { band_halfwidth: Some(0.04), ..cfg(4_000, 1e-4, 3) };
    let total: f64 = (0..10)
        .map(|i| {
            let y = 0.05 + 0.1 * i as f64;
            estimate_green_density(&model, &spec, y, &c).unwrap().mean * sp.reference_density(y).unwrap() * 0.1
        })
        .sum();
    assert!((total - 0.21).abs() < 0.01, "{total}");
    assert!((mean_discounted_occupation(sp.as_ref(), &spec, 200).unwrap() - 0.21).abs() < 1e-9);
}

#[test]
fn exit_estimates_track_the_analytic_values() {
    let model: Model = SnlpModel::brownian(-1.0, 1.0).into();
    let spec = ExitSpec::new(-1.0, 1.0, 0.0, 0.5).unwrap();
    let est = estimate_up_exit(&model, &spec, &cfg(20_000, 1e-3, 8)).unwrap();
    let sp = provider_for(&model, 0.5, 1e-3).unwrap();
    let exact = up_exit(sp.as_ref(), &spec).unwrap();
    assert!((est.mean - exact).abs() < 4.0 * est.std_error + 1e-2, "{} vs {exact}", est.mean);
}

#[test]
fn short_horizon_flags_truncation() {
    let spec = ExitSpec::new(-5.0, 5.0, 0.0, 0.0).unwrap();
    let c = McConfig { horizon: 0.05, ..cfg(200, 1e-3, 4) };
    let est = estimate_up_exit(&bm(), &spec, &c).unwrap();
    assert!(est.truncated_paths > 0);
    assert!(!est.horizon_adequate());
    let paths = simulate_paths(&bm(), &spec, &c, None).unwrap();
    assert!(paths.iter().any(|p| p.side == ExitSide::Truncated));
}

#[test]
fn invalid_configs_are_rejected() {
    let spec = ExitSpec::new(0.0, 1.0, 0.3, 0.0).unwrap();
    for bad in [cfg(0, 1e-3, 1), cfg(10, 0.0, 1), McConfig { horizon: -1.0, ..cfg(10, 1e-3, 1) }] {
        assert!(estimate_up_exit(&bm(), &spec, &bad).is_err());
    }
}
