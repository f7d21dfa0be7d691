//! End-to-end checks through the public API: landscape files, pulse files,
//! gradients and a short optimization at a low-splitting point.

use spinbus_core::fidelity::{evaluate_trajectory, GateTarget};
use spinbus_core::landscape::{
    generate_ge_diffusion, load_landscape, sample_ensemble, save_landscape, Device, GeDiffusionConfig, LandscapeProfile, StepModelConfig,
    ValleyModel,
};
use spinbus_core::model::{analytical_amplitude, analytical_gate_time, frame_frequency};
use spinbus_core::optimizer::{finite_difference_gradient, infidelity_and_gradient, optimize_trajectory, OptimizationConfig};
use spinbus_core::pulse::sinusoid_controls;
use spinbus_core::{ControlVector, SimParams, TrajectorySpec};

fn params() -> SimParams {
    let mut p = SimParams::default();
    p.kappa_z = 5e-6;
    p
}

#[test]
fn landscape_file_round_trip_is_bitwise() {
    let land = generate_ge_diffusion(&GeDiffusionConfig::default(), 7).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("land.json");
    save_landscape(&land, &path).unwrap();
    let back = load_landscape(&path).unwrap();
    assert_eq!(back.delta_real(), land.delta_real());
    assert_eq!(back.delta_imag(), land.delta_imag());
    for x in [3.3, 50.0, 123.456] {
        assert_eq!(back.valley_splitting(x).unwrap().to_bits(), land.valley_splitting(x).unwrap().to_bits());
    }
}

#[test]
fn ensembles_are_reproducible_per_seed() {
    for model in [ValleyModel::GeDiffusion(GeDiffusionConfig::default()), ValleyModel::Step(StepModelConfig::default())] {
        let a = sample_ensemble(&model, 3, 11).unwrap();
        let b = sample_ensemble(&model, 3, 11).unwrap();
        let c = sample_ensemble(&model, 3, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].delta_real(), c[0].delta_real());
    }
}

#[test]
fn adjoint_gradient_matches_central_differences() {
    let p = params();
    let land = generate_ge_diffusion(&GeDiffusionConfig::default(), 5).unwrap();
    let dev = Device::new(&land, 90.0).unwrap();
    let tg = 6.0;
    let target = GateTarget::y_pi(&p, tg).unwrap();
    let x0 = analytical_amplitude(&p, tg).unwrap();
    let mut cv = sinusoid_controls(&TrajectorySpec::new(x0, frame_frequency(&p), tg), 10.0).unwrap();
    for (k, v) in cv.knots.iter_mut().enumerate() {
        *v += 0.7 * (k as f64 * 1.3).sin();
    }
    let idx = [1, 9, 17, 30, 44, 59];
    let (_, g) = infidelity_and_gradient(&cv, &dev, &p, &target).unwrap();
    let fd = finite_difference_gradient(&cv, &dev, &p, &target, 1e-3, &idx).unwrap();
    for (&k, f) in idx.iter().zip(&fd) {
        assert!((g[k] - f).abs() <= 1e-5 * g[k].abs().max(1e-8), "knot {k}: {} vs {f}", g[k]);
    }
}

#[test]
fn optimization_rescues_a_low_splitting_point() {
    let p = params();
    // E_V = 7 µeV, close to the Zeeman energy: the analytical pulse mixes valley and spin.
    let land = LandscapeProfile::flat(0.0, 200.0, 0.1, 3.5e-3, 0.0).unwrap();
    let dev = Device::new(&land, 100.0).unwrap();
    let tg = analytical_gate_time(&p, 10.0).unwrap();
    let target = GateTarget::y_pi(&p, tg).unwrap();
    let start = sinusoid_controls(&TrajectorySpec::new(10.0, frame_frequency(&p), tg), 10.0).unwrap();
    let before = evaluate_trajectory(&start, &dev, &p, &target).unwrap().infidelity;
    let cfg = OptimizationConfig { max_iterations: 40, ..Default::default() };
    let trace = optimize_trajectory(&start, &cfg, &dev, &p, &target).unwrap();
    let after = evaluate_trajectory(&trace.final_controls, &dev, &p, &target).unwrap().infidelity;
    assert!((after - trace.best_infidelity).abs() <= 1e-12);
    assert!(after < before / 5.0, "{before:e} -> {after:e}");
    assert!(trace.final_controls.knots.iter().all(|k| k.abs() <= cfg.control_bounds));
    assert_eq!(trace.final_controls.knots[0], 0.0);
    assert_eq!(*trace.final_controls.knots.last().unwrap(), 0.0);
}

#[test]
fn pulse_file_round_trip_preserves_infidelity() {
    let p = params();
    let land = LandscapeProfile::flat(0.0, 200.0, 0.1, 0.05, 0.0).unwrap();
    let dev = Device::new(&land, 100.0).unwrap();
    let tg = 12.0;
    let target = GateTarget::y_pi(&p, tg).unwrap();
    let cv = sinusoid_controls(&TrajectorySpec::new(analytical_amplitude(&p, tg).unwrap(), frame_frequency(&p), tg), 10.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pulse.json");
    cv.save(&path).unwrap();
    let back = ControlVector::load(&path).unwrap();
    assert_eq!(back, cv);
    let a = evaluate_trajectory(&cv, &dev, &p, &target).unwrap().infidelity;
    let b = evaluate_trajectory(&back, &dev, &p, &target).unwrap().infidelity;
    assert_eq!(a.to_bits(), b.to_bits());
}
