use super::*;
use crate::landscape::LandscapeProfile;
use crate::linalg::{kron, sigma_x, spin_rotation, trace_distance2};
use crate::model::{analytical_gate_time, larmor_frequency};
use crate::pulse::{sinusoid_controls, TrajectorySpec};
use nalgebra::{Matrix4, Vector4};
use proptest::prelude::*;

fn random_unitary(a: [f64; 4]) -> M2 {
    let n = (a[1] * a[1] + a[2] * a[2] + a[3] * a[3]).sqrt().max(1e-12);
    let r = spin_rotation([a[1] / n, a[2] / n, a[3] / n], a[0]);
    r * C64::from_polar(1.0, a[1] - a[3])
}

/// Literal ancilla construction: ⟨φ|(𝟙⊗U†)(𝟙⊗E)(|φ⟩⟨φ|)(𝟙⊗U)|φ⟩.
fn ancilla_f_ent(ch: &SpinChannel, u: &M2) -> f64 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let phi = Vector4::new(c(r, 0.0), ZERO, ZERO, c(r, 0.0));
    let mut big = Matrix4::<C64>::zeros();
    for j in 0..2 {
        for k in 0..2 {
            let mut ejk = M2::zeros();
            ejk[(j, k)] = ONE;
            big += kron(&ejk, &ch.apply(&ejk)) * c(0.5, 0.0);
        }
    }
    let lifted = kron(&M2::identity(), u);
    let m = lifted.adjoint() * big * lifted;
    (phi.adjoint() * m * phi)[(0, 0)].re
}

fn depolarizing() -> SpinChannel {
    let mut ch = SpinChannel::identity();
    for (jk, m) in ch.images.iter_mut().enumerate() {
        *m = if jk / 2 == jk % 2 { M2::identity() * c(0.5, 0.0) } else { M2::zeros() };
    }
    ch
}

#[test]
fn identity_outputs_give_identity_channel() {
    let ins = default_spin_inputs();
    let ch = SpinChannel::from_pairs(&ins, &ins).unwrap();
    assert!(ch.images.iter().zip(SpinChannel::identity().images.iter()).all(|(a, b)| (a - b).norm() < 1e-14));
}

#[test]
fn fully_depolarized_outputs() {
    let ins = default_spin_inputs();
    let half = M2::identity() * c(0.5, 0.0);
    let ch = SpinChannel::from_pairs(&ins, &[half; 4]).unwrap();
    for rho in ins {
        assert!((ch.apply(&rho) - half).norm() < 1e-14);
    }
    assert!(ch.trace_preservation_error() < 1e-14);
}

#[test]
fn sigma_x_conjugation_recovered() {
    let ins = default_spin_inputs();
    let x = sigma_x();
    let outs = ins.map(|r| x * r * x);
    let ch = SpinChannel::from_pairs(&ins, &outs).unwrap();
    let want = SpinChannel::unitary(&x);
    for (a, b) in ch.images.iter().zip(want.images.iter()) {
        assert!((a - b).norm() < 1e-9);
    }
}

#[test]
fn incomplete_inputs_rejected() {
    let mut ins = default_spin_inputs();
    ins[3] = ins[2];
    assert!(matches!(SpinChannel::from_pairs(&ins, &ins), Err(Error::SingularReconstruction)));
}

#[test]
fn frame_rotation_fixture() {
    let mut p = SimParams::default();
    p.kappa_z = 0.0;
    let tg = 1.0 / larmor_frequency(&p);
    let t = GateTarget::y_pi(&p, tg).unwrap();
    assert!((counter_rotation(&t) + M2::identity()).norm() < 1e-12);
    let free = GateTarget { u_g: M2::identity(), ..t };
    let rep = average_gate_fidelity(&SpinChannel::unitary(&counter_rotation(&t)), &free);
    assert!((rep.f_avg - 1.0).abs() < 1e-12);
    let zero = GateTarget { tg: 0.0, ..t };
    assert!((counter_rotation(&zero) - M2::identity()).norm() < 1e-15);
}

#[test]
fn frame_shift_from_spin_valley_coupling() {
    let mut p = SimParams::default();
    p.kappa_z = 0.0;
    let w0 = GateTarget::y_pi(&p, 1.0).unwrap().omega_r;
    p.kappa_z = 5e-6;
    let w1 = GateTarget::y_pi(&p, 1.0).unwrap().omega_r;
    let shift_mhz = (w1 - w0) / (2.0 * std::f64::consts::PI) * 1e3;
    assert!((shift_mhz - 2.418).abs() < 1e-3, "{shift_mhz}");
}

#[test]
fn fidelity_identities() {
    let y = spin_rotation([0.0, 1.0, 0.0], std::f64::consts::PI);
    let t = GateTarget::new(y, 0.0, 10.0).unwrap();
    let id = average_gate_fidelity(&SpinChannel::identity(), &t);
    assert!(id.f_ent.abs() < 1e-12);
    assert!((id.f_avg - 1.0 / 3.0).abs() < 1e-12);
    let dep = average_gate_fidelity(&depolarizing(), &t);
    assert!((dep.f_ent - 0.25).abs() < 1e-12);
    assert!((dep.f_avg - 0.5).abs() < 1e-12);
    let perfect = average_gate_fidelity(&SpinChannel::unitary(&t.unitary()), &t);
    assert!((perfect.f_avg - 1.0).abs() < 1e-12);
}

fn flat_device_landscape() -> LandscapeProfile {
    LandscapeProfile::flat(-40.0, 40.0, 0.1, 0.05, 0.0).unwrap()
}

#[test]
fn zero_controls_give_one_third() {
    let land = flat_device_landscape();
    let dev = Device::new(&land, 0.0).unwrap();
    let mut p = SimParams::default().closed();
    p.kappa_z = 0.0;
    let cv = ControlVector::zeros(3.0, 10.0).unwrap();
    let t = GateTarget::y_pi(&p, 3.0).unwrap();
    let rep = evaluate_trajectory(&cv, &dev, &p, &t).unwrap();
    assert!((rep.f_avg - 1.0 / 3.0).abs() < 1e-9, "{rep:?}");
}

#[test]
fn resonant_pulse_on_large_splitting() {
    let land = flat_device_landscape();
    let dev = Device::new(&land, 0.0).unwrap();
    let mut p = SimParams::default().closed();
    p.kappa_z = 0.0;
    let x0 = 10.0;
    let tg = analytical_gate_time(&p, x0).unwrap();
    // Compensate the area lost in the two envelope ramps.
    let deficit = crate::pulse::ramp_area_deficit(crate::pulse::DEFAULT_RISE_TIME);
    let spec = TrajectorySpec::new(x0 * tg / (tg - deficit), larmor_frequency(&p), tg);
    let cv = sinusoid_controls(&spec, 10.0).unwrap();
    let rep = evaluate_trajectory(&cv, &dev, &p, &GateTarget::y_pi(&p, tg).unwrap()).unwrap();
    assert!(rep.infidelity < 1e-3, "{rep:?}");
}

#[test]
fn fifth_state_linearity() {
    let land = LandscapeProfile::flat(-40.0, 40.0, 0.1, 0.01, 0.004).unwrap();
    let dev = Device::new(&land, 0.0).unwrap();
    let mut p = SimParams::default();
    p.t1_v = 20.0;
    p.t2_s = 30.0;
    let spec = TrajectorySpec::new(8.0, 0.56, 4.0);
    let cv = sinusoid_controls(&spec, 10.0).unwrap();
    let traj = crate::pulse::upsample(&cv, p.dt).unwrap();
    let spins = default_spin_inputs();
    let rho0 = initial_states(&dev, &spins).unwrap();
    let res: [EvolutionResult; 4] = evolve_many(&rho0, &traj, &dev, &p).unwrap().try_into().unwrap();
    let ch = spin_channel_from_batch(&res, &spins).unwrap();
    assert!(ch.trace_preservation_error() < 1e-9);
    let fifth = M2::new(c(0.8, 0.0), c(0.1, -0.3), c(0.1, 0.3), c(0.2, 0.0));
    let direct = evolve_many(&[DensityMatrix::ground_valley(&dev, &fifth).unwrap()], &traj, &dev, &p).unwrap();
    let out = trace_valley(direct[0].rho_final.matrix());
    assert!(trace_distance2(&out, &ch.apply(&fifth)) < 1e-8);
}

#[test]
fn zero_padding_with_frame_time() {
    // Appending idle time is neutral once the frame rotation covers it.
    let land = flat_device_landscape();
    let dev = Device::new(&land, 0.0).unwrap();
    let mut p = SimParams::default().closed();
    p.kappa_z = 0.0;
    let spec = TrajectorySpec::new(10.0, larmor_frequency(&p), 6.0);
    let cv = sinusoid_controls(&spec, 10.0).unwrap();
    let base = evaluate_trajectory(&cv, &dev, &p, &GateTarget::y_pi(&p, 6.0).unwrap()).unwrap();
    let mut knots = cv.knots.clone();
    knots.extend(std::iter::repeat_n(0.0, 20));
    let padded = ControlVector::from_knots(knots, 8.0, 10.0).unwrap();
    let rep = evaluate_trajectory(&padded, &dev, &p, &GateTarget::y_pi(&p, 8.0).unwrap()).unwrap();
    assert!((rep.f_avg - base.f_avg).abs() < 1e-9, "{} {}", rep.f_avg, base.f_avg);
}

proptest! {
    #[test]
    fn unitary_channel_formula(a in prop::array::uniform4(-3.0f64..3.0), b in prop::array::uniform4(-3.0f64..3.0)) {
        let v = random_unitary(a);
        let u = random_unitary(b);
        let t = GateTarget::new(u, 0.0, 1.0).unwrap();
        let ch = SpinChannel::unitary(&v);
        let rep = average_gate_fidelity(&ch, &t);
        let want = (u.adjoint() * v).trace().norm_sqr() / 4.0;
        prop_assert!((rep.f_ent - want).abs() < 1e-12);
        prop_assert!((rep.f_avg - (2.0 * rep.f_ent + 1.0) / 3.0).abs() < 1e-15);
        prop_assert!((ancilla_f_ent(&ch, &u) - rep.f_ent).abs() < 1e-12);
    }

    #[test]
    fn f_avg_in_unit_interval(p in 0.0f64..1.0, a in prop::array::uniform4(-3.0f64..3.0)) {
        // Mixture of a unitary channel and full depolarization.
        let v = random_unitary(a);
        let uni = SpinChannel::unitary(&v);
        let dep = depolarizing();
        let mut ch = uni;
        for k in 0..4 {
            ch.images[k] = uni.images[k] * c(1.0 - p, 0.0) + dep.images[k] * c(p, 0.0);
        }
        let t = GateTarget::new(spin_rotation([0.0, 1.0, 0.0], 1.0), 0.3, 2.0).unwrap();
        let rep = average_gate_fidelity(&ch, &t);
        prop_assert!((0.0..=1.0).contains(&rep.f_avg));
        prop_assert!((ancilla_f_ent(&ch, &t.unitary()) - rep.f_ent).abs() < 1e-12);
    }
}
