use std::f64::consts::PI;

use hill_core::birkhoff::{actions_from_gaps, flow, frequencies, linearized_birkhoff, torus_membership};
use hill_core::galerkin::{gaps_and_midpoints, periodic_spectrum};
use hill_core::kdv::{airy_demo, conserved, evolve_kdv, isospectral_check, saturating_data, PdeState};
use hill_core::Potential;
use num_complex::Complex64;

#[test]
fn kdv_is_reversible_and_conservative() {
    let mut u = PdeState::cosine(0.1, 32);
    u.u_hat.set(2, Complex64::new(0.02, 0.01));
    u.u_hat.set(-2, Complex64::new(0.02, -0.01));
    let u = u.with_dt(2e-5);
    let fwd = evolve_kdv(&u, 0.01).unwrap();
    let back = evolve_kdv(&fwd, 0.0).unwrap();
    assert!(back.u_hat.max_abs_diff(&u.u_hat) < 1e-8 * u.u_hat.sup_abs());
    let (c0, c1) = (conserved(&u), conserved(&fwd));
    assert_eq!(c1.mean, Complex64::new(0.0, 0.0));
    assert!((c1.l2 - c0.l2).abs() < 1e-10 * c0.l2);
    assert!((c1.hamiltonian - c0.hamiltonian).norm() < 1e-8 * c0.hamiltonian.norm());
    assert!(fwd.is_real(0.0));
}

#[test]
fn zero_time_has_zero_drift() {
    let q = Potential::single_mode(Complex64::new(0.05, 0.0));
    let rep = isospectral_check(&q, 0.0, 32, 32, 8).unwrap();
    assert_eq!(rep.max_periodic_drift, 0.0);
    assert!(rep.rows.iter().all(|r| r.gamma_drift == 0.0 && r.mu_motion == 0.0));
}

#[test]
fn airy_orbit_is_norm_far_but_componentwise_close() {
    let s = -0.25;
    let u0 = saturating_data(0.1, s, 256);
    let times: Vec<f64> = (0..6).map(|i| 1e-8 * 10f64.powi(i)).collect();
    let pts = airy_demo(&u0, s, &times, &[1, 2, 3]);
    for p in &pts {
        assert!(p.sup_distance >= 0.1, "t = {}: {}", p.t, p.sup_distance);
    }
    // Component 1 moves by 0.1 <1>^s |e^{i (2 pi)^3 t} - 1| ~ 0.1 (2 pi)^3 t.
    let p = &pts[0];
    let want = 0.1 * (2.0 * PI).powi(3) * p.t;
    assert!((p.components[0] - want).abs() < 1e-6 * want);
}

#[test]
fn actions_from_the_first_gap() {
    let c = 0.02;
    let q = Potential::single_mode(Complex64::new(c, 0.0));
    let gaps = gaps_and_midpoints(&periodic_spectrum(&q, 64).unwrap());
    let rep = actions_from_gaps(&gaps.gamma[..4]).unwrap();
    let want = c * c / (2.0 * PI);
    assert!((rep.actions[0] - want).abs() < 0.01 * want);
    let omega = frequencies(&rep.actions);
    assert!(omega.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn flow_stays_on_the_torus() {
    let q = Potential::power_law(0.05, -1.0, 16);
    let z = linearized_birkhoff(&q);
    for t in [0.0, 1e-3, 0.37, 17.3] {
        let zt = flow(&z, t);
        assert!(torus_membership(&z, &zt, 1e-14));
        assert!(zt.is_real(1e-15));
    }
}
