//! Unit phases `e^{i theta}` for large `theta = omega t`.
//!
//! Linear dispersive phases reach `10^7` radians and more at moderate
//! times. Forming `omega * t` in one rounding and reducing it by the `f64`
//! value of `2 pi` loses about `|theta| * 1e-16` radians, which breaks exact
//! composition identities such as `e^{i omega t1} e^{i omega t2} =
//! e^{i omega (t1 + t2)}`. Here the product is kept exactly as a double-double
//! and reduced against a two-term representation of `2 pi`.

use std::f64::consts::TAU;

use num_complex::Complex64;

/// `2 pi - TAU`, the low part of `2 pi`.
const TAU_LO: f64 = 2.449_293_598_294_706_4e-16;

/// `omega * t` reduced to `[-pi, pi]`, accurate to a few ulps of `pi`.
pub fn reduced_phase(omega: f64, t: f64) -> f64 {
    let hi = omega * t;
    let lo = omega.mul_add(t, -hi);
    let k = (hi / TAU).round();
    let r = (-k).mul_add(TAU, hi);
    (-k).mul_add(TAU_LO, r) + lo
}

/// `e^{i omega t}`.
pub fn unit_phase(omega: f64, t: f64) -> Complex64 {
    Complex64::from_polar(1.0, reduced_phase(omega, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn small_arguments_are_unchanged() {
        assert_eq!(reduced_phase(2.0, 0.25), 0.5);
        assert_eq!(unit_phase(0.0, 3.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn whole_turns_vanish() {
        // omega = (2 pi)^3, t = 2 pi / (2 pi)^3 is one full turn up to the
        // rounding of the inputs themselves.
        let omega = (2.0 * PI).powi(3);
        let t = 2.0 * PI / omega;
        assert!(reduced_phase(omega, t).abs() < 1e-15);
    }

    #[test]
    fn composition_is_exact_for_dyadic_times() {
        let omega = (2.0 * PI * 64.0).powi(3) - 6.0 * 0.37;
        let (t1, t2) = (1.375, -0.0625 * 13.0);
        let a = unit_phase(omega, t1) * unit_phase(omega, t2);
        let b = unit_phase(omega, t1 + t2);
        assert!((a - b).norm() < 1e-14);
    }
}
