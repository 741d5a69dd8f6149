//! Birkhoff coordinates near zero: actions and frequencies recovered from gap
//! lengths, the linearized coordinate map, the invariant tori, and the KdV
//! flow, which rotates each coordinate pair at its own frequency.
//!
//! Actions and frequencies here are leading-order asymptotics in `n`. Every
//! report that carries them sets `asymptotic = true`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HillError, Result};
use crate::operator::Potential;
use crate::phase::unit_phase;
use crate::seq::{norm, FourierSeq, Weight};

/// Coordinates `z_n`, `0 < |n| <= N`, stored with `z_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffState {
    z: FourierSeq,
}

impl BirkhoffState {
    pub fn new(z: FourierSeq) -> Result<Self> {
        if z.get(0) != Complex64::new(0.0, 0.0) {
            return Err(HillError::InvalidSequence("Birkhoff state must have z_0 = 0".into()));
        }
        Ok(BirkhoffState { z })
    }

    pub fn from_fn(n_max: usize, f: impl FnMut(i64) -> Complex64) -> Self {
        let mut z = FourierSeq::from_fn(n_max, f);
        z.set(0, Complex64::new(0.0, 0.0));
        BirkhoffState { z }
    }

    pub fn n_max(&self) -> usize {
        self.z.half_range()
    }

    pub fn get(&self, n: i64) -> Complex64 {
        self.z.get(n)
    }

    pub fn coords(&self) -> &FourierSeq {
        &self.z
    }

    /// `z_-n = conj(z_n)` for all `n`, to `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        (1..=self.n_max() as i64).all(|n| (self.get(-n) - self.get(n).conj()).norm() <= tol)
    }

    /// `I_n = z_n z_-n` for `n = 1..=N`.
    pub fn actions(&self) -> Vec<Complex64> {
        (1..=self.n_max() as i64).map(|n| self.get(n) * self.get(-n)).collect()
    }

    /// Modes as `(n, re, im)` for `0 < |n| <= N`, ascending in `n`.
    pub fn modes(&self) -> Vec<(i64, f64, f64)> {
        let h = self.n_max() as i64;
        (-h..=h)
            .filter(|&n| n != 0)
            .map(|n| {
                let v = self.get(n);
                (n, v.re, v.im)
            })
            .collect()
    }

    /// `sup_n <n>^s |z_n|`.
    pub fn norm_s(&self, s: f64) -> f64 {
        norm(&self.z, &Weight::Trivial, s, f64::INFINITY)
    }
}

/// Actions computed from gap lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionReport {
    pub actions: Vec<f64>,
    pub asymptotic: bool,
}

/// `I_n = gamma_n^2 / (8 n pi)` for `n = 1, 2, ...`. Needs real gaps.
pub fn actions_from_gaps(gamma: &[Complex64]) -> Result<ActionReport> {
    let mut actions = Vec::with_capacity(gamma.len());
    for (i, g) in gamma.iter().enumerate() {
        if g.im.abs() > 1e-12 * g.re.abs().max(1.0) {
            return Err(HillError::Unsupported(format!(
                "gap gamma_{} = {g} is not real",
                i + 1
            )));
        }
        let n = (i + 1) as f64;
        actions.push(g.re * g.re / (8.0 * n * PI));
    }
    Ok(ActionReport {
        actions,
        asymptotic: true,
    })
}

/// `omega_n = (2 n pi)^3 - 6 I_n`, with `actions[0]` belonging to `n = 1`.
pub fn frequencies(actions: &[f64]) -> Vec<f64> {
    actions
        .iter()
        .enumerate()
        .map(|(i, a)| (2.0 * PI * (i + 1) as f64).powi(3) - 6.0 * a)
        .collect()
}

/// `z_n = q_{2n} / sqrt(2 pi max(|n|, 1))` for `0 < |n| <= N`, where `2N`
/// is the potential's half range rounded down to an even number.
pub fn linearized_birkhoff(q: &Potential) -> BirkhoffState {
    let n_max = q.seq().half_range() / 2;
    BirkhoffState::from_fn(n_max.max(1), |n| {
        if n == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            q.coeff(2 * n) / (2.0 * PI * n.unsigned_abs().max(1) as f64).sqrt()
        }
    })
}

/// Inverse of [`linearized_birkhoff`]: `q_{2n} = sqrt(2 pi |n|) z_n`.
pub fn inverse_linearized_birkhoff(z: &BirkhoffState) -> Result<Potential> {
    let h = z.n_max() as i64;
    let pairs = (-h..=h)
        .filter(|&n| n != 0)
        .map(|n| (n, z.get(n) * (2.0 * PI * n.unsigned_abs() as f64).sqrt()));
    Potential::from_modes(pairs)
}

/// `z_n -> e^{i omega_n t} z_n` and `z_-n -> e^{-i omega_n t} z_-n`, with
/// `omega_n` computed from the real parts of the state's own actions.
///
/// The free part `(2 n pi)^3 t` and the action part `6 I_n t` are rotated
/// separately: `omega_n` itself has an ulp near `1e-8` for `n ~ 64`, so
/// rounding the sum would make the phase jump whenever an action moves in
/// its last bit.
pub fn flow(state: &BirkhoffState, t: f64) -> BirkhoffState {
    let mut z = state.z.clone();
    for (i, action) in state.actions().iter().enumerate() {
        let n = (i + 1) as i64;
        let free = (2.0 * PI * n as f64).powi(3);
        let rot = unit_phase(free, t) * Complex64::from_polar(1.0, -6.0 * action.re * t);
        z.set(n, rot * state.get(n));
        z.set(-n, rot.conj() * state.get(-n));
    }
    BirkhoffState { z }
}

/// Whether `test` lies on the torus through `reference`:
/// `||z_k| - |ref_k|| <= tol max(1, |ref_k|)` for every `k`.
pub fn torus_membership(reference: &BirkhoffState, test: &BirkhoffState, tol: f64) -> bool {
    let h = reference.n_max().max(test.n_max()) as i64;
    (-h..=h).all(|k| {
        let r = reference.get(k).norm();
        (test.get(k).norm() - r).abs() <= tol * r.max(1.0)
    })
}

/// The states `z^(m)` with `z_{nu_m}` and `z_{-nu_m}` negated. If
/// `<nu>^s |z_nu| >= eps` along `indices`, distinct members lie at least
/// `2 eps` apart in `sup_n <n>^s |z_n|`, although all share one torus.
pub fn sign_flip_family(z: &BirkhoffState, indices: &[usize]) -> Vec<BirkhoffState> {
    indices
        .iter()
        .map(|&nu| {
            let mut out = z.z.clone();
            let n = nu as i64;
            out.set(n, -z.get(n));
            out.set(-n, -z.get(-n));
            BirkhoffState { z: out }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real_state(vals: &[(f64, f64)]) -> BirkhoffState {
        BirkhoffState::from_fn(vals.len(), |n| {
            if n == 0 {
                return c(0.0, 0.0);
            }
            let (re, im) = vals[n.unsigned_abs() as usize - 1];
            if n > 0 {
                c(re, im)
            } else {
                c(re, -im)
            }
        })
    }

    #[test]
    fn actions_and_frequencies_by_hand() {
        let rep = actions_from_gaps(&[c(0.0, 0.0), c((16.0 * PI).sqrt(), 0.0)]).unwrap();
        assert_eq!(rep.actions[0], 0.0);
        assert!((rep.actions[1] - 1.0).abs() < 1e-15);
        assert!(rep.asymptotic);
        assert!(actions_from_gaps(&[c(0.1, 0.2)]).is_err());
        let w = frequencies(&[1.0, 0.0]);
        assert!((w[0] - (8.0 * PI.powi(3) - 6.0)).abs() < 1e-12);
        assert_eq!(w[1], (4.0 * PI).powi(3));
    }

    #[test]
    fn linearized_map_values() {
        let cc = c(0.05, 0.01);
        let q = Potential::from_modes([(1, cc), (-1, cc.conj())]).unwrap();
        let z = linearized_birkhoff(&q);
        assert!((z.get(1) - cc / (2.0 * PI).sqrt()).norm() < 1e-16);
        assert!(z.is_real(0.0));
        let zero = linearized_birkhoff(&Potential::zero(8));
        assert_eq!(zero.coords().sup_abs(), 0.0);
    }

    #[test]
    fn torus_examples() {
        let z = real_state(&[(0.3, 0.1), (0.0, -0.2), (0.05, 0.0)]);
        assert!(torus_membership(&z, &z, 1e-14));
        let rotated = BirkhoffState::from_fn(3, |n| {
            let ph = Complex64::from_polar(1.0, 0.7 * n as f64 + 0.2 * n.signum() as f64);
            ph * z.get(n)
        });
        assert!(torus_membership(&z, &rotated, 1e-14));
        let mut doubled = z.coords().clone();
        doubled.set(2, z.get(2) * 2.0);
        assert!(!torus_membership(&z, &BirkhoffState::new(doubled).unwrap(), 1e-6));
    }

    #[test]
    fn sign_flips_are_separated() {
        let s = -0.25;
        let z = BirkhoffState::from_fn(40, |n| c(0.2 * (1.0 + n.unsigned_abs() as f64).powf(-s), 0.0));
        let nus = [3usize, 7, 15, 31];
        let fam = sign_flip_family(&z, &nus);
        for i in 0..fam.len() {
            assert!(torus_membership(&z, &fam[i], 1e-15));
            for j in 0..i {
                let d = fam[i].coords().sub(fam[j].coords());
                let dist = norm(&d, &Weight::Trivial, s, f64::INFINITY);
                assert!(dist >= 2.0 * 0.2 * (1.0 - 1e-12));
            }
        }
    }

    proptest! {
        #[test]
        fn flow_is_a_group(
            vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64),
            k1 in -(1i64 << 32)..(1i64 << 32),
            k2 in -(1i64 << 32)..(1i64 << 32),
        ) {
            // Dyadic times keep t1 + t2 exact.
            let (t1, t2) = (k1 as f64 / 2f64.powi(30), k2 as f64 / 2f64.powi(30));
            let z = real_state(&vals);
            let a = flow(&flow(&z, t1), t2);
            let b = flow(&z, t1 + t2);
            prop_assert!(a.coords().max_abs_diff(b.coords()) <= 1e-12);
            let ia = a.actions();
            for (x, y) in ia.iter().zip(z.actions()) {
                prop_assert!((x - y).norm() <= 16.0 * f64::EPSILON * y.norm().max(f64::MIN_POSITIVE));
            }
            prop_assert!(flow(&z, 0.0) == z);
        }

        #[test]
        fn linearized_round_trip(vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..20)) {
            let h = vals.len() as i64;
            let q = Potential::from_modes((1..=h).flat_map(|n| {
                let (re, im) = vals[n as usize - 1];
                [(n, c(re, im)), (-n, c(re, -im))]
            })).unwrap();
            let back = inverse_linearized_birkhoff(&linearized_birkhoff(&q)).unwrap();
            prop_assert!(back.seq().resized(q.seq().half_range()).max_abs_diff(q.seq()) < 1e-15);
        }
    }
}
