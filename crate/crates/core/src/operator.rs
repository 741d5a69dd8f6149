//! Fourier representation of the Hill operator ingredients: multiplication
//! by the potential, the multiplier `A_lambda = d^2/dx^2 + lambda`, the
//! projections onto `span{e_n, e_-n}` and its complement, and the cosine
//! pairings that build the Dirichlet problem in the sine basis.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HillError, Result};
use crate::seq::{bracket, convolve, norm, FourierSeq, Weight};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Divisors smaller than this are rejected by [`apply_a_inv_q`].
pub const NEAR_SINGULAR: f64 = 1e-12;

/// A 1-periodic zero-mean potential, stored through its coefficients
/// `q_{2n}` on R/2Z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    seq: FourierSeq,
    /// Regularity label of the class the potential is used in.
    pub s: f64,
    pub weight: Option<Weight>,
}

impl Potential {
    /// Wraps a sequence, checking zero mean and the absence of odd modes.
    /// The real flag is set when `q_{-k} = conj(q_k)` holds to rounding.
    pub fn new(seq: FourierSeq) -> Result<Self> {
        if seq.get(0) != ZERO {
            return Err(HillError::InvalidPotential(format!(
                "mean q_0 = {} must vanish",
                seq.get(0)
            )));
        }
        if let Some((k, _)) = seq.nonzeros().into_iter().find(|(k, _)| k.rem_euclid(2) == 1) {
            return Err(HillError::InvalidPotential(format!(
                "odd coefficient q_{k} is nonzero; the potential must be 1-periodic"
            )));
        }
        let scale = seq.sup_abs().max(f64::MIN_POSITIVE);
        let h = seq.half_range() as i64;
        let real = (1..=h).all(|k| (seq.get(-k) - seq.get(k).conj()).norm() <= 1e-14 * scale);
        let seq = seq.with_flags(real, true, true)?;
        Ok(Potential {
            seq,
            s: 0.0,
            weight: None,
        })
    }

    pub fn with_class(mut self, s: f64, weight: Option<Weight>) -> Self {
        self.s = s;
        self.weight = weight;
        self
    }

    pub fn zero(half_range: usize) -> Self {
        Potential::new(FourierSeq::zeros(half_range)).expect("zero potential is valid")
    }

    /// `q_{2n} = modes(n)` for the listed `n != 0`; all other coefficients
    /// vanish.
    pub fn from_modes<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        let pairs: Vec<(i64, Complex64)> = pairs.into_iter().collect();
        if pairs.iter().any(|(n, _)| *n == 0) {
            return Err(HillError::InvalidPotential("mode n = 0 is the mean".into()));
        }
        let h = pairs.iter().map(|(n, _)| 2 * n.unsigned_abs() as usize).max().unwrap_or(2);
        Potential::new(FourierSeq::from_pairs(h, pairs.into_iter().map(|(n, c)| (2 * n, c))))
    }

    /// `q_{+-2} = c`, i.e. `q(x) = 2c cos(2 pi x)`.
    pub fn single_mode(c: Complex64) -> Self {
        Potential::from_modes([(1, c), (-1, c)]).expect("single mode potential is valid")
    }

    /// Real cosine series `q_{+-2n} = amp <n>^exponent` for `1 <= n <= band`.
    pub fn power_law(amp: f64, exponent: f64, band: usize) -> Self {
        let pairs = (1..=band as i64).flat_map(|n| {
            let v = Complex64::new(amp * bracket(n).powf(exponent), 0.0);
            [(n, v), (-n, v)]
        });
        Potential::from_modes(pairs).expect("power law potential is valid")
    }

    /// A random real potential with `||q||_{w,s,inf} <= m`: the coefficients
    /// `q_{2n}`, `1 <= n <= band`, have uniformly random phase and modulus
    /// `m u <2n>^{-s} / w_{2n}` with `u` uniform in `[0.2, 1]`.
    pub fn random_real<R: Rng>(rng: &mut R, m: f64, s: f64, w: &Weight, band: usize) -> Self {
        let mut pairs = Vec::with_capacity(2 * band);
        for n in 1..=band as i64 {
            let u: f64 = rng.gen_range(0.2..1.0);
            let phase: f64 = rng.gen_range(0.0..2.0 * PI);
            let modulus = m * u * bracket(2 * n).powf(-s) / w.value(2 * n);
            let c = Complex64::from_polar(modulus, phase);
            pairs.push((n, c));
            pairs.push((-n, c.conj()));
        }
        Potential::from_modes(pairs)
            .expect("random potential is valid")
            .with_class(s, Some(w.clone()))
    }

    pub fn seq(&self) -> &FourierSeq {
        &self.seq
    }

    pub fn is_real(&self) -> bool {
        self.seq.is_real()
    }

    /// `q_k` on R/2Z (zero for odd `k`).
    pub fn coeff(&self, k: i64) -> Complex64 {
        self.seq.get(k)
    }

    /// Largest index `k` with `q_k != 0` (0 for the zero potential).
    pub fn band(&self) -> usize {
        self.seq
            .nonzeros()
            .iter()
            .map(|(k, _)| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// `||q||_{w,s,inf}`.
    pub fn norm(&self, w: &Weight, s: f64) -> f64 {
        norm(&self.seq, w, s, f64::INFINITY)
    }

    /// Evaluates `q(x)` for a 1-periodic argument.
    pub fn eval(&self, x: f64) -> Complex64 {
        self.seq.eval(x)
    }
}

/// Boundary conditions of the three spectral problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// Periodic on [0,1]: even Fourier modes on R/2Z.
    PerPlus,
    /// Antiperiodic on [0,1]: odd Fourier modes on R/2Z.
    PerMinus,
    /// Dirichlet on [0,1]: sine basis.
    Dirichlet,
}

impl BoundaryCondition {
    /// Whether Fourier mode `k` belongs to the sector. Dirichlet selects the
    /// sine modes `sin(k pi x)`, `k >= 1`.
    pub fn selects(self, k: i64) -> bool {
        match self {
            BoundaryCondition::PerPlus => k.rem_euclid(2) == 0,
            BoundaryCondition::PerMinus => k.rem_euclid(2) == 1,
            BoundaryCondition::Dirichlet => k >= 1,
        }
    }

    /// Sector of the periodic problem containing the eigenvalues near
    /// `n^2 pi^2`.
    pub fn for_index(n: usize) -> Self {
        if n % 2 == 0 {
            BoundaryCondition::PerPlus
        } else {
            BoundaryCondition::PerMinus
        }
    }
}

/// `V f = q * f`, truncated to `max(K_q, K_f)`.
pub fn multiply(q: &Potential, f: &FourierSeq) -> FourierSeq {
    convolve(&q.seq, f)
}

/// Whether `lambda` lies in the strip `S_n: |Re lambda - n^2 pi^2| <= 12 n`.
pub fn in_strip(n: usize, lambda: Complex64) -> bool {
    let nf = n as f64;
    (lambda.re - nf * nf * PI * PI).abs() <= 12.0 * nf
}

/// `A_lambda^{-1} Q_n f`: zeroes the modes `+-n` and divides every other
/// mode by `lambda - (k pi)^2`.
pub fn apply_a_inv_q(lambda: Complex64, n: usize, f: &FourierSeq) -> Result<FourierSeq> {
    if !in_strip(n, lambda) {
        return Err(HillError::StripViolation { n, lambda });
    }
    let h = f.half_range() as i64;
    let ni = n as i64;
    let mut g = FourierSeq::zeros(f.half_range());
    for k in -h..=h {
        if k.abs() == ni {
            continue;
        }
        let d = lambda - symbol(k);
        if d.norm() < NEAR_SINGULAR {
            return Err(HillError::NearSingular { k, lambda });
        }
        let v = f.get(k);
        if v != ZERO {
            g.set(k, v / d);
        }
    }
    Ok(g)
}

/// The symbol `(k pi)^2` of `-d^2/dx^2` on `e_k`.
#[inline]
pub fn symbol(k: i64) -> f64 {
    let kp = k as f64 * PI;
    kp * kp
}

/// Which of the two complementary projections to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Onto `span{e_n, e_-n}`.
    P,
    /// Onto the closed span of all other modes.
    Q,
}

pub fn project(n: usize, f: &FourierSeq, which: Projection) -> FourierSeq {
    let ni = n as i64;
    let mut out = f.clone().plain();
    for (k, _) in f.iter() {
        let on_pair = k.abs() == ni;
        if on_pair == (which == Projection::Q) {
            out.set(k, ZERO);
        }
    }
    out
}

/// Cosine pairings `q^cos_k`, `|k| <= max_index`, on [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct CosCoeffs {
    max_index: usize,
    values: Vec<Complex64>,
}

impl CosCoeffs {
    pub fn max_index(&self) -> usize {
        self.max_index
    }

    pub fn get(&self, k: i64) -> Complex64 {
        let h = self.max_index as i64;
        if k.abs() > h {
            ZERO
        } else {
            self.values[(k + h) as usize]
        }
    }
}

/// `q^cos_k = int_0^1 q(x) cos(k pi x) dx` for even `k` and
/// `int_0^1 q(x) (cos(k pi x) - cos(pi x)) dx` for odd `k`, `|k| <= 2K`.
///
/// For even `k` this is `(q_k + q_-k)/2`. For odd `k` the pairing with an
/// even mode `e_{2l}` over [0,1] is `(i/pi) 4l/(4l^2 - k^2)`, which does not
/// vanish for potentials that are not even functions; the subtracted
/// `cos(pi x)` term cancels in every Dirichlet matrix entry.
pub fn dirichlet_cos_coeffs(q: &Potential, k_max: usize) -> CosCoeffs {
    let h = 2 * k_max as i64;
    let modes: Vec<(i64, Complex64)> = q
        .seq
        .nonzeros()
        .into_iter()
        .map(|(k, c)| (k / 2, c))
        .collect();
    let odd_pairing = |k: i64| -> Complex64 {
        let kf = (k * k) as f64;
        modes
            .iter()
            .map(|&(l, c)| {
                let lf = l as f64;
                let weight = 4.0 * lf / (4.0 * lf * lf - kf) - 4.0 * lf / (4.0 * lf * lf - 1.0);
                c * Complex64::new(0.0, weight / PI)
            })
            .sum()
    };
    let mut values = vec![ZERO; (2 * h + 1) as usize];
    for k in 0..=h {
        let v = if k % 2 == 0 {
            (q.coeff(k) + q.coeff(-k)) * 0.5
        } else {
            odd_pairing(k)
        };
        values[(k + h) as usize] = v;
        values[(h - k) as usize] = v;
    }
    CosCoeffs {
        max_index: h as usize,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn multiply_examples() {
        let f = FourierSeq::unit(10, 3);
        assert_eq!(multiply(&Potential::zero(4), &f).sup_abs(), 0.0);
        let q = Potential::single_mode(c(0.3, 0.0));
        let g = multiply(&q, &f);
        assert_eq!(g.nonzeros(), vec![(1, c(0.3, 0.0)), (5, c(0.3, 0.0))]);
        let at_zero = multiply(&q, &FourierSeq::unit(4, 0));
        assert_eq!(at_zero.max_abs_diff(q.seq()), 0.0);
    }

    #[test]
    fn a_inverse_examples() {
        let n = 3;
        let lam = c(9.0 * PI * PI, 0.0);
        assert_eq!(apply_a_inv_q(lam, n, &FourierSeq::unit(8, 3)).unwrap().sup_abs(), 0.0);
        let g = apply_a_inv_q(lam, n, &FourierSeq::unit(8, 0)).unwrap();
        assert_eq!(g.get(0), c(1.0, 0.0) / lam);
        assert!(matches!(
            apply_a_inv_q(lam + 40.0, n, &FourierSeq::unit(8, 0)),
            Err(HillError::StripViolation { .. })
        ));
        // lambda = pi^2 sits on the symbol of k = +-1, which is excluded only
        // when n = 1.
        let lam1 = c(PI * PI, 0.0);
        assert!(apply_a_inv_q(lam1, 1, &FourierSeq::unit(4, 1)).is_ok());
        assert!(matches!(
            apply_a_inv_q(c(PI * PI + 1e-13, 0.0), 2, &FourierSeq::unit(4, 1)),
            Err(HillError::StripViolation { .. })
        ));
    }

    #[test]
    fn a_inverse_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 5usize;
        let lam = c(25.0 * PI * PI, 15.0);
        let f = FourierSeq::from_fn(20, |_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let g = apply_a_inv_q(lam, n, &f).unwrap();
        for k in -20i64..=20 {
            let want = if k.abs() == 5 {
                c(0.0, 0.0)
            } else {
                f.get(k) / (lam - (k as f64 * PI).powi(2))
            };
            assert!((g.get(k) - want).norm() <= 1e-15 * want.norm().max(1e-300));
        }
    }

    #[test]
    fn projections_partition_modes() {
        let f = FourierSeq::from_fn(6, |k| c(k as f64, -(k as f64)));
        let p = project(2, &f, Projection::P);
        let qf = project(2, &f, Projection::Q);
        assert_eq!(p.add(&qf), f.clone().plain());
        assert_eq!(project(2, &p, Projection::Q).sup_abs(), 0.0);
        let e = FourierSeq::unit(6, 2);
        assert_eq!(project(2, &e, Projection::P), e);
        assert_eq!(project(2, &e, Projection::Q).sup_abs(), 0.0);
    }

    #[test]
    fn cos_coeffs_for_cosine_and_sine() {
        assert_eq!(dirichlet_cos_coeffs(&Potential::zero(4), 8).get(3), c(0.0, 0.0));
        let q = Potential::single_mode(c(0.05, 0.0));
        let cc = dirichlet_cos_coeffs(&q, 8);
        assert!((cc.get(2) - c(0.05, 0.0)).norm() < 1e-16);
        for k in [1i64, 3, 5, 7, -9] {
            assert!(cc.get(k).norm() < 1e-16);
        }
        // q = 2 sin(2 pi x): int_0^1 2 sin(2 pi x) cos(3 pi x) dx by quadrature.
        let q = Potential::from_modes([(1, c(0.0, -1.0)), (-1, c(0.0, 1.0))]).unwrap();
        let cc = dirichlet_cos_coeffs(&q, 4);
        let quad = |k: f64| {
            let m = 200_000;
            let h = 1.0 / m as f64;
            (0..m)
                .map(|i| {
                    let x = (i as f64 + 0.5) * h;
                    2.0 * (2.0 * PI * x).sin() * ((k * PI * x).cos() - (PI * x).cos()) * h
                })
                .sum::<f64>()
        };
        assert!((cc.get(3).re - quad(3.0)).abs() < 1e-9);
        assert!(cc.get(3).im.abs() < 1e-16);
        assert!((cc.get(1).re).abs() < 1e-16);
    }

    #[test]
    fn potential_validation() {
        assert!(Potential::new(FourierSeq::unit(4, 0)).is_err());
        assert!(Potential::new(FourierSeq::unit(4, 1)).is_err());
        assert!(Potential::single_mode(c(0.1, 0.0)).is_real());
        assert!(!Potential::single_mode(c(0.1, 0.1)).is_real());
    }

    #[test]
    fn random_potential_respects_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = Weight::Polynomial { a: 0.5 };
        let q = Potential::random_real(&mut rng, 0.4, -0.25, &w, 32);
        assert!(q.is_real());
        assert!(q.norm(&w, -0.25) <= 0.4);
        assert!(q.norm(&w, -0.25) >= 0.2 * 0.4);
    }

    fn arb_potential() -> impl Strategy<Value = Potential> {
        proptest::collection::vec((-0.5f64..0.5, -0.5f64..0.5), 6).prop_map(|v| {
            Potential::from_modes(v.iter().enumerate().flat_map(|(i, (re, im))| {
                let n = i as i64 + 1;
                [(n, c(*re, *im)), (-n, c(-*im, *re))]
            }))
            .unwrap()
        })
    }

    fn arb_seq(h: usize) -> impl Strategy<Value = FourierSeq> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2 * h + 1).prop_map(move |v| {
            FourierSeq::from_fn(h, |k| {
                let (re, im) = v[(k + h as i64) as usize];
                c(re, im)
            })
        })
    }

    proptest! {
        #[test]
        fn multiply_preserves_parity(q in arb_potential(), f in arb_seq(16), odd in any::<bool>()) {
            let f = FourierSeq::from_fn(16, |k| if k.rem_euclid(2) == odd as i64 { f.get(k) } else { c(0.0, 0.0) });
            let g = multiply(&q, &f);
            for (k, v) in g.iter() {
                if k.rem_euclid(2) != odd as i64 {
                    prop_assert_eq!(v, c(0.0, 0.0));
                }
            }
        }

        #[test]
        fn multiply_is_linear(q in arb_potential(), f in arb_seq(12), g in arb_seq(12), a in -2.0f64..2.0) {
            let lhs = multiply(&q, &f.axpy(c(a, 0.0), &g));
            let rhs = multiply(&q, &f).axpy(c(a, 0.0), &multiply(&q, &g));
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }

        #[test]
        fn a_inverse_is_left_inverse(f in arb_seq(12), n in 1usize..8, im in -30.0f64..30.0) {
            let lam = c((n * n) as f64 * PI * PI + 0.5, im);
            let g = apply_a_inv_q(lam, n, &f).unwrap();
            let back = FourierSeq::from_fn(12, |k| g.get(k) * (lam - symbol(k)));
            let want = project(n, &f, Projection::Q);
            prop_assert!(back.max_abs_diff(&want) < 1e-12);
        }

        #[test]
        fn cos_coeff_energy_bound(q in arb_potential()) {
            // sum <m>^{2t} |q^cos_m|^2 <= C ||q||_{t,2}^2 with t = -0.75.
            let t = -0.75;
            let cc = dirichlet_cos_coeffs(&q, 256);
            let lhs: f64 = (-512i64..=512).map(|m| bracket(m).powf(2.0 * t) * cc.get(m).norm_sqr()).sum();
            let rhs = norm(q.seq(), &Weight::Trivial, t, 2.0).powi(2);
            prop_assert!(lhs <= 4.0 * rhs, "{lhs} vs {rhs}");
        }
    }
}
