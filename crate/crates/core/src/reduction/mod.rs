//! Lyapunov-Schmidt reduction of the periodic eigenvalue problem.
//!
//! For `lambda` in the strip `S_n` the eigenvalue equation splits into a
//! two-dimensional equation on `span{e_n, e_-n}` and an equation on the
//! complement which is solved by the Neumann series of
//! `T_n(lambda) = V A_lambda^{-1} Q_n`. What remains is the 2x2 matrix
//! `B_n(lambda)` with entries built from `a_n` and `b_{+-n}`; its
//! determinant vanishes exactly at the two periodic eigenvalues near
//! `n^2 pi^2`.
//!
//! All operators act on the truncated space `|k| <= K`, so the reduction
//! reproduces the eigenvalues of the Galerkin matrix with the same `K` up to
//! the Neumann tolerance.

pub mod adapted;
pub mod constants;
pub mod roots;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HillError, Result};
use crate::operator::{apply_a_inv_q, symbol, Potential};
use crate::seq::{bracket, norm, shifted_norm, FourierSeq, Weight};

pub use adapted::{AdaptedResult, EigenfunctionResult, SandwichReport, SandwichStatus};
pub use constants::{estimate_c_s, estimate_c_s_prime, thresholds, ConstantEstimate, Thresholds};
pub use roots::{AlphaResult, RootMethod, RootResult};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default relative tolerance of the Neumann series.
pub const NEUMANN_TOL: f64 = 1e-12;
/// Default cap on the number of Neumann terms.
pub const MAX_NEUMANN_TERMS: usize = 60;

/// Immutable state shared by all per-index computations.
#[derive(Debug, Clone)]
pub struct ReductionContext {
    q: Potential,
    s: f64,
    w: Weight,
    m: f64,
    q_norm: f64,
    q_norm_unweighted: f64,
    thresholds: Thresholds,
    pub neumann_tol: f64,
    pub max_terms: usize,
    k: usize,
    /// Nonzero `(j, q_j)` with `j` descending, so that convolution sums run
    /// over the second factor's index in ascending order.
    q_nz: Vec<(i64, Complex64)>,
}

/// Output of the Neumann series.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannResult {
    pub value: FourierSeq,
    pub terms_used: usize,
    /// Largest ratio between consecutive term norms.
    pub max_ratio: f64,
}

/// `a_{+-n}(lambda)` and `b_{+-n}(lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub lambda: Complex64,
    pub a_n: Complex64,
    pub a_neg_n: Complex64,
    pub b_n: Complex64,
    pub b_neg_n: Complex64,
    pub terms_used: usize,
}

impl Coefficients {
    /// `det B_n = (lambda - n^2 pi^2 - a_n)^2 - b_n b_{-n}` given the offset
    /// `z = lambda - n^2 pi^2`.
    pub fn det_at_offset(&self, z: Complex64) -> Complex64 {
        let d = z - self.a_n;
        d * d - self.b_n * self.b_neg_n
    }
}

/// Sample estimate of the shifted operator norms `||T_n||_{w,s,inf;+-n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorNormEstimate {
    /// Largest probe ratio measured in the norm shifted by `+n`.
    pub plus: f64,
    /// Largest probe ratio measured in the norm shifted by `-n`.
    pub minus: f64,
    /// Largest probe ratio over the random probes only, both shifts.
    pub random_probe_max: f64,
    pub probes: usize,
}

impl OperatorNormEstimate {
    pub fn max(&self) -> f64 {
        self.plus.max(self.minus)
    }
}

/// Per-index summary used by the command line driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionResult {
    pub n: usize,
    pub lambda: Complex64,
    pub a_n: Complex64,
    pub b_n: Complex64,
    pub b_neg_n: Complex64,
    pub alpha_n: Option<Complex64>,
    pub xi_1: Complex64,
    pub xi_2: Complex64,
    pub gap_estimate: f64,
    pub neumann_terms_used: usize,
    pub contraction_bound: f64,
}

impl ReductionContext {
    /// Builds the context for `||q||_{w,s,inf} <= m` on the truncation
    /// `|k| <= K`. Thresholds come from the computed constants.
    pub fn new(q: Potential, s: f64, w: Weight, m: f64, k: usize) -> Result<Self> {
        if !(s > -0.5 && s <= 0.0) {
            return Err(HillError::Precondition(format!("s = {s} outside (-1/2, 0]")));
        }
        let q_norm = q.norm(&w, s);
        if !(m > 0.0) || q_norm > m * (1.0 + 1e-12) {
            return Err(HillError::Precondition(format!(
                "ball radius m = {m} must be positive and at least ||q||_(w,s,inf) = {q_norm}"
            )));
        }
        if q.band() > 2 * k {
            return Err(HillError::TruncationTooSmall {
                k,
                reason: format!("potential band {} exceeds 2K", q.band()),
            });
        }
        let c_s = estimate_c_s(s).value;
        let c_s_prime = estimate_c_s_prime(s);
        let th = thresholds(q_norm, s, m, c_s, c_s_prime);
        let mut q_nz = q.seq().nonzeros();
        q_nz.reverse();
        Ok(ReductionContext {
            q_norm_unweighted: q.norm(&Weight::Trivial, s),
            q,
            s,
            w,
            m,
            q_norm,
            thresholds: th,
            neumann_tol: NEUMANN_TOL,
            max_terms: MAX_NEUMANN_TERMS,
            k,
            q_nz,
        })
    }

    pub fn potential(&self) -> &Potential {
        &self.q
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn weight(&self) -> &Weight {
        &self.w
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `||q||_{w,s,inf}`.
    pub fn q_norm(&self) -> f64 {
        self.q_norm
    }

    /// `||q||_{s,inf}`.
    pub fn q_norm_unweighted(&self) -> f64 {
        self.q_norm_unweighted
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    /// `n^2 pi^2`.
    pub fn center(n: usize) -> f64 {
        symbol(n as i64)
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n == 0 || 2 * n > self.k {
            return Err(HillError::TruncationTooSmall {
                k: self.k,
                reason: format!("index n = {n} needs 1 <= n <= K/2"),
            });
        }
        Ok(())
    }

    fn require_ns(&self, n: usize) -> Result<()> {
        self.check_index(n)?;
        if n < self.thresholds.n_s {
            return Err(HillError::BelowThreshold {
                n,
                threshold: self.thresholds.n_s,
                which: "n_s",
            });
        }
        Ok(())
    }

    /// `V f` on the truncation, summed in ascending index of `f`.
    fn multiply(&self, f: &FourierSeq) -> FourierSeq {
        let h = self.k as i64;
        let mut out = FourierSeq::zeros(self.k);
        for m in -h..=h {
            let mut acc = ZERO;
            for &(j, qj) in &self.q_nz {
                let idx = m - j;
                if idx.abs() <= h {
                    acc += qj * f.get(idx);
                }
            }
            if acc != ZERO {
                out.set(m, acc);
            }
        }
        out
    }

    /// `V e_l` on the truncation.
    fn v_unit(&self, l: i64) -> FourierSeq {
        let h = self.k as i64;
        let mut out = FourierSeq::zeros(self.k);
        for &(j, qj) in &self.q_nz {
            let m = j + l;
            if m.abs() <= h {
                out.set(m, qj);
            }
        }
        out
    }

    /// `T_n(lambda) f = V A_lambda^{-1} Q_n f`.
    pub fn apply_t_n(&self, n: usize, lambda: Complex64, f: &FourierSeq) -> Result<FourierSeq> {
        self.check_index(n)?;
        let g = apply_a_inv_q(lambda, n, &f.resized(self.k))?;
        Ok(self.multiply(&g))
    }

    /// `max(||f||_{w,s,inf;n}, ||f||_{w,s,inf;-n})`.
    pub fn shifted_pair_norm(&self, n: usize, f: &FourierSeq) -> f64 {
        let ni = n as i64;
        shifted_norm(f, &self.w, self.s, ni).max(shifted_norm(f, &self.w, self.s, -ni))
    }

    /// Neumann series `K_n f = sum_l T_n^l f`, stopped once the latest term
    /// has shifted norm below `neumann_tol ||f||`.
    pub fn neumann_k_n(&self, n: usize, lambda: Complex64, f: &FourierSeq) -> Result<NeumannResult> {
        self.require_ns(n)?;
        let f = f.resized(self.k);
        let f_norm = self.shifted_pair_norm(n, &f);
        if f_norm == 0.0 {
            return Ok(NeumannResult {
                value: f,
                terms_used: 1,
                max_ratio: 0.0,
            });
        }
        let mut sum = f.clone();
        let mut term = f;
        let mut prev = f_norm;
        let mut max_ratio = 0.0f64;
        let mut slow = 0;
        for l in 1..=self.max_terms {
            term = self.apply_t_n(n, lambda, &term)?;
            let t_norm = self.shifted_pair_norm(n, &term);
            let ratio = t_norm / prev;
            max_ratio = max_ratio.max(ratio);
            slow = if ratio > 0.9 { slow + 1 } else { 0 };
            if slow >= 3 {
                return Err(HillError::ContractionFailure { n, ratio });
            }
            if t_norm < self.neumann_tol * f_norm {
                sum = sum.add(&term);
                return Ok(NeumannResult {
                    value: sum,
                    terms_used: l,
                    max_ratio,
                });
            }
            sum = sum.add(&term);
            prev = t_norm;
        }
        Err(HillError::NeumannNotConverged {
            n,
            terms: self.max_terms,
        })
    }

    /// `a_n = <K_n V e_n, e_n>`, `a_{-n} = <K_n V e_{-n}, e_{-n}>`,
    /// `b_n = <K_n V e_{-n}, e_n>`, `b_{-n} = <K_n V e_n, e_{-n}>`.
    pub fn coefficients(&self, n: usize, lambda: Complex64) -> Result<Coefficients> {
        self.require_ns(n)?;
        let ni = n as i64;
        let u = self.neumann_k_n(n, lambda, &self.v_unit(ni))?;
        let v = self.neumann_k_n(n, lambda, &self.v_unit(-ni))?;
        Ok(Coefficients {
            lambda,
            a_n: u.value.get(ni),
            b_neg_n: u.value.get(-ni),
            b_n: v.value.get(ni),
            a_neg_n: v.value.get(-ni),
            terms_used: u.terms_used.max(v.terms_used),
        })
    }

    /// `det B_n(lambda)`.
    pub fn det_b(&self, n: usize, lambda: Complex64) -> Result<Complex64> {
        let c = self.coefficients(n, lambda)?;
        Ok(c.det_at_offset(lambda - Self::center(n)))
    }

    /// Sample estimate of `||T_n(lambda)||_{w,s,inf;+-n}`: the largest ratio
    /// `||T_n f|| / ||f||` over unit masses at the 64 indices closest to
    /// `+-n`, 16 random sequences (seeded by `n`), and, for each shift, the
    /// phase-aligned probe of the row with the largest weighted absolute row
    /// sum. The last probe attains the operator norm of the truncated map,
    /// so the estimate is exact on the truncation.
    pub fn t_n_norm_estimate(&self, n: usize, lambda: Complex64) -> Result<OperatorNormEstimate> {
        self.check_index(n)?;
        let ni = n as i64;
        let h = self.k as i64;
        let mut probes: Vec<(FourierSeq, bool)> = Vec::new();
        let mut near: Vec<i64> = (-h..=h).filter(|k| k.abs() != ni).collect();
        near.sort_by_key(|k| ((k.abs() - ni).abs(), *k));
        for &k in near.iter().take(64) {
            probes.push((FourierSeq::unit(self.k, k), false));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + n as u64);
        for _ in 0..16 {
            let f = FourierSeq::from_fn(self.k, |_| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            probes.push((f, true));
        }
        for l in [ni, -ni] {
            probes.push((self.extremal_probe(n, lambda, l)?, false));
        }
        let mut plus = 0.0f64;
        let mut minus = 0.0f64;
        let mut random_probe_max = 0.0f64;
        for (f, random) in &probes {
            let tf = self.apply_t_n(n, lambda, f)?;
            let rp = shifted_norm(&tf, &self.w, self.s, ni) / shifted_norm(f, &self.w, self.s, ni);
            let rm = shifted_norm(&tf, &self.w, self.s, -ni) / shifted_norm(f, &self.w, self.s, -ni);
            plus = plus.max(rp);
            minus = minus.max(rm);
            if *random {
                random_probe_max = random_probe_max.max(rp.max(rm));
            }
        }
        Ok(OperatorNormEstimate {
            plus,
            minus,
            random_probe_max,
            probes: probes.len(),
        })
    }

    /// The probe `f_k = conj(sgn T_{mk}) / W_k` for the row `m` maximizing
    /// `W_m sum_k |T_{mk}| / W_k`, with `W_k = w_{k+l} <k+l>^s`.
    fn extremal_probe(&self, n: usize, lambda: Complex64, l: i64) -> Result<FourierSeq> {
        let ni = n as i64;
        let h = self.k as i64;
        let weight = |k: i64| self.w.value(k + l) * bracket(k + l).powf(self.s);
        let mut best = (-1.0f64, 0i64);
        for m in -h..=h {
            let mut row = 0.0;
            for &(j, qj) in &self.q_nz {
                let k = m - j;
                if k.abs() > h || k.abs() == ni {
                    continue;
                }
                row += qj.norm() / ((lambda - symbol(k)).norm() * weight(k));
            }
            row *= weight(m);
            if row > best.0 {
                best = (row, m);
            }
        }
        let m = best.1;
        let mut f = FourierSeq::zeros(self.k);
        for k in -h..=h {
            let entry = if k.abs() == ni {
                ZERO
            } else {
                self.q.coeff(m - k) / (lambda - symbol(k))
            };
            let phase = if entry == ZERO {
                Complex64::new(1.0, 0.0)
            } else {
                (entry / entry.norm()).conj()
            };
            f.set(k, phase / weight(k));
        }
        Ok(f)
    }

    /// The five-point grid of the strip `S_n` used for contraction checks:
    /// the center and `+-6n` along the real axis, and `+-6n i`.
    pub fn strip_grid(n: usize) -> [Complex64; 5] {
        let c = Self::center(n);
        let d = 6.0 * n as f64;
        [
            Complex64::new(c, 0.0),
            Complex64::new(c - d, 0.0),
            Complex64::new(c + d, 0.0),
            Complex64::new(c, d),
            Complex64::new(c, -d),
        ]
    }

    /// Reduction summary for one index: roots, coefficients at `alpha_n`
    /// when `n >= N_ms` (otherwise at the midpoint of the roots), and the
    /// operator norm estimate there.
    pub fn reduce(&self, n: usize) -> Result<ReductionResult> {
        let roots = self.find_roots(n)?;
        let alpha = if n >= self.thresholds.n_ms {
            Some(self.alpha_fixed_point(n)?.alpha)
        } else {
            None
        };
        let lambda = alpha.unwrap_or((roots.xi_1 + roots.xi_2) * 0.5);
        let coeffs = self.coefficients(n, lambda)?;
        let est = self.t_n_norm_estimate(n, lambda)?;
        Ok(ReductionResult {
            n,
            lambda,
            a_n: coeffs.a_n,
            b_n: coeffs.b_n,
            b_neg_n: coeffs.b_neg_n,
            alpha_n: alpha,
            xi_1: roots.xi_1,
            xi_2: roots.xi_2,
            gap_estimate: roots.gap,
            neumann_terms_used: coeffs.terms_used,
            contraction_bound: est.max(),
        })
    }

    /// `w_{2n} <2n>^s`.
    pub fn gap_weight(&self, n: i64) -> f64 {
        self.w.value(2 * n) * bracket(2 * n).powf(self.s)
    }

    /// `||f||_{w,s,inf}` in the context's class.
    pub fn class_norm(&self, f: &FourierSeq) -> f64 {
        norm(f, &self.w, self.s, f64::INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::periodic_spectrum;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ctx(q: Potential, k: usize) -> ReductionContext {
        let m = q.norm(&Weight::Trivial, 0.0).max(1e-3);
        ReductionContext::new(q, 0.0, Weight::Trivial, m, k).unwrap()
    }

    #[test]
    fn zero_potential_is_trivial() {
        let cx = ctx(Potential::zero(4), 32);
        let lam = c(ReductionContext::center(3), 0.0);
        let f = FourierSeq::unit(32, 5);
        assert_eq!(cx.apply_t_n(3, lam, &f).unwrap().sup_abs(), 0.0);
        let k = cx.neumann_k_n(3, lam, &f).unwrap();
        assert_eq!(k.value, f);
        assert_eq!(k.terms_used, 1);
        let co = cx.coefficients(3, lam).unwrap();
        assert_eq!((co.a_n, co.b_n, co.b_neg_n), (c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn one_step_hand_computation() {
        // q_{+-2} = c, f = e_{-n}: A^{-1} Q_n kills e_{-n}, so T_n e_{-n} = 0;
        // for f = e_{-n+2} the output has masses c/(lambda - (n-2)^2 pi^2) at
        // -n and -n+4.
        let cc = 0.07;
        let cx = ctx(Potential::single_mode(c(cc, 0.0)), 32);
        let n = 5usize;
        let lam = c(ReductionContext::center(n), 0.0);
        assert_eq!(cx.apply_t_n(n, lam, &FourierSeq::unit(32, -5)).unwrap().sup_abs(), 0.0);
        let out = cx.apply_t_n(n, lam, &FourierSeq::unit(32, -3)).unwrap();
        let want = c(cc, 0.0) / (lam - symbol(3));
        assert_eq!(out.nonzeros(), vec![(-5, want), (-1, want)]);
    }

    #[test]
    fn neumann_residual_is_small() {
        let q = Potential::from_modes([(1, c(0.1, 0.02)), (-1, c(0.1, -0.02)), (2, c(0.03, 0.0)), (-2, c(0.03, 0.0))]).unwrap();
        let cx = ctx(q, 48);
        let n = 6usize;
        let lam = c(ReductionContext::center(n) + 3.0, 2.0);
        let f = FourierSeq::from_fn(48, |k| c(1.0 / bracket(k), (k as f64).sin()));
        let kf = cx.neumann_k_n(n, lam, &f).unwrap();
        let resid = kf.value.sub(&cx.apply_t_n(n, lam, &kf.value).unwrap()).sub(&f);
        assert!(cx.shifted_pair_norm(n, &resid) < 10.0 * cx.neumann_tol * cx.shifted_pair_norm(n, &f));
    }

    #[test]
    fn terms_grow_with_potential_size() {
        let mut last = 0;
        for amp in [0.01, 0.05, 0.15] {
            let cx = ctx(Potential::single_mode(c(amp, 0.0)), 128);
            let n = cx.thresholds().n_s.max(4);
            let co = cx.coefficients(n, c(ReductionContext::center(n), 0.0)).unwrap();
            assert!(co.terms_used >= last);
            last = co.terms_used;
        }
    }

    #[test]
    fn coefficient_symmetries() {
        let q = Potential::from_modes([(1, c(0.05, 0.03)), (-1, c(0.05, -0.03)), (3, c(0.0, 0.02)), (-3, c(0.0, -0.02))]).unwrap();
        let cx = ctx(q, 64);
        let n = 7usize;
        let lam = c(ReductionContext::center(n) + 1.5, 0.7);
        let co = cx.coefficients(n, lam).unwrap();
        let cb = cx.coefficients(n, lam.conj()).unwrap();
        assert!((co.a_n - co.a_neg_n).norm() < 1e-12);
        assert!((cb.a_n - co.a_n.conj()).norm() < 1e-12);
        assert!((cb.b_neg_n - co.b_n.conj()).norm() < 1e-12);
    }

    #[test]
    fn roots_are_galerkin_eigenvalues() {
        let q = Potential::from_modes([(1, c(0.08, 0.0)), (-1, c(0.08, 0.0)), (2, c(0.0, 0.04)), (-2, c(0.0, -0.04))]).unwrap();
        let cx = ctx(q.clone(), 64);
        let spec = periodic_spectrum(&q, 64).unwrap();
        for n in cx.thresholds().n_s.max(2)..=cx.thresholds().n_s.max(2) + 3 {
            let r = cx.find_roots(n).unwrap();
            let scale = ReductionContext::center(n);
            assert!((r.xi_1 - spec.lambda_minus(n)).norm() < 1e-9 * scale);
            assert!((r.xi_2 - spec.lambda_plus(n)).norm() < 1e-9 * scale);
        }
    }

    #[test]
    fn norm_estimate_is_exact_on_truncation() {
        let q = Potential::single_mode(c(0.1, 0.0));
        let cx = ctx(q, 32);
        let n = 4usize;
        let lam = c(ReductionContext::center(n) + 10.0, 5.0);
        let est = cx.t_n_norm_estimate(n, lam).unwrap();
        assert!(est.random_probe_max <= est.max() * (1.0 + 1e-12));
        // Closed form: row m receives q_{+-2} from k = m -+ 2.
        let mut exact: f64 = 0.0;
        for m in -32i64..=32 {
            let mut row = 0.0;
            for k in [m - 2, m + 2] {
                if k.abs() <= 32 && k.abs() != 4 {
                    row += 0.1 * bracket(k + 4).powi(0) / (lam - symbol(k)).norm();
                }
            }
            exact = exact.max(row);
        }
        assert!((est.plus - exact).abs() < 1e-14 * exact);
    }
}
