//! Adapted Fourier coefficients, the gap sandwich, and eigenfunction
//! reconstruction from a kernel vector of `B_n`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ReductionContext;
use crate::error::{HillError, Result};
use crate::operator::{apply_a_inv_q, symbol};
use crate::seq::{norm, FourierSeq};

/// `r = Omega^(m)(q)` together with the fixed points used for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptedResult {
    pub r: FourierSeq,
    /// `(n, alpha_n)` for every replaced index.
    pub alphas: Vec<(usize, Complex64)>,
    pub m_ms: usize,
}

impl AdaptedResult {
    /// `||r - q||_{w,s,inf}`.
    pub fn distance(&self, cx: &ReductionContext) -> f64 {
        let q = cx.potential().seq().resized(self.r.half_range());
        cx.class_norm(&self.r.sub(&q))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SandwichStatus {
    Pass,
    Fail,
    /// The ratio `|r_2n / r_-2n|` lies outside `[1/9, 9]` or `r_-2n = 0`.
    ConditionNotMet,
    /// Both sides vanish.
    Vacuous,
    BelowThreshold,
}

/// `lo = |r_2n r_-2n| <= mid = |gamma_n|^2 <= hi = 9 lo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub n: usize,
    pub lo: f64,
    pub mid: f64,
    pub hi: f64,
    pub status: SandwichStatus,
}

impl SandwichReport {
    /// True unless the asserted inequality failed.
    pub fn pass(&self) -> bool {
        self.status != SandwichStatus::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenfunctionResult {
    pub f: FourierSeq,
    /// `||(L - xi) f||_{w,s-2,inf}`.
    pub residual: f64,
    /// `||f||_{w,s,inf}`.
    pub f_norm: f64,
    /// `|B_n(xi) u|`.
    pub kernel_residual: f64,
    /// `||f - u||_{w,s+2,inf}`: the complement part lies two orders above
    /// the potential's class.
    pub smooth_part_norm: f64,
}

impl EigenfunctionResult {
    pub fn residual_ok(&self) -> bool {
        self.residual < 1e-6 * self.f_norm
    }
}

impl ReductionContext {
    /// Replaces `q_{+-2n}` by `b_{+-n}(alpha_n)` for `M_ms <= n <= n_max`.
    pub fn adapted_coefficients(&self, n_max: usize) -> Result<AdaptedResult> {
        let m_ms = self.thresholds().m_ms;
        let q = self.potential().seq();
        if q.half_range() > 2 * n_max {
            return Err(HillError::Precondition(format!(
                "n_max = {n_max} does not cover the potential band {}",
                q.half_range()
            )));
        }
        let mut r = q.resized(2 * n_max);
        let mut alphas = Vec::new();
        for n in m_ms..=n_max {
            let a = self.alpha_fixed_point(n)?;
            let co = self.coefficients(n, a.alpha)?;
            let ni = n as i64;
            r.set(2 * ni, co.b_n);
            r.set(-2 * ni, co.b_neg_n);
            alphas.push((n, a.alpha));
        }
        Ok(AdaptedResult { r, alphas, m_ms })
    }

    /// Compares `|gamma_n|^2` with `|r_2n r_-2n|` when the ratio condition
    /// `1/9 <= |r_2n / r_-2n| <= 9` holds.
    pub fn gap_sandwich(&self, n: usize, r: &FourierSeq, gamma: Complex64) -> SandwichReport {
        let ni = n as i64;
        let (rp, rm) = (r.get(2 * ni), r.get(-2 * ni));
        let lo = (rp * rm).norm();
        let mid = gamma.norm_sqr();
        let hi = 9.0 * lo;
        let status = if n < self.thresholds().m_ms {
            SandwichStatus::BelowThreshold
        } else if lo == 0.0 && mid == 0.0 {
            SandwichStatus::Vacuous
        } else if rm == Complex64::new(0.0, 0.0) || {
            let ratio = rp.norm() / rm.norm();
            !(1.0 / 9.0..=9.0).contains(&ratio)
        } {
            SandwichStatus::ConditionNotMet
        } else {
            let slack = 1e-9 * hi.max(mid);
            if lo <= mid + slack && mid <= hi + slack {
                SandwichStatus::Pass
            } else {
                SandwichStatus::Fail
            }
        };
        SandwichReport { n, lo, mid, hi, status }
    }

    /// `B_n(xi) u` for `u = (u_n, u_-n)`.
    pub fn apply_b(&self, n: usize, xi: Complex64, u: (Complex64, Complex64)) -> Result<(Complex64, Complex64)> {
        let c = self.coefficients(n, xi)?;
        let d = xi - Self::center(n);
        Ok((
            (d - c.a_n) * u.0 - c.b_n * u.1,
            -c.b_neg_n * u.0 + (d - c.a_neg_n) * u.1,
        ))
    }

    /// A unit vector in the kernel of `B_n(xi)`, read off the row of larger
    /// magnitude. Any unit vector is returned when `B_n(xi)` vanishes.
    pub fn kernel_vector(&self, n: usize, xi: Complex64) -> Result<(Complex64, Complex64)> {
        let c = self.coefficients(n, xi)?;
        let d = xi - Self::center(n);
        let row1 = (d - c.a_n, -c.b_n);
        let row2 = (-c.b_neg_n, d - c.a_neg_n);
        let size = |r: (Complex64, Complex64)| r.0.norm_sqr() + r.1.norm_sqr();
        let (u0, u1) = if size(row1) == 0.0 && size(row2) == 0.0 {
            (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
        } else if size(row1) >= size(row2) {
            (-row1.1, row1.0)
        } else {
            (row2.1, -row2.0)
        };
        let len = (u0.norm_sqr() + u1.norm_sqr()).sqrt();
        Ok((u0 / len, u1 / len))
    }

    /// `f = u + A_xi^{-1} Q_n K_n V u` for `u = u_n e_n + u_-n e_-n` in the
    /// kernel of `B_n(xi)`.
    pub fn eigenfunction_reconstruct(
        &self,
        n: usize,
        xi: Complex64,
        u: (Complex64, Complex64),
    ) -> Result<EigenfunctionResult> {
        let ni = n as i64;
        let (k0, k1) = self.apply_b(n, xi, u)?;
        let kernel_residual = (k0.norm_sqr() + k1.norm_sqr()).sqrt();
        let u_len = (u.0.norm_sqr() + u.1.norm_sqr()).sqrt();
        if !(kernel_residual <= 1e-6 * u_len.max(f64::MIN_POSITIVE)) {
            return Err(HillError::Precondition(format!(
                "u is not in the kernel of B_{n}(xi): |B u| = {kernel_residual:e}"
            )));
        }
        let k = self.k();
        let mut useq = FourierSeq::zeros(k);
        useq.set(ni, u.0);
        useq.set(-ni, u.1);
        let vu = self.multiply(&useq);
        let w = self.neumann_k_n(n, xi, &vu)?.value;
        let v = apply_a_inv_q(xi, n, &w)?;
        let f = useq.add(&v);

        let h = k as i64;
        let vf = self.multiply(&f);
        let lf = FourierSeq::from_fn(k, |j| (symbol(j) - xi) * f.get(j) + vf.get(j));
        debug_assert!(lf.half_range() == h as usize);
        let s = self.s();
        Ok(EigenfunctionResult {
            residual: norm(&lf, self.weight(), s - 2.0, f64::INFINITY),
            f_norm: norm(&f, self.weight(), s, f64::INFINITY),
            kernel_residual,
            smooth_part_norm: norm(&v, self.weight(), s + 2.0, f64::INFINITY),
            f,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::Potential;
    use crate::seq::Weight;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_potential_cases() {
        let cx = ReductionContext::new(Potential::zero(4), 0.0, Weight::Trivial, 1e-3, 64).unwrap();
        let m = cx.thresholds().m_ms;
        let ad = cx.adapted_coefficients(m + 1).unwrap();
        assert_eq!(ad.r.sup_abs(), 0.0);
        let rep = cx.gap_sandwich(m, &ad.r, c(0.0, 0.0));
        assert_eq!(rep.status, SandwichStatus::Vacuous);
        let xi = c(ReductionContext::center(3), 0.0);
        let e = cx.eigenfunction_reconstruct(3, xi, (c(1.0, 0.0), c(0.0, 0.0))).unwrap();
        assert_eq!(e.f, FourierSeq::unit(64, 3));
        assert_eq!(e.residual, 0.0);
    }

    #[test]
    fn kernel_precondition_is_enforced() {
        let q = Potential::single_mode(c(0.05, 0.0));
        let cx = ReductionContext::new(q, 0.0, Weight::Trivial, 0.05, 64).unwrap();
        let n = cx.thresholds().n_s;
        let xi = c(ReductionContext::center(n) + 1.0, 0.0);
        let err = cx.eigenfunction_reconstruct(n, xi, (c(1.0, 0.0), c(0.0, 0.0)));
        assert!(matches!(err, Err(HillError::Precondition(_))));
    }

    #[test]
    fn sandwich_condition_not_met() {
        let q = Potential::zero(4);
        let cx = ReductionContext::new(q, 0.0, Weight::Trivial, 1e-3, 64).unwrap();
        let n = cx.thresholds().m_ms;
        let mut r = FourierSeq::zeros(2 * n);
        r.set(2 * n as i64, c(1.0, 0.0));
        r.set(-2 * n as i64, c(0.01, 0.0));
        assert_eq!(cx.gap_sandwich(n, &r, c(0.1, 0.0)).status, SandwichStatus::ConditionNotMet);
        r.set(-2 * n as i64, c(1.0, 0.0));
        assert_eq!(cx.gap_sandwich(n, &r, c(1.5, 0.0)).status, SandwichStatus::Pass);
        assert_eq!(cx.gap_sandwich(n, &r, c(3.5, 0.0)).status, SandwichStatus::Fail);
    }
}
