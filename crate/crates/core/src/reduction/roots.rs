//! Roots of `det B_n` and the fixed point `alpha_n`.
//!
//! Everything is parametrized by the offset `z = lambda - n^2 pi^2` so that
//! residuals and step sizes are not swamped by the rounding of `n^2 pi^2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{Coefficients, ReductionContext};
use crate::error::{HillError, Result};

const NEWTON_MAX: usize = 50;
const WINDING_POINTS: usize = 256;
const DEGENERATE: f64 = 1e-9;
const ALPHA_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootMethod {
    Newton,
    Winding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootResult {
    pub n: usize,
    /// Lexicographically smaller root.
    pub xi_1: Complex64,
    pub xi_2: Complex64,
    /// `|xi_1 - xi_2|`, or 0 when the roots coincide to `1e-9`.
    pub gap: f64,
    pub degenerate: bool,
    /// `|det B_n(xi_1)|` and `|det B_n(xi_2)|`.
    pub residuals: [f64; 2],
    pub method: RootMethod,
    /// Winding number of `det B_n` on the boundary of `D_n`, when computed.
    pub winding: Option<i64>,
    /// `sqrt(6) sup |b_n b_-n|^(1/2)` over a 16-point grid of `D_n`.
    pub sandwich_bound: f64,
    /// `None` for degenerate gaps, where the comparison is skipped.
    pub sandwich_holds: Option<bool>,
}

impl RootResult {
    /// Residual acceptance level `1e-8 n`.
    pub fn residual_ok(&self) -> bool {
        let tol = 1e-8 * self.n as f64;
        self.residuals.iter().all(|&r| r < tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaResult {
    pub alpha: Complex64,
    /// `alpha_n - n^2 pi^2`.
    pub offset: Complex64,
    pub iterations: usize,
    /// `|alpha_n - n^2 pi^2 - a_n(alpha_n)|`.
    pub residual: f64,
    /// Largest observed ratio of consecutive steps.
    pub rate: f64,
    /// `8 c_s m^2 / n^(1/2-|s|)`.
    pub bound: f64,
}

impl AlphaResult {
    pub fn within_bound(&self) -> bool {
        self.offset.norm() <= self.bound
    }
}

fn lex_pair(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    let band = 1e-10 * a.re.abs().max(b.re.abs()).max(1.0);
    let swap = if (a.re - b.re).abs() > band {
        a.re > b.re
    } else {
        a.im > b.im
    };
    if swap {
        (b, a)
    } else {
        (a, b)
    }
}

impl ReductionContext {
    fn coeffs_at(&self, n: usize, z: Complex64) -> Result<Coefficients> {
        self.coefficients(n, Complex64::new(Self::center(n), 0.0) + z)
    }

    /// `sqrt(b_n b_-n)` on the branch nearest `reference`.
    fn branch(c: &Coefficients, reference: Complex64) -> Complex64 {
        let p = (c.b_n * c.b_neg_n).sqrt();
        if (p - reference).norm() <= (-p - reference).norm() {
            p
        } else {
            -p
        }
    }

    /// `g(z) = z - a_n - sign sqrt(b_n b_-n)` and the branch value used.
    fn factor(&self, n: usize, z: Complex64, sign: f64, reference: Complex64) -> Result<(Complex64, Complex64)> {
        let c = self.coeffs_at(n, z)?;
        let p = Self::branch(&c, reference);
        Ok((z - c.a_n - sign * p, p))
    }

    fn det_offset(&self, n: usize, z: Complex64) -> Result<Complex64> {
        Ok(self.coeffs_at(n, z)?.det_at_offset(z))
    }

    fn newton_factor(&self, n: usize, z0: Complex64, sign: f64, phi0: Complex64) -> Option<Complex64> {
        let radius = 4.0 * (n as f64).sqrt();
        let h = 1e-4 * n as f64;
        let tol = 1e-13 * Self::center(n).max(1.0);
        let mut z = z0;
        let mut phi = phi0;
        for _ in 0..NEWTON_MAX {
            let (g, p) = self.factor(n, z, sign, phi).ok()?;
            if g == Complex64::new(0.0, 0.0) {
                return Some(z);
            }
            let (gp, _) = self.factor(n, z + h, sign, p).ok()?;
            let (gm, _) = self.factor(n, z - h, sign, p).ok()?;
            let d = (gp - gm) / (2.0 * h);
            if d.norm() == 0.0 || !d.is_finite() {
                return None;
            }
            let step = g / d;
            z -= step;
            phi = p;
            if !z.is_finite() || z.norm() > radius {
                return None;
            }
            if step.norm() < tol {
                return Some(z);
            }
        }
        None
    }

    /// Polishes a root of `det B_n` by Newton with a central difference.
    fn polish_det(&self, n: usize, z0: Complex64) -> Complex64 {
        let h = 1e-4 * n as f64;
        let tol = 1e-13 * Self::center(n).max(1.0);
        let mut z = z0;
        for _ in 0..20 {
            let (Ok(f), Ok(fp), Ok(fm)) = (
                self.det_offset(n, z),
                self.det_offset(n, z + h),
                self.det_offset(n, z - h),
            ) else {
                return z0;
            };
            let d = (fp - fm) / (2.0 * h);
            if d.norm() == 0.0 {
                return z;
            }
            let step = f / d;
            if !step.is_finite() || (z - step - z0).norm() > 1e-3 * (n as f64).sqrt() {
                return z;
            }
            z -= step;
            if step.norm() < tol {
                break;
            }
        }
        z
    }

    /// Argument principle on `|z| = 4 sqrt(n)`: returns the winding number
    /// and the two roots recovered from the first two moments.
    fn winding_roots(&self, n: usize) -> Result<(i64, Option<(Complex64, Complex64)>)> {
        let radius = 4.0 * (n as f64).sqrt();
        let np = WINDING_POINTS;
        let nodes: Vec<Complex64> = (0..np)
            .map(|j| Complex64::from_polar(radius, 2.0 * PI * j as f64 / np as f64))
            .collect();
        let mut vals = Vec::with_capacity(np);
        for &z in &nodes {
            vals.push(self.det_offset(n, z)?);
        }
        // d/dtheta by spectral differentiation of the samples.
        let mut planner = FftPlanner::<f64>::new();
        let mut spec = vals.clone();
        planner.plan_fft_forward(np).process(&mut spec);
        for (j, c) in spec.iter_mut().enumerate() {
            let freq = if j < np / 2 {
                j as f64
            } else if j == np / 2 {
                0.0
            } else {
                j as f64 - np as f64
            };
            *c *= Complex64::new(0.0, freq / np as f64);
        }
        planner.plan_fft_inverse(np).process(&mut spec);
        let mut moments = [Complex64::new(0.0, 0.0); 3];
        for j in 0..np {
            let ratio = spec[j] / vals[j];
            let mut zp = Complex64::new(1.0, 0.0);
            for m in moments.iter_mut() {
                *m += zp * ratio;
                zp *= nodes[j];
            }
        }
        let scale = Complex64::new(0.0, np as f64);
        for m in moments.iter_mut() {
            *m /= scale;
        }
        let winding = moments[0].re.round() as i64;
        if winding != 2 {
            return Ok((winding, None));
        }
        let (s1, s2) = (moments[1], moments[2]);
        let disc = (2.0 * s2 - s1 * s1).sqrt();
        Ok((winding, Some(((s1 + disc) * 0.5, (s1 - disc) * 0.5))))
    }

    fn alpha_iterate(&self, n: usize, strict: bool) -> Result<(Complex64, usize, f64)> {
        let center = Self::center(n);
        let step_tol = (1e-10 * center).min(1e-13);
        let mut z = Complex64::new(0.0, 0.0);
        let mut prev_step = f64::INFINITY;
        let mut rate = 0.0f64;
        for it in 1..=ALPHA_MAX_ITER {
            let next = self.coeffs_at(n, z)?.a_n;
            let step = (next - z).norm();
            z = next;
            if step < step_tol {
                return Ok((z, it, rate));
            }
            if prev_step.is_finite() && prev_step > 1e-12 {
                let r = step / prev_step;
                rate = rate.max(r);
                if strict && r > 0.25 {
                    return Err(HillError::NonContraction {
                        n,
                        reason: format!("step ratio {r:.3} exceeds 1/4 at iteration {it}"),
                    });
                }
            }
            prev_step = step;
        }
        if strict {
            return Err(HillError::NonContraction {
                n,
                reason: format!("no convergence within {ALPHA_MAX_ITER} iterations"),
            });
        }
        Ok((z, ALPHA_MAX_ITER, rate))
    }

    /// Fixed point `alpha_n = n^2 pi^2 + a_n(alpha_n)`, iterated from
    /// `n^2 pi^2`.
    pub fn alpha_fixed_point(&self, n: usize) -> Result<AlphaResult> {
        let th = self.thresholds();
        if n < th.n_ms {
            return Err(HillError::BelowThreshold {
                n,
                threshold: th.n_ms,
                which: "N_ms",
            });
        }
        let (z, iterations, rate) = self.alpha_iterate(n, true)?;
        let residual = (z - self.coeffs_at(n, z)?.a_n).norm();
        let beta = 0.5 - self.s().abs();
        Ok(AlphaResult {
            alpha: Complex64::new(Self::center(n), 0.0) + z,
            offset: z,
            iterations,
            residual,
            rate,
            bound: 8.0 * th.c_s * self.m() * self.m() / (n as f64).powf(beta),
        })
    }

    /// `sqrt(6) sup |b_n b_-n|^(1/2)` over the center, seven points at half
    /// radius and eight on the boundary of `D_n`.
    pub fn sandwich_bound(&self, n: usize) -> Result<f64> {
        let radius = 4.0 * (n as f64).sqrt();
        let mut pts = vec![Complex64::new(0.0, 0.0)];
        for j in 0..7 {
            pts.push(Complex64::from_polar(0.5 * radius, 2.0 * PI * j as f64 / 7.0));
        }
        for j in 0..8 {
            pts.push(Complex64::from_polar(radius, 2.0 * PI * (j as f64 + 0.5) / 8.0));
        }
        let mut sup = 0.0f64;
        for z in pts {
            let c = self.coeffs_at(n, z)?;
            sup = sup.max((c.b_n * c.b_neg_n).norm().sqrt());
        }
        Ok(6f64.sqrt() * sup)
    }

    /// Both roots of `det B_n` in `D_n`: Newton on the factors `g_+-`
    /// seeded at `alpha_n +- sqrt(b_n b_-n)(alpha_n)`, with the argument
    /// principle as fallback.
    pub fn find_roots(&self, n: usize) -> Result<RootResult> {
        self.require_ns(n)?;
        let seed = self.alpha_iterate(n, false).map(|r| r.0).unwrap_or_default();
        let c0 = self.coeffs_at(n, seed)?;
        let phi0 = (c0.b_n * c0.b_neg_n).sqrt();
        let radius = 4.0 * (n as f64).sqrt();
        let res_tol = 1e-8 * n as f64;

        let newton = match (
            self.newton_factor(n, seed + phi0, 1.0, phi0),
            self.newton_factor(n, seed - phi0, -1.0, phi0),
        ) {
            (Some(a), Some(b)) => {
                let ra = self.det_offset(n, a)?.norm();
                let rb = self.det_offset(n, b)?.norm();
                let distinct = (a - b).norm() >= DEGENERATE || phi0.norm() < DEGENERATE;
                (ra < res_tol && rb < res_tol && distinct && a.norm() <= radius && b.norm() <= radius)
                    .then_some((a, b))
            }
            _ => None,
        };

        let (z1, z2, method, winding) = match newton {
            Some((a, b)) => (a, b, RootMethod::Newton, None),
            None => {
                let (w, roots) = self.winding_roots(n)?;
                let Some((a, b)) = roots else {
                    return Err(HillError::Localization { n, winding: w });
                };
                let (a, b) = (self.polish_det(n, a), self.polish_det(n, b));
                (a, b, RootMethod::Winding, Some(w))
            }
        };
        let r1 = self.det_offset(n, z1)?.norm();
        let r2 = self.det_offset(n, z2)?.norm();
        if !(z1.is_finite() && z2.is_finite()) {
            return Err(HillError::RootFailure {
                n,
                reason: "non-finite root".into(),
            });
        }
        let center = Complex64::new(Self::center(n), 0.0);
        let (xi_1, xi_2) = lex_pair(center + z1, center + z2);
        let diff = (z1 - z2).norm();
        let degenerate = diff < DEGENERATE;
        let gap = if degenerate { 0.0 } else { diff };
        let sandwich_bound = self.sandwich_bound(n)?;
        Ok(RootResult {
            n,
            xi_1,
            xi_2,
            gap,
            degenerate,
            residuals: [r1, r2],
            method,
            winding,
            sandwich_bound,
            sandwich_holds: (!degenerate).then(|| gap <= sandwich_bound * (1.0 + 1e-12)),
        })
    }

    /// Forces the argument-principle path; used to cross-check Newton.
    pub fn find_roots_by_winding(&self, n: usize) -> Result<(i64, Complex64, Complex64)> {
        self.require_ns(n)?;
        let (w, roots) = self.winding_roots(n)?;
        let Some((a, b)) = roots else {
            return Err(HillError::Localization { n, winding: w });
        };
        let center = Complex64::new(Self::center(n), 0.0);
        let (x, y) = lex_pair(center + self.polish_det(n, a), center + self.polish_det(n, b));
        Ok((w, x, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::periodic_spectrum;
    use crate::operator::Potential;
    use crate::seq::Weight;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ctx(q: Potential, m: f64) -> ReductionContext {
        ReductionContext::new(q, 0.0, Weight::Trivial, m, 64).unwrap()
    }

    #[test]
    fn free_roots_and_alpha() {
        let cx = ctx(Potential::zero(4), 1e-3);
        let r = cx.find_roots(3).unwrap();
        let center = ReductionContext::center(3);
        assert_eq!((r.xi_1, r.xi_2), (c(center, 0.0), c(center, 0.0)));
        assert!(r.degenerate && r.gap == 0.0 && r.sandwich_holds.is_none());
        let n = cx.thresholds().n_ms;
        let a = cx.alpha_fixed_point(n).unwrap();
        assert_eq!(a.iterations, 1);
        assert_eq!(a.alpha, c(ReductionContext::center(n), 0.0));
    }

    #[test]
    fn winding_agrees_with_newton() {
        let q = Potential::from_modes([(1, c(0.04, 0.01)), (-1, c(0.02, 0.0)), (3, c(0.0, 0.01))]).unwrap();
        let m = q.norm(&Weight::Trivial, 0.0);
        let cx = ctx(q, m);
        let n = cx.thresholds().n_s + 1;
        let r = cx.find_roots(n).unwrap();
        let (w, a, b) = cx.find_roots_by_winding(n).unwrap();
        assert_eq!(w, 2);
        let scale = ReductionContext::center(n);
        assert!((a - r.xi_1).norm() < 1e-9 * scale, "{a} vs {}", r.xi_1);
        assert!((b - r.xi_2).norm() < 1e-9 * scale);
    }

    #[test]
    fn real_potential_gives_real_alpha() {
        let q = Potential::from_modes([(1, c(0.003, 0.001)), (-1, c(0.003, -0.001)), (2, c(-0.002, 0.0)), (-2, c(-0.002, 0.0))]).unwrap();
        let cx = ctx(q, 0.004);
        let n = cx.thresholds().n_ms;
        let a = cx.alpha_fixed_point(n).unwrap();
        assert!(a.alpha.im.abs() < 1e-9);
        assert!(a.residual < 1e-9);
        assert!(a.within_bound());
        assert!(a.rate <= 0.25);
    }

    #[test]
    fn gap_matches_galerkin() {
        let q = Potential::single_mode(c(0.05, 0.0));
        let cx = ctx(q.clone(), 0.05);
        let spec = periodic_spectrum(&q, 64).unwrap();
        let n = cx.thresholds().n_s;
        let r = cx.find_roots(n).unwrap();
        let oracle = (spec.lambda_plus(n) - spec.lambda_minus(n)).norm();
        assert!((r.gap - oracle).abs() <= 1e-6 * oracle.max(1e-12) + 1e-12);
        assert!(r.residual_ok());
        assert_eq!(r.sandwich_holds.unwrap_or(true), true);
    }
}
