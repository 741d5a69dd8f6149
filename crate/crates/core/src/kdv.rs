//! Pseudospectral reference solver for KdV `u_t = -u_xxx + 6 u u_x` and the
//! Airy equation `u_t = -u_xxx` on `R/Z`, plus the monitors that tie the
//! PDE flow back to the spectral side.
//!
//! States use the modes `e^{2 pi i k x}`. The potential with the same values
//! viewed on `R/2Z` carries them at the even modes `2k`; [`to_potential`] and
//! [`from_potential`] are the only places that translate.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{HillError, Result};
use crate::galerkin::{dirichlet_spectrum, periodic_spectrum};
use crate::operator::Potential;
use crate::phase::unit_phase;
use crate::seq::{bracket, FourierSeq};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A solution snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeState {
    pub u_hat: FourierSeq,
    pub t: f64,
    /// Step size; `None` selects [`default_dt`].
    pub dt: Option<f64>,
    /// Modes with `|k|` above this value take no part in the nonlinearity.
    pub dealias_cutoff: usize,
}

impl PdeState {
    pub fn new(u_hat: FourierSeq) -> Self {
        let k = u_hat.half_range();
        PdeState {
            u_hat,
            t: 0.0,
            dt: None,
            dealias_cutoff: 2 * k / 3,
        }
    }

    pub fn zeros(k: usize) -> Self {
        Self::new(FourierSeq::zeros(k))
    }

    /// `a cos(2 pi x)` on `|k| <= K`.
    pub fn cosine(a: f64, k: usize) -> Self {
        let mut u = FourierSeq::zeros(k);
        u.set(1, Complex64::new(a / 2.0, 0.0));
        u.set(-1, Complex64::new(a / 2.0, 0.0));
        Self::new(u)
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn k(&self) -> usize {
        self.u_hat.half_range()
    }

    /// `u_hat(-k) = conj(u_hat(k))` to `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        let h = self.k() as i64;
        (0..=h).all(|k| (self.u_hat.get(-k) - self.u_hat.get(k).conj()).norm() <= tol)
    }

    /// Values on `n` equispaced points of `[0, 1)`.
    pub fn grid_values(&self, n: usize) -> Vec<Complex64> {
        Transform::new(n).to_grid(&self.u_hat, self.k())
    }
}

/// The potential on `R/2Z` with `q_{2k} = u_hat(k)`.
pub fn to_potential(u: &PdeState) -> Result<Potential> {
    let h = u.k() as i64;
    let mut seq = FourierSeq::zeros(2 * u.k());
    for k in -h..=h {
        if k != 0 {
            seq.set(2 * k, u.u_hat.get(k));
        }
    }
    if u.u_hat.get(0).norm() > 0.0 {
        return Err(HillError::InvalidPotential("PDE state has nonzero mean".into()));
    }
    Potential::new(seq)
}

/// The PDE state with `u_hat(k) = q_{2k}`.
pub fn from_potential(q: &Potential) -> PdeState {
    let k = q.seq().half_range() / 2;
    PdeState::new(FourierSeq::from_fn(k.max(1), |j| q.coeff(2 * j)))
}

/// FFT between coefficients `|k| <= K` and `n` grid points.
struct Transform {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Transform {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Transform {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    fn to_grid(&self, c: &FourierSeq, cutoff: usize) -> Vec<Complex64> {
        let mut buf = vec![ZERO; self.n];
        let h = cutoff.min(c.half_range()) as i64;
        for k in -h..=h {
            buf[k.rem_euclid(self.n as i64) as usize] += c.get(k);
        }
        self.inv.process(&mut buf);
        buf
    }

    /// Coefficients `|k| <= cutoff` of grid values.
    fn from_grid(&self, mut vals: Vec<Complex64>, cutoff: usize, half_range: usize) -> FourierSeq {
        self.fwd.process(&mut vals);
        let scale = 1.0 / self.n as f64;
        let h = cutoff as i64;
        let mut out = FourierSeq::zeros(half_range);
        for k in -h..=h {
            out.set(k, vals[k.rem_euclid(self.n as i64) as usize] * scale);
        }
        out
    }
}

/// Right-hand side `6 u u_x = 3 (u^2)_x` with the 2/3 rule.
struct Nonlinearity {
    k: usize,
    cutoff: usize,
    tr: Transform,
}

impl Nonlinearity {
    fn new(k: usize, cutoff: usize) -> Self {
        // 3 cutoff + 1 points resolve the square of a degree-cutoff polynomial.
        let n = (3 * cutoff + 1).max(4).next_power_of_two();
        Nonlinearity {
            k,
            cutoff,
            tr: Transform::new(n),
        }
    }

    fn eval(&self, u: &FourierSeq) -> FourierSeq {
        let vals = self.tr.to_grid(u, self.cutoff);
        let sq: Vec<Complex64> = vals.iter().map(|v| v * v).collect();
        let mut out = self.tr.from_grid(sq, self.cutoff, self.k);
        let h = self.cutoff as i64;
        for k in -h..=h {
            let v = out.get(k) * Complex64::new(0.0, 6.0 * PI * k as f64);
            out.set(k, v);
        }
        out
    }
}

/// `(2 pi k)^3`.
fn dispersion(k: i64) -> f64 {
    (2.0 * PI * k as f64).powi(3)
}

fn phase_mul(u: &FourierSeq, factors: &[Complex64]) -> FourierSeq {
    let h = u.half_range() as i64;
    FourierSeq::from_fn(u.half_range(), |k| factors[(k + h) as usize] * u.get(k))
}

fn symmetrize(u: &mut FourierSeq) {
    let h = u.half_range() as i64;
    for k in 1..=h {
        let avg = (u.get(k) + u.get(-k).conj()) * 0.5;
        u.set(k, avg);
        u.set(-k, avg.conj());
    }
    let m = u.get(0);
    u.set(0, Complex64::new(m.re, 0.0));
}

/// `0.5 / (2 pi K_d (1 + 6 ||u||_inf))`: the step at which the nonlinear
/// rate times `dt` stays near one half. The linear part is integrated
/// exactly and does not constrain the step.
pub fn default_dt(u: &PdeState) -> f64 {
    let sup: f64 = u
        .grid_values((3 * u.k() + 1).next_power_of_two())
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    0.5 / (2.0 * PI * u.dealias_cutoff.max(1) as f64 * (1.0 + 6.0 * sup))
}

/// Integrating-factor RK4 from `u0.t` to `t_end` (either direction), with
/// `ceil(|t_end - t| / dt)` equal steps.
pub fn evolve_kdv(u0: &PdeState, t_end: f64) -> Result<PdeState> {
    let span = t_end - u0.t;
    if span == 0.0 {
        return Ok(u0.clone());
    }
    let dt0 = u0.dt.unwrap_or_else(|| default_dt(u0));
    if !(dt0 > 0.0) || !dt0.is_finite() {
        return Err(HillError::Precondition(format!("time step {dt0} must be positive")));
    }
    let steps = (span.abs() / dt0).ceil().max(1.0) as usize;
    let dt = span / steps as f64;
    let k = u0.k();
    let h = k as i64;
    let half: Vec<Complex64> = (-h..=h).map(|j| unit_phase(dispersion(j), dt / 2.0)).collect();
    let full: Vec<Complex64> = half.iter().map(|e| e * e).collect();
    let nl = Nonlinearity::new(k, u0.dealias_cutoff.min(k));
    let real = u0.is_real(0.0);
    let start_norm = u0.u_hat.sup_abs().max(f64::MIN_POSITIVE);

    let mut u = u0.u_hat.clone();
    for step in 0..steps {
        let a = nl.eval(&u).scale(Complex64::new(dt, 0.0));
        let eu = phase_mul(&u, &half);
        let b = nl
            .eval(&phase_mul(&u.axpy(Complex64::new(0.5, 0.0), &a), &half))
            .scale(Complex64::new(dt, 0.0));
        let c = nl.eval(&eu.axpy(Complex64::new(0.5, 0.0), &b)).scale(Complex64::new(dt, 0.0));
        let d = nl
            .eval(&phase_mul(&u, &full).add(&phase_mul(&c, &half)))
            .scale(Complex64::new(dt, 0.0));
        let incr = phase_mul(&a, &full)
            .add(&phase_mul(&b.add(&c), &half).scale(Complex64::new(2.0, 0.0)))
            .add(&d)
            .scale(Complex64::new(1.0 / 6.0, 0.0));
        u = phase_mul(&u, &full).add(&incr);
        if real {
            symmetrize(&mut u);
        }
        let size = u.sup_abs();
        if !size.is_finite() || size > 1e6 * start_norm {
            return Err(HillError::Instability {
                t: u0.t + dt * (step + 1) as f64,
                norm: size,
            });
        }
    }
    Ok(PdeState {
        u_hat: u,
        t: t_end,
        dt: Some(dt.abs()),
        dealias_cutoff: u0.dealias_cutoff,
    })
}

/// Result of a step-halving sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedRun {
    pub state: PdeState,
    /// Step sizes used, coarsest first.
    pub dts: Vec<f64>,
    /// Sup distance between consecutive refinements.
    pub differences: Vec<f64>,
}

/// Halves `dt` from the default until two consecutive runs agree to
/// `tol * ||u0||_sup` in every coefficient, at most `max_halvings` times.
pub fn evolve_kdv_refined(u0: &PdeState, t_end: f64, tol: f64, max_halvings: usize) -> Result<RefinedRun> {
    let mut dt = u0.dt.unwrap_or_else(|| default_dt(u0)).min((t_end - u0.t).abs().max(f64::MIN_POSITIVE));
    let scale = u0.u_hat.sup_abs().max(f64::MIN_POSITIVE);
    let mut prev = evolve_kdv(&u0.clone().with_dt(dt), t_end)?;
    let mut dts = vec![dt];
    let mut differences = Vec::new();
    for _ in 0..max_halvings {
        dt /= 2.0;
        let next = evolve_kdv(&u0.clone().with_dt(dt), t_end)?;
        let diff = next.u_hat.max_abs_diff(&prev.u_hat);
        dts.push(dt);
        differences.push(diff);
        prev = next;
        if diff <= tol * scale {
            break;
        }
    }
    Ok(RefinedRun {
        state: prev,
        dts,
        differences,
    })
}

/// Exact Airy evolution `u_hat(k) -> e^{i (2 pi k)^3 t} u_hat(k)`.
pub fn evolve_airy(u0: &PdeState, t: f64) -> PdeState {
    let h = u0.k() as i64;
    let factors: Vec<Complex64> = (-h..=h).map(|k| unit_phase(dispersion(k), t)).collect();
    PdeState {
        u_hat: phase_mul(&u0.u_hat, &factors),
        t: u0.t + t,
        dt: u0.dt,
        dealias_cutoff: u0.dealias_cutoff,
    }
}

/// Mean, `L^2` norm squared, and `H = int (u_x^2 / 2 + u^3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conserved {
    pub mean: Complex64,
    pub l2: f64,
    pub hamiltonian: Complex64,
}

pub fn conserved(u: &PdeState) -> Conserved {
    let h = u.k() as i64;
    let mut l2 = 0.0;
    let mut quad = 0.0;
    for k in -h..=h {
        let a = u.u_hat.get(k).norm_sqr();
        l2 += a;
        quad += 0.5 * (2.0 * PI * k as f64).powi(2) * a;
    }
    let n = 3 * u.k() + 1;
    let vals = u.grid_values(n);
    let cubic = vals.iter().map(|v| v * v * v).sum::<Complex64>() / n as f64;
    Conserved {
        mean: u.u_hat.get(0),
        l2,
        hamiltonian: cubic + quad,
    }
}

/// One row of the isospectrality report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub n: usize,
    pub lambda_minus_drift: f64,
    pub lambda_plus_drift: f64,
    pub gamma_drift: f64,
    /// `|mu_n(t) - mu_n(0)|`; Dirichlet eigenvalues are not invariant.
    pub mu_motion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub t: f64,
    pub rows: Vec<DriftRow>,
    pub lambda_zero_drift: f64,
    pub max_periodic_drift: f64,
    pub hamiltonian_drift: f64,
    pub l2_drift: f64,
    /// Sup distance of the backward-evolved state from the initial one.
    pub backward_error: f64,
    pub dt: f64,
}

/// Evolves `q0` to `t` with step refinement, compares periodic and
/// Dirichlet spectra at both ends for `n <= n_report` (capped by the trust
/// count of `K_spec`), and evolves back to measure reversibility.
pub fn isospectral_check(q0: &Potential, t: f64, k_pde: usize, k_spec: usize, n_report: usize) -> Result<DriftReport> {
    let mut seq = q0.seq().resized(2 * k_pde);
    seq = seq.plain();
    let u0 = from_potential(&Potential::new(seq)?);
    let run = evolve_kdv_refined(&u0, t, 1e-12, 14)?;
    let u1 = run.state;
    let dt = *run.dts.last().unwrap_or(&0.0);
    let back = evolve_kdv(&PdeState { dt: Some(dt), ..u1.clone() }, 0.0)?;
    let q1 = to_potential(&u1)?;
    let qa = to_potential(&u0)?;
    let s0 = periodic_spectrum(&qa, k_spec)?;
    let s1 = periodic_spectrum(&q1, k_spec)?;
    let d0 = dirichlet_spectrum(&qa, k_spec)?;
    let d1 = dirichlet_spectrum(&q1, k_spec)?;
    let n_top = n_report.min(s0.trust_count);
    let mut rows = Vec::with_capacity(n_top);
    let mut max_drift = (s1.lambda_zero() - s0.lambda_zero()).norm();
    for n in 1..=n_top {
        let dm = (s1.lambda_minus(n) - s0.lambda_minus(n)).norm();
        let dp = (s1.lambda_plus(n) - s0.lambda_plus(n)).norm();
        let g0 = s0.lambda_plus(n) - s0.lambda_minus(n);
        let g1 = s1.lambda_plus(n) - s1.lambda_minus(n);
        let mu = match (d0.mu(n), d1.mu(n)) {
            (Some(a), Some(b)) => (b - a).norm(),
            _ => f64::NAN,
        };
        max_drift = max_drift.max(dm).max(dp);
        rows.push(DriftRow {
            n,
            lambda_minus_drift: dm,
            lambda_plus_drift: dp,
            gamma_drift: (g1 - g0).norm(),
            mu_motion: mu,
        });
    }
    let c0 = conserved(&u0);
    let c1 = conserved(&u1);
    let rel = |a: f64, b: f64| if a == 0.0 { b.abs() } else { (b - a).abs() / a.abs() };
    Ok(DriftReport {
        t,
        rows,
        lambda_zero_drift: (s1.lambda_zero() - s0.lambda_zero()).norm(),
        max_periodic_drift: max_drift,
        hamiltonian_drift: if c0.hamiltonian.norm() == 0.0 {
            c1.hamiltonian.norm()
        } else {
            (c1.hamiltonian - c0.hamiltonian).norm() / c0.hamiltonian.norm()
        },
        l2_drift: rel(c0.l2, c1.l2),
        backward_error: back.u_hat.max_abs_diff(&u0.u_hat),
        dt,
    })
}

/// Distances of the Airy orbit from its starting point at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AiryPoint {
    pub t: f64,
    /// `sup_n <n>^s |u_hat(t, n) - u_hat(0, n)|`.
    pub sup_distance: f64,
    /// `<n>^s |u_hat(t, n) - u_hat(0, n)|` for each tracked mode.
    pub components: Vec<f64>,
}

impl AiryPoint {
    pub fn max_component(&self) -> f64 {
        self.components.iter().copied().fold(0.0, f64::max)
    }
}

/// The data `u_hat(+-n) = amp <n>^{-s}` for `1 <= n <= n_max`, whose
/// weighted sup norm equals `amp`.
pub fn saturating_data(amp: f64, s: f64, n_max: usize) -> PdeState {
    PdeState::new(FourierSeq::from_fn(n_max, |n| {
        if n == 0 {
            ZERO
        } else {
            Complex64::new(amp * bracket(n).powf(-s), 0.0)
        }
    }))
}

/// The Airy orbit of `u0` sampled at `times`: the weighted sup distance
/// from `u0`, which stays bounded below, and the distances of the modes in
/// `tracked`, which vanish linearly in `t`.
pub fn airy_demo(u0: &PdeState, s: f64, times: &[f64], tracked: &[i64]) -> Vec<AiryPoint> {
    let h = u0.k() as i64;
    times
        .iter()
        .map(|&t| {
            let ut = evolve_airy(u0, t);
            let dist = |k: i64| bracket(k).powf(s) * (ut.u_hat.get(k) - u0.u_hat.get(k)).norm();
            AiryPoint {
                t,
                sup_distance: (-h..=h).map(dist).fold(0.0, f64::max),
                components: tracked.iter().map(|&k| dist(k)).collect(),
            }
        })
        .collect()
}

/// Least-squares slope and intercept of `log y` against `log x`.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
