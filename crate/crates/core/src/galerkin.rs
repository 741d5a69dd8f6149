//! Dense Fourier-Galerkin eigensolvers used as the reference oracle.
//!
//! The periodic matrix `M[k,l] = (k pi)^2 delta_kl + q_{k-l}` on
//! `|k|, |l| <= K` never couples modes of different parity because the
//! potential only carries even modes, so it is assembled and diagonalized as
//! two independent blocks (the periodic and antiperiodic problems on
//! [0,1]). The Dirichlet problem uses the sine basis on [0,1].

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{HillError, Result};
use crate::operator::{dirichlet_cos_coeffs, symbol, BoundaryCondition, Potential};
use crate::reduction::constants::{estimate_c_s, thresholds};
use crate::seq::{bracket, norm, tail, FourierSeq, Weight};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Smallest admissible truncation.
pub const MIN_K: usize = 16;

/// Periodic and Dirichlet eigenvalues of a truncated Hill operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// `lambda_0^+ <= lambda_1^- <= lambda_1^+ <= ...` in lexicographic order.
    pub periodic: Vec<Complex64>,
    /// `mu_1 <= mu_2 <= ...` in lexicographic order.
    pub dirichlet: Option<Vec<Complex64>>,
    /// Largest `n` for which `lambda_n^+-` and `mu_n` are trusted.
    pub trust_count: usize,
    /// Galerkin half range.
    pub k: usize,
}

impl SpectrumResult {
    pub fn lambda_zero(&self) -> Complex64 {
        self.periodic[0]
    }

    /// `lambda_n^-` for `n >= 1`.
    pub fn lambda_minus(&self, n: usize) -> Complex64 {
        self.periodic[2 * n - 1]
    }

    /// `lambda_n^+` for `n >= 1`.
    pub fn lambda_plus(&self, n: usize) -> Complex64 {
        self.periodic[2 * n]
    }

    /// `mu_n` for `n >= 1`, if the Dirichlet part was computed.
    pub fn mu(&self, n: usize) -> Option<Complex64> {
        self.dirichlet.as_ref().map(|d| d[n - 1])
    }
}

/// Gap lengths, midpoints and midpoint-to-Dirichlet offsets for
/// `n = 1..=trust_count`; entry `i` belongs to `n = i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapTable {
    pub gamma: Vec<Complex64>,
    pub tau: Vec<Complex64>,
    pub tau_minus_mu: Option<Vec<Complex64>>,
}

/// Largest `n` with `n^2 pi^2 + 12 n < ((K-2) pi)^2 / 4`.
pub fn trust_count(k: usize) -> usize {
    let bound = symbol(k as i64 - 2) / 4.0;
    let mut n = 0usize;
    while {
        let m = (n + 1) as f64;
        m * m * PI * PI + 12.0 * m < bound
    } {
        n += 1;
    }
    n
}

/// Sorts by real part, treating real parts within
/// `1e-10 max(1, |Re|)` as tied and ordering ties by imaginary part.
pub fn lex_sort(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re));
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() {
            let band = 1e-10 * values[end - 1].re.abs().max(1.0);
            if values[end].re - values[end - 1].re > band {
                break;
            }
            end += 1;
        }
        values[start..end].sort_by(|a, b| a.im.total_cmp(&b.im));
        start = end;
    }
}

fn check_truncation(q: &Potential, k: usize) -> Result<()> {
    if k < MIN_K {
        return Err(HillError::TruncationTooSmall {
            k,
            reason: format!("need K >= {MIN_K}"),
        });
    }
    if q.band() > 2 * k {
        return Err(HillError::TruncationTooSmall {
            k,
            reason: format!("potential band {} exceeds 2K", q.band()),
        });
    }
    Ok(())
}

/// Modes `|k| <= K` of one parity block, ascending.
pub fn block_modes(k: usize, bc: BoundaryCondition) -> Vec<i64> {
    let h = k as i64;
    (-h..=h).filter(|&j| bc.selects(j)).collect()
}

/// The periodic Galerkin matrix restricted to one parity block.
pub fn periodic_block(q: &Potential, k: usize, bc: BoundaryCondition) -> (Vec<i64>, DMatrix<Complex64>) {
    let modes = block_modes(k, bc);
    let d = modes.len();
    let m = DMatrix::from_fn(d, d, |i, j| {
        let v = q.coeff(modes[i] - modes[j]);
        if i == j {
            v + symbol(modes[i])
        } else {
            v
        }
    });
    (modes, m)
}

/// Whether the potential has real, even coefficients, so the blocks are
/// real symmetric.
fn real_symmetric(q: &Potential) -> bool {
    q.is_real() && q.seq().iter().all(|(_, c)| c.im == 0.0)
}

fn eigenvalues_of(m: DMatrix<Complex64>, hermitian: bool, real: bool) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    if real {
        let mr = m.map(|c| c.re);
        let eig = SymmetricEigen::try_new(mr, f64::EPSILON, 0)
            .ok_or_else(|| HillError::Eigensolver("symmetric QR did not converge".into()))?;
        Ok(eig.eigenvalues.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    } else if hermitian {
        let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0)
            .ok_or_else(|| HillError::Eigensolver("Hermitian QR did not converge".into()))?;
        Ok(eig.eigenvalues.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    } else {
        let schur = Schur::try_new(m, f64::EPSILON, 0)
            .ok_or_else(|| HillError::Eigensolver("Schur iteration did not converge".into()))?;
        let (_, t) = schur.unpack();
        Ok(t.diagonal().iter().cloned().collect())
    }
}

/// Periodic spectrum of `-d^2/dx^2 + q` on R/2Z, truncated at `|k| <= K`.
pub fn periodic_spectrum(q: &Potential, k: usize) -> Result<SpectrumResult> {
    check_truncation(q, k)?;
    let real = real_symmetric(q);
    let mut all = Vec::with_capacity(2 * k + 1);
    for bc in [BoundaryCondition::PerPlus, BoundaryCondition::PerMinus] {
        let (_, m) = periodic_block(q, k, bc);
        all.extend(eigenvalues_of(m, q.is_real(), real)?);
    }
    lex_sort(&mut all);
    Ok(SpectrumResult {
        periodic: all,
        dirichlet: None,
        trust_count: trust_count(k),
        k,
    })
}

/// The Dirichlet matrix `D[m,n] = (m pi)^2 delta_mn + q^cos_{m-n} - q^cos_{m+n}`.
pub fn dirichlet_matrix(q: &Potential, k: usize) -> DMatrix<Complex64> {
    let cc = dirichlet_cos_coeffs(q, k);
    DMatrix::from_fn(k, k, |i, j| {
        let (m, n) = (i as i64 + 1, j as i64 + 1);
        let v = cc.get(m - n) - cc.get(m + n);
        if i == j {
            v + symbol(m)
        } else {
            v
        }
    })
}

/// Dirichlet spectrum on [0,1] in the sine basis `sin(m pi x)`, `1 <= m <= K`.
pub fn dirichlet_spectrum(q: &Potential, k: usize) -> Result<SpectrumResult> {
    check_truncation(q, k)?;
    let d = dirichlet_matrix(q, k);
    let real = q.is_real();
    let mut mu = eigenvalues_of(d, real, real)?;
    lex_sort(&mut mu);
    Ok(SpectrumResult {
        periodic: Vec::new(),
        dirichlet: Some(mu),
        trust_count: trust_count(k),
        k,
    })
}

/// Periodic and Dirichlet spectra together.
pub fn full_spectrum(q: &Potential, k: usize) -> Result<SpectrumResult> {
    let mut spec = periodic_spectrum(q, k)?;
    spec.dirichlet = dirichlet_spectrum(q, k)?.dirichlet;
    Ok(spec)
}

pub fn gaps_and_midpoints(spec: &SpectrumResult) -> GapTable {
    let n_max = spec.trust_count.min(spec.periodic.len().saturating_sub(1) / 2);
    let gamma = (1..=n_max)
        .map(|n| spec.lambda_plus(n) - spec.lambda_minus(n))
        .collect();
    let tau: Vec<Complex64> = (1..=n_max)
        .map(|n| (spec.lambda_plus(n) + spec.lambda_minus(n)) * 0.5)
        .collect();
    let tau_minus_mu = spec.dirichlet.as_ref().map(|d| {
        tau.iter()
            .enumerate()
            .take(d.len())
            .map(|(i, t)| t - d[i])
            .collect()
    });
    GapTable {
        gamma,
        tau,
        tau_minus_mu,
    }
}

/// Nearest-neighbour matching of `a` against `b`: for each value of `a`, the
/// distance to the closest value of `b`.
pub fn match_distances(a: &[Complex64], b: &[Complex64]) -> Vec<f64> {
    a.iter()
        .map(|x| b.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
        .collect()
}

/// An eigenvalue/eigenvector pair of the periodic problem computed by
/// inverse iteration in the parity block of `n`, starting from the shift
/// `lambda`.
pub fn periodic_eigenpair(
    q: &Potential,
    k: usize,
    n: usize,
    lambda: Complex64,
) -> Result<(Complex64, FourierSeq)> {
    check_truncation(q, k)?;
    let bc = BoundaryCondition::for_index(n);
    let (modes, m) = periodic_block(q, k, bc);
    let d = modes.len();
    let scale = 1.0 + lambda.norm();
    let shift = lambda + Complex64::new(1e-11 * scale, 1e-11 * scale);
    let mut a = m.clone();
    for i in 0..d {
        a[(i, i)] -= shift;
    }
    let lu = a.lu();
    let mut x = DVector::from_fn(d, |i, _| {
        if modes[i].abs() == n as i64 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(1e-3, 0.0)
        }
    });
    for _ in 0..6 {
        let y = lu
            .solve(&x)
            .ok_or_else(|| HillError::Eigensolver("singular shifted block".into()))?;
        let nrm = y.norm();
        x = y / Complex64::new(nrm, 0.0);
    }
    let mx = &m * &x;
    let rayleigh = x.dotc(&mx);
    let h = k as i64;
    let f = FourierSeq::from_fn(k, |j| match modes.binary_search(&j) {
        Ok(i) => x[i],
        Err(_) => ZERO,
    });
    debug_assert_eq!(f.half_range() as i64, h);
    Ok((rayleigh, f))
}

/// A Riesz projector computed by contour quadrature.
#[derive(Debug, Clone)]
pub struct RieszProjector {
    pub n: usize,
    pub k: usize,
    /// `(2K+1) x (2K+1)` matrix in the mode order `-K..=K`.
    pub matrix: DMatrix<Complex64>,
    pub quad_points: usize,
    /// Frobenius norm of `R^2 - R`.
    pub idempotency_residual: f64,
    pub trace: Complex64,
}

impl RieszProjector {
    /// Applies the projector to a sequence on the same truncation.
    pub fn apply(&self, f: &FourierSeq) -> FourierSeq {
        let h = self.k as i64;
        let v = DVector::from_fn(2 * self.k + 1, |i, _| f.get(i as i64 - h));
        let out = &self.matrix * v;
        FourierSeq::from_fn(self.k, |j| out[(j + h) as usize])
    }
}

/// `P_{n,q} = (2 pi i)^{-1} oint_{|lambda - n^2 pi^2| = n} (lambda - L(q))^{-1} d lambda`
/// by the trapezoidal rule on `quad_points` nodes, doubled until
/// `||R^2 - R|| < 1e-6`.
pub fn riesz_projector(q: &Potential, n: usize, k: usize, quad_points: usize) -> Result<RieszProjector> {
    check_truncation(q, k)?;
    if n == 0 || n as i64 > k as i64 - 2 {
        return Err(HillError::Precondition(format!(
            "projector index n = {n} must satisfy 1 <= n <= K - 2"
        )));
    }
    let center = symbol(n as i64);
    let radius = n as f64;
    let bc = BoundaryCondition::for_index(n);
    let (modes, m) = periodic_block(q, k, bc);
    let eig = eigenvalues_of(m.clone(), q.is_real(), real_symmetric(q))?;
    let inside = eig.iter().filter(|l| (*l - center).norm() < radius).count();
    let closest = eig
        .iter()
        .map(|l| ((*l - center).norm() - radius).abs())
        .fold(f64::INFINITY, f64::min);
    if inside != 2 || closest < 0.02 * radius {
        return Err(HillError::Separation {
            center,
            radius,
            reason: format!("{inside} eigenvalues inside, closest distance to the circle {closest:.3e}"),
        });
    }
    let d = modes.len();
    let mut points = quad_points.max(8);
    loop {
        let mut block = DMatrix::<Complex64>::zeros(d, d);
        for j in 0..points {
            let theta = 2.0 * PI * (j as f64 + 0.5) / points as f64;
            let dz = Complex64::from_polar(radius, theta);
            let lambda = center + dz;
            let mut a = -m.clone();
            for i in 0..d {
                a[(i, i)] += lambda;
            }
            let inv = a
                .lu()
                .try_inverse()
                .ok_or_else(|| HillError::Eigensolver("singular resolvent on contour".into()))?;
            block += inv * (dz / points as f64);
        }
        let resid = (&block * &block - &block).norm();
        if resid < 1e-6 || points >= 4096 {
            let size = 2 * k + 1;
            let h = k as i64;
            let mut full = DMatrix::<Complex64>::zeros(size, size);
            for (a, ka) in modes.iter().enumerate() {
                for (b, kb) in modes.iter().enumerate() {
                    full[((ka + h) as usize, (kb + h) as usize)] = block[(a, b)];
                }
            }
            let trace = block.trace();
            if resid >= 1e-6 {
                return Err(HillError::Separation {
                    center,
                    radius,
                    reason: format!("quadrature stalled with idempotency residual {resid:.3e}"),
                });
            }
            return Ok(RieszProjector {
                n,
                k,
                matrix: full,
                quad_points: points,
                idempotency_residual: resid,
                trace,
            });
        }
        points *= 2;
    }
}

/// The unperturbed projector `P_n` onto `span{e_n, e_-n}`.
pub fn free_projector(n: usize, k: usize) -> DMatrix<Complex64> {
    let size = 2 * k + 1;
    let h = k as i64;
    let mut p = DMatrix::<Complex64>::zeros(size, size);
    for j in [n as i64, -(n as i64)] {
        let i = (j + h) as usize;
        p[(i, i)] = Complex64::new(1.0, 0.0);
    }
    p
}

/// `||D||_{L^2 -> L^inf}` on R/2Z for a matrix `D` acting on Fourier
/// coefficients, with `||f||_{L^2}^2 = sum |f_k|^2`. Evaluated as
/// `sup_x ||(sum_k D_kl e_k(x))_l||_2` on a uniform grid of at least
/// `8K` points.
pub fn l2_to_linf_norm(d: &DMatrix<Complex64>, k: usize) -> f64 {
    let size = 2 * k + 1;
    let grid = (4 * size).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(grid);
    let mut power = vec![0.0f64; grid];
    let h = k as i64;
    let mut buf = vec![ZERO; grid];
    for l in 0..size {
        let col = d.column(l);
        if col.iter().all(|c| *c == ZERO) {
            continue;
        }
        buf.iter_mut().for_each(|b| *b = ZERO);
        // e_k(x_j) = exp(i pi k x_j) with x_j = 2j/grid, so index k maps to
        // the DFT bin k mod grid.
        for (i, c) in col.iter().enumerate() {
            let kk = i as i64 - h;
            buf[kk.rem_euclid(grid as i64) as usize] += *c;
        }
        fft.process(&mut buf);
        for (p, v) in power.iter_mut().zip(buf.iter()) {
            *p += v.norm_sqr();
        }
    }
    power.into_iter().fold(0.0, f64::max).sqrt()
}

/// Operator 2-norm of `D` on Fourier coefficients (the `L^2 -> L^2` norm).
pub fn l2_operator_norm(d: &DMatrix<Complex64>) -> f64 {
    let gram = d.adjoint() * d;
    let eig = SymmetricEigen::new(gram);
    eig.eigenvalues.iter().cloned().fold(0.0, f64::max).sqrt()
}

/// `||P_{n,q} - P_n||_{L^2 -> L^inf}` for each `n` in `ns`.
pub fn projector_trend(q: &Potential, ns: &[usize], k: usize, quad_points: usize) -> Result<Vec<(usize, f64)>> {
    ns.iter()
        .map(|&n| {
            let p = riesz_projector(q, n, k, quad_points)?;
            Ok((n, l2_to_linf_norm(&(p.matrix - free_projector(n, k)), k)))
        })
        .collect()
}

/// One truncation level of [`verify_decay`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub k: usize,
    pub trust_count: usize,
    /// `sup_n w_{2n} <2n>^s |gamma_n|`.
    pub gamma_sup: f64,
    /// `sup_n w_{2n} <2n>^s |tau_n - mu_n|`.
    pub tau_mu_sup: f64,
    /// Tail bound check at `N = n_s`.
    pub gm_est: GmEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmEstimate {
    pub n: usize,
    /// `sup_{N <= n <= trust} w_{2n} <2n>^s |gamma_n|`.
    pub lhs: f64,
    /// `4 ||R_{2N} q||_{w,s,inf} + 16 c_s N^{-(1/2-|s|)} ||q||^2_{w,s,inf}`.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    /// Relative change of the sups between the last two truncations.
    pub gamma_change: f64,
    pub tau_mu_change: f64,
    pub q_norm: f64,
}

impl DecayReport {
    pub fn stable_within(&self, rel: f64) -> bool {
        self.gamma_change <= rel && self.tau_mu_change <= rel
    }
}

fn rel_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Weighted sups of gap lengths and midpoint offsets across truncations.
pub fn verify_decay(q: &Potential, w: &Weight, s: f64, k_list: &[usize]) -> Result<DecayReport> {
    let q_norm = q.norm(w, s);
    let c_s = estimate_c_s(s).value;
    let th = thresholds(q_norm, s, q_norm.max(f64::MIN_POSITIVE), c_s, c_s);
    let n_s = th.n_s;
    let tail_norm = norm(&tail(q.seq(), 2 * n_s), w, s, f64::INFINITY);
    let beta = 0.5 - s.abs();
    let rhs = 4.0 * tail_norm + 16.0 * c_s * (n_s as f64).powf(-beta) * q_norm * q_norm;
    let mut rows = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let spec = full_spectrum(q, k)?;
        let gaps = gaps_and_midpoints(&spec);
        let weight = |n: usize| {
            let j = 2 * n as i64;
            w.value(j) * bracket(j).powf(s)
        };
        let mut gamma_sup = 0.0f64;
        let mut tau_mu_sup = 0.0f64;
        let mut lhs = 0.0f64;
        let tmm = gaps.tau_minus_mu.as_ref().expect("dirichlet part computed");
        for (i, g) in gaps.gamma.iter().enumerate() {
            let n = i + 1;
            let wg = weight(n) * g.norm();
            gamma_sup = gamma_sup.max(wg);
            tau_mu_sup = tau_mu_sup.max(weight(n) * tmm[i].norm());
            if n >= n_s {
                lhs = lhs.max(wg);
            }
        }
        rows.push(DecayRow {
            k,
            trust_count: spec.trust_count,
            gamma_sup,
            tau_mu_sup,
            gm_est: GmEstimate {
                n: n_s,
                lhs,
                rhs,
                holds: lhs <= rhs,
            },
        });
    }
    let (gamma_change, tau_mu_change) = match rows.len() {
        0 | 1 => (0.0, 0.0),
        r => (
            rel_change(rows[r - 2].gamma_sup, rows[r - 1].gamma_sup),
            rel_change(rows[r - 2].tau_mu_sup, rows[r - 1].tau_mu_sup),
        ),
    };
    Ok(DecayReport {
        rows,
        gamma_change,
        tau_mu_change,
        q_norm,
    })
}
