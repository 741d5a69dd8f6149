//! Weighted sequence spaces on Z.
//!
//! A [`FourierSeq`] stores the coefficients `f_k`, `|k| <= K`, of a function on
//! R/2Z in the basis `e_k(x) = exp(i pi k x)`. Norms are the weighted
//! Fourier-Lebesgue norms `(sum w_k^p <k>^{sp} |f_k|^p)^{1/p}` with
//! `<k> = 1 + |k|`, summed in the fixed order `0, 1, -1, 2, -2, ...` so that
//! repeated runs agree bit for bit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HillError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The bracket `<n> = 1 + |n|`.
#[inline]
pub fn bracket(n: i64) -> f64 {
    1.0 + n.unsigned_abs() as f64
}

/// A weight from the class of normalized, symmetric, monotone and
/// submultiplicative weights, stored as a closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weight {
    /// `w_n = 1`.
    Trivial,
    /// `w_n = <n>^a` with `a >= 0`.
    Polynomial { a: f64 },
    /// `w_n = min(base_n, exp(eps |n|))`.
    Capped { base: Box<Weight>, eps: f64 },
}

impl Default for Weight {
    fn default() -> Self {
        Weight::Trivial
    }
}

impl Weight {
    pub fn polynomial(a: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(HillError::InvalidWeight(format!(
                "polynomial exponent must be finite and nonnegative, got {a}"
            )));
        }
        Ok(Weight::Polynomial { a })
    }

    /// Evaluates `w_n`.
    pub fn value(&self, n: i64) -> f64 {
        match self {
            Weight::Trivial => 1.0,
            Weight::Polynomial { a } => {
                if *a == 0.0 {
                    1.0
                } else {
                    bracket(n).powf(*a)
                }
            }
            Weight::Capped { base, eps } => {
                let cap = (eps * n.unsigned_abs() as f64).exp();
                base.value(n).min(cap)
            }
        }
    }

    /// Checks the weight invariants on all indices and pairs with
    /// `|n|, |m| <= range`.
    pub fn validate(&self, range: i64) -> Result<()> {
        let vals: Vec<f64> = (0..=2 * range).map(|n| self.value(n)).collect();
        if (vals[0] - 1.0).abs() > 1e-12 {
            return Err(HillError::InvalidWeight(format!(
                "not normalized: w_0 = {}",
                vals[0]
            )));
        }
        for n in 1..=2 * range {
            let w = vals[n as usize];
            if !(w >= 1.0) || !w.is_finite() {
                return Err(HillError::InvalidWeight(format!("w_{n} = {w} < 1")));
            }
            if (self.value(-n) - w).abs() > 1e-12 * w {
                return Err(HillError::InvalidWeight(format!("w_{{-{n}}} != w_{n}")));
            }
            if w < vals[n as usize - 1] * (1.0 - 1e-14) {
                return Err(HillError::InvalidWeight(format!(
                    "not monotone at n = {n}"
                )));
            }
        }
        // Symmetry and monotonicity reduce the pair check to |n + m| with
        // n, m >= 0 and the mixed-sign case |n - m|, which is dominated.
        for n in 0..=range {
            for m in n..=range {
                let lhs = vals[(n + m) as usize];
                let rhs = vals[n as usize] * vals[m as usize];
                if lhs > rhs * (1.0 + 1e-12) {
                    return Err(HillError::InvalidWeight(format!(
                        "submultiplicativity fails: w_{} = {lhs} > w_{n} w_{m} = {rhs}",
                        n + m
                    )));
                }
            }
        }
        Ok(())
    }

    /// First index `n >= 1` at which the cap `exp(eps n)` of a capped weight
    /// reaches the base weight, scanning up to `scan_max`.
    pub fn cap_crossover(&self, scan_max: i64) -> Option<i64> {
        match self {
            Weight::Capped { base, eps } => {
                (1..=scan_max).find(|&n| (eps * n as f64).exp() >= base.value(n))
            }
            _ => None,
        }
    }
}

/// Returns `w^eps` with `w^eps_n = min(w_n, exp(eps |n|))`, validated on
/// indices up to 512.
pub fn cap_weight(w: &Weight, eps: f64) -> Result<Weight> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(HillError::InvalidWeight(format!(
            "cap exponent must be positive, got {eps}"
        )));
    }
    let capped = Weight::Capped {
        base: Box::new(w.clone()),
        eps,
    };
    capped.validate(512)?;
    Ok(capped)
}

/// Fourier coefficients `f_k`, `|k| <= half_range`, with structural flags.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeq {
    half_range: usize,
    coeffs: Vec<Complex64>,
    real: bool,
    zero_mean: bool,
    one_periodic: bool,
}

impl FourierSeq {
    pub fn zeros(half_range: usize) -> Self {
        FourierSeq {
            half_range,
            coeffs: vec![ZERO; 2 * half_range + 1],
            real: false,
            zero_mean: false,
            one_periodic: false,
        }
    }

    /// Unit mass at index `k`.
    pub fn unit(half_range: usize, k: i64) -> Self {
        let mut f = Self::zeros(half_range);
        f.set(k, Complex64::new(1.0, 0.0));
        f
    }

    /// Builds a sequence from `(k, value)` pairs; later pairs overwrite
    /// earlier ones. Panics if an index exceeds `half_range`.
    pub fn from_pairs<I>(half_range: usize, pairs: I) -> Self
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        let mut f = Self::zeros(half_range);
        for (k, v) in pairs {
            f.set(k, v);
        }
        f
    }

    /// Builds a sequence with `f_k = g(k)`.
    pub fn from_fn(half_range: usize, mut g: impl FnMut(i64) -> Complex64) -> Self {
        let h = half_range as i64;
        let mut f = Self::zeros(half_range);
        for k in -h..=h {
            f.coeffs[(k + h) as usize] = g(k);
        }
        f
    }

    /// Sets the structural flags after checking that the coefficients
    /// satisfy them.
    pub fn with_flags(mut self, real: bool, zero_mean: bool, one_periodic: bool) -> Result<Self> {
        self.real = real;
        self.zero_mean = zero_mean;
        self.one_periodic = one_periodic;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.half_range as i64;
        if self.coeffs.len() != 2 * self.half_range + 1 {
            return Err(HillError::InvalidSequence("coefficient length mismatch".into()));
        }
        if self.coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(HillError::InvalidSequence("non-finite coefficient".into()));
        }
        if self.zero_mean && self.get(0) != ZERO {
            return Err(HillError::InvalidSequence(format!(
                "zero-mean flag set but f_0 = {}",
                self.get(0)
            )));
        }
        if self.one_periodic {
            if let Some(k) = (-h..=h).find(|k| k.rem_euclid(2) == 1 && self.get(*k) != ZERO) {
                return Err(HillError::InvalidSequence(format!(
                    "one-periodic flag set but f_{k} = {}",
                    self.get(k)
                )));
            }
        }
        if self.real {
            let scale = self.sup_abs().max(1.0);
            for k in 0..=h {
                let d = (self.get(-k) - self.get(k).conj()).norm();
                if d > 1e-12 * scale {
                    return Err(HillError::InvalidSequence(format!(
                        "real flag set but f_{{-{k}}} != conj(f_{k}) (mismatch {d:e})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn half_range(&self) -> usize {
        self.half_range
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn is_zero_mean(&self) -> bool {
        self.zero_mean
    }

    pub fn is_one_periodic(&self) -> bool {
        self.one_periodic
    }

    /// Coefficient `f_k`, zero outside the stored range.
    #[inline]
    pub fn get(&self, k: i64) -> Complex64 {
        let h = self.half_range as i64;
        if k < -h || k > h {
            ZERO
        } else {
            self.coeffs[(k + h) as usize]
        }
    }

    /// Sets `f_k`. Panics if `|k| > half_range`.
    #[inline]
    pub fn set(&mut self, k: i64, v: Complex64) {
        let h = self.half_range as i64;
        assert!(k.abs() <= h, "index {k} outside half range {h}");
        self.coeffs[(k + h) as usize] = v;
    }

    /// Raw coefficients ordered from `-K` to `K`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Iterates `(k, f_k)` with `k` ascending.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let h = self.half_range as i64;
        self.coeffs.iter().enumerate().map(move |(i, c)| (i as i64 - h, *c))
    }

    /// Indices and values of the nonzero coefficients, `k` ascending.
    pub fn nonzeros(&self) -> Vec<(i64, Complex64)> {
        self.iter().filter(|(_, c)| *c != ZERO).collect()
    }

    /// Copy with a different half range (truncating or zero padding). Flags
    /// are kept since truncation preserves all three of them.
    pub fn resized(&self, half_range: usize) -> Self {
        let h = half_range as i64;
        let mut out = FourierSeq {
            half_range,
            coeffs: vec![ZERO; 2 * half_range + 1],
            real: self.real,
            zero_mean: self.zero_mean,
            one_periodic: self.one_periodic,
        };
        for k in -h..=h {
            out.coeffs[(k + h) as usize] = self.get(k);
        }
        out
    }

    /// Drops the structural flags.
    pub fn plain(mut self) -> Self {
        self.real = false;
        self.zero_mean = false;
        self.one_periodic = false;
        self
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for v in out.coeffs.iter_mut() {
            *v *= c;
        }
        if c.im != 0.0 {
            out.real = false;
        }
        out
    }

    /// `self + c * other` over the larger of the two ranges. Flags survive
    /// only if both operands carry them and `c` is real.
    pub fn axpy(&self, c: Complex64, other: &FourierSeq) -> Self {
        let h = self.half_range.max(other.half_range);
        let mut out = self.resized(h);
        for (k, v) in other.iter() {
            if v != ZERO {
                let i = (k + h as i64) as usize;
                out.coeffs[i] += c * v;
            }
        }
        out.real = self.real && other.real && c.im == 0.0;
        out.zero_mean = self.zero_mean && other.zero_mean;
        out.one_periodic = self.one_periodic && other.one_periodic;
        out
    }

    pub fn sub(&self, other: &FourierSeq) -> Self {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    pub fn add(&self, other: &FourierSeq) -> Self {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sup_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Largest coefficientwise distance to `other`.
    pub fn max_abs_diff(&self, other: &FourierSeq) -> f64 {
        let h = self.half_range.max(other.half_range) as i64;
        (-h..=h).fold(0.0, |m, k| m.max((self.get(k) - other.get(k)).norm()))
    }

    /// Evaluates `sum f_k exp(i pi k x)`.
    pub fn eval(&self, x: f64) -> Complex64 {
        self.iter()
            .filter(|(_, c)| *c != ZERO)
            .map(|(k, c)| c * Complex64::from_polar(1.0, std::f64::consts::PI * k as f64 * x))
            .sum()
    }
}

#[derive(Serialize, Deserialize)]
struct FourierSeqWire {
    half_range: usize,
    real: bool,
    zero_mean: bool,
    one_periodic: bool,
    coeffs: Vec<(i64, f64, f64)>,
}

impl Serialize for FourierSeq {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FourierSeqWire {
            half_range: self.half_range,
            real: self.real,
            zero_mean: self.zero_mean,
            one_periodic: self.one_periodic,
            coeffs: self.iter().map(|(k, c)| (k, c.re, c.im)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FourierSeq {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = FourierSeqWire::deserialize(d)?;
        let h = wire.half_range as i64;
        let mut f = FourierSeq::zeros(wire.half_range);
        for (k, re, im) in wire.coeffs {
            if k.abs() > h {
                return Err(serde::de::Error::custom(format!(
                    "coefficient index {k} exceeds half_range {h}"
                )));
            }
            f.set(k, Complex64::new(re, im));
        }
        f.with_flags(wire.real, wire.zero_mean, wire.one_periodic)
            .map_err(serde::de::Error::custom)
    }
}

/// Visits indices in the canonical order `0, 1, -1, 2, -2, ...`.
fn canonical_order(half_range: usize) -> impl Iterator<Item = i64> {
    std::iter::once(0).chain((1..=half_range as i64).flat_map(|j| [j, -j]))
}

/// The weighted norm `||f||_{w,s,p}`; `p = f64::INFINITY` gives the sup norm.
///
/// # Panics
/// If `p < 1`.
pub fn norm(f: &FourierSeq, w: &Weight, s: f64, p: f64) -> f64 {
    assert!(p >= 1.0, "norm exponent must be at least 1, got {p}");
    if p.is_infinite() {
        canonical_order(f.half_range).fold(0.0, |m, k| {
            let c = f.get(k);
            if c == ZERO {
                m
            } else {
                m.max(w.value(k) * bracket(k).powf(s) * c.norm())
            }
        })
    } else {
        let total = canonical_order(f.half_range).fold(0.0, |acc, k| {
            let c = f.get(k);
            if c == ZERO {
                acc
            } else {
                acc + (w.value(k) * bracket(k).powf(s) * c.norm()).powf(p)
            }
        });
        total.powf(1.0 / p)
    }
}

/// The shifted sup norm `sup_k w_{k+l} <k+l>^s |f_k|`.
pub fn shifted_norm(f: &FourierSeq, w: &Weight, s: f64, l: i64) -> f64 {
    canonical_order(f.half_range).fold(0.0, |m, k| {
        let c = f.get(k);
        if c == ZERO {
            m
        } else {
            m.max(w.value(k + l) * bracket(k + l).powf(s) * c.norm())
        }
    })
}

/// The tail `R_N f`, keeping `f_k` for `|k| >= N`.
pub fn tail(f: &FourierSeq, n: usize) -> FourierSeq {
    let mut out = f.clone();
    let h = f.half_range as i64;
    let cut = (n as i64 - 1).min(h);
    for k in -cut..=cut {
        out.set(k, ZERO);
    }
    out
}

/// Truncated convolution `(a*b)_n = sum_m a_{n-m} b_m` on `|n| <= max(K_a, K_b)`.
///
/// Terms are accumulated in ascending `m`; exact zeros of `a` are skipped,
/// which leaves every partial sum unchanged.
pub fn convolve(a: &FourierSeq, b: &FourierSeq) -> FourierSeq {
    let h = a.half_range.max(b.half_range);
    let mut out = FourierSeq::zeros(h);
    // Iterating the nonzeros of `a` by descending index j = n - m visits the
    // m = n - j in ascending order.
    let mut a_nz = a.nonzeros();
    a_nz.reverse();
    let hb = b.half_range as i64;
    for n in -(h as i64)..=h as i64 {
        let mut acc = ZERO;
        for &(j, aj) in &a_nz {
            let m = n - j;
            if m < -hb || m > hb {
                continue;
            }
            acc += aj * b.get(m);
        }
        out.set(n, acc);
    }
    out.real = a.real && b.real;
    out.zero_mean = false;
    out.one_periodic = a.one_periodic && b.one_periodic;
    out
}

/// Integral-plus-correction estimate of `sum_{j > L} g(j)` for
/// `g(x) = x^{-e0} sum_r b_r (n/x)^r`, using the midpoint Euler-Maclaurin
/// formula at `a = L + 1/2`. Requires `e0 > 1` and `n/a <= 1/2`.
pub(crate) fn series_tail(b: &[f64], e0: f64, n: f64, big_l: usize) -> f64 {
    let a = big_l as f64 + 0.5;
    let t = n / a;
    let mut integral = 0.0;
    let mut d1 = 0.0;
    let mut d3 = 0.0;
    let mut tr = 1.0;
    for (r, &br) in b.iter().enumerate() {
        let e = e0 + r as f64;
        let term = br * tr;
        integral += term / (e - 1.0);
        d1 += -e * term;
        d3 += -e * (e + 1.0) * (e + 2.0) * term;
        tr *= t;
    }
    let scale = a.powf(-e0);
    integral * a * scale + d1 * scale / (24.0 * a) - 7.0 * d3 * scale / (5760.0 * a * a * a)
}

/// Generalized binomial coefficients `C(x, i)` for `i = 0..len`.
pub(crate) fn binomials(x: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut c = 1.0;
    for i in 0..len {
        out.push(c);
        c *= (x - i as f64) / (i as f64 + 1.0);
    }
    out
}

const SERIES_TERMS: usize = 60;

/// `sum_{|m| != n} |m^2 - n^2|^{-sigma}` over all `m` in Z.
///
/// Summed directly up to `|m| <= 2n + 512`; the remainder comes from the
/// expansion of `(x^2 - n^2)^{-sigma}` in powers of `n/x`, integrated term by
/// term with a midpoint Euler-Maclaurin correction. The relative error is
/// well below `1e-10`.
pub fn hilbert_sum(n: usize, sigma: f64) -> Result<f64> {
    if !(sigma > 0.5) {
        return Err(HillError::DivergentSum { sigma });
    }
    assert!(n >= 1, "hilbert_sum needs n >= 1");
    let nf = n as f64;
    let n2 = nf * nf;
    let big_l = 2 * n + 512;
    let mut direct = n2.powf(-sigma);
    for j in 1..=big_l {
        if j == n {
            continue;
        }
        let jf = j as f64;
        direct += 2.0 * (jf * jf - n2).abs().powf(-sigma);
    }
    // (1 - u^2)^{-sigma} = sum_j C(-sigma, j) (-1)^j u^{2j}
    let c = binomials(-sigma, SERIES_TERMS / 2);
    let mut b = vec![0.0; SERIES_TERMS];
    for (j, cj) in c.iter().enumerate() {
        b[2 * j] = if j % 2 == 0 { *cj } else { -*cj };
    }
    Ok(direct + 2.0 * series_tail(&b, 2.0 * sigma, nf, big_l))
}

/// Outcome of [`weakstar_converged`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakStarReport {
    pub converged: bool,
    /// Largest `||f||_{s,inf}` over the list.
    pub norm_bound: f64,
    /// Largest componentwise distance to the limit over the final third.
    pub final_component_distance: f64,
    pub bounded: bool,
}

/// Tests norm boundedness plus componentwise convergence of a list towards
/// `limit`. A finite list is called bounded when the sup norms over its final
/// third exceed the largest sup norm of the first two thirds by at most 25%;
/// componentwise convergence is checked on the final third against
/// `component_tol`.
pub fn weakstar_converged(
    seqs: &[FourierSeq],
    limit: &FourierSeq,
    s: f64,
    component_tol: f64,
) -> WeakStarReport {
    let w = Weight::Trivial;
    let norms: Vec<f64> = seqs.iter().map(|f| norm(f, &w, s, f64::INFINITY)).collect();
    let norm_bound = norms.iter().cloned().fold(0.0, f64::max);
    if seqs.is_empty() {
        return WeakStarReport {
            converged: true,
            norm_bound: 0.0,
            final_component_distance: 0.0,
            bounded: true,
        };
    }
    let start = seqs.len() - seqs.len().div_ceil(3);
    let head_bound = norms[..start.max(1)].iter().cloned().fold(0.0, f64::max);
    let bounded = norms[start..]
        .iter()
        .all(|&x| x.is_finite() && x <= 1.25 * head_bound.max(f64::MIN_POSITIVE));
    let final_component_distance = seqs[start..]
        .iter()
        .map(|f| f.max_abs_diff(limit))
        .fold(0.0, f64::max);
    WeakStarReport {
        converged: bounded && final_component_distance <= component_tol,
        norm_bound,
        final_component_distance,
        bounded,
    }
}

/// `sum_{m in Z} <m>^{-a}` for `a > 1`, the constant of the Hoelder
/// embedding `||f||_{sigma,p} <= (sum <m>^{-(s-sigma)p})^{1/p} ||f||_{s,inf}`.
pub fn bracket_power_sum(a: f64) -> Result<f64> {
    if !(a > 1.0) {
        return Err(HillError::DivergentSum { sigma: a / 2.0 });
    }
    let big_l = 4096usize;
    // <m> = 1 + m for m >= 0, so the sum is 2 zeta(a) - 1.
    let mut direct = 0.0;
    for j in 1..=big_l {
        direct += (j as f64).powf(-a);
    }
    let zeta = direct + series_tail(&[1.0], a, 0.0, big_l);
    Ok(2.0 * zeta - 1.0)
}
