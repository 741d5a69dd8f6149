//! Computed contraction constants and thresholds.
//!
//! `c_s` is the supremum over `1 <= n <= 4096` of
//! `n^{1/2-|s|} * 2 sum_{|k| != n} |n+k|^{-(1-2|s|)} |n-k|^{-1}`, the sum that
//! bounds the operator norm of `T_n`. `c_s'` additionally covers the sum
//! `2 <2n>^s sum_{|m| != n} |n^2 - m^2|^{-(1-|s|)}` measured against
//! `eps_s(n)`. Both are cached per `s` since every threshold needs them.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::seq::{binomials, bracket, hilbert_sum, series_tail};

/// Largest `n` scanned by the constant estimates.
pub const N_MAX: usize = 4096;

const SERIES_TERMS: usize = 60;

/// A supremum over `1 <= n <= N_MAX` together with where it is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub s: f64,
    pub value: f64,
    pub argmax: usize,
    /// The scanned quantity at `n = N_MAX`. When `argmax == N_MAX` the
    /// quantity is still growing there and `value` only bounds the scanned
    /// range.
    pub boundary_value: f64,
}

impl ConstantEstimate {
    /// Whether the supremum is attained strictly inside the scanned range.
    pub fn interior(&self) -> bool {
        self.argmax < N_MAX
    }
}

fn check_s(s: f64) {
    assert!(s > -0.5 && s <= 0.0, "regularity s = {s} outside (-1/2, 0]");
}

/// `2 sum_{|k| != n} |n+k|^{-beta} |n-k|^{-1}` with `beta = 1 - 2|s|`.
pub fn tn_sum(n: usize, s: f64) -> f64 {
    check_s(s);
    let beta = 1.0 - 2.0 * s.abs();
    let nf = n as f64;
    let pw = |x: f64| if beta == 1.0 { 1.0 / x } else { x.powf(-beta) };
    let big_l = 2 * n + 512;
    let mut direct = 0.0;
    // k = j >= 0 and k = -i, i >= 1, skipping |k| = n.
    for j in 0..=big_l {
        if j == n {
            continue;
        }
        let jf = j as f64;
        direct += pw(nf + jf) / (nf - jf).abs();
        if j >= 1 {
            direct += pw((nf - jf).abs()) / (nf + jf);
        }
    }
    // Tail j > L of (x+n)^-beta (x-n)^-1 + (x-n)^-beta (x+n)^-1, expanded in
    // u = n/x: coefficients (1 + (-1)^r) sum_{i <= r} C(-beta, i).
    let c = binomials(-beta, SERIES_TERMS);
    let mut b = vec![0.0; SERIES_TERMS];
    let mut partial = 0.0;
    for r in 0..SERIES_TERMS {
        partial += c[r];
        if r % 2 == 0 {
            b[r] = 2.0 * partial;
        }
    }
    2.0 * (direct + series_tail(&b, 1.0 + beta, nf, big_l))
}

/// `eps_s(n) = max(log<n>/n, n^{-(1-|s|)})`. The two forms used for `s = 0`
/// and `s < 0` are merged into one expression continuous in `s`.
pub fn epsilon_s(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    (bracket(n as i64).ln() / nf).max(nf.powf(-(1.0 - s.abs())))
}

/// `2 <2n>^s sum_{|m| != n} |n^2 - m^2|^{-(1-|s|)}`.
pub fn bn_sum(n: usize, s: f64) -> f64 {
    check_s(s);
    2.0 * bracket(2 * n as i64).powf(s)
        * hilbert_sum(n, 1.0 - s.abs()).expect("1 - |s| > 1/2 for s in (-1/2, 0]")
}

fn cache() -> &'static Mutex<HashMap<(u64, u8), ConstantEstimate>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u8), ConstantEstimate>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(s: f64, tag: u8, compute: impl FnOnce() -> ConstantEstimate) -> ConstantEstimate {
    let key = (s.to_bits(), tag);
    if let Some(v) = cache().lock().expect("constant cache poisoned").get(&key) {
        return *v;
    }
    let v = compute();
    cache().lock().expect("constant cache poisoned").insert(key, v);
    v
}

fn scan(s: f64, f: impl Fn(usize) -> f64) -> ConstantEstimate {
    let mut value = f64::NEG_INFINITY;
    let mut argmax = 0;
    let mut boundary_value = 0.0;
    for n in 1..=N_MAX {
        let v = f(n);
        if v > value {
            value = v;
            argmax = n;
        }
        if n == N_MAX {
            boundary_value = v;
        }
    }
    ConstantEstimate {
        s,
        value,
        argmax,
        boundary_value,
    }
}

/// `c_s = max(1, sup_n n^{1/2-|s|} tn_sum(n, s))`.
pub fn estimate_c_s(s: f64) -> ConstantEstimate {
    check_s(s);
    cached(s, 0, || {
        let beta = 0.5 - s.abs();
        let mut est = scan(s, |n| (n as f64).powf(beta) * tn_sum(n, s));
        est.value = est.value.max(1.0);
        est
    })
}

/// The fitted constant of the refined coefficient estimate,
/// `sup_n bn_sum(n, s) / eps_s(n)`.
pub fn bn_fit(s: f64) -> ConstantEstimate {
    check_s(s);
    cached(s, 1, || scan(s, |n| bn_sum(n, s) / epsilon_s(n, s)))
}

/// `c_s' = max(c_s, bn_fit(s))`.
pub fn estimate_c_s_prime(s: f64) -> f64 {
    estimate_c_s(s).value.max(bn_fit(s).value)
}

/// Thresholds of the reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Smallest `n` with `2 c_s ||q|| <= n^{1/2-|s|}` (at least 1).
    pub n_s: usize,
    /// Smallest `n >= n_s` with `16 c_s' m / n^{1/2-|s|} <= 1/2`.
    pub n_ms: usize,
    /// Smallest `n >= N_ms` with `8 c_s' / n^{1/2-|s|} <= 1/(16 m)`.
    pub m_ms: usize,
    pub c_s: f64,
    pub c_s_prime: f64,
}

/// Smallest integer `n >= 1` with `n^beta >= x`, saturating at `usize::MAX`.
fn smallest_power_at_least(x: f64, beta: f64) -> usize {
    if x <= 1.0 {
        return 1;
    }
    let guess = x.powf(1.0 / beta);
    if !(guess < 1e18) {
        return usize::MAX;
    }
    let mut n = (guess.ceil() as usize).max(1);
    while n > 1 && ((n - 1) as f64).powf(beta) >= x {
        n -= 1;
    }
    while (n as f64).powf(beta) < x {
        n += 1;
    }
    n
}

/// Inverts the three threshold inequalities for `||q||_{w,s,inf} = q_norm`
/// and the ball radius `m >= q_norm`.
pub fn thresholds(q_norm: f64, s: f64, m: f64, c_s: f64, c_s_prime: f64) -> Thresholds {
    check_s(s);
    let beta = 0.5 - s.abs();
    let n_s = smallest_power_at_least(2.0 * c_s * q_norm, beta);
    let n_ms = smallest_power_at_least(32.0 * c_s_prime * m, beta).max(n_s);
    let m_ms = smallest_power_at_least(128.0 * c_s_prime * m, beta).max(n_ms);
    Thresholds {
        n_s,
        n_ms,
        m_ms,
        c_s,
        c_s_prime,
    }
}
