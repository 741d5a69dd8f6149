//! Independent oracles for the dense eigensolvers and the reduction:
//! ODE shooting for Dirichlet and periodic eigenvalues, and dense
//! eigenvectors for reconstructed eigenfunctions.

use std::f64::consts::PI;

use hill_core::galerkin::{dirichlet_spectrum, periodic_eigenpair, periodic_spectrum};
use hill_core::reduction::ReductionContext;
use hill_core::{Potential, Weight};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Fundamental solutions of `y'' = (q - lambda) y` on `[0, 1]` by RK4;
/// returns `(y1(1), y1'(1), y2(1), y2'(1))` with `y1(0) = 1, y1'(0) = 0` and
/// `y2(0) = 0, y2'(0) = 1`.
fn monodromy(q: &Potential, lambda: f64, steps: usize) -> [f64; 4] {
    let h = 1.0 / steps as f64;
    let qv = |x: f64| q.eval(x).re;
    let rhs = |x: f64, y: [f64; 4]| -> [f64; 4] {
        let a = qv(x) - lambda;
        [y[1], a * y[0], y[3], a * y[2]]
    };
    let mut y = [1.0, 0.0, 0.0, 1.0];
    for i in 0..steps {
        let x = i as f64 * h;
        let k1 = rhs(x, y);
        let k2 = rhs(x + h / 2.0, std::array::from_fn(|j| y[j] + h / 2.0 * k1[j]));
        let k3 = rhs(x + h / 2.0, std::array::from_fn(|j| y[j] + h / 2.0 * k2[j]));
        let k4 = rhs(x + h, std::array::from_fn(|j| y[j] + h * k3[j]));
        for j in 0..4 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    [y[0], y[1], y[2], y[3]]
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn roots_in(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut x = lo;
    let mut fx = f(x);
    while x < hi {
        let y = x + step;
        let fy = f(y);
        if (fx > 0.0) != (fy > 0.0) {
            out.push(bisect(f, x, y));
        }
        x = y;
        fx = fy;
    }
    out
}

fn test_potential() -> Potential {
    // q(x) = 0.6 cos(2 pi x) + 0.4 cos(4 pi x) - 0.2 sin(2 pi x)
    Potential::from_modes([
        (1, c(0.3, 0.1)),
        (-1, c(0.3, -0.1)),
        (2, c(0.2, 0.0)),
        (-2, c(0.2, 0.0)),
    ])
    .unwrap()
}

#[test]
fn dirichlet_eigenvalues_match_shooting() {
    let q = test_potential();
    let spec = dirichlet_spectrum(&q, 64).unwrap();
    let f = |l: f64| monodromy(&q, l, 4000)[2];
    for n in 1..=4usize {
        let lo = ((n as f64 - 0.5) * PI).powi(2);
        let hi = ((n as f64 + 0.5) * PI).powi(2);
        let r = roots_in(&f, lo, hi, 0.05);
        assert_eq!(r.len(), 1, "n = {n}: {r:?}");
        let mu = spec.mu(n).unwrap();
        assert!(mu.im.abs() < 1e-10);
        assert!((mu.re - r[0]).abs() < 1e-7, "n = {n}: {} vs {}", mu.re, r[0]);
    }
}

#[test]
fn periodic_eigenvalues_match_discriminant() {
    let q = test_potential();
    let spec = periodic_spectrum(&q, 64).unwrap();
    for n in 1..=3usize {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let f = |l: f64| {
            let m = monodromy(&q, l, 4000);
            sign * (m[0] + m[3]) - 2.0
        };
        let center = (n as f64 * PI).powi(2);
        let r = roots_in(&f, center - 3.0, center + 3.0, 0.005);
        assert_eq!(r.len(), 2, "n = {n}: {r:?}");
        assert!((spec.lambda_minus(n).re - r[0]).abs() < 1e-7);
        assert!((spec.lambda_plus(n).re - r[1]).abs() < 1e-7);
    }
}

#[test]
fn reconstructed_eigenfunction_matches_dense_eigenvector() {
    let q = Potential::power_law(0.02, -1.0, 12);
    let m = q.norm(&Weight::Trivial, 0.0);
    let cx = ReductionContext::new(q.clone(), 0.0, Weight::Trivial, m, 64).unwrap();
    for n in [cx.thresholds().n_s.max(3), 5] {
        let roots = cx.find_roots(n).unwrap();
        for xi in [roots.xi_1, roots.xi_2] {
            let u = cx.kernel_vector(n, xi).unwrap();
            let e = cx.eigenfunction_reconstruct(n, xi, u).unwrap();
            assert!(e.residual_ok(), "residual {}", e.residual);
            let (lam, g) = periodic_eigenpair(&q, 64, n, xi).unwrap();
            assert!((lam - xi).norm() < 1e-9 * xi.norm());
            let num: Complex64 = g.iter().map(|(k, v)| v.conj() * e.f.get(k)).sum();
            let den: f64 = g.iter().map(|(_, v)| v.norm_sqr()).sum();
            let aligned = g.scale(num / den);
            let scale = e.f.sup_abs();
            assert!(aligned.max_abs_diff(&e.f) < 1e-5 * scale);
        }
    }
}

#[test]
fn mathieu_gap_is_twice_the_coefficient() {
    // q = 2c cos(2 pi x): gamma_1 = 2c + O(c^3), mu_1 = pi^2 - c + O(c^2).
    let cc = 0.05;
    let q = Potential::single_mode(c(cc, 0.0));
    let spec = dirichlet_spectrum(&q, 64).unwrap();
    let per = periodic_spectrum(&q, 64).unwrap();
    let gamma = per.lambda_plus(1) - per.lambda_minus(1);
    assert!((gamma.re - 2.0 * cc).abs() < 10.0 * cc.powi(3));
    assert!((spec.mu(1).unwrap().re - (PI * PI - cc)).abs() < cc * cc);
}
