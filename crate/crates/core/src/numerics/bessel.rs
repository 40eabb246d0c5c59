//! Bessel functions of the first kind for integer and half-integer orders.

use super::special::ln_gamma;
use std::f64::consts::PI;

/// Power series J_ν(x) = Σ (-1)^k (x/2)^{2k+ν} / (k! Γ(k+ν+1)).
///
/// Accurate for moderate x (cancellation grows like e^x); used for small
/// arguments and as an independent reference in tests.
pub fn bessel_j_series(nu: f64, x: f64) -> f64 {
    assert!(nu >= 0.0 && x >= 0.0);
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    let mut term = (nu * half.ln() - ln_gamma(nu + 1.0)).exp();
    let mut sum = term;
    let q = half * half;
    for k in 1..500 {
        let kf = k as f64;
        term *= -q / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() && kf > q.sqrt() {
            break;
        }
    }
    sum
}

/// J_ν(x) for ν a non-negative multiple of 1/2 and x ≥ 0.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    assert!(x >= 0.0, "bessel_j requires x >= 0");
    let twice = 2.0 * nu;
    assert!(
        nu >= 0.0 && (twice - twice.round()).abs() < 1e-12,
        "bessel_j supports integer and half-integer orders only"
    );
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let twice = twice.round() as usize;
    if twice % 2 == 1 {
        half_integer(twice / 2, x)
    } else {
        let n = twice / 2;
        if x >= 50.0 + 2.0 * n as f64 * n as f64 {
            hankel_asymptotic(nu, x)
        } else {
            miller(n, x)
        }
    }
}

fn half_integer(k: usize, x: f64) -> f64 {
    // J_{k+1/2}
    let nu = k as f64 + 0.5;
    if x <= nu {
        return bessel_j_series(nu, x);
    }
    let pref = (2.0 / (PI * x)).sqrt();
    let mut jm = pref * x.cos(); // J_{-1/2}
    let mut j = pref * x.sin(); // J_{1/2}
    let mut order = 0.5;
    for _ in 0..k {
        let next = (2.0 * order / x) * j - jm;
        jm = j;
        j = next;
        order += 1.0;
    }
    j
}

fn miller(n: usize, x: f64) -> f64 {
    const BIG: f64 = 1e150;
    let top = (n as f64).max(x.ceil());
    let m = 2 * ((top as usize + 20 + (160.0 * top).sqrt() as usize) / 2);
    let tox = 2.0 / x;
    let mut bjp = 0.0;
    let mut bj = 1.0;
    let mut ans = 0.0;
    let mut sum = 0.0;
    let mut jsum = false;
    for j in (1..=m).rev() {
        let bjm = j as f64 * tox * bj - bjp;
        bjp = bj;
        bj = bjm;
        if bj.abs() > BIG {
            bj /= BIG;
            bjp /= BIG;
            ans /= BIG;
            sum /= BIG;
        }
        if jsum {
            sum += bj;
        }
        jsum = !jsum;
        if j == n {
            ans = bjp;
        }
    }
    if n == 0 {
        ans = bj;
    }
    sum = 2.0 * sum - bj;
    ans / sum
}

fn hankel_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..60 {
        if term.abs() > prev {
            break;
        }
        prev = term.abs();
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        let odd = (2 * k + 1) as f64;
        term *= (mu - odd * odd) / ((k + 1) as f64 * 8.0 * x);
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
