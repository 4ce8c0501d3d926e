//! Small numeric kernels shared across modules.

use std::f64::consts::PI;

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Error-free product: `a*b = p + e` exactly.
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Fractional part in `[0,1)`.
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Circular distance from `x` to the nearest integer, in `[0, 1/2]`.
pub fn dist_to_int(x: f64) -> f64 {
    let f = frac(x);
    f.min(1.0 - f)
}

/// `frac(n*t)` for a possibly huge integer `n`, accurate to a few ulps of 1.
///
/// `n` is split into three non-overlapping 53-bit limbs; each limb product is
/// formed exactly with [`two_prod`] and reduced mod 1 before summing.
pub fn frac_mul(n: u128, t: f64) -> f64 {
    let mut rest = n;
    let mut acc = 0.0;
    while rest != 0 {
        let bits = 128 - rest.leading_zeros();
        let shift = bits.saturating_sub(53);
        let limb = (rest >> shift) << shift;
        rest -= limb;
        let (p, e) = two_prod(limb as f64, t);
        acc = frac(acc + frac(p) + e);
    }
    acc
}

/// Rigorous upper bound on `Σ_{k ≥ k0} k^{-s}` for `s > 1`, `k0 ≥ 1`.
///
/// Integral comparison: `Σ_{k≥k0} k^{-s} ≤ ∫_{k0-1}^∞ x^{-s} dx` once `k0 ≥ 2`.
pub fn power_tail(s: f64, k0: u64) -> f64 {
    ln_power_tail(s, k0).exp()
}

/// Natural log of [`power_tail`], finite even when the tail underflows.
pub fn ln_power_tail(s: f64, k0: u64) -> f64 {
    debug_assert!(s > 1.0 && k0 >= 1);
    if k0 >= 2 {
        (1.0 - s) * ((k0 - 1) as f64).ln() - (s - 1.0).ln()
    } else {
        (1.0 + 1.0 / (s - 1.0)).ln()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; order];
    let mut w = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=order {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let p = if order == 1 { z } else { p1 };
            let pm = if order == 1 { 1.0 } else { p0 };
            dp = n * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[order - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[order - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss–Legendre quadrature of a smooth integrand over `[a, b]`
/// split into `panels` equal pieces, 16 nodes each.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(16);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let mid = a + (i as f64 + 0.5) * h;
            x.iter().zip(&w).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

/// Round-trip-safe rendering with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:.16e}")
    }
}
