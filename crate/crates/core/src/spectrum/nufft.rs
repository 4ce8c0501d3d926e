//! Type-1 non-uniform transform by Gaussian gridding:
//! `F(n) = Σ_e w_e e^{-2πi n θ_e}` for `|n| ≤ m`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::fft_forward;

/// Half-width of the spreading stencil, in grid cells.
pub const SPREAD: i64 = 16;

/// Relative accuracy target used by callers for error bookkeeping; the
/// gridding error is below `NUFFT_REL_ERR · Σ|w_e|` per output frequency.
pub const NUFFT_REL_ERR: f64 = 1e-11;

/// Evaluates `F(n)` for `n = -m..=m`; `theta` is taken mod 1.
pub fn type1(theta: &[f64], weights: &[f64], m: usize) -> Vec<Complex64> {
    assert_eq!(theta.len(), weights.len());
    let grid = (4 * m + 4).next_power_of_two().max(64);
    let mr = grid as f64;
    let h = 2.0 * PI / mr;
    let mf = m as f64;
    let tau = PI * SPREAD as f64 / (mr * (mr * (mr - 2.0 * mf)).sqrt());
    let stencil: Vec<f64> = (-SPREAD..=SPREAD)
        .map(|j| (-(j as f64 * h).powi(2) / (4.0 * tau)).exp())
        .collect();

    let mut buf = vec![Complex64::new(0.0, 0.0); grid];
    let mut acc = vec![0.0f64; grid];
    for (&t, &w) in theta.iter().zip(weights) {
        let x = 2.0 * PI * (t - t.floor());
        let j0 = (x / h).floor() as i64;
        let d0 = x - j0 as f64 * h;
        // e^{-(d0 - j h)^2/4τ} = e^{-d0²/4τ} · (e^{d0 h/2τ})^j · e^{-(jh)²/4τ}
        let base = w * (-d0 * d0 / (4.0 * tau)).exp();
        let ratio = (d0 * h / (2.0 * tau)).exp();
        let mut up = base;
        let mut down = base / ratio;
        for j in 0..=SPREAD {
            let idx = (j0 + j).rem_euclid(grid as i64) as usize;
            acc[idx] += up * stencil[(SPREAD + j) as usize];
            up *= ratio;
            if j < SPREAD {
                let idx = (j0 - j - 1).rem_euclid(grid as i64) as usize;
                acc[idx] += down * stencil[(SPREAD - j - 1) as usize];
                down /= ratio;
            }
        }
    }
    for (b, a) in buf.iter_mut().zip(&acc) {
        b.re = *a;
    }
    fft_forward(&mut buf);
    let norm = (PI / tau).sqrt() / mr;
    (-(m as i64)..=m as i64)
        .map(|n| {
            let k = n as f64;
            buf[n.rem_euclid(grid as i64) as usize] * (norm * (k * k * tau).exp())
        })
        .collect()
}

/// Direct `O(P·m)` evaluation, for testing and tiny inputs.
pub fn type1_direct(theta: &[f64], weights: &[f64], m: usize) -> Vec<Complex64> {
    (-(m as i64)..=m as i64)
        .map(|n| {
            theta
                .iter()
                .zip(weights)
                .map(|(&t, &w)| Complex64::from_polar(w, -2.0 * PI * ((n as f64 * t) % 1.0)))
                .sum()
        })
        .collect()
}
