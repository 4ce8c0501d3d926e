//! The five bump families with closed-form spectra.
//!
//! `φ_{δ,l}` is the `l`-fold convolution of `(l/δ)·1_{I(δ/l)}`, a cardinal
//! B-spline of order `l` rescaled to `I(δ)`:
//! `φ̂_{δ,l}(n) = (sin(πδn/l)/(πδn/l))^l`. `φ_{N,δ,l}(t) = φ_{δ,l}(Nt)`.
//! `ψ_j = 1_{I((1+ε₀)δ)} * φ_{ε₀δ,l}` has a plateau equal to 1 on `I(δ)`.
//! `ψ_{δ,N}(t) = δ^{-1} 1_{I(δ)}(Nt)` and `f_M` averages such blocks.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{dilate_arcs, ArcUnion};
use crate::numeric::{frac_mul, sinc};
use crate::spectrum::{DecayCertificate, SpectralSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BumpKind {
    PhiL,
    PhiDeltaL,
    PhiNDeltaL,
    PsiJ,
    PsiIndicator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub kind: BumpKind,
    pub l: u32,
    pub delta: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub eps0: f64,
}

impl BumpSpec {
    pub fn phi_l(l: u32) -> Result<Self> {
        check_l(l)?;
        Ok(Self { kind: BumpKind::PhiL, l, delta: 1.0, n: 1, eps0: 0.0 })
    }

    pub fn phi_delta_l(delta: f64, l: u32) -> Result<Self> {
        check_l(l)?;
        check_delta(delta)?;
        Ok(Self { kind: BumpKind::PhiDeltaL, l, delta, n: 1, eps0: 0.0 })
    }

    pub fn phi_n_delta_l(n: u64, delta: f64, l: u32) -> Result<Self> {
        check_l(l)?;
        check_delta(delta)?;
        if n == 0 {
            return Err(invalid("N must be positive"));
        }
        Ok(Self { kind: BumpKind::PhiNDeltaL, l, delta, n, eps0: 0.0 })
    }

    pub fn psi_j(delta: f64, eps0: f64, l: u32) -> Result<Self> {
        check_l(l)?;
        check_delta(delta)?;
        if !(eps0 > 0.0 && eps0 < 1.0) {
            return Err(invalid(format!("eps0 {eps0} outside (0,1)")));
        }
        if (1.0 + 2.0 * eps0) * delta >= 1.0 {
            return Err(invalid(format!("support (1+2·{eps0})·{delta} does not fit in the circle")));
        }
        Ok(Self { kind: BumpKind::PsiJ, l, delta, n: 1, eps0 })
    }

    pub fn psi_indicator(delta: f64, n: u64) -> Result<Self> {
        check_delta(delta)?;
        if n == 0 {
            return Err(invalid("N must be positive"));
        }
        Ok(Self { kind: BumpKind::PsiIndicator, l: 0, delta, n, eps0: 0.0 })
    }

    /// Coefficient at frequency `m`.
    pub fn coeff(&self, m: i64) -> f64 {
        let l = self.l as i32;
        let n = self.n as i64;
        if m % n != 0 {
            return 0.0;
        }
        let k = (m / n) as f64;
        match self.kind {
            BumpKind::PhiL | BumpKind::PhiDeltaL | BumpKind::PhiNDeltaL => {
                sinc(PI * self.delta * k / self.l as f64).powi(l)
            }
            BumpKind::PsiJ => psi_coeff(self.delta, self.eps0, self.l, k),
            BumpKind::PsiIndicator => sinc(PI * self.delta * k),
        }
    }

    /// `|ĉ(m)| ≤ C·(|m|/N)^{-β}` for all `m ≠ 0`.
    pub fn certificate(&self) -> DecayCertificate {
        let l = self.l as f64;
        let base = match self.kind {
            BumpKind::PhiL | BumpKind::PhiDeltaL | BumpKind::PhiNDeltaL => {
                DecayCertificate::new((l / (PI * self.delta)).powf(l), l)
            }
            BumpKind::PsiJ => {
                let c = (l / (PI * self.eps0 * self.delta)).powf(l) / PI;
                DecayCertificate::new(c, l + 1.0)
            }
            BumpKind::PsiIndicator => DecayCertificate::new(1.0 / (PI * self.delta), 1.0),
        };
        base.dilated(self.n)
    }

    /// Coefficients at `|m| ≤ K·N` (only multiples of `N` are stored).
    pub fn spectrum(&self, k: u64) -> SpectralSequence {
        let n = self.n as i64;
        let kk = k as i64;
        let entries = (-kk..=kk).map(|j| (j * n, Complex64::new(self.coeff(j * n), 0.0))).collect();
        SpectralSequence::from_entries(k * self.n, entries)
            .expect("entries are sorted and in range")
            .with_tail(self.certificate())
    }

    /// Pointwise value at `t ∈ T`.
    pub fn value(&self, t: f64) -> f64 {
        let x = centered(frac_mul(self.n as u128, t - t.floor()));
        match self.kind {
            BumpKind::PhiL | BumpKind::PhiDeltaL | BumpKind::PhiNDeltaL => {
                bspline_bump(x, self.delta, self.l)
            }
            BumpKind::PsiJ => psi_value(x, self.delta, self.eps0, self.l),
            BumpKind::PsiIndicator => {
                if x.abs() < self.delta / 2.0 {
                    1.0 / self.delta
                } else {
                    0.0
                }
            }
        }
    }

    /// Closed support as an arc union (up to endpoints).
    pub fn support(&self) -> Result<ArcUnion> {
        let width = match self.kind {
            BumpKind::PsiJ => (1.0 + 2.0 * self.eps0) * self.delta,
            BumpKind::PhiL => return Ok(ArcUnion::full()),
            _ => self.delta,
        };
        dilate_arcs(width, self.n as u128)
    }
}

fn check_l(l: u32) -> Result<()> {
    if l < 2 {
        return Err(invalid(format!("smoothness l = {l} must be at least 2")));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta {delta} outside (0,1)")));
    }
    Ok(())
}

/// Representative of `x mod 1` in `[-1/2, 1/2)`.
pub fn centered(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 0.5 {
        f - 1.0
    } else {
        f
    }
}

/// `(sin(πn/l)/(πn/l))^l`.
pub fn phi_l_coeff(l: u32, n: i64) -> f64 {
    sinc(PI * n as f64 / l as f64).powi(l as i32)
}

/// `φ̂_{δ,l}(n)`.
pub fn phi_delta_l_coeff(delta: f64, l: u32, n: i64) -> f64 {
    sinc(PI * delta * n as f64 / l as f64).powi(l as i32)
}

/// `ψ̂(n) = sin(πWn)/(πn) · φ̂_{ε₀δ,l}(n)` with `W = (1+ε₀)δ`.
pub fn psi_coeff(delta: f64, eps0: f64, l: u32, n: f64) -> f64 {
    let w = (1.0 + eps0) * delta;
    w * sinc(PI * w * n) * sinc(PI * eps0 * delta * n / l as f64).powi(l as i32)
}

/// Cardinal B-spline `M_l` on `[0, l]` (density of a sum of `l` uniforms), by
/// the Cox–de Boor recursion.
pub fn cardinal_bspline(l: u32, u: f64) -> f64 {
    if !(0.0..=l as f64).contains(&u) {
        return 0.0;
    }
    let l = l as usize;
    let mut prev = vec![0.0; l + 1];
    let i0 = u.floor() as usize;
    if i0 < l {
        prev[i0] = 1.0;
    }
    let mut next = vec![0.0; l + 1];
    for k in 2..=l {
        let kf = k as f64;
        for i in 0..=l {
            let x = u - i as f64;
            let a = prev[i];
            let b = if i < l { prev[i + 1] } else { 0.0 };
            // M_k(u - i) uses M_{k-1}(u - i) and M_{k-1}(u - i - 1)
            next[i] = (x * a + (kf - x) * b) / (kf - 1.0);
        }
        std::mem::swap(&mut prev, &mut next);
    }
    prev[0]
}

/// `φ_{δ,l}(x)` for `x ∈ [-1/2, 1/2)`.
pub fn bspline_bump(x: f64, delta: f64, l: u32) -> f64 {
    let lf = l as f64;
    let u = (x + delta / 2.0) * lf / delta;
    lf / delta * cardinal_bspline(l, u)
}

/// `∫_{-δ/2}^{x} φ_{δ,l}`, via `∫_0^u M_l = Σ_{i≥0} M_{l+1}(u - i)`.
pub fn bspline_bump_cdf(x: f64, delta: f64, l: u32) -> f64 {
    let lf = l as f64;
    let u = (x + delta / 2.0) * lf / delta;
    if u <= 0.0 {
        return 0.0;
    }
    if u >= lf {
        return 1.0;
    }
    let mut s = 0.0;
    let mut i = 0.0;
    while i <= u {
        s += cardinal_bspline(l + 1, u - i);
        i += 1.0;
    }
    s.min(1.0)
}

/// `ψ(x) = Φ(x + W/2) - Φ(x - W/2)` with `Φ` the cdf of `φ_{ε₀δ,l}`.
pub fn psi_value(x: f64, delta: f64, eps0: f64, l: u32) -> f64 {
    let w = (1.0 + eps0) * delta;
    let d = eps0 * delta;
    let v = bspline_bump_cdf(x + w / 2.0, d, l) - bspline_bump_cdf(x - w / 2.0, d, l);
    v.clamp(0.0, 1.0)
}

/// `φ_{δ,l}` samples on a `G`-grid together with its spectrum on `|n| ≤ K`.
pub fn phi_delta_l(delta: f64, l: u32, k: u64, grid: usize) -> Result<(Vec<f64>, SpectralSequence)> {
    let spec = BumpSpec::phi_delta_l(delta, l)?;
    let samples = (0..grid).map(|i| spec.value(i as f64 / grid as f64)).collect();
    Ok((samples, spec.spectrum(k)))
}

/// `φ_{N,δ,l}` spectrum on `|m| ≤ K·N`.
pub fn phi_n_delta_l(n: u64, delta: f64, l: u32, k: u64) -> Result<SpectralSequence> {
    Ok(BumpSpec::phi_n_delta_l(n, delta, l)?.spectrum(k))
}

/// `ψ_j` spectrum on `|n| ≤ K` with its support.
pub fn psi_j(delta: f64, eps0: f64, l: u32, k: u64) -> Result<(SpectralSequence, ArcUnion)> {
    let spec = BumpSpec::psi_j(delta, eps0, l)?;
    Ok((spec.spectrum(k), spec.support()?))
}

/// `ψ_{δ,N}` spectrum on `|m| ≤ K·N`.
pub fn psi_indicator(delta: f64, n: u64, k: u64) -> Result<SpectralSequence> {
    Ok(BumpSpec::psi_indicator(delta, n)?.spectrum(k))
}

/// `f_M = (1/M) Σ_j ψ_{δ,N_j}` with every frequency `|n| ≤ K` stored.
pub fn f_m(delta: f64, ns: &[u64], k: u64) -> Result<SpectralSequence> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("dilations must be nonempty and strictly increasing"));
    }
    let m = ns.len() as f64;
    let mut acc: BTreeMap<i64, f64> = BTreeMap::new();
    for &n in ns {
        let block = BumpSpec::psi_indicator(delta, n)?;
        let kj = (k / n) as i64;
        for j in -kj..=kj {
            let f = j * n as i64;
            *acc.entry(f).or_default() += block.coeff(f) / m;
        }
    }
    // |f̂_M(n)| ≤ (1/M) Σ_j N_j/(πδ|n|) beyond K.
    let nsum: f64 = ns.iter().map(|&n| n as f64).sum();
    let tail = DecayCertificate::new(nsum / (m * PI * delta), 1.0);
    let entries = acc.into_iter().map(|(n, v)| (n, Complex64::new(v, 0.0))).collect();
    Ok(SpectralSequence::from_entries(k, entries)?.with_tail(tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::dft_sample;

    #[test]
    fn phi_l_values() {
        for l in 2..9 {
            assert_eq!(phi_l_coeff(l, 0), 1.0);
        }
        assert!(phi_l_coeff(2, 2).abs() < 1e-16);
        assert!((phi_l_coeff(2, 1) - 0.405_284_734_569_351).abs() < 1e-12);
    }

    #[test]
    fn bspline_is_a_density() {
        for l in 2..=8 {
            let steps = 20_000;
            let h = l as f64 / steps as f64;
            let total: f64 = (0..steps).map(|i| cardinal_bspline(l, (i as f64 + 0.5) * h) * h).sum();
            assert!((total - 1.0).abs() < 1e-7, "l={l}: {total}");
            assert!((bspline_bump_cdf(0.0, 0.3, l) - 0.5).abs() < 1e-12);
        }
        // M_2 is the hat function.
        assert!((cardinal_bspline(2, 0.5) - 0.5).abs() < 1e-15);
        assert!((cardinal_bspline(2, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phi_delta_l_fft_agrees_with_closed_form() {
        let (samples, seq) = phi_delta_l(0.1, 4, 200, 1 << 16).unwrap();
        let fft = dft_sample(&samples, 200, None).unwrap();
        for n in -200..=200 {
            assert!((fft.get(n) - seq.get(n)).norm() < 1e-8, "n={n}");
        }
        assert!(phi_delta_l_coeff(0.1, 4, 40).abs() < 1e-15);
        let c100 = phi_delta_l_coeff(0.1, 4, 100);
        assert!(c100.abs() <= (4.0 / (0.1 * PI)).powi(4) * 1e-8);
    }

    #[test]
    fn dilated_spectrum_vanishes_off_multiples() {
        let s = phi_n_delta_l(5, 0.1, 4, 200).unwrap();
        assert_eq!(s.get(7).norm(), 0.0);
        for k in -200..=200 {
            assert_eq!(s.get(5 * k).re, phi_delta_l_coeff(0.1, 4, k));
        }
        let one = phi_n_delta_l(1, 0.1, 4, 50).unwrap();
        assert_eq!(one, phi_delta_l(0.1, 4, 50, 64).unwrap().1);
        assert_eq!(BumpSpec::phi_n_delta_l(5, 0.1, 4).unwrap().support().unwrap().len(), 5);
    }

    #[test]
    fn psi_plateau_and_support() {
        let (d, e, l) = (0.05, 0.1, 4);
        assert!((psi_value(0.0, d, e, l) - 1.0).abs() < 1e-15);
        assert!((psi_value(0.024, d, e, l) - 1.0).abs() < 1e-13);
        assert_eq!(psi_value(0.0601, d, e, l), 0.0);
        let (seq, support) = psi_j(d, e, l, 100).unwrap();
        assert!((seq.get(0).re - 0.055).abs() < 1e-16);
        assert!((support.measure() - 1.2 * d).abs() < 1e-15);
        assert!(BumpSpec::psi_j(0.5, 0.5, 4).is_err());
    }

    #[test]
    fn psi_fft_agrees_with_closed_form() {
        let spec = BumpSpec::psi_j(0.2, 0.25, 4).unwrap();
        let g = 1 << 16;
        let samples: Vec<f64> = (0..g).map(|i| spec.value(i as f64 / g as f64)).collect();
        let fft = dft_sample(&samples, 300, None).unwrap();
        for n in -300..=300i64 {
            assert!((fft.get(n).re - spec.coeff(n)).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn psi_indicator_coefficients() {
        let s = psi_indicator(0.1, 2, 50).unwrap();
        assert_eq!(s.get(0).re, 1.0);
        assert!((s.get(10).re - 2.0 / PI).abs() < 1e-12);
        assert!((0.63662 - 2.0 / PI).abs() < 1e-5);
        assert_eq!(psi_indicator(0.1, 3, 50).unwrap().get(4).re, 0.0);
    }

    #[test]
    fn f_m_mean_is_one() {
        let f = f_m(0.05, &[1, 41, 83], 2000).unwrap();
        assert!((f.get(0).re - 1.0).abs() < 1e-15);
        let direct = (psi_indicator(0.05, 1, 2000).unwrap().get(12 * 41).re
            + psi_indicator(0.05, 41, 2000).unwrap().get(12 * 41).re)
            / 3.0;
        assert!((f.get(12 * 41).re - direct).abs() < 1e-15);
        assert_eq!(f_m(0.05, &[3], 60).unwrap().get(6), psi_indicator(0.05, 3, 20).unwrap().get(6));
        assert!(f_m(0.05, &[3, 3], 4).is_err());
    }
}
