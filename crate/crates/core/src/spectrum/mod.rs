//! Truncated Fourier sequences with certified tails, interval-valued `A_p` norms,
//! pairings and power-series traces.

pub mod nufft;

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{fmt17, ln_power_tail};

/// `|ĉ(n)| ≤ C·(|n|/stride)^{-β}` for `|n|` beyond the truncation, and `ĉ(n) = 0`
/// when `stride ∤ n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub constant: f64,
    pub exponent: f64,
    #[serde(default = "one")]
    pub stride: u64,
}

fn one() -> u64 {
    1
}

impl DecayCertificate {
    pub fn new(constant: f64, exponent: f64) -> Self {
        Self { constant, exponent, stride: 1 }
    }

    /// The zero tail of a trigonometric polynomial.
    pub fn exact() -> Self {
        Self::new(0.0, 0.0)
    }

    pub fn is_exact(&self) -> bool {
        self.constant == 0.0
    }

    pub fn dilated(&self, n: u64) -> Self {
        Self { stride: self.stride * n, ..*self }
    }

    pub fn bound(&self, n: i64) -> f64 {
        let s = self.stride as i64;
        if self.is_exact() || n % s != 0 {
            return 0.0;
        }
        if n == 0 {
            return self.constant;
        }
        self.constant * ((n / s).unsigned_abs() as f64).powf(-self.exponent)
    }

    /// Rigorous bound on `Σ_{|n| > k} bound(n)^p`.
    pub fn tail_sum(&self, k: u64, p: f64) -> Result<f64> {
        if self.is_exact() {
            return Ok(0.0);
        }
        let s = self.exponent * p;
        if s <= 1.0 {
            return Err(Error::DivergentTail(s));
        }
        let k0 = k / self.stride + 1;
        Ok(2.0 * (p * self.constant.ln() + ln_power_tail(s, k0)).exp())
    }

    /// Same constant and exponent with the stride folded into the constant, so
    /// the bound holds at every nonzero `n`.
    pub fn flattened(&self) -> Self {
        Self::new(self.constant * (self.stride as f64).powf(self.exponent), self.exponent)
    }
}

/// Two-sided coefficients on `[-K, K]` (zeros may be omitted) plus an optional
/// certified tail and a uniform additive error on the stored values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralSequence {
    truncation: u64,
    entries: Vec<(i64, Complex64)>,
    tail: Option<DecayCertificate>,
    #[serde(default)]
    coeff_error: f64,
}

impl SpectralSequence {
    /// Sparse constructor; entries are sorted and must be unique and in range.
    pub fn from_entries(truncation: u64, mut entries: Vec<(i64, Complex64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(invalid("duplicate frequency"));
        }
        if entries.iter().any(|e| e.0.unsigned_abs() > truncation) {
            return Err(invalid("frequency beyond truncation"));
        }
        Ok(Self { truncation, entries, tail: None, coeff_error: 0.0 })
    }

    /// All frequencies `|n| ≤ K`, evaluated by `f`.
    pub fn dense(truncation: u64, f: impl Fn(i64) -> Complex64) -> Self {
        let k = truncation as i64;
        Self {
            truncation,
            entries: (-k..=k).map(|n| (n, f(n))).collect(),
            tail: None,
            coeff_error: 0.0,
        }
    }

    /// Real even sequence from its values at `n = 0..=K`.
    pub fn from_even(values: &[f64]) -> Self {
        let k = values.len() as i64 - 1;
        let entries = (-k..=k)
            .map(|n| (n, Complex64::new(values[n.unsigned_abs() as usize], 0.0)))
            .collect();
        Self { truncation: k.max(0) as u64, entries, tail: None, coeff_error: 0.0 }
    }

    pub fn with_tail(mut self, tail: DecayCertificate) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn with_coeff_error(mut self, err: f64) -> Self {
        self.coeff_error = err;
        self
    }

    pub fn truncation(&self) -> u64 {
        self.truncation
    }

    pub fn tail(&self) -> Option<&DecayCertificate> {
        self.tail.as_ref()
    }

    pub fn coeff_error(&self) -> f64 {
        self.coeff_error
    }

    pub fn entries(&self) -> &[(i64, Complex64)] {
        &self.entries
    }

    pub fn get(&self, n: i64) -> Complex64 {
        match self.entries.binary_search_by_key(&n, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// `c ↦ c(·/N)`: the coefficients of `f(N t)`.
    pub fn dilate(&self, n: u64) -> Result<Self> {
        let nn = i64::try_from(n).map_err(|_| Error::Overflow("dilation".into()))?;
        let truncation = self
            .truncation
            .checked_mul(n)
            .filter(|&k| k <= i64::MAX as u64)
            .ok_or_else(|| Error::Overflow("dilated truncation".into()))?;
        Ok(Self {
            truncation,
            entries: self.entries.iter().map(|&(k, c)| (k * nn, c)).collect(),
            tail: self.tail.map(|t| t.dilated(n)),
            coeff_error: self.coeff_error,
        })
    }

    /// Whether `c(-n) = conj(c(n))` within `tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.entries.iter().all(|&(n, c)| (self.get(-n) - c.conj()).norm() <= tol)
    }

    /// Writes `n,re,im` rows.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "n,re,im")?;
        for &(n, c) in &self.entries {
            writeln!(w, "{n},{},{}", fmt17(c.re), fmt17(c.im))?;
        }
        Ok(())
    }

    /// The tail certificate sidecar.
    pub fn tail_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            truncation: u64,
            coeff_error: f64,
            tail: Option<&'a DecayCertificate>,
        }
        Ok(serde_json::to_string_pretty(&Sidecar {
            truncation: self.truncation,
            coeff_error: self.coeff_error,
            tail: self.tail.as_ref(),
        })?)
    }
}

/// Exponent and truncation for an `A_p` norm evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRequest {
    pub p: f64,
    pub truncation: u64,
}

impl NormRequest {
    pub fn new(p: f64, truncation: u64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(invalid(format!("exponent p = {p} must lie in [1, ∞)")));
        }
        Ok(Self { p, truncation })
    }
}

/// Hölder conjugate `p/(p-1)`.
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// An interval `[lower, upper]` for a norm; `certified` is false when the tail
/// beyond the stored range is unknown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormInterval {
    pub lower: f64,
    pub upper: f64,
    pub certified: bool,
}

impl NormInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `‖c‖_{ℓ^p}` as an interval: `lower` sums `|n| ≤ K`, `upper` adds the rest of
/// the stored range and the certified tail beyond it.
pub fn ap_norm(seq: &SpectralSequence, req: NormRequest) -> Result<NormInterval> {
    let p = req.p;
    let k = req.truncation.min(seq.truncation);
    let e = seq.coeff_error;
    let (mut lo, mut hi) = (0.0, 0.0);
    for &(n, c) in &seq.entries {
        let a = c.norm();
        let up = (a + e).powf(p);
        hi += up;
        if n.unsigned_abs() <= k {
            lo += (a - e).max(0.0).powf(p);
        }
    }
    // Frequencies with no stored entry still carry the additive error.
    let missing = (2 * seq.truncation + 1).saturating_sub(seq.entries.len() as u64);
    if e > 0.0 {
        hi += missing as f64 * e.powf(p);
    }
    let certified = seq.tail.is_some();
    if let Some(t) = &seq.tail {
        hi += t.tail_sum(seq.truncation, p)?;
    }
    Ok(NormInterval { lower: lo.powf(1.0 / p), upper: hi.powf(1.0 / p), certified })
}

/// `Σ_n f̂(n)·conj(ĝ(n))` over the common range with a rigorous error term;
/// the error is `None` when a needed tail certificate is missing.
pub fn pairing(f: &SpectralSequence, g: &SpectralSequence) -> (Complex64, Option<f64>) {
    let kc = f.truncation.min(g.truncation);
    let mut value = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut i = 0;
    let mut j = 0;
    while i < f.entries.len() && j < g.entries.len() {
        let (nf, cf) = f.entries[i];
        let (ng, cg) = g.entries[j];
        match nf.cmp(&ng) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if nf.unsigned_abs() <= kc {
                    value += cf * cg.conj();
                    err += f.coeff_error * cg.norm() + g.coeff_error * cf.norm() + f.coeff_error * g.coeff_error;
                }
                i += 1;
                j += 1;
            }
        }
    }
    let (long, short) = if f.truncation >= g.truncation { (f, g) } else { (g, f) };
    let mut tail_known = true;
    if long.truncation > short.truncation {
        match short.tail {
            Some(t) => {
                for &(n, c) in &long.entries {
                    if n.unsigned_abs() > kc {
                        err += (c.norm() + long.coeff_error) * t.bound(n);
                    }
                }
            }
            None => tail_known = false,
        }
    }
    match (f.tail, g.tail) {
        (Some(a), Some(b)) => {
            let (a, b) = (a.flattened(), b.flattened());
            let prod = DecayCertificate::new(a.constant * b.constant, a.exponent + b.exponent);
            match prod.tail_sum(long.truncation, 1.0) {
                Ok(t) => err += t,
                Err(_) => tail_known = false,
            }
        }
        _ => {
            if !(f.tail.is_some_and(|t| t.is_exact()) || g.tail.is_some_and(|t| t.is_exact())) {
                tail_known = false;
            }
        }
    }
    (value, tail_known.then_some(err))
}

/// Smoothness declaration for sampled functions: the quadrature error of each
/// coefficient is at most `constant·G^{-order}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothness {
    pub order: f64,
    pub constant: f64,
}

/// Coefficients `|n| ≤ K` from samples `f(k/G)` by the discrete transform.
pub fn dft_sample(samples: &[f64], truncation: u64, smoothness: Option<Smoothness>) -> Result<SpectralSequence> {
    let g = samples.len();
    if !g.is_power_of_two() || (g as u64) < 2 * truncation + 2 {
        return Err(Error::GridTooSmall { grid: g, k: truncation as usize });
    }
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_forward(&mut buf);
    let scale = 1.0 / g as f64;
    let seq = SpectralSequence::dense(truncation, |n| buf[n.rem_euclid(g as i64) as usize] * scale);
    Ok(match smoothness {
        Some(s) => seq.with_coeff_error(s.constant * (g as f64).powf(-s.order)),
        None => seq,
    })
}

/// In-place forward transform `X_k = Σ_j x_j e^{-2πijk/G}`.
pub fn fft_forward(buf: &mut [Complex64]) {
    plan(buf.len(), false).process(buf);
}

/// In-place inverse transform without normalization.
pub fn fft_inverse(buf: &mut [Complex64]) {
    plan(buf.len(), true).process(buf);
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    }
}

/// Boundary trace of `Σ_{n≥0} ĉ(n) z^n` on `|z| = r`, sampled at `θ = k/G`,
/// with a bound on the omitted terms (`None` without a tail certificate).
pub fn cauchy_transform_trace(seq: &SpectralSequence, r: f64, grid: usize) -> Result<(Vec<Complex64>, Option<f64>)> {
    if !(r > 0.0 && r < 1.0) {
        return Err(invalid(format!("radius {r} must lie in (0,1)")));
    }
    if grid == 0 {
        return Err(invalid("empty grid"));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); grid];
    let mut rn = 1.0;
    let mut last = 0i64;
    for &(n, c) in seq.entries.iter().filter(|e| e.0 >= 0) {
        rn *= r.powi((n - last) as i32);
        last = n;
        buf[n as usize % grid] += c * rn;
    }
    fft_inverse(&mut buf);
    let err = seq.tail.map(|t| {
        let t = t.flattened();
        let k = seq.truncation as f64;
        // bound(n) ≤ C for n ≥ 1, so the tail is at most C r^{K+1}/(1-r) plus stored errors.
        t.constant * r.powf(k + 1.0) / (1.0 - r) + seq.coeff_error / (1.0 - r)
    });
    Ok((buf, err))
}

/// Fejér mean `σ_K`: coefficients damped by `(1 - |n|/(K+1))_+`.
pub fn fejer_mean(seq: &SpectralSequence, k: u64) -> SpectralSequence {
    let w = (k + 1) as f64;
    let entries = seq
        .entries
        .iter()
        .filter(|e| e.0.unsigned_abs() <= k)
        .map(|&(n, c)| (n, c * (1.0 - n.unsigned_abs() as f64 / w)))
        .collect();
    SpectralSequence { truncation: k, entries, tail: Some(DecayCertificate::exact()), coeff_error: seq.coeff_error }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::sinc;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn constant_and_character_samples() {
        let one = dft_sample(&vec![1.0; 64], 10, None).unwrap();
        assert!((one.get(0) - c(1.0)).norm() < 1e-14);
        assert!(one.entries().iter().filter(|e| e.0 != 0).all(|e| e.1.norm() < 1e-14));

        let g = 64;
        let mut buf: Vec<Complex64> =
            (0..g).map(|k| Complex64::from_polar(1.0, 2.0 * PI * 3.0 * k as f64 / g as f64)).collect();
        fft_forward(&mut buf);
        assert!((buf[3] / g as f64 - c(1.0)).norm() < 1e-14);
        assert!(dft_sample(&[0.0; 60], 4, None).is_err());
        assert!(matches!(dft_sample(&[0.0; 16], 8, None), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn indicator_against_closed_form() {
        let g = 1 << 16;
        let delta = 0.5;
        let samples: Vec<f64> = (0..g)
            .map(|k| {
                let t = k as f64 / g as f64;
                let d = t.min(1.0 - t);
                if d < delta / 2.0 {
                    1.0
                } else if d == delta / 2.0 {
                    0.5
                } else {
                    0.0
                }
            })
            .collect();
        let seq = dft_sample(&samples, 100, None).unwrap();
        for n in -100..=100i64 {
            let exact = delta * sinc(PI * delta * n as f64);
            assert!((seq.get(n).re - exact).abs() < 1e-3, "n={n}");
        }
    }

    #[test]
    fn norm_basics() {
        let one = SpectralSequence::from_entries(0, vec![(0, c(1.0))]).unwrap().with_tail(DecayCertificate::exact());
        let n = ap_norm(&one, NormRequest::new(2.0, 0).unwrap()).unwrap();
        assert_eq!((n.lower, n.upper), (1.0, 1.0));
        let three = SpectralSequence::from_entries(1, vec![(-1, c(1.0)), (0, c(1.0)), (1, c(1.0))]).unwrap();
        let n = ap_norm(&three, NormRequest::new(1.0, 1).unwrap()).unwrap();
        assert_eq!(n.lower, 3.0);
        assert!(!n.certified);
        assert!(NormRequest::new(0.5, 1).is_err());
    }

    fn bump(delta: f64, l: i32, k: u64) -> SpectralSequence {
        SpectralSequence::dense(k, |n| c(sinc(PI * delta * n as f64 / l as f64).powi(l)))
            .with_tail(DecayCertificate::new((l as f64 / (PI * delta)).powi(l), l as f64))
    }

    #[test]
    fn bump_norm_brackets_brute_force() {
        let brute: f64 = (-100_000i64..=100_000).map(|n| sinc(PI * 0.1 * n as f64 / 4.0).powi(4).abs()).sum();
        let at_1000 = ap_norm(&bump(0.1, 4, 1000), NormRequest::new(1.0, 1000).unwrap()).unwrap();
        assert!(at_1000.lower <= brute && brute <= at_1000.upper);
        assert!(at_1000.width() < 2e-5);
        let at_3000 = ap_norm(&bump(0.1, 4, 3000), NormRequest::new(1.0, 3000).unwrap()).unwrap();
        assert!(at_3000.width() < 1e-6);
        assert!(at_3000.lower <= brute && brute <= at_3000.upper);
    }

    #[test]
    fn divergent_tail_is_rejected() {
        let s = bump(0.1, 2, 10).with_tail(DecayCertificate::new(1.0, 0.5));
        assert!(matches!(ap_norm(&s, NormRequest::new(1.5, 10).unwrap()), Err(Error::DivergentTail(_))));
    }

    #[test]
    fn pairing_orthogonality_and_parseval() {
        let e3 = SpectralSequence::from_entries(5, vec![(3, c(1.0))]).unwrap().with_tail(DecayCertificate::exact());
        let e5 = SpectralSequence::from_entries(5, vec![(5, c(1.0))]).unwrap().with_tail(DecayCertificate::exact());
        assert_eq!(pairing(&e3, &e5), (c(0.0), Some(0.0)));
        let one = SpectralSequence::from_entries(0, vec![(0, c(1.0))]).unwrap().with_tail(DecayCertificate::exact());
        assert_eq!(pairing(&one, &one).0, c(1.0));

        // <1_I, 1_I> = δ; the indicator tail is |ĉ(n)| ≤ 1/(π|n|).
        let delta = 0.3;
        let k = 200_000;
        let ind = SpectralSequence::dense(k, |n| c(delta * sinc(PI * delta * n as f64)))
            .with_tail(DecayCertificate::new(1.0 / PI, 1.0));
        let (v, err) = pairing(&ind, &ind);
        assert!((v.re - delta).abs() < 1e-6);
        assert!(err.unwrap() < 1e-5);
    }

    #[test]
    fn cauchy_trace_basics() {
        let one = SpectralSequence::from_entries(0, vec![(0, c(1.0))]).unwrap();
        let (v, _) = cauchy_transform_trace(&one, 0.3, 8).unwrap();
        assert!(v.iter().all(|z| (z - c(1.0)).norm() < 1e-15));
        let z1 = SpectralSequence::from_entries(1, vec![(1, c(1.0))]).unwrap();
        let (v, _) = cauchy_transform_trace(&z1, 0.5, 16).unwrap();
        for (k, z) in v.iter().enumerate() {
            let want = Complex64::from_polar(0.5, 2.0 * PI * k as f64 / 16.0);
            assert!((z - want).norm() < 1e-15);
        }
        assert!(cauchy_transform_trace(&z1, 1.0, 16).is_err());
    }

    #[test]
    fn fejer_mean_damps_linearly() {
        let s = SpectralSequence::dense(10, |_| c(1.0));
        let f = fejer_mean(&s, 3);
        assert_eq!(f.get(0), c(1.0));
        assert_eq!(f.get(2), c(0.5));
        assert_eq!(f.get(4), c(0.0));
        assert_eq!(f.truncation(), 3);
    }

    #[test]
    fn dilation_moves_support_to_multiples() {
        let s = bump(0.1, 4, 50).dilate(5).unwrap();
        assert_eq!(s.get(7), c(0.0));
        assert_eq!(s.get(10), bump(0.1, 4, 50).get(2));
        assert_eq!(s.tail().unwrap().bound(7), 0.0);
    }
}
