//! Nonnegative densities `h_n = Π_{j≤n} (1 − ψ_j(N_j t))` supported in `E`,
//! with a ledger of uniform `A_r` bounds.
//!
//! Each factor is truncated at `|n| ≤ B_j` with an `A_1` tail below
//! [`FACTOR_TAIL`]. Dilations are chosen lacunary, `N_{k+1} ≥ 2R_k + 1` with
//! `R_k = Σ_{j≤k} N_j B_j`, so every frequency of the truncated product has a
//! unique digit expansion `Σ N_j n_j` and `‖Π ã_j‖_r^r = Π ‖ã_j‖_r^r` exactly.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bumps::{psi_coeff, psi_value, BumpSpec};
use crate::error::{invalid, Error, Result};
use crate::geometry::{CompactSet, Generation};
use crate::numeric::frac_mul;
use crate::spectrum::{ap_norm, DecayCertificate, NormInterval, NormRequest, SpectralSequence};

/// `A_1` tail budget per truncated factor.
pub const FACTOR_TAIL: f64 = 1e-14;
/// Relative slack for float summation of coefficient powers.
const SUM_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityConfig {
    pub r: f64,
    pub eps0: f64,
    pub l: u32,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self { r: 1.5, eps0: 0.25, l: 4 }
    }
}

/// `a = 1 − ψ_j`, truncated at `|n| ≤ B` (even, real coefficients).
#[derive(Debug, Clone)]
pub struct Factor {
    pub n: u128,
    pub delta: f64,
    eps0: f64,
    l: u32,
    /// `ã(0..=B)`.
    coeffs: Vec<f64>,
    psi_tail: DecayCertificate,
}

impl Factor {
    pub fn new(delta: f64, eps0: f64, l: u32) -> Result<Self> {
        let spec = BumpSpec::psi_j(delta, eps0, l)?;
        let cert = spec.certificate();
        let b = truncation_for(&cert, FACTOR_TAIL)?;
        let coeffs = (0..=b)
            .map(|n| {
                let c = psi_coeff(delta, eps0, l, n as f64);
                if n == 0 {
                    1.0 - c
                } else {
                    -c
                }
            })
            .collect();
        Ok(Self { n: 1, delta, eps0, l, coeffs, psi_tail: cert })
    }

    pub fn truncation(&self) -> u64 {
        self.coeffs.len() as u64 - 1
    }

    pub fn coeff(&self, n: i64) -> f64 {
        self.coeffs.get(n.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    /// `Σ_{|n|≤B} |ã(n)|^r`.
    fn power_sum(&self, r: f64) -> f64 {
        self.coeffs[0].abs().powf(r) + 2.0 * self.coeffs[1..].iter().map(|c| c.abs().powf(r)).sum::<f64>()
    }

    /// Upper bound on `‖a − ã‖_{A_r}`.
    fn tail_norm(&self, r: f64) -> Result<f64> {
        Ok(self.psi_tail.tail_sum(self.truncation(), r)?.powf(1.0 / r))
    }

    /// `‖a‖_{A_r}` as an interval.
    pub fn norm(&self, r: f64) -> Result<NormInterval> {
        let s = self.power_sum(r);
        let lower = (s * (1.0 - SUM_SLACK)).powf(1.0 / r);
        let upper = (s * (1.0 + SUM_SLACK) + self.psi_tail.tail_sum(self.truncation(), r)?).powf(1.0 / r);
        Ok(NormInterval { lower, upper, certified: true })
    }

    /// `1 − ψ(frac(N t))`, exact in closed form.
    pub fn value(&self, t: f64) -> f64 {
        let x = crate::bumps::centered(frac_mul(self.n, t.rem_euclid(1.0)));
        1.0 - psi_value(x, self.delta, self.eps0, self.l)
    }

    /// `1 − ψ(x)` before dilation.
    pub fn profile(&self, x: f64) -> f64 {
        1.0 - psi_value(crate::bumps::centered(x), self.delta, self.eps0, self.l)
    }

    /// Truncated spectrum as a sequence with the `ψ` tail certificate.
    pub fn spectrum(&self) -> SpectralSequence {
        let b = self.truncation();
        SpectralSequence::dense(b, |n| Complex64::new(self.coeff(n), 0.0)).with_tail(self.psi_tail)
    }
}

/// Smallest `B` with certified tail `Σ_{|n|>B}` below `level`.
fn truncation_for(cert: &DecayCertificate, level: f64) -> Result<u64> {
    let beta = cert.exponent;
    let guess = ((2.0 * cert.constant / ((beta - 1.0) * level)).ln() / (beta - 1.0)).exp();
    if !(guess < 1e9) {
        return Err(Error::Resolution(format!("factor truncation {guess:.3e} too large")));
    }
    let mut hi = guess.ceil() as u64 + 2;
    while cert.tail_sum(hi, 1.0)? > level {
        hi += hi / 8 + 1;
    }
    let mut lo = 0;
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if cert.tail_sum(mid, 1.0)? <= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `Π_k ã_k(N_k t)` with lacunary dilations.
#[derive(Debug, Clone, Default)]
pub struct LacunaryProduct {
    factors: Vec<Factor>,
    reach: u128,
}

impl LacunaryProduct {
    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// `R = Σ N_j B_j`, the largest frequency of the truncated product.
    pub fn reach(&self) -> u128 {
        self.reach
    }

    /// Smallest dilation keeping the digit expansion unique.
    pub fn min_next_dilation(&self) -> Result<u128> {
        self.reach
            .checked_mul(2)
            .and_then(|x| x.checked_add(1))
            .ok_or_else(|| Error::Overflow("dilation floor exceeds u128".into()))
    }

    pub fn push(&mut self, mut factor: Factor, n: u128) -> Result<()> {
        if n < self.min_next_dilation()? {
            return Err(Error::Precondition(format!("dilation {n} breaks lacunarity (R = {})", self.reach)));
        }
        let reach = (factor.truncation() as u128)
            .checked_mul(n)
            .and_then(|x| x.checked_add(self.reach))
            .ok_or_else(|| Error::Overflow("product reach exceeds u128".into()))?;
        factor.n = n;
        self.factors.push(factor);
        self.reach = reach;
        Ok(())
    }

    /// `h(t)` of the untruncated product.
    pub fn value(&self, t: f64) -> f64 {
        self.factors.iter().map(|f| f.value(t)).product()
    }

    /// Coefficient of the truncated product at `m`, by digit expansion.
    pub fn coeff(&self, m: i128) -> f64 {
        let mut rest = m;
        let mut acc = 1.0;
        for f in self.factors.iter().rev() {
            let n = f.n as i128;
            let digit = (rest + rest.signum() * (n / 2)) / n;
            if digit.unsigned_abs() > f.truncation() as u128 {
                return 0.0;
            }
            acc *= f.coeff(digit as i64);
            rest -= digit * n;
        }
        if rest == 0 {
            acc
        } else {
            0.0
        }
    }

    /// Upper bound on `‖h − Π ã_j‖_{A_r}` by telescoping:
    /// `Σ_k ‖b_k‖_{A_r} Π_{j<k} ‖ã_j‖_{A_1} Π_{j>k} ‖a_j‖_{A_1}`.
    pub fn truncation_error(&self, r: f64) -> Result<f64> {
        let trunc_a1: Vec<f64> = self.factors.iter().map(|f| f.power_sum(1.0) * (1.0 + SUM_SLACK)).collect();
        let full_a1: Vec<f64> = self
            .factors
            .iter()
            .zip(&trunc_a1)
            .map(|(f, t)| Ok(t + f.tail_norm(1.0)?))
            .collect::<Result<_>>()?;
        let mut total = 0.0;
        for (k, f) in self.factors.iter().enumerate() {
            let before: f64 = trunc_a1[..k].iter().product();
            let after: f64 = full_a1[k + 1..].iter().product();
            total += f.tail_norm(r)? * before * after;
        }
        Ok(total)
    }

    /// `‖h‖_{A_r}` as an interval.
    pub fn norm(&self, r: f64) -> Result<NormInterval> {
        let exact: f64 = self.factors.iter().map(|f| f.power_sum(r).powf(1.0 / r)).product();
        let slack = (1.0 + SUM_SLACK).powi(self.factors.len() as i32) - 1.0;
        let err = self.truncation_error(r)?;
        Ok(NormInterval {
            lower: (exact * (1.0 - slack) - err).max(0.0),
            upper: exact * (1.0 + slack) + err,
            certified: true,
        })
    }

    /// `ĥ(0)` of the truncated product and the `A_1` truncation error.
    pub fn mean(&self) -> Result<(f64, f64)> {
        Ok((self.factors.iter().map(|f| f.coeff(0)).product(), self.truncation_error(1.0)?))
    }

    /// Upper bound on `Σ_{|m|≥N} |ĥ(m)|`; exact up to truncation once `N > R`.
    pub fn tail_mass(&self, n: u128) -> Result<f64> {
        let err = self.truncation_error(1.0)?;
        if n > self.reach {
            Ok(err)
        } else {
            Ok(self.norm(1.0)?.upper)
        }
    }

    /// Truncated product coefficients on `|m| ≤ K`, with the truncation error
    /// recorded as a uniform coefficient error.
    pub fn spectrum(&self, k: u64) -> Result<SpectralSequence> {
        let err = self.truncation_error(1.0)?;
        Ok(SpectralSequence::dense(k, |m| Complex64::new(self.coeff(m as i128), 0.0)).with_coeff_error(err))
    }
}

/// One accepted step of the density construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub j: usize,
    #[serde(rename = "N")]
    pub n: u128,
    pub delta: f64,
    pub norm_lower: f64,
    pub norm_upper: f64,
    /// `‖1 − ψ_j‖_{A_r}` upper bound.
    pub factor_upper: f64,
    /// `Σ_{|n|≥N_{j+1}} |ĥ_j(n)| / ‖h_j‖_{A_r}`; absent for the last step.
    pub gamma: Option<f64>,
    /// `exp(Σ_{i<j} δ_i) exp(c Σ_{i≤j} δ_i^{r-1})`.
    pub cap: f64,
    /// The same cap with exponent `(r-1)/r` and its own constant.
    pub cap_alt: f64,
    /// Almost-orthogonality replay for `(1 − ψ_j, h_{j-1})`, with `γ = δ_{j-1}`.
    pub ao_ratio: Option<f64>,
    pub ao_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormLedger {
    pub r: f64,
    /// `max_j log‖1−ψ_j‖_{A_r}/δ_j^{r-1}`.
    pub c: f64,
    /// `max_j log‖1−ψ_j‖_{A_r}/δ_j^{(r-1)/r}`.
    pub c_alt: f64,
    pub rows: Vec<LedgerRow>,
}

impl NormLedger {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|row| {
            row.norm_upper <= row.cap && row.ao_ok && row.gamma.map_or(true, |g| g <= row.delta)
        })
    }
}

/// Output of [`build_density`].
#[derive(Debug, Clone)]
pub struct Density {
    pub product: LacunaryProduct,
    pub set: CompactSet,
    pub ledgers: Vec<NormLedger>,
    pub config: DensityConfig,
}

impl Density {
    /// `h` on the uniform grid of size `grid`.
    pub fn samples(&self, grid: usize) -> Vec<f64> {
        (0..grid).map(|i| self.product.value(i as f64 / grid as f64)).collect()
    }

    /// `sup |h|` over the removed arcs `(k + I(δ_j))/N_j`.
    ///
    /// Every factor lies in `[0,1]`, so `|h| ≤ |1 − ψ_j|` there and the
    /// undilated profile is sampled at `per_arc` points of `I(δ_j)`. Arcs of
    /// factors with `N_j ≤ 2^20` are also sampled through `h` itself.
    pub fn excluded_sup(&self, per_arc: usize) -> f64 {
        let mut sup = 0f64;
        for f in &self.product.factors {
            for i in 0..per_arc {
                let x = f.delta * ((i as f64 + 0.5) / per_arc as f64 - 0.5);
                sup = sup.max(f.profile(x).abs());
                if f.n <= 1 << 20 {
                    for k in [0, f.n / 3, f.n - 1] {
                        let t = (k as f64 + x) / f.n as f64;
                        sup = sup.max(self.product.value(t).abs());
                    }
                }
            }
        }
        sup
    }

    /// `Π (1 − (1+ε₀)δ_j)`, the exact mean of the truncated product.
    pub fn mean_floor(&self) -> f64 {
        self.product.factors.iter().map(|f| 1.0 - (1.0 + self.config.eps0) * f.delta).product()
    }
}

/// Smallest `N ≥ N_min` with certified `Σ_{|n|≥N} |ĥ(n)| ≤ gate · ‖h‖_{A_r,lower}`.
///
/// Doubles from `N_min` until the tail passes, then bisects for the minimum.
pub fn select_next_n(h: &SpectralSequence, r: f64, gate: f64, n_min: u64) -> Result<u64> {
    let norm = ap_norm(h, NormRequest::new(r, h.truncation())?)?;
    let target = gate * norm.lower;
    let tail = |n: u64| spectral_tail(h, n);
    let mut hi = n_min.max(1);
    while tail(hi)? > target {
        if hi > h.truncation().saturating_mul(4).max(1 << 40) {
            return Err(Error::SearchExhausted("certificate too weak; increase K".into()));
        }
        hi *= 2;
    }
    let mut lo = n_min.max(1);
    if lo == hi {
        return Ok(hi);
    }
    // tail(lo) > target here unless lo == hi.
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if tail(mid)? <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Certified `Σ_{|n|≥N} |ĉ(n)|` from stored entries, coefficient error and tail.
pub fn spectral_tail(h: &SpectralSequence, n: u64) -> Result<f64> {
    let k = h.truncation();
    let stored: f64 = h
        .entries()
        .iter()
        .filter(|(m, _)| m.unsigned_abs() >= n)
        .map(|(_, c)| c.norm() + h.coeff_error())
        .sum();
    let missing = if n <= k {
        let present = h.entries().iter().filter(|(m, _)| m.unsigned_abs() >= n).count() as f64;
        (2.0 * (k - n + 1) as f64 - present).max(0.0) * h.coeff_error()
    } else {
        0.0
    };
    let beyond = match h.tail() {
        Some(t) => t.tail_sum(k.max(n.saturating_sub(1)), 1.0)?,
        None if h.coeff_error() == 0.0 => 0.0,
        None => return Err(invalid("sequence without tail certificate")),
    };
    Ok(stored + missing + beyond)
}

/// Outcome of an almost-orthogonality check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AoOutcome {
    /// The hypothesis holds; `ratio = ‖ψ_N φ‖/(‖ψ‖‖φ‖)` and whether `ratio ≤ e^γ`.
    Checked { holds: bool, ratio: f64 },
    /// `Σ_{|n|≥N} |φ̂(n)| > γ‖φ‖_{A_r}`: not a violation of the lemma.
    Inconclusive { tail_ratio: f64 },
}

/// `‖ψ_N φ‖_{A_r} ≤ e^γ ‖ψ‖_{A_r} ‖φ‖_{A_r}` for finitely supported `ψ, φ`.
pub fn check_almost_orthogonality(psi: &SpectralSequence, phi: &SpectralSequence, n: u64, gamma: f64, r: f64) -> Result<AoOutcome> {
    for s in [psi, phi] {
        if s.tail().is_some_and(|t| !t.is_exact()) || s.coeff_error() > 0.0 {
            return Err(invalid("almost-orthogonality check needs finitely supported sequences"));
        }
    }
    if n == 0 {
        return Err(invalid("dilation must be positive"));
    }
    let req = NormRequest::new(r, 1)?;
    let phi_norm = ap_norm(phi, req)?.lower;
    let psi_norm = ap_norm(psi, req)?.lower;
    let tail: f64 = phi.entries().iter().filter(|(m, _)| m.unsigned_abs() >= n).map(|(_, c)| c.norm()).sum();
    if tail > gamma * phi_norm * (1.0 + 1e-12) {
        return Ok(AoOutcome::Inconclusive { tail_ratio: tail / phi_norm });
    }
    if psi.entries().len().saturating_mul(phi.entries().len()) > 50_000_000 {
        return Err(invalid("product too large for direct convolution"));
    }
    let mut prod: BTreeMap<i128, Complex64> = BTreeMap::new();
    for &(a, ca) in psi.entries() {
        for &(b, cb) in phi.entries() {
            *prod.entry(a as i128 * n as i128 + b as i128).or_default() += ca * cb;
        }
    }
    let norm = prod.values().map(|c| c.norm().powf(r)).sum::<f64>().powf(1.0 / r);
    let ratio = norm / (psi_norm * phi_norm);
    Ok(AoOutcome::Checked { holds: ratio <= gamma.exp() * (1.0 + 1e-12), ratio })
}

/// Increasing `g` with `g(t)/t^{r-1} → 0` as `t ↓ 0` for every `r ∈ (1,2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RefinementGauge {
    /// `exp(−log² t)`.
    ExpLogSquared,
    /// `t^s`; admissible only as `s → 1`, kept for comparisons.
    Power(f64),
}

impl RefinementGauge {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            RefinementGauge::ExpLogSquared => (-t.ln().powi(2)).exp(),
            RefinementGauge::Power(s) => t.powf(*s),
        }
    }

    pub fn ratio(&self, t: f64, r: f64) -> f64 {
        self.eval(t) / t.powf(r - 1.0)
    }
}

fn check_budget(deltas: &[f64], cfg: &DensityConfig) -> Result<()> {
    if !(cfg.r > 1.0 && cfg.r < 2.0) {
        return Err(invalid(format!("r = {} outside (1,2)", cfg.r)));
    }
    if !(cfg.eps0 > 0.0 && cfg.eps0 < 1.0) || cfg.l < 2 {
        return Err(invalid("need 0 < eps0 < 1 and l >= 2"));
    }
    let total: f64 = deltas.iter().map(|d| (1.0 + 2.0 * cfg.eps0) * d).sum();
    if total >= 1.0 {
        return Err(invalid(format!("sum of (1+2 eps0) delta_j = {total} must stay below 1")));
    }
    Ok(())
}

/// Builds `h_n` for `n = deltas.len()` with a ledger for each `r`.
pub fn build_density(deltas: &[f64], cfg: DensityConfig) -> Result<Density> {
    build_for_exponents(deltas, cfg, &[cfg.r])
}

/// One `h` whose ledgers are checked simultaneously for every `r` in `r_list`.
pub fn build_intersection_density(
    deltas: &[f64],
    gauge: RefinementGauge,
    r_list: &[f64],
    cfg: DensityConfig,
) -> Result<(Density, f64)> {
    let gauge_sum: f64 = deltas.iter().map(|&d| gauge.eval(d)).sum();
    if !gauge_sum.is_finite() {
        return Err(invalid("gauge series is not finite"));
    }
    Ok((build_for_exponents(deltas, cfg, r_list)?, gauge_sum))
}

fn build_for_exponents(deltas: &[f64], cfg: DensityConfig, r_list: &[f64]) -> Result<Density> {
    for &r in r_list {
        check_budget(deltas, &DensityConfig { r, ..cfg })?;
    }
    let mut product = LacunaryProduct::default();
    let mut steps: Vec<Vec<(NormInterval, NormInterval)>> = vec![Vec::new(); r_list.len()];
    let mut gammas: Vec<Vec<f64>> = vec![Vec::new(); r_list.len()];
    let mut prev_norms: Vec<Option<NormInterval>> = vec![None; r_list.len()];
    for (k, &delta) in deltas.iter().enumerate() {
        let factor = Factor::new(delta, cfg.eps0, cfg.l)?;
        let n = if k == 0 {
            1
        } else {
            // Gate with δ_{k-1} against every r; beyond the reach the tail is
            // truncation error only, so the lacunary floor is the minimum.
            let floor = product.min_next_dilation()?.max(product.factors.last().map_or(1, |f| f.n + 1));
            let tail = product.tail_mass(floor)?;
            for (i, &r) in r_list.iter().enumerate() {
                let norm = prev_norms[i].expect("previous step norm");
                let gate = deltas[k - 1];
                if tail > gate * norm.lower {
                    return Err(Error::SearchExhausted(format!(
                        "step {}: tail {tail:.3e} above gate at r = {r}",
                        k + 1
                    )));
                }
                gammas[i].push(tail / norm.lower);
            }
            floor
        };
        let factor_norms: Vec<NormInterval> = r_list.iter().map(|&r| factor.norm(r)).collect::<Result<_>>()?;
        product.push(factor, n)?;
        for (i, &r) in r_list.iter().enumerate() {
            let norm = product.norm(r)?;
            steps[i].push((norm, factor_norms[i]));
            prev_norms[i] = Some(norm);
        }
    }
    let set = CompactSet::new(
        product
            .factors
            .iter()
            .map(|f| Generation::new(f.n, f.delta))
            .collect::<Result<_>>()?,
    )?;
    let ns: Vec<u128> = product.factors.iter().map(|f| f.n).collect();
    let ledgers = r_list
        .iter()
        .enumerate()
        .map(|(i, &r)| ledger(deltas, &ns, r, &steps[i], &gammas[i]))
        .collect();
    Ok(Density { product, set, ledgers, config: DensityConfig { r: r_list.first().copied().unwrap_or(cfg.r), ..cfg } })
}

fn ledger(deltas: &[f64], ns: &[u128], r: f64, steps: &[(NormInterval, NormInterval)], gammas: &[f64]) -> NormLedger {
    let constant = |exp: f64| {
        steps
            .iter()
            .zip(deltas)
            .map(|((_, f), d)| f.upper.ln() / d.powf(exp))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let c = constant(r - 1.0);
    let c_alt = constant((r - 1.0) / r);
    let mut rows = Vec::with_capacity(steps.len());
    let (mut sum_delta_prev, mut sum_pow, mut sum_pow_alt) = (0.0, 0.0, 0.0);
    for (k, (norm, factor)) in steps.iter().enumerate() {
        let d = deltas[k];
        sum_pow += d.powf(r - 1.0);
        sum_pow_alt += d.powf((r - 1.0) / r);
        let (ao_ratio, ao_ok) = if k == 0 {
            (None, norm.upper <= factor.upper * (1.0 + 1e-12))
        } else {
            let prev = steps[k - 1].0;
            let ratio = norm.upper / (factor.lower * prev.lower);
            (Some(ratio), ratio <= deltas[k - 1].exp())
        };
        rows.push(LedgerRow {
            j: k + 1,
            n: ns[k],
            delta: d,
            norm_lower: norm.lower,
            norm_upper: norm.upper,
            factor_upper: factor.upper,
            gamma: gammas.get(k).copied(),
            cap: (sum_delta_prev + c * sum_pow).exp(),
            cap_alt: (sum_delta_prev + c_alt * sum_pow_alt).exp(),
            ao_ratio,
            ao_ok,
        });
        sum_delta_prev += d;
    }
    NormLedger { r, c, c_alt, rows }
}

/// `δ_j = base · 2^{-j}`, `j = 1..=steps`.
pub fn geometric_deltas(base: f64, steps: usize) -> Vec<f64> {
    (1..=steps).map(|j| base * 0.5f64.powi(j as i32)).collect()
}
