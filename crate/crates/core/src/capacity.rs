//! Two-sided estimates of the `ℓ^p` Fourier capacity: primal upper bounds
//! from functions equal to 1 on `E`, dual lower bounds from bumps supported
//! in `E`, and the averaging scheme `f_M` that drives the capacity to 0.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bumps::{phi_delta_l_coeff, BumpSpec};
use crate::error::{invalid, Error, Result};
use crate::geometry::{CompactSet, Generation, MAX_REALIZED_ARCS};
use crate::numeric::{frac, frac_mul, ln_power_tail, sinc};
use crate::separation::greedy_select;
use crate::spectrum::{ap_norm, conjugate, fejer_mean, NormInterval, NormRequest, SpectralSequence};

/// Grid used to verify that a primal witness is 1 on `E`.
pub const WITNESS_GRID: usize = 1 << 16;
pub const WITNESS_TOL: f64 = 1e-9;
/// Upper limit on `M` in the averaging scheme.
pub const MAX_BLOCKS: usize = 256;
/// Cap on the stored spectrum `M·K` of one approximant.
pub const MAX_SPECTRUM_TERMS: u64 = 1 << 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub p: f64,
    pub q: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_witness: String,
    pub upper_witness: String,
}

impl CapacityEstimate {
    pub fn sandwich_ok(&self) -> bool {
        self.lower <= self.upper
    }
}

/// `f_M = (1/M) Σ_j δ^{-1} 1_{U_{N_j,δ}}` with `δ = ε/M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatApproximant {
    pub delta: f64,
    pub ns: Vec<u64>,
    /// Per-block truncation `|k| ≤ K` used for norm evaluation.
    pub block_truncation: u64,
}

impl KatApproximant {
    pub fn new(delta: f64, ns: Vec<u64>, block_truncation: u64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) || ns.is_empty() || block_truncation == 0 {
            return Err(invalid("approximant needs delta in (0,1), dilations and K > 0"));
        }
        Ok(Self { delta, ns, block_truncation })
    }

    pub fn m(&self) -> usize {
        self.ns.len()
    }

    /// `f_M(t)`.
    pub fn value(&self, t: f64) -> f64 {
        let hits = self
            .ns
            .iter()
            .filter(|&&n| {
                let x = frac_mul(n as u128, frac(t));
                x.min(1.0 - x) < self.delta / 2.0
            })
            .count();
        hits as f64 / (self.m() as f64 * self.delta)
    }

    pub fn set(&self) -> Result<CompactSet> {
        CompactSet::new(self.ns.iter().map(|&n| Generation::new(n as u128, self.delta)).collect::<Result<_>>()?)
    }

    /// Nonzero coefficients of the truncated `f_M − 1`, merged by frequency.
    pub fn truncated_spectrum(&self) -> Vec<(i64, f64)> {
        let k = self.block_truncation as i64;
        let m = self.m() as f64;
        let mut entries: Vec<(i64, f64)> = Vec::with_capacity(self.ns.len() * 2 * k as usize);
        for &n in &self.ns {
            for j in (-k..=k).filter(|&j| j != 0) {
                entries.push((j * n as i64, sinc(PI * self.delta * j as f64) / m));
            }
        }
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(i64, f64)> = Vec::with_capacity(entries.len());
        for (f, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == f => last.1 += v,
                _ => merged.push((f, v)),
            }
        }
        merged
    }

    /// `‖{sinc(πδk)}_{|k|>K}‖_p ≤ (1/(πδ)) (2 Σ_{k>K} k^{-p})^{1/p}`, per block.
    pub fn block_tail(&self, p: f64) -> f64 {
        let ln = 2f64.ln() + ln_power_tail(p, self.block_truncation + 1);
        (ln / p).exp() / (PI * self.delta)
    }

    /// `‖f_M − 1‖_{A_p}` by exact summation of the truncated blocks plus the
    /// Minkowski bound on the block tails.
    pub fn norm_minus_one(&self, p: f64) -> Result<NormInterval> {
        if !(p > 1.0) {
            return Err(Error::DivergentTail(p));
        }
        let s: f64 = self.truncated_spectrum().iter().map(|(_, v)| v.abs().powf(p)).sum();
        let core = s.powf(1.0 / p);
        let tail = self.block_tail(p);
        Ok(NormInterval {
            lower: (core * (1.0 - 1e-12) - tail).max(0.0),
            upper: core * (1.0 + 1e-12) + tail,
            certified: true,
        })
    }

    /// The averaging bound `2 M^{1/p−1} δ^{-1} ‖1_{I(δ)}‖_{A_p}` (upper value).
    pub fn lemma_bound(&self, p: f64) -> Result<f64> {
        let ind = indicator_norm(self.delta, p, 100_000)?;
        Ok(2.0 * (self.m() as f64).powf(1.0 / p - 1.0) / self.delta * ind.upper)
    }
}

/// `‖1_{I(δ)}‖_{A_p}` from the closed form `δ sinc(πδn)` with tail `1/(π|n|)`.
pub fn indicator_norm(delta: f64, p: f64, k: u64) -> Result<NormInterval> {
    let seq = BumpSpec::psi_indicator(delta, 1)?.spectrum(k);
    // ψ_{δ,1} = δ^{-1} 1_{I(δ)}.
    let n = ap_norm(&seq, NormRequest::new(p, k)?)?;
    Ok(NormInterval { lower: n.lower * delta, upper: n.upper * delta, certified: n.certified })
}

/// Significant-coefficient envelope `|k| < 10/(πδ²)`, where `|sinc(πδk)| > δ/10` is possible.
pub fn significant_envelope(delta: f64) -> u64 {
    (10.0 / (PI * delta * delta)).ceil() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatScheme {
    pub epsilon: f64,
    pub p: f64,
    pub approximant: KatApproximant,
    pub envelope: u64,
    pub norm: NormInterval,
    pub lemma_bound: f64,
    /// `m(E(δ,M))` when the set is small enough to sweep.
    pub measure: Option<f64>,
    pub measure_floor: f64,
    pub achieved: bool,
}

/// Smallest `M` whose approximant certifies `‖f_M − 1‖_{A_p} ≤ ε`, by
/// doubling then bisection (the measured norm decreases with `M`).
pub fn kat_scheme(epsilon: f64, p: f64) -> Result<KatScheme> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon {epsilon} outside (0,1)")));
    }
    if !(p > 2.0) {
        return Err(invalid(format!("p = {p} must exceed 2")));
    }
    let mut failing = 0;
    let mut m = 1;
    let mut best = loop {
        let scheme = kat_stage(epsilon, p, m)?;
        if scheme.achieved {
            break scheme;
        }
        if m >= MAX_BLOCKS {
            return Err(Error::SearchExhausted(format!(
                "M = {MAX_BLOCKS} leaves ||f_M - 1||_A{p} <= {} > {epsilon}",
                scheme.norm.upper
            )));
        }
        failing = m;
        m = (2 * m).min(MAX_BLOCKS);
    };
    while m - failing > 1 {
        let mid = (m + failing) / 2;
        let scheme = kat_stage(epsilon, p, mid)?;
        if scheme.achieved {
            m = mid;
            best = scheme;
        } else {
            failing = mid;
        }
    }
    best.measure = measure_if_small(&best.approximant.set()?);
    Ok(best)
}

fn kat_stage(epsilon: f64, p: f64, m: usize) -> Result<KatScheme> {
    let delta = epsilon / m as f64;
    let envelope = significant_envelope(delta);
    let sep = greedy_select(&vec![envelope; m])?;
    // Per-block truncation: tails at most ε/100 and past the envelope.
    let mut k = 4 * envelope;
    loop {
        let a = KatApproximant::new(delta, sep.ns.clone(), k)?;
        if a.block_tail(p) <= epsilon / 100.0 {
            break;
        }
        k *= 2;
    }
    if m as u64 * k > MAX_SPECTRUM_TERMS {
        return Err(Error::Resolution(format!("M = {m} blocks truncated at K = {k} exceed {MAX_SPECTRUM_TERMS} terms")));
    }
    let approximant = KatApproximant::new(delta, sep.ns, k)?;
    let norm = approximant.norm_minus_one(p)?;
    let lemma_bound = approximant.lemma_bound(p)?;
    Ok(KatScheme {
        epsilon,
        p,
        envelope,
        achieved: norm.upper <= epsilon,
        norm,
        lemma_bound,
        measure: None,
        measure_floor: 1.0 - m as f64 * delta,
        approximant,
    })
}

fn measure_if_small(set: &CompactSet) -> Option<f64> {
    (set.arc_count() <= MAX_REALIZED_ARCS).then(|| set.measure())
}

/// Admissible primal witnesses `φ ∈ C(T)` with `φ = 1` on `E`.
#[derive(Debug, Clone, PartialEq)]
pub enum PrimalWitness {
    One,
    /// `1 − f_M`.
    Kat(KatApproximant),
}

impl PrimalWitness {
    pub fn id(&self) -> String {
        match self {
            PrimalWitness::One => "one".into(),
            PrimalWitness::Kat(a) => format!("kat(M={};delta={})", a.m(), a.delta),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            PrimalWitness::One => 1.0,
            PrimalWitness::Kat(a) => 1.0 - a.value(t),
        }
    }

    pub fn norm(&self, p: f64) -> Result<NormInterval> {
        match self {
            PrimalWitness::One => Ok(NormInterval { lower: 1.0, upper: 1.0, certified: true }),
            PrimalWitness::Kat(a) => a.norm_minus_one(p),
        }
    }
}

/// `‖φ‖_{A_p}` upper value after checking `φ = 1` on `E` over a fine grid.
pub fn primal_upper(set: &CompactSet, p: f64, witness: &PrimalWitness) -> Result<f64> {
    for i in 0..WITNESS_GRID {
        let t = i as f64 / WITNESS_GRID as f64;
        if set.contains(t) && (witness.value(t) - 1.0).abs() > WITNESS_TOL {
            return Err(Error::SupportViolation(format!("witness {} differs from 1 at t = {t}", witness.id())));
        }
    }
    Ok(witness.norm(p)?.upper)
}

/// `φ_{w,l}` translated to `center`; `ĝ(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpWitness {
    pub center: f64,
    pub width: f64,
    pub l: u32,
}

impl BumpWitness {
    pub fn id(&self) -> String {
        format!("bump(c={:.6};w={:.3e};l={})", self.center, self.width, self.l)
    }

    /// `‖g‖_{A_q}` upper value, summing `|φ̂_{w,l}(n)|^q` to `K = 10 l / w`.
    pub fn norm(&self, q: f64) -> Result<NormInterval> {
        let k = ((10.0 * self.l as f64 / self.width).ceil() as u64).max(10_000);
        if k > 1 << 31 {
            return Err(Error::Resolution(format!("bump of width {} needs K = {k}", self.width)));
        }
        let spec = BumpSpec::phi_delta_l(self.width, self.l)?;
        let cert = spec.certificate();
        let mut s = 1.0;
        for n in 1..=k {
            s += 2.0 * phi_delta_l_coeff(self.width, self.l, n as i64).abs().powf(q);
        }
        let tail = cert.tail_sum(k, q)?;
        Ok(NormInterval {
            lower: (s * (1.0 - 1e-12)).powf(1.0 / q),
            upper: (s * (1.0 + 1e-12) + tail).powf(1.0 / q),
            certified: true,
        })
    }
}

/// `|ĝ(0)| / ‖g‖_{A_q,upper}` after checking `supp g ⊆ E`.
pub fn dual_lower(set: &CompactSet, q: f64, g: &BumpWitness) -> Result<f64> {
    let half = g.width / 2.0;
    if !(g.width > 0.0 && g.width < 1.0) || g.l < 2 {
        return Err(invalid("bump witness needs width in (0,1) and l >= 2"));
    }
    if set.clearance(g.center) < half {
        return Err(Error::SupportViolation(format!("{} leaves E", g.id())));
    }
    Ok(1.0 / g.norm(q)?.upper)
}

/// The best bump in the largest gap of `E` over `l = 2..=8`.
pub fn best_dual_lower(set: &CompactSet, q: f64) -> Result<(f64, BumpWitness)> {
    let stats = set.component_stats();
    let (start, len) = stats.largest_gap.ok_or(Error::DegenerateSet)?;
    let width = (len * (1.0 - 1e-9)).min(0.999);
    let center = frac(start + len / 2.0);
    let mut best: Option<(f64, BumpWitness)> = None;
    for l in 2..=8 {
        let g = BumpWitness { center, width, l };
        let v = dual_lower(set, q, &g)?;
        if best.map_or(true, |b| v > b.0) {
            best = Some((v, g));
        }
    }
    Ok(best.expect("nonempty l range"))
}

/// Primal and dual bounds with their witnesses.
pub fn estimate(set: &CompactSet, p: f64, primal: &[PrimalWitness]) -> Result<CapacityEstimate> {
    if !(p > 2.0) {
        return Err(invalid(format!("p = {p} must exceed 2")));
    }
    let q = conjugate(p);
    let mut upper = (f64::INFINITY, String::new());
    for w in primal.iter().chain(std::iter::once(&PrimalWitness::One)) {
        let u = primal_upper(set, p, w)?;
        if u < upper.0 {
            upper = (u, w.id());
        }
    }
    let (lower, g) = if set.measure() >= 1.0 {
        (1.0, "one".to_string())
    } else {
        let (v, g) = best_dual_lower(set, q)?;
        (v, g.id())
    };
    Ok(CapacityEstimate { p, q, lower, upper: upper.0, lower_witness: g, upper_witness: upper.1 })
}

/// `⟨1 − f_M, g⟩ = Σ φ̂(n) ĝ(n)^*`, which must reproduce `∫ g = 1` for `g`
/// supported in `E`; returns the pairing and a bound on its truncation error.
pub fn duality_pairing(a: &KatApproximant, g: &BumpWitness) -> Result<(f64, f64)> {
    let spec = BumpSpec::phi_delta_l(g.width, g.l)?;
    let cert = spec.certificate();
    let mut value = 0.0;
    for (f, v) in a.truncated_spectrum() {
        let gh = phi_delta_l_coeff(g.width, g.l, f) * (2.0 * PI * frac_mul(f.unsigned_abs() as u128, g.center)).cos();
        value -= v * gh;
    }
    // Per block, |k| > K: |f̂| ≤ 1/(Mπδ|k|) and |ĝ(N k)| ≤ cert(N k).
    let mut err = 0.0;
    for &n in &a.ns {
        let ln_c = cert.constant.ln() - cert.exponent * (n as f64).ln();
        let ln_t = 2f64.ln() + ln_c + ln_power_tail(cert.exponent + 1.0, a.block_truncation + 1);
        err += ln_t.exp() / (a.m() as f64 * PI * a.delta);
    }
    Ok((value, err))
}

/// Fejér mean `σ_K φ` of a witness spectrum, with both norm intervals.
pub fn fejer_regularized(seq: &SpectralSequence, k: u64, p: f64) -> Result<(NormInterval, NormInterval)> {
    let plain = ap_norm(seq, NormRequest::new(p, seq.truncation())?)?;
    let smooth = fejer_mean(seq, k);
    let reg = ap_norm(&smooth, NormRequest::new(p, smooth.truncation())?)?;
    Ok((plain, reg))
}

/// `(J, ε_J, stage upper, best upper so far, m(E_J) or floor)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub stage: usize,
    pub epsilon: f64,
    pub stage_upper: f64,
    pub upper: f64,
    pub measure: Option<f64>,
    pub measure_floor: f64,
}

/// Capacity of `E_J = ∩_{s≤J} E(δ_s, M_s)`: each stage witness is 1 on
/// `E_J`, so the upper bound is the minimum over stages so far.
pub fn capacity_zero_trend(epsilons: &[f64], p: f64) -> Result<(Vec<TrendRow>, Vec<KatScheme>)> {
    let mut rows = Vec::with_capacity(epsilons.len());
    let mut stages = Vec::with_capacity(epsilons.len());
    let mut gens: Vec<Generation> = Vec::new();
    let mut upper = f64::INFINITY;
    let mut eps_sum = 0.0;
    for (s, &eps) in epsilons.iter().enumerate() {
        let scheme = kat_scheme(eps, p)?;
        gens.extend(scheme.approximant.ns.iter().map(|&n| Generation { n: n as u128, delta: scheme.approximant.delta }));
        eps_sum += scheme.approximant.m() as f64 * scheme.approximant.delta;
        upper = upper.min(scheme.norm.upper);
        let set = CompactSet::new(gens.clone())?;
        rows.push(TrendRow {
            stage: s + 1,
            epsilon: eps,
            stage_upper: scheme.norm.upper,
            upper,
            measure: measure_if_small(&set),
            measure_floor: 1.0 - eps_sum,
        });
        stages.push(scheme);
    }
    Ok((rows, stages))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_circle_capacity_is_one() {
        let set = CompactSet::new(vec![]).unwrap();
        let est = estimate(&set, 4.0, &[]).unwrap();
        assert_eq!((est.lower, est.upper), (1.0, 1.0));
        assert!((est.q - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bump_in_half_circle_gives_positive_lower() {
        let set = CompactSet::from_pairs(&[(1, 0.5)]).unwrap();
        let g = BumpWitness { center: 0.5, width: 0.4, l: 4 };
        let v = dual_lower(&set, 4.0 / 3.0, &g).unwrap();
        let direct: f64 = 1.0
            + 2.0 * (1..2_000_000).map(|n| phi_delta_l_coeff(0.4, 4, n).abs().powf(4.0 / 3.0)).sum::<f64>();
        assert!(v > 0.0 && v <= 1.0 / direct.powf(0.75) * (1.0 + 1e-9));
        let bad = BumpWitness { center: 0.1, width: 0.4, l: 4 };
        assert!(matches!(dual_lower(&set, 4.0 / 3.0, &bad), Err(Error::SupportViolation(_))));
    }

    #[test]
    fn kat_norm_matches_dense_summation() {
        let a = KatApproximant::new(0.1, vec![1, 320, 321], 20_000).unwrap();
        let n = a.norm_minus_one(4.0).unwrap();
        // Dense oracle from the closed-form coefficient of each dilation.
        let k = 20_000i64;
        let mut s = 0.0;
        for f in 1..=k * 321 {
            let mut v = 0.0;
            for &nj in &a.ns {
                let nj = nj as i64;
                if f % nj == 0 && f / nj <= k {
                    v += sinc(PI * 0.1 * (f / nj) as f64) / 3.0;
                }
            }
            s += 2.0 * v.abs().powi(4);
        }
        let dense = s.powf(0.25);
        assert!(n.lower <= dense && dense <= n.upper);
    }

    #[test]
    fn kat_witness_is_one_on_its_set() {
        let a = KatApproximant::new(0.05, vec![3, 7], 1000).unwrap();
        let set = a.set().unwrap();
        assert!(primal_upper(&set, 4.0, &PrimalWitness::Kat(a.clone())).is_ok());
        let bigger = CompactSet::from_pairs(&[(3, 0.05)]).unwrap();
        assert!(primal_upper(&bigger, 4.0, &PrimalWitness::Kat(a)).is_err());
    }

    #[test]
    fn degenerate_epsilon_takes_one_block() {
        let s = kat_scheme(0.99, 6.0).unwrap();
        assert_eq!(s.approximant.m(), 1);
        assert!(s.achieved);
    }

    #[test]
    fn indicator_norm_at_two_is_parseval() {
        for delta in [0.01, 0.05, 0.1] {
            let n = indicator_norm(delta, 2.0, 200_000).unwrap();
            assert!(n.lower <= delta.sqrt() * (1.0 + 1e-12) && delta.sqrt() <= n.upper * (1.0 + 1e-12));
            assert!(n.width() < 1e-3);
        }
    }

    #[test]
    fn indicator_norm_scales_like_power() {
        let ratios: Vec<f64> = [0.01, 0.02, 0.05, 0.1, 0.2]
            .iter()
            .map(|&d| indicator_norm(d, 4.0, 100_000).unwrap().upper / d.powf(0.75))
            .collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0f64), |(a, b), &r| (a.min(r), b.max(r)));
        assert!(hi / lo < 1.2, "{ratios:?}");
    }

    #[test]
    fn pairing_reproduces_mass_of_supported_bump() {
        let a = KatApproximant::new(0.1, vec![1, 320, 321], 5000).unwrap();
        let set = a.set().unwrap();
        let (_, g) = best_dual_lower(&set, 4.0 / 3.0).unwrap();
        let (v, err) = duality_pairing(&a, &g).unwrap();
        assert!((v - 1.0).abs() <= err + 1e-9, "{v} {err}");
    }

    #[test]
    fn fejer_mean_does_not_raise_norm() {
        let seq = BumpSpec::phi_delta_l(0.2, 3).unwrap().spectrum(4000);
        let (plain, reg) = fejer_regularized(&seq, 500, 4.0).unwrap();
        assert!(reg.upper <= plain.upper && plain.upper <= 2.0 * reg.upper);
    }
}
