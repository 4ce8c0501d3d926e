//! Outer functions `F = 1 − exp(χ + iHχ)` that vanish at the origin and stay
//! within `ε` of 1 off a short arc, their dilations `F(z^N)` selected against
//! a decreasing gauge `Ω`, and the simultaneous-approximation report.

pub mod gauge;
pub mod transfer;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{CompactSet, Generation};
use crate::numeric::{dist_to_int, frac_mul};
use crate::spectrum::{ap_norm, fft_forward, fft_inverse, DecayCertificate, NormInterval, NormRequest, SpectralSequence};

pub use gauge::{select_dilation, Dilation, OmegaGauge, XReal};

pub const OUTER_GRID: usize = 1 << 18;
pub const DEFAULT_ETA: f64 = 0.25;
/// Largest profile height `a` whose exponential stays inside `f64`.
pub const EXP_LIMIT: f64 = 700.0;
/// Declared decay order of `F̂` for the tail certificate; the constant is measured.
pub const SMOOTHNESS_ORDER: f64 = 4.0;
/// Minimum number of grid points across one transition of the window.
const MIN_TRANSITION_POINTS: f64 = 16.0;

/// `C^∞` step: 0 for `u ≤ 0`, 1 for `u ≥ 1`, from `exp(−1/u)`.
pub fn smoothstep(u: f64) -> f64 {
    let g = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        g(u) / (g(u) + g(1.0 - u))
    }
}

/// 1 on `I(δ(1−η))`, 0 off `I(δ(1+η))`.
pub fn window(x: f64, delta: f64, eta: f64) -> f64 {
    let d = dist_to_int(x);
    smoothstep((delta * (1.0 + eta) / 2.0 - d) / (delta * eta))
}

/// `χ = log ε·(1 − w) + a·w` with `a` chosen so the grid mean vanishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub delta: f64,
    pub eps: f64,
    pub eta: f64,
    pub a: f64,
    pub mean: f64,
    #[serde(skip)]
    pub samples: Vec<f64>,
}

impl Profile {
    /// `χ(x)` from the closed form.
    pub fn value(&self, x: f64) -> f64 {
        let w = window(x, self.delta, self.eta);
        self.eps.ln() * (1.0 - w) + self.a * w
    }

    /// Arc outside of which `χ ≡ log ε`.
    pub fn support_length(&self) -> f64 {
        self.delta * (1.0 + self.eta)
    }
}

pub fn build_chi(delta: f64, eps: f64, eta: f64, grid: usize) -> Result<Profile> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid(format!("eps = {eps} outside (0,1]")));
    }
    if !(eta > 0.0 && eta < 1.0 && delta > 0.0 && (1.0 + eta) * delta < 1.0) {
        return Err(invalid(format!("need 0 < eta < 1 and (1+eta)delta < 1, got delta = {delta}, eta = {eta}")));
    }
    if !grid.is_power_of_two() {
        return Err(invalid("grid must be a power of two"));
    }
    if delta * eta * (grid as f64) < MIN_TRANSITION_POINTS {
        return Err(Error::Resolution(format!("transition width {} spans fewer than 16 of {grid} points", delta * eta)));
    }
    let w: Vec<f64> = (0..grid).map(|k| window(k as f64 / grid as f64, delta, eta)).collect();
    let sw: f64 = w.iter().sum();
    let s1w: f64 = w.iter().map(|x| 1.0 - x).sum();
    let le = eps.ln();
    let a = -le * s1w / sw;
    if a > EXP_LIMIT {
        return Err(Error::ExpOverflow(a));
    }
    let samples: Vec<f64> = w.iter().map(|&x| le * (1.0 - x) + a * x).collect();
    let mean = samples.iter().sum::<f64>() / grid as f64;
    Ok(Profile { delta, eps, eta, a, mean, samples })
}

/// Conjugate function by the multiplier `−i·sign(n)`.
pub fn conjugate_function(samples: &[f64]) -> Vec<f64> {
    let g = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_forward(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let s = if k == 0 || 2 * k == g {
            0.0
        } else if 2 * k < g {
            1.0
        } else {
            -1.0
        };
        *c *= Complex64::new(0.0, -s) / g as f64;
    }
    fft_inverse(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterSpec {
    pub profile: Profile,
    pub grid: usize,
    /// `|1 − exp(mean χ)|`, the value at the origin.
    pub f0: f64,
    /// `|F̂(0)|` from the boundary samples.
    pub f0_boundary: f64,
    /// `sup |F − 1|` over grid points off `I(δ(1+η))`.
    pub offarc_sup: f64,
    /// `max | |1 − F| / e^χ − 1 |` on the grid.
    pub modulus_err: f64,
    /// `‖H[Hχ] + χ − mean χ‖_∞`.
    pub conjugation_err: f64,
    /// Energy at negative frequencies relative to the total.
    pub negative_energy: f64,
    pub a1: NormInterval,
    #[serde(skip)]
    pub spectrum: SpectralSequence,
}

impl OuterSpec {
    pub fn coeff(&self, n: i64) -> Complex64 {
        self.spectrum.get(n)
    }

    pub fn properties_ok(&self, tol: f64) -> bool {
        self.f0 < tol && self.offarc_sup <= self.profile.eps + tol
    }
}

pub fn build_outer(profile: Profile) -> Result<OuterSpec> {
    let g = profile.samples.len();
    let mut buf: Vec<Complex64> = profile.samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_forward(&mut buf);
    let scale = 1.0 / g as f64;
    // One-sided spectrum of χ + iHχ.
    for (k, c) in buf.iter_mut().enumerate() {
        let m = if k == 0 || 2 * k == g {
            1.0
        } else if 2 * k < g {
            2.0
        } else {
            0.0
        };
        *c *= m * scale;
    }
    fft_inverse(&mut buf);
    let f: Vec<Complex64> = buf.iter().map(|z| Complex64::new(1.0, 0.0) - z.exp()).collect();

    let half = profile.support_length() / 2.0;
    let mut offarc_sup = 0f64;
    let mut modulus_err = 0f64;
    for (k, (fk, &chi)) in f.iter().zip(&profile.samples).enumerate() {
        let x = k as f64 / g as f64;
        let dev = (fk - Complex64::new(1.0, 0.0)).norm();
        if dist_to_int(x) >= half {
            offarc_sup = offarc_sup.max(dev);
        }
        modulus_err = modulus_err.max((dev / chi.exp() - 1.0).abs());
    }
    let h = conjugate_function(&profile.samples);
    let hh = conjugate_function(&h);
    let conjugation_err = hh
        .iter()
        .zip(&profile.samples)
        .map(|(a, x)| (a + x - profile.mean).abs())
        .fold(0.0, f64::max);

    let max_f = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut fh = f.clone();
    fft_forward(&mut fh);
    for c in &mut fh {
        *c *= scale;
    }
    let peak = fh.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let total: f64 = fh.iter().map(|c| (c / peak).norm_sqr()).sum();
    let negative: f64 = fh[g / 2 + 1..].iter().map(|c| (c / peak).norm_sqr()).sum();
    let k = g / 4;
    let coeff_error = f64::EPSILON * (g as f64).log2() * max_f;
    let tail_const = 2.0
        * (k / 2 + 1..=k)
            .map(|n| fh[n].norm() * (n as f64).powf(SMOOTHNESS_ORDER))
            .fold(0.0, f64::max);
    let entries: Vec<(i64, Complex64)> = (0..=k).map(|n| (n as i64, fh[n])).collect();
    let spectrum = SpectralSequence::from_entries(k as u64, entries)?
        .with_tail(DecayCertificate::new(tail_const, SMOOTHNESS_ORDER))
        .with_coeff_error(coeff_error);
    let a1 = ap_norm(&spectrum, NormRequest::new(1.0, k as u64)?)?;
    Ok(OuterSpec {
        f0: (1.0 - profile.mean.exp()).abs(),
        f0_boundary: fh[0].norm(),
        offarc_sup,
        modulus_err,
        conjugation_err,
        negative_energy: negative / total,
        a1,
        spectrum,
        grid: g,
        profile,
    })
}

/// `Σ_{k≥1} |F̂(k)| Ω(N k)` plus `Ω(N)` times the stored-error and tail bound.
pub fn weighted_sum(outer: &OuterSpec, omega: &OmegaGauge, n: Dilation) -> Result<f64> {
    let nx = n.to_xreal();
    let mut s = 0.0;
    for &(k, c) in outer.spectrum.entries().iter().filter(|e| e.0 >= 1) {
        s += c.norm() * omega.eval_x(nx * XReal::new(k as f64))?.to_f64();
    }
    let kmax = outer.spectrum.truncation();
    let mut rest = kmax as f64 * outer.spectrum.coeff_error();
    if let Some(t) = outer.spectrum.tail() {
        rest += t.tail_sum(kmax, 1.0)? / 2.0;
    }
    Ok(s + omega.eval_x(nx)?.to_f64() * rest)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OuterStagesConfig {
    pub deltas: Vec<f64>,
    /// Defaults to `ε_j = δ_j`.
    pub epsilons: Option<Vec<f64>>,
    pub eta: f64,
    pub omega: OmegaGauge,
    pub grid: usize,
    /// Shifts `N` for the annihilation table.
    pub shifts: Vec<u64>,
}

impl OuterStagesConfig {
    /// `δ_j = scale/j²`.
    pub fn inverse_square(stages: usize, scale: f64, omega: OmegaGauge) -> Self {
        Self {
            deltas: (1..=stages).map(|j| scale / (j * j) as f64).collect(),
            epsilons: None,
            eta: DEFAULT_ETA,
            omega,
            grid: OUTER_GRID,
            shifts: vec![0, 1, 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRow {
    pub j: usize,
    pub delta: f64,
    pub eps: f64,
    pub a: f64,
    pub n: Dilation,
    pub a1_lower: f64,
    pub a1_upper: f64,
    pub f0: f64,
    pub offarc_sup: f64,
    pub negative_energy: f64,
    pub gate: f64,
    pub weighted_sum: f64,
    pub gate_ok: bool,
    /// `sup |f_j − 1|` over sampled points of `E`, when `N_1..N_j` are exact.
    pub sup_e_sampled: Option<f64>,
    /// `|Σ_{n≥0} conj(f̂_j(n+N)) μ̂(n)|` for `μ̂(n) = Ω(max(n,1))`, per shift.
    pub annihilation: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaCertificate {
    pub omega: String,
    pub rows: Vec<StageRow>,
    /// Lower bound `1 − Σ (1+η)δ_j` on `m(E)`.
    pub measure_floor: f64,
}

impl SaCertificate {
    pub fn all_ok(&self, tol: f64) -> bool {
        let decreasing = self.rows.windows(2).all(|w| w[1].gate <= w[0].gate);
        decreasing
            && self.rows.iter().all(|r| {
                r.gate_ok && r.f0 < tol && r.offarc_sup <= r.eps + tol && r.sup_e_sampled.map_or(true, |s| s <= r.eps + tol)
            })
    }
}

const SA_SAMPLES: usize = 1 << 14;

/// Builds every stage, selects `N_j > N_{j−1}` against the gate `ε_j`, and
/// evaluates both limits of the simultaneous approximation.
pub fn sa_certificate(cfg: &OuterStagesConfig) -> Result<(SaCertificate, Vec<OuterSpec>)> {
    let eps: Vec<f64> = cfg.epsilons.clone().unwrap_or_else(|| cfg.deltas.clone());
    if eps.len() != cfg.deltas.len() || eps.is_empty() {
        return Err(invalid("need one epsilon per stage"));
    }
    let mut specs = Vec::with_capacity(eps.len());
    let mut dilations: Vec<Dilation> = Vec::with_capacity(eps.len());
    for (&d, &e) in cfg.deltas.iter().zip(&eps) {
        let spec = build_outer(build_chi(d, e, cfg.eta, cfg.grid)?)?;
        let floor = match dilations.last() {
            Some(Dilation::Exact(n)) => n + 1,
            Some(Dilation::Huge { .. }) => u64::MAX,
            None => 1,
        };
        let n = match dilations.last() {
            Some(&Dilation::Huge { ln }) => {
                let next = select_dilation(&cfg.omega, spec.a1.upper, e, u64::MAX)?;
                match next {
                    Dilation::Huge { ln: l } if l > ln => next,
                    _ => Dilation::Huge { ln: ln * (1.0 + 1e-12) },
                }
            }
            _ => select_dilation(&cfg.omega, spec.a1.upper, e, floor)?,
        };
        dilations.push(n);
        specs.push(spec);
    }
    let sampled = sampled_sup(&specs, &dilations)?;
    let mut rows = Vec::with_capacity(specs.len());
    for (j, (spec, &n)) in specs.iter().zip(&dilations).enumerate() {
        let ws = weighted_sum(spec, &cfg.omega, n)?;
        let gate = spec.profile.eps;
        rows.push(StageRow {
            j: j + 1,
            delta: spec.profile.delta,
            eps: gate,
            a: spec.profile.a,
            n,
            a1_lower: spec.a1.lower,
            a1_upper: spec.a1.upper,
            f0: spec.f0,
            offarc_sup: spec.offarc_sup,
            negative_energy: spec.negative_energy,
            gate,
            weighted_sum: ws,
            gate_ok: ws <= gate + spec.a1.width(),
            sup_e_sampled: sampled[j],
            annihilation: cfg
                .shifts
                .iter()
                .map(|&s| annihilation_sum(spec, &cfg.omega, n, s))
                .collect::<Result<_>>()?,
        });
    }
    let measure_floor = 1.0 - specs.iter().map(|s| s.profile.support_length()).sum::<f64>();
    Ok((SaCertificate { omega: cfg.omega.source().to_string(), rows, measure_floor }, specs))
}

/// `max |1 − F_j(N_j t)| = max e^{χ_j(N_j t)}` over grid points `t` of the
/// set cut out by stages `1..=j`, for the prefix of stages with exact `N`.
fn sampled_sup(specs: &[OuterSpec], dilations: &[Dilation]) -> Result<Vec<Option<f64>>> {
    let ns: Vec<u64> = dilations.iter().map_while(|d| d.exact()).collect();
    let mut out = vec![None; specs.len()];
    for j in 0..ns.len() {
        let set = CompactSet::new(
            ns[..=j]
                .iter()
                .zip(specs)
                .map(|(&n, s)| Generation::new(n as u128, s.profile.support_length()))
                .collect::<Result<_>>()?,
        )?;
        let mut sup = 0f64;
        for i in 0..SA_SAMPLES {
            let t = (i as f64 + 0.5) / SA_SAMPLES as f64;
            if set.contains(t) {
                sup = sup.max(specs[j].profile.value(frac_mul(ns[j] as u128, t)).exp());
            }
        }
        out[j] = Some(sup);
    }
    Ok(out)
}

/// `|Σ_{k≥0, kN ≥ s} conj(F̂(k)) μ̂(kN − s)|` with `μ̂(m) = Ω(max(m,1))`.
fn annihilation_sum(spec: &OuterSpec, omega: &OmegaGauge, n: Dilation, shift: u64) -> Result<f64> {
    let nx = n.to_xreal();
    // F(0) = 1 − exp(mean χ) exactly; the sampled F̂(0) only carries roundoff.
    let mut s = if shift == 0 { Complex64::new(spec.f0 * omega.eval(1.0)?, 0.0) } else { Complex64::new(0.0, 0.0) };
    for &(k, c) in spec.spectrum.entries() {
        if k < 1 {
            continue;
        }
        let m = nx * XReal::new(k as f64) - XReal::new(shift as f64);
        let m = if m.lt(&XReal::new(1.0)) { XReal::new(1.0) } else { m };
        s += c.conj() * omega.eval_x(m)?.to_f64();
    }
    Ok(s.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_eps_gives_zero_profile_and_function() {
        let p = build_chi(0.2, 1.0, DEFAULT_ETA, 1 << 12).unwrap();
        assert!(p.samples.iter().all(|&x| x == 0.0) && p.a == 0.0);
        let f = build_outer(p).unwrap();
        assert!(f.a1.upper < 1e-12);
    }

    #[test]
    fn profile_shape() {
        let p = build_chi(0.2, 0.1, DEFAULT_ETA, 1 << 16).unwrap();
        assert!(p.a > 0.0);
        assert!(p.mean.abs() < 1e-12);
        assert_eq!(p.value(0.3), 0.1f64.ln());
        assert_eq!(p.value(0.0), p.a);
    }

    #[test]
    fn window_is_exactly_flat_outside_transition() {
        assert_eq!(window(0.074, 0.2, 0.25), 1.0);
        assert_eq!(window(0.125, 0.2, 0.25), 0.0);
        assert!(window(0.1, 0.2, 0.25) > 0.0 && window(0.1, 0.2, 0.25) < 1.0);
    }

    #[test]
    fn coarse_grid_is_refused() {
        assert!(matches!(build_chi(0.01, 0.1, 0.25, 1 << 10), Err(Error::Resolution(_))));
        assert!(matches!(build_chi(0.002, 1e-3, 0.25, 1 << 18), Err(Error::ExpOverflow(_))));
    }

    #[test]
    fn conjugate_of_cosine_is_sine() {
        let g = 256;
        let x: Vec<f64> = (0..g).map(|k| (2.0 * std::f64::consts::PI * 3.0 * k as f64 / g as f64).cos()).collect();
        let h = conjugate_function(&x);
        for (k, v) in h.iter().enumerate() {
            let want = (2.0 * std::f64::consts::PI * 3.0 * k as f64 / g as f64).sin();
            assert!((v - want).abs() < 1e-13);
        }
    }

    #[test]
    fn outer_properties_at_desk_scale() {
        let f = build_outer(build_chi(0.2, 0.1, DEFAULT_ETA, OUTER_GRID).unwrap()).unwrap();
        assert!(f.f0 < 1e-9, "{}", f.f0);
        assert!((f.f0_boundary - f.f0).abs() < 1e-9 * f.a1.upper);
        assert!(f.offarc_sup <= 0.1 + 1e-9);
        assert!(f.negative_energy < 1e-18);
        assert!(f.modulus_err < 1e-9);
        assert!(f.conjugation_err < 1e-10);
        assert!(f.a1.width() < 1e-6 * f.a1.upper);
    }
}
