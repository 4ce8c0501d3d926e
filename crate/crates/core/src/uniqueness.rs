//! The uniqueness-set pipeline: schedules `δ_j`, block parameters, set
//! assembly, the entropy balance and the `ℓ^q` block-mass certificates.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bumps::phi_delta_l_coeff;
use crate::error::{invalid, Error, Result};
use crate::geometry::{bc_entropy, CompactSet, EntropyCertificate, Generation};
use crate::numeric::{frac, frac_mul, integrate, ln_power_tail, sinc};
use crate::separation::{gcd, greedy_select, SeparationResult};
use crate::spectrum::nufft::{self, NUFFT_REL_ERR};

/// `κ` in `l_j = max(2, round(κ log(1/δ_j)))`.
pub const DEFAULT_KAPPA: f64 = PI / E;

/// Index up to which schedule series are summed term by term before the
/// integral-test tail takes over.
pub const SERIES_TERMS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Rule {
    /// `δ_j = c / (j log^a j)`, with `δ_1 := δ_2`.
    Main { a: f64 },
    /// `δ_j = c j^{-1/(q-1)} log(1+j)^{q/(q-1)-ε}` under a running-minimum envelope.
    Hk { q: f64, eps: f64 },
    Custom { deltas: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleConfig {
    pub rule: Rule,
    /// `None` picks the largest `c` compatible with the budget.
    pub c: Option<f64>,
    pub budget: f64,
    pub generations: usize,
    pub kappa: f64,
}

impl ScheduleConfig {
    pub fn main(a: f64, budget: f64, generations: usize) -> Self {
        Self { rule: Rule::Main { a }, c: None, budget, generations, kappa: DEFAULT_KAPPA }
    }

    pub fn custom(deltas: Vec<f64>, budget: f64) -> Self {
        let generations = deltas.len();
        Self { rule: Rule::Custom { deltas }, c: None, budget, generations, kappa: DEFAULT_KAPPA }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub j: usize,
    pub delta: f64,
    pub l: u32,
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(rename = "N")]
    pub n: Option<u64>,
}

impl GenerationParams {
    pub fn new(j: usize, delta: f64, kappa: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("delta_{j} = {delta} outside (0,1)")));
        }
        let log_inv = (1.0 / delta).ln();
        let l = (kappa * log_inv).round().max(2.0) as u32;
        let m = ((1.0 / delta) * log_inv).ceil().max(1.0) as u64;
        Ok(Self { j, delta, l, m, n: None })
    }

    /// Certified `Σ_{|n|>M_j} |φ̂_{δ_j,l_j}(n)|` from `|φ̂(n)| ≤ (l/(πδ|n|))^l`.
    pub fn tail(&self) -> f64 {
        phi_tail(self.delta, self.l, self.m)
    }

    /// The closed form `2(l/δ)π^{-l}/(l-1)` for the tail beyond `l/δ`.
    pub fn blocktail(&self) -> f64 {
        let l = self.l as f64;
        2.0 * (l / self.delta) * PI.powf(-l) / (l - 1.0)
    }

    /// `δ_j log(N_j/δ_j)`, once `N_j` is known.
    pub fn entropy_term(&self) -> Option<f64> {
        self.n.map(|n| self.delta * (n as f64 / self.delta).ln())
    }
}

/// Certified tail `Σ_{|n|>k} |φ̂_{δ,l}(n)|`, evaluated in logs.
pub fn phi_tail(delta: f64, l: u32, k: u64) -> f64 {
    let lf = l as f64;
    let ln_c = lf * (lf / (PI * delta)).ln();
    (2f64.ln() + ln_c + ln_power_tail(lf, k + 1)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub rule: Rule,
    pub c: f64,
    pub budget: f64,
    pub kappa: f64,
    /// Upper bound on the full series `Σ_{j≥1} δ_j` (not just the first `J`).
    pub series_bound: f64,
    pub params: Vec<GenerationParams>,
}

impl Schedule {
    pub fn deltas(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.delta).collect()
    }

    pub fn ms(&self) -> Vec<u64> {
        self.params.iter().map(|p| p.m).collect()
    }

    pub fn generations(&self) -> usize {
        self.params.len()
    }
}

/// Unit-`c` terms of a rule, `j = 1..=count`.
fn unit_terms(rule: &Rule, count: usize) -> Vec<f64> {
    match rule {
        Rule::Main { a } => (1..=count)
            .map(|j| {
                let j = j.max(2) as f64;
                1.0 / (j * j.ln().powf(*a))
            })
            .collect(),
        Rule::Hk { q, eps } => {
            let (s, t) = hk_exponents(*q, *eps);
            let mut env = f64::INFINITY;
            (1..=count)
                .map(|j| {
                    let jf = j as f64;
                    let b = jf.powf(-s) * (1.0 + jf).ln().powf(t);
                    if j == 1 {
                        b
                    } else {
                        env = env.min(b);
                        env
                    }
                })
                .collect()
        }
        Rule::Custom { deltas } => deltas.iter().copied().take(count).collect(),
    }
}

fn hk_exponents(q: f64, eps: f64) -> (f64, f64) {
    (1.0 / (q - 1.0), q / (q - 1.0) - eps)
}

/// Integral-test bound on `Σ_{j>j0}` of the unit-`c` terms.
fn unit_tail(rule: &Rule, j0: usize) -> Result<f64> {
    let x0 = j0 as f64;
    match rule {
        Rule::Main { a } => Ok(1.0 / ((a - 1.0) * x0.ln().powf(a - 1.0))),
        Rule::Hk { q, eps } => {
            let (s, t) = hk_exponents(*q, *eps);
            if t / (1.0 + x0).ln() >= s {
                return Err(invalid("HK terms are not decreasing beyond the summed range"));
            }
            // log(1+x) ≤ log x · (1 + 1/(x log x)); then v = (s-1) log x.
            let factor = if t > 0.0 { (1.0 + 1.0 / (x0 * x0.ln())).powf(t) } else { 1.0 };
            Ok(factor * (s - 1.0).powf(-t - 1.0) * upper_gamma(t + 1.0, (s - 1.0) * x0.ln()))
        }
        Rule::Custom { .. } => Ok(0.0),
    }
}

/// `Γ(α, x) = ∫_x^∞ v^{α-1} e^{-v} dv` by quadrature plus a geometric remainder.
fn upper_gamma(alpha: f64, x: f64) -> f64 {
    let t = alpha - 1.0;
    let end = x.max(t) + 80.0 + 4.0 * t.abs();
    let body = integrate(|v| (t * v.ln() - v).exp(), x, end, 400);
    let rem = (t * end.ln() - end).exp() / (1.0 - (t / end).max(0.0));
    body + rem
}

fn validate_rule(rule: &Rule) -> Result<()> {
    match rule {
        Rule::Main { a } if !(*a > 2.0) => Err(invalid(format!("MAIN needs a > 2, got {a}"))),
        Rule::Hk { q, eps } if !(*q > 1.0 && *q < 2.0 && *eps > 0.0) => {
            Err(invalid(format!("HK needs 1 < q < 2 and eps > 0, got q={q}, eps={eps}")))
        }
        Rule::Custom { deltas } => {
            if deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
                return Err(invalid("custom deltas must lie in (0,1)"));
            }
            if deltas.windows(2).skip(1).any(|w| w[1] > w[0]) {
                return Err(invalid("custom deltas must be nonincreasing from j = 2 on"));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Builds `δ_j`, `l_j`, `M_j` and certifies `Σ_{j≥1} δ_j ≤ budget`.
pub fn build_schedule(cfg: &ScheduleConfig) -> Result<Schedule> {
    validate_rule(&cfg.rule)?;
    if !(cfg.budget > 0.0 && cfg.budget < 1.0) {
        return Err(invalid(format!("budget {} outside (0,1)", cfg.budget)));
    }
    if !(cfg.kappa > 0.0) {
        return Err(invalid("kappa must be positive"));
    }
    let count = match &cfg.rule {
        Rule::Custom { deltas } => {
            if cfg.generations > deltas.len() {
                return Err(invalid(format!(
                    "{} generations requested but only {} custom deltas given",
                    cfg.generations,
                    deltas.len()
                )));
            }
            cfg.generations
        }
        _ => cfg.generations,
    };
    let summed = match cfg.rule {
        Rule::Custom { .. } => count,
        _ => SERIES_TERMS.max(count),
    };
    let unit = unit_terms(&cfg.rule, summed);
    let unit_sum = unit.iter().sum::<f64>() + unit_tail(&cfg.rule, summed)?;
    let c = match (&cfg.rule, cfg.c) {
        (Rule::Custom { .. }, _) => 1.0,
        (_, None) => cfg.budget / unit_sum,
        (_, Some(c)) if c > 0.0 => c,
        (_, Some(c)) => return Err(invalid(format!("c = {c} must be positive"))),
    };
    let series_bound = c * unit_sum;
    if series_bound > cfg.budget * (1.0 + 1e-12) {
        return Err(invalid(format!(
            "sum of deltas may reach {series_bound:.6}, above budget {}; use c <= {:.6}",
            cfg.budget,
            cfg.budget / unit_sum
        )));
    }
    let params = unit[..count]
        .iter()
        .enumerate()
        .map(|(i, u)| GenerationParams::new(i + 1, c * u, cfg.kappa))
        .collect::<Result<Vec<_>>>()?;
    Ok(Schedule {
        rule: cfg.rule.clone(),
        c,
        budget: cfg.budget,
        kappa: cfg.kappa,
        series_bound,
        params,
    })
}

/// `E` with its separation witness and entropy balance.
#[derive(Debug, Clone)]
pub struct UniquenessSet {
    pub schedule: Schedule,
    pub set: CompactSet,
    pub separation: SeparationResult,
    pub entropy: EntropyCertificate,
    /// `δ_j log(N_j/δ_j)` per generation.
    pub entropy_terms: Vec<f64>,
    /// `δ_j log(Σ_{k≤j} (1/δ_k) log(1/δ_k))` per generation.
    pub balance_terms: Vec<f64>,
    pub measure: f64,
}

pub fn assemble_uniqueness_set(schedule: &Schedule) -> Result<UniquenessSet> {
    let separation = greedy_select(&schedule.ms())?;
    let mut schedule = schedule.clone();
    for (p, &n) in schedule.params.iter_mut().zip(&separation.ns) {
        p.n = Some(n);
    }
    let gens = schedule
        .params
        .iter()
        .map(|p| Generation::new(p.n.unwrap_or(1) as u128, p.delta))
        .collect::<Result<Vec<_>>>()?;
    let set = CompactSet::new(gens)?;
    let stats = set.component_stats();
    let entropy = bc_entropy(&set)?;
    let entropy_terms = schedule.params.iter().filter_map(|p| p.entropy_term()).collect();
    let balance_terms = balance_terms(&schedule.deltas());
    Ok(UniquenessSet {
        schedule,
        set,
        separation,
        entropy,
        entropy_terms,
        balance_terms,
        measure: (1.0 - stats.measure).max(0.0),
    })
}

/// `δ_j log(Σ_{k≤j} (1/δ_k) log(1/δ_k))`, the entropy side of the balance.
pub fn balance_terms(deltas: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    deltas
        .iter()
        .map(|&d| {
            acc += (1.0 / d) * (1.0 / d).ln();
            d * acc.ln()
        })
        .collect()
}

/// Integral-test bound on `Σ_{j>j0}` of [`balance_terms`] for MAIN.
///
/// For `j > j0`: `Σ_{k≤j} (1/δ_k)log(1/δ_k) ≤ j (1/δ_j) log(1/δ_j)`, so with
/// `u = log j` each term is at most `c u^{-a} B(u)/j` where
/// `B(u) = 2u + a log u − log c + log(u + a log u − log c)`.
pub fn main_balance_tail(c: f64, a: f64, j0: usize) -> Result<f64> {
    if !(a > 2.0 && c > 0.0 && c < 1.0) {
        return Err(invalid("balance tail needs a > 2 and 0 < c < 1"));
    }
    let lc = c.ln();
    let inner = |u: f64| u + a * u.ln() - lc;
    let b = |u: f64| 2.0 * u + a * u.ln() - lc + inner(u).ln();
    let u0 = (j0 as f64).ln();
    // B' ≤ 3 + 2a/u for u ≥ 1; B(u0) above that keeps the majorant decreasing.
    if u0 < 1.0 || b(u0) < 3.0 + 2.0 * a / u0 {
        return Err(invalid("j0 too small for the balance-tail integral test"));
    }
    let u_far = 1e4f64.max(u0 * 10.0);
    if b(u_far) > 3.0 * u_far {
        return Err(invalid("balance tail remainder estimate fails"));
    }
    let panels = 4000;
    let body = integrate(|u| c * u.powf(-a) * b(u), u0, u_far, panels);
    let far = 3.0 * c / ((a - 2.0) * u_far.powf(a - 2.0));
    Ok(body + far)
}

/// Partial sums of `Σ_j (δ_j / log(1/δ_j))^{q-1}` for each `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub q_list: Vec<f64>,
    /// `partials[i][J-1]` for `q_list[i]`.
    pub partials: Vec<Vec<f64>>,
    /// Least-squares slope of `log S(J)` against `log J` over the last decade.
    pub growth_exponents: Vec<f64>,
}

impl DivergenceReport {
    pub fn partial(&self, qi: usize, j: usize) -> f64 {
        self.partials[qi][j - 1]
    }

    pub fn increment(&self, qi: usize, from: usize, to: usize) -> f64 {
        self.partial(qi, to) - self.partial(qi, from)
    }
}

pub fn divergence_report(deltas: &[f64], q_list: &[f64]) -> Result<DivergenceReport> {
    check_q_list(q_list)?;
    let partials: Vec<Vec<f64>> = q_list
        .iter()
        .map(|&q| {
            let mut acc = 0.0;
            deltas
                .iter()
                .map(|&d| {
                    acc += (d / (1.0 / d).ln()).powf(q - 1.0);
                    acc
                })
                .collect()
        })
        .collect();
    let growth_exponents = partials.iter().map(|p| growth_exponent(p)).collect();
    Ok(DivergenceReport { q_list: q_list.to_vec(), partials, growth_exponents })
}

fn growth_exponent(partials: &[f64]) -> f64 {
    let n = partials.len();
    if n < 4 {
        return f64::NAN;
    }
    let lo = (n / 10).max(1);
    let pts: Vec<(f64, f64)> = (0..32)
        .map(|i| {
            let j = (lo as f64 * (n as f64 / lo as f64).powf(i as f64 / 31.0)).round() as usize;
            let j = j.clamp(1, n);
            ((j as f64).ln(), partials[j - 1].ln())
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn check_q_list(q_list: &[f64]) -> Result<()> {
    if let Some(q) = q_list.iter().find(|q| !(**q > 1.0 && **q <= 2.0)) {
        return Err(invalid(format!("q = {q} outside (1,2]")));
    }
    Ok(())
}

/// Finitely many atoms at dyadic points `p / 2^bits`, so that every phase
/// `f·p mod 2^bits` is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atoms {
    pub bits: u32,
    pub points: Vec<u128>,
    pub weights: Vec<f64>,
}

impl Atoms {
    pub const BITS: u32 = 52;

    pub fn new(points: Vec<u128>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(invalid("atoms need matching nonempty points and weights"));
        }
        if points.iter().any(|&p| p >> Self::BITS != 0) {
            return Err(invalid("atom numerator exceeds 2^52"));
        }
        if weights.iter().any(|w| !(*w > 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(invalid("atom weights must be positive and sum to 1"));
        }
        Ok(Self { bits: Self::BITS, points, weights })
    }

    /// `count` equally weighted atoms of `set`, each at least `min_clearance`
    /// from the complement, drawn from a seeded stream.
    pub fn sample(set: &CompactSet, count: usize, min_clearance: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(count);
        for _ in 0..count {
            let p = (0..100_000)
                .map(|_| rng.gen::<u64>() as u128 >> (64 - Self::BITS))
                .find(|&p| {
                    set.contains_dyadic(p, Self::BITS) && set.clearance(Self::position(p)) >= min_clearance
                })
                .ok_or_else(|| Error::SearchExhausted("no atom site with the requested clearance".into()))?;
            points.push(p);
        }
        Self::new(points, vec![1.0 / count as f64; count])
    }

    pub fn position(p: u128) -> f64 {
        p as f64 / (1u64 << Self::BITS) as f64
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|&p| Self::position(p))
    }

    /// `Σ_a w_a e^{-2πi f x_a}` with exact phase reduction.
    pub fn transform(&self, f: u128) -> Complex64 {
        let mask = (1u128 << self.bits) - 1;
        let scale = 1.0 / (1u128 << self.bits) as f64;
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| {
                let phase = (f.wrapping_mul(p) & mask) as f64 * scale;
                Complex64::from_polar(w, -2.0 * PI * phase)
            })
            .sum()
    }
}

/// Probability measures on `E` used to instantiate the certificates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TestMeasure {
    /// Normalized Lebesgue measure on `E`.
    RestrictedLebesgue,
    Atomic { atoms: Atoms },
    /// Atoms convolved with `φ_{width,l}`; needs clearance `≥ width/2` at each atom.
    SmoothedAtomic { atoms: Atoms, width: f64, l: u32 },
}

/// `μ̂(N n)` for `n = 1..=M` with a uniform per-coefficient error bound.
#[derive(Debug, Clone)]
pub struct BlockCoefficients {
    pub n: u64,
    pub values: Vec<Complex64>,
    pub error: f64,
}

impl TestMeasure {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TestMeasure::RestrictedLebesgue => "RESTRICTED_LEBESGUE",
            TestMeasure::Atomic { .. } => "ATOMIC",
            TestMeasure::SmoothedAtomic { .. } => "SMOOTHED_ATOMIC",
        }
    }

    /// Smoothed atoms with the widest bump each site allows (shared width).
    pub fn smoothed(set: &CompactSet, count: usize, l: u32, seed: u64) -> Result<Self> {
        let atoms = Atoms::sample(set, count, 0.0, seed)?;
        let clearance = atoms.positions().map(|x| set.clearance(x)).fold(f64::INFINITY, f64::min);
        if !(clearance > 0.0) {
            return Err(Error::SupportViolation("atom on the boundary of E".into()));
        }
        Ok(TestMeasure::SmoothedAtomic { atoms, width: 2.0 * clearance * 0.99, l })
    }

    /// Total variation; every test measure here is a probability measure.
    pub fn total_variation(&self) -> f64 {
        1.0
    }

    pub fn has_exact_transform(&self) -> bool {
        !matches!(self, TestMeasure::RestrictedLebesgue)
    }

    /// Refuses measures whose support leaves `E`.
    pub fn check_support(&self, set: &CompactSet) -> Result<()> {
        match self {
            TestMeasure::RestrictedLebesgue => {
                if set.measure() <= 0.0 {
                    return Err(Error::DegenerateSet);
                }
                Ok(())
            }
            TestMeasure::Atomic { atoms } => {
                match atoms.points.iter().find(|&&p| !set.contains_dyadic(p, atoms.bits)) {
                    Some(p) => Err(Error::SupportViolation(format!("atom {} outside E", Atoms::position(*p)))),
                    None => Ok(()),
                }
            }
            TestMeasure::SmoothedAtomic { atoms, width, l } => {
                if *l < 2 || !(*width > 0.0 && *width < 1.0) {
                    return Err(invalid("smoothing bump needs l >= 2 and width in (0,1)"));
                }
                match atoms.positions().find(|&x| set.clearance(x) < width / 2.0) {
                    Some(x) => Err(Error::SupportViolation(format!(
                        "bump of width {width} at {x} leaves E (clearance {})",
                        set.clearance(x)
                    ))),
                    None => Ok(()),
                }
            }
        }
    }

    /// `μ̂(f)` for measures with a closed-form transform.
    pub fn exact_coeff(&self, f: u128) -> Option<Complex64> {
        match self {
            TestMeasure::RestrictedLebesgue => None,
            TestMeasure::Atomic { atoms } => Some(atoms.transform(f)),
            TestMeasure::SmoothedAtomic { atoms, width, l } => {
                let damp = sinc(PI * width * f as f64 / *l as f64).powi(*l as i32);
                Some(atoms.transform(f) * damp)
            }
        }
    }

    /// `μ̂(N n)`, `n = 1..=M`, for each block `(N, M)`.
    pub fn block_coefficients(&self, set: &CompactSet, blocks: &[(u64, u64)]) -> Result<Vec<BlockCoefficients>> {
        self.check_support(set)?;
        if self.has_exact_transform() {
            return Ok(blocks
                .iter()
                .map(|&(n, m)| BlockCoefficients {
                    n,
                    values: (1..=m as u128).map(|k| self.exact_coeff(n as u128 * k).unwrap()).collect(),
                    error: 1e-15,
                })
                .collect());
        }
        let lebesgue = RestrictedLebesgue::new(set)?;
        Ok(blocks.iter().map(|&(n, m)| lebesgue.block(n, m)).collect())
    }
}

/// Endpoint of a generation arc, kept by provenance so phases stay exact.
#[derive(Debug, Clone, Copy)]
struct Endpoint {
    gen: u32,
    index: u64,
    right: bool,
}

/// Transform of `1_{U}` for the complement `U` of `E`.
///
/// `Û = Σ_k Û_k − D` where `Û_k` is the closed form for generation `k` alone
/// and `D` removes the double counting inside overlapping components:
/// `2πif·D(f) = Σ_e ±e^{-2πi f x_e}` over the interior endpoints of each
/// multi-arc component.
struct RestrictedLebesgue<'a> {
    set: &'a CompactSet,
    corrections: Vec<Endpoint>,
    measure: f64,
    measure_rel_err: f64,
}

const PHASE_ERR: f64 = 8.0 * f64::EPSILON;

impl<'a> RestrictedLebesgue<'a> {
    fn new(set: &'a CompactSet) -> Result<Self> {
        if set.generations().iter().any(|g| g.n > u64::MAX as u128) {
            return Err(Error::Overflow("restricted Lebesgue transform needs N < 2^64".into()));
        }
        let mut corrections = Vec::new();
        let mut covered = 0.0;
        let mut components = 0u64;
        set.sweep_groups(|group| {
            components += 1;
            let end = group.iter().map(|a| a.end).fold(f64::NEG_INFINITY, f64::max);
            let first = group
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.start.total_cmp(&b.1.start))
                .map(|(i, _)| i)
                .unwrap_or(0);
            covered += (end - group[first].start).min(1.0);
            if group.len() < 2 {
                return;
            }
            let last = group
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.end.total_cmp(&b.1.end))
                .map(|(i, _)| i)
                .unwrap_or(0);
            for (i, a) in group.iter().enumerate() {
                let (gen, index) = (a.gen as u32, a.index as u64);
                if i != first {
                    corrections.push(Endpoint { gen, index, right: false });
                }
                if i != last {
                    corrections.push(Endpoint { gen, index, right: true });
                }
            }
        });
        let measure = 1.0 - covered;
        if !(measure > 0.0) {
            return Err(Error::DegenerateSet);
        }
        let measure_rel_err = (components as f64 + 1.0) * f64::EPSILON / measure;
        Ok(Self { set, corrections, measure, measure_rel_err })
    }

    fn block(&self, n_j: u64, m: u64) -> BlockCoefficients {
        let gens = self.set.generations();
        let nj = n_j as u128;
        // frac(N_j δ_k / (2 N_k)) per generation, split to keep it accurate.
        let shifts: Vec<f64> = gens
            .iter()
            .map(|g| {
                let two_n = 2 * g.n;
                let (q, r) = (nj / two_n, nj % two_n);
                frac(frac_mul(q, g.delta) + r as f64 * g.delta / two_n as f64)
            })
            .collect();
        let mut theta = Vec::with_capacity(self.corrections.len());
        let mut weights = Vec::with_capacity(self.corrections.len());
        for e in &self.corrections {
            let g = &gens[e.gen as usize];
            let base = (nj * e.index as u128 % g.n) as f64 / g.n as f64;
            let (x, w) = if e.right {
                (base + shifts[e.gen as usize], -1.0)
            } else {
                (base - shifts[e.gen as usize], 1.0)
            };
            theta.push(frac(x));
            weights.push(w);
        }
        let mut values = vec![Complex64::new(0.0, 0.0); m as usize];
        if !theta.is_empty() {
            let f = nufft::type1(&theta, &weights, m as usize);
            for (k, v) in values.iter_mut().enumerate() {
                let freq = nj as f64 * (k + 1) as f64;
                // -D(f) = -F(n) / (2πi f)
                *v -= f[m as usize + k + 1] / Complex64::new(0.0, 2.0 * PI * freq);
            }
        }
        for g in gens {
            let step = (g.n / gcd(g.n as u64, n_j) as u128) as u64;
            let mut k = step;
            while k <= m {
                let ratio = nj * k as u128 / g.n;
                values[k as usize - 1] += g.delta * sinc(PI * g.delta * ratio as f64);
                k += step;
            }
        }
        let p = self.corrections.len() as f64;
        let scale = 1.0 / self.measure;
        let mut max_abs = 0.0f64;
        for v in values.iter_mut() {
            *v *= -scale;
            max_abs = max_abs.max(v.norm());
        }
        let raw = NUFFT_REL_ERR * p / (2.0 * PI * n_j as f64) + p * PHASE_ERR / n_j as f64 + gens.len() as f64 * 4.0 * f64::EPSILON;
        BlockCoefficients {
            n: n_j,
            values,
            error: raw * scale + max_abs * self.measure_rel_err,
        }
    }
}

/// One row of the block-mass certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMassRow {
    pub j: usize,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "M")]
    pub m: u64,
    /// `Σ_{0<|n|≤M_j} |μ̂(N_j n)|`.
    pub s: f64,
    /// `s` minus the accumulated coefficient error.
    pub s_lower: f64,
    pub tail: f64,
    /// `1 − ‖μ‖ tail_j`.
    pub mass_floor: f64,
    pub mass_ok: bool,
    /// `S_j^q/(2M_j)^{q-1}` per `q`.
    pub holder_lhs: Vec<f64>,
    /// `Σ_{Λ_j} |μ̂|^q` per `q`.
    pub holder_rhs: Vec<f64>,
    pub holder_ok: bool,
    pub lq_partial: Vec<f64>,
    pub divergence_reference: Vec<f64>,
    /// `|1 + Σ_{n≠0} φ̂_j(-n) μ̂(N_j n)|` for exact transforms.
    pub residue: Option<f64>,
    pub residue_tail: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMassCertificate {
    pub measure: String,
    pub q_list: Vec<f64>,
    pub total_variation: f64,
    pub rows: Vec<BlockMassRow>,
}

impl BlockMassCertificate {
    pub fn mass_ok(&self) -> bool {
        self.rows.iter().all(|r| r.mass_ok)
    }

    pub fn holder_ok(&self) -> bool {
        self.rows.iter().all(|r| r.holder_ok)
    }

    pub fn max_residue(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.residue).reduce(f64::max)
    }
}

/// Tail level below which the annihilation sum is truncated.
pub const RESIDUE_TAIL: f64 = 1e-8;

pub fn block_mass_certificate(uset: &UniquenessSet, mu: &TestMeasure, q_list: &[f64]) -> Result<BlockMassCertificate> {
    check_q_list(q_list)?;
    let params = &uset.schedule.params;
    let blocks: Vec<(u64, u64)> = params
        .iter()
        .map(|p| p.n.map(|n| (n, p.m)).ok_or_else(|| invalid("schedule has no N_j; assemble the set first")))
        .collect::<Result<_>>()?;
    let coeffs = mu.block_coefficients(&uset.set, &blocks)?;
    let tv = mu.total_variation();
    let mut lq = vec![0.0; q_list.len()];
    let mut reference = vec![0.0; q_list.len()];
    let mut rows = Vec::with_capacity(params.len());
    for (p, block) in params.iter().zip(&coeffs) {
        let abs: Vec<f64> = block.values.iter().map(|v| v.norm()).collect();
        let s = 2.0 * abs.iter().sum::<f64>();
        let s_lower = (s - 2.0 * p.m as f64 * block.error).max(0.0);
        let tail = p.tail();
        let mass_floor = 1.0 - tv * tail;
        let width = 2.0 * p.m as f64;
        let holder_lhs: Vec<f64> = q_list.iter().map(|&q| s.powf(q) / width.powf(q - 1.0)).collect();
        let holder_rhs: Vec<f64> = q_list.iter().map(|&q| 2.0 * abs.iter().map(|a| a.powf(q)).sum::<f64>()).collect();
        let holder_ok = holder_lhs.iter().zip(&holder_rhs).all(|(l, r)| *l <= r * (1.0 + 1e-12));
        for (i, &q) in q_list.iter().enumerate() {
            lq[i] += holder_lhs[i];
            reference[i] += (p.delta / (1.0 / p.delta).ln()).powf(q - 1.0);
        }
        let (residue, residue_tail) = match mu.has_exact_transform() {
            true => {
                let (r, t) = annihilation_residue(p, block.n, mu)?;
                (Some(r), Some(t))
            }
            false => (None, None),
        };
        rows.push(BlockMassRow {
            j: p.j,
            n: block.n,
            m: p.m,
            s,
            s_lower,
            tail,
            mass_floor,
            mass_ok: s_lower >= mass_floor,
            holder_lhs,
            holder_rhs,
            holder_ok,
            lq_partial: lq.clone(),
            divergence_reference: reference.clone(),
            residue,
            residue_tail,
        });
    }
    Ok(BlockMassCertificate {
        measure: mu.kind_name().into(),
        q_list: q_list.to_vec(),
        total_variation: tv,
        rows,
    })
}

/// `|1 + Σ_{0<|n|≤K} φ̂_j(n) μ̂(N_j n)|` with `K` chosen so that the omitted
/// tail is below [`RESIDUE_TAIL`]; returns the residue and that tail bound.
pub fn annihilation_residue(p: &GenerationParams, n_j: u64, mu: &TestMeasure) -> Result<(f64, f64)> {
    let l = p.l as f64;
    let ln_c = l * (l / (PI * p.delta)).ln();
    let ln_k = (2f64.ln() + ln_c - ((l - 1.0) * RESIDUE_TAIL).ln()) / (l - 1.0);
    let mut k = ln_k.exp().ceil() as u64 + 1;
    while phi_tail(p.delta, p.l, k) > RESIDUE_TAIL {
        k += k / 8 + 1;
    }
    if k > 1 << 32 {
        return Err(Error::Resolution(format!("annihilation sum needs K = {k}")));
    }
    let mut acc = 1.0;
    for n in 1..=k {
        let phi = phi_delta_l_coeff(p.delta, p.l, n as i64);
        let m = mu
            .exact_coeff(n_j as u128 * n as u128)
            .ok_or_else(|| invalid("annihilation residue needs an exact transform"))?;
        acc += 2.0 * phi * m.re;
    }
    Ok((acc.abs(), phi_tail(p.delta, p.l, k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArcUnion;

    #[test]
    fn custom_single_generation_block_length() {
        let s = build_schedule(&ScheduleConfig::custom(vec![0.1], 0.5)).unwrap();
        assert_eq!(s.params[0].m, 24);
    }

    #[test]
    fn main_schedule_formula_and_budget() {
        let s = build_schedule(&ScheduleConfig::main(3.0, 0.5, 10)).unwrap();
        let d = s.deltas();
        assert!((d[1] / (s.c / (2.0 * 2f64.ln().powi(3))) - 1.0).abs() < 1e-15);
        assert_eq!(d[0], d[1]);
        assert!(d.windows(2).all(|w| w[1] <= w[0]));
        // Series bound: brute partial sum to 10^7 stays below it.
        let brute: f64 = d[0] + (2..=10_000_000u64).map(|j| s.c / (j as f64 * (j as f64).ln().powi(3))).sum::<f64>();
        assert!(brute <= s.series_bound && s.series_bound <= 0.5 * (1.0 + 1e-12));
    }

    #[test]
    fn fixed_c_over_budget_is_refused() {
        let mut cfg = ScheduleConfig::main(3.0, 0.1, 5);
        cfg.c = Some(1.0);
        assert!(matches!(build_schedule(&cfg), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn hk_schedule_is_monotone_and_within_budget() {
        let cfg = ScheduleConfig {
            rule: Rule::Hk { q: 1.5, eps: 0.1 },
            c: None,
            budget: 0.2,
            generations: 40,
            kappa: DEFAULT_KAPPA,
        };
        let s = build_schedule(&cfg).unwrap();
        let d = s.deltas();
        assert!(d[1..].windows(2).all(|w| w[1] <= w[0]));
        assert!(s.series_bound <= 0.2 * (1.0 + 1e-12));
    }

    #[test]
    fn upper_gamma_integer_order() {
        // Γ(3, x) = e^{-x}(x² + 2x + 2)
        for x in [0.5f64, 3.0, 20.0] {
            let want = (-x).exp() * (x * x + 2.0 * x + 2.0);
            assert!((upper_gamma(3.0, x) / want - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn custom_schedule_must_decrease() {
        assert!(build_schedule(&ScheduleConfig::custom(vec![0.01, 0.02, 0.03], 0.5)).is_err());
        assert!(build_schedule(&ScheduleConfig::custom(vec![0.01, 0.03, 0.02], 0.5)).is_ok());
    }

    #[test]
    fn trivial_set_measure_and_entropy() {
        let s = build_schedule(&ScheduleConfig::custom(vec![0.1], 0.5)).unwrap();
        let u = assemble_uniqueness_set(&s).unwrap();
        assert_eq!(u.separation.ns, vec![1]);
        assert!((u.measure - 0.9).abs() < 1e-15);
        assert!(u.entropy.holds());
    }

    #[test]
    fn balance_tail_dominates_direct_sum() {
        let c = 0.03;
        let deltas: Vec<f64> = (1..=2_000_000usize)
            .map(|j| {
                let j = j.max(2) as f64;
                c / (j * j.ln().powi(3))
            })
            .collect();
        let terms = balance_terms(&deltas);
        let direct: f64 = terms[10_000..].iter().sum();
        assert!(direct <= main_balance_tail(c, 3.0, 10_000).unwrap());
    }

    #[test]
    fn lebesgue_transform_single_arc_matches_quadrature() {
        let set = CompactSet::from_pairs(&[(1, 0.1)]).unwrap();
        let blocks = TestMeasure::RestrictedLebesgue.block_coefficients(&set, &[(1, 30)]).unwrap();
        let g = 1 << 20;
        for (k, v) in blocks[0].values.iter().enumerate() {
            let n = (k + 1) as f64;
            // Midpoint rule on the cells of E, cell-averaged exactly.
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..g {
                let t = (i as f64 + 0.5) / g as f64;
                if set.contains(t) {
                    acc += Complex64::from_polar(1.0, -2.0 * PI * n * t);
                }
            }
            let quad = acc / g as f64 * sinc(PI * n / g as f64) / 0.9;
            assert!((v - quad).norm() < 1e-5, "n={n}: {v} vs {quad}");
        }
    }

    #[test]
    fn lebesgue_transform_matches_component_sum() {
        let set = CompactSet::from_pairs(&[(1, 0.2), (3, 0.3), (4, 0.25), (7, 0.2)]).unwrap();
        let comp: ArcUnion = set.realized_complement().unwrap().clone();
        let m_e = 1.0 - comp.measure();
        let blocks = TestMeasure::RestrictedLebesgue.block_coefficients(&set, &[(5, 40), (1, 12)]).unwrap();
        for b in &blocks {
            for (k, v) in b.values.iter().enumerate() {
                let f = b.n as f64 * (k + 1) as f64;
                let u: Complex64 = comp
                    .arcs()
                    .iter()
                    .map(|a| {
                        let (s, e) = (a.start(), a.start() + a.length());
                        (Complex64::from_polar(1.0, -2.0 * PI * f * s) - Complex64::from_polar(1.0, -2.0 * PI * f * e))
                            / Complex64::new(0.0, 2.0 * PI * f)
                    })
                    .sum();
                let want = -u / m_e;
                assert!((v - want).norm() < 1e-12 + b.error, "f={f}: {v} vs {want}");
            }
        }
    }

    #[test]
    fn single_atom_has_unimodular_coefficients() {
        let s = build_schedule(&ScheduleConfig::main(3.0, 0.2, 5)).unwrap();
        let u = assemble_uniqueness_set(&s).unwrap();
        let atoms = Atoms::sample(&u.set, 1, 1e-6, 7).unwrap();
        let mu = TestMeasure::Atomic { atoms };
        let cert = block_mass_certificate(&u, &mu, &[1.5]).unwrap();
        for r in &cert.rows {
            assert!((r.s - 2.0 * r.m as f64).abs() < 1e-9 * r.m as f64);
            assert!(r.mass_ok && r.holder_ok);
            assert!(r.residue.unwrap() < 1e-6);
        }
    }

    #[test]
    fn atom_outside_e_is_refused() {
        let set = CompactSet::from_pairs(&[(1, 0.5)]).unwrap();
        let mu = TestMeasure::Atomic { atoms: Atoms::new(vec![0], vec![1.0]).unwrap() };
        assert!(matches!(mu.check_support(&set), Err(Error::SupportViolation(_))));
    }

    #[test]
    fn divergence_report_partials_increase() {
        let s = build_schedule(&ScheduleConfig::main(3.0, 0.1, 2000)).unwrap();
        let r = divergence_report(&s.deltas(), &[1.1, 1.5]).unwrap();
        for p in &r.partials {
            assert!(p.windows(2).all(|w| w[1] > w[0]));
        }
        assert!(r.growth_exponents[0] > r.growth_exponents[1]);
    }
}
