//! Arcs, arc unions and the compact sets `E = ∩_j T \ U_{N_j,δ_j}` on `T = [0,1)`.
//!
//! `U_{N,δ}` is the union of the `N` open arcs of length `δ/N` centered at `k/N`.
//! Sets with many generations can hold far more arcs than fit in memory, so
//! [`CompactSet`] keeps only the generation list and sweeps the arcs lazily in
//! sorted order when measure, entropy or components are requested.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{dist_to_int, frac, frac_mul};

/// Endpoints closer than this are merged.
pub const MERGE_TOL: f64 = 1e-15;

/// Upper limit on the number of arcs materialized into an [`ArcUnion`].
pub const MAX_REALIZED_ARCS: u128 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    center: f64,
    length: f64,
}

impl Arc {
    pub fn new(center: f64, length: f64) -> Result<Self> {
        if !(length > 0.0 && length <= 1.0) || !center.is_finite() {
            return Err(invalid(format!("arc length {length} outside (0,1]")));
        }
        Ok(Self { center: frac(center), length })
    }

    /// `I(length)`, the arc centered at 0.
    pub fn centered(length: f64) -> Result<Self> {
        Self::new(0.0, length)
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Left endpoint in `[0,1)`.
    pub fn start(&self) -> f64 {
        frac(self.center - self.length / 2.0)
    }

    /// Membership in the open arc.
    pub fn contains(&self, t: f64) -> bool {
        self.length >= 1.0 || dist_to_int(t - self.center) < self.length / 2.0
    }

    pub fn is_full(&self) -> bool {
        self.length >= 1.0
    }
}

/// Disjoint arcs sorted by left endpoint; at most the last one wraps past 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArcUnion {
    arcs: Vec<Arc>,
}

impl ArcUnion {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self { arcs: vec![Arc { center: 0.5, length: 1.0 }] }
    }

    /// Canonical union of arbitrary arcs.
    pub fn from_arcs(arcs: impl IntoIterator<Item = Arc>) -> Self {
        let mut spans: Vec<(f64, f64)> = arcs
            .into_iter()
            .map(|a| {
                let s = a.start();
                (s, s + a.length)
            })
            .collect();
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::from_sorted_spans(merge_spans(spans))
    }

    fn from_sorted_spans(mut spans: Vec<(f64, f64)>) -> Self {
        for s in &mut spans {
            let shift = s.0.floor();
            s.0 -= shift;
            s.1 -= shift;
        }
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let arcs = spans
            .into_iter()
            .map(|(s, e)| {
                let length = (e - s).min(1.0);
                if length >= 1.0 {
                    Arc { center: 0.5, length: 1.0 }
                } else {
                    Arc { center: frac(s + length / 2.0), length }
                }
            })
            .collect();
        Self { arcs }
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.arcs.iter().map(|a| a.length).sum::<f64>().min(1.0)
    }

    /// Membership in the (open) union, by binary search.
    pub fn contains(&self, t: f64) -> bool {
        let t = frac(t);
        if self.arcs.is_empty() {
            return false;
        }
        let idx = self.arcs.partition_point(|a| a.start() <= t);
        let prev = if idx == 0 { self.arcs.len() - 1 } else { idx - 1 };
        self.arcs[prev].contains(t) || self.arcs[idx % self.arcs.len()].contains(t)
    }

    pub fn union(&self, other: &ArcUnion) -> ArcUnion {
        ArcUnion::from_arcs(self.arcs.iter().chain(other.arcs.iter()).copied())
    }

    /// Closure-free complement: the gaps between consecutive arcs.
    pub fn complement(&self) -> ArcUnion {
        match self.arcs.len() {
            0 => return ArcUnion::full(),
            1 if self.arcs[0].is_full() => return ArcUnion::empty(),
            _ => {}
        }
        let mut gaps = Vec::with_capacity(self.arcs.len());
        for (i, a) in self.arcs.iter().enumerate() {
            let b = &self.arcs[(i + 1) % self.arcs.len()];
            let end = a.start() + a.length;
            let mut next = b.start();
            if next < end - MERGE_TOL {
                next += 1.0;
            }
            if next - end > MERGE_TOL {
                gaps.push((end, next));
            }
        }
        Self::from_sorted_spans(gaps.into_iter().map(|(s, e)| (frac(s), frac(s) + (e - s))).collect())
    }

    /// `Σ |J| log(1/|J|)` over the arcs.
    pub fn entropy(&self) -> f64 {
        self.arcs.iter().map(|a| entropy_term(a.length)).sum()
    }
}

pub fn entropy_term(len: f64) -> f64 {
    if len <= 0.0 || len >= 1.0 {
        0.0
    } else {
        -len * len.ln()
    }
}

/// `U_{N,δ}` materialized as `N` arcs.
pub fn dilate_arcs(delta: f64, n: u128) -> Result<ArcUnion> {
    check_generation(n, delta)?;
    if n > MAX_REALIZED_ARCS {
        return Err(invalid(format!("{n} arcs exceed the materialization limit")));
    }
    let len = delta / n as f64;
    Ok(ArcUnion::from_arcs(
        (0..n).map(|k| Arc { center: k as f64 / n as f64, length: len }),
    ))
}

fn check_generation(n: u128, delta: f64) -> Result<()> {
    if n == 0 {
        return Err(invalid("dilation N must be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta {delta} outside (0,1)")));
    }
    Ok(())
}

/// One factor `T \ U_{N,δ}` of the intersection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    #[serde(rename = "N")]
    pub n: u128,
    pub delta: f64,
}

impl Generation {
    pub fn new(n: u128, delta: f64) -> Result<Self> {
        check_generation(n, delta)?;
        Ok(Self { n, delta })
    }

    /// Whether `t` lies in the open arc union `U_{N,δ}`.
    pub fn excludes(&self, t: f64) -> bool {
        dist_to_int(frac_mul(self.n, frac(t))) < self.delta / 2.0
    }

    /// Signed distance from `t` to `U_{N,δ}` (negative inside).
    pub fn clearance(&self, t: f64) -> f64 {
        (dist_to_int(frac_mul(self.n, frac(t))) - self.delta / 2.0) / self.n as f64
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CompactSet {
    generations: Vec<Generation>,
    #[serde(skip)]
    realized: OnceLock<ArcUnion>,
}

impl PartialEq for CompactSet {
    fn eq(&self, other: &Self) -> bool {
        self.generations == other.generations
    }
}

/// Summary of the complement's connected components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentStats {
    pub count: u64,
    pub measure: f64,
    pub entropy: f64,
    /// Largest gap of `E` between complement components, as `(start, length)`.
    pub largest_gap: Option<(f64, f64)>,
}

impl CompactSet {
    /// `assemble_set`: the intersection of complements of the given generations.
    pub fn new(generations: Vec<Generation>) -> Result<Self> {
        for g in &generations {
            check_generation(g.n, g.delta)?;
        }
        Ok(Self { generations, realized: OnceLock::new() })
    }

    pub fn from_pairs(pairs: &[(u128, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(n, d)| Generation { n, delta: d }).collect())
    }

    pub fn generations(&self) -> &[Generation] {
        &self.generations
    }

    /// Set with one more generation; `E` can only shrink.
    pub fn with_generation(&self, g: Generation) -> Result<Self> {
        let mut gens = self.generations.clone();
        gens.push(g);
        Self::new(gens)
    }

    pub fn delta_sum(&self) -> f64 {
        self.generations.iter().map(|g| g.delta).sum()
    }

    pub fn arc_count(&self) -> u128 {
        self.generations.iter().map(|g| g.n).sum()
    }

    /// Membership in the closed set `E`.
    pub fn contains(&self, t: f64) -> bool {
        !self.generations.iter().any(|g| g.excludes(t))
    }

    /// Distance from `t ∈ E` to the complement; negative when `t ∉ E`.
    pub fn clearance(&self, t: f64) -> f64 {
        self.generations
            .iter()
            .map(|g| g.clearance(t))
            .fold(f64::INFINITY, f64::min)
    }

    /// Membership of the dyadic point `p / 2^bits`, exact.
    pub fn contains_dyadic(&self, p: u128, bits: u32) -> bool {
        self.generations.iter().all(|g| dyadic_clear(g, p, bits))
    }

    /// The complement as a materialized union; cached after the first call.
    pub fn realized_complement(&self) -> Result<&ArcUnion> {
        if let Some(u) = self.realized.get() {
            return Ok(u);
        }
        if self.arc_count() > MAX_REALIZED_ARCS {
            return Err(invalid(format!(
                "{} arcs exceed the materialization limit; use component_stats",
                self.arc_count()
            )));
        }
        let mut spans = Vec::new();
        self.sweep(|s, e| spans.push((s, e)));
        Ok(self.realized.get_or_init(|| ArcUnion::from_sorted_spans(spans)))
    }

    /// Streams the complement components as unwrapped `(start, end)` spans in
    /// increasing order; the span through 0 comes last, shifted by +1.
    pub fn sweep(&self, mut emit: impl FnMut(f64, f64)) {
        self.sweep_groups(|group| {
            // A group closing the wrap holds the shifted first group after
            // later arcs, so its start is not the first entry's.
            let start = group.iter().map(|a| a.start).fold(f64::INFINITY, f64::min);
            let end = group.iter().map(|a| a.end).fold(f64::NEG_INFINITY, f64::max);
            let span = (start, end);
            if span.1 - span.0 >= 1.0 - MERGE_TOL {
                emit(0.0, 1.0);
            } else {
                emit(span.0, span.1);
            }
        });
    }

    /// Streams each complement component as the list of generation arcs that
    /// form it, in the same order as [`CompactSet::sweep`].
    pub fn sweep_groups(&self, mut emit: impl FnMut(&[ArcRef])) {
        let mut heap: BinaryHeap<ArcRef> = self
            .generations
            .iter()
            .enumerate()
            .map(|(gen, g)| ArcRef::new(gen, g, 0))
            .collect();
        let mut first: Option<Vec<ArcRef>> = None;
        let mut group: Vec<ArcRef> = Vec::new();
        let mut end = f64::NEG_INFINITY;
        while let Some(a) = heap.pop() {
            let g = &self.generations[a.gen];
            if a.index + 1 < g.n {
                heap.push(ArcRef::new(a.gen, g, a.index + 1));
            }
            // Once a group reaches the wrapped first group it absorbs the rest.
            let wraps = first.as_ref().is_some_and(|f| end >= f[0].start + 1.0 - MERGE_TOL);
            if !group.is_empty() && a.start > end + MERGE_TOL && !wraps {
                if first.is_none() {
                    first = Some(std::mem::take(&mut group));
                } else {
                    emit(&group);
                    group.clear();
                }
                end = f64::NEG_INFINITY;
            }
            end = end.max(a.end);
            group.push(a);
        }
        match first {
            None if group.is_empty() => {}
            None => emit(&group),
            Some(mut first) => {
                for a in &mut first {
                    a.start += 1.0;
                    a.end += 1.0;
                }
                if end >= first[0].start - MERGE_TOL {
                    group.extend(first);
                    emit(&group);
                } else {
                    emit(&group);
                    emit(&first);
                }
            }
        }
    }

    /// Measure, entropy and component count of the complement in one sweep.
    pub fn component_stats(&self) -> ComponentStats {
        let mut count = 0u64;
        let mut measure = 0.0;
        let mut entropy = 0.0;
        let mut spans_first: Option<(f64, f64)> = None;
        let mut prev_end: Option<f64> = None;
        let mut largest: Option<(f64, f64)> = None;
        let consider_gap = |s: f64, len: f64, largest: &mut Option<(f64, f64)>| {
            if len > 0.0 && largest.map_or(true, |(_, l)| len > l) {
                *largest = Some((frac(s), len));
            }
        };
        self.sweep(|s, e| {
            let len = (e - s).min(1.0);
            count += 1;
            measure += len;
            entropy += entropy_term(len);
            if let Some(pe) = prev_end {
                consider_gap(pe, s - pe, &mut largest);
            }
            if spans_first.is_none() {
                spans_first = Some((s, e));
            }
            prev_end = Some(e);
        });
        match (spans_first, prev_end) {
            (Some((s0, _)), Some(pe)) => {
                if measure < 1.0 - MERGE_TOL {
                    let wrap = s0 + 1.0 - pe;
                    consider_gap(pe, wrap, &mut largest);
                }
            }
            _ => largest = Some((0.0, 1.0)),
        }
        ComponentStats { count, measure: measure.min(1.0), entropy, largest_gap: largest }
    }

    /// Lebesgue measure of `E`.
    pub fn measure(&self) -> f64 {
        (1.0 - self.component_stats().measure).max(0.0)
    }
}

fn dyadic_clear(g: &Generation, p: u128, bits: u32) -> bool {
    let modulus = 1u128 << bits;
    let mask = modulus - 1;
    let x = mulmod_pow2(g.n, p, mask);
    let d = x.min(modulus - x) as f64 / modulus as f64;
    d >= g.delta / 2.0
}

/// `a*b mod 2^k` without overflow, `mask = 2^k - 1`.
pub fn mulmod_pow2(a: u128, b: u128, mask: u128) -> u128 {
    a.wrapping_mul(b) & mask
}

/// One generation arc `(gen, index)`: centered at `index/N`, in unwrapped
/// coordinates (the arc at 0 starts below 0).
#[derive(Debug, Clone, Copy)]
pub struct ArcRef {
    pub start: f64,
    pub end: f64,
    pub gen: usize,
    pub index: u128,
}

impl ArcRef {
    fn new(gen: usize, g: &Generation, index: u128) -> Self {
        let h = g.delta / (2.0 * g.n as f64);
        let c = index as f64 / g.n as f64;
        Self { start: c - h, end: c + h, gen, index }
    }
}

impl PartialEq for ArcRef {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for ArcRef {}
impl PartialOrd for ArcRef {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ArcRef {
    // Reversed: BinaryHeap pops the smallest start first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.start.total_cmp(&self.start).then(other.gen.cmp(&self.gen))
    }
}

/// Merges spans sorted by start (in `[0,1)`), then lets the last span absorb
/// every leading span it reaches after wrapping past 1.
fn merge_spans(spans: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(spans.len());
    for (s, e) in spans {
        match out.last_mut() {
            Some(cur) if s <= cur.1 + MERGE_TOL => cur.1 = cur.1.max(e),
            _ => out.push((s, e)),
        }
    }
    let Some(mut last) = out.pop() else { return out };
    let mut lead = 0;
    while lead < out.len() && last.1 >= out[lead].0 + 1.0 - MERGE_TOL {
        last.1 = last.1.max(out[lead].1 + 1.0);
        lead += 1;
    }
    out.drain(..lead);
    if last.1 - last.0 >= 1.0 - MERGE_TOL {
        return vec![(0.0, 1.0)];
    }
    out.push(last);
    out
}

/// Beurling–Carleson entropy of `E` with the generation-wise majorant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyCertificate {
    pub exact: f64,
    pub lemma_bc_bound: f64,
    pub component_count: u64,
}

impl EntropyCertificate {
    pub fn holds(&self) -> bool {
        self.exact <= self.lemma_bc_bound * (1.0 + 1e-12) + 1e-15
    }
}

/// `Σ_j δ_j log(N_j/δ_j)`: each generation contributes `N_j` arcs of length `δ_j/N_j`.
pub fn generation_entropy_bound(gens: &[Generation]) -> f64 {
    gens.iter().map(|g| g.n as f64 * entropy_term(g.delta / g.n as f64)).sum()
}

pub fn bc_entropy(set: &CompactSet) -> Result<EntropyCertificate> {
    let stats = set.component_stats();
    if stats.measure >= 1.0 - MERGE_TOL {
        return Err(Error::DegenerateSet);
    }
    Ok(EntropyCertificate {
        exact: stats.entropy,
        lemma_bc_bound: generation_entropy_bound(set.generations()),
        component_count: stats.count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_generation_n1_is_one_centered_arc() {
        let u = dilate_arcs(0.5, 1).unwrap();
        assert_eq!(u.len(), 1);
        assert!(u.arcs()[0].center().abs() < 1e-15);
        assert_eq!(u.arcs()[0].length(), 0.5);
    }

    #[test]
    fn dilate_matches_grid_membership() {
        let u = dilate_arcs(0.2, 4).unwrap();
        assert_eq!(u.len(), 4);
        let mut centers: Vec<f64> = u.arcs().iter().map(|a| a.center()).collect();
        centers.sort_by(f64::total_cmp);
        for (c, want) in centers.iter().zip([0.0, 0.25, 0.5, 0.75]) {
            assert!((c - want).abs() < 1e-15);
        }
        let g = Generation::new(4, 0.2).unwrap();
        let grid = 100_000;
        let mut hits = 0;
        for k in 0..grid {
            let t = (k as f64 + 0.5) / grid as f64;
            let direct = dist_to_int(4.0 * t) < 0.1;
            assert_eq!(direct, u.contains(t));
            assert_eq!(direct, g.excludes(t));
            hits += direct as usize;
        }
        assert!((hits as f64 / grid as f64 - 0.2).abs() < 1e-4);
    }

    #[test]
    fn measure_is_delta() {
        assert!((dilate_arcs(0.3, 3).unwrap().measure() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn empty_and_single_sets() {
        let e = CompactSet::new(vec![]).unwrap();
        assert_eq!(e.measure(), 1.0);
        assert_eq!(bc_entropy(&e).unwrap().exact, 0.0);
        let one = CompactSet::from_pairs(&[(1, 0.5)]).unwrap();
        assert!((one.measure() - 0.5).abs() < 1e-15);
        let cert = bc_entropy(&one).unwrap();
        assert!((cert.exact - 0.5 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn quarter_arc_entropy() {
        let set = CompactSet::from_pairs(&[(1, 0.25)]).unwrap();
        assert!((bc_entropy(&set).unwrap().exact - 0.25 * 4f64.ln()).abs() < 1e-15);
        assert!((0.25 * 4f64.ln() - 0.34657).abs() < 1e-5);
    }

    #[test]
    fn two_disjoint_eighths() {
        let u = ArcUnion::from_arcs([Arc::new(0.1, 0.125).unwrap(), Arc::new(0.6, 0.125).unwrap()]);
        assert_eq!(u.len(), 2);
        assert!((u.entropy() - 2.0 * 0.125 * 8f64.ln()).abs() < 1e-15);
        assert!((u.entropy() - 0.5199).abs() < 1e-4);
    }

    #[test]
    fn two_generation_measure_against_monte_carlo() {
        use rand::{Rng, SeedableRng};
        let set = CompactSet::from_pairs(&[(2, 0.1), (3, 0.1)]).unwrap();
        let exact = set.measure();
        assert!(exact >= 0.8 - 1e-15);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let inside = (0..n).filter(|_| set.contains(rng.gen::<f64>())).count();
        assert!((inside as f64 / n as f64 - exact).abs() < 1e-3);
        let cert = bc_entropy(&set).unwrap();
        let bound = 0.1 * 20f64.ln() + 0.1 * 30f64.ln();
        assert!((cert.lemma_bc_bound - bound).abs() < 1e-14);
        assert!(cert.exact <= bound);
    }

    #[test]
    fn overlapping_generations_merge() {
        // 0 is a center of both generations, so those arcs overlap.
        let set = CompactSet::from_pairs(&[(2, 0.2), (4, 0.2)]).unwrap();
        let u = set.realized_complement().unwrap();
        let direct = dilate_arcs(0.2, 2).unwrap().union(&dilate_arcs(0.2, 4).unwrap());
        assert_eq!(u.len(), direct.len());
        assert!((u.measure() - direct.measure()).abs() < 1e-15);
        assert_eq!(set.component_stats().count as usize, u.len());
    }

    #[test]
    fn wide_arc_through_zero_absorbs_several_groups() {
        let set = CompactSet::from_pairs(&[(1, 0.1), (40, 0.005)]).unwrap();
        let u = set.realized_complement().unwrap();
        let direct = dilate_arcs(0.1, 1).unwrap().union(&dilate_arcs(0.005, 40).unwrap());
        assert_eq!(u.len(), direct.len());
        assert!((u.measure() - direct.measure()).abs() < 1e-14);
        let (s, len) = set.component_stats().largest_gap.unwrap();
        assert!(set.clearance(s + len / 2.0) >= len / 2.0 - 1e-15);
    }

    #[test]
    fn sweep_stats_match_realized_union_when_wrapping() {
        for pairs in [vec![(1, 0.1), (40, 0.005)], vec![(1, 1.0 / 6.0), (116, 1.0 / 6.0), (117, 1.0 / 6.0)]] {
            let set = CompactSet::from_pairs(&pairs).unwrap();
            let u = set.realized_complement().unwrap().clone();
            let stats = set.component_stats();
            assert_eq!(stats.count, u.len() as u64);
            assert!((stats.measure - u.measure()).abs() < 1e-13);
            assert!((stats.entropy - u.entropy()).abs() < 1e-12);
            let (s, len) = stats.largest_gap.unwrap();
            assert!(set.clearance(s + len / 2.0) >= len / 2.0 - 1e-15);
        }
    }

    #[test]
    fn covering_generations_are_degenerate() {
        let set = CompactSet::from_pairs(&[(1, 0.9), (2, 0.9)]).unwrap();
        assert!(set.measure() < 1e-15);
        assert!(matches!(bc_entropy(&set), Err(Error::DegenerateSet)));
    }

    #[test]
    fn complement_and_back() {
        let u = ArcUnion::from_arcs([Arc::new(0.0, 0.2).unwrap(), Arc::new(0.5, 0.1).unwrap()]);
        let c = u.complement();
        assert_eq!(c.len(), 2);
        assert!((c.measure() - 0.7).abs() < 1e-15);
        assert!((c.complement().measure() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn largest_gap_of_single_arc() {
        let set = CompactSet::from_pairs(&[(1, 0.5)]).unwrap();
        let (s, len) = set.component_stats().largest_gap.unwrap();
        assert!((s - 0.25).abs() < 1e-15 && (len - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dyadic_membership_agrees_with_float() {
        let set = CompactSet::from_pairs(&[(3, 0.1), (7, 0.05)]).unwrap();
        for p in 0..1024u128 {
            let t = p as f64 / 1024.0;
            assert_eq!(set.contains(t), set.contains_dyadic(p, 10), "p={p}");
        }
    }

    #[test]
    fn json_shape() {
        let set = CompactSet::from_pairs(&[(2, 0.1)]).unwrap();
        let s = serde_json::to_string(&set).unwrap();
        assert_eq!(s, r#"{"generations":[{"N":2,"delta":0.1}]}"#);
        let back: CompactSet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, set);
    }
}
