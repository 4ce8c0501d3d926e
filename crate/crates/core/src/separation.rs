//! Dilations `N_j` that make the frequency blocks `Λ_j = {nN_j : 0<|n|≤M_j}`
//! pairwise disjoint.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyBlock {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "M")]
    pub m: u64,
}

impl FrequencyBlock {
    pub fn len(&self) -> u64 {
        2 * self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn contains(&self, v: i128) -> bool {
        let n = self.n as i128;
        v != 0 && v % n == 0 && (v / n).unsigned_abs() <= self.m as u128
    }

    /// Exact intersection test. With `g = gcd(N, N')`, the smallest common
    /// positive multiple is `lcm = N·(N'/g)`, reached at indices `N'/g` and `N/g`.
    pub fn meets(&self, other: &FrequencyBlock) -> bool {
        let g = gcd(self.n, other.n);
        other.n / g <= self.m && self.n / g <= other.m
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Strategy {
    GreedyPigeonhole,
    Prime,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::GreedyPigeonhole => "GREEDY_PIGEONHOLE",
            Strategy::Prime => "PRIME",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationResult {
    pub ns: Vec<u64>,
    pub ms: Vec<u64>,
    pub strategy: Strategy,
    /// Growth bound for each `N_j` (pigeonhole count or prime-counting estimate).
    pub bounds: Vec<f64>,
    pub bound_ok: Vec<bool>,
}

impl SeparationResult {
    pub fn blocks(&self) -> impl Iterator<Item = FrequencyBlock> + '_ {
        self.ns.iter().zip(&self.ms).map(|(&n, &m)| FrequencyBlock { n, m })
    }

    pub fn all_bounds_ok(&self) -> bool {
        self.bound_ok.iter().all(|&b| b)
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "j,M_j,N_j,bound,strategy")?;
        for (j, ((n, m), b)) in self.ns.iter().zip(&self.ms).zip(&self.bounds).enumerate() {
            writeln!(w, "{},{m},{n},{},{}", j + 1, crate::numeric::fmt17(*b), self.strategy.as_str())?;
        }
        Ok(())
    }
}

/// Smallest admissible `N` at each step, starting from `N_1 = 1`.
///
/// Every `N ≤ M_i` with `N_i ≤ M_new` collides with block `i` (take indices `N_i`
/// and `N`), so the upward scan starts just past the largest such `M_i`.
pub fn greedy_select(ms: &[u64]) -> Result<SeparationResult> {
    if ms.is_empty() {
        return Err(invalid("block sizes must be nonempty"));
    }
    if ms.contains(&0) {
        return Err(invalid("block sizes must be positive"));
    }
    let mut blocks: Vec<FrequencyBlock> = Vec::with_capacity(ms.len());
    let mut bounds = Vec::with_capacity(ms.len());
    let mut bound_ok = Vec::with_capacity(ms.len());
    let mut mass: u128 = 0;
    for &m in ms {
        let start = blocks.iter().filter(|b| b.n <= m).map(|b| b.m).max().unwrap_or(0) + 1;
        let mut n = start;
        loop {
            let cand = FrequencyBlock { n, m };
            if !blocks.iter().any(|b| b.meets(&cand)) {
                break;
            }
            n = n.checked_add(1).ok_or_else(|| Error::Overflow("greedy scan".into()))?;
        }
        let bound = (2 * m as u128)
            .checked_mul(mass)
            .and_then(|x| x.checked_add(1))
            .ok_or_else(|| Error::Overflow("pigeonhole bound".into()))?;
        bounds.push(bound as f64);
        bound_ok.push(n as u128 <= bound);
        mass = mass.checked_add(2 * m as u128).ok_or_else(|| Error::Overflow("block mass".into()))?;
        blocks.push(FrequencyBlock { n, m });
    }
    Ok(SeparationResult {
        ns: blocks.iter().map(|b| b.n).collect(),
        ms: ms.to_vec(),
        strategy: Strategy::GreedyPigeonhole,
        bounds,
        bound_ok,
    })
}

/// `N_k` = the `k`-th prime exceeding `M_{k-1}` (with `M_0 = 0`).
pub fn prime_select(ms: &[u64]) -> Result<SeparationResult> {
    if ms.is_empty() {
        return Err(invalid("block sizes must be nonempty"));
    }
    if ms.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Precondition("block sizes must be non-decreasing".into()));
    }
    let mut ns = Vec::with_capacity(ms.len());
    let mut bounds = Vec::with_capacity(ms.len());
    let mut bound_ok = Vec::with_capacity(ms.len());
    for k in 1..=ms.len() {
        let floor = if k == 1 { 0 } else { ms[k - 2] };
        let mut p = floor;
        for _ in 0..k {
            p = next_prime(p + 1).ok_or_else(|| Error::Overflow("prime search".into()))?;
        }
        // p_n ≤ n(ln n + ln ln n) for n ≥ 6, and the k-th prime past X is p_n with n ≤ X + k.
        let x = (floor + k as u64) as f64;
        let bound = if x >= 6.0 { x * (x.ln() + x.ln().ln()) } else { 13.0 };
        bounds.push(bound);
        bound_ok.push(p as f64 <= bound);
        ns.push(p);
    }
    Ok(SeparationResult { ns, ms: ms.to_vec(), strategy: Strategy::Prime, bounds, bound_ok })
}

/// Smallest prime `≥ from`.
pub fn next_prime(from: u64) -> Option<u64> {
    (from.max(2)..=u64::MAX).find(|&n| is_prime(n))
}

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mulmod(r, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        r
    };
    'witness: for &a in &BASES {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A shared element of two blocks (1-based block indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collision {
    pub i: usize,
    pub j: usize,
    pub value: u128,
}

/// Exhaustive disjointness check: every positive element of every block is
/// listed, sorted and scanned for repeats. Blocks are symmetric, so the
/// positive halves decide the question.
pub fn check_disjoint(ns: &[u64], ms: &[u64]) -> Result<Option<Collision>> {
    if ns.len() != ms.len() {
        return Err(invalid("N and M lists differ in length"));
    }
    let total: u64 = ms.iter().sum();
    let max_value = ns.iter().zip(ms).map(|(&n, &m)| n as u128 * m as u128).max().unwrap_or(0);
    let tag_bits = usize::BITS - ns.len().leading_zeros();
    if max_value < (1u128 << (64 - tag_bits)) {
        let mut all: Vec<u64> = Vec::with_capacity(total as usize);
        for (b, (&n, &m)) in ns.iter().zip(ms).enumerate() {
            all.extend((1..=m).map(|a| ((a * n) << tag_bits) | b as u64));
        }
        all.sort_unstable();
        let mask = (1u64 << tag_bits) - 1;
        Ok(all.windows(2).find(|w| w[0] >> tag_bits == w[1] >> tag_bits).map(|w| {
            let (x, y) = ((w[0] & mask) as usize, (w[1] & mask) as usize);
            Collision { i: x.min(y) + 1, j: x.max(y) + 1, value: (w[0] >> tag_bits) as u128 }
        }))
    } else {
        let mut all: Vec<(u128, u32)> = Vec::with_capacity(total as usize);
        for (b, (&n, &m)) in ns.iter().zip(ms).enumerate() {
            all.extend((1..=m as u128).map(|a| (a * n as u128, b as u32)));
        }
        all.sort_unstable();
        Ok(all.windows(2).find(|w| w[0].0 == w[1].0).map(|w| Collision {
            i: w[0].1.min(w[1].1) as usize + 1,
            j: w[0].1.max(w[1].1) as usize + 1,
            value: w[0].0,
        }))
    }
}

/// The same question answered pairwise with [`FrequencyBlock::meets`].
pub fn check_disjoint_pairwise(ns: &[u64], ms: &[u64]) -> Option<(usize, usize)> {
    let blocks: Vec<FrequencyBlock> = ns.iter().zip(ms).map(|(&n, &m)| FrequencyBlock { n, m }).collect();
    for j in 0..blocks.len() {
        for i in 0..j {
            if blocks[i].meets(&blocks[j]) {
                return Some((i + 1, j + 1));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn brute_greedy(ms: &[u64]) -> Vec<u64> {
        let mut taken: HashSet<i64> = HashSet::new();
        let mut ns = Vec::new();
        for &m in ms {
            let n = (1..)
                .find(|&n: &i64| (1..=m as i64).all(|a| !taken.contains(&(a * n))))
                .unwrap();
            for a in 1..=m as i64 {
                taken.insert(a * n);
            }
            ns.push(n as u64);
        }
        ns
    }

    #[test]
    fn small_examples() {
        assert_eq!(greedy_select(&[1]).unwrap().ns, vec![1]);
        assert_eq!(greedy_select(&[1, 2]).unwrap().ns, vec![1, 2]);
        assert_eq!(brute_greedy(&[1, 2]), vec![1, 2]);
        let r = greedy_select(&[3, 3, 3]).unwrap();
        assert!(r.all_bounds_ok());
        assert_eq!(check_disjoint(&r.ns, &r.ms).unwrap(), None);
        let r = greedy_select(&[1, 2, 3]).unwrap();
        assert_eq!(check_disjoint(&r.ns, &r.ms).unwrap(), None);
    }

    #[test]
    fn primes() {
        assert_eq!(prime_select(&[1, 1]).unwrap().ns, vec![2, 3]);
        assert_eq!(prime_select(&[4, 4]).unwrap().ns, vec![2, 7]);
        assert!(matches!(prime_select(&[4, 3]), Err(Error::Precondition(_))));
        let small: Vec<u64> = (0..200).filter(|&n| is_prime(n)).collect();
        assert_eq!(&small[..10], &[2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(small.len(), 46);
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(3_215_031_751));
    }

    #[test]
    fn constructed_collision() {
        let c = check_disjoint(&[2, 4], &[2, 1]).unwrap().unwrap();
        assert_eq!((c.i, c.j, c.value), (1, 2, 4));
        assert_eq!(check_disjoint_pairwise(&[2, 4], &[2, 1]), Some((1, 2)));
    }

    proptest! {
        #[test]
        fn greedy_matches_brute_force(ms in proptest::collection::vec(1u64..12, 1..7)) {
            let r = greedy_select(&ms).unwrap();
            prop_assert_eq!(&r.ns, &brute_greedy(&ms));
            prop_assert!(r.all_bounds_ok());
            prop_assert_eq!(check_disjoint(&r.ns, &r.ms).unwrap(), None);
        }

        #[test]
        fn meets_agrees_with_sets(n1 in 1u64..40, m1 in 1u64..15, n2 in 1u64..40, m2 in 1u64..15) {
            let a: HashSet<u64> = (1..=m1).map(|k| k * n1).collect();
            let hit = (1..=m2).any(|k| a.contains(&(k * n2)));
            prop_assert_eq!(FrequencyBlock { n: n1, m: m1 }.meets(&FrequencyBlock { n: n2, m: m2 }), hit);
        }

        #[test]
        fn prime_blocks_avoid_small_multiples(ms in proptest::collection::vec(1u64..50, 1..8)) {
            let mut ms = ms;
            ms.sort_unstable();
            let r = prime_select(&ms).unwrap();
            prop_assert_eq!(check_disjoint(&r.ns, &r.ms).unwrap(), None);
            for k in 1..ms.len() {
                for &m in &ms[..k] {
                    prop_assert!((1..=m).all(|a| a % r.ns[k] != 0));
                }
            }
        }
    }
}
