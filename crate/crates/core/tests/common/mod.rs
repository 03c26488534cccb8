//! Shared deterministic generators for the integration suites.

use std::fs;
use std::path::Path;

use wss_core::gf::FieldRng;
use wss_core::pattern::{analyze, normalize_pattern, CaseLabel, Pattern, PatternFile, UserSet};

pub struct TestRng(pub FieldRng);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(FieldRng::from_seed(seed))
    }

    pub fn below(&mut self, n: u64) -> u64 {
        if n <= 1 {
            0
        } else {
            self.0.uniform_mod(n)
        }
    }

    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.below(hi - lo + 1)
    }

    /// A uniformly random subset of `1..=k`.
    pub fn any_subset(&mut self, k: u32) -> UserSet {
        UserSet::from_bits(self.0.next_u64() & UserSet::full(k).bits())
    }

    /// A random subset of exactly `size` members of `pool`.
    pub fn choose(&mut self, pool: &[u32], size: usize) -> Vec<u32> {
        let mut pool = pool.to_vec();
        let mut out = Vec::with_capacity(size);
        for _ in 0..size {
            let i = self.below(pool.len() as u64) as usize;
            out.push(pool.swap_remove(i));
        }
        out.sort_unstable();
        out
    }
}

pub fn fixture(name: &str) -> Pattern {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    let text = fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {name}: {e}"));
    PatternFile::parse(&text).unwrap_or_else(|e| panic!("parse {name}: {e}"))
}

/// All subsets of exactly `size` members out of `1..=k`, as raw lists.
pub fn uniform_gens(k: u32, size: u32) -> Vec<Vec<u32>> {
    if size == 0 {
        return vec![vec![]];
    }
    (0u64..(1 << k))
        .filter(|bits| bits.count_ones() == size)
        .map(|bits| UserSet::from_bits(bits).to_vec())
        .collect()
}

/// The symmetric family: every set of up to `s` inputs protected, every
/// set of up to `t` users possibly colluding.
pub fn symmetric_pattern(k: u32, s: u32, t: u32) -> Pattern {
    normalize_pattern(k, &uniform_gens(k, s), &uniform_gens(k, t)).unwrap()
}

/// An arbitrary valid pattern with `k` in `k_lo..=k_hi`.
pub fn random_pattern(rng: &mut TestRng, k_lo: u32, k_hi: u32) -> Pattern {
    loop {
        let k = rng.range(k_lo as u64, k_hi as u64) as u32;
        let n_sec = rng.range(1, 3) as usize;
        let n_col = rng.below(5) as usize;
        let sec: Vec<Vec<u32>> = (0..n_sec).map(|_| rng.any_subset(k).to_vec()).collect();
        let col: Vec<Vec<u32>> = (0..n_col)
            .map(|_| {
                let mut t = rng.any_subset(k).to_vec();
                while t.len() as u32 > k - 2 {
                    let i = rng.below(t.len() as u64) as usize;
                    t.remove(i);
                }
                t
            })
            .collect();
        if let Ok(p) = normalize_pattern(k, &sec, &col) {
            return p;
        }
    }
}

/// A pattern that lands in the IF case by construction: a small total set
/// covered by singleton security sets, and colluding sets that each contain
/// all of the total set but one member plus a chunk of the outside users,
/// chosen so every pair union stays at most `k - 2` (no implicit users) and
/// the achieving unions cover everyone (`|Q| = K`).
pub fn random_if_pattern(rng: &mut TestRng, k_lo: u32, k_hi: u32, chunk_cap: usize) -> Pattern {
    let k = rng.range(k_lo as u64, k_hi as u64) as u32;
    debug_assert!(k >= 4);
    let a = rng.range(1, (k - 3) as u64) as u32;
    let all: Vec<u32> = (1..=k).collect();
    let total = rng.choose(&all, a as usize);
    let total_set = UserSet::from_users(total.iter().copied());

    let sec: Vec<Vec<u32>> = total.iter().map(|&u| vec![u]).collect();

    let outside: Vec<u32> = (1..=k).filter(|u| !total_set.contains(*u)).collect();
    let outside_shuffled = rng.choose(&outside, outside.len());
    let max_chunk = ((k - 2 - a) as usize).min(chunk_cap).max(1);
    let mut col: Vec<Vec<u32>> = Vec::new();
    let mut i = 0;
    while i < outside_shuffled.len() {
        let take = (rng.range(1, max_chunk as u64) as usize).min(outside_shuffled.len() - i);
        let chunk = &outside_shuffled[i..i + take];
        i += take;
        let skip = total[rng.below(total.len() as u64) as usize];
        let mut t: Vec<u32> = total.iter().copied().filter(|&u| u != skip).collect();
        t.extend_from_slice(chunk);
        t.sort_unstable();
        col.push(t);
    }

    let p = normalize_pattern(k, &sec, &col).unwrap();
    let analysis = analyze(&p);
    assert_eq!(
        analysis.case_label,
        CaseLabel::If,
        "generator invariant violated for k={k}, a={a}"
    );
    assert_eq!(analysis.a_star, a);
    p
}
