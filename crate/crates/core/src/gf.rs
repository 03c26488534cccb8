//! Prime-field linear algebra and working-field planning.
//!
//! Schemes operate over `F_p` for the smallest prime `p` exceeding the
//! case-dependent size bound; one `F_p` element stands for one
//! extension-field symbol, so all rate bookkeeping stays exact in
//! extension-symbol units. The plan records the user-declared base field
//! `q` and the implied extension degree `B` so reports can state both.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pattern::{CaseLabel, PatternAnalysis};
use crate::ratecalc::LpSolution;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GfError {
    /// MISSING_LP: the IF-case bound needs the LP certificate.
    #[error("MISSING_LP: field planning for the IF case requires the LP solution")]
    MissingLp,
    #[error("base field size {0} is not prime")]
    NotPrime(u64),
    #[error("field size bound overflows u64: {0}")]
    BoundOverflow(String),
    #[error("DIM_MISMATCH: {0}")]
    DimMismatch(String),
}

/// Which unit lengths are counted in. Everything in this crate uses
/// extension symbols; the base unit exists for report conversion only.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum SymbolUnit {
    #[serde(rename = "BASE")]
    Base,
    #[serde(rename = "EXTENSION")]
    Extension,
}

/// Working-field choice for one scheme.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct FieldPlan {
    /// Base field size declared by the caller (prime).
    pub q: u64,
    /// Extension degree: smallest `B` with `q^B > size_bound`.
    #[serde(rename = "B")]
    pub b_ext: u32,
    /// Case-dependent lower bound the working field must exceed.
    pub size_bound: u64,
    /// Working prime: smallest prime above `size_bound`.
    pub p: u64,
    pub symbol_unit: SymbolUnit,
}

// --- modular arithmetic -----------------------------------------------------

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 + b as u128) % m as u128) as u64
}

pub fn neg_mod(a: u64, m: u64) -> u64 {
    if a == 0 {
        0
    } else {
        m - a
    }
}

pub fn sub_mod(a: u64, b: u64, m: u64) -> u64 {
    add_mod(a, neg_mod(b, m), m)
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo prime `p`; every nonzero element has one.
pub fn inv_mod(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0);
    pow_mod(a, p - 2, p)
}

/// Deterministic Miller-Rabin, valid for all u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..r - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime strictly greater than `n`.
pub fn next_prime_after(n: u64) -> u64 {
    let mut c = n + 1;
    loop {
        if is_prime(c) {
            return c;
        }
        c += 1;
    }
}

/// `C(n, k)` if it fits in u64.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc.checked_mul((n - k + i) as u128)?;
        acc /= i as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

// --- seeded sampling ---------------------------------------------------------

/// Seeded generator for field elements: ChaCha20 keyed from the 64-bit seed
/// (via the standard `seed_from_u64` expansion), with rejection sampling to
/// make draws uniform mod `p`. The stream is identical across platforms
/// given `(seed, p)` and the draw order.
pub struct FieldRng {
    rng: ChaCha20Rng,
}

impl FieldRng {
    pub fn from_seed(seed: u64) -> Self {
        FieldRng {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw from `[0, p)` by rejection.
    pub fn uniform_mod(&mut self, p: u64) -> u64 {
        debug_assert!(p >= 2);
        // Reject draws from the tail partial cycle of 2^64 mod p.
        let rem = (u64::MAX % p + 1) % p; // 2^64 mod p
        loop {
            let v = self.rng.next_u64();
            if rem == 0 || v < u64::MAX - rem + 1 {
                return v % p;
            }
        }
    }
}

// --- matrices ----------------------------------------------------------------

/// Dense matrix over `F_p`, row-major. Zero-row matrices are allowed and
/// keep their column count so stacking stays well-typed.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct FMatrix {
    pub rows: usize,
    pub cols: usize,
    #[serde(rename = "mod")]
    pub modulus: u64,
    pub data: Vec<u64>,
}

impl FMatrix {
    pub fn zero(rows: usize, cols: usize, modulus: u64) -> Self {
        FMatrix {
            rows,
            cols,
            modulus,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize, modulus: u64) -> Self {
        let mut m = FMatrix::zero(n, n, modulus);
        for i in 0..n {
            m.data[i * n + i] = 1 % modulus;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<u64>>, cols: usize, modulus: u64) -> Self {
        let n_rows = rows.len();
        let mut data = Vec::with_capacity(n_rows * cols);
        for r in rows {
            assert_eq!(r.len(), cols);
            data.extend(r.into_iter().map(|v| v % modulus));
        }
        FMatrix {
            rows: n_rows,
            cols,
            modulus,
            data,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = v % self.modulus;
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// First `n` rows as a new matrix.
    pub fn first_rows(&self, n: usize) -> FMatrix {
        assert!(n <= self.rows);
        FMatrix {
            rows: n,
            cols: self.cols,
            modulus: self.modulus,
            data: self.data[..n * self.cols].to_vec(),
        }
    }

    /// Vertical stack. Empty input yields a 0 x cols matrix.
    pub fn stack(parts: &[&FMatrix], cols: usize, modulus: u64) -> FMatrix {
        let mut data = Vec::new();
        let mut rows = 0;
        for m in parts {
            assert_eq!(m.cols, cols, "stack column mismatch");
            assert_eq!(m.modulus, modulus, "stack modulus mismatch");
            data.extend_from_slice(&m.data);
            rows += m.rows;
        }
        FMatrix {
            rows,
            cols,
            modulus,
            data,
        }
    }

    pub fn add(&self, other: &FMatrix) -> FMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        assert_eq!(self.modulus, other.modulus);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| add_mod(a, b, self.modulus))
            .collect();
        FMatrix {
            rows: self.rows,
            cols: self.cols,
            modulus: self.modulus,
            data,
        }
    }

    pub fn neg(&self) -> FMatrix {
        let data = self.data.iter().map(|&a| neg_mod(a, self.modulus)).collect();
        FMatrix {
            rows: self.rows,
            cols: self.cols,
            modulus: self.modulus,
            data,
        }
    }

    pub fn sub(&self, other: &FMatrix) -> FMatrix {
        self.add(&other.neg())
    }

    pub fn matmul(&self, other: &FMatrix) -> FMatrix {
        assert_eq!(self.cols, other.rows, "matmul inner dimension mismatch");
        assert_eq!(self.modulus, other.modulus);
        let m = self.modulus;
        let mut out = FMatrix::zero(self.rows, other.cols, m);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = add_mod(out.get(i, j), mul_mod(a, other.get(k, j), m), m);
                    out.data[i * other.cols + j] = v;
                }
            }
        }
        out
    }

    /// Uniform i.i.d. entries, deterministic given the generator state.
    /// Entries are drawn row-major.
    pub fn sample_uniform(rows: usize, cols: usize, modulus: u64, rng: &mut FieldRng) -> FMatrix {
        let data = (0..rows * cols).map(|_| rng.uniform_mod(modulus)).collect();
        FMatrix {
            rows,
            cols,
            modulus,
            data,
        }
    }
}

/// Rank over `F_p` by exact row reduction; every nonzero pivot is
/// invertible because `p` is prime.
pub fn field_rank(m: &FMatrix) -> usize {
    let p = m.modulus;
    let mut a = m.data.clone();
    let (rows, cols) = (m.rows, m.cols);
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let pivot = (rank..rows).find(|&r| a[r * cols + col] % p != 0);
        let Some(pr) = pivot else { continue };
        for c in 0..cols {
            a.swap(rank * cols + c, pr * cols + c);
        }
        let inv = inv_mod(a[rank * cols + col], p);
        for c in col..cols {
            a[rank * cols + c] = mul_mod(a[rank * cols + c], inv, p);
        }
        for r in 0..rows {
            if r == rank {
                continue;
            }
            let f = a[r * cols + col] % p;
            if f == 0 {
                continue;
            }
            for c in col..cols {
                let v = sub_mod(a[r * cols + c], mul_mod(f, a[rank * cols + c], p), p);
                a[r * cols + c] = v;
            }
        }
        rank += 1;
    }
    debug_assert!(rank <= rows.min(cols));
    rank
}

/// Rank of the vertical stack, with the subadditivity sanity check active
/// in debug builds.
pub fn stacked_rank(parts: &[&FMatrix], cols: usize, modulus: u64) -> usize {
    let stacked = FMatrix::stack(parts, cols, modulus);
    let r = field_rank(&stacked);
    debug_assert!(
        r <= parts.iter().map(|m| field_rank(m)).sum::<usize>(),
        "rank subadditivity violated"
    );
    r
}

// --- field planning ------------------------------------------------------------

/// Pick the working field for a classified pattern.
///
/// Size bounds per case: `1` for the full baseline,
/// `a* * C(|total|, a*)` when `a* < |total|`,
/// `a* * C(|total|+1, a*)` when `a* = |total|` with `|Q| < K`, and
/// `(a*+b*) q̄ * C(K q̄, (a*+b*) q̄)` in the `IF` case.
pub fn plan_field(
    analysis: &PatternAnalysis,
    q: u64,
    lp: Option<&LpSolution>,
) -> Result<FieldPlan, GfError> {
    if !is_prime(q) {
        return Err(GfError::NotPrime(q));
    }
    let a = analysis.a_star as u64;
    let total = analysis.total_set.card() as u64;
    let size_bound: u64 = match analysis.case_label {
        CaseLabel::Full => 1,
        CaseLabel::OtherLt => a
            .checked_mul(binomial(total, a).ok_or_else(overflow)?)
            .ok_or_else(overflow)?,
        CaseLabel::OtherQ => a
            .checked_mul(binomial(total + 1, a).ok_or_else(overflow)?)
            .ok_or_else(overflow)?,
        CaseLabel::If => {
            let sol = lp.ok_or(GfError::MissingLp)?;
            // (a* + b*) q̄ = a* q̄ + p̄ - q̄, an integer since b* is a
            // term sum of the p_k / q̄ values.
            let rows = a * sol.q_bar + sol.p_bar - sol.q_bar;
            let k = analysis.k as u64;
            rows.checked_mul(binomial(k * sol.q_bar, rows).ok_or_else(overflow)?)
                .ok_or_else(overflow)?
        }
    };
    let mut b_ext = 1u32;
    let mut acc = q as u128;
    while acc <= size_bound as u128 {
        acc *= q as u128;
        b_ext += 1;
    }
    Ok(FieldPlan {
        q,
        b_ext,
        size_bound,
        p: next_prime_after(size_bound),
        symbol_unit: SymbolUnit::Extension,
    })
}

fn overflow() -> GfError {
    GfError::BoundOverflow("case bound exceeds u64".into())
}
