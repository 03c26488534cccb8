//! Linear key-scheme synthesis.
//!
//! A scheme assigns every user a coefficient matrix `C_k` over the working
//! prime field; the user's key is `C_k * s` for the uniform source vector
//! `s`. The matrices always sum to zero so the keys cancel in the message
//! sum, and the per-case generic-position condition makes the keys of any
//! relevant user subset jointly independent. Sampling is seeded and the
//! retry path is part of the scheme's provenance, so `(pattern, q, seed)`
//! determines the scheme exactly.

use std::collections::{BTreeMap, HashSet};

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gf::{field_rank, plan_field, FMatrix, FieldPlan, FieldRng, GfError};
use crate::pattern::{CaseLabel, Pattern, PatternAnalysis, UserSet};
use crate::ratecalc::LpSolution;

/// Consecutive failed sampling attempts tolerated before giving up. The
/// field size makes a single failure unlikely, so exhausting the budget
/// signals an implementation fault rather than bad luck.
pub const RETRY_BUDGET: u32 = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchemeError {
    /// RETRY_EXHAUSTED: generic position failed on every attempt.
    #[error("RETRY_EXHAUSTED: generic position failed {0} consecutive times")]
    RetryExhausted(u32),
    /// MISSING_LP: IF-case synthesis needs the LP certificate.
    #[error("MISSING_LP: IF-case synthesis requires the LP solution")]
    MissingLp,
    /// DIM_MISMATCH: a supplied vector has the wrong shape.
    #[error("DIM_MISMATCH: {0}")]
    DimMismatch(String),
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("malformed scheme file: {0}")]
    BadFile(String),
}

/// Numerators and common denominator the IF-case construction used.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct LpEcho {
    pub q_bar: u64,
    /// user outside the total set -> p_k.
    pub numerators: BTreeMap<u32, u64>,
}

/// A synthesized key-distribution scheme.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct KeyScheme {
    pub case_label: CaseLabel,
    pub field_plan: FieldPlan,
    pub k: u32,
    /// Input length L in extension symbols (1 except in the IF case,
    /// where it is q̄).
    pub input_len: u32,
    /// Dimension of the source key vector.
    pub source_dim: u32,
    /// Per-user coefficient matrix, index `user - 1`. Users assigned no
    /// key hold a 0-row matrix.
    pub coeff: Vec<FMatrix>,
    /// The extra keyed user outside Q (OTHER_Q case only).
    pub helper_user: Option<u32>,
    pub lp_echo: Option<LpEcho>,
    pub seed: u64,
    pub retry_count: u32,
    /// True when the IF-case generic-position check was restricted to the
    /// audit-relevant block subsets.
    pub gp_restricted: bool,
}

impl KeyScheme {
    pub fn modulus(&self) -> u64 {
        self.field_plan.p
    }

    /// Users holding a nonempty key.
    pub fn keyed_users(&self) -> impl Iterator<Item = u32> + '_ {
        (1..=self.k).filter(|&u| self.coeff[(u - 1) as usize].rows > 0)
    }

    pub fn coeff_of(&self, user: u32) -> &FMatrix {
        &self.coeff[(user - 1) as usize]
    }

    /// Sum of all coefficient matrices, which must vanish.
    pub fn zero_sum_holds(&self) -> bool {
        let keyed: Vec<&FMatrix> = self.keyed_users().map(|u| self.coeff_of(u)).collect();
        let Some(first) = keyed.first() else {
            return true;
        };
        let mut acc = FMatrix::zero(first.rows, first.cols, first.modulus);
        for m in keyed {
            if m.rows != acc.rows || m.cols != acc.cols {
                return false;
            }
            acc = acc.add(m);
        }
        acc.is_zero()
    }
}

fn derive_seed(seed: u64) -> u64 {
    let digest = Sha256::digest(seed.to_le_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Members of a set in ascending user order.
fn sorted_members(set: UserSet) -> Vec<u32> {
    set.iter().collect()
}

fn negated_sum(parts: &[&FMatrix], rows: usize, cols: usize, p: u64) -> FMatrix {
    let mut acc = FMatrix::zero(rows, cols, p);
    for m in parts {
        acc = acc.add(m);
    }
    acc.neg()
}

/// Synthesize the scheme for a classified pattern.
///
/// Dispatches on the case label; after sampling, the case's
/// generic-position predicate is verified and failed draws are retried
/// with a freshly derived seed up to [`RETRY_BUDGET`] times.
pub fn synthesize(
    pattern: &Pattern,
    analysis: &PatternAnalysis,
    lp: Option<&LpSolution>,
    q: u64,
    seed: u64,
) -> Result<KeyScheme, SchemeError> {
    let plan = plan_field(analysis, q, lp).map_err(|e| match e {
        GfError::MissingLp => SchemeError::MissingLp,
        other => SchemeError::Field(other),
    })?;
    synthesize_with_plan(pattern, analysis, lp, plan, seed)
}

/// Like [`synthesize`] but over a caller-chosen working prime. Used by the
/// brute-force oracle to rebuild schemes over fields small enough to
/// enumerate; such surrogates may legitimately exhaust the retry budget.
pub fn synthesize_at_prime(
    pattern: &Pattern,
    analysis: &PatternAnalysis,
    lp: Option<&LpSolution>,
    q: u64,
    seed: u64,
    p_override: u64,
) -> Result<KeyScheme, SchemeError> {
    let mut plan = plan_field(analysis, q, lp).map_err(|e| match e {
        GfError::MissingLp => SchemeError::MissingLp,
        other => SchemeError::Field(other),
    })?;
    if !crate::gf::is_prime(p_override) {
        return Err(SchemeError::Field(GfError::NotPrime(p_override)));
    }
    plan.p = p_override;
    synthesize_with_plan(pattern, analysis, lp, plan, seed)
}

fn synthesize_with_plan(
    pattern: &Pattern,
    analysis: &PatternAnalysis,
    lp: Option<&LpSolution>,
    plan: FieldPlan,
    seed: u64,
) -> Result<KeyScheme, SchemeError> {
    if analysis.case_label == CaseLabel::If && lp.is_none() {
        return Err(SchemeError::MissingLp);
    }
    let mut current = seed;
    for retry in 0..RETRY_BUDGET {
        let scheme = build_candidate(pattern, analysis, lp, &plan, seed, retry, current);
        if generic_position_check(&scheme, pattern, analysis) {
            debug_assert!(scheme.zero_sum_holds());
            return Ok(scheme);
        }
        current = derive_seed(current);
    }
    Err(SchemeError::RetryExhausted(RETRY_BUDGET))
}

fn build_candidate(
    pattern: &Pattern,
    analysis: &PatternAnalysis,
    lp: Option<&LpSolution>,
    plan: &FieldPlan,
    seed: u64,
    retry: u32,
    draw_seed: u64,
) -> KeyScheme {
    let k = pattern.k();
    let p = plan.p;
    let mut rng = FieldRng::from_seed(draw_seed);

    let (input_len, source_dim, coeff, helper_user, lp_echo): (
        u32,
        u32,
        Vec<FMatrix>,
        Option<u32>,
        Option<LpEcho>,
    ) = match analysis.case_label {
        CaseLabel::Full => {
            // Unit rows for users 1..K-1; the last user takes the negated sum.
            let dim = (k - 1) as usize;
            let mut coeff = Vec::with_capacity(k as usize);
            for u in 1..k {
                let mut row = FMatrix::zero(1, dim, p);
                row.set(0, (u - 1) as usize, 1);
                coeff.push(row);
            }
            let parts: Vec<&FMatrix> = coeff.iter().collect();
            let closing = negated_sum(&parts, 1, dim, p);
            coeff.push(closing);
            (1, k - 1, coeff, None, None)
        }
        CaseLabel::OtherLt => {
            // Every user in the total set gets a random row; the last
            // member closes the zero sum.
            let dim = analysis.a_star as usize;
            let members = sorted_members(analysis.total_set);
            let mut rows: BTreeMap<u32, FMatrix> = BTreeMap::new();
            for &u in &members[..members.len() - 1] {
                rows.insert(u, FMatrix::sample_uniform(1, dim, p, &mut rng));
            }
            let parts: Vec<&FMatrix> = members[..members.len() - 1]
                .iter()
                .map(|u| &rows[u])
                .collect();
            let closing = negated_sum(&parts, 1, dim, p);
            rows.insert(*members.last().expect("total set nonempty"), closing);
            let coeff = (1..=k)
                .map(|u| {
                    rows.get(&u)
                        .cloned()
                        .unwrap_or_else(|| FMatrix::zero(0, dim, p))
                })
                .collect();
            (1, analysis.a_star, coeff, None, None)
        }
        CaseLabel::OtherQ => {
            // All of the total set gets random rows; the smallest user
            // outside Q closes the zero sum.
            let dim = analysis.a_star as usize;
            let helper = UserSet::full(k)
                .minus(analysis.q_union)
                .min_user()
                .expect("|Q| < K in the OTHER_Q case");
            let members = sorted_members(analysis.total_set);
            let mut rows: BTreeMap<u32, FMatrix> = BTreeMap::new();
            for &u in &members {
                rows.insert(u, FMatrix::sample_uniform(1, dim, p, &mut rng));
            }
            let parts: Vec<&FMatrix> = members.iter().map(|u| &rows[u]).collect();
            let closing = negated_sum(&parts, 1, dim, p);
            rows.insert(helper, closing);
            let coeff = (1..=k)
                .map(|u| {
                    rows.get(&u)
                        .cloned()
                        .unwrap_or_else(|| FMatrix::zero(0, dim, p))
                })
                .collect();
            (1, analysis.a_star, coeff, Some(helper), None)
        }
        CaseLabel::If => {
            let sol = lp.expect("checked by caller");
            let q_bar = sol.q_bar;
            let a = analysis.a_star as u64;
            let dim = (sol.p_bar + (a - 1) * q_bar) as usize;
            let members = sorted_members(analysis.total_set);
            let outside: Vec<u32> = UserSet::full(k).minus(analysis.total_set).iter().collect();

            // Draw order: F_k then G_k for the users outside the total set
            // ascending, then H_k for all but the last member of the set.
            let mut rows: BTreeMap<u32, FMatrix> = BTreeMap::new();
            for &u in &outside {
                let p_k = sol.numerators[&u] as usize;
                let f = FMatrix::sample_uniform(q_bar as usize, p_k, p, &mut rng);
                let g = FMatrix::sample_uniform(p_k, dim, p, &mut rng);
                rows.insert(u, f.matmul(&g));
            }
            for &u in &members[..members.len() - 1] {
                rows.insert(u, FMatrix::sample_uniform(q_bar as usize, dim, p, &mut rng));
            }
            let parts: Vec<&FMatrix> = rows.values().collect();
            let closing = negated_sum(&parts, q_bar as usize, dim, p);
            rows.insert(*members.last().expect("total set nonempty"), closing);

            let coeff = (1..=k).map(|u| rows[&u].clone()).collect();
            let echo = LpEcho {
                q_bar,
                numerators: sol.numerators.clone(),
            };
            (q_bar as u32, dim as u32, coeff, None, Some(echo))
        }
    };

    KeyScheme {
        case_label: analysis.case_label,
        field_plan: plan.clone(),
        k,
        input_len,
        source_dim,
        coeff,
        helper_user,
        lp_echo,
        seed,
        retry_count: retry,
        gp_restricted: analysis.case_label == CaseLabel::If && k > 20,
    }
}

/// Stack the blocks of `users` and demand full row rank.
fn blocks_independent(scheme: &KeyScheme, blocks: &[(u32, FMatrix)], users: UserSet) -> bool {
    let parts: Vec<&FMatrix> = blocks
        .iter()
        .filter(|(u, _)| users.contains(*u))
        .map(|(_, m)| m)
        .collect();
    let total: usize = parts.iter().map(|m| m.rows).sum();
    let stacked = FMatrix::stack(&parts, scheme.source_dim as usize, scheme.modulus());
    field_rank(&stacked) == total
}

/// The case-specific full-rank condition on the stored coefficients.
///
/// For the scalar-key cases every subset of at most `a*` of the keyed rows
/// must be independent (checked at subset size exactly `min(a*, n)`, which
/// implies all smaller subsets). For the IF case the blocks are the first
/// `p_k` rows of `C_k` outside the total set and the whole `C_k` inside
/// it; every block union of at most `source_dim` rows must have full row
/// rank. Block subsets are enumerated exhaustively up to 2^20; beyond that
/// only the subsets the security audit consumes (those induced by
/// generator pairs) are checked and the scheme records the restriction.
pub fn generic_position_check(
    scheme: &KeyScheme,
    pattern: &Pattern,
    analysis: &PatternAnalysis,
) -> bool {
    let p = scheme.modulus();
    let dim = scheme.source_dim as usize;
    match scheme.case_label {
        CaseLabel::Full => {
            // Any K-1 of the K unit-or-negated rows are independent.
            let all: Vec<&FMatrix> = (1..=scheme.k).map(|u| scheme.coeff_of(u)).collect();
            (0..all.len()).all(|skip| {
                let parts: Vec<&FMatrix> = all
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, m)| *m)
                    .collect();
                field_rank(&FMatrix::stack(&parts, dim, p)) == parts.len()
            })
        }
        CaseLabel::OtherLt | CaseLabel::OtherQ => {
            let keyed: Vec<u32> = scheme.keyed_users().collect();
            let size = (analysis.a_star as usize).min(keyed.len());
            keyed.iter().combinations(size).all(|combo| {
                let parts: Vec<&FMatrix> = combo.iter().map(|u| scheme.coeff_of(**u)).collect();
                field_rank(&FMatrix::stack(&parts, dim, p)) == size
            })
        }
        CaseLabel::If => {
            let echo = scheme.lp_echo.as_ref().expect("IF scheme carries lp echo");
            let blocks: Vec<(u32, FMatrix)> = (1..=scheme.k)
                .map(|u| {
                    let c = scheme.coeff_of(u);
                    if analysis.total_set.contains(u) {
                        (u, c.clone())
                    } else {
                        (u, c.first_rows(echo.numerators[&u] as usize))
                    }
                })
                .collect();
            let budget = scheme.source_dim as usize;
            let row_total = |users: UserSet| -> usize {
                blocks
                    .iter()
                    .filter(|(u, _)| users.contains(*u))
                    .map(|(_, m)| m.rows)
                    .sum()
            };
            if !scheme.gp_restricted {
                for mask in 1u64..(1u64 << scheme.k) {
                    let users = UserSet::from_bits(mask);
                    if row_total(users) > budget {
                        continue;
                    }
                    if !blocks_independent(scheme, &blocks, users) {
                        return false;
                    }
                }
                true
            } else {
                let mut subsets: HashSet<u64> = HashSet::new();
                for u in 1..=scheme.k {
                    subsets.insert(UserSet::singleton(u).bits());
                }
                for (s, t) in pattern.generator_pairs() {
                    let union_in = s.union(t).intersect(analysis.total_set);
                    let t_out = t.minus(analysis.total_set);
                    subsets.insert(union_in.union(t_out).bits());
                    subsets.insert(t.intersect(analysis.total_set).union(t_out).bits());
                }
                subsets.into_iter().all(|bits| {
                    let users = UserSet::from_bits(bits);
                    row_total(users) > budget || blocks_independent(scheme, &blocks, users)
                })
            }
        }
    }
}

/// Expand the source key into per-user keys: `Z_k = C_k * z_sigma`.
/// Users with a 0-row coefficient matrix receive the empty key.
pub fn expand_keys(scheme: &KeyScheme, z_sigma: &FMatrix) -> Result<Vec<FMatrix>, SchemeError> {
    if z_sigma.rows != scheme.source_dim as usize || z_sigma.cols != 1 {
        return Err(SchemeError::DimMismatch(format!(
            "source key must be {}x1, got {}x{}",
            scheme.source_dim, z_sigma.rows, z_sigma.cols
        )));
    }
    if z_sigma.modulus != scheme.modulus() {
        return Err(SchemeError::DimMismatch(format!(
            "source key modulus {} differs from scheme modulus {}",
            z_sigma.modulus,
            scheme.modulus()
        )));
    }
    Ok((1..=scheme.k)
        .map(|u| scheme.coeff_of(u).matmul(z_sigma))
        .collect())
}

// ---------------------------------------------------------------------------
// Scheme file.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SchemeFileRepr {
    case: CaseLabel,
    field_plan: FieldPlan,
    #[serde(rename = "K")]
    k: u32,
    #[serde(rename = "L")]
    input_len: u32,
    source_dim: u32,
    coeff: BTreeMap<u32, FMatrix>,
    helper_u: Option<u32>,
    lp_echo: Option<LpEcho>,
    seed: u64,
    retry_count: u32,
    gp_restricted: bool,
    content_hash: String,
}

impl SchemeFileRepr {
    fn from_scheme(scheme: &KeyScheme, content_hash: String) -> Self {
        SchemeFileRepr {
            case: scheme.case_label,
            field_plan: scheme.field_plan.clone(),
            k: scheme.k,
            input_len: scheme.input_len,
            source_dim: scheme.source_dim,
            coeff: (1..=scheme.k)
                .map(|u| (u, scheme.coeff_of(u).clone()))
                .collect(),
            helper_u: scheme.helper_user,
            lp_echo: scheme.lp_echo.clone(),
            seed: scheme.seed,
            retry_count: scheme.retry_count,
            gp_restricted: scheme.gp_restricted,
            content_hash,
        }
    }

    fn into_scheme(self) -> Result<KeyScheme, SchemeError> {
        let mut coeff = Vec::with_capacity(self.k as usize);
        for u in 1..=self.k {
            let m = self.coeff.get(&u).ok_or_else(|| {
                SchemeError::BadFile(format!("missing coefficients for user {u}"))
            })?;
            if m.data.len() != m.rows * m.cols {
                return Err(SchemeError::BadFile(format!(
                    "user {u}: data length {} does not match {}x{}",
                    m.data.len(),
                    m.rows,
                    m.cols
                )));
            }
            coeff.push(m.clone());
        }
        Ok(KeyScheme {
            case_label: self.case,
            field_plan: self.field_plan,
            k: self.k,
            input_len: self.input_len,
            source_dim: self.source_dim,
            coeff,
            helper_user: self.helper_u,
            lp_echo: self.lp_echo,
            seed: self.seed,
            retry_count: self.retry_count,
            gp_restricted: self.gp_restricted,
        })
    }
}

/// Hash of the scheme content (hash field blanked), hex encoded.
pub fn scheme_hash(scheme: &KeyScheme) -> String {
    let repr = SchemeFileRepr::from_scheme(scheme, String::new());
    let bytes = serde_json::to_vec(&repr).expect("scheme serializes");
    hex::encode(Sha256::digest(bytes))
}

/// Serialize to the scheme file format, embedding the content hash.
/// Byte-identical for identical schemes.
pub fn write_scheme(scheme: &KeyScheme) -> String {
    let repr = SchemeFileRepr::from_scheme(scheme, scheme_hash(scheme));
    serde_json::to_string_pretty(&repr).expect("scheme serializes")
}

/// Parse a scheme file and verify its content hash.
pub fn read_scheme(json: &str) -> Result<KeyScheme, SchemeError> {
    let repr: SchemeFileRepr =
        serde_json::from_str(json).map_err(|e| SchemeError::BadFile(e.to_string()))?;
    let declared = repr.content_hash.clone();
    let scheme = repr.into_scheme()?;
    let actual = scheme_hash(&scheme);
    if declared != actual {
        return Err(SchemeError::BadFile(format!(
            "content hash mismatch: file says {declared}, content is {actual}"
        )));
    }
    Ok(scheme)
}
