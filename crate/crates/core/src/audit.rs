//! Exact security and converse verification.
//!
//! Every protocol variable is a linear image of the uniform ambient vector
//! `(w_1; ..; w_K; z_sigma)`, so conditional entropies are rank differences
//! and conditional mutual information is computed exactly from four ranks —
//! no probability enumeration on the main path. A brute-force oracle
//! enumerates the full joint distribution on small fields and tests the
//! conditional-independence factorization directly, giving an independent
//! zero/nonzero verdict.
//!
//! All entropies are in extension-symbol units.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{add_mod, mul_mod, stacked_rank, FMatrix};
use crate::pattern::{Pattern, PatternAnalysis, UserSet};
use crate::ratecalc::RateAnalysis;
use crate::rational::{ratio_int, ratio_to_string};
use crate::scheme::{scheme_hash, KeyScheme};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AuditError {
    #[error("DIM_MISMATCH: {0}")]
    DimMismatch(String),
    /// SIZE_LIMIT: the joint distribution is too large to enumerate.
    #[error("SIZE_LIMIT: {atoms} atoms exceed the oracle budget of 2^{budget_log2}")]
    SizeLimit { atoms: u128, budget_log2: u32 },
}

/// A linear map from the ambient uniform vector to one observable.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LinearObservable {
    pub label: String,
    pub map: FMatrix,
}

/// Observable builders over one scheme's ambient space
/// `(w_1; ..; w_K; z_sigma)` of dimension `K*L + source_dim`.
pub struct ObservableSpace<'a> {
    scheme: &'a KeyScheme,
}

impl<'a> ObservableSpace<'a> {
    pub fn new(scheme: &'a KeyScheme) -> Self {
        ObservableSpace { scheme }
    }

    pub fn ambient_dim(&self) -> usize {
        let s = self.scheme;
        s.k as usize * s.input_len as usize + s.source_dim as usize
    }

    fn l(&self) -> usize {
        self.scheme.input_len as usize
    }

    fn w_offset(&self, user: u32) -> usize {
        (user - 1) as usize * self.l()
    }

    fn z_offset(&self) -> usize {
        self.scheme.k as usize * self.l()
    }

    /// The input of one user.
    pub fn w(&self, user: u32) -> LinearObservable {
        let l = self.l();
        let mut map = FMatrix::zero(l, self.ambient_dim(), self.scheme.modulus());
        for i in 0..l {
            map.set(i, self.w_offset(user) + i, 1);
        }
        LinearObservable {
            label: format!("W_{user}"),
            map,
        }
    }

    /// The sum of all inputs.
    pub fn sum_w(&self) -> LinearObservable {
        let l = self.l();
        let mut map = FMatrix::zero(l, self.ambient_dim(), self.scheme.modulus());
        for u in 1..=self.scheme.k {
            for i in 0..l {
                map.set(i, self.w_offset(u) + i, 1);
            }
        }
        LinearObservable {
            label: "sum W".into(),
            map,
        }
    }

    /// The key of one user (0 rows for unkeyed users).
    pub fn z(&self, user: u32) -> LinearObservable {
        let c = self.scheme.coeff_of(user);
        let mut map = FMatrix::zero(c.rows, self.ambient_dim(), self.scheme.modulus());
        for r in 0..c.rows {
            for j in 0..c.cols {
                map.set(r, self.z_offset() + j, c.get(r, j));
            }
        }
        LinearObservable {
            label: format!("Z_{user}"),
            map,
        }
    }

    /// The message of one user: `X_k = W_k + Z_k`.
    pub fn x(&self, user: u32) -> LinearObservable {
        let l = self.l();
        let c = self.scheme.coeff_of(user);
        let mut map = FMatrix::zero(l, self.ambient_dim(), self.scheme.modulus());
        for i in 0..l {
            map.set(i, self.w_offset(user) + i, 1);
        }
        if c.rows > 0 {
            debug_assert_eq!(c.rows, l, "keyed users carry L-row coefficients");
            for r in 0..l {
                for j in 0..c.cols {
                    map.set(r, self.z_offset() + j, c.get(r, j));
                }
            }
        }
        LinearObservable {
            label: format!("X_{user}"),
            map,
        }
    }

    /// The whole source key.
    pub fn z_sigma(&self) -> LinearObservable {
        let d = self.scheme.source_dim as usize;
        let mut map = FMatrix::zero(d, self.ambient_dim(), self.scheme.modulus());
        for i in 0..d {
            map.set(i, self.z_offset() + i, 1);
        }
        LinearObservable {
            label: "Z_sigma".into(),
            map,
        }
    }

    pub fn w_set(&self, users: UserSet) -> Vec<LinearObservable> {
        users.iter().map(|u| self.w(u)).collect()
    }

    pub fn z_set(&self, users: UserSet) -> Vec<LinearObservable> {
        users.iter().map(|u| self.z(u)).collect()
    }

    pub fn x_all(&self) -> Vec<LinearObservable> {
        (1..=self.scheme.k).map(|u| self.x(u)).collect()
    }
}

fn rank_of(obs: &[&LinearObservable]) -> Result<usize, AuditError> {
    let Some(first) = obs.first() else {
        return Ok(0);
    };
    let cols = first.map.cols;
    let modulus = first.map.modulus;
    for o in obs {
        if o.map.cols != cols || o.map.modulus != modulus {
            return Err(AuditError::DimMismatch(format!(
                "observable `{}` lives in a different ambient space",
                o.label
            )));
        }
    }
    let parts: Vec<&FMatrix> = obs.iter().map(|o| &o.map).collect();
    Ok(stacked_rank(&parts, cols, modulus))
}

/// `H(obs | given)` in extension symbols: the rank of the joint stack minus
/// the rank of the conditioning stack. Exact for linear functions of a
/// uniform ambient vector.
pub fn linear_entropy(
    obs: &[&LinearObservable],
    given: &[&LinearObservable],
) -> Result<BigRational, AuditError> {
    let joint: Vec<&LinearObservable> = obs.iter().chain(given.iter()).copied().collect();
    if let (Some(a), Some(b)) = (joint.first(), given.first()) {
        if a.map.cols != b.map.cols || a.map.modulus != b.map.modulus {
            return Err(AuditError::DimMismatch(
                "obs and given live in different ambient spaces".into(),
            ));
        }
    }
    let r_joint = rank_of(&joint)?;
    let r_given = rank_of(given)?;
    debug_assert!(r_joint >= r_given, "rank is monotone under stacking");
    Ok(ratio_int((r_joint - r_given) as i64))
}

fn refs(v: &[LinearObservable]) -> Vec<&LinearObservable> {
    v.iter().collect()
}

/// The security quantity for one pair: the mutual information between the
/// protected inputs and all messages, given the decoded sum and the
/// coalition's inputs and keys. Zero is required.
pub fn security_mi(scheme: &KeyScheme, s: UserSet, t: UserSet) -> BigRational {
    let space = ObservableSpace::new(scheme);
    let a = space.w_set(s);
    let b = space.x_all();
    let mut c = vec![space.sum_w()];
    for u in t.iter() {
        c.push(space.w(u));
        c.push(space.z(u));
    }
    let a = refs(&a);
    let b = refs(&b);
    let c = refs(&c);
    let bc: Vec<&LinearObservable> = b.iter().chain(c.iter()).copied().collect();

    // I(A; B | C) = H(A|C) - H(A|B,C), each term a rank difference.
    let h_a_c = linear_entropy(&a, &c).expect("same ambient");
    let h_a_bc = linear_entropy(&a, &bc).expect("same ambient");
    h_a_c - h_a_bc
}

/// Key-independence equalities the security argument consumes:
/// `H((Z_k)_{S\T} | (Z_k)_T) = |S\T| * L` per generator pair. Skipped for
/// pairs whose union covers all users (only possible in the FULL case,
/// where the baseline deliberately spends rank K-1, not K).
pub fn lemma6_pair(scheme: &KeyScheme, s: UserSet, t: UserSet) -> (bool, bool) {
    if s.union(t).card() == scheme.k {
        return (false, true);
    }
    let space = ObservableSpace::new(scheme);
    let joint = space.z_set(s.union(t));
    let cond = space.z_set(t);
    let h = linear_entropy(&refs(&joint), &refs(&cond)).expect("same ambient");
    let expect = ratio_int((s.minus(t).card() * scheme.input_len) as i64);
    (true, h == expect)
}

// ---------------------------------------------------------------------------
// Audit report.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PairRef {
    pub s: Vec<u32>,
    pub t: Vec<u32>,
}

impl PairRef {
    fn new(s: UserSet, t: UserSet) -> Self {
        PairRef {
            s: s.to_vec(),
            t: t.to_vec(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SecurityCheck {
    pub pair: PairRef,
    /// Exact mutual information, `num/den`; zero required.
    pub mi: String,
    pub mi_zero: bool,
    pub lemma6_checked: bool,
    pub lemma6_ok: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Lemma1Check {
    pub user: u32,
    pub entropy: String,
    pub bound: String,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PairIneqCheck {
    pub pair: PairRef,
    /// The coalition after removing the protected users.
    pub trimmed_t: Vec<u32>,
    pub entropy: String,
    pub bound: String,
    pub ok: bool,
    pub equality: bool,
    /// Whether the pair attains `a*` (meaningful for the lemma-4 records).
    pub achieving: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct RateTightCheck {
    pub source_entropy: String,
    pub target: String,
    pub ok: bool,
}

/// Itemized audit outcome; `overall_pass` iff every item passed.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct AuditReport {
    pub scheme_hash: String,
    pub case: String,
    pub security: Vec<SecurityCheck>,
    pub lemma1: Vec<Lemma1Check>,
    pub lemma2: Vec<PairIneqCheck>,
    pub lemma3: Vec<PairIneqCheck>,
    pub lemma4: Vec<PairIneqCheck>,
    pub rate_tight: RateTightCheck,
    pub overall_pass: bool,
}

impl AuditReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct IneqOutcome {
    record: PairIneqCheck,
    ok: bool,
}

fn entropy_bound_record(
    scheme: &KeyScheme,
    pair: (UserSet, UserSet),
    trimmed_t: UserSet,
    subject: UserSet,
    cond: UserSet,
    bound_symbols: u32,
    achieving: bool,
) -> IneqOutcome {
    let space = ObservableSpace::new(scheme);
    let joint = space.z_set(subject);
    let given = space.z_set(cond);
    let h = linear_entropy(&refs(&joint), &refs(&given)).expect("same ambient");
    let bound = ratio_int(bound_symbols as i64);
    let ok = h >= bound;
    IneqOutcome {
        record: PairIneqCheck {
            pair: PairRef::new(pair.0, pair.1),
            trimmed_t: trimmed_t.to_vec(),
            entropy: ratio_to_string(&h),
            bound: ratio_to_string(&bound),
            ok,
            equality: h == bound,
            achieving,
        },
        ok,
    }
}

type ConverseItems = (
    Vec<Lemma1Check>,
    Vec<PairIneqCheck>,
    Vec<PairIneqCheck>,
    Vec<PairIneqCheck>,
    RateTightCheck,
    bool,
);

/// Evaluate the converse inequalities on a synthesized scheme.
///
/// Pairs are generator pairs with the coalition trimmed to `T \ S`
/// (monotonicity keeps the trimmed coalition in the closure); pairs whose
/// union covers every user are skipped, matching the lemmas'
/// preconditions. Also checks that the source-key entropy meets the target
/// rate exactly.
pub fn converse_audit(
    scheme: &KeyScheme,
    pattern: &Pattern,
    analysis: &PatternAnalysis,
    rate: &BigRational,
) -> ConverseItems {
    let space = ObservableSpace::new(scheme);
    let full = UserSet::full(scheme.k);
    let l = scheme.input_len;
    let mut all_ok = true;

    // Lemma 1: each message holds at least L fresh symbols even given
    // everyone else's inputs and keys.
    let mut lemma1 = Vec::new();
    for u in 1..=scheme.k {
        let obs = vec![space.x(u)];
        let mut given = Vec::new();
        for v in (1..=scheme.k).filter(|&v| v != u) {
            given.push(space.w(v));
            given.push(space.z(v));
        }
        let h = linear_entropy(&refs(&obs), &refs(&given)).expect("same ambient");
        let bound = ratio_int(l as i64);
        let ok = h >= bound;
        all_ok &= ok;
        lemma1.push(Lemma1Check {
            user: u,
            entropy: ratio_to_string(&h),
            bound: ratio_to_string(&bound),
            ok,
        });
    }

    let explicit = pattern.security_union();
    let mut lemma2 = Vec::new();
    let mut lemma3 = Vec::new();
    let mut lemma4 = Vec::new();
    for (s, t) in pattern.generator_pairs() {
        let union = s.union(t);
        if union.card() == scheme.k {
            continue; // outside the lemmas' preconditions
        }
        let tt = t.minus(s);
        let achieving = union.intersect(analysis.total_set).card() == analysis.a_star;

        let o2 = entropy_bound_record(scheme, (s, t), tt, full.minus(union), tt, l, achieving);
        all_ok &= o2.ok;
        lemma2.push(o2.record);

        let subj3 = union.intersect(explicit);
        let o3 = entropy_bound_record(
            scheme,
            (s, t),
            tt,
            subj3,
            tt.minus(explicit),
            subj3.card() * l,
            achieving,
        );
        all_ok &= o3.ok;
        lemma3.push(o3.record);

        let subj4 = union.intersect(analysis.total_set);
        let o4 = entropy_bound_record(
            scheme,
            (s, t),
            tt,
            subj4,
            tt.minus(analysis.total_set),
            subj4.card() * l,
            achieving,
        );
        all_ok &= o4.ok;
        lemma4.push(o4.record);
    }

    // Rate tightness: H(Z_sigma) = R* . L, converse and achievability meet.
    let z_sigma = vec![space.z_sigma()];
    let h_source = linear_entropy(&refs(&z_sigma), &[]).expect("same ambient");
    let target = rate * ratio_int(l as i64);
    let tight_ok = h_source == target;
    all_ok &= tight_ok;
    let rate_tight = RateTightCheck {
        source_entropy: ratio_to_string(&h_source),
        target: ratio_to_string(&target),
        ok: tight_ok,
    };

    (lemma1, lemma2, lemma3, lemma4, rate_tight, all_ok)
}

/// Full audit: per-pair security MI and key-independence, the converse
/// inequalities, and rate tightness.
pub fn audit_scheme(scheme: &KeyScheme, pattern: &Pattern, ra: &RateAnalysis) -> AuditReport {
    let mut overall = true;

    let mut security = Vec::new();
    for (s, t) in pattern.generator_pairs() {
        let mi = security_mi(scheme, s, t);
        let mi_zero = mi.is_zero();
        let (lemma6_checked, lemma6_ok) = lemma6_pair(scheme, s, t);
        overall &= mi_zero && lemma6_ok;
        security.push(SecurityCheck {
            pair: PairRef::new(s, t),
            mi: ratio_to_string(&mi),
            mi_zero,
            lemma6_checked,
            lemma6_ok,
        });
    }

    let (lemma1, lemma2, lemma3, lemma4, rate_tight, converse_ok) =
        converse_audit(scheme, pattern, &ra.analysis, &ra.rate);
    overall &= converse_ok;

    AuditReport {
        scheme_hash: scheme_hash(scheme),
        case: ra.analysis.case_label.to_string(),
        security,
        lemma1,
        lemma2,
        lemma3,
        lemma4,
        rate_tight,
        overall_pass: overall,
    }
}

// ---------------------------------------------------------------------------
// Brute-force enumeration oracle.
// ---------------------------------------------------------------------------

/// Atom budget: `p^(K*L + source_dim)` must stay within `2^ORACLE_BUDGET_LOG2`.
pub const ORACLE_BUDGET_LOG2: u32 = 24;

/// Enumerate the full joint distribution of `(w, z_sigma)` and test the
/// conditional-independence factorization behind the security constraint:
/// the distribution of the protected inputs given the whole view must equal
/// their distribution given only the decoded sum and the coalition's data.
///
/// Returns an exact total-variation-style deviation, zero if and only if
/// the conditional mutual information is zero.
pub fn bruteforce_mi_oracle(
    scheme: &KeyScheme,
    s: UserSet,
    t: UserSet,
) -> Result<BigRational, AuditError> {
    let p = scheme.modulus();
    let l = scheme.input_len as usize;
    let k = scheme.k as usize;
    let d = scheme.source_dim as usize;
    let n_amb = k * l + d;

    let mut atoms: u128 = 1;
    for _ in 0..n_amb {
        atoms = atoms.saturating_mul(p as u128);
        if atoms > (1u128 << ORACLE_BUDGET_LOG2) {
            return Err(AuditError::SizeLimit {
                atoms,
                budget_log2: ORACLE_BUDGET_LOG2,
            });
        }
    }

    let t_users: Vec<u32> = t.iter().collect();
    let s_users: Vec<u32> = s.iter().collect();
    let key_rows: Vec<usize> = (1..=scheme.k).map(|u| scheme.coeff_of(u).rows).collect();

    // Packed-key layout (base-p digits, most significant first):
    // c-part: sum_w, then (w_u, z_u) for u in T ascending;
    // x-part: all messages; a-part: (w_u) for u in S ascending.
    let c_digits = l + t_users
        .iter()
        .map(|&u| l + key_rows[(u - 1) as usize])
        .sum::<usize>();
    let x_digits = k * l;
    let a_digits = s_users.len() * l;
    let total_digits = c_digits + x_digits + a_digits;
    let mut key_span: u128 = 1;
    for _ in 0..total_digits {
        key_span = key_span
            .checked_mul(p as u128)
            .filter(|v| *v < (1u128 << 120))
            .ok_or(AuditError::SizeLimit {
                atoms,
                budget_log2: ORACLE_BUDGET_LOG2,
            })?;
    }
    let pow = |e: usize| -> u128 { (0..e).fold(1u128, |acc, _| acc * p as u128) };
    let span_x = pow(x_digits);
    let span_a = pow(a_digits);

    let mut keys: Vec<u128> = Vec::with_capacity(atoms as usize);
    let mut z_sigma = vec![0u64; d];
    loop {
        // Keys for this source draw.
        let z_per_user: Vec<Vec<u64>> = (1..=scheme.k)
            .map(|u| {
                let c = scheme.coeff_of(u);
                (0..c.rows)
                    .map(|r| {
                        let mut acc = 0u64;
                        for j in 0..c.cols {
                            acc = add_mod(acc, mul_mod(c.get(r, j), z_sigma[j], p), p);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();

        let mut w = vec![0u64; k * l];
        loop {
            let mut sum_w = vec![0u64; l];
            for u in 0..k {
                for i in 0..l {
                    sum_w[i] = add_mod(sum_w[i], w[u * l + i], p);
                }
            }
            let mut c_val: u128 = 0;
            for &v in &sum_w {
                c_val = c_val * p as u128 + v as u128;
            }
            for &u in &t_users {
                let ui = (u - 1) as usize;
                for i in 0..l {
                    c_val = c_val * p as u128 + w[ui * l + i] as u128;
                }
                for &zv in &z_per_user[ui] {
                    c_val = c_val * p as u128 + zv as u128;
                }
            }
            let mut x_val: u128 = 0;
            for u in 0..k {
                let z_row = &z_per_user[u];
                for i in 0..l {
                    let xi = if z_row.is_empty() {
                        w[u * l + i]
                    } else {
                        add_mod(w[u * l + i], z_row[i], p)
                    };
                    x_val = x_val * p as u128 + xi as u128;
                }
            }
            let mut a_val: u128 = 0;
            for &u in &s_users {
                let ui = (u - 1) as usize;
                for i in 0..l {
                    a_val = a_val * p as u128 + w[ui * l + i] as u128;
                }
            }
            keys.push((c_val * span_x + x_val) * span_a + a_val);

            // Odometer over the inputs.
            let mut pos = 0;
            loop {
                if pos == w.len() {
                    break;
                }
                w[pos] += 1;
                if w[pos] < p {
                    break;
                }
                w[pos] = 0;
                pos += 1;
            }
            if pos == w.len() {
                break;
            }
        }

        let mut pos = 0;
        loop {
            if pos == z_sigma.len() {
                break;
            }
            z_sigma[pos] += 1;
            if z_sigma[pos] < p {
                break;
            }
            z_sigma[pos] = 0;
            pos += 1;
        }
        if pos == z_sigma.len() {
            break;
        }
    }

    keys.sort_unstable();
    let n_total = keys.len() as u64;
    let span_va = span_x * span_a;

    // Scan c-groups (contiguous after sorting: c is the high digits).
    let mut violation = BigRational::zero();
    let mut i = 0usize;
    while i < keys.len() {
        let c_val = keys[i] / span_va;
        let mut j = i;
        while j < keys.len() && keys[j] / span_va == c_val {
            j += 1;
        }
        let n_c = (j - i) as u64;
        // Secret counts within the c-group.
        let mut cc: HashMap<u128, u64> = HashMap::new();
        for key in &keys[i..j] {
            *cc.entry(key % span_a).or_insert(0) += 1;
        }
        // Walk the view-subgroups.
        let mut group_num = BigInt::zero();
        let mut vi = i;
        while vi < j {
            let v_val = keys[vi] / span_a;
            let mut vj = vi;
            while vj < j && keys[vj] / span_a == v_val {
                vj += 1;
            }
            let n_v = (vj - vi) as u64;
            let mut seen_cc_mass: u64 = 0;
            let mut ai = vi;
            while ai < vj {
                let a_val = keys[ai] % span_a;
                let mut aj = ai;
                while aj < vj && keys[aj] % span_a == a_val {
                    aj += 1;
                }
                let c_va = (aj - ai) as u64;
                let cc_a = cc[&a_val];
                seen_cc_mass += cc_a;
                let diff = BigInt::from(c_va) * BigInt::from(n_c)
                    - BigInt::from(cc_a) * BigInt::from(n_v);
                group_num += diff.abs();
                ai = aj;
            }
            // Secrets possible under c but never seen with this view.
            group_num += BigInt::from(n_v) * BigInt::from(n_c - seen_cc_mass);
            vi = vj;
        }
        if !group_num.is_zero() {
            violation += BigRational::new(group_num, BigInt::from(n_total) * BigInt::from(n_c));
        }
        i = j;
    }
    Ok(violation)
}

/// For each generator pair, the rank-based MI and the oracle deviation,
/// both exact. Verdicts must agree sign-for-sign.
pub fn oracle_agreement(
    scheme: &KeyScheme,
    pattern: &Pattern,
) -> Result<BTreeMap<(Vec<u32>, Vec<u32>), (BigRational, BigRational)>, AuditError> {
    let mut out = BTreeMap::new();
    for (s, t) in pattern.generator_pairs() {
        let fast = security_mi(scheme, s, t);
        let slow = bruteforce_mi_oracle(scheme, s, t)?;
        out.insert((s.to_vec(), t.to_vec()), (fast, slow));
    }
    Ok(out)
}
