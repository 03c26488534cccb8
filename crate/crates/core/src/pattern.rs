//! Security/colluding set-system analysis.
//!
//! A pattern is the pair of monotone set systems (security input sets and
//! colluding user sets) over users `1..=K`, stored as antichains of maximal
//! generators. All downstream quantities — the implicit security set, the
//! total security set, the maximum overlap `a*`, the achieving pairs and
//! their union `Q` — are computed from generator pairs; `closure_oracle`
//! recomputes them by materializing the full closures and is the reference
//! all generator-level shortcuts are checked against.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Subset of users `1..=K` as a fixed-width bitset (bit `u-1` = user `u`).
/// `K <= 64`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct UserSet(u64);

impl UserSet {
    pub const EMPTY: UserSet = UserSet(0);

    pub fn empty() -> Self {
        UserSet(0)
    }

    /// `{1, .., k}`.
    pub fn full(k: u32) -> Self {
        debug_assert!(k <= 64);
        if k == 64 {
            UserSet(u64::MAX)
        } else {
            UserSet((1u64 << k) - 1)
        }
    }

    pub fn singleton(user: u32) -> Self {
        debug_assert!((1..=64).contains(&user));
        UserSet(1u64 << (user - 1))
    }

    pub fn from_users<I: IntoIterator<Item = u32>>(users: I) -> Self {
        let mut s = UserSet(0);
        for u in users {
            s = s.with(u);
        }
        s
    }

    pub fn with(self, user: u32) -> Self {
        UserSet(self.0 | UserSet::singleton(user).0)
    }

    pub fn without(self, user: u32) -> Self {
        UserSet(self.0 & !UserSet::singleton(user).0)
    }

    pub fn contains(self, user: u32) -> bool {
        user >= 1 && user <= 64 && self.0 & (1u64 << (user - 1)) != 0
    }

    pub fn union(self, other: UserSet) -> UserSet {
        UserSet(self.0 | other.0)
    }

    pub fn intersect(self, other: UserSet) -> UserSet {
        UserSet(self.0 & other.0)
    }

    pub fn minus(self, other: UserSet) -> UserSet {
        UserSet(self.0 & !other.0)
    }

    /// Complement within `{1..k}`.
    pub fn complement_in(self, k: u32) -> UserSet {
        UserSet(!self.0 & UserSet::full(k).0)
    }

    pub fn card(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: UserSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Users in ascending order.
    pub fn iter(self) -> impl Iterator<Item = u32> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let u = bits.trailing_zeros() + 1;
                bits &= bits - 1;
                Some(u)
            }
        })
    }

    pub fn min_user(self) -> Option<u32> {
        if self.0 == 0 {
            None
        } else {
            Some(self.0.trailing_zeros() + 1)
        }
    }

    pub fn max_user(self) -> Option<u32> {
        if self.0 == 0 {
            None
        } else {
            Some(64 - self.0.leading_zeros())
        }
    }

    pub fn to_vec(self) -> Vec<u32> {
        self.iter().collect()
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn from_bits(bits: u64) -> Self {
        UserSet(bits)
    }
}

impl fmt::Debug for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, u) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{u}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PatternError {
    /// REJECT_EMPTY_SECURITY: all security sets are empty.
    #[error("REJECT_EMPTY_SECURITY: the union of security sets is empty")]
    EmptySecurity,
    /// REJECT_LARGE_COALITION: a colluding set exceeds K-2 users.
    #[error("REJECT_LARGE_COALITION: colluding set {set:?} has {size} users, maximum is K-2 = {max}")]
    LargeCoalition { set: Vec<u32>, size: u32, max: u32 },
    /// REJECT_RANGE: a member is outside 1..=K, or K itself is invalid.
    #[error("REJECT_RANGE: {reason}")]
    OutOfRange { reason: String },
    /// SIZE_LIMIT: exhaustive closure enumeration refused.
    #[error("SIZE_LIMIT: closure oracle supports K <= {max}, got K = {k}")]
    SizeLimit { k: u32, max: u32 },
}

impl PatternError {
    /// Stable machine-readable code (the `REJECT_*` / `SIZE_LIMIT` family).
    pub fn code(&self) -> &'static str {
        match self {
            PatternError::EmptySecurity => "REJECT_EMPTY_SECURITY",
            PatternError::LargeCoalition { .. } => "REJECT_LARGE_COALITION",
            PatternError::OutOfRange { .. } => "REJECT_RANGE",
            PatternError::SizeLimit { .. } => "SIZE_LIMIT",
        }
    }
}

/// A validated pattern: `K` plus the two antichains of maximal generators.
///
/// The represented systems are the downward closures of the generators
/// (including the empty set). An empty colluding input list normalizes to
/// the antichain `[{}]`: the server may always act alone.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Pattern {
    k: u32,
    security: Vec<UserSet>,
    colluding: Vec<UserSet>,
}

impl Pattern {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn security_gens(&self) -> &[UserSet] {
        &self.security
    }

    pub fn colluding_gens(&self) -> &[UserSet] {
        &self.colluding
    }

    /// Union of the explicit security generators.
    pub fn security_union(&self) -> UserSet {
        self.security
            .iter()
            .fold(UserSet::empty(), |a, s| a.union(*s))
    }

    /// All (security generator, colluding generator) pairs.
    pub fn generator_pairs(&self) -> impl Iterator<Item = (UserSet, UserSet)> + '_ {
        self.security
            .iter()
            .flat_map(move |s| self.colluding.iter().map(move |t| (*s, *t)))
    }
}

/// On-disk pattern: 1-indexed user lists, normalized on load.
#[derive(Serialize, Deserialize)]
pub struct PatternFile {
    #[serde(rename = "K")]
    pub k: u32,
    pub security: Vec<Vec<u32>>,
    pub colluding: Vec<Vec<u32>>,
}

impl PatternFile {
    pub fn parse(json: &str) -> Result<Pattern, PatternError> {
        let file: PatternFile = serde_json::from_str(json).map_err(|e| {
            PatternError::OutOfRange {
                reason: format!("malformed pattern file: {e}"),
            }
        })?;
        normalize_pattern(file.k, &file.security, &file.colluding)
    }

    pub fn from_pattern(p: &Pattern) -> PatternFile {
        PatternFile {
            k: p.k(),
            security: p.security_gens().iter().map(|s| s.to_vec()).collect(),
            colluding: p.colluding_gens().iter().map(|s| s.to_vec()).collect(),
        }
    }
}

/// Reduce a list of sets to the antichain of its maximal elements.
/// Duplicates collapse; sets contained in another set are dropped.
fn antichain(sets: &[UserSet]) -> Vec<UserSet> {
    let mut out: Vec<UserSet> = Vec::new();
    for &s in sets {
        if out.iter().any(|&t| s.is_subset_of(t)) {
            continue;
        }
        out.retain(|&t| !t.is_subset_of(s));
        out.push(s);
    }
    out.sort_by_key(|s| s.bits());
    out
}

fn check_members(k: u32, raw: &[Vec<u32>]) -> Result<Vec<UserSet>, PatternError> {
    raw.iter()
        .map(|set| {
            let mut bits = UserSet::empty();
            for &u in set {
                if u < 1 || u > k {
                    return Err(PatternError::OutOfRange {
                        reason: format!("user {u} outside 1..={k}"),
                    });
                }
                bits = bits.with(u);
            }
            Ok(bits)
        })
        .collect()
}

/// Validate raw set lists and reduce both systems to maximal-generator
/// antichains. The closure is unchanged by the reduction.
pub fn normalize_pattern(
    k: u32,
    security_raw: &[Vec<u32>],
    colluding_raw: &[Vec<u32>],
) -> Result<Pattern, PatternError> {
    if !(2..=64).contains(&k) {
        return Err(PatternError::OutOfRange {
            reason: format!("K must be in 2..=64, got {k}"),
        });
    }
    let security_sets = check_members(k, security_raw)?;
    let colluding_sets = check_members(k, colluding_raw)?;

    if security_sets.iter().all(|s| s.is_empty()) {
        return Err(PatternError::EmptySecurity);
    }
    for t in &colluding_sets {
        if t.card() > k - 2 {
            return Err(PatternError::LargeCoalition {
                set: t.to_vec(),
                size: t.card(),
                max: k - 2,
            });
        }
    }

    let security = antichain(&security_sets);
    let colluding = if colluding_sets.is_empty() {
        vec![UserSet::empty()]
    } else {
        antichain(&colluding_sets)
    };
    Ok(Pattern {
        k,
        security,
        colluding,
    })
}

/// Membership in the downward closure of an antichain: true iff `s` is
/// contained in some generator. The empty set is always a member.
pub fn closure_contains(system: &[UserSet], s: UserSet) -> bool {
    system.iter().any(|&g| s.is_subset_of(g))
}

/// Theorem 1 case, determined by `(a*, |total_set|, |Q|, K)`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum CaseLabel {
    /// `a* = K`: protect everyone, baseline zero-sum scheme.
    #[serde(rename = "FULL")]
    Full,
    /// `a* <= K-1`, `a* = |total_set|`, `|Q| = K`: rate gains the LP term.
    #[serde(rename = "IF")]
    If,
    /// `a* < |total_set|`.
    #[serde(rename = "OTHER_LT")]
    OtherLt,
    /// `a* = |total_set|`, `|Q| < K`.
    #[serde(rename = "OTHER_Q")]
    OtherQ,
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseLabel::Full => "FULL",
            CaseLabel::If => "IF",
            CaseLabel::OtherLt => "OTHER_LT",
            CaseLabel::OtherQ => "OTHER_Q",
        };
        f.write_str(s)
    }
}

/// Set-system analysis of a pattern: everything the rate formula needs
/// except the rate itself.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PatternAnalysis {
    pub k: u32,
    /// Users protected implicitly: not in any explicit security set, yet
    /// some pair covers all other users.
    pub implicit_set: UserSet,
    /// Union of explicit security generators and the implicit set.
    pub total_set: UserSet,
    /// Maximum of `|(S ∪ T) ∩ total_set|` over generator pairs.
    pub a_star: u32,
    /// Generator pairs attaining `a_star`, sorted canonically.
    pub achieving_pairs: Vec<(UserSet, UserSet)>,
    /// Union of `S ∪ T` over the achieving pairs.
    pub q_union: UserSet,
    pub case_label: CaseLabel,
}

fn classify(k: u32, a_star: u32, total_card: u32, q_card: u32) -> CaseLabel {
    if a_star == k {
        CaseLabel::Full
    } else if a_star < total_card {
        CaseLabel::OtherLt
    } else if q_card == k {
        CaseLabel::If
    } else {
        CaseLabel::OtherQ
    }
}

/// The implicit security input set, computed from generator pairs.
///
/// `u` belongs iff `u` is outside every explicit security set and some
/// generator pair `(S, T)` satisfies `S ∪ T ⊇ [K] \ {u}`. For such a pair,
/// `(S \ {u}, T \ {u})` lies in the closures and unions to exactly
/// `[K] \ {u}`, so this matches the closure-level definition (checked
/// against `closure_oracle`).
pub fn implicit_security_set(p: &Pattern) -> UserSet {
    let full = UserSet::full(p.k);
    let explicit = p.security_union();
    let mut implicit = UserSet::empty();
    for u in full.minus(explicit).iter() {
        let rest = full.without(u);
        let covered = p
            .generator_pairs()
            .any(|(s, t)| rest.is_subset_of(s.union(t)));
        if covered {
            implicit = implicit.with(u);
        }
    }
    implicit
}

/// Compute the implicit set, total set, `a*`, achieving pairs, `Q`, and the
/// case label from generator pairs.
pub fn analyze(p: &Pattern) -> PatternAnalysis {
    let implicit_set = implicit_security_set(p);
    let total_set = p.security_union().union(implicit_set);

    let a_star = p
        .generator_pairs()
        .map(|(s, t)| s.union(t).intersect(total_set).card())
        .max()
        .expect("nonempty generator lists");

    let mut achieving_pairs: Vec<(UserSet, UserSet)> = p
        .generator_pairs()
        .filter(|(s, t)| s.union(*t).intersect(total_set).card() == a_star)
        .collect();
    achieving_pairs.sort_by_key(|(s, t)| (s.bits(), t.bits()));

    let q_union = achieving_pairs
        .iter()
        .fold(UserSet::empty(), |acc, (s, t)| acc.union(*s).union(*t));

    let case_label = classify(p.k, a_star, total_set.card(), q_union.card());
    PatternAnalysis {
        k: p.k,
        implicit_set,
        total_set,
        a_star,
        achieving_pairs,
        q_union,
        case_label,
    }
}

/// All subsets of `gen`, by submask enumeration.
fn downward_closure(gens: &[UserSet]) -> Vec<UserSet> {
    let mut seen: HashSet<u64> = HashSet::new();
    for g in gens {
        let bits = g.bits();
        let mut sub = bits;
        loop {
            seen.insert(sub);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & bits;
        }
    }
    let mut out: Vec<UserSet> = seen.into_iter().map(UserSet::from_bits).collect();
    out.sort_unstable();
    out
}

/// Reference analysis by literal closure enumeration.
///
/// Materializes both monotone closures and iterates every closure pair for
/// the implicit set, `a*`, and `Q`. The reported `achieving_pairs` are the
/// generator pairs attaining the closure-level `a*`, so results compare
/// field-by-field against [`analyze`].
pub fn closure_oracle(p: &Pattern) -> Result<PatternAnalysis, PatternError> {
    const MAX_K: u32 = 12;
    if p.k > MAX_K {
        return Err(PatternError::SizeLimit { k: p.k, max: MAX_K });
    }
    let sec_closure = downward_closure(&p.security);
    let col_closure = downward_closure(&p.colluding);
    let full = UserSet::full(p.k);
    let explicit = p.security_union();

    let mut implicit_set = UserSet::empty();
    for &s in &sec_closure {
        for &t in &col_closure {
            let union = s.union(t);
            if union.card() == p.k - 1 {
                let u = full.minus(union).min_user().expect("one user missing");
                if !explicit.contains(u) {
                    implicit_set = implicit_set.with(u);
                }
            }
        }
    }

    let total_set = explicit.union(implicit_set);

    let mut a_star = 0;
    for &s in &sec_closure {
        for &t in &col_closure {
            a_star = a_star.max(s.union(t).intersect(total_set).card());
        }
    }

    let mut q_union = UserSet::empty();
    for &s in &sec_closure {
        for &t in &col_closure {
            if s.union(t).intersect(total_set).card() == a_star {
                q_union = q_union.union(s).union(t);
            }
        }
    }

    let mut achieving_pairs: Vec<(UserSet, UserSet)> = p
        .generator_pairs()
        .filter(|(s, t)| s.union(*t).intersect(total_set).card() == a_star)
        .collect();
    achieving_pairs.sort_by_key(|(s, t)| (s.bits(), t.bits()));

    let case_label = classify(p.k, a_star, total_set.card(), q_union.card());
    Ok(PatternAnalysis {
        k: p.k,
        implicit_set,
        total_set,
        a_star,
        achieving_pairs,
        q_union,
        case_label,
    })
}
