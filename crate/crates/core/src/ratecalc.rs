//! Key-rate computation: exact linear programming over big rationals.
//!
//! For the `IF` case the optimal rate is `a* + b*`, where `b*` is the value
//! of a small min-max linear program on the users outside the total
//! security set. The program is solved exactly (no floating point anywhere
//! in this module) by a dense two-phase simplex with Bland's anti-cycling
//! rule on the epigraph reformulation, so identical instances produce
//! identical vertices bit-for-bit. An independent vertex-enumeration oracle
//! recomputes the optimal value for cross-checking.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pattern::{analyze, CaseLabel, Pattern, PatternAnalysis, UserSet};
use crate::rational::{ratio_to_string, ratio_int};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RateError {
    /// WRONG_CASE: the LP exists only in the `IF` case.
    #[error("WRONG_CASE: linear program requested for case {0}, only IF has one")]
    WrongCase(CaseLabel),
}

/// The epigraph linear program for one pattern.
///
/// Variables are the users outside the total security set, ascending. Each
/// achieving pair contributes one objective term (`T \ total_set`, summed
/// and bounded by the epigraph variable) and one cover constraint
/// (`[K] \ (S ∪ T)`, sum at least one).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LpInstance {
    pub variables: Vec<u32>,
    /// Variable-index subsets whose sums the objective maximizes over.
    pub objective_terms: Vec<Vec<usize>>,
    /// Variable-index subsets each constrained to sum >= 1.
    pub cover_constraints: Vec<Vec<usize>>,
}

/// One optimal vertex of the LP, exact.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LpSolution {
    /// user -> b*_k, all nonnegative.
    pub b_values: BTreeMap<u32, BigRational>,
    pub b_star: BigRational,
    /// Common denominator: lcm of the b*_k denominators.
    pub q_bar: u64,
    /// user -> p_k with b*_k = p_k / q_bar.
    pub numerators: BTreeMap<u32, u64>,
    /// Sum of the numerators.
    pub p_bar: u64,
}

/// Pattern analysis plus the rate: the complete Theorem-level answer.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RateAnalysis {
    pub analysis: PatternAnalysis,
    /// Present iff the case is `IF`.
    pub lp_solution: Option<LpSolution>,
    /// Exact optimal key rate.
    pub rate: BigRational,
}

fn subset_to_indices(set: UserSet, variables: &[u32]) -> Vec<usize> {
    variables
        .iter()
        .enumerate()
        .filter(|(_, u)| set.contains(**u))
        .map(|(i, _)| i)
        .collect()
}

/// Keep only subsets not implied by another under `b >= 0`.
///
/// For covers (`sum >= 1`) a superset of another cover is implied; for
/// objective terms (`sum <= b`) a subset of another term is implied.
fn reduce_subsets(mut subsets: Vec<Vec<usize>>, drop_supersets: bool) -> Vec<Vec<usize>> {
    subsets.sort();
    subsets.dedup();
    let implied = |a: &Vec<usize>, b: &Vec<usize>| -> bool {
        // is `a` implied by `b`?
        if drop_supersets {
            b.iter().all(|i| a.contains(i)) && a != b
        } else {
            a.iter().all(|i| b.contains(i)) && a != b
        }
    };
    let kept: Vec<Vec<usize>> = subsets
        .iter()
        .filter(|a| !subsets.iter().any(|b| implied(a, b)))
        .cloned()
        .collect();
    kept
}

/// Assemble the LP from the achieving pairs. Duplicate subsets are
/// deduplicated and constraints implied by another one plus nonnegativity
/// are removed; neither changes the feasible set or the objective.
pub fn build_lp(analysis: &PatternAnalysis, pattern: &Pattern) -> Result<LpInstance, RateError> {
    if analysis.case_label != CaseLabel::If {
        return Err(RateError::WrongCase(analysis.case_label));
    }
    let full = UserSet::full(pattern.k());
    let variables: Vec<u32> = full.minus(analysis.total_set).iter().collect();

    let mut objective_terms = Vec::new();
    let mut cover_constraints = Vec::new();
    for (s, t) in &analysis.achieving_pairs {
        let term = t.minus(analysis.total_set);
        let cover = full.minus(s.union(*t));
        assert!(
            !cover.is_empty(),
            "empty cover constraint: achieving pair unions to all of [K] in the IF case"
        );
        objective_terms.push(subset_to_indices(term, &variables));
        cover_constraints.push(subset_to_indices(cover, &variables));
    }

    let mut objective_terms = reduce_subsets(objective_terms, false);
    let cover_constraints = reduce_subsets(cover_constraints, true);
    if objective_terms.is_empty() {
        // All terms were empty: keep the empty-sum term so the objective is 0.
        objective_terms.push(Vec::new());
    }
    Ok(LpInstance {
        variables,
        objective_terms,
        cover_constraints,
    })
}

// ---------------------------------------------------------------------------
// Exact two-phase simplex with Bland's rule.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Rel {
    Le,
    Ge,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub(crate) enum SimplexError {
    #[error("infeasible")]
    Infeasible,
    #[error("unbounded")]
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<BigRational>>, // coefficient columns then rhs
    basis: Vec<usize>,
    n_cols: usize, // excluding rhs
}

impl Tableau {
    fn rhs(&self, i: usize) -> &BigRational {
        &self.rows[i][self.n_cols]
    }

    fn pivot(&mut self, row: usize, col: usize, cost: &mut Vec<BigRational>) {
        let p = self.rows[row][col].clone();
        debug_assert!(!p.is_zero());
        for v in self.rows[row].iter_mut() {
            *v /= &p;
        }
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let f = self.rows[i][col].clone();
            if f.is_zero() {
                continue;
            }
            for j in 0..=self.n_cols {
                let delta = &f * &self.rows[row][j];
                self.rows[i][j] -= delta;
            }
        }
        let f = cost[col].clone();
        if !f.is_zero() {
            for j in 0..=self.n_cols {
                let delta = &f * &self.rows[row][j];
                cost[j] -= delta;
            }
        }
        self.basis[row] = col;
    }

    /// Bland's rule: entering = smallest-index eligible column with a
    /// negative reduced cost; leaving = among minimum-ratio rows, the one
    /// whose basic variable index is smallest.
    fn run(
        &mut self,
        cost: &mut Vec<BigRational>,
        allowed: impl Fn(usize) -> bool,
    ) -> Result<(), SimplexError> {
        loop {
            let entering = (0..self.n_cols).find(|&j| allowed(j) && cost[j].is_negative());
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leaving: Option<(usize, BigRational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][col];
                if a.is_positive() {
                    let ratio = self.rhs(i) / a;
                    let better = match &leaving {
                        None => true,
                        Some((bi, br)) => {
                            ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leaving else {
                return Err(SimplexError::Unbounded);
            };
            self.pivot(row, col, cost);
        }
    }
}

/// Minimize `objective . x` subject to `constraints`, `x >= 0`.
/// Returns the optimal value and one optimal vertex, deterministically.
pub(crate) fn simplex_min(
    num_vars: usize,
    objective: &[BigRational],
    constraints: &[(Vec<BigRational>, Rel, BigRational)],
) -> Result<(BigRational, Vec<BigRational>), SimplexError> {
    let m = constraints.len();
    // Normalize rows to nonnegative rhs.
    let normalized: Vec<(Vec<BigRational>, Rel, BigRational)> = constraints
        .iter()
        .map(|(a, rel, b)| {
            if b.is_negative() {
                let a: Vec<BigRational> = a.iter().map(|v| -v).collect();
                let rel = match rel {
                    Rel::Le => Rel::Ge,
                    Rel::Ge => Rel::Le,
                };
                (a, rel, -b)
            } else {
                (a.clone(), *rel, b.clone())
            }
        })
        .collect();

    let n_slack = m; // one slack or surplus per row
    let n_art: usize = normalized
        .iter()
        .filter(|(_, rel, _)| *rel == Rel::Ge)
        .count();
    let n_cols = num_vars + n_slack + n_art;
    let art_start = num_vars + n_slack;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art_idx = art_start;
    for (i, (a, rel, b)) in normalized.iter().enumerate() {
        let mut row = vec![BigRational::zero(); n_cols + 1];
        row[..num_vars].clone_from_slice(&a[..num_vars]);
        row[n_cols] = b.clone();
        match rel {
            Rel::Le => {
                row[num_vars + i] = BigRational::one();
                basis.push(num_vars + i);
            }
            Rel::Ge => {
                row[num_vars + i] = -BigRational::one();
                row[art_idx] = BigRational::one();
                basis.push(art_idx);
                art_idx += 1;
            }
        }
        rows.push(row);
    }

    let mut t = Tableau {
        rows,
        basis,
        n_cols,
    };

    // Phase 1: minimize the sum of artificials.
    if n_art > 0 {
        let mut cost = vec![BigRational::zero(); n_cols + 1];
        for j in art_start..n_cols {
            cost[j] = BigRational::one();
        }
        for i in 0..t.rows.len() {
            if t.basis[i] >= art_start {
                for j in 0..=n_cols {
                    let delta = t.rows[i][j].clone();
                    cost[j] -= delta;
                }
            }
        }
        t.run(&mut cost, |_| true)?;
        let phase1: BigRational = (0..t.rows.len())
            .filter(|&i| t.basis[i] >= art_start)
            .map(|i| t.rhs(i).clone())
            .sum();
        if !phase1.is_zero() {
            return Err(SimplexError::Infeasible);
        }
        // Drive leftover artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= art_start {
                let col = (0..art_start).find(|&j| !t.rows[i][j].is_zero());
                match col {
                    Some(col) => {
                        let mut dummy = vec![BigRational::zero(); n_cols + 1];
                        t.pivot(i, col, &mut dummy);
                        i += 1;
                    }
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    // Phase 2: original objective, artificials banned.
    let mut cost = vec![BigRational::zero(); n_cols + 1];
    cost[..num_vars].clone_from_slice(&objective[..num_vars]);
    for i in 0..t.rows.len() {
        let b = t.basis[i];
        if !cost[b].is_zero() {
            let f = cost[b].clone();
            for j in 0..=n_cols {
                let delta = &f * &t.rows[i][j];
                cost[j] -= delta;
            }
        }
    }
    t.run(&mut cost, |j| j < art_start)?;

    let mut x = vec![BigRational::zero(); num_vars];
    for i in 0..t.rows.len() {
        if t.basis[i] < num_vars {
            x[t.basis[i]] = t.rhs(i).clone();
        }
    }
    let value: BigRational = objective
        .iter()
        .zip(&x)
        .map(|(c, v)| c * v)
        .sum();
    Ok((value, x))
}

// ---------------------------------------------------------------------------
// LP front-end.
// ---------------------------------------------------------------------------

fn epigraph_constraints(
    lp: &LpInstance,
) -> (usize, Vec<BigRational>, Vec<(Vec<BigRational>, Rel, BigRational)>) {
    let n = lp.variables.len();
    let d = n + 1; // b_k variables plus the epigraph variable b
    let mut constraints = Vec::new();
    for cover in &lp.cover_constraints {
        let mut row = vec![BigRational::zero(); d];
        for &i in cover {
            row[i] = BigRational::one();
        }
        constraints.push((row, Rel::Ge, BigRational::one()));
    }
    for term in &lp.objective_terms {
        let mut row = vec![BigRational::zero(); d];
        for &i in term {
            row[i] = BigRational::one();
        }
        row[n] = -BigRational::one();
        constraints.push((row, Rel::Le, BigRational::zero()));
    }
    let mut objective = vec![BigRational::zero(); d];
    objective[n] = BigRational::one();
    (d, objective, constraints)
}

/// Solve the epigraph form exactly. Infeasibility cannot occur for
/// instances built from a pattern and is treated as an internal fault.
pub fn solve_lp_exact(lp: &LpInstance) -> LpSolution {
    let (d, objective, constraints) = epigraph_constraints(lp);
    let (value, x) = simplex_min(d, &objective, &constraints)
        .expect("IF-case LP is feasible by construction");

    let b_values: BTreeMap<u32, BigRational> = lp
        .variables
        .iter()
        .enumerate()
        .map(|(i, &u)| (u, x[i].clone()))
        .collect();

    // At an optimum the epigraph is tight: b* equals the largest term sum.
    debug_assert_eq!(
        value,
        lp.objective_terms
            .iter()
            .map(|t| t.iter().map(|&i| x[i].clone()).sum::<BigRational>())
            .max()
            .expect("at least one objective term"),
    );

    let q_bar: BigInt = b_values
        .values()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let q_bar: u64 = (&q_bar)
        .try_into()
        .expect("common denominator fits in u64 at desk scale");
    let numerators: BTreeMap<u32, u64> = b_values
        .iter()
        .map(|(u, v)| {
            let scaled = v * BigRational::from_integer(BigInt::from(q_bar));
            debug_assert!(scaled.is_integer());
            let p: u64 = (&scaled.to_integer())
                .try_into()
                .expect("nonnegative numerator fits in u64");
            (*u, p)
        })
        .collect();
    let p_bar = numerators.values().sum();

    LpSolution {
        b_values,
        b_star: value,
        q_bar,
        numerators,
        p_bar,
    }
}

/// The LP identity `b* = sum(b*_k) - 1`, tested with exact arithmetic.
///
/// The objective is recomputed from the instance at the recorded values, so
/// a non-optimal or corrupted solution (recorded optimum inconsistent with
/// its own b-values) fails the check instead of slipping through.
pub fn lemma5_check(lp: &LpInstance, sol: &LpSolution) -> bool {
    let objective = lp
        .objective_terms
        .iter()
        .map(|t| {
            t.iter()
                .map(|&i| sol.b_values[&lp.variables[i]].clone())
                .sum::<BigRational>()
        })
        .max()
        .unwrap_or_else(BigRational::zero);
    let total: BigRational = sol.b_values.values().cloned().sum();
    sol.b_star == objective && objective == total - BigRational::one()
}

/// The optimal key rate: `a* + b*` in the `IF` case, `min(a*, K-1)`
/// otherwise, with the analysis and (if any) LP certificate embedded.
pub fn optimal_rate(p: &Pattern) -> RateAnalysis {
    let analysis = analyze(p);
    match analysis.case_label {
        CaseLabel::If => {
            let lp = build_lp(&analysis, p).expect("case checked");
            let sol = solve_lp_exact(&lp);
            let rate = ratio_int(analysis.a_star as i64) + &sol.b_star;
            RateAnalysis {
                analysis,
                lp_solution: Some(sol),
                rate,
            }
        }
        _ => {
            let rate = ratio_int(analysis.a_star.min(p.k() - 1) as i64);
            RateAnalysis {
                analysis,
                lp_solution: None,
                rate,
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Independent oracle: vertex enumeration of the epigraph polyhedron.
// ---------------------------------------------------------------------------

/// Solve `mat x = rhs` by Gaussian elimination; `None` if singular.
fn solve_square(mut mat: Vec<Vec<BigRational>>, mut rhs: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let d = mat.len();
    for col in 0..d {
        let pivot = (col..d).find(|&r| !mat[r][col].is_zero())?;
        mat.swap(col, pivot);
        rhs.swap(col, pivot);
        let p = mat[col][col].clone();
        for v in mat[col].iter_mut() {
            *v /= &p;
        }
        rhs[col] /= &p;
        for r in 0..d {
            if r == col {
                continue;
            }
            let f = mat[r][col].clone();
            if f.is_zero() {
                continue;
            }
            for c in 0..d {
                let delta = &f * &mat[col][c];
                mat[r][c] -= delta;
            }
            let delta = &f * &rhs[col];
            rhs[r] -= delta;
        }
    }
    Some(rhs)
}

/// Optimal value by enumerating every basic feasible solution of the
/// epigraph polyhedron and taking the minimum objective. Exponential in the
/// constraint count; this is the checking path, not the solver.
pub fn vertex_enumeration_value(lp: &LpInstance) -> BigRational {
    let n = lp.variables.len();
    let d = n + 1;
    // All constraints as `a . x >= rhs`.
    let mut rows: Vec<(Vec<BigRational>, BigRational)> = Vec::new();
    let mut term_rows = Vec::new();
    for cover in &lp.cover_constraints {
        let mut a = vec![BigRational::zero(); d];
        for &i in cover {
            a[i] = BigRational::one();
        }
        rows.push((a, BigRational::one()));
    }
    for term in &lp.objective_terms {
        let mut a = vec![BigRational::zero(); d];
        for &i in term {
            a[i] = -BigRational::one();
        }
        a[n] = BigRational::one();
        term_rows.push(rows.len());
        rows.push((a, BigRational::zero()));
    }
    for i in 0..n {
        let mut a = vec![BigRational::zero(); d];
        a[i] = BigRational::one();
        rows.push((a, BigRational::zero()));
    }

    let mut best: Option<BigRational> = None;
    for combo in (0..rows.len()).combinations(d) {
        // Only an epigraph row carries the b column; bases without one are
        // singular, skip early.
        if !combo.iter().any(|i| term_rows.contains(i)) {
            continue;
        }
        let mat: Vec<Vec<BigRational>> = combo.iter().map(|&i| rows[i].0.clone()).collect();
        let rhs: Vec<BigRational> = combo.iter().map(|&i| rows[i].1.clone()).collect();
        let Some(x) = solve_square(mat, rhs) else {
            continue;
        };
        let feasible = rows.iter().all(|(a, b)| {
            let lhs: BigRational = a.iter().zip(&x).map(|(ai, xi)| ai * xi).sum();
            lhs >= *b
        });
        if feasible {
            let obj = x[n].clone();
            if best.as_ref().is_none_or(|b| obj < *b) {
                best = Some(obj);
            }
        }
    }
    best.expect("feasible polyhedron has a vertex")
}

// ---------------------------------------------------------------------------
// Report file.
// ---------------------------------------------------------------------------

/// External rate report: exact rationals serialized as `num/den` strings.
#[derive(Serialize, Deserialize, Debug, PartialEq, Eq)]
pub struct RateReportFile {
    pub a_star: u32,
    pub case: String,
    pub b_star: Option<String>,
    pub rate: String,
    pub b_values: BTreeMap<String, String>,
    pub achieving_pairs: Vec<(Vec<u32>, Vec<u32>)>,
}

impl RateReportFile {
    pub fn from_rate_analysis(ra: &RateAnalysis) -> RateReportFile {
        RateReportFile {
            a_star: ra.analysis.a_star,
            case: ra.analysis.case_label.to_string(),
            b_star: ra.lp_solution.as_ref().map(|s| ratio_to_string(&s.b_star)),
            rate: ratio_to_string(&ra.rate),
            b_values: ra
                .lp_solution
                .as_ref()
                .map(|s| {
                    s.b_values
                        .iter()
                        .map(|(u, v)| (u.to_string(), ratio_to_string(v)))
                        .collect()
                })
                .unwrap_or_default(),
            achieving_pairs: ra
                .analysis
                .achieving_pairs
                .iter()
                .map(|(s, t)| (s.to_vec(), t.to_vec()))
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::normalize_pattern;
    use crate::rational::ratio;

    fn example1() -> Pattern {
        normalize_pattern(
            5,
            &[vec![1], vec![2], vec![3]],
            &[vec![1, 3, 4], vec![2, 3, 5]],
        )
        .unwrap()
    }

    fn example2() -> Pattern {
        normalize_pattern(
            5,
            &[vec![1], vec![2]],
            &[vec![1, 3], vec![2, 4], vec![2, 5]],
        )
        .unwrap()
    }

    #[test]
    fn build_lp_example2() {
        let p = example2();
        let a = analyze(&p);
        let lp = build_lp(&a, &p).unwrap();
        assert_eq!(lp.variables, vec![3, 4, 5]);
        // Variables 3,4,5 map to indices 0,1,2.
        let mut covers = lp.cover_constraints.clone();
        covers.sort();
        assert_eq!(covers, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        let mut terms = lp.objective_terms.clone();
        terms.sort();
        assert_eq!(terms, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn build_lp_wrong_case() {
        let p = example1();
        let a = analyze(&p);
        assert!(matches!(build_lp(&a, &p), Err(RateError::WrongCase(_))));
    }

    #[test]
    fn build_lp_drops_dominated_cover() {
        // Hand-built analysis carrying the redundant pair (S={1}, T={2})
        // next to Example 2's pairs: its cover {3,4,5} is implied by {3,5}.
        let p = example2();
        let mut a = analyze(&p);
        a.achieving_pairs.push((
            UserSet::from_users([1]),
            UserSet::from_users([2]),
        ));
        let lp = build_lp(&a, &p).unwrap();
        assert!(lp
            .cover_constraints
            .iter()
            .all(|c| c.len() == 2));
    }

    #[test]
    fn solve_example2() {
        let p = example2();
        let a = analyze(&p);
        let lp = build_lp(&a, &p).unwrap();
        let sol = solve_lp_exact(&lp);
        assert_eq!(sol.b_star, ratio(1, 2));
        for u in [3u32, 4, 5] {
            assert_eq!(sol.b_values[&u], ratio(1, 2));
            assert_eq!(sol.numerators[&u], 1);
        }
        assert_eq!(sol.q_bar, 2);
        assert_eq!(sol.p_bar, 3);
        assert!(lemma5_check(&lp, &sol));
    }

    #[test]
    fn solve_single_forcing_constraint() {
        // Not realizable from a pattern (a term and a cover of the same
        // variable cannot coexist there), but pins the forcing behaviour.
        let lp = LpInstance {
            variables: vec![3],
            objective_terms: vec![vec![0]],
            cover_constraints: vec![vec![0]],
        };
        let sol = solve_lp_exact(&lp);
        assert_eq!(sol.b_star, ratio_int(1));
        assert_eq!(sol.b_values[&3], ratio_int(1));
    }

    #[test]
    fn empty_objective_terms_force_zero() {
        // Empty-sum convention: with every term empty the objective is 0.
        let lp = LpInstance {
            variables: vec![3, 4],
            objective_terms: vec![vec![]],
            cover_constraints: vec![vec![0, 1]],
        };
        let sol = solve_lp_exact(&lp);
        assert_eq!(sol.b_star, ratio_int(0));
    }

    #[test]
    fn lemma5_violated_by_corrupted_solution() {
        // Claimed optimum 1 with a recorded value of 2 on the only
        // objective term: the identity check must reject it.
        let lp = LpInstance {
            variables: vec![3],
            objective_terms: vec![vec![0]],
            cover_constraints: vec![vec![0]],
        };
        let mut b_values = BTreeMap::new();
        b_values.insert(3u32, ratio_int(2));
        let sol = LpSolution {
            b_values,
            b_star: ratio_int(1),
            q_bar: 1,
            numerators: BTreeMap::from([(3u32, 2)]),
            p_bar: 2,
        };
        assert!(!lemma5_check(&lp, &sol));
    }

    #[test]
    fn optimal_rate_examples() {
        assert_eq!(optimal_rate(&example2()).rate, ratio(5, 2));
        assert_eq!(optimal_rate(&example1()).rate, ratio_int(4));
    }

    #[test]
    fn vertex_oracle_matches_on_example2() {
        let p = example2();
        let a = analyze(&p);
        let lp = build_lp(&a, &p).unwrap();
        assert_eq!(vertex_enumeration_value(&lp), solve_lp_exact(&lp).b_star);
    }

    #[test]
    fn report_serialization() {
        let ra = optimal_rate(&example2());
        let report = RateReportFile::from_rate_analysis(&ra);
        assert_eq!(report.case, "IF");
        assert_eq!(report.b_star.as_deref(), Some("1/2"));
        assert_eq!(report.rate, "5/2");
        assert_eq!(report.b_values["3"], "1/2");
        let json = report.to_json();
        let back: RateReportFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn report_integer_rate_uses_explicit_denominator() {
        let ra = optimal_rate(&example1());
        let report = RateReportFile::from_rate_analysis(&ra);
        assert_eq!(report.rate, "4/1");
        assert_eq!(report.b_star, None);
    }
}
