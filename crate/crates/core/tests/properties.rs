//! Cross-module properties that need the pattern generators: rate
//! monotonicity under security growth, reduction invariance of the LP, and
//! solver determinism.

mod common;

use common::{random_if_pattern, random_pattern, TestRng};
use wss_core::pattern::{analyze, normalize_pattern, CaseLabel, UserSet};
use wss_core::ratecalc::{build_lp, optimal_rate, solve_lp_exact, LpInstance};

/// Growing one security generator by one user strengthens the constraint
/// system, so the optimal rate can only go up.
#[test]
fn rate_monotone_under_security_growth() {
    let mut rng = TestRng::new(0xfeed_0001);
    let mut grown_cases = 0;
    while grown_cases < 120 {
        let p = random_pattern(&mut rng, 3, 7);
        let gens = p.security_gens();
        let gi = rng.below(gens.len() as u64) as usize;
        let missing = UserSet::full(p.k()).minus(gens[gi]);
        let Some(extra) = missing.min_user() else {
            continue; // generator already covers everyone
        };
        let mut sec: Vec<Vec<u32>> = gens.iter().map(|s| s.to_vec()).collect();
        sec[gi].push(extra);
        let col: Vec<Vec<u32>> = p.colluding_gens().iter().map(|t| t.to_vec()).collect();
        let grown = normalize_pattern(p.k(), &sec, &col).unwrap();

        let before = optimal_rate(&p);
        let after = optimal_rate(&grown);
        assert!(
            after.rate >= before.rate,
            "rate dropped {} -> {} when growing {:?} by {extra} in {p:?}",
            before.rate,
            after.rate,
            gens[gi]
        );
        grown_cases += 1;
    }
}

/// Build the instance with no deduplication and no dominance reduction.
fn build_unreduced(p: &wss_core::Pattern) -> LpInstance {
    let analysis = analyze(p);
    assert_eq!(analysis.case_label, CaseLabel::If);
    let full = UserSet::full(p.k());
    let variables: Vec<u32> = full.minus(analysis.total_set).iter().collect();
    let idx = |set: UserSet| -> Vec<usize> {
        variables
            .iter()
            .enumerate()
            .filter(|(_, u)| set.contains(**u))
            .map(|(i, _)| i)
            .collect()
    };
    let mut objective_terms = Vec::new();
    let mut cover_constraints = Vec::new();
    for (s, t) in &analysis.achieving_pairs {
        objective_terms.push(idx(t.minus(analysis.total_set)));
        cover_constraints.push(idx(full.minus(s.union(*t))));
    }
    LpInstance {
        variables,
        objective_terms,
        cover_constraints,
    }
}

/// Dropping dominated constraints and duplicate subsets never moves the
/// optimum.
#[test]
fn reduction_preserves_lp_value() {
    let mut rng = TestRng::new(0xfeed_0002);
    for _ in 0..60 {
        let p = random_if_pattern(&mut rng, 4, 6, 2);
        let analysis = analyze(&p);
        let reduced = build_lp(&analysis, &p).unwrap();
        let unreduced = build_unreduced(&p);
        assert_eq!(
            solve_lp_exact(&reduced).b_star,
            solve_lp_exact(&unreduced).b_star,
            "reduction changed the optimum for {p:?}"
        );
    }
}

/// Identical instances give bit-identical solutions.
#[test]
fn solver_is_deterministic() {
    let mut rng = TestRng::new(0xfeed_0003);
    for _ in 0..20 {
        let p = random_if_pattern(&mut rng, 4, 7, 3);
        let analysis = analyze(&p);
        let lp = build_lp(&analysis, &p).unwrap();
        let a = solve_lp_exact(&lp);
        let b = solve_lp_exact(&lp);
        assert_eq!(a, b);
    }
}
