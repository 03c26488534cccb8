//! Weakly secure summation toolkit.
//!
//! End-to-end pipeline for the one-round secure summation protocol with
//! configurable security input sets and colluding user sets:
//!
//! * [`pattern`] — parse/normalize the two monotone set systems and derive
//!   the quantities the rate formula depends on, with a brute-force closure
//!   oracle for cross-checking.
//! * [`ratecalc`] — assemble and exactly solve the key-rate linear program
//!   over arbitrary-precision rationals; produce the optimal rate and the
//!   per-user certificate.
//! * [`gf`] — prime-field matrices, exact rank, seeded uniform sampling,
//!   and working-field planning.
//! * [`scheme`] — synthesize the linear key-distribution scheme for the
//!   classified case and verify its generic-position conditions.
//! * [`protocol`] — simulate protocol rounds and assemble coalition views.
//! * [`audit`] — exact security and converse verification via rank-based
//!   entropies, with a brute-force enumeration oracle.

pub mod audit;
pub mod gf;
pub mod pattern;
pub mod protocol;
pub mod ratecalc;
pub mod rational;
pub mod scheme;

pub use pattern::{analyze, closure_oracle, normalize_pattern, CaseLabel, Pattern, UserSet};
pub use ratecalc::{optimal_rate, RateAnalysis};
