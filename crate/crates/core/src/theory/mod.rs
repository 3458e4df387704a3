//! Linear-filter theory over non-commuting shift pairs: word bases,
//! Σ-weighted projections with two independent solvers, expressivity
//! certificates, and the oracle-risk gap.

mod basis;
mod project;
mod reference;
mod report;
mod risk;
mod sample;
mod words;

pub use basis::{build_basis, check_nc_binomial, combine, FilterBasis, FilterClass};
pub use project::{sigma_inner, sigma_norm, sigma_project, validate_sigma, SV_CUTOFF};
pub use reference::gram_project;
pub use report::{
    expressivity_report, run_theory_checks, run_theory_checks_with, ExpressivityReport,
    Strictness, TheoryCheck, TheoryCheckOptions, TheoryReport,
};
pub use risk::{empirical_risk_check, oracle_risk_gap, EmpiricalRisk, RiskGap, ORACLE_SPAN_TOL};
pub use sample::{random_pd_sigma, random_shift_pair};
pub use words::{enumerate_words, word_matrix, words_of_length, ShiftPair, Word};
