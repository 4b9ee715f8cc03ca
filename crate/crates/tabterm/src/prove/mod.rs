//! Constraint-based synthesis of symbolic norms and level mappings.
//!
//! The pipeline proves quasi-termination (finitely many distinct calls)
//! or LG-termination (finite forests) of a program with respect to its
//! queries:
//!
//! 1. [`gen`] derives symbolic conditions over unknown coefficients — one
//!    per output position, measured input, clause size relation and level
//!    decrease — using the input-shape [`flow`] to keep the ≠0 side
//!    conditions to positions that can actually grow;
//! 2. [`eliminate`] removes the universally quantified clause variables,
//!    leaving a disjunctive system of polynomial inequalities over the
//!    coefficients ([`expr`]), normalized to a fixpoint;
//! 3. [`solve`] searches the bounded value space exhaustively for the
//!    lexicographically smallest satisfying mapping;
//! 4. [`certificate`] serializes mappings and re-checks them from scratch
//!    against the program text;
//! 5. [`pipeline`] glues the stages together and adds the composition
//!    rules for programs built in layers.

pub mod certificate;
pub mod eliminate;
pub mod expr;
mod flow;
pub mod gen;
pub mod pipeline;
pub mod solve;

pub use certificate::{
    check_certificate, program_fingerprint, CertError, CertReport, Certificate,
    CheckedConstraint, Role,
};
pub use eliminate::{build_system, EliminatedSystem};
pub use expr::SymbolId;
pub use gen::{gen_rigid_quasi, gen_validity, reachable_preds, Inapplicable};
pub use pipeline::{
    compose_min, compose_sum, prove_lg, prove_quasi, ComposeError, Composition,
    ConstraintInfo, EngineCheck, ProofReport, ProveOptions, Verdict,
};
pub use solve::solve;
