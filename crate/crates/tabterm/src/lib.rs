//! tabterm: a workbench for termination of definite logic programs under
//! mixed tabled/non-tabled (LG) execution.
//!
//! The library is organised along the pipeline:
//!
//! * [`syntax`] — `.tlp` programs: terms, clauses, modes, parsing, rendering.
//! * [`logic`] — substitutions, most general unifiers, variant keys.
//! * [`analysis`] — dependency graph, SCCs, cycle classification (C1/C2/C3),
//!   well-chosen tablings, mode discipline, the `extends` relation.
//! * [`transform`] — the answer-guard transformation `P ↦ Pᵃ` that reduces
//!   LG-termination to quasi-termination, and modular decomposition.
//! * [`engine`] — a bounded tabled-resolution engine (LG forests) plus a
//!   plain depth-first LD engine used for cross-validation and call
//!   sampling.
//! * [`prove`] — constraint-based synthesis of symbolic norms and level
//!   mappings: constraint generation, universal-variable elimination,
//!   a small exhaustive solver, certificates and their checker, and the
//!   modular composition rules.
//! * [`cli`] + [`report`] — the `tabterm` command-line front end and its
//!   JSON report document.

pub mod analysis;
pub mod cli;
pub mod engine;
pub mod logic;
pub mod prove;
pub mod report;
pub mod syntax;
pub mod transform;
