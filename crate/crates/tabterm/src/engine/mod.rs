//! Bounded LD- and LG-resolution.
//!
//! Two evaluators over the same clause base: a depth-first LD machine
//! ([`ld`]) exploring the LD-tree of a goal, and a worklist tabling machine
//! ([`lg`]) building the LG-forest under variant tabling. Both are truncated
//! by a [`Budget`]; running out of budget is an outcome, not an error.
//!
//! Accounting rules shared by both machines:
//!
//! * a *step* is a successful resolution — against a program clause, a
//!   builtin, or a tabled answer; failed unification attempts are free;
//! * *depth* counts program-clause resolutions only, so builtins and answer
//!   consumption lengthen a branch without deepening it;
//! * answers are kept in discovery order, deduplicated by variant key and
//!   stored in canonical (variant-key) form.
//!
//! The step and table budgets stop an evaluation outright; the depth and
//! answer budgets prune locally and let the rest of the run continue. Either
//! way the first dimension hit is reported in the status, and `Completed`
//! means no dimension was hit at all.

pub mod ld;
pub mod lg;

pub use ld::{call_graph_sample, call_set_sample, ld_run, ld_solutions, CallGraph, LdRun, TraceEvent};
pub use lg::{forest_stats, lg_evaluate, ArcLabel, ForestStats, LGForest, LGNode, LGTree};

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::logic::{mgu, Subst};
use crate::syntax::{Atom, Cst, PredKey, Program, Term, EQ, INTEGER};

/// Caps on the four dimensions an evaluation can grow in.
///
/// Every field must be at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Budget {
    pub max_steps: usize,
    pub max_depth: usize,
    pub max_tables: usize,
    pub max_answers_per_table: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_steps: 100_000,
            max_depth: 2_000,
            max_tables: 256,
            max_answers_per_table: 64,
        }
    }
}

/// The budget dimension that cut an evaluation short.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BudgetDim {
    Steps,
    Depth,
    Tables,
    Answers,
}

impl fmt::Display for BudgetDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BudgetDim::Steps => "steps",
            BudgetDim::Depth => "depth",
            BudgetDim::Tables => "tables",
            BudgetDim::Answers => "answers",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EvalStatus {
    Completed,
    Exhausted(BudgetDim),
}

impl EvalStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, EvalStatus::Completed)
    }
}

impl fmt::Display for EvalStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalStatus::Completed => f.write_str("completed"),
            EvalStatus::Exhausted(d) => write!(f, "exhausted ({d} budget)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalStats {
    pub num_trees: usize,
    pub max_branch_depth: usize,
    pub total_steps: usize,
    /// Answer counts in tree-creation order (a single entry for LD runs).
    pub answers_per_tree: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalOutcome {
    pub status: EvalStatus,
    pub stats: EvalStats,
    pub any_infinite_branch_suspected: bool,
    pub any_answer_budget_hit: bool,
}

/// Budget bookkeeping shared by both machines. The first dimension tripped
/// determines the final status; `stop` trips are hard (evaluation aborts),
/// plain trips only prune.
pub(crate) struct Meter<'a> {
    pub(crate) budget: &'a Budget,
    pub(crate) steps: usize,
    first_trip: Option<BudgetDim>,
    hard_stop: bool,
    pub(crate) depth_hit: bool,
    pub(crate) answer_hit: bool,
}

impl<'a> Meter<'a> {
    pub(crate) fn new(budget: &'a Budget) -> Self {
        Meter { budget, steps: 0, first_trip: None, hard_stop: false, depth_hit: false, answer_hit: false }
    }

    /// Account for one resolution; false means the step budget is gone and
    /// the evaluation must stop.
    pub(crate) fn step(&mut self) -> bool {
        if self.steps >= self.budget.max_steps {
            self.stop(BudgetDim::Steps);
            return false;
        }
        self.steps += 1;
        true
    }

    pub(crate) fn trip(&mut self, d: BudgetDim) {
        if self.first_trip.is_none() {
            self.first_trip = Some(d);
        }
        match d {
            BudgetDim::Depth => self.depth_hit = true,
            BudgetDim::Answers => self.answer_hit = true,
            _ => {}
        }
    }

    pub(crate) fn stop(&mut self, d: BudgetDim) {
        self.trip(d);
        self.hard_stop = true;
    }

    pub(crate) fn stopped(&self) -> bool {
        self.hard_stop
    }

    pub(crate) fn status(&self) -> EvalStatus {
        match self.first_trip {
            None => EvalStatus::Completed,
            Some(d) => EvalStatus::Exhausted(d),
        }
    }
}

/// Resolve a selected builtin atom: `=`/2 unifies its arguments, `integer`/1
/// succeeds exactly on integer constants. `None` means the atom fails.
pub(crate) fn solve_builtin(a: &Atom, occurs_check: bool) -> Option<Subst> {
    if a.pred == EQ && a.args.len() == 2 {
        mgu(&a.args[0], &a.args[1], occurs_check)
    } else if a.pred == INTEGER && a.args.len() == 1 {
        matches!(a.args[0], Term::Const(Cst::Int(_))).then(Subst::new)
    } else {
        None
    }
}

/// Clause indices grouped by head predicate, in program order.
pub(crate) fn clause_index(p: &Program) -> BTreeMap<PredKey, Vec<usize>> {
    let mut ix: BTreeMap<PredKey, Vec<usize>> = BTreeMap::new();
    for (i, c) in p.clauses.iter().enumerate() {
        ix.entry(c.head.key()).or_default().push(i);
    }
    ix
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(p: &str, args: Vec<Term>) -> Atom {
        Atom { pred: p.into(), args }
    }

    #[test]
    fn builtin_resolution() {
        let unify = atom(EQ, vec![Term::Var(0), Term::Const(Cst::Name("a".into()))]);
        let s = solve_builtin(&unify, false).unwrap();
        assert_eq!(s.get(0), Some(&Term::Const(Cst::Name("a".into()))));

        let ok = atom(INTEGER, vec![Term::Const(Cst::Int(3))]);
        assert!(solve_builtin(&ok, false).unwrap().is_empty());
        let no = atom(INTEGER, vec![Term::Const(Cst::Name("a".into()))]);
        assert!(solve_builtin(&no, false).is_none());
        let var = atom(INTEGER, vec![Term::Var(0)]);
        assert!(solve_builtin(&var, false).is_none());
    }

    #[test]
    fn meter_reports_first_trip() {
        let b = Budget { max_steps: 2, max_depth: 5, max_tables: 5, max_answers_per_table: 5 };
        let mut m = Meter::new(&b);
        assert!(m.step());
        m.trip(BudgetDim::Depth);
        assert!(m.step());
        assert!(!m.step());
        assert!(m.stopped());
        // depth tripped first, so it names the status even though steps
        // caused the hard stop
        assert_eq!(m.status(), EvalStatus::Exhausted(BudgetDim::Depth));
        assert!(m.depth_hit);
    }
}
