//! Depth-first LD exploration: solution sequences, call-set samples, and
//! call-graph samples.
//!
//! The machine walks the LD-tree of a goal left-to-right, recording every
//! selected non-builtin atom. Each goal atom carries the id of the selection
//! that introduced it, so an arc `A -> B` is recorded exactly when `B` is
//! selected as a direct descendant of `A` — that is, after the body prefix
//! preceding `B` in `A`'s resolving clause has been refuted.

use std::collections::{BTreeMap, BTreeSet};

use crate::logic::{max_var, mgu_atoms, rename_clause, variant_key};
use crate::syntax::{display_atom_generic, is_builtin, Atom, PredKey, Program};

use super::{clause_index, solve_builtin, Budget, BudgetDim, EvalOutcome, EvalStats, Meter};

/// One event of an LD exploration, in chronological order. Selection ids
/// count non-builtin selections only; answers appear when first discovered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Select { id: usize, parent: Option<usize>, depth: usize, atom: Atom },
    Answer { atom: Atom },
}

/// Everything a bounded LD exploration observed.
#[derive(Debug, Clone)]
pub struct LdRun {
    /// Computed answers (instances of the goal), canonical, discovery order.
    pub answers: Vec<Atom>,
    /// Variant keys of selected atoms, first-seen order.
    pub calls: Vec<Atom>,
    /// Direct-descendant arcs between call keys, first-seen order.
    pub arcs: Vec<(Atom, Atom)>,
    pub trace: Vec<TraceEvent>,
    pub outcome: EvalOutcome,
}

/// A sampled call graph: `nodes` is the call-set sample and `arcs` the
/// direct-descendant arcs observed within budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallGraph {
    pub nodes: Vec<Atom>,
    pub arcs: Vec<(Atom, Atom)>,
}

impl CallGraph {
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph callgraph {\n");
        for n in &self.nodes {
            s.push_str(&format!("  \"{}\";\n", esc(&display_atom_generic(n))));
        }
        for (a, b) in &self.arcs {
            s.push_str(&format!(
                "  \"{}\" -> \"{}\";\n",
                esc(&display_atom_generic(a)),
                esc(&display_atom_generic(b))
            ));
        }
        s.push_str("}\n");
        s
    }
}

fn esc(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Bounded depth-first LD exploration of `goal`, collecting answers, the
/// call-set sample, the call-graph sample, and a selection trace.
pub fn ld_run(p: &Program, goal: &Atom, b: &Budget) -> LdRun {
    ld_run_opts(p, goal, b, false)
}

pub fn ld_run_opts(p: &Program, goal: &Atom, b: &Budget, occurs_check: bool) -> LdRun {
    let mut m = Dfs {
        prog: p,
        index: clause_index(p),
        occurs: occurs_check,
        meter: Meter::new(b),
        fresh: max_var(goal).map_or(0, |v| v + 1),
        answers: Vec::new(),
        answer_keys: BTreeSet::new(),
        calls: Vec::new(),
        call_keys: BTreeSet::new(),
        arcs: Vec::new(),
        arc_keys: BTreeSet::new(),
        sel_keys: Vec::new(),
        trace: Vec::new(),
        max_depth_seen: 0,
    };
    m.run(vec![(goal.clone(), None)], goal.clone());
    let stats = EvalStats {
        num_trees: 1,
        max_branch_depth: m.max_depth_seen,
        total_steps: m.meter.steps,
        answers_per_tree: vec![m.answers.len()],
    };
    let outcome = EvalOutcome {
        status: m.meter.status(),
        stats,
        any_infinite_branch_suspected: m.meter.depth_hit,
        any_answer_budget_hit: m.meter.answer_hit,
    };
    LdRun { answers: m.answers, calls: m.calls, arcs: m.arcs, trace: m.trace, outcome }
}

/// Answer sequence of the bounded LD exploration.
pub fn ld_solutions(p: &Program, goal: &Atom, b: &Budget) -> (Vec<Atom>, EvalOutcome) {
    let run = ld_run(p, goal, b);
    (run.answers, run.outcome)
}

/// Variant keys of all atoms selected within budget. Equals the call set
/// of the goal exactly when the exploration completed.
pub fn call_set_sample(p: &Program, goal: &Atom, b: &Budget) -> BTreeSet<Atom> {
    ld_run(p, goal, b).calls.into_iter().collect()
}

/// Observed fragment of the call graph: nodes are the call-set sample, arcs
/// the direct-descendant pairs.
pub fn call_graph_sample(p: &Program, goal: &Atom, b: &Budget) -> CallGraph {
    let run = ld_run(p, goal, b);
    CallGraph { nodes: run.calls, arcs: run.arcs }
}

/// Goal atoms are paired with the selection id that introduced them.
type GoalItem = (Atom, Option<usize>);

struct Dfs<'a> {
    prog: &'a Program,
    index: BTreeMap<PredKey, Vec<usize>>,
    occurs: bool,
    meter: Meter<'a>,
    fresh: usize,
    answers: Vec<Atom>,
    answer_keys: BTreeSet<Atom>,
    calls: Vec<Atom>,
    call_keys: BTreeSet<Atom>,
    arcs: Vec<(Atom, Atom)>,
    arc_keys: BTreeSet<(Atom, Atom)>,
    sel_keys: Vec<Atom>,
    trace: Vec<TraceEvent>,
    max_depth_seen: usize,
}

/// Explicit depth-first stack: a `Node` frame is an LD-tree node awaiting
/// selection, an `Alts` frame holds the untried clauses of a selection.
/// Popping the child node pushed by an `Alts` frame before revisiting the
/// frame itself gives exactly the left-to-right, depth-first LD order.
enum Frame {
    Node { goal: Vec<GoalItem>, root: Atom, depth: usize },
    Alts { goal: Vec<GoalItem>, root: Atom, depth: usize, sel_id: usize, clauses: Vec<usize>, next: usize },
}

impl<'a> Dfs<'a> {
    fn run(&mut self, goal: Vec<GoalItem>, root: Atom) {
        let mut stack = vec![Frame::Node { goal, root, depth: 0 }];
        while let Some(frame) = stack.pop() {
            if self.meter.stopped() {
                return;
            }
            match frame {
                Frame::Node { goal, root, depth } => self.enter(goal, root, depth, &mut stack),
                Frame::Alts { .. } => self.resume(frame, &mut stack),
            }
        }
    }

    fn enter(&mut self, goal: Vec<GoalItem>, root: Atom, depth: usize, stack: &mut Vec<Frame>) {
        self.max_depth_seen = self.max_depth_seen.max(depth);
        let Some((sel, parent)) = goal.first() else {
            self.emit_answer(&root);
            return;
        };

        if is_builtin(&sel.key()) {
            if !self.meter.step() {
                return;
            }
            if let Some(th) = solve_builtin(sel, self.occurs) {
                let rest: Vec<GoalItem> =
                    goal[1..].iter().map(|(a, p)| (th.apply_atom(a), *p)).collect();
                stack.push(Frame::Node { goal: rest, root: th.apply_atom(&root), depth });
            }
            return;
        }

        let key = variant_key(sel);
        let id = self.sel_keys.len();
        self.sel_keys.push(key.clone());
        self.trace.push(TraceEvent::Select { id, parent: *parent, depth, atom: sel.clone() });
        if self.call_keys.insert(key.clone()) {
            self.calls.push(key.clone());
        }
        if let Some(pid) = parent {
            let arc = (self.sel_keys[*pid].clone(), key);
            if self.arc_keys.insert(arc.clone()) {
                self.arcs.push(arc);
            }
        }

        let clauses = self.index.get(&sel.key()).cloned().unwrap_or_default();
        stack.push(Frame::Alts { goal, root, depth, sel_id: id, clauses, next: 0 });
    }

    fn resume(&mut self, frame: Frame, stack: &mut Vec<Frame>) {
        let Frame::Alts { goal, root, depth, sel_id, clauses, mut next } = frame else {
            return;
        };
        let (sel, _) = goal[0].clone();
        while next < clauses.len() {
            let ci = clauses[next];
            next += 1;
            let c = &self.prog.clauses[ci];
            let base = self.fresh;
            let (head, body) = rename_clause(&c.head, &c.body, base);
            let Some(th) = mgu_atoms(&sel, &head, self.occurs) else { continue };
            if !self.meter.step() {
                return;
            }
            if depth + 1 > self.meter.budget.max_depth {
                self.meter.trip(BudgetDim::Depth);
                continue;
            }
            self.fresh = base + c.var_names.len();
            let mut child: Vec<GoalItem> =
                body.iter().map(|a| (th.apply_atom(a), Some(sel_id))).collect();
            child.extend(goal[1..].iter().map(|(a, p)| (th.apply_atom(a), *p)));
            let child_root = th.apply_atom(&root);
            stack.push(Frame::Alts { goal, root, depth, sel_id, clauses, next });
            stack.push(Frame::Node { goal: child, root: child_root, depth: depth + 1 });
            return;
        }
    }

    fn emit_answer(&mut self, root: &Atom) {
        let key = variant_key(root);
        if self.answer_keys.contains(&key) {
            return;
        }
        if self.answers.len() >= self.meter.budget.max_answers_per_table {
            // a genuinely new answer beyond the cap: further exploration
            // cannot report anything, stop here
            self.meter.stop(BudgetDim::Answers);
            return;
        }
        self.answer_keys.insert(key.clone());
        self.answers.push(key.clone());
        self.trace.push(TraceEvent::Answer { atom: key });
    }
}
