//! Well-modedness and simply-modedness checks.
//!
//! An undeclared `=`/2 atom is oriented adaptively: the side whose
//! variables are already bound at that point acts as the input (left side
//! preferred), the other side as the output. Its output side may be a
//! structured term as long as its variables are fresh and pairwise
//! distinct — unification against a bound input produces exactly those
//! bindings, which is what simply-modedness is meant to guarantee. A
//! declared mode for `=`/2 switches the atom back to the standard rules.
//!
//! Queries are checked as templates: variables in input positions stand
//! for arbitrary ground parameters, so they count as bound from the start.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::syntax::{Atom, Clause, Mode, Program, Query, Term, VarId, EQ};

#[derive(Debug, Clone, Serialize)]
pub struct ModeViolation {
    /// 0 is the clause head (its output condition); body atoms are 1-based.
    pub atom_index: usize,
    /// 1-based argument positions involved.
    pub positions: Vec<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClauseModeVerdict {
    pub ok: bool,
    pub violations: Vec<ModeViolation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeReport {
    pub ok: bool,
    pub clauses: Vec<ClauseModeVerdict>,
    pub queries: Vec<ClauseModeVerdict>,
}

pub fn check_well_moded(p: &Program) -> ModeReport {
    build_report(p, well_moded_clause, well_moded_query)
}

pub fn check_simply_moded(p: &Program) -> ModeReport {
    build_report(p, simply_moded_clause, simply_moded_query)
}

fn build_report(
    p: &Program,
    on_clause: impl Fn(&Program, &Clause) -> ClauseModeVerdict,
    on_query: impl Fn(&Program, &Query) -> ClauseModeVerdict,
) -> ModeReport {
    let clauses: Vec<ClauseModeVerdict> =
        p.clauses.iter().map(|c| on_clause(p, c)).collect();
    let queries: Vec<ClauseModeVerdict> =
        p.queries.iter().map(|q| on_query(p, q)).collect();
    let ok = clauses.iter().all(|v| v.ok) && queries.iter().all(|v| v.ok);
    ModeReport { ok, clauses, queries }
}

pub fn well_moded_query(p: &Program, q: &Query) -> ClauseModeVerdict {
    let seen = split_args(p, &q.atom).input_vars();
    check_well(p, seen, std::slice::from_ref(&q.atom), None)
}

pub fn simply_moded_query(p: &Program, q: &Query) -> ClauseModeVerdict {
    let inputs = split_args(p, &q.atom).input_vars();
    check_simply(p, inputs, std::slice::from_ref(&q.atom))
}

fn well_moded_clause(p: &Program, c: &Clause) -> ClauseModeVerdict {
    let split = split_args(p, &c.head);
    check_well(p, split.input_vars(), &c.body, Some(&split))
}

fn simply_moded_clause(p: &Program, c: &Clause) -> ClauseModeVerdict {
    check_simply(p, split_args(p, &c.head).input_vars(), &c.body)
}

/// An atom's arguments split by the active mode. For an undeclared `=`/2
/// the split is decided later by orientation.
struct SplitArgs {
    /// (1-based position, term) for each input argument.
    inputs: Vec<(usize, Term)>,
    outputs: Vec<(usize, Term)>,
}

impl SplitArgs {
    fn input_vars(&self) -> BTreeSet<VarId> {
        self.inputs.iter().flat_map(|(_, t)| t.vars()).collect()
    }

    fn output_vars(&self) -> BTreeSet<VarId> {
        self.outputs.iter().flat_map(|(_, t)| t.vars()).collect()
    }
}

fn split_args(p: &Program, a: &Atom) -> SplitArgs {
    let modes = p
        .mode_of(&a.key())
        .unwrap_or_else(|| vec![Mode::In; a.args.len()]);
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for (i, (t, m)) in a.args.iter().zip(modes.iter()).enumerate() {
        if *m == Mode::In {
            inputs.push((i + 1, t.clone()));
        } else {
            outputs.push((i + 1, t.clone()));
        }
    }
    SplitArgs { inputs, outputs }
}

fn is_adaptive_eq(p: &Program, a: &Atom) -> bool {
    let key = a.key();
    key.name == EQ && key.arity == 2 && !p.modes.contains_key(&key)
}

/// Orientation of each body atom: for adaptive `=`/2 atoms, true = left
/// side is the input. Decided by a single left-to-right sweep over the
/// bound-variable set (left side preferred; unorientable atoms default to
/// left-input and get flagged by the checks).
fn orientations(p: &Program, seen0: &BTreeSet<VarId>, body: &[Atom]) -> Vec<Option<bool>> {
    let mut seen = seen0.clone();
    let mut dirs = Vec::with_capacity(body.len());
    for a in body {
        if is_adaptive_eq(p, a) {
            let lv: BTreeSet<VarId> = a.args[0].vars().into_iter().collect();
            let rv: BTreeSet<VarId> = a.args[1].vars().into_iter().collect();
            let left_in = if lv.is_subset(&seen) {
                true
            } else {
                !rv.is_subset(&seen)
            };
            dirs.push(Some(left_in));
            // the output side is bound once the equation succeeds
            seen.extend(if left_in { rv } else { lv });
        } else {
            dirs.push(None);
            seen.extend(split_args(p, a).output_vars());
        }
    }
    dirs
}

fn eq_sides(a: &Atom, left_in: bool) -> (SplitArgs, usize, usize) {
    let (in_pos, out_pos) = if left_in { (1, 2) } else { (2, 1) };
    let split = SplitArgs {
        inputs: vec![(in_pos, a.args[in_pos - 1].clone())],
        outputs: vec![(out_pos, a.args[out_pos - 1].clone())],
    };
    (split, in_pos, out_pos)
}

fn check_well(
    p: &Program,
    mut seen: BTreeSet<VarId>,
    body: &[Atom],
    head_split: Option<&SplitArgs>,
) -> ClauseModeVerdict {
    let dirs = orientations(p, &seen, body);
    let mut violations = Vec::new();
    for (idx, a) in body.iter().enumerate() {
        let split = match dirs[idx] {
            Some(left_in) => eq_sides(a, left_in).0,
            None => split_args(p, a),
        };
        let bad: Vec<usize> = split
            .inputs
            .iter()
            .filter(|(_, t)| !t.vars().iter().all(|v| seen.contains(v)))
            .map(|(pos, _)| *pos)
            .collect();
        if !bad.is_empty() {
            violations.push(ModeViolation {
                atom_index: idx + 1,
                positions: bad,
                reason: "input is not bound by the head inputs and earlier outputs".into(),
            });
        }
        seen.extend(split.output_vars());
    }
    if let Some(h) = head_split {
        let bad: Vec<usize> = h
            .outputs
            .iter()
            .filter(|(_, t)| !t.vars().iter().all(|v| seen.contains(v)))
            .map(|(pos, _)| *pos)
            .collect();
        if !bad.is_empty() {
            violations.push(ModeViolation {
                atom_index: 0,
                positions: bad,
                reason: "head output is not bound by the head inputs and body outputs".into(),
            });
        }
    }
    ClauseModeVerdict { ok: violations.is_empty(), violations }
}

fn check_simply(
    p: &Program,
    head_inputs: BTreeSet<VarId>,
    body: &[Atom],
) -> ClauseModeVerdict {
    let dirs = orientations(p, &head_inputs, body);
    let mut violations = Vec::new();
    let mut family: BTreeSet<VarId> = BTreeSet::new();
    let mut inputs_so_far = head_inputs;
    for (idx, a) in body.iter().enumerate() {
        let atom_index = idx + 1;
        let (split, adaptive) = match dirs[idx] {
            Some(left_in) => (eq_sides(a, left_in).0, true),
            None => (split_args(p, a), false),
        };
        inputs_so_far.extend(split.input_vars());
        let mut out_vars: Vec<(usize, VarId)> = Vec::new();
        for (pos, t) in &split.outputs {
            match t {
                Term::Var(v) => out_vars.push((*pos, *v)),
                _ if adaptive => {
                    // structured output of an equation: fresh linear term
                    let vs = t.vars();
                    let mut uniq = BTreeSet::new();
                    if vs.iter().any(|v| !uniq.insert(*v)) {
                        violations.push(ModeViolation {
                            atom_index,
                            positions: vec![*pos],
                            reason: "equation output repeats a variable".into(),
                        });
                    }
                    out_vars.extend(vs.into_iter().map(|v| (*pos, v)));
                }
                _ => {
                    violations.push(ModeViolation {
                        atom_index,
                        positions: vec![*pos],
                        reason: "output is not a variable".into(),
                    });
                }
            }
        }
        for (pos, v) in out_vars {
            if !family.insert(v) {
                violations.push(ModeViolation {
                    atom_index,
                    positions: vec![pos],
                    reason: "output variable is not linear across the body".into(),
                });
            }
            if inputs_so_far.contains(&v) {
                violations.push(ModeViolation {
                    atom_index,
                    positions: vec![pos],
                    reason: "output variable already occurs in an input".into(),
                });
            }
        }
    }
    ClauseModeVerdict { ok: violations.is_empty(), violations }
}
