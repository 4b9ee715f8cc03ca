//! Abstract syntax and the `.tlp` concrete syntax.
//!
//! A program is a list of definite clauses together with a tabling set, a
//! mode map, and declared queries. Variables are clause-local: each clause
//! numbers its variables `0..n` in order of first occurrence and keeps the
//! source names alongside for rendering. Lists desugar to `'.'/2` and the
//! constant `[]`; integers are ordinary constants.

mod lexer;
mod parser;
mod render;

pub use parser::{parse_goal, parse_program, ParseOptions};
pub use render::{render_program, render_query_binding};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Clause-local (or engine-global, after renaming) variable identifier.
pub type VarId = usize;

/// A constant: a lowercase identifier, `[]`, or an integer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cst {
    Name(String),
    Int(i64),
}

impl fmt::Display for Cst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cst::Name(s) => write!(f, "{s}"),
            Cst::Int(i) => write!(f, "{i}"),
        }
    }
}

/// First-order terms. `App` always has at least one argument.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(VarId),
    Const(Cst),
    App(String, Vec<Term>),
}

impl Term {
    pub fn nil() -> Term {
        Term::Const(Cst::Name("[]".into()))
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::App(".".into(), vec![head, tail])
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Const(_) => true,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Variables in first-occurrence order (left to right, depth first).
    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut Vec<VarId>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Term::Const(_) => {}
            Term::App(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }
}

/// Predicate key: name plus arity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PredKey {
    pub name: String,
    pub arity: usize,
}

impl PredKey {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        PredKey { name: name.into(), arity }
    }
}

impl fmt::Display for PredKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

/// Functor key: name plus arity (arity ≥ 1; constants are not functors).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FuncKey {
    pub name: String,
    pub arity: usize,
}

impl FuncKey {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        FuncKey { name: name.into(), arity }
    }
}

impl fmt::Display for FuncKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

/// An atom `p(t1,…,tn)`; `args` may be empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn key(&self) -> PredKey {
        PredKey::new(self.pred.clone(), self.args.len())
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        for t in &self.args {
            t.collect_vars(&mut out);
        }
        out
    }
}

/// A definite clause `head :- body.` with the source names of its local
/// variables (`var_names[i]` names variable `i`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub head: Atom,
    pub body: Vec<Atom>,
    pub var_names: Vec<String>,
}

impl Clause {
    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        std::iter::once(&self.head).chain(self.body.iter())
    }
}

/// A declared query (`:- query g.`), with its own variable namespace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub atom: Atom,
    pub var_names: Vec<String>,
}

/// Argument mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Mode {
    In,
    Out,
}

/// Mode map: one mode vector per predicate (keyed by name + arity).
pub type ModeMap = BTreeMap<PredKey, Vec<Mode>>;

/// The unification builtin `=`/2.
pub const EQ: &str = "=";
/// The `integer`/1 test builtin.
pub const INTEGER: &str = "integer";

/// Builtin predicates are excluded from the dependency graph and carry the
/// constant level mapping 0.
pub fn is_builtin(key: &PredKey) -> bool {
    (key.name == EQ && key.arity == 2) || (key.name == INTEGER && key.arity == 1)
}

/// Suffix reserved for predicates generated by the answer-guard transform.
pub const GENERATED_SUFFIX: &str = "__a";

/// A parsed program.
///
/// Inventories (`preds`, `functors`, `constants`) are derived solely from
/// the clauses and queries. `tabling` keeps directives as written (a
/// directive naming a predicate that never occurs is retained next to a
/// warning; consumers intersect with the inventory).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub clauses: Vec<Clause>,
    pub tabling: BTreeSet<PredKey>,
    pub modes: ModeMap,
    pub queries: Vec<Query>,
    pub preds: BTreeSet<PredKey>,
    pub functors: BTreeSet<FuncKey>,
    pub constants: BTreeSet<Cst>,
    pub warnings: Vec<String>,
}

impl Program {
    /// Tabled predicates that actually occur in the program or queries.
    pub fn effective_tabling(&self) -> BTreeSet<PredKey> {
        self.tabling.iter().filter(|p| self.preds.contains(*p)).cloned().collect()
    }

    /// Mode vector for a predicate; builtins fall back to their fixed modes.
    pub fn mode_of(&self, key: &PredKey) -> Option<Vec<Mode>> {
        if let Some(m) = self.modes.get(key) {
            return Some(m.clone());
        }
        builtin_mode(key)
    }

    /// Input argument positions (1-based) of a predicate.
    pub fn inputs_of(&self, key: &PredKey) -> Vec<usize> {
        self.mode_of(key)
            .map(|m| {
                m.iter()
                    .enumerate()
                    .filter(|(_, mo)| **mo == Mode::In)
                    .map(|(i, _)| i + 1)
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Output argument positions (1-based) of a predicate.
    pub fn outputs_of(&self, key: &PredKey) -> Vec<usize> {
        self.mode_of(key)
            .map(|m| {
                m.iter()
                    .enumerate()
                    .filter(|(_, mo)| **mo == Mode::Out)
                    .map(|(i, _)| i + 1)
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Largest clause-local variable id in use, for fresh-id bases.
    pub fn max_local_var(&self) -> usize {
        let c = self.clauses.iter().map(|c| c.var_names.len()).max().unwrap_or(0);
        let q = self.queries.iter().map(|q| q.var_names.len()).max().unwrap_or(0);
        c.max(q)
    }

    /// Recompute the inventories from clauses and queries.
    pub(crate) fn rebuild_inventory(&mut self) {
        self.preds.clear();
        self.functors.clear();
        self.constants.clear();
        let atoms: Vec<Atom> = self
            .clauses
            .iter()
            .flat_map(|c| c.atoms().cloned().collect::<Vec<_>>())
            .chain(self.queries.iter().map(|q| q.atom.clone()))
            .collect();
        for a in &atoms {
            self.preds.insert(a.key());
            for t in &a.args {
                collect_syms(t, &mut self.functors, &mut self.constants);
            }
        }
    }
}

fn collect_syms(t: &Term, funcs: &mut BTreeSet<FuncKey>, consts: &mut BTreeSet<Cst>) {
    match t {
        Term::Var(_) => {}
        Term::Const(c) => {
            consts.insert(c.clone());
        }
        Term::App(f, args) => {
            funcs.insert(FuncKey { name: f.clone(), arity: args.len() });
            for a in args {
                collect_syms(a, funcs, consts);
            }
        }
    }
}

/// Fixed builtin modes: `=`(In,Out) unless overridden, `integer`(In).
pub fn builtin_mode(key: &PredKey) -> Option<Vec<Mode>> {
    if key.name == EQ && key.arity == 2 {
        Some(vec![Mode::In, Mode::Out])
    } else if key.name == INTEGER && key.arity == 1 {
        Some(vec![Mode::In])
    } else {
        None
    }
}

/// Errors raised while reading `.tlp` sources.
#[derive(Debug, Error)]
pub enum SyntaxError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("duplicate mode declaration for {0}")]
    DuplicateMode(PredKey),
    #[error("mode declaration {declared} clashes with occurrences of {name} at arity {used}")]
    ModeArityMismatch { declared: PredKey, name: String, used: usize },
    #[error("no mode declared for {0} (pass a default mode to allow this)")]
    MissingMode(PredKey),
    #[error("clause head {0} is a builtin")]
    BuiltinHead(PredKey),
    #[error("unknown predicate in goal: {0}")]
    UnknownPredicate(PredKey),
}

/// Display helper: an atom rendered with a supplied variable namer.
pub fn display_atom(atom: &Atom, name: &dyn Fn(VarId) -> String) -> String {
    render::atom_to_string(atom, name)
}

/// Display with the default `_Gn` namer (engine-side atoms).
pub fn display_atom_generic(atom: &Atom) -> String {
    display_atom(atom, &|v| format!("_G{v}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_sugar_builds_cons_cells() {
        let t = Term::cons(Term::Const(Cst::Name("a".into())), Term::nil());
        match &t {
            Term::App(f, args) => {
                assert_eq!(f, ".");
                assert_eq!(args.len(), 2);
            }
            _ => panic!("expected cons"),
        }
    }

    #[test]
    fn builtins_are_recognised() {
        assert!(is_builtin(&PredKey::new("=", 2)));
        assert!(is_builtin(&PredKey::new("integer", 1)));
        assert!(!is_builtin(&PredKey::new("=", 3)));
        assert!(!is_builtin(&PredKey::new("path", 4)));
    }
}
