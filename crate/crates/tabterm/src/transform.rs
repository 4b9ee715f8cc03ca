//! The answer-guard transformation and modular decomposition.
//!
//! The transformation reduces one termination notion to the other: a
//! program LG-terminates exactly when its transformed version
//! quasi-terminates. Each tabled body atom that is mutually recursive with
//! (or equal to) its clause's head predicate gets an immediate guard copy
//! `p__a(same args)`, and one unit clause `p__a(X1,…,Xn)` is appended per
//! tabled recursive predicate. The guard predicates are tabled as well and
//! carry all-input modes: they are only ever called with the answer
//! bindings of `p`, and all-input keeps a well-moded source well-moded.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::analysis::build_dep_graph;
use crate::syntax::{
    is_builtin, Atom, Clause, Mode, PredKey, Program, Term, GENERATED_SUFFIX,
};

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("predicate {0} already uses the reserved suffix {GENERATED_SUFFIX}")]
    ReservedName(PredKey),
}

/// How source predicates map to their generated guards.
#[derive(Debug, Clone, Default)]
pub struct TransformMap {
    /// p/n → p__a/n for every tabled recursive p.
    pub renames: BTreeMap<PredKey, PredKey>,
    /// Tabling of the transformed program (source tabling plus guards).
    pub generated_tabling: BTreeSet<PredKey>,
}

pub fn a_transform(p: &Program) -> Result<(Program, TransformMap), TransformError> {
    for k in &p.preds {
        if k.name.ends_with(GENERATED_SUFFIX) {
            return Err(TransformError::ReservedName(k.clone()));
        }
    }
    let g = build_dep_graph(p);
    let rec = g.recursive_preds();
    let tr: BTreeSet<PredKey> =
        p.tabling.iter().filter(|k| rec.contains(*k)).cloned().collect();
    let renames: BTreeMap<PredKey, PredKey> = tr
        .iter()
        .map(|k| {
            (k.clone(), PredKey::new(format!("{}{}", k.name, GENERATED_SUFFIX), k.arity))
        })
        .collect();

    let mut out = p.clone();
    for c in &mut out.clauses {
        let head_key = c.head.key();
        let mut body = Vec::with_capacity(c.body.len() * 2);
        for b in &c.body {
            let key = b.key();
            body.push(b.clone());
            if p.tabling.contains(&key) && g.sim(&key, &head_key) {
                body.push(Atom {
                    pred: format!("{}{}", key.name, GENERATED_SUFFIX),
                    args: b.args.clone(),
                });
            }
        }
        c.body = body;
    }
    for (src, dst) in &renames {
        out.clauses.push(Clause {
            head: Atom {
                pred: dst.name.clone(),
                args: (0..src.arity).map(Term::Var).collect(),
            },
            body: Vec::new(),
            var_names: (1..=src.arity).map(|i| format!("X{i}")).collect(),
        });
        out.tabling.insert(dst.clone());
        out.modes.insert(dst.clone(), vec![Mode::In; dst.arity]);
    }
    out.rebuild_inventory();
    let map = TransformMap { renames, generated_tabling: out.tabling.clone() };
    Ok((out, map))
}

/// One element of a modular decomposition: a slice of the program together
/// with the predicates it defines and its height in the extends order.
/// Components sharing a level never mention each other's predicates.
#[derive(Debug, Clone)]
pub struct ModularComponent {
    pub program: Program,
    pub defines: BTreeSet<PredKey>,
    pub level: usize,
}

/// Split a program along the SCC condensation of its defined-predicate
/// dependency graph, with all fact-only predicates merged into one base
/// component. The result is ordered bottom-up: every component extends the
/// union of the components before it.
pub fn modular_decompose(p: &Program) -> Vec<ModularComponent> {
    let g = build_dep_graph(p);
    let defined: BTreeSet<PredKey> = p.clauses.iter().map(|c| c.head.key()).collect();
    let fact_only: BTreeSet<PredKey> = defined
        .iter()
        .filter(|k| p.clauses.iter().filter(|c| &c.head.key() == *k).all(|c| c.body.is_empty()))
        .cloned()
        .collect();

    // group defined predicates: the merged facts base, then one group per
    // SCC (in callee-first order)
    let mut groups: Vec<BTreeSet<PredKey>> = Vec::new();
    if !fact_only.is_empty() {
        groups.push(fact_only.clone());
    }
    for scc in &g.sccs {
        let preds: BTreeSet<PredKey> = scc
            .iter()
            .map(|i| g.nodes[*i].clone())
            .filter(|k| defined.contains(k) && !fact_only.contains(k))
            .collect();
        if !preds.is_empty() {
            groups.push(preds);
        }
    }

    let group_of = |k: &PredKey| groups.iter().position(|grp| grp.contains(k));
    let mut levels = vec![0usize; groups.len()];
    // levels by longest chain of references between groups (facts first,
    // SCCs callee-first, so references always point to earlier groups)
    for (gi, grp) in groups.iter().enumerate() {
        let mut level = 0;
        for c in p.clauses.iter().filter(|c| grp.contains(&c.head.key())) {
            for b in &c.body {
                if let Some(ti) = group_of(&b.key()) {
                    if ti != gi {
                        level = level.max(levels[ti] + 1);
                    }
                }
            }
        }
        levels[gi] = level;
    }

    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by_key(|gi| (levels[*gi], groups[*gi].iter().next().cloned()));

    order
        .into_iter()
        .map(|gi| {
            let grp = &groups[gi];
            let clauses: Vec<Clause> =
                p.clauses.iter().filter(|c| grp.contains(&c.head.key())).cloned().collect();
            let mut prog = Program {
                clauses,
                tabling: p.tabling.iter().filter(|k| grp.contains(*k)).cloned().collect(),
                ..Program::default()
            };
            prog.rebuild_inventory();
            prog.modes = p
                .modes
                .iter()
                .filter(|(k, _)| prog.preds.contains(*k) || is_builtin(k))
                .map(|(k, m)| (k.clone(), m.clone()))
                .collect();
            ModularComponent { program: prog, defines: grp.clone(), level: levels[gi] }
        })
        .collect()
}

/// The union of two programs (clauses of `p` first). Tabling and modes are
/// merged; a mode declared in both must agree.
pub fn union_programs(p: &Program, r: &Program) -> Program {
    let mut out = p.clone();
    out.clauses.extend(r.clauses.iter().cloned());
    out.queries.extend(r.queries.iter().cloned());
    out.tabling.extend(r.tabling.iter().cloned());
    for (k, m) in &r.modes {
        out.modes.entry(k.clone()).or_insert_with(|| m.clone());
    }
    out.warnings.extend(r.warnings.iter().cloned());
    out.rebuild_inventory();
    out
}

// a guard atom for the same predicate, used when stating LG conditions
pub fn guard_key(k: &PredKey) -> PredKey {
    PredKey::new(format!("{}{}", k.name, GENERATED_SUFFIX), k.arity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::check_extends;
    use crate::syntax::{parse_program, render_program, Mode, ParseOptions};

    fn parse(src: &str) -> Program {
        parse_program(src, &ParseOptions { default_mode: Some(Mode::In) }).unwrap()
    }

    const EXAPATH: &str = "\
:- table path/4.
:- mode path(i,i,o,o).
:- mode edge(i,i,o).
path(X,Ed,Y,[Y]) :- edge(X,Ed,Y).
path(X,Ed,Z,[Y|L]) :- edge(X,Ed,Y), path(Y,Ed,Z,L).
edge(X,[e(X,Y)|L],Y).
edge(X,[e(X1,X2)|L],Y) :- edge(X,L,Y).
";

    #[test]
    fn path_transform_matches_the_expected_shape() {
        let p = parse(EXAPATH);
        let (pa, map) = a_transform(&p).unwrap();
        // size law
        assert_eq!(pa.clauses.len(), p.clauses.len() + 1);
        assert_eq!(map.renames.len(), 1);
        assert_eq!(
            map.renames[&PredKey::new("path", 4)],
            PredKey::new("path__a", 4)
        );
        // the recursive path clause gains a trailing guard
        let c = &pa.clauses[1];
        assert_eq!(c.body.len(), 3);
        assert_eq!(c.body[1].pred, "path");
        assert_eq!(c.body[2].pred, "path__a");
        assert_eq!(c.body[2].args, c.body[1].args);
        // non-tabled edge gets no guard anywhere
        assert!(pa.clauses.iter().all(|c| c.body.iter().all(|b| b.pred != "edge__a")));
        // appended unit clause
        let fact = pa.clauses.last().unwrap();
        assert_eq!(fact.head.pred, "path__a");
        assert_eq!(fact.head.args.len(), 4);
        assert!(fact.body.is_empty());
        assert_eq!(fact.var_names, vec!["X1", "X2", "X3", "X4"]);
        // tabling and modes of the guard
        assert!(pa.tabling.contains(&PredKey::new("path", 4)));
        assert!(pa.tabling.contains(&PredKey::new("path__a", 4)));
        assert_eq!(pa.modes[&PredKey::new("path__a", 4)], vec![Mode::In; 4]);
        // output is renderable and re-parseable (guards only warn)
        let rendered = render_program(&pa);
        let back = parse_program(&rendered, &ParseOptions::default()).unwrap();
        assert_eq!(back.clauses, pa.clauses);
    }

    #[test]
    fn grammar_transform_interleaves_guards() {
        let src = "\
:- table a/2.
:- mode s(i,o).
:- mode a(i,o).
s(Si,So) :- a(Si,S), S = [b|So].
a(Si,So) :- a(Si,S), a(S,So).
a(Si,So) :- Si = [a|So].
";
        let (ra, _) = a_transform(&parse(src)).unwrap();
        // s is not mutually recursive with a, so its clause is unchanged
        assert_eq!(ra.clauses[0].body.len(), 2);
        // the recursive a clause interleaves guards: a, a__a, a, a__a
        let preds: Vec<&str> =
            ra.clauses[1].body.iter().map(|b| b.pred.as_str()).collect();
        assert_eq!(preds, vec!["a", "a__a", "a", "a__a"]);
        assert_eq!(ra.clauses[2].body.len(), 1);
        assert_eq!(ra.clauses.len(), 4);
    }

    #[test]
    fn no_tabled_recursion_means_no_change() {
        let p = parse(":- mode p(i).\n:- mode q(i).\np(X) :- q(X).\nq(a).");
        let (pa, map) = a_transform(&p).unwrap();
        assert_eq!(pa.clauses, p.clauses);
        assert_eq!(pa.tabling, p.tabling);
        assert!(map.renames.is_empty());
    }

    #[test]
    fn reserved_names_are_rejected() {
        let p = parse(":- mode q__a(i).\nq__a(a).");
        assert!(matches!(a_transform(&p), Err(TransformError::ReservedName(_))));
    }

    const MODULAR: &str = "\
:- table path/4.
:- mode reachable(i,o).
:- mode inregion(i,o).
:- mode connections(i,o).
:- mode path(i,i,o,o).
:- mode edge(i,i,o).
reachable(X,Y) :- inregion(X,R), connections(R,Ed), path(X,Ed,Y,L).
path(X,Ed,Y,[Y]) :- edge(X,Ed,Y).
path(X,Ed,Z,[Y|L]) :- edge(X,Ed,Y), path(Y,Ed,Z,L).
edge(X,[e(X,Y)|L],Y).
edge(X,[e(X1,X2)|L],Y) :- edge(X,L,Y).
inregion(rome,lazio).
inregion(milan,lombardy).
connections(lazio,[e(rome,rome)]).
";

    #[test]
    fn decomposition_orders_components_bottom_up() {
        let p = parse(MODULAR);
        let comps = modular_decompose(&p);
        let defines: Vec<Vec<String>> = comps
            .iter()
            .map(|c| c.defines.iter().map(|k| k.to_string()).collect())
            .collect();
        assert_eq!(
            defines,
            vec![
                vec!["connections/2".to_string(), "inregion/2".to_string()],
                vec!["edge/3".to_string()],
                vec!["path/4".to_string()],
                vec!["reachable/2".to_string()],
            ]
        );
        assert_eq!(
            comps.iter().map(|c| c.level).collect::<Vec<_>>(),
            vec![0, 0, 1, 2]
        );
        // every component extends the union of everything before it
        for i in 0..comps.len() {
            let mut lower = Program::default();
            for c in comps.iter().take(i) {
                lower = union_programs(&lower, &c.program);
            }
            assert!(check_extends(&comps[i].program, &lower));
        }
        // tabling and clause counts land in the right slices
        assert!(comps[2].program.tabling.contains(&PredKey::new("path", 4)));
        assert_eq!(comps[0].program.clauses.len(), 3);
        assert_eq!(comps[1].program.clauses.len(), 2);
    }

    #[test]
    fn single_scc_is_one_component() {
        let p = parse("p(f(X)) :- p(X).");
        let comps = modular_decompose(&p);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].level, 0);
    }

    #[test]
    fn transform_distributes_over_union() {
        let upper = parse(
            ":- table path/4.\n:- mode path(i,i,o,o).\n:- mode edge(i,i,o).\n\
             path(X,Ed,Y,[Y]) :- edge(X,Ed,Y).\n\
             path(X,Ed,Z,[Y|L]) :- edge(X,Ed,Y), path(Y,Ed,Z,L).",
        );
        let lower = parse(
            ":- mode edge(i,i,o).\nedge(X,[e(X,Y)|L],Y).\n\
             edge(X,[e(X1,X2)|L],Y) :- edge(X,L,Y).",
        );
        let (ua, _) = a_transform(&union_programs(&upper, &lower)).unwrap();
        let (pa, _) = a_transform(&upper).unwrap();
        let (ra, _) = a_transform(&lower).unwrap();
        let both = union_programs(&pa, &ra);
        // same clauses up to order (the guard facts append at the end of
        // whichever program introduced them)
        let set = |p: &Program| {
            p.clauses.iter().map(|c| format!("{c:?}")).collect::<BTreeSet<String>>()
        };
        assert_eq!(set(&ua), set(&both));
        assert_eq!(ua.tabling, both.tabling);
    }
}
