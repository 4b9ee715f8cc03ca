//! Constraint generation: symbolic norms, level mappings, size expressions,
//! the validity condition, and the rigid quasi-acceptability conditions.

use std::collections::BTreeSet;
use std::fmt;

use crate::analysis::{
    build_dep_graph, check_simply_moded, check_well_moded, classify_pair,
    PairClass,
};
use crate::syntax::{
    display_atom, is_builtin, Atom, FuncKey, PredKey, Program, Term, EQ,
    INTEGER,
};

use super::expr::{SPoly, SymExpr, SymbolId};
use super::flow;

/// One hypothesis of a constraint, as produced by [`size_expr`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Premise {
    Ge(SymExpr, SymExpr),
    Eq(SymExpr, SymExpr),
    /// `integer/1` carries no size information.
    True,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Conclusion {
    Ge(SymExpr, SymExpr),
    Gt(SymExpr, SymExpr),
    ZeroSym(SymbolId),
    NonZeroSym(SymbolId),
}

/// A constraint over symbols and universally quantified clause variables.
#[derive(Debug, Clone)]
pub struct SymConstraint {
    pub premises: Vec<Premise>,
    pub conclusion: Conclusion,
    /// Human-readable provenance: which clause/atom/condition produced it.
    pub origin: String,
}

impl SymConstraint {
    fn side(conclusion: Conclusion, origin: String) -> Self {
        SymConstraint { premises: Vec::new(), conclusion, origin }
    }
}

impl fmt::Display for SymConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |v: usize| format!("v{v}");
        let side = |e: &SymExpr| e.display_with(&name);
        let mut parts = Vec::new();
        for p in &self.premises {
            match p {
                Premise::Ge(l, r) => parts.push(format!("{} >= {}", side(l), side(r))),
                Premise::Eq(l, r) => parts.push(format!("{} = {}", side(l), side(r))),
                Premise::True => {}
            }
        }
        if !parts.is_empty() {
            write!(f, "{} ==> ", parts.join(" and "))?;
        }
        match &self.conclusion {
            Conclusion::Ge(l, r) => write!(f, "{} >= {}", side(l), side(r)),
            Conclusion::Gt(l, r) => write!(f, "{} > {}", side(l), side(r)),
            Conclusion::ZeroSym(s) => write!(f, "{s} = 0"),
            Conclusion::NonZeroSym(s) => write!(f, "{s} >= 1"),
        }
    }
}

/// `‖t‖^s`: variables map to themselves, constants to 0, and
/// `f(t1,…,tn)` to `f_0 + Σ f_i·‖t_i‖^s`.
pub fn symbolic_norm(t: &Term) -> SymExpr {
    match t {
        Term::Var(v) => SymExpr::var(*v),
        Term::Const(_) => SymExpr::zero(),
        Term::App(name, args) => {
            let fk = FuncKey::new(name.clone(), args.len());
            let mut e =
                SymExpr::from_poly(SPoly::sym(SymbolId::Functor(fk.clone(), 0)));
            for (i, a) in args.iter().enumerate() {
                let w = SPoly::sym(SymbolId::Functor(fk.clone(), i + 1));
                e = e.add(&symbolic_norm(a).mul_poly(&w));
            }
            e
        }
    }
}

/// `|p(t1,…,tn)|^s = Σ p_i·‖t_i‖^s`; builtins have level 0.
pub fn symbolic_level(a: &Atom) -> SymExpr {
    let k = a.key();
    if is_builtin(&k) {
        return SymExpr::zero();
    }
    let mut e = SymExpr::zero();
    for (i, t) in a.args.iter().enumerate() {
        let w = SPoly::sym(SymbolId::Pred(k.clone(), i + 1));
        e = e.add(&symbolic_norm(t).mul_poly(&w));
    }
    e
}

/// The size premise an atom contributes once it has succeeded: equality of
/// norms for `=`/2, the symbolic interargument inequality
/// `Σ_in p_i^e·‖t_i‖ ≥ Σ_out p_j^e·‖t_j‖ + p_0^e` for user predicates, and
/// a vacuous premise for `integer/1`.
pub fn size_expr(p: &Program, a: &Atom) -> Premise {
    let k = a.key();
    if k.name == EQ && k.arity == 2 {
        return Premise::Eq(symbolic_norm(&a.args[0]), symbolic_norm(&a.args[1]));
    }
    if k.name == INTEGER && k.arity == 1 {
        return Premise::True;
    }
    let mut lhs = SymExpr::zero();
    for i in p.inputs_of(&k) {
        let w = SPoly::sym(SymbolId::ExtPred(k.clone(), i));
        lhs = lhs.add(&symbolic_norm(&a.args[i - 1]).mul_poly(&w));
    }
    let mut rhs =
        SymExpr::from_poly(SPoly::sym(SymbolId::ExtPred(k.clone(), 0)));
    for j in p.outputs_of(&k) {
        let w = SPoly::sym(SymbolId::ExtPred(k.clone(), j));
        rhs = rhs.add(&symbolic_norm(&a.args[j - 1]).mul_poly(&w));
    }
    Premise::Ge(lhs, rhs)
}

/// One implication per clause: the body's size premises entail the head's
/// size inequality. Satisfying mappings induce valid interargument
/// relations (the relations hold for every computed answer).
pub fn gen_validity(p: &Program) -> Vec<SymConstraint> {
    p.clauses
        .iter()
        .enumerate()
        .filter_map(|(ci, c)| validity_constraint(p, ci, c))
        .collect()
}

fn validity_constraint(
    p: &Program,
    ci: usize,
    c: &crate::syntax::Clause,
) -> Option<SymConstraint> {
    let premises: Vec<Premise> = c
        .body
        .iter()
        .map(|b| size_expr(p, b))
        .filter(|pr| !matches!(pr, Premise::True))
        .collect();
    let Premise::Ge(lhs, rhs) = size_expr(p, &c.head) else {
        return None; // clause heads are never builtins
    };
    Some(SymConstraint {
        premises,
        conclusion: Conclusion::Ge(lhs, rhs),
        origin: format!("clause {}: validity", ci + 1),
    })
}

/// Generation failed before constraints could be produced; the program is
/// outside the method's preconditions.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{0}")]
pub struct Inapplicable(pub String);

/// Which decrease obligations to emit and which predicates carry ≠0
/// conditions. Quasi-acceptability measures every reachable tabled
/// predicate and every body atom; the LG variant (on the transformed
/// program) measures the original tabled predicates plus their answer
/// guards, and only requires decreases towards head-SCC atoms and guards.
pub(crate) struct GenOpts {
    pub lg: Option<LgSets>,
}

pub(crate) struct LgSets {
    /// The answer-guard predicates of the transformed program.
    pub guards: BTreeSet<PredKey>,
    /// TR ∪ TR^a: predicates whose calls must be finitely partitioned.
    pub measured: BTreeSet<PredKey>,
}

/// The rigid quasi-acceptability conditions for the predicates reachable
/// from the query predicates:
///
/// 1. output positions of reachable predicates carry weight 0 (levels are
///    then rigid on well-moded calls);
/// 2. finitely-partitioning conditions (≠0) on measured inputs and the
///    functors feeding them, refined by the input-shape flow (see `flow`);
/// 3. validity of the size relations: per clause, the body's size
///    premises entail the head's size inequality;
/// 4. per clause and body atom, the level decrease under the accumulated
///    size premises — strict when head and atom are mutually recursive,
///    non-tabled, and their cycles do not all pass a tabled predicate.
pub fn gen_rigid_quasi(
    p: &Program,
    reach: &BTreeSet<PredKey>,
) -> Result<Vec<SymConstraint>, Inapplicable> {
    gen_rigid(p, reach, &GenOpts { lg: None })
}

pub(crate) fn gen_rigid(
    p: &Program,
    reach: &BTreeSet<PredKey>,
    opts: &GenOpts,
) -> Result<Vec<SymConstraint>, Inapplicable> {
    let wm = check_well_moded(p);
    if !wm.ok {
        return Err(Inapplicable("program or queries are not well-moded".into()));
    }
    let sm = check_simply_moded(p);
    if !sm.ok {
        return Err(Inapplicable(
            "program or queries are not simply moded".into(),
        ));
    }

    let g = build_dep_graph(p);
    let tab = p.effective_tabling();
    let fl = flow::analyze(p, &p.queries);
    let mut out = Vec::new();

    // (1) rigidity: no weight on output positions
    for k in reach {
        for j in p.outputs_of(k) {
            out.push(SymConstraint::side(
                Conclusion::ZeroSym(SymbolId::Pred(k.clone(), j)),
                format!("condition 1: output position {k} arg {j}"),
            ));
        }
    }

    // (2) finite partitioning on measured calls
    let measured: Vec<PredKey> = match &opts.lg {
        None => reach.iter().filter(|k| tab.contains(*k)).cloned().collect(),
        Some(lg) => {
            reach.iter().filter(|k| lg.measured.contains(*k)).cloned().collect()
        }
    };
    let mut open_starts: Vec<(PredKey, usize)> = Vec::new();
    for k in &measured {
        let inputs = p.inputs_of(k);
        let open: Vec<usize> =
            inputs.iter().copied().filter(|i| fl.input_open(k, *i)).collect();
        let targets = if open.is_empty() { inputs } else { open.clone() };
        for i in targets {
            out.push(SymConstraint::side(
                Conclusion::NonZeroSym(SymbolId::Pred(k.clone(), i)),
                format!("condition 2: measured input position {k} arg {i}"),
            ));
        }
        open_starts.extend(open.into_iter().map(|i| (k.clone(), i)));
    }
    for (sym, why) in fl.functor_conditions(p, &open_starts) {
        out.push(SymConstraint::side(Conclusion::NonZeroSym(sym), why));
    }

    // (3) validity of each reachable clause's size relation
    for (ci, c) in p.clauses.iter().enumerate() {
        if reach.contains(&c.head.key()) {
            out.extend(validity_constraint(p, ci, c));
        }
    }

    // (4) decreases
    for (ci, c) in p.clauses.iter().enumerate() {
        let hk = c.head.key();
        if !reach.contains(&hk) {
            continue;
        }
        let mut premises: Vec<Premise> = Vec::new();
        for b in &c.body {
            let bk = b.key();
            let wanted = !is_builtin(&bk)
                && match &opts.lg {
                    None => true,
                    Some(lg) => g.sim(&hk, &bk) || lg.guards.contains(&bk),
                };
            if wanted {
                let strict = matches!(
                    classify_pair(&g, &tab, &hk, &bk).map_err(|e| {
                        Inapplicable(format!("cycle analysis failed: {e}"))
                    })?,
                    PairClass::C1 | PairClass::C3
                );
                let (lhs, rhs) =
                    (symbolic_level(&c.head), symbolic_level(b));
                let name = {
                    let vn = c.var_names.clone();
                    move |v: usize| {
                        vn.get(v).cloned().unwrap_or_else(|| format!("V{v}"))
                    }
                };
                out.push(SymConstraint {
                    premises: premises.clone(),
                    conclusion: if strict {
                        Conclusion::Gt(lhs, rhs)
                    } else {
                        Conclusion::Ge(lhs, rhs)
                    },
                    origin: format!(
                        "clause {}: decrease to {}",
                        ci + 1,
                        display_atom(b, &name)
                    ),
                });
            }
            let pr = size_expr(p, b);
            if !matches!(pr, Premise::True) {
                premises.push(pr);
            }
        }
    }

    Ok(out)
}

/// Predicates reachable in the dependency graph from the goal predicates
/// (goals included); with no goals, every non-builtin program predicate.
pub fn reachable_preds(p: &Program, goals: &[crate::syntax::Query]) -> BTreeSet<PredKey> {
    let non_builtin: BTreeSet<PredKey> =
        p.preds.iter().filter(|k| !is_builtin(k)).cloned().collect();
    if goals.is_empty() {
        return non_builtin;
    }
    let g = build_dep_graph(p);
    let mut out = BTreeSet::new();
    let mut stack: Vec<PredKey> = goals
        .iter()
        .map(|q| q.atom.key())
        .filter(|k| !is_builtin(k))
        .collect();
    while let Some(k) = stack.pop() {
        if !non_builtin.contains(&k) || !out.insert(k.clone()) {
            continue;
        }
        for (i, j) in &g.arcs {
            if g.nodes[*i] == k {
                stack.push(g.nodes[*j].clone());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_program, Mode, ParseOptions};

    fn parse(src: &str) -> Program {
        parse_program(src, &ParseOptions { default_mode: Some(Mode::In) })
            .unwrap()
    }

    fn sym_pred(name: &str, arity: usize, i: usize) -> SymbolId {
        SymbolId::Pred(PredKey::new(name, arity), i)
    }

    fn cst(name: &str) -> Term {
        Term::Const(crate::syntax::Cst::Name(name.into()))
    }

    #[test]
    fn norm_of_constant_and_variable() {
        assert!(symbolic_norm(&cst("a")).is_zero());
        assert_eq!(symbolic_norm(&Term::Var(3)), SymExpr::var(3));
    }

    #[test]
    fn norm_of_list_cell() {
        // [a|T] = •_0 + •_1·0 + •_2·T
        let t = Term::cons(cst("a"), Term::Var(0));
        let e = symbolic_norm(&t);
        let cons = FuncKey::new(".", 2);
        assert_eq!(
            e.constant,
            SPoly::sym(SymbolId::Functor(cons.clone(), 0))
        );
        assert_eq!(
            e.coeffs.get(&0),
            Some(&SPoly::sym(SymbolId::Functor(cons, 2)))
        );
        assert_eq!(e.coeffs.len(), 1);
    }

    #[test]
    fn level_of_atom() {
        let a = Atom {
            pred: "path".into(),
            args: vec![Term::Var(0), Term::Var(1), Term::Var(2)],
        };
        let e = symbolic_level(&a);
        for (i, v) in [(1usize, 0usize), (2, 1), (3, 2)] {
            assert_eq!(e.coeffs.get(&v), Some(&SPoly::sym(sym_pred("path", 3, i))));
        }
        assert!(e.constant.is_zero());
        // ground atoms evaluate to a variable-free form
        let g = Atom {
            pred: "edge".into(),
            args: vec![cst("a"), cst("b")],
        };
        assert!(symbolic_level(&g).coeffs.is_empty());
    }

    #[test]
    fn level_of_builtin_is_zero() {
        let a = Atom { pred: EQ.into(), args: vec![Term::Var(0), Term::Var(1)] };
        assert!(symbolic_level(&a).is_zero());
    }

    #[test]
    fn size_expr_shapes() {
        let p = parse(":- mode edge(i,o).\nedge(a,b).");
        // edge(X,Y) → edge_1^e·X ≥ edge_2^e·Y + edge_0^e
        let a = Atom { pred: "edge".into(), args: vec![Term::Var(0), Term::Var(1)] };
        let Premise::Ge(l, r) = size_expr(&p, &a) else { panic!() };
        let ek = PredKey::new("edge", 2);
        assert_eq!(l.coeffs[&0], SPoly::sym(SymbolId::ExtPred(ek.clone(), 1)));
        assert_eq!(r.coeffs[&1], SPoly::sym(SymbolId::ExtPred(ek.clone(), 2)));
        assert_eq!(r.constant, SPoly::sym(SymbolId::ExtPred(ek, 0)));

        let eq = Atom { pred: EQ.into(), args: vec![Term::Var(0), Term::Var(1)] };
        assert!(matches!(size_expr(&p, &eq), Premise::Eq(_, _)));
        let it = Atom { pred: INTEGER.into(), args: vec![Term::Var(0)] };
        assert!(matches!(size_expr(&p, &it), Premise::True));
    }

    #[test]
    fn fully_tabled_program_has_no_strict_decreases() {
        let p = parse(
            ":- table p/1.\n:- table q/1.\n\
             :- mode p(i).\n:- mode q(i).\n\
             p(X) :- q(X).\nq(X) :- p(X).\n\
             :- query p(a).",
        );
        let reach = reachable_preds(&p, &p.queries);
        let cs = gen_rigid_quasi(&p, &reach).unwrap();
        assert!(cs.iter().all(|c| !matches!(c.conclusion, Conclusion::Gt(_, _))));
    }

    #[test]
    fn mode_failure_is_inapplicable() {
        // head output fed by nothing: not well-moded
        let p = parse(":- mode p(o).\np(X) :- q.\nq.\n:- query p(X).");
        let reach = reachable_preds(&p, &p.queries);
        assert!(gen_rigid_quasi(&p, &reach).is_err());
    }

    #[test]
    fn reach_defaults_to_all_preds() {
        let p = parse("p :- q.\nq.\nr.");
        let reach = reachable_preds(&p, &[]);
        assert_eq!(reach.len(), 3);
        let q = parse("p :- q.\nq.\nr.\n:- query p.");
        let reach = reachable_preds(&q, &q.queries);
        assert_eq!(
            reach,
            BTreeSet::from([PredKey::new("p", 0), PredKey::new("q", 0)])
        );
    }
}
