//! Substitutions, unification, renaming, and variant canonicalization.
//!
//! Substitutions are kept idempotent: no binding value mentions a bound
//! variable, so `apply` is a single pass. Unification works on a triangular
//! map internally and resolves it on success; when the occurs check is
//! disabled a cyclic binding is caught during that resolution and reported
//! as failure (finite terms only, so the branch fails either way — the flag
//! moves the detection point, not the outcome).

use std::collections::{BTreeMap, BTreeSet};

use crate::syntax::{Atom, Term, VarId};

/// An idempotent substitution.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Subst {
    map: BTreeMap<VarId, Term>,
}

impl Subst {
    pub fn new() -> Self {
        Subst::default()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn get(&self, v: VarId) -> Option<&Term> {
        self.map.get(&v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarId, &Term)> {
        self.map.iter()
    }

    pub fn apply(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => self.map.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::Const(_) => t.clone(),
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| self.apply(a)).collect())
            }
        }
    }

    pub fn apply_atom(&self, a: &Atom) -> Atom {
        Atom { pred: a.pred.clone(), args: a.args.iter().map(|t| self.apply(t)).collect() }
    }
}

/// Most general unifier of two atoms. Fails on predicate or arity clash.
pub fn mgu_atoms(a: &Atom, b: &Atom, occurs_check: bool) -> Option<Subst> {
    if a.pred != b.pred || a.args.len() != b.args.len() {
        return None;
    }
    let pairs: Vec<(Term, Term)> =
        a.args.iter().cloned().zip(b.args.iter().cloned()).collect();
    unify_pairs(pairs, occurs_check)
}

/// Most general unifier of two terms.
pub fn mgu(a: &Term, b: &Term, occurs_check: bool) -> Option<Subst> {
    unify_pairs(vec![(a.clone(), b.clone())], occurs_check)
}

fn unify_pairs(pairs: Vec<(Term, Term)>, occurs_check: bool) -> Option<Subst> {
    let mut tri: BTreeMap<VarId, Term> = BTreeMap::new();
    let mut stack = pairs;
    while let Some((x, y)) = stack.pop() {
        let x = walk(&x, &tri).clone();
        let y = walk(&y, &tri).clone();
        match (x, y) {
            (Term::Var(a), Term::Var(b)) if a == b => {}
            (Term::Var(a), t) | (t, Term::Var(a)) => {
                if occurs_check && occurs(a, &t, &tri) {
                    return None;
                }
                tri.insert(a, t);
            }
            (Term::Const(c1), Term::Const(c2)) => {
                if c1 != c2 {
                    return None;
                }
            }
            (Term::App(f, xs), Term::App(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return None;
                }
                stack.extend(xs.into_iter().zip(ys));
            }
            _ => return None,
        }
    }
    resolve_triangular(&tri)
}

/// Follow variable bindings shallowly until an unbound variable or a
/// non-variable term. Chains are acyclic by construction (we never bind a
/// variable to itself and always bind the walked representative).
fn walk<'a>(mut t: &'a Term, tri: &'a BTreeMap<VarId, Term>) -> &'a Term {
    while let Term::Var(v) = t {
        match tri.get(v) {
            Some(next) => t = next,
            None => break,
        }
    }
    t
}

fn occurs(v: VarId, t: &Term, tri: &BTreeMap<VarId, Term>) -> bool {
    match walk(t, tri) {
        Term::Var(w) => *w == v,
        Term::Const(_) => false,
        Term::App(_, args) => args.iter().any(|a| occurs(v, a, tri)),
    }
}

/// Deep-resolve a triangular map into an idempotent substitution. `None`
/// means a cyclic binding was found (possible only without occurs check).
fn resolve_triangular(tri: &BTreeMap<VarId, Term>) -> Option<Subst> {
    fn go(
        t: &Term,
        tri: &BTreeMap<VarId, Term>,
        path: &mut BTreeSet<VarId>,
    ) -> Option<Term> {
        match t {
            Term::Var(v) => match tri.get(v) {
                None => Some(t.clone()),
                Some(b) => {
                    if !path.insert(*v) {
                        return None;
                    }
                    let r = go(b, tri, path);
                    path.remove(v);
                    r
                }
            },
            Term::Const(_) => Some(t.clone()),
            Term::App(f, args) => {
                let mut out = Vec::with_capacity(args.len());
                for a in args {
                    out.push(go(a, tri, path)?);
                }
                Some(Term::App(f.clone(), out))
            }
        }
    }
    let mut map = BTreeMap::new();
    for (v, t) in tri {
        let mut path = BTreeSet::from([*v]);
        map.insert(*v, go(t, tri, &mut path)?);
    }
    Some(Subst { map })
}

/// Shift every variable id in a clause's head and body by `base`, renaming
/// it apart from anything with ids below `base`.
pub fn rename_clause(head: &Atom, body: &[Atom], base: usize) -> (Atom, Vec<Atom>) {
    (shift_atom(head, base), body.iter().map(|a| shift_atom(a, base)).collect())
}

pub fn shift_atom(a: &Atom, base: usize) -> Atom {
    Atom { pred: a.pred.clone(), args: a.args.iter().map(|t| shift_term(t, base)).collect() }
}

pub fn shift_term(t: &Term, base: usize) -> Term {
    match t {
        Term::Var(v) => Term::Var(v + base),
        Term::Const(_) => t.clone(),
        Term::App(f, args) => {
            Term::App(f.clone(), args.iter().map(|x| shift_term(x, base)).collect())
        }
    }
}

/// Canonical representative of an atom's variance class: variables are
/// renumbered 0,1,2,… in first-occurrence order. Two atoms are variants iff
/// their keys are equal, so this is the table key for the forest.
pub fn variant_key(a: &Atom) -> Atom {
    let mut map: BTreeMap<VarId, VarId> = BTreeMap::new();
    Atom {
        pred: a.pred.clone(),
        args: a.args.iter().map(|t| canon_term(t, &mut map)).collect(),
    }
}

fn canon_term(t: &Term, map: &mut BTreeMap<VarId, VarId>) -> Term {
    match t {
        Term::Var(v) => {
            let n = map.len();
            Term::Var(*map.entry(*v).or_insert(n))
        }
        Term::Const(_) => t.clone(),
        Term::App(f, args) => {
            Term::App(f.clone(), args.iter().map(|x| canon_term(x, map)).collect())
        }
    }
}

pub fn is_variant(a: &Atom, b: &Atom) -> bool {
    variant_key(a) == variant_key(b)
}

/// One-sided matching: a substitution θ with `general·θ = instance`, binding
/// only variables of `general`. Repeated variables must match equal
/// subterms.
pub fn match_atom(general: &Atom, instance: &Atom) -> Option<Subst> {
    if general.pred != instance.pred || general.args.len() != instance.args.len() {
        return None;
    }
    let mut map = BTreeMap::new();
    for (g, i) in general.args.iter().zip(instance.args.iter()) {
        match_term_into(g, i, &mut map)?;
    }
    Some(Subst { map })
}

fn match_term_into(
    g: &Term,
    i: &Term,
    map: &mut BTreeMap<VarId, Term>,
) -> Option<()> {
    match (g, i) {
        (Term::Var(v), _) => match map.get(v) {
            Some(prev) if prev == i => Some(()),
            Some(_) => None,
            None => {
                map.insert(*v, i.clone());
                Some(())
            }
        },
        (Term::Const(a), Term::Const(b)) if a == b => Some(()),
        (Term::App(f, xs), Term::App(g2, ys)) if f == g2 && xs.len() == ys.len() => {
            for (x, y) in xs.iter().zip(ys.iter()) {
                match_term_into(x, y, map)?;
            }
            Some(())
        }
        _ => None,
    }
}

/// Largest variable id occurring in an atom, if any.
pub fn max_var(a: &Atom) -> Option<VarId> {
    a.vars().into_iter().max()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Cst;

    fn v(n: VarId) -> Term {
        Term::Var(n)
    }
    fn c(s: &str) -> Term {
        Term::Const(Cst::Name(s.into()))
    }
    fn app(f: &str, args: Vec<Term>) -> Term {
        Term::App(f.into(), args)
    }
    fn atom(p: &str, args: Vec<Term>) -> Atom {
        Atom { pred: p.into(), args }
    }

    #[test]
    fn mgu_binds_both_sides() {
        // p(X, f(Y)) vs p(a, f(b))
        let a = atom("p", vec![v(0), app("f", vec![v(1)])]);
        let b = atom("p", vec![c("a"), app("f", vec![c("b")])]);
        let s = mgu_atoms(&a, &b, true).unwrap();
        assert_eq!(s.get(0), Some(&c("a")));
        assert_eq!(s.get(1), Some(&c("b")));
        assert_eq!(s.apply_atom(&a), s.apply_atom(&b));
    }

    #[test]
    fn predicate_clash_fails() {
        assert!(mgu_atoms(&atom("p", vec![v(0)]), &atom("q", vec![v(0)]), true).is_none());
        assert!(mgu_atoms(&atom("p", vec![v(0)]), &atom("p", vec![]), true).is_none());
    }

    #[test]
    fn unifier_is_idempotent() {
        // p(X, g(X), Z) vs p(f(Y), g(f(a)), Y)
        let a = atom("p", vec![v(0), app("g", vec![v(0)]), v(2)]);
        let b = atom("p", vec![app("f", vec![v(1)]), app("g", vec![app("f", vec![c("a")])]), v(1)]);
        let s = mgu_atoms(&a, &b, true).unwrap();
        let once = s.apply_atom(&a);
        let twice = s.apply_atom(&once);
        assert_eq!(once, twice);
        assert_eq!(once, s.apply_atom(&b));
    }

    #[test]
    fn occurs_violation_fails_under_both_settings() {
        let x = v(0);
        let fx = app("f", vec![v(0)]);
        assert!(mgu(&x, &fx, true).is_none());
        // without the check the cycle is caught when the triangular map is
        // resolved, so the branch still fails
        assert!(mgu(&x, &fx, false).is_none());
    }

    #[test]
    fn variable_chains_resolve() {
        // p(X, Y, Z) vs p(Y, Z, a)
        let a = atom("p", vec![v(0), v(1), v(2)]);
        let b = atom("p", vec![v(1), v(2), c("a")]);
        let s = mgu_atoms(&a, &b, true).unwrap();
        assert_eq!(s.apply(&v(0)), c("a"));
        assert_eq!(s.apply(&v(1)), c("a"));
        assert_eq!(s.apply(&v(2)), c("a"));
    }

    #[test]
    fn variant_keys_identify_variants() {
        let a = atom("p", vec![v(3), v(7), v(3)]);
        let b = atom("p", vec![v(10), v(2), v(10)]);
        let differs = atom("p", vec![v(1), v(2), v(3)]);
        assert_eq!(variant_key(&a), variant_key(&b));
        assert!(is_variant(&a, &b));
        assert!(!is_variant(&a, &differs));
        let key = variant_key(&a);
        assert_eq!(key.args, vec![v(0), v(1), v(0)]);
    }

    #[test]
    fn matching_is_one_sided() {
        let g = atom("p", vec![app("f", vec![v(0)]), v(1)]);
        let i = atom("p", vec![app("f", vec![c("a")]), c("b")]);
        let s = match_atom(&g, &i).unwrap();
        assert_eq!(s.apply_atom(&g), i);
        assert!(match_atom(&i, &g).is_none());
        // repeated variables must agree
        let rep = atom("p", vec![v(0), v(0)]);
        assert!(match_atom(&rep, &atom("p", vec![c("a"), c("b")])).is_none());
        assert!(match_atom(&rep, &atom("p", vec![c("a"), c("a")])).is_some());
    }

    #[test]
    fn renaming_shifts_all_ids() {
        let h = atom("p", vec![v(0), app("f", vec![v(1)])]);
        let b = vec![atom("q", vec![v(1), v(2)])];
        let (h2, b2) = rename_clause(&h, &b, 10);
        assert_eq!(h2.args[0], v(10));
        assert_eq!(b2[0].args, vec![v(11), v(12)]);
        assert_eq!(max_var(&b2[0]), Some(12));
    }
}
