//! Input-shape flow analysis backing the finitely-partitioning (≠0)
//! conditions.
//!
//! The ≠0 side conditions only need to cover symbols that matter for the
//! *calls* the program can actually make, so a blanket "every functor
//! coefficient of every inventory functor" rule is far too strong (it
//! would reject mappings that deliberately ignore argument positions whose
//! values range over a finite set). This module over-approximates, per
//! predicate argument position and per functor argument position, the set
//! of *root symbols* that can occur there at run time, by propagating
//! shapes along the moded dataflow of the clauses:
//!
//! - query input terms flow into the predicate's input slots (template
//!   variables flow as "anything");
//! - head input slots flow into the head's input terms, binding clause
//!   variables;
//! - body input terms flow into the callee's input slots; the callee's
//!   output slots flow back into the body output terms;
//! - `t1 = t2` flows both ways; `integer/1` binds nothing;
//! - head output terms flow into the head's output slots.
//!
//! A shape records whether constants can occur, which functors can occur,
//! and whether the position is unanalyzable ("anything"). Walking functor
//! argument slots gives a graph whose cycles are exactly the unbounded
//! nestings; a slot is **bounded** when its term language is finite — it
//! can reach neither an "anything" slot nor a cycle — and **open**
//! otherwise.
//!
//! The side conditions derived from this (see `gen`):
//! - a measured predicate with at least one open input position needs
//!   positive weights exactly on its open inputs — the bounded inputs
//!   range over finitely many terms and cannot break finite partitioning;
//! - when all inputs are bounded, every input position gets a positive
//!   weight (the conservative baseline; also the only sound choice when
//!   nothing distinguishes the positions);
//! - every functor reachable from an open measured input through open
//!   argument positions needs a positive constant coefficient, and a
//!   positive argument coefficient on each of its open positions. Bounded
//!   argument positions are exempt and are not descended into.
//!
//! Soundness: bounded slots carry finitely many ground terms, and each
//! counted constructor adds at least `f_0 ≥ 1` to the norm, so any fixed
//! norm value is achieved by only finitely many terms of the open-slot
//! language; the induced levels are then finitely partitioning on the
//! over-approximated call set.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::syntax::{
    is_builtin, FuncKey, PredKey, Program, Query, Term, VarId, EQ,
};

use super::expr::SymbolId;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct Shape {
    any: bool,
    consts: bool,
    funcs: BTreeSet<FuncKey>,
}

impl Shape {
    fn anything() -> Shape {
        Shape { any: true, consts: true, funcs: BTreeSet::new() }
    }

    fn consts() -> Shape {
        Shape { any: false, consts: true, funcs: BTreeSet::new() }
    }

    /// Joins `other` in; true when self grew.
    fn absorb(&mut self, other: &Shape) -> bool {
        let before = (self.any, self.consts, self.funcs.len());
        self.any |= other.any;
        self.consts |= other.consts;
        self.funcs.extend(other.funcs.iter().cloned());
        before != (self.any, self.consts, self.funcs.len())
    }
}

type Env = BTreeMap<VarId, Shape>;

pub(crate) struct FlowInfo {
    pred: BTreeMap<PredKey, Vec<Shape>>,
    func: BTreeMap<FuncKey, Vec<Shape>>,
    /// Per functor argument position: is the term language there infinite?
    func_open: BTreeMap<FuncKey, Vec<bool>>,
    dirty: bool,
}

pub(crate) fn analyze(p: &Program, goals: &[Query]) -> FlowInfo {
    let mut fl = FlowInfo {
        pred: p
            .preds
            .iter()
            .filter(|k| !is_builtin(k))
            .map(|k| (k.clone(), vec![Shape::default(); k.arity]))
            .collect(),
        func: p
            .functors
            .iter()
            .map(|k| (k.clone(), vec![Shape::default(); k.arity]))
            .collect(),
        func_open: BTreeMap::new(),
        dirty: false,
    };
    if goals.is_empty() {
        // nothing pins the call set down: any input term is possible
        let keys: Vec<PredKey> = fl.pred.keys().cloned().collect();
        for k in keys {
            for i in p.inputs_of(&k) {
                fl.join_pred(&k, i - 1, &Shape::anything());
            }
        }
    }
    loop {
        fl.dirty = false;
        for q in goals {
            fl.seed_query(p, q);
        }
        for c in &p.clauses {
            fl.clause_pass(p, c);
        }
        if !fl.dirty {
            break;
        }
    }
    fl.compute_openness();
    fl
}

impl FlowInfo {
    fn join_pred(&mut self, k: &PredKey, pos0: usize, s: &Shape) {
        if let Some(slots) = self.pred.get_mut(k) {
            if slots[pos0].absorb(s) {
                self.dirty = true;
            }
        }
    }

    fn join_func(&mut self, k: &FuncKey, pos0: usize, s: &Shape) {
        if let Some(slots) = self.func.get_mut(k) {
            if slots[pos0].absorb(s) {
                self.dirty = true;
            }
        }
    }

    fn pred_shape(&self, k: &PredKey, pos0: usize) -> Shape {
        self.pred.get(k).map(|s| s[pos0].clone()).unwrap_or_default()
    }

    fn func_shape(&self, k: &FuncKey, pos0: usize) -> Shape {
        self.func.get(k).map(|s| s[pos0].clone()).unwrap_or_default()
    }

    /// The shape a term evaluates to under `env`, recording the shapes of
    /// compound subterms in the functor slots along the way.
    fn produce(&mut self, t: &Term, env: &Env) -> Shape {
        match t {
            Term::Var(v) => env.get(v).cloned().unwrap_or_default(),
            Term::Const(_) => Shape::consts(),
            Term::App(name, args) => {
                let fk = FuncKey::new(name.clone(), args.len());
                for (j, a) in args.iter().enumerate() {
                    let s = self.produce(a, env);
                    self.join_func(&fk, j, &s);
                }
                Shape {
                    any: false,
                    consts: false,
                    funcs: BTreeSet::from([fk]),
                }
            }
        }
    }

    /// Flows an incoming shape into a pattern term, growing `env` at the
    /// variables. Returns true when the environment grew.
    fn match_into(&mut self, s: &Shape, t: &Term, env: &mut Env) -> bool {
        match t {
            Term::Var(v) => env.entry(*v).or_default().absorb(s),
            Term::Const(_) => false,
            Term::App(name, args) => {
                let fk = FuncKey::new(name.clone(), args.len());
                let subs: Vec<Shape> = if s.any {
                    vec![Shape::anything(); args.len()]
                } else if s.funcs.contains(&fk) {
                    (0..args.len()).map(|j| self.func_shape(&fk, j)).collect()
                } else {
                    // the shape cannot match this pattern: nothing flows
                    return false;
                };
                let mut ch = false;
                for (j, a) in args.iter().enumerate() {
                    ch |= self.match_into(&subs[j], a, env);
                }
                ch
            }
        }
    }

    fn seed_query(&mut self, p: &Program, q: &Query) {
        let k = q.atom.key();
        if is_builtin(&k) {
            return;
        }
        // template variables stand for arbitrary ground parameters
        let env: Env =
            q.atom.vars().into_iter().map(|v| (v, Shape::anything())).collect();
        for i in p.inputs_of(&k) {
            let s = self.produce(&q.atom.args[i - 1], &env);
            self.join_pred(&k, i - 1, &s);
        }
    }

    fn clause_pass(&mut self, p: &Program, c: &crate::syntax::Clause) {
        let hk = c.head.key();
        let mut env: Env = BTreeMap::new();
        loop {
            let was_dirty = self.dirty;
            self.dirty = false;
            let mut env_grew = false;

            for i in p.inputs_of(&hk) {
                let s = self.pred_shape(&hk, i - 1);
                env_grew |= self.match_into(&s, &c.head.args[i - 1], &mut env);
            }
            for b in &c.body {
                let bk = b.key();
                if bk.name == EQ && bk.arity == 2 {
                    let s1 = self.produce(&b.args[0], &env);
                    let s2 = self.produce(&b.args[1], &env);
                    env_grew |= self.match_into(&s1, &b.args[1], &mut env);
                    env_grew |= self.match_into(&s2, &b.args[0], &mut env);
                } else if is_builtin(&bk) {
                    // integer/1 tests its (already ground) input
                } else {
                    for i in p.inputs_of(&bk) {
                        let s = self.produce(&b.args[i - 1], &env);
                        self.join_pred(&bk, i - 1, &s);
                    }
                    for j in p.outputs_of(&bk) {
                        let s = self.pred_shape(&bk, j - 1);
                        env_grew |= self.match_into(&s, &b.args[j - 1], &mut env);
                    }
                }
            }
            for j in p.outputs_of(&hk) {
                let s = self.produce(&c.head.args[j - 1], &env);
                self.join_pred(&hk, j - 1, &s);
            }

            let slots_grew = self.dirty;
            self.dirty |= was_dirty;
            if !env_grew && !slots_grew {
                break;
            }
        }
    }

    /// Marks each functor argument position whose term language is
    /// infinite: it can reach, through the functor-argument graph, either
    /// an "anything" shape or a position lying on a nesting cycle.
    fn compute_openness(&mut self) {
        let nodes: Vec<(FuncKey, usize)> = self
            .func
            .iter()
            .flat_map(|(k, slots)| {
                (0..slots.len()).map(move |j| (k.clone(), j))
            })
            .collect();
        let index: BTreeMap<(FuncKey, usize), usize> =
            nodes.iter().cloned().zip(0..).collect();
        let succ: Vec<Vec<usize>> = nodes
            .iter()
            .map(|(k, j)| {
                let mut out = Vec::new();
                for f in &self.func[k][*j].funcs {
                    for j2 in 0..f.arity {
                        if let Some(n) = index.get(&(f.clone(), j2)) {
                            out.push(*n);
                        }
                    }
                }
                out
            })
            .collect();

        let reach_from = |start: usize| -> BTreeSet<usize> {
            let mut seen = BTreeSet::new();
            let mut queue = VecDeque::from([start]);
            while let Some(n) = queue.pop_front() {
                for m in &succ[n] {
                    if seen.insert(*m) {
                        queue.push_back(*m);
                    }
                }
            }
            seen
        };

        let mut infinite = vec![false; nodes.len()];
        let targets: Vec<usize> = (0..nodes.len())
            .filter(|n| {
                let (k, j) = &nodes[*n];
                self.func[k][*j].any || reach_from(*n).contains(n)
            })
            .collect();
        for n in 0..nodes.len() {
            if targets.contains(&n)
                || reach_from(n).iter().any(|m| targets.contains(m))
            {
                infinite[n] = true;
            }
        }

        let mut open: BTreeMap<FuncKey, Vec<bool>> = BTreeMap::new();
        for ((k, j), n) in &index {
            open.entry(k.clone()).or_insert_with(|| vec![false; k.arity])[*j] =
                infinite[*n];
        }
        self.func_open = open;
    }

    fn shape_open(&self, s: &Shape) -> bool {
        s.any
            || s.funcs.iter().any(|f| {
                (0..f.arity).any(|j| {
                    self.func_open.get(f).map(|v| v[j]).unwrap_or(false)
                })
            })
    }

    /// Is the term language of this (1-based) argument position infinite?
    pub(crate) fn input_open(&self, k: &PredKey, pos1: usize) -> bool {
        match self.pred.get(k) {
            Some(slots) => self.shape_open(&slots[pos1 - 1]),
            None => false,
        }
    }

    /// The functor ≠0 conditions induced by the given open input slots:
    /// walk from their shapes through open argument positions only; each
    /// functor visited needs `f_0 ≥ 1`, plus `f_j ≥ 1` for its open
    /// positions. An "anything" shape anywhere falls back to all inventory
    /// functors with every position counted.
    pub(crate) fn functor_conditions(
        &self,
        p: &Program,
        starts: &[(PredKey, usize)],
    ) -> Vec<(SymbolId, String)> {
        let mut queue: VecDeque<FuncKey> = VecDeque::new();
        let mut fallback = false;
        for (k, pos1) in starts {
            let s = self.pred_shape(k, pos1 - 1);
            if s.any {
                fallback = true;
            }
            queue.extend(s.funcs.iter().cloned());
        }

        let mut visited: BTreeSet<FuncKey> = BTreeSet::new();
        while let Some(f) = queue.pop_front() {
            if fallback || !visited.insert(f.clone()) {
                continue;
            }
            for j in 0..f.arity {
                if !self.func_open.get(&f).map(|v| v[j]).unwrap_or(false) {
                    continue;
                }
                let s = self.func_shape(&f, j);
                if s.any {
                    fallback = true;
                }
                queue.extend(s.funcs.iter().cloned());
            }
        }

        let mut out = Vec::new();
        if fallback {
            for f in &p.functors {
                for i in 0..=f.arity {
                    out.push((
                        SymbolId::Functor(f.clone(), i),
                        format!("condition 2: functor {f} (unanalyzable input)"),
                    ));
                }
            }
            return out;
        }
        for f in visited {
            let why = format!("condition 2: functor {f} occurs in measured inputs");
            out.push((SymbolId::Functor(f.clone(), 0), why.clone()));
            for j in 0..f.arity {
                if self.func_open.get(&f).map(|v| v[j]).unwrap_or(false) {
                    out.push((SymbolId::Functor(f.clone(), j + 1), why.clone()));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_program, Mode, ParseOptions};

    fn parse(src: &str) -> Program {
        parse_program(src, &ParseOptions { default_mode: Some(Mode::In) })
            .unwrap()
    }

    #[test]
    fn constants_stay_bounded() {
        // calls only ever carry constants in the input position
        let p = parse(
            ":- table path/3.\n\
             :- mode path(i,o,o).\n\
             :- mode edge(i,o).\n\
             path(X,Y,[Y]) :- edge(X,Y).\n\
             path(X,Z,[Y|L]) :- edge(X,Y), path(Y,Z,L).\n\
             edge(a,b).\nedge(b,c).\n\
             :- query path(a,Y,L).",
        );
        let fl = analyze(&p, &p.queries);
        assert!(!fl.input_open(&PredKey::new("path", 3), 1));
        let starts = vec![];
        assert!(fl.functor_conditions(&p, &starts).is_empty());
    }

    #[test]
    fn cyclic_list_input_is_open() {
        let p = parse(
            ":- table path/4.\n\
             :- mode path(i,i,o,o).\n\
             :- mode edge(i,i,o).\n\
             path(X,Ed,Y,[Y]) :- edge(X,Ed,Y).\n\
             path(X,Ed,Z,[Y|L]) :- edge(X,Ed,Y), path(Y,Ed,Z,L).\n\
             edge(X,[e(X,Y)|L],Y).\n\
             edge(X,[e(X1,X2)|L],Y) :- edge(X,L,Y).\n\
             :- query path(a,[e(a,b),e(b,a)],Y,L).",
        );
        let fl = analyze(&p, &p.queries);
        let path = PredKey::new("path", 4);
        assert!(!fl.input_open(&path, 1), "node argument holds constants");
        assert!(fl.input_open(&path, 2), "graph list nests unboundedly");

        let conds = fl.functor_conditions(&p, &[(path, 2)]);
        let syms: BTreeSet<String> =
            conds.iter().map(|(s, _)| s.to_string()).collect();
        // list constructor: constant part and tail position; the element
        // position holds e/2 cells over constants, so e/2 stays exempt
        assert_eq!(
            syms,
            BTreeSet::from(["._0".to_string(), "._2".to_string()])
        );
    }

    #[test]
    fn template_variable_inputs_are_anything() {
        let p = parse(
            ":- table p/1.\n\
             :- mode p(i).\n\
             p(a).\n\
             p(f(X)) :- p(X).\n\
             :- query p(X).",
        );
        let fl = analyze(&p, &p.queries);
        let pk = PredKey::new("p", 1);
        assert!(fl.input_open(&pk, 1));
        let conds = fl.functor_conditions(&p, &[(pk, 1)]);
        let syms: BTreeSet<String> =
            conds.iter().map(|(s, _)| s.to_string()).collect();
        assert_eq!(syms, BTreeSet::from(["f_0".to_string(), "f_1".to_string()]));
    }

    #[test]
    fn equality_flows_both_ways() {
        let p = parse(
            ":- table a/2.\n\
             :- mode s(i,o).\n\
             :- mode a(i,o).\n\
             s(Si,So) :- a(Si,S), S = [b|So].\n\
             a(Si,So) :- a(Si,S), a(S,So).\n\
             a(Si,So) :- Si = [a|So].\n\
             :- query s([a,a,b],So).",
        );
        let fl = analyze(&p, &p.queries);
        let a = PredKey::new("a", 2);
        // suffixes of the concrete input string flow through = into a/2
        assert!(fl.input_open(&a, 1));
        let conds = fl.functor_conditions(&p, &[(a, 1)]);
        let syms: BTreeSet<String> =
            conds.iter().map(|(s, _)| s.to_string()).collect();
        assert_eq!(
            syms,
            BTreeSet::from(["._0".to_string(), "._2".to_string()])
        );
    }
}
