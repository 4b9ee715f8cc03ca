//! Dependency structure of a program: the refers-to graph with its SCCs,
//! recursive predicates, the C1/C2/C3 classification of mutually recursive
//! non-tabled pairs, the well-chosen-tabling check, the extends relation,
//! and the mode-discipline checks.

mod cycles;
mod modes;

pub use cycles::simple_cycles;
pub use modes::{
    check_simply_moded, check_well_moded, simply_moded_query, well_moded_query,
    ClauseModeVerdict, ModeReport, ModeViolation,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::syntax::{is_builtin, PredKey, Program};

/// Hard cap on enumerated simple cycles; predicate graphs are tiny, so
/// hitting this means the input is far outside the intended scale.
pub const CYCLE_CAP: usize = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("analysis budget exceeded: more than {cap} simple cycles")]
    BudgetExceeded { cap: usize },
}

/// The refers-to graph: an arc p→q for every clause with head predicate p
/// and a (non-builtin) body atom with predicate q. Nodes are the predicates
/// occurring in clauses; builtins are excluded throughout.
#[derive(Debug, Clone)]
pub struct DepGraph {
    pub nodes: Vec<PredKey>,
    pub arcs: BTreeSet<(usize, usize)>,
    /// SCC id per node; components are emitted callees-first, so iterating
    /// `sccs` in order visits a component only after everything it reaches.
    pub scc_of: Vec<usize>,
    pub sccs: Vec<Vec<usize>>,
    index: BTreeMap<PredKey, usize>,
}

pub fn build_dep_graph(p: &Program) -> DepGraph {
    let mut node_set: BTreeSet<PredKey> = BTreeSet::new();
    for c in &p.clauses {
        for a in c.atoms() {
            let k = a.key();
            if !is_builtin(&k) {
                node_set.insert(k);
            }
        }
    }
    let nodes: Vec<PredKey> = node_set.into_iter().collect();
    let index: BTreeMap<PredKey, usize> =
        nodes.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
    let mut arcs = BTreeSet::new();
    for c in &p.clauses {
        let h = index[&c.head.key()];
        for b in &c.body {
            if let Some(&t) = index.get(&b.key()) {
                arcs.insert((h, t));
            }
        }
    }
    let adj = adjacency_of(nodes.len(), &arcs);
    let (scc_of, sccs) = tarjan(nodes.len(), &adj);
    DepGraph { nodes, arcs, scc_of, sccs, index }
}

fn adjacency_of(n: usize, arcs: &BTreeSet<(usize, usize)>) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); n];
    for (a, b) in arcs {
        adj[*a].insert(*b);
    }
    adj
}

fn tarjan(n: usize, adj: &[BTreeSet<usize>]) -> (Vec<usize>, Vec<Vec<usize>>) {
    struct St<'a> {
        adj: &'a [BTreeSet<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        scc_of: Vec<usize>,
        sccs: Vec<Vec<usize>>,
    }
    fn strong(v: usize, st: &mut St) {
        st.index[v] = Some(st.next);
        st.low[v] = st.next;
        st.next += 1;
        st.stack.push(v);
        st.on[v] = true;
        let succs: Vec<usize> = st.adj[v].iter().copied().collect();
        for w in succs {
            if st.index[w].is_none() {
                strong(w, st);
                st.low[v] = st.low[v].min(st.low[w]);
            } else if st.on[w] {
                st.low[v] = st.low[v].min(st.index[w].unwrap());
            }
        }
        if st.low[v] == st.index[v].unwrap() {
            let id = st.sccs.len();
            let mut comp = Vec::new();
            loop {
                let w = st.stack.pop().unwrap();
                st.on[w] = false;
                st.scc_of[w] = id;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            st.sccs.push(comp);
        }
    }
    let mut st = St {
        adj,
        index: vec![None; n],
        low: vec![0; n],
        on: vec![false; n],
        stack: Vec::new(),
        next: 0,
        scc_of: vec![0; n],
        sccs: Vec::new(),
    };
    for v in 0..n {
        if st.index[v].is_none() {
            strong(v, &mut st);
        }
    }
    (st.scc_of, st.sccs)
}

impl DepGraph {
    pub fn node_index(&self, p: &PredKey) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn adjacency(&self) -> Vec<BTreeSet<usize>> {
        adjacency_of(self.nodes.len(), &self.arcs)
    }

    /// p ≃ q: same SCC, or equal.
    pub fn sim(&self, p: &PredKey, q: &PredKey) -> bool {
        if p == q {
            return true;
        }
        match (self.node_index(p), self.node_index(q)) {
            (Some(i), Some(j)) => self.scc_of[i] == self.scc_of[j],
            _ => false,
        }
    }

    /// Predicates lying on a directed cycle (self-loop or larger SCC).
    pub fn recursive_preds(&self) -> BTreeSet<PredKey> {
        let mut out = BTreeSet::new();
        for (i, k) in self.nodes.iter().enumerate() {
            let scc = &self.sccs[self.scc_of[i]];
            if scc.len() > 1 || self.arcs.contains(&(i, i)) {
                out.insert(k.clone());
            }
        }
        out
    }

    /// Reflexive-transitive "depends on".
    pub fn depends_on(&self, p: &PredKey, q: &PredKey) -> bool {
        if p == q {
            return true;
        }
        let (Some(s), Some(t)) = (self.node_index(p), self.node_index(q)) else {
            return false;
        };
        let adj = self.adjacency();
        let mut seen = BTreeSet::from([s]);
        let mut todo = vec![s];
        while let Some(v) = todo.pop() {
            if v == t {
                return true;
            }
            for &w in &adj[v] {
                if seen.insert(w) {
                    todo.push(w);
                }
            }
        }
        false
    }

    /// DOT rendering; tabled predicates are drawn as boxes.
    pub fn to_dot(&self, tabled: &BTreeSet<PredKey>) -> String {
        let mut out = String::from("digraph deps {\n");
        for k in &self.nodes {
            if tabled.contains(k) {
                out.push_str(&format!("  \"{k}\" [shape=box];\n"));
            } else {
                out.push_str(&format!("  \"{k}\";\n"));
            }
        }
        for (a, b) in &self.arcs {
            out.push_str(&format!("  \"{}\" -> \"{}\";\n", self.nodes[*a], self.nodes[*b]));
        }
        out.push_str("}\n");
        out
    }

    fn all_cycles(&self, cap: usize) -> Result<Vec<Vec<usize>>, AnalysisError> {
        simple_cycles(self.nodes.len(), &self.adjacency(), cap)
    }
}

/// Classification of a non-tabled pair p ≃ q by the simple cycles through
/// both: C1 if none of them meets a tabled predicate (vacuously when there
/// is no such cycle), C2 if all of them do, C3 otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PairClass {
    C1,
    C2,
    C3,
    NotMutuallyRecursive,
}

pub fn classify_pair(
    g: &DepGraph,
    tab: &BTreeSet<PredKey>,
    p: &PredKey,
    q: &PredKey,
) -> Result<PairClass, AnalysisError> {
    if tab.contains(p) || tab.contains(q) || !g.sim(p, q) {
        return Ok(PairClass::NotMutuallyRecursive);
    }
    let (pi, qi) = match (g.node_index(p), g.node_index(q)) {
        (Some(pi), Some(qi)) => (pi, qi),
        // equal predicates without clauses: no cycles at all
        _ => return Ok(PairClass::C1),
    };
    let cycles = g.all_cycles(CYCLE_CAP)?;
    Ok(classify_from_cycles(g, tab, &cycles, pi, qi))
}

fn classify_from_cycles(
    g: &DepGraph,
    tab: &BTreeSet<PredKey>,
    cycles: &[Vec<usize>],
    pi: usize,
    qi: usize,
) -> PairClass {
    let mut with_tabled = false;
    let mut tabled_free = false;
    for cyc in cycles {
        if !(cyc.contains(&pi) && cyc.contains(&qi)) {
            continue;
        }
        if cyc.iter().any(|n| tab.contains(&g.nodes[*n])) {
            with_tabled = true;
        } else {
            tabled_free = true;
        }
    }
    match (tabled_free, with_tabled) {
        (_, false) => PairClass::C1,
        (false, true) => PairClass::C2,
        (true, true) => PairClass::C3,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WellChosenReport {
    pub well_chosen: bool,
    /// A non-tabled mutually recursive pair classifying C3, if any.
    pub witness: Option<(PredKey, PredKey)>,
}

/// A tabling is well-chosen iff no pair of (not necessarily distinct)
/// non-tabled predicates of a common SCC classifies as C3.
pub fn check_well_chosen(
    g: &DepGraph,
    tab: &BTreeSet<PredKey>,
) -> Result<WellChosenReport, AnalysisError> {
    let cycles = g.all_cycles(CYCLE_CAP)?;
    // distinct pairs first so a witness names two predicates when possible
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for i in 0..g.nodes.len() {
        for j in i + 1..g.nodes.len() {
            candidates.push((i, j));
        }
    }
    candidates.extend((0..g.nodes.len()).map(|i| (i, i)));
    for (i, j) in candidates {
        if tab.contains(&g.nodes[i])
            || tab.contains(&g.nodes[j])
            || g.scc_of[i] != g.scc_of[j]
        {
            continue;
        }
        if classify_from_cycles(g, tab, &cycles, i, j) == PairClass::C3 {
            return Ok(WellChosenReport {
                well_chosen: false,
                witness: Some((g.nodes[i].clone(), g.nodes[j].clone())),
            });
        }
    }
    Ok(WellChosenReport { well_chosen: true, witness: None })
}

/// P extends R iff no predicate defined in P occurs anywhere in R.
pub fn check_extends(p: &Program, r: &Program) -> bool {
    let defined: BTreeSet<PredKey> = p.clauses.iter().map(|c| c.head.key()).collect();
    r.preds.is_disjoint(&defined)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_program, Mode, ParseOptions};

    fn parse(src: &str) -> Program {
        parse_program(src, &ParseOptions { default_mode: Some(Mode::In) }).unwrap()
    }

    fn key(name: &str, arity: usize) -> PredKey {
        PredKey::new(name, arity)
    }

    // a←b, b←c, c←b
    const CHAIN_LOOP: &str = "a :- b.\nb :- c.\nc :- b.";

    #[test]
    fn dep_graph_structure() {
        let g = build_dep_graph(&parse(CHAIN_LOOP));
        assert_eq!(g.nodes, vec![key("a", 0), key("b", 0), key("c", 0)]);
        assert_eq!(g.arcs, BTreeSet::from([(0, 1), (1, 2), (2, 1)]));
        assert_eq!(g.recursive_preds(), BTreeSet::from([key("b", 0), key("c", 0)]));
        assert!(g.sim(&key("b", 0), &key("c", 0)));
        assert!(!g.sim(&key("a", 0), &key("b", 0)));
        assert!(g.depends_on(&key("a", 0), &key("c", 0)));
        assert!(!g.depends_on(&key("b", 0), &key("a", 0)));
    }

    #[test]
    fn single_fact_has_no_recursion() {
        let g = build_dep_graph(&parse("p(a)."));
        assert_eq!(g.nodes.len(), 1);
        assert!(g.arcs.is_empty());
        assert!(g.recursive_preds().is_empty());
    }

    #[test]
    fn builtins_stay_out_of_the_graph() {
        let g = build_dep_graph(&parse("p(X) :- X = a, integer(X), q(X).\nq(X)."));
        assert_eq!(g.nodes, vec![key("p", 1), key("q", 1)]);
        assert_eq!(g.arcs, BTreeSet::from([(0, 1)]));
    }

    #[test]
    fn direct_recursion_is_recursive() {
        let g = build_dep_graph(&parse("p(f(X)) :- p(X), q(X).\nq(a)."));
        assert_eq!(g.recursive_preds(), BTreeSet::from([key("p", 1)]));
    }

    #[test]
    fn pair_classification_matches_the_three_variants() {
        let tab = BTreeSet::from([key("a", 0)]);
        let b = key("b", 0);
        let c = key("c", 0);

        // P: a←b, b←c, c←b — the b/c cycle avoids a
        let g = build_dep_graph(&parse(CHAIN_LOOP));
        assert_eq!(classify_pair(&g, &tab, &b, &c).unwrap(), PairClass::C1);
        let wc = check_well_chosen(&g, &tab).unwrap();
        assert!(wc.well_chosen);

        // P': a←b, b←c, c←a — the only cycle goes through tabled a
        let g = build_dep_graph(&parse("a :- b.\nb :- c.\nc :- a."));
        assert_eq!(classify_pair(&g, &tab, &b, &c).unwrap(), PairClass::C2);
        assert!(check_well_chosen(&g, &tab).unwrap().well_chosen);

        // P'': both cycle kinds exist
        let g = build_dep_graph(&parse("a :- b.\nb :- c.\nc :- a.\nc :- b."));
        assert_eq!(classify_pair(&g, &tab, &b, &c).unwrap(), PairClass::C3);
        assert_eq!(classify_pair(&g, &tab, &c, &b).unwrap(), PairClass::C3);
        let wc = check_well_chosen(&g, &tab).unwrap();
        assert!(!wc.well_chosen);
        assert_eq!(wc.witness, Some((b.clone(), c.clone())));
    }

    #[test]
    fn tabled_or_unrelated_pairs_are_not_classified() {
        let g = build_dep_graph(&parse(CHAIN_LOOP));
        let tab = BTreeSet::from([key("b", 0)]);
        assert_eq!(
            classify_pair(&g, &tab, &key("b", 0), &key("c", 0)).unwrap(),
            PairClass::NotMutuallyRecursive
        );
        assert_eq!(
            classify_pair(&g, &BTreeSet::new(), &key("a", 0), &key("b", 0)).unwrap(),
            PairClass::NotMutuallyRecursive
        );
    }

    #[test]
    fn tabling_everything_is_well_chosen() {
        let g = build_dep_graph(&parse("a :- b.\nb :- c.\nc :- a.\nc :- b."));
        let tab = BTreeSet::from([key("a", 0), key("b", 0), key("c", 0)]);
        assert!(check_well_chosen(&g, &tab).unwrap().well_chosen);
    }

    #[test]
    fn reflexive_pairs_can_witness_c3() {
        // p has a tabled-free self-loop and a cycle through tabled t
        let g = build_dep_graph(&parse("p :- p.\np :- t.\nt :- p."));
        let tab = BTreeSet::from([key("t", 0)]);
        assert_eq!(
            classify_pair(&g, &tab, &key("p", 0), &key("p", 0)).unwrap(),
            PairClass::C3
        );
        let wc = check_well_chosen(&g, &tab).unwrap();
        assert_eq!(wc.witness, Some((key("p", 0), key("p", 0))));
    }

    #[test]
    fn extends_checks_defined_versus_occurring() {
        let p = parse("path(X,E,Y,L) :- edge(X,E,Y), path(Y,E,Z,L).");
        let r = parse("edge(X,[e(X,Y)|L],Y).\nedge(X,[e(A,B)|L],Y) :- edge(X,L,Y).");
        assert!(check_extends(&p, &r));
        assert!(!check_extends(&r, &p));
        assert!(!check_extends(&p, &p));
    }
}
