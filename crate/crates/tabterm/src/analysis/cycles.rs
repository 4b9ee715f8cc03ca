//! Simple-cycle enumeration (Johnson's algorithm) under an explicit budget.

use std::collections::{BTreeMap, BTreeSet};

use super::AnalysisError;

/// All simple cycles of the digraph on nodes `0..n`, each in path order
/// starting at its least node. Fails once more than `cap` cycles exist.
pub fn simple_cycles(
    n: usize,
    adj: &[BTreeSet<usize>],
    cap: usize,
) -> Result<Vec<Vec<usize>>, AnalysisError> {
    let mut cycles = Vec::new();
    for s in 0..n {
        let scc = scc_around(s, n, adj);
        if scc.len() == 1 {
            if adj[s].contains(&s) {
                push_cycle(&mut cycles, vec![s], cap)?;
            }
            continue;
        }
        let mut st = Search {
            s,
            scc,
            adj,
            blocked: BTreeSet::new(),
            blists: BTreeMap::new(),
            stack: Vec::new(),
            cycles: &mut cycles,
            cap,
        };
        st.circuit(s)?;
    }
    Ok(cycles)
}

fn push_cycle(
    cycles: &mut Vec<Vec<usize>>,
    cyc: Vec<usize>,
    cap: usize,
) -> Result<(), AnalysisError> {
    if cycles.len() >= cap {
        return Err(AnalysisError::BudgetExceeded { cap });
    }
    cycles.push(cyc);
    Ok(())
}

/// The strongly connected component of `s` in the subgraph induced by the
/// nodes `s..n` (forward ∩ backward reachability).
fn scc_around(s: usize, n: usize, adj: &[BTreeSet<usize>]) -> BTreeSet<usize> {
    let fwd = reach(s, n, |v| adj[v].iter().copied().filter(|w| *w >= s).collect());
    let bwd = reach(s, n, |v| {
        (s..n).filter(|u| adj[*u].contains(&v)).collect::<Vec<_>>()
    });
    fwd.intersection(&bwd).copied().collect()
}

fn reach(s: usize, _n: usize, succ: impl Fn(usize) -> Vec<usize>) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([s]);
    let mut todo = vec![s];
    while let Some(v) = todo.pop() {
        for w in succ(v) {
            if seen.insert(w) {
                todo.push(w);
            }
        }
    }
    seen
}

struct Search<'a> {
    s: usize,
    scc: BTreeSet<usize>,
    adj: &'a [BTreeSet<usize>],
    blocked: BTreeSet<usize>,
    blists: BTreeMap<usize, BTreeSet<usize>>,
    stack: Vec<usize>,
    cycles: &'a mut Vec<Vec<usize>>,
    cap: usize,
}

impl Search<'_> {
    fn circuit(&mut self, v: usize) -> Result<bool, AnalysisError> {
        let mut found = false;
        self.stack.push(v);
        self.blocked.insert(v);
        let succs: Vec<usize> =
            self.adj[v].iter().copied().filter(|w| self.scc.contains(w)).collect();
        for w in &succs {
            if *w == self.s {
                push_cycle(self.cycles, self.stack.clone(), self.cap)?;
                found = true;
            } else if !self.blocked.contains(w) && self.circuit(*w)? {
                found = true;
            }
        }
        if found {
            self.unblock(v);
        } else {
            for w in &succs {
                self.blists.entry(*w).or_default().insert(v);
            }
        }
        self.stack.pop();
        Ok(found)
    }

    fn unblock(&mut self, v: usize) {
        self.blocked.remove(&v);
        if let Some(ws) = self.blists.remove(&v) {
            for w in ws {
                if self.blocked.contains(&w) {
                    self.unblock(w);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, arcs: &[(usize, usize)]) -> Vec<BTreeSet<usize>> {
        let mut adj = vec![BTreeSet::new(); n];
        for (a, b) in arcs {
            adj[*a].insert(*b);
        }
        adj
    }

    fn sets(cycles: &[Vec<usize>]) -> BTreeSet<BTreeSet<usize>> {
        cycles.iter().map(|c| c.iter().copied().collect()).collect()
    }

    #[test]
    fn enumerates_all_simple_cycles() {
        // triangle plus a chord and a self-loop
        let adj = graph(3, &[(0, 1), (1, 2), (2, 0), (1, 0), (2, 2)]);
        let cycles = simple_cycles(3, &adj, 1000).unwrap();
        let expect: BTreeSet<BTreeSet<usize>> = [
            BTreeSet::from([0, 1, 2]),
            BTreeSet::from([0, 1]),
            BTreeSet::from([2]),
        ]
        .into();
        assert_eq!(sets(&cycles), expect);
    }

    #[test]
    fn dag_has_no_cycles() {
        let adj = graph(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]);
        assert!(simple_cycles(4, &adj, 1000).unwrap().is_empty());
    }

    #[test]
    fn two_loops_joined_at_a_node_have_no_common_cycle() {
        // 0↔1 and 1↔2: no simple cycle goes through both 0 and 2
        let adj = graph(3, &[(0, 1), (1, 0), (1, 2), (2, 1)]);
        let cycles = simple_cycles(3, &adj, 1000).unwrap();
        assert_eq!(
            sets(&cycles),
            [BTreeSet::from([0, 1]), BTreeSet::from([1, 2])].into()
        );
    }

    #[test]
    fn budget_trips() {
        // complete digraph on 6 nodes has 409 simple cycles
        let arcs: Vec<(usize, usize)> =
            (0..6).flat_map(|a| (0..6).filter(move |b| *b != a).map(move |b| (a, b))).collect();
        let adj = graph(6, &arcs);
        assert_eq!(simple_cycles(6, &adj, 1000).unwrap().len(), 409);
        assert!(matches!(
            simple_cycles(6, &adj, 100),
            Err(AnalysisError::BudgetExceeded { cap: 100 })
        ));
    }
}
