//! Bounded search for a satisfying symbol mapping.
//!
//! Values range over {0,…,k} ({1,…,k} for ≠0 symbols, 0 for =0 symbols).
//! A propagation pass first tightens each symbol's domain: a value is
//! dropped when pinning the symbol to it — with every other symbol ranging
//! over its current domain — leaves some constraint with every alternative
//! interval-refuted. Forced values sharpen the intervals, so chains of
//! forced zeros collapse without search, and most unsatisfiable systems
//! die right here.
//!
//! What survives is searched per independent constraint cluster, symbols
//! in their fixed order, values ascending, cutting a branch as soon as
//! the interval bounds (assigned symbols exact, open ones over their
//! domains) refute every alternative of some constraint. The first full
//! assignment found is the lexicographically smallest surviving one.
//! Symbols that appear in no constraint are not searched at all: their
//! minimal value (0, or 1 under ≠0) is forced.

use std::collections::BTreeMap;

use super::eliminate::{EliminatedSystem, Member, NumConstraint};
use super::expr::{SPoly, SymbolId};

pub fn solve(
    sys: &EliminatedSystem,
    k: u64,
) -> Option<BTreeMap<SymbolId, u64>> {
    if sys.conflict.is_some() {
        return None;
    }
    let mut out: BTreeMap<SymbolId, u64> = BTreeMap::new();
    for s in sys.zeros.keys() {
        out.insert(s.clone(), 0);
    }

    let mut dom: BTreeMap<SymbolId, Vec<u64>> = sys
        .symbols()
        .into_iter()
        .filter(|s| !sys.zeros.contains_key(s))
        .map(|s| {
            let lo = if sys.nonzeros.contains_key(&s) { 1 } else { 0 };
            (s, (lo..=k).collect())
        })
        .collect();
    if dom.values().any(|vals| vals.is_empty()) {
        return None; // k = 0 cannot serve a ≠0 symbol
    }
    propagate(sys, &mut dom)?;

    // assemble the independent clusters
    let searched: Vec<&SymbolId> = dom.keys().collect();
    let index: BTreeMap<&SymbolId, usize> =
        searched.iter().copied().zip(0..).collect();
    let mut cluster: Vec<usize> = (0..searched.len()).collect();
    fn root(cluster: &mut Vec<usize>, mut i: usize) -> usize {
        while cluster[i] != i {
            cluster[i] = cluster[cluster[i]];
            i = cluster[i];
        }
        i
    }
    for nc in &sys.constraints {
        let syms: Vec<usize> = nc
            .symbols()
            .iter()
            .filter_map(|s| index.get(s).copied())
            .collect();
        for w in syms.windows(2) {
            let (a, b) = (root(&mut cluster, w[0]), root(&mut cluster, w[1]));
            cluster[a] = b;
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..searched.len() {
        let r = root(&mut cluster, i);
        groups.entry(r).or_default().push(i);
    }

    for (_, members) in groups {
        let syms: Vec<SymbolId> =
            members.iter().map(|i| searched[*i].clone()).collect();
        let constraints: Vec<&NumConstraint> = sys
            .constraints
            .iter()
            .filter(|nc| nc.symbols().iter().any(|s| syms.contains(s)))
            .collect();
        let mut assigned: BTreeMap<SymbolId, u64> = BTreeMap::new();
        if !dfs(0, &syms, &constraints, &dom, sys, &mut assigned) {
            return None;
        }
        out.extend(assigned);
    }
    Some(out)
}

/// Domain tightening to a fixpoint. `None` when a domain empties or a
/// constraint is refuted outright.
fn propagate(
    sys: &EliminatedSystem,
    dom: &mut BTreeMap<SymbolId, Vec<u64>>,
) -> Option<()> {
    loop {
        let mut changed = false;
        for nc in &sys.constraints {
            if refuted(nc, dom, None) {
                return None;
            }
            for s in nc.symbols() {
                let Some(vals) = dom.get(&s) else { continue };
                let keep: Vec<u64> = vals
                    .iter()
                    .copied()
                    .filter(|v| !refuted(nc, dom, Some((&s, *v))))
                    .collect();
                if keep.is_empty() {
                    return None;
                }
                if keep.len() != vals.len() {
                    changed = true;
                    dom.insert(s.clone(), keep);
                }
            }
        }
        if !changed {
            return Some(());
        }
    }
}

/// Is every alternative of `nc` refuted by interval bounds, with `pin`
/// (if any) held at an exact value? Unlisted symbols are the =0 ones.
fn refuted(
    nc: &NumConstraint,
    dom: &BTreeMap<SymbolId, Vec<u64>>,
    pin: Option<(&SymbolId, u64)>,
) -> bool {
    let lo = |s: &SymbolId| -> i128 {
        if let Some((p, v)) = pin {
            if s == p {
                return v as i128;
            }
        }
        dom.get(s).map_or(0, |vals| vals[0] as i128)
    };
    let hi = |s: &SymbolId| -> i128 {
        if let Some((p, v)) = pin {
            if s == p {
                return v as i128;
            }
        }
        dom.get(s).map_or(0, |vals| *vals.last().unwrap() as i128)
    };
    nc.alts
        .iter()
        .all(|alt| alt.iter().any(|m| upper(&m.poly, &lo, &hi) < m.min as i128))
}

/// Largest value the polynomial can take over the given symbol bounds
/// (all bounds are nonnegative, so monomials are monotone).
fn upper(
    p: &SPoly,
    lo: &dyn Fn(&SymbolId) -> i128,
    hi: &dyn Fn(&SymbolId) -> i128,
) -> i128 {
    let mut sum: i128 = 0;
    for (mono, c) in p.terms() {
        let mut prod: i128 = 1;
        for s in mono.symbols() {
            prod *= if c >= 0 { hi(s) } else { lo(s) };
        }
        sum += (c as i128) * prod;
    }
    sum
}

fn dfs(
    d: usize,
    syms: &[SymbolId],
    constraints: &[&NumConstraint],
    dom: &BTreeMap<SymbolId, Vec<u64>>,
    sys: &EliminatedSystem,
    assigned: &mut BTreeMap<SymbolId, u64>,
) -> bool {
    if d == syms.len() {
        return true;
    }
    for v in &dom[&syms[d]] {
        assigned.insert(syms[d].clone(), *v);
        if feasible(constraints, dom, assigned)
            && dfs(d + 1, syms, constraints, dom, sys, assigned)
        {
            return true;
        }
    }
    assigned.remove(&syms[d]);
    false
}

/// No constraint may have every alternative refuted under the partial
/// assignment, with unassigned symbols ranging over their domains.
fn feasible(
    constraints: &[&NumConstraint],
    dom: &BTreeMap<SymbolId, Vec<u64>>,
    assigned: &BTreeMap<SymbolId, u64>,
) -> bool {
    let lo = |s: &SymbolId| -> i128 {
        match assigned.get(s) {
            Some(v) => *v as i128,
            None => dom.get(s).map_or(0, |vals| vals[0] as i128),
        }
    };
    let hi = |s: &SymbolId| -> i128 {
        match assigned.get(s) {
            Some(v) => *v as i128,
            None => dom.get(s).map_or(0, |vals| *vals.last().unwrap() as i128),
        }
    };
    let dead = |m: &Member| upper(&m.poly, &lo, &hi) < m.min as i128;
    constraints
        .iter()
        .all(|nc| !nc.alts.iter().all(|alt| alt.iter().any(dead)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prove::eliminate::build_system;
    use crate::prove::expr::{SPoly, SymExpr};
    use crate::prove::gen::{Conclusion, SymConstraint};
    use crate::syntax::PredKey;

    fn pred(name: &str, i: usize) -> SymbolId {
        SymbolId::Pred(PredKey::new(name, 1), i)
    }

    fn side(c: Conclusion) -> SymConstraint {
        SymConstraint { premises: vec![], conclusion: c, origin: "t".into() }
    }

    #[test]
    fn empty_system_is_all_defaults() {
        let sys = build_system(&[]);
        assert_eq!(solve(&sys, 2), Some(BTreeMap::new()));
        // a lone ≠0 symbol gets the minimal positive value
        let sys = build_system(&[side(Conclusion::NonZeroSym(pred("p", 1)))]);
        assert_eq!(
            solve(&sys, 2),
            Some(BTreeMap::from([(pred("p", 1), 1)]))
        );
    }

    #[test]
    fn unsat_pair_x_ge_1_and_x_eq_0() {
        let sys = build_system(&[
            side(Conclusion::NonZeroSym(pred("x", 1))),
            side(Conclusion::ZeroSym(pred("x", 1))),
        ]);
        assert_eq!(solve(&sys, 4), None);
    }

    #[test]
    fn lexicographic_minimality() {
        // x + y ≥ 1 as a strict conclusion over constants
        let concl = Conclusion::Gt(
            SymExpr::from_poly(
                SPoly::sym(pred("x", 1)).add(&SPoly::sym(pred("y", 1))),
            ),
            SymExpr::zero(),
        );
        let sys = build_system(&[side(concl)]);
        // lex-min picks x=0, y=1 over x=1
        assert_eq!(
            solve(&sys, 2),
            Some(BTreeMap::from([(pred("x", 1), 0), (pred("y", 1), 1)]))
        );
    }

    #[test]
    fn bound_zero_with_nonzero_symbol_fails() {
        let sys = build_system(&[side(Conclusion::NonZeroSym(pred("p", 1)))]);
        assert_eq!(solve(&sys, 0), None);
    }

    #[test]
    fn propagation_refutes_a_forced_chain() {
        // z ≥ 1 and 0 ≥ x·z·V force x = 0, which refutes x ≥ 1: no
        // search should be needed (and no stack depth is, either)
        let cs = [
            side(Conclusion::NonZeroSym(pred("z", 1))),
            SymConstraint {
                premises: vec![],
                conclusion: Conclusion::Ge(
                    SymExpr::zero(),
                    SymExpr::var(0).mul_poly(
                        &SPoly::sym(pred("x", 1)).mul(&SPoly::sym(pred("z", 1))),
                    ),
                ),
                origin: "cap".into(),
            },
            side(Conclusion::Gt(
                SymExpr::from_poly(SPoly::sym(pred("x", 1))),
                SymExpr::zero(),
            )),
        ];
        let sys = build_system(&cs);
        assert!(sys.conflict.is_none());
        assert_eq!(solve(&sys, 3), None);
    }
}
