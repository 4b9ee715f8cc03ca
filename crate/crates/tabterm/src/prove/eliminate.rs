//! Universal-variable elimination and system normalization.
//!
//! A decrease/validity constraint quantifies over the clause variables.
//! Since those range over naturals, `concl ≥ 0` follows from the premises
//! whenever `concl − Σ λ_j·premise_j` has only nonnegative coefficient
//! polynomials, for some choice of multipliers λ. Multipliers are
//! restricted to {0,1} (each equality premise contributes both
//! directions), so one symbolic constraint eliminates to a *disjunction*
//! of alternatives, each a conjunction of `polynomial ≥ min` members over
//! symbols only. Strict conclusions require the constant member ≥ 1.
//!
//! Normalization then propagates the =0 side constraints through the
//! members, drops trivially-true members, kills alternatives that cannot
//! reach their minimum against the ≠0 lower bounds, promotes forced zeros
//! (single-alternative members that are sums of negated symbols), and
//! deduplicates — iterated to a fixpoint. A constraint losing all its
//! alternatives is statically infeasible and poisons the whole system.

use std::collections::{BTreeMap, BTreeSet};

use super::expr::{SPoly, SymExpr, SymbolId};
use super::gen::{Conclusion, Premise, SymConstraint};

/// Require `poly ≥ min` under the symbol mapping (min is 0, or 1 for the
/// constant member of a strict decrease).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Member {
    pub poly: SPoly,
    pub min: i64,
}

impl Member {
    pub fn text(&self) -> String {
        if self.min == 0 {
            format!("{} >= 0", self.poly)
        } else {
            format!("{} >= {}", self.poly, self.min)
        }
    }
}

/// A disjunction (over multiplier choices) of member conjunctions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumConstraint {
    pub origins: Vec<String>,
    pub alts: Vec<Vec<Member>>,
}

impl NumConstraint {
    pub fn satisfied_by(&self, val: &dyn Fn(&SymbolId) -> i128) -> bool {
        self.alts.iter().any(|alt| {
            alt.iter().all(|m| m.poly.eval(val) >= m.min as i128)
        })
    }

    /// The first failing member of the best-surviving alternative, for
    /// violation messages.
    pub fn witness_violation(
        &self,
        val: &dyn Fn(&SymbolId) -> i128,
    ) -> Option<String> {
        if self.satisfied_by(val) {
            return None;
        }
        let m = self
            .alts
            .iter()
            .flat_map(|alt| alt.iter())
            .find(|m| m.poly.eval(val) < m.min as i128);
        Some(match m {
            Some(m) => format!("{} evaluates to {}", m.text(), m.poly.eval(val)),
            None => "no satisfiable branch".into(),
        })
    }

    pub fn text(&self) -> String {
        if self.alts.is_empty() {
            return "false (no satisfiable branch)".into();
        }
        let alt_text = |alt: &Vec<Member>| {
            if alt.is_empty() {
                "true".to_string()
            } else {
                alt.iter().map(Member::text).collect::<Vec<_>>().join(" and ")
            }
        };
        if self.alts.len() == 1 {
            alt_text(&self.alts[0])
        } else {
            self.alts
                .iter()
                .map(|a| format!("({})", alt_text(a)))
                .collect::<Vec<_>>()
                .join(" or ")
        }
    }

    pub fn symbols(&self) -> BTreeSet<SymbolId> {
        let mut out = BTreeSet::new();
        for alt in &self.alts {
            for m in alt {
                out.extend(m.poly.symbols());
            }
        }
        out
    }
}

/// What a single symbolic constraint eliminates to.
#[derive(Debug, Clone)]
pub enum Eliminated {
    Num { origin: String, alts: Vec<Vec<Member>> },
    Zero(SymbolId, String),
    NonZero(SymbolId, String),
}

pub fn eliminate(c: &SymConstraint) -> Eliminated {
    let (lhs, rhs, strict) = match &c.conclusion {
        Conclusion::ZeroSym(s) => {
            return Eliminated::Zero(s.clone(), c.origin.clone())
        }
        Conclusion::NonZeroSym(s) => {
            return Eliminated::NonZero(s.clone(), c.origin.clone())
        }
        Conclusion::Ge(l, r) => (l, r, false),
        Conclusion::Gt(l, r) => (l, r, true),
    };
    let mut deltas: Vec<SymExpr> = Vec::new();
    for p in &c.premises {
        match p {
            Premise::Ge(l, r) => deltas.push(l.sub(r)),
            Premise::Eq(l, r) => {
                deltas.push(l.sub(r));
                deltas.push(r.sub(l));
            }
            Premise::True => {}
        }
    }
    let diff0 = lhs.sub(rhs);
    let mut alts: Vec<Vec<Member>> = Vec::new();
    for lambda in 0u32..(1 << deltas.len()) {
        let mut d = diff0.clone();
        for (j, delta) in deltas.iter().enumerate() {
            if lambda & (1 << j) != 0 {
                d = d.sub(delta);
            }
        }
        let mut members: Vec<Member> = d
            .coeffs
            .values()
            .filter(|p| !p.is_zero())
            .map(|p| Member { poly: p.clone(), min: 0 })
            .collect();
        if strict {
            members.push(Member { poly: d.constant.clone(), min: 1 });
        } else if !d.constant.is_zero() {
            members.push(Member { poly: d.constant.clone(), min: 0 });
        }
        members.sort();
        members.dedup();
        if !alts.contains(&members) {
            alts.push(members);
        }
    }
    Eliminated::Num { origin: c.origin.clone(), alts }
}

#[derive(Debug, Clone, Default)]
pub struct EliminatedSystem {
    pub zeros: BTreeMap<SymbolId, String>,
    pub nonzeros: BTreeMap<SymbolId, String>,
    pub constraints: Vec<NumConstraint>,
    /// Set when the system is statically unsatisfiable (at any bound).
    pub conflict: Option<String>,
}

impl EliminatedSystem {
    pub fn symbols(&self) -> BTreeSet<SymbolId> {
        let mut out: BTreeSet<SymbolId> = self.zeros.keys().cloned().collect();
        out.extend(self.nonzeros.keys().cloned());
        for c in &self.constraints {
            out.extend(c.symbols());
        }
        out
    }
}

/// Can this member still reach `min`? Upper-bounds the polynomial given
/// that `nonzeros` symbols are ≥ 1 and everything else may be 0.
fn member_dead(m: &Member, nonzeros: &BTreeMap<SymbolId, String>) -> bool {
    let mut ub: i64 = 0;
    for (mono, c) in m.poly.terms() {
        if mono.is_unit() {
            ub += c;
        } else if c > 0 {
            return false; // unbounded above
        } else if mono.symbols().iter().all(|s| nonzeros.contains_key(s)) {
            ub += c; // the product is at least 1
        }
    }
    ub < m.min
}

fn member_trivial(m: &Member) -> bool {
    m.poly.all_coeffs_nonneg() && m.min <= 0
}

/// Eliminates every constraint and normalizes the result to a fixpoint.
pub fn build_system(cs: &[SymConstraint]) -> EliminatedSystem {
    let mut sys = EliminatedSystem::default();
    for c in cs {
        match eliminate(c) {
            Eliminated::Zero(s, o) => {
                sys.zeros.entry(s).or_insert(o);
            }
            Eliminated::NonZero(s, o) => {
                sys.nonzeros.entry(s).or_insert(o);
            }
            Eliminated::Num { origin, alts } => sys
                .constraints
                .push(NumConstraint { origins: vec![origin], alts }),
        }
    }
    normalize(&mut sys);
    sys
}

fn normalize(sys: &mut EliminatedSystem) {
    loop {
        let mut changed = false;

        if sys.conflict.is_none() {
            if let Some(s) =
                sys.zeros.keys().find(|s| sys.nonzeros.contains_key(*s))
            {
                sys.conflict = Some(format!(
                    "symbol {s} is required to be both zero ({}) and nonzero ({})",
                    sys.zeros[s], sys.nonzeros[s]
                ));
            }
        }

        let zero_set: BTreeSet<SymbolId> = sys.zeros.keys().cloned().collect();
        let mut keep: Vec<NumConstraint> = Vec::new();
        for nc in sys.constraints.drain(..) {
            let mut alts: Vec<Vec<Member>> = Vec::new();
            let mut satisfied = false;
            for alt in &nc.alts {
                let mut members: Vec<Member> = Vec::new();
                let mut dead = false;
                for m0 in alt {
                    let poly = m0.poly.without_zeroed(&zero_set);
                    if poly != m0.poly {
                        changed = true;
                    }
                    let m = Member { poly, min: m0.min };
                    if member_trivial(&m) {
                        continue;
                    }
                    if member_dead(&m, &sys.nonzeros) {
                        dead = true;
                        break;
                    }
                    members.push(m);
                }
                if dead {
                    continue;
                }
                if members.is_empty() {
                    satisfied = true;
                    break;
                }
                members.sort();
                members.dedup();
                if !alts.contains(&members) {
                    alts.push(members);
                }
            }
            if satisfied {
                changed = true;
                continue; // constraint is vacuously true
            }
            if alts != nc.alts {
                changed = true;
            }
            if alts.is_empty() && sys.conflict.is_none() {
                sys.conflict = Some(format!(
                    "{}: no multiplier choice is satisfiable",
                    nc.origins.join("; ")
                ));
            }
            // forced zeros: a single-alternative member that is a sum of
            // negated monomials can only be satisfied by zeroing each
            // single-symbol monomial
            if alts.len() == 1 {
                for m in &alts[0] {
                    if !m.poly.all_coeffs_nonpos() || m.min > 0 {
                        continue;
                    }
                    for (mono, c) in m.poly.terms() {
                        if c < 0 && mono.symbols().len() == 1 {
                            let s = mono.symbols()[0].clone();
                            if !sys.zeros.contains_key(&s) {
                                sys.zeros.insert(
                                    s,
                                    format!("forced by {}", nc.origins.join("; ")),
                                );
                                changed = true;
                            }
                        }
                    }
                }
            }
            keep.push(NumConstraint { origins: nc.origins, alts });
        }

        // merge duplicate constraints
        for nc in keep {
            match sys.constraints.iter_mut().find(|c| c.alts == nc.alts) {
                Some(existing) => {
                    for o in nc.origins {
                        if !existing.origins.contains(&o) {
                            existing.origins.push(o);
                        }
                    }
                    changed = true;
                }
                None => sys.constraints.push(nc),
            }
        }

        if !changed {
            break;
        }
    }
}
