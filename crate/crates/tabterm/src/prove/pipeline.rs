//! The proving pipelines: generate, eliminate, search, certify — with the
//! independent checker re-run on every mapping the search finds — plus the
//! two composition rules for certificates of layered programs.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::analysis::{build_dep_graph, check_extends, classify_pair, PairClass};
use crate::engine::lg::lg_evaluate_opts;
use crate::engine::{forest_stats, Budget, EvalStatus};
use crate::syntax::{display_atom, is_builtin, PredKey, Program, Query};
use crate::transform::{a_transform, union_programs};

use super::certificate::{
    certificate_from_mapping, check_certificate, constraint_text,
    evaluate_constraint, program_fingerprint, CertReport, Certificate,
    CheckedConstraint, Role,
};
use super::eliminate::build_system;
use super::expr::SymbolId;
use super::gen::{
    gen_rigid, reachable_preds, size_expr, symbolic_level, Conclusion, GenOpts,
    Inapplicable, LgSets, Premise, SymConstraint,
};
use super::solve::solve;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// A certificate was found and independently re-checked.
    Proved,
    /// No coefficient choice within the bound satisfies the conditions.
    /// Says nothing about larger bounds — let alone about the program.
    UnprovedWithinBound,
    /// The method's preconditions failed (modes, reserved names, cycle
    /// analysis); the conditions were never generated.
    Inapplicable(String),
}

impl Verdict {
    pub fn is_proved(&self) -> bool {
        matches!(self, Verdict::Proved)
    }
}

#[derive(Debug, Clone)]
pub struct ProveOptions {
    /// Largest coefficient value the search may assign.
    pub bound: u64,
    /// Budget for the bounded engine cross-runs.
    pub budget: Budget,
    pub occurs_check: bool,
}

impl Default for ProveOptions {
    fn default() -> Self {
        ProveOptions { bound: 2, budget: Budget::default(), occurs_check: false }
    }
}

/// One generated condition, displayed in its eliminated form.
#[derive(Debug, Clone)]
pub struct ConstraintInfo {
    pub origin: String,
    pub text: String,
    /// `None` until a mapping exists to judge the constraint by.
    pub satisfied: Option<bool>,
}

/// A bounded engine run of one goal, as cross-evidence next to the
/// symbolic verdict. A completed run exhibits the finite forest the
/// verdict promises; an exhausted run is inconclusive either way.
#[derive(Debug, Clone)]
pub struct EngineCheck {
    pub query: String,
    pub status: EvalStatus,
    pub tables: usize,
    pub answers: usize,
}

#[derive(Debug, Clone)]
pub struct ProofReport {
    pub verdict: Verdict,
    pub bound: u64,
    pub certificate: Option<Certificate>,
    pub constraints: Vec<ConstraintInfo>,
    /// Why no bound can work, when normalization already knows that.
    pub conflict: Option<String>,
    /// Engine runs of the goals on the source program.
    pub engine: Vec<EngineCheck>,
}

/// Prove quasi-termination of `p` for the given goals (its declared
/// queries live in `p.queries`; pass them on or substitute others). With
/// no goals at all, the analysis covers arbitrary calls to every
/// predicate.
pub fn prove_quasi(p: &Program, goals: &[Query], opts: &ProveOptions) -> ProofReport {
    let source = with_goals(p, goals);
    run(&source, &source, GenOpts { lg: None }, Role::Quasi, opts)
}

/// Prove LG-termination of `p` for the given goals, via quasi-termination
/// of the answer-guarded program. The certificate is issued against the
/// source text; checking re-derives the guarded program.
pub fn prove_lg(p: &Program, goals: &[Query], opts: &ProveOptions) -> ProofReport {
    let source = with_goals(p, goals);
    let (target, map) = match a_transform(&source) {
        Ok(x) => x,
        Err(e) => {
            return ProofReport {
                verdict: Verdict::Inapplicable(e.to_string()),
                bound: opts.bound,
                certificate: None,
                constraints: Vec::new(),
                conflict: None,
                engine: engine_checks(&source, opts),
            }
        }
    };
    let guards: BTreeSet<PredKey> = map.renames.values().cloned().collect();
    let mut measured: BTreeSet<PredKey> = map.renames.keys().cloned().collect();
    measured.extend(guards.iter().cloned());
    run(
        &source,
        &target,
        GenOpts { lg: Some(LgSets { guards, measured }) },
        Role::Lg,
        opts,
    )
}

fn with_goals(p: &Program, goals: &[Query]) -> Program {
    let mut out = p.clone();
    out.queries = goals.to_vec();
    out.rebuild_inventory();
    out
}

fn run(
    source: &Program,
    target: &Program,
    gopts: GenOpts,
    role: Role,
    opts: &ProveOptions,
) -> ProofReport {
    let engine = engine_checks(source, opts);
    let mut report = ProofReport {
        verdict: Verdict::UnprovedWithinBound,
        bound: opts.bound,
        certificate: None,
        constraints: Vec::new(),
        conflict: None,
        engine,
    };

    let reach = reachable_preds(target, &target.queries);
    let cs = match gen_rigid(target, &reach, &gopts) {
        Ok(cs) => cs,
        Err(Inapplicable(m)) => {
            report.verdict = Verdict::Inapplicable(m);
            return report;
        }
    };
    let sys = build_system(&cs);
    let Some(mapping) = solve(&sys, opts.bound) else {
        report.constraints = cs
            .iter()
            .map(|c| ConstraintInfo {
                origin: c.origin.clone(),
                text: constraint_text(c),
                satisfied: None,
            })
            .collect();
        report.conflict = sys.conflict.clone();
        return report;
    };

    let cert = certificate_from_mapping(
        target,
        role,
        opts.bound,
        program_fingerprint(source),
        &mapping,
    );
    match check_certificate(source, &cert) {
        Ok(rep) => {
            let ok = rep.ok();
            report.constraints = rep
                .constraints
                .into_iter()
                .map(|c| ConstraintInfo {
                    origin: c.origin,
                    text: c.text,
                    satisfied: Some(c.ok),
                })
                .collect();
            if ok {
                report.verdict = Verdict::Proved;
                report.certificate = Some(cert);
            } else {
                // cannot happen while solver and checker agree; fail closed
                report.conflict =
                    Some("solved values rejected by the certificate checker".into());
            }
        }
        Err(e) => {
            report.verdict =
                Verdict::Inapplicable(format!("certificate self-check failed: {e}"));
        }
    }
    report
}

fn engine_checks(p: &Program, opts: &ProveOptions) -> Vec<EngineCheck> {
    p.queries
        .iter()
        .map(|q| {
            let (forest, outcome) =
                lg_evaluate_opts(p, &q.atom, &opts.budget, opts.occurs_check);
            let st = forest_stats(&forest);
            let name = |v: usize| {
                q.var_names.get(v).cloned().unwrap_or_else(|| format!("_G{v}"))
            };
            EngineCheck {
                query: display_atom(&q.atom, &name),
                status: outcome.status,
                tables: st.num_trees,
                answers: forest.top().answers.len(),
            }
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("the upper program does not extend the base")]
    ExtendsViolation,
    #[error("{which} certificate rejected: {reason}")]
    ComponentRejected { which: String, reason: String },
    #[error("cycle analysis failed: {0}")]
    Analysis(String),
    #[error("the composed certificate fails on the union program")]
    Rejected { report: CertReport, conditions: Vec<CheckedConstraint> },
}

/// A composed certificate, including the union re-verification that
/// justified it.
#[derive(Debug, Clone)]
pub struct Composition {
    pub certificate: Certificate,
    /// The sum rule's side conditions (empty for the min rule), already
    /// evaluated. Informative: the union re-verification is what decides.
    pub conditions: Vec<CheckedConstraint>,
    pub report: CertReport,
}

fn component_ok(
    which: &str,
    p: &Program,
    cert: &Certificate,
) -> Result<(), ComposeError> {
    let rejected = |reason: String| ComposeError::ComponentRejected {
        which: which.into(),
        reason,
    };
    let rep = check_certificate(p, cert).map_err(|e| rejected(e.to_string()))?;
    if !rep.ok() {
        return Err(rejected(format!(
            "{} of {} conditions fail",
            rep.failures, rep.total
        )));
    }
    Ok(())
}

fn coeff(m: &BTreeMap<String, Vec<u64>>, k: &PredKey, i: usize) -> u64 {
    m.get(&k.to_string()).and_then(|v| v.get(i - 1)).copied().unwrap_or(0)
}

/// Compose a certificate for `p ∪ r` out of a certificate for the base `r`
/// and two level vectors for the predicates `p` defines: `upper` must
/// decrease along p's own recursion (sizes taken from the base relations),
/// `link` must dominate every call a p-clause makes. The composed mapping
/// gives a p-predicate the *sum* upper + link and keeps the base mapping
/// elsewhere; the union program is then re-verified from scratch, and only
/// that verdict decides.
pub fn compose_sum(
    p: &Program,
    r: &Program,
    base: &Certificate,
    upper: &BTreeMap<String, Vec<u64>>,
    link: &BTreeMap<String, Vec<u64>>,
) -> Result<Composition, ComposeError> {
    if !check_extends(p, r) {
        return Err(ComposeError::ExtendsViolation);
    }
    component_ok("base", r, base)?;

    let u = union_programs(p, r);
    let p_defined: BTreeSet<PredKey> =
        p.clauses.iter().map(|c| c.head.key()).collect();

    // side conditions on the upper slice, evaluated under the base sizes
    let g = build_dep_graph(&u);
    let tab = u.effective_tabling();
    let val_upper = |s: &SymbolId| -> i128 {
        match s {
            SymbolId::Functor(_, _) => base.lookup(s) as i128,
            SymbolId::ExtPred(k, _) => {
                if p_defined.contains(k) { 0 } else { base.lookup(s) as i128 }
            }
            SymbolId::Pred(k, i) => coeff(upper, k, *i) as i128,
        }
    };
    let val_link = |s: &SymbolId| -> i128 {
        match s {
            SymbolId::Pred(k, i) if p_defined.contains(k) => {
                coeff(link, k, *i) as i128
            }
            SymbolId::Functor(_, _) | SymbolId::Pred(_, _) => {
                base.lookup(s) as i128
            }
            SymbolId::ExtPred(k, _) => {
                if p_defined.contains(k) { 0 } else { base.lookup(s) as i128 }
            }
        }
    };

    let mut conditions = Vec::new();
    for (ci, c) in p.clauses.iter().enumerate() {
        let hk = c.head.key();
        let mut premises: Vec<Premise> = Vec::new();
        for b in &c.body {
            let bk = b.key();
            if !is_builtin(&bk) {
                let vn = c.var_names.clone();
                let name = move |v: usize| {
                    vn.get(v).cloned().unwrap_or_else(|| format!("V{v}"))
                };
                if p_defined.contains(&bk) {
                    let strict = matches!(
                        classify_pair(&g, &tab, &hk, &bk)
                            .map_err(|e| ComposeError::Analysis(e.to_string()))?,
                        PairClass::C1 | PairClass::C3
                    );
                    let lhs = symbolic_level(&c.head);
                    let rhs = symbolic_level(b);
                    let cond = SymConstraint {
                        premises: premises.clone(),
                        conclusion: if strict {
                            Conclusion::Gt(lhs, rhs)
                        } else {
                            Conclusion::Ge(lhs, rhs)
                        },
                        origin: format!(
                            "sum rule (b) clause {}: upper decrease to {}",
                            ci + 1,
                            display_atom(b, &name)
                        ),
                    };
                    conditions.push(evaluate_constraint(&cond, &val_upper));
                }
                let cond = SymConstraint {
                    premises: premises.clone(),
                    conclusion: Conclusion::Ge(
                        symbolic_level(&c.head),
                        symbolic_level(b),
                    ),
                    origin: format!(
                        "sum rule (c) clause {}: link dominates {}",
                        ci + 1,
                        display_atom(b, &name)
                    ),
                };
                conditions.push(evaluate_constraint(&cond, &val_link));
            }
            let pr = size_expr(&u, b);
            if !matches!(pr, Premise::True) {
                premises.push(pr);
            }
        }
    }

    // the composed mapping over the union inventory
    let mut mapping: BTreeMap<SymbolId, u64> = BTreeMap::new();
    for f in &u.functors {
        for i in 0..=f.arity {
            let s = SymbolId::Functor(f.clone(), i);
            let v = base.lookup(&s);
            mapping.insert(s, v);
        }
    }
    for k in u.preds.iter().filter(|k| !is_builtin(k)) {
        for i in 1..=k.arity {
            let s = SymbolId::Pred(k.clone(), i);
            let v = if p_defined.contains(k) {
                coeff(upper, k, i) + coeff(link, k, i)
            } else {
                base.lookup(&s)
            };
            mapping.insert(s, v);
        }
        for i in 0..=k.arity {
            let s = SymbolId::ExtPred(k.clone(), i);
            let v = if p_defined.contains(k) { 0 } else { base.lookup(&s) };
            mapping.insert(s, v);
        }
    }
    finish_composition(&u, base.bound, mapping, conditions)
}

/// Compose certificates of two independent extensions (neither may call
/// into the other) over their union: shared predicate weights take the
/// pointwise minimum, functor weights the maximum, exclusive entries carry
/// over. The union re-verification decides.
pub fn compose_min(
    p1: &Program,
    p2: &Program,
    c1: &Certificate,
    c2: &Certificate,
) -> Result<Composition, ComposeError> {
    if !check_extends(p1, p2) || !check_extends(p2, p1) {
        return Err(ComposeError::ExtendsViolation);
    }
    component_ok("first", p1, c1)?;
    component_ok("second", p2, c2)?;

    let u = union_programs(p1, p2);
    let mut mapping: BTreeMap<SymbolId, u64> = BTreeMap::new();
    for f in &u.functors {
        for i in 0..=f.arity {
            let s = SymbolId::Functor(f.clone(), i);
            let v = c1.lookup(&s).max(c2.lookup(&s));
            mapping.insert(s, v);
        }
    }
    let merge = |key: &str,
                 m1: &BTreeMap<String, Vec<u64>>,
                 m2: &BTreeMap<String, Vec<u64>>,
                 s: &SymbolId|
     -> u64 {
        match (m1.contains_key(key), m2.contains_key(key)) {
            (true, true) => c1.lookup(s).min(c2.lookup(s)),
            (true, false) => c1.lookup(s),
            (false, _) => c2.lookup(s),
        }
    };
    for k in u.preds.iter().filter(|k| !is_builtin(k)) {
        let key = k.to_string();
        for i in 1..=k.arity {
            let s = SymbolId::Pred(k.clone(), i);
            let v = merge(&key, &c1.pred_coeffs, &c2.pred_coeffs, &s);
            mapping.insert(s, v);
        }
        for i in 0..=k.arity {
            let s = SymbolId::ExtPred(k.clone(), i);
            let v = merge(&key, &c1.ext_pred_coeffs, &c2.ext_pred_coeffs, &s);
            mapping.insert(s, v);
        }
    }
    finish_composition(&u, c1.bound.max(c2.bound), mapping, Vec::new())
}

fn finish_composition(
    u: &Program,
    base_bound: u64,
    mapping: BTreeMap<SymbolId, u64>,
    conditions: Vec<CheckedConstraint>,
) -> Result<Composition, ComposeError> {
    let bound =
        base_bound.max(mapping.values().copied().max().unwrap_or(0));
    let cert = certificate_from_mapping(
        u,
        Role::ModularComponent,
        bound,
        program_fingerprint(u),
        &mapping,
    );
    let report = check_certificate(u, &cert).map_err(|e| {
        ComposeError::ComponentRejected { which: "composed".into(), reason: e.to_string() }
    })?;
    if !report.ok() {
        return Err(ComposeError::Rejected { report, conditions });
    }
    Ok(Composition { certificate: cert, conditions, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_program, Mode, ParseOptions};

    fn parse(src: &str) -> Program {
        parse_program(src, &ParseOptions { default_mode: Some(Mode::In) }).unwrap()
    }

    const CONSTS: &str = "\
:- table path/3.
:- mode path(i,o,o).
:- mode edge(i,o).
path(X,Y,[Y]) :- edge(X,Y).
path(X,Z,[Y|L]) :- edge(X,Y), path(Y,Z,L).
edge(a,b).
edge(b,c).

:- query path(a,Y,L).
";

    #[test]
    fn ground_graph_quasi_terminates() {
        let p = parse(CONSTS);
        let rep = prove_quasi(&p, &p.queries, &ProveOptions::default());
        assert_eq!(rep.verdict, Verdict::Proved);
        let cert = rep.certificate.expect("certificate");
        assert!(rep.constraints.iter().all(|c| c.satisfied == Some(true)));
        // measured input gets a positive weight
        assert!(cert.pred_coeffs["path/3"][0] >= 1);
        // engine agrees within budget
        assert!(rep.engine.iter().all(|e| e.status.is_completed()));
        assert!(rep.engine[0].answers >= 2);
    }

    #[test]
    fn untabled_loop_is_never_provable() {
        let p = parse("p :- q.\nq :- p.");
        let rep = prove_quasi(&p, &[], &ProveOptions::default());
        assert_eq!(rep.verdict, Verdict::UnprovedWithinBound);
        assert!(rep.certificate.is_none());
        assert!(rep.conflict.is_some(), "a 0 > 0 member survives every bound");
        assert!(rep.constraints.iter().all(|c| c.satisfied.is_none()));
    }

    #[test]
    fn reserved_suffix_is_inapplicable_for_lg() {
        let p = parse(":- mode p__a(i).\np__a(a).");
        let rep = prove_lg(&p, &[], &ProveOptions::default());
        assert!(matches!(rep.verdict, Verdict::Inapplicable(_)));
    }

    #[test]
    fn bad_modes_are_inapplicable() {
        // the output of edge/2 feeds nothing and Y is never produced
        let p = parse(":- mode p(o).\np(Y) :- q(Y,Z).\n");
        let rep = prove_quasi(&p, &p.queries, &ProveOptions::default());
        assert!(matches!(rep.verdict, Verdict::Inapplicable(_)));
    }

    #[test]
    fn compose_requires_extension() {
        let base = parse(":- mode e(i).\ne(a) :- top(a).\n");
        let upper = parse(":- mode top(i).\ntop(X) :- e(X).\n");
        let cert = certificate_from_mapping(
            &base,
            Role::Quasi,
            2,
            program_fingerprint(&base),
            &BTreeMap::new(),
        );
        assert!(matches!(
            compose_sum(&upper, &base, &cert, &BTreeMap::new(), &BTreeMap::new()),
            Err(ComposeError::ExtendsViolation)
        ));
    }

    #[test]
    fn lg_proof_of_fully_tabled_loop() {
        // p :- q, q :- p with both tabled LG-terminates: guards only,
        // no strict decrease anywhere
        let p = parse(":- table p/0.\n:- table q/0.\np :- q.\nq :- p.");
        let rep = prove_lg(&p, &[], &ProveOptions::default());
        assert_eq!(rep.verdict, Verdict::Proved);
        let cert = rep.certificate.unwrap();
        assert!(matches!(cert.role, Role::Lg));
        // while plain quasi-termination of the untransformed program also
        // holds (tabling cuts the only cycle)
        let rep2 = prove_quasi(&p, &[], &ProveOptions::default());
        assert_eq!(rep2.verdict, Verdict::Proved);
    }
}
