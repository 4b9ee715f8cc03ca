//! Serializable coefficient certificates and the independent checker.
//!
//! A certificate carries only the chosen coefficient values. Checking
//! regenerates the whole constraint system from the program and evaluates
//! every constraint under those values, so the checker accepts exactly the
//! conditions the solver solved — there is no trusted channel between the
//! two beyond the program text itself. The fingerprint ties a certificate
//! to the canonical rendering of the program (directives, clauses and
//! queries) it was issued for.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::syntax::{is_builtin, render_program, FuncKey, PredKey, Program};
use crate::transform::{a_transform, TransformError};

use super::eliminate::{eliminate, Eliminated, NumConstraint};
use super::expr::SymbolId;
use super::gen::{gen_rigid, reachable_preds, GenOpts, Inapplicable, LgSets};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    /// Level mapping witnessing quasi-termination of the program itself.
    Quasi,
    /// Level mapping for the guard-transformed program; checking applies
    /// the transformation internally, the fingerprint stays on the source.
    Lg,
    /// Same conditions as `Quasi`; marks a certificate assembled for (or
    /// usable as) a layer of a larger program.
    ModularComponent,
}

/// Coefficient maps are keyed `name/arity`. Functor and external-predicate
/// vectors carry `arity + 1` entries (the constant first), level vectors
/// carry one entry per argument position. Missing keys mean all zeros.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub fingerprint: String,
    pub bound: u64,
    #[serde(default)]
    pub functor_coeffs: BTreeMap<String, Vec<u64>>,
    #[serde(default)]
    pub pred_coeffs: BTreeMap<String, Vec<u64>>,
    #[serde(default)]
    pub ext_pred_coeffs: BTreeMap<String, Vec<u64>>,
    pub role: Role,
}

impl Certificate {
    pub fn lookup(&self, s: &SymbolId) -> u64 {
        match s {
            SymbolId::Functor(k, i) => get(&self.functor_coeffs, &k.to_string(), *i),
            SymbolId::Pred(k, i) => get(&self.pred_coeffs, &k.to_string(), i - 1),
            SymbolId::ExtPred(k, i) => {
                get(&self.ext_pred_coeffs, &k.to_string(), *i)
            }
        }
    }
}

fn get(m: &BTreeMap<String, Vec<u64>>, key: &str, i: usize) -> u64 {
    m.get(key).and_then(|v| v.get(i)).copied().unwrap_or(0)
}

pub fn program_fingerprint(p: &Program) -> String {
    let mut h = Sha256::new();
    h.update(render_program(p).as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Total certificate over the inventory of `target` (the program the
/// constraints were generated on), zero everywhere `map` is silent.
pub fn certificate_from_mapping(
    target: &Program,
    role: Role,
    bound: u64,
    fingerprint: String,
    map: &BTreeMap<SymbolId, u64>,
) -> Certificate {
    let mut cert = Certificate {
        fingerprint,
        bound,
        functor_coeffs: BTreeMap::new(),
        pred_coeffs: BTreeMap::new(),
        ext_pred_coeffs: BTreeMap::new(),
        role,
    };
    for f in &target.functors {
        cert.functor_coeffs.insert(f.to_string(), vec![0; f.arity + 1]);
    }
    for p in target.preds.iter().filter(|p| !is_builtin(p)) {
        cert.pred_coeffs.insert(p.to_string(), vec![0; p.arity]);
        cert.ext_pred_coeffs.insert(p.to_string(), vec![0; p.arity + 1]);
    }
    for (s, v) in map {
        let slot = match s {
            SymbolId::Functor(k, i) => {
                cert.functor_coeffs.get_mut(&k.to_string()).and_then(|c| c.get_mut(*i))
            }
            SymbolId::Pred(k, i) => {
                cert.pred_coeffs.get_mut(&k.to_string()).and_then(|c| c.get_mut(i - 1))
            }
            SymbolId::ExtPred(k, i) => {
                cert.ext_pred_coeffs.get_mut(&k.to_string()).and_then(|c| c.get_mut(*i))
            }
        };
        if let Some(slot) = slot {
            *slot = *v;
        }
    }
    cert
}

#[derive(Debug, Error)]
pub enum CertError {
    #[error(
        "certificate fingerprint {found} does not match the program ({expected})"
    )]
    FingerprintMismatch { expected: String, found: String },
    #[error("malformed certificate: {0}")]
    BadShape(String),
    #[error("{0}")]
    Inapplicable(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckedConstraint {
    pub origin: String,
    pub text: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertReport {
    pub role: Role,
    pub bound: u64,
    pub total: usize,
    pub failures: usize,
    pub constraints: Vec<CheckedConstraint>,
}

impl CertReport {
    pub fn ok(&self) -> bool {
        self.failures == 0
    }
}

pub fn check_certificate(
    p: &Program,
    cert: &Certificate,
) -> Result<CertReport, CertError> {
    let expected = program_fingerprint(p);
    if cert.fingerprint != expected {
        return Err(CertError::FingerprintMismatch {
            expected,
            found: cert.fingerprint.clone(),
        });
    }
    let (target, opts) = match cert.role {
        Role::Quasi | Role::ModularComponent => (p.clone(), GenOpts { lg: None }),
        Role::Lg => {
            let (pa, map) = a_transform(p)?;
            let guards: BTreeSet<PredKey> = map.renames.values().cloned().collect();
            let mut measured: BTreeSet<PredKey> =
                map.renames.keys().cloned().collect();
            measured.extend(guards.iter().cloned());
            (pa, GenOpts { lg: Some(LgSets { guards, measured }) })
        }
    };
    validate_shape(&target, cert)?;
    let reach = reachable_preds(&target, &target.queries);
    let cs = gen_rigid(&target, &reach, &opts)
        .map_err(|Inapplicable(m)| CertError::Inapplicable(m))?;

    let val = |s: &SymbolId| cert.lookup(s) as i128;
    let constraints: Vec<CheckedConstraint> =
        cs.iter().map(|c| evaluate_constraint(c, &val)).collect();
    let failures = constraints.iter().filter(|c| !c.ok).count();
    Ok(CertReport {
        role: cert.role,
        bound: cert.bound,
        total: constraints.len(),
        failures,
        constraints,
    })
}

/// Evaluate one symbolic constraint under a fixed symbol valuation.
pub(crate) fn evaluate_constraint(
    c: &super::gen::SymConstraint,
    val: &dyn Fn(&SymbolId) -> i128,
) -> CheckedConstraint {
    let (ok, text, violation) = match eliminate(c) {
        Eliminated::Zero(s, _) => {
            let v = val(&s);
            (v == 0, format!("{s} = 0"), (v != 0).then(|| format!("{s} = {v}")))
        }
        Eliminated::NonZero(s, _) => {
            let v = val(&s);
            (v >= 1, format!("{s} >= 1"), (v < 1).then(|| format!("{s} = {v}")))
        }
        Eliminated::Num { alts, .. } => {
            let nc = NumConstraint { origins: vec![c.origin.clone()], alts };
            (nc.satisfied_by(val), nc.text(), nc.witness_violation(val))
        }
    };
    CheckedConstraint { origin: c.origin.clone(), text, ok, violation }
}

/// The rendered (post-elimination) form of a constraint, without a
/// valuation to judge it by.
pub(crate) fn constraint_text(c: &super::gen::SymConstraint) -> String {
    match eliminate(c) {
        Eliminated::Zero(s, _) => format!("{s} = 0"),
        Eliminated::NonZero(s, _) => format!("{s} >= 1"),
        Eliminated::Num { alts, .. } => {
            NumConstraint { origins: vec![c.origin.clone()], alts }.text()
        }
    }
}

fn validate_shape(target: &Program, cert: &Certificate) -> Result<(), CertError> {
    let bad = |m: String| Err(CertError::BadShape(m));
    for (key, v) in &cert.functor_coeffs {
        let Some((name, ar)) = parse_key(key) else {
            return bad(format!("functor key {key:?} is not name/arity"));
        };
        let f = FuncKey::new(name, ar);
        if !target.functors.contains(&f) {
            return bad(format!("functor {f} does not occur in the program"));
        }
        if v.len() != ar + 1 {
            return bad(format!(
                "functor {f} needs {} coefficients, got {}",
                ar + 1,
                v.len()
            ));
        }
    }
    for (which, coeffs, extra) in [
        ("level", &cert.pred_coeffs, 0),
        ("size", &cert.ext_pred_coeffs, 1),
    ] {
        for (key, v) in coeffs {
            let Some((name, ar)) = parse_key(key) else {
                return bad(format!("predicate key {key:?} is not name/arity"));
            };
            let p = PredKey::new(name, ar);
            if !target.preds.contains(&p) || is_builtin(&p) {
                return bad(format!("{which} coefficients for unknown predicate {p}"));
            }
            if v.len() != ar + extra {
                return bad(format!(
                    "{which} vector for {p} needs {} coefficients, got {}",
                    ar + extra,
                    v.len()
                ));
            }
        }
    }
    Ok(())
}

fn parse_key(s: &str) -> Option<(String, usize)> {
    let (name, ar) = s.rsplit_once('/')?;
    if name.is_empty() {
        return None;
    }
    Some((name.to_string(), ar.parse().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_program, Mode, ParseOptions};

    fn parse(src: &str) -> Program {
        parse_program(src, &ParseOptions { default_mode: Some(Mode::In) }).unwrap()
    }

    const FACTS: &str = ":- mode p(i,o).\np(a,b).\n\n:- query p(a,Y).\n";

    fn blank(p: &Program, role: Role) -> Certificate {
        certificate_from_mapping(
            p,
            role,
            2,
            program_fingerprint(p),
            &BTreeMap::new(),
        )
    }

    #[test]
    fn roles_serialize_kebab_case() {
        let j = serde_json::to_string(&Role::ModularComponent).unwrap();
        assert_eq!(j, "\"modular-component\"");
        assert_eq!(serde_json::to_string(&Role::Lg).unwrap(), "\"lg\"");
    }

    #[test]
    fn missing_keys_default_to_zero() {
        let cert = Certificate {
            fingerprint: String::new(),
            bound: 1,
            functor_coeffs: BTreeMap::new(),
            pred_coeffs: BTreeMap::from([("p/2".into(), vec![3, 0])]),
            ext_pred_coeffs: BTreeMap::new(),
            role: Role::Quasi,
        };
        let p = PredKey::new("p", 2);
        assert_eq!(cert.lookup(&SymbolId::Pred(p.clone(), 1)), 3);
        assert_eq!(cert.lookup(&SymbolId::Pred(p.clone(), 2)), 0);
        assert_eq!(cert.lookup(&SymbolId::ExtPred(p, 0)), 0);
        assert_eq!(cert.lookup(&SymbolId::Functor(FuncKey::new(".", 2), 1)), 0);
    }

    #[test]
    fn fingerprint_tracks_the_program_text() {
        let p1 = parse(FACTS);
        let p2 = parse(":- mode p(i,o).\np(a,c).\n\n:- query p(a,Y).\n");
        assert_ne!(program_fingerprint(&p1), program_fingerprint(&p2));
        let cert = blank(&p1, Role::Quasi);
        assert!(matches!(
            check_certificate(&p2, &cert),
            Err(CertError::FingerprintMismatch { .. })
        ));
    }

    #[test]
    fn fact_program_accepts_the_zero_certificate() {
        let p = parse(FACTS);
        let rep = check_certificate(&p, &blank(&p, Role::Quasi)).unwrap();
        assert!(rep.ok(), "{:?}", rep.constraints);
        // and the modular role checks the same conditions
        let rep2 =
            check_certificate(&p, &blank(&p, Role::ModularComponent)).unwrap();
        assert_eq!(rep.total, rep2.total);
    }

    #[test]
    fn shape_violations_are_rejected() {
        let p = parse(FACTS);
        let mut cert = blank(&p, Role::Quasi);
        cert.pred_coeffs.insert("p/2".into(), vec![1]);
        assert!(matches!(
            check_certificate(&p, &cert),
            Err(CertError::BadShape(_))
        ));
        let mut cert = blank(&p, Role::Quasi);
        cert.functor_coeffs.insert("f/1".into(), vec![0, 0]);
        assert!(matches!(
            check_certificate(&p, &cert),
            Err(CertError::BadShape(_))
        ));
        let mut cert = blank(&p, Role::Quasi);
        cert.ext_pred_coeffs.insert("nope".into(), vec![]);
        assert!(matches!(
            check_certificate(&p, &cert),
            Err(CertError::BadShape(_))
        ));
    }

    #[test]
    fn lg_role_checks_the_transformed_program() {
        // p(f(X)) :- p(X) with p tabled: LG needs no decrease on the
        // recursive call (guards only), so the zero certificate minus the
        // ≠0 inputs fails exactly on those
        let src = ":- table p/1.\n:- mode p(i).\np(a).\np(f(X)) :- p(X).\n\n:- query p(a).\n";
        let p = parse(src);
        let cert = blank(&p, Role::Lg);
        let rep = check_certificate(&p, &cert).unwrap();
        // the guard predicate's constraints are present in the report
        assert!(rep.constraints.iter().any(|c| c.text.contains("p__a")));
    }
}
