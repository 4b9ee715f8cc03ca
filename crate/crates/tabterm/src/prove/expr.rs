//! Symbolic coefficients and the linear forms built from them.
//!
//! A `SymExpr` is a linear form over the universal (clause) variables whose
//! coefficients — and constant part — are polynomials with integer
//! coefficients over [`SymbolId`]s. Nested functors multiply coefficients,
//! which is where non-linear monomials such as `path_3*._1` come from.
//! Generation only ever produces natural coefficients; subtraction during
//! elimination is why the polynomial type is signed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::syntax::{FuncKey, PredKey, VarId};

/// One unknown of the constraint system.
///
/// The derived order (functor coefficients first, then predicate, then
/// extended-predicate coefficients, each sorted by key and index) is the
/// fixed symbol order used for lexicographic tie-breaking in the solver.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolId {
    /// `f_i` for an inventory functor f/m, index 0..=m; index 0 is the
    /// constant contribution of the constructor.
    Functor(FuncKey, usize),
    /// `p_i` for a predicate p/n, index 1..=n: the level-mapping weight of
    /// argument position i.
    Pred(PredKey, usize),
    /// `p_i^e` for a predicate p/n, index 0..=n: the interargument-relation
    /// coefficients (index 0 is the constant offset).
    ExtPred(PredKey, usize),
}

impl fmt::Display for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolId::Functor(k, i) => write!(f, "{}_{}", k.name, i),
            SymbolId::Pred(k, i) => write!(f, "{}_{}", k.name, i),
            SymbolId::ExtPred(k, i) => write!(f, "{}_{}^e", k.name, i),
        }
    }
}

/// A product of symbols, kept sorted; the empty product is the constant 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<SymbolId>);

impl Monomial {
    pub fn unit() -> Self {
        Monomial(Vec::new())
    }

    pub fn sym(s: SymbolId) -> Self {
        Monomial(vec![s])
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        v.sort();
        Monomial(v)
    }

    pub fn symbols(&self) -> &[SymbolId] {
        &self.0
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, s: &SymbolId) -> bool {
        self.0.contains(s)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join("*"))
    }
}

/// A polynomial with (signed) integer coefficients over symbol monomials.
/// No entry has coefficient zero.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct SPoly(BTreeMap<Monomial, i64>);

impl SPoly {
    pub fn zero() -> Self {
        SPoly(BTreeMap::new())
    }

    pub fn constant(n: i64) -> Self {
        let mut p = SPoly::zero();
        p.insert(Monomial::unit(), n);
        p
    }

    pub fn sym(s: SymbolId) -> Self {
        let mut p = SPoly::zero();
        p.insert(Monomial::sym(s), 1);
        p
    }

    fn insert(&mut self, m: Monomial, c: i64) {
        if c == 0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.0.entry(m) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == 0 {
                    e.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, other: &SPoly) -> SPoly {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.insert(m.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &SPoly) -> SPoly {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.insert(m.clone(), -*c);
        }
        out
    }

    pub fn mul(&self, other: &SPoly) -> SPoly {
        let mut out = SPoly::zero();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &other.0 {
                out.insert(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, i64)> {
        self.0.iter().map(|(m, c)| (m, *c))
    }

    pub fn symbols(&self) -> BTreeSet<SymbolId> {
        let mut out = BTreeSet::new();
        for m in self.0.keys() {
            out.extend(m.symbols().iter().cloned());
        }
        out
    }

    /// The constant term (coefficient of the empty monomial).
    pub fn constant_term(&self) -> i64 {
        self.0.get(&Monomial::unit()).copied().unwrap_or(0)
    }

    pub fn all_coeffs_nonneg(&self) -> bool {
        self.0.values().all(|c| *c >= 0)
    }

    pub fn all_coeffs_nonpos(&self) -> bool {
        self.0.values().all(|c| *c <= 0)
    }

    /// Drops every monomial that mentions a symbol from `zeros`.
    pub fn without_zeroed(&self, zeros: &BTreeSet<SymbolId>) -> SPoly {
        let mut out = SPoly::zero();
        for (m, c) in &self.0 {
            if m.symbols().iter().any(|s| zeros.contains(s)) {
                continue;
            }
            out.insert(m.clone(), *c);
        }
        out
    }

    pub fn eval(&self, val: &dyn Fn(&SymbolId) -> i128) -> i128 {
        let mut sum: i128 = 0;
        for (m, c) in &self.0 {
            let mut prod: i128 = 1;
            for s in m.symbols() {
                prod *= val(s);
            }
            sum += (*c as i128) * prod;
        }
        sum
    }
}

impl fmt::Display for SPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (m, c) in &self.0 {
            let (sign, mag) = if *c < 0 { ("-", -*c) } else { ("+", *c) };
            if first {
                if sign == "-" {
                    f.write_str("-")?;
                }
                first = false;
            } else {
                write!(f, " {sign} ")?;
            }
            if m.is_unit() {
                write!(f, "{mag}")?;
            } else if mag == 1 {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag}*{m}")?;
            }
        }
        Ok(())
    }
}

/// A linear form `Σ coeffs[v]·v + constant` over universal variables.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymExpr {
    pub coeffs: BTreeMap<VarId, SPoly>,
    pub constant: SPoly,
}

impl SymExpr {
    pub fn zero() -> Self {
        SymExpr::default()
    }

    pub fn var(v: VarId) -> Self {
        let mut e = SymExpr::zero();
        e.coeffs.insert(v, SPoly::constant(1));
        e
    }

    pub fn from_poly(p: SPoly) -> Self {
        SymExpr { coeffs: BTreeMap::new(), constant: p }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(SPoly::is_zero) && self.constant.is_zero()
    }

    pub fn add(&self, other: &SymExpr) -> SymExpr {
        let mut out = self.clone();
        for (v, p) in &other.coeffs {
            let q = match out.coeffs.get(v) {
                Some(cur) => cur.add(p),
                None => p.clone(),
            };
            if q.is_zero() {
                out.coeffs.remove(v);
            } else {
                out.coeffs.insert(*v, q);
            }
        }
        out.constant = out.constant.add(&other.constant);
        out
    }

    pub fn sub(&self, other: &SymExpr) -> SymExpr {
        let mut out = self.clone();
        for (v, p) in &other.coeffs {
            let q = match out.coeffs.get(v) {
                Some(cur) => cur.sub(p),
                None => SPoly::zero().sub(p),
            };
            if q.is_zero() {
                out.coeffs.remove(v);
            } else {
                out.coeffs.insert(*v, q);
            }
        }
        out.constant = out.constant.sub(&other.constant);
        out
    }

    /// Multiplies the whole form by a symbol polynomial.
    pub fn mul_poly(&self, p: &SPoly) -> SymExpr {
        let mut out = SymExpr::zero();
        for (v, q) in &self.coeffs {
            let r = q.mul(p);
            if !r.is_zero() {
                out.coeffs.insert(*v, r);
            }
        }
        out.constant = self.constant.mul(p);
        out
    }

    pub fn symbols(&self) -> BTreeSet<SymbolId> {
        let mut out = self.constant.symbols();
        for p in self.coeffs.values() {
            out.extend(p.symbols());
        }
        out
    }

    pub fn eval(
        &self,
        var: &dyn Fn(VarId) -> i128,
        val: &dyn Fn(&SymbolId) -> i128,
    ) -> i128 {
        let mut sum = self.constant.eval(val);
        for (v, p) in &self.coeffs {
            sum += p.eval(val) * var(*v);
        }
        sum
    }

    pub fn display_with(&self, name: &dyn Fn(VarId) -> String) -> String {
        let mut parts: Vec<String> = Vec::new();
        for (v, p) in &self.coeffs {
            if p.is_zero() {
                continue;
            }
            parts.push(format!("({p})*{}", name(*v)));
        }
        if !self.constant.is_zero() || parts.is_empty() {
            parts.push(format!("{}", self.constant));
        }
        parts.join(" + ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fk(name: &str, arity: usize) -> FuncKey {
        FuncKey::new(name, arity)
    }

    #[test]
    fn poly_arithmetic_cancels() {
        let a = SymbolId::Functor(fk("f", 1), 0);
        let p = SPoly::sym(a.clone()).add(&SPoly::constant(2));
        let q = p.sub(&SPoly::sym(a));
        assert_eq!(q, SPoly::constant(2));
        assert!(p.sub(&p).is_zero());
    }

    #[test]
    fn poly_product_orders_monomials() {
        let a = SymbolId::Functor(fk("f", 1), 0);
        let b = SymbolId::Functor(fk("g", 1), 1);
        let left = SPoly::sym(a.clone()).mul(&SPoly::sym(b.clone()));
        let right = SPoly::sym(b).mul(&SPoly::sym(a));
        assert_eq!(left, right);
        assert_eq!(left.terms().count(), 1);
    }

    #[test]
    fn eval_matches_structure() {
        let a = SymbolId::Functor(fk("f", 1), 0);
        let b = SymbolId::Functor(fk("f", 1), 1);
        // 2*a*b + 3
        let p = SPoly::sym(a.clone())
            .mul(&SPoly::sym(b.clone()))
            .add(&SPoly::sym(a.clone()).mul(&SPoly::sym(b.clone())))
            .add(&SPoly::constant(3));
        let v = |s: &SymbolId| if *s == a { 5 } else { 7 };
        assert_eq!(p.eval(&v), 2 * 5 * 7 + 3);
    }

    #[test]
    fn display_signs() {
        let a = SymbolId::Pred(PredKey::new("p", 1), 1);
        let b = SymbolId::Pred(PredKey::new("q", 1), 1);
        let p = SPoly::sym(a).sub(&SPoly::sym(b));
        assert_eq!(p.to_string(), "p_1 - q_1");
    }

    #[test]
    fn symexpr_subtraction() {
        let x: VarId = 0;
        let a = SPoly::sym(SymbolId::Pred(PredKey::new("p", 1), 1));
        let e = SymExpr::var(x).mul_poly(&a);
        let d = e.sub(&e);
        assert!(d.is_zero());
    }
}
