//! Canonical renderer. Output re-parses to the same program: directives
//! first (tabling, then modes, both sorted), clauses in order, queries last.

use std::collections::BTreeMap;

use super::{Atom, Clause, Cst, Mode, Program, Query, Term, VarId, EQ};

pub fn render_program(p: &Program) -> String {
    let mut out = String::new();
    for t in &p.tabling {
        out.push_str(&format!(":- table {}/{}.\n", t.name, t.arity));
    }
    for (k, modes) in &p.modes {
        if modes.is_empty() {
            out.push_str(&format!(":- mode {}.\n", k.name));
        } else {
            let ms: Vec<&str> =
                modes.iter().map(|m| if *m == Mode::In { "i" } else { "o" }).collect();
            out.push_str(&format!(":- mode {}({}).\n", k.name, ms.join(",")));
        }
    }
    if (!p.tabling.is_empty() || !p.modes.is_empty()) && !p.clauses.is_empty() {
        out.push('\n');
    }
    for c in &p.clauses {
        out.push_str(&clause_to_string(c));
        out.push('\n');
    }
    if !p.queries.is_empty() {
        out.push('\n');
    }
    for q in &p.queries {
        let nm = namer(&q.var_names);
        out.push_str(&format!(":- query {}.\n", atom_to_string(&q.atom, &nm)));
    }
    out
}

pub(crate) fn clause_to_string(c: &Clause) -> String {
    let nm = namer(&c.var_names);
    let head = atom_to_string(&c.head, &nm);
    if c.body.is_empty() {
        format!("{head}.")
    } else {
        let body: Vec<String> = c.body.iter().map(|a| atom_to_string(a, &nm)).collect();
        format!("{head} :- {}.", body.join(", "))
    }
}

pub(crate) fn atom_to_string(a: &Atom, nm: &dyn Fn(VarId) -> String) -> String {
    if a.pred == EQ && a.args.len() == 2 {
        return format!(
            "{} = {}",
            term_to_string(&a.args[0], nm),
            term_to_string(&a.args[1], nm)
        );
    }
    if a.args.is_empty() {
        a.pred.clone()
    } else {
        let args: Vec<String> = a.args.iter().map(|t| term_to_string(t, nm)).collect();
        format!("{}({})", a.pred, args.join(","))
    }
}

pub(crate) fn term_to_string(t: &Term, nm: &dyn Fn(VarId) -> String) -> String {
    match t {
        Term::Var(v) => nm(*v),
        Term::Const(c) => c.to_string(),
        Term::App(f, args) if f == "." && args.len() == 2 => {
            let mut items = vec![term_to_string(&args[0], nm)];
            let mut tail = &args[1];
            loop {
                match tail {
                    Term::App(f2, a2) if f2 == "." && a2.len() == 2 => {
                        items.push(term_to_string(&a2[0], nm));
                        tail = &a2[1];
                    }
                    Term::Const(Cst::Name(n)) if n == "[]" => {
                        return format!("[{}]", items.join(","));
                    }
                    other => {
                        return format!("[{}|{}]", items.join(","), term_to_string(other, nm));
                    }
                }
            }
        }
        Term::App(f, args) => {
            let args: Vec<String> = args.iter().map(|x| term_to_string(x, nm)).collect();
            format!("{}({})", f, args.join(","))
        }
    }
}

fn namer(names: &[String]) -> impl Fn(VarId) -> String + '_ {
    move |v| names.get(v).cloned().unwrap_or_else(|| format!("_G{v}"))
}

/// Render the bindings a computed answer gives to a query's named variables,
/// e.g. `Y = b, L = [a,b]`. Ground queries yield `true`. Variables inside
/// the answer (non-ground answers) print as `_Gn`.
pub fn render_query_binding(q: &Query, ans: &Atom) -> String {
    let mut bound: BTreeMap<VarId, Term> = BTreeMap::new();
    for (qt, at) in q.atom.args.iter().zip(ans.args.iter()) {
        collect_bindings(qt, at, &mut bound);
    }
    let generic = |v: VarId| format!("_G{v}");
    let mut parts = Vec::new();
    for (v, t) in &bound {
        let name = q.var_names.get(*v).cloned().unwrap_or_default();
        if name == "_" || name.is_empty() {
            continue;
        }
        parts.push(format!("{name} = {}", term_to_string(t, &generic)));
    }
    if parts.is_empty() {
        "true".into()
    } else {
        parts.join(", ")
    }
}

fn collect_bindings(q: &Term, a: &Term, out: &mut BTreeMap<VarId, Term>) {
    match (q, a) {
        (Term::Var(v), _) => {
            out.entry(*v).or_insert_with(|| a.clone());
        }
        (Term::App(_, qa), Term::App(_, aa)) => {
            for (x, y) in qa.iter().zip(aa.iter()) {
                collect_bindings(x, y, out);
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_goal, parse_program, ParseOptions};
    use super::*;

    #[test]
    fn rendering_round_trips() {
        let src = "\
:- table path/4.
:- mode edge(i,i,o).
:- mode path(i,i,o,o).

path(X,Es,Y,[X,Y]) :- edge(X,Es,Y).
path(X,Es,Y,[X|P]) :- edge(X,Es,Z), path(Z,Es,Y,P).
edge(X,[e(X,Y)|_],Y).
edge(X,[_|Es],Y) :- edge(X,Es,Y).

:- query path(a,[e(a,b),e(b,a)],Y,L).
";
        let opts = ParseOptions::default();
        let p1 = parse_program(src, &opts).unwrap();
        let s1 = render_program(&p1);
        let p2 = parse_program(&s1, &opts).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(s1, render_program(&p2));
    }

    #[test]
    fn list_sugar_survives() {
        let src = ":- mode p(i).\np([1,2|T]) :- p(T), p([]).";
        let p = parse_program(src, &ParseOptions::default()).unwrap();
        let s = render_program(&p);
        assert!(s.contains("p([1,2|T])"));
        assert!(s.contains("p([])"));
    }

    #[test]
    fn eq_renders_infix() {
        let src = ":- mode p(i,o).\np(X,Y) :- Y = f(X).";
        let p = parse_program(src, &ParseOptions::default()).unwrap();
        assert!(render_program(&p).contains("Y = f(X)"));
    }

    #[test]
    fn query_bindings_print_named_variables_only() {
        let src = ":- mode p(i,o,o).\np(a,b,c).";
        let prog = parse_program(src, &ParseOptions::default()).unwrap();
        let q = parse_goal("p(a, Y, _)", &prog).unwrap();
        let ans = Atom {
            pred: "p".into(),
            args: vec![
                Term::Const(Cst::Name("a".into())),
                Term::Const(Cst::Name("b".into())),
                Term::Const(Cst::Name("c".into())),
            ],
        };
        assert_eq!(render_query_binding(&q, &ans), "Y = b");
        let ground = parse_goal("p(a,b,c)", &prog).unwrap();
        assert_eq!(render_query_binding(&ground, &ans), "true");
    }
}
