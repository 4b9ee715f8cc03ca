//! Recursive-descent parser for `.tlp` programs and standalone goals.

use std::collections::BTreeMap;

use super::lexer::{tokenize, Tok, Token};
use super::{
    is_builtin, Atom, Clause, Cst, Mode, PredKey, Program, Query, SyntaxError, Term, VarId, EQ,
    GENERATED_SUFFIX, INTEGER,
};

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Mode assumed for predicates that have no declaration. `None` makes a
    /// missing declaration an error.
    pub default_mode: Option<Mode>,
}

/// Clause-local variable namespace. `_` is fresh at every occurrence.
struct VarCtx {
    names: Vec<String>,
    map: BTreeMap<String, VarId>,
}

impl VarCtx {
    fn new() -> Self {
        VarCtx { names: Vec::new(), map: BTreeMap::new() }
    }

    fn get(&mut self, name: &str) -> VarId {
        if name == "_" {
            let id = self.names.len();
            self.names.push("_".into());
            return id;
        }
        if let Some(&id) = self.map.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.map.insert(name.to_string(), id);
        id
    }
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> SyntaxError {
        let t = self.peek();
        SyntaxError::Syntax { line: t.line, col: t.col, msg: msg.into() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), SyntaxError> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn parse_term(&mut self, ctx: &mut VarCtx) -> Result<Term, SyntaxError> {
        match self.peek().tok.clone() {
            Tok::Var(name) => {
                self.bump();
                Ok(Term::Var(ctx.get(&name)))
            }
            Tok::Int(v) => {
                self.bump();
                Ok(Term::Const(Cst::Int(v)))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek().tok == Tok::LParen {
                    self.bump();
                    let mut args = vec![self.parse_term(ctx)?];
                    while self.peek().tok == Tok::Comma {
                        self.bump();
                        args.push(self.parse_term(ctx)?);
                    }
                    self.expect(Tok::RParen, "')'")?;
                    Ok(Term::App(name, args))
                } else {
                    Ok(Term::Const(Cst::Name(name)))
                }
            }
            Tok::LBracket => {
                self.bump();
                if self.peek().tok == Tok::RBracket {
                    self.bump();
                    return Ok(Term::nil());
                }
                let mut items = vec![self.parse_term(ctx)?];
                while self.peek().tok == Tok::Comma {
                    self.bump();
                    items.push(self.parse_term(ctx)?);
                }
                let tail = if self.peek().tok == Tok::Bar {
                    self.bump();
                    self.parse_term(ctx)?
                } else {
                    Term::nil()
                };
                self.expect(Tok::RBracket, "']'")?;
                Ok(items.into_iter().rev().fold(tail, |acc, it| Term::cons(it, acc)))
            }
            _ => Err(self.err("expected a term")),
        }
    }

    /// An atom is `p`, `p(t1,…,tn)`, or the infix equation `t1 = t2`.
    fn parse_atom(&mut self, ctx: &mut VarCtx) -> Result<Atom, SyntaxError> {
        let (line, col) = (self.peek().line, self.peek().col);
        let t = self.parse_term(ctx)?;
        if self.peek().tok == Tok::Eq {
            self.bump();
            let rhs = self.parse_term(ctx)?;
            return Ok(Atom { pred: EQ.into(), args: vec![t, rhs] });
        }
        match t {
            Term::Const(Cst::Name(name)) if name != "[]" => Ok(Atom { pred: name, args: vec![] }),
            Term::App(name, args) if name != "." => Ok(Atom { pred: name, args }),
            _ => Err(SyntaxError::Syntax { line, col, msg: "expected an atom".into() }),
        }
    }

    fn parse_clause(&mut self, prog: &mut Program) -> Result<(), SyntaxError> {
        let mut ctx = VarCtx::new();
        let head = self.parse_atom(&mut ctx)?;
        let mut body = Vec::new();
        match self.peek().tok.clone() {
            Tok::Dot => {
                self.bump();
            }
            Tok::ColonDash => {
                self.bump();
                body.push(self.parse_atom(&mut ctx)?);
                while self.peek().tok == Tok::Comma {
                    self.bump();
                    body.push(self.parse_atom(&mut ctx)?);
                }
                self.expect(Tok::Dot, "'.'")?;
            }
            _ => return Err(self.err("expected '.' or ':-'")),
        }
        if is_builtin(&head.key()) {
            return Err(SyntaxError::BuiltinHead(head.key()));
        }
        prog.clauses.push(Clause { head, body, var_names: ctx.names });
        Ok(())
    }

    fn parse_directive(&mut self, prog: &mut Program) -> Result<(), SyntaxError> {
        self.expect(Tok::ColonDash, "':-'")?;
        let (line, col) = (self.peek().line, self.peek().col);
        let word = match self.peek().tok.clone() {
            Tok::Ident(w) => w,
            _ => return Err(self.err("expected a directive")),
        };
        self.bump();
        match word.as_str() {
            "table" => loop {
                let name = match self.peek().tok.clone() {
                    Tok::Ident(n) => {
                        self.bump();
                        n
                    }
                    _ => return Err(self.err("expected a predicate name")),
                };
                self.expect(Tok::Slash, "'/'")?;
                let arity = match self.peek().tok.clone() {
                    Tok::Int(v) if v >= 0 => {
                        self.bump();
                        v as usize
                    }
                    _ => return Err(self.err("expected an arity")),
                };
                let key = PredKey::new(name, arity);
                if is_builtin(&key) {
                    return Err(SyntaxError::Syntax {
                        line,
                        col,
                        msg: format!("builtin {key} cannot be tabled"),
                    });
                }
                prog.tabling.insert(key);
                if self.peek().tok == Tok::Comma {
                    self.bump();
                    continue;
                }
                self.expect(Tok::Dot, "'.'")?;
                return Ok(());
            },
            "mode" => {
                let name = match self.peek().tok.clone() {
                    Tok::Ident(n) => {
                        self.bump();
                        n
                    }
                    // `=`/2 may be re-moded; its default is (i,o).
                    Tok::Eq => {
                        self.bump();
                        EQ.to_string()
                    }
                    _ => return Err(self.err("expected a predicate name")),
                };
                let mut modes = Vec::new();
                if self.peek().tok == Tok::LParen {
                    self.bump();
                    loop {
                        match self.peek().tok.clone() {
                            Tok::Ident(m) if m == "i" => {
                                self.bump();
                                modes.push(Mode::In);
                            }
                            Tok::Ident(m) if m == "o" => {
                                self.bump();
                                modes.push(Mode::Out);
                            }
                            _ => return Err(self.err("expected 'i' or 'o'")),
                        }
                        if self.peek().tok == Tok::Comma {
                            self.bump();
                            continue;
                        }
                        break;
                    }
                    self.expect(Tok::RParen, "')'")?;
                }
                self.expect(Tok::Dot, "'.'")?;
                let key = PredKey::new(name, modes.len());
                if key.name == INTEGER && key.arity == 1 {
                    return Err(SyntaxError::Syntax {
                        line,
                        col,
                        msg: "the mode of integer/1 is fixed".into(),
                    });
                }
                if prog.modes.contains_key(&key) {
                    return Err(SyntaxError::DuplicateMode(key));
                }
                prog.modes.insert(key, modes);
                Ok(())
            }
            "query" => {
                let mut ctx = VarCtx::new();
                let atom = self.parse_atom(&mut ctx)?;
                self.expect(Tok::Dot, "'.'")?;
                prog.queries.push(Query { atom, var_names: ctx.names });
                Ok(())
            }
            _ => Err(SyntaxError::Syntax {
                line,
                col,
                msg: format!("unknown directive '{word}'"),
            }),
        }
    }
}

/// Parse a full `.tlp` source. Inventories are rebuilt, tabling directives
/// for unknown predicates are kept next to a warning, and every non-builtin
/// predicate must end up with a mode (declared or defaulted).
pub fn parse_program(src: &str, opts: &ParseOptions) -> Result<Program, SyntaxError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks: &toks, pos: 0 };
    let mut prog = Program::default();
    while p.peek().tok != Tok::Eof {
        if p.peek().tok == Tok::ColonDash {
            p.parse_directive(&mut prog)?;
        } else {
            p.parse_clause(&mut prog)?;
        }
    }
    prog.rebuild_inventory();
    finish(&mut prog, opts)?;
    Ok(prog)
}

fn finish(prog: &mut Program, opts: &ParseOptions) -> Result<(), SyntaxError> {
    for k in &prog.preds {
        if k.name.ends_with(GENERATED_SUFFIX) {
            prog.warnings
                .push(format!("predicate {k} uses the reserved suffix {GENERATED_SUFFIX}"));
        }
    }
    for k in &prog.functors {
        if k.name.ends_with(GENERATED_SUFFIX) {
            prog.warnings
                .push(format!("functor {k} uses the reserved suffix {GENERATED_SUFFIX}"));
        }
    }
    for t in &prog.tabling {
        if !prog.preds.contains(t) {
            prog.warnings.push(format!("table directive for unknown predicate {t}"));
        }
    }
    for key in prog.modes.keys() {
        if is_builtin(key) || prog.preds.contains(key) {
            continue;
        }
        if let Some(used) = prog.preds.iter().find(|q| q.name == key.name) {
            return Err(SyntaxError::ModeArityMismatch {
                declared: key.clone(),
                name: key.name.clone(),
                used: used.arity,
            });
        }
        prog.warnings.push(format!("mode declared for unknown predicate {key}"));
    }
    let missing: Vec<PredKey> = prog
        .preds
        .iter()
        .filter(|k| !is_builtin(k) && !prog.modes.contains_key(*k))
        .cloned()
        .collect();
    for k in missing {
        match opts.default_mode {
            Some(m) => {
                prog.modes.insert(k.clone(), vec![m; k.arity]);
            }
            None => return Err(SyntaxError::MissingMode(k)),
        }
    }
    Ok(())
}

/// Parse a standalone goal atom (trailing `.` optional). The predicate must
/// occur in the program or be a builtin.
pub fn parse_goal(src: &str, prog: &Program) -> Result<Query, SyntaxError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks: &toks, pos: 0 };
    let mut ctx = VarCtx::new();
    let atom = p.parse_atom(&mut ctx)?;
    if p.peek().tok == Tok::Dot {
        p.bump();
    }
    if p.peek().tok != Tok::Eof {
        return Err(p.err("trailing input after goal"));
    }
    let key = atom.key();
    if !is_builtin(&key) && !prog.preds.contains(&key) {
        return Err(SyntaxError::UnknownPredicate(key));
    }
    Ok(Query { atom, var_names: ctx.names })
}
