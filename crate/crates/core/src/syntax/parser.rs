//! Recursive-descent parser for `.rl` programs.
//!
//! The grammar is keyword- and brace-delimited; see `docs/grammar.md`.

use super::ast::*;
use super::diag::Diagnostic;
use super::lexer::{tokenize, Tok, Token};
use crate::value::Value;

type PResult<T> = Result<T, Diagnostic>;

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Parameters in scope (method parameters plus `self` inside methods).
    params: Vec<String>,
    in_method: bool,
    anon: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> PResult<Parser> {
        Ok(Parser { toks: tokenize(src)?, pos: 0, params: Vec::new(), in_method: false, anon: 0 })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub(crate) fn loc(&self) -> Loc {
        self.toks[self.pos].loc
    }

    pub(crate) fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn at_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == k)
    }

    pub(crate) fn eat_sym(&mut self, s: &str) -> bool {
        if self.at_sym(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.at_kw(k) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub(crate) fn err<T>(&self, what: &str) -> PResult<T> {
        Err(Diagnostic::new("syntax", format!("expected {what}, found {}", self.peek()), self.loc()))
    }

    pub(crate) fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(&format!("'{s}'"))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.err(&format!("'{k}'"))
        }
    }

    pub(crate) fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => self.err("identifier"),
        }
    }

    /// Literal value token (with optional leading minus for integers).
    pub(crate) fn literal(&mut self) -> Option<Value> {
        let v = match self.peek() {
            Tok::Int(n) => Value::Int(*n),
            Tok::Str(s) => Value::str(s),
            Tok::Kw("True") => Value::Bool(true),
            Tok::Kw("False") => Value::Bool(false),
            Tok::Kw("None") => Value::None,
            Tok::Sym("-") => {
                if let Tok::Int(n) = self.peek_at(1) {
                    let v = Value::Int(-*n);
                    self.advance();
                    self.advance();
                    return Some(v);
                }
                return None;
            }
            _ => return None,
        };
        self.advance();
        Some(v)
    }

    // ---------- program structure ----------

    pub(crate) fn program(&mut self) -> PResult<Program> {
        let mut rulesets = Vec::new();
        let mut classes = Vec::new();
        let mut main = Vec::new();
        let loc = self.loc();
        while *self.peek() != Tok::Eof {
            if self.at_kw("rules") {
                rulesets.push(self.ruleset()?);
            } else if self.at_kw("class") {
                classes.push(self.class()?);
            } else if self.eat_sym(";") {
            } else {
                main.push(self.stmt()?);
            }
        }
        Ok(Program { rulesets, classes, main: Stmt::seq(main, loc) })
    }

    fn ruleset(&mut self) -> PResult<RuleSetDecl> {
        let loc = self.loc();
        self.expect_kw("rules")?;
        let name = self.ident()?;
        let mut params = Vec::new();
        if self.eat_sym("(") {
            if !self.at_sym(")") {
                loop {
                    params.push(self.ident()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
        }
        self.expect_sym("{")?;
        let mut rules = Vec::new();
        while !self.eat_sym("}") {
            if self.eat_sym(";") {
                continue;
            }
            rules.push(self.rule(&params)?);
        }
        if rules.is_empty() {
            return Err(Diagnostic::new("syntax", format!("rule set {name} has no rules"), loc));
        }
        Ok(RuleSetDecl { name, params, rules, loc })
    }

    fn rule(&mut self, params: &[String]) -> PResult<Rule> {
        let loc = self.loc();
        let head = self.atom(params, false)?;
        let mut body = Vec::new();
        if self.eat_kw("if") {
            loop {
                let negated = self.eat_kw("not");
                body.push(Hyp { negated, atom: self.atom(params, true)? });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        let rule = Rule { head, body };
        let unsafe_vars = rule.unsafe_vars();
        if let Some(v) = unsafe_vars.first() {
            return Err(Diagnostic::new("unsafe-rule", format!("unsafe rule: {v} not in any hypothesis"), loc));
        }
        let unsafe_neg = rule.unsafe_negated_vars();
        if let Some(v) = unsafe_neg.first() {
            return Err(Diagnostic::new(
                "unsafe-negation",
                format!("unsafe rule: {v} occurs only in negated hypotheses"),
                loc,
            ));
        }
        Ok(rule)
    }

    fn atom(&mut self, params: &[String], allow_wild: bool) -> PResult<Atom> {
        let pred = if self.eat_kw("self") {
            self.expect_sym(".")?;
            PredRef::SelfField(self.ident()?)
        } else if self.eat_kw("a_gv") {
            self.expect_sym(".")?;
            PredRef::Inst(0, self.ident()?)
        } else {
            let n = self.ident()?;
            if params.contains(&n) {
                PredRef::Param(n)
            } else {
                PredRef::Global(n)
            }
        };
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.at_sym(")") {
            loop {
                if let Some(v) = self.literal() {
                    args.push(Term::Const(v));
                } else if self.at_sym("_") {
                    if !allow_wild {
                        return Err(Diagnostic::new("unsafe-rule", "unsafe rule: wildcard in conclusion", self.loc()));
                    }
                    self.advance();
                    self.anon += 1;
                    args.push(Term::Var(format!("_{}", self.anon)));
                } else {
                    args.push(Term::Var(self.ident()?));
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(Atom { pred, args })
    }

    fn class(&mut self) -> PResult<ClassDecl> {
        let loc = self.loc();
        self.expect_kw("class")?;
        let name = self.ident()?;
        let extends = if self.eat_kw("extends") { Some(self.ident()?) } else { None };
        self.expect_sym("{")?;
        let mut rulesets = Vec::new();
        let mut methods = Vec::new();
        while !self.eat_sym("}") {
            if self.at_kw("rules") {
                rulesets.push(self.ruleset()?);
            } else if self.at_kw("def") || self.at_kw("defun") {
                methods.push(self.method()?);
            } else if self.eat_sym(";") {
            } else {
                return self.err("'rules', 'def' or 'defun'");
            }
        }
        Ok(ClassDecl { name, extends, rulesets, methods, loc })
    }

    fn method(&mut self) -> PResult<MethodDecl> {
        let loc = self.loc();
        let is_fun = self.at_kw("defun");
        self.advance();
        let name = self.ident()?;
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.at_sym(")") {
            loop {
                let p = self.ident()?;
                if params.contains(&p) {
                    return Err(Diagnostic::new("syntax", format!("duplicate parameter {p}"), loc));
                }
                params.push(p);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        self.params = params.clone();
        self.params.push("self".into());
        self.in_method = true;
        let body = if is_fun {
            self.expect_sym("{")?;
            let e = self.expr()?;
            self.eat_sym(";");
            self.expect_sym("}")?;
            MethodBody::Defun(e)
        } else {
            MethodBody::Def(self.block()?)
        };
        self.params.clear();
        self.in_method = false;
        Ok(MethodDecl { name, params, body, loc })
    }

    // ---------- statements ----------

    fn block(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        self.expect_sym("{")?;
        let mut stmts = Vec::new();
        while !self.eat_sym("}") {
            if self.eat_sym(";") {
                continue;
            }
            stmts.push(self.stmt()?);
        }
        Ok(Stmt::seq(stmts, loc))
    }

    pub(crate) fn stmt(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        let kind = match self.peek() {
            Tok::Kw("skip") => {
                self.advance();
                StmtKind::Skip
            }
            Tok::Kw("if") => return self.if_stmt(),
            Tok::Kw("for") => {
                self.advance();
                let it = self.iter()?;
                StmtKind::For(it, Box::new(self.block()?))
            }
            Tok::Kw("while") => {
                self.advance();
                let c = self.expr()?;
                StmtKind::While(c, Box::new(self.block()?))
            }
            Tok::Kw("ifSome") | Tok::Kw("whileSome") => {
                let is_while = self.at_kw("whileSome");
                self.advance();
                let iters = self.iters()?;
                let cond = if self.eat_sym("|") { self.expr()? } else { Expr::lit_bool(true) };
                let body = Box::new(self.block()?);
                if is_while {
                    StmtKind::WhileSome(iters, cond, body)
                } else {
                    StmtKind::IfSome(iters, cond, body)
                }
            }
            Tok::Kw("infer") => StmtKind::Infer(self.infer_call(Vec::new(), None)?),
            _ => return self.simple_stmt(),
        };
        Ok(Stmt::new(kind, loc))
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        self.expect_kw("if")?;
        let c = self.expr()?;
        let then = self.block()?;
        let els = if self.eat_kw("else") {
            if self.at_kw("if") {
                self.if_stmt()?
            } else {
                self.block()?
            }
        } else {
            Stmt::skip(loc)
        };
        Ok(Stmt::new(StmtKind::If(c, Box::new(then), Box::new(els)), loc))
    }

    fn simple_stmt(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        let first = self.postfix()?;
        if self.at_sym(".") && matches!(self.peek_at(1), Tok::Kw("infer")) {
            self.advance();
            return Ok(Stmt::new(StmtKind::Infer(self.infer_call(Vec::new(), Some(first))?), loc));
        }
        if self.at_sym(":=") || self.at_sym(",") {
            let mut targets = vec![first];
            while self.eat_sym(",") {
                targets.push(self.postfix()?);
            }
            for t in &targets {
                if !t.is_variable() {
                    return Err(Diagnostic::new("syntax", "assignment target must be a variable or field", loc));
                }
            }
            self.expect_sym(":=")?;
            return self.assign_rhs(targets, loc);
        }
        match first {
            Expr::Call(recv, m, args) => Ok(Stmt::new(StmtKind::Call(*recv, m, args), loc)),
            _ => Err(Diagnostic::new("syntax", "expected a statement", loc)),
        }
    }

    fn assign_rhs(&mut self, mut targets: Vec<Expr>, loc: Loc) -> PResult<Stmt> {
        let is_infer = self.at_kw("infer")
            || (self.pos_of_infer_after_postfix().is_some());
        if is_infer {
            let recv = if self.at_kw("infer") {
                None
            } else {
                let r = self.postfix()?;
                self.expect_sym(".")?;
                Some(r)
            };
            return Ok(Stmt::new(StmtKind::Infer(self.infer_call(targets, recv)?), loc));
        }
        if targets.len() > 1 {
            return self.multi_assign(targets, loc);
        }
        let target = targets.pop().unwrap();
        self.single_rhs(target, loc)
    }

    /// `t1, ..., tn := e1, ..., en` as n assignments in order. A right side
    /// may not read an earlier target, so the order is unobservable.
    fn multi_assign(&mut self, targets: Vec<Expr>, loc: Loc) -> PResult<Stmt> {
        let n = targets.len();
        let mut stmts = Vec::with_capacity(n);
        for (i, t) in targets.iter().enumerate() {
            if i > 0 {
                self.expect_sym(",")?;
            }
            let s = self.single_rhs(t.clone(), loc)?;
            let mut reads = Vec::new();
            match &s.kind {
                StmtKind::Assign(_, e) => reads.push(e),
                StmtKind::Display(_, items) => reads.extend(items.iter()),
                StmtKind::New(..) => {}
                _ => {
                    return Err(Diagnostic::new(
                        "syntax",
                        "a multiple assignment takes expressions, set displays or new",
                        loc,
                    ))
                }
            }
            let mut clash = false;
            for e in reads {
                super::check::visit_expr(e, &mut |x| clash |= targets[..i].contains(x));
            }
            if clash {
                return Err(Diagnostic::new("syntax", "a right side of a multiple assignment reads an earlier target", loc));
            }
            stmts.push(s);
        }
        Ok(Stmt::new(StmtKind::Seq(stmts), loc))
    }

    fn single_rhs(&mut self, target: Expr, loc: Loc) -> PResult<Stmt> {
        let kind = if self.eat_kw("new") {
            let c = match self.peek().clone() {
                Tok::Ident(c) => {
                    self.advance();
                    c
                }
                _ => return self.err("class name"),
            };
            StmtKind::New(target, c)
        } else if self.at_sym("{") {
            match self.brace_set()? {
                BraceSet::Comp(c) => StmtKind::Comp(target, c),
                BraceSet::Display(items) => StmtKind::Display(target, items),
            }
        } else if let Tok::Kw(k @ ("count" | "sum" | "max" | "min")) = self.peek().clone() {
            self.advance();
            let op = match k {
                "count" => AggOp::Count,
                "sum" => AggOp::Sum,
                "max" => AggOp::Max,
                _ => AggOp::Min,
            };
            self.expect_sym("(")?;
            let src = if self.at_sym("{") {
                match self.brace_set()? {
                    BraceSet::Comp(c) => AggSrc::Comp(c),
                    BraceSet::Display(_) => {
                        return Err(Diagnostic::new("syntax", "aggregate over a set display is not supported", loc))
                    }
                }
            } else {
                AggSrc::Expr(self.expr()?)
            };
            self.expect_sym(")")?;
            StmtKind::Aggregate(target, op, src)
        } else {
            StmtKind::Assign(target, self.expr()?)
        };
        Ok(Stmt::new(kind, loc))
    }

    /// Looks ahead for `<postfix> . infer (` without consuming tokens.
    fn pos_of_infer_after_postfix(&mut self) -> Option<usize> {
        let save = self.pos;
        let found = match self.postfix() {
            Ok(_) => self.at_sym(".") && matches!(self.peek_at(1), Tok::Kw("infer")),
            Err(_) => false,
        };
        let at = self.pos;
        self.pos = save;
        found.then_some(at)
    }

    fn infer_call(&mut self, targets: Vec<Expr>, recv: Option<Expr>) -> PResult<Infer> {
        let loc = self.loc();
        self.expect_kw("infer")?;
        self.expect_sym("(")?;
        let mut queries = Vec::new();
        let mut kwargs: Vec<(String, Expr)> = Vec::new();
        let mut rules = None;
        if !self.at_sym(")") {
            loop {
                if let (Tok::Ident(name), Tok::Sym("=")) = (self.peek().clone(), self.peek_at(1).clone()) {
                    self.advance();
                    self.advance();
                    if kwargs.iter().any(|(k, _)| *k == name) {
                        return Err(Diagnostic::new("syntax", format!("duplicate keyword argument {name}"), loc));
                    }
                    kwargs.push((name, self.expr()?));
                } else if self.at_kw("rules") && matches!(self.peek_at(1), Tok::Sym("=")) {
                    self.advance();
                    self.advance();
                    rules = Some(self.ident()?);
                } else {
                    if rules.is_some() || !kwargs.is_empty() {
                        return Err(Diagnostic::new("syntax", "queries must precede keyword arguments", self.loc()));
                    }
                    let on_self = if self.eat_kw("self") {
                        self.expect_sym(".")?;
                        true
                    } else {
                        false
                    };
                    let pred = self.ident()?;
                    let pattern = if self.at_sym("(") {
                        self.advance();
                        let mut elems = Vec::new();
                        if !self.at_sym(")") {
                            loop {
                                elems.push(self.pat_elem()?);
                                if !self.eat_sym(",") {
                                    break;
                                }
                            }
                        }
                        self.expect_sym(")")?;
                        Some(elems)
                    } else {
                        None
                    };
                    queries.push(Query { pred, on_self, pattern });
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        let rules = match rules {
            Some(r) => r,
            None => return Err(Diagnostic::new("syntax", "infer requires rules=<name>", loc)),
        };
        if !targets.is_empty() && targets.len() != queries.len() {
            return Err(Diagnostic::new(
                "syntax",
                format!("infer has {} targets but {} queries", targets.len(), queries.len()),
                loc,
            ));
        }
        Ok(Infer { targets, recv, queries, kwargs, rules })
    }

    // ---------- iterators and patterns ----------

    fn iters(&mut self) -> PResult<Vec<Iter>> {
        let mut out = vec![self.iter()?];
        while self.eat_sym(",") {
            out.push(self.iter()?);
        }
        Ok(out)
    }

    fn iter(&mut self) -> PResult<Iter> {
        let pat = self.pattern()?;
        self.expect_kw("in")?;
        let src = self.additive()?;
        Ok(Iter { pat, src })
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        let loc = self.loc();
        if self.at_sym("(") {
            // `(x)` is the plain variable x; tuple patterns need a comma.
            if let (Tok::Ident(_), Tok::Sym(")")) = (self.peek_at(1).clone(), self.peek_at(2).clone()) {
                self.advance();
                let v = self.bind_var()?;
                self.advance();
                return Ok(Pattern::Var(v));
            }
            self.advance();
            let mut elems = Vec::new();
            if !self.at_sym(")") {
                loop {
                    elems.push(self.pat_elem()?);
                    if !self.eat_sym(",") || self.at_sym(")") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
            let mut seen = Vec::new();
            for e in &elems {
                if let PatElem::Var(v) = e {
                    let n = v.global_name().unwrap_or_default();
                    if seen.contains(&n) {
                        return Err(Diagnostic::new(
                            "syntax",
                            format!("variable {n} occurs twice in one tuple pattern; write =-prefixed {n} for the second"),
                            loc,
                        ));
                    }
                    seen.push(n);
                }
            }
            return Ok(Pattern::Tuple(elems));
        }
        if self.eat_sym("_") {
            return Ok(Pattern::Var(Expr::Global(WILDCARD.into())));
        }
        match self.peek() {
            Tok::Ident(_) => Ok(Pattern::Var(self.bind_var()?)),
            _ => Err(Diagnostic::new("syntax", "expected a variable or tuple pattern", loc)),
        }
    }

    fn bind_var(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        let n = self.ident()?;
        if self.params.contains(&n) {
            return Err(Diagnostic::new("syntax", format!("pattern variable {n} shadows a parameter"), loc));
        }
        Ok(Expr::Global(n))
    }

    fn pat_elem(&mut self) -> PResult<PatElem> {
        if self.eat_sym("_") {
            return Ok(PatElem::Wild);
        }
        if self.eat_sym("=") {
            let n = self.ident()?;
            return Ok(PatElem::Eq(self.name_expr(n)));
        }
        if let (Tok::Ident(n), Tok::Sym(s)) = (self.peek().clone(), self.peek_at(1).clone()) {
            if (s == "," || s == ")") && !self.params.contains(&n) {
                self.advance();
                return Ok(PatElem::Var(Expr::Global(n)));
            }
        }
        Ok(PatElem::Expr(self.expr()?))
    }

    fn name_expr(&self, n: String) -> Expr {
        if self.params.contains(&n) {
            Expr::Param(n)
        } else {
            Expr::Global(n)
        }
    }

    /// Parses `{ e : iters | cond }` or `{ e1, ..., en }`.
    fn brace_set(&mut self) -> PResult<BraceSet> {
        self.expect_sym("{")?;
        if self.eat_sym("}") {
            return Ok(BraceSet::Display(Vec::new()));
        }
        let first = self.expr()?;
        if self.eat_sym(":") {
            let iters = self.iters()?;
            let cond = if self.eat_sym("|") { self.expr()? } else { Expr::lit_bool(true) };
            self.expect_sym("}")?;
            return Ok(BraceSet::Comp(Comp { elem: first, iters, cond }));
        }
        let mut items = vec![first];
        while self.eat_sym(",") {
            if self.at_sym("}") {
                break;
            }
            items.push(self.expr()?);
        }
        self.expect_sym("}")?;
        Ok(BraceSet::Display(items))
    }


    // ---------- expressions ----------

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.conj()?;
        while self.eat_kw("or") {
            let r = self.conj()?;
            e = Expr::Or(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn conj(&mut self) -> PResult<Expr> {
        let mut e = self.negation()?;
        while self.eat_kw("and") {
            let r = self.negation()?;
            e = Expr::And(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn negation(&mut self) -> PResult<Expr> {
        if self.eat_kw("not") {
            return Ok(Expr::not(self.negation()?));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let l = self.additive()?;
        let e = match self.peek() {
            Tok::Kw("is") => {
                self.advance();
                Expr::bin(BinOp::Is, l, self.additive()?)
            }
            Tok::Kw("in") => {
                self.advance();
                let r = self.additive()?;
                Expr::Call(Box::new(r), "contains".into(), vec![l])
            }
            Tok::Kw("not") if matches!(self.peek_at(1), Tok::Kw("in")) => {
                self.advance();
                self.advance();
                let r = self.additive()?;
                Expr::not(Expr::Call(Box::new(r), "contains".into(), vec![l]))
            }
            Tok::Sym("<") => {
                self.advance();
                Expr::bin(BinOp::Lt, l, self.additive()?)
            }
            Tok::Sym(">") => {
                self.advance();
                let r = self.additive()?;
                Expr::bin(BinOp::Lt, r, l)
            }
            Tok::Sym("<=") => {
                self.advance();
                let r = self.additive()?;
                Expr::not(Expr::bin(BinOp::Lt, r, l))
            }
            Tok::Sym(">=") => {
                self.advance();
                let r = self.additive()?;
                Expr::not(Expr::bin(BinOp::Lt, l, r))
            }
            _ => l,
        };
        Ok(e)
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut e = self.multiplicative()?;
        loop {
            if self.eat_sym("+") {
                e = Expr::bin(BinOp::Plus, e, self.multiplicative()?);
            } else if self.at_sym("-") {
                self.advance();
                e = Expr::bin(BinOp::Minus, e, self.multiplicative()?);
            } else {
                return Ok(e);
            }
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut e = self.unary()?;
        while self.eat_sym("*") {
            e = Expr::bin(BinOp::Times, e, self.unary()?);
        }
        Ok(e)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.at_sym("-") && !matches!(self.peek_at(1), Tok::Int(_)) {
            self.advance();
            let e = self.unary()?;
            return Ok(Expr::bin(BinOp::Minus, Expr::Lit(Value::Int(0)), e));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.at_sym(".") && matches!(self.peek_at(1), Tok::Ident(_)) {
            self.advance();
            let name = self.ident()?;
            if self.eat_sym("(") {
                let args = self.args(")")?;
                e = Expr::Call(Box::new(e), name, args);
            } else {
                e = Expr::Field(Box::new(e), name);
            }
        }
        Ok(e)
    }

    fn args(&mut self, close: &str) -> PResult<Vec<Expr>> {
        let mut out = Vec::new();
        if !self.at_sym(close) {
            loop {
                out.push(self.expr()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(close)?;
        Ok(out)
    }

    fn fixed_args(&mut self, n: usize, what: &str) -> PResult<Vec<Expr>> {
        let loc = self.loc();
        self.expect_sym("(")?;
        let a = self.args(")")?;
        if a.len() != n {
            return Err(Diagnostic::new("syntax", format!("{what} takes {n} argument(s)"), loc));
        }
        Ok(a)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        if let Some(v) = self.literal() {
            return Ok(Expr::Lit(v));
        }
        match self.peek().clone() {
            Tok::Ident(n) => {
                self.advance();
                Ok(self.name_expr(n))
            }
            Tok::Kw("self") => {
                if !self.in_method {
                    return Err(Diagnostic::new("syntax", "self used outside a method", loc));
                }
                self.advance();
                Ok(Expr::Param("self".into()))
            }
            Tok::Kw("a_gv") => {
                self.advance();
                Ok(Expr::GlobalObj)
            }
            Tok::Sym("(") => {
                self.advance();
                if self.eat_sym(")") {
                    return Ok(Expr::Tuple(Vec::new()));
                }
                let first = self.expr()?;
                if self.eat_sym(")") {
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat_sym(",") {
                    if self.at_sym(")") {
                        break;
                    }
                    items.push(self.expr()?);
                }
                self.expect_sym(")")?;
                Ok(Expr::Tuple(items))
            }
            Tok::Kw(k @ ("not" | "isTuple" | "len")) => {
                self.advance();
                let op = match k {
                    "not" => UnOp::Not,
                    "isTuple" => UnOp::IsTuple,
                    _ => UnOp::Len,
                };
                let mut a = self.fixed_args(1, k)?;
                Ok(Expr::Unary(op, Box::new(a.pop().unwrap())))
            }
            Tok::Kw(k @ ("is" | "plus" | "minus" | "times" | "lt" | "select")) => {
                self.advance();
                let op = match k {
                    "is" => BinOp::Is,
                    "plus" => BinOp::Plus,
                    "minus" => BinOp::Minus,
                    "times" => BinOp::Times,
                    "lt" => BinOp::Lt,
                    _ => BinOp::Select,
                };
                let mut a = self.fixed_args(2, k)?;
                let r = a.pop().unwrap();
                let l = a.pop().unwrap();
                Ok(Expr::bin(op, l, r))
            }
            Tok::Kw(k @ ("and" | "or")) => {
                self.advance();
                let mut a = self.fixed_args(2, k)?;
                let r = Box::new(a.pop().unwrap());
                let l = Box::new(a.pop().unwrap());
                Ok(if k == "and" { Expr::And(l, r) } else { Expr::Or(l, r) })
            }
            Tok::Kw("isinstance") => {
                self.advance();
                self.expect_sym("(")?;
                let e = self.expr()?;
                self.expect_sym(",")?;
                let c = self.ident()?;
                self.expect_sym(")")?;
                Ok(Expr::IsInstance(Box::new(e), c))
            }
            Tok::Kw(k @ ("some" | "each")) => {
                self.advance();
                let iters = self.iters()?;
                self.expect_sym("|")?;
                let body = Box::new(self.expr()?);
                Ok(if k == "some" { Expr::Some(iters, body) } else { Expr::Each(iters, body) })
            }
            _ => self.err("expression"),
        }
    }
}

enum BraceSet {
    Comp(Comp),
    Display(Vec<Expr>),
}
