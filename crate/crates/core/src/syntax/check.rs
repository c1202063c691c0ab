//! Well-formedness checks run after parsing.

use super::ast::*;
use super::diag::Diagnostic;
use std::collections::{BTreeMap, BTreeSet};

pub fn check_program(p: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    check_classes(p, &mut diags);
    let mut global_derived: BTreeMap<String, String> = BTreeMap::new();
    check_ruleset_names(&p.rulesets, "global scope", &mut diags);
    for r in &p.rulesets {
        check_ruleset(r, true, &mut diags);
        note_global_derived(r, &mut global_derived, &mut diags);
    }
    for c in &p.classes {
        check_ruleset_names(&c.rulesets, &format!("class {}", c.name), &mut diags);
        let mut self_derived: BTreeMap<String, String> = BTreeMap::new();
        for r in &c.rulesets {
            check_ruleset(r, false, &mut diags);
            note_global_derived(r, &mut global_derived, &mut diags);
            for rule in &r.rules {
                if let PredRef::SelfField(f) = &rule.head.pred {
                    match self_derived.get(f) {
                        Some(other) if other != &r.name => diags.push(Diagnostic::new(
                            "duplicate-derived",
                            format!("field {f} is derived in rule sets {other} and {} of class {}", r.name, c.name),
                            r.loc,
                        )),
                        _ => {
                            self_derived.insert(f.clone(), r.name.clone());
                        }
                    }
                }
            }
        }
    }
    check_calls(p, &mut diags);
    diags
}

fn check_ruleset_names(rs: &[RuleSetDecl], scope: &str, diags: &mut Vec<Diagnostic>) {
    let mut seen = BTreeSet::new();
    for r in rs {
        if !seen.insert(&r.name) {
            diags.push(Diagnostic::new("duplicate-ruleset", format!("rule set {} defined twice in {scope}", r.name), r.loc));
        }
    }
}

fn note_global_derived(r: &RuleSetDecl, seen: &mut BTreeMap<String, String>, diags: &mut Vec<Diagnostic>) {
    for rule in &r.rules {
        let name = match &rule.head.pred {
            PredRef::Global(n) | PredRef::Inst(0, n) => n,
            _ => continue,
        };
        match seen.get(name) {
            Some(other) if other != &r.name => diags.push(Diagnostic::new(
                "duplicate-derived",
                format!("global {name} is derived in rule sets {other} and {}", r.name),
                r.loc,
            )),
            _ => {
                seen.insert(name.clone(), r.name.clone());
            }
        }
    }
}

fn check_ruleset(r: &RuleSetDecl, global_scope: bool, diags: &mut Vec<Diagnostic>) {
    let mut arity: BTreeMap<&PredRef, usize> = BTreeMap::new();
    for rule in &r.rules {
        for atom in std::iter::once(&rule.head).chain(rule.body.iter().map(|h| &h.atom)) {
            if global_scope && matches!(atom.pred, PredRef::SelfField(_)) {
                diags.push(Diagnostic::new(
                    "self-field-in-global-rules",
                    format!("rule set {} is global but uses {}", r.name, atom.pred),
                    r.loc,
                ));
            }
            match arity.get(&atom.pred) {
                Some(&n) if n != atom.args.len() => diags.push(Diagnostic::new(
                    "arity-mismatch",
                    format!("predicate {} used with arities {n} and {} in rule set {}", atom.pred, atom.args.len(), r.name),
                    r.loc,
                )),
                _ => {
                    arity.insert(&atom.pred, atom.args.len());
                }
            }
        }
        if let Some(v) = rule.unsafe_vars().first() {
            diags.push(Diagnostic::new("unsafe-rule", format!("unsafe rule: {v} not in any hypothesis"), r.loc));
        }
    }
    let mut seen = BTreeSet::new();
    for p in &r.params {
        if !seen.insert(p) {
            diags.push(Diagnostic::new("syntax", format!("local predicate {p} declared twice in {}", r.name), r.loc));
        }
    }
}

fn check_classes(p: &Program, diags: &mut Vec<Diagnostic>) {
    let mut names = BTreeSet::new();
    for c in &p.classes {
        if c.name == "set" || c.name == "sequence" {
            diags.push(Diagnostic::new("reserved-class", format!("class name {} is reserved", c.name), c.loc));
        }
        if !names.insert(c.name.as_str()) {
            diags.push(Diagnostic::new("duplicate-class", format!("class {} defined twice", c.name), c.loc));
        }
        let mut methods = BTreeSet::new();
        for m in &c.methods {
            if !methods.insert(m.name.as_str()) {
                diags.push(Diagnostic::new(
                    "duplicate-method",
                    format!("method {} defined twice in class {}", m.name, c.name),
                    m.loc,
                ));
            }
        }
    }
    for c in &p.classes {
        if let Some(e) = &c.extends {
            if !names.contains(e.as_str()) {
                diags.push(Diagnostic::new("unknown-class", format!("class {} extends unknown class {e}", c.name), c.loc));
            }
        }
        // Walk the parent chain; revisiting the start means a cycle.
        let mut cur = c.extends.clone();
        let mut steps = 0;
        while let Some(n) = cur {
            if n == c.name {
                diags.push(Diagnostic::new("inheritance-cycle", format!("class {} inherits from itself", c.name), c.loc));
                break;
            }
            steps += 1;
            if steps > p.classes.len() {
                break;
            }
            cur = p.class(&n).and_then(|d| d.extends.clone());
        }
    }
    let mut news = Vec::new();
    visit_stmt(&p.main, &mut |s| {
        if let StmtKind::New(_, c) = &s.kind {
            news.push((c.clone(), s.loc));
        }
    });
    for c in &p.classes {
        for m in &c.methods {
            if let MethodBody::Def(body) = &m.body {
                visit_stmt(body, &mut |s| {
                    if let StmtKind::New(_, c) = &s.kind {
                        news.push((c.clone(), s.loc));
                    }
                });
            }
        }
    }
    for (c, loc) in news {
        if c != "set" && c != "sequence" && !names.contains(c.as_str()) {
            diags.push(Diagnostic::new("unknown-class", format!("new of unknown class {c}"), loc));
        }
    }
}

/// `def` methods only in call statements, `defun` functions only in expressions.
fn check_calls(p: &Program, diags: &mut Vec<Diagnostic>) {
    let mut defs = BTreeSet::new();
    let mut funs = BTreeSet::new();
    for c in &p.classes {
        for m in &c.methods {
            match m.body {
                MethodBody::Def(_) => defs.insert(m.name.clone()),
                MethodBody::Defun(_) => funs.insert(m.name.clone()),
            };
        }
    }
    let check = |s: &Stmt, diags: &mut Vec<Diagnostic>| {
        if let StmtKind::Call(_, m, _) = &s.kind {
            if !defs.contains(m) && !BUILTIN_UPDATE_METHODS.contains(&m.as_str()) {
                if funs.contains(m) || BUILTIN_QUERY_METHODS.contains(&m.as_str()) {
                    let msg = format!("{m} is a function and cannot be called as a statement");
                    diags.push(Diagnostic::new("defun-in-statement", msg, s.loc));
                } else {
                    diags.push(Diagnostic::new("unknown-method", format!("unknown method {m}"), s.loc));
                }
            }
        }
        for_each_expr_in_stmt(s, &mut |e| {
            if let Expr::Call(_, m, _) = e {
                if !funs.contains(m) && !BUILTIN_QUERY_METHODS.contains(&m.as_str()) {
                    if defs.contains(m) || BUILTIN_UPDATE_METHODS.contains(&m.as_str()) {
                        let msg = format!("{m} is a def method and can only be called as a statement");
                        diags.push(Diagnostic::new("def-in-expression", msg, s.loc));
                    } else {
                        diags.push(Diagnostic::new("unknown-method", format!("unknown function {m}"), s.loc));
                    }
                }
            }
        });
    };
    let mut all = Vec::new();
    visit_stmt(&p.main, &mut |s| all.push(s.clone()));
    for c in &p.classes {
        for m in &c.methods {
            match &m.body {
                MethodBody::Def(body) => visit_stmt(body, &mut |s| all.push(s.clone())),
                MethodBody::Defun(e) => {
                    let wrapper = Stmt::new(StmtKind::Assign(Expr::Global("_".into()), e.clone()), m.loc);
                    all.push(wrapper);
                }
            }
        }
    }
    for s in &all {
        check(s, diags);
    }
}

/// Pre-order walk over a statement and all nested statements.
pub fn visit_stmt(s: &Stmt, f: &mut dyn FnMut(&Stmt)) {
    f(s);
    match &s.kind {
        StmtKind::Seq(items) => items.iter().for_each(|i| visit_stmt(i, f)),
        StmtKind::If(_, a, b) => {
            visit_stmt(a, f);
            visit_stmt(b, f);
        }
        StmtKind::For(_, b) | StmtKind::While(_, b) | StmtKind::IfSome(_, _, b) | StmtKind::WhileSome(_, _, b) => {
            visit_stmt(b, f)
        }
        _ => {}
    }
}

/// Calls `f` on every expression node directly owned by statement `s` (not nested statements).
pub fn for_each_expr_in_stmt(s: &Stmt, f: &mut dyn FnMut(&Expr)) {
    let mut top: Vec<&Expr> = Vec::new();
    let mut iters: Vec<&Iter> = Vec::new();
    let mut pats: Vec<&PatElem> = Vec::new();
    match &s.kind {
        StmtKind::Skip | StmtKind::Seq(_) => {}
        StmtKind::Assign(t, e) => top.extend([t, e]),
        StmtKind::New(t, _) => top.push(t),
        StmtKind::Comp(t, c) => {
            top.extend([t, &c.elem, &c.cond]);
            iters.extend(c.iters.iter());
        }
        StmtKind::Display(t, items) => {
            top.push(t);
            top.extend(items.iter());
        }
        StmtKind::Aggregate(t, _, src) => {
            top.push(t);
            match src {
                AggSrc::Expr(e) => top.push(e),
                AggSrc::Comp(c) => {
                    top.extend([&c.elem, &c.cond]);
                    iters.extend(c.iters.iter());
                }
            }
        }
        StmtKind::If(c, _, _) | StmtKind::While(c, _) => top.push(c),
        StmtKind::For(it, _) => iters.push(it),
        StmtKind::IfSome(its, c, _) | StmtKind::WhileSome(its, c, _) => {
            iters.extend(its.iter());
            top.push(c);
        }
        StmtKind::Call(r, _, args) => {
            top.push(r);
            top.extend(args.iter());
        }
        StmtKind::Infer(inf) => {
            top.extend(inf.targets.iter());
            top.extend(inf.recv.iter());
            top.extend(inf.kwargs.iter().map(|(_, e)| e));
            for q in &inf.queries {
                if let Some(p) = &q.pattern {
                    pats.extend(p.iter());
                }
            }
        }
    }
    for it in iters {
        visit_iter(it, f);
    }
    for p in pats {
        visit_pat_elem(p, f);
    }
    for e in top {
        visit_expr(e, f);
    }
}

fn visit_iter(it: &Iter, f: &mut dyn FnMut(&Expr)) {
    match &it.pat {
        Pattern::Var(v) => visit_expr(v, f),
        Pattern::Tuple(es) => es.iter().for_each(|p| visit_pat_elem(p, f)),
    }
    visit_expr(&it.src, f);
}

fn visit_pat_elem(p: &PatElem, f: &mut dyn FnMut(&Expr)) {
    match p {
        PatElem::Var(e) | PatElem::Eq(e) | PatElem::Expr(e) => visit_expr(e, f),
        PatElem::Wild => {}
    }
}

/// Pre-order walk over an expression, entering quantifier iterators.
pub fn visit_expr(e: &Expr, f: &mut dyn FnMut(&Expr)) {
    f(e);
    match e {
        Expr::Lit(_) | Expr::Param(_) | Expr::Global(_) | Expr::GlobalObj => {}
        Expr::Field(b, _) | Expr::Unary(_, b) | Expr::IsInstance(b, _) => visit_expr(b, f),
        Expr::Tuple(items) => items.iter().for_each(|i| visit_expr(i, f)),
        Expr::Call(r, _, args) => {
            visit_expr(r, f);
            args.iter().for_each(|a| visit_expr(a, f));
        }
        Expr::Binary(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
            visit_expr(a, f);
            visit_expr(b, f);
        }
        Expr::Some(its, b) | Expr::Each(its, b) => {
            its.iter().for_each(|it| visit_iter(it, f));
            visit_expr(b, f);
        }
    }
}
