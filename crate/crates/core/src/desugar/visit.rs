//! Owned, bottom-up rewriting helpers over the AST.

use crate::syntax::ast::*;
use std::collections::BTreeMap;

/// Rewrites every expression node bottom-up: children first, then `f` on the node.
pub fn map_expr(e: Expr, f: &mut dyn FnMut(Expr) -> Expr) -> Expr {
    let e = match e {
        Expr::Lit(_) | Expr::Param(_) | Expr::Global(_) | Expr::GlobalObj => e,
        Expr::Field(b, n) => Expr::Field(Box::new(map_expr(*b, f)), n),
        Expr::Tuple(items) => Expr::Tuple(items.into_iter().map(|i| map_expr(i, f)).collect()),
        Expr::Call(r, m, args) => {
            Expr::Call(Box::new(map_expr(*r, f)), m, args.into_iter().map(|a| map_expr(a, f)).collect())
        }
        Expr::Unary(op, a) => Expr::Unary(op, Box::new(map_expr(*a, f))),
        Expr::Binary(op, a, b) => Expr::Binary(op, Box::new(map_expr(*a, f)), Box::new(map_expr(*b, f))),
        Expr::IsInstance(a, c) => Expr::IsInstance(Box::new(map_expr(*a, f)), c),
        Expr::And(a, b) => Expr::And(Box::new(map_expr(*a, f)), Box::new(map_expr(*b, f))),
        Expr::Or(a, b) => Expr::Or(Box::new(map_expr(*a, f)), Box::new(map_expr(*b, f))),
        Expr::Some(its, b) => Expr::Some(map_iters(its, f), Box::new(map_expr(*b, f))),
        Expr::Each(its, b) => Expr::Each(map_iters(its, f), Box::new(map_expr(*b, f))),
    };
    f(e)
}

pub fn map_iters(its: Vec<Iter>, f: &mut dyn FnMut(Expr) -> Expr) -> Vec<Iter> {
    its.into_iter().map(|it| map_iter(it, f)).collect()
}

pub fn map_iter(it: Iter, f: &mut dyn FnMut(Expr) -> Expr) -> Iter {
    Iter { pat: map_pattern(it.pat, f), src: map_expr(it.src, f) }
}

pub fn map_pattern(p: Pattern, f: &mut dyn FnMut(Expr) -> Expr) -> Pattern {
    match p {
        Pattern::Var(v) => Pattern::Var(map_expr(v, f)),
        Pattern::Tuple(es) => Pattern::Tuple(es.into_iter().map(|e| map_pat_elem(e, f)).collect()),
    }
}

pub fn map_pat_elem(p: PatElem, f: &mut dyn FnMut(Expr) -> Expr) -> PatElem {
    match p {
        PatElem::Var(e) => PatElem::Var(map_expr(e, f)),
        PatElem::Eq(e) => PatElem::Eq(map_expr(e, f)),
        PatElem::Expr(e) => PatElem::Expr(map_expr(e, f)),
        PatElem::Wild => PatElem::Wild,
    }
}

fn map_comp(c: Comp, f: &mut dyn FnMut(Expr) -> Expr) -> Comp {
    Comp { elem: map_expr(c.elem, f), iters: map_iters(c.iters, f), cond: map_expr(c.cond, f) }
}

/// Applies `f` to every expression owned by `s` and its nested statements.
pub fn map_stmt_exprs(s: Stmt, f: &mut dyn FnMut(Expr) -> Expr) -> Stmt {
    let loc = s.loc;
    let kind = match s.kind {
        StmtKind::Skip => StmtKind::Skip,
        StmtKind::Seq(items) => StmtKind::Seq(items.into_iter().map(|i| map_stmt_exprs(i, f)).collect()),
        StmtKind::Assign(t, e) => StmtKind::Assign(map_expr(t, f), map_expr(e, f)),
        StmtKind::New(t, c) => StmtKind::New(map_expr(t, f), c),
        StmtKind::Comp(t, c) => StmtKind::Comp(map_expr(t, f), map_comp(c, f)),
        StmtKind::Display(t, items) => {
            StmtKind::Display(map_expr(t, f), items.into_iter().map(|i| map_expr(i, f)).collect())
        }
        StmtKind::Aggregate(t, op, src) => {
            let src = match src {
                AggSrc::Expr(e) => AggSrc::Expr(map_expr(e, f)),
                AggSrc::Comp(c) => AggSrc::Comp(map_comp(c, f)),
            };
            StmtKind::Aggregate(map_expr(t, f), op, src)
        }
        StmtKind::If(c, a, b) => {
            StmtKind::If(map_expr(c, f), Box::new(map_stmt_exprs(*a, f)), Box::new(map_stmt_exprs(*b, f)))
        }
        StmtKind::For(it, b) => StmtKind::For(map_iter(it, f), Box::new(map_stmt_exprs(*b, f))),
        StmtKind::While(c, b) => StmtKind::While(map_expr(c, f), Box::new(map_stmt_exprs(*b, f))),
        StmtKind::IfSome(its, c, b) => {
            StmtKind::IfSome(map_iters(its, f), map_expr(c, f), Box::new(map_stmt_exprs(*b, f)))
        }
        StmtKind::WhileSome(its, c, b) => {
            StmtKind::WhileSome(map_iters(its, f), map_expr(c, f), Box::new(map_stmt_exprs(*b, f)))
        }
        StmtKind::Call(r, m, args) => {
            StmtKind::Call(map_expr(r, f), m, args.into_iter().map(|a| map_expr(a, f)).collect())
        }
        StmtKind::Infer(inf) => StmtKind::Infer(Infer {
            targets: inf.targets.into_iter().map(|t| map_expr(t, f)).collect(),
            recv: inf.recv.map(|r| map_expr(r, f)),
            queries: inf
                .queries
                .into_iter()
                .map(|q| Query {
                    pred: q.pred,
                    on_self: q.on_self,
                    pattern: q.pattern.map(|p| p.into_iter().map(|e| map_pat_elem(e, f)).collect()),
                })
                .collect(),
            kwargs: inf.kwargs.into_iter().map(|(k, v)| (k, map_expr(v, f))).collect(),
            rules: inf.rules,
        }),
    };
    Stmt::new(kind, loc)
}

/// Rewrites statements bottom-up: nested statements first, then `f` on the node.
pub fn map_stmts(s: Stmt, f: &mut dyn FnMut(Stmt) -> Stmt) -> Stmt {
    let loc = s.loc;
    let kind = match s.kind {
        StmtKind::Seq(items) => StmtKind::Seq(items.into_iter().map(|i| map_stmts(i, f)).collect()),
        StmtKind::If(c, a, b) => StmtKind::If(c, Box::new(map_stmts(*a, f)), Box::new(map_stmts(*b, f))),
        StmtKind::For(it, b) => StmtKind::For(it, Box::new(map_stmts(*b, f))),
        StmtKind::While(c, b) => StmtKind::While(c, Box::new(map_stmts(*b, f))),
        StmtKind::IfSome(its, c, b) => StmtKind::IfSome(its, c, Box::new(map_stmts(*b, f))),
        StmtKind::WhileSome(its, c, b) => StmtKind::WhileSome(its, c, Box::new(map_stmts(*b, f))),
        other => other,
    };
    let s = match kind {
        StmtKind::Seq(items) => Stmt::seq(items, loc),
        k => Stmt::new(k, loc),
    };
    f(s)
}

/// Applies a statement rewrite to every statement body and an expression rewrite
/// to every `defun` body of the program.
pub fn map_program(
    p: Program,
    fs: &mut dyn FnMut(Stmt) -> Stmt,
    fe: &mut dyn FnMut(Expr) -> Expr,
) -> Program {
    let classes = p
        .classes
        .into_iter()
        .map(|c| ClassDecl {
            methods: c
                .methods
                .into_iter()
                .map(|m| MethodDecl {
                    body: match m.body {
                        MethodBody::Def(s) => MethodBody::Def(fs(s)),
                        MethodBody::Defun(e) => MethodBody::Defun(fe(e)),
                    },
                    ..m
                })
                .collect(),
            ..c
        })
        .collect();
    Program { rulesets: p.rulesets, classes, main: fs(p.main) }
}

/// Name of a variable (`x` or `a_gv.x`) used as a pattern binder.
pub fn var_name(e: &Expr) -> Option<&str> {
    e.global_name()
}

/// Names bound by a pattern (unprefixed variables), in order.
pub fn pattern_binders(p: &Pattern) -> Vec<String> {
    match p {
        Pattern::Var(v) => var_name(v).map(|n| vec![n.to_string()]).unwrap_or_default(),
        Pattern::Tuple(es) => es
            .iter()
            .filter_map(|e| match e {
                PatElem::Var(v) => var_name(v).map(str::to_string),
                _ => None,
            })
            .collect(),
    }
}

/// True when `e` reads one of the variables in `names`.
pub fn mentions(e: &Expr, names: &[String]) -> bool {
    let mut found = false;
    crate::syntax::check::visit_expr(e, &mut |x| {
        if let Some(n) = x.global_name() {
            if names.iter().any(|m| m == n) {
                found = true;
            }
        }
    });
    found
}

/// True when expression `needle` occurs structurally inside `e`.
pub fn occurs(needle: &Expr, e: &Expr) -> bool {
    let mut found = false;
    crate::syntax::check::visit_expr(e, &mut |x| {
        if x == needle {
            found = true;
        }
    });
    found
}

/// Capture-avoiding substitution of variables (by name) in an expression.
/// Quantifier binders shadow the substituted names inside their scope.
pub fn subst_expr(e: &Expr, map: &BTreeMap<String, Expr>) -> Expr {
    if map.is_empty() {
        return e.clone();
    }
    match e {
        Expr::Global(_) | Expr::Field(..) if e.global_name().is_some_and(|n| map.contains_key(n)) => {
            map[e.global_name().unwrap()].clone()
        }
        Expr::Lit(_) | Expr::Param(_) | Expr::Global(_) | Expr::GlobalObj => e.clone(),
        Expr::Field(b, n) => Expr::Field(Box::new(subst_expr(b, map)), n.clone()),
        Expr::Tuple(items) => Expr::Tuple(items.iter().map(|i| subst_expr(i, map)).collect()),
        Expr::Call(r, m, args) => {
            Expr::Call(Box::new(subst_expr(r, map)), m.clone(), args.iter().map(|a| subst_expr(a, map)).collect())
        }
        Expr::Unary(op, a) => Expr::Unary(*op, Box::new(subst_expr(a, map))),
        Expr::Binary(op, a, b) => Expr::Binary(*op, Box::new(subst_expr(a, map)), Box::new(subst_expr(b, map))),
        Expr::IsInstance(a, c) => Expr::IsInstance(Box::new(subst_expr(a, map)), c.clone()),
        Expr::And(a, b) => Expr::And(Box::new(subst_expr(a, map)), Box::new(subst_expr(b, map))),
        Expr::Or(a, b) => Expr::Or(Box::new(subst_expr(a, map)), Box::new(subst_expr(b, map))),
        Expr::Some(its, b) | Expr::Each(its, b) => {
            let (its, inner) = subst_iters(its, map);
            let b = Box::new(subst_expr(b, &inner));
            if matches!(e, Expr::Some(..)) {
                Expr::Some(its, b)
            } else {
                Expr::Each(its, b)
            }
        }
    }
}

/// Substitutes through a list of iterators, dropping names as they become bound.
/// Returns the rewritten iterators and the map that applies after them.
pub fn subst_iters(its: &[Iter], map: &BTreeMap<String, Expr>) -> (Vec<Iter>, BTreeMap<String, Expr>) {
    let mut m = map.clone();
    let mut out = Vec::new();
    for it in its {
        let src = subst_expr(&it.src, &m);
        let pat = subst_pattern(&it.pat, &m);
        for b in pattern_binders(&it.pat) {
            m.remove(&b);
        }
        out.push(Iter { pat, src });
    }
    (out, m)
}

/// Substitutes inside a pattern: binders are renamed only when the replacement is
/// itself a variable; `=x` and expression components are substituted.
pub fn subst_pattern(p: &Pattern, map: &BTreeMap<String, Expr>) -> Pattern {
    let elem = |e: &PatElem| -> PatElem {
        match e {
            PatElem::Var(v) => match var_name(v).and_then(|n| map.get(n)) {
                Some(r) if r.global_name().is_some() => PatElem::Var(r.clone()),
                _ => e.clone(),
            },
            PatElem::Eq(v) => match var_name(v).and_then(|n| map.get(n)) {
                Some(r) if r.global_name().is_some() => PatElem::Eq(r.clone()),
                Some(r) => PatElem::Expr(r.clone()),
                None => e.clone(),
            },
            PatElem::Expr(x) => PatElem::Expr(subst_expr(x, map)),
            PatElem::Wild => PatElem::Wild,
        }
    };
    match p {
        Pattern::Var(v) => match var_name(v).and_then(|n| map.get(n)) {
            Some(r) if r.global_name().is_some() => Pattern::Var(r.clone()),
            _ => p.clone(),
        },
        Pattern::Tuple(es) => Pattern::Tuple(es.iter().map(elem).collect()),
    }
}
