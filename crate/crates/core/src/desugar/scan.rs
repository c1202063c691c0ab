//! Counts occurrences of forms that desugaring must eliminate.

use crate::syntax::ast::*;
use crate::syntax::check::{for_each_expr_in_stmt, visit_expr, visit_stmt};
use std::collections::BTreeMap;

/// Occurrence count per eliminated form. Empty for a core program.
pub fn eliminated_forms(p: &Program) -> BTreeMap<&'static str, usize> {
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut bump = |k: &'static str| *counts.entry(k).or_default() += 1;
    for rs in p.rulesets.iter().chain(p.classes.iter().flat_map(|c| c.rulesets.iter())) {
        for r in &rs.rules {
            for a in std::iter::once(&r.head).chain(r.body.iter().map(|h| &h.atom)) {
                if matches!(a.pred, PredRef::Global(_)) {
                    bump("global-predicate");
                }
            }
        }
    }
    let mut stmts: Vec<&Stmt> = vec![&p.main];
    let mut exprs: Vec<&Expr> = Vec::new();
    for c in &p.classes {
        for m in &c.methods {
            match &m.body {
                MethodBody::Def(s) => stmts.push(s),
                MethodBody::Defun(e) => exprs.push(e),
            }
        }
    }
    let node = |x: &Expr, bump: &mut dyn FnMut(&'static str)| match x {
            Expr::And(..) => bump("and"),
            Expr::Each(..) => bump("each"),
            Expr::Global(_) => bump("global-variable"),
            Expr::Some(its, _) => {
                if its.len() != 1 {
                    bump("multi-iterator-some");
                }
                for it in its {
                    match &it.pat {
                        Pattern::Tuple(_) => bump("tuple-pattern-in-iterator"),
                        Pattern::Var(v) if v.global_name() == Some(WILDCARD) => bump("wildcard"),
                        _ => {}
                    }
                }
            }
            _ => {}
    };
    for s in stmts {
        visit_stmt(s, &mut |s| {
            match &s.kind {
                StmtKind::IfSome(..) => bump("ifSome"),
                StmtKind::WhileSome(..) => bump("whileSome"),
                StmtKind::Comp(..) => bump("comprehension"),
                StmtKind::Display(..) => bump("set-display"),
                StmtKind::Aggregate(..) => bump("aggregate"),
                StmtKind::For(it, _) if matches!(it.pat, Pattern::Tuple(_)) => bump("tuple-pattern-in-iterator"),
                StmtKind::For(Iter { pat: Pattern::Var(v), .. }, _) if v.global_name() == Some(WILDCARD) => {
                    bump("wildcard")
                }
                StmtKind::Infer(inf) if inf.queries.iter().any(|q| q.pattern.is_some()) => {
                    bump("tuple-pattern-in-infer")
                }
                _ => {}
            }
            for_each_expr_in_stmt(s, &mut |e| node(e, &mut bump));
        });
    }
    for e in exprs {
        visit_expr(e, &mut |x| node(x, &mut bump));
    }
    counts
}

/// Total number of eliminated-form occurrences.
pub fn count_eliminated(p: &Program) -> usize {
    eliminated_forms(p).values().sum()
}
