//! Pretty-printer producing concrete syntax that parses back to the same tree.
//!
//! Operators are printed in prefix form (`not(e)`, `is(a, b)`, `or(a, b)`), so no
//! precedence handling is needed. Names introduced by desugaring start with `$`
//! and are printed as-is; such output is for display only.

use super::ast::*;
use crate::value::Value;
use std::fmt::Write;

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for r in &p.rulesets {
        print_ruleset(&mut out, r, 0);
    }
    for c in &p.classes {
        print_class(&mut out, c);
    }
    print_stmt_list(&mut out, &p.main, 0);
    out
}

fn indent(out: &mut String, n: usize) {
    for _ in 0..n {
        out.push_str("  ");
    }
}

pub fn print_ruleset(out: &mut String, r: &RuleSetDecl, ind: usize) {
    indent(out, ind);
    write!(out, "rules {}", r.name).unwrap();
    if !r.params.is_empty() {
        write!(out, "({})", r.params.join(", ")).unwrap();
    }
    out.push_str(" {\n");
    for rule in &r.rules {
        indent(out, ind + 1);
        out.push_str(&rule_to_string(rule));
        out.push('\n');
    }
    indent(out, ind);
    out.push_str("}\n");
}

pub fn rule_to_string(rule: &Rule) -> String {
    let mut s = atom_to_string(&rule.head);
    if !rule.body.is_empty() {
        s.push_str(" if ");
        let hyps: Vec<String> = rule
            .body
            .iter()
            .map(|h| {
                let a = atom_to_string(&h.atom);
                if h.negated {
                    format!("not {a}")
                } else {
                    a
                }
            })
            .collect();
        s.push_str(&hyps.join(", "));
    }
    s
}

pub fn atom_to_string(a: &Atom) -> String {
    let args: Vec<String> = a
        .args
        .iter()
        .map(|t| match t {
            Term::Var(v) => v.clone(),
            Term::Const(c) => c.to_string(),
        })
        .collect();
    format!("{}({})", a.pred, args.join(", "))
}

fn print_class(out: &mut String, c: &ClassDecl) {
    write!(out, "class {}", c.name).unwrap();
    if let Some(e) = &c.extends {
        write!(out, " extends {e}").unwrap();
    }
    out.push_str(" {\n");
    for r in &c.rulesets {
        print_ruleset(out, r, 1);
    }
    for m in &c.methods {
        match &m.body {
            MethodBody::Def(s) => {
                write!(out, "  def {}({}) {{\n", m.name, m.params.join(", ")).unwrap();
                print_stmt_list(out, s, 2);
                out.push_str("  }\n");
            }
            MethodBody::Defun(e) => {
                writeln!(out, "  defun {}({}) {{ {} }}", m.name, m.params.join(", "), expr_to_string(e)).unwrap();
            }
        }
    }
    out.push_str("}\n");
}

fn print_stmt_list(out: &mut String, s: &Stmt, ind: usize) {
    match &s.kind {
        StmtKind::Seq(items) => {
            for it in items {
                print_stmt(out, it, ind);
            }
        }
        StmtKind::Skip if ind == 0 => {}
        _ => print_stmt(out, s, ind),
    }
}

fn print_block(out: &mut String, s: &Stmt, ind: usize) {
    out.push_str("{\n");
    print_stmt_list(out, s, ind + 1);
    indent(out, ind);
    out.push('}');
}

pub fn stmt_to_string(s: &Stmt) -> String {
    let mut out = String::new();
    print_stmt_list(&mut out, s, 0);
    out
}

fn print_stmt(out: &mut String, s: &Stmt, ind: usize) {
    indent(out, ind);
    match &s.kind {
        StmtKind::Skip => out.push_str("skip"),
        StmtKind::Seq(_) => {
            out.push_str("if True ");
            print_block(out, s, ind);
            out.push_str(" else { skip }");
        }
        StmtKind::Assign(t, e) => write!(out, "{} := {}", expr_to_string(t), expr_to_string(e)).unwrap(),
        StmtKind::New(t, c) => write!(out, "{} := new {}", expr_to_string(t), c).unwrap(),
        StmtKind::Comp(t, c) => write!(out, "{} := {}", expr_to_string(t), comp_to_string(c)).unwrap(),
        StmtKind::Display(t, items) => {
            let items: Vec<String> = items.iter().map(expr_to_string).collect();
            write!(out, "{} := {{{}}}", expr_to_string(t), items.join(", ")).unwrap()
        }
        StmtKind::Aggregate(t, op, src) => {
            let src = match src {
                AggSrc::Expr(e) => expr_to_string(e),
                AggSrc::Comp(c) => comp_to_string(c),
            };
            write!(out, "{} := {}({})", expr_to_string(t), op.keyword(), src).unwrap()
        }
        StmtKind::If(c, a, b) => {
            write!(out, "if {} ", expr_to_string(c)).unwrap();
            print_block(out, a, ind);
            if !matches!(b.kind, StmtKind::Skip) {
                out.push_str(" else ");
                print_block(out, b, ind);
            }
        }
        StmtKind::For(it, body) => {
            write!(out, "for {} ", iter_to_string(it)).unwrap();
            print_block(out, body, ind);
        }
        StmtKind::While(c, body) => {
            write!(out, "while {} ", expr_to_string(c)).unwrap();
            print_block(out, body, ind);
        }
        StmtKind::IfSome(its, c, body) | StmtKind::WhileSome(its, c, body) => {
            let kw = if matches!(s.kind, StmtKind::IfSome(..)) { "ifSome" } else { "whileSome" };
            write!(out, "{kw} {} | {} ", iters_to_string(its), expr_to_string(c)).unwrap();
            print_block(out, body, ind);
        }
        StmtKind::Call(r, m, args) => {
            write!(out, "{}.{}({})", postfix_to_string(r), m, exprs_to_string(args)).unwrap()
        }
        StmtKind::Infer(inf) => out.push_str(&infer_to_string(inf)),
    }
    out.push('\n');
}

fn infer_to_string(inf: &Infer) -> String {
    let mut s = String::new();
    if !inf.targets.is_empty() {
        let ts: Vec<String> = inf.targets.iter().map(expr_to_string).collect();
        write!(s, "{} := ", ts.join(", ")).unwrap();
    }
    if let Some(r) = &inf.recv {
        write!(s, "{}.", postfix_to_string(r)).unwrap();
    }
    let mut args: Vec<String> = inf
        .queries
        .iter()
        .map(|q| {
            let mut a = if q.on_self { format!("self.{}", q.pred) } else { q.pred.clone() };
            if let Some(p) = &q.pattern {
                let es: Vec<String> = p.iter().map(pat_elem_to_string).collect();
                write!(a, "({})", es.join(", ")).unwrap();
            }
            a
        })
        .collect();
    for (k, v) in &inf.kwargs {
        args.push(format!("{k}={}", expr_to_string(v)));
    }
    args.push(format!("rules={}", inf.rules));
    write!(s, "infer({})", args.join(", ")).unwrap();
    s
}

fn comp_to_string(c: &Comp) -> String {
    format!("{{{} : {} | {}}}", expr_to_string(&c.elem), iters_to_string(&c.iters), expr_to_string(&c.cond))
}

fn iters_to_string(its: &[Iter]) -> String {
    let v: Vec<String> = its.iter().map(iter_to_string).collect();
    v.join(", ")
}

fn iter_to_string(it: &Iter) -> String {
    format!("{} in {}", pattern_to_string(&it.pat), expr_to_string(&it.src))
}

fn pattern_to_string(p: &Pattern) -> String {
    match p {
        Pattern::Var(v) => var_name(v),
        Pattern::Tuple(es) => {
            let v: Vec<String> = es.iter().map(pat_elem_to_string).collect();
            if v.len() == 1 {
                format!("({},)", v[0])
            } else {
                format!("({})", v.join(", "))
            }
        }
    }
}

fn var_name(v: &Expr) -> String {
    match v {
        Expr::Global(n) => n.clone(),
        other => expr_to_string(other),
    }
}

fn pat_elem_to_string(e: &PatElem) -> String {
    match e {
        PatElem::Var(v) => var_name(v),
        PatElem::Eq(v) => format!("={}", var_name(v)),
        PatElem::Wild => "_".into(),
        PatElem::Expr(x) => {
            let s = expr_to_string(x);
            // A bare name would read back as a binding variable.
            if matches!(x, Expr::Global(_) | Expr::Param(_)) {
                format!("({s})")
            } else {
                s
            }
        }
    }
}

fn exprs_to_string(es: &[Expr]) -> String {
    let v: Vec<String> = es.iter().map(expr_to_string).collect();
    v.join(", ")
}

/// Expression in a position that is followed by `.field` or `.m(...)`.
fn postfix_to_string(e: &Expr) -> String {
    match e {
        Expr::Some(..) | Expr::Each(..) => format!("({})", expr_to_string(e)),
        Expr::Lit(Value::Int(n)) if *n < 0 => format!("({n})"),
        _ => expr_to_string(e),
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    match e {
        Expr::Lit(v) => v.to_string(),
        Expr::Param(n) | Expr::Global(n) => n.clone(),
        Expr::GlobalObj => "a_gv".into(),
        Expr::Field(b, f) => format!("{}.{}", postfix_to_string(b), f),
        Expr::Tuple(items) => {
            if items.len() == 1 {
                format!("({},)", expr_to_string(&items[0]))
            } else {
                format!("({})", exprs_to_string(items))
            }
        }
        Expr::Call(r, m, args) => format!("{}.{}({})", postfix_to_string(r), m, exprs_to_string(args)),
        Expr::Unary(op, a) => format!("{}({})", op.keyword(), expr_to_string(a)),
        Expr::Binary(op, a, b) => format!("{}({}, {})", op.keyword(), expr_to_string(a), expr_to_string(b)),
        Expr::IsInstance(a, c) => format!("isinstance({}, {})", expr_to_string(a), c),
        Expr::And(a, b) => format!("and({}, {})", expr_to_string(a), expr_to_string(b)),
        Expr::Or(a, b) => format!("or({}, {})", expr_to_string(a), expr_to_string(b)),
        Expr::Some(its, b) => format!("(some {} | {})", iters_to_string(its), expr_to_string(b)),
        Expr::Each(its, b) => format!("(each {} | {})", iters_to_string(its), expr_to_string(b)),
    }
}
