//! Static elimination of derived constructs.
//!
//! [`desugar_all`] runs the passes in a fixed order: boolean operators, global
//! variables, pattern normalization, `infer` patterns, `ifSome`/`whileSome`,
//! comprehensions (with aggregates and set displays), and tuple patterns in
//! iterators. Its output contains none of the forms counted by [`scan::eliminated_forms`].

pub mod scan;
mod visit;

pub use visit::{map_expr, map_stmt_exprs, map_stmts, subst_expr};

use crate::syntax::ast::*;
use crate::value::Value;
use std::collections::BTreeMap;
use visit::*;

/// Fresh-name prefix. `$` never starts a user identifier.
pub const FRESH_PREFIX: &str = "$t";

/// Generator of names that cannot collide with user identifiers.
#[derive(Clone, Debug)]
pub struct FreshNamer {
    prefix: String,
    counter: u64,
}

impl Default for FreshNamer {
    fn default() -> Self {
        FreshNamer { prefix: FRESH_PREFIX.to_string(), counter: 0 }
    }
}

impl FreshNamer {
    /// A namer whose counter starts past every `$tN` already present in `p`.
    pub fn for_program(p: &Program) -> FreshNamer {
        let text = crate::syntax::print_program(p);
        let mut max = 0;
        let mut rest = text.as_str();
        while let Some(i) = rest.find(FRESH_PREFIX) {
            rest = &rest[i + FRESH_PREFIX.len()..];
            let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
            if let Ok(n) = digits.parse::<u64>() {
                max = max.max(n + 1);
            }
        }
        FreshNamer { counter: max, ..FreshNamer::default() }
    }

    pub fn fresh(&mut self) -> String {
        let n = format!("{}{}", self.prefix, self.counter);
        self.counter += 1;
        n
    }

    /// A fresh global variable, already lowered to `a_gv.$tN`.
    pub fn var(&mut self) -> Expr {
        Expr::gv(&self.fresh())
    }
}

/// Runs every pass in order.
pub fn desugar_all(p: Program) -> Program {
    let mut namer = FreshNamer::for_program(&p);
    let p = desugar_bool(p);
    let p = desugar_globals(p);
    let p = normalize_patterns(p, &mut namer);
    let p = desugar_infer_patterns(p, &mut namer);
    let p = desugar_some_statements(p, &mut namer);
    let p = desugar_comprehensions(p, &mut namer);
    desugar_iterator_tuples(p, &mut namer)
}

/// Applies an expression rewrite everywhere: statement bodies and `defun` bodies.
fn rewrite_exprs(p: Program, f: &mut dyn FnMut(Expr) -> Expr) -> Program {
    let f = std::cell::RefCell::new(f);
    map_program(
        p,
        &mut |s| map_stmt_exprs(s, &mut |e| (f.borrow_mut())(e)),
        &mut |e| map_expr(e, &mut |e| (f.borrow_mut())(e)),
    )
}

/// Applies a statement rewrite to every `def` body.
fn rewrite_stmts(p: Program, f: &mut dyn FnMut(Stmt) -> Stmt) -> Program {
    map_program(p, &mut |s| map_stmts(s, f), &mut |e| e)
}

/// `a and b` in core form: `not(not(a) or not(b))`.
pub fn and_core(a: Expr, b: Expr) -> Expr {
    Expr::not(Expr::Or(Box::new(Expr::not(a)), Box::new(Expr::not(b))))
}

/// Right-nested core conjunction; `True` when empty.
fn conj(mut parts: Vec<Expr>) -> Expr {
    let Some(mut acc) = parts.pop() else {
        return Expr::lit_bool(true);
    };
    while let Some(p) = parts.pop() {
        acc = and_core(p, acc);
    }
    acc
}

fn int(i: usize) -> Expr {
    Expr::Lit(Value::Int(i as i64))
}

fn assign(t: Expr, e: Expr, loc: Loc) -> Stmt {
    Stmt::new(StmtKind::Assign(t, e), loc)
}

fn add_call(target: Expr, e: Expr, loc: Loc) -> Stmt {
    Stmt::new(StmtKind::Call(target, "add".into(), vec![e]), loc)
}

fn if_then(c: Expr, s: Stmt, loc: Loc) -> Stmt {
    Stmt::new(StmtKind::If(c, Box::new(s), Box::new(Stmt::skip(loc))), loc)
}

fn for_var(x: &Expr, src: Expr, body: Stmt, loc: Loc) -> Stmt {
    Stmt::new(StmtKind::For(Iter { pat: Pattern::Var(x.clone()), src }, Box::new(body)), loc)
}

// ---------- boolean operators ----------

/// Replaces `and` and `each` by `not`/`or`/`some`.
pub fn desugar_bool(p: Program) -> Program {
    rewrite_exprs(p, &mut |e| match e {
        Expr::And(a, b) => and_core(*a, *b),
        Expr::Each(its, b) => Expr::not(Expr::Some(its, Box::new(Expr::not(*b)))),
        e => e,
    })
}

// ---------- global variables ----------

/// Rewrites global variable `x` to `a_gv.x`, in statements and in rules.
pub fn desugar_globals(p: Program) -> Program {
    let lower_rs = |rs: RuleSetDecl| RuleSetDecl {
        rules: rs
            .rules
            .into_iter()
            .map(|r| {
                let atom = |a: Atom| Atom {
                    pred: match a.pred {
                        PredRef::Global(n) => PredRef::Inst(crate::value::GLOBAL_OBJ, n),
                        other => other,
                    },
                    args: a.args,
                };
                Rule {
                    head: atom(r.head),
                    body: r.body.into_iter().map(|h| Hyp { negated: h.negated, atom: atom(h.atom) }).collect(),
                }
            })
            .collect(),
        ..rs
    };
    let p = Program {
        rulesets: p.rulesets.into_iter().map(lower_rs).collect(),
        classes: p
            .classes
            .into_iter()
            .map(|c| ClassDecl { rulesets: c.rulesets.into_iter().map(lower_rs).collect(), ..c })
            .collect(),
        main: p.main,
    };
    rewrite_exprs(p, &mut |e| match e {
        Expr::Global(n) => Expr::gv(&n),
        e => e,
    })
}

// ---------- pattern normalization ----------

/// Within one list of iterators: a tuple component naming a variable bound by an
/// earlier iterator becomes `=x`, and wildcards become fresh variables.
fn normalize_iters(its: Vec<Iter>, namer: &mut FreshNamer) -> Vec<Iter> {
    let mut bound: Vec<String> = Vec::new();
    let mut out = Vec::new();
    for it in its {
        let pat = match it.pat {
            Pattern::Tuple(es) => Pattern::Tuple(
                es.into_iter()
                    .map(|e| match e {
                        PatElem::Var(v) if var_name(&v).is_some_and(|n| bound.iter().any(|b| b == n)) => {
                            PatElem::Eq(v)
                        }
                        PatElem::Wild => PatElem::Var(namer.var()),
                        e => e,
                    })
                    .collect(),
            ),
            Pattern::Var(v) if var_name(&v) == Some(WILDCARD) => Pattern::Var(namer.var()),
            p => p,
        };
        bound.extend(pattern_binders(&pat));
        out.push(Iter { pat, src: it.src });
    }
    out
}

/// Moves non-variable components whose expression mentions none of `bound` into
/// assignments `v := e` (returned), replacing them with `=v`.
fn hoist_pattern_exprs(its: Vec<Iter>, bound: &[String], namer: &mut FreshNamer, loc: Loc) -> (Vec<Stmt>, Vec<Iter>) {
    let mut pre = Vec::new();
    let its = its
        .into_iter()
        .map(|it| {
            let pat = match it.pat {
                Pattern::Tuple(es) => {
                    Pattern::Tuple(es.into_iter().map(|e| hoist_elem(e, bound, namer, &mut pre, loc)).collect())
                }
                p => p,
            };
            Iter { pat, src: it.src }
        })
        .collect();
    (pre, its)
}

fn hoist_elem(e: PatElem, bound: &[String], namer: &mut FreshNamer, pre: &mut Vec<Stmt>, loc: Loc) -> PatElem {
    match e {
        PatElem::Expr(x) if !mentions(&x, bound) => {
            let v = namer.var();
            pre.push(assign(v.clone(), x, loc));
            PatElem::Eq(v)
        }
        e => e,
    }
}

fn all_binders(its: &[Iter]) -> Vec<String> {
    its.iter().flat_map(|it| pattern_binders(&it.pat)).collect()
}

/// Nests multi-iterator `some`, eliminates wildcards, marks repeated variables
/// with `=`, and hoists non-variable components of statement-level patterns.
pub fn normalize_patterns(p: Program, namer: &mut FreshNamer) -> Program {
    let p = rewrite_exprs(p, &mut |e| match e {
        Expr::Some(its, b) => {
            let its = normalize_iters(its, namer);
            its.into_iter().rev().fold(*b, |body, it| Expr::Some(vec![it], Box::new(body)))
        }
        e => e,
    });
    rewrite_stmts(p, &mut |s| {
        let loc = s.loc;
        let mut norm = |its: Vec<Iter>| -> (Vec<Stmt>, Vec<Iter>) {
            let its = normalize_iters(its, namer);
            let bound = all_binders(&its);
            hoist_pattern_exprs(its, &bound, namer, loc)
        };
        let (pre, kind) = match s.kind {
            StmtKind::For(it, b) => {
                let (pre, mut its) = norm(vec![it]);
                (pre, StmtKind::For(its.remove(0), b))
            }
            StmtKind::IfSome(its, c, b) => {
                let (pre, its) = norm(its);
                (pre, StmtKind::IfSome(its, c, b))
            }
            StmtKind::WhileSome(its, c, b) => {
                let (pre, its) = norm(its);
                (pre, StmtKind::WhileSome(its, c, b))
            }
            StmtKind::Comp(t, c) => {
                let (pre, iters) = norm(c.iters);
                (pre, StmtKind::Comp(t, Comp { iters, ..c }))
            }
            StmtKind::Aggregate(t, op, AggSrc::Comp(c)) => {
                let (pre, iters) = norm(c.iters);
                (pre, StmtKind::Aggregate(t, op, AggSrc::Comp(Comp { iters, ..c })))
            }
            k => (Vec::new(), k),
        };
        let s = Stmt::new(kind, loc);
        if pre.is_empty() {
            s
        } else {
            Stmt::seq(pre.into_iter().chain([s]).collect(), loc)
        }
    })
}

// ---------- infer patterns ----------

/// Turns each query `p(pat)` into a bare query into a fresh variable, followed by a
/// comprehension projecting the pattern's unprefixed variables.
pub fn desugar_infer_patterns(p: Program, namer: &mut FreshNamer) -> Program {
    rewrite_stmts(p, &mut |s| {
        let loc = s.loc;
        let StmtKind::Infer(mut inf) = s.kind else {
            return s;
        };
        if inf.queries.iter().all(|q| q.pattern.is_none()) {
            return Stmt::new(StmtKind::Infer(inf), loc);
        }
        let mut pre = Vec::new();
        let mut post = Vec::new();
        for (q, target) in inf.queries.iter_mut().zip(inf.targets.iter_mut()) {
            let Some(pat) = q.pattern.take() else { continue };
            let y = namer.var();
            let x = std::mem::replace(target, y.clone());
            let mut proj = Vec::new();
            let elems: Vec<PatElem> = pat
                .into_iter()
                .map(|e| match e {
                    PatElem::Wild => {
                        let v = namer.var();
                        proj.push(v.clone());
                        PatElem::Var(v)
                    }
                    PatElem::Var(v) => {
                        proj.push(v.clone());
                        PatElem::Var(v)
                    }
                    e => hoist_elem(e, &[], namer, &mut pre, loc),
                })
                .collect();
            let comp = Comp {
                elem: Expr::Tuple(proj),
                iters: vec![Iter { pat: Pattern::Tuple(elems), src: y }],
                cond: Expr::lit_bool(true),
            };
            post.push(Stmt::new(StmtKind::Comp(x, comp), loc));
        }
        let stmts = pre.into_iter().chain([Stmt::new(StmtKind::Infer(inf), loc)]).chain(post).collect();
        Stmt::seq(stmts, loc)
    })
}

// ---------- ifSome / whileSome ----------

/// Renames the unprefixed variables of `its` to fresh ones. Returns the renamed
/// iterators and the (original, fresh) pairs in binding order.
fn prime_iters(its: Vec<Iter>, namer: &mut FreshNamer) -> (Vec<Iter>, Vec<(Expr, Expr)>, BTreeMap<String, Expr>) {
    let mut theta: BTreeMap<String, Expr> = BTreeMap::new();
    let mut pairs = Vec::new();
    let mut out = Vec::new();
    for it in its {
        let src = subst_expr(&it.src, &theta);
        let mut own: BTreeMap<String, Expr> = BTreeMap::new();
        let mut rename = |v: Expr, pairs: &mut Vec<(Expr, Expr)>| -> Expr {
            let n = var_name(&v).unwrap_or_default().to_string();
            let fresh = own.entry(n).or_insert_with(|| namer.var()).clone();
            pairs.push((v, fresh.clone()));
            fresh
        };
        let pat = match it.pat {
            Pattern::Var(v) => Pattern::Var(rename(v, &mut pairs)),
            Pattern::Tuple(es) => Pattern::Tuple(
                es.into_iter()
                    .map(|e| match e {
                        PatElem::Var(v) => PatElem::Var(rename(v, &mut pairs)),
                        e => match subst_pattern(&Pattern::Tuple(vec![e]), &theta) {
                            Pattern::Tuple(mut v) => v.remove(0),
                            Pattern::Var(_) => unreachable!(),
                        },
                    })
                    .collect(),
            ),
        };
        theta.extend(own);
        out.push(Iter { pat, src });
    }
    (out, pairs, theta)
}

fn lower_some_stmt(its: Vec<Iter>, cond: Expr, body: Stmt, looping: bool, namer: &mut FreshNamer, loc: Loc) -> Stmt {
    let found = namer.var();
    let (its, pairs, theta) = prime_iters(its, namer);
    let guard = and_core(subst_expr(&cond, &theta), Expr::not(found.clone()));
    let mut then = Vec::new();
    for (x, xp) in pairs {
        then.push(assign(x, xp, loc));
    }
    then.push(body);
    then.push(assign(found.clone(), Expr::lit_bool(true), loc));
    let mut inner = if_then(guard, Stmt::seq(then, loc), loc);
    for it in its.into_iter().rev() {
        inner = Stmt::new(StmtKind::For(it, Box::new(inner)), loc);
    }
    if looping {
        let reset = assign(found.clone(), Expr::lit_bool(false), loc);
        Stmt::seq(
            vec![
                assign(found.clone(), Expr::lit_bool(true), loc),
                Stmt::new(StmtKind::While(found, Box::new(Stmt::seq(vec![reset, inner], loc))), loc),
            ],
            loc,
        )
    } else {
        Stmt::seq(vec![assign(found, Expr::lit_bool(false), loc), inner], loc)
    }
}

/// Replaces `ifSome` and `whileSome` by `for` loops guarded by a fresh flag.
pub fn desugar_some_statements(p: Program, namer: &mut FreshNamer) -> Program {
    rewrite_stmts(p, &mut |s| {
        let loc = s.loc;
        match s.kind {
            StmtKind::IfSome(its, c, b) => lower_some_stmt(its, c, *b, false, namer, loc),
            StmtKind::WhileSome(its, c, b) => lower_some_stmt(its, c, *b, true, namer, loc),
            k => Stmt::new(k, loc),
        }
    })
}

// ---------- comprehensions, displays and aggregates ----------

fn comp_mentions(target: &Expr, c: &Comp) -> bool {
    let mut hit = occurs(target, &c.elem) || occurs(target, &c.cond);
    for it in &c.iters {
        hit |= occurs(target, &it.src);
        if let Pattern::Tuple(es) = &it.pat {
            for e in es {
                if let PatElem::Eq(x) | PatElem::Expr(x) = e {
                    hit |= occurs(target, x);
                }
            }
        }
    }
    hit
}

/// `x := {e : iters | b}` as `new set` plus nested loops and a guarded `add`.
fn lower_comp(target: Expr, c: Comp, namer: &mut FreshNamer, loc: Loc) -> Stmt {
    let tmp = comp_mentions(&target, &c).then(|| namer.var());
    let set = tmp.clone().unwrap_or_else(|| target.clone());
    let mut conjuncts = Vec::new();
    let iters: Vec<Iter> = c
        .iters
        .into_iter()
        .map(|it| {
            let pat = match it.pat {
                Pattern::Tuple(es) => Pattern::Tuple(
                    es.into_iter()
                        .map(|e| match e {
                            PatElem::Eq(x) => {
                                let y = namer.var();
                                conjuncts.push(Expr::bin(BinOp::Is, y.clone(), x));
                                PatElem::Var(y)
                            }
                            e => e,
                        })
                        .collect(),
                ),
                p => p,
            };
            Iter { pat, src: it.src }
        })
        .collect();
    let cond = if conjuncts.is_empty() {
        c.cond
    } else {
        conjuncts.push(c.cond);
        conj(conjuncts)
    };
    let mut inner = if_then(cond, add_call(set.clone(), c.elem, loc), loc);
    for it in iters.into_iter().rev() {
        inner = Stmt::new(StmtKind::For(it, Box::new(inner)), loc);
    }
    let mut out = vec![Stmt::new(StmtKind::New(set.clone(), "set".into()), loc), inner];
    if tmp.is_some() {
        out.push(assign(target, set, loc));
    }
    Stmt::seq(out, loc)
}

fn lower_display(target: Expr, items: Vec<Expr>, namer: &mut FreshNamer, loc: Loc) -> Stmt {
    let tmp = items.iter().any(|i| occurs(&target, i)).then(|| namer.var());
    let set = tmp.clone().unwrap_or_else(|| target.clone());
    let mut out = vec![Stmt::new(StmtKind::New(set.clone(), "set".into()), loc)];
    out.extend(items.into_iter().map(|i| add_call(set.clone(), i, loc)));
    if tmp.is_some() {
        out.push(assign(target, set, loc));
    }
    Stmt::seq(out, loc)
}

fn lower_aggregate(target: Expr, op: AggOp, src: AggSrc, namer: &mut FreshNamer, loc: Loc) -> Stmt {
    let mut out = Vec::new();
    let src = match src {
        AggSrc::Expr(e) => e,
        AggSrc::Comp(c) => {
            let t = namer.var();
            out.push(lower_comp(t.clone(), c, namer, loc));
            t
        }
    };
    let acc = namer.var();
    let v = namer.var();
    let plus = |a: &Expr, b: Expr| Expr::bin(BinOp::Plus, a.clone(), b);
    let (init, step) = match op {
        AggOp::Count => (int(0), assign(acc.clone(), plus(&acc, int(1)), loc)),
        AggOp::Sum => (int(0), assign(acc.clone(), plus(&acc, v.clone()), loc)),
        AggOp::Max | AggOp::Min => {
            let better = if op == AggOp::Max {
                Expr::bin(BinOp::Lt, acc.clone(), v.clone())
            } else {
                Expr::bin(BinOp::Lt, v.clone(), acc.clone())
            };
            let unset = Expr::bin(BinOp::Is, acc.clone(), Expr::Lit(Value::None));
            let c = Expr::Or(Box::new(unset), Box::new(better));
            (Expr::Lit(Value::None), if_then(c, assign(acc.clone(), v.clone(), loc), loc))
        }
    };
    out.push(assign(acc.clone(), init, loc));
    out.push(for_var(&v, src, step, loc));
    out.push(assign(target, acc, loc));
    Stmt::seq(out, loc)
}

/// Eliminates comprehensions, set displays and aggregates.
pub fn desugar_comprehensions(p: Program, namer: &mut FreshNamer) -> Program {
    rewrite_stmts(p, &mut |s| {
        let loc = s.loc;
        match s.kind {
            StmtKind::Comp(t, c) => lower_comp(t, c, namer, loc),
            StmtKind::Display(t, items) => lower_display(t, items, namer, loc),
            StmtKind::Aggregate(t, op, src) => lower_aggregate(t, op, src, namer, loc),
            k => Stmt::new(k, loc),
        }
    })
}

// ---------- tuple patterns in iterators ----------

/// Binder positions (1-based, with the variable) and test positions (1-based, with
/// the expected value) of a tuple pattern.
fn split_tuple_pattern(es: Vec<PatElem>, namer: &mut FreshNamer) -> (Vec<(usize, Expr)>, Vec<(usize, Expr)>) {
    let mut binders = Vec::new();
    let mut tests = Vec::new();
    for (i, e) in es.into_iter().enumerate() {
        match e {
            PatElem::Var(v) => binders.push((i + 1, v)),
            PatElem::Wild => binders.push((i + 1, namer.var())),
            PatElem::Eq(x) | PatElem::Expr(x) => tests.push((i + 1, x)),
        }
    }
    (binders, tests)
}

fn select(x: &Expr, i: usize) -> Expr {
    Expr::bin(BinOp::Select, x.clone(), int(i))
}

/// `isTuple(x) and len(x) is n [and (select(x,j)..) is (e_j..)]`, as a list of conjuncts.
fn tuple_shape_test(x: &Expr, n: usize, tests: &[(usize, Expr)]) -> Vec<Expr> {
    let mut parts = vec![
        Expr::Unary(UnOp::IsTuple, Box::new(x.clone())),
        Expr::bin(BinOp::Is, Expr::Unary(UnOp::Len, Box::new(x.clone())), int(n)),
    ];
    if !tests.is_empty() {
        parts.push(Expr::bin(
            BinOp::Is,
            Expr::Tuple(tests.iter().map(|(j, _)| select(x, *j)).collect()),
            Expr::Tuple(tests.iter().map(|(_, e)| e.clone()).collect()),
        ));
    }
    parts
}

/// Makes every iterator bind a single variable.
pub fn desugar_iterator_tuples(p: Program, namer: &mut FreshNamer) -> Program {
    let p = rewrite_exprs(p, &mut |e| match e {
        Expr::Some(mut its, b) if its.len() == 1 && matches!(its[0].pat, Pattern::Tuple(_)) => {
            let it = its.remove(0);
            let Pattern::Tuple(es) = it.pat else { unreachable!() };
            let n = es.len();
            let x = namer.var();
            let (binders, tests) = split_tuple_pattern(es, namer);
            let theta: BTreeMap<String, Expr> = binders
                .iter()
                .filter_map(|(i, v)| var_name(v).map(|name| (name.to_string(), select(&x, *i))))
                .collect();
            let mut parts = tuple_shape_test(&x, n, &tests);
            parts.push(subst_expr(&b, &theta));
            Expr::Some(vec![Iter { pat: Pattern::Var(x), src: it.src }], Box::new(conj(parts)))
        }
        e => e,
    });
    rewrite_stmts(p, &mut |s| {
        let loc = s.loc;
        match s.kind {
            StmtKind::For(Iter { pat: Pattern::Tuple(es), src }, body) => {
                let n = es.len();
                let (x, set, filtered) = (namer.var(), namer.var(), namer.var());
                let (binders, tests) = split_tuple_pattern(es, namer);
                let shape = conj(tuple_shape_test(&x, n, &tests));
                let bind = |body: Stmt| {
                    let mut v: Vec<Stmt> = binders.iter().map(|(i, b)| assign(b.clone(), select(&x, *i), loc)).collect();
                    v.push(body);
                    Stmt::seq(v, loc)
                };
                let set_branch = Stmt::seq(
                    vec![
                        Stmt::new(StmtKind::New(filtered.clone(), "set".into()), loc),
                        for_var(&x, set.clone(), if_then(shape.clone(), add_call(filtered.clone(), x.clone(), loc), loc), loc),
                        for_var(&x, filtered, bind((*body).clone()), loc),
                    ],
                    loc,
                );
                let seq_branch = for_var(&x, set.clone(), if_then(shape, bind(*body), loc), loc);
                Stmt::seq(
                    vec![
                        assign(set.clone(), src, loc),
                        Stmt::new(
                            StmtKind::If(
                                Expr::IsInstance(Box::new(set), "set".into()),
                                Box::new(set_branch),
                                Box::new(seq_branch),
                            ),
                            loc,
                        ),
                    ],
                    loc,
                )
            }
            k => Stmt::new(k, loc),
        }
    })
}
