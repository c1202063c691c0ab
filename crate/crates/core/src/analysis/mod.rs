//! Compile-time checks on core programs: updates to derived predicates and
//! well-formed `infer` calls.
//!
//! Update targets are resolved by name only: `a_gv.f` against the global
//! derived variables of every rule set, `self.f` against the rule sets of the
//! enclosing class and its ancestors. Updates through other references are
//! left to the alias-checked runtime guard.

#[cfg(test)]
mod tests;

use crate::rules::{classify, RuleSetInfo};
use crate::runtime::Mode;
use crate::syntax::ast::*;
use crate::syntax::check::visit_stmt;
use crate::syntax::Diagnostic;
use crate::value::GLOBAL_OBJ;
use std::collections::BTreeSet;
use std::fmt::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteKind {
    /// Updates a base predicate variable of some rule set.
    BaseUpdate,
    /// Updates a derived predicate variable.
    DerivedUpdateError,
    /// Touches no predicate known by name.
    Unrelated,
}

impl SiteKind {
    pub fn label(self) -> &'static str {
        match self {
            SiteKind::BaseUpdate => "base-update",
            SiteKind::DerivedUpdateError => "derived-update-error",
            SiteKind::Unrelated => "unrelated",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateSite {
    pub loc: Loc,
    /// `a_gv.f`, `self.f`, or `?.f` for other receivers.
    pub target: String,
    pub kind: SiteKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateSiteReport {
    pub sites: Vec<UpdateSite>,
    pub mode: Mode,
}

impl UpdateSiteReport {
    /// One line per site: `line:col: kind target`.
    pub fn explain(&self) -> String {
        let mut out = String::new();
        for s in &self.sites {
            let _ = writeln!(out, "{}: {} {}", s.loc, s.kind.label(), s.target);
        }
        out
    }

    pub fn count(&self, kind: SiteKind) -> usize {
        self.sites.iter().filter(|s| s.kind == kind).count()
    }
}

/// Predicate variables by role, as names.
#[derive(Default)]
struct Roles {
    derived: BTreeSet<String>,
    base: BTreeSet<String>,
}

impl Roles {
    fn kind(&self, f: &str) -> SiteKind {
        if self.derived.contains(f) {
            SiteKind::DerivedUpdateError
        } else if self.base.contains(f) {
            SiteKind::BaseUpdate
        } else {
            SiteKind::Unrelated
        }
    }
}

fn add_roles(info: &RuleSetInfo, global: &mut Roles, own: Option<&mut Roles>) {
    let mut own = own;
    for (set, derived) in [(&info.derived_vars, true), (&info.base_vars, false)] {
        for p in set {
            let (roles, f) = match p {
                PredRef::Global(f) | PredRef::Inst(GLOBAL_OBJ, f) => (&mut *global, f),
                PredRef::SelfField(f) => match own.as_deref_mut() {
                    Some(r) => (r, f),
                    None => continue,
                },
                _ => continue,
            };
            if derived { roles.derived.insert(f.clone()) } else { roles.base.insert(f.clone()) };
        }
    }
}

fn ancestors<'p>(p: &'p Program, c: &'p ClassDecl) -> Vec<&'p ClassDecl> {
    let mut chain = vec![c];
    while let Some(parent) = chain.last().unwrap().extends.as_deref().and_then(|n| p.class(n)) {
        if chain.iter().any(|x| x.name == parent.name) {
            break;
        }
        chain.push(parent);
    }
    chain
}

fn global_roles(p: &Program) -> Roles {
    let mut g = Roles::default();
    for rs in p.rulesets.iter().chain(p.classes.iter().flat_map(|c| c.rulesets.iter())) {
        add_roles(&classify(rs), &mut g, None);
    }
    g
}

fn class_roles(p: &Program, c: &ClassDecl) -> Roles {
    let mut own = Roles::default();
    let mut scratch = Roles::default();
    for cls in ancestors(p, c) {
        for rs in &cls.rulesets {
            add_roles(&classify(rs), &mut scratch, Some(&mut own));
        }
    }
    own
}

/// Statements of the program with the class whose method contains them.
fn bodies(p: &Program) -> Vec<(Option<&ClassDecl>, &Stmt)> {
    let mut out = vec![(None, &p.main)];
    for c in &p.classes {
        for m in &c.methods {
            if let MethodBody::Def(s) = &m.body {
                out.push((Some(c), s));
            }
        }
    }
    out
}

/// Classifies every heap-mutating statement. In no-alias mode an update of a
/// derived predicate variable is a diagnostic.
pub fn check_updates(p: &Program, mode: Mode) -> Result<UpdateSiteReport, Vec<Diagnostic>> {
    let global = global_roles(p);
    let mut sites = Vec::new();
    for (class, body) in bodies(p) {
        let own = class.map(|c| class_roles(p, c)).unwrap_or_default();
        let site = |e: &Expr, loc: Loc| -> UpdateSite {
            match e {
                Expr::Field(b, f) if matches!(**b, Expr::GlobalObj) => {
                    UpdateSite { loc, target: format!("a_gv.{f}"), kind: global.kind(f) }
                }
                Expr::Global(f) => UpdateSite { loc, target: format!("a_gv.{f}"), kind: global.kind(f) },
                Expr::Field(b, f) if matches!(&**b, Expr::Param(s) if s == "self") && class.is_some() => {
                    UpdateSite { loc, target: format!("self.{f}"), kind: own.kind(f) }
                }
                Expr::Field(_, f) => UpdateSite { loc, target: format!("?.{f}"), kind: SiteKind::Unrelated },
                _ => UpdateSite { loc, target: "?".into(), kind: SiteKind::Unrelated },
            }
        };
        visit_stmt(body, &mut |s| match &s.kind {
            StmtKind::Assign(t, _)
            | StmtKind::New(t, _)
            | StmtKind::Comp(t, _)
            | StmtKind::Display(t, _)
            | StmtKind::Aggregate(t, _, _) => sites.push(site(t, s.loc)),
            StmtKind::Call(recv, m, _) if BUILTIN_UPDATE_METHODS.contains(&m.as_str()) => {
                sites.push(site(recv, s.loc))
            }
            StmtKind::Infer(inf) => sites.extend(inf.targets.iter().map(|t| site(t, s.loc))),
            _ => {}
        });
    }
    sites.sort_by_key(|s| s.loc);
    if mode == Mode::NoAlias {
        let diags: Vec<Diagnostic> = sites
            .iter()
            .filter(|s| s.kind == SiteKind::DerivedUpdateError)
            .map(|s| {
                Diagnostic::new(
                    "derived-update",
                    format!("{} is a derived predicate and cannot be updated outside its rule set", s.target),
                    s.loc,
                )
            })
            .collect();
        if !diags.is_empty() {
            return Err(diags);
        }
    }
    Ok(UpdateSiteReport { sites, mode })
}

/// Every `infer` names a known rule set, binds only base-predicate
/// parameters and queries only derived predicates.
pub fn local_infer_check(p: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for (class, body) in bodies(p) {
        visit_stmt(body, &mut |s| {
            let StmtKind::Infer(inf) = &s.kind else { return };
            let candidates: Vec<&RuleSetDecl> = match &inf.recv {
                None => p.rulesets.iter().filter(|r| r.name == inf.rules).collect(),
                Some(Expr::Param(x)) if x == "self" && class.is_some() => ancestors(p, class.unwrap())
                    .into_iter()
                    .flat_map(|c| c.rulesets.iter())
                    .filter(|r| r.name == inf.rules)
                    .take(1)
                    .collect(),
                Some(_) => p.classes.iter().flat_map(|c| c.rulesets.iter()).filter(|r| r.name == inf.rules).collect(),
            };
            if candidates.is_empty() {
                diags.push(Diagnostic::new("unknown-ruleset", format!("no rule set named {}", inf.rules), s.loc));
                return;
            }
            // With an unresolved receiver, a call is accepted if some candidate accepts it.
            let per: Vec<Vec<Diagnostic>> = candidates.iter().map(|rs| infer_against(rs, inf, s.loc)).collect();
            if per.iter().all(|d| !d.is_empty()) {
                diags.extend(per.into_iter().next().unwrap());
            }
        });
    }
    diags
}

fn infer_against(rs: &RuleSetDecl, inf: &Infer, loc: Loc) -> Vec<Diagnostic> {
    let info = classify(rs);
    let mut diags = Vec::new();
    for (k, _) in &inf.kwargs {
        if !info.base_params.contains(&PredRef::Param(k.clone())) {
            let why = if rs.params.contains(k) { "is derived, not a base predicate" } else { "is not a parameter" };
            diags.push(Diagnostic::new("bad-kwarg", format!("{k} {why} of rule set {}", rs.name), loc));
        }
    }
    for q in &inf.queries {
        let cands = if q.on_self {
            vec![PredRef::SelfField(q.pred.clone())]
        } else if rs.params.contains(&q.pred) {
            vec![PredRef::Param(q.pred.clone())]
        } else {
            vec![PredRef::Global(q.pred.clone()), PredRef::Inst(GLOBAL_OBJ, q.pred.clone())]
        };
        if !cands.iter().any(|c| info.is_derived(c)) {
            diags.push(Diagnostic::new(
                "bad-query",
                format!("{} is not a derived predicate of rule set {}", q.pred, rs.name),
                loc,
            ));
        }
    }
    diags
}

/// Both checks; infer diagnostics come first.
pub fn check(p: &Program, mode: Mode) -> Result<UpdateSiteReport, Vec<Diagnostic>> {
    let mut diags = local_infer_check(p);
    match check_updates(p, mode) {
        Ok(r) if diags.is_empty() => Ok(r),
        Ok(_) => Err(diags),
        Err(d) => {
            diags.extend(d);
            diags.sort_by_key(|d| d.loc);
            Err(diags)
        }
    }
}
