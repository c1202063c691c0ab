//! Static analysis of rule sets: base/derived classification, dependencies,
//! slicing by known base predicates, instantiation and stratification.

use crate::syntax::ast::{Atom, PredRef, Rule, RuleSetDecl, Term};
use crate::value::Addr;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

pub type PredSet = BTreeSet<PredRef>;

/// Classification of the predicates of a rule set.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleSetInfo {
    pub name: String,
    pub rules: Vec<Rule>,
    pub base_params: PredSet,
    pub base_vars: PredSet,
    pub derived_vars: PredSet,
    pub derived_params: PredSet,
    /// Derived predicate to every predicate it depends on, transitively.
    pub deps: BTreeMap<PredRef, PredSet>,
}

impl RuleSetInfo {
    pub fn base(&self) -> PredSet {
        self.base_params.union(&self.base_vars).cloned().collect()
    }

    pub fn derived(&self) -> PredSet {
        self.derived_params.union(&self.derived_vars).cloned().collect()
    }

    pub fn is_derived(&self, p: &PredRef) -> bool {
        self.derived_vars.contains(p) || self.derived_params.contains(p)
    }
}

/// Every predicate occurring in `rules`, in conclusions or hypotheses.
pub fn predicates(rules: &[Rule]) -> PredSet {
    let mut out = PredSet::new();
    for r in rules {
        out.insert(r.head.pred.clone());
        for h in &r.body {
            out.insert(h.atom.pred.clone());
        }
    }
    out
}

/// Predicates occurring in some conclusion.
pub fn heads(rules: &[Rule]) -> PredSet {
    rules.iter().map(|r| r.head.pred.clone()).collect()
}

/// Transitive dependency map over the derived predicates of `rules`.
/// Negative hypotheses count like positive ones.
pub fn dependencies(rules: &[Rule]) -> BTreeMap<PredRef, PredSet> {
    let mut direct: BTreeMap<PredRef, PredSet> = BTreeMap::new();
    for r in rules {
        let e = direct.entry(r.head.pred.clone()).or_default();
        for h in &r.body {
            e.insert(h.atom.pred.clone());
        }
    }
    let mut out = BTreeMap::new();
    for p in direct.keys() {
        let mut seen = PredSet::new();
        let mut work: Vec<&PredRef> = direct[p].iter().collect();
        while let Some(q) = work.pop() {
            if seen.insert(q.clone()) {
                if let Some(next) = direct.get(q) {
                    work.extend(next.iter());
                }
            }
        }
        out.insert(p.clone(), seen);
    }
    out
}

pub fn classify(decl: &RuleSetDecl) -> RuleSetInfo {
    classify_rules(&decl.name, &decl.rules)
}

pub fn classify_rules(name: &str, rules: &[Rule]) -> RuleSetInfo {
    let derived = heads(rules);
    let mut info = RuleSetInfo {
        name: name.to_string(),
        rules: rules.to_vec(),
        base_params: PredSet::new(),
        base_vars: PredSet::new(),
        derived_vars: PredSet::new(),
        derived_params: PredSet::new(),
        deps: dependencies(rules),
    };
    for p in predicates(rules) {
        let set = match (derived.contains(&p), p.is_variable()) {
            (true, true) => &mut info.derived_vars,
            (true, false) => &mut info.derived_params,
            (false, true) => &mut info.base_vars,
            (false, false) => &mut info.base_params,
        };
        set.insert(p);
    }
    info
}

/// True iff every base predicate that `derived` depends on is in `given`.
pub fn fully_depends(info: &RuleSetInfo, derived: &PredRef, given: &PredSet) -> bool {
    let heads = info.derived();
    fully_depends_in(&info.deps, &heads, derived, given)
}

fn fully_depends_in(
    deps: &BTreeMap<PredRef, PredSet>,
    heads: &PredSet,
    derived: &PredRef,
    given: &PredSet,
) -> bool {
    match deps.get(derived) {
        Some(ds) => ds.iter().all(|q| heads.contains(q) || given.contains(q)),
        None => false,
    }
}

/// Rules defining the derived predicates that fully depend on `known`.
pub fn slice(rules: &[Rule], known: &PredSet) -> Vec<Rule> {
    let deps = dependencies(rules);
    let hs = heads(rules);
    let keep: PredSet = hs.iter().filter(|p| fully_depends_in(&deps, &hs, p, known)).cloned().collect();
    rules.iter().filter(|r| keep.contains(&r.head.pred)).cloned().collect()
}

/// Derived predicates of `rules` that do not fully depend on `known`.
pub fn undefined_preds(rules: &[Rule], known: &PredSet) -> PredSet {
    let deps = dependencies(rules);
    let hs = heads(rules);
    hs.iter().filter(|p| !fully_depends_in(&deps, &hs, p, known)).cloned().collect()
}

/// Where an instantiated rule set came from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    Global,
    Class(String),
}

/// A rule set whose `self` fields are bound to a receiver address.
#[derive(Clone, Debug, PartialEq)]
pub struct InstRuleSet {
    pub name: String,
    pub origin: Origin,
    pub receiver: Addr,
    pub rules: Vec<Rule>,
}

impl InstRuleSet {
    pub fn info(&self) -> RuleSetInfo {
        classify_rules(&self.name, &self.rules)
    }
}

fn inst_pred(p: &PredRef, recv: Addr) -> PredRef {
    match p {
        PredRef::SelfField(f) => PredRef::Inst(recv, f.clone()),
        PredRef::Global(g) => PredRef::Inst(crate::value::GLOBAL_OBJ, g.clone()),
        other => other.clone(),
    }
}

fn inst_atom(a: &Atom, recv: Addr) -> Atom {
    Atom { pred: inst_pred(&a.pred, recv), args: a.args.clone() }
}

/// Replaces `self.f` with field `f` of `receiver`; parameters are kept.
pub fn instantiate(decl: &RuleSetDecl, origin: Origin, receiver: Addr) -> InstRuleSet {
    let rules = decl
        .rules
        .iter()
        .map(|r| Rule {
            head: inst_atom(&r.head, receiver),
            body: r
                .body
                .iter()
                .map(|h| crate::syntax::ast::Hyp { negated: h.negated, atom: inst_atom(&h.atom, receiver) })
                .collect(),
        })
        .collect();
    InstRuleSet { name: decl.name.clone(), origin, receiver, rules }
}

/// A negative dependency inside a recursive component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NotStratified {
    pub head: PredRef,
    pub negated: PredRef,
}

impl std::fmt::Display for NotStratified {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "not stratified: {} depends negatively on {} within a recursive cycle", self.head, self.negated)
    }
}

/// Partitions the derived predicates into strata such that a predicate's
/// positive dependencies lie in its own or lower strata and its negative
/// dependencies lie strictly lower.
pub fn stratify(rules: &[Rule]) -> Result<Vec<PredSet>, NotStratified> {
    let hs: Vec<PredRef> = heads(rules).into_iter().collect();
    let idx: BTreeMap<&PredRef, usize> = hs.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let n = hs.len();
    // Edges head -> body predicate (derived only), with polarity.
    let mut edges: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    for r in rules {
        let h = idx[&r.head.pred];
        for hyp in &r.body {
            if let Some(&b) = idx.get(&hyp.atom.pred) {
                edges[h].push((b, hyp.negated));
            }
        }
    }
    let comp = scc(&edges);
    for (h, es) in edges.iter().enumerate() {
        for &(b, neg) in es {
            if neg && comp[h] == comp[b] {
                return Err(NotStratified { head: hs[h].clone(), negated: hs[b].clone() });
            }
        }
    }
    // Longest-path layering over the component DAG. Components are numbered in
    // reverse topological order by Tarjan, so dependencies come first.
    let ncomp = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
    for (v, &c) in comp.iter().enumerate() {
        members[c].push(v);
    }
    let mut level = vec![0usize; ncomp];
    for c in 0..ncomp {
        let mut l = 0;
        for &v in &members[c] {
            for &(b, neg) in &edges[v] {
                if comp[b] != c {
                    l = l.max(level[comp[b]] + usize::from(neg));
                }
            }
        }
        level[c] = l;
    }
    let nlev = level.iter().copied().max().map_or(0, |m| m + 1);
    let mut strata = vec![PredSet::new(); nlev];
    for (v, p) in hs.iter().enumerate() {
        strata[level[comp[v]]].insert(p.clone());
    }
    Ok(strata)
}

/// Tarjan's algorithm; component ids are assigned in reverse topological order
/// (a component's successors get smaller ids).
fn scc(edges: &[Vec<(usize, bool)>]) -> Vec<usize> {
    struct St<'a> {
        edges: &'a [Vec<(usize, bool)>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on: Vec<bool>,
        stack: Vec<usize>,
        comp: Vec<usize>,
        next: usize,
        ncomp: usize,
    }
    fn visit(s: &mut St, v: usize) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on[v] = true;
        for i in 0..s.edges[v].len() {
            let w = s.edges[v][i].0;
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on[w] => s.low[v] = s.low[v].min(iw),
                _ => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            loop {
                let w = s.stack.pop().unwrap();
                s.on[w] = false;
                s.comp[w] = s.ncomp;
                if w == v {
                    break;
                }
            }
            s.ncomp += 1;
        }
    }
    let n = edges.len();
    let mut s = St {
        edges,
        index: vec![None; n],
        low: vec![0; n],
        on: vec![false; n],
        stack: Vec::new(),
        comp: vec![0; n],
        next: 0,
        ncomp: 0,
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.comp
}

/// Human-readable classification, dependencies and strata for `--explain-rules`.
pub fn explain(info: &RuleSetInfo) -> String {
    let fmt = |s: &PredSet| s.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ");
    let mut out = String::new();
    writeln!(out, "rule set {}", info.name).unwrap();
    writeln!(out, "  base parameters: {{{}}}", fmt(&info.base_params)).unwrap();
    writeln!(out, "  base variables: {{{}}}", fmt(&info.base_vars)).unwrap();
    writeln!(out, "  derived parameters: {{{}}}", fmt(&info.derived_params)).unwrap();
    writeln!(out, "  derived variables: {{{}}}", fmt(&info.derived_vars)).unwrap();
    for (p, ds) in &info.deps {
        writeln!(out, "  {p} depends on {{{}}}", fmt(ds)).unwrap();
    }
    match stratify(&info.rules) {
        Ok(strata) => {
            for (i, s) in strata.iter().enumerate() {
                writeln!(out, "  stratum {i}: {{{}}}", fmt(s)).unwrap();
            }
        }
        Err(e) => writeln!(out, "  {e}; evaluated under well-founded semantics").unwrap(),
    }
    out
}

/// Variables of a rule, in order of first occurrence.
pub fn rule_vars(r: &Rule) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let all = std::iter::once(&r.head).chain(r.body.iter().map(|h| &h.atom));
    for a in all {
        for t in &a.args {
            if let Term::Var(v) = t {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;
