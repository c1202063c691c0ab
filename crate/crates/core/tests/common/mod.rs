//! Independent oracles and helpers shared by the integration tests.
//!
//! Nothing here calls into the engine or the bench harness: closures use
//! Warshall's algorithm, game values use retrograde analysis, and rule
//! programs are evaluated by brute-force grounding.

#![allow(dead_code)]

use rulelang::analysis;
use rulelang::desugar::desugar_all;
use rulelang::runtime::{Machine, Mode, Options};
use rulelang::syntax::{parse_program, Atom, Hyp, PredRef, Program, Rule, Term};
use rulelang::value::{Relation, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

pub fn compile(src: &str) -> Program {
    let p = desugar_all(parse_program(src).unwrap_or_else(|d| panic!("{d:?}\n{src}")));
    analysis::check(&p, Mode::NoAlias).unwrap_or_else(|d| panic!("{d:?}\n{src}"));
    p
}

/// Runs `src` after binding `binds` to globals; returns the rows of `names`
/// (`None` when the global does not hold a set).
pub fn run_globals(src: &str, binds: &[(&str, &Relation)], names: &[&str]) -> BTreeMap<String, Option<Relation>> {
    let p = compile(src);
    let mut m = Machine::new(&p, Options { step_budget: u64::MAX, ..Options::default() }).unwrap();
    for (g, r) in binds {
        m.bind_global_set(g, r).unwrap();
    }
    m.run().unwrap_or_else(|e| panic!("{e}"));
    names.iter().map(|n| (n.to_string(), m.global_rows(n))).collect()
}

pub fn int(i: i64) -> Value {
    Value::Int(i)
}

pub fn pairs(ps: &[(i64, i64)]) -> Relation {
    ps.iter().map(|&(a, b)| vec![int(a), int(b)]).collect()
}

pub fn unary(xs: impl IntoIterator<Item = i64>) -> Relation {
    xs.into_iter().map(|x| vec![int(x)]).collect()
}

fn as_int(v: &Value) -> i64 {
    match v {
        Value::Int(i) => *i,
        other => panic!("expected an integer, got {other}"),
    }
}

/// Transitive closure over vertices `0..n` by Warshall's algorithm.
pub fn warshall(n: usize, edges: &Relation) -> Relation {
    let mut m = vec![vec![false; n]; n];
    for e in edges {
        m[as_int(&e[0]) as usize][as_int(&e[1]) as usize] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if m[i][k] {
                for j in 0..n {
                    if m[k][j] {
                        m[i][j] = true;
                    }
                }
            }
        }
    }
    let mut out = Relation::new();
    for (i, row) in m.iter().enumerate() {
        for (j, &b) in row.iter().enumerate() {
            if b {
                out.insert(vec![int(i as i64), int(j as i64)]);
            }
        }
    }
    out
}

/// Won, lost and drawn positions of `0..n` under "a player who cannot move
/// loses", by retrograde analysis from the terminal positions.
pub fn retrograde(n: usize, moves: &Relation) -> (BTreeSet<i64>, BTreeSet<i64>, BTreeSet<i64>) {
    let mut succ = vec![Vec::new(); n];
    let mut pred = vec![Vec::new(); n];
    for m in moves {
        let (a, b) = (as_int(&m[0]) as usize, as_int(&m[1]) as usize);
        succ[a].push(b);
        pred[b].push(a);
    }
    #[derive(Clone, Copy, PartialEq)]
    enum V {
        Unknown,
        Won,
        Lost,
    }
    let mut val = vec![V::Unknown; n];
    let mut open: Vec<usize> = succ.iter().map(|s| s.len()).collect();
    let mut queue: Vec<usize> = (0..n).filter(|&i| open[i] == 0).collect();
    for &i in &queue {
        val[i] = V::Lost;
    }
    while let Some(x) = queue.pop() {
        for &p in &pred[x] {
            if val[p] != V::Unknown {
                continue;
            }
            if val[x] == V::Lost {
                val[p] = V::Won;
                queue.push(p);
            } else {
                open[p] -= 1;
                if open[p] == 0 {
                    val[p] = V::Lost;
                    queue.push(p);
                }
            }
        }
    }
    let pick = |v: V| (0..n).filter(|&i| val[i] == v).map(|i| i as i64).collect();
    (pick(V::Won), pick(V::Lost), pick(V::Unknown))
}

/// Same-generation pairs over `par(child, parent)`, by iterating the two
/// defining conditions over all pairs until nothing changes.
pub fn same_generation(par: &Relation) -> Relation {
    let people: BTreeSet<i64> = par.iter().flat_map(|r| r.iter().map(as_int)).collect();
    let parents = |x: i64| -> Vec<i64> { par.iter().filter(|r| as_int(&r[0]) == x).map(|r| as_int(&r[1])).collect() };
    let mut sg: BTreeSet<(i64, i64)> = BTreeSet::new();
    loop {
        let mut grew = false;
        for &x in &people {
            for &y in &people {
                if sg.contains(&(x, y)) {
                    continue;
                }
                let (px, py) = (parents(x), parents(y));
                let shared = px.iter().any(|p| py.contains(p));
                let via = px.iter().any(|a| py.iter().any(|b| sg.contains(&(*a, *b))));
                if shared || via {
                    sg.insert((x, y));
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    sg.into_iter().map(|(a, b)| vec![int(a), int(b)]).collect()
}

/// `(x, y)` where `y` is a proper ancestor of `x`.
pub fn ancestors(par: &Relation) -> Relation {
    let n = par.iter().flat_map(|r| r.iter().map(as_int)).max().map_or(0, |m| m as usize + 1);
    warshall(n, par)
}

/// Role-based access control state replayed by the tests themselves.
#[derive(Clone, Debug, Default)]
pub struct Rbac {
    pub users: BTreeSet<String>,
    pub roles: BTreeSet<String>,
    pub ur: BTreeSet<(String, String)>,
    pub rh: BTreeSet<(String, String)>,
}

impl Rbac {
    /// Applies a method call written as `h.Name('a', 'b')`.
    pub fn apply_call(&mut self, call: &str) {
        let name = call.trim_start_matches("h.").split('(').next().unwrap();
        let args: Vec<String> = call[call.find('(').unwrap() + 1..call.len() - 1]
            .split(", ")
            .filter(|s| !s.is_empty())
            .map(|s| s.trim_matches('\'').to_string())
            .collect();
        match name {
            "AddUser" => {
                self.users.insert(args[0].clone());
            }
            "DeleteUser" => {
                self.users.remove(&args[0]);
                self.ur.retain(|(u, _)| u != &args[0]);
            }
            "AddRole" => {
                self.roles.insert(args[0].clone());
            }
            "DeleteRole" => {
                self.roles.remove(&args[0]);
                self.ur.retain(|(_, r)| r != &args[0]);
                self.rh.retain(|(a, d)| a != &args[0] && d != &args[0]);
            }
            "AssignUser" => {
                self.ur.insert((args[0].clone(), args[1].clone()));
            }
            "DeassignUser" => {
                self.ur.remove(&(args[0].clone(), args[1].clone()));
            }
            "AddInheritance" => {
                self.rh.insert((args[0].clone(), args[1].clone()));
            }
            "DeleteInheritance" => {
                self.rh.remove(&(args[0].clone(), args[1].clone()));
            }
            "AuthorizedUsers" => {}
            other => panic!("unknown operation {other}"),
        }
    }

    /// Users authorized for `role`: assigned to a role `r` with `(r, role)` in
    /// the reflexive-transitive hierarchy, computed with Warshall over role indices.
    pub fn authorized(&self, role: &str) -> BTreeSet<String> {
        let names: Vec<&String> =
            self.roles.iter().chain(self.rh.iter().flat_map(|(a, d)| [a, d])).collect::<BTreeSet<_>>().into_iter().collect();
        let idx: BTreeMap<&String, i64> = names.iter().enumerate().map(|(i, n)| (*n, i as i64)).collect();
        let edges: Relation = self.rh.iter().map(|(a, d)| vec![int(idx[a]), int(idx[d])]).collect();
        let mut reach = warshall(names.len(), &edges);
        for r in &self.roles {
            reach.insert(vec![int(idx[r]), int(idx[r])]);
        }
        let Some(&t) = idx.get(&role.to_string()) else { return BTreeSet::new() };
        self.ur
            .iter()
            .filter(|(_, r)| idx.get(r).is_some_and(|&i| reach.contains(&vec![int(i), int(t)])))
            .map(|(u, _)| u.clone())
            .collect()
    }
}

/// Least model of a positive rule program by brute-force grounding over the
/// constants of the program and facts. Only for tiny programs.
pub fn brute_force_least_model(rules: &[Rule], facts: &BTreeMap<PredRef, Relation>) -> BTreeMap<PredRef, Relation> {
    let mut consts: BTreeSet<Value> = facts.values().flatten().flatten().cloned().collect();
    for r in rules {
        for a in std::iter::once(&r.head).chain(r.body.iter().map(|h| &h.atom)) {
            for t in &a.args {
                if let Term::Const(c) = t {
                    consts.insert(c.clone());
                }
            }
        }
    }
    let consts: Vec<Value> = consts.into_iter().collect();
    let mut db: BTreeMap<PredRef, Relation> = facts.clone();
    for r in rules {
        db.entry(r.head.pred.clone()).or_default();
    }
    loop {
        let mut added = Vec::new();
        for r in rules {
            let vars: Vec<String> = {
                let mut v: Vec<String> = Vec::new();
                for a in std::iter::once(&r.head).chain(r.body.iter().map(|h| &h.atom)) {
                    for t in &a.args {
                        if let Term::Var(x) = t {
                            if !v.contains(x) {
                                v.push(x.clone());
                            }
                        }
                    }
                }
                v
            };
            let mut assign = vec![0usize; vars.len()];
            loop {
                let ground = |a: &Atom| -> Vec<Value> {
                    a.args
                        .iter()
                        .map(|t| match t {
                            Term::Const(c) => c.clone(),
                            Term::Var(x) => consts[assign[vars.iter().position(|v| v == x).unwrap()]].clone(),
                        })
                        .collect()
                };
                let holds = |h: &Hyp| db.get(&h.atom.pred).is_some_and(|rel| rel.contains(&ground(&h.atom))) != h.negated;
                if !consts.is_empty() || vars.is_empty() {
                    if r.body.iter().all(holds) {
                        let row = ground(&r.head);
                        if !db[&r.head.pred].contains(&row) {
                            added.push((r.head.pred.clone(), row));
                        }
                    }
                }
                // Next assignment in odometer order.
                let mut i = 0;
                while i < assign.len() {
                    assign[i] += 1;
                    if assign[i] < consts.len() {
                        break;
                    }
                    assign[i] = 0;
                    i += 1;
                }
                if i == assign.len() || consts.is_empty() {
                    break;
                }
            }
        }
        if added.is_empty() {
            return db;
        }
        for (p, row) in added {
            db.get_mut(&p).unwrap().insert(row);
        }
    }
}

/// A random rule program over predicates `p0..p3` (arity 1 or 2) with
/// constants `0..8` and facts for every predicate that heads no rule.
#[derive(Clone, Debug)]
pub struct RandomProgram {
    pub rules: Vec<Rule>,
    pub facts: BTreeMap<PredRef, Relation>,
}

pub fn random_program(rng: &mut impl Rng, negation: bool) -> RandomProgram {
    const CONSTS: i64 = 8;
    let arity: Vec<usize> = (0..4).map(|_| rng.gen_range(1..=2)).collect();
    let pred = |i: usize| PredRef::Global(format!("p{i}"));
    let vars = ["x", "y", "z"];
    let mut rules = Vec::new();
    for _ in 0..rng.gen_range(1..=6) {
        let mut body = Vec::new();
        let mut bound: Vec<String> = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            let p = rng.gen_range(0..4);
            let args: Vec<Term> = (0..arity[p])
                .map(|_| {
                    if rng.gen_bool(0.8) {
                        let v = vars[rng.gen_range(0..3)].to_string();
                        if !bound.contains(&v) {
                            bound.push(v.clone());
                        }
                        Term::Var(v)
                    } else {
                        Term::Const(int(rng.gen_range(0..CONSTS)))
                    }
                })
                .collect();
            body.push(Hyp { negated: false, atom: Atom { pred: pred(p), args } });
        }
        let pick = |rng: &mut dyn rand::RngCore| -> Term {
            if !bound.is_empty() && rng.gen_bool(0.85) {
                Term::Var(bound[rng.gen_range(0..bound.len())].clone())
            } else {
                Term::Const(int(rng.gen_range(0..CONSTS)))
            }
        };
        if negation && rng.gen_bool(0.3) {
            let p = rng.gen_range(0..4);
            let args = (0..arity[p]).map(|_| pick(rng)).collect();
            body.push(Hyp { negated: true, atom: Atom { pred: pred(p), args } });
        }
        let h = rng.gen_range(0..4);
        let args = (0..arity[h]).map(|_| pick(rng)).collect();
        rules.push(Rule { head: Atom { pred: pred(h), args }, body });
    }
    let heads: BTreeSet<PredRef> = rules.iter().map(|r| r.head.pred.clone()).collect();
    let mut facts = BTreeMap::new();
    for p in 0..4 {
        if heads.contains(&pred(p)) {
            continue;
        }
        let rel: Relation =
            (0..rng.gen_range(0..=10)).map(|_| (0..arity[p]).map(|_| int(rng.gen_range(0..CONSTS))).collect()).collect();
        facts.insert(pred(p), rel);
    }
    RandomProgram { rules, facts }
}

/// Two chained global rule sets: `reach_rs` reads the derived `path` of `trans_rs`.
pub const CHAIN_RULES: &str = "rules trans_rs {
  path(x,y) if edge(x,y)
  path(x,y) if edge(x,z), path(z,y)
}
rules reach_rs {
  reach(y) if src(x), path(x,y)
  start(x) if src(x)
  gap(x,y) if path(x,y), not src(x)
}
";

/// `n` random updates of `edge` and `src`: set assignments, `add`, `del`
/// and occasional resets to `None`.
pub fn chain_updates(rng: &mut impl Rng, n: usize) -> Vec<String> {
    let (mut edge_set, mut src_set) = (false, false);
    let mut out = Vec::with_capacity(n);
    let v = |rng: &mut dyn rand::RngCore| rng.gen_range(0..6);
    for _ in 0..n {
        let k: u32 = rng.gen_range(0..100);
        let op = match k {
            0..=11 => {
                let items: Vec<String> = (0..rng.gen_range(0..5)).map(|_| format!("({},{})", v(rng), v(rng))).collect();
                edge_set = true;
                format!("edge := {{{}}}", items.join(", "))
            }
            12..=19 => {
                let items: Vec<String> = (0..rng.gen_range(0..3)).map(|_| v(rng).to_string()).collect();
                src_set = true;
                format!("src := {{{}}}", items.join(", "))
            }
            20..=23 => {
                edge_set = false;
                "edge := None".into()
            }
            24..=27 => {
                src_set = false;
                "src := None".into()
            }
            28..=57 if edge_set => format!("edge.add(({},{}))", v(rng), v(rng)),
            58..=77 if edge_set => format!("edge.del(({},{}))", v(rng), v(rng)),
            78..=89 if src_set => format!("src.add({})", v(rng)),
            90..=99 if src_set => format!("src.del({})", v(rng)),
            _ if !edge_set => {
                edge_set = true;
                format!("edge := {{({},{})}}", v(rng), v(rng))
            }
            _ => {
                src_set = true;
                format!("src := {{{}}}", v(rng))
            }
        };
        out.push(op);
    }
    out
}

/// Steps through `CHAIN_RULES` followed by `updates`, and after every
/// maintenance compares each derived variable with a from-scratch naive
/// evaluation of the rules whose base predicates hold sets. A rule set reads
/// the other's derived variable as it was before the step. Returns the number
/// of maintenance steps checked and a description of every violation.
pub fn check_chain_maintenance(updates: &[String]) -> (usize, Vec<String>) {
    use rulelang::engine::{eval_naive, EngineInput};
    let src = format!("{CHAIN_RULES}{}\n", updates.join("\n"));
    let prog = compile(&src);
    let rules = |name: &str| prog.rulesets.iter().find(|r| r.name == name).unwrap().rules.clone();
    let (trans, reach_rules) = (rules("trans_rs"), rules("reach_rs"));
    let g = |f: &str| PredRef::Inst(0, f.to_string());
    let mut m = Machine::new(&prog, Options::default()).unwrap();
    let mut violations = Vec::new();
    let mut checks = 0;
    let mut path_before = m.global_rows("path");
    for name in ["path", "reach", "start", "gap"] {
        if m.global(name) != Some(&Value::None) {
            violations.push(format!("initially {name} = {:?}", m.global(name)));
        }
    }
    loop {
        let info = m.step().unwrap_or_else(|e| panic!("{e}"));
        if info.done {
            break;
        }
        if !info.maintained {
            continue;
        }
        checks += 1;
        let (edge, srcs) = (m.global_rows("edge"), m.global_rows("src"));
        let mut expect: BTreeMap<&str, Option<Relation>> = BTreeMap::new();
        let naive = |rules: Vec<Rule>, facts: Vec<(&str, &Relation)>| {
            let facts = facts.into_iter().map(|(f, r)| (g(f), r.clone())).collect();
            eval_naive(&EngineInput { rules, facts }).unwrap().extensions
        };
        match &edge {
            Some(e) => {
                let out = naive(trans.clone(), vec![("edge", e)]);
                let n = e.iter().flatten().map(as_int).max().map_or(0, |x| x as usize + 1);
                if out[&g("path")] != warshall(n, e) {
                    violations.push(format!("step {}: engine closure differs from Warshall", m.steps()));
                }
                expect.insert("path", Some(out[&g("path")].clone()));
            }
            None => {
                expect.insert("path", None);
            }
        }
        let head = |r: &Rule, f: &str| r.head.pred == g(f);
        match (&srcs, &path_before) {
            (Some(s), Some(p)) => {
                let out = naive(reach_rules.clone(), vec![("src", s), ("path", p)]);
                for f in ["reach", "start", "gap"] {
                    expect.insert(f, Some(out[&g(f)].clone()));
                }
            }
            (Some(s), None) => {
                let only: Vec<Rule> = reach_rules.iter().filter(|r| head(r, "start")).cloned().collect();
                let out = naive(only, vec![("src", s)]);
                expect.insert("start", Some(out[&g("start")].clone()));
                expect.insert("reach", None);
                expect.insert("gap", None);
            }
            (None, _) => {
                for f in ["reach", "start", "gap"] {
                    expect.insert(f, None);
                }
            }
        }
        for (f, want) in expect {
            let got = m.global_rows(f);
            let none_ok = want.is_none() && m.global(f) == Some(&Value::None);
            if !(got == want && (want.is_some() || none_ok)) {
                violations.push(format!("step {}: {f} = {got:?}, expected {want:?}", m.steps()));
            }
        }
        path_before = m.global_rows("path");
    }
    (checks, violations)
}

/// A random game on `1..=12` positions; `acyclic` keeps only moves to higher positions.
pub fn random_moves(seed: u64, acyclic: bool) -> (usize, Relation) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let n = r.gen_range(1..=12);
    let p = r.gen_range(0.05..0.4);
    let mut moves = Relation::new();
    for a in 0..n as i64 {
        for b in 0..n as i64 {
            if (!acyclic || a < b) && r.gen_bool(p) {
                moves.insert(vec![int(a), int(b)]);
            }
        }
    }
    (n, moves)
}

