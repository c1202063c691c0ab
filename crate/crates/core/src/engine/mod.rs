//! Bottom-up Datalog evaluation: naive (reference), semi-naive, stratified and
//! well-founded (alternating fixpoint).
//!
//! Values are interned to `u32`; each predicate keeps its rows in an append-only
//! table with hash indexes per bound-column mask. Index entries list row ids in
//! ascending order, so a lookup can be limited to a row range; semi-naive
//! evaluation uses that to read the delta of the previous round.

use crate::rules::{heads, predicates, stratify, NotStratified};
use crate::syntax::ast::{PredRef, Rule, Term};
use crate::value::{Relation, Value};
use rustc_hash::{FxHashMap, FxHashSet, FxHasher};
use std::hash::{Hash, Hasher};
use std::collections::BTreeMap;

#[derive(Clone, Debug, Default)]
pub struct EngineInput {
    pub rules: Vec<Rule>,
    pub facts: BTreeMap<PredRef, Relation>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EngineOutput {
    /// True atoms of every derived predicate (present even when empty).
    pub extensions: BTreeMap<PredRef, Relation>,
    /// Atoms neither true nor false; nonempty only under well-founded evaluation.
    pub undefined: BTreeMap<PredRef, Relation>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("{0}")]
    NotStratified(NotStratified),
    #[error("predicate {pred} holds a tuple with a heap address ({value}); only immutable values can be used as facts")]
    NonGround { pred: PredRef, value: String },
    #[error("predicate {pred} used with arity {expected} and {found}")]
    Arity { pred: PredRef, expected: usize, found: usize },
}

/// Evaluation strategy for a whole input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Naive,
    SemiNaive,
    WellFounded,
    /// Stratified semi-naive when possible, well-founded otherwise.
    Auto,
}

pub fn eval(input: &EngineInput, strategy: Strategy) -> Result<EngineOutput, EngineError> {
    match strategy {
        Strategy::Naive => eval_naive(input),
        Strategy::SemiNaive => eval_seminaive(input),
        Strategy::WellFounded => eval_wellfounded(input),
        Strategy::Auto => match eval_seminaive(input) {
            Err(EngineError::NotStratified(_)) => eval_wellfounded(input),
            other => other,
        },
    }
}

pub fn eval_naive(input: &EngineInput) -> Result<EngineOutput, EngineError> {
    let strata = stratify(&input.rules).map_err(EngineError::NotStratified)?;
    let mut prog = Program::compile(input)?;
    for s in &strata {
        let rules = prog.rules_of(s);
        prog.naive_stratum(&rules);
    }
    Ok(prog.output(None))
}

pub fn eval_seminaive(input: &EngineInput) -> Result<EngineOutput, EngineError> {
    let strata = stratify(&input.rules).map_err(EngineError::NotStratified)?;
    let mut prog = Program::compile(input)?;
    for s in &strata {
        let rules = prog.rules_of(s);
        let preds: Vec<usize> = s.iter().map(|p| prog.pred_ids[p]).collect();
        prog.db.seminaive(&prog.rules, &rules, &preds, None);
    }
    Ok(prog.output(None))
}

/// Alternating fixpoint: `T0` holds only the facts, `U_k = Γ(T_k)`,
/// `T_{k+1} = Γ(U_k)`, where `Γ(J)` is the least model with negation read from `J`.
/// True atoms are the limit `T`, undefined atoms are `Γ(T) \ T`.
pub fn eval_wellfounded(input: &EngineInput) -> Result<EngineOutput, EngineError> {
    let prog = Program::compile(input)?;
    let all: Vec<usize> = (0..prog.rules.len()).collect();
    let derived: Vec<usize> = heads(&input.rules).iter().map(|p| prog.pred_ids[p]).collect();
    let gamma = |neg: &Db| -> Db {
        let mut db = prog.db.clone();
        db.seminaive(&prog.rules, &all, &derived, Some(neg));
        db
    };
    let mut t = prog.db.clone();
    loop {
        let u = gamma(&t);
        let t2 = gamma(&u);
        if t2.total_rows() == t.total_rows() {
            let out = Program { db: t, ..prog };
            return Ok(out.output(Some(&u)));
        }
        t = t2;
    }
}

// ---------- interning and storage ----------

#[derive(Clone, Default)]
struct Interner {
    map: FxHashMap<Value, u32>,
    vals: Vec<Value>,
}

impl Interner {
    fn intern(&mut self, v: &Value) -> u32 {
        if let Some(&id) = self.map.get(v) {
            return id;
        }
        let id = self.vals.len() as u32;
        self.vals.push(v.clone());
        self.map.insert(v.clone(), id);
        id
    }
}

#[derive(Clone)]
struct Index {
    cols: Vec<usize>,
    map: FxHashMap<Box<[u32]>, Vec<u32>>,
    upto: usize,
}

const EMPTY: u32 = u32::MAX;

/// Append-only row table with an open-addressing hash set of row ids.
#[derive(Clone)]
struct Table {
    arity: usize,
    data: Vec<u32>,
    rows: usize,
    slots: Vec<u32>,
    indexes: FxHashMap<u64, Index>,
}

fn hash_row(row: &[u32]) -> usize {
    let mut h = FxHasher::default();
    row.hash(&mut h);
    h.finish() as usize
}

impl Table {
    fn new(arity: usize) -> Table {
        Table { arity, data: Vec::new(), rows: 0, slots: Vec::new(), indexes: FxHashMap::default() }
    }

    fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.arity..(i + 1) * self.arity]
    }

    /// Slot holding `row`, or the empty slot where it would go.
    fn probe(&self, row: &[u32]) -> usize {
        let mask = self.slots.len() - 1;
        let mut i = hash_row(row) & mask;
        loop {
            let s = self.slots[i];
            if s == EMPTY || self.row(s as usize) == row {
                return i;
            }
            i = (i + 1) & mask;
        }
    }

    fn contains(&self, row: &[u32]) -> bool {
        !self.slots.is_empty() && self.slots[self.probe(row)] != EMPTY
    }

    fn insert(&mut self, row: &[u32]) -> bool {
        if (self.rows + 1) * 8 > self.slots.len() * 7 {
            self.grow();
        }
        let i = self.probe(row);
        if self.slots[i] != EMPTY {
            return false;
        }
        self.slots[i] = self.rows as u32;
        self.data.extend_from_slice(row);
        self.rows += 1;
        true
    }

    fn grow(&mut self) {
        let n = (self.slots.len() * 2).max(16);
        self.slots = vec![EMPTY; n];
        for r in 0..self.rows {
            let i = self.probe(self.row(r));
            self.slots[i] = r as u32;
        }
    }

    fn ensure_index(&mut self, mask: u64) {
        if mask == 0 {
            return;
        }
        let arity = self.arity;
        let idx = self.indexes.entry(mask).or_insert_with(|| Index {
            cols: (0..arity).filter(|c| mask & (1 << c) != 0).collect(),
            map: FxHashMap::default(),
            upto: 0,
        });
        let mut key = Vec::with_capacity(idx.cols.len());
        for r in idx.upto..self.rows {
            let row = &self.data[r * arity..(r + 1) * arity];
            key.clear();
            key.extend(idx.cols.iter().map(|&c| row[c]));
            match idx.map.get_mut(key.as_slice()) {
                Some(ids) => ids.push(r as u32),
                None => {
                    idx.map.insert(key.as_slice().into(), vec![r as u32]);
                }
            }
        }
        idx.upto = self.rows;
    }
}

#[derive(Clone)]
struct Db {
    tables: Vec<Table>,
}

impl Db {
    fn total_rows(&self) -> usize {
        self.tables.iter().map(|t| t.rows).sum()
    }
}

// ---------- compiled rules ----------

#[derive(Clone, Copy, Debug)]
enum Arg {
    Var(usize),
    Const(u32),
}

#[derive(Clone, Debug)]
struct Lit {
    pred: usize,
    neg: bool,
    /// Bound columns when this literal is reached.
    mask: u64,
    /// Sources of the bound columns, in column order.
    key: Vec<Arg>,
    /// Columns that bind a fresh variable.
    binds: Vec<(usize, usize)>,
    /// Columns repeating a variable first bound earlier in the same literal.
    checks: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
struct CRule {
    head: usize,
    head_args: Vec<Arg>,
    body: Vec<Lit>,
    nvars: usize,
}

struct Program {
    interner: Interner,
    pred_ids: BTreeMap<PredRef, usize>,
    source_rules: Vec<Rule>,
    rules: Vec<CRule>,
    db: Db,
}

impl Program {
    fn compile(input: &EngineInput) -> Result<Program, EngineError> {
        let mut preds: Vec<PredRef> = predicates(&input.rules).into_iter().collect();
        for p in input.facts.keys() {
            if !preds.contains(p) {
                preds.push(p.clone());
            }
        }
        let pred_ids: BTreeMap<PredRef, usize> = preds.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let mut arity: Vec<Option<usize>> = vec![None; preds.len()];
        let mut note = |p: usize, n: usize| -> Result<(), EngineError> {
            match arity[p] {
                Some(a) if a != n => Err(EngineError::Arity { pred: preds[p].clone(), expected: a, found: n }),
                _ => {
                    arity[p] = Some(n);
                    Ok(())
                }
            }
        };
        for r in &input.rules {
            note(pred_ids[&r.head.pred], r.head.args.len())?;
            for h in &r.body {
                note(pred_ids[&h.atom.pred], h.atom.args.len())?;
            }
        }
        for (p, rel) in &input.facts {
            for row in rel {
                note(pred_ids[p], row.len())?;
            }
        }
        let mut interner = Interner::default();
        let mut tables: Vec<Table> = arity.iter().map(|a| Table::new(a.unwrap_or(0))).collect();
        for (p, rel) in &input.facts {
            let t = &mut tables[pred_ids[p]];
            let mut buf = Vec::new();
            for row in rel {
                buf.clear();
                for v in row {
                    if !v.is_ground() {
                        return Err(EngineError::NonGround { pred: p.clone(), value: v.to_string() });
                    }
                    buf.push(interner.intern(v));
                }
                t.insert(&buf);
            }
        }
        let rules = input.rules.iter().map(|r| compile_rule(r, &pred_ids, &mut interner)).collect();
        Ok(Program { interner, pred_ids, source_rules: input.rules.clone(), rules, db: Db { tables } })
    }

    fn rules_of(&self, stratum: &std::collections::BTreeSet<PredRef>) -> Vec<usize> {
        (0..self.rules.len()).filter(|&i| stratum.contains(&self.source_rules[i].head.pred)).collect()
    }

    /// Reference evaluation: every round recomputes all consequences from the
    /// previous interpretation and rebuilds the stratum's tables from scratch.
    fn naive_stratum(&mut self, rule_ids: &[usize]) {
        let stratum: FxHashSet<usize> = rule_ids.iter().map(|&r| self.rules[r].head).collect();
        let initial: FxHashMap<usize, Table> = stratum.iter().map(|&p| (p, self.db.tables[p].clone())).collect();
        loop {
            for &r in rule_ids {
                for l in &self.rules[r].body {
                    self.db.tables[l.pred].ensure_index(l.mask);
                }
            }
            let mut next: FxHashMap<usize, Table> = initial.clone();
            for t in next.values_mut() {
                t.indexes.clear();
            }
            for &r in rule_ids {
                let rule = &self.rules[r];
                let ranges: Vec<(usize, usize)> = rule.body.iter().map(|l| (0, self.db.tables[l.pred].rows)).collect();
                let out = next.get_mut(&rule.head).unwrap();
                fire(&self.db, None, rule, &ranges, &mut |row| {
                    out.insert(row);
                });
            }
            let changed = next.iter().any(|(p, t)| t.rows != self.db.tables[*p].rows);
            for (p, t) in next {
                self.db.tables[p] = t;
            }
            if !changed {
                return;
            }
        }
    }

    fn output(self, possible: Option<&Db>) -> EngineOutput {
        let mut out = EngineOutput::default();
        let decode = |t: &Table, i: usize| -> Vec<Value> {
            t.row(i).iter().map(|&v| self.interner.vals[v as usize].clone()).collect()
        };
        for p in heads(&self.source_rules) {
            let id = self.pred_ids[&p];
            let t = &self.db.tables[id];
            let rel: Relation = (0..t.rows).map(|i| decode(t, i)).collect();
            if let Some(u) = possible {
                let ut = &u.tables[id];
                let und: Relation =
                    (0..ut.rows).filter(|&i| !t.contains(ut.row(i))).map(|i| decode(ut, i)).collect();
                out.undefined.insert(p.clone(), und);
            } else {
                out.undefined.insert(p.clone(), Relation::new());
            }
            out.extensions.insert(p, rel);
        }
        out
    }
}

fn compile_rule(r: &Rule, ids: &BTreeMap<PredRef, usize>, interner: &mut Interner) -> CRule {
    let mut slots: Vec<String> = Vec::new();
    let slot = |v: &str, slots: &mut Vec<String>| -> usize {
        match slots.iter().position(|s| s == v) {
            Some(i) => i,
            None => {
                slots.push(v.to_string());
                slots.len() - 1
            }
        }
    };
    // Positive literals keep their order; a negated literal goes right after
    // the earliest point where all its variables are bound.
    let mut order: Vec<usize> = Vec::new();
    let mut pending: Vec<usize> = Vec::new();
    let mut bound: Vec<&str> = Vec::new();
    let ready = |i: usize, bound: &Vec<&str>| {
        r.body[i].atom.args.iter().all(|t| match t {
            Term::Var(v) => bound.contains(&v.as_str()),
            Term::Const(_) => true,
        })
    };
    for (i, h) in r.body.iter().enumerate() {
        if h.negated {
            pending.push(i);
        } else {
            order.push(i);
            for t in &h.atom.args {
                if let Term::Var(v) = t {
                    bound.push(v);
                }
            }
        }
        pending.retain(|&j| {
            if ready(j, &bound) {
                order.push(j);
                false
            } else {
                true
            }
        });
    }
    order.extend(pending);

    let mut is_bound: Vec<bool> = Vec::new();
    let mut body = Vec::new();
    for &i in &order {
        let h = &r.body[i];
        let mut lit = Lit {
            pred: ids[&h.atom.pred],
            neg: h.negated,
            mask: 0,
            key: Vec::new(),
            binds: Vec::new(),
            checks: Vec::new(),
        };
        let mut local: Vec<usize> = Vec::new();
        for (c, t) in h.atom.args.iter().enumerate() {
            match t {
                Term::Const(v) => {
                    lit.mask |= 1 << c;
                    lit.key.push(Arg::Const(interner.intern(v)));
                }
                Term::Var(v) => {
                    let s = slot(v, &mut slots);
                    if is_bound.len() <= s {
                        is_bound.resize(s + 1, false);
                    }
                    if is_bound[s] {
                        lit.mask |= 1 << c;
                        lit.key.push(Arg::Var(s));
                    } else if local.contains(&s) {
                        lit.checks.push((c, s));
                    } else {
                        local.push(s);
                        lit.binds.push((c, s));
                    }
                }
            }
        }
        for s in local {
            is_bound[s] = true;
        }
        body.push(lit);
    }
    let head_args = r
        .head
        .args
        .iter()
        .map(|t| match t {
            Term::Const(v) => Arg::Const(interner.intern(v)),
            Term::Var(v) => Arg::Var(slot(v, &mut slots)),
        })
        .collect();
    CRule { head: ids[&r.head.pred], head_args, body, nvars: slots.len() }
}

impl Db {
    /// Semi-naive fixpoint for the rules `rule_ids`, whose heads are `preds`.
    /// Negated literals read `neg` when given, otherwise this database.
    fn seminaive(&mut self, all: &[CRule], rule_ids: &[usize], preds: &[usize], neg: Option<&Db>) {
        let in_stratum = |p: usize| preds.contains(&p);
        let mut delta_start: FxHashMap<usize, usize> = preds.iter().map(|&p| (p, 0)).collect();
        let mut first = true;
        loop {
            for &r in rule_ids {
                for l in &all[r].body {
                    if !l.neg {
                        self.tables[l.pred].ensure_index(l.mask);
                    }
                }
            }
            let end: Vec<usize> = self.tables.iter().map(|t| t.rows).collect();
            // Candidate rows per head predicate, flattened, with a row count.
            let mut buf: FxHashMap<usize, (Vec<u32>, usize)> = FxHashMap::default();
            for &r in rule_ids {
                let rule = &all[r];
                let out = buf.entry(rule.head).or_default();
                let mut push = |row: &[u32]| {
                    if !self.tables[rule.head].contains(row) {
                        out.0.extend_from_slice(row);
                        out.1 += 1;
                    }
                };
                if first {
                    let ranges: Vec<(usize, usize)> = rule.body.iter().map(|l| (0, end[l.pred])).collect();
                    fire(self, neg, rule, &ranges, &mut push);
                    continue;
                }
                for (i, li) in rule.body.iter().enumerate() {
                    if li.neg || !in_stratum(li.pred) {
                        continue;
                    }
                    let ds = delta_start[&li.pred];
                    if ds == end[li.pred] {
                        continue;
                    }
                    let ranges: Vec<(usize, usize)> = rule
                        .body
                        .iter()
                        .enumerate()
                        .map(|(j, l)| {
                            if j == i {
                                (ds, end[l.pred])
                            } else if j < i && !l.neg && in_stratum(l.pred) {
                                (0, delta_start[&l.pred])
                            } else {
                                (0, end[l.pred])
                            }
                        })
                        .collect();
                    fire(self, neg, rule, &ranges, &mut push);
                }
            }
            first = false;
            for &p in preds {
                delta_start.insert(p, end[p]);
            }
            let mut grew = false;
            for (p, (rows, n)) in buf {
                let t = &mut self.tables[p];
                let a = t.arity;
                for i in 0..n {
                    grew |= t.insert(&rows[i * a..(i + 1) * a]);
                }
            }
            if !grew {
                return;
            }
        }
    }
}

/// Enumerates the head tuples derivable by `rule`, reading literal `i` from rows
/// `ranges[i]` of its table.
fn fire(db: &Db, neg: Option<&Db>, rule: &CRule, ranges: &[(usize, usize)], out: &mut dyn FnMut(&[u32])) {
    let mut env = vec![0u32; rule.nvars];
    let mut key = vec![Vec::new(); rule.body.len()];
    let mut head = vec![0u32; rule.head_args.len()];
    join(db, neg.unwrap_or(db), rule, ranges, 0, &mut env, &mut key, &mut head, out);
}

#[allow(clippy::too_many_arguments)]
fn join(
    db: &Db,
    neg: &Db,
    rule: &CRule,
    ranges: &[(usize, usize)],
    level: usize,
    env: &mut Vec<u32>,
    keys: &mut Vec<Vec<u32>>,
    head: &mut Vec<u32>,
    out: &mut dyn FnMut(&[u32]),
) {
    if level == rule.body.len() {
        for (i, a) in rule.head_args.iter().enumerate() {
            head[i] = match *a {
                Arg::Var(s) => env[s],
                Arg::Const(c) => c,
            };
        }
        out(head);
        return;
    }
    let lit = &rule.body[level];
    let mut key = std::mem::take(&mut keys[level]);
    key.clear();
    key.extend(lit.key.iter().map(|a| match *a {
        Arg::Var(s) => env[s],
        Arg::Const(c) => c,
    }));
    if lit.neg {
        if !neg.tables[lit.pred].contains(key.as_slice()) {
            join(db, neg, rule, ranges, level + 1, env, keys, head, out);
        }
        keys[level] = key;
        return;
    }
    let t = &db.tables[lit.pred];
    let (lo, hi) = ranges[level];
    let mut visit = |row: &[u32], env: &mut Vec<u32>, keys: &mut Vec<Vec<u32>>, head: &mut Vec<u32>| {
        for &(c, s) in &lit.binds {
            env[s] = row[c];
        }
        if lit.checks.iter().all(|&(c, s)| row[c] == env[s]) {
            join(db, neg, rule, ranges, level + 1, env, keys, head, out);
        }
    };
    if lit.mask == 0 {
        for r in lo..hi {
            visit(t.row(r), env, keys, head);
        }
    } else if lit.mask.count_ones() as usize == t.arity && lit.checks.is_empty() {
        // Fully bound: a membership test, restricted to the row range.
        if lo == 0 && hi == t.rows {
            if t.contains(key.as_slice()) {
                join(db, neg, rule, ranges, level + 1, env, keys, head, out);
            }
        } else if let Some(ids) = t.indexes.get(&lit.mask).and_then(|ix| ix.map.get(key.as_slice())) {
            if ids.iter().any(|&r| (r as usize) >= lo && (r as usize) < hi) {
                join(db, neg, rule, ranges, level + 1, env, keys, head, out);
            }
        }
    } else if let Some(ids) = t.indexes.get(&lit.mask).and_then(|ix| ix.map.get(key.as_slice())) {
        let start = ids.partition_point(|&r| (r as usize) < lo);
        for &r in &ids[start..] {
            if r as usize >= hi {
                break;
            }
            visit(t.row(r as usize), env, keys, head);
        }
    }
    keys[level] = key;
}
