//! Small-step interpreter for core programs.
//!
//! The machine keeps a continuation stack instead of rewriting the statement.
//! Expressions are evaluated to values within one transition; every
//! heap-mutating transition is followed by maintenance of all derived
//! predicate variables of the rule sets on the maintenance stack.

pub mod heap;
pub mod maintain;


use crate::rules::{instantiate, Origin};
use crate::syntax::ast::*;
use crate::value::{Addr, Relation, Value, GLOBAL_OBJ};
use heap::{relation_to_set, Heap, Object, SEQUENCE, SET};
use maintain::{apply_write, inf_sub, CompiledRs, MaintCache};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

pub const DEFAULT_STEP_BUDGET: u64 = 100_000_000;
pub const DEFAULT_CALL_DEPTH: usize = 1_000;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{loc}: runtime error[{code}]: {message}")]
pub struct RuntimeError {
    pub code: &'static str,
    pub message: String,
    pub loc: Loc,
}

impl RuntimeError {
    pub fn new(code: &'static str, message: impl Into<String>, loc: Loc) -> RuntimeError {
        RuntimeError { code, message: message.into(), loc }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error("step budget of {0} steps exhausted")]
    StepBudget(u64),
}

impl RunError {
    pub fn code(&self) -> &'static str {
        match self {
            RunError::Runtime(e) => e.code,
            RunError::StepBudget(_) => "step-budget",
        }
    }
}

/// How updates to derived predicates are guarded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    /// Programs are checked statically; assignments are still guarded by field name.
    #[default]
    NoAlias,
    /// Additionally rejects `add`/`del` on a set that is the current value of a
    /// derived predicate variable.
    AliasChecked,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Mode, String> {
        match s {
            "no-alias" => Ok(Mode::NoAlias),
            "alias-checked" => Ok(Mode::AliasChecked),
            _ => Err(format!("unknown mode `{s}` (expected no-alias or alias-checked)")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub mode: Mode,
    pub step_budget: u64,
    pub max_call_depth: usize,
}

impl Default for Options {
    fn default() -> Options {
        Options { mode: Mode::NoAlias, step_budget: DEFAULT_STEP_BUDGET, max_call_depth: DEFAULT_CALL_DEPTH }
    }
}

/// What one transition did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepInfo {
    pub done: bool,
    pub maintained: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Bind {
    Param,
    Loop,
}

/// Bindings of method parameters and loop/quantifier variables.
#[derive(Clone, Default)]
struct Env<'p>(Option<Rc<EnvNode<'p>>>);

struct EnvNode<'p> {
    name: &'p str,
    kind: Bind,
    val: Value,
    next: Env<'p>,
}

impl<'p> Env<'p> {
    fn bind(&self, name: &'p str, kind: Bind, val: Value) -> Env<'p> {
        Env(Some(Rc::new(EnvNode { name, kind, val, next: self.clone() })))
    }

    fn lookup(&self, name: &str, kind: Bind) -> Option<&Value> {
        let mut cur = &self.0;
        while let Some(n) = cur {
            if n.kind == kind && n.name == name {
                return Some(&n.val);
            }
            cur = &n.next.0;
        }
        None
    }
}

enum Cursor {
    Set(Rc<BTreeSet<Value>>, Option<Value>),
    Seq(Rc<Vec<Value>>, usize),
}

impl Cursor {
    fn next(&mut self) -> Option<Value> {
        match self {
            Cursor::Set(s, last) => {
                let v = match last {
                    None => s.iter().next(),
                    Some(l) => s.range((std::ops::Bound::Excluded(&*l), std::ops::Bound::Unbounded)).next(),
                }
                .cloned();
                *last = v.clone();
                v
            }
            Cursor::Seq(s, i) => {
                let v = s.get(*i).cloned();
                *i += 1;
                v
            }
        }
    }
}

enum Kont<'p> {
    Exec(&'p Stmt, Env<'p>),
    For { var: &'p str, cursor: Cursor, body: &'p Stmt, env: Env<'p> },
    Return,
}

struct ClassInfo<'p> {
    parent: Option<&'p str>,
    methods: BTreeMap<&'p str, &'p MethodDecl>,
    /// Declaration indices of the rule sets of the class, inherited ones included.
    rulesets: Vec<usize>,
    derived_fields: BTreeSet<String>,
}

/// Class and rule-set tables of a program.
struct Tables<'p> {
    decls: Vec<(&'p RuleSetDecl, Origin)>,
    globals: BTreeMap<&'p str, usize>,
    classes: BTreeMap<&'p str, ClassInfo<'p>>,
    global_derived: BTreeSet<String>,
}

impl<'p> Tables<'p> {
    fn new(p: &'p Program) -> Tables<'p> {
        let mut decls = Vec::new();
        let mut globals = BTreeMap::new();
        for rs in &p.rulesets {
            globals.insert(rs.name.as_str(), decls.len());
            decls.push((rs, Origin::Global));
        }
        let mut own: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for c in &p.classes {
            for rs in &c.rulesets {
                own.entry(c.name.as_str()).or_default().push(decls.len());
                decls.push((rs, Origin::Class(c.name.clone())));
            }
        }
        let mut global_derived = BTreeSet::new();
        for (rs, _) in &decls {
            for r in &rs.rules {
                match &r.head.pred {
                    PredRef::Global(f) | PredRef::Inst(GLOBAL_OBJ, f) => {
                        global_derived.insert(f.clone());
                    }
                    _ => {}
                }
            }
        }
        let mut classes = BTreeMap::new();
        for c in &p.classes {
            // Ancestor chain, nearest first; stops on cycles.
            let mut chain: Vec<&ClassDecl> = vec![c];
            while let Some(parent) = chain.last().unwrap().extends.as_deref().and_then(|n| p.class(n)) {
                if chain.iter().any(|x| x.name == parent.name) {
                    break;
                }
                chain.push(parent);
            }
            let mut methods = BTreeMap::new();
            let mut rulesets: Vec<usize> = Vec::new();
            let mut names: BTreeSet<&str> = BTreeSet::new();
            let mut derived_fields = BTreeSet::new();
            for cls in &chain {
                for m in &cls.methods {
                    methods.entry(m.name.as_str()).or_insert(m);
                }
                for &i in own.get(cls.name.as_str()).into_iter().flatten() {
                    let rs = decls[i].0;
                    if names.insert(rs.name.as_str()) {
                        rulesets.push(i);
                    }
                    for r in &rs.rules {
                        if let PredRef::SelfField(f) = &r.head.pred {
                            derived_fields.insert(f.clone());
                        }
                    }
                }
            }
            classes.insert(
                c.name.as_str(),
                ClassInfo { parent: c.extends.as_deref(), methods, rulesets, derived_fields },
            );
        }
        Tables { decls, globals, classes, global_derived }
    }

    fn is_subclass(&self, c: &str, of: &str) -> bool {
        let mut cur = Some(c);
        let mut hops = 0;
        while let Some(x) = cur {
            if x == of {
                return true;
            }
            hops += 1;
            if hops > self.classes.len() {
                return false;
            }
            cur = self.classes.get(x).and_then(|ci| ci.parent);
        }
        false
    }
}

/// Interpreter state for one program run.
pub struct Machine<'p> {
    prog: &'p Program,
    tables: Tables<'p>,
    opts: Options,
    heap: Heap,
    kont: Vec<Kont<'p>>,
    stack: Vec<Vec<Rc<CompiledRs>>>,
    compiled: HashMap<(usize, Addr), Rc<CompiledRs>>,
    cache: MaintCache,
    steps: u64,
    depth: usize,
    loc: Loc,
    maintained: bool,
}

impl<'p> Machine<'p> {
    /// Initial state: the main statement, a heap holding only the global object
    /// and a stack whose bottom entry holds the global rule sets. Maintenance
    /// runs once so that derived variables start out `None`.
    pub fn new(prog: &'p Program, opts: Options) -> Result<Machine<'p>, RunError> {
        let tables = Tables::new(prog);
        let mut m = Machine {
            prog,
            tables,
            opts,
            heap: Heap::new(),
            kont: vec![Kont::Exec(&prog.main, Env::default())],
            stack: Vec::new(),
            compiled: HashMap::new(),
            cache: MaintCache::default(),
            steps: 0,
            depth: 0,
            loc: Loc::default(),
            maintained: false,
        };
        let bottom: Vec<Rc<CompiledRs>> = m.tables.globals.values().copied().collect::<Vec<_>>()
            .into_iter()
            .map(|i| m.compiled_rs(i, GLOBAL_OBJ))
            .collect();
        m.stack.push(bottom);
        m.maintain()?;
        Ok(m)
    }

    pub fn program(&self) -> &'p Program {
        self.prog
    }

    pub fn heap(&self) -> &Heap {
        &self.heap
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Cache hits and misses of maintenance so far.
    pub fn maintenance_stats(&self) -> (u64, u64) {
        (self.cache.hits, self.cache.misses)
    }

    pub fn is_done(&self) -> bool {
        self.kont.is_empty()
    }

    /// Instantiated rule sets on the maintenance stack, bottom frame first.
    pub fn stack_rule_sets(&self) -> Vec<&CompiledRs> {
        self.stack.iter().flat_map(|f| f.iter().map(|r| &**r)).collect()
    }

    pub fn global(&self, name: &str) -> Option<&Value> {
        self.heap.global(name)
    }

    /// Rows of the set or sequence held by a global variable.
    pub fn global_rows(&self, name: &str) -> Option<Relation> {
        self.heap.rows(self.global(name)?.as_addr()?)
    }

    /// Canonical text of a global: `name: (v1,v2)` per row for a set or
    /// sequence, `name = value` otherwise.
    pub fn dump(&self, name: &str) -> String {
        match self.global(name) {
            Some(v) => match v.as_addr().and_then(|a| self.heap.rows(a)) {
                Some(rows) => rows.iter().map(|r| format!("{name}: {}\n", crate::value::format_row(r))).collect(),
                None => format!("{name} = {}\n", self.heap.render(v)),
            },
            None => format!("{name} = <unset>\n"),
        }
    }

    /// Assigns a fresh set holding `rel` to global `name`, as an assignment
    /// transition would (guarded, then maintained).
    pub fn bind_global_set(&mut self, name: &str, rel: &Relation) -> Result<(), RunError> {
        self.legal_assign(GLOBAL_OBJ, name)?;
        let a = self.heap.alloc(SET);
        self.heap.overwrite_set(a, relation_to_set(rel));
        self.heap.set_field(GLOBAL_OBJ, name, Value::Addr(a));
        self.maintain()?;
        Ok(())
    }

    /// Runs to completion.
    pub fn run(&mut self) -> Result<(), RunError> {
        while !self.step()?.done {}
        Ok(())
    }

    fn compiled_rs(&mut self, idx: usize, recv: Addr) -> Rc<CompiledRs> {
        let (decl, origin) = &self.tables.decls[idx];
        self.compiled
            .entry((idx, recv))
            .or_insert_with(|| Rc::new(CompiledRs::new((idx, recv), instantiate(decl, origin.clone(), recv))))
            .clone()
    }

    fn maintain(&mut self) -> Result<(), RuntimeError> {
        self.maintained = true;
        maintain::maintain(&mut self.heap, &self.stack, &mut self.cache, self.loc)
    }

    fn err(&self, code: &'static str, msg: impl Into<String>) -> RunError {
        RunError::Runtime(RuntimeError::new(code, msg, self.loc))
    }

    fn tick(&mut self) -> Result<(), RunError> {
        self.steps += 1;
        if self.steps > self.opts.step_budget {
            return Err(RunError::StepBudget(self.opts.step_budget));
        }
        Ok(())
    }

    /// `a.f` may be assigned: `a` is a plain object and `f` is not a derived
    /// predicate variable of any rule set.
    fn legal_assign(&self, a: Addr, f: &str) -> Result<(), RunError> {
        let class = self.heap.class_of(a);
        if class == SET || class == SEQUENCE {
            return Err(self.err("illegal-assign", format!("cannot assign field {f} of a {class}")));
        }
        let derived = if a == GLOBAL_OBJ {
            self.tables.global_derived.contains(f)
        } else {
            self.tables.classes.get(class).is_some_and(|c| c.derived_fields.contains(f))
        };
        if derived {
            let who = if a == GLOBAL_OBJ { f.to_string() } else { format!("field {f} of a {class} object") };
            return Err(self.err("illegal-assign", format!("{who} is a derived predicate and cannot be updated directly")));
        }
        Ok(())
    }

    /// In alias-checked mode, `a` must not be the value of a derived predicate
    /// variable of a rule set on the stack.
    fn alias_guard(&self, a: Addr) -> Result<(), RunError> {
        if self.opts.mode != Mode::AliasChecked {
            return Ok(());
        }
        for rs in self.stack.iter().flatten() {
            for (o, f) in &rs.derived_vars {
                if self.heap.field(*o, f) == Some(&Value::Addr(a)) {
                    let who = if *o == GLOBAL_OBJ { f.clone() } else { format!("{f} of object @{o}") };
                    return Err(self.err(
                        "illegal-assign",
                        format!("set is the value of derived predicate {who} (rule set {}) and cannot be updated", rs.inst.name),
                    ));
                }
            }
        }
        Ok(())
    }

    fn expect_addr(&self, v: &Value, what: &str) -> Result<Addr, RunError> {
        v.as_addr().ok_or_else(|| self.err("type", format!("{what} must be an object, found {}", v.type_name())))
    }

    fn expect_bool(&self, v: Value, what: &str) -> Result<bool, RunError> {
        match v {
            Value::Bool(b) => Ok(b),
            v => Err(self.err("type", format!("{what} must be a boolean, found {}", v.type_name()))),
        }
    }

    fn iter_var(&self, pat: &'p Pattern) -> Result<&'p str, RunError> {
        match pat {
            Pattern::Var(e) => e.global_name().ok_or_else(|| self.err("sugar", "loop variable must be a plain variable")),
            Pattern::Tuple(_) => Err(self.err("sugar", "tuple patterns must be desugared before execution")),
        }
    }

    fn cursor(&self, v: &Value) -> Result<Cursor, RunError> {
        let a = self.expect_addr(v, "iterated value")?;
        match &self.heap.cell(a).obj {
            Object::Set(s) => Ok(Cursor::Set(s.clone(), None)),
            Object::Seq(s) => Ok(Cursor::Seq(s.clone(), 0)),
            Object::Fields(_) => {
                Err(self.err("type", format!("cannot iterate over a {} object", self.heap.class_of(a))))
            }
        }
    }

    /// Resolves an assignment target to `(object, field)`.
    fn target(&mut self, e: &'p Expr, env: &Env<'p>) -> Result<(Addr, &'p str), RunError> {
        match e {
            Expr::Field(b, f) => {
                if matches!(**b, Expr::GlobalObj) && env.lookup(f, Bind::Loop).is_some() {
                    return Err(self.err("illegal-assign", format!("cannot assign loop variable {f}")));
                }
                let v = self.eval(b, env)?;
                Ok((self.expect_addr(&v, "assignment target")?, f))
            }
            Expr::Global(f) => Ok((GLOBAL_OBJ, f)),
            Expr::Param(p) => Err(self.err("illegal-assign", format!("cannot assign parameter {p}"))),
            _ => Err(self.err("illegal-assign", "assignment target must be a variable or field")),
        }
    }

    fn method(&self, a: Addr, m: &str) -> Result<&'p MethodDecl, RunError> {
        let class = self.heap.class_of(a);
        self.tables
            .classes
            .get(class)
            .and_then(|c| c.methods.get(m).copied())
            .ok_or_else(|| self.err("unknown-method", format!("{class} has no method {m}")))
    }

    fn eval(&mut self, e: &'p Expr, env: &Env<'p>) -> Result<Value, RunError> {
        self.tick()?;
        Ok(match e {
            Expr::Lit(v) => v.clone(),
            Expr::Param(p) => env
                .lookup(p, Bind::Param)
                .cloned()
                .ok_or_else(|| self.err("unbound", format!("parameter {p} is not bound")))?,
            Expr::GlobalObj => Value::Addr(GLOBAL_OBJ),
            Expr::Global(f) => self.read_field(GLOBAL_OBJ, f, env, true)?,
            Expr::Field(b, f) => {
                if matches!(**b, Expr::GlobalObj) {
                    self.read_field(GLOBAL_OBJ, f, env, true)?
                } else {
                    let v = self.eval(b, env)?;
                    let a = self.expect_addr(&v, "field receiver")?;
                    self.read_field(a, f, env, false)?
                }
            }
            Expr::Tuple(items) => {
                let mut vs = Vec::with_capacity(items.len());
                for i in items {
                    vs.push(self.eval(i, env)?);
                }
                Value::tuple(vs)
            }
            Expr::Call(recv, m, args) => {
                let r = self.eval(recv, env)?;
                let mut vs = Vec::with_capacity(args.len());
                for a in args {
                    vs.push(self.eval(a, env)?);
                }
                self.call_function(r, m, vs)?
            }
            Expr::Unary(op, a) => {
                let v = self.eval(a, env)?;
                match (op, v) {
                    (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
                    (UnOp::IsTuple, v) => Value::Bool(matches!(v, Value::Tuple(_))),
                    (UnOp::Len, Value::Tuple(t)) => Value::Int(t.len() as i64),
                    (op, v) => {
                        return Err(self.err("type", format!("{} does not apply to {}", op.keyword(), v.type_name())))
                    }
                }
            }
            Expr::Binary(op, a, b) => {
                let x = self.eval(a, env)?;
                let y = self.eval(b, env)?;
                self.binary(*op, x, y)?
            }
            Expr::IsInstance(a, c) => {
                let v = self.eval(a, env)?;
                Value::Bool(match v {
                    Value::Addr(x) => self.tables.is_subclass(self.heap.class_of(x), c),
                    _ => false,
                })
            }
            Expr::Or(a, b) => {
                let x = self.eval(a, env)?;
                if self.expect_bool(x, "operand of or")? {
                    Value::Bool(true)
                } else {
                    self.eval(b, env)?
                }
            }
            Expr::And(a, b) => {
                let x = self.eval(a, env)?;
                if self.expect_bool(x, "operand of and")? {
                    self.eval(b, env)?
                } else {
                    Value::Bool(false)
                }
            }
            Expr::Some(its, body) => Value::Bool(self.quantify(its, body, env, true)?),
            Expr::Each(its, body) => Value::Bool(!self.quantify(its, body, env, false)?),
        })
    }

    /// True iff some binding of `its` makes `body` evaluate to `want`.
    fn quantify(&mut self, its: &'p [Iter], body: &'p Expr, env: &Env<'p>, want: bool) -> Result<bool, RunError> {
        let Some((first, rest)) = its.split_first() else {
            let v = self.eval(body, env)?;
            return Ok(self.expect_bool(v, "quantified condition")? == want);
        };
        let var = self.iter_var(&first.pat)?;
        let src = self.eval(&first.src, env)?;
        let mut cur = self.cursor(&src)?;
        while let Some(v) = cur.next() {
            if self.quantify(rest, body, &env.bind(var, Bind::Loop, v), want)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn read_field(&self, a: Addr, f: &str, env: &Env<'p>, global: bool) -> Result<Value, RunError> {
        if global {
            if let Some(v) = env.lookup(f, Bind::Loop) {
                return Ok(v.clone());
            }
        }
        match &self.heap.cell(a).obj {
            Object::Fields(m) => m.get(f).cloned().ok_or_else(|| {
                if global {
                    self.err("missing-field", format!("variable {f} has no value"))
                } else {
                    self.err("missing-field", format!("{} object has no field {f}", self.heap.class_of(a)))
                }
            }),
            _ => Err(self.err("type", format!("a {} has no fields", self.heap.class_of(a)))),
        }
    }

    fn binary(&self, op: BinOp, x: Value, y: Value) -> Result<Value, RunError> {
        let overflow = || self.err("overflow", format!("integer overflow in {}", op.keyword()));
        Ok(match (op, &x, &y) {
            (BinOp::Is, _, _) => Value::Bool(x == y),
            (BinOp::Plus, Value::Int(a), Value::Int(b)) => Value::Int(a.checked_add(*b).ok_or_else(overflow)?),
            (BinOp::Minus, Value::Int(a), Value::Int(b)) => Value::Int(a.checked_sub(*b).ok_or_else(overflow)?),
            (BinOp::Times, Value::Int(a), Value::Int(b)) => Value::Int(a.checked_mul(*b).ok_or_else(overflow)?),
            (BinOp::Lt, Value::Int(a), Value::Int(b)) => Value::Bool(a < b),
            (BinOp::Lt, Value::Str(a), Value::Str(b)) => Value::Bool(a < b),
            (BinOp::Select, Value::Tuple(t), Value::Int(i)) => {
                if *i < 1 || *i as usize > t.len() {
                    return Err(self.err("select", format!("select index {i} out of range for a {}-tuple", t.len())));
                }
                t[*i as usize - 1].clone()
            }
            _ => {
                return Err(self.err(
                    "type",
                    format!("{} does not apply to {} and {}", op.keyword(), x.type_name(), y.type_name()),
                ))
            }
        })
    }

    /// Method call in an expression: a built-in query method or a `defun`.
    fn call_function(&mut self, recv: Value, m: &str, args: Vec<Value>) -> Result<Value, RunError> {
        let a = self.expect_addr(&recv, "method receiver")?;
        match &self.heap.cell(a).obj {
            Object::Set(s) => {
                return match (m, args.as_slice()) {
                    ("any", []) => Ok(s.iter().next().cloned().unwrap_or(Value::None)),
                    ("contains", [v]) => Ok(Value::Bool(s.contains(v))),
                    ("size", []) => Ok(Value::Int(s.len() as i64)),
                    _ => Err(self.err("unknown-method", format!("set has no query method {m}/{}", args.len()))),
                }
            }
            Object::Seq(s) => {
                return match (m, args.as_slice()) {
                    ("contains", [v]) => Ok(Value::Bool(s.contains(v))),
                    ("length", []) => Ok(Value::Int(s.len() as i64)),
                    _ => Err(self.err("unknown-method", format!("sequence has no query method {m}/{}", args.len()))),
                }
            }
            Object::Fields(_) => {}
        }
        let md = self.method(a, m)?;
        let MethodBody::Defun(body) = &md.body else {
            return Err(self.err("unknown-method", format!("{m} is a def method and cannot be used in an expression")));
        };
        let env = self.param_env(md, a, args)?;
        if self.depth >= self.opts.max_call_depth {
            return Err(self.err("call-depth", format!("function call depth exceeds {}", self.opts.max_call_depth)));
        }
        self.depth += 1;
        let r = self.eval(body, &env);
        self.depth -= 1;
        r
    }

    fn param_env(&self, md: &'p MethodDecl, recv: Addr, args: Vec<Value>) -> Result<Env<'p>, RunError> {
        if md.params.len() != args.len() {
            return Err(self.err(
                "arity",
                format!("{} takes {} arguments, {} given", md.name, md.params.len(), args.len()),
            ));
        }
        let mut env = Env::default().bind("self", Bind::Param, Value::Addr(recv));
        for (p, v) in md.params.iter().zip(args) {
            env = env.bind(p, Bind::Param, v);
        }
        Ok(env)
    }

    /// Applies one transition.
    pub fn step(&mut self) -> Result<StepInfo, RunError> {
        self.maintained = false;
        let Some(k) = self.kont.pop() else {
            return Ok(StepInfo { done: true, maintained: false });
        };
        self.tick()?;
        match k {
            Kont::Exec(s, env) => {
                self.loc = s.loc;
                self.exec(s, env)?;
            }
            Kont::For { var, mut cursor, body, env } => {
                if let Some(v) = cursor.next() {
                    let inner = env.bind(var, Bind::Loop, v);
                    self.kont.push(Kont::For { var, cursor, body, env });
                    self.kont.push(Kont::Exec(body, inner));
                }
            }
            Kont::Return => {
                // Globals derived only by the popped frame lose their meaning.
                let popped = self.stack.pop().unwrap_or_default();
                let still: BTreeSet<&(Addr, String)> =
                    self.stack.iter().flatten().flat_map(|rs| rs.derived_vars.iter()).collect();
                let orphaned: Vec<(Addr, String)> = popped
                    .iter()
                    .flat_map(|rs| rs.derived_vars.iter())
                    .filter(|k| k.0 == GLOBAL_OBJ && !still.contains(k))
                    .cloned()
                    .collect();
                for k in orphaned {
                    apply_write(&mut self.heap, &k, maintain::Write::Undefined);
                }
                self.maintain()?;
            }
        }
        Ok(StepInfo { done: self.kont.is_empty(), maintained: self.maintained })
    }

    fn exec(&mut self, s: &'p Stmt, env: Env<'p>) -> Result<(), RunError> {
        match &s.kind {
            StmtKind::Skip => {}
            StmtKind::Seq(items) => {
                for i in items.iter().rev() {
                    self.kont.push(Kont::Exec(i, env.clone()));
                }
            }
            StmtKind::Assign(t, e) => {
                let (a, f) = self.target(t, &env)?;
                let v = self.eval(e, &env)?;
                self.legal_assign(a, f)?;
                self.heap.set_field(a, f, v);
                self.maintain()?;
            }
            StmtKind::New(t, c) => {
                let (a, f) = self.target(t, &env)?;
                if c != SET && c != SEQUENCE && !self.tables.classes.contains_key(c.as_str()) {
                    return Err(self.err("unknown-class", format!("unknown class {c}")));
                }
                self.legal_assign(a, f)?;
                let n = self.heap.alloc(c);
                self.heap.set_field(a, f, Value::Addr(n));
                self.maintain()?;
            }
            StmtKind::If(c, a, b) => {
                let v = self.eval(c, &env)?;
                let branch = if self.expect_bool(v, "if condition")? { a } else { b };
                self.kont.push(Kont::Exec(branch, env));
            }
            StmtKind::For(it, body) => {
                let var = self.iter_var(&it.pat)?;
                let src = self.eval(&it.src, &env)?;
                let cursor = self.cursor(&src)?;
                self.kont.push(Kont::For { var, cursor, body, env });
            }
            StmtKind::While(c, body) => {
                let v = self.eval(c, &env)?;
                if self.expect_bool(v, "while condition")? {
                    self.kont.push(Kont::Exec(s, env.clone()));
                    self.kont.push(Kont::Exec(body, env));
                }
            }
            StmtKind::Call(recv, m, args) => {
                let r = self.eval(recv, &env)?;
                let mut vs = Vec::with_capacity(args.len());
                for a in args {
                    vs.push(self.eval(a, &env)?);
                }
                self.call_statement(r, m, vs)?;
            }
            StmtKind::Infer(inf) => self.infer(inf, &env)?,
            StmtKind::Comp(..)
            | StmtKind::Display(..)
            | StmtKind::Aggregate(..)
            | StmtKind::IfSome(..)
            | StmtKind::WhileSome(..) => {
                return Err(self.err("sugar", "surface statement must be desugared before execution"));
            }
        }
        Ok(())
    }

    /// Method call statement: a built-in update method or a `def`.
    fn call_statement(&mut self, recv: Value, m: &str, args: Vec<Value>) -> Result<(), RunError> {
        let a = self.expect_addr(&recv, "method receiver")?;
        let class = self.heap.class_of(a).to_string();
        if class == SET || class == SEQUENCE {
            let [v] = <[Value; 1]>::try_from(args).map_err(|a| {
                self.err("unknown-method", format!("{class} has no update method {m}/{}", a.len()))
            })?;
            match (class.as_str(), m) {
                (SET, "add") | (SET, "del") => {
                    self.alias_guard(a)?;
                    self.heap.with_set(a, |s| if m == "add" { s.insert(v); } else { s.remove(&v); });
                }
                (SEQUENCE, "add") => {
                    self.alias_guard(a)?;
                    self.heap.with_seq(a, |s| s.push(v));
                }
                _ => return Err(self.err("unknown-method", format!("{class} has no update method {m}"))),
            }
            self.maintain()?;
            return Ok(());
        }
        let md = self.method(a, m)?;
        let MethodBody::Def(body) = &md.body else {
            return Err(self.err("unknown-method", format!("{m} is a defun and cannot be called as a statement")));
        };
        let env = self.param_env(md, a, args)?;
        if self.stack.len() > self.opts.max_call_depth {
            return Err(self.err("call-depth", format!("method call depth exceeds {}", self.opts.max_call_depth)));
        }
        let idxs = self.tables.classes.get(class.as_str()).map(|c| c.rulesets.clone()).unwrap_or_default();
        let frame = idxs.into_iter().map(|i| self.compiled_rs(i, a)).collect();
        self.stack.push(frame);
        self.kont.push(Kont::Return);
        self.kont.push(Kont::Exec(body, env));
        self.maintain()?;
        Ok(())
    }

    fn infer(&mut self, inf: &'p Infer, env: &Env<'p>) -> Result<(), RunError> {
        let recv = match &inf.recv {
            Some(e) => {
                let v = self.eval(e, env)?;
                Some(self.expect_addr(&v, "infer receiver")?)
            }
            None => None,
        };
        let idx = match recv {
            Some(a) => {
                let class = self.heap.class_of(a);
                self.tables.classes.get(class).and_then(|c| {
                    c.rulesets.iter().copied().find(|&i| self.tables.decls[i].0.name == inf.rules)
                })
            }
            None => self.tables.globals.get(inf.rules.as_str()).copied(),
        }
        .ok_or_else(|| self.err("unknown-ruleset", format!("no rule set named {}", inf.rules)))?;
        let recv = recv.unwrap_or(GLOBAL_OBJ);
        let rs = self.compiled_rs(idx, recv);
        let decl = self.tables.decls[idx].0;
        let mut targets = Vec::with_capacity(inf.targets.len());
        for t in &inf.targets {
            let (a, f) = self.target(t, env)?;
            self.legal_assign(a, f)?;
            targets.push((a, f));
        }
        let mut args = BTreeMap::new();
        for (k, e) in &inf.kwargs {
            if !rs.info.base_params.contains(&PredRef::Param(k.clone())) {
                return Err(self.err(
                    "bad-kwarg",
                    format!("{k} is not a base predicate parameter of rule set {}", inf.rules),
                ));
            }
            let v = self.eval(e, env)?;
            args.insert(k.clone(), v);
        }
        let mut preds = Vec::with_capacity(inf.queries.len());
        for q in &inf.queries {
            let p = if q.on_self {
                PredRef::Inst(recv, q.pred.clone())
            } else if decl.params.contains(&q.pred) {
                PredRef::Param(q.pred.clone())
            } else {
                PredRef::Inst(GLOBAL_OBJ, q.pred.clone())
            };
            if !rs.info.is_derived(&p) {
                return Err(self.err("bad-query", format!("{} is not a derived predicate of rule set {}", q.pred, inf.rules)));
            }
            preds.push(p);
        }
        if targets.len() != preds.len() {
            return Err(self.err("arity", "infer needs one target per query"));
        }
        let out = inf_sub(&self.heap, &rs, &args, self.loc)?;
        for (k, w) in out.writes {
            apply_write(&mut self.heap, &k, w);
        }
        for ((a, f), p) in targets.into_iter().zip(preds) {
            let v = match out.result.get(&p) {
                Some(rel) => {
                    let s = self.heap.alloc(SET);
                    self.heap.overwrite_set(s, relation_to_set(rel));
                    Value::Addr(s)
                }
                None => Value::None,
            };
            self.heap.set_field(a, f, v);
        }
        self.maintain()?;
        Ok(())
    }
}
