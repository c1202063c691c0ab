//! Abstract syntax for programs, rule sets, statements and expressions.

use crate::value::{Addr, Value};
use std::fmt;

/// Source position (1-based). Positions never take part in structural equality.
#[derive(Clone, Copy, Debug, Default, Eq, Hash, PartialOrd, Ord)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Loc {
    fn eq(&self, _: &Loc) -> bool {
        true
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// What a predicate name in a rule refers to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PredRef {
    /// A global variable (before global lowering).
    Global(String),
    /// `self.f` in a class-scoped rule set (before instantiation).
    SelfField(String),
    /// A predicate local to the rule set.
    Param(String),
    /// Field `f` of the object at an address; globals lower to address 0.
    Inst(Addr, String),
}

impl PredRef {
    /// True for predicates backed by a heap field (globals and fields).
    pub fn is_variable(&self) -> bool {
        !matches!(self, PredRef::Param(_))
    }

    pub fn name(&self) -> &str {
        match self {
            PredRef::Global(n) | PredRef::SelfField(n) | PredRef::Param(n) | PredRef::Inst(_, n) => n,
        }
    }
}

impl fmt::Display for PredRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredRef::Global(n) | PredRef::Param(n) => f.write_str(n),
            PredRef::SelfField(n) => write!(f, "self.{n}"),
            PredRef::Inst(0, n) => write!(f, "a_gv.{n}"),
            PredRef::Inst(a, n) => write!(f, "@{a}.{n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(Value),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: PredRef,
    pub args: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hyp {
    pub negated: bool,
    pub atom: Atom,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Hyp>,
}

impl Rule {
    /// Variables of the conclusion that occur in no hypothesis.
    pub fn unsafe_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        for t in &self.head.args {
            if let Term::Var(v) = t {
                let bound = self
                    .body
                    .iter()
                    .any(|h| h.atom.args.iter().any(|a| matches!(a, Term::Var(w) if w == v)));
                if !bound && !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    /// Variables of negated hypotheses that occur in no positive hypothesis.
    pub fn unsafe_negated_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        for h in self.body.iter().filter(|h| h.negated) {
            for t in &h.atom.args {
                if let Term::Var(v) = t {
                    let bound = self.body.iter().filter(|h| !h.negated).any(|h| {
                        h.atom.args.iter().any(|a| matches!(a, Term::Var(w) if w == v))
                    });
                    if !bound && !out.contains(v) {
                        out.push(v.clone());
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuleSetDecl {
    pub name: String,
    /// Predicates local to the rule set.
    pub params: Vec<String>,
    pub rules: Vec<Rule>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassDecl {
    pub name: String,
    pub extends: Option<String>,
    pub rulesets: Vec<RuleSetDecl>,
    pub methods: Vec<MethodDecl>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodDecl {
    pub name: String,
    pub params: Vec<String>,
    pub body: MethodBody,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MethodBody {
    /// `def`: a statement, invoked only from call statements.
    Def(Stmt),
    /// `defun`: an expression, invoked only from expressions.
    Defun(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub rulesets: Vec<RuleSetDecl>,
    pub classes: Vec<ClassDecl>,
    pub main: Stmt,
}

impl Program {
    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    IsTuple,
    Len,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Is,
    Plus,
    Minus,
    Times,
    Lt,
    Select,
}

impl UnOp {
    pub fn keyword(self) -> &'static str {
        match self {
            UnOp::Not => "not",
            UnOp::IsTuple => "isTuple",
            UnOp::Len => "len",
        }
    }
}

impl BinOp {
    pub fn keyword(self) -> &'static str {
        match self {
            BinOp::Is => "is",
            BinOp::Plus => "plus",
            BinOp::Minus => "minus",
            BinOp::Times => "times",
            BinOp::Lt => "lt",
            BinOp::Select => "select",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Lit(Value),
    /// A method parameter, including `self`.
    Param(String),
    /// A global variable (before global lowering).
    Global(String),
    /// The global-variable object `a_gv`.
    GlobalObj,
    Field(Box<Expr>, String),
    Tuple(Vec<Expr>),
    Call(Box<Expr>, String, Vec<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    IsInstance(Box<Expr>, String),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Each(Vec<Iter>, Box<Expr>),
    Some(Vec<Iter>, Box<Expr>),
}

impl Expr {
    pub fn lit_bool(b: bool) -> Expr {
        Expr::Lit(Value::Bool(b))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn field(e: Expr, f: &str) -> Expr {
        Expr::Field(Box::new(e), f.to_string())
    }

    /// The global variable `x` after lowering: `a_gv.x`.
    pub fn gv(name: &str) -> Expr {
        Expr::field(Expr::GlobalObj, name)
    }

    /// Name of a plain variable (`x` or `a_gv.x`), if this is one.
    pub fn global_name(&self) -> Option<&str> {
        match self {
            Expr::Global(n) => Some(n),
            Expr::Field(b, n) if matches!(**b, Expr::GlobalObj) => Some(n),
            _ => None,
        }
    }

    /// True for assignable forms: a global or a field access.
    pub fn is_variable(&self) -> bool {
        matches!(self, Expr::Global(_) | Expr::Field(..))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Iter {
    pub pat: Pattern,
    pub src: Expr,
}

/// Name carried by a whole-value wildcard pattern (`for _ in S`).
pub const WILDCARD: &str = "_";

#[derive(Clone, Debug, PartialEq)]
pub enum Pattern {
    /// A single variable (a global, or `a_gv.x` after lowering).
    Var(Expr),
    Tuple(Vec<PatElem>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum PatElem {
    /// Binds the component.
    Var(Expr),
    /// `=x`: the component must equal the current value of `x`.
    Eq(Expr),
    Wild,
    /// The component must equal the value of a non-variable expression.
    Expr(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comp {
    pub elem: Expr,
    pub iters: Vec<Iter>,
    pub cond: Expr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggOp {
    Count,
    Sum,
    Max,
    Min,
}

impl AggOp {
    pub fn keyword(self) -> &'static str {
        match self {
            AggOp::Count => "count",
            AggOp::Sum => "sum",
            AggOp::Max => "max",
            AggOp::Min => "min",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AggSrc {
    Expr(Expr),
    Comp(Comp),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub pred: String,
    /// The query names `self.pred` rather than a bare predicate.
    pub on_self: bool,
    pub pattern: Option<Vec<PatElem>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Infer {
    pub targets: Vec<Expr>,
    pub recv: Option<Expr>,
    pub queries: Vec<Query>,
    pub kwargs: Vec<(String, Expr)>,
    pub rules: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Skip,
    Seq(Vec<Stmt>),
    Assign(Expr, Expr),
    New(Expr, String),
    Comp(Expr, Comp),
    /// `x := {e1, ..., en}`.
    Display(Expr, Vec<Expr>),
    Aggregate(Expr, AggOp, AggSrc),
    If(Expr, Box<Stmt>, Box<Stmt>),
    For(Iter, Box<Stmt>),
    While(Expr, Box<Stmt>),
    IfSome(Vec<Iter>, Expr, Box<Stmt>),
    WhileSome(Vec<Iter>, Expr, Box<Stmt>),
    Call(Expr, String, Vec<Expr>),
    Infer(Infer),
}

impl Stmt {
    pub fn new(kind: StmtKind, loc: Loc) -> Stmt {
        Stmt { kind, loc }
    }

    pub fn skip(loc: Loc) -> Stmt {
        Stmt::new(StmtKind::Skip, loc)
    }

    /// Sequence of statements, flattening nested sequences and dropping empty ones.
    pub fn seq(stmts: Vec<Stmt>, loc: Loc) -> Stmt {
        let mut flat = Vec::new();
        for s in stmts {
            match s.kind {
                StmtKind::Seq(inner) => flat.extend(inner),
                _ => flat.push(s),
            }
        }
        match flat.len() {
            0 => Stmt::skip(loc),
            1 => flat.pop().unwrap(),
            _ => Stmt::new(StmtKind::Seq(flat), loc),
        }
    }
}

/// Built-in methods usable in expressions.
pub const BUILTIN_QUERY_METHODS: [&str; 4] = ["any", "contains", "size", "length"];
/// Built-in methods usable as statements.
pub const BUILTIN_UPDATE_METHODS: [&str; 2] = ["add", "del"];
