//! Benchmark inputs, programs and reports.
//!
//! Each benchmark is a program from `programs/` run on generated facts bound
//! to global predicate variables. The result relation is hashed in canonical
//! order so that variants can be compared by checksum.

pub mod gen;

pub use gen::{gen_family, gen_graph, rbac_workload, GraphSpec, RbacOp, RbacState, RbacWorkload, RbacWorkloadSpec};

use crate::runtime::{Machine, Options, RunError};
use crate::syntax::{parse_program, render, Program};
use crate::value::{format_row, Relation, Value};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

pub const TC_RL: &str = include_str!("../../programs/tc.rl");
pub const TCREV_RL: &str = include_str!("../../programs/tcrev.rl");
pub const TC_INFER_RL: &str = include_str!("../../programs/tc_infer.rl");
pub const TCLOOP_RL: &str = include_str!("../../programs/tcloop.rl");
pub const SG_RL: &str = include_str!("../../programs/sg.rl");
pub const MODSG_RL: &str = include_str!("../../programs/modsg.rl");
pub const MODSG_NEG_RL: &str = include_str!("../../programs/modsg_neg.rl");
pub const WIN_RL: &str = include_str!("../../programs/win.rl");
pub const RBAC_CORE_RL: &str = include_str!("../../programs/rbac_core.rl");
pub const RBAC_NONLOC_RL: &str = include_str!("../../programs/rbac_nonloc.rl");
pub const RBAC_ALLLOC_RL: &str = include_str!("../../programs/rbac_allloc.rl");
pub const RBAC_UNION_RL: &str = include_str!("../../programs/rbac_union.rl");
pub const FIG1_RL: &str = include_str!("../../programs/fig1.rl");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BenchName {
    TC,
    TCrev,
    TCloop,
    SG,
    ModSG,
    Win,
    RBACnonloc,
    RBACallloc,
    RBACunion,
}

impl BenchName {
    pub const ALL: [BenchName; 9] = [
        BenchName::TC,
        BenchName::TCrev,
        BenchName::TCloop,
        BenchName::SG,
        BenchName::ModSG,
        BenchName::Win,
        BenchName::RBACnonloc,
        BenchName::RBACallloc,
        BenchName::RBACunion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchName::TC => "TC",
            BenchName::TCrev => "TCrev",
            BenchName::TCloop => "TCloop",
            BenchName::SG => "SG",
            BenchName::ModSG => "ModSG",
            BenchName::Win => "Win",
            BenchName::RBACnonloc => "RBACnonloc",
            BenchName::RBACallloc => "RBACallloc",
            BenchName::RBACunion => "RBACunion",
        }
    }

    fn is_rbac(self) -> bool {
        matches!(self, BenchName::RBACnonloc | BenchName::RBACallloc | BenchName::RBACunion)
    }
}

impl fmt::Display for BenchName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchName {
    type Err = String;
    fn from_str(s: &str) -> Result<BenchName, String> {
        BenchName::ALL
            .into_iter()
            .find(|b| b.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<&str> = BenchName::ALL.iter().map(|b| b.as_str()).collect();
                format!("unknown benchmark `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// Input sizes for one benchmark run. Graph keys apply to the TC variants and
/// Win, `people` to SG and ModSG, the rest to the RBAC variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchSpec {
    pub vertices: usize,
    pub edges: usize,
    pub cyclic: bool,
    pub seed: u64,
    pub people: usize,
    pub users: usize,
    pub roles: usize,
    pub ur_pairs: Option<usize>,
    pub rh_pairs: Option<usize>,
    pub queries: usize,
}

impl BenchSpec {
    pub fn defaults(name: BenchName) -> BenchSpec {
        let mut s = BenchSpec {
            vertices: 1000,
            edges: 10_000,
            cyclic: true,
            seed: 1,
            people: 200,
            users: 500,
            roles: 50,
            ur_pairs: None,
            rh_pairs: None,
            queries: 50,
        };
        match name {
            // The loop variant takes a step per candidate pair.
            BenchName::TCloop => (s.vertices, s.edges) = (20, 40),
            BenchName::Win => (s.vertices, s.edges) = (200, 400),
            _ => {}
        }
        s
    }

    /// Sets one `key=value` override.
    pub fn set(&mut self, kv: &str) -> Result<(), String> {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("expected key=value, got `{kv}`"))?;
        let num = || v.parse::<usize>().map_err(|_| format!("{k}: expected a nonnegative integer, got `{v}`"));
        match k {
            "vertices" => self.vertices = num()?,
            "edges" => self.edges = num()?,
            "cyclic" => self.cyclic = v.parse().map_err(|_| format!("cyclic: expected true or false, got `{v}`"))?,
            "seed" => self.seed = v.parse().map_err(|_| format!("seed: expected an integer, got `{v}`"))?,
            "people" => self.people = num()?,
            "users" => self.users = num()?,
            "roles" => self.roles = num()?,
            "ur" => self.ur_pairs = Some(num()?),
            "rh" => self.rh_pairs = Some(num()?),
            "queries" => self.queries = num()?,
            _ => return Err(format!("unknown spec key `{k}`")),
        }
        Ok(())
    }

    pub fn graph(&self) -> GraphSpec {
        GraphSpec { vertices: self.vertices, edges: self.edges, cyclic: self.cyclic, seed: self.seed }
    }

    pub fn rbac(&self) -> RbacWorkloadSpec {
        let mut s = RbacWorkloadSpec::scaled(self.users, self.roles, self.queries, self.seed);
        s.ur_pairs = self.ur_pairs.unwrap_or(s.ur_pairs);
        s.rh_pairs = self.rh_pairs.unwrap_or(s.rh_pairs);
        s
    }

    /// The keys that matter for `name`, as `k=v` pairs.
    pub fn describe(&self, name: BenchName) -> String {
        match name {
            BenchName::SG | BenchName::ModSG => format!("people={} seed={}", self.people, self.seed),
            n if n.is_rbac() => {
                let r = self.rbac();
                format!(
                    "users={} roles={} ur={} rh={} queries={} seed={}",
                    r.users, r.roles, r.ur_pairs, r.rh_pairs, r.queries, r.seed
                )
            }
            _ => format!("vertices={} edges={} cyclic={} seed={}", self.vertices, self.edges, self.cyclic, self.seed),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid benchmark input: {0}")]
    Spec(String),
    #[error("benchmark program rejected:\n{0}")]
    Program(String),
    #[error(transparent)]
    Run(#[from] RunError),
}

/// A benchmark program with its inputs, ready to run.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub name: BenchName,
    pub source: String,
    /// Relations assigned to global variables before `main` runs.
    pub bindings: Vec<(String, Relation)>,
    pub workload: Option<RbacWorkload>,
}

/// Generates the inputs of `name` and assembles its program text.
pub fn prepare(name: BenchName, spec: &BenchSpec) -> Result<Prepared, BenchError> {
    let graph = |pred: &str| -> Result<Vec<(String, Relation)>, BenchError> {
        Ok(vec![(pred.to_string(), gen_graph(spec.graph()).map_err(BenchError::Spec)?)])
    };
    let family = || vec![("par".to_string(), gen_family(spec.people, spec.seed))];
    let (source, bindings, workload) = match name {
        BenchName::TC => (TC_RL.to_string(), graph("edge")?, None),
        BenchName::TCrev => (TCREV_RL.to_string(), graph("edge")?, None),
        BenchName::TCloop => (TCLOOP_RL.to_string(), graph("edge")?, None),
        BenchName::SG => (SG_RL.to_string(), family(), None),
        BenchName::ModSG => (MODSG_RL.to_string(), family(), None),
        BenchName::Win => (WIN_RL.to_string(), graph("move")?, None),
        _ => {
            let variant = match name {
                BenchName::RBACnonloc => RBAC_NONLOC_RL,
                BenchName::RBACallloc => RBAC_ALLLOC_RL,
                _ => RBAC_UNION_RL,
            };
            let w = rbac_workload(spec.rbac()).map_err(BenchError::Spec)?;
            let source = format!("{RBAC_CORE_RL}\n{variant}\n{}", w.main_program());
            let bindings = w.initial.relations().into_iter().map(|(n, r)| (n.to_string(), r)).collect();
            (source, bindings, Some(w))
        }
    };
    Ok(Prepared { name, source, bindings, workload })
}

/// Parses, desugars and statically checks a program.
pub fn compile(source: &str) -> Result<Program, BenchError> {
    let prog = parse_program(source).map_err(|d| BenchError::Program(render(&d)))?;
    let prog = crate::desugar::desugar_all(prog);
    crate::analysis::check(&prog, crate::runtime::Mode::NoAlias).map_err(|d| BenchError::Program(render(&d)))?;
    Ok(prog)
}

/// Outcome of running a prepared benchmark.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub result: Relation,
    pub steps: u64,
    pub wall: Duration,
}

/// Runs a prepared benchmark without a step budget and extracts its result
/// relation. For RBAC the result holds `(k, user)` for every user answered by
/// the k-th query.
pub fn execute(p: &Prepared) -> Result<Outcome, BenchError> {
    let prog = compile(&p.source)?;
    let start = Instant::now();
    let mut m = Machine::new(&prog, Options { step_budget: u64::MAX, ..Options::default() })?;
    for (g, rel) in &p.bindings {
        m.bind_global_set(g, rel)?;
    }
    m.run()?;
    let wall = start.elapsed();
    let rows = |g: &str| m.global_rows(g).unwrap_or_default();
    let result = match p.name {
        BenchName::TC | BenchName::TCrev | BenchName::TCloop => rows("path"),
        BenchName::SG => rows("sg"),
        BenchName::ModSG => rows("sg2"),
        BenchName::Win => rows("win"),
        _ => {
            let n = p.workload.as_ref().map_or(0, |w| w.query_count());
            let mut out = Relation::new();
            for k in 1..=n {
                for row in rows(&format!("q{k}")) {
                    let mut r = vec![Value::Int(k as i64)];
                    r.extend(row);
                    out.insert(r);
                }
            }
            out
        }
    };
    Ok(Outcome { result, steps: m.steps(), wall })
}

/// Order-independent SHA-256 of a relation: the hash of its rows in canonical
/// order, one `(v1,v2)` line each.
pub fn checksum(rel: &Relation) -> String {
    let mut h = Sha256::new();
    for row in rel {
        h.update(format_row(row).as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Closure of a binary relation by breadth-first search from every source.
pub fn closure(edges: &Relation) -> Relation {
    let mut succ: BTreeMap<&Value, Vec<&Value>> = BTreeMap::new();
    for e in edges {
        succ.entry(&e[0]).or_default().push(&e[1]);
    }
    let mut out = Relation::new();
    for &x in succ.keys() {
        let mut seen: BTreeSet<&Value> = BTreeSet::new();
        let mut todo = vec![x];
        while let Some(y) = todo.pop() {
            for &z in succ.get(y).into_iter().flatten() {
                if seen.insert(z) {
                    todo.push(z);
                }
            }
        }
        out.extend(seen.into_iter().map(|z| vec![x.clone(), z.clone()]));
    }
    out
}

/// Expected result where the bench harness has its own oracle: closure for the
/// TC variants, replayed state for RBAC.
pub fn expected(p: &Prepared) -> Option<Relation> {
    match p.name {
        BenchName::TC | BenchName::TCrev | BenchName::TCloop => Some(closure(&p.bindings[0].1)),
        n if n.is_rbac() => {
            let answers = p.workload.as_ref()?.oracle();
            Some(
                answers
                    .into_iter()
                    .enumerate()
                    .flat_map(|(k, us)| us.into_iter().map(move |u| vec![Value::Int(k as i64 + 1), Value::str(&u)]))
                    .collect(),
            )
        }
        _ => None,
    }
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub name: BenchName,
    pub spec: String,
    pub rows: usize,
    pub checksum: String,
    pub steps: u64,
    pub wall: Duration,
    /// Agreement with the harness oracle, when there is one.
    pub verified: Option<bool>,
}

impl BenchReport {
    /// Tab-separated summary line, for machine consumption.
    pub fn tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{:.3}\t{}",
            self.name,
            self.spec,
            self.rows,
            self.checksum,
            self.steps,
            self.wall.as_secs_f64() * 1000.0,
            self.verdict()
        )
    }

    pub const TSV_HEADER: &'static str = "name\tspec\trows\tchecksum\tsteps\twall_ms\toracle";

    fn verdict(&self) -> &'static str {
        match self.verified {
            Some(true) => "ok",
            Some(false) => "MISMATCH",
            None => "-",
        }
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<10} rows={:<7} checksum={} steps={:<10} wall={:.1}ms oracle={}  [{}]",
            self.name.as_str(),
            self.rows,
            &self.checksum[..16],
            self.steps,
            self.wall.as_secs_f64() * 1000.0,
            self.verdict(),
            self.spec
        )
    }
}

/// Generates inputs, runs the benchmark and checks it against the oracle.
pub fn run_bench(name: BenchName, spec: &BenchSpec) -> Result<BenchReport, BenchError> {
    let p = prepare(name, spec)?;
    let out = execute(&p)?;
    let verified = expected(&p).map(|e| e == out.result);
    Ok(BenchReport {
        name,
        spec: spec.describe(name),
        rows: out.result.len(),
        checksum: checksum(&out.result),
        steps: out.steps,
        wall: out.wall,
        verified,
    })
}
