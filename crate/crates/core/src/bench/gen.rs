//! Seeded input generators: random graphs, family DAGs and RBAC workloads.

use crate::value::{Relation, Value};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt::Write;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphSpec {
    pub vertices: usize,
    pub edges: usize,
    /// When false only edges `(u, v)` with `u < v` are drawn, giving a DAG.
    pub cyclic: bool,
    pub seed: u64,
}

/// Exactly `edges` distinct edges over vertices `0..vertices`, drawn
/// uniformly without replacement. Cyclic graphs may contain self-loops.
pub fn gen_graph(spec: GraphSpec) -> Result<Relation, String> {
    let n = spec.vertices as u64;
    if n == 0 {
        return Err("a graph needs at least one vertex".into());
    }
    let universe = if spec.cyclic { n * n } else { n * (n - 1) / 2 };
    if spec.edges as u64 > universe {
        return Err(format!(
            "{} edges do not fit in {} {} vertices (at most {universe})",
            spec.edges,
            if spec.cyclic { "cyclic" } else { "acyclic" },
            spec.vertices
        ));
    }
    let mut r = rng(spec.seed);
    let decode = |k: u64| -> (u64, u64) {
        if spec.cyclic {
            (k / n, k % n)
        } else {
            // k-th pair (u, v), u < v, in row-major order.
            let mut u = 0;
            let mut k = k;
            while k >= n - 1 - u {
                k -= n - 1 - u;
                u += 1;
            }
            (u, u + 1 + k)
        }
    };
    let picks: Vec<u64> = if (spec.edges as u64) * 2 > universe {
        let mut all: Vec<u64> = (0..universe).collect();
        all.shuffle(&mut r);
        all.truncate(spec.edges);
        all
    } else {
        let mut seen = HashSet::with_capacity(spec.edges);
        let mut out = Vec::with_capacity(spec.edges);
        while out.len() < spec.edges {
            let k = r.gen_range(0..universe);
            if seen.insert(k) {
                out.push(k);
            }
        }
        out
    };
    Ok(picks
        .into_iter()
        .map(|k| {
            let (u, v) = decode(k);
            vec![Value::Int(u as i64), Value::Int(v as i64)]
        })
        .collect())
}

/// Parent relation `par(child, parent)` of a family DAG: person `i > 0` has
/// one or two parents among `0..i`.
pub fn gen_family(people: usize, seed: u64) -> Relation {
    let mut r = rng(seed);
    let mut out = Relation::new();
    for i in 1..people as i64 {
        let k = if i > 1 && r.gen_bool(0.5) { 2 } else { 1 };
        for _ in 0..k {
            out.insert(vec![Value::Int(i), Value::Int(r.gen_range(0..i))]);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RbacWorkloadSpec {
    pub users: usize,
    pub roles: usize,
    pub ur_pairs: usize,
    pub rh_pairs: usize,
    pub queries: usize,
    pub seed: u64,
}

impl RbacWorkloadSpec {
    /// Sizes in the proportions of the reference workload: 1.1 user-role pairs
    /// per user and 1.1 hierarchy pairs per role.
    pub fn scaled(users: usize, roles: usize, queries: usize, seed: u64) -> RbacWorkloadSpec {
        RbacWorkloadSpec {
            users,
            roles,
            ur_pairs: (users * 11).div_ceil(10),
            rh_pairs: (roles * 11).div_ceil(10),
            queries,
            seed,
        }
    }

    /// Update totals per operation kind, scaled from the reference workload of
    /// 5000 users by `users / 5000`, rounded up.
    pub fn update_totals(&self) -> [(OpKind, usize); 8] {
        let s = |base: usize| (base * self.users).div_ceil(5000);
        [
            (OpKind::AddUser, s(50)),
            (OpKind::DeleteUser, s(50)),
            (OpKind::AddRole, s(5)),
            (OpKind::DeleteRole, s(5)),
            (OpKind::AssignUser, s(55)),
            (OpKind::DeassignUser, s(55)),
            (OpKind::AddInheritance, s(5)),
            (OpKind::DeleteInheritance, s(5)),
        ]
    }
}

pub const MAX_ROLES_PER_USER: usize = 10;
/// Roles sit on levels `0..=HIERARCHY_HEIGHT`; hierarchy pairs go strictly
/// downward, so every chain has at most this many pairs.
pub const HIERARCHY_HEIGHT: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum OpKind {
    AddUser,
    DeleteUser,
    AddRole,
    DeleteRole,
    AssignUser,
    DeassignUser,
    AddInheritance,
    DeleteInheritance,
    Query,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RbacOp {
    AddUser(String),
    DeleteUser(String),
    AddRole(String),
    DeleteRole(String),
    AssignUser(String, String),
    DeassignUser(String, String),
    AddInheritance(String, String),
    DeleteInheritance(String, String),
    AuthorizedUsers(String),
}

impl RbacOp {
    /// The method call statement for receiver `h`.
    pub fn call(&self) -> String {
        let (m, args): (&str, Vec<&String>) = match self {
            RbacOp::AddUser(u) => ("AddUser", vec![u]),
            RbacOp::DeleteUser(u) => ("DeleteUser", vec![u]),
            RbacOp::AddRole(r) => ("AddRole", vec![r]),
            RbacOp::DeleteRole(r) => ("DeleteRole", vec![r]),
            RbacOp::AssignUser(u, r) => ("AssignUser", vec![u, r]),
            RbacOp::DeassignUser(u, r) => ("DeassignUser", vec![u, r]),
            RbacOp::AddInheritance(a, d) => ("AddInheritance", vec![a, d]),
            RbacOp::DeleteInheritance(a, d) => ("DeleteInheritance", vec![a, d]),
            RbacOp::AuthorizedUsers(r) => ("AuthorizedUsers", vec![r]),
        };
        let args: Vec<String> = args.iter().map(|a| format!("'{a}'")).collect();
        format!("h.{m}({})", args.join(", "))
    }
}

/// Users, roles, user-role pairs and role hierarchy pairs `(ascendant, descendant)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RbacState {
    pub users: BTreeSet<String>,
    pub roles: BTreeSet<String>,
    pub ur: BTreeSet<(String, String)>,
    pub rh: BTreeSet<(String, String)>,
}

impl RbacState {
    /// Applies an update; queries leave the state unchanged.
    pub fn apply(&mut self, op: &RbacOp) {
        match op {
            RbacOp::AddUser(u) => {
                self.users.insert(u.clone());
            }
            RbacOp::DeleteUser(u) => {
                self.users.remove(u);
                self.ur.retain(|(x, _)| x != u);
            }
            RbacOp::AddRole(r) => {
                self.roles.insert(r.clone());
            }
            RbacOp::DeleteRole(r) => {
                self.roles.remove(r);
                self.ur.retain(|(_, x)| x != r);
                self.rh.retain(|(a, d)| a != r && d != r);
            }
            RbacOp::AssignUser(u, r) => {
                self.ur.insert((u.clone(), r.clone()));
            }
            RbacOp::DeassignUser(u, r) => {
                self.ur.remove(&(u.clone(), r.clone()));
            }
            RbacOp::AddInheritance(a, d) => {
                self.rh.insert((a.clone(), d.clone()));
            }
            RbacOp::DeleteInheritance(a, d) => {
                self.rh.remove(&(a.clone(), d.clone()));
            }
            RbacOp::AuthorizedUsers(_) => {}
        }
    }

    /// Users assigned to `role` or to a role that reaches `role` through the
    /// hierarchy, computed by breadth-first search backwards from `role`.
    pub fn authorized_users(&self, role: &str) -> BTreeSet<String> {
        let mut up: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (a, d) in &self.rh {
            up.entry(d.as_str()).or_default().push(a.as_str());
        }
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut queue: VecDeque<&str> = VecDeque::new();
        // Reflexive pairs exist only for current roles; hierarchy pairs always count.
        if self.roles.contains(role) {
            seen.insert(role);
        }
        queue.push_back(role);
        let mut visited: BTreeSet<&str> = BTreeSet::from([role]);
        while let Some(x) = queue.pop_front() {
            for &a in up.get(x).into_iter().flatten() {
                seen.insert(a);
                if visited.insert(a) {
                    queue.push_back(a);
                }
            }
        }
        self.ur.iter().filter(|(_, r)| seen.contains(r.as_str())).map(|(u, _)| u.clone()).collect()
    }

    pub fn relations(&self) -> [(&'static str, Relation); 4] {
        let s = |x: &String| Value::str(x);
        [
            ("USERS0", self.users.iter().map(|u| vec![s(u)]).collect()),
            ("ROLES0", self.roles.iter().map(|r| vec![s(r)]).collect()),
            ("UR0", self.ur.iter().map(|(u, r)| vec![s(u), s(r)]).collect()),
            ("RH0", self.rh.iter().map(|(a, d)| vec![s(a), s(d)]).collect()),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RbacWorkload {
    pub initial: RbacState,
    pub ops: Vec<RbacOp>,
}

impl RbacWorkload {
    /// Expected answer of every query, in order.
    pub fn oracle(&self) -> Vec<BTreeSet<String>> {
        let mut st = self.initial.clone();
        let mut out = Vec::new();
        for op in &self.ops {
            if let RbacOp::AuthorizedUsers(r) = op {
                out.push(st.authorized_users(r));
            }
            st.apply(op);
        }
        out
    }

    /// Main statements driving a `HierRBAC` object through the workload. The
    /// initial state is read from the globals of [`RbacState::relations`];
    /// the answer of the k-th query is stored in global `q<k>`.
    pub fn main_program(&self) -> String {
        let mut s = String::from("h := new HierRBAC\nh.setup()\nh.load(USERS0, ROLES0, UR0, RH0)\n");
        let mut k = 0;
        for op in &self.ops {
            s.push_str(&op.call());
            s.push('\n');
            if let RbacOp::AuthorizedUsers(_) = op {
                k += 1;
                let _ = writeln!(s, "q{k} := h.answer");
            }
        }
        s
    }

    pub fn query_count(&self) -> usize {
        self.ops.iter().filter(|o| matches!(o, RbacOp::AuthorizedUsers(_))).count()
    }
}

fn pick<'a, T>(r: &mut ChaCha8Rng, it: impl ExactSizeIterator<Item = &'a T>) -> Option<&'a T> {
    let n = it.len();
    if n == 0 {
        return None;
    }
    let k = r.gen_range(0..n);
    it.into_iter().nth(k)
}

fn roles_of(st: &RbacState, u: &String) -> usize {
    st.ur.range((u.clone(), String::new())..).take_while(|(x, _)| x == u).count()
}

/// A uniformly random pair from `xs × ys` satisfying `ok`: rejection sampling,
/// then exhaustive search when valid pairs are rare.
fn sample_pair(
    r: &mut ChaCha8Rng,
    xs: &BTreeSet<String>,
    ys: &BTreeSet<String>,
    ok: impl Fn(&String, &String) -> bool,
) -> Option<(String, String)> {
    let (xv, yv): (Vec<&String>, Vec<&String>) = (xs.iter().collect(), ys.iter().collect());
    if xv.is_empty() || yv.is_empty() {
        return None;
    }
    for _ in 0..10_000 {
        let (x, y) = (xv[r.gen_range(0..xv.len())], yv[r.gen_range(0..yv.len())]);
        if ok(x, y) {
            return Some((x.clone(), y.clone()));
        }
    }
    let all: Vec<(&String, &String)> = xv.iter().flat_map(|x| yv.iter().map(move |y| (*x, *y))).filter(|(x, y)| ok(x, y)).collect();
    pick(r, all.iter()).map(|(x, y)| ((*x).clone(), (*y).clone()))
}

/// Initial state plus a uniformly random permutation of the scaled update
/// totals and `queries` queries. Every operation is valid in the state it
/// is applied to.
pub fn rbac_workload(spec: RbacWorkloadSpec) -> Result<RbacWorkload, String> {
    let mut r = rng(spec.seed);
    if spec.users == 0 || spec.roles == 0 {
        return Err("RBAC workloads need at least one user and one role".into());
    }
    if spec.ur_pairs > spec.users * MAX_ROLES_PER_USER.min(spec.roles) {
        return Err(format!("{} user-role pairs exceed the per-user limit", spec.ur_pairs));
    }
    let mut level: BTreeMap<String, usize> = BTreeMap::new();
    let mut st = RbacState::default();
    for i in 0..spec.users {
        st.users.insert(format!("u{i}"));
    }
    for i in 0..spec.roles {
        let name = format!("r{i}");
        level.insert(name.clone(), r.gen_range(0..=HIERARCHY_HEIGHT));
        st.roles.insert(name);
    }
    let users: Vec<String> = st.users.iter().cloned().collect();
    let roles: Vec<String> = st.roles.iter().cloned().collect();
    let mut per_user: BTreeMap<String, usize> = BTreeMap::new();
    while st.ur.len() < spec.ur_pairs {
        let u = &users[r.gen_range(0..users.len())];
        let ro = &roles[r.gen_range(0..roles.len())];
        if per_user.get(u).copied().unwrap_or(0) < MAX_ROLES_PER_USER && st.ur.insert((u.clone(), ro.clone())) {
            *per_user.entry(u.clone()).or_default() += 1;
        }
    }
    let downward: Vec<(String, String)> = roles
        .iter()
        .flat_map(|a| roles.iter().map(move |d| (a.clone(), d.clone())))
        .filter(|(a, d)| level[a] < level[d])
        .collect();
    if downward.len() < spec.rh_pairs {
        return Err(format!("{} hierarchy pairs do not fit the role levels", spec.rh_pairs));
    }
    for p in downward.choose_multiple(&mut r, spec.rh_pairs) {
        st.rh.insert(p.clone());
    }
    let initial = st.clone();

    let mut kinds: Vec<OpKind> = Vec::new();
    for (k, n) in spec.update_totals() {
        kinds.extend(std::iter::repeat_n(k, n));
    }
    kinds.extend(std::iter::repeat_n(OpKind::Query, spec.queries));
    kinds.shuffle(&mut r);

    let mut next_user = spec.users;
    let mut next_role = spec.roles;
    let mut ops = Vec::with_capacity(kinds.len());
    for k in kinds {
        let fail = || format!("no valid {k:?} operation in the current state");
        let op = match k {
            OpKind::AddUser => {
                next_user += 1;
                RbacOp::AddUser(format!("u{}", next_user - 1))
            }
            OpKind::DeleteUser => RbacOp::DeleteUser(pick(&mut r, st.users.iter()).ok_or_else(fail)?.clone()),
            OpKind::AddRole => {
                next_role += 1;
                let name = format!("r{}", next_role - 1);
                level.insert(name.clone(), r.gen_range(0..=HIERARCHY_HEIGHT));
                RbacOp::AddRole(name)
            }
            OpKind::DeleteRole => RbacOp::DeleteRole(pick(&mut r, st.roles.iter()).ok_or_else(fail)?.clone()),
            OpKind::AssignUser => {
                let ok = |st: &RbacState, u: &String, ro: &String| {
                    roles_of(st, u) < MAX_ROLES_PER_USER && !st.ur.contains(&(u.clone(), ro.clone()))
                };
                let (u, ro) = sample_pair(&mut r, &st.users, &st.roles, |u, ro| ok(&st, u, ro)).ok_or_else(fail)?;
                RbacOp::AssignUser(u, ro)
            }
            OpKind::DeassignUser => {
                let (u, ro) = pick(&mut r, st.ur.iter()).ok_or_else(fail)?.clone();
                RbacOp::DeassignUser(u, ro)
            }
            OpKind::AddInheritance => {
                let ok = |a: &String, d: &String| level[a] < level[d] && !st.rh.contains(&(a.clone(), d.clone()));
                let (a, d) = sample_pair(&mut r, &st.roles, &st.roles, ok).ok_or_else(fail)?;
                RbacOp::AddInheritance(a, d)
            }
            OpKind::DeleteInheritance => {
                let (a, d) = pick(&mut r, st.rh.iter()).ok_or_else(fail)?.clone();
                RbacOp::DeleteInheritance(a, d)
            }
            OpKind::Query => RbacOp::AuthorizedUsers(pick(&mut r, st.roles.iter()).ok_or_else(fail)?.clone()),
        };
        st.apply(&op);
        ops.push(op);
    }
    Ok(RbacWorkload { initial, ops })
}
