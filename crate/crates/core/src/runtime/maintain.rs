//! Inference substitutions and maintenance of derived predicate variables.
//!
//! Writes are keyed by variable `(address, field)`. A defined derived variable
//! whose field already holds an address is overwritten in place; otherwise a
//! fresh set is allocated. Undefined derived variables become `None`.

use super::heap::{relation_to_set, Heap, SET};
use super::RuntimeError;
use crate::engine::{self, EngineError, EngineInput, Strategy};
use crate::rules::{slice, InstRuleSet, PredSet, RuleSetInfo};
use crate::syntax::ast::{Loc, PredRef};
use crate::value::{Addr, Relation, Value};
use std::collections::{BTreeMap, BTreeSet};

/// Identity of an instantiated rule set: declaration index and receiver.
pub type RsKey = (usize, Addr);

/// A rule set instantiated for a receiver, with its classification.
#[derive(Debug)]
pub struct CompiledRs {
    pub key: RsKey,
    pub inst: InstRuleSet,
    pub info: RuleSetInfo,
    /// Derived predicate variables as `(address, field)`.
    pub derived_vars: Vec<(Addr, String)>,
}

impl CompiledRs {
    pub fn new(key: RsKey, inst: InstRuleSet) -> CompiledRs {
        let info = inst.info();
        let derived_vars = info
            .derived_vars
            .iter()
            .filter_map(|p| match p {
                PredRef::Inst(a, f) => Some((*a, f.clone())),
                _ => None,
            })
            .collect();
        CompiledRs { key, inst, info, derived_vars }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Write {
    /// The variable is undefined: its field becomes `None`.
    Undefined,
    /// The variable holds this set.
    Contents(BTreeSet<Value>),
    /// Leave the variable as it is (a cached result that is still current).
    Keep,
}

pub type WriteKey = (Addr, String);

/// Outcome of one inference substitution.
#[derive(Debug, Default)]
pub struct InfOut {
    pub writes: Vec<(WriteKey, Write)>,
    /// Relation of every defined derived predicate, variables and parameters.
    pub result: BTreeMap<PredRef, Relation>,
}

fn known_set(heap: &Heap, v: Option<&Value>) -> Option<Addr> {
    match v {
        Some(Value::Addr(a)) if heap.class_of(*a) == SET => Some(*a),
        _ => None,
    }
}

pub fn engine_error(e: EngineError, loc: Loc) -> RuntimeError {
    let code = match e {
        EngineError::NonGround { .. } => "non-ground-fact",
        EngineError::Arity { .. } => "arity-mismatch",
        EngineError::NotStratified(_) => "engine",
    };
    RuntimeError::new(code, e.to_string(), loc)
}

/// Evaluates the slice of `rs` that fully depends on the base predicates with
/// set values: base variables whose fields hold sets and parameters in `args`
/// bound to sets. Derived variables outside the slice are undefined.
pub fn inf_sub(heap: &Heap, rs: &CompiledRs, args: &BTreeMap<String, Value>, loc: Loc) -> Result<InfOut, RuntimeError> {
    let mut known = PredSet::new();
    let mut sources: Vec<(PredRef, Addr)> = Vec::new();
    for p in &rs.info.base_vars {
        if let PredRef::Inst(a, f) = p {
            if let Some(s) = known_set(heap, heap.field(*a, f)) {
                known.insert(p.clone());
                sources.push((p.clone(), s));
            }
        }
    }
    for p in &rs.info.base_params {
        if let Some(s) = known_set(heap, args.get(p.name())) {
            known.insert(p.clone());
            sources.push((p.clone(), s));
        }
    }
    let rules = slice(&rs.inst.rules, &known);
    let mut out = InfOut::default();
    if !rules.is_empty() {
        let used = crate::rules::predicates(&rules);
        let facts = sources
            .into_iter()
            .filter(|(p, _)| used.contains(p))
            .map(|(p, s)| (p, heap.rows(s).unwrap_or_default()))
            .collect();
        let res = engine::eval(&EngineInput { rules, facts }, Strategy::Auto).map_err(|e| engine_error(e, loc))?;
        out.result = res.extensions;
    }
    for (a, f) in &rs.derived_vars {
        let w = match out.result.get(&PredRef::Inst(*a, f.clone())) {
            Some(rel) => Write::Contents(relation_to_set(rel)),
            None => Write::Undefined,
        };
        out.writes.push(((*a, f.clone()), w));
    }
    Ok(out)
}

/// Applies one write to the heap.
pub fn apply_write(heap: &mut Heap, (a, f): &WriteKey, w: Write) {
    match w {
        Write::Keep => {}
        Write::Undefined => heap.set_field(*a, f, Value::None),
        Write::Contents(s) => match heap.field(*a, f) {
            Some(Value::Addr(x)) => {
                let x = *x;
                heap.overwrite_set(x, s);
            }
            _ => {
                let x = heap.alloc(SET);
                heap.overwrite_set(x, s);
                heap.set_field(*a, f, Value::Addr(x));
            }
        },
    }
}

/// Field values of a rule set's variables and the versions of the objects
/// they refer to: base variables first, then derived ones.
pub type Signature = Vec<(Option<Value>, u64)>;

pub fn signature(heap: &Heap, rs: &CompiledRs) -> Signature {
    var_signature(heap, rs.info.base_vars.iter().chain(rs.info.derived_vars.iter()))
}

fn var_signature<'a>(heap: &Heap, vars: impl Iterator<Item = &'a PredRef>) -> Signature {
    vars.map(|p| match p {
        PredRef::Inst(a, f) => {
            let v = heap.field(*a, f).cloned();
            let ver = match &v {
                Some(Value::Addr(x)) => heap.cell(*x).version,
                _ => 0,
            };
            (v, ver)
        }
        _ => (None, 0),
    })
    .collect()
}

/// Per-rule-set memo of the last maintenance whose result was fully applied
/// and computed from base values that the same step left unchanged.
#[derive(Debug, Default)]
pub struct MaintCache {
    sigs: BTreeMap<RsKey, Signature>,
    pub hits: u64,
    pub misses: u64,
}

impl MaintCache {
    pub fn clear(&mut self) {
        self.sigs.clear();
    }
}

/// One maintenance step over the stack, bottom frame first. Every rule set sees
/// the pre-state heap; writes from higher frames take precedence.
pub fn maintain(heap: &mut Heap, stack: &[Vec<std::rc::Rc<CompiledRs>>], cache: &mut MaintCache, loc: Loc) -> Result<(), RuntimeError> {
    let no_args = BTreeMap::new();
    let mut combined: BTreeMap<WriteKey, (Write, RsKey)> = BTreeMap::new();
    let mut evaluated: Vec<(&CompiledRs, Signature)> = Vec::new();
    for frame in stack {
        for rs in frame {
            if rs.derived_vars.is_empty() {
                continue;
            }
            let mut pre = signature(heap, rs);
            let writes = if cache.sigs.get(&rs.key) == Some(&pre) {
                cache.hits += 1;
                rs.derived_vars.iter().map(|k| (k.clone(), Write::Keep)).collect()
            } else {
                cache.misses += 1;
                inf_sub(heap, rs, &no_args, loc)?.writes
            };
            for (k, w) in writes {
                combined.insert(k, (w, rs.key));
            }
            pre.truncate(rs.info.base_vars.len());
            evaluated.push((rs, pre));
        }
    }
    let winners: BTreeMap<WriteKey, RsKey> = combined.iter().map(|(k, (_, o))| (k.clone(), *o)).collect();
    for (k, (w, _)) in combined {
        apply_write(heap, &k, w);
    }
    for (rs, pre_base) in evaluated {
        let won = rs.derived_vars.iter().all(|k| winners.get(k) == Some(&rs.key));
        let post = signature(heap, rs);
        if won && post[..pre_base.len()] == pre_base[..] {
            cache.sigs.insert(rs.key, post);
        } else {
            cache.sigs.remove(&rs.key);
        }
    }
    Ok(())
}
