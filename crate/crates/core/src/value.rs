//! Immutable runtime values shared by the parser, the engine and the interpreter.

use std::collections::BTreeSet;
use std::fmt;
use std::rc::Rc;

/// Heap address. Address 0 is the global-variable object.
pub type Addr = u32;

/// The object whose fields hold global variables.
pub const GLOBAL_OBJ: Addr = 0;

/// A finite set of tuples; the extension of a predicate. Iteration order is canonical.
pub type Relation = BTreeSet<Vec<Value>>;

/// A runtime value.
///
/// The derived ordering is the canonical one used for set linearization:
/// `None < Bool < Int < Str < Tuple < Addr`, natural order within a tag,
/// tuples lexicographically, addresses by allocation index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    None,
    Bool(bool),
    Int(i64),
    Str(Rc<str>),
    Tuple(Rc<[Value]>),
    Addr(Addr),
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Rc::from(s))
    }

    pub fn tuple(items: Vec<Value>) -> Value {
        Value::Tuple(Rc::from(items))
    }

    pub fn as_addr(&self) -> Option<Addr> {
        match self {
            Value::Addr(a) => Some(*a),
            _ => None,
        }
    }

    pub fn as_tuple(&self) -> Option<&[Value]> {
        match self {
            Value::Tuple(t) => Some(t),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::None => "None",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Str(_) => "str",
            Value::Tuple(_) => "tuple",
            Value::Addr(_) => "address",
        }
    }

    /// True when the value contains no heap address at any depth.
    pub fn is_ground(&self) -> bool {
        match self {
            Value::Addr(_) => false,
            Value::Tuple(t) => t.iter().all(Value::is_ground),
            _ => true,
        }
    }
}

fn write_str_lit(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("'")?;
    for c in s.chars() {
        match c {
            '\'' => f.write_str("\\'")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("'")
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::None => f.write_str("None"),
            Value::Bool(true) => f.write_str("True"),
            Value::Bool(false) => f.write_str("False"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => write_str_lit(f, s),
            Value::Tuple(items) => {
                f.write_str("(")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                if items.len() == 1 {
                    f.write_str(",")?;
                }
                f.write_str(")")
            }
            Value::Addr(a) => write!(f, "@{a}"),
        }
    }
}

/// Formats a relation tuple as `(v1,v2)`; unlike a 1-tuple value it has no trailing comma.
pub fn format_row(row: &[Value]) -> String {
    let parts: Vec<String> = row.iter().map(|v| v.to_string()).collect();
    format!("({})", parts.join(","))
}
