//! Heap objects, heap types and per-object versions.

use crate::value::{Addr, Relation, Value, GLOBAL_OBJ};
use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

/// Class tag of the global-variable object.
pub const GLOBAL_CLASS: &str = "$globals";
pub const SET: &str = "set";
pub const SEQUENCE: &str = "sequence";

/// Object contents. Set and sequence payloads are shared copy-on-write so that
/// loops and quantifiers can iterate a snapshot without copying.
#[derive(Clone, Debug, PartialEq)]
pub enum Object {
    Fields(BTreeMap<String, Value>),
    Set(Rc<BTreeSet<Value>>),
    Seq(Rc<Vec<Value>>),
}

#[derive(Clone, Debug)]
pub struct Cell {
    /// Heap type: `set`, `sequence` or a class name.
    pub class: Rc<str>,
    pub obj: Object,
    /// Bumped on every change of contents or type.
    pub version: u64,
}

#[derive(Clone, Debug)]
pub struct Heap {
    cells: Vec<Cell>,
}

impl Default for Heap {
    fn default() -> Self {
        Heap::new()
    }
}

impl Heap {
    /// A heap holding only the global-variable object.
    pub fn new() -> Heap {
        Heap { cells: vec![Cell { class: GLOBAL_CLASS.into(), obj: Object::Fields(BTreeMap::new()), version: 0 }] }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, a: Addr) -> &Cell {
        &self.cells[a as usize]
    }

    pub fn class_of(&self, a: Addr) -> &str {
        &self.cells[a as usize].class
    }

    pub fn alloc(&mut self, class: &str) -> Addr {
        let obj = match class {
            SET => Object::Set(Rc::default()),
            SEQUENCE => Object::Seq(Rc::default()),
            _ => Object::Fields(BTreeMap::new()),
        };
        self.alloc_object(class.into(), obj)
    }

    pub fn alloc_object(&mut self, class: Rc<str>, obj: Object) -> Addr {
        self.cells.push(Cell { class, obj, version: 0 });
        (self.cells.len() - 1) as Addr
    }

    pub fn field(&self, a: Addr, f: &str) -> Option<&Value> {
        match &self.cells.get(a as usize)?.obj {
            Object::Fields(m) => m.get(f),
            _ => None,
        }
    }

    pub fn global(&self, name: &str) -> Option<&Value> {
        self.field(GLOBAL_OBJ, name)
    }

    /// Writes a field; the object must have fields.
    pub fn set_field(&mut self, a: Addr, f: &str, v: Value) {
        let c = &mut self.cells[a as usize];
        if let Object::Fields(m) = &mut c.obj {
            if m.get(f) != Some(&v) {
                m.insert(f.to_string(), v);
                c.version += 1;
            }
        }
    }

    pub fn set_contents(&self, a: Addr) -> Option<&Rc<BTreeSet<Value>>> {
        match &self.cells.get(a as usize)?.obj {
            Object::Set(s) => Some(s),
            _ => None,
        }
    }

    /// Makes `a` a set with the given contents, bumping the version only on change.
    pub fn overwrite_set(&mut self, a: Addr, contents: BTreeSet<Value>) {
        let c = &mut self.cells[a as usize];
        let same = &*c.class == SET && matches!(&c.obj, Object::Set(s) if **s == contents);
        if !same {
            c.class = SET.into();
            c.obj = Object::Set(Rc::new(contents));
            c.version += 1;
        }
    }

    /// Mutable access to a set's contents; returns false when `a` is not a set.
    pub fn with_set<R>(&mut self, a: Addr, f: impl FnOnce(&mut BTreeSet<Value>) -> R) -> Option<R> {
        let c = &mut self.cells[a as usize];
        match &mut c.obj {
            Object::Set(s) => {
                c.version += 1;
                Some(f(Rc::make_mut(s)))
            }
            _ => None,
        }
    }

    pub fn with_seq<R>(&mut self, a: Addr, f: impl FnOnce(&mut Vec<Value>) -> R) -> Option<R> {
        let c = &mut self.cells[a as usize];
        match &mut c.obj {
            Object::Seq(s) => {
                c.version += 1;
                Some(f(Rc::make_mut(s)))
            }
            _ => None,
        }
    }

    /// Rows of a set or sequence: tuple elements give their components, any other
    /// element gives a one-column row.
    pub fn rows(&self, a: Addr) -> Option<Relation> {
        let elems: Box<dyn Iterator<Item = &Value>> = match &self.cells.get(a as usize)?.obj {
            Object::Set(s) => Box::new(s.iter()),
            Object::Seq(s) => Box::new(s.iter()),
            Object::Fields(_) => return None,
        };
        Some(elems.map(value_to_row).collect())
    }

    /// Deep rendering of a value: sets and sequences print their elements.
    pub fn render(&self, v: &Value) -> String {
        self.render_depth(v, 0)
    }

    fn render_depth(&self, v: &Value, depth: usize) -> String {
        match v {
            Value::Addr(a) if depth < 8 => match &self.cell(*a).obj {
                Object::Set(s) => {
                    let items: Vec<String> = s.iter().map(|x| self.render_depth(x, depth + 1)).collect();
                    format!("{{{}}}", items.join(", "))
                }
                Object::Seq(s) => {
                    let items: Vec<String> = s.iter().map(|x| self.render_depth(x, depth + 1)).collect();
                    format!("[{}]", items.join(", "))
                }
                Object::Fields(_) => format!("<{} @{a}>", self.class_of(*a)),
            },
            Value::Tuple(items) => {
                let parts: Vec<String> = items.iter().map(|x| self.render_depth(x, depth + 1)).collect();
                if parts.len() == 1 {
                    format!("({},)", parts[0])
                } else {
                    format!("({})", parts.join(","))
                }
            }
            v => v.to_string(),
        }
    }
}

/// Fact row for a set element.
pub fn value_to_row(v: &Value) -> Vec<Value> {
    match v {
        Value::Tuple(t) => t.to_vec(),
        v => vec![v.clone()],
    }
}

/// Set element for a derived row: one-column rows are stored as the bare value.
pub fn row_to_value(row: &[Value]) -> Value {
    if row.len() == 1 {
        row[0].clone()
    } else {
        Value::tuple(row.to_vec())
    }
}

pub fn relation_to_set(rel: &Relation) -> BTreeSet<Value> {
    rel.iter().map(|r| row_to_value(r)).collect()
}
