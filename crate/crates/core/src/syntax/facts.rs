//! Fact files: `name(lit, ..., lit).` entries with integer or single-quoted string literals.

use super::diag::Diagnostic;
use super::lexer::{tokenize, Tok};
use crate::value::{Relation, Value};
use std::collections::BTreeMap;

/// Reads a fact file into a map from predicate name to relation.
pub fn parse_facts(src: &str) -> Result<BTreeMap<String, Relation>, Diagnostic> {
    let toks = tokenize(src)?;
    let mut out: BTreeMap<String, Relation> = BTreeMap::new();
    let mut arity: BTreeMap<String, usize> = BTreeMap::new();
    let mut i = 0;
    let expect = |i: usize, what: &str| -> Diagnostic {
        Diagnostic::new("syntax", format!("expected {what}, found {}", toks[i].tok), toks[i].loc)
    };
    while toks[i].tok != Tok::Eof {
        let loc = toks[i].loc;
        let name = match &toks[i].tok {
            Tok::Ident(n) => n.clone(),
            Tok::Kw(k) => k.to_string(),
            _ => return Err(expect(i, "predicate name")),
        };
        i += 1;
        if toks[i].tok != Tok::Sym("(") {
            return Err(expect(i, "'('"));
        }
        i += 1;
        let mut row = Vec::new();
        if toks[i].tok != Tok::Sym(")") {
            loop {
                let v = match &toks[i].tok {
                    Tok::Int(n) => Value::Int(*n),
                    Tok::Str(s) => Value::str(s),
                    Tok::Sym("-") => match toks[i + 1].tok {
                        Tok::Int(n) => {
                            i += 1;
                            Value::Int(-n)
                        }
                        _ => return Err(expect(i + 1, "integer")),
                    },
                    _ => return Err(expect(i, "integer or string literal")),
                };
                row.push(v);
                i += 1;
                if toks[i].tok == Tok::Sym(",") {
                    i += 1;
                } else {
                    break;
                }
            }
        }
        if toks[i].tok != Tok::Sym(")") {
            return Err(expect(i, "')'"));
        }
        i += 1;
        if toks[i].tok != Tok::Sym(".") {
            return Err(expect(i, "'.'"));
        }
        i += 1;
        match arity.get(&name) {
            Some(&n) if n != row.len() => {
                return Err(Diagnostic::new("arity-mismatch", format!("arity mismatch for {name}"), loc))
            }
            _ => {
                arity.insert(name.clone(), row.len());
            }
        }
        out.entry(name).or_default().insert(row);
    }
    Ok(out)
}

/// Renders relations as a fact file, one fact per line in canonical order.
pub fn write_facts(facts: &BTreeMap<String, Relation>) -> String {
    let mut s = String::new();
    for (name, rel) in facts {
        for row in rel {
            let parts: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("{name}({}).\n", parts.join(",")));
        }
    }
    s
}
