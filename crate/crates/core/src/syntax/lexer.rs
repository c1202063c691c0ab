//! Tokenizer shared by program and fact files.

use super::ast::Loc;
use super::diag::Diagnostic;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub loc: Loc,
}

pub const KEYWORDS: &[&str] = &[
    "rules", "class", "extends", "def", "defun", "if", "else", "for", "in", "while", "ifSome",
    "whileSome", "skip", "new", "infer", "not", "and", "or", "some", "each", "is", "True",
    "False", "None", "self", "a_gv", "isinstance", "isTuple", "len", "plus", "minus", "times",
    "lt", "select", "count", "sum", "max", "min",
];

const SYMBOLS: &[&str] = &[
    ":=", "<=", ">=", "(", ")", "{", "}", ",", ";", ":", ".", "|", "=", "_", "+", "-", "*", "<",
    ">",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let loc = Loc { line, col };
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            let n = text
                .parse::<i64>()
                .map_err(|_| Diagnostic::new("syntax", format!("integer literal out of range: {text}"), loc))?;
            out.push(Token { tok: Tok::Int(n), loc });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            let tok = if text == "_" {
                Tok::Sym("_")
            } else if let Some(k) = KEYWORDS.iter().find(|k| **k == text) {
                Tok::Kw(k)
            } else {
                Tok::Ident(text)
            };
            out.push(Token { tok, loc });
            continue;
        }
        if c == '\'' {
            bump!();
            let mut s = String::new();
            loop {
                if i >= chars.len() || chars[i] == '\n' {
                    return Err(Diagnostic::new("syntax", "unterminated string literal", loc));
                }
                match chars[i] {
                    '\'' => {
                        bump!();
                        break;
                    }
                    '\\' => {
                        bump!();
                        if i >= chars.len() {
                            return Err(Diagnostic::new("syntax", "unterminated string literal", loc));
                        }
                        let e = match chars[i] {
                            'n' => '\n',
                            't' => '\t',
                            '\\' => '\\',
                            '\'' => '\'',
                            other => {
                                return Err(Diagnostic::new(
                                    "syntax",
                                    format!("unknown escape \\{other}"),
                                    Loc { line, col },
                                ))
                            }
                        };
                        s.push(e);
                        bump!();
                    }
                    other => {
                        s.push(other);
                        bump!();
                    }
                }
            }
            out.push(Token { tok: Tok::Str(s), loc });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                for _ in 0..sym.len() {
                    bump!();
                }
                out.push(Token { tok: Tok::Sym(sym), loc });
            }
            None => {
                return Err(Diagnostic::new("syntax", format!("unexpected character '{c}'"), loc));
            }
        }
    }
    out.push(Token { tok: Tok::Eof, loc: Loc { line, col } });
    Ok(out)
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier '{s}'"),
            Tok::Int(n) => write!(f, "integer {n}"),
            Tok::Str(s) => write!(f, "string '{s}'"),
            Tok::Kw(k) => write!(f, "'{k}'"),
            Tok::Sym(s) => write!(f, "'{s}'"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_symbols_keywords_and_literals() {
        let toks = tokenize("x := plus(1, 'a\\'b') # c\n_ <= y").unwrap();
        let kinds: Vec<Tok> = toks.into_iter().map(|t| t.tok).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Ident("x".into()),
                Tok::Sym(":="),
                Tok::Kw("plus"),
                Tok::Sym("("),
                Tok::Int(1),
                Tok::Sym(","),
                Tok::Str("a'b".into()),
                Tok::Sym(")"),
                Tok::Sym("_"),
                Tok::Sym("<="),
                Tok::Ident("y".into()),
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn reports_position_of_bad_char() {
        let err = tokenize("x\n  $t1").unwrap_err();
        assert_eq!((err.loc.line, err.loc.col), (2, 3));
    }
}
