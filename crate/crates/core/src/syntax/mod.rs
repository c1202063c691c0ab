//! Surface syntax: lexing, parsing, well-formedness checks, fact files and printing.

pub mod ast;
pub mod check;
pub mod diag;
pub mod facts;
pub mod lexer;
mod parser;
pub mod printer;

pub use ast::*;
pub use diag::{render, Diagnostic};
pub use facts::parse_facts;
pub use printer::print_program;

/// Parses a program and runs the well-formedness checks.
pub fn parse_program(src: &str) -> Result<Program, Vec<Diagnostic>> {
    let mut p = parser::Parser::new(src).map_err(|d| vec![d])?;
    let prog = p.program().map_err(|d| vec![d])?;
    let diags = check::check_program(&prog);
    if diags.is_empty() {
        Ok(prog)
    } else {
        Err(diags)
    }
}

/// Parses a program without the well-formedness checks.
pub fn parse_unchecked(src: &str) -> Result<Program, Diagnostic> {
    parser::Parser::new(src)?.program()
}
