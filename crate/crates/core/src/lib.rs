//! Interpreter for an imperative object language whose programs embed Datalog rule sets.
//!
//! Derived predicates of rule sets are kept consistent with their base predicates
//! at every heap mutation. The pipeline is [`syntax`] → [`desugar`] → [`analysis`]
//! → [`runtime`], with [`rules`] and [`engine`] providing rule analysis and
//! fixpoint evaluation.

pub mod syntax;
pub mod value;
pub mod engine;
pub mod rules;
pub mod desugar;
pub mod runtime;
pub mod analysis;
pub mod bench;
pub mod cli;
