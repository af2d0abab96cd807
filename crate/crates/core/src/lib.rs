//! Boolean functional synthesis from relational specifications.
//!
//! Given a spec φ(X, Y) as a Boolean DAG, the engine derives one function
//! per output variable such that φ(X, F(X)) holds whenever φ is satisfiable
//! for that X. Synthesis walks the DAG bottom-up, composing refinement
//! annotations per node (exact for OR, one-sided for AND, template-based for
//! general operators) and tightening them to exactness with SAT-guided
//! counterexample refinement. A manager/worker pool schedules independent
//! subtrees in parallel; a final SAT check certifies the result.

pub mod aiger;
pub mod bench;
pub mod cegar;
pub mod compose;
pub mod formula;
pub mod oracle;
pub mod pipeline;
pub mod sat;
pub mod schedule;
pub mod template;

pub use formula::{FormulaRef, Manager, NodeKind, OpKind, Var, VarTable};
