//! Entailment checking for separation logic with inductive definitions
//! under weak (fixpoint) semantics.
//!
//! A query is normalised, encoded into first-order logic and handed to an
//! SMT solver. Unsatisfiable obligations prove the entailment for every
//! fixpoint model. Counter-models that are infinite are searched for as
//! symbolic structures over Presburger arithmetic and certified by model
//! checking.

pub mod encode;
pub mod foldunfold;
pub mod frontend;
pub mod lia;
pub mod normalize;
pub mod pipeline;
pub mod rogue;
pub mod semantics;
pub mod sexp;
pub mod solver;
pub mod sl;
pub mod symbolic;

pub use frontend::{parse_file, parse_problem, print_problem, Diagnostic};
pub use sl::{Formula, PredDef, Problem, Sid, Sort, Symbol, Term, Vocabulary};
