//! Interpreter and runtime for a small actor-reactor language.
//!
//! Programs are written in an S-expression syntax and consist of classes,
//! actor behaviours and reactor behaviours. Actors are imperative processes
//! with FIFO mailboxes; reactors host a compiled dependency graph that is
//! updated glitch-free whenever one of its sources changes. The two only
//! communicate through arity-typed data streams.
//!
//! The pipeline is:
//!
//! 1. [`syntax`] tokenizes and parses source text and rejects effectful
//!    forms in routines and reactor bodies.
//! 2. [`program::load`] builds class tables and compiles every reactor
//!    behaviour into a [`dag::Dag`].
//! 3. [`runtime::Runtime`] spawns `Main`, runs its `start` constructor and
//!    drives all processes until their mailboxes drain.

pub mod dag;
pub mod deployment;
pub mod eval;
pub mod object;
pub mod program;
pub mod runtime;
pub mod syntax;
pub mod termination;

pub use program::{load, LoadError, Program};
pub use runtime::{RunError, RunSummary, Runtime, RuntimeOptions, SchedulerMode};
