//! Runtime values, per-process heaps and the value-level operations shared by
//! the evaluator, the messaging layer and the termination guard.
//!
//! Every process owns a [`Heap`]. Instances live in exactly one heap and are
//! referred to by [`ObjId`]; values cross process boundaries only as a
//! [`Payload`], which is a self-contained deep copy.

mod heap;
mod ops;

use std::fmt;
use std::sync::Arc;

pub use heap::{Heap, Native, ObjId, Object, Payload};
pub use ops::{deep_copy, display, equals, equals_across, ref_equals, size, type_of, SizeMeasure};

/// Identity of a process. `origin` is the spawn-order index of the process
/// that created it and `seq` that creator's running spawn count, so ids can be
/// handed out during a turn without global coordination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProcId {
    pub origin: u32,
    pub seq: u32,
}

impl ProcId {
    pub const MAIN: ProcId = ProcId { origin: 0, seq: 0 };
}

impl fmt::Display for ProcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.origin, self.seq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProcKind {
    Actor,
    Reactor,
}

/// A reference to an actor or reactor, carrying its behaviour name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProcRef {
    pub id: ProcId,
    pub kind: ProcKind,
    pub behaviour: Arc<str>,
}

impl fmt::Display for ProcRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.behaviour, self.id)
    }
}

/// The value of a qualification `owner.name`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StreamRef {
    pub owner: ProcRef,
    pub name: Arc<str>,
    pub arity: usize,
}

impl fmt::Display for StreamRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.owner, self.name)
    }
}

#[derive(Debug, Clone)]
pub enum Value {
    Bool(bool),
    Number(f64),
    Str(Arc<str>),
    Symbol(Arc<str>),
    Undefined,
    Instance(ObjId),
    Actor(ProcRef),
    Reactor(ProcRef),
    Stream(StreamRef),
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Arc::from(s))
    }

    pub fn symbol(s: &str) -> Value {
        Value::Symbol(Arc::from(s))
    }

    /// Everything is true except `#false` and `#undefined`.
    pub fn is_truthy(&self) -> bool {
        !matches!(self, Value::Bool(false) | Value::Undefined)
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn proc_ref(&self) -> Option<&ProcRef> {
        match self {
            Value::Actor(r) | Value::Reactor(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_native(&self) -> bool {
        matches!(
            self,
            Value::Bool(_) | Value::Number(_) | Value::Str(_) | Value::Symbol(_) | Value::Undefined
        )
    }
}

impl From<f64> for Value {
    fn from(n: f64) -> Self {
        Value::Number(n)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}
