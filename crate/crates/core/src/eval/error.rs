use std::fmt;

use crate::syntax::Pos;
use crate::termination::TerminationViolation;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RuntimeErrorKind {
    #[error("unbound identifier `{0}`")]
    Unbound(String),
    #[error("set! of unbound identifier `{0}`")]
    SetUnbound(String),
    #[error("def of `{0}` would shadow a parameter")]
    DefShadowsParameter(String),
    #[error("#self used outside an actor context")]
    SelfOutsideActor,
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("unknown constructor `{ctor}` of `{class}`")]
    UnknownConstructor { class: String, ctor: String },
    #[error("`{type_name}` does not understand `{selector}`")]
    UnknownSelector { type_name: String, selector: String },
    #[error("`{what}` expects {expected} argument(s), got {got}")]
    Arity {
        what: String,
        expected: String,
        got: usize,
    },
    #[error("method `{class}.{selector}` invoked from a pure context")]
    MethodFromPureContext { class: String, selector: String },
    #[error("`{0}` performed in a pure context")]
    EffectInPureContext(String),
    #[error(transparent)]
    Termination(#[from] TerminationViolation),
    #[error("`{op}` expects {expected}, got {got}")]
    Type {
        op: String,
        expected: &'static str,
        got: String,
    },
    #[error("unknown behaviour `{0}`")]
    UnknownBehaviour(String),
    #[error("`{owner}` has no stream named `{stream}`")]
    UnknownStream { owner: String, stream: String },
    #[error("stream `{stream}` has arity {expected}, emitted {got} value(s)")]
    StreamArity {
        stream: String,
        expected: usize,
        got: usize,
    },
    #[error("react-to covers {got} source(s) but `{reactor}` has {expected}")]
    ReactToArity {
        reactor: String,
        expected: usize,
        got: usize,
    },
    #[error("reactors do not accept messages (send `{selector}` to {target})")]
    SendToReactor { target: String, selector: String },
    #[error("`{0}` may only be used by an actor")]
    NotInActor(&'static str),
    #[error("qualified stream `{0}` must have arity 1 inside a reactor")]
    QualifyArity(String),
    #[error("recursion too deep ({0} nested calls)")]
    DepthExceeded(usize),
    #[error("{0}")]
    Invalid(String),
}

/// An evaluation failure. `pos` is the innermost expression that failed and
/// `member` the innermost member (`Class.selector`) being executed.
#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeError {
    pub kind: RuntimeErrorKind,
    pub pos: Option<Pos>,
    pub member: Option<String>,
}

impl RuntimeError {
    pub fn new(kind: RuntimeErrorKind) -> Self {
        RuntimeError {
            kind,
            pos: None,
            member: None,
        }
    }

    pub fn at(mut self, pos: Pos) -> Self {
        self.pos.get_or_insert(pos);
        self
    }

    pub fn in_member(mut self, member: impl FnOnce() -> String) -> Self {
        if self.member.is_none() {
            self.member = Some(member());
        }
        self
    }

    pub fn is_termination(&self) -> bool {
        matches!(self.kind, RuntimeErrorKind::Termination(_))
    }

    pub fn is_method_from_pure(&self) -> bool {
        matches!(self.kind, RuntimeErrorKind::MethodFromPureContext { .. })
    }
}

impl From<RuntimeErrorKind> for RuntimeError {
    fn from(kind: RuntimeErrorKind) -> Self {
        RuntimeError::new(kind)
    }
}

impl From<TerminationViolation> for RuntimeError {
    fn from(v: TerminationViolation) -> Self {
        RuntimeError::new(v.into())
    }
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(member) = &self.member {
            write!(f, "in {member}")?;
            if let Some(pos) = self.pos {
                write!(f, " at {pos}")?;
            }
            f.write_str(": ")?;
        } else if let Some(pos) = self.pos {
            write!(f, "at {pos}: ")?;
        }
        write!(f, "{}", self.kind)
    }
}

impl std::error::Error for RuntimeError {}

pub type EvalResult<T> = Result<T, RuntimeError>;
