//! Tree-walking evaluator.
//!
//! An [`Interp`] runs inside exactly one process: it owns a mutable borrow of
//! that process's heap and termination guard, and reports every effect
//! (spawning, messaging, printing, sleeping) to a [`Host`]. Pure activations
//! (routines, DAG applies and anything they call) may not invoke methods or
//! perform effects; constructors run from a pure context may only assign
//! the fields of the object under construction.

pub mod builtins;
mod error;

use std::collections::BTreeMap;
use std::sync::Arc;

pub use error::{EvalResult, RuntimeError, RuntimeErrorKind};

use crate::dag::Dag;
use crate::object::{size, type_of, Heap, ObjId, Payload, ProcKind, ProcRef, StreamRef, Value};
use crate::syntax::{ClassDef, Expr, ExprKind, Literal, MemberDef, MemberKind, ProgramDef};
use crate::termination::{GuardFrame, TerminationGuard};

pub type DagTable = BTreeMap<String, Arc<Dag>>;

/// Nested activations allowed before evaluation gives up.
pub const DEFAULT_MAX_DEPTH: usize = 10_000;

/// One argument of a `react-to` request.
#[derive(Debug, Clone)]
pub enum RebindArg {
    Value(Payload),
    Stream(StreamRef),
}

impl RebindArg {
    /// Number of reactor sources this argument covers.
    pub fn width(&self) -> usize {
        match self {
            RebindArg::Value(_) => 1,
            RebindArg::Stream(s) => s.arity,
        }
    }
}

/// Receiver of every effect an evaluation performs.
pub trait Host {
    /// The process the evaluation runs in, if any.
    fn self_ref(&self) -> Option<ProcRef>;
    fn spawn_actor(&mut self, behaviour: &str, ctor: &str, args: Payload) -> ProcRef;
    fn spawn_reactor(&mut self, behaviour: &str) -> ProcRef;
    fn send(&mut self, target: &ProcRef, selector: &str, args: Payload);
    fn emit(&mut self, stream: &str, tuple: Payload);
    fn monitor(&mut self, stream: &StreamRef, selector: &str);
    fn react_to(&mut self, target: &ProcRef, args: Vec<RebindArg>);
    fn sleep(&mut self, ms: f64);
    fn print(&mut self, line: String);
    /// Seed for the next `Random` instance.
    fn next_seed(&mut self) -> u64;
    /// Diagnostic output (termination guard tracing).
    fn trace(&mut self, line: String);

    /// Emission count of `stream` and its last emitted tuple.
    fn cached(&self, _stream: &StreamRef) -> (u64, Option<Arc<Payload>>) {
        (0, None)
    }
    /// Subscribes the current process. `seen` is the emission count the
    /// subscriber already accounted for; anything newer is delivered as a
    /// seed publication.
    fn subscribe(&mut self, _stream: &StreamRef, _tag: SubTag, _seen: u64) {}
    fn unsubscribe(&mut self, _stream: &StreamRef, _tag: SubTag) {}
}

/// What a subscription feeds at the subscriber.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SubTag {
    /// An actor's monitor: each publication invokes `selector`.
    Monitor(Arc<str>),
    /// A reactor source group starting at explicit source `first`.
    Sources { first: usize, generation: u64 },
    /// The implicit source paired with qualify node `qualify`.
    Implicit { qualify: usize, generation: u64 },
}

/// Host for evaluation outside any process, such as constant folding. Only
/// pure code runs here, so the effect hooks are never reached.
#[derive(Debug, Default)]
pub struct NullHost {
    pub traced: Vec<String>,
}

impl Host for NullHost {
    fn self_ref(&self) -> Option<ProcRef> {
        None
    }
    fn spawn_actor(&mut self, _: &str, _: &str, _: Payload) -> ProcRef {
        unreachable!("effects are rejected before reaching the null host")
    }
    fn spawn_reactor(&mut self, _: &str) -> ProcRef {
        unreachable!("effects are rejected before reaching the null host")
    }
    fn send(&mut self, _: &ProcRef, _: &str, _: Payload) {}
    fn emit(&mut self, _: &str, _: Payload) {}
    fn monitor(&mut self, _: &StreamRef, _: &str) {}
    fn react_to(&mut self, _: &ProcRef, _: Vec<RebindArg>) {}
    fn sleep(&mut self, _: f64) {}
    fn print(&mut self, _: String) {}
    fn next_seed(&mut self) -> u64 {
        0
    }
    fn trace(&mut self, line: String) {
        self.traced.push(line);
    }
}

struct Activation<'p> {
    class: Option<&'p str>,
    selector: &'p str,
    this: Option<ObjId>,
    locals: Vec<(&'p str, Value)>,
    params: usize,
    pure: bool,
}

impl<'p> Activation<'p> {
    fn describe(&self) -> String {
        match self.class {
            Some(c) => format!("{c}.{}", self.selector),
            None => self.selector.to_string(),
        }
    }
}

pub struct Interp<'p, 'a> {
    pub(crate) def: &'p ProgramDef,
    pub(crate) dags: &'p DagTable,
    pub(crate) heap: &'a mut Heap,
    pub(crate) host: &'a mut dyn Host,
    guard: &'a mut TerminationGuard,
    depth: usize,
    pub max_depth: usize,
}

fn kind_err<T>(kind: RuntimeErrorKind) -> EvalResult<T> {
    Err(RuntimeError::new(kind))
}

impl<'p, 'a> Interp<'p, 'a> {
    pub fn new(
        def: &'p ProgramDef,
        dags: &'p DagTable,
        heap: &'a mut Heap,
        host: &'a mut dyn Host,
        guard: &'a mut TerminationGuard,
    ) -> Self {
        Interp {
            def,
            dags,
            heap,
            host,
            guard,
            depth: 0,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }

    pub fn heap(&mut self) -> &mut Heap {
        self.heap
    }

    // ---- process entry points -------------------------------------------

    /// Runs constructor `ctor` of `behaviour` on the actor state `this`.
    pub fn run_actor_constructor(
        &mut self,
        behaviour: &'p ClassDef,
        this: ObjId,
        ctor: &str,
        args: Vec<Value>,
    ) -> EvalResult<Value> {
        let member = behaviour
            .members_of(MemberKind::Constructor)
            .find(|m| m.selector == ctor)
            .ok_or_else(|| {
                RuntimeError::new(RuntimeErrorKind::UnknownConstructor {
                    class: behaviour.name.clone(),
                    ctor: ctor.to_string(),
                })
            })?;
        self.call_member(&behaviour.name, member, Some(this), args, false)
    }

    /// Handles an ordinary message: a method or routine of `behaviour`.
    pub fn run_actor_message(
        &mut self,
        behaviour: &'p ClassDef,
        this: ObjId,
        selector: &str,
        args: Vec<Value>,
    ) -> EvalResult<Value> {
        match behaviour.member(selector) {
            Some(m) if m.kind != MemberKind::Constructor => {
                self.call_member(&behaviour.name, m, Some(this), args, false)
            }
            _ => kind_err(RuntimeErrorKind::UnknownSelector {
                type_name: behaviour.name.clone(),
                selector: selector.to_string(),
            }),
        }
    }

    /// Evaluates a free-standing body as a method without receiver, as if it
    /// were the body of an actor constructor without fields.
    pub fn run_body(&mut self, body: &'p [Expr]) -> EvalResult<Value> {
        let mut act = Activation {
            class: None,
            selector: "<body>",
            this: None,
            locals: Vec::new(),
            params: 0,
            pure: false,
        };
        self.eval_body(body, &mut act)
    }

    /// Evaluates a single pure expression (used for constant folding).
    pub fn eval_pure(&mut self, expr: &'p Expr) -> EvalResult<Value> {
        let mut act = Activation {
            class: None,
            selector: "<const>",
            this: None,
            locals: Vec::new(),
            params: 0,
            pure: true,
        };
        self.eval(expr, &mut act)
    }

    // ---- invocation --------------------------------------------------------

    /// Invokes `selector` on `receiver`. `pure` is the purity of the caller.
    pub fn invoke(&mut self, receiver: Value, selector: &str, args: Vec<Value>, pure: bool) -> EvalResult<Value> {
        if let Value::Instance(id) = &receiver {
            let class_name = self.heap.get(*id).class.clone();
            if let Some(class) = self.def.class(&class_name) {
                if let Some(m) = class.member(selector) {
                    if m.kind == MemberKind::Constructor {
                        return kind_err(RuntimeErrorKind::UnknownSelector {
                            type_name: class.name.clone(),
                            selector: selector.to_string(),
                        });
                    }
                    if pure && m.kind == MemberKind::Method {
                        return kind_err(RuntimeErrorKind::MethodFromPureContext {
                            class: class.name.clone(),
                            selector: selector.to_string(),
                        });
                    }
                    return self.call_member(&class.name, m, Some(*id), args, pure);
                }
            }
        }
        match builtins::builtin_kind(self, &receiver, selector) {
            Some(MemberKind::Method) if pure => kind_err(RuntimeErrorKind::MethodFromPureContext {
                class: type_of(self.heap, &receiver).to_string(),
                selector: selector.to_string(),
            }),
            Some(_) => builtins::call_builtin(self, &receiver, selector, &args),
            None => kind_err(RuntimeErrorKind::UnknownSelector {
                type_name: type_of(self.heap, &receiver).to_string(),
                selector: selector.to_string(),
            }),
        }
    }

    /// `(new class 'ctor args...)`; without a constructor name the fields are
    /// simply left `#undefined`.
    pub fn instantiate(&mut self, class: &str, ctor: Option<&str>, args: Vec<Value>, pure: bool) -> EvalResult<Value> {
        if class == builtins::RANDOM_CLASS {
            if let Some(c) = ctor {
                return kind_err(RuntimeErrorKind::UnknownConstructor {
                    class: class.to_string(),
                    ctor: c.to_string(),
                });
            }
            if !args.is_empty() {
                return kind_err(RuntimeErrorKind::Arity {
                    what: "new Random".into(),
                    expected: "0".into(),
                    got: args.len(),
                });
            }
            if pure {
                return kind_err(RuntimeErrorKind::EffectInPureContext("new Random".into()));
            }
            let seed = self.host.next_seed();
            return Ok(Value::Instance(self.heap.insert(builtins::new_random(seed))));
        }
        let def = self.def;
        let Some(cdef) = def.class(class) else {
            return kind_err(RuntimeErrorKind::UnknownClass(class.to_string()));
        };
        let member = match ctor {
            Some(c) => Some(
                cdef.members_of(MemberKind::Constructor)
                    .find(|m| m.selector == c)
                    .ok_or_else(|| {
                        RuntimeError::new(RuntimeErrorKind::UnknownConstructor {
                            class: class.to_string(),
                            ctor: c.to_string(),
                        })
                    })?,
            ),
            None if !args.is_empty() => {
                return kind_err(RuntimeErrorKind::Arity {
                    what: format!("new {class}"),
                    expected: "0".into(),
                    got: args.len(),
                })
            }
            None => None,
        };
        let id = self.heap.alloc(&cdef.name, &cdef.fields);
        if let Some(m) = member {
            self.call_member(&cdef.name, m, Some(id), args, pure)?;
        }
        Ok(Value::Instance(id))
    }

    fn call_member(
        &mut self,
        class: &'p str,
        member: &'p MemberDef,
        this: Option<ObjId>,
        args: Vec<Value>,
        caller_pure: bool,
    ) -> EvalResult<Value> {
        let describe = || format!("{class}.{}", member.selector);
        if args.len() != member.params.len() {
            return Err(RuntimeError::new(RuntimeErrorKind::Arity {
                what: describe(),
                expected: member.params.len().to_string(),
                got: args.len(),
            }));
        }
        if self.depth >= self.max_depth {
            return Err(RuntimeError::new(RuntimeErrorKind::DepthExceeded(self.depth)).in_member(describe));
        }
        debug_assert!(!(caller_pure && member.kind == MemberKind::Method));
        let guarded = member.kind == MemberKind::Routine;
        if guarded {
            let mut sizes = Vec::with_capacity(args.len() + 1);
            sizes.push(this.map_or(crate::object::SizeMeasure(0.0), |id| size(self.heap, &Value::Instance(id))));
            sizes.extend(args.iter().map(|a| size(self.heap, a)));
            let entered = self.guard.enter(GuardFrame::new(class, member.selector.as_str(), sizes));
            for line in self.guard.take_trace() {
                self.host.trace(line);
            }
            entered.map_err(|v| RuntimeError::from(v).in_member(describe))?;
        }
        let mut act = Activation {
            class: Some(class),
            selector: &member.selector,
            this,
            locals: member.params.iter().map(String::as_str).zip(args).collect(),
            params: member.params.len(),
            pure: caller_pure || guarded,
        };
        self.depth += 1;
        let result = self.eval_body(&member.body, &mut act);
        self.depth -= 1;
        if guarded {
            self.guard.exit();
        }
        result.map_err(|e| e.in_member(|| act.describe()))
    }

    // ---- expressions -------------------------------------------------------

    fn eval_body(&mut self, body: &'p [Expr], act: &mut Activation<'p>) -> EvalResult<Value> {
        let mut last = Value::Undefined;
        for e in body {
            last = self.eval(e, act)?;
        }
        Ok(last)
    }

    fn eval_args(&mut self, args: &'p [Expr], act: &mut Activation<'p>) -> EvalResult<Vec<Value>> {
        args.iter().map(|a| self.eval(a, act)).collect()
    }

    fn lookup(&self, name: &str, act: &Activation<'p>) -> Option<Value> {
        if let Some((_, v)) = act.locals.iter().rev().find(|(n, _)| *n == name) {
            return Some(v.clone());
        }
        let this = act.this?;
        self.heap.field(this, name).cloned()
    }

    fn require_effects(&self, form: &str, act: &Activation<'p>) -> EvalResult<()> {
        if act.pure {
            kind_err(RuntimeErrorKind::EffectInPureContext(form.to_string()))
        } else {
            Ok(())
        }
    }

    fn current_actor(&self, form: &'static str) -> EvalResult<ProcRef> {
        match self.host.self_ref() {
            Some(r) if r.kind == ProcKind::Actor => Ok(r),
            _ => kind_err(RuntimeErrorKind::NotInActor(form)),
        }
    }

    /// The stream `name` exported by the process `owner`.
    pub fn stream_ref(&self, owner: &ProcRef, name: &str) -> EvalResult<StreamRef> {
        let arity = match owner.kind {
            ProcKind::Actor => self
                .def
                .actor(&owner.behaviour)
                .and_then(|a| a.stream(name))
                .map(|s| s.arity),
            ProcKind::Reactor if name == "out" => self.dags.get(&*owner.behaviour).map(|d| d.sinks.len()),
            ProcKind::Reactor => None,
        };
        match arity {
            Some(arity) => Ok(StreamRef {
                owner: owner.clone(),
                name: name.into(),
                arity,
            }),
            None => kind_err(RuntimeErrorKind::UnknownStream {
                owner: owner.to_string(),
                stream: name.to_string(),
            }),
        }
    }

    /// Qualification of an arbitrary value.
    pub fn qualify(&self, owner: &Value, name: &str) -> EvalResult<StreamRef> {
        match owner.proc_ref() {
            Some(r) => self.stream_ref(r, name),
            None => kind_err(RuntimeErrorKind::Type {
                op: format!(".{name}"),
                expected: "an actor or reactor reference",
                got: type_of(self.heap, owner).to_string(),
            }),
        }
    }

    fn eval(&mut self, e: &'p Expr, act: &mut Activation<'p>) -> EvalResult<Value> {
        self.eval_kind(e, act).map_err(|err| err.at(e.pos))
    }

    fn eval_kind(&mut self, e: &'p Expr, act: &mut Activation<'p>) -> EvalResult<Value> {
        match &e.kind {
            ExprKind::Literal(lit) => Ok(match lit {
                Literal::Number(n) => Value::Number(*n),
                Literal::Str(s) => Value::str(s),
                Literal::Symbol(s) => Value::symbol(s),
                Literal::Bool(b) => Value::Bool(*b),
                Literal::Undefined => Value::Undefined,
                Literal::Pi => Value::Number(std::f64::consts::PI),
            }),
            ExprKind::Var(name) => self
                .lookup(name, act)
                .ok_or_else(|| RuntimeError::new(RuntimeErrorKind::Unbound(name.clone()))),
            ExprKind::SelfRef => match self.host.self_ref() {
                Some(r) if r.kind == ProcKind::Actor && !act.pure => Ok(Value::Actor(r)),
                _ => kind_err(RuntimeErrorKind::SelfOutsideActor),
            },
            ExprKind::Qualify { owner, stream } => {
                let v = self
                    .lookup(owner, act)
                    .ok_or_else(|| RuntimeError::new(RuntimeErrorKind::Unbound(owner.clone())))?;
                Ok(Value::Stream(self.qualify(&v, stream)?))
            }
            ExprKind::Def { name, value } => {
                if act.locals[..act.params].iter().any(|(n, _)| n == name) {
                    return kind_err(RuntimeErrorKind::DefShadowsParameter(name.clone()));
                }
                let v = self.eval(value, act)?;
                act.locals.push((name, v));
                Ok(Value::Undefined)
            }
            ExprKind::Set { name, value } => {
                let v = self.eval(value, act)?;
                if let Some((_, slot)) = act.locals.iter_mut().rev().find(|(n, _)| n == name) {
                    *slot = v;
                    return Ok(Value::Undefined);
                }
                match act.this {
                    Some(this) if self.heap.set_field(this, name, v) => Ok(Value::Undefined),
                    _ => kind_err(RuntimeErrorKind::SetUnbound(name.clone())),
                }
            }
            ExprKind::If { test, then, otherwise } => {
                if self.eval(test, act)?.is_truthy() {
                    self.eval(then, act)
                } else if let Some(e) = otherwise {
                    self.eval(e, act)
                } else {
                    Ok(Value::Undefined)
                }
            }
            ExprKind::Cond { arms, otherwise } => {
                for arm in arms {
                    let t = self.eval(&arm.test, act)?;
                    if t.is_truthy() {
                        if arm.body.is_empty() {
                            return Ok(t);
                        }
                        return self.scoped_body(&arm.body, act);
                    }
                }
                match otherwise {
                    Some(body) => self.scoped_body(body, act),
                    None => Ok(Value::Undefined),
                }
            }
            ExprKind::New { class, ctor, args } => {
                let args = self.eval_args(args, act)?;
                self.instantiate(class, ctor.as_deref(), args, act.pure)
            }
            ExprKind::Invoke { selector, receiver, args } => {
                let r = self.eval(receiver, act)?;
                let args = self.eval_args(args, act)?;
                self.invoke(r, selector, args, act.pure)
            }
            ExprKind::SpawnActor { behaviour, ctor, args } => {
                self.require_effects("spawn-actor", act)?;
                let args = self.eval_args(args, act)?;
                let Some(b) = self.def.actor(behaviour) else {
                    return kind_err(RuntimeErrorKind::UnknownBehaviour(behaviour.clone()));
                };
                let Some(m) = b.members_of(MemberKind::Constructor).find(|m| &m.selector == ctor) else {
                    return kind_err(RuntimeErrorKind::UnknownConstructor {
                        class: behaviour.clone(),
                        ctor: ctor.clone(),
                    });
                };
                if m.params.len() != args.len() {
                    return kind_err(RuntimeErrorKind::Arity {
                        what: format!("{behaviour}.{ctor}"),
                        expected: m.params.len().to_string(),
                        got: args.len(),
                    });
                }
                let payload = Payload::export(self.heap, &args);
                Ok(Value::Actor(self.host.spawn_actor(behaviour, ctor, payload)))
            }
            ExprKind::SpawnReactor { behaviour } => {
                self.require_effects("spawn-reactor", act)?;
                if !self.dags.contains_key(behaviour.as_str()) {
                    return kind_err(RuntimeErrorKind::UnknownBehaviour(behaviour.clone()));
                }
                Ok(Value::Reactor(self.host.spawn_reactor(behaviour)))
            }
            ExprKind::Send { target, selector, args } => {
                self.require_effects("send", act)?;
                let t = self.eval(target, act)?;
                let args = self.eval_args(args, act)?;
                match t {
                    Value::Actor(r) => {
                        let payload = Payload::export(self.heap, &args);
                        self.host.send(&r, selector, payload);
                        Ok(Value::Undefined)
                    }
                    Value::Reactor(r) => kind_err(RuntimeErrorKind::SendToReactor {
                        target: r.to_string(),
                        selector: selector.clone(),
                    }),
                    other => kind_err(RuntimeErrorKind::Type {
                        op: "send".into(),
                        expected: "an actor reference",
                        got: type_of(self.heap, &other).to_string(),
                    }),
                }
            }
            ExprKind::Emit { stream, args } => {
                self.require_effects("emit", act)?;
                let args = self.eval_args(args, act)?;
                let me = self.current_actor("emit")?;
                let s = self.stream_ref(&me, stream)?;
                if s.arity != args.len() {
                    return kind_err(RuntimeErrorKind::StreamArity {
                        stream: stream.clone(),
                        expected: s.arity,
                        got: args.len(),
                    });
                }
                let payload = Payload::export(self.heap, &args);
                self.host.emit(stream, payload);
                Ok(Value::Undefined)
            }
            ExprKind::Monitor { stream, selector } => {
                self.require_effects("monitor", act)?;
                let s = self.eval(stream, act)?;
                self.current_actor("monitor")?;
                match s {
                    Value::Stream(s) => {
                        self.host.monitor(&s, selector);
                        Ok(Value::Undefined)
                    }
                    other => kind_err(RuntimeErrorKind::Type {
                        op: "monitor".into(),
                        expected: "a stream",
                        got: type_of(self.heap, &other).to_string(),
                    }),
                }
            }
            ExprKind::ReactTo { target, args } => {
                self.require_effects("react-to", act)?;
                let t = self.eval(target, act)?;
                let args = self.eval_args(args, act)?;
                self.current_actor("react-to")?;
                let Value::Reactor(r) = t else {
                    return kind_err(RuntimeErrorKind::Type {
                        op: "react-to".into(),
                        expected: "a reactor reference",
                        got: type_of(self.heap, &t).to_string(),
                    });
                };
                let rebind: Vec<RebindArg> = args
                    .iter()
                    .map(|a| match a {
                        Value::Stream(s) => RebindArg::Stream(s.clone()),
                        v => RebindArg::Value(Payload::export(self.heap, std::slice::from_ref(v))),
                    })
                    .collect();
                let expected = self
                    .dags
                    .get(&*r.behaviour)
                    .map_or(0, |d| d.explicit_sources);
                let got: usize = rebind.iter().map(RebindArg::width).sum();
                if got != expected {
                    return kind_err(RuntimeErrorKind::ReactToArity {
                        reactor: r.to_string(),
                        expected,
                        got,
                    });
                }
                self.host.react_to(&r, rebind);
                Ok(Value::Undefined)
            }
            ExprKind::Tick { behaviour, .. } => kind_err(RuntimeErrorKind::Invalid(format!(
                "tick {behaviour} can only be compiled, not evaluated"
            ))),
        }
    }

    fn scoped_body(&mut self, body: &'p [Expr], act: &mut Activation<'p>) -> EvalResult<Value> {
        let mark = act.locals.len();
        let r = self.eval_body(body, act);
        act.locals.truncate(mark);
        r
    }
}
