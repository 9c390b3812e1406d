use std::collections::VecDeque;
use std::sync::Arc;

use crate::deployment::{Deployment, PropagationReport};
use crate::eval::{Host, Interp, RebindArg, RuntimeError, RuntimeErrorKind, SubTag};
use crate::object::{display, Heap, ObjId, Payload, ProcId, ProcKind, ProcRef, StreamRef};
use crate::program::Program;
use crate::termination::TerminationGuard;

use super::registry::Registry;
use super::{PropagationRecord, RunError, TurnRecord};

#[derive(Debug, Clone)]
pub(crate) enum Message {
    Construct { ctor: Arc<str>, args: Payload },
    Invoke { selector: Arc<str>, args: Payload },
    Publication {
        stream: StreamRef,
        tag: SubTag,
        tuple: Arc<Payload>,
    },
    Rebind { args: Vec<RebindArg> },
}

impl Message {
    fn label(&self) -> String {
        match self {
            Message::Construct { ctor, .. } => format!("constructor {ctor}"),
            Message::Invoke { selector, .. } => format!("message {selector}"),
            Message::Publication {
                stream,
                tag: SubTag::Monitor(sel),
                ..
            } => format!("publication from {stream} for {sel}"),
            Message::Publication { stream, .. } => format!("publication from {stream}"),
            Message::Rebind { .. } => "react-to".into(),
        }
    }
}

#[derive(Debug)]
struct Envelope {
    ready_at: f64,
    msg: Message,
}

#[derive(Debug)]
enum Body {
    Actor { state: ObjId },
    Reactor(Box<Deployment>),
}

/// An effect produced during a turn, stamped with the sender's local time.
#[derive(Debug)]
pub(crate) struct Stamped {
    pub at: f64,
    pub effect: Effect,
}

#[derive(Debug)]
pub(crate) enum Effect {
    Spawn {
        me: ProcRef,
        ctor: Option<(Arc<str>, Payload)>,
    },
    Deliver {
        target: ProcId,
        msg: Message,
    },
    Emit {
        stream: StreamRef,
        tuple: Payload,
    },
    Subscribe {
        stream: StreamRef,
        subscriber: ProcId,
        tag: SubTag,
        seen: u64,
    },
    Unsubscribe {
        stream: StreamRef,
        subscriber: ProcId,
        tag: SubTag,
    },
    Print(String),
    Trace(String),
}

/// Read-only context shared by every turn of a scheduling step.
pub(crate) struct TurnEnv<'p> {
    pub program: &'p Program,
    pub registry: &'p Registry,
    pub now: f64,
    pub seed: u64,
    pub trace_propagation: bool,
    pub record: bool,
}

pub(crate) struct TurnOutcome {
    pub effects: Vec<Stamped>,
    pub error: Option<RunError>,
    pub record: Option<TurnRecord>,
    pub stale: bool,
}

#[derive(Debug)]
pub(crate) struct Process {
    pub me: ProcRef,
    pub index: usize,
    heap: Heap,
    guard: TerminationGuard,
    body: Body,
    mailbox: VecDeque<Envelope>,
    wake_at: f64,
    children: u32,
    seeds: u64,
}

impl Process {
    pub fn actor(program: &Program, me: ProcRef, index: usize, trace_sct: bool) -> Self {
        let def = program.def.actor(&me.behaviour).expect("spawned behaviour exists");
        let mut heap = Heap::new();
        let state = heap.alloc(&def.name, &def.fields);
        Self::with_body(me, index, heap, Body::Actor { state }, trace_sct)
    }

    pub fn reactor(program: &Program, me: ProcRef, index: usize, trace_sct: bool) -> Self {
        let dag = program.dags[&*me.behaviour].clone();
        let mut heap = Heap::new();
        let deployment = Deployment::new(dag, &mut heap);
        Self::with_body(me, index, heap, Body::Reactor(Box::new(deployment)), trace_sct)
    }

    fn with_body(me: ProcRef, index: usize, heap: Heap, body: Body, trace_sct: bool) -> Self {
        // Main's own id has seq 0, so its children start at 1.
        let children = u32::from(me.id == ProcId::MAIN);
        Process {
            me,
            index,
            heap,
            guard: TerminationGuard::new(trace_sct),
            body,
            mailbox: VecDeque::new(),
            wake_at: 0.0,
            children,
            seeds: 0,
        }
    }

    /// Inserts after every message that is ready no later than `ready_at`.
    pub fn enqueue(&mut self, ready_at: f64, msg: Message) {
        let pos = self
            .mailbox
            .iter()
            .position(|e| e.ready_at > ready_at)
            .unwrap_or(self.mailbox.len());
        self.mailbox.insert(pos, Envelope { ready_at, msg });
    }

    pub fn runnable(&self, now: f64) -> bool {
        self.wake_at <= now && self.mailbox.front().is_some_and(|e| e.ready_at <= now)
    }

    /// Earliest time this process could run, if it has mail.
    pub fn next_event(&self) -> Option<f64> {
        self.mailbox.front().map(|e| e.ready_at.max(self.wake_at))
    }

    /// Processes the front message.
    pub fn run_turn(&mut self, env: &TurnEnv<'_>) -> TurnOutcome {
        let msg = self.mailbox.pop_front().expect("runnable process has mail").msg;
        let label = msg.label();
        let Process {
            me,
            index,
            heap,
            guard,
            body,
            wake_at,
            children,
            seeds,
            ..
        } = self;
        let mut ctx = TurnCtx {
            me,
            index: *index,
            env,
            slept: 0.0,
            effects: Vec::new(),
            children,
            seeds,
        };
        let mut stale = false;
        let mut publication = None;
        let mut report: Option<PropagationReport> = None;

        let result: Result<(), RuntimeError> = match body {
            Body::Actor { state } => {
                let def = env.program.def.actor(&me.behaviour).expect("spawned behaviour exists");
                let state = *state;
                match msg {
                    Message::Construct { ctor, args } => {
                        let args = args.import(heap);
                        let mut interp = Interp::new(&env.program.def, &env.program.dags, heap, &mut ctx, guard);
                        interp.run_actor_constructor(def, state, &ctor, args).map(drop)
                    }
                    Message::Invoke { selector, args } => {
                        let args = args.import(heap);
                        let mut interp = Interp::new(&env.program.def, &env.program.dags, heap, &mut ctx, guard);
                        interp.run_actor_message(def, state, &selector, args).map(drop)
                    }
                    Message::Publication {
                        stream,
                        tag: SubTag::Monitor(selector),
                        tuple,
                    } => {
                        publication = Some(stream);
                        let args = tuple.import(heap);
                        let mut interp = Interp::new(&env.program.def, &env.program.dags, heap, &mut ctx, guard);
                        interp.run_actor_message(def, state, &selector, args).map(drop)
                    }
                    Message::Publication { stream, .. } => {
                        publication = Some(stream);
                        stale = true;
                        Ok(())
                    }
                    Message::Rebind { .. } => Err(RuntimeError::new(RuntimeErrorKind::Invalid(
                        "react-to delivered to an actor".into(),
                    ))),
                }
            }
            Body::Reactor(deployment) => {
                let mut interp = Interp::new(&env.program.def, &env.program.dags, heap, &mut ctx, guard);
                match msg {
                    Message::Rebind { args } => deployment.rebind(&mut interp, args).map(|r| {
                        report = Some(r);
                    }),
                    Message::Publication { stream, tag, tuple } => {
                        publication = Some(stream);
                        deployment.publication(&mut interp, &tag, &tuple).map(|r| match r {
                            Some(r) => report = Some(r),
                            None => stale = true,
                        })
                    }
                    Message::Construct { .. } | Message::Invoke { .. } => Err(RuntimeError::new(
                        RuntimeErrorKind::Invalid(format!("{label} delivered to a reactor")),
                    )),
                }
            }
        };

        if env.trace_propagation && me.kind == ProcKind::Reactor {
            let line = match (&report, &publication) {
                (Some(r), _) => {
                    let emitted = match &r.emitted {
                        Some(t) => {
                            let shown: Vec<String> = t.iter().map(|v| display(heap, v)).collect();
                            format!("emit ({})", shown.join(" "))
                        }
                        None => "(no emission)".into(),
                    };
                    format!(
                        "propagation {me} changed [{}] recomputed [{}] {emitted}",
                        join(&r.changed_sources),
                        join(&r.recomputed)
                    )
                }
                (None, Some(s)) if stale => format!("propagation {me} dropped stale publication from {s}"),
                _ => format!("propagation {me} aborted"),
            };
            ctx.effects.push(Stamped {
                at: env.now + ctx.slept,
                effect: Effect::Trace(line),
            });
        }

        *wake_at = env.now + ctx.slept;
        let record = env.record.then(|| TurnRecord {
            time: env.now,
            process: me.clone(),
            message: label.clone(),
            publication: publication.clone(),
            stale,
            propagation: report.as_ref().map(|r| PropagationRecord {
                changed_sources: r.changed_sources.clone(),
                recomputed: r.recomputed.clone(),
                emitted: r.emitted.as_ref().map(|t| Payload::export(heap, t)),
            }),
        });
        TurnOutcome {
            effects: ctx.effects,
            error: result.err().map(|error| RunError {
                process: me.to_string(),
                context: label,
                error,
            }),
            record,
            stale,
        }
    }
}

fn join(ids: &[usize]) -> String {
    ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

/// The [`Host`] seen by the evaluator during one turn. Effects are buffered
/// and applied by the scheduler once the turn is over.
struct TurnCtx<'t, 'p> {
    me: &'t ProcRef,
    index: usize,
    env: &'t TurnEnv<'p>,
    slept: f64,
    effects: Vec<Stamped>,
    children: &'t mut u32,
    seeds: &'t mut u64,
}

impl TurnCtx<'_, '_> {
    fn push(&mut self, effect: Effect) {
        self.effects.push(Stamped {
            at: self.env.now + self.slept,
            effect,
        });
    }

    fn fresh(&mut self, behaviour: &str, kind: ProcKind) -> ProcRef {
        let id = ProcId {
            origin: self.index as u32,
            seq: *self.children,
        };
        *self.children += 1;
        ProcRef {
            id,
            kind,
            behaviour: behaviour.into(),
        }
    }
}

impl Host for TurnCtx<'_, '_> {
    fn self_ref(&self) -> Option<ProcRef> {
        (self.me.kind == ProcKind::Actor).then(|| self.me.clone())
    }

    fn spawn_actor(&mut self, behaviour: &str, ctor: &str, args: Payload) -> ProcRef {
        let me = self.fresh(behaviour, ProcKind::Actor);
        self.push(Effect::Spawn {
            me: me.clone(),
            ctor: Some((ctor.into(), args)),
        });
        me
    }

    fn spawn_reactor(&mut self, behaviour: &str) -> ProcRef {
        let me = self.fresh(behaviour, ProcKind::Reactor);
        self.push(Effect::Spawn { me: me.clone(), ctor: None });
        me
    }

    fn send(&mut self, target: &ProcRef, selector: &str, args: Payload) {
        self.push(Effect::Deliver {
            target: target.id,
            msg: Message::Invoke {
                selector: selector.into(),
                args,
            },
        });
    }

    fn emit(&mut self, stream: &str, tuple: Payload) {
        let stream = StreamRef {
            owner: self.me.clone(),
            name: stream.into(),
            arity: tuple.len(),
        };
        self.push(Effect::Emit { stream, tuple });
    }

    fn monitor(&mut self, stream: &StreamRef, selector: &str) {
        let subscriber = self.me.id;
        self.push(Effect::Subscribe {
            stream: stream.clone(),
            subscriber,
            tag: SubTag::Monitor(selector.into()),
            seen: 0,
        });
    }

    fn react_to(&mut self, target: &ProcRef, args: Vec<RebindArg>) {
        self.push(Effect::Deliver {
            target: target.id,
            msg: Message::Rebind { args },
        });
    }

    fn sleep(&mut self, ms: f64) {
        if ms > 0.0 {
            self.slept += ms;
        }
    }

    fn print(&mut self, line: String) {
        self.push(Effect::Print(line));
    }

    fn next_seed(&mut self) -> u64 {
        let n = *self.seeds;
        *self.seeds += 1;
        let id = (u64::from(self.me.id.origin) << 32) | u64::from(self.me.id.seq);
        self.env.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ id.rotate_left(17) ^ n.wrapping_mul(0xD1B5_4A32_D192_ED03)
    }

    fn trace(&mut self, line: String) {
        self.push(Effect::Trace(line));
    }

    fn cached(&self, stream: &StreamRef) -> (u64, Option<Arc<Payload>>) {
        self.env.registry.cached(stream)
    }

    fn subscribe(&mut self, stream: &StreamRef, tag: SubTag, seen: u64) {
        let subscriber = self.me.id;
        self.push(Effect::Subscribe {
            stream: stream.clone(),
            subscriber,
            tag,
            seen,
        });
    }

    fn unsubscribe(&mut self, stream: &StreamRef, tag: SubTag) {
        let subscriber = self.me.id;
        self.push(Effect::Unsubscribe {
            stream: stream.clone(),
            subscriber,
            tag,
        });
    }
}
