//! Process scheduling: mailboxes, stream registry and the two schedulers.
//!
//! Every turn runs against a read-only snapshot of the stream registry and
//! buffers its effects; the scheduler applies them afterwards in a fixed
//! order. The deterministic scheduler runs one turn at a time in round-robin
//! spawn order. The concurrent scheduler runs every runnable process for one
//! turn in parallel and then applies the results in spawn order. Both use
//! virtual time for `sleep`.

mod process;
mod registry;

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use thiserror::Error;

use crate::dag::NodeId;
use crate::eval::RuntimeError;
use crate::object::{Payload, ProcId, ProcKind, ProcRef, StreamRef};
use crate::program::Program;

use process::{Effect, Message, Process, Stamped, TurnEnv, TurnOutcome};
use registry::Registry;

/// Stack size for the threads that run turns. Evaluation is recursive.
pub const TURN_STACK_SIZE: usize = 256 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchedulerMode {
    #[default]
    Deterministic,
    Concurrent,
}

impl std::str::FromStr for SchedulerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "deterministic" => Ok(SchedulerMode::Deterministic),
            "concurrent" => Ok(SchedulerMode::Concurrent),
            other => Err(format!("unknown scheduler `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RuntimeOptions {
    pub scheduler: SchedulerMode,
    /// Seed for every `Random` instance; drawn from the OS when absent.
    pub seed: Option<u64>,
    /// Upper bound on processed turns; 0 means unbounded.
    pub max_turns: u64,
    pub trace_propagation: bool,
    pub trace_sct: bool,
    /// Collect output in the summary instead of writing it.
    pub capture: bool,
    /// Keep a [`TurnRecord`] per turn.
    pub record: bool,
}

#[derive(Debug, Clone, Error)]
#[error("{process} failed handling {context}: {error}")]
pub struct RunError {
    pub process: String,
    pub context: String,
    pub error: RuntimeError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Every mailbox drained.
    Quiescent,
    TurnLimit,
    Error,
}

#[derive(Debug, Clone)]
pub struct PropagationRecord {
    pub changed_sources: Vec<usize>,
    pub recomputed: Vec<NodeId>,
    pub emitted: Option<Payload>,
}

#[derive(Debug, Clone)]
pub struct TurnRecord {
    pub time: f64,
    pub process: ProcRef,
    pub message: String,
    /// The stream a publication came from.
    pub publication: Option<StreamRef>,
    /// The publication belonged to a replaced subscription and was dropped.
    pub stale: bool,
    pub propagation: Option<PropagationRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunStats {
    pub turns: u64,
    pub processes: usize,
    pub emissions: u64,
    pub publications: u64,
    pub stale_drops: u64,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub stop: StopReason,
    pub error: Option<RunError>,
    pub stats: RunStats,
    pub virtual_time: f64,
    /// Program output lines, when captured.
    pub stdout: Vec<String>,
    /// Trace lines, when captured.
    pub stderr: Vec<String>,
    pub records: Vec<TurnRecord>,
}

impl RunSummary {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

impl fmt::Display for RunStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} turns, {} processes, {} emissions, {} publications, {} stale",
            self.turns, self.processes, self.emissions, self.publications, self.stale_drops
        )
    }
}

pub struct Runtime<'p> {
    program: &'p Program,
    options: RuntimeOptions,
}

impl<'p> Runtime<'p> {
    pub fn new(program: &'p Program, options: RuntimeOptions) -> Self {
        Runtime { program, options }
    }

    /// Spawns `Main`, sends it `start` and schedules until quiescence, the
    /// turn limit or the first error.
    pub fn run(self) -> RunSummary {
        let seed = self.options.seed.unwrap_or_else(rand::random);
        let world = World::new(self.program, self.options, seed);
        std::thread::scope(|s| {
            std::thread::Builder::new()
                .name("arlang-main".into())
                .stack_size(TURN_STACK_SIZE)
                .spawn_scoped(s, move || world.run())
                .expect("spawn scheduler thread")
                .join()
                .unwrap_or_else(|p| std::panic::resume_unwind(p))
        })
    }
}

struct World<'p> {
    program: &'p Program,
    options: RuntimeOptions,
    seed: u64,
    procs: Vec<Process>,
    index: HashMap<ProcId, usize>,
    registry: Registry,
    now: f64,
    stats: RunStats,
    stdout: Vec<String>,
    stderr: Vec<String>,
    records: Vec<TurnRecord>,
}

impl<'p> World<'p> {
    fn new(program: &'p Program, options: RuntimeOptions, seed: u64) -> Self {
        World {
            program,
            options,
            seed,
            procs: Vec::new(),
            index: HashMap::new(),
            registry: Registry::default(),
            now: 0.0,
            stats: RunStats::default(),
            stdout: Vec::new(),
            stderr: Vec::new(),
            records: Vec::new(),
        }
    }

    fn run(mut self) -> RunSummary {
        let main = ProcRef {
            id: ProcId::MAIN,
            kind: ProcKind::Actor,
            behaviour: "Main".into(),
        };
        self.apply(vec![Stamped {
            at: 0.0,
            effect: Effect::Spawn {
                me: main,
                ctor: Some(("start".into(), Payload::export(&crate::object::Heap::new(), &[]))),
            },
        }]);
        let (stop, error) = match self.options.scheduler {
            SchedulerMode::Deterministic => self.run_deterministic(),
            SchedulerMode::Concurrent => self.run_concurrent(),
        };
        self.stats.processes = self.procs.len();
        RunSummary {
            stop,
            error,
            stats: self.stats,
            virtual_time: self.now,
            stdout: self.stdout,
            stderr: self.stderr,
            records: self.records,
        }
    }

    fn budget_left(&self) -> bool {
        self.options.max_turns == 0 || self.stats.turns < self.options.max_turns
    }

    /// Moves the clock to the next moment some process can run. Returns
    /// false when nothing is left to do.
    fn advance(&mut self) -> bool {
        match self
            .procs
            .iter()
            .filter_map(Process::next_event)
            .min_by(f64::total_cmp)
        {
            Some(t) => {
                self.now = self.now.max(t);
                true
            }
            None => false,
        }
    }

    /// Books a finished turn. Returns its error, if any.
    fn finish(&mut self, outcome: TurnOutcome) -> Option<RunError> {
        self.stats.turns += 1;
        if outcome.stale {
            self.stats.stale_drops += 1;
        }
        if let Some(r) = outcome.record {
            self.records.push(r);
        }
        self.apply(outcome.effects);
        outcome.error
    }

    fn run_deterministic(&mut self) -> (StopReason, Option<RunError>) {
        loop {
            let mut ran = false;
            let pass = self.procs.len();
            for i in 0..pass {
                if !self.budget_left() {
                    return (StopReason::TurnLimit, None);
                }
                if !self.procs[i].runnable(self.now) {
                    continue;
                }
                ran = true;
                let env = TurnEnv {
                    program: self.program,
                    registry: &self.registry,
                    now: self.now,
                    seed: self.seed,
                    trace_propagation: self.options.trace_propagation,
                    record: self.options.record,
                };
                let outcome = self.procs[i].run_turn(&env);
                if let Some(e) = self.finish(outcome) {
                    return (StopReason::Error, Some(e));
                }
            }
            if !ran && !self.advance() {
                return (StopReason::Quiescent, None);
            }
        }
    }

    fn run_concurrent(&mut self) -> (StopReason, Option<RunError>) {
        #[cfg(feature = "parallel")]
        let pool = rayon::ThreadPoolBuilder::new()
            .stack_size(TURN_STACK_SIZE)
            .build()
            .expect("build turn thread pool");
        loop {
            if !self.budget_left() {
                return (StopReason::TurnLimit, None);
            }
            let now = self.now;
            let mut budget = match self.options.max_turns {
                0 => usize::MAX,
                n => (n - self.stats.turns) as usize,
            };
            let selected: Vec<bool> = self
                .procs
                .iter()
                .map(|p| {
                    let take = budget > 0 && p.runnable(now);
                    budget -= usize::from(take);
                    take
                })
                .collect();
            if !selected.contains(&true) {
                if self.advance() {
                    continue;
                }
                return (StopReason::Quiescent, None);
            }
            let env = TurnEnv {
                program: self.program,
                registry: &self.registry,
                now,
                seed: self.seed,
                trace_propagation: self.options.trace_propagation,
                record: self.options.record,
            };
            #[cfg(feature = "parallel")]
            let outcomes: Vec<TurnOutcome> = {
                use rayon::prelude::*;
                let procs = &mut self.procs;
                pool.install(|| {
                    procs
                        .par_iter_mut()
                        .zip(selected.par_iter())
                        .filter(|(_, s)| **s)
                        .map(|(p, _)| p.run_turn(&env))
                        .collect()
                })
            };
            #[cfg(not(feature = "parallel"))]
            let outcomes: Vec<TurnOutcome> = self
                .procs
                .iter_mut()
                .zip(&selected)
                .filter(|(_, s)| **s)
                .map(|(p, _)| p.run_turn(&env))
                .collect();
            for outcome in outcomes {
                if let Some(e) = self.finish(outcome) {
                    return (StopReason::Error, Some(e));
                }
            }
        }
    }

    fn deliver(&mut self, target: ProcId, at: f64, msg: Message) {
        if let Some(&i) = self.index.get(&target) {
            self.procs[i].enqueue(at, msg);
        }
    }

    fn apply(&mut self, effects: Vec<Stamped>) {
        for Stamped { at, effect } in effects {
            match effect {
                Effect::Spawn { me, ctor } => {
                    let index = self.procs.len();
                    let id = me.id;
                    let mut p = match me.kind {
                        ProcKind::Actor => Process::actor(self.program, me, index, self.options.trace_sct),
                        ProcKind::Reactor => Process::reactor(self.program, me, index, self.options.trace_sct),
                    };
                    if let Some((ctor, args)) = ctor {
                        p.enqueue(at, Message::Construct { ctor, args });
                    }
                    self.index.insert(id, index);
                    self.procs.push(p);
                }
                Effect::Deliver { target, msg } => self.deliver(target, at, msg),
                Effect::Emit { stream, tuple } => {
                    self.stats.emissions += 1;
                    let tuple = std::sync::Arc::new(tuple);
                    let state = self.registry.entry(&stream);
                    state.count += 1;
                    state.last = Some(tuple.clone());
                    let targets = state.subscribers.clone();
                    self.stats.publications += targets.len() as u64;
                    for (sub, tag) in targets {
                        let msg = Message::Publication {
                            stream: stream.clone(),
                            tag,
                            tuple: tuple.clone(),
                        };
                        self.deliver(sub, at, msg);
                    }
                }
                Effect::Subscribe {
                    stream,
                    subscriber,
                    tag,
                    seen,
                } => {
                    let state = self.registry.entry(&stream);
                    state.subscribers.push((subscriber, tag.clone()));
                    if state.count > seen {
                        if let Some(tuple) = state.last.clone() {
                            self.stats.publications += 1;
                            self.deliver(subscriber, at, Message::Publication { stream, tag, tuple });
                        }
                    }
                }
                Effect::Unsubscribe {
                    stream,
                    subscriber,
                    tag,
                } => {
                    let state = self.registry.entry(&stream);
                    state.subscribers.retain(|(s, t)| !(*s == subscriber && *t == tag));
                }
                Effect::Print(line) => {
                    if self.options.capture {
                        self.stdout.push(line);
                    } else {
                        let mut out = std::io::stdout().lock();
                        let _ = writeln!(out, "{line}");
                        let _ = out.flush();
                    }
                }
                Effect::Trace(line) => {
                    if self.options.capture {
                        self.stderr.push(line);
                    } else {
                        eprintln!("{line}");
                    }
                }
            }
        }
    }
}

/// Convenience: load and run `source` with captured output.
pub fn run_captured(program: &Program, mut options: RuntimeOptions) -> RunSummary {
    options.capture = true;
    Runtime::new(program, options).run()
}
