use std::collections::HashMap;
use std::sync::Arc;

use super::{ApplyOp, Dag, Node, NodeId, NodeKind};
use crate::eval::{DagTable, Interp, NullHost, RuntimeError};
use crate::object::{Heap, Payload, Value};
use crate::syntax::{Expr, ExprKind, Literal, Pos, ProgramDef, ReactorBehaviourDef, ReactorBody, ReactorStmt};
use crate::termination::TerminationGuard;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompileError {
    #[error("{pos}: unbound name `{name}` in reactor `{behaviour}`")]
    Unbound { behaviour: String, name: String, pos: Pos },
    #[error("{pos}: `{name}` is already bound in reactor `{behaviour}`")]
    Redefined { behaviour: String, name: String, pos: Pos },
    #[error("reactor `{0}` has no sources")]
    NoSources(String),
    #[error("reactor `{0}` has no `out` form")]
    NoSink(String),
    #[error("{pos}: unknown reactor behaviour `{name}`")]
    UnknownBehaviour { name: String, pos: Pos },
    #[error("reactor `{0}` is composed from itself")]
    Recursive(String),
    #[error("{pos}: tick of `{callee}` passes {got} argument(s), it has {expected} source(s)")]
    TickArity {
        callee: String,
        expected: usize,
        got: usize,
        pos: Pos,
    },
    #[error("{pos}: `{callee}` has {sinks} sink(s) but {bound} name(s) are bound")]
    DefValuesWidth {
        callee: String,
        sinks: usize,
        bound: usize,
        pos: Pos,
    },
    #[error("{pos}: tick of `{callee}` in expression position needs exactly one sink, it has {sinks}")]
    TickWidth { callee: String, sinks: usize, pos: Pos },
    #[error("ror in `{behaviour}`: inputs provide {sinks} sink(s) but `{output}` has {sources} source(s)")]
    RorMismatch {
        behaviour: String,
        output: String,
        sinks: usize,
        sources: usize,
    },
    #[error("{pos}: `{form}` is not supported in reactor `{behaviour}`")]
    Unsupported {
        behaviour: String,
        form: String,
        pos: Pos,
    },
    #[error("constant folding in reactor `{behaviour}` failed: {error}")]
    Fold { behaviour: String, error: RuntimeError },
}

/// Compiles every reactor behaviour of `def`.
pub fn compile_all(def: &ProgramDef) -> Result<DagTable, CompileError> {
    let mut c = Compiler {
        def,
        done: HashMap::new(),
        active: Vec::new(),
    };
    for r in &def.reactors {
        c.get(&r.name, r.pos)?;
    }
    Ok(c.done.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

struct Compiler<'p> {
    def: &'p ProgramDef,
    done: HashMap<&'p str, Arc<Dag>>,
    active: Vec<&'p str>,
}

impl<'p> Compiler<'p> {
    fn get(&mut self, name: &str, pos: Pos) -> Result<Arc<Dag>, CompileError> {
        if let Some(d) = self.done.get(name) {
            return Ok(d.clone());
        }
        let Some(r) = self.def.reactor(name) else {
            return Err(CompileError::UnknownBehaviour {
                name: name.to_string(),
                pos,
            });
        };
        if self.active.contains(&r.name.as_str()) {
            return Err(CompileError::Recursive(r.name.clone()));
        }
        self.active.push(&r.name);
        let dag = self.compile(r);
        self.active.pop();
        let dag = Arc::new(dag?);
        self.done.insert(&r.name, dag.clone());
        Ok(dag)
    }

    fn compile(&mut self, r: &'p ReactorBehaviourDef) -> Result<Dag, CompileError> {
        let mut b = Builder::default();
        match &r.body {
            ReactorBody::Graph { stmts, out } => {
                let mut env: HashMap<&'p str, NodeId> = HashMap::new();
                for s in &r.sources {
                    if env.contains_key(s.as_str()) {
                        return Err(CompileError::Redefined {
                            behaviour: r.name.clone(),
                            name: s.clone(),
                            pos: r.pos,
                        });
                    }
                    let id = b.add(NodeKind::Source { name: s.as_str().into() }, vec![], Some(r.pos));
                    b.explicit.push(id);
                    env.insert(s, id);
                }
                if b.explicit.is_empty() {
                    return Err(CompileError::NoSources(r.name.clone()));
                }
                let bind = |env: &mut HashMap<&'p str, NodeId>, name: &'p str, id: NodeId, pos: Pos| {
                    if env.insert(name, id).is_some() {
                        return Err(CompileError::Redefined {
                            behaviour: r.name.clone(),
                            name: name.to_string(),
                            pos,
                        });
                    }
                    Ok(())
                };
                for stmt in stmts {
                    match stmt {
                        ReactorStmt::Def(name, e) => {
                            let id = self.expr(&mut b, &env, r, e)?;
                            bind(&mut env, name, id, e.pos)?;
                        }
                        ReactorStmt::DefValues(names, e) => {
                            let ExprKind::Tick { behaviour, args } = &e.kind else {
                                return Err(CompileError::Unsupported {
                                    behaviour: r.name.clone(),
                                    form: "def-values without tick".into(),
                                    pos: e.pos,
                                });
                            };
                            let results = self.tick(&mut b, &env, r, behaviour, args, e.pos)?;
                            if results.len() != names.len() {
                                return Err(CompileError::DefValuesWidth {
                                    callee: behaviour.clone(),
                                    sinks: results.len(),
                                    bound: names.len(),
                                    pos: e.pos,
                                });
                            }
                            for (name, id) in names.iter().zip(results) {
                                bind(&mut env, name, id, e.pos)?;
                            }
                        }
                        ReactorStmt::Expr(e) => {
                            self.expr(&mut b, &env, r, e)?;
                        }
                    }
                }
                let Some(out) = out else {
                    return Err(CompileError::NoSink(r.name.clone()));
                };
                if out.is_empty() {
                    return Err(CompileError::NoSink(r.name.clone()));
                }
                for e in out {
                    let id = self.expr(&mut b, &env, r, e)?;
                    b.sink(id, Some(e.pos));
                }
            }
            ReactorBody::Ror { output, inputs } => {
                let mut wires = Vec::new();
                for input in inputs {
                    let callee = self.get(input, r.pos)?;
                    let args: Vec<NodeId> = callee.sources[..callee.explicit_sources]
                        .iter()
                        .map(|&s| {
                            let NodeKind::Source { name } = &callee.nodes[s].kind else {
                                unreachable!("explicit sources are source nodes")
                            };
                            let id = b.add(NodeKind::Source { name: name.clone() }, vec![], Some(r.pos));
                            b.explicit.push(id);
                            id
                        })
                        .collect();
                    wires.extend(b.inline(&callee, &args));
                }
                let out = self.get(output, r.pos)?;
                if wires.len() != out.explicit_sources {
                    return Err(CompileError::RorMismatch {
                        behaviour: r.name.clone(),
                        output: output.clone(),
                        sinks: wires.len(),
                        sources: out.explicit_sources,
                    });
                }
                for id in b.inline(&out, &wires) {
                    b.sink(id, Some(r.pos));
                }
            }
        }
        b.fold(self.def).map_err(|error| CompileError::Fold {
            behaviour: r.name.clone(),
            error,
        })?;
        let dag = b.finish(&r.name);
        debug_assert_eq!(dag.validate(), Ok(()));
        Ok(dag)
    }

    fn tick(
        &mut self,
        b: &mut Builder,
        env: &HashMap<&'p str, NodeId>,
        r: &'p ReactorBehaviourDef,
        callee: &str,
        args: &'p [Expr],
        pos: Pos,
    ) -> Result<Vec<NodeId>, CompileError> {
        let dag = self.get(callee, pos)?;
        if args.len() != dag.explicit_sources {
            return Err(CompileError::TickArity {
                callee: callee.to_string(),
                expected: dag.explicit_sources,
                got: args.len(),
                pos,
            });
        }
        let args = args
            .iter()
            .map(|a| self.expr(b, env, r, a))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(b.inline(&dag, &args))
    }

    fn expr(
        &mut self,
        b: &mut Builder,
        env: &HashMap<&'p str, NodeId>,
        r: &'p ReactorBehaviourDef,
        e: &'p Expr,
    ) -> Result<NodeId, CompileError> {
        let pos = Some(e.pos);
        let lookup = |name: &str| {
            env.get(name).copied().ok_or_else(|| CompileError::Unbound {
                behaviour: r.name.clone(),
                name: name.to_string(),
                pos: e.pos,
            })
        };
        Ok(match &e.kind {
            ExprKind::Literal(lit) => {
                let v = match lit {
                    Literal::Number(n) => Value::Number(*n),
                    Literal::Str(s) => Value::str(s),
                    Literal::Symbol(s) => Value::symbol(s),
                    Literal::Bool(v) => Value::Bool(*v),
                    Literal::Undefined => Value::Undefined,
                    Literal::Pi => Value::Number(std::f64::consts::PI),
                };
                b.add(NodeKind::Const(Payload::export(&Heap::new(), &[v])), vec![], pos)
            }
            ExprKind::Var(name) => lookup(name)?,
            ExprKind::Qualify { owner, stream } => {
                let owner = lookup(owner)?;
                let q = b.add(
                    NodeKind::Qualify {
                        stream: stream.as_str().into(),
                        implicit: usize::MAX,
                    },
                    vec![owner],
                    pos,
                );
                b.pair_implicit(q, pos)
            }
            ExprKind::Invoke { selector, receiver, args } => {
                let mut inputs = vec![self.expr(b, env, r, receiver)?];
                for a in args {
                    inputs.push(self.expr(b, env, r, a)?);
                }
                b.add(NodeKind::Apply(ApplyOp::Invoke(selector.as_str().into())), inputs, pos)
            }
            ExprKind::New { class, ctor, args } => {
                let inputs = args
                    .iter()
                    .map(|a| self.expr(b, env, r, a))
                    .collect::<Result<Vec<_>, _>>()?;
                b.add(
                    NodeKind::Apply(ApplyOp::New {
                        class: class.as_str().into(),
                        ctor: ctor.as_deref().map(Into::into),
                    }),
                    inputs,
                    pos,
                )
            }
            ExprKind::Tick { behaviour, args } => {
                let results = self.tick(b, env, r, behaviour, args, e.pos)?;
                if results.len() != 1 {
                    return Err(CompileError::TickWidth {
                        callee: behaviour.clone(),
                        sinks: results.len(),
                        pos: e.pos,
                    });
                }
                results[0]
            }
            other => {
                let form = match other {
                    ExprKind::SelfRef => "#self",
                    _ => e.form_name().unwrap_or("expression"),
                };
                return Err(CompileError::Unsupported {
                    behaviour: r.name.clone(),
                    form: form.to_string(),
                    pos: e.pos,
                });
            }
        })
    }
}

#[derive(Default)]
struct Builder {
    nodes: Vec<Node>,
    explicit: Vec<NodeId>,
    implicit: Vec<NodeId>,
    sinks: Vec<NodeId>,
}

impl Builder {
    fn add(&mut self, kind: NodeKind, inputs: Vec<NodeId>, pos: Option<Pos>) -> NodeId {
        self.nodes.push(Node {
            kind,
            inputs,
            consumers: Vec::new(),
            height: 0,
            rank: 0,
            pos,
        });
        self.nodes.len() - 1
    }

    fn pair_implicit(&mut self, qualify: NodeId, pos: Option<Pos>) -> NodeId {
        let i = self.add(NodeKind::ImplicitSource { qualify }, vec![], pos);
        if let NodeKind::Qualify { implicit, .. } = &mut self.nodes[qualify].kind {
            *implicit = i;
        }
        self.implicit.push(i);
        i
    }

    fn sink(&mut self, input: NodeId, pos: Option<Pos>) {
        let index = self.sinks.len();
        let id = self.add(NodeKind::Sink { index }, vec![input], pos);
        self.sinks.push(id);
    }

    /// Copies `callee` into this graph with its explicit sources replaced by
    /// `args`. Returns the producers of the callee's sinks; the callee's own
    /// source and sink nodes are not copied.
    fn inline(&mut self, callee: &Dag, args: &[NodeId]) -> Vec<NodeId> {
        debug_assert_eq!(args.len(), callee.explicit_sources);
        let mut map = vec![usize::MAX; callee.nodes.len()];
        for (&s, &a) in callee.sources[..callee.explicit_sources].iter().zip(args) {
            map[s] = a;
        }
        for (id, n) in callee.nodes.iter().enumerate() {
            let inputs = n.inputs.iter().map(|&i| map[i]).collect();
            map[id] = match &n.kind {
                NodeKind::Source { .. } | NodeKind::Sink { .. } => continue,
                NodeKind::ImplicitSource { qualify } => self.pair_implicit(map[*qualify], n.pos),
                NodeKind::Qualify { stream, .. } => self.add(
                    NodeKind::Qualify {
                        stream: stream.clone(),
                        implicit: usize::MAX,
                    },
                    inputs,
                    n.pos,
                ),
                kind => self.add(kind.clone(), inputs, n.pos),
            };
        }
        callee.sinks.iter().map(|&s| map[callee.nodes[s].inputs[0]]).collect()
    }

    /// Replaces every apply whose inputs are all constants by a constant,
    /// then drops constants nobody consumes.
    fn fold(&mut self, def: &ProgramDef) -> Result<(), RuntimeError> {
        let dags = DagTable::new();
        for id in 0..self.nodes.len() {
            let NodeKind::Apply(op) = &self.nodes[id].kind else {
                continue;
            };
            let inputs = &self.nodes[id].inputs;
            if !inputs.iter().all(|&i| matches!(self.nodes[i].kind, NodeKind::Const(_))) {
                continue;
            }
            let mut heap = Heap::new();
            let args: Vec<Value> = inputs
                .iter()
                .map(|&i| match &self.nodes[i].kind {
                    NodeKind::Const(p) => p.import(&mut heap).remove(0),
                    _ => unreachable!(),
                })
                .collect();
            let op = op.clone();
            let pos = self.nodes[id].pos;
            let mut host = NullHost::default();
            let mut guard = TerminationGuard::new(false);
            let mut interp = Interp::new(def, &dags, &mut heap, &mut host, &mut guard);
            let result = apply(&mut interp, &op, args).map_err(|e| match pos {
                Some(p) => e.at(p),
                None => e,
            })?;
            let payload = Payload::export(&heap, &[result]);
            let node = &mut self.nodes[id];
            node.kind = NodeKind::Const(payload);
            node.inputs.clear();
        }
        self.compact();
        Ok(())
    }

    fn compact(&mut self) {
        let mut used = vec![false; self.nodes.len()];
        for n in &self.nodes {
            for &i in &n.inputs {
                used[i] = true;
            }
        }
        let keep: Vec<bool> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| used[id] || !matches!(n.kind, NodeKind::Const(_)))
            .collect();
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut next = 0;
        for (id, k) in keep.iter().enumerate() {
            if *k {
                remap[id] = next;
                next += 1;
            }
        }
        let old = std::mem::take(&mut self.nodes);
        for (id, mut n) in old.into_iter().enumerate() {
            if !keep[id] {
                continue;
            }
            n.inputs.iter_mut().for_each(|i| *i = remap[*i]);
            match &mut n.kind {
                NodeKind::ImplicitSource { qualify } => *qualify = remap[*qualify],
                NodeKind::Qualify { implicit, .. } => *implicit = remap[*implicit],
                _ => {}
            }
            self.nodes.push(n);
        }
        for list in [&mut self.explicit, &mut self.implicit, &mut self.sinks] {
            list.iter_mut().for_each(|i| *i = remap[*i]);
        }
    }

    fn finish(mut self, name: &str) -> Dag {
        for id in 0..self.nodes.len() {
            let (height, rank) = match &self.nodes[id].kind {
                NodeKind::Source { .. } | NodeKind::Const(_) => (0, 0),
                NodeKind::ImplicitSource { qualify } => (0, self.nodes[*qualify].rank + 1),
                _ => {
                    let inputs = &self.nodes[id].inputs;
                    let h = inputs.iter().map(|&i| self.nodes[i].height).max().unwrap_or(0);
                    let r = inputs.iter().map(|&i| self.nodes[i].rank).max().unwrap_or(0);
                    (h + 1, r + 1)
                }
            };
            self.nodes[id].height = height;
            self.nodes[id].rank = rank;
            for i in self.nodes[id].inputs.clone() {
                self.nodes[i].consumers.push(id);
            }
        }
        let explicit_sources = self.explicit.len();
        let mut sources = self.explicit;
        sources.extend(self.implicit);
        Dag {
            name: name.to_string(),
            nodes: self.nodes,
            sources,
            explicit_sources,
            sinks: self.sinks,
        }
    }
}

/// Runs an apply node's operation on its input values in a pure context.
pub(crate) fn apply(interp: &mut Interp<'_, '_>, op: &ApplyOp, mut inputs: Vec<Value>) -> Result<Value, RuntimeError> {
    match op {
        ApplyOp::Invoke(sel) => {
            let receiver = inputs.remove(0);
            interp.invoke(receiver, sel, inputs, true)
        }
        ApplyOp::New { class, ctor } => interp.instantiate(class, ctor.as_deref(), inputs, true),
    }
}

