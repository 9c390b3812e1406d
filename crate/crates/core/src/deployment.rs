//! Run-time instance of a compiled graph: per-node value slots, stream
//! subscriptions for qualifications and stream-fed sources, and the
//! height-ordered propagation turn.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use crate::dag::{Dag, NodeId, NodeKind};
use crate::eval::{EvalResult, Interp, RebindArg, RuntimeError, RuntimeErrorKind, SubTag};
use crate::object::{equals, Heap, Payload, StreamRef, Value};

/// What one propagation turn did.
#[derive(Debug, Clone, Default)]
pub struct PropagationReport {
    /// Indices into the source list, in the order they were set.
    pub changed_sources: Vec<usize>,
    /// Nodes whose value was recomputed, in execution order.
    pub recomputed: Vec<NodeId>,
    /// The tuple emitted on `out`, if any.
    pub emitted: Option<Vec<Value>>,
}

#[derive(Debug, Clone)]
struct SourceGroup {
    first: usize,
    stream: StreamRef,
    generation: u64,
}

#[derive(Debug, Clone)]
pub struct Deployment {
    dag: Arc<Dag>,
    slots: Vec<Option<Value>>,
    /// Active subscription per qualify node.
    qualified: Vec<Option<(StreamRef, u64)>>,
    groups: Vec<SourceGroup>,
    next_generation: u64,
    last_emitted: Option<Vec<Value>>,
}

impl Deployment {
    /// A fresh deployment: constants are materialized in `heap`, everything
    /// else is unset.
    pub fn new(dag: Arc<Dag>, heap: &mut Heap) -> Self {
        let slots = dag
            .nodes
            .iter()
            .map(|n| match &n.kind {
                NodeKind::Const(p) => Some(p.import(heap).remove(0)),
                _ => None,
            })
            .collect();
        let n = dag.nodes.len();
        Deployment {
            dag,
            slots,
            qualified: vec![None; n],
            groups: Vec::new(),
            next_generation: 0,
            last_emitted: None,
        }
    }

    pub fn dag(&self) -> &Arc<Dag> {
        &self.dag
    }

    pub fn slot(&self, node: NodeId) -> Option<&Value> {
        self.slots[node].as_ref()
    }

    /// Current sink values, `None` while any sink is unset.
    pub fn sink_values(&self) -> Option<Vec<Value>> {
        self.dag.sinks.iter().map(|&s| self.slots[s].clone()).collect()
    }

    /// Streams currently feeding this deployment.
    pub fn subscriptions(&self) -> Vec<StreamRef> {
        let mut v: Vec<StreamRef> = self.groups.iter().map(|g| g.stream.clone()).collect();
        v.extend(self.qualified.iter().flatten().map(|(s, _)| s.clone()));
        v
    }

    fn generation(&mut self) -> u64 {
        self.next_generation += 1;
        self.next_generation
    }

    /// Handles a `react-to` request: every explicit-source stream
    /// subscription is replaced, plain values are assigned, and one
    /// propagation turn runs.
    pub fn rebind(&mut self, interp: &mut Interp<'_, '_>, args: Vec<RebindArg>) -> EvalResult<PropagationReport> {
        let width: usize = args.iter().map(RebindArg::width).sum();
        if width != self.dag.explicit_sources {
            return Err(RuntimeErrorKind::ReactToArity {
                reactor: self.dag.name.clone(),
                expected: self.dag.explicit_sources,
                got: width,
            }
            .into());
        }
        for g in std::mem::take(&mut self.groups) {
            interp.host.unsubscribe(
                &g.stream,
                SubTag::Sources {
                    first: g.first,
                    generation: g.generation,
                },
            );
        }
        let mut assignments = Vec::new();
        let mut idx = 0;
        for arg in args {
            match arg {
                RebindArg::Value(p) => {
                    assignments.push((self.dag.sources[idx], p.import(interp.heap()).remove(0)));
                    idx += 1;
                }
                RebindArg::Stream(stream) => {
                    let generation = self.generation();
                    let (count, cached) = interp.host.cached(&stream);
                    interp.host.subscribe(&stream, SubTag::Sources { first: idx, generation }, count);
                    match cached {
                        Some(p) => {
                            for (k, v) in p.import(interp.heap()).into_iter().enumerate() {
                                assignments.push((self.dag.sources[idx + k], v));
                            }
                        }
                        None => {
                            for k in 0..stream.arity {
                                self.unset(self.dag.sources[idx + k]);
                            }
                        }
                    }
                    idx += stream.arity;
                    self.groups.push(SourceGroup {
                        first: idx - stream.arity,
                        stream,
                        generation,
                    });
                }
            }
        }
        self.propagate(interp, assignments)
    }

    /// Handles a publication. Returns `None` if it belongs to a subscription
    /// that has since been replaced.
    pub fn publication(
        &mut self,
        interp: &mut Interp<'_, '_>,
        tag: &SubTag,
        tuple: &Payload,
    ) -> EvalResult<Option<PropagationReport>> {
        let targets: Vec<NodeId> = match tag {
            SubTag::Sources { first, generation } => {
                let Some(g) = self
                    .groups
                    .iter()
                    .find(|g| g.first == *first && g.generation == *generation)
                else {
                    return Ok(None);
                };
                (g.first..g.first + g.stream.arity).map(|i| self.dag.sources[i]).collect()
            }
            SubTag::Implicit { qualify, generation } => {
                match self.qualified.get(*qualify) {
                    Some(Some((_, g))) if g == generation => {}
                    _ => return Ok(None),
                }
                let NodeKind::Qualify { implicit, .. } = self.dag.nodes[*qualify].kind else {
                    return Ok(None);
                };
                vec![implicit]
            }
            SubTag::Monitor(_) => return Ok(None),
        };
        let values = tuple.import(interp.heap());
        debug_assert_eq!(values.len(), targets.len());
        let assignments = targets.into_iter().zip(values).collect();
        self.propagate(interp, assignments).map(Some)
    }

    /// Marks `node` and everything downstream of it as unset.
    fn unset(&mut self, node: NodeId) {
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            if self.slots[n].take().is_some() || n == node {
                stack.extend(self.dag.nodes[n].consumers.iter().copied());
            }
        }
    }

    /// Sets the given source nodes and runs one glitch-free turn.
    pub fn propagate(
        &mut self,
        interp: &mut Interp<'_, '_>,
        assignments: Vec<(NodeId, Value)>,
    ) -> EvalResult<PropagationReport> {
        let dag = self.dag.clone();
        let mut report = PropagationReport::default();
        let mut queue = BinaryHeap::new();
        let mut queued = vec![false; dag.nodes.len()];
        let schedule = |queue: &mut BinaryHeap<Reverse<(u32, NodeId)>>, queued: &mut Vec<bool>, node: NodeId| {
            for &c in &dag.nodes[node].consumers {
                if !queued[c] {
                    queued[c] = true;
                    queue.push(Reverse((dag.nodes[c].rank, c)));
                }
            }
        };
        for (node, value) in assignments {
            self.slots[node] = Some(value);
            if let Some(i) = dag.source_index(node) {
                report.changed_sources.push(i);
            }
            schedule(&mut queue, &mut queued, node);
        }
        while let Some(Reverse((_, id))) = queue.pop() {
            let node = &dag.nodes[id];
            let Some(inputs) = node
                .inputs
                .iter()
                .map(|&i| self.slots[i].clone())
                .collect::<Option<Vec<Value>>>()
            else {
                continue;
            };
            report.recomputed.push(id);
            let new = match &node.kind {
                NodeKind::Apply(op) => crate::dag::apply_op(interp, op, inputs).map_err(|e| at(e, node.pos))?,
                NodeKind::Sink { .. } => inputs.into_iter().next().expect("sink has one input"),
                NodeKind::Qualify { stream, implicit } => {
                    let seeded = self
                        .requalify(interp, id, *implicit, &inputs[0], stream, &mut report)
                        .map_err(|e| at(e, node.pos))?;
                    if seeded {
                        schedule(&mut queue, &mut queued, *implicit);
                    }
                    continue;
                }
                NodeKind::Source { .. } | NodeKind::ImplicitSource { .. } | NodeKind::Const(_) => continue,
            };
            let changed = match &self.slots[id] {
                Some(old) => !equals(interp.heap(), old, &new),
                None => true,
            };
            if changed {
                self.slots[id] = Some(new);
                schedule(&mut queue, &mut queued, id);
            }
        }
        if let Some(tuple) = self.sink_values() {
            let fresh = match &self.last_emitted {
                None => true,
                Some(prev) => prev.iter().zip(&tuple).any(|(a, b)| !equals(interp.heap(), a, b)),
            };
            if fresh {
                let payload = Payload::export(interp.heap(), &tuple);
                interp.host.emit("out", payload);
                self.last_emitted = Some(tuple.clone());
                report.emitted = Some(tuple);
            }
        }
        Ok(report)
    }

    /// A qualify node received a new owner value. Returns whether the paired
    /// implicit source was seeded from the stream's cache.
    fn requalify(
        &mut self,
        interp: &mut Interp<'_, '_>,
        id: NodeId,
        implicit: NodeId,
        owner: &Value,
        stream: &str,
        report: &mut PropagationReport,
    ) -> EvalResult<bool> {
        let sref = interp.qualify(owner, stream)?;
        if sref.arity != 1 {
            return Err(RuntimeErrorKind::QualifyArity(sref.to_string()).into());
        }
        if let Some((current, _)) = &self.qualified[id] {
            if current.owner.id == sref.owner.id && current.name == sref.name {
                return Ok(false);
            }
        }
        if let Some((old, generation)) = self.qualified[id].take() {
            interp.host.unsubscribe(&old, SubTag::Implicit { qualify: id, generation });
        }
        let generation = self.generation();
        let (count, cached) = interp.host.cached(&sref);
        interp.host.subscribe(&sref, SubTag::Implicit { qualify: id, generation }, count);
        self.slots[id] = Some(Value::Stream(sref.clone()));
        self.qualified[id] = Some((sref, generation));
        match cached {
            Some(p) => {
                self.slots[implicit] = Some(p.import(interp.heap()).remove(0));
                if let Some(i) = self.dag.source_index(implicit) {
                    report.changed_sources.push(i);
                }
                Ok(true)
            }
            None => {
                self.unset(implicit);
                Ok(false)
            }
        }
    }
}

fn at(e: RuntimeError, pos: Option<crate::syntax::Pos>) -> RuntimeError {
    match pos {
        Some(p) => e.at(p),
        None => e,
    }
}
