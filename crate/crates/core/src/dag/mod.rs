//! Compiled reactor graphs.
//!
//! Node ids are creation order, which is always a topological order: every
//! node's inputs have smaller ids. `height` follows data edges only;
//! `rank` additionally places an implicit source after the qualify node that
//! feeds it, and is what propagation is scheduled by.

mod compile;

use std::fmt::Write;
use std::sync::Arc;

pub use compile::{compile_all, CompileError};
pub(crate) use compile::apply as apply_op;

use crate::object::{display, Payload};
use crate::syntax::Pos;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum ApplyOp {
    /// Routine invocation; input 0 is the receiver.
    Invoke(Arc<str>),
    /// `(new class 'ctor ...)`; inputs are the constructor arguments.
    New {
        class: Arc<str>,
        ctor: Option<Arc<str>>,
    },
}

#[derive(Debug, Clone)]
pub enum NodeKind {
    Source { name: Arc<str> },
    ImplicitSource { qualify: NodeId },
    Const(Payload),
    Apply(ApplyOp),
    Qualify { stream: Arc<str>, implicit: NodeId },
    Sink { index: usize },
}

impl NodeKind {
    pub fn variant(&self) -> &'static str {
        match self {
            NodeKind::Source { .. } => "source",
            NodeKind::ImplicitSource { .. } => "implicit-source",
            NodeKind::Const(_) => "const",
            NodeKind::Apply(_) => "apply",
            NodeKind::Qualify { .. } => "qualify",
            NodeKind::Sink { .. } => "sink",
        }
    }

    pub fn is_source(&self) -> bool {
        matches!(self, NodeKind::Source { .. } | NodeKind::ImplicitSource { .. })
    }
}

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub inputs: Vec<NodeId>,
    pub consumers: Vec<NodeId>,
    pub height: u32,
    pub rank: u32,
    pub pos: Option<Pos>,
}

#[derive(Debug, Clone)]
pub struct Dag {
    pub name: String,
    pub nodes: Vec<Node>,
    /// Explicit sources in parameter order, then implicit sources in body order.
    pub sources: Vec<NodeId>,
    pub explicit_sources: usize,
    pub sinks: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed graph `{dag}`: {reason}")]
pub struct DagInvariantError {
    pub dag: String,
    pub reason: String,
}

impl Dag {
    pub fn implicit_sources(&self) -> &[NodeId] {
        &self.sources[self.explicit_sources..]
    }

    /// `(producer, consumer, slot)` for every data edge, in consumer order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId, usize)> {
        let mut edges = Vec::new();
        for (id, n) in self.nodes.iter().enumerate() {
            for (slot, &input) in n.inputs.iter().enumerate() {
                edges.push((input, id, slot));
            }
        }
        edges
    }

    pub fn count(&self, variant: &str) -> usize {
        self.nodes.iter().filter(|n| n.kind.variant() == variant).count()
    }

    /// Position of `node` in the source list.
    pub fn source_index(&self, node: NodeId) -> Option<usize> {
        self.sources.iter().position(|&s| s == node)
    }

    /// Checks the structural invariants every compiled graph satisfies.
    pub fn validate(&self) -> Result<(), DagInvariantError> {
        let fail = |reason: String| {
            Err(DagInvariantError {
                dag: self.name.clone(),
                reason,
            })
        };
        if self.sources.is_empty() {
            return fail("no sources".into());
        }
        if self.sinks.is_empty() {
            return fail("no sinks".into());
        }
        for (id, n) in self.nodes.iter().enumerate() {
            if n.inputs.iter().any(|&i| i >= id) {
                return fail(format!("node {id} is not in topological position"));
            }
            for &i in &n.inputs {
                if n.height <= self.nodes[i].height || n.rank <= self.nodes[i].rank {
                    return fail(format!("height does not increase along {i} -> {id}"));
                }
            }
            match &n.kind {
                NodeKind::Source { .. } | NodeKind::ImplicitSource { .. } | NodeKind::Const(_) => {
                    if !n.inputs.is_empty() {
                        return fail(format!("boundary node {id} has producers"));
                    }
                    if n.height != 0 {
                        return fail(format!("boundary node {id} has nonzero height"));
                    }
                }
                NodeKind::Sink { .. } => {
                    if n.inputs.len() != 1 {
                        return fail(format!("sink {id} must have exactly one input"));
                    }
                    if !n.consumers.is_empty() {
                        return fail(format!("sink {id} has consumers"));
                    }
                }
                NodeKind::Qualify { implicit, .. } => {
                    if n.inputs.len() != 1 {
                        return fail(format!("qualify {id} must have exactly one input"));
                    }
                    match self.nodes.get(*implicit).map(|m| &m.kind) {
                        Some(NodeKind::ImplicitSource { qualify }) if *qualify == id => {}
                        _ => return fail(format!("qualify {id} is not paired")),
                    }
                }
                NodeKind::Apply(ApplyOp::Invoke(_)) if n.inputs.is_empty() => {
                    return fail(format!("apply {id} has no receiver"));
                }
                NodeKind::Apply(_) => {}
            }
        }
        let mut listed = self.sources.clone();
        listed.sort_unstable();
        let actual: Vec<NodeId> = (0..self.nodes.len()).filter(|&i| self.nodes[i].kind.is_source()).collect();
        if listed != actual {
            return fail("source list does not match source nodes".into());
        }
        if self.sinks.len() != self.count("sink") {
            return fail("sink list does not match sink nodes".into());
        }
        Ok(())
    }

    /// Stable textual rendering: a header, one line per node and one line per
    /// edge.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let ids = |ids: &[NodeId]| ids.iter().map(|i| format!(" {i}")).collect::<String>();
        let _ = writeln!(out, "reactor {}", self.name);
        let _ = writeln!(out, "sources{}", ids(&self.sources[..self.explicit_sources]));
        let _ = writeln!(out, "implicit-sources{}", ids(self.implicit_sources()));
        let _ = writeln!(out, "sinks{}", ids(&self.sinks));
        for (id, n) in self.nodes.iter().enumerate() {
            let label = match &n.kind {
                NodeKind::Source { name } => format!("source {name}"),
                NodeKind::ImplicitSource { qualify } => format!("implicit-source of {qualify}"),
                NodeKind::Const(p) => format!("const {}", display(p.heap(), &p.values()[0])),
                NodeKind::Apply(ApplyOp::Invoke(sel)) => format!("apply {sel}"),
                NodeKind::Apply(ApplyOp::New { class, ctor }) => match ctor {
                    Some(c) => format!("apply new {class} '{c}"),
                    None => format!("apply new {class}"),
                },
                NodeKind::Qualify { stream, implicit } => format!("qualify {stream} -> {implicit}"),
                NodeKind::Sink { index } => format!("sink {index}"),
            };
            let _ = write!(out, "node {id} {label} height {}", n.height);
            if !n.inputs.is_empty() {
                let _ = write!(out, " inputs{}", ids(&n.inputs));
            }
            out.push('\n');
        }
        for (from, to, slot) in self.edges() {
            let _ = writeln!(out, "edge {from} -> {to} slot {slot}");
        }
        out
    }
}
