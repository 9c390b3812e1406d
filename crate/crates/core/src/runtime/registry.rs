use std::collections::HashMap;
use std::sync::Arc;

use crate::eval::SubTag;
use crate::object::{Payload, ProcId, StreamRef};

#[derive(Debug, Default)]
pub(crate) struct StreamState {
    pub subscribers: Vec<(ProcId, SubTag)>,
    pub last: Option<Arc<Payload>>,
    pub count: u64,
}

/// Producer-side state of every stream that has been emitted to or
/// subscribed to.
#[derive(Debug, Default)]
pub(crate) struct Registry {
    streams: HashMap<(ProcId, Arc<str>), StreamState>,
}

impl Registry {
    pub fn cached(&self, stream: &StreamRef) -> (u64, Option<Arc<Payload>>) {
        match self.streams.get(&(stream.owner.id, stream.name.clone())) {
            Some(s) => (s.count, s.last.clone()),
            None => (0, None),
        }
    }

    pub fn entry(&mut self, stream: &StreamRef) -> &mut StreamState {
        self.streams.entry((stream.owner.id, stream.name.clone())).or_default()
    }
}
