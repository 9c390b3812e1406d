use std::collections::HashMap;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use super::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjId(u32);

impl ObjId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Host-side state attached to built-in classes.
#[derive(Debug, Clone, PartialEq)]
pub enum Native {
    Random(ChaCha8Rng),
}

#[derive(Debug, Clone)]
pub struct Object {
    pub class: Arc<str>,
    pub fields: Vec<(Arc<str>, Value)>,
    pub native: Option<Native>,
}

impl Object {
    pub fn field(&self, name: &str) -> Option<&Value> {
        self.fields
            .iter()
            .find(|(n, _)| &**n == name)
            .map(|(_, v)| v)
    }

    pub fn field_mut(&mut self, name: &str) -> Option<&mut Value> {
        self.fields
            .iter_mut()
            .find(|(n, _)| &**n == name)
            .map(|(_, v)| v)
    }
}

/// Arena of instances owned by one process. Objects are never freed while
/// the process lives.
#[derive(Debug, Clone, Default)]
pub struct Heap {
    objects: Vec<Object>,
}

impl Heap {
    pub fn new() -> Self {
        Heap::default()
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Allocates an instance with every field set to `#undefined`.
    pub fn alloc<S: AsRef<str>>(&mut self, class: &str, fields: &[S]) -> ObjId {
        self.insert(Object {
            class: Arc::from(class),
            fields: fields
                .iter()
                .map(|f| (Arc::from(f.as_ref()), Value::Undefined))
                .collect(),
            native: None,
        })
    }

    pub fn insert(&mut self, object: Object) -> ObjId {
        let id = ObjId(self.objects.len() as u32);
        self.objects.push(object);
        id
    }

    pub fn get(&self, id: ObjId) -> &Object {
        &self.objects[id.index()]
    }

    pub fn get_mut(&mut self, id: ObjId) -> &mut Object {
        &mut self.objects[id.index()]
    }

    pub fn field(&self, id: ObjId, name: &str) -> Option<&Value> {
        self.get(id).field(name)
    }

    /// Returns false if the object has no such field.
    pub fn set_field(&mut self, id: ObjId, name: &str, value: Value) -> bool {
        match self.get_mut(id).field_mut(name) {
            Some(slot) => {
                *slot = value;
                true
            }
            None => false,
        }
    }

    /// Copies `value` from `src` into `dst`, duplicating every reachable
    /// instance once. Sharing and cycles among the copied instances are
    /// preserved; process and stream references are copied as references.
    pub fn copy_into(src: &Heap, dst: &mut Heap, value: &Value) -> Value {
        let mut memo = HashMap::new();
        Heap::copy_with(src, dst, value, &mut memo)
    }

    fn copy_with(
        src: &Heap,
        dst: &mut Heap,
        value: &Value,
        memo: &mut HashMap<ObjId, ObjId>,
    ) -> Value {
        let Value::Instance(root) = value else {
            return value.clone();
        };
        let mut pending = Vec::new();
        let mut map = |id: ObjId, dst: &mut Heap, pending: &mut Vec<ObjId>| -> ObjId {
            *memo.entry(id).or_insert_with(|| {
                let o = src.get(id);
                pending.push(id);
                dst.insert(Object {
                    class: o.class.clone(),
                    fields: Vec::with_capacity(o.fields.len()),
                    native: o.native.clone(),
                })
            })
        };
        let new_root = map(*root, dst, &mut pending);
        while let Some(old) = pending.pop() {
            let new = map(old, dst, &mut pending);
            let mut fields = Vec::with_capacity(src.get(old).fields.len());
            for (name, v) in &src.get(old).fields {
                let copied = match v {
                    Value::Instance(id) => Value::Instance(map(*id, dst, &mut pending)),
                    other => other.clone(),
                };
                fields.push((name.clone(), copied));
            }
            dst.get_mut(new).fields = fields;
        }
        Value::Instance(new_root)
    }
}

/// A self-contained deep copy of a tuple of values, used for every message
/// and publication that crosses a process boundary.
#[derive(Debug, Clone, Default)]
pub struct Payload {
    heap: Heap,
    values: Vec<Value>,
}

impl Payload {
    pub fn export(src: &Heap, values: &[Value]) -> Payload {
        let mut heap = Heap::new();
        let mut memo = HashMap::new();
        let values = values
            .iter()
            .map(|v| Heap::copy_with(src, &mut heap, v, &mut memo))
            .collect();
        Payload { heap, values }
    }

    /// Materializes the payload inside `dst`. Each call yields fresh instances.
    pub fn import(&self, dst: &mut Heap) -> Vec<Value> {
        let mut memo = HashMap::new();
        self.values
            .iter()
            .map(|v| Heap::copy_with(&self.heap, dst, v, &mut memo))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn heap(&self) -> &Heap {
        &self.heap
    }

    /// Numbers in the payload, `None` for anything else.
    pub fn numbers(&self) -> Vec<Option<f64>> {
        self.values.iter().map(Value::as_number).collect()
    }
}
