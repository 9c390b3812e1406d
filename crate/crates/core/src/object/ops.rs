use std::collections::HashSet;
use std::fmt::Write;
use std::sync::Arc;

use super::{Heap, ObjId, Payload, Value};

/// Name of the class of `v`, as returned by the `type-of` routine.
pub fn type_of(heap: &Heap, v: &Value) -> Arc<str> {
    match v {
        Value::Bool(_) => "Boolean".into(),
        Value::Number(_) => "Number".into(),
        Value::Str(_) => "String".into(),
        Value::Symbol(_) => "Symbol".into(),
        Value::Undefined => "Undefined".into(),
        Value::Instance(id) => heap.get(*id).class.clone(),
        Value::Actor(_) => "ActorReference".into(),
        Value::Reactor(_) => "ReactorReference".into(),
        Value::Stream(_) => "Stream".into(),
    }
}

fn native_eq(a: &Value, b: &Value) -> Option<bool> {
    Some(match (a, b) {
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::Number(x), Value::Number(y)) => x == y,
        (Value::Str(x), Value::Str(y)) => x == y,
        (Value::Symbol(x), Value::Symbol(y)) => x == y,
        (Value::Undefined, Value::Undefined) => true,
        (Value::Actor(x), Value::Actor(y)) | (Value::Reactor(x), Value::Reactor(y)) => x.id == y.id,
        (Value::Stream(x), Value::Stream(y)) => x.owner.id == y.owner.id && x.name == y.name,
        (Value::Instance(_), Value::Instance(_)) => return None,
        _ => false,
    })
}

/// `eq?`: identity on instances and references, value equality on natives.
pub fn ref_equals(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Instance(x), Value::Instance(y)) => x == y,
        _ => native_eq(a, b).unwrap_or(false),
    }
}

/// `equal?`: structural equality, terminating on cyclic graphs.
pub fn equals(heap: &Heap, a: &Value, b: &Value) -> bool {
    equals_across(heap, a, heap, b)
}

/// Structural equality between values living in two different heaps.
///
/// Pairs of instances already under comparison are assumed equal, which makes
/// this the greatest bisimulation and guarantees termination on cycles.
pub fn equals_across(ha: &Heap, a: &Value, hb: &Heap, b: &Value) -> bool {
    let mut assumed: HashSet<(ObjId, ObjId)> = HashSet::new();
    let mut work = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = work.pop() {
        if let Some(eq) = native_eq(&x, &y) {
            if !eq {
                return false;
            }
            continue;
        }
        let (Value::Instance(ix), Value::Instance(iy)) = (x, y) else {
            unreachable!("native_eq handles every non-instance pair")
        };
        if !assumed.insert((ix, iy)) {
            continue;
        }
        let (ox, oy) = (ha.get(ix), hb.get(iy));
        if ox.class != oy.class || ox.fields.len() != oy.fields.len() || ox.native != oy.native {
            return false;
        }
        for ((nx, vx), (ny, vy)) in ox.fields.iter().zip(&oy.fields) {
            if nx != ny {
                return false;
            }
            work.push((vx.clone(), vy.clone()));
        }
    }
    true
}

/// Deep copy within one heap: instances are duplicated (preserving sharing
/// and cycles), everything else is returned as-is.
pub fn deep_copy(heap: &mut Heap, v: &Value) -> Value {
    let payload = Payload::export(heap, std::slice::from_ref(v));
    payload.import(heap).pop().expect("one value in, one value out")
}

/// Well-founded size used by the termination guard.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SizeMeasure(pub f64);

impl SizeMeasure {
    /// Strict descent with a quantum of one: `⌊self⌋ < ⌊other⌋`. NaN never
    /// descends.
    pub fn strictly_below(self, other: SizeMeasure) -> bool {
        self.0.floor() < other.0.floor()
    }
}

impl std::fmt::Display for SizeMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `|n|` for numbers, character count for strings, the number of distinct
/// instances reachable through fields (itself included) for instances, and 0
/// for every other value.
pub fn size(heap: &Heap, v: &Value) -> SizeMeasure {
    match v {
        Value::Number(n) => SizeMeasure(n.abs()),
        Value::Str(s) => SizeMeasure(s.chars().count() as f64),
        Value::Instance(root) => {
            let mut seen = HashSet::new();
            let mut stack = vec![*root];
            while let Some(id) = stack.pop() {
                if !seen.insert(id) {
                    continue;
                }
                for (_, f) in &heap.get(id).fields {
                    if let Value::Instance(next) = f {
                        stack.push(*next);
                    }
                }
            }
            SizeMeasure(seen.len() as f64)
        }
        _ => SizeMeasure(0.0),
    }
}

fn format_number(n: f64, out: &mut String) {
    if n.fract() == 0.0 && n.abs() < 1e15 {
        let _ = write!(out, "{}", n as i64);
    } else {
        let _ = write!(out, "{n}");
    }
}

/// Text used by `println`.
pub fn display(heap: &Heap, v: &Value) -> String {
    let mut out = String::new();
    match v {
        Value::Bool(true) => out.push_str("#true"),
        Value::Bool(false) => out.push_str("#false"),
        Value::Number(n) => format_number(*n, &mut out),
        Value::Str(s) => out.push_str(s),
        Value::Symbol(s) => out.push_str(s),
        Value::Undefined => out.push_str("#undefined"),
        Value::Instance(id) => {
            let _ = write!(out, "<{}>", heap.get(*id).class);
        }
        Value::Actor(r) => {
            let _ = write!(out, "<actor {r}>");
        }
        Value::Reactor(r) => {
            let _ = write!(out, "<reactor {r}>");
        }
        Value::Stream(s) => {
            let _ = write!(out, "<stream {s}>");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::object::{ProcId, ProcKind, ProcRef};

    fn pair(heap: &mut Heap, car: Value, cdr: Value) -> Value {
        let id = heap.alloc("Pair", &["car", "cdr"]);
        heap.set_field(id, "car", car);
        heap.set_field(id, "cdr", cdr);
        Value::Instance(id)
    }

    fn list(heap: &mut Heap, n: usize) -> Value {
        let mut tail = Value::Undefined;
        for i in (0..n).rev() {
            tail = pair(heap, Value::Number(i as f64), tail);
        }
        tail
    }

    #[test]
    fn type_names() {
        let mut heap = Heap::new();
        let p = pair(&mut heap, 1.0.into(), 2.0.into());
        assert_eq!(&*type_of(&heap, &p), "Pair");
        assert_eq!(&*type_of(&heap, &Value::Number(3.0)), "Number");
        let r = ProcRef {
            id: ProcId::MAIN,
            kind: ProcKind::Actor,
            behaviour: "Wind".into(),
        };
        let s = Value::Stream(crate::object::StreamRef {
            owner: r.clone(),
            name: "speed".into(),
            arity: 1,
        });
        assert_eq!(&*type_of(&heap, &s), "Stream");
        assert_eq!(&*type_of(&heap, &Value::Actor(r)), "ActorReference");
    }

    #[test]
    fn structural_versus_identity() {
        let mut heap = Heap::new();
        assert!(equals(&heap, &Value::str("Hey"), &Value::str("Hey")));
        let a = pair(&mut heap, 1.0.into(), 2.0.into());
        let b = pair(&mut heap, 1.0.into(), 2.0.into());
        assert!(equals(&heap, &a, &b));
        assert!(!ref_equals(&a, &b));
        assert!(ref_equals(&a, &a));
        let c = pair(&mut heap, 1.0.into(), 3.0.into());
        assert!(!equals(&heap, &a, &c));
    }

    #[test]
    fn cyclic_copy_and_equality() {
        let mut heap = Heap::new();
        let p = pair(&mut heap, 1.0.into(), 2.0.into());
        let Value::Instance(pid) = p else { unreachable!() };
        heap.set_field(pid, "cdr", p.clone());

        let copy = deep_copy(&mut heap, &p);
        let Value::Instance(cid) = copy else { unreachable!() };
        assert_ne!(pid, cid);
        // the copy's cdr points at the copy, not the original
        assert!(ref_equals(heap.field(cid, "cdr").unwrap(), &copy));
        assert!(equals(&heap, &p, &copy));
        assert!(!ref_equals(&p, &copy));
        assert_eq!(size(&heap, &p), SizeMeasure(1.0));
    }

    #[test]
    fn copy_preserves_sharing() {
        let mut heap = Heap::new();
        let shared = pair(&mut heap, 7.0.into(), Value::Undefined);
        let outer = pair(&mut heap, shared.clone(), shared);
        let copy = deep_copy(&mut heap, &outer);
        let Value::Instance(c) = copy else { unreachable!() };
        let car = heap.field(c, "car").unwrap().clone();
        let cdr = heap.field(c, "cdr").unwrap().clone();
        assert!(ref_equals(&car, &cdr));
        assert_eq!(size(&heap, &copy), SizeMeasure(2.0));
    }

    #[test]
    fn sizes() {
        let mut heap = Heap::new();
        assert_eq!(size(&heap, &Value::Number(-7.0)), SizeMeasure(7.0));
        assert_eq!(size(&heap, &Value::Undefined), SizeMeasure(0.0));
        assert_eq!(size(&heap, &Value::str("héllo")), SizeMeasure(5.0));
        let l = list(&mut heap, 3);
        assert_eq!(size(&heap, &l), SizeMeasure(3.0));
        let Value::Instance(id) = l else { unreachable!() };
        let cdr = heap.field(id, "cdr").unwrap().clone();
        assert_eq!(size(&heap, &cdr), SizeMeasure(2.0));
    }

    #[test]
    fn descent_quantum() {
        assert!(SizeMeasure(4.0).strictly_below(SizeMeasure(5.0)));
        assert!(!SizeMeasure(2.5).strictly_below(SizeMeasure(2.9)));
        assert!(!SizeMeasure(f64::NAN).strictly_below(SizeMeasure(3.0)));
    }

    #[test]
    fn payload_round_trip_between_heaps() {
        let mut a = Heap::new();
        let l = list(&mut a, 4);
        let payload = Payload::export(&a, &[l.clone(), Value::str("x")]);
        let mut b = Heap::new();
        let imported = payload.import(&mut b);
        assert!(equals_across(&a, &l, &b, &imported[0]));
        assert_eq!(b.len(), 4);
        assert_eq!(size(&b, &imported[0]), size(&a, &l));
    }
}
