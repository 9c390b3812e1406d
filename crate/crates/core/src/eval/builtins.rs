//! Members every program gets for free: arithmetic on numbers, the universal
//! routines, `println`, `sleep` and the `Random` class.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use super::error::{EvalResult, RuntimeError, RuntimeErrorKind};
use super::Interp;
use crate::object::{display, equals, ref_equals, type_of, Native, Object, Value};
use crate::syntax::MemberKind;

pub const RANDOM_CLASS: &str = "Random";

/// Class names that user programs may not redefine.
pub const RESERVED_CLASSES: [&str; 10] = [
    "Boolean",
    "Number",
    "String",
    "Symbol",
    "Undefined",
    "ActorReference",
    "ReactorReference",
    "Stream",
    "Object",
    RANDOM_CLASS,
];

const NUMBER_ROUTINES: [&str; 10] = ["+", "-", "*", "/", "expt", "round", "<", ">", "<=", ">="];
const UNIVERSAL_ROUTINES: [&str; 3] = ["type-of", "equal?", "eq?"];

fn is_random(interp: &Interp<'_, '_>, v: &Value) -> bool {
    matches!(v, Value::Instance(id) if matches!(interp.heap.get(*id).native, Some(Native::Random(_))))
}

/// Kind of the built-in member `selector` on `receiver`, if there is one.
pub fn builtin_kind(interp: &Interp<'_, '_>, receiver: &Value, selector: &str) -> Option<MemberKind> {
    if UNIVERSAL_ROUTINES.contains(&selector) {
        return Some(MemberKind::Routine);
    }
    match receiver {
        Value::Number(_) if NUMBER_ROUTINES.contains(&selector) => Some(MemberKind::Routine),
        Value::Number(_) if selector == "sleep" => Some(MemberKind::Method),
        Value::Str(_) if selector == "println" => Some(MemberKind::Method),
        v if selector == "integer-between" && is_random(interp, v) => Some(MemberKind::Method),
        _ => None,
    }
}

fn arity(selector: &str, expected: &str, got: usize) -> RuntimeError {
    RuntimeErrorKind::Arity {
        what: selector.to_string(),
        expected: expected.to_string(),
        got,
    }
    .into()
}

fn expect_exact(selector: &str, args: &[Value], n: usize) -> EvalResult<()> {
    if args.len() == n {
        Ok(())
    } else {
        Err(arity(selector, &n.to_string(), args.len()))
    }
}

fn number(interp: &Interp<'_, '_>, selector: &str, v: &Value) -> EvalResult<f64> {
    v.as_number().ok_or_else(|| {
        RuntimeErrorKind::Type {
            op: selector.to_string(),
            expected: "a number",
            got: type_of(interp.heap, v).to_string(),
        }
        .into()
    })
}

fn number_routine(interp: &Interp<'_, '_>, n: f64, selector: &str, args: &[Value]) -> EvalResult<Value> {
    let nums = args
        .iter()
        .map(|a| number(interp, selector, a))
        .collect::<EvalResult<Vec<f64>>>()?;
    let binary = |f: fn(f64, f64) -> Value| -> EvalResult<Value> {
        expect_exact(selector, args, 1)?;
        Ok(f(n, nums[0]))
    };
    match selector {
        "+" | "*" => {
            if nums.is_empty() {
                return Err(arity(selector, "at least 1", 0));
            }
            Ok(Value::Number(if selector == "+" {
                nums.iter().fold(n, |acc, x| acc + x)
            } else {
                nums.iter().fold(n, |acc, x| acc * x)
            }))
        }
        "-" => binary(|a, b| Value::Number(a - b)),
        "/" => binary(|a, b| Value::Number(a / b)),
        "expt" => binary(|a, b| Value::Number(a.powf(b))),
        "<" => binary(|a, b| Value::Bool(a < b)),
        ">" => binary(|a, b| Value::Bool(a > b)),
        "<=" => binary(|a, b| Value::Bool(a <= b)),
        ">=" => binary(|a, b| Value::Bool(a >= b)),
        "round" => {
            expect_exact(selector, args, 0)?;
            Ok(Value::Number(n.round()))
        }
        _ => unreachable!("builtin_kind admitted `{selector}`"),
    }
}

/// Runs a built-in member. Purity has already been checked by the caller.
pub fn call_builtin(
    interp: &mut Interp<'_, '_>,
    receiver: &Value,
    selector: &str,
    args: &[Value],
) -> EvalResult<Value> {
    match selector {
        "type-of" => {
            expect_exact(selector, args, 0)?;
            return Ok(Value::Symbol(type_of(interp.heap, receiver)));
        }
        "equal?" => {
            expect_exact(selector, args, 1)?;
            return Ok(Value::Bool(equals(interp.heap, receiver, &args[0])));
        }
        "eq?" => {
            expect_exact(selector, args, 1)?;
            return Ok(Value::Bool(ref_equals(receiver, &args[0])));
        }
        _ => {}
    }
    match (receiver, selector) {
        (Value::Number(ms), "sleep") => {
            expect_exact(selector, args, 0)?;
            if *ms < 0.0 || ms.is_nan() {
                return Err(RuntimeErrorKind::Invalid(format!("cannot sleep for {ms} ms")).into());
            }
            interp.host.sleep(*ms);
            Ok(Value::Undefined)
        }
        (Value::Number(n), _) => number_routine(interp, *n, selector, args),
        (Value::Str(_), "println") => {
            let mut line = display(interp.heap, receiver);
            for a in args {
                line.push_str(&display(interp.heap, a));
            }
            interp.host.print(line);
            Ok(Value::Undefined)
        }
        (Value::Instance(id), "integer-between") => {
            expect_exact(selector, args, 2)?;
            let lo = number(interp, selector, &args[0])?.ceil();
            let hi = number(interp, selector, &args[1])?.floor();
            if lo > hi || !lo.is_finite() || !hi.is_finite() {
                return Err(RuntimeErrorKind::Invalid(format!(
                    "integer-between: empty range {lo}..{hi}"
                ))
                .into());
            }
            let Some(Native::Random(rng)) = &mut interp.heap.get_mut(*id).native else {
                unreachable!("builtin_kind checked for a Random instance")
            };
            Ok(Value::Number(rng.gen_range(lo as i64..=hi as i64) as f64))
        }
        _ => unreachable!("builtin_kind admitted `{selector}`"),
    }
}

/// A fresh `Random` instance seeded with `seed`.
pub fn new_random(seed: u64) -> Object {
    Object {
        class: RANDOM_CLASS.into(),
        fields: Vec::new(),
        native: Some(Native::Random(ChaCha8Rng::seed_from_u64(seed))),
    }
}
