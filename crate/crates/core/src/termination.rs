//! Run-time termination guard for routine calls.
//!
//! Every routine entry is compared against all active frames of the same
//! `(class, selector)`. Entry is allowed only if, against each of them, some
//! position of the size tuple (receiver first, then arguments) strictly
//! decreased. Mutual recursion between different routines is not checked.

use std::fmt;
use std::sync::Arc;

use crate::object::SizeMeasure;

#[derive(Debug, Clone, PartialEq)]
pub struct GuardFrame {
    pub class: Arc<str>,
    pub selector: Arc<str>,
    /// Position 0 is the receiver, positions 1.. are the arguments.
    pub sizes: Vec<SizeMeasure>,
}

impl GuardFrame {
    pub fn new(class: impl Into<Arc<str>>, selector: impl Into<Arc<str>>, sizes: Vec<SizeMeasure>) -> Self {
        GuardFrame {
            class: class.into(),
            selector: selector.into(),
            sizes,
        }
    }

    fn same_routine(&self, other: &GuardFrame) -> bool {
        self.class == other.class && self.selector == other.selector
    }
}

struct Tuple<'a>(&'a [SizeMeasure]);

impl fmt::Display for Tuple<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error(
    "termination violation in {class}.{selector}: sizes {} do not decrease against active call {}",
    Tuple(entering), Tuple(ancestor)
)]
pub struct TerminationViolation {
    pub class: Arc<str>,
    pub selector: Arc<str>,
    pub entering: Vec<SizeMeasure>,
    pub ancestor: Vec<SizeMeasure>,
}

/// True iff some position of `entering` is strictly below the same position
/// of `ancestor`.
pub fn descends(entering: &[SizeMeasure], ancestor: &[SizeMeasure]) -> bool {
    entering
        .iter()
        .zip(ancestor)
        .any(|(e, a)| e.strictly_below(*a))
}

/// The entry check on its own, without mutating any stack. `trace` receives
/// one line per comparison.
pub fn on_routine_entry(
    stack: &[GuardFrame],
    entering: &GuardFrame,
    mut trace: impl FnMut(String),
) -> Result<(), TerminationViolation> {
    for frame in stack.iter().rev().filter(|f| f.same_routine(entering)) {
        let ok = descends(&entering.sizes, &frame.sizes);
        trace(format!(
            "sct {}.{} {} vs {} -> {}",
            entering.class,
            entering.selector,
            Tuple(&entering.sizes),
            Tuple(&frame.sizes),
            if ok { "allow" } else { "reject" }
        ));
        if !ok {
            return Err(TerminationViolation {
                class: entering.class.clone(),
                selector: entering.selector.clone(),
                entering: entering.sizes.clone(),
                ancestor: frame.sizes.clone(),
            });
        }
    }
    Ok(())
}

/// One guard stack per process.
#[derive(Debug, Default)]
pub struct TerminationGuard {
    stack: Vec<GuardFrame>,
    pub trace: bool,
    traced: Vec<String>,
}

impl TerminationGuard {
    pub fn new(trace: bool) -> Self {
        TerminationGuard {
            trace,
            ..Default::default()
        }
    }

    /// Checks `frame` and pushes it on success.
    pub fn enter(&mut self, frame: GuardFrame) -> Result<(), TerminationViolation> {
        let trace = self.trace;
        let traced = &mut self.traced;
        on_routine_entry(&self.stack, &frame, |line| {
            if trace {
                traced.push(line)
            }
        })?;
        self.stack.push(frame);
        Ok(())
    }

    pub fn exit(&mut self) {
        self.stack.pop();
    }

    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    /// Drops every frame, used after a failed turn.
    pub fn reset(&mut self) {
        self.stack.clear();
    }

    /// Trace lines collected since the last call.
    pub fn take_trace(&mut self) -> Vec<String> {
        std::mem::take(&mut self.traced)
    }
}
