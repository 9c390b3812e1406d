use std::fmt;

use super::ast::*;
use super::Pos;

/// Special forms that may not appear in routines or reactor bodies.
pub const FORBIDDEN_FORMS: [&str; 7] = [
    "set!",
    "spawn-actor",
    "spawn-reactor",
    "send",
    "emit",
    "monitor",
    "react-to",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PurityContext {
    Routine,
    ReactorBody,
}

impl fmt::Display for PurityContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PurityContext::Routine => "routine",
            PurityContext::ReactorBody => "reactor body",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: `{form}` is not allowed in {context} `{owner}`")]
pub struct PurityViolation {
    pub form: &'static str,
    pub pos: Pos,
    pub context: PurityContext,
    pub owner: String,
}

fn first_forbidden(expr: &Expr) -> Option<(&'static str, Pos)> {
    // Iterative pre-order walk; reports the textually first offending form.
    let mut stack = vec![expr];
    while let Some(e) = stack.pop() {
        if let Some(form) = e.form_name() {
            if let Some(f) = FORBIDDEN_FORMS.iter().find(|f| **f == form) {
                return Some((f, e.pos));
            }
        }
        let mut children = e.children();
        children.reverse();
        stack.extend(children);
    }
    None
}

/// Succeeds iff no subexpression of `body` is one of [`FORBIDDEN_FORMS`].
pub fn check_purity<'a>(
    body: impl IntoIterator<Item = &'a Expr>,
    context: PurityContext,
    owner: &str,
) -> Result<(), PurityViolation> {
    for expr in body {
        if let Some((form, pos)) = first_forbidden(expr) {
            return Err(PurityViolation {
                form,
                pos,
                context,
                owner: owner.to_string(),
            });
        }
    }
    Ok(())
}

/// Checks every routine (in classes and actor behaviours) and every reactor body.
pub fn check_program_purity(program: &ProgramDef) -> Result<(), PurityViolation> {
    for class in program.classes.iter().chain(&program.actors) {
        for routine in class.members_of(MemberKind::Routine) {
            check_purity(
                &routine.body,
                PurityContext::Routine,
                &format!("{}.{}", class.name, routine.selector),
            )?;
        }
    }
    for reactor in &program.reactors {
        if let ReactorBody::Graph { stmts, out } = &reactor.body {
            let exprs = stmts
                .iter()
                .map(|s| match s {
                    ReactorStmt::Def(_, e) | ReactorStmt::DefValues(_, e) | ReactorStmt::Expr(e) => e,
                })
                .chain(out.iter().flatten());
            check_purity(exprs, PurityContext::ReactorBody, &reactor.name)?;
        }
    }
    Ok(())
}
