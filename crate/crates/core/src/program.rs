//! Loading: parse, static purity check, name checks and reactor compilation.

use std::sync::Arc;

use thiserror::Error;

use crate::dag::{compile_all, CompileError, Dag};
use crate::eval::builtins::RESERVED_CLASSES;
use crate::eval::DagTable;
use crate::syntax::{check_program_purity, parse, Pos, ProgramDef, PurityViolation, SyntaxError};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("purity violation at {0}")]
    Purity(#[from] PurityViolation),
    #[error("reactor compilation failed: {0}")]
    Compile(#[from] CompileError),
    #[error("{pos}: `{name}` is a built-in class name")]
    Reserved { name: String, pos: Pos },
    #[error("{pos}: `{name}` names both a {first} and a {second}")]
    NameClash {
        name: String,
        first: &'static str,
        second: &'static str,
        pos: Pos,
    },
}

/// A loaded program: its definitions plus every reactor compiled to a graph.
#[derive(Debug, Clone)]
pub struct Program {
    pub def: ProgramDef,
    pub dags: DagTable,
}

impl Program {
    pub fn dag(&self, reactor: &str) -> Option<&Arc<Dag>> {
        self.dags.get(reactor)
    }
}

pub fn load(source: &str) -> Result<Program, LoadError> {
    let def = parse(source)?;
    check_program_purity(&def)?;
    check_names(&def)?;
    let dags = compile_all(&def)?;
    Ok(Program { def, dags })
}

fn check_names(def: &ProgramDef) -> Result<(), LoadError> {
    let named = def
        .classes
        .iter()
        .map(|c| ("class", c.name.as_str(), c.pos))
        .chain(def.actors.iter().map(|a| ("actor", a.name.as_str(), a.pos)))
        .chain(def.reactors.iter().map(|r| ("reactor", r.name.as_str(), r.pos)));
    let mut seen: Vec<(&'static str, &str)> = Vec::new();
    for (category, name, pos) in named {
        if RESERVED_CLASSES.contains(&name) {
            return Err(LoadError::Reserved {
                name: name.to_string(),
                pos,
            });
        }
        if let Some((first, _)) = seen.iter().find(|(_, n)| *n == name) {
            return Err(LoadError::NameClash {
                name: name.to_string(),
                first,
                second: category,
                pos,
            });
        }
        seen.push((category, name));
    }
    Ok(())
}
