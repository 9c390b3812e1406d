//! Canonical source rendering. Parsing the output yields a structurally
//! equal tree.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;

fn write_str_literal(f: &mut Formatter<'_>, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        if c == '"' || c == '\\' {
            f.write_char('\\')?;
        }
        f.write_char(c)?;
    }
    f.write_char('"')
}

fn write_list<T: Display>(f: &mut Formatter<'_>, items: &[T]) -> fmt::Result {
    for item in items {
        write!(f, " {item}")?;
    }
    Ok(())
}

impl Display for Literal {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number(n) => write!(f, "{n}"),
            Literal::Str(s) => write_str_literal(f, s),
            Literal::Symbol(s) => write!(f, "'{s}"),
            Literal::Bool(true) => f.write_str("#true"),
            Literal::Bool(false) => f.write_str("#false"),
            Literal::Undefined => f.write_str("#undefined"),
            Literal::Pi => f.write_str("#Pi"),
        }
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        use ExprKind::*;
        match &self.kind {
            Literal(lit) => write!(f, "{lit}"),
            Var(name) => f.write_str(name),
            SelfRef => f.write_str("#self"),
            Qualify { owner, stream } => write!(f, "{owner}.{stream}"),
            Def { name, value } => write!(f, "(def {name} {value})"),
            Set { name, value } => write!(f, "(set! {name} {value})"),
            If {
                test,
                then,
                otherwise,
            } => {
                write!(f, "(if {test} {then}")?;
                if let Some(e) = otherwise {
                    write!(f, " {e}")?;
                }
                f.write_char(')')
            }
            Cond { arms, otherwise } => {
                f.write_str("(cond")?;
                for arm in arms {
                    write!(f, " ({}", arm.test)?;
                    write_list(f, &arm.body)?;
                    f.write_char(')')?;
                }
                if let Some(body) = otherwise {
                    f.write_str(" (else")?;
                    write_list(f, body)?;
                    f.write_char(')')?;
                }
                f.write_char(')')
            }
            New { class, ctor, args } => {
                write!(f, "(new {class}")?;
                if let Some(c) = ctor {
                    write!(f, " '{c}")?;
                }
                write_list(f, args)?;
                f.write_char(')')
            }
            Invoke {
                selector,
                receiver,
                args,
            } => {
                write!(f, "({selector} {receiver}")?;
                write_list(f, args)?;
                f.write_char(')')
            }
            SpawnActor {
                behaviour,
                ctor,
                args,
            } => {
                write!(f, "(spawn-actor {behaviour} '{ctor}")?;
                write_list(f, args)?;
                f.write_char(')')
            }
            SpawnReactor { behaviour } => write!(f, "(spawn-reactor {behaviour})"),
            Send {
                target,
                selector,
                args,
            } => {
                write!(f, "(send {target} '{selector}")?;
                write_list(f, args)?;
                f.write_char(')')
            }
            Emit { stream, args } => {
                write!(f, "(emit {stream}")?;
                write_list(f, args)?;
                f.write_char(')')
            }
            Monitor { stream, selector } => write!(f, "(monitor {stream} '{selector})"),
            ReactTo { target, args } => {
                write!(f, "(react-to {target}")?;
                write_list(f, args)?;
                f.write_char(')')
            }
            Tick { behaviour, args } => {
                write!(f, "(tick {behaviour}")?;
                write_list(f, args)?;
                f.write_char(')')
            }
        }
    }
}

impl Display for MemberDef {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "  ({} ({}", self.kind.keyword(), self.selector)?;
        write_list(f, &self.params)?;
        f.write_char(')')?;
        for e in &self.body {
            write!(f, "\n    {e}")?;
        }
        f.write_char(')')
    }
}

fn write_class(f: &mut Formatter<'_>, keyword: &str, c: &ClassDef) -> fmt::Result {
    write!(f, "({keyword} {}", c.name)?;
    for s in &c.streams {
        write!(f, "\n  (def-stream {} {})", s.name, s.arity)?;
    }
    if !c.fields.is_empty() {
        f.write_str("\n  (def-fields")?;
        write_list(f, &c.fields)?;
        f.write_char(')')?;
    }
    for m in &c.members {
        write!(f, "\n{m}")?;
    }
    f.write_str(")\n")
}

impl Display for ReactorBehaviourDef {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match &self.body {
            ReactorBody::Ror { output, inputs } => {
                write!(f, "(reactor {} (ror {output}", self.name)?;
                write_list(f, inputs)?;
                f.write_str("))\n")
            }
            ReactorBody::Graph { stmts, out } => {
                write!(f, "(reactor ({}", self.name)?;
                write_list(f, &self.sources)?;
                f.write_char(')')?;
                for stmt in stmts {
                    match stmt {
                        ReactorStmt::Def(name, e) => write!(f, "\n  (def {name} {e})")?,
                        ReactorStmt::DefValues(names, e) => {
                            f.write_str("\n  (def-values (")?;
                            f.write_str(&names.join(" "))?;
                            write!(f, ") {e})")?;
                        }
                        ReactorStmt::Expr(e) => write!(f, "\n  {e}")?,
                    }
                }
                if let Some(out) = out {
                    f.write_str("\n  (out")?;
                    write_list(f, out)?;
                    f.write_char(')')?;
                }
                f.write_str(")\n")
            }
        }
    }
}

impl Display for ProgramDef {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for c in &self.classes {
            write_class(f, "class", c)?;
        }
        for a in &self.actors {
            write_class(f, "actor", a)?;
        }
        for r in &self.reactors {
            write!(f, "{r}")?;
        }
        Ok(())
    }
}
