use std::collections::HashSet;

use super::ast::*;
use super::lexer::{tokenize, HashConst, Token, TokenKind};
use super::{Pos, SyntaxError, SyntaxErrorKind};

#[derive(Debug, Clone)]
enum Sexp {
    Atom(Token),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(t) => t.pos,
            Sexp::List(_, pos) => *pos,
        }
    }

    fn ident(&self) -> Option<&str> {
        match self {
            Sexp::Atom(Token {
                kind: TokenKind::Ident(name),
                ..
            }) => Some(name),
            _ => None,
        }
    }

    fn head(&self) -> Option<&str> {
        match self {
            Sexp::List(items, _) => items.first().and_then(Sexp::ident),
            Sexp::Atom(_) => None,
        }
    }
}

fn err<T>(kind: SyntaxErrorKind, pos: Pos) -> Result<T, SyntaxError> {
    Err(SyntaxError::new(kind, pos))
}

fn malformed<T>(form: &str, reason: impl Into<String>, pos: Pos) -> Result<T, SyntaxError> {
    err(
        SyntaxErrorKind::Malformed {
            form: form.to_string(),
            reason: reason.into(),
        },
        pos,
    )
}

fn read_all(tokens: &[Token]) -> Result<Vec<Sexp>, SyntaxError> {
    // Explicit stack so deeply nested input cannot overflow the call stack.
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut top = Vec::new();
    for tok in tokens {
        match tok.kind {
            TokenKind::Open => stack.push((Vec::new(), tok.pos)),
            TokenKind::Close => {
                let (items, pos) = stack
                    .pop()
                    .ok_or_else(|| SyntaxError::new(SyntaxErrorKind::UnbalancedClose, tok.pos))?;
                let list = Sexp::List(items, pos);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => top.push(list),
                }
            }
            _ => {
                let atom = Sexp::Atom(tok.clone());
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(atom),
                    None => top.push(atom),
                }
            }
        }
    }
    if let Some((_, pos)) = stack.last() {
        return err(SyntaxErrorKind::UnexpectedEof, *pos);
    }
    Ok(top)
}

/// Tokenizes and parses a whole program.
pub fn parse(source: &str) -> Result<ProgramDef, SyntaxError> {
    parse_program(&tokenize(source)?)
}

pub fn parse_program(tokens: &[Token]) -> Result<ProgramDef, SyntaxError> {
    let forms = read_all(tokens)?;
    let mut program = ProgramDef::default();
    let mut seen: [HashSet<String>; 3] = Default::default();

    for form in &forms {
        let Sexp::List(items, pos) = form else {
            return err(
                SyntaxErrorKind::UnknownTopLevel(atom_text(form)),
                form.pos(),
            );
        };
        let head = form.head().unwrap_or("");
        let (slot, category) = match head {
            "class" => (0, "class"),
            "actor" => (1, "actor behaviour"),
            "reactor" => (2, "reactor behaviour"),
            other => {
                return err(SyntaxErrorKind::UnknownTopLevel(other.to_string()), *pos);
            }
        };
        let name = match slot {
            0 | 1 => {
                let def = parse_class(items, *pos, slot == 1)?;
                let name = def.name.clone();
                if slot == 0 {
                    program.classes.push(def);
                } else {
                    program.actors.push(def);
                }
                name
            }
            _ => {
                let def = parse_reactor(items, *pos)?;
                let name = def.name.clone();
                program.reactors.push(def);
                name
            }
        };
        if !seen[slot].insert(name.clone()) {
            return err(SyntaxErrorKind::DuplicateDefinition { category, name }, *pos);
        }
    }

    let main = program
        .actor("Main")
        .ok_or_else(|| SyntaxError::new(SyntaxErrorKind::MissingMain, Pos::new(1, 1)))?;
    let has_start = main
        .members_of(MemberKind::Constructor)
        .any(|m| m.selector == "start" && m.params.is_empty());
    if !has_start {
        return err(SyntaxErrorKind::MissingStart, main.pos);
    }
    Ok(program)
}

fn atom_text(s: &Sexp) -> String {
    match s {
        Sexp::Atom(t) => t.lexeme.clone(),
        Sexp::List(..) => "(...)".into(),
    }
}

fn expect_ident<'a>(s: &'a Sexp, what: &'static str) -> Result<&'a str, SyntaxError> {
    s.ident()
        .ok_or_else(|| SyntaxError::new(SyntaxErrorKind::Expected(what), s.pos()))
}

fn expect_symbol(s: &Sexp, what: &'static str) -> Result<String, SyntaxError> {
    match s {
        Sexp::Atom(Token {
            kind: TokenKind::Symbol(name),
            ..
        }) => Ok(name.clone()),
        _ => err(SyntaxErrorKind::Expected(what), s.pos()),
    }
}

fn parse_class(items: &[Sexp], pos: Pos, actor: bool) -> Result<ClassDef, SyntaxError> {
    let name_sexp = items
        .get(1)
        .ok_or_else(|| SyntaxError::new(SyntaxErrorKind::Expected("a behaviour name"), pos))?;
    let name = expect_ident(name_sexp, "a name")?.to_string();
    let mut def = ClassDef {
        name: name.clone(),
        fields: Vec::new(),
        streams: Vec::new(),
        members: Vec::new(),
        pos,
    };
    let mut member_names = HashSet::new();
    let mut field_names = HashSet::new();

    for member in &items[2..] {
        let Sexp::List(parts, mpos) = member else {
            return err(SyntaxErrorKind::UnknownMember(atom_text(member)), member.pos());
        };
        let head = member.head().unwrap_or("");
        let kind = match head {
            "def-fields" => {
                for f in &parts[1..] {
                    let field = expect_ident(f, "a field name")?.to_string();
                    if !field_names.insert(field.clone()) {
                        return err(
                            SyntaxErrorKind::DuplicateMember {
                                owner: name.clone(),
                                member: field,
                            },
                            f.pos(),
                        );
                    }
                    def.fields.push(field);
                }
                continue;
            }
            "def-stream" if actor => {
                if parts.len() != 3 {
                    return malformed("def-stream", "expected a name and an arity", *mpos);
                }
                let stream = expect_ident(&parts[1], "a stream name")?.to_string();
                let arity = match &parts[2] {
                    Sexp::Atom(Token {
                        kind: TokenKind::Number(n),
                        ..
                    }) if *n >= 1.0 && n.fract() == 0.0 => *n as usize,
                    other => {
                        return malformed(
                            "def-stream",
                            "arity must be a positive whole number",
                            other.pos(),
                        )
                    }
                };
                if def.stream(&stream).is_some() {
                    return err(
                        SyntaxErrorKind::DuplicateMember {
                            owner: name.clone(),
                            member: stream,
                        },
                        *mpos,
                    );
                }
                def.streams.push(StreamDecl {
                    name: stream,
                    arity,
                });
                continue;
            }
            "def-constructor" => MemberKind::Constructor,
            "def-method" => MemberKind::Method,
            "def-routine" => MemberKind::Routine,
            other => {
                return err(SyntaxErrorKind::UnknownMember(other.to_string()), *mpos);
            }
        };
        let Some(Sexp::List(signature, spos)) = parts.get(1) else {
            return malformed(kind.keyword(), "expected `(selector params...)`", *mpos);
        };
        let selector = signature
            .first()
            .and_then(Sexp::ident)
            .ok_or_else(|| SyntaxError::new(SyntaxErrorKind::Expected("a selector"), *spos))?
            .to_string();
        let mut params = Vec::new();
        for p in &signature[1..] {
            let param = expect_ident(p, "a parameter name")?.to_string();
            if params.contains(&param) {
                return malformed(kind.keyword(), format!("parameter `{param}` repeated"), p.pos());
            }
            params.push(param);
        }
        if !member_names.insert(selector.clone()) {
            return err(
                SyntaxErrorKind::DuplicateMember {
                    owner: name.clone(),
                    member: selector,
                },
                *mpos,
            );
        }
        let body = parts[2..]
            .iter()
            .map(|e| parse_expr(e, false))
            .collect::<Result<Vec<_>, _>>()?;
        def.members.push(MemberDef {
            kind,
            selector,
            params,
            body,
            pos: *mpos,
        });
    }
    Ok(def)
}

fn parse_reactor(items: &[Sexp], pos: Pos) -> Result<ReactorBehaviourDef, SyntaxError> {
    match items.get(1) {
        // (reactor Name (ror Out In...))
        Some(name @ Sexp::Atom(_)) => {
            let name = expect_ident(name, "a reactor name")?.to_string();
            let [ror @ Sexp::List(parts, rpos)] = &items[2..] else {
                return malformed("reactor", "the short form takes exactly one `ror`", pos);
            };
            if ror.head() != Some("ror") {
                return malformed("reactor", "the short form body must be a `ror`", ror.pos());
            }
            if parts.len() < 3 {
                return malformed("ror", "expected an output and at least one input", *rpos);
            }
            let output = expect_ident(&parts[1], "a behaviour name")?.to_string();
            let inputs = parts[2..]
                .iter()
                .map(|p| expect_ident(p, "a behaviour name").map(str::to_string))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ReactorBehaviourDef {
                name,
                sources: Vec::new(),
                body: ReactorBody::Ror { output, inputs },
                pos,
            })
        }
        Some(Sexp::List(signature, spos)) => {
            let name = signature
                .first()
                .and_then(Sexp::ident)
                .ok_or_else(|| SyntaxError::new(SyntaxErrorKind::Expected("a reactor name"), *spos))?
                .to_string();
            let mut sources = Vec::new();
            for s in &signature[1..] {
                let src = expect_ident(s, "a source name")?.to_string();
                if sources.contains(&src) {
                    return malformed("reactor", format!("source `{src}` repeated"), s.pos());
                }
                sources.push(src);
            }
            let body_forms = &items[2..];
            let mut stmts = Vec::new();
            let mut out = None;
            for (i, form) in body_forms.iter().enumerate() {
                let is_last = i + 1 == body_forms.len();
                match form.head() {
                    Some("out") => {
                        if !is_last {
                            return err(SyntaxErrorKind::Misplaced("out".into()), form.pos());
                        }
                        let Sexp::List(parts, _) = form else { unreachable!() };
                        out = Some(
                            parts[1..]
                                .iter()
                                .map(|e| parse_expr(e, true))
                                .collect::<Result<Vec<_>, _>>()?,
                        );
                    }
                    Some("def") => {
                        let Sexp::List(parts, dpos) = form else { unreachable!() };
                        if parts.len() != 3 {
                            return malformed("def", "expected a name and a value", *dpos);
                        }
                        let name = expect_ident(&parts[1], "a name")?.to_string();
                        stmts.push(ReactorStmt::Def(name, parse_expr(&parts[2], true)?));
                    }
                    Some("def-values") => {
                        let Sexp::List(parts, dpos) = form else { unreachable!() };
                        let (Some(Sexp::List(names, _)), Some(value), 3) =
                            (parts.get(1), parts.get(2), parts.len())
                        else {
                            return malformed("def-values", "expected `(names...)` and a value", *dpos);
                        };
                        let names = names
                            .iter()
                            .map(|n| expect_ident(n, "a name").map(str::to_string))
                            .collect::<Result<Vec<_>, _>>()?;
                        stmts.push(ReactorStmt::DefValues(names, parse_expr(value, true)?));
                    }
                    _ => stmts.push(ReactorStmt::Expr(parse_expr(form, true)?)),
                }
            }
            Ok(ReactorBehaviourDef {
                name,
                sources,
                body: ReactorBody::Graph { stmts, out },
                pos,
            })
        }
        None => err(SyntaxErrorKind::Expected("a reactor signature"), pos),
    }
}

fn parse_exprs(items: &[Sexp], reactor: bool) -> Result<Vec<Expr>, SyntaxError> {
    items.iter().map(|e| parse_expr(e, reactor)).collect()
}

/// Parses a sequence of standalone expressions, as found in a method body.
/// `reactor` enables reactor-only forms such as `tick`.
pub fn parse_expressions(source: &str, reactor: bool) -> Result<Vec<Expr>, SyntaxError> {
    let forms = read_all(&tokenize(source)?)?;
    parse_exprs(&forms, reactor)
}

fn parse_expr(s: &Sexp, reactor: bool) -> Result<Expr, SyntaxError> {
    let pos = s.pos();
    let kind = match s {
        Sexp::Atom(tok) => match &tok.kind {
            TokenKind::Number(n) => ExprKind::Literal(Literal::Number(*n)),
            TokenKind::Str(s) => ExprKind::Literal(Literal::Str(s.clone())),
            TokenKind::Symbol(s) => ExprKind::Literal(Literal::Symbol(s.clone())),
            TokenKind::Ident(name) => ExprKind::Var(name.clone()),
            TokenKind::Qualified(owner, stream) => ExprKind::Qualify {
                owner: owner.clone(),
                stream: stream.clone(),
            },
            TokenKind::Hash(h) => match h {
                HashConst::True => ExprKind::Literal(Literal::Bool(true)),
                HashConst::False => ExprKind::Literal(Literal::Bool(false)),
                HashConst::Undefined => ExprKind::Literal(Literal::Undefined),
                HashConst::Pi => ExprKind::Literal(Literal::Pi),
                HashConst::SelfRef => ExprKind::SelfRef,
            },
            TokenKind::Open | TokenKind::Close => unreachable!("reader consumes parentheses"),
        },
        Sexp::List(items, _) => {
            let Some(first) = items.first() else {
                return err(SyntaxErrorKind::EmptyForm, pos);
            };
            let head = first
                .ident()
                .ok_or_else(|| SyntaxError::new(SyntaxErrorKind::Expected("a selector or special form"), first.pos()))?;
            let rest = &items[1..];
            parse_form(head, rest, pos, reactor)?
        }
    };
    Ok(Expr::new(kind, pos))
}

fn parse_form(head: &str, rest: &[Sexp], pos: Pos, reactor: bool) -> Result<ExprKind, SyntaxError> {
    let boxed = |s: &Sexp| parse_expr(s, reactor).map(Box::new);
    Ok(match head {
        "def" => {
            let [name, value] = rest else {
                return malformed("def", "expected a name and a value", pos);
            };
            ExprKind::Def {
                name: expect_ident(name, "a name")?.to_string(),
                value: boxed(value)?,
            }
        }
        "set!" => {
            let [name, value] = rest else {
                return malformed("set!", "expected a name and a value", pos);
            };
            ExprKind::Set {
                name: expect_ident(name, "a name")?.to_string(),
                value: boxed(value)?,
            }
        }
        "if" => match rest {
            [test, then] => ExprKind::If {
                test: boxed(test)?,
                then: boxed(then)?,
                otherwise: None,
            },
            [test, then, otherwise] => ExprKind::If {
                test: boxed(test)?,
                then: boxed(then)?,
                otherwise: Some(boxed(otherwise)?),
            },
            _ => return malformed("if", "expected a test, a branch and an optional else branch", pos),
        },
        "cond" => {
            let mut arms = Vec::new();
            let mut otherwise = None;
            for (i, arm) in rest.iter().enumerate() {
                let Sexp::List(parts, apos) = arm else {
                    return malformed("cond", "each arm must be a list", arm.pos());
                };
                if parts.is_empty() {
                    return malformed("cond", "empty arm", *apos);
                }
                if parts[0].ident() == Some("else") {
                    if i + 1 != rest.len() {
                        return malformed("cond", "`else` must be the last arm", *apos);
                    }
                    otherwise = Some(parse_exprs(&parts[1..], reactor)?);
                } else {
                    arms.push(CondArm {
                        test: parse_expr(&parts[0], reactor)?,
                        body: parse_exprs(&parts[1..], reactor)?,
                    });
                }
            }
            ExprKind::Cond { arms, otherwise }
        }
        "new" => {
            let Some(class) = rest.first() else {
                return malformed("new", "expected a class name", pos);
            };
            let class = expect_ident(class, "a class name")?.to_string();
            let (ctor, args) = match rest.get(1) {
                None => (None, Vec::new()),
                Some(sym) => (
                    Some(expect_symbol(sym, "a constructor symbol")?),
                    parse_exprs(&rest[2..], reactor)?,
                ),
            };
            ExprKind::New { class, ctor, args }
        }
        "spawn-actor" => {
            let (Some(beh), Some(ctor)) = (rest.first(), rest.get(1)) else {
                return malformed("spawn-actor", "expected a behaviour and a constructor symbol", pos);
            };
            ExprKind::SpawnActor {
                behaviour: expect_ident(beh, "a behaviour name")?.to_string(),
                ctor: expect_symbol(ctor, "a constructor symbol")?,
                args: parse_exprs(&rest[2..], reactor)?,
            }
        }
        "spawn-reactor" => {
            let [beh] = rest else {
                return malformed("spawn-reactor", "expected a behaviour name", pos);
            };
            ExprKind::SpawnReactor {
                behaviour: expect_ident(beh, "a behaviour name")?.to_string(),
            }
        }
        "send" => {
            let (Some(target), Some(sel)) = (rest.first(), rest.get(1)) else {
                return malformed("send", "expected a target and a selector symbol", pos);
            };
            ExprKind::Send {
                target: boxed(target)?,
                selector: expect_symbol(sel, "a selector symbol")?,
                args: parse_exprs(&rest[2..], reactor)?,
            }
        }
        "emit" => {
            let Some(stream) = rest.first() else {
                return malformed("emit", "expected a stream name", pos);
            };
            ExprKind::Emit {
                stream: expect_ident(stream, "a stream name")?.to_string(),
                args: parse_exprs(&rest[1..], reactor)?,
            }
        }
        "monitor" => {
            let [stream, sel] = rest else {
                return malformed("monitor", "expected a stream and a selector symbol", pos);
            };
            ExprKind::Monitor {
                stream: boxed(stream)?,
                selector: expect_symbol(sel, "a selector symbol")?,
            }
        }
        "react-to" => {
            let Some(target) = rest.first() else {
                return malformed("react-to", "expected a reactor", pos);
            };
            ExprKind::ReactTo {
                target: boxed(target)?,
                args: parse_exprs(&rest[1..], reactor)?,
            }
        }
        "tick" => {
            if !reactor {
                return err(SyntaxErrorKind::Misplaced("tick".into()), pos);
            }
            let Some(beh) = rest.first() else {
                return malformed("tick", "expected a behaviour name", pos);
            };
            ExprKind::Tick {
                behaviour: expect_ident(beh, "a behaviour name")?.to_string(),
                args: parse_exprs(&rest[1..], reactor)?,
            }
        }
        "ror" | "out" | "def-values" | "else" | "def-fields" | "def-stream" | "def-constructor"
        | "def-method" | "def-routine" | "class" | "actor" | "reactor" => {
            return err(SyntaxErrorKind::Misplaced(head.to_string()), pos);
        }
        selector => {
            let Some(receiver) = rest.first() else {
                return malformed(selector, "an invocation needs a receiver", pos);
            };
            ExprKind::Invoke {
                selector: selector.to_string(),
                receiver: boxed(receiver)?,
                args: parse_exprs(&rest[1..], reactor)?,
            }
        }
    })
}
