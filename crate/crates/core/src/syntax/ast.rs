use super::Pos;

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Number(f64),
    Str(String),
    Symbol(String),
    Bool(bool),
    Undefined,
    Pi,
}

/// An expression node. Equality ignores source positions.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CondArm {
    pub test: Expr,
    pub body: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Literal(Literal),
    Var(String),
    SelfRef,
    Qualify {
        owner: String,
        stream: String,
    },
    Def {
        name: String,
        value: Box<Expr>,
    },
    Set {
        name: String,
        value: Box<Expr>,
    },
    If {
        test: Box<Expr>,
        then: Box<Expr>,
        otherwise: Option<Box<Expr>>,
    },
    Cond {
        arms: Vec<CondArm>,
        otherwise: Option<Vec<Expr>>,
    },
    New {
        class: String,
        ctor: Option<String>,
        args: Vec<Expr>,
    },
    /// `(selector receiver args...)`
    Invoke {
        selector: String,
        receiver: Box<Expr>,
        args: Vec<Expr>,
    },
    SpawnActor {
        behaviour: String,
        ctor: String,
        args: Vec<Expr>,
    },
    SpawnReactor {
        behaviour: String,
    },
    Send {
        target: Box<Expr>,
        selector: String,
        args: Vec<Expr>,
    },
    Emit {
        stream: String,
        args: Vec<Expr>,
    },
    Monitor {
        stream: Box<Expr>,
        selector: String,
    },
    ReactTo {
        target: Box<Expr>,
        args: Vec<Expr>,
    },
    Tick {
        behaviour: String,
        args: Vec<Expr>,
    },
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Self {
        Expr { kind, pos }
    }

    /// Direct subexpressions, in evaluation order.
    pub fn children(&self) -> Vec<&Expr> {
        use ExprKind::*;
        match &self.kind {
            Literal(_) | Var(_) | SelfRef | Qualify { .. } | SpawnReactor { .. } => vec![],
            Def { value, .. } | Set { value, .. } => vec![value],
            If {
                test,
                then,
                otherwise,
            } => {
                let mut v = vec![&**test, &**then];
                v.extend(otherwise.as_deref());
                v
            }
            Cond { arms, otherwise } => {
                let mut v = Vec::new();
                for arm in arms {
                    v.push(&arm.test);
                    v.extend(arm.body.iter());
                }
                if let Some(body) = otherwise {
                    v.extend(body.iter());
                }
                v
            }
            New { args, .. } | SpawnActor { args, .. } | Emit { args, .. } | Tick { args, .. } => {
                args.iter().collect()
            }
            Invoke { receiver, args, .. } => {
                let mut v = vec![&**receiver];
                v.extend(args.iter());
                v
            }
            Send { target, args, .. } | ReactTo { target, args } => {
                let mut v = vec![&**target];
                v.extend(args.iter());
                v
            }
            Monitor { stream, .. } => vec![stream],
        }
    }

    /// The special-form keyword this expression was written with, if any.
    pub fn form_name(&self) -> Option<&'static str> {
        use ExprKind::*;
        Some(match &self.kind {
            Def { .. } => "def",
            Set { .. } => "set!",
            If { .. } => "if",
            Cond { .. } => "cond",
            New { .. } => "new",
            SpawnActor { .. } => "spawn-actor",
            SpawnReactor { .. } => "spawn-reactor",
            Send { .. } => "send",
            Emit { .. } => "emit",
            Monitor { .. } => "monitor",
            ReactTo { .. } => "react-to",
            Tick { .. } => "tick",
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MemberKind {
    Constructor,
    Method,
    Routine,
}

impl MemberKind {
    pub fn keyword(self) -> &'static str {
        match self {
            MemberKind::Constructor => "def-constructor",
            MemberKind::Method => "def-method",
            MemberKind::Routine => "def-routine",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MemberDef {
    pub kind: MemberKind,
    pub selector: String,
    pub params: Vec<String>,
    pub body: Vec<Expr>,
    pub pos: Pos,
}

impl PartialEq for MemberDef {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.selector == other.selector
            && self.params == other.params
            && self.body == other.body
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamDecl {
    pub name: String,
    pub arity: usize,
}

/// A class or an actor behaviour. Classes never declare streams.
#[derive(Debug, Clone)]
pub struct ClassDef {
    pub name: String,
    pub fields: Vec<String>,
    pub streams: Vec<StreamDecl>,
    pub members: Vec<MemberDef>,
    pub pos: Pos,
}

impl PartialEq for ClassDef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.fields == other.fields
            && self.streams == other.streams
            && self.members == other.members
    }
}

impl ClassDef {
    pub fn member(&self, selector: &str) -> Option<&MemberDef> {
        self.members.iter().find(|m| m.selector == selector)
    }

    pub fn members_of(&self, kind: MemberKind) -> impl Iterator<Item = &MemberDef> {
        self.members.iter().filter(move |m| m.kind == kind)
    }

    pub fn stream(&self, name: &str) -> Option<&StreamDecl> {
        self.streams.iter().find(|s| s.name == name)
    }
}

pub type ActorBehaviourDef = ClassDef;

#[derive(Debug, Clone, PartialEq)]
pub enum ReactorStmt {
    Def(String, Expr),
    DefValues(Vec<String>, Expr),
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReactorBody {
    Graph {
        stmts: Vec<ReactorStmt>,
        out: Option<Vec<Expr>>,
    },
    /// `(ror output input1 input2 ...)`
    Ror { output: String, inputs: Vec<String> },
}

#[derive(Debug, Clone)]
pub struct ReactorBehaviourDef {
    pub name: String,
    /// Empty for the `ror` short form, whose sources come from its inputs.
    pub sources: Vec<String>,
    pub body: ReactorBody,
    pub pos: Pos,
}

impl PartialEq for ReactorBehaviourDef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.sources == other.sources && self.body == other.body
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProgramDef {
    pub classes: Vec<ClassDef>,
    pub actors: Vec<ActorBehaviourDef>,
    pub reactors: Vec<ReactorBehaviourDef>,
}

impl ProgramDef {
    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn actor(&self, name: &str) -> Option<&ActorBehaviourDef> {
        self.actors.iter().find(|a| a.name == name)
    }

    pub fn reactor(&self, name: &str) -> Option<&ReactorBehaviourDef> {
        self.reactors.iter().find(|r| r.name == name)
    }
}
