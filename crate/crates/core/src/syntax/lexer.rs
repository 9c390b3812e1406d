use std::fmt;

use super::{Pos, SyntaxError, SyntaxErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HashConst {
    True,
    False,
    Undefined,
    SelfRef,
    Pi,
}

impl HashConst {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "true" => HashConst::True,
            "false" => HashConst::False,
            "undefined" => HashConst::Undefined,
            "self" => HashConst::SelfRef,
            "Pi" => HashConst::Pi,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HashConst::True => "#true",
            HashConst::False => "#false",
            HashConst::Undefined => "#undefined",
            HashConst::SelfRef => "#self",
            HashConst::Pi => "#Pi",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Open,
    Close,
    Number(f64),
    Str(String),
    Symbol(String),
    Ident(String),
    /// `owner.stream`; exactly one dot between two nonempty identifiers.
    Qualified(String, String),
    Hash(HashConst),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub pos: Pos,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lexeme)
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || "-+*/<>=!?_%&^~:.$".contains(c)
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    column: u32,
}

impl Cursor<'_> {
    fn pos(&self) -> Pos {
        Pos::new(self.line, self.column)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn take_atom(&mut self) -> String {
        let mut text = String::new();
        while let Some(c) = self.peek() {
            if !is_ident_char(c) {
                break;
            }
            text.push(c);
            self.bump();
        }
        text
    }
}

/// Splits source text into tokens. `//` comments run to the end of the line
/// and are dropped.
pub fn tokenize(source: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut cur = Cursor {
        chars: source.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        let pos = cur.pos();
        match c {
            c if c.is_whitespace() => {
                cur.bump();
            }
            '/' if source_has_comment(&cur) => {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            }
            '(' => {
                cur.bump();
                tokens.push(Token {
                    kind: TokenKind::Open,
                    lexeme: "(".into(),
                    pos,
                });
            }
            ')' => {
                cur.bump();
                tokens.push(Token {
                    kind: TokenKind::Close,
                    lexeme: ")".into(),
                    pos,
                });
            }
            '"' => tokens.push(lex_string(&mut cur, pos)?),
            '\'' => {
                cur.bump();
                let name = cur.take_atom();
                if name.is_empty() || name.contains('.') {
                    return Err(SyntaxError::new(SyntaxErrorKind::BadSymbol, pos));
                }
                tokens.push(Token {
                    lexeme: format!("'{name}"),
                    kind: TokenKind::Symbol(name),
                    pos,
                });
            }
            '#' => {
                cur.bump();
                let name = cur.take_atom();
                let hash = HashConst::from_name(&name).ok_or_else(|| {
                    SyntaxError::new(SyntaxErrorKind::UnknownHashConstant(name.clone()), pos)
                })?;
                tokens.push(Token {
                    kind: TokenKind::Hash(hash),
                    lexeme: format!("#{name}"),
                    pos,
                });
            }
            c if is_ident_char(c) => {
                let text = cur.take_atom();
                tokens.push(classify_atom(text, pos)?);
            }
            other => {
                return Err(SyntaxError::new(
                    SyntaxErrorKind::IllegalCharacter(other),
                    pos,
                ))
            }
        }
    }
    Ok(tokens)
}

fn source_has_comment(cur: &Cursor<'_>) -> bool {
    let mut ahead = cur.chars.clone();
    ahead.next();
    ahead.next() == Some('/')
}

fn lex_string(cur: &mut Cursor<'_>, pos: Pos) -> Result<Token, SyntaxError> {
    cur.bump();
    let mut lexeme = String::from("\"");
    let mut text = String::new();
    loop {
        match cur.bump() {
            None => return Err(SyntaxError::new(SyntaxErrorKind::UnterminatedString, pos)),
            Some('"') => {
                lexeme.push('"');
                break;
            }
            Some('\\') => {
                let esc_pos = cur.pos();
                match cur.bump() {
                    Some(c @ ('"' | '\\')) => {
                        lexeme.push('\\');
                        lexeme.push(c);
                        text.push(c);
                    }
                    Some(other) => {
                        return Err(SyntaxError::new(
                            SyntaxErrorKind::BadEscape(other),
                            esc_pos,
                        ))
                    }
                    None => {
                        return Err(SyntaxError::new(SyntaxErrorKind::UnterminatedString, pos))
                    }
                }
            }
            Some(c) => {
                lexeme.push(c);
                text.push(c);
            }
        }
    }
    Ok(Token {
        kind: TokenKind::Str(text),
        lexeme,
        pos,
    })
}

fn looks_numeric(text: &str) -> bool {
    let digits = text.strip_prefix('-').unwrap_or(text);
    digits.starts_with(|c: char| c.is_ascii_digit())
}

fn classify_atom(text: String, pos: Pos) -> Result<Token, SyntaxError> {
    if looks_numeric(&text) {
        let valid = {
            let body = text.strip_prefix('-').unwrap_or(&text);
            let mut parts = body.splitn(2, '.');
            let int = parts.next().unwrap_or("");
            let frac = parts.next();
            !int.is_empty()
                && int.chars().all(|c| c.is_ascii_digit())
                && frac.is_none_or(|f| !f.is_empty() && f.chars().all(|c| c.is_ascii_digit()))
        };
        return match text.parse::<f64>() {
            Ok(n) if valid => Ok(Token {
                kind: TokenKind::Number(n),
                lexeme: text,
                pos,
            }),
            _ => Err(SyntaxError::new(SyntaxErrorKind::BadNumber(text), pos)),
        };
    }
    if text.contains('.') {
        let mut parts = text.split('.');
        let (owner, stream) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
        if parts.next().is_some() || owner.is_empty() || stream.is_empty() {
            return Err(SyntaxError::new(SyntaxErrorKind::BadQualification(text), pos));
        }
        return Ok(Token {
            kind: TokenKind::Qualified(owner.to_string(), stream.to_string()),
            lexeme: text,
            pos,
        });
    }
    Ok(Token {
        kind: TokenKind::Ident(text.clone()),
        lexeme: text,
        pos,
    })
}
