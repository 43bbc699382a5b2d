//! S-expression reader with source positions.

use super::{ParseError, ParseErrorKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SexpKind {
    Atom(String),
    Str(String),
    List(Vec<Sexp>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sexp {
    pub kind: SexpKind,
    pub span: Span,
}

impl Sexp {
    pub fn as_atom(&self) -> Option<&str> {
        match &self.kind {
            SexpKind::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match &self.kind {
            SexpKind::List(items) => Some(items),
            _ => None,
        }
    }

    /// Head symbol of a list form, e.g. `board` for `(board ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_atom()
    }

    pub fn describe(&self) -> &'static str {
        match self.kind {
            SexpKind::Atom(_) => "symbol",
            SexpKind::Str(_) => "string",
            SexpKind::List(_) => "list",
        }
    }
}

struct Reader<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Reader<'a> {
    fn span(&self) -> Span {
        Span {
            offset: self.pos,
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c == ';' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn error(&self, span: Span, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        ParseError {
            kind,
            offset: span.offset,
            line: span.line,
            column: span.column,
            message: message.into(),
        }
    }

    fn read(&mut self, depth: usize) -> Result<Sexp, ParseError> {
        self.skip_trivia();
        let span = self.span();
        match self.peek() {
            None => Err(self.error(span, ParseErrorKind::Syntax, "unexpected end of input")),
            Some('(') => {
                if depth > 256 {
                    return Err(self.error(span, ParseErrorKind::Syntax, "nesting too deep"));
                }
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        None => {
                            let end = self.span();
                            return Err(self.error(
                                end,
                                ParseErrorKind::Syntax,
                                format!(
                                    "unbalanced parenthesis opened at {}:{}",
                                    span.line, span.column
                                ),
                            ));
                        }
                        Some(')') => {
                            self.bump();
                            break;
                        }
                        Some(_) => items.push(self.read(depth + 1)?),
                    }
                }
                Ok(Sexp {
                    kind: SexpKind::List(items),
                    span,
                })
            }
            Some(')') => Err(self.error(span, ParseErrorKind::Syntax, "unexpected ')'")),
            Some('"') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => {
                            return Err(self.error(
                                self.span(),
                                ParseErrorKind::Lexical,
                                "unterminated string",
                            ))
                        }
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            _ => {
                                return Err(self.error(
                                    self.span(),
                                    ParseErrorKind::Lexical,
                                    "invalid escape in string",
                                ))
                            }
                        },
                        Some(c) => s.push(c),
                    }
                }
                Ok(Sexp {
                    kind: SexpKind::Str(s),
                    span,
                })
            }
            Some(_) => {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';') {
                        break;
                    }
                    if c.is_control() {
                        return Err(self.error(
                            self.span(),
                            ParseErrorKind::Lexical,
                            format!("invalid character {c:?}"),
                        ));
                    }
                    self.bump();
                }
                Ok(Sexp {
                    kind: SexpKind::Atom(self.text[start..self.pos].to_string()),
                    span,
                })
            }
        }
    }
}

/// Reads exactly one top-level form.
pub fn read_one(text: &str) -> Result<Sexp, ParseError> {
    let mut reader = Reader {
        text,
        pos: 0,
        line: 1,
        column: 1,
    };
    let form = reader.read(0)?;
    reader.skip_trivia();
    if reader.peek().is_some() {
        let span = reader.span();
        return Err(reader.error(span, ParseErrorKind::Syntax, "trailing input after game form"));
    }
    Ok(form)
}
