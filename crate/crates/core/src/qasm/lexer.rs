use super::ast::SourceLocation;
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokenKind {
    Ident(String),
    Int(u64),
    /// Decimal literal kept verbatim; only the header version uses it.
    Real(String),
    Str(String),
    Semicolon,
    Comma,
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Arrow,
    Eof,
}

impl TokenKind {
    pub(crate) fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Int(n) => format!("integer `{n}`"),
            TokenKind::Real(s) => format!("number `{s}`"),
            TokenKind::Str(s) => format!("string \"{s}\""),
            TokenKind::Semicolon => "`;`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::LBracket => "`[`".into(),
            TokenKind::RBracket => "`]`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::Arrow => "`->`".into(),
            TokenKind::Eof => "end of file".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub location: SourceLocation,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_second(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
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

    fn location(&self) -> SourceLocation {
        SourceLocation {
            line: self.line,
            column: self.column,
            byte_offset: self.pos,
        }
    }

    fn eat_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(&pred) {
            self.bump();
        }
        &self.src[start..self.pos]
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        src,
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    loop {
        // whitespace and comments
        loop {
            match (cur.peek(), cur.peek_second()) {
                (Some(c), _) if c.is_whitespace() => {
                    cur.bump();
                }
                (Some('/'), Some('/')) => {
                    cur.eat_while(|c| c != '\n');
                }
                _ => break,
            }
        }
        let location = cur.location();
        let Some(c) = cur.peek() else {
            tokens.push(Token {
                kind: TokenKind::Eof,
                location,
            });
            return Ok(tokens);
        };
        let kind = match c {
            ';' | ',' | '[' | ']' | '(' | ')' | '{' | '}' => {
                cur.bump();
                match c {
                    ';' => TokenKind::Semicolon,
                    ',' => TokenKind::Comma,
                    '[' => TokenKind::LBracket,
                    ']' => TokenKind::RBracket,
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    '{' => TokenKind::LBrace,
                    _ => TokenKind::RBrace,
                }
            }
            '-' if cur.peek_second() == Some('>') => {
                cur.bump();
                cur.bump();
                TokenKind::Arrow
            }
            '"' => {
                cur.bump();
                let body = cur.eat_while(|c| c != '"' && c != '\n');
                if cur.bump() != Some('"') {
                    return Err(ParseError::Syntax {
                        location,
                        message: "unterminated string literal".into(),
                    });
                }
                TokenKind::Str(body.to_string())
            }
            c if c.is_ascii_digit() => {
                let digits = cur.eat_while(|c| c.is_ascii_digit());
                if cur.peek() == Some('.') {
                    cur.bump();
                    let frac = cur.eat_while(|c| c.is_ascii_digit());
                    TokenKind::Real(format!("{digits}.{frac}"))
                } else {
                    let value = digits.parse::<u64>().map_err(|_| ParseError::Syntax {
                        location,
                        message: format!("integer literal `{digits}` is too large"),
                    })?;
                    TokenKind::Int(value)
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let ident = cur.eat_while(|c| c.is_ascii_alphanumeric() || c == '_');
                TokenKind::Ident(ident.to_string())
            }
            other => {
                return Err(ParseError::Syntax {
                    location,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        tokens.push(Token { kind, location });
    }
}
