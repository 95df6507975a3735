//! Recursive-descent parser for call expressions.
//!
//! ```text
//! calls := sep* (call (sep+ call)*)? sep*      sep := ';' | newline
//! call  := NAME '(' [arg (',' arg)*] ')'
//! arg   := NAME '=' value
//! value := quoted-string | number | call | ASK_USER
//! ```

use std::fmt;

use super::{Binding, PlanNode, ASK_USER_TOKEN};
use crate::registry::ValueType;

const MAX_NESTING: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Expected { expected: &'static str, found: String },
    UnbalancedParens,
    UnterminatedString,
    DuplicateArgument(String),
    TooDeep,
}

/// Syntax error with the byte offset into the input where it was detected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: ", self.offset)?;
        match &self.kind {
            ParseErrorKind::Expected { expected, found } => {
                write!(f, "expected {expected}, found {found}")
            }
            ParseErrorKind::UnbalancedParens => f.write_str("unbalanced parentheses"),
            ParseErrorKind::UnterminatedString => f.write_str("unterminated string literal"),
            ParseErrorKind::DuplicateArgument(name) => write!(f, "duplicate argument `{name}`"),
            ParseErrorKind::TooDeep => write!(f, "calls nested deeper than {MAX_NESTING}"),
        }
    }
}

impl std::error::Error for ParseError {}

/// Parses one or more top-level calls separated by newlines or semicolons.
/// Blank input yields an empty list.
pub fn parse_call_expr(text: &str) -> Result<Vec<PlanNode>, ParseError> {
    let mut p = Parser::new(text);
    let mut calls = Vec::new();
    p.skip_separators();
    while !p.at_end() {
        if p.peek() == Some(b')') {
            return Err(p.error(ParseErrorKind::UnbalancedParens));
        }
        calls.push(p.call(0)?);
        p.skip_inline_ws();
        match p.peek() {
            None => break,
            Some(b';') | Some(b'\n') => p.skip_separators(),
            Some(b')') => return Err(p.error(ParseErrorKind::UnbalancedParens)),
            Some(_) => return Err(p.expected("';' or newline between calls")),
        }
    }
    Ok(calls)
}

/// Parses exactly one call starting at byte `start` of `text`, returning the
/// node and the byte offset just past its closing parenthesis.
pub fn parse_single_call(text: &str, start: usize) -> Result<(PlanNode, usize), ParseError> {
    let mut p = Parser::new(text);
    p.pos = start;
    let node = p.call(0)?;
    Ok((node, p.pos))
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            offset: self.pos,
            kind,
        }
    }

    fn expected(&self, expected: &'static str) -> ParseError {
        let found = match self.src[self.pos..].chars().next() {
            None => "end of input".to_string(),
            Some(c) => format!("{c:?}"),
        };
        self.error(ParseErrorKind::Expected { expected, found })
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.pos += 1;
        }
    }

    fn skip_inline_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r')) {
            self.pos += 1;
        }
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n' | b';')) {
            self.pos += 1;
        }
    }

    fn name(&mut self) -> Option<&'a str> {
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.pos += 1,
            _ => return None,
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        Some(&self.src[start..self.pos])
    }

    fn eat(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn call(&mut self, depth: usize) -> Result<PlanNode, ParseError> {
        let name = self.name().ok_or_else(|| self.expected("API name"))?;
        self.call_after_name(name, depth)
    }

    fn call_after_name(&mut self, name: &str, depth: usize) -> Result<PlanNode, ParseError> {
        if depth > MAX_NESTING {
            return Err(self.error(ParseErrorKind::TooDeep));
        }
        let open_at = self.pos;
        self.skip_ws();
        if !self.eat(b'(') {
            return Err(self.expected("'('"));
        }
        let mut node = PlanNode::new(name);
        self.skip_ws();
        if self.eat(b')') {
            return Ok(node);
        }
        loop {
            self.skip_ws();
            if self.at_end() {
                return Err(ParseError {
                    offset: open_at,
                    kind: ParseErrorKind::UnbalancedParens,
                });
            }
            let arg_at = self.pos;
            let arg = self.name().ok_or_else(|| self.expected("argument name"))?;
            self.skip_ws();
            if !self.eat(b'=') {
                return Err(self.expected("'='"));
            }
            self.skip_ws();
            let value = self.value(depth)?;
            if node.bindings.contains_key(arg) {
                return Err(ParseError {
                    offset: arg_at,
                    kind: ParseErrorKind::DuplicateArgument(arg.to_string()),
                });
            }
            node.bindings.insert(arg.to_string(), value);
            self.skip_ws();
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b')') => {
                    self.pos += 1;
                    return Ok(node);
                }
                None => {
                    return Err(ParseError {
                        offset: open_at,
                        kind: ParseErrorKind::UnbalancedParens,
                    })
                }
                Some(_) => return Err(self.expected("',' or ')'")),
            }
        }
    }

    fn value(&mut self, depth: usize) -> Result<Binding, ParseError> {
        match self.peek() {
            Some(q @ (b'\'' | b'"')) => self.quoted(q),
            Some(c) if c.is_ascii_digit() || c == b'-' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                let name = self.name().expect("starts with a name byte");
                let after = self.pos;
                self.skip_ws();
                if self.peek() == Some(b'(') {
                    self.pos = after;
                    let child = self.call_after_name(name, depth + 1)?;
                    Ok(Binding::SubCall(Box::new(child)))
                } else if name == ASK_USER_TOKEN {
                    self.pos = after;
                    Ok(Binding::AskUser {
                        question: String::new(),
                    })
                } else {
                    self.pos = start;
                    Err(self.expected("quoted string, number or call"))
                }
            }
            None => Err(self.error(ParseErrorKind::UnbalancedParens)),
            Some(_) => Err(self.expected("quoted string, number or call")),
        }
    }

    fn quoted(&mut self, quote: u8) -> Result<Binding, ParseError> {
        let start = self.pos;
        self.pos += 1;
        let mut text = String::new();
        let mut run = self.pos;
        loop {
            match self.peek() {
                None => {
                    return Err(ParseError {
                        offset: start,
                        kind: ParseErrorKind::UnterminatedString,
                    })
                }
                Some(c) if c == quote => {
                    text.push_str(&self.src[run..self.pos]);
                    self.pos += 1;
                    return Ok(Binding::Literal {
                        text,
                        value_type: ValueType::String,
                    });
                }
                Some(b'\\') => {
                    text.push_str(&self.src[run..self.pos]);
                    self.pos += 1;
                    let escaped = self.src[self.pos..].chars().next().ok_or(ParseError {
                        offset: start,
                        kind: ParseErrorKind::UnterminatedString,
                    })?;
                    match escaped {
                        'n' => text.push('\n'),
                        't' => text.push('\t'),
                        'r' => text.push('\r'),
                        '\\' | '\'' | '"' => text.push(escaped),
                        other => {
                            text.push('\\');
                            text.push(other);
                        }
                    }
                    self.pos += escaped.len_utf8();
                    run = self.pos;
                }
                Some(_) => self.pos += 1,
            }
        }
    }

    fn number(&mut self) -> Result<Binding, ParseError> {
        let start = self.pos;
        self.eat(b'-');
        let digits = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == digits {
            return Err(self.expected("digit"));
        }
        let mut value_type = ValueType::Integer;
        if self.peek() == Some(b'.') {
            self.pos += 1;
            let frac = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == frac {
                return Err(self.expected("digit after '.'"));
            }
            value_type = ValueType::Float;
        }
        Ok(Binding::Literal {
            text: self.src[start..self.pos].to_string(),
            value_type,
        })
    }
}
