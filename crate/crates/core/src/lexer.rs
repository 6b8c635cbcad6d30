//! Tokenizer shared by the model, formula, policy and constraint readers.

use thiserror::Error;

use crate::rational::{parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number(String),
    Sym(&'static str),
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Number(s) => write!(f, "`{s}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
        }
    }
}

const SYMBOLS: &[&str] = &[
    "<>", "->", "=>", "<=", ">=", "==", "{", "}", "[", "]", "(", ")", ",", ":", ";", "+", "-", "*", "^", "/", "<",
    ">", "=", "!", "&", "|", "~",
];

/// A token with its 1-based `(line, column)`.
pub type Spanned = (Tok, (usize, usize));

pub fn tokenize(text: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let bytes = content.as_bytes();
        let mut pos = 0;
        'outer: while pos < bytes.len() {
            let c = content[pos..].chars().next().unwrap_or(' ');
            if c.is_whitespace() {
                pos += c.len_utf8();
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = pos;
                while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                    pos += 1;
                }
                out.push((Tok::Ident(content[start..pos].to_string()), (line, start + 1)));
                continue;
            }
            if c.is_ascii_digit() {
                let start = pos;
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                }
                if pos + 1 < bytes.len() && bytes[pos] == b'.' && bytes[pos + 1].is_ascii_digit() {
                    pos += 1;
                    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                        pos += 1;
                    }
                }
                out.push((Tok::Number(content[start..pos].to_string()), (line, start + 1)));
                continue;
            }
            for sym in SYMBOLS {
                if content[pos..].starts_with(sym) {
                    out.push((Tok::Sym(sym), (line, pos + 1)));
                    pos += sym.len();
                    continue 'outer;
                }
            }
            return Err(SyntaxError { line, column: pos + 1, message: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

/// Recursive-descent helper over a token stream.
pub struct Cursor {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Cursor {
    pub fn new(text: &str) -> Result<Self, SyntaxError> {
        Ok(Cursor { toks: tokenize(text)?, pos: 0 })
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    pub fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.toks.get(self.pos + offset).map(|(t, _)| t)
    }

    /// `(line, column)` of the next token, or of the last one at end of input.
    pub fn position(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|(_, p)| *p)
            .unwrap_or((1, 1))
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn advance(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn error(&self, message: impl Into<String>) -> SyntaxError {
        let (line, column) = self.position();
        SyntaxError { line, column, message: message.into() }
    }

    fn unexpected(&self, wanted: &str) -> SyntaxError {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {t}")),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    pub fn is_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym)
    }

    pub fn is_keyword(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == word)
    }

    pub fn eat_sym(&mut self, sym: &str) -> bool {
        if self.is_sym(sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn eat_keyword(&mut self, word: &str) -> bool {
        if self.is_keyword(word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, sym: &str) -> Result<(), SyntaxError> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{sym}`")))
        }
    }

    pub fn expect_ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected("a name")),
        }
    }

    /// `[-] number [/ number]`.
    pub fn expect_rational(&mut self) -> Result<Rational, SyntaxError> {
        let negative = self.eat_sym("-");
        let num = match self.peek() {
            Some(Tok::Number(n)) => n.clone(),
            _ => return Err(self.unexpected("a number")),
        };
        self.pos += 1;
        let mut text = num;
        if self.is_sym("/") {
            if let Some(Tok::Number(d)) = self.peek_at(1) {
                text = format!("{text}/{d}");
                self.pos += 2;
            }
        }
        let value = parse_rational(&text).map_err(|e| self.error(e.to_string()))?;
        Ok(if negative { -value } else { value })
    }

    /// Comma-separated names inside braces; `{}` is allowed.
    pub fn name_set(&mut self) -> Result<Vec<String>, SyntaxError> {
        self.expect_sym("{")?;
        let mut names = Vec::new();
        if self.eat_sym("}") {
            return Ok(names);
        }
        loop {
            names.push(self.expect_ident()?);
            if self.eat_sym("}") {
                return Ok(names);
            }
            self.expect_sym(",")?;
        }
    }

    pub fn expect_end(&self) -> Result<(), SyntaxError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn tokenizes_edges_and_comments() {
        let toks: Vec<Tok> = tokenize("edge s0 -conc{x}-> s1 # trailing\n")
            .unwrap()
            .into_iter()
            .map(|(t, _)| t)
            .collect();
        assert_eq!(toks.len(), 9);
        assert_eq!(toks[2], Tok::Sym("-"));
        assert_eq!(toks[7], Tok::Sym("->"));
    }

    #[test]
    fn reads_rationals() {
        let mut c = Cursor::new("-3/4 0.25 7").unwrap();
        assert_eq!(c.expect_rational().unwrap(), rat(-3, 4));
        assert_eq!(c.expect_rational().unwrap(), rat(1, 4));
        assert_eq!(c.expect_rational().unwrap(), rat(7, 1));
        assert!(c.at_end());
    }

    #[test]
    fn reports_line_numbers() {
        let err = tokenize("ok\nbad $").unwrap_err();
        assert_eq!(err.line, 2);
    }
}
