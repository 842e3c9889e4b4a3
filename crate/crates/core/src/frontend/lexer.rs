use std::fmt;

use super::FrontendError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Keyword(&'static str),
    Ident(String),
    IntLit(String),
    FloatLit(String),
    CharLit(String),
    StrLit(String),
    /// Operators: arithmetic, comparison, assignment, logical, `?`, `:` ...
    Op(&'static str),
    /// Structural punctuation: `; , ( ) { } [ ]`.
    Punct(&'static str),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "kw:{k}"),
            TokenKind::Ident(s) => write!(f, "ident:{s}"),
            TokenKind::IntLit(s) => write!(f, "int-lit:{s}"),
            TokenKind::FloatLit(s) => write!(f, "float-lit:{s}"),
            TokenKind::CharLit(s) => write!(f, "char-lit:{s}"),
            TokenKind::StrLit(s) => write!(f, "str-lit:{s}"),
            TokenKind::Op(o) => write!(f, "op:{o}"),
            TokenKind::Punct(p) => write!(f, "punct:{p}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Position,
}

const KEYWORDS: &[&str] = &[
    "_Bool", "auto", "break", "case", "char", "const", "continue", "default", "do", "double",
    "else", "enum", "extern", "float", "for", "goto", "if", "inline", "int", "long", "register",
    "restrict", "return", "short", "signed", "sizeof", "static", "struct", "switch", "typedef",
    "union", "unsigned", "void", "volatile", "while",
];

// Longest first so maximal munch falls out of a linear scan.
const OPERATORS: &[&str] = &[
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "+", "-", "*", "/", "%", "<", ">", "=", "!", "~",
    "&", "|", "^", "?", ":", ".",
];

const PUNCTUATION: &[&str] = &[";", ",", "(", ")", "{", "}", "[", "]"];

/// Splits source text into tokens, dropping whitespace, comments and
/// preprocessor line markers (`# 1 "file.c"`).
pub fn tokenize(source: &str) -> Result<Vec<Token>, FrontendError> {
    Lexer::new(source).run()
}

struct Lexer<'a> {
    src: &'a [u8],
    at: usize,
    line: usize,
    col: usize,
    line_start: bool,
}

impl<'a> Lexer<'a> {
    fn new(source: &'a str) -> Self {
        Self {
            src: source.as_bytes(),
            at: 0,
            line: 1,
            col: 1,
            line_start: true,
        }
    }

    fn peek(&self, k: usize) -> Option<u8> {
        self.src.get(self.at + k).copied()
    }

    fn bump(&mut self) -> u8 {
        let b = self.src[self.at];
        self.at += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
            self.line_start = true;
        } else {
            self.col += 1;
            if !b.is_ascii_whitespace() {
                self.line_start = false;
            }
        }
        b
    }

    fn pos(&self) -> Position {
        Position {
            line: self.line,
            column: self.col,
        }
    }

    fn error(&self, message: impl Into<String>) -> FrontendError {
        FrontendError::Lex {
            line: self.line,
            column: self.col,
            message: message.into(),
        }
    }

    fn run(mut self) -> Result<Vec<Token>, FrontendError> {
        let mut out = Vec::new();
        while let Some(b) = self.peek(0) {
            if b.is_ascii_whitespace() {
                self.bump();
                continue;
            }
            if b == b'#' && self.line_start {
                self.skip_line();
                continue;
            }
            if b == b'/' && self.peek(1) == Some(b'/') {
                self.skip_line();
                continue;
            }
            if b == b'/' && self.peek(1) == Some(b'*') {
                self.skip_block_comment()?;
                continue;
            }
            let pos = self.pos();
            let kind = if b.is_ascii_alphabetic() || b == b'_' {
                self.word()
            } else if b.is_ascii_digit() || (b == b'.' && self.peek(1).is_some_and(|c| c.is_ascii_digit())) {
                self.number()
            } else if b == b'\'' {
                TokenKind::CharLit(self.quoted(b'\'')?)
            } else if b == b'"' {
                TokenKind::StrLit(self.quoted(b'"')?)
            } else {
                self.symbol()?
            };
            out.push(Token { kind, pos });
        }
        Ok(out)
    }

    fn skip_line(&mut self) {
        while let Some(b) = self.peek(0) {
            if b == b'\n' {
                break;
            }
            self.bump();
        }
    }

    fn skip_block_comment(&mut self) -> Result<(), FrontendError> {
        let start = self.pos();
        self.bump();
        self.bump();
        loop {
            match self.peek(0) {
                None => {
                    return Err(FrontendError::Lex {
                        line: start.line,
                        column: start.column,
                        message: "unterminated comment".into(),
                    })
                }
                Some(b'*') if self.peek(1) == Some(b'/') => {
                    self.bump();
                    self.bump();
                    return Ok(());
                }
                Some(_) => {
                    self.bump();
                }
            }
        }
    }

    fn word(&mut self) -> TokenKind {
        let start = self.at;
        while self.peek(0).is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_') {
            self.bump();
        }
        let text = std::str::from_utf8(&self.src[start..self.at]).expect("ascii identifier");
        match KEYWORDS.iter().find(|k| **k == text) {
            Some(k) => TokenKind::Keyword(k),
            None => TokenKind::Ident(text.to_string()),
        }
    }

    fn number(&mut self) -> TokenKind {
        let start = self.at;
        let mut float = false;
        if self.peek(0) == Some(b'0') && matches!(self.peek(1), Some(b'x' | b'X')) {
            self.bump();
            self.bump();
            while self.peek(0).is_some_and(|c| c.is_ascii_hexdigit()) {
                self.bump();
            }
        } else {
            while let Some(c) = self.peek(0) {
                if c.is_ascii_digit() {
                    self.bump();
                } else if c == b'.' {
                    float = true;
                    self.bump();
                } else if matches!(c, b'e' | b'E') {
                    float = true;
                    self.bump();
                    if matches!(self.peek(0), Some(b'+' | b'-')) {
                        self.bump();
                    }
                } else {
                    break;
                }
            }
        }
        // integer / float suffixes
        while self.peek(0).is_some_and(|c| matches!(c, b'u' | b'U' | b'l' | b'L' | b'f' | b'F')) {
            if matches!(self.peek(0), Some(b'f' | b'F')) {
                float = true;
            }
            self.bump();
        }
        let text = String::from_utf8_lossy(&self.src[start..self.at]).into_owned();
        if float {
            TokenKind::FloatLit(text)
        } else {
            TokenKind::IntLit(text)
        }
    }

    fn quoted(&mut self, quote: u8) -> Result<String, FrontendError> {
        let start = self.pos();
        self.bump();
        let body_start = self.at;
        loop {
            match self.peek(0) {
                None | Some(b'\n') => {
                    return Err(FrontendError::Lex {
                        line: start.line,
                        column: start.column,
                        message: "unterminated literal".into(),
                    })
                }
                Some(b'\\') => {
                    self.bump();
                    if self.peek(0).is_some() {
                        self.bump();
                    }
                }
                Some(c) if c == quote => {
                    let body = String::from_utf8_lossy(&self.src[body_start..self.at]).into_owned();
                    self.bump();
                    return Ok(body);
                }
                Some(_) => {
                    self.bump();
                }
            }
        }
    }

    fn symbol(&mut self) -> Result<TokenKind, FrontendError> {
        let rest = &self.src[self.at..];
        for p in PUNCTUATION {
            if rest.starts_with(p.as_bytes()) {
                self.bump();
                return Ok(TokenKind::Punct(p));
            }
        }
        for op in OPERATORS {
            if rest.starts_with(op.as_bytes()) {
                for _ in 0..op.len() {
                    self.bump();
                }
                return Ok(TokenKind::Op(op));
            }
        }
        let ch = std::str::from_utf8(rest)
            .ok()
            .and_then(|s| s.chars().next())
            .unwrap_or('\u{fffd}');
        Err(self.error(format!("illegal character {ch:?}")))
    }
}
