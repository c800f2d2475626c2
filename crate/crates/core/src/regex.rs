//! Regular expressions over edge labels.
//!
//! Concrete syntax: `|` for alternation, juxtaposition (whitespace) or `.`
//! for concatenation, postfix `*`, parentheses for grouping, identifiers
//! `[A-Za-z0-9_]+` as symbols and `<eps>` for the empty word. Precedence is
//! star > concatenation > alternation, and both binary operators associate
//! to the left.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// The base of a label: either a user-visible name or an internally
/// allocated fresh symbol. The two namespaces cannot collide.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Named(Arc<str>),
    Fresh(u32),
}

/// An edge label. `inverse` tags the symbol as belonging to the inverse
/// alphabet, so `a` and `a⁻¹` are distinct labels and inverting twice gives
/// back the original.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    pub symbol: Symbol,
    pub inverse: bool,
}

impl Label {
    pub fn named(name: &str) -> Self {
        Label { symbol: Symbol::Named(Arc::from(name)), inverse: false }
    }

    pub fn fresh(id: u32) -> Self {
        Label { symbol: Symbol::Fresh(id), inverse: false }
    }

    pub fn inverted(&self) -> Self {
        Label { symbol: self.symbol.clone(), inverse: !self.inverse }
    }

    pub fn is_fresh(&self) -> bool {
        matches!(self.symbol, Symbol::Fresh(_))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.symbol {
            Symbol::Named(name) => write!(f, "{name}")?,
            Symbol::Fresh(id) => write!(f, "#f{id}")?,
        }
        if self.inverse {
            write!(f, "^-1")?;
        }
        Ok(())
    }
}

/// Allocates fresh symbols from a monotonically increasing counter.
#[derive(Debug, Default, Clone)]
pub struct FreshSymbols {
    next: u32,
}

impl FreshSymbols {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_label(&mut self) -> Label {
        let label = Label::fresh(self.next);
        self.next += 1;
        label
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Regex {
    Epsilon,
    Symbol(Label),
    Alt(Box<Regex>, Box<Regex>),
    Concat(Box<Regex>, Box<Regex>),
    Star(Box<Regex>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Prefix,
    Suffix,
}

impl Regex {
    pub fn symbol(name: &str) -> Self {
        Regex::Symbol(Label::named(name))
    }

    pub fn alt(left: Regex, right: Regex) -> Self {
        Regex::Alt(Box::new(left), Box::new(right))
    }

    pub fn concat(left: Regex, right: Regex) -> Self {
        Regex::Concat(Box::new(left), Box::new(right))
    }

    pub fn star(inner: Regex) -> Self {
        Regex::Star(Box::new(inner))
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Regex::Epsilon | Regex::Symbol(_) => 1,
            Regex::Alt(l, r) | Regex::Concat(l, r) => 1 + l.size() + r.size(),
            Regex::Star(inner) => 1 + inner.size(),
        }
    }

    pub fn alphabet(&self) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels(&self, out: &mut BTreeSet<Label>) {
        match self {
            Regex::Epsilon => {}
            Regex::Symbol(label) => {
                out.insert(label.clone());
            }
            Regex::Alt(l, r) | Regex::Concat(l, r) => {
                l.collect_labels(out);
                r.collect_labels(out);
            }
            Regex::Star(inner) => inner.collect_labels(out),
        }
    }

    /// Whether the empty word belongs to the language.
    pub fn nullable(&self) -> bool {
        match self {
            Regex::Epsilon | Regex::Star(_) => true,
            Regex::Symbol(_) => false,
            Regex::Alt(l, r) => l.nullable() || r.nullable(),
            Regex::Concat(l, r) => l.nullable() && r.nullable(),
        }
    }

    /// The inverse expression: the reversed language over the inverse
    /// alphabet.
    pub fn invert(&self) -> Regex {
        match self {
            Regex::Epsilon => Regex::Epsilon,
            Regex::Symbol(label) => Regex::Symbol(label.inverted()),
            Regex::Alt(l, r) => Regex::alt(l.invert(), r.invert()),
            Regex::Concat(l, r) => Regex::concat(r.invert(), l.invert()),
            Regex::Star(inner) => Regex::star(inner.invert()),
        }
    }

    /// Concatenates a symbol that must not already occur in the expression.
    pub fn concat_symbol(&self, side: Side, symbol: Label) -> Result<Regex> {
        if self.alphabet().contains(&symbol) {
            return Err(Error::SymbolCollision(symbol.to_string()));
        }
        let sym = Regex::Symbol(symbol);
        Ok(match side {
            Side::Suffix => Regex::concat(self.clone(), sym),
            Side::Prefix => Regex::concat(sym, self.clone()),
        })
    }
}

impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // 0 = alternation context, 1 = concatenation, 2 = star operand
        fn go(re: &Regex, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match re {
                Regex::Epsilon => write!(f, "<eps>"),
                Regex::Symbol(label) => write!(f, "{label}"),
                Regex::Alt(l, r) => {
                    if prec > 0 {
                        write!(f, "(")?;
                    }
                    go(l, 0, f)?;
                    write!(f, "|")?;
                    go(r, 0, f)?;
                    if prec > 0 {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
                Regex::Concat(l, r) => {
                    if prec > 1 {
                        write!(f, "(")?;
                    }
                    go(l, 1, f)?;
                    write!(f, " ")?;
                    go(r, 1, f)?;
                    if prec > 1 {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
                Regex::Star(inner) => {
                    go(inner, 2, f)?;
                    write!(f, "*")
                }
            }
        }
        go(self, 0, f)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Ident(String),
    Eps,
    Pipe,
    Dot,
    Star,
    Open,
    Close,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let tok = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'|' => Token::Pipe,
            b'.' => Token::Dot,
            b'*' => Token::Star,
            b'(' => Token::Open,
            b')' => Token::Close,
            b'<' => {
                if text[i..].starts_with("<eps>") {
                    tokens.push((i, Token::Eps));
                    i += "<eps>".len();
                    continue;
                }
                return Err(syntax(i, "expected <eps>"));
            }
            c if c.is_ascii_alphanumeric() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push((start, Token::Ident(text[start..i].to_string())));
                continue;
            }
            _ => return Err(syntax(i, &format!("unexpected character {:?}", text[i..].chars().next().unwrap_or('?')))),
        };
        tokens.push((i, tok));
        i += 1;
    }
    Ok(tokens)
}

fn syntax(position: usize, message: &str) -> Error {
    Error::RegexSyntax { position, message: message.to_string() }
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn alternation(&mut self) -> Result<Regex> {
        let mut left = self.concatenation()?;
        while self.peek() == Some(&Token::Pipe) {
            self.pos += 1;
            let right = self.concatenation()?;
            left = Regex::alt(left, right);
        }
        Ok(left)
    }

    fn concatenation(&mut self) -> Result<Regex> {
        let mut left = self.postfix()?;
        loop {
            match self.peek() {
                Some(Token::Dot) => {
                    self.pos += 1;
                    let right = self.postfix()?;
                    left = Regex::concat(left, right);
                }
                Some(Token::Ident(_)) | Some(Token::Eps) | Some(Token::Open) => {
                    let right = self.postfix()?;
                    left = Regex::concat(left, right);
                }
                _ => return Ok(left),
            }
        }
    }

    fn postfix(&mut self) -> Result<Regex> {
        let mut inner = self.atom()?;
        while self.peek() == Some(&Token::Star) {
            self.pos += 1;
            inner = Regex::star(inner);
        }
        Ok(inner)
    }

    fn atom(&mut self) -> Result<Regex> {
        let at = self.offset();
        match self.tokens.get(self.pos).map(|(_, t)| t.clone()) {
            Some(Token::Ident(name)) => {
                self.pos += 1;
                Ok(Regex::symbol(&name))
            }
            Some(Token::Eps) => {
                self.pos += 1;
                Ok(Regex::Epsilon)
            }
            Some(Token::Open) => {
                self.pos += 1;
                let inner = self.alternation()?;
                if self.peek() != Some(&Token::Close) {
                    return Err(syntax(self.offset(), "expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(tok) => Err(syntax(at, &format!("unexpected {tok:?}"))),
            None => Err(syntax(at, "unexpected end of expression")),
        }
    }
}

pub fn parse_regex(text: &str) -> Result<Regex> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0, end: text.len() };
    let re = parser.alternation()?;
    if parser.pos != parser.tokens.len() {
        return Err(syntax(parser.offset(), "trailing input"));
    }
    Ok(re)
}

impl std::str::FromStr for Regex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_regex(s)
    }
}
