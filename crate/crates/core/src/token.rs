//! Symbolic tokens and finite token sets.
//!
//! Every web in the crate draws its tokens from the single [`Token`] type, so
//! products, exponentials, completions and ultraproducts can nest freely.
//! The derived `Ord` is structural (variant tag first, then the fields), which
//! gives every [`ConSet`] a canonical element order.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Token {
    /// The distinguished token entailed by the empty set.
    Nu,
    Atom(Arc<str>),
    /// A pair `(a, α)`: an exponential token, or a formal pair of a free completion.
    Arrow(ConSet, Arc<Token>),
    /// `(α, ν_B)` in a product, with `α ≠ ν_A`.
    InL(Arc<Token>),
    /// `(ν_A, β)` in a product, with `β ≠ ν_B`.
    InR(Arc<Token>),
    /// `(ν_A, ν_B)`.
    ProdNu,
    /// Canonical representative of an ultraproduct class.
    Class(Arc<[Token]>),
}

impl Token {
    pub fn atom(name: impl AsRef<str>) -> Token {
        Token::Atom(Arc::from(name.as_ref()))
    }

    pub fn arrow(ante: ConSet, succ: Token) -> Token {
        Token::Arrow(ante, Arc::new(succ))
    }

    pub fn inl(t: Token) -> Token {
        Token::InL(Arc::new(t))
    }

    pub fn inr(t: Token) -> Token {
        Token::InR(Arc::new(t))
    }

    pub fn class(components: Vec<Token>) -> Token {
        Token::Class(components.into())
    }

    pub fn as_arrow(&self) -> Option<(&ConSet, &Token)> {
        match self {
            Token::Arrow(a, t) => Some((a, t)),
            _ => None,
        }
    }

    /// Number of syntax nodes.
    pub fn size(&self) -> usize {
        match self {
            Token::Nu | Token::Atom(_) | Token::ProdNu => 1,
            Token::Arrow(a, t) => 1 + a.iter().map(Token::size).sum::<usize>() + t.size(),
            Token::InL(t) | Token::InR(t) => 1 + t.size(),
            Token::Class(cs) => 1 + cs.iter().map(Token::size).sum::<usize>(),
        }
    }

    /// Occurrences of `ν`-like leaves (`Nu`, `ProdNu`).
    pub fn nu_count(&self) -> usize {
        match self {
            Token::Nu | Token::ProdNu => 1,
            Token::Atom(_) => 0,
            Token::Arrow(a, t) => a.iter().map(Token::nu_count).sum::<usize>() + t.nu_count(),
            Token::InL(t) | Token::InR(t) => t.nu_count(),
            Token::Class(cs) => cs.iter().map(Token::nu_count).sum(),
        }
    }

    /// Nesting depth of arrow constructors.
    pub fn arrow_depth(&self) -> usize {
        match self {
            Token::Nu | Token::Atom(_) | Token::ProdNu => 0,
            Token::Arrow(a, t) => {
                1 + a.iter().map(Token::arrow_depth).max().unwrap_or(0).max(t.arrow_depth())
            }
            Token::InL(t) | Token::InR(t) => t.arrow_depth(),
            Token::Class(cs) => cs.iter().map(Token::arrow_depth).max().unwrap_or(0),
        }
    }

    /// Ordering key used whenever a "simplest" token must be picked:
    /// fewest `ν` leaves, then smallest, then structural order.
    pub fn simplicity_key(&self) -> (usize, usize, Token) {
        (self.nu_count(), self.size(), self.clone())
    }

    pub fn parse(text: &str) -> Result<Token> {
        let mut p = TokenParser::new(text, None);
        let t = p.token()?;
        p.finish()?;
        Ok(t)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Nu => write!(f, "nu"),
            Token::Atom(n) => write!(f, "{n}"),
            Token::Arrow(a, t) => write!(f, "<{a}->{t}>"),
            Token::InL(t) => write!(f, "inl({t})"),
            Token::InR(t) => write!(f, "inr({t})"),
            Token::ProdNu => write!(f, "pnu"),
            Token::Class(cs) => {
                write!(f, "[")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "|")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A finite set of tokens in canonical order. Cheap to clone.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConSet(Arc<BTreeSet<Token>>);

impl ConSet {
    pub fn empty() -> ConSet {
        ConSet::default()
    }

    pub fn singleton(t: Token) -> ConSet {
        ConSet(Arc::new(BTreeSet::from([t])))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, t: &Token) -> bool {
        self.0.contains(t)
    }

    pub fn iter(&self) -> std::collections::btree_set::Iter<'_, Token> {
        self.0.iter()
    }

    pub fn as_set(&self) -> &BTreeSet<Token> {
        &self.0
    }

    pub fn is_subset(&self, other: &ConSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &ConSet) -> ConSet {
        self.0.union(&other.0).cloned().collect()
    }

    pub fn with(&self, t: Token) -> ConSet {
        let mut s = (*self.0).clone();
        s.insert(t);
        ConSet(Arc::new(s))
    }

    pub fn map(&self, f: impl FnMut(&Token) -> Token) -> ConSet {
        self.0.iter().map(f).collect()
    }

    /// Image under a partial map; tokens outside its domain are dropped.
    pub fn filter_map(&self, f: impl FnMut(&Token) -> Option<Token>) -> ConSet {
        self.0.iter().filter_map(f).collect()
    }
}

impl FromIterator<Token> for ConSet {
    fn from_iter<I: IntoIterator<Item = Token>>(iter: I) -> Self {
        ConSet(Arc::new(iter.into_iter().collect()))
    }
}

impl From<BTreeSet<Token>> for ConSet {
    fn from(s: BTreeSet<Token>) -> Self {
        ConSet(Arc::new(s))
    }
}

impl<'a> IntoIterator for &'a ConSet {
    type Item = &'a Token;
    type IntoIter = std::collections::btree_set::Iter<'a, Token>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for ConSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for ConSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// All subsets of `universe` with at most `max_card` elements, smallest first.
pub fn subsets_up_to(universe: &[Token], max_card: usize) -> Vec<ConSet> {
    let mut out = vec![ConSet::empty()];
    let mut frontier: Vec<(usize, Vec<Token>)> = vec![(0, Vec::new())];
    for _ in 0..max_card.min(universe.len()) {
        let mut next = Vec::new();
        for (start, cur) in &frontier {
            for (i, t) in universe.iter().enumerate().skip(*start) {
                let mut s = cur.clone();
                s.push(t.clone());
                out.push(s.iter().cloned().collect());
                next.push((i + 1, s));
            }
        }
        frontier = next;
    }
    out
}

/// Recursive-descent reader for the canonical token syntax.
///
/// `alias` names an identifier that reads as `ν` (the DSL's `nu v` line).
pub struct TokenParser<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    alias: Option<&'a str>,
}

impl<'a> TokenParser<'a> {
    pub fn new(text: &'a str, alias: Option<&'a str>) -> Self {
        TokenParser { src: text.as_bytes(), text, pos: 0, alias }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: format!("{msg} in token `{}`", self.text) }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && is_ident_byte(self.src[self.pos]) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected identifier"));
        }
        Ok(&self.text[start..self.pos])
    }

    /// Consumes the punctuation character `c`, skipping whitespace first.
    pub fn punct(&mut self, c: char) -> Result<()> {
        self.expect(c as u8)
    }

    /// Consumes `c` if it is next.
    pub fn eat(&mut self, c: char) -> bool {
        let hit = self.peek() == Some(c as u8);
        if hit {
            self.pos += 1;
        }
        hit
    }

    /// Reads a bare identifier.
    pub fn word(&mut self) -> Result<&'a str> {
        self.ident()
    }

    pub fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    pub fn finish(&mut self) -> Result<()> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err("trailing input"))
        }
    }

    pub fn conset(&mut self) -> Result<ConSet> {
        self.expect(b'{')?;
        let mut items = BTreeSet::new();
        if self.peek() == Some(b'}') {
            self.pos += 1;
            return Ok(items.into());
        }
        loop {
            items.insert(self.token()?);
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b'}') => {
                    self.pos += 1;
                    return Ok(items.into());
                }
                _ => return Err(self.err("expected `,` or `}`")),
            }
        }
    }

    pub fn token(&mut self) -> Result<Token> {
        match self.peek() {
            Some(b'<') => {
                self.pos += 1;
                let a = self.conset()?;
                self.expect(b'-')?;
                self.expect(b'>')?;
                let t = self.token()?;
                self.expect(b'>')?;
                Ok(Token::arrow(a, t))
            }
            Some(b'[') => {
                self.pos += 1;
                let mut cs = vec![self.token()?];
                while self.peek() == Some(b'|') {
                    self.pos += 1;
                    cs.push(self.token()?);
                }
                self.expect(b']')?;
                Ok(Token::class(cs))
            }
            Some(c) if is_ident_byte(c) => {
                let id = self.ident()?;
                match id {
                    "nu" => Ok(Token::Nu),
                    "pnu" => Ok(Token::ProdNu),
                    "inl" | "inr" if self.peek() == Some(b'(') => {
                        self.pos += 1;
                        let t = self.token()?;
                        self.expect(b')')?;
                        Ok(if id == "inl" { Token::inl(t) } else { Token::inr(t) })
                    }
                    _ if Some(id) == self.alias => Ok(Token::Nu),
                    _ => Ok(Token::atom(id)),
                }
            }
            _ => Err(self.err("expected token")),
        }
    }
}

fn is_ident_byte(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'\''
}
