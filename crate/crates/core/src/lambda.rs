//! Untyped λ-terms: named syntax, de Bruijn form, a leftmost-outermost
//! normalizer, projections and the padding terms `Z`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Arc<str>),
    Abs(Arc<str>, Box<Term>),
    App(Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.into())
    }

    pub fn abs(name: &str, body: Term) -> Term {
        Term::Abs(name.into(), Box::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    /// `f a₁ … aₙ`.
    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn identity() -> Term {
        Term::abs("x", Term::var("x"))
    }

    pub fn k() -> Term {
        Term::abs("x", Term::abs("y", Term::var("x")))
    }

    pub fn s() -> Term {
        let body = Term::apps(Term::var("x"), [Term::var("z"), Term::app(Term::var("y"), Term::var("z"))]);
        Term::abs("x", Term::abs("y", Term::abs("z", body)))
    }

    pub fn omega() -> Term {
        let w = Term::abs("x", Term::app(Term::var("x"), Term::var("x")));
        Term::app(w.clone(), w)
    }

    pub fn free_vars(&self) -> BTreeSet<Arc<str>> {
        fn go(t: &Term, bound: &mut Vec<Arc<str>>, out: &mut BTreeSet<Arc<str>>) {
            match t {
                Term::Var(x) => {
                    if !bound.contains(x) {
                        out.insert(x.clone());
                    }
                }
                Term::Abs(x, b) => {
                    bound.push(x.clone());
                    go(b, bound, out);
                    bound.pop();
                }
                Term::App(f, a) => {
                    go(f, bound, out);
                    go(a, bound, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::Abs(_, b) => 1 + b.size(),
            Term::App(f, a) => 1 + f.size() + a.size(),
        }
    }

    pub fn to_db(&self) -> Db {
        fn go(t: &Term, ctx: &mut Vec<Arc<str>>) -> Db {
            match t {
                Term::Var(x) => match ctx.iter().rev().position(|y| y == x) {
                    Some(i) => Db::Var(i),
                    None => Db::Free(x.clone()),
                },
                Term::Abs(x, b) => {
                    ctx.push(x.clone());
                    let body = go(b, ctx);
                    ctx.pop();
                    Db::Abs(Arc::new(body))
                }
                Term::App(f, a) => Db::App(Arc::new(go(f, ctx)), Arc::new(go(a, ctx))),
            }
        }
        go(self, &mut Vec::new())
    }

    pub fn alpha_eq(&self, other: &Term) -> bool {
        self.to_db() == other.to_db()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(x) => write!(f, "{x}"),
            Term::Abs(x, b) => {
                write!(f, "\\{x}")?;
                let mut body = b.as_ref();
                while let Term::Abs(y, inner) = body {
                    write!(f, " {y}")?;
                    body = inner;
                }
                write!(f, ".{body}")
            }
            Term::App(fun, arg) => {
                match fun.as_ref() {
                    Term::Abs(..) => write!(f, "({fun})")?,
                    _ => write!(f, "{fun}")?,
                }
                match arg.as_ref() {
                    Term::Var(_) => write!(f, " {arg}"),
                    _ => write!(f, " ({arg})"),
                }
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// De Bruijn form; `Var(0)` is the innermost binder.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Db {
    Var(usize),
    Free(Arc<str>),
    Abs(Arc<Db>),
    App(Arc<Db>, Arc<Db>),
}

impl Db {
    fn shift(&self, d: isize, cutoff: usize) -> Db {
        match self {
            Db::Var(i) if *i >= cutoff => Db::Var((*i as isize + d) as usize),
            Db::Var(_) | Db::Free(_) => self.clone(),
            Db::Abs(b) => Db::Abs(Arc::new(b.shift(d, cutoff + 1))),
            Db::App(f, a) => Db::App(Arc::new(f.shift(d, cutoff)), Arc::new(a.shift(d, cutoff))),
        }
    }

    fn subst(&self, j: usize, s: &Db) -> Db {
        match self {
            Db::Var(i) if *i == j => s.clone(),
            Db::Var(_) | Db::Free(_) => self.clone(),
            Db::Abs(b) => Db::Abs(Arc::new(b.subst(j + 1, &s.shift(1, 0)))),
            Db::App(f, a) => Db::App(Arc::new(f.subst(j, s)), Arc::new(a.subst(j, s))),
        }
    }

    /// `body[0 := arg]` for the body of an abstraction.
    pub fn beta(body: &Db, arg: &Db) -> Db {
        body.subst(0, &arg.shift(1, 0)).shift(-1, 0)
    }

    /// One leftmost-outermost step.
    pub fn step(&self) -> Option<Db> {
        match self {
            Db::App(f, a) => {
                if let Db::Abs(b) = f.as_ref() {
                    return Some(Db::beta(b, a));
                }
                if let Some(f2) = f.step() {
                    return Some(Db::App(Arc::new(f2), a.clone()));
                }
                a.step().map(|a2| Db::App(f.clone(), Arc::new(a2)))
            }
            Db::Abs(b) => b.step().map(|b2| Db::Abs(Arc::new(b2))),
            _ => None,
        }
    }

    /// One weak head step: contract the head redex without entering abstractions.
    pub fn whnf_step(&self) -> Option<Db> {
        match self {
            Db::App(f, a) => {
                if let Db::Abs(b) = f.as_ref() {
                    return Some(Db::beta(b, a));
                }
                f.whnf_step().map(|f2| Db::App(Arc::new(f2), a.clone()))
            }
            _ => None,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Db::Var(_) | Db::Free(_) => 1,
            Db::Abs(b) => 1 + b.size(),
            Db::App(f, a) => 1 + f.size() + a.size(),
        }
    }

    pub fn to_named(&self) -> Term {
        fn free(t: &Db, out: &mut BTreeSet<Arc<str>>) {
            match t {
                Db::Free(x) => {
                    out.insert(x.clone());
                }
                Db::Abs(b) => free(b, out),
                Db::App(f, a) => {
                    free(f, out);
                    free(a, out);
                }
                Db::Var(_) => {}
            }
        }
        fn go(t: &Db, ctx: &mut Vec<Arc<str>>, avoid: &BTreeSet<Arc<str>>) -> Term {
            match t {
                Db::Var(i) => Term::Var(ctx[ctx.len() - 1 - i].clone()),
                Db::Free(x) => Term::Var(x.clone()),
                Db::Abs(b) => {
                    let mut k = ctx.len();
                    let name: Arc<str> = loop {
                        let cand: Arc<str> = format!("x{k}").into();
                        if !avoid.contains(&cand) {
                            break cand;
                        }
                        k += 1000;
                    };
                    ctx.push(name.clone());
                    let body = go(b, ctx, avoid);
                    ctx.pop();
                    Term::Abs(name, Box::new(body))
                }
                Db::App(f, a) => Term::app(go(f, ctx, avoid), go(a, ctx, avoid)),
            }
        }
        let mut avoid = BTreeSet::new();
        free(self, &mut avoid);
        go(self, &mut Vec::new(), &avoid)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reduction {
    Normal(Term),
    NoNormalForm,
}

impl Reduction {
    pub fn normal(self) -> Option<Term> {
        match self {
            Reduction::Normal(t) => Some(t),
            Reduction::NoNormalForm => None,
        }
    }
}

/// Leftmost-outermost normalization with at most `fuel` steps.
pub fn beta_normalize(t: &Term, fuel: usize) -> Reduction {
    match normalize_db(&t.to_db(), fuel) {
        Some(d) => Reduction::Normal(d.to_named()),
        None => Reduction::NoNormalForm,
    }
}

pub fn normalize_db(t: &Db, fuel: usize) -> Option<Db> {
    let mut cur = t.clone();
    for _ in 0..=fuel {
        match cur.step() {
            None => return Some(cur),
            Some(next) => {
                // terms that blow up are treated as divergent
                if next.size() > 100_000 {
                    return None;
                }
                cur = next;
            }
        }
    }
    None
}

/// True when weak head reduction revisits a term within `max_steps` steps,
/// so the term has no weak head normal form.
pub fn whnf_loops(t: &Db, max_steps: usize) -> bool {
    let mut seen = HashSet::new();
    let mut cur = t.clone();
    for _ in 0..max_steps {
        if !seen.insert(cur.clone()) {
            return true;
        }
        match cur.whnf_step() {
            Some(n) => cur = n,
            None => return false,
        }
    }
    false
}

/// `π_n = λx₁…xₙ.xₙ`.
pub fn projection(n: usize) -> Result<Term> {
    if n == 0 {
        return Err(Error::InvalidArgument("projection index must be at least 1".into()));
    }
    let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let mut t = Term::var(&names[n - 1]);
    for x in names.iter().rev() {
        t = Term::abs(x, t);
    }
    Ok(t)
}

/// Which `N` fills each padding block of `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaddingReading {
    /// `Z_{m+1} = Z_m I…I N_{n_m}`, as the recursion is usually written.
    Literal,
    /// `Z_{m+1} = Z_m I…I N_{n_{m+1}}`.
    Corrected,
    /// As `Corrected`, but `N_{n_m}` is wrapped in `n_k − n_m` dummy
    /// abstractions so it discards the arguments after it.
    Absorbing,
}

/// `Z = λy.Z_k` for increasing indices `n₁ < … < n_k` and closed terms `N`.
pub fn easy_padding(indices: &[usize], terms: &[Term], reading: PaddingReading) -> Result<Term> {
    if indices.is_empty() || indices.len() != terms.len() {
        return Err(Error::InvalidArgument("need one term per index".into()));
    }
    if indices[0] == 0 || indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::IndicesNotIncreasing);
    }
    if let Some(t) = terms.iter().find(|t| !t.is_closed()) {
        return Err(Error::OpenTerm(t.to_string()));
    }
    let last = *indices.last().expect("nonempty");
    let fill = |m: usize| -> Term {
        match reading {
            PaddingReading::Literal => terms[m.saturating_sub(1)].clone(),
            PaddingReading::Corrected => terms[m].clone(),
            PaddingReading::Absorbing => {
                let mut t = terms[m].clone();
                for j in 0..(last - indices[m]) {
                    t = Term::abs(&format!("d{j}"), t);
                }
                t
            }
        }
    };
    let ids = |k: usize| std::iter::repeat_with(Term::identity).take(k);
    let first = match reading {
        PaddingReading::Literal => terms[0].clone(),
        _ => fill(0),
    };
    let mut z = Term::apps(Term::var("y"), ids(indices[0] - 1).chain(std::iter::once(first)));
    for m in 1..indices.len() {
        let gap = indices[m] - indices[m - 1] - 1;
        z = Term::apps(z, ids(gap).chain(std::iter::once(fill(m))));
    }
    Ok(Term::abs("y", z))
}

const CONSTANTS: [&str; 4] = ["K", "S", "I", "Omega"];

fn constant(name: &str) -> Option<Term> {
    match name {
        "K" => Some(Term::k()),
        "S" => Some(Term::s()),
        "I" => Some(Term::identity()),
        "Omega" => Some(Term::omega()),
        _ => None,
    }
}

/// Parses `var | \x y.t | t t | (t)`; `λ` may replace `\`. The names K, S,
/// I and Omega stand for the usual combinators unless bound.
pub fn parse(text: &str) -> Result<Term> {
    let mut p = Parser { chars: text.char_indices().collect(), pos: 0, scope: Vec::new() };
    let t = p.term()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error("unexpected input"));
    }
    Ok(t)
}

struct Parser {
    chars: Vec<(usize, char)>,
    pos: usize,
    scope: Vec<String>,
}

impl Parser {
    fn error(&self, msg: &str) -> Error {
        let pos = self.chars.get(self.pos).map(|c| c.0).unwrap_or_else(|| self.chars.last().map(|c| c.0 + 1).unwrap_or(0));
        Error::Parse { pos, msg: msg.into() }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> Option<String> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_alphanumeric() || c == '_' || c == '\'') {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.chars[start..self.pos].iter().map(|c| c.1).collect())
    }

    fn term(&mut self) -> Result<Term> {
        let mut acc: Option<Term> = None;
        loop {
            self.skip_ws();
            let next = match self.peek() {
                None | Some(')') => break,
                Some('\\') | Some('λ') => {
                    let abs = self.abstraction()?;
                    acc = Some(match acc {
                        None => abs,
                        Some(f) => Term::app(f, abs),
                    });
                    break;
                }
                Some('(') => {
                    self.pos += 1;
                    let t = self.term()?;
                    self.skip_ws();
                    if self.peek() != Some(')') {
                        return Err(self.error("expected ')'"));
                    }
                    self.pos += 1;
                    t
                }
                Some(_) => {
                    let name = self.ident().ok_or_else(|| self.error("unexpected character"))?;
                    if !self.scope.contains(&name) {
                        if let Some(c) = constant(&name) {
                            c
                        } else {
                            Term::var(&name)
                        }
                    } else {
                        Term::var(&name)
                    }
                }
            };
            acc = Some(match acc {
                None => next,
                Some(f) => Term::app(f, next),
            });
        }
        acc.ok_or_else(|| self.error("expected a term"))
    }

    fn abstraction(&mut self) -> Result<Term> {
        self.pos += 1;
        let mut names = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() == Some('.') {
                self.pos += 1;
                break;
            }
            let name = self.ident().ok_or_else(|| self.error("expected a variable or '.'"))?;
            names.push(name);
        }
        if names.is_empty() {
            return Err(self.error("abstraction without variables"));
        }
        let depth = self.scope.len();
        self.scope.extend(names.iter().cloned());
        let body = self.term();
        self.scope.truncate(depth);
        let mut t = body?;
        for x in names.iter().rev() {
            t = Term::abs(x, t);
        }
        Ok(t)
    }
}

/// True if `name` is one of the reserved combinator names.
pub fn is_constant(name: &str) -> bool {
    CONSTANTS.contains(&name)
}
