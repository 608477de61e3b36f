//! Seeded corpora of closed term pairs, labelled by a normal-form oracle.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lambda::{beta_normalize, Term};

/// Reduction steps granted to the labelling oracle.
pub const ORACLE_FUEL: usize = 500;

pub const MAX_CORPUS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    /// Both sides reach α-equal normal forms within the oracle fuel.
    Equal,
    Unlabeled,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Equal => "EQUAL",
            Label::Unlabeled => "UNLABELED",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusPair {
    pub index: usize,
    pub m: Term,
    pub n: Term,
    pub label: Label,
}

impl fmt::Display for CorpusPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}\t{}", self.index, self.label, self.m, self.n)
    }
}

pub fn oracle_label(m: &Term, n: &Term) -> Label {
    match (beta_normalize(m, ORACLE_FUEL).normal(), beta_normalize(n, ORACLE_FUEL).normal()) {
        (Some(a), Some(b)) if a.alpha_eq(&b) => Label::Equal,
        _ => Label::Unlabeled,
    }
}

/// A closed term built from abstractions, applications, bound variables and
/// the combinators `I`, `K`, `S`.
pub fn random_closed_term(rng: &mut impl Rng, depth: usize) -> Term {
    fn go(rng: &mut impl Rng, depth: usize, scope: &mut Vec<String>) -> Term {
        let leaf = depth == 0 || rng.gen_bool(0.25);
        if leaf {
            if !scope.is_empty() && rng.gen_bool(0.75) {
                let x = &scope[rng.gen_range(0..scope.len())];
                return Term::var(x);
            }
            return match rng.gen_range(0..3) {
                0 => Term::identity(),
                1 => Term::k(),
                _ => Term::s(),
            };
        }
        if rng.gen_bool(0.4) {
            let x = format!("v{}", scope.len());
            scope.push(x.clone());
            let body = go(rng, depth - 1, scope);
            scope.pop();
            Term::abs(&x, body)
        } else {
            let f = go(rng, depth - 1, scope);
            let a = go(rng, depth - 1, scope);
            Term::app(f, a)
        }
    }
    go(rng, depth, &mut Vec::new())
}

fn fresh(t: &Term, k: usize) -> String {
    let mut i = k;
    loop {
        let x = format!("w{i}");
        if !mentions(t, &x) {
            return x;
        }
        i += 1;
    }
}

fn mentions(t: &Term, x: &str) -> bool {
    match t {
        Term::Var(y) => &**y == x,
        Term::Abs(y, b) => &**y == x || mentions(b, x),
        Term::App(f, a) => mentions(f, x) || mentions(a, x),
    }
}

fn expand_here(rng: &mut impl Rng, s: Term) -> Term {
    let v = fresh(&s, 0);
    match rng.gen_range(0..3) {
        0 => Term::app(Term::abs(&v, Term::var(&v)), s),
        1 => {
            let p = random_closed_term(rng, 2);
            Term::app(Term::abs(&v, s), p)
        }
        _ => {
            let p = random_closed_term(rng, 2);
            Term::apps(Term::k(), [s, p])
        }
    }
}

fn size(t: &Term) -> usize {
    match t {
        Term::Var(_) => 1,
        Term::Abs(_, b) => 1 + size(b),
        Term::App(f, a) => 1 + size(f) + size(a),
    }
}

/// Replaces one subterm `s` by a redex contracting to `s`.
pub fn beta_expand(rng: &mut impl Rng, t: &Term) -> Term {
    fn go(rng: &mut impl Rng, t: &Term, target: &mut usize) -> Term {
        if *target == 0 {
            *target = usize::MAX;
            return expand_here(rng, t.clone());
        }
        *target -= 1;
        match t {
            Term::Var(_) => t.clone(),
            Term::Abs(x, b) => Term::Abs(x.clone(), Box::new(go(rng, b, target))),
            Term::App(f, a) => {
                let f2 = go(rng, f, target);
                let a2 = go(rng, a, target);
                Term::app(f2, a2)
            }
        }
    }
    let mut target = rng.gen_range(0..size(t));
    go(rng, t, &mut target)
}

fn check_size(size: usize) -> Result<()> {
    if size > MAX_CORPUS {
        return Err(Error::TooLarge(format!("corpus of {size} pairs, at most {MAX_CORPUS}")));
    }
    Ok(())
}

fn normalizing_term(rng: &mut impl Rng) -> Term {
    loop {
        let depth = rng.gen_range(1..=4);
        let t = random_closed_term(rng, depth);
        if beta_normalize(&t, ORACLE_FUEL).normal().is_some() {
            return t;
        }
    }
}

/// Mixed corpus: pairs `(M, β-expansion of M)` and pairs of independent
/// terms, each labelled by the oracle.
pub fn corpus(seed: u64, size: usize) -> Result<Vec<CorpusPair>> {
    check_size(size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(size);
    for index in 0..size {
        let m = normalizing_term(&mut rng);
        let n = if rng.gen_bool(0.5) {
            let once = beta_expand(&mut rng, &m);
            if rng.gen_bool(0.5) {
                beta_expand(&mut rng, &once)
            } else {
                once
            }
        } else {
            let depth = rng.gen_range(1..=4);
            random_closed_term(&mut rng, depth)
        };
        let label = oracle_label(&m, &n);
        out.push(CorpusPair { index, m, n, label });
    }
    Ok(out)
}

/// `size` pairs, all labelled `EQUAL`.
pub fn equal_pairs(seed: u64, size: usize) -> Result<Vec<CorpusPair>> {
    check_size(size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        let m = normalizing_term(&mut rng);
        let mut n = beta_expand(&mut rng, &m);
        if rng.gen_bool(0.5) {
            n = beta_expand(&mut rng, &n);
        }
        if oracle_label(&m, &n) == Label::Equal {
            out.push(CorpusPair { index: out.len(), m, n, label: Label::Equal });
        }
    }
    Ok(out)
}

/// Closed terms for per-term checks (both sides of a mixed corpus).
pub fn corpus_terms(seed: u64, count: usize) -> Result<Vec<Term>> {
    let pairs = corpus(seed, count.div_ceil(2))?;
    Ok(pairs.into_iter().flat_map(|p| [p.m, p.n]).take(count).collect())
}
