//! Information systems: the trait, finite systems, points, and the
//! product / exponential / terminal constructions.

mod approx;
mod axioms;
mod constructions;
mod morphism;
mod mutation;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::token::{ConSet, Token};

pub use approx::{check_approximable, compose_approximable, ApproxRelation};
pub use axioms::{check_is_axioms, check_is_axioms_on, AxiomReport, AxiomVerdict, Budget};
pub use constructions::{exponential, product, terminal, Exponential, Product};
pub use mutation::{mutate, IsMutation};
pub use morphism::{check_morphism, check_morphism_on, retraction_pair, MorphismKind, RetractionPair, TokenMap};

/// A Scott information system given intensionally.
///
/// `con` and `entails` are only meaningful on sets of tokens of the system;
/// `entails` is only consulted on consistent sets.
pub trait InfoSys: Send + Sync {
    fn nu(&self) -> Token;

    fn has_token(&self, t: &Token) -> bool;

    fn con(&self, a: &ConSet) -> bool;

    fn entails(&self, a: &ConSet, t: &Token) -> bool;

    /// Tokens enumerable at `level`. Monotone in `level`; for finite systems
    /// every level returns all tokens.
    fn level(&self, level: usize) -> Vec<Token>;

    fn is_finite(&self) -> bool;

    /// Consistency under an explicit subset-enumeration cap. Systems whose
    /// consistency check is exponential override this.
    fn con_capped(&self, a: &ConSet, _cap: usize) -> Result<bool> {
        Ok(self.con(a))
    }

    fn entails_all(&self, a: &ConSet, b: &ConSet) -> bool {
        b.iter().all(|t| self.entails(a, t))
    }

    fn describe(&self) -> String;
}

pub type Sys = Arc<dyn InfoSys>;

/// Three-valued answer for membership queries on approximated sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Yes,
    No,
    Unknown,
}

impl Membership {
    pub fn from_bool(b: bool) -> Membership {
        if b {
            Membership::Yes
        } else {
            Membership::No
        }
    }

    pub fn is_yes(self) -> bool {
        self == Membership::Yes
    }
}

type ConFn = Arc<dyn Fn(&ConSet) -> bool + Send + Sync>;
type EntailsFn = Arc<dyn Fn(&ConSet, &Token) -> bool + Send + Sync>;

/// A finite information system with predicate-valued `con` and `entails`.
#[derive(Clone)]
pub struct FiniteSys {
    name: String,
    tokens: Vec<Token>,
    con: ConFn,
    entails: EntailsFn,
}

impl FiniteSys {
    /// Arbitrary predicates over an explicit token list. No axioms are
    /// enforced; use [`check_is_axioms`] to validate.
    pub fn custom(
        name: impl Into<String>,
        tokens: impl IntoIterator<Item = Token>,
        con: impl Fn(&ConSet) -> bool + Send + Sync + 'static,
        entails: impl Fn(&ConSet, &Token) -> bool + Send + Sync + 'static,
    ) -> FiniteSys {
        let tokens: BTreeSet<Token> = tokens.into_iter().collect();
        FiniteSys {
            name: name.into(),
            tokens: tokens.into_iter().collect(),
            con: Arc::new(con),
            entails: Arc::new(entails),
        }
    }

    /// Atoms plus `ν`; every finite set is consistent, `a ⊢ α` iff `α ∈ a` or `α = ν`.
    pub fn flat<S: AsRef<str>>(atoms: &[S]) -> FiniteSys {
        let mut tokens: Vec<Token> = atoms.iter().map(Token::atom).collect();
        tokens.push(Token::Nu);
        FiniteSys::custom(
            format!("flat({})", atoms.iter().map(|s| s.as_ref()).collect::<Vec<_>>().join(",")),
            tokens,
            |_| true,
            |a, t| *t == Token::Nu || a.contains(t),
        )
    }

    /// A system whose entailment is the least relation closed under the given
    /// rules, reflexivity, and `∅ ⊢ ν`. Consistent sets are the subsets of the
    /// listed maximal sets (or everything, when `maximal` is `None`).
    pub fn from_rules(
        name: impl Into<String>,
        tokens: impl IntoIterator<Item = Token>,
        maximal: Option<Vec<ConSet>>,
        rules: Vec<(ConSet, Token)>,
    ) -> FiniteSys {
        let mut toks: BTreeSet<Token> = tokens.into_iter().collect();
        toks.insert(Token::Nu);
        let con: ConFn = match maximal {
            None => Arc::new(|_| true),
            Some(max) => Arc::new(move |a: &ConSet| a.is_empty() || max.iter().any(|m| a.is_subset(m))),
        };
        let rules = Arc::new(rules);
        let entails: EntailsFn = Arc::new(move |a: &ConSet, t: &Token| {
            if *t == Token::Nu || a.contains(t) {
                return true;
            }
            forward_chain(a, &rules).contains(t)
        });
        FiniteSys { name: name.into(), tokens: toks.into_iter().collect(), con, entails }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

fn forward_chain(a: &ConSet, rules: &[(ConSet, Token)]) -> BTreeSet<Token> {
    let mut known: BTreeSet<Token> = a.iter().cloned().collect();
    known.insert(Token::Nu);
    loop {
        let before = known.len();
        for (pre, post) in rules {
            if pre.iter().all(|p| known.contains(p)) {
                known.insert(post.clone());
            }
        }
        if known.len() == before {
            return known;
        }
    }
}

impl InfoSys for FiniteSys {
    fn nu(&self) -> Token {
        Token::Nu
    }

    fn has_token(&self, t: &Token) -> bool {
        self.tokens.binary_search(t).is_ok()
    }

    fn con(&self, a: &ConSet) -> bool {
        (self.con)(a)
    }

    fn entails(&self, a: &ConSet, t: &Token) -> bool {
        (self.entails)(a, t)
    }

    fn level(&self, _level: usize) -> Vec<Token> {
        self.tokens.clone()
    }

    fn is_finite(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

impl fmt::Debug for FiniteSys {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiniteSys({}, {:?})", self.name, self.tokens)
    }
}

/// A point given by finitely many generators: membership of `β` is `gens ⊢ β`.
#[derive(Clone)]
pub struct PointApprox {
    sys: Sys,
    gens: ConSet,
}

impl PointApprox {
    pub fn sys(&self) -> &Sys {
        &self.sys
    }

    pub fn generators(&self) -> &ConSet {
        &self.gens
    }

    pub fn membership(&self, t: &Token) -> Membership {
        Membership::from_bool(self.sys.entails(&self.gens, t))
    }

    pub fn contains(&self, t: &Token) -> bool {
        self.membership(t).is_yes()
    }

    /// The extension of the point, for finite systems.
    pub fn materialize(&self) -> Option<BTreeSet<Token>> {
        if !self.sys.is_finite() {
            return None;
        }
        Some(self.extension_at(0))
    }

    /// Members among the tokens enumerable at `level`, plus the generators.
    pub fn extension_at(&self, level: usize) -> BTreeSet<Token> {
        let mut out: BTreeSet<Token> =
            self.sys.level(level).into_iter().filter(|t| self.contains(t)).collect();
        out.extend(self.gens.iter().cloned());
        out
    }

    pub fn same_sys(&self, other: &PointApprox) -> bool {
        Arc::ptr_eq(&self.sys, &other.sys)
    }
}

impl fmt::Debug for PointApprox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "closure({})", self.gens)
    }
}

/// `ā = {β : a ⊢ β}`.
pub fn closure(sys: &Sys, a: &ConSet) -> Result<PointApprox> {
    if !sys.con(a) {
        return Err(Error::InconsistentSet(a.to_string()));
    }
    Ok(PointApprox { sys: sys.clone(), gens: a.clone() })
}

/// All points of a finite system, each materialized once.
pub fn all_points(sys: &Sys, budget: &Budget) -> Result<Vec<BTreeSet<Token>>> {
    let universe = sys.level(budget.level);
    let sets = budget.sets(&universe)?;
    let mut seen = BTreeSet::new();
    for a in sets.iter().filter(|a| sys.con(a)) {
        seen.insert(closure(sys, a)?.extension_at(budget.level));
    }
    Ok(seen.into_iter().collect())
}
