//! Deliberately broken wrappers around a valid system, used to confirm that
//! the axiom checks catch real defects.

use std::sync::Arc;

use super::{InfoSys, Sys};
use crate::token::{ConSet, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsMutation {
    /// `∅ ⊬ ν`.
    DropUnit,
    /// `{t} ⊬ t` for one token.
    DropReflexivity,
    /// `{t}` inconsistent for one token.
    RejectSingleton,
}

impl IsMutation {
    pub const ALL: [IsMutation; 3] = [IsMutation::DropUnit, IsMutation::DropReflexivity, IsMutation::RejectSingleton];

    /// The check expected to report the defect.
    pub fn target_axiom(self) -> &'static str {
        match self {
            IsMutation::DropUnit => "I4",
            IsMutation::DropReflexivity => "I2",
            IsMutation::RejectSingleton => "CON-SINGLETON",
        }
    }
}

struct Mutated {
    inner: Sys,
    kind: IsMutation,
    target: Token,
}

impl InfoSys for Mutated {
    fn nu(&self) -> Token {
        self.inner.nu()
    }

    fn has_token(&self, t: &Token) -> bool {
        self.inner.has_token(t)
    }

    fn con(&self, a: &ConSet) -> bool {
        if self.kind == IsMutation::RejectSingleton && a.len() == 1 && a.contains(&self.target) {
            return false;
        }
        self.inner.con(a)
    }

    fn entails(&self, a: &ConSet, t: &Token) -> bool {
        match self.kind {
            IsMutation::DropUnit if a.is_empty() && *t == self.inner.nu() => false,
            IsMutation::DropReflexivity if a.len() == 1 && a.contains(t) && *t == self.target => false,
            _ => self.inner.entails(a, t),
        }
    }

    fn level(&self, level: usize) -> Vec<Token> {
        self.inner.level(level)
    }

    fn is_finite(&self) -> bool {
        self.inner.is_finite()
    }

    fn describe(&self) -> String {
        format!("{:?}({})", self.kind, self.inner.describe())
    }
}

/// Wraps `sys` with the defect `kind`, aimed at a token of `level` chosen
/// by `seed`.
pub fn mutate(sys: &Sys, kind: IsMutation, level: usize, seed: u64) -> Sys {
    let tokens = sys.level(level);
    let target = if tokens.is_empty() { sys.nu() } else { tokens[(seed % tokens.len() as u64) as usize].clone() };
    Arc::new(Mutated { inner: sys.clone(), kind, target })
}
