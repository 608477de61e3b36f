use std::sync::Arc;

use super::{FiniteSys, InfoSys, Sys};
use crate::error::{Error, Result};
use crate::token::{subsets_up_to, ConSet, Token};

/// The one-token system `⊤`.
pub fn terminal() -> Sys {
    Arc::new(FiniteSys::custom("top", [Token::Nu], |_| true, |_, t| *t == Token::Nu))
}

pub fn product(a: Sys, b: Sys) -> Sys {
    Arc::new(Product::new(a, b))
}

pub fn exponential(a: Sys, b: Sys) -> Sys {
    Arc::new(Exponential::new(a, b))
}

/// `A ⅋ B`: tokens `(α, ν_B)`, `(ν_A, β)`, and the shared `(ν_A, ν_B)`.
#[derive(Clone)]
pub struct Product {
    left: Sys,
    right: Sys,
}

impl Product {
    pub fn new(left: Sys, right: Sys) -> Product {
        Product { left, right }
    }

    pub fn left(&self) -> &Sys {
        &self.left
    }

    pub fn right(&self) -> &Sys {
        &self.right
    }

    pub fn fst(&self, t: &Token) -> Token {
        match t {
            Token::InL(x) => (**x).clone(),
            _ => self.left.nu(),
        }
    }

    pub fn snd(&self, t: &Token) -> Token {
        match t {
            Token::InR(x) => (**x).clone(),
            _ => self.right.nu(),
        }
    }

    /// The product token `(α, β)`, if one of the components is the unit.
    pub fn pair(&self, alpha: &Token, beta: &Token) -> Option<Token> {
        let ln = *alpha == self.left.nu();
        let rn = *beta == self.right.nu();
        match (ln, rn) {
            (true, true) => Some(Token::ProdNu),
            (false, true) => Some(Token::inl(alpha.clone())),
            (true, false) => Some(Token::inr(beta.clone())),
            (false, false) => None,
        }
    }

    pub fn fst_set(&self, a: &ConSet) -> ConSet {
        a.map(|t| self.fst(t))
    }

    pub fn snd_set(&self, a: &ConSet) -> ConSet {
        a.map(|t| self.snd(t))
    }
}

impl InfoSys for Product {
    fn nu(&self) -> Token {
        Token::ProdNu
    }

    fn has_token(&self, t: &Token) -> bool {
        match t {
            Token::ProdNu => true,
            Token::InL(x) => **x != self.left.nu() && self.left.has_token(x),
            Token::InR(x) => **x != self.right.nu() && self.right.has_token(x),
            _ => false,
        }
    }

    fn con(&self, a: &ConSet) -> bool {
        self.left.con(&self.fst_set(a)) && self.right.con(&self.snd_set(a))
    }

    fn con_capped(&self, a: &ConSet, cap: usize) -> Result<bool> {
        Ok(self.left.con_capped(&self.fst_set(a), cap)? && self.right.con_capped(&self.snd_set(a), cap)?)
    }

    fn entails(&self, a: &ConSet, t: &Token) -> bool {
        self.left.entails(&self.fst_set(a), &self.fst(t)) && self.right.entails(&self.snd_set(a), &self.snd(t))
    }

    fn level(&self, level: usize) -> Vec<Token> {
        let mut out = vec![Token::ProdNu];
        let ln = self.left.nu();
        let rn = self.right.nu();
        out.extend(self.left.level(level).into_iter().filter(|t| *t != ln).map(Token::inl));
        out.extend(self.right.level(level).into_iter().filter(|t| *t != rn).map(Token::inr));
        out
    }

    fn is_finite(&self) -> bool {
        self.left.is_finite() && self.right.is_finite()
    }

    fn describe(&self) -> String {
        format!("({} par {})", self.left.describe(), self.right.describe())
    }
}

/// `A ⇒ B`: tokens `(c, β)` with `c ∈ Con_A`.
#[derive(Clone)]
pub struct Exponential {
    source: Sys,
    target: Sys,
    ante_cap: usize,
}

impl Exponential {
    pub fn new(source: Sys, target: Sys) -> Exponential {
        Exponential { source, target, ante_cap: 2 }
    }

    /// Cap on antecedent cardinality when enumerating levels of an infinite source.
    pub fn with_ante_cap(mut self, cap: usize) -> Exponential {
        self.ante_cap = cap;
        self
    }

    pub fn source(&self) -> &Sys {
        &self.source
    }

    pub fn target(&self) -> &Sys {
        &self.target
    }

    /// `{β_i : c ⊢ a_i}` for the pairs `(a_i, β_i)` of `x`.
    pub fn fire(&self, x: &ConSet, c: &ConSet) -> ConSet {
        x.iter()
            .filter_map(|t| t.as_arrow())
            .filter(|(a, _)| self.source.entails_all(c, a))
            .map(|(_, b)| b.clone())
            .collect()
    }

    fn con_search(&self, pairs: &[(&ConSet, &Token)]) -> bool {
        fn go(
            ex: &Exponential,
            pairs: &[(&ConSet, &Token)],
            idx: usize,
            ante: ConSet,
            succ: ConSet,
        ) -> bool {
            if idx == pairs.len() {
                return true;
            }
            // skip pairs[idx]
            if !go(ex, pairs, idx + 1, ante.clone(), succ.clone()) {
                return false;
            }
            let (a, b) = pairs[idx];
            let ante2 = ante.union(a);
            if !ex.source.con(&ante2) {
                return true;
            }
            let succ2 = succ.with(b.clone());
            if !ex.target.con(&succ2) {
                return false;
            }
            go(ex, pairs, idx + 1, ante2, succ2)
        }
        go(self, pairs, 0, ConSet::empty(), ConSet::empty())
    }

    fn arrows<'a>(&self, x: &'a ConSet) -> Option<Vec<(&'a ConSet, &'a Token)>> {
        x.iter().map(|t| t.as_arrow()).collect()
    }
}

impl InfoSys for Exponential {
    fn nu(&self) -> Token {
        Token::arrow(ConSet::empty(), self.target.nu())
    }

    fn has_token(&self, t: &Token) -> bool {
        match t.as_arrow() {
            Some((a, b)) => a.iter().all(|x| self.source.has_token(x)) && self.source.con(a) && self.target.has_token(b),
            None => false,
        }
    }

    fn con(&self, x: &ConSet) -> bool {
        let Some(pairs) = self.arrows(x) else { return false };
        let all_succ: ConSet = pairs.iter().map(|(_, b)| (*b).clone()).collect();
        if self.target.con(&all_succ) {
            return true;
        }
        self.con_search(&pairs)
    }

    fn con_capped(&self, x: &ConSet, cap: usize) -> Result<bool> {
        let Some(pairs) = self.arrows(x) else { return Ok(false) };
        let all_succ: ConSet = pairs.iter().map(|(_, b)| (*b).clone()).collect();
        if self.target.con(&all_succ) {
            return Ok(true);
        }
        if pairs.len() > cap {
            return Err(Error::BudgetExceeded(format!(
                "exponential consistency over {} pairs exceeds subset cap {cap}",
                pairs.len()
            )));
        }
        Ok(self.con_search(&pairs))
    }

    fn entails(&self, x: &ConSet, t: &Token) -> bool {
        let Some((c, gamma)) = t.as_arrow() else { return false };
        let fired = self.fire(x, c);
        self.target.entails(&fired, gamma)
    }

    fn level(&self, level: usize) -> Vec<Token> {
        let src = self.source.level(level);
        let antes: Vec<ConSet> = if self.source.is_finite() {
            subsets_up_to(&src, src.len())
        } else {
            subsets_up_to(&src, self.ante_cap)
        };
        let tgt = self.target.level(level);
        let mut out = Vec::new();
        for a in antes.into_iter().filter(|a| self.source.con(a)) {
            for b in &tgt {
                out.push(Token::arrow(a.clone(), b.clone()));
            }
        }
        out
    }

    fn is_finite(&self) -> bool {
        self.source.is_finite() && self.target.is_finite()
    }

    fn describe(&self) -> String {
        format!("({} => {})", self.source.describe(), self.target.describe())
    }
}
