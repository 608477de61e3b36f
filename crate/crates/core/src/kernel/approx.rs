use std::sync::Arc;

use super::{AxiomReport, Budget, Membership, Sys};
use crate::error::{Error, Result};
use crate::token::{subsets_up_to, ConSet, Token};

type RelFn = Arc<dyn Fn(&ConSet, &Token) -> Membership + Send + Sync>;

/// A relation between `Con_A` and `B`, queried pointwise.
#[derive(Clone)]
pub struct ApproxRelation {
    source: Sys,
    target: Sys,
    rel: RelFn,
}

impl ApproxRelation {
    pub fn new(
        source: Sys,
        target: Sys,
        rel: impl Fn(&ConSet, &Token) -> Membership + Send + Sync + 'static,
    ) -> ApproxRelation {
        ApproxRelation { source, target, rel: Arc::new(rel) }
    }

    /// The entailment relation of `sys`, the identity on `sys`.
    pub fn identity(sys: Sys) -> ApproxRelation {
        let s = sys.clone();
        ApproxRelation::new(sys.clone(), sys, move |a, t| Membership::from_bool(s.entails(a, t)))
    }

    pub fn empty(source: Sys, target: Sys) -> ApproxRelation {
        ApproxRelation::new(source, target, |_, _| Membership::No)
    }

    pub fn source(&self) -> &Sys {
        &self.source
    }

    pub fn target(&self) -> &Sys {
        &self.target
    }

    pub fn query(&self, a: &ConSet, t: &Token) -> Membership {
        (self.rel)(a, t)
    }

    /// `{β ∈ universe : a R β}` and whether any answer was unknown.
    fn image(&self, a: &ConSet, universe: &[Token]) -> (ConSet, bool) {
        let mut unknown = false;
        let img = universe
            .iter()
            .filter(|t| match self.query(a, t) {
                Membership::Yes => true,
                Membership::No => false,
                Membership::Unknown => {
                    unknown = true;
                    false
                }
            })
            .cloned()
            .collect();
        (img, unknown)
    }
}

/// (AR1) and (AR2) over the sets enumerated by `budget`.
pub fn check_approximable(r: &ApproxRelation, budget: &Budget) -> Result<AxiomReport> {
    let su = r.source.level(budget.level);
    let tu = r.target.level(budget.level);
    let exhaustive = budget.is_exhaustive(r.source.as_ref(), &su) && budget.is_exhaustive(r.target.as_ref(), &tu);
    let sets = budget.sets(&su)?;
    let mut consistent = Vec::new();
    for a in sets {
        if r.source.con_capped(&a, budget.subset_cap)? {
            consistent.push(a);
        }
    }
    let mut report = AxiomReport { entries: Vec::new(), exhaustive };

    let mut w = None;
    for a in &consistent {
        let (img, _) = r.image(a, &tu);
        if !r.target.con_capped(&img, budget.subset_cap)? {
            w = Some(format!("{a} R {img}"));
            break;
        }
    }
    report.push("AR1", w);

    let mut w = None;
    'ar2: for a2 in &consistent {
        let e: Vec<Token> = su.iter().filter(|t| r.source.entails(a2, t)).cloned().collect();
        let card = budget.card_for(&e);
        let mut lowers = subsets_up_to(&e, card);
        lowers.push(e.iter().cloned().collect());
        for a in lowers.iter().filter(|a| r.source.con(a)) {
            let (img, _) = r.image(a, &tu);
            let iv: Vec<Token> = img.iter().cloned().collect();
            let card = budget.card_for(&iv);
            let mut bs = subsets_up_to(&iv, card);
            bs.push(img.clone());
            for b in &bs {
                for g in &tu {
                    if r.target.entails(b, g) && r.query(a2, g) == Membership::No {
                        w = Some(format!("{a2} |- {a}, {a} R {b}, {b} |- {g}"));
                        break 'ar2;
                    }
                }
            }
        }
    }
    report.push("AR2", w);
    Ok(report)
}

/// `S ∘ R`: `a (S∘R) γ` iff some non-empty consistent `b` has `a R β` for
/// every `β ∈ b` and `b S γ`. Witnesses are searched among tokens at
/// `budget.level`.
pub fn compose_approximable(r: &ApproxRelation, s: &ApproxRelation, budget: &Budget) -> Result<ApproxRelation> {
    if !Arc::ptr_eq(&r.target, &s.source) {
        return Err(Error::WebMismatch);
    }
    let mid = r.target.clone();
    let universe = mid.level(budget.level);
    if universe.len() > budget.universe_cap {
        return Err(Error::BudgetExceeded(format!("middle universe of {} tokens", universe.len())));
    }
    let exhaustive = budget.is_exhaustive(mid.as_ref(), &universe);
    let card = budget.max_card;
    let (r2, s2) = (r.clone(), s.clone());
    Ok(ApproxRelation::new(r.source.clone(), s.target.clone(), move |a, g| {
        let (img, mut unknown) = r2.image(a, &universe);
        if !img.is_empty() && mid.con(&img) && s2.query(&img, g).is_yes() {
            return Membership::Yes;
        }
        let iv: Vec<Token> = img.iter().cloned().collect();
        let c = if exhaustive { iv.len() } else { card };
        for b in subsets_up_to(&iv, c) {
            if b.is_empty() || !mid.con(&b) {
                continue;
            }
            match s2.query(&b, g) {
                Membership::Yes => return Membership::Yes,
                Membership::Unknown => unknown = true,
                Membership::No => {}
            }
        }
        if exhaustive && c >= iv.len() && !unknown {
            Membership::No
        } else {
            Membership::Unknown
        }
    }))
}
