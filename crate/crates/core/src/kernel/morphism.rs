use std::fmt;
use std::sync::Arc;

use super::{closure, AxiomReport, Budget, PointApprox, Sys};
use crate::error::{Error, Result};
use crate::token::{ConSet, Token};

type ApplyFn = Arc<dyn Fn(&Token) -> Option<Token> + Send + Sync>;

/// A (possibly partial) function between the token sets of two systems.
#[derive(Clone)]
pub struct TokenMap {
    source: Sys,
    target: Sys,
    apply: ApplyFn,
}

impl TokenMap {
    pub fn new(source: Sys, target: Sys, apply: impl Fn(&Token) -> Option<Token> + Send + Sync + 'static) -> TokenMap {
        TokenMap { source, target, apply: Arc::new(apply) }
    }

    pub fn identity(sys: Sys) -> TokenMap {
        TokenMap::new(sys.clone(), sys, |t| Some(t.clone()))
    }

    pub fn source(&self) -> &Sys {
        &self.source
    }

    pub fn target(&self) -> &Sys {
        &self.target
    }

    pub fn apply(&self, t: &Token) -> Option<Token> {
        (self.apply)(t)
    }

    pub fn in_domain(&self, t: &Token) -> bool {
        self.apply(t).is_some()
    }

    /// `f̂(a)`, or `None` if some token of `a` is outside the domain.
    pub fn image(&self, a: &ConSet) -> Option<ConSet> {
        a.iter().map(|t| self.apply(t)).collect::<Option<Vec<_>>>().map(|v| v.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphismKind {
    Mo,
    BMo,
    FMo,
}

impl MorphismKind {
    pub fn name(self) -> &'static str {
        match self {
            MorphismKind::Mo => "Mo",
            MorphismKind::BMo => "bMo",
            MorphismKind::FMo => "fMo",
        }
    }
}

impl fmt::Display for MorphismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Checks the requested conditions over the domain tokens enumerable at `budget.level`.
pub fn check_morphism(f: &TokenMap, kinds: &[MorphismKind], budget: &Budget) -> Result<AxiomReport> {
    let universe: Vec<Token> = f.source.level(budget.level).into_iter().filter(|t| f.in_domain(t)).collect();
    let sets = budget.sets(&universe)?;
    let exhaustive = budget.is_exhaustive(f.source.as_ref(), &universe);
    check_morphism_on(f, kinds, &universe, &sets, exhaustive, budget.subset_cap)
}

/// The same checks over caller-supplied domain tokens and candidate sets.
pub fn check_morphism_on(
    f: &TokenMap,
    kinds: &[MorphismKind],
    universe: &[Token],
    sets: &[ConSet],
    exhaustive: bool,
    cap: usize,
) -> Result<AxiomReport> {
    let mut report = AxiomReport { entries: Vec::new(), exhaustive };

    for &kind in kinds {
        let mut w = None;
        match kind {
            MorphismKind::Mo => {
                for a in sets {
                    let img = f.image(a).expect("domain tokens");
                    let ca = f.source.con_capped(a, cap)?;
                    let cb = f.target.con_capped(&img, cap)?;
                    if ca != cb {
                        w = Some(format!("con({a})={ca} but con({img})={cb}"));
                        break;
                    }
                }
            }
            MorphismKind::BMo | MorphismKind::FMo => {
                'outer: for a in sets {
                    if !f.source.con_capped(a, cap)? {
                        continue;
                    }
                    let img = f.image(a).expect("domain tokens");
                    if !f.target.con_capped(&img, cap)? {
                        continue;
                    }
                    for t in universe {
                        let ft = f.apply(t).expect("domain token");
                        let src = f.source.entails(a, t);
                        let tgt = f.target.entails(&img, &ft);
                        if kind == MorphismKind::BMo && tgt && !src {
                            w = Some(format!("{img} |- {ft} but {a} |/- {t}"));
                            break 'outer;
                        }
                        if kind == MorphismKind::FMo && src && !tgt {
                            w = Some(format!("{a} |- {t} but {img} |/- {ft}"));
                            break 'outer;
                        }
                    }
                }
            }
        }
        report.push(kind.name(), w);
    }
    Ok(report)
}

/// The pair `(f_•, f^•)` induced by a validated b-morphism.
#[derive(Clone)]
pub struct RetractionPair {
    f: TokenMap,
    level: usize,
}

/// Validates (Mo) and (bMo) and returns the induced retraction pair.
pub fn retraction_pair(f: &TokenMap, budget: &Budget) -> Result<RetractionPair> {
    let report = check_morphism(f, &[MorphismKind::Mo, MorphismKind::BMo], budget)?;
    if let Some(bad) = report.entries.iter().find(|e| !e.pass) {
        return Err(Error::NotBMorphism(format!("{}: {}", bad.name, bad.witness.clone().unwrap_or_default())));
    }
    Ok(RetractionPair { f: f.clone(), level: budget.level })
}

impl RetractionPair {
    pub fn map(&self) -> &TokenMap {
        &self.f
    }

    /// `f^•(x)`: closure of the image of `x`.
    pub fn upper(&self, x: &PointApprox) -> Result<PointApprox> {
        if !Arc::ptr_eq(x.sys(), &self.f.source) {
            return Err(Error::WebMismatch);
        }
        let img: ConSet = x.extension_at(self.level).iter().filter_map(|t| self.f.apply(t)).collect();
        closure(&self.f.target, &img)
    }

    /// `f_•(y)`: closure of the preimage of `y`.
    pub fn lower(&self, y: &PointApprox) -> Result<PointApprox> {
        if !Arc::ptr_eq(y.sys(), &self.f.target) {
            return Err(Error::WebMismatch);
        }
        let pre: ConSet = self
            .f
            .source
            .level(self.level)
            .into_iter()
            .filter(|t| self.f.apply(t).map(|ft| y.contains(&ft)).unwrap_or(false))
            .collect();
        closure(&self.f.source, &pre)
    }
}
