use std::fmt;

use super::InfoSys;
use crate::error::{Error, Result};
use crate::token::{subsets_up_to, ConSet, Token};

/// Limits for the finite checks over possibly infinite systems.
#[derive(Debug, Clone)]
pub struct Budget {
    /// Enumeration level of the token universe.
    pub level: usize,
    /// Cardinality bound on tested sets when not exhaustive.
    pub max_card: usize,
    /// Largest universe accepted at all.
    pub universe_cap: usize,
    /// Universes up to this size are checked over all subsets.
    pub exhaustive_tokens: usize,
    /// Subset cap passed to `con_capped`.
    pub subset_cap: usize,
    /// Cardinality of sub-sets of `E(a)` tried when checking cut.
    pub cut_card: usize,
    /// Largest number of test sets enumerated.
    pub max_sets: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { level: 0, max_card: 3, universe_cap: 512, exhaustive_tokens: 12, subset_cap: 16, cut_card: 2, max_sets: 200_000 }
    }
}

impl Budget {
    pub fn at_level(level: usize) -> Budget {
        Budget { level, ..Budget::default() }
    }

    /// Whether every subset of `universe` is enumerated.
    pub fn all_subsets(&self, universe: &[Token]) -> bool {
        universe.len() <= self.exhaustive_tokens
    }

    pub fn is_exhaustive(&self, sys: &dyn InfoSys, universe: &[Token]) -> bool {
        sys.is_finite() && self.all_subsets(universe)
    }

    pub(crate) fn card_for(&self, universe: &[Token]) -> usize {
        if self.all_subsets(universe) {
            universe.len()
        } else {
            self.cut_card
        }
    }

    pub fn sets(&self, universe: &[Token]) -> Result<Vec<ConSet>> {
        if universe.len() > self.universe_cap {
            return Err(Error::BudgetExceeded(format!(
                "universe of {} tokens exceeds cap {}",
                universe.len(),
                self.universe_cap
            )));
        }
        let card = if self.all_subsets(universe) { universe.len() } else { self.max_card };
        let count = set_count(universe.len(), card);
        if count > self.max_sets {
            return Err(Error::BudgetExceeded(format!(
                "{count} sets of at most {card} of {} tokens exceeds cap {}",
                universe.len(),
                self.max_sets
            )));
        }
        Ok(subsets_up_to(universe, card))
    }
}

/// Number of subsets of an `n`-set with at most `k` elements, saturating.
fn set_count(n: usize, k: usize) -> usize {
    let mut total: usize = 0;
    let mut term: u128 = 1;
    for i in 0..=k.min(n) {
        if i > 0 {
            term = term * (n - i + 1) as u128 / i as u128;
        }
        total = total.saturating_add(usize::try_from(term).unwrap_or(usize::MAX));
    }
    total
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomVerdict {
    pub name: String,
    pub pass: bool,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomReport {
    pub entries: Vec<AxiomVerdict>,
    pub exhaustive: bool,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn get(&self, name: &str) -> Option<&AxiomVerdict> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.entries.iter().filter(|e| !e.pass).map(|e| e.name.as_str()).collect()
    }

    pub(crate) fn push(&mut self, name: &str, witness: Option<String>) {
        self.entries.push(AxiomVerdict { name: name.to_string(), pass: witness.is_none(), witness });
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            match &e.witness {
                None => writeln!(f, "AXIOM {} PASS", e.name)?,
                Some(w) => writeln!(f, "AXIOM {} FAIL witness={}", e.name, w)?,
            }
        }
        Ok(())
    }
}

/// Checks downward closure and singletons of `Con`, and (I1)-(I4), over
/// the tokens at `budget.level`. Exhaustive for small finite systems.
pub fn check_is_axioms(sys: &dyn InfoSys, budget: &Budget) -> Result<AxiomReport> {
    let universe = sys.level(budget.level);
    let sets = budget.sets(&universe)?;
    let exhaustive = budget.is_exhaustive(sys, &universe);
    check_is_axioms_on(sys, &universe, &sets, exhaustive, budget)
}

/// The same checks over caller-supplied tokens and candidate sets.
pub fn check_is_axioms_on(
    sys: &dyn InfoSys,
    universe: &[Token],
    sets: &[ConSet],
    exhaustive: bool,
    budget: &Budget,
) -> Result<AxiomReport> {
    let con = |a: &ConSet| sys.con_capped(a, budget.subset_cap);

    let mut consistent = Vec::new();
    for a in sets {
        if con(a)? {
            consistent.push(a.clone());
        }
    }

    let mut report = AxiomReport { entries: Vec::new(), exhaustive };

    let mut w = None;
    for t in universe {
        if !con(&ConSet::singleton(t.clone()))? {
            w = Some(format!("{{{t}}}"));
            break;
        }
    }
    report.push("CON-SINGLETON", w);

    let mut w = None;
    'down: for a in &consistent {
        for t in a.iter() {
            let smaller: ConSet = a.iter().filter(|x| *x != t).cloned().collect();
            if !con(&smaller)? {
                w = Some(format!("{a} without {t}"));
                break 'down;
            }
        }
    }
    report.push("CON-DOWN", w);

    let entailed = |a: &ConSet| -> ConSet { universe.iter().filter(|t| sys.entails(a, t)).cloned().collect() };

    let mut w = None;
    for a in &consistent {
        let e = entailed(a);
        if !con(&a.union(&e))? {
            w = Some(format!("{a}"));
            break;
        }
    }
    report.push("I1", w);

    let mut w = None;
    'refl: for a in &consistent {
        for t in a.iter() {
            if !sys.entails(a, t) {
                w = Some(format!("{a} |/- {t}"));
                break 'refl;
            }
        }
    }
    report.push("I2", w);

    let mut w = None;
    'cut: for a in &consistent {
        let e = entailed(a);
        let ev: Vec<Token> = e.iter().cloned().collect();
        let card = budget.card_for(&ev);
        let mut mids = subsets_up_to(&ev, card);
        mids.push(e.clone());
        for b in &mids {
            if !con(b)? {
                continue;
            }
            for g in universe {
                if sys.entails(b, g) && !sys.entails(a, g) {
                    w = Some(format!("{a} |- {b} |- {g}"));
                    break 'cut;
                }
            }
        }
    }
    report.push("I3", w);

    let nu = sys.nu();
    let w = if sys.entails(&ConSet::empty(), &nu) { None } else { Some(format!("{{}} |/- {nu}")) };
    report.push("I4", w);

    Ok(report)
}
