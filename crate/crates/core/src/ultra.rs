//! Ultrafilters on finite index sets, ultraproducts of i-webs, the embedding
//! of the product-quotient algebra, Łoś checks for equations, and the
//! `K_e` filter base.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interp::{self, separate, Fuel, Verdict};
use crate::kernel::{closure, AxiomReport, Budget, InfoSys, PointApprox, Sys};
use crate::lambda::{normalize_db, Term};
use crate::token::{subsets_up_to, ConSet, Token};
use crate::webs::{IWeb, Web};

/// An ultrafilter on `{0, …, size-1}`. On a finite index set every
/// ultrafilter is principal, so this is the whole story.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ultrafilter {
    size: usize,
    principal: usize,
}

impl Ultrafilter {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn principal_index(&self) -> usize {
        self.principal
    }

    pub fn contains(&self, x: &BTreeSet<usize>) -> bool {
        x.contains(&self.principal)
    }

    /// `{k : pred(k)} ∈ U`.
    pub fn holds(&self, pred: impl Fn(usize) -> bool) -> bool {
        pred(self.principal)
    }
}

pub fn principal_ultrafilter(size: usize, j: usize) -> Result<Ultrafilter> {
    if j >= size {
        return Err(Error::IndexOutOfRange { index: j, size });
    }
    Ok(Ultrafilter { size, principal: j })
}

/// Ultraproduct information system. Tokens are [`Token::Class`] values whose
/// component at the principal index is the key and whose other components
/// are the factors' units.
struct UltraSys {
    factors: Vec<Sys>,
    nus: Vec<Token>,
    u: Ultrafilter,
}

impl UltraSys {
    fn components(t: &Token) -> Option<&[Token]> {
        match t {
            Token::Class(cs) => Some(cs),
            _ => None,
        }
    }

    fn component(&self, t: &Token, k: usize) -> Option<Token> {
        Self::components(t).filter(|cs| cs.len() == self.factors.len()).map(|cs| cs[k].clone())
    }

    /// `a(k)`, or `None` if some element is not a sequence of the right length.
    fn slice(&self, a: &ConSet, k: usize) -> Option<ConSet> {
        a.iter().map(|t| self.component(t, k)).collect::<Option<BTreeSet<_>>>().map(|s| s.into_iter().collect())
    }

    fn canonical(&self, seq: &[Token]) -> Token {
        let j = self.u.principal;
        let comps = (0..self.nus.len()).map(|k| if k == j { seq[k].clone() } else { self.nus[k].clone() }).collect();
        Token::class(comps)
    }

    fn lift(&self, t: &Token) -> Token {
        let j = self.u.principal;
        let comps = (0..self.nus.len()).map(|k| if k == j { t.clone() } else { self.nus[k].clone() }).collect();
        Token::class(comps)
    }

    fn key(&self) -> &Sys {
        &self.factors[self.u.principal]
    }
}

impl InfoSys for UltraSys {
    fn nu(&self) -> Token {
        Token::class(self.nus.clone())
    }

    fn has_token(&self, t: &Token) -> bool {
        let Some(cs) = Self::components(t) else { return false };
        cs.len() == self.factors.len()
            && self.canonical(cs) == *t
            && self.key().has_token(&cs[self.u.principal])
    }

    fn con(&self, a: &ConSet) -> bool {
        self.u.holds(|k| self.slice(a, k).is_some_and(|ak| self.factors[k].con(&ak)))
    }

    fn con_capped(&self, a: &ConSet, cap: usize) -> Result<bool> {
        let j = self.u.principal;
        match self.slice(a, j) {
            Some(aj) => self.factors[j].con_capped(&aj, cap),
            None => Ok(false),
        }
    }

    fn entails(&self, a: &ConSet, t: &Token) -> bool {
        self.u.holds(|k| match (self.slice(a, k), self.component(t, k)) {
            (Some(ak), Some(tk)) => self.factors[k].entails(&ak, &tk),
            _ => false,
        })
    }

    fn level(&self, level: usize) -> Vec<Token> {
        self.key().level(level).iter().map(|t| self.lift(t)).collect()
    }

    fn is_finite(&self) -> bool {
        self.key().is_finite()
    }

    fn describe(&self) -> String {
        let names: Vec<String> = self.factors.iter().map(|f| f.describe()).collect();
        format!("ultra[{}]@{}", names.join(", "), self.u.principal)
    }
}

/// The ultraproduct i-web `P_U`.
#[derive(Clone)]
pub struct UltraWeb {
    factors: Vec<IWeb>,
    inner: Arc<UltraSys>,
    sys: Sys,
}

pub fn ultraproduct_web(factors: Vec<IWeb>, u: &Ultrafilter) -> Result<UltraWeb> {
    if factors.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if u.size != factors.len() {
        return Err(Error::InvalidArgument(format!(
            "ultrafilter on {} indices for a family of {}",
            u.size,
            factors.len()
        )));
    }
    let inner = Arc::new(UltraSys {
        factors: factors.iter().map(|w| w.sys().clone()).collect(),
        nus: factors.iter().map(|w| w.sys().nu()).collect(),
        u: *u,
    });
    let sys: Sys = inner.clone();
    Ok(UltraWeb { factors, inner, sys })
}

impl UltraWeb {
    pub fn factors(&self) -> &[IWeb] {
        &self.factors
    }

    pub fn ultrafilter(&self) -> Ultrafilter {
        self.inner.u
    }

    /// The factor the ultrafilter concentrates on.
    pub fn key_factor(&self) -> &IWeb {
        &self.factors[self.inner.u.principal]
    }

    /// Canonical representative of the class of `seq`.
    pub fn class_of(&self, seq: &[Token]) -> Result<Token> {
        if seq.len() != self.factors.len() {
            return Err(Error::InvalidArgument(format!("sequence of length {} for {} factors", seq.len(), self.factors.len())));
        }
        Ok(self.inner.canonical(seq))
    }

    /// Token of the key factor to its class.
    pub fn lift(&self, t: &Token) -> Token {
        self.inner.lift(t)
    }

    pub fn lift_set(&self, a: &ConSet) -> ConSet {
        a.map(|t| self.lift(t))
    }

    /// `α/U ↦ α(j)`.
    pub fn collapse(&self, t: &Token) -> Option<Token> {
        self.inner.component(t, self.inner.u.principal)
    }

    pub fn collapse_set(&self, a: &ConSet) -> Option<ConSet> {
        self.inner.slice(a, self.inner.u.principal)
    }

    pub fn as_iweb(&self) -> IWeb {
        Arc::new(self.clone())
    }
}

impl Web for UltraWeb {
    fn sys(&self) -> &Sys {
        &self.sys
    }

    fn phi(&self, a: &ConSet, alpha: &Token) -> Option<Token> {
        // Only the principal component determines the class.
        let j = self.inner.u.principal;
        let aj = self.inner.slice(a, j)?;
        let alj = self.inner.component(alpha, j)?;
        self.factors[j].phi(&aj, &alj).map(|t| self.lift(&t))
    }

    fn phi_inverse(&self, t: &Token) -> Vec<(ConSet, Token)> {
        let Some(tj) = self.collapse(t) else { return Vec::new() };
        if self.inner.canonical(Self::seq(t)) != *t {
            return Vec::new();
        }
        self.key_factor().phi_inverse(&tj).into_iter().map(|(a, al)| (self.lift_set(&a), self.lift(&al))).collect()
    }

    fn is_flat(&self) -> bool {
        self.key_factor().is_flat()
    }

    fn is_free_graph(&self) -> bool {
        self.key_factor().is_free_graph()
    }

    fn describe(&self) -> String {
        self.sys.describe()
    }
}

impl UltraWeb {
    fn seq(t: &Token) -> &[Token] {
        UltraSys::components(t).unwrap_or(&[])
    }
}

/// Checks that `α/U ↦ α(j)` is an i-web isomorphism onto the key factor over
/// the tokens at `budget.level`.
pub fn collapse_check(uw: &UltraWeb, budget: &Budget) -> Result<AxiomReport> {
    collapse_check_levels(uw, budget.level, budget.level, budget)
}

/// As [`collapse_check`], with the bijection tested on the tokens at
/// `token_level` and `con`, `⊢`, `φ` tested for the candidate sets drawn from
/// `set_level` against those tokens.
pub fn collapse_check_levels(uw: &UltraWeb, token_level: usize, set_level: usize, budget: &Budget) -> Result<AxiomReport> {
    let key = uw.key_factor().clone();
    let ks = key.sys().clone();
    let us = uw.sys().clone();
    let universe = us.level(token_level);
    let key_universe = ks.level(token_level);
    let set_universe = us.level(set_level);
    let exhaustive = budget.is_exhaustive(us.as_ref(), &set_universe);
    let mut report = AxiomReport { entries: Vec::new(), exhaustive };

    let mut bij = None;
    let image: BTreeSet<Token> = universe.iter().filter_map(|t| uw.collapse(t)).collect();
    if image.len() != universe.len() || image != key_universe.iter().cloned().collect() {
        bij = Some(format!("{} classes onto {} tokens", universe.len(), key_universe.len()));
    }
    for t in &universe {
        if !us.has_token(t) || uw.collapse(t).map(|c| uw.lift(&c)) != Some(t.clone()) {
            bij = bij.or(Some(format!("{t}")));
        }
    }
    report.push("COLLAPSE-BIJ", bij);

    let nu = (uw.collapse(&us.nu()) != Some(ks.nu())).then(|| format!("{}", us.nu()));
    report.push("COLLAPSE-NU", nu);

    let sets = budget.sets(&set_universe)?;
    let mut con = None;
    let mut ent = None;
    let mut phi = None;
    for a in &sets {
        let aj = uw.collapse_set(a).expect("classes");
        let c = us.con(a);
        if c != ks.con(&aj) {
            con = con.or(Some(format!("{a}")));
        }
        if !c {
            continue;
        }
        for t in &universe {
            let tj = uw.collapse(t).expect("class");
            if us.entails(a, t) != ks.entails(&aj, &tj) {
                ent = ent.or(Some(format!("{a} |- {t}")));
            }
            if a.len() <= budget.max_card {
                let lhs = uw.phi(a, t).and_then(|p| uw.collapse(&p));
                if lhs != key.phi(&aj, &tj) {
                    phi = phi.or(Some(format!("phi({a}, {t})")));
                }
            }
        }
    }
    report.push("COLLAPSE-CON", con);
    report.push("COLLAPSE-ENT", ent);
    report.push("COLLAPSE-PHI", phi);
    Ok(report)
}

/// An `I`-indexed family of points, one per factor.
pub type SeqPoint = Vec<PointApprox>;

fn check_seq(x: &[PointApprox], uw: &UltraWeb) -> Result<()> {
    if x.len() != uw.factors.len() || x.iter().zip(&uw.factors).any(|(p, w)| !Arc::ptr_eq(p.sys(), w.sys())) {
        return Err(Error::WebMismatch);
    }
    Ok(())
}

/// `f(x/U)`: the point of `P_U` whose members are the classes with a
/// representative lying componentwise in `x`.
pub fn embed_point(x: &[PointApprox], uw: &UltraWeb) -> Result<PointApprox> {
    check_seq(x, uw)?;
    let j = uw.ultrafilter().principal_index();
    closure(uw.sys(), &uw.lift_set(x[j].generators()))
}

/// Membership in `f(x/U)` read off the definition: `{k : α(k) ∈ x(k)} ∈ U`.
pub fn embed_contains(x: &[PointApprox], uw: &UltraWeb, alpha: &Token) -> Result<bool> {
    check_seq(x, uw)?;
    let seq = UltraWeb::seq(alpha);
    if seq.len() != x.len() {
        return Err(Error::InvalidArgument(format!("{alpha} is not a class of this ultraproduct")));
    }
    Ok(uw.ultrafilter().holds(|k| x[k].contains(&seq[k])))
}

/// The denotation of `t` in each factor.
pub fn seq_interpret(t: &Term, uw: &UltraWeb, fuel: Fuel) -> Result<SeqPoint> {
    uw.factors.iter().map(|w| interp::Interpreter::new(w, fuel).point(t)).collect()
}

/// Application in the product algebra, computed componentwise.
pub fn seq_apply(x: &[PointApprox], y: &[PointApprox], uw: &UltraWeb, fuel: Fuel) -> Result<SeqPoint> {
    check_seq(x, uw)?;
    check_seq(y, uw)?;
    x.iter().zip(y).zip(&uw.factors).map(|((a, b), w)| interp::apply_points(a, b, w, fuel)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LosVerdict {
    pub factor: Verdict,
    pub ultra: Verdict,
}

impl LosVerdict {
    /// Same verdict kind, side and witness up to the collapse.
    pub fn agrees(&self, uw: &UltraWeb) -> bool {
        match (&self.factor, &self.ultra) {
            (Verdict::Unknown, Verdict::Unknown) => true,
            (Verdict::Separated { witness: a, side: s }, Verdict::Separated { witness: b, side: t })
            | (Verdict::Candidate { witness: a, side: s }, Verdict::Candidate { witness: b, side: t }) => {
                s == t && uw.collapse(b).as_ref() == Some(a)
            }
            _ => false,
        }
    }
}

impl fmt::Display for LosVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "factor: {}; ultraproduct: {}", self.factor, self.ultra)
    }
}

/// Runs the separator on `M = N` in the key factor and in the ultraproduct.
pub fn los_equation_check(m: &Term, n: &Term, uw: &UltraWeb, fuel: Fuel) -> Result<LosVerdict> {
    let factor = separate(m, n, uw.key_factor(), fuel)?;
    let ultra = separate(m, n, &uw.as_iweb(), fuel)?;
    Ok(LosVerdict { factor, ultra })
}

/// A closed equation `M = N`.
pub type Equation = (Term, Term);

/// The sets `K_e = {J ⊆ E : e ∈ J}` over the finite subsets of `E`, with a
/// witness for every non-empty sub-family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterBase {
    size: usize,
    witnesses: Vec<(BTreeSet<usize>, BTreeSet<usize>)>,
}

impl FilterBase {
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// `J ∈ K_e`.
    pub fn member(&self, e: usize, j: &BTreeSet<usize>) -> bool {
        j.contains(&e)
    }

    /// `(family, J)` with `J ∈ ⋂_{e ∈ family} K_e`.
    pub fn witnesses(&self) -> &[(BTreeSet<usize>, BTreeSet<usize>)] {
        &self.witnesses
    }
}

const FILTER_BASE_MAX: usize = 16;

pub fn fip_filter_base(equations: &[Equation]) -> Result<FilterBase> {
    let n = equations.len();
    if n > FILTER_BASE_MAX {
        return Err(Error::TooLarge(format!("{n} equations, at most {FILTER_BASE_MAX} sub-families are enumerated")));
    }
    let base = FilterBase { size: n, witnesses: Vec::new() };
    let mut witnesses = Vec::new();
    for mask in 1u32..(1u32 << n) {
        let family: BTreeSet<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let j = family.clone();
        if let Some(e) = family.iter().find(|e| !base.member(**e, &j)) {
            return Err(Error::CertificateFailed(format!("union witness misses K_{e}")));
        }
        witnesses.push((family, j));
    }
    Ok(FilterBase { witnesses, ..base })
}

/// A model supplied for the finite subset `satisfies` of the equations.
#[derive(Clone)]
pub struct IndexedModel {
    pub satisfies: BTreeSet<usize>,
    pub web: IWeb,
}

pub struct Compactness {
    pub web: UltraWeb,
    pub index: usize,
    /// One verdict per equation, all `Unknown`.
    pub verdicts: Vec<Verdict>,
}

const BETA_FUEL: usize = 200;

/// The web satisfies `M = N` as far as the checks can tell: no separation
/// and no clash of β-normal forms.
pub fn satisfies(web: &IWeb, eq: &Equation, fuel: Fuel) -> Result<Verdict> {
    let (m, n) = eq;
    if let (Some(a), Some(b)) = (normalize_db(&m.to_db(), BETA_FUEL), normalize_db(&n.to_db(), BETA_FUEL)) {
        if a != b {
            return Err(Error::CertificateFailed(format!("distinct normal forms for {m} = {n}")));
        }
    }
    separate(m, n, web, fuel)
}

/// Finite compactness: the principal ultraproduct at a model of all of `E`.
pub fn compactness_demo(equations: &[Equation], models: &[IndexedModel], fuel: Fuel) -> Result<Compactness> {
    if models.is_empty() {
        return Err(Error::EmptyFamily);
    }
    for m in models {
        for &e in &m.satisfies {
            let eq = equations.get(e).ok_or(Error::IndexOutOfRange { index: e, size: equations.len() })?;
            let v = satisfies(&m.web, eq, fuel)?;
            if !v.is_unknown() {
                return Err(Error::CertificateFailed(format!("supplied model for equation {e}: {v}")));
            }
        }
    }
    let all: BTreeSet<usize> = (0..equations.len()).collect();
    let index = models
        .iter()
        .position(|m| all.is_subset(&m.satisfies))
        .ok_or_else(|| Error::CertificateFailed("no model for the full set of equations".into()))?;
    let u = principal_ultrafilter(models.len(), index)?;
    let web = ultraproduct_web(models.iter().map(|m| m.web.clone()).collect(), &u)?;
    let iweb = web.as_iweb();
    let mut verdicts = Vec::new();
    for (e, eq) in equations.iter().enumerate() {
        let v = satisfies(&iweb, eq, fuel)?;
        if !v.is_unknown() {
            return Err(Error::CertificateFailed(format!("ultraproduct on equation {e}: {v}")));
        }
        verdicts.push(v);
    }
    Ok(Compactness { web, index, verdicts })
}

/// All consistent sets of at most `card` tokens among `universe`, as points.
pub fn small_points(sys: &Sys, universe: &[Token], card: usize) -> Vec<PointApprox> {
    subsets_up_to(universe, card).into_iter().filter_map(|a| closure(sys, &a).ok()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::webs::graph_web;

    fn g(atoms: &[&str]) -> IWeb {
        let ts: Vec<Token> = atoms.iter().map(Token::atom).collect();
        Arc::new(graph_web(&ts, vec![]).unwrap())
    }

    fn two(j: usize) -> UltraWeb {
        ultraproduct_web(vec![g(&["a"]), g(&["b", "c"])], &principal_ultrafilter(2, j).unwrap()).unwrap()
    }

    #[test]
    fn principal_membership() {
        let u = principal_ultrafilter(3, 1).unwrap();
        assert!(u.contains(&BTreeSet::from([1, 2])));
        assert!(!u.contains(&BTreeSet::from([0, 2])));
        assert!(!u.contains(&BTreeSet::new()));
        assert_eq!(principal_ultrafilter(2, 2), Err(Error::IndexOutOfRange { index: 2, size: 2 }));
    }

    #[test]
    fn unit_is_class_of_units() {
        let uw = two(0);
        assert_eq!(uw.sys().nu(), Token::class(vec![Token::Nu, Token::Nu]));
        assert!(matches!(ultraproduct_web(vec![], &principal_ultrafilter(1, 0).unwrap()), Err(Error::EmptyFamily)));
    }

    #[test]
    fn collapse_at_level_one() {
        for j in 0..2 {
            let r = collapse_check(&two(j), &Budget::at_level(1)).unwrap();
            assert!(r.all_pass(), "{r}");
        }
    }

    #[test]
    fn representatives_do_not_matter() {
        let uw = two(1);
        let b = Token::atom("b");
        let noisy = Token::class(vec![Token::atom("a"), b.clone()]);
        let clean = uw.lift(&b);
        assert_eq!(uw.class_of(&[Token::atom("a"), b.clone()]).unwrap(), clean);
        let s = uw.sys();
        assert!(s.entails(&ConSet::singleton(noisy.clone()), &clean));
        assert_eq!(uw.phi(&ConSet::singleton(noisy), &clean), uw.phi(&ConSet::singleton(clean.clone()), &clean));
    }

    #[test]
    fn los_on_identity_versus_omega() {
        let uw = two(0);
        let v = los_equation_check(&Term::identity(), &Term::omega(), &uw, Fuel::new(3, 2)).unwrap();
        assert!(matches!(v.ultra, Verdict::Separated { .. }), "{v}");
        assert!(v.agrees(&uw));
    }

    #[test]
    fn embedding_keeps_k() {
        let uw = two(1);
        let fuel = Fuel::new(3, 1);
        let k = seq_interpret(&Term::k(), &uw, fuel).unwrap();
        let fk = embed_point(&k, &uw).unwrap();
        let direct = interp::Interpreter::new(&uw.as_iweb(), fuel).point(&Term::k()).unwrap();
        assert_eq!(fk.generators(), direct.generators());
    }

    #[test]
    fn filter_base_witnesses() {
        let e = (Term::identity(), Term::identity());
        let fb = fip_filter_base(&[e.clone(), e]).unwrap();
        assert_eq!(fb.witnesses().len(), 3);
        assert!(fb.witnesses().iter().all(|(fam, j)| fam.iter().all(|e| fb.member(*e, j))));
    }
}
