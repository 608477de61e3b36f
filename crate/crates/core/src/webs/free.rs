use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

use super::Web;
use crate::error::{Error, Result};
use crate::kernel::{InfoSys, Sys};
use crate::token::{subsets_up_to, ConSet, Token};

/// How the preorder extends to formal pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairOrder {
    /// Formal pairs are related only to themselves.
    Discrete,
    /// `(a,α) ≤ (b,β)` iff `α ≤ β` and every `γ ∈ b` is below some `δ ∈ a`.
    Definitional,
}

/// A pc-set over named atoms plus a partial `φ` into the atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PcSpec {
    pub atoms: Vec<Token>,
    /// Generating pairs `x ≤ y`; closed reflexively and transitively.
    pub order: Vec<(Token, Token)>,
    /// Generating coherent pairs; `None` means every pair is coherent.
    pub coherence: Option<Vec<(Token, Token)>>,
    pub inj: Vec<((ConSet, Token), Token)>,
}

struct FreeSys {
    name: String,
    atoms: BTreeSet<Token>,
    leq: BTreeSet<(Token, Token)>,
    coh: Option<BTreeSet<(Token, Token)>>,
    inj_dom: BTreeSet<(ConSet, Token)>,
    pair_order: PairOrder,
    ante_cap: usize,
    levels: Mutex<Vec<Arc<Vec<Token>>>>,
}

impl FreeSys {
    fn leq(&self, x: &Token, y: &Token) -> bool {
        if x == y {
            return true;
        }
        match (x, y) {
            (Token::Atom(_), Token::Atom(_)) => self.leq.contains(&(x.clone(), y.clone())),
            (Token::Arrow(a, alpha), Token::Arrow(b, beta)) if self.pair_order == PairOrder::Definitional => {
                self.leq(alpha, beta) && b.iter().all(|g| self.entails(a, g))
            }
            _ => false,
        }
    }

    fn coh(&self, x: &Token, y: &Token) -> bool {
        if x == y {
            return true;
        }
        match (x, y) {
            (Token::Atom(_), Token::Atom(_)) => match &self.coh {
                None => true,
                Some(c) => c.contains(&(x.clone(), y.clone())),
            },
            (Token::Arrow(a, alpha), Token::Arrow(b, beta)) => {
                self.coh.is_none() || !self.con(&a.union(b)) || self.coh(alpha, beta)
            }
            _ => true,
        }
    }

    fn compute_level(&self, n: usize) -> Arc<Vec<Token>> {
        let mut levels = self.levels.lock().expect("level cache");
        if levels.is_empty() {
            let mut base = vec![Token::Nu];
            base.extend(self.atoms.iter().cloned());
            levels.push(Arc::new(base));
        }
        while levels.len() <= n {
            let prev = levels.last().expect("nonempty").clone();
            let mut out: BTreeSet<Token> = levels[0].iter().cloned().collect();
            for a in subsets_up_to(&prev, self.ante_cap) {
                if !self.con(&a) {
                    continue;
                }
                for alpha in prev.iter() {
                    if !self.inj_dom.contains(&(a.clone(), alpha.clone())) {
                        out.insert(Token::arrow(a.clone(), alpha.clone()));
                    }
                }
            }
            levels.push(Arc::new(out.into_iter().collect()));
        }
        levels[n].clone()
    }
}

impl InfoSys for FreeSys {
    fn nu(&self) -> Token {
        Token::Nu
    }

    fn has_token(&self, t: &Token) -> bool {
        match t {
            Token::Nu => true,
            Token::Atom(_) => self.atoms.contains(t),
            Token::Arrow(a, alpha) => {
                a.iter().all(|x| self.has_token(x))
                    && self.has_token(alpha)
                    && self.con(a)
                    && !self.inj_dom.contains(&(a.clone(), (**alpha).clone()))
            }
            _ => false,
        }
    }

    fn con(&self, a: &ConSet) -> bool {
        if self.coh.is_none() {
            return true;
        }
        let v: Vec<&Token> = a.iter().collect();
        v.iter().enumerate().all(|(i, x)| v[i + 1..].iter().all(|y| self.coh(x, y)))
    }

    fn entails(&self, a: &ConSet, t: &Token) -> bool {
        *t == Token::Nu || a.iter().any(|b| self.leq(t, b))
    }

    fn level(&self, level: usize) -> Vec<Token> {
        self.compute_level(level).as_ref().clone()
    }

    fn is_finite(&self) -> bool {
        false
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

/// `(∅, ν)` and `({ν}, ν)`, which `φ` sends to `ν`.
fn unit_pairs() -> impl Iterator<Item = (ConSet, Token)> {
    [ConSet::empty(), ConSet::singleton(Token::Nu)].into_iter().map(|a| (a, Token::Nu))
}

/// A web whose `φ` is a user-given partial map into atoms, completed freely
/// by formal pairs. Covers graph webs, Krivine webs and pc-webs.
#[derive(Clone)]
pub struct FreeWeb {
    inner: Arc<FreeSys>,
    sys: Sys,
    inj: Arc<BTreeMap<(ConSet, Token), Token>>,
    inj_pre: Arc<BTreeMap<Token, Vec<(ConSet, Token)>>>,
}

impl FreeWeb {
    pub fn atoms(&self) -> Vec<Token> {
        self.inner.atoms.iter().cloned().collect()
    }

    pub fn inj(&self) -> &BTreeMap<(ConSet, Token), Token> {
        &self.inj
    }

    pub fn leq(&self, x: &Token, y: &Token) -> bool {
        self.inner.leq(x, y)
    }

    pub fn coh(&self, x: &Token, y: &Token) -> bool {
        self.inner.coh(x, y)
    }

    pub fn pair_order(&self) -> PairOrder {
        self.inner.pair_order
    }

    /// Cap on antecedent size when enumerating levels.
    pub fn with_ante_cap(self, cap: usize) -> FreeWeb {
        let s = &self.inner;
        let inner = Arc::new(FreeSys {
            name: s.name.clone(),
            atoms: s.atoms.clone(),
            leq: s.leq.clone(),
            coh: s.coh.clone(),
            inj_dom: s.inj_dom.clone(),
            pair_order: s.pair_order,
            ante_cap: cap,
            levels: Mutex::new(Vec::new()),
        });
        FreeWeb { sys: inner.clone(), inner, inj: self.inj, inj_pre: self.inj_pre }
    }

    /// The user-supplied part of `φ`, as a readable spec.
    pub fn spec(&self) -> PcSpec {
        let s = &self.inner;
        PcSpec {
            atoms: self.atoms(),
            order: s.leq.iter().filter(|(x, y)| x != y).cloned().collect(),
            coherence: s.coh.as_ref().map(|c| c.iter().filter(|(x, y)| x < y).cloned().collect()),
            inj: self.inj.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        }
    }

    fn build(name: String, spec: &PcSpec, pair_order: PairOrder) -> Result<FreeWeb> {
        let atoms: BTreeSet<Token> = spec.atoms.iter().cloned().collect();
        for t in &atoms {
            if !matches!(t, Token::Atom(_)) {
                return Err(Error::InvalidArgument(format!("{t} is not an atom")));
            }
        }
        let known = |t: &Token| *t == Token::Nu || atoms.contains(t);
        for (x, y) in spec.order.iter().chain(spec.coherence.iter().flatten()) {
            if !atoms.contains(x) || !atoms.contains(y) {
                return Err(Error::InvalidArgument(format!("relation on unknown atoms {x}, {y}")));
            }
        }
        let mut leq: BTreeSet<(Token, Token)> = atoms.iter().map(|a| (a.clone(), a.clone())).collect();
        leq.extend(spec.order.iter().cloned());
        loop {
            let extra: Vec<(Token, Token)> = leq
                .iter()
                .flat_map(|(x, y)| leq.iter().filter(move |(y2, _)| y2 == y).map(move |(_, z)| (x.clone(), z.clone())))
                .filter(|p| !leq.contains(p))
                .collect();
            if extra.is_empty() {
                break;
            }
            leq.extend(extra);
        }
        let coh = spec.coherence.as_ref().map(|pairs| {
            let mut c: BTreeSet<(Token, Token)> = atoms.iter().map(|a| (a.clone(), a.clone())).collect();
            for (x, y) in pairs {
                c.insert((x.clone(), y.clone()));
                c.insert((y.clone(), x.clone()));
            }
            c
        });
        if let Some(c) = &coh {
            // x ≍ y and x' ≤ x must give x' ≍ y
            for (x, y) in c {
                for (x2, x1) in &leq {
                    if x1 == x && !c.contains(&(x2.clone(), y.clone())) {
                        return Err(Error::CoherenceViolation(format!("{x} ~ {y} and {x2} <= {x} but not {x2} ~ {y}")));
                    }
                }
            }
        }
        let mut inj = BTreeMap::new();
        let mut inj_pre: BTreeMap<Token, Vec<(ConSet, Token)>> = BTreeMap::new();
        for ((a, alpha), img) in &spec.inj {
            if !a.iter().all(known) || !known(alpha) {
                return Err(Error::InvalidArgument(format!("pair ({a},{alpha}) uses unknown tokens")));
            }
            if !atoms.contains(img) {
                return Err(Error::InvalidArgument(format!("image {img} is not an atom")));
            }
            if unit_pairs().any(|(u, v)| u == *a && v == *alpha) {
                return Err(Error::InvalidArgument(format!("pair ({a},{alpha}) is reserved for nu")));
            }
            if inj.insert((a.clone(), alpha.clone()), img.clone()).is_some() {
                return Err(Error::InvalidArgument(format!("pair ({a},{alpha}) assigned twice")));
            }
            inj_pre.entry(img.clone()).or_default().push((a.clone(), alpha.clone()));
        }
        let inner = Arc::new(FreeSys {
            name,
            atoms,
            leq,
            coh,
            inj_dom: inj.keys().cloned().chain(unit_pairs()).collect(),
            pair_order,
            ante_cap: 2,
            levels: Mutex::new(Vec::new()),
        });
        Ok(FreeWeb { sys: inner.clone(), inner, inj: Arc::new(inj), inj_pre: Arc::new(inj_pre) })
    }

    /// Conditions (1) and (2) for `φ` over pairs from the domain of the
    /// user map and formal pairs built from level-0 tokens.
    fn validate_conditions(&self) -> Result<()> {
        let base = self.sys.level(0);
        let mut pairs: Vec<(ConSet, Token)> = self.inj.keys().cloned().collect();
        for a in subsets_up_to(&base, 2) {
            for alpha in &base {
                if self.phi(&a, alpha).is_some() {
                    pairs.push((a.clone(), alpha.clone()));
                }
            }
        }
        let s = &self.inner;
        for (a, alpha) in &pairs {
            let x = self.phi(a, alpha).expect("domain");
            for (b, beta) in &pairs {
                let y = self.phi(b, beta).expect("domain");
                let rhs = !s.con(&a.union(b)) || s.coh(alpha, beta);
                if s.coh(&x, &y) != rhs {
                    return Err(Error::ConditionFailed {
                        condition: 1,
                        witness: format!("phi({a},{alpha})={x}, phi({b},{beta})={y}"),
                    });
                }
                if s.leq(&x, &y) && !(s.leq(alpha, beta) && b.iter().all(|g| s.entails(a, g))) {
                    return Err(Error::ConditionFailed {
                        condition: 2,
                        witness: format!("{x} <= {y} from ({a},{alpha}) and ({b},{beta})"),
                    });
                }
            }
        }
        Ok(())
    }
}

impl Web for FreeWeb {
    fn sys(&self) -> &Sys {
        &self.sys
    }

    fn phi(&self, a: &ConSet, alpha: &Token) -> Option<Token> {
        if *alpha == Token::Nu && a.iter().all(|x| *x == Token::Nu) {
            return Some(Token::Nu);
        }
        if let Some(img) = self.inj.get(&(a.clone(), alpha.clone())) {
            return Some(img.clone());
        }
        let t = Token::arrow(a.clone(), alpha.clone());
        self.inner.has_token(&t).then_some(t)
    }

    fn phi_inverse(&self, t: &Token) -> Vec<(ConSet, Token)> {
        match t {
            Token::Arrow(a, alpha) if self.inner.has_token(t) => vec![(a.clone(), (**alpha).clone())],
            Token::Atom(_) => self.inj_pre.get(t).cloned().unwrap_or_default(),
            Token::Nu => unit_pairs().collect(),
            _ => Vec::new(),
        }
    }

    fn is_flat(&self) -> bool {
        self.inner.pair_order == PairOrder::Discrete && self.inner.leq.iter().all(|(x, y)| x == y)
    }

    fn is_free_graph(&self) -> bool {
        self.is_flat() && self.inner.coh.is_none()
    }

    fn describe(&self) -> String {
        self.inner.name.clone()
    }
}

/// The graph web of a partial pair: flat system, `φ` the given injection
/// extended by formal pairs.
pub fn graph_web(atoms: &[Token], inj: Vec<((ConSet, Token), Token)>) -> Result<FreeWeb> {
    let mut seen: BTreeMap<&Token, &(ConSet, Token)> = BTreeMap::new();
    for (k, v) in &inj {
        if let Some(prev) = seen.insert(v, k) {
            return Err(Error::NotInjective(format!("({},{}) and ({},{}) both map to {v}", prev.0, prev.1, k.0, k.1)));
        }
    }
    let name = format!("graph({})", atoms.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(","));
    let spec = PcSpec { atoms: atoms.to_vec(), order: Vec::new(), coherence: None, inj };
    FreeWeb::build(name, &spec, PairOrder::Discrete)
}

/// A Krivine web: a pc-web with full coherence.
pub fn krivine_web(atoms: &[Token], order: Vec<(Token, Token)>, inj: Vec<((ConSet, Token), Token)>, pair_order: PairOrder) -> Result<FreeWeb> {
    pcs_web(PcSpec { atoms: atoms.to_vec(), order, coherence: None, inj }, pair_order)
}

pub fn pcs_web(spec: PcSpec, pair_order: PairOrder) -> Result<FreeWeb> {
    let name = format!("pcs({})", spec.atoms.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(","));
    let web = FreeWeb::build(name, &spec, pair_order)?;
    web.validate_conditions()?;
    Ok(web)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{check_is_axioms, Budget};
    use crate::webs::{validate_phi, IWeb};

    fn zero() -> Token {
        Token::atom("0")
    }

    fn set(ts: &[Token]) -> ConSet {
        ts.iter().cloned().collect()
    }

    #[test]
    fn level_one_has_basic_pairs() {
        let g = graph_web(&[zero()], vec![]).unwrap();
        let l1 = g.sys().level(1);
        assert!(l1.contains(&Token::arrow(ConSet::empty(), zero())));
        assert!(l1.contains(&Token::arrow(set(&[zero()]), zero())));
        assert_eq!(l1.len(), 8);
        assert!(!l1.contains(&Token::arrow(ConSet::empty(), Token::Nu)));
    }

    #[test]
    fn inj_removes_formal_pair() {
        let g = graph_web(&[zero()], vec![((ConSet::empty(), zero()), zero())]).unwrap();
        assert!(!g.sys().level(1).contains(&Token::arrow(ConSet::empty(), zero())));
        assert_eq!(g.phi(&ConSet::empty(), &zero()), Some(zero()));
        assert_eq!(g.phi_inverse(&zero()), vec![(ConSet::empty(), zero())]);
    }

    #[test]
    fn non_injective_rejected() {
        let one = Token::atom("1");
        let r = graph_web(
            &[zero(), one.clone()],
            vec![((ConSet::empty(), zero()), zero()), ((ConSet::empty(), one), zero())],
        );
        assert!(matches!(r, Err(Error::NotInjective(_))));
    }

    #[test]
    fn graph_phi_is_b_morphism() {
        let g: IWeb = Arc::new(graph_web(&[zero()], vec![]).unwrap());
        let r = validate_phi(&g, &Budget::default()).unwrap();
        assert!(r.all_pass(), "{r}");
        let r = check_is_axioms(g.sys().as_ref(), &Budget::at_level(1)).unwrap();
        assert!(r.all_pass(), "{r}");
    }

    #[test]
    fn definitional_pair_order() {
        let p = Token::atom("p");
        let q = Token::atom("q");
        let k = krivine_web(&[p.clone(), q.clone()], vec![(p.clone(), q.clone())], vec![], PairOrder::Definitional).unwrap();
        let x = Token::arrow(set(&[q.clone()]), p.clone());
        let y = Token::arrow(set(&[p.clone()]), q.clone());
        assert!(k.leq(&x, &y));
        assert!(!k.leq(&y, &x));
        let r = validate_phi(&(Arc::new(k) as IWeb), &Budget::default()).unwrap();
        assert!(r.all_pass(), "{r}");
    }

    #[test]
    fn incoherent_atoms_inconsistent() {
        let p = Token::atom("p");
        let q = Token::atom("q");
        let w = pcs_web(
            PcSpec { atoms: vec![p.clone(), q.clone()], order: vec![], coherence: Some(vec![]), inj: vec![] },
            PairOrder::Definitional,
        )
        .unwrap();
        assert!(!w.sys().con(&set(&[p.clone(), q.clone()])));
        assert!(w.sys().con(&set(&[p, Token::Nu])));
    }

    #[test]
    fn incompatible_coherence_rejected() {
        let p = Token::atom("p");
        let q = Token::atom("q");
        let r = Token::atom("r");
        let res = pcs_web(
            PcSpec {
                atoms: vec![p.clone(), q.clone(), r.clone()],
                order: vec![(p.clone(), q.clone())],
                coherence: Some(vec![(q, r)]),
                inj: vec![],
            },
            PairOrder::Definitional,
        );
        assert!(matches!(res, Err(Error::CoherenceViolation(_))));
    }

    #[test]
    fn bad_user_phi_fails_condition_two() {
        let p = Token::atom("p");
        let q = Token::atom("q");
        // p <= q but their preimages have incomparable results
        let res = krivine_web(
            &[p.clone(), q.clone()],
            vec![(p.clone(), q.clone())],
            vec![((ConSet::empty(), q.clone()), p.clone()), ((ConSet::empty(), p.clone()), q.clone())],
            PairOrder::Definitional,
        );
        assert!(matches!(res, Err(Error::ConditionFailed { condition: 2, .. })), "{:?}", res.err());
    }
}
