//! Information systems as first-order structures over the predicates
//! `C_n` (consistency) and `R_{n+1}` (entailment), and the universal Horn
//! axioms (1)-(7) describing them.
//!
//! Tuples are read as sets, so duplicated arguments are allowed:
//! `C_2(α, α)` holds iff `{α} ∈ Con`. Axiom instances that would mention a
//! predicate beyond the arity cap are not evaluated.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::{AxiomVerdict, FiniteSys, InfoSys};
use crate::token::{ConSet, Token};
use crate::ultra::Ultrafilter;

pub const DEFAULT_ARITY_CAP: usize = 3;

/// Upper bound on the number of `R`-tuples of largest arity.
const TUPLE_LIMIT: usize = 2_000_000;

/// A relational structure with `C_n` for `1 ≤ n ≤ cap` and `R_{n+1}` for
/// `0 ≤ n ≤ cap`. Relations are keyed by arity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelStructure {
    pub carrier: Vec<Token>,
    pub cap: usize,
    pub nu: Token,
    pub c: BTreeMap<usize, BTreeSet<Vec<Token>>>,
    pub r: BTreeMap<usize, BTreeSet<Vec<Token>>>,
}

impl RelStructure {
    pub fn empty(carrier: Vec<Token>, nu: Token, cap: usize) -> RelStructure {
        RelStructure {
            carrier,
            cap,
            nu,
            c: (1..=cap).map(|n| (n, BTreeSet::new())).collect(),
            r: (1..=cap + 1).map(|n| (n, BTreeSet::new())).collect(),
        }
    }

    pub fn holds_c(&self, args: &[Token]) -> bool {
        self.c.get(&args.len()).is_some_and(|rel| rel.contains(args))
    }

    /// `R_{n+1}(α₁, …, α_n, β)` with `β` the last argument.
    pub fn holds_r(&self, args: &[Token]) -> bool {
        self.r.get(&args.len()).is_some_and(|rel| rel.contains(args))
    }

    pub fn tuple_count(&self) -> usize {
        self.c.values().chain(self.r.values()).map(BTreeSet::len).sum()
    }
}

fn check_size(carrier: usize, cap: usize) -> Result<()> {
    let n = carrier.checked_pow((cap + 1) as u32).unwrap_or(usize::MAX);
    if n > TUPLE_LIMIT {
        return Err(Error::TooLarge(format!("{carrier} tokens at arity cap {cap} give {n} tuples")));
    }
    Ok(())
}

/// All tuples of length `n` over `0..m`.
fn tuples(m: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out.into_iter().flat_map(|t| (0..m).map(move |x| [t.as_slice(), &[x]].concat())).collect();
    }
    out
}

/// `C_n` and `R_{n+1}` per the intended meanings, up to `cap`.
pub fn encode(sys: &dyn InfoSys, cap: usize) -> Result<RelStructure> {
    if !sys.is_finite() {
        return Err(Error::TooLarge(format!("{} is infinite", sys.describe())));
    }
    let carrier = sys.level(0);
    check_size(carrier.len(), cap)?;
    let mut s = RelStructure::empty(carrier.clone(), sys.nu(), cap);
    let mut con_memo: HashMap<ConSet, bool> = HashMap::new();
    for n in 0..=cap {
        for t in tuples(carrier.len(), n) {
            let args: Vec<Token> = t.iter().map(|&i| carrier[i].clone()).collect();
            let set: ConSet = args.iter().cloned().collect();
            let con = *con_memo.entry(set.clone()).or_insert_with(|| sys.con(&set));
            if n > 0 && con {
                s.c.get_mut(&n).expect("arity").insert(args.clone());
            }
            if !con {
                continue;
            }
            for beta in &carrier {
                if sys.entails(&set, beta) {
                    let mut row = args.clone();
                    row.push(beta.clone());
                    s.r.get_mut(&(n + 1)).expect("arity").insert(row);
                }
            }
        }
    }
    Ok(s)
}

/// Reads a structure back as an information system. Sets larger than the
/// cap are consistent when all their small subsets are, and entail what
/// some small subset entails.
pub fn decode(s: &RelStructure) -> Result<FiniteSys> {
    if !s.carrier.contains(&s.nu) {
        return Err(Error::InvalidArgument(format!("unit {} is not in the carrier", s.nu)));
    }
    let con_s = Arc::new(s.clone());
    let ent_s = con_s.clone();
    let cap = s.cap;
    let con = move |a: &ConSet| {
        if a.is_empty() {
            return true;
        }
        let items: Vec<Token> = a.iter().cloned().collect();
        if items.len() <= cap {
            return con_s.holds_c(&items);
        }
        let ok = small_subsets(&items, cap).all(|sub| sub.is_empty() || con_s.holds_c(&sub));
        ok
    };
    let entails = move |a: &ConSet, b: &Token| {
        let items: Vec<Token> = a.iter().cloned().collect();
        let row = |mut sub: Vec<Token>| {
            sub.push(b.clone());
            ent_s.holds_r(&sub)
        };
        if items.len() <= cap {
            return row(items);
        }
        let hit = small_subsets(&items, cap).any(row);
        hit
    };
    Ok(FiniteSys::custom("decoded", s.carrier.clone(), con, entails))
}

fn small_subsets(items: &[Token], cap: usize) -> impl Iterator<Item = Vec<Token>> + '_ {
    (0..=cap.min(items.len())).flat_map(move |k| itertools::Itertools::combinations(items.iter().cloned(), k))
}

/// Verdicts for axioms (1)-(7) at a fixed arity cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HornReport {
    pub cap: usize,
    pub entries: Vec<AxiomVerdict>,
}

impl HornReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failing(&self) -> Vec<u8> {
        self.entries.iter().filter(|e| !e.pass).filter_map(|e| e.name.parse().ok()).collect()
    }

    pub fn passes(&self, axiom: u8) -> bool {
        self.entries.iter().any(|e| e.name == axiom.to_string() && e.pass)
    }
}

impl fmt::Display for HornReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            match &e.witness {
                None => writeln!(f, "HORN {} PASS", e.name)?,
                Some(w) => writeln!(f, "HORN {} FAIL witness={}", e.name, w)?,
            }
        }
        Ok(())
    }
}

/// The structure with tokens replaced by carrier indices.
struct Indexed<'a> {
    s: &'a RelStructure,
    c: HashMap<usize, HashSet<Vec<usize>>>,
    r: HashMap<usize, HashSet<Vec<usize>>>,
    /// `R_{n+1}` grouped by the antecedent tuple.
    post: HashMap<Vec<usize>, BTreeSet<usize>>,
}

impl<'a> Indexed<'a> {
    fn new(s: &'a RelStructure) -> Indexed<'a> {
        let pos: HashMap<&Token, usize> = s.carrier.iter().enumerate().map(|(i, t)| (t, i)).collect();
        let conv = |rel: &BTreeMap<usize, BTreeSet<Vec<Token>>>| -> HashMap<usize, HashSet<Vec<usize>>> {
            rel.iter()
                .map(|(&n, ts)| {
                    let set = ts.iter().filter_map(|t| t.iter().map(|x| pos.get(x).copied()).collect::<Option<Vec<_>>>()).collect();
                    (n, set)
                })
                .collect()
        };
        let c = conv(&s.c);
        let r = conv(&s.r);
        let mut post: HashMap<Vec<usize>, BTreeSet<usize>> = HashMap::new();
        for rows in r.values() {
            for row in rows {
                let (last, ante) = row.split_last().expect("R has arity at least 1");
                post.entry(ante.to_vec()).or_default().insert(*last);
            }
        }
        Indexed { s, c, r, post }
    }

    fn c(&self, t: &[usize]) -> bool {
        self.c.get(&t.len()).is_some_and(|rel| rel.contains(t))
    }

    fn r(&self, t: &[usize]) -> bool {
        self.r.get(&t.len()).is_some_and(|rel| rel.contains(t))
    }

    fn show(&self, t: &[usize]) -> String {
        let names: Vec<String> = t.iter().map(|&i| self.s.carrier[i].to_string()).collect();
        format!("({})", names.join(","))
    }

    fn m(&self) -> usize {
        self.s.carrier.len()
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    itertools::Itertools::permutations(0..n, n).collect()
}

fn axiom1(x: &Indexed) -> Option<String> {
    (0..x.m()).find(|&a| !x.c(&[a])).map(|a| x.show(&[a]))
}

fn axiom2(x: &Indexed) -> Option<String> {
    for n in 1..=x.s.cap {
        for t in tuples(x.m(), n).into_iter().filter(|t| x.c(t)) {
            for k in 1..=n {
                for idx in tuples(n, k) {
                    let sub: Vec<usize> = idx.iter().map(|&i| t[i]).collect();
                    if !x.c(&sub) {
                        return Some(format!("{} -> C{}{}", x.show(&t), k, x.show(&sub)));
                    }
                }
            }
        }
    }
    None
}

fn axiom3(x: &Indexed) -> Option<String> {
    for n in 0..x.s.cap {
        for t in tuples(x.m(), n + 1).into_iter().filter(|t| x.r(t)) {
            if !x.c(&t) {
                return Some(x.show(&t));
            }
        }
    }
    None
}

fn axiom4(x: &Indexed) -> Option<String> {
    for n in 2..=x.s.cap {
        let perms = permutations(n);
        for t in tuples(x.m(), n + 1).into_iter().filter(|t| x.r(t)) {
            for p in &perms {
                let mut u: Vec<usize> = p.iter().map(|&i| t[i]).collect();
                u.push(t[n]);
                if !x.r(&u) {
                    return Some(format!("{} -> {}", x.show(&t), x.show(&u)));
                }
            }
        }
    }
    None
}

fn axiom5(x: &Indexed) -> Option<String> {
    for n in 0..=x.s.cap {
        for alpha in tuples(x.m(), n) {
            let Some(e) = x.post.get(&alpha) else { continue };
            let ev: Vec<usize> = e.iter().copied().collect();
            for k in 1..=x.s.cap {
                for bi in tuples(ev.len(), k) {
                    let beta: Vec<usize> = bi.iter().map(|&i| ev[i]).collect();
                    let Some(gs) = x.post.get(&beta) else { continue };
                    if let Some(g) = gs.iter().find(|g| !e.contains(g)) {
                        let mut w = alpha.clone();
                        w.extend(&beta);
                        w.push(*g);
                        return Some(x.show(&w));
                    }
                }
            }
        }
    }
    None
}

fn axiom6(x: &Indexed) -> Option<String> {
    for n in 1..=x.s.cap {
        for t in tuples(x.m(), n).into_iter().filter(|t| x.c(t)) {
            for i in 0..n {
                let mut u = t.clone();
                u.push(t[i]);
                if !x.r(&u) {
                    return Some(x.show(&u));
                }
            }
        }
    }
    None
}

fn axiom7(s: &RelStructure) -> Option<String> {
    (!s.holds_r(std::slice::from_ref(&s.nu))).then(|| format!("({})", s.nu))
}

/// Evaluates every instance of (1)-(7) within the arity cap.
pub fn check_horn_axioms(s: &RelStructure) -> HornReport {
    let x = Indexed::new(s);
    let results = [axiom1(&x), axiom2(&x), axiom3(&x), axiom4(&x), axiom5(&x), axiom6(&x), axiom7(s)];
    let entries = results
        .into_iter()
        .enumerate()
        .map(|(i, w)| AxiomVerdict { name: (i + 1).to_string(), pass: w.is_none(), witness: w })
        .collect();
    HornReport { cap: s.cap, entries }
}

/// The ultraproduct of structures: a relation holds of a tuple of classes
/// iff the set of indices where it holds componentwise is in `U`.
/// Classes are keyed by the principal component as in the web case.
pub fn ultraproduct_structure(factors: &[RelStructure], u: &Ultrafilter) -> Result<RelStructure> {
    if factors.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if u.size() != factors.len() {
        return Err(Error::InvalidArgument(format!("ultrafilter on {} indices for {} structures", u.size(), factors.len())));
    }
    let cap = factors[0].cap;
    if factors.iter().any(|f| f.cap != cap) {
        return Err(Error::InvalidArgument("structures have different arity caps".into()));
    }
    let j = u.principal_index();
    let key = &factors[j];
    check_size(key.carrier.len(), cap)?;
    let lift = |t: &Token| -> Vec<Token> { factors.iter().enumerate().map(|(k, f)| if k == j { t.clone() } else { f.nu.clone() }).collect() };
    let seqs: Vec<Vec<Token>> = key.carrier.iter().map(lift).collect();
    let carrier: Vec<Token> = seqs.iter().map(|s| Token::class(s.clone())).collect();
    let mut out = RelStructure::empty(carrier.clone(), Token::class(lift(&key.nu)), cap);
    let holds = |rel: fn(&RelStructure, &[Token]) -> bool, t: &[usize]| {
        u.holds(|k| {
            let comp: Vec<Token> = t.iter().map(|&i| seqs[i][k].clone()).collect();
            rel(&factors[k], &comp)
        })
    };
    for n in 1..=cap + 1 {
        for t in tuples(carrier.len(), n) {
            let row: Vec<Token> = t.iter().map(|&i| carrier[i].clone()).collect();
            if n <= cap && holds(RelStructure::holds_c, &t) {
                out.c.get_mut(&n).expect("arity").insert(row.clone());
            }
            if holds(RelStructure::holds_r, &t) {
                out.r.get_mut(&n).expect("arity").insert(row);
            }
        }
    }
    Ok(out)
}

/// Whether `component` maps `s` isomorphically onto `target`.
pub fn is_isomorphic_via(s: &RelStructure, target: &RelStructure, component: impl Fn(&Token) -> Option<Token>) -> bool {
    let map = |t: &Vec<Token>| t.iter().map(&component).collect::<Option<Vec<Token>>>();
    let image: Option<BTreeSet<Token>> = s.carrier.iter().map(&component).collect();
    let rel_eq = |a: &BTreeMap<usize, BTreeSet<Vec<Token>>>, b: &BTreeMap<usize, BTreeSet<Vec<Token>>>| {
        a.len() == b.len()
            && a.iter().all(|(n, ts)| {
                let mapped: Option<BTreeSet<Vec<Token>>> = ts.iter().map(map).collect();
                mapped.as_ref() == b.get(n)
            })
    };
    image.is_some_and(|im| im.len() == s.carrier.len() && im == target.carrier.iter().cloned().collect())
        && component(&s.nu).as_ref() == Some(&target.nu)
        && s.cap == target.cap
        && rel_eq(&s.c, &target.c)
        && rel_eq(&s.r, &target.r)
}

#[derive(Debug, Clone)]
pub struct HornUltra {
    pub structure: RelStructure,
    pub report: HornReport,
    /// The ultraproduct is isomorphic to the principal factor.
    pub collapses: bool,
}

pub fn horn_ultraproduct_check(s1: &RelStructure, s2: &RelStructure, u: &Ultrafilter) -> Result<HornUltra> {
    let factors = [s1.clone(), s2.clone()];
    let structure = ultraproduct_structure(&factors, u)?;
    let report = check_horn_axioms(&structure);
    let j = u.principal_index();
    let collapses = is_isomorphic_via(&structure, &factors[j], |t| match t {
        Token::Class(cs) if cs.len() == 2 => Some(cs[j].clone()),
        _ => None,
    });
    Ok(HornUltra { structure, report, collapses })
}

/// Targeted corruptions of an encoded structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Drop `C_2(α, β)` while `R_2(α, β)` stays.
    MissingConsistency,
    /// Drop `R_3(α₂, α₁, β)` while `R_3(α₁, α₂, β)` stays.
    BrokenPermutation,
    /// Drop `R_1(ν)`.
    MissingUnit,
}

impl Mutation {
    pub const ALL: [Mutation; 3] = [Mutation::MissingConsistency, Mutation::BrokenPermutation, Mutation::MissingUnit];

    /// The axiom the mutation is designed to break.
    pub fn target_axiom(self) -> u8 {
        match self {
            Mutation::MissingConsistency => 3,
            Mutation::BrokenPermutation => 4,
            Mutation::MissingUnit => 7,
        }
    }

    pub fn apply(self, s: &RelStructure) -> Result<RelStructure> {
        let mut out = s.clone();
        let none = || Error::InvalidArgument(format!("no tuple to mutate for {self:?}"));
        match self {
            Mutation::MissingConsistency => {
                let row = s.r.get(&2).and_then(|rel| rel.iter().find(|t| t[0] != t[1])).ok_or_else(none)?;
                out.c.get_mut(&2).ok_or_else(none)?.remove(row);
            }
            Mutation::BrokenPermutation => {
                let row = s.r.get(&3).and_then(|rel| rel.iter().find(|t| t[0] != t[1])).ok_or_else(none)?;
                out.r.get_mut(&3).ok_or_else(none)?.remove(&vec![row[1].clone(), row[0].clone(), row[2].clone()]);
            }
            Mutation::MissingUnit => {
                if !out.r.get_mut(&1).ok_or_else(none)?.remove(&vec![s.nu.clone()]) {
                    return Err(none());
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{product, terminal, Sys};
    use crate::ultra::principal_ultrafilter;

    fn f3() -> Sys {
        Arc::new(FiniteSys::flat(&["p", "q"]))
    }

    #[test]
    fn f3_encoding_basics() {
        let s = encode(f3().as_ref(), 3).unwrap();
        let p = Token::atom("p");
        assert!(s.carrier.iter().all(|t| s.holds_c(std::slice::from_ref(t))));
        assert!(s.holds_r(&[Token::Nu]));
        assert!(s.holds_r(&[p.clone(), Token::Nu]));
        assert!(s.holds_c(&[p.clone(), p]));
        let rep = check_horn_axioms(&s);
        assert!(rep.all_pass(), "{rep}");
        assert_eq!(rep.to_string().lines().count(), 7);
    }

    #[test]
    fn product_and_terminal_pass() {
        for sys in [product(f3(), f3()), terminal()] {
            let rep = check_horn_axioms(&encode(sys.as_ref(), 3).unwrap());
            assert!(rep.all_pass(), "{rep}");
        }
    }

    #[test]
    fn mutations_hit_their_axiom() {
        let s = encode(f3().as_ref(), 3).unwrap();
        for m in Mutation::ALL {
            let rep = check_horn_axioms(&m.apply(&s).unwrap());
            assert!(rep.failing().contains(&m.target_axiom()), "{m:?}: {rep}");
        }
    }

    #[test]
    fn decode_round_trip() {
        let sys = f3();
        let s = encode(sys.as_ref(), 3).unwrap();
        let back = encode(&decode(&s).unwrap(), 3).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn principal_ultraproduct_collapses() {
        let a = encode(f3().as_ref(), 3).unwrap();
        let b = encode(terminal().as_ref(), 3).unwrap();
        for j in 0..2 {
            let h = horn_ultraproduct_check(&a, &b, &principal_ultrafilter(2, j).unwrap()).unwrap();
            assert!(h.report.all_pass());
            assert!(h.collapses);
            assert_eq!(h.structure.carrier.len(), if j == 0 { 3 } else { 1 });
        }
        let bad = Mutation::MissingUnit.apply(&a).unwrap();
        let h = horn_ultraproduct_check(&bad, &b, &principal_ultrafilter(2, 0).unwrap()).unwrap();
        assert!(!h.report.passes(7));
        let h = horn_ultraproduct_check(&bad, &b, &principal_ultrafilter(2, 1).unwrap()).unwrap();
        assert!(h.report.all_pass());
    }
}
