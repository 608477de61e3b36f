use std::sync::Arc;

use super::Web;
use crate::error::{Error, Result};
use crate::kernel::{InfoSys, Sys};
use crate::token::{subsets_up_to, ConSet, Token};

/// A finite extended abstract type structure given by tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Eats {
    names: Vec<String>,
    omega: usize,
    meet: Vec<Vec<usize>>,
    arrow: Vec<Vec<usize>>,
}

impl Eats {
    /// Validates that `meet` is a semilattice operation with top `omega`.
    pub fn new(names: Vec<String>, omega: usize, meet: Vec<Vec<usize>>, arrow: Vec<Vec<usize>>) -> Result<Eats> {
        let n = names.len();
        let square = |t: &Vec<Vec<usize>>| t.len() == n && t.iter().all(|r| r.len() == n && r.iter().all(|&x| x < n));
        if n == 0 || omega >= n || !square(&meet) || !square(&arrow) {
            return Err(Error::InvalidArgument("malformed EATS tables".into()));
        }
        for x in 0..n {
            if meet[x][x] != x || meet[omega][x] != x {
                return Err(Error::InvalidArgument(format!("meet not idempotent or {} not top at {}", names[omega], names[x])));
            }
            for y in 0..n {
                if meet[x][y] != meet[y][x] {
                    return Err(Error::InvalidArgument(format!("meet not commutative at {},{}", names[x], names[y])));
                }
                for z in 0..n {
                    if meet[meet[x][y]][z] != meet[x][meet[y][z]] {
                        return Err(Error::InvalidArgument("meet not associative".into()));
                    }
                }
            }
        }
        Ok(Eats { names, omega, meet, arrow })
    }

    /// `{ω}` with `ω → ω = ω`.
    pub fn one_point() -> Eats {
        Eats::new(vec!["w".into()], 0, vec![vec![0]], vec![vec![0]]).expect("valid")
    }

    /// The four-element semilattice `{ω, σ, τ, σ∧τ}` with the given arrow
    /// table, indexed in that order.
    pub fn four(arrow: Vec<Vec<usize>>) -> Result<Eats> {
        let meet = vec![vec![0, 1, 2, 3], vec![1, 1, 3, 3], vec![2, 3, 2, 3], vec![3, 3, 3, 3]];
        Eats::new(vec!["w".into(), "s".into(), "t".into(), "st".into()], 0, meet, arrow)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn meet(&self, x: usize, y: usize) -> usize {
        self.meet[x][y]
    }

    pub fn arrow(&self, x: usize, y: usize) -> usize {
        self.arrow[x][y]
    }

    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.meet[x][y] == x
    }

    pub fn meet_all(&self, xs: impl IntoIterator<Item = usize>) -> usize {
        xs.into_iter().fold(self.omega, |acc, x| self.meet[acc][x])
    }

    /// `ω` is the unit token; other elements are atoms named after the carrier.
    pub fn token(&self, x: usize) -> Token {
        if x == self.omega {
            Token::Nu
        } else {
            Token::atom(&self.names[x])
        }
    }

    pub fn index(&self, t: &Token) -> Option<usize> {
        match t {
            Token::Nu => Some(self.omega),
            Token::Atom(n) => self.names.iter().position(|m| **m == **n).filter(|&i| i != self.omega),
            _ => None,
        }
    }
}

/// Checks (∗) for every family of at most `bound` arrows, including the empty family.
pub fn check_eats_star(e: &Eats, bound: usize) -> Result<()> {
    let n = e.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    let mut families: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    let mut frontier = families.clone();
    for _ in 0..bound {
        let mut next = Vec::new();
        for f in &frontier {
            let start = f.last().map(|p| pairs.iter().position(|q| q == p).unwrap() + 1).unwrap_or(0);
            for p in &pairs[start..] {
                let mut g = f.clone();
                g.push(*p);
                next.push(g);
            }
        }
        families.extend(next.iter().cloned());
        frontier = next;
    }
    for fam in &families {
        let lhs = e.meet_all(fam.iter().map(|&(a, b)| e.arrow(a, b)));
        for g in 0..n {
            for d in 0..n {
                if !e.leq(lhs, e.arrow(g, d)) {
                    continue;
                }
                let fired = e.meet_all(fam.iter().filter(|&&(a, _)| e.leq(g, a)).map(|&(_, b)| b));
                if !e.leq(fired, d) {
                    let fam_s: Vec<String> = fam.iter().map(|&(a, b)| format!("({}->{})", e.names[a], e.names[b])).collect();
                    return Err(Error::StarViolated(format!(
                        "meet[{}] <= {}->{} but fired meet {} is not <= {}",
                        fam_s.join(","),
                        e.names[g],
                        e.names[d],
                        e.names[fired],
                        e.names[d]
                    )));
                }
            }
        }
    }
    Ok(())
}

struct FilterSys {
    eats: Eats,
}

impl FilterSys {
    fn meet_of(&self, a: &ConSet) -> Option<usize> {
        a.iter().map(|t| self.eats.index(t)).collect::<Option<Vec<_>>>().map(|v| self.eats.meet_all(v))
    }
}

impl InfoSys for FilterSys {
    fn nu(&self) -> Token {
        Token::Nu
    }

    fn has_token(&self, t: &Token) -> bool {
        self.eats.index(t).is_some()
    }

    fn con(&self, a: &ConSet) -> bool {
        a.iter().all(|t| self.has_token(t))
    }

    fn entails(&self, a: &ConSet, t: &Token) -> bool {
        match (self.meet_of(a), self.eats.index(t)) {
            (Some(m), Some(x)) => self.eats.leq(m, x),
            _ => false,
        }
    }

    fn level(&self, _level: usize) -> Vec<Token> {
        (0..self.eats.len()).map(|i| self.eats.token(i)).collect()
    }

    fn is_finite(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        format!("filter({})", self.eats.names.join(","))
    }
}

/// The information system of an EATS, without requiring (∗).
pub fn filter_sys(e: &Eats) -> Sys {
    Arc::new(FilterSys { eats: e.clone() })
}

#[derive(Clone)]
pub struct FilterWeb {
    eats: Eats,
    sys: Sys,
    inner: Arc<FilterSys>,
}

/// The filter web `φ(a, α) = ⋀a → α`; requires (∗) for families up to size 3.
pub fn filter_web(e: &Eats) -> Result<FilterWeb> {
    if e.len() > 12 {
        return Err(Error::TooLarge(format!("EATS with {} elements", e.len())));
    }
    check_eats_star(e, 3)?;
    let inner = Arc::new(FilterSys { eats: e.clone() });
    Ok(FilterWeb { eats: e.clone(), sys: inner.clone(), inner })
}

impl FilterWeb {
    pub fn eats(&self) -> &Eats {
        &self.eats
    }
}

impl Web for FilterWeb {
    fn sys(&self) -> &Sys {
        &self.sys
    }

    fn phi(&self, a: &ConSet, alpha: &Token) -> Option<Token> {
        let m = self.inner.meet_of(a)?;
        let x = self.eats.index(alpha)?;
        Some(self.eats.token(self.eats.arrow(m, x)))
    }

    fn phi_inverse(&self, t: &Token) -> Vec<(ConSet, Token)> {
        let Some(target) = self.eats.index(t) else { return Vec::new() };
        let toks = self.sys.level(0);
        let mut out = Vec::new();
        for a in subsets_up_to(&toks, toks.len()) {
            let m = self.inner.meet_of(&a).expect("carrier tokens");
            for x in 0..self.eats.len() {
                if self.eats.arrow(m, x) == target {
                    out.push((a.clone(), self.eats.token(x)));
                }
            }
        }
        out
    }

    fn describe(&self) -> String {
        self.inner.describe()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{check_is_axioms, Budget};
    use crate::webs::{validate_phi, IWeb};

    #[test]
    fn one_point_passes() {
        let e = Eats::one_point();
        assert!(check_eats_star(&e, 3).is_ok());
        let w: IWeb = Arc::new(filter_web(&e).unwrap());
        assert!(w.sys().entails(&ConSet::empty(), &Token::Nu));
        assert!(validate_phi(&w, &Budget::default()).unwrap().all_pass());
    }

    #[test]
    fn violating_table_reports_star() {
        // σ→σ = σ→τ collapses two arrows with incomparable results
        let mut arrow = vec![vec![0; 4]; 4];
        arrow[1][1] = 3;
        arrow[1][2] = 3;
        let e = Eats::four(arrow).unwrap();
        assert!(matches!(check_eats_star(&e, 2), Err(Error::StarViolated(_))));
        assert!(matches!(filter_web(&e), Err(Error::StarViolated(_))));
    }

    #[test]
    fn four_element_system_is_information_system() {
        let e = Eats::four(vec![vec![0; 4]; 4]).unwrap();
        let r = check_is_axioms(filter_sys(&e).as_ref(), &Budget::default()).unwrap();
        assert!(r.all_pass(), "{r}");
    }

    #[test]
    fn malformed_meet_rejected() {
        let meet = vec![vec![0, 1], vec![0, 1]];
        assert!(Eats::new(vec!["w".into(), "a".into()], 0, meet, vec![vec![0, 0], vec![0, 0]]).is_err());
    }
}
