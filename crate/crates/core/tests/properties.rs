use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use webbed::corpus::random_closed_term;
use webbed::fo_axioms::{check_horn_axioms, decode, encode, RelStructure};
use webbed::interp::{interpret, Fuel};
use webbed::kernel::{check_is_axioms, Budget, FiniteSys};
use webbed::lambda::{beta_normalize, parse};
use webbed::token::subsets_up_to;
use webbed::ultra::{principal_ultrafilter, ultraproduct_web};
use webbed::webs::{graph_web, IWeb, Web};
use webbed::{closure, ConSet, InfoSys, Sys, Token};

fn atoms(n: usize) -> Vec<Token> {
    (0..n).map(|i| Token::atom(&format!("p{i}"))).collect()
}

fn pick(tokens: &[Token], mask: u32) -> ConSet {
    tokens.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, t)| t.clone()).collect()
}

/// A finite system from random rules and (optionally) random maximal sets.
fn finite_sys(max_atoms: usize) -> impl Strategy<Value = FiniteSys> {
    (1..=max_atoms).prop_flat_map(|n| {
        let full = 1u32 << n;
        (
            prop::collection::vec((0..full, 0..n), 0..4),
            prop::option::of(prop::collection::vec(1..full, 1..3)),
        )
            .prop_map(move |(rules, maximal)| {
                let ts = atoms(n);
                let rules = rules.into_iter().map(|(m, t)| (pick(&ts, m), ts[t].clone())).collect();
                let maximal = maximal.map(|ms| {
                    ms.into_iter().map(|m| pick(&ts, m).union(&ConSet::singleton(Token::Nu))).collect()
                });
                FiniteSys::from_rules("random", ts.clone(), maximal, rules)
            })
    })
}

fn passes(sys: &FiniteSys) -> bool {
    check_is_axioms(sys, &Budget::default()).map(|r| r.all_pass()).unwrap_or(false)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_is_a_finitary_closure_operator(sys in finite_sys(4)) {
        prop_assume!(passes(&sys));
        let sys: Sys = Arc::new(sys);
        let toks = sys.level(0);
        let sets: Vec<ConSet> = subsets_up_to(&toks, toks.len()).into_iter().filter(|a| sys.con(a)).collect();
        let close = |a: &ConSet| closure(&sys, a).unwrap().materialize().unwrap();
        for a in &sets {
            let ca = close(a);
            prop_assert!(a.iter().all(|t| ca.contains(t)));
            let again = close(&ca.iter().cloned().collect());
            prop_assert_eq!(&again, &ca);
            let mut union = BTreeSet::new();
            for b in sets.iter().filter(|b| b.is_subset(a)) {
                let cb = close(b);
                prop_assert!(cb.is_subset(&ca));
                union.extend(cb);
            }
            prop_assert_eq!(union, ca);
        }
    }

    #[test]
    fn encode_decode_round_trip(sys in finite_sys(3)) {
        prop_assume!(passes(&sys));
        let st = encode(&sys, 3).unwrap();
        prop_assert!(check_horn_axioms(&st).all_pass());
        let back = decode(&st).unwrap();
        let toks = sys.level(0);
        for a in subsets_up_to(&toks, 3) {
            prop_assert_eq!(back.con(&a), sys.con(&a), "con {}", a);
            if sys.con(&a) {
                for t in &toks {
                    prop_assert_eq!(back.entails(&a, t), sys.entails(&a, t), "{} |- {}", a, t);
                }
            }
        }
    }

    #[test]
    fn interpretation_is_monotone_in_fuel(seed in any::<u64>(), depth in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_closed_term(&mut rng, depth);
        let web: IWeb = Arc::new(graph_web(&[Token::atom("0")], vec![]).unwrap());
        for d in 0..=3 {
            for w in 0..=2 {
                let here = interpret(&t, &web, Fuel::new(d, w)).unwrap();
                let deeper = interpret(&t, &web, Fuel::new(d + 1, w)).unwrap();
                let wider = interpret(&t, &web, Fuel::new(d, w + 1)).unwrap();
                prop_assert!(here.is_subset(&deeper), "{} at ({},{})", t, d, w);
                prop_assert!(here.is_subset(&wider), "{} at ({},{})", t, d, w);
            }
        }
    }

    #[test]
    fn printed_terms_parse_back(seed in any::<u64>(), depth in 0usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_closed_term(&mut rng, depth);
        prop_assert!(parse(&t.to_string()).unwrap().alpha_eq(&t));
        if let Some(nf) = beta_normalize(&t, 200).normal() {
            let again = beta_normalize(&nf, 0).normal();
            prop_assert!(again.is_some_and(|x| x.alpha_eq(&nf)));
        }
    }

    #[test]
    fn ultraproduct_ignores_components_off_the_ultrafilter(
        j in 0usize..3,
        picks in prop::collection::vec((0usize..64, 0usize..64, 0usize..64), 1..4),
        noise in prop::collection::vec((0usize..64, 0usize..64, 0usize..64), 4),
    ) {
        let factors: Vec<IWeb> = ["a", "b", "c"]
            .iter()
            .map(|x| Arc::new(graph_web(&[Token::atom(x)], vec![]).unwrap()) as IWeb)
            .collect();
        let levels: Vec<Vec<Token>> = factors.iter().map(|w| w.sys().level(1)).collect();
        let u = principal_ultrafilter(3, j).unwrap();
        let uw = ultraproduct_web(factors, &u).unwrap();
        let seq = |p: &(usize, usize, usize)| -> Vec<Token> {
            let ix = [p.0, p.1, p.2];
            (0..3).map(|k| levels[k][ix[k] % levels[k].len()].clone()).collect()
        };
        // same component at j, arbitrary elsewhere
        let noisy = |p: &(usize, usize, usize), q: &(usize, usize, usize)| -> Vec<Token> {
            let mut s = seq(q);
            s[j] = seq(p)[j].clone();
            s
        };
        let clean: ConSet = picks.iter().map(|p| Token::class(seq(p))).collect();
        let dirty: ConSet = picks.iter().zip(noise.iter().cycle()).map(|(p, q)| Token::class(noisy(p, q))).collect();
        let s = uw.sys();
        prop_assert_eq!(s.con(&clean), s.con(&dirty));
        for (p, q) in picks.iter().zip(&noise) {
            prop_assert_eq!(uw.class_of(&seq(p)).unwrap(), uw.class_of(&noisy(p, q)).unwrap());
            let t = Token::class(seq(p));
            let t2 = Token::class(noisy(p, q));
            prop_assert_eq!(s.entails(&clean, &t), s.entails(&dirty, &t2));
            prop_assert_eq!(uw.phi(&clean, &t), uw.phi(&dirty, &t2));
        }
    }
}

// --- Horn sentences evaluated literally ----------------------------------

fn tuples(carrier: &[Token], n: usize) -> Vec<Vec<Token>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out.into_iter().flat_map(|t| carrier.iter().map(move |x| [t.clone(), vec![x.clone()]].concat())).collect();
    }
    out
}

fn index_maps(n: usize, k: usize) -> Vec<Vec<usize>> {
    let ix: Vec<usize> = (0..n).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out.into_iter().flat_map(|t: Vec<usize>| ix.iter().map(move |&i| [t.clone(), vec![i]].concat())).collect();
    }
    out
}

fn permutations(v: Vec<usize>) -> Vec<Vec<usize>> {
    if v.len() <= 1 {
        return vec![v];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.clone();
        let x = rest.remove(i);
        for mut p in permutations(rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn cat(a: &[Token], b: &[Token]) -> Vec<Token> {
    [a, b].concat()
}

/// Pass/fail of (1)-(7), each quantifier ranging over the whole carrier.
fn naive(s: &RelStructure) -> [bool; 7] {
    let m = &s.carrier;
    let cap = s.cap;
    let a1 = m.iter().all(|a| s.holds_c(std::slice::from_ref(a)));
    let a2 = (1..=cap).all(|n| {
        tuples(m, n).iter().filter(|t| s.holds_c(t)).all(|t| {
            (1..=n).all(|k| index_maps(n, k).iter().all(|ix| s.holds_c(&ix.iter().map(|&i| t[i].clone()).collect::<Vec<_>>())))
        })
    });
    let a3 = (0..cap).all(|n| tuples(m, n + 1).iter().all(|t| !s.holds_r(t) || s.holds_c(t)));
    let a4 = (1..=cap).all(|n| {
        tuples(m, n + 1).iter().filter(|t| s.holds_r(t)).all(|t| {
            permutations((0..n).collect()).iter().all(|p| {
                let mut u: Vec<Token> = p.iter().map(|&i| t[i].clone()).collect();
                u.push(t[n].clone());
                s.holds_r(&u)
            })
        })
    });
    let a5 = (0..=cap).all(|n| {
        (1..=cap).all(|k| {
            tuples(m, n).iter().all(|alpha| {
                tuples(m, k).iter().all(|beta| {
                    let pre = beta.iter().all(|b| s.holds_r(&cat(alpha, std::slice::from_ref(b))));
                    !pre || m.iter().all(|g| !s.holds_r(&cat(beta, std::slice::from_ref(g))) || s.holds_r(&cat(alpha, std::slice::from_ref(g))))
                })
            })
        })
    });
    let a6 = (1..=cap).all(|n| {
        tuples(m, n).iter().filter(|t| s.holds_c(t)).all(|t| t.iter().all(|x| s.holds_r(&cat(t, std::slice::from_ref(x)))))
    });
    let a7 = s.holds_r(std::slice::from_ref(&s.nu));
    [a1, a2, a3, a4, a5, a6, a7]
}

fn flip(s: &mut RelStructure, on_c: bool, arity: usize, pick: usize) {
    let arity = if on_c { 1 + arity % s.cap } else { 1 + arity % (s.cap + 1) };
    let all = tuples(&s.carrier, arity);
    let t = all[pick % all.len()].clone();
    let rel = if on_c { s.c.entry(arity).or_default() } else { s.r.entry(arity).or_default() };
    if !rel.remove(&t) {
        rel.insert(t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn horn_checker_agrees_with_literal_evaluation(
        sys in finite_sys(2),
        flips in prop::collection::vec((any::<bool>(), 0usize..4, 0usize..1000), 0..4),
    ) {
        let mut st = encode(&sys, 3).unwrap();
        for (on_c, arity, pick) in flips {
            flip(&mut st, on_c, arity, pick);
        }
        let report = check_horn_axioms(&st);
        let expected = naive(&st);
        for (i, ok) in expected.iter().enumerate() {
            prop_assert_eq!(report.passes(i as u8 + 1), *ok, "axiom {}\n{}", i + 1, report);
        }
    }
}

/// `sys` cut down to the tokens of one enumeration level.
struct Restricted {
    inner: Sys,
    tokens: Vec<Token>,
}

impl InfoSys for Restricted {
    fn nu(&self) -> Token {
        self.inner.nu()
    }
    fn has_token(&self, t: &Token) -> bool {
        self.tokens.contains(t)
    }
    fn con(&self, a: &ConSet) -> bool {
        self.inner.con(a)
    }
    fn entails(&self, a: &ConSet, t: &Token) -> bool {
        self.inner.entails(a, t)
    }
    fn level(&self, _level: usize) -> Vec<Token> {
        self.tokens.clone()
    }
    fn is_finite(&self) -> bool {
        true
    }
    fn describe(&self) -> String {
        format!("restricted {}", self.inner.describe())
    }
}

fn restrict(sys: Sys, level: usize) -> Restricted {
    Restricted { tokens: sys.level(level), inner: sys }
}

fn passes_sys(sys: &dyn InfoSys) -> bool {
    check_is_axioms(sys, &Budget::default()).map(|r| r.all_pass()).unwrap_or(false)
}

#[test]
fn constructions_encode_to_passing_structures() {
    use webbed::kernel::{exponential, product, terminal};
    let f2: Sys = Arc::new(FiniteSys::flat(&["p"]));
    let f3: Sys = Arc::new(FiniteSys::flat(&["p", "q"]));
    let g: IWeb = Arc::new(graph_web(&[Token::atom("0")], vec![]).unwrap());
    let cases = [
        restrict(product(f3.clone(), f3.clone()), 0),
        restrict(exponential(f2.clone(), f2), 1),
        restrict(g.sys().clone(), 1),
        restrict(terminal(), 0),
    ];
    for sys in &cases {
        assert!(passes_sys(sys), "{}", sys.describe());
        let r = check_horn_axioms(&encode(sys, 3).unwrap());
        assert!(r.all_pass(), "{}\n{r}", sys.describe());
    }
}
