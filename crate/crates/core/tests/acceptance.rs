//! One PASS/FAIL line per acceptance criterion. Runs sequentially so the
//! wall-clock limits are meaningful.

use std::collections::BTreeSet;
use std::process::ExitCode;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use std::time::{Duration, Instant};

use webbed::kernel::{
    all_points, check_is_axioms, exponential, mutate, product, retraction_pair, terminal, Budget, FiniteSys, IsMutation,
    TokenMap,
};
use webbed::completion::{complete, completion_step, transport_check, validate_stage, CompletionConfig, CompletionState};
use webbed::corpus::{corpus, corpus_terms, equal_pairs, random_closed_term, ORACLE_FUEL};
use webbed::fo_axioms::{check_horn_axioms, encode, horn_ultraproduct_check, Mutation};
use webbed::interp::{apply_points, interpret, separate, token_in_interp, Fuel, Interpreter, Verdict};
use webbed::lambda::{beta_normalize, easy_padding, projection, PaddingReading};
use webbed::ultra::{
    collapse_check_levels, embed_contains, embed_point, los_equation_check, principal_ultrafilter, seq_apply,
    seq_interpret, small_points, ultraproduct_web, SeqPoint,
};
use webbed::lambda::Term;
use webbed::PointApprox;
use webbed::webs::{filter_sys, graph_web, krivine_web, Eats, IWeb, PairOrder, Web};
use webbed::{closure, ConSet, Sys, Token};

type Outcome = std::result::Result<String, String>;

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

const fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn flat(atoms: &[&str]) -> Sys {
    Arc::new(FiniteSys::flat(atoms))
}

fn atom(s: &str) -> Token {
    Token::atom(s)
}

// ---------------------------------------------------------------------------

const MUTATION_SEEDS: [u64; 3] = [1, 2, 3];

fn is_axioms() -> Outcome {
    let mut cases: Vec<(String, Sys, usize)> = vec![
        ("terminal".into(), terminal(), 0),
        ("product(F3,F3)".into(), product(flat(&["p", "q"]), flat(&["p", "q"])), 0),
        ("exponential(F2,F2)".into(), exponential(flat(&["p"]), flat(&["p"])), 1),
    ];
    for n in 1..=4 {
        let atoms: Vec<Token> = (0..n).map(|i| atom(&i.to_string())).collect();
        let level = if n == 1 { 1 } else { 0 };
        let g = graph_web(&atoms, vec![]).map_err(|e| e.to_string())?;
        cases.push((format!("graph({n} atoms)"), g.sys().clone(), level));
        let order: Vec<(Token, Token)> = atoms.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
        let k = krivine_web(&atoms, order, vec![], PairOrder::Definitional).map_err(|e| e.to_string())?;
        cases.push((format!("krivine({n} atoms)"), k.sys().clone(), level));
    }
    cases.push(("filter(one point)".into(), filter_sys(&Eats::one_point()), 0));
    let four = Eats::four(vec![vec![0; 4]; 4]).map_err(|e| e.to_string())?;
    cases.push(("filter(four)".into(), filter_sys(&four), 0));

    let mut caught = 0;
    for (name, sys, level) in &cases {
        let budget = Budget::at_level(*level);
        let universe = sys.level(*level);
        ensure(budget.all_subsets(&universe), || format!("{name}: {} tokens is not exhaustive", universe.len()))?;
        let r = check_is_axioms(sys.as_ref(), &budget).map_err(|e| format!("{name}: {e}"))?;
        ensure(r.all_pass(), || format!("{name}: {:?}", r.failing()))?;
        for (kind, seed) in IsMutation::ALL.into_iter().zip(MUTATION_SEEDS) {
            let bad = mutate(sys, kind, *level, seed);
            let r = check_is_axioms(bad.as_ref(), &budget).map_err(|e| format!("{name}: {e}"))?;
            ensure(r.failing().contains(&kind.target_axiom()), || format!("{name}: {kind:?} not caught"))?;
            caught += 1;
        }
    }
    Ok(format!("{} constructions pass, {caught} mutations caught", cases.len()))
}

fn retraction() -> Outcome {
    let f2 = flat(&["p"]);
    let f3 = flat(&["p", "q"]);
    let f4 = flat(&["p", "q", "r"]);
    let prod = product(f3.clone(), f3.clone());
    let p = atom("p");
    let q = atom("q");
    let lift = |t: &Token, side: bool| -> Token {
        match (t, side) {
            (Token::Nu, _) => Token::ProdNu,
            (t, true) => Token::inl(t.clone()),
            (t, false) => Token::inr(t.clone()),
        }
    };
    let chain: Sys = Arc::new(FiniteSys::from_rules("chain", [p.clone(), q.clone()], None, vec![(ConSet::singleton(q.clone()), p.clone())]));
    let maps: Vec<(&str, TokenMap)> = vec![
        ("id(F3)", TokenMap::identity(f3.clone())),
        ("F2 -> F3", TokenMap::new(f2.clone(), f3.clone(), |t| Some(t.clone()))),
        ("F3 -> F4", TokenMap::new(f3.clone(), f4.clone(), |t| Some(t.clone()))),
        ("inl", TokenMap::new(f3.clone(), prod.clone(), move |t| Some(lift(t, true)))),
        ("inr", TokenMap::new(f3.clone(), prod.clone(), move |t| Some(lift(t, false)))),
        ("swap(F3)", {
            let (p, q) = (p.clone(), q.clone());
            TokenMap::new(f3.clone(), f3.clone(), move |t| {
                Some(if *t == p {
                    q.clone()
                } else if *t == q {
                    p.clone()
                } else {
                    t.clone()
                })
            })
        }),
        ("id(chain)", TokenMap::identity(chain.clone())),
    ];
    let budget = Budget::default();
    let mut checked = 0;
    let mut points = 0;
    for (name, f) in &maps {
        let src = f.source().level(0).len().max(f.target().level(0).len());
        ensure(src <= 10, || format!("{name}: {src} tokens"))?;
        let rp = retraction_pair(f, &budget).map_err(|e| format!("{name}: {e}"))?;
        for ext in all_points(f.source(), &budget).map_err(|e| e.to_string())? {
            let x = closure(f.source(), &ext.iter().cloned().collect::<ConSet>()).map_err(|e| e.to_string())?;
            let back = rp.lower(&rp.upper(&x).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            ensure(back.materialize().as_ref() == Some(&ext), || format!("{name}: f_.(f^.(x)) != x for {ext:?}"))?;
            points += 1;
        }
        checked += 1;
    }
    Ok(format!("{checked} b-morphisms, {points} points"))
}

fn g0() -> IWeb {
    Arc::new(graph_web(&[atom("0")], vec![]).expect("one atom"))
}

const SOUNDNESS_SEED: u64 = 11;
const SOUNDNESS_PAIRS: usize = 200;
const SOUNDNESS_FUEL: Fuel = Fuel { depth: 4, width: 2 };

fn soundness() -> Outcome {
    let web = g0();
    let pairs = equal_pairs(SOUNDNESS_SEED, SOUNDNESS_PAIRS).map_err(|e| e.to_string())?;
    for p in &pairs {
        let v = separate(&p.m, &p.n, &web, SOUNDNESS_FUEL).map_err(|e| e.to_string())?;
        ensure(v.is_unknown(), || format!("pair {}: {v}", p.index))?;
    }
    Ok(format!(
        "{} EQUAL pairs, all Unknown at depth {} width {}",
        pairs.len(),
        SOUNDNESS_FUEL.depth,
        SOUNDNESS_FUEL.width
    ))
}

const MONOTONE_SEED: u64 = 21;
const MONOTONE_TERMS: usize = 50;
const MONOTONE_MAX: usize = 4;

fn monotonicity() -> Outcome {
    let web = g0();
    let terms = corpus_terms(MONOTONE_SEED, MONOTONE_TERMS).map_err(|e| e.to_string())?;
    let mut compared = 0usize;
    for d in 0..=MONOTONE_MAX {
        for w in 0..=MONOTONE_MAX {
            let here = Interpreter::new(&web, Fuel::new(d, w));
            let deeper = Interpreter::new(&web, Fuel::new(d + 1, w));
            let wider = Interpreter::new(&web, Fuel::new(d, w + 1));
            for t in &terms {
                for gamma in here.interpret(t).map_err(|e| e.to_string())? {
                    for (next, label) in [(&deeper, "depth"), (&wider, "width")] {
                        let ok = next.generates(&gamma, t).map_err(|e| e.to_string())?;
                        ensure(ok, || format!("{t}: {gamma} lost when raising {label} from ({d},{w})"))?;
                    }
                    compared += 1;
                }
            }
        }
    }
    Ok(format!("{} terms, {compared} tokens, zero violations", terms.len()))
}

const OMEGA_DEPTH: usize = 6;
const SEPARATION_FUEL: Fuel = Fuel { depth: 6, width: 2 };

fn omega() -> Outcome {
    let web = g0();
    // width equal to the pool size enumerates every antecedent
    let mut widths = Vec::new();
    for d in 0..=OMEGA_DEPTH {
        let w = Interpreter::new(&web, Fuel::new(d, 0)).pool().len();
        let s = interpret(&Term::omega(), &web, Fuel::new(d, w)).map_err(|e| e.to_string())?;
        ensure(s.is_empty(), || format!("Omega nonempty at depth {d}, width {w}"))?;
        widths.push(w);
    }
    let zero = atom("0");
    let expected = Token::arrow(ConSet::singleton(zero.clone()), zero);
    let v = separate(&Term::identity(), &Term::omega(), &web, SEPARATION_FUEL).map_err(|e| e.to_string())?;
    match v {
        Verdict::Separated { ref witness, .. } if *witness == expected => {}
        _ => return Err(format!("expected Separated with {expected}, got {v}")),
    }
    Ok(format!("Omega empty at depths 0..={OMEGA_DEPTH} (saturated widths {widths:?}); {v}"))
}

fn completion() -> Outcome {
    let cfg = CompletionConfig { stage_cap: 2, ..CompletionConfig::default() };
    let mut st = CompletionState::new(&g0(), &g0(), cfg).map_err(|e| e.to_string())?;
    let mut sizes = vec![st.universe().len()];
    let r = validate_stage(&st).map_err(|e| e.to_string())?;
    ensure(r.all_pass(), || format!("stage 0: {:?}", r.failing()))?;
    let mut checks = r.entries.len();
    while st.stage() < 2 {
        st = completion_step(&st).map_err(|e| e.to_string())?;
        let r = st.report();
        ensure(r.all_pass(), || format!("stage {}: {:?}", st.stage(), r.failing()))?;
        checks += r.entries.len();
        sizes.push(st.universe().len());
    }
    Ok(format!("stage sizes {sizes:?}, {checks} checks pass, stage 2 truncated: {}", st.truncated()))
}

const TRANSPORT_FUEL: Fuel = Fuel { depth: 3, width: 2 };

fn transport() -> Outcome {
    let om = complete(&g0(), &g0(), 1).map_err(|e| e.to_string())?;
    let w = om.as_iweb();
    let mut n = 0;
    for m in [Term::identity(), Term::k(), Term::s()] {
        for depth in 1..=TRANSPORT_FUEL.depth {
            let fuel = Fuel { depth, ..TRANSPORT_FUEL };
            for g in interpret(&m, &w, fuel).map_err(|e| e.to_string())? {
                for which in [1, 2] {
                    let f = transport_check(&m, &g, which, &om, fuel).map_err(|e| e.to_string())?;
                    ensure(f.depth <= fuel.depth + 2, || format!("{m}: {g} needed depth {}", f.depth))?;
                    n += 1;
                }
            }
        }
    }
    let a1 = om.factor(1).map_err(|e| e.to_string())?.clone();
    let v = separate(&Term::identity(), &Term::omega(), &a1, SEPARATION_FUEL).map_err(|e| e.to_string())?;
    let (alpha, _) = v.witness().ok_or("no separation witness in the first factor")?;
    let lifted = Token::inl(alpha.clone());
    let found = token_in_interp(&lifted, &Term::identity(), &w, SEPARATION_FUEL).map_err(|e| e.to_string())?;
    ensure(found.is_yes(), || format!("{lifted} not found in I"))?;
    Ok(format!("{n} transports, witness {alpha} lifts to {lifted}"))
}

const LOS_SEED: u64 = 31;
const LOS_PAIRS: usize = 50;
const LOS_FUEL: Fuel = Fuel { depth: 3, width: 2 };

fn collapse() -> Outcome {
    let family = || -> std::result::Result<Vec<IWeb>, String> {
        let a: IWeb = Arc::new(graph_web(&[atom("a")], vec![]).map_err(|e| e.to_string())?);
        let b: IWeb = Arc::new(graph_web(&[atom("b")], vec![]).map_err(|e| e.to_string())?);
        Ok(vec![a, b])
    };
    let budget = Budget { level: 2, max_card: 12, ..Budget::default() };
    let mut tokens = 0;
    for j in 0..2 {
        let u = principal_ultrafilter(2, j).map_err(|e| e.to_string())?;
        let uw = ultraproduct_web(family()?, &u).map_err(|e| e.to_string())?;
        let r = collapse_check_levels(&uw, 2, 1, &budget).map_err(|e| e.to_string())?;
        ensure(r.all_pass(), || format!("j={j}: {:?}", r.failing()))?;
        tokens = uw.sys().level(2).len();
    }
    let u = principal_ultrafilter(2, 1).map_err(|e| e.to_string())?;
    let uw = ultraproduct_web(family()?, &u).map_err(|e| e.to_string())?;
    let pairs = corpus(LOS_SEED, LOS_PAIRS).map_err(|e| e.to_string())?;
    let mut separated = 0;
    for p in &pairs {
        let v = los_equation_check(&p.m, &p.n, &uw, LOS_FUEL).map_err(|e| e.to_string())?;
        ensure(v.agrees(&uw), || format!("pair {}: {v}", p.index))?;
        separated += usize::from(!v.factor.is_unknown());
    }
    Ok(format!("both j isomorphic over {tokens} level-2 tokens; {} pairs agree ({separated} separated)", pairs.len()))
}

const EMBED_FUEL: Fuel = Fuel { depth: 4, width: 2 };
const EMBED_GENERATORS: usize = 2;

fn embedding() -> Outcome {
    let a: IWeb = Arc::new(graph_web(&[atom("a")], vec![]).map_err(|e| e.to_string())?);
    let b: IWeb = Arc::new(graph_web(&[atom("b")], vec![]).map_err(|e| e.to_string())?);
    let distinct = |w: &IWeb| -> Vec<PointApprox> {
        let mut seen = BTreeSet::new();
        small_points(w.sys(), &w.sys().level(1), EMBED_GENERATORS)
            .into_iter()
            .filter(|p| seen.insert(p.extension_at(1)))
            .collect()
    };
    let (pa, pb) = (distinct(&a), distinct(&b));
    let seqs: Vec<SeqPoint> = pa.iter().flat_map(|x| pb.iter().map(move |y| vec![x.clone(), y.clone()])).collect();
    let mut applications = 0usize;
    for j in 0..2 {
        let u = principal_ultrafilter(2, j).map_err(|e| e.to_string())?;
        let uw = ultraproduct_web(vec![a.clone(), b.clone()], &u).map_err(|e| e.to_string())?;
        let iw = uw.as_iweb();
        let probe = uw.sys().level(2);
        // generators lie at level 1 and entailment is membership, so level 1 separates points
        let small = uw.sys().level(1);
        let key = |p: &PointApprox| -> BTreeSet<Token> { small.iter().filter(|t| p.contains(t)).cloned().collect() };
        let mut images = Vec::with_capacity(seqs.len());
        for x in &seqs {
            let fx = embed_point(x, &uw).map_err(|e| e.to_string())?;
            for t in &probe {
                let literal = embed_contains(x, &uw, t).map_err(|e| e.to_string())?;
                ensure(fx.contains(t) == literal, || format!("j={j}: membership of {t} differs from the definition"))?;
            }
            images.push(key(&fx));
        }
        for (x, fx) in seqs.iter().zip(&images) {
            for (y, fy) in seqs.iter().zip(&images) {
                let same_class = x[j].extension_at(1) == y[j].extension_at(1);
                ensure(same_class == (fx == fy), || format!("j={j}: injectivity fails"))?;
            }
        }
        // applications depend only on the component points, so each is computed once
        let factor_apply = |k: usize, pts: &[PointApprox]| -> std::result::Result<Vec<Vec<PointApprox>>, String> {
            let w = uw.factors()[k].clone();
            pts.iter()
                .map(|x| pts.iter().map(|y| apply_points(x, y, &w, EMBED_FUEL).map_err(|e| e.to_string())).collect())
                .collect()
        };
        let tables = [factor_apply(0, &pa)?, factor_apply(1, &pb)?];
        let key_points = if j == 0 { &pa } else { &pb };
        let mut ultra_apply = Vec::new();
        for x in key_points {
            let mut row = Vec::new();
            for y in key_points {
                let one = |p: &PointApprox| -> std::result::Result<PointApprox, String> {
                    let seq = if j == 0 { vec![p.clone(), pb[0].clone()] } else { vec![pa[0].clone(), p.clone()] };
                    embed_point(&seq, &uw).map_err(|e| e.to_string())
                };
                row.push(key(&apply_points(&one(x)?, &one(y)?, &iw, EMBED_FUEL).map_err(|e| e.to_string())?));
            }
            ultra_apply.push(row);
        }
        let n = pb.len();
        for ix in 0..seqs.len() {
            for iy in 0..seqs.len() {
                let idx = [[ix / n, iy / n], [ix % n, iy % n]];
                let xy = vec![tables[0][idx[0][0]][idx[0][1]].clone(), tables[1][idx[1][0]][idx[1][1]].clone()];
                if ix == iy {
                    let d = seq_apply(&seqs[ix], &seqs[iy], &uw, EMBED_FUEL).map_err(|e| e.to_string())?;
                    ensure(d.iter().zip(&xy).all(|(p, q)| p.generators() == q.generators()), || "table mismatch".into())?;
                }
                let lhs = embed_point(&xy, &uw).map_err(|e| e.to_string())?;
                ensure(key(&lhs) == ultra_apply[idx[j][0]][idx[j][1]], || format!("j={j}: f(x.y) != f(x).f(y)"))?;
                applications += 1;
            }
        }
        for m in [Term::k(), Term::s()] {
            let seq = seq_interpret(&m, &uw, EMBED_FUEL).map_err(|e| e.to_string())?;
            let lhs = embed_point(&seq, &uw).map_err(|e| e.to_string())?;
            let rhs = Interpreter::new(&iw, EMBED_FUEL).point(&m).map_err(|e| e.to_string())?;
            ensure(lhs.generators() == rhs.generators(), || format!("j={j}: {m} not preserved"))?;
        }
    }
    Ok(format!("{} sequence points per ultrafilter, {applications} applications", seqs.len()))
}

const HORN_CAP: usize = 3;

fn horn() -> Outcome {
    let f3 = flat(&["p", "q"]);
    let systems: Vec<(&str, Sys)> =
        vec![("F3", f3.clone()), ("F3 x F3", product(f3.clone(), f3)), ("terminal", terminal())];
    let mut encoded = Vec::new();
    for (name, sys) in &systems {
        let st = encode(sys.as_ref(), HORN_CAP).map_err(|e| format!("{name}: {e}"))?;
        let r = check_horn_axioms(&st);
        ensure(r.all_pass(), || format!("{name}: axioms {:?} fail", r.failing()))?;
        encoded.push(st);
    }
    let mut ultras = 0;
    for (i, s1) in encoded.iter().enumerate() {
        for s2 in &encoded[i..] {
            for j in 0..2 {
                let u = principal_ultrafilter(2, j).map_err(|e| e.to_string())?;
                let h = horn_ultraproduct_check(s1, s2, &u).map_err(|e| e.to_string())?;
                ensure(h.report.all_pass() && h.collapses, || format!("ultraproduct fails {:?}", h.report.failing()))?;
                ultras += 1;
            }
        }
    }
    let mut caught = 0;
    for m in Mutation::ALL {
        let bad = m.apply(&encoded[0]).map_err(|e| e.to_string())?;
        let r = check_horn_axioms(&bad);
        ensure(!r.passes(m.target_axiom()), || format!("{m:?} not caught"))?;
        caught += 1;
    }
    Ok(format!("{} structures, {ultras} ultraproducts pass, {caught} mutations caught", encoded.len()))
}

const PADDING_SEED: u64 = 41;
const PADDING_INSTANCES: usize = 10;

fn padding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(PADDING_SEED);
    for case in 0..PADDING_INSTANCES {
        let k = rng.gen_range(1..=4);
        let mut indices: Vec<usize> = (1..=8).collect();
        indices.shuffle(&mut rng);
        indices.truncate(k);
        indices.sort_unstable();
        let mut terms = Vec::new();
        while terms.len() < k {
            let t = random_closed_term(&mut rng, 3);
            if let Some(n) = beta_normalize(&t, ORACLE_FUEL).normal() {
                terms.push(n);
            }
        }
        let z = easy_padding(&indices, &terms, PaddingReading::Absorbing).map_err(|e| e.to_string())?;
        for (n, target) in indices.iter().zip(&terms) {
            let applied = Term::app(z.clone(), projection(*n).map_err(|e| e.to_string())?);
            let nf = beta_normalize(&applied, ORACLE_FUEL).normal().ok_or_else(|| format!("case {case}: no normal form"))?;
            ensure(nf.alpha_eq(target), || format!("case {case}: Z pi_{n} = {nf}, expected {target}"))?;
        }
    }
    Ok(format!("{PADDING_INSTANCES} instances, absorbing reading"))
}

// ---------------------------------------------------------------------------

const CRITERIA: &[Criterion] = &[
    Criterion { name: "IS axioms", limit: secs(10), run: is_axioms },
    Criterion { name: "Retraction law", limit: secs(5), run: retraction },
    Criterion { name: "Interpretation soundness", limit: secs(60), run: soundness },
    Criterion { name: "Fuel monotonicity", limit: None, run: monotonicity },
    Criterion { name: "Omega emptiness and I/Omega separation", limit: secs(5), run: omega },
    Criterion { name: "Completion stage correctness", limit: secs(120), run: completion },
    Criterion { name: "Transport", limit: None, run: transport },
    Criterion { name: "Principal collapse", limit: secs(60), run: collapse },
    Criterion { name: "Embedding", limit: None, run: embedding },
    Criterion { name: "Horn axioms", limit: secs(10), run: horn },
    Criterion { name: "Easy-padding", limit: secs(5), run: padding },
];

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in CRITERIA {
        if !filter.is_empty() && !filter.iter().any(|f| c.name.to_lowercase().contains(&f.to_lowercase())) {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if took > limit => Err(format!("took {:.1}s, limit {}s", took.as_secs_f64(), limit.as_secs())),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS {} ({:.2}s): {detail}", c.name, took.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {} ({:.2}s): {why}", c.name, took.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
