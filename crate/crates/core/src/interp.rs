//! Fuel-bounded interpretation of λ-terms in the model of an i-web.
//!
//! Terms run on a small Krivine-style machine: an application pushes its
//! argument as a thunk, an abstraction facing an argument binds it, and an
//! abstraction with no argument left is expanded through the abstraction
//! clause over candidate antecedents. A variable bound to a finitely
//! generated point consumes the pending arguments through the application
//! clause, querying argument membership goal-directedly. Each β-step costs
//! one unit of depth. Every emitted token belongs to the exact denotation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::{closure, Membership, PointApprox, Sys};
use crate::lambda::{whnf_loops, Db, Term};
use crate::token::{subsets_up_to, ConSet, Token};
use crate::webs::IWeb;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fuel {
    /// Number of β-steps (and nested argument queries) allowed.
    pub depth: usize,
    /// Largest antecedent tried in the abstraction clause.
    pub width: usize,
}

impl Fuel {
    pub fn new(depth: usize, width: usize) -> Fuel {
        Fuel { depth, width }
    }
}

impl Default for Fuel {
    fn default() -> Self {
        Fuel { depth: 4, width: 2 }
    }
}

#[derive(Clone)]
enum Val {
    Set(ConSet),
    Thunk(Arc<Closure>),
}

struct Closure {
    term: Arc<Db>,
    env: Env,
}

#[derive(Clone, Default)]
struct Env(Option<Arc<EnvNode>>);

struct EnvNode {
    val: Val,
    next: Env,
}

impl Env {
    fn push(&self, val: Val) -> Env {
        Env(Some(Arc::new(EnvNode { val, next: self.clone() })))
    }

    fn get(&self, i: usize) -> &Val {
        let mut cur = self.0.as_ref().expect("closed term");
        for _ in 0..i {
            cur = cur.next.0.as_ref().expect("closed term");
        }
        &cur.val
    }
}

#[derive(Clone, Default)]
struct Stack(Option<Arc<StackNode>>);

struct StackNode {
    arg: Arc<Closure>,
    next: Stack,
}

impl Stack {
    fn push(&self, arg: Arc<Closure>) -> Stack {
        Stack(Some(Arc::new(StackNode { arg, next: self.clone() })))
    }

    fn pop(&self) -> Option<(Arc<Closure>, Stack)> {
        self.0.as_ref().map(|n| (n.arg.clone(), n.next.clone()))
    }

    fn is_empty(&self) -> bool {
        self.0.is_none()
    }
}

/// An interpreter for one web at one fuel setting.
pub struct Interpreter {
    web: IWeb,
    sys: Sys,
    fuel: Fuel,
    pool: Vec<Token>,
    pool_sets: Vec<ConSet>,
    pool_index: BTreeSet<ConSet>,
    flat: bool,
    close_universe: Vec<Token>,
    free: BTreeMap<Arc<str>, ConSet>,
}

impl Interpreter {
    pub fn new(web: &IWeb, fuel: Fuel) -> Interpreter {
        let sys = web.sys().clone();
        let mut base = sys.level(0);
        base.sort_by_key(Token::simplicity_key);
        let mut extra: Vec<Token> = sys.level(1).into_iter().filter(|t| !base.contains(t)).collect();
        extra.sort_by_key(Token::simplicity_key);
        extra.truncate(fuel.depth.saturating_sub(1));
        let mut pool = base;
        pool.extend(extra);
        let pool_sets: Vec<ConSet> = subsets_up_to(&pool, fuel.width).into_iter().filter(|a| sys.con(a)).collect();
        let pool_index = pool_sets.iter().cloned().collect();
        let flat = web.is_flat();
        let close_universe = if sys.is_finite() { sys.level(0) } else { pool.clone() };
        Interpreter { web: web.clone(), sys, fuel, pool, pool_sets, pool_index, flat, close_universe, free: BTreeMap::new() }
    }

    /// Binds free variables to finitely generated points.
    pub fn with_env(mut self, env: &BTreeMap<String, PointApprox>) -> Result<Interpreter> {
        for (k, p) in env {
            if !Arc::ptr_eq(p.sys(), &self.sys) {
                return Err(Error::WebMismatch);
            }
            self.free.insert(k.as_str().into(), p.generators().clone());
        }
        Ok(self)
    }

    pub fn fuel(&self) -> Fuel {
        self.fuel
    }

    /// Tokens available for antecedents of the abstraction clause.
    pub fn pool(&self) -> &[Token] {
        &self.pool
    }

    fn check_free(&self, t: &Term) -> Result<()> {
        let missing: Vec<String> = t.free_vars().into_iter().filter(|x| !self.free.contains_key(x)).map(|x| x.to_string()).collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::OpenTerm(missing.join(",")))
        }
    }

    /// Generators of the approximant; always includes `ν`.
    pub fn generators(&self, t: &Term) -> Result<BTreeSet<Token>> {
        self.check_free(t)?;
        Ok(self.eval(&Arc::new(t.to_db()), &Env::default(), &Stack::default(), self.fuel.depth))
    }

    /// The approximant with tokens entailed by `∅` removed.
    pub fn interpret(&self, t: &Term) -> Result<BTreeSet<Token>> {
        let gens = self.generators(t)?;
        Ok(gens.into_iter().filter(|g| !self.trivial(g)).collect())
    }

    pub fn contains(&self, gamma: &Token, t: &Term) -> Result<Membership> {
        self.check_free(t)?;
        let yes = self.check(gamma, &Arc::new(t.to_db()), &Env::default(), &Stack::default(), self.fuel.depth);
        Ok(if yes { Membership::Yes } else { Membership::Unknown })
    }

    /// Whether `gamma` is among `generators(t)`, decided without building
    /// the whole set.
    pub fn generates(&self, gamma: &Token, t: &Term) -> Result<bool> {
        self.check_free(t)?;
        Ok(self.gen_member(gamma, &Arc::new(t.to_db()), &Env::default(), &Stack::default(), self.fuel.depth))
    }

    pub fn point(&self, t: &Term) -> Result<PointApprox> {
        let gens: ConSet = self.generators(t)?.into_iter().collect();
        closure(&self.sys, &gens)
    }

    fn trivial(&self, t: &Token) -> bool {
        self.sys.entails(&ConSet::empty(), t)
    }

    fn nu_set(&self) -> BTreeSet<Token> {
        BTreeSet::from([self.sys.nu()])
    }

    fn close(&self, s: BTreeSet<Token>) -> BTreeSet<Token> {
        let mut out = s;
        out.insert(self.sys.nu());
        if !self.flat {
            let gens: ConSet = out.iter().cloned().collect();
            out.extend(self.close_universe.iter().filter(|t| self.sys.entails(&gens, t)).cloned());
        }
        out
    }

    fn entails(&self, s: &BTreeSet<Token>, gamma: &Token) -> bool {
        if self.flat {
            return s.contains(gamma) || self.trivial(gamma);
        }
        let gens: ConSet = s.iter().cloned().collect();
        self.sys.entails(&gens, gamma)
    }

    fn eval(&self, t: &Arc<Db>, env: &Env, stack: &Stack, d: usize) -> BTreeSet<Token> {
        if d == 0 {
            return self.nu_set();
        }
        match t.as_ref() {
            Db::App(f, a) => {
                let arg = Arc::new(Closure { term: a.clone(), env: env.clone() });
                self.eval(f, env, &stack.push(arg), d)
            }
            Db::Abs(body) => match stack.pop() {
                Some((arg, rest)) => self.eval(body, &env.push(Val::Thunk(arg)), &rest, d - 1),
                None => {
                    let mut out = self.nu_set();
                    for a in &self.pool_sets {
                        let inner = env.push(Val::Set(a.clone()));
                        for alpha in self.eval(body, &inner, &Stack::default(), d - 1) {
                            if let Some(x) = self.web.phi(a, &alpha) {
                                out.insert(x);
                            }
                        }
                    }
                    out
                }
            },
            Db::Var(i) => match env.get(*i) {
                Val::Thunk(c) => self.eval(&c.term, &c.env, stack, d),
                Val::Set(a) => self.chain(a, stack, d),
            },
            Db::Free(x) => {
                let a = self.free.get(x).cloned().unwrap_or_default();
                self.chain(&a, stack, d)
            }
        }
    }

    /// `ā · N₁ · … · N_k`, the arguments taken from `stack`.
    fn chain(&self, a: &ConSet, stack: &Stack, d: usize) -> BTreeSet<Token> {
        let mut cur = self.close(a.iter().cloned().collect());
        let mut st = stack.clone();
        while let Some((arg, rest)) = st.pop() {
            let mut next = BTreeSet::new();
            for tau in &cur {
                for (b, beta) in self.web.phi_inverse(tau) {
                    if next.contains(&beta) {
                        continue;
                    }
                    if b.iter().all(|s| self.check(s, &arg.term, &arg.env, &Stack::default(), d - 1)) {
                        next.insert(beta);
                    }
                }
            }
            cur = self.close(next);
            st = rest;
        }
        cur
    }

    fn check(&self, gamma: &Token, t: &Arc<Db>, env: &Env, stack: &Stack, d: usize) -> bool {
        if self.trivial(gamma) {
            return true;
        }
        if d == 0 {
            return false;
        }
        match t.as_ref() {
            Db::App(f, a) => {
                let arg = Arc::new(Closure { term: a.clone(), env: env.clone() });
                self.check(gamma, f, env, &stack.push(arg), d)
            }
            Db::Abs(body) => match stack.pop() {
                Some((arg, rest)) => self.check(gamma, body, &env.push(Val::Thunk(arg)), &rest, d - 1),
                None => {
                    for (a, alpha) in self.web.phi_inverse(gamma) {
                        if self.sys.con(&a) && self.check(&alpha, body, &env.push(Val::Set(a.clone())), &Stack::default(), d - 1) {
                            return true;
                        }
                    }
                    if self.flat {
                        return false;
                    }
                    let gens = self.eval(t, env, stack, d);
                    self.entails(&gens, gamma)
                }
            },
            Db::Var(i) => match env.get(*i) {
                Val::Thunk(c) => self.check(gamma, &c.term, &c.env, stack, d),
                Val::Set(a) => {
                    if stack.is_empty() {
                        let gens: ConSet = a.clone();
                        return self.sys.entails(&gens, gamma);
                    }
                    let s = self.chain(a, stack, d);
                    self.entails(&s, gamma)
                }
            },
            Db::Free(x) => {
                let a = self.free.get(x).cloned().unwrap_or_default();
                let s = self.chain(&a, stack, d);
                self.entails(&s, gamma)
            }
        }
    }

    /// Membership in `eval(t, env, stack, d)`, following the same recursion.
    fn gen_member(&self, gamma: &Token, t: &Arc<Db>, env: &Env, stack: &Stack, d: usize) -> bool {
        if *gamma == self.sys.nu() {
            return true;
        }
        if d == 0 {
            return false;
        }
        match t.as_ref() {
            Db::App(f, a) => {
                let arg = Arc::new(Closure { term: a.clone(), env: env.clone() });
                self.gen_member(gamma, f, env, &stack.push(arg), d)
            }
            Db::Abs(body) => match stack.pop() {
                Some((arg, rest)) => self.gen_member(gamma, body, &env.push(Val::Thunk(arg)), &rest, d - 1),
                None => self.web.phi_inverse(gamma).into_iter().any(|(a, alpha)| {
                    self.pool_index.contains(&a)
                        && self.gen_member(&alpha, body, &env.push(Val::Set(a.clone())), &Stack::default(), d - 1)
                }),
            },
            Db::Var(i) => match env.get(*i) {
                Val::Thunk(c) => self.gen_member(gamma, &c.term, &c.env, stack, d),
                Val::Set(a) => self.chain(a, stack, d).contains(gamma),
            },
            Db::Free(x) => {
                let a = self.free.get(x).cloned().unwrap_or_default();
                self.chain(&a, stack, d).contains(gamma)
            }
        }
    }

    /// `u · z` on finitely generated points.
    pub fn apply_points(&self, u: &PointApprox, z: &PointApprox) -> Result<PointApprox> {
        if !Arc::ptr_eq(u.sys(), &self.sys) || !Arc::ptr_eq(z.sys(), &self.sys) {
            return Err(Error::WebMismatch);
        }
        let mut out = BTreeSet::new();
        for tau in self.close(u.generators().iter().cloned().collect()) {
            for (b, beta) in self.web.phi_inverse(&tau) {
                if b.iter().all(|s| z.contains(s)) {
                    out.insert(beta);
                }
            }
        }
        let gens: ConSet = self.close(out).into_iter().collect();
        closure(&self.sys, &gens)
    }
}

pub fn interpret(t: &Term, web: &IWeb, fuel: Fuel) -> Result<BTreeSet<Token>> {
    Interpreter::new(web, fuel).interpret(t)
}

pub fn interpret_env(t: &Term, web: &IWeb, env: &BTreeMap<String, PointApprox>, fuel: Fuel) -> Result<BTreeSet<Token>> {
    Interpreter::new(web, fuel).with_env(env)?.interpret(t)
}

/// `Yes` if `γ` is found in the denotation within `fuel`; never `No`.
pub fn token_in_interp(gamma: &Token, t: &Term, web: &IWeb, fuel: Fuel) -> Result<Membership> {
    Interpreter::new(web, fuel).contains(gamma, t)
}

pub fn apply_points(u: &PointApprox, z: &PointApprox, web: &IWeb, fuel: Fuel) -> Result<PointApprox> {
    Interpreter::new(web, fuel).apply_points(u, z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "LEFT",
            Side::Right => "RIGHT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// `witness` is in the denotation of one side and provably not the other.
    Separated { witness: Token, side: Side },
    /// `witness` is in one side and was not found in the other.
    Candidate { witness: Token, side: Side },
    Unknown,
}

impl Verdict {
    pub fn witness(&self) -> Option<(&Token, Side)> {
        match self {
            Verdict::Separated { witness, side } | Verdict::Candidate { witness, side } => Some((witness, *side)),
            Verdict::Unknown => None,
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Verdict::Unknown)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Separated { witness, side } => write!(f, "SEPARATED {witness} {side}"),
            Verdict::Candidate { witness, side } => write!(f, "CANDIDATE {witness} {side}"),
            Verdict::Unknown => write!(f, "UNKNOWN"),
        }
    }
}

/// Weak head steps searched for a repeated term when certifying emptiness.
const LOOP_STEPS: usize = 256;

/// Looks for a token in one side's approximant not found in the other's at
/// twice the depth.
pub fn separate(m: &Term, n: &Term, web: &IWeb, fuel: Fuel) -> Result<Verdict> {
    let here = Interpreter::new(web, fuel);
    let there = Interpreter::new(web, Fuel { depth: fuel.depth * 2, width: fuel.width });
    for (side, x, y) in [(Side::Left, m, n), (Side::Right, n, m)] {
        let mut cands: Vec<Token> = here.interpret(x)?.into_iter().collect();
        cands.sort_by_key(Token::simplicity_key);
        for g in cands {
            if there.contains(&g, y)? == Membership::Yes {
                continue;
            }
            return Ok(if certified_trivial(y, web, fuel)? {
                Verdict::Separated { witness: g, side }
            } else {
                Verdict::Candidate { witness: g, side }
            });
        }
    }
    Ok(Verdict::Unknown)
}

/// `⟦t⟧ = closure(∅)` is certified only in free graph webs, when the
/// approximants are empty at two consecutive depths with width covering the
/// base tokens, and weak head reduction of `t` runs into a cycle.
pub fn certified_trivial(t: &Term, web: &IWeb, fuel: Fuel) -> Result<bool> {
    if !web.is_free_graph() || fuel.width < web.sys().level(0).len() {
        return Ok(false);
    }
    if !interpret(t, web, fuel)?.is_empty() {
        return Ok(false);
    }
    if !interpret(t, web, Fuel { depth: fuel.depth + 1, ..fuel })?.is_empty() {
        return Ok(false);
    }
    Ok(whnf_loops(&t.to_db(), LOOP_STEPS))
}
